//! Object names shared by `expand`, `hecke`, `mult-hecke` and `trace`.

use std::str::FromStr;

use heckelift::forms::{delta_series, eisenstein, eta_quotient_series, faber_j, j_series, theta_kohnen, EtaQuotient};
use heckelift::genus1::{Genus1Config, Genus1Level, GENUS_ONE_LEVELS};
use heckelift::qseries::exp;
use heckelift::zagier::{build_basis, is_admissible};
use heckelift::{Error, RationalSeries, Result};

#[derive(Clone, Debug, PartialEq)]
pub enum Object {
    J,
    Delta,
    Eisenstein(u32),
    Theta,
    FaberJ(u32),
    Eta(String),
    Fd(u32),
    G0(i64),
    Gm1(i64),
    Haupt(i64),
    Plus(i64, u32),
    Minus(i64, u32),
    Sharp(i64, u32),
}

fn level_arg(s: &str) -> std::result::Result<i64, String> {
    let n: i64 = s.trim().parse().map_err(|_| format!("bad level {s:?}"))?;
    if GENUS_ONE_LEVELS.contains(&n) {
        Ok(n)
    } else {
        Err(format!("level {n} is not one of 11, 17, 19"))
    }
}

fn level_and_index(s: &str, min: u32) -> std::result::Result<(i64, u32), String> {
    let (n, m) = s.split_once(',').ok_or_else(|| format!("expected <N>,<m>, got {s:?}"))?;
    let m: u32 = m.trim().parse().map_err(|_| format!("bad index {m:?}"))?;
    if m < min {
        return Err(format!("index must be at least {min}, got {m}"));
    }
    Ok((level_arg(n)?, m))
}

impl FromStr for Object {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        let (head, arg) = match s.split_once(':') {
            Some((h, a)) => (h, Some(a)),
            None => (s, None),
        };
        let need = |what: &str| arg.ok_or_else(|| format!("{head} needs an argument: {head}:{what}"));
        match head {
            "j" => Ok(Object::J),
            "delta" => Ok(Object::Delta),
            "E2" => Ok(Object::Eisenstein(2)),
            "E4" => Ok(Object::Eisenstein(4)),
            "E6" => Ok(Object::Eisenstein(6)),
            "theta" => Ok(Object::Theta),
            "Jn" => {
                let n: u32 = need("<n>")?.parse().map_err(|_| format!("bad index in {s:?}"))?;
                if n == 0 {
                    return Err("Jn needs n >= 1".into());
                }
                Ok(Object::FaberJ(n))
            }
            "eta" => {
                let spec = need("<spec>")?;
                EtaQuotient::parse(spec).map_err(|e| e.to_string())?;
                Ok(Object::Eta(spec.to_string()))
            }
            "fd" => {
                let d: i64 = need("<d>")?.parse().map_err(|_| format!("bad index in {s:?}"))?;
                if d < 0 || !is_admissible(d) {
                    return Err(format!("fd:{d}: d must be 0 or 3 mod 4"));
                }
                Ok(Object::Fd(d as u32))
            }
            "g0" => Ok(Object::G0(level_arg(need("<N>")?)?)),
            "gm1" => Ok(Object::Gm1(level_arg(need("<N>")?)?)),
            "haupt" => Ok(Object::Haupt(level_arg(need("<N>")?)?)),
            "fplus" => level_and_index(need("<N>,<m>")?, 1).map(|(n, m)| Object::Plus(n, m)),
            "fminus" => level_and_index(need("<N>,<m>")?, 2).map(|(n, m)| Object::Minus(n, m)),
            "fsharp" => level_and_index(need("<N>,<m>")?, 2).map(|(n, m)| Object::Sharp(n, m)),
            _ => Err(format!("unknown object {s:?}")),
        }
    }
}

/// Smallest series length used when a genus-one level is built: the Fricke
/// checks run at the build need this many terms.
pub const MIN_LEVEL_TRUNC: i64 = 700;

/// Builds a genus-one level and runs `f` on it, rebuilding with more terms
/// when `f` reports that the series are too short.
pub fn with_level<T>(config: &Genus1Config, n: i64, trunc: i64, mmax: u32, f: impl Fn(&Genus1Level) -> Result<T>) -> Result<T> {
    let mut trunc = trunc.max(MIN_LEVEL_TRUNC);
    for _ in 0..4 {
        let lvl = Genus1Level::build(config, n, trunc, mmax.max(2))?;
        match f(&lvl) {
            Err(Error::InsufficientTruncation { needed }) if needed >= trunc => trunc = needed + 64,
            other => return other,
        }
    }
    Err(Error::InsufficientTruncation { needed: trunc })
}

impl Object {
    /// The genus-one level, if any.
    pub fn level(&self) -> i64 {
        match self {
            Object::G0(n) | Object::Gm1(n) | Object::Haupt(n) => *n,
            Object::Plus(n, _) | Object::Minus(n, _) | Object::Sharp(n, _) => *n,
            _ => 1,
        }
    }

    /// The q-expansion known below `q^order`.
    pub fn series(&self, order: i64, config: &Genus1Config) -> Result<RationalSeries> {
        let s = match self {
            Object::J => j_series(order),
            Object::Delta => delta_series(order),
            Object::Eisenstein(k) => eisenstein(*k, order)?,
            Object::Theta => theta_kohnen(order),
            Object::FaberJ(n) => faber_j(*n, order),
            Object::Eta(spec) => eta_quotient_series(&EtaQuotient::parse(spec)?, exp(order)),
            Object::Fd(d) => build_basis(*d, order)?.form(*d)?.to_zseries(order).to_qseries(),
            _ => {
                let m = match self {
                    Object::Plus(_, m) | Object::Minus(_, m) | Object::Sharp(_, m) => *m,
                    _ => 1,
                };
                let obj = self.clone();
                return with_level(config, self.level(), order, m, move |lvl| {
                    let z = match &obj {
                        Object::G0(_) => return Ok(lvl.g0().truncate_int(order)),
                        Object::Gm1(_) => lvl.cusp.clone(),
                        Object::Haupt(_) => lvl.plus_basis(1)?.clone(),
                        Object::Plus(_, m) => lvl.plus_basis(*m)?.clone(),
                        Object::Minus(_, m) => lvl.minus_basis(*m)?.clone(),
                        Object::Sharp(_, m) => lvl.sharp_basis(*m)?.clone(),
                        _ => unreachable!("level-one objects handled above"),
                    };
                    Ok(z.truncate(order).to_qseries())
                });
            }
        };
        Ok(s.truncate_int(order))
    }

    /// Weight of the form, for the Hecke verbs.
    pub fn weight(&self) -> Option<i32> {
        match self {
            Object::J | Object::FaberJ(_) | Object::Haupt(_) | Object::Plus(..) | Object::Minus(..) | Object::Sharp(..) => Some(0),
            Object::Delta => Some(12),
            Object::Eisenstein(k) => Some(*k as i32),
            Object::G0(_) | Object::Gm1(_) => Some(2),
            Object::Eta(spec) => {
                let s: i32 = EtaQuotient::parse(spec).ok()?.factors.iter().map(|&(_, r)| r).sum();
                (s % 2 == 0).then_some(s / 2)
            }
            Object::Theta | Object::Fd(_) => None,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parsing() {
        assert_eq!("fd:3".parse::<Object>(), Ok(Object::Fd(3)));
        assert!("fd:1".parse::<Object>().is_err());
        assert!("fplus:13,2".parse::<Object>().is_err());
        assert_eq!("fsharp:17,4".parse::<Object>(), Ok(Object::Sharp(17, 4)));
        assert!("fminus:11,1".parse::<Object>().is_err());
        assert_eq!("Jn:3".parse::<Object>(), Ok(Object::FaberJ(3)));
        assert!("eta:1^2,11^x".parse::<Object>().is_err());
        assert!("nonsense".parse::<Object>().is_err());
    }
}
