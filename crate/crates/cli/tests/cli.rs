use std::io::Write;
use std::process::{Command, Output, Stdio};

fn run(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_heckelift")).args(args).output().expect("binary runs")
}

fn run_with_stdin(args: &[&str], input: &[u8]) -> Output {
    let mut child = Command::new(env!("CARGO_BIN_EXE_heckelift"))
        .args(args)
        .stdin(Stdio::piped())
        .stdout(Stdio::piped())
        .stderr(Stdio::piped())
        .spawn()
        .expect("binary runs");
    child.stdin.take().unwrap().write_all(input).unwrap();
    child.wait_with_output().unwrap()
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

#[test]
fn j_expansion_as_text() {
    let o = run(&["expand", "--object", "j", "--order", "3", "--format", "text"]);
    assert_eq!(o.status.code(), Some(0));
    assert_eq!(stdout(&o).trim_end(), "q^-1 + 744 + 196884 q + 21493760 q^2");
}

#[test]
fn inadmissible_index_is_a_usage_error() {
    let o = run(&["expand", "--object", "fd:1"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(o.stdout.is_empty());
    assert!(!o.stderr.is_empty());
}

#[test]
fn product_hecke_verdict() {
    let o = run(&["verify", "thm31", "--delta", "5", "--d", "3", "--p", "2", "--order", "15"]);
    assert_eq!(o.status.code(), Some(0));
    let text = stdout(&o);
    assert_eq!(text.lines().count(), 1);
    let v: serde_json::Value = serde_json::from_str(text.trim()).unwrap();
    assert_eq!(v["pass"], true);
    assert!(v["first_mismatch"].is_null());
    assert!(v.get("runtime_ms").is_none());
}

#[test]
fn missing_parameter_and_bad_prime_are_usage_errors() {
    assert_eq!(run(&["verify", "thm31", "--delta", "5", "--d", "3"]).status.code(), Some(2));
    assert_eq!(run(&["verify", "thm31", "--delta", "5", "--d", "3", "--p", "5"]).status.code(), Some(2));
    assert_eq!(run(&["expand", "--object", "nonsense"]).status.code(), Some(2));
    assert_eq!(run(&["frobnicate"]).status.code(), Some(2));
}

#[test]
fn bad_config_is_a_usage_error() {
    let dir = std::env::temp_dir().join(format!("heckelift-cli-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    let path = dir.join("bad.conf");
    std::fs::write(&path, "curve.13 = 0 0 0 0 0\n").unwrap();
    let o = run(&["expand", "--object", "j", "--config", path.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn output_is_deterministic() {
    let args = ["trace", "--delta", "5", "--d", "7", "--f", "Jn:2"];
    let a = run(&args);
    let b = run(&args);
    assert_eq!(a.status.code(), Some(0));
    assert_eq!(a.stdout, b.stdout);
    let v: serde_json::Value = serde_json::from_str(stdout(&a).trim()).unwrap();
    assert_eq!(v["value_over_sqrt_delta"], 6223486113546240i64);
}

#[test]
fn hecke_from_stdin_matches_named_object() {
    let delta = run(&["expand", "--object", "delta", "--order", "12"]);
    let piped = run_with_stdin(&["hecke", "--input", "-", "--k", "12", "--p", "2"], &delta.stdout);
    let named = run(&["hecke", "--object", "delta", "--p", "2", "--order", "12"]);
    assert_eq!(piped.status.code(), Some(0));
    assert_eq!(piped.stdout, named.stdout);
    // Delta is an eigenform with tau(2) = -24.
    let text = run(&["hecke", "--object", "delta", "--p", "2", "--order", "6", "--format", "text"]);
    assert_eq!(stdout(&text).trim_end(), "-24 q + 576 q^2");
}

#[test]
fn untwisted_product_of_f3() {
    let o = run(&["borcherds", "--delta", "1", "--d", "3", "--order", "3", "--format", "text"]);
    assert_eq!(stdout(&o).trim_end(), "q^(-1/3) + 248 q^(2/3) + 4124 q^(5/3)");
    assert_eq!(run(&["borcherds", "--delta", "5", "--r", "0", "--d", "3"]).status.code(), Some(2));
}

#[test]
fn class_number_table_is_csv() {
    let o = run(&["table", "class-numbers", "--delta", "5", "--dmax", "8"]);
    assert_eq!(o.status.code(), Some(0));
    let text = stdout(&o);
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("N,delta,d,plus,value,classes"));
    assert_eq!(lines.next(), Some("1,5,3,false,0,2"));
    assert_eq!(lines.count(), 3);
}

#[test]
fn plain_stabilizer_is_rejected_at_level_11() {
    let base = ["verify", "r2", "--N", "11", "--delta", "1", "--d", "44"];
    assert_eq!(run(&base).status.code(), Some(0));
    let plain: Vec<&str> = base.iter().copied().chain(["--stabilizer", "plain"]).collect();
    assert_eq!(run(&plain).status.code(), Some(1));
}

#[test]
fn genus_one_expansion() {
    let o = run(&["expand", "--object", "fplus:11,2", "--order", "4", "--format", "text"]);
    assert_eq!(stdout(&o).trim_end(), "q^-2 + 92 q + 521 q^2 + 2068 q^3");
}
