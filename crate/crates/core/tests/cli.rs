use std::fs;
use std::path::Path;
use std::process::{Command, Output};

const HEADER: &str = "B,C,eta,regime,p_M,p_F,B_F,B_M,B_R,theta_th,theta_tilde,profit_macro,profit_femto,cs_dual,cs_bench,welfare_dual,welfare_bench";

fn run(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_femtomarket"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn code(args: &[&str]) -> i32 {
    run(args).status.code().expect("exit code")
}

fn stdout(args: &[&str]) -> String {
    let out = run(args);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    String::from_utf8(out.stdout).unwrap()
}

#[test]
fn benchmark_rows() {
    let text = stdout(&["benchmark", "--B", "1"]);
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("B,p_M_bench,profit,served_fraction"));
    let row: Vec<f64> = lines.next().unwrap().split(',').map(|f| f.parse().unwrap()).collect();
    assert!((row[1] - 0.3178).abs() < 1e-4);

    let text = stdout(&["benchmark", "--B", "0"]);
    assert_eq!(text.lines().nth(1), Some("0,1,0,0"));
}

#[test]
fn exit_codes() {
    assert_eq!(code(&["benchmark", "--B", "-1"]), 2);
    assert_eq!(code(&["equilibrium", "--B", "1.1", "--C", "0.2", "--eta", "0.5"]), 2);
    assert_eq!(code(&["sweep", "--param", "B", "--from", "2", "--to", "1"]), 2);
    assert_eq!(code(&["nonsense"]), 2);
    assert_eq!(code(&["verify", "--samples", "0"]), 0);
    assert_eq!(code(&["boundary", "--from", "1", "--to", "2"]), 3);
    assert_eq!(code(&["benchmark", "--out", "/nonexistent-dir/x.csv"]), 4);
    assert_eq!(code(&["--config", "/nonexistent-dir/c.toml", "benchmark"]), 4);
}

#[test]
fn equilibrium_schema() {
    let text = stdout(&["equilibrium", "--B", "0.1"]);
    assert!(text.ends_with('\n'));
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines.len(), 2);
    assert_eq!(lines[0], HEADER);
    let fields: Vec<&str> = lines[1].split(',').collect();
    assert_eq!(fields.len(), 17);
    assert_eq!(fields[3], "DualService");
    for (i, f) in fields.iter().enumerate().filter(|(i, _)| *i != 3) {
        let digits = f.trim_start_matches('-').split('e').next().unwrap().replace('.', "");
        let significant = digits.trim_start_matches('0').len();
        assert!(significant <= 10, "column {i}: {f}");
        f.parse::<f64>().unwrap();
    }
}

#[test]
fn sweep_is_reproducible_and_svg_is_separate() {
    let dir = tempfile::tempdir().unwrap();
    let a = dir.path().join("a.csv");
    let b = dir.path().join("b.csv");
    let args = |p: &Path| {
        vec![
            "sweep".to_string(),
            "--param".into(),
            "eta".into(),
            "--from".into(),
            "0.2".into(),
            "--to".into(),
            "1".into(),
            "--steps".into(),
            "5".into(),
            "--out".into(),
            p.to_str().unwrap().into(),
        ]
    };
    let a_args = args(&a);
    let mut b_args = args(&b);
    b_args.push("--svg".into());
    assert_eq!(code(&a_args.iter().map(String::as_str).collect::<Vec<_>>()), 0);
    assert_eq!(code(&b_args.iter().map(String::as_str).collect::<Vec<_>>()), 0);
    let (ta, tb) = (fs::read(&a).unwrap(), fs::read(&b).unwrap());
    assert_eq!(ta, tb);
    let text = String::from_utf8(ta).unwrap();
    assert_eq!(text.lines().count(), 6);
    assert_eq!(text.lines().nth(1).unwrap().split(',').nth(2), Some("0.2"));
    assert_eq!(text.lines().nth(5).unwrap().split(',').nth(2), Some("1"));
    let svg = fs::read_to_string(dir.path().join("b.svg")).unwrap();
    assert!(svg.starts_with("<svg"));
    assert!(!dir.path().join("a.svg").exists());
}

#[test]
fn config_file_with_flag_override() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("run.toml");
    fs::write(&cfg, "B = 2.0\neta = 0.5\n").unwrap();
    let cfg = cfg.to_str().unwrap();

    let from_file = stdout(&["--config", cfg, "equilibrium"]);
    let row: Vec<&str> = from_file.lines().nth(1).unwrap().split(',').collect();
    assert_eq!((row[0], row[2]), ("2", "0.5"));

    let overridden = stdout(&["--config", cfg, "equilibrium", "--B", "1"]);
    let row: Vec<&str> = overridden.lines().nth(1).unwrap().split(',').collect();
    assert_eq!((row[0], row[2]), ("1", "0.5"));

    fs::write(dir.path().join("bad.toml"), "capacity = 1\n").unwrap();
    assert_eq!(code(&["--config", dir.path().join("bad.toml").to_str().unwrap(), "benchmark"]), 2);
}

#[test]
fn verify_passes() {
    let out = stdout(&["verify", "--samples", "40", "--seed", "3"]);
    assert!(out.contains("failures=0"));
}
