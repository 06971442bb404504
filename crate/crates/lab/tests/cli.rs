use std::fs;
use std::process::Command;

fn run(args: &[&str], config: &str) -> (i32, String, String, tempfile::TempDir) {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("run.toml");
    fs::write(&cfg, config).unwrap();
    let out = dir.path().join("out");
    let o = Command::new(env!("CARGO_BIN_EXE_prandtl-lab"))
        .args(args)
        .arg("--config")
        .arg(&cfg)
        .arg("--out")
        .arg(&out)
        .output()
        .unwrap();
    (
        o.status.code().unwrap(),
        String::from_utf8(o.stdout).unwrap(),
        String::from_utf8(o.stderr).unwrap(),
        dir,
    )
}

#[test]
fn check_compat_exits_zero_and_prints_the_table() {
    let (code, out, _, dir) = run(&["check-compat"], "[grid]\nny = 2001\ny_max = 20.0\n");
    assert_eq!(code, 0);
    assert!(out.contains("status: completed"));
    assert!(out.contains("compatible through order 5"), "{out}");
    assert!(dir.path().join("out/compat.csv").exists());
}

#[test]
fn weight_violation_exits_three() {
    let (code, _, err, _) = run(&["unsteady"], "[grid]\n[weights]\ngamma = 2.0\nsigma = 4.0\n[unsteady]\n");
    assert_eq!(code, 3);
    assert!(err.contains("σ ≤ 2γ−1 violated"), "{err}");
}

#[test]
fn parse_error_exits_three() {
    let (code, _, err, _) = run(&["steady"], "[grid\n");
    assert_eq!(code, 3);
    assert!(err.contains("line 1"), "{err}");
}

#[test]
fn blow_up_exits_two() {
    let cfg = "[grid]\nnx = 16\nny = 128\n[weights]\n[unsteady]\ndt = 0.5\nt_final = 1.0\n";
    let (code, out, _, _) = run(&["unsteady", "--quiet"], cfg);
    assert_eq!(code, 2);
    assert!(out.is_empty());
}

#[test]
fn convergence_with_two_levels_exits_three() {
    let (code, _, err, _) = run(&["convergence", "--axis", "h", "--levels", "2"], "[grid]\nny = 50\ny_max = 10.0\n");
    assert_eq!(code, 3);
    assert!(err.contains("at least 3 levels"), "{err}");
}

#[test]
fn inequalities_honour_the_seed() {
    let cfg = "[grid]\nnx = 8\nny = 201\ny_max = 40.0\nstretch = 1.0\n[inequalities]\nsamples = 5\nkinds = [\"trace\"]\n";
    let (_, _, _, a) = run(&["inequalities", "--seed", "1"], cfg);
    let (_, _, _, b) = run(&["inequalities", "--seed", "1"], cfg);
    let (_, _, _, c) = run(&["inequalities", "--seed", "2"], cfg);
    let read = |d: &tempfile::TempDir| fs::read_to_string(d.path().join("out/inequality.csv")).unwrap();
    assert_eq!(read(&a), read(&b));
    assert_ne!(read(&a), read(&c));
}
