use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_grnn-qos"))
}

fn scenario(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../scenarios").join(name)
}

fn ok(out: Output) -> Output {
    assert!(
        out.status.success(),
        "exit {:?}\nstdout:\n{}\nstderr:\n{}",
        out.status,
        String::from_utf8_lossy(&out.stdout),
        String::from_utf8_lossy(&out.stderr)
    );
    out
}

fn files(dir: &Path) -> Vec<(String, Vec<u8>)> {
    let mut out = Vec::new();
    let mut stack = vec![dir.to_path_buf()];
    while let Some(d) = stack.pop() {
        for e in fs::read_dir(&d).unwrap() {
            let p = e.unwrap().path();
            if p.is_dir() {
                stack.push(p);
            } else if !p.file_name().unwrap().to_string_lossy().contains("timing") {
                out.push((p.strip_prefix(dir).unwrap().display().to_string(), fs::read(&p).unwrap()));
            }
        }
    }
    out.sort();
    out
}

#[test]
fn run_writes_reproducible_outputs() {
    let tmp = tempfile::tempdir().unwrap();
    let (a, b) = (tmp.path().join("a"), tmp.path().join("b"));
    for dir in [&a, &b] {
        ok(bin().args(["run", "-c"]).arg(scenario("tracking_q3.toml")).arg("-o").arg(dir).output().unwrap());
    }
    for f in ["log.csv", "metrics.csv", "plot.csv", "timing.csv", "profile_final_0.csv"] {
        assert!(a.join(f).is_file(), "missing {f}");
    }
    assert_eq!(files(&a), files(&b));
    let log = fs::read_to_string(a.join("log.csv")).unwrap();
    assert_eq!(log.lines().count(), 41);
}

#[test]
fn seed_override_changes_the_run() {
    let tmp = tempfile::tempdir().unwrap();
    let (a, b) = (tmp.path().join("a"), tmp.path().join("b"));
    ok(bin().args(["run", "-c"]).arg(scenario("tracking_q2.toml")).arg("-o").arg(&a).output().unwrap());
    ok(bin().args(["run", "--seed", "7", "-c"]).arg(scenario("tracking_q2.toml")).arg("-o").arg(&b).output().unwrap());
    assert_ne!(fs::read(a.join("log.csv")).unwrap(), fs::read(b.join("log.csv")).unwrap());
}

#[test]
fn compare_writes_one_row_per_variant() {
    let tmp = tempfile::tempdir().unwrap();
    ok(bin().args(["compare", "-c"]).arg(scenario("surge.toml")).arg("-o").arg(tmp.path()).output().unwrap());
    let table = fs::read_to_string(tmp.path().join("comparison.csv")).unwrap();
    let labels: Vec<&str> = table.lines().skip(1).map(|l| l.split(',').next().unwrap()).collect();
    assert_eq!(labels, ["grnn_S16", "grnn_S31", "grnn_S46", "knn_k5", "grnn_unbounded"]);
    assert!(tmp.path().join("comparison_timing.csv").is_file());
    assert!(tmp.path().join("grnn_S31").join("log.csv").is_file());
}

#[test]
fn seed_generates_a_loadable_profile() {
    let tmp = tempfile::tempdir().unwrap();
    let out = tmp.path().join("seed.csv");
    ok(bin()
        .args(["seed", "--records", "10", "-c"])
        .arg(scenario("tracking_q1.toml"))
        .arg("-o")
        .arg(&out)
        .output()
        .unwrap());
    let text = fs::read_to_string(&out).unwrap();
    let profile = grnn_qos::ServiceProfile::load(&text).unwrap();
    assert_eq!(profile.len(), 10);
    assert_eq!(profile.links(), 2);
}

#[test]
fn quick_verify_passes() {
    let out = ok(bin().args(["verify", "--scale-down", "50"]).output().unwrap());
    let text = String::from_utf8(out.stdout).unwrap();
    assert!(text.lines().filter(|l| l.starts_with("[PASS]")).count() >= 5, "{text}");
    assert!(!text.contains("[FAIL]"));
}

#[test]
fn unknown_config_keys_are_rejected() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = tmp.path().join("bad.toml");
    let text = fs::read_to_string(scenario("tracking_q1.toml")).unwrap();
    fs::write(&cfg, format!("sigma = 3.0\n{text}")).unwrap();
    let out = bin().args(["run", "-c"]).arg(&cfg).arg("-o").arg(tmp.path().join("o")).output().unwrap();
    assert!(!out.status.success());
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("sigma"), "{err}");
}

#[test]
fn missing_trace_names_the_file() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = tmp.path().join("t.toml");
    fs::copy(scenario("tracking_q1.toml"), &cfg).unwrap();
    let out = bin().args(["run", "-c"]).arg(&cfg).arg("-o").arg(tmp.path().join("o")).output().unwrap();
    assert!(!out.status.success());
    assert!(String::from_utf8_lossy(&out.stderr).contains("step_rates.csv"));
}
