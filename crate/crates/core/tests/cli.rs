use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn qglab(args: &[&str], dir: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_qglab")).args(args).current_dir(dir).env_remove("QGLAB_OUT").output().unwrap()
}

fn write(dir: &Path, name: &str, text: &str) -> String {
    fs::write(dir.join(name), text).unwrap();
    name.to_string()
}

fn manifest_value(text: &str, key: &str) -> Option<String> {
    text.lines().find_map(|l| l.strip_prefix(key).and_then(|r| r.strip_prefix(" = ")).map(str::to_string))
}

#[test]
fn simulate_writes_csv_snapshots_and_a_resumable_manifest() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write(tmp.path(), "sim.cfg", "n = 32\nA = 10\nkappa = 1/2\ninit = bump\nwidth = 0.6\nt_end = 0.2\ndt = 0.05\nsnapshot_count = 2\n");
    let out = qglab(&["simulate", "--config", &cfg, "--out", "run1", "--seed", "3"], tmp.path());
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));

    let run1 = tmp.path().join("run1");
    let mut rdr = csv::Reader::from_path(run1.join("diagnostics.csv")).unwrap();
    assert_eq!(rdr.headers().unwrap().iter().collect::<Vec<_>>(), ["t", "l2", "hs", "hs_minus1", "dt", "max_u"]);
    let l2: Vec<f64> = rdr.records().map(|r| r.unwrap()[1].parse().unwrap()).collect();
    assert!(l2.len() >= 2 && l2.windows(2).all(|w| w[1] <= w[0]));
    assert!(run1.join("state_0000.qgf").exists());

    let manifest = fs::read_to_string(run1.join("manifest.txt")).unwrap();
    assert_eq!(manifest_value(&manifest, "seed").as_deref(), Some("3"));
    let resumed = qglab(&["--resume", "run1/manifest.txt", "--out", "run2"], tmp.path());
    assert!(resumed.status.success(), "{}", String::from_utf8_lossy(&resumed.stderr));
    let again = fs::read_to_string(tmp.path().join("run2/manifest.txt")).unwrap();
    assert_eq!(manifest_value(&manifest, "config_hash"), manifest_value(&again, "config_hash"));
    assert_eq!(
        fs::read(run1.join("diagnostics.csv")).unwrap(),
        fs::read(tmp.path().join("run2/diagnostics.csv")).unwrap()
    );
}

#[test]
fn validation_errors_exit_with_code_two() {
    let tmp = tempfile::tempdir().unwrap();
    let bad_key = write(tmp.path(), "bad.cfg", "n = 32\nnot_a_key = 1\n");
    assert_eq!(qglab(&["simulate", "--config", &bad_key], tmp.path()).status.code(), Some(2));

    let outside = write(tmp.path(), "window.cfg", "n = 32\nalpha = 1\np = 3\ns = 2\nt_end = 1\n");
    let out = qglab(&["picard", "--config", &outside], tmp.path());
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("index window"));

    assert_eq!(qglab(&["no-such-command", "--config", &bad_key], tmp.path()).status.code(), Some(2));
}

#[test]
fn tampered_manifest_is_rejected() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write(tmp.path(), "n.cfg", "n = 16\ninit = bump\nt_end = 0.05\ndt = 0.05\n");
    assert!(qglab(&["simulate", "--config", &cfg, "--out", "r"], tmp.path()).status.success());
    let path = tmp.path().join("r/manifest.txt");
    let text = fs::read_to_string(&path).unwrap().replace("param.n = 16", "param.n = 32");
    fs::write(&path, text).unwrap();
    assert_eq!(qglab(&["--resume", "r/manifest.txt", "--out", "r2"], tmp.path()).status.code(), Some(2));
}

#[test]
fn blow_up_exits_with_code_three() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write(tmp.path(), "b.cfg", "n = 32\nkappa = 1/1000\ninit = bump\namplitude = 1e8\nt_end = 1\ndt = 0.1\n");
    let out = qglab(&["simulate", "--config", &cfg], tmp.path());
    assert_eq!(out.status.code(), Some(3), "{}", String::from_utf8_lossy(&out.stderr));
    assert!(String::from_utf8_lossy(&out.stderr).contains("blow-up"));
}
