use std::process::Command;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_gsm-gas"))
}

#[test]
fn ratio_writes_the_table() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("ratio.csv");
    let status = bin()
        .args(["ratio", "--ntx", "16", "--k", "1,8", "--l", "2,16", "--out"])
        .arg(&path)
        .status()
        .unwrap();
    assert!(status.success());
    let text = std::fs::read_to_string(&path).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("n_tx,k,l,q,f,g,ratio"));
    assert!(text.contains("\n16,1,2,16,65536,32,2048\n"));
    assert_eq!(text.lines().count(), 5);
}

#[test]
fn run_writes_three_outputs_and_is_deterministic() {
    let dirs = [tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap()];
    for d in &dirs {
        let out = bin()
            .args(["run", "--trials", "5", "--seed", "11", "--out"])
            .arg(d.path())
            .output()
            .unwrap();
        assert!(
            out.status.success(),
            "{}",
            String::from_utf8_lossy(&out.stderr)
        );
    }
    for f in ["trace.csv", "trials.csv", "summary.json"] {
        let a = std::fs::read(dirs[0].path().join(f)).unwrap();
        assert!(!a.is_empty());
        assert_eq!(a, std::fs::read(dirs[1].path().join(f)).unwrap(), "{f}");
    }
    let trace = std::fs::read_to_string(dirs[0].path().join("trace.csv")).unwrap();
    assert!(trace
        .starts_with("trial,i,L_i,y_i,measured_value,improved,cumulative_qcqd,cumulative_qccd\n"));
}

#[test]
fn run_reads_a_config_file() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("exp.cfg");
    std::fs::write(&cfg, "# small\ntrials = 3\ntarget = true\nseed = 4\n").unwrap();
    let out_dir = dir.path().join("out");
    let out = bin()
        .args(["run", "--config"])
        .arg(&cfg)
        .arg("--out")
        .arg(&out_dir)
        .output()
        .unwrap();
    assert!(out.status.success());
    let trials = std::fs::read_to_string(out_dir.join("trials.csv")).unwrap();
    assert_eq!(trials.lines().count(), 4);
    let summary = std::fs::read_to_string(out_dir.join("summary.json")).unwrap();
    assert!(summary.contains("\"optimum_found\": 3"));
}

#[test]
fn bad_config_exits_with_code_two() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("bad.cfg");
    std::fs::write(&cfg, "trials = 3\nnot_a_key = 1\n").unwrap();
    let out = bin().args(["run", "--config"]).arg(&cfg).output().unwrap();
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("line 2"));

    let out = bin().args(["ratio", "--k", "9..3"]).output().unwrap();
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn fast_validation_passes() {
    let out = bin()
        .args(["validate", "--level", "fast"])
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(0));
    let text = String::from_utf8_lossy(&out.stdout);
    assert_eq!(text.lines().filter(|l| l.starts_with("PASS")).count(), 7);
}
