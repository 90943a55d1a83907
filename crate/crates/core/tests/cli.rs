use std::fs;
use std::path::Path;
use std::process::{Command, Output};

const BIN: &str = env!("CARGO_BIN_EXE_whichway");

fn run(args: &[&str]) -> Output {
    Command::new(BIN).args(args).env_remove("WHICHWAY_SEED").output().expect("binary runs")
}

fn regression_file() -> String {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/data/regression.json").display().to_string()
}

#[test]
fn report_writes_json_and_exits_zero() {
    let dir = tempfile::tempdir().unwrap();
    let input = dir.path().join("in.json");
    let out = dir.path().join("out.json");
    fs::write(
        &input,
        r#"{"s_q0": [0.6, 0.0, 0.8], "rho_d0": {"bloch": [1.0, 0.0, 0.0]},
            "unitaries": {"sqds": {"phi_d": 0.2, "entangling_phase": 0.9}}, "phi": 0.4}"#,
    )
    .unwrap();
    let o = run(&["report", "--in", input.to_str().unwrap(), "--out", out.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let v: serde_json::Value = serde_json::from_str(&fs::read_to_string(&out).unwrap()).unwrap();
    for key in ["P", "V0", "V", "D", "Q", "C", "dG", "slacks"] {
        assert!(v.get(key).is_some(), "missing {key}");
    }
    assert!((v["P"].as_f64().unwrap() - 0.6).abs() < 1e-15);
}

#[test]
fn report_exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let write = |name: &str, body: &str| {
        let p = dir.path().join(name);
        fs::write(&p, body).unwrap();
        p.display().to_string()
    };
    let schema = write(
        "schema.json",
        r#"{"s_q0": [0, 0, 1], "rho_d0": {"bloch": [0, 0, 1]}, "unitaries": {"sqds": {"phi_d": 0}}}"#,
    );
    let o = run(&["report", "--in", &schema]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("unitaries.sqds"));

    let unknown = write(
        "unknown.json",
        r#"{"s_q0": [0, 0, 1], "rho_d0": {"bloch": [0, 0, 1]}, "unitaries": {"sqds": {"phi_d": 0, "entangling_phase": 0}}, "extra": 1}"#,
    );
    assert_eq!(run(&["report", "--in", &unknown]).status.code(), Some(2));

    let unphysical = write(
        "bloch.json",
        r#"{"s_q0": [0.8, 0, 0.8], "rho_d0": {"bloch": [0, 0, 1]}, "unitaries": {"sqds": {"phi_d": 0, "entangling_phase": 0}}}"#,
    );
    assert_eq!(run(&["report", "--in", &unphysical]).status.code(), Some(3));

    assert_eq!(run(&["report", "--in", "/nonexistent/input.json"]).status.code(), Some(2));
    assert_eq!(run(&["bogus"]).status.code(), Some(2));
}

#[test]
fn sweeps_write_csv() {
    let dir = tempfile::tempdir().unwrap();
    let f3 = dir.path().join("fig3.csv");
    let o = run(&["sweep-fig3", "--grid", "6x5", "--out", f3.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0));
    let text = fs::read_to_string(&f3).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("P,Q,D2,V2,slack"));
    assert_eq!(lines.count(), 30);

    let o = run(&["sweep-fq", "--grid", "5x5"]);
    assert_eq!(o.status.code(), Some(0));
    let text = String::from_utf8(o.stdout).unwrap();
    assert!(text.starts_with("P_Q,Q_D,f_Q,branch\n"));
    assert_eq!(text.lines().count(), 26);
    assert!(text.contains("P_Q>=R_Q") && text.contains("R_Q>P_Q"));

    assert_eq!(run(&["sweep-fq", "--grid", "1x5"]).status.code(), Some(2));
    assert_eq!(run(&["sweep-fq", "--s-norm", "1.5"]).status.code(), Some(2));
}

#[test]
fn channel_is_seeded() {
    let args = ["channel", "--w-plus", "0.6", "--epsilon", "0.3", "--trials", "20000"];
    let a = run(&args);
    let b = run(&args);
    assert_eq!(a.status.code(), Some(0));
    assert_eq!(a.stdout, b.stdout);
    let with_seed = run(&[&args[..], &["--seed", "99"]].concat());
    assert_ne!(a.stdout, with_seed.stdout);
    let via_env = Command::new(BIN).args(args).env("WHICHWAY_SEED", "99").output().unwrap();
    assert_eq!(via_env.stdout, with_seed.stdout);
    assert_eq!(run(&["channel", "--w-plus", "2", "--epsilon", "0.1"]).status.code(), Some(2));
}

#[test]
fn verify_random_and_replay() {
    let o = run(&["verify", "--samples", "200", "--seed", "4"]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stdout));
    let v: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    assert_eq!(v["passed"], true);
    assert_eq!(v["suites"]["sqds"]["cases"], 200);

    let file = regression_file();
    let a = run(&["verify", "--in", &file]);
    assert_eq!(a.status.code(), Some(0), "{}", String::from_utf8_lossy(&a.stdout));
    assert_eq!(a.stdout, run(&["verify", "--in", &file]).stdout);

    assert_eq!(run(&["verify", "--samples", "0"]).status.code(), Some(2));
}

#[test]
fn verify_flags_bad_case() {
    let dir = tempfile::tempdir().unwrap();
    let p = dir.path().join("bad.json");
    fs::write(&p, r#"{"cases": [{"suite": "channel", "config": {"w_plus": 1.5, "epsilon": 0.1}}]}"#).unwrap();
    let o = run(&["verify", "--in", p.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(1));
    let v: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    assert_eq!(v["failures"][0]["check"], "config_valid");
    assert_eq!(v["failures"][0]["suite"], "channel");
}
