use std::process::{Command, Output};

fn qmeixner(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_qmeixner"))
        .args(args)
        .env_remove("QMEIXNER_OUT_DIR")
        .output()
        .expect("binary runs")
}

fn stdout(out: &Output) -> String {
    String::from_utf8(out.stdout.clone()).unwrap()
}

fn csv_rows(text: &str) -> Vec<Vec<f64>> {
    text.lines().skip(1).map(|l| l.split(',').map(|c| c.parse().unwrap()).collect()).collect()
}

#[test]
fn free_nu_measure_is_symmetric() {
    let out = qmeixner(&[
        "measure", "--kind", "nu", "--q", "0", "--theta", "0", "--tau", "0", "--x", "0", "--t", "1", "--n", "8",
        "--format", "csv",
    ]);
    assert!(out.status.success());
    let text = stdout(&out);
    assert_eq!(text.lines().next(), Some("node,weight"));
    let rows = csv_rows(&text);
    assert_eq!(rows.len(), 8);
    for i in 0..8 {
        assert!((rows[i][0] + rows[7 - i][0]).abs() < 1e-14);
        assert!((rows[i][1] - rows[7 - i][1]).abs() < 1e-14);
    }
}

#[test]
fn transition_measure_mass_and_mean() {
    let out = qmeixner(&[
        "measure",
        "--kind",
        "transition",
        "--q",
        "0.5",
        "--theta",
        "0.3",
        "--tau",
        "0.2",
        "--x",
        "0.4",
        "--s",
        "0.2",
        "--t",
        "1",
        "--n",
        "16",
    ]);
    assert!(out.status.success());
    let rows = csv_rows(&stdout(&out));
    let mass: f64 = rows.iter().map(|r| r[1]).sum();
    let mean: f64 = rows.iter().map(|r| r[0] * r[1]).sum();
    assert!((mass - 1.0).abs() < 1e-12);
    assert!((mean - 0.4).abs() < 1e-10);
}

#[test]
fn measure_json_round_trips() {
    let out = qmeixner(&["measure", "--n", "4", "--format", "json"]);
    let v: serde_json::Value = serde_json::from_str(&stdout(&out)).unwrap();
    assert_eq!(v["nodes"].as_array().unwrap().len(), 4);
    assert_eq!(v["weights"].as_array().unwrap().len(), 4);
}

#[test]
fn generator_of_square() {
    for params in [["--q", "0.5"], ["--q", "-0.7"]] {
        let mut args = vec!["generator", "--poly", "0,0,1", "--x", "-1.5", "--t", "0.3"];
        args.extend(params);
        let out = qmeixner(&args);
        assert!(out.status.success());
        let rows = csv_rows(&stdout(&out));
        assert!((rows[0][2] - 1.0).abs() < 1e-10);
    }
}

#[test]
fn generator_builtin() {
    let out = qmeixner(&["generator", "--builtin", "cauchy", "--format", "json"]);
    assert!(out.status.success());
    let v: serde_json::Value = serde_json::from_str(&stdout(&out)).unwrap();
    assert!(v["value"].as_f64().unwrap().abs() <= 1.0);
}

#[test]
fn free_moments() {
    let out = qmeixner(&[
        "moments", "--kind", "nu", "--q", "0", "--theta", "0.5", "--tau", "0.5", "--t", "0.5", "--kmax", "4",
    ]);
    assert!(out.status.success());
    let rows = csv_rows(&stdout(&out));
    assert_eq!(rows.len(), 5);
    assert!((rows[1][1] - 0.5).abs() < 1e-12);
    assert!((rows[2][2] - 1.0).abs() < 1e-12);
    assert!((rows[4][2] - 2.0).abs() < 1e-12);
}

#[test]
fn simulate_is_deterministic() {
    let args = ["simulate", "--seed", "42", "--paths", "50", "--times", "0,0.5,1"];
    let a = qmeixner(&args);
    let b = qmeixner(&args);
    assert!(a.status.success());
    assert_eq!(a.stdout, b.stdout);
    let text = stdout(&a);
    assert_eq!(text.lines().next(), Some("path_id,time,value"));
    assert_eq!(text.lines().count(), 1 + 50 * 3);
    let c = qmeixner(&["simulate", "--seed", "43", "--paths", "50", "--times", "0,0.5,1"]);
    assert_ne!(a.stdout, c.stdout);
}

#[test]
fn simulate_stats() {
    let out = qmeixner(&["simulate", "--paths", "200", "--stats", "--format", "json"]);
    assert!(out.status.success());
    let v: serde_json::Value = serde_json::from_str(&stdout(&out)).unwrap();
    assert_eq!(v["mean"].as_array().unwrap().len(), 5);
    assert_eq!(v["increment_mean"].as_array().unwrap().len(), 4);
}

#[test]
fn verify_only_hm() {
    let out = qmeixner(&["verify", "--only", "hm"]);
    assert_eq!(out.status.code(), Some(0));
    let v: serde_json::Value = serde_json::from_str(&stdout(&out)).unwrap();
    let suites = v["suites"].as_array().unwrap();
    assert_eq!(suites.len(), 1);
    assert_eq!(suites[0]["check"], "hm");
    assert_eq!(suites[0]["grid"].as_array().unwrap().len(), 48);
    assert_eq!(v["pass"], true);
}

#[test]
fn verify_default_grid_passes() {
    let out = qmeixner(&["verify", "--format", "csv"]);
    assert_eq!(out.status.code(), Some(0), "{}", stdout(&out));
    let text = stdout(&out);
    assert_eq!(text.lines().count(), 1 + qmeixner::verify::SUITES.len());
    assert!(text.lines().skip(1).all(|l| l.ends_with(",true")));
}

#[test]
fn verify_near_boundary_is_well_formed() {
    let out = qmeixner(&["verify", "--q", "0.999999"]);
    assert!(matches!(out.status.code(), Some(0) | Some(1)));
    let v: serde_json::Value = serde_json::from_str(&stdout(&out)).unwrap();
    let suites = v["suites"].as_array().unwrap();
    assert_eq!(suites.len(), qmeixner::verify::SUITES.len());
    let keys = ["check", "grid", "max_residual", "tolerance", "pass", "errors"];
    for s in suites {
        for k in keys {
            assert!(s.get(k).is_some(), "missing {k}");
        }
    }
    let all_pass = suites.iter().all(|s| s["pass"] == true);
    assert_eq!(out.status.code() == Some(0), all_pass);
    assert_eq!(v["pass"], all_pass);
}

#[test]
fn converge_table() {
    let out = qmeixner(&["converge", "--side", "left", "--h", "0.1,0.01,0.001"]);
    assert!(out.status.success());
    let text = stdout(&out);
    assert_eq!(text.lines().next(), Some("side,h,order,rescaled_moment,nu_moment,abs_error,fitted_slope"));
    let lines: Vec<&str> = text.lines().skip(1).collect();
    assert_eq!(lines.len(), 3 * 7);
    let hs: Vec<f64> = lines.iter().step_by(7).map(|l| l.split(',').nth(1).unwrap().parse().unwrap()).collect();
    assert!(hs.windows(2).all(|w| w[0] > w[1]));
    for l in &lines {
        let cols: Vec<&str> = l.split(',').collect();
        assert_eq!(cols[0], "left");
        let order: usize = cols[2].parse().unwrap();
        if order >= 2 {
            let slope: f64 = cols[6].parse().unwrap();
            assert!((slope - 1.0).abs() < 0.2);
        }
    }
    let both = qmeixner(&["converge", "--format", "json"]);
    let v: serde_json::Value = serde_json::from_str(&stdout(&both)).unwrap();
    assert_eq!(v["studies"][0]["side"], "left");
    assert_eq!(v["studies"][1]["side"], "right");
}

#[test]
fn usage_errors_exit_two() {
    for args in [
        vec!["converge", "--h", "0.01,0.1"],
        vec!["measure", "--q", "1.5"],
        vec!["measure", "--s", "1", "--t", "0.5"],
        vec!["simulate", "--times", "0.5,0.2"],
        vec!["verify", "--only", "nonexistent"],
        vec!["bogus"],
    ] {
        let out = qmeixner(&args);
        assert_eq!(out.status.code(), Some(2), "{args:?}");
        assert!(!out.stderr.is_empty());
    }
}

#[test]
fn output_file_and_directory_env() {
    let dir = std::env::temp_dir().join(format!("qmeixner-cli-{}", std::process::id()));
    let out = Command::new(env!("CARGO_BIN_EXE_qmeixner"))
        .args(["measure", "--n", "3", "--output", "sub/m.csv"])
        .env("QMEIXNER_OUT_DIR", &dir)
        .output()
        .unwrap();
    assert!(out.status.success());
    assert!(out.stdout.is_empty());
    let written = std::fs::read_to_string(dir.join("sub/m.csv")).unwrap();
    assert_eq!(written.lines().count(), 4);
    std::fs::remove_dir_all(&dir).unwrap();
}
