use serde_json::Value;
use std::path::Path;
use std::process::{Command, Output};

fn liberation(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_liberation")).args(args).output().expect("binary runs")
}

fn data_rows(text: &str) -> Vec<Vec<String>> {
    text.lines().skip(2).map(|l| l.split(',').map(str::to_string).collect()).collect()
}

fn status(out: &Output) -> Value {
    let text = String::from_utf8_lossy(&out.stderr);
    serde_json::from_str(text.lines().last().expect("status line")).expect("status is JSON")
}

fn read(p: &Path) -> String {
    std::fs::read_to_string(p).unwrap()
}

#[test]
fn evolve_writes_a_trajectory_with_provenance() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("traj.csv");
    let o = liberation(&[
        "evolve",
        "--init",
        "bernoulli",
        "--t",
        "0:0.5:2",
        "--order",
        "8",
        "--out",
        out.to_str().unwrap(),
    ]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    assert_eq!(status(&o), serde_json::json!({"ok": true, "warnings": []}));
    let text = read(&out);
    let mut lines = text.lines();
    let header = lines.next().unwrap();
    assert!(header.starts_with("# liberation-cli ") && header.contains(" evolve ") && header.contains("--t 0:0.5:2"));
    assert_eq!(lines.next().unwrap(), "t,g1,g2,g3,g4,g5,g6,g7,g8");
    let rows = data_rows(&text);
    assert_eq!(rows.len(), 5);
    for r in &rows {
        let t: f64 = r[0].parse().unwrap();
        let g1: f64 = r[1].parse().unwrap();
        // g1(t) = g1(0) e^{−t} + αβ(1 − e^{−t})
        let exact = 0.5 * (-t).exp() + 0.25 * (1.0 - (-t).exp());
        assert!((g1 - exact).abs() < 1e-9);
        // 17 significant digits
        assert!(r[1].split('e').next().unwrap().trim_start_matches('-').len() == 18, "{}", r[1]);
    }
}

#[test]
fn evolve_can_report_every_accepted_step() {
    let o = liberation(&["evolve", "--t", "1", "--order", "4", "--accepted-steps"]);
    assert_eq!(o.status.code(), Some(0));
    let rows = data_rows(&String::from_utf8_lossy(&o.stdout));
    let ts: Vec<f64> = rows.iter().map(|r| r[0].parse().unwrap()).collect();
    assert!(ts.len() > 2 && ts[0] == 0.0 && *ts.last().unwrap() == 1.0);
    assert!(ts.windows(2).all(|w| w[0] < w[1]));
}

#[test]
fn config_files_are_overridden_by_flags() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("scenario.cfg");
    std::fs::write(&cfg, "# trace parameters\nalpha = 0.3\nbeta = 0.6\nt = 1\norder = 4\ninit = point:0.5\n").unwrap();
    let g1 = |o: &Output| -> f64 { data_rows(&String::from_utf8_lossy(&o.stdout))[0][1].parse().unwrap() };
    let from_file = liberation(&["evolve", "--config", cfg.to_str().unwrap()]);
    assert_eq!(from_file.status.code(), Some(0), "{}", String::from_utf8_lossy(&from_file.stderr));
    let e = (-1.0f64).exp();
    assert!((g1(&from_file) - (0.3 * 0.5 * e + 0.18 * (1.0 - e))).abs() < 1e-9);
    let overridden = liberation(&["evolve", "--config", cfg.to_str().unwrap(), "--beta", "0.5"]);
    assert!((g1(&overridden) - (0.3 * 0.5 * e + 0.15 * (1.0 - e))).abs() < 1e-9);
    std::fs::write(&cfg, "alpha 0.3\n").unwrap();
    assert_eq!(liberation(&["evolve", "--config", cfg.to_str().unwrap()]).status.code(), Some(2));
}

#[test]
fn invalid_input_exits_with_two() {
    for args in [
        &["evolve", "--alpha", "1.5"][..],
        &["evolve", "--init", "gaussian"],
        &["evolve", "--t", "2:1:1"],
        &["evolve", "--no-such-flag", "1"],
        &["density", "--alpha", "0.3"],
        &["rmt", "--coupling", "sideways"],
        &["evolve", "--config", "/nonexistent/scenario.cfg"],
    ] {
        let o = liberation(args);
        assert_eq!(o.status.code(), Some(2), "{args:?}: {}", String::from_utf8_lossy(&o.stderr));
    }
    let o = liberation(&["evolve", "--init", "point:3"]);
    assert_eq!(status(&o)["ok"], Value::Bool(false));
}

#[test]
fn solver_failure_exits_with_three_and_keeps_partial_output() {
    let dir = tempfile::tempdir().unwrap();
    let st = dir.path().join("status.json");
    let o = liberation(&["evolve", "--t", "0,1", "--order", "4", "--tol", "1e-300", "--status", st.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(3));
    let s: Value = serde_json::from_str(&read(&st)).unwrap();
    assert_eq!(s["ok"], Value::Bool(false));
    let warnings: Vec<&str> = s["warnings"].as_array().unwrap().iter().map(|w| w.as_str().unwrap()).collect();
    assert!(warnings.iter().any(|w| w.contains("step-size underflow")) && warnings.contains(&"output is partial"));
    assert_eq!(data_rows(&String::from_utf8_lossy(&o.stdout)).len(), 1);
}

#[test]
fn rmt_histograms_are_deterministic() {
    let dir = tempfile::tempdir().unwrap();
    let run = |name: &str, seed: &str| {
        let out = dir.path().join(name);
        let o = liberation(&[
            "rmt",
            "--d",
            "16",
            "--t",
            "0.3",
            "--trials",
            "3",
            "--seed",
            seed,
            "--bins",
            "10",
            "--out",
            out.to_str().unwrap(),
        ]);
        assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
        (read(&out), read(&dir.path().join(name.replace(".csv", ".atoms.json"))))
    };
    let (a, a_atoms) = run("a.csv", "7");
    let (b, b_atoms) = run("b.csv", "7");
    let (c, _) = run("c.csv", "8");
    let strip = |s: &str| s.lines().skip(1).collect::<Vec<_>>().join("\n");
    assert_eq!(strip(&a), strip(&b));
    assert_ne!(strip(&a), strip(&c));
    let (mut ja, mut jb): (Value, Value) =
        (serde_json::from_str(&a_atoms).unwrap(), serde_json::from_str(&b_atoms).unwrap());
    ja["provenance"] = Value::Null;
    jb["provenance"] = Value::Null;
    assert_eq!(ja, jb);
    assert_eq!(a.lines().nth(1).unwrap(), "bin_left,bin_right,count");
    let binned: usize = data_rows(&a).iter().map(|r| r[2].parse::<usize>().unwrap()).sum();
    let atoms: u64 = ja["atoms"].as_array().unwrap().iter().map(|x| x["count"].as_u64().unwrap()).sum();
    assert_eq!(binned as u64 + atoms, 16 * 3);
}

#[test]
fn jacobi_density_has_the_continuous_mass() {
    let o = liberation(&["jacobi", "--alpha", "0.3", "--beta", "0.6", "--points", "2000"]);
    assert_eq!(o.status.code(), Some(0));
    let rows = data_rows(&String::from_utf8_lossy(&o.stdout));
    let mass: f64 = rows.iter().map(|r| r[1].parse::<f64>().unwrap()).sum::<f64>() / rows.len() as f64;
    assert!((mass - 0.3).abs() < 1e-3, "{mass}");
}

#[test]
fn density_of_the_uniform_start() {
    let o = liberation(&["density", "--t", "0.5", "--points", "20", "--nodes", "64"]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let text = String::from_utf8_lossy(&o.stdout);
    assert_eq!(text.lines().nth(1).unwrap(), "x,rho_t,re_H,im_H,converged");
    for r in data_rows(&text) {
        assert!(r[1].parse::<f64>().unwrap() > 0.0);
        assert_eq!(r[4], "true");
    }
}

#[test]
fn entropy_profile_decreases() {
    let o = liberation(&["entropy", "--t", "0,0.5,1", "--nodes", "64"]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let rows = data_rows(&String::from_utf8_lossy(&o.stdout));
    let phi: Vec<f64> = rows.iter().map(|r| r[1].parse().unwrap()).collect();
    let chi: Vec<f64> = rows.iter().map(|r| r[2].parse().unwrap()).collect();
    assert!(phi.windows(2).all(|w| w[1] < w[0]));
    assert!(chi.windows(2).all(|w| w[1] > w[0]));
}

#[test]
fn unify_report_has_the_documented_keys() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("report.json");
    let o = liberation(&[
        "unify",
        "--tmax",
        "2",
        "--tail",
        "drop",
        "--nodes",
        "64",
        "--max-evaluations",
        "200",
        "--profile-points",
        "5",
        "--out",
        out.to_str().unwrap(),
    ]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let r: Value = serde_json::from_str(&read(&out)).unwrap();
    for key in ["istar", "chi_proj_t0", "chi_proj_inf", "ftc_gap"] {
        assert!(r[key].is_f64(), "{key}");
    }
    let (i, c0, ci) =
        (r["istar"].as_f64().unwrap(), r["chi_proj_t0"].as_f64().unwrap(), r["chi_proj_inf"].as_f64().unwrap());
    assert!((r["ftc_gap"].as_f64().unwrap() - (i - (ci - c0))).abs() < 1e-15);
    assert!((c0 + 0.375).abs() < 1e-3 && (ci + 0.25 * 4f64.ln()).abs() < 1e-3);
    let profile = r["profile"].as_array().unwrap();
    assert_eq!(profile.len(), 5);
    assert_eq!(profile[4]["t"].as_f64(), Some(2.0));
    assert_eq!(r["provenance"]["command"], "unify");
}

#[test]
fn crosscheck_agrees_for_the_default_scenario() {
    let o = liberation(&["crosscheck"]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    assert_eq!(status(&o), serde_json::json!({"ok": true, "warnings": []}));
    let rows = data_rows(&String::from_utf8_lossy(&o.stdout));
    assert_eq!(rows.len(), 20);
    assert!(rows.iter().all(|r| r[7].parse::<f64>().unwrap() < 1e-6));
}

#[test]
fn help_and_version_exit_cleanly() {
    assert_eq!(liberation(&["--help"]).status.code(), Some(0));
    assert_eq!(liberation(&["--version"]).status.code(), Some(0));
    assert_eq!(liberation(&[]).status.code(), Some(2));
}
