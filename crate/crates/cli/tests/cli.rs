use std::path::Path;
use std::process::{Command, Output};

use rsf_cli::library::{self, critical_time_sweep, SweepParams};
use rsf_cli::plan::Plan;
use rsf_cli::{oracle_check, parse_scenario, run_scenario, Scenario, Table};

fn rsf(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_rsf")).args(args).env_remove("RSF_JOBS").output().unwrap()
}

fn bundled(name: &str, overrides: &[&str]) -> Scenario {
    let o: Vec<String> = overrides.iter().map(|s| s.to_string()).collect();
    Scenario::from_toml_with(library::bundled(name).unwrap().text, &o).unwrap()
}

fn column(t: &Table, name: &str) -> Vec<f64> {
    let c = t.columns.iter().position(|c| c == name).unwrap_or_else(|| panic!("no column {name}"));
    t.rows.iter().map(|r| r[c]).collect()
}

const SMALL: &str = r#"
n_modes = 2
observables = ["occupations", "mandel_q(1)"]

[time]
t_max = 1.0
samples = 5

[[initial]]
preset = "fock"
occupations = [2, 0]

[[pipeline]]
step = "evolve"
bath = { n_omega = 0.3 }
"#;

fn write(dir: &Path, name: &str, text: &str) -> String {
    let p = dir.join(name);
    std::fs::write(&p, text).unwrap();
    p.to_str().unwrap().to_string()
}

#[test]
fn run_writes_identical_csv_twice() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "small.cfg", SMALL);
    let (a, b) = (dir.path().join("a.csv"), dir.path().join("b.csv"));
    for out in [&a, &b] {
        let o = rsf(&["run", &cfg, "--out", out.to_str().unwrap()]);
        assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    }
    let text = std::fs::read(&a).unwrap();
    assert_eq!(text, std::fs::read(&b).unwrap());
    let text = String::from_utf8(text).unwrap();
    assert_eq!(text.lines().next().unwrap(), "t,n_1,n_2,mandel_q_1");
    assert_eq!(text.lines().count(), 6);
}

#[test]
fn several_configs_fan_out_into_a_directory() {
    let dir = tempfile::tempdir().unwrap();
    let one = write(dir.path(), "one.cfg", SMALL);
    let two = write(dir.path(), "two.cfg", &SMALL.replace("n_omega = 0.3", "n_omega = 0.0"));
    let out = dir.path().join("out");
    let o = Command::new(env!("CARGO_BIN_EXE_rsf"))
        .args(["run", &one, &two, "--out", out.to_str().unwrap()])
        .env("RSF_JOBS", "2")
        .output()
        .unwrap();
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    assert!(out.join("one.csv").exists() && out.join("two.csv").exists());
}

#[test]
fn exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let typo = write(dir.path(), "typo.cfg", &SMALL.replace("samples", "sampels"));
    let o = rsf(&["run", &typo]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("sampels"));

    let overlap = format!("{}\n[bipartition]\na = [1]\nb = [1, 2]\n", SMALL.replace("\"mandel_q(1)\"", "\"ppt\""));
    let o = rsf(&["run", &write(dir.path(), "overlap.cfg", &overlap)]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("bipartition"));

    // two photons with a cutoff of two sit on the edge from the start
    let o = rsf(&["oracle-check", &write(dir.path(), "small.cfg", SMALL), "--cutoff", "2"]);
    assert_eq!(o.status.code(), Some(3), "{}", String::from_utf8_lossy(&o.stderr));

    assert_eq!(rsf(&["scenario", "no_such_scenario"]).status.code(), Some(2));
    assert_eq!(rsf(&["run", "/nonexistent/x.cfg"]).status.code(), Some(1));
}

#[test]
fn emitted_configs_parse_back() {
    for name in library::BUNDLED.iter().map(|b| b.name) {
        let o = rsf(&["scenario", name, "--emit-config", "--param", "time.samples=7"]);
        assert!(o.status.success());
        let s = parse_scenario(&String::from_utf8(o.stdout).unwrap()).unwrap();
        assert_eq!(s, bundled(name, &["time.samples=7"]));
    }
}

#[test]
fn bundled_bsv_thermal_parses_as_described() {
    let s = parse_scenario(library::bundled("bsv_thermal").unwrap().text).unwrap();
    let plan = Plan::new(&s).unwrap();
    assert!(matches!(s.initial[0], rsf_cli::config::InitialSpec::Bsv { .. }));
    assert_eq!(plan.bipartition.as_ref().unwrap().dims(), (2, 2));
    assert!(!plan.needs_second_order());
    assert!(Plan::new(&bundled("bsv_generation", &[])).unwrap().needs_second_order());
}

#[test]
fn single_photon_at_zero_temperature_stays_entangled() {
    let t = run_scenario(&bundled("single_photon_thermal", &["pipeline.0.bath.n_omega=0", "time.t_max=8", "time.samples=81"]), None)
        .unwrap();
    let lam = column(&t, "ppt_min");
    assert!(lam.iter().all(|&l| l < 0.0));
    assert!(lam.last().unwrap().abs() < 1e-4 * lam[0].abs());
    assert!(column(&t, "critical_time")[0].is_nan());
}

#[test]
fn bsv_eigenvalue_is_constant_at_zero_temperature() {
    let t = run_scenario(&bundled("bsv_thermal", &["pipeline.0.bath.n_omega=0", "initial.0.gain=1", "time.t_max=5", "time.samples=51"]), None)
        .unwrap();
    let lam = column(&t, "ppt_min");
    assert!(lam.iter().all(|l| (l - lam[0]).abs() < 1e-8));
}

#[test]
fn critical_times_cross_near_the_predicted_gain() {
    let p = SweepParams { n_min: 0.2, n_max: 0.2, points: 1, gains: vec![0.1, 0.26, 0.28, 1.0], t_max: 4.0, samples: 81 };
    let t = critical_time_sweep(&p, None).unwrap();
    let r = &t.rows[0];
    let (photon, bsv) = (r[1], &r[2..]);
    assert!(bsv[0] < photon && bsv[1] < photon);
    assert!(bsv[2] > photon && bsv[3] > photon);
}

#[test]
fn squeezing_builds_up_pair_occupation() {
    let t = run_scenario(&bundled("bsv_generation", &[]), None).unwrap();
    for (time, n) in column(&t, "t").into_iter().zip(column(&t, "n_1")) {
        // two-mode squeezed vacuum with gain equal to t
        assert!((n - time.sinh().powi(2)).abs() < 1e-8, "t = {time}: {n}");
    }
}

#[test]
fn bsv_thermal_matches_the_cutoff_five_oracle() {
    let s = bundled("bsv_thermal", &["time.t_max=0.4", "time.samples=5"]);
    let report = oracle_check(&Plan::new(&s).unwrap(), 5, 1e-6, None).unwrap();
    assert!(report.passed(), "{report}");
}

#[test]
fn oracle_report_names_the_worst_element() {
    let s = bundled("bsv_generation", &[]);
    let report = oracle_check(&Plan::new(&s).unwrap(), 8, 1e-6, None).unwrap();
    assert!(!report.passed());
    let text = report.to_string();
    let worst = report.blocks.iter().max_by(|a, b| a.max_deviation.total_cmp(&b.max_deviation)).unwrap();
    assert!(text.contains(&format!("worst [{},{}]", worst.row, worst.col)));
    assert!(text.contains("FAIL"));
}
