use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;

const BIN: &str = env!("CARGO_BIN_EXE_collapse-lab");

fn run(dir: &Path, args: &[&str], config: &str) -> Output {
    let cfg = dir.join("run.toml");
    fs::write(&cfg, config).unwrap();
    Command::new(BIN)
        .args(args)
        .arg("--config")
        .arg(&cfg)
        .current_dir(dir)
        .output()
        .unwrap()
}

fn report(dir: &Path, out: &str) -> Value {
    serde_json::from_str(&fs::read_to_string(dir.join(out).join("report.json")).unwrap()).unwrap()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

const SPIN_HALF: &str = r#"
seed = 11
[model]
builtin = "spin-half"
[simulate]
runs = 10000
state = [0.6, 0.8]
"#;

#[test]
fn simulate_rerun_is_byte_identical() {
    let dir = tempfile::tempdir().unwrap();
    let a = run(dir.path(), &["simulate", "--out", "a"], SPIN_HALF);
    let b = run(dir.path(), &["simulate", "--out", "b"], SPIN_HALF);
    assert!(a.status.success(), "{}", stderr(&a));
    assert!(b.status.success(), "{}", stderr(&b));
    for f in ["outcomes.csv", "trajectories.jsonl", "report.json"] {
        let x = fs::read(dir.path().join("a").join(f)).unwrap();
        let y = fs::read(dir.path().join("b").join(f)).unwrap();
        assert!(x == y, "{f} differs between reruns");
    }
    let csv = fs::read_to_string(dir.path().join("a/outcomes.csv")).unwrap();
    assert!(csv.starts_with("outcome,count,frequency,se\n"));
    let lines = fs::read_to_string(dir.path().join("a/trajectories.jsonl")).unwrap();
    assert_eq!(lines.lines().count(), 10_000);
}

#[test]
fn simulate_frequencies_follow_born_weights() {
    let dir = tempfile::tempdir().unwrap();
    let o = run(dir.path(), &["simulate", "--out", "o", "--format", "json"], SPIN_HALF);
    assert!(o.status.success(), "{}", stderr(&o));
    let rows: Value = serde_json::from_str(&fs::read_to_string(dir.path().join("o/outcomes.json")).unwrap()).unwrap();
    let f = |i: usize| rows[i]["frequency"].as_f64().unwrap();
    let se = rows[0]["se"].as_f64().unwrap();
    assert!((f(0) - 0.36).abs() < 5.0 * se, "P(+1) = {}", f(0));
    assert!((f(1) - 0.64).abs() < 5.0 * se, "P(-1) = {}", f(1));
    assert_eq!(rows[2]["outcome"], "null");
}

#[test]
fn seed_flag_overrides_config() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = SPIN_HALF.replace("runs = 10000", "runs = 50");
    let o = run(dir.path(), &["simulate", "--out", "o", "--seed", "99"], &cfg);
    assert!(o.status.success(), "{}", stderr(&o));
    assert_eq!(report(dir.path(), "o")["config"]["seed"], 99);
    assert!(dir.path().join("o/timing.json").exists());
}

#[test]
fn free_packet_spread_matches_dispersion() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = r#"
[simulate.free_packet]
n_points = 512
spacing = 0.1
width = 1.0
mass = 1.0
t_final = 4.0
samples = 8
"#;
    let o = run(dir.path(), &["simulate", "--out", "o"], cfg);
    assert!(o.status.success(), "{}", stderr(&o));
    // sigma(t) = sqrt(1 + t^2 / 4) for unit width and mass.
    let text = fs::read_to_string(dir.path().join("o/moments.csv")).unwrap();
    let mut rows = csv::Reader::from_reader(text.as_bytes());
    for rec in rows.records() {
        let rec = rec.unwrap();
        let t: f64 = rec[0].parse().unwrap();
        let spread: f64 = rec[2].parse().unwrap();
        let oracle = (1.0 + t * t / 4.0).sqrt();
        assert!((spread - oracle).abs() <= 0.01 * oracle, "t = {t}: {spread} vs {oracle}");
    }
}

#[test]
fn missing_calibration_exits_2_naming_the_field() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = r#"
[model.inline]
t_final = 1.0
[model.inline.system]
dim = 2
observable = "sz"
[model.inline.pointer]
n_points = 128
spacing = 0.1
width = 0.1
[model.inline.coupling]
strength = 50.0
duration = 0.05
[model.inline.grw]
alpha = 4.0
pointer_rate = 15.0
[simulate]
runs = 10
state = [1.0, 0.0]
"#;
    let o = run(dir.path(), &["simulate", "--out", "o"], cfg);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("calibration"), "{}", stderr(&o));
}

#[test]
fn unknown_key_exits_2() {
    let dir = tempfile::tempdir().unwrap();
    let o = run(dir.path(), &["simulate", "--out", "o"], &format!("{SPIN_HALF}\nrunz = 3\n"));
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("runz"), "{}", stderr(&o));
}

#[test]
fn empty_criterion_list_exits_2() {
    let dir = tempfile::tempdir().unwrap();
    let o = run(dir.path(), &["verify", "--out", "o"], "[verify]\ncriteria = []\n");
    assert_eq!(o.status.code(), Some(2), "{}", stderr(&o));
}

#[test]
fn verify_echoes_bound_and_linearity() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = "[verify]\ncriteria = [\"theorem1-paper-bound\", \"born-linearity\"]\n";
    let o = run(dir.path(), &["verify", "--out", "o"], cfg);
    assert!(o.status.success(), "{}", stderr(&o));
    let stdout = String::from_utf8_lossy(&o.stdout);
    assert!(stdout.contains("PASS theorem1-paper-bound"));
    assert!(stdout.contains("bound=2.2"), "{stdout}");
    let r = report(dir.path(), "o");
    let born = &r["results"]["criteria"][1]["values"];
    assert!(born["born_max_defect"].as_f64().unwrap() <= 1e-10);
    assert!(born["uniform_min_defect"].as_f64().unwrap() > 1e-9);
    assert_eq!(r["passed"], true);
}

const SPIN1_OBSERVABLE: &str = "\
observable =
[ 0.00000000 0.70710678 0.00000000 ]
[ 0.70710678 0.00000000 0.70710678 ]
[ 0.00000000 0.70710678 0.00000000 ]
";

#[test]
fn spin1_matrix_matches_fixture() {
    let dir = tempfile::tempdir().unwrap();
    let o = run(dir.path(), &["extract-povm", "--out", "o"], "[extract_povm]\nsource = \"spin1\"\n");
    assert!(o.status.success(), "{}", stderr(&o));
    let stdout = String::from_utf8_lossy(&o.stdout);
    assert!(stdout.starts_with(SPIN1_OBSERVABLE), "{stdout}");
    let r = report(dir.path(), "o");
    assert_eq!(r["results"]["pvm"]["is_pvm"], true);
    let effects = fs::read_to_string(dir.path().join("o/effects.json")).unwrap();
    assert!(collapse_core::EffectSet::from_json(&effects).is_ok());
}

#[test]
fn malus_effect_is_a_rank_one_projector() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = "[extract_povm]\nsource = \"malus\"\ntheta_deg = 30.0\n";
    let o = run(dir.path(), &["extract-povm", "--out", "o"], cfg);
    assert!(o.status.success(), "{}", stderr(&o));
    let r = report(dir.path(), "o");
    assert_eq!(r["results"]["ranks"], serde_json::json!([1, 1]));
    // (cos^2, cos sin; cos sin, sin^2) at 30 degrees.
    let stdout = String::from_utf8_lossy(&o.stdout);
    assert!(stdout.contains("O[transmitted] =\n[ 0.75000000 0.43301270 ]\n[ 0.43301270 0.25000000 ]\n"), "{stdout}");
}

#[test]
fn small_monte_carlo_extraction_warns() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = r#"
seed = 3
[model]
builtin = "spin-half"
[extract_povm]
source = "experiment"
mode = "monte_carlo"
n_runs = 12
"#;
    let o = run(dir.path(), &["extract-povm", "--out", "o"], cfg);
    let r = report(dir.path(), "o");
    assert_eq!(r["results"]["se_warning"], true, "{}", stderr(&o));
    assert!(stderr(&o).contains("warning"));
}

#[test]
fn monte_carlo_needs_experiment_source() {
    let dir = tempfile::tempdir().unwrap();
    let o = run(
        dir.path(),
        &["extract-povm", "--out", "o"],
        "[extract_povm]\nsource = \"spin1\"\nmode = \"monte_carlo\"\n",
    );
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn sweeps_write_tables() {
    let dir = tempfile::tempdir().unwrap();
    let o = run(dir.path(), &["sweep", "--out", "sg"], "[sweep]\nkind = \"stern-gerlach\"\n");
    assert!(o.status.success(), "{}", stderr(&o));
    let text = fs::read_to_string(dir.path().join("sg/sweep.csv")).unwrap();
    assert!(text.starts_with("parameter,value,analytic,defect\n"));
    assert_eq!(text.lines().count(), 25);

    let o = run(dir.path(), &["sweep", "--out", "m"], "[sweep]\nkind = \"malus\"\nsteps = 7\n");
    assert!(o.status.success(), "{}", stderr(&o));
    let text = fs::read_to_string(dir.path().join("m/sweep.csv")).unwrap();
    for line in text.lines().skip(1) {
        let defect: f64 = line.rsplit(',').next().unwrap().parse().unwrap();
        assert!(defect <= 1e-12, "{line}");
    }
}

#[test]
fn unknown_sweep_exits_2() {
    let dir = tempfile::tempdir().unwrap();
    let o = run(dir.path(), &["sweep", "--out", "o"], "[sweep]\nkind = \"rabi\"\n");
    assert_eq!(o.status.code(), Some(2));
}
