use std::fs;
use std::process::Command;

use raman_harness::output::summary_path;
use raman_harness::{emit_outputs, load_record, run_scenario, scenarios, ScenarioConfig};

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_raman-sr"))
}

fn code(cmd: &mut Command) -> (i32, String, String) {
    let out = cmd.output().unwrap();
    (out.status.code().unwrap(), String::from_utf8_lossy(&out.stdout).into_owned(), String::from_utf8_lossy(&out.stderr).into_owned())
}

#[test]
fn lists_every_scenario() {
    let (c, stdout, _) = code(bin().arg("list-scenarios"));
    assert_eq!(c, 0);
    for s in scenarios::all() {
        assert!(stdout.contains(&s.config.name), "{}", s.config.name);
    }
}

#[test]
fn pulse_run_writes_csv_and_record() {
    let dir = tempfile::tempdir().unwrap();
    let (c, stdout, _) = code(bin().args(["pulse", "--scenario", "fig2a", "--threads", "2", "--out"]).arg(dir.path()));
    assert_eq!(c, 0);
    assert!(stdout.contains("fig2a.csv"));
    let rec = load_record(&summary_path(dir.path(), "fig2a")).unwrap();
    assert!(rec.passed);
    assert_eq!(rec.config.params.n_atoms, 1e4);
    let csv = fs::read_to_string(dir.path().join("fig2a.csv")).unwrap();
    assert!(csv.starts_with("t_s,photons,s11,s22,s33,J,M,A_x,A_y\n"));
}

#[test]
fn unknown_key_is_a_config_error_with_line() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("bad.toml");
    fs::write(&path, "[params]\nN = 2e4\nbogus = 1\n").unwrap();
    let (c, _, stderr) = code(bin().args(["pulse", "--config"]).arg(&path).arg("--out").arg(dir.path()));
    assert_eq!(c, 2);
    assert!(stderr.contains("line 3"), "{stderr}");
}

#[test]
fn kind_mismatch_and_unknown_scenario_are_config_errors() {
    let dir = tempfile::tempdir().unwrap();
    let (c, _, _) = code(bin().args(["sweep", "--scenario", "fig2a", "--out"]).arg(dir.path()));
    assert_eq!(c, 2);
    let (c, _, _) = code(bin().args(["pulse", "--scenario", "nope", "--out"]).arg(dir.path()));
    assert_eq!(c, 2);
}

#[test]
fn oracle_passes_and_failed_runs_exit_one() {
    let dir = tempfile::tempdir().unwrap();
    let (c, stdout, _) = code(bin().args(["oracle-check", "--out"]).arg(dir.path()));
    assert_eq!(c, 0, "{stdout}");
    assert!(stdout.contains("pass"));

    // No pulse within the horizon at any point is a run error.
    let path = dir.path().join("short.toml");
    fs::write(&path, "t_end = 1e-12\n").unwrap();
    let (c, _, _) = code(bin().args(["sweep", "--scenario", "fig2b", "--config"]).arg(&path).arg("--out").arg(dir.path()));
    assert_eq!(c, 1);
}

#[test]
fn minimal_config_echoes_defaults() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("min.toml");
    fs::write(&path, "kind = \"pulse\"\nt_end = 1e-3\n[params]\nN = 2e4\n").unwrap();
    let (c, _, stderr) = code(bin().args(["pulse", "--config"]).arg(&path).arg("--out").arg(dir.path()));
    assert_eq!(c, 0, "{stderr}");
    let rec = load_record(&summary_path(dir.path(), "pulse")).unwrap();
    let reference = ScenarioConfig::new("pulse", raman_core::model::ModelKind::Full, raman_harness::RunKind::Pulse).params;
    assert_eq!(rec.config.params.n_atoms, 2e4);
    assert_eq!(rec.config.params.omega_hz, reference.omega_hz);
    assert_eq!(rec.config.params.kappa_hz, reference.kappa_hz);
    assert_eq!(rec.summary["params"]["omega_hz"].as_f64(), Some(reference.omega_hz));
}

#[test]
fn record_round_trips_and_reruns_are_identical() {
    let cfg = scenarios::find("fig4c").unwrap().config;
    let (a, b) = (tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap());
    let out = run_scenario(&cfg).unwrap();
    let rec = emit_outputs(a.path(), &cfg, &out, 0.0).unwrap();
    assert_eq!(load_record(&summary_path(a.path(), "fig4c")).unwrap(), rec);
    let again = emit_outputs(b.path(), &cfg, &run_scenario(&cfg).unwrap(), 0.0).unwrap();
    assert_eq!(rec.outputs, again.outputs);
    let csv = fs::read_to_string(a.path().join(&rec.outputs[0].file)).unwrap();
    assert!(csv.starts_with("gamma12_hz,n_ss,shift_hz,fwhm_hz\n"), "{}", csv.lines().next().unwrap());
}
