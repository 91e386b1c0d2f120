use std::fs;
use std::path::Path;
use std::process::Command;

use hawkes_epi::analysis::ScanParam;
use hawkes_epi::ModelParams;
use hawkes_epi_cli::{parse_config, parse_config_with_provenance, serialize, RunConfig};
use proptest::prelude::*;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_hawkes-epi"))
}

fn run_ok(args: &[&str], out: &Path) -> String {
    let output = bin().args(args).arg("--out").arg(out).output().unwrap();
    assert!(output.status.success(), "{}", String::from_utf8_lossy(&output.stderr));
    String::from_utf8(output.stdout).unwrap()
}

#[test]
fn empty_document_gives_baseline() {
    let (config, defaulted) = parse_config_with_provenance("").unwrap();
    assert_eq!(config.params, ModelParams::baseline());
    assert!(defaulted.iter().any(|d| d.key == "model.p"));
    assert!(defaulted.iter().any(|d| d.key == "simulation.seed"));
    assert!(defaulted.iter().all(|d| d.to_string().contains("defaulted from baseline")));
}

#[test]
fn explicit_keys_are_not_reported_as_defaulted() {
    let (config, defaulted) = parse_config_with_provenance("[model]\np = 0.5\n").unwrap();
    assert_eq!(config.params.p, 0.5);
    assert!(!defaulted.iter().any(|d| d.key == "model.p"));
}

#[test]
fn out_of_range_p_names_key_and_line() {
    let err = parse_config("# comment\n[model]\np = 1.5\n").unwrap_err();
    assert_eq!(err.key, "model.p");
    assert_eq!(err.line, Some(3));
    assert!(err.message.contains("[0, 1]"), "{}", err.message);
}

#[test]
fn supercritical_channel_is_rejected() {
    let err = parse_config("[hawkes]\nalpha2 = 1.0\nbeta2 = 0.5\n").unwrap_err();
    assert_eq!(err.key, "hawkes.alpha2");
    assert_eq!(err.line, Some(2));
    assert!(err.message.contains("alpha2/beta2 < 1"), "{}", err.message);
}

#[test]
fn unknown_and_malformed_keys_are_rejected() {
    let err = parse_config("[model]\nmu_h = 1e-3\nbogus = 2\n").unwrap_err();
    assert_eq!(err.key, "model.bogus");
    assert_eq!(err.line, Some(3));
    let err = parse_config("[simulation]\ndt = \"fast\"\n").unwrap_err();
    assert_eq!(err.key, "simulation.dt");
    assert_eq!(err.line, Some(2));
    assert!(parse_config("[nonsense]\nx = 1\n").is_err());
}

#[test]
fn scientific_notation_is_accepted() {
    let c = parse_config("[model]\neta1 = 6.85e-7\nmu_r = 5.48E-6\n").unwrap();
    assert_eq!(c.params.eta1, 6.85e-7);
    assert_eq!(c.params.mu_r, 5.48e-6);
}

#[test]
fn baseline_round_trips() {
    let c = RunConfig::default();
    assert_eq!(parse_config(&serialize(&c)).unwrap(), c);
    let (_, defaulted) = parse_config_with_provenance(&serialize(&c)).unwrap();
    assert!(defaulted.is_empty(), "{defaulted:?}");
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn arbitrary_configs_round_trip(
        rates in prop::array::uniform8(0.0..1.0f64),
        p in 0.0..=1.0f64,
        ratio in 0.0..0.99f64,
        beta in 1e-3..10.0f64,
        dt in 1e-3..1.0f64,
        horizon in 1.0..1e4f64,
        seed in 0..=i64::MAX as u64,
        truncated in any::<bool>(),
        axes in (0usize..9, 1usize..9),
    ) {
        let text = format!(
            "[model]\nmu_h = {}\nmu_r = {}\ndelta_h = {}\np = {p:e}\neta3 = {}\nsigma8 = {}\n\
             [hawkes]\nalpha3 = {}\nbeta3 = {beta:e}\nmark_cap = {}\ng_from_truncated_mean = {truncated}\n\
             [simulation]\ndt = {dt:e}\nhorizon = {horizon:e}\nseed = {seed}\ni_r = {}\n\
             [scan]\nx = \"{}\"\ny = \"{}\"\n",
            rates[0], rates[1], rates[2], rates[3], rates[4], ratio * beta, 0.5 + rates[5], rates[6] * 100.0,
            ScanParam::ALL[axes.0].name(), ScanParam::ALL[(axes.0 + axes.1) % 9].name(),
        );
        let config = parse_config(&text).unwrap();
        prop_assert_eq!(parse_config(&serialize(&config)).unwrap(), config);
    }
}

#[test]
fn r0_prints_summands_and_total() {
    let dir = tempfile::tempdir().unwrap();
    let stdout = run_ok(&["r0"], dir.path());
    for needle in ["(1-p)(eta1+eta2)", "eta3", "lambda0_2", "lambda0_3", "R0 = 1.01157840869960"] {
        assert!(stdout.contains(needle), "missing {needle} in\n{stdout}");
    }
    let manifest = fs::read_to_string(dir.path().join("manifest.toml")).unwrap();
    assert!(manifest.starts_with("# hawkes-epi "));
    assert_eq!(parse_config(&manifest).unwrap().params, ModelParams::baseline());
    assert!(!manifest.contains("[output]"));
    let provenance = fs::read_to_string(dir.path().join("provenance.log")).unwrap();
    assert!(provenance.contains("model.eta1 = 6.85e-7 (defaulted from baseline)"));
}

#[test]
fn thresholds_reports_flags_and_assumptions() {
    let dir = tempfile::tempdir().unwrap();
    let stdout = run_ok(&["thresholds"], dir.path());
    assert!(stdout.contains("rodent bound (N_r_floor/eta3) a = absent"));
    assert!(stdout.contains("indeterminate=true"));
    assert!(stdout.contains("assumed structural bounds"));
}

#[test]
fn invalid_config_exits_nonzero_with_diagnostic() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("bad.toml");
    fs::write(&cfg, "[model]\np = 1.5\n").unwrap();
    let output = bin().arg("r0").arg("--config").arg(&cfg).arg("--out").arg(dir.path()).output().unwrap();
    assert!(!output.status.success());
    let stderr = String::from_utf8_lossy(&output.stderr);
    assert!(stderr.contains("model.p") && stderr.contains("line 2"), "{stderr}");
}

#[test]
fn overrides_are_validated() {
    let dir = tempfile::tempdir().unwrap();
    let output = bin().args(["simulate", "--dt", "5", "--horizon", "1"]).arg("--out").arg(dir.path()).output().unwrap();
    assert!(!output.status.success());
    assert!(String::from_utf8_lossy(&output.stderr).contains("simulation.dt"));
    let output = bin().args(["scan", "--x", "gamma_h"]).arg("--out").arg(dir.path()).output().unwrap();
    assert!(!output.status.success());
}

#[test]
fn unwritable_output_directory_fails() {
    let dir = tempfile::tempdir().unwrap();
    let file = dir.path().join("occupied");
    fs::write(&file, "x").unwrap();
    let output = bin().arg("r0").arg("--out").arg(file.join("sub")).output().unwrap();
    assert!(!output.status.success());
}

fn assert_csv(path: &Path, header: &str) -> Vec<Vec<f64>> {
    let text = fs::read_to_string(path).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some(header), "{}", path.display());
    let width = header.split(',').count();
    lines
        .map(|l| {
            let cells: Vec<f64> = l.split(',').map(|c| c.parse().unwrap()).collect();
            assert_eq!(cells.len(), width);
            assert!(cells.iter().all(|c| c.is_finite()));
            cells
        })
        .collect()
}

#[test]
fn ensemble_writes_documented_files() {
    let dir = tempfile::tempdir().unwrap();
    run_ok(&["ensemble", "--paths", "80", "--horizon", "50"], dir.path());
    let paths = (0..80).filter(|i| dir.path().join(format!("path_{i:04}.csv")).exists()).count();
    assert_eq!(paths, 80);
    for i in 0..80 {
        let rows = assert_csv(&dir.path().join(format!("path_{i:04}.csv")), "t,S_h,I_h,Q_h,R_h,S_r,I_r");
        assert!(rows.windows(2).all(|w| w[0][0] < w[1][0]));
    }
    let mean = assert_csv(&dir.path().join("mean_path.csv"), "t,S_h,I_h,Q_h,R_h,S_r,I_r");
    assert_eq!(mean.len(), 501);
    for ch in 1..=4 {
        let rows = assert_csv(&dir.path().join(format!("events_ch{ch}.csv")), "t,mark");
        assert!(rows.iter().all(|r| r[1] > 0.0 && r[1] <= 3.0));
    }
    let csvs = fs::read_dir(dir.path())
        .unwrap()
        .filter(|e| e.as_ref().unwrap().path().extension().is_some_and(|x| x == "csv"))
        .count();
    assert_eq!(csvs, 85);
}

#[test]
fn simulate_mean_equals_single_path_on_regular_grid() {
    let dir = tempfile::tempdir().unwrap();
    run_ok(&["simulate", "--horizon", "20", "--seed", "3"], dir.path());
    let path = assert_csv(&dir.path().join("path_0000.csv"), "t,S_h,I_h,Q_h,R_h,S_r,I_r");
    let mean = assert_csv(&dir.path().join("mean_path.csv"), "t,S_h,I_h,Q_h,R_h,S_r,I_r");
    for row in &mean {
        let last = path.iter().rfind(|r| r[0] <= row[0]).unwrap();
        assert_eq!(&last[1..], &row[1..]);
    }
}

#[test]
fn repeated_runs_are_byte_identical() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    let args = ["ensemble", "--paths", "6", "--horizon", "100", "--seed", "9"];
    run_ok(&args, a.path());
    let manifest = a.path().join("manifest.toml");
    let output = bin()
        .arg("ensemble")
        .arg("--config")
        .arg(&manifest)
        .arg("--out")
        .arg(b.path())
        .output()
        .unwrap();
    assert!(output.status.success());
    for entry in fs::read_dir(a.path()).unwrap() {
        let name = entry.unwrap().file_name();
        if name == "provenance.log" {
            continue;
        }
        assert_eq!(fs::read(a.path().join(&name)).unwrap(), fs::read(b.path().join(&name)).unwrap(), "{name:?}");
    }
}

#[test]
fn scan_grid_is_monotone_and_has_contour() {
    let dir = tempfile::tempdir().unwrap();
    run_ok(&["scan", "--x", "mu_h", "--y", "mu_r", "--resolution", "50"], dir.path());
    let rows = assert_csv(&dir.path().join("scan_grid.csv"), "x,y,r0");
    assert_eq!(rows.len(), 2500);
    let z = |ix: usize, iy: usize| rows[ix * 50 + iy][2];
    for i in 0..50 {
        for j in 1..50 {
            assert!(z(i, j) <= z(i, j - 1));
            assert!(z(j, i) <= z(j - 1, i));
        }
    }
    let contour = assert_csv(&dir.path().join("scan_contour.csv"), "x,y");
    assert!(!contour.is_empty());
}
