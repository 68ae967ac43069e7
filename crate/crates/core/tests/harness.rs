use std::fs;
use std::path::{Path, PathBuf};

use tempfile::TempDir;

use qnes::harness::{run_experiment, ExperimentConfig};
use qnes::trace::RunTrace;

fn presets() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../presets")
}

fn load(name: &str, overrides: &[(&str, &str)], out: &Path) -> ExperimentConfig {
    let pairs: Vec<(String, String)> = overrides.iter().map(|(k, v)| (k.to_string(), v.to_string())).collect();
    let mut c = ExperimentConfig::load(&presets().join(format!("{name}.toml")), &pairs).unwrap();
    c.set_output_dir(out.to_path_buf());
    c
}

#[test]
fn every_preset_loads_and_validates() {
    let mut names: Vec<String> = fs::read_dir(presets())
        .unwrap()
        .map(|e| e.unwrap().path().file_stem().unwrap().to_string_lossy().into_owned())
        .collect();
    names.sort();
    assert_eq!(
        names,
        [
            "batch",
            "compare_gd",
            "hybrid",
            "stateprep",
            "variance_scan",
            "variance_scan_full",
            "vqe_h2"
        ]
    );
    for name in names {
        let c = load(&name, &[], Path::new("unused"));
        c.validate().unwrap_or_else(|e| panic!("{name}: {e}"));
    }
}

#[test]
fn relative_output_resolves_against_config_file() {
    let c = ExperimentConfig::load(&presets().join("stateprep.toml"), &[]).unwrap();
    assert_eq!(c.output_dir(), presets().join("../out/stateprep"));
    let h = ExperimentConfig::load(&presets().join("vqe_h2.toml"), &[]).unwrap();
    assert_eq!(h.hamiltonian().unwrap().num_qubits(), 4);
}

#[test]
fn vqe_reports_ground_energy() {
    let dir = TempDir::new().unwrap();
    let c = load("vqe_h2", &[("seeds", "[0]"), ("max_iterations", "3")], dir.path());
    let report = run_experiment(&c).unwrap();
    assert!(report.notes[0].starts_with("exact_ground_energy = -1.13727017466"));
    let text = fs::read_to_string(dir.path().join("trace_seed0.csv")).unwrap();
    assert!(text.contains("# exact_ground_energy = "));
}

#[test]
fn batch_trace_records_cursor_and_evaluations() {
    let dir = TempDir::new().unwrap();
    let c = load(
        "batch",
        &[
            ("seeds", "[0]"),
            ("max_iterations", "6"),
            ("ansatz.layers", "2"),
            ("ansatz.qubits", "4"),
            ("batch.size", "3"),
        ],
        dir.path(),
    );
    run_experiment(&c).unwrap();
    let t = RunTrace::read_csv_file(&dir.path().join("trace_seed0.csv")).unwrap();
    let cursors: Vec<usize> = t.records.iter().skip(1).map(|r| r.batch_cursor).collect();
    assert_eq!(cursors, vec![0, 1, 2, 0, 1, 2]);
    let evals: Vec<u64> = t.records.iter().map(|r| r.evaluations).collect();
    assert_eq!(evals, vec![0, 16, 32, 48, 64, 80, 96]);
}

#[test]
fn serial_and_parallel_runs_write_identical_data() {
    let data_rows = |dir: &Path, file: &str| -> Vec<String> {
        fs::read_to_string(dir.join(file))
            .unwrap()
            .lines()
            .filter(|l| !l.starts_with('#'))
            .map(String::from)
            .collect()
    };
    let base = [("seeds", "[4, 5]"), ("max_iterations", "5"), ("ansatz.layers", "3")];
    let a = TempDir::new().unwrap();
    let b = TempDir::new().unwrap();
    run_experiment(&load("compare_gd", &base, a.path())).unwrap();
    let mut serial = base.to_vec();
    serial.push(("parallel", "false"));
    run_experiment(&load("compare_gd", &serial, b.path())).unwrap();
    for file in ["trace_snes_seed4.csv", "trace_gd_seed5.csv", "summary_snes.csv"] {
        assert_eq!(data_rows(a.path(), file), data_rows(b.path(), file), "{file}");
    }
}
