#![allow(dead_code)]

use std::path::Path;
use std::process::{Command, Output};

use stable_passage::cli::ExperimentConfig;

/// A battery small enough for a few seconds of work. Its rows are not
/// expected to pass; it exercises plumbing and determinism.
pub fn reduced_config(out: &Path) -> ExperimentConfig {
    let mut c = ExperimentConfig {
        n_samples: 20_000,
        dt: 1e-2,
        horizon: 50.0,
        output_dir: out.to_path_buf(),
        ..Default::default()
    };
    c.grids.time.points = 300;
    let k = &mut c.check;
    k.positivity_samples = 20_000;
    k.fine_dt = 1e-2;
    k.fine_samples = 2_000;
    k.resample_samples = 2_000;
    k.tail_samples = 4_000;
    k.short_samples = 4_000;
    c
}

pub fn write_config(cfg: &ExperimentConfig, path: &Path) {
    std::fs::write(path, serde_json::to_string_pretty(cfg).unwrap()).unwrap();
}

pub fn run_bin(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_stable-passage"))
        .args(args)
        .output()
        .expect("binary runs")
}
