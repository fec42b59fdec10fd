//! Builds the full sixteen-setting benchmark from a small synthetic dataset.
//!
//! cargo run --release --example benchmark_dataset -- /tmp/bench

use std::env;
use std::path::PathBuf;

use lidar_corrupt::cli::{cmd_gen, GenArgs};
use lidar_corrupt::pipeline::{run_corruption, CorruptionSpec, RunOptions};
use lidar_corrupt::ScanManifest;

fn main() -> lidar_corrupt::Result<()> {
    let root = env::args()
        .nth(1)
        .map(PathBuf::from)
        .unwrap_or_else(|| env::temp_dir().join("lidar-corrupt-benchmark"));
    cmd_gen(&GenArgs {
        out: root.join("clean"),
        scans: 3,
        seed: 0,
        beams: 64,
        points_per_beam: 1863,
        zenith_jitter: 0.0,
    })?;
    let manifest_path = root.join("clean/manifest.json");
    let manifest = ScanManifest::load(&manifest_path)?;

    let specs = CorruptionSpec::all_standard();
    let summary = run_corruption(
        &manifest,
        &manifest_path,
        &specs,
        2024,
        &root.join("corrupted"),
        RunOptions::default(),
    )?;
    for spec in &specs {
        println!(
            "{:<26} {}",
            spec.rel_dir().display(),
            serde_json::to_string(&spec.params).unwrap()
        );
    }
    println!(
        "{} scans written under {} ({} failures)",
        summary.written,
        root.join("corrupted").display(),
        summary.failures.len()
    );
    Ok(())
}
