//! Recovers beam rings by clustering zenith angles, then simulates 32- and 16-beam sensors.
//!
//! cargo run --release --example cross_device

use lidar_corrupt::device::{kmeans_zenith, reduce_beams, subsample_azimuth};
use lidar_corrupt::synth::{generate, SceneSpec};

fn main() -> lidar_corrupt::Result<()> {
    let mut spec = SceneSpec::urban(5);
    spec.zenith_jitter_deg = 0.02;
    let scan = generate(&spec)?;

    let trace = kmeans_zenith(&scan.cloud, 64)?;
    println!(
        "k-means: {} iterations, converged {}, objective {:.3e} -> {:.3e}",
        trace.iterations,
        trace.converged,
        trace.objective.first().unwrap(),
        trace.objective.last().unwrap()
    );
    let beams = trace.assignment;

    for target in [32, 16] {
        let dense = reduce_beams(&scan.cloud, &scan.labels, &beams, target)?;
        let sparse = subsample_azimuth(&dense.cloud, &dense.labels, &dense.assignment, 2)?;
        println!(
            "{target} beams: dense {} points, sparse {} points",
            dense.cloud.len(),
            sparse.cloud.len()
        );
    }
    Ok(())
}
