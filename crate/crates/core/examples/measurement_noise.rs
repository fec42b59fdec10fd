//! Global outliers and local distortion, with the resulting label remapping.
//!
//! cargo run --release --example measurement_noise

use lidar_corrupt::labels::{remap_labels, Provenance};
use lidar_corrupt::noise::{
    apply_global_outliers, apply_local_distortion, DistortionParams, OutlierParams,
};
use lidar_corrupt::synth::{generate, SceneSpec};

fn main() -> lidar_corrupt::Result<()> {
    let scan = generate(&SceneSpec::urban(3))?;
    let n = scan.cloud.len();

    for ratio in [0.001, 0.05, 0.5] {
        let out = apply_global_outliers(&scan.cloud, &OutlierParams { ratio, seed: 1 })?;
        let labels = remap_labels(&scan.labels, &out.provenance)?;
        println!(
            "outliers {:>5.1}%: {n} -> {} points, {} labeled ignore",
            100.0 * ratio,
            out.cloud.len(),
            labels.count_class(0)
        );
    }

    for sigma in [0.05, 0.1, 0.2] {
        let out = apply_local_distortion(&scan.cloud, &DistortionParams::new(sigma, 1))?;
        let moved: Vec<f64> = scan
            .cloud
            .iter()
            .zip(out.cloud.iter())
            .zip(&out.provenance.tags)
            .filter(|(_, t)| matches!(t, Provenance::Displaced(_)))
            .map(|((a, b), _)| {
                ((a.x - b.x).powi(2) + (a.y - b.y).powi(2) + (a.z - b.z).powi(2)).sqrt() as f64
            })
            .collect();
        println!(
            "distortion sigma {sigma:.2}: {} points moved, mean displacement {:.3} m",
            moved.len(),
            moved.iter().sum::<f64>() / moved.len() as f64
        );
    }
    Ok(())
}
