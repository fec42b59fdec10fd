//! Fog and snowfall on a synthetic scan, at each standard intensity.
//!
//! cargo run --release --example adverse_weather

use lidar_corrupt::labels::{remap_labels, Provenance};
use lidar_corrupt::synth::{generate, SceneSpec};
use lidar_corrupt::weather::{apply_fog, apply_snowfall, FogParams, SnowParams};

fn main() -> lidar_corrupt::Result<()> {
    let scan = generate(&SceneSpec::urban(1))?;
    let mean_intensity = |c: &lidar_corrupt::PointCloud| {
        c.iter().map(|p| p.intensity as f64).sum::<f64>() / c.len() as f64
    };
    println!("clean: mean intensity {:.3}", mean_intensity(&scan.cloud));

    for (level, beta) in [("light", 0.005), ("moderate", 0.06), ("heavy", 0.2)] {
        let out = apply_fog(&scan.cloud, &FogParams::new(beta, 7).with_alpha(0.06))?;
        let labels = remap_labels(&scan.labels, &out.provenance)?;
        println!(
            "fog {level:<8} beta {beta:<5}: {:>6} scatterers, {:>6} ignore labels, mean intensity {:.3}",
            out.provenance.count(|t| t == Provenance::Scatterer),
            labels.count_class(0),
            mean_intensity(&out.cloud)
        );
    }

    // Snowfall needs per-point beam indices; the generator provides the true ones.
    for (level, rate) in [("light", 0.5), ("moderate", 1.5), ("heavy", 2.5)] {
        let params = SnowParams::new(rate, 7);
        let out = apply_snowfall(&scan.cloud, &scan.beam_ids, &params)?;
        println!(
            "snow {level:<8} {rate} mm/h: {:>6} scatterers from {:>6} particles (radius {:.3} m)",
            out.provenance.count(|t| t == Provenance::Scatterer),
            out.particles,
            params.particle_radius()
        );
    }
    Ok(())
}
