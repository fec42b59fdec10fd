//! Range image, polar bird's-eye view and voxel grids of one scan, rendered as PGM images.
//!
//! cargo run --release --example representations -- /tmp/repr

use std::env;
use std::path::PathBuf;

use lidar_corrupt::repr::{
    polar_project, range_project, render_bev_counts, render_range_image, voxelize, Channel,
    PolarBounds, VoxelMode,
};
use lidar_corrupt::synth::{generate, SceneSpec};

fn main() -> lidar_corrupt::Result<()> {
    let out = env::args()
        .nth(1)
        .map(PathBuf::from)
        .unwrap_or_else(env::temp_dir);
    std::fs::create_dir_all(&out).map_err(|e| lidar_corrupt::Error::Io {
        path: out.clone(),
        source: e,
    })?;
    let scan = generate(&SceneSpec::urban(8))?;

    let img = range_project(
        &scan.cloud,
        2048,
        64,
        3f64.to_radians(),
        (-25f64).to_radians(),
    )?;
    render_range_image(&img, Channel::Range, out.join("range.pgm"))?;
    render_range_image(&img, Channel::Intensity, out.join("intensity.pgm"))?;
    println!(
        "range image: {} of {} pixels filled",
        img.valid_count(),
        2048 * 64
    );

    let bev = polar_project(&scan.cloud, 480, 360, &PolarBounds::default(), false)?;
    render_bev_counts(&bev, out.join("bev.pgm"))?;
    println!(
        "polar BEV: {} occupied cells, {} points cropped",
        bev.occupied(),
        bev.dropped
    );

    for mode in [
        VoxelMode::Grid {
            size: [0.01; 3],
            normalize: true,
        },
        VoxelMode::cylinder_default(),
    ] {
        let grid = voxelize(&scan.cloud, mode)?;
        println!("{mode:?}: {} voxels", grid.len());
    }
    println!("images in {}", out.display());
    Ok(())
}
