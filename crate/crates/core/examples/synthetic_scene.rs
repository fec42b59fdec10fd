//! Generates a labeled synthetic scan and writes it in KITTI format.
//!
//! cargo run --example synthetic_scene -- /tmp/scene

use std::env;
use std::path::PathBuf;

use lidar_corrupt::scan_io::{read_scan, write_labels, write_scan};
use lidar_corrupt::synth::{default_class_names, generate, SceneSpec};

fn main() -> lidar_corrupt::Result<()> {
    let out = env::args()
        .nth(1)
        .map(PathBuf::from)
        .unwrap_or_else(env::temp_dir);
    let scan = generate(&SceneSpec::urban(42))?;
    println!(
        "{} points on {} beams",
        scan.cloud.len(),
        1 + scan.beam_ids.iter().max().unwrap()
    );
    for (class, name) in default_class_names() {
        println!("  {name:<10} {:>7}", scan.labels.count_class(class));
    }

    std::fs::create_dir_all(&out).map_err(|e| lidar_corrupt::Error::Io {
        path: out.clone(),
        source: e,
    })?;
    let (bin, label) = (out.join("000000.bin"), out.join("000000.label"));
    write_scan(&scan.cloud, &bin)?;
    write_labels(&scan.labels, &label)?;
    assert!(read_scan(&bin)?.bit_eq(&scan.cloud));
    println!("wrote {} and {}", bin.display(), label.display());
    Ok(())
}
