//! Mix3D and instance CutMix between two synthetic scans.
//!
//! cargo run --release --example mixing_augmentations

use std::collections::BTreeSet;

use lidar_corrupt::augment::{instance_cutmix, mix3d, CutMixConfig, LabeledScan};
use lidar_corrupt::seed::rng;
use lidar_corrupt::synth::{generate, SceneSpec, CLASS_CAR, CLASS_POLE};

fn main() -> lidar_corrupt::Result<()> {
    let load = |seed| -> lidar_corrupt::Result<LabeledScan> {
        let s = generate(&SceneSpec::urban(seed))?;
        LabeledScan::new(s.cloud, s.labels)
    };
    let (target, source) = (load(1)?, load(2)?);

    let mixed = mix3d(&target, &source);
    println!(
        "mix3d: {} + {} = {} points",
        target.len(),
        source.len(),
        mixed.len()
    );

    let classes = BTreeSet::from([CLASS_CAR, CLASS_POLE]);
    let out = instance_cutmix(
        &target,
        &source,
        &classes,
        &CutMixConfig::default(),
        &mut rng(9),
    )?;
    for p in &out.pasted {
        println!(
            "pasted class {} instance {} ({} points) at ({:.1}, {:.1}, {:.1})",
            p.class_id, p.instance_id, p.points, p.centroid[0], p.centroid[1], p.centroid[2]
        );
    }
    println!("{} instances skipped for lack of free space", out.skipped);
    Ok(())
}
