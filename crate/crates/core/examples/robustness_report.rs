//! Scores predictions with a confusion matrix and turns per-corruption mIoUs into a
//! robustness report.
//!
//! cargo run --example robustness_report

use lidar_corrupt::metrics::{accumulate, robustness_report, robustness_summary, ConfusionMatrix};
use lidar_corrupt::LabelSet;

fn main() -> lidar_corrupt::Result<()> {
    let gt = LabelSet::new(vec![1, 1, 2, 2, 0, 3, 3, 3]);
    let pred = LabelSet::new(vec![1, 1, 2, 1, 2, 3, 3, 0]);
    let cm = accumulate(ConfusionMatrix::new(4), &gt, &pred)?;
    println!("per-class IoU {:?}, mIoU {:.2}", cm.class_iou(), cm.miou()?);

    // Clean mIoU and six corruption scores of a published model.
    let r = robustness_summary(55.8, &[27.3, 43.6, 49.5, 53.6, 51.1, 31.0])?;
    println!("RmIoU {:.1}, mR {:.1}", r.rmiou, r.mr);

    // Per-intensity scores are averaged within each corruption first.
    let levels = vec![
        ("fog".to_owned(), vec![40.0, 30.0, 20.0]),
        ("snow".to_owned(), vec![45.0, 40.0, 35.0]),
        ("global-outliers".to_owned(), vec![50.0, 45.0, 30.0]),
        ("local-distortion".to_owned(), vec![52.0, 48.0, 41.0]),
        ("cross-device-32".to_owned(), vec![47.0, 46.0]),
        ("cross-device-16".to_owned(), vec![33.0, 31.0]),
    ];
    let r = robustness_report(55.0, &levels)?;
    println!("{}", serde_json::to_string_pretty(&r).unwrap());
    Ok(())
}
