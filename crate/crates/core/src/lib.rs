//! Corruption benchmark toolkit for LiDAR semantic segmentation.
//!
//! Clean KITTI-format scans are transformed by adverse-weather, measurement-noise and
//! cross-device corruptions. Every corrupted point carries a provenance tag, from which
//! labels are remapped (created points become the ignore class). Predictions are scored
//! with mIoU and aggregated into per-corruption and overall robustness numbers.
//!
//! ```
//! use lidar_corrupt::metrics::robustness_summary;
//!
//! let report = robustness_summary(55.8, &[27.3, 43.6, 49.5, 53.6, 51.1, 31.0]).unwrap();
//! assert!((report.rmiou - 42.683).abs() < 1e-3);
//! ```

// `!(a > b)` comparisons are deliberate: they also reject NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod augment;
pub mod cli;
pub mod device;
pub mod error;
pub mod labels;
pub mod metrics;
pub mod noise;
pub mod pipeline;
pub mod repr;
pub mod scan_io;
pub mod seed;
pub mod synth;
pub mod weather;

pub use error::{Error, Result};
pub use labels::{Provenance, ProvenanceSet};
pub use pipeline::{corrupt_scan, CorruptionParams, CorruptionSpec, Level};
pub use scan_io::{LabelSet, Point, PointCloud, ScanManifest};
