//! Mixing augmentations: whole-scan Mix3D and instance-level CutMix.

use std::collections::{BTreeMap, BTreeSet};

use rand::Rng;

use crate::error::{Error, Result};
use crate::scan_io::{instance, semantic, LabelSet, Point, PointCloud};

#[derive(Debug, Clone, PartialEq)]
pub struct LabeledScan {
    pub cloud: PointCloud,
    pub labels: LabelSet,
}

impl LabeledScan {
    pub fn new(cloud: PointCloud, labels: LabelSet) -> Result<Self> {
        labels.check_paired(&cloud)?;
        Ok(LabeledScan { cloud, labels })
    }

    pub fn len(&self) -> usize {
        self.cloud.len()
    }

    pub fn is_empty(&self) -> bool {
        self.cloud.is_empty()
    }
}

/// Concatenates two scans in a shared frame, `a` first.
pub fn mix3d(a: &LabeledScan, b: &LabeledScan) -> LabeledScan {
    let mut cloud = a.cloud.clone();
    cloud.points.extend_from_slice(&b.cloud.points);
    let mut labels = a.labels.clone();
    labels.labels.extend_from_slice(&b.labels.labels);
    LabeledScan { cloud, labels }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CutMixConfig {
    pub attempts: usize,
    /// Clearance (m) between a pasted instance's box and non-ground target points.
    pub clearance: f64,
    /// Radius (m) of the neighborhood used to estimate local ground height.
    pub ground_radius: f64,
    /// Target points lower than local ground plus this margin do not count as obstacles.
    pub ground_margin: f64,
}

impl Default for CutMixConfig {
    fn default() -> Self {
        CutMixConfig {
            attempts: 10,
            clearance: 0.5,
            ground_radius: 2.0,
            ground_margin: 0.25,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PastedInstance {
    pub class_id: u16,
    pub instance_id: u16,
    pub points: usize,
    pub centroid: [f64; 3],
}

#[derive(Debug, Clone, PartialEq)]
pub struct CutMixOutput {
    pub scan: LabeledScan,
    pub pasted: Vec<PastedInstance>,
    /// Instances dropped after exhausting placement attempts.
    pub skipped: usize,
}

fn percentile_z(mut z: Vec<f32>, q: f64) -> Option<f64> {
    if z.is_empty() {
        return None;
    }
    let k = ((z.len() - 1) as f64 * q).round() as usize;
    let (_, v, _) = z.select_nth_unstable_by(k, f32::total_cmp);
    Some(*v as f64)
}

struct Bounds {
    min: [f64; 3],
    max: [f64; 3],
}

fn bounds(points: &[Point]) -> Bounds {
    let mut b = Bounds {
        min: [f64::INFINITY; 3],
        max: [f64::NEG_INFINITY; 3],
    };
    for p in points {
        for (k, v) in [p.x, p.y, p.z].into_iter().enumerate() {
            b.min[k] = b.min[k].min(v as f64);
            b.max[k] = b.max[k].max(v as f64);
        }
    }
    b
}

/// Pastes every source instance of the requested classes onto the target's ground.
///
/// Each instance (points grouped by class and instance id, id > 0) is moved so its x-y
/// centroid lands at a random position inside the target's x-y bounds and its lowest point
/// rests on the local ground: the 5th-percentile height of target points within
/// `ground_radius`. Placements whose box comes within `clearance` of a non-ground target
/// point are retried up to `attempts` times, then the instance is skipped.
pub fn instance_cutmix<R: Rng + ?Sized>(
    target: &LabeledScan,
    source: &LabeledScan,
    instance_classes: &BTreeSet<u16>,
    config: &CutMixConfig,
    rng: &mut R,
) -> Result<CutMixOutput> {
    if instance_classes.is_empty() {
        return Ok(CutMixOutput {
            scan: target.clone(),
            pasted: Vec::new(),
            skipped: 0,
        });
    }
    let mut groups: BTreeMap<(u16, u16), Vec<usize>> = BTreeMap::new();
    for (i, &l) in source.labels.labels.iter().enumerate() {
        if instance(l) > 0 && instance_classes.contains(&semantic(l)) {
            groups
                .entry((semantic(l), instance(l)))
                .or_default()
                .push(i);
        }
    }
    if groups.is_empty() {
        return Err(Error::NoInstancesFound);
    }
    if target.is_empty() {
        return Err(Error::EmptyCloud);
    }

    let tb = bounds(&target.cloud.points);
    let global_ground =
        percentile_z(target.cloud.points.iter().map(|p| p.z).collect(), 0.05).unwrap_or(0.0);
    let mut out = target.clone();
    let mut pasted = Vec::new();
    let mut skipped = 0;

    for ((class_id, instance_id), members) in groups {
        let pts: Vec<Point> = members.iter().map(|&i| source.cloud.points[i]).collect();
        let n = pts.len() as f64;
        let cx = pts.iter().map(|p| p.x as f64).sum::<f64>() / n;
        let cy = pts.iter().map(|p| p.y as f64).sum::<f64>() / n;
        let ib = bounds(&pts);

        let mut placed = None;
        for _ in 0..config.attempts {
            let tx = if tb.max[0] > tb.min[0] {
                rng.random_range(tb.min[0]..tb.max[0])
            } else {
                tb.min[0]
            };
            let ty = if tb.max[1] > tb.min[1] {
                rng.random_range(tb.min[1]..tb.max[1])
            } else {
                tb.min[1]
            };
            let near: Vec<f32> = out
                .cloud
                .points
                .iter()
                .filter(|p| (p.x as f64 - tx).hypot(p.y as f64 - ty) <= config.ground_radius)
                .map(|p| p.z)
                .collect();
            let ground = percentile_z(near, 0.05).unwrap_or(global_ground);
            let shift = [tx - cx, ty - cy, ground - ib.min[2]];
            let lo = [
                ib.min[0] + shift[0],
                ib.min[1] + shift[1],
                ib.min[2] + shift[2],
            ];
            let hi = [
                ib.max[0] + shift[0],
                ib.max[1] + shift[1],
                ib.max[2] + shift[2],
            ];
            let blocked = out.cloud.points.iter().any(|p| {
                let v = [p.x as f64, p.y as f64, p.z as f64];
                if v[2] < ground + config.ground_margin {
                    return false;
                }
                let d2: f64 = (0..3)
                    .map(|k| (lo[k] - v[k]).max(v[k] - hi[k]).max(0.0).powi(2))
                    .sum();
                d2 <= config.clearance * config.clearance
            });
            if !blocked {
                placed = Some(shift);
                break;
            }
        }
        let Some(shift) = placed else {
            skipped += 1;
            continue;
        };
        for (&i, p) in members.iter().zip(&pts) {
            out.cloud.points.push(Point::new(
                (p.x as f64 + shift[0]) as f32,
                (p.y as f64 + shift[1]) as f32,
                (p.z as f64 + shift[2]) as f32,
                p.intensity,
            ));
            out.labels.labels.push(source.labels.labels[i]);
        }
        pasted.push(PastedInstance {
            class_id,
            instance_id,
            points: pts.len(),
            centroid: [
                cx + shift[0],
                cy + shift[1],
                pts.iter().map(|p| p.z as f64).sum::<f64>() / n + shift[2],
            ],
        });
    }
    Ok(CutMixOutput {
        scan: out,
        pasted,
        skipped,
    })
}
