//! Cross-device beam reduction.
//!
//! Beam labels are recovered by 1-D K-Means over point zenith angles, then whole beams
//! (and optionally every m-th point within a beam, by azimuth) are dropped to mimic a
//! lower-resolution sensor. Both operations only subsample: no kept point is modified.

use crate::error::{Error, Result};
use crate::labels::{Provenance, ProvenanceSet};
use crate::scan_io::{LabelSet, Point, PointCloud};

pub const MAX_LLOYD_ITERATIONS: usize = 100;

/// Zenith `atan(z / sqrt(x^2 + y^2))` and full-quadrant azimuth `atan2(y, x)`, radians.
pub fn spherical_angles(p: &Point) -> Result<(f64, f64)> {
    let theta = zenith(p).map_err(|_| Error::DegeneratePoint {
        index: 0,
        reason: "point at the sensor origin",
    })?;
    if p.x == 0.0 && p.y == 0.0 {
        return Err(Error::DegeneratePoint {
            index: 0,
            reason: "azimuth undefined on the vertical axis",
        });
    }
    Ok((theta, (p.y as f64).atan2(p.x as f64)))
}

/// Zenith angle; defined everywhere except the origin (+-pi/2 on the vertical axis).
pub fn zenith(p: &Point) -> Result<f64> {
    if p.x == 0.0 && p.y == 0.0 && p.z == 0.0 {
        return Err(Error::DegeneratePoint {
            index: 0,
            reason: "point at the sensor origin",
        });
    }
    Ok((p.z as f64).atan2(p.planar_range()))
}

fn azimuth(p: &Point) -> f64 {
    (p.y as f64).atan2(p.x as f64)
}

#[derive(Debug, Clone, PartialEq)]
pub struct BeamAssignment {
    /// Beam of each point, indexing `centers`.
    pub beam_of: Vec<u32>,
    /// Beam zenith centers (radians), strictly increasing.
    pub centers: Vec<f64>,
}

impl BeamAssignment {
    pub fn beam_count(&self) -> usize {
        self.centers.len()
    }

    /// Rank of beam `b` counted from the top ring (highest zenith = 0).
    pub fn rank_from_top(&self, b: u32) -> usize {
        self.centers.len() - 1 - b as usize
    }

    /// Assignment of the points kept by a subsampling step, in output order.
    pub fn restrict(&self, kept: &[usize]) -> BeamAssignment {
        BeamAssignment {
            beam_of: kept.iter().map(|&i| self.beam_of[i]).collect(),
            centers: self.centers.clone(),
        }
    }

    pub fn beam_sizes(&self) -> Vec<usize> {
        let mut sizes = vec![0; self.centers.len()];
        for &b in &self.beam_of {
            sizes[b as usize] += 1;
        }
        sizes
    }
}

/// Lloyd iterations of one K-Means run, exposed for inspection.
#[derive(Debug, Clone, PartialEq)]
pub struct KMeansTrace {
    pub assignment: BeamAssignment,
    pub iterations: usize,
    pub converged: bool,
    /// Within-cluster sum of squared deviations after each assignment step.
    pub objective: Vec<f64>,
}

/// Sorted 1-D values; clusters are contiguous runs, represented by their end offsets.
struct SortedValues {
    order: Vec<usize>,
    values: Vec<f64>,
}

impl SortedValues {
    /// Run end offsets for the nearest-center partition (ties go to the lower center).
    fn partition(&self, centers: &[f64]) -> Vec<usize> {
        let mut ends = Vec::with_capacity(centers.len());
        for w in centers.windows(2) {
            let mid = 0.5 * (w[0] + w[1]);
            ends.push(self.values.partition_point(|&v| v <= mid));
        }
        ends.push(self.values.len());
        ends
    }

    fn runs<'a>(&'a self, ends: &'a [usize]) -> impl Iterator<Item = &'a [f64]> + 'a {
        let mut start = 0;
        ends.iter().map(move |&end| {
            let run = &self.values[start..end];
            start = end;
            run
        })
    }

    fn objective(&self, ends: &[usize], centers: &[f64]) -> f64 {
        self.runs(ends)
            .zip(centers)
            .map(|(run, c)| run.iter().map(|v| (v - c).powi(2)).sum::<f64>())
            .sum()
    }
}

/// 1-D Lloyd K-Means over zenith angles with `k` clusters.
///
/// Centers start at the k evenly spaced quantiles of the sorted zeniths. A cluster that
/// empties is re-seeded at the zenith farthest from its own center (lowest point index on
/// ties). Stops when no assignment changes or after [`MAX_LLOYD_ITERATIONS`].
pub fn kmeans_zenith(cloud: &PointCloud, k: usize) -> Result<KMeansTrace> {
    if k == 0 {
        return Err(Error::InvalidParameter("beam count must be >= 1".into()));
    }
    let mut zen = Vec::with_capacity(cloud.len());
    for (index, p) in cloud.points.iter().enumerate() {
        zen.push(zenith(p).map_err(|_| Error::DegeneratePoint {
            index,
            reason: "point at the sensor origin",
        })?);
    }
    let mut order: Vec<usize> = (0..zen.len()).collect();
    order.sort_by(|&a, &b| zen[a].total_cmp(&zen[b]).then(a.cmp(&b)));
    let values: Vec<f64> = order.iter().map(|&i| zen[i]).collect();
    let distinct =
        values.windows(2).filter(|w| w[0] != w[1]).count() + usize::from(!values.is_empty());
    if distinct < k {
        return Err(Error::TooFewPoints {
            points: distinct,
            k,
        });
    }
    let sorted = SortedValues { order, values };
    let n = sorted.values.len();

    let mut centers: Vec<f64> = (0..k)
        .map(|j| sorted.values[(((j as f64 + 0.5) * n as f64 / k as f64) as usize).min(n - 1)])
        .collect();
    centers.dedup();
    let mut ends = Vec::new();
    let mut objective = Vec::new();
    let mut iterations = 0;
    let mut converged = false;

    while iterations < MAX_LLOYD_ITERATIONS {
        iterations += 1;
        // Quantile init may collide on repeated values; refill until k distinct centers.
        reseed_empty(&sorted, &mut centers, k);
        let new_ends = sorted.partition(&centers);
        if new_ends.windows(2).any(|w| w[0] == w[1]) || new_ends[0] == 0 {
            let kept: Vec<f64> = sorted
                .runs(&new_ends)
                .zip(&centers)
                .filter(|(run, _)| !run.is_empty())
                .map(|(_, &c)| c)
                .collect();
            centers = kept;
            continue;
        }
        objective.push(sorted.objective(&new_ends, &centers));
        if new_ends == ends {
            converged = true;
            break;
        }
        ends = new_ends;
        centers = sorted
            .runs(&ends)
            .map(|run| run.iter().sum::<f64>() / run.len() as f64)
            .collect();
    }
    if ends.is_empty() {
        ends = sorted.partition(&centers);
    }

    let mut beam_of = vec![0u32; n];
    let mut start = 0;
    for (b, &end) in ends.iter().enumerate() {
        for &i in &sorted.order[start..end] {
            beam_of[i] = b as u32;
        }
        start = end;
    }
    Ok(KMeansTrace {
        assignment: BeamAssignment { beam_of, centers },
        iterations,
        converged,
        objective,
    })
}

/// Adds centers at the points farthest from their current centers until there are `k`.
fn reseed_empty(sorted: &SortedValues, centers: &mut Vec<f64>, k: usize) {
    while centers.len() < k {
        let ends = sorted.partition(centers);
        let mut best: Option<(f64, usize, f64)> = None;
        let mut start = 0;
        for (c, &end) in centers.iter().zip(&ends) {
            for pos in start..end {
                let v = sorted.values[pos];
                let d = (v - c).abs();
                let idx = sorted.order[pos];
                if d > 0.0 && best.is_none_or(|(bd, bi, _)| d > bd || (d == bd && idx < bi)) {
                    best = Some((d, idx, v));
                }
            }
            start = end;
        }
        let Some((_, _, v)) = best else { return };
        let at = centers.partition_point(|&c| c < v);
        centers.insert(at, v);
    }
}

/// Beam label of every point via [`kmeans_zenith`].
pub fn assign_beam_labels(cloud: &PointCloud, k: usize) -> Result<BeamAssignment> {
    if cloud.len() < k {
        return Err(Error::TooFewPoints {
            points: cloud.len(),
            k,
        });
    }
    kmeans_zenith(cloud, k).map(|t| t.assignment)
}

#[derive(Debug, Clone)]
pub struct DeviceOutput {
    pub cloud: PointCloud,
    pub labels: LabelSet,
    pub provenance: ProvenanceSet,
    /// Beam assignment of the kept points (same centers as the input).
    pub assignment: BeamAssignment,
}

fn select(
    cloud: &PointCloud,
    labels: &LabelSet,
    assignment: &BeamAssignment,
    kept: Vec<usize>,
) -> DeviceOutput {
    DeviceOutput {
        cloud: kept.iter().map(|&i| cloud.points[i]).collect(),
        labels: kept.iter().map(|&i| labels.labels[i]).collect(),
        provenance: kept
            .iter()
            .map(|&i| Provenance::Original(i as u32))
            .collect(),
        assignment: assignment.restrict(&kept),
    }
}

fn check_aligned(cloud: &PointCloud, labels: &LabelSet, assignment: &BeamAssignment) -> Result<()> {
    labels.check_paired(cloud)?;
    if assignment.beam_of.len() != cloud.len() {
        return Err(Error::MissingBeamIds(format!(
            "{} beam labels for {} points",
            assignment.beam_of.len(),
            cloud.len()
        )));
    }
    Ok(())
}

/// Keeps every `(K / target)`-th beam counting from the top ring.
pub fn reduce_beams(
    cloud: &PointCloud,
    labels: &LabelSet,
    assignment: &BeamAssignment,
    target: usize,
) -> Result<DeviceOutput> {
    check_aligned(cloud, labels, assignment)?;
    let beams = assignment.beam_count();
    if target == 0 || !beams.is_multiple_of(target) {
        return Err(Error::IndivisibleBeamCount { beams, target });
    }
    let step = beams / target;
    let kept = (0..cloud.len())
        .filter(|&i| {
            assignment
                .rank_from_top(assignment.beam_of[i])
                .is_multiple_of(step)
        })
        .collect();
    Ok(select(cloud, labels, assignment, kept))
}

/// Keeps every `m`-th point of each beam in azimuth order, `ceil(n_b / m)` per beam.
pub fn subsample_azimuth(
    cloud: &PointCloud,
    labels: &LabelSet,
    assignment: &BeamAssignment,
    m: usize,
) -> Result<DeviceOutput> {
    check_aligned(cloud, labels, assignment)?;
    if m == 0 {
        return Err(Error::InvalidParameter(
            "keep ratio must be 1/m with m >= 1".into(),
        ));
    }
    let mut per_beam: Vec<Vec<(f64, usize)>> = vec![Vec::new(); assignment.beam_count()];
    for (i, p) in cloud.points.iter().enumerate() {
        per_beam[assignment.beam_of[i] as usize].push((azimuth(p), i));
    }
    let mut kept = Vec::with_capacity(cloud.len() / m + per_beam.len());
    for beam in &mut per_beam {
        beam.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
        kept.extend(beam.iter().step_by(m).map(|&(_, i)| i));
    }
    kept.sort_unstable();
    Ok(select(cloud, labels, assignment, kept))
}
