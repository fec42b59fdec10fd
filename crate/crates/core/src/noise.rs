//! Measurement-noise corruptions: global outliers spanning the scene and local Gaussian
//! jitter of a random subset of points. Only coordinates are perturbed.

use rand::seq::index;
use rand::Rng;
use rand_distr::{Distribution, Normal};

use crate::error::{Error, Result};
use crate::labels::{Provenance, ProvenanceSet};
use crate::scan_io::{Point, PointCloud};
use crate::seed;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OutlierParams {
    /// Injected points as a fraction of the clean point count.
    pub ratio: f64,
    pub seed: u64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DistortionParams {
    /// Fraction of points jittered.
    pub fraction: f64,
    /// Per-axis standard deviation of the offsets (m).
    pub sigma: f64,
    pub seed: u64,
}

impl DistortionParams {
    pub fn new(sigma: f64, seed: u64) -> Self {
        DistortionParams {
            fraction: 0.2,
            sigma,
            seed,
        }
    }
}

#[derive(Debug, Clone)]
pub struct NoiseOutput {
    pub cloud: PointCloud,
    pub provenance: ProvenanceSet,
}

/// Uniform sample in the unit ball, by rejection from the enclosing cube.
fn unit_ball<R: Rng + ?Sized>(rng: &mut R) -> [f64; 3] {
    loop {
        let v = [
            rng.random_range(-1.0..1.0),
            rng.random_range(-1.0..1.0),
            rng.random_range(-1.0f64..1.0),
        ];
        if v[0] * v[0] + v[1] * v[1] + v[2] * v[2] <= 1.0 {
            return v;
        }
    }
}

/// Appends `round(ratio * N)` points drawn uniformly in a ball around the sensor whose
/// radius is the clean cloud's maximum range.
pub fn apply_global_outliers(cloud: &PointCloud, params: &OutlierParams) -> Result<NoiseOutput> {
    if cloud.is_empty() {
        return Err(Error::EmptyCloud);
    }
    if !(params.ratio >= 0.0 && params.ratio.is_finite()) {
        return Err(Error::InvalidParameter(format!(
            "outlier ratio {}",
            params.ratio
        )));
    }
    let injected = seed::round_count(params.ratio, cloud.len());
    let scale = cloud.max_range();
    let mut rng = seed::rng(params.seed);

    let mut points = cloud.points.clone();
    points.reserve(injected);
    let mut tags: Vec<Provenance> = (0..cloud.len() as u32).map(Provenance::Original).collect();
    tags.reserve(injected);
    for _ in 0..injected {
        let [x, y, z] = unit_ball(&mut rng);
        let intensity: f32 = rng.random();
        let mut p = Point::new(
            (x * scale) as f32,
            (y * scale) as f32,
            (z * scale) as f32,
            intensity,
        );
        // Keep the f32 rounding from pushing a point past the clean maximum range.
        if p.range() > scale {
            let shrink = scale / p.range();
            p.x = (p.x as f64 * shrink) as f32;
            p.y = (p.y as f64 * shrink) as f32;
            p.z = (p.z as f64 * shrink) as f32;
        }
        points.push(p);
        tags.push(Provenance::Injected);
    }
    Ok(NoiseOutput {
        cloud: PointCloud::new(points),
        provenance: ProvenanceSet::new(tags),
    })
}

/// Jitters exactly `round(fraction * N)` randomly chosen points by i.i.d. `N(0, sigma^2)`
/// offsets per axis. Point order and intensities are preserved.
pub fn apply_local_distortion(
    cloud: &PointCloud,
    params: &DistortionParams,
) -> Result<NoiseOutput> {
    if cloud.is_empty() {
        return Err(Error::EmptyCloud);
    }
    if !(0.0..=1.0).contains(&params.fraction) {
        return Err(Error::InvalidParameter(format!(
            "fraction {} not in [0, 1]",
            params.fraction
        )));
    }
    let normal = Normal::new(0.0, params.sigma)
        .map_err(|_| Error::InvalidParameter(format!("sigma {}", params.sigma)))?;
    let count = seed::round_count(params.fraction, cloud.len());
    let mut rng = seed::rng(params.seed);
    let mut chosen = index::sample(&mut rng, cloud.len(), count).into_vec();
    chosen.sort_unstable();

    let mut points = cloud.points.clone();
    let mut tags: Vec<Provenance> = (0..cloud.len() as u32).map(Provenance::Original).collect();
    for i in chosen {
        let p = &mut points[i];
        p.x = (p.x as f64 + normal.sample(&mut rng)) as f32;
        p.y = (p.y as f64 + normal.sample(&mut rng)) as f32;
        p.z = (p.z as f64 + normal.sample(&mut rng)) as f32;
        tags[i] = Provenance::Displaced(i as u32);
    }
    Ok(NoiseOutput {
        cloud: PointCloud::new(points),
        provenance: ProvenanceSet::new(tags),
    })
}
