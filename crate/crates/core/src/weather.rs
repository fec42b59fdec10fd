//! Fog and snowfall corruptions.
//!
//! Fog: every return is attenuated by two-way extinction, and a backscattered soft return
//! on the sensor-to-point segment replaces it when the soft return is the stronger one.
//!
//! Snow: opaque spherical particles are sampled per beam in the plane swept by that beam.
//! A ray whose nearest particle surface lies before its original return reports the
//! particle instead.

use std::collections::BTreeMap;
use std::f64::consts::PI;

use rand::Rng;
use rand_distr::{Distribution, Poisson, StandardNormal};

use crate::error::{Error, Result};
use crate::labels::{Provenance, ProvenanceSet};
use crate::scan_io::{Point, PointCloud};
use crate::seed;

/// Attenuation coefficients (1/m) sampled per scan when none is pinned.
pub const FOG_ALPHAS: [f64; 6] = [0.0, 0.005, 0.01, 0.02, 0.03, 0.06];

#[derive(Debug, Clone, PartialEq)]
pub struct FogParams {
    /// Attenuation coefficient (1/m). `None` draws one of [`FOG_ALPHAS`] from the seed.
    pub alpha: Option<f64>,
    /// Backscattering coefficient.
    pub beta: f64,
    /// Range (m) at which the backscatter kernel peaks.
    pub peak_range: f64,
    /// Sigma of the multiplicative log-normal jitter on the soft response.
    pub jitter_sigma: f64,
    pub seed: u64,
}

impl FogParams {
    pub fn new(beta: f64, seed: u64) -> Self {
        FogParams {
            alpha: None,
            beta,
            peak_range: 4.0,
            jitter_sigma: 0.3,
            seed,
        }
    }

    pub fn with_alpha(mut self, alpha: f64) -> Self {
        self.alpha = Some(alpha);
        self
    }

    fn validate(&self) -> Result<()> {
        let ok = self.beta >= 0.0
            && self.alpha.is_none_or(|a| a >= 0.0 && a.is_finite())
            && self.peak_range > 0.0
            && self.jitter_sigma >= 0.0;
        if !ok || !self.beta.is_finite() {
            return Err(Error::InvalidParameter(format!(
                "invalid fog parameters {self:?}"
            )));
        }
        Ok(())
    }
}

/// Hard-target intensity after two-way extinction over `range` meters.
pub fn attenuated_response(intensity: f64, range: f64, alpha: f64) -> f64 {
    intensity * (-2.0 * alpha * range).exp()
}

/// Received-power kernel of the fog volume along a ray, normalized to 1 at `peak`.
fn backscatter_kernel(range: f64, peak: f64) -> f64 {
    let u = range / peak;
    u * (1.0 - u).exp()
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SoftReturn {
    pub intensity: f64,
    /// Fraction `t` of the original point's position: the return sits at `t * p`.
    pub fraction: f64,
}

impl SoftReturn {
    pub fn position(&self, p: &Point) -> [f64; 3] {
        let (x, y, z) = p.xyz_f64();
        [self.fraction * x, self.fraction * y, self.fraction * z]
    }
}

/// Strongest fog return along the ray to `p`.
///
/// The soft return sits at the kernel peak, kept strictly inside the segment; its
/// intensity is `i * beta * kernel * exp(sigma * z)` with `z ~ N(0, 1)` drawn from `rng`
/// (exactly one draw per call), clamped to `[0, 1]`.
pub fn soft_response<R: Rng + ?Sized>(p: &Point, params: &FogParams, rng: &mut R) -> SoftReturn {
    let z: f64 = rng.sample(StandardNormal);
    let range = p.range();
    if range <= 0.0 {
        return SoftReturn {
            intensity: 0.0,
            fraction: 0.0,
        };
    }
    let soft_range = params.peak_range.min(0.95 * range);
    let intensity = p.intensity as f64
        * params.beta
        * backscatter_kernel(soft_range, params.peak_range)
        * (params.jitter_sigma * z).exp();
    SoftReturn {
        intensity: intensity.clamp(0.0, 1.0),
        fraction: soft_range / range,
    }
}

/// The attenuation coefficient a fog run with these parameters uses.
pub fn resolve_fog_alpha<R: Rng + ?Sized>(params: &FogParams, rng: &mut R) -> f64 {
    // Always draw so the downstream stream does not depend on whether alpha is pinned.
    let drawn = FOG_ALPHAS[rng.random_range(0..FOG_ALPHAS.len())];
    params.alpha.unwrap_or(drawn)
}

#[derive(Debug, Clone)]
pub struct FogOutput {
    pub cloud: PointCloud,
    pub provenance: ProvenanceSet,
    pub alpha: f64,
}

pub fn apply_fog(cloud: &PointCloud, params: &FogParams) -> Result<FogOutput> {
    params.validate()?;
    let mut rng = seed::rng(params.seed);
    let alpha = resolve_fog_alpha(params, &mut rng);
    let mut points = Vec::with_capacity(cloud.len());
    let mut tags = Vec::with_capacity(cloud.len());
    for (i, p) in cloud.points.iter().enumerate() {
        let hard = attenuated_response(p.intensity as f64, p.range(), alpha);
        let soft = soft_response(p, params, &mut rng);
        if soft.intensity > hard {
            let [x, y, z] = soft.position(p);
            points.push(Point::new(
                x as f32,
                y as f32,
                z as f32,
                soft.intensity as f32,
            ));
            tags.push(Provenance::Scatterer);
        } else {
            points.push(Point {
                intensity: hard as f32,
                ..*p
            });
            tags.push(Provenance::Original(i as u32));
        }
    }
    Ok(FogOutput {
        cloud: PointCloud::new(points),
        provenance: ProvenanceSet::new(tags),
        alpha,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct SnowParams {
    /// Snowfall rate, mm/h.
    pub rate: f64,
    pub seed: u64,
    /// Asymptotic particle hits per meter of ray at high snowfall rates.
    pub saturation_density: f64,
    /// Rate (mm/h) at which the hit density reaches half of saturation.
    pub half_saturation_rate: f64,
    /// Particles closer than this (m) are below the sensor's minimum range.
    pub min_range: f64,
    /// Beam footprint half-width at the sensor (m).
    pub footprint: f64,
    /// Beam half-divergence (rad).
    pub divergence: f64,
    /// Reflectivity of a fully occluding snow particle.
    pub albedo: f64,
    pub wet_ground: bool,
}

impl SnowParams {
    pub fn new(rate: f64, seed: u64) -> Self {
        SnowParams {
            rate,
            seed,
            saturation_density: 0.005,
            half_saturation_rate: 0.1,
            min_range: 1.0,
            footprint: 0.005,
            divergence: 0.0015,
            albedo: 0.9,
            wet_ground: false,
        }
    }

    /// Particle radius (m); grows linearly with the rate.
    pub fn particle_radius(&self) -> f64 {
        0.01 * (1.0 + self.rate)
    }

    /// Expected particle hits per meter of ray; also the extinction coefficient.
    pub fn hit_density(&self) -> f64 {
        self.saturation_density * self.rate / (self.rate + self.half_saturation_rate)
    }

    /// Particle centers per square meter of a beam's sweep surface.
    pub fn areal_density(&self) -> f64 {
        self.hit_density() / (2.0 * self.particle_radius())
    }

    fn validate(&self) -> Result<()> {
        let ok = self.rate > 0.0
            && self.rate.is_finite()
            && self.saturation_density >= 0.0
            && self.half_saturation_rate > 0.0
            && self.min_range >= 0.0
            && self.footprint > 0.0
            && self.divergence >= 0.0
            && (0.0..=1.0).contains(&self.albedo);
        if !ok {
            return Err(Error::InvalidParameter(format!(
                "invalid snow parameters {self:?}"
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone)]
pub struct SnowOutput {
    pub cloud: PointCloud,
    pub provenance: ProvenanceSet,
    pub particles: usize,
}

struct Ray {
    index: usize,
    azimuth: f64,
    range: f64,
}

/// Distance along each ray to its nearest particle surface.
type Hits = Vec<Option<f64>>;

fn sample_beam_particles<R: Rng + ?Sized>(
    rays: &[Ray],
    params: &SnowParams,
    rng: &mut R,
    hits: &mut Hits,
) -> usize {
    let r_max = rays.iter().map(|r| r.range).fold(0.0, f64::max);
    let r_min = params.min_range;
    let density = params.areal_density();
    if r_max <= r_min || density <= 0.0 {
        return 0;
    }
    let mean = density * PI * (r_max * r_max - r_min * r_min);
    let count = match Poisson::new(mean) {
        Ok(p) => p.sample(rng) as usize,
        Err(_) => 0,
    };
    let rho = params.particle_radius();
    let azimuths: Vec<f64> = rays.iter().map(|r| r.azimuth).collect();
    for _ in 0..count {
        let u: f64 = rng.random();
        let r = (r_min * r_min + u * (r_max * r_max - r_min * r_min)).sqrt();
        let phi = rng.random_range(-PI..PI);
        let half = (rho / r).min(1.0).asin();
        // Rays within `half` of `phi`, with wrap-around at +-pi.
        let mut windows = vec![(phi - half, phi + half)];
        if phi - half < -PI {
            windows.push((phi - half + 2.0 * PI, PI));
        }
        if phi + half > PI {
            windows.push((-PI, phi + half - 2.0 * PI));
        }
        for (lo, hi) in windows {
            let start = azimuths.partition_point(|&a| a < lo);
            for (k, ray) in rays.iter().enumerate().skip(start) {
                if ray.azimuth > hi {
                    break;
                }
                let delta = ray.azimuth - phi;
                let lateral = r * delta.sin().abs();
                if lateral > rho {
                    continue;
                }
                let t = r * delta.cos() - (rho * rho - lateral * lateral).sqrt();
                if t <= 0.0 || t >= ray.range {
                    continue;
                }
                let slot = &mut hits[rays[k].index];
                if slot.is_none_or(|best| t < best) {
                    *slot = Some(t);
                }
            }
        }
    }
    count
}

/// Lowest 5th-percentile height of the scene.
fn ground_level(cloud: &PointCloud) -> f64 {
    let mut z: Vec<f32> = cloud.points.iter().map(|p| p.z).collect();
    let k = ((z.len() as f64 - 1.0) * 0.05).round() as usize;
    let (_, v, _) = z.select_nth_unstable_by(k, f32::total_cmp);
    *v as f64
}

pub fn apply_snowfall(
    cloud: &PointCloud,
    beam_ids: &[u32],
    params: &SnowParams,
) -> Result<SnowOutput> {
    params.validate()?;
    if beam_ids.len() != cloud.len() {
        return Err(Error::MissingBeamIds(format!(
            "{} beam ids for {} points",
            beam_ids.len(),
            cloud.len()
        )));
    }
    let mut rng = seed::rng(params.seed);

    let mut beams: BTreeMap<u32, Vec<Ray>> = BTreeMap::new();
    for (index, (p, &b)) in cloud.points.iter().zip(beam_ids).enumerate() {
        beams.entry(b).or_default().push(Ray {
            index,
            azimuth: (p.y as f64).atan2(p.x as f64),
            range: p.range(),
        });
    }
    let mut hits: Hits = vec![None; cloud.len()];
    let mut particles = 0;
    for rays in beams.values_mut() {
        rays.sort_by(|a, b| a.azimuth.total_cmp(&b.azimuth).then(a.index.cmp(&b.index)));
        particles += sample_beam_particles(rays, params, &mut rng, &mut hits);
    }

    let extinction = params.hit_density();
    let rho = params.particle_radius();
    let wet_level = (params.wet_ground && !cloud.is_empty()).then(|| ground_level(cloud));
    let mut points = Vec::with_capacity(cloud.len());
    let mut tags = Vec::with_capacity(cloud.len());
    for (i, p) in cloud.points.iter().enumerate() {
        match hits[i] {
            Some(t) => {
                let fraction = t / p.range();
                let occluded = (rho / (params.footprint + t * params.divergence)).min(1.0);
                let intensity = params.albedo * occluded * (-2.0 * extinction * t).exp();
                let (x, y, z) = p.xyz_f64();
                points.push(Point::new(
                    (fraction * x) as f32,
                    (fraction * y) as f32,
                    (fraction * z) as f32,
                    intensity as f32,
                ));
                tags.push(Provenance::Scatterer);
            }
            None => {
                let mut intensity = attenuated_response(p.intensity as f64, p.range(), extinction);
                if wet_level.is_some_and(|g| (p.z as f64) <= g + 0.3) {
                    intensity *= 0.7;
                }
                points.push(Point {
                    intensity: intensity as f32,
                    ..*p
                });
                tags.push(Provenance::Original(i as u32));
            }
        }
    }
    Ok(SnowOutput {
        cloud: PointCloud::new(points),
        provenance: ProvenanceSet::new(tags),
        particles,
    })
}
