//! Deterministic synthetic labeled scans.
//!
//! A virtual spinning LiDAR at the origin casts `n_beams x points_per_beam` rays against
//! analytic shapes. Beam 0 is the top ring; rings are evenly spaced in zenith and rays
//! evenly spaced in azimuth, so the true beam partition is known exactly.

use std::collections::BTreeMap;
use std::f64::consts::PI;

use rand::Rng;
use rand_distr::{Distribution, Normal};

use crate::error::{Error, Result};
use crate::scan_io::{pack_label, LabelSet, Point, PointCloud};
use crate::seed;

pub const CLASS_CAR: u16 = 1;
pub const CLASS_ROAD: u16 = 9;
pub const CLASS_BUILDING: u16 = 13;
pub const CLASS_POLE: u16 = 18;

/// Sensor mounting height above the ground used by [`SceneSpec::urban`].
pub const SENSOR_HEIGHT: f64 = 1.73;

pub fn default_class_names() -> BTreeMap<u16, String> {
    [
        (0, "unlabeled"),
        (CLASS_CAR, "car"),
        (CLASS_ROAD, "road"),
        (CLASS_BUILDING, "building"),
        (CLASS_POLE, "pole"),
    ]
    .into_iter()
    .map(|(k, v)| (k, v.to_owned()))
    .collect()
}

#[derive(Debug, Clone, PartialEq)]
pub enum Shape {
    /// Horizontal plane `z = height`.
    GroundPlane { height: f64 },
    /// Box rotated by `yaw` about the vertical axis through `center`.
    Box {
        center: [f64; 3],
        half_extents: [f64; 3],
        yaw: f64,
    },
    /// Vertical capped cylinder.
    Pole {
        x: f64,
        y: f64,
        radius: f64,
        z_min: f64,
        z_max: f64,
    },
}

#[derive(Debug, Clone, PartialEq)]
pub struct SceneObject {
    pub shape: Shape,
    pub class_id: u16,
    pub instance_id: u16,
}

/// Infinite vertical cylinder around the sensor catching every ray that misses the objects.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Boundary {
    pub radius: f64,
    pub class_id: u16,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SceneSpec {
    pub n_beams: usize,
    pub points_per_beam: usize,
    pub fov_up_deg: f64,
    pub fov_down_deg: f64,
    pub objects: Vec<SceneObject>,
    pub boundary: Option<Boundary>,
    /// Standard deviation of per-point zenith noise, degrees. Zero gives exact rings.
    pub zenith_jitter_deg: f64,
    pub seed: u64,
}

impl Default for SceneSpec {
    fn default() -> Self {
        SceneSpec {
            n_beams: 64,
            points_per_beam: 1863,
            fov_up_deg: 2.0,
            fov_down_deg: -24.8,
            objects: Vec::new(),
            boundary: None,
            zenith_jitter_deg: 0.0,
            seed: 0,
        }
    }
}

impl SceneSpec {
    /// A street scene: road plane, surrounding building wall, and a seed-dependent set of
    /// cars and poles.
    pub fn urban(seed: u64) -> Self {
        let mut rng = seed::rng(seed ^ 0x5eed_5eed);
        let ground = -SENSOR_HEIGHT;
        let mut objects = vec![SceneObject {
            shape: Shape::GroundPlane { height: ground },
            class_id: CLASS_ROAD,
            instance_id: 0,
        }];
        let mut instance = 1u16;
        for _ in 0..8 {
            let r: f64 = rng.random_range(6.0..35.0);
            let a: f64 = rng.random_range(-PI..PI);
            objects.push(SceneObject {
                shape: Shape::Box {
                    center: [r * a.cos(), r * a.sin(), ground + 0.75],
                    half_extents: [2.1, 0.9, 0.75],
                    yaw: rng.random_range(-PI..PI),
                },
                class_id: CLASS_CAR,
                instance_id: instance,
            });
            instance += 1;
        }
        for _ in 0..6 {
            let r: f64 = rng.random_range(4.0..30.0);
            let a: f64 = rng.random_range(-PI..PI);
            objects.push(SceneObject {
                shape: Shape::Pole {
                    x: r * a.cos(),
                    y: r * a.sin(),
                    radius: 0.15,
                    z_min: ground,
                    z_max: ground + 4.5,
                },
                class_id: CLASS_POLE,
                instance_id: instance,
            });
            instance += 1;
        }
        SceneSpec {
            objects,
            boundary: Some(Boundary {
                radius: 45.0,
                class_id: CLASS_BUILDING,
            }),
            seed,
            ..SceneSpec::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_beams == 0 || self.points_per_beam == 0 {
            return Err(Error::DegenerateSpec(
                "zero beams or zero points per beam".into(),
            ));
        }
        if !(self.fov_up_deg > self.fov_down_deg) {
            return Err(Error::DegenerateSpec(format!(
                "fov_up {} must exceed fov_down {}",
                self.fov_up_deg, self.fov_down_deg
            )));
        }
        if self.fov_up_deg >= 90.0 || self.fov_down_deg <= -90.0 {
            return Err(Error::DegenerateSpec(
                "field of view must stay within (-90, 90) degrees".into(),
            ));
        }
        if !(self.zenith_jitter_deg >= 0.0) {
            return Err(Error::DegenerateSpec("zenith jitter must be >= 0".into()));
        }
        Ok(())
    }

    /// Zenith angle of beam `b` in radians; beam 0 is the highest.
    pub fn beam_zenith(&self, b: usize) -> f64 {
        if self.n_beams == 1 {
            return (0.5 * (self.fov_up_deg + self.fov_down_deg)).to_radians();
        }
        let step = (self.fov_up_deg - self.fov_down_deg) / (self.n_beams - 1) as f64;
        (self.fov_up_deg - b as f64 * step).to_radians()
    }
}

#[derive(Debug, Clone)]
pub struct SyntheticScan {
    pub cloud: PointCloud,
    pub labels: LabelSet,
    /// Generating beam of each point, 0 = top ring.
    pub beam_ids: Vec<u32>,
}

/// Constant reflectivity per class.
pub fn class_intensity(class_id: u16) -> f32 {
    let golden = 0.618_034_f64;
    (0.05 + 0.9 * (class_id as f64 * golden).fract()) as f32
}

fn intersect(shape: &Shape, d: [f64; 3]) -> Option<f64> {
    const EPS: f64 = 1e-9;
    match *shape {
        Shape::GroundPlane { height } => {
            let t = height / d[2];
            (d[2].abs() > EPS && t > EPS).then_some(t)
        }
        Shape::Box {
            center,
            half_extents,
            yaw,
        } => {
            // Ray from the origin expressed in the box frame.
            let (s, c) = (-yaw).sin_cos();
            let o = [-center[0], -center[1], -center[2]];
            let o = [c * o[0] - s * o[1], s * o[0] + c * o[1], o[2]];
            let dir = [c * d[0] - s * d[1], s * d[0] + c * d[1], d[2]];
            let (mut t0, mut t1) = (f64::NEG_INFINITY, f64::INFINITY);
            for k in 0..3 {
                if dir[k].abs() < EPS {
                    if o[k].abs() > half_extents[k] {
                        return None;
                    }
                    continue;
                }
                let a = (-half_extents[k] - o[k]) / dir[k];
                let b = (half_extents[k] - o[k]) / dir[k];
                t0 = t0.max(a.min(b));
                t1 = t1.min(a.max(b));
            }
            (t0 <= t1 && t0 > EPS).then_some(t0)
        }
        Shape::Pole {
            x,
            y,
            radius,
            z_min,
            z_max,
        } => {
            let mut best: Option<f64> = None;
            let a = d[0] * d[0] + d[1] * d[1];
            if a > EPS {
                let b = -2.0 * (d[0] * x + d[1] * y);
                let cc = x * x + y * y - radius * radius;
                let disc = b * b - 4.0 * a * cc;
                if disc >= 0.0 {
                    let t = (-b - disc.sqrt()) / (2.0 * a);
                    let z = t * d[2];
                    if t > EPS && (z_min..=z_max).contains(&z) {
                        best = Some(t);
                    }
                }
            }
            if d[2].abs() > EPS {
                for cap in [z_min, z_max] {
                    let t = cap / d[2];
                    if t > EPS && (t * d[0] - x).hypot(t * d[1] - y) <= radius {
                        best = Some(best.map_or(t, |b: f64| b.min(t)));
                    }
                }
            }
            best
        }
    }
}

/// Casts every ray of `spec` and returns the labeled scan in beam-major order.
pub fn generate(spec: &SceneSpec) -> Result<SyntheticScan> {
    spec.validate()?;
    let n = spec.n_beams * spec.points_per_beam;
    let mut rng = seed::rng(spec.seed);
    let jitter = Normal::new(0.0, spec.zenith_jitter_deg.to_radians())
        .map_err(|e| Error::DegenerateSpec(e.to_string()))?;
    let step = 2.0 * PI / spec.points_per_beam as f64;

    let mut points = Vec::with_capacity(n);
    let mut labels = Vec::with_capacity(n);
    let mut beam_ids = Vec::with_capacity(n);
    for b in 0..spec.n_beams {
        let zenith = spec.beam_zenith(b);
        let phase: f64 = rng.random::<f64>() * step;
        for j in 0..spec.points_per_beam {
            let theta = if spec.zenith_jitter_deg > 0.0 {
                zenith + jitter.sample(&mut rng)
            } else {
                zenith
            };
            let phi = -PI + phase + j as f64 * step;
            let d = [
                theta.cos() * phi.cos(),
                theta.cos() * phi.sin(),
                theta.sin(),
            ];

            let mut hit: Option<(f64, u16, u16)> = None;
            for obj in &spec.objects {
                if let Some(t) = intersect(&obj.shape, d) {
                    if hit.is_none_or(|(bt, _, _)| t < bt) {
                        hit = Some((t, obj.class_id, obj.instance_id));
                    }
                }
            }
            if let Some(bd) = spec.boundary {
                let planar = d[0].hypot(d[1]);
                if planar > 1e-9 {
                    let t = bd.radius / planar;
                    if hit.is_none_or(|(bt, _, _)| t < bt) {
                        hit = Some((t, bd.class_id, 0));
                    }
                }
            }
            let Some((t, class_id, instance_id)) = hit else {
                return Err(Error::DegenerateSpec(format!(
                    "ray (beam {b}, column {j}) hits nothing; add a boundary"
                )));
            };
            points.push(Point::new(
                (t * d[0]) as f32,
                (t * d[1]) as f32,
                (t * d[2]) as f32,
                class_intensity(class_id),
            ));
            labels.push(pack_label(class_id, instance_id));
            beam_ids.push(b as u32);
        }
    }
    Ok(SyntheticScan {
        cloud: PointCloud::new(points),
        labels: LabelSet::new(labels),
        beam_ids,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ground_only() -> SceneSpec {
        SceneSpec {
            n_beams: 8,
            points_per_beam: 90,
            fov_up_deg: -5.0,
            fov_down_deg: -25.0,
            objects: vec![SceneObject {
                shape: Shape::GroundPlane { height: -1.73 },
                class_id: CLASS_ROAD,
                instance_id: 0,
            }],
            ..SceneSpec::default()
        }
    }

    #[test]
    fn kitti_sized_scene_has_expected_count() {
        let scan = generate(&SceneSpec::urban(3)).unwrap();
        assert_eq!(scan.cloud.len(), 119_232);
        assert_eq!(scan.labels.len(), 119_232);
        let mut beams = scan.beam_ids.clone();
        beams.dedup();
        assert_eq!(beams.len(), 64);
    }

    #[test]
    fn single_beam_has_one_zenith() {
        let spec = SceneSpec {
            n_beams: 1,
            points_per_beam: 4,
            boundary: Some(Boundary {
                radius: 10.0,
                class_id: CLASS_BUILDING,
            }),
            ..SceneSpec::default()
        };
        let scan = generate(&spec).unwrap();
        assert_eq!(scan.cloud.len(), 4);
        let zen: Vec<f64> = scan
            .cloud
            .iter()
            .map(|p| (p.z as f64).atan2(p.planar_range()))
            .collect();
        for z in &zen {
            assert!((z - zen[0]).abs() < 1e-6);
        }
    }

    #[test]
    fn ground_only_scene_is_all_ground() {
        let scan = generate(&ground_only()).unwrap();
        assert_eq!(scan.cloud.len(), 720);
        assert!(scan.labels.semantics().all(|c| c == CLASS_ROAD));
        assert!(scan.cloud.iter().all(|p| (p.z + 1.73).abs() < 1e-4));
    }

    #[test]
    fn degenerate_specs_are_rejected() {
        for spec in [
            SceneSpec {
                n_beams: 0,
                ..ground_only()
            },
            SceneSpec {
                points_per_beam: 0,
                ..ground_only()
            },
            SceneSpec {
                fov_up_deg: -30.0,
                ..ground_only()
            },
        ] {
            assert!(matches!(generate(&spec), Err(Error::DegenerateSpec(_))));
        }
        // Upward rays with no boundary escape the scene.
        let open = SceneSpec {
            fov_up_deg: 5.0,
            ..ground_only()
        };
        assert!(matches!(generate(&open), Err(Error::DegenerateSpec(_))));
    }

    #[test]
    fn generation_is_deterministic_in_seed() {
        let a = generate(&SceneSpec::urban(7)).unwrap();
        let b = generate(&SceneSpec::urban(7)).unwrap();
        let c = generate(&SceneSpec::urban(8)).unwrap();
        assert!(a.cloud.bit_eq(&b.cloud));
        assert_eq!(a.labels, b.labels);
        assert!(!a.cloud.bit_eq(&c.cloud));
    }

    #[test]
    fn labels_follow_hit_object() {
        let scan = generate(&SceneSpec::urban(1)).unwrap();
        for (p, &l) in scan.cloud.iter().zip(&scan.labels.labels) {
            match crate::scan_io::semantic(l) {
                CLASS_ROAD => assert!((p.z as f64 + SENSOR_HEIGHT).abs() < 1e-3),
                CLASS_BUILDING => assert!((p.planar_range() - 45.0).abs() < 1e-3),
                CLASS_CAR | CLASS_POLE => assert!(crate::scan_io::instance(l) > 0),
                other => panic!("unexpected class {other}"),
            }
        }
        for class in [CLASS_CAR, CLASS_POLE, CLASS_ROAD, CLASS_BUILDING] {
            assert!(scan.labels.count_class(class) > 0, "class {class} missing");
        }
    }
}
