//! Input representations: spherical range images, polar bird's-eye-view grids and sparse
//! voxel maps (Cartesian grid or cylindrical partition), plus PGM rendering.

use std::collections::BTreeMap;
use std::f64::consts::PI;
use std::fs;
use std::path::Path;

use crate::error::{Error, Result};
use crate::scan_io::{Point, PointCloud};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Channel {
    X = 0,
    Y = 1,
    Z = 2,
    Intensity = 3,
    Range = 4,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RangeImage {
    pub width: usize,
    pub height: usize,
    pub fov_up: f64,
    pub fov_down: f64,
    /// Row-major `[x, y, z, intensity, range]` per pixel.
    pub pixels: Vec<[f32; 5]>,
    /// Index of the point stored in each pixel.
    pub source: Vec<Option<u32>>,
}

impl RangeImage {
    pub fn is_valid(&self, row: usize, col: usize) -> bool {
        self.source[row * self.width + col].is_some()
    }

    pub fn get(&self, row: usize, col: usize) -> Option<&[f32; 5]> {
        let k = row * self.width + col;
        self.source[k].map(|_| &self.pixels[k])
    }

    pub fn valid_count(&self) -> usize {
        self.source.iter().filter(|s| s.is_some()).count()
    }
}

/// Range of a point, computed in `f32` exactly as stored in the range channel.
pub fn stored_range(x: f32, y: f32, z: f32) -> f32 {
    ((x as f64).powi(2) + (y as f64).powi(2) + (z as f64).powi(2)).sqrt() as f32
}

/// Pixel of a point in a `width x height` range image, or `None` at the origin.
///
/// Column `floor(0.5 * (1 - atan2(y, x) / pi) * W)`, row
/// `floor((1 - (asin(z / r) - fov_down) / (fov_up - fov_down)) * H)`, both clamped to the
/// image. Row 0 is `fov_up`.
pub fn range_pixel(
    p: &Point,
    width: usize,
    height: usize,
    fov_up: f64,
    fov_down: f64,
) -> Option<(usize, usize)> {
    let r = p.range();
    if r <= 0.0 {
        return None;
    }
    let (x, y, z) = p.xyz_f64();
    let u = 0.5 * (1.0 - y.atan2(x) / PI) * width as f64;
    let v = (1.0 - ((z / r).asin() - fov_down) / (fov_up - fov_down)) * height as f64;
    let col = (u.floor().max(0.0) as usize).min(width - 1);
    let row = (v.floor().max(0.0) as usize).min(height - 1);
    Some((row, col))
}

/// Spherical projection; when several points share a pixel the nearest one wins (lowest
/// index on equal range).
pub fn range_project(
    cloud: &PointCloud,
    width: usize,
    height: usize,
    fov_up: f64,
    fov_down: f64,
) -> Result<RangeImage> {
    if !(fov_up > fov_down) {
        return Err(Error::DegenerateFov {
            up: fov_up,
            down: fov_down,
        });
    }
    if width == 0 || height == 0 {
        return Err(Error::InvalidParameter(format!(
            "image size {width}x{height}"
        )));
    }
    if cloud.is_empty() {
        return Err(Error::EmptyCloud);
    }
    let mut img = RangeImage {
        width,
        height,
        fov_up,
        fov_down,
        pixels: vec![[0.0; 5]; width * height],
        source: vec![None; width * height],
    };
    for (i, p) in cloud.points.iter().enumerate() {
        let Some((row, col)) = range_pixel(p, width, height, fov_up, fov_down) else {
            continue;
        };
        let k = row * width + col;
        let r = stored_range(p.x, p.y, p.z);
        if img.source[k].is_none_or(|_| r < img.pixels[k][4]) {
            img.pixels[k] = [p.x, p.y, p.z, p.intensity, r];
            img.source[k] = Some(i as u32);
        }
    }
    Ok(img)
}

/// Crop box in polar coordinates `(radius, azimuth, z)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PolarBounds {
    pub min: [f64; 3],
    pub max: [f64; 3],
}

impl Default for PolarBounds {
    fn default() -> Self {
        PolarBounds {
            min: [3.0, -PI, -3.0],
            max: [50.0, PI, 1.5],
        }
    }
}

impl PolarBounds {
    fn validate(&self) -> Result<()> {
        if (0..3).all(|k| {
            self.max[k] > self.min[k] && self.min[k].is_finite() && self.max[k].is_finite()
        }) {
            Ok(())
        } else {
            Err(Error::DegenerateBounds(format!(
                "{:?} .. {:?}",
                self.min, self.max
            )))
        }
    }
}

/// Polar coordinates of a point: `(u, v) = (r cos(atan2(y, x)), r sin(atan2(y, x)))` with
/// `r` the full 3-D range (or the planar radius), returned as radius `|(u, v)|`, azimuth
/// `atan2(v, u)` and height `z`.
pub fn polar_coords(p: &Point, planar_radius: bool) -> [f64; 3] {
    let (x, y, z) = p.xyz_f64();
    let r = if planar_radius { x.hypot(y) } else { p.range() };
    let phi = y.atan2(x);
    let (u, v) = (r * phi.cos(), r * phi.sin());
    [u.hypot(v), v.atan2(u), z]
}

fn bin(value: f64, min: f64, max: f64, n: usize) -> Option<usize> {
    if !(value >= min && value <= max) {
        return None;
    }
    Some((((value - min) / (max - min) * n as f64).floor() as usize).min(n - 1))
}

#[derive(Debug, Clone, PartialEq)]
pub struct BevImage {
    /// Radial cells.
    pub height: usize,
    /// Angular cells.
    pub width: usize,
    pub counts: Vec<u32>,
    /// Per-cell sum of `[x, y, z, intensity]`.
    pub sums: Vec<[f64; 4]>,
    pub dropped: usize,
}

impl BevImage {
    pub fn count(&self, row: usize, col: usize) -> u32 {
        self.counts[row * self.width + col]
    }

    pub fn mean(&self, row: usize, col: usize) -> Option<[f64; 4]> {
        let k = row * self.width + col;
        let n = self.counts[k] as f64;
        (n > 0.0).then(|| self.sums[k].map(|s| s / n))
    }

    pub fn occupied(&self) -> usize {
        self.counts.iter().filter(|&&c| c > 0).count()
    }
}

/// Cell of a point in the polar grid; `None` if it falls outside `bounds`.
pub fn polar_cell(
    p: &Point,
    height: usize,
    width: usize,
    bounds: &PolarBounds,
    planar_radius: bool,
) -> Option<(usize, usize)> {
    let [rho, phi, z] = polar_coords(p, planar_radius);
    bin(z, bounds.min[2], bounds.max[2], 1)?;
    Some((
        bin(rho, bounds.min[0], bounds.max[0], height)?,
        bin(phi, bounds.min[1], bounds.max[1], width)?,
    ))
}

/// Bird's-eye-view polar grid: `height` radial by `width` angular cells.
pub fn polar_project(
    cloud: &PointCloud,
    height: usize,
    width: usize,
    bounds: &PolarBounds,
    planar_radius: bool,
) -> Result<BevImage> {
    bounds.validate()?;
    if height == 0 || width == 0 {
        return Err(Error::InvalidParameter(format!(
            "grid size {height}x{width}"
        )));
    }
    let mut img = BevImage {
        height,
        width,
        counts: vec![0; height * width],
        sums: vec![[0.0; 4]; height * width],
        dropped: 0,
    };
    for p in &cloud.points {
        match polar_cell(p, height, width, bounds, planar_radius) {
            Some((row, col)) => {
                let k = row * width + col;
                img.counts[k] += 1;
                let s = &mut img.sums[k];
                s[0] += p.x as f64;
                s[1] += p.y as f64;
                s[2] += p.z as f64;
                s[3] += p.intensity as f64;
            }
            None => img.dropped += 1,
        }
    }
    Ok(img)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum VoxelMode {
    /// Cartesian grid. With `normalize`, points are centered on their bounding-box center,
    /// scaled into the unit sphere and mapped to `[0, 1]` before binning.
    Grid { size: [f64; 3], normalize: bool },
    /// Polar `(radius, azimuth, z)` partition.
    Cylinder { size: [f64; 3], planar_radius: bool },
}

impl VoxelMode {
    pub fn cylinder_default() -> Self {
        VoxelMode::Cylinder {
            size: [0.05, 0.001 * PI, 0.05],
            planar_radius: false,
        }
    }

    fn size(&self) -> [f64; 3] {
        match *self {
            VoxelMode::Grid { size, .. } | VoxelMode::Cylinder { size, .. } => size,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Voxel {
    pub count: usize,
    /// Mean of the member coordinates in the voxelized frame.
    pub mean: [f64; 3],
    /// Mean of the members' original coordinates.
    pub mean_point: [f64; 3],
}

#[derive(Debug, Clone, PartialEq)]
pub struct VoxelGrid {
    pub mode: VoxelMode,
    /// Non-empty voxels only.
    pub voxels: BTreeMap<[i64; 3], Voxel>,
}

impl VoxelGrid {
    pub fn len(&self) -> usize {
        self.voxels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.voxels.is_empty()
    }
}

/// Coordinates each point is binned in, for the given mode.
pub fn voxel_frame(cloud: &PointCloud, mode: &VoxelMode) -> Vec<[f64; 3]> {
    match *mode {
        VoxelMode::Grid {
            normalize: false, ..
        } => cloud.points.iter().map(|p| p.xyz_f64().into()).collect(),
        VoxelMode::Grid {
            normalize: true, ..
        } => {
            let mut lo = [f64::INFINITY; 3];
            let mut hi = [f64::NEG_INFINITY; 3];
            for p in &cloud.points {
                let v: [f64; 3] = p.xyz_f64().into();
                for k in 0..3 {
                    lo[k] = lo[k].min(v[k]);
                    hi[k] = hi[k].max(v[k]);
                }
            }
            let center = [
                0.5 * (lo[0] + hi[0]),
                0.5 * (lo[1] + hi[1]),
                0.5 * (lo[2] + hi[2]),
            ];
            let shifted: Vec<[f64; 3]> = cloud
                .points
                .iter()
                .map(|p| {
                    let (x, y, z) = p.xyz_f64();
                    [x - center[0], y - center[1], z - center[2]]
                })
                .collect();
            let scale = shifted
                .iter()
                .map(|v| (v[0] * v[0] + v[1] * v[1] + v[2] * v[2]).sqrt())
                .fold(0.0, f64::max);
            let scale = if scale > 0.0 { scale } else { 1.0 };
            shifted
                .into_iter()
                .map(|v| v.map(|c| 0.5 * (c / scale + 1.0)))
                .collect()
        }
        VoxelMode::Cylinder { planar_radius, .. } => cloud
            .points
            .iter()
            .map(|p| polar_coords(p, planar_radius))
            .collect(),
    }
}

pub fn voxel_key(v: &[f64; 3], size: &[f64; 3]) -> [i64; 3] {
    [
        (v[0] / size[0]).floor() as i64,
        (v[1] / size[1]).floor() as i64,
        (v[2] / size[2]).floor() as i64,
    ]
}

/// Sparse voxelization. Member sums are taken in sorted coordinate order, so the result
/// does not depend on input order.
pub fn voxelize(cloud: &PointCloud, mode: VoxelMode) -> Result<VoxelGrid> {
    if cloud.is_empty() {
        return Err(Error::EmptyCloud);
    }
    let size = mode.size();
    if !size.iter().all(|&s| s > 0.0 && s.is_finite()) {
        return Err(Error::InvalidParameter(format!("voxel size {size:?}")));
    }
    let frame = voxel_frame(cloud, &mode);
    // Per voxel: (voxelized coordinates, original coordinates) of each member.
    type Members = Vec<([f64; 3], [f64; 3])>;
    let mut members: BTreeMap<[i64; 3], Members> = BTreeMap::new();
    for (v, p) in frame.iter().zip(&cloud.points) {
        members
            .entry(voxel_key(v, &size))
            .or_default()
            .push((*v, p.xyz_f64().into()));
    }
    let cmp3 = |a: &[f64; 3], b: &[f64; 3]| {
        a[0].total_cmp(&b[0])
            .then(a[1].total_cmp(&b[1]))
            .then(a[2].total_cmp(&b[2]))
    };
    let voxels = members
        .into_iter()
        .map(|(key, mut m)| {
            m.sort_by(|a, b| cmp3(&a.0, &b.0).then(cmp3(&a.1, &b.1)));
            let n = m.len() as f64;
            let mut mean = [0.0; 3];
            let mut mean_point = [0.0; 3];
            for (v, p) in &m {
                for k in 0..3 {
                    mean[k] += v[k];
                    mean_point[k] += p[k];
                }
            }
            (
                key,
                Voxel {
                    count: m.len(),
                    mean: mean.map(|s| s / n),
                    mean_point: mean_point.map(|s| s / n),
                },
            )
        })
        .collect();
    Ok(VoxelGrid { mode, voxels })
}

/// Binary PGM (`P5`) with an 8-bit maxval.
pub fn encode_pgm(width: usize, height: usize, gray: &[u8]) -> Vec<u8> {
    let mut out = format!("P5\n{width} {height}\n255\n").into_bytes();
    out.extend_from_slice(gray);
    out
}

/// Min-max normalizes valid values into `1..=255`; invalid pixels are 0, and a constant
/// image renders as uniform mid-gray.
pub fn normalize_gray(values: &[Option<f64>]) -> Vec<u8> {
    let (lo, hi) = values
        .iter()
        .flatten()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &v| {
            (lo.min(v), hi.max(v))
        });
    values
        .iter()
        .map(|v| match v {
            None => 0,
            Some(_) if hi <= lo => 128,
            Some(v) => (1.0 + ((v - lo) / (hi - lo) * 254.0).round()) as u8,
        })
        .collect()
}

pub fn range_image_gray(img: &RangeImage, channel: Channel) -> Result<Vec<u8>> {
    if !matches!(channel, Channel::Range | Channel::Intensity) {
        return Err(Error::InvalidParameter(
            "render channel must be range or intensity".into(),
        ));
    }
    let values: Vec<Option<f64>> = img
        .pixels
        .iter()
        .zip(&img.source)
        .map(|(px, s)| s.map(|_| px[channel as usize] as f64))
        .collect();
    Ok(normalize_gray(&values))
}

pub fn render_range_image(
    img: &RangeImage,
    channel: Channel,
    path: impl AsRef<Path>,
) -> Result<()> {
    let gray = range_image_gray(img, channel)?;
    let path = path.as_ref();
    fs::write(path, encode_pgm(img.width, img.height, &gray)).map_err(|e| Error::io(path, e))
}

/// Point counts per BEV cell as a PGM.
pub fn render_bev_counts(img: &BevImage, path: impl AsRef<Path>) -> Result<()> {
    let values: Vec<Option<f64>> = img
        .counts
        .iter()
        .map(|&c| (c > 0).then_some(c as f64))
        .collect();
    let path = path.as_ref();
    fs::write(
        path,
        encode_pgm(img.width, img.height, &normalize_gray(&values)),
    )
    .map_err(|e| Error::io(path, e))
}
