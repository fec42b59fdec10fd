//! KITTI-format scans, SemanticKITTI-format labels and JSON dataset manifests.
//!
//! ```text
//! scan file   N x 16 bytes   [x:f32 | y:f32 | z:f32 | intensity:f32]  little-endian
//! label file  N x 4 bytes    [semantic:u16 | instance:u16]            little-endian u32
//! ```

use std::collections::{BTreeMap, HashSet};
use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Semantic class reserved for unlabeled / ignored points.
pub const IGNORE_CLASS: u16 = 0;

const POINT_STRIDE: usize = 16;

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Point {
    pub x: f32,
    pub y: f32,
    pub z: f32,
    pub intensity: f32,
}

impl Point {
    pub const fn new(x: f32, y: f32, z: f32, intensity: f32) -> Self {
        Point { x, y, z, intensity }
    }

    pub fn is_finite(&self) -> bool {
        self.x.is_finite() && self.y.is_finite() && self.z.is_finite() && self.intensity.is_finite()
    }

    /// Euclidean distance from the sensor origin.
    pub fn range(&self) -> f64 {
        let (x, y, z) = self.xyz_f64();
        (x * x + y * y + z * z).sqrt()
    }

    pub fn planar_range(&self) -> f64 {
        (self.x as f64).hypot(self.y as f64)
    }

    pub fn xyz_f64(&self) -> (f64, f64, f64) {
        (self.x as f64, self.y as f64, self.z as f64)
    }

    fn bit_pattern(&self) -> [u32; 4] {
        [
            self.x.to_bits(),
            self.y.to_bits(),
            self.z.to_bits(),
            self.intensity.to_bits(),
        ]
    }
}

/// An ordered scan in the sensor-ego frame.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct PointCloud {
    pub points: Vec<Point>,
}

impl PointCloud {
    pub fn new(points: Vec<Point>) -> Self {
        PointCloud { points }
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn iter(&self) -> std::slice::Iter<'_, Point> {
        self.points.iter()
    }

    /// Fails on the first point carrying NaN or infinity.
    pub fn check_finite(&self) -> Result<()> {
        match self.points.iter().position(|p| !p.is_finite()) {
            Some(index) => Err(Error::NonFinitePoint { index }),
            None => Ok(()),
        }
    }

    pub fn max_range(&self) -> f64 {
        self.points.iter().map(Point::range).fold(0.0, f64::max)
    }

    /// Bitwise equality, so that `-0.0 != 0.0` and NaN payloads are compared exactly.
    pub fn bit_eq(&self, other: &PointCloud) -> bool {
        self.len() == other.len()
            && self
                .points
                .iter()
                .zip(&other.points)
                .all(|(a, b)| a.bit_pattern() == b.bit_pattern())
    }

    pub fn to_bytes(&self) -> Vec<u8> {
        let mut out = Vec::with_capacity(self.len() * POINT_STRIDE);
        for p in &self.points {
            out.extend_from_slice(&p.x.to_le_bytes());
            out.extend_from_slice(&p.y.to_le_bytes());
            out.extend_from_slice(&p.z.to_le_bytes());
            out.extend_from_slice(&p.intensity.to_le_bytes());
        }
        out
    }
}

impl FromIterator<Point> for PointCloud {
    fn from_iter<I: IntoIterator<Item = Point>>(iter: I) -> Self {
        PointCloud::new(iter.into_iter().collect())
    }
}

/// Result of decoding a scan, with the number of intensities clamped into `[0, 1]`.
#[derive(Debug, Clone, PartialEq)]
pub struct DecodedScan {
    pub cloud: PointCloud,
    pub clamped: usize,
}

pub fn decode_scan(bytes: &[u8]) -> Result<DecodedScan> {
    if !bytes.len().is_multiple_of(POINT_STRIDE) {
        return Err(Error::SizeNotMultipleOf16(bytes.len() as u64));
    }
    let mut clamped = 0;
    let mut points = Vec::with_capacity(bytes.len() / POINT_STRIDE);
    for (index, chunk) in bytes.chunks_exact(POINT_STRIDE).enumerate() {
        let f = |o: usize| f32::from_le_bytes([chunk[o], chunk[o + 1], chunk[o + 2], chunk[o + 3]]);
        let mut p = Point::new(f(0), f(4), f(8), f(12));
        if !p.is_finite() {
            return Err(Error::NonFinitePoint { index });
        }
        if p.intensity > 1.0 || p.intensity < 0.0 {
            p.intensity = p.intensity.clamp(0.0, 1.0);
            clamped += 1;
        }
        points.push(p);
    }
    Ok(DecodedScan {
        cloud: PointCloud::new(points),
        clamped,
    })
}

/// Reads a scan, clamping out-of-range intensities (see [`read_scan_with_stats`] for the count).
pub fn read_scan(path: impl AsRef<Path>) -> Result<PointCloud> {
    read_scan_with_stats(path).map(|d| d.cloud)
}

pub fn read_scan_with_stats(path: impl AsRef<Path>) -> Result<DecodedScan> {
    let path = path.as_ref();
    let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
    let decoded = decode_scan(&bytes)?;
    if decoded.clamped > 0 {
        log::warn!(
            "{}: clamped {} intensities into [0, 1]",
            path.display(),
            decoded.clamped
        );
    }
    Ok(decoded)
}

pub fn write_scan(cloud: &PointCloud, path: impl AsRef<Path>) -> Result<()> {
    cloud.check_finite()?;
    let path = path.as_ref();
    fs::write(path, cloud.to_bytes()).map_err(|e| Error::io(path, e))
}

/// Per-point packed labels: low 16 bits semantic class, high 16 bits instance id.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct LabelSet {
    pub labels: Vec<u32>,
}

pub const fn semantic(label: u32) -> u16 {
    (label & 0xFFFF) as u16
}

pub const fn instance(label: u32) -> u16 {
    (label >> 16) as u16
}

pub const fn pack_label(semantic: u16, instance: u16) -> u32 {
    ((instance as u32) << 16) | semantic as u32
}

impl LabelSet {
    pub fn new(labels: Vec<u32>) -> Self {
        LabelSet { labels }
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn semantic(&self, i: usize) -> u16 {
        semantic(self.labels[i])
    }

    pub fn instance(&self, i: usize) -> u16 {
        instance(self.labels[i])
    }

    pub fn semantics(&self) -> impl Iterator<Item = u16> + '_ {
        self.labels.iter().map(|&l| semantic(l))
    }

    pub fn count_class(&self, class: u16) -> usize {
        self.semantics().filter(|&c| c == class).count()
    }

    /// Rejects a pairing whose length differs from the cloud's.
    pub fn check_paired(&self, cloud: &PointCloud) -> Result<()> {
        if self.len() != cloud.len() {
            return Err(Error::LengthMismatch {
                what: "label set",
                expected: cloud.len(),
                got: self.len(),
            });
        }
        Ok(())
    }

    pub fn to_bytes(&self) -> Vec<u8> {
        self.labels.iter().flat_map(|l| l.to_le_bytes()).collect()
    }
}

impl FromIterator<u32> for LabelSet {
    fn from_iter<I: IntoIterator<Item = u32>>(iter: I) -> Self {
        LabelSet::new(iter.into_iter().collect())
    }
}

pub fn decode_labels(bytes: &[u8]) -> Result<LabelSet> {
    if !bytes.len().is_multiple_of(4) {
        return Err(Error::SizeNotMultipleOf4(bytes.len() as u64));
    }
    Ok(bytes
        .chunks_exact(4)
        .map(|c| u32::from_le_bytes([c[0], c[1], c[2], c[3]]))
        .collect())
}

pub fn read_labels(path: impl AsRef<Path>) -> Result<LabelSet> {
    let path = path.as_ref();
    let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
    decode_labels(&bytes)
}

pub fn write_labels(labels: &LabelSet, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    fs::write(path, labels.to_bytes()).map_err(|e| Error::io(path, e))
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ManifestEntry {
    pub scan_id: String,
    pub scan_path: PathBuf,
    pub label_path: PathBuf,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct DatasetMetadata {
    pub dataset_name: String,
    /// Class id to human-readable name. Class 0 is the ignore class.
    #[serde(default)]
    pub class_names: BTreeMap<u16, String>,
}

/// A list of scan/label pairs. Relative paths resolve against the manifest's directory.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ScanManifest {
    pub metadata: DatasetMetadata,
    pub entries: Vec<ManifestEntry>,
    #[serde(skip)]
    pub root: PathBuf,
}

impl ScanManifest {
    pub fn new(metadata: DatasetMetadata) -> Self {
        ScanManifest {
            metadata,
            entries: Vec::new(),
            root: PathBuf::new(),
        }
    }

    pub fn scan_path(&self, entry: &ManifestEntry) -> PathBuf {
        self.root.join(&entry.scan_path)
    }

    pub fn label_path(&self, entry: &ManifestEntry) -> PathBuf {
        self.root.join(&entry.label_path)
    }

    pub fn validate(&self) -> Result<()> {
        let mut seen = HashSet::new();
        for e in &self.entries {
            if !seen.insert(e.scan_id.as_str()) {
                return Err(Error::Manifest(format!(
                    "duplicate scan_id {:?}",
                    e.scan_id
                )));
            }
            for p in [self.scan_path(e), self.label_path(e)] {
                if !p.exists() {
                    return Err(Error::Manifest(format!(
                        "scan {:?} references missing file {}",
                        e.scan_id,
                        p.display()
                    )));
                }
            }
        }
        Ok(())
    }

    /// Loads and validates a manifest: unique ids and every referenced file present.
    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let mut manifest: ScanManifest =
            serde_json::from_str(&text).map_err(|source| Error::Json {
                path: path.to_owned(),
                source,
            })?;
        manifest.root = path.parent().map(Path::to_owned).unwrap_or_default();
        manifest.validate()?;
        Ok(manifest)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        let text = serde_json::to_string_pretty(self).map_err(|source| Error::Json {
            path: path.to_owned(),
            source,
        })?;
        fs::write(path, text + "\n").map_err(|e| Error::io(path, e))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_bytes_decode_to_empty_cloud() {
        let d = decode_scan(&[]).unwrap();
        assert!(d.cloud.is_empty());
        assert_eq!(d.clamped, 0);
    }

    #[test]
    fn truncated_scan_is_rejected() {
        assert!(matches!(
            decode_scan(&[0u8; 17]),
            Err(Error::SizeNotMultipleOf16(17))
        ));
    }

    #[test]
    fn nan_reports_its_index() {
        let mut bytes = PointCloud::new(vec![Point::new(1.0, 2.0, 3.0, 0.5); 3]).to_bytes();
        bytes[2 * 16 + 4..2 * 16 + 8].copy_from_slice(&f32::NAN.to_le_bytes());
        assert!(matches!(
            decode_scan(&bytes),
            Err(Error::NonFinitePoint { index: 2 })
        ));
    }

    #[test]
    fn out_of_range_intensity_is_clamped_and_counted() {
        let cloud = PointCloud::new(vec![
            Point::new(0.0, 0.0, 0.0, 1.02),
            Point::new(0.0, 0.0, 0.0, -0.1),
            Point::new(0.0, 0.0, 0.0, 0.3),
        ]);
        let d = decode_scan(&cloud.to_bytes()).unwrap();
        assert_eq!(d.clamped, 2);
        assert_eq!(d.cloud.points[0].intensity, 1.0);
        assert_eq!(d.cloud.points[1].intensity, 0.0);
        assert_eq!(d.cloud.points[2].intensity, 0.3);
    }

    #[test]
    fn half_intensity_encodes_as_ieee754() {
        let cloud = PointCloud::new(vec![Point::new(0.0, 0.0, 0.0, 0.5)]);
        assert_eq!(&cloud.to_bytes()[12..16], &[0x00, 0x00, 0x00, 0x3F]);
    }

    #[test]
    fn label_bit_split() {
        assert_eq!(semantic(0x0001_0009), 9);
        assert_eq!(instance(0x0001_0009), 1);
        assert_eq!(pack_label(9, 1), 0x0001_0009);
    }

    #[test]
    fn label_sizes() {
        assert!(decode_labels(&[]).unwrap().is_empty());
        assert!(matches!(
            decode_labels(&[0u8; 7]),
            Err(Error::SizeNotMultipleOf4(7))
        ));
    }

    #[test]
    fn pairing_rejects_length_mismatch() {
        let cloud = PointCloud::new(vec![Point::default(); 3]);
        assert!(LabelSet::new(vec![1; 3]).check_paired(&cloud).is_ok());
        assert!(matches!(
            LabelSet::new(vec![1; 2]).check_paired(&cloud),
            Err(Error::LengthMismatch { .. })
        ));
    }

    #[test]
    fn write_rejects_non_finite() {
        let dir = tempfile::tempdir().unwrap();
        let cloud = PointCloud::new(vec![Point::new(f32::INFINITY, 0.0, 0.0, 0.0)]);
        assert!(matches!(
            write_scan(&cloud, dir.path().join("x.bin")),
            Err(Error::NonFinitePoint { index: 0 })
        ));
    }

    #[test]
    fn manifest_rejects_duplicates_and_missing_files() {
        let dir = tempfile::tempdir().unwrap();
        let cloud = PointCloud::new(vec![Point::default()]);
        write_scan(&cloud, dir.path().join("a.bin")).unwrap();
        write_labels(&LabelSet::new(vec![0]), dir.path().join("a.label")).unwrap();
        let entry = ManifestEntry {
            scan_id: "a".into(),
            scan_path: "a.bin".into(),
            label_path: "a.label".into(),
        };
        let mut m = ScanManifest::new(DatasetMetadata::default());
        m.entries.push(entry.clone());
        let path = dir.path().join("manifest.json");
        m.save(&path).unwrap();
        let loaded = ScanManifest::load(&path).unwrap();
        assert_eq!(loaded.entries, m.entries);

        m.entries.push(entry);
        m.save(&path).unwrap();
        assert!(matches!(ScanManifest::load(&path), Err(Error::Manifest(_))));

        m.entries.pop();
        m.entries[0].label_path = "missing.label".into();
        m.save(&path).unwrap();
        assert!(matches!(ScanManifest::load(&path), Err(Error::Manifest(_))));
    }
}
