//! Per-point provenance of corrupted scans and the annotation remapping built on it.
//!
//! Every corruption returns a [`ProvenanceSet`] aligned with its output cloud. Points that
//! still correspond to a clean point keep that point's label; points that do not
//! (fog/snow returns, injected outliers) are relabeled as the ignore class.

use std::collections::HashMap;
use std::fs;
use std::path::Path;

use crate::error::{Error, Result};
use crate::scan_io::{LabelSet, PointCloud, IGNORE_CLASS};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Provenance {
    /// Unchanged position; index into the clean cloud.
    Original(u32),
    /// Position perturbed but still describes the clean point at this index.
    Displaced(u32),
    /// Return from a weather particle or fog rather than from the scene.
    Scatterer,
    /// Synthetic point with no clean counterpart.
    Injected,
}

impl Provenance {
    pub fn source(self) -> Option<usize> {
        match self {
            Provenance::Original(i) | Provenance::Displaced(i) => Some(i as usize),
            Provenance::Scatterer | Provenance::Injected => None,
        }
    }

    pub fn is_ignored(self) -> bool {
        self.source().is_none()
    }

    /// One-byte tag used by the `.prov` sidecar.
    pub fn tag(self) -> u8 {
        match self {
            Provenance::Original(_) => 0,
            Provenance::Displaced(_) => 1,
            Provenance::Scatterer => 2,
            Provenance::Injected => 3,
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct ProvenanceSet {
    pub tags: Vec<Provenance>,
}

impl ProvenanceSet {
    pub fn new(tags: Vec<Provenance>) -> Self {
        ProvenanceSet { tags }
    }

    /// All-`Original` provenance for an unmodified cloud of `n` points.
    pub fn identity(n: usize) -> Self {
        ProvenanceSet::new((0..n as u32).map(Provenance::Original).collect())
    }

    pub fn len(&self) -> usize {
        self.tags.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tags.is_empty()
    }

    pub fn count(&self, pred: impl Fn(Provenance) -> bool) -> usize {
        self.tags.iter().filter(|&&t| pred(t)).count()
    }

    pub fn ignored_count(&self) -> usize {
        self.count(Provenance::is_ignored)
    }

    pub fn tag_bytes(&self) -> Vec<u8> {
        self.tags.iter().map(|t| t.tag()).collect()
    }

    pub fn write_sidecar(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        fs::write(path, self.tag_bytes()).map_err(|e| Error::io(path, e))
    }
}

impl FromIterator<Provenance> for ProvenanceSet {
    fn from_iter<I: IntoIterator<Item = Provenance>>(iter: I) -> Self {
        ProvenanceSet::new(iter.into_iter().collect())
    }
}

/// Reads a `.prov` sidecar back into raw tags (0 Original, 1 Displaced, 2 Scatterer, 3 Injected).
pub fn read_sidecar_tags(path: impl AsRef<Path>) -> Result<Vec<u8>> {
    let path = path.as_ref();
    fs::read(path).map_err(|e| Error::io(path, e))
}

/// Labels a corrupted cloud from its provenance: sourced points inherit the clean label,
/// scatterers and injected points become ignore.
pub fn remap_labels(clean: &LabelSet, prov: &ProvenanceSet) -> Result<LabelSet> {
    prov.tags
        .iter()
        .map(|t| match t.source() {
            Some(i) if i < clean.len() => Ok(clean.labels[i]),
            Some(i) => Err(Error::IndexOutOfRange {
                index: i,
                len: clean.len(),
            }),
            None => Ok(IGNORE_CLASS as u32),
        })
        .collect::<Result<Vec<_>>>()
        .map(LabelSet::new)
}

/// Uniform-grid spatial hash with cell edge equal to the query radius.
struct RadiusIndex<'a> {
    cloud: &'a PointCloud,
    cell: f64,
    cells: HashMap<(i64, i64, i64), Vec<u32>>,
}

impl<'a> RadiusIndex<'a> {
    fn new(cloud: &'a PointCloud, cell: f64) -> Self {
        let mut cells: HashMap<_, Vec<u32>> = HashMap::new();
        for (i, p) in cloud.points.iter().enumerate() {
            cells
                .entry(Self::key(cell, p.x as f64, p.y as f64, p.z as f64))
                .or_default()
                .push(i as u32);
        }
        RadiusIndex { cloud, cell, cells }
    }

    fn key(cell: f64, x: f64, y: f64, z: f64) -> (i64, i64, i64) {
        (
            (x / cell).floor() as i64,
            (y / cell).floor() as i64,
            (z / cell).floor() as i64,
        )
    }

    /// Nearest indexed point within `radius` of `(x, y, z)`; ties go to the lower index.
    fn nearest_within(&self, x: f64, y: f64, z: f64, radius: f64) -> Option<usize> {
        let (cx, cy, cz) = Self::key(self.cell, x, y, z);
        let mut best: Option<(f64, u32)> = None;
        for dx in -1..=1 {
            for dy in -1..=1 {
                for dz in -1..=1 {
                    let Some(members) = self.cells.get(&(cx + dx, cy + dy, cz + dz)) else {
                        continue;
                    };
                    for &j in members {
                        let q = &self.cloud.points[j as usize];
                        let d2 = (q.x as f64 - x).powi(2)
                            + (q.y as f64 - y).powi(2)
                            + (q.z as f64 - z).powi(2);
                        if d2 <= radius * radius
                            && best.is_none_or(|(bd, bj)| d2 < bd || (d2 == bd && j < bj))
                        {
                            best = Some((d2, j));
                        }
                    }
                }
            }
        }
        best.map(|(_, j)| j as usize)
    }
}

/// Query radius (m) for clouds whose surviving points are unmoved copies of clean points.
pub const EXACT_MATCH_RADIUS: f64 = 1e-4;

/// Query radius for a cloud jittered with per-axis standard deviation `sigma`.
pub fn distortion_match_radius(sigma: f64) -> f64 {
    3.0 * sigma
}

/// Labels each corrupted point with its nearest clean neighbor within `radius`, or ignore.
///
/// Fallback for corrupted clouds produced elsewhere, without provenance.
pub fn remap_labels_by_nn(
    clean_cloud: &PointCloud,
    clean_labels: &LabelSet,
    corrupted: &PointCloud,
    radius: f64,
) -> Result<LabelSet> {
    if clean_cloud.is_empty() {
        return Err(Error::EmptyCleanCloud);
    }
    if !(radius > 0.0 && radius.is_finite()) {
        return Err(Error::InvalidParameter(format!(
            "radius must be > 0, got {radius}"
        )));
    }
    clean_labels.check_paired(clean_cloud)?;
    let index = RadiusIndex::new(clean_cloud, radius);
    Ok(corrupted
        .points
        .iter()
        .map(|p| {
            index
                .nearest_within(p.x as f64, p.y as f64, p.z as f64, radius)
                .map_or(IGNORE_CLASS as u32, |j| clean_labels.labels[j])
        })
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scan_io::Point;

    #[test]
    fn all_original_is_identity() {
        let labels = LabelSet::new(vec![3, 5, 0x0002_0001, 9]);
        assert_eq!(
            remap_labels(&labels, &ProvenanceSet::identity(4)).unwrap(),
            labels
        );
    }

    #[test]
    fn injected_points_become_ignore() {
        let clean = LabelSet::new((0..1000).map(|i| 1 + i % 7).collect());
        let mut prov = ProvenanceSet::identity(1000);
        prov.tags
            .extend(std::iter::repeat_n(Provenance::Injected, 50));
        let out = remap_labels(&clean, &prov).unwrap();
        assert_eq!(out.len(), 1050);
        assert_eq!(out.count_class(IGNORE_CLASS), 50);
    }

    #[test]
    fn scatterer_is_ignore_and_displaced_keeps_label() {
        let clean = LabelSet::new(vec![4, 7]);
        let prov = ProvenanceSet::new(vec![Provenance::Scatterer, Provenance::Displaced(1)]);
        assert_eq!(remap_labels(&clean, &prov).unwrap().labels, vec![0, 7]);
    }

    #[test]
    fn out_of_range_source_is_an_error() {
        let clean = LabelSet::new(vec![1]);
        let prov = ProvenanceSet::new(vec![Provenance::Original(1)]);
        assert!(matches!(
            remap_labels(&clean, &prov),
            Err(Error::IndexOutOfRange { index: 1, len: 1 })
        ));
    }

    #[test]
    fn nn_exact_match_copies_labels() {
        let cloud: PointCloud = (0..50)
            .map(|i| Point::new(i as f32 * 0.3, (i % 5) as f32, 1.0, 0.1))
            .collect();
        let labels: LabelSet = (0..50u32).map(|i| 1 + i % 4).collect();
        assert_eq!(
            remap_labels_by_nn(&cloud, &labels, &cloud, EXACT_MATCH_RADIUS).unwrap(),
            labels
        );
    }

    #[test]
    fn distortion_radius_is_three_sigma() {
        assert_eq!(distortion_match_radius(0.1), 3.0 * 0.1);
        assert!(EXACT_MATCH_RADIUS < distortion_match_radius(0.05));
    }

    #[test]
    fn nn_far_point_is_ignore() {
        let cloud = PointCloud::new(vec![Point::new(0.0, 0.0, 0.0, 0.0)]);
        let labels = LabelSet::new(vec![5]);
        let far = PointCloud::new(vec![Point::new(10.0, 0.0, 0.0, 0.0)]);
        assert_eq!(
            remap_labels_by_nn(&cloud, &labels, &far, 0.1)
                .unwrap()
                .labels,
            vec![0]
        );
    }

    #[test]
    fn nn_errors() {
        let far = PointCloud::new(vec![Point::default()]);
        assert!(matches!(
            remap_labels_by_nn(&PointCloud::default(), &LabelSet::default(), &far, 0.1),
            Err(Error::EmptyCleanCloud)
        ));
        assert!(matches!(
            remap_labels_by_nn(&far, &LabelSet::new(vec![1]), &far, 0.0),
            Err(Error::InvalidParameter(_))
        ));
    }

    #[test]
    fn nn_matches_brute_force() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(11);
        let mk = |rng: &mut rand_chacha::ChaCha8Rng, n: usize| -> PointCloud {
            (0..n)
                .map(|_| {
                    Point::new(
                        rng.random_range(-5.0..5.0),
                        rng.random_range(-5.0..5.0),
                        rng.random_range(-1.0..1.0),
                        0.0,
                    )
                })
                .collect()
        };
        let clean = mk(&mut rng, 400);
        let labels: LabelSet = (0..400u32).map(|i| i + 1).collect();
        let query = mk(&mut rng, 300);
        let radius = 0.4;
        let got = remap_labels_by_nn(&clean, &labels, &query, radius).unwrap();
        for (q, &l) in query.points.iter().zip(&got.labels) {
            let mut best = None;
            for (j, c) in clean.points.iter().enumerate() {
                let d2 = (q.x as f64 - c.x as f64).powi(2)
                    + (q.y as f64 - c.y as f64).powi(2)
                    + (q.z as f64 - c.z as f64).powi(2);
                if d2 <= radius * radius && best.is_none_or(|(bd, _)| d2 < bd) {
                    best = Some((d2, j));
                }
            }
            assert_eq!(l, best.map_or(0, |(_, j)| labels.labels[j]));
        }
    }
}
