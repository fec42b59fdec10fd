//! Segmentation quality and robustness scores.

use std::collections::BTreeMap;
use std::ops::{Add, AddAssign};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scan_io::{semantic, LabelSet, IGNORE_CLASS};

/// Rows are ground truth, columns predictions, both indexed by semantic class. Row 0 stays
/// empty (ignore ground truth is skipped); column 0 collects valid points predicted as
/// ignore.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConfusionMatrix {
    pub classes: usize,
    counts: Vec<u64>,
}

impl ConfusionMatrix {
    /// Matrix over semantic classes `0..classes`.
    pub fn new(classes: usize) -> Self {
        ConfusionMatrix {
            classes,
            counts: vec![0; classes * classes],
        }
    }

    pub fn get(&self, gt: usize, pred: usize) -> u64 {
        self.counts[gt * self.classes + pred]
    }

    pub fn row_sum(&self, k: usize) -> u64 {
        self.counts[k * self.classes..(k + 1) * self.classes]
            .iter()
            .sum()
    }

    pub fn col_sum(&self, k: usize) -> u64 {
        (0..self.classes).map(|r| self.get(r, k)).sum()
    }

    pub fn total(&self) -> u64 {
        self.counts.iter().sum()
    }

    fn index(&self, class: u16) -> Result<usize> {
        let c = class as usize;
        if c < self.classes {
            Ok(c)
        } else {
            Err(Error::LabelOutOfRange {
                label: class as u32,
                classes: self.classes,
            })
        }
    }

    /// Adds one count per point with non-ignore ground truth.
    pub fn accumulate(&mut self, gt: &LabelSet, pred: &LabelSet) -> Result<()> {
        if gt.len() != pred.len() {
            return Err(Error::LengthMismatch {
                what: "prediction labels",
                expected: gt.len(),
                got: pred.len(),
            });
        }
        for (&g, &p) in gt.labels.iter().zip(&pred.labels) {
            let g = semantic(g);
            if g == IGNORE_CLASS {
                continue;
            }
            let (r, c) = (self.index(g)?, self.index(semantic(p))?);
            self.counts[r * self.classes + c] += 1;
        }
        Ok(())
    }

    /// IoU in percent for each class with ground-truth points.
    pub fn class_iou(&self) -> BTreeMap<u16, f64> {
        (1..self.classes)
            .filter(|&k| self.row_sum(k) > 0)
            .map(|k| {
                let tp = self.get(k, k) as f64;
                let union = (self.row_sum(k) + self.col_sum(k)) as f64 - tp;
                (k as u16, 100.0 * tp / union)
            })
            .collect()
    }

    /// Mean IoU in percent over classes present in the ground truth.
    pub fn miou(&self) -> Result<f64> {
        let ious = self.class_iou();
        if ious.is_empty() {
            return Err(Error::NoValidClasses);
        }
        Ok(ious.values().sum::<f64>() / ious.len() as f64)
    }
}

impl AddAssign<&ConfusionMatrix> for ConfusionMatrix {
    fn add_assign(&mut self, rhs: &ConfusionMatrix) {
        assert_eq!(
            self.classes, rhs.classes,
            "merging matrices of different class counts"
        );
        for (a, b) in self.counts.iter_mut().zip(&rhs.counts) {
            *a += b;
        }
    }
}

impl Add for ConfusionMatrix {
    type Output = ConfusionMatrix;

    fn add(mut self, rhs: ConfusionMatrix) -> ConfusionMatrix {
        self += &rhs;
        self
    }
}

/// Functional form of [`ConfusionMatrix::accumulate`].
pub fn accumulate(
    mut cm: ConfusionMatrix,
    gt: &LabelSet,
    pred: &LabelSet,
) -> Result<ConfusionMatrix> {
    cm.accumulate(gt, pred)?;
    Ok(cm)
}

pub fn miou(cm: &ConfusionMatrix) -> Result<f64> {
    cm.miou()
}

/// Mean mIoU over the intensity levels of one corruption.
pub fn corruption_score(per_intensity: &[f64]) -> Result<f64> {
    if per_intensity.is_empty() {
        return Err(Error::EmptyList);
    }
    Ok(per_intensity.iter().sum::<f64>() / per_intensity.len() as f64)
}

/// Number of corruption categories averaged into the robustness mIoU.
pub const CORRUPTION_COUNT: usize = 6;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CorruptionResult {
    pub name: String,
    /// mIoU per intensity level, in level order.
    pub per_intensity: Vec<f64>,
    pub score: f64,
    /// `score / clean`, in percent.
    pub relative: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RobustnessReport {
    pub clean_miou: f64,
    pub corruptions: Vec<CorruptionResult>,
    pub rmiou: f64,
    /// `rmiou / clean`, in percent.
    pub mr: f64,
    /// Per-class IoU of the clean run, when known.
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub clean_class_iou: BTreeMap<u16, f64>,
}

/// Builds the report from the clean mIoU and the six corruption scores.
pub fn robustness_summary(clean: f64, scores: &[f64]) -> Result<RobustnessReport> {
    let named: Vec<(String, Vec<f64>)> = scores
        .iter()
        .enumerate()
        .map(|(i, &s)| (format!("corruption-{i}"), vec![s]))
        .collect();
    robustness_report(clean, &named)
}

/// Builds the report from named per-intensity mIoU lists, one per corruption.
pub fn robustness_report(
    clean: f64,
    corruptions: &[(String, Vec<f64>)],
) -> Result<RobustnessReport> {
    if corruptions.len() != CORRUPTION_COUNT {
        return Err(Error::WrongCorruptionCount {
            expected: CORRUPTION_COUNT,
            got: corruptions.len(),
        });
    }
    if !(clean > 0.0) {
        return Err(Error::ZeroCleanScore);
    }
    let corruptions = corruptions
        .iter()
        .map(|(name, levels)| {
            let score = corruption_score(levels)?;
            Ok(CorruptionResult {
                name: name.clone(),
                per_intensity: levels.clone(),
                score,
                relative: 100.0 * score / clean,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let rmiou = corruptions.iter().map(|c| c.score).sum::<f64>() / CORRUPTION_COUNT as f64;
    Ok(RobustnessReport {
        clean_miou: clean,
        corruptions,
        rmiou,
        mr: 100.0 * rmiou / clean,
        clean_class_iou: BTreeMap::new(),
    })
}

/// Rounds to the one-decimal precision of published tables.
pub fn round1(v: f64) -> f64 {
    (v * 10.0).round() / 10.0
}
