//! Confusion counting and the six comparison measures.
//!
//! Empty-denominator conventions: precision is 1 when nothing was predicted,
//! recall is 1 when nothing was there to find, the F-measure is 0 when both
//! are 0, and Jaccard/Dice are 1 when both masks are empty.

use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::imagecore::{ensure_same_dims, Mask};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct ConfusionCounts {
    pub tp: u64,
    pub fp: u64,
    pub tn: u64,
    #[serde(rename = "fn")]
    pub fn_: u64,
}

impl ConfusionCounts {
    pub fn total(&self) -> u64 {
        self.tp + self.fp + self.tn + self.fn_
    }
}

pub fn confusion(gt: &Mask, seg: &Mask) -> Result<ConfusionCounts> {
    ensure_same_dims(gt.dims(), seg.dims())?;
    let mut c = ConfusionCounts::default();
    for (&g, &s) in gt.bits().iter().zip(seg.bits()) {
        match (g, s) {
            (true, true) => c.tp += 1,
            (false, true) => c.fp += 1,
            (false, false) => c.tn += 1,
            (true, false) => c.fn_ += 1,
        }
    }
    Ok(c)
}

/// |GT ∩ Seg| / |GT ∪ Seg|, from set operations on the masks.
pub fn jaccard(gt: &Mask, seg: &Mask) -> Result<f64> {
    ensure_same_dims(gt.dims(), seg.dims())?;
    let (inter, union) = gt
        .bits()
        .iter()
        .zip(seg.bits())
        .fold((0u64, 0u64), |(i, u), (&a, &b)| (i + u64::from(a && b), u + u64::from(a || b)));
    Ok(if union == 0 { 1.0 } else { inter as f64 / union as f64 })
}

/// 2 |GT ∩ Seg| / (|GT| + |Seg|), from set operations on the masks.
pub fn dice(gt: &Mask, seg: &Mask) -> Result<f64> {
    ensure_same_dims(gt.dims(), seg.dims())?;
    let inter = gt.bits().iter().zip(seg.bits()).filter(|(&a, &b)| a && b).count();
    let sizes = gt.area() + seg.area();
    Ok(if sizes == 0 { 1.0 } else { 2.0 * inter as f64 / sizes as f64 })
}

pub fn accuracy(c: &ConfusionCounts) -> f64 {
    let total = c.total();
    if total == 0 {
        1.0
    } else {
        (c.tp + c.tn) as f64 / total as f64
    }
}

pub fn precision(c: &ConfusionCounts) -> f64 {
    if c.tp + c.fp == 0 {
        1.0
    } else {
        c.tp as f64 / (c.tp + c.fp) as f64
    }
}

pub fn recall(c: &ConfusionCounts) -> f64 {
    if c.tp + c.fn_ == 0 {
        1.0
    } else {
        c.tp as f64 / (c.tp + c.fn_) as f64
    }
}

pub fn f_measure(p: f64, r: f64) -> f64 {
    if p + r == 0.0 {
        0.0
    } else {
        2.0 * p * r / (p + r)
    }
}

/// Jaccard from confusion counts: TP / (TP + FP + FN).
pub fn jaccard_from_counts(c: &ConfusionCounts) -> f64 {
    let union = c.tp + c.fp + c.fn_;
    if union == 0 {
        1.0
    } else {
        c.tp as f64 / union as f64
    }
}

/// Dice from confusion counts: 2TP / (2TP + FP + FN).
pub fn dice_from_counts(c: &ConfusionCounts) -> f64 {
    let denom = 2 * c.tp + c.fp + c.fn_;
    if denom == 0 {
        1.0
    } else {
        2.0 * c.tp as f64 / denom as f64
    }
}

/// The six measures for one (method, case) pair.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricsRow {
    pub case_id: String,
    pub method: String,
    pub accuracy: f64,
    pub jaccard: f64,
    pub dice: f64,
    pub precision: f64,
    pub recall: f64,
    pub f_measure: f64,
    pub elapsed_s: f64,
}

/// Measures computed from confusion counts alone.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Measures {
    pub accuracy: f64,
    pub jaccard: f64,
    pub dice: f64,
    pub precision: f64,
    pub recall: f64,
    pub f_measure: f64,
}

impl Measures {
    pub fn from_counts(c: &ConfusionCounts) -> Self {
        let p = precision(c);
        let r = recall(c);
        Self {
            accuracy: accuracy(c),
            jaccard: jaccard_from_counts(c),
            dice: dice_from_counts(c),
            precision: p,
            recall: r,
            f_measure: f_measure(p, r),
        }
    }

    pub fn compare(gt: &Mask, seg: &Mask) -> Result<Self> {
        Ok(Self::from_counts(&confusion(gt, seg)?))
    }

    pub fn into_row(self, case_id: impl Into<String>, method: impl Into<String>, elapsed_s: f64) -> MetricsRow {
        MetricsRow {
            case_id: case_id.into(),
            method: method.into(),
            accuracy: self.accuracy,
            jaccard: self.jaccard,
            dice: self.dice,
            precision: self.precision,
            recall: self.recall,
            f_measure: self.f_measure,
            elapsed_s,
        }
    }
}
