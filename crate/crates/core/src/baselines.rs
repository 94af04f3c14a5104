//! Comparison methods: GrowCut and Otsu thresholding.

use std::time::Instant;

use crate::bgrowth::{run_engine, BGrowthParams, SegmentationResult, UpdateRule};
use crate::error::Result;
use crate::imagecore::{GrayImage, Label, LabelMap, Mask, WeightMap};

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GrowCutParams {
    pub max_iters: usize,
    pub capture_trace: bool,
}

impl Default for GrowCutParams {
    fn default() -> Self {
        Self {
            max_iters: 30,
            capture_trace: false,
        }
    }
}

/// GrowCut with exactly the Balanced Growth scan; conquest overwrites `W <- s`.
pub fn run_growcut(image: &GrayImage, seeds: &LabelMap, params: &GrowCutParams) -> Result<SegmentationResult> {
    run_engine(image, seeds, &growcut_engine_params(params), UpdateRule::Overwrite)
}

pub(crate) fn growcut_engine_params(params: &GrowCutParams) -> BGrowthParams {
    BGrowthParams {
        max_iters: params.max_iters,
        capture_trace: params.capture_trace,
        ..BGrowthParams::default()
    }
}

/// 256-bin histogram; images deeper than 8 bits are right-shifted by 8.
pub fn histogram_256(image: &GrayImage) -> [u64; 256] {
    let shift = bin_shift(image);
    let mut hist = [0u64; 256];
    for &p in image.pixels() {
        hist[usize::from(p >> shift)] += 1;
    }
    hist
}

fn bin_shift(image: &GrayImage) -> u32 {
    if image.max_representable() > 255 {
        8
    } else {
        0
    }
}

/// Histogram bin maximizing between-class variance, searched over the bins
/// between the darkest and brightest occupied bin; ties go to the smallest.
pub fn otsu_bin(hist: &[u64; 256]) -> usize {
    let Some(lo) = hist.iter().position(|&h| h > 0) else {
        return 0;
    };
    let hi = hist.iter().rposition(|&h| h > 0).unwrap_or(lo);
    let total: u128 = hist.iter().map(|&h| u128::from(h)).sum();
    let sum_all: u128 = hist
        .iter()
        .enumerate()
        .map(|(i, &h)| i as u128 * u128::from(h))
        .sum();

    let mut best_bin = lo;
    let mut best = -1.0f64;
    let mut n0: u128 = 0;
    let mut sum0: u128 = 0;
    for t in lo..=hi {
        n0 += u128::from(hist[t]);
        sum0 += t as u128 * u128::from(hist[t]);
        let n1 = total - n0;
        // sigma_b^2 * N^2 = (N*S0 - n0*S)^2 / (n0*n1)
        let variance = if n0 == 0 || n1 == 0 {
            0.0
        } else {
            let diff = (total * sum0) as i128 - (n0 * sum_all) as i128;
            let d = diff as f64;
            d * d / (n0 * n1) as f64
        };
        if variance > best {
            best = variance;
            best_bin = t;
        }
    }
    best_bin
}

/// Otsu threshold in the image's own intensity domain: foreground is `p > t`.
///
/// For 16-bit images the winning bin `b` maps to `256 b + 255`, so that
/// `p > t` agrees with `(p >> 8) > b`.
pub fn otsu_threshold(image: &GrayImage) -> u16 {
    let bin = otsu_bin(&histogram_256(image)) as u16;
    if bin_shift(image) == 0 {
        bin
    } else {
        (bin << 8) | 0xff
    }
}

pub fn otsu_segment(image: &GrayImage) -> Mask {
    let t = otsu_threshold(image);
    let bits = image.pixels().iter().map(|&p| p > t).collect();
    Mask::new(image.rows(), image.cols(), bits).expect("dimensions come from a valid image")
}

/// Otsu wrapped as a segmentation result: foreground +1, everything else −1.
pub fn run_otsu(image: &GrayImage) -> SegmentationResult {
    let start = Instant::now();
    let mask = otsu_segment(image);
    let elapsed = start.elapsed();
    let labels = mask
        .bits()
        .iter()
        .map(|&b| if b { Label::Foreground } else { Label::Background })
        .collect();
    SegmentationResult {
        labels: LabelMap::new(image.rows(), image.cols(), labels).expect("valid dims"),
        weights: WeightMap::new(image.rows(), image.cols(), vec![1.0; image.len()]).expect("valid dims"),
        iterations_run: 0,
        converged: true,
        trace: None,
        elapsed,
    }
}
