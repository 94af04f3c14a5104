//! Wilcoxon rank-sum (Mann-Whitney) test with midrank ties.
//!
//! Small samples (`n1 + n2 <= 20`) get the exact permutation p-value: the null
//! distribution of the first sample's rank sum is counted over every
//! `C(n, n1)` assignment of the observed midranks. Larger samples use the
//! normal approximation with tie-corrected variance and a 0.5 continuity
//! correction.

use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, Normal};

use crate::error::{Error, Result};

/// Largest combined sample size handled by exact enumeration.
pub const EXACT_MAX_TOTAL: usize = 20;
/// Level at which comparisons are reported as significant.
pub const SIGNIFICANCE_LEVEL: f64 = 0.01;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum PValueMethod {
    Exact,
    NormalApproximation,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RankSumResult {
    /// Mann-Whitney U of the first sample: `R1 - n1 (n1 + 1) / 2`.
    pub u_statistic: f64,
    pub p_two_sided: f64,
    pub method: PValueMethod,
    pub n1: usize,
    pub n2: usize,
}

impl RankSumResult {
    pub fn significant_at(&self, alpha: f64) -> bool {
        self.p_two_sided < alpha
    }

    pub fn significant(&self) -> bool {
        self.significant_at(SIGNIFICANCE_LEVEL)
    }
}

/// Midranks (1-based) of the pooled sample `a ++ b`.
pub fn pooled_midranks(a: &[f64], b: &[f64]) -> Vec<f64> {
    let pooled: Vec<f64> = a.iter().chain(b).copied().collect();
    let mut order: Vec<usize> = (0..pooled.len()).collect();
    order.sort_by(|&i, &j| pooled[i].total_cmp(&pooled[j]));
    let mut ranks = vec![0.0; pooled.len()];
    let mut start = 0;
    while start < order.len() {
        let mut end = start + 1;
        while end < order.len() && pooled[order[end]] == pooled[order[start]] {
            end += 1;
        }
        // positions start..end hold ranks start+1 ..= end
        let mid = (start + 1 + end) as f64 / 2.0;
        for &k in &order[start..end] {
            ranks[k] = mid;
        }
        start = end;
    }
    ranks
}

fn check_samples(a: &[f64], b: &[f64]) -> Result<()> {
    if a.is_empty() || b.is_empty() {
        return Err(Error::EmptySample);
    }
    if a.iter().chain(b).any(|v| v.is_nan()) {
        return Err(Error::InvalidParameter("samples contain NaN".into()));
    }
    Ok(())
}

/// Rank-sum test, choosing exact or approximate p by combined size.
pub fn wilcoxon_ranksum(a: &[f64], b: &[f64]) -> Result<RankSumResult> {
    if a.len() + b.len() <= EXACT_MAX_TOTAL {
        ranksum_exact(a, b)
    } else {
        ranksum_normal(a, b)
    }
}

fn u_from_ranks(ranks: &[f64], n1: usize) -> f64 {
    let r1: f64 = ranks[..n1].iter().sum();
    r1 - (n1 * (n1 + 1)) as f64 / 2.0
}

/// Exact permutation p-value. Midranks are doubled to integers and the
/// number of size-`n1` subsets attaining each doubled rank sum is counted.
pub fn ranksum_exact(a: &[f64], b: &[f64]) -> Result<RankSumResult> {
    check_samples(a, b)?;
    let (n1, n2) = (a.len(), b.len());
    let ranks = pooled_midranks(a, b);
    let doubled: Vec<usize> = ranks.iter().map(|&r| (2.0 * r) as usize).collect();
    let max_sum: usize = doubled.iter().sum();

    // ways[k][s]: subsets of size k with doubled rank sum s
    let mut ways = vec![vec![0u128; max_sum + 1]; n1 + 1];
    ways[0][0] = 1;
    for (seen, &r) in doubled.iter().enumerate() {
        for k in (1..=n1.min(seen + 1)).rev() {
            let (lower, upper) = ways.split_at_mut(k);
            let prev = &lower[k - 1];
            let cur = &mut upper[0];
            for s in (r..=max_sum).rev() {
                cur[s] += prev[s - r];
            }
        }
    }

    let observed: usize = doubled[..n1].iter().sum();
    // E[2 R1] = n1 (n + 1); deviations compared in doubled units, exactly.
    let centre = (n1 * (n1 + n2 + 1)) as i64;
    let dev_obs = (observed as i64 - centre).abs();
    let mut total: u128 = 0;
    let mut extreme: u128 = 0;
    for (s, &w) in ways[n1].iter().enumerate() {
        if w == 0 {
            continue;
        }
        total += w;
        if (s as i64 - centre).abs() >= dev_obs {
            extreme += w;
        }
    }
    let p = (extreme as f64 / total as f64).clamp(0.0, 1.0);
    Ok(RankSumResult {
        u_statistic: u_from_ranks(&ranks, n1),
        p_two_sided: p,
        method: PValueMethod::Exact,
        n1,
        n2,
    })
}

/// Normal approximation with tie correction and continuity correction.
pub fn ranksum_normal(a: &[f64], b: &[f64]) -> Result<RankSumResult> {
    check_samples(a, b)?;
    let (n1, n2) = (a.len(), b.len());
    let ranks = pooled_midranks(a, b);
    let u = u_from_ranks(&ranks, n1);
    let n = (n1 + n2) as f64;
    let (f1, f2) = (n1 as f64, n2 as f64);

    let mut sorted = ranks.clone();
    sorted.sort_by(f64::total_cmp);
    let mut tie_term = 0.0;
    let mut i = 0;
    while i < sorted.len() {
        let mut j = i + 1;
        while j < sorted.len() && sorted[j] == sorted[i] {
            j += 1;
        }
        let t = (j - i) as f64;
        tie_term += t * t * t - t;
        i = j;
    }
    let variance = if n > 1.0 {
        f1 * f2 / 12.0 * ((n + 1.0) - tie_term / (n * (n - 1.0)))
    } else {
        0.0
    };

    let mean = f1 * f2 / 2.0;
    let deviation = ((u - mean).abs() - 0.5).max(0.0);
    let p = if variance <= 0.0 || deviation == 0.0 {
        1.0
    } else {
        let z = deviation / variance.sqrt();
        let normal = Normal::new(0.0, 1.0).expect("standard normal");
        (2.0 * normal.sf(z)).clamp(0.0, 1.0)
    };
    Ok(RankSumResult {
        u_statistic: u,
        p_two_sided: p,
        method: PValueMethod::NormalApproximation,
        n1,
        n2,
    })
}
