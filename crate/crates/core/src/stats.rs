//! Error metrics, trial aggregation and the Wilcoxon signed-rank test.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, Normal};

use crate::error::{Error, Result};

/// Largest number of non-zero differences handled by exact enumeration.
pub const EXACT_MAX_N: usize = 20;

pub fn rmse(predicted: &[f64], actual: &[f64]) -> Result<f64> {
    if predicted.len() != actual.len() {
        return Err(Error::input(format!(
            "rmse over vectors of length {} and {}",
            predicted.len(),
            actual.len()
        )));
    }
    if predicted.is_empty() {
        return Err(Error::input("rmse of empty vectors"));
    }
    let sse: f64 = predicted.iter().zip(actual).map(|(p, a)| (p - a) * (p - a)).sum();
    Ok((sse / predicted.len() as f64).sqrt())
}

/// Mean and sample standard deviation over trials.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AggregateResult {
    pub mean: f64,
    /// `n − 1` denominator; zero for a single value.
    pub std: f64,
    pub count: usize,
}

pub fn aggregate(values: &[f64]) -> Result<AggregateResult> {
    if values.is_empty() {
        return Err(Error::input("cannot aggregate an empty list"));
    }
    let n = values.len();
    let mean = values.iter().sum::<f64>() / n as f64;
    let std = if n > 1 {
        (values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / (n - 1) as f64).sqrt()
    } else {
        0.0
    };
    Ok(AggregateResult { mean, std, count: n })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum WilcoxonMethod {
    Exact,
    NormalApproximation,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WilcoxonResult {
    /// `min(W⁺, W⁻)`.
    pub w_statistic: f64,
    pub w_plus: f64,
    pub w_minus: f64,
    /// Number of non-zero differences.
    pub n_effective: usize,
    /// Two-sided p-value.
    pub p_value: f64,
    pub method: WilcoxonMethod,
}

/// Two-sided Wilcoxon signed-rank test of zero median.
///
/// Zero differences are dropped and tied magnitudes share their average rank.
/// Up to [`EXACT_MAX_N`] non-zero differences the null distribution is
/// enumerated exactly; beyond that a normal approximation with tie-corrected
/// variance and a 0.5 continuity correction is used. If every difference is
/// zero the result is degenerate: `n_effective = 0`, `p_value = 1`.
pub fn wilcoxon_signed_rank(diffs: &[f64]) -> Result<WilcoxonResult> {
    let ranked = RankedDiffs::new(diffs)?;
    let method = if ranked.len() <= EXACT_MAX_N {
        WilcoxonMethod::Exact
    } else {
        WilcoxonMethod::NormalApproximation
    };
    Ok(ranked.test(method))
}

/// As [`wilcoxon_signed_rank`] with a forced method. Exact enumeration is
/// refused above 60 non-zero differences.
pub fn wilcoxon_with_method(diffs: &[f64], method: WilcoxonMethod) -> Result<WilcoxonResult> {
    let ranked = RankedDiffs::new(diffs)?;
    if method == WilcoxonMethod::Exact && ranked.len() > 60 {
        return Err(Error::param("exact Wilcoxon enumeration limited to 60 differences"));
    }
    Ok(ranked.test(method))
}

/// Non-zero differences with doubled average ranks (integers even with ties).
struct RankedDiffs {
    ranks2: Vec<u64>,
    positive: Vec<bool>,
    tie_sizes: Vec<u64>,
}

impl RankedDiffs {
    fn new(diffs: &[f64]) -> Result<Self> {
        if diffs.is_empty() {
            return Err(Error::input("Wilcoxon test needs at least one difference"));
        }
        if diffs.iter().any(|d| !d.is_finite()) {
            return Err(Error::input("Wilcoxon differences must be finite"));
        }
        let mut nz: Vec<f64> = diffs.iter().copied().filter(|&d| d != 0.0).collect();
        nz.sort_by(|a, b| a.abs().total_cmp(&b.abs()));
        let mut ranks2 = vec![0; nz.len()];
        let mut tie_sizes = Vec::new();
        let mut i = 0;
        while i < nz.len() {
            let mut j = i;
            while j + 1 < nz.len() && nz[j + 1].abs() == nz[i].abs() {
                j += 1;
            }
            // Average of ranks i+1..=j+1, doubled.
            let r2 = (i + j + 2) as u64;
            ranks2[i..=j].fill(r2);
            tie_sizes.push((j - i + 1) as u64);
            i = j + 1;
        }
        let positive = nz.iter().map(|&d| d > 0.0).collect();
        Ok(RankedDiffs { ranks2, positive, tie_sizes })
    }

    fn len(&self) -> usize {
        self.ranks2.len()
    }

    fn test(&self, method: WilcoxonMethod) -> WilcoxonResult {
        let n = self.len();
        let plus2: u64 = self.ranks2.iter().zip(&self.positive).filter(|(_, &p)| p).map(|(r, _)| r).sum();
        let total2: u64 = self.ranks2.iter().sum();
        let minus2 = total2 - plus2;
        let w2 = plus2.min(minus2);
        let (w_plus, w_minus, w) = (plus2 as f64 / 2.0, minus2 as f64 / 2.0, w2 as f64 / 2.0);

        let p_value = if n == 0 {
            1.0
        } else {
            match method {
                WilcoxonMethod::Exact => self.exact_p(w2),
                WilcoxonMethod::NormalApproximation => self.normal_p(w),
            }
        };
        WilcoxonResult { w_statistic: w, w_plus, w_minus, n_effective: n, p_value, method }
    }

    /// `2 · P(T⁺ ≤ w)` under random signs, by counting sign patterns.
    fn exact_p(&self, w2: u64) -> f64 {
        let total2: u64 = self.ranks2.iter().sum();
        let mut counts = vec![0u64; total2 as usize + 1];
        counts[0] = 1;
        let mut reach = 0usize;
        for &r in &self.ranks2 {
            let r = r as usize;
            for s in (0..=reach).rev() {
                counts[s + r] += counts[s];
            }
            reach += r;
        }
        let at_most: u64 = counts[..=w2 as usize].iter().sum();
        let patterns = 2f64.powi(self.len() as i32);
        (2.0 * at_most as f64 / patterns).min(1.0)
    }

    fn normal_p(&self, w: f64) -> f64 {
        let n = self.len() as f64;
        let mean = n * (n + 1.0) / 4.0;
        let ties: f64 = self.tie_sizes.iter().map(|&t| (t * t * t - t) as f64).sum();
        let var = n * (n + 1.0) * (2.0 * n + 1.0) / 24.0 - ties / 48.0;
        if var <= 0.0 {
            return 1.0;
        }
        let z = ((w - mean).abs() - 0.5).max(0.0) / var.sqrt();
        let normal = Normal::standard();
        (2.0 * normal.cdf(-z)).min(1.0)
    }
}

/// Outcome of comparing one variant against the baseline.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BaselineComparison {
    pub p_value: f64,
    pub mean_baseline: f64,
    pub mean_variant: f64,
    /// Rejected at the level and the variant's mean error is lower.
    pub significant: bool,
}

/// Paired comparison on `baseline − variant`.
pub fn compare_to_baseline(baseline: &[f64], variant: &[f64], level: f64) -> Result<BaselineComparison> {
    if baseline.len() != variant.len() {
        return Err(Error::input(format!(
            "paired samples differ in length: {} vs {}",
            baseline.len(),
            variant.len()
        )));
    }
    let diffs: Vec<f64> = baseline.iter().zip(variant).map(|(b, v)| b - v).collect();
    let test = wilcoxon_signed_rank(&diffs)?;
    let mean_baseline = aggregate(baseline)?.mean;
    let mean_variant = aggregate(variant)?.mean;
    Ok(BaselineComparison {
        p_value: test.p_value,
        mean_baseline,
        mean_variant,
        significant: test.p_value < level && mean_variant < mean_baseline,
    })
}

/// Flags every variant whose errors are significantly lower than the baseline's.
pub fn significance_flags(
    baseline: &[f64],
    others: &BTreeMap<String, Vec<f64>>,
    level: f64,
) -> Result<BTreeMap<String, bool>> {
    others
        .iter()
        .map(|(name, values)| {
            compare_to_baseline(baseline, values, level).map(|c| (name.clone(), c.significant))
        })
        .collect()
}
