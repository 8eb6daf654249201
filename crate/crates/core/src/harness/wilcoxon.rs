//! Wilcoxon signed-rank test for paired samples, one-sided in the direction
//! `a > b`.

use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, Normal};

use crate::error::{MpeError, Result};

/// Largest effective sample size for which the automatic mode enumerates.
pub const EXACT_LIMIT: usize = 20;

const MIN_PAIRS: usize = 5;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum WilcoxonMode {
    Auto,
    Exact,
    Normal,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WilcoxonResult {
    /// Sum of the ranks of the positive differences `a - b`.
    pub statistic: f64,
    /// `P(W+ >= statistic)` under the null.
    pub p_value: f64,
    pub n_used: usize,
    pub zeros_dropped: usize,
    pub mode: WilcoxonMode,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub warning: Option<String>,
}

/// Midranks of `values`, 1-based, with tie group sizes.
fn midranks(values: &[f64]) -> (Vec<f64>, Vec<usize>) {
    let mut order: Vec<usize> = (0..values.len()).collect();
    order.sort_by(|&i, &j| values[i].total_cmp(&values[j]));
    let mut ranks = vec![0.0; values.len()];
    let mut ties = Vec::new();
    let mut start = 0;
    while start < order.len() {
        let mut end = start + 1;
        while end < order.len() && values[order[end]] == values[order[start]] {
            end += 1;
        }
        let rank = (start + end + 1) as f64 / 2.0;
        for &k in &order[start..end] {
            ranks[k] = rank;
        }
        ties.push(end - start);
        start = end;
    }
    (ranks, ties)
}

/// Upper tail of the signed-rank null over all `2^n` sign assignments, by
/// counting subsets of doubled (integer) midranks.
fn exact_upper_tail(ranks: &[f64], statistic: f64) -> f64 {
    let doubled: Vec<usize> = ranks.iter().map(|r| (2.0 * r).round() as usize).collect();
    let max: usize = doubled.iter().sum();
    let mut counts = vec![0.0f64; max + 1];
    counts[0] = 1.0;
    for &r in &doubled {
        for s in (r..=max).rev() {
            counts[s] += counts[s - r];
        }
    }
    let target = (2.0 * statistic).round() as usize;
    let total: f64 = counts.iter().sum();
    counts[target.min(max + 1)..].iter().sum::<f64>() / total
}

fn normal_upper_tail(n: usize, ties: &[usize], statistic: f64) -> f64 {
    let n = n as f64;
    let mean = n * (n + 1.0) / 4.0;
    let tie_term: f64 = ties.iter().map(|&t| (t * t * t - t) as f64).sum::<f64>() / 48.0;
    let sd = (n * (n + 1.0) * (2.0 * n + 1.0) / 24.0 - tie_term).sqrt();
    let z = (statistic - mean - 0.5) / sd;
    Normal::standard().sf(z)
}

pub fn wilcoxon_signed_rank(a: &[f64], b: &[f64]) -> Result<WilcoxonResult> {
    wilcoxon_signed_rank_with(a, b, WilcoxonMode::Auto)
}

/// One-sided signed-rank test of `a > b`. Zero differences are dropped.
pub fn wilcoxon_signed_rank_with(a: &[f64], b: &[f64], mode: WilcoxonMode) -> Result<WilcoxonResult> {
    if a.len() != b.len() {
        return Err(MpeError::DimensionMismatch {
            expected: a.len(),
            found: b.len(),
        });
    }
    if a.len() < MIN_PAIRS {
        return Err(MpeError::TooFewRows(format!(
            "signed-rank test needs at least {MIN_PAIRS} pairs, got {}",
            a.len()
        )));
    }
    let diffs: Vec<f64> = a.iter().zip(b).map(|(x, y)| x - y).collect();
    if diffs.iter().any(|d| !d.is_finite()) {
        return Err(MpeError::InvalidArgument("paired values must be finite".into()));
    }
    let nonzero: Vec<f64> = diffs.iter().copied().filter(|d| *d != 0.0).collect();
    let zeros_dropped = diffs.len() - nonzero.len();
    let n = nonzero.len();
    if n == 0 {
        return Ok(WilcoxonResult {
            statistic: 0.0,
            p_value: 1.0,
            n_used: 0,
            zeros_dropped,
            mode,
            warning: Some("all paired differences are zero".into()),
        });
    }
    let abs: Vec<f64> = nonzero.iter().map(|d| d.abs()).collect();
    let (ranks, ties) = midranks(&abs);
    let statistic: f64 = ranks
        .iter()
        .zip(&nonzero)
        .filter(|(_, d)| **d > 0.0)
        .map(|(r, _)| r)
        .sum();
    let mode = match mode {
        WilcoxonMode::Auto if n <= EXACT_LIMIT => WilcoxonMode::Exact,
        WilcoxonMode::Auto => WilcoxonMode::Normal,
        m => m,
    };
    let p_value = match mode {
        WilcoxonMode::Exact => exact_upper_tail(&ranks, statistic),
        _ => normal_upper_tail(n, &ties, statistic),
    };
    Ok(WilcoxonResult {
        statistic,
        p_value: p_value.clamp(0.0, 1.0),
        n_used: n,
        zeros_dropped,
        mode,
        warning: None,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn midranks_with_ties() {
        let (r, t) = midranks(&[3.0, 1.0, 3.0, 2.0]);
        assert_eq!(r, vec![3.5, 1.0, 3.5, 2.0]);
        assert_eq!(t, vec![1, 1, 2]);
    }

    #[test]
    fn all_positive_five() {
        let a = [1.0, 2.0, 3.0, 4.0, 5.0];
        let b = [0.0; 5];
        let r = wilcoxon_signed_rank(&a, &b).unwrap();
        assert_eq!(r.statistic, 15.0);
        assert_eq!(r.p_value, 0.03125);
        assert_eq!(r.mode, WilcoxonMode::Exact);
    }

    #[test]
    fn equal_inputs() {
        let a = [0.3; 6];
        let r = wilcoxon_signed_rank(&a, &a).unwrap();
        assert_eq!(r.p_value, 1.0);
        assert_eq!(r.zeros_dropped, 6);
        assert!(r.warning.is_some());
    }

    #[test]
    fn input_checks() {
        assert!(wilcoxon_signed_rank(&[1.0; 4], &[0.0; 4]).is_err());
        assert!(wilcoxon_signed_rank(&[1.0; 5], &[0.0; 6]).is_err());
    }
}
