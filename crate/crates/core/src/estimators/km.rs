//! Kernel mean matching estimator.
//!
//! For each `lambda` on a grid over `[0, 1]` solve
//!
//! ```text
//! d(lambda) = min_{w in simplex} || lambda mu_H + (1 - lambda) Phi_F w - mu_F ||
//! ```
//!
//! in the RKHS of a Gaussian kernel. `d` stays near zero while `lambda` is an
//! admissible proportion of `H` in `F` and grows once it is not; the estimate
//! is the last grid point before the slope of `d` crosses a threshold. `d` is
//! convex and non-decreasing in `lambda`, so the slope sequence is increasing.

use rand::seq::index::sample as sample_indices;
use serde::{Deserialize, Serialize};

use super::simplex::project_onto_simplex;
use super::{CurvePoint, Diagnostics, Estimate, EstimatorKind};
use crate::error::{MpeError, Result};
use crate::sample::Sample;
use crate::seed::rng_from_seed;

/// Base step of the diminishing schedule, in units of `1 / L`.
const STEP_SCALE: f64 = 1.9;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum KmVariant {
    /// Fixed slope threshold.
    Km1,
    /// Threshold proportional to the terminal slope of the curve.
    Km2,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct KmConfig {
    /// Bandwidth is the median pairwise distance times this factor.
    pub bandwidth_multiplier: f64,
    /// Number of grid points on `[0, 1]`.
    pub lambda_grid: usize,
    pub qp_iterations: usize,
    /// Relative objective change below which the QP counts as converged.
    pub qp_tolerance: f64,
    pub variant: KmVariant,
    /// KM1 slope threshold.
    pub slope_threshold: f64,
    /// KM2 threshold as a fraction of the terminal slope.
    pub terminal_slope_ratio: f64,
    /// Lower bound on the KM2 threshold, for curves that never leave zero.
    pub min_slope: f64,
    /// Rows kept per sample for the kernel computations; 0 keeps everything.
    pub max_points: usize,
    /// Seed for the row subsample when `max_points` applies.
    pub seed: u64,
}

impl Default for KmConfig {
    fn default() -> Self {
        Self {
            bandwidth_multiplier: 1.0,
            lambda_grid: 64,
            qp_iterations: 500,
            qp_tolerance: 1e-4,
            variant: KmVariant::Km2,
            slope_threshold: 0.1,
            terminal_slope_ratio: 0.25,
            min_slope: 0.02,
            max_points: 400,
            seed: 0,
        }
    }
}

impl KmConfig {
    pub fn km1() -> Self {
        Self {
            variant: KmVariant::Km1,
            ..Self::default()
        }
    }

    pub fn km2() -> Self {
        Self::default()
    }

    pub fn validate(&self) -> Result<()> {
        if self.lambda_grid < 8 || self.qp_iterations < 50 {
            return Err(MpeError::InvalidArgument(
                "KM lambda grid must be >= 8 and QP iterations >= 50".into(),
            ));
        }
        if !(self.bandwidth_multiplier > 0.0) || !(self.qp_tolerance > 0.0) {
            return Err(MpeError::InvalidArgument(
                "KM bandwidth multiplier and tolerance must be positive".into(),
            ));
        }
        Ok(())
    }
}

fn squared_distance(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    let mut acc = [0.0; 4];
    let chunks = a.len() / 4;
    for i in 0..chunks {
        for k in 0..4 {
            acc[k] += a[4 * i + k] * b[4 * i + k];
        }
    }
    let tail: f64 = a[4 * chunks..].iter().zip(&b[4 * chunks..]).map(|(x, y)| x * y).sum();
    acc.iter().sum::<f64>() + tail
}

fn rows(sample: &Sample) -> Vec<Vec<f64>> {
    sample.points().rows().into_iter().map(|r| r.to_vec()).collect()
}

/// Median pairwise Euclidean distance over the pooled rows. Pools larger than
/// 1000 rows are thinned by a fixed stride first.
pub fn median_heuristic_bandwidth(points: &[Vec<f64>]) -> f64 {
    let stride = points.len().div_ceil(1000).max(1);
    let pool: Vec<&Vec<f64>> = points.iter().step_by(stride).collect();
    let mut dists = Vec::with_capacity(pool.len() * pool.len() / 2);
    for i in 0..pool.len() {
        for j in i + 1..pool.len() {
            dists.push(squared_distance(pool[i], pool[j]).sqrt());
        }
    }
    if dists.is_empty() {
        return 1.0;
    }
    let mid = dists.len() / 2;
    let (_, median, _) = dists.select_nth_unstable_by(mid, f64::total_cmp);
    if *median > 0.0 {
        *median
    } else {
        1.0
    }
}

struct Problem {
    /// Row-major `n_f x n_f` Gram matrix of the mixture rows.
    gram_ff: Vec<f64>,
    n_f: usize,
    /// Row means of `K_FF` and `K_FH`.
    mean_ff_rows: Vec<f64>,
    mean_fh_rows: Vec<f64>,
    mean_ff: f64,
    mean_fh: f64,
    mean_hh: f64,
    /// Spectral radius of `K_FF`.
    spectral: f64,
}

impl Problem {
    fn build(f: &[Vec<f64>], h: &[Vec<f64>], bandwidth: f64) -> Self {
        let gamma = 1.0 / (2.0 * bandwidth * bandwidth);
        let kernel = |a: &[f64], b: &[f64]| (-gamma * squared_distance(a, b)).exp();
        let n_f = f.len();
        let mut gram_ff = vec![0.0; n_f * n_f];
        for i in 0..n_f {
            gram_ff[i * n_f + i] = 1.0;
            for j in i + 1..n_f {
                let k = kernel(&f[i], &f[j]);
                gram_ff[i * n_f + j] = k;
                gram_ff[j * n_f + i] = k;
            }
        }
        let mean_ff_rows: Vec<f64> = gram_ff
            .chunks(n_f)
            .map(|r| r.iter().sum::<f64>() / n_f as f64)
            .collect();
        let mean_fh_rows: Vec<f64> = f
            .iter()
            .map(|a| h.iter().map(|b| kernel(a, b)).sum::<f64>() / h.len() as f64)
            .collect();
        let mut sum_hh = h.len() as f64;
        for i in 0..h.len() {
            for j in i + 1..h.len() {
                sum_hh += 2.0 * kernel(&h[i], &h[j]);
            }
        }
        let mut problem = Problem {
            mean_ff: mean_ff_rows.iter().sum::<f64>() / n_f as f64,
            mean_fh: mean_fh_rows.iter().sum::<f64>() / n_f as f64,
            mean_hh: sum_hh / (h.len() * h.len()) as f64,
            gram_ff,
            n_f,
            mean_ff_rows,
            mean_fh_rows,
            spectral: 0.0,
        };
        problem.spectral = problem.power_iteration(50);
        problem
    }

    fn mat_vec(&self, w: &[f64], out: &mut [f64]) {
        for (o, row) in out.iter_mut().zip(self.gram_ff.chunks(self.n_f)) {
            *o = dot(row, w);
        }
    }

    fn power_iteration(&self, iterations: usize) -> f64 {
        let mut v = vec![1.0 / (self.n_f as f64).sqrt(); self.n_f];
        let mut kv = vec![0.0; self.n_f];
        let mut estimate = 1.0;
        for _ in 0..iterations {
            self.mat_vec(&v, &mut kv);
            let norm = dot(&kv, &kv).sqrt();
            if norm == 0.0 {
                break;
            }
            estimate = norm;
            for (a, b) in v.iter_mut().zip(&kv) {
                *a = b / norm;
            }
        }
        estimate * 1.01
    }

    /// `||lambda mu_H + (1 - lambda) Phi_F w - mu_F||^2` given `K_FF w`.
    fn objective(&self, lambda: f64, w: &[f64], kw: &[f64]) -> f64 {
        let a = 1.0 - lambda;
        let quad = dot(w, kw);
        let linear: f64 = w
            .iter()
            .zip(self.mean_ff_rows.iter().zip(&self.mean_fh_rows))
            .map(|(wi, (r, s))| wi * (r - lambda * s))
            .sum();
        let constant = self.mean_ff - 2.0 * lambda * self.mean_fh + lambda * lambda * self.mean_hh;
        a * a * quad - 2.0 * a * linear + constant
    }

    /// Projected gradient descent with steps `1 / (L sqrt(t))`, warm-started
    /// from `w`. Returns the best objective seen and leaves its weights in `w`.
    fn solve(&self, lambda: f64, w: &mut [f64], cfg: &KmConfig) -> (f64, usize, bool) {
        let a = 1.0 - lambda;
        let mut kw = vec![0.0; self.n_f];
        self.mat_vec(w, &mut kw);
        let mut best = self.objective(lambda, w, &kw);
        if a == 0.0 {
            return (best, 0, true);
        }
        let lipschitz = 2.0 * a * a * self.spectral;
        let mut best_w = w.to_vec();
        let mut previous = best;
        let mut current = w.to_vec();
        for t in 1..=cfg.qp_iterations {
            let step = STEP_SCALE / (lipschitz * (t as f64).sqrt());
            for i in 0..self.n_f {
                let grad = 2.0 * a * a * kw[i] - 2.0 * a * (self.mean_ff_rows[i] - lambda * self.mean_fh_rows[i]);
                current[i] -= step * grad;
            }
            project_onto_simplex(&mut current);
            self.mat_vec(&current, &mut kw);
            let value = self.objective(lambda, &current, &kw);
            if value < best {
                best = value;
                best_w.copy_from_slice(&current);
            }
            let change = (previous - value).abs();
            previous = value;
            if change <= cfg.qp_tolerance * value.abs().max(1e-10) {
                w.copy_from_slice(&best_w);
                return (best, t, true);
            }
        }
        w.copy_from_slice(&best_w);
        (best, cfg.qp_iterations, false)
    }
}

fn capped_rows(sample: &Sample, cap: usize, seed: u64) -> Vec<Vec<f64>> {
    let all = rows(sample);
    if cap == 0 || all.len() <= cap {
        return all;
    }
    let mut rng = rng_from_seed(seed);
    let mut picked = sample_indices(&mut rng, all.len(), cap).into_vec();
    picked.sort_unstable();
    picked.into_iter().map(|i| all[i].clone()).collect()
}

/// Kernel mean matching estimate; the variant in `cfg` picks the slope rule.
pub fn km_estimate(x_f: &Sample, x_h: &Sample, cfg: &KmConfig) -> Result<Estimate> {
    cfg.validate()?;
    if x_f.len() < 16 || x_h.len() < 16 {
        return Err(MpeError::TooFewRows(
            "kernel mean matching needs at least 16 rows per side".into(),
        ));
    }
    if x_f.dim() != x_h.dim() {
        return Err(MpeError::DimensionMismatch {
            expected: x_f.dim(),
            found: x_h.dim(),
        });
    }
    let f = capped_rows(x_f, cfg.max_points, crate::seed::derive_seed(cfg.seed, 0));
    let h = capped_rows(x_h, cfg.max_points, crate::seed::derive_seed(cfg.seed, 1));
    let pooled: Vec<Vec<f64>> = f.iter().chain(&h).cloned().collect();
    let bandwidth = median_heuristic_bandwidth(&pooled) * cfg.bandwidth_multiplier;
    let problem = Problem::build(&f, &h, bandwidth);

    let mut w = vec![1.0 / f.len() as f64; f.len()];
    let steps = cfg.lambda_grid - 1;
    let curve: Vec<CurvePoint> = (0..=steps)
        .map(|k| {
            let lambda = k as f64 / steps as f64;
            let (value, iterations, converged) = problem.solve(lambda, &mut w, cfg);
            CurvePoint {
                lambda,
                distance: value.max(0.0).sqrt(),
                iterations,
                converged,
            }
        })
        .collect();

    let spacing = 1.0 / steps as f64;
    let slopes: Vec<f64> = curve
        .windows(2)
        .map(|p| (p[1].distance - p[0].distance) / spacing)
        .collect();
    let threshold = match cfg.variant {
        KmVariant::Km1 => cfg.slope_threshold,
        KmVariant::Km2 => (cfg.terminal_slope_ratio * slopes[slopes.len() - 1]).max(cfg.min_slope),
    };
    let kappa = slopes
        .iter()
        .position(|&s| s > threshold)
        .map_or(1.0, |k| curve[k].lambda);
    let method = match cfg.variant {
        KmVariant::Km1 => EstimatorKind::Km1,
        KmVariant::Km2 => EstimatorKind::Km2,
    };
    let unconverged = curve.iter().filter(|p| !p.converged).count();
    Ok(Estimate::new(
        kappa,
        method,
        Diagnostics::Km {
            bandwidth,
            slope_threshold: threshold,
            curve,
            unconverged,
        },
    )
    .with_seed(cfg.seed))
}
