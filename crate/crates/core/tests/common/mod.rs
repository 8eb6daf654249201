#![allow(dead_code)]

use mpe_core::seed::rng_from_seed;
use mpe_core::{DiscreteDistribution, Provenance, Sample};
use ndarray::Array2;
use rand::Rng;
use rand_distr::{Distribution, Normal};

/// `n` rows of `N(mean * 1, I_dim)`.
pub fn gaussian_rows(n: usize, dim: usize, mean: f64, rng: &mut impl Rng) -> Vec<f64> {
    let normal = Normal::new(mean, 1.0).unwrap();
    (0..n * dim).map(|_| normal.sample(rng)).collect()
}

/// `n` rows from `(1 - kappa) N(g_mean * 1, I) + kappa N(h_mean * 1, I)`, with
/// the realized count of component rows fixed at `round(kappa * n)`.
pub fn mixture_sample(n: usize, dim: usize, kappa: f64, g_mean: f64, h_mean: f64, seed: u64) -> Sample {
    let mut rng = rng_from_seed(seed);
    let from_h = (kappa * n as f64).round() as usize;
    let mut values = gaussian_rows(from_h, dim, h_mean, &mut rng);
    values.extend(gaussian_rows(n - from_h, dim, g_mean, &mut rng));
    Sample::new(Array2::from_shape_vec((n, dim), values).unwrap(), Provenance::Mixture).unwrap()
}

pub fn component_sample(n: usize, dim: usize, mean: f64, seed: u64) -> Sample {
    let mut rng = rng_from_seed(seed);
    let values = gaussian_rows(n, dim, mean, &mut rng);
    Sample::new(Array2::from_shape_vec((n, dim), values).unwrap(), Provenance::Component).unwrap()
}

/// Draws `n` support identifiers from `dist` and returns them as scores.
pub fn id_scores(dist: &DiscreteDistribution, n: usize, seed: u64) -> Vec<f64> {
    let mut rng = rng_from_seed(seed);
    dist.sample_ids(n, &mut rng)
        .unwrap()
        .into_iter()
        .map(|id| id as f64)
        .collect()
}

pub fn median(mut v: Vec<f64>) -> f64 {
    v.sort_by(f64::total_cmp);
    let m = v.len() / 2;
    if v.len().is_multiple_of(2) {
        0.5 * (v[m - 1] + v[m])
    } else {
        v[m]
    }
}

/// A 6-point pair whose ratio `h / f` increases with the identifier, so that
/// upper-level sets of the identifier scores are the extreme-ratio sets.
pub fn six_point_pair() -> (DiscreteDistribution, DiscreteDistribution) {
    let f = DiscreteDistribution::from_masses(&[0.3, 0.25, 0.2, 0.12, 0.08, 0.05]).unwrap();
    let h = DiscreteDistribution::from_masses(&[0.05, 0.1, 0.15, 0.2, 0.2, 0.3]).unwrap();
    (f, h)
}
