//! Fixtures shared by the criterion benches.

use mpe_core::datagen::{generate, make_mpe_pair, ComponentSide, MpePair};
use mpe_core::seed::rng_from_seed;
use mpe_core::{DiscreteDistribution, SplitSpec, SyntheticKind, SyntheticSpec};
use rand::Rng;

/// Random `(F, H)` on a common support of `n` points with full support.
pub fn discrete_pair(n: usize, seed: u64) -> (DiscreteDistribution, DiscreteDistribution) {
    let mut rng = rng_from_seed(seed);
    let mut draw = || -> Vec<f64> { (0..n).map(|_| rng.random_range(0.05..1.0)).collect() };
    let f = DiscreteDistribution::from_weights(&draw()).expect("positive weights");
    let h = DiscreteDistribution::from_weights(&draw()).expect("positive weights");
    (f, h)
}

/// Mixture and component samples of `sample_size` rows from the irreducible
/// Gaussian benchmark in `dim` dimensions.
pub fn gaussian_pair(sample_size: usize, dim: usize, seed: u64) -> MpePair {
    let mut spec = SyntheticSpec::new(SyntheticKind::Irreducible, 4 * sample_size, seed);
    spec.dim = dim;
    let ds = generate(&spec).expect("valid spec");
    let split = SplitSpec {
        component_side: ComponentSide::Positive,
        component_fraction: 0.5,
        sample_size,
        repeat: 0,
        seed,
    };
    make_mpe_pair(&ds, &split).expect("pools are large enough")
}

/// Paired error vectors with mostly positive differences.
pub fn paired_errors(n: usize, seed: u64) -> (Vec<f64>, Vec<f64>) {
    let mut rng = rng_from_seed(seed);
    let b: Vec<f64> = (0..n).map(|_| rng.random_range(0.0..0.2)).collect();
    let a = b.iter().map(|x| x + rng.random_range(-0.02..0.05)).collect();
    (a, b)
}
