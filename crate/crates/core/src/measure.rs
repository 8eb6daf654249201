//! Exact mixture-proportion theory on finite discrete supports.
//!
//! Every distribution here is a list of point identifiers with aligned masses.
//! Operations that combine two distributions work on the union of their
//! supports, ordered by first appearance (left operand first).
//!
//! The central quantity is the maximum proportion of `H` in `F`,
//!
//! ```text
//! kappa(F|H) = inf { F(S) / H(S) : H(S) > 0 }
//! ```
//!
//! which on a finite support is attained at a singleton: a ratio of sums is
//! never below the smallest of its termwise ratios.

use std::collections::{BTreeSet, HashMap};

use rand::distr::weighted::WeightedIndex;
use rand::distr::Distribution;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{MpeError, Result};

/// Tolerance on the total mass of a probability measure.
pub const NORMALIZATION_TOL: f64 = 1e-12;

/// A finite-support measure. Probability measures sum to one; intermediate
/// restrictions (`M_A`) carry the `unnormalized` tag.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawDistribution")]
pub struct DiscreteDistribution {
    support: Vec<u64>,
    mass: Vec<f64>,
    #[serde(skip_serializing_if = "std::ops::Not::not")]
    unnormalized: bool,
}

#[derive(Deserialize)]
struct RawDistribution {
    support: Vec<u64>,
    mass: Vec<f64>,
    #[serde(default)]
    unnormalized: bool,
}

impl TryFrom<RawDistribution> for DiscreteDistribution {
    type Error = MpeError;

    fn try_from(raw: RawDistribution) -> Result<Self> {
        if raw.unnormalized {
            Self::unnormalized(raw.support, raw.mass)
        } else {
            Self::new(raw.support, raw.mass)
        }
    }
}

impl DiscreteDistribution {
    /// A probability measure; masses must be non-negative and sum to one.
    pub fn new(support: Vec<u64>, mass: Vec<f64>) -> Result<Self> {
        let d = Self::unnormalized(support, mass)?;
        let total = d.total();
        if (total - 1.0).abs() > NORMALIZATION_TOL {
            return Err(MpeError::InvalidDistribution(format!(
                "masses sum to {total}, expected 1"
            )));
        }
        Ok(Self {
            unnormalized: false,
            ..d
        })
    }

    /// A finite non-negative measure with no normalization requirement.
    pub fn unnormalized(support: Vec<u64>, mass: Vec<f64>) -> Result<Self> {
        if support.len() != mass.len() {
            return Err(MpeError::InvalidDistribution(format!(
                "{} support points but {} masses",
                support.len(),
                mass.len()
            )));
        }
        if let Some(m) = mass.iter().find(|m| !m.is_finite() || **m < 0.0) {
            return Err(MpeError::InvalidDistribution(format!(
                "mass {m} is negative or not finite"
            )));
        }
        let mut seen = BTreeSet::new();
        if let Some(dup) = support.iter().find(|id| !seen.insert(**id)) {
            return Err(MpeError::InvalidDistribution(format!(
                "duplicate support identifier {dup}"
            )));
        }
        Ok(Self {
            support,
            mass,
            unnormalized: true,
        })
    }

    /// Probability measure on identifiers `1..=n`.
    pub fn from_masses(mass: &[f64]) -> Result<Self> {
        Self::new((1..=mass.len() as u64).collect(), mass.to_vec())
    }

    /// Normalizes arbitrary non-negative weights on identifiers `1..=n`.
    pub fn from_weights(weights: &[f64]) -> Result<Self> {
        let total: f64 = weights.iter().sum();
        if !(total > 0.0) {
            return Err(MpeError::InvalidDistribution("weights must have positive total".into()));
        }
        let mass = weights.iter().map(|w| w / total).collect();
        Self::unnormalized((1..=weights.len() as u64).collect(), mass).map(|d| Self {
            unnormalized: false,
            ..d
        })
    }

    pub fn support(&self) -> &[u64] {
        &self.support
    }

    pub fn masses(&self) -> &[f64] {
        &self.mass
    }

    pub fn is_unnormalized(&self) -> bool {
        self.unnormalized
    }

    pub fn len(&self) -> usize {
        self.support.len()
    }

    pub fn is_empty(&self) -> bool {
        self.support.is_empty()
    }

    pub fn total(&self) -> f64 {
        self.mass.iter().sum()
    }

    pub fn index_of(&self, id: u64) -> Option<usize> {
        self.support.iter().position(|&s| s == id)
    }

    /// Mass at a single point; zero off the support.
    pub fn mass_of(&self, id: u64) -> f64 {
        self.index_of(id).map_or(0.0, |i| self.mass[i])
    }

    /// `M(S)` for a set of identifiers. Identifiers off the support contribute zero.
    pub fn measure(&self, set: &SubsetMask) -> f64 {
        self.support
            .iter()
            .zip(&self.mass)
            .filter(|(id, _)| set.contains(**id))
            .map(|(_, m)| m)
            .sum()
    }

    /// Draws `n` i.i.d. support identifiers.
    pub fn sample_ids<R: Rng + ?Sized>(&self, n: usize, rng: &mut R) -> Result<Vec<u64>> {
        let index = WeightedIndex::new(&self.mass).map_err(|e| MpeError::InvalidDistribution(e.to_string()))?;
        Ok((0..n).map(|_| self.support[index.sample(rng)]).collect())
    }

    /// `(1 - weight) * self + weight * other` on the union support.
    pub fn mix(&self, other: &Self, weight: f64) -> Result<Self> {
        check_proportion(weight, "mixture weight")?;
        let aligned = Aligned::new(self, other);
        let mass = aligned
            .left
            .iter()
            .zip(&aligned.right)
            .map(|(a, b)| (1.0 - weight) * a + weight * b)
            .collect();
        Self::new(aligned.support, mass)
    }

    /// Same measure, re-expressed on a superset support order. Points missing
    /// from `self` get zero mass.
    fn on_support(&self, support: &[u64]) -> Vec<f64> {
        let lookup: HashMap<u64, f64> = self.support.iter().copied().zip(self.mass.iter().copied()).collect();
        support
            .iter()
            .map(|id| lookup.get(id).copied().unwrap_or(0.0))
            .collect()
    }
}

/// Two distributions laid out on their common (union) support.
struct Aligned {
    support: Vec<u64>,
    left: Vec<f64>,
    right: Vec<f64>,
}

impl Aligned {
    fn new(left: &DiscreteDistribution, right: &DiscreteDistribution) -> Self {
        let mut support = left.support.clone();
        let known: BTreeSet<u64> = support.iter().copied().collect();
        support.extend(right.support.iter().filter(|id| !known.contains(id)));
        Aligned {
            left: left.on_support(&support),
            right: right.on_support(&support),
            support,
        }
    }
}

/// A set of support identifiers (`S`, `A`, `A^c`).
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct SubsetMask {
    members: BTreeSet<u64>,
}

impl SubsetMask {
    pub fn new<I: IntoIterator<Item = u64>>(members: I) -> Self {
        Self {
            members: members.into_iter().collect(),
        }
    }

    pub fn empty() -> Self {
        Self::default()
    }

    pub fn contains(&self, id: u64) -> bool {
        self.members.contains(&id)
    }

    pub fn is_empty(&self) -> bool {
        self.members.is_empty()
    }

    pub fn len(&self) -> usize {
        self.members.len()
    }

    pub fn iter(&self) -> impl Iterator<Item = u64> + '_ {
        self.members.iter().copied()
    }

    fn check_within(&self, support: &[u64]) -> Result<()> {
        match self.members.iter().find(|id| !support.contains(id)) {
            Some(&id) => Err(MpeError::UnknownIdentifier(id)),
            None => Ok(()),
        }
    }
}

fn check_proportion(value: f64, what: &str) -> Result<()> {
    if (0.0..=1.0).contains(&value) {
        Ok(())
    } else {
        Err(MpeError::InvalidArgument(format!(
            "{what} must lie in [0, 1], got {value}"
        )))
    }
}

/// Maximum proportion of `h` in `f` together with the support point attaining it.
/// Ties go to the lowest index on the union support.
pub fn kappa_max_argmin(f: &DiscreteDistribution, h: &DiscreteDistribution) -> Result<(f64, u64)> {
    let aligned = Aligned::new(f, h);
    let mut best: Option<(f64, u64)> = None;
    for ((id, fm), hm) in aligned.support.iter().zip(&aligned.left).zip(&aligned.right) {
        if *hm > 0.0 {
            let ratio = fm / hm;
            if best.is_none_or(|(b, _)| ratio < b) {
                best = Some((ratio, *id));
            }
        }
    }
    best.map(|(ratio, id)| (ratio.clamp(0.0, 1.0), id))
        .ok_or(MpeError::DegenerateComponent)
}

/// Maximum proportion of `h` in `f`: the minimum of `f(x)/h(x)` over points
/// with `h(x) > 0`, clamped to `[0, 1]`.
pub fn kappa_max(f: &DiscreteDistribution, h: &DiscreteDistribution) -> Result<f64> {
    kappa_max_argmin(f, h).map(|(k, _)| k)
}

/// Largest `kappa` for which `(F - kappa H) / (1 - kappa)` is still a
/// distribution, found by bisection on the feasibility test. Independent of
/// the ratio form and used to cross-check it.
pub fn kappa_max_by_bisection(f: &DiscreteDistribution, h: &DiscreteDistribution, tol: f64) -> Result<f64> {
    let aligned = Aligned::new(f, h);
    if !aligned.right.iter().any(|&m| m > 0.0) {
        return Err(MpeError::DegenerateComponent);
    }
    let feasible = |kappa: f64| {
        aligned
            .left
            .iter()
            .zip(&aligned.right)
            .all(|(fm, hm)| fm - kappa * hm >= 0.0)
    };
    if feasible(1.0) {
        return Ok(1.0);
    }
    let (mut lo, mut hi) = (0.0_f64, 1.0_f64);
    while hi - lo > tol {
        let mid = 0.5 * (lo + hi);
        if feasible(mid) {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(lo)
}

/// Splits `m` into its restrictions to `a` and to the complement of `a`.
pub fn split_measure(m: &DiscreteDistribution, a: &SubsetMask) -> Result<(DiscreteDistribution, DiscreteDistribution)> {
    a.check_within(&m.support)?;
    let (inside, outside): (Vec<f64>, Vec<f64>) = m
        .support
        .iter()
        .zip(&m.mass)
        .map(|(id, &mass)| if a.contains(*id) { (mass, 0.0) } else { (0.0, mass) })
        .unzip();
    Ok((
        DiscreteDistribution::unnormalized(m.support.clone(), inside)?,
        DiscreteDistribution::unnormalized(m.support.clone(), outside)?,
    ))
}

/// The regrouped problem `F = (1 - kappa') G' + kappa' H'`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RegroupResult {
    pub kappa_prime: f64,
    pub g_prime: DiscreteDistribution,
    pub h_prime: DiscreteDistribution,
}

/// Moves the part of `g` living on `a` into the component.
///
/// With `F = (1 - k) G + k H`:
/// `k' = k + (1 - k) G(A)`, `G' = G_{A^c} / G(A^c)` and
/// `H' = ((1 - k) G_A + k H) / ((1 - k) G(A) + k)`.
pub fn regroup(
    g: &DiscreteDistribution,
    h: &DiscreteDistribution,
    kappa_star: f64,
    a: &SubsetMask,
) -> Result<RegroupResult> {
    if !(kappa_star > 0.0 && kappa_star < 1.0) {
        return Err(MpeError::InvalidArgument(format!(
            "kappa* must lie in (0, 1), got {kappa_star}"
        )));
    }
    let aligned = Aligned::new(g, h);
    a.check_within(&aligned.support)?;
    let in_a: Vec<bool> = aligned.support.iter().map(|id| a.contains(*id)).collect();

    let f_a: f64 = aligned
        .left
        .iter()
        .zip(&aligned.right)
        .zip(&in_a)
        .filter(|(_, inside)| **inside)
        .map(|((gm, hm), _)| (1.0 - kappa_star) * gm + kappa_star * hm)
        .sum();
    if f_a <= 0.0 {
        return Err(MpeError::SetOutsideSupport);
    }
    let (g_a, g_ac) =
        aligned.left.iter().zip(&in_a).fold(
            (0.0, 0.0),
            |(ins, out), (gm, inside)| {
                if *inside {
                    (ins + gm, out)
                } else {
                    (ins, out + gm)
                }
            },
        );
    if g_ac <= 0.0 {
        return Err(MpeError::RegroupingEntireG);
    }

    let kappa_prime = kappa_star + (1.0 - kappa_star) * g_a;
    let h_norm = (1.0 - kappa_star) * g_a + kappa_star;
    let g_prime = aligned
        .left
        .iter()
        .zip(&in_a)
        .map(|(gm, inside)| if *inside { 0.0 } else { gm / g_ac })
        .collect();
    let h_prime = aligned
        .left
        .iter()
        .zip(&aligned.right)
        .zip(&in_a)
        .map(|((gm, hm), inside)| {
            let moved = if *inside { (1.0 - kappa_star) * gm } else { 0.0 };
            (moved + kappa_star * hm) / h_norm
        })
        .collect();

    Ok(RegroupResult {
        kappa_prime,
        g_prime: DiscreteDistribution::unnormalized(aligned.support.clone(), g_prime)?,
        h_prime: DiscreteDistribution::unnormalized(aligned.support, h_prime)?,
    })
}

/// `kappa(F|H)` predicted from the true proportion and the reducibility level
/// `beta = kappa(G|H)`.
pub fn bias_identity(kappa_star: f64, beta: f64) -> f64 {
    debug_assert!((0.0..=1.0).contains(&kappa_star) && (0.0..=1.0).contains(&beta));
    kappa_star + (1.0 - kappa_star) * beta
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum OrderingVerdict {
    /// Irreducible case, regrouping left the proportion unchanged.
    Equal,
    /// Reducible case, `kappa* < kappa' < kappa(F|H)`.
    StrictlyBetween,
    Violated,
}

/// Checks the ordering guarantee for a set selected with `G(A)` below
/// `kappa(G|H)`. When `G` is irreducible (`kappa(G|H) = 0`) the only
/// admissible selection is a `G`-null set.
pub fn check_ordering(
    g: &DiscreteDistribution,
    h: &DiscreteDistribution,
    kappa_star: f64,
    a: &SubsetMask,
) -> Result<OrderingVerdict> {
    let beta = kappa_max(g, h)?;
    let g_a = g.measure(a);
    let selected = if beta == 0.0 { g_a == 0.0 } else { g_a < beta };
    if !selected {
        return Err(MpeError::SelectionConditionFailed { g_a, kappa: beta });
    }
    let kappa_prime = regroup(g, h, kappa_star, a)?.kappa_prime;
    let verdict = if beta == 0.0 {
        if kappa_prime == kappa_star {
            OrderingVerdict::Equal
        } else {
            OrderingVerdict::Violated
        }
    } else if kappa_star < kappa_prime && kappa_prime < bias_identity(kappa_star, beta) {
        OrderingVerdict::StrictlyBetween
    } else {
        OrderingVerdict::Violated
    };
    Ok(verdict)
}

/// `(F_A + H) / (F(A) + 1)`: the component a sample-level copy step produces.
pub fn surrogate_h_tilde(
    f: &DiscreteDistribution,
    h: &DiscreteDistribution,
    a: &SubsetMask,
) -> Result<DiscreteDistribution> {
    let aligned = Aligned::new(f, h);
    a.check_within(&aligned.support)?;
    let f_a: f64 = aligned
        .support
        .iter()
        .zip(&aligned.left)
        .filter(|(id, _)| a.contains(**id))
        .map(|(_, m)| m)
        .sum();
    let mass = aligned
        .support
        .iter()
        .zip(aligned.left.iter().zip(&aligned.right))
        .map(|(id, (fm, hm))| {
            let copied = if a.contains(*id) { *fm } else { 0.0 };
            (copied + hm) / (f_a + 1.0)
        })
        .collect();
    DiscreteDistribution::unnormalized(aligned.support, mass)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SurrogateGap {
    /// Largest pointwise difference.
    pub max_singleton: f64,
    /// Half the L1 distance, i.e. the largest difference over all sets.
    pub half_l1: f64,
}

/// Distance between `H'` and its surrogate. Both must live on the same set of points.
pub fn surrogate_gap(h_prime: &DiscreteDistribution, h_tilde: &DiscreteDistribution) -> Result<SurrogateGap> {
    let left: BTreeSet<u64> = h_prime.support.iter().copied().collect();
    let right: BTreeSet<u64> = h_tilde.support.iter().copied().collect();
    if left != right {
        return Err(MpeError::SupportMismatch);
    }
    let other = h_tilde.on_support(&h_prime.support);
    let (max_singleton, l1) = h_prime
        .mass
        .iter()
        .zip(&other)
        .map(|(a, b)| (a - b).abs())
        .fold((0.0_f64, 0.0), |(mx, sum), d| (mx.max(d), sum + d));
    Ok(SurrogateGap {
        max_singleton,
        half_l1: 0.5 * l1,
    })
}

/// `K = ((1 - kappa) M + delta H) / (1 - kappa + delta)` where
/// `M = (F - kappa H) / (1 - kappa)`: an alternative latent distribution showing
/// that `kappa - delta` explains `F` as well as `kappa` does.
pub fn non_identifiability_witness(
    f: &DiscreteDistribution,
    h: &DiscreteDistribution,
    kappa: f64,
    delta: f64,
) -> Result<DiscreteDistribution> {
    let kmax = kappa_max(f, h)?;
    if !(0.0..=kmax).contains(&kappa) || kappa >= 1.0 {
        return Err(MpeError::InvalidArgument(format!(
            "kappa must lie in [0, min(kappa(F|H), 1)), got {kappa} with kappa(F|H) = {kmax}"
        )));
    }
    if !(delta == 0.0 || (delta > 0.0 && delta < kappa)) {
        return Err(MpeError::InvalidArgument(format!(
            "delta must lie in [0, kappa), got {delta}"
        )));
    }
    let aligned = Aligned::new(f, h);
    let mass = aligned
        .left
        .iter()
        .zip(&aligned.right)
        .map(|(fm, hm)| {
            // (1 - kappa) M = F - kappa H, clipped against rounding below zero
            let latent = (fm - kappa * hm).max(0.0);
            (latent + delta * hm) / (1.0 - kappa + delta)
        })
        .collect();
    DiscreteDistribution::unnormalized(aligned.support, mass)
}

/// Inputs to the finite-sample deviation bound for the regrouped estimate.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BoundInputs {
    pub n_f: usize,
    pub n_hprime: usize,
    /// Empirical mass of the regrouped set under the new component sample.
    pub h_hat_a: f64,
    pub delta: f64,
    pub rademacher_f: f64,
    pub rademacher_hprime: f64,
}

impl BoundInputs {
    fn validate(&self) -> Result<()> {
        if self.n_f == 0 || self.n_hprime == 0 {
            return Err(MpeError::InvalidArgument("sample sizes must be >= 1".into()));
        }
        if !(self.delta > 0.0 && self.delta <= 0.5) {
            return Err(MpeError::InvalidArgument(format!(
                "delta must lie in (0, 0.5], got {}",
                self.delta
            )));
        }
        check_proportion(self.h_hat_a, "h_hat_a")?;
        if !(self.rademacher_f >= 0.0 && self.rademacher_hprime >= 0.0) {
            return Err(MpeError::InvalidArgument(
                "Rademacher terms must be non-negative".into(),
            ));
        }
        Ok(())
    }
}

/// `eps(X) = 2 R(X) + 3 sqrt(log(4 / delta) / (2 |X|))`.
pub fn deviation_term(rademacher: f64, n: usize, delta: f64) -> f64 {
    2.0 * rademacher + 3.0 * ((4.0 / delta).ln() / (2.0 * n as f64)).sqrt()
}

/// Sampling part of the deviation bound on `|kappa_hat' - kappa*|`. The
/// `(1 - kappa*) G(A)` term is left to callers who know `kappa*`.
pub fn deviation_bound(b: &BoundInputs) -> Result<f64> {
    b.validate()?;
    let eps_h = deviation_term(b.rademacher_hprime, b.n_hprime, b.delta);
    let eps_f = deviation_term(b.rademacher_f, b.n_f, b.delta);
    let denom = b.h_hat_a + eps_h;
    if denom <= 0.0 {
        return Err(MpeError::InvalidArgument("H'(A) + eps must be positive".into()));
    }
    Ok(eps_h / denom + eps_f / denom)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn d(m: &[f64]) -> DiscreteDistribution {
        DiscreteDistribution::from_masses(m).unwrap()
    }

    #[test]
    fn kappa_max_examples() {
        assert!((kappa_max(&d(&[0.5, 0.5]), &d(&[0.8, 0.2])).unwrap() - 0.625).abs() < 1e-15);
        let f = d(&[0.1, 0.3, 0.6]);
        assert_eq!(kappa_max(&f, &f).unwrap(), 1.0);
        assert_eq!(kappa_max(&d(&[1.0, 0.0]), &d(&[0.0, 1.0])).unwrap(), 0.0);
    }

    #[test]
    fn kappa_max_ties_pick_lowest_index() {
        let (_, id) = kappa_max_argmin(&d(&[0.25, 0.25, 0.5]), &d(&[0.5, 0.5, 0.0])).unwrap();
        assert_eq!(id, 1);
    }

    #[test]
    fn kappa_max_rejects_zero_component() {
        let h = DiscreteDistribution::unnormalized(vec![1, 2], vec![0.0, 0.0]).unwrap();
        assert!(matches!(
            kappa_max(&d(&[0.5, 0.5]), &h),
            Err(MpeError::DegenerateComponent)
        ));
        let empty = DiscreteDistribution::unnormalized(vec![], vec![]).unwrap();
        assert!(kappa_max(&d(&[1.0]), &empty).is_err());
    }

    #[test]
    fn kappa_max_uses_union_support() {
        let f = DiscreteDistribution::new(vec![1, 2], vec![0.5, 0.5]).unwrap();
        let h = DiscreteDistribution::new(vec![2, 3], vec![0.5, 0.5]).unwrap();
        // point 3 carries H mass but no F mass
        assert_eq!(kappa_max(&f, &h).unwrap(), 0.0);
    }

    #[test]
    fn bisection_matches_ratio_form() {
        let f = d(&[0.5, 0.5]);
        let h = d(&[0.8, 0.2]);
        let k = kappa_max_by_bisection(&f, &h, 1e-13).unwrap();
        assert!((k - 0.625).abs() < 1e-12);
    }

    #[test]
    fn split_examples() {
        let (a, ac) = split_measure(&d(&[0.2, 0.8]), &SubsetMask::new([1])).unwrap();
        assert_eq!(a.masses(), &[0.2, 0.0]);
        assert_eq!(ac.masses(), &[0.0, 0.8]);
        assert!(a.is_unnormalized());

        let m = d(&[0.3, 0.3, 0.4]);
        let (a, ac) = split_measure(&m, &SubsetMask::empty()).unwrap();
        assert_eq!(a.masses(), &[0.0, 0.0, 0.0]);
        assert_eq!(ac.masses(), m.masses());

        let (a, ac) = split_measure(&m, &SubsetMask::new([1, 3])).unwrap();
        assert_eq!(a.masses(), &[0.3, 0.0, 0.4]);
        assert_eq!(ac.masses(), &[0.0, 0.3, 0.0]);
    }

    #[test]
    fn split_rejects_unknown_id() {
        assert!(matches!(
            split_measure(&d(&[0.5, 0.5]), &SubsetMask::new([9])),
            Err(MpeError::UnknownIdentifier(9))
        ));
    }

    #[test]
    fn regroup_worked_example() {
        let g = d(&[0.2, 0.8]);
        let h = d(&[0.8, 0.2]);
        let r = regroup(&g, &h, 0.5, &SubsetMask::new([1])).unwrap();
        assert!((r.kappa_prime - 0.6).abs() < 1e-15);
        assert_eq!(r.g_prime.masses(), &[0.0, 1.0]);
        assert!((r.h_prime.masses()[0] - 5.0 / 6.0).abs() < 1e-15);
        assert!((r.h_prime.masses()[1] - 1.0 / 6.0).abs() < 1e-15);
        let f = g.mix(&h, 0.5).unwrap();
        let rebuilt = r.g_prime.mix(&r.h_prime, r.kappa_prime);
        // h_prime is tagged unnormalized but sums to one
        let rebuilt = rebuilt.unwrap();
        for (a, b) in rebuilt.masses().iter().zip(f.masses()) {
            assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn regroup_on_g_null_set_keeps_kappa() {
        let g = d(&[0.0, 0.5, 0.5]);
        let h = d(&[0.4, 0.3, 0.3]);
        let r = regroup(&g, &h, 0.3, &SubsetMask::new([1])).unwrap();
        assert_eq!(r.kappa_prime, 0.3);
        // off A, H' equals H rescaled by kappa*/kappa* = 1
        assert!((r.h_prime.mass_of(2) - 0.3).abs() < 1e-15);
        assert!((r.h_prime.mass_of(3) - 0.3).abs() < 1e-15);
    }

    #[test]
    fn regroup_errors() {
        let g = d(&[0.0, 1.0]);
        let h = d(&[0.0, 1.0]);
        assert!(matches!(
            regroup(&g, &h, 0.5, &SubsetMask::new([1])),
            Err(MpeError::SetOutsideSupport)
        ));
        let g = d(&[1.0, 0.0]);
        let h = d(&[0.5, 0.5]);
        assert!(matches!(
            regroup(&g, &h, 0.5, &SubsetMask::new([1])),
            Err(MpeError::RegroupingEntireG)
        ));
        assert!(regroup(&g, &h, 0.0, &SubsetMask::new([2])).is_err());
    }

    #[test]
    fn bias_examples() {
        assert_eq!(bias_identity(0.5, 0.25), 0.625);
        assert_eq!(bias_identity(0.37, 0.0), 0.37);
        assert!((bias_identity(0.5, 0.4) - 0.7).abs() < 1e-15);
        // beta from the worked pair: kappa(G|H) = min(0.2/0.8, 0.8/0.2)
        let beta = kappa_max(&d(&[0.2, 0.8]), &d(&[0.8, 0.2])).unwrap();
        assert_eq!(beta, 0.25);
        assert_eq!(
            bias_identity(0.5, beta),
            kappa_max(&d(&[0.5, 0.5]), &d(&[0.8, 0.2])).unwrap()
        );
    }

    #[test]
    fn ordering_examples() {
        let v = check_ordering(&d(&[0.2, 0.8]), &d(&[0.8, 0.2]), 0.5, &SubsetMask::new([1])).unwrap();
        assert_eq!(v, OrderingVerdict::StrictlyBetween);
        let v = check_ordering(&d(&[0.0, 1.0]), &d(&[1.0, 0.0]), 0.3, &SubsetMask::new([1])).unwrap();
        assert_eq!(v, OrderingVerdict::Equal);
    }

    #[test]
    fn ordering_precondition() {
        // G(A) = 0.8 is not below kappa(G|H) = 0.25
        let err = check_ordering(&d(&[0.2, 0.8]), &d(&[0.8, 0.2]), 0.5, &SubsetMask::new([2]));
        assert!(matches!(err, Err(MpeError::SelectionConditionFailed { .. })));
    }

    #[test]
    fn surrogate_gap_worked_example() {
        let g = d(&[0.2, 0.8]);
        let h = d(&[0.8, 0.2]);
        let a = SubsetMask::new([1]);
        let f = g.mix(&h, 0.5).unwrap();
        let r = regroup(&g, &h, 0.5, &a).unwrap();
        let tilde = surrogate_h_tilde(&f, &h, &a).unwrap();
        assert!((tilde.mass_of(1) - 13.0 / 15.0).abs() < 1e-15);
        assert!((tilde.mass_of(2) - 2.0 / 15.0).abs() < 1e-15);
        let gap = surrogate_gap(&r.h_prime, &tilde).unwrap();
        assert!((gap.max_singleton - 1.0 / 30.0).abs() < 1e-15);
        assert!((gap.half_l1 - 1.0 / 30.0).abs() < 1e-15);
        assert_eq!(surrogate_gap(&tilde, &tilde).unwrap().max_singleton, 0.0);
    }

    #[test]
    fn surrogate_gap_support_mismatch() {
        let a = DiscreteDistribution::new(vec![1, 2], vec![0.5, 0.5]).unwrap();
        let b = DiscreteDistribution::new(vec![1, 3], vec![0.5, 0.5]).unwrap();
        assert!(matches!(surrogate_gap(&a, &b), Err(MpeError::SupportMismatch)));
    }

    #[test]
    fn bound_example() {
        let b = BoundInputs {
            n_f: 100,
            n_hprime: 100,
            h_hat_a: 0.5,
            delta: 0.05,
            rademacher_f: 0.0,
            rademacher_hprime: 0.0,
        };
        let eps = 3.0 * (80.0_f64.ln() / 200.0).sqrt();
        let expected = 2.0 * eps / (0.5 + eps);
        assert!((deviation_bound(&b).unwrap() - expected).abs() < 1e-14);

        let huge = BoundInputs {
            n_f: usize::MAX / 4,
            n_hprime: usize::MAX / 4,
            ..b
        };
        assert!(deviation_bound(&huge).unwrap() < 1e-8);
    }

    #[test]
    fn bound_rejects_bad_inputs() {
        let b = BoundInputs {
            n_f: 0,
            n_hprime: 10,
            h_hat_a: 0.5,
            delta: 0.05,
            rademacher_f: 0.0,
            rademacher_hprime: 0.0,
        };
        assert!(deviation_bound(&b).is_err());
        assert!(deviation_bound(&BoundInputs {
            n_f: 10,
            delta: 0.7,
            ..b
        })
        .is_err());
        assert!(deviation_bound(&BoundInputs {
            n_f: 10,
            h_hat_a: 1.5,
            ..b
        })
        .is_err());
    }

    #[test]
    fn json_round_trip_and_validation() {
        let f = d(&[0.25, 0.75]);
        let s = serde_json::to_string(&f).unwrap();
        assert_eq!(s, r#"{"support":[1,2],"mass":[0.25,0.75]}"#);
        let back: DiscreteDistribution = serde_json::from_str(&s).unwrap();
        assert_eq!(back, f);
        assert!(serde_json::from_str::<DiscreteDistribution>(r#"{"support":[1,2],"mass":[0.5,0.6]}"#).is_err());
        assert!(serde_json::from_str::<DiscreteDistribution>(r#"{"support":[1,1],"mass":[0.5,0.5]}"#).is_err());
    }
}
