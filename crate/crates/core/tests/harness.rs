use mpe_core::classifier::TrainConfig;
use mpe_core::datagen::ComponentSide;
use mpe_core::harness::{
    aggregate, json_bytes, read_trials_csv, run_grid, sweep_copy_fraction, trials_csv, wilcoxon_signed_rank_with,
    DatasetRef, SplitGrid, Variant, WilcoxonMode,
};
use mpe_core::regrouping::EstimatorSpec;
use mpe_core::{EstimatorKind, RegroupConfig, RunManifest, SyntheticKind, SyntheticSpec};
use proptest::prelude::*;

fn small_manifest(repeats: usize, estimators: Vec<EstimatorSpec>) -> RunManifest {
    let mut m = RunManifest::new(
        DatasetRef::Synthetic(SyntheticSpec {
            dim: 3,
            ..SyntheticSpec::new(SyntheticKind::Irreducible, 300, 2)
        }),
        estimators,
        17,
    );
    m.splits = SplitGrid {
        sides: vec![ComponentSide::Positive, ComponentSide::Negative],
        component_fractions: vec![0.5],
        sample_sizes: vec![60],
    };
    m.regroup = RegroupConfig {
        classifier: TrainConfig {
            epochs: 10,
            ..TrainConfig::default()
        },
        ..RegroupConfig::default()
    };
    m.repeats = repeats;
    m
}

/// `P(W+ = w)` and `P(W+ >= w)` by enumerating all sign assignments of `ranks`.
fn brute_force(ranks: &[f64], w: f64) -> (f64, f64) {
    let n = ranks.len();
    let (mut eq, mut ge) = (0u64, 0u64);
    for signs in 0u32..(1 << n) {
        let s: f64 = (0..n).filter(|i| signs & (1 << i) != 0).map(|i| ranks[i]).sum();
        if (s - w).abs() < 1e-9 {
            eq += 1;
        }
        if s >= w - 1e-9 {
            ge += 1;
        }
    }
    let total = (1u64 << n) as f64;
    (eq as f64 / total, ge as f64 / total)
}

/// Midranks of `|d|` computed the slow way.
fn naive_ranks(d: &[f64]) -> Vec<f64> {
    d.iter()
        .map(|x| {
            let below = d.iter().filter(|y| y.abs() < x.abs()).count() as f64;
            let equal = d.iter().filter(|y| y.abs() == x.abs()).count() as f64;
            below + (equal + 1.0) / 2.0
        })
        .collect()
}

#[test]
fn one_repeat_gives_two_rows_per_cell() {
    let report = run_grid(&small_manifest(1, vec![EstimatorSpec::Roc(Default::default())])).unwrap();
    assert_eq!(report.failure_count(), 0);
    assert_eq!(report.rows.len(), 4);
    for side in [ComponentSide::Positive, ComponentSide::Negative] {
        let rows: Vec<_> = report.rows.iter().filter(|r| r.side == side).collect();
        assert_eq!(rows.len(), 2);
        assert_eq!(rows.iter().filter(|r| r.variant == Variant::Plain).count(), 1);
    }
}

#[test]
fn trial_csv_round_trip_reproduces_aggregates() {
    let report = run_grid(&small_manifest(
        5,
        vec![EstimatorSpec::Roc(Default::default()), EstimatorSpec::En],
    ))
    .unwrap();
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("trials.csv");
    std::fs::write(&path, trials_csv(&report.rows).unwrap()).unwrap();
    let rows = read_trials_csv(&path).unwrap();
    assert_eq!(rows, report.rows);
    let (cells, estimators) = aggregate(&rows);
    let close = |a: f64, b: f64| (a - b).abs() <= 1e-12;
    for (x, y) in estimators
        .iter()
        .zip(&report.estimators)
        .chain(cells.iter().zip(&report.cells))
    {
        assert_eq!(x.pairs, y.pairs);
        assert!(close(x.plain.mean_abs_error, y.plain.mean_abs_error));
        assert!(close(x.regrouped.mean_abs_error, y.regrouped.mean_abs_error));
        assert!(close(x.plain.var_abs_error.unwrap(), y.plain.var_abs_error.unwrap()));
    }
    assert_eq!(report.comparison(EstimatorKind::En).unwrap().pairs, 10);
}

#[test]
fn rerun_reproduces_report_bytes() {
    let m = small_manifest(2, vec![EstimatorSpec::En]);
    let a = run_grid(&m).unwrap();
    let b = run_grid(&m).unwrap();
    assert_eq!(trials_csv(&a.rows).unwrap(), trials_csv(&b.rows).unwrap());
    assert_eq!(
        json_bytes(&a.aggregate_file()).unwrap(),
        json_bytes(&b.aggregate_file()).unwrap()
    );
}

#[test]
fn sweep_at_zero_has_no_effect() {
    let m = small_manifest(3, vec![EstimatorSpec::Roc(Default::default())]);
    let sweep = sweep_copy_fraction(&m, &[0.0, 0.1]).unwrap();
    let zero = sweep.point(EstimatorKind::Roc, 0.0).unwrap();
    assert_eq!(zero.mean_kappa_diff, 0.0);
    assert_eq!(zero.mean_abs_error_diff, 0.0);
    for row in sweep.rows.iter().filter(|r| r.p == 0.0) {
        assert_eq!(row.copied, 0);
    }
    for row in sweep.rows.iter().filter(|r| r.p == 0.1) {
        assert_eq!(row.copied, 6);
    }
}

#[test]
fn exact_and_normal_modes_agree_at_twenty() {
    use rand::Rng;
    let mut rng = mpe_core::seed::rng_from_seed(3);
    for _ in 0..200 {
        let shift = rng.random_range(-0.5..0.5);
        let a: Vec<f64> = (0..20).map(|_| rng.random_range(-1.0..1.0) + shift).collect();
        let b = vec![0.0; 20];
        let exact = wilcoxon_signed_rank_with(&a, &b, WilcoxonMode::Exact).unwrap();
        let normal = wilcoxon_signed_rank_with(&a, &b, WilcoxonMode::Normal).unwrap();
        assert!(
            (exact.p_value - normal.p_value).abs() <= 0.02,
            "{} vs {}",
            exact.p_value,
            normal.p_value
        );
    }
}

proptest! {
    #![proptest_config(ProptestConfig { cases: 300, failure_persistence: None, ..ProptestConfig::default() })]

    #[test]
    fn exact_mode_matches_enumeration(d in prop::collection::vec((-4i32..=4).prop_map(f64::from), 5..=10)) {
        let nonzero: Vec<f64> = d.iter().copied().filter(|x| *x != 0.0).collect();
        prop_assume!(!nonzero.is_empty());
        let zeros = vec![0.0; d.len()];
        let ranks = naive_ranks(&nonzero);
        let w: f64 = ranks.iter().zip(&nonzero).filter(|(_, x)| **x > 0.0).map(|(r, _)| r).sum();
        let (p_eq, p_ge) = brute_force(&ranks, w);

        let fwd = wilcoxon_signed_rank_with(&d, &zeros, WilcoxonMode::Exact).unwrap();
        prop_assert_eq!(fwd.statistic, w);
        prop_assert!((fwd.p_value - p_ge).abs() < 1e-12);

        let rev = wilcoxon_signed_rank_with(&zeros, &d, WilcoxonMode::Exact).unwrap();
        prop_assert!((fwd.p_value + rev.p_value - (1.0 + p_eq)).abs() < 1e-12);
    }
}
