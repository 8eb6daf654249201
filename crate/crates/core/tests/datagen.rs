use std::io::Write;

use mpe_core::classifier::{fit, TrainConfig};
use mpe_core::datagen::{gen_reducible_with_model, generate, load_csv, make_mpe_pair, ComponentSide, MpePair};
use mpe_core::estimators::{component_scores, roc_from_scores, RocConfig};
use mpe_core::{LabeledDataset, Provenance, SplitSpec, SyntheticKind, SyntheticSpec};

fn split(side: ComponentSide, fraction: f64, size: usize, seed: u64) -> SplitSpec {
    SplitSpec {
        component_side: side,
        component_fraction: fraction,
        sample_size: size,
        repeat: 0,
        seed,
    }
}

fn side_rows(ds: &LabeledDataset, pair: &MpePair, side: ComponentSide) -> usize {
    let positive = side == ComponentSide::Positive;
    pair.x_f
        .ids()
        .iter()
        .filter(|&&id| ds.labels[id as usize] == positive)
        .count()
}

#[test]
fn reducible_generator_respects_filter_and_is_reducible() {
    let spec = SyntheticSpec::new(SyntheticKind::Reducible, 800, 3);
    let (ds, filter) = gen_reducible_with_model(&spec).unwrap();
    assert_eq!(ds.class_counts().positive, 800);
    assert_eq!(ds.class_counts().negative, 800);
    for p in filter.predict_posterior(ds.features.view()).unwrap() {
        assert!((0.02..=0.98).contains(&p), "{p}");
    }

    let g = ds.class_sample(true, Provenance::Mixture);
    let h = ds.class_sample(false, Provenance::Component);
    let model = fit(&g, &h, &TrainConfig::default().with_seed(11)).unwrap();
    let est = roc_from_scores(
        &component_scores(&model, &g).unwrap(),
        &component_scores(&model, &h).unwrap(),
        &RocConfig::default(),
    )
    .unwrap();
    assert!(est.kappa_hat > 0.1, "{}", est.kappa_hat);
}

#[test]
fn pair_reports_realized_proportion() {
    let ds = generate(&SyntheticSpec::new(SyntheticKind::Irreducible, 400, 5)).unwrap();
    for side in [ComponentSide::Positive, ComponentSide::Negative] {
        for fraction in [0.25, 0.5, 0.75] {
            let pair = make_mpe_pair(&ds, &split(side, fraction, 100, 8)).unwrap();
            assert_eq!(pair.x_f.len(), 100);
            assert_eq!(pair.x_h.len(), 100);
            assert_eq!(pair.kappa_star, side_rows(&ds, &pair, side) as f64 / 100.0);
            let h_side = pair
                .x_h
                .ids()
                .iter()
                .all(|&id| ds.labels[id as usize] == (side == ComponentSide::Positive));
            assert!(h_side);
            let overlap = pair.x_h.ids().iter().any(|id| pair.x_f.ids().contains(id));
            assert!(!overlap);
        }
    }
    let a = make_mpe_pair(&ds, &split(ComponentSide::Positive, 0.5, 100, 1)).unwrap();
    let b = make_mpe_pair(&ds, &split(ComponentSide::Positive, 0.5, 100, 1)).unwrap();
    assert_eq!(a.x_f, b.x_f);
    assert_eq!(a.x_h, b.x_h);
}

#[test]
fn standardization_inverts_to_raw_features() {
    let mut file = tempfile::NamedTempFile::new().unwrap();
    writeln!(file, "a,b,color,y").unwrap();
    let raw = [[1.5, 200.0], [2.5, -30.0], [-4.0, 12.25], [0.125, 7.0]];
    for (i, r) in raw.iter().enumerate() {
        writeln!(
            file,
            "{},{},{},{}",
            r[0],
            r[1],
            ["red", "blue"][i % 2],
            ["p", "q"][i % 2]
        )
        .unwrap();
    }
    file.flush().unwrap();
    let ds = load_csv(file.path(), "y", &["p".to_string()]).unwrap();
    let std = ds.manifest().standardization.unwrap();
    let back = std.invert(&ds.features);
    for (i, r) in raw.iter().enumerate() {
        assert!((back[[i, 0]] - r[0]).abs() < 1e-9);
        assert!((back[[i, 1]] - r[1]).abs() < 1e-9);
    }
    assert_eq!(ds.labels, vec![true, false, true, false]);
}
