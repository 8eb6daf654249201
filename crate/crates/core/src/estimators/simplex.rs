//! Euclidean projection onto the probability simplex.

/// Projects `v` in place onto `{w : w >= 0, sum(w) = 1}` using the
/// sort-and-threshold method.
pub fn project_onto_simplex(v: &mut [f64]) {
    if v.is_empty() {
        return;
    }
    let mut sorted = v.to_vec();
    sorted.sort_unstable_by(|a, b| b.total_cmp(a));
    let mut cumulative = 0.0;
    let mut theta = 0.0;
    for (k, &u) in sorted.iter().enumerate() {
        cumulative += u;
        let candidate = (cumulative - 1.0) / (k + 1) as f64;
        if u - candidate > 0.0 {
            theta = candidate;
        } else {
            break;
        }
    }
    for x in v.iter_mut() {
        *x = (*x - theta).max(0.0);
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn already_on_simplex_is_fixed() {
        let mut v = vec![0.2, 0.3, 0.5];
        project_onto_simplex(&mut v);
        assert!((v[0] - 0.2).abs() < 1e-15 && (v[2] - 0.5).abs() < 1e-15);
    }

    #[test]
    fn known_projection() {
        let mut v = vec![1.0, 1.0];
        project_onto_simplex(&mut v);
        assert_eq!(v, vec![0.5, 0.5]);
        let mut v = vec![2.0, 0.0, -1.0];
        project_onto_simplex(&mut v);
        assert_eq!(v, vec![1.0, 0.0, 0.0]);
    }

    proptest! {
        #[test]
        fn projection_is_feasible(v in prop::collection::vec(-50.0f64..50.0, 1..40)) {
            let mut w = v.clone();
            project_onto_simplex(&mut w);
            prop_assert!(w.iter().all(|x| *x >= 0.0));
            prop_assert!((w.iter().sum::<f64>() - 1.0).abs() < 1e-10);
        }

        #[test]
        fn projection_is_closest_vertex_check(v in prop::collection::vec(-5.0f64..5.0, 2..8)) {
            // the projection is no farther from v than any simplex vertex
            let mut w = v.clone();
            project_onto_simplex(&mut w);
            let dist = |p: &[f64]| p.iter().zip(&v).map(|(a, b)| (a - b).powi(2)).sum::<f64>();
            let dw = dist(&w);
            for k in 0..v.len() {
                let mut e = vec![0.0; v.len()];
                e[k] = 1.0;
                prop_assert!(dw <= dist(&e) + 1e-12);
            }
        }
    }
}
