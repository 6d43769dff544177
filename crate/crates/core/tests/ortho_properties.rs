mod common;

use common::{dot, mean, sd};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;
use stackdec_core::metrics::{orthogonality_report, DecompositionView};
use stackdec_core::ortho::{EffectVectors, DEFAULT_PIVOT_TOL};
use stackdec_core::{orthogonalize, EffectSet, TermBasis};

fn random_instance(rng: &mut ChaCha20Rng) -> (EffectSet, Vec<TermBasis>, Vec<Vec<f64>>) {
    let d = rng.random_range(2..=4);
    let n = rng.random_range(50..=500);
    let set = EffectSet::enumerate_full(d).unwrap();
    let mut bases = vec![TermBasis::ones(n)];
    let mut weights = vec![vec![rng.random_range(-2.0..2.0)]];
    for _ in 0..set.len() {
        let shift = rng.random_range(-1.0..1.0);
        bases.push(TermBasis::single(
            (0..n).map(|_| shift + rng.random_range(-1.0..1.0)).collect(),
        ));
        weights.push(vec![rng.random_range(-3.0..3.0)]);
    }
    (set, bases, weights)
}

#[test]
fn hundred_random_instances_satisfy_invariants() {
    let mut rng = ChaCha20Rng::seed_from_u64(2024);
    for case in 0..100 {
        let (set, bases, weights) = random_instance(&mut rng);
        let initial = EffectVectors::initial(&set, &bases, &weights).unwrap();
        let before = initial.total();
        let out = orthogonalize(initial, &bases, DEFAULT_PIVOT_TOL).unwrap();

        let view = DecompositionView {
            effect_set: &set,
            intercept: out.intercept(),
            term_vectors: out.term_vectors(),
            prediction: &before,
        };
        let report = orthogonality_report(&view);
        assert!(
            report.max_normalized_offdiag <= 1e-6,
            "case {case}: {}",
            report.max_normalized_offdiag
        );

        // Every level sum is also orthogonal to the intercept column.
        for k in set.levels() {
            let s = out.level_sum(k);
            assert!(mean(&s).abs() <= 1e-10 * sd(&s).max(1e-300), "case {case} level {k}");
        }
        for v in out.term_vectors() {
            assert!(
                mean(v).abs() <= 1e-10 * sd(v).max(1e-12),
                "case {case}: term not centered"
            );
        }

        let after = out.total();
        let scale = dot(&before, &before).sqrt();
        let err = after
            .iter()
            .zip(&before)
            .map(|(a, b)| (a - b) * (a - b))
            .sum::<f64>()
            .sqrt();
        assert!(err <= 1e-8 * scale, "case {case}: conservation {err}");
    }
}

#[test]
fn orthogonalizing_twice_changes_nothing() {
    let mut rng = ChaCha20Rng::seed_from_u64(9);
    for _ in 0..10 {
        let (set, bases, weights) = random_instance(&mut rng);
        let once = orthogonalize(
            EffectVectors::initial(&set, &bases, &weights).unwrap(),
            &bases,
            DEFAULT_PIVOT_TOL,
        )
        .unwrap();
        let (again, again_bases) =
            EffectVectors::from_columns(&set, once.intercept(), once.term_vectors().to_vec()).unwrap();
        let twice = orthogonalize(again, &again_bases, DEFAULT_PIVOT_TOL).unwrap();
        let scale = once.vectors().iter().flatten().fold(0.0f64, |m, v| m.max(v.abs()));
        for (a, b) in once.vectors().iter().zip(twice.vectors()) {
            for (x, y) in a.iter().zip(b) {
                assert!((x - y).abs() <= 1e-10 * scale);
            }
        }
    }
}

#[test]
fn insufficient_samples_are_rejected() {
    let set = EffectSet::enumerate_full(2).unwrap();
    let n = 3;
    let wide = TermBasis::new(vec![vec![1.0, 2.0, 3.0], vec![0.0, 1.0, 5.0], vec![2.0, 2.0, 1.0]]);
    let bases = vec![
        TermBasis::ones(n),
        wide.clone(),
        wide,
        TermBasis::single(vec![1.0, -1.0, 0.5]),
    ];
    let weights = vec![vec![0.0], vec![1.0, 0.0, 0.0], vec![0.0, 1.0, 0.0], vec![1.0]];
    let initial = EffectVectors::initial(&set, &bases, &weights).unwrap();
    let err = orthogonalize(initial, &bases, DEFAULT_PIVOT_TOL).unwrap_err();
    assert!(
        matches!(err, stackdec_core::Error::InsufficientSamples { .. }),
        "{err:?}"
    );
}
