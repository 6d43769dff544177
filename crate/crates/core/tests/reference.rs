mod common;

use common::{dot, lstsq, max_abs_diff};
use stackdec_core::dataset::{gen_features, ScenarioSpec};
use stackdec_core::experiments::{build_reference_detailed, scenario_effect_set};
use stackdec_core::metrics::{orthogonality_report, DecompositionView};
use stackdec_core::Scenario;

const ALL: [Scenario; 3] = [Scenario::One, Scenario::Two, Scenario::Three];

#[test]
fn reference_vectors_are_stacked_orthogonal_and_conserve_the_raw_sum() {
    for s in ALL {
        let b = build_reference_detailed(s, 4000, 11).unwrap();
        let n = b.features.n;
        let raw_total: Vec<f64> = (0..n).map(|i| b.raw.iter().map(|c| c[i]).sum()).collect();
        let total = b.vectors.total();
        assert!(max_abs_diff(&total, &raw_total) <= 1e-8, "{s:?} conservation");
        let view = DecompositionView {
            effect_set: &b.reference.effect_set,
            intercept: b.vectors.intercept(),
            term_vectors: b.vectors.term_vectors(),
            prediction: &raw_total,
        };
        assert!(
            orthogonality_report(&view).max_normalized_offdiag <= 1e-6,
            "{s:?} orthogonality"
        );
        for v in b.vectors.term_vectors() {
            let m = v.iter().sum::<f64>() / n as f64;
            assert!(
                m.abs() <= 1e-10 * (dot(v, v) / n as f64).sqrt().max(1.0),
                "{s:?} centering"
            );
        }
    }
}

#[test]
fn record_replay_reproduces_sample_vectors() {
    let b = build_reference_detailed(Scenario::Two, 3000, 5).unwrap();
    let r = &b.reference;
    for i in (0..b.features.n).step_by(97) {
        let row = b.features.row(i);
        for s in 1..=r.effect_set.len() {
            let a = r.evaluate(s, row).unwrap();
            let e = b.vectors.vector(s)[i];
            assert!((a - e).abs() <= 1e-9 * (1.0 + e.abs()), "slot {s} row {i}: {a} vs {e}");
        }
    }
    assert!((r.intercept() - b.vectors.intercept()).abs() <= 1e-10);
    assert!(r.evaluate(1, &[0.0; 3]).is_err());
}

#[test]
fn reference_vectors_stay_in_the_span_of_raw_functions() {
    let b = build_reference_detailed(Scenario::One, 2000, 3).unwrap();
    let mut cols = vec![vec![1.0; b.features.n]];
    cols.extend(b.raw.iter().cloned());
    for v in b.vectors.term_vectors() {
        let c = lstsq(&cols, v);
        let fit: Vec<f64> = (0..b.features.n)
            .map(|i| cols.iter().zip(&c).map(|(col, k)| col[i] * k).sum())
            .collect();
        let scale = v.iter().fold(0.0f64, |m, x| m.max(x.abs()));
        assert!(max_abs_diff(&fit, v) <= 1e-6 * scale.max(1.0));
    }
}

#[test]
fn sampled_predictions_are_the_intercept_plus_reference_terms() {
    let b = build_reference_detailed(Scenario::Three, 3000, 8).unwrap();
    let features = gen_features(&ScenarioSpec::new(Scenario::Three, 200, 99)).unwrap();
    let (samples, terms) = b.reference.sample(&features).unwrap();
    assert_eq!(terms.len(), scenario_effect_set().len());
    let mu = b.reference.intercept();
    for i in 0..200 {
        let sum: f64 = mu + terms.iter().map(|t| t[i]).sum::<f64>();
        assert!((samples.predictions()[i] - sum).abs() <= 1e-12 * (1.0 + sum.abs()));
    }
}
