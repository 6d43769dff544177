mod common;

use common::max_abs_diff;
use stackdec_core::ensemble::{combine_members, fit_member, EnsembleConfig};
use stackdec_core::metrics::orthogonality_report;
use stackdec_core::rng::derive_seed;
use stackdec_core::{decompose, EffectSet, Error, SampleSet, SubNetworkConfig, TrainConfig};

fn samples(n: usize) -> SampleSet {
    let mut x = Vec::with_capacity(2 * n);
    let mut f = Vec::with_capacity(n);
    for i in 0..n {
        let a = ((i * 37) % n) as f64 / n as f64 * 2.0 - 1.0;
        let b = ((i * 61 + 7) % n) as f64 / n as f64 * 2.0 - 1.0;
        x.extend([a, b]);
        f.push(1.0 + a - 0.5 * b * b + a * b);
    }
    SampleSet::new(2, x, f).unwrap()
}

fn config(members: usize, seed: u64) -> EnsembleConfig {
    EnsembleConfig {
        members,
        base_seed: seed,
        train: TrainConfig {
            max_epochs: 30,
            batch_size: 32,
            learning_rate: 5e-3,
            ..TrainConfig::default()
        },
        subnet: SubNetworkConfig::with_widths(&[8, 4]).without_dropout(),
        ..EnsembleConfig::default()
    }
}

#[test]
fn single_member_final_pass_keeps_member_vectors() {
    let s = samples(120);
    let set = EffectSet::enumerate_full(2).unwrap();
    let r = decompose(&s, &set, &config(1, 4)).unwrap();
    let m = &r.members[0].vectors;
    for slot in 0..=set.len() {
        assert!(
            max_abs_diff(r.vectors.vector(slot), m.vector(slot)) <= 1e-8,
            "slot {slot}"
        );
    }
    assert_eq!(r.diagnostics.member_seeds, vec![derive_seed(4, 0)]);
}

#[test]
fn same_seed_gives_identical_results() {
    let s = samples(100);
    let set = EffectSet::enumerate_full(2).unwrap();
    let a = decompose(&s, &set, &config(3, 21)).unwrap();
    let b = decompose(&s, &set, &config(3, 21)).unwrap();
    assert_eq!(a, b);
    let c = decompose(&s, &set, &config(3, 22)).unwrap();
    assert_ne!(a.vectors, c.vectors);
}

#[test]
fn final_pass_satisfies_the_constraints_on_the_average() {
    let s = samples(150);
    let set = EffectSet::enumerate_full(2).unwrap();
    let r = decompose(&s, &set, &config(3, 9)).unwrap();
    assert!(orthogonality_report(&r.view()).max_normalized_offdiag <= 1e-6);
    let n = s.n() as f64;
    for v in r.vectors.term_vectors() {
        assert!((v.iter().sum::<f64>() / n).abs() <= 1e-10);
    }
    let mut avg_total = vec![0.0; s.n()];
    for m in &r.members {
        avg_total
            .iter_mut()
            .zip(m.vectors.total())
            .for_each(|(a, t)| *a += t / 3.0);
    }
    assert!(max_abs_diff(&r.surrogate(), &avg_total) <= 1e-8);
    assert_eq!(r.diagnostics.ensemble_spread.len(), set.len());
}

#[test]
fn off_sample_evaluation_matches_sample_vectors() {
    let s = samples(80);
    let set = EffectSet::enumerate_full(2).unwrap();
    let r = decompose(&s, &set, &config(2, 2)).unwrap();
    for i in (0..s.n()).step_by(9) {
        for slot in 1..=set.len() {
            let e = r.vectors.vector(slot)[i];
            let a = r.evaluate(slot, s.row(i)).unwrap();
            assert!((a - e).abs() <= 1e-8 * (1.0 + e.abs()), "slot {slot} row {i}");
        }
    }
}

#[test]
fn failed_members_are_dropped_with_a_warning() {
    let s = samples(60);
    let set = EffectSet::enumerate_full(2).unwrap();
    let cfg = config(2, 1);
    let ok = fit_member(&s, &set, &cfg, 1).unwrap();
    let r = combine_members(&s, &set, &cfg, vec![Err(Error::ZeroVariance), Ok(ok)]).unwrap();
    assert_eq!(r.members.len(), 1);
    assert!(r.diagnostics.warnings.iter().any(|w| w.contains("member 0 failed")));
    let none = combine_members(&s, &set, &cfg, vec![Err(Error::ZeroVariance), Err(Error::ZeroVariance)]);
    assert!(matches!(none, Err(Error::AllMembersFailed(2))));
}

#[test]
fn invalid_configs_are_rejected() {
    let s = samples(40);
    let set = EffectSet::enumerate_full(2).unwrap();
    assert!(decompose(&s, &set, &config(0, 1)).is_err());
    let mut c = config(2, 1);
    c.member_seeds = Some(vec![1]);
    assert!(decompose(&s, &set, &c).is_err());
    assert!(decompose(&s, &EffectSet::enumerate_full(3).unwrap(), &config(1, 1)).is_err());
}
