//! Synthetic benchmark: reference decompositions of the closed-form scenario
//! functions and replicate runs of an estimator against them.
//!
//! The reference orthogonalizes the seven raw scenario functions on a large
//! sample, each raw function being a one-column basis. Every orthogonalized
//! function is then a fixed linear combination of raw functions plus a
//! constant, so it can be evaluated anywhere. Replicate predictions are the
//! reference intercept plus the orthogonalized functions.

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use crate::dataset::{gen_features, scenario_effect_row, Features, SampleSet, Scenario, ScenarioSpec, SYNTHETIC_D};
use crate::effects::{EffectIndex, EffectSet};
use crate::ensemble::DecompositionResult;
use crate::error::{Error, Result};
use crate::math::{mean, pearson, sqrt};
use crate::metrics::Denominator;
use crate::ortho::{evaluate_record, orthogonalize, BasisFunctions, EffectVectors, TermRecord, DEFAULT_PIVOT_TOL};
use crate::rng::derive_seed;

pub const DEFAULT_REFERENCE_N: usize = 100_000;

/// Raw closed-form scenario functions as single-column bases.
#[derive(Clone, Copy, Debug)]
pub struct RawFunctions<'a> {
    pub scenario: Scenario,
    pub effect_set: &'a EffectSet,
}

impl BasisFunctions for RawFunctions<'_> {
    fn width(&self, _slot: usize) -> usize {
        1
    }

    fn evaluate(&self, slot: usize, row: &[f64], out: &mut [f64]) {
        out[0] = match slot {
            0 => 1.0,
            s => scenario_effect_row(self.scenario, &self.effect_set.terms()[s - 1], row).unwrap_or(f64::NAN),
        };
    }
}

/// The effect set every scenario and estimator run uses: the six low-order
/// terms with the ten-way term absorbing the rest.
pub fn scenario_effect_set() -> EffectSet {
    EffectSet::restrict_to(&Scenario::low_order_terms(), SYNTHETIC_D).expect("static effect set")
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ReferenceDecomposition {
    pub scenario: Scenario,
    pub n_ref: usize,
    pub seed: u64,
    pub pivot_tol: f64,
    pub effect_set: EffectSet,
    /// Slot-indexed; slot 0 is the intercept. Each `beta` and correction has
    /// one coefficient on a raw function.
    pub records: Vec<TermRecord>,
}

impl ReferenceDecomposition {
    pub fn intercept(&self) -> f64 {
        // The intercept basis is the constant 1 at every row.
        let b = &self.records[0];
        let mut v = b.beta[0];
        for c in &b.corrections {
            v -= c.coefficients[0];
        }
        v - b.center
    }

    fn functions(&self) -> RawFunctions<'_> {
        RawFunctions {
            scenario: self.scenario,
            effect_set: &self.effect_set,
        }
    }

    /// Orthogonalized reference function of `slot` at `row` (ten features).
    pub fn evaluate(&self, slot: usize, row: &[f64]) -> Result<f64> {
        if row.len() != SYNTHETIC_D {
            return Err(Error::DimensionMismatch {
                context: "feature row",
                expected: SYNTHETIC_D,
                got: row.len(),
            });
        }
        evaluate_record(&self.records, &self.functions(), slot, row)
    }

    pub fn evaluate_at(&self, theta: &EffectIndex, row: &[f64]) -> Result<f64> {
        let slot = self
            .effect_set
            .slot(theta)
            .ok_or_else(|| Error::UnknownEffect(format!("{theta}")))?;
        self.evaluate(slot, row)
    }

    /// Reference term vectors (slot order, intercept excluded) on `features`.
    pub fn term_vectors(&self, features: &Features) -> Result<Vec<Vec<f64>>> {
        let slots = self.effect_set.len() + 1;
        let mut out = vec![Vec::with_capacity(features.n); slots - 1];
        for i in 0..features.n {
            let row = features.row(i);
            for (s, v) in out.iter_mut().enumerate() {
                v.push(self.evaluate(s + 1, row)?);
            }
        }
        Ok(out)
    }

    /// Samples whose predictions are the intercept plus the orthogonalized
    /// reference functions.
    pub fn sample(&self, features: &Features) -> Result<(SampleSet, Vec<Vec<f64>>)> {
        let terms = self.term_vectors(features)?;
        let mu = self.intercept();
        let f = (0..features.n)
            .map(|i| mu + terms.iter().map(|v| v[i]).sum::<f64>())
            .collect();
        Ok((SampleSet::new(features.d, features.x.clone(), f)?, terms))
    }
}

/// Reference decomposition plus its vectors on the reference sample.
#[derive(Clone, Debug)]
pub struct ReferenceBuild {
    pub reference: ReferenceDecomposition,
    pub features: Features,
    /// Raw (unorthogonalized) function columns in slot order, intercept excluded.
    pub raw: Vec<Vec<f64>>,
    pub vectors: EffectVectors,
}

pub fn build_reference(scenario: Scenario, n_ref: usize, seed: u64) -> Result<ReferenceDecomposition> {
    build_reference_detailed(scenario, n_ref, seed).map(|b| b.reference)
}

pub fn build_reference_detailed(scenario: Scenario, n_ref: usize, seed: u64) -> Result<ReferenceBuild> {
    let features = gen_features(&ScenarioSpec::new(scenario, n_ref, seed))?;
    let effect_set = scenario_effect_set();
    let mut raw = vec![Vec::with_capacity(n_ref); effect_set.len()];
    for i in 0..n_ref {
        let row = features.row(i);
        for (t, col) in effect_set.terms().iter().zip(raw.iter_mut()) {
            col.push(scenario_effect_row(scenario, t, row)?);
        }
    }
    let (initial, bases) = EffectVectors::from_columns(&effect_set, 0.0, raw.clone())?;
    let vectors = orthogonalize(initial, &bases, DEFAULT_PIVOT_TOL)?;
    let reference = ReferenceDecomposition {
        scenario,
        n_ref,
        seed,
        pivot_tol: DEFAULT_PIVOT_TOL,
        effect_set,
        records: vectors.records().to_vec(),
    };
    Ok(ReferenceBuild {
        reference,
        features,
        raw,
        vectors,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TermComparison {
    pub effect: EffectIndex,
    pub rmse: f64,
    /// Pearson correlation of estimated and reference vectors; `None` when
    /// either is constant.
    pub correlation: Option<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ReplicateOutcome {
    pub index: usize,
    pub seed: u64,
    pub i1: f64,
    pub i2: f64,
    pub i1_surrogate: f64,
    pub i2_surrogate: f64,
    /// Level fractions of the reference functions on this replicate's sample.
    pub reference_i1: f64,
    pub reference_i2: f64,
    pub fidelity_r2: f64,
    pub members: usize,
    pub members_reaching_target: usize,
    pub terms: Vec<TermComparison>,
}

/// Everything a replicate produced; the outcome summarizes the rest.
#[derive(Clone, Debug)]
pub struct Replicate {
    pub outcome: ReplicateOutcome,
    pub samples: SampleSet,
    pub reference_terms: Vec<Vec<f64>>,
    pub result: DecompositionResult,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExperimentReport {
    pub scenario: Scenario,
    pub n: usize,
    pub seed: u64,
    pub replicates: Vec<ReplicateOutcome>,
    pub mean_i1: f64,
    pub mean_i2: f64,
    pub mean_reference_i1: f64,
    pub mean_reference_i2: f64,
}

impl ExperimentReport {
    pub fn from_outcomes(scenario: Scenario, n: usize, seed: u64, replicates: Vec<ReplicateOutcome>) -> Self {
        let avg = |f: fn(&ReplicateOutcome) -> f64| mean(&replicates.iter().map(f).collect::<Vec<_>>());
        ExperimentReport {
            scenario,
            n,
            seed,
            mean_i1: avg(|r| r.i1),
            mean_i2: avg(|r| r.i2),
            mean_reference_i1: avg(|r| r.reference_i1),
            mean_reference_i2: avg(|r| r.reference_i2),
            replicates,
        }
    }
}

/// Seed of replicate `index` of an experiment.
pub fn replicate_seed(experiment_seed: u64, index: usize) -> u64 {
    derive_seed(experiment_seed, index as u64)
}

fn level_share(set: &EffectSet, terms: &[Vec<f64>], level: usize, var: f64) -> f64 {
    let n = terms.first().map_or(0, Vec::len);
    let mut sum = vec![0.0; n];
    for (t, v) in set.terms().iter().zip(terms) {
        if t.level() == level {
            sum.iter_mut().zip(v).for_each(|(s, x)| *s += x);
        }
    }
    crate::math::variance(&sum) / var
}

/// Generates replicate `index`, runs `decomposer(samples, effect_set,
/// base_seed)` on it and compares the estimate with the reference.
pub fn run_replicate<D>(
    reference: &ReferenceDecomposition,
    n: usize,
    experiment_seed: u64,
    index: usize,
    decomposer: D,
) -> Result<Replicate>
where
    D: FnOnce(&SampleSet, &EffectSet, u64) -> Result<DecompositionResult>,
{
    let seed = replicate_seed(experiment_seed, index);
    let features = gen_features(&ScenarioSpec::new(reference.scenario, n, seed))?;
    let (samples, reference_terms) = reference.sample(&features)?;
    let result = decomposer(&samples, &reference.effect_set, seed)?;
    if result.effect_set != reference.effect_set {
        return Err(Error::invalid("decomposer returned a different effect set"));
    }
    let m = &result.metrics;
    let var_f = m.sigma_f_sq_original;
    let terms = reference
        .effect_set
        .terms()
        .iter()
        .zip(result.vectors.term_vectors())
        .zip(&reference_terms)
        .map(|((t, est), truth)| {
            let mse = est.iter().zip(truth).map(|(a, b)| (a - b) * (a - b)).sum::<f64>() / n as f64;
            let r = pearson(est, truth);
            TermComparison {
                effect: t.clone(),
                rmse: sqrt(mse),
                correlation: r.is_finite().then_some(r),
            }
        })
        .collect();
    let get = |k, d| m.level(k, d).unwrap_or(0.0);
    let outcome = ReplicateOutcome {
        index,
        seed,
        i1: get(1, Denominator::Original),
        i2: get(2, Denominator::Original),
        i1_surrogate: get(1, Denominator::Surrogate),
        i2_surrogate: get(2, Denominator::Surrogate),
        reference_i1: level_share(&reference.effect_set, &reference_terms, 1, var_f),
        reference_i2: level_share(&reference.effect_set, &reference_terms, 2, var_f),
        fidelity_r2: m.fidelity_r2,
        members: result.members.len(),
        members_reaching_target: result.diagnostics.members_reaching_target,
        terms,
    };
    Ok(Replicate {
        outcome,
        samples,
        reference_terms,
        result,
    })
}

/// Runs `replicates` replicates in order with the same decomposer.
pub fn run_experiment<D>(
    reference: &ReferenceDecomposition,
    n: usize,
    replicates: usize,
    experiment_seed: u64,
    decomposer: D,
) -> Result<ExperimentReport>
where
    D: Fn(&SampleSet, &EffectSet, u64) -> Result<DecompositionResult>,
{
    if replicates == 0 {
        return Err(Error::invalid("at least one replicate is required"));
    }
    let mut outcomes = Vec::with_capacity(replicates);
    for r in 0..replicates {
        outcomes.push(run_replicate(reference, n, experiment_seed, r, &decomposer)?.outcome);
    }
    Ok(ExperimentReport::from_outcomes(
        reference.scenario,
        n,
        experiment_seed,
        outcomes,
    ))
}
