//! Ensembles of orthogonalized surrogates.
//!
//! Each member is a NAM trained from its own seed and orthogonalized on its
//! own penultimate-layer bases. The members' term vectors are averaged and the
//! average goes through one more orthogonalization whose bases are the
//! averaged vectors themselves (one column per term plus the intercept).
//!
//! Member `r` uses seed `derive_seed(base_seed, r)` for both weight
//! initialization and training unless explicit seeds are supplied.

use alloc::format;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use crate::dataset::SampleSet;
use crate::effects::{EffectIndex, EffectSet};
use crate::error::{Error, Result};
use crate::math::sqrt;
use crate::metrics::{DecompositionView, MetricsTable};
use crate::nam::{FitReport, NamModel, SubNetworkConfig, TrainConfig};
use crate::ortho::{evaluate_effect, orthogonalize, BasisFunctions, EffectVectors, TermBasis, DEFAULT_PIVOT_TOL};
use crate::rng::derive_seed;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EnsembleConfig {
    pub members: usize,
    pub base_seed: u64,
    pub train: TrainConfig,
    pub subnet: SubNetworkConfig,
    /// Upper bound on concurrently trained members (used by parallel drivers).
    pub parallelism: usize,
    pub pivot_tol: f64,
    /// Explicit member seeds; overrides the derivation from `base_seed`.
    pub member_seeds: Option<Vec<u64>>,
}

impl Default for EnsembleConfig {
    fn default() -> Self {
        EnsembleConfig {
            members: 10,
            base_seed: 0,
            train: TrainConfig::default(),
            subnet: SubNetworkConfig::default(),
            parallelism: 1,
            pivot_tol: DEFAULT_PIVOT_TOL,
            member_seeds: None,
        }
    }
}

impl EnsembleConfig {
    pub fn validate(&self) -> Result<()> {
        if self.members == 0 {
            return Err(Error::invalid("the ensemble needs at least one member"));
        }
        if let Some(s) = &self.member_seeds {
            if s.len() != self.members {
                return Err(Error::DimensionMismatch {
                    context: "member seeds",
                    expected: self.members,
                    got: s.len(),
                });
            }
        }
        if !(self.pivot_tol >= 0.0 && self.pivot_tol < 1.0) {
            return Err(Error::invalid("pivot tolerance must lie in [0, 1)"));
        }
        self.train.validate()?;
        self.subnet.validate()
    }

    pub fn member_seed(&self, index: usize) -> u64 {
        match &self.member_seeds {
            Some(s) => s[index],
            None => derive_seed(self.base_seed, index as u64),
        }
    }
}

/// One trained and orthogonalized ensemble member.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MemberFit {
    pub index: usize,
    pub seed: u64,
    pub model: NamModel,
    pub report: FitReport,
    pub vectors: EffectVectors,
}

/// Trains member `index` and orthogonalizes it on its own bases.
pub fn fit_member(
    samples: &SampleSet,
    effect_set: &EffectSet,
    config: &EnsembleConfig,
    index: usize,
) -> Result<MemberFit> {
    let seed = config.member_seed(index);
    let mut model = NamModel::init(effect_set, &config.subnet, seed)?;
    let train = TrainConfig {
        seed,
        ..config.train.clone()
    };
    let report = model.fit(samples, &train)?;
    let vectors = orthogonalize_model(&model, samples, config.pivot_tol)?;
    Ok(MemberFit {
        index,
        seed,
        model,
        report,
        vectors,
    })
}

/// Orthogonalizes a fitted model's term outputs on its penultimate bases.
pub fn orthogonalize_model(model: &NamModel, samples: &SampleSet, tol: f64) -> Result<EffectVectors> {
    let slots = model.effect_set().len() + 1;
    let bases: Vec<TermBasis> = (0..slots)
        .map(|s| model.penultimate_matrix(samples, s))
        .collect::<Result<_>>()?;
    let mut weights = vec![vec![0.0]];
    weights.extend(model.subnets().iter().map(|s| s.output_weights().to_vec()));
    let initial = EffectVectors::initial(model.effect_set(), &bases, &weights)?;
    orthogonalize(initial, &bases, tol)
}

/// Re-imposes stacked orthogonality on averaged vectors, using each averaged
/// vector as its term's single-column basis.
pub fn final_pass(effect_set: &EffectSet, intercept: f64, averaged: Vec<Vec<f64>>, tol: f64) -> Result<EffectVectors> {
    let (initial, bases) = EffectVectors::from_columns(effect_set, intercept, averaged)?;
    orthogonalize(initial, &bases, tol)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Diagnostics {
    pub member_seeds: Vec<u64>,
    pub member_r2: Vec<Option<f64>>,
    pub member_epochs: Vec<usize>,
    pub members_reaching_target: usize,
    /// Root mean (over samples) of the across-member variance, per term.
    pub ensemble_spread: Vec<f64>,
    pub warnings: Vec<String>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DecompositionResult {
    pub effect_set: EffectSet,
    pub intercept: f64,
    /// Output of the final pass; its records refer to the averaged member
    /// effects as bases.
    pub vectors: EffectVectors,
    pub members: Vec<MemberFit>,
    pub prediction: Vec<f64>,
    pub metrics: MetricsTable,
    pub diagnostics: Diagnostics,
}

impl DecompositionResult {
    pub fn view(&self) -> DecompositionView<'_> {
        DecompositionView {
            effect_set: &self.effect_set,
            intercept: self.intercept,
            term_vectors: self.vectors.term_vectors(),
            prediction: &self.prediction,
        }
    }

    pub fn surrogate(&self) -> Vec<f64> {
        self.vectors.total()
    }

    /// Final vector of `theta` on the sample.
    pub fn term_vector(&self, theta: &EffectIndex) -> Option<&[f64]> {
        self.effect_set.slot(theta).map(|s| self.vectors.vector(s))
    }

    /// Final effect of `slot` at a new feature row.
    pub fn evaluate(&self, slot: usize, row: &[f64]) -> Result<f64> {
        evaluate_effect(&self.vectors, &AveragedMembers(&self.members), slot, row)
    }

    pub fn evaluate_at(&self, theta: &EffectIndex, row: &[f64]) -> Result<f64> {
        let slot = self
            .effect_set
            .slot(theta)
            .ok_or_else(|| Error::UnknownEffect(format!("{theta}")))?;
        self.evaluate(slot, row)
    }
}

/// Bases of the final pass: slot 0 is the constant 1, slot `s` the member
/// average of effect `s`.
struct AveragedMembers<'a>(&'a [MemberFit]);

impl BasisFunctions for AveragedMembers<'_> {
    fn width(&self, _slot: usize) -> usize {
        1
    }

    fn evaluate(&self, slot: usize, row: &[f64], out: &mut [f64]) {
        if slot == 0 {
            out[0] = 1.0;
            return;
        }
        let sum: f64 = self
            .0
            .iter()
            .map(|m| evaluate_effect(&m.vectors, &m.model, slot, row).unwrap_or(f64::NAN))
            .sum();
        out[0] = sum / self.0.len() as f64;
    }
}

/// Averages member outcomes (in index order), runs the final pass and
/// computes metrics. Members that errored are dropped with a warning;
/// members that missed the R^2 target are kept with a warning.
pub fn combine_members(
    samples: &SampleSet,
    effect_set: &EffectSet,
    config: &EnsembleConfig,
    outcomes: Vec<Result<MemberFit>>,
) -> Result<DecompositionResult> {
    let total = outcomes.len();
    let mut warnings = Vec::new();
    let mut members = Vec::new();
    for (i, o) in outcomes.into_iter().enumerate() {
        match o {
            Ok(m) => {
                if !m.report.reached_target {
                    warnings.push(format!(
                        "member {i} (seed {}) stopped at R^2 {} after {} epochs, below the target {}",
                        m.seed,
                        m.report
                            .final_r2
                            .map_or_else(|| String::from("undefined"), |r| format!("{r:.6}")),
                        m.report.epochs,
                        config.train.r2_target
                    ));
                }
                members.push(m);
            }
            Err(e) => warnings.push(format!("member {i} failed and was dropped: {e}")),
        }
    }
    if members.is_empty() {
        return Err(Error::AllMembersFailed(total));
    }

    let n = samples.n();
    let slots = effect_set.len() + 1;
    let r = members.len() as f64;
    let mut avg = vec![vec![0.0; n]; slots];
    for m in &members {
        for (a, v) in avg.iter_mut().zip(m.vectors.vectors()) {
            a.iter_mut().zip(v).for_each(|(x, y)| *x += y);
        }
    }
    avg.iter_mut().flatten().for_each(|x| *x /= r);

    let spread = (1..slots)
        .map(|slot| {
            let acc: f64 = avg[slot]
                .iter()
                .enumerate()
                .map(|(i, mu)| {
                    members
                        .iter()
                        .map(|m| {
                            let d = m.vectors.vector(slot)[i] - mu;
                            d * d
                        })
                        .sum::<f64>()
                        / r
                })
                .sum();
            sqrt(acc / n as f64)
        })
        .collect();

    let intercept0 = avg[0][0];
    let vectors = final_pass(effect_set, intercept0, avg.split_off(1), config.pivot_tol)?;
    let intercept = vectors.intercept();
    let prediction = samples.predictions().to_vec();
    let metrics = MetricsTable::compute(&DecompositionView {
        effect_set,
        intercept,
        term_vectors: vectors.term_vectors(),
        prediction: &prediction,
    })?;
    let diagnostics = Diagnostics {
        member_seeds: members.iter().map(|m| m.seed).collect(),
        member_r2: members.iter().map(|m| m.report.final_r2).collect(),
        member_epochs: members.iter().map(|m| m.report.epochs).collect(),
        members_reaching_target: members.iter().filter(|m| m.report.reached_target).count(),
        ensemble_spread: spread,
        warnings,
    };
    Ok(DecompositionResult {
        effect_set: effect_set.clone(),
        intercept,
        vectors,
        members,
        prediction,
        metrics,
        diagnostics,
    })
}

/// Fits every member in turn and combines them.
pub fn decompose(samples: &SampleSet, effect_set: &EffectSet, config: &EnsembleConfig) -> Result<DecompositionResult> {
    config.validate()?;
    if samples.d() != effect_set.d() {
        return Err(Error::DimensionMismatch {
            context: "sample feature count",
            expected: effect_set.d(),
            got: samples.d(),
        });
    }
    let outcomes = (0..config.members)
        .map(|i| fit_member(samples, effect_set, config, i))
        .collect();
    combine_members(samples, effect_set, config, outcomes)
}
