//! Level-wise explained-variance fractions, generalized Sobol indices and
//! the fidelity/orthogonality diagnostics of a decomposition.
//!
//! Sample (co)variances use divisor `n`; the convention cancels in every
//! ratio reported here.

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use crate::effects::{EffectIndex, EffectSet};
use crate::error::{Error, Result};
use crate::math::{covariance, dot, r_squared, sqrt, variance};

/// Normalized cross-level inner products above this are flagged.
pub const ORTHOGONALITY_TOL: f64 = 1e-6;

/// Which variance the fractions are taken of.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Denominator {
    /// The black-box predictions `F`.
    Original,
    /// The decomposition's own total (intercept plus all terms).
    Surrogate,
}

impl Denominator {
    pub fn name(self) -> &'static str {
        match self {
            Denominator::Original => "original",
            Denominator::Surrogate => "surrogate",
        }
    }
}

/// Borrowed view of a finished decomposition.
#[derive(Clone, Copy, Debug)]
pub struct DecompositionView<'a> {
    pub effect_set: &'a EffectSet,
    pub intercept: f64,
    /// One vector per term, in term order.
    pub term_vectors: &'a [Vec<f64>],
    pub prediction: &'a [f64],
}

impl DecompositionView<'_> {
    pub fn surrogate(&self) -> Vec<f64> {
        let mut out = vec![self.intercept; self.prediction.len()];
        for v in self.term_vectors {
            out.iter_mut().zip(v).for_each(|(o, x)| *o += x);
        }
        out
    }

    pub fn level_sum(&self, level: usize) -> Vec<f64> {
        let mut out = vec![0.0; self.prediction.len()];
        for (t, v) in self.effect_set.terms().iter().zip(self.term_vectors) {
            if t.level() == level {
                out.iter_mut().zip(v).for_each(|(o, x)| *o += x);
            }
        }
        out
    }

    fn denominator_variance(&self, denominator: Denominator) -> Result<f64> {
        let var = match denominator {
            Denominator::Original => variance(self.prediction),
            Denominator::Surrogate => variance(&self.surrogate()),
        };
        if !(var > 0.0) {
            return Err(Error::ZeroVariance);
        }
        Ok(var)
    }
}

/// `I_k`: share of the denominator variance carried by the level-`k` sum.
pub fn level_fraction(view: &DecompositionView<'_>, k: usize, denominator: Denominator) -> Result<f64> {
    if !view.effect_set.levels().contains(&k) {
        return Err(Error::invalid(format!("level {k} does not occur in the effect set")));
    }
    let var = view.denominator_variance(denominator)?;
    Ok(variance(&view.level_sum(k)) / var)
}

/// Generalized Sobol index `S_theta = (var_theta + sum_{theta' != theta} cov) / var`.
pub fn sobol_index(view: &DecompositionView<'_>, theta: &EffectIndex, denominator: Denominator) -> Result<f64> {
    let pos = view
        .effect_set
        .position(theta)
        .ok_or_else(|| Error::UnknownEffect(format!("{theta}")))?;
    let var = view.denominator_variance(denominator)?;
    let terms_total = {
        let mut out = vec![0.0; view.prediction.len()];
        for v in view.term_vectors {
            out.iter_mut().zip(v).for_each(|(o, x)| *o += x);
        }
        out
    };
    Ok(covariance(&view.term_vectors[pos], &terms_total) / var)
}

pub fn fidelity(surrogate: &[f64], prediction: &[f64]) -> Result<f64> {
    r_squared(prediction, surrogate).ok_or(Error::ZeroVariance)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct OrthogonalityReport {
    pub levels: Vec<usize>,
    /// Row-major `levels x levels` matrix of `<s_j, s_k> / n`.
    pub gram: Vec<f64>,
    /// Largest `|G_jk| / sqrt(G_jj G_kk)` over `j != k`.
    pub max_normalized_offdiag: f64,
    pub flagged: bool,
}

/// Gram matrix of the level sums.
pub fn orthogonality_report(view: &DecompositionView<'_>) -> OrthogonalityReport {
    let levels = view.effect_set.levels();
    let sums: Vec<Vec<f64>> = levels.iter().map(|&k| view.level_sum(k)).collect();
    let n = view.prediction.len().max(1) as f64;
    let l = levels.len();
    let mut gram = vec![0.0; l * l];
    for j in 0..l {
        for k in 0..l {
            gram[j * l + k] = dot(&sums[j], &sums[k]) / n;
        }
    }
    let mut worst: f64 = 0.0;
    for j in 0..l {
        for k in 0..l {
            if j == k {
                continue;
            }
            let scale = sqrt(gram[j * l + j] * gram[k * l + k]);
            if scale > 0.0 {
                worst = worst.max(gram[j * l + k].abs() / scale);
            }
        }
    }
    OrthogonalityReport {
        levels,
        gram,
        max_normalized_offdiag: worst,
        flagged: worst > ORTHOGONALITY_TOL,
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LevelFraction {
    pub level: usize,
    pub original: f64,
    pub surrogate: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TermIndex {
    pub effect: EffectIndex,
    pub original: f64,
    pub surrogate: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MetricsTable {
    pub levels: Vec<LevelFraction>,
    pub sobol: Vec<TermIndex>,
    pub sigma_f_sq_original: f64,
    pub sigma_f_sq_surrogate: f64,
    pub fidelity_r2: f64,
    pub orthogonality: OrthogonalityReport,
}

impl MetricsTable {
    pub fn compute(view: &DecompositionView<'_>) -> Result<Self> {
        let sigma_o = view.denominator_variance(Denominator::Original)?;
        let sigma_s = view.denominator_variance(Denominator::Surrogate)?;
        let mut levels = Vec::new();
        for k in view.effect_set.levels() {
            levels.push(LevelFraction {
                level: k,
                original: level_fraction(view, k, Denominator::Original)?,
                surrogate: level_fraction(view, k, Denominator::Surrogate)?,
            });
        }
        let mut sobol = Vec::new();
        for t in view.effect_set.terms() {
            sobol.push(TermIndex {
                effect: t.clone(),
                original: sobol_index(view, t, Denominator::Original)?,
                surrogate: sobol_index(view, t, Denominator::Surrogate)?,
            });
        }
        Ok(MetricsTable {
            levels,
            sobol,
            sigma_f_sq_original: sigma_o,
            sigma_f_sq_surrogate: sigma_s,
            fidelity_r2: fidelity(&view.surrogate(), view.prediction)?,
            orthogonality: orthogonality_report(view),
        })
    }

    /// `I_k` for `level` under `denominator`, if the level is present.
    pub fn level(&self, level: usize, denominator: Denominator) -> Option<f64> {
        self.levels
            .iter()
            .find(|l| l.level == level)
            .map(|l| match denominator {
                Denominator::Original => l.original,
                Denominator::Surrogate => l.surrogate,
            })
    }
}
