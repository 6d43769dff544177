//! Post-hoc orthogonalization of per-term sample vectors.
//!
//! Levels are processed from the highest present level down to level 2. At
//! level `k` the lower-order basis `U` concatenates the bases of every term of
//! level `< k` together with the intercept column of ones. Each level-`k`
//! vector is replaced by its residual from the least-squares projection onto
//! `U`, and the summed projection coefficients are handed to the lower-order
//! terms, so the total over all terms never changes. Higher levels are left
//! alone. A final pass centers every non-intercept vector and moves the
//! removed means into the intercept.
//!
//! When `U` is rank deficient the projection uses the columns picked by a
//! column-pivoted QR (pivots with `|r_kk| > tol * |r_00|`); the dropped
//! columns receive zero coefficients.
//!
//! Every vector keeps a representation in terms of the bases,
//! `f = U_theta beta - sum_s U_s gamma_s - center`, so effects can be
//! evaluated away from the sample through [`BasisFunctions`].

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;
use core::ops::Range;

use serde::{Deserialize, Serialize};

use crate::effects::{EffectIndex, EffectSet};
use crate::error::{Error, Result};
use crate::linalg::PivotedQr;
use crate::math::{dot, mean};

/// Relative pivot tolerance for the rank decision.
pub const DEFAULT_PIVOT_TOL: f64 = 1e-10;

/// Sample-space basis of one term: `b` columns of length `n`.
#[derive(Clone, Debug, PartialEq)]
pub struct TermBasis {
    columns: Vec<Vec<f64>>,
}

impl TermBasis {
    pub fn new(columns: Vec<Vec<f64>>) -> Self {
        TermBasis { columns }
    }

    pub fn ones(n: usize) -> Self {
        TermBasis {
            columns: vec![vec![1.0; n]],
        }
    }

    pub fn single(column: Vec<f64>) -> Self {
        TermBasis { columns: vec![column] }
    }

    pub fn columns(&self) -> &[Vec<f64>] {
        &self.columns
    }

    pub fn width(&self) -> usize {
        self.columns.len()
    }

    pub fn nrows(&self) -> usize {
        self.columns.first().map_or(0, Vec::len)
    }

    /// `U c`.
    pub fn combine(&self, coefficients: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; self.nrows()];
        self.add_combination(coefficients, 1.0, &mut out);
        out
    }

    fn add_combination(&self, coefficients: &[f64], sign: f64, out: &mut [f64]) {
        for (col, c) in self.columns.iter().zip(coefficients) {
            if *c == 0.0 {
                continue;
            }
            let s = sign * c;
            out.iter_mut().zip(col).for_each(|(o, u)| *o += s * u);
        }
    }
}

/// Concatenated lower-order basis with its full-rank column selection.
#[derive(Clone, Debug)]
pub struct ProjectionBasis {
    nrows: usize,
    columns: Vec<Vec<f64>>,
    /// `(slot, column range)` of each contributing term.
    ranges: Vec<(usize, Range<usize>)>,
    qr: PivotedQr,
}

/// Result of [`project`].
#[derive(Clone, Debug, PartialEq)]
pub struct Projection {
    pub fitted: Vec<f64>,
    pub residual: Vec<f64>,
    /// One coefficient per basis column; zero for unselected columns.
    pub coefficients: Vec<f64>,
}

/// Selects a linearly independent subset of `columns` by pivoted QR.
pub fn fullrank_subbasis(
    columns: Vec<Vec<f64>>,
    ranges: Vec<(usize, Range<usize>)>,
    tol: f64,
) -> Result<ProjectionBasis> {
    let nrows = columns.first().map_or(0, Vec::len);
    if let Some(bad) = columns.iter().position(|c| c.len() != nrows) {
        return Err(Error::DimensionMismatch {
            context: "projection basis column",
            expected: nrows,
            got: columns[bad].len(),
        });
    }
    if columns.iter().flatten().any(|v| !v.is_finite()) {
        return Err(Error::NonFinite("projection basis".into()));
    }
    let qr = PivotedQr::new(&columns, nrows, tol);
    if qr.rank() == 0 {
        return Err(Error::EmptyBasis);
    }
    Ok(ProjectionBasis {
        nrows,
        columns,
        ranges,
        qr,
    })
}

impl ProjectionBasis {
    /// Basis from whole term blocks, in the given slot order.
    pub fn from_terms(blocks: &[(usize, &TermBasis)], tol: f64) -> Result<Self> {
        let mut columns = Vec::new();
        let mut ranges = Vec::new();
        for (slot, basis) in blocks {
            let start = columns.len();
            columns.extend(basis.columns.iter().cloned());
            ranges.push((*slot, start..columns.len()));
        }
        fullrank_subbasis(columns, ranges, tol)
    }

    /// Total column count `B`.
    pub fn width(&self) -> usize {
        self.columns.len()
    }

    pub fn rank(&self) -> usize {
        self.qr.rank()
    }

    /// Indices of the selected columns, in pivot order.
    pub fn selected(&self) -> &[usize] {
        self.qr.selected()
    }

    pub fn ranges(&self) -> &[(usize, Range<usize>)] {
        &self.ranges
    }

    /// Least-squares coefficients of `z` (zero on unselected columns), with
    /// one step of iterative refinement.
    pub fn coefficients(&self, z: &[f64]) -> Vec<f64> {
        let mut c = self.qr.solve_selected(z);
        let mut r = z.to_vec();
        for (k, &j) in self.qr.selected().iter().enumerate() {
            let ck = c[k];
            r.iter_mut().zip(&self.columns[j]).for_each(|(ri, u)| *ri -= ck * u);
        }
        let delta = self.qr.solve_selected(&r);
        c.iter_mut().zip(&delta).for_each(|(a, b)| *a += b);
        let mut full = vec![0.0; self.columns.len()];
        for (k, &j) in self.qr.selected().iter().enumerate() {
            full[j] = c[k];
        }
        full
    }

    /// `U c` for a full-length coefficient vector.
    pub fn combine(&self, coefficients: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; self.nrows];
        for (col, c) in self.columns.iter().zip(coefficients) {
            if *c != 0.0 {
                out.iter_mut().zip(col).for_each(|(o, u)| *o += c * u);
            }
        }
        out
    }
}

/// Orthogonal projection of `z` onto the span of the selected columns.
pub fn project(basis: &ProjectionBasis, z: &[f64]) -> Result<Projection> {
    if z.len() != basis.nrows {
        return Err(Error::DimensionMismatch {
            context: "projected vector",
            expected: basis.nrows,
            got: z.len(),
        });
    }
    let coefficients = basis.coefficients(z);
    let fitted = basis.combine(&coefficients);
    let residual = z.iter().zip(&fitted).map(|(a, b)| a - b).collect();
    Ok(Projection {
        fitted,
        residual,
        coefficients,
    })
}

/// Coefficients subtracted from a term along another term's basis.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Correction {
    pub slot: usize,
    pub coefficients: Vec<f64>,
}

/// How a term's vector is built from the bases:
/// `U_theta beta - sum_c U_{c.slot} c.coefficients - center`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TermRecord {
    pub beta: Vec<f64>,
    pub corrections: Vec<Correction>,
    pub center: f64,
    /// Level at which this term was the actual level, if it ever was.
    pub processed_level: Option<usize>,
}

/// Per-term sample vectors (slot 0 is the intercept) with their records.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EffectVectors {
    effect_set: EffectSet,
    vectors: Vec<Vec<f64>>,
    records: Vec<TermRecord>,
    iterations: usize,
}

fn check_bases(effect_set: &EffectSet, bases: &[TermBasis]) -> Result<usize> {
    if bases.len() != effect_set.len() + 1 {
        return Err(Error::DimensionMismatch {
            context: "basis count (terms + intercept)",
            expected: effect_set.len() + 1,
            got: bases.len(),
        });
    }
    let n = bases[0].nrows();
    for b in bases {
        if b.width() == 0 {
            return Err(Error::invalid("every term basis needs at least one column"));
        }
        if let Some(c) = b.columns.iter().find(|c| c.len() != n) {
            return Err(Error::DimensionMismatch {
                context: "basis column length",
                expected: n,
                got: c.len(),
            });
        }
    }
    Ok(n)
}

impl EffectVectors {
    /// `f_theta = U_theta w_theta` for every slot. `weights[0]` holds the
    /// initial intercept (usually `[0.0]`).
    pub fn initial(effect_set: &EffectSet, bases: &[TermBasis], weights: &[Vec<f64>]) -> Result<Self> {
        check_bases(effect_set, bases)?;
        if weights.len() != bases.len() {
            return Err(Error::DimensionMismatch {
                context: "weight vector count",
                expected: bases.len(),
                got: weights.len(),
            });
        }
        let mut vectors = Vec::with_capacity(bases.len());
        let mut records = Vec::with_capacity(bases.len());
        for (b, w) in bases.iter().zip(weights) {
            if w.len() != b.width() {
                return Err(Error::DimensionMismatch {
                    context: "weight vector length",
                    expected: b.width(),
                    got: w.len(),
                });
            }
            let v = b.combine(w);
            if v.iter().any(|x| !x.is_finite()) {
                return Err(Error::NonFinite("initial effect vector".into()));
            }
            vectors.push(v);
            records.push(TermRecord {
                beta: w.clone(),
                corrections: Vec::new(),
                center: 0.0,
                processed_level: None,
            });
        }
        Ok(EffectVectors {
            effect_set: effect_set.clone(),
            vectors,
            records,
            iterations: 0,
        })
    }

    /// Single-column bases equal to the given vectors, each with weight 1.
    /// `term_vectors` excludes the intercept.
    pub fn from_columns(
        effect_set: &EffectSet,
        intercept: f64,
        term_vectors: Vec<Vec<f64>>,
    ) -> Result<(Self, Vec<TermBasis>)> {
        let n = term_vectors.first().map_or(0, Vec::len);
        let mut bases = vec![TermBasis::ones(n)];
        bases.extend(term_vectors.into_iter().map(TermBasis::single));
        let mut weights = vec![vec![intercept]];
        weights.extend((1..bases.len()).map(|_| vec![1.0]));
        let ev = Self::initial(effect_set, &bases, &weights)?;
        Ok((ev, bases))
    }

    pub fn effect_set(&self) -> &EffectSet {
        &self.effect_set
    }

    /// All slot vectors; index 0 is the intercept.
    pub fn vectors(&self) -> &[Vec<f64>] {
        &self.vectors
    }

    pub fn vector(&self, slot: usize) -> &[f64] {
        &self.vectors[slot]
    }

    /// Non-intercept vectors in term order.
    pub fn term_vectors(&self) -> &[Vec<f64>] {
        &self.vectors[1..]
    }

    pub fn records(&self) -> &[TermRecord] {
        &self.records
    }

    pub fn iterations(&self) -> usize {
        self.iterations
    }

    pub fn n(&self) -> usize {
        self.vectors[0].len()
    }

    /// Intercept value (the intercept vector is constant).
    pub fn intercept(&self) -> f64 {
        self.vectors[0].first().copied().unwrap_or(0.0)
    }

    /// Sum over all slots, i.e. the surrogate's values on the sample.
    pub fn total(&self) -> Vec<f64> {
        let mut out = vec![0.0; self.n()];
        for v in &self.vectors {
            out.iter_mut().zip(v).for_each(|(o, x)| *o += x);
        }
        out
    }

    /// Sum of the vectors of all terms at `level`.
    pub fn level_sum(&self, level: usize) -> Vec<f64> {
        let mut out = vec![0.0; self.n()];
        for slot in 1..self.vectors.len() {
            if self.effect_set.slot_level(slot) == level {
                out.iter_mut().zip(&self.vectors[slot]).for_each(|(o, x)| *o += x);
            }
        }
        out
    }

    /// Rebuilds a slot vector from its record and the sample bases.
    pub fn reconstruct(&self, slot: usize, bases: &[TermBasis]) -> Vec<f64> {
        let rec = &self.records[slot];
        let mut out = bases[slot].combine(&rec.beta);
        for c in &rec.corrections {
            bases[c.slot].add_combination(&c.coefficients, -1.0, &mut out);
        }
        out.iter_mut().for_each(|v| *v -= rec.center);
        out
    }
}

/// Imposes stacked orthogonality on `initial`, whose vectors must equal
/// `U_theta w_theta` for the given `bases` (slot-indexed, slot 0 the ones
/// column).
pub fn orthogonalize(initial: EffectVectors, bases: &[TermBasis], tol: f64) -> Result<EffectVectors> {
    let n = check_bases(&initial.effect_set, bases)?;
    if initial.n() != n {
        return Err(Error::DimensionMismatch {
            context: "effect vector length",
            expected: n,
            got: initial.n(),
        });
    }
    if bases[0].width() != 1 || bases[0].columns[0].iter().any(|v| *v != 1.0) {
        return Err(Error::invalid("slot 0 basis must be a single column of ones"));
    }
    let mut ev = initial;
    let set = ev.effect_set.clone();
    let mut levels: Vec<usize> = set.levels().into_iter().filter(|&k| k >= 2).collect();
    levels.reverse();

    for (m, &k) in levels.iter().enumerate() {
        let (actual, lower, _higher) = set.level_partition_slots(k);
        let width: usize = lower.iter().map(|&s| bases[s].width()).sum();
        if n < width {
            return Err(Error::InsufficientSamples {
                iteration: m + 1,
                level: k,
                n,
                width,
            });
        }
        let blocks: Vec<(usize, &TermBasis)> = lower.iter().map(|&s| (s, &bases[s])).collect();
        let basis = ProjectionBasis::from_terms(&blocks, tol)?;

        let mut total = vec![0.0; basis.width()];
        for &slot in &actual {
            let c = basis.coefficients(&ev.vectors[slot]);
            let fitted = basis.combine(&c);
            ev.vectors[slot].iter_mut().zip(&fitted).for_each(|(f, p)| *f -= p);
            if ev.vectors[slot].iter().any(|v| !v.is_finite()) {
                return Err(Error::NonFinite(format!("effect {} at level {k}", set.at_slot(slot))));
            }
            let rec = &mut ev.records[slot];
            rec.processed_level = Some(k);
            for (s, range) in basis.ranges() {
                let coeffs = c[range.clone()].to_vec();
                if coeffs.iter().any(|v| *v != 0.0) {
                    rec.corrections.push(Correction {
                        slot: *s,
                        coefficients: coeffs,
                    });
                }
            }
            total.iter_mut().zip(&c).for_each(|(t, v)| *t += v);
        }
        for (s, range) in basis.ranges() {
            let coeffs = &total[range.clone()];
            bases[*s].add_combination(coeffs, 1.0, &mut ev.vectors[*s]);
            ev.records[*s].beta.iter_mut().zip(coeffs).for_each(|(b, c)| *b += c);
        }
        ev.iterations = m + 1;
    }

    // Center the terms; the intercept absorbs the means.
    let mut moved = 0.0;
    for slot in 1..ev.vectors.len() {
        let mu = mean(&ev.vectors[slot]);
        ev.vectors[slot].iter_mut().for_each(|v| *v -= mu);
        ev.records[slot].center += mu;
        moved += mu;
    }
    ev.vectors[0].iter_mut().for_each(|v| *v += moved);
    ev.records[0].center -= moved;
    Ok(ev)
}

/// Access to the basis functions `U_theta(x)` at arbitrary feature rows.
pub trait BasisFunctions {
    /// Number of columns of slot `slot`'s basis (1 for the intercept).
    fn width(&self, slot: usize) -> usize;

    /// Writes `U_slot(row)` into `out`; `row` holds all `d` features.
    fn evaluate(&self, slot: usize, row: &[f64], out: &mut [f64]);
}

/// Value of the effect at `slot` at a new feature row, through its record.
/// For slot 0 this is the intercept.
pub fn evaluate_effect(
    vectors: &EffectVectors,
    functions: &impl BasisFunctions,
    slot: usize,
    row: &[f64],
) -> Result<f64> {
    let d = vectors.effect_set.d();
    if row.len() != d {
        return Err(Error::DimensionMismatch {
            context: "feature row",
            expected: d,
            got: row.len(),
        });
    }
    evaluate_record(&vectors.records, functions, slot, row)
}

/// Evaluates slot `slot` of a record table at `row`, without checking the
/// row against a feature count.
pub fn evaluate_record(
    records: &[TermRecord],
    functions: &impl BasisFunctions,
    slot: usize,
    row: &[f64],
) -> Result<f64> {
    let rec = records
        .get(slot)
        .ok_or_else(|| Error::UnknownEffect(format!("slot {slot}")))?;
    let mut buf = vec![0.0; functions.width(slot)];
    functions.evaluate(slot, row, &mut buf);
    let mut value = dot(&buf, &rec.beta);
    for c in &rec.corrections {
        let mut u = vec![0.0; functions.width(c.slot)];
        functions.evaluate(c.slot, row, &mut u);
        value -= dot(&u, &c.coefficients);
    }
    Ok(value - rec.center)
}

/// [`evaluate_effect`] addressed by effect index.
pub fn evaluate_effect_at(
    vectors: &EffectVectors,
    functions: &impl BasisFunctions,
    theta: &EffectIndex,
    row: &[f64],
) -> Result<f64> {
    let slot = vectors
        .effect_set
        .slot(theta)
        .ok_or_else(|| Error::UnknownEffect(format!("{theta}")))?;
    evaluate_effect(vectors, functions, slot, row)
}
