//! Effect index sets: which features each subfunction depends on.
//!
//! An [`EffectIndex`] is a strictly increasing list of 1-based feature indices;
//! the empty list is the intercept. An [`EffectSet`] is the ordered collection
//! of non-intercept terms a decomposition is built from.
//!
//! Internally the orthogonalization code addresses terms by *slot*: slot 0 is
//! the intercept and slot `i + 1` is `terms[i]`.

use alloc::collections::BTreeSet;
use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;
use core::cmp::Ordering;
use core::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Largest `d` for which [`EffectSet::enumerate_full`] will build the power set.
pub const DEFAULT_ENUMERATION_CAP: usize = 12;

/// Upper bound on the number of terms any effect set may hold.
pub const MAX_TERMS: usize = 1 << 14;

#[derive(Clone, PartialEq, Eq, Hash, Debug, Serialize, Deserialize)]
#[serde(try_from = "Vec<usize>", into = "Vec<usize>")]
pub struct EffectIndex(Vec<usize>);

impl EffectIndex {
    /// Builds an index set from 1-based feature indices in any order.
    /// Duplicates and zero are rejected.
    pub fn new(mut indices: Vec<usize>) -> Result<Self> {
        indices.sort_unstable();
        if indices.first() == Some(&0) {
            return Err(Error::InvalidEffect {
                indices,
                reason: "feature indices are 1-based".into(),
            });
        }
        if indices.windows(2).any(|w| w[0] == w[1]) {
            return Err(Error::InvalidEffect {
                indices,
                reason: "duplicate feature index".into(),
            });
        }
        Ok(EffectIndex(indices))
    }

    pub fn intercept() -> Self {
        EffectIndex(Vec::new())
    }

    /// `{1, ..., d}`.
    pub fn full(d: usize) -> Self {
        EffectIndex((1..=d).collect())
    }

    pub fn indices(&self) -> &[usize] {
        &self.0
    }

    pub fn level(&self) -> usize {
        self.0.len()
    }

    pub fn is_intercept(&self) -> bool {
        self.0.is_empty()
    }

    pub fn fits_in(&self, d: usize) -> bool {
        self.0.last().is_none_or(|&m| m <= d)
    }

    /// Gathers this term's features out of a full feature row.
    pub fn gather(&self, row: &[f64], out: &mut Vec<f64>) {
        out.clear();
        out.extend(self.0.iter().map(|&j| row[j - 1]));
    }

    /// File-name friendly label, e.g. `1_2`; the intercept is `intercept`.
    pub fn label(&self) -> String {
        if self.0.is_empty() {
            return "intercept".into();
        }
        let parts: Vec<String> = self.0.iter().map(|j| format!("{j}")).collect();
        parts.join("_")
    }
}

impl Ord for EffectIndex {
    fn cmp(&self, other: &Self) -> Ordering {
        self.level().cmp(&other.level()).then_with(|| self.0.cmp(&other.0))
    }
}

impl PartialOrd for EffectIndex {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl TryFrom<Vec<usize>> for EffectIndex {
    type Error = Error;

    fn try_from(v: Vec<usize>) -> Result<Self> {
        EffectIndex::new(v)
    }
}

impl From<EffectIndex> for Vec<usize> {
    fn from(e: EffectIndex) -> Self {
        e.0
    }
}

impl fmt::Display for EffectIndex {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.0.is_empty() {
            return f.write_str("{}");
        }
        f.write_str("{")?;
        for (i, j) in self.0.iter().enumerate() {
            if i > 0 {
                f.write_str(",")?;
            }
            write!(f, "{j}")?;
        }
        f.write_str("}")
    }
}

/// Terms of a decomposition, in canonical order (level, then lexicographic).
#[derive(Clone, PartialEq, Eq, Debug, Serialize, Deserialize)]
pub struct EffectSet {
    d: usize,
    terms: Vec<EffectIndex>,
    restricted: bool,
}

/// Slot-level split of an effect set around one level.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct LevelPartition {
    pub actual: Vec<EffectIndex>,
    /// Includes the intercept.
    pub lower: Vec<EffectIndex>,
    pub higher: Vec<EffectIndex>,
}

impl EffectSet {
    /// All `2^d - 1` non-empty subsets of `{1..d}`.
    pub fn enumerate_full(d: usize) -> Result<Self> {
        Self::enumerate_full_capped(d, DEFAULT_ENUMERATION_CAP)
    }

    pub fn enumerate_full_capped(d: usize, cap: usize) -> Result<Self> {
        if d == 0 {
            return Err(Error::invalid("at least one feature is required"));
        }
        if d > cap || d >= usize::BITS as usize {
            return Err(Error::TooManyFeatures { d, cap });
        }
        let mut terms: Vec<EffectIndex> = (1u64..(1u64 << d))
            .map(|mask| EffectIndex((1..=d).filter(|j| mask >> (j - 1) & 1 == 1).collect()))
            .collect();
        terms.sort();
        Ok(EffectSet {
            d,
            terms,
            restricted: false,
        })
    }

    /// The effects of interest plus the full-order term `{1..d}`, which
    /// absorbs everything not listed.
    pub fn restrict_to(theta: &[EffectIndex], d: usize) -> Result<Self> {
        if d == 0 {
            return Err(Error::invalid("at least one feature is required"));
        }
        if theta.is_empty() {
            return Err(Error::invalid("the list of effects of interest is empty"));
        }
        let mut set = BTreeSet::new();
        for t in theta {
            if t.is_intercept() {
                return Err(Error::InvalidEffect {
                    indices: Vec::new(),
                    reason: "the intercept is implicit and cannot be listed".into(),
                });
            }
            if !t.fits_in(d) {
                return Err(Error::InvalidEffect {
                    indices: t.0.clone(),
                    reason: format!("feature index outside 1..={d}"),
                });
            }
            set.insert(t.clone());
        }
        set.insert(EffectIndex::full(d));
        if set.len() > MAX_TERMS {
            return Err(Error::invalid(format!(
                "{} terms exceed the limit of {MAX_TERMS}",
                set.len()
            )));
        }
        Ok(EffectSet {
            d,
            terms: set.into_iter().collect(),
            restricted: true,
        })
    }

    /// Every term of level at most `max_order`, plus the absorbing term.
    pub fn up_to_order(max_order: usize, d: usize) -> Result<Self> {
        if max_order == 0 {
            return Err(Error::invalid("max order must be at least 1"));
        }
        let mut out: Vec<EffectIndex> = Vec::new();
        let mut current = Vec::new();
        fn rec(
            start: usize,
            d: usize,
            left: usize,
            current: &mut Vec<usize>,
            out: &mut Vec<EffectIndex>,
        ) -> Result<()> {
            if !current.is_empty() {
                if out.len() >= MAX_TERMS {
                    return Err(Error::invalid(format!("more than {MAX_TERMS} terms requested")));
                }
                out.push(EffectIndex(current.clone()));
            }
            if left == 0 {
                return Ok(());
            }
            for j in start..=d {
                current.push(j);
                rec(j + 1, d, left - 1, current, out)?;
                current.pop();
            }
            Ok(())
        }
        rec(1, d, max_order.min(d), &mut current, &mut out)?;
        Self::restrict_to(&out, d)
    }

    pub fn d(&self) -> usize {
        self.d
    }

    pub fn terms(&self) -> &[EffectIndex] {
        &self.terms
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn is_restricted(&self) -> bool {
        self.restricted
    }

    /// Position of `theta` in [`terms`](Self::terms).
    pub fn position(&self, theta: &EffectIndex) -> Option<usize> {
        self.terms.binary_search(theta).ok()
    }

    /// Slot of `theta`: 0 for the intercept, `position + 1` otherwise.
    pub fn slot(&self, theta: &EffectIndex) -> Option<usize> {
        if theta.is_intercept() {
            Some(0)
        } else {
            self.position(theta).map(|p| p + 1)
        }
    }

    /// Effect at `slot`.
    pub fn at_slot(&self, slot: usize) -> EffectIndex {
        if slot == 0 {
            EffectIndex::intercept()
        } else {
            self.terms[slot - 1].clone()
        }
    }

    pub fn slot_level(&self, slot: usize) -> usize {
        if slot == 0 {
            0
        } else {
            self.terms[slot - 1].level()
        }
    }

    /// Distinct levels that occur among the terms, ascending.
    pub fn levels(&self) -> Vec<usize> {
        let mut levels: Vec<usize> = self.terms.iter().map(EffectIndex::level).collect();
        levels.dedup();
        levels
    }

    /// Splits the terms plus the intercept by level relative to `k`.
    pub fn level_partition(&self, k: usize) -> LevelPartition {
        let (a, l, h) = self.level_partition_slots(k);
        let map = |v: Vec<usize>| v.into_iter().map(|s| self.at_slot(s)).collect();
        LevelPartition {
            actual: map(a),
            lower: map(l),
            higher: map(h),
        }
    }

    /// Slot version of [`level_partition`](Self::level_partition).
    pub fn level_partition_slots(&self, k: usize) -> (Vec<usize>, Vec<usize>, Vec<usize>) {
        let mut actual = Vec::new();
        let mut lower = Vec::new();
        let mut higher = Vec::new();
        for slot in 0..=self.terms.len() {
            match self.slot_level(slot).cmp(&k) {
                Ordering::Less => lower.push(slot),
                Ordering::Equal => actual.push(slot),
                Ordering::Greater => higher.push(slot),
            }
        }
        (actual, lower, higher)
    }
}
