//! Members and replicates on a rayon pool. Every member is trained on one
//! thread from its own seed and results are collected in index order, so
//! output does not depend on the thread count.

use rayon::prelude::*;
use stackdec_core::ensemble::{combine_members, fit_member, DecompositionResult, EnsembleConfig};
use stackdec_core::{EffectSet, SampleSet};

use crate::error::{Error, Result};

pub fn pool(threads: usize) -> Result<rayon::ThreadPool> {
    rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build()
        .map_err(|e| Error::Usage(format!("cannot start {threads} worker threads: {e}")))
}

/// Parallel counterpart of `stackdec_core::decompose`; call inside
/// `ThreadPool::install`.
pub fn decompose(
    samples: &SampleSet,
    effect_set: &EffectSet,
    config: &EnsembleConfig,
) -> stackdec_core::Result<DecompositionResult> {
    config.validate()?;
    if samples.d() != effect_set.d() {
        return Err(stackdec_core::Error::DimensionMismatch {
            context: "sample feature count",
            expected: effect_set.d(),
            got: samples.d(),
        });
    }
    let outcomes = (0..config.members)
        .into_par_iter()
        .map(|i| fit_member(samples, effect_set, config, i))
        .collect();
    combine_members(samples, effect_set, config, outcomes)
}
