//! Synthetic experiments on disk: cached references, replicate directories
//! and plot data.

use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use stackdec_core::experiments::{
    build_reference_detailed, run_replicate, ExperimentReport, ReferenceDecomposition, Replicate,
};
use stackdec_core::math::pearson;
use stackdec_core::metrics::{orthogonality_report, DecompositionView};
use stackdec_core::Scenario;

use crate::config::RunConfig;
use crate::error::Result;
use crate::io::{create_dir, fmt_f64, read_json, write_csv, write_json};
use crate::output::write_decomposition;
use crate::parallel;

pub const DEFAULT_REFERENCE_SEED: u64 = 20_231_113;
pub const GRID_SIZE: usize = 50;
pub const GRID_LIMIT: f64 = 3.0;

pub fn reference_path(dir: &Path, scenario: Scenario) -> PathBuf {
    dir.join(format!("reference_s{}.json", scenario.id()))
}

/// Checks computed while building a reference.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ReferenceCheck {
    pub max_normalized_offdiag: f64,
    pub conservation_max_abs: f64,
    pub intercept: f64,
}

pub fn build_reference(
    scenario: Scenario,
    n_ref: usize,
    seed: u64,
) -> Result<(ReferenceDecomposition, ReferenceCheck)> {
    let b = build_reference_detailed(scenario, n_ref, seed)?;
    let raw_total: Vec<f64> = (0..n_ref).map(|i| b.raw.iter().map(|c| c[i]).sum()).collect();
    let total = b.vectors.total();
    let conservation = total
        .iter()
        .zip(&raw_total)
        .map(|(a, c)| (a - c).abs())
        .fold(0.0, f64::max);
    let view = DecompositionView {
        effect_set: &b.reference.effect_set,
        intercept: b.vectors.intercept(),
        term_vectors: b.vectors.term_vectors(),
        prediction: &raw_total,
    };
    let check = ReferenceCheck {
        max_normalized_offdiag: orthogonality_report(&view).max_normalized_offdiag,
        conservation_max_abs: conservation,
        intercept: b.reference.intercept(),
    };
    Ok((b.reference, check))
}

/// Loads `reference_s<k>.json` from `dir` if it matches `n_ref` and `seed`,
/// otherwise builds and stores it. Returns whether the cache was used.
pub fn load_or_build_reference(
    dir: &Path,
    scenario: Scenario,
    n_ref: usize,
    seed: u64,
) -> Result<(ReferenceDecomposition, bool)> {
    let path = reference_path(dir, scenario);
    if path.exists() {
        let cached: ReferenceDecomposition = read_json(&path)?;
        if cached.scenario == scenario && cached.n_ref == n_ref && cached.seed == seed {
            return Ok((cached, true));
        }
    }
    let (reference, _) = build_reference(scenario, n_ref, seed)?;
    create_dir(dir)?;
    write_json(&path, &reference)?;
    Ok((reference, false))
}

#[derive(Clone, Debug)]
pub struct ExperimentSpec {
    pub scenario: Scenario,
    pub n: usize,
    pub replicates: usize,
    pub members: usize,
    pub seed: u64,
    pub config: RunConfig,
    pub threads: usize,
    pub checkpoints: bool,
}

pub fn replicate_dir(out: &Path, index: usize) -> PathBuf {
    out.join(format!("replicate_{index:03}"))
}

/// Runs every replicate on a pool of `spec.threads` workers and writes each
/// to `replicate_<i>/`. Replicates are returned in index order.
pub fn run(
    reference: &ReferenceDecomposition,
    spec: &ExperimentSpec,
    out: &Path,
) -> Result<(ExperimentReport, Vec<Replicate>)> {
    let pool = parallel::pool(spec.threads)?;
    let replicates: Vec<Replicate> = pool.install(|| {
        (0..spec.replicates)
            .into_par_iter()
            .map(|r| {
                let rep = run_replicate(reference, spec.n, spec.seed, r, |samples, set, seed| {
                    let config = spec.config.ensemble(spec.members, seed, spec.threads);
                    parallel::decompose(samples, set, &config)
                })?;
                let dir = replicate_dir(out, r);
                write_decomposition(&dir, &rep.result, &rep.samples, spec.checkpoints)?;
                export_plotdata(reference, &rep, &dir.join("plots"))?;
                write_json(&dir.join("outcome.json"), &rep.outcome)?;
                Ok(rep)
            })
            .collect::<Result<Vec<_>>>()
    })?;
    let report = ExperimentReport::from_outcomes(
        spec.scenario,
        spec.n,
        spec.seed,
        replicates.iter().map(|r| r.outcome.clone()).collect(),
    );
    write_json(&out.join("report.json"), &report)?;
    write_replicate_table(&out.join("replicates.csv"), &report)?;
    Ok((report, replicates))
}

fn write_replicate_table(path: &Path, report: &ExperimentReport) -> Result<()> {
    let header = [
        "replicate",
        "seed",
        "i1",
        "i2",
        "i1_surrogate",
        "i2_surrogate",
        "reference_i1",
        "reference_i2",
        "fidelity_r2",
        "members",
        "members_reaching_target",
    ];
    let rows = report.replicates.iter().map(|o| {
        vec![
            o.index.to_string(),
            o.seed.to_string(),
            fmt_f64(o.i1),
            fmt_f64(o.i2),
            fmt_f64(o.i1_surrogate),
            fmt_f64(o.i2_surrogate),
            fmt_f64(o.reference_i1),
            fmt_f64(o.reference_i2),
            fmt_f64(o.fidelity_r2),
            o.members.to_string(),
            o.members_reaching_target.to_string(),
        ]
    });
    write_csv(path, &header, rows)
}

/// Per main effect `main_<j>.csv` with `(x, estimated, reference)` sorted by
/// `x`; per two-way term `interaction_<a>_<b>.csv` on a 50 x 50 grid over
/// `[-3, 3]^2` with every other feature held at 0.
pub fn export_plotdata(reference: &ReferenceDecomposition, rep: &Replicate, dir: &Path) -> Result<()> {
    create_dir(dir)?;
    let set = &reference.effect_set;
    let samples = &rep.samples;
    for (pos, term) in set.terms().iter().enumerate() {
        let slot = pos + 1;
        match term.indices() {
            [j] => {
                let est = rep.result.vectors.vector(slot);
                let truth = &rep.reference_terms[pos];
                let mut order: Vec<usize> = (0..samples.n()).collect();
                order.sort_by(|&a, &b| samples.row(a)[j - 1].total_cmp(&samples.row(b)[j - 1]).then(a.cmp(&b)));
                let rows = order
                    .into_iter()
                    .map(|i| vec![fmt_f64(samples.row(i)[j - 1]), fmt_f64(est[i]), fmt_f64(truth[i])]);
                write_csv(
                    &dir.join(format!("main_{j}.csv")),
                    &["x", "estimated", "reference"],
                    rows,
                )?;
            }
            [a, b] => {
                let mut rows = Vec::with_capacity(GRID_SIZE * GRID_SIZE);
                let mut x = vec![0.0; set.d()];
                for ga in grid() {
                    for gb in grid() {
                        x[a - 1] = ga;
                        x[b - 1] = gb;
                        rows.push(vec![
                            fmt_f64(ga),
                            fmt_f64(gb),
                            fmt_f64(rep.result.evaluate(slot, &x)?),
                            fmt_f64(reference.evaluate(slot, &x)?),
                        ]);
                    }
                }
                write_csv(
                    &dir.join(format!("interaction_{a}_{b}.csv")),
                    &["x_a", "x_b", "estimated", "reference"],
                    rows,
                )?;
            }
            _ => {}
        }
    }
    Ok(())
}

pub fn grid() -> impl Iterator<Item = f64> {
    (0..GRID_SIZE).map(|k| -GRID_LIMIT + 2.0 * GRID_LIMIT * k as f64 / (GRID_SIZE - 1) as f64)
}

/// Correlation of estimated and reference main effects over the sample.
pub fn main_effect_correlations(rep: &Replicate) -> Vec<(usize, f64)> {
    rep.result
        .effect_set
        .terms()
        .iter()
        .enumerate()
        .filter(|(_, t)| t.level() == 1)
        .map(|(pos, t)| {
            (
                t.indices()[0],
                pearson(rep.result.vectors.vector(pos + 1), &rep.reference_terms[pos]),
            )
        })
        .collect()
}
