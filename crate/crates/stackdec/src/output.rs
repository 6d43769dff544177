//! On-disk layout of a decomposition directory:
//!
//! ```text
//! decomposition.json   effect set, intercept, final vectors, records, metrics
//! terms/<label>.csv    per-term feature values and effect values
//! metrics.csv          metric,key,value,denominator
//! checkpoints/         one fitted NAM (plus its orthogonalization records) per member
//! manifest.json        seeds, configs, digests, timings, threads
//! ```

use std::path::Path;

use serde::{Deserialize, Serialize};
use stackdec_core::ensemble::{DecompositionResult, Diagnostics};
use stackdec_core::metrics::{DecompositionView, MetricsTable};
use stackdec_core::ortho::TermRecord;
use stackdec_core::{EffectIndex, EffectSet, NamModel, SampleSet};

use crate::error::{Error, Result};
use crate::io::{create_dir, fmt_f64, read_json, write_csv, write_json};

pub const FORMAT_VERSION: u32 = 1;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TermOutput {
    pub effect: EffectIndex,
    pub label: String,
    pub vector: Vec<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MemberSummary {
    pub index: usize,
    pub seed: u64,
    pub final_r2: Option<f64>,
    pub epochs: usize,
    pub reached_target: bool,
}

/// Contents of `decomposition.json`. Holds no timings or paths, so equal
/// inputs and seeds give identical bytes.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DecompositionFile {
    pub format_version: u32,
    pub effect_set: EffectSet,
    pub feature_names: Vec<String>,
    pub prediction_name: String,
    pub prediction: Vec<f64>,
    pub intercept: f64,
    pub terms: Vec<TermOutput>,
    /// Final-pass records; their bases are the member-averaged effects.
    pub records: Vec<TermRecord>,
    pub members: Vec<MemberSummary>,
    pub diagnostics: Diagnostics,
    pub metrics: MetricsTable,
}

impl DecompositionFile {
    pub fn new(result: &DecompositionResult, samples: &SampleSet) -> Self {
        let terms = result
            .effect_set
            .terms()
            .iter()
            .zip(result.vectors.term_vectors())
            .map(|(t, v)| TermOutput {
                effect: t.clone(),
                label: t.label(),
                vector: v.clone(),
            })
            .collect();
        DecompositionFile {
            format_version: FORMAT_VERSION,
            effect_set: result.effect_set.clone(),
            feature_names: samples.feature_names().to_vec(),
            prediction_name: samples.prediction_name().to_owned(),
            prediction: result.prediction.clone(),
            intercept: result.intercept,
            terms,
            records: result.vectors.records().to_vec(),
            members: result
                .members
                .iter()
                .map(|m| MemberSummary {
                    index: m.index,
                    seed: m.seed,
                    final_r2: m.report.final_r2,
                    epochs: m.report.epochs,
                    reached_target: m.report.reached_target,
                })
                .collect(),
            diagnostics: result.diagnostics.clone(),
            metrics: result.metrics.clone(),
        }
    }

    pub fn term_vectors(&self) -> Vec<Vec<f64>> {
        self.terms.iter().map(|t| t.vector.clone()).collect()
    }

    /// Recomputes the metrics from the stored vectors and predictions.
    pub fn recompute_metrics(&self) -> stackdec_core::Result<MetricsTable> {
        let vectors = self.term_vectors();
        MetricsTable::compute(&DecompositionView {
            effect_set: &self.effect_set,
            intercept: self.intercept,
            term_vectors: &vectors,
            prediction: &self.prediction,
        })
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Checkpoint {
    pub index: usize,
    pub seed: u64,
    pub model: NamModel,
    /// Orthogonalization records of this member on its own bases.
    pub records: Vec<TermRecord>,
}

/// Long-format metric rows: `(metric, key, value, denominator)`.
pub fn metric_rows(m: &MetricsTable) -> Vec<[String; 4]> {
    let mut rows = Vec::new();
    for l in &m.levels {
        rows.push(["I".into(), l.level.to_string(), fmt_f64(l.original), "original".into()]);
        rows.push([
            "I".into(),
            l.level.to_string(),
            fmt_f64(l.surrogate),
            "surrogate".into(),
        ]);
    }
    for s in &m.sobol {
        rows.push(["S".into(), s.effect.label(), fmt_f64(s.original), "original".into()]);
        rows.push(["S".into(), s.effect.label(), fmt_f64(s.surrogate), "surrogate".into()]);
    }
    rows.push([
        "sigma_f_sq".into(),
        "".into(),
        fmt_f64(m.sigma_f_sq_original),
        "original".into(),
    ]);
    rows.push([
        "sigma_f_sq".into(),
        "".into(),
        fmt_f64(m.sigma_f_sq_surrogate),
        "surrogate".into(),
    ]);
    rows.push(["fidelity_r2".into(), "".into(), fmt_f64(m.fidelity_r2), "".into()]);
    rows.push([
        "orthogonality_max".into(),
        "".into(),
        fmt_f64(m.orthogonality.max_normalized_offdiag),
        "".into(),
    ]);
    rows
}

pub const METRICS_HEADER: [&str; 4] = ["metric", "key", "value", "denominator"];

pub fn write_metrics(path: &Path, m: &MetricsTable) -> Result<()> {
    write_csv(path, &METRICS_HEADER, metric_rows(m).into_iter().map(Vec::from))
}

pub fn read_metrics(path: &Path) -> Result<Vec<[String; 4]>> {
    let mut r = csv::Reader::from_path(path).map_err(|e| Error::format(path, e.to_string()))?;
    let mut rows = Vec::new();
    for rec in r.records() {
        let rec = rec.map_err(|e| Error::format(path, e.to_string()))?;
        if rec.len() != 4 {
            return Err(Error::format(path, format!("expected 4 fields, found {}", rec.len())));
        }
        rows.push([
            rec[0].to_owned(),
            rec[1].to_owned(),
            rec[2].to_owned(),
            rec[3].to_owned(),
        ]);
    }
    Ok(rows)
}

/// Largest absolute difference between two metric tables with the same rows;
/// `None` if the row keys differ.
pub fn compare_metrics(a: &[[String; 4]], b: &[[String; 4]]) -> Option<f64> {
    if a.len() != b.len() {
        return None;
    }
    let mut worst: f64 = 0.0;
    for (x, y) in a.iter().zip(b) {
        if x[0] != y[0] || x[1] != y[1] || x[3] != y[3] {
            return None;
        }
        let (u, v): (f64, f64) = (x[2].parse().ok()?, y[2].parse().ok()?);
        worst = worst.max((u - v).abs());
    }
    Some(worst)
}

fn write_term_csvs(dir: &Path, file: &DecompositionFile, samples: &SampleSet) -> Result<()> {
    create_dir(dir)?;
    for term in &file.terms {
        let cols: Vec<usize> = term.effect.indices().iter().map(|j| j - 1).collect();
        let mut header: Vec<&str> = vec!["row"];
        header.extend(cols.iter().map(|&j| file.feature_names[j].as_str()));
        header.push("effect");
        let rows = (0..samples.n()).map(|i| {
            let row = samples.row(i);
            let mut out = vec![i.to_string()];
            out.extend(cols.iter().map(|&j| fmt_f64(row[j])));
            out.push(fmt_f64(term.vector[i]));
            out
        });
        write_csv(&dir.join(format!("{}.csv", term.label)), &header, rows)?;
    }
    Ok(())
}

/// Writes everything except the manifest.
pub fn write_decomposition(
    dir: &Path,
    result: &DecompositionResult,
    samples: &SampleSet,
    checkpoints: bool,
) -> Result<DecompositionFile> {
    create_dir(dir)?;
    let file = DecompositionFile::new(result, samples);
    write_json(&dir.join("decomposition.json"), &file)?;
    write_metrics(&dir.join("metrics.csv"), &result.metrics)?;
    write_term_csvs(&dir.join("terms"), &file, samples)?;
    if checkpoints {
        let cdir = dir.join("checkpoints");
        create_dir(&cdir)?;
        for m in &result.members {
            let c = Checkpoint {
                index: m.index,
                seed: m.seed,
                model: m.model.clone(),
                records: m.vectors.records().to_vec(),
            };
            write_json(&cdir.join(format!("member_{:03}.json", m.index)), &c)?;
        }
    }
    Ok(file)
}

pub fn read_decomposition(dir: &Path) -> Result<DecompositionFile> {
    let file: DecompositionFile = read_json(&dir.join("decomposition.json"))?;
    if file.format_version != FORMAT_VERSION {
        return Err(Error::format(
            dir.join("decomposition.json"),
            format!("unsupported format version {}", file.format_version),
        ));
    }
    Ok(file)
}
