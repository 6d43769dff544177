//! `stackdec` subcommands. Exit codes: 0 success, 1 input or validation
//! error, 2 numerical failure.

use std::path::PathBuf;
use std::time::Instant;

use clap::{Args, Parser, Subcommand};
use stackdec_core::experiments::{replicate_seed, DEFAULT_REFERENCE_N};
use stackdec_core::{EffectIndex, EffectSet, Scenario};

use crate::config::{resolve_threads, Profile, RunConfig};
use crate::error::{Error, Result};
use crate::harness::{self, ExperimentSpec, DEFAULT_REFERENCE_SEED};
use crate::io::{create_dir, load_csv, sha256_file, write_json};
use crate::manifest::RunManifest;
use crate::output::{self, compare_metrics, metric_rows, read_decomposition, read_metrics, write_decomposition};
use crate::parallel;

#[derive(Debug, Parser)]
#[command(
    name = "stackdec",
    version,
    about = "Stacked-orthogonality functional decomposition of black-box predictions"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Decompose the predictions stored in a CSV file.
    Decompose(DecomposeArgs),
    /// Run the synthetic benchmark against a reference decomposition.
    Experiment(ExperimentArgs),
    /// Build and store the reference decomposition of a scenario.
    Oracle(OracleArgs),
    /// Recompute the metrics of a stored decomposition.
    Metrics(MetricsArgs),
}

#[derive(Debug, Args)]
pub struct RunArgs {
    /// Ensemble size.
    #[arg(long = "ensemble", default_value_t = 10)]
    pub members: usize,
    /// Base seed; members and replicates derive theirs from it.
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Worker threads [default: STACKDEC_THREADS, else all cores].
    #[arg(long)]
    pub threads: Option<usize>,
    #[arg(long, value_enum, default_value_t = Profile::Paper)]
    pub profile: Profile,
    /// JSON object overriding fields of the profile's configuration.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Also store every member's fitted network.
    #[arg(long)]
    pub checkpoints: bool,
}

#[derive(Debug, Args)]
pub struct DecomposeArgs {
    /// Headed CSV of feature columns and one prediction column.
    #[arg(long)]
    pub input: PathBuf,
    /// Name of the prediction column; all other columns are features.
    #[arg(long)]
    pub pred_col: String,
    /// Effects of interest as JSON, e.g. '[[1],[2],[1,2]]' (1-based feature
    /// indices); the all-feature term is added. A leading '@' reads a file.
    #[arg(long, conflicts_with = "max_order")]
    pub effects: Option<String>,
    /// Every term up to this level plus the all-feature term.
    #[arg(long)]
    pub max_order: Option<usize>,
    /// Output directory.
    #[arg(long)]
    pub out: PathBuf,
    #[command(flatten)]
    pub run: RunArgs,
}

#[derive(Debug, Args)]
pub struct ReferenceArgs {
    /// Reference sample size.
    #[arg(long, default_value_t = DEFAULT_REFERENCE_N)]
    pub n_ref: usize,
    /// Seed of the reference sample.
    #[arg(long, default_value_t = DEFAULT_REFERENCE_SEED)]
    pub reference_seed: u64,
}

#[derive(Debug, Args)]
pub struct ExperimentArgs {
    /// Synthetic scenario: 1, 2 or 3.
    #[arg(long, value_parser = parse_scenario)]
    pub scenario: Scenario,
    /// Sample size of each replicate.
    #[arg(long, default_value_t = 2000)]
    pub n: usize,
    #[arg(long, default_value_t = 10)]
    pub replicates: usize,
    /// Output directory; a stored reference with matching size and seed is reused.
    #[arg(long)]
    pub out: PathBuf,
    #[command(flatten)]
    pub reference: ReferenceArgs,
    #[command(flatten)]
    pub run: RunArgs,
}

#[derive(Debug, Args)]
pub struct OracleArgs {
    /// Synthetic scenario: 1, 2 or 3.
    #[arg(long, value_parser = parse_scenario)]
    pub scenario: Scenario,
    #[arg(long)]
    pub out: PathBuf,
    /// Reference sample size.
    #[arg(long, default_value_t = DEFAULT_REFERENCE_N)]
    pub n_ref: usize,
    /// Seed of the reference sample.
    #[arg(long, default_value_t = DEFAULT_REFERENCE_SEED)]
    pub seed: u64,
}

#[derive(Debug, Args)]
pub struct MetricsArgs {
    /// Directory holding decomposition.json.
    #[arg(long)]
    pub dir: PathBuf,
    /// Largest accepted difference from the stored metrics.csv.
    #[arg(long, default_value_t = 1e-12)]
    pub tolerance: f64,
}

fn parse_scenario(s: &str) -> std::result::Result<Scenario, String> {
    let v: u8 = s.parse().map_err(|_| format!("'{s}' is not a scenario number"))?;
    Scenario::try_from(v).map_err(|e| e.to_string())
}

/// Parses, runs and maps the outcome to an exit code.
pub fn main_with_args(args: impl IntoIterator<Item = std::ffi::OsString>) -> i32 {
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    match run(cli) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}

pub fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Decompose(a) => decompose(a),
        Command::Experiment(a) => experiment(a),
        Command::Oracle(a) => oracle(a),
        Command::Metrics(a) => metrics(a),
    }
}

fn parse_effects(spec: &str, d: usize) -> Result<EffectSet> {
    let text = match spec.strip_prefix('@') {
        Some(path) => std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?,
        None => spec.to_owned(),
    };
    let lists: Vec<Vec<usize>> = serde_json::from_str(&text)
        .map_err(|e| Error::Usage(format!("--effects must be a JSON list of index lists: {e}")))?;
    if lists.is_empty() {
        return Err(Error::Usage("--effects lists no effects".into()));
    }
    let thetas = lists
        .into_iter()
        .map(EffectIndex::new)
        .collect::<stackdec_core::Result<Vec<_>>>()?;
    Ok(EffectSet::restrict_to(&thetas, d)?)
}

fn effect_set_for(args: &DecomposeArgs, d: usize) -> Result<EffectSet> {
    Ok(match (&args.effects, args.max_order) {
        (Some(spec), _) => parse_effects(spec, d)?,
        (None, Some(k)) => EffectSet::up_to_order(k, d)?,
        (None, None) => EffectSet::enumerate_full(d)?,
    })
}

fn check_members(members: usize) -> Result<()> {
    if members == 0 {
        return Err(Error::Usage("--ensemble must be at least 1".into()));
    }
    Ok(())
}

fn decompose(args: DecomposeArgs) -> Result<()> {
    let start = Instant::now();
    check_members(args.run.members)?;
    let threads = resolve_threads(args.run.threads)?;
    let config = RunConfig::load(args.run.profile, args.run.config.as_deref())?;
    let samples = load_csv(&args.input, &args.pred_col)?;
    let set = effect_set_for(&args, samples.d())?;
    let ensemble = config.ensemble(args.run.members, args.run.seed, threads);

    let mut manifest = RunManifest::new("decompose", threads);
    manifest.seed("base_seed", args.run.seed);
    manifest.seed(
        "member_seeds",
        (0..ensemble.members)
            .map(|i| ensemble.member_seed(i))
            .collect::<Vec<_>>(),
    );
    manifest.config = serde_json::json!({ "profile": args.run.profile, "run": config, "members": args.run.members });
    manifest.extra("effect_set", &set);
    manifest
        .input_digests
        .insert(args.input.display().to_string(), sha256_file(&args.input)?);
    let load_time = start.elapsed().as_secs_f64();

    let fit_start = Instant::now();
    let result = parallel::pool(threads)?.install(|| parallel::decompose(&samples, &set, &ensemble))?;
    let fit_time = fit_start.elapsed().as_secs_f64();

    write_decomposition(&args.out, &result, &samples, args.run.checkpoints)?;
    manifest.timings_seconds.insert("load".into(), load_time);
    manifest.timings_seconds.insert("fit".into(), fit_time);
    manifest
        .timings_seconds
        .insert("total".into(), start.elapsed().as_secs_f64());
    manifest.write(&args.out)?;

    for w in &result.diagnostics.warnings {
        eprintln!("warning: {w}");
    }
    print_levels(&result.metrics);
    Ok(())
}

fn print_levels(m: &stackdec_core::MetricsTable) {
    for l in &m.levels {
        println!(
            "I_{} = {:.6} (original)  {:.6} (surrogate)",
            l.level, l.original, l.surrogate
        );
    }
    println!("fidelity R^2 = {:.6}", m.fidelity_r2);
}

fn experiment(args: ExperimentArgs) -> Result<()> {
    let start = Instant::now();
    check_members(args.run.members)?;
    if args.replicates == 0 {
        return Err(Error::Usage("--replicates must be at least 1".into()));
    }
    let threads = resolve_threads(args.run.threads)?;
    let config = RunConfig::load(args.run.profile, args.run.config.as_deref())?;
    create_dir(&args.out)?;

    let (reference, cached) = harness::load_or_build_reference(
        &args.out,
        args.scenario,
        args.reference.n_ref,
        args.reference.reference_seed,
    )?;
    let reference_time = start.elapsed().as_secs_f64();

    let spec = ExperimentSpec {
        scenario: args.scenario,
        n: args.n,
        replicates: args.replicates,
        members: args.run.members,
        seed: args.run.seed,
        config: config.clone(),
        threads,
        checkpoints: args.run.checkpoints,
    };
    let mut manifest = RunManifest::new("experiment", threads);
    manifest.seed("experiment_seed", args.run.seed);
    manifest.seed("reference_seed", args.reference.reference_seed);
    manifest.seed(
        "replicate_seeds",
        (0..args.replicates)
            .map(|r| replicate_seed(args.run.seed, r))
            .collect::<Vec<_>>(),
    );
    manifest.config = serde_json::json!({
        "profile": args.run.profile,
        "run": config,
        "members": args.run.members,
        "scenario": args.scenario,
        "n": args.n,
        "replicates": args.replicates,
        "n_ref": args.reference.n_ref,
    });
    manifest.extra("reference_cached", cached);
    manifest.input_digests.insert(
        harness::reference_path(&args.out, args.scenario).display().to_string(),
        sha256_file(&harness::reference_path(&args.out, args.scenario))?,
    );

    let run_start = Instant::now();
    let (report, replicates) = harness::run(&reference, &spec, &args.out)?;
    manifest.timings_seconds.insert("reference".into(), reference_time);
    manifest
        .timings_seconds
        .insert("replicates".into(), run_start.elapsed().as_secs_f64());
    manifest
        .timings_seconds
        .insert("total".into(), start.elapsed().as_secs_f64());
    manifest.write(&args.out)?;
    for rep in &replicates {
        let dir = harness::replicate_dir(&args.out, rep.outcome.index);
        let mut m = RunManifest::new("experiment-replicate", threads);
        m.seed("replicate_seed", rep.outcome.seed);
        m.seed("member_seeds", &rep.result.diagnostics.member_seeds);
        m.config = manifest.config.clone();
        m.write(&dir)?;
        for w in &rep.result.diagnostics.warnings {
            eprintln!("warning: replicate {}: {w}", rep.outcome.index);
        }
    }

    println!("replicate,seed,i1,i2,fidelity_r2,members_reaching_target");
    for o in &report.replicates {
        println!(
            "{},{},{:.6},{:.6},{:.6},{}/{}",
            o.index, o.seed, o.i1, o.i2, o.fidelity_r2, o.members_reaching_target, o.members
        );
    }
    println!("mean I_1 = {:.6}, mean I_2 = {:.6}", report.mean_i1, report.mean_i2);
    Ok(())
}

fn oracle(args: OracleArgs) -> Result<()> {
    let start = Instant::now();
    create_dir(&args.out)?;
    let (reference, check) = harness::build_reference(args.scenario, args.n_ref, args.seed)?;
    let path = harness::reference_path(&args.out, args.scenario);
    write_json(&path, &reference)?;
    write_json(
        &args.out.join(format!("reference_s{}_check.json", args.scenario.id())),
        &check,
    )?;
    let mut manifest = RunManifest::new("oracle", 1);
    manifest.seed("reference_seed", args.seed);
    manifest.config = serde_json::json!({ "scenario": args.scenario, "n_ref": args.n_ref });
    manifest
        .timings_seconds
        .insert("total".into(), start.elapsed().as_secs_f64());
    manifest.write(&args.out)?;
    println!(
        "{}: intercept {:.6}, orthogonality {:.3e}, conservation {:.3e}",
        path.display(),
        check.intercept,
        check.max_normalized_offdiag,
        check.conservation_max_abs
    );
    Ok(())
}

fn metrics(args: MetricsArgs) -> Result<()> {
    let file = read_decomposition(&args.dir)?;
    let recomputed = file.recompute_metrics()?;
    let stored_path = args.dir.join("metrics.csv");
    let fresh = metric_rows(&recomputed);
    if stored_path.exists() {
        let stored = read_metrics(&stored_path)?;
        match compare_metrics(&stored, &fresh) {
            Some(diff) if diff <= args.tolerance => {
                println!("metrics.csv reproduced (max abs difference {diff:.3e})");
            }
            Some(diff) => {
                return Err(Error::format(
                    &stored_path,
                    format!(
                        "recomputed metrics differ by {diff:.3e} (tolerance {:.1e})",
                        args.tolerance
                    ),
                ))
            }
            None => return Err(Error::format(&stored_path, "rows do not match the recomputed metrics")),
        }
    } else {
        output::write_metrics(&stored_path, &recomputed)?;
    }
    print_levels(&recomputed);
    Ok(())
}
