mod manifest;

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;
use serde_json::json;

use omit_core::analysis::{prepare, probability_table};
use omit_core::estimation::check_level;
use omit_core::simulation::{run_scenario, summarize_grid, GridConfig, Method, ScenarioConfig};
use omit_core::{
    analyze, generate_standin, load_csv, run_suite, write_csv, AnalysisMethod, AnalysisOptions,
    CheckSuite, ColumnSchema, SuiteOptions,
};

use manifest::{sha256_hex, write_json, Run};

/// Outcome-assisted multiple imputation of missing treatments.
#[derive(Parser)]
#[command(name = "omit", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a scenario grid from a JSON config.
    Simulate(SimulateArgs),
    /// Estimate the ATE of a CSV with partly missing treatments.
    Analyze(AnalyzeArgs),
    /// Monte Carlo and algebraic checks of the bias results.
    Check(CheckArgs),
    /// Compare OMIT and Naive MI imputation probabilities.
    Probs(ProbsArgs),
    /// Write the synthetic child-cohort stand-in as CSV.
    SynthNlsy(SynthArgs),
}

#[derive(Clone, Copy, ValueEnum)]
enum Preset {
    /// Replicates and methods as configured (500 replicates by default).
    Paper,
    /// 200 replicates; OMIT_Correct, NaiveMI and CC unless methods are set.
    Desk,
}

#[derive(Args)]
struct SimulateArgs {
    #[arg(long)]
    config: PathBuf,
    #[arg(long)]
    out: PathBuf,
    /// Overrides the seed in the config.
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long, value_enum, default_value = "paper")]
    preset: Preset,
}

#[derive(Args)]
struct DataArgs {
    #[arg(long)]
    data: PathBuf,
    #[arg(long)]
    outcome: String,
    #[arg(long)]
    treatment: String,
    /// Comma-separated covariate columns.
    #[arg(long, value_delimiter = ',', required = true)]
    covariates: Vec<String>,
}

#[derive(Clone, Copy, ValueEnum)]
enum MethodArg {
    OmitLm,
    OmitFlex,
    Naive,
    NaiveY,
    Cc,
}

impl From<MethodArg> for AnalysisMethod {
    fn from(m: MethodArg) -> Self {
        match m {
            MethodArg::OmitLm => AnalysisMethod::OmitLm,
            MethodArg::OmitFlex => AnalysisMethod::OmitFlex,
            MethodArg::Naive => AnalysisMethod::Naive,
            MethodArg::NaiveY => AnalysisMethod::NaiveY,
            MethodArg::Cc => AnalysisMethod::Cc,
        }
    }
}

#[derive(Args)]
struct AnalyzeArgs {
    #[command(flatten)]
    data: DataArgs,
    #[arg(long, value_enum, default_value = "omit-lm")]
    method: MethodArg,
    #[arg(long, default_value_t = 20)]
    m: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = 0.95)]
    level: f64,
    #[arg(long)]
    refit_ps_per_imputation: bool,
    /// Directory for the JSON report and manifest.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Clone, Copy, ValueEnum)]
enum Which {
    Theorem1,
    Prop1Homog,
    Prop1Mcar,
    BiasIdentities,
    BiasFormula,
    All,
}

impl From<Which> for CheckSuite {
    fn from(w: Which) -> Self {
        match w {
            Which::Theorem1 => CheckSuite::Theorem1,
            Which::Prop1Homog => CheckSuite::Prop1Homog,
            Which::Prop1Mcar => CheckSuite::Prop1Mcar,
            Which::BiasIdentities => CheckSuite::BiasIdentities,
            Which::BiasFormula => CheckSuite::BiasFormula,
            Which::All => CheckSuite::All,
        }
    }
}

#[derive(Args)]
struct CheckArgs {
    #[arg(long, value_enum, default_value = "all")]
    which: Which,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    replicates: Option<usize>,
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, hide = true)]
    inject_heterogeneity: bool,
}

#[derive(Clone, Copy, ValueEnum)]
enum Compare {
    Naive,
}

#[derive(Args)]
struct ProbsArgs {
    #[command(flatten)]
    data: DataArgs,
    /// OMIT outcome model.
    #[arg(long, value_enum, default_value = "omit-lm")]
    method: MethodArg,
    #[arg(long, value_enum, default_value = "naive")]
    compare: Compare,
    #[arg(long, default_value_t = 0.25)]
    threshold: f64,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct SynthArgs {
    #[arg(long)]
    out: PathBuf,
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

/// Failure classes mapped to exit codes.
enum Failure {
    Usage(anyhow::Error),
    Breach(String),
}

impl From<anyhow::Error> for Failure {
    fn from(e: anyhow::Error) -> Self {
        Failure::Usage(e)
    }
}

type CmdResult = std::result::Result<(), Failure>;

fn create_dir(dir: &Path) -> Result<()> {
    fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))
}

fn load_grid(path: &Path) -> Result<GridConfig> {
    let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    serde_json::from_str(&text).with_context(|| format!("{}: bad config", path.display()))
}

const DESK_REPLICATES: usize = 200;

fn desk_methods() -> Vec<Method> {
    vec![Method::OmitCorrect, Method::NaiveMi, Method::CompleteCase]
}

fn scenarios(args: &SimulateArgs) -> Result<Vec<ScenarioConfig>> {
    let mut grid = load_grid(&args.config)?;
    if let Some(seed) = args.seed {
        grid.seed = Some(seed);
    }
    if let Preset::Desk = args.preset {
        grid.replicates = Some(DESK_REPLICATES);
        grid.methods.get_or_insert_with(desk_methods);
    }
    grid.scenarios().with_context(|| format!("{}: bad config", args.config.display()))
}

fn simulate(args: SimulateArgs) -> CmdResult {
    let configs = scenarios(&args)?;
    let seed = configs.first().map_or(args.seed.unwrap_or(0), |c| c.seed);
    let run = Run::start("simulate", &json!({ "scenarios": configs }), seed);
    create_dir(&args.out)?;
    let mut results = Vec::with_capacity(configs.len());
    for cfg in &configs {
        let res = run_scenario(cfg).with_context(|| format!("scenario {}", cfg.scenario_id()))?;
        eprintln!("{}: done", res.scenario_id);
        results.push(res);
    }
    let outputs = summarize_grid(&results, &args.out).map_err(anyhow::Error::from)?;
    run.finish(&args.out, &outputs)?;
    let invalid: Vec<&str> = results
        .iter()
        .filter(|r| !r.is_valid())
        .map(|r| r.scenario_id.as_str())
        .collect();
    if !invalid.is_empty() {
        return Err(Failure::Breach(format!(
            "replicate exclusions reached the validity ceiling in: {}",
            invalid.join(", ")
        )));
    }
    Ok(())
}

fn load_table(d: &DataArgs) -> Result<(omit_core::ObservationTable, String)> {
    let bytes = fs::read(&d.data).with_context(|| format!("reading {}", d.data.display()))?;
    let schema = ColumnSchema {
        outcome: d.outcome.clone(),
        treatment: d.treatment.clone(),
        covariates: d.covariates.clone(),
    };
    let table = load_csv(&d.data, &schema).with_context(|| format!("loading {}", d.data.display()))?;
    Ok((prepare(&table)?, sha256_hex(&bytes)))
}

fn analyze_cmd(args: AnalyzeArgs) -> CmdResult {
    check_level(args.level).map_err(anyhow::Error::from)?;
    let (table, data_digest) = load_table(&args.data)?;
    let opts = AnalysisOptions {
        method: args.method.into(),
        m: args.m,
        seed: args.seed,
        level: args.level,
        refit_ps_per_imputation: args.refit_ps_per_imputation,
    };
    let inputs = json!({
        "data_sha256": data_digest,
        "outcome": args.data.outcome,
        "treatment": args.data.treatment,
        "covariates": args.data.covariates,
        "method": opts.method,
        "m": opts.m,
        "seed": opts.seed,
        "level": opts.level,
        "refit_ps_per_imputation": opts.refit_ps_per_imputation,
    });
    let run = Run::start("analyze", &inputs, args.seed);
    let report = analyze(&table, &opts).map_err(anyhow::Error::from)?;
    for notice in &report.notices {
        eprintln!("notice: {notice}");
    }
    println!("{}", serde_json::to_string_pretty(&report).map_err(anyhow::Error::from)?);
    if let Some(out) = &args.out {
        create_dir(out)?;
        let path = out.join("analysis.json");
        write_json(&path, &report)?;
        run.finish(out, &[path])?;
    }
    Ok(())
}

#[derive(Serialize)]
struct CheckOutput {
    which: CheckSuite,
    seed: u64,
    all_pass: bool,
    checks: Vec<omit_core::CheckReport>,
}

fn check_cmd(args: CheckArgs) -> CmdResult {
    let opts = SuiteOptions {
        seed: args.seed,
        replicates: args.replicates,
        inject_heterogeneity: args.inject_heterogeneity,
        ..SuiteOptions::default()
    };
    let suite: CheckSuite = args.which.into();
    let run = Run::start(
        "check",
        &json!({ "which": suite, "seed": opts.seed, "replicates": opts.replicates, "n": opts.n,
                 "inject_heterogeneity": opts.inject_heterogeneity }),
        args.seed,
    );
    let checks = run_suite(suite, &opts).map_err(anyhow::Error::from)?;
    for c in &checks {
        eprintln!(
            "[{}] {}: mean {:.3e}, mc se {:.3e}, z {:.2}",
            if c.pass { "PASS" } else { "FAIL" },
            c.check,
            c.mean,
            c.mc_se,
            c.standardized
        );
    }
    let output = CheckOutput {
        which: suite,
        seed: args.seed,
        all_pass: checks.iter().all(|c| c.pass),
        checks,
    };
    println!("{}", serde_json::to_string_pretty(&output).map_err(anyhow::Error::from)?);
    if let Some(out) = &args.out {
        create_dir(out)?;
        let path = out.join("check_report.json");
        write_json(&path, &output)?;
        run.finish(out, &[path])?;
    }
    if !output.all_pass {
        return Err(Failure::Breach("at least one check failed".into()));
    }
    Ok(())
}

#[derive(Serialize)]
struct ProbsReport {
    method: AnalysisMethod,
    compare: &'static str,
    threshold: f64,
    n_missing: usize,
    n_compared: usize,
    fraction_omit_greater: Option<f64>,
    notices: Vec<String>,
}

fn probs_cmd(args: ProbsArgs) -> CmdResult {
    let method: AnalysisMethod = args.method.into();
    if matches!(method, AnalysisMethod::Naive | AnalysisMethod::NaiveY | AnalysisMethod::Cc) {
        return Err(Failure::Usage(anyhow::anyhow!(
            "--method must be omit-lm or omit-flex, got {}",
            method.label()
        )));
    }
    let Compare::Naive = args.compare;
    let (table, data_digest) = load_table(&args.data)?;
    let inputs = json!({
        "data_sha256": data_digest,
        "outcome": args.data.outcome,
        "treatment": args.data.treatment,
        "covariates": args.data.covariates,
        "method": method,
        "compare": "naive",
        "threshold": args.threshold,
    });
    let run = Run::start("probs", &inputs, 0);
    let (rows, cmp) = probability_table(&table, method, args.threshold).map_err(anyhow::Error::from)?;
    let mut notices = Vec::new();
    if cmp.n_compared == 0 {
        notices.push(format!("no missing unit has an OMIT probability above {}", args.threshold));
    }
    for notice in &notices {
        eprintln!("notice: {notice}");
    }
    create_dir(&args.out)?;
    let mut csv = String::from("unit,q_omit,q_naive,y\n");
    for r in &rows {
        writeln!(csv, "{},{},{},{}", r.unit, r.q_omit, r.q_naive, r.y).expect("string write");
    }
    let csv_path = args.out.join("probabilities.csv");
    fs::write(&csv_path, csv).with_context(|| format!("writing {}", csv_path.display()))?;
    let report = ProbsReport {
        method,
        compare: "naive",
        threshold: cmp.threshold,
        n_missing: cmp.n_missing,
        n_compared: cmp.n_compared,
        fraction_omit_greater: cmp.fraction_omit_greater,
        notices,
    };
    println!("{}", serde_json::to_string_pretty(&report).map_err(anyhow::Error::from)?);
    let json_path = args.out.join("probs_report.json");
    write_json(&json_path, &report)?;
    run.finish(&args.out, &[csv_path, json_path])?;
    Ok(())
}

fn synth_cmd(args: SynthArgs) -> CmdResult {
    let run = Run::start("synth-nlsy", &json!({ "seed": args.seed }), args.seed);
    let s = generate_standin(args.seed).map_err(anyhow::Error::from)?;
    create_dir(&args.out)?;
    let csv_path = args.out.join("standin.csv");
    write_csv(&s.table, &csv_path).map_err(anyhow::Error::from)?;
    let truth_path = args.out.join("truth.json");
    write_json(
        &truth_path,
        &json!({ "true_ate": s.true_ate, "n": s.table.n(), "n_missing_t": s.table.n_missing() }),
    )?;
    run.finish(&args.out, &[csv_path, truth_path])?;
    Ok(())
}

fn configure_threads() -> Result<()> {
    if let Ok(v) = std::env::var("OMIT_THREADS") {
        let k: usize = v.trim().parse().with_context(|| format!("OMIT_THREADS must be a positive integer, got '{v}'"))?;
        if k == 0 {
            bail!("OMIT_THREADS must be a positive integer, got '{v}'");
        }
        rayon::ThreadPoolBuilder::new().num_threads(k).build_global()?;
    }
    Ok(())
}

fn run(cli: Cli) -> CmdResult {
    configure_threads()?;
    match cli.command {
        Command::Simulate(a) => simulate(a),
        Command::Analyze(a) => analyze_cmd(a),
        Command::Check(a) => check_cmd(a),
        Command::Probs(a) => probs_cmd(a),
        Command::SynthNlsy(a) => synth_cmd(a),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Usage(e)) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
        Err(Failure::Breach(msg)) => {
            eprintln!("validity breach: {msg}");
            ExitCode::from(2)
        }
    }
}
