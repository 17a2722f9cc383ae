mod render;

use std::io::{self, Write};
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{ArgGroup, Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

use bernoulli_ras::estimators::{
    estimate_dklr, estimate_fixed_n, estimate_gbas, estimate_two_stage, EstimateReport,
};
use bernoulli_ras::harness::{
    regenerate_table1, regenerate_table2, run_coverage, table1_tsv, table2_tsv, write_atomically,
    write_experiment, ExperimentConfig, ExperimentMethod, ExperimentResult,
};
use bernoulli_ras::planner::{
    find_k_dklr, find_k_gbas, LowerBoundRule, Plan, PlanMethod, RasTarget, SearchOptions,
    TiltConfig, TwoStagePlanner, DEFAULT_DIVISOR, DEFAULT_K_CEILING,
};
use bernoulli_ras::sampling::{FileSource, SampleSource, SimulatedSource, VariateRng};
use bernoulli_ras::unbiased::{make_grid, ratio_bound, unbiased_estimate, RatioBound};
use bernoulli_ras::Error;

use render::{emit, opt, Format, Row};

const EXIT_USAGE: u8 = 1;
const EXIT_CHECK: u8 = 2;
const EXIT_CEILING: u8 = 3;
const EXIT_EXHAUSTED: u8 = 4;

/// Relative-error estimation of a Bernoulli mean.
///
/// Worker threads for `simulate` are capped by the RAS_THREADS environment
/// variable.
#[derive(Parser)]
#[command(name = "ras", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Compute the smallest draw count k meeting (epsilon, delta).
    Plan(PlanArgs),
    /// Estimate p from a bit file or a simulated stream.
    Estimate(EstimateArgs),
    /// Write table1.tsv: planned draw counts of the gamma and two-stage schemes.
    Table1(TableArgs),
    /// Write table2.tsv: bounds on the unbiased/biased ratio.
    Table2(TableArgs),
    /// Run a seeded Monte Carlo experiment at a known p.
    Simulate(SimulateArgs),
}

#[derive(Args)]
struct TargetArgs {
    /// Relative error bound epsilon, in (0, 1).
    #[arg(long, default_value_t = 0.1)]
    epsilon: f64,
    /// Failure probability delta, in (0, 1).
    #[arg(long, default_value_t = 0.05)]
    delta: f64,
}

impl TargetArgs {
    fn target(&self) -> bernoulli_ras::Result<RasTarget> {
        RasTarget::new(self.epsilon, self.delta)
    }
}

#[derive(Args)]
struct TiltArgs {
    /// Divide estimates by the tilting constant [default: on].
    #[arg(long, overrides_with = "no_tilt")]
    tilt: bool,
    /// Turn tilting off.
    #[arg(long)]
    no_tilt: bool,
}

impl TiltArgs {
    fn enabled(&self) -> bool {
        !self.no_tilt
    }
}

#[derive(Args)]
struct SearchArgs {
    /// Subinterval divisor for negative binomial plans; widths are (1 - a) epsilon / divisor.
    #[arg(long, default_value_t = DEFAULT_DIVISOR)]
    divisor: u32,
    /// Give up when no k up to this value is feasible.
    #[arg(long, default_value_t = DEFAULT_K_CEILING)]
    ceiling: u64,
}

impl SearchArgs {
    fn options(&self) -> SearchOptions {
        SearchOptions { ceiling: self.ceiling, ..SearchOptions::default() }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum PlanKind {
    Gbas,
    Dklr,
}

#[derive(Args)]
struct PlanArgs {
    /// Scheme to plan for; dklr needs --min-p.
    #[arg(long, value_enum, default_value_t = PlanKind::Gbas)]
    method: PlanKind,
    #[command(flatten)]
    target: TargetArgs,
    /// Lower end a of the interval [a, 1] known to contain p.
    #[arg(long)]
    min_p: Option<f64>,
    #[command(flatten)]
    tilt: TiltArgs,
    #[command(flatten)]
    search: SearchArgs,
    /// Output format.
    #[arg(long, value_enum, default_value_t = Format::Json)]
    output: Format,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum EstimateKind {
    TwoStage,
    Gbas,
    Dklr,
    FixedN,
}

#[derive(Args)]
#[command(group(ArgGroup::new("input").required(true).args(["input_file", "simulate_p"])))]
struct EstimateArgs {
    /// Estimation scheme; fixed-n needs --k, dklr needs --k or --min-p.
    #[arg(long, value_enum, default_value_t = EstimateKind::TwoStage)]
    method: EstimateKind,
    #[command(flatten)]
    target: TargetArgs,
    /// Read bits ('0'/'1', whitespace ignored) from this file.
    #[arg(long)]
    input_file: Option<PathBuf>,
    /// Simulate bits with this success probability.
    #[arg(long)]
    simulate_p: Option<f64>,
    /// Seed for simulated bits and auxiliary variates [default: random].
    #[arg(long)]
    seed: Option<u64>,
    /// Refuse to run without an explicit --seed.
    #[arg(long, requires = "seed")]
    deterministic: bool,
    /// Use this k (n for fixed-n) instead of planning one.
    #[arg(long)]
    k: Option<u64>,
    /// Lower end a for a planned dklr run.
    #[arg(long)]
    min_p: Option<f64>,
    #[command(flatten)]
    tilt: TiltArgs,
    #[command(flatten)]
    search: SearchArgs,
    /// Also report the shifted-grid unbiased estimate and its ratio bound.
    #[arg(long)]
    unbiased: bool,
    /// Grid size for --unbiased.
    #[arg(long, default_value_t = 1000)]
    grid_n: usize,
    /// Excluded shift probability parameter for the ratio bound.
    #[arg(long, default_value_t = 1e-6)]
    delta1: f64,
    /// Output format.
    #[arg(long, value_enum, default_value_t = Format::Json)]
    output: Format,
}

#[derive(Args)]
struct TableArgs {
    /// Directory the table file is written to.
    #[arg(long, default_value = ".")]
    out_dir: PathBuf,
    /// Format of the copy printed to stdout.
    #[arg(long, value_enum, default_value_t = Format::Tsv)]
    output: Format,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum SimulateKind {
    TwoStage,
    Gbas,
    Dklr,
    FixedN,
    Unbiased,
}

#[derive(Args)]
struct SimulateArgs {
    /// Estimation scheme; fixed-n needs --k, dklr needs --k or --min-p.
    #[arg(long, value_enum, default_value_t = SimulateKind::TwoStage)]
    method: SimulateKind,
    /// True success probability.
    #[arg(long)]
    p: f64,
    #[command(flatten)]
    target: TargetArgs,
    /// Number of independent replicates.
    #[arg(long, default_value_t = 1000)]
    replicates: u64,
    /// Master seed; replicate i uses streams derived from (seed, i).
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Fixed k (n for fixed-n) instead of a planned one.
    #[arg(long)]
    k: Option<u64>,
    /// Lower end a for planned dklr runs.
    #[arg(long)]
    min_p: Option<f64>,
    #[command(flatten)]
    tilt: TiltArgs,
    /// Subinterval divisor for negative binomial plans.
    #[arg(long, default_value_t = DEFAULT_DIVISOR)]
    divisor: u32,
    /// Grid size for the unbiased method.
    #[arg(long, default_value_t = 1000)]
    grid_n: usize,
    /// Write <name>.csv and <name>.json here.
    #[arg(long)]
    out_dir: Option<PathBuf>,
    /// File stem for --out-dir.
    #[arg(long, default_value = "experiment")]
    name: String,
    /// Also write one CSV row per replicate.
    #[arg(long)]
    keep_replicates: bool,
    /// Exit with status 2 if the failure rate exceeds delta by more than 3 standard errors.
    #[arg(long)]
    check: bool,
    /// Output format.
    #[arg(long, value_enum, default_value_t = Format::Json)]
    output: Format,
}

enum Failure {
    Lib(Error),
    Check(String),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure::Lib(e)
    }
}

impl From<io::Error> for Failure {
    fn from(e: io::Error) -> Self {
        Failure::Lib(e.into())
    }
}

type CmdResult = Result<(), Failure>;

fn usage(msg: impl Into<String>) -> Failure {
    Failure::Lib(Error::Domain(msg.into()))
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(EXIT_USAGE) } else { ExitCode::SUCCESS };
        }
    };
    let mut out = io::stdout().lock();
    let res = match cli.command {
        Command::Plan(a) => cmd_plan(a, &mut out),
        Command::Estimate(a) => cmd_estimate(a, &mut out),
        Command::Table1(a) => cmd_table1(a, &mut out),
        Command::Table2(a) => cmd_table2(a, &mut out),
        Command::Simulate(a) => cmd_simulate(a, &mut out),
    };
    match res {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Check(msg)) => {
            eprintln!("ras: check failed: {msg}");
            ExitCode::from(EXIT_CHECK)
        }
        Err(Failure::Lib(e)) => {
            eprintln!("ras: {e}");
            ExitCode::from(match e {
                Error::CeilingExceeded { .. } => EXIT_CEILING,
                Error::Exhausted { .. } => EXIT_EXHAUSTED,
                _ => EXIT_USAGE,
            })
        }
    }
}

#[derive(Serialize)]
struct PlanOutput<'a> {
    #[serde(flatten)]
    plan: &'a Plan,
    c_tilt: f64,
}

fn plan_row(plan: &Plan) -> Row {
    let (lo, hi) = plan.certified_interval.unzip();
    vec![
        ("method", if plan.method == PlanMethod::Gbas { "gbas" } else { "dklr" }.into()),
        ("k", plan.k.to_string()),
        ("epsilon", plan.target.epsilon().to_string()),
        ("delta", plan.target.delta().to_string()),
        ("c_tilt", plan.tilt.c_tilt().to_string()),
        ("interval_lo", opt(lo)),
        ("interval_hi", opt(hi)),
        ("error_bound", opt(plan.error_bound)),
        ("divisor", opt(plan.divisor)),
    ]
}

fn cmd_plan(a: PlanArgs, out: &mut impl Write) -> CmdResult {
    let target = a.target.target()?;
    let tilt = a.tilt.enabled();
    let opts = a.search.options();
    let plan = match a.method {
        PlanKind::Gbas => find_k_gbas(&target, tilt, &opts)?,
        PlanKind::Dklr => {
            let min_p = a.min_p.ok_or_else(|| usage("--method dklr needs --min-p"))?;
            find_k_dklr(min_p, &target, tilt, a.search.divisor, &opts)?
        }
    };
    let json = PlanOutput { plan: &plan, c_tilt: plan.tilt.c_tilt() };
    emit(out, a.output, &json, &[plan_row(&plan)])?;
    Ok(())
}

#[derive(Serialize)]
struct UnbiasedOutput {
    p_hat: f64,
    k: u64,
    negbin_total: u64,
    grid_n: usize,
    shift: f64,
    ratio_bound: RatioBound,
    /// Whether the drawn shift lies in the set the bound certifies.
    shift_certified: bool,
}

#[derive(Serialize)]
struct EstimateOutput {
    seed: Option<u64>,
    #[serde(flatten)]
    report: EstimateReport,
    #[serde(skip_serializing_if = "Option::is_none")]
    unbiased: Option<UnbiasedOutput>,
}

fn estimate_row(o: &EstimateOutput) -> Row {
    let r = &o.report;
    let u = o.unbiased.as_ref();
    vec![
        ("method", serde_json::to_value(r.method).unwrap().as_str().unwrap_or_default().into()),
        ("p_hat", r.p_hat.to_string()),
        ("k_used", r.k_used.to_string()),
        ("samples_consumed", r.samples_consumed.to_string()),
        ("c_tilt", r.tilt.c_tilt().to_string()),
        ("negbin_total", opt(r.aux_negbin_total)),
        ("stage1_k", opt(r.stage1.as_ref().map(|s| s.k_used))),
        ("stage1_p_hat", opt(r.stage1.as_ref().map(|s| s.p_hat))),
        ("lower_bound", opt(r.lower_bound)),
        ("seed", opt(o.seed)),
        ("unbiased_p_hat", opt(u.map(|u| u.p_hat))),
        ("ratio_bound", opt(u.map(|u| u.ratio_bound.x))),
    ]
}

fn cmd_estimate(a: EstimateArgs, out: &mut impl Write) -> CmdResult {
    let target = a.target.target()?;
    let tilt = a.tilt.enabled();
    let needs_rng = a.simulate_p.is_some()
        || a.unbiased
        || matches!(a.method, EstimateKind::TwoStage | EstimateKind::Gbas);
    let seed = match (a.seed, needs_rng) {
        (Some(s), _) => Some(s),
        (None, true) => Some(rand::random()),
        (None, false) => None,
    };
    let base_seed = seed.unwrap_or(0);
    let mut source: Box<dyn SampleSource> = match (&a.input_file, a.simulate_p) {
        (Some(path), None) => Box::new(FileSource::open(path)?),
        (None, Some(p)) => Box::new(SimulatedSource::new(p, base_seed)?),
        _ => return Err(usage("exactly one of --input-file and --simulate-p is required")),
    };
    let mut rng = VariateRng::new(base_seed);
    let opts = a.search.options();
    let fixed = |method| -> bernoulli_ras::Result<Option<Plan>> {
        a.k.map(|k| Plan::fixed(method, k, target, TiltConfig::new(tilt, target.epsilon())?))
            .transpose()
    };

    let report = match a.method {
        EstimateKind::FixedN => {
            let n = a.k.ok_or_else(|| usage("--method fixed-n needs --k"))?;
            estimate_fixed_n(&mut source, n)?
        }
        EstimateKind::Gbas => {
            let plan = match fixed(PlanMethod::Gbas)? {
                Some(p) => p,
                None => find_k_gbas(&target, tilt, &opts)?,
            };
            estimate_gbas(&mut source, &plan, &mut rng)?
        }
        EstimateKind::Dklr => {
            let plan = match fixed(PlanMethod::DklrInterval)? {
                Some(p) => p,
                None => {
                    let min_p =
                        a.min_p.ok_or_else(|| usage("--method dklr needs --k or --min-p"))?;
                    find_k_dklr(min_p, &target, tilt, a.search.divisor, &opts)?
                }
            };
            estimate_dklr(&mut source, &plan)?
        }
        EstimateKind::TwoStage => {
            let planner = TwoStagePlanner::new(
                &target,
                tilt,
                a.search.divisor,
                LowerBoundRule::default(),
                opts,
            )?;
            estimate_two_stage(&mut source, &planner, &mut rng)?
        }
    };

    let unbiased = if a.unbiased {
        let m = report
            .aux_negbin_total
            .ok_or_else(|| usage("--unbiased needs a negative binomial or gamma-scheme run"))?;
        let bound = ratio_bound(m, a.grid_n, a.delta1)?;
        let grid = make_grid(a.grid_n, rng.uniform())?;
        Some(UnbiasedOutput {
            p_hat: unbiased_estimate(m, report.k_used, &grid)?,
            k: report.k_used,
            negbin_total: m,
            grid_n: a.grid_n,
            shift: grid.shift().value(),
            shift_certified: bound.covers(grid.shift()),
            ratio_bound: bound,
        })
    } else {
        None
    };

    let output = EstimateOutput { seed, report, unbiased };
    let row = estimate_row(&output);
    emit(out, a.output, &output, &[row])?;
    Ok(())
}

fn cmd_table1(a: TableArgs, out: &mut impl Write) -> CmdResult {
    let rows = regenerate_table1()?;
    std::fs::create_dir_all(&a.out_dir)?;
    write_atomically(&a.out_dir.join("table1.tsv"), table1_tsv(&rows).as_bytes())?;
    if a.output == Format::Tsv {
        out.write_all(table1_tsv(&rows).as_bytes())?;
    } else {
        let flat: Vec<Row> = rows
            .iter()
            .map(|r| {
                vec![
                    ("p", r.p.to_string()),
                    ("epsilon", r.epsilon.to_string()),
                    ("delta", r.delta.to_string()),
                    ("k_gbas", r.k_gbas.to_string()),
                    ("k_stage1", r.k_stage1.to_string()),
                    ("k_stage2", r.k_stage2.to_string()),
                    ("speedup", r.speedup.to_string()),
                    ("rho", r.rho.to_string()),
                    ("inv_one_minus_p", r.inv_one_minus_p.to_string()),
                ]
            })
            .collect();
        emit(out, a.output, &rows, &flat)?;
    }
    Ok(())
}

fn cmd_table2(a: TableArgs, out: &mut impl Write) -> CmdResult {
    let rows = regenerate_table2()?;
    std::fs::create_dir_all(&a.out_dir)?;
    write_atomically(&a.out_dir.join("table2.tsv"), table2_tsv(&rows).as_bytes())?;
    if a.output == Format::Tsv {
        out.write_all(table2_tsv(&rows).as_bytes())?;
    } else {
        let flat: Vec<Row> = rows
            .iter()
            .map(|r| {
                vec![
                    ("m", r.m.to_string()),
                    ("n", r.n.to_string()),
                    ("delta1", r.delta1.to_string()),
                    ("x", r.x.to_string()),
                ]
            })
            .collect();
        emit(out, a.output, &rows, &flat)?;
    }
    Ok(())
}

fn simulate_row(r: &ExperimentResult) -> Row {
    vec![
        ("p_true", r.config.p_true.to_string()),
        ("replicates", r.config.replicates.to_string()),
        ("planned_k", r.planned_k.to_string()),
        ("failures", r.failures.to_string()),
        ("failure_rate", r.failure_rate.mean.to_string()),
        ("failure_rate_se", r.failure_rate.std_error.to_string()),
        ("mean_samples", r.mean_samples.mean.to_string()),
        ("mean_samples_se", r.mean_samples.std_error.to_string()),
        ("mean_p_hat", r.mean_p_hat.mean.to_string()),
        ("mean_p_hat_se", r.mean_p_hat.std_error.to_string()),
    ]
}

fn cmd_simulate(a: SimulateArgs, out: &mut impl Write) -> CmdResult {
    let method = match a.method {
        SimulateKind::TwoStage => ExperimentMethod::TwoStage,
        SimulateKind::Gbas => ExperimentMethod::Gbas,
        SimulateKind::Dklr => ExperimentMethod::Dklr,
        SimulateKind::FixedN => ExperimentMethod::FixedN,
        SimulateKind::Unbiased => ExperimentMethod::Unbiased,
    };
    let mut cfg = ExperimentConfig::new(method, a.p, a.target.target()?, a.replicates, a.seed)
        .with_tilt(a.tilt.enabled());
    cfg.k = a.k;
    cfg.min_p = a.min_p;
    cfg.divisor = a.divisor;
    cfg.grid_n = a.grid_n;
    cfg.keep_replicates = a.keep_replicates;
    let mut result = run_coverage(&cfg)?;
    if let Some(dir) = &a.out_dir {
        write_experiment(&result, dir, &a.name)?;
    }
    result.replicate_log = None;
    emit(out, a.output, &result, &[simulate_row(&result)])?;
    if a.check {
        let limit = result.failure_limit(3.0);
        if result.failure_rate.mean > limit {
            return Err(Failure::Check(format!(
                "failure rate {} exceeds {limit}",
                result.failure_rate.mean
            )));
        }
    }
    Ok(())
}
