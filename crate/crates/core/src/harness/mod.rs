//! Reproducible Monte Carlo experiments and table regeneration.
//!
//! Replicate `i` of an experiment draws its bits from
//! [`SimulatedSource::for_replicate`] and its variates from
//! [`VariateRng::for_replicate`], both keyed by `(master_seed, i)`.
//! Replicates run on a rayon pool (capped by the `RAS_THREADS` environment
//! variable) and are reduced in index order, so results do not depend on
//! the number of threads.

mod persist;
pub mod stats;
mod tables;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{domain, Result};
use crate::estimators::{
    estimate_dklr, estimate_fixed_n, estimate_gbas, estimate_two_stage, EstimateReport,
};
use crate::planner::{
    find_k_dklr, find_k_gbas, LowerBoundRule, Plan, PlanMethod, RasTarget, SearchOptions,
    TiltConfig, TwoStagePlanner,
};
use crate::sampling::{draw_gamma, SimulatedSource, VariateRng};
use crate::unbiased::estimate_unbiased;

pub use persist::{write_experiment, write_atomically, ExperimentFiles, LIBRARY_VERSION};
pub use stats::{ks_one_sample, ks_two_sample, mean_and_se, KsResult, MeanEstimate};
pub use tables::{
    regenerate_table1, regenerate_table2, table1_tsv, table2_tsv, Table1Row, Table2Row,
    TABLE1_GRID, TABLE2_GRID,
};

/// Environment variable capping the number of worker threads.
pub const THREADS_ENV: &str = "RAS_THREADS";

/// Default grid size for unbiased-estimate experiments.
pub const DEFAULT_GRID_N: usize = 1000;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ExperimentMethod {
    TwoStage,
    Gbas,
    Dklr,
    FixedN,
    Unbiased,
}

/// One experiment: `replicates` independent runs of an estimator at a
/// known `p_true`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentConfig {
    pub method: ExperimentMethod,
    pub p_true: f64,
    pub target: RasTarget,
    pub replicates: u64,
    pub master_seed: u64,
    pub divisor: u32,
    pub tilt: bool,
    /// Draw count override (`n` for the fixed-size average). When absent
    /// the planner chooses it.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub k: Option<u64>,
    /// Lower end `a` for a planned negative binomial run.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub min_p: Option<f64>,
    /// Grid size for the unbiased estimate.
    #[serde(default = "default_grid_n")]
    pub grid_n: usize,
    /// Keep every replicate's outcome in the result.
    #[serde(default)]
    pub keep_replicates: bool,
}

fn default_grid_n() -> usize {
    DEFAULT_GRID_N
}

impl ExperimentConfig {
    /// A config with the toolkit defaults: tilting on, divisor 100.
    pub fn new(
        method: ExperimentMethod,
        p_true: f64,
        target: RasTarget,
        replicates: u64,
        master_seed: u64,
    ) -> Self {
        ExperimentConfig {
            method,
            p_true,
            target,
            replicates,
            master_seed,
            divisor: crate::planner::DEFAULT_DIVISOR,
            tilt: true,
            k: None,
            min_p: None,
            grid_n: DEFAULT_GRID_N,
            keep_replicates: false,
        }
    }

    pub fn with_k(mut self, k: u64) -> Self {
        self.k = Some(k);
        self
    }

    pub fn with_tilt(mut self, tilt: bool) -> Self {
        self.tilt = tilt;
        self
    }

    pub fn with_min_p(mut self, a: f64) -> Self {
        self.min_p = Some(a);
        self
    }

    pub fn keeping_replicates(mut self) -> Self {
        self.keep_replicates = true;
        self
    }

    fn validate(&self) -> Result<()> {
        if !(self.p_true > 0.0 && self.p_true <= 1.0) {
            return Err(domain(format!("p_true must lie in (0, 1], got {}", self.p_true)));
        }
        if self.replicates == 0 {
            return Err(domain("an experiment needs at least one replicate"));
        }
        if self.divisor == 0 {
            return Err(domain("partition divisor must be positive"));
        }
        Ok(())
    }
}

/// One replicate's outcome.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ReplicateOutcome {
    pub index: u64,
    pub p_hat: f64,
    pub samples_consumed: u64,
    pub k_used: u64,
    /// Pilot draw count for two-stage runs.
    pub stage1_k: Option<u64>,
    /// `|p_hat / p_true - 1| > ε`.
    pub failed: bool,
}

/// Aggregates over all replicates.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentResult {
    pub config: ExperimentConfig,
    /// The planned `k` (stage one's for two-stage runs).
    pub planned_k: u64,
    pub failures: u64,
    /// Failure fraction with its binomial standard error.
    pub failure_rate: MeanEstimate,
    pub mean_samples: MeanEstimate,
    pub mean_p_hat: MeanEstimate,
    /// Mean `k` actually used (varies between two-stage replicates).
    pub mean_k_used: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub replicate_log: Option<Vec<ReplicateOutcome>>,
}

impl ExperimentResult {
    /// `δ + z √(δ(1 - δ)/n)`: the largest failure rate consistent with the
    /// guarantee at `z` binomial standard errors.
    pub fn failure_limit(&self, z: f64) -> f64 {
        let d = self.config.target.delta();
        d + z * (d * (1.0 - d) / self.config.replicates as f64).sqrt()
    }
}

enum Prepared {
    TwoStage(TwoStagePlanner),
    Single(Plan),
    FixedN(u64),
    Unbiased(u64, usize),
}

fn prepare(config: &ExperimentConfig) -> Result<Prepared> {
    let target = config.target;
    let search = SearchOptions::default();
    let fixed = |method| -> Result<Option<Plan>> {
        config
            .k
            .map(|k| Plan::fixed(method, k, target, TiltConfig::new(config.tilt, target.epsilon())?))
            .transpose()
    };
    Ok(match config.method {
        ExperimentMethod::TwoStage => Prepared::TwoStage(TwoStagePlanner::new(
            &target,
            config.tilt,
            config.divisor,
            LowerBoundRule::default(),
            search,
        )?),
        ExperimentMethod::Gbas => Prepared::Single(match fixed(PlanMethod::Gbas)? {
            Some(p) => p,
            None => find_k_gbas(&target, config.tilt, &search)?,
        }),
        ExperimentMethod::Dklr => Prepared::Single(match fixed(PlanMethod::DklrInterval)? {
            Some(p) => p,
            None => {
                let a = config
                    .min_p
                    .ok_or_else(|| domain("a planned negative binomial run needs min_p"))?;
                find_k_dklr(a, &target, config.tilt, config.divisor, &search)?
            }
        }),
        ExperimentMethod::FixedN => Prepared::FixedN(
            config.k.ok_or_else(|| domain("a fixed-size average needs k (the sample size)"))?,
        ),
        ExperimentMethod::Unbiased => {
            let k = match config.k {
                Some(k) => k,
                None => find_k_gbas(&target, false, &search)?.k,
            };
            Prepared::Unbiased(k, config.grid_n)
        }
    })
}

fn run_one(prepared: &Prepared, config: &ExperimentConfig, index: u64) -> Result<EstimateReport> {
    let mut source = SimulatedSource::for_replicate(config.p_true, config.master_seed, index)?;
    let mut rng = VariateRng::for_replicate(config.master_seed, index);
    match prepared {
        Prepared::TwoStage(planner) => estimate_two_stage(&mut source, planner, &mut rng),
        Prepared::Single(plan) => match plan.method {
            PlanMethod::Gbas => estimate_gbas(&mut source, plan, &mut rng),
            PlanMethod::DklrInterval => estimate_dklr(&mut source, plan),
        },
        Prepared::FixedN(n) => estimate_fixed_n(&mut source, *n),
        Prepared::Unbiased(k, n) => estimate_unbiased(&mut source, *k, *n, &mut rng),
    }
}

/// Number of worker threads: `RAS_THREADS` if set to a positive integer,
/// otherwise rayon's default.
pub fn thread_count() -> usize {
    std::env::var(THREADS_ENV)
        .ok()
        .and_then(|v| v.trim().parse::<usize>().ok())
        .filter(|&n| n > 0)
        .unwrap_or_else(rayon::current_num_threads)
}

/// Runs `f(i)` for `i = 0..n` on `threads` workers; output in index order.
pub fn map_replicates<T: Send>(
    n: u64,
    threads: usize,
    f: impl Fn(u64) -> Result<T> + Sync + Send,
) -> Result<Vec<T>> {
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(threads.max(1))
        .build()
        .map_err(|e| domain(format!("cannot start worker pool: {e}")))?;
    pool.install(|| (0..n).into_par_iter().map(&f).collect())
}

/// Runs the experiment on [`thread_count`] workers.
pub fn run_coverage(config: &ExperimentConfig) -> Result<ExperimentResult> {
    run_coverage_with_threads(config, thread_count())
}

/// Runs the experiment on an explicit number of workers. The result does
/// not depend on `threads`.
pub fn run_coverage_with_threads(
    config: &ExperimentConfig,
    threads: usize,
) -> Result<ExperimentResult> {
    config.validate()?;
    let prepared = prepare(config)?;
    let planned_k = match &prepared {
        Prepared::TwoStage(p) => p.stage1().k,
        Prepared::Single(p) => p.k,
        Prepared::FixedN(n) => *n,
        Prepared::Unbiased(k, _) => *k,
    };
    let eps = config.target.epsilon();
    let outcomes = map_replicates(config.replicates, threads, |i| {
        let r = run_one(&prepared, config, i)?;
        Ok(ReplicateOutcome {
            index: i,
            p_hat: r.p_hat,
            samples_consumed: r.samples_consumed,
            k_used: r.k_used,
            stage1_k: r.stage1.as_ref().map(|s| s.k_used),
            failed: r.misses(config.p_true, eps),
        })
    })?;

    let n = outcomes.len() as f64;
    let failures = outcomes.iter().filter(|o| o.failed).count() as u64;
    let rate = failures as f64 / n;
    let samples: Vec<f64> = outcomes.iter().map(|o| o.samples_consumed as f64).collect();
    let p_hats: Vec<f64> = outcomes.iter().map(|o| o.p_hat).collect();
    let mean_k_used = outcomes.iter().map(|o| o.k_used as f64).sum::<f64>() / n;
    Ok(ExperimentResult {
        config: config.clone(),
        planned_k,
        failures,
        failure_rate: MeanEstimate { mean: rate, std_error: (rate * (1.0 - rate) / n).sqrt() },
        mean_samples: mean_and_se(&samples),
        mean_p_hat: mean_and_se(&p_hats),
        mean_k_used,
        replicate_log: config.keep_replicates.then_some(outcomes),
    })
}

/// Draw counts of the two-stage scheme against the gamma scheme.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpeedupReport {
    pub p: f64,
    pub target: RasTarget,
    pub k_gbas: u64,
    pub k_stage1: u64,
    /// Stage-two `k` planned from the lower bound `p(1 - √ε)/(1 + √ε)`.
    pub k_stage2_planned: u64,
    /// `k_gbas / (k_stage1 + k_stage2_planned)`.
    pub planned_speedup: f64,
    /// Mean over replicates of `k_gbas / (k_stage1 + k_stage2)` with the
    /// stage-two `k` each replicate actually used.
    pub realized_speedup: MeanEstimate,
    pub rho: f64,
}

/// Compares the planned and realized draw counts of the two-stage scheme
/// with the gamma scheme at success probability `p`.
pub fn measure_speedup(p: f64, target: &RasTarget, replicates: u64, seed: u64) -> Result<SpeedupReport> {
    if !(p > 0.0 && p < 1.0) {
        return Err(domain(format!("speedup needs p in (0, 1), got {p}")));
    }
    let search = SearchOptions::default();
    let k_gbas = find_k_gbas(target, true, &search)?.k;
    let planner =
        TwoStagePlanner::new(target, true, crate::planner::DEFAULT_DIVISOR, LowerBoundRule::default(), search)?;
    let s = target.epsilon().sqrt();
    let k_stage2_planned = planner.stage2_for_lower_bound(p * (1.0 - s) / (1.0 + s))?.k;
    let k1 = planner.stage1().k;
    let mut config = ExperimentConfig::new(ExperimentMethod::TwoStage, p, *target, replicates, seed);
    config.keep_replicates = true;
    let result = run_coverage(&config)?;
    let ratios: Vec<f64> = result
        .replicate_log
        .unwrap_or_default()
        .iter()
        .map(|o| k_gbas as f64 / (k1 + o.k_used) as f64)
        .collect();
    Ok(SpeedupReport {
        p,
        target: *target,
        k_gbas,
        k_stage1: k1,
        k_stage2_planned,
        planned_speedup: k_gbas as f64 / (k1 + k_stage2_planned) as f64,
        realized_speedup: mean_and_se(&ratios),
        rho: crate::planner::speedup_rho(p, target)?,
    })
}

/// Samples of the relative error `p S / (k - 1)` of the untilted gamma
/// scheme, whose law should not depend on `p`.
pub fn gbas_relative_errors(p: f64, k: u64, n: u64, seed: u64) -> Result<Vec<f64>> {
    if k < 2 {
        return Err(domain("the gamma scheme needs k >= 2"));
    }
    map_replicates(n, thread_count(), |i| {
        let mut source = SimulatedSource::for_replicate(p, seed, i)?;
        let mut rng = VariateRng::for_replicate(seed, i);
        use crate::sampling::SampleSource;
        let m = source.draw_negbin_trials(k)?;
        Ok(p * draw_gamma(m as f64, &mut rng)? / (k - 1) as f64)
    })
}
