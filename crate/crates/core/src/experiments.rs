//! Experiment drivers: hyperparameter and split sweeps, statistical-error
//! decay, BaMAML-vs-MAML win probabilities and dominating constants.
//!
//! Every driver turns an [`ExperimentConfig`] into a flat list of
//! [`ResultRow`]s. Random streams are keyed by `(master seed, cell, repetition)`
//! and rows are produced in a fixed order, so output does not depend on the
//! number of worker threads. Within a repetition all learners see the same
//! data.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::constants::{self, ConstantGrids};
use crate::error::{Error, Result};
use crate::estimators::{fit_theta0_from_stats, Method, MethodKind, TaskStats};
use crate::numerics::Rng;
use crate::risk::{adapted_test_loss, AdaptedLossOptions, Population};
use crate::taskgen::{sample_dataset_with, sample_task, split_sizes, Noise, TaskDistribution, TaskSpec};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Experiment {
    SweepHyper,
    SweepSplit,
    Decay,
    WinProb,
    Constants,
    Verify,
}

impl Experiment {
    pub fn name(self) -> &'static str {
        match self {
            Experiment::SweepHyper => "sweep-hyper",
            Experiment::SweepSplit => "sweep-split",
            Experiment::Decay => "decay",
            Experiment::WinProb => "win-prob",
            Experiment::Constants => "constants",
            Experiment::Verify => "verify",
        }
    }
}

impl fmt::Display for Experiment {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Experiment {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        [
            Experiment::SweepHyper,
            Experiment::SweepSplit,
            Experiment::Decay,
            Experiment::WinProb,
            Experiment::Constants,
            Experiment::Verify,
        ]
        .into_iter()
        .find(|e| e.name() == s)
        .ok_or_else(|| Error::InvalidHyperparameter(format!("experiment: unknown experiment '{s}'")))
    }
}

/// How a fitted initialization is scored when comparing learners.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LossMode {
    /// Closed-form population risk over the task pool.
    #[default]
    ClosedForm,
    /// Monte Carlo adapted test loss on pool tasks with fresh data.
    Adapted,
}

impl LossMode {
    fn suffix(self) -> &'static str {
        match self {
            LossMode::ClosedForm => "closed_form",
            LossMode::Adapted => "adapted",
        }
    }
}

/// Experiment configuration, read from JSON. Unknown keys are rejected.
///
/// Grids left out fall back to per-experiment defaults; log grids hold
/// base-10 exponents.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ExperimentConfig {
    pub experiment: Option<Experiment>,
    pub d: usize,
    #[serde(rename = "N")]
    pub n: usize,
    #[serde(rename = "T")]
    pub t: usize,
    pub s: f64,
    pub seeds: Vec<u64>,
    pub alpha: f64,
    pub gamma: f64,
    pub alpha_grid: Option<Vec<f64>>,
    pub gamma_grid: Option<Vec<f64>>,
    pub s_grid: Option<Vec<f64>>,
    #[serde(rename = "logT_grid")]
    pub log_t_grid: Option<Vec<f64>>,
    #[serde(rename = "logN_grid")]
    pub log_n_grid: Option<Vec<f64>>,
    /// Trials per cell and master seed.
    pub repetitions: usize,
    /// Number of tasks in the pool that stands in for the task distribution.
    pub task_pool: usize,
    pub methods: Vec<MethodKind>,
    /// Drop label noise from training data.
    pub noiseless: bool,
    pub loss_mode: LossMode,
    /// Pool tasks scored per trial in adapted mode.
    pub eval_tasks: usize,
    /// Test points per scored task in adapted mode.
    pub n_test: usize,
    /// Monte Carlo samples per dominating-constant estimate.
    pub n_samples: usize,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            experiment: None,
            d: 1,
            n: 10,
            t: 100,
            s: 0.5,
            seeds: vec![0],
            alpha: 0.7,
            gamma: 0.1,
            alpha_grid: None,
            gamma_grid: None,
            s_grid: None,
            log_t_grid: None,
            log_n_grid: None,
            repetitions: 20,
            task_pool: 10_000,
            methods: MethodKind::ALL.to_vec(),
            noiseless: false,
            loss_mode: LossMode::ClosedForm,
            eval_tasks: 1000,
            n_test: 100,
            n_samples: 4000,
        }
    }
}

fn config_error(field: &str, msg: impl fmt::Display) -> Error {
    Error::InvalidHyperparameter(format!("{field}: {msg}"))
}

impl ExperimentConfig {
    pub fn alpha_grid(&self, exp: Experiment) -> Vec<f64> {
        self.alpha_grid.clone().unwrap_or_else(|| match exp {
            Experiment::Constants => ConstantGrids::for_n(self.n).alpha,
            _ => vec![0.01, 0.1, 0.2, 0.3, 0.5, 0.7, 1.0, 1.5, 2.0],
        })
    }

    pub fn gamma_grid(&self, exp: Experiment) -> Vec<f64> {
        self.gamma_grid.clone().unwrap_or_else(|| match exp {
            Experiment::Constants => ConstantGrids::for_n(self.n).gamma,
            _ => vec![1e-6, 1e-3, 1e-2, 0.1, 1.0, 10.0, 1e3, 1e6],
        })
    }

    pub fn s_grid(&self, exp: Experiment) -> Vec<f64> {
        self.s_grid.clone().unwrap_or_else(|| match exp {
            Experiment::Constants => ConstantGrids::for_n(self.n).s,
            _ => vec![0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8],
        })
    }

    pub fn t_values(&self) -> Result<Vec<usize>> {
        pow10_grid("logT_grid", self.log_t_grid.as_deref().unwrap_or(&[2.0, 3.0, 4.0]))
    }

    pub fn n_values(&self) -> Result<Vec<usize>> {
        pow10_grid("logN_grid", self.log_n_grid.as_deref().unwrap_or(&[1.0, 2.0, 3.0]))
    }

    /// Checks ranges and that every grid `exp` consumes is usable.
    pub fn validate(&self, exp: Experiment) -> Result<()> {
        if let Some(declared) = self.experiment {
            if declared != exp {
                return Err(config_error(
                    "experiment",
                    format!("config is for '{declared}' but '{exp}' was requested"),
                ));
            }
        }
        if exp == Experiment::Verify {
            return Ok(());
        }
        if self.d == 0 {
            return Err(config_error("d", "must be positive"));
        }
        if self.n < 2 {
            return Err(config_error("N", "must be at least 2"));
        }
        if self.t == 0 {
            return Err(config_error("T", "must be positive"));
        }
        if self.seeds.is_empty() {
            return Err(config_error("seeds", "must be non-empty"));
        }
        if self.repetitions == 0 {
            return Err(config_error("repetitions", "must be positive"));
        }
        if self.task_pool == 0 {
            return Err(config_error("task_pool", "must be positive"));
        }
        if self.methods.is_empty() {
            return Err(config_error("methods", "must be non-empty"));
        }
        Method::maml(self.alpha).map_err(|e| config_error("alpha", e))?;
        Method::bamaml(self.gamma).map_err(|e| config_error("gamma", e))?;
        check_grid("alpha_grid", &self.alpha_grid(exp), |a| a >= 0.0)?;
        check_grid("gamma_grid", &self.gamma_grid(exp), |g| g > 0.0)?;
        check_grid("s_grid", &self.s_grid(exp), |s| s > 0.0 && s < 1.0)?;
        match exp {
            Experiment::SweepHyper => {
                split_sizes(self.n, self.s).map_err(|e| config_error("s", e))?;
            }
            Experiment::SweepSplit => {
                for &s in &self.s_grid(exp) {
                    split_sizes(self.n, s).map_err(|e| config_error("s_grid", e))?;
                    self.check_solvable(self.t, self.n, s, "T")?;
                }
            }
            Experiment::Decay => {
                if self.log_t_grid.as_ref().is_some_and(Vec::is_empty)
                    && self.log_n_grid.as_ref().is_some_and(Vec::is_empty)
                {
                    return Err(config_error("logT_grid", "logT_grid or logN_grid must be non-empty"));
                }
                for t in self.t_values()? {
                    self.check_solvable(t, self.n, self.s, "logT_grid")?;
                }
                for n in self.n_values()? {
                    self.check_solvable(self.t, n, self.s, "logN_grid")?;
                }
            }
            Experiment::WinProb => {
                check_non_empty("logT_grid", &self.t_values()?)?;
                for n in self.n_values()? {
                    split_sizes(n, self.s).map_err(|e| config_error("logN_grid", e))?;
                }
                check_non_empty("logN_grid", &self.n_values()?)?;
                if self.loss_mode == LossMode::Adapted && (self.eval_tasks == 0 || self.n_test == 0) {
                    return Err(config_error("eval_tasks", "adapted mode needs eval_tasks and n_test > 0"));
                }
            }
            Experiment::Constants => {
                if self.n_samples < 100 {
                    return Err(config_error("n_samples", "must be at least 100"));
                }
                for &s in &self.s_grid(exp) {
                    split_sizes(self.n, s).map_err(|e| config_error("s_grid", e))?;
                }
                split_sizes(self.n, self.s).map_err(|e| config_error("s", e))?;
            }
            Experiment::Verify => {}
        }
        Ok(())
    }

    /// Rejects task counts that leave unregularized normal equations singular.
    fn check_solvable(&self, t: usize, n: usize, s: f64, field: &str) -> Result<()> {
        let (_, n_val) = split_sizes(n, s).map_err(|e| config_error(field, e))?;
        for kind in &self.methods {
            let points = match kind {
                MethodKind::Erm => n,
                MethodKind::Maml => n_val,
                MethodKind::Imaml | MethodKind::Bamaml => continue,
            };
            if t * points < self.d {
                return Err(config_error(
                    field,
                    format!("{kind} needs T·{points} ≥ d = {} for solvable normal equations, got T = {t}", self.d),
                ));
            }
        }
        Ok(())
    }

    fn noise(&self) -> Noise {
        if self.noiseless {
            Noise::None
        } else {
            Noise::Gaussian
        }
    }

    /// Learners named in `methods`, at the anchor hyperparameters.
    fn anchor_methods(&self) -> Result<Vec<Method<f64>>> {
        self.methods
            .iter()
            .map(|&k| Method::with_hyperparameter(k, if k == MethodKind::Maml { self.alpha } else { self.gamma }))
            .collect()
    }
}

fn check_grid(field: &str, grid: &[f64], ok: impl Fn(f64) -> bool) -> Result<()> {
    check_non_empty(field, grid)?;
    if let Some(bad) = grid.iter().find(|&&v| !v.is_finite() || !ok(v)) {
        return Err(config_error(field, format!("value {bad} out of range")));
    }
    Ok(())
}

fn check_non_empty<T>(field: &str, grid: &[T]) -> Result<()> {
    if grid.is_empty() {
        return Err(config_error(field, "must be non-empty"));
    }
    Ok(())
}

fn pow10_grid(field: &str, exps: &[f64]) -> Result<Vec<usize>> {
    exps.iter()
        .map(|&e| {
            let v = 10f64.powf(e).round();
            if !e.is_finite() || v < 1.0 || v > 1e9 {
                Err(config_error(field, format!("exponent {e} out of range")))
            } else {
                Ok(v as usize)
            }
        })
        .collect()
}

/// One metric of one configuration. Missing `N`, `T` or `s` mean the metric
/// is not tied to a single value of that axis.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ResultRow {
    pub experiment: Experiment,
    pub method: String,
    pub hyperparameters: String,
    pub d: usize,
    #[serde(rename = "N")]
    pub n: Option<usize>,
    #[serde(rename = "T")]
    pub t: Option<usize>,
    pub s: Option<f64>,
    pub seed: u64,
    pub metric: String,
    pub value: f64,
    pub mc_std_error: Option<f64>,
}

impl ResultRow {
    pub const COLUMNS: [&'static str; 11] = [
        "experiment",
        "method",
        "hyperparameters",
        "d",
        "N",
        "T",
        "s",
        "seed",
        "metric",
        "value",
        "mc_std_error",
    ];
}

/// `alpha=0.7`, `gamma=0.1`, or empty for ERM.
pub fn hyperparameter_label(method: &Method<f64>) -> String {
    method
        .hyperparameter()
        .map(|(name, v)| format!("{name}={v}"))
        .unwrap_or_default()
}

struct RowBuilder {
    experiment: Experiment,
    method: String,
    hyperparameters: String,
    d: usize,
    n: Option<usize>,
    t: Option<usize>,
    s: Option<f64>,
    seed: u64,
}

impl RowBuilder {
    fn for_method(experiment: Experiment, method: &Method<f64>, d: usize, seed: u64) -> Self {
        Self {
            experiment,
            method: method.kind().to_string(),
            hyperparameters: hyperparameter_label(method),
            d,
            n: None,
            t: None,
            s: None,
            seed,
        }
    }

    fn at(mut self, n: Option<usize>, t: Option<usize>, s: Option<f64>) -> Self {
        self.n = n;
        self.t = t;
        self.s = s;
        self
    }

    fn row(&self, metric: &str, value: f64, mc_std_error: Option<f64>) -> ResultRow {
        ResultRow {
            experiment: self.experiment,
            method: self.method.clone(),
            hyperparameters: self.hyperparameters.clone(),
            d: self.d,
            n: self.n,
            t: self.t,
            s: self.s,
            seed: self.seed,
            metric: metric.to_string(),
            value,
            mc_std_error,
        }
    }

    fn summary_rows(&self, metric: &str, values: &[f64], out: &mut Vec<ResultRow>) {
        let s = Summary::of(values);
        out.push(self.row(&format!("{metric}_median"), s.median, None));
        out.push(self.row(&format!("{metric}_mean"), s.mean, None));
        out.push(self.row(&format!("{metric}_iqr"), s.iqr, None));
    }
}

/// Median, mean and interquartile range.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Summary {
    pub median: f64,
    pub mean: f64,
    pub iqr: f64,
}

impl Summary {
    pub fn of(values: &[f64]) -> Self {
        assert!(!values.is_empty(), "summary of no values");
        let mut v = values.to_vec();
        v.sort_by(f64::total_cmp);
        Self {
            median: quantile(&v, 0.5),
            mean: v.iter().sum::<f64>() / v.len() as f64,
            iqr: quantile(&v, 0.75) - quantile(&v, 0.25),
        }
    }
}

/// Linearly interpolated quantile of sorted data.
fn quantile(sorted: &[f64], p: f64) -> f64 {
    let h = (sorted.len() - 1) as f64 * p;
    let lo = h.floor() as usize;
    let hi = h.ceil() as usize;
    sorted[lo] + (h - lo as f64) * (sorted[hi] - sorted[lo])
}

/// Least-squares slope of `log y` against `log x`.
pub fn log_log_slope(x: &[f64], y: &[f64]) -> f64 {
    assert_eq!(x.len(), y.len());
    let lx: Vec<f64> = x.iter().map(|v| v.ln()).collect();
    let ly: Vec<f64> = y.iter().map(|v| v.ln()).collect();
    let n = lx.len() as f64;
    let mx = lx.iter().sum::<f64>() / n;
    let my = ly.iter().sum::<f64>() / n;
    let sxy: f64 = lx.iter().zip(&ly).map(|(a, b)| (a - mx) * (b - my)).sum();
    let sxx: f64 = lx.iter().map(|a| (a - mx) * (a - mx)).sum();
    sxy / sxx
}

const POOL_KEY: u64 = 0x706f_6f6c;

/// Task pool standing in for the task distribution of a master seed.
pub fn task_pool(d: usize, size: usize, seed: u64) -> Result<Vec<TaskSpec<f64>>> {
    let root = Rng::new(seed).derive(POOL_KEY);
    let dist = TaskDistribution::general(&mut root.derive(0), d)?;
    let tasks = root.derive(1);
    (0..size)
        .into_par_iter()
        .map(|i| sample_task(&mut tasks.derive(i as u64), &dist))
        .collect()
}

/// `N₁/N` after rounding the split.
pub fn realized_split(n: usize, s: f64) -> Result<f64> {
    let (n_trn, _) = split_sizes(n, s)?;
    Ok(n_trn as f64 / n as f64)
}

/// Statistics of `t` datasets, each from a pool task drawn uniformly with replacement.
pub fn sample_trial(
    pool: &[TaskSpec<f64>],
    t: usize,
    n: usize,
    s: f64,
    noise: Noise,
    rng: &mut Rng,
) -> Result<Vec<TaskStats<f64>>> {
    (0..t)
        .map(|_| {
            let task = &pool[rng.index(pool.len())];
            Ok(TaskStats::from_dataset(&sample_dataset_with(rng, task, n, s, noise)?))
        })
        .collect()
}

fn trial_rng(seed: u64, cell: u64, rep: usize) -> Rng {
    Rng::new(seed).derive(cell).derive(rep as u64)
}

/// Optimal population risk per learner and grid point, with ERM as the reference.
pub fn run_sweep_hyper(cfg: &ExperimentConfig) -> Result<Vec<ResultRow>> {
    let exp = Experiment::SweepHyper;
    cfg.validate(exp)?;
    let s = realized_split(cfg.n, cfg.s)?;
    let mut methods = Vec::new();
    for &kind in &cfg.methods {
        match kind {
            MethodKind::Erm => methods.push(Method::erm()),
            MethodKind::Maml => {
                for &a in &cfg.alpha_grid(exp) {
                    methods.push(Method::maml(a)?);
                }
            }
            MethodKind::Imaml | MethodKind::Bamaml => {
                for &g in &cfg.gamma_grid(exp) {
                    methods.push(Method::with_hyperparameter(kind, g)?);
                }
            }
        }
    }
    let mut rows = Vec::new();
    for &seed in &cfg.seeds {
        let pool = task_pool(cfg.d, cfg.task_pool, seed)?;
        for m in &methods {
            let risk = Population::new(*m, &pool, s)?.optimal_risk();
            let b = RowBuilder::for_method(exp, m, cfg.d, seed).at(Some(cfg.n), None, Some(s));
            rows.push(b.row("optimal_population_risk", risk, None));
        }
    }
    Ok(rows)
}

/// Risk decomposition per split ratio, summarized over repetitions.
pub fn run_sweep_split(cfg: &ExperimentConfig) -> Result<Vec<ResultRow>> {
    let exp = Experiment::SweepSplit;
    cfg.validate(exp)?;
    let methods = cfg.anchor_methods()?;
    let mut rows = Vec::new();
    for &seed in &cfg.seeds {
        let pool = task_pool(cfg.d, cfg.task_pool, seed)?;
        for (cell, &s_nominal) in cfg.s_grid(exp).iter().enumerate() {
            let s = realized_split(cfg.n, s_nominal)?;
            let pops = methods
                .iter()
                .map(|m| Population::new(*m, &pool, s))
                .collect::<Result<Vec<_>>>()?;
            // per repetition: (total, statistical) for each method
            let reps: Vec<Vec<(f64, f64)>> = (0..cfg.repetitions)
                .into_par_iter()
                .map(|rep| {
                    let mut rng = trial_rng(seed, cell as u64, rep);
                    let stats = sample_trial(&pool, cfg.t, cfg.n, s_nominal, cfg.noise(), &mut rng)?;
                    pops.iter()
                        .map(|p| {
                            let hat = fit_theta0_from_stats(p.method(), &stats)?;
                            Ok((p.risk(&hat), p.statistical_error(&hat)))
                        })
                        .collect()
                })
                .collect::<Result<_>>()?;
            for (k, (m, p)) in methods.iter().zip(&pops).enumerate() {
                let b = RowBuilder::for_method(exp, m, cfg.d, seed).at(Some(cfg.n), Some(cfg.t), Some(s));
                let totals: Vec<f64> = reps.iter().map(|r| r[k].0).collect();
                let errors: Vec<f64> = reps.iter().map(|r| r[k].1).collect();
                b.summary_rows("total_risk", &totals, &mut rows);
                rows.push(b.row("optimal_population_risk", p.optimal_risk(), None));
                b.summary_rows("statistical_error", &errors, &mut rows);
            }
        }
    }
    Ok(rows)
}

/// Statistical-error decay along `T` (fixed `N`) and along `N` (fixed `T`).
pub fn run_decay(cfg: &ExperimentConfig) -> Result<Vec<ResultRow>> {
    let exp = Experiment::Decay;
    cfg.validate(exp)?;
    let methods = cfg.anchor_methods()?;
    let mut axes: Vec<(&str, Vec<(usize, usize)>)> = Vec::new();
    if !cfg.log_t_grid.as_ref().is_some_and(Vec::is_empty) {
        axes.push(("T", cfg.t_values()?.into_iter().map(|t| (t, cfg.n)).collect()));
    }
    if !cfg.log_n_grid.as_ref().is_some_and(Vec::is_empty) {
        axes.push(("N", cfg.n_values()?.into_iter().map(|n| (cfg.t, n)).collect()));
    }
    let mut rows = Vec::new();
    for &seed in &cfg.seeds {
        let pool = task_pool(cfg.d, cfg.task_pool, seed)?;
        let mut populations: BTreeMap<u64, Vec<Population<'_, f64>>> = BTreeMap::new();
        for (axis_index, (axis, cells)) in axes.iter().enumerate() {
            let mut medians = vec![Vec::new(); methods.len()];
            for (cell, &(t, n)) in cells.iter().enumerate() {
                let s = realized_split(n, cfg.s)?;
                if !populations.contains_key(&s.to_bits()) {
                    let pops = methods
                        .iter()
                        .map(|m| Population::new(*m, &pool, s))
                        .collect::<Result<Vec<_>>>()?;
                    populations.insert(s.to_bits(), pops);
                }
                let pops = &populations[&s.to_bits()];
                let key = ((axis_index as u64) << 32) | cell as u64;
                let reps: Vec<Vec<f64>> = (0..cfg.repetitions)
                    .into_par_iter()
                    .map(|rep| {
                        let mut rng = trial_rng(seed, key, rep);
                        let stats = sample_trial(&pool, t, n, cfg.s, cfg.noise(), &mut rng)?;
                        pops.iter()
                            .map(|p| Ok(p.statistical_error(&fit_theta0_from_stats(p.method(), &stats)?)))
                            .collect()
                    })
                    .collect::<Result<_>>()?;
                for (k, m) in methods.iter().enumerate() {
                    let errors: Vec<f64> = reps.iter().map(|r| r[k]).collect();
                    medians[k].push(Summary::of(&errors).median);
                    RowBuilder::for_method(exp, m, cfg.d, seed)
                        .at(Some(n), Some(t), Some(s))
                        .summary_rows("statistical_error", &errors, &mut rows);
                }
            }
            if cells.len() >= 2 {
                let xs: Vec<f64> = cells
                    .iter()
                    .map(|&(t, n)| if *axis == "T" { t as f64 } else { n as f64 })
                    .collect();
                for (k, m) in methods.iter().enumerate() {
                    let b = RowBuilder::for_method(exp, m, cfg.d, seed).at(
                        (*axis == "T").then_some(cfg.n),
                        (*axis == "N").then_some(cfg.t),
                        None,
                    );
                    rows.push(b.row(&format!("slope_vs_{axis}"), log_log_slope(&xs, &medians[k]), None));
                    rows.push(b.row(&format!("reference_slope_vs_{axis}"), -1.0, None));
                }
            }
        }
    }
    Ok(rows)
}

/// Settings for comparing two learners trial by trial.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WinSetup {
    pub t: usize,
    pub n: usize,
    pub s: f64,
    pub repetitions: usize,
    pub noise: Noise,
    pub mode: LossMode,
    pub eval_tasks: usize,
    pub n_test: usize,
}

/// Fraction of trials in which `challenger` scores strictly lower than
/// `incumbent`; ties go to the incumbent.
pub fn win_fraction(
    challenger: &Method<f64>,
    incumbent: &Method<f64>,
    pool: &[TaskSpec<f64>],
    setup: &WinSetup,
    seed: u64,
    cell: u64,
) -> Result<f64> {
    let s = realized_split(setup.n, setup.s)?;
    let (n_adapt, _) = split_sizes(setup.n, setup.s)?;
    let pops = [Population::new(*challenger, pool, s)?, Population::new(*incumbent, pool, s)?];
    let wins: Vec<bool> = (0..setup.repetitions)
        .into_par_iter()
        .map(|rep| {
            let mut rng = trial_rng(seed, cell, rep);
            let stats = sample_trial(pool, setup.t, setup.n, setup.s, setup.noise, &mut rng)?;
            let mut scores = [0.0; 2];
            for (score, p) in scores.iter_mut().zip(&pops) {
                let hat = fit_theta0_from_stats(p.method(), &stats)?;
                *score = match setup.mode {
                    LossMode::ClosedForm => p.risk(&hat),
                    LossMode::Adapted => {
                        // both learners are scored on the same tasks and points
                        let mut eval = rng.derive(0x6576_616c);
                        let opts = AdaptedLossOptions::new(n_adapt, setup.n_test);
                        let mut total = 0.0;
                        for _ in 0..setup.eval_tasks {
                            let task = &pool[eval.index(pool.len())];
                            total += adapted_test_loss(p.method(), &hat, task, &mut eval, opts)?;
                        }
                        total / setup.eval_tasks as f64
                    }
                };
            }
            Ok(scores[0] < scores[1])
        })
        .collect::<Result<_>>()?;
    Ok(wins.iter().filter(|&&w| w).count() as f64 / wins.len() as f64)
}

/// BaMAML-vs-MAML win fraction per `(T, N)` cell.
pub fn run_win_prob(cfg: &ExperimentConfig) -> Result<Vec<ResultRow>> {
    let exp = Experiment::WinProb;
    cfg.validate(exp)?;
    let bamaml = Method::bamaml(cfg.gamma)?;
    let maml = Method::maml(cfg.alpha)?;
    let metric = format!("win_fraction_{}", cfg.loss_mode.suffix());
    let t_values = cfg.t_values()?;
    let n_values = cfg.n_values()?;
    let mut rows = Vec::new();
    for &seed in &cfg.seeds {
        let pool = task_pool(cfg.d, cfg.task_pool, seed)?;
        for (i, &t) in t_values.iter().enumerate() {
            for (j, &n) in n_values.iter().enumerate() {
                let setup = WinSetup {
                    t,
                    n,
                    s: cfg.s,
                    repetitions: cfg.repetitions,
                    noise: cfg.noise(),
                    mode: cfg.loss_mode,
                    eval_tasks: cfg.eval_tasks,
                    n_test: cfg.n_test,
                };
                let cell = ((i as u64) << 32) | j as u64;
                let frac = win_fraction(&bamaml, &maml, &pool, &setup, seed, cell)?;
                rows.push(ResultRow {
                    experiment: exp,
                    method: "bamaml_vs_maml".into(),
                    hyperparameters: format!("alpha={};gamma={}", cfg.alpha, cfg.gamma),
                    d: cfg.d,
                    n: Some(n),
                    t: Some(t),
                    s: Some(realized_split(n, cfg.s)?),
                    seed,
                    metric: metric.clone(),
                    value: frac,
                    mc_std_error: Some((frac * (1.0 - frac) / cfg.repetitions as f64).sqrt()),
                });
            }
        }
    }
    Ok(rows)
}

/// Dominating constants on the hyperparameter and split grids, their
/// asymptotic targets and the MAML/BaMAML ordering.
pub fn run_constants(cfg: &ExperimentConfig) -> Result<Vec<ResultRow>> {
    let exp = Experiment::Constants;
    cfg.validate(exp)?;
    let (d, n) = (cfg.d, cfg.n);
    let eta = d as f64 / n as f64;
    let grids = ConstantGrids {
        alpha: cfg.alpha_grid(exp),
        gamma: cfg.gamma_grid(exp),
        s: cfg.s_grid(exp),
    };
    let mut rows = Vec::new();
    for &seed in &cfg.seeds {
        let rng = Rng::new(seed);
        let report = constants::constant_ordering_check(d, n, cfg.n_samples, &grids, &rng)?;
        for m in [Method::erm(), Method::imaml(cfg.gamma)?] {
            let est = constants::isotropic_constant_mc(&m, d, n, cfg.s, &rng, cfg.n_samples)?;
            let b = RowBuilder::for_method(exp, &m, d, seed).at(Some(n), None, Some(cfg.s));
            rows.push(b.row("dominating_constant", est.value, Some(est.mc_std_error)));
            rows.push(b.row("weight_scale", constants::weight_scale(&m, cfg.s), None));
            if m.kind() == MethodKind::Erm {
                rows.push(b.row("dominating_constant_exact", constants::erm_constant_exact(d, n), None));
            }
        }
        for est in &report.estimates {
            let c = est.config;
            let m = Method::with_hyperparameter(c.method, c.hyperparameter.unwrap_or(0.0))?;
            let b = RowBuilder::for_method(exp, &m, d, seed).at(Some(n), None, Some(c.s));
            rows.push(b.row("dominating_constant", est.value, Some(est.mc_std_error)));
            rows.push(b.row("weight_scale", constants::weight_scale(&m, c.s), None));
        }
        for (m, min) in [
            (Method::maml(report.maml_min.config.hyperparameter.unwrap_or(0.0))?, &report.maml_min),
            (Method::bamaml(report.bamaml_min.config.hyperparameter.unwrap_or(1.0))?, &report.bamaml_min),
        ] {
            let b = RowBuilder::for_method(exp, &m, d, seed).at(Some(n), None, Some(min.config.s));
            rows.push(b.row("grid_min_dominating_constant", min.value, Some(min.mc_std_error)));
        }
        for kind in MethodKind::ALL {
            let target = constants::asymptotic_constant(kind, eta);
            let metric = if target.is_upper_bound {
                "asymptotic_constant_upper_bound"
            } else {
                "asymptotic_constant"
            };
            rows.push(ResultRow {
                experiment: exp,
                method: kind.to_string(),
                hyperparameters: "inf".into(),
                d,
                n: Some(n),
                t: None,
                s: None,
                seed,
                metric: metric.into(),
                value: target.value,
                mc_std_error: None,
            });
        }
        rows.push(ResultRow {
            experiment: exp,
            method: "maml_vs_bamaml".into(),
            hyperparameters: "grid_min".into(),
            d,
            n: Some(n),
            t: None,
            s: None,
            seed,
            metric: "ordering_strict".into(),
            value: if report.is_strict() { 1.0 } else { 0.0 },
            mc_std_error: None,
        });
    }
    Ok(rows)
}

/// Dispatches to the driver for `exp`. `verify` is not a row-producing experiment.
pub fn run(exp: Experiment, cfg: &ExperimentConfig) -> Result<Vec<ResultRow>> {
    match exp {
        Experiment::SweepHyper => run_sweep_hyper(cfg),
        Experiment::SweepSplit => run_sweep_split(cfg),
        Experiment::Decay => run_decay(cfg),
        Experiment::WinProb => run_win_prob(cfg),
        Experiment::Constants => run_constants(cfg),
        Experiment::Verify => Err(config_error("experiment", "verify produces a report, not rows")),
    }
}
