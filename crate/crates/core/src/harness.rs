//! Monte Carlo experiments: generate a model, initialize, descend, score.
//!
//! Configuration is a flat TOML table; every key except `n`, `m`, `k`,
//! `p_grid` and `rho_grid` has a default. Trials are seeded from
//! `master_seed` and the cell coordinates, so any single trial can be rerun
//! on its own.

use std::fs;
use std::io::Write;
use std::path::Path;
use std::time::Instant;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::descent::{
    eta_with_scale, run_descent, DescentConfig, DescentError, DescentTrace, Encoder, EncoderParams, Resample,
    SampleSource, ETA_SCALE,
};
use crate::evaluation::{hungarian_match, recovery_success, EvalError};
use crate::genmodel::{generate_batch, generate_dictionary, generate_full_samples, CodeDistribution, ModelConfig, ModelError};
use crate::numerics::{spectral_norm, NumericsError, PowerIteration};
use crate::par;
use crate::spectral_init::{run_init, InitConfig, InitError, GAP_C1, GAP_C2};

#[derive(Debug, Error)]
pub enum HarnessError {
    #[error("invalid experiment configuration: {0}")]
    InvalidConfig(String),
    #[error("cannot parse configuration: {0}")]
    Parse(String),
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error(transparent)]
    Init(#[from] InitError),
    #[error(transparent)]
    Descent(#[from] DescentError),
    #[error(transparent)]
    Eval(#[from] EvalError),
    #[error(transparent)]
    Numerics(#[from] NumericsError),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

fn default_code_dist() -> CodeDistribution {
    CodeDistribution::Rademacher
}
fn default_c() -> f64 {
    1.0
}
fn default_max_pair_trials() -> usize {
    3000
}
fn default_c1() -> f64 {
    GAP_C1
}
fn default_c2() -> f64 {
    GAP_C2
}
fn default_steps() -> usize {
    50
}
fn default_eta_scale() -> f64 {
    ETA_SCALE
}
fn default_encoder() -> Encoder {
    Encoder::TopK
}
fn default_resample() -> Resample {
    Resample::FixedPool
}
fn default_trials() -> usize {
    1
}
fn default_true() -> bool {
    true
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub n: usize,
    pub m: usize,
    pub k: usize,
    #[serde(default = "default_code_dist")]
    pub code_dist: CodeDistribution,
    #[serde(default = "default_c")]
    pub c: f64,

    /// Fully observed hold-out size; defaults to `20·m`.
    #[serde(default)]
    pub holdout_size: Option<usize>,
    /// Cap on partial samples per covariance; all of them by default.
    #[serde(default)]
    pub init_p2: Option<usize>,
    #[serde(default = "default_max_pair_trials")]
    pub max_pair_trials: usize,
    #[serde(default = "default_c1")]
    pub c1: f64,
    #[serde(default = "default_c2")]
    pub c2: f64,
    /// Defaults to `1/ln n`.
    #[serde(default)]
    pub dedup_dist: Option<f64>,
    /// Project onto `2‖A*‖` rather than the ground-truth-free radius.
    #[serde(default = "default_true")]
    pub radius_from_truth: bool,

    #[serde(default = "default_steps")]
    pub steps: usize,
    #[serde(default = "default_eta_scale")]
    pub eta_scale: f64,
    /// Defaults to the cell's `p`.
    #[serde(default)]
    pub samples_per_step: Option<usize>,
    #[serde(default = "default_encoder")]
    pub encoder: Encoder,
    #[serde(default = "default_resample")]
    pub resample: Resample,
    #[serde(default)]
    pub renormalize: bool,

    pub p_grid: Vec<usize>,
    pub rho_grid: Vec<f64>,
    #[serde(default = "default_trials")]
    pub trials: usize,
    /// Recovery threshold; defaults to `6·n/256`.
    #[serde(default)]
    pub tau: Option<f64>,
    #[serde(default)]
    pub master_seed: u64,
    /// Write wall-clock seconds into `sweep.csv`; zeros otherwise.
    #[serde(default = "default_true")]
    pub record_time: bool,
    #[serde(default)]
    pub write_traces: bool,
}

impl ExperimentConfig {
    /// Defaults for a square-ish dictionary.
    pub fn new(n: usize, m: usize, k: usize, p_grid: Vec<usize>, rho_grid: Vec<f64>) -> Self {
        ExperimentConfig {
            n,
            m,
            k,
            code_dist: default_code_dist(),
            c: default_c(),
            holdout_size: None,
            init_p2: None,
            max_pair_trials: default_max_pair_trials(),
            c1: GAP_C1,
            c2: GAP_C2,
            dedup_dist: None,
            radius_from_truth: true,
            steps: default_steps(),
            eta_scale: ETA_SCALE,
            samples_per_step: None,
            encoder: default_encoder(),
            resample: default_resample(),
            renormalize: false,
            p_grid,
            rho_grid,
            trials: 1,
            tau: None,
            master_seed: 0,
            record_time: true,
            write_traces: false,
        }
    }

    pub fn from_toml(text: &str) -> Result<Self, HarnessError> {
        toml::from_str(text).map_err(|e| HarnessError::Parse(e.to_string()))
    }

    pub fn load(path: &Path) -> Result<Self, HarnessError> {
        let text = fs::read_to_string(path)?;
        Self::from_toml(&text)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }

    pub fn tau(&self) -> f64 {
        self.tau.unwrap_or(6.0 * self.n as f64 / 256.0)
    }

    pub fn holdout(&self) -> usize {
        self.holdout_size.unwrap_or(20 * self.m)
    }

    pub fn model(&self, rho: f64) -> ModelConfig {
        ModelConfig {
            n: self.n,
            m: self.m,
            k: self.k,
            rho,
            code_dist: self.code_dist,
            c: self.c,
        }
    }

    /// Init settings for one cell. `truth_norm` is `‖A*‖` when the radius
    /// comes from ground truth.
    pub fn init(&self, model: &ModelConfig, truth_norm: Option<f64>) -> InitConfig {
        let mut cfg = InitConfig::with_constants(model, self.holdout(), self.max_pair_trials, self.c1, self.c2);
        cfg.p2 = self.init_p2;
        if let Some(d) = self.dedup_dist {
            cfg.dedup_dist = d;
        }
        if let (true, Some(norm)) = (self.radius_from_truth, truth_norm) {
            cfg.radius = 2.0 * norm;
        }
        cfg
    }

    pub fn descent(&self, model: &ModelConfig, p: usize) -> DescentConfig {
        DescentConfig {
            eta: eta_with_scale(self.eta_scale, model.m, model.k, model.rho),
            steps: self.steps,
            encoder: self.encoder,
            samples_per_step: self.samples_per_step.unwrap_or(p),
            resample: self.resample,
            renormalize: self.renormalize,
        }
    }

    pub fn validate(&self) -> Result<(), HarnessError> {
        let bad = |msg: String| Err(HarnessError::InvalidConfig(msg));
        if self.trials == 0 {
            return bad("trials must be >= 1".into());
        }
        if self.p_grid.is_empty() || self.rho_grid.is_empty() {
            return bad("p_grid and rho_grid must be nonempty".into());
        }
        if let Some(p) = self.p_grid.iter().find(|p| **p == 0) {
            return bad(format!("p must be >= 1, got {p}"));
        }
        if !(self.tau() > 0.0) {
            return bad(format!("tau must be positive, got {}", self.tau()));
        }
        if !(self.eta_scale >= 0.0 && self.eta_scale.is_finite()) {
            return bad(format!("eta_scale must be finite and >= 0, got {}", self.eta_scale));
        }
        for &rho in &self.rho_grid {
            let model = self.model(rho);
            model.validate()?;
            self.init(&model, None).validate()?;
        }
        Ok(())
    }

    /// Cells outside the regime where the initializer is proven to work.
    pub fn warnings(&self) -> Vec<String> {
        self.rho_grid
            .iter()
            .filter(|rho| !self.model(**rho).within_init_regime())
            .map(|rho| format!("rho = {rho}: 1/rho - 1 > k = {}, outside the proven initialization regime", self.k))
            .collect()
    }
}

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// `master_seed ⊕ hash(p, rho, trial)`.
pub fn trial_seed(master_seed: u64, p: usize, rho: f64, trial: usize) -> u64 {
    let h = splitmix64(splitmix64(splitmix64(p as u64) ^ rho.to_bits()) ^ trial as u64);
    master_seed ^ h
}

#[derive(Clone, Debug, PartialEq)]
pub struct TrialRecord {
    pub p: usize,
    pub rho: f64,
    pub trial: usize,
    pub success: bool,
    pub frob_err: f64,
    /// Largest column error after matching.
    pub delta: f64,
    pub seconds: f64,
    /// Why the trial failed before evaluation, if it did.
    pub failure: Option<String>,
    pub trace: Option<DescentTrace>,
}

/// Runs one full pipeline for cell `(p, rho)`.
pub fn run_trial(cfg: &ExperimentConfig, p: usize, rho: f64, trial: usize) -> Result<TrialRecord, HarnessError> {
    if p == 0 {
        return Err(HarnessError::InvalidConfig("p must be >= 1".into()));
    }
    let start = Instant::now();
    let model = cfg.model(rho);
    model.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(trial_seed(cfg.master_seed, p, rho, trial));
    let a_star = generate_dictionary(&model, &mut rng)?;
    let truth_norm = spectral_norm(&a_star, &PowerIteration::default())?;
    let init_cfg = cfg.init(&model, Some(truth_norm));
    init_cfg.validate()?;
    let fulls: Vec<Vec<f64>> = generate_full_samples(&model, &a_star, cfg.holdout(), &mut rng)?
        .into_iter()
        .map(|(y, _)| y)
        .collect();
    let (pool, codes): (Vec<_>, Vec<_>) = generate_batch(&model, &a_star, p, &mut rng)?.into_iter().unzip();

    let mut record = TrialRecord {
        p,
        rho,
        trial,
        success: false,
        frob_err: f64::NAN,
        delta: f64::NAN,
        seconds: 0.0,
        failure: None,
        trace: None,
    };
    let a0 = match run_init(&fulls, &pool, &init_cfg, rho, model.m, &mut rng) {
        Ok(out) => out.a0.expect("m >= 1"),
        Err(InitError::Incomplete { found, wanted, .. }) => {
            record.failure = Some(format!("init found {found} of {wanted} columns"));
            record.seconds = start.elapsed().as_secs_f64();
            return Ok(record);
        }
        Err(e) => return Err(e.into()),
    };
    let dcfg = cfg.descent(&model, p);
    let params = EncoderParams::from_model(&model, dcfg.encoder);
    let source = SampleSource::Pool {
        samples: &pool,
        truth: Some(&codes),
    };
    let (a_hat, trace) = match run_descent(&a0, &dcfg, &params, source, Some(&a_star), &mut rng) {
        Ok(out) => out,
        Err(e @ (DescentError::DataExhausted(_) | DescentError::InvalidConfig(_))) => {
            record.failure = Some(e.to_string());
            record.seconds = start.elapsed().as_secs_f64();
            return Ok(record);
        }
        Err(e) => return Err(e.into()),
    };
    let matching = hungarian_match(&a_hat, &a_star)?;
    record.success = recovery_success(&matching, cfg.tau());
    record.frob_err = matching.frob_err;
    record.delta = matching.max_err;
    record.trace = Some(trace);
    record.seconds = start.elapsed().as_secs_f64();
    Ok(record)
}

#[derive(Clone, Debug, PartialEq)]
pub struct AggregateRow {
    pub p: usize,
    pub rho: f64,
    pub trials: usize,
    pub successes: usize,
    pub recovery_rate: f64,
    /// Mean over trials that reached evaluation; NaN when none did.
    pub mean_frob_err: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct SweepResult {
    /// Grid order: `p` outermost, then `rho`, then trial.
    pub records: Vec<TrialRecord>,
    pub aggregates: Vec<AggregateRow>,
    pub warnings: Vec<String>,
}

impl SweepResult {
    pub fn rate(&self, p: usize, rho: f64) -> Option<f64> {
        self.aggregates
            .iter()
            .find(|a| a.p == p && a.rho == rho)
            .map(|a| a.recovery_rate)
    }
}

/// Aggregates per `(p, rho)` cell in order of first appearance.
pub fn aggregate(records: &[TrialRecord]) -> Vec<AggregateRow> {
    let mut cells: Vec<(usize, f64)> = Vec::new();
    for r in records {
        if !cells.iter().any(|(p, rho)| *p == r.p && rho.to_bits() == r.rho.to_bits()) {
            cells.push((r.p, r.rho));
        }
    }
    cells
        .into_iter()
        .map(|(p, rho)| {
            let cell: Vec<&TrialRecord> = records
                .iter()
                .filter(|r| r.p == p && r.rho.to_bits() == rho.to_bits())
                .collect();
            let successes = cell.iter().filter(|r| r.success).count();
            let errs: Vec<f64> = cell.iter().map(|r| r.frob_err).filter(|e| e.is_finite()).collect();
            let mean_frob_err = if errs.is_empty() {
                f64::NAN
            } else {
                errs.iter().sum::<f64>() / errs.len() as f64
            };
            AggregateRow {
                p,
                rho,
                trials: cell.len(),
                successes,
                recovery_rate: successes as f64 / cell.len() as f64,
                mean_frob_err,
            }
        })
        .collect()
}

/// Runs every `(p, rho, trial)` job. A failing trial is recorded and the
/// sweep continues; only configuration errors abort.
pub fn run_sweep(cfg: &ExperimentConfig) -> Result<SweepResult, HarnessError> {
    cfg.validate()?;
    let mut jobs = Vec::new();
    for &p in &cfg.p_grid {
        for &rho in &cfg.rho_grid {
            for trial in 0..cfg.trials {
                jobs.push((p, rho, trial));
            }
        }
    }
    let records: Vec<TrialRecord> = par::map(&jobs, |&(p, rho, trial)| {
        run_trial(cfg, p, rho, trial).unwrap_or_else(|e| TrialRecord {
            p,
            rho,
            trial,
            success: false,
            frob_err: f64::NAN,
            delta: f64::NAN,
            seconds: 0.0,
            failure: Some(e.to_string()),
            trace: None,
        })
    });
    let records: Vec<TrialRecord> = records
        .into_iter()
        .map(|mut r| {
            if !cfg.record_time {
                r.seconds = 0.0;
            }
            r
        })
        .collect();
    Ok(SweepResult {
        aggregates: aggregate(&records),
        records,
        warnings: cfg.warnings(),
    })
}

pub fn write_sweep_csv<W: Write>(records: &[TrialRecord], mut w: W) -> std::io::Result<()> {
    writeln!(w, "p,rho,trial,success,frob_err,delta,seconds")?;
    for r in records {
        writeln!(
            w,
            "{},{},{},{},{},{},{}",
            r.p, r.rho, r.trial, r.success as u8, r.frob_err, r.delta, r.seconds
        )?;
    }
    Ok(())
}

pub fn write_aggregate_csv<W: Write>(rows: &[AggregateRow], mut w: W) -> std::io::Result<()> {
    writeln!(w, "p,rho,trials,successes,recovery_rate,mean_frob_err")?;
    for a in rows {
        writeln!(
            w,
            "{},{},{},{},{},{}",
            a.p, a.rho, a.trials, a.successes, a.recovery_rate, a.mean_frob_err
        )?;
    }
    Ok(())
}

/// Parses `sweep.csv` back into records (no traces, no failure reasons).
pub fn read_sweep_csv(text: &str) -> Result<Vec<TrialRecord>, HarnessError> {
    let mut lines = text.lines();
    if lines.next() != Some("p,rho,trial,success,frob_err,delta,seconds") {
        return Err(HarnessError::Parse("unexpected sweep.csv header".into()));
    }
    lines
        .filter(|l| !l.is_empty())
        .map(|line| {
            let f: Vec<&str> = line.split(',').collect();
            if f.len() != 7 {
                return Err(HarnessError::Parse(format!("bad row: {line}")));
            }
            let num = |s: &str| s.parse::<f64>().map_err(|e| HarnessError::Parse(format!("{s}: {e}")));
            let int = |s: &str| s.parse::<usize>().map_err(|e| HarnessError::Parse(format!("{s}: {e}")));
            Ok(TrialRecord {
                p: int(f[0])?,
                rho: num(f[1])?,
                trial: int(f[2])?,
                success: f[3] == "1",
                frob_err: num(f[4])?,
                delta: num(f[5])?,
                seconds: num(f[6])?,
                failure: None,
                trace: None,
            })
        })
        .collect()
}

/// Writes `sweep.csv`, `aggregate.csv`, and per-trial traces when enabled.
pub fn write_outputs(result: &SweepResult, cfg: &ExperimentConfig, dir: &Path) -> Result<(), HarnessError> {
    fs::create_dir_all(dir)?;
    let mut sweep = Vec::new();
    write_sweep_csv(&result.records, &mut sweep)?;
    fs::write(dir.join("sweep.csv"), sweep)?;
    let mut agg = Vec::new();
    write_aggregate_csv(&result.aggregates, &mut agg)?;
    fs::write(dir.join("aggregate.csv"), agg)?;
    if cfg.write_traces {
        for r in &result.records {
            if let Some(trace) = &r.trace {
                let name = format!("trace_p{}_rho{}_{}.csv", r.p, r.rho, r.trial);
                let mut buf = Vec::new();
                trace.write_csv(&mut buf)?;
                fs::write(dir.join(name), buf)?;
            }
        }
    }
    Ok(())
}
