use std::time::{Duration, Instant};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{gen_noisy_semi, gen_nonnegative, gen_semi_nonneg, quality_from_errors, NoiseSpec};
use crate::cd::{cd_semi_nmf_with, CdOptions};
use crate::dense::{singular_values, tail_norm, DenseMatrix, RngSeed, DEFAULT_KMEANS_MAX_ITER};
use crate::error::{Error, Result};
use crate::halfspace::DEFAULT_REL_PREC;
use crate::init::{initialize, InitKind, InitStrategy};

/// Relative slack used when flagging non-monotone traces.
pub const MONOTONE_SLACK: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum Generator {
    /// `rand(m, n)`.
    Nonneg,
    /// `randn(m, k) · rand(k, n)`.
    Semi { k: usize },
    /// `randn(m, r) · rand(r, n)` plus noise of level δ.
    Noisy { delta: NoiseSpec },
}

impl Generator {
    pub fn name(&self) -> &'static str {
        match self {
            Generator::Nonneg => "nonneg",
            Generator::Semi { .. } => "semi",
            Generator::Noisy { .. } => "noisy",
        }
    }

    pub fn generate(&self, m: usize, n: usize, r: usize, seed: RngSeed) -> Result<DenseMatrix> {
        match *self {
            Generator::Nonneg => gen_nonnegative(m, n, seed),
            Generator::Semi { k } => gen_semi_nonneg(m, n, k, seed),
            Generator::Noisy { delta } => gen_noisy_semi(m, n, r, delta, seed),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentConfig {
    pub name: String,
    pub m: usize,
    pub n: usize,
    pub r: usize,
    pub generator: Generator,
    pub strategies: Vec<InitKind>,
    /// CD iterations per run.
    pub max_iter: usize,
    /// Iterations at which the summary reports quality.
    pub checkpoints: Vec<usize>,
    /// Runs of each randomized strategy (RD, KM) per matrix; the best final
    /// error is kept. A2 and A3 are deterministic and run once.
    pub restarts: usize,
    pub kmeans_max_iter: usize,
    pub rel_prec: f64,
}

impl ExperimentConfig {
    pub fn new(name: impl Into<String>, m: usize, n: usize, r: usize, generator: Generator) -> Self {
        ExperimentConfig {
            name: name.into(),
            m,
            n,
            r,
            generator,
            strategies: InitKind::ALL.to_vec(),
            max_iter: 100,
            checkpoints: vec![10, 100],
            restarts: 1,
            kmeans_max_iter: DEFAULT_KMEANS_MAX_ITER,
            rel_prec: DEFAULT_REL_PREC,
        }
    }

    fn restarts_for(&self, kind: InitKind) -> usize {
        match kind {
            InitKind::Rd | InitKind::Km => self.restarts.max(1),
            InitKind::A2 | InitKind::A3 => 1,
        }
    }
}

/// One strategy on one generated matrix.
#[derive(Debug, Clone, Serialize)]
pub struct ExperimentRecord {
    pub config_index: usize,
    pub config: ExperimentConfig,
    pub trial: usize,
    pub strategy: InitKind,
    /// Seed of the generated matrix.
    pub seed: RngSeed,
    /// `errors[t]` is `‖M − UV‖_F` after `t` CD iterations.
    pub error_trace: Vec<f64>,
    pub quality_trace: Vec<f64>,
    pub final_quality: f64,
    pub final_error: f64,
    /// `‖M − M_r‖_F`.
    pub best_error: f64,
    /// `‖M − M_{r−1}‖_F`.
    pub best_error_prev: f64,
    pub input_norm: f64,
    pub epsilon_star: Option<f64>,
    pub monotone: bool,
    #[serde(skip)]
    pub wall_time: Duration,
    pub failure: Option<String>,
}

impl ExperimentRecord {
    /// Quality after `iteration` CD iterations, or the last recorded value when
    /// the run stopped earlier.
    pub fn quality_at(&self, iteration: usize) -> Option<f64> {
        self.quality_trace.get(iteration).or(self.quality_trace.last()).copied()
    }
}

/// Runs every config for `trials` matrices.
///
/// Each (config, trial) pair draws its matrix from
/// `master_seed.derive(config).derive(trial)`, so the records depend only on
/// the arguments and not on `jobs` or scheduling. `jobs = 0` uses the rayon
/// default thread count. Records come back ordered by config, trial and the
/// config's strategy list.
pub fn run_experiment(
    configs: &[ExperimentConfig],
    trials: usize,
    master_seed: RngSeed,
    jobs: usize,
) -> Result<Vec<ExperimentRecord>> {
    if trials == 0 {
        return Err(Error::arg("trials must be >= 1"));
    }
    for c in configs {
        validate(c)?;
    }
    let tasks: Vec<(usize, usize)> =
        (0..configs.len()).flat_map(|c| (0..trials).map(move |t| (c, t))).collect();
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(jobs)
        .build()
        .map_err(|e| Error::numerical(format!("cannot start worker pool: {e}")))?;
    let per_task: Vec<Vec<ExperimentRecord>> = pool.install(|| {
        tasks
            .par_iter()
            .map(|&(c, t)| run_trial(c, &configs[c], t, master_seed.derive(c as u64).derive(t as u64)))
            .collect()
    });
    Ok(per_task.into_iter().flatten().collect())
}

fn validate(c: &ExperimentConfig) -> Result<()> {
    let q = c.m.min(c.n);
    let mut problems = Vec::new();
    if c.m == 0 || c.n == 0 {
        problems.push(format!("dimensions {}x{} must be >= 1", c.m, c.n));
    }
    if c.r == 0 || c.r > q {
        problems.push(format!("r = {} must lie in 1..=min(m, n) = {q}", c.r));
    }
    if let Generator::Semi { k } = c.generator {
        if k == 0 || k > q {
            problems.push(format!("k = {k} must lie in 1..=min(m, n) = {q}"));
        }
    }
    if c.max_iter == 0 {
        problems.push("max_iter must be >= 1".into());
    }
    if c.strategies.is_empty() {
        problems.push("no strategies".into());
    }
    for &s in &c.strategies {
        if c.r < s.min_rank() {
            problems.push(format!("strategy {s} needs r >= {}", s.min_rank()));
        }
    }
    if !(c.rel_prec > 0.0 && c.rel_prec < 1.0) {
        problems.push(format!("rel_prec = {} must lie in (0, 1)", c.rel_prec));
    }
    if problems.is_empty() {
        Ok(())
    } else {
        Err(Error::arg(format!("config '{}': {}", c.name, problems.join("; "))))
    }
}

fn run_trial(index: usize, config: &ExperimentConfig, trial: usize, seed: RngSeed) -> Vec<ExperimentRecord> {
    let blank = |strategy: InitKind| ExperimentRecord {
        config_index: index,
        config: config.clone(),
        trial,
        strategy,
        seed,
        error_trace: Vec::new(),
        quality_trace: Vec::new(),
        final_quality: f64::NAN,
        final_error: f64::NAN,
        best_error: f64::NAN,
        best_error_prev: f64::NAN,
        input_norm: f64::NAN,
        epsilon_star: None,
        monotone: true,
        wall_time: Duration::ZERO,
        failure: None,
    };

    let prepared = config
        .generator
        .generate(config.m, config.n, config.r, seed)
        .and_then(|m| singular_values(&m).map(|sv| (m, sv)));
    let (m, sv) = match prepared {
        Ok(p) => p,
        Err(e) => {
            return config
                .strategies
                .iter()
                .map(|&s| ExperimentRecord { failure: Some(e.to_string()), ..blank(s) })
                .collect();
        }
    };
    let best = tail_norm(&sv, config.r);
    let best_prev = tail_norm(&sv, config.r - 1);
    let m_norm = m.frobenius_norm();

    config
        .strategies
        .iter()
        .enumerate()
        .map(|(si, &kind)| {
            let mut rec = ExperimentRecord {
                best_error: best,
                best_error_prev: best_prev,
                input_norm: m_norm,
                ..blank(kind)
            };
            let start = Instant::now();
            let outcome = run_strategy(&m, config, kind, seed.derive(1000 + si as u64));
            rec.wall_time = start.elapsed();
            match outcome {
                Ok((errors, eps, monotone)) => {
                    rec.quality_trace = errors.iter().map(|&e| quality_from_errors(e, best, m_norm)).collect();
                    rec.final_error = *errors.last().unwrap_or(&f64::NAN);
                    rec.final_quality = *rec.quality_trace.last().unwrap_or(&f64::NAN);
                    rec.error_trace = errors;
                    rec.epsilon_star = eps;
                    rec.monotone = monotone;
                }
                Err(e) => rec.failure = Some(e.to_string()),
            }
            rec
        })
        .collect()
}

type StrategyOutcome = (Vec<f64>, Option<f64>, bool);

fn run_strategy(m: &DenseMatrix, config: &ExperimentConfig, kind: InitKind, seed: RngSeed) -> Result<StrategyOutcome> {
    let opts = CdOptions::new(config.max_iter);
    let mut best: Option<StrategyOutcome> = None;
    let mut all_monotone = true;
    for restart in 0..config.restarts_for(kind) {
        let strategy = InitStrategy {
            kind,
            seed: seed.derive(restart as u64),
            kmeans_max_iter: config.kmeans_max_iter,
            rel_prec: config.rel_prec,
        };
        let init = initialize(m, config.r, &strategy)?;
        let (_, trace) = cd_semi_nmf_with(m, &init.v0, &opts)?;
        all_monotone &= trace.is_monotone(MONOTONE_SLACK);
        let eps = init.bisection.map(|b| b.epsilon_star);
        let better = best.as_ref().is_none_or(|(e, _, _)| trace.final_error() < *e.last().unwrap());
        if better {
            best = Some((trace.errors, eps, true));
        }
    }
    let (errors, eps, _) = best.expect("at least one restart");
    Ok((errors, eps, all_monotone))
}
