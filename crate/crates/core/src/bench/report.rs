//! CSV records and JSON summaries of experiment runs.
//!
//! CSV header (one row per record):
//!
//! ```text
//! config,name,generator,m,n,r,k,delta,strategy,trial,seed,epsilon_star,
//! quality_0,quality_<c>...,final_quality,final_error,best_error,iterations,monotone,failure
//! ```
//!
//! `quality_<c>` columns follow the sorted union of all configs' checkpoints.
//! `k` is empty except for the `semi` generator and `delta` except for
//! `noisy`. A quality of `inf` marks a run whose best rank-`r` error is zero
//! while its own error is not. With timings enabled a trailing `wall_time_ms`
//! column is added; it is the only nondeterministic field.

use std::collections::BTreeSet;
use std::io::{self, Write};

use serde::Serialize;

use super::runner::{ExperimentRecord, Generator};
use crate::dense::RngSeed;
use crate::init::InitKind;

/// Quality threshold counted in the summary.
pub const NEAR_OPTIMAL_QUALITY: f64 = 1e-2;

fn fmt_f(x: f64) -> String {
    if x.is_nan() { String::new() } else { format!("{x:e}") }
}

fn checkpoints(records: &[ExperimentRecord]) -> Vec<usize> {
    let set: BTreeSet<usize> = records.iter().flat_map(|r| r.config.checkpoints.iter().copied()).collect();
    set.into_iter().filter(|&c| c != 0).collect()
}

pub fn write_csv<W: Write>(records: &[ExperimentRecord], w: W, timings: bool) -> io::Result<()> {
    let mut w = csv::Writer::from_writer(w);
    let cps = checkpoints(records);
    let mut header: Vec<String> = "config,name,generator,m,n,r,k,delta,strategy,trial,seed,epsilon_star,quality_0"
        .split(',')
        .map(String::from)
        .collect();
    header.extend(cps.iter().map(|c| format!("quality_{c}")));
    header.extend(
        ["final_quality", "final_error", "best_error", "iterations", "monotone", "failure"].map(String::from),
    );
    if timings {
        header.push("wall_time_ms".into());
    }
    w.write_record(&header)?;

    for rec in records {
        let c = &rec.config;
        let (k, delta) = match c.generator {
            Generator::Nonneg => (String::new(), String::new()),
            Generator::Semi { k } => (k.to_string(), String::new()),
            Generator::Noisy { delta } => (String::new(), delta.to_string()),
        };
        let mut row = vec![
            rec.config_index.to_string(),
            c.name.clone(),
            c.generator.name().to_string(),
            c.m.to_string(),
            c.n.to_string(),
            c.r.to_string(),
            k,
            delta,
            rec.strategy.to_string(),
            rec.trial.to_string(),
            rec.seed.0.to_string(),
            rec.epsilon_star.map(fmt_f).unwrap_or_default(),
            rec.quality_trace.first().copied().map(fmt_f).unwrap_or_default(),
        ];
        row.extend(cps.iter().map(|&cp| rec.quality_at(cp).map(fmt_f).unwrap_or_default()));
        row.extend([
            fmt_f(rec.final_quality),
            fmt_f(rec.final_error),
            fmt_f(rec.best_error),
            rec.error_trace.len().saturating_sub(1).to_string(),
            rec.monotone.to_string(),
            rec.failure.clone().unwrap_or_default(),
        ]);
        if timings {
            row.push(format!("{:.3}", rec.wall_time.as_secs_f64() * 1e3));
        }
        w.write_record(&row)?;
    }
    w.flush()
}

/// Linear-interpolation quantiles of a sample. Infinite values sort last and
/// serialize as `null`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Quantiles {
    pub count: usize,
    pub min: f64,
    pub q25: f64,
    pub median: f64,
    pub q75: f64,
    pub max: f64,
    pub mean: f64,
}

impl Quantiles {
    pub fn of(values: &[f64]) -> Option<Quantiles> {
        let mut v: Vec<f64> = values.iter().copied().filter(|x| !x.is_nan()).collect();
        if v.is_empty() {
            return None;
        }
        v.sort_by(f64::total_cmp);
        let q = |p: f64| {
            let pos = p * (v.len() - 1) as f64;
            let lo = pos.floor() as usize;
            let hi = pos.ceil() as usize;
            if lo == hi || v[lo] == v[hi] { v[lo] } else { v[lo] + (pos - lo as f64) * (v[hi] - v[lo]) }
        };
        Some(Quantiles {
            count: v.len(),
            min: v[0],
            q25: q(0.25),
            median: q(0.5),
            q75: q(0.75),
            max: v[v.len() - 1],
            mean: v.iter().sum::<f64>() / v.len() as f64,
        })
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct CheckpointSummary {
    pub iteration: usize,
    pub quality: Option<Quantiles>,
}

#[derive(Debug, Clone, Serialize)]
pub struct StrategySummary {
    pub strategy: InitKind,
    pub runs: usize,
    pub failures: usize,
    pub non_monotone: usize,
    pub checkpoints: Vec<CheckpointSummary>,
    pub final_quality: Option<Quantiles>,
    /// Runs with final quality at most [`NEAR_OPTIMAL_QUALITY`].
    pub near_optimal: usize,
    /// A3 only: runs with `ε* = 0`.
    pub epsilon_zero: Option<usize>,
}

#[derive(Debug, Clone, Serialize)]
pub struct ConfigSummary {
    pub index: usize,
    pub name: String,
    pub generator: Generator,
    pub m: usize,
    pub n: usize,
    pub r: usize,
    pub strategies: Vec<StrategySummary>,
}

#[derive(Debug, Clone, Serialize)]
pub struct Summary {
    pub trials: usize,
    pub master_seed: RngSeed,
    pub near_optimal_threshold: f64,
    pub quality_note: &'static str,
    pub configs: Vec<ConfigSummary>,
}

impl Summary {
    pub fn config(&self, name: &str) -> Option<&ConfigSummary> {
        self.configs.iter().find(|c| c.name == name)
    }
}

impl ConfigSummary {
    pub fn strategy(&self, kind: InitKind) -> Option<&StrategySummary> {
        self.strategies.iter().find(|s| s.strategy == kind)
    }
}

impl StrategySummary {
    pub fn at(&self, iteration: usize) -> Option<&Quantiles> {
        self.checkpoints.iter().find(|c| c.iteration == iteration)?.quality.as_ref()
    }
}

/// Per-config, per-strategy quality quantiles at each checkpoint.
pub fn summarize(records: &[ExperimentRecord], trials: usize, master_seed: RngSeed) -> Summary {
    let mut configs: Vec<ConfigSummary> = Vec::new();
    let mut indices: Vec<usize> = records.iter().map(|r| r.config_index).collect();
    indices.dedup();
    for ci in indices {
        let recs: Vec<&ExperimentRecord> = records.iter().filter(|r| r.config_index == ci).collect();
        let cfg = &recs[0].config;
        let strategies = cfg
            .strategies
            .iter()
            .map(|&kind| {
                let runs: Vec<&&ExperimentRecord> = recs.iter().filter(|r| r.strategy == kind).collect();
                let ok: Vec<&&ExperimentRecord> = runs.iter().copied().filter(|r| r.failure.is_none()).collect();
                let finals: Vec<f64> = ok.iter().map(|r| r.final_quality).collect();
                StrategySummary {
                    strategy: kind,
                    runs: runs.len(),
                    failures: runs.len() - ok.len(),
                    non_monotone: ok.iter().filter(|r| !r.monotone).count(),
                    checkpoints: cfg
                        .checkpoints
                        .iter()
                        .map(|&it| CheckpointSummary {
                            iteration: it,
                            quality: Quantiles::of(&ok.iter().filter_map(|r| r.quality_at(it)).collect::<Vec<_>>()),
                        })
                        .collect(),
                    final_quality: Quantiles::of(&finals),
                    near_optimal: finals.iter().filter(|&&q| q <= NEAR_OPTIMAL_QUALITY).count(),
                    epsilon_zero: (kind == InitKind::A3)
                        .then(|| ok.iter().filter(|r| r.epsilon_star == Some(0.0)).count()),
                }
            })
            .collect();
        configs.push(ConfigSummary {
            index: ci,
            name: cfg.name.clone(),
            generator: cfg.generator,
            m: cfg.m,
            n: cfg.n,
            r: cfg.r,
            strategies,
        });
    }
    Summary {
        trials,
        master_seed,
        near_optimal_threshold: NEAR_OPTIMAL_QUALITY,
        quality_note: "quality = 100*(err/best_err_r - 1); when best_err_r <= 1e-12*||M|| it is 0 for err <= 1e-10*||M|| and infinite (null) otherwise",
        configs,
    }
}
