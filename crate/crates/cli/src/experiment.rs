//! Monte Carlo sweeps over `(n, alpha, seed)`.

use std::io::Write;
use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use perceptron::stats::{tail_checks, TailCheck};
use perceptron::{sample_with_rows, solve, GenConfig, ModelKind, PsiVariant, Schedule, StartPolicy};

use crate::{CliError, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum PolicyKind {
    AllPlus,
    Random,
}

impl PolicyKind {
    pub fn policy(self, seed: u64) -> StartPolicy {
        match self {
            PolicyKind::AllPlus => StartPolicy::AllPlus,
            PolicyKind::Random => StartPolicy::SeededRandom(seed),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentConfig {
    pub model: ModelKind,
    pub kappa: f64,
    pub ns: Vec<usize>,
    pub alphas: Vec<f64>,
    pub seeds: u64,
    pub base_seed: u64,
    pub policy: PolicyKind,
    pub psi: PsiVariant,
    /// Drop one row when `⌊αn⌋` is even.
    pub odd_m: bool,
}

impl ExperimentConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |msg: &str| Err(CliError::Core(perceptron::Error::InvalidConfig(msg.into())));
        if self.ns.is_empty() {
            return bad("n list is empty");
        }
        if self.alphas.is_empty() {
            return bad("alpha list is empty");
        }
        if self.seeds == 0 {
            return bad("seed count must be at least 1");
        }
        Ok(())
    }

    fn trials(&self) -> Vec<(usize, usize, u64)> {
        let mut out = Vec::new();
        for ni in 0..self.ns.len() {
            for ai in 0..self.alphas.len() {
                for s in 0..self.seeds {
                    out.push((ni, ai, self.base_seed + s));
                }
            }
        }
        out
    }
}

/// One solve. Fields after `status` are empty when the trial could not run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrialRow {
    pub seed: u64,
    pub n: usize,
    pub alpha: f64,
    pub kappa: f64,
    pub model: ModelKind,
    pub psi_variant: String,
    pub m: usize,
    pub m_adjusted: bool,
    pub status: String,
    pub success: Option<bool>,
    pub rounds: Option<usize>,
    pub violated_rows: Option<usize>,
    pub solve_ms: Option<f64>,
}

/// One tail-bound comparison with its trial's provenance.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TailRow {
    pub seed: u64,
    pub n: usize,
    pub alpha: f64,
    pub kappa: f64,
    pub model: ModelKind,
    pub psi_variant: String,
    pub k: usize,
    pub eta: f64,
    pub empirical: f64,
    pub bound: f64,
    pub cap: f64,
}

#[derive(Debug, Clone, Default)]
pub struct ExperimentResult {
    pub trials: Vec<TrialRow>,
    pub tails: Vec<TailRow>,
}

fn run_trial(cfg: &ExperimentConfig, n: usize, alpha: f64, seed: u64) -> (TrialRow, Vec<TailRow>) {
    let rows = GenConfig { model: cfg.model, n, alpha, kappa: cfg.kappa, seed }.rows();
    let m_adjusted = cfg.odd_m && rows.is_multiple_of(2) && rows > 1;
    let m = if m_adjusted { rows - 1 } else { rows };
    let mut row = TrialRow {
        seed,
        n,
        alpha,
        kappa: cfg.kappa,
        model: cfg.model,
        psi_variant: cfg.psi.as_str().to_string(),
        m,
        m_adjusted,
        status: "ok".into(),
        success: None,
        rounds: None,
        violated_rows: None,
        solve_ms: None,
    };
    let attempt = || -> perceptron::Result<(perceptron::SolveOutcome, Vec<TailCheck>, usize, f64)> {
        let inst = sample_with_rows(cfg.model, m, n, cfg.kappa, seed)?;
        let sched = Schedule::build(cfg.model, n, m, cfg.kappa, cfg.psi)?;
        let t = Instant::now();
        let out = solve(&inst, &sched, &cfg.policy.policy(seed))?;
        let ms = t.elapsed().as_secs_f64() * 1e3;
        let final_sums = out.round_sums.last().expect("round 0 is always recorded");
        let violated =
            final_sums.iter().filter(|&&s| !perceptron::model::row_satisfied(cfg.model, n, s, cfg.kappa)).count();
        let tails = tail_checks(&sched, &out.round_sums)?;
        Ok((out, tails, violated, ms))
    };
    match attempt() {
        Ok((out, tails, violated, ms)) => {
            row.success = Some(out.success);
            row.rounds = Some(out.rounds_executed);
            row.violated_rows = Some(violated);
            row.solve_ms = Some(ms);
            let tails = tails
                .into_iter()
                .map(|c| TailRow {
                    seed,
                    n,
                    alpha,
                    kappa: cfg.kappa,
                    model: cfg.model,
                    psi_variant: row.psi_variant.clone(),
                    k: c.k,
                    eta: c.eta,
                    empirical: c.empirical,
                    bound: c.bound,
                    cap: c.cap,
                })
                .collect();
            (row, tails)
        }
        Err(e) => {
            row.status = e.name().to_string();
            (row, Vec::new())
        }
    }
}

type Keyed = ((usize, usize, u64), TrialRow, Vec<TailRow>);

/// Runs every trial on the current rayon pool; rows come back sorted by `(n, alpha, seed)`.
pub fn run(cfg: &ExperimentConfig) -> Result<ExperimentResult> {
    cfg.validate()?;
    let mut results: Vec<Keyed> = cfg
        .trials()
        .into_par_iter()
        .map(|(ni, ai, seed)| {
            let (row, tails) = run_trial(cfg, cfg.ns[ni], cfg.alphas[ai], seed);
            ((ni, ai, seed), row, tails)
        })
        .collect();
    results.sort_by(|a, b| {
        let (x, y) = (&a.1, &b.1);
        x.n.cmp(&y.n).then(x.alpha.total_cmp(&y.alpha)).then(x.seed.cmp(&y.seed)).then(a.0.cmp(&b.0))
    });
    let mut out = ExperimentResult::default();
    for (_, row, tails) in results {
        out.trials.push(row);
        out.tails.extend(tails);
    }
    Ok(out)
}

pub fn write_csv<T: Serialize, W: Write>(rows: &[T], header: &[&str], w: W) -> Result<()> {
    let mut wtr = csv::WriterBuilder::new().has_headers(false).from_writer(w);
    wtr.write_record(header)?;
    for r in rows {
        wtr.serialize(r)?;
    }
    wtr.flush().map_err(|source| CliError::Io { path: "<csv>".into(), source })?;
    Ok(())
}

pub const TRIAL_HEADER: [&str; 13] = [
    "seed",
    "n",
    "alpha",
    "kappa",
    "model",
    "psi_variant",
    "m",
    "m_adjusted",
    "status",
    "success",
    "rounds",
    "violated_rows",
    "solve_ms",
];

pub const TAIL_HEADER: [&str; 11] =
    ["seed", "n", "alpha", "kappa", "model", "psi_variant", "k", "eta", "empirical", "bound", "cap"];

/// Success rate and median solve time per `(n, alpha)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Summary {
    pub n: usize,
    pub alpha: f64,
    pub trials: usize,
    pub successes: usize,
    pub success_rate: f64,
    pub median_ms: Option<f64>,
}

pub fn summarize(rows: &[TrialRow]) -> Vec<Summary> {
    let mut out: Vec<Summary> = Vec::new();
    for group in rows.chunk_by(|a, b| a.n == b.n && a.alpha == b.alpha) {
        let successes = group.iter().filter(|r| r.success == Some(true)).count();
        let mut times: Vec<f64> = group.iter().filter_map(|r| r.solve_ms).collect();
        times.sort_by(f64::total_cmp);
        out.push(Summary {
            n: group[0].n,
            alpha: group[0].alpha,
            trials: group.len(),
            successes,
            success_rate: successes as f64 / group.len() as f64,
            median_ms: times.get(times.len() / 2).copied(),
        });
    }
    out
}
