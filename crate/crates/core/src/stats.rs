//! Empirical tail fractions of row sums, the inductive tail-bound evaluators,
//! and the SBP capacity formula.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::ModelKind;
use crate::schedule::{psi, Schedule};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TailSide {
    /// Fraction with `|S| ≥ η`.
    AbsGe,
    /// Fraction with `S ≤ η`.
    Le,
}

pub fn empirical_tail(row_sums: &[i64], eta: f64, side: TailSide) -> Result<f64> {
    if row_sums.is_empty() {
        return Err(Error::EmptyInput);
    }
    let hits = row_sums
        .iter()
        .filter(|&&s| match side {
            TailSide::AbsGe => (s.abs() as f64) >= eta,
            TailSide::Le => (s as f64) <= eta,
        })
        .count();
    Ok(hits as f64 / row_sums.len() as f64)
}

/// Location and scale parameters of the two Gaussian terms in the round-`k`
/// tail bound, plus the cap `m_{k+1}/m` it is compared against.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TailBoundParams {
    pub k: usize,
    pub mu_k1: f64,
    pub sigma_k1: f64,
    pub mu_k2: f64,
    pub sigma_k2: f64,
    pub cap: f64,
}

impl TailBoundParams {
    pub fn new(schedule: &Schedule, k: usize) -> Result<Self> {
        if k >= schedule.rounds {
            return Err(Error::OutOfRange(format!("round {k} outside [0, {})", schedule.rounds)));
        }
        let prev = schedule.threshold(k as i64 - 1);
        let mu_k1 = match schedule.model {
            ModelKind::Sbp => -prev,
            ModelKind::Abp => prev,
        };
        let sigma_k1 = (schedule.block_sizes[k] as f64).sqrt();
        let mu_k2: f64 = (1..=k)
            .map(|i| {
                schedule.block_sizes[i] as f64 * (2.0 / (std::f64::consts::PI * schedule.row_budgets[i] as f64)).sqrt()
            })
            .sum();
        let sigma_k2 = (schedule.block_sizes[..=k].iter().sum::<usize>() as f64).sqrt();
        if !(sigma_k1 > 0.0 && sigma_k2 > 0.0) {
            return Err(Error::OutOfRange(format!("round {k} has an empty block, bound undefined")));
        }
        Ok(TailBoundParams {
            k,
            mu_k1,
            sigma_k1,
            mu_k2,
            sigma_k2,
            cap: schedule.row_budgets[k + 1] as f64 / schedule.m as f64,
        })
    }
}

fn bound_terms(schedule: &Schedule, p: &TailBoundParams, x1: f64, x2: f64) -> f64 {
    let n_pow = (schedule.n as f64).powf(-0.1);
    let v = schedule.psi_variant;
    n_pow + psi(x1 / p.sigma_k1, v) + 1.5 * (1.0 + n_pow).powi(p.k as i32) * psi(x2 / p.sigma_k2, v)
}

/// Upper bound on the fraction of rows with `|S(0:k)| ≥ η` (SBP), `1 ≤ k ≤ R-1`, `η ≥ T_k`.
pub fn sbp_tail_bound(schedule: &Schedule, k: usize, eta: f64) -> Result<f64> {
    if schedule.model != ModelKind::Sbp {
        return Err(Error::InvalidInput("sbp_tail_bound needs an SBP schedule".into()));
    }
    if k == 0 || k >= schedule.rounds {
        return Err(Error::OutOfRange(format!("round {k} outside [1, {}]", schedule.rounds - 1)));
    }
    if eta < schedule.thresholds[k] {
        return Err(Error::OutOfRange(format!("eta {eta} below T_{k} = {}", schedule.thresholds[k])));
    }
    let p = TailBoundParams::new(schedule, k)?;
    Ok(2.0 * 3f64.powi(k as i32) * bound_terms(schedule, &p, eta + p.mu_k1, eta + p.mu_k2))
}

/// Upper bound on the fraction of rows with `S(0:k) ≤ η` (ABP), `0 ≤ k ≤ R-1`, `η ≤ T_k`.
pub fn abp_tail_bound(schedule: &Schedule, k: usize, eta: f64) -> Result<f64> {
    if schedule.model != ModelKind::Abp {
        return Err(Error::InvalidInput("abp_tail_bound needs an ABP schedule".into()));
    }
    if k >= schedule.rounds {
        return Err(Error::OutOfRange(format!("round {k} outside [0, {}]", schedule.rounds - 1)));
    }
    if eta > schedule.thresholds[k] {
        return Err(Error::OutOfRange(format!("eta {eta} above T_{k} = {}", schedule.thresholds[k])));
    }
    let p = TailBoundParams::new(schedule, k)?;
    Ok(3f64.powi(k as i32) * bound_terms(schedule, &p, -eta + p.mu_k1, -eta + p.mu_k2))
}

/// `P(|N| ≤ κ)` for a standard normal `N`.
pub fn prob_abs_normal_le(kappa: f64) -> f64 {
    libm::erf(kappa / std::f64::consts::SQRT_2)
}

/// SBP capacity `-ln 2 / ln P(|N| ≤ κ)`.
pub fn capacity_sbp(kappa: f64) -> Result<f64> {
    if kappa.is_nan() || kappa <= 0.0 {
        return Err(Error::OutOfRange(format!("capacity needs kappa > 0, got {kappa}")));
    }
    let p = prob_abs_normal_le(kappa);
    if p >= 1.0 {
        return Ok(f64::INFINITY);
    }
    Ok(-std::f64::consts::LN_2 / p.ln())
}

/// One row of a tail-bound check: empirical fraction vs bound vs cap.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TailCheck {
    pub k: usize,
    pub eta: f64,
    pub empirical: f64,
    pub bound: f64,
    pub cap: f64,
}

impl TailCheck {
    pub fn empirical_within_cap(&self) -> bool {
        self.empirical <= self.cap
    }

    pub fn bound_within_cap(&self) -> bool {
        self.bound <= self.cap
    }
}

/// Compares the empirical tail of `round_sums[k] = S(0:k)` with the bound at
/// `η = T_k` for every round where the bound is defined.
pub fn tail_checks(schedule: &Schedule, round_sums: &[Vec<i64>]) -> Result<Vec<TailCheck>> {
    let first = match schedule.model {
        ModelKind::Sbp => 1,
        ModelKind::Abp => 0,
    };
    let mut out = Vec::new();
    for (k, sums) in round_sums.iter().enumerate().take(schedule.rounds).skip(first) {
        let eta = schedule.thresholds[k];
        let (empirical, bound) = match schedule.model {
            ModelKind::Sbp => (empirical_tail(sums, eta, TailSide::AbsGe)?, sbp_tail_bound(schedule, k, eta)?),
            ModelKind::Abp => (empirical_tail(sums, eta, TailSide::Le)?, abp_tail_bound(schedule, k, eta)?),
        };
        let cap = schedule.row_budgets[k + 1] as f64 / schedule.m as f64;
        out.push(TailCheck { k, eta, empirical, bound, cap });
    }
    Ok(out)
}
