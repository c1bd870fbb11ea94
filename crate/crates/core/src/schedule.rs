//! Round parameters of the multiscale majority algorithm.
//!
//! Columns are split into blocks `n_0, n_1, …, n_R`. Block 0 is assigned
//! freely, block `i ≥ 1` is filled by round `i` using the `m_i` rows selected
//! from the partial sums over blocks `0..i`. Thresholds `T_i` are not used by
//! the algorithm itself; they parameterise the tail-bound checks.

use std::f64::consts::{PI, SQRT_2};
use std::fmt::Write as _;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::ModelKind;

/// Which Gaussian-type tail to use for `Ψ`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PsiVariant {
    /// `∫_x^∞ exp(-u²)/√(2π) du = erfc(x) / (2√2)`.
    Literal,
    /// Standard normal upper tail `erfc(x/√2) / 2`.
    #[default]
    StdNormalTail,
}

impl PsiVariant {
    pub fn as_str(&self) -> &'static str {
        match self {
            PsiVariant::Literal => "literal",
            PsiVariant::StdNormalTail => "std",
        }
    }
}

impl FromStr for PsiVariant {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "literal" => Ok(PsiVariant::Literal),
            "std" | "std_normal_tail" => Ok(PsiVariant::StdNormalTail),
            other => Err(Error::InvalidInput(format!("unknown psi variant {other:?}"))),
        }
    }
}

pub fn psi(x: f64, variant: PsiVariant) -> f64 {
    match variant {
        PsiVariant::Literal => libm::erfc(x) / (2.0 * SQRT_2),
        PsiVariant::StdNormalTail => 0.5 * libm::erfc(x / SQRT_2),
    }
}

/// Exponent in the round-count rule `m_R / m ≤ n^{-0.01}`.
const ROUND_EXPONENT: f64 = 0.01;
/// Exponent of the last-round block inflation `n^{0.002}`.
const LAST_BLOCK_EXPONENT: f64 = 0.002;
/// Rounds beyond this are treated as a failure to terminate.
const MAX_ROUNDS: usize = 64;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Schedule {
    pub model: ModelKind,
    pub n: usize,
    pub m: usize,
    pub kappa: f64,
    pub psi_variant: PsiVariant,
    /// Index of the last round, `R`.
    pub rounds: usize,
    pub eps0: f64,
    pub c_kappa: f64,
    pub alpha0: f64,
    /// `m_0 = m - Σ_{i≥1} m_i`; negative whenever `R ≥ 2` because `m_1 = m`.
    pub m0: i64,
    /// `m_i` for `i = 0..=R`; entry 0 is unused and holds 0.
    pub row_budgets: Vec<usize>,
    /// `n_i` for `i = 0..=R`.
    pub block_sizes: Vec<usize>,
    /// `T_i` for `i = 0..R`, absolute (the `√n` factor included).
    pub thresholds: Vec<f64>,
    /// `(λ_i, λ̄_i)` for `i = 0..=R`; entry 0 is NaN.
    pub lambdas: Vec<(f64, f64)>,
    /// `Σ_{ℓ<i} n_ℓ` for `i = 0..=R+1`.
    pub col_offsets: Vec<usize>,
}

fn lambda_pair(mi: usize) -> (f64, f64) {
    if mi == 0 {
        return (f64::NAN, f64::NAN);
    }
    let mf = mi as f64;
    let base = (2.0 / (PI * mf)).sqrt();
    let dev = mf.powf(-1.0 / 8.0);
    ((1.0 - dev) * base, (1.0 + dev) * base)
}

fn odd_floor(x: f64) -> usize {
    2 * (x / 2.0).floor() as usize + 1
}

impl Schedule {
    /// Computes the schedule for an `m × n` instance directly from the round
    /// formulas. Fails instead of clamping when the blocks do not fit.
    pub fn build(model: ModelKind, n: usize, m: usize, kappa: f64, psi_variant: PsiVariant) -> Result<Schedule> {
        if n == 0 || m == 0 {
            return Err(Error::InvalidConfig(format!("need n ≥ 1 and m ≥ 1, got n={n}, m={m}")));
        }
        if !kappa.is_finite() || (model == ModelKind::Sbp && kappa <= 0.0) {
            return Err(Error::InvalidConfig(format!("invalid kappa {kappa} for {model}")));
        }
        let nf = n as f64;
        let mf = m as f64;
        let (eps0, c_kappa, alpha0) = model_constants(model, kappa);

        let budget = |i: usize| -> usize {
            let arg = match model {
                ModelKind::Sbp => i as f64 * kappa / 4.0 + 5.0 / kappa + 5.0,
                ModelKind::Abp => i as f64 + 5.0,
            };
            odd_floor(psi(arg, psi_variant) * mf)
        };

        let cutoff = nf.powf(-ROUND_EXPONENT);
        let rounds = (2..=MAX_ROUNDS).find(|&i| budget(i) as f64 / mf <= cutoff).ok_or_else(|| {
            Error::InfeasibleSchedule(format!("no round count R ≤ {MAX_ROUNDS} with m_R/m ≤ n^-0.01 (m={m}, n={n})"))
        })?;

        let mut row_budgets = vec![0usize; rounds + 1];
        let mut block_sizes = vec![0usize; rounds + 1];
        row_budgets[1] = m;
        block_sizes[1] = match model {
            ModelKind::Sbp => odd_floor(c_kappa * (PI * mf * nf / 2.0).sqrt()),
            ModelKind::Abp => (c_kappa * (PI * mf * nf / 2.0).sqrt()).floor() as usize,
        };
        for i in 2..=rounds {
            let mi = budget(i);
            let mif = mi as f64;
            row_budgets[i] = mi;
            block_sizes[i] = match (model, i == rounds) {
                (ModelKind::Sbp, false) => 2 * ((kappa / 4.0) * (PI * mif * nf / 2.0).sqrt()).floor() as usize,
                (ModelKind::Sbp, true) => {
                    (nf.powf(LAST_BLOCK_EXPONENT) * kappa / 2.0 * (PI * mif * nf / 2.0).sqrt()).floor() as usize
                }
                (ModelKind::Abp, false) => (2.0 * PI * mif * nf).sqrt().floor() as usize,
                (ModelKind::Abp, true) => {
                    (nf.powf(LAST_BLOCK_EXPONENT) * (2.0 * PI * mif * nf).sqrt()).floor() as usize
                }
            };
        }
        let used: usize = block_sizes[1..].iter().sum();
        if used > n {
            return Err(Error::InfeasibleSchedule(format!(
                "blocks n_1..n_R need {used} columns but n = {n} (n_1 = {})",
                block_sizes[1]
            )));
        }
        block_sizes[0] = n - used;

        Schedule::assemble(model, n, m, kappa, psi_variant, eps0, c_kappa, alpha0, row_budgets, block_sizes)
    }

    /// A schedule with explicit block sizes and row budgets, for instances too
    /// small for the closed-form sizes. `block_sizes` lists `n_0..=n_R` and
    /// `row_budgets` lists `m_1..=m_R`.
    pub fn from_blocks(
        model: ModelKind,
        m: usize,
        kappa: f64,
        block_sizes: Vec<usize>,
        row_budgets: Vec<usize>,
        psi_variant: PsiVariant,
    ) -> Result<Schedule> {
        if block_sizes.len() < 3 {
            return Err(Error::InfeasibleSchedule("need at least rounds 0, 1 and R ≥ 2".into()));
        }
        let rounds = block_sizes.len() - 1;
        if row_budgets.len() != rounds {
            return Err(Error::InvalidConfig(format!(
                "expected {rounds} row budgets (m_1..m_R), got {}",
                row_budgets.len()
            )));
        }
        if let Some(&bad) = row_budgets.iter().find(|&&b| b == 0 || b > m) {
            return Err(Error::InvalidConfig(format!("row budget {bad} outside 1..={m}")));
        }
        let n: usize = block_sizes.iter().sum();
        if n == 0 || m == 0 {
            return Err(Error::InvalidConfig("empty schedule".into()));
        }
        if !kappa.is_finite() || (model == ModelKind::Sbp && kappa <= 0.0) {
            return Err(Error::InvalidConfig(format!("invalid kappa {kappa} for {model}")));
        }
        let (eps0, c_kappa, alpha0) = model_constants(model, kappa);
        let mut budgets = vec![0];
        budgets.extend(row_budgets);
        Schedule::assemble(model, n, m, kappa, psi_variant, eps0, c_kappa, alpha0, budgets, block_sizes)
    }

    #[allow(clippy::too_many_arguments)]
    fn assemble(
        model: ModelKind,
        n: usize,
        m: usize,
        kappa: f64,
        psi_variant: PsiVariant,
        eps0: f64,
        c_kappa: f64,
        alpha0: f64,
        row_budgets: Vec<usize>,
        block_sizes: Vec<usize>,
    ) -> Result<Schedule> {
        let rounds = block_sizes.len() - 1;
        let mut col_offsets = Vec::with_capacity(rounds + 2);
        let mut acc = 0;
        for &b in &block_sizes {
            col_offsets.push(acc);
            acc += b;
        }
        col_offsets.push(acc);
        debug_assert_eq!(acc, n);

        let m0 = m as i64 - row_budgets[1..].iter().map(|&b| b as i64).sum::<i64>();
        let lambdas = row_budgets
            .iter()
            .enumerate()
            .map(|(i, &mi)| if i == 0 { (f64::NAN, f64::NAN) } else { lambda_pair(mi) })
            .collect();
        let mut sched = Schedule {
            model,
            n,
            m,
            kappa,
            psi_variant,
            rounds,
            eps0,
            c_kappa,
            alpha0,
            m0,
            row_budgets,
            block_sizes,
            thresholds: Vec::new(),
            lambdas,
            col_offsets,
        };
        sched.thresholds = (0..rounds as i64).map(|i| sched.threshold(i)).collect();
        Ok(sched)
    }

    /// Replaces `ε_0` (used by the large-margin constructions) and recomputes
    /// the thresholds.
    pub fn with_eps0(mut self, eps0: f64) -> Schedule {
        self.eps0 = eps0;
        self.thresholds = (0..self.rounds as i64).map(|i| self.threshold(i)).collect();
        self
    }

    /// `T_i` from the closed form; for ABP `i = -1` extends the same formula.
    pub fn threshold(&self, i: i64) -> f64 {
        let root_n = (self.n as f64).sqrt();
        let half_pow = 0.5f64.powi(i as i32);
        match self.model {
            ModelKind::Sbp => {
                if i <= 0 {
                    0.0
                } else {
                    (self.kappa - self.eps0) * (1.0 - half_pow) * root_n
                }
            }
            ModelKind::Abp => (self.kappa + self.eps0 + half_pow) * root_n,
        }
    }

    pub fn n0(&self) -> usize {
        self.block_sizes[0]
    }

    /// Column range of block `k`.
    pub fn block_range(&self, k: usize) -> std::ops::Range<usize> {
        self.col_offsets[k]..self.col_offsets[k + 1]
    }

    /// `λ_k` and `λ̄_k` for round `k ≥ 1`.
    pub fn lambda(&self, k: usize) -> (f64, f64) {
        self.lambdas[k]
    }

    /// Key-value dump, one parameter per line.
    pub fn report(&self) -> String {
        let mut out = String::new();
        let join = |v: &[usize]| v.iter().map(|x| x.to_string()).collect::<Vec<_>>().join(",");
        let joinf = |v: &[f64]| v.iter().map(|x| format!("{x}")).collect::<Vec<_>>().join(",");
        let _ = writeln!(out, "model={}", self.model);
        let _ = writeln!(out, "n={}", self.n);
        let _ = writeln!(out, "m={}", self.m);
        let _ = writeln!(out, "kappa={}", self.kappa);
        let _ = writeln!(out, "psi={}", self.psi_variant.as_str());
        let _ = writeln!(out, "R={}", self.rounds);
        let _ = writeln!(out, "eps0={}", self.eps0);
        let _ = writeln!(out, "c_kappa={}", self.c_kappa);
        let _ = writeln!(out, "alpha0={}", self.alpha0);
        let _ = writeln!(out, "m0={}", self.m0);
        let _ = writeln!(out, "m_i={}", join(&self.row_budgets));
        let _ = writeln!(out, "n_i={}", join(&self.block_sizes));
        let _ = writeln!(out, "T_i={}", joinf(&self.thresholds));
        let lam: Vec<f64> = self.lambdas.iter().map(|l| l.0).collect();
        let lam_bar: Vec<f64> = self.lambdas.iter().map(|l| l.1).collect();
        let _ = writeln!(out, "lambda_i={}", joinf(&lam));
        let _ = writeln!(out, "lambda_bar_i={}", joinf(&lam_bar));
        let _ = writeln!(out, "col_offset_i={}", join(&self.col_offsets));
        out
    }
}

/// `(ε_0, C_κ, α_0)`.
fn model_constants(model: ModelKind, kappa: f64) -> (f64, f64, f64) {
    match model {
        ModelKind::Sbp => {
            let c = 10.0 / kappa + 10.0 + kappa;
            (kappa / 10.0, c, kappa.powi(4) / (4.0 * c.powi(6)))
        }
        ModelKind::Abp => {
            let c = 10.0 - kappa.min(0.0);
            (kappa.abs() / 10.0, c, 1.0 / (100.0 * c * c))
        }
    }
}

/// Margin gap and `C_κ` for the large-margin cluster inequality.
fn cluster_terms(model: ModelKind, kappa: f64, kappa_prime: f64) -> Result<(f64, f64)> {
    match model {
        ModelKind::Sbp => {
            if !(kappa_prime > 0.0 && kappa_prime < kappa) {
                return Err(Error::InvalidMargins(format!(
                    "SBP needs 0 < kappa' < kappa, got kappa={kappa}, kappa'={kappa_prime}"
                )));
            }
        }
        ModelKind::Abp => {
            if kappa_prime.is_nan() || kappa_prime <= kappa {
                return Err(Error::InvalidMargins(format!(
                    "ABP needs kappa' > kappa, got kappa={kappa}, kappa'={kappa_prime}"
                )));
            }
        }
    }
    let (_, c_kappa, _) = model_constants(model, kappa);
    Ok(((kappa - kappa_prime).abs() / 2.0, c_kappa))
}

/// Slack of the cluster inequality at `d`; feasible iff non-negative.
pub fn cluster_d_slack(model: ModelKind, kappa: f64, kappa_prime: f64, d: f64) -> Result<f64> {
    let (eps0, c) = cluster_terms(model, kappa, kappa_prime)?;
    let lhs = eps0 / (5.0 * d).sqrt();
    let rhs = match model {
        ModelKind::Sbp => c - d.ln() * kappa / 2.0,
        ModelKind::Abp => c - 2.0 * d.ln(),
    };
    Ok(lhs - rhs)
}

/// Largest `d ∈ (0, 1]` with `ε_0/√(5d) ≥ C_κ − log(d)κ/2` (SBP) or
/// `ε_0/√(5d) ≥ C_κ − 2 log(d)` (ABP), to relative precision 1e-9.
pub fn solve_linear_cluster_d(model: ModelKind, kappa: f64, kappa_prime: f64) -> Result<f64> {
    let slack = |d: f64| cluster_d_slack(model, kappa, kappa_prime, d);
    if slack(1.0)? >= 0.0 {
        return Ok(1.0);
    }
    // The slack falls then rises in d; its minimiser d* = ε0²/(5c²) with c the
    // log coefficient. Above d* it stays below slack(1) < 0, so the feasible
    // set is (0, root] with root < d*.
    let (eps0, _) = cluster_terms(model, kappa, kappa_prime)?;
    let log_coef = match model {
        ModelKind::Sbp => kappa / 2.0,
        ModelKind::Abp => 2.0,
    };
    let mut hi = (eps0 * eps0 / (5.0 * log_coef * log_coef)).min(1.0);
    let mut lo = hi;
    while slack(lo)? < 0.0 {
        hi = lo;
        lo /= 2.0;
        if lo < 1e-300 {
            return Err(Error::InvalidMargins("no feasible d found".into()));
        }
    }
    while (hi - lo) > 1e-9 * lo {
        let mid = 0.5 * (lo + hi);
        if slack(mid)? >= 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(lo)
}
