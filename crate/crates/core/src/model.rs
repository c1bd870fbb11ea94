//! Instances of the symmetric (SBP) and asymmetric (ABP) binary perceptron and
//! their solution predicates.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{check_len, Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ModelKind {
    /// Two-sided constraints `|Σ G_ri x_i| ≤ κ√n`.
    Sbp,
    /// One-sided constraints `Σ G_ri x_i ≥ κ√n`.
    Abp,
}

impl fmt::Display for ModelKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            ModelKind::Sbp => "sbp",
            ModelKind::Abp => "abp",
        })
    }
}

impl FromStr for ModelKind {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "sbp" => Ok(ModelKind::Sbp),
            "abp" => Ok(ModelKind::Abp),
            other => Err(Error::InvalidInput(format!("unknown model {other:?}"))),
        }
    }
}

/// Relative slack absorbing the representation error of `κ√n`.
const MARGIN_SLACK: f64 = 1e-12;

/// An m×n ±1 constraint matrix with its model and margin.
#[derive(Clone, PartialEq)]
pub struct Instance {
    model: ModelKind,
    m: usize,
    n: usize,
    kappa: f64,
    entries: Vec<i8>,
    seed: u64,
}

impl fmt::Debug for Instance {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Instance")
            .field("model", &self.model)
            .field("m", &self.m)
            .field("n", &self.n)
            .field("kappa", &self.kappa)
            .field("seed", &self.seed)
            .finish_non_exhaustive()
    }
}

impl Instance {
    /// Builds an instance from row-major entries.
    pub fn new(model: ModelKind, m: usize, n: usize, kappa: f64, entries: Vec<i8>, seed: u64) -> Result<Self> {
        if m == 0 || n == 0 {
            return Err(Error::InvalidConfig(format!("need m ≥ 1 and n ≥ 1, got m={m}, n={n}")));
        }
        check_len(m * n, entries.len())?;
        if entries.iter().any(|&g| g != 1 && g != -1) {
            return Err(Error::InvalidInput("matrix entries must be ±1".into()));
        }
        if !kappa.is_finite() {
            return Err(Error::InvalidConfig(format!("kappa must be finite, got {kappa}")));
        }
        if model == ModelKind::Sbp && kappa <= 0.0 {
            return Err(Error::InvalidConfig(format!("SBP requires kappa > 0, got {kappa}")));
        }
        Ok(Instance { model, m, n, kappa, entries, seed })
    }

    pub fn from_rows(model: ModelKind, kappa: f64, rows: &[Vec<i8>]) -> Result<Self> {
        let m = rows.len();
        let n = rows.first().map_or(0, Vec::len);
        let mut entries = Vec::with_capacity(m * n);
        for row in rows {
            check_len(n, row.len())?;
            entries.extend_from_slice(row);
        }
        Instance::new(model, m, n, kappa, entries, 0)
    }

    pub fn model(&self) -> ModelKind {
        self.model
    }

    pub fn m(&self) -> usize {
        self.m
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn kappa(&self) -> f64 {
        self.kappa
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn alpha(&self) -> f64 {
        self.m as f64 / self.n as f64
    }

    pub fn entries(&self) -> &[i8] {
        &self.entries
    }

    #[inline]
    pub fn row(&self, r: usize) -> &[i8] {
        &self.entries[r * self.n..(r + 1) * self.n]
    }

    #[inline]
    pub fn entry(&self, r: usize, c: usize) -> i8 {
        self.entries[r * self.n + c]
    }

    /// Same matrix under a different margin.
    pub fn with_kappa(&self, kappa: f64) -> Result<Instance> {
        Instance::new(self.model, self.m, self.n, kappa, self.entries.clone(), self.seed)
    }

    /// `Σ_i G_ri x_i` for every row.
    pub fn row_sums(&self, x: &[i8]) -> Result<Vec<i64>> {
        check_len(self.n, x.len())?;
        Ok((0..self.m).map(|r| dot(self.row(r), x)).collect())
    }

    /// Row sums restricted to the column range `start..start + block.len()`.
    pub fn block_sums(&self, start: usize, block: &[i8]) -> Vec<i64> {
        (0..self.m).map(|r| dot(&self.row(r)[start..start + block.len()], block)).collect()
    }

    pub fn is_solution(&self, x: &[i8]) -> Result<bool> {
        self.is_margin_solution(x, self.kappa)
    }

    /// Whether every row clears the margin `kappa_prime` (entrywise).
    pub fn is_margin_solution(&self, x: &[i8], kappa_prime: f64) -> Result<bool> {
        let sums = self.row_sums(x)?;
        Ok(self.sums_satisfy(&sums, kappa_prime))
    }

    /// Applies the model's constraint at margin `kappa_prime` to precomputed row sums.
    pub fn sums_satisfy(&self, sums: &[i64], kappa_prime: f64) -> bool {
        sums.iter().all(|&s| self.row_ok(s, kappa_prime))
    }

    #[inline]
    pub(crate) fn row_ok(&self, sum: i64, kappa_prime: f64) -> bool {
        row_satisfied(self.model, self.n, sum, kappa_prime)
    }

    pub fn margin_report(&self, x: &[i8]) -> Result<MarginReport> {
        let row_sums = self.row_sums(x)?;
        let root_n = (self.n as f64).sqrt();
        let satisfied: Vec<bool> = row_sums.iter().map(|&s| self.row_ok(s, self.kappa)).collect();
        Ok(MarginReport {
            scaled: row_sums.iter().map(|&s| s as f64 / root_n).collect(),
            all_satisfied: satisfied.iter().all(|&b| b),
            satisfied,
            row_sums,
        })
    }
}

/// Constraint check on a single integer row sum.
#[inline]
pub fn row_satisfied(model: ModelKind, n: usize, sum: i64, kappa: f64) -> bool {
    let root_n = (n as f64).sqrt();
    let bound = kappa * root_n;
    let slack = MARGIN_SLACK * root_n;
    match model {
        ModelKind::Sbp => (sum.abs() as f64) <= bound + slack,
        ModelKind::Abp => (sum as f64) >= bound - slack,
    }
}

#[inline]
pub(crate) fn dot(row: &[i8], x: &[i8]) -> i64 {
    debug_assert_eq!(row.len(), x.len());
    // i8 products summed in i32 chunks vectorise well; chunks bound the i32 range.
    row.chunks(1 << 20)
        .zip(x.chunks(1 << 20))
        .map(|(a, b)| a.iter().zip(b).map(|(&g, &v)| (g * v) as i32).sum::<i32>() as i64)
        .sum()
}

/// Per-row margin diagnostics for a candidate vector.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MarginReport {
    pub row_sums: Vec<i64>,
    pub scaled: Vec<f64>,
    pub satisfied: Vec<bool>,
    pub all_satisfied: bool,
}
