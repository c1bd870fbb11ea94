//! The multiscale majority algorithm.
//!
//! Round 0 fills block 0 from a start policy. Every later round reads the
//! partial row sums over the blocks already filled and assigns its block by
//! column-wise (weighted) majority votes of the selected rows:
//!
//! * SBP round 1 and round R: weighted votes. Row `r` with partial sum `S_r`
//!   votes `-sgn(S_r)·G_rj` on the first `ℓ_r = ⌊|S_r|√(π m_k/2)⌋` columns of
//!   the block and the constant `-sgn(S_r)` afterwards.
//! * SBP rounds 2..R-1: the `m_k` rows with largest `|S_r|` vote `-sgn(S_r)·G_rj`.
//! * ABP rounds 1..R: the `m_k` rows with smallest `S_r` vote `G_rj`.

use std::time::{Duration, Instant};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::error::{check_len, Error, Result};
use crate::model::{Instance, ModelKind};
use crate::schedule::Schedule;
use crate::spin::{sgn_i64, SpinVector};

/// How block 0 is assigned.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub enum StartPolicy {
    #[default]
    AllPlus,
    SeededRandom(u64),
    Given(SpinVector),
}

impl StartPolicy {
    pub fn start_vector(&self, n0: usize) -> Result<SpinVector> {
        match self {
            StartPolicy::AllPlus => Ok(SpinVector::all_plus(n0)),
            StartPolicy::SeededRandom(seed) => {
                let mut rng = ChaCha8Rng::seed_from_u64(*seed);
                Ok(SpinVector::from_raw((0..n0).map(|_| if rng.gen::<bool>() { 1 } else { -1 }).collect()))
            }
            StartPolicy::Given(v) => {
                check_len(n0, v.len())?;
                Ok(v.clone())
            }
        }
    }
}

/// Columns per parallel vote chunk; below this a round runs single-threaded.
const PAR_CHUNK: usize = 1 << 14;

/// Rows taking part in round `k`, in ascending row order.
pub fn select_rows(model: ModelKind, sums: &[i64], count: usize) -> Vec<usize> {
    let m = sums.len();
    if count >= m {
        return (0..m).collect();
    }
    let mut idx: Vec<usize> = (0..m).collect();
    match model {
        // largest |S| first, ties by lower index
        ModelKind::Sbp => idx.sort_by(|&a, &b| sums[b].abs().cmp(&sums[a].abs()).then(a.cmp(&b))),
        // smallest S first, ties by lower index
        ModelKind::Abp => idx.sort_by(|&a, &b| sums[a].cmp(&sums[b]).then(a.cmp(&b))),
    }
    idx.truncate(count);
    idx.sort_unstable();
    idx
}

/// Block `k ≥ 1` given the partial row sums `S(0:k-1)` of the prefix.
pub fn round_block(instance: &Instance, schedule: &Schedule, k: usize, sums: &[i64]) -> Vec<i8> {
    debug_assert!(k >= 1 && k <= schedule.rounds);
    debug_assert_eq!(sums.len(), instance.m());
    let range = schedule.block_range(k);
    let width = range.len();
    let budget = schedule.row_budgets[k];
    let rows = select_rows(instance.model(), sums, budget);
    let weighted = instance.model() == ModelKind::Sbp && (k == 1 || k == schedule.rounds);

    // (row, sign, number of leading columns voting with G; the rest vote the constant `sign`)
    let scale = (std::f64::consts::PI * budget as f64 / 2.0).sqrt();
    let voters: Vec<(usize, i8, usize)> = rows
        .iter()
        .map(|&r| match instance.model() {
            ModelKind::Sbp => {
                let sign = -sgn_i64(sums[r]);
                let lead = if weighted {
                    let l = (sums[r].unsigned_abs() as f64 * scale).floor();
                    if l >= width as f64 {
                        width
                    } else {
                        l as usize
                    }
                } else {
                    width
                };
                (r, sign, lead)
            }
            ModelKind::Abp => (r, 1, width),
        })
        .collect();

    let mut block = vec![0i8; width];
    let fill = |start: usize, out: &mut [i8]| {
        let mut acc = vec![0i32; out.len()];
        let end = start + out.len();
        for &(r, sign, lead) in &voters {
            let row = &instance.row(r)[range.start..range.end];
            let lead_end = lead.clamp(start, end);
            if lead_end > start {
                let g = &row[start..lead_end];
                if sign > 0 {
                    acc.iter_mut().zip(g).for_each(|(a, &x)| *a += x as i32);
                } else {
                    acc.iter_mut().zip(g).for_each(|(a, &x)| *a -= x as i32);
                }
            }
            acc[lead_end - start..].iter_mut().for_each(|a| *a += sign as i32);
        }
        out.iter_mut().zip(&acc).for_each(|(o, &a)| *o = if a >= 0 { 1 } else { -1 });
    };
    if width >= 2 * PAR_CHUNK {
        block.par_chunks_mut(PAR_CHUNK).enumerate().for_each(|(c, out)| fill(c * PAR_CHUNK, out));
    } else {
        fill(0, &mut block);
    }
    block
}

/// Step-by-step execution state of the algorithm.
#[derive(Debug, Clone)]
pub struct SolverState<'a> {
    instance: &'a Instance,
    schedule: &'a Schedule,
    assigned: Vec<i8>,
    partial_sums: Vec<i64>,
    current_round: usize,
}

impl<'a> SolverState<'a> {
    /// Round 0: assigns block 0 from the policy.
    pub fn init_round0(instance: &'a Instance, schedule: &'a Schedule, policy: &StartPolicy) -> Result<Self> {
        check_compatible(instance, schedule)?;
        let start = policy.start_vector(schedule.n0())?;
        Self::from_prefix(instance, schedule, start.as_slice())
    }

    /// Resumes from a block-aligned prefix covering blocks `0..=k`.
    pub fn from_prefix(instance: &'a Instance, schedule: &'a Schedule, prefix: &[i8]) -> Result<Self> {
        check_compatible(instance, schedule)?;
        let k = schedule.col_offsets[1..]
            .iter()
            .position(|&end| end == prefix.len())
            .ok_or_else(|| Error::OutOfRange(format!("prefix length {} is not block aligned", prefix.len())))?;
        let partial_sums = instance.block_sums(0, prefix);
        Ok(SolverState { instance, schedule, assigned: prefix.to_vec(), partial_sums, current_round: k })
    }

    pub fn current_round(&self) -> usize {
        self.current_round
    }

    pub fn assigned(&self) -> &[i8] {
        &self.assigned
    }

    /// `S(0:k)` for the current round `k`.
    pub fn partial_sums(&self) -> &[i64] {
        &self.partial_sums
    }

    pub fn is_complete(&self) -> bool {
        self.current_round == self.schedule.rounds
    }

    /// Runs the next round, filling its block.
    pub fn step_round(&mut self) -> Result<()> {
        if self.is_complete() {
            return Err(Error::RoundsExhausted(self.current_round));
        }
        let k = self.current_round + 1;
        let block = round_block(self.instance, self.schedule, k, &self.partial_sums);
        let start = self.schedule.col_offsets[k];
        let delta = self.instance.block_sums(start, &block);
        self.partial_sums.iter_mut().zip(&delta).for_each(|(s, d)| *s += d);
        self.assigned.extend_from_slice(&block);
        self.current_round = k;
        Ok(())
    }

    pub fn into_vector(self) -> SpinVector {
        SpinVector::from_raw(self.assigned)
    }
}

fn check_compatible(instance: &Instance, schedule: &Schedule) -> Result<()> {
    if instance.n() != schedule.n || instance.m() != schedule.m || instance.model() != schedule.model {
        return Err(Error::InvalidInput(format!(
            "schedule ({} m={} n={}) does not match instance ({} m={} n={})",
            schedule.model,
            schedule.m,
            schedule.n,
            instance.model(),
            instance.m(),
            instance.n()
        )));
    }
    Ok(())
}

#[derive(Debug, Clone)]
pub struct SolveOutcome {
    pub x: SpinVector,
    pub success: bool,
    pub rounds_executed: usize,
    /// Wall-clock time of each round, round 0 included.
    pub round_times: Vec<Duration>,
    /// `S(0:k)` after each round `k = 0..=R`.
    pub round_sums: Vec<Vec<i64>>,
}

impl SolveOutcome {
    pub fn elapsed(&self) -> Duration {
        self.round_times.iter().sum()
    }
}

/// Runs rounds `0..=R` and checks the result.
pub fn solve(instance: &Instance, schedule: &Schedule, policy: &StartPolicy) -> Result<SolveOutcome> {
    let t0 = Instant::now();
    let mut state = SolverState::init_round0(instance, schedule, policy)?;
    let mut round_times = vec![t0.elapsed()];
    let mut round_sums = vec![state.partial_sums().to_vec()];
    while !state.is_complete() {
        let t = Instant::now();
        state.step_round()?;
        round_times.push(t.elapsed());
        round_sums.push(state.partial_sums().to_vec());
    }
    let success = instance.sums_satisfy(state.partial_sums(), instance.kappa());
    Ok(SolveOutcome {
        rounds_executed: state.current_round(),
        x: state.into_vector(),
        success,
        round_times,
        round_sums,
    })
}

/// Completes a block-aligned prefix with the remaining rounds.
pub fn complete_from(instance: &Instance, schedule: &Schedule, prefix: &[i8]) -> Result<SpinVector> {
    let mut state = SolverState::from_prefix(instance, schedule, prefix)?;
    while !state.is_complete() {
        state.step_round()?;
    }
    Ok(state.into_vector())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::schedule::PsiVariant;

    fn tiny(model: ModelKind, rows: &[&[i8]], blocks: Vec<usize>, budgets: Vec<usize>) -> (Instance, Schedule) {
        let rows: Vec<Vec<i8>> = rows.iter().map(|r| r.to_vec()).collect();
        let kappa = 1.0;
        let inst = Instance::from_rows(model, kappa, &rows).unwrap();
        let sched = Schedule::from_blocks(model, inst.m(), kappa, blocks, budgets, PsiVariant::default()).unwrap();
        (inst, sched)
    }

    #[test]
    fn round0_policies() {
        let (inst, sched) = tiny(ModelKind::Sbp, &[&[1; 9]], vec![5, 2, 2], vec![1, 1]);
        let s = SolverState::init_round0(&inst, &sched, &StartPolicy::AllPlus).unwrap();
        assert_eq!(s.assigned(), &[1, 1, 1, 1, 1]);
        assert_eq!(s.partial_sums(), &[5]);
        assert_eq!(s.current_round(), 0);

        let (inst2, sched2) = tiny(ModelKind::Sbp, &[&[1; 6]], vec![2, 2, 2], vec![1, 1]);
        let v: SpinVector = "-+".parse().unwrap();
        let s = SolverState::init_round0(&inst2, &sched2, &StartPolicy::Given(v)).unwrap();
        assert_eq!(s.assigned(), &[-1, 1]);
        let bad: SpinVector = "-+-".parse().unwrap();
        assert!(matches!(
            SolverState::init_round0(&inst2, &sched2, &StartPolicy::Given(bad)),
            Err(Error::DimensionMismatch { .. })
        ));

        let a = SolverState::init_round0(&inst, &sched, &StartPolicy::SeededRandom(3)).unwrap();
        let b = SolverState::init_round0(&inst, &sched, &StartPolicy::SeededRandom(3)).unwrap();
        assert_eq!(a.assigned(), b.assigned());
    }

    #[test]
    fn sbp_round1_zero_opinion_row() {
        // Block 0 = [+, -] on row [+, +] gives S = 0, so every vote is -sgn(0) = -1.
        let (inst, sched) = tiny(ModelKind::Sbp, &[&[1, 1, 1, -1, 1, 1]], vec![2, 3, 1], vec![1, 1]);
        let v: SpinVector = "+-".parse().unwrap();
        let mut s = SolverState::init_round0(&inst, &sched, &StartPolicy::Given(v)).unwrap();
        assert_eq!(s.partial_sums(), &[0]);
        s.step_round().unwrap();
        assert_eq!(&s.assigned()[2..5], &[-1, -1, -1]);
    }

    #[test]
    fn abp_single_row_copies_row() {
        let (inst, sched) = tiny(ModelKind::Abp, &[&[1, 1, 1, -1, 1, 1]], vec![2, 3, 1], vec![1, 1]);
        let mut s = SolverState::init_round0(&inst, &sched, &StartPolicy::AllPlus).unwrap();
        s.step_round().unwrap();
        assert_eq!(&s.assigned()[2..5], &[1, -1, 1]);
        assert_eq!(inst.block_sums(2, &s.assigned()[2..5]), vec![3]);
    }

    #[test]
    fn sbp_middle_round_pushes_toward_zero() {
        // Rounds: 0 (2 cols), 1 (1 col), 2 (4 cols, middle), 3 (1 col). Three
        // identical rows; after round 1 all share sign s = +1, so the middle
        // block becomes -g and each sum drops by n_2 = 4.
        let row: &[i8] = &[1, 1, 1, 1, -1, 1, -1, 1];
        let (inst, sched) = tiny(ModelKind::Sbp, &[row, row, row], vec![2, 1, 4, 1], vec![3, 3, 3]);
        let mut s = SolverState::init_round0(&inst, &sched, &StartPolicy::AllPlus).unwrap();
        s.step_round().unwrap();
        let before = s.partial_sums().to_vec();
        assert!(before.iter().all(|&v| v > 0));
        s.step_round().unwrap();
        assert_eq!(&s.assigned()[3..7], &[-1, 1, -1, 1]);
        let after = s.partial_sums();
        for (b, a) in before.iter().zip(after) {
            assert_eq!(a - b, -4);
        }
    }

    #[test]
    fn rounds_exhausted() {
        let (inst, sched) = tiny(ModelKind::Abp, &[&[1; 6]], vec![2, 2, 2], vec![1, 1]);
        let mut s = SolverState::init_round0(&inst, &sched, &StartPolicy::AllPlus).unwrap();
        s.step_round().unwrap();
        s.step_round().unwrap();
        assert!(matches!(s.step_round(), Err(Error::RoundsExhausted(2))));
    }

    #[test]
    fn row_selection_ties_by_index() {
        assert_eq!(select_rows(ModelKind::Sbp, &[3, -5, 5, 1], 2), vec![1, 2]);
        assert_eq!(select_rows(ModelKind::Sbp, &[4, -4, 4, 1], 2), vec![0, 1]);
        assert_eq!(select_rows(ModelKind::Abp, &[3, -5, -5, 1], 1), vec![1]);
        assert_eq!(select_rows(ModelKind::Abp, &[3, -5, -5, 1], 3), vec![1, 2, 3]);
    }
}
