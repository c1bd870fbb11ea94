//! Interpolation paths between outputs of the majority algorithm.
//!
//! A path is indexed by tuples `(j, h_{b+1}, …, h_R)` in lexicographic order.
//! The base level `b` holds a short sequence of Hamming-adjacent prefixes
//! (interpolations between two anchors); each further level `k` interpolates
//! between the round-`k` outputs computed from a prefix and from its successor
//! in the level-`k-1` sequence. Consecutive vectors differ in exactly one
//! coordinate, and the whole path is streamed: only one tuple and the per-level
//! blocks are kept in memory.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{check_len, Error, Result};
use crate::model::Instance;
use crate::schedule::{solve_linear_cluster_d, Schedule};
use crate::solver::{complete_from, round_block, StartPolicy};
use crate::spin::{hamming_unchecked, SpinVector};

/// `v1` with its first `k` disagreements with `v2` (by index) taken from `v2`.
pub fn interpolate(v1: &[i8], v2: &[i8], k: usize) -> Result<SpinVector> {
    check_len(v1.len(), v2.len())?;
    let mut out = v1.to_vec();
    let mut flipped = 0;
    for (o, &b) in out.iter_mut().zip(v2) {
        if flipped == k {
            break;
        }
        if *o != b {
            *o = b;
            flipped += 1;
        }
    }
    if flipped < k {
        return Err(Error::OutOfRange(format!("interpolation step {k} exceeds Hamming distance {flipped}")));
    }
    Ok(SpinVector::from_raw(out))
}

/// The round whose block contains position `len` (0-based), i.e. the unique
/// `L ≥ 1` with `Σ_{s<L} n_s ≤ len < Σ_{s≤L} n_s`.
pub fn level_of(len: usize, schedule: &Schedule) -> Result<usize> {
    if len < schedule.n0() || len >= schedule.n {
        return Err(Error::OutOfRange(format!("length {len} outside [n0, n) = [{}, {})", schedule.n0(), schedule.n)));
    }
    (1..=schedule.rounds)
        .find(|&l| schedule.col_offsets[l] <= len && len < schedule.col_offsets[l + 1])
        .ok_or_else(|| Error::OutOfRange(format!("no level contains length {len}")))
}

/// Extends `v` (with `Σ_{s<L} n_s ≤ |v| ≤ Σ_{s≤L} n_s`) to the end of block `level`
/// using the round-`level` output computed from `v`'s first `Σ_{s<L} n_s` entries.
pub fn augment_to_level(v: &[i8], instance: &Instance, schedule: &Schedule, level: usize) -> Result<SpinVector> {
    let start = schedule.col_offsets[level];
    let end = schedule.col_offsets[level + 1];
    if v.len() < start || v.len() > end || level == 0 {
        return Err(Error::OutOfRange(format!("length {} does not fit level {level} ([{start}, {end}])", v.len())));
    }
    if v.len() == end {
        return Ok(SpinVector::from_raw(v.to_vec()));
    }
    let sums = instance.block_sums(0, &v[..start]);
    let block = round_block(instance, schedule, level, &sums);
    let mut out = v.to_vec();
    out.extend_from_slice(&block[v.len() - start..]);
    Ok(SpinVector::from_raw(out))
}

/// `A_{0:L(v)}(v)`: `v` padded to the end of its block with algorithm output.
pub fn augment(v: &[i8], instance: &Instance, schedule: &Schedule) -> Result<SpinVector> {
    let level = level_of(v.len(), schedule)?;
    augment_to_level(v, instance, schedule, level)
}

/// `A(v)`: augments `v` and runs the remaining rounds. A full-length `v` is returned as is.
pub fn complete(v: &[i8], instance: &Instance, schedule: &Schedule) -> Result<SpinVector> {
    if v.len() == schedule.n {
        return Ok(SpinVector::from_raw(v.to_vec()));
    }
    if v.len() < schedule.n0() {
        return Err(Error::OutOfRange(format!("length {} shorter than n0 = {}", v.len(), schedule.n0())));
    }
    let aug = augment(v, instance, schedule)?;
    complete_from(instance, schedule, &aug)
}

/// Parameters of the large-margin cluster paths.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LocalClusterParams {
    pub kappa_prime: f64,
    pub d: f64,
    /// `⌈d n⌉`.
    pub d_count: usize,
}

impl LocalClusterParams {
    /// `d` from the cluster inequality, or `d_override` when given.
    pub fn new(instance: &Instance, kappa_prime: f64, d_override: Option<f64>) -> Result<Self> {
        let d = match d_override {
            Some(d) if d > 0.0 && d <= 1.0 => d,
            Some(d) => return Err(Error::InvalidInput(format!("d must lie in (0, 1], got {d}"))),
            None => solve_linear_cluster_d(instance.model(), instance.kappa(), kappa_prime)?,
        };
        let d_count = (d * instance.n() as f64).ceil() as usize;
        Ok(LocalClusterParams { kappa_prime, d, d_count })
    }
}

/// The two-anchor base sequence of a path.
#[derive(Debug, Clone)]
struct Base {
    level: usize,
    block_start: usize,
    prefix_left: Vec<i8>,
    prefix_right: Vec<i8>,
    block_left: Vec<i8>,
    block_right: Vec<i8>,
    /// Block-relative positions where the two blocks disagree.
    diff: Vec<usize>,
    prefix_flip: Option<usize>,
    /// Row sums of base items `0..=D` (+ the right-prefix item), row-major by item.
    item_sums: Vec<i64>,
    m: usize,
}

impl Base {
    fn new(
        instance: &Instance,
        level: usize,
        prefix_left: Vec<i8>,
        prefix_right: Vec<i8>,
        block_left: Vec<i8>,
        block_right: Vec<i8>,
    ) -> Result<Base> {
        check_len(prefix_left.len(), prefix_right.len())?;
        check_len(block_left.len(), block_right.len())?;
        let prefix_diff: Vec<usize> = (0..prefix_left.len()).filter(|&i| prefix_left[i] != prefix_right[i]).collect();
        if prefix_diff.len() > 1 {
            return Err(Error::InvalidInput(format!(
                "anchor prefixes differ in {} entries, at most 1 allowed",
                prefix_diff.len()
            )));
        }
        let block_start = prefix_left.len();
        let diff: Vec<usize> = (0..block_left.len()).filter(|&i| block_left[i] != block_right[i]).collect();
        let m = instance.m();

        let mut sums = instance.block_sums(0, &prefix_left);
        for (s, d) in sums.iter_mut().zip(instance.block_sums(block_start, &block_left)) {
            *s += d;
        }
        let mut item_sums = Vec::with_capacity((diff.len() + 2) * m);
        item_sums.extend_from_slice(&sums);
        for &p in &diff {
            let c = block_start + p;
            apply_flip(instance, &mut sums, c, block_right[p]);
            item_sums.extend_from_slice(&sums);
        }
        let prefix_flip = prefix_diff.first().copied();
        if let Some(c) = prefix_flip {
            apply_flip(instance, &mut sums, c, prefix_right[c]);
            item_sums.extend_from_slice(&sums);
        }
        Ok(Base {
            level,
            block_start,
            prefix_left,
            prefix_right,
            block_left,
            block_right,
            diff,
            prefix_flip,
            item_sums,
            m,
        })
    }

    fn len(&self) -> usize {
        self.diff.len() + 1 + usize::from(self.prefix_flip.is_some())
    }

    fn end(&self) -> usize {
        self.block_start + self.block_left.len()
    }

    fn sums(&self, j: usize) -> &[i64] {
        &self.item_sums[j * self.m..(j + 1) * self.m]
    }

    /// Coordinate changed between items `j` and `j + 1`.
    fn next_flip(&self, j: usize) -> Option<usize> {
        if j + 1 >= self.len() {
            None
        } else if j < self.diff.len() {
            Some(self.block_start + self.diff[j])
        } else {
            self.prefix_flip
        }
    }

    fn write_item(&self, j: usize, out: &mut [i8]) {
        let d = self.diff.len();
        if j <= d {
            out[..self.block_start].copy_from_slice(&self.prefix_left);
            let block = &mut out[self.block_start..self.end()];
            block.copy_from_slice(&self.block_left);
            for &p in &self.diff[..j] {
                block[p] = self.block_right[p];
            }
        } else {
            out[..self.block_start].copy_from_slice(&self.prefix_right);
            out[self.block_start..self.end()].copy_from_slice(&self.block_right);
        }
    }
}

/// `sums += G[:, c] · (new - old)` for a flip of coordinate `c` to `new`.
#[inline]
fn apply_flip(instance: &Instance, sums: &mut [i64], c: usize, new: i8) {
    let delta = 2 * new as i64;
    for (r, s) in sums.iter_mut().enumerate() {
        *s += delta * instance.entry(r, c) as i64;
    }
}

#[derive(Debug, Clone)]
struct Level {
    round: usize,
    left: Vec<i8>,
    right: Option<Vec<i8>>,
    diff: Vec<usize>,
    h: usize,
}

impl Level {
    fn bound(&self) -> usize {
        self.diff.len()
    }
}

/// Lazy traversal of a tree-indexed interpolation path.
#[derive(Debug, Clone)]
pub struct PathCursor<'a> {
    instance: &'a Instance,
    schedule: &'a Schedule,
    base: Base,
    j: usize,
    levels: Vec<Level>,
    x: Vec<i8>,
    /// `sums[0]` covers the base, `sums[p]` the prefix through upper level `p`.
    sums: Vec<Vec<i64>>,
    flips: Vec<Option<usize>>,
    exhausted: bool,
}

impl<'a> PathCursor<'a> {
    fn new(instance: &'a Instance, schedule: &'a Schedule, base: Base) -> Result<Self> {
        let upper = schedule.rounds.saturating_sub(base.level);
        let mut cursor = PathCursor {
            instance,
            schedule,
            base,
            j: 0,
            levels: Vec::with_capacity(upper),
            x: vec![0; schedule.n],
            sums: Vec::with_capacity(upper + 1),
            flips: Vec::with_capacity(upper + 1),
            exhausted: false,
        };
        cursor.rewind();
        Ok(cursor)
    }

    /// Round index of the base level.
    pub fn base_level(&self) -> usize {
        self.base.level
    }

    /// Returns to the first vector of the path.
    pub fn rewind(&mut self) {
        let zeros = vec![0; self.depth()];
        self.seek_with(|_, _| 0, &zeros).expect("zero tuple is always in range");
    }

    /// Number of tuple entries `(j, h_{b+1}, …, h_R)`.
    pub fn depth(&self) -> usize {
        1 + self.schedule.rounds.saturating_sub(self.base.level)
    }

    pub fn current(&self) -> &[i8] {
        &self.x
    }

    pub fn current_vector(&self) -> SpinVector {
        SpinVector::from_raw(self.x.clone())
    }

    /// Current index tuple.
    pub fn tuple(&self) -> Vec<usize> {
        std::iter::once(self.j).chain(self.levels.iter().map(|l| l.h)).collect()
    }

    /// Current per-level bounds `D`; the base entry is the number of base
    /// steps, and a terminal prefix has bound 0 on every upper level.
    pub fn bounds(&self) -> Vec<usize> {
        std::iter::once(self.base.len() - 1).chain(self.levels.iter().map(Level::bound)).collect()
    }

    pub fn row_sums(&self) -> &[i64] {
        self.sums.last().expect("at least the base level")
    }

    pub fn is_solution(&self) -> bool {
        self.instance.sums_satisfy(self.row_sums(), self.instance.kappa())
    }

    pub fn is_terminal(&self) -> bool {
        self.j + 1 == self.base.len()
    }

    pub fn is_exhausted(&self) -> bool {
        self.exhausted
    }

    /// Moves to the next tuple in lexicographic order. Returns `false` once the
    /// last vector has been passed.
    pub fn advance(&mut self) -> bool {
        if self.exhausted {
            return false;
        }
        let deepest = (1..=self.levels.len())
            .rev()
            .find(|&p| {
                let l = &self.levels[p - 1];
                l.right.is_some() && l.h < l.bound()
            })
            .or_else(|| (self.j + 1 < self.base.len()).then_some(0));
        let Some(p) = deepest else {
            self.exhausted = true;
            return false;
        };
        let c = self.flips[p].expect("incrementable level has a successor");
        self.x[c] = -self.x[c];
        for q in p..self.sums.len() {
            apply_flip(self.instance, &mut self.sums[q], c, self.x[c]);
        }
        if p == 0 {
            self.j += 1;
            self.flips[0] = self.base.next_flip(self.j);
        } else {
            let level = &mut self.levels[p - 1];
            level.h += 1;
            self.flips[p] = self.level_flip(p);
        }
        for q in p + 1..=self.levels.len() {
            // The carried level already shows its right block, which is the
            // round output for the new prefix.
            let right = self.levels[q - 1].right.take().expect("carry from a non-terminal level");
            self.levels[q - 1].left = right;
            self.refresh_right(q);
            self.levels[q - 1].h = 0;
            self.flips[q] = self.level_flip(q);
        }
        true
    }

    /// Positions the cursor on an explicit tuple.
    pub fn seek(&mut self, tuple: &[usize]) -> Result<()> {
        if tuple.len() != self.depth() {
            return Err(Error::DimensionMismatch { expected: self.depth(), actual: tuple.len() });
        }
        self.seek_with(|_, _| 0, tuple)
    }

    /// Positions the cursor on a random tuple, drawing each index uniformly
    /// from its range given the indices above it. The terminal tuple is never drawn.
    pub fn seek_random<R: Rng>(&mut self, rng: &mut R) {
        let zeros = vec![0; self.depth()];
        let mut draw = |bound: usize, _level: usize| rng.gen_range(0..=bound);
        self.seek_with(&mut draw, &zeros).expect("random indices are in range");
    }

    /// `pick(bound, level)` adds an offset to `tuple[level]`; seeking an
    /// explicit tuple uses the zero picker.
    fn seek_with<F: FnMut(usize, usize) -> usize>(&mut self, mut pick: F, tuple: &[usize]) -> Result<()> {
        let base_steps = self.base.len() - 1;
        let j = if base_steps == 0 { tuple[0] } else { tuple[0] + pick(base_steps - 1, 0) };
        if j > base_steps {
            return Err(Error::OutOfRange(format!("base index {j} > {base_steps}")));
        }
        self.j = j;
        self.exhausted = false;
        self.base.write_item(j, &mut self.x);
        self.sums.clear();
        self.sums.push(self.base.sums(j).to_vec());
        self.flips.clear();
        self.flips.push(self.base.next_flip(j));
        self.levels.clear();

        let first_round = self.base.level + 1;
        for (p, round) in (first_round..=self.schedule.rounds).enumerate() {
            let p = p + 1;
            let left = round_block(self.instance, self.schedule, round, &self.sums[p - 1]);
            self.levels.push(Level { round, left, right: None, diff: Vec::new(), h: 0 });
            self.refresh_right(p);
            let level = &mut self.levels[p - 1];
            let bound = if level.right.is_some() { level.bound() } else { 0 };
            let h = tuple[p] + if level.right.is_some() { pick(bound, p) } else { 0 };
            if h > bound {
                return Err(Error::OutOfRange(format!("index {h} at round {round} exceeds bound {bound}")));
            }
            level.h = h;
            let start = self.schedule.col_offsets[round];
            let block = &mut self.x[start..start + level.left.len()];
            block.copy_from_slice(&level.left);
            let right = level.right.as_deref().unwrap_or(&level.left);
            for &q in &level.diff[..h] {
                block[q] = right[q];
            }
            let mut sums = self.sums[p - 1].clone();
            for (s, d) in sums.iter_mut().zip(self.instance.block_sums(start, block)) {
                *s += d;
            }
            self.sums.push(sums);
            self.flips.push(self.level_flip(p));
        }
        Ok(())
    }

    /// Recomputes the right block and disagreement list of upper level `p`
    /// from the successor of the current prefix.
    fn refresh_right(&mut self, p: usize) {
        let round = self.levels[p - 1].round;
        let right = self.flips[p - 1].map(|c| {
            let mut succ = self.sums[p - 1].clone();
            apply_flip(self.instance, &mut succ, c, -self.x[c]);
            round_block(self.instance, self.schedule, round, &succ)
        });
        let level = &mut self.levels[p - 1];
        level.diff = match &right {
            Some(r) => (0..r.len()).filter(|&i| r[i] != level.left[i]).collect(),
            None => Vec::new(),
        };
        level.right = right;
    }

    fn level_flip(&self, p: usize) -> Option<usize> {
        let level = &self.levels[p - 1];
        level.right.as_ref()?;
        if level.h < level.bound() {
            Some(self.schedule.col_offsets[level.round] + level.diff[level.h])
        } else {
            self.flips[p - 1]
        }
    }

    /// First and last vectors of the path.
    pub fn endpoints(&mut self) -> (SpinVector, SpinVector) {
        let saved = self.tuple();
        self.rewind();
        let first = self.current_vector();
        self.seek_terminal();
        let last = self.current_vector();
        self.seek(&saved).expect("restoring a visited tuple");
        (first, last)
    }

    /// Moves to the last tuple `(B-1, 0, …, 0)`.
    pub fn seek_terminal(&mut self) {
        let mut t = vec![0; self.depth()];
        t[0] = self.base.len() - 1;
        self.seek(&t).expect("terminal tuple is in range");
    }
}

/// Path between `A(v)` and `A(-v)` for a block-0 vector `v`.
pub fn wide_web_path<'a>(instance: &'a Instance, schedule: &'a Schedule, v: &SpinVector) -> Result<PathCursor<'a>> {
    check_len(schedule.n0(), v.len())?;
    StartPolicy::Given(v.clone()).start_vector(schedule.n0())?;
    let neg = -v;
    let base = Base::new(instance, 0, Vec::new(), Vec::new(), v.to_vec(), neg.into_inner())?;
    PathCursor::new(instance, schedule, base)
}

fn check_margin_solution(instance: &Instance, x: &SpinVector, params: &LocalClusterParams) -> Result<()> {
    check_len(instance.n(), x.len())?;
    if !instance.is_margin_solution(x, params.kappa_prime)? {
        return Err(Error::InvalidInput(format!("X is not a {}-solution", params.kappa_prime)));
    }
    Ok(())
}

/// Path from `A(X([ℓ]))` to `A(X([ℓ+1]))` for `n - ⌈dn⌉ ≤ ℓ ≤ n - 1`.
pub fn local_path_first<'a>(
    instance: &'a Instance,
    schedule: &'a Schedule,
    x: &SpinVector,
    ell: usize,
    params: &LocalClusterParams,
) -> Result<PathCursor<'a>> {
    let n = instance.n();
    if ell >= n || ell + params.d_count < n {
        return Err(Error::OutOfRange(format!(
            "ell = {ell} outside [n - d, n - 1] = [{}, {}]",
            n.saturating_sub(params.d_count),
            n - 1
        )));
    }
    check_margin_solution(instance, x, params)?;
    let level = level_of(ell, schedule)?;
    let x1 = augment_to_level(&x[..ell], instance, schedule, level)?.into_inner();
    let x2 = augment_to_level(&x[..ell + 1], instance, schedule, level)?.into_inner();
    let base = if level < schedule.rounds {
        let b = level + 1;
        let left = round_block(instance, schedule, b, &instance.block_sums(0, &x1));
        let right = round_block(instance, schedule, b, &instance.block_sums(0, &x2));
        Base::new(instance, b, x1, x2, left, right)?
    } else {
        Base::new(instance, level + 1, x1, x2, Vec::new(), Vec::new())?
    };
    PathCursor::new(instance, schedule, base)
}

/// Path from `A(F(X,ℓ)([n-d]))` to `A(F(X,ℓ+1)([n-d]))` for `0 ≤ ℓ ≤ d - 1`.
pub fn local_path_second<'a>(
    instance: &'a Instance,
    schedule: &'a Schedule,
    x: &SpinVector,
    ell: usize,
    params: &LocalClusterParams,
) -> Result<PathCursor<'a>> {
    let n = instance.n();
    let d = params.d_count;
    if d == 0 || ell >= d || d > n {
        return Err(Error::OutOfRange(format!("ell = {ell} outside [0, {d})")));
    }
    check_margin_solution(instance, x, params)?;
    let cut = n - d;
    let level = level_of(cut, schedule)?;
    let start = schedule.col_offsets[level];
    let x1 = x.flip_prefix(ell)?;
    let x2 = x.flip_prefix(ell + 1)?;
    let a1 = augment_to_level(&x1[..cut], instance, schedule, level)?;
    let a2 = augment_to_level(&x2[..cut], instance, schedule, level)?;
    let base = Base::new(
        instance,
        level,
        a1[..start].to_vec(),
        a2[..start].to_vec(),
        a1[start..].to_vec(),
        a2[start..].to_vec(),
    )?;
    PathCursor::new(instance, schedule, base)
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum PathSample {
    All,
    Random { count: usize, seed: u64 },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PathReport {
    /// Vertices visited (all mode) or sampled (random mode).
    pub length: u64,
    pub adjacency_ok: bool,
    pub adjacency_failures: u64,
    pub first: SpinVector,
    pub last: SpinVector,
    pub solution_fraction: f64,
    pub failures: u64,
    pub first_failure: Option<Vec<usize>>,
    /// Sampled tuples, random mode only.
    #[serde(skip_serializing_if = "Vec::is_empty", default)]
    pub sampled_tuples: Vec<Vec<usize>>,
}

/// Walks (or samples) a path, checking adjacency and solution membership.
pub fn verify_path(cursor: &mut PathCursor<'_>, sample: &PathSample) -> PathReport {
    let (first, last) = cursor.endpoints();
    let mut visited = 0u64;
    let mut failures = 0u64;
    let mut adjacency_failures = 0u64;
    let mut first_failure = None;
    let mut sampled_tuples = Vec::new();
    let mut record = |cursor: &PathCursor<'_>, visited: &mut u64, failures: &mut u64| {
        *visited += 1;
        if !cursor.is_solution() {
            *failures += 1;
            if first_failure.is_none() {
                first_failure = Some(cursor.tuple());
            }
        }
    };
    match sample {
        PathSample::All => {
            cursor.rewind();
            let mut prev = cursor.current().to_vec();
            record(cursor, &mut visited, &mut failures);
            while cursor.advance() {
                if hamming_unchecked(&prev, cursor.current()) != 1 {
                    adjacency_failures += 1;
                }
                prev.copy_from_slice(cursor.current());
                record(cursor, &mut visited, &mut failures);
            }
        }
        PathSample::Random { count, seed } => {
            let mut rng = ChaCha8Rng::seed_from_u64(*seed);
            let mut prev = vec![0; cursor.current().len()];
            for _ in 0..*count {
                cursor.seek_random(&mut rng);
                sampled_tuples.push(cursor.tuple());
                record(cursor, &mut visited, &mut failures);
                prev.copy_from_slice(cursor.current());
                if cursor.advance() && hamming_unchecked(&prev, cursor.current()) != 1 {
                    adjacency_failures += 1;
                }
            }
        }
    }
    cursor.rewind();
    PathReport {
        length: visited,
        adjacency_ok: adjacency_failures == 0,
        adjacency_failures,
        first,
        last,
        solution_fraction: if visited == 0 { 0.0 } else { (visited - failures) as f64 / visited as f64 },
        failures,
        first_failure,
        sampled_tuples,
    }
}
