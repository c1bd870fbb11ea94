//! Exhaustive enumeration of solutions and the single-flip cluster structure
//! at small `n`.
//!
//! Vectors are packed into `u32` codes with bit `n-1-i` set when `x_i = -1`,
//! so ascending codes are lexicographic order with `+1 < -1`. A row packed the
//! same way gives `Σ_i G_ri x_i = n - 2·popcount(g ^ x)`.

use rand::seq::index::sample;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{check_len, Error, Result};
use crate::model::Instance;
use crate::spin::SpinVector;

/// Default largest `n` accepted by [`enumerate_solutions`].
pub const DEFAULT_ENUM_CAP: usize = 22;
/// Components up to this size get exact all-pairs diameters.
pub const EXACT_DIAMETER_LIMIT: usize = 4096;
const APPROX_STARTS: usize = 64;
const CHUNK_BITS: u32 = 14;

fn encode(x: &[i8]) -> u32 {
    let n = x.len();
    x.iter().enumerate().filter(|(_, &v)| v < 0).fold(0u32, |acc, (i, _)| acc | 1 << (n - 1 - i))
}

fn decode(code: u32, n: usize) -> SpinVector {
    SpinVector::from_raw((0..n).map(|i| if code >> (n - 1 - i) & 1 == 1 { -1 } else { 1 }).collect())
}

/// All solutions of `instance` in lexicographic order.
pub fn enumerate_solutions(instance: &Instance) -> Result<Vec<SpinVector>> {
    enumerate_solutions_capped(instance, DEFAULT_ENUM_CAP)
}

pub fn enumerate_solutions_capped(instance: &Instance, cap: usize) -> Result<Vec<SpinVector>> {
    let n = instance.n();
    let codes = enumerate_codes(instance, cap.min(31))?;
    Ok(codes.into_iter().map(|c| decode(c, n)).collect())
}

fn enumerate_codes(instance: &Instance, cap: usize) -> Result<Vec<u32>> {
    let n = instance.n();
    if n > cap {
        return Err(Error::TooLarge { n, cap });
    }
    let rows: Vec<u32> = (0..instance.m()).map(|r| encode(instance.row(r))).collect();
    let ok: Vec<bool> = (0..=n).map(|ones| instance.row_ok(n as i64 - 2 * ones as i64, instance.kappa())).collect();
    let total: u64 = 1 << n;
    let chunk: u64 = 1 << CHUNK_BITS;
    let chunks = total.div_ceil(chunk);
    let found: Vec<Vec<u32>> = (0..chunks)
        .into_par_iter()
        .map(|c| {
            let lo = c * chunk;
            let hi = (lo + chunk).min(total);
            (lo..hi).map(|x| x as u32).filter(|&x| rows.iter().all(|&g| ok[(g ^ x).count_ones() as usize])).collect()
        })
        .collect();
    Ok(found.concat())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Component {
    pub size: usize,
    pub diameter: usize,
    /// False when the diameter is a lower bound from sampled eccentricities.
    pub diameter_exact: bool,
    /// Lexicographically smallest member.
    pub representative: SpinVector,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClusterCensus {
    pub n: usize,
    pub total_solutions: usize,
    /// Ordered by representative.
    pub components: Vec<Component>,
    pub isolated_count: usize,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub kappa_prime_tags: Option<Vec<bool>>,
}

struct UnionFind {
    parent: Vec<usize>,
}

impl UnionFind {
    fn new(n: usize) -> Self {
        UnionFind { parent: (0..n).collect() }
    }

    fn find(&mut self, mut a: usize) -> usize {
        while self.parent[a] != a {
            self.parent[a] = self.parent[self.parent[a]];
            a = self.parent[a];
        }
        a
    }

    fn union(&mut self, a: usize, b: usize) {
        let (ra, rb) = (self.find(a), self.find(b));
        if ra != rb {
            // Keep the smaller index as root so roots are the smallest members.
            let (lo, hi) = if ra < rb { (ra, rb) } else { (rb, ra) };
            self.parent[hi] = lo;
        }
    }
}

/// Component labels per code (indices into the returned member lists).
fn components_of(codes: &[u32], n: usize) -> (Vec<usize>, Vec<Vec<u32>>) {
    let mut uf = UnionFind::new(codes.len());
    for (i, &c) in codes.iter().enumerate() {
        for b in 0..n {
            let nb = c ^ (1 << b);
            if nb > c {
                if let Ok(j) = codes.binary_search(&nb) {
                    uf.union(i, j);
                }
            }
        }
    }
    let mut label = vec![usize::MAX; codes.len()];
    let mut members: Vec<Vec<u32>> = Vec::new();
    let mut root_label = vec![usize::MAX; codes.len()];
    for i in 0..codes.len() {
        let r = uf.find(i);
        if root_label[r] == usize::MAX {
            root_label[r] = members.len();
            members.push(Vec::new());
        }
        label[i] = root_label[r];
        members[root_label[r]].push(codes[i]);
    }
    (label, members)
}

fn diameter(members: &[u32], seed: u64) -> (usize, bool) {
    let ecc = |a: u32| members.iter().map(|&b| (a ^ b).count_ones() as usize).max().unwrap_or(0);
    if members.len() <= EXACT_DIAMETER_LIMIT {
        (members.par_iter().map(|&a| ecc(a)).max().unwrap_or(0), true)
    } else {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let starts = sample(&mut rng, members.len(), APPROX_STARTS.min(members.len()));
        (starts.into_vec().into_par_iter().map(|i| ecc(members[i])).max().unwrap_or(0), false)
    }
}

fn sorted_codes(instance: &Instance, solutions: &[SpinVector]) -> Result<Vec<u32>> {
    let n = instance.n();
    if n > 31 {
        return Err(Error::TooLarge { n, cap: 31 });
    }
    let mut codes = Vec::with_capacity(solutions.len());
    for s in solutions {
        check_len(n, s.len())?;
        codes.push(encode(s));
    }
    codes.sort_unstable();
    codes.dedup();
    Ok(codes)
}

/// Connected components of `solutions` under single-coordinate flips.
pub fn cluster_census(instance: &Instance, solutions: &[SpinVector]) -> Result<ClusterCensus> {
    census_with_labels(instance, solutions).map(|(c, _, _)| c)
}

fn census_with_labels(instance: &Instance, solutions: &[SpinVector]) -> Result<(ClusterCensus, Vec<u32>, Vec<usize>)> {
    let n = instance.n();
    let codes = sorted_codes(instance, solutions)?;
    let (label, members) = components_of(&codes, n);
    let components: Vec<Component> = members
        .iter()
        .enumerate()
        .map(|(i, mem)| {
            let (diameter, diameter_exact) = diameter(mem, instance.seed() ^ i as u64);
            Component { size: mem.len(), diameter, diameter_exact, representative: decode(mem[0], n) }
        })
        .collect();
    let census = ClusterCensus {
        n,
        total_solutions: codes.len(),
        isolated_count: components.iter().filter(|c| c.size == 1).count(),
        components,
        kappa_prime_tags: None,
    };
    Ok((census, codes, label))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MarginCensus {
    pub kappa_prime: f64,
    pub threshold: usize,
    /// Per input solution: whether it is a κ′-solution.
    pub flags: Vec<bool>,
    pub flagged: usize,
    /// Fraction of κ′-solutions whose component has diameter ≥ `threshold`;
    /// `None` when there are no κ′-solutions.
    pub fraction_in_wide: Option<f64>,
    pub census: ClusterCensus,
}

/// Flags the κ′-solutions among `solutions` and measures how many sit in
/// components of diameter at least `threshold`.
pub fn margin_census(
    instance: &Instance,
    solutions: &[SpinVector],
    kappa_prime: f64,
    threshold: usize,
) -> Result<MarginCensus> {
    let (mut census, codes, label) = census_with_labels(instance, solutions)?;
    let mut flags = Vec::with_capacity(solutions.len());
    let mut flagged = 0;
    let mut wide = 0;
    for s in solutions {
        let flag = instance.is_margin_solution(s, kappa_prime)?;
        if flag {
            flagged += 1;
            let idx = codes.binary_search(&encode(s)).expect("solution codes are indexed");
            if census.components[label[idx]].diameter >= threshold {
                wide += 1;
            }
        }
        flags.push(flag);
    }
    census.kappa_prime_tags = Some(flags.clone());
    Ok(MarginCensus {
        kappa_prime,
        threshold,
        flags,
        flagged,
        fraction_in_wide: (flagged > 0).then(|| wide as f64 / flagged as f64),
        census,
    })
}
