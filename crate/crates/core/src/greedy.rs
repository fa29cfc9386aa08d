//! Weight reduction over equivalent measurements.
//!
//! Given commuting measured operators `P_1..P_{r-1}` with outcomes `σ_j` and a
//! new operator `P_r`, every candidate `P_r · ∏_{j∈W} (-1)^{σ_j} P_j` yields
//! the same outcome on the current state. The structured search (greedy order
//! `go`) visits subsets of size `a` and `r-1-a` for `a = 0..=go`.

use std::collections::BTreeMap;

use rand::seq::index;
use rand::Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::pauli::PauliOperator;

pub const BRUTE_FORCE_MAX_R: usize = 20;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum GreedyError {
    #[error("operator list has {ops} entries but outcome list has {outcomes}")]
    Misaligned { ops: usize, outcomes: usize },
    #[error("brute force limited to r <= {BRUTE_FORCE_MAX_R}, got r = {0}")]
    TooLarge(usize),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GreedyMode {
    #[default]
    Off,
    Structured,
    Randomized,
    BruteForce,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct GreedyConfig {
    pub mode: GreedyMode,
    pub go: usize,
    /// Randomized mode only; defaults to the structured count for `go`.
    pub candidate_budget: Option<u64>,
    pub seed: u64,
}

impl GreedyConfig {
    pub fn off() -> Self {
        Self::default()
    }

    pub fn structured(go: usize) -> Self {
        Self { mode: GreedyMode::Structured, go, ..Self::default() }
    }

    pub fn randomized(go: usize, seed: u64) -> Self {
        Self { mode: GreedyMode::Randomized, go, candidate_budget: None, seed }
    }

    pub fn brute_force() -> Self {
        Self { mode: GreedyMode::BruteForce, ..Self::default() }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GreedyResult {
    /// The operator to measure, sign folded in.
    pub operator: PauliOperator,
    pub original_weight: usize,
    pub weight: usize,
    /// Loop iterations of the structured enumeration, skipped duplicates
    /// included and the incumbent (empty subset) excluded.
    pub visits: u64,
    /// Candidates actually formed and compared.
    pub distinct: u64,
    /// Chosen subset (indices into the measured list).
    pub subset: Vec<usize>,
}

pub fn binomial(n: u64, k: u64) -> u128 {
    if k > n {
        return 0;
    }
    let k = k.min(n - k);
    let mut acc: u128 = 1;
    for i in 0..k {
        acc = acc * (n - i) as u128 / (i + 1) as u128;
    }
    acc
}

/// Structured count at step `r` (1-based): `2·Σ_{a=0}^{min(go,r-1)} C(r-1,a) − 1`.
pub fn step_count(r: usize, go: usize) -> u128 {
    assert!(r >= 1);
    let m = (r - 1) as u64;
    let s: u128 = (0..=go.min(r - 1) as u64).map(|a| binomial(m, a)).sum();
    2 * s - 1
}

/// `τ_greedy(t, go) = Σ_{r=1}^{t} step_count(r, go)`.
pub fn candidate_count(t: usize, go: usize) -> u128 {
    (1..=t).map(|r| step_count(r, go)).sum()
}

/// Letter-only view used in the inner loops.
struct Letters {
    words: usize,
    // [x words | z words] per operator
    ops: Vec<Vec<u64>>,
    target: Vec<u64>,
}

impl Letters {
    fn new(lp: &[PauliOperator], p_r: &PauliOperator) -> Self {
        let pack = |p: &PauliOperator| -> Vec<u64> {
            p.x_words().iter().chain(p.z_words()).copied().collect()
        };
        Self {
            words: p_r.x_words().len(),
            ops: lp.iter().map(pack).collect(),
            target: pack(p_r),
        }
    }

    fn weight(&self, v: &[u64]) -> usize {
        (0..self.words)
            .map(|w| (v[w] | v[w + self.words]).count_ones() as usize)
            .sum()
    }

    fn weight_of(&self, base: &[u64], subset: &[usize], scratch: &mut Vec<u64>) -> usize {
        scratch.clear();
        scratch.extend_from_slice(base);
        for &j in subset {
            for (s, o) in scratch.iter_mut().zip(&self.ops[j]) {
                *s ^= o;
            }
        }
        self.weight(scratch)
    }
}

/// Exact candidate with sign: `p_r · ∏_{j∈W} (-1)^{σ_j} P_j`.
pub fn build_candidate(
    lp: &[PauliOperator],
    ls: &[bool],
    p_r: &PauliOperator,
    subset: &[usize],
) -> PauliOperator {
    let mut c = p_r.clone();
    for &j in subset {
        c = c.multiply(&lp[j]);
        c.negate_if(ls[j]);
    }
    c
}

fn check(lp: &[PauliOperator], ls: &[bool]) -> Result<(), GreedyError> {
    if lp.len() != ls.len() {
        return Err(GreedyError::Misaligned { ops: lp.len(), outcomes: ls.len() });
    }
    Ok(())
}

/// All `k`-subsets of `0..m` in lexicographic order.
fn combinations(m: usize, k: usize) -> Vec<Vec<usize>> {
    let mut out = Vec::new();
    if k > m {
        return out;
    }
    let mut idx: Vec<usize> = (0..k).collect();
    loop {
        out.push(idx.clone());
        let mut i = k;
        while i > 0 && idx[i - 1] == i - 1 + m - k {
            i -= 1;
        }
        if i == 0 {
            return out;
        }
        idx[i - 1] += 1;
        for j in i..k {
            idx[j] = idx[j - 1] + 1;
        }
    }
}

/// Enumerates the structured family, calling `visit(weight, subset)` once
/// per non-duplicate candidate. Returns `(visits, distinct)`.
fn enumerate_structured(
    letters: &Letters,
    m: usize,
    go: usize,
    mut visit: impl FnMut(usize, &dyn Fn() -> Vec<usize>),
) -> (u64, u64) {
    let mut scratch = Vec::new();
    let mut full = letters.target.clone();
    for op in &letters.ops {
        for (s, o) in full.iter_mut().zip(op) {
            *s ^= o;
        }
    }
    let mut done = vec![false; m + 1];
    let mut visits: u64 = 0;
    let mut distinct: u64 = 0;
    for a in 0..=go.min(m) {
        for size in [a, m - a] {
            let count = binomial(m as u64, size as u64) as u64;
            if done[size] {
                visits += count;
                continue;
            }
            done[size] = true;
            if size <= m - size {
                for w in combinations(m, size) {
                    visits += 1;
                    if w.is_empty() {
                        continue;
                    }
                    distinct += 1;
                    let weight = letters.weight_of(&letters.target, &w, &mut scratch);
                    visit(weight, &|| w.clone());
                }
            } else {
                // Complements of (m-size)-subsets, reversed, give the
                // lexicographic order of the size-`size` class.
                for comp in combinations(m, m - size).into_iter().rev() {
                    visits += 1;
                    distinct += 1;
                    let weight = letters.weight_of(&full, &comp, &mut scratch);
                    visit(weight, &|| complement(m, &comp));
                }
            }
        }
    }
    // The empty subset is the incumbent, not a comparison.
    (visits - 1, distinct)
}

fn complement(m: usize, w: &[usize]) -> Vec<usize> {
    let mut out = Vec::with_capacity(m - w.len());
    let mut it = w.iter().peekable();
    for j in 0..m {
        if it.peek() == Some(&&j) {
            it.next();
        } else {
            out.push(j);
        }
    }
    out
}

/// Structured greedy search (first strict improvement wins).
pub fn greedy_reduce(
    lp: &[PauliOperator],
    ls: &[bool],
    p_r: &PauliOperator,
    go: usize,
) -> Result<GreedyResult, GreedyError> {
    check(lp, ls)?;
    let letters = Letters::new(lp, p_r);
    let w0 = p_r.weight();
    let mut best = (w0, Vec::new());
    let (visits, distinct) = enumerate_structured(
        &letters,
        lp.len(),
        go,
        |w, subset| {
            if w < best.0 {
                best = (w, subset());
            }
        },
    );
    Ok(GreedyResult {
        operator: build_candidate(lp, ls, p_r, &best.1),
        original_weight: w0,
        weight: best.0,
        visits,
        distinct,
        subset: best.1,
    })
}

/// Samples `budget` random subsets (size uniform on `0..=r-1`).
pub fn randomized_reduce<R: Rng + ?Sized>(
    lp: &[PauliOperator],
    ls: &[bool],
    p_r: &PauliOperator,
    budget: u64,
    rng: &mut R,
) -> Result<GreedyResult, GreedyError> {
    check(lp, ls)?;
    let letters = Letters::new(lp, p_r);
    let m = lp.len();
    let w0 = p_r.weight();
    let mut best = (w0, Vec::new());
    let mut scratch = Vec::new();
    for _ in 0..budget {
        let size = rng.gen_range(0..=m);
        let mut w = index::sample(rng, m, size).into_vec();
        w.sort_unstable();
        let weight = letters.weight_of(&letters.target, &w, &mut scratch);
        if weight < best.0 {
            best = (weight, w);
        }
    }
    Ok(GreedyResult {
        operator: build_candidate(lp, ls, p_r, &best.1),
        original_weight: w0,
        weight: best.0,
        visits: budget,
        distinct: budget,
        subset: best.1,
    })
}

/// Exhaustive minimum over all `2^{r-1}` subsets.
pub fn brute_force_reduce(
    lp: &[PauliOperator],
    ls: &[bool],
    p_r: &PauliOperator,
) -> Result<GreedyResult, GreedyError> {
    check(lp, ls)?;
    let m = lp.len();
    if m + 1 > BRUTE_FORCE_MAX_R {
        return Err(GreedyError::TooLarge(m + 1));
    }
    let letters = Letters::new(lp, p_r);
    let mut cur = letters.target.clone();
    let w0 = letters.weight(&cur);
    let mut best = (w0, 0u64);
    // Gray code walk: step k flips the lowest set bit of k.
    let mut mask = 0u64;
    for k in 1u64..(1u64 << m) {
        let j = k.trailing_zeros() as usize;
        mask ^= 1 << j;
        for (s, o) in cur.iter_mut().zip(&letters.ops[j]) {
            *s ^= o;
        }
        let w = letters.weight(&cur);
        if w < best.0 {
            best = (w, mask);
        }
    }
    let subset: Vec<usize> = (0..m).filter(|&j| best.1 >> j & 1 == 1).collect();
    let n = (1u64 << m) - 1;
    Ok(GreedyResult {
        operator: build_candidate(lp, ls, p_r, &subset),
        original_weight: w0,
        weight: best.0,
        visits: n,
        distinct: n,
        subset,
    })
}

/// Dispatches on `cfg.mode`. `Off` returns `p_r` with zero counters.
pub fn reduce<R: Rng + ?Sized>(
    cfg: &GreedyConfig,
    lp: &[PauliOperator],
    ls: &[bool],
    p_r: &PauliOperator,
    rng: &mut R,
) -> Result<GreedyResult, GreedyError> {
    match cfg.mode {
        GreedyMode::Off => {
            check(lp, ls)?;
            let w = p_r.weight();
            Ok(GreedyResult {
                operator: p_r.clone(),
                original_weight: w,
                weight: w,
                visits: 0,
                distinct: 0,
                subset: Vec::new(),
            })
        }
        GreedyMode::Structured => greedy_reduce(lp, ls, p_r, cfg.go),
        GreedyMode::Randomized => {
            let budget = cfg
                .candidate_budget
                .unwrap_or_else(|| step_count(lp.len() + 1, cfg.go) as u64);
            randomized_reduce(lp, ls, p_r, budget, rng)
        }
        GreedyMode::BruteForce => brute_force_reduce(lp, ls, p_r),
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WeightHistogram {
    pub incumbent_weight: usize,
    /// weight → number of visited candidates with that weight.
    pub counts: BTreeMap<usize, u64>,
    pub below_incumbent_fraction: f64,
}

impl WeightHistogram {
    pub fn total(&self) -> u64 {
        self.counts.values().sum()
    }

    /// Rows of `step,weight,count,below_incumbent_fraction`.
    pub fn csv_rows(&self, step: usize) -> Vec<String> {
        self.counts
            .iter()
            .map(|(w, c)| format!("{step},{w},{c},{:.6}", self.below_incumbent_fraction))
            .collect()
    }
}

pub const HISTOGRAM_CSV_HEADER: &str = "step,weight,count,below_incumbent_fraction";

/// Weight distribution over the structured family's visit multiset (size
/// classes reached twice are counted twice, one empty subset is dropped), so
/// the total equals [`step_count`].
pub fn weight_histogram(
    lp: &[PauliOperator],
    ls: &[bool],
    p_r: &PauliOperator,
    go: usize,
) -> Result<WeightHistogram, GreedyError> {
    check(lp, ls)?;
    let letters = Letters::new(lp, p_r);
    let m = lp.len();
    let w0 = p_r.weight();
    let mut counts: BTreeMap<usize, u64> = BTreeMap::new();
    let mut scratch = Vec::new();
    for a in 0..=go.min(m) {
        for size in [a, m - a] {
            for w in combinations(m, size) {
                let weight = letters.weight_of(&letters.target, &w, &mut scratch);
                *counts.entry(weight).or_insert(0) += 1;
            }
        }
    }
    let c = counts.get_mut(&w0).expect("empty subset visited");
    *c -= 1;
    if *c == 0 {
        counts.remove(&w0);
    }
    let total: u64 = counts.values().sum();
    let below: u64 = counts.range(..w0).map(|(_, c)| c).sum();
    Ok(WeightHistogram {
        incumbent_weight: w0,
        counts,
        below_incumbent_fraction: if total == 0 { 0.0 } else { below as f64 / total as f64 },
    })
}
