//! Expected coalescence times of two and three random walkers on the lazy
//! neutral walk, solved by Gauss-Seidel sweeps over canonical states, plus a
//! direct walker simulation used to validate the solved tables.
//!
//! Triple times come in two conventions that differ in how an already
//! coalesced pair is treated:
//!
//! * `PaperLiteral` — three labeled walkers, one chosen uniformly per event;
//!   a coalesced pair moves as a block when either of its labels is chosen
//!   (so the block effectively carries double step weight). Values are in
//!   discrete steps; continuous time is `value / 3` throughout.
//! * `Lineage` — coalesced walkers merge into a single token; each surviving
//!   token is equally likely to move and an event among `m` tokens advances
//!   continuous time by `1/m`. Values are directly in continuous time, and a
//!   state with a coalesced pair reduces to the pair problem at unit rate.

use crate::graph::WeightedGraph;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

pub const DEFAULT_TOL: f64 = 1e-12;
pub const DEFAULT_MAX_ITER: usize = 1_000_000;

#[derive(Debug, Error)]
pub enum CoalescenceError {
    #[error("solver did not converge after {iters} sweeps (residual {residual:.3e})")]
    NotConverged { iters: usize, residual: f64 },
    #[error("tables were solved on a different graph (hash {expected} vs {got})")]
    ConventionMismatch { expected: String, got: String },
    #[error("invalid start vertex {0}")]
    InvalidStart(usize),
    #[error("tolerance must be positive, got {0}")]
    BadTolerance(f64),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Convention {
    PaperLiteral,
    Lineage,
}

impl std::fmt::Display for Convention {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Convention::PaperLiteral => write!(f, "paper-literal"),
            Convention::Lineage => write!(f, "lineage"),
        }
    }
}

impl std::str::FromStr for Convention {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "paper-literal" | "paper_literal" | "paper" => Ok(Convention::PaperLiteral),
            "lineage" => Ok(Convention::Lineage),
            other => Err(format!("unknown convention '{other}'")),
        }
    }
}

/// Solved pairwise coalescence times in discrete steps, symmetric with zero
/// diagonal.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PairTimes {
    n: usize,
    tau: Vec<f64>,
    graph_hash: String,
}

impl PairTimes {
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.tau[i * self.n + j]
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn graph_hash(&self) -> &str {
        &self.graph_hash
    }

    /// Max-norm residual of the defining recurrence.
    pub fn residual(&self, g: &WeightedGraph) -> f64 {
        let n = self.n;
        let mut worst: f64 = 0.0;
        for i in 0..n {
            for j in (i + 1)..n {
                let mut rhs = 1.0;
                rhs += 0.5 * (0.5 * self.get(j, i) + 0.5 * self.get(i, j));
                for &(x, _) in g.neighbors(i) {
                    rhs += 0.5 * g.neutral_step(i, x) * self.get(j, x);
                }
                for &(x, _) in g.neighbors(j) {
                    rhs += 0.5 * g.neutral_step(j, x) * self.get(i, x);
                }
                worst = worst.max((self.get(i, j) - rhs).abs());
            }
        }
        worst
    }
}

/// Adaptive successive over-relaxation schedule for the Gauss-Seidel
/// sweeps: a few plain sweeps estimate the contraction rate from the
/// delta ratio, then omega jumps to the classic optimum
/// `2 / (1 + sqrt(1 - rho))`. Divergence backs omega off toward 1; the
/// caller verifies the true residual, so the schedule only affects speed.
struct Relaxation {
    omega: f64,
    sweeps: usize,
    delta_at_mark: f64,
    last_delta: f64,
    growing: usize,
}

impl Relaxation {
    const WARMUP: usize = 12;

    fn new() -> Self {
        Relaxation {
            omega: 1.0,
            sweeps: 0,
            delta_at_mark: f64::NAN,
            last_delta: f64::INFINITY,
            growing: 0,
        }
    }

    fn omega(&self) -> f64 {
        self.omega
    }

    fn observe(&mut self, max_delta: f64) {
        self.sweeps += 1;
        if max_delta > self.last_delta {
            self.growing += 1;
            if self.growing >= 3 && self.omega > 1.0 {
                self.omega = 1.0 + (self.omega - 1.0) * 0.5;
                self.growing = 0;
            }
        } else {
            self.growing = 0;
        }
        self.last_delta = max_delta;
        if self.sweeps == Self::WARMUP / 2 {
            self.delta_at_mark = max_delta;
        }
        if self.sweeps == Self::WARMUP && self.delta_at_mark > 0.0 && max_delta > 0.0 {
            let per_sweep = (max_delta / self.delta_at_mark)
                .powf(1.0 / (Self::WARMUP as f64 / 2.0));
            if per_sweep < 1.0 {
                self.omega = (2.0 / (1.0 + (1.0 - per_sweep).max(0.0).sqrt())).min(1.95);
            }
        }
    }
}

/// Solves the pair recurrence
/// `tau_ij = 1 + (1/2) sum_x (p~_ix tau_jx + p~_jx tau_ix)`, `tau_ii = 0`
/// by Gauss-Seidel with the self-coupling (coefficient 1/2) folded into the
/// diagonal.
pub fn pair_times(
    g: &WeightedGraph,
    tol: f64,
    max_iter: usize,
) -> Result<PairTimes, CoalescenceError> {
    if !(tol > 0.0) {
        return Err(CoalescenceError::BadTolerance(tol));
    }
    let n = g.n();
    let mut tau = vec![0.0f64; n * n];
    let mut iters = 0;
    let mut residual = f64::INFINITY;
    let mut relax = Relaxation::new();
    while iters < max_iter {
        let omega = relax.omega();
        let mut max_delta: f64 = 0.0;
        for i in 0..n {
            for j in (i + 1)..n {
                let mut off = 0.0;
                for &(x, _) in g.neighbors(i) {
                    off += g.neutral_step(i, x) * tau[j * n + x];
                }
                for &(x, _) in g.neighbors(j) {
                    off += g.neutral_step(j, x) * tau[i * n + x];
                }
                let old = tau[i * n + j];
                let new = old + omega * (2.0 + off - old);
                max_delta = max_delta.max((new - old).abs());
                tau[i * n + j] = new;
                tau[j * n + i] = new;
            }
        }
        iters += 1;
        relax.observe(max_delta);
        // rounding floors max_delta near machine precision, so also check
        // the true residual periodically
        if max_delta <= tol * 0.1 || iters % 100 == 0 {
            let table = PairTimes {
                n,
                tau: tau.clone(),
                graph_hash: g.content_hash(),
            };
            residual = table.residual(g);
            if residual <= tol {
                return Ok(table);
            }
        }
    }
    Err(CoalescenceError::NotConverged { iters, residual })
}

/// Dense Gaussian-elimination solve of the same pair system, used as an
/// independent cross-check on small graphs.
pub fn pair_times_dense(g: &WeightedGraph) -> PairTimes {
    let n = g.n();
    let states: Vec<(usize, usize)> = (0..n)
        .flat_map(|i| ((i + 1)..n).map(move |j| (i, j)))
        .collect();
    let idx = |i: usize, j: usize| -> Option<usize> {
        if i == j {
            return None;
        }
        let (a, b) = (i.min(j), i.max(j));
        Some(a * n - a * (a + 1) / 2 + (b - a - 1))
    };
    let m = states.len();
    let mut mat = vec![0.0f64; m * m];
    let mut rhs = vec![1.0f64; m];
    for (row, &(i, j)) in states.iter().enumerate() {
        mat[row * m + row] = 1.0 - 0.5; // self-coupling via the lazy loops
        for &(x, _) in g.neighbors(i) {
            if let Some(col) = idx(j, x) {
                mat[row * m + col] -= 0.5 * g.neutral_step(i, x);
            }
        }
        for &(x, _) in g.neighbors(j) {
            if let Some(col) = idx(i, x) {
                mat[row * m + col] -= 0.5 * g.neutral_step(j, x);
            }
        }
    }
    let sol = crate::solver::dense_solve(&mut mat, &mut rhs, m);
    let mut tau = vec![0.0f64; n * n];
    for (row, &(i, j)) in states.iter().enumerate() {
        tau[i * n + j] = sol[row];
        tau[j * n + i] = sol[row];
    }
    PairTimes {
        n,
        tau,
        graph_hash: g.content_hash(),
    }
}

/// Solved triple coalescence times keyed by sorted vertex triple.
///
/// Under `PaperLiteral` every not-all-equal multiset `(u <= v <= w)` is an
/// unknown of the five-case recurrence, in discrete steps. Under `Lineage`
/// only distinct triples are unknowns (in continuous time); repeated-index
/// entries hold the pair boundary `tau_uv / 2`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TripleTimes {
    n: usize,
    convention: Convention,
    values: Vec<f64>,
    graph_hash: String,
}

impl TripleTimes {
    /// Value for walkers starting at `(i, j, k)` in any order.
    pub fn get(&self, i: usize, j: usize, k: usize) -> f64 {
        let (a, b, c) = sort3(i, j, k);
        self.values[(a * self.n + b) * self.n + c]
    }

    fn set(&mut self, i: usize, j: usize, k: usize, v: f64) {
        let (a, b, c) = sort3(i, j, k);
        self.values[(a * self.n + b) * self.n + c] = v;
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn convention(&self) -> Convention {
        self.convention
    }

    pub fn graph_hash(&self) -> &str {
        &self.graph_hash
    }

    /// Max-norm residual of the defining recurrence over the unknown states.
    pub fn residual(&self, g: &WeightedGraph, pair: &PairTimes) -> f64 {
        let n = self.n;
        let mut worst: f64 = 0.0;
        match self.convention {
            Convention::PaperLiteral => {
                for u in 0..n {
                    for w in 0..n {
                        if u == w {
                            continue;
                        }
                        // state (u, u, w)
                        let mut rhs = 1.0;
                        rhs += (2.0 / 3.0) * 0.5 * self.get(u, u, w); // pair stays
                        rhs += (1.0 / 3.0) * 0.5 * self.get(u, u, w); // single stays
                        for &(x, _) in g.neighbors(u) {
                            rhs += (2.0 / 3.0) * g.neutral_step(u, x) * self.get(x, x, w);
                        }
                        for &(x, _) in g.neighbors(w) {
                            rhs += (1.0 / 3.0) * g.neutral_step(w, x) * self.get(u, u, x);
                        }
                        worst = worst.max((self.get(u, u, w) - rhs).abs());
                    }
                }
                for i in 0..n {
                    for j in (i + 1)..n {
                        for k in (j + 1)..n {
                            let mut rhs = 1.0 + 0.5 * self.get(i, j, k);
                            for &(x, _) in g.neighbors(i) {
                                rhs += (1.0 / 3.0) * g.neutral_step(i, x) * self.get(x, j, k);
                            }
                            for &(x, _) in g.neighbors(j) {
                                rhs += (1.0 / 3.0) * g.neutral_step(j, x) * self.get(i, x, k);
                            }
                            for &(x, _) in g.neighbors(k) {
                                rhs += (1.0 / 3.0) * g.neutral_step(k, x) * self.get(i, j, x);
                            }
                            worst = worst.max((self.get(i, j, k) - rhs).abs());
                        }
                    }
                }
            }
            Convention::Lineage => {
                let boundary = |a: usize, b: usize, c: usize| -> f64 {
                    if a == b && b == c {
                        0.0
                    } else if a == b {
                        pair.get(a, c) / 2.0
                    } else if b == c || a == c {
                        pair.get(a, b) / 2.0
                    } else {
                        self.get(a, b, c)
                    }
                };
                for i in 0..n {
                    for j in (i + 1)..n {
                        for k in (j + 1)..n {
                            let mut rhs = 1.0 / 3.0 + 0.5 * self.get(i, j, k);
                            for &(x, _) in g.neighbors(i) {
                                rhs += (1.0 / 3.0) * g.neutral_step(i, x) * boundary(x, j, k);
                            }
                            for &(x, _) in g.neighbors(j) {
                                rhs += (1.0 / 3.0) * g.neutral_step(j, x) * boundary(i, x, k);
                            }
                            for &(x, _) in g.neighbors(k) {
                                rhs += (1.0 / 3.0) * g.neutral_step(k, x) * boundary(i, j, x);
                            }
                            worst = worst.max((self.get(i, j, k) - rhs).abs());
                        }
                    }
                }
            }
        }
        worst
    }
}

fn sort3(i: usize, j: usize, k: usize) -> (usize, usize, usize) {
    let mut v = [i, j, k];
    v.sort_unstable();
    (v[0], v[1], v[2])
}

/// Solves the triple coalescence-time system under the given convention.
pub fn triple_times(
    g: &WeightedGraph,
    pair: &PairTimes,
    convention: Convention,
    tol: f64,
    max_iter: usize,
) -> Result<TripleTimes, CoalescenceError> {
    if !(tol > 0.0) {
        return Err(CoalescenceError::BadTolerance(tol));
    }
    let hash = g.content_hash();
    if pair.graph_hash() != hash {
        return Err(CoalescenceError::ConventionMismatch {
            expected: hash,
            got: pair.graph_hash().to_string(),
        });
    }
    let n = g.n();
    let mut table = TripleTimes {
        n,
        convention,
        values: vec![0.0; n * n * n],
        graph_hash: hash,
    };
    match convention {
        Convention::PaperLiteral => {
            // The doubled-index states form a closed subsystem; solve them
            // first, then the distinct triples against them.
            solve_paper_doubled(g, &mut table, tol, max_iter)?;
            solve_distinct(g, pair, &mut table, tol, max_iter)?;
        }
        Convention::Lineage => {
            for i in 0..n {
                for j in 0..n {
                    if i != j {
                        table.set(i, i, j, pair.get(i, j) / 2.0);
                    }
                }
            }
            solve_distinct(g, pair, &mut table, tol, max_iter)?;
        }
    }
    Ok(table)
}

fn solve_paper_doubled(
    g: &WeightedGraph,
    table: &mut TripleTimes,
    tol: f64,
    max_iter: usize,
) -> Result<(), CoalescenceError> {
    let n = g.n();
    // unknowns keyed by (doubled vertex u, single vertex w)
    let mut t = vec![0.0f64; n * n];
    let mut iters = 0;
    let mut relax = Relaxation::new();
    loop {
        let omega = relax.omega();
        let mut max_delta: f64 = 0.0;
        for u in 0..n {
            for w in 0..n {
                if u == w {
                    continue;
                }
                let mut off = 0.0;
                for &(x, _) in g.neighbors(u) {
                    if x != w {
                        off += 2.0 * g.neutral_step(u, x) * t[x * n + w];
                    }
                }
                for &(x, _) in g.neighbors(w) {
                    if x != u {
                        off += g.neutral_step(w, x) * t[u * n + x];
                    }
                }
                let old = t[u * n + w];
                let new = old + omega * (2.0 + (2.0 / 3.0) * off - old);
                max_delta = max_delta.max((new - old).abs());
                t[u * n + w] = new;
            }
        }
        iters += 1;
        relax.observe(max_delta);
        if max_delta <= tol * 0.05 || iters % 100 == 0 {
            // subsystem residual of the printed recurrence
            let mut worst: f64 = 0.0;
            for u in 0..n {
                for w in 0..n {
                    if u == w {
                        continue;
                    }
                    let mut rhs = 1.0 + 0.5 * t[u * n + w];
                    for &(x, _) in g.neighbors(u) {
                        if x != w {
                            rhs += (2.0 / 3.0) * g.neutral_step(u, x) * t[x * n + w];
                        }
                    }
                    for &(x, _) in g.neighbors(w) {
                        if x != u {
                            rhs += (1.0 / 3.0) * g.neutral_step(w, x) * t[u * n + x];
                        }
                    }
                    worst = worst.max((t[u * n + w] - rhs).abs());
                }
            }
            if worst <= tol * 0.5 {
                break;
            }
        }
        if iters >= max_iter {
            return Err(CoalescenceError::NotConverged {
                iters,
                residual: max_delta,
            });
        }
    }
    for u in 0..n {
        for w in 0..n {
            if u != w {
                table.set(u, u, w, t[u * n + w]);
            }
        }
    }
    Ok(())
}

fn solve_distinct(
    g: &WeightedGraph,
    pair: &PairTimes,
    table: &mut TripleTimes,
    tol: f64,
    max_iter: usize,
) -> Result<(), CoalescenceError> {
    let n = g.n();
    let states: Vec<(usize, usize, usize)> = (0..n)
        .flat_map(|i| {
            ((i + 1)..n).flat_map(move |j| ((j + 1)..n).map(move |k| (i, j, k)))
        })
        .collect();
    let (constant, scale) = match table.convention {
        Convention::PaperLiteral => (2.0, 2.0 / 3.0),
        Convention::Lineage => (2.0 / 3.0, 2.0 / 3.0),
    };
    let mut iters = 0;
    let mut relax = Relaxation::new();
    loop {
        let omega = relax.omega();
        let mut max_delta: f64 = 0.0;
        for &(i, j, k) in &states {
            let mut off = 0.0;
            for &(x, _) in g.neighbors(i) {
                off += g.neutral_step(i, x) * table.get(x, j, k);
            }
            for &(x, _) in g.neighbors(j) {
                off += g.neutral_step(j, x) * table.get(i, x, k);
            }
            for &(x, _) in g.neighbors(k) {
                off += g.neutral_step(k, x) * table.get(i, j, x);
            }
            let old = table.get(i, j, k);
            let new = old + omega * (constant + scale * off - old);
            max_delta = max_delta.max((new - old).abs());
            table.set(i, j, k, new);
        }
        iters += 1;
        relax.observe(max_delta);
        if max_delta <= tol * 0.05 || iters % 100 == 0 {
            let residual = table.residual(g, pair);
            if residual <= tol {
                return Ok(());
            }
            if iters >= max_iter {
                return Err(CoalescenceError::NotConverged { iters, residual });
            }
        } else if iters >= max_iter {
            return Err(CoalescenceError::NotConverged {
                iters,
                residual: max_delta,
            });
        }
    }
}

/// Sample mean and standard error of a simulated coalescence time.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct SimTime {
    pub mean: f64,
    pub se: f64,
    pub trials: u64,
}

/// Direct discrete-event simulation of the walker process from 2 or 3 start
/// vertices, reported in the convention's time units (discrete steps for
/// `PaperLiteral`, continuous time for `Lineage`).
pub fn simulate_coalescence(
    g: &WeightedGraph,
    starts: &[usize],
    convention: Convention,
    trials: u64,
    seed: u64,
) -> Result<SimTime, CoalescenceError> {
    assert!(
        starts.len() == 2 || starts.len() == 3,
        "2 or 3 start vertices required"
    );
    for &v in starts {
        if v >= g.n() {
            return Err(CoalescenceError::InvalidStart(v));
        }
    }
    let samples: Vec<f64> = (0..trials)
        .into_par_iter()
        .map(|trial| {
            let mut rng = trial_rng(seed, trial);
            simulate_once(g, starts, convention, &mut rng)
        })
        .collect();
    let mean = samples.iter().sum::<f64>() / trials as f64;
    let var = samples.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>()
        / (trials as f64 * (trials as f64 - 1.0).max(1.0));
    Ok(SimTime {
        mean,
        se: var.sqrt(),
        trials,
    })
}

pub(crate) fn trial_rng(seed: u64, index: u64) -> ChaCha8Rng {
    let mut key = [0u8; 32];
    key[..8].copy_from_slice(&seed.to_le_bytes());
    key[8..16].copy_from_slice(&index.to_le_bytes());
    ChaCha8Rng::from_seed(key)
}

/// One lazy-walk step from `v`: stay with probability 1/2, otherwise move to
/// a neighbor with probability `p_vj`.
fn lazy_step(g: &WeightedGraph, v: usize, rng: &mut impl Rng) -> usize {
    if rng.gen::<f64>() < 0.5 {
        return v;
    }
    let mut u = rng.gen::<f64>() * g.strength(v);
    for &(j, w) in g.neighbors(v) {
        if u < w {
            return j;
        }
        u -= w;
    }
    g.neighbors(v).last().unwrap().0
}

fn simulate_once(
    g: &WeightedGraph,
    starts: &[usize],
    convention: Convention,
    rng: &mut impl Rng,
) -> f64 {
    let mut pos: Vec<usize> = starts.to_vec();
    // group id per walker; walkers sharing a vertex have coalesced
    let mut group: Vec<usize> = (0..pos.len()).collect();
    for a in 0..pos.len() {
        for b in 0..a {
            if pos[a] == pos[b] {
                group[a] = group[b];
                break;
            }
        }
    }
    let mut time = 0.0;
    loop {
        let groups: Vec<usize> = {
            let mut gs: Vec<usize> = group.clone();
            gs.sort_unstable();
            gs.dedup();
            gs
        };
        if groups.len() == 1 {
            return time;
        }
        let moved_group = match convention {
            Convention::PaperLiteral => {
                // choose a walker label; its whole group moves
                time += 1.0;
                group[rng.gen_range(0..pos.len())]
            }
            Convention::Lineage => {
                // choose a surviving token; time runs at the token count's rate
                time += 1.0 / groups.len() as f64;
                groups[rng.gen_range(0..groups.len())]
            }
        };
        let from = pos[group.iter().position(|&gid| gid == moved_group).unwrap()];
        let to = lazy_step(g, from, rng);
        for w in 0..pos.len() {
            if group[w] == moved_group {
                pos[w] = to;
            }
        }
        // merge any groups now sharing a vertex
        for a in 0..pos.len() {
            for b in 0..a {
                if pos[a] == pos[b] && group[a] != group[b] {
                    let (ga, gb) = (group[a], group[b]);
                    for gg in group.iter_mut() {
                        if *gg == ga {
                            *gg = gb;
                        }
                    }
                }
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::WeightedGraph;
    use proptest::prelude::*;
    use rand::Rng;

    fn k(n: usize) -> WeightedGraph {
        WeightedGraph::complete(n).unwrap()
    }

    #[test]
    fn pair_times_k2() {
        let t = pair_times(&k(2), 1e-12, 100_000).unwrap();
        assert!((t.get(0, 1) - 2.0).abs() < 1e-10);
        assert_eq!(t.get(0, 0), 0.0);
    }

    #[test]
    fn pair_times_complete_closed_form() {
        for n in [3usize, 5, 10, 20] {
            let t = pair_times(&k(n), 1e-12, 1_000_000).unwrap();
            for i in 0..n {
                for j in 0..n {
                    let expect = if i == j { 0.0 } else { 2.0 * (n as f64 - 1.0) };
                    assert!(
                        (t.get(i, j) - expect).abs() < 1e-9,
                        "n={n} tau({i},{j})={}",
                        t.get(i, j)
                    );
                }
            }
        }
    }

    #[test]
    fn pair_times_path3_hand_solution() {
        let g = WeightedGraph::from_edge_list(&[(0, 1, 1.0), (1, 2, 1.0)]).unwrap();
        let t = pair_times(&g, 1e-13, 1_000_000).unwrap();
        assert!((t.get(0, 1) - 10.0 / 3.0).abs() < 1e-10);
        assert!((t.get(1, 2) - 10.0 / 3.0).abs() < 1e-10);
        assert!((t.get(0, 2) - 16.0 / 3.0).abs() < 1e-10);
    }

    #[test]
    fn pair_times_matches_dense_solve() {
        let g = WeightedGraph::newman_watts(12, 4, 0.3, 5).unwrap();
        let gs = pair_times(&g, 1e-13, 1_000_000).unwrap();
        let dense = pair_times_dense(&g);
        for i in 0..12 {
            for j in 0..12 {
                assert!((gs.get(i, j) - dense.get(i, j)).abs() < 1e-9);
            }
        }
    }

    #[test]
    fn triple_k2_both_conventions() {
        let g = k(2);
        let pair = pair_times(&g, 1e-13, 100_000).unwrap();
        let paper = triple_times(&g, &pair, Convention::PaperLiteral, 1e-12, 100_000).unwrap();
        assert!((paper.get(0, 0, 1) - 2.0).abs() < 1e-10);
        assert!((paper.get(0, 1, 0) - 2.0).abs() < 1e-10);
        assert_eq!(paper.get(1, 1, 1), 0.0);
        let lin = triple_times(&g, &pair, Convention::Lineage, 1e-12, 100_000).unwrap();
        assert!((lin.get(0, 0, 1) - 1.0).abs() < 1e-10);
        assert_eq!(lin.get(0, 0, 0), 0.0);
    }

    #[test]
    fn triple_residuals_small_random_graphs() {
        for seed in 0..4u64 {
            let g = WeightedGraph::newman_watts(4 + 2 * seed as usize, 2, 0.4, seed).unwrap();
            let pair = pair_times(&g, 1e-12, 1_000_000).unwrap();
            assert!(pair.residual(&g) <= 1e-12);
            for conv in [Convention::PaperLiteral, Convention::Lineage] {
                let t = triple_times(&g, &pair, conv, 1e-12, 1_000_000).unwrap();
                assert!(t.residual(&g, &pair) <= 1e-12, "seed={seed} conv={conv}");
            }
        }
    }

    #[test]
    fn triple_permutation_symmetry_via_relabeling() {
        let g = WeightedGraph::newman_watts(8, 4, 0.3, 9).unwrap();
        let n = g.n();
        // relabel vertices by a fixed permutation and re-solve
        let perm: Vec<usize> = vec![3, 0, 6, 1, 7, 2, 5, 4];
        let relabeled: Vec<_> = g
            .edges()
            .iter()
            .map(|&(i, j, w)| (perm[i], perm[j], w))
            .collect();
        let h = WeightedGraph::from_edge_list(&relabeled).unwrap();
        let pg = pair_times(&g, 1e-12, 1_000_000).unwrap();
        let ph = pair_times(&h, 1e-12, 1_000_000).unwrap();
        for conv in [Convention::PaperLiteral, Convention::Lineage] {
            let tg = triple_times(&g, &pg, conv, 1e-12, 1_000_000).unwrap();
            let th = triple_times(&h, &ph, conv, 1e-12, 1_000_000).unwrap();
            for i in 0..n {
                for j in 0..n {
                    for k2 in 0..n {
                        let a = tg.get(i, j, k2);
                        let b = th.get(perm[i], perm[j], perm[k2]);
                        assert!((a - b).abs() <= 1e-9, "conv={conv} ({i},{j},{k2})");
                    }
                }
            }
        }
    }

    #[test]
    fn pair_table_from_other_graph_rejected() {
        let g = k(4);
        let h = k(5);
        let pair = pair_times(&h, 1e-12, 100_000).unwrap();
        assert!(matches!(
            triple_times(&g, &pair, Convention::Lineage, 1e-12, 100_000),
            Err(CoalescenceError::ConventionMismatch { .. })
        ));
    }

    #[test]
    fn simulation_trivial_cases() {
        let g = k(3);
        let s = simulate_coalescence(&g, &[1, 1], Convention::PaperLiteral, 100, 0).unwrap();
        assert_eq!(s.mean, 0.0);
        let s = simulate_coalescence(&g, &[2, 2, 2], Convention::Lineage, 100, 0).unwrap();
        assert_eq!(s.mean, 0.0);
    }

    #[test]
    fn simulation_matches_k2_tables() {
        let g = k(2);
        let s = simulate_coalescence(&g, &[0, 1], Convention::PaperLiteral, 100_000, 1).unwrap();
        assert!((s.mean - 2.0).abs() <= 3.0 * s.se, "mean={} se={}", s.mean, s.se);
        let s = simulate_coalescence(&g, &[0, 0, 1], Convention::PaperLiteral, 100_000, 2).unwrap();
        assert!((s.mean - 2.0).abs() <= 3.0 * s.se);
        let s = simulate_coalescence(&g, &[0, 0, 1], Convention::Lineage, 100_000, 3).unwrap();
        assert!((s.mean - 1.0).abs() <= 3.0 * s.se);
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(8))]
        #[test]
        fn weight_scaling_leaves_tables_unchanged(seed in 0u64..20, lambda in 0.2f64..5.0) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let n = 6;
            let mut entries = Vec::new();
            for v in 1..n {
                entries.push((rng.gen_range(0..v), v, rng.gen_range(0.2..2.0)));
            }
            let g = WeightedGraph::from_edge_list(&entries).unwrap();
            let scaled: Vec<_> = entries.iter().map(|&(i, j, w)| (i, j, w * lambda)).collect();
            let h = WeightedGraph::from_edge_list(&scaled).unwrap();
            let pg = pair_times(&g, 1e-12, 1_000_000).unwrap();
            let ph = pair_times(&h, 1e-12, 1_000_000).unwrap();
            for i in 0..n {
                for j in 0..n {
                    prop_assert!((pg.get(i, j) - ph.get(i, j)).abs() <= 1e-8);
                }
            }
            let tg = triple_times(&g, &pg, Convention::Lineage, 1e-12, 1_000_000).unwrap();
            let th = triple_times(&h, &ph, Convention::Lineage, 1e-12, 1_000_000).unwrap();
            for i in 0..n {
                for j in 0..n {
                    for k2 in 0..n {
                        prop_assert!((tg.get(i, j, k2) - th.get(i, j, k2)).abs() <= 1e-8);
                    }
                }
            }
        }
    }
}
