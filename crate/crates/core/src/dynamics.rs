//! Score engine and stochastic dynamics: pairwise-comparison Monte Carlo to
//! fixation, and an exact absorbing-chain oracle on all `2^N` states for
//! small graphs.

use crate::coalescence::trial_rng;
use crate::graph::WeightedGraph;
use crate::solver::{bicgstab, Csr, SparseOutcome};
use crate::theory::GameScores;
use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Guard on elementary updates per run.
pub const DEFAULT_MAX_STEPS: u64 = 1_000_000_000;
/// Largest vertex count the exact `2^N` oracle accepts.
pub const EXACT_MAX_N: usize = 14;

#[derive(Debug, Error)]
pub enum DynamicsError {
    #[error("selection intensity must be nonnegative, got {0}")]
    NegativeBeta(f64),
    #[error("run {run} exceeded {max_steps} elementary steps without fixation")]
    MaxStepsExceeded { run: u64, max_steps: u64 },
    #[error("exact chain limited to n <= {limit}, got n = {n}")]
    TooLarge { n: usize, limit: usize },
    #[error("linear solve for the exact chain stalled (residual {residual:.3e})")]
    NotConverged { residual: f64 },
    #[error("slope extrapolation ill-conditioned: estimates {0:.6e} and {1:.6e} disagree")]
    IllConditioned(f64, f64),
    #[error("runs must be >= 1")]
    NoRuns,
}

/// Binary opinion vector, one byte per vertex (1 = A, 0 = B).
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct OpinionState(Vec<u8>);

impl OpinionState {
    pub fn new(bits: Vec<u8>) -> Self {
        assert!(bits.iter().all(|&b| b <= 1), "opinions must be 0 or 1");
        OpinionState(bits)
    }

    pub fn all_b(n: usize) -> Self {
        OpinionState(vec![0; n])
    }

    pub fn all_a(n: usize) -> Self {
        OpinionState(vec![1; n])
    }

    pub fn single_a(n: usize, vertex: usize) -> Self {
        let mut bits = vec![0; n];
        bits[vertex] = 1;
        OpinionState(bits)
    }

    pub fn from_mask(n: usize, mask: u64) -> Self {
        OpinionState((0..n).map(|i| ((mask >> i) & 1) as u8).collect())
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn get(&self, i: usize) -> u8 {
        self.0[i]
    }

    pub fn set(&mut self, i: usize, v: u8) {
        self.0[i] = v;
    }

    pub fn count_a(&self) -> usize {
        self.0.iter().filter(|&&b| b == 1).count()
    }

    pub fn bits(&self) -> &[u8] {
        &self.0
    }
}

/// Edge-weighted accumulated score of vertex `i`, via the closed form
/// `W pi_i ((a-b-c+d) s_i s_i^(1) + (b-d) s_i + (c-d) s_i^(1) + d)`.
pub fn accumulated_score(
    g: &WeightedGraph,
    scores: &GameScores,
    s: &OpinionState,
    i: usize,
) -> f64 {
    let s_i = s.get(i) as f64;
    let s1: f64 = g
        .neighbors(i)
        .iter()
        .map(|&(j, _)| g.step_prob(i, j) * s.get(j) as f64)
        .sum();
    let wpi = g.total_weight() * g.stationary(i);
    wpi * ((scores.a - scores.b - scores.c + scores.d) * s_i * s1
        + (scores.b - scores.d) * s_i
        + (scores.c - scores.d) * s1
        + scores.d)
}

/// The same quantity as the direct neighbor sum of pairwise scores times
/// edge weights; kept as the independent route for equality checks.
pub fn accumulated_score_direct(
    g: &WeightedGraph,
    scores: &GameScores,
    s: &OpinionState,
    i: usize,
) -> f64 {
    g.neighbors(i)
        .iter()
        .map(|&(j, w)| w * scores.pairwise(s.get(i), s.get(j)))
        .sum()
}

/// Total score `f_i = s_i delta_A + (1 - s_i) delta_B + P_i(s)`.
pub fn total_score(g: &WeightedGraph, scores: &GameScores, s: &OpinionState, i: usize) -> f64 {
    let basic = if s.get(i) == 1 {
        scores.delta_a
    } else {
        scores.delta_b
    };
    basic + accumulated_score(g, scores, s, i)
}

/// Total scores of every vertex at once.
pub fn total_scores(g: &WeightedGraph, scores: &GameScores, s: &OpinionState) -> Vec<f64> {
    (0..g.n()).map(|i| total_score(g, scores, s, i)).collect()
}

/// Numerically stable logistic, valid for any sign and magnitude of the
/// argument.
pub(crate) fn fermi(score_gap: f64, beta: f64) -> f64 {
    let x = beta * score_gap;
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}

/// Fermi imitation probability `1 / (1 + exp(-beta (f_j - f_i)))`.
pub fn imitation_prob(f_i: f64, f_j: f64, beta: f64) -> Result<f64, DynamicsError> {
    if beta < 0.0 {
        return Err(DynamicsError::NegativeBeta(beta));
    }
    Ok(fermi(f_j - f_i, beta))
}

/// How the focal individual of an elementary update is drawn.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub enum FocalChoice {
    /// Uniformly over vertices (the embedded chain of unit-rate updates).
    #[default]
    Uniform,
    /// Proportionally to the stationary weight `pi_i`.
    StationaryWeighted,
}

#[derive(Debug, Clone, Copy)]
pub struct RunOptions {
    pub max_steps: u64,
    pub focal: FocalChoice,
}

impl Default for RunOptions {
    fn default() -> Self {
        RunOptions {
            max_steps: DEFAULT_MAX_STEPS,
            focal: FocalChoice::Uniform,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct FixationOutcome {
    pub a_fixed: bool,
    pub steps: u64,
}

struct Engine<'a> {
    g: &'a WeightedGraph,
    scores: GameScores,
    beta: f64,
    s: OpinionState,
    f: Vec<f64>,
    count_a: usize,
    cum_pi: Vec<f64>,
}

impl<'a> Engine<'a> {
    fn new(g: &'a WeightedGraph, scores: &GameScores, beta: f64, s: OpinionState) -> Self {
        let f = total_scores(g, scores, &s);
        let count_a = s.count_a();
        let mut cum = 0.0;
        let cum_pi = (0..g.n())
            .map(|i| {
                cum += g.stationary(i);
                cum
            })
            .collect();
        Engine {
            g,
            scores: *scores,
            beta,
            s,
            f,
            count_a,
            cum_pi,
        }
    }

    fn pick_focal(&self, focal: FocalChoice, rng: &mut impl Rng) -> usize {
        match focal {
            FocalChoice::Uniform => rng.gen_range(0..self.g.n()),
            FocalChoice::StationaryWeighted => {
                let u = rng.gen::<f64>();
                match self
                    .cum_pi
                    .binary_search_by(|probe| probe.partial_cmp(&u).unwrap())
                {
                    Ok(idx) | Err(idx) => idx.min(self.g.n() - 1),
                }
            }
        }
    }

    fn pick_neighbor(&self, i: usize, rng: &mut impl Rng) -> usize {
        let mut u = rng.gen::<f64>() * self.g.strength(i);
        for &(j, w) in self.g.neighbors(i) {
            if u < w {
                return j;
            }
            u -= w;
        }
        self.g.neighbors(i).last().unwrap().0
    }

    /// One elementary update. RNG consumption is fixed per event shape so
    /// neutral trajectories do not depend on score parameters.
    fn step(&mut self, focal: FocalChoice, rng: &mut impl Rng) {
        let i = self.pick_focal(focal, rng);
        let j = self.pick_neighbor(i, rng);
        if self.s.get(i) == self.s.get(j) {
            return;
        }
        let accept = fermi(self.f[j] - self.f[i], self.beta);
        if rng.gen::<f64>() >= accept {
            return;
        }
        self.flip(i);
    }

    /// Flips `s_i`, updating only `f_i` and its neighbors' totals.
    fn flip(&mut self, i: usize) {
        let old = self.s.get(i);
        let new = 1 - old;
        self.s.set(i, new);
        self.count_a = if new == 1 {
            self.count_a + 1
        } else {
            self.count_a - 1
        };
        for &(j, w) in self.g.neighbors(i) {
            let s_j = self.s.get(j);
            self.f[j] += w * (self.scores.pairwise(s_j, new) - self.scores.pairwise(s_j, old));
        }
        self.f[i] = total_score(self.g, &self.scores, &self.s, i);
    }

    fn absorbed(&self) -> Option<bool> {
        if self.count_a == 0 {
            Some(false)
        } else if self.count_a == self.g.n() {
            Some(true)
        } else {
            None
        }
    }
}

/// Runs one trajectory from the given initial state to fixation.
pub fn run_to_fixation_from(
    g: &WeightedGraph,
    scores: &GameScores,
    beta: f64,
    initial: OpinionState,
    opts: RunOptions,
    rng: &mut impl Rng,
) -> Result<FixationOutcome, DynamicsError> {
    if beta < 0.0 {
        return Err(DynamicsError::NegativeBeta(beta));
    }
    assert_eq!(initial.len(), g.n());
    let mut engine = Engine::new(g, scores, beta, initial);
    let mut steps = 0u64;
    loop {
        if let Some(a_fixed) = engine.absorbed() {
            return Ok(FixationOutcome { a_fixed, steps });
        }
        if steps >= opts.max_steps {
            return Err(DynamicsError::MaxStepsExceeded {
                run: 0,
                max_steps: opts.max_steps,
            });
        }
        engine.step(opts.focal, rng);
        steps += 1;
    }
}

/// Runs one trajectory from the protocol's initial condition: all B except
/// one uniformly chosen A seed.
pub fn run_to_fixation(
    g: &WeightedGraph,
    scores: &GameScores,
    beta: f64,
    seed: u64,
) -> Result<FixationOutcome, DynamicsError> {
    let mut rng = trial_rng(seed, 0);
    let seed_vertex = rng.gen_range(0..g.n());
    run_to_fixation_from(
        g,
        scores,
        beta,
        OpinionState::single_a(g.n(), seed_vertex),
        RunOptions::default(),
        &mut rng,
    )
}

/// Monte Carlo fixation estimate over independent runs.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SimEstimate {
    pub runs: u64,
    pub fix_a: u64,
    pub rho_hat: f64,
    pub se: f64,
    pub seed: u64,
    pub beta: f64,
    pub mean_steps: f64,
}

/// Estimates the fixation probability of A from `runs` independent runs with
/// per-run RNG streams derived from `(seed, run index)`; results are
/// bit-identical regardless of worker count.
pub fn estimate_fixation(
    g: &WeightedGraph,
    scores: &GameScores,
    beta: f64,
    runs: u64,
    seed: u64,
) -> Result<SimEstimate, DynamicsError> {
    estimate_fixation_opts(g, scores, beta, runs, seed, RunOptions::default())
}

pub fn estimate_fixation_opts(
    g: &WeightedGraph,
    scores: &GameScores,
    beta: f64,
    runs: u64,
    seed: u64,
    opts: RunOptions,
) -> Result<SimEstimate, DynamicsError> {
    if runs == 0 {
        return Err(DynamicsError::NoRuns);
    }
    if beta < 0.0 {
        return Err(DynamicsError::NegativeBeta(beta));
    }
    let results: Result<Vec<(bool, u64)>, DynamicsError> = (0..runs)
        .into_par_iter()
        .map(|run| {
            let mut rng = trial_rng(seed, run);
            let seed_vertex = rng.gen_range(0..g.n());
            let initial = OpinionState::single_a(g.n(), seed_vertex);
            run_to_fixation_from(g, scores, beta, initial, opts, &mut rng)
                .map(|o| (o.a_fixed, o.steps))
                .map_err(|e| match e {
                    DynamicsError::MaxStepsExceeded { max_steps, .. } => {
                        DynamicsError::MaxStepsExceeded { run, max_steps }
                    }
                    other => other,
                })
        })
        .collect();
    let results = results?;
    let fix_a = results.iter().filter(|&&(a, _)| a).count() as u64;
    let total_steps: u64 = results.iter().map(|&(_, s)| s).sum();
    let rho_hat = fix_a as f64 / runs as f64;
    let se = (rho_hat * (1.0 - rho_hat) / runs as f64).sqrt();
    Ok(SimEstimate {
        runs,
        fix_a,
        rho_hat,
        se,
        seed,
        beta,
        mean_steps: total_steps as f64 / runs as f64,
    })
}

/// Initial condition of the exact oracle.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Initial {
    Vertex(usize),
    /// Mean over the `n` single-A seeds.
    UAverage,
}

/// Absorption probability into all-A of the exact evolutionary chain on all
/// `2^n` states. Accepts any finite `beta` (negative values are used
/// internally for central differences).
pub fn exact_fixation(
    g: &WeightedGraph,
    scores: &GameScores,
    beta: f64,
    initial: Initial,
) -> Result<f64, DynamicsError> {
    exact_fixation_opts(g, scores, beta, initial, FocalChoice::Uniform)
}

pub fn exact_fixation_opts(
    g: &WeightedGraph,
    scores: &GameScores,
    beta: f64,
    initial: Initial,
    focal: FocalChoice,
) -> Result<f64, DynamicsError> {
    let n = g.n();
    if n > EXACT_MAX_N {
        return Err(DynamicsError::TooLarge {
            n,
            limit: EXACT_MAX_N,
        });
    }
    let full: u64 = (1u64 << n) - 1;
    let n_states = (1usize << n) - 2; // transient states
    let row_of = |mask: u64| (mask - 1) as usize; // masks 1..full-1
    let focal_prob = |i: usize| match focal {
        FocalChoice::Uniform => 1.0 / n as f64,
        FocalChoice::StationaryWeighted => g.stationary(i),
    };
    let mut row_ptr = Vec::with_capacity(n_states + 1);
    let mut cols = Vec::new();
    let mut vals = Vec::new();
    let mut rhs = vec![0.0; n_states];
    let mut guess = vec![0.0; n_states];
    row_ptr.push(0);
    for mask in 1..full {
        let s = OpinionState::from_mask(n, mask);
        let f = total_scores(g, scores, &s);
        let mut total_rate = 0.0;
        let mut entries: Vec<(u64, f64)> = Vec::new();
        for i in 0..n {
            for &(j, _) in g.neighbors(i) {
                if s.get(i) == s.get(j) {
                    continue;
                }
                let rate = focal_prob(i) * g.step_prob(i, j) * fermi(f[j] - f[i], beta);
                if rate == 0.0 {
                    continue;
                }
                total_rate += rate;
                entries.push((mask ^ (1 << i), rate));
            }
        }
        let row = row_of(mask);
        // (total_rate) h(s) - sum rate h(s') = rate-to-allA
        cols.push(row);
        vals.push(total_rate);
        let diag_idx = vals.len() - 1;
        for (target, rate) in entries {
            if target == full {
                rhs[row] += rate;
            } else if target == 0 {
                // absorbed into all-B, contributes nothing
            } else {
                let col = row_of(target);
                if col == row {
                    vals[diag_idx] -= rate;
                } else {
                    cols.push(col);
                    vals.push(rate);
                }
            }
        }
        // negate off-diagonals
        for idx in (diag_idx + 1)..vals.len() {
            vals[idx] = -vals[idx];
        }
        row_ptr.push(cols.len());
        // the neutral solution (degree-weighted frequency) is a good start
        guess[row] = (0..n)
            .filter(|&i| s.get(i) == 1)
            .map(|i| g.stationary(i))
            .sum();
    }
    let a = Csr {
        n: n_states,
        row_ptr,
        cols,
        vals,
    };
    let h = match bicgstab(&a, &rhs, guess, 1e-14, 20_000) {
        SparseOutcome::Converged(h) => h,
        SparseOutcome::Stalled { residual } => {
            return Err(DynamicsError::NotConverged { residual })
        }
    };
    match initial {
        Initial::Vertex(v) => Ok(h[row_of(1u64 << v)]),
        Initial::UAverage => {
            Ok((0..n).map(|v| h[row_of(1u64 << v)]).sum::<f64>() / n as f64)
        }
    }
}

/// Weak-selection slope `d rho_A / d beta` at `beta = 0`, by
/// Richardson-extrapolated central differences of the exact oracle.
pub fn weak_slope_oracle(g: &WeightedGraph, scores: &GameScores) -> Result<f64, DynamicsError> {
    weak_slope_oracle_opts(g, scores, FocalChoice::Uniform)
}

pub fn weak_slope_oracle_opts(
    g: &WeightedGraph,
    scores: &GameScores,
    focal: FocalChoice,
) -> Result<f64, DynamicsError> {
    let central = |beta: f64| -> Result<f64, DynamicsError> {
        let plus = exact_fixation_opts(g, scores, beta, Initial::UAverage, focal)?;
        let minus = exact_fixation_opts(g, scores, -beta, Initial::UAverage, focal)?;
        Ok((plus - minus) / (2.0 * beta))
    };
    let s1 = central(1e-3)?;
    let s2 = central(5e-4)?;
    let s3 = central(2.5e-4)?;
    let r12 = (4.0 * s2 - s1) / 3.0;
    let r23 = (4.0 * s3 - s2) / 3.0;
    // absolute floor keeps near-zero slopes (at a critical ratio) from
    // tripping the relative check on pure round-off noise
    let scale = r23.abs().max(r12.abs());
    if (r12 - r23).abs() > 1e-4 * scale + 1e-9 {
        return Err(DynamicsError::IllConditioned(r12, r23));
    }
    Ok(r23)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::WeightedGraph;
    use proptest::prelude::*;
    use rand::Rng;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn generic_scores() -> GameScores {
        GameScores {
            a: 1.0,
            b: -0.5,
            c: -0.3,
            d: 0.8,
            delta_a: 0.2,
            delta_b: 0.1,
        }
    }

    #[test]
    fn accumulated_score_uniform_states() {
        let g = WeightedGraph::barabasi_albert(8, 3, 2, 1).unwrap();
        let scores = generic_scores();
        for i in 0..8 {
            let all_b = OpinionState::all_b(8);
            assert!(
                (accumulated_score(&g, &scores, &all_b, i) - g.strength(i) * scores.d).abs()
                    < 1e-12
            );
            let all_a = OpinionState::all_a(8);
            assert!(
                (accumulated_score(&g, &scores, &all_a, i) - g.strength(i) * scores.a).abs()
                    < 1e-12
            );
        }
    }

    #[test]
    fn accumulated_score_k2_mixed() {
        let g = WeightedGraph::complete(2).unwrap();
        let scores = generic_scores();
        let s = OpinionState::new(vec![1, 0]);
        assert!((accumulated_score(&g, &scores, &s, 0) - scores.b).abs() < 1e-15);
        assert!((accumulated_score(&g, &scores, &s, 1) - scores.c).abs() < 1e-15);
        assert!((total_score(&g, &scores, &s, 0) - (scores.delta_a + scores.b)).abs() < 1e-15);
        assert!((total_score(&g, &scores, &s, 1) - (scores.delta_b + scores.c)).abs() < 1e-15);
    }

    #[test]
    fn total_score_zero_scores() {
        let g = WeightedGraph::complete(5).unwrap();
        let s = OpinionState::new(vec![1, 0, 1, 0, 0]);
        for i in 0..5 {
            assert_eq!(total_score(&g, &GameScores::ZERO, &s, i), 0.0);
        }
    }

    #[test]
    fn imitation_prob_values() {
        assert_eq!(imitation_prob(1.0, 1.0, 3.0).unwrap(), 0.5);
        assert_eq!(imitation_prob(5.0, -2.0, 0.0).unwrap(), 0.5);
        let p = imitation_prob(0.0, 3f64.ln(), 1.0).unwrap();
        assert!((p - 0.75).abs() < 1e-15);
        assert!(matches!(
            imitation_prob(0.0, 0.0, -1.0),
            Err(DynamicsError::NegativeBeta(_))
        ));
        // stability at extreme arguments
        assert_eq!(fermi(1e6, 1.0), 1.0);
        assert_eq!(fermi(-1e6, 1.0), 0.0);
    }

    #[test]
    fn incremental_scores_match_full_recompute() {
        let g = WeightedGraph::barabasi_albert(8, 3, 2, 9).unwrap();
        let scores = generic_scores();
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let init = OpinionState::new((0..8).map(|_| rng.gen_range(0..2u8)).collect());
        let mut engine = Engine::new(&g, &scores, 0.2, init);
        for _ in 0..500 {
            engine.step(FocalChoice::Uniform, &mut rng);
            let fresh = total_scores(&g, &scores, &engine.s);
            for i in 0..8 {
                assert!((engine.f[i] - fresh[i]).abs() < 1e-10);
            }
            if engine.absorbed().is_some() {
                break;
            }
        }
    }

    #[test]
    fn k2_forced_seed_neutral_is_half() {
        let g = WeightedGraph::complete(2).unwrap();
        let mut a_wins = 0u32;
        let trials = 20_000;
        for t in 0..trials {
            let mut rng = trial_rng(77, t as u64);
            let out = run_to_fixation_from(
                &g,
                &GameScores::ZERO,
                0.0,
                OpinionState::single_a(2, 0),
                RunOptions::default(),
                &mut rng,
            )
            .unwrap();
            if out.a_fixed {
                a_wins += 1;
            }
        }
        let p = a_wins as f64 / trials as f64;
        assert!((p - 0.5).abs() < 0.02, "p = {p}");
    }

    #[test]
    fn neutral_trajectories_ignore_scores() {
        let g = WeightedGraph::newman_watts(10, 4, 0.2, 3).unwrap();
        let a = estimate_fixation(&g, &GameScores::ZERO, 0.0, 200, 5).unwrap();
        let b = estimate_fixation(&g, &generic_scores(), 0.0, 200, 5).unwrap();
        assert_eq!(a.fix_a, b.fix_a);
        assert_eq!(a.mean_steps, b.mean_steps);
    }

    #[test]
    fn estimate_single_run_degenerate() {
        let g = WeightedGraph::complete(3).unwrap();
        let e = estimate_fixation(&g, &GameScores::ZERO, 0.0, 1, 0).unwrap();
        assert!(e.rho_hat == 0.0 || e.rho_hat == 1.0);
        assert_eq!(e.se, 0.0);
        assert!(matches!(
            estimate_fixation(&g, &GameScores::ZERO, 0.0, 0, 0),
            Err(DynamicsError::NoRuns)
        ));
    }

    #[test]
    fn estimate_deterministic_across_pools() {
        let g = WeightedGraph::barabasi_albert(12, 3, 2, 8).unwrap();
        let run = |threads: usize| {
            rayon::ThreadPoolBuilder::new()
                .num_threads(threads)
                .build()
                .unwrap()
                .install(|| estimate_fixation(&g, &generic_scores(), 0.02, 500, 123).unwrap())
        };
        assert_eq!(run(1), run(4));
    }

    #[test]
    fn exact_neutral_baseline() {
        for g in [
            WeightedGraph::complete(5).unwrap(),
            WeightedGraph::barabasi_albert(8, 3, 2, 2).unwrap(),
        ] {
            let rho = exact_fixation(&g, &GameScores::ZERO, 0.0, Initial::UAverage).unwrap();
            assert!((rho - 1.0 / g.n() as f64).abs() < 1e-12);
            // all scores zero: F = 1/2 at every beta
            let rho = exact_fixation(&g, &GameScores::ZERO, 3.0, Initial::UAverage).unwrap();
            assert!((rho - 1.0 / g.n() as f64).abs() < 1e-12);
        }
        let too_big = WeightedGraph::complete(15).unwrap();
        assert!(matches!(
            exact_fixation(&too_big, &GameScores::ZERO, 0.0, Initial::UAverage),
            Err(DynamicsError::TooLarge { .. })
        ));
    }

    #[test]
    fn exact_k2_closed_form_slope() {
        // with only a basic-score difference delta on K_2 the absorption
        // probability is the logistic sigma(beta delta)
        let g = WeightedGraph::complete(2).unwrap();
        let delta = 0.8;
        let scores = GameScores {
            delta_a: delta,
            ..GameScores::ZERO
        };
        let beta = 1e-4;
        let plus = exact_fixation(&g, &scores, beta, Initial::UAverage).unwrap();
        let minus = exact_fixation(&g, &scores, -beta, Initial::UAverage).unwrap();
        let slope = (plus - minus) / (2.0 * beta);
        assert!((slope - delta / 4.0).abs() < 1e-6);
        let slope = weak_slope_oracle(&g, &scores).unwrap();
        assert!(((slope - delta / 4.0) / (delta / 4.0)).abs() < 1e-6);
    }

    #[test]
    fn weak_slope_zero_scores() {
        let g = WeightedGraph::complete(4).unwrap();
        let slope = weak_slope_oracle(&g, &GameScores::ZERO).unwrap();
        assert!(slope.abs() < 1e-9);
    }

    #[test]
    fn estimate_matches_exact_small_graphs() {
        let g = WeightedGraph::barabasi_albert(8, 3, 2, 6).unwrap();
        for beta in [0.0, 0.05] {
            let exact = exact_fixation(&g, &generic_scores(), beta, Initial::UAverage).unwrap();
            let est = estimate_fixation(&g, &generic_scores(), beta, 40_000, 9).unwrap();
            assert!(
                (est.rho_hat - exact).abs() <= 3.0 * est.se.max(1e-4),
                "beta={beta} exact={exact} est={} se={}",
                est.rho_hat,
                est.se
            );
        }
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(16))]
        #[test]
        fn closed_form_matches_direct_neighbor_sum(seed in 0u64..100, mask in 0u64..256) {
            let g = WeightedGraph::newman_watts(8, 2, 0.4, seed).unwrap();
            let scores = generic_scores();
            let s = OpinionState::from_mask(8, mask);
            for i in 0..8 {
                let closed = accumulated_score(&g, &scores, &s, i);
                let direct = accumulated_score_direct(&g, &scores, &s, i);
                prop_assert!((closed - direct).abs() <= 1e-12 * direct.abs().max(1.0));
            }
        }
    }
}
