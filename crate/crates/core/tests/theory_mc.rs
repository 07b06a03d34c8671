//! Monte Carlo consistency between the state functional D'(s) and its
//! coalescence-time expectation: time-integrating D' along neutral
//! trajectories from a uniform single-A seed must reproduce <D'>.

use fixnet::coalescence::{pair_times, triple_times, Convention, DEFAULT_MAX_ITER, DEFAULT_TOL};
use fixnet::dynamics::OpinionState;
use fixnet::theory::{dprime_expectation, dprime_state, GameScores};
use fixnet::WeightedGraph;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

/// Integral of D'(S(t)) dt along one neutral trajectory; each elementary
/// update advances time by 1/N.
fn neutral_integral(g: &WeightedGraph, scores: &GameScores, rng: &mut ChaCha8Rng) -> f64 {
    let n = g.n();
    let seed_vertex = rng.gen_range(0..n);
    let mut s = OpinionState::single_a(n, seed_vertex);
    let mut count = 1usize;
    let mut acc = 0.0;
    let dt = 1.0 / n as f64;
    while count != 0 && count != n {
        acc += dprime_state(g, scores, &s).unwrap() * dt;
        let i = rng.gen_range(0..n);
        let neighbors = g.neighbors(i);
        let mut draw = rng.gen::<f64>() * g.strength(i);
        let mut j = neighbors[neighbors.len() - 1].0;
        for &(v, w) in neighbors {
            if draw < w {
                j = v;
                break;
            }
            draw -= w;
        }
        // beta = 0: imitation probability is exactly 1/2
        if rng.gen::<bool>() && s.get(i) != s.get(j) {
            let new = s.get(j);
            s.set(i, new);
            count = if new == 1 { count + 1 } else { count - 1 };
        }
    }
    acc
}

fn check_graph(g: &WeightedGraph, scores: &GameScores, trials: u64, seed: u64) {
    let pair = pair_times(g, DEFAULT_TOL, DEFAULT_MAX_ITER).unwrap();
    let triple = triple_times(g, &pair, Convention::Lineage, DEFAULT_TOL, DEFAULT_MAX_ITER).unwrap();
    let expected = dprime_expectation(g, scores, &pair, &triple).unwrap().dprime;
    let samples: Vec<f64> = (0..trials)
        .into_par_iter()
        .map(|t| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed ^ (t.wrapping_mul(0x9e3779b97f4a7c15)));
            neutral_integral(g, scores, &mut rng)
        })
        .collect();
    let mean = samples.iter().sum::<f64>() / trials as f64;
    let var = samples.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (trials - 1) as f64;
    let se = (var / trials as f64).sqrt();
    assert!(
        (mean - expected).abs() <= 3.0 * se,
        "time-integrated D' = {mean} +- {se} vs expectation {expected}"
    );
}

#[test]
fn complete_graph_matches_expectation() {
    let g = WeightedGraph::complete(5).unwrap();
    let scores = GameScores {
        a: 1.0,
        b: -0.3,
        c: -0.2,
        d: 0.8,
        delta_a: 0.1,
        delta_b: 0.0,
    };
    check_graph(&g, &scores, 40_000, 11);
}

#[test]
fn star_matches_expectation() {
    let star: Vec<_> = (1..5).map(|v| (0, v, 1.0)).collect();
    let g = WeightedGraph::from_edge_list(&star).unwrap();
    check_graph(&g, &GameScores::case_ii(3.0, 1.0), 40_000, 12);
}

#[test]
fn weighted_graph_matches_expectation() {
    let g = WeightedGraph::from_edge_list(&[
        (0, 1, 2.0),
        (0, 2, 1.0),
        (1, 2, 0.5),
        (2, 3, 1.5),
        (3, 4, 1.0),
        (4, 0, 0.7),
    ])
    .unwrap();
    let scores = GameScores {
        a: 0.5,
        b: -1.0,
        c: -0.5,
        d: 1.5,
        delta_a: 0.0,
        delta_b: 0.2,
    };
    check_graph(&g, &scores, 60_000, 13);
}
