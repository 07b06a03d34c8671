//! Weak-selection fixation theory: the state function `D'(s)`, its
//! expectation over coalescence times, the spreading condition, and the
//! critical score ratios for the special cases with only positive or only
//! negative feedback.

use crate::coalescence::{Convention, PairTimes, TripleTimes};
use crate::dynamics::{total_scores, OpinionState};
use crate::graph::WeightedGraph;
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum TheoryError {
    #[error("no finite threshold: denominator sum is {denominator}")]
    NoFiniteThreshold { denominator: f64 },
    #[error("tables were solved on a different graph (hash {expected} vs {got})")]
    TableMismatch { expected: String, got: String },
    #[error("opinion vector has length {got}, expected {expected}")]
    LengthMismatch { expected: usize, got: usize },
    #[error("graph is weighted; the simplified formulas require unit weights")]
    NotUnweighted,
    #[error("pair and triple tables disagree on the solved graph")]
    ConventionMismatch,
}

/// The six score parameters: feedback scores `a, b, c, d` and the basic
/// (public-knowledge) scores for each opinion.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GameScores {
    pub a: f64,
    pub b: f64,
    pub c: f64,
    pub d: f64,
    pub delta_a: f64,
    pub delta_b: f64,
}

impl GameScores {
    pub const ZERO: GameScores = GameScores {
        a: 0.0,
        b: 0.0,
        c: 0.0,
        d: 0.0,
        delta_a: 0.0,
        delta_b: 0.0,
    };

    /// Case II template: only positive feedback, `a = ratio * d`.
    pub fn case_ii(ratio: f64, d: f64) -> GameScores {
        GameScores {
            a: ratio * d,
            b: 0.0,
            c: 0.0,
            d,
            delta_a: 0.0,
            delta_b: 0.0,
        }
    }

    /// Case III template: only negative feedback, `b = ratio * c`.
    pub fn case_iii(ratio: f64, c: f64) -> GameScores {
        GameScores {
            a: 0.0,
            b: ratio * c,
            c,
            d: 0.0,
            delta_a: 0.0,
            delta_b: 0.0,
        }
    }

    /// Score of an `x`-opinion holder interacting with a `y`-opinion
    /// neighbor (1 = A, 0 = B).
    pub fn pairwise(&self, x: u8, y: u8) -> f64 {
        match (x, y) {
            (1, 1) => self.a,
            (1, 0) => self.b,
            (0, 1) => self.c,
            _ => self.d,
        }
    }

    pub fn scale(&self, lambda: f64) -> GameScores {
        GameScores {
            a: self.a * lambda,
            b: self.b * lambda,
            c: self.c * lambda,
            d: self.d * lambda,
            delta_a: self.delta_a * lambda,
            delta_b: self.delta_b * lambda,
        }
    }

    /// Sign-convention advisories: matched feedback positive, conflicting
    /// feedback negative. Violations are reported, not enforced.
    pub fn warnings(&self) -> Vec<String> {
        let mut out = Vec::new();
        if self.a < 0.0 {
            out.push(format!("a = {} is negative (positive feedback expected)", self.a));
        }
        if self.d < 0.0 {
            out.push(format!("d = {} is negative (positive feedback expected)", self.d));
        }
        if self.b > 0.0 {
            out.push(format!("b = {} is positive (negative feedback expected)", self.b));
        }
        if self.c > 0.0 {
            out.push(format!("c = {} is positive (negative feedback expected)", self.c));
        }
        out
    }
}

/// The four structure sums entering the expectation of `D'`, already carrying
/// the coalescence-time normalizations so that
/// `<D'> = (W/2)(a-b-c+d) s1 + (W/2)(b-d) s2 + (W/2)(c-d) s3
///         + ((delta_A-delta_B)/2) s4`.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct TermSums {
    pub convention: Convention,
    pub s1: f64,
    pub s2: f64,
    pub s3: f64,
    pub s4: f64,
}

/// Computes the structure sums from solved tables. Triple sums run over
/// ordered neighbor pairs `(j, k)` of each focal vertex, `j = k` included.
pub fn term_sums(
    g: &WeightedGraph,
    pair: &PairTimes,
    triple: &TripleTimes,
) -> Result<TermSums, TheoryError> {
    let hash = g.content_hash();
    if pair.graph_hash() != hash {
        return Err(TheoryError::TableMismatch {
            expected: hash,
            got: pair.graph_hash().to_string(),
        });
    }
    if triple.graph_hash() != hash {
        return Err(TheoryError::TableMismatch {
            expected: hash,
            got: triple.graph_hash().to_string(),
        });
    }
    let n = g.n() as f64;
    let convention = triple.convention();
    let mut s1 = 0.0;
    let mut s2 = 0.0;
    let mut s3 = 0.0;
    let mut s4 = 0.0;
    for i in 0..g.n() {
        let pi = g.stationary(i);
        for &(j, _) in g.neighbors(i) {
            let pij = g.step_prob(i, j);
            s2 += pi * pi * pij * pair.get(i, j) / (2.0 * n);
            s4 += pi * pij * pair.get(i, j) / (2.0 * n);
            for &(k, _) in g.neighbors(i) {
                let pik = g.step_prob(i, k);
                let triple_diff = match convention {
                    Convention::PaperLiteral => {
                        (triple.get(i, j, k) - triple.get(i, i, k)) / (3.0 * n)
                    }
                    Convention::Lineage => {
                        (triple.get(i, j, k) - pair.get(i, k) / 2.0) / n
                    }
                };
                s1 += pi * pi * pij * pik * triple_diff;
                s3 += pi * pi * pij * pik * (pair.get(j, k) - pair.get(i, k)) / (2.0 * n);
            }
        }
    }
    Ok(TermSums {
        convention,
        s1,
        s2,
        s3,
        s4,
    })
}

/// Weak-selection report: `<D'>`, its term decomposition, and the first-order
/// fixation probability line `rho_A(beta) = 1/N + beta <D'>`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct WeakSelectionReport {
    pub convention: Convention,
    pub dprime: f64,
    pub favored: bool,
    /// `[(a-b-c+d)-term, (b-d)-term, (c-d)-term, basic-score term]`
    pub terms: [f64; 4],
    pub n: usize,
    pub graph_hash: String,
}

impl WeakSelectionReport {
    pub fn rho_of_beta(&self, beta: f64) -> f64 {
        1.0 / self.n as f64 + beta * self.dprime
    }
}

/// Degree-weighted frequency of opinion A, `sum_i pi_i s_i`.
pub fn degree_weighted_frequency(
    g: &WeightedGraph,
    s: &OpinionState,
) -> Result<f64, TheoryError> {
    if s.len() != g.n() {
        return Err(TheoryError::LengthMismatch {
            expected: g.n(),
            got: s.len(),
        });
    }
    Ok((0..g.n())
        .filter(|&i| s.get(i) == 1)
        .map(|i| g.stationary(i))
        .sum())
}

/// The state function `D'(s) = (1/2) sum_i pi_i s_i (f_i - f_i^(1))`, with
/// `f_i^(1)` the step-probability average of neighbor total scores.
pub fn dprime_state(
    g: &WeightedGraph,
    scores: &GameScores,
    s: &OpinionState,
) -> Result<f64, TheoryError> {
    if s.len() != g.n() {
        return Err(TheoryError::LengthMismatch {
            expected: g.n(),
            got: s.len(),
        });
    }
    let f = total_scores(g, scores, s);
    let mut acc = 0.0;
    for i in 0..g.n() {
        if s.get(i) == 0 {
            continue;
        }
        let f1: f64 = g
            .neighbors(i)
            .iter()
            .map(|&(j, _)| g.step_prob(i, j) * f[j])
            .sum();
        acc += g.stationary(i) * (f[i] - f1);
    }
    Ok(0.5 * acc)
}

/// Expectation of `D'` over the single-mutant distribution, evaluated from
/// coalescence times under the triple table's convention.
pub fn dprime_expectation(
    g: &WeightedGraph,
    scores: &GameScores,
    pair: &PairTimes,
    triple: &TripleTimes,
) -> Result<WeakSelectionReport, TheoryError> {
    let sums = term_sums(g, pair, triple)?;
    Ok(report_from_sums(g, scores, &sums))
}

/// Same as [`dprime_expectation`] but reusing precomputed sums; sweeps call
/// this since the sums are score-independent.
pub fn report_from_sums(
    g: &WeightedGraph,
    scores: &GameScores,
    sums: &TermSums,
) -> WeakSelectionReport {
    let half_w = g.total_weight() / 2.0;
    let terms = [
        half_w * (scores.a - scores.b - scores.c + scores.d) * sums.s1,
        half_w * (scores.b - scores.d) * sums.s2,
        half_w * (scores.c - scores.d) * sums.s3,
        (scores.delta_a - scores.delta_b) / 2.0 * sums.s4,
    ];
    let dprime = terms.iter().sum();
    WeakSelectionReport {
        convention: sums.convention,
        dprime,
        favored: dprime > 0.0,
        terms,
        n: g.n(),
        graph_hash: g.content_hash(),
    }
}

/// Opinion A is favored to spread under weak selection iff `<D'> > 0`
/// (strictly; the neutral boundary counts as not favored).
pub fn favored(
    g: &WeightedGraph,
    scores: &GameScores,
    pair: &PairTimes,
    triple: &TripleTimes,
) -> Result<bool, TheoryError> {
    Ok(dprime_expectation(g, scores, pair, triple)?.favored)
}

/// Critical ratio `(a/d)*` for Case II (`delta_A = delta_B`, `b = c = 0`):
/// the root of `<D'>` in `a/d`, which is `(s2 + s3)/s1 - 1`.
pub fn critical_ratio_ad(
    g: &WeightedGraph,
    pair: &PairTimes,
    triple: &TripleTimes,
) -> Result<f64, TheoryError> {
    let sums = term_sums(g, pair, triple)?;
    critical_ratio_ad_from_sums(&sums)
}

pub fn critical_ratio_ad_from_sums(sums: &TermSums) -> Result<f64, TheoryError> {
    if sums.s1 <= 0.0 {
        return Err(TheoryError::NoFiniteThreshold {
            denominator: sums.s1,
        });
    }
    Ok((sums.s2 + sums.s3) / sums.s1 - 1.0)
}

/// Critical ratio `(b/c)*` for Case III (`delta_A = delta_B`, `a = d = 0`):
/// the root of `<D'>` in `b/c`, which is `(s1 - s3)/(s2 - s1)`.
pub fn critical_ratio_bc(
    g: &WeightedGraph,
    pair: &PairTimes,
    triple: &TripleTimes,
) -> Result<f64, TheoryError> {
    let sums = term_sums(g, pair, triple)?;
    critical_ratio_bc_from_sums(&sums)
}

pub fn critical_ratio_bc_from_sums(sums: &TermSums) -> Result<f64, TheoryError> {
    let denom = sums.s2 - sums.s1;
    if denom <= 0.0 {
        return Err(TheoryError::NoFiniteThreshold { denominator: denom });
    }
    Ok((sums.s1 - sums.s3) / denom)
}

/// Degree-only structure sums for unit-weight graphs, kept un-normalized the
/// way the simplified threshold formulas state them.
fn unweighted_sums(
    g: &WeightedGraph,
    pair: &PairTimes,
    triple: &TripleTimes,
) -> Result<(f64, f64, f64), TheoryError> {
    if !g.is_unweighted() {
        return Err(TheoryError::NotUnweighted);
    }
    let mut a1 = 0.0; // triple-difference sum, in continuous-time units
    let mut a2 = 0.0; // sum of w_i tau_ij over edges
    let mut a3 = 0.0; // pair-difference sum
    for i in 0..g.n() {
        let deg = g.degree(i) as f64;
        for &(j, _) in g.neighbors(i) {
            a2 += deg * pair.get(i, j);
            for &(k, _) in g.neighbors(i) {
                a3 += pair.get(j, k) - pair.get(i, k);
                a1 += match triple.convention() {
                    Convention::PaperLiteral => {
                        (triple.get(i, j, k) - triple.get(i, i, k)) / 3.0
                    }
                    Convention::Lineage => triple.get(i, j, k) - pair.get(i, k) / 2.0,
                };
            }
        }
    }
    Ok((a1, a2, a3))
}

/// `(a/d)*` via the unit-weight simplification (degrees only); cross-checks
/// the general formula on unweighted graphs.
pub fn critical_ratio_ad_unweighted(
    g: &WeightedGraph,
    pair: &PairTimes,
    triple: &TripleTimes,
) -> Result<f64, TheoryError> {
    let (a1, a2, a3) = unweighted_sums(g, pair, triple)?;
    if a1 <= 0.0 {
        return Err(TheoryError::NoFiniteThreshold { denominator: a1 });
    }
    Ok((a2 / 2.0 + a3 / 2.0) / a1 - 1.0)
}

/// `(b/c)*` via the unit-weight simplification.
pub fn critical_ratio_bc_unweighted(
    g: &WeightedGraph,
    pair: &PairTimes,
    triple: &TripleTimes,
) -> Result<f64, TheoryError> {
    let (a1, a2, a3) = unweighted_sums(g, pair, triple)?;
    let denom = a2 / 2.0 - a1;
    if denom <= 0.0 {
        return Err(TheoryError::NoFiniteThreshold { denominator: denom });
    }
    Ok((a1 - a3 / 2.0) / denom)
}
