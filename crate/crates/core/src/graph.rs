//! Weighted undirected graphs with the random-walk quantities used everywhere
//! else in this crate: step probabilities `p_ij`, stationary weights `pi_i`,
//! and the lazy (self-looped) step probabilities `p~_ij` of the neutral walk.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use sha2::{Digest, Sha256};
use std::collections::BTreeMap;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum GraphError {
    #[error("self-loop on vertex {0}")]
    SelfLoop(usize),
    #[error("edge ({0}, {1}) given in both orientations with different weights")]
    AsymmetricDuplicate(usize, usize),
    #[error("non-positive weight {weight} on edge ({i}, {j})")]
    NonPositiveWeight { i: usize, j: usize, weight: f64 },
    #[error("graph is disconnected ({} components, sizes {:?})", components.len(), components.iter().map(|c| c.len()).collect::<Vec<_>>())]
    Disconnected { components: Vec<Vec<usize>> },
    #[error("at least 2 vertices required, got {0}")]
    TooSmall(usize),
    #[error("ring lattice requires even k with 2 <= k < n, got k={k}, n={n}")]
    InvalidK { k: usize, n: usize },
    #[error("invalid generator parameters: {0}")]
    InvalidParams(String),
    #[error("edge list line {line}: {msg}")]
    Parse { line: usize, msg: String },
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
}

/// Undirected weighted connected graph, immutable after construction.
///
/// Adjacency is stored as per-vertex sorted `(neighbor, weight)` lists so all
/// downstream sums iterate neighbors only.
#[derive(Debug, Clone, PartialEq)]
pub struct WeightedGraph {
    n: usize,
    adj: Vec<Vec<(usize, f64)>>,
    strength: Vec<f64>,
    total_weight: f64,
}

impl WeightedGraph {
    /// Builds a graph from undirected edge entries `(i, j, weight)`.
    /// The vertex count is inferred as the maximum index plus one.
    pub fn from_edge_list(entries: &[(usize, usize, f64)]) -> Result<Self, GraphError> {
        Self::from_edge_list_sized(entries, None)
    }

    /// Same as [`from_edge_list`](Self::from_edge_list) but with an explicit
    /// vertex count (vertices with no edges then fail the connectivity check).
    pub fn from_edge_list_sized(
        entries: &[(usize, usize, f64)],
        n: Option<usize>,
    ) -> Result<Self, GraphError> {
        let mut weights: BTreeMap<(usize, usize), f64> = BTreeMap::new();
        let mut max_idx = 0usize;
        for &(i, j, w) in entries {
            if i == j {
                return Err(GraphError::SelfLoop(i));
            }
            if !(w > 0.0) || !w.is_finite() {
                return Err(GraphError::NonPositiveWeight { i, j, weight: w });
            }
            max_idx = max_idx.max(i).max(j);
            let key = (i.min(j), i.max(j));
            match weights.get(&key) {
                Some(&prev) if prev != w => {
                    return Err(GraphError::AsymmetricDuplicate(key.0, key.1));
                }
                _ => {
                    weights.insert(key, w);
                }
            }
        }
        let n = match n {
            Some(n) => {
                if max_idx >= n && !entries.is_empty() {
                    return Err(GraphError::InvalidParams(format!(
                        "vertex index {max_idx} out of range for n={n}"
                    )));
                }
                n
            }
            None => max_idx + 1,
        };
        if n < 2 {
            return Err(GraphError::TooSmall(n));
        }
        let mut adj = vec![Vec::new(); n];
        for (&(i, j), &w) in &weights {
            adj[i].push((j, w));
            adj[j].push((i, w));
        }
        for list in &mut adj {
            list.sort_unstable_by_key(|&(v, _)| v);
        }
        let g = Self::finish(n, adj)?;
        Ok(g)
    }

    fn finish(n: usize, adj: Vec<Vec<(usize, f64)>>) -> Result<Self, GraphError> {
        let strength: Vec<f64> = adj
            .iter()
            .map(|list| kahan_sum(list.iter().map(|&(_, w)| w)))
            .collect();
        let total_weight = kahan_sum(strength.iter().copied());
        let g = WeightedGraph {
            n,
            adj,
            strength,
            total_weight,
        };
        let components = g.components();
        if components.len() != 1 {
            return Err(GraphError::Disconnected { components });
        }
        Ok(g)
    }

    fn components(&self) -> Vec<Vec<usize>> {
        let mut seen = vec![false; self.n];
        let mut out = Vec::new();
        for start in 0..self.n {
            if seen[start] {
                continue;
            }
            let mut comp = vec![start];
            seen[start] = true;
            let mut stack = vec![start];
            while let Some(v) = stack.pop() {
                for &(u, _) in &self.adj[v] {
                    if !seen[u] {
                        seen[u] = true;
                        comp.push(u);
                        stack.push(u);
                    }
                }
            }
            comp.sort_unstable();
            out.push(comp);
        }
        out
    }

    /// Complete graph on `n` vertices, unit weights.
    pub fn complete(n: usize) -> Result<Self, GraphError> {
        if n < 2 {
            return Err(GraphError::TooSmall(n));
        }
        let adj = (0..n)
            .map(|i| (0..n).filter(|&j| j != i).map(|j| (j, 1.0)).collect())
            .collect();
        Self::finish(n, adj)
    }

    /// Newman-Watts small world: ring lattice with `k/2` neighbors per side,
    /// plus, for each lattice edge independently with probability `p`, one
    /// shortcut between a uniformly drawn non-adjacent vertex pair. Shortcuts
    /// never remove lattice edges, so the result is always connected.
    pub fn newman_watts(n: usize, k: usize, p: f64, seed: u64) -> Result<Self, GraphError> {
        if n < 2 {
            return Err(GraphError::TooSmall(n));
        }
        if k % 2 != 0 || k < 2 || k >= n {
            return Err(GraphError::InvalidK { k, n });
        }
        if !(0.0..=1.0).contains(&p) {
            return Err(GraphError::InvalidParams(format!(
                "edge creation probability must lie in [0, 1], got {p}"
            )));
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut edges: BTreeMap<(usize, usize), f64> = BTreeMap::new();
        let mut lattice = Vec::new();
        for i in 0..n {
            for d in 1..=k / 2 {
                let j = (i + d) % n;
                let key = (i.min(j), i.max(j));
                if edges.insert(key, 1.0).is_none() {
                    lattice.push(key);
                }
            }
        }
        let max_edges = n * (n - 1) / 2;
        for _ in 0..lattice.len() {
            if rng.gen::<f64>() >= p || edges.len() == max_edges {
                continue;
            }
            // rejection-sample a fresh non-adjacent pair
            loop {
                let u = rng.gen_range(0..n);
                let v = rng.gen_range(0..n);
                if u == v {
                    continue;
                }
                let key = (u.min(v), u.max(v));
                if edges.contains_key(&key) {
                    continue;
                }
                edges.insert(key, 1.0);
                break;
            }
        }
        let entries: Vec<_> = edges.keys().map(|&(i, j)| (i, j, 1.0)).collect();
        Self::from_edge_list_sized(&entries, Some(n))
    }

    /// Barabasi-Albert preferential attachment: clique on `m0` seed vertices,
    /// then each new vertex attaches `m` edges to distinct existing vertices
    /// chosen proportionally to current degree.
    pub fn barabasi_albert(n: usize, m0: usize, m: usize, seed: u64) -> Result<Self, GraphError> {
        if !(1 <= m && m <= m0 && m0 < n) {
            return Err(GraphError::InvalidParams(format!(
                "require 1 <= m <= m0 < n, got n={n}, m0={m0}, m={m}"
            )));
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut entries = Vec::new();
        // degree-repeated vertex list for proportional sampling
        let mut pool = Vec::new();
        for i in 0..m0 {
            for j in (i + 1)..m0 {
                entries.push((i, j, 1.0));
                pool.push(i);
                pool.push(j);
            }
        }
        for v in m0..n {
            let mut targets = Vec::with_capacity(m);
            while targets.len() < m {
                let t = pool[rng.gen_range(0..pool.len())];
                if !targets.contains(&t) {
                    targets.push(t);
                }
            }
            for &t in &targets {
                entries.push((t, v, 1.0));
                pool.push(t);
                pool.push(v);
            }
        }
        Self::from_edge_list_sized(&entries, Some(n))
    }

    pub fn n(&self) -> usize {
        self.n
    }

    /// Sorted `(neighbor, weight)` list of vertex `i`.
    pub fn neighbors(&self, i: usize) -> &[(usize, f64)] {
        &self.adj[i]
    }

    /// Weighted degree `w_i`.
    pub fn strength(&self, i: usize) -> f64 {
        self.strength[i]
    }

    /// Total weighted degree `W`.
    pub fn total_weight(&self) -> f64 {
        self.total_weight
    }

    /// Edge weight `w_ij`, zero when not adjacent.
    pub fn weight(&self, i: usize, j: usize) -> f64 {
        self.adj[i]
            .binary_search_by_key(&j, |&(v, _)| v)
            .map(|idx| self.adj[i][idx].1)
            .unwrap_or(0.0)
    }

    /// Random-walk step probability `p_ij = w_ij / w_i`.
    pub fn step_prob(&self, i: usize, j: usize) -> f64 {
        self.weight(i, j) / self.strength[i]
    }

    /// Stationary weight `pi_i = w_i / W`.
    pub fn stationary(&self, i: usize) -> f64 {
        self.strength[i] / self.total_weight
    }

    /// Lazy step probability of the neutral walk: `p_ij / 2` off the diagonal
    /// and `1/2` on it.
    pub fn neutral_step(&self, i: usize, j: usize) -> f64 {
        if i == j {
            0.5
        } else {
            0.5 * self.step_prob(i, j)
        }
    }

    /// Unweighted degree of vertex `i`.
    pub fn degree(&self, i: usize) -> usize {
        self.adj[i].len()
    }

    pub fn edge_count(&self) -> usize {
        self.adj.iter().map(Vec::len).sum::<usize>() / 2
    }

    pub fn is_unweighted(&self) -> bool {
        self.adj
            .iter()
            .all(|list| list.iter().all(|&(_, w)| w == 1.0))
    }

    /// Canonical undirected edge list, `i < j`, sorted.
    pub fn edges(&self) -> Vec<(usize, usize, f64)> {
        let mut out = Vec::with_capacity(self.edge_count());
        for i in 0..self.n {
            for &(j, w) in &self.adj[i] {
                if i < j {
                    out.push((i, j, w));
                }
            }
        }
        out
    }

    /// One line per undirected edge, `"i j w"` with `i < j`. The weight is
    /// printed with the shortest representation that parses back exactly.
    pub fn to_edge_list_string(&self) -> String {
        let mut s = String::new();
        for (i, j, w) in self.edges() {
            s.push_str(&format!("{i} {j} {w}\n"));
        }
        s
    }

    /// Parses the edge list text format. Blank lines and `#` comments are
    /// skipped; an optional `n=<count>` directive fixes the vertex count.
    pub fn parse_edge_list(text: &str) -> Result<Self, GraphError> {
        let mut entries = Vec::new();
        let mut n = None;
        for (idx, raw) in text.lines().enumerate() {
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            if let Some(rest) = line.strip_prefix("n=") {
                n = Some(rest.trim().parse().map_err(|e| GraphError::Parse {
                    line: idx + 1,
                    msg: format!("bad vertex count: {e}"),
                })?);
                continue;
            }
            let mut parts = line.split_whitespace();
            let mut next = |what: &str| {
                parts.next().ok_or_else(|| GraphError::Parse {
                    line: idx + 1,
                    msg: format!("missing {what}"),
                })
            };
            let i: usize = next("source index")?.parse().map_err(|e| GraphError::Parse {
                line: idx + 1,
                msg: format!("bad source index: {e}"),
            })?;
            let j: usize = next("target index")?.parse().map_err(|e| GraphError::Parse {
                line: idx + 1,
                msg: format!("bad target index: {e}"),
            })?;
            let w: f64 = next("weight")?.parse().map_err(|e| GraphError::Parse {
                line: idx + 1,
                msg: format!("bad weight: {e}"),
            })?;
            entries.push((i, j, w));
        }
        Self::from_edge_list_sized(&entries, n)
    }

    /// SHA-256 of the canonical edge list, used to key score-independent
    /// coalescence tables to the graph they were solved on.
    pub fn content_hash(&self) -> String {
        let mut hasher = Sha256::new();
        hasher.update(format!("n={}\n", self.n));
        hasher.update(self.to_edge_list_string());
        let digest = hasher.finalize();
        digest.iter().map(|b| format!("{b:02x}")).collect()
    }
}

/// Compensated (Kahan) summation; keeps strength/total-weight sums tight on
/// large vertex counts.
pub(crate) fn kahan_sum(values: impl Iterator<Item = f64>) -> f64 {
    let mut sum = 0.0;
    let mut comp = 0.0;
    for v in values {
        let y = v - comp;
        let t = sum + y;
        comp = (t - sum) - y;
        sum = t;
    }
    sum
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use rand::Rng;

    #[test]
    fn single_edge() {
        let g = WeightedGraph::from_edge_list(&[(0, 1, 1.0)]).unwrap();
        assert_eq!(g.n(), 2);
        assert_eq!(g.strength(0), 1.0);
        assert_eq!(g.strength(1), 1.0);
        assert_eq!(g.total_weight(), 2.0);
        assert_eq!(g.step_prob(0, 1), 1.0);
        assert_eq!(g.neutral_step(0, 1), 0.5);
        assert_eq!(g.neutral_step(0, 0), 0.5);
    }

    #[test]
    fn triangle() {
        let g = WeightedGraph::from_edge_list(&[(0, 1, 1.0), (1, 2, 1.0), (0, 2, 1.0)]).unwrap();
        for i in 0..3 {
            assert!((g.stationary(i) - 1.0 / 3.0).abs() < 1e-15);
            for j in 0..3 {
                if i != j {
                    assert!((g.step_prob(i, j) - 0.5).abs() < 1e-15);
                }
            }
        }
    }

    #[test]
    fn self_loop_rejected() {
        match WeightedGraph::from_edge_list(&[(0, 0, 1.0)]) {
            Err(GraphError::SelfLoop(0)) => {}
            other => panic!("expected SelfLoop(0), got {other:?}"),
        }
    }

    #[test]
    fn asymmetric_duplicate_rejected() {
        let r = WeightedGraph::from_edge_list(&[(0, 1, 1.0), (1, 0, 2.0)]);
        assert!(matches!(r, Err(GraphError::AsymmetricDuplicate(0, 1))));
        // identical duplicate collapses to one edge
        let g = WeightedGraph::from_edge_list(&[(0, 1, 1.5), (1, 0, 1.5)]).unwrap();
        assert_eq!(g.edge_count(), 1);
    }

    #[test]
    fn nonpositive_weight_rejected() {
        assert!(matches!(
            WeightedGraph::from_edge_list(&[(0, 1, 0.0)]),
            Err(GraphError::NonPositiveWeight { .. })
        ));
        assert!(matches!(
            WeightedGraph::from_edge_list(&[(0, 1, -2.0)]),
            Err(GraphError::NonPositiveWeight { .. })
        ));
    }

    #[test]
    fn disconnected_rejected() {
        match WeightedGraph::from_edge_list(&[(0, 1, 1.0), (2, 3, 1.0)]) {
            Err(GraphError::Disconnected { components }) => {
                assert_eq!(components, vec![vec![0, 1], vec![2, 3]]);
            }
            other => panic!("expected Disconnected, got {other:?}"),
        }
    }

    #[test]
    fn complete_graph_quantities() {
        let g = WeightedGraph::complete(3).unwrap();
        assert_eq!(g.total_weight(), 6.0);
        let g = WeightedGraph::complete(50).unwrap();
        assert_eq!(g.total_weight(), 50.0 * 49.0);
        assert_eq!(g.edge_count(), 1225);
        assert!(matches!(
            WeightedGraph::complete(1),
            Err(GraphError::TooSmall(1))
        ));
    }

    #[test]
    fn newman_watts_ring_only() {
        let g = WeightedGraph::newman_watts(10, 4, 0.0, 1).unwrap();
        assert_eq!(g.edge_count(), 20);
        assert!(matches!(
            WeightedGraph::newman_watts(3, 4, 0.0, 1),
            Err(GraphError::InvalidK { .. })
        ));
        assert!(matches!(
            WeightedGraph::newman_watts(10, 3, 0.0, 1),
            Err(GraphError::InvalidK { .. })
        ));
    }

    #[test]
    fn newman_watts_full_shortcut_rate() {
        let g = WeightedGraph::newman_watts(10, 4, 1.0, 1).unwrap();
        assert_eq!(g.edge_count(), 40);
    }

    #[test]
    fn barabasi_albert_edge_counts() {
        let g = WeightedGraph::barabasi_albert(50, 3, 3, 1).unwrap();
        assert_eq!(g.edge_count(), 3 + 47 * 3);
        let g = WeightedGraph::barabasi_albert(4, 3, 3, 1).unwrap();
        assert_eq!(g.edge_count(), 6); // forced K_4
        let g = WeightedGraph::barabasi_albert(10, 3, 1, 7).unwrap();
        assert_eq!(g.edge_count(), 10);
        assert!(WeightedGraph::barabasi_albert(3, 3, 3, 1).is_err());
    }

    #[test]
    fn generators_deterministic() {
        for seed in [0u64, 1, 42] {
            let a = WeightedGraph::newman_watts(30, 6, 0.4, seed).unwrap();
            let b = WeightedGraph::newman_watts(30, 6, 0.4, seed).unwrap();
            assert_eq!(a.edges(), b.edges());
            let a = WeightedGraph::barabasi_albert(30, 3, 3, seed).unwrap();
            let b = WeightedGraph::barabasi_albert(30, 3, 3, seed).unwrap();
            assert_eq!(a.edges(), b.edges());
        }
    }

    #[test]
    fn edge_list_round_trip() {
        let g = WeightedGraph::barabasi_albert(50, 3, 3, 11).unwrap();
        let text = g.to_edge_list_string();
        let back = WeightedGraph::parse_edge_list(&text).unwrap();
        assert_eq!(g, back);
        assert_eq!(g.content_hash(), back.content_hash());

        let k2 = WeightedGraph::from_edge_list(&[(0, 1, 1.0)]).unwrap();
        assert_eq!(k2.to_edge_list_string(), "0 1 1\n");
    }

    #[test]
    fn parse_rejects_self_loop_line() {
        assert!(matches!(
            WeightedGraph::parse_edge_list("0 0 1\n"),
            Err(GraphError::SelfLoop(0))
        ));
        assert!(matches!(
            WeightedGraph::parse_edge_list("0 nope 1\n"),
            Err(GraphError::Parse { line: 1, .. })
        ));
    }

    fn random_connected(n: usize, seed: u64, weighted: bool) -> WeightedGraph {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut entries = Vec::new();
        for v in 1..n {
            let u = rng.gen_range(0..v);
            let w = if weighted { rng.gen_range(0.2..3.0) } else { 1.0 };
            entries.push((u, v, w));
        }
        for i in 0..n {
            for j in (i + 1)..n {
                if rng.gen::<f64>() < 0.3 && !entries.iter().any(|&(a, b, _)| (a, b) == (i, j)) {
                    let w = if weighted { rng.gen_range(0.2..3.0) } else { 1.0 };
                    entries.push((i, j, w));
                }
            }
        }
        WeightedGraph::from_edge_list(&entries).unwrap()
    }

    proptest! {
        #[test]
        fn walk_quantities_normalized(seed in 0u64..50, n in 3usize..14, weighted: bool) {
            let g = random_connected(n, seed, weighted);
            for i in 0..g.n() {
                let p_sum: f64 = g.neighbors(i).iter().map(|&(j, _)| g.step_prob(i, j)).sum();
                prop_assert!((p_sum - 1.0).abs() <= 1e-12);
                let lazy_sum: f64 = 0.5 + g.neighbors(i).iter().map(|&(j, _)| g.neutral_step(i, j)).sum::<f64>();
                prop_assert!((lazy_sum - 1.0).abs() <= 1e-12);
            }
            let pi_sum: f64 = (0..g.n()).map(|i| g.stationary(i)).sum();
            prop_assert!((pi_sum - 1.0).abs() <= 1e-12);
            for i in 0..g.n() {
                for &(j, w) in g.neighbors(i) {
                    let fwd = g.stationary(i) * g.step_prob(i, j);
                    let bwd = g.stationary(j) * g.step_prob(j, i);
                    prop_assert!((fwd - bwd).abs() <= 1e-15);
                    prop_assert!((fwd - w / g.total_weight()).abs() <= 1e-15);
                }
            }
        }

        #[test]
        fn uniform_scaling_leaves_walk_unchanged(seed in 0u64..30, lambda in 0.1f64..10.0) {
            let g = random_connected(8, seed, true);
            let scaled: Vec<_> = g.edges().iter().map(|&(i, j, w)| (i, j, w * lambda)).collect();
            let h = WeightedGraph::from_edge_list(&scaled).unwrap();
            prop_assert!((h.total_weight() - lambda * g.total_weight()).abs() <= 1e-9 * g.total_weight());
            for i in 0..g.n() {
                prop_assert!((h.stationary(i) - g.stationary(i)).abs() <= 1e-12);
                for &(j, _) in g.neighbors(i) {
                    prop_assert!((h.step_prob(i, j) - g.step_prob(i, j)).abs() <= 1e-12);
                }
            }
        }
    }
}
