//! Exact maximum clique and clique counting.

use std::cmp::Reverse;
use std::collections::BinaryHeap;
use std::time::{Duration, Instant};

use num_bigint::BigUint;

use crate::error::{invalid, Error, Result};
use crate::model::Graph;

pub const DEFAULT_NODE_BUDGET: u64 = 1_000_000_000;
pub const BRUTE_FORCE_LIMIT: usize = 40;
pub const DEFAULT_COUNT_LIMIT: usize = 64;

/// Fixed-size set of small integers.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Bitset {
    words: Vec<u64>,
    len: usize,
}

impl Bitset {
    pub fn new(len: usize) -> Self {
        Bitset { words: vec![0; len.div_ceil(64)], len }
    }

    pub fn full(len: usize) -> Self {
        let mut b = Self::new(len);
        for i in 0..len {
            b.insert(i);
        }
        b
    }

    pub fn capacity(&self) -> usize {
        self.len
    }

    pub fn insert(&mut self, i: usize) {
        debug_assert!(i < self.len);
        self.words[i / 64] |= 1 << (i % 64);
    }

    pub fn remove(&mut self, i: usize) {
        self.words[i / 64] &= !(1 << (i % 64));
    }

    pub fn contains(&self, i: usize) -> bool {
        i < self.len && self.words[i / 64] >> (i % 64) & 1 == 1
    }

    pub fn count(&self) -> usize {
        self.words.iter().map(|w| w.count_ones() as usize).sum()
    }

    pub fn is_empty(&self) -> bool {
        self.words.iter().all(|&w| w == 0)
    }

    pub fn first(&self) -> Option<usize> {
        first_bit(&self.words)
    }

    pub fn intersect_with(&mut self, other: &Bitset) {
        for (a, b) in self.words.iter_mut().zip(&other.words) {
            *a &= b;
        }
    }

    pub fn iter(&self) -> impl Iterator<Item = usize> + '_ {
        self.words.iter().enumerate().flat_map(|(k, &w)| {
            let mut w = w;
            std::iter::from_fn(move || {
                if w == 0 {
                    None
                } else {
                    let b = w.trailing_zeros() as usize;
                    w &= w - 1;
                    Some(k * 64 + b)
                }
            })
        })
    }
}

fn first_bit(words: &[u64]) -> Option<usize> {
    words.iter().enumerate().find(|(_, &w)| w != 0).map(|(k, w)| k * 64 + w.trailing_zeros() as usize)
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CliqueResult {
    pub size: usize,
    /// Vertices of one maximum clique, ascending.
    pub witness: Vec<usize>,
    pub nodes_explored: u64,
    pub elapsed: Duration,
}

/// Smallest-last vertex order; ties go to the lowest index.
pub fn degeneracy_order(g: &Graph) -> Vec<usize> {
    let n = g.n();
    let mut degree: Vec<usize> = (0..n).map(|v| g.degree(v)).collect();
    let mut removed = vec![false; n];
    let mut heap: BinaryHeap<Reverse<(usize, usize)>> = (0..n).map(|v| Reverse((degree[v], v))).collect();
    let mut order = Vec::with_capacity(n);
    while let Some(Reverse((d, v))) = heap.pop() {
        if removed[v] || d != degree[v] {
            continue;
        }
        removed[v] = true;
        order.push(v);
        for &u in g.neighbors(v) {
            let u = u as usize;
            if !removed[u] {
                degree[u] -= 1;
                heap.push(Reverse((degree[u], u)));
            }
        }
    }
    order
}

/// Branch and bound over a dense local subgraph held as bit rows.
struct LocalSearch<'a> {
    words: usize,
    adj: &'a [u64],
    best: usize,
    best_set: Vec<usize>,
    current: Vec<usize>,
    nodes: u64,
    budget: u64,
    // Per-depth scratch: candidate set, colouring work sets, colour order.
    scratch: Vec<(Vec<u64>, Vec<u64>, Vec<u64>, Vec<(u32, u32)>)>,
}

impl LocalSearch<'_> {
    fn row(&self, v: usize) -> &[u64] {
        &self.adj[v * self.words..(v + 1) * self.words]
    }

    fn expand(&mut self, depth: usize) -> Result<()> {
        self.nodes += 1;
        if self.nodes > self.budget {
            return Err(Error::BudgetExceeded { budget: self.budget });
        }
        if self.scratch.len() <= depth + 1 {
            let w = self.words;
            self.scratch.push((vec![0; w], vec![0; w], vec![0; w], Vec::new()));
        }
        let (mut p, mut uncoloured, mut q, mut order) = std::mem::take(&mut self.scratch[depth]);
        // Greedy sequential colouring: colour classes are independent sets,
        // so a clique in P uses at most one vertex per class.
        order.clear();
        uncoloured.copy_from_slice(&p);
        let mut colour = 0u32;
        while first_bit(&uncoloured).is_some() {
            colour += 1;
            q.copy_from_slice(&uncoloured);
            while let Some(v) = first_bit(&q) {
                q[v / 64] &= !(1 << (v % 64));
                uncoloured[v / 64] &= !(1 << (v % 64));
                for (x, a) in q.iter_mut().zip(self.row(v)) {
                    *x &= !a;
                }
                order.push((v as u32, colour));
            }
        }
        let mut result = Ok(());
        for &(v, k) in order.iter().rev() {
            if self.current.len() + k as usize <= self.best {
                break;
            }
            let v = v as usize;
            self.current.push(v);
            let next = &mut self.scratch[depth + 1].0;
            let mut any = false;
            for ((x, a), b) in next.iter_mut().zip(&p).zip(&self.adj[v * self.words..(v + 1) * self.words]) {
                *x = a & b;
                any |= *x != 0;
            }
            if any {
                if let Err(e) = self.expand(depth + 1) {
                    result = Err(e);
                    self.current.pop();
                    break;
                }
            } else if self.current.len() > self.best {
                self.best = self.current.len();
                self.best_set = self.current.clone();
            }
            self.current.pop();
            p[v / 64] &= !(1 << (v % 64));
        }
        self.scratch[depth] = (p, uncoloured, q, order);
        result
    }
}

/// Exact maximum clique solver with a node budget.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct MaxCliqueSolver {
    pub budget: u64,
}

impl Default for MaxCliqueSolver {
    fn default() -> Self {
        MaxCliqueSolver { budget: DEFAULT_NODE_BUDGET }
    }
}

impl MaxCliqueSolver {
    pub fn new(budget: u64) -> Self {
        MaxCliqueSolver { budget }
    }

    /// Every vertex `v` is searched together with its neighbours that come
    /// later in the degeneracy order, so each clique is met exactly once, at
    /// its earliest vertex, inside a subgraph no larger than the degeneracy.
    /// Subproblems run from the densest core outwards so that a large
    /// incumbent is found early.
    pub fn solve(&self, g: &Graph) -> Result<CliqueResult> {
        let start = Instant::now();
        let n = g.n();
        let order = degeneracy_order(g);
        let mut position = vec![0usize; n];
        for (i, &v) in order.iter().enumerate() {
            position[v] = i;
        }
        let mut best = usize::from(n > 0);
        let mut witness: Vec<usize> = order.last().copied().into_iter().collect();
        let mut nodes = 0u64;
        let mut adj: Vec<u64> = Vec::new();
        let mut scratch = Vec::new();
        // mark[u] = 1 + local index while u is a candidate of the current vertex.
        let mut mark = vec![0u32; n];
        for &v in order.iter().rev() {
            let mut cand: Vec<usize> =
                g.neighbors(v).iter().map(|&u| u as usize).filter(|&u| position[u] > position[v]).collect();
            if cand.len() < best {
                continue;
            }
            let k = cand.len();
            for &u in &cand {
                mark[u] = 1;
            }
            // Local degrees decide the initial order: high degree first.
            let mut local_deg: Vec<(usize, usize)> =
                cand.iter().map(|&u| (g.neighbors(u).iter().filter(|&&x| mark[x as usize] != 0).count(), u)).collect();
            local_deg.sort_by(|a, b| b.0.cmp(&a.0).then(a.1.cmp(&b.1)));
            cand.clear();
            cand.extend(local_deg.iter().map(|&(_, u)| u));
            for (i, &u) in cand.iter().enumerate() {
                mark[u] = i as u32 + 1;
            }
            let words = k.div_ceil(64);
            adj.clear();
            adj.resize(k * words, 0);
            for (i, &u) in cand.iter().enumerate() {
                for &x in g.neighbors(u) {
                    let m = mark[x as usize];
                    if m != 0 {
                        let j = m as usize - 1;
                        adj[i * words + j / 64] |= 1 << (j % 64);
                    }
                }
            }
            for &u in &cand {
                mark[u] = 0;
            }
            if scratch.first().is_some_and(|s: &(Vec<u64>, Vec<u64>, Vec<u64>, Vec<(u32, u32)>)| s.0.len() != words) {
                scratch.clear();
            }
            let mut search = LocalSearch {
                words,
                adj: &adj,
                // Need a clique of size best in the candidates to improve.
                best: best - 1,
                best_set: Vec::new(),
                current: Vec::new(),
                nodes: 0,
                budget: self.budget.saturating_sub(nodes),
                scratch: std::mem::take(&mut scratch),
            };
            if search.scratch.is_empty() {
                search.scratch.push((vec![0; words], vec![0; words], vec![0; words], Vec::new()));
            }
            let full = &mut search.scratch[0].0;
            full.iter_mut().for_each(|w| *w = 0);
            for i in 0..k {
                full[i / 64] |= 1 << (i % 64);
            }
            let outcome = search.expand(0);
            nodes += search.nodes;
            outcome.map_err(|_| Error::BudgetExceeded { budget: self.budget })?;
            if search.best + 1 > best {
                best = search.best + 1;
                witness = search.best_set.iter().map(|&i| cand[i]).chain(std::iter::once(v)).collect();
                witness.sort_unstable();
            }
            scratch = search.scratch;
        }
        Ok(CliqueResult { size: best, witness, nodes_explored: nodes, elapsed: start.elapsed() })
    }
}

/// Maximum clique with the default node budget.
pub fn max_clique(g: &Graph) -> Result<CliqueResult> {
    MaxCliqueSolver::default().solve(g)
}

/// Whether every pair in `vertices` is adjacent.
pub fn is_clique(g: &Graph, vertices: &[usize]) -> bool {
    vertices.iter().enumerate().all(|(i, &u)| vertices[i + 1..].iter().all(|&v| u != v && g.has_edge(u, v)))
}

fn masks(g: &Graph, limit: usize, operation: &'static str) -> Result<Vec<u64>> {
    if g.n() > limit {
        return Err(Error::SizeLimit { operation, n: g.n(), limit });
    }
    Ok((0..g.n()).map(|v| g.neighbors(v).iter().fold(0u64, |m, &u| m | 1 << u)).collect())
}

/// Reference clique number by include/exclude recursion over vertices;
/// a branch is dropped only when even taking every remaining candidate
/// could not beat the incumbent.
pub fn brute_force_max_clique(g: &Graph) -> Result<usize> {
    fn rec(adj: &[u64], cand: u64, size: usize, best: &mut usize) {
        if cand == 0 {
            *best = (*best).max(size);
            return;
        }
        if size + cand.count_ones() as usize <= *best {
            return;
        }
        let v = cand.trailing_zeros() as usize;
        let rest = cand & (cand - 1);
        rec(adj, rest & adj[v], size + 1, best);
        rec(adj, rest, size, best);
    }
    let adj = masks(g, BRUTE_FORCE_LIMIT, "brute-force max clique")?;
    let n = g.n();
    let all = if n == 64 { u64::MAX } else { (1u64 << n) - 1 };
    let mut best = 0;
    rec(&adj, all, 0, &mut best);
    Ok(best)
}

/// Number of `r`-cliques, for graphs with at most 64 vertices.
pub fn count_cliques(g: &Graph, r: usize) -> Result<BigUint> {
    count_cliques_with_limit(g, r, DEFAULT_COUNT_LIMIT)
}

pub fn count_cliques_with_limit(g: &Graph, r: usize, limit: usize) -> Result<BigUint> {
    fn rec(adj: &[u64], cand: u64, remaining: usize) -> u128 {
        if remaining == 0 {
            return 1;
        }
        if (cand.count_ones() as usize) < remaining {
            return 0;
        }
        let mut total = 0u128;
        let mut c = cand;
        while c != 0 {
            let v = c.trailing_zeros() as usize;
            c &= c - 1;
            // Only later vertices, so each clique is generated once.
            total += rec(adj, c & adj[v], remaining - 1);
        }
        total
    }
    if r == 0 {
        return Err(invalid("r", "clique size must be at least 1"));
    }
    let limit = limit.min(64);
    let adj = masks(g, limit, "clique counting")?;
    let n = g.n();
    let all = if n == 64 { u64::MAX } else { (1u64 << n) - 1 };
    Ok(BigUint::from(rec(&adj, all, r)))
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_graph(n: usize, p: f64, seed: u64) -> Graph {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut edges = Vec::new();
        for i in 0..n {
            for j in i + 1..n {
                if rng.gen::<f64>() < p {
                    edges.push((i, j));
                }
            }
        }
        Graph::from_edges(n, edges)
    }

    #[test]
    fn bitset_ops() {
        let mut b = Bitset::new(130);
        b.insert(3);
        b.insert(64);
        b.insert(129);
        assert_eq!(b.count(), 3);
        assert_eq!(b.iter().collect::<Vec<_>>(), vec![3, 64, 129]);
        b.remove(3);
        assert_eq!(b.first(), Some(64));
        let mut f = Bitset::full(130);
        f.intersect_with(&b);
        assert_eq!(f, b);
        assert!(!b.contains(200));
    }

    #[test]
    fn small_examples() {
        assert_eq!(max_clique(&Graph::complete(5)).unwrap().size, 5);
        let path = Graph::from_edges(4, [(0, 1), (1, 2), (2, 3)]);
        assert_eq!(max_clique(&path).unwrap().size, 2);
        assert_eq!(max_clique(&Graph::empty(7)).unwrap().size, 1);
        assert_eq!(max_clique(&Graph::empty(0)).unwrap().size, 0);
        assert_eq!(brute_force_max_clique(&Graph::empty(7)).unwrap(), 1);
        let k5_minus = Graph::from_edges(5, Graph::complete(5).edges().filter(|&e| e != (1, 3)));
        assert_eq!(brute_force_max_clique(&k5_minus).unwrap(), 4);
        let tri = Graph::from_edges(4, [(0, 1), (1, 2), (0, 2)]);
        assert_eq!(brute_force_max_clique(&tri).unwrap(), 3);
        let r = max_clique(&tri).unwrap();
        assert_eq!(r.witness, vec![0, 1, 2]);
    }

    #[test]
    fn counts() {
        let k4 = Graph::complete(4);
        assert_eq!(count_cliques(&k4, 3).unwrap(), BigUint::from(4u32));
        assert_eq!(count_cliques(&Graph::empty(6), 2).unwrap(), BigUint::from(0u32));
        let g = random_graph(30, 0.4, 1);
        assert_eq!(count_cliques(&g, 1).unwrap(), BigUint::from(30u32));
        assert_eq!(count_cliques(&g, 2).unwrap(), BigUint::from(g.edge_count()));
        assert!(count_cliques(&g, 0).is_err());
        assert!(count_cliques(&Graph::empty(65), 2).is_err());
        assert!(brute_force_max_clique(&Graph::empty(41)).is_err());
    }

    #[test]
    fn count_matches_subset_enumeration() {
        let g = random_graph(16, 0.5, 4);
        for r in 1..=6 {
            let direct = (0u32..1 << 16)
                .filter(|m| m.count_ones() as usize == r)
                .filter(|&m| {
                    let vs: Vec<usize> = (0..16).filter(|i| m >> i & 1 == 1).collect();
                    is_clique(&g, &vs)
                })
                .count();
            assert_eq!(count_cliques(&g, r).unwrap(), BigUint::from(direct));
        }
    }

    #[test]
    fn agrees_with_brute_force() {
        let mut rng = ChaCha8Rng::seed_from_u64(2024);
        for t in 0..150 {
            let n = rng.gen_range(4..=40);
            let p = rng.gen_range(0.05..0.95);
            let g = random_graph(n, p, t);
            let r = max_clique(&g).unwrap();
            assert_eq!(r.size, brute_force_max_clique(&g).unwrap(), "n={n} p={p}");
            assert_eq!(r.witness.len(), r.size);
            assert!(is_clique(&g, &r.witness));
        }
    }

    #[test]
    fn budget_is_a_hard_error() {
        let g = random_graph(200, 0.5, 9);
        assert!(matches!(MaxCliqueSolver::new(10).solve(&g), Err(Error::BudgetExceeded { budget: 10 })));
    }

    #[test]
    fn degeneracy_order_is_a_permutation() {
        let g = random_graph(50, 0.3, 2);
        let mut o = degeneracy_order(&g);
        o.sort_unstable();
        assert_eq!(o, (0..50).collect::<Vec<_>>());
    }
}
