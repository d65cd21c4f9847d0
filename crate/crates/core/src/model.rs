//! Scaling schedules, assumption checks, and sampling of the rank-1 graph.

use std::fmt;
use std::io::{self, BufRead, Write};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::distributions::{TruncatedWeight, WeightDistribution};
use crate::error::{invalid, Result};
use crate::Scalar;

fn unit<T: Scalar>() -> T {
    T::one()
}

/// The deterministic scaling `s_n`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
#[serde(bound(deserialize = "T: Scalar + Deserialize<'de>"))]
pub enum ScalingSchedule<T> {
    /// `s`.
    Constant { value: T },
    /// `n^exponent`.
    Power { exponent: T },
    /// `coefficient * (ln n)^exponent`.
    LogPower { coefficient: T, exponent: T },
    /// `coefficient * (2 sigma^2 ln n)^(exponent / 2)`.
    SqrtLog {
        coefficient: T,
        exponent: T,
        #[serde(default = "unit")]
        sigma: T,
    },
    /// `coefficient * exp(sqrt(2 ln n))^exponent`.
    ExpSqrtLog { coefficient: T, exponent: T },
}

impl<T: Scalar> ScalingSchedule<T> {
    pub fn validate(&self) -> Result<()> {
        use ScalingSchedule::*;
        let finite = |name, v: T| {
            if v.is_finite() {
                Ok(())
            } else {
                Err(invalid(name, format!("must be finite, got {v}")))
            }
        };
        let pos = |name, v: T| {
            if v > T::zero() && v.is_finite() {
                Ok(())
            } else {
                Err(invalid(name, format!("must be positive, got {v}")))
            }
        };
        match *self {
            Constant { value } => {
                if value > T::one() && value.is_finite() {
                    Ok(())
                } else {
                    Err(invalid("value", format!("constant scaling must exceed 1, got {value}")))
                }
            }
            Power { exponent } => pos("exponent", exponent),
            LogPower { coefficient, exponent } | ExpSqrtLog { coefficient, exponent } => {
                pos("coefficient", coefficient)?;
                finite("exponent", exponent)
            }
            SqrtLog { coefficient, exponent, sigma } => {
                pos("coefficient", coefficient)?;
                pos("sigma", sigma)?;
                finite("exponent", exponent)
            }
        }
    }

    /// `s_n`; an error when `n < 2` or when the schedule does not exceed 1.
    pub fn value(&self, n: u64) -> Result<T> {
        use ScalingSchedule::*;
        self.validate()?;
        if n < 2 {
            return Err(invalid("n", format!("scaling needs n >= 2, got {n}")));
        }
        let ln_n = T::from_u64_lossy(n).ln();
        let two = T::lit(2.0);
        let s = match *self {
            Constant { value } => value,
            Power { exponent } => (exponent * ln_n).exp(),
            LogPower { coefficient, exponent } => coefficient * ln_n.powf(exponent),
            SqrtLog { coefficient, exponent, sigma } => coefficient * (two * sigma * sigma * ln_n).powf(exponent / two),
            ExpSqrtLog { coefficient, exponent } => coefficient * (exponent * (two * ln_n).sqrt()).exp(),
        };
        if s > T::one() && s.is_finite() {
            Ok(s)
        } else {
            Err(invalid("schedule", format!("s_n = {s} at n = {n}; the model needs s_n > 1")))
        }
    }
}

impl<T: Scalar> fmt::Display for ScalingSchedule<T> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        use ScalingSchedule::*;
        match self {
            Constant { value } => write!(f, "constant({value})"),
            Power { exponent } => write!(f, "power({exponent})"),
            LogPower { coefficient, exponent } => write!(f, "log_power({coefficient},{exponent})"),
            SqrtLog { coefficient, exponent, sigma } => write!(f, "sqrt_log({coefficient},{exponent},{sigma})"),
            ExpSqrtLog { coefficient, exponent } => write!(f, "exp_sqrt_log({coefficient},{exponent})"),
        }
    }
}

/// Free-function form of [`ScalingSchedule::value`].
pub fn scaling_value<T: Scalar>(sched: &ScalingSchedule<T>, n: u64) -> Result<T> {
    sched.value(n)
}

/// `min(wi wj / s^2, 1)`.
pub fn edge_probability<T: Scalar>(wi: T, wj: T, s: T) -> T {
    (wi * wj / (s * s)).min(T::one())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EtaProbability<T> {
    pub eta: T,
    pub prob_max_below: T,
}

/// Finite-n check of the max-weight conditions.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AssumptionReport<T> {
    pub n: u64,
    pub delta: T,
    pub scaling: T,
    pub cutoff: T,
    /// `P(max_i W_i <= s_n / (1 + delta)) = (1 - P(W > cutoff))^n`.
    pub prob_max_below: T,
    pub threshold: T,
    pub satisfied_estimate: bool,
    pub eta_sweep: Vec<EtaProbability<T>>,
}

pub const DEFAULT_ASSUMPTION_THRESHOLD: f64 = 0.99;

fn prob_max_below<T: Scalar>(dist: &WeightDistribution<T>, n: u64, cutoff: T) -> T {
    (T::from_u64_lossy(n) * dist.ln_mass(cutoff)).exp()
}

pub fn check_assumptions<T: Scalar>(
    dist: &WeightDistribution<T>,
    sched: &ScalingSchedule<T>,
    n: u64,
    delta: T,
    eta_grid: &[T],
) -> Result<AssumptionReport<T>> {
    check_assumptions_with_threshold(dist, sched, n, delta, eta_grid, T::lit(DEFAULT_ASSUMPTION_THRESHOLD))
}

pub fn check_assumptions_with_threshold<T: Scalar>(
    dist: &WeightDistribution<T>,
    sched: &ScalingSchedule<T>,
    n: u64,
    delta: T,
    eta_grid: &[T],
    threshold: T,
) -> Result<AssumptionReport<T>> {
    dist.validate()?;
    if !(delta > T::zero()) || delta.is_infinite() {
        return Err(invalid("delta", format!("must be positive, got {delta}")));
    }
    if !(threshold >= T::zero() && threshold <= T::one()) {
        return Err(invalid("threshold", format!("must lie in [0, 1], got {threshold}")));
    }
    let s = sched.value(n)?;
    let cutoff = s / (T::one() + delta);
    let prob = prob_max_below(dist, n, cutoff);
    let mut eta_sweep = Vec::with_capacity(eta_grid.len());
    for &eta in eta_grid {
        if !(eta > T::zero()) {
            return Err(invalid("eta", format!("must be positive, got {eta}")));
        }
        eta_sweep.push(EtaProbability { eta, prob_max_below: prob_max_below(dist, n, s / (T::one() + eta)) });
    }
    Ok(AssumptionReport {
        n,
        delta,
        scaling: s,
        cutoff,
        prob_max_below: prob,
        threshold,
        satisfied_estimate: prob >= threshold,
        eta_sweep,
    })
}

/// Undirected simple graph in compressed sparse row form with sorted rows.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Graph {
    offsets: Vec<usize>,
    targets: Vec<u32>,
}

impl Graph {
    pub fn empty(n: usize) -> Self {
        Graph { offsets: vec![0; n + 1], targets: Vec::new() }
    }

    pub fn complete(n: usize) -> Self {
        Self::from_edges(n, (0..n).flat_map(|i| (i + 1..n).map(move |j| (i, j))))
    }

    /// Builds a graph from an edge list; loops and duplicates are dropped.
    ///
    /// # Panics
    /// If an endpoint is `>= n`.
    pub fn from_edges<I: IntoIterator<Item = (usize, usize)>>(n: usize, edges: I) -> Self {
        let mut rows: Vec<Vec<u32>> = vec![Vec::new(); n];
        for (u, v) in edges {
            assert!(u < n && v < n, "edge ({u}, {v}) out of range for n = {n}");
            if u != v {
                rows[u].push(v as u32);
                rows[v].push(u as u32);
            }
        }
        for row in &mut rows {
            row.sort_unstable();
            row.dedup();
        }
        Self::from_rows(rows)
    }

    fn from_rows(rows: Vec<Vec<u32>>) -> Self {
        let mut offsets = Vec::with_capacity(rows.len() + 1);
        offsets.push(0);
        for r in &rows {
            offsets.push(offsets.last().unwrap() + r.len());
        }
        Graph { offsets, targets: rows.concat() }
    }

    /// Symmetrizes a strictly-upper adjacency (`upper[i]` holds `j > i`, ascending).
    fn from_upper(upper: Vec<Vec<u32>>) -> Self {
        let n = upper.len();
        let mut degree = vec![0usize; n];
        for (i, row) in upper.iter().enumerate() {
            degree[i] += row.len();
            for &j in row {
                degree[j as usize] += 1;
            }
        }
        let mut offsets = Vec::with_capacity(n + 1);
        offsets.push(0);
        for d in &degree {
            offsets.push(offsets.last().unwrap() + d);
        }
        let mut targets = vec![0u32; offsets[n]];
        let mut pos = offsets[..n].to_vec();
        // Lower neighbours of i are written by earlier rows, so each row
        // comes out sorted.
        for (i, row) in upper.iter().enumerate() {
            targets[pos[i]..pos[i] + row.len()].copy_from_slice(row);
            pos[i] += row.len();
            for &j in row {
                targets[pos[j as usize]] = i as u32;
                pos[j as usize] += 1;
            }
        }
        Graph { offsets, targets }
    }

    pub fn n(&self) -> usize {
        self.offsets.len() - 1
    }

    pub fn edge_count(&self) -> usize {
        self.targets.len() / 2
    }

    pub fn degree(&self, v: usize) -> usize {
        self.offsets[v + 1] - self.offsets[v]
    }

    /// Sorted neighbours of `v`.
    pub fn neighbors(&self, v: usize) -> &[u32] {
        &self.targets[self.offsets[v]..self.offsets[v + 1]]
    }

    pub fn has_edge(&self, u: usize, v: usize) -> bool {
        self.neighbors(u).binary_search(&(v as u32)).is_ok()
    }

    /// Edges `(i, j)` with `i < j`, in lexicographic order.
    pub fn edges(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        (0..self.n()).flat_map(move |i| {
            self.neighbors(i).iter().filter(move |&&j| j as usize > i).map(move |&j| (i, j as usize))
        })
    }

    /// A copy with the edge `{u, v}` added.
    pub fn with_edge(&self, u: usize, v: usize) -> Self {
        Self::from_edges(self.n(), self.edges().chain(std::iter::once((u, v))))
    }

    pub fn density(&self) -> f64 {
        let n = self.n() as f64;
        if n < 2.0 {
            0.0
        } else {
            self.edge_count() as f64 / (n * (n - 1.0) / 2.0)
        }
    }

    /// Writes `n m`, then one `i j` line per edge with `i < j`, ascending.
    pub fn write_edge_list<W: Write>(&self, mut out: W) -> io::Result<()> {
        writeln!(out, "{} {}", self.n(), self.edge_count())?;
        for (i, j) in self.edges() {
            writeln!(out, "{i} {j}")?;
        }
        Ok(())
    }

    /// Reads the format written by [`Graph::write_edge_list`]: a header
    /// `n m`, then one `u v` pair per line. Blank lines and `#` comments
    /// are skipped.
    pub fn read_edge_list<R: BufRead>(input: R) -> Result<Self> {
        let mut lines = input
            .lines()
            .map(|l| l.map_err(crate::Error::from))
            .filter(|l| l.as_ref().map_or(true, |l| !l.trim().is_empty() && !l.trim_start().starts_with('#')));
        let parse_pair = |line: &str| -> Result<(usize, usize)> {
            let mut it = line.split_whitespace().map(str::parse::<usize>);
            match (it.next(), it.next(), it.next()) {
                (Some(Ok(a)), Some(Ok(b)), None) => Ok((a, b)),
                _ => Err(invalid("edge_list", format!("expected two integers, got `{line}`"))),
            }
        };
        let header = lines.next().ok_or_else(|| invalid("edge_list", "missing `n m` header"))??;
        let (n, m) = parse_pair(&header)?;
        let mut edges = Vec::with_capacity(m);
        for line in lines {
            let (u, v) = parse_pair(&line?)?;
            if u >= n || v >= n || u == v {
                return Err(invalid("edge_list", format!("bad edge ({u}, {v}) for n = {n}")));
            }
            edges.push((u, v));
        }
        if edges.len() != m {
            return Err(invalid("edge_list", format!("header announces {m} edges, found {}", edges.len())));
        }
        Ok(Graph::from_edges(n, edges))
    }
}

/// A sampled graph with the weights and scaling that produced it.
#[derive(Debug, Clone, PartialEq)]
pub struct GraphInstance<T> {
    pub n: usize,
    pub weights: Vec<T>,
    pub scaling: T,
    pub seed: u64,
    pub graph: Graph,
}

fn stream(seed: u64, id: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(id);
    rng
}

/// `n` weights drawn in index order from stream 0 of `seed`.
pub fn sample_weights<T: Scalar>(dist: &WeightDistribution<T>, n: usize, seed: u64) -> Vec<T> {
    dist.sample(&mut stream(seed, 0), n)
}

/// `n` draws of a truncated weight from stream 0 of `seed`.
pub fn sample_truncated_weights<T: Scalar>(weights: &TruncatedWeight<T>, n: usize, seed: u64) -> Vec<T> {
    weights.sample(&mut stream(seed, 0), n)
}

/// Samples the pair coins for given weights.
///
/// Row `i` (pairs `(i, j)`, `j > i`) draws from its own ChaCha stream
/// `i + 1`, so rows are independent of evaluation order. Within a row,
/// candidates are proposed by geometric skips at rate
/// `q_i = min(1, w_i max_{j>i} w_j / s^2)` and accepted with probability
/// `p_ij / q_i`; when `p_ij = q_i` no acceptance draw is made, so for
/// equal weights the coin stream depends on `p` alone.
pub fn sample_edges<T: Scalar>(weights: &[T], s: T, seed: u64) -> Graph {
    let n = weights.len();
    let w: Vec<f64> = weights.iter().map(|x| x.as_f64()).collect();
    let s2 = s.as_f64() * s.as_f64();
    let mut suffix_max = vec![0.0f64; n + 1];
    for i in (0..n).rev() {
        suffix_max[i] = suffix_max[i + 1].max(w[i]);
    }
    let upper: Vec<Vec<u32>> = (0..n)
        .into_par_iter()
        .map(|i| {
            let mut row = Vec::new();
            let q = (w[i] * suffix_max[i + 1] / s2).min(1.0);
            if !(q > 0.0) {
                return row;
            }
            let mut rng = stream(seed, i as u64 + 1);
            let ln_miss = (-q).ln_1p();
            let mut j = i + 1;
            loop {
                if q < 1.0 {
                    let u: f64 = rng.gen();
                    let skip = ((-u).ln_1p() / ln_miss).floor();
                    if skip >= (n - j) as f64 {
                        break;
                    }
                    j += skip as usize;
                }
                if j >= n {
                    break;
                }
                let p = (w[i] * w[j] / s2).min(1.0);
                if p >= q || rng.gen::<f64>() * q < p {
                    row.push(j as u32);
                }
                j += 1;
            }
            row
        })
        .collect();
    Graph::from_upper(upper)
}

/// Draws weights, then edges; bit-reproducible for a fixed seed.
pub fn sample_graph<T: Scalar>(
    dist: &WeightDistribution<T>,
    sched: &ScalingSchedule<T>,
    n: usize,
    seed: u64,
) -> Result<GraphInstance<T>> {
    dist.validate()?;
    let s = sched.value(n.max(2) as u64)?;
    let weights = sample_weights(dist, n, seed);
    Ok(instance_from_weights(weights, s, seed))
}

/// Builds an instance from given weights, e.g. draws of a truncated law.
pub fn instance_from_weights<T: Scalar>(weights: Vec<T>, s: T, seed: u64) -> GraphInstance<T> {
    let graph = sample_edges(&weights, s, seed);
    GraphInstance { n: weights.len(), weights, scaling: s, seed, graph }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    type S = ScalingSchedule<f64>;
    type D = WeightDistribution<f64>;

    #[test]
    fn schedule_values() {
        assert_eq!(S::Constant { value: 10.0 }.value(12345).unwrap(), 10.0);
        assert_relative_eq!(S::Power { exponent: 0.5 }.value(10_000).unwrap(), 100.0, max_relative = 1e-14);
        // (1 + phi) / beta with phi = 1, beta = 2, at ln n = 10.
        let n = 10f64.exp().round() as u64;
        let v = S::LogPower { coefficient: 1.0, exponent: 1.0 }.value(n).unwrap();
        assert_relative_eq!(v, (n as f64).ln(), max_relative = 1e-14);
        assert_relative_eq!(v, 10.0, max_relative = 1e-4);
        let hn = S::SqrtLog { coefficient: 2.0, exponent: 1.0, sigma: 1.0 }.value(1_000_000).unwrap();
        assert_relative_eq!(hn, 2.0 * (2.0 * 1e6f64.ln()).sqrt(), max_relative = 1e-14);
    }

    #[test]
    fn rejects_scaling_at_most_one() {
        assert!(S::Constant { value: 1.0 }.value(10).is_err());
        assert!(S::LogPower { coefficient: 0.1, exponent: 1.0 }.value(3).is_err());
        assert!(S::Power { exponent: 0.5 }.value(1).is_err());
    }

    #[test]
    fn schedule_json() {
        let s: S = serde_json::from_str(r#"{"kind":"sqrt_log","coefficient":2.0,"exponent":1.0}"#).unwrap();
        assert_eq!(s, S::SqrtLog { coefficient: 2.0, exponent: 1.0, sigma: 1.0 });
        let s: S = serde_json::from_str(r#"{"kind":"constant","value":2}"#).unwrap();
        assert_eq!(s, S::Constant { value: 2.0 });
    }

    #[test]
    fn edge_probabilities() {
        assert_eq!(edge_probability(1.0, 1.0, 2.0), 0.25);
        assert_eq!(edge_probability(3.0, 3.0, 2.0), 1.0);
        assert_eq!(edge_probability(0.0, 5.0, 2.0), 0.0);
    }

    #[test]
    fn assumption_examples() {
        let r = check_assumptions(&D::Degenerate { value: 1.0 }, &S::Constant { value: 10.0 }, 500, 0.1, &[]).unwrap();
        assert_eq!(r.prob_max_below, 1.0);
        assert!(r.satisfied_estimate);
        let r = check_assumptions(&D::Uniform01, &S::Constant { value: 2.0 }, 10_000, 0.5, &[0.5, 1.0]).unwrap();
        assert_eq!(r.prob_max_below, 1.0);
        assert_eq!(r.eta_sweep.len(), 2);
        let hn = check_assumptions(
            &D::HalfNormal { sigma: 1.0 },
            &S::SqrtLog { coefficient: 2.0, exponent: 1.0, sigma: 1.0 },
            1_000_000,
            0.1,
            &[],
        )
        .unwrap();
        assert_relative_eq!(hn.prob_max_below, 0.999_999_999_999_998_8, max_relative = 1e-15);
        assert!(check_assumptions(&D::Uniform01, &S::Constant { value: 2.0 }, 10, 0.0, &[]).is_err());
    }

    #[test]
    fn graph_basics() {
        let g = Graph::from_edges(4, [(0, 1), (1, 2), (2, 3), (1, 0), (2, 2)]);
        assert_eq!(g.edge_count(), 3);
        assert!(g.has_edge(1, 0) && !g.has_edge(0, 2));
        assert_eq!(g.neighbors(1), &[0, 2]);
        let mut out = Vec::new();
        g.write_edge_list(&mut out).unwrap();
        assert_eq!(String::from_utf8(out).unwrap(), "4 3\n0 1\n1 2\n2 3\n");
        assert_eq!(Graph::complete(5).edge_count(), 10);
        assert_eq!(g.with_edge(0, 3).edge_count(), 4);
    }

    #[test]
    fn symmetrization_keeps_rows_sorted() {
        let upper = vec![vec![2, 3], vec![3], vec![3], vec![]];
        let g = Graph::from_upper(upper);
        assert_eq!(g, Graph::from_edges(4, [(0, 2), (0, 3), (1, 3), (2, 3)]));
    }

    #[test]
    fn degenerate_extremes() {
        let g = sample_graph(&D::Degenerate { value: 0.0 }, &S::Constant { value: 2.0 }, 50, 1).unwrap();
        assert_eq!(g.graph.edge_count(), 0);
        let g = sample_graph(&D::Degenerate { value: 3.0 }, &S::Constant { value: 2.0 }, 30, 1).unwrap();
        assert_eq!(g.graph.edge_count(), 30 * 29 / 2);
    }

    #[test]
    fn er_density_concentrates() {
        let n = 10_000;
        let g = sample_graph(&D::Degenerate { value: 1.0 }, &S::Constant { value: 2.0 }, n, 99).unwrap();
        let pairs = (n * (n - 1) / 2) as f64;
        let sd = (pairs * 0.25 * 0.75).sqrt();
        assert!((g.graph.edge_count() as f64 - 0.25 * pairs).abs() < 5.0 * sd);
    }

    #[test]
    fn reproducible_and_seed_sensitive() {
        let d = D::Gamma { shape: 2.0, rate: 1.0 };
        let s = S::Constant { value: 6.0 };
        let a = sample_graph(&d, &s, 300, 5).unwrap();
        let b = sample_graph(&d, &s, 300, 5).unwrap();
        let c = sample_graph(&d, &s, 300, 6).unwrap();
        assert_eq!(a, b);
        assert_ne!(a.graph, c.graph);
    }

    #[test]
    fn er_stream_depends_only_on_p() {
        // Same p from different (c, s) pairs gives the same graph.
        let a = sample_graph(&D::Degenerate { value: 1.0 }, &S::Constant { value: 2.0 }, 200, 17).unwrap();
        let b = sample_graph(&D::Degenerate { value: 2.0 }, &S::Constant { value: 4.0 }, 200, 17).unwrap();
        assert_eq!(a.graph, b.graph);
    }

    #[test]
    fn inhomogeneous_pair_frequencies() {
        // Empirical frequency of each pair coin against p_ij on fixed weights.
        let weights = vec![0.2, 1.5, 0.7, 1.9, 1.0];
        let s = 2.0;
        let trials = 20_000;
        let mut counts = [[0u32; 5]; 5];
        for seed in 0..trials {
            for (i, j) in sample_edges(&weights, s, seed).edges() {
                counts[i][j] += 1;
            }
        }
        for i in 0..5 {
            for j in i + 1..5 {
                let p = edge_probability(weights[i], weights[j], s);
                let sd = (p * (1.0 - p) / trials as f64).sqrt();
                let freq = counts[i][j] as f64 / trials as f64;
                assert!((freq - p).abs() <= 5.0 * sd + 1e-12, "({i},{j}) {freq} vs {p}");
            }
        }
    }
}
