//! Regular (multi)graphs and their normalized adjacency matrices.
//!
//! A [`RegularGraph`] stores its edges as a symmetric multiplicity table:
//! every unordered pair `{u, v}` carries an integer multiplicity, and the
//! weighted degree of a vertex is the sum of the multiplicities of the pairs
//! that contain it. All families except Margulis are loopless. The affine
//! Margulis maps have fixed points, so a Margulis vertex may carry a loop
//! entry `{v, v}`; a loop of multiplicity `m` adds `m` to the degree of `v`
//! and `m / k` to the diagonal of the normalized adjacency matrix.

use std::collections::{BTreeMap, VecDeque};
use std::fmt;

use nalgebra::DMatrix;
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::limits::Limits;

/// Default number of full resamples attempted by [`random_regular_graph`].
pub const DEFAULT_SAMPLING_ATTEMPTS: usize = 1000;

/// Tolerance used when validating externally supplied stochastic matrices.
pub const STOCHASTIC_INPUT_TOL: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Family {
    Cycle,
    Complete,
    Hypercube,
    RandomRegular,
    Margulis,
    Custom,
}

impl fmt::Display for Family {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            Family::Cycle => "cycle",
            Family::Complete => "complete",
            Family::Hypercube => "hypercube",
            Family::RandomRegular => "random_regular",
            Family::Margulis => "margulis",
            Family::Custom => "custom",
        };
        f.write_str(s)
    }
}

/// One entry of the multiplicity table, normalized so that `u <= v`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct Edge {
    pub u: usize,
    pub v: usize,
    pub mult: u32,
}

/// An undirected k-regular multigraph on `n` vertices.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RegularGraph {
    n: usize,
    k: usize,
    edges: Vec<Edge>,
    family: Family,
    /// Distinct neighbours of each vertex, loops excluded, sorted.
    adjacency: Vec<Vec<usize>>,
}

impl RegularGraph {
    /// Builds a graph from a list of `(u, v, multiplicity)` triples.
    ///
    /// Repeated pairs are merged by adding multiplicities. Loops are only
    /// accepted for the Margulis and custom families.
    pub fn from_edges(
        n: usize,
        k: usize,
        edges: impl IntoIterator<Item = (usize, usize, u32)>,
        family: Family,
    ) -> Result<Self> {
        if n == 0 {
            return Err(invalid("graph must have at least one vertex"));
        }
        if k == 0 {
            return Err(invalid("degree k must be at least 1"));
        }
        let loops_allowed = matches!(family, Family::Margulis | Family::Custom);
        let mut table: BTreeMap<(usize, usize), u64> = BTreeMap::new();
        for (a, b, mult) in edges {
            if a >= n || b >= n {
                return Err(invalid(format!("edge ({a}, {b}) references a vertex outside 0..{n}")));
            }
            if mult == 0 {
                return Err(invalid(format!("edge ({a}, {b}) has zero multiplicity")));
            }
            if a == b && !loops_allowed {
                return Err(invalid(format!("self-loop at vertex {a} is not allowed for {family} graphs")));
            }
            let key = (a.min(b), a.max(b));
            *table.entry(key).or_insert(0) += u64::from(mult);
        }

        let mut degree = vec![0u64; n];
        let mut adjacency = vec![Vec::new(); n];
        let mut merged = Vec::with_capacity(table.len());
        for (&(u, v), &mult) in &table {
            let mult = u32::try_from(mult).map_err(|_| invalid("edge multiplicity overflow"))?;
            if u == v {
                degree[u] += u64::from(mult);
            } else {
                degree[u] += u64::from(mult);
                degree[v] += u64::from(mult);
                adjacency[u].push(v);
                adjacency[v].push(u);
            }
            merged.push(Edge { u, v, mult });
        }
        if let Some((vertex, &d)) = degree.iter().enumerate().find(|(_, &d)| d != k as u64) {
            return Err(invalid(format!("vertex {vertex} has weighted degree {d}, expected {k}")));
        }
        for list in &mut adjacency {
            list.sort_unstable();
        }
        Ok(Self { n, k, edges: merged, family, adjacency })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn family(&self) -> Family {
        self.family
    }

    /// The merged multiplicity table, sorted by `(u, v)`.
    pub fn edges(&self) -> &[Edge] {
        &self.edges
    }

    /// Distinct neighbours of `v` (loops excluded).
    pub fn neighbors(&self, v: usize) -> &[usize] {
        &self.adjacency[v]
    }

    pub fn weighted_degree(&self, v: usize) -> u64 {
        self.edges
            .iter()
            .filter(|e| e.u == v || e.v == v)
            .map(|e| u64::from(e.mult))
            .sum()
    }

    pub fn is_connected(&self) -> bool {
        let mut seen = vec![false; self.n];
        let mut queue = VecDeque::from([0usize]);
        seen[0] = true;
        let mut count = 1;
        while let Some(u) = queue.pop_front() {
            for &w in &self.adjacency[u] {
                if !seen[w] {
                    seen[w] = true;
                    count += 1;
                    queue.push_back(w);
                }
            }
        }
        count == self.n
    }

    /// Relabels the graph as a custom graph (used by parsers).
    pub fn with_family(mut self, family: Family) -> Self {
        self.family = family;
        self
    }
}

/// A dense symmetric row-stochastic matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct StochasticMatrix {
    entries: DMatrix<f64>,
    /// Nonzero off-diagonal entries of each row, `(column, value)`.
    support: Vec<Vec<(usize, f64)>>,
}

impl StochasticMatrix {
    /// Validates symmetry, nonnegativity and unit row sums (within
    /// [`STOCHASTIC_INPUT_TOL`]) and symmetrizes exactly.
    pub fn new(entries: DMatrix<f64>) -> Result<Self> {
        let n = entries.nrows();
        if n == 0 || entries.ncols() != n {
            return Err(Error::InvalidMatrix(format!(
                "expected a nonempty square matrix, got {}x{}",
                entries.nrows(),
                entries.ncols()
            )));
        }
        let mut sym = entries;
        for i in 0..n {
            let mut row_sum = 0.0;
            for j in 0..n {
                let x = sym[(i, j)];
                if !x.is_finite() {
                    return Err(Error::InvalidMatrix(format!("entry ({i}, {j}) is not finite")));
                }
                if x < 0.0 {
                    return Err(Error::InvalidMatrix(format!("entry ({i}, {j}) = {x} is negative")));
                }
                let y = sym[(j, i)];
                if (x - y).abs() > STOCHASTIC_INPUT_TOL {
                    return Err(Error::InvalidMatrix(format!(
                        "asymmetric: entry ({i}, {j}) = {x} but ({j}, {i}) = {y}"
                    )));
                }
                row_sum += x;
            }
            if (row_sum - 1.0).abs() > STOCHASTIC_INPUT_TOL {
                return Err(Error::InvalidMatrix(format!("row {i} sums to {row_sum}")));
            }
        }
        for i in 0..n {
            for j in (i + 1)..n {
                let m = 0.5 * (sym[(i, j)] + sym[(j, i)]);
                sym[(i, j)] = m;
                sym[(j, i)] = m;
            }
        }
        Ok(Self::from_symmetric_unchecked(sym))
    }

    fn from_symmetric_unchecked(entries: DMatrix<f64>) -> Self {
        let n = entries.nrows();
        let support = (0..n)
            .map(|i| {
                (0..n)
                    .filter(|&j| j != i && entries[(i, j)] != 0.0)
                    .map(|j| (j, entries[(i, j)]))
                    .collect()
            })
            .collect();
        Self { entries, support }
    }

    pub fn n(&self) -> usize {
        self.entries.nrows()
    }

    pub fn entries(&self) -> &DMatrix<f64> {
        &self.entries
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.entries[(i, j)]
    }

    /// Off-diagonal nonzeros of row `i`.
    pub fn row_support(&self, i: usize) -> &[(usize, f64)] {
        &self.support[i]
    }

    /// `y = A x` using the sparse support (diagonal included).
    pub fn mul_vec(&self, x: &[f64], y: &mut [f64]) {
        for (i, yi) in y.iter_mut().enumerate() {
            let mut acc = self.entries[(i, i)] * x[i];
            for &(j, w) in &self.support[i] {
                acc += w * x[j];
            }
            *yi = acc;
        }
    }

    pub fn trace(&self) -> f64 {
        self.entries.diagonal().sum()
    }

    /// Whether the graph of off-diagonal nonzeros is connected, which holds
    /// exactly when `lambda2 < 1`.
    pub fn support_connected(&self) -> bool {
        let n = self.n();
        let mut seen = vec![false; n];
        seen[0] = true;
        let mut stack = vec![0usize];
        let mut count = 1;
        while let Some(u) = stack.pop() {
            for &(w, _) in &self.support[u] {
                if !seen[w] {
                    seen[w] = true;
                    count += 1;
                    stack.push(w);
                }
            }
        }
        count == n
    }

    /// Conjugation by a permutation: `B[i][j] = A[perm[i]][perm[j]]`.
    pub fn permuted(&self, perm: &[usize]) -> Result<Self> {
        let n = self.n();
        if perm.len() != n {
            return Err(invalid("permutation length mismatch"));
        }
        let m = DMatrix::from_fn(n, n, |i, j| self.entries[(perm[i], perm[j])]);
        Ok(Self::from_symmetric_unchecked(m))
    }
}

/// The 2-regular cycle on `n >= 3` vertices.
pub fn cycle_graph(n: usize) -> Result<RegularGraph> {
    if n < 3 {
        return Err(invalid(format!("cycle needs n >= 3, got {n}")));
    }
    Limits::from_env().check(n)?;
    RegularGraph::from_edges(n, 2, (0..n).map(|i| (i, (i + 1) % n, 1)), Family::Cycle)
}

/// The complete graph K_n, `n >= 2`.
pub fn complete_graph(n: usize) -> Result<RegularGraph> {
    if n < 2 {
        return Err(invalid(format!("complete graph needs n >= 2, got {n}")));
    }
    Limits::from_env().check(n)?;
    let edges = (0..n).flat_map(|i| ((i + 1)..n).map(move |j| (i, j, 1)));
    RegularGraph::from_edges(n, n - 1, edges, Family::Complete)
}

/// The d-dimensional hypercube Q_d on `2^d` vertices.
pub fn hypercube_graph(d: u32) -> Result<RegularGraph> {
    if d == 0 {
        return Err(invalid("hypercube dimension must be at least 1"));
    }
    let limits = Limits::from_env();
    let n = 1usize
        .checked_shl(d)
        .filter(|_| d < usize::BITS - 1)
        .ok_or(Error::SizeLimit { n: usize::MAX, max: limits.max_n })?;
    limits.check(n)?;
    let edges = (0..n).flat_map(move |v| {
        (0..d).filter_map(move |b| {
            let w = v ^ (1 << b);
            (v < w).then_some((v, w, 1))
        })
    });
    RegularGraph::from_edges(n, d as usize, edges, Family::Hypercube)
}

/// A simple connected k-regular graph sampled with the pairing model and
/// [`DEFAULT_SAMPLING_ATTEMPTS`] full resamples.
pub fn random_regular_graph(n: usize, k: usize, seed: u64) -> Result<RegularGraph> {
    random_regular_graph_with(n, k, seed, DEFAULT_SAMPLING_ATTEMPTS)
}

/// Pairing-model sampler: shuffle the `n·k` half-edges, pair them up, and
/// resample from scratch whenever the result has a loop, a parallel edge, or
/// is disconnected.
pub fn random_regular_graph_with(n: usize, k: usize, seed: u64, attempts: usize) -> Result<RegularGraph> {
    if k < 3 || k >= n {
        return Err(invalid(format!("random regular graph needs 3 <= k < n, got n = {n}, k = {k}")));
    }
    if !(n * k).is_multiple_of(2) {
        return Err(invalid(format!("n·k must be even, got n = {n}, k = {k}")));
    }
    Limits::from_env().check(n)?;
    if k == n - 1 {
        // K_n is the only simple (n-1)-regular graph.
        return complete_graph(n).map(|g| g.with_family(Family::RandomRegular));
    }

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut points: Vec<usize> = (0..n).flat_map(|v| std::iter::repeat_n(v, k)).collect();
    let mut seen = std::collections::HashSet::with_capacity(n * k / 2);
    'attempt: for _ in 0..attempts {
        points.shuffle(&mut rng);
        seen.clear();
        let mut edges = Vec::with_capacity(n * k / 2);
        for pair in points.chunks_exact(2) {
            let (a, b) = (pair[0].min(pair[1]), pair[0].max(pair[1]));
            if a == b || !seen.insert((a, b)) {
                continue 'attempt;
            }
            edges.push((a, b, 1));
        }
        let g = RegularGraph::from_edges(n, k, edges, Family::RandomRegular)?;
        if g.is_connected() {
            return Ok(g);
        }
    }
    Err(Error::SamplingFailure { attempts })
}

/// The 8-regular Margulis–Gabber–Galil multigraph on `Z_m × Z_m`.
///
/// Vertex `(x, y)` (index `x·m + y`) is joined to its images under
/// `(x, y) ↦ (x ± y, y)`, `(x ± (y + 1), y)`, `(x, y ± x)` and `(x, y ± (x + 1))`,
/// i.e. the four maps `T1, T2, S1, S2` and their inverses. Repeated targets
/// become multiplicities and fixed points become loops.
pub fn margulis_graph(m: usize) -> Result<RegularGraph> {
    if m < 2 {
        return Err(invalid(format!("Margulis graph needs m >= 2, got {m}")));
    }
    let limits = Limits::from_env();
    let n = m.checked_mul(m).ok_or(Error::SizeLimit { n: usize::MAX, max: limits.max_n })?;
    limits.check(n)?;
    let idx = |x: usize, y: usize| (x % m) * m + (y % m);
    let mut edges = Vec::with_capacity(4 * n);
    for x in 0..m {
        for y in 0..m {
            let v = idx(x, y);
            // Forward maps only: each image edge contributes one to both
            // endpoints, and the inverse maps are the reversed edges.
            let targets = [idx(x + y, y), idx(x + y + 1, y), idx(x, y + x), idx(x, y + x + 1)];
            for w in targets {
                if v == w {
                    // A fixed point of T is also a fixed point of T^-1.
                    edges.push((v, v, 2));
                } else {
                    edges.push((v, w, 1));
                }
            }
        }
    }
    RegularGraph::from_edges(n, 8, edges, Family::Margulis)
}

/// `A = M / k` where `M` is the multiplicity table.
pub fn normalized_adjacency(g: &RegularGraph) -> StochasticMatrix {
    let n = g.n();
    let k = g.k() as f64;
    let mut a = DMatrix::zeros(n, n);
    for e in g.edges() {
        let w = f64::from(e.mult) / k;
        if e.u == e.v {
            a[(e.u, e.u)] += w;
        } else {
            a[(e.u, e.v)] += w;
            a[(e.v, e.u)] += w;
        }
    }
    StochasticMatrix::from_symmetric_unchecked(a)
}

/// A random dense symmetric stochastic matrix: i.i.d. uniform off-diagonal
/// weights scaled by the largest row sum, with the deficit put on the diagonal.
pub fn random_stochastic_matrix(n: usize, seed: u64) -> Result<StochasticMatrix> {
    if n < 2 {
        return Err(invalid("random stochastic matrix needs n >= 2"));
    }
    Limits::from_env().check(n)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut w = DMatrix::zeros(n, n);
    for i in 0..n {
        for j in (i + 1)..n {
            let x: f64 = rng.random_range(0.0..1.0);
            w[(i, j)] = x;
            w[(j, i)] = x;
        }
    }
    let max_row = (0..n).map(|i| w.row(i).sum()).fold(0.0_f64, f64::max);
    w /= max_row;
    for i in 0..n {
        let s = w.row(i).sum();
        w[(i, i)] = (1.0 - s).max(0.0);
    }
    Ok(StochasticMatrix::from_symmetric_unchecked(w))
}

/// Disjoint union of two graphs' matrices, used to build disconnected examples.
pub fn block_diagonal(a: &StochasticMatrix, b: &StochasticMatrix) -> StochasticMatrix {
    let (na, nb) = (a.n(), b.n());
    let mut m = DMatrix::zeros(na + nb, na + nb);
    m.view_mut((0, 0), (na, na)).copy_from(a.entries());
    m.view_mut((na, na), (nb, nb)).copy_from(b.entries());
    StochasticMatrix::from_symmetric_unchecked(m)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn assert_stochastic(a: &StochasticMatrix) {
        let n = a.n();
        for i in 0..n {
            let s: f64 = (0..n).map(|j| a.get(i, j)).sum();
            assert!((s - 1.0).abs() <= 1e-12, "row {i} sums to {s}");
            for j in 0..n {
                assert!(a.get(i, j) >= 0.0);
                assert_eq!(a.get(i, j), a.get(j, i));
            }
        }
    }

    #[test]
    fn cycle_edges() {
        let g = cycle_graph(4).unwrap();
        assert_eq!(g.k(), 2);
        let pairs: Vec<_> = g.edges().iter().map(|e| (e.u, e.v)).collect();
        assert_eq!(pairs, vec![(0, 1), (0, 3), (1, 2), (2, 3)]);
        assert!(cycle_graph(2).is_err());
    }

    #[test]
    fn triangle_is_k3() {
        let c = cycle_graph(3).unwrap();
        let k = complete_graph(3).unwrap();
        assert_eq!(c.edges(), k.edges());
    }

    #[test]
    fn complete_counts() {
        let g = complete_graph(4).unwrap();
        assert_eq!((g.k(), g.edges().len()), (3, 6));
        let g = complete_graph(2).unwrap();
        assert_eq!((g.k(), g.edges().len()), (1, 1));
        assert!(complete_graph(1).is_err());
    }

    #[test]
    fn hypercube_shape() {
        let g = hypercube_graph(3).unwrap();
        assert_eq!((g.n(), g.k()), (8, 3));
        let g = hypercube_graph(1).unwrap();
        assert_eq!(g.edges().len(), 1);
        assert!(matches!(hypercube_graph(15), Err(Error::SizeLimit { .. })));
        assert!(matches!(hypercube_graph(200), Err(Error::SizeLimit { .. })));
    }

    #[test]
    fn random_regular_degrees_and_reproducibility() {
        let g = random_regular_graph(10, 3, 1).unwrap();
        let mut hist = [0usize; 10];
        for e in g.edges() {
            assert_eq!(e.mult, 1);
            assert_ne!(e.u, e.v);
            hist[e.u] += 1;
            hist[e.v] += 1;
        }
        assert!(hist.iter().all(|&d| d == 3));
        assert!(g.is_connected());
        assert_eq!(g, random_regular_graph(10, 3, 1).unwrap());
    }

    #[test]
    fn random_regular_forced_complete() {
        let g = random_regular_graph(10, 9, 5).unwrap();
        assert_eq!(g.edges().len(), 45);
    }

    #[test]
    fn random_regular_errors() {
        assert!(matches!(random_regular_graph(9, 3, 0), Err(Error::InvalidParameter(_))));
        assert!(random_regular_graph(10, 2, 0).is_err());
        assert!(matches!(
            random_regular_graph_with(12, 5, 0, 0),
            Err(Error::SamplingFailure { attempts: 0 })
        ));
    }

    #[test]
    fn margulis_degrees() {
        for m in 2..6 {
            let g = margulis_graph(m).unwrap();
            assert_eq!(g.n(), m * m);
            for v in 0..g.n() {
                assert_eq!(g.weighted_degree(v), 8);
            }
            assert_stochastic(&normalized_adjacency(&g));
        }
        assert!(margulis_graph(1).is_err());
        assert!(matches!(margulis_graph(1000), Err(Error::SizeLimit { .. })));
    }

    #[test]
    fn normalized_examples() {
        let a = normalized_adjacency(&complete_graph(2).unwrap());
        assert_eq!(a.entries(), &DMatrix::from_row_slice(2, 2, &[0.0, 1.0, 1.0, 0.0]));
        let a = normalized_adjacency(&cycle_graph(4).unwrap());
        for i in 0..4 {
            assert_eq!((0..4).filter(|&j| a.get(i, j) == 0.5).count(), 2);
        }
        let a = normalized_adjacency(&complete_graph(4).unwrap());
        for i in 0..4 {
            for j in 0..4 {
                let want = if i == j { 0.0 } else { 1.0 / 3.0 };
                assert_eq!(a.get(i, j), want);
            }
        }
    }

    #[test]
    fn families_connected() {
        assert!(cycle_graph(17).unwrap().is_connected());
        assert!(complete_graph(6).unwrap().is_connected());
        assert!(hypercube_graph(5).unwrap().is_connected());
        assert!(margulis_graph(7).unwrap().is_connected());
    }

    #[test]
    fn rejects_bad_custom_graphs() {
        assert!(RegularGraph::from_edges(3, 2, [(0, 1, 1), (1, 2, 1)], Family::Custom).is_err());
        assert!(RegularGraph::from_edges(2, 1, [(0, 2, 1)], Family::Custom).is_err());
        assert!(RegularGraph::from_edges(3, 2, [(0, 0, 2), (1, 2, 2)], Family::Cycle).is_err());
        let g = RegularGraph::from_edges(2, 3, [(0, 1, 2), (0, 1, 1)], Family::Custom).unwrap();
        assert_eq!(g.edges(), &[Edge { u: 0, v: 1, mult: 3 }]);
    }

    #[test]
    fn stochastic_validation() {
        assert!(StochasticMatrix::new(DMatrix::from_row_slice(2, 2, &[0.5, 0.5, 0.5, 0.5])).is_ok());
        assert!(StochasticMatrix::new(DMatrix::from_row_slice(2, 2, &[0.9, 0.1, 0.2, 0.8])).is_err());
        assert!(StochasticMatrix::new(DMatrix::from_row_slice(2, 2, &[1.5, -0.5, -0.5, 1.5])).is_err());
        assert!(StochasticMatrix::new(DMatrix::from_row_slice(1, 2, &[0.5, 0.5])).is_err());
        let r = random_stochastic_matrix(9, 3).unwrap();
        assert_stochastic(&r);
        assert!(r.support_connected());
    }
}
