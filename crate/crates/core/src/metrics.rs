//! Finite metrics: shortest-path metrics of graphs, diameters, average
//! distances and the ball-growth lower bound on average distance.

use std::collections::VecDeque;

use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{invalid, Error, Result};
use crate::graphs::RegularGraph;

/// Slack allowed in the triangle inequality.
pub const TRIANGLE_TOL: f64 = 1e-9;
const EXHAUSTIVE_TRIANGLE_MAX_N: usize = 300;
const SAMPLED_TRIPLES: usize = 100_000;

/// An n-point metric given by its full distance matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct FiniteMetric {
    dist: DMatrix<f64>,
    diameter: f64,
    avg_distance: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct MetricSummary {
    pub n: usize,
    pub diameter: f64,
    pub avg_distance: f64,
}

impl FiniteMetric {
    /// Validates the metric axioms and builds the metric.
    pub fn new(dist: DMatrix<f64>) -> Result<Self> {
        let m = Self::from_matrix_unchecked(dist)?;
        m.check_invariants()?;
        Ok(m)
    }

    fn from_matrix_unchecked(dist: DMatrix<f64>) -> Result<Self> {
        let n = dist.nrows();
        if n == 0 || dist.ncols() != n {
            return Err(Error::InvalidMetric(format!(
                "expected a nonempty square matrix, got {}x{}",
                dist.nrows(),
                dist.ncols()
            )));
        }
        let diameter = dist.iter().copied().fold(0.0_f64, f64::max);
        let avg_distance = dist.sum() / (n * n) as f64;
        Ok(Self { dist, diameter, avg_distance })
    }

    pub fn n(&self) -> usize {
        self.dist.nrows()
    }

    pub fn dist(&self, i: usize, j: usize) -> f64 {
        self.dist[(i, j)]
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.dist
    }

    pub fn diameter(&self) -> f64 {
        self.diameter
    }

    /// `(1/n²) Σ_i Σ_j d(i, j)`, diagonal zeros included.
    pub fn avg_distance(&self) -> f64 {
        self.avg_distance
    }

    pub fn min_positive_distance(&self) -> f64 {
        let n = self.n();
        let mut best = f64::INFINITY;
        for j in 0..n {
            for i in 0..j {
                best = best.min(self.dist[(i, j)]);
            }
        }
        best
    }

    pub fn summary(&self) -> MetricSummary {
        MetricSummary { n: self.n(), diameter: self.diameter, avg_distance: self.avg_distance }
    }

    /// Zero diagonal, symmetry, positivity, finiteness and the triangle
    /// inequality (exhaustive up to 300 points, 10⁵ sampled triples beyond).
    pub fn check_invariants(&self) -> Result<()> {
        let n = self.n();
        let d = &self.dist;
        for i in 0..n {
            if d[(i, i)] != 0.0 {
                return Err(Error::InvalidMetric(format!("d({i}, {i}) = {} is not zero", d[(i, i)])));
            }
            for j in (i + 1)..n {
                let x = d[(i, j)];
                if !x.is_finite() || x <= 0.0 {
                    return Err(Error::InvalidMetric(format!("d({i}, {j}) = {x} must be positive and finite")));
                }
                if x != d[(j, i)] {
                    return Err(Error::InvalidMetric(format!("d({i}, {j}) != d({j}, {i})")));
                }
            }
        }
        let violated = |i: usize, j: usize, k: usize| d[(i, k)] > d[(i, j)] + d[(j, k)] + TRIANGLE_TOL;
        if n <= EXHAUSTIVE_TRIANGLE_MAX_N {
            for i in 0..n {
                for j in 0..n {
                    for k in 0..n {
                        if violated(i, j, k) {
                            return Err(Error::InvalidMetric(format!("triangle inequality fails on ({i}, {j}, {k})")));
                        }
                    }
                }
            }
        } else {
            let mut rng = ChaCha8Rng::seed_from_u64(n as u64);
            for _ in 0..SAMPLED_TRIPLES {
                let (i, j, k) = (rng.random_range(0..n), rng.random_range(0..n), rng.random_range(0..n));
                if violated(i, j, k) {
                    return Err(Error::InvalidMetric(format!("triangle inequality fails on ({i}, {j}, {k})")));
                }
            }
        }
        Ok(())
    }

    /// The metric `t·d`.
    pub fn scaled(&self, t: f64) -> Result<Self> {
        if !(t > 0.0 && t.is_finite()) {
            return Err(invalid("metric scale must be positive"));
        }
        Self::from_matrix_unchecked(&self.dist * t)
    }
}

fn bfs(g: &RegularGraph, source: usize) -> Vec<u32> {
    let mut dist = vec![u32::MAX; g.n()];
    dist[source] = 0;
    let mut queue = VecDeque::from([source]);
    while let Some(u) = queue.pop_front() {
        let next = dist[u] + 1;
        for &w in g.neighbors(u) {
            if dist[w] == u32::MAX {
                dist[w] = next;
                queue.push_back(w);
            }
        }
    }
    dist
}

/// All-pairs BFS distances of a connected graph.
pub fn shortest_path_metric(g: &RegularGraph) -> Result<FiniteMetric> {
    let n = g.n();
    let rows: Vec<Vec<u32>> = (0..n).into_par_iter().map(|s| bfs(g, s)).collect();
    if rows[0].contains(&u32::MAX) {
        return Err(Error::DisconnectedGraph);
    }
    let dist = DMatrix::from_fn(n, n, |i, j| f64::from(rows[i][j]));
    FiniteMetric::from_matrix_unchecked(dist)
}

/// Certified lower bound on the average distance of any connected k-regular
/// graph on n vertices.
///
/// A ball of radius t in a k-regular graph holds at most
/// `1 + k((k-1)^t - 1)/(k-2)` vertices. If `t` is the largest radius whose
/// ball is smaller than `n/2`, more than half of the vertices lie at distance
/// greater than `t` from any given vertex, so the average distance is at
/// least `t/2`. Returns `t/2` (or 0 when no radius qualifies).
pub fn counting_lower_bound(n: usize, k: usize) -> Result<f64> {
    if k <= 2 {
        return Err(invalid(format!("counting bound needs k >= 3, got {k}")));
    }
    if n < 2 {
        return Err(invalid(format!("counting bound needs n >= 2, got {n}")));
    }
    let half = n as f64 / 2.0;
    let ball = |t: u32| -> f64 {
        let km1 = (k - 1) as f64;
        1.0 + k as f64 * (km1.powi(t as i32) - 1.0) / (k - 2) as f64
    };
    if ball(0) >= half {
        return Ok(0.0);
    }
    let mut t = 0u32;
    while ball(t + 1) < half {
        t += 1;
    }
    Ok(f64::from(t) / 2.0)
}
