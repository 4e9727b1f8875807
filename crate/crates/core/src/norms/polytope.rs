//! Centrally symmetric polytopes given by their vertices, used as unit balls.
//!
//! The gauge of `P = conv(V)` is `max { <y, x> : y ∈ P° }`, where the polar
//! `P° = { y : <y, v> <= 1 for all v ∈ V }`. When the vertex count is small
//! enough the vertices of `P°` (the facet functionals of `P`) are enumerated
//! once and the gauge is a maximum over them; otherwise every evaluation
//! solves the polar linear program.

use minilp::{ComparisonOp, OptimizationDirection, Problem};
use nalgebra::{DMatrix, DVector};

use crate::error::{invalid, Error, Result};

/// Facet enumeration is skipped when `C(|V|, dim)` exceeds this.
pub const MAX_FACET_SUBSETS: u128 = 200_000;
const SYMMETRY_TOL: f64 = 1e-9;
const FEASIBILITY_TOL: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq)]
pub struct Polytope {
    dim: usize,
    vertices: Vec<Vec<f64>>,
    /// Vertices of the polar body, sorted lexicographically.
    facets: Option<Vec<Vec<f64>>>,
}

fn binomial(n: usize, k: usize) -> u128 {
    if k > n {
        return 0;
    }
    let k = k.min(n - k);
    let mut acc: u128 = 1;
    for i in 0..k {
        acc = acc.saturating_mul((n - i) as u128) / (i as u128 + 1);
    }
    acc
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

impl Polytope {
    /// Validates central symmetry and full dimension, then enumerates facets
    /// when affordable.
    pub fn new(vertices: Vec<Vec<f64>>) -> Result<Self> {
        let dim = vertices.first().map(Vec::len).ok_or_else(|| invalid("polytope needs vertices"))?;
        if dim == 0 {
            return Err(invalid("polytope vertices must have positive dimension"));
        }
        if vertices.iter().any(|v| v.len() != dim) {
            return Err(invalid("polytope vertices have inconsistent dimensions"));
        }
        if vertices.iter().flatten().any(|x| !x.is_finite()) {
            return Err(invalid("polytope vertices must be finite"));
        }
        for (i, v) in vertices.iter().enumerate() {
            let mirrored = vertices
                .iter()
                .any(|w| v.iter().zip(w).all(|(a, b)| (a + b).abs() <= SYMMETRY_TOL));
            if !mirrored {
                return Err(invalid(format!("vertex {i} has no antipode; the polytope must be centrally symmetric")));
            }
        }
        let gram = DMatrix::from_fn(dim, dim, |r, c| vertices.iter().map(|v| v[r] * v[c]).sum::<f64>());
        let eig = gram.clone().symmetric_eigen();
        let max = eig.eigenvalues.max();
        let min = eig.eigenvalues.min();
        if !(max > 0.0) || min <= 1e-10 * max {
            return Err(invalid("polytope vertices do not span the ambient space"));
        }

        let mut poly = Self { dim, vertices, facets: None };
        if binomial(poly.vertices.len(), dim) <= MAX_FACET_SUBSETS {
            poly.facets = Some(poly.enumerate_facets());
        }
        Ok(poly)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn vertices(&self) -> &[Vec<f64>] {
        &self.vertices
    }

    /// Facet functionals, when they were enumerated.
    pub fn facets(&self) -> Option<&[Vec<f64>]> {
        self.facets.as_deref()
    }

    fn enumerate_facets(&self) -> Vec<Vec<f64>> {
        let d = self.dim;
        let m = self.vertices.len();
        let mut found: Vec<Vec<f64>> = Vec::new();
        let mut subset: Vec<usize> = (0..d).collect();
        loop {
            let a = DMatrix::from_fn(d, d, |r, c| self.vertices[subset[r]][c]);
            if let Some(y) = a.lu().solve(&DVector::from_element(d, 1.0)) {
                let y: Vec<f64> = y.iter().copied().collect();
                let ok = y.iter().all(|v| v.is_finite())
                    && self.vertices.iter().all(|v| dot(&y, v) <= 1.0 + FEASIBILITY_TOL)
                    && subset.iter().all(|&i| (dot(&y, &self.vertices[i]) - 1.0).abs() <= 1e-7);
                if ok {
                    found.push(y);
                }
            }
            // next combination in lexicographic order
            let mut i = d;
            loop {
                if i == 0 {
                    found.sort_by(|a, b| {
                        a.iter().zip(b).map(|(x, y)| x.total_cmp(y)).find(|o| o.is_ne()).unwrap_or(std::cmp::Ordering::Equal)
                    });
                    found.dedup_by(|a, b| a.iter().zip(b.iter()).all(|(x, y)| (x - y).abs() <= 1e-9));
                    return found;
                }
                i -= 1;
                if subset[i] < m - d + i {
                    subset[i] += 1;
                    for j in (i + 1)..d {
                        subset[j] = subset[j - 1] + 1;
                    }
                    break;
                }
            }
        }
    }

    /// Gauge and a maximizing polar functional (a subgradient of the gauge).
    pub fn gauge_with_functional(&self, x: &[f64]) -> (f64, Vec<f64>) {
        match &self.facets {
            Some(facets) => {
                let mut best = 0.0;
                let mut arg = 0;
                for (i, y) in facets.iter().enumerate() {
                    let v = dot(y, x);
                    if v > best {
                        best = v;
                        arg = i;
                    }
                }
                if best == 0.0 {
                    (0.0, vec![0.0; self.dim])
                } else {
                    (best, facets[arg].clone())
                }
            }
            None => self.gauge_lp(x).unwrap_or_else(|_| (f64::NAN, vec![f64::NAN; self.dim])),
        }
    }

    pub fn gauge(&self, x: &[f64]) -> f64 {
        match &self.facets {
            Some(facets) => facets.iter().map(|y| dot(y, x)).fold(0.0, f64::max),
            None => self.gauge_lp(x).map(|(g, _)| g).unwrap_or(f64::NAN),
        }
    }

    /// Solves `max <y, x>` subject to `<y, v> <= 1` for every vertex.
    pub fn gauge_lp(&self, x: &[f64]) -> Result<(f64, Vec<f64>)> {
        if x.iter().all(|&v| v == 0.0) {
            return Ok((0.0, vec![0.0; self.dim]));
        }
        let mut problem = Problem::new(OptimizationDirection::Maximize);
        let vars: Vec<_> = x.iter().map(|&c| problem.add_var(c, (f64::NEG_INFINITY, f64::INFINITY))).collect();
        for v in &self.vertices {
            let expr: Vec<_> = vars.iter().copied().zip(v.iter().copied()).collect();
            problem.add_constraint(expr, ComparisonOp::Le, 1.0);
        }
        let solution = problem
            .solve()
            .map_err(|e| Error::NumericalFailure(format!("polytope gauge LP failed: {e}")))?;
        let y = vars.iter().map(|&v| solution[v]).collect();
        Ok((solution.objective().max(0.0), y))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cross() -> Polytope {
        Polytope::new(vec![vec![1.0, 0.0], vec![-1.0, 0.0], vec![0.0, 1.0], vec![0.0, -1.0]]).unwrap()
    }

    #[test]
    fn cross_polytope_is_l1() {
        let p = cross();
        assert_eq!(p.facets().unwrap().len(), 4);
        assert!((p.gauge(&[0.5, 0.5]) - 1.0).abs() < 1e-12);
        assert!((p.gauge(&[-3.0, 1.0]) - 4.0).abs() < 1e-12);
    }

    #[test]
    fn lp_agrees_with_facets() {
        let p = Polytope::new(vec![
            vec![1.0, 0.0, 0.0],
            vec![-1.0, 0.0, 0.0],
            vec![0.3, 1.0, 0.0],
            vec![-0.3, -1.0, 0.0],
            vec![0.2, 0.1, 2.0],
            vec![-0.2, -0.1, -2.0],
        ])
        .unwrap();
        for x in [[0.3, -0.7, 1.1], [1.0, 1.0, 1.0], [-2.0, 0.5, 0.0]] {
            let (a, _) = p.gauge_with_functional(&x);
            let (b, _) = p.gauge_lp(&x).unwrap();
            assert!((a - b).abs() < 1e-9 * a.max(1.0), "{a} vs {b}");
        }
    }

    #[test]
    fn rejects_asymmetric_and_flat() {
        assert!(Polytope::new(vec![vec![1.0, 0.0], vec![0.0, 1.0]]).is_err());
        assert!(Polytope::new(vec![vec![1.0, 1.0], vec![-1.0, -1.0]]).is_err());
        assert!(Polytope::new(vec![]).is_err());
    }
}
