//! Text formats: edge lists, CSV matrices and point sets, space descriptors
//! and bound inputs. Parsers return errors for any malformed input and never
//! panic.
//!
//! Edge list: a header line `n k`, then one `u v [mult]` line per edge.
//! Blank lines and lines starting with `#` are ignored.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graphs::{Family, RegularGraph, StochasticMatrix};
use crate::limits::Limits;
use crate::metrics::FiniteMetric;
use crate::norms::{NormKind, NormedSpace};
use crate::poincare::PointConfig;

fn parse_err(line: usize, msg: impl Into<String>) -> Error {
    Error::Parse { line, msg: msg.into() }
}

fn content_lines(text: &str) -> impl Iterator<Item = (usize, &str)> {
    text.lines()
        .enumerate()
        .map(|(i, l)| (i + 1, l.trim()))
        .filter(|(_, l)| !l.is_empty() && !l.starts_with('#'))
}

fn parse_usize(line: usize, tok: &str, what: &str) -> Result<usize> {
    tok.parse().map_err(|_| parse_err(line, format!("{what} '{tok}' is not a nonnegative integer")))
}

pub fn parse_edge_list(text: &str) -> Result<RegularGraph> {
    let mut lines = content_lines(text);
    let (hl, header) = lines.next().ok_or_else(|| parse_err(1, "missing 'n k' header"))?;
    let tokens: Vec<&str> = header.split_whitespace().collect();
    if tokens.len() != 2 {
        return Err(parse_err(hl, "header must be 'n k'"));
    }
    let n = parse_usize(hl, tokens[0], "vertex count")?;
    let k = parse_usize(hl, tokens[1], "degree")?;
    Limits::from_env().check(n)?;
    let mut edges = Vec::new();
    for (ln, l) in lines {
        let tokens: Vec<&str> = l.split_whitespace().collect();
        if tokens.len() != 2 && tokens.len() != 3 {
            return Err(parse_err(ln, "edge lines must be 'u v' or 'u v mult'"));
        }
        let u = parse_usize(ln, tokens[0], "vertex")?;
        let v = parse_usize(ln, tokens[1], "vertex")?;
        let mult = match tokens.get(2) {
            Some(t) => t.parse::<u32>().map_err(|_| parse_err(ln, format!("multiplicity '{t}' is not a positive integer")))?,
            None => 1,
        };
        edges.push((u, v, mult));
    }
    RegularGraph::from_edges(n, k, edges, Family::Custom)
}

pub fn write_edge_list(g: &RegularGraph) -> String {
    let mut out = format!("{} {}\n", g.n(), g.k());
    for e in g.edges() {
        if e.mult == 1 {
            let _ = writeln!(out, "{} {}", e.u, e.v);
        } else {
            let _ = writeln!(out, "{} {} {}", e.u, e.v, e.mult);
        }
    }
    out
}

/// Rows of comma-separated reals.
pub fn parse_csv_rows(text: &str) -> Result<Vec<Vec<f64>>> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(false)
        .flexible(true)
        .trim(csv::Trim::All)
        .comment(Some(b'#'))
        .from_reader(text.as_bytes());
    let mut rows: Vec<Vec<f64>> = Vec::new();
    for record in reader.records() {
        let record = record.map_err(|e| {
            let line = e.position().map_or(0, |p| p.line() as usize);
            parse_err(line, e.to_string())
        })?;
        let line = record.position().map_or(rows.len() + 1, |p| p.line() as usize);
        if record.iter().all(str::is_empty) {
            continue;
        }
        let row = record
            .iter()
            .map(|f| {
                let x: f64 = f.parse().map_err(|_| parse_err(line, format!("'{f}' is not a number")))?;
                if x.is_finite() {
                    Ok(x)
                } else {
                    Err(parse_err(line, format!("'{f}' is not finite")))
                }
            })
            .collect::<Result<Vec<f64>>>()?;
        if let Some(first) = rows.first() {
            if first.len() != row.len() {
                return Err(parse_err(line, format!("expected {} fields, found {}", first.len(), row.len())));
            }
        }
        rows.push(row);
    }
    if rows.is_empty() {
        return Err(parse_err(1, "no data rows"));
    }
    Ok(rows)
}

fn square(rows: Vec<Vec<f64>>) -> Result<DMatrix<f64>> {
    let n = rows.len();
    Limits::from_env().check(n)?;
    if rows[0].len() != n {
        return Err(parse_err(1, format!("matrix has {n} rows but {} columns", rows[0].len())));
    }
    Ok(DMatrix::from_row_iterator(n, n, rows.into_iter().flatten()))
}

pub fn parse_matrix_csv(text: &str) -> Result<StochasticMatrix> {
    StochasticMatrix::new(square(parse_csv_rows(text)?)?)
}

pub fn parse_metric_csv(text: &str) -> Result<FiniteMetric> {
    FiniteMetric::new(square(parse_csv_rows(text)?)?)
}

pub fn parse_points_csv(text: &str) -> Result<PointConfig> {
    let rows = parse_csv_rows(text)?;
    Limits::from_env().check(rows.len())?;
    PointConfig::from_rows(&rows)
}

fn write_rows<'a>(rows: impl Iterator<Item = &'a [f64]>) -> String {
    let mut out = String::new();
    for row in rows {
        let fields: Vec<String> = row.iter().map(|x| format!("{x:?}")).collect();
        out.push_str(&fields.join(","));
        out.push('\n');
    }
    out
}

/// CSV with `{:?}` formatting, which round-trips every `f64` exactly.
pub fn write_points_csv(cfg: &PointConfig) -> String {
    write_rows(cfg.coords().chunks(cfg.dim()))
}

pub fn write_matrix_csv(m: &DMatrix<f64>) -> String {
    let rows: Vec<Vec<f64>> = m.row_iter().map(|r| r.iter().copied().collect()).collect();
    write_rows(rows.iter().map(Vec::as_slice))
}

/// `p` in a space descriptor: a number or the string `"inf"`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Exponent {
    Value(f64),
    Named(InfName),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum InfName {
    #[serde(rename = "inf", alias = "infinity", alias = "Infinity")]
    Inf,
}

impl Exponent {
    pub fn value(self) -> f64 {
        match self {
            Exponent::Value(v) => v,
            Exponent::Named(InfName::Inf) => f64::INFINITY,
        }
    }

    pub fn from_f64(p: f64) -> Self {
        if p.is_infinite() {
            Exponent::Named(InfName::Inf)
        } else {
            Exponent::Value(p)
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SpaceKind {
    Lp,
    Quadratic,
    Polytope,
}

/// JSON descriptor `{kind, dim, p?, q_matrix?, vertices?}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SpaceSpec {
    pub kind: SpaceKind,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dim: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub p: Option<Exponent>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub q_matrix: Option<Vec<Vec<f64>>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub vertices: Option<Vec<Vec<f64>>>,
}

fn spec_err(msg: impl Into<String>) -> Error {
    Error::InvalidParameter(msg.into())
}

impl SpaceSpec {
    pub fn lp(dim: usize, p: f64) -> Self {
        Self { kind: SpaceKind::Lp, dim: Some(dim), p: Some(Exponent::from_f64(p)), q_matrix: None, vertices: None }
    }

    pub fn build(&self) -> Result<NormedSpace> {
        let check_dim = |actual: usize| match self.dim {
            Some(d) if d != actual => Err(spec_err(format!("dim = {d} but the descriptor has dimension {actual}"))),
            _ => Ok(()),
        };
        match self.kind {
            SpaceKind::Lp => {
                let dim = self.dim.ok_or_else(|| spec_err("lp space needs 'dim'"))?;
                Limits::from_env().check(dim)?;
                let p = self.p.ok_or_else(|| spec_err("lp space needs 'p'"))?.value();
                NormedSpace::lp(dim, p)
            }
            SpaceKind::Quadratic => {
                let q = self.q_matrix.as_ref().ok_or_else(|| spec_err("quadratic space needs 'q_matrix'"))?;
                let dim = q.len();
                Limits::from_env().check(dim)?;
                check_dim(dim)?;
                if dim == 0 || q.iter().any(|r| r.len() != dim) {
                    return Err(spec_err("q_matrix must be a nonempty square array"));
                }
                NormedSpace::quadratic(DMatrix::from_row_iterator(dim, dim, q.iter().flatten().copied()))
            }
            SpaceKind::Polytope => {
                let v = self.vertices.as_ref().ok_or_else(|| spec_err("polytope space needs 'vertices'"))?;
                Limits::from_env().check(v.len())?;
                if let Some(first) = v.first() {
                    check_dim(first.len())?;
                }
                NormedSpace::polytope(v.clone())
            }
        }
    }

    pub fn from_space(space: &NormedSpace) -> Self {
        match space.kind() {
            NormKind::Lp { p } => Self::lp(space.dim(), *p),
            NormKind::Quadratic { q } => Self {
                kind: SpaceKind::Quadratic,
                dim: Some(space.dim()),
                p: None,
                q_matrix: Some(q.row_iter().map(|r| r.iter().copied().collect()).collect()),
                vertices: None,
            },
            NormKind::Polytope(poly) => Self {
                kind: SpaceKind::Polytope,
                dim: Some(space.dim()),
                p: None,
                q_matrix: None,
                vertices: Some(poly.vertices().to_vec()),
            },
        }
    }
}

pub fn parse_space_json(text: &str) -> Result<NormedSpace> {
    let spec: SpaceSpec = serde_json::from_str(text)?;
    spec.build()
}

/// A JSON object of named finite reals.
pub fn parse_bound_inputs(text: &str) -> Result<BTreeMap<String, f64>> {
    let map: BTreeMap<String, f64> = serde_json::from_str(text)?;
    if let Some((k, v)) = map.iter().find(|(_, v)| !v.is_finite()) {
        return Err(spec_err(format!("input '{k}' = {v} is not finite")));
    }
    Ok(map)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graphs::*;

    #[test]
    fn edge_list_round_trip() {
        let g = margulis_graph(3).unwrap();
        let parsed = parse_edge_list(&write_edge_list(&g)).unwrap();
        assert_eq!(parsed.edges(), g.edges());
        assert_eq!(parsed.family(), Family::Custom);
    }

    #[test]
    fn edge_list_errors() {
        assert!(parse_edge_list("").is_err());
        assert!(parse_edge_list("3 2\n0 1\n1 2\n").is_err());
        assert!(matches!(parse_edge_list("3\n"), Err(Error::Parse { line: 1, .. })));
        assert!(matches!(parse_edge_list("2 1\n0 x\n"), Err(Error::Parse { line: 2, .. })));
        assert!(matches!(parse_edge_list("99999999999 1\n"), Err(Error::SizeLimit { .. })));
        let g = parse_edge_list("# square\n4 2\n0 1\n1 2\n\n2 3\n3 0\n").unwrap();
        assert_eq!(g.k(), 2);
    }

    #[test]
    fn matrix_and_points() {
        let a = parse_matrix_csv("0, 1\n1, 0\n").unwrap();
        assert_eq!(a.get(0, 1), 1.0);
        assert!(parse_matrix_csv("0.5,0.5\n0.5\n").is_err());
        assert!(parse_matrix_csv("0.5,0.6\n0.5,0.4\n").is_err());
        assert!(parse_matrix_csv("nan,1\n1,0\n").is_err());
        let p = parse_points_csv("1,2\n3,4\n5,6\n").unwrap();
        assert_eq!((p.n(), p.dim()), (3, 2));
        assert_eq!(parse_points_csv(&write_points_csv(&p)).unwrap(), p);
        let m = normalized_adjacency(&cycle_graph(5).unwrap());
        assert_eq!(parse_matrix_csv(&write_matrix_csv(m.entries())).unwrap().entries(), m.entries());
    }

    #[test]
    fn space_descriptors() {
        let s = parse_space_json(r#"{"kind":"lp","dim":3,"p":"inf"}"#).unwrap();
        assert_eq!(s.eval(&[1.0, -4.0, 2.0]), 4.0);
        let s = parse_space_json(r#"{"kind":"lp","dim":2,"p":1}"#).unwrap();
        assert_eq!(s.eval(&[1.0, -4.0]), 5.0);
        let s = parse_space_json(r#"{"kind":"quadratic","q_matrix":[[4,0],[0,1]]}"#).unwrap();
        assert_eq!(s.eval(&[1.0, 0.0]), 2.0);
        let s = parse_space_json(r#"{"kind":"polytope","vertices":[[1,0],[-1,0],[0,1],[0,-1]]}"#).unwrap();
        assert!((s.eval(&[0.5, 0.5]) - 1.0).abs() < 1e-12);
        assert!(parse_space_json(r#"{"kind":"lp","dim":2}"#).is_err());
        assert!(parse_space_json(r#"{"kind":"quadratic","dim":3,"q_matrix":[[1,0],[0,1]]}"#).is_err());
        assert!(parse_space_json(r#"{"kind":"torus"}"#).is_err());
        let spec = SpaceSpec::from_space(&NormedSpace::lp(4, f64::INFINITY).unwrap());
        assert_eq!(serde_json::to_string(&spec).unwrap(), r#"{"kind":"lp","dim":4,"p":"inf"}"#);
    }

    #[test]
    fn bound_inputs() {
        let m = parse_bound_inputs(r#"{"n": 6, "lambda2": 0.5}"#).unwrap();
        assert_eq!(m["n"], 6.0);
        assert!(parse_bound_inputs(r#"{"n": "six"}"#).is_err());
        assert!(parse_bound_inputs("[1,2]").is_err());
    }
}
