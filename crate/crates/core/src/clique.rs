//! k-clique through linear optimization over `I_k`.
//!
//! For the adjacency matrix `C` of a graph with `e` edges and
//! `C' = C / √(2e)`, `μ(k, C')` equals `(k - 1) / √(2e)` when a k-clique exists
//! and is at most `(k - 1 - 1/ε(k)) / √(2e)` otherwise. Thresholding at the
//! midpoint-style value γ with precision δ/2 decides the clique problem.

use std::collections::BTreeSet;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::incoherence::{interior_point_instance, Config};
use crate::matrix::{CVec, HermitianMatrix};
use crate::subsets::{check_cap, k_subsets};

/// Simple undirected graph; edges are stored 1-based with `u < v`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Graph {
    n: usize,
    edges: BTreeSet<(usize, usize)>,
}

impl Graph {
    pub fn new(n: usize, edges: &[(usize, usize)]) -> Result<Self> {
        let mut set = BTreeSet::new();
        for (line, &(u, v)) in edges.iter().enumerate() {
            let err = |m: String| Error::Parse { line: line + 1, message: m };
            let (a, b) = validate_edge(n, u, v).map_err(err)?;
            if !set.insert((a, b)) {
                return Err(err(format!("duplicate edge {u} {v}")));
            }
        }
        Ok(Graph { n, edges: set })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn edge_count(&self) -> usize {
        self.edges.len()
    }

    pub fn edges(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        self.edges.iter().copied()
    }

    /// 0-based adjacency test.
    pub fn adjacent(&self, i: usize, j: usize) -> bool {
        let (a, b) = if i < j { (i + 1, j + 1) } else { (j + 1, i + 1) };
        self.edges.contains(&(a, b))
    }

    pub fn adjacency(&self) -> HermitianMatrix {
        let mut e = vec![0.0; self.n * self.n];
        for &(u, v) in &self.edges {
            e[(u - 1) * self.n + (v - 1)] = 1.0;
            e[(v - 1) * self.n + (u - 1)] = 1.0;
        }
        HermitianMatrix::from_real(self.n, &e).expect("symmetric by construction")
    }

    /// `C / √(2e)`, unit Frobenius norm.
    pub fn normalized_adjacency(&self) -> Result<HermitianMatrix> {
        let e = self.nonempty()?;
        Ok(self.adjacency().scale(1.0 / (2.0 * e as f64).sqrt()))
    }

    fn nonempty(&self) -> Result<usize> {
        match self.edge_count() {
            0 => Err(Error::contract("the reduction needs a graph with at least one edge")),
            e => Ok(e),
        }
    }
}

fn validate_edge(n: usize, u: usize, v: usize) -> std::result::Result<(usize, usize), String> {
    if u == v {
        return Err(format!("self-loop at vertex {u}"));
    }
    for w in [u, v] {
        if w == 0 || w > n {
            return Err(format!("vertex {w} out of range 1..={n}"));
        }
    }
    Ok((u.min(v), u.max(v)))
}

/// Parses an edge list: a header line `n m` followed by `m` lines `u v`.
/// Blank lines and lines starting with `#` are skipped.
pub fn load_graph(text: &str) -> Result<Graph> {
    let mut lines = text
        .lines()
        .enumerate()
        .map(|(i, l)| (i + 1, l.trim()))
        .filter(|(_, l)| !l.is_empty() && !l.starts_with('#'));
    let parse_pair = |line: usize, l: &str| -> Result<(usize, usize)> {
        let err = |m: &str| Error::Parse { line, message: format!("{m}: {l:?}") };
        let mut it = l.split_whitespace();
        let a = it.next().ok_or_else(|| err("expected two integers"))?;
        let b = it.next().ok_or_else(|| err("expected two integers"))?;
        if it.next().is_some() {
            return Err(err("expected two integers"));
        }
        let a = a.parse().map_err(|_| err("not a nonnegative integer"))?;
        let b = b.parse().map_err(|_| err("not a nonnegative integer"))?;
        Ok((a, b))
    };
    let (hline, header) = lines.next().ok_or(Error::Parse { line: 1, message: "missing header \"n m\"".into() })?;
    let (n, m) = parse_pair(hline, header)?;
    if n == 0 {
        return Err(Error::Parse { line: hline, message: "graph needs at least one vertex".into() });
    }
    let mut set = BTreeSet::new();
    let mut last = hline;
    for _ in 0..m {
        let (line, l) = lines.next().ok_or(Error::Parse {
            line: last + 1,
            message: format!("expected {m} edges, found fewer"),
        })?;
        last = line;
        let (u, v) = parse_pair(line, l)?;
        let e = validate_edge(n, u, v).map_err(|message| Error::Parse { line, message })?;
        if !set.insert(e) {
            return Err(Error::Parse { line, message: format!("duplicate edge {u} {v}") });
        }
    }
    if let Some((line, l)) = lines.next() {
        return Err(Error::Parse { line, message: format!("unexpected line after {m} edges: {l:?}") });
    }
    Ok(Graph { n, edges: set })
}

#[derive(Debug, Clone, Serialize)]
pub struct GapParameters {
    pub e: usize,
    pub k: usize,
    pub n: usize,
    /// `1/ε(k) = (k-1) - √((k-1)² - 2 + 2/k)`.
    pub inv_eps: f64,
    pub gamma: f64,
    pub delta: f64,
    /// Mixing weight `x = 2nδ` of the interior point used in the hardness
    /// argument.
    pub x: f64,
}

pub fn gap_parameters(g: &Graph, k: usize) -> Result<GapParameters> {
    if k < 2 {
        return Err(Error::contract(format!("the clique reduction needs k >= 2, got {k}")));
    }
    if k > g.n() {
        return Err(Error::contract(format!("k = {k} exceeds the vertex count {}", g.n())));
    }
    let e = g.nonempty()?;
    let km1 = (k - 1) as f64;
    let inv_eps = km1 - (km1 * km1 - 2.0 + 2.0 / k as f64).sqrt();
    let s = (2.0 * e as f64).sqrt();
    let nf = g.n() as f64;
    let delta = inv_eps / (s * (3.0 + (2.0 * nf + 1.0) * km1 / s));
    let gamma = km1 / s - inv_eps / s + 2.0 * delta;
    Ok(GapParameters { e, k, n: g.n(), inv_eps, gamma, delta, x: 2.0 * nf * delta })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum CliqueMethod {
    Oracle,
    Sdp,
}

#[derive(Debug, Clone, Serialize)]
pub struct CliqueReport {
    pub k: usize,
    pub mu: f64,
    pub gamma: f64,
    pub delta: f64,
    pub clique: bool,
}

pub fn decide_clique(g: &Graph, k: usize, method: CliqueMethod) -> Result<CliqueReport> {
    decide_clique_with(&Config::default(), g, k, method)
}

/// `μ(k, C') ≥ γ`, with μ computed exactly or to precision δ/2.
pub fn decide_clique_with(cfg: &Config, g: &Graph, k: usize, method: CliqueMethod) -> Result<CliqueReport> {
    let gp = gap_parameters(g, k)?;
    let c = g.normalized_adjacency()?;
    let mu = match method {
        CliqueMethod::Oracle => cfg.mu_oracle(&c, k)?.value,
        CliqueMethod::Sdp => cfg.mu_sdp(&c, k, gp.delta / 2.0).map_err(|e| match e {
            Error::Solver { status, detail } => Error::Solver {
                status,
                detail: format!("precision delta/2 = {:.3e} not reached ({detail}); use the oracle method", gp.delta / 2.0),
            },
            other => other,
        })?,
    };
    Ok(CliqueReport { k, mu, gamma: gp.gamma, delta: gp.delta, clique: mu >= gp.gamma })
}

pub fn brute_force_clique(g: &Graph, k: usize) -> Result<bool> {
    if k == 0 || k > g.n() {
        return Err(Error::contract(format!("k = {k} must lie in 1..={}", g.n())));
    }
    check_cap(g.n(), k, crate::subsets::DEFAULT_CAP)?;
    Ok(k_subsets(g.n(), k)
        .iter()
        .any(|s| s.iter().enumerate().all(|(a, &i)| s[a + 1..].iter().all(|&j| g.adjacent(i, j)))))
}

/// `Tr(C' D_x)` for the interior point built from the uniform vector on
/// `clique` with `x = 2nδ`.
pub fn interior_clique_value(g: &Graph, clique: &[usize], gp: &GapParameters) -> Result<f64> {
    let n = g.n();
    let mut u = CVec::zeros(n);
    let w = 1.0 / (clique.len() as f64).sqrt();
    for &i in clique {
        u[i] = crate::matrix::real(w);
    }
    let d = interior_point_instance(&u, gp.x, n, clique.len())?;
    let c = g.normalized_adjacency()?;
    Ok((c.as_matrix() * d.as_matrix()).trace().re)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn triangle() -> Graph {
        load_graph("3 3\n1 2\n2 3\n1 3").unwrap()
    }

    fn path3() -> Graph {
        load_graph("3 2\n1 2\n2 3").unwrap()
    }

    fn k5_minus_edge() -> Graph {
        let mut e = Vec::new();
        for u in 1..=5 {
            for v in u + 1..=5 {
                if (u, v) != (1, 2) {
                    e.push((u, v));
                }
            }
        }
        Graph::new(5, &e).unwrap()
    }

    #[test]
    fn parsing() {
        assert_eq!(triangle().edge_count(), 3);
        assert_eq!(path3().edge_count(), 2);
        let err = load_graph("2 1\n1 1").unwrap_err();
        assert!(matches!(err, Error::Parse { line: 2, .. }), "{err}");
        assert!(matches!(load_graph("3 2\n1 2\n2 1"), Err(Error::Parse { line: 3, .. })));
        assert!(matches!(load_graph("3 1\n1 4"), Err(Error::Parse { line: 2, .. })));
        assert!(matches!(load_graph("3 2\n1 2"), Err(Error::Parse { line: 3, .. })));
        assert!(matches!(load_graph("3 x"), Err(Error::Parse { line: 1, .. })));
    }

    #[test]
    fn gap_formulas() {
        let gp = gap_parameters(&triangle(), 2).unwrap();
        assert_abs_diff_eq!(gp.inv_eps, 1.0, epsilon = 1e-15);
        let s = 6f64.sqrt();
        let delta = 1.0 / (s * (3.0 + 7.0 / s));
        assert_abs_diff_eq!(gp.delta, delta, epsilon = 1e-15);
        assert_abs_diff_eq!(gp.gamma, 1.0 / s - 1.0 / s + 2.0 * delta, epsilon = 1e-15);
        assert_abs_diff_eq!(gp.delta, gp.x / 6.0, epsilon = 1e-15);

        let k4 = Graph::new(4, &[(1, 2), (1, 3), (1, 4), (2, 3), (2, 4), (3, 4)]).unwrap();
        let gp = gap_parameters(&k4, 3).unwrap();
        assert_abs_diff_eq!(gp.inv_eps, 2.0 - (8.0f64 / 3.0).sqrt(), epsilon = 1e-14);
        assert!(gap_parameters(&k4, 4).unwrap().delta > 0.0);
        assert!(gap_parameters(&k4, 1).is_err());
    }

    #[test]
    fn decisions() {
        for m in [CliqueMethod::Oracle, CliqueMethod::Sdp] {
            assert!(decide_clique(&triangle(), 3, m).unwrap().clique);
            assert!(!decide_clique(&path3(), 3, m).unwrap().clique);
            assert!(!decide_clique(&k5_minus_edge(), 5, m).unwrap().clique);
            assert!(decide_clique(&k5_minus_edge(), 4, m).unwrap().clique);
        }
        assert_abs_diff_eq!(
            decide_clique(&triangle(), 3, CliqueMethod::Oracle).unwrap().mu * 6f64.sqrt(),
            2.0,
            epsilon = 1e-12
        );
    }

    #[test]
    fn brute_force() {
        assert!(brute_force_clique(&triangle(), 3).unwrap());
        assert!(!brute_force_clique(&path3(), 3).unwrap());
        assert!(brute_force_clique(&k5_minus_edge(), 4).unwrap());
        assert!(!brute_force_clique(&k5_minus_edge(), 5).unwrap());
    }

    #[test]
    fn interior_point_value_bound() {
        let g = k5_minus_edge();
        let gp = gap_parameters(&g, 4).unwrap();
        let v = interior_clique_value(&g, &[1, 2, 3, 4], &gp).unwrap();
        let bound = (1.0 - (2.0 * 5.0 + 1.0) * gp.delta) * 3.0 / (2.0 * 9.0f64).sqrt();
        assert!(v >= bound - 1e-15);
        assert!(v >= gp.gamma + gp.delta);
    }

    #[test]
    fn empty_graph_rejected() {
        let g = load_graph("3 0").unwrap();
        assert!(gap_parameters(&g, 2).is_err());
    }
}
