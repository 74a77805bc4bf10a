//! Abstract graphs, their Laplacians, classical algebraic connectivity,
//! and deterministic graph generators.
//!
//! A [`Graph`] is a vertex count plus an ordered list of undirected
//! edges. The list order is load-bearing: it defines the row order of
//! the rigidity matrix and of every edge-indexed quantity downstream.

use std::collections::HashSet;

use ndarray::{Array1, Array2};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::linalg::{self, SymMatrix};
use crate::{Error, Result};

/// Undirected simple graph on vertices `0..n` with a fixed edge order.
/// Each stored pair is normalized to `(min, max)`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Graph {
    n: usize,
    edges: Vec<(usize, usize)>,
}

impl Graph {
    /// Validates endpoints, rejects self-loops and duplicate pairs
    /// (under unordering), and normalizes each pair to `(min, max)`
    /// while keeping the given list order.
    pub fn new(n: usize, edges: &[(usize, usize)]) -> Result<Self> {
        if n == 0 {
            return Err(Error::InvalidInput("graph needs at least one vertex".into()));
        }
        let mut seen = HashSet::new();
        let mut normalized = Vec::with_capacity(edges.len());
        for &(a, b) in edges {
            if a >= n || b >= n {
                return Err(Error::InvalidInput(format!(
                    "edge ({a}, {b}) out of range for n={n}"
                )));
            }
            if a == b {
                return Err(Error::InvalidInput(format!("self-loop at vertex {a}")));
            }
            let e = (a.min(b), a.max(b));
            if !seen.insert(e) {
                return Err(Error::InvalidInput(format!(
                    "duplicate edge ({}, {})",
                    e.0, e.1
                )));
            }
            normalized.push(e);
        }
        Ok(Graph { n, edges: normalized })
    }

    pub fn vertex_count(&self) -> usize {
        self.n
    }

    pub fn edges(&self) -> &[(usize, usize)] {
        &self.edges
    }

    pub fn edge_count(&self) -> usize {
        self.edges.len()
    }

    pub fn degree(&self, v: usize) -> usize {
        self.edges.iter().filter(|&&(a, b)| a == v || b == v).count()
    }

    pub fn has_edge(&self, i: usize, j: usize) -> bool {
        let e = (i.min(j), i.max(j));
        self.edges.contains(&e)
    }

    /// Graph Laplacian: degree on the diagonal, -1 for each edge.
    /// Symmetric with zero row sums.
    pub fn laplacian(&self) -> SymMatrix {
        let mut l = Array2::zeros((self.n, self.n));
        for &(a, b) in &self.edges {
            l[[a, b]] = -1.0;
            l[[b, a]] = -1.0;
            l[[a, a]] += 1.0;
            l[[b, b]] += 1.0;
        }
        SymMatrix::new(l).expect("laplacian is square")
    }

    /// Second-smallest Laplacian eigenvalue together with a unit Fiedler
    /// vector orthogonal to the all-ones vector.
    ///
    /// When the second eigenvalue is zero (disconnected graph) the
    /// Laplacian kernel contains the all-ones vector; the Fiedler vector
    /// is then picked deterministically from the kernel after projecting
    /// the all-ones direction out.
    pub fn algebraic_connectivity(&self) -> Result<(f64, Array1<f64>)> {
        if self.n < 2 {
            return Err(Error::InvalidInput(
                "algebraic connectivity needs at least two vertices".into(),
            ));
        }
        let spec = linalg::eigh(&self.laplacian())?;
        let lambda2 = spec.value(1);
        let scale = 1.0 + spec.value(self.n - 1).abs();
        let ones = Array1::from_elem(self.n, 1.0 / (self.n as f64).sqrt());

        let raw = if lambda2 > 1e-9 * scale {
            // The eigenspace of lambda_2 excludes the all-ones vector;
            // column 1 is already orthogonal to it up to rounding.
            linalg::project_out(&spec.vector(1), std::slice::from_ref(&ones))
        } else {
            // lambda_2 = 0: scan the kernel columns for one with a usable
            // component orthogonal to the all-ones vector.
            let mut found = None;
            for k in 0..self.n {
                if spec.value(k) > 1e-9 * scale {
                    break;
                }
                let r = linalg::project_out(&spec.vector(k), std::slice::from_ref(&ones));
                if r.dot(&r).sqrt() >= 1e-6 {
                    found = Some(r);
                    break;
                }
            }
            found.ok_or_else(|| {
                Error::Internal("no kernel vector orthogonal to all-ones".into())
            })?
        };

        let norm = raw.dot(&raw).sqrt();
        let mut fiedler = raw / norm;
        // Deterministic sign: largest-magnitude entry positive.
        let mut best = 0;
        for k in 1..self.n {
            if fiedler[k].abs() > fiedler[best].abs() {
                best = k;
            }
        }
        if fiedler[best] < 0.0 {
            fiedler.mapv_inplace(|x| -x);
        }
        Ok((lambda2, fiedler))
    }

    /// Number of connected components, by breadth-first search.
    pub fn connected_components(&self) -> usize {
        let mut adj = vec![Vec::new(); self.n];
        for &(a, b) in &self.edges {
            adj[a].push(b);
            adj[b].push(a);
        }
        let mut visited = vec![false; self.n];
        let mut components = 0;
        let mut queue = std::collections::VecDeque::new();
        for start in 0..self.n {
            if visited[start] {
                continue;
            }
            components += 1;
            visited[start] = true;
            queue.push_back(start);
            while let Some(v) = queue.pop_front() {
                for &w in &adj[v] {
                    if !visited[w] {
                        visited[w] = true;
                        queue.push_back(w);
                    }
                }
            }
        }
        components
    }

    pub fn is_connected(&self) -> bool {
        self.connected_components() == 1
    }

    /// Parse the graph text format: first significant line `n <N>`,
    /// then one `i j` edge per line. Empty lines and lines starting
    /// with `#` are skipped.
    pub fn from_text(text: &str) -> Result<Self> {
        let mut n: Option<usize> = None;
        let mut edges: Vec<(usize, usize)> = Vec::new();
        let mut seen = HashSet::new();
        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.trim();
            let lineno = lineno + 1;
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let parts: Vec<&str> = line.split_whitespace().collect();
            match n {
                None => {
                    if parts.len() != 2 || parts[0] != "n" {
                        return Err(Error::Parse {
                            line: lineno,
                            msg: format!("expected `n <N>`, got `{line}`"),
                        });
                    }
                    let count: usize = parts[1].parse().map_err(|_| Error::Parse {
                        line: lineno,
                        msg: format!("invalid vertex count `{}`", parts[1]),
                    })?;
                    if count == 0 {
                        return Err(Error::Parse {
                            line: lineno,
                            msg: "vertex count must be positive".into(),
                        });
                    }
                    n = Some(count);
                }
                Some(count) => {
                    if parts.len() != 2 {
                        return Err(Error::Parse {
                            line: lineno,
                            msg: format!("expected `i j`, got `{line}`"),
                        });
                    }
                    let parse = |s: &str| -> Result<usize> {
                        s.parse().map_err(|_| Error::Parse {
                            line: lineno,
                            msg: format!("invalid vertex index `{s}`"),
                        })
                    };
                    let (a, b) = (parse(parts[0])?, parse(parts[1])?);
                    if a >= count || b >= count {
                        return Err(Error::Parse {
                            line: lineno,
                            msg: format!("edge ({a}, {b}) out of range for n={count}"),
                        });
                    }
                    if a == b {
                        return Err(Error::Parse {
                            line: lineno,
                            msg: format!("self-loop at vertex {a}"),
                        });
                    }
                    let e = (a.min(b), a.max(b));
                    if !seen.insert(e) {
                        return Err(Error::Parse {
                            line: lineno,
                            msg: format!("duplicate edge ({}, {})", e.0, e.1),
                        });
                    }
                    edges.push(e);
                }
            }
        }
        let n = n.ok_or(Error::Parse {
            line: 0,
            msg: "missing `n <N>` header".into(),
        })?;
        Graph::new(n, &edges)
    }

    pub fn to_text(&self) -> String {
        let mut out = format!("n {}\n", self.n);
        for &(a, b) in &self.edges {
            out.push_str(&format!("{a} {b}\n"));
        }
        out
    }
}

/// Deterministic graph generators. Edge lists come out in canonical
/// lexicographic order (min endpoint, then max).
#[derive(Debug, Clone, PartialEq)]
pub enum GraphKind {
    Path { n: usize },
    Cycle { n: usize },
    Complete { n: usize },
    CompleteBipartite { a: usize, b: usize },
    ErdosRenyi { n: usize, prob: f64, seed: u64 },
}

pub fn generate(kind: &GraphKind) -> Result<Graph> {
    let mut edges: Vec<(usize, usize)> = Vec::new();
    let n = match *kind {
        GraphKind::Path { n } => {
            require_positive(n)?;
            for i in 0..n.saturating_sub(1) {
                edges.push((i, i + 1));
            }
            n
        }
        GraphKind::Cycle { n } => {
            if n < 3 {
                return Err(Error::InvalidInput(format!(
                    "cycle needs at least 3 vertices, got {n}"
                )));
            }
            for i in 0..n - 1 {
                edges.push((i, i + 1));
            }
            edges.push((0, n - 1));
            n
        }
        GraphKind::Complete { n } => {
            require_positive(n)?;
            for i in 0..n {
                for j in (i + 1)..n {
                    edges.push((i, j));
                }
            }
            n
        }
        GraphKind::CompleteBipartite { a, b } => {
            require_positive(a)?;
            require_positive(b)?;
            for i in 0..a {
                for j in 0..b {
                    edges.push((i, a + j));
                }
            }
            a + b
        }
        GraphKind::ErdosRenyi { n, prob, seed } => {
            require_positive(n)?;
            if !(0.0..=1.0).contains(&prob) {
                return Err(Error::InvalidInput(format!(
                    "edge probability {prob} outside [0, 1]"
                )));
            }
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            for i in 0..n {
                for j in (i + 1)..n {
                    if rng.random::<f64>() < prob {
                        edges.push((i, j));
                    }
                }
            }
            n
        }
    };
    edges.sort_unstable();
    Graph::new(n, &edges)
}

fn require_positive(n: usize) -> Result<()> {
    if n == 0 {
        Err(Error::InvalidInput("vertex count must be positive".into()))
    } else {
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn laplacian_single_edge() {
        let g = Graph::new(2, &[(0, 1)]).unwrap();
        let l = g.laplacian();
        let expect = ndarray::array![[1.0, -1.0], [-1.0, 1.0]];
        assert_eq!(l.as_array(), &expect);
    }

    #[test]
    fn laplacian_path() {
        let g = Graph::new(3, &[(0, 1), (1, 2)]).unwrap();
        let l = g.laplacian();
        let expect = ndarray::array![[1.0, -1.0, 0.0], [-1.0, 2.0, -1.0], [0.0, -1.0, 1.0]];
        assert_eq!(l.as_array(), &expect);
    }

    #[test]
    fn laplacian_edgeless() {
        let g = Graph::new(3, &[]).unwrap();
        assert!(g.laplacian().as_array().iter().all(|&x| x == 0.0));
    }

    #[test]
    fn laplacian_rows_sum_to_zero() {
        let g = generate(&GraphKind::ErdosRenyi { n: 9, prob: 0.4, seed: 5 }).unwrap();
        let l = g.laplacian();
        for i in 0..9 {
            let s: f64 = l.as_array().row(i).sum();
            assert_abs_diff_eq!(s, 0.0, epsilon = 1e-12);
        }
    }

    #[test]
    fn algebraic_connectivity_k2() {
        let g = Graph::new(2, &[(0, 1)]).unwrap();
        let (a1, fiedler) = g.algebraic_connectivity().unwrap();
        assert_abs_diff_eq!(a1, 2.0, epsilon = 1e-12);
        assert_abs_diff_eq!(fiedler.dot(&fiedler), 1.0, epsilon = 1e-12);
        assert_abs_diff_eq!(fiedler.sum(), 0.0, epsilon = 1e-10);
    }

    #[test]
    fn algebraic_connectivity_disconnected_is_zero() {
        let g = Graph::new(4, &[(0, 1), (2, 3)]).unwrap();
        let (a1, fiedler) = g.algebraic_connectivity().unwrap();
        assert_abs_diff_eq!(a1, 0.0, epsilon = 1e-10);
        // Fiedler must still be unit and orthogonal to all-ones.
        assert_abs_diff_eq!(fiedler.dot(&fiedler), 1.0, epsilon = 1e-10);
        assert_abs_diff_eq!(fiedler.sum(), 0.0, epsilon = 1e-8);
    }

    #[test]
    fn algebraic_connectivity_k4() {
        let g = generate(&GraphKind::Complete { n: 4 }).unwrap();
        let (a1, _) = g.algebraic_connectivity().unwrap();
        assert_abs_diff_eq!(a1, 4.0, epsilon = 1e-10);
    }

    #[test]
    fn algebraic_connectivity_needs_two_vertices() {
        let g = Graph::new(1, &[]).unwrap();
        assert!(matches!(g.algebraic_connectivity(), Err(Error::InvalidInput(_))));
    }

    #[test]
    fn generate_complete_three() {
        let g = generate(&GraphKind::Complete { n: 3 }).unwrap();
        assert_eq!(g.edges(), &[(0, 1), (0, 2), (1, 2)]);
    }

    #[test]
    fn generate_cycle_four_lexicographic() {
        let g = generate(&GraphKind::Cycle { n: 4 }).unwrap();
        assert_eq!(g.edges(), &[(0, 1), (0, 3), (1, 2), (2, 3)]);
    }

    #[test]
    fn generate_complete_bipartite() {
        let g = generate(&GraphKind::CompleteBipartite { a: 2, b: 3 }).unwrap();
        assert_eq!(g.vertex_count(), 5);
        assert_eq!(
            g.edges(),
            &[(0, 2), (0, 3), (0, 4), (1, 2), (1, 3), (1, 4)]
        );
        // Second Laplacian eigenvalue of K_{a,b} is min(a, b).
        let (a1, _) = g.algebraic_connectivity().unwrap();
        assert_abs_diff_eq!(a1, 2.0, epsilon = 1e-10);
    }

    #[test]
    fn generate_erdos_renyi_deterministic() {
        let k = GraphKind::ErdosRenyi { n: 5, prob: 0.5, seed: 7 };
        let g1 = generate(&k).unwrap();
        let g2 = generate(&k).unwrap();
        assert_eq!(g1, g2);
    }

    #[test]
    fn generate_rejects_bad_params() {
        assert!(generate(&GraphKind::Complete { n: 0 }).is_err());
        assert!(generate(&GraphKind::Cycle { n: 2 }).is_err());
        assert!(generate(&GraphKind::ErdosRenyi { n: 4, prob: 1.5, seed: 0 }).is_err());
    }

    #[test]
    fn new_rejects_invalid_edges() {
        assert!(Graph::new(3, &[(0, 3)]).is_err());
        assert!(Graph::new(3, &[(1, 1)]).is_err());
        assert!(Graph::new(3, &[(0, 1), (1, 0)]).is_err());
    }

    #[test]
    fn zero_eigenvalues_count_components() {
        for seed in 0..20u64 {
        let g = generate(&GraphKind::ErdosRenyi { n: 7, prob: 0.25, seed }).unwrap();
            let spec = crate::linalg::eigh(&g.laplacian()).unwrap();
            let zeros = spec.values().iter().filter(|&&v| v.abs() <= 1e-8).count();
            assert_eq!(zeros, g.connected_components(), "seed {seed}");
            // PSD within tolerance.
            assert!(spec.value(0) >= -1e-10);
        }
    }

    #[test]
    fn positive_connectivity_iff_connected() {
        for seed in 0..20u64 {
            let g = generate(&GraphKind::ErdosRenyi { n: 6, prob: 0.35, seed }).unwrap();
            let (a1, _) = g.algebraic_connectivity().unwrap();
            assert_eq!(a1 > 1e-8, g.is_connected(), "seed {seed}: a1={a1}");
        }
    }

    #[test]
    fn text_format_roundtrip() {
        let g = generate(&GraphKind::Cycle { n: 5 }).unwrap();
        let parsed = Graph::from_text(&g.to_text()).unwrap();
        assert_eq!(g, parsed);
    }

    #[test]
    fn text_format_skips_comments() {
        let g = Graph::from_text("# a comment\n\nn 3\n0 1\n# another\n1 2\n").unwrap();
        assert_eq!(g.vertex_count(), 3);
        assert_eq!(g.edges(), &[(0, 1), (1, 2)]);
    }

    #[test]
    fn text_format_rejects_bad_input() {
        assert!(Graph::from_text("n 3\n0 3\n").is_err());
        assert!(Graph::from_text("n 3\n1 1\n").is_err());
        assert!(Graph::from_text("0 1\n").is_err());
        assert!(Graph::from_text("").is_err());
    }
}
