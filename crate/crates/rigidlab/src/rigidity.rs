//! Frameworks: graphs realized by point configurations in `R^d`.
//!
//! Provides edge directions (including the coincident-point rule on a
//! line), the normalized rigidity matrix, the stiffness matrix, the
//! trivial-motion subspace, and the rigidity eigenvalue.

use ndarray::{Array1, Array2, ArrayView1};
use rand::Rng;
use rand_distr::StandardNormal;

use crate::graph::Graph;
use crate::linalg::{self, SymMatrix};
use crate::{Error, Result};

/// Relative tolerance for the affine-hull dimension test.
pub const AFFINE_TOL: f64 = 1e-9;

/// Default relative tolerance deciding whether two points coincide.
pub const COINCIDENCE_TOL: f64 = 1e-12;

/// Points in `R^d`, one per vertex. Stored as the `n x d` matrix `M`
/// whose `i`-th row is the position of vertex `i`; the stacked vector
/// in `R^{d n}` is the row-major flattening of `M`.
#[derive(Debug, Clone, PartialEq)]
pub struct Configuration {
    coords: Array2<f64>,
}

impl Configuration {
    pub fn new(coords: Array2<f64>) -> Result<Self> {
        let (n, d) = coords.dim();
        if n == 0 || d == 0 {
            return Err(Error::InvalidInput(format!(
                "configuration must be non-empty, got {n}x{d}"
            )));
        }
        if coords.iter().any(|x| !x.is_finite()) {
            return Err(Error::InvalidInput(
                "configuration has non-finite coordinates".into(),
            ));
        }
        Ok(Configuration { coords })
    }

    pub fn from_points(points: &[Vec<f64>]) -> Result<Self> {
        if points.is_empty() {
            return Err(Error::InvalidInput("configuration must be non-empty".into()));
        }
        let d = points[0].len();
        if points.iter().any(|p| p.len() != d) {
            return Err(Error::InvalidInput("points have mixed dimensions".into()));
        }
        let coords = Array2::from_shape_fn((points.len(), d), |(i, j)| points[i][j]);
        Configuration::new(coords)
    }

    /// Rebuild from a stacked vector `p in R^{d n}` (vertex blocks of
    /// size `d`).
    pub fn from_stacked(d: usize, stacked: &Array1<f64>) -> Result<Self> {
        if d == 0 || !stacked.len().is_multiple_of(d) {
            return Err(Error::InvalidInput(format!(
                "stacked length {} is not a multiple of d={d}",
                stacked.len()
            )));
        }
        let n = stacked.len() / d;
        let coords = Array2::from_shape_fn((n, d), |(i, j)| stacked[i * d + j]);
        Configuration::new(coords)
    }

    /// Standard-Gaussian configuration, driven by the caller's RNG.
    pub fn random<R: Rng>(n: usize, d: usize, rng: &mut R) -> Self {
        let coords = Array2::from_shape_fn((n, d), |_| rng.sample::<f64, _>(StandardNormal));
        Configuration { coords }
    }

    pub fn vertex_count(&self) -> usize {
        self.coords.nrows()
    }

    pub fn dimension(&self) -> usize {
        self.coords.ncols()
    }

    /// The position matrix `M` (rows are points).
    pub fn coords(&self) -> &Array2<f64> {
        &self.coords
    }

    pub fn point(&self, i: usize) -> ArrayView1<'_, f64> {
        self.coords.row(i)
    }

    /// Stacked vector `p in R^{d n}`.
    pub fn stacked(&self) -> Array1<f64> {
        Array1::from_iter(self.coords.iter().copied())
    }

    pub fn max_point_norm(&self) -> f64 {
        (0..self.vertex_count())
            .map(|i| self.point(i).dot(&self.point(i)).sqrt())
            .fold(0.0, f64::max)
    }

    pub fn translated(&self, t: &Array1<f64>) -> Result<Self> {
        if t.len() != self.dimension() {
            return Err(Error::InvalidInput("translation dimension mismatch".into()));
        }
        let mut coords = self.coords.clone();
        for mut row in coords.rows_mut() {
            row += t;
        }
        Configuration::new(coords)
    }

    pub fn scaled(&self, c: f64) -> Result<Self> {
        Configuration::new(&self.coords * c)
    }

    /// Apply a `d x d` matrix to every point: `p_i -> Q p_i`.
    pub fn rotated(&self, q: &Array2<f64>) -> Result<Self> {
        let d = self.dimension();
        if q.dim() != (d, d) {
            return Err(Error::InvalidInput("rotation dimension mismatch".into()));
        }
        Configuration::new(self.coords.dot(&q.t()))
    }

    /// Parse the configuration CSV format: one row per vertex with `d`
    /// comma-separated decimal coordinates. Blank lines are skipped.
    pub fn from_csv(text: &str) -> Result<Self> {
        let mut rows: Vec<Vec<f64>> = Vec::new();
        let mut width: Option<usize> = None;
        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.trim();
            let lineno = lineno + 1;
            if line.is_empty() {
                continue;
            }
            let mut row = Vec::new();
            for field in line.split(',') {
                let value: f64 = field.trim().parse().map_err(|_| Error::Parse {
                    line: lineno,
                    msg: format!("invalid coordinate `{}`", field.trim()),
                })?;
                if !value.is_finite() {
                    return Err(Error::Parse {
                        line: lineno,
                        msg: "coordinate is not finite".into(),
                    });
                }
                row.push(value);
            }
            match width {
                None => width = Some(row.len()),
                Some(w) if w != row.len() => {
                    return Err(Error::Parse {
                        line: lineno,
                        msg: format!("expected {w} coordinates, got {}", row.len()),
                    });
                }
                _ => {}
            }
            rows.push(row);
        }
        if rows.is_empty() {
            return Err(Error::Parse {
                line: 0,
                msg: "configuration file has no rows".into(),
            });
        }
        Configuration::from_points(&rows)
    }

    /// Emit CSV with 17 significant digits, enough to round-trip f64.
    pub fn to_csv(&self) -> String {
        let mut out = String::new();
        for i in 0..self.vertex_count() {
            let fields: Vec<String> =
                self.point(i).iter().map(|x| format!("{x:.16e}")).collect();
            out.push_str(&fields.join(","));
            out.push('\n');
        }
        out
    }
}

/// Affine-hull dimension of the point set, from the singular values of
/// the centered position matrix: `m` counts singular values above
/// `tol * (1 + sigma_max)`. When `m == 1` also returns the unit
/// direction of the spanning line, sign-fixed so its first nonzero
/// coordinate is positive.
pub fn affine_dim(config: &Configuration, tol: f64) -> (usize, Option<Array1<f64>>) {
    let n = config.vertex_count();
    let d = config.dimension();
    let mean = config.coords().mean_axis(ndarray::Axis(0)).expect("n >= 1");
    let mut centered = config.coords().clone();
    for mut row in centered.rows_mut() {
        row -= &mean;
    }

    let (sigma, v) = svd_one_sided_jacobi(&centered);
    let sigma_max = sigma.iter().fold(0.0f64, |a, &b| a.max(b));
    let threshold = tol * (1.0 + sigma_max);
    let m = sigma.iter().filter(|&&s| s > threshold).count();

    let direction = if m == 1 {
        let top = (0..d)
            .max_by(|&a, &b| sigma[a].partial_cmp(&sigma[b]).unwrap())
            .expect("d >= 1");
        let mut x = v.column(top).to_owned();
        let norm = x.dot(&x).sqrt();
        x /= norm;
        // First nonzero coordinate positive.
        if let Some(k) = (0..d).find(|&k| x[k].abs() > 1e-9) {
            if x[k] < 0.0 {
                x.mapv_inplace(|t| -t);
            }
        }
        Some(x)
    } else {
        None
    };
    let _ = n;
    (m, direction)
}

/// One-sided Jacobi SVD: returns the singular values of `a` (n x d)
/// and the right singular vectors as columns of a `d x d` orthogonal
/// matrix. Small singular values come out with high relative accuracy,
/// which the affine-dimension test depends on.
fn svd_one_sided_jacobi(a: &Array2<f64>) -> (Vec<f64>, Array2<f64>) {
    let d = a.ncols();
    let mut b = a.clone();
    let mut v: Array2<f64> = Array2::eye(d);
    for _ in 0..60 {
        let mut rotated = false;
        for p in 0..d {
            for q in (p + 1)..d {
                let cp = b.column(p);
                let cq = b.column(q);
                let alpha = cp.dot(&cp);
                let beta = cq.dot(&cq);
                let gamma = cp.dot(&cq);
                if gamma.abs() <= 1e-14 * (alpha * beta).sqrt() || gamma == 0.0 {
                    continue;
                }
                rotated = true;
                let zeta = (beta - alpha) / (2.0 * gamma);
                let t = if zeta.abs() > 1e150 {
                    0.5 / zeta
                } else {
                    let s = (zeta * zeta + 1.0).sqrt();
                    if zeta >= 0.0 { 1.0 / (zeta + s) } else { 1.0 / (zeta - s) }
                };
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = c * t;
                for i in 0..b.nrows() {
                    let bip = b[[i, p]];
                    let biq = b[[i, q]];
                    b[[i, p]] = c * bip - s * biq;
                    b[[i, q]] = s * bip + c * biq;
                }
                for i in 0..d {
                    let vip = v[[i, p]];
                    let viq = v[[i, q]];
                    v[[i, p]] = c * vip - s * viq;
                    v[[i, q]] = s * vip + c * viq;
                }
            }
        }
        if !rotated {
            break;
        }
    }
    let sigma: Vec<f64> = (0..d).map(|k| b.column(k).dot(&b.column(k)).sqrt()).collect();
    (sigma, v)
}

/// Which rigid motion a trivial-basis vector came from.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MotionGenerator {
    /// Translation along coordinate axis `k`.
    Translation(usize),
    /// Instantaneous rotation in the coordinate plane `(k, l)`, `k < l`.
    Rotation(usize, usize),
}

/// Orthonormal basis of the trivial subspace `T(p)`, with the surviving
/// generator recorded for each basis vector.
#[derive(Debug, Clone)]
pub struct TrivialBasis {
    vectors: Vec<Array1<f64>>,
    provenance: Vec<MotionGenerator>,
}

impl TrivialBasis {
    pub fn vectors(&self) -> &[Array1<f64>] {
        &self.vectors
    }

    pub fn provenance(&self) -> &[MotionGenerator] {
        &self.provenance
    }

    pub fn len(&self) -> usize {
        self.vectors.len()
    }

    pub fn is_empty(&self) -> bool {
        self.vectors.is_empty()
    }
}

/// A vertex velocity assignment: a stacked vector in `R^{d n}` with a
/// block of size `d` per vertex.
#[derive(Debug, Clone, PartialEq)]
pub struct Velocity {
    d: usize,
    data: Array1<f64>,
}

impl Velocity {
    pub fn new(d: usize, data: Array1<f64>) -> Result<Self> {
        if d == 0 || !data.len().is_multiple_of(d) {
            return Err(Error::InvalidInput(format!(
                "velocity length {} is not a multiple of d={d}",
                data.len()
            )));
        }
        if data.iter().any(|x| !x.is_finite()) {
            return Err(Error::InvalidInput("velocity has non-finite entries".into()));
        }
        Ok(Velocity { d, data })
    }

    /// Lift a per-vertex scalar field to velocities along `x`:
    /// `u = v (x) x`, i.e. `u_i = v_i * x`.
    pub fn lift(v: &Array1<f64>, x: &Array1<f64>) -> Self {
        let d = x.len();
        let mut data = Array1::zeros(v.len() * d);
        for i in 0..v.len() {
            for k in 0..d {
                data[i * d + k] = v[i] * x[k];
            }
        }
        Velocity { d, data }
    }

    pub fn block(&self, i: usize) -> ArrayView1<'_, f64> {
        self.data.slice(ndarray::s![i * self.d..(i + 1) * self.d])
    }

    pub fn as_array(&self) -> &Array1<f64> {
        &self.data
    }
}

/// A graph together with a configuration, plus the derived affine-hull
/// dimension `m`, the trivial-motion dimension `D`, and (when `m == 1`)
/// the unit direction of the spanning line.
#[derive(Debug, Clone)]
pub struct Framework {
    graph: Graph,
    config: Configuration,
    m: usize,
    line_direction: Option<Array1<f64>>,
    coincidence_tol: f64,
    point_scale: f64,
}

impl Framework {
    pub fn new(graph: Graph, config: Configuration) -> Result<Self> {
        if graph.vertex_count() != config.vertex_count() {
            return Err(Error::InvalidInput(format!(
                "graph has {} vertices but configuration has {} rows",
                graph.vertex_count(),
                config.vertex_count()
            )));
        }
        let (m, line_direction) = affine_dim(&config, AFFINE_TOL);
        let point_scale = config.max_point_norm();
        Ok(Framework {
            graph,
            config,
            m,
            line_direction,
            coincidence_tol: COINCIDENCE_TOL,
            point_scale,
        })
    }

    /// Override the coincidence-detection tolerance.
    pub fn with_coincidence_tol(mut self, tol: f64) -> Self {
        self.coincidence_tol = tol;
        self
    }

    pub fn graph(&self) -> &Graph {
        &self.graph
    }

    pub fn config(&self) -> &Configuration {
        &self.config
    }

    pub fn dimension(&self) -> usize {
        self.config.dimension()
    }

    pub fn vertex_count(&self) -> usize {
        self.graph.vertex_count()
    }

    /// Affine-hull dimension of the point set.
    pub fn affine_hull_dim(&self) -> usize {
        self.m
    }

    /// Unit direction of the spanning line, present exactly when `m == 1`.
    pub fn line_direction(&self) -> Option<&Array1<f64>> {
        self.line_direction.as_ref()
    }

    /// Trivial-motion dimension `D = (m + 1)(2d - m) / 2`.
    pub fn trivial_dim(&self) -> usize {
        let d = self.dimension();
        let m = self.m;
        (m + 1) * (2 * d - m) / 2
    }

    /// Same framework with every point mapped through `Q`.
    pub fn rotated(&self, q: &Array2<f64>) -> Result<Self> {
        Ok(Framework::new(self.graph.clone(), self.config.rotated(q)?)?
            .with_coincidence_tol(self.coincidence_tol))
    }

    /// Whether vertices `i` and `j` occupy the same position, under the
    /// relative coincidence threshold.
    pub fn coincident(&self, i: usize, j: usize) -> bool {
        let diff = &self.config.point(i) - &self.config.point(j);
        diff.dot(&diff).sqrt() <= self.coincidence_tol * (1.0 + self.point_scale)
    }

    /// Edge-direction vector for the `e`-th edge `(i, j)` with `i < j`:
    /// the normalized difference for distinct endpoints, the stored line
    /// direction for coincident endpoints on a line (`m == 1`), and zero
    /// otherwise.
    pub fn edge_direction_at(&self, e: usize) -> Array1<f64> {
        let (i, j) = self.graph.edges()[e];
        if !self.coincident(i, j) {
            let diff = &self.config.point(i) - &self.config.point(j);
            let norm = diff.dot(&diff).sqrt();
            diff / norm
        } else if self.m == 1 {
            self.line_direction.clone().expect("m == 1 implies direction")
        } else {
            Array1::zeros(self.dimension())
        }
    }

    /// Edge direction by endpoint pair; the pair must be an edge.
    pub fn edge_direction(&self, i: usize, j: usize) -> Result<Array1<f64>> {
        let key = (i.min(j), i.max(j));
        let e = self
            .graph
            .edges()
            .iter()
            .position(|&p| p == key)
            .ok_or_else(|| Error::InvalidInput(format!("({i}, {j}) is not an edge")))?;
        Ok(self.edge_direction_at(e))
    }

    /// Normalized rigidity matrix: one row per edge in graph order; the
    /// row for `(i, j)` carries `+delta^T` in block `i` and `-delta^T`
    /// in block `j`.
    pub fn rigidity_matrix(&self) -> Array2<f64> {
        let d = self.dimension();
        let n = self.vertex_count();
        let mut r = Array2::zeros((self.graph.edge_count(), d * n));
        for (e, &(i, j)) in self.graph.edges().iter().enumerate() {
            let delta = self.edge_direction_at(e);
            for k in 0..d {
                r[[e, i * d + k]] = delta[k];
                r[[e, j * d + k]] = -delta[k];
            }
        }
        r
    }

    /// Stiffness matrix `L = R^T R`, positive semidefinite of order `d n`.
    pub fn stiffness_matrix(&self) -> SymMatrix {
        let r = self.rigidity_matrix();
        SymMatrix::new(r.t().dot(&r)).expect("R^T R is square")
    }

    /// Stiffness matrix assembled block-wise: `B_ij = -delta delta^T`
    /// for edges, zero otherwise, and `B_ii = -sum_{j != i} B_ij`.
    /// Identical to [`Self::stiffness_matrix`]; kept as an independent
    /// assembly route for consistency checks.
    pub fn stiffness_matrix_blocks(&self) -> SymMatrix {
        let d = self.dimension();
        let n = self.vertex_count();
        let mut l = Array2::zeros((d * n, d * n));
        for (e, &(i, j)) in self.graph.edges().iter().enumerate() {
            let delta = self.edge_direction_at(e);
            for a in 0..d {
                for b in 0..d {
                    let v = delta[a] * delta[b];
                    l[[i * d + a, j * d + b]] -= v;
                    l[[j * d + a, i * d + b]] -= v;
                    l[[i * d + a, i * d + b]] += v;
                    l[[j * d + a, j * d + b]] += v;
                }
            }
        }
        SymMatrix::new(l).expect("square by construction")
    }

    /// Orthonormal basis of the trivial subspace `T(p)`, built from the
    /// `d` translation generators and the `d(d-1)/2` rotation generators
    /// `A_kl p`. The basis size must equal `D`; anything else signals a
    /// tolerance or degeneracy bug.
    pub fn trivial_basis(&self) -> Result<TrivialBasis> {
        let d = self.dimension();
        let n = self.vertex_count();
        let mut generators: Vec<Array1<f64>> = Vec::new();
        let mut labels: Vec<MotionGenerator> = Vec::new();

        for k in 0..d {
            let mut t = Array1::zeros(d * n);
            for i in 0..n {
                t[i * d + k] = 1.0;
            }
            generators.push(t);
            labels.push(MotionGenerator::Translation(k));
        }
        // A_kl = E_kl - E_lk maps p_i to p_i[l] e_k - p_i[k] e_l.
        for k in 0..d {
            for l in (k + 1)..d {
                let mut r = Array1::zeros(d * n);
                for i in 0..n {
                    let p = self.config.point(i);
                    r[i * d + k] = p[l];
                    r[i * d + l] = -p[k];
                }
                generators.push(r);
                labels.push(MotionGenerator::Rotation(k, l));
            }
        }

        let (vectors, kept) = linalg::orthonormalize_indexed(&generators, linalg::DROP_TOL);
        let expected = self.trivial_dim();
        if vectors.len() != expected {
            return Err(Error::Internal(format!(
                "trivial basis has {} vectors, expected D={expected} (m={}, d={d}, n={n})",
                vectors.len(),
                self.m
            )));
        }
        let provenance = kept.into_iter().map(|i| labels[i]).collect();
        Ok(TrivialBasis { vectors, provenance })
    }

    /// The rigidity eigenvalue: the `(D+1)`-th smallest eigenvalue of
    /// the stiffness matrix.
    pub fn rigidity_eigenvalue(&self) -> Result<f64> {
        let dn = self.dimension() * self.vertex_count();
        let dd = self.trivial_dim();
        if dn <= dd {
            return Err(Error::InvalidInput(format!(
                "rigidity eigenvalue undefined: d*n = {dn} <= D = {dd}"
            )));
        }
        let spec = linalg::eigh(&self.stiffness_matrix())?;
        Ok(spec.value(dd))
    }

    /// Infinitesimal rigidity test: rigidity eigenvalue above `tol`
    /// (pass `None` for the 1e-8 default).
    pub fn is_infinitesimally_rigid(&self, tol: Option<f64>) -> Result<bool> {
        Ok(self.rigidity_eigenvalue()? > tol.unwrap_or(1e-8))
    }
}

/// Deterministic-for-a-given-RNG random rotation in SO(d): orthonormalize
/// a Gaussian matrix and fix the determinant sign.
pub fn random_rotation<R: Rng>(d: usize, rng: &mut R) -> Array2<f64> {
    loop {
        let raw: Vec<Array1<f64>> = (0..d)
            .map(|_| Array1::from_shape_fn(d, |_| rng.sample::<f64, _>(StandardNormal)))
            .collect();
        let basis = linalg::orthonormalize(&raw, linalg::DROP_TOL);
        if basis.len() < d {
            continue; // singular draw, essentially impossible
        }
        let mut q = Array2::zeros((d, d));
        for (r, row) in basis.iter().enumerate() {
            for c in 0..d {
                q[[r, c]] = row[c];
            }
        }
        if determinant(&q) < 0.0 {
            for c in 0..d {
                q[[d - 1, c]] = -q[[d - 1, c]];
            }
        }
        return q;
    }
}

/// Determinant by Gaussian elimination with partial pivoting.
pub(crate) fn determinant(a: &Array2<f64>) -> f64 {
    let n = a.nrows();
    let mut m = a.clone();
    let mut det = 1.0;
    for col in 0..n {
        let mut pivot = col;
        for r in (col + 1)..n {
            if m[[r, col]].abs() > m[[pivot, col]].abs() {
                pivot = r;
            }
        }
        if m[[pivot, col]] == 0.0 {
            return 0.0;
        }
        if pivot != col {
            for c in 0..n {
                let tmp = m[[col, c]];
                m[[col, c]] = m[[pivot, c]];
                m[[pivot, c]] = tmp;
            }
            det = -det;
        }
        det *= m[[col, col]];
        for r in (col + 1)..n {
            let f = m[[r, col]] / m[[col, col]];
            for c in col..n {
                m[[r, c]] -= f * m[[col, c]];
            }
        }
    }
    det
}
