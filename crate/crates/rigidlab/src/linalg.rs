//! Dense symmetric eigendecomposition, orthonormalization, Kronecker
//! products, and subspace arithmetic.
//!
//! The eigensolver is a cyclic Jacobi iteration: simple, robust, and
//! accurate for the desk-scale matrices this crate works with. All
//! routines are deterministic, including eigenvector signs and the
//! ordering of degenerate eigenvalues.

use ndarray::{Array1, Array2};

use crate::{Error, Result};

/// Relative rank/drop tolerance used by orthonormalization and
/// complement construction. Matches the eigensolver accuracy floor.
pub const DROP_TOL: f64 = 1e-9;

/// Jacobi sweep budget; convergence is quadratic, so this is generous.
const MAX_SWEEPS: usize = 100;

/// Dense symmetric matrix. Symmetry is exact: the constructor averages
/// `A` with its transpose, so `a[(i,j)] == a[(j,i)]` bit-for-bit.
#[derive(Debug, Clone)]
pub struct SymMatrix {
    data: Array2<f64>,
}

impl SymMatrix {
    /// Build from a square matrix, symmetrizing via `(A + A^T) / 2`.
    pub fn new(a: Array2<f64>) -> Result<Self> {
        let (r, c) = a.dim();
        if r != c {
            return Err(Error::InvalidInput(format!(
                "symmetric matrix must be square, got {r}x{c}"
            )));
        }
        if r == 0 {
            return Err(Error::InvalidInput("matrix order must be positive".into()));
        }
        let mut data = a;
        for i in 0..r {
            for j in (i + 1)..r {
                let avg = 0.5 * (data[[i, j]] + data[[j, i]]);
                data[[i, j]] = avg;
                data[[j, i]] = avg;
            }
        }
        Ok(SymMatrix { data })
    }

    pub fn order(&self) -> usize {
        self.data.nrows()
    }

    pub fn as_array(&self) -> &Array2<f64> {
        &self.data
    }

    pub fn into_array(self) -> Array2<f64> {
        self.data
    }

    /// Largest absolute entry.
    pub fn max_abs(&self) -> f64 {
        self.data.iter().fold(0.0, |m, x| m.max(x.abs()))
    }
}

/// Full eigendecomposition of a symmetric matrix: ascending eigenvalues
/// paired with orthonormal eigenvector columns.
#[derive(Debug, Clone)]
pub struct Spectrum {
    values: Array1<f64>,
    vectors: Array2<f64>,
}

impl Spectrum {
    /// Eigenvalues in ascending order (multiplicity counted).
    pub fn values(&self) -> &Array1<f64> {
        &self.values
    }

    /// Eigenvectors as columns; column `k` pairs with `values()[k]`.
    pub fn vectors(&self) -> &Array2<f64> {
        &self.vectors
    }

    /// `k`-th smallest eigenvalue, 0-based.
    pub fn value(&self, k: usize) -> f64 {
        self.values[k]
    }

    /// Eigenvector for the `k`-th smallest eigenvalue, 0-based.
    pub fn vector(&self, k: usize) -> Array1<f64> {
        self.vectors.column(k).to_owned()
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }
}

fn offdiag_norm(a: &Array2<f64>) -> f64 {
    let n = a.nrows();
    let mut s = 0.0;
    for p in 0..n {
        for q in (p + 1)..n {
            s += 2.0 * a[[p, q]] * a[[p, q]];
        }
    }
    s.sqrt()
}

/// Eigendecomposition by cyclic Jacobi rotations.
///
/// Sweeps run until the off-diagonal Frobenius norm drops below
/// `1e-12 * ||A||_F`, capped at 100 sweeps. Eigenvalues are sorted
/// ascending (stable), and each eigenvector's sign is fixed by making
/// its largest-magnitude entry positive, so results are reproducible.
pub fn eigh(a: &SymMatrix) -> Result<Spectrum> {
    let n = a.order();
    if a.as_array().iter().any(|x| !x.is_finite()) {
        return Err(Error::InvalidInput(
            "matrix has non-finite entries".into(),
        ));
    }

    let mut m = a.as_array().clone();
    let mut v: Array2<f64> = Array2::eye(n);
    let fro = m.iter().map(|x| x * x).sum::<f64>().sqrt();
    let target = 1e-12 * fro;

    for _ in 0..MAX_SWEEPS {
        if offdiag_norm(&m) <= target {
            break;
        }
        for p in 0..n {
            for q in (p + 1)..n {
                let apq = m[[p, q]];
                if apq == 0.0 {
                    continue;
                }
                let theta = 0.5 * (m[[q, q]] - m[[p, p]]) / apq;
                // t = sign(theta) / (|theta| + sqrt(theta^2 + 1)),
                // with a guard against theta^2 overflowing.
                let t = if theta.abs() > 1e150 {
                    0.5 / theta
                } else {
                    let s = (theta * theta + 1.0).sqrt();
                    if theta >= 0.0 { 1.0 / (theta + s) } else { 1.0 / (theta - s) }
                };
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;

                let app = m[[p, p]];
                let aqq = m[[q, q]];
                m[[p, p]] = app - t * apq;
                m[[q, q]] = aqq + t * apq;
                m[[p, q]] = 0.0;
                m[[q, p]] = 0.0;
                for k in 0..n {
                    if k == p || k == q {
                        continue;
                    }
                    let akp = m[[k, p]];
                    let akq = m[[k, q]];
                    let np = c * akp - s * akq;
                    let nq = s * akp + c * akq;
                    m[[k, p]] = np;
                    m[[p, k]] = np;
                    m[[k, q]] = nq;
                    m[[q, k]] = nq;
                }
                for k in 0..n {
                    let vkp = v[[k, p]];
                    let vkq = v[[k, q]];
                    v[[k, p]] = c * vkp - s * vkq;
                    v[[k, q]] = s * vkp + c * vkq;
                }
            }
        }
    }

    // Stable ascending sort; ties keep the Jacobi column order.
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| m[[i, i]].partial_cmp(&m[[j, j]]).unwrap());

    let values = Array1::from_iter(order.iter().map(|&i| m[[i, i]]));
    let mut vectors = Array2::zeros((n, n));
    for (dst, &src) in order.iter().enumerate() {
        // Sign convention: largest-magnitude entry positive.
        let mut best = 0;
        for k in 1..n {
            if v[[k, src]].abs() > v[[best, src]].abs() {
                best = k;
            }
        }
        let sign = if v[[best, src]] < 0.0 { -1.0 } else { 1.0 };
        for k in 0..n {
            vectors[[k, dst]] = sign * v[[k, src]];
        }
    }

    Ok(Spectrum { values, vectors })
}

/// Kronecker product: block `(i, j)` of the result equals `a[(i,j)] * b`.
pub fn kron(a: &Array2<f64>, b: &Array2<f64>) -> Array2<f64> {
    let (ra, ca) = a.dim();
    let (rb, cb) = b.dim();
    let mut out = Array2::zeros((ra * rb, ca * cb));
    for i in 0..ra {
        for j in 0..ca {
            let aij = a[[i, j]];
            if aij == 0.0 {
                continue;
            }
            for k in 0..rb {
                for l in 0..cb {
                    out[[i * rb + k, j * cb + l]] = aij * b[[k, l]];
                }
            }
        }
    }
    out
}

fn subtract_projections(r: &mut Array1<f64>, basis: &[Array1<f64>]) {
    // Two MGS passes keep residual orthogonality near machine precision.
    for _ in 0..2 {
        for b in basis {
            let coeff = b.dot(r);
            r.scaled_add(-coeff, b);
        }
    }
}

/// Modified Gram-Schmidt with re-orthogonalization. Returns the basis
/// together with the indices of the inputs that survived; an input is
/// dropped when its residual norm after projection is at most
/// `tol * (1 + original norm)`.
pub fn orthonormalize_indexed(
    vectors: &[Array1<f64>],
    tol: f64,
) -> (Vec<Array1<f64>>, Vec<usize>) {
    let mut basis: Vec<Array1<f64>> = Vec::new();
    let mut kept: Vec<usize> = Vec::new();
    for (idx, v) in vectors.iter().enumerate() {
        let orig_norm = v.dot(v).sqrt();
        let mut r = v.clone();
        subtract_projections(&mut r, &basis);
        let rn = r.dot(&r).sqrt();
        if rn > tol * (1.0 + orig_norm) {
            basis.push(&r / rn);
            kept.push(idx);
        }
    }
    (basis, kept)
}

/// Orthonormal basis of the span of `vectors`, dropping dependent inputs.
pub fn orthonormalize(vectors: &[Array1<f64>], tol: f64) -> Vec<Array1<f64>> {
    orthonormalize_indexed(vectors, tol).0
}

/// Remove from `v` its components along an orthonormal `basis`:
/// `v - sum_b (b^T v) b`. The result is orthogonal to every basis
/// vector to within roughly 1e-10 relative.
pub fn project_out(v: &Array1<f64>, basis: &[Array1<f64>]) -> Array1<f64> {
    let mut r = v.clone();
    subtract_projections(&mut r, basis);
    r
}

/// Orthonormal basis of the orthogonal complement of `span(constraints)`
/// in `R^dim`, obtained by extending with standard basis vectors.
pub fn complement_basis(constraints: &[Array1<f64>], dim: usize) -> Vec<Array1<f64>> {
    let mut candidates: Vec<Array1<f64>> = constraints.to_vec();
    for k in 0..dim {
        let mut e = Array1::zeros(dim);
        e[k] = 1.0;
        candidates.push(e);
    }
    let (basis, kept) = orthonormalize_indexed(&candidates, DROP_TOL);
    basis
        .into_iter()
        .zip(kept)
        .filter(|&(_, idx)| idx >= constraints.len())
        .map(|(b, _)| b)
        .collect()
}

/// Minimum of the Rayleigh quotient `u^T A u / u^T u` over nonzero `u`
/// orthogonal to every constraint vector, computed by deflation: the
/// smallest eigenvalue of `B^T A B` where `B` spans the complement.
pub fn min_rayleigh(a: &SymMatrix, constraints: &[Array1<f64>]) -> Result<f64> {
    let n = a.order();
    for c in constraints {
        if c.len() != n {
            return Err(Error::InvalidInput(format!(
                "constraint length {} does not match order {n}",
                c.len()
            )));
        }
    }
    let comp = complement_basis(constraints, n);
    if comp.is_empty() {
        return Err(Error::InvalidInput(
            "constraints span the whole space".into(),
        ));
    }
    let c = comp.len();
    let mut b = Array2::zeros((n, c));
    for (j, col) in comp.iter().enumerate() {
        for i in 0..n {
            b[[i, j]] = col[i];
        }
    }
    let compressed = b.t().dot(a.as_array()).dot(&b);
    let spec = eigh(&SymMatrix::new(compressed)?)?;
    Ok(spec.value(0))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use ndarray::array;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_symmetric(n: usize, rng: &mut ChaCha8Rng) -> SymMatrix {
        let a = Array2::from_shape_fn((n, n), |_| rng.random_range(-1.0..1.0));
        SymMatrix::new(a).unwrap()
    }

    #[test]
    fn symmetrizes_at_construction() {
        let a = SymMatrix::new(array![[1.0, 3.0], [1.0, 2.0]]).unwrap();
        assert_eq!(a.as_array()[[0, 1]], 2.0);
        assert_eq!(a.as_array()[[1, 0]], 2.0);
        assert!(SymMatrix::new(Array2::zeros((2, 3))).is_err());
        assert!(SymMatrix::new(Array2::zeros((0, 0))).is_err());
    }

    #[test]
    fn eigh_two_by_two() {
        let a = SymMatrix::new(array![[1.0, -1.0], [-1.0, 1.0]]).unwrap();
        let s = eigh(&a).unwrap();
        assert_abs_diff_eq!(s.value(0), 0.0, epsilon = 1e-12);
        assert_abs_diff_eq!(s.value(1), 2.0, epsilon = 1e-12);
    }

    #[test]
    fn eigh_identity() {
        let a = SymMatrix::new(Array2::eye(3)).unwrap();
        let s = eigh(&a).unwrap();
        for k in 0..3 {
            assert_abs_diff_eq!(s.value(k), 1.0, epsilon = 1e-14);
        }
    }

    #[test]
    fn eigh_complete_graph_laplacian() {
        // Laplacian of K_4: diagonal 3, off-diagonal -1.
        let a = Array2::from_shape_fn((4, 4), |(i, j)| if i == j { 3.0 } else { -1.0 });
        let s = eigh(&SymMatrix::new(a).unwrap()).unwrap();
        assert_abs_diff_eq!(s.value(0), 0.0, epsilon = 1e-10);
        for k in 1..4 {
            assert_abs_diff_eq!(s.value(k), 4.0, epsilon = 1e-10);
        }
    }

    #[test]
    fn eigh_rejects_non_finite() {
        let a = SymMatrix::new(array![[f64::NAN, 0.0], [0.0, 1.0]]).unwrap();
        assert!(matches!(eigh(&a), Err(Error::InvalidInput(_))));
    }

    #[test]
    fn eigh_order_one() {
        let a = SymMatrix::new(array![[5.0]]).unwrap();
        let s = eigh(&a).unwrap();
        assert_eq!(s.len(), 1);
        assert_abs_diff_eq!(s.value(0), 5.0, epsilon = 0.0);
    }

    #[test]
    fn eigh_reconstruction_and_orthonormality() {
        let mut rng = ChaCha8Rng::seed_from_u64(42);
        for &n in &[2usize, 5, 13, 37, 60] {
            let a = random_symmetric(n, &mut rng);
            let s = eigh(&a).unwrap();
            let v = s.vectors();

            let vtv = v.t().dot(v);
            let mut ortho_err: f64 = 0.0;
            for i in 0..n {
                for j in 0..n {
                    let expect = if i == j { 1.0 } else { 0.0 };
                    ortho_err = ortho_err.max((vtv[[i, j]] - expect).abs());
                }
            }
            assert!(ortho_err <= 1e-10, "orthonormality {ortho_err:.2e} at n={n}");

            let lam = Array2::from_diag(s.values());
            let recon = v.dot(&lam).dot(&v.t());
            let mut recon_err: f64 = 0.0;
            for i in 0..n {
                for j in 0..n {
                    recon_err = recon_err.max((recon[[i, j]] - a.as_array()[[i, j]]).abs());
                }
            }
            let bound = 1e-9 * (1.0 + a.max_abs());
            assert!(recon_err <= bound, "reconstruction {recon_err:.2e} at n={n}");
        }
    }

    #[test]
    fn eigh_deterministic() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let a = random_symmetric(9, &mut rng);
        let s1 = eigh(&a).unwrap();
        let s2 = eigh(&a).unwrap();
        assert_eq!(s1.values().as_slice().unwrap(), s2.values().as_slice().unwrap());
        assert_eq!(s1.vectors(), s2.vectors());
    }

    #[test]
    fn kron_scalar() {
        let a = array![[2.0]];
        let b = Array2::eye(2);
        let k = kron(&a, &b);
        assert_eq!(k, array![[2.0, 0.0], [0.0, 2.0]]);
    }

    #[test]
    fn kron_identity_block_diagonal() {
        let b = array![[1.0, 2.0], [3.0, 4.0]];
        let k = kron(&Array2::eye(2), &b);
        assert_eq!(k[[0, 0]], 1.0);
        assert_eq!(k[[1, 1]], 4.0);
        assert_eq!(k[[2, 2]], 1.0);
        assert_eq!(k[[3, 2]], 3.0);
        assert_eq!(k[[0, 2]], 0.0);
        assert_eq!(k[[2, 0]], 0.0);
    }

    #[test]
    fn kron_laplacian_times_projector() {
        // kron(L(K_2), e1 e1^T) in R^2: entries +-1 at (0,0),(0,2),(2,0),(2,2).
        let l = array![[1.0, -1.0], [-1.0, 1.0]];
        let e11 = array![[1.0, 0.0], [0.0, 0.0]];
        let k = kron(&l, &e11);
        let mut expect = Array2::zeros((4, 4));
        expect[[0, 0]] = 1.0;
        expect[[0, 2]] = -1.0;
        expect[[2, 0]] = -1.0;
        expect[[2, 2]] = 1.0;
        assert_eq!(k, expect);
    }

    #[test]
    fn kron_eigenvalues_are_pairwise_products() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let a = random_symmetric(3, &mut rng);
        let b = random_symmetric(4, &mut rng);
        let k = SymMatrix::new(kron(a.as_array(), b.as_array())).unwrap();
        let mut products: Vec<f64> = Vec::new();
        for la in eigh(&a).unwrap().values() {
            for lb in eigh(&b).unwrap().values() {
                products.push(la * lb);
            }
        }
        products.sort_by(|x, y| x.partial_cmp(y).unwrap());
        let kv = eigh(&k).unwrap();
        for (got, want) in kv.values().iter().zip(&products) {
            assert_abs_diff_eq!(got, want, epsilon = 1e-9);
        }
    }

    #[test]
    fn orthonormalize_drops_dependent() {
        let vs = vec![array![1.0, 0.0], array![2.0, 0.0]];
        let basis = orthonormalize(&vs, DROP_TOL);
        assert_eq!(basis.len(), 1);
    }

    #[test]
    fn orthonormalize_normalizes() {
        let vs = vec![array![1.0, 0.0], array![0.0, 3.0]];
        let basis = orthonormalize(&vs, DROP_TOL);
        assert_eq!(basis.len(), 2);
        assert_abs_diff_eq!(basis[1][1], 1.0, epsilon = 1e-14);
    }

    #[test]
    fn orthonormalize_keeps_unit_vector() {
        let r = 1.0 / 2.0f64.sqrt();
        let vs = vec![array![r, r]];
        let basis = orthonormalize(&vs, DROP_TOL);
        assert_eq!(basis.len(), 1);
        assert_abs_diff_eq!(basis[0][0], r, epsilon = 1e-14);
        assert_abs_diff_eq!(basis[0][1], r, epsilon = 1e-14);
    }

    #[test]
    fn project_out_examples() {
        let e1 = array![1.0, 0.0];
        let r = project_out(&array![1.0, 1.0], std::slice::from_ref(&e1));
        assert_abs_diff_eq!(r[0], 0.0, epsilon = 1e-14);
        assert_abs_diff_eq!(r[1], 1.0, epsilon = 1e-14);

        let self_proj = project_out(&e1, std::slice::from_ref(&e1));
        assert!(self_proj.dot(&self_proj).sqrt() <= 1e-14);

        let v = array![0.3, -0.7];
        let nothing = project_out(&v, &[]);
        assert_eq!(nothing, v);
    }

    #[test]
    fn min_rayleigh_diagonal_with_constraint() {
        let a = SymMatrix::new(Array2::from_diag(&array![1.0, 2.0, 3.0])).unwrap();
        let e1 = array![1.0, 0.0, 0.0];
        let m = min_rayleigh(&a, std::slice::from_ref(&e1)).unwrap();
        assert_abs_diff_eq!(m, 2.0, epsilon = 1e-10);
    }

    #[test]
    fn min_rayleigh_unconstrained_is_smallest_eigenvalue() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let a = random_symmetric(6, &mut rng);
        let m = min_rayleigh(&a, &[]).unwrap();
        assert_abs_diff_eq!(m, eigh(&a).unwrap().value(0), epsilon = 1e-10);
    }

    #[test]
    fn min_rayleigh_rejects_full_span() {
        let a = SymMatrix::new(Array2::eye(2)).unwrap();
        let cons = vec![array![1.0, 0.0], array![0.0, 1.0]];
        assert!(matches!(min_rayleigh(&a, &cons), Err(Error::InvalidInput(_))));
    }

    #[test]
    fn min_rayleigh_deflates_to_second_laplacian_eigenvalue() {
        // A = L(K_3) (x) e1 e1^T in d=2; constraints span X-perp plus the
        // e1 translation. The constrained minimum is lambda_2(L(K_3)) = 3.
        let l = array![[2.0, -1.0, -1.0], [-1.0, 2.0, -1.0], [-1.0, -1.0, 2.0]];
        let e11 = array![[1.0, 0.0], [0.0, 0.0]];
        let a = SymMatrix::new(kron(&l, &e11)).unwrap();

        let mut constraints: Vec<Array1<f64>> = Vec::new();
        // X-perp: the e2 coordinate of every vertex.
        for i in 0..3 {
            let mut v = Array1::zeros(6);
            v[2 * i + 1] = 1.0;
            constraints.push(v);
        }
        // t_1 = 1_n (x) e_1, normalized.
        let mut t1 = Array1::zeros(6);
        for i in 0..3 {
            t1[2 * i] = 1.0 / 3.0f64.sqrt();
        }
        constraints.push(t1);

        let m = min_rayleigh(&a, &constraints).unwrap();
        assert_abs_diff_eq!(m, 3.0, epsilon = 1e-9);
    }

    #[test]
    fn min_rayleigh_random_sampling_oracle() {
        // Random sampling in the complement gives an upper bound on the
        // true minimum; with a 2-dimensional complement the sampled min
        // is also tight to ~1e-6.
        let mut rng = ChaCha8Rng::seed_from_u64(19);
        for &n in &[4usize, 6, 8] {
            let a = random_symmetric(n, &mut rng);
            let raw: Vec<Array1<f64>> = (0..n - 2)
                .map(|_| Array1::from_shape_fn(n, |_| rng.random_range(-1.0..1.0)))
                .collect();
            let constraints = orthonormalize(&raw, DROP_TOL);
            let got = min_rayleigh(&a, &constraints).unwrap();

            let comp = complement_basis(&constraints, n);
            assert_eq!(comp.len(), 2);
            let mut sampled = f64::INFINITY;
            for _ in 0..10_000 {
                let c0: f64 = rng.random_range(-1.0..1.0);
                let c1: f64 = rng.random_range(-1.0..1.0);
                let u = &comp[0] * c0 + &comp[1] * c1;
                let nn = u.dot(&u);
                if nn < 1e-12 {
                    continue;
                }
                let q = u.dot(&a.as_array().dot(&u)) / nn;
                sampled = sampled.min(q);
            }
            assert!(got <= sampled + 1e-9, "min_rayleigh above sampled upper bound");
            assert!(sampled - got <= 1e-6, "sampled min not tight: {:.2e}", sampled - got);

            // Deflation agrees with the compressed-matrix eigenvalue route.
            let c = comp.len();
            let mut b = Array2::zeros((n, c));
            for (j, col) in comp.iter().enumerate() {
                for i in 0..n {
                    b[[i, j]] = col[i];
                }
            }
            let compressed = SymMatrix::new(b.t().dot(a.as_array()).dot(&b)).unwrap();
            let direct = eigh(&compressed).unwrap().value(0);
            assert_abs_diff_eq!(got, direct, epsilon = 1e-12);
        }
    }
}
