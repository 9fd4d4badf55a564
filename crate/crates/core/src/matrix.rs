//! Dense complex Hermitian linear algebra.
//!
//! Everything is complex; real symmetric inputs are Hermitian matrices with
//! zero imaginary parts. Dimensions are desk scale (n up to a few dozen), so
//! all routines are dense.

use nalgebra::{Complex, DMatrix, DVector, SymmetricEigen};

use crate::error::{Error, Result};

pub type C64 = Complex<f64>;
pub type CMat = DMatrix<C64>;
pub type CVec = DVector<C64>;

/// Asymmetry above this is rejected by [`HermitianMatrix::new`].
pub const SYMMETRY_TOL: f64 = 1e-8;
/// Default slack for positive semidefiniteness checks.
pub const PSD_TOL: f64 = 1e-9;
/// Default pivot threshold for [`gram_factorize`].
pub const PIVOT_TOL: f64 = 1e-10;

const EIGEN_MAX_ITER: usize = 10_000;

pub fn c(re: f64, im: f64) -> C64 {
    Complex::new(re, im)
}

pub fn real(re: f64) -> C64 {
    Complex::new(re, 0.0)
}

/// A dense square matrix equal to its conjugate transpose.
#[derive(Debug, Clone, PartialEq)]
pub struct HermitianMatrix {
    m: CMat,
}

impl HermitianMatrix {
    /// Symmetrizes `m` after checking that its asymmetry is at most
    /// [`SYMMETRY_TOL`] (scaled by the matrix magnitude).
    pub fn new(m: CMat) -> Result<Self> {
        Self::with_tolerance(m, SYMMETRY_TOL)
    }

    pub fn with_tolerance(m: CMat, tol: f64) -> Result<Self> {
        if m.nrows() != m.ncols() {
            return Err(Error::NotSquare { rows: m.nrows(), cols: m.ncols() });
        }
        if m.nrows() == 0 {
            return Err(Error::EmptyMatrix);
        }
        let scale = 1.0 + m.iter().fold(0.0f64, |acc, z| acc.max(z.norm()));
        let mut asymmetry = 0.0f64;
        for i in 0..m.nrows() {
            for j in i..m.ncols() {
                asymmetry = asymmetry.max((m[(i, j)] - m[(j, i)].conj()).norm());
            }
        }
        if !asymmetry.is_finite() || asymmetry > tol * scale {
            return Err(Error::NotHermitian { asymmetry, tol });
        }
        Ok(Self::symmetrized(m))
    }

    /// Takes the Hermitian part `(m + m*)/2` without any check.
    pub(crate) fn symmetrized(m: CMat) -> Self {
        let h = (&m + m.adjoint()).scale(0.5);
        HermitianMatrix { m: h }
    }

    /// Builds a real symmetric matrix from row-major entries.
    pub fn from_real(n: usize, entries: &[f64]) -> Result<Self> {
        if entries.len() != n * n {
            return Err(Error::Dimension { expected: n * n, found: entries.len() });
        }
        Self::new(CMat::from_fn(n, n, |i, j| real(entries[i * n + j])))
    }

    pub fn from_rows(rows: &[&[f64]]) -> Result<Self> {
        let n = rows.len();
        let flat: Vec<f64> = rows.iter().flat_map(|r| r.iter().copied()).collect();
        Self::from_real(n, &flat)
    }

    pub fn identity(n: usize) -> Self {
        HermitianMatrix { m: CMat::identity(n, n) }
    }

    pub fn zeros(n: usize) -> Self {
        HermitianMatrix { m: CMat::zeros(n, n) }
    }

    pub fn diagonal(d: &[f64]) -> Self {
        let n = d.len();
        HermitianMatrix { m: CMat::from_fn(n, n, |i, j| if i == j { real(d[i]) } else { real(0.0) }) }
    }

    /// The rank-one matrix `v v*`.
    pub fn outer(v: &CVec) -> Self {
        HermitianMatrix::symmetrized(v * v.adjoint())
    }

    pub fn dim(&self) -> usize {
        self.m.nrows()
    }

    pub fn get(&self, i: usize, j: usize) -> C64 {
        self.m[(i, j)]
    }

    pub fn as_matrix(&self) -> &CMat {
        &self.m
    }

    pub fn into_matrix(self) -> CMat {
        self.m
    }

    pub fn trace(&self) -> f64 {
        self.m.diagonal().iter().map(|z| z.re).sum()
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.m.norm()
    }

    pub fn scale(&self, s: f64) -> Self {
        HermitianMatrix { m: self.m.map(|z| z * s) }
    }

    pub fn add(&self, other: &Self) -> Result<Self> {
        self.check_same_dim(other)?;
        Ok(HermitianMatrix { m: &self.m + &other.m })
    }

    pub fn sub(&self, other: &Self) -> Result<Self> {
        self.check_same_dim(other)?;
        Ok(HermitianMatrix { m: &self.m - &other.m })
    }

    fn check_same_dim(&self, other: &Self) -> Result<()> {
        if self.dim() != other.dim() {
            return Err(Error::Dimension { expected: self.dim(), found: other.dim() });
        }
        Ok(())
    }

    /// `U * self * U*` for any (possibly rectangular) `U`.
    pub fn conjugate_by(&self, u: &CMat) -> Self {
        HermitianMatrix::symmetrized(u * &self.m * u.adjoint())
    }

    /// Rows and columns indexed by `subset` (0-based).
    pub fn principal_submatrix(&self, subset: &[usize]) -> Self {
        let k = subset.len();
        HermitianMatrix { m: CMat::from_fn(k, k, |a, b| self.m[(subset[a], subset[b])]) }
    }

    /// Embeds a `|subset| x |subset|` block into an `n x n` zero matrix.
    pub fn embed(block: &CMat, subset: &[usize], n: usize) -> Self {
        let mut m = CMat::zeros(n, n);
        for (a, &i) in subset.iter().enumerate() {
            for (b, &j) in subset.iter().enumerate() {
                m[(i, j)] = block[(a, b)];
            }
        }
        HermitianMatrix::symmetrized(m)
    }

    pub fn is_diagonal(&self, tol: f64) -> bool {
        let n = self.dim();
        (0..n).all(|i| (0..n).all(|j| i == j || self.m[(i, j)].norm() <= tol))
    }

    /// Largest entry magnitude of `self - other`.
    pub fn max_abs_diff(&self, other: &Self) -> f64 {
        (&self.m - &other.m).iter().fold(0.0, |acc, z| acc.max(z.norm()))
    }

    pub fn permuted(&self, perm: &[usize]) -> Self {
        let n = self.dim();
        HermitianMatrix { m: CMat::from_fn(n, n, |i, j| self.m[(perm[i], perm[j])]) }
    }
}

/// Eigenvalues in descending order with matching orthonormal eigenvectors.
#[derive(Debug, Clone)]
pub struct Eigen {
    pub values: Vec<f64>,
    pub vectors: Vec<CVec>,
}

impl Eigen {
    pub fn max(&self) -> f64 {
        self.values[0]
    }

    pub fn min(&self) -> f64 {
        *self.values.last().expect("dimension >= 1")
    }
}

pub fn eig_hermitian(m: &HermitianMatrix) -> Result<Eigen> {
    let n = m.dim();
    let dec = SymmetricEigen::try_new(m.m.clone(), f64::EPSILON, EIGEN_MAX_ITER)
        .ok_or(Error::EigenNonConvergence { dim: n })?;
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| dec.eigenvalues[b].total_cmp(&dec.eigenvalues[a]));
    let values = order.iter().map(|&i| dec.eigenvalues[i]).collect();
    let vectors = order.iter().map(|&i| dec.eigenvectors.column(i).into_owned()).collect();
    Ok(Eigen { values, vectors })
}

pub fn eigenvalues(m: &HermitianMatrix) -> Result<Vec<f64>> {
    Ok(eig_hermitian(m)?.values)
}

pub fn lambda_max(m: &HermitianMatrix) -> Result<f64> {
    Ok(eig_hermitian(m)?.max())
}

pub fn lambda_min(m: &HermitianMatrix) -> Result<f64> {
    Ok(eig_hermitian(m)?.min())
}

pub fn is_psd(m: &HermitianMatrix, tol: f64) -> Result<bool> {
    Ok(lambda_min(m)? >= -tol)
}

/// Number of eigenvalues strictly above `tol`.
pub fn numerical_rank(m: &HermitianMatrix, tol: f64) -> Result<usize> {
    Ok(eigenvalues(m)?.into_iter().filter(|&l| l > tol).count())
}

/// Rank-revealing (diagonally pivoted) Cholesky factorization of a PSD
/// matrix into vectors `v_i` with `v_i* v_j = G_ij`.
///
/// The output dimension is the number of pivots above `tol`; singular Gram
/// matrices (including zero rows) are handled without failure.
pub fn gram_factorize(g: &HermitianMatrix, tol: f64) -> Result<StateList> {
    let min_eig = lambda_min(g)?;
    if min_eig < -tol.max(PSD_TOL) {
        return Err(Error::NotPsd { min_eigenvalue: min_eig });
    }
    let n = g.dim();
    let mut work = g.m.clone();
    let mut perm: Vec<usize> = (0..n).collect();
    // l[(i, r)]: row i (in permuted order), column r of the factor
    let mut l = CMat::zeros(n, n);
    let mut rank = 0;
    for r in 0..n {
        let (piv, piv_val) = (r..n)
            .map(|i| (i, work[(i, i)].re))
            .fold((r, f64::NEG_INFINITY), |best, cur| if cur.1 > best.1 { cur } else { best });
        if piv_val <= tol {
            break;
        }
        work.swap_rows(r, piv);
        work.swap_columns(r, piv);
        l.swap_rows(r, piv);
        perm.swap(r, piv);
        let d = piv_val.sqrt();
        l[(r, r)] = real(d);
        for i in r + 1..n {
            l[(i, r)] = work[(i, r)] / d;
        }
        for i in r + 1..n {
            for j in r + 1..n {
                let upd = l[(i, r)] * l[(j, r)].conj();
                work[(i, j)] -= upd;
            }
        }
        rank += 1;
    }
    // G[perm[i], perm[j]] = sum_r l[i, r] conj(l[j, r]); v_i = conj(row i)
    let mut states = vec![CVec::zeros(rank); n];
    for (row, &orig) in perm.iter().enumerate() {
        for r in 0..rank {
            states[orig][r] = l[(row, r)].conj();
        }
    }
    Ok(StateList { dim: rank, states })
}

/// Moore-Penrose inverse of a nonnegative diagonal matrix: `1/D_ii` where
/// `D_ii > tol`, else 0.
pub fn pseudo_inverse_diag(d: &HermitianMatrix, tol: f64) -> Result<HermitianMatrix> {
    if !d.is_diagonal(0.0) {
        return Err(Error::contract("pseudo_inverse_diag requires a diagonal matrix"));
    }
    let n = d.dim();
    let mut diag = Vec::with_capacity(n);
    for i in 0..n {
        let v = d.get(i, i).re;
        if v < -tol {
            return Err(Error::contract(format!("diagonal entry {i} is negative: {v}")));
        }
        diag.push(if v > tol { 1.0 / v } else { 0.0 });
    }
    Ok(HermitianMatrix::diagonal(&diag))
}

/// Indexed list of (possibly subnormalized) state vectors of common
/// dimension.
#[derive(Debug, Clone, PartialEq)]
pub struct StateList {
    dim: usize,
    states: Vec<CVec>,
}

impl StateList {
    pub fn new(dim: usize, states: Vec<CVec>) -> Result<Self> {
        if states.is_empty() {
            return Err(Error::contract("a state list needs at least one state"));
        }
        for (i, s) in states.iter().enumerate() {
            if s.len() != dim {
                return Err(Error::Dimension { expected: dim, found: s.len() });
            }
            let norm = s.norm();
            if !norm.is_finite() || norm > 1.0 + 1e-9 {
                return Err(Error::contract(format!("state {} has norm {norm} > 1", i + 1)));
            }
        }
        Ok(StateList { dim, states })
    }

    pub fn from_real(dim: usize, states: &[&[f64]]) -> Result<Self> {
        let vs = states
            .iter()
            .map(|s| CVec::from_iterator(s.len(), s.iter().map(|&x| real(x))))
            .collect();
        Self::new(dim, vs)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.states.len()
    }

    pub fn is_empty(&self) -> bool {
        self.states.is_empty()
    }

    pub fn states(&self) -> &[CVec] {
        &self.states
    }

    pub fn state(&self, i: usize) -> &CVec {
        &self.states[i]
    }

    /// The `d x n` matrix whose columns are the states.
    pub fn as_columns(&self) -> CMat {
        let mut v = CMat::zeros(self.dim, self.len());
        for (j, s) in self.states.iter().enumerate() {
            v.set_column(j, s);
        }
        v
    }

    /// Applies `U` to every state.
    pub fn transformed(&self, u: &CMat) -> Result<Self> {
        if u.ncols() != self.dim {
            return Err(Error::Dimension { expected: self.dim, found: u.ncols() });
        }
        Ok(StateList { dim: u.nrows(), states: self.states.iter().map(|s| u * s).collect() })
    }

    pub fn scaled(&self, factors: &[f64]) -> Result<Self> {
        if factors.len() != self.len() {
            return Err(Error::Dimension { expected: self.len(), found: factors.len() });
        }
        let states = self.states.iter().zip(factors).map(|(s, &f)| s.map(|z| z * f)).collect();
        Self::new(self.dim, states)
    }
}

/// A linear subspace of `C^n` stored as an orthonormal basis.
#[derive(Debug, Clone)]
pub struct Subspace {
    ambient_dim: usize,
    basis: Vec<CVec>,
}

/// Columns with residual norm below this are treated as linearly dependent.
const ORTHO_DROP_TOL: f64 = 1e-9;

impl Subspace {
    pub fn zero(ambient_dim: usize) -> Self {
        Subspace { ambient_dim, basis: Vec::new() }
    }

    pub fn full(ambient_dim: usize) -> Self {
        let basis = (0..ambient_dim)
            .map(|i| CVec::from_fn(ambient_dim, |j, _| if i == j { real(1.0) } else { real(0.0) }))
            .collect();
        Subspace { ambient_dim, basis }
    }

    /// Span of arbitrary vectors, orthonormalized by two passes of modified
    /// Gram-Schmidt; dependent vectors are dropped.
    pub fn span(ambient_dim: usize, vectors: &[CVec]) -> Result<Self> {
        let mut basis: Vec<CVec> = Vec::new();
        for v in vectors {
            if v.len() != ambient_dim {
                return Err(Error::Dimension { expected: ambient_dim, found: v.len() });
            }
            let scale = v.norm();
            if scale == 0.0 {
                continue;
            }
            let mut w = v.clone();
            for _ in 0..2 {
                for b in &basis {
                    let proj = b.dotc(&w);
                    w -= b * proj;
                }
            }
            let norm = w.norm();
            if norm > ORTHO_DROP_TOL * scale.max(1.0) {
                basis.push(w / real(norm));
            }
        }
        Ok(Subspace { ambient_dim, basis })
    }

    pub fn from_real_vectors(ambient_dim: usize, vectors: &[&[f64]]) -> Result<Self> {
        let vs: Vec<CVec> = vectors
            .iter()
            .map(|v| CVec::from_iterator(v.len(), v.iter().map(|&x| real(x))))
            .collect();
        Self::span(ambient_dim, &vs)
    }

    pub fn ambient_dim(&self) -> usize {
        self.ambient_dim
    }

    pub fn dim(&self) -> usize {
        self.basis.len()
    }

    pub fn basis(&self) -> &[CVec] {
        &self.basis
    }

    /// The `n x dim` matrix with the basis as columns.
    pub fn basis_matrix(&self) -> CMat {
        let mut b = CMat::zeros(self.ambient_dim, self.dim());
        for (j, v) in self.basis.iter().enumerate() {
            b.set_column(j, v);
        }
        b
    }

    pub fn projection(&self) -> HermitianMatrix {
        let b = self.basis_matrix();
        HermitianMatrix::symmetrized(&b * b.adjoint())
    }

    /// Coordinates on which every vector of the subspace vanishes.
    pub fn zero_coordinates(&self, tol: f64) -> Vec<usize> {
        (0..self.ambient_dim)
            .filter(|&i| self.basis.iter().map(|b| b[i].norm_sqr()).sum::<f64>().sqrt() <= tol)
            .collect()
    }

    /// Coordinates on which some vector of the subspace is nonzero.
    pub fn support(&self, tol: f64) -> Vec<usize> {
        let zeros = self.zero_coordinates(tol);
        (0..self.ambient_dim).filter(|i| !zeros.contains(i)).collect()
    }

    /// `self ∩ {v : v(i) = 0}`.
    pub fn intersect_coordinate_hyperplane(&self, i: usize) -> Self {
        let r = self.dim();
        if r == 0 {
            return self.clone();
        }
        // coefficient vectors c with (B c)_i = 0, i.e. c orthogonal to conj(B[i, :])
        let u = CVec::from_fn(r, |a, _| self.basis[a][i].conj());
        let unorm = u.norm();
        if unorm <= ORTHO_DROP_TOL {
            return self.clone();
        }
        let mut seeds = vec![u / real(unorm)];
        for a in 0..r {
            seeds.push(CVec::from_fn(r, |b, _| if a == b { real(1.0) } else { real(0.0) }));
        }
        let coeff_space = Subspace::span(r, &seeds).expect("consistent dimensions");
        let b = self.basis_matrix();
        let mut vectors: Vec<CVec> = coeff_space.basis[1..].iter().map(|cv| &b * cv).collect();
        for v in &mut vectors {
            v[i] = real(0.0);
        }
        Subspace::span(self.ambient_dim, &vectors).expect("consistent dimensions")
    }

    /// Frobenius distance between orthogonal projections.
    pub fn projection_distance(&self, other: &Subspace) -> f64 {
        (self.projection().as_matrix() - other.projection().as_matrix()).norm()
    }

    /// Whether every basis vector of `self` lies in `other` within `tol`.
    pub fn is_contained_in(&self, other: &Subspace, tol: f64) -> bool {
        let p = other.projection();
        self.basis.iter().all(|v| (p.as_matrix() * v - v).norm() <= tol)
    }
}

/// Range of a PSD (or Hermitian) matrix: eigenvectors with eigenvalue above
/// `rel_tol * max(λ_max, 0)`.
pub fn range_subspace(m: &HermitianMatrix, rel_tol: f64) -> Result<Subspace> {
    let e = eig_hermitian(m)?;
    let cutoff = rel_tol * e.max().max(0.0);
    let vectors: Vec<CVec> = e
        .values
        .iter()
        .zip(&e.vectors)
        .filter(|(&l, _)| l > cutoff && l > 0.0)
        .map(|(_, v)| v.clone())
        .collect();
    Subspace::span(m.dim(), &vectors)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn trine_gram() -> HermitianMatrix {
        HermitianMatrix::from_rows(&[&[1.0, -0.5, -0.5], &[-0.5, 1.0, -0.5], &[-0.5, -0.5, 1.0]])
            .unwrap()
    }

    #[test]
    fn rejects_asymmetric_input() {
        let m = CMat::from_row_slice(2, 2, &[real(1.0), real(2.0), real(0.0), real(1.0)]);
        assert!(matches!(HermitianMatrix::new(m), Err(Error::NotHermitian { .. })));
        let tiny = CMat::from_row_slice(2, 2, &[real(1.0), real(1e-12), real(0.0), real(1.0)]);
        let h = HermitianMatrix::new(tiny).unwrap();
        assert_eq!(h.get(0, 1), h.get(1, 0).conj());
    }

    #[test]
    fn rejects_non_square_and_empty() {
        assert!(matches!(HermitianMatrix::new(CMat::zeros(2, 3)), Err(Error::NotSquare { .. })));
        assert!(matches!(HermitianMatrix::new(CMat::zeros(0, 0)), Err(Error::EmptyMatrix)));
    }

    #[test]
    fn eigenvalues_of_small_matrices() {
        assert_eq!(eigenvalues(&HermitianMatrix::identity(2)).unwrap(), vec![1.0, 1.0]);
        let swap = HermitianMatrix::from_rows(&[&[0.0, 1.0], &[1.0, 0.0]]).unwrap();
        let ev = eigenvalues(&swap).unwrap();
        assert_abs_diff_eq!(ev[0], 1.0, epsilon = 1e-12);
        assert_abs_diff_eq!(ev[1], -1.0, epsilon = 1e-12);
        let c3 = HermitianMatrix::from_rows(&[&[0.0, 1.0, 1.0], &[1.0, 0.0, 1.0], &[1.0, 1.0, 0.0]])
            .unwrap();
        let ev = eigenvalues(&c3).unwrap();
        for (got, want) in ev.iter().zip([2.0, -1.0, -1.0]) {
            assert_abs_diff_eq!(*got, want, epsilon = 1e-12);
        }
    }

    #[test]
    fn psd_checks() {
        assert!(is_psd(&HermitianMatrix::identity(3), 0.0).unwrap());
        let indefinite = HermitianMatrix::from_rows(&[&[1.0, 2.0], &[2.0, 1.0]]).unwrap();
        assert!(!is_psd(&indefinite, 1e-9).unwrap());
        assert!(is_psd(&HermitianMatrix::zeros(3), 0.0).unwrap());
    }

    #[test]
    fn gram_factorize_identity_and_trine() {
        let id = gram_factorize(&HermitianMatrix::identity(3), PIVOT_TOL).unwrap();
        assert_eq!(id.dim(), 3);
        for i in 0..3 {
            for j in 0..3 {
                let want = if i == j { 1.0 } else { 0.0 };
                assert_abs_diff_eq!(id.state(i).dotc(id.state(j)).re, want, epsilon = 1e-14);
            }
        }
        let t = gram_factorize(&trine_gram(), PIVOT_TOL).unwrap();
        assert_eq!(t.dim(), 2);
        for i in 0..3 {
            assert_abs_diff_eq!(t.state(i).norm(), 1.0, epsilon = 1e-12);
            for j in 0..3 {
                if i != j {
                    let z = t.state(i).dotc(t.state(j));
                    assert_abs_diff_eq!(z.re, -0.5, epsilon = 1e-12);
                    assert_abs_diff_eq!(z.im, 0.0, epsilon = 1e-12);
                }
            }
        }
    }

    #[test]
    fn gram_factorize_rank_one() {
        let ones = HermitianMatrix::from_real(4, &[1.0; 16]).unwrap();
        let f = gram_factorize(&ones, PIVOT_TOL).unwrap();
        assert_eq!(f.dim(), 1);
        for s in f.states() {
            assert_abs_diff_eq!(s[0].norm(), 1.0, epsilon = 1e-12);
        }
    }

    #[test]
    fn gram_factorize_rejects_indefinite() {
        let indefinite = HermitianMatrix::from_rows(&[&[1.0, 2.0], &[2.0, 1.0]]).unwrap();
        match gram_factorize(&indefinite, PIVOT_TOL) {
            Err(Error::NotPsd { min_eigenvalue }) => assert_abs_diff_eq!(min_eigenvalue, -1.0, epsilon = 1e-12),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn pseudo_inverse_of_diagonals() {
        let p = pseudo_inverse_diag(&HermitianMatrix::diagonal(&[2.0, 0.0]), 1e-12).unwrap();
        assert_eq!(p, HermitianMatrix::diagonal(&[0.5, 0.0]));
        let id = pseudo_inverse_diag(&HermitianMatrix::identity(3), 1e-12).unwrap();
        assert_eq!(id, HermitianMatrix::identity(3));
        let p = pseudo_inverse_diag(&HermitianMatrix::diagonal(&[1.0, 1e-15]), 1e-12).unwrap();
        assert_eq!(p, HermitianMatrix::diagonal(&[1.0, 0.0]));
        assert!(pseudo_inverse_diag(&trine_gram(), 1e-12).is_err());
    }

    #[test]
    fn subspace_intersection_and_support() {
        let s = Subspace::full(3);
        let t = s.intersect_coordinate_hyperplane(1);
        assert_eq!(t.dim(), 2);
        assert_eq!(t.zero_coordinates(1e-9), vec![1]);
        let u = t.intersect_coordinate_hyperplane(1);
        assert_eq!(u.dim(), 2);
        let line = Subspace::from_real_vectors(3, &[&[1.0, 1.0, 0.0]]).unwrap();
        assert_eq!(line.intersect_coordinate_hyperplane(0).dim(), 0);
        assert_eq!(line.support(1e-9), vec![0, 1]);
        assert!(line.is_contained_in(&s, 1e-12));
    }
}
