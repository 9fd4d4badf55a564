//! Membership, distance, decomposition and linear optimization over
//!
//! ```text
//!   I_k = { X : X = Σ v_i v_i*, every v_i has at most k nonzero entries, Tr X ≤ 1 }
//! ```
//!
//! Two decision paths exist. The subset path enumerates every k-subset `S`
//! and looks for PSD blocks `W_S` supported on `S x S` summing to `X`. The
//! low-rank path intersects `range(X)` with coordinate hyperplanes until only
//! vectors with at most k nonzeros survive, then looks for PSD matrices living
//! on those subspaces. Both reduce to feasibility programs for
//! [`conic::solve_feasibility`](crate::conic::solve_feasibility).

use serde::{Deserialize, Serialize};

use crate::conic::{self, ConicProgram, SolveStatus, SparseHerm};
use crate::error::{Error, Result};
use crate::io::{self, Entry, MatrixFile};
use crate::matrix::{
    self, c, eig_hermitian, lambda_max, lambda_min, range_subspace, real, CMat, CVec,
    HermitianMatrix, Subspace, C64,
};
use crate::subsets::{self, binomial, check_cap, k_subsets, subsets_up_to};

/// Relative eigenvalue cutoff used to detect `range(X)` on the low-rank path.
pub const RANK_TOL: f64 = 1e-9;
/// Feasibility precision for decompositions used as membership witnesses.
pub const WITNESS_EPS: f64 = 1e-9;
/// Subspaces whose projections differ by less than this are the same.
pub const DEDUP_TOL: f64 = 1e-8;
/// Row norm below which a subspace is taken to vanish on a coordinate.
const ZERO_COORD_TOL: f64 = 1e-9;

/// Which membership algorithm to run for a given k.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Method {
    /// Subset enumeration unless `binomial(n, k)` exceeds the cap.
    Auto,
    Subset,
    LowRank,
}

#[derive(Debug, Clone)]
pub struct Config {
    pub cap: u128,
    pub rank_tol: f64,
    pub method: Method,
}

impl Default for Config {
    fn default() -> Self {
        Config { cap: subsets::DEFAULT_CAP, rank_tol: RANK_TOL, method: Method::Auto }
    }
}

/// One PSD summand supported on `support x support` (0-based indices).
#[derive(Debug, Clone)]
pub struct Term {
    pub support: Vec<usize>,
    pub matrix: HermitianMatrix,
}

#[derive(Debug, Clone)]
pub struct IncoherentDecomposition {
    pub n: usize,
    pub k: usize,
    pub terms: Vec<Term>,
}

impl IncoherentDecomposition {
    pub fn sum(&self) -> HermitianMatrix {
        let mut acc = CMat::zeros(self.n, self.n);
        for t in &self.terms {
            acc += t.matrix.as_matrix();
        }
        HermitianMatrix::symmetrized(acc)
    }

    /// Frobenius norm of `x - Σ terms`.
    pub fn residual(&self, x: &HermitianMatrix) -> f64 {
        (x.as_matrix() - self.sum().as_matrix()).norm()
    }

    fn scaled(mut self, s: f64) -> Self {
        for t in &mut self.terms {
            t.matrix = t.matrix.scale(s);
        }
        self
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(&DecompositionFile::from(self)).expect("serializable")
    }

    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str::<DecompositionFile>(text)?.try_into()
    }
}

#[derive(Debug, Serialize, Deserialize)]
struct TermFile {
    support: Vec<usize>,
    matrix: MatrixFile,
}

#[derive(Debug, Serialize, Deserialize)]
struct DecompositionFile {
    n: usize,
    k: usize,
    terms: Vec<TermFile>,
}

impl From<&IncoherentDecomposition> for DecompositionFile {
    fn from(d: &IncoherentDecomposition) -> Self {
        DecompositionFile {
            n: d.n,
            k: d.k,
            terms: d
                .terms
                .iter()
                .map(|t| TermFile { support: io::to_one_based(&t.support), matrix: MatrixFile::from_matrix(&t.matrix) })
                .collect(),
        }
    }
}

impl TryFrom<DecompositionFile> for IncoherentDecomposition {
    type Error = Error;

    fn try_from(f: DecompositionFile) -> Result<Self> {
        let mut terms = Vec::with_capacity(f.terms.len());
        for t in f.terms {
            let matrix = t.matrix.to_matrix()?;
            if matrix.dim() != f.n {
                return Err(Error::Dimension { expected: f.n, found: matrix.dim() });
            }
            terms.push(Term { support: io::to_zero_based(&t.support, f.n)?, matrix });
        }
        Ok(IncoherentDecomposition { n: f.n, k: f.k, terms })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum Answer {
    Inside,
    Outside,
    Boundary,
}

/// Outcome of weak membership in `I_k` at radius δ.
#[derive(Debug, Clone, Serialize)]
pub struct MembershipVerdict {
    pub answer: Answer,
    /// Frobenius distance estimate to `I_k`.
    pub distance: f64,
    /// Width of the undecided band around δ, in distance units.
    pub precision: f64,
}

/// Result of the projection program.
#[derive(Debug, Clone)]
pub struct DistanceReport {
    /// Estimate of `min ||X - Y||_F^2` over `Y ∈ I_k`.
    pub squared: f64,
    /// Certified lower bound on the squared distance.
    pub squared_lower: f64,
    /// `||X - Y||_F^2` for the explicit witness `Y ∈ I_k`.
    pub squared_upper: f64,
    pub status: SolveStatus,
    /// Set when the reverse-triangle pre-filter answered without solving.
    pub prefiltered: bool,
    pub witness: Option<HermitianMatrix>,
}

impl DistanceReport {
    pub fn distance(&self) -> f64 {
        self.squared.max(0.0).sqrt()
    }
}

/// Three-way answer from a distance report at threshold `d2 = δ²` and
/// squared precision `eps`; `None` when a non-optimal bracket straddles it.
fn classify(rep: &DistanceReport, d2: f64, eps: f64) -> Option<Answer> {
    if rep.status == SolveStatus::Optimal {
        Some(if rep.squared <= d2 - eps {
            Answer::Inside
        } else if rep.squared > d2 + eps {
            Answer::Outside
        } else {
            Answer::Boundary
        })
    } else if rep.squared_upper <= d2 - eps {
        Some(Answer::Inside)
    } else if rep.squared_lower > d2 + eps {
        Some(Answer::Outside)
    } else {
        None
    }
}

pub(crate) fn check_k(n: usize, k: usize) -> Result<()> {
    if k == 0 || k > n {
        return Err(Error::contract(format!("k = {k} must lie in 1..={n}")));
    }
    Ok(())
}

/// Rescales by `1 / max(1, Tr X)`; returns the scaled matrix and the factor.
pub fn normalize_trace(x: &HermitianMatrix) -> (HermitianMatrix, f64) {
    let s = 1.0 / x.trace().max(1.0);
    (x.scale(s), s)
}

pub(crate) fn require_psd(x: &HermitianMatrix, tol: f64) -> Result<()> {
    let min = lambda_min(x)?;
    if min < -tol {
        return Err(Error::NotPsd { min_eigenvalue: min });
    }
    Ok(())
}

/// Real and imaginary coefficient pairs `(re, im)` of the functional
/// `Q ↦ (B Q B*)_pq` on a block with basis matrix `B`.
pub(crate) fn compressed_entry(b: &CMat, p: usize, q: usize) -> (SparseHerm, Option<SparseHerm>) {
    let d = b.ncols();
    let mut k = Vec::new();
    for a in 0..d {
        for bb in 0..d {
            let v = b[(p, a)] * b[(q, bb)].conj();
            if v.norm() > 1e-15 {
                k.push((bb, a, v));
            }
        }
    }
    let re = SparseHerm::real_part_of(d, &k);
    let im = (p != q).then(|| SparseHerm::imag_part_of(d, &k));
    (re, im)
}

/// Equalities `Σ_blocks (compressed block)_pq = X_pq` for the upper triangle.
pub(crate) fn add_sum_equalities(p: &mut ConicProgram, x: &HermitianMatrix, blocks: &[(usize, CMat)]) {
    let n = x.dim();
    for r in 0..n {
        for s in r..n {
            let mut re_coeffs = Vec::new();
            let mut im_coeffs = Vec::new();
            for (blk, basis) in blocks {
                let (re, im) = compressed_entry(basis, r, s);
                if !re.is_empty() {
                    re_coeffs.push((*blk, re));
                }
                if let Some(im) = im {
                    if !im.is_empty() {
                        im_coeffs.push((*blk, im));
                    }
                }
            }
            let z = x.get(r, s);
            p.add_equality(re_coeffs, z.re);
            if r != s {
                p.add_equality(im_coeffs, z.im);
            }
        }
    }
}

/// `n x |S|` selection matrix for a coordinate subset.
fn selector(n: usize, subset: &[usize]) -> CMat {
    let mut b = CMat::zeros(n, subset.len());
    for (a, &i) in subset.iter().enumerate() {
        b[(i, a)] = real(1.0);
    }
    b
}

impl Config {
    pub fn with_cap(cap: u128) -> Self {
        Config { cap, ..Config::default() }
    }

    /// Projection onto `I_k` through the Schur-complement program.
    ///
    /// With `prefilter_delta = Some(δ)` a matrix with `||X||_F > 1 + δ` is
    /// answered by the reverse-triangle bound `||X||_F - 1` without solving.
    pub fn distance_report(
        &self,
        x: &HermitianMatrix,
        k: usize,
        eps: f64,
        prefilter_delta: Option<f64>,
    ) -> Result<DistanceReport> {
        let n = x.dim();
        check_k(n, k)?;
        check_cap(n, k, self.cap)?;
        let fro = x.frobenius_norm();
        if let Some(delta) = prefilter_delta {
            if fro > 1.0 + delta {
                let lb = (fro - 1.0).powi(2);
                return Ok(DistanceReport {
                    squared: lb,
                    squared_lower: lb,
                    squared_upper: fro * fro,
                    status: SolveStatus::Optimal,
                    prefiltered: true,
                    witness: None,
                });
            }
        }
        let delta = prefilter_delta.unwrap_or((fro - 1.0).max(0.0));
        let z_cap = (delta + 2.0).powi(2);
        let subsets = k_subsets(n, k);
        let mut p = ConicProgram::new(n as f64 * z_cap + n as f64 + 2.0);
        // W = [[I, Y - X], [Y - X, Z]] with Y = Σ W_S
        let w = p.add_block(2 * n);
        let ws: Vec<usize> = subsets.iter().map(|_| p.add_block(k)).collect();
        let t = p.add_block(1);
        let s = p.add_block(1);
        let mut z_diag = CMat::zeros(2 * n, 2 * n);
        for i in 0..n {
            z_diag[(n + i, n + i)] = real(1.0);
        }
        let trace_z_coef = SparseHerm::from_dense(&z_diag, 0.0);
        p.add_objective(w, &trace_z_coef.scaled(-1.0));
        for r in 0..n {
            for q in r..n {
                p.add_equality(vec![(w, SparseHerm::entry_re(2 * n, r, q))], if r == q { 1.0 } else { 0.0 });
                if r != q {
                    p.add_equality(vec![(w, SparseHerm::entry_im(2 * n, r, q))], 0.0);
                }
            }
        }
        for r in 0..n {
            for q in 0..n {
                let mut re = vec![(w, SparseHerm::entry_re(2 * n, r, n + q))];
                let mut im = vec![(w, SparseHerm::entry_im(2 * n, r, n + q))];
                for (blk, subset) in ws.iter().zip(&subsets) {
                    if let (Some(a), Some(b)) =
                        (subset.iter().position(|&i| i == r), subset.iter().position(|&i| i == q))
                    {
                        re.push((*blk, SparseHerm::entry_re(k, a, b).scaled(-1.0)));
                        im.push((*blk, SparseHerm::entry_im(k, a, b).scaled(-1.0)));
                    }
                }
                let z = x.get(r, q);
                p.add_equality(re, -z.re);
                p.add_equality(im, -z.im);
            }
        }
        let mut trace_y: Vec<(usize, SparseHerm)> = ws.iter().map(|&b| (b, SparseHerm::identity(k))).collect();
        trace_y.push((t, SparseHerm::identity(1)));
        p.add_equality(trace_y, 1.0);
        p.add_equality(vec![(w, trace_z_coef), (s, SparseHerm::identity(1))], z_cap);

        let sol = conic::solve(&p, eps)?;
        // explicit witness Y = Σ W_S, pulled back into the trace ball
        let mut y = CMat::zeros(n, n);
        for (blk, subset) in ws.iter().zip(&subsets) {
            let wsb = psd_part(&sol.blocks[*blk])?;
            y += HermitianMatrix::embed(&wsb, subset, n).as_matrix();
        }
        let mut witness = HermitianMatrix::symmetrized(y);
        if witness.trace() > 1.0 {
            witness = witness.scale(1.0 / witness.trace());
        }
        let squared_upper = (x.as_matrix() - witness.as_matrix()).norm_squared();
        let squared_lower = (-sol.dual_bound).max(0.0);
        let squared = (-sol.value).max(squared_lower).min(squared_upper);
        Ok(DistanceReport {
            squared,
            squared_lower,
            squared_upper,
            status: sol.status,
            prefiltered: false,
            witness: Some(witness),
        })
    }

    /// Projection program on the distance itself, for radii too small to
    /// resolve in squared units. `||Y - X||_F ≤ t` is encoded by the arrow
    /// block `A = [[t, d*], [d, U]] ⪰ 0` with `Tr U = t` and `d = vec(Y - X)`.
    /// `tol` is the absolute precision on the distance.
    pub fn norm_distance_report(&self, x: &HermitianMatrix, k: usize, tol: f64) -> Result<DistanceReport> {
        let n = x.dim();
        check_k(n, k)?;
        check_cap(n, k, self.cap)?;
        let fro = x.frobenius_norm();
        let subsets = k_subsets(n, k);
        let m = n * n + 1;
        let mut p = ConicProgram::new(2.0 * (fro + 1.0) + 2.0);
        let a = p.add_block(m);
        let ws: Vec<usize> = subsets.iter().map(|_| p.add_block(k)).collect();
        let slack = p.add_block(1);
        p.add_objective(a, &SparseHerm::entry_re(m, 0, 0).scaled(-1.0));
        let mut head = CMat::identity(m, m);
        head[(0, 0)] = real(-1.0);
        p.add_equality(vec![(a, SparseHerm::from_dense(&head, 0.0))], 0.0);
        for r in 0..n {
            for q in 0..n {
                let col = 1 + r * n + q;
                let mut re = vec![(a, SparseHerm::entry_re(m, 0, col))];
                let mut im = vec![(a, SparseHerm::entry_im(m, 0, col))];
                for (blk, subset) in ws.iter().zip(&subsets) {
                    if let (Some(i), Some(j)) =
                        (subset.iter().position(|&v| v == r), subset.iter().position(|&v| v == q))
                    {
                        re.push((*blk, SparseHerm::entry_re(k, i, j).scaled(-1.0)));
                        im.push((*blk, SparseHerm::entry_im(k, i, j).scaled(-1.0)));
                    }
                }
                let z = x.get(r, q);
                p.add_equality(re, -z.re);
                p.add_equality(im, -z.im);
            }
        }
        let mut trace_y: Vec<(usize, SparseHerm)> = ws.iter().map(|&b| (b, SparseHerm::identity(k))).collect();
        trace_y.push((slack, SparseHerm::identity(1)));
        p.add_equality(trace_y, 1.0);

        let sol = conic::solve(&p, tol)?;
        let mut y = CMat::zeros(n, n);
        for (blk, subset) in ws.iter().zip(&subsets) {
            let wsb = psd_part(&sol.blocks[*blk])?;
            y += HermitianMatrix::embed(&wsb, subset, n).as_matrix();
        }
        let mut witness = HermitianMatrix::symmetrized(y);
        if witness.trace() > 1.0 {
            witness = witness.scale(1.0 / witness.trace());
        }
        let upper = (x.as_matrix() - witness.as_matrix()).norm();
        let lower = (-sol.dual_bound).max(0.0).min(upper);
        let estimate = (-sol.value).max(lower).min(upper);
        Ok(DistanceReport {
            squared: estimate * estimate,
            squared_lower: lower * lower,
            squared_upper: upper * upper,
            status: sol.status,
            prefiltered: false,
            witness: Some(witness),
        })
    }

    /// Distance to `I_k` with squared precision `eps`. Falls back to the
    /// distance program when the squared program cannot close its gap,
    /// accepting only a certified bracket of width `eps`.
    pub fn distance_to_ik(&self, x: &HermitianMatrix, k: usize, eps: f64) -> Result<f64> {
        let mut rep = self.distance_report(x, k, eps, None)?;
        if rep.status != SolveStatus::Optimal {
            let fallback = self.norm_distance_report(x, k, eps.sqrt().min(1e-4))?;
            if fallback.squared_upper - fallback.squared_lower <= eps {
                return Ok(fallback.distance());
            }
            if fallback.squared_upper - fallback.squared_lower < rep.squared_upper - rep.squared_lower {
                rep = fallback;
            }
            return Err(Error::Solver {
                status: rep.status,
                detail: format!(
                    "squared distance bracketed in [{:.3e}, {:.3e}]",
                    rep.squared_lower, rep.squared_upper
                ),
            });
        }
        Ok(rep.distance())
    }

    /// Weak membership: solves the projection program to precision δ²/3 on
    /// the squared distance and answers INSIDE below `δ² - δ²/3`, OUTSIDE above
    /// `δ² + δ²/3`, BOUNDARY in between.
    pub fn wmem(&self, x: &HermitianMatrix, k: usize, delta: f64) -> Result<MembershipVerdict> {
        if !(delta > 0.0 && delta.is_finite()) {
            return Err(Error::contract(format!("delta must be positive, got {delta}")));
        }
        let eps = delta * delta / 3.0;
        let precision = eps / delta;
        let d2 = delta * delta;
        if let Some(d) = self.witness_distance(x, k, (delta / 2.0).min(1e-6), (d2 - eps).sqrt()) {
            if d * d <= d2 - eps {
                return Ok(MembershipVerdict { answer: Answer::Inside, distance: d, precision });
            }
        }
        let rep = self.distance_report(x, k, eps, Some(delta))?;
        if rep.prefiltered {
            return Ok(MembershipVerdict { answer: Answer::Outside, distance: rep.distance(), precision });
        }
        if let Some(answer) = classify(&rep, d2, eps) {
            return Ok(MembershipVerdict { answer, distance: rep.distance(), precision });
        }
        // The squared program cannot reach δ²/3 for tiny δ; δ/8 on the
        // distance gives the same resolution on its square.
        let rep = self.norm_distance_report(x, k, delta / 8.0)?;
        let answer = classify(&rep, d2, eps).ok_or_else(|| Error::Solver {
            status: rep.status,
            detail: format!(
                "squared distance bracketed in [{:.3e}, {:.3e}] around delta^2 = {:.3e}",
                rep.squared_lower, rep.squared_upper, d2
            ),
        })?;
        Ok(MembershipVerdict { answer, distance: rep.distance(), precision })
    }

    /// `||X - Y||_F` for an explicit `Y ∈ I_k` obtained from a decomposition
    /// of a PSD `X`, tightening the precision from `eps` by decades until
    /// the witness lies within `radius`.
    fn witness_distance(&self, x: &HermitianMatrix, k: usize, eps: f64, radius: f64) -> Option<f64> {
        if lambda_min(x).ok()? < -matrix::PSD_TOL {
            return None;
        }
        let dist = |d: &IncoherentDecomposition| {
            let mut y = d.sum();
            if y.trace() > 1.0 {
                y = y.scale(1.0 / y.trace());
            }
            (x.as_matrix() - y.as_matrix()).norm()
        };
        let ladder: Vec<f64> =
            std::iter::successors(Some(eps), |e| Some(e / 10.0)).take_while(|&e| e >= 0.99 * WITNESS_EPS.min(eps)).collect();
        let d = self.search_decomposition(x, k, &ladder, |d| dist(d) <= radius).ok()??;
        Some(dist(&d))
    }

    /// Tries the membership paths at each precision in `eps_ladder` and
    /// returns the first decomposition passing `accept`, else the last one
    /// found. A path answering "infeasible" counts as an answer; solver
    /// failures on every attempt are returned as the error. Under [`Method::Auto`] the low-rank path goes first for
    /// rank-deficient `X`, where it keeps an interior and is better
    /// conditioned. Solver precision failures move on to the next attempt.
    pub fn search_decomposition(
        &self,
        x: &HermitianMatrix,
        k: usize,
        eps_ladder: &[f64],
        mut accept: impl FnMut(&IncoherentDecomposition) -> bool,
    ) -> Result<Option<IncoherentDecomposition>> {
        let n = x.dim();
        check_k(n, k)?;
        let paths: Vec<Method> = match self.method {
            Method::Auto => {
                let (xs, _) = normalize_trace(x);
                if matrix::numerical_rank(&xs, self.rank_tol)? < n {
                    vec![Method::LowRank, Method::Subset]
                } else {
                    vec![Method::Subset, Method::LowRank]
                }
            }
            m => vec![m],
        };
        let mut fallback = None;
        let mut answered = false;
        let mut last_err = None;
        for path in paths {
            for &eps in eps_ladder {
                let attempt = match path {
                    Method::LowRank => self.low_rank_membership(x, k, eps),
                    _ => self.subset_decomposition(x, k, eps),
                };
                match attempt {
                    Ok(Some(d)) => {
                        if accept(&d) {
                            return Ok(Some(d));
                        }
                        fallback = Some(d);
                    }
                    Ok(None) => answered = true,
                    Err(e @ (Error::Solver { .. } | Error::CapExceeded { .. })) => {
                        let cap = matches!(e, Error::CapExceeded { .. });
                        last_err = Some(e);
                        if cap {
                            break;
                        }
                    }
                    Err(e) => return Err(e),
                }
            }
        }
        match (fallback, last_err) {
            (None, Some(e)) if !answered => Err(e),
            (f, _) => Ok(f),
        }
    }

    /// Finds PSD blocks `W_S` on every k-subset with `Σ W_S = X`, or `None`
    /// when the smallest total equality residual exceeds `eps`.
    pub fn subset_decomposition(
        &self,
        x: &HermitianMatrix,
        k: usize,
        eps: f64,
    ) -> Result<Option<IncoherentDecomposition>> {
        let n = x.dim();
        check_k(n, k)?;
        check_cap(n, k, self.cap)?;
        require_psd(x, eps)?;
        let (xs, scale) = normalize_trace(x);
        let subsets = k_subsets(n, k);
        let mut p = ConicProgram::new(1.0 + eps);
        let blocks: Vec<(usize, CMat)> = subsets.iter().map(|s| (p.add_block(k), selector(n, s))).collect();
        add_sum_equalities(&mut p, &xs, &blocks);
        let sol = conic::solve_feasibility(&p, eps)?;
        match sol.status {
            SolveStatus::Optimal => {
                let mut terms = Vec::with_capacity(subsets.len());
                for ((blk, _), subset) in blocks.iter().zip(&subsets) {
                    let m = psd_part(&sol.blocks[*blk])?;
                    terms.push(Term { support: subset.clone(), matrix: HermitianMatrix::embed(&m, subset, n) });
                }
                Ok(Some(IncoherentDecomposition { n, k, terms }.scaled(1.0 / scale)))
            }
            SolveStatus::Infeasible => Ok(None),
            status => Err(Error::Solver {
                status,
                detail: format!("subset feasibility residual {:.3e} not resolved against {eps:.1e}", sol.value),
            }),
        }
    }

    /// The subspaces `S_J = range(X) ∩ {v : v(j) = 0 for j ∈ J}` over all
    /// `|J| = n - k`, deduplicated, with zero and non-maximal members removed.
    pub fn low_rank_subspaces(&self, x: &HermitianMatrix, k: usize, tol: f64) -> Result<Vec<Subspace>> {
        let n = x.dim();
        check_k(n, k)?;
        let range = range_subspace(x, tol)?;
        if range.dim() == 0 {
            return Ok(Vec::new());
        }
        let mut level = vec![range];
        for depth in 1..=n - k {
            let mut next: Vec<Subspace> = Vec::new();
            for r in &level {
                let zeros = r.zero_coordinates(ZERO_COORD_TOL);
                if zeros.len() >= depth {
                    push_unique(&mut next, r.clone());
                }
                for i in (0..n).filter(|i| !zeros.contains(i)) {
                    let cut = r.intersect_coordinate_hyperplane(i);
                    if cut.dim() > 0 {
                        push_unique(&mut next, cut);
                    }
                }
            }
            level = next;
        }
        // drop members contained in a strictly larger member
        let maximal: Vec<Subspace> = level
            .iter()
            .enumerate()
            .filter(|(i, s)| {
                !level
                    .iter()
                    .enumerate()
                    .any(|(j, t)| *i != j && t.dim() > s.dim() && s.is_contained_in(t, DEDUP_TOL))
            })
            .map(|(_, s)| s.clone())
            .collect();
        Ok(maximal)
    }

    /// Membership through the low-rank subspace family: looks for PSD `M_j`
    /// with `M_j = Π_j M_j Π_j` and `Σ M_j = X`.
    pub fn low_rank_membership(
        &self,
        x: &HermitianMatrix,
        k: usize,
        eps: f64,
    ) -> Result<Option<IncoherentDecomposition>> {
        let n = x.dim();
        check_k(n, k)?;
        require_psd(x, eps)?;
        let (xs, scale) = normalize_trace(x);
        let spaces = self.low_rank_subspaces(&xs, k, self.rank_tol)?;
        if spaces.is_empty() {
            return Ok((xs.frobenius_norm() <= eps).then(|| IncoherentDecomposition { n, k, terms: Vec::new() }));
        }
        let mut p = ConicProgram::new(1.0 + eps);
        let blocks: Vec<(usize, CMat)> =
            spaces.iter().map(|s| (p.add_block(s.dim()), s.basis_matrix())).collect();
        add_sum_equalities(&mut p, &xs, &blocks);
        let sol = conic::solve_feasibility(&p, eps)?;
        match sol.status {
            SolveStatus::Optimal => {
                let terms = blocks
                    .iter()
                    .zip(&spaces)
                    .map(|((blk, basis), space)| {
                        let q = psd_part(&sol.blocks[*blk])?;
                        Ok(Term {
                            support: space.support(ZERO_COORD_TOL),
                            matrix: HermitianMatrix::symmetrized(basis * q * basis.adjoint()),
                        })
                    })
                    .collect::<Result<Vec<_>>>()?;
                Ok(Some(IncoherentDecomposition { n, k, terms }.scaled(1.0 / scale)))
            }
            SolveStatus::Infeasible => Ok(None),
            status => Err(Error::Solver {
                status,
                detail: format!("low-rank feasibility residual {:.3e} not resolved against {eps:.1e}", sol.value),
            }),
        }
    }

    /// Resolves the membership path for `k` under this configuration.
    pub fn method_for(&self, n: usize, k: usize) -> Method {
        match self.method {
            Method::Auto if binomial(n, k) > self.cap => Method::LowRank,
            Method::Auto => Method::Subset,
            m => m,
        }
    }

    /// k-incoherence decision with a witness, dispatched per [`method_for`](Self::method_for).
    pub fn decompose(&self, x: &HermitianMatrix, k: usize, eps: f64) -> Result<Option<IncoherentDecomposition>> {
        match self.method_for(x.dim(), k) {
            Method::LowRank => self.low_rank_membership(x, k, eps),
            _ => self.subset_decomposition(x, k, eps),
        }
    }

    pub fn is_k_incoherent(&self, x: &HermitianMatrix, k: usize, eps: f64) -> Result<bool> {
        let n = x.dim();
        check_k(n, k)?;
        if k == n {
            require_psd(x, eps)?;
            return Ok(true);
        }
        Ok(self.search_decomposition(x, k, &[eps], |_| true)?.is_some())
    }

    /// Smallest k for which `X` is k-incoherent, by binary search over
    /// `1..=n`.
    pub fn factor_width(&self, x: &HermitianMatrix, eps: f64) -> Result<usize> {
        require_psd(x, eps)?;
        let (mut lo, mut hi) = (1, x.dim());
        while lo < hi {
            let mid = (lo + hi) / 2;
            if self.is_k_incoherent(x, mid, eps)? {
                hi = mid;
            } else {
                lo = mid + 1;
            }
        }
        Ok(lo)
    }

    /// `μ(k, C) = max_{|S| ≤ k} λ_max(C_S)`, floored at 0, by enumeration.
    pub fn mu_oracle(&self, cm: &HermitianMatrix, k: usize) -> Result<MuOracle> {
        let n = cm.dim();
        check_k(n, k)?;
        check_cap(n, k, self.cap)?;
        let mut best = MuOracle { value: 0.0, subset: Vec::new() };
        for s in subsets_up_to(n, k) {
            let v = if s.len() == 1 { cm.get(s[0], s[0]).re } else { lambda_max(&cm.principal_submatrix(&s))? };
            if v > best.value + 1e-12 {
                best = MuOracle { value: v, subset: s };
            }
        }
        Ok(best)
    }

    /// `μ(k, C)` as the program `max ⟨C, Σ W_S⟩` over PSD `W_S` on k-subsets
    /// with `Tr Σ W_S ≤ 1`.
    pub fn mu_sdp(&self, cm: &HermitianMatrix, k: usize, eps: f64) -> Result<f64> {
        let n = cm.dim();
        check_k(n, k)?;
        check_cap(n, k, self.cap)?;
        let mut p = ConicProgram::new(1.0);
        let mut trace = Vec::new();
        for s in k_subsets(n, k) {
            let b = p.add_block(k);
            p.add_objective(b, &SparseHerm::from_dense(cm.principal_submatrix(&s).as_matrix(), 0.0));
            trace.push((b, SparseHerm::identity(k)));
        }
        let t = p.add_block(1);
        trace.push((t, SparseHerm::identity(1)));
        p.add_equality(trace, 1.0);
        let sol = conic::solve(&p, eps)?;
        if sol.status != SolveStatus::Optimal {
            return Err(Error::Solver {
                status: sol.status,
                detail: format!("mu bracketed in [{:.6e}, {:.6e}]", sol.value, sol.dual_bound),
            });
        }
        Ok(sol.value)
    }
}

/// Clips tiny negative eigenvalues of a solver block.
pub(crate) fn psd_part(m: &CMat) -> Result<CMat> {
    let h = HermitianMatrix::symmetrized(m.clone());
    let e = eig_hermitian(&h)?;
    if e.min() >= 0.0 {
        return Ok(h.into_matrix());
    }
    let mut out = CMat::zeros(m.nrows(), m.ncols());
    for (l, v) in e.values.iter().zip(&e.vectors) {
        if *l > 0.0 {
            out += v * v.adjoint() * real(*l);
        }
    }
    Ok(out)
}

fn push_unique(list: &mut Vec<Subspace>, s: Subspace) {
    if !list.iter().any(|t| t.dim() == s.dim() && t.projection_distance(&s) <= DEDUP_TOL) {
        list.push(s);
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct MuOracle {
    pub value: f64,
    /// Maximizing subset (0-based); empty when the zero matrix is optimal.
    pub subset: Vec<usize>,
}

pub fn distance_to_ik(x: &HermitianMatrix, k: usize, eps: f64) -> Result<f64> {
    Config::default().distance_to_ik(x, k, eps)
}

pub fn wmem(x: &HermitianMatrix, k: usize, delta: f64) -> Result<MembershipVerdict> {
    Config::default().wmem(x, k, delta)
}

pub fn subset_decomposition(x: &HermitianMatrix, k: usize, eps: f64) -> Result<Option<IncoherentDecomposition>> {
    Config::default().subset_decomposition(x, k, eps)
}

pub fn low_rank_subspaces(x: &HermitianMatrix, k: usize, tol: f64) -> Result<Vec<Subspace>> {
    Config::default().low_rank_subspaces(x, k, tol)
}

pub fn low_rank_membership(x: &HermitianMatrix, k: usize, eps: f64) -> Result<Option<IncoherentDecomposition>> {
    Config::default().low_rank_membership(x, k, eps)
}

pub fn factor_width(x: &HermitianMatrix, eps: f64) -> Result<usize> {
    Config::default().factor_width(x, eps)
}

pub fn mu_oracle(cm: &HermitianMatrix, k: usize) -> Result<MuOracle> {
    Config::default().mu_oracle(cm, k)
}

pub fn mu_sdp(cm: &HermitianMatrix, k: usize, eps: f64) -> Result<f64> {
    Config::default().mu_sdp(cm, k, eps)
}

/// Sufficient spectral test for 2-incoherence: `Σ λ_j² ≤ (Tr M)² / (n - 1)`.
/// `false` is inconclusive.
pub fn spectral_2_incoherent(m: &HermitianMatrix) -> Result<bool> {
    let n = m.dim();
    if n < 2 {
        return Err(Error::contract("the spectral 2-incoherence test needs n >= 2"));
    }
    let ev = matrix::eigenvalues(m)?;
    if *ev.last().expect("n >= 2") < -matrix::PSD_TOL {
        return Ok(false);
    }
    let sum_sq: f64 = ev.iter().map(|l| l * l).sum();
    let tr: f64 = ev.iter().sum();
    Ok(sum_sq <= tr * tr / (n as f64 - 1.0))
}

/// `D_x = (1 - δ/n)(x I/n + (1 - x) u u*)` with `δ = x/(2n)`, a point at
/// least δ inside `I_k`.
pub fn interior_point_instance(u: &CVec, x: f64, n: usize, k: usize) -> Result<HermitianMatrix> {
    if u.len() != n {
        return Err(Error::Dimension { expected: n, found: u.len() });
    }
    if (u.norm() - 1.0).abs() > 1e-10 {
        return Err(Error::contract(format!("u must be a unit vector, has norm {}", u.norm())));
    }
    let support = u.iter().filter(|z| z.norm() > 0.0).count();
    if support > k {
        return Err(Error::contract(format!("u has {support} nonzero entries, more than k = {k}")));
    }
    if !(0.0..=1.0).contains(&x) {
        return Err(Error::contract(format!("x = {x} must lie in [0, 1]")));
    }
    let nf = n as f64;
    let delta = x / (2.0 * nf);
    let mixed = CMat::identity(n, n) * real(x / nf) + u * u.adjoint() * real(1.0 - x);
    Ok(HermitianMatrix::symmetrized(mixed * real(1.0 - delta / nf)))
}

/// The radius δ for which [`interior_point_instance`] is δ-deep.
pub fn interior_point_depth(x: f64, n: usize) -> f64 {
    x / (2.0 * n as f64)
}

/// A short membership proof: `X = Σ v_i v_i*` with every `v_i` supported on
/// at most k coordinates.
#[derive(Debug, Clone, PartialEq)]
pub struct Certificate {
    pub n: usize,
    pub k: usize,
    pub vectors: Vec<CVec>,
}

#[derive(Debug, Serialize, Deserialize)]
struct CertificateFile {
    n: usize,
    k: usize,
    vectors: Vec<Vec<Entry>>,
}

impl Certificate {
    pub fn to_json(&self) -> String {
        let f = CertificateFile { n: self.n, k: self.k, vectors: self.vectors.iter().map(io::vector_entries).collect() };
        serde_json::to_string(&f).expect("serializable")
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let f: CertificateFile = serde_json::from_str(text)?;
        let vectors: Vec<CVec> = f.vectors.iter().map(|v| io::entries_vector(v)).collect();
        if let Some(v) = vectors.iter().find(|v| v.len() != f.n) {
            return Err(Error::Dimension { expected: f.n, found: v.len() });
        }
        Ok(Certificate { n: f.n, k: f.k, vectors })
    }

    pub fn sum(&self) -> HermitianMatrix {
        let mut acc = CMat::zeros(self.n, self.n);
        for v in &self.vectors {
            acc += v * v.adjoint();
        }
        HermitianMatrix::symmetrized(acc)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Clause {
    Dimension,
    Count,
    Support,
    Sum,
    Trace,
}

#[derive(Debug, Clone, Serialize)]
pub struct CertificateCheck {
    pub valid: bool,
    pub failed: Option<Clause>,
    pub detail: String,
}

impl CertificateCheck {
    fn fail(clause: Clause, detail: String) -> Self {
        CertificateCheck { valid: false, failed: Some(clause), detail }
    }
}

pub fn verify_certificate(x: &HermitianMatrix, cert: &Certificate, tol: f64) -> CertificateCheck {
    let n = x.dim();
    if cert.n != n || cert.vectors.iter().any(|v| v.len() != n) {
        return CertificateCheck::fail(Clause::Dimension, format!("matrix is {n}x{n}, certificate has n = {}", cert.n));
    }
    let limit = n * n + 1;
    if cert.vectors.len() > limit {
        return CertificateCheck::fail(Clause::Count, format!("{} vectors exceed n^2 + 1 = {limit}", cert.vectors.len()));
    }
    for (i, v) in cert.vectors.iter().enumerate() {
        let nnz = v.iter().filter(|z| z.norm() > tol).count();
        if nnz > cert.k {
            return CertificateCheck::fail(
                Clause::Support,
                format!("vector {} has {nnz} nonzero entries, more than k = {}", i + 1, cert.k),
            );
        }
    }
    let residual = (x.as_matrix() - cert.sum().as_matrix()).norm();
    let fro = x.frobenius_norm();
    if residual > tol * (1.0 + fro) {
        return CertificateCheck::fail(
            Clause::Sum,
            format!("||X - Σ v v*||_F = {residual:.3e} exceeds {:.3e}", tol * (1.0 + fro)),
        );
    }
    let tr = x.trace();
    if tr > 1.0 + tol {
        return CertificateCheck::fail(Clause::Trace, format!("Tr X = {tr} exceeds 1"));
    }
    CertificateCheck { valid: true, failed: None, detail: format!("{} vectors, residual {residual:.3e}", cert.vectors.len()) }
}

/// Real coordinates of `v v*` in the `n²`-dimensional space of Hermitian
/// matrices.
fn hermitian_coords(v: &CVec) -> Vec<f64> {
    let n = v.len();
    let mut out = Vec::with_capacity(n * n);
    for i in 0..n {
        out.push(v[i].norm_sqr());
        for j in i + 1..n {
            let z: C64 = v[i] * v[j].conj();
            out.push(z.re);
            out.push(z.im);
        }
    }
    out
}

/// Drops rank-one terms along linear dependencies until at most `n² + 1`
/// remain. Each step removes the term with the largest dependency
/// coefficient and rescales the rest; supports only shrink.
pub fn caratheodory_reduce(n: usize, k: usize, vectors: Vec<CVec>) -> Result<Certificate> {
    if let Some(v) = vectors.iter().find(|v| v.len() != n) {
        return Err(Error::Dimension { expected: n, found: v.len() });
    }
    let limit = n * n + 1;
    let mut terms: Vec<CVec> = vectors.into_iter().filter(|v| v.norm() > 0.0).collect();
    while terms.len() > limit {
        let batch = limit;
        let cols: Vec<Vec<f64>> = terms[..batch].iter().map(hermitian_coords).collect();
        let dim = n * n;
        let h = nalgebra::DMatrix::<f64>::from_fn(dim, batch, |r, cidx| cols[cidx][r]);
        let gram = h.transpose() * &h;
        let eig = nalgebra::SymmetricEigen::new(gram);
        let (imin, lmin) = eig
            .eigenvalues
            .iter()
            .enumerate()
            .fold((0, f64::INFINITY), |acc, (i, &l)| if l < acc.1 { (i, l) } else { acc });
        let mut coef: Vec<f64> = eig.eigenvectors.column(imin).iter().copied().collect();
        let scale = cols.iter().map(|c| c.iter().map(|x| x * x).sum::<f64>()).fold(0.0, f64::max);
        if lmin > 1e-10 * scale.max(1e-300) {
            return Err(Error::contract(format!(
                "no linear dependency found among {batch} terms (smallest Gram eigenvalue {lmin:.3e})"
            )));
        }
        let (pivot, big) = coef
            .iter()
            .enumerate()
            .fold((0, 0.0f64), |acc, (i, &c)| if c.abs() > acc.1.abs() { (i, c) } else { acc });
        if big < 0.0 {
            coef.iter_mut().for_each(|c| *c = -*c);
        }
        let theta = 1.0 / coef[pivot];
        let mut next = Vec::with_capacity(terms.len() - 1);
        for (i, v) in terms.into_iter().enumerate() {
            if i == pivot {
                continue;
            }
            if i < batch {
                let w = 1.0 - theta * coef[i];
                if w > 1e-14 {
                    next.push(v * real(w.sqrt()));
                }
            } else {
                next.push(v);
            }
        }
        terms = next;
    }
    Ok(Certificate { n, k, vectors: terms })
}

/// Rank-one expansion of each term followed by [`caratheodory_reduce`];
/// entries of magnitude at most `tol` are zeroed.
pub fn certificate_from_decomposition(d: &IncoherentDecomposition, tol: f64) -> Result<Certificate> {
    let mut vectors = Vec::new();
    for t in &d.terms {
        let e = eig_hermitian(&t.matrix)?;
        let scale = e.max().max(0.0);
        for (l, v) in e.values.iter().zip(&e.vectors) {
            if *l > 1e-14 * scale.max(1e-300) && *l > 0.0 {
                let mut w = v * real(l.sqrt());
                for i in 0..d.n {
                    if !t.support.contains(&i) {
                        w[i] = c(0.0, 0.0);
                    }
                }
                vectors.push(w);
            }
        }
    }
    let mut cert = caratheodory_reduce(d.n, d.k, vectors)?;
    for v in &mut cert.vectors {
        for z in v.iter_mut() {
            if z.norm() <= tol {
                *z = c(0.0, 0.0);
            }
        }
    }
    Ok(cert)
}
