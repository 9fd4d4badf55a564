//! Block semidefinite programs in equality standard form
//!
//! ```text
//!   maximize   Σ_j ⟨C_j, X_j⟩
//!   subject to Σ_j ⟨A_ij, X_j⟩ = b_i     for every equality i
//!              X_j ⪰ 0                   for every block j
//! ```
//!
//! with `⟨A, X⟩ = Re Tr(A X)` over complex Hermitian blocks. Scalar slacks are
//! 1x1 blocks. Inequalities are modelled by the caller with explicit slacks.
//!
//! [`solve`] runs an infeasible-start primal-dual interior-point method
//! (HKM direction, Mehrotra predictor-corrector) from scaled identities, so
//! results are deterministic. On exit it reports a certified additive gap:
//! the dual objective corrected by the dual residual and the caller's
//! `norm_bound` is an upper bound on every feasible primal value, and the gap
//! is measured against it.

use nalgebra::{Cholesky, DMatrix, DVector};
use serde::Serialize;

use crate::error::{Error, Result};
use crate::matrix::{c, real, CMat, C64};

const MAX_ITERATIONS: usize = 150;
/// Relative equality residual required at optimality.
const FEAS_TOL: f64 = 1e-9;
/// Relative equality residual still accepted when progress stalls.
const FEAS_TOL_LOOSE: f64 = 1e-7;
const STEP_FRACTION: f64 = 0.98;

/// Sparse Hermitian coefficient matrix; both triangles are stored.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct SparseHerm {
    dim: usize,
    entries: Vec<(usize, usize, C64)>,
}

impl Serialize for SparseHerm {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        #[derive(Serialize)]
        struct Repr<'a> {
            dim: usize,
            entries: &'a [[f64; 4]],
        }
        let flat: Vec<[f64; 4]> =
            self.entries.iter().map(|&(i, j, z)| [i as f64, j as f64, z.re, z.im]).collect();
        Repr { dim: self.dim, entries: &flat }.serialize(s)
    }
}

impl SparseHerm {
    pub fn zeros(dim: usize) -> Self {
        SparseHerm { dim, entries: Vec::new() }
    }

    pub fn identity(dim: usize) -> Self {
        SparseHerm { dim, entries: (0..dim).map(|i| (i, i, real(1.0))).collect() }
    }

    /// Hermitian part of a dense matrix, dropping entries below `tol`.
    pub fn from_dense(m: &CMat, tol: f64) -> Self {
        let dim = m.nrows();
        let mut entries = Vec::new();
        for i in 0..dim {
            for j in 0..dim {
                let v = (m[(i, j)] + m[(j, i)].conj()) * 0.5;
                if v.norm() > tol {
                    entries.push((i, j, v));
                }
            }
        }
        SparseHerm { dim, entries }
    }

    /// Coefficient `A` with `⟨A, X⟩ = Re Tr(K X)` where `K = Σ v E_ab`.
    pub fn real_part_of(dim: usize, k: &[(usize, usize, C64)]) -> Self {
        let mut out = SparseHerm::zeros(dim);
        for &(a, b, v) in k {
            out.push(a, b, v * 0.5);
            out.push(b, a, v.conj() * 0.5);
        }
        out.compact();
        out
    }

    /// Coefficient `A` with `⟨A, X⟩ = Im Tr(K X)`.
    pub fn imag_part_of(dim: usize, k: &[(usize, usize, C64)]) -> Self {
        let mut out = SparseHerm::zeros(dim);
        for &(a, b, v) in k {
            out.push(a, b, v * c(0.0, -0.5));
            out.push(b, a, v.conj() * c(0.0, 0.5));
        }
        out.compact();
        out
    }

    /// `⟨A, X⟩ = Re X_pq`.
    pub fn entry_re(dim: usize, p: usize, q: usize) -> Self {
        Self::real_part_of(dim, &[(q, p, real(1.0))])
    }

    /// `⟨A, X⟩ = Im X_pq`.
    pub fn entry_im(dim: usize, p: usize, q: usize) -> Self {
        Self::imag_part_of(dim, &[(q, p, real(1.0))])
    }

    fn push(&mut self, i: usize, j: usize, v: C64) {
        self.entries.push((i, j, v));
    }

    fn compact(&mut self) {
        self.entries.sort_by_key(|&(i, j, _)| (i, j));
        let mut merged: Vec<(usize, usize, C64)> = Vec::with_capacity(self.entries.len());
        for &(i, j, v) in &self.entries {
            match merged.last_mut() {
                Some(last) if last.0 == i && last.1 == j => last.2 += v,
                _ => merged.push((i, j, v)),
            }
        }
        merged.retain(|e| e.2.norm() > 0.0);
        self.entries = merged;
    }

    pub fn scaled(&self, s: f64) -> Self {
        SparseHerm { dim: self.dim, entries: self.entries.iter().map(|&(i, j, v)| (i, j, v * s)).collect() }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn entries(&self) -> &[(usize, usize, C64)] {
        &self.entries
    }

    /// `Re Tr(A X)`.
    pub fn inner(&self, x: &CMat) -> f64 {
        self.entries.iter().map(|&(a, b, v)| (v * x[(b, a)]).re).sum()
    }

    pub fn add_scaled_into(&self, s: f64, out: &mut CMat) {
        for &(a, b, v) in &self.entries {
            out[(a, b)] += v * s;
        }
    }

    pub fn to_dense(&self) -> CMat {
        let mut m = CMat::zeros(self.dim, self.dim);
        self.add_scaled_into(1.0, &mut m);
        m
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.to_dense().norm()
    }

    fn is_hermitian(&self) -> bool {
        let d = self.to_dense();
        (&d - d.adjoint()).norm() <= 1e-12 * (1.0 + d.norm())
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct Equality {
    /// `(block index, coefficient)` pairs.
    pub coeffs: Vec<(usize, SparseHerm)>,
    pub rhs: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct ConicProgram {
    blocks: Vec<usize>,
    objective: Vec<SparseHerm>,
    equalities: Vec<Equality>,
    norm_bound: f64,
}

impl ConicProgram {
    pub fn new(norm_bound: f64) -> Self {
        ConicProgram { blocks: Vec::new(), objective: Vec::new(), equalities: Vec::new(), norm_bound }
    }

    /// Adds a PSD block of the given size and returns its index.
    pub fn add_block(&mut self, dim: usize) -> usize {
        self.blocks.push(dim);
        self.objective.push(SparseHerm::zeros(dim));
        self.blocks.len() - 1
    }

    /// Adds `coef` to the objective of `block`.
    pub fn add_objective(&mut self, block: usize, coef: &SparseHerm) {
        let obj = &mut self.objective[block];
        obj.entries.extend_from_slice(&coef.entries);
        obj.compact();
    }

    pub fn add_equality(&mut self, coeffs: Vec<(usize, SparseHerm)>, rhs: f64) {
        self.equalities.push(Equality { coeffs, rhs });
    }

    pub fn blocks(&self) -> &[usize] {
        &self.blocks
    }

    pub fn objective(&self) -> &[SparseHerm] {
        &self.objective
    }

    pub fn equalities(&self) -> &[Equality] {
        &self.equalities
    }

    pub fn norm_bound(&self) -> f64 {
        self.norm_bound
    }

    pub fn set_norm_bound(&mut self, r: f64) {
        self.norm_bound = r;
    }

    /// The same program with the objective replaced by zero.
    pub fn without_objective(&self) -> Self {
        let mut p = self.clone();
        for (o, &d) in p.objective.iter_mut().zip(&self.blocks) {
            *o = SparseHerm::zeros(d);
        }
        p
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.norm_bound > 0.0 && self.norm_bound.is_finite()) {
            return Err(Error::contract(format!("norm_bound must be positive and finite, got {}", self.norm_bound)));
        }
        if self.blocks.is_empty() || self.blocks.contains(&0) {
            return Err(Error::contract("every program needs at least one block of positive size"));
        }
        for (j, (o, &d)) in self.objective.iter().zip(&self.blocks).enumerate() {
            if o.dim != d || !o.is_hermitian() {
                return Err(Error::contract(format!("objective of block {j} is malformed")));
            }
        }
        for (i, eq) in self.equalities.iter().enumerate() {
            if !eq.rhs.is_finite() {
                return Err(Error::contract(format!("equality {i} has a non-finite right-hand side")));
            }
            for (j, a) in &eq.coeffs {
                let d = *self.blocks.get(*j).ok_or_else(|| {
                    Error::contract(format!("equality {i} references missing block {j}"))
                })?;
                if a.dim != d
                    || a.entries.iter().any(|&(p, q, _)| p >= d || q >= d)
                    || !a.is_hermitian()
                {
                    return Err(Error::contract(format!("equality {i}, block {j}: malformed coefficient")));
                }
            }
        }
        Ok(())
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("serializable")
    }

    /// `Σ_j ⟨C_j, X_j⟩`.
    pub fn objective_value(&self, blocks: &[CMat]) -> f64 {
        self.objective.iter().zip(blocks).map(|(cj, x)| cj.inner(x)).sum()
    }

    /// Euclidean norm of `b - A(X)`.
    /// `Σ_i |b_i - ⟨A_i, X⟩|`.
    pub fn equality_residual_l1(&self, blocks: &[CMat]) -> f64 {
        self.equalities
            .iter()
            .map(|eq| (eq.rhs - eq.coeffs.iter().map(|(j, a)| a.inner(&blocks[*j])).sum::<f64>()).abs())
            .sum()
    }

    pub fn equality_residual(&self, blocks: &[CMat]) -> f64 {
        self.equalities
            .iter()
            .map(|eq| {
                let lhs: f64 = eq.coeffs.iter().map(|(j, a)| a.inner(&blocks[*j])).sum();
                (eq.rhs - lhs).powi(2)
            })
            .sum::<f64>()
            .sqrt()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum SolveStatus {
    Optimal,
    Infeasible,
    PrecisionLimit,
}

#[derive(Debug, Clone)]
pub struct ConicSolution {
    pub status: SolveStatus,
    /// Primal objective at the returned point.
    pub value: f64,
    pub blocks: Vec<CMat>,
    /// `value + certified_gap` bounds the optimum from above, up to the
    /// primal residual correction folded into the gap.
    pub certified_gap: f64,
    /// Dual objective corrected for dual infeasibility.
    pub dual_bound: f64,
    pub dual: Vec<f64>,
    /// Euclidean norm of `b - A(X)` at the returned point.
    pub primal_residual: f64,
    pub iterations: usize,
}

/// Solves `p` to additive precision `eps`.
///
/// `PRECISION_LIMIT` is returned (with the best iterate and bounds) when the
/// iteration budget runs out before the gap certificate reaches `eps`; a
/// program with no point satisfying its equalities within `eps` reports
/// `INFEASIBLE`.
pub fn solve(p: &ConicProgram, eps: f64) -> Result<ConicSolution> {
    check_eps(eps)?;
    p.validate()?;
    let sol = InteriorPoint::new(p).run(eps);
    if sol.status == SolveStatus::Optimal {
        return Ok(sol);
    }
    let feas = solve_feasibility(p, eps)?;
    if feas.status == SolveStatus::Infeasible {
        return Ok(ConicSolution { status: SolveStatus::Infeasible, ..sol });
    }
    Ok(sol)
}

/// Finds a point satisfying every equality, by minimizing the total
/// absolute equality residual over the cone.
///
/// `value` of the result is the residual found. The status is `OPTIMAL` when
/// it is at most `eps` and `INFEASIBLE` when the certified lower bound on
/// the residual exceeds `eps`.
pub fn solve_feasibility(p: &ConicProgram, eps: f64) -> Result<ConicSolution> {
    check_eps(eps)?;
    p.validate()?;
    let n_orig = p.blocks.len();
    let mut aux = ConicProgram::new(1.0);
    for &d in &p.blocks {
        aux.add_block(d);
    }
    let mut equalities = Vec::with_capacity(p.equalities.len() + 1);
    for eq in &p.equalities {
        let plus = aux.add_block(1);
        let minus = aux.add_block(1);
        aux.add_objective(plus, &SparseHerm::identity(1).scaled(-1.0));
        aux.add_objective(minus, &SparseHerm::identity(1).scaled(-1.0));
        let mut coeffs = eq.coeffs.clone();
        coeffs.push((plus, SparseHerm::identity(1)));
        coeffs.push((minus, SparseHerm::identity(1).scaled(-1.0)));
        equalities.push(Equality { coeffs, rhs: eq.rhs });
    }
    // Trace cap implied by the operator-norm bound keeps the search compact.
    let total_dim: usize = p.blocks.iter().sum();
    let cap = p.norm_bound * total_dim as f64;
    let slack = aux.add_block(1);
    let mut coeffs: Vec<(usize, SparseHerm)> =
        (0..n_orig).map(|j| (j, SparseHerm::identity(p.blocks[j]))).collect();
    coeffs.push((slack, SparseHerm::identity(1)));
    equalities.push(Equality { coeffs, rhs: cap });
    aux.equalities = equalities;
    let rhs_scale: f64 = p.equalities.iter().map(|e| e.rhs.abs()).fold(1.0, f64::max);
    aux.norm_bound = cap.max(rhs_scale).max(1.0);

    // The L1 violation of the original equalities on an iterate is an
    // honest residual even when the auxiliary gap has not closed.
    let mut score = |x: &[CMat]| p.equality_residual_l1(&x[..n_orig]);
    let witness = Witness { score: &mut score, target: eps * 0.25 };
    let (sol, best) = InteriorPoint::new(&aux).run_scored(eps * 0.25, Some(witness));
    let lower = -(sol.value + sol.certified_gap);
    let (residual, mut blocks) = match best {
        Some((w, x)) if w < -sol.value => (w, x),
        _ => (-sol.value, sol.blocks),
    };
    blocks.truncate(n_orig);
    let primal_residual = p.equality_residual(&blocks);
    let status = if residual <= eps {
        SolveStatus::Optimal
    } else if lower > eps || sol.status == SolveStatus::Optimal {
        SolveStatus::Infeasible
    } else {
        SolveStatus::PrecisionLimit
    };
    Ok(ConicSolution {
        status,
        value: residual.max(0.0),
        blocks,
        certified_gap: sol.certified_gap,
        dual_bound: lower.max(0.0),
        dual: sol.dual[..p.equalities.len()].to_vec(),
        primal_residual,
        iterations: sol.iterations,
    })
}

fn check_eps(eps: f64) -> Result<()> {
    if !(eps > 0.0 && eps.is_finite()) {
        return Err(Error::contract(format!("precision must be positive, got {eps}")));
    }
    Ok(())
}

/// Internal state of one interior-point run. Rows are normalized to unit
/// Frobenius norm and the objective to Frobenius norm at most one; bounds are
/// reported in the caller's units.
struct InteriorPoint<'a> {
    program: &'a ConicProgram,
    dims: Vec<usize>,
    /// `rows[i]`: normalized coefficients of equality `i`.
    rows: Vec<Vec<(usize, SparseHerm)>>,
    b: Vec<f64>,
    row_scale: Vec<f64>,
    cost: Vec<CMat>,
    cost_scale: f64,
    /// `touch[j]`: `(row, coefficient)` pairs acting on block `j`.
    touch: Vec<Vec<(usize, SparseHerm)>>,
}

/// Caller-side quality measure evaluated on every primal iterate.
struct Witness<'f> {
    score: &'f mut dyn FnMut(&[CMat]) -> f64,
    target: f64,
}

struct Iterate {
    x: Vec<CMat>,
    s: Vec<CMat>,
    y: Vec<f64>,
}

struct Measures {
    pobj: f64,
    upper: f64,
    gap: f64,
    primal_residual: f64,
    rel_primal: f64,
    rel_dual: f64,
}

impl<'a> InteriorPoint<'a> {
    fn new(program: &'a ConicProgram) -> Self {
        let dims = program.blocks.clone();
        let mut rows = Vec::with_capacity(program.equalities.len());
        let mut b = Vec::new();
        let mut row_scale = Vec::new();
        for eq in &program.equalities {
            let norm = eq.coeffs.iter().map(|(_, a)| a.frobenius_norm().powi(2)).sum::<f64>().sqrt();
            let s = if norm > 0.0 { 1.0 / norm } else { 1.0 };
            rows.push(eq.coeffs.iter().map(|(j, a)| (*j, a.scaled(s))).collect::<Vec<_>>());
            b.push(eq.rhs * s);
            row_scale.push(s);
        }
        let cost_norm = program.objective.iter().map(|o| o.frobenius_norm().powi(2)).sum::<f64>().sqrt();
        let cost_scale = cost_norm.max(1.0);
        let cost = program.objective.iter().map(|o| o.to_dense().map(|z| z / cost_scale)).collect();
        let mut touch: Vec<Vec<(usize, SparseHerm)>> = vec![Vec::new(); dims.len()];
        for (i, row) in rows.iter().enumerate() {
            for (j, a) in row {
                touch[*j].push((i, a.clone()));
            }
        }
        InteriorPoint { program, dims, rows, b, row_scale, cost, cost_scale, touch }
    }

    fn m(&self) -> usize {
        self.b.len()
    }

    fn initial(&self) -> Iterate {
        let mut x = Vec::new();
        let mut s = Vec::new();
        for (j, &d) in self.dims.iter().enumerate() {
            let df = d as f64;
            let mut xi = 10f64.max(df.sqrt());
            let mut eta = 10f64.max(df.sqrt()).max(self.cost[j].norm());
            for (i, a) in &self.touch[j] {
                let an = a.frobenius_norm();
                xi = xi.max(df * (1.0 + self.b[*i].abs()) / (1.0 + an));
                eta = eta.max(an);
            }
            x.push(CMat::identity(d, d).map(|z| z * xi));
            s.push(CMat::identity(d, d).map(|z| z * eta));
        }
        Iterate { x, s, y: vec![0.0; self.m()] }
    }

    /// `A(X)` for a list of per-block matrices.
    fn apply(&self, blocks: &[CMat]) -> Vec<f64> {
        self.rows.iter().map(|row| row.iter().map(|(j, a)| a.inner(&blocks[*j])).sum()).collect()
    }

    /// `A^*(y)` for block `j`.
    fn adjoint_block(&self, y: &[f64], j: usize) -> CMat {
        let d = self.dims[j];
        let mut out = CMat::zeros(d, d);
        for (i, a) in &self.touch[j] {
            a.add_scaled_into(y[*i], &mut out);
        }
        out
    }

    fn dual_residual(&self, it: &Iterate) -> Vec<CMat> {
        (0..self.dims.len())
            .map(|j| &self.cost[j] - self.adjoint_block(&it.y, j) + &it.s[j])
            .collect()
    }

    fn measures(&self, it: &Iterate) -> Measures {
        let ax = self.apply(&it.x);
        let rp: Vec<f64> = self.b.iter().zip(&ax).map(|(b, a)| b - a).collect();
        let rd = self.dual_residual(it);
        let pobj_s: f64 = self.cost.iter().zip(&it.x).map(|(cj, x)| inner(cj, x)).sum();
        let dobj_s: f64 = self.b.iter().zip(&it.y).map(|(b, y)| b * y).sum();
        let r = self.program.norm_bound;
        // ⟨R_d, X*⟩ ≤ ||R_d||_tr ||X*||_op ≤ sqrt(d) ||R_d||_F R
        let correction: f64 = rd
            .iter()
            .zip(&self.dims)
            .map(|(m, &d)| (d as f64).sqrt() * m.norm())
            .sum::<f64>()
            * r;
        let upper_s = dobj_s + correction;
        // primal residual in the caller's units
        let primal_residual = rp
            .iter()
            .zip(&self.row_scale)
            .map(|(v, s)| (v / s).powi(2))
            .sum::<f64>()
            .sqrt();
        let scaled_rp = rp.iter().map(|v| v * v).sum::<f64>().sqrt();
        let ynorm = it.y.iter().map(|v| v * v).sum::<f64>().sqrt();
        let gap_s = (upper_s - pobj_s).max(0.0) + scaled_rp * (1.0 + ynorm);
        let bnorm = self.b.iter().map(|v| v * v).sum::<f64>().sqrt();
        let cnorm = self.cost.iter().map(|m| m.norm_squared()).sum::<f64>().sqrt();
        let rdnorm = rd.iter().map(|m| m.norm_squared()).sum::<f64>().sqrt();
        Measures {
            pobj: pobj_s * self.cost_scale,
            upper: upper_s * self.cost_scale,
            gap: gap_s * self.cost_scale,
            primal_residual,
            rel_primal: scaled_rp / (1.0 + bnorm),
            rel_dual: rdnorm / (1.0 + cnorm),
        }
    }

    fn run(&self, eps: f64) -> ConicSolution {
        self.run_scored(eps, None).0
    }

    /// Runs the method while tracking the iterate minimizing `score`. Stops
    /// early once that score reaches `target`.
    fn run_scored(&self, eps: f64, mut witness: Option<Witness<'_>>) -> (ConicSolution, Option<(f64, Vec<CMat>)>) {
        let mut best_witness: Option<(f64, Vec<CMat>)> = None;
        let mut it = self.initial();
        let n_total: f64 = self.dims.iter().map(|&d| d as f64).sum();
        let mut best: Option<(f64, Vec<CMat>, Vec<f64>, Measures)> = None;
        let mut iterations = 0;
        let mut converged = false;
        let mut stalls = 0;
        for iter in 0..MAX_ITERATIONS {
            iterations = iter;
            let meas = self.measures(&it);
            let feasible = meas.rel_primal <= FEAS_TOL_LOOSE;
            if feasible {
                let better = best.as_ref().is_none_or(|(g, ..)| meas.gap < *g);
                if better {
                    best = Some((meas.gap, it.x.clone(), it.y.clone(), self.measures(&it)));
                }
            }
            if meas.rel_primal <= FEAS_TOL && meas.rel_dual <= FEAS_TOL && meas.gap <= 0.5 * eps {
                converged = true;
                break;
            }
            if let Some(w) = witness.as_mut() {
                let score = (w.score)(&it.x);
                if best_witness.as_ref().is_none_or(|(b, _)| score < *b) {
                    best_witness = Some((score, it.x.clone()));
                }
                if score <= w.target {
                    break;
                }
            }
            let Some(step) = self.step(&it, n_total) else { break };
            if step.alpha_p.min(step.alpha_d) < 1e-10 {
                stalls += 1;
                if stalls > 3 {
                    break;
                }
            } else {
                stalls = 0;
            }
            it = step.next;
            if !it.y.iter().all(|v| v.is_finite()) {
                break;
            }
        }
        let final_meas = self.measures(&it);
        let (x, y, meas) = if converged {
            (it.x, it.y, final_meas)
        } else {
            match best {
                Some((_, x, y, m)) if m.gap < final_meas.gap || final_meas.rel_primal > FEAS_TOL_LOOSE => (x, y, m),
                _ => (it.x, it.y, final_meas),
            }
        };
        let status = if meas.gap <= eps && meas.rel_primal <= FEAS_TOL_LOOSE {
            SolveStatus::Optimal
        } else {
            SolveStatus::PrecisionLimit
        };
        let dual = y.iter().zip(&self.row_scale).map(|(v, s)| v * s * self.cost_scale).collect();
        let blocks = x.into_iter().map(|m| (&m + m.adjoint()).scale(0.5)).collect();
        let sol = ConicSolution {
            status,
            value: meas.pobj,
            blocks,
            certified_gap: meas.gap,
            dual_bound: meas.upper,
            dual,
            primal_residual: meas.primal_residual,
            iterations,
        };
        (sol, best_witness)
    }

    fn step(&self, it: &Iterate, n_total: f64) -> Option<Step> {
        let nb = self.dims.len();
        let m = self.m();
        let mut s_inv = Vec::with_capacity(nb);
        for s in &it.s {
            s_inv.push(hermitian_inverse(s)?);
        }
        let mu = it.x.iter().zip(&it.s).map(|(x, s)| inner(x, s)).sum::<f64>() / n_total;
        let ax = self.apply(&it.x);
        let rp: Vec<f64> = self.b.iter().zip(&ax).map(|(b, a)| b - a).collect();
        let rd = self.dual_residual(it);

        // Schur complement M_ik = Σ_j Re Tr(A_ij X_j A_kj S_j^{-1})
        let mut schur = DMatrix::<f64>::zeros(m, m);
        for j in 0..nb {
            let x = &it.x[j];
            let t = &s_inv[j];
            let touch = &self.touch[j];
            for (p, (i, ai)) in touch.iter().enumerate() {
                for (k, ak) in touch[p..].iter() {
                    let mut acc = 0.0;
                    for &(a, b, alpha) in &ai.entries {
                        for &(cc, d, beta) in &ak.entries {
                            acc += (alpha * beta * x[(b, cc)] * t[(d, a)]).re;
                        }
                    }
                    schur[(*i, *k)] += acc;
                    if i != k {
                        schur[(*k, *i)] += acc;
                    }
                }
            }
        }
        let solver = SchurSolver::new(schur)?;
        // X R_d S^{-1} - X, shared by predictor and corrector
        let base: Vec<CMat> = (0..nb).map(|j| &it.x[j] * &rd[j] * &s_inv[j] - &it.x[j]).collect();

        let direction = |sigma: f64, corr: Option<&[CMat]>| -> Option<(Vec<CMat>, Vec<CMat>, Vec<f64>)> {
            let target: Vec<CMat> = (0..nb)
                .map(|j| {
                    let mut g = &base[j] + s_inv[j].map(|z| z * (sigma * mu));
                    if let Some(cr) = corr {
                        g += &cr[j];
                    }
                    g
                })
                .collect();
            let at = self.apply(&target);
            let rhs: Vec<f64> = at.iter().zip(&rp).map(|(a, r)| a - r).collect();
            let dy = solver.solve(&rhs)?;
            let mut dx = Vec::with_capacity(nb);
            let mut ds = Vec::with_capacity(nb);
            for j in 0..nb {
                let aty = self.adjoint_block(&dy, j);
                let dsj = &aty - &rd[j];
                // ΔX = σμS^{-1} - X + X R_d S^{-1} + corr - X A^*(Δy) S^{-1}
                let raw = &target[j] - &it.x[j] * &aty * &s_inv[j];
                let dxj = (&raw + raw.adjoint()).scale(0.5);
                dx.push(dxj);
                ds.push(dsj);
            }
            Some((dx, ds, dy))
        };

        // predictor
        let (dx_a, ds_a, _) = direction(0.0, None)?;
        let ap = max_step(&it.x, &dx_a);
        let ad = max_step(&it.s, &ds_a);
        let ap_a = (STEP_FRACTION * ap).min(1.0);
        let ad_a = (STEP_FRACTION * ad).min(1.0);
        let mu_aff = (0..nb)
            .map(|j| inner(&(&it.x[j] + &dx_a[j] * real(ap_a)), &(&it.s[j] + &ds_a[j] * real(ad_a))))
            .sum::<f64>()
            / n_total;
        let sigma = if mu > 0.0 { (mu_aff / mu).clamp(0.0, 1.0).powi(3) } else { 0.0 };
        // second-order correction -ΔX_aff ΔS_aff S^{-1}
        let corr: Vec<CMat> = (0..nb).map(|j| -(&dx_a[j] * &ds_a[j] * &s_inv[j])).collect();
        let (dx, ds, dy) = direction(sigma, Some(&corr))?;
        let alpha_p = (STEP_FRACTION * max_step(&it.x, &dx)).min(1.0);
        let alpha_d = (STEP_FRACTION * max_step(&it.s, &ds)).min(1.0);
        let x = it.x.iter().zip(&dx).map(|(x, d)| x + d * real(alpha_p)).collect();
        let s = it.s.iter().zip(&ds).map(|(s, d)| s + d * real(alpha_d)).collect();
        let y = it.y.iter().zip(&dy).map(|(y, d)| y + alpha_d * d).collect();
        Some(Step { next: Iterate { x, s, y }, alpha_p, alpha_d })
    }
}

struct Step {
    next: Iterate,
    alpha_p: f64,
    alpha_d: f64,
}

/// Cholesky of the Schur complement with escalating diagonal regularization.
struct SchurSolver {
    chol: Cholesky<f64, nalgebra::Dyn>,
}

impl SchurSolver {
    fn new(mut m: DMatrix<f64>) -> Option<Self> {
        let n = m.nrows();
        let scale = (0..n).map(|i| m[(i, i)].abs()).fold(0.0, f64::max).max(1e-300);
        let mut reg = 0.0;
        for _ in 0..8 {
            if let Some(chol) = Cholesky::new(m.clone()) {
                return Some(SchurSolver { chol });
            }
            let next = if reg == 0.0 { 1e-14 * scale } else { reg * 100.0 };
            for i in 0..n {
                m[(i, i)] += next - reg;
            }
            reg = next;
        }
        None
    }

    fn solve(&self, rhs: &[f64]) -> Option<Vec<f64>> {
        let v = self.chol.solve(&DVector::from_column_slice(rhs));
        if v.iter().all(|z| z.is_finite()) {
            Some(v.iter().copied().collect())
        } else {
            None
        }
    }
}

fn inner(a: &CMat, b: &CMat) -> f64 {
    // Re Tr(A B) for Hermitian A, B
    a.iter().zip(b.iter()).map(|(x, y)| (x * y.conj()).re).sum()
}

fn hermitian_inverse(m: &CMat) -> Option<CMat> {
    if m.nrows() == 1 {
        let v = m[(0, 0)].re;
        return (v > 0.0).then(|| CMat::from_element(1, 1, real(1.0 / v)));
    }
    let inv = Cholesky::new(m.clone())?.inverse();
    Some((&inv + inv.adjoint()).scale(0.5))
}

/// Largest `α` with `X + α ΔX ⪰ 0` over all blocks (may be infinite).
fn max_step(x: &[CMat], dx: &[CMat]) -> f64 {
    let mut alpha = f64::INFINITY;
    for (xj, dj) in x.iter().zip(dx) {
        let a = if xj.nrows() == 1 {
            let (v, d) = (xj[(0, 0)].re, dj[(0, 0)].re);
            if d < 0.0 { -v / d } else { f64::INFINITY }
        } else {
            block_step(xj, dj)
        };
        alpha = alpha.min(a);
    }
    alpha
}

fn block_step(x: &CMat, dx: &CMat) -> f64 {
    match Cholesky::new(x.clone()) {
        Some(ch) => {
            let l = ch.l();
            let Some(linv_dx) = l.solve_lower_triangular(dx) else { return 0.0 };
            let Some(w) = l.solve_lower_triangular(&linv_dx.adjoint()) else { return 0.0 };
            let w = (&w + w.adjoint()).scale(0.5);
            let lmin = w.symmetric_eigenvalues().iter().copied().fold(f64::INFINITY, f64::min);
            if lmin < 0.0 { -1.0 / lmin } else { f64::INFINITY }
        }
        None => 0.0,
    }
}
