//! Zero-error k-learnability of indexed pure-state lists.
//!
//! A list `ψ_1 … ψ_n` is k-learnable when some POVM `{M_S : |S| = k}`
//! satisfies `⟨ψ_i|M_S|ψ_i⟩ = 0` for `i ∉ S`. This holds exactly when
//! `G / n ∈ I_k` for the Gram matrix `G`, so every decision here is delegated
//! to [`incoherence`](crate::incoherence).

use std::collections::BTreeMap;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::conic::{self, ConicProgram, SolveStatus, SparseHerm};
use crate::error::{Error, Result};
use crate::incoherence::{
    self, add_sum_equalities, check_k, compressed_entry, Answer, Config, IncoherentDecomposition, WITNESS_EPS,
};
use crate::io::{self, MatrixFile};
use crate::matrix::{c, lambda_min, range_subspace, real, CMat, CVec, HermitianMatrix, StateList};
use crate::subsets::{check_cap, k_subsets};

/// Tolerance at which extracted POVMs are checked.
pub const POVM_TOL: f64 = 1e-6;
/// States with norm at most this are treated as zero.
pub const ZERO_NORM_TOL: f64 = 1e-12;

/// `G_ij = ⟨ψ_i|ψ_j⟩`.
pub fn states_to_gram(states: &StateList) -> HermitianMatrix {
    let v = states.as_columns();
    HermitianMatrix::symmetrized(v.adjoint() * v)
}

/// `G / n`, the point whose membership in `I_k` decides k-learnability.
pub fn normalized_gram(states: &StateList) -> HermitianMatrix {
    states_to_gram(states).scale(1.0 / states.len() as f64)
}

/// Default weak-membership radius `1e-6 (1 + ||G||_F) / n`.
pub fn default_delta(states: &StateList) -> f64 {
    1e-6 * (1.0 + states_to_gram(states).frobenius_norm()) / states.len() as f64
}

/// Measurement with one outcome per k-subset of state indices.
#[derive(Debug, Clone, PartialEq)]
pub struct Povm {
    pub n: usize,
    pub k: usize,
    pub dim: usize,
    /// Keyed by sorted 0-based subsets.
    pub elements: BTreeMap<Vec<usize>, HermitianMatrix>,
}

#[derive(Debug, Serialize, Deserialize)]
struct ElementFile {
    subset: Vec<usize>,
    matrix: MatrixFile,
}

#[derive(Debug, Serialize, Deserialize)]
struct PovmFile {
    n: usize,
    k: usize,
    d: usize,
    elements: Vec<ElementFile>,
}

impl Povm {
    pub fn to_json(&self) -> String {
        let f = PovmFile {
            n: self.n,
            k: self.k,
            d: self.dim,
            elements: self
                .elements
                .iter()
                .map(|(s, m)| ElementFile { subset: io::to_one_based(s), matrix: MatrixFile::from_matrix(m) })
                .collect(),
        };
        serde_json::to_string(&f).expect("serializable")
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let f: PovmFile = serde_json::from_str(text)?;
        let mut elements = BTreeMap::new();
        for e in f.elements {
            let mut key = io::to_zero_based(&e.subset, f.n)?;
            key.sort_unstable();
            key.dedup();
            if key.len() != f.k {
                return Err(Error::contract(format!("POVM key {:?} does not have {} distinct indices", e.subset, f.k)));
            }
            let m = e.matrix.to_matrix()?;
            if m.dim() != f.d {
                return Err(Error::Dimension { expected: f.d, found: m.dim() });
            }
            elements.insert(key, m);
        }
        Ok(Povm { n: f.n, k: f.k, dim: f.d, elements })
    }

    /// `M_{i,j} = ½ |φ_ij⟩⟨φ_ij|`, the reference 2-outcome-subset measurement
    /// for the tetrahedral states.
    pub fn tetrahedral_reference() -> Povm {
        let h = 0.5f64.sqrt();
        let phis: [([usize; 2], [f64; 3]); 6] = [
            ([0, 1], [0.0, h, h]),
            ([0, 2], [h, h, 0.0]),
            ([0, 3], [h, 0.0, h]),
            ([1, 2], [h, 0.0, -h]),
            ([1, 3], [h, -h, 0.0]),
            ([2, 3], [0.0, h, -h]),
        ];
        let elements = phis
            .iter()
            .map(|(s, v)| {
                let v = CVec::from_iterator(3, v.iter().map(|&x| real(x)));
                (s.to_vec(), HermitianMatrix::outer(&v).scale(0.5))
            })
            .collect();
        Povm { n: 4, k: 2, dim: 3, elements }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum PovmClause {
    Dimension,
    Positivity,
    Completeness,
    ZeroError,
}

#[derive(Debug, Clone, Serialize)]
pub struct PovmCheck {
    pub valid: bool,
    pub failed: Option<PovmClause>,
    /// Largest `⟨ψ_i|M_S|ψ_i⟩` over `i ∉ S`.
    pub max_violation: f64,
    pub detail: String,
}

pub fn verify_povm(states: &StateList, povm: &Povm, tol: f64) -> PovmCheck {
    let fail = |clause, max_violation, detail| PovmCheck { valid: false, failed: Some(clause), max_violation, detail };
    if povm.dim != states.dim() || povm.n != states.len() || povm.elements.values().any(|m| m.dim() != povm.dim) {
        return fail(
            PovmClause::Dimension,
            f64::NAN,
            format!("POVM acts on C^{} for {} states, list has {} states in C^{}", povm.dim, povm.n, states.len(), states.dim()),
        );
    }
    if let Some(bad) = povm.elements.keys().find(|s| s.len() != povm.k || s.iter().any(|&i| i >= povm.n)) {
        return fail(PovmClause::Dimension, f64::NAN, format!("key {:?} is not a {}-subset", io::to_one_based(bad), povm.k));
    }
    let mut max_violation = 0.0f64;
    for (s, m) in &povm.elements {
        for (i, psi) in states.states().iter().enumerate() {
            if s.binary_search(&i).is_err() {
                let v = (psi.adjoint() * m.as_matrix() * psi)[(0, 0)].re;
                max_violation = max_violation.max(v);
            }
        }
    }
    for (s, m) in &povm.elements {
        let min = match lambda_min(m) {
            Ok(v) => v,
            Err(e) => return fail(PovmClause::Positivity, max_violation, e.to_string()),
        };
        if min < -tol {
            return fail(
                PovmClause::Positivity,
                max_violation,
                format!("element {:?} has eigenvalue {min:.3e}", io::to_one_based(s)),
            );
        }
    }
    let mut total = CMat::zeros(povm.dim, povm.dim);
    for m in povm.elements.values() {
        total += m.as_matrix();
    }
    let defect = (total - CMat::identity(povm.dim, povm.dim)).norm();
    if defect > tol {
        return fail(PovmClause::Completeness, max_violation, format!("||Σ M_S - I||_F = {defect:.3e}"));
    }
    if max_violation > tol {
        return fail(PovmClause::ZeroError, max_violation, format!("max ⟨ψ_i|M_S|ψ_i⟩ over i ∉ S is {max_violation:.3e}"));
    }
    PovmCheck { valid: true, failed: None, max_violation, detail: format!("{} elements", povm.elements.len()) }
}

fn pseudo_inverse(v: &CMat) -> Result<CMat> {
    let svd = v.clone().svd(true, true);
    let smax = svd.singular_values.iter().copied().fold(0.0, f64::max);
    if smax == 0.0 {
        return Ok(CMat::zeros(v.ncols(), v.nrows()));
    }
    svd.pseudo_inverse(1e-10 * smax).map_err(Error::contract)
}

/// Smallest k-subset containing `support`, padded with the smallest missing
/// indices.
fn pad_support(support: &[usize], k: usize) -> Vec<usize> {
    let mut key: Vec<usize> = support.to_vec();
    let mut i = 0;
    while key.len() < k {
        if !key.contains(&i) {
            key.push(i);
        }
        i += 1;
    }
    key.sort_unstable();
    key
}

/// POVM from a decomposition of `G / n`: `M_S = n (V⁺)* W_S V⁺`, completed on
/// the orthogonal complement of the span of the states by `(I - V V⁺) / m`
/// for `m` elements.
pub fn extract_povm(states: &StateList, d: &IncoherentDecomposition) -> Result<Povm> {
    let n = states.len();
    let dim = states.dim();
    if d.n != n {
        return Err(Error::Dimension { expected: n, found: d.n });
    }
    let x = normalized_gram(states);
    let mismatch = d.residual(&x);
    if mismatch > 1e-7 {
        return Err(Error::contract(format!("decomposition differs from G/n by {mismatch:.3e}")));
    }
    let v = states.as_columns();
    let vp = pseudo_inverse(&v)?;
    let nf = n as f64;
    let mut elements: BTreeMap<Vec<usize>, CMat> = BTreeMap::new();
    for t in &d.terms {
        if t.support.len() > d.k {
            return Err(Error::contract(format!("term support {:?} exceeds k = {}", t.support, d.k)));
        }
        let m = vp.adjoint() * t.matrix.as_matrix() * &vp * real(nf);
        *elements.entry(pad_support(&t.support, d.k)).or_insert_with(|| CMat::zeros(dim, dim)) += m;
    }
    if elements.is_empty() {
        elements.insert((0..d.k).collect(), CMat::zeros(dim, dim));
    }
    let complement = (CMat::identity(dim, dim) - &v * &vp) * real(1.0 / elements.len() as f64);
    let elements = elements
        .into_iter()
        .map(|(s, m)| (s, HermitianMatrix::symmetrized(m + &complement)))
        .collect();
    Ok(Povm { n, k: d.k, dim, elements })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum Verdict {
    Learnable,
    NotLearnable,
    Boundary,
}

#[derive(Debug, Clone, Serialize)]
pub struct LearnReport {
    pub verdict: Verdict,
    pub k: usize,
    pub delta: f64,
    /// Frobenius distance estimate from `G / n` to `I_k`.
    pub distance: f64,
    pub precision: f64,
    pub width: Option<usize>,
    /// Largest forbidden-pair overlap of the attached POVM.
    pub max_violation: Option<f64>,
    #[serde(skip)]
    pub povm: Option<Povm>,
}

pub fn is_k_learnable(states: &StateList, k: usize, delta: f64) -> Result<LearnReport> {
    is_k_learnable_with(&Config::default(), states, k, delta)
}

pub fn is_k_learnable_with(cfg: &Config, states: &StateList, k: usize, delta: f64) -> Result<LearnReport> {
    let report = decide(cfg, states, k, delta)?;
    if report.verdict != Verdict::Learnable {
        return Ok(report);
    }
    let povm = witness_povm(cfg, states, k)?;
    let max_violation = povm.as_ref().map(|p| verify_povm(states, p, POVM_TOL).max_violation);
    Ok(LearnReport { povm, max_violation, ..report })
}

fn decide(cfg: &Config, states: &StateList, k: usize, delta: f64) -> Result<LearnReport> {
    check_k(states.len(), k)?;
    let x = normalized_gram(states);
    let v = cfg.wmem(&x, k, delta)?;
    let verdict = match v.answer {
        Answer::Inside => Verdict::Learnable,
        Answer::Outside => Verdict::NotLearnable,
        Answer::Boundary => Verdict::Boundary,
    };
    Ok(LearnReport {
        verdict,
        k,
        delta,
        distance: v.distance,
        precision: v.precision,
        width: None,
        max_violation: None,
        povm: None,
    })
}

/// A POVM that passes [`verify_povm`] at [`POVM_TOL`] when one is found, else
/// the best attempt, or `None` when no decomposition is found.
pub fn witness_povm(cfg: &Config, states: &StateList, k: usize) -> Result<Option<Povm>> {
    let x = normalized_gram(states);
    let mut last = None;
    let found = cfg.search_decomposition(&x, k, &[WITNESS_EPS, 1e-8, 1e-7], |d| {
        match extract_povm(states, d) {
            Ok(p) => {
                let ok = verify_povm(states, &p, POVM_TOL).valid;
                last = Some(p);
                ok
            }
            Err(_) => false,
        }
    })?;
    Ok(found.and(last))
}

/// Learning width, or the pair `[k, k + 1]` when the verdict at `k` was
/// BOUNDARY.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(untagged)]
pub enum Width {
    Exact(usize),
    Interval(usize, usize),
}

impl std::fmt::Display for Width {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Width::Exact(k) => write!(f, "{k}"),
            Width::Interval(a, b) => write!(f, "[{a}, {b}]"),
        }
    }
}

pub fn learning_width(states: &StateList, delta: f64) -> Result<Width> {
    learning_width_with(&Config::default(), states, delta)
}

/// Binary search over k with weak-membership verdicts. k = n always holds.
pub fn learning_width_with(cfg: &Config, states: &StateList, delta: f64) -> Result<Width> {
    let (mut lo, mut hi) = (1, states.len());
    let mut boundary = None;
    while lo < hi {
        let mid = (lo + hi) / 2;
        match decide(cfg, states, mid, delta)?.verdict {
            Verdict::Learnable => hi = mid,
            Verdict::NotLearnable => lo = mid + 1,
            Verdict::Boundary => {
                boundary = Some(mid);
                lo = mid + 1;
            }
        }
    }
    Ok(match boundary {
        Some(b) if b + 1 == lo => Width::Interval(b, lo),
        _ => Width::Exact(lo),
    })
}

/// Named ensembles.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Fixture {
    Trine,
    Tetrahedral,
    /// `k` copies of each computational basis vector, `n` states in total.
    RepeatedBasis { k: usize, n: usize },
    /// The computational basis of `C^n`.
    Basis { n: usize },
    Random { seed: u64, n: usize, d: usize },
}

pub const FIXTURE_NAMES: &[&str] = &["trine", "tetrahedral", "repeated_basis(k,n)", "basis(n)", "random(seed,n,d)"];

impl Fixture {
    /// Parses a fixture name, supplying `seed` to `random(n,d)` written
    /// without one.
    pub fn parse_seeded(name: &str, seed: u64) -> Result<Fixture> {
        let name = name.trim();
        if let Some(args) = name.strip_prefix("random(").and_then(|r| r.strip_suffix(')')) {
            if args.split(',').count() == 2 {
                return format!("random({seed},{args})").parse();
            }
        }
        name.parse()
    }
}

impl std::str::FromStr for Fixture {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let unknown = || Error::UnknownFixture {
            name: s.to_string(),
            available: FIXTURE_NAMES.join(", "),
        };
        let s = s.trim();
        let (head, args) = match s.find('(') {
            Some(i) if s.ends_with(')') => (&s[..i], Some(&s[i + 1..s.len() - 1])),
            Some(_) => return Err(unknown()),
            None => (s, None),
        };
        let nums = |a: Option<&str>, count: usize| -> Result<Vec<u64>> {
            let a = a.ok_or_else(unknown)?;
            let v: Vec<u64> = a
                .split(',')
                .map(|t| t.trim().parse::<u64>())
                .collect::<std::result::Result<_, _>>()
                .map_err(|_| unknown())?;
            if v.len() != count {
                return Err(unknown());
            }
            Ok(v)
        };
        match (head, args) {
            ("trine", None) => Ok(Fixture::Trine),
            ("tetrahedral", None) => Ok(Fixture::Tetrahedral),
            ("repeated_basis", a) => {
                let v = nums(a, 2)?;
                Ok(Fixture::RepeatedBasis { k: v[0] as usize, n: v[1] as usize })
            }
            ("basis", a) => Ok(Fixture::Basis { n: nums(a, 1)?[0] as usize }),
            ("random", a) => {
                let v = nums(a, 3)?;
                Ok(Fixture::Random { seed: v[0], n: v[1] as usize, d: v[2] as usize })
            }
            _ => Err(unknown()),
        }
    }
}

pub fn fixture_states(f: &Fixture) -> Result<StateList> {
    match *f {
        Fixture::Trine => {
            let r = 3f64.sqrt() / 2.0;
            StateList::from_real(2, &[&[1.0, 0.0], &[-0.5, -r], &[-0.5, r]])
        }
        Fixture::Tetrahedral => {
            let s = 1.0 / 3f64.sqrt();
            StateList::from_real(3, &[&[s, s, s], &[s, -s, -s], &[-s, -s, s], &[-s, s, -s]])
        }
        Fixture::RepeatedBasis { k, n } => {
            if k == 0 || n == 0 {
                return Err(Error::contract("repeated_basis needs k, n >= 1"));
            }
            let d = n.div_ceil(k);
            let states = (0..n)
                .map(|i| {
                    let mut v = CVec::zeros(d);
                    v[i / k] = real(1.0);
                    v
                })
                .collect();
            StateList::new(d, states)
        }
        Fixture::Basis { n } => {
            if n == 0 {
                return Err(Error::contract("basis needs n >= 1"));
            }
            StateList::new(n, (0..n).map(|i| CMat::identity(n, n).column(i).into_owned()).collect())
        }
        Fixture::Random { seed, n, d } => {
            if n == 0 || d == 0 {
                return Err(Error::contract("random needs n, d >= 1"));
            }
            Ok(random_states(seed, n, d))
        }
    }
}

/// Normalized complex Gaussian vectors from a seeded ChaCha stream.
pub fn random_states(seed: u64, n: usize, d: usize) -> StateList {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let states = (0..n)
        .map(|_| loop {
            let v = CVec::from_fn(d, |_, _| c(gaussian(&mut rng), gaussian(&mut rng)));
            let norm = v.norm();
            if norm > 1e-6 {
                break v.unscale(norm);
            }
        })
        .collect();
    StateList::new(d, states).expect("unit vectors")
}

/// Box-Muller standard normal sample.
pub(crate) fn gaussian(rng: &mut impl Rng) -> f64 {
    let u: f64 = rng.gen_range(f64::MIN_POSITIVE..1.0);
    let v: f64 = rng.gen::<f64>();
    (-2.0 * u.ln()).sqrt() * (2.0 * std::f64::consts::PI * v).cos()
}

/// Unit-normalized ensemble with zero states replaced by fresh orthogonal
/// directions.
#[derive(Debug, Clone)]
pub struct NormalizedEnsemble {
    pub states: StateList,
    /// `diag(||ψ_i||)`.
    pub norms: HermitianMatrix,
    /// Indices of the zero states that were replaced (0-based).
    pub padding: Vec<usize>,
}

pub fn normalize_ensemble(states: &StateList) -> NormalizedEnsemble {
    let d = states.dim();
    let norms: Vec<f64> = states.states().iter().map(|s| s.norm()).collect();
    let padding: Vec<usize> = (0..states.len()).filter(|&i| norms[i] <= ZERO_NORM_TOL).collect();
    let new_dim = d + padding.len();
    let normalized = states
        .states()
        .iter()
        .enumerate()
        .map(|(i, s)| {
            let mut v = CVec::zeros(new_dim);
            if let Some(p) = padding.iter().position(|&j| j == i) {
                v[d + p] = real(1.0);
            } else {
                v.rows_mut(0, d).copy_from(&s.unscale(norms[i]));
            }
            v
        })
        .collect();
    let diag: Vec<f64> = norms.iter().map(|&r| if r <= ZERO_NORM_TOL { 0.0 } else { r }).collect();
    NormalizedEnsemble {
        states: StateList::new(new_dim, normalized).expect("unit vectors"),
        norms: HermitianMatrix::diagonal(&diag),
        padding,
    }
}

/// Minimum average error `(1/n) Σ_i Σ_{S ∌ i} ⟨ψ_i|M_S|ψ_i⟩` over POVMs.
pub fn error_sdp_povm(states: &StateList, k: usize, eps: f64) -> Result<f64> {
    let n = states.len();
    check_k(n, k)?;
    check_cap(n, k, crate::subsets::DEFAULT_CAP)?;
    let dim = states.dim();
    let mut p = ConicProgram::new(1.0);
    let subsets = k_subsets(n, k);
    let blocks: Vec<usize> = subsets.iter().map(|_| p.add_block(dim)).collect();
    for (blk, s) in blocks.iter().zip(&subsets) {
        let mut cost = CMat::zeros(dim, dim);
        for (i, psi) in states.states().iter().enumerate() {
            if !s.contains(&i) {
                cost -= psi * psi.adjoint() * real(1.0 / n as f64);
            }
        }
        p.add_objective(*blk, &SparseHerm::from_dense(&cost, 0.0));
    }
    for r in 0..dim {
        for q in r..dim {
            p.add_equality(blocks.iter().map(|&b| (b, SparseHerm::entry_re(dim, r, q))).collect(), if r == q { 1.0 } else { 0.0 });
            if r != q {
                p.add_equality(blocks.iter().map(|&b| (b, SparseHerm::entry_im(dim, r, q))).collect(), 0.0);
            }
        }
    }
    solved_min(&p, eps)
}

/// `min Σ_S Σ_{i ∉ S} w_i (W_S)_ii` over PSD `W_S` with `Σ W_S = X`, each
/// `W_S` confined to `range(X)` so the feasible set has an interior.
fn weighted_offsupport_sdp(x: &HermitianMatrix, weights: &[f64], k: usize, eps: f64) -> Result<f64> {
    let n = x.dim();
    check_k(n, k)?;
    check_cap(n, k, crate::subsets::DEFAULT_CAP)?;
    let range = range_subspace(x, incoherence::RANK_TOL)?;
    if range.dim() == 0 {
        return Ok(0.0);
    }
    let b = range.basis_matrix();
    let r = range.dim();
    let compressed = HermitianMatrix::symmetrized(b.adjoint() * x.as_matrix() * &b);
    let mut p = ConicProgram::new(1.0 + x.trace());
    let subsets = k_subsets(n, k);
    let mut blocks = Vec::with_capacity(subsets.len());
    for s in &subsets {
        let blk = p.add_block(r);
        let mut cost = SparseHerm::zeros(r).to_dense();
        for i in (0..n).filter(|i| !s.contains(i)) {
            compressed_entry(&b, i, i).0.add_scaled_into(-weights[i], &mut cost);
        }
        p.add_objective(blk, &SparseHerm::from_dense(&cost, 1e-15));
        blocks.push((blk, CMat::identity(r, r)));
    }
    add_sum_equalities(&mut p, &compressed, &blocks);
    solved_min(&p, eps)
}

fn solved_min(p: &ConicProgram, eps: f64) -> Result<f64> {
    let sol = conic::solve(p, eps)?;
    if sol.status != SolveStatus::Optimal {
        return Err(Error::Solver {
            status: sol.status,
            detail: format!("minimum bracketed in [{:.6e}, {:.6e}]", -sol.dual_bound, -sol.value),
        });
    }
    Ok(-sol.value)
}

/// The error program on the raw Gram matrix: `Σ W_S = G / n`, unit weights.
pub fn error_sdp_gram(states: &StateList, k: usize, eps: f64) -> Result<f64> {
    let n = states.len();
    weighted_offsupport_sdp(&normalized_gram(states), &vec![1.0; n], k, eps)
}

/// The error program on normalized data: `Σ W̃_S = G̃ / n` with weights
/// `||ψ_i||²`, where `G̃ = D⁺ G D⁺ + I_T`.
pub fn error_sdp_normalized(states: &StateList, k: usize, eps: f64) -> Result<f64> {
    let n = states.len();
    let ne = normalize_ensemble(states);
    let weights: Vec<f64> = (0..n).map(|i| ne.norms.get(i, i).re.powi(2)).collect();
    weighted_offsupport_sdp(&normalized_gram(&ne.states), &weights, k, eps)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn fx(name: &str) -> StateList {
        fixture_states(&name.parse().unwrap()).unwrap()
    }

    #[test]
    fn gram_examples() {
        assert!(states_to_gram(&fx("basis(3)")).max_abs_diff(&HermitianMatrix::identity(3)) < 1e-15);
        let g = states_to_gram(&fx("trine"));
        for i in 0..3 {
            for j in 0..3 {
                assert_abs_diff_eq!(g.get(i, j).re, if i == j { 1.0 } else { -0.5 }, epsilon = 1e-15);
            }
        }
        let g = states_to_gram(&fx("tetrahedral"));
        for i in 0..4 {
            for j in 0..4 {
                assert_abs_diff_eq!(g.get(i, j).re, if i == j { 1.0 } else { -1.0 / 3.0 }, epsilon = 1e-15);
            }
        }
    }

    #[test]
    fn fixture_parsing() {
        let rb = fx("repeated_basis(2,5)");
        assert_eq!(rb.dim(), 3);
        let idx: Vec<usize> = rb.states().iter().map(|s| s.iter().position(|z| z.re == 1.0).unwrap()).collect();
        assert_eq!(idx, vec![0, 0, 1, 1, 2]);
        assert_eq!(fx("random(3,4,2)"), fx("random(3,4,2)"));
        assert!(matches!("square".parse::<Fixture>(), Err(Error::UnknownFixture { .. })));
        assert!("random(1,2)".parse::<Fixture>().is_err());
    }

    #[test]
    fn trine_learnability() {
        let t = fx("trine");
        let d = default_delta(&t);
        let yes = is_k_learnable(&t, 2, d).unwrap();
        assert_eq!(yes.verdict, Verdict::Learnable);
        let check = verify_povm(&t, yes.povm.as_ref().unwrap(), POVM_TOL);
        assert!(check.valid, "{}", check.detail);
        assert_eq!(is_k_learnable(&t, 1, d).unwrap().verdict, Verdict::NotLearnable);
    }

    #[test]
    fn repeated_basis_learnable_at_k() {
        let s = fx("repeated_basis(2,5)");
        assert_eq!(is_k_learnable(&s, 2, default_delta(&s)).unwrap().verdict, Verdict::Learnable);
    }

    #[test]
    fn widths() {
        for (name, w) in [("trine", 2), ("tetrahedral", 2), ("basis(4)", 1)] {
            let s = fx(name);
            assert_eq!(learning_width(&s, default_delta(&s)).unwrap(), Width::Exact(w), "{name}");
        }
        let same = StateList::from_real(2, &[&[1.0, 0.0][..]; 4]).unwrap();
        assert_eq!(learning_width(&same, default_delta(&same)).unwrap(), Width::Exact(4));
    }

    #[test]
    fn reference_povm() {
        let t = fx("tetrahedral");
        let p = Povm::tetrahedral_reference();
        assert!(verify_povm(&t, &p, 1e-9).valid);
        let uniform = Povm {
            elements: p.elements.keys().map(|s| (s.clone(), HermitianMatrix::identity(3).scale(1.0 / 6.0))).collect(),
            ..p.clone()
        };
        assert_eq!(verify_povm(&t, &uniform, 1e-9).failed, Some(PovmClause::ZeroError));
        let short = Povm { elements: p.elements.iter().take(5).map(|(s, m)| (s.clone(), m.clone())).collect(), ..p.clone() };
        assert_eq!(verify_povm(&t, &short, 1e-9).failed, Some(PovmClause::Completeness));
        assert_eq!(Povm::from_json(&p.to_json()).unwrap(), p);
    }

    #[test]
    fn extracted_povms_verify() {
        for (name, k) in [("tetrahedral", 2), ("trine", 2), ("basis(3)", 1), ("repeated_basis(2,5)", 2)] {
            let s = fx(name);
            let p = witness_povm(&Config::default(), &s, k).unwrap().expect(name);
            let chk = verify_povm(&s, &p, POVM_TOL);
            assert!(chk.valid, "{name}: {}", chk.detail);
        }
        let b = fx("basis(3)");
        let p = witness_povm(&Config::default(), &b, 1).unwrap().unwrap();
        for (s, m) in &p.elements {
            let mut e = CVec::zeros(3);
            e[s[0]] = real(1.0);
            assert!(m.max_abs_diff(&HermitianMatrix::outer(&e)) < 1e-6);
        }
    }

    #[test]
    fn normalization() {
        let t = fx("trine");
        let ne = normalize_ensemble(&t);
        assert!(ne.padding.is_empty());
        assert!(ne.norms.max_abs_diff(&HermitianMatrix::identity(3)) < 1e-15);

        let half = t.scaled(&[0.5, 0.5, 0.5]).unwrap();
        let ne = normalize_ensemble(&half);
        assert!(ne.norms.max_abs_diff(&HermitianMatrix::identity(3).scale(0.5)) < 1e-15);
        let rebuilt = states_to_gram(&ne.states).conjugate_by(ne.norms.as_matrix());
        assert!(rebuilt.max_abs_diff(&states_to_gram(&half)) < 1e-12);

        let with_zero = t.scaled(&[1.0, 0.0, 1.0]).unwrap();
        let ne = normalize_ensemble(&with_zero);
        assert_eq!(ne.padding, vec![1]);
        let gt = states_to_gram(&ne.states);
        assert_abs_diff_eq!(gt.get(1, 1).re, 1.0, epsilon = 1e-15);
        assert!(gt.get(0, 1).norm() < 1e-15 && gt.get(2, 1).norm() < 1e-15);
    }

    #[test]
    fn error_programs_agree() {
        let t = fx("trine").scaled(&[1.0, 0.0, 0.6]).unwrap();
        for k in 1..=3 {
            let a = error_sdp_normalized(&t, k, 1e-8).unwrap();
            let b = error_sdp_gram(&t, k, 1e-8).unwrap();
            let og = error_sdp_povm(&t, k, 1e-8).unwrap();
            assert_abs_diff_eq!(a, b, epsilon = 1e-6);
            assert_abs_diff_eq!(a, og, epsilon = 1e-6);
        }
        assert_abs_diff_eq!(error_sdp_gram(&fx("trine"), 2, 1e-8).unwrap(), 0.0, epsilon = 1e-7);
    }
}
