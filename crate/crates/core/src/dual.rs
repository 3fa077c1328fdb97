//! Per-view dual subproblem over the working set.
//!
//! With every other view fixed, updating `w_j` minimizes
//!
//! ```text
//! 1/2 w'Ωw - w'β + C1 * max_k (δ_k - w'γ_k)
//! ```
//!
//! where `Ω = I + C2 (m-1) Σ_i x_i x_i'`, `β = C2 Σ_i x_i Σ_{j'≠j} w_j'.x_i^j'`,
//! `γ_k` is the view-`j` joint-feature difference of constraint `k`, and
//! `δ_k` is its loss minus the margin already provided by the other views.
//! The dual is a concave QP over the scaled simplex `α ≥ 0, Σα = C1`:
//!
//! ```text
//! max  -1/2 (β + Γα)' Ω^-1 (β + Γα) + α'δ
//! ```
//!
//! and the weights are recovered as `w = Ω^-1 (β + Γα)`.

use nalgebra::{Cholesky, DMatrix, DVector, Dyn};

use crate::data::MultiViewDataset;
use crate::error::{Error, Result};
use crate::inference::{dot, psi, responses_for_view, LabelTuple, ViewWeights};

pub const DEFAULT_QP_TOL: f64 = 1e-8;
pub const DEFAULT_QP_MAX_ITER: usize = 10_000;

/// Dense Cholesky factor of the view regularizer `Ω_j`, computed once per view.
#[derive(Clone, Debug)]
pub struct OmegaFactor {
    view: usize,
    matrix: DMatrix<f64>,
    chol: Cholesky<f64, Dyn>,
}

impl OmegaFactor {
    /// `Ω_j = I + C2 (m-1) Σ_i x_i^j x_i^j'`.
    pub fn build(ds: &MultiViewDataset, j: usize, c2: f64) -> Result<Self> {
        if !(c2 >= 0.0 && c2.is_finite()) {
            return Err(Error::InvalidConfig(format!("C2 must be finite and >= 0, got {c2}")));
        }
        let d = ds.dim(j);
        let mut matrix = DMatrix::<f64>::identity(d, d);
        let scale = c2 * (ds.m() - 1) as f64;
        if scale > 0.0 {
            for row in ds.view(j).rows() {
                let e = row.entries();
                for &(a, va) in e {
                    for &(b, vb) in e {
                        matrix[(a, b)] += scale * va * vb;
                    }
                }
            }
        }
        let chol = Cholesky::new(matrix.clone()).ok_or(Error::Factorization { view: j })?;
        Ok(OmegaFactor { view: j, matrix, chol })
    }

    pub fn view(&self) -> usize {
        self.view
    }

    pub fn dim(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.matrix
    }

    /// `Ω^-1 v`
    pub fn solve(&self, v: &[f64]) -> Vec<f64> {
        let b = DVector::from_column_slice(v);
        self.chol.solve(&b).as_slice().to_vec()
    }

    /// `Ω v`
    pub fn apply(&self, v: &[f64]) -> Vec<f64> {
        let x = DVector::from_column_slice(v);
        (&self.matrix * x).as_slice().to_vec()
    }
}

/// Builds `Ω_j` for every view.
pub fn build_omegas(ds: &MultiViewDataset, c2: f64) -> Result<Vec<OmegaFactor>> {
    (0..ds.m()).map(|j| OmegaFactor::build(ds, j, c2)).collect()
}

/// `β_j = C2 Σ_i x_i^j Σ_{j'≠j} w_j'.x_i^j'`, the pull of the other views'
/// responses on view `j`.
pub fn coupling_vector(ds: &MultiViewDataset, j: usize, weights: &ViewWeights, c2: f64) -> Vec<f64> {
    let mut beta = vec![0.0; ds.dim(j)];
    if c2 == 0.0 || ds.m() < 2 {
        return beta;
    }
    let mut others = vec![0.0; ds.n()];
    for jj in (0..ds.m()).filter(|&jj| jj != j) {
        for (o, r) in others.iter_mut().zip(responses_for_view(ds, jj, weights.view(jj))) {
            *o += r;
        }
    }
    for (row, o) in ds.view(j).rows().iter().zip(&others) {
        row.add_scaled_to(&mut beta, c2 * o);
    }
    beta
}

/// A label tuple in the working set with its cached joint-feature
/// differences `ψ_j = Ψ_j(truth) - Ψ_j(tuple)`, its loss, and the most recent
/// dual multiplier from each view's solve.
#[derive(Clone, Debug)]
pub struct WorkingConstraint {
    pub tuple: LabelTuple,
    pub psi_diff: Vec<Vec<f64>>,
    pub loss: f64,
    pub alpha: Vec<f64>,
}

impl WorkingConstraint {
    pub fn new(ds: &MultiViewDataset, tuple: LabelTuple, loss: f64) -> Result<Self> {
        let truth = ds.labels();
        let psi_diff = (0..ds.m())
            .map(|j| {
                let a = psi(ds, j, truth)?;
                let b = psi(ds, j, &tuple)?;
                Ok(a.iter().zip(&b).map(|(x, y)| x - y).collect())
            })
            .collect::<Result<Vec<Vec<f64>>>>()?;
        Ok(WorkingConstraint {
            tuple,
            psi_diff,
            loss,
            alpha: vec![0.0; ds.m()],
        })
    }

    /// `Σ_j w_j . ψ_j`
    pub fn margin(&self, weights: &ViewWeights) -> f64 {
        self.psi_diff
            .iter()
            .zip(weights.iter())
            .map(|(p, w)| dot(p, w))
            .sum()
    }
}

/// Ordered set of distinct working constraints.
#[derive(Clone, Debug, Default)]
pub struct WorkingSet {
    constraints: Vec<WorkingConstraint>,
}

impl WorkingSet {
    pub fn new() -> Self {
        Self::default()
    }

    /// A set holding only the truth itself: zero loss, zero feature
    /// difference. With it present, `Σα = C1` admits the all-slack-zero
    /// solution and the restricted slack is never negative.
    pub fn anchored(ds: &MultiViewDataset) -> Self {
        let truth = WorkingConstraint {
            tuple: ds.labels().clone(),
            psi_diff: ds.dims().iter().map(|&d| vec![0.0; d]).collect(),
            loss: 0.0,
            alpha: vec![0.0; ds.m()],
        };
        WorkingSet {
            constraints: vec![truth],
        }
    }

    pub fn len(&self) -> usize {
        self.constraints.len()
    }

    pub fn is_empty(&self) -> bool {
        self.constraints.is_empty()
    }

    pub fn constraints(&self) -> &[WorkingConstraint] {
        &self.constraints
    }

    pub fn contains(&self, tuple: &LabelTuple) -> bool {
        self.constraints.iter().any(|c| &c.tuple == tuple)
    }

    /// Adds `tuple`; returns `false` and leaves the set untouched if it is
    /// already present.
    pub fn insert(&mut self, ds: &MultiViewDataset, tuple: LabelTuple, loss: f64) -> Result<bool> {
        if self.contains(&tuple) {
            return Ok(false);
        }
        self.constraints.push(WorkingConstraint::new(ds, tuple, loss)?);
        Ok(true)
    }

    /// Largest constraint violation `max_k (Δ_k - Σ_j w_j.ψ_jk)`, without the
    /// clamp at zero; `None` for an empty set.
    pub fn raw_slack(&self, weights: &ViewWeights) -> Option<f64> {
        self.constraints
            .iter()
            .map(|c| c.loss - c.margin(weights))
            .reduce(f64::max)
    }

    pub(crate) fn set_alphas(&mut self, j: usize, alpha: &[f64]) {
        for (c, &a) in self.constraints.iter_mut().zip(alpha) {
            c.alpha[j] = a;
        }
    }

    pub(crate) fn alphas(&self, j: usize) -> Vec<f64> {
        self.constraints.iter().map(|c| c.alpha[j]).collect()
    }
}

/// The view-`j` dual subproblem in minimization form
/// `min 1/2 α'Hα + α'c` over `α ≥ 0, Σα = C1`.
#[derive(Clone, Debug)]
pub struct ViewSubproblem {
    pub view: usize,
    pub beta: Vec<f64>,
    pub gammas: Vec<Vec<f64>>,
    pub deltas: Vec<f64>,
    /// `Ω^-1 β`
    pub omega_inv_beta: Vec<f64>,
    /// `Ω^-1 γ_k`
    pub omega_inv_gammas: Vec<Vec<f64>>,
    /// `H_kl = γ_k' Ω^-1 γ_l`
    pub gram: DMatrix<f64>,
    /// `c_k = γ_k' Ω^-1 β - δ_k`
    pub linear: DVector<f64>,
}

impl ViewSubproblem {
    /// Assembles the subproblem for view `j` against the current weights of
    /// every other view. The view-`j` entry of `weights` is ignored.
    pub fn build(
        ds: &MultiViewDataset,
        j: usize,
        weights: &ViewWeights,
        ws: &WorkingSet,
        c2: f64,
        omega: &OmegaFactor,
    ) -> Result<Self> {
        if ws.is_empty() {
            return Err(Error::EmptyWorkingSet);
        }
        weights.check_compatible(ds)?;
        if omega.dim() != ds.dim(j) {
            return Err(Error::DimensionMismatch(format!(
                "omega has dimension {}, view {j} has {}",
                omega.dim(),
                ds.dim(j)
            )));
        }
        let m = ds.m();
        let beta = coupling_vector(ds, j, weights, c2);

        let gammas: Vec<Vec<f64>> = ws.constraints().iter().map(|c| c.psi_diff[j].clone()).collect();
        let deltas: Vec<f64> = ws
            .constraints()
            .iter()
            .map(|c| {
                let other: f64 = (0..m)
                    .filter(|&jj| jj != j)
                    .map(|jj| dot(weights.view(jj), &c.psi_diff[jj]))
                    .sum();
                c.loss - other
            })
            .collect();

        let omega_inv_beta = omega.solve(&beta);
        let omega_inv_gammas: Vec<Vec<f64>> = gammas.iter().map(|g| omega.solve(g)).collect();
        let k = gammas.len();
        let mut gram = DMatrix::<f64>::zeros(k, k);
        for a in 0..k {
            for b in 0..=a {
                let h = 0.5 * (dot(&gammas[a], &omega_inv_gammas[b]) + dot(&gammas[b], &omega_inv_gammas[a]));
                gram[(a, b)] = h;
                gram[(b, a)] = h;
            }
        }
        let linear = DVector::from_iterator(
            k,
            gammas.iter().zip(&deltas).map(|(g, d)| dot(g, &omega_inv_beta) - d),
        );
        Ok(ViewSubproblem {
            view: j,
            beta,
            gammas,
            deltas,
            omega_inv_beta,
            omega_inv_gammas,
            gram,
            linear,
        })
    }

    pub fn len(&self) -> usize {
        self.gammas.len()
    }

    pub fn is_empty(&self) -> bool {
        self.gammas.is_empty()
    }

    /// `w_j = Ω^-1 (β + Σ_k α_k γ_k)`
    pub fn recover_weights(&self, alpha: &[f64]) -> Result<Vec<f64>> {
        if alpha.len() != self.len() {
            return Err(Error::LengthMismatch {
                expected: self.len(),
                found: alpha.len(),
            });
        }
        let mut w = self.omega_inv_beta.clone();
        for (a, v) in alpha.iter().zip(&self.omega_inv_gammas) {
            if *a != 0.0 {
                for (wi, vi) in w.iter_mut().zip(v) {
                    *wi += a * vi;
                }
            }
        }
        Ok(w)
    }

    /// Dual objective `-1/2 (β+Γα)'Ω^-1(β+Γα) + α'δ`.
    pub fn dual_objective(&self, alpha: &[f64]) -> f64 {
        let a = DVector::from_column_slice(alpha);
        let quad = (a.transpose() * &self.gram * &a)[(0, 0)];
        -0.5 * dot(&self.beta, &self.omega_inv_beta) - 0.5 * quad - a.dot(&self.linear)
    }

    /// Per-view primal `1/2 w'Ωw - w'β + C1 max_k (δ_k - w'γ_k)`, the slack
    /// left unclamped as in the dual's `Σα = C1` derivation.
    pub fn primal_objective(&self, omega: &OmegaFactor, w: &[f64], c1: f64) -> f64 {
        let ow = omega.apply(w);
        0.5 * dot(w, &ow) - dot(w, &self.beta) + c1 * self.slack(w)
    }

    /// `max_k (δ_k - w'γ_k)`
    pub fn slack(&self, w: &[f64]) -> f64 {
        self.gammas
            .iter()
            .zip(&self.deltas)
            .map(|(g, d)| d - dot(w, g))
            .fold(f64::NEG_INFINITY, f64::max)
    }

    /// Gradient of the minimization-form objective, `Hα + c`.
    pub fn gradient(&self, alpha: &[f64]) -> Vec<f64> {
        let a = DVector::from_column_slice(alpha);
        (&self.gram * a + &self.linear).as_slice().to_vec()
    }

    pub fn kkt(&self, alpha: &[f64], c1: f64) -> Kkt {
        Kkt::of(&self.gradient(alpha), alpha, c1)
    }
}

/// KKT diagnostics of a point on the scaled simplex.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Kkt {
    pub min_alpha: f64,
    /// `|Σα - total|`
    pub sum_error: f64,
    /// `max_{α_k > 0} g_k - min_k g_k`
    pub residual: f64,
}

impl Kkt {
    pub fn of(grad: &[f64], alpha: &[f64], total: f64) -> Kkt {
        Kkt {
            min_alpha: alpha.iter().copied().fold(f64::INFINITY, f64::min),
            sum_error: (alpha.iter().sum::<f64>() - total).abs(),
            residual: kkt_residual(grad, alpha),
        }
    }
}

fn kkt_residual(grad: &[f64], alpha: &[f64]) -> f64 {
    let hi = grad
        .iter()
        .zip(alpha)
        .filter(|(_, &a)| a > 0.0)
        .map(|(g, _)| *g)
        .fold(f64::NEG_INFINITY, f64::max);
    let lo = grad.iter().copied().fold(f64::INFINITY, f64::min);
    (hi - lo).max(0.0)
}

#[derive(Clone, Debug, PartialEq)]
pub struct QpSolution {
    pub alpha: Vec<f64>,
    pub residual: f64,
    pub iterations: usize,
}

/// Minimizes `1/2 α'Hα + c'α` over `α ≥ 0, Σα = total` by maximal-violating
/// pair exchange with exact line search. Stops once the KKT residual is at
/// most `tol`; if round-off prevents that, a residual within
/// `tol * max(1, |g|_inf)` is accepted.
pub fn solve_simplex(
    hessian: &DMatrix<f64>,
    linear: &DVector<f64>,
    total: f64,
    tol: f64,
    max_iter: usize,
    warm_start: Option<&[f64]>,
) -> Result<QpSolution> {
    let k = linear.len();
    if k == 0 {
        return Err(Error::EmptyWorkingSet);
    }
    if !(total > 0.0 && total.is_finite()) {
        return Err(Error::InvalidConfig(format!("C1 must be finite and > 0, got {total}")));
    }
    if tol.is_nan() || tol <= 0.0 {
        return Err(Error::InvalidConfig(format!("QP tolerance must be > 0, got {tol}")));
    }

    let mut alpha = match warm_start {
        Some(w) if w.len() == k && w.iter().all(|&a| a >= 0.0) && w.iter().sum::<f64>() > 0.0 => {
            let s: f64 = w.iter().sum();
            w.iter().map(|a| a * total / s).collect()
        }
        _ => {
            // best vertex of the simplex
            let best = (0..k)
                .min_by(|&a, &b| {
                    let fa = 0.5 * hessian[(a, a)] * total + linear[a];
                    let fb = 0.5 * hessian[(b, b)] * total + linear[b];
                    fa.total_cmp(&fb)
                })
                .unwrap();
            let mut a = vec![0.0; k];
            a[best] = total;
            a
        }
    };

    let full_gradient = |alpha: &[f64]| -> Vec<f64> {
        (0..k)
            .map(|r| linear[r] + (0..k).map(|c| hessian[(r, c)] * alpha[c]).sum::<f64>())
            .collect()
    };
    let mut grad = full_gradient(&alpha);
    let mut iterations = 0;
    while iterations < max_iter {
        let (hi, lo) = violating_pair(&grad, &alpha);
        if grad[hi] - grad[lo] <= tol || hi == lo {
            break;
        }
        let gap = grad[hi] - grad[lo];
        let curv = hessian[(hi, hi)] + hessian[(lo, lo)] - 2.0 * hessian[(hi, lo)];
        let step = if curv > 0.0 { (gap / curv).min(alpha[hi]) } else { alpha[hi] };
        let (old_hi, old_lo) = (alpha[hi], alpha[lo]);
        if step >= alpha[hi] {
            alpha[lo] += alpha[hi];
            alpha[hi] = 0.0;
        } else {
            alpha[hi] -= step;
            alpha[lo] += step;
        }
        iterations += 1;
        if alpha[hi] == old_hi && alpha[lo] == old_lo {
            break;
        }
        let moved = old_hi - alpha[hi];
        for r in 0..k {
            grad[r] += moved * (hessian[(r, lo)] - hessian[(r, hi)]);
        }
        if iterations % 256 == 0 {
            newton_on_support(hessian, linear, &mut alpha);
        }
        if iterations % 64 == 0 {
            grad = full_gradient(&alpha);
        }
    }

    let grad = full_gradient(&alpha);
    let residual = kkt_residual(&grad, &alpha);
    let scale = grad.iter().fold(1.0f64, |s, g| s.max(g.abs()));
    if residual <= tol || residual <= tol * scale {
        Ok(QpSolution {
            alpha,
            residual,
            iterations,
        })
    } else {
        Err(Error::QpNonConvergence {
            iterations,
            residual,
            alpha,
        })
    }
}

/// Projected Newton steps restricted to the support of `alpha`, keeping the
/// simplex equality and a ratio test for the bounds. A descent direction of
/// zero curvature is followed until a bound is hit, dropping a variable;
/// otherwise a full Newton step on the face is tried. Repeats while the
/// support shrinks. The objective never increases.
fn newton_on_support(hessian: &DMatrix<f64>, linear: &DVector<f64>, alpha: &mut [f64]) {
    for _ in 0..alpha.len() {
        let grad: Vec<f64> = (0..alpha.len())
            .map(|r| linear[r] + (0..alpha.len()).map(|c| hessian[(r, c)] * alpha[c]).sum::<f64>())
            .collect();
        match face_step(hessian, &grad, alpha) {
            FaceStep::Dropped => {}
            FaceStep::Interior | FaceStep::None => return,
        }
    }
}

enum FaceStep {
    None,
    Dropped,
    Interior,
}

fn face_step(hessian: &DMatrix<f64>, grad: &[f64], alpha: &mut [f64]) -> FaceStep {
    let support: Vec<usize> = (0..alpha.len()).filter(|&r| alpha[r] > 0.0).collect();
    let s = support.len();
    if s < 2 {
        return FaceStep::None;
    }
    // z-coordinates: α_S = a + Z z, Z = [I; -1']
    let last = support[s - 1];
    let free = &support[..s - 1];
    let r = DVector::from_iterator(s - 1, free.iter().map(|&i| grad[i] - grad[last]));
    let m = DMatrix::from_fn(s - 1, s - 1, |a, b| {
        let (i, j) = (free[a], free[b]);
        hessian[(i, j)] - hessian[(i, last)] - hessian[(last, j)] + hessian[(last, last)]
    });
    let eig = m.clone().symmetric_eigen();
    let cutoff = eig.eigenvalues.amax() * 1e-10 + f64::MIN_POSITIVE;
    let mut flat = DVector::<f64>::zeros(s - 1);
    let mut newton = DVector::<f64>::zeros(s - 1);
    for (k, &lambda) in eig.eigenvalues.iter().enumerate() {
        let v = eig.eigenvectors.column(k);
        let coeff = v.dot(&r);
        if lambda > cutoff {
            newton -= v * (coeff / lambda);
        } else {
            flat -= v * coeff;
        }
    }
    let scale = r.amax();
    for dz in [flat, newton] {
        let slope = dz.dot(&r);
        if slope.is_nan() || slope >= -1e-14 * scale * dz.amax() {
            continue;
        }
        let mut d = vec![0.0; alpha.len()];
        for (a, &i) in free.iter().enumerate() {
            d[i] = dz[a];
        }
        d[last] = -dz.sum();
        let curv = (&m * &dz).dot(&dz).max(0.0);
        let (t_max, blocking) = support
            .iter()
            .filter(|&&i| d[i] < 0.0)
            .map(|&i| (-alpha[i] / d[i], i))
            .fold((f64::INFINITY, usize::MAX), |acc, x| if x.0 < acc.0 { x } else { acc });
        let t_free = if curv > 0.0 { -slope / curv } else { f64::INFINITY };
        let t = t_free.min(t_max);
        if !(t.is_finite() && t > 0.0) {
            continue;
        }
        let total: f64 = alpha.iter().sum();
        for &i in &support {
            alpha[i] = (alpha[i] + t * d[i]).max(0.0);
        }
        let hit = t_max <= t_free;
        if hit {
            alpha[blocking] = 0.0;
        }
        let drift = alpha.iter().sum::<f64>() - total;
        if let Some(big) = support.iter().copied().max_by(|&a, &b| alpha[a].total_cmp(&alpha[b])) {
            alpha[big] -= drift;
        }
        return if hit { FaceStep::Dropped } else { FaceStep::Interior };
    }
    FaceStep::None
}

fn violating_pair(grad: &[f64], alpha: &[f64]) -> (usize, usize) {
    let mut hi = usize::MAX;
    let mut lo = 0;
    for r in 0..grad.len() {
        if alpha[r] > 0.0 && (hi == usize::MAX || grad[r] > grad[hi]) {
            hi = r;
        }
        if grad[r] < grad[lo] {
            lo = r;
        }
    }
    (hi, lo)
}

/// Solves the view subproblem's dual over the simplex scaled to `c1`.
pub fn solve_simplex_qp(
    sub: &ViewSubproblem,
    c1: f64,
    tol: f64,
    max_iter: usize,
    warm_start: Option<&[f64]>,
) -> Result<QpSolution> {
    solve_simplex(&sub.gram, &sub.linear, c1, tol, max_iter, warm_start)
}

/// Cholesky factor of the full block regularizer `A` with `A_jj = Ω_j` and
/// `A_jj' = -C2 Σ_i x_i^j x_i^j''`, so the smooth part of the primal is
/// `1/2 W'AW` over the stacked weights.
#[derive(Clone, Debug)]
pub struct JointFactor {
    offsets: Vec<usize>,
    chol: Cholesky<f64, Dyn>,
}

impl JointFactor {
    pub fn build(ds: &MultiViewDataset, c2: f64) -> Result<Self> {
        if !(c2 >= 0.0 && c2.is_finite()) {
            return Err(Error::InvalidConfig(format!("C2 must be finite and >= 0, got {c2}")));
        }
        let mut offsets = vec![0];
        for d in ds.dims() {
            offsets.push(offsets.last().copied().unwrap_or(0) + d);
        }
        let total = offsets[ds.m()];
        let mut a = DMatrix::<f64>::identity(total, total);
        if c2 > 0.0 && ds.m() > 1 {
            let m = ds.m();
            for i in 0..ds.n() {
                for ja in 0..m {
                    for jb in 0..m {
                        let scale = if ja == jb { c2 * (m - 1) as f64 } else { -c2 };
                        for &(p, vp) in ds.view(ja).row(i).entries() {
                            for &(q, vq) in ds.view(jb).row(i).entries() {
                                a[(offsets[ja] + p, offsets[jb] + q)] += scale * vp * vq;
                            }
                        }
                    }
                }
            }
        }
        let chol = Cholesky::new(a).ok_or(Error::Factorization { view: 0 })?;
        Ok(JointFactor { offsets, chol })
    }

    fn stack(&self, parts: &[Vec<f64>]) -> DVector<f64> {
        DVector::from_iterator(
            *self.offsets.last().unwrap_or(&0),
            parts.iter().flatten().copied(),
        )
    }

    fn unstack(&self, v: &DVector<f64>) -> Vec<Vec<f64>> {
        self.offsets
            .windows(2)
            .map(|r| v.as_slice()[r[0]..r[1]].to_vec())
            .collect()
    }
}

/// Solves the restricted problem over every view at once:
/// `min 1/2 α'(Γ'A^-1 Γ)α - α'Δ` over `α ≥ 0, Σα = C1`, `W = A^-1 Γα`.
pub fn solve_joint(
    joint: &JointFactor,
    ws: &WorkingSet,
    c1: f64,
    tol: f64,
    max_iter: usize,
    warm_start: Option<&[f64]>,
) -> Result<(ViewWeights, QpSolution)> {
    let cols: Vec<DVector<f64>> = ws.constraints().iter().map(|c| joint.stack(&c.psi_diff)).collect();
    let solved: Vec<DVector<f64>> = cols.iter().map(|g| joint.chol.solve(g)).collect();
    let k = cols.len();
    let mut gram = DMatrix::<f64>::zeros(k, k);
    for a in 0..k {
        for b in 0..=a {
            let h = 0.5 * (cols[a].dot(&solved[b]) + cols[b].dot(&solved[a]));
            gram[(a, b)] = h;
            gram[(b, a)] = h;
        }
    }
    let linear = DVector::from_iterator(k, ws.constraints().iter().map(|c| -c.loss));
    let sol = solve_simplex(&gram, &linear, c1, tol, max_iter, warm_start)?;
    let mut w = DVector::<f64>::zeros(*joint.offsets.last().unwrap_or(&0));
    for (a, v) in sol.alpha.iter().zip(&solved) {
        if *a != 0.0 {
            w.axpy(*a, v, 1.0);
        }
    }
    Ok((ViewWeights::new(joint.unstack(&w))?, sol))
}
