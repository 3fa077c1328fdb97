//! Cutting-plane training loop.
//!
//! Starting from zero weights and an empty working set, each outer iteration
//! asks the separation oracle for the most violated label tuple, adds it to
//! the working set, then updates the views one at a time by solving each
//! view's dual QP against the current weights of the others.
//!
//! The working set always holds the true labeling as a zero-loss constraint,
//! so the restricted slack is `max(0, ...)`. When a pass of view updates no
//! longer lowers the restricted objective, the restricted problem is solved
//! once over all views jointly, since alternating updates can stall at a
//! kink of the shared slack.

use std::fmt;
use std::str::FromStr;

use crate::data::MultiViewDataset;
use crate::dual::{
    build_omegas, solve_joint, solve_simplex_qp, JointFactor, OmegaFactor, ViewSubproblem,
    WorkingSet, DEFAULT_QP_MAX_ITER, DEFAULT_QP_TOL,
};
use crate::error::{Error, Result};
use crate::inference::{
    dot, predict_from_scores, responses_for_view, sum_responses, view_responses, LabelTuple,
    ViewWeights,
};
use crate::measures::{contingency, ContingencyTable, Measure};
use crate::model::Model;
use crate::search::{most_violated, most_violated_from_scores};

#[derive(Clone, Debug, PartialEq)]
pub struct TrainConfig {
    /// Weight of the slack (loss upper bound) term, `> 0`.
    pub c1: f64,
    /// Weight of the cross-view consistency term, `>= 0`.
    pub c2: f64,
    /// Cap on outer iterations.
    pub max_iter: usize,
    /// Stop once the most violated constraint exceeds the slack by at most this.
    pub epsilon: f64,
    pub measure: Measure,
    pub qp_tol: f64,
    pub qp_max_iter: usize,
    /// Reserved; training is deterministic.
    pub seed: u64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            c1: 1.0,
            c2: 0.1,
            max_iter: 100,
            epsilon: 1e-4,
            measure: Measure::ErrorRate,
            qp_tol: DEFAULT_QP_TOL,
            qp_max_iter: DEFAULT_QP_MAX_ITER,
            seed: 0,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::InvalidConfig(msg));
        if !(self.c1 > 0.0 && self.c1.is_finite()) {
            return bad(format!("C1 must be finite and > 0, got {}", self.c1));
        }
        if !(self.c2 >= 0.0 && self.c2.is_finite()) {
            return bad(format!("C2 must be finite and >= 0, got {}", self.c2));
        }
        if self.max_iter == 0 {
            return bad("max_iter must be >= 1".into());
        }
        if !(self.epsilon >= 0.0 && self.epsilon.is_finite()) {
            return bad(format!("epsilon must be finite and >= 0, got {}", self.epsilon));
        }
        if !(self.qp_tol > 0.0 && self.qp_tol.is_finite()) {
            return bad(format!("qp_tol must be finite and > 0, got {}", self.qp_tol));
        }
        if self.qp_max_iter == 0 {
            return bad("qp_max_iter must be >= 1".into());
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Status {
    Converged,
    MaxIterations,
}

impl fmt::Display for Status {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Status::Converged => "converged",
            Status::MaxIterations => "max-iter",
        })
    }
}

impl FromStr for Status {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "converged" => Ok(Status::Converged),
            "max-iter" => Ok(Status::MaxIterations),
            _ => Err(Error::ModelFormat(format!("unknown status {s:?}"))),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct IterationRecord {
    pub t: usize,
    /// Slack after this iteration's view updates.
    pub xi: f64,
    /// Objective of the most violated tuple found at the start of the iteration.
    pub violation: f64,
    /// Primal objective after the view updates.
    pub primal: f64,
    /// Whether a new constraint entered the working set.
    pub added: bool,
    /// Largest increase of a view's restricted objective across its own
    /// update; non-positive up to solver tolerance.
    pub max_view_increase: f64,
}

#[derive(Clone, Debug)]
pub struct TrainState {
    pub weights: ViewWeights,
    pub working_set: WorkingSet,
    pub xi: f64,
    pub history: Vec<IterationRecord>,
    pub status: Status,
    /// Objective of the last most-violated tuple examined.
    pub last_violation: f64,
}

/// `1/2 Σ_j |w_j|^2 + C1 ξ + C2/2 Σ_{j<j'} Σ_i (w_j.x_i^j - w_j'.x_i^j')^2`
pub fn primal_objective(
    ds: &MultiViewDataset,
    weights: &ViewWeights,
    xi: f64,
    c1: f64,
    c2: f64,
) -> Result<f64> {
    Ok(smooth_objective(ds, weights, c2)? + c1 * xi)
}

/// The differentiable part of the primal: norms plus consistency.
pub fn smooth_objective(ds: &MultiViewDataset, weights: &ViewWeights, c2: f64) -> Result<f64> {
    let responses = view_responses(ds, weights)?;
    let norms: f64 = weights.iter().map(|w| dot(w, w)).sum();
    Ok(0.5 * norms + 0.5 * c2 * consistency(&responses))
}

fn consistency(responses: &[Vec<f64>]) -> f64 {
    let mut total = 0.0;
    for a in 0..responses.len() {
        for b in 0..a {
            total += responses[a]
                .iter()
                .zip(&responses[b])
                .map(|(x, y)| (x - y) * (x - y))
                .sum::<f64>();
        }
    }
    total
}

/// Gradient of [`smooth_objective`] with respect to `w_j`, `Ω_j w_j - β_j`.
pub fn smooth_gradient(
    ds: &MultiViewDataset,
    weights: &ViewWeights,
    c2: f64,
    omega: &OmegaFactor,
) -> Vec<f64> {
    let j = omega.view();
    let beta = crate::dual::coupling_vector(ds, j, weights, c2);
    omega
        .apply(weights.view(j))
        .iter()
        .zip(&beta)
        .map(|(a, b)| a - b)
        .collect()
}

/// `ξ = max(0, max_k [Δ_k - Σ_j w_j.ψ_jk])`, zero for an empty working set.
pub fn compute_slack(ws: &WorkingSet, weights: &ViewWeights) -> f64 {
    ws.raw_slack(weights).map_or(0.0, |s| s.max(0.0))
}

/// Primal objective over the working set with the slack left unclamped; the
/// quantity each view update minimizes exactly.
pub fn restricted_objective(
    ds: &MultiViewDataset,
    weights: &ViewWeights,
    ws: &WorkingSet,
    c1: f64,
    c2: f64,
) -> Result<f64> {
    let xi = ws.raw_slack(weights).unwrap_or(0.0);
    primal_objective(ds, weights, xi, c1, c2)
}

/// Runs the cutting-plane trainer from zero weights and an empty working set.
pub fn train(ds: &MultiViewDataset, cfg: &TrainConfig) -> Result<(Model, TrainState)> {
    train_with_working_set(ds, cfg, &[])
}

/// Like [`train`], with `initial` tuples placed in the working set up front.
pub fn train_with_working_set(
    ds: &MultiViewDataset,
    cfg: &TrainConfig,
    initial: &[LabelTuple],
) -> Result<(Model, TrainState)> {
    cfg.validate()?;
    ds.validate()?;
    cfg.measure.check_size(ds.n())?;
    let truth = ds.labels();
    let m = ds.m();

    let omegas = build_omegas(ds, cfg.c2)?;
    let joint = JointFactor::build(ds, cfg.c2)?;
    let mut weights = ViewWeights::zeros(&ds.dims());
    let mut ws = WorkingSet::anchored(ds);
    for y in initial {
        if y == truth {
            continue;
        }
        let loss = cfg.measure.loss_of(y, truth)?;
        ws.insert(ds, y.clone(), loss)?;
    }
    let mut responses = vec![vec![0.0; ds.n()]; m];
    let mut scores = vec![0.0; ds.n()];

    let mut history = Vec::new();
    let mut status = Status::MaxIterations;
    let mut last_violation = f64::NAN;
    // a working set that has not been optimized over yet needs a pass first
    let mut settled = ws.len() == 1;

    for t in 1..=cfg.max_iter {
        let found = most_violated_from_scores(&scores, cfg.measure, truth)?;
        last_violation = found.objective;
        let xi = compute_slack(&ws, &weights);
        let mut added = false;
        if found.objective <= xi + cfg.epsilon {
            if settled {
                status = Status::Converged;
                break;
            }
        } else {
            added = ws.insert(ds, found.tuple, found.loss)?;
            if !added {
                status = Status::Converged;
                break;
            }
        }

        let before = restricted_objective(ds, &weights, &ws, cfg.c1, cfg.c2)?;
        let mut max_view_increase = f64::NEG_INFINITY;
        for (j, omega) in omegas.iter().enumerate() {
            let sub = ViewSubproblem::build(ds, j, &weights, &ws, cfg.c2, omega)?;
            let warm = ws.alphas(j);
            let warm = (warm.iter().sum::<f64>() > 0.0).then_some(warm);
            let sol = solve_simplex_qp(&sub, cfg.c1, cfg.qp_tol, cfg.qp_max_iter, warm.as_deref())?;
            let w = sub.recover_weights(&sol.alpha)?;
            let pre = sub.primal_objective(omega, weights.view(j), cfg.c1);
            let post = sub.primal_objective(omega, &w, cfg.c1);
            max_view_increase = max_view_increase.max(post - pre);

            responses[j] = responses_for_view(ds, j, &w);
            weights.set_view(j, w);
            ws.set_alphas(j, &sol.alpha);
        }
        let after = restricted_objective(ds, &weights, &ws, cfg.c1, cfg.c2)?;
        settled = before - after <= cfg.qp_tol * after.abs().max(1.0);
        if settled {
            // view updates can stall at a kink of the shared max; finish jointly
            let warm: Vec<f64> = (0..ws.len())
                .map(|k| (0..m).map(|j| ws.alphas(j)[k]).sum::<f64>() / m as f64)
                .collect();
            let (joint_w, sol) =
                solve_joint(&joint, &ws, cfg.c1, cfg.qp_tol, cfg.qp_max_iter, Some(&warm))?;
            let polished = restricted_objective(ds, &joint_w, &ws, cfg.c1, cfg.c2)?;
            if polished < after {
                for (j, r) in responses.iter_mut().enumerate() {
                    *r = responses_for_view(ds, j, joint_w.view(j));
                    ws.set_alphas(j, &sol.alpha);
                }
                weights = joint_w;
            }
        }
        scores = sum_responses(&responses, ds.n());

        let xi = compute_slack(&ws, &weights);
        history.push(IterationRecord {
            t,
            xi,
            violation: found.objective,
            primal: primal_objective(ds, &weights, xi, cfg.c1, cfg.c2)?,
            added,
            max_view_increase,
        });
    }

    let xi = compute_slack(&ws, &weights);
    let model = Model {
        weights: weights.clone(),
        measure: cfg.measure,
        config: cfg.clone(),
        status,
        working_set: ws
            .constraints()
            .iter()
            .filter(|c| &c.tuple != truth)
            .map(|c| c.tuple.clone())
            .collect(),
    };
    let state = TrainState {
        weights,
        working_set: ws,
        xi,
        history,
        status,
        last_violation,
    };
    Ok((model, state))
}

#[derive(Clone, Debug, PartialEq)]
pub struct EvalReport {
    pub prediction: LabelTuple,
    pub table: ContingencyTable,
    pub loss: f64,
}

/// Predicts with `model` and scores the prediction against the dataset labels.
pub fn evaluate(ds: &MultiViewDataset, model: &Model, measure: Measure) -> Result<EvalReport> {
    model.weights.check_compatible(ds)?;
    let prediction = predict_from_scores(&crate::inference::point_scores(ds, &model.weights)?);
    let table = contingency(&prediction, ds.labels())?;
    let loss = measure.loss(&table)?;
    Ok(EvalReport {
        prediction,
        table,
        loss,
    })
}

/// Termination facts recomputed from a saved model and its training data.
#[derive(Clone, Debug, PartialEq)]
pub struct TerminationCheck {
    pub violation: f64,
    pub xi: f64,
    pub epsilon: f64,
}

impl TerminationCheck {
    pub fn holds(&self) -> bool {
        self.violation <= self.xi + self.epsilon
    }
}

/// Rebuilds the working set recorded in `model` and re-runs the separation
/// oracle at the model's weights.
pub fn check_termination(ds: &MultiViewDataset, model: &Model) -> Result<TerminationCheck> {
    model.weights.check_compatible(ds)?;
    let truth = ds.labels();
    let mut ws = WorkingSet::anchored(ds);
    for y in &model.working_set {
        if y == truth {
            continue;
        }
        let loss = model.measure.loss_of(y, truth)?;
        ws.insert(ds, y.clone(), loss)?;
    }
    let found = most_violated(ds, &model.weights, model.measure, truth)?;
    Ok(TerminationCheck {
        violation: found.objective,
        xi: compute_slack(&ws, &model.weights),
        epsilon: model.config.epsilon,
    })
}
