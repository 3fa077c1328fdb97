//! Seeded self-check suites that compare the fast paths against exhaustive
//! or independent references on small random instances.

use std::fmt;
use std::str::FromStr;

use nalgebra::{DMatrix, DVector};

use crate::data::MultiViewDataset;
use crate::dual::{solve_simplex_qp, OmegaFactor, ViewSubproblem, WorkingSet};
use crate::error::{Error, Result};
use crate::inference::{point_scores, predict, view_score, LabelTuple, ViewWeights};
use crate::measures::{contingency, Measure};
use crate::search::{most_violated, most_violated_bruteforce};
use crate::synthetic::SplitMix64;
use crate::trainer::{
    compute_slack, primal_objective, smooth_gradient, smooth_objective, train,
    train_with_working_set, Status, TrainConfig, TrainState,
};

pub const DEFAULT_SEED: u64 = 0x6d76_7065_7266;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Suite {
    ConstraintSearch,
    Prediction,
    Qp,
    Gradient,
    FullConstraint,
}

impl Suite {
    pub const ALL: [Suite; 5] = [
        Suite::ConstraintSearch,
        Suite::Prediction,
        Suite::Qp,
        Suite::Gradient,
        Suite::FullConstraint,
    ];

    pub fn name(&self) -> &'static str {
        match self {
            Suite::ConstraintSearch => "constraint-search",
            Suite::Prediction => "prediction",
            Suite::Qp => "qp",
            Suite::Gradient => "gradient",
            Suite::FullConstraint => "full-constraint",
        }
    }

    pub fn default_count(&self) -> usize {
        match self {
            Suite::ConstraintSearch => 200,
            Suite::Prediction => 100,
            Suite::Qp => 50,
            Suite::Gradient => 20,
            Suite::FullConstraint => 20,
        }
    }

    pub fn run(&self, count: usize, seed: u64) -> SuiteReport {
        let mut rng = SplitMix64::new(seed ^ (*self as u64).wrapping_mul(0x9E37_79B9));
        let mut report = SuiteReport::new(self.name());
        for case in 0..count {
            let outcome = match self {
                Suite::ConstraintSearch => search_case(&mut rng, case),
                Suite::Prediction => prediction_case(&mut rng),
                Suite::Qp => qp_case(&mut rng),
                Suite::Gradient => gradient_case(&mut rng),
                Suite::FullConstraint => full_constraint_case(&mut rng, case),
            };
            report.record(case, outcome);
        }
        report
    }
}

impl fmt::Display for Suite {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Suite {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Suite::ALL
            .into_iter()
            .find(|suite| suite.name() == s)
            .ok_or_else(|| Error::InvalidConfig(format!("unknown suite {s:?}")))
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct SuiteReport {
    pub name: &'static str,
    pub passed: usize,
    pub total: usize,
    pub failures: Vec<String>,
}

impl SuiteReport {
    fn new(name: &'static str) -> Self {
        SuiteReport {
            name,
            passed: 0,
            total: 0,
            failures: Vec::new(),
        }
    }

    fn record(&mut self, case: usize, outcome: std::result::Result<(), String>) {
        self.total += 1;
        match outcome {
            Ok(()) => self.passed += 1,
            Err(msg) => self.failures.push(format!("case {case}: {msg}")),
        }
    }

    pub fn ok(&self) -> bool {
        self.passed == self.total
    }
}

impl fmt::Display for SuiteReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{} {}: {}/{}",
            if self.ok() { "pass" } else { "FAIL" },
            self.name,
            self.passed,
            self.total
        )
    }
}

type Outcome = std::result::Result<(), String>;

fn check(cond: bool, msg: impl FnOnce() -> String) -> Outcome {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

fn usize_in(rng: &mut SplitMix64, lo: usize, hi: usize) -> usize {
    lo + rng.below((hi - lo + 1) as u64) as usize
}

/// Random labels containing both classes when `n >= 2`.
pub fn random_labels(rng: &mut SplitMix64, n: usize) -> Vec<i8> {
    let mut labels: Vec<i8> = (0..n).map(|_| if rng.below(2) == 0 { 1 } else { -1 }).collect();
    if n >= 2 && labels.iter().all(|&l| l == labels[0]) {
        let i = rng.below(n as u64) as usize;
        labels[i] = -labels[i];
    }
    labels
}

/// Dense uniform features in `[-2, 2)` with roughly one entry in five zeroed.
pub fn random_dataset(rng: &mut SplitMix64, n: usize, dims: &[usize]) -> MultiViewDataset {
    let views = dims
        .iter()
        .map(|&d| {
            (0..n)
                .map(|_| {
                    (0..d)
                        .map(|_| {
                            let v = rng.range(-2.0, 2.0);
                            if rng.below(5) == 0 {
                                0.0
                            } else {
                                v
                            }
                        })
                        .collect()
                })
                .collect()
        })
        .collect();
    let labels = random_labels(rng, n);
    MultiViewDataset::from_dense(views, labels).expect("generated dataset is valid")
}

pub fn random_weights(rng: &mut SplitMix64, dims: &[usize]) -> ViewWeights {
    ViewWeights::new(
        dims.iter()
            .map(|&d| (0..d).map(|_| rng.range(-1.0, 1.0)).collect())
            .collect(),
    )
    .expect("finite weights")
}

/// Cycles through all five measure families; `k` is drawn from `1..=n`.
pub fn measure_for_case(rng: &mut SplitMix64, case: usize, n: usize) -> Measure {
    match case % 5 {
        0 => Measure::ErrorRate,
        1 => Measure::F1,
        2 => Measure::Prbep,
        3 => Measure::PrecisionAtK(usize_in(rng, 1, n)),
        _ => Measure::RecallAtK(usize_in(rng, 1, n)),
    }
}

fn search_case(rng: &mut SplitMix64, case: usize) -> Outcome {
    let n = usize_in(rng, 1, 12);
    let m = usize_in(rng, 1, 3);
    let dims: Vec<usize> = (0..m).map(|_| usize_in(rng, 1, 4)).collect();
    let ds = random_dataset(rng, n, &dims);
    let w = random_weights(rng, &dims);
    let measure = measure_for_case(rng, case, n);
    let truth = ds.labels();
    match (
        most_violated(&ds, &w, measure, truth),
        most_violated_bruteforce(&ds, &w, measure, truth),
    ) {
        (Ok(fast), Ok(brute)) => {
            check((fast.objective - brute.objective).abs() <= 1e-12, || {
                format!(
                    "{measure} n={n}: sweep {} vs enumeration {}",
                    fast.objective, brute.objective
                )
            })?;
            check(&fast.tuple != truth, || "returned the truth".into())?;
            check(measure.admissible(&fast.table), || "inadmissible result".into())?;
            let table = contingency(&fast.tuple, truth).map_err(|e| e.to_string())?;
            check(table == fast.table, || "table does not match tuple".into())?;
            let scores = point_scores(&ds, &w).map_err(|e| e.to_string())?;
            check(ordering_is_optimal(&scores, &fast.tuple, truth), || {
                "a flipped point outscores a kept point of the same class".into()
            })
        }
        (Err(Error::EmptyAdmissibleSet(_)), Err(Error::EmptyAdmissibleSet(_))) => Ok(()),
        (a, b) => Err(format!("{measure}: sweep {a:?} vs enumeration {b:?}")),
    }
}

/// Within each true class, no point labeled `+1` scores strictly below a
/// point labeled `-1`.
pub fn ordering_is_optimal(scores: &[f64], tuple: &LabelTuple, truth: &LabelTuple) -> bool {
    for class in [1i8, -1] {
        let members = || (0..truth.len()).filter(move |&i| truth.get(i) == class);
        let lowest_pos = members()
            .filter(|&i| tuple.is_positive(i))
            .map(|i| scores[i])
            .fold(f64::INFINITY, f64::min);
        let highest_neg = members()
            .filter(|&i| !tuple.is_positive(i))
            .map(|i| scores[i])
            .fold(f64::NEG_INFINITY, f64::max);
        if lowest_pos < highest_neg {
            return false;
        }
    }
    true
}

fn prediction_case(rng: &mut SplitMix64) -> Outcome {
    let n = usize_in(rng, 1, 10);
    let m = usize_in(rng, 1, 3);
    let dims: Vec<usize> = (0..m).map(|_| usize_in(rng, 1, 4)).collect();
    let ds = random_dataset(rng, n, &dims);
    let w = random_weights(rng, &dims);
    let objective = |y: &LabelTuple| -> f64 {
        (0..m)
            .map(|j| view_score(&ds, j, w.view(j), y).expect("dims agree"))
            .sum()
    };
    let best = (0u32..(1 << n))
        .map(|mask| objective(&LabelTuple::from_signs((0..n).map(|i| mask >> i & 1 == 1))))
        .fold(f64::NEG_INFINITY, f64::max);
    let pred = predict(&ds, &w).map_err(|e| e.to_string())?;
    let got = objective(&pred);
    check((got - best).abs() <= 1e-12, || {
        format!("sign rule {got} vs enumeration {best}")
    })
}

/// Minimum of `1/2 a'Ha + c'a` over `a >= 0, sum a = total` by solving the
/// equality-constrained KKT system on every support and keeping the best
/// feasible solution. Supports with singular KKT matrices are skipped; their
/// minimum is attained on a smaller face.
pub fn simplex_qp_by_supports(h: &DMatrix<f64>, c: &DVector<f64>, total: f64) -> (Vec<f64>, f64) {
    let k = c.len();
    let mut best = (vec![0.0; k], f64::INFINITY);
    for mask in 1u32..(1 << k) {
        let support: Vec<usize> = (0..k).filter(|&i| mask >> i & 1 == 1).collect();
        let s = support.len();
        let mut a = DMatrix::<f64>::zeros(s + 1, s + 1);
        let mut b = DVector::<f64>::zeros(s + 1);
        for (r, &i) in support.iter().enumerate() {
            for (q, &jj) in support.iter().enumerate() {
                a[(r, q)] = h[(i, jj)];
            }
            a[(r, s)] = 1.0;
            a[(s, r)] = 1.0;
            b[r] = -c[i];
        }
        b[s] = total;
        let Some(x) = a.lu().solve(&b) else { continue };
        if x.iter().take(s).any(|v| !v.is_finite() || *v < -1e-12 * total) {
            continue;
        }
        let mut alpha = vec![0.0; k];
        for (r, &i) in support.iter().enumerate() {
            alpha[i] = x[r].max(0.0);
        }
        let av = DVector::from_column_slice(&alpha);
        let f = 0.5 * (av.transpose() * h * &av)[(0, 0)] + c.dot(&av);
        if f < best.1 {
            best = (alpha, f);
        }
    }
    best
}

/// Distinct random tuples other than the truth, at most `2^n - 1`.
pub fn random_working_set(
    rng: &mut SplitMix64,
    ds: &MultiViewDataset,
    measure: Measure,
    size: usize,
) -> WorkingSet {
    let n = ds.n();
    let size = size.min((1usize << n) - 1);
    let mut ws = WorkingSet::new();
    while ws.len() < size {
        let y = LabelTuple::from_signs((0..n).map(|_| rng.below(2) == 0));
        if &y == ds.labels() {
            continue;
        }
        // arbitrary losses are fine for the QP; use the error rate so every tuple qualifies
        let loss = match measure.loss_of(&y, ds.labels()) {
            Ok(l) => l,
            Err(_) => Measure::ErrorRate.loss_of(&y, ds.labels()).expect("lengths agree"),
        };
        ws.insert(ds, y, loss).expect("lengths agree");
    }
    ws
}

/// Everything the QP acceptance check needs from one solve.
#[derive(Clone, Debug)]
pub struct QpCertificate {
    pub min_alpha: f64,
    pub sum_error: f64,
    pub residual: f64,
    pub relative_gap: f64,
    pub stationarity: f64,
    pub objective: f64,
    pub oracle_objective: f64,
    pub c1: f64,
}

pub fn random_qp_certificate(rng: &mut SplitMix64) -> Result<QpCertificate> {
    let n = usize_in(rng, 3, 8);
    let dims = vec![usize_in(rng, 1, 4), usize_in(rng, 1, 4)];
    let ds = random_dataset(rng, n, &dims);
    let w = random_weights(rng, &dims);
    let measure = Measure::F1;
    let size = usize_in(rng, 1, 10);
    let ws = random_working_set(rng, &ds, measure, size);
    let c1 = rng.range(0.1, 10.0);
    let c2 = rng.range(0.0, 2.0);
    let j = usize_in(rng, 0, 1);
    let omega = OmegaFactor::build(&ds, j, c2)?;
    let sub = ViewSubproblem::build(&ds, j, &w, &ws, c2, &omega)?;
    let sol = solve_simplex_qp(&sub, c1, 1e-8, 10_000, None)?;
    let kkt = sub.kkt(&sol.alpha, c1);
    let wj = sub.recover_weights(&sol.alpha)?;
    let primal = sub.primal_objective(&omega, &wj, c1);
    let dual = sub.dual_objective(&sol.alpha);

    // Ω w - β - Σ α γ
    let ow = omega.apply(&wj);
    let mut resid: Vec<f64> = ow.iter().zip(&sub.beta).map(|(a, b)| a - b).collect();
    for (a, g) in sol.alpha.iter().zip(&sub.gammas) {
        for (r, gi) in resid.iter_mut().zip(g) {
            *r -= a * gi;
        }
    }
    let scale = ow.iter().fold(1.0f64, |s, v| s.max(v.abs()));
    let stationarity = resid.iter().fold(0.0f64, |s, v| s.max(v.abs())) / scale;

    let a = DVector::from_column_slice(&sol.alpha);
    let objective = 0.5 * (a.transpose() * &sub.gram * &a)[(0, 0)] + sub.linear.dot(&a);
    let (_, oracle_objective) = simplex_qp_by_supports(&sub.gram, &sub.linear, c1);
    Ok(QpCertificate {
        min_alpha: kkt.min_alpha,
        sum_error: kkt.sum_error,
        residual: kkt.residual,
        relative_gap: (primal - dual) / primal.abs().max(1.0),
        stationarity,
        objective,
        oracle_objective,
        c1,
    })
}

impl QpCertificate {
    pub fn failures(&self) -> Vec<String> {
        let mut out = Vec::new();
        if self.min_alpha < 0.0 {
            out.push(format!("negative alpha {}", self.min_alpha));
        }
        if self.sum_error > 1e-8 * self.c1 {
            out.push(format!("sum(alpha) off by {}", self.sum_error));
        }
        if self.residual > 1e-8 {
            out.push(format!("KKT residual {}", self.residual));
        }
        if self.relative_gap.abs() > 1e-6 {
            out.push(format!("duality gap {}", self.relative_gap));
        }
        if self.stationarity > 1e-10 {
            out.push(format!("stationarity residual {}", self.stationarity));
        }
        let scale = self.oracle_objective.abs().max(1.0);
        if self.objective - self.oracle_objective > 1e-8 * self.c1 + 1e-10 * scale
            || self.oracle_objective - self.objective > 1e-10 * scale
        {
            out.push(format!(
                "objective {} vs support enumeration {}",
                self.objective, self.oracle_objective
            ));
        }
        out
    }
}

fn qp_case(rng: &mut SplitMix64) -> Outcome {
    let cert = random_qp_certificate(rng).map_err(|e| e.to_string())?;
    let failures = cert.failures();
    check(failures.is_empty(), || failures.join("; "))
}

/// Relative difference between central finite differences of the smooth
/// objective and the analytic gradient `Ω_j w_j - β_j`, worst over views.
pub fn random_gradient_error(rng: &mut SplitMix64) -> Result<f64> {
    let n = usize_in(rng, 2, 10);
    let m = usize_in(rng, 2, 4);
    let dims: Vec<usize> = (0..m).map(|_| usize_in(rng, 1, 5)).collect();
    let ds = random_dataset(rng, n, &dims);
    let w = random_weights(rng, &dims);
    let c2 = rng.range(0.05, 3.0);
    let mut worst = 0.0f64;
    for j in 0..m {
        let omega = OmegaFactor::build(&ds, j, c2)?;
        let analytic = smooth_gradient(&ds, &w, c2, &omega);
        let h = 1e-5;
        let mut num = 0.0f64;
        let mut den = 0.0f64;
        for (k, an) in analytic.iter().enumerate() {
            let mut plus = w.clone();
            let mut minus = w.clone();
            let mut v = w.view(j).to_vec();
            v[k] += h;
            plus.set_view(j, v.clone());
            v[k] -= 2.0 * h;
            minus.set_view(j, v);
            let fd = (smooth_objective(&ds, &plus, c2)? - smooth_objective(&ds, &minus, c2)?) / (2.0 * h);
            num = num.max((fd - an).abs());
            den = den.max(an.abs());
        }
        worst = worst.max(num / den.max(f64::MIN_POSITIVE));
    }
    Ok(worst)
}

fn gradient_case(rng: &mut SplitMix64) -> Outcome {
    let err = random_gradient_error(rng).map_err(|e| e.to_string())?;
    check(err <= 1e-5, || format!("relative gradient error {err:e}"))
}

/// Every admissible tuple other than the truth.
pub fn all_admissible(ds: &MultiViewDataset, measure: Measure) -> Vec<LabelTuple> {
    let n = ds.n();
    (0u64..(1u64 << n))
        .map(|mask| LabelTuple::from_signs((0..n).map(|i| mask >> i & 1 == 1)))
        .filter(|y| y != ds.labels())
        .filter(|y| {
            contingency(y, ds.labels())
                .map(|t| measure.admissible(&t))
                .unwrap_or(false)
        })
        .collect()
}

/// Primal objective with the slack taken over the final working set.
pub fn final_objective(ds: &MultiViewDataset, cfg: &TrainConfig, state: &TrainState) -> Result<f64> {
    let xi = compute_slack(&state.working_set, &state.weights);
    primal_objective(ds, &state.weights, xi, cfg.c1, cfg.c2)
}

/// Cutting-plane objective, full-enumeration objective, and the
/// cutting-plane run's status.
pub fn cutting_plane_vs_full(
    ds: &MultiViewDataset,
    cfg: &TrainConfig,
) -> Result<(f64, f64, Status)> {
    let (_, cp) = train(ds, cfg)?;
    let everything = all_admissible(ds, cfg.measure);
    let full_cfg = TrainConfig {
        max_iter: 100_000,
        ..cfg.clone()
    };
    let (_, full) = train_with_working_set(ds, &full_cfg, &everything)?;
    Ok((
        final_objective(ds, cfg, &cp)?,
        final_objective(ds, &full_cfg, &full)?,
        cp.status,
    ))
}

pub fn random_full_constraint_case(rng: &mut SplitMix64, case: usize) -> Result<(f64, f64, Status)> {
    let n = usize_in(rng, 4, 8);
    let dims = vec![usize_in(rng, 1, 2), usize_in(rng, 1, 2)];
    let ds = random_dataset(rng, n, &dims);
    let measure = measure_for_case(rng, case, n);
    let cfg = TrainConfig {
        c1: 1.0,
        c2: 0.5,
        max_iter: 1000,
        epsilon: 1e-4,
        measure,
        ..TrainConfig::default()
    };
    cutting_plane_vs_full(&ds, &cfg)
}

fn full_constraint_case(rng: &mut SplitMix64, case: usize) -> Outcome {
    match random_full_constraint_case(rng, case) {
        Ok((cp, full, status)) => {
            let rel = (cp - full).abs() / full.abs().max(f64::MIN_POSITIVE);
            check(status == Status::Converged && rel <= 1e-3, || {
                format!("cutting plane {cp} vs full {full} (rel {rel:e}, {status})")
            })
        }
        Err(Error::EmptyAdmissibleSet(_)) => Ok(()),
        Err(e) => Err(e.to_string()),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn suites_parse_by_name() {
        for s in Suite::ALL {
            assert_eq!(s.name().parse::<Suite>().unwrap(), s);
        }
        assert!("nope".parse::<Suite>().is_err());
    }

    #[test]
    fn support_enumeration_on_known_problem() {
        // min 1/2 (a^2 + 2 b^2) + a, a + b = 1 -> a = 1/3, b = 2/3
        let h = DMatrix::from_row_slice(2, 2, &[1.0, 0.0, 0.0, 2.0]);
        let c = DVector::from_column_slice(&[1.0, 0.0]);
        let (alpha, f) = simplex_qp_by_supports(&h, &c, 1.0);
        assert!((alpha[0] - 1.0 / 3.0).abs() < 1e-12);
        assert!((alpha[1] - 2.0 / 3.0).abs() < 1e-12);
        assert!((f - (0.5 * (1.0 / 9.0 + 8.0 / 9.0) + 1.0 / 3.0)).abs() < 1e-12);
    }

    #[test]
    fn small_suite_runs_pass() {
        for s in [Suite::ConstraintSearch, Suite::Prediction, Suite::Qp, Suite::Gradient] {
            let r = s.run(10, 42);
            assert!(r.ok(), "{r}: {:?}", r.failures);
        }
    }
}
