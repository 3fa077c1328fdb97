//! Separation oracle: the most violated label tuple.
//!
//! The oracle maximizes `loss(y') + sum_j w_j.psi_j(y') - sum_j w_j.psi_j(y)`
//! over admissible `y' != y`. The loss depends on `y'` only through its
//! contingency table, and for a fixed table the score part is maximized by
//! flipping the lowest-scoring true positives and the highest-scoring true
//! negatives. Sorting each class once and sweeping all `(fn, fp)` pairs with
//! prefix sums gives the exact maximizer in `O(n log n + P*N)`.

use std::cmp::Ordering;

use rayon::prelude::*;

use crate::data::MultiViewDataset;
use crate::error::{Error, Result};
use crate::inference::{point_scores, view_score, LabelTuple, ViewWeights};
use crate::measures::{contingency, ContingencyTable, Measure};

/// Largest `n` accepted by [`most_violated_bruteforce`].
pub const BRUTEFORCE_LIMIT: usize = 20;

/// Grids smaller than this are swept on the calling thread.
const PARALLEL_GRID: usize = 1 << 14;

#[derive(Clone, Debug, PartialEq)]
pub struct SearchResult {
    pub tuple: LabelTuple,
    pub table: ContingencyTable,
    pub loss: f64,
    /// `loss + score(tuple) - score(truth)`, the amount by which the
    /// constraint for `tuple` is violated at zero slack.
    pub objective: f64,
}

impl SearchResult {
    /// Violation in excess of the slack `xi`; positive means the constraint
    /// is not yet satisfied.
    pub fn violation(&self, xi: f64) -> f64 {
        self.objective - xi
    }
}

#[derive(Clone, Copy, Debug)]
struct Candidate {
    fn_: usize,
    fp: usize,
    loss: f64,
    objective: f64,
}

impl Candidate {
    /// Higher objective wins; ties go to fewer flips, then fewer flipped positives.
    fn beats(&self, other: &Candidate) -> bool {
        match self.objective.partial_cmp(&other.objective) {
            Some(Ordering::Greater) => true,
            Some(Ordering::Less) => false,
            _ => (self.fn_ + self.fp, self.fn_) < (other.fn_ + other.fp, other.fn_),
        }
    }
}

fn pick(a: Option<Candidate>, b: Option<Candidate>) -> Option<Candidate> {
    match (a, b) {
        (Some(x), Some(y)) => Some(if y.beats(&x) { y } else { x }),
        (x, None) => x,
        (None, y) => y,
    }
}

/// Most violated tuple for the current weights.
pub fn most_violated(
    ds: &MultiViewDataset,
    weights: &ViewWeights,
    measure: Measure,
    truth: &LabelTuple,
) -> Result<SearchResult> {
    let scores = point_scores(ds, weights)?;
    most_violated_from_scores(&scores, measure, truth)
}

/// Same as [`most_violated`] on precomputed per-point scores.
pub fn most_violated_from_scores(
    scores: &[f64],
    measure: Measure,
    truth: &LabelTuple,
) -> Result<SearchResult> {
    sweep(scores, measure, truth, PARALLEL_GRID)
}

fn sweep(
    scores: &[f64],
    measure: Measure,
    truth: &LabelTuple,
    parallel_grid: usize,
) -> Result<SearchResult> {
    if scores.len() != truth.len() {
        return Err(Error::LengthMismatch {
            expected: truth.len(),
            found: scores.len(),
        });
    }
    let by_score_desc = |a: &usize, b: &usize| {
        scores[*b]
            .partial_cmp(&scores[*a])
            .unwrap_or(Ordering::Equal)
            .then(a.cmp(b))
    };
    let mut pos: Vec<usize> = (0..truth.len()).filter(|&i| truth.is_positive(i)).collect();
    let mut neg: Vec<usize> = (0..truth.len()).filter(|&i| !truth.is_positive(i)).collect();
    pos.sort_by(by_score_desc);
    neg.sort_by(by_score_desc);
    let (p, n_neg) = (pos.len(), neg.len());

    // low_pos[f]: sum of the f lowest positive-class scores
    // top_neg[f]: sum of the f highest negative-class scores
    let mut low_pos = vec![0.0; p + 1];
    for f in 1..=p {
        low_pos[f] = low_pos[f - 1] + scores[pos[p - f]];
    }
    let mut top_neg = vec![0.0; n_neg + 1];
    for f in 1..=n_neg {
        top_neg[f] = top_neg[f - 1] + scores[neg[f - 1]];
    }

    let eval = |fn_: usize, fp: usize| -> Result<Option<Candidate>> {
        if fn_ == 0 && fp == 0 {
            return Ok(None);
        }
        let table = ContingencyTable::new(p - fn_, fp, fn_, n_neg - fp);
        if !measure.admissible(&table) {
            return Ok(None);
        }
        let loss = measure.loss(&table)?;
        Ok(Some(Candidate {
            fn_,
            fp,
            loss,
            objective: loss + 2.0 * (top_neg[fp] - low_pos[fn_]),
        }))
    };

    let row = |fn_: usize| -> Result<Option<Candidate>> {
        match measure {
            Measure::ErrorRate | Measure::F1 => {
                let mut best = None;
                for fp in 0..=n_neg {
                    best = pick(best, eval(fn_, fp)?);
                }
                Ok(best)
            }
            Measure::Prbep => {
                if fn_ <= n_neg {
                    eval(fn_, fn_)
                } else {
                    Ok(None)
                }
            }
            Measure::PrecisionAtK(k) | Measure::RecallAtK(k) => {
                // tp + fp = k with tp = p - fn
                match (k + fn_).checked_sub(p) {
                    Some(fp) if fp <= n_neg => eval(fn_, fp),
                    _ => Ok(None),
                }
            }
        }
    };

    let best = if (p + 1) * (n_neg + 1) >= parallel_grid {
        (0..=p)
            .into_par_iter()
            .map(row)
            .try_reduce(|| None, |a, b| Ok(pick(a, b)))?
    } else {
        let mut best = None;
        for fn_ in 0..=p {
            best = pick(best, row(fn_)?);
        }
        best
    };
    let best = best.ok_or_else(|| Error::EmptyAdmissibleSet(measure.to_string()))?;

    let mut values = truth.as_slice().to_vec();
    for &i in &pos[p - best.fn_..] {
        values[i] = -1;
    }
    for &i in &neg[..best.fp] {
        values[i] = 1;
    }
    Ok(SearchResult {
        tuple: LabelTuple::new(values)?,
        table: ContingencyTable::new(p - best.fn_, best.fp, best.fn_, n_neg - best.fp),
        loss: best.loss,
        objective: best.objective,
    })
}

/// Exhaustive enumeration of every admissible `y' != truth`. Used as the
/// reference for [`most_violated`]; limited to `n <= 20`.
pub fn most_violated_bruteforce(
    ds: &MultiViewDataset,
    weights: &ViewWeights,
    measure: Measure,
    truth: &LabelTuple,
) -> Result<SearchResult> {
    let n = ds.n();
    if n > BRUTEFORCE_LIMIT {
        return Err(Error::TooLarge {
            n,
            limit: BRUTEFORCE_LIMIT,
        });
    }
    weights.check_compatible(ds)?;
    if truth.len() != n {
        return Err(Error::LengthMismatch {
            expected: n,
            found: truth.len(),
        });
    }
    let total_score = |y: &LabelTuple| -> Result<f64> {
        let mut s = 0.0;
        for j in 0..ds.m() {
            s += view_score(ds, j, weights.view(j), y)?;
        }
        Ok(s)
    };
    let base = total_score(truth)?;
    let mut best: Option<SearchResult> = None;
    for mask in 0u64..(1u64 << n) {
        let y = LabelTuple::from_signs((0..n).map(|i| mask >> i & 1 == 1));
        if &y == truth {
            continue;
        }
        let table = contingency(&y, truth)?;
        if !measure.admissible(&table) {
            continue;
        }
        let loss = measure.loss(&table)?;
        let objective = loss + total_score(&y)? - base;
        if best.as_ref().is_none_or(|b| objective > b.objective) {
            best = Some(SearchResult {
                tuple: y,
                table,
                loss,
                objective,
            });
        }
    }
    best.ok_or_else(|| Error::EmptyAdmissibleSet(measure.to_string()))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ds4() -> MultiViewDataset {
        MultiViewDataset::from_dense(
            vec![
                vec![vec![1.0, 0.0], vec![0.5, 1.0], vec![-1.0, 0.2], vec![0.0, -2.0]],
                vec![vec![0.3], vec![-0.7], vec![1.1], vec![0.4]],
            ],
            vec![1, 1, -1, -1],
        )
        .unwrap()
    }

    #[test]
    fn zero_weights_error_rate_flips_everything() {
        let ds = ds4();
        let w = ViewWeights::zeros(&ds.dims());
        let r = most_violated(&ds, &w, Measure::ErrorRate, ds.labels()).unwrap();
        assert_eq!(r.tuple, ds.labels().flip());
        assert_eq!(r.objective, 1.0);
        let b = most_violated_bruteforce(&ds, &w, Measure::ErrorRate, ds.labels()).unwrap();
        assert_eq!(b.objective, 1.0);
    }

    #[test]
    fn all_positive_truth() {
        let ds = MultiViewDataset::from_dense(vec![vec![vec![1.0], vec![2.0], vec![3.0]]], vec![1, 1, 1])
            .unwrap();
        let w = ViewWeights::zeros(&ds.dims());
        let r = most_violated(&ds, &w, Measure::ErrorRate, ds.labels()).unwrap();
        assert_eq!(r.tuple.as_slice(), &[-1, -1, -1]);
        assert_eq!(r.objective, 1.0);
    }

    #[test]
    fn single_point_search_space() {
        let ds = MultiViewDataset::from_dense(vec![vec![vec![1.0]]], vec![1]).unwrap();
        let w = ViewWeights::new(vec![vec![0.25]]).unwrap();
        let b = most_violated_bruteforce(&ds, &w, Measure::ErrorRate, ds.labels()).unwrap();
        assert_eq!(b.tuple.as_slice(), &[-1]);
        assert_eq!(b.objective, 1.0 - 0.5);
        let r = most_violated(&ds, &w, Measure::ErrorRate, ds.labels()).unwrap();
        assert_eq!(r.objective, b.objective);
    }

    #[test]
    fn empty_admissible_set() {
        // one class only: PRBEP needs a false positive and a false negative
        let ds = MultiViewDataset::from_dense(vec![vec![vec![1.0], vec![2.0]]], vec![1, 1]).unwrap();
        let w = ViewWeights::zeros(&ds.dims());
        assert!(matches!(
            most_violated(&ds, &w, Measure::Prbep, ds.labels()),
            Err(Error::EmptyAdmissibleSet(_))
        ));
        assert!(matches!(
            most_violated_bruteforce(&ds, &w, Measure::Prbep, ds.labels()),
            Err(Error::EmptyAdmissibleSet(_))
        ));
        assert!(matches!(
            most_violated(&ds, &w, Measure::PrecisionAtK(3), ds.labels()),
            Err(Error::EmptyAdmissibleSet(_))
        ));
    }

    #[test]
    fn bruteforce_guard() {
        let n = BRUTEFORCE_LIMIT + 1;
        let ds = MultiViewDataset::from_dense(
            vec![(0..n).map(|i| vec![i as f64]).collect()],
            (0..n).map(|i| if i % 2 == 0 { 1 } else { -1 }).collect(),
        )
        .unwrap();
        let w = ViewWeights::zeros(&ds.dims());
        assert!(matches!(
            most_violated_bruteforce(&ds, &w, Measure::F1, ds.labels()),
            Err(Error::TooLarge { .. })
        ));
    }

    #[test]
    fn matches_bruteforce_on_fixed_instance() {
        let ds = ds4();
        let w = ViewWeights::new(vec![vec![0.4, -0.3], vec![0.9]]).unwrap();
        for m in [
            Measure::ErrorRate,
            Measure::F1,
            Measure::Prbep,
            Measure::PrecisionAtK(1),
            Measure::PrecisionAtK(3),
            Measure::RecallAtK(2),
        ] {
            let r = most_violated(&ds, &w, m, ds.labels()).unwrap();
            let b = most_violated_bruteforce(&ds, &w, m, ds.labels()).unwrap();
            assert!((r.objective - b.objective).abs() <= 1e-12, "{m}");
            assert_ne!(&r.tuple, ds.labels());
            assert!(m.admissible(&r.table));
            assert_eq!(contingency(&r.tuple, ds.labels()).unwrap(), r.table);
        }
    }

    #[test]
    fn tie_break_prefers_fewest_flips() {
        // zero scores and F1: loss 1 exactly when the lone positive is flipped,
        // for any number of flipped negatives
        let ds = MultiViewDataset::from_dense(vec![vec![vec![1.0], vec![1.0], vec![1.0]]], vec![1, -1, -1])
            .unwrap();
        let w = ViewWeights::zeros(&ds.dims());
        let r = most_violated(&ds, &w, Measure::F1, ds.labels()).unwrap();
        assert_eq!(r.objective, 1.0);
        assert_eq!((r.table.fn_, r.table.fp), (1, 0));
    }

    #[test]
    fn large_grid_goes_parallel_and_agrees() {
        let n = 400;
        let scores: Vec<f64> = (0..n).map(|i| ((i * 37 % 101) as f64 - 50.0) / 25.0).collect();
        let truth = LabelTuple::from_signs((0..n).map(|i| i % 3 != 0));
        let r = sweep(&scores, Measure::F1, &truth, 0).unwrap();
        let s = sweep(&scores, Measure::F1, &truth, usize::MAX).unwrap();
        assert_eq!(r, s);
        let direct = r.loss + r.tuple.dot_scores(&scores) - truth.dot_scores(&scores);
        assert!((direct - r.objective).abs() < 1e-9);
    }
}
