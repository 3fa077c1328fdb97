//! Joint feature map, per-view discriminants and the combined prediction rule.
//!
//! The joint feature map of view `j` against a label tuple `y` is
//! `psi_j(y) = sum_i y_i * x_i^j`, and the view discriminant is
//! `w_j . psi_j(y)`. Summing over views, the combined score of a tuple is
//! `sum_i y_i * s_i` with per-point scores `s_i = sum_j w_j . x_i^j`, so the
//! argmax over all `2^n` tuples decouples into a per-point sign rule.

use std::fmt;

use crate::data::MultiViewDataset;
use crate::error::{Error, Result};

/// A candidate labeling of all `n` points, each entry exactly `+1` or `-1`.
#[derive(Clone, PartialEq, Eq, Hash)]
pub struct LabelTuple(Vec<i8>);

impl LabelTuple {
    pub fn new(values: Vec<i8>) -> Result<Self> {
        if let Some(row) = values.iter().position(|&v| v != 1 && v != -1) {
            return Err(Error::InvalidLabel {
                row,
                value: values[row].to_string(),
            });
        }
        Ok(LabelTuple(values))
    }

    /// Builds a tuple where `true` maps to `+1`.
    pub fn from_signs<I: IntoIterator<Item = bool>>(signs: I) -> Self {
        LabelTuple(
            signs
                .into_iter()
                .map(|p| if p { 1 } else { -1 })
                .collect(),
        )
    }

    pub fn all_positive(n: usize) -> Self {
        LabelTuple(vec![1; n])
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn as_slice(&self) -> &[i8] {
        &self.0
    }

    pub fn iter(&self) -> impl Iterator<Item = i8> + '_ {
        self.0.iter().copied()
    }

    pub fn get(&self, i: usize) -> i8 {
        self.0[i]
    }

    pub fn is_positive(&self, i: usize) -> bool {
        self.0[i] > 0
    }

    pub fn flip(&self) -> Self {
        LabelTuple(self.0.iter().map(|v| -v).collect())
    }

    pub fn count_positive(&self) -> usize {
        self.0.iter().filter(|&&v| v > 0).count()
    }

    /// Compact `+`/`-` string, one character per point.
    pub fn to_sign_string(&self) -> String {
        self.0.iter().map(|&v| if v > 0 { '+' } else { '-' }).collect()
    }

    pub fn from_sign_string(s: &str) -> Result<Self> {
        s.chars()
            .enumerate()
            .map(|(row, c)| match c {
                '+' => Ok(1),
                '-' => Ok(-1),
                other => Err(Error::InvalidLabel {
                    row,
                    value: other.to_string(),
                }),
            })
            .collect::<Result<Vec<i8>>>()
            .map(LabelTuple)
    }

    /// `sum_i y_i * scores_i`.
    pub fn dot_scores(&self, scores: &[f64]) -> f64 {
        self.0
            .iter()
            .zip(scores)
            .map(|(&y, &s)| f64::from(y) * s)
            .sum()
    }
}

impl fmt::Debug for LabelTuple {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "LabelTuple({})", self.to_sign_string())
    }
}

impl fmt::Display for LabelTuple {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.to_sign_string())
    }
}

/// One weight vector per view.
#[derive(Clone, Debug, PartialEq)]
pub struct ViewWeights(Vec<Vec<f64>>);

impl ViewWeights {
    pub fn new(weights: Vec<Vec<f64>>) -> Result<Self> {
        for (j, w) in weights.iter().enumerate() {
            if w.iter().any(|v| !v.is_finite()) {
                return Err(Error::InvalidConfig(format!(
                    "non-finite weight in view {j}"
                )));
            }
        }
        Ok(ViewWeights(weights))
    }

    pub fn zeros(dims: &[usize]) -> Self {
        ViewWeights(dims.iter().map(|&d| vec![0.0; d]).collect())
    }

    pub fn num_views(&self) -> usize {
        self.0.len()
    }

    pub fn view(&self, j: usize) -> &[f64] {
        &self.0[j]
    }

    pub fn set_view(&mut self, j: usize, w: Vec<f64>) {
        self.0[j] = w;
    }

    pub fn dims(&self) -> Vec<usize> {
        self.0.iter().map(Vec::len).collect()
    }

    pub fn iter(&self) -> impl Iterator<Item = &[f64]> {
        self.0.iter().map(Vec::as_slice)
    }

    /// Errors unless the weights pair with `ds` view for view.
    pub fn check_compatible(&self, ds: &MultiViewDataset) -> Result<()> {
        if self.dims() != ds.dims() {
            return Err(Error::DimensionMismatch(format!(
                "weights have dims {:?}, dataset has {:?}",
                self.dims(),
                ds.dims()
            )));
        }
        Ok(())
    }
}

fn check_tuple_len(ds: &MultiViewDataset, y: &LabelTuple) -> Result<()> {
    if y.len() != ds.n() {
        return Err(Error::LengthMismatch {
            expected: ds.n(),
            found: y.len(),
        });
    }
    Ok(())
}

fn check_view_dim(ds: &MultiViewDataset, j: usize, w: &[f64]) -> Result<()> {
    if j >= ds.m() {
        return Err(Error::DimensionMismatch(format!(
            "view index {j} out of range for {} views",
            ds.m()
        )));
    }
    if w.len() != ds.dim(j) {
        return Err(Error::DimensionMismatch(format!(
            "view {j} weight has length {}, expected {}",
            w.len(),
            ds.dim(j)
        )));
    }
    Ok(())
}

/// Joint feature map `sum_i y_i * x_i^j` of view `j`.
pub fn psi(ds: &MultiViewDataset, j: usize, y: &LabelTuple) -> Result<Vec<f64>> {
    check_tuple_len(ds, y)?;
    if j >= ds.m() {
        return Err(Error::DimensionMismatch(format!(
            "view index {j} out of range for {} views",
            ds.m()
        )));
    }
    let mut out = vec![0.0; ds.dim(j)];
    for (row, yi) in ds.view(j).rows().iter().zip(y.iter()) {
        row.add_scaled_to(&mut out, f64::from(yi));
    }
    Ok(out)
}

/// `w_j . psi_j(y)`.
pub fn view_score(ds: &MultiViewDataset, j: usize, w: &[f64], y: &LabelTuple) -> Result<f64> {
    check_view_dim(ds, j, w)?;
    let p = psi(ds, j, y)?;
    Ok(dot(w, &p))
}

/// Per-view responses `w_j . x_i^j`, indexed `[j][i]`.
pub fn view_responses(ds: &MultiViewDataset, weights: &ViewWeights) -> Result<Vec<Vec<f64>>> {
    weights.check_compatible(ds)?;
    Ok((0..ds.m())
        .map(|j| responses_for_view(ds, j, weights.view(j)))
        .collect())
}

pub(crate) fn responses_for_view(ds: &MultiViewDataset, j: usize, w: &[f64]) -> Vec<f64> {
    ds.view(j).rows().iter().map(|row| row.dot(w)).collect()
}

/// Aggregate per-point scores `s_i = sum_j w_j . x_i^j`.
pub fn point_scores(ds: &MultiViewDataset, weights: &ViewWeights) -> Result<Vec<f64>> {
    let responses = view_responses(ds, weights)?;
    Ok(sum_responses(&responses, ds.n()))
}

pub(crate) fn sum_responses(responses: &[Vec<f64>], n: usize) -> Vec<f64> {
    let mut scores = vec![0.0; n];
    for r in responses {
        for (s, v) in scores.iter_mut().zip(r) {
            *s += v;
        }
    }
    scores
}

/// Sign rule on precomputed scores; a zero score maps to `+1`.
pub fn predict_from_scores(scores: &[f64]) -> LabelTuple {
    LabelTuple::from_signs(scores.iter().map(|&s| s >= 0.0))
}

/// The combined multivariate prediction: the tuple maximizing
/// `sum_j w_j . psi_j(y)` over all of `{+1,-1}^n`.
pub fn predict(ds: &MultiViewDataset, weights: &ViewWeights) -> Result<LabelTuple> {
    Ok(predict_from_scores(&point_scores(ds, weights)?))
}

pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}
