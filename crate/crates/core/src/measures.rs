//! Contingency tables and the losses derived from them.
//!
//! Every supported loss is a function of `(tp, fp, fn, tn)` and lies in
//! `[0, 1]`. PRBEP and the `@k` measures only make sense on a subset of
//! tables; [`Measure::admissible`] describes that subset and the constraint
//! search only ever visits admissible tables.

use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::inference::LabelTuple;

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash)]
pub struct ContingencyTable {
    pub tp: usize,
    pub fp: usize,
    pub fn_: usize,
    pub tn: usize,
}

impl ContingencyTable {
    pub fn new(tp: usize, fp: usize, fn_: usize, tn: usize) -> Self {
        ContingencyTable { tp, fp, fn_, tn }
    }

    pub fn n(&self) -> usize {
        self.tp + self.fp + self.fn_ + self.tn
    }

    /// Points whose truth is `+1`.
    pub fn actual_positive(&self) -> usize {
        self.tp + self.fn_
    }

    pub fn predicted_positive(&self) -> usize {
        self.tp + self.fp
    }
}

impl fmt::Display for ContingencyTable {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "tp={} fp={} fn={} tn={}",
            self.tp, self.fp, self.fn_, self.tn
        )
    }
}

/// Counts agreement between a prediction and the truth.
pub fn contingency(pred: &LabelTuple, truth: &LabelTuple) -> Result<ContingencyTable> {
    if pred.len() != truth.len() {
        return Err(Error::LengthMismatch {
            expected: truth.len(),
            found: pred.len(),
        });
    }
    let mut t = ContingencyTable::default();
    for (p, y) in pred.iter().zip(truth.iter()) {
        match (p > 0, y > 0) {
            (true, true) => t.tp += 1,
            (true, false) => t.fp += 1,
            (false, true) => t.fn_ += 1,
            (false, false) => t.tn += 1,
        }
    }
    Ok(t)
}

/// A multivariate performance measure, named on the command line as
/// `err`, `f1`, `prbep`, `prec@K` or `rec@K`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Measure {
    ErrorRate,
    F1,
    Prbep,
    PrecisionAtK(usize),
    RecallAtK(usize),
}

impl Measure {
    pub const ALL_NAMES: &'static str = "err | f1 | prbep | prec@K | rec@K";

    /// Whether `table` lies in the feasible set of this measure.
    pub fn admissible(&self, table: &ContingencyTable) -> bool {
        match *self {
            Measure::ErrorRate | Measure::F1 => true,
            Measure::Prbep => table.fp == table.fn_,
            Measure::PrecisionAtK(k) | Measure::RecallAtK(k) => table.tp + table.fp == k,
        }
    }

    /// Loss `1 - score` for this measure.
    ///
    /// Ratios of the form `0/0` (no positives anywhere for F1 and PRBEP, no
    /// actual positives for recall) count as a perfect score.
    pub fn loss(&self, table: &ContingencyTable) -> Result<f64> {
        if !self.admissible(table) {
            return Err(Error::Inadmissible {
                measure: self.to_string(),
                table: table.to_string(),
            });
        }
        let ContingencyTable { tp, fp, fn_, .. } = *table;
        let n = table.n();
        let ratio = |num: usize, den: usize| num as f64 / den as f64;
        let loss = match *self {
            Measure::ErrorRate => {
                if n == 0 {
                    return Err(self.degenerate(table));
                }
                ratio(fp + fn_, n)
            }
            Measure::F1 => {
                if tp + fp + fn_ == 0 {
                    0.0
                } else {
                    1.0 - ratio(2 * tp, 2 * tp + fp + fn_)
                }
            }
            Measure::Prbep => {
                if tp + fp == 0 {
                    0.0
                } else {
                    1.0 - ratio(tp, tp + fp)
                }
            }
            Measure::PrecisionAtK(k) => {
                if k == 0 {
                    return Err(self.degenerate(table));
                }
                1.0 - ratio(tp, k)
            }
            Measure::RecallAtK(_) => {
                if tp + fn_ == 0 {
                    0.0
                } else {
                    1.0 - ratio(tp, tp + fn_)
                }
            }
        };
        Ok(loss)
    }

    /// Loss of `pred` against `truth`.
    pub fn loss_of(&self, pred: &LabelTuple, truth: &LabelTuple) -> Result<f64> {
        self.loss(&contingency(pred, truth)?)
    }

    /// Errors if this measure cannot be used on a dataset of `n` points.
    pub fn check_size(&self, n: usize) -> Result<()> {
        match *self {
            Measure::PrecisionAtK(k) | Measure::RecallAtK(k) if k > n => Err(
                Error::InvalidMeasure(format!("{self} needs k <= n, but n = {n}")),
            ),
            _ => Ok(()),
        }
    }

    fn degenerate(&self, table: &ContingencyTable) -> Error {
        Error::DegenerateTable {
            measure: self.to_string(),
            table: table.to_string(),
        }
    }
}

impl fmt::Display for Measure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Measure::ErrorRate => f.write_str("err"),
            Measure::F1 => f.write_str("f1"),
            Measure::Prbep => f.write_str("prbep"),
            Measure::PrecisionAtK(k) => write!(f, "prec@{k}"),
            Measure::RecallAtK(k) => write!(f, "rec@{k}"),
        }
    }
}

impl FromStr for Measure {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let bad = || Error::InvalidMeasure(format!("{s:?}, expected one of {}", Measure::ALL_NAMES));
        match s {
            "err" => return Ok(Measure::ErrorRate),
            "f1" => return Ok(Measure::F1),
            "prbep" => return Ok(Measure::Prbep),
            _ => {}
        }
        let (name, k) = s.split_once('@').ok_or_else(bad)?;
        let k: usize = k.parse().map_err(|_| bad())?;
        if k == 0 {
            return Err(bad());
        }
        match name {
            "prec" => Ok(Measure::PrecisionAtK(k)),
            "rec" => Ok(Measure::RecallAtK(k)),
            _ => Err(bad()),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn lt(v: &[i8]) -> LabelTuple {
        LabelTuple::new(v.to_vec()).unwrap()
    }

    #[test]
    fn contingency_examples() {
        let truth = lt(&[1, 1, -1, -1]);
        assert_eq!(
            contingency(&lt(&[1, -1, 1, -1]), &truth).unwrap(),
            ContingencyTable::new(1, 1, 1, 1)
        );
        assert_eq!(
            contingency(&truth, &truth).unwrap(),
            ContingencyTable::new(2, 0, 0, 2)
        );
        assert_eq!(
            contingency(&truth.flip(), &truth).unwrap(),
            ContingencyTable::new(0, 2, 2, 0)
        );
        assert!(contingency(&lt(&[1]), &truth).is_err());
    }

    #[test]
    fn loss_examples() {
        let t = ContingencyTable::new(1, 1, 1, 1);
        assert_eq!(Measure::F1.loss(&t).unwrap(), 0.5);
        let truth = lt(&[1, -1, 1]);
        assert_eq!(Measure::ErrorRate.loss_of(&truth, &truth).unwrap(), 0.0);
        let p = Measure::Prbep.loss(&ContingencyTable::new(2, 1, 1, 2)).unwrap();
        assert!((p - (1.0 - 2.0 / 3.0)).abs() < 1e-15);
    }

    #[test]
    fn f1_all_negative_is_perfect() {
        assert_eq!(
            Measure::F1.loss(&ContingencyTable::new(0, 0, 0, 5)).unwrap(),
            0.0
        );
        assert_eq!(
            Measure::F1.loss(&ContingencyTable::new(0, 1, 0, 4)).unwrap(),
            1.0
        );
    }

    #[test]
    fn admissibility() {
        assert!(Measure::Prbep.admissible(&ContingencyTable::new(1, 2, 2, 1)));
        assert!(!Measure::Prbep.admissible(&ContingencyTable::new(1, 2, 1, 2)));
        assert!(Measure::PrecisionAtK(2).admissible(&ContingencyTable::new(1, 1, 1, 1)));
        assert!(!Measure::RecallAtK(3).admissible(&ContingencyTable::new(1, 1, 1, 1)));
        assert!(Measure::F1.admissible(&ContingencyTable::new(0, 3, 0, 0)));
        assert!(matches!(
            Measure::Prbep.loss(&ContingencyTable::new(1, 2, 1, 2)),
            Err(Error::Inadmissible { .. })
        ));
    }

    #[test]
    fn at_k_losses() {
        let t = ContingencyTable::new(2, 1, 3, 4);
        assert!((Measure::PrecisionAtK(3).loss(&t).unwrap() - 1.0 / 3.0).abs() < 1e-15);
        assert!((Measure::RecallAtK(3).loss(&t).unwrap() - 0.6).abs() < 1e-15);
    }

    #[test]
    fn error_rate_on_empty_table() {
        assert!(matches!(
            Measure::ErrorRate.loss(&ContingencyTable::default()),
            Err(Error::DegenerateTable { .. })
        ));
    }

    #[test]
    fn parse_and_display() {
        for name in ["err", "f1", "prbep", "prec@5", "rec@1"] {
            let m: Measure = name.parse().unwrap();
            assert_eq!(m.to_string(), name);
        }
        for bad in ["", "F1", "prec@0", "prec@", "top@3", "rec@x"] {
            assert!(bad.parse::<Measure>().is_err(), "{bad}");
        }
        assert!(Measure::PrecisionAtK(5).check_size(4).is_err());
        assert!(Measure::PrecisionAtK(4).check_size(4).is_ok());
    }

    fn all_tuples(n: usize) -> impl Iterator<Item = LabelTuple> {
        (0u32..(1 << n)).map(move |mask| LabelTuple::from_signs((0..n).map(|i| mask >> i & 1 == 1)))
    }

    #[test]
    fn error_rate_is_normalized_hamming_exhaustive() {
        for n in 1..=6 {
            for a in all_tuples(n) {
                for b in all_tuples(n) {
                    let ham = a.iter().zip(b.iter()).filter(|(x, y)| x != y).count();
                    let l = Measure::ErrorRate.loss_of(&a, &b).unwrap();
                    assert_eq!(l, ham as f64 / n as f64);
                }
            }
        }
    }

    fn arb_measure() -> impl Strategy<Value = Measure> {
        prop_oneof![
            Just(Measure::ErrorRate),
            Just(Measure::F1),
            Just(Measure::Prbep),
            (1usize..8).prop_map(Measure::PrecisionAtK),
            (1usize..8).prop_map(Measure::RecallAtK),
        ]
    }

    proptest! {
        #[test]
        fn loss_in_unit_interval(m in arb_measure(), tp in 0usize..8, fp in 0usize..8, f in 0usize..8, tn in 0usize..8) {
            let t = ContingencyTable::new(tp, fp, f, tn);
            prop_assume!(t.n() > 0);
            if m.admissible(&t) {
                let l = m.loss(&t).unwrap();
                prop_assert!((0.0..=1.0).contains(&l));
            }
        }

        #[test]
        fn identity_has_zero_loss(m in arb_measure(), labels in proptest::collection::vec(any::<bool>(), 1..10)) {
            let y = LabelTuple::from_signs(labels);
            let t = contingency(&y, &y).unwrap();
            if m.admissible(&t) {
                prop_assert_eq!(m.loss(&t).unwrap(), 0.0);
            }
        }

        #[test]
        fn f1_loss_monotone_in_false_positives(tp in 0usize..10, fp in 0usize..10, f in 0usize..10, tn in 1usize..10) {
            let before = Measure::F1.loss(&ContingencyTable::new(tp, fp, f, tn)).unwrap();
            let after = Measure::F1.loss(&ContingencyTable::new(tp, fp + 1, f, tn - 1)).unwrap();
            prop_assert!(after >= before);
        }
    }
}
