//! Trained model and its text file format.
//!
//! ```text
//! mvperf-model 1
//! measure f1
//! c1 10.0
//! c2 1.0
//! max_iter 50
//! epsilon 0.0001
//! qp_tol 1e-8
//! qp_max_iter 10000
//! seed 0
//! status converged
//! views 2
//! dims 3 2
//! w 0.25 -1.5 0.0
//! w 0.75 2.0
//! constraints 2
//! --++
//! -+-+
//! ```
//!
//! Floats use the shortest decimal form that parses back to the same value,
//! so saving a loaded model reproduces the file byte for byte. The working
//! set is stored so the termination condition can be re-checked later.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;
use std::str::FromStr;

use crate::data::fmt_f64;
use crate::error::{Error, Result};
use crate::inference::{LabelTuple, ViewWeights};
use crate::measures::Measure;
use crate::trainer::{Status, TrainConfig};

pub const MODEL_FORMAT_VERSION: u32 = 1;
const MAGIC: &str = "mvperf-model";

#[derive(Clone, Debug, PartialEq)]
pub struct Model {
    pub weights: ViewWeights,
    pub measure: Measure,
    pub config: TrainConfig,
    pub status: Status,
    pub working_set: Vec<LabelTuple>,
}

impl Model {
    pub fn dims(&self) -> Vec<usize> {
        self.weights.dims()
    }

    pub fn to_text(&self) -> String {
        let c = &self.config;
        let mut s = String::new();
        let _ = writeln!(s, "{MAGIC} {MODEL_FORMAT_VERSION}");
        let _ = writeln!(s, "measure {}", self.measure);
        let _ = writeln!(s, "c1 {}", fmt_f64(c.c1));
        let _ = writeln!(s, "c2 {}", fmt_f64(c.c2));
        let _ = writeln!(s, "max_iter {}", c.max_iter);
        let _ = writeln!(s, "epsilon {}", fmt_f64(c.epsilon));
        let _ = writeln!(s, "qp_tol {}", fmt_f64(c.qp_tol));
        let _ = writeln!(s, "qp_max_iter {}", c.qp_max_iter);
        let _ = writeln!(s, "seed {}", c.seed);
        let _ = writeln!(s, "status {}", self.status);
        let _ = writeln!(s, "views {}", self.weights.num_views());
        let dims: Vec<String> = self.dims().iter().map(usize::to_string).collect();
        let _ = writeln!(s, "dims {}", dims.join(" "));
        for w in self.weights.iter() {
            s.push('w');
            for v in w {
                s.push(' ');
                s.push_str(&fmt_f64(*v));
            }
            s.push('\n');
        }
        let _ = writeln!(s, "constraints {}", self.working_set.len());
        for y in &self.working_set {
            s.push_str(&y.to_sign_string());
            s.push('\n');
        }
        s
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        fs::write(path, self.to_text()).map_err(|e| Error::io(path, e))
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        text.parse()
    }
}

struct Lines<'a> {
    inner: std::iter::Enumerate<std::str::Lines<'a>>,
}

impl<'a> Lines<'a> {
    fn next_line(&mut self) -> Result<(usize, &'a str)> {
        self.inner
            .next()
            .map(|(i, l)| (i + 1, l))
            .ok_or_else(|| Error::ModelFormat("unexpected end of file".into()))
    }

    /// Reads `key rest...` and returns `rest`.
    fn field(&mut self, key: &str) -> Result<&'a str> {
        let (no, line) = self.next_line()?;
        match line.split_once(' ') {
            Some((k, rest)) if k == key => Ok(rest),
            _ => Err(Error::ModelFormat(format!("line {no}: expected `{key} ...`, got {line:?}"))),
        }
    }

    fn parsed<T: FromStr>(&mut self, key: &str) -> Result<T> {
        let raw = self.field(key)?;
        raw.parse()
            .map_err(|_| Error::ModelFormat(format!("bad value for {key}: {raw:?}")))
    }
}

fn parse_f64(raw: &str) -> Result<f64> {
    let v: f64 = raw
        .parse()
        .map_err(|_| Error::ModelFormat(format!("bad number {raw:?}")))?;
    if !v.is_finite() {
        return Err(Error::ModelFormat(format!("non-finite number {raw:?}")));
    }
    Ok(v)
}

impl FromStr for Model {
    type Err = Error;

    fn from_str(text: &str) -> Result<Self> {
        let mut lines = Lines {
            inner: text.lines().enumerate(),
        };
        let version: u32 = lines.parsed(MAGIC)?;
        if version != MODEL_FORMAT_VERSION {
            return Err(Error::ModelFormat(format!("unsupported version {version}")));
        }
        let measure: Measure = lines.field("measure")?.parse()?;
        let c1 = parse_f64(lines.field("c1")?)?;
        let c2 = parse_f64(lines.field("c2")?)?;
        let max_iter = lines.parsed("max_iter")?;
        let epsilon = parse_f64(lines.field("epsilon")?)?;
        let qp_tol = parse_f64(lines.field("qp_tol")?)?;
        let qp_max_iter = lines.parsed("qp_max_iter")?;
        let seed = lines.parsed("seed")?;
        let status: Status = lines.field("status")?.parse()?;
        let views: usize = lines.parsed("views")?;
        let dims = lines
            .field("dims")?
            .split(' ')
            .map(|d| {
                d.parse::<usize>()
                    .map_err(|_| Error::ModelFormat(format!("bad dimension {d:?}")))
            })
            .collect::<Result<Vec<_>>>()?;
        if dims.len() != views {
            return Err(Error::ModelFormat(format!(
                "{views} views but {} dimensions",
                dims.len()
            )));
        }
        let mut weights = Vec::with_capacity(views);
        for (j, &d) in dims.iter().enumerate() {
            let w = lines
                .field("w")?
                .split(' ')
                .map(parse_f64)
                .collect::<Result<Vec<_>>>()?;
            if w.len() != d {
                return Err(Error::ModelFormat(format!(
                    "view {j} has {} weights, expected {d}",
                    w.len()
                )));
            }
            weights.push(w);
        }
        let count: usize = lines.parsed("constraints")?;
        let mut working_set = Vec::with_capacity(count);
        for _ in 0..count {
            let (_, line) = lines.next_line()?;
            working_set.push(LabelTuple::from_sign_string(line)?);
        }
        if let Ok((no, extra)) = lines.next_line() {
            return Err(Error::ModelFormat(format!("line {no}: trailing content {extra:?}")));
        }
        let config = TrainConfig {
            c1,
            c2,
            max_iter,
            epsilon,
            measure,
            qp_tol,
            qp_max_iter,
            seed,
        };
        config.validate()?;
        Ok(Model {
            weights: ViewWeights::new(weights)?,
            measure,
            config,
            status,
            working_set,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn sample() -> Model {
        Model {
            weights: ViewWeights::new(vec![vec![0.1, -2.5e-12, 3.0], vec![1e300]]).unwrap(),
            measure: Measure::PrecisionAtK(3),
            config: TrainConfig {
                c1: 10.0,
                c2: 0.3,
                max_iter: 50,
                epsilon: 1e-4,
                measure: Measure::PrecisionAtK(3),
                ..TrainConfig::default()
            },
            status: Status::Converged,
            working_set: vec![
                LabelTuple::from_sign_string("--++").unwrap(),
                LabelTuple::from_sign_string("-+-+").unwrap(),
            ],
        }
    }

    #[test]
    fn text_round_trip() {
        let m = sample();
        let text = m.to_text();
        let back: Model = text.parse().unwrap();
        assert_eq!(back, m);
        assert_eq!(back.to_text(), text);
    }

    #[test]
    fn rejects_malformed() {
        let text = sample().to_text();
        assert!(text.replace("mvperf-model 1", "mvperf-model 2").parse::<Model>().is_err());
        assert!(text.replace("dims 3 1", "dims 3 2").parse::<Model>().is_err());
        assert!(text.replace("status converged", "status done").parse::<Model>().is_err());
        assert!(format!("{text}extra\n").parse::<Model>().is_err());
        let truncated: String = text.lines().take(8).collect::<Vec<_>>().join("\n");
        assert!(truncated.parse::<Model>().is_err());
    }

    proptest! {
        #[test]
        fn weights_survive_text(ws in proptest::collection::vec(proptest::collection::vec(-1e6f64..1e6, 1..5), 1..4)) {
            let m = Model {
                weights: ViewWeights::new(ws).unwrap(),
                working_set: vec![],
                ..sample()
            };
            let back: Model = m.to_text().parse().unwrap();
            prop_assert_eq!(&back, &m);
        }
    }
}
