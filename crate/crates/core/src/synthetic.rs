//! Seeded multi-view blob generator.
//!
//! The generator is fully specified so that any implementation reproduces
//! the same data from the same [`GenSpec`]:
//!
//! * Random bits come from SplitMix64. Uniforms are `(bits >> 11) * 2^-53`;
//!   normals use Box-Muller, `sqrt(-2 ln(1-u1)) * cos(2 pi u2)`, one normal
//!   per pair of uniforms.
//! * Labels: the first `round(balance * n)` points are positive, then a
//!   Fisher-Yates shuffle runs for `i = n-1 .. 1` with `k = bits % (i + 1)`.
//! * Per point `i`: draw a shared vector `b` of `max_j d_j` normals; then
//!   for each view `j` draw `d_j` private normals `p` and `d_j` noise normals
//!   `z`. With `e = rho * b[..d_j] + sqrt(1 - rho^2) * p`, the features are
//!   `x[0] = y_i (margin_j / 2 + |e[0]|) + noise_j z[0]` and
//!   `x[k] = e[k] + noise_j z[k]` for `k >= 1`.
//!
//! With zero noise every view is separated through the origin by `e_1` with
//! margin at least `margin_j / 2` on each side.

use crate::data::{MultiViewDataset, SparseRow, View};
use crate::error::{Error, Result};

/// SplitMix64 pseudo-random generator.
#[derive(Clone, Debug)]
pub struct SplitMix64 {
    state: u64,
}

impl SplitMix64 {
    pub fn new(seed: u64) -> Self {
        SplitMix64 { state: seed }
    }

    pub fn next_u64(&mut self) -> u64 {
        self.state = self.state.wrapping_add(0x9E37_79B9_7F4A_7C15);
        let mut z = self.state;
        z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
        z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
        z ^ (z >> 31)
    }

    /// Uniform in `[0, 1)`.
    pub fn uniform(&mut self) -> f64 {
        (self.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
    }

    /// Uniform in `[lo, hi)`.
    pub fn range(&mut self, lo: f64, hi: f64) -> f64 {
        lo + (hi - lo) * self.uniform()
    }

    /// Uniform integer in `0..bound`.
    pub fn below(&mut self, bound: u64) -> u64 {
        self.next_u64() % bound
    }

    pub fn normal(&mut self) -> f64 {
        let u1 = 1.0 - self.uniform();
        let u2 = self.uniform();
        (-2.0 * u1.ln()).sqrt() * (2.0 * std::f64::consts::PI * u2).cos()
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct GenSpec {
    pub n: usize,
    /// One entry per view; `m = dims.len()`.
    pub dims: Vec<usize>,
    /// Fraction of positive labels, in `(0, 1)`.
    pub balance: f64,
    /// Per-view class separation.
    pub margins: Vec<f64>,
    /// Per-view additive noise scale.
    pub noise: Vec<f64>,
    /// Correlation of the blob deviations across views, in `[-1, 1]`.
    pub correlation: f64,
    pub seed: u64,
}

impl GenSpec {
    /// Balanced classes, the same margin and noise for every view.
    pub fn uniform(n: usize, dims: Vec<usize>, margin: f64, noise: f64, seed: u64) -> Self {
        let m = dims.len();
        GenSpec {
            n,
            dims,
            balance: 0.5,
            margins: vec![margin; m],
            noise: vec![noise; m],
            correlation: 0.5,
            seed,
        }
    }

    pub fn m(&self) -> usize {
        self.dims.len()
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::InvalidConfig(msg));
        if self.n < 2 {
            return bad(format!("n must be >= 2, got {}", self.n));
        }
        if !(self.balance > 0.0 && self.balance < 1.0) {
            return bad(format!("balance must be in (0, 1), got {}", self.balance));
        }
        if self.dims.is_empty() || self.dims.contains(&0) {
            return bad(format!("dims must be non-empty and positive, got {:?}", self.dims));
        }
        if self.margins.len() != self.m() || self.noise.len() != self.m() {
            return bad(format!(
                "need one margin and one noise scale per view ({} views)",
                self.m()
            ));
        }
        if self.margins.iter().chain(&self.noise).any(|v| !(v.is_finite() && *v >= 0.0)) {
            return bad("margins and noise scales must be finite and >= 0".into());
        }
        if !(-1.0..=1.0).contains(&self.correlation) {
            return bad(format!("correlation must be in [-1, 1], got {}", self.correlation));
        }
        Ok(())
    }
}

pub fn generate(spec: &GenSpec) -> Result<MultiViewDataset> {
    spec.validate()?;
    let mut rng = SplitMix64::new(spec.seed);
    let n = spec.n;
    let n_pos = ((spec.balance * n as f64).round() as usize).min(n);
    let mut labels: Vec<i8> = (0..n).map(|i| if i < n_pos { 1 } else { -1 }).collect();
    for i in (1..n).rev() {
        let k = rng.below(i as u64 + 1) as usize;
        labels.swap(i, k);
    }

    let rho = spec.correlation;
    let own = (1.0 - rho * rho).max(0.0).sqrt();
    let d_max = spec.dims.iter().copied().max().unwrap_or(0);
    let mut rows: Vec<Vec<SparseRow>> = vec![Vec::with_capacity(n); spec.m()];
    for &y in &labels {
        let shared: Vec<f64> = (0..d_max).map(|_| rng.normal()).collect();
        for (j, &d) in spec.dims.iter().enumerate() {
            let private: Vec<f64> = (0..d).map(|_| rng.normal()).collect();
            let noise: Vec<f64> = (0..d).map(|_| rng.normal()).collect();
            let x: Vec<f64> = (0..d)
                .map(|k| {
                    let e = rho * shared[k] + own * private[k];
                    let base = if k == 0 {
                        f64::from(y) * (0.5 * spec.margins[j] + e.abs())
                    } else {
                        e
                    };
                    base + spec.noise[j] * noise[k]
                })
                .collect();
            rows[j].push(SparseRow::from_dense(&x));
        }
    }
    let views = rows
        .into_iter()
        .zip(&spec.dims)
        .map(|(r, &d)| View::new(d, r))
        .collect();
    MultiViewDataset::new(views, labels)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn splitmix_reference_values() {
        // first outputs for seed 1234567, cross-checked against an independent implementation
        let mut r = SplitMix64::new(1234567);
        let got: Vec<u64> = (0..3).map(|_| r.next_u64()).collect();
        assert_eq!(
            got,
            vec![6457827717110365317, 3203168211198807973, 9817491932198370423]
        );
    }

    #[test]
    fn deterministic_for_seed() {
        let spec = GenSpec::uniform(30, vec![3, 2], 2.0, 0.3, 11);
        assert_eq!(generate(&spec).unwrap(), generate(&spec).unwrap());
        let other = GenSpec { seed: 12, ..spec.clone() };
        assert_ne!(generate(&spec).unwrap(), generate(&other).unwrap());
    }

    #[test]
    fn balance_is_respected() {
        let spec = GenSpec::uniform(100, vec![2], 2.0, 0.0, 5);
        assert_eq!(generate(&spec).unwrap().num_positive(), 50);
        let spec = GenSpec {
            balance: 0.3,
            n: 11,
            ..spec
        };
        assert_eq!(generate(&spec).unwrap().num_positive(), 3);
    }

    #[test]
    fn noise_free_views_are_separated_by_first_axis() {
        let spec = GenSpec::uniform(60, vec![3, 2], 2.0, 0.0, 3);
        let ds = generate(&spec).unwrap();
        for j in 0..ds.m() {
            for (i, row) in ds.view(j).rows().iter().enumerate() {
                let x0 = row.to_dense(ds.dim(j))[0];
                assert!(f64::from(ds.labels().get(i)) * x0 >= 1.0);
            }
        }
    }

    #[test]
    fn rejects_invalid_specs() {
        let ok = GenSpec::uniform(10, vec![2, 2], 1.0, 0.1, 0);
        assert!(ok.validate().is_ok());
        assert!(GenSpec { n: 1, ..ok.clone() }.validate().is_err());
        assert!(GenSpec { balance: 1.0, ..ok.clone() }.validate().is_err());
        assert!(GenSpec { dims: vec![2, 0], ..ok.clone() }.validate().is_err());
        assert!(GenSpec { margins: vec![1.0], ..ok.clone() }.validate().is_err());
        assert!(GenSpec { correlation: 1.5, ..ok.clone() }.validate().is_err());
        assert!(GenSpec { noise: vec![0.1, -0.1], ..ok }.validate().is_err());
    }
}
