//! Exact accumulation of payoffs and the summaries derived from them.

use num_traits::Float;
use serde::{Deserialize, Serialize};

/// z-score of a two-sided 99% normal interval.
pub const Z_99: f64 = 2.5758;

/// Count, sum and sum of squares of integer samples. Merging is exact,
/// so partial results may be combined in any order.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Accumulator {
    pub n: u64,
    pub sum: i128,
    pub sum_sq: i128,
}

impl Accumulator {
    pub fn push(&mut self, x: i64) {
        self.n += 1;
        self.sum += i128::from(x);
        self.sum_sq += i128::from(x) * i128::from(x);
    }

    pub fn merge(self, other: Self) -> Self {
        Self { n: self.n + other.n, sum: self.sum + other.sum, sum_sq: self.sum_sq + other.sum_sq }
    }

    /// Mean, variance and 99% half-width, with every sample divided by `unit`.
    pub fn summary<F: Float>(&self, unit: F) -> Summary<F> {
        let n = F::from(self.n).unwrap();
        if self.n == 0 {
            return Summary { n: 0, mean: F::zero(), variance: F::zero(), half_width: F::zero() };
        }
        let sum = F::from(self.sum).unwrap() / unit;
        let sum_sq = F::from(self.sum_sq).unwrap() / (unit * unit);
        let mean = sum / n;
        let variance = if self.n > 1 {
            ((sum_sq - sum * mean) / (n - F::one())).max(F::zero())
        } else {
            F::zero()
        };
        let half_width = F::from(Z_99).unwrap() * (variance / n).sqrt();
        Summary { n: self.n, mean, variance, half_width }
    }
}

impl FromIterator<i64> for Accumulator {
    fn from_iter<I: IntoIterator<Item = i64>>(iter: I) -> Self {
        let mut a = Accumulator::default();
        for x in iter {
            a.push(x);
        }
        a
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Summary<F> {
    pub n: u64,
    pub mean: F,
    /// Sample variance.
    pub variance: F,
    pub half_width: F,
}
