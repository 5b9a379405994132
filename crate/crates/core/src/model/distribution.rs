use rand::Rng;
use rand_distr::{Beta, Distribution};
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};

/// Beta(a, b) law of source messages on [0, 1].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MessageDistribution {
    a: f64,
    b: f64,
}

impl MessageDistribution {
    pub fn new(a: f64, b: f64) -> Result<Self> {
        if !(a.is_finite() && a > 0.0) {
            return Err(invalid("a", format!("shape must be positive, got {a}")));
        }
        if !(b.is_finite() && b > 0.0) {
            return Err(invalid("b", format!("shape must be positive, got {b}")));
        }
        Ok(Self { a, b })
    }

    pub fn uniform() -> Self {
        Self { a: 1.0, b: 1.0 }
    }

    /// Beta law with the given mean and `a + b = concentration`.
    pub fn with_mean(mean: f64, concentration: f64) -> Result<Self> {
        if !(mean > 0.0 && mean < 1.0) {
            return Err(invalid("mu", format!("mean must lie in (0, 1), got {mean}")));
        }
        Self::new(mean * concentration, (1.0 - mean) * concentration)
    }

    pub fn a(&self) -> f64 {
        self.a
    }

    pub fn b(&self) -> f64 {
        self.b
    }

    pub fn mean(&self) -> f64 {
        self.a / (self.a + self.b)
    }

    pub fn variance(&self) -> f64 {
        let s = self.a + self.b;
        self.a * self.b / (s * s * (s + 1.0))
    }

    /// Density up to its normalizing constant.
    pub fn unnormalized_density(&self, s: f64) -> f64 {
        let left = if self.a == 1.0 { 1.0 } else { s.powf(self.a - 1.0) };
        let right = if self.b == 1.0 {
            1.0
        } else {
            (1.0 - s).powf(self.b - 1.0)
        };
        left * right
    }

    pub fn sample<R: Rng + ?Sized>(&self, n: usize, rng: &mut R) -> Vec<f64> {
        if self.a == 1.0 && self.b == 1.0 {
            return (0..n).map(|_| rng.random::<f64>()).collect();
        }
        let beta = Beta::new(self.a, self.b).expect("shapes validated at construction");
        (0..n)
            .map(|_| beta.sample(rng).clamp(0.0, 1.0))
            .collect()
    }
}

/// Draws `n` messages. Thin free-function form of [`MessageDistribution::sample`].
pub fn sample_messages<R: Rng + ?Sized>(
    dist: &MessageDistribution,
    n: usize,
    rng: &mut R,
) -> Vec<f64> {
    dist.sample(n, rng)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::{stream, Stream};

    fn mean(v: &[f64]) -> f64 {
        v.iter().sum::<f64>() / v.len() as f64
    }

    #[test]
    fn uniform_mean() {
        let mut rng = stream(1, Stream::Messages);
        let s = sample_messages(&MessageDistribution::uniform(), 100_000, &mut rng);
        assert!((mean(&s) - 0.5).abs() < 0.01);
        assert!(s.iter().all(|&x| (0.0..=1.0).contains(&x)));
    }

    #[test]
    fn beta_2_5_mean() {
        let dist = MessageDistribution::new(2.0, 5.0).unwrap();
        assert!((dist.mean() - 2.0 / 7.0).abs() < 1e-15);
        let mut rng = stream(2, Stream::Messages);
        let s = dist.sample(100_000, &mut rng);
        assert!((mean(&s) - 2.0 / 7.0).abs() < 0.01);
    }

    #[test]
    fn same_seed_same_draws() {
        let dist = MessageDistribution::new(0.3, 1.7).unwrap();
        let a = dist.sample(500, &mut stream(9, Stream::Messages));
        let b = dist.sample(500, &mut stream(9, Stream::Messages));
        assert_eq!(a, b);
        assert!(a.iter().all(|&x| (0.0..=1.0).contains(&x)));
    }

    #[test]
    fn rejects_bad_shapes() {
        assert!(MessageDistribution::new(0.0, 1.0).is_err());
        assert!(MessageDistribution::new(1.0, -2.0).is_err());
        assert!(MessageDistribution::new(f64::NAN, 1.0).is_err());
    }
}
