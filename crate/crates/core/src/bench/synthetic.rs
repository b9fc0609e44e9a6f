//! Synthetic generators with known densities.

use std::f64::consts::PI;
use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, Normal};

use crate::data::{Dataset, FeatureKind, Schema};

fn phi(x: f64) -> f64 {
    Normal::standard().cdf(x)
}

/// Two Gaussian classes with shared isotropic covariance `std² I`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GaussianClasses {
    pub mean0: Vec<f64>,
    pub mean1: Vec<f64>,
    pub std: f64,
    /// `P(Y = 1)`.
    pub prior1: f64,
}

impl Default for GaussianClasses {
    fn default() -> Self {
        GaussianClasses {
            mean0: vec![0.0, 0.0],
            mean1: vec![1.5, 1.0],
            std: 1.0,
            prior1: 0.4,
        }
    }
}

impl GaussianClasses {
    pub fn dim(&self) -> usize {
        self.mean0.len()
    }

    pub fn schema(&self) -> Arc<Schema> {
        Arc::new(Schema::from_kinds(&vec![FeatureKind::Continuous; self.dim()], 2).expect("valid schema"))
    }

    pub fn sample_one(&self, rng: &mut impl Rng) -> (Vec<f64>, usize) {
        let y = usize::from(rng.random_bool(self.prior1));
        let mean = if y == 1 { &self.mean1 } else { &self.mean0 };
        let x = mean
            .iter()
            .map(|m| m + self.std * rng.sample::<f64, _>(StandardNormal))
            .collect();
        (x, y)
    }

    pub fn sample(&self, n: usize, seed: u64) -> Dataset {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let (rows, labels): (Vec<Vec<f64>>, Vec<usize>) = (0..n).map(|_| self.sample_one(&mut rng)).unzip();
        Dataset::from_rows(self.schema(), &rows, labels).expect("finite samples")
    }

    /// `log p*(x, y)`.
    pub fn log_joint(&self, x: &[f64], y: usize) -> f64 {
        let (mean, prior) = if y == 1 {
            (&self.mean1, self.prior1)
        } else {
            (&self.mean0, 1.0 - self.prior1)
        };
        let sq: f64 = x.iter().zip(mean).map(|(a, b)| (a - b).powi(2)).sum();
        let d = x.len() as f64;
        prior.ln() - 0.5 * d * (2.0 * PI * self.std * self.std).ln() - sq / (2.0 * self.std * self.std)
    }

    /// Bayes error when only the features in `observed` are seen.
    pub fn bayes_risk(&self, observed: &[usize]) -> f64 {
        let (p0, p1) = (1.0 - self.prior1, self.prior1);
        let dist = observed
            .iter()
            .map(|&i| (self.mean1[i] - self.mean0[i]).powi(2))
            .sum::<f64>()
            .sqrt()
            / self.std;
        if dist == 0.0 {
            return p0.min(p1);
        }
        let t = (p0 / p1).ln();
        p0 * phi(-t / dist - dist / 2.0) + p1 * phi(t / dist - dist / 2.0)
    }
}

/// Two correlated Gaussians; the label marks points far from the regression
/// line of `x2` on `x1`: `Y = 1{|x2 − ρ x1| > ε}` with `x1 ~ N(0, 1)` and
/// `x2 | x1 ~ N(ρ x1, σ_c²)`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BandProblem {
    pub rho: f64,
    pub sigma_c: f64,
    pub eps: f64,
}

impl BandProblem {
    pub fn schema() -> Arc<Schema> {
        Arc::new(Schema::from_kinds(&[FeatureKind::Continuous, FeatureKind::Continuous], 2).expect("valid schema"))
    }

    pub fn sample(&self, n: usize, seed: u64) -> Dataset {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut rows = Vec::with_capacity(n);
        let mut labels = Vec::with_capacity(n);
        for _ in 0..n {
            let x1: f64 = StandardNormal.sample(&mut rng);
            let z: f64 = StandardNormal.sample(&mut rng);
            let x2 = self.rho * x1 + self.sigma_c * z;
            labels.push(usize::from((x2 - self.rho * x1).abs() > self.eps));
            rows.push(vec![x1, x2]);
        }
        Dataset::from_rows(Self::schema(), &rows, labels).expect("finite samples")
    }

    /// `P(Y = 1 | x1)`, the same for every `x1`.
    pub fn p_far(&self) -> f64 {
        2.0 * phi(-self.eps / self.sigma_c)
    }

    /// Best accuracy achievable from `x1` alone.
    pub fn bayes_accuracy_x1(&self) -> f64 {
        let p = self.p_far();
        p.max(1.0 - p)
    }
}
