//! Truncated normal sampling by inverse CDF.

use rand::Rng;
use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, Normal};

/// `N(mean, std^2)` restricted to `[lower, upper]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "TruncatedNormalParams", into = "TruncatedNormalParams")]
pub struct TruncatedNormal {
    mean: f64,
    std: f64,
    lower: f64,
    upper: f64,
    cdf_lower: f64,
    cdf_upper: f64,
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TruncatedNormalParams {
    pub mean: f64,
    pub std: f64,
    pub lower: f64,
    pub upper: f64,
}

impl TruncatedNormal {
    pub fn new(mean: f64, std: f64, lower: f64, upper: f64) -> Result<Self, String> {
        if !(std > 0.0 && std.is_finite()) {
            return Err(format!("truncated normal std must be positive, got {std}"));
        }
        if !(lower < upper) {
            return Err(format!("truncated normal needs lower < upper, got [{lower}, {upper}]"));
        }
        let cdf_lower = standard_cdf((lower - mean) / std);
        let cdf_upper = standard_cdf((upper - mean) / std);
        if !(cdf_upper > cdf_lower) {
            return Err(format!("truncation interval [{lower}, {upper}] carries no probability mass"));
        }
        Ok(Self { mean, std, lower, upper, cdf_lower, cdf_upper })
    }

    pub fn lower(&self) -> f64 {
        self.lower
    }

    pub fn upper(&self) -> f64 {
        self.upper
    }

    /// One draw: `u ~ U(Phi(a), Phi(b))`, then `mean + std * Phi^-1(u)`.
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        let u = self.cdf_lower + (self.cdf_upper - self.cdf_lower) * rng.random::<f64>();
        let x = self.mean + self.std * standard_inverse_cdf(u);
        x.clamp(self.lower, self.upper)
    }
}

impl TryFrom<TruncatedNormalParams> for TruncatedNormal {
    type Error = String;
    fn try_from(p: TruncatedNormalParams) -> Result<Self, Self::Error> {
        Self::new(p.mean, p.std, p.lower, p.upper)
    }
}

impl From<TruncatedNormal> for TruncatedNormalParams {
    fn from(t: TruncatedNormal) -> Self {
        Self { mean: t.mean, std: t.std, lower: t.lower, upper: t.upper }
    }
}

fn standard() -> Normal {
    Normal::new(0.0, 1.0).expect("valid standard normal")
}

fn standard_cdf(x: f64) -> f64 {
    standard().cdf(x)
}

fn standard_inverse_cdf(u: f64) -> f64 {
    if u <= 0.0 {
        return f64::NEG_INFINITY;
    }
    if u >= 1.0 {
        return f64::INFINITY;
    }
    standard().inverse_cdf(u)
}
