//! The five candidate distribution families and their fitted form.
//!
//! Density, CDF, quantile and seeded sampling for log-normal, Gaussian,
//! Weibull, exponential and (continuous, lower-truncated) power-law
//! variables. Maximum-likelihood fitting lives in [`fit`].

mod fitting;

pub use fitting::{fit, fit_lognormal_tail};

use crate::rng::{rng_from_seed, SeededRng};
use crate::special::{norm_cdf, norm_quantile};
use rand::Rng;
use serde::{Deserialize, Serialize};
use std::fmt;
use std::str::FromStr;

/// Errors from distribution evaluation and fitting.
#[derive(Debug, thiserror::Error)]
pub enum DistError {
    #[error("need at least {needed} samples, got {got}")]
    TooFewSamples { needed: usize, got: usize },
    #[error("sample {index} is {value}; {family} requires strictly positive data")]
    NonPositiveSample { family: Family, index: usize, value: f64 },
    #[error("sample {index} is not finite")]
    NonFiniteSample { index: usize },
    #[error("degenerate sample: all values equal")]
    DegenerateSample,
    #[error("{0} did not converge after {1} iterations")]
    NoConvergence(&'static str, usize),
    #[error("x = {x} outside the support of {family}")]
    OutsideSupport { family: Family, x: f64 },
    #[error("probability {0} outside (0, 1)")]
    BadProbability(f64),
    #[error("invalid parameter: {0}")]
    BadParameter(String),
}

/// Candidate family tags.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Family {
    LogNormal,
    Gaussian,
    Weibull,
    Exponential,
    PowerLaw,
}

impl Family {
    pub const ALL: [Family; 5] = [
        Family::LogNormal,
        Family::Gaussian,
        Family::Weibull,
        Family::Exponential,
        Family::PowerLaw,
    ];

    /// Whether this family requires strictly positive samples.
    pub fn requires_positive(self) -> bool {
        !matches!(self, Family::Gaussian)
    }
}

impl fmt::Display for Family {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            Family::LogNormal => "log_normal",
            Family::Gaussian => "gaussian",
            Family::Weibull => "weibull",
            Family::Exponential => "exponential",
            Family::PowerLaw => "power_law",
        };
        f.write_str(s)
    }
}

impl FromStr for Family {
    type Err = DistError;

    fn from_str(s: &str) -> Result<Self, DistError> {
        match s.to_ascii_lowercase().as_str() {
            "log_normal" | "lognormal" => Ok(Family::LogNormal),
            "gaussian" | "normal" => Ok(Family::Gaussian),
            "weibull" => Ok(Family::Weibull),
            "exponential" | "exp" => Ok(Family::Exponential),
            "power_law" | "powerlaw" => Ok(Family::PowerLaw),
            other => Err(DistError::BadParameter(format!("unknown family {other:?}"))),
        }
    }
}

/// Parameters of `ln X ~ N(mu, sigma^2)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LogNormalParams {
    pub mu: f64,
    pub sigma: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GaussianParams {
    pub mu: f64,
    pub sigma: f64,
}

/// Shape `k` and scale `lambda`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WeibullParams {
    pub k: f64,
    pub lambda: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ExponentialParams {
    pub rate: f64,
}

/// Continuous power law on `[xmin, inf)` with exponent `alpha > 1`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PowerLawParams {
    pub alpha: f64,
    pub xmin: f64,
}

/// A concrete distribution: family tag plus parameters.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", content = "params", rename_all = "snake_case")]
pub enum Dist {
    LogNormal(LogNormalParams),
    Gaussian(GaussianParams),
    Weibull(WeibullParams),
    Exponential(ExponentialParams),
    PowerLaw(PowerLawParams),
}

impl Dist {
    pub fn log_normal(mu: f64, sigma: f64) -> Result<Dist, DistError> {
        if !(sigma > 0.0) {
            return Err(DistError::BadParameter(format!("sigma = {sigma} must be > 0")));
        }
        Ok(Dist::LogNormal(LogNormalParams { mu, sigma }))
    }

    pub fn gaussian(mu: f64, sigma: f64) -> Result<Dist, DistError> {
        if !(sigma > 0.0) {
            return Err(DistError::BadParameter(format!("sigma = {sigma} must be > 0")));
        }
        Ok(Dist::Gaussian(GaussianParams { mu, sigma }))
    }

    pub fn weibull(k: f64, lambda: f64) -> Result<Dist, DistError> {
        if !(k > 0.0 && lambda > 0.0) {
            return Err(DistError::BadParameter(format!(
                "weibull needs k > 0 and lambda > 0, got k = {k}, lambda = {lambda}"
            )));
        }
        Ok(Dist::Weibull(WeibullParams { k, lambda }))
    }

    pub fn exponential(rate: f64) -> Result<Dist, DistError> {
        if !(rate > 0.0) {
            return Err(DistError::BadParameter(format!("rate = {rate} must be > 0")));
        }
        Ok(Dist::Exponential(ExponentialParams { rate }))
    }

    pub fn power_law(alpha: f64, xmin: f64) -> Result<Dist, DistError> {
        if !(alpha > 1.0 && xmin > 0.0) {
            return Err(DistError::BadParameter(format!(
                "power law needs alpha > 1 and xmin > 0, got alpha = {alpha}, xmin = {xmin}"
            )));
        }
        Ok(Dist::PowerLaw(PowerLawParams { alpha, xmin }))
    }

    pub fn family(&self) -> Family {
        match self {
            Dist::LogNormal(_) => Family::LogNormal,
            Dist::Gaussian(_) => Family::Gaussian,
            Dist::Weibull(_) => Family::Weibull,
            Dist::Exponential(_) => Family::Exponential,
            Dist::PowerLaw(_) => Family::PowerLaw,
        }
    }

    /// Lower edge of the support (`-inf` for the Gaussian).
    pub fn support_lower(&self) -> f64 {
        match self {
            Dist::LogNormal(_) => 0.0,
            Dist::Gaussian(_) => f64::NEG_INFINITY,
            Dist::Weibull(_) | Dist::Exponential(_) => 0.0,
            Dist::PowerLaw(p) => p.xmin,
        }
    }

    fn in_support(&self, x: f64) -> bool {
        match self {
            Dist::LogNormal(_) => x > 0.0,
            Dist::Gaussian(_) => x.is_finite(),
            Dist::Weibull(_) | Dist::Exponential(_) => x >= 0.0,
            Dist::PowerLaw(p) => x >= p.xmin,
        }
    }

    /// Log density; `-inf` outside the support.
    pub fn ln_pdf(&self, x: f64) -> f64 {
        if !self.in_support(x) {
            return f64::NEG_INFINITY;
        }
        match self {
            Dist::LogNormal(p) => {
                let z = (x.ln() - p.mu) / p.sigma;
                -0.5 * z * z - (x * p.sigma).ln() - 0.5 * LN_2PI
            }
            Dist::Gaussian(p) => {
                let z = (x - p.mu) / p.sigma;
                -0.5 * z * z - p.sigma.ln() - 0.5 * LN_2PI
            }
            Dist::Weibull(p) => {
                let t = x / p.lambda;
                if x == 0.0 {
                    // k = 1 degenerates to the exponential with f(0) = 1/lambda;
                    // k < 1 diverges, k > 1 vanishes.
                    return if p.k == 1.0 {
                        -p.lambda.ln()
                    } else if p.k < 1.0 {
                        f64::INFINITY
                    } else {
                        f64::NEG_INFINITY
                    };
                }
                p.k.ln() - p.lambda.ln() + (p.k - 1.0) * t.ln() - t.powf(p.k)
            }
            Dist::Exponential(p) => p.rate.ln() - p.rate * x,
            Dist::PowerLaw(p) => {
                (p.alpha - 1.0).ln() - p.xmin.ln() - p.alpha * (x / p.xmin).ln()
            }
        }
    }

    /// Density at `x`. Errors if `x` is outside the support.
    pub fn pdf(&self, x: f64) -> Result<f64, DistError> {
        if !self.in_support(x) {
            return Err(DistError::OutsideSupport { family: self.family(), x });
        }
        Ok(self.ln_pdf(x).exp())
    }

    /// CDF at `x`; values below the support map to 0.
    pub fn cdf(&self, x: f64) -> f64 {
        match self {
            Dist::LogNormal(p) => {
                if x <= 0.0 {
                    0.0
                } else {
                    norm_cdf((x.ln() - p.mu) / p.sigma)
                }
            }
            Dist::Gaussian(p) => norm_cdf((x - p.mu) / p.sigma),
            Dist::Weibull(p) => {
                if x <= 0.0 {
                    0.0
                } else {
                    -(-(x / p.lambda).powf(p.k)).exp_m1()
                }
            }
            Dist::Exponential(p) => {
                if x <= 0.0 {
                    0.0
                } else {
                    -(-p.rate * x).exp_m1()
                }
            }
            Dist::PowerLaw(p) => {
                if x <= p.xmin {
                    0.0
                } else {
                    1.0 - (x / p.xmin).powf(1.0 - p.alpha)
                }
            }
        }
    }

    /// Quantile (inverse CDF) at probability `p` in `(0, 1)`.
    pub fn quantile(&self, p: f64) -> Result<f64, DistError> {
        if !(p > 0.0 && p < 1.0) {
            return Err(DistError::BadProbability(p));
        }
        Ok(match self {
            Dist::LogNormal(l) => (l.mu + l.sigma * norm_quantile(p)).exp(),
            Dist::Gaussian(g) => g.mu + g.sigma * norm_quantile(p),
            Dist::Weibull(w) => w.lambda * (-(1.0 - p).ln()).powf(1.0 / w.k),
            Dist::Exponential(e) => -(1.0 - p).ln() / e.rate,
            Dist::PowerLaw(pl) => pl.xmin * (1.0 - p).powf(-1.0 / (pl.alpha - 1.0)),
        })
    }

    /// Draw one value using an already-seeded generator (inverse transform).
    pub fn sample_with<R: Rng>(&self, rng: &mut R) -> f64 {
        let mut u: f64 = rng.random();
        while u <= 0.0 {
            u = rng.random();
        }
        self.quantile(u).expect("u in (0,1)")
    }

    /// Draw `n` values deterministically for a seed.
    pub fn sample(&self, n: usize, seed: u64) -> Vec<f64> {
        let mut rng: SeededRng = rng_from_seed(seed);
        (0..n).map(|_| self.sample_with(&mut rng)).collect()
    }
}

const LN_2PI: f64 = 1.837_877_066_409_345_5;

/// A family fitted to a sample by maximum likelihood.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DistFit {
    #[serde(flatten)]
    pub dist: Dist,
    /// Total log-likelihood of the fitted sample.
    pub loglik: f64,
    /// Number of samples the parameters were estimated from (tail count
    /// for the power law).
    pub n: usize,
    /// Lower cutoff; present for power-law fits only.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub xmin: Option<f64>,
}

impl DistFit {
    pub fn family(&self) -> Family {
        self.dist.family()
    }

    pub fn pdf(&self, x: f64) -> Result<f64, DistError> {
        self.dist.pdf(x)
    }

    pub fn ln_pdf(&self, x: f64) -> f64 {
        self.dist.ln_pdf(x)
    }

    pub fn cdf(&self, x: f64) -> f64 {
        self.dist.cdf(x)
    }

    pub fn quantile(&self, p: f64) -> Result<f64, DistError> {
        self.dist.quantile(p)
    }

    pub fn sample(&self, n: usize, seed: u64) -> Vec<f64> {
        self.dist.sample(n, seed)
    }
}
