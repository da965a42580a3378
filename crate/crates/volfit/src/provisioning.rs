//! Link-capacity estimation against a target exceedance probability.
//!
//! Two capacity rules are compared on the same series: the
//! Gaussian-assumption closed form (mean rate plus a
//! `sqrt(-2 ln eps * variance)` safety margin, Meent's formula) and the
//! fitted-model inverse-CDF capacity. The empirical exceedance of a
//! capacity is the fraction of bins whose volume reaches `capacity * T`.

use crate::distributions::{fit, DistError, DistFit, Family};
use crate::series::{Timescale, VolumeSeries};
use serde::{Deserialize, Serialize};
use std::fmt;

#[derive(Debug, thiserror::Error)]
pub enum ProvisionError {
    #[error("target exceedance {0} outside (0, 1)")]
    BadEps(f64),
    #[error("negative variance {0}")]
    BadVariance(f64),
    #[error(transparent)]
    Fit(#[from] DistError),
}

/// Per-bin volume moments backing the Gaussian capacity rule.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GaussianMoments {
    /// Mean traffic per bin, bytes.
    pub mu: f64,
    /// Variance of traffic per bin, bytes^2.
    pub upsilon_t: f64,
    /// Bin width, seconds.
    pub timescale_t: f64,
}

impl GaussianMoments {
    /// Sample moments of a series' bin volumes (variance with the
    /// 1/(n-1) estimator).
    pub fn from_series(series: &VolumeSeries) -> GaussianMoments {
        let xs = series.samples();
        let n = xs.len() as f64;
        let mu = xs.iter().sum::<f64>() / n;
        let upsilon_t = if xs.len() > 1 {
            xs.iter().map(|&x| (x - mu) * (x - mu)).sum::<f64>() / (n - 1.0)
        } else {
            0.0
        };
        GaussianMoments { mu, upsilon_t, timescale_t: series.timescale().as_secs_f64() }
    }
}

/// How a capacity estimate was produced.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Method {
    /// Gaussian-assumption closed form from per-bin moments.
    Meent,
    /// Inverse CDF of a fitted family at `1 - eps`.
    ModelQuantile(Family),
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Method::Meent => f.write_str("meent"),
            Method::ModelQuantile(fam) => write!(f, "model_quantile:{fam}"),
        }
    }
}

impl Serialize for Method {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for Method {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        if s == "meent" {
            return Ok(Method::Meent);
        }
        if let Some(fam) = s.strip_prefix("model_quantile:") {
            let family: Family = fam.parse().map_err(serde::de::Error::custom)?;
            return Ok(Method::ModelQuantile(family));
        }
        Err(serde::de::Error::custom(format!("unknown method {s:?}")))
    }
}

/// One capacity estimate evaluated against its own series.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ProvisioningResult {
    pub method: Method,
    pub target_eps: f64,
    pub capacity_bytes_per_s: f64,
    /// Fraction of bins at or above `capacity * T`; a multiple of 1/n.
    pub eps_hat: f64,
}

/// Gaussian-assumption minimum capacity in bytes per second:
/// mean rate plus `sqrt(-2 ln(eps) * variance) / T`.
pub fn meent_capacity(moments: &GaussianMoments, eps: f64) -> Result<f64, ProvisionError> {
    if !(eps > 0.0 && eps < 1.0) {
        return Err(ProvisionError::BadEps(eps));
    }
    if moments.upsilon_t < 0.0 {
        return Err(ProvisionError::BadVariance(moments.upsilon_t));
    }
    let t = moments.timescale_t;
    Ok(moments.mu / t + (-2.0 * eps.ln() * moments.upsilon_t).sqrt() / t)
}

/// The safety margin Meent's rule adds on top of the mean rate,
/// bytes per second.
pub fn meent_margin(moments: &GaussianMoments, eps: f64) -> Result<f64, ProvisionError> {
    Ok(meent_capacity(moments, eps)? - moments.mu / moments.timescale_t)
}

/// Fitted-model capacity: the `1 - eps` quantile of per-bin volume,
/// expressed as a rate.
pub fn model_capacity(
    fit: &DistFit,
    eps: f64,
    timescale: Timescale,
) -> Result<f64, ProvisionError> {
    if !(eps > 0.0 && eps < 1.0) {
        return Err(ProvisionError::BadEps(eps));
    }
    Ok(fit.quantile(1.0 - eps)? / timescale.as_secs_f64())
}

/// Fraction of bins whose volume is at or above `capacity * T`.
pub fn empirical_eps(series: &VolumeSeries, capacity_bytes_per_s: f64) -> f64 {
    let threshold = capacity_bytes_per_s * series.timescale().as_secs_f64();
    let hits = series.samples().iter().filter(|&&v| v >= threshold).count();
    hits as f64 / series.n() as f64
}

/// Compute each method's capacity for the target and evaluate its
/// empirical exceedance on the same series. Meent moments come from the
/// series itself.
pub fn evaluate(
    series: &VolumeSeries,
    eps: f64,
    methods: &[Method],
) -> Result<Vec<ProvisioningResult>, ProvisionError> {
    if !(eps > 0.0 && eps < 1.0) {
        return Err(ProvisionError::BadEps(eps));
    }
    let mut out = Vec::with_capacity(methods.len());
    for &method in methods {
        let capacity = match method {
            Method::Meent => meent_capacity(&GaussianMoments::from_series(series), eps)?,
            Method::ModelQuantile(family) => {
                let fitted = fit(family, &series.samples())?;
                model_capacity(&fitted, eps, series.timescale())?
            }
        };
        out.push(ProvisioningResult {
            method,
            target_eps: eps,
            capacity_bytes_per_s: capacity,
            eps_hat: empirical_eps(series, capacity),
        });
    }
    Ok(out)
}
