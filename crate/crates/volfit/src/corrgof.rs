//! Correlation-coefficient goodness of fit: the Pearson correlation
//! between sample order statistics and fitted-model quantiles at
//! plotting positions `i/(n+1)`, with correlation above 0.95 read as a
//! strong fit, plus its variation across the four study timescales.

use crate::distributions::{fit, DistError, Family};
use crate::series::Timescale;
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;

/// Correlation above this is considered a strong fit.
pub const STRONG_FIT_GAMMA: f64 = 0.95;

/// The four timescales the cross-timescale variation is defined over.
pub const VARIATION_TIMESCALES: [Timescale; 4] =
    [Timescale::S_5, Timescale::S_1, Timescale::MS_100, Timescale::MS_5];

#[derive(Debug, thiserror::Error)]
pub enum CorrGofError {
    #[error("need at least 3 samples, got {0}")]
    TooFewSamples(usize),
    #[error("correlation undefined: {0} vector has zero variance")]
    ZeroVariance(&'static str),
    #[error("missing timescale {0} (all of 5s, 1s, 100ms, 5ms are required)")]
    MissingTimescale(Timescale),
    #[error(transparent)]
    Fit(#[from] DistError),
}

/// Quantile-correlation result for one sample at one timescale.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GammaResult {
    pub family: Family,
    /// Bin width the sample was aggregated at, in seconds.
    pub timescale_t: f64,
    pub gamma: f64,
    /// True iff `gamma > 0.95`.
    pub strong_fit: bool,
}

/// Per-timescale correlations in the fixed study order.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GammaByTimescale {
    #[serde(rename = "5s")]
    pub t_5s: f64,
    #[serde(rename = "1s")]
    pub t_1s: f64,
    #[serde(rename = "100ms")]
    pub t_100ms: f64,
    #[serde(rename = "5ms")]
    pub t_5ms: f64,
}

/// Cross-timescale stability of the correlation.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GammaVariation {
    /// Population standard deviation of the four correlations.
    pub upsilon: f64,
    pub gammas: GammaByTimescale,
}

/// Pearson correlation between sorted samples and the quantiles of the
/// family fitted to them.
pub fn gamma(
    samples: &[f64],
    family: Family,
    timescale: Timescale,
) -> Result<GammaResult, CorrGofError> {
    if samples.len() < 3 {
        return Err(CorrGofError::TooFewSamples(samples.len()));
    }
    let fitted = fit(family, samples)?;
    let mut sorted = samples.to_vec();
    sorted.sort_unstable_by(f64::total_cmp);
    let n = sorted.len();
    let quantiles: Vec<f64> = (1..=n)
        .map(|i| {
            fitted
                .quantile(i as f64 / (n + 1) as f64)
                .expect("plotting positions lie in (0,1)")
        })
        .collect();
    let g = pearson(&sorted, &quantiles)?;
    Ok(GammaResult {
        family,
        timescale_t: timescale.as_secs_f64(),
        gamma: g,
        strong_fit: g > STRONG_FIT_GAMMA,
    })
}

fn pearson(a: &[f64], b: &[f64]) -> Result<f64, CorrGofError> {
    let n = a.len() as f64;
    let mean_a = a.iter().sum::<f64>() / n;
    let mean_b = b.iter().sum::<f64>() / n;
    let mut cov = 0.0;
    let mut var_a = 0.0;
    let mut var_b = 0.0;
    for (&x, &y) in a.iter().zip(b) {
        let dx = x - mean_a;
        let dy = y - mean_b;
        cov += dx * dy;
        var_a += dx * dx;
        var_b += dy * dy;
    }
    if var_a == 0.0 {
        return Err(CorrGofError::ZeroVariance("sample"));
    }
    if var_b == 0.0 {
        return Err(CorrGofError::ZeroVariance("quantile"));
    }
    Ok(cov / (var_a * var_b).sqrt())
}

/// Correlation at each of the four study timescales and the population
/// standard deviation across them.
pub fn gamma_variation(
    samples_by_timescale: &BTreeMap<Timescale, Vec<f64>>,
    family: Family,
) -> Result<GammaVariation, CorrGofError> {
    let mut gs = [0.0f64; 4];
    for (slot, &t) in VARIATION_TIMESCALES.iter().enumerate() {
        let samples = samples_by_timescale
            .get(&t)
            .ok_or(CorrGofError::MissingTimescale(t))?;
        gs[slot] = gamma(samples, family, t)?.gamma;
    }
    Ok(GammaVariation {
        upsilon: upsilon_of(gs),
        gammas: GammaByTimescale { t_5s: gs[0], t_1s: gs[1], t_100ms: gs[2], t_5ms: gs[3] },
    })
}

/// Population standard deviation of exactly four correlation values;
/// exposed for callers that already have the per-timescale results.
pub fn upsilon_of(gammas: [f64; 4]) -> f64 {
    let mean = gammas.iter().sum::<f64>() / 4.0;
    (gammas.iter().map(|g| (g - mean) * (g - mean)).sum::<f64>() / 4.0).sqrt()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::distributions::Dist;
    use approx::assert_relative_eq;

    #[test]
    fn perfect_grid_gives_gamma_one() {
        // Samples placed exactly at the model quantiles F^-1(i/(n+1))
        // correlate perfectly once the same family is refit.
        let d = Dist::gaussian(10.0, 2.0).unwrap();
        let n = 200;
        let samples: Vec<f64> = (1..=n)
            .map(|i| d.quantile(i as f64 / (n + 1) as f64).unwrap())
            .collect();
        let r = gamma(&samples, Family::Gaussian, Timescale::S_1).unwrap();
        assert_relative_eq!(r.gamma, 1.0, epsilon = 1e-9);
        assert!(r.strong_fit);
    }

    #[test]
    fn constant_samples_error() {
        let err = gamma(&[4.0, 4.0, 4.0, 4.0], Family::Gaussian, Timescale::S_1).unwrap_err();
        // Degenerate input dies in the fit before the correlation.
        assert!(matches!(err, CorrGofError::Fit(DistError::DegenerateSample)));
    }

    #[test]
    fn too_few_samples_error() {
        assert!(matches!(
            gamma(&[1.0, 2.0], Family::Gaussian, Timescale::S_1),
            Err(CorrGofError::TooFewSamples(2))
        ));
    }

    #[test]
    fn lognormal_data_has_strong_fit() {
        let mut strong = 0;
        for seed in 0..10u64 {
            let data = Dist::log_normal(1.0, 0.5).unwrap().sample(9000, 900 + seed);
            let r = gamma(&data, Family::LogNormal, Timescale::MS_100).unwrap();
            strong += r.strong_fit as u32;
        }
        assert!(strong >= 9, "strong {strong}/10");
    }

    #[test]
    fn gamma_bounded_by_one() {
        for seed in 0..20u64 {
            let data = Dist::exponential(0.001).unwrap().sample(500, seed);
            let r = gamma(&data, Family::LogNormal, Timescale::S_1).unwrap();
            assert!(r.gamma.abs() <= 1.0 + 1e-12, "gamma {}", r.gamma);
        }
    }

    #[test]
    fn gamma_invariant_under_input_order() {
        let mut data = Dist::log_normal(2.0, 0.4).unwrap().sample(800, 1);
        let a = gamma(&data, Family::LogNormal, Timescale::S_1).unwrap();
        data.reverse();
        let b = gamma(&data, Family::LogNormal, Timescale::S_1).unwrap();
        assert_eq!(a.gamma, b.gamma);
    }

    #[test]
    fn gamma_affine_invariance() {
        // Gaussian family: any a*x + b with a > 0; log-normal: a*x.
        let data = Dist::gaussian(50.0, 6.0).unwrap().sample(2000, 8);
        let base = gamma(&data, Family::Gaussian, Timescale::S_1).unwrap().gamma;
        let moved: Vec<f64> = data.iter().map(|&x| 3.0 * x + 17.0).collect();
        let shifted = gamma(&moved, Family::Gaussian, Timescale::S_1).unwrap().gamma;
        assert_relative_eq!(base, shifted, epsilon = 1e-9);

        let data = Dist::log_normal(1.0, 0.6).unwrap().sample(2000, 9);
        let base = gamma(&data, Family::LogNormal, Timescale::S_1).unwrap().gamma;
        let scaled: Vec<f64> = data.iter().map(|&x| 1.0e6 * x).collect();
        let s = gamma(&scaled, Family::LogNormal, Timescale::S_1).unwrap().gamma;
        assert_relative_eq!(base, s, epsilon = 1e-9);
    }

    #[test]
    fn upsilon_zero_for_equal_gammas() {
        assert_eq!(upsilon_of([0.97, 0.97, 0.97, 0.97]), 0.0);
    }

    #[test]
    fn upsilon_hand_value() {
        // Population std-dev of {0.9, 0.9, 0.9, 1.0}: mean 0.925,
        // variance (3*0.025^2 + 0.075^2)/4 = 0.001875.
        assert_relative_eq!(upsilon_of([0.9, 0.9, 0.9, 1.0]), 0.001875f64.sqrt(), epsilon = 1e-12);
        assert_relative_eq!(upsilon_of([0.9, 0.9, 0.9, 1.0]), 0.0433, epsilon = 5e-5);
    }

    #[test]
    fn variation_requires_all_four_timescales() {
        let mut map = BTreeMap::new();
        map.insert(Timescale::S_5, vec![1.0, 2.0, 3.0]);
        map.insert(Timescale::S_1, vec![1.0, 2.0, 3.0]);
        let err = gamma_variation(&map, Family::LogNormal).unwrap_err();
        assert!(matches!(err, CorrGofError::MissingTimescale(t) if t == Timescale::MS_100));
    }

    #[test]
    fn variation_small_on_rescaled_lognormal_traffic() {
        // One fine-grained synthetic trace re-aggregated to the four
        // study timescales: the correlation barely moves.
        use crate::series::VolumeSeries;
        let d = Dist::log_normal(11.0, 0.8).unwrap();
        let volumes: Vec<u64> =
            d.sample(180_000, 42).iter().map(|&x| x.round().max(1.0) as u64).collect();
        let fine = VolumeSeries::new(Timescale::MS_5, 0, volumes).unwrap();
        let mut map = BTreeMap::new();
        map.insert(Timescale::MS_5, fine.samples());
        map.insert(Timescale::MS_100, fine.rebin(20).unwrap().samples());
        map.insert(Timescale::S_1, fine.rebin(200).unwrap().samples());
        map.insert(Timescale::S_5, fine.rebin(1000).unwrap().samples());
        let v = gamma_variation(&map, Family::LogNormal).unwrap();
        assert!(v.upsilon < 0.045, "upsilon {}", v.upsilon);
        assert!(v.gammas.t_5ms > 0.95 && v.gammas.t_5s > 0.9, "{:?}", v.gammas);
        let json = serde_json::to_value(v).unwrap();
        assert!(json["gammas"]["100ms"].is_f64());
    }
}
