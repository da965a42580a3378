//! Model adjudication: KS goodness-of-fit with a parametric bootstrap
//! p-value, and normalized log-likelihood-ratio comparison of an
//! alternative family against the log-normal reference.
//!
//! The comparison reports a three-way verdict. A p-value above 0.1 means
//! the sign of the normalized ratio carries no information and the test
//! is inconclusive; otherwise the sign decides which family fits better
//! (negative favours the reference).

use crate::distributions::{fit, fit_lognormal_tail, Dist, DistError, DistFit, Family};
use crate::rng::derive_seed;
use crate::special::erfc;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::f64::consts::SQRT_2;

/// Decision threshold shared by the bootstrap GOF test and the
/// likelihood-ratio test: p-values above it are inconclusive.
pub const INCONCLUSIVE_P: f64 = 0.1;

/// Default bootstrap replicate count; resolves p near the 0.1 threshold
/// to roughly +/-0.01.
pub const DEFAULT_N_BOOT: usize = 1000;

const BOOT_MAX_RETRIES: usize = 10;

#[derive(Debug, thiserror::Error)]
pub enum CompareError {
    #[error("n_boot = {0} is below the minimum of 100")]
    TooFewReplicates(usize),
    #[error("effective sample has {0} values, need at least 2")]
    EffectiveSampleTooSmall(usize),
    #[error("bootstrap replicate {replicate} failed to refit after {attempts} attempts: {source}")]
    ReplicateFit {
        replicate: usize,
        attempts: usize,
        source: DistError,
    },
    #[error("comparison of {0} vs {1} is not supported; the power law only pairs with the log-normal")]
    UnsupportedPair(Family, Family),
    #[error(transparent)]
    Fit(#[from] DistError),
}

/// Outcome of the bootstrap goodness-of-fit test.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GofResult {
    pub ks_stat: f64,
    pub p_value: f64,
    pub n_boot: usize,
    /// True iff `p_value > 0.1`: the family is a plausible fit.
    pub accepted: bool,
}

/// Which model the likelihood-ratio test favours.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Verdict {
    ReferenceBetter,
    AlternativeBetter,
    Inconclusive,
}

/// Outcome of the normalized log-likelihood-ratio comparison.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ComparisonResult {
    /// Normalized ratio: positive favours the alternative, negative the
    /// reference; magnitude is confidence.
    pub r_norm: f64,
    /// Two-sided normal-approximation significance of `r_norm`.
    pub p_value: f64,
    pub verdict: Verdict,
    /// Sum of per-sample log-likelihood differences before normalization.
    pub raw_llr: f64,
    /// Standard deviation of the per-sample differences (1/n convention).
    pub sigma_llr: f64,
}

/// Per-alternative comparisons of the full adjudication.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Comparisons {
    pub exponential: ComparisonResult,
    pub weibull: ComparisonResult,
    pub power_law: ComparisonResult,
}

/// Log-normal GOF plus the three alternative-family comparisons.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AdjudicationSummary {
    pub gof: GofResult,
    pub comparisons: Comparisons,
}

/// Two-sided Kolmogorov-Smirnov distance between `samples` and a fitted
/// model. For power-law fits only values at or above the cutoff enter.
pub fn ks_statistic(samples: &[f64], fit: &DistFit) -> Result<f64, CompareError> {
    let cutoff = match fit.dist {
        // The power law is only defined on its tail whether or not the
        // fit record carries the cutoff separately.
        Dist::PowerLaw(p) => fit.xmin.unwrap_or(p.xmin),
        _ => fit.xmin.unwrap_or(f64::NEG_INFINITY),
    };
    let mut xs: Vec<f64> = samples.iter().copied().filter(|&x| x >= cutoff).collect();
    if xs.len() < 2 {
        return Err(CompareError::EffectiveSampleTooSmall(xs.len()));
    }
    xs.sort_unstable_by(f64::total_cmp);
    Ok(ks_of_sorted(&xs, &fit.dist))
}

fn ks_of_sorted(sorted: &[f64], dist: &Dist) -> f64 {
    let n = sorted.len() as f64;
    let mut ks = 0.0f64;
    for (i, &x) in sorted.iter().enumerate() {
        let f = dist.cdf(x);
        let lo = i as f64 / n;
        let hi = (i + 1) as f64 / n;
        ks = ks.max((hi - f).abs().max((f - lo).abs()));
    }
    ks
}

/// Bootstrap goodness-of-fit p-value for `family` on `samples`.
///
/// Fits the family, then draws `n_boot` synthetic replicates from the
/// fitted model, refits the family to each and computes its KS distance;
/// the p-value is the fraction of replicate distances at or above the
/// observed one. Replicates whose refit fails are redrawn up to 10
/// times. Deterministic for a given seed regardless of scheduling.
pub fn gof_pvalue(
    samples: &[f64],
    family: Family,
    n_boot: usize,
    seed: u64,
) -> Result<GofResult, CompareError> {
    if n_boot < 100 {
        return Err(CompareError::TooFewReplicates(n_boot));
    }
    let fitted = fit(family, samples)?;
    let observed = ks_statistic(samples, &fitted)?;
    let draw_count = fitted.n; // tail size for the power law

    let replicate_ks: Result<Vec<f64>, CompareError> = (0..n_boot)
        .into_par_iter()
        .map(|rep| {
            let mut last_err: Option<DistError> = None;
            for attempt in 0..=BOOT_MAX_RETRIES {
                let sub = derive_seed(seed, (rep * (BOOT_MAX_RETRIES + 1) + attempt) as u64);
                let draws = fitted.dist.sample(draw_count, sub);
                match fit(family, &draws) {
                    Ok(refit) => {
                        let ks = ks_statistic(&draws, &refit)?;
                        return Ok(ks);
                    }
                    Err(e) => last_err = Some(e),
                }
            }
            Err(CompareError::ReplicateFit {
                replicate: rep,
                attempts: BOOT_MAX_RETRIES + 1,
                source: last_err.expect("at least one attempt"),
            })
        })
        .collect();
    let replicate_ks = replicate_ks?;

    let exceed = replicate_ks.iter().filter(|&&k| k >= observed).count();
    let p_value = exceed as f64 / n_boot as f64;
    Ok(GofResult {
        ks_stat: observed,
        p_value,
        n_boot,
        accepted: p_value > INCONCLUSIVE_P,
    })
}

/// Normalized LLR comparison of `alternative` against the log-normal
/// reference fitted to the same sample.
pub fn llr_compare(samples: &[f64], alternative: Family) -> Result<ComparisonResult, CompareError> {
    compare_families(samples, alternative, Family::LogNormal)
}

/// Normalized LLR comparison between two fitted families; positive
/// `r_norm` favours `alternative`.
///
/// When one side is the power law, both likelihoods are evaluated on the
/// tail `x >= xmin` chosen by the power-law fit, and the other side must
/// be log-normal, refit conditionally on that tail so the comparison is
/// like-for-like.
pub fn compare_families(
    samples: &[f64],
    alternative: Family,
    reference: Family,
) -> Result<ComparisonResult, CompareError> {
    let terms = if alternative == Family::PowerLaw || reference == Family::PowerLaw {
        let other = if alternative == Family::PowerLaw { reference } else { alternative };
        if other != Family::LogNormal {
            return Err(CompareError::UnsupportedPair(alternative, reference));
        }
        let pl = fit(Family::PowerLaw, samples)?;
        let xmin = pl.xmin.expect("power-law fit carries xmin");
        let tail: Vec<f64> = samples.iter().copied().filter(|&x| x >= xmin).collect();
        let ln_tail = fit_lognormal_tail(&tail, xmin)?;
        let ln_norm = match ln_tail.dist {
            Dist::LogNormal(p) => {
                // Tail-conditional density: divide by the fitted tail mass.
                let z = (xmin.ln() - p.mu) / p.sigma;
                crate::special::norm_sf(z).ln()
            }
            _ => unreachable!(),
        };
        let sign = if alternative == Family::PowerLaw { 1.0 } else { -1.0 };
        tail.iter()
            .map(|&x| sign * (pl.ln_pdf(x) - (ln_tail.ln_pdf(x) - ln_norm)))
            .collect::<Vec<f64>>()
    } else {
        let alt = fit(alternative, samples)?;
        let refr = fit(reference, samples)?;
        samples.iter().map(|&x| alt.ln_pdf(x) - refr.ln_pdf(x)).collect()
    };
    Ok(vuong_from_terms(&terms))
}

/// Vuong-style normal approximation on per-sample LLR terms.
fn vuong_from_terms(terms: &[f64]) -> ComparisonResult {
    let n = terms.len() as f64;
    let raw_llr: f64 = terms.iter().sum();
    let mean = raw_llr / n;
    let sigma_llr = (terms.iter().map(|&t| (t - mean) * (t - mean)).sum::<f64>() / n).sqrt();
    if sigma_llr == 0.0 || !sigma_llr.is_finite() {
        return ComparisonResult {
            r_norm: 0.0,
            p_value: 1.0,
            verdict: Verdict::Inconclusive,
            raw_llr,
            sigma_llr: 0.0,
        };
    }
    let r_norm = raw_llr / (sigma_llr * n.sqrt());
    let p_value = erfc(r_norm.abs() / SQRT_2);
    let verdict = if p_value > INCONCLUSIVE_P {
        Verdict::Inconclusive
    } else if r_norm < 0.0 {
        Verdict::ReferenceBetter
    } else {
        Verdict::AlternativeBetter
    };
    ComparisonResult { r_norm, p_value, verdict, raw_llr, sigma_llr }
}

/// Full adjudication of a sample: log-normal bootstrap GOF plus the LLR
/// comparison against each alternative family. Deterministic per seed.
pub fn adjudicate(
    samples: &[f64],
    n_boot: usize,
    seed: u64,
) -> Result<AdjudicationSummary, CompareError> {
    let gof = gof_pvalue(samples, Family::LogNormal, n_boot, seed)?;
    Ok(AdjudicationSummary {
        gof,
        comparisons: Comparisons {
            exponential: llr_compare(samples, Family::Exponential)?,
            weibull: llr_compare(samples, Family::Weibull)?,
            power_law: llr_compare(samples, Family::PowerLaw)?,
        },
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ks_near_zero_on_quantile_grid() {
        // Samples placed exactly at the fitted quantiles q((i-0.5)/n)
        // bound the empirical gap by 0.5/n.
        let d = Dist::log_normal(1.0, 0.7).unwrap();
        let n = 500;
        let samples: Vec<f64> = (1..=n)
            .map(|i| d.quantile((i as f64 - 0.5) / n as f64).unwrap())
            .collect();
        let fit = DistFit { dist: d, loglik: 0.0, n, xmin: None };
        let ks = ks_statistic(&samples, &fit).unwrap();
        assert!(ks <= 0.5 / n as f64 + 1e-9, "ks = {ks}");
    }

    #[test]
    fn ks_requires_two_effective_samples() {
        let d = Dist::power_law(2.0, 10.0).unwrap();
        let fit = DistFit { dist: d, loglik: 0.0, n: 1, xmin: Some(10.0) };
        // Only one sample reaches the cutoff.
        let err = ks_statistic(&[1.0, 2.0, 11.0], &fit).unwrap_err();
        assert!(matches!(err, CompareError::EffectiveSampleTooSmall(1)));
    }

    #[test]
    fn ks_detects_gross_misfit() {
        let data = Dist::exponential(1.0).unwrap().sample(2000, 3);
        let wrong = DistFit {
            dist: Dist::gaussian(50.0, 1.0).unwrap(),
            loglik: 0.0,
            n: 2000,
            xmin: None,
        };
        assert!(ks_statistic(&data, &wrong).unwrap() > 0.9);
    }

    #[test]
    fn gof_rejects_small_n_boot() {
        let data = Dist::log_normal(0.0, 1.0).unwrap().sample(100, 1);
        assert!(matches!(
            gof_pvalue(&data, Family::LogNormal, 50, 1),
            Err(CompareError::TooFewReplicates(50))
        ));
    }

    #[test]
    fn gof_accepts_own_model_and_rejects_gross_misfit() {
        // Data from the fitted family: p-value should be comfortably
        // above 0.1 for most seeds; spot-check a few.
        let mut accepted = 0;
        for seed in 0..6u64 {
            let data = Dist::log_normal(2.0, 0.8).unwrap().sample(800, 100 + seed);
            let g = gof_pvalue(&data, Family::LogNormal, 200, seed).unwrap();
            accepted += g.accepted as u32;
        }
        assert!(accepted >= 5, "accepted {accepted}/6");

        // Exponential data tested as Gaussian: out at n = 5000.
        let data = Dist::exponential(1.0).unwrap().sample(5000, 9);
        let g = gof_pvalue(&data, Family::Gaussian, 200, 9).unwrap();
        assert!(!g.accepted, "p = {}", g.p_value);
    }

    #[test]
    fn gof_is_bit_deterministic() {
        let data = Dist::log_normal(0.0, 1.0).unwrap().sample(400, 11);
        let a = gof_pvalue(&data, Family::LogNormal, 150, 42).unwrap();
        let b = gof_pvalue(&data, Family::LogNormal, 150, 42).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn self_comparison_is_inconclusive() {
        let data = Dist::log_normal(1.0, 0.5).unwrap().sample(500, 21);
        let r = compare_families(&data, Family::LogNormal, Family::LogNormal).unwrap();
        assert_eq!(r.raw_llr, 0.0);
        assert_eq!(r.verdict, Verdict::Inconclusive);
        assert_eq!(r.p_value, 1.0);
    }

    #[test]
    fn lognormal_data_favours_reference() {
        let mut wins = 0;
        for seed in 0..10u64 {
            let data = Dist::log_normal(1.0, 0.5).unwrap().sample(9000, 400 + seed);
            let r = llr_compare(&data, Family::Exponential).unwrap();
            if r.verdict == Verdict::ReferenceBetter {
                wins += 1;
            }
            assert!(r.r_norm < 0.0, "seed {seed}: r = {}", r.r_norm);
        }
        assert!(wins >= 9, "wins {wins}/10");
    }

    #[test]
    fn exponential_data_favours_exponential() {
        let mut wins = 0;
        for seed in 0..10u64 {
            let data = Dist::exponential(1.0).unwrap().sample(9000, 500 + seed);
            let r = llr_compare(&data, Family::Exponential).unwrap();
            if r.verdict == Verdict::AlternativeBetter {
                wins += 1;
            }
        }
        assert!(wins >= 9, "wins {wins}/10");
    }

    #[test]
    fn antisymmetry_under_swap() {
        let data = Dist::log_normal(0.5, 0.9).unwrap().sample(2000, 77);
        for (a, b) in [
            (Family::Exponential, Family::LogNormal),
            (Family::Weibull, Family::Gaussian),
            (Family::PowerLaw, Family::LogNormal),
        ] {
            let fwd = compare_families(&data, a, b).unwrap();
            let rev = compare_families(&data, b, a).unwrap();
            assert_eq!(fwd.raw_llr, -rev.raw_llr, "{a} vs {b}");
            assert_eq!(fwd.r_norm, -rev.r_norm);
            assert_eq!(fwd.p_value, rev.p_value);
        }
    }

    #[test]
    fn scaling_preserves_verdict() {
        for seed in 0..10u64 {
            let data = Dist::log_normal(1.0, 0.6).unwrap().sample(1500, 600 + seed);
            let scaled: Vec<f64> = data.iter().map(|&x| x * 1.0e6).collect();
            let a = llr_compare(&data, Family::Gaussian).unwrap();
            let b = llr_compare(&scaled, Family::Gaussian).unwrap();
            assert_eq!(a.verdict, b.verdict, "seed {seed}");
        }
    }

    #[test]
    fn p_value_decreases_in_magnitude() {
        let mut prev = 1.0;
        for i in 1..40 {
            let r = i as f64 / 10.0;
            let p = erfc(r / SQRT_2);
            assert!(p < prev);
            prev = p;
        }
    }

    #[test]
    fn unsupported_power_law_pairing() {
        let data = Dist::log_normal(0.0, 1.0).unwrap().sample(100, 5);
        assert!(matches!(
            compare_families(&data, Family::PowerLaw, Family::Gaussian),
            Err(CompareError::UnsupportedPair(_, _))
        ));
    }

    #[test]
    fn adjudicate_composes_and_serializes() {
        let data = Dist::log_normal(13.8, 0.8).unwrap().sample(3000, 31);
        let summary = adjudicate(&data, 150, 31).unwrap();
        assert_eq!(summary.comparisons.exponential.verdict, Verdict::ReferenceBetter);
        let v = serde_json::to_value(summary).unwrap();
        assert!(v["gof"]["ks_stat"].is_f64());
        for key in ["exponential", "weibull", "power_law"] {
            assert!(v["comparisons"][key]["r_norm"].is_f64(), "missing {key}");
            assert!(v["comparisons"][key]["verdict"].is_string());
        }
    }

    #[test]
    fn adjudicate_propagates_degenerate_input() {
        let constant = vec![5.0; 100];
        assert!(adjudicate(&constant, 150, 0).is_err());
    }
}
