//! Maximum-likelihood fitting for the candidate families.
//!
//! Closed forms for log-normal, Gaussian and exponential; a safeguarded
//! Newton solve of the profile score equation for the Weibull shape; and
//! for the power law a KS-minimizing scan of the lower cutoff over the
//! distinct sample values, with the exponent estimated on the tail.

use super::{Dist, DistError, DistFit, Family, LogNormalParams};
use crate::special::{norm_pdf, norm_sf};

/// Largest fraction of distinct values the power-law cutoff scan may
/// consume; caps the cutoff at the 90th percentile of distinct values so
/// at least a tenth of the sample remains in the tail fit.
const XMIN_SCAN_FRACTION: f64 = 0.9;

const WEIBULL_TOL: f64 = 1e-10;
const WEIBULL_MAX_ITER: usize = 200;

/// Fit `family` to `samples` by maximum likelihood.
pub fn fit(family: Family, samples: &[f64]) -> Result<DistFit, DistError> {
    if samples.len() < 2 {
        return Err(DistError::TooFewSamples { needed: 2, got: samples.len() });
    }
    for (index, &x) in samples.iter().enumerate() {
        if !x.is_finite() {
            return Err(DistError::NonFiniteSample { index });
        }
        if family.requires_positive() && x <= 0.0 {
            return Err(DistError::NonPositiveSample { family, index, value: x });
        }
    }
    let first = samples[0];
    if samples.iter().all(|&x| x == first) {
        return Err(DistError::DegenerateSample);
    }
    match family {
        Family::LogNormal => fit_lognormal(samples),
        Family::Gaussian => fit_gaussian(samples),
        Family::Weibull => fit_weibull(samples),
        Family::Exponential => fit_exponential(samples),
        Family::PowerLaw => fit_powerlaw(samples),
    }
}

fn mean(xs: &[f64]) -> f64 {
    xs.iter().sum::<f64>() / xs.len() as f64
}

/// Population (1/n) variance around a given mean.
fn var_population(xs: &[f64], m: f64) -> f64 {
    xs.iter().map(|&x| (x - m) * (x - m)).sum::<f64>() / xs.len() as f64
}

fn loglik(dist: &Dist, samples: &[f64]) -> f64 {
    samples.iter().map(|&x| dist.ln_pdf(x)).sum()
}

fn fit_lognormal(samples: &[f64]) -> Result<DistFit, DistError> {
    let logs: Vec<f64> = samples.iter().map(|&x| x.ln()).collect();
    let mu = mean(&logs);
    let sigma = var_population(&logs, mu).sqrt();
    if sigma == 0.0 {
        return Err(DistError::DegenerateSample);
    }
    let dist = Dist::log_normal(mu, sigma)?;
    Ok(DistFit { dist, loglik: loglik(&dist, samples), n: samples.len(), xmin: None })
}

fn fit_gaussian(samples: &[f64]) -> Result<DistFit, DistError> {
    let mu = mean(samples);
    let sigma = var_population(samples, mu).sqrt();
    if sigma == 0.0 {
        return Err(DistError::DegenerateSample);
    }
    let dist = Dist::gaussian(mu, sigma)?;
    Ok(DistFit { dist, loglik: loglik(&dist, samples), n: samples.len(), xmin: None })
}

fn fit_exponential(samples: &[f64]) -> Result<DistFit, DistError> {
    let rate = 1.0 / mean(samples);
    let dist = Dist::exponential(rate)?;
    Ok(DistFit { dist, loglik: loglik(&dist, samples), n: samples.len(), xmin: None })
}

/// Weibull shape score: `S(k) = sum(x^k ln x)/sum(x^k) - 1/k - mean(ln x)`,
/// increasing in `k` with a unique root. Evaluated on scale-normalized
/// data (the root is scale-invariant) to keep `x^k` bounded.
fn fit_weibull(samples: &[f64]) -> Result<DistFit, DistError> {
    let xmax = samples.iter().cloned().fold(f64::MIN, f64::max);
    let scaled: Vec<f64> = samples.iter().map(|&x| x / xmax).collect();
    let logs: Vec<f64> = scaled.iter().map(|&x| x.ln()).collect();
    let mean_log = mean(&logs);

    // Method-of-moments start: Var(ln X) = pi^2 / (6 k^2) for a Weibull.
    let log_var = var_population(&logs, mean_log);
    let mut k = std::f64::consts::PI / (6.0 * log_var).sqrt();
    if !k.is_finite() || k <= 0.0 {
        k = 1.0;
    }

    let score_and_slope = |k: f64| -> (f64, f64) {
        let mut sw = 0.0; // sum x^k
        let mut swl = 0.0; // sum x^k ln x
        let mut swll = 0.0; // sum x^k (ln x)^2
        for (&x, &lx) in scaled.iter().zip(&logs) {
            let w = x.powf(k);
            sw += w;
            swl += w * lx;
            swll += w * lx * lx;
        }
        let g = swl / sw - 1.0 / k - mean_log;
        let dg = (swll * sw - swl * swl) / (sw * sw) + 1.0 / (k * k);
        (g, dg)
    };

    // Bracket the root, then run Newton clipped to the bracket.
    let (mut lo, mut hi) = (k, k);
    let g_at = |k: f64| score_and_slope(k).0;
    let mut guard = 0;
    while g_at(lo) > 0.0 {
        lo /= 2.0;
        guard += 1;
        if guard > 200 || lo < 1e-12 {
            return Err(DistError::NoConvergence("weibull shape bracket", guard));
        }
    }
    guard = 0;
    while g_at(hi) < 0.0 {
        hi *= 2.0;
        guard += 1;
        if guard > 200 || hi > 1e9 {
            return Err(DistError::NoConvergence("weibull shape bracket", guard));
        }
    }

    let mut converged = false;
    for _ in 0..WEIBULL_MAX_ITER {
        let (g, dg) = score_and_slope(k);
        if g.abs() < WEIBULL_TOL {
            converged = true;
            break;
        }
        if g > 0.0 {
            hi = hi.min(k);
        } else {
            lo = lo.max(k);
        }
        let step = g / dg;
        let mut next = k - step;
        if !(next > lo && next < hi) || !next.is_finite() {
            next = 0.5 * (lo + hi); // bisection fallback
        }
        if (next - k).abs() < 1e-14 * k.abs() {
            k = next;
            converged = true;
            break;
        }
        k = next;
    }
    if !converged {
        let (g, _) = score_and_slope(k);
        if g.abs() >= WEIBULL_TOL {
            return Err(DistError::NoConvergence("weibull shape newton", WEIBULL_MAX_ITER));
        }
    }

    let lambda_scaled = mean(&scaled.iter().map(|&x| x.powf(k)).collect::<Vec<_>>()).powf(1.0 / k);
    let lambda = lambda_scaled * xmax;
    let dist = Dist::weibull(k, lambda)?;
    Ok(DistFit { dist, loglik: loglik(&dist, samples), n: samples.len(), xmin: None })
}

/// Power-law fit: for each candidate cutoff (every distinct sample value
/// up to the scan cap), estimate `alpha` on the tail by MLE and keep the
/// cutoff whose fitted tail has the smallest KS distance.
fn fit_powerlaw(samples: &[f64]) -> Result<DistFit, DistError> {
    let mut sorted = samples.to_vec();
    sorted.sort_unstable_by(f64::total_cmp);
    let logs: Vec<f64> = sorted.iter().map(|&x| x.ln()).collect();
    let n = sorted.len();

    // Suffix sums of ln x for O(1) alpha at each candidate.
    let mut suffix = vec![0.0; n + 1];
    for i in (0..n).rev() {
        suffix[i] = suffix[i + 1] + logs[i];
    }

    // Candidate cutoffs: first occurrence of each distinct value, capped.
    let mut candidates: Vec<usize> = Vec::new();
    for i in 0..n {
        if i == 0 || sorted[i] != sorted[i - 1] {
            candidates.push(i);
        }
    }
    let keep = ((candidates.len() as f64 * XMIN_SCAN_FRACTION).floor() as usize).max(1);
    candidates.truncate(keep);

    let mut best: Option<(f64, usize, f64)> = None; // (ks, start index, alpha)
    for &start in &candidates {
        let m = n - start;
        if m < 2 {
            continue;
        }
        let xmin_log = logs[start];
        let sum_log_ratio = suffix[start] - m as f64 * xmin_log;
        if sum_log_ratio <= 0.0 {
            continue; // tail is constant
        }
        let alpha = 1.0 + m as f64 / sum_log_ratio;
        let mut ks = 0.0f64;
        for (j, &lx) in logs[start..].iter().enumerate() {
            let f = 1.0 - ((1.0 - alpha) * (lx - xmin_log)).exp();
            let lo = j as f64 / m as f64;
            let hi = (j + 1) as f64 / m as f64;
            ks = ks.max((f - lo).abs().max((hi - f).abs()));
        }
        let better = match best {
            None => true,
            Some((best_ks, _, _)) => ks < best_ks,
        };
        if better {
            best = Some((ks, start, alpha));
        }
    }

    let (_, start, alpha) = best.ok_or(DistError::DegenerateSample)?;
    let xmin = sorted[start];
    let m = n - start;
    let dist = Dist::power_law(alpha, xmin)?;
    Ok(DistFit { dist, loglik: loglik(&dist, &sorted[start..]), n: m, xmin: Some(xmin) })
}

/// Fit a log-normal to tail data `x >= cutoff` by maximizing the
/// tail-conditional likelihood `f(x) / (1 - F(cutoff))`.
///
/// Equivalently a truncated-normal MLE on `ln x`. Solved by Nelder-Mead
/// from the unconditional MLE start; deterministic.
pub fn fit_lognormal_tail(tail: &[f64], cutoff: f64) -> Result<DistFit, DistError> {
    if tail.len() < 2 {
        return Err(DistError::TooFewSamples { needed: 2, got: tail.len() });
    }
    if !(cutoff > 0.0) {
        return Err(DistError::BadParameter(format!("cutoff = {cutoff} must be > 0")));
    }
    for (index, &x) in tail.iter().enumerate() {
        if !(x > 0.0) {
            return Err(DistError::NonPositiveSample {
                family: Family::LogNormal,
                index,
                value: x,
            });
        }
    }
    let logs: Vec<f64> = tail.iter().map(|&x| x.ln()).collect();
    let c = cutoff.ln();
    let m0 = mean(&logs);
    let s0 = var_population(&logs, m0).sqrt();
    if s0 == 0.0 {
        return Err(DistError::DegenerateSample);
    }

    // Negative conditional log-likelihood over (mu, ln sigma), dropping the
    // parameter-free -ln x terms.
    let neg_ll = |mu: f64, ln_sigma: f64| -> f64 {
        let sigma = ln_sigma.exp();
        let tail_mass = norm_sf((c - mu) / sigma);
        if tail_mass <= 0.0 {
            return f64::INFINITY;
        }
        let mut acc = 0.0;
        for &y in &logs {
            let z = (y - mu) / sigma;
            acc += 0.5 * z * z + ln_sigma;
        }
        acc + logs.len() as f64 * tail_mass.ln()
    };

    let (mu, ln_sigma) = nelder_mead_2d(neg_ll, (m0, s0.ln()), 0.25 * s0.max(1e-3), 400, 1e-12);
    let sigma = ln_sigma.exp();
    let dist = Dist::log_normal(mu, sigma)?;
    let tail_mass = norm_sf((c - mu) / sigma);
    let cond_loglik = loglik(&dist, tail) - tail.len() as f64 * tail_mass.ln();
    Ok(DistFit { dist, loglik: cond_loglik, n: tail.len(), xmin: None })
}

/// Minimal deterministic Nelder-Mead on two parameters.
fn nelder_mead_2d<F: Fn(f64, f64) -> f64>(
    f: F,
    start: (f64, f64),
    step: f64,
    max_iter: usize,
    tol: f64,
) -> (f64, f64) {
    let mut simplex = [
        (start.0, start.1),
        (start.0 + step, start.1),
        (start.0, start.1 + step),
    ];
    let mut values = simplex.map(|(a, b)| f(a, b));
    for _ in 0..max_iter {
        // Order best (0) to worst (2).
        let mut order = [0usize, 1, 2];
        order.sort_by(|&a, &b| values[a].total_cmp(&values[b]));
        simplex = order.map(|i| simplex[i]);
        values = order.map(|i| values[i]);
        if (values[2] - values[0]).abs() <= tol * (1.0 + values[0].abs()) {
            break;
        }
        let centroid = (
            0.5 * (simplex[0].0 + simplex[1].0),
            0.5 * (simplex[0].1 + simplex[1].1),
        );
        let reflect = (
            centroid.0 + (centroid.0 - simplex[2].0),
            centroid.1 + (centroid.1 - simplex[2].1),
        );
        let fr = f(reflect.0, reflect.1);
        if fr < values[0] {
            let expand = (
                centroid.0 + 2.0 * (centroid.0 - simplex[2].0),
                centroid.1 + 2.0 * (centroid.1 - simplex[2].1),
            );
            let fe = f(expand.0, expand.1);
            if fe < fr {
                simplex[2] = expand;
                values[2] = fe;
            } else {
                simplex[2] = reflect;
                values[2] = fr;
            }
        } else if fr < values[1] {
            simplex[2] = reflect;
            values[2] = fr;
        } else {
            let contract = (
                centroid.0 + 0.5 * (simplex[2].0 - centroid.0),
                centroid.1 + 0.5 * (simplex[2].1 - centroid.1),
            );
            let fc = f(contract.0, contract.1);
            if fc < values[2] {
                simplex[2] = contract;
                values[2] = fc;
            } else {
                // Shrink toward the best vertex.
                for i in 1..3 {
                    simplex[i] = (
                        simplex[0].0 + 0.5 * (simplex[i].0 - simplex[0].0),
                        simplex[0].1 + 0.5 * (simplex[i].1 - simplex[0].1),
                    );
                    values[i] = f(simplex[i].0, simplex[i].1);
                }
            }
        }
    }
    let mut best = 0;
    for i in 1..3 {
        if values[i] < values[best] {
            best = i;
        }
    }
    simplex[best]
}

/// Truncated-normal score residuals, used by tests to confirm the tail
/// fit satisfies the first-order conditions.
#[allow(dead_code)]
pub(crate) fn lognormal_tail_score(params: &LogNormalParams, tail: &[f64], cutoff: f64) -> (f64, f64) {
    let logs: Vec<f64> = tail.iter().map(|&x| x.ln()).collect();
    let m = logs.len() as f64;
    let alpha = (cutoff.ln() - params.mu) / params.sigma;
    let hazard = norm_pdf(alpha) / norm_sf(alpha);
    let mean_y = mean(&logs);
    let raw_var = logs.iter().map(|&y| (y - params.mu).powi(2)).sum::<f64>() / m;
    let s_mu = (mean_y - params.mu) / params.sigma - hazard;
    let s_sigma = raw_var / (params.sigma * params.sigma) - 1.0 - alpha * hazard;
    (s_mu, s_sigma)
}
