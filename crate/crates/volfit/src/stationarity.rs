//! Unit-root and stationarity testing: augmented Dickey-Fuller,
//! Phillips-Perron and KPSS, first-order differencing, and the combined
//! four-way classification.
//!
//! All regressions are constant-only (no deterministic trend): trends in
//! the data are handled by differencing, not trend-augmented tests. ADF
//! lag order defaults to Schwert's rule `floor(12*(n/100)^(1/4))`;
//! long-run variances use a Bartlett kernel with bandwidth
//! `floor(4*(n/100)^(2/9))`. Test statistics are invariant to affine
//! transformations of the input, which is standardized internally before
//! any regression.
//!
//! P-values come from MacKinnon's response surface for the Dickey-Fuller
//! distribution (ADF and PP) and from interpolation of the published
//! KPSS level-case table; values outside the tabulated range are clamped
//! and flagged.

use serde::{Deserialize, Serialize};

/// Default decision threshold on p-values; exposed for sensitivity runs.
pub const DEFAULT_ALPHA: f64 = 0.05;

/// Clamp range for the Dickey-Fuller surface p-values.
const DF_P_RANGE: (f64, f64) = (0.001, 0.99);
/// Clamp range for the KPSS table p-values.
const KPSS_P_RANGE: (f64, f64) = (0.01, 0.10);

#[derive(Debug, thiserror::Error)]
pub enum StationarityError {
    #[error("series of length {got} is too short; need at least {needed}")]
    TooShort { got: usize, needed: usize },
    #[error("series too short for lag order {lag}: only {obs} usable observations")]
    TooShortForLag { lag: usize, obs: usize },
    #[error("zero-variance regression: series is constant")]
    ConstantSeries,
    #[error("singular regression matrix")]
    Singular,
    #[error("sample contains a non-finite value at index {0}")]
    NonFinite(usize),
}

/// Which test produced a result.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum UnitRootTest {
    Adf,
    Pp,
    Kpss,
}

/// Per-test reading of the series.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Verdict {
    Stationary,
    NonStationary,
    Inconclusive,
}

/// Result of one unit-root / stationarity test.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct UnitRootTestResult {
    pub test: UnitRootTest,
    #[serde(rename = "stat")]
    pub statistic: f64,
    #[serde(rename = "p")]
    pub p_value: f64,
    /// ADF: lag order; PP/KPSS: Newey-West bandwidth.
    #[serde(rename = "lags")]
    pub lags_or_bandwidth: usize,
    pub verdict: Verdict,
    /// True when the p-value hit the edge of the tabulated range.
    pub clamped: bool,
}

/// Combined classification over levels and first differences.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Classification {
    Stationary,
    DifferenceStationary,
    NonStationary,
    Inconclusive,
}

/// All four test runs plus the combined classification.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StationarityReport {
    pub adf: UnitRootTestResult,
    pub pp: UnitRootTestResult,
    pub kpss: UnitRootTestResult,
    /// KPSS re-run on the first difference.
    pub kpss_diff: UnitRootTestResult,
    pub classification: Classification,
}

/// First-order difference: `out[i] = in[i+1] - in[i]`.
pub fn difference(series: &[f64]) -> Result<Vec<f64>, StationarityError> {
    if series.len() < 2 {
        return Err(StationarityError::TooShort { got: series.len(), needed: 2 });
    }
    Ok(series.windows(2).map(|w| w[1] - w[0]).collect())
}

/// Schwert's default ADF lag order.
pub fn schwert_lag(n: usize) -> usize {
    (12.0 * (n as f64 / 100.0).powf(0.25)).floor() as usize
}

/// Newey-West bandwidth used by the PP and KPSS tests.
pub fn newey_west_bandwidth(n: usize) -> usize {
    (4.0 * (n as f64 / 100.0).powf(2.0 / 9.0)).floor() as usize
}

fn validate(series: &[f64], needed: usize) -> Result<(), StationarityError> {
    if series.len() < needed {
        return Err(StationarityError::TooShort { got: series.len(), needed });
    }
    for (i, v) in series.iter().enumerate() {
        if !v.is_finite() {
            return Err(StationarityError::NonFinite(i));
        }
    }
    Ok(())
}

/// Standardize to zero mean, unit variance. The tests are studentized,
/// so this changes nothing mathematically while keeping the normal
/// equations well conditioned for byte-scale inputs.
fn standardize(series: &[f64]) -> Result<Vec<f64>, StationarityError> {
    let n = series.len() as f64;
    let mean = series.iter().sum::<f64>() / n;
    let var = series.iter().map(|&x| (x - mean) * (x - mean)).sum::<f64>() / n;
    if var == 0.0 {
        return Err(StationarityError::ConstantSeries);
    }
    let sd = var.sqrt();
    Ok(series.iter().map(|&x| (x - mean) / sd).collect())
}

/// OLS by Cholesky on the normal equations. Returns coefficients,
/// residuals, and the requested diagonal element of `(X'X)^-1`.
struct Ols {
    beta: Vec<f64>,
    residuals: Vec<f64>,
    inv_diag: f64,
    /// Residual variance with denominator `nobs - k`.
    s2: f64,
}

fn ols(x: &[Vec<f64>], y: &[f64], se_index: usize) -> Result<Ols, StationarityError> {
    let nobs = x.len();
    let k = x[0].len();
    if nobs <= k {
        return Err(StationarityError::TooShortForLag { lag: k.saturating_sub(2), obs: nobs });
    }
    let mut xtx = vec![vec![0.0f64; k]; k];
    let mut xty = vec![0.0f64; k];
    for (row, &yi) in x.iter().zip(y) {
        for i in 0..k {
            xty[i] += row[i] * yi;
            for j in i..k {
                xtx[i][j] += row[i] * row[j];
            }
        }
    }
    for i in 0..k {
        for j in 0..i {
            xtx[i][j] = xtx[j][i];
        }
    }
    let chol = cholesky(&xtx)?;
    let beta = chol_solve(&chol, &xty);
    let mut unit = vec![0.0; k];
    unit[se_index] = 1.0;
    let inv_col = chol_solve(&chol, &unit);
    let residuals: Vec<f64> = x
        .iter()
        .zip(y)
        .map(|(row, &yi)| yi - row.iter().zip(&beta).map(|(a, b)| a * b).sum::<f64>())
        .collect();
    let ssr: f64 = residuals.iter().map(|r| r * r).sum();
    Ok(Ols { beta, residuals, inv_diag: inv_col[se_index], s2: ssr / (nobs - k) as f64 })
}

fn cholesky(a: &[Vec<f64>]) -> Result<Vec<Vec<f64>>, StationarityError> {
    let n = a.len();
    let mut l = vec![vec![0.0f64; n]; n];
    for i in 0..n {
        for j in 0..=i {
            let mut sum = a[i][j];
            for p in 0..j {
                sum -= l[i][p] * l[j][p];
            }
            if i == j {
                if sum <= 0.0 || !sum.is_finite() {
                    return Err(StationarityError::Singular);
                }
                l[i][j] = sum.sqrt();
            } else {
                l[i][j] = sum / l[j][j];
            }
        }
    }
    Ok(l)
}

fn chol_solve(l: &[Vec<f64>], b: &[f64]) -> Vec<f64> {
    let n = l.len();
    let mut y = vec![0.0f64; n];
    for i in 0..n {
        let mut sum = b[i];
        for j in 0..i {
            sum -= l[i][j] * y[j];
        }
        y[i] = sum / l[i][i];
    }
    let mut x = vec![0.0f64; n];
    for i in (0..n).rev() {
        let mut sum = y[i];
        for j in i + 1..n {
            sum -= l[j][i] * x[j];
        }
        x[i] = sum / l[i][i];
    }
    x
}

/// Bartlett-kernel long-run variance of residuals (1/n convention).
fn long_run_variance(e: &[f64], bandwidth: usize) -> f64 {
    let n = e.len() as f64;
    let gamma0 = e.iter().map(|x| x * x).sum::<f64>() / n;
    let mut lrv = gamma0;
    for j in 1..=bandwidth {
        if j >= e.len() {
            break;
        }
        let cov: f64 = e[j..].iter().zip(e).map(|(a, b)| a * b).sum::<f64>() / n;
        let weight = 1.0 - j as f64 / (bandwidth + 1) as f64;
        lrv += 2.0 * weight * cov;
    }
    lrv
}

// MacKinnon (1994) response surface for the constant-only
// Dickey-Fuller distribution: p = Phi(polynomial(tau)).
const MACKINNON_TAU_MAX: f64 = 2.74;
const MACKINNON_TAU_MIN: f64 = -18.83;
const MACKINNON_TAU_STAR: f64 = -1.61;
const MACKINNON_SMALL: [f64; 3] = [2.1659, 1.4412, 3.8269e-2];
const MACKINNON_LARGE: [f64; 4] = [1.7339, 9.3202e-1, -1.2745e-1, -1.0368e-2];

fn dickey_fuller_pvalue(tau: f64) -> (f64, bool) {
    let raw = if tau > MACKINNON_TAU_MAX {
        1.0
    } else if tau < MACKINNON_TAU_MIN {
        0.0
    } else if tau <= MACKINNON_TAU_STAR {
        let z = MACKINNON_SMALL[0] + MACKINNON_SMALL[1] * tau + MACKINNON_SMALL[2] * tau * tau;
        crate::special::norm_cdf(z)
    } else {
        let z = MACKINNON_LARGE[0]
            + MACKINNON_LARGE[1] * tau
            + MACKINNON_LARGE[2] * tau * tau
            + MACKINNON_LARGE[3] * tau * tau * tau;
        crate::special::norm_cdf(z)
    };
    let clamped = raw.clamp(DF_P_RANGE.0, DF_P_RANGE.1);
    (clamped, clamped != raw)
}

// Published KPSS critical values for the level-stationarity case.
const KPSS_TABLE: [(f64, f64); 4] =
    [(0.347, 0.10), (0.463, 0.05), (0.574, 0.025), (0.739, 0.01)];

fn kpss_pvalue(stat: f64) -> (f64, bool) {
    if stat <= KPSS_TABLE[0].0 {
        return (KPSS_P_RANGE.1, true);
    }
    if stat >= KPSS_TABLE[3].0 {
        return (KPSS_P_RANGE.0, true);
    }
    for w in KPSS_TABLE.windows(2) {
        let (s0, p0) = w[0];
        let (s1, p1) = w[1];
        if stat <= s1 {
            let t = (stat - s0) / (s1 - s0);
            return (p0 + t * (p1 - p0), false);
        }
    }
    unreachable!("stat inside table range");
}

fn unit_root_verdict(p: f64, alpha: f64) -> Verdict {
    if p <= alpha {
        Verdict::Stationary
    } else {
        Verdict::Inconclusive
    }
}

fn kpss_verdict(p: f64, alpha: f64) -> Verdict {
    if p <= alpha {
        Verdict::NonStationary
    } else {
        Verdict::Inconclusive
    }
}

/// Augmented Dickey-Fuller test (constant, no trend) at the default
/// 0.05 threshold. `max_lag` overrides Schwert's rule.
pub fn adf_test(
    series: &[f64],
    max_lag: Option<usize>,
) -> Result<UnitRootTestResult, StationarityError> {
    adf_test_alpha(series, max_lag, DEFAULT_ALPHA)
}

pub fn adf_test_alpha(
    series: &[f64],
    max_lag: Option<usize>,
    alpha: f64,
) -> Result<UnitRootTestResult, StationarityError> {
    validate(series, 20)?;
    let z = standardize(series)?;
    let n = z.len();
    let lag = max_lag.unwrap_or_else(|| schwert_lag(n));

    let dz: Vec<f64> = z.windows(2).map(|w| w[1] - w[0]).collect();
    // Rows are times tau = lag+1 .. n-1 (0-based into z).
    let nobs = n.checked_sub(1 + lag).filter(|&m| m > lag + 2).ok_or(
        StationarityError::TooShortForLag { lag, obs: n.saturating_sub(1 + lag) },
    )?;
    let k = lag + 2;
    let mut x = Vec::with_capacity(nobs);
    let mut y = Vec::with_capacity(nobs);
    for tau in (lag + 1)..n {
        let mut row = Vec::with_capacity(k);
        row.push(1.0);
        row.push(z[tau - 1]);
        for j in 1..=lag {
            row.push(dz[tau - 1 - j]);
        }
        x.push(row);
        y.push(dz[tau - 1]);
    }
    let fit = ols(&x, &y, 1)?;
    let se = (fit.s2 * fit.inv_diag).sqrt();
    let tau_stat = fit.beta[1] / se;
    let (p_value, clamped) = dickey_fuller_pvalue(tau_stat);
    Ok(UnitRootTestResult {
        test: UnitRootTest::Adf,
        statistic: tau_stat,
        p_value,
        lags_or_bandwidth: lag,
        verdict: unit_root_verdict(p_value, alpha),
        clamped,
    })
}

/// Phillips-Perron Z-tau test (constant, no trend) at the default 0.05
/// threshold.
pub fn pp_test(series: &[f64]) -> Result<UnitRootTestResult, StationarityError> {
    pp_test_alpha(series, DEFAULT_ALPHA)
}

pub fn pp_test_alpha(series: &[f64], alpha: f64) -> Result<UnitRootTestResult, StationarityError> {
    validate(series, 20)?;
    let z = standardize(series)?;
    let n = z.len();
    let nobs = n - 1;
    let mut x = Vec::with_capacity(nobs);
    let mut y = Vec::with_capacity(nobs);
    for tau in 1..n {
        x.push(vec![1.0, z[tau - 1]]);
        y.push(z[tau] - z[tau - 1]);
    }
    let fit = ols(&x, &y, 1)?;
    let se = (fit.s2 * fit.inv_diag).sqrt();
    let tau_stat = fit.beta[1] / se;

    let bandwidth = newey_west_bandwidth(nobs);
    let gamma0 = fit.residuals.iter().map(|r| r * r).sum::<f64>() / nobs as f64;
    let lam2 = long_run_variance(&fit.residuals, bandwidth);
    // Serial-correlation correction of the t-ratio (Bartlett-kernel
    // long-run variance lam2 against the short-run gamma0).
    let s = fit.s2.sqrt();
    let z_tau = (gamma0 / lam2).sqrt() * tau_stat
        - (lam2 - gamma0) / (2.0 * lam2.sqrt()) * (nobs as f64 * se / s);
    let (p_value, clamped) = dickey_fuller_pvalue(z_tau);
    Ok(UnitRootTestResult {
        test: UnitRootTest::Pp,
        statistic: z_tau,
        p_value,
        lags_or_bandwidth: bandwidth,
        verdict: unit_root_verdict(p_value, alpha),
        clamped,
    })
}

/// KPSS level-stationarity test at the default 0.05 threshold.
pub fn kpss_test(series: &[f64]) -> Result<UnitRootTestResult, StationarityError> {
    kpss_test_alpha(series, DEFAULT_ALPHA)
}

pub fn kpss_test_alpha(series: &[f64], alpha: f64) -> Result<UnitRootTestResult, StationarityError> {
    validate(series, 20)?;
    let z = standardize(series)?;
    let n = z.len();
    // Level case: residuals from the mean. z is standardized, so the
    // residuals are z itself; the demean is kept for clarity.
    let mean = z.iter().sum::<f64>() / n as f64;
    let e: Vec<f64> = z.iter().map(|&v| v - mean).collect();
    let mut partial = 0.0;
    let mut sum_s2 = 0.0;
    for &r in &e {
        partial += r;
        sum_s2 += partial * partial;
    }
    let bandwidth = newey_west_bandwidth(n);
    let lrv = long_run_variance(&e, bandwidth);
    if lrv <= 0.0 {
        return Err(StationarityError::Singular);
    }
    let stat = sum_s2 / (n as f64 * n as f64 * lrv);
    let (p_value, clamped) = kpss_pvalue(stat);
    Ok(UnitRootTestResult {
        test: UnitRootTest::Kpss,
        statistic: stat,
        p_value,
        lags_or_bandwidth: bandwidth,
        verdict: kpss_verdict(p_value, alpha),
        clamped,
    })
}

/// Run ADF, PP and KPSS on the series plus KPSS on its first
/// difference, and combine them:
///
/// * ADF stationary and KPSS not non-stationary: stationary;
/// * ADF stationary, KPSS non-stationary, differenced KPSS passing:
///   difference stationary;
/// * ADF inconclusive and KPSS non-stationary: non-stationary;
/// * anything else: inconclusive.
pub fn classify(series: &[f64]) -> Result<StationarityReport, StationarityError> {
    classify_alpha(series, DEFAULT_ALPHA)
}

pub fn classify_alpha(series: &[f64], alpha: f64) -> Result<StationarityReport, StationarityError> {
    validate(series, 21)?;
    let adf = adf_test_alpha(series, None, alpha)?;
    let pp = pp_test_alpha(series, alpha)?;
    let kpss = kpss_test_alpha(series, alpha)?;
    let diff = difference(series)?;
    let kpss_diff = kpss_test_alpha(&diff, alpha)?;

    let classification = match (adf.verdict, kpss.verdict, kpss_diff.verdict) {
        (Verdict::Stationary, k, _) if k != Verdict::NonStationary => Classification::Stationary,
        (Verdict::Stationary, Verdict::NonStationary, Verdict::Inconclusive) => {
            Classification::DifferenceStationary
        }
        (Verdict::Inconclusive, Verdict::NonStationary, _) => Classification::NonStationary,
        _ => Classification::Inconclusive,
    };
    Ok(StationarityReport { adf, pp, kpss, kpss_diff, classification })
}
