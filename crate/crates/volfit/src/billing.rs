//! 95th-percentile billing: the nearest-rank percentile of per-window
//! volumes, model-predicted percentiles from families fitted to the same
//! windows, and NRMSE scoring of predictions across traces.

use crate::distributions::{fit, DistError, DistFit, Family};
use crate::series::{Timescale, VolumeSeries};
use serde::{Deserialize, Serialize};

/// Billing percentile.
pub const BILLING_PERCENTILE: f64 = 0.95;

/// Fewer windows than this make the 95th percentile vacuous.
pub const MIN_WINDOWS: usize = 20;

#[derive(Debug, thiserror::Error)]
pub enum BillingError {
    #[error("{got} windows; need at least {needed}")]
    TooFewWindows { got: usize, needed: usize },
    #[error("window of {window} is not a whole multiple of the bin width {bin}")]
    WindowNotMultiple { window: Timescale, bin: Timescale },
    #[error("length mismatch: {0} actual vs {1} predicted")]
    LengthMismatch(usize, usize),
    #[error("mean of actual values must be positive")]
    NonPositiveActualMean,
    #[error(transparent)]
    Fit(#[from] DistError),
}

/// Per-window byte totals for one trace.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BillingWindows {
    pub trace_id: String,
    /// Bytes per window.
    pub window_volumes: Vec<u64>,
    /// Window length in seconds.
    pub window_seconds: f64,
}

/// Actual vs per-family predicted 95th-percentile rates for one trace.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PredictedP95 {
    pub lognormal: f64,
    pub weibull: f64,
    pub gaussian: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BillingPrediction {
    pub trace_id: String,
    /// Bytes per second.
    pub actual_p95: f64,
    pub predicted_p95: PredictedP95,
}

/// Per-family NRMSE over a set of traces.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NrmseTable {
    pub lognormal: f64,
    pub weibull: f64,
    pub gaussian: f64,
}

/// A trace the study had to drop, with the reason.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TraceFailure {
    pub trace_id: String,
    pub error: String,
}

/// Output of [`billing_study`].
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct BillingStudy {
    /// Absent when no trace survived to aggregate over.
    pub nrmse: Option<NrmseTable>,
    pub predictions: Vec<BillingPrediction>,
    pub failures: Vec<TraceFailure>,
}

/// Cut a volume series into billing windows by summing whole groups of
/// bins; the window must be an exact multiple of the bin width. A
/// trailing partial window is dropped.
pub fn windows_from_series(
    series: &VolumeSeries,
    window: Timescale,
    trace_id: &str,
) -> Result<BillingWindows, BillingError> {
    let bin = series.timescale();
    if !window.nanos().is_multiple_of(bin.nanos()) {
        return Err(BillingError::WindowNotMultiple { window, bin });
    }
    let k = (window.nanos() / bin.nanos()) as usize;
    let window_volumes: Vec<u64> = series
        .volumes()
        .chunks_exact(k)
        .map(|c| c.iter().sum())
        .collect();
    if window_volumes.len() < MIN_WINDOWS {
        return Err(BillingError::TooFewWindows {
            got: window_volumes.len(),
            needed: MIN_WINDOWS,
        });
    }
    Ok(BillingWindows {
        trace_id: trace_id.to_string(),
        window_volumes,
        window_seconds: window.as_secs_f64(),
    })
}

/// Nearest-rank 95th percentile of window volumes, as bytes per second:
/// sort ascending and take the element at 1-based index
/// `ceil(0.95 * m)`.
pub fn empirical_p95(windows: &BillingWindows) -> Result<f64, BillingError> {
    let m = windows.window_volumes.len();
    if m < MIN_WINDOWS {
        return Err(BillingError::TooFewWindows { got: m, needed: MIN_WINDOWS });
    }
    let mut sorted = windows.window_volumes.clone();
    sorted.sort_unstable();
    let rank = (BILLING_PERCENTILE * m as f64).ceil() as usize; // 1-based
    Ok(sorted[rank - 1] as f64 / windows.window_seconds)
}

/// Model-predicted 95th percentile, as bytes per second, from a family
/// fitted to per-window volumes.
pub fn predicted_p95(fit: &DistFit, window_seconds: f64) -> Result<f64, BillingError> {
    Ok(fit.quantile(BILLING_PERCENTILE)? / window_seconds)
}

/// Root-mean-square prediction error normalized by the mean of the
/// actual values.
pub fn nrmse(actual: &[f64], predicted: &[f64]) -> Result<f64, BillingError> {
    if actual.len() != predicted.len() {
        return Err(BillingError::LengthMismatch(actual.len(), predicted.len()));
    }
    if actual.is_empty() {
        return Err(BillingError::LengthMismatch(0, 0));
    }
    let mean_actual = actual.iter().sum::<f64>() / actual.len() as f64;
    if !(mean_actual > 0.0) {
        return Err(BillingError::NonPositiveActualMean);
    }
    let mse = actual
        .iter()
        .zip(predicted)
        .map(|(&a, &p)| (p - a) * (p - a))
        .sum::<f64>()
        / actual.len() as f64;
    Ok(mse.sqrt() / mean_actual)
}

/// The three families the billing comparison fits.
const BILLING_FAMILIES: [Family; 3] = [Family::LogNormal, Family::Weibull, Family::Gaussian];

fn predict_for_trace(
    windows: &BillingWindows,
) -> Result<BillingPrediction, BillingError> {
    let actual = empirical_p95(windows)?;
    let samples: Vec<f64> = windows.window_volumes.iter().map(|&v| v as f64).collect();
    let mut preds = [0.0f64; 3];
    for (slot, family) in BILLING_FAMILIES.iter().enumerate() {
        let fitted = fit(*family, &samples)?;
        preds[slot] = predicted_p95(&fitted, windows.window_seconds)?;
    }
    Ok(BillingPrediction {
        trace_id: windows.trace_id.clone(),
        actual_p95: actual,
        predicted_p95: PredictedP95 { lognormal: preds[0], weibull: preds[1], gaussian: preds[2] },
    })
}

/// Fit the three billing families to each trace's window volumes,
/// predict the 95th percentile, and score each family's predictions
/// against the actuals with NRMSE. Traces whose windows or fits fail
/// are recorded and excluded from the aggregate.
pub fn billing_study(
    traces: &[(String, VolumeSeries)],
    window: Timescale,
) -> Result<BillingStudy, BillingError> {
    let mut predictions = Vec::new();
    let mut failures = Vec::new();
    for (id, series) in traces {
        let result =
            windows_from_series(series, window, id).and_then(|w| predict_for_trace(&w));
        match result {
            Ok(p) => predictions.push(p),
            Err(e) => failures.push(TraceFailure { trace_id: id.clone(), error: e.to_string() }),
        }
    }
    let actual: Vec<f64> = predictions.iter().map(|p| p.actual_p95).collect();
    let table = if predictions.is_empty() {
        None
    } else {
        let per_family = |pick: fn(&PredictedP95) -> f64| -> Result<f64, BillingError> {
            let predicted: Vec<f64> = predictions.iter().map(|p| pick(&p.predicted_p95)).collect();
            nrmse(&actual, &predicted)
        };
        Some(NrmseTable {
            lognormal: per_family(|p| p.lognormal)?,
            weibull: per_family(|p| p.weibull)?,
            gaussian: per_family(|p| p.gaussian)?,
        })
    };
    Ok(BillingStudy { nrmse: table, predictions, failures })
}
