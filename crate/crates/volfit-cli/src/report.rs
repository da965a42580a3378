//! The full per-trace analysis pipeline behind `volfit report`:
//! screening, adjudication, correlation GOF, stationarity, provisioning
//! and billing for every requested timescale, assembled into one JSON
//! report per trace plus batch CSV tables.

use crate::io::TraceInput;
use anyhow::Result;
use serde::Serialize;
use std::collections::BTreeMap;
use volfit::billing::{billing_study, BillingPrediction};
use volfit::corrgof::{gamma, gamma_variation, GammaResult, GammaVariation, VARIATION_TIMESCALES};
use volfit::distributions::Family;
use volfit::fitcompare::{adjudicate, AdjudicationSummary};
use volfit::provisioning::{evaluate, Method, ProvisioningResult};
use volfit::rng::{derive_seed, hash_str};
use volfit::series::{anomaly_screen, AnomalyScreen, Timescale, VolumeSeries, DEFAULT_ANOMALY_THRESHOLD};
use volfit::stationarity::{classify, StationarityReport};

/// The provisioning rules every report evaluates, mirroring the
/// capacity comparison: the Gaussian closed form against the fitted
/// log-normal and Weibull quantiles.
pub const REPORT_METHODS: [Method; 3] = [
    Method::Meent,
    Method::ModelQuantile(Family::LogNormal),
    Method::ModelQuantile(Family::Weibull),
];

/// A report section: either the payload or an explicit skip reason.
#[derive(Debug, Clone, Serialize)]
#[serde(untagged)]
pub enum Section<T> {
    Present(T),
    Skipped { skipped: String },
}

impl<T> Section<T> {
    fn skipped(reason: impl Into<String>) -> Self {
        Section::Skipped { skipped: reason.into() }
    }
}

/// Echo of the run parameters that shaped a report.
#[derive(Debug, Clone, Serialize)]
pub struct ConfigEcho {
    pub timescales: Vec<String>,
    pub eps: Vec<f64>,
    pub n_boot: usize,
    pub seed: u64,
    pub window_seconds: f64,
    pub capacity_bytes_per_s: Option<f64>,
}

#[derive(Debug, Clone, Serialize)]
pub struct GammaPair {
    pub log_normal: GammaResult,
    pub gaussian: GammaResult,
}

/// Everything computed for one trace at one timescale.
#[derive(Debug, Clone, Serialize)]
pub struct TimescaleReport {
    pub timescale: String,
    pub n: usize,
    pub adjudication: Section<AdjudicationSummary>,
    pub gamma: Section<GammaPair>,
    pub stationarity: Section<StationarityReport>,
    pub provisioning: Section<Vec<ProvisioningResult>>,
}

/// One trace's full report.
#[derive(Debug, Clone, Serialize)]
pub struct TraceReport {
    pub trace_id: String,
    pub toolkit_version: String,
    pub config: ConfigEcho,
    pub anomaly: Section<AnomalyScreen>,
    pub timescales: Vec<TimescaleReport>,
    pub gamma_variation: Section<GammaVariation>,
    pub billing: Section<BillingPrediction>,
}

/// Pipeline settings for one `report` run.
pub struct ReportConfig {
    pub timescales: Vec<Timescale>,
    pub eps: Vec<f64>,
    pub n_boot: usize,
    pub seed: u64,
    pub window: Timescale,
    pub capacity_bytes_per_s: Option<f64>,
}

/// A section that failed outright (as opposed to being skipped for a
/// structural reason); failures flip the exit code to 1.
#[derive(Debug, Clone)]
pub struct SectionFailure {
    pub trace_id: String,
    pub section: String,
    pub error: String,
}

fn fail_section<T>(
    failures: &mut Vec<SectionFailure>,
    trace_id: &str,
    section: &str,
    error: impl std::fmt::Display,
) -> Section<T> {
    let error = error.to_string();
    failures.push(SectionFailure {
        trace_id: trace_id.to_string(),
        section: section.to_string(),
        error: error.clone(),
    });
    Section::skipped(format!("error: {error}"))
}

/// Run the full pipeline for one trace. Every random step derives its
/// seed from the config seed, the trace id and the timescale, so a
/// report is a pure function of (config, input).
pub fn run_trace(
    trace_id: &str,
    input: &TraceInput,
    config: &ReportConfig,
) -> (TraceReport, Vec<SectionFailure>) {
    let mut failures = Vec::new();
    let trace_seed = derive_seed(config.seed, hash_str(trace_id));

    // Materialize the series per timescale; unavailable ones are skips.
    let mut series_by_t: BTreeMap<Timescale, Result<VolumeSeries, String>> = BTreeMap::new();
    for &t in &config.timescales {
        series_by_t.insert(t, input.series_at(t).map_err(|e| e.to_string()));
    }

    // Anomaly screen at the finest resolvable timescale.
    let anomaly = match config.capacity_bytes_per_s {
        None => Section::skipped("capacity not provided (--capacity)"),
        Some(capacity) => {
            let finest = series_by_t.iter().find_map(|(t, s)| s.as_ref().ok().map(|s| (*t, s)));
            match finest {
                None => Section::skipped("no timescale could be materialized"),
                Some((t, series)) => {
                    let per_bin = (capacity * t.as_secs_f64()).round().max(1.0) as u64;
                    Section::Present(anomaly_screen(
                        series,
                        per_bin,
                        DEFAULT_ANOMALY_THRESHOLD,
                        DEFAULT_ANOMALY_THRESHOLD,
                    ))
                }
            }
        }
    };

    let mut timescale_reports = Vec::new();
    for &t in &config.timescales {
        let series = match &series_by_t[&t] {
            Ok(s) => s,
            Err(reason) => {
                timescale_reports.push(TimescaleReport {
                    timescale: t.to_string(),
                    n: 0,
                    adjudication: Section::skipped(reason.clone()),
                    gamma: Section::skipped(reason.clone()),
                    stationarity: Section::skipped(reason.clone()),
                    provisioning: Section::skipped(reason.clone()),
                });
                continue;
            }
        };
        let samples = series.samples();
        let t_seed = derive_seed(trace_seed, t.nanos());

        let adjudication = match adjudicate(&samples, config.n_boot, t_seed) {
            Ok(a) => Section::Present(a),
            Err(e) => fail_section(&mut failures, trace_id, &format!("adjudication@{t}"), e),
        };
        let gamma_section = match (
            gamma(&samples, Family::LogNormal, t),
            gamma(&samples, Family::Gaussian, t),
        ) {
            (Ok(log_normal), Ok(gaussian)) => Section::Present(GammaPair { log_normal, gaussian }),
            (Err(e), _) | (_, Err(e)) => {
                fail_section(&mut failures, trace_id, &format!("gamma@{t}"), e)
            }
        };
        let stationarity = match classify(&samples) {
            Ok(r) => Section::Present(r),
            Err(e) => fail_section(&mut failures, trace_id, &format!("stationarity@{t}"), e),
        };
        let provisioning = {
            let mut rows = Vec::new();
            let mut error = None;
            for &eps in &config.eps {
                match evaluate(series, eps, &REPORT_METHODS) {
                    Ok(mut r) => rows.append(&mut r),
                    Err(e) => {
                        error = Some(e);
                        break;
                    }
                }
            }
            match error {
                None => Section::Present(rows),
                Some(e) => fail_section(&mut failures, trace_id, &format!("provisioning@{t}"), e),
            }
        };

        timescale_reports.push(TimescaleReport {
            timescale: t.to_string(),
            n: series.n(),
            adjudication,
            gamma: gamma_section,
            stationarity,
            provisioning,
        });
    }

    // Cross-timescale correlation stability over the fixed study set.
    let gamma_variation_section = {
        let missing: Vec<Timescale> = VARIATION_TIMESCALES
            .iter()
            .copied()
            .filter(|t| !series_by_t.get(t).map(|s| s.is_ok()).unwrap_or(false))
            .collect();
        if missing.is_empty() {
            let map: BTreeMap<Timescale, Vec<f64>> = VARIATION_TIMESCALES
                .iter()
                .map(|t| (*t, series_by_t[t].as_ref().unwrap().samples()))
                .collect();
            match gamma_variation(&map, Family::LogNormal) {
                Ok(v) => Section::Present(v),
                Err(e) => fail_section(&mut failures, trace_id, "gamma_variation", e),
            }
        } else {
            let names: Vec<String> = missing.iter().map(|t| t.to_string()).collect();
            Section::skipped(format!(
                "requires timescales 5s, 1s, 100ms, 5ms; unavailable: {}",
                names.join(", ")
            ))
        }
    };

    // Billing prediction from the finest materialized series.
    let billing = {
        let finest = series_by_t.iter().find_map(|(_, s)| s.as_ref().ok());
        match finest {
            None => Section::skipped("no timescale could be materialized"),
            Some(series) => {
                match billing_study(&[(trace_id.to_string(), series.clone())], config.window) {
                    Ok(study) if !study.predictions.is_empty() => {
                        Section::Present(study.predictions.into_iter().next().unwrap())
                    }
                    Ok(study) => {
                        let reason = study
                            .failures
                            .first()
                            .map(|f| f.error.clone())
                            .unwrap_or_else(|| "no windows".to_string());
                        fail_section(&mut failures, trace_id, "billing", reason)
                    }
                    Err(e) => fail_section(&mut failures, trace_id, "billing", e),
                }
            }
        }
    };

    let report = TraceReport {
        trace_id: trace_id.to_string(),
        toolkit_version: env!("CARGO_PKG_VERSION").to_string(),
        config: ConfigEcho {
            timescales: config.timescales.iter().map(|t| t.to_string()).collect(),
            eps: config.eps.clone(),
            n_boot: config.n_boot,
            seed: config.seed,
            window_seconds: config.window.as_secs_f64(),
            capacity_bytes_per_s: config.capacity_bytes_per_s,
        },
        anomaly,
        timescales: timescale_reports,
        gamma_variation: gamma_variation_section,
        billing,
    };
    (report, failures)
}

/// Batch provisioning table: one row per (trace, timescale, eps,
/// method). Capacities are carried both as raw bytes/s and as Mbps for
/// presentation.
pub fn summary_csv(reports: &[TraceReport]) -> String {
    let mut out = String::from(
        "trace_id,timescale,eps,method,capacity_bytes_per_s,capacity_mbps,eps_hat\n",
    );
    for report in reports {
        for ts in &report.timescales {
            if let Section::Present(rows) = &ts.provisioning {
                for r in rows {
                    let mbps = r.capacity_bytes_per_s * 8.0 / 1e6;
                    out.push_str(&format!(
                        "{},{},{},{},{},{},{}\n",
                        report.trace_id,
                        ts.timescale,
                        r.target_eps,
                        r.method,
                        r.capacity_bytes_per_s,
                        mbps,
                        r.eps_hat
                    ));
                }
            }
        }
    }
    out
}

/// Billing scatter table (actual vs predicted rates per family).
pub fn billing_plotdata_csv(reports: &[TraceReport]) -> String {
    let mut out = String::from("trace_id,actual_p95,lognormal_p95,weibull_p95,gaussian_p95\n");
    for report in reports {
        if let Section::Present(b) = &report.billing {
            out.push_str(&format!(
                "{},{},{},{},{}\n",
                report.trace_id,
                b.actual_p95,
                b.predicted_p95.lognormal,
                b.predicted_p95.weibull,
                b.predicted_p95.gaussian
            ));
        }
    }
    out
}
