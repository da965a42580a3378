//! `volfit`: fit traffic-volume distributions, adjudicate the best
//! model, test stationarity, and apply the fitted model to capacity
//! planning and 95th-percentile billing.
//!
//! Exit codes: 0 success, 1 per-trace analysis failures (enumerated on
//! stdout), 2 configuration or input errors (message on stderr). All
//! randomized steps derive from `--seed`; identical invocations produce
//! byte-identical outputs.

mod io;
mod report;

use anyhow::{anyhow, bail, Context, Result};
use clap::{Args, Parser, Subcommand};
use rayon::prelude::*;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use volfit::billing::billing_study;
use volfit::corrgof::gamma;
use volfit::distributions::{fit, Family};
use volfit::fitcompare::{adjudicate, DEFAULT_N_BOOT};
use volfit::provisioning::evaluate;
use volfit::series::Timescale;
use volfit::stationarity::classify;
use volfit::synth::{generate, Regime, SynthKind, SynthSpec};

/// Timescales the `report` command analyses when none are given: the
/// union of the fitting and stationarity study points.
const DEFAULT_REPORT_TIMESCALES: [Timescale; 5] = [
    Timescale::MS_5,
    Timescale::MS_100,
    Timescale::MS_500,
    Timescale::S_1,
    Timescale::S_5,
];

const DEFAULT_EPS: [f64; 4] = [0.5, 0.1, 0.05, 0.01];

/// Accepted timescale range for CLI runs.
const TIMESCALE_RANGE: (u64, u64) = (1_000_000, 60_000_000_000); // 1 ms ..= 60 s

#[derive(Parser)]
#[command(
    name = "volfit",
    version,
    about = "Traffic-volume distribution fitting, model selection, stationarity testing, \
             capacity provisioning and 95th-percentile billing prediction",
    after_help = "Inputs are packet CSVs (`timestamp_ns,bytes`, optional header) or \
                  volume-series CSVs (`bin_index,bytes` next to a `<name>.meta.json` sidecar). \
                  Outputs are deterministic for a fixed --seed."
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Bin a packet-record CSV into a fixed-timescale volume series
    Aggregate(AggregateArgs),
    /// Generate a seeded synthetic volume series
    Synth(SynthArgs),
    /// Fit one distribution family to a volume series
    Fit(FitArgs),
    /// Log-normal GOF plus likelihood-ratio comparison against the
    /// alternative families
    Compare(CompareArgs),
    /// Quantile-correlation goodness of fit at one timescale
    Gamma(GammaArgs),
    /// ADF, PP and KPSS tests with the combined classification
    Stationarity(StationarityArgs),
    /// Capacity estimates and their empirical exceedance
    Provision(ProvisionArgs),
    /// 95th-percentile billing study over one or more traces
    Bill(BillArgs),
    /// Full analysis pipeline; one JSON report per trace plus batch CSVs
    Report(ReportArgs),
}

#[derive(Args)]
struct AggregateArgs {
    /// Packet CSV input
    #[arg(long)]
    input: PathBuf,
    /// Bin width, e.g. 100ms, 1s, or plain seconds
    #[arg(long)]
    timescale: String,
    /// Bin 0 epoch in nanoseconds; defaults to the first packet rounded
    /// down to a bin boundary
    #[arg(long)]
    start_ns: Option<u64>,
    /// Output CSV path (a .meta.json sidecar is written next to it)
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct SynthArgs {
    /// Generator: lognormal | gaussian | exponential | bimodal |
    /// random_walk | regimes
    #[arg(long)]
    kind: String,
    /// Bin count
    #[arg(long)]
    n: usize,
    #[arg(long, default_value = "100ms")]
    timescale: String,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Mean of ln(volume) for lognormal kinds, or the Gaussian mean
    #[arg(long, default_value_t = 13.8155)]
    mu: f64,
    /// Std-dev of ln(volume) for lognormal kinds, or the Gaussian
    /// std-dev
    #[arg(long, default_value_t = 0.8)]
    sigma: f64,
    /// Exponential rate (1/mean volume)
    #[arg(long, default_value_t = 1e-6)]
    rate: f64,
    /// Outage-bin probability (bimodal)
    #[arg(long, default_value_t = 0.3)]
    p_zero: f64,
    /// Saturated-bin probability (bimodal)
    #[arg(long, default_value_t = 0.2)]
    p_saturated: f64,
    /// Capacity in bytes per bin (bimodal)
    #[arg(long, default_value_t = 20_000_000)]
    capacity_bytes: u64,
    /// Step std-dev in bytes (random_walk)
    #[arg(long, default_value_t = 1e5)]
    step_sigma: f64,
    /// Regime segments as mu:sigma:bins[,mu:sigma:bins...] (regimes)
    #[arg(long)]
    segments: Option<String>,
    /// Output CSV path (a .meta.json sidecar is written next to it)
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct FitArgs {
    /// Volume-series CSV, or packet CSV (then --timescale is required)
    #[arg(long)]
    input: PathBuf,
    /// Family: log_normal | gaussian | weibull | exponential | power_law
    #[arg(long, default_value = "log_normal")]
    family: String,
    /// Required for packet input; optional re-bin for volume input
    #[arg(long)]
    timescale: Option<String>,
    /// Output JSON path; stdout if omitted
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct CompareArgs {
    #[arg(long)]
    input: PathBuf,
    #[arg(long)]
    timescale: Option<String>,
    /// Bootstrap replicates for the GOF p-value
    #[arg(long, default_value_t = DEFAULT_N_BOOT)]
    n_boot: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct GammaArgs {
    #[arg(long)]
    input: PathBuf,
    #[arg(long, default_value = "log_normal")]
    family: String,
    #[arg(long)]
    timescale: Option<String>,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct StationarityArgs {
    #[arg(long)]
    input: PathBuf,
    #[arg(long)]
    timescale: Option<String>,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct ProvisionArgs {
    #[arg(long)]
    input: PathBuf,
    #[arg(long)]
    timescale: Option<String>,
    /// Target exceedance probabilities, comma separated
    #[arg(long, value_delimiter = ',', default_values_t = DEFAULT_EPS)]
    eps: Vec<f64>,
    /// json or csv
    #[arg(long, default_value = "json")]
    format: String,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct BillArgs {
    /// One or more trace files
    #[arg(long, num_args = 1.., required = true)]
    input: Vec<PathBuf>,
    #[arg(long)]
    timescale: Option<String>,
    /// Billing window length in seconds
    #[arg(long, default_value_t = 10.0)]
    window_seconds: f64,
    /// json or csv (csv emits the actual-vs-predicted scatter)
    #[arg(long, default_value = "json")]
    format: String,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct ReportArgs {
    /// One or more trace files
    #[arg(long, num_args = 1.., required = true)]
    input: Vec<PathBuf>,
    /// Timescales to analyse, comma separated (default
    /// 5ms,100ms,500ms,1s,5s)
    #[arg(long, value_delimiter = ',')]
    timescale: Vec<String>,
    #[arg(long, value_delimiter = ',', default_values_t = DEFAULT_EPS)]
    eps: Vec<f64>,
    #[arg(long, default_value_t = DEFAULT_N_BOOT)]
    n_boot: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Link capacity in bytes per second, enables the anomaly screen
    #[arg(long)]
    capacity: Option<f64>,
    #[arg(long, default_value_t = 10.0)]
    window_seconds: f64,
    /// Output directory for report files
    #[arg(long)]
    out: PathBuf,
    /// Concurrent trace workers
    #[arg(long, default_value_t = 1)]
    workers: usize,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(0) => ExitCode::SUCCESS,
        Ok(_) => ExitCode::from(1),
        Err(err) => {
            eprintln!("error: {err:#}");
            ExitCode::from(2)
        }
    }
}

/// Returns the number of per-trace failures; any other error is a
/// configuration error (exit 2).
fn run(cli: Cli) -> Result<usize> {
    match cli.command {
        Command::Aggregate(args) => cmd_aggregate(args).map(|()| 0),
        Command::Synth(args) => cmd_synth(args).map(|()| 0),
        Command::Fit(args) => cmd_fit(args).map(|()| 0),
        Command::Compare(args) => cmd_compare(args).map(|()| 0),
        Command::Gamma(args) => cmd_gamma(args).map(|()| 0),
        Command::Stationarity(args) => cmd_stationarity(args).map(|()| 0),
        Command::Provision(args) => cmd_provision(args).map(|()| 0),
        Command::Bill(args) => cmd_bill(args),
        Command::Report(args) => cmd_report(args),
    }
}

fn parse_timescale(text: &str) -> Result<Timescale> {
    let t: Timescale = text.parse().map_err(|e| anyhow!("{e}"))?;
    let (lo, hi) = TIMESCALE_RANGE;
    if t.nanos() < lo || t.nanos() > hi {
        bail!("timescale {t} outside the supported range [1ms, 60s]");
    }
    Ok(t)
}

fn parse_eps_list(eps: &[f64]) -> Result<Vec<f64>> {
    if eps.is_empty() {
        bail!("at least one --eps value is required");
    }
    for &e in eps {
        if !(e > 0.0 && e < 1.0) {
            bail!("eps {e} outside (0, 1)");
        }
    }
    Ok(eps.to_vec())
}

/// Load a series for single-series commands: volume input as-is (or
/// re-binned), packet input aggregated at the required --timescale.
fn load_series(input: &Path, timescale: Option<&str>) -> Result<volfit::series::VolumeSeries> {
    let parsed = match timescale {
        Some(t) => Some(parse_timescale(t)?),
        None => None,
    };
    let loaded = io::load_input(input)?;
    match (&loaded, parsed) {
        (io::TraceInput::Packets(_), None) => {
            bail!("packet input {} requires --timescale", input.display())
        }
        (io::TraceInput::Volumes(s), None) => Ok(s.clone()),
        (_, Some(t)) => loaded.series_at(t),
    }
}

fn cmd_aggregate(args: AggregateArgs) -> Result<()> {
    let t = parse_timescale(&args.timescale)?;
    let loaded = io::load_input(&args.input)?;
    let records = match loaded {
        io::TraceInput::Packets(r) => r,
        io::TraceInput::Volumes(_) => {
            bail!("{} is already a volume series", args.input.display())
        }
    };
    let series = volfit::series::aggregate(&records, t, args.start_ns)?;
    io::write_series(&series, &args.out)
}

fn cmd_synth(args: SynthArgs) -> Result<()> {
    let timescale = parse_timescale(&args.timescale)?;
    let kind = match args.kind.as_str() {
        "lognormal" | "log_normal" => SynthKind::LogNormalIid { mu: args.mu, sigma: args.sigma },
        "gaussian" => SynthKind::GaussianIid { mu: args.mu, sigma: args.sigma },
        "exponential" => SynthKind::ExponentialIid { rate: args.rate },
        "bimodal" => SynthKind::BimodalAnomaly {
            p_zero: args.p_zero,
            p_saturated: args.p_saturated,
            capacity: args.capacity_bytes,
            mu: args.mu,
            sigma: args.sigma,
        },
        "random_walk" | "randomwalk" => SynthKind::RandomWalk { step_sigma: args.step_sigma },
        "regimes" | "regime_schedule" => {
            let text = args
                .segments
                .as_deref()
                .ok_or_else(|| anyhow!("--segments is required for --kind regimes"))?;
            let mut segments = Vec::new();
            for part in text.split(',') {
                let fields: Vec<&str> = part.split(':').collect();
                if fields.len() != 3 {
                    bail!("segment {part:?} is not mu:sigma:bins");
                }
                segments.push(Regime {
                    mu: fields[0].parse().context("segment mu")?,
                    sigma: fields[1].parse().context("segment sigma")?,
                    bins: fields[2].parse().context("segment bins")?,
                });
            }
            SynthKind::RegimeSchedule { segments }
        }
        other => bail!("unknown synth kind {other:?}"),
    };
    let spec = SynthSpec { kind, n: args.n, timescale, seed: args.seed, start_ns: 0 };
    let series = generate(&spec)?;
    io::write_series(&series, &args.out)
}

fn cmd_fit(args: FitArgs) -> Result<()> {
    let family: Family = args.family.parse().map_err(|e| anyhow!("{e}"))?;
    let series = load_series(&args.input, args.timescale.as_deref())?;
    let fitted = fit(family, &series.samples())?;
    io::emit_json(&fitted, args.out.as_deref())
}

fn cmd_compare(args: CompareArgs) -> Result<()> {
    let series = load_series(&args.input, args.timescale.as_deref())?;
    let summary = adjudicate(&series.samples(), args.n_boot, args.seed)?;
    io::emit_json(&summary, args.out.as_deref())
}

fn cmd_gamma(args: GammaArgs) -> Result<()> {
    let family: Family = args.family.parse().map_err(|e| anyhow!("{e}"))?;
    let series = load_series(&args.input, args.timescale.as_deref())?;
    let result = gamma(&series.samples(), family, series.timescale())?;
    io::emit_json(&result, args.out.as_deref())
}

fn cmd_stationarity(args: StationarityArgs) -> Result<()> {
    let series = load_series(&args.input, args.timescale.as_deref())?;
    let report = classify(&series.samples())?;
    io::emit_json(&report, args.out.as_deref())
}

fn cmd_provision(args: ProvisionArgs) -> Result<()> {
    let eps = parse_eps_list(&args.eps)?;
    let series = load_series(&args.input, args.timescale.as_deref())?;
    let mut rows = Vec::new();
    for &e in &eps {
        rows.extend(evaluate(&series, e, &report::REPORT_METHODS)?);
    }
    match args.format.as_str() {
        "json" => io::emit_json(&rows, args.out.as_deref()),
        "csv" => {
            let mut text =
                String::from("eps,method,capacity_bytes_per_s,capacity_mbps,eps_hat\n");
            for r in &rows {
                text.push_str(&format!(
                    "{},{},{},{},{}\n",
                    r.target_eps,
                    r.method,
                    r.capacity_bytes_per_s,
                    r.capacity_bytes_per_s * 8.0 / 1e6,
                    r.eps_hat
                ));
            }
            io::emit_text(&text, args.out.as_deref())
        }
        other => bail!("unsupported --format {other:?} (expected json or csv)"),
    }
}

fn cmd_bill(args: BillArgs) -> Result<usize> {
    let window = Timescale::from_secs_f64(args.window_seconds).map_err(|e| anyhow!("{e}"))?;
    let mut traces = Vec::new();
    for path in &args.input {
        let series = load_series(path, args.timescale.as_deref())?;
        traces.push((io::trace_id(path), series));
    }
    let study = billing_study(&traces, window)?;
    let failures = study.failures.len();
    for f in &study.failures {
        println!("FAIL trace={} section=billing: {}", f.trace_id, f.error);
    }
    match args.format.as_str() {
        "json" => io::emit_json(&study, args.out.as_deref())?,
        "csv" => {
            let mut text =
                String::from("trace_id,actual_p95,lognormal_p95,weibull_p95,gaussian_p95\n");
            for p in &study.predictions {
                text.push_str(&format!(
                    "{},{},{},{},{}\n",
                    p.trace_id,
                    p.actual_p95,
                    p.predicted_p95.lognormal,
                    p.predicted_p95.weibull,
                    p.predicted_p95.gaussian
                ));
            }
            io::emit_text(&text, args.out.as_deref())?;
        }
        other => bail!("unsupported --format {other:?} (expected json or csv)"),
    }
    Ok(failures)
}

fn cmd_report(args: ReportArgs) -> Result<usize> {
    let timescales: Vec<Timescale> = if args.timescale.is_empty() {
        DEFAULT_REPORT_TIMESCALES.to_vec()
    } else {
        args.timescale
            .iter()
            .map(|t| parse_timescale(t))
            .collect::<Result<Vec<_>>>()?
    };
    let eps = parse_eps_list(&args.eps)?;
    if args.n_boot < 100 {
        bail!("--n-boot must be at least 100");
    }
    if args.workers == 0 {
        bail!("--workers must be at least 1");
    }
    let window = Timescale::from_secs_f64(args.window_seconds).map_err(|e| anyhow!("{e}"))?;
    std::fs::create_dir_all(&args.out)
        .with_context(|| format!("create {}", args.out.display()))?;

    let config = report::ReportConfig {
        timescales,
        eps,
        n_boot: args.n_boot,
        seed: args.seed,
        window,
        capacity_bytes_per_s: args.capacity,
    };

    // Load inputs up front so unreadable files are configuration errors.
    let mut inputs = Vec::new();
    for path in &args.input {
        inputs.push((io::trace_id(path), io::load_input(path)?));
    }

    // Traces fan out across workers; per-trace seeds are derived from
    // the trace id, so scheduling cannot change any output.
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(args.workers)
        .build()
        .context("build worker pool")?;
    let mut results: Vec<(report::TraceReport, Vec<report::SectionFailure>)> = pool.install(|| {
        inputs
            .par_iter()
            .map(|(id, input)| report::run_trace(id, input, &config))
            .collect()
    });
    results.sort_by(|a, b| a.0.trace_id.cmp(&b.0.trace_id));

    let mut failures = Vec::new();
    let mut reports = Vec::new();
    for (trace_report, trace_failures) in results {
        failures.extend(trace_failures);
        reports.push(trace_report);
    }

    for r in &reports {
        let path = args.out.join(format!("{}.report.json", r.trace_id));
        io::emit_json(r, Some(&path))?;
    }
    std::fs::write(args.out.join("summary.csv"), report::summary_csv(&reports))?;
    std::fs::write(
        args.out.join("billing.plotdata.csv"),
        report::billing_plotdata_csv(&reports),
    )?;

    for f in &failures {
        println!("FAIL trace={} section={}: {}", f.trace_id, f.section, f.error);
    }
    Ok(failures.len())
}
