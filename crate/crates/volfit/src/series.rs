//! Packet-record ingestion and fixed-timescale volume binning.
//!
//! A trace is reduced to a [`VolumeSeries`]: total bytes observed in each
//! consecutive bin of width `T`. Bin `i` covers
//! `[start + i*T, start + (i+1)*T)`; a packet stamped exactly on a
//! boundary belongs to the later bin. Timescales are carried as integer
//! nanoseconds so bin arithmetic is exact.

use serde::{Deserialize, Serialize};
use std::fmt;
use std::io::BufRead;
use std::str::FromStr;

/// Default fraction thresholds for the anomaly screen.
pub const DEFAULT_ANOMALY_THRESHOLD: f64 = 0.05;

/// Errors from parsing and aggregation.
#[derive(Debug, thiserror::Error)]
pub enum SeriesError {
    #[error("line {line}: {reason}")]
    Parse { line: usize, reason: String },
    #[error("no data")]
    NoData,
    #[error("timescale must be positive")]
    BadTimescale,
    #[error("invalid timescale string {0:?}")]
    BadTimescaleString(String),
    #[error("{0}")]
    Invalid(String),
    #[error("io: {0}")]
    Io(#[from] std::io::Error),
}

/// One captured packet: arrival time and size on the wire.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct PacketRecord {
    /// Nanoseconds since the epoch.
    pub timestamp_ns: u64,
    /// Packet length in bytes, at least 1.
    pub size: u64,
}

/// An aggregation bin width, stored as whole nanoseconds.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Timescale(u64);

impl Timescale {
    pub const MS_5: Timescale = Timescale(5_000_000);
    pub const MS_100: Timescale = Timescale(100_000_000);
    pub const MS_500: Timescale = Timescale(500_000_000);
    pub const S_1: Timescale = Timescale(1_000_000_000);
    pub const S_5: Timescale = Timescale(5_000_000_000);

    pub fn from_nanos(ns: u64) -> Result<Self, SeriesError> {
        if ns == 0 {
            return Err(SeriesError::BadTimescale);
        }
        Ok(Timescale(ns))
    }

    /// Nearest-nanosecond conversion from seconds.
    pub fn from_secs_f64(secs: f64) -> Result<Self, SeriesError> {
        if !(secs > 0.0) || !secs.is_finite() {
            return Err(SeriesError::BadTimescale);
        }
        let ns = (secs * 1e9).round();
        if ns < 1.0 || ns > u64::MAX as f64 {
            return Err(SeriesError::BadTimescale);
        }
        Ok(Timescale(ns as u64))
    }

    pub fn nanos(self) -> u64 {
        self.0
    }

    pub fn as_secs_f64(self) -> f64 {
        self.0 as f64 / 1e9
    }
}

impl fmt::Display for Timescale {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let ns = self.0;
        if ns.is_multiple_of(1_000_000_000) {
            write!(f, "{}s", ns / 1_000_000_000)
        } else if ns.is_multiple_of(1_000_000) {
            write!(f, "{}ms", ns / 1_000_000)
        } else if ns.is_multiple_of(1_000) {
            write!(f, "{}us", ns / 1_000)
        } else {
            write!(f, "{}ns", ns)
        }
    }
}

impl Serialize for Timescale {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for Timescale {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let text = String::deserialize(d)?;
        text.parse().map_err(serde::de::Error::custom)
    }
}

impl FromStr for Timescale {
    type Err = SeriesError;

    /// Accepts `"5ms"`, `"100ms"`, `"1s"`, `"250us"`, `"12345ns"`, or a
    /// plain number of seconds such as `"0.1"`.
    fn from_str(s: &str) -> Result<Self, SeriesError> {
        let bad = || SeriesError::BadTimescaleString(s.to_string());
        let parse_num = |t: &str| t.parse::<f64>().map_err(|_| bad());
        if let Some(t) = s.strip_suffix("ns") {
            let v = parse_num(t)?;
            Timescale::from_secs_f64(v * 1e-9).map_err(|_| bad())
        } else if let Some(t) = s.strip_suffix("us") {
            Timescale::from_secs_f64(parse_num(t)? * 1e-6).map_err(|_| bad())
        } else if let Some(t) = s.strip_suffix("ms") {
            Timescale::from_secs_f64(parse_num(t)? * 1e-3).map_err(|_| bad())
        } else if let Some(t) = s.strip_suffix('s') {
            Timescale::from_secs_f64(parse_num(t)?).map_err(|_| bad())
        } else {
            Timescale::from_secs_f64(parse_num(s)?).map_err(|_| bad())
        }
    }
}

/// Sidecar metadata for a volume-series CSV.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SeriesMetadata {
    pub timescale_t_seconds: f64,
    pub start_ns: u64,
    pub n: usize,
}

/// Traffic volume per fixed-width time bin.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct VolumeSeries {
    timescale: Timescale,
    start_ns: u64,
    volumes: Vec<u64>,
}

impl VolumeSeries {
    pub fn new(timescale: Timescale, start_ns: u64, volumes: Vec<u64>) -> Result<Self, SeriesError> {
        if volumes.is_empty() {
            return Err(SeriesError::NoData);
        }
        Ok(VolumeSeries { timescale, start_ns, volumes })
    }

    pub fn timescale(&self) -> Timescale {
        self.timescale
    }

    pub fn start_ns(&self) -> u64 {
        self.start_ns
    }

    pub fn volumes(&self) -> &[u64] {
        &self.volumes
    }

    pub fn n(&self) -> usize {
        self.volumes.len()
    }

    /// Bin volumes as floating-point samples for the fitting stages.
    pub fn samples(&self) -> Vec<f64> {
        self.volumes.iter().map(|&v| v as f64).collect()
    }

    pub fn metadata(&self) -> SeriesMetadata {
        SeriesMetadata {
            timescale_t_seconds: self.timescale.as_secs_f64(),
            start_ns: self.start_ns,
            n: self.volumes.len(),
        }
    }

    /// Sum groups of `k` adjacent bins into a series at timescale `k*T`.
    /// A trailing group of fewer than `k` bins is dropped.
    pub fn rebin(&self, k: usize) -> Result<VolumeSeries, SeriesError> {
        if k == 0 {
            return Err(SeriesError::Invalid("rebin factor must be >= 1".into()));
        }
        let coarse: Vec<u64> = self
            .volumes
            .chunks_exact(k)
            .map(|c| c.iter().sum())
            .collect();
        if coarse.is_empty() {
            return Err(SeriesError::Invalid(format!(
                "series of {} bins cannot be rebinned by {}",
                self.volumes.len(),
                k
            )));
        }
        let t = Timescale::from_nanos(self.timescale.nanos() * k as u64)?;
        VolumeSeries::new(t, self.start_ns, coarse)
    }
}

/// Parse packet records from `timestamp_ns,bytes` lines.
///
/// A single leading header line is skipped when its first field is not
/// numeric. Empty input yields an empty record list. CRLF is accepted.
pub fn parse_packet_csv<R: BufRead>(reader: R) -> Result<Vec<PacketRecord>, SeriesError> {
    let mut records = Vec::new();
    for (idx, line) in reader.lines().enumerate() {
        let line = line?;
        let line = line.trim_end_matches('\r');
        if line.is_empty() {
            continue;
        }
        let lineno = idx + 1;
        let mut fields = line.split(',');
        let ts_field = fields.next().unwrap_or("").trim();
        let size_field = fields.next().unwrap_or("").trim();
        if fields.next().is_some() {
            return Err(SeriesError::Parse {
                line: lineno,
                reason: "expected two fields `timestamp_ns,bytes`".into(),
            });
        }
        let ts = match ts_field.parse::<u64>() {
            Ok(v) => v,
            Err(_) if idx == 0 => continue, // header line
            Err(_) => {
                return Err(SeriesError::Parse {
                    line: lineno,
                    reason: format!("bad timestamp {ts_field:?}"),
                })
            }
        };
        let size = size_field.parse::<u64>().map_err(|_| SeriesError::Parse {
            line: lineno,
            reason: format!("bad byte count {size_field:?}"),
        })?;
        if size == 0 {
            return Err(SeriesError::Parse {
                line: lineno,
                reason: "packet size must be >= 1".into(),
            });
        }
        records.push(PacketRecord { timestamp_ns: ts, size });
    }
    Ok(records)
}

/// Bin packet records into a volume series at timescale `T`.
///
/// When `start` is omitted it defaults to the minimum timestamp rounded
/// down to a multiple of `T`. Records before an explicit `start` are
/// excluded. The series ends with the bin containing the last record;
/// no partial bin past it is emitted and bin volumes are never rescaled.
pub fn aggregate(
    records: &[PacketRecord],
    timescale: Timescale,
    start: Option<u64>,
) -> Result<VolumeSeries, SeriesError> {
    let t = timescale.nanos();
    let min_ts = records.iter().map(|r| r.timestamp_ns).min().ok_or(SeriesError::NoData)?;
    let start = start.unwrap_or(min_ts / t * t);
    let max_ts = records
        .iter()
        .map(|r| r.timestamp_ns)
        .filter(|&ts| ts >= start)
        .max()
        .ok_or(SeriesError::NoData)?;
    let n = ((max_ts - start) / t) as usize + 1;
    let mut volumes = vec![0u64; n];
    for r in records {
        if r.timestamp_ns < start {
            continue;
        }
        let bin = ((r.timestamp_ns - start) / t) as usize;
        volumes[bin] += r.size;
    }
    VolumeSeries::new(timescale, start, volumes)
}

/// Outage/saturation screen result.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct AnomalyScreen {
    /// Fraction of bins with zero volume.
    pub frac_zero: f64,
    /// Fraction of bins at or above the capacity threshold.
    pub frac_saturated: f64,
    pub flagged: bool,
}

/// Flag series that spend a large fraction of bins empty or at capacity.
///
/// `capacity` is in bytes per bin. Panics if `capacity == 0` or a
/// threshold is outside `(0, 1)`; these are caller configuration errors.
pub fn anomaly_screen(
    series: &VolumeSeries,
    capacity: u64,
    theta_zero: f64,
    theta_saturated: f64,
) -> AnomalyScreen {
    assert!(capacity > 0, "capacity must be positive");
    assert!(
        theta_zero > 0.0 && theta_zero < 1.0 && theta_saturated > 0.0 && theta_saturated < 1.0,
        "thresholds must lie in (0, 1)"
    );
    let n = series.n() as f64;
    let zeros = series.volumes().iter().filter(|&&v| v == 0).count() as f64;
    let saturated = series.volumes().iter().filter(|&&v| v >= capacity).count() as f64;
    let frac_zero = zeros / n;
    let frac_saturated = saturated / n;
    AnomalyScreen {
        frac_zero,
        frac_saturated,
        flagged: frac_zero >= theta_zero || frac_saturated >= theta_saturated,
    }
}

/// Write a volume series as `bin_index,bytes` CSV.
pub fn write_volume_csv<W: std::io::Write>(series: &VolumeSeries, mut w: W) -> std::io::Result<()> {
    writeln!(w, "bin_index,bytes")?;
    for (i, v) in series.volumes().iter().enumerate() {
        writeln!(w, "{i},{v}")?;
    }
    Ok(())
}

/// Read a volume series from `bin_index,bytes` CSV plus its metadata.
pub fn read_volume_csv<R: BufRead>(
    reader: R,
    meta: &SeriesMetadata,
) -> Result<VolumeSeries, SeriesError> {
    let mut volumes = Vec::with_capacity(meta.n);
    for (idx, line) in reader.lines().enumerate() {
        let line = line?;
        let line = line.trim_end_matches('\r');
        if line.is_empty() {
            continue;
        }
        let lineno = idx + 1;
        let mut fields = line.split(',');
        let bin_field = fields.next().unwrap_or("").trim();
        let bytes_field = fields.next().unwrap_or("").trim();
        let bin = match bin_field.parse::<usize>() {
            Ok(v) => v,
            Err(_) if idx == 0 => continue, // header
            Err(_) => {
                return Err(SeriesError::Parse {
                    line: lineno,
                    reason: format!("bad bin index {bin_field:?}"),
                })
            }
        };
        if bin != volumes.len() {
            return Err(SeriesError::Parse {
                line: lineno,
                reason: format!("bin index {bin} out of order, expected {}", volumes.len()),
            });
        }
        let bytes = bytes_field.parse::<u64>().map_err(|_| SeriesError::Parse {
            line: lineno,
            reason: format!("bad byte count {bytes_field:?}"),
        })?;
        volumes.push(bytes);
    }
    if volumes.len() != meta.n {
        return Err(SeriesError::Invalid(format!(
            "metadata declares {} bins, CSV has {}",
            meta.n,
            volumes.len()
        )));
    }
    let timescale = Timescale::from_secs_f64(meta.timescale_t_seconds)?;
    VolumeSeries::new(timescale, meta.start_ns, volumes)
}
