//! File-level input and output: packet CSVs, volume-series CSVs with
//! their JSON metadata sidecars, and trace identity.

use anyhow::{bail, Context, Result};
use std::fs::File;
use std::io::{BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};
use volfit::series::{
    aggregate, parse_packet_csv, read_volume_csv, write_volume_csv, SeriesMetadata, Timescale,
    VolumeSeries,
};

/// Sidecar path for a volume-series CSV: `trace.csv` -> `trace.meta.json`.
pub fn metadata_path(csv: &Path) -> PathBuf {
    csv.with_extension("meta.json")
}

/// Trace id: the file stem of the input path.
pub fn trace_id(path: &Path) -> String {
    path.file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| path.to_string_lossy().into_owned())
}

/// What an input file turned out to contain.
pub enum TraceInput {
    /// Packet records; binning happens per requested timescale.
    Packets(Vec<volfit::series::PacketRecord>),
    /// Pre-binned volumes at a fixed timescale.
    Volumes(VolumeSeries),
}

/// Load an input file. A `*.meta.json` sidecar marks it as a
/// volume-series CSV; otherwise it is parsed as packet records.
pub fn load_input(path: &Path) -> Result<TraceInput> {
    let meta_path = metadata_path(path);
    if meta_path.exists() {
        let meta: SeriesMetadata = serde_json::from_reader(
            BufReader::new(File::open(&meta_path).with_context(|| format!("open {}", meta_path.display()))?),
        )
        .with_context(|| format!("parse {}", meta_path.display()))?;
        let file = File::open(path).with_context(|| format!("open {}", path.display()))?;
        let series = read_volume_csv(BufReader::new(file), &meta)
            .with_context(|| format!("parse {}", path.display()))?;
        Ok(TraceInput::Volumes(series))
    } else {
        let file = File::open(path).with_context(|| format!("open {}", path.display()))?;
        let records = parse_packet_csv(BufReader::new(file))
            .with_context(|| format!("parse {}", path.display()))?;
        Ok(TraceInput::Packets(records))
    }
}

impl TraceInput {
    /// Produce the series at `timescale`, aggregating packets directly
    /// or re-binning pre-binned volumes when the ratio is whole.
    pub fn series_at(&self, timescale: Timescale) -> Result<VolumeSeries> {
        match self {
            TraceInput::Packets(records) => {
                aggregate(records, timescale, None).context("aggregate packet records")
            }
            TraceInput::Volumes(series) => {
                let base = series.timescale();
                if timescale == base {
                    return Ok(series.clone());
                }
                if !timescale.nanos().is_multiple_of(base.nanos()) {
                    bail!(
                        "requested timescale {timescale} is not a whole multiple of the \
                         input bins ({base})"
                    );
                }
                let k = (timescale.nanos() / base.nanos()) as usize;
                series.rebin(k).context("re-bin volume series")
            }
        }
    }
}

/// Write a volume series as CSV plus metadata sidecar.
pub fn write_series(series: &VolumeSeries, csv_path: &Path) -> Result<()> {
    let file = File::create(csv_path).with_context(|| format!("create {}", csv_path.display()))?;
    let mut w = BufWriter::new(file);
    write_volume_csv(series, &mut w)?;
    w.flush()?;
    let meta_path = metadata_path(csv_path);
    let meta = serde_json::to_string_pretty(&series.metadata())?;
    std::fs::write(&meta_path, meta + "\n")
        .with_context(|| format!("write {}", meta_path.display()))?;
    Ok(())
}

/// Serialize a value as pretty JSON to a file, or stdout when no path
/// is given.
pub fn emit_json<T: serde::Serialize>(value: &T, out: Option<&Path>) -> Result<()> {
    let text = serde_json::to_string_pretty(value)? + "\n";
    match out {
        Some(path) => std::fs::write(path, text).with_context(|| format!("write {}", path.display()))?,
        None => print!("{text}"),
    }
    Ok(())
}

/// Write raw text to a file or stdout.
pub fn emit_text(text: &str, out: Option<&Path>) -> Result<()> {
    match out {
        Some(path) => std::fs::write(path, text).with_context(|| format!("write {}", path.display()))?,
        None => print!("{text}"),
    }
    Ok(())
}
