//! Statistical toolkit for traffic-volume time series: binning of packet
//! records into fixed-timescale volume series, candidate-distribution
//! fitting and model selection, stationarity testing, and application of
//! the fitted models to link capacity planning and 95th-percentile
//! billing prediction.

pub mod special;

pub mod billing;
pub mod corrgof;
pub mod distributions;
pub mod fitcompare;
pub mod provisioning;
pub mod rng;
pub mod series;
pub mod stationarity;
pub mod synth;

pub use distributions::{fit, Dist, DistFit, Family};
pub use series::{aggregate, anomaly_screen, parse_packet_csv, Timescale, VolumeSeries};
