use nalgebra::DMatrix;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::results::{Metadata, ResultRow, ResultSet};
use crate::analysis::LinkResult;
use crate::channel::ChannelMatrix;
use crate::error::{Error, Result};
use crate::experiments::{AggregateResult, PairOutcome, PulseProfile, RadiationSample, SweepPoint};
use crate::geometry::PortKind;

/// Largest port count and subcarrier count a CSI file may describe.
pub const MAX_CSI_PORTS: usize = 64;
pub const MAX_CSI_SUBCARRIERS: usize = 4096;

/// One channel entry on one subcarrier.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CsiRow {
    pub subcarrier_index: usize,
    pub rx_port: usize,
    pub tx_port: usize,
    pub re: f64,
    pub im: f64,
    pub mag_db: f64,
    pub phase_rad: f64,
}

impl ResultRow for CsiRow {
    const KIND: &'static str = "channel";
    const COLUMNS: &'static [&'static str] = &[
        "subcarrier_index",
        "rx_port",
        "tx_port",
        "re",
        "im",
        "mag_db",
        "phase_rad",
    ];
}

fn port_list(ports: &[PortKind]) -> String {
    ports.iter().map(|p| p.to_string()).collect::<Vec<_>>().join(" ")
}

fn parse_ports(s: &str) -> Result<Vec<PortKind>> {
    s.split_whitespace()
        .map(|p| match p {
            "surface-contact" => Ok(PortKind::Contact),
            "air-antenna" => Ok(PortKind::Antenna),
            other => Err(Error::format("CSI metadata", format!("unknown port kind '{other}'"))),
        })
        .collect()
}

/// Flattens per-subcarrier matrices into rows, subcarrier-major then row-major.
/// Port kinds and subcarrier frequencies go into `metadata`.
pub fn csi_to_set(csi: &[ChannelMatrix], metadata: Metadata) -> ResultSet<CsiRow> {
    let mut rows = Vec::new();
    for (k, m) in csi.iter().enumerate() {
        for i in 0..m.n_rx() {
            for j in 0..m.n_tx() {
                let z = m.entries[(i, j)];
                rows.push(CsiRow {
                    subcarrier_index: k,
                    rx_port: i,
                    tx_port: j,
                    re: z.re,
                    im: z.im,
                    mag_db: 20.0 * z.norm().log10(),
                    phase_rad: z.arg(),
                });
            }
        }
    }
    let metadata = match csi.first() {
        Some(m) => metadata
            .with("rx_ports", port_list(&m.rx_ports))
            .with("tx_ports", port_list(&m.tx_ports))
            .with(
                "subcarrier_hz",
                csi.iter()
                    .map(|m| m.frequency_hz.to_string())
                    .collect::<Vec<_>>()
                    .join(" "),
            ),
        None => metadata,
    };
    ResultSet::new(metadata, rows)
}

/// Rebuilds per-subcarrier matrices from a CSI file.
///
/// Every (subcarrier, rx, tx) cell must appear exactly once. Without port
/// kinds in the metadata every port is taken to be an antenna; without
/// frequencies every matrix gets frequency zero.
pub fn csi_from_set(set: &ResultSet<CsiRow>) -> Result<Vec<ChannelMatrix>> {
    let err = |m: String| Error::format("CSI file", m);
    if set.rows.is_empty() {
        return Err(err("no rows".into()));
    }
    let max = |f: fn(&CsiRow) -> usize| set.rows.iter().map(f).max().unwrap_or(0);
    let (n_sc, n_rx, n_tx) = (
        max(|r| r.subcarrier_index) + 1,
        max(|r| r.rx_port) + 1,
        max(|r| r.tx_port) + 1,
    );
    if n_rx > MAX_CSI_PORTS || n_tx > MAX_CSI_PORTS || n_sc > MAX_CSI_SUBCARRIERS {
        return Err(err(format!(
            "{n_sc} subcarriers x {n_rx} x {n_tx} ports exceeds the supported size"
        )));
    }
    if set.rows.len() != n_sc * n_rx * n_tx {
        return Err(err(format!(
            "{} rows do not fill {n_sc} subcarriers of {n_rx}x{n_tx}",
            set.rows.len()
        )));
    }
    let mut cells: Vec<Option<Complex64>> = vec![None; n_sc * n_rx * n_tx];
    for r in &set.rows {
        let slot = &mut cells[(r.subcarrier_index * n_rx + r.rx_port) * n_tx + r.tx_port];
        if slot.is_some() {
            return Err(err(format!(
                "duplicate entry subcarrier {} rx {} tx {}",
                r.subcarrier_index, r.rx_port, r.tx_port
            )));
        }
        *slot = Some(Complex64::new(r.re, r.im));
    }
    let extra = &set.metadata.extra;
    let ports = |key: &str, n: usize| -> Result<Vec<PortKind>> {
        match extra.get(key) {
            Some(s) => {
                let p = parse_ports(s)?;
                if p.len() != n {
                    return Err(err(format!("{key} lists {} ports, rows use {n}", p.len())));
                }
                Ok(p)
            }
            None => Ok(vec![PortKind::Antenna; n]),
        }
    };
    let rx_ports = ports("rx_ports", n_rx)?;
    let tx_ports = ports("tx_ports", n_tx)?;
    let freqs: Vec<f64> = match extra.get("subcarrier_hz") {
        Some(s) => {
            let f = s
                .split_whitespace()
                .map(|v| v.parse::<f64>().map_err(|e| err(format!("subcarrier_hz: {e}"))))
                .collect::<Result<Vec<_>>>()?;
            if f.len() != n_sc {
                return Err(err(format!("subcarrier_hz lists {} values, rows use {n_sc}", f.len())));
            }
            f
        }
        None => vec![0.0; n_sc],
    };
    (0..n_sc)
        .map(|k| {
            let base = k * n_rx * n_tx;
            let entries = DMatrix::from_fn(n_rx, n_tx, |i, j| {
                cells[base + i * n_tx + j].expect("row count and uniqueness imply every cell is set")
            });
            ChannelMatrix::new(entries, freqs[k], rx_ports.clone(), tx_ports.clone())
        })
        .collect()
}

/// Parses a CSI CSV file into per-subcarrier matrices.
pub fn parse_csi(bytes: &[u8]) -> Result<Vec<ChannelMatrix>> {
    csi_from_set(&ResultSet::<CsiRow>::parse(bytes)?)
}

/// Link analysis summary.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LinkRow {
    pub mode: String,
    pub snr_db: f64,
    pub capacity_bps: f64,
    pub condition_number: f64,
    pub n_streams: usize,
    /// Space-separated per-stream effective SNRs.
    pub stream_snrs_db: String,
    pub phy_rate_bps: f64,
}

impl ResultRow for LinkRow {
    const KIND: &'static str = "analysis";
    const COLUMNS: &'static [&'static str] = &[
        "mode",
        "snr_db",
        "capacity_bps",
        "condition_number",
        "n_streams",
        "stream_snrs_db",
        "phy_rate_bps",
    ];
}

impl LinkRow {
    pub fn new(r: &LinkResult, snr_db: f64) -> Self {
        LinkRow {
            mode: r.mode.to_string(),
            snr_db,
            capacity_bps: r.capacity_bps,
            condition_number: r.condition_number,
            n_streams: r.n_streams,
            stream_snrs_db: r
                .stream_snrs_db
                .iter()
                .map(|s| s.to_string())
                .collect::<Vec<_>>()
                .join(" "),
            phy_rate_bps: r.phy_rate_bps,
        }
    }
}

/// One point of a throughput or separation sweep.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub mode: String,
    pub distance_m: f64,
    pub separation_m: f64,
    pub capacity_bps: f64,
    pub condition_number: f64,
    pub n_streams: usize,
    pub min_stream_snr_db: f64,
    pub phy_rate_bps: f64,
    pub goodput_bps: f64,
}

impl ResultRow for SweepRow {
    const KIND: &'static str = "sweep";
    const COLUMNS: &'static [&'static str] = &[
        "mode",
        "distance_m",
        "separation_m",
        "capacity_bps",
        "condition_number",
        "n_streams",
        "min_stream_snr_db",
        "phy_rate_bps",
        "goodput_bps",
    ];
}

impl From<&SweepPoint> for SweepRow {
    fn from(p: &SweepPoint) -> Self {
        SweepRow {
            mode: p.mode.to_string(),
            distance_m: p.distance_m,
            separation_m: p.separation_m,
            capacity_bps: p.result.capacity_bps,
            condition_number: p.result.condition_number,
            n_streams: p.result.n_streams,
            min_stream_snr_db: p.result.stream_snrs_db.iter().copied().fold(f64::INFINITY, f64::min),
            phy_rate_bps: p.result.phy_rate_bps,
            goodput_bps: p.goodput_bps,
        }
    }
}

/// One sample of a pulse response.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PulseRow {
    pub time_s: f64,
    pub re: f64,
    pub im: f64,
    pub magnitude: f64,
}

impl ResultRow for PulseRow {
    const KIND: &'static str = "pulse";
    const COLUMNS: &'static [&'static str] = &["time_s", "re", "im", "magnitude"];
}

pub fn pulse_rows(p: &PulseProfile) -> Vec<PulseRow> {
    p.times_s
        .iter()
        .zip(&p.samples)
        .map(|(&t, s)| PulseRow {
            time_s: t,
            re: s.re,
            im: s.im,
            magnitude: s.norm(),
        })
        .collect()
}

/// One chain of an aggregation run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AggregateRow {
    pub distance_m: f64,
    pub center_hz: f64,
    pub bandwidth_hz: f64,
    pub phy: String,
    pub conversion_loss_db: f64,
    pub esnr_db: f64,
    pub rate_bps: f64,
}

impl ResultRow for AggregateRow {
    const KIND: &'static str = "aggregate";
    const COLUMNS: &'static [&'static str] = &[
        "distance_m",
        "center_hz",
        "bandwidth_hz",
        "phy",
        "conversion_loss_db",
        "esnr_db",
        "rate_bps",
    ];
}

pub fn aggregate_rows(r: &AggregateResult) -> Vec<AggregateRow> {
    r.chains
        .iter()
        .map(|c| AggregateRow {
            distance_m: r.distance_m,
            center_hz: c.chain.band.center_hz(),
            bandwidth_hz: c.chain.band.bandwidth_hz(),
            phy: c.chain.phy.to_string(),
            conversion_loss_db: c.chain.conversion_loss_db,
            esnr_db: c.esnr_db,
            rate_bps: c.rate_bps,
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RadiationRow {
    pub x_m: f64,
    pub y_m: f64,
    pub z_m: f64,
    pub front: bool,
    pub reference_dbm: f64,
    pub surface_fed_dbm: f64,
}

impl ResultRow for RadiationRow {
    const KIND: &'static str = "radiation";
    const COLUMNS: &'static [&'static str] = &["x_m", "y_m", "z_m", "front", "reference_dbm", "surface_fed_dbm"];
}

impl From<&RadiationSample> for RadiationRow {
    fn from(s: &RadiationSample) -> Self {
        RadiationRow {
            x_m: s.position.x,
            y_m: s.position.y,
            z_m: s.position.z,
            front: s.front,
            reference_dbm: s.reference_dbm,
            surface_fed_dbm: s.surface_fed_dbm,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ShareRow {
    pub pair: usize,
    pub channel: u32,
    pub solo_bps: f64,
    pub won_fraction: f64,
    pub throughput_bps: f64,
}

impl ResultRow for ShareRow {
    const KIND: &'static str = "share";
    const COLUMNS: &'static [&'static str] = &["pair", "channel", "solo_bps", "won_fraction", "throughput_bps"];
}

pub fn share_rows(outcomes: &[PairOutcome]) -> Vec<ShareRow> {
    outcomes
        .iter()
        .enumerate()
        .map(|(i, o)| ShareRow {
            pair: i,
            channel: o.channel,
            solo_bps: o.solo_bps,
            won_fraction: o.won_fraction,
            throughput_bps: o.throughput_bps,
        })
        .collect()
}
