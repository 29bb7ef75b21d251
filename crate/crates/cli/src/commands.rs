use std::io::Write;
use std::path::{Path, PathBuf};

use clap::Args;
use serde::Serialize;
use surfmimo::analysis::{evaluate_link, LinkParams, McsTable, Phy};
use surfmimo::channel::csi;
use surfmimo::experiments::{
    aggregate_capacity, mean_rate, pair_solo_rates, pulse_profile, radiation_benchmark, ring_positions,
    separation_sweep, share_sim, throughput_sweep, AggregationPlan, LinkMode, PulseSettings, RadiationProfile,
    SharingConfig, SharingPair, SweepPoint, FOOT_M,
};
use surfmimo::geometry::{Point2, Point3};
use surfmimo::io::rows::{
    aggregate_rows, pulse_rows, share_rows, AggregateRow, LinkRow, PulseRow, RadiationRow, ShareRow, SweepRow,
};
use surfmimo::io::{config_hash, csi_to_set, parse_csi, CsiRow, Metadata, ResultRow, ResultSet};
use surfmimo::propagation::{BandId, FrequencyBand};
use surfmimo::{Error, Result};

use crate::scene::Setup;
use crate::Output;

#[derive(Debug, Clone, Args, Serialize)]
pub struct SceneArgs {
    /// Built-in surface (`spraypaint`, `cloth`) or a scenario file.
    #[arg(long)]
    pub scene: Option<String>,
    /// Seed of the run; overrides the scenario file's seed.
    #[arg(long)]
    pub seed: Option<u64>,
}

impl SceneArgs {
    fn load(&self, default: &str) -> Result<Setup> {
        Setup::load(self.scene.as_deref().unwrap_or(default), self.seed)
    }
}

/// Band as `2.4ghz:CHANNEL`, `5ghz:CHANNEL` or `915mhz`.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct BandSpec {
    pub id: BandId,
    pub channel: Option<u32>,
}

fn parse_band(s: &str) -> std::result::Result<BandSpec, String> {
    let (id, ch) = match s.split_once(':') {
        Some((id, ch)) => (id, Some(ch.parse::<u32>().map_err(|e| format!("channel: {e}"))?)),
        None => (s, None),
    };
    let id: BandId = id.parse().map_err(|e: Error| e.to_string())?;
    if id != BandId::Ism915 && ch.is_none() {
        return Err(format!("{id} needs a channel, e.g. {id}:1"));
    }
    Ok(BandSpec { id, channel: ch })
}

impl BandSpec {
    fn resolve(&self, bandwidth_mhz: f64) -> Result<FrequencyBand> {
        let bw = bandwidth_mhz * 1e6;
        match (self.id, self.channel) {
            (BandId::Ism2400, Some(c)) => FrequencyBand::wifi_2g4(c, bw),
            (BandId::Ism5000, Some(c)) => FrequencyBand::wifi_5g(c, bw),
            (BandId::Ism915, None) => FrequencyBand::ism_915(bw),
            _ => Err(Error::Domain(format!("band {} takes no channel number", self.id))),
        }
    }
}

fn default_distances_ft(max: u32) -> Vec<f64> {
    (1..=max).map(f64::from).collect()
}

fn meters(feet: &[f64]) -> Vec<f64> {
    feet.iter().map(|f| f * FOOT_M).collect()
}

fn emit<R: ResultRow>(set: &ResultSet<R>, out: &Output, plot: Option<PlotSpec>) -> Result<()> {
    match &out.out {
        Some(path) => {
            set.write(path)?;
            log::info!("wrote {} rows to {}", set.rows.len(), path.display());
            if let (Some(script), Some(plot)) = (&out.plot_script, plot) {
                let text = plot.render(path);
                std::fs::write(script, text).map_err(|e| Error::Io {
                    path: script.clone(),
                    source: e,
                })?;
            }
            Ok(())
        }
        None => {
            let text = set.to_csv_string()?;
            std::io::stdout().write_all(text.as_bytes()).map_err(|e| Error::Io {
                path: PathBuf::from("<stdout>"),
                source: e,
            })
        }
    }
}

/// A gnuplot script plotting one column against another.
struct PlotSpec {
    title: &'static str,
    x: (&'static str, usize),
    y: (&'static str, usize),
}

impl PlotSpec {
    fn render(&self, csv: &Path) -> String {
        format!(
            "set datafile separator ','\nset key autotitle columnhead\nset title '{}'\nset xlabel '{}'\nset ylabel '{}'\nplot '{}' using {}:{} with linespoints\npause -1\n",
            self.title,
            self.x.0,
            self.y.0,
            csv.display(),
            self.x.1,
            self.y.1
        )
    }
}

fn meta<R: ResultRow>(inputs: &impl Serialize, seed: u64) -> Metadata {
    Metadata::new::<R>(config_hash(inputs), seed)
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct ChannelArgs {
    #[command(flatten)]
    pub scene: SceneArgs,
    /// Generate a two-node scene in this mode instead of a scenario file's
    /// explicit nodes.
    #[arg(long)]
    pub mode: Option<LinkMode>,
    /// Distance of the generated scene.
    #[arg(long, default_value_t = 8.0)]
    pub distance_ft: f64,
    #[arg(long, value_parser = parse_band)]
    pub band: Option<BandSpec>,
    #[arg(long, default_value_t = 40.0)]
    pub bandwidth_mhz: f64,
    #[arg(long)]
    pub subcarriers: Option<usize>,
    #[arg(long)]
    pub grid: Option<usize>,
    #[command(flatten)]
    pub output: Output,
}

pub fn channel(a: ChannelArgs) -> Result<()> {
    let mut setup = a.scene.load("spraypaint")?;
    if let Some(b) = &a.band {
        setup.settings.band = b.resolve(a.bandwidth_mhz)?;
        setup.settings.subcarriers = None;
    }
    if let Some(n) = a.subcarriers {
        setup.settings.subcarriers = Some(n);
    }
    if let Some(g) = a.grid {
        setup.settings.model.grid = g;
    }
    let scene = match (&setup.scene, a.mode) {
        (Some(s), None) => s.clone(),
        (_, m) => setup
            .template
            .scene(m.unwrap_or(LinkMode::Surface2x2), a.distance_ft * FOOT_M)?,
    };
    setup.settings.validate()?;
    let m = csi(
        &scene,
        &setup.settings.band,
        setup.settings.n_subcarriers(),
        &setup.settings.model,
    )?;
    let set = csi_to_set(&m, meta::<CsiRow>(&(&a, &setup, &scene), setup.seed));
    emit(&set, &a.output, None)
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct AnalyzeArgs {
    /// CSI file written by `channel`.
    #[arg(long)]
    pub csi: PathBuf,
    /// Transmit SNR in dB.
    #[arg(long)]
    pub snr: f64,
    /// MCS table file; the built-in table when absent.
    #[arg(long)]
    pub mcs: Option<PathBuf>,
    #[arg(long, default_value = "ht")]
    pub phy: Phy,
    /// Channel width; inferred from the subcarrier count when absent.
    #[arg(long)]
    pub bandwidth_mhz: Option<u32>,
    #[arg(long, default_value_t = 1.0)]
    pub beta_esm: f64,
    #[command(flatten)]
    pub output: Output,
}

pub fn analyze(a: AnalyzeArgs) -> Result<()> {
    let bytes = std::fs::read(&a.csi).map_err(|e| Error::Io {
        path: a.csi.clone(),
        source: e,
    })?;
    let m = parse_csi(&bytes)?;
    let table = match &a.mcs {
        Some(p) => McsTable::load(p)?,
        None => McsTable::builtin(),
    };
    let bandwidth_mhz = a.bandwidth_mhz.unwrap_or(if m.len() <= 56 { 20 } else { 40 });
    let params = LinkParams {
        snr_db: a.snr,
        phy: a.phy,
        bandwidth_mhz,
        beta_esm: a.beta_esm,
    };
    let r = evaluate_link(&m, &params, &table)?;
    let set = ResultSet::new(
        meta::<LinkRow>(&(&a, config_hash(&bytes), &table), 0),
        vec![LinkRow::new(&r, a.snr)],
    );
    emit(&set, &a.output, None)
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct SweepArgs {
    #[command(flatten)]
    pub scene: SceneArgs,
    /// Link modes to sweep.
    #[arg(long, value_delimiter = ',', default_values = ["siso", "surface-2x2", "surface-3x3"])]
    pub mode: Vec<LinkMode>,
    /// Transmitter-receiver distances in feet (default 1 to 16).
    #[arg(long, value_delimiter = ',')]
    pub distances_ft: Vec<f64>,
    #[arg(long)]
    pub tx_power_dbm: Option<f64>,
    #[command(flatten)]
    pub output: Output,
}

fn summarize(points: &[SweepPoint], modes: &[LinkMode], key: impl Fn(&SweepPoint) -> String) {
    let base = mean_rate(points, |p| p.mode == modes[0]);
    let mut groups: Vec<String> = points.iter().map(&key).collect();
    groups.dedup();
    for g in groups {
        let m = mean_rate(points, |p| key(p) == g);
        let ratio = if base > 0.0 { m / base } else { f64::NAN };
        eprintln!("{g}: mean PHY rate {:.1} Mbps ({ratio:.2}x)", m / 1e6);
    }
}

pub fn sweep(a: SweepArgs) -> Result<()> {
    let mut setup = a.scene.load("spraypaint")?;
    if let Some(p) = a.tx_power_dbm {
        setup.settings.tx_power_dbm = p;
    }
    let feet = if a.distances_ft.is_empty() {
        default_distances_ft(16)
    } else {
        a.distances_ft.clone()
    };
    let d = meters(&feet);
    let mut points = Vec::new();
    for &mode in &a.mode {
        log::info!("sweeping {mode}");
        points.extend(throughput_sweep(
            &setup.template,
            &d,
            mode,
            &setup.settings,
            &setup.table,
        )?);
    }
    summarize(&points, &a.mode, |p| p.mode.to_string());
    let set = ResultSet::new(
        meta::<SweepRow>(&(&a, &setup), setup.seed),
        points.iter().map(SweepRow::from).collect(),
    );
    let plot = PlotSpec {
        title: "PHY rate against distance",
        x: ("distance (m)", 2),
        y: ("PHY rate (bit/s)", 8),
    };
    emit(&set, &a.output, Some(plot))
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct SeparationArgs {
    #[command(flatten)]
    pub scene: SceneArgs,
    #[arg(long, default_value = "surface-2x2")]
    pub mode: LinkMode,
    /// Antenna-to-contact separations in centimeters.
    #[arg(long, value_delimiter = ',', default_values = ["1", "3", "6"])]
    pub separations_cm: Vec<f64>,
    /// Transmitter-receiver distances in feet (default 1 to 16).
    #[arg(long, value_delimiter = ',')]
    pub distances_ft: Vec<f64>,
    #[command(flatten)]
    pub output: Output,
}

pub fn separation(a: SeparationArgs) -> Result<()> {
    let setup = a.scene.load("spraypaint")?;
    let feet = if a.distances_ft.is_empty() {
        default_distances_ft(16)
    } else {
        a.distances_ft.clone()
    };
    let seps: Vec<f64> = a.separations_cm.iter().map(|c| c / 100.0).collect();
    let points = separation_sweep(
        &setup.template,
        &seps,
        &meters(&feet),
        a.mode,
        &setup.settings,
        &setup.table,
    )?;
    summarize(&points, &[a.mode], |p| format!("{} cm", p.separation_m * 100.0));
    let set = ResultSet::new(
        meta::<SweepRow>(&(&a, &setup), setup.seed),
        points.iter().map(SweepRow::from).collect(),
    );
    let plot = PlotSpec {
        title: "PHY rate against distance",
        x: ("distance (m)", 2),
        y: ("PHY rate (bit/s)", 8),
    };
    emit(&set, &a.output, Some(plot))
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct PulseArgs {
    #[command(flatten)]
    pub scene: SceneArgs,
    /// Generate a two-node scene in this mode instead of a scenario file's
    /// explicit nodes.
    #[arg(long)]
    pub mode: Option<LinkMode>,
    #[arg(long, default_value_t = 5.0)]
    pub distance_ft: f64,
    #[arg(long, default_value_t = 0)]
    pub tx_port: usize,
    #[arg(long, default_value_t = 0)]
    pub rx_port: usize,
    #[arg(long, default_value_t = 1.0)]
    pub pulse_width_ns: f64,
    #[arg(long, default_value_t = 5.0)]
    pub sample_rate_gsps: f64,
    #[arg(long, default_value_t = 300.0)]
    pub horizon_ns: f64,
    #[command(flatten)]
    pub output: Output,
}

pub fn pulse(a: PulseArgs) -> Result<()> {
    let setup = a.scene.load("cloth")?;
    let scene = match (&setup.scene, a.mode) {
        (Some(s), None) => s.clone(),
        (_, m) => setup
            .template
            .scene(m.unwrap_or(LinkMode::SurfaceSiso), a.distance_ft * FOOT_M)?,
    };
    let settings = PulseSettings {
        pulse_width_s: a.pulse_width_ns * 1e-9,
        sample_rate_hz: a.sample_rate_gsps * 1e9,
        horizon_s: a.horizon_ns * 1e-9,
        ..PulseSettings::default()
    };
    let p = pulse_profile(&scene, a.tx_port, a.rx_port, &setup.settings.model, &settings)?;
    eprintln!(
        "{} taps, first arrival {:.3} ns, RMS delay spread {:.3} ns, residual after {} ns {:.3e}",
        p.response.taps.len(),
        p.response.first_arrival_s() * 1e9,
        p.rms_delay_spread_s * 1e9,
        a.horizon_ns,
        p.residual_ratio
    );
    let md = meta::<PulseRow>(&(&a, &setup, &scene), setup.seed)
        .with("taps", p.response.taps.len())
        .with("first_arrival_s", p.response.first_arrival_s())
        .with("rms_delay_spread_s", p.rms_delay_spread_s)
        .with("residual_ratio", p.residual_ratio);
    let set = ResultSet::new(md, pulse_rows(&p));
    let plot = PlotSpec {
        title: "Pulse response",
        x: ("time (s)", 1),
        y: ("magnitude", 4),
    };
    emit(&set, &a.output, Some(plot))
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct AggregateArgs {
    #[command(flatten)]
    pub scene: SceneArgs,
    /// Channel plan: 1 uses DFS channels, 2 adds 2.4 GHz and 915 MHz chains.
    #[arg(long, default_value_t = 1, value_parser = clap::value_parser!(u8).range(1..=2))]
    pub scenario: u8,
    /// Avoid DFS channels (forces plan 2).
    #[arg(long)]
    pub no_dfs: bool,
    /// Distances in feet (default 1 to 10).
    #[arg(long, value_delimiter = ',')]
    pub distances_ft: Vec<f64>,
    #[command(flatten)]
    pub output: Output,
}

pub fn aggregate(a: AggregateArgs) -> Result<()> {
    let setup = a.scene.load("cloth")?;
    let plan = if a.no_dfs || a.scenario == 2 {
        AggregationPlan::scenario2()
    } else {
        AggregationPlan::scenario1()
    };
    let feet = if a.distances_ft.is_empty() {
        default_distances_ft(10)
    } else {
        a.distances_ft.clone()
    };
    let s = &setup.settings;
    let mut rows = Vec::new();
    for d in meters(&feet) {
        let r = aggregate_capacity(
            &plan,
            &setup.template,
            d,
            &s.model,
            s.tx_power_dbm,
            &s.noise,
            s.beta_esm,
            &setup.table,
        )?;
        eprintln!("{:.2} m: {:.1} Mbps", d, r.total_bps / 1e6);
        rows.extend(aggregate_rows(&r));
    }
    let md =
        meta::<AggregateRow>(&(&a, &setup, &plan), setup.seed).with("total_bandwidth_hz", plan.total_bandwidth_hz());
    emit(&ResultSet::new(md, rows), &a.output, None)
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct RadiationArgs {
    #[arg(long, default_value_t = RadiationProfile::default().front_offset_db)]
    pub front_db: f64,
    #[arg(long, default_value_t = RadiationProfile::default().back_offset_db)]
    pub back_db: f64,
    /// Radius of the receiver ring around the transmitter.
    #[arg(long, default_value_t = 1.0)]
    pub radius_m: f64,
    #[arg(long, default_value_t = 36)]
    pub points: usize,
    #[arg(long, default_value_t = surfmimo::experiments::DEFAULT_TX_POWER_DBM)]
    pub tx_power_dbm: f64,
    #[arg(long, default_value_t = 2.437e9)]
    pub frequency_hz: f64,
    #[command(flatten)]
    pub output: Output,
}

pub fn radiation(a: RadiationArgs) -> Result<()> {
    let profile = RadiationProfile {
        front_offset_db: a.front_db,
        back_offset_db: a.back_db,
    };
    let src = Point3::new(0.0, 0.0, 0.0);
    let positions = ring_positions(src, a.radius_m, a.points);
    let air = surfmimo::propagation::AirModel::default();
    let samples = radiation_benchmark(&profile, src, &positions, a.tx_power_dbm, a.frequency_hz, &air)?;
    let set = ResultSet::new(
        meta::<RadiationRow>(&(&a, &air), 0),
        samples.iter().map(RadiationRow::from).collect(),
    );
    emit(&set, &a.output, None)
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct ShareArgs {
    #[command(flatten)]
    pub scene: SceneArgs,
    /// 2.4 GHz channel of each pair.
    #[arg(long, value_delimiter = ',', default_values = ["1", "1"])]
    pub channels: Vec<u32>,
    /// Client-to-AP distance of every pair.
    #[arg(long, default_value_t = 4.0)]
    pub distance_ft: f64,
    /// Airtime taken by other Wi-Fi traffic.
    #[arg(long, default_value_t = 0.0)]
    pub busy: f64,
    #[arg(long, default_value_t = 100_000)]
    pub slots: u64,
    #[command(flatten)]
    pub output: Output,
}

pub fn share(a: ShareArgs) -> Result<()> {
    let setup = a.scene.load("cloth")?;
    let t = &setup.template;
    let n = a.channels.len();
    let h = t.surface.height_m;
    let pairs = a
        .channels
        .iter()
        .enumerate()
        .map(|(i, &channel)| {
            let y = h * (i as f64 + 1.0) / (n as f64 + 1.0);
            SharingPair {
                client: Point2::new(t.tx_x_m, y),
                ap: Point2::new(t.tx_x_m + a.distance_ft * FOOT_M, y),
                channel,
            }
        })
        .collect();
    let cfg = SharingConfig {
        pairs,
        ambient_busy_fraction: a.busy,
    };
    cfg.validate()?;
    let solo = pair_solo_rates(t, &cfg, &setup.settings, &setup.table)?;
    let out = share_sim(&cfg, &solo, a.slots, setup.seeds().sharing)?;
    for (i, o) in out.iter().enumerate() {
        eprintln!(
            "pair {i} on channel {}: {:.1} of {:.1} Mbps ({:.1}% of slots)",
            o.channel,
            o.throughput_bps / 1e6,
            o.solo_bps / 1e6,
            o.won_fraction * 100.0
        );
    }
    let set = ResultSet::new(meta::<ShareRow>(&(&a, &setup, &cfg), setup.seed), share_rows(&out));
    emit(&set, &a.output, None)
}
