//! Figure sweeps: configuration loading, orchestration and row output.
//!
//! A sweep produces [`ResultRow`]s in a fixed order (grid point, then
//! scheme in the configured order, then simulated before analytic). Grid
//! points may be evaluated on several threads; rows are reassembled in
//! grid order, and every simulation is itself worker-count independent,
//! so the output bytes depend only on the spec.

use std::collections::BTreeSet;
use std::io::Write;
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::analytic::{adb_closed_form, AdbAnalyticConfig};
use crate::channel::ChannelParams;
use crate::error::{Error, Result};
use crate::power::{maximize, Evaluation, MaximizeOptions, PowerBudget};
use crate::sim::{simulate, ProtocolKind, SimConfig, DEFAULT_SLOTS};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ExperimentKind {
    /// Throughput versus `P_S / P_R` on the budget-tight line.
    RatioSweep,
    /// Optimized throughput versus total SNR.
    SnrSweep,
    /// Optimized ADB throughput versus group size `m`.
    GroupingSweep,
    /// Optimized throughput versus relay count `L`.
    RelayCountSweep,
    /// One operating point per scheme.
    SinglePoint,
}

impl ExperimentKind {
    pub fn sweep_name(&self) -> &'static str {
        match self {
            ExperimentKind::RatioSweep => "ps_over_pr",
            ExperimentKind::SnrSweep => "snr_db",
            ExperimentKind::GroupingSweep => "m",
            ExperimentKind::RelayCountSweep => "L",
            ExperimentKind::SinglePoint => "snr_db",
        }
    }

    /// Config-file key holding this kind's sweep grid.
    pub fn grid_key(&self) -> Option<&'static str> {
        match self {
            ExperimentKind::RatioSweep => Some("ratio_grid"),
            ExperimentKind::SnrSweep => Some("snr_grid_db"),
            ExperimentKind::GroupingSweep => Some("group_grid"),
            ExperimentKind::RelayCountSweep => Some("relay_grid"),
            ExperimentKind::SinglePoint => None,
        }
    }
}

pub fn db_to_linear(db: f64) -> f64 {
    10f64.powf(db / 10.0)
}

/// A fully validated experiment description. SNR values are kept in dB for
/// reporting; `snr_total` is the linear value used for computation.
#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentSpec {
    pub kind: ExperimentKind,
    pub schemes: Vec<ProtocolKind>,
    /// Sweep values: `P_S/P_R` ratios, SNRs in dB, group sizes or relay counts.
    pub grid: Vec<f64>,
    pub snr_db: f64,
    pub snr_total: f64,
    /// Extra SNR axis for the grouping sweep (dB).
    pub snr_grid_db: Vec<f64>,
    pub relays: usize,
    pub group_size: Option<usize>,
    pub sigma_g2: f64,
    pub sigma_h2: f64,
    pub n_slots: u64,
    pub seed: u64,
    pub workers: usize,
    pub analytic_only: bool,
    pub grid_points: usize,
    /// Fixed `P_S/P_R` for a single point; `None` optimizes the split.
    pub ratio: Option<f64>,
    pub out: Option<PathBuf>,
    pub json: bool,
}

impl ExperimentSpec {
    /// Default grid and operating point for `kind`.
    pub fn defaults(kind: ExperimentKind) -> Self {
        let (snr_db, relays, group_size, schemes, grid): (f64, usize, Option<usize>, Vec<ProtocolKind>, Vec<f64>) =
            match kind {
                ExperimentKind::RatioSweep => {
                    let grid = (0..21).map(|i| 10f64.powf(-1.0 + 0.1 * i as f64)).collect();
                    (10.0, 4, Some(2), ProtocolKind::ALL.to_vec(), grid)
                }
                ExperimentKind::SnrSweep => {
                    (10.0, 4, Some(2), ProtocolKind::ALL.to_vec(), (0..=6).map(|i| 5.0 * i as f64).collect())
                }
                ExperimentKind::GroupingSweep => {
                    (15.0, 6, None, vec![ProtocolKind::Adb], (1..=5).map(|m| m as f64).collect())
                }
                ExperimentKind::RelayCountSweep => {
                    (10.0, 4, None, ProtocolKind::ALL.to_vec(), (1..=7).map(|i| 2.0 * i as f64).collect())
                }
                ExperimentKind::SinglePoint => (10.0, 4, Some(2), ProtocolKind::ALL.to_vec(), Vec::new()),
            };
        ExperimentSpec {
            kind,
            schemes,
            grid,
            snr_db,
            snr_total: db_to_linear(snr_db),
            snr_grid_db: Vec::new(),
            relays,
            group_size,
            sigma_g2: 1.0,
            sigma_h2: 1.0,
            n_slots: DEFAULT_SLOTS,
            seed: 1,
            workers: 1,
            analytic_only: false,
            grid_points: MaximizeOptions::default().grid_points,
            ratio: None,
            out: None,
            json: false,
        }
    }

    fn optimizer(&self) -> MaximizeOptions {
        MaximizeOptions { grid_points: self.grid_points, ..MaximizeOptions::default() }
    }

    fn channel(&self, relays: usize) -> Result<ChannelParams> {
        ChannelParams::new(relays, self.sigma_g2, self.sigma_h2)
    }

    /// ADB group size for `relays` relays.
    fn adb_group(&self, relays: usize) -> usize {
        self.group_size.unwrap_or(relays / 2)
    }

    pub fn validate(&self) -> Result<()> {
        if self.schemes.is_empty() {
            return Err(Error::config("schemes", "at least one scheme is required"));
        }
        let unique: BTreeSet<_> = self.schemes.iter().collect();
        if unique.len() != self.schemes.len() {
            return Err(Error::config("schemes", "duplicate scheme"));
        }
        if self.kind != ExperimentKind::SinglePoint {
            let key = self.kind.grid_key().unwrap_or("grid");
            if self.grid.is_empty() {
                return Err(Error::config(key, "sweep grid is empty"));
            }
            if self.grid.iter().any(|v| !v.is_finite()) {
                return Err(Error::config(key, "grid values must be finite"));
            }
            if self.grid.windows(2).any(|w| w[0] >= w[1]) {
                return Err(Error::config(key, "grid must be strictly increasing"));
            }
        }
        if self.snr_grid_db.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::config("snr_grid_db", "grid must be strictly increasing"));
        }
        if !self.snr_db.is_finite() {
            return Err(Error::config("snr_db", "must be finite"));
        }
        if self.n_slots < 2 || !self.n_slots.is_multiple_of(2) {
            return Err(Error::config("slots", format!("must be even and >= 2, got {}", self.n_slots)));
        }
        if self.workers == 0 {
            return Err(Error::config("workers", "need at least one worker"));
        }
        if self.grid_points == 0 {
            return Err(Error::config("grid_points", "need at least one optimizer grid point"));
        }
        for (key, v) in [("sigma_g2", self.sigma_g2), ("sigma_h2", self.sigma_h2)] {
            if !(v > 0.0 && v.is_finite()) {
                return Err(Error::config(key, format!("must be positive, got {v}")));
            }
        }
        if let Some(r) = self.ratio {
            if !(r > 0.0 && r.is_finite()) {
                return Err(Error::config("ratio", format!("must be positive, got {r}")));
            }
        }

        let relay_counts: Vec<usize> = match self.kind {
            ExperimentKind::RelayCountSweep => self
                .grid
                .iter()
                .map(|&v| as_count("relay_grid", v))
                .collect::<Result<_>>()?,
            _ => vec![self.relays],
        };
        for &l in &relay_counts {
            if l == 0 {
                return Err(Error::config("relays", "relay count must be at least 1"));
            }
            if !self.schemes.contains(&ProtocolKind::Adb) {
                continue;
            }
            if self.kind == ExperimentKind::GroupingSweep {
                continue;
            }
            if self.kind == ExperimentKind::RelayCountSweep && self.group_size.is_none() && l % 2 != 0 {
                return Err(Error::config(
                    "relay_grid",
                    format!("ADB with default m = L/2 needs even L, got {l}; pass --group-size"),
                ));
            }
            let m = self.adb_group(l);
            if l < 2 || m == 0 || m >= l {
                return Err(Error::config("group_size", format!("ADB needs 1 <= m <= L-1, got m={m} L={l}")));
            }
        }
        if self.kind == ExperimentKind::GroupingSweep {
            if self.schemes != [ProtocolKind::Adb] {
                return Err(Error::config("schemes", "the grouping sweep is defined for ADB only"));
            }
            for &v in &self.grid {
                let m = as_count("group_grid", v)?;
                if m == 0 || m >= self.relays {
                    return Err(Error::config("group_grid", format!("need 1 <= m <= L-1, got m={m} L={}", self.relays)));
                }
            }
        }
        Ok(())
    }
}

fn as_count(key: &str, v: f64) -> Result<usize> {
    if v < 0.0 || v.fract() != 0.0 || v > 1e6 {
        return Err(Error::config(key, format!("expected a nonnegative integer, got {v}")));
    }
    Ok(v as usize)
}

/// JSON configuration file. Every key is optional; unknown keys are errors.
#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct FileConfig {
    schemes: Option<Vec<String>>,
    ratio_grid: Option<Vec<f64>>,
    snr_grid_db: Option<Vec<f64>>,
    group_grid: Option<Vec<f64>>,
    relay_grid: Option<Vec<f64>>,
    snr_db: Option<f64>,
    relays: Option<usize>,
    group_size: Option<usize>,
    sigma_g2: Option<f64>,
    sigma_h2: Option<f64>,
    slots: Option<u64>,
    seed: Option<u64>,
    workers: Option<usize>,
    analytic_only: Option<bool>,
    grid_points: Option<usize>,
    ratio: Option<f64>,
    out: Option<PathBuf>,
    json: Option<bool>,
}

const FILE_KEYS: &[&str] = &[
    "schemes", "ratio_grid", "snr_grid_db", "group_grid", "relay_grid", "snr_db", "relays", "group_size",
    "sigma_g2", "sigma_h2", "slots", "seed", "workers", "analytic_only", "grid_points", "ratio", "out", "json",
];

/// Command-line values; any `Some` (or `true`) wins over the config file.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Overrides {
    pub out: Option<PathBuf>,
    pub seed: Option<u64>,
    pub slots: Option<u64>,
    pub workers: Option<usize>,
    pub snr_db: Option<f64>,
    pub relays: Option<usize>,
    pub group_size: Option<usize>,
    pub schemes: Option<String>,
    pub grid: Option<String>,
    pub ratio: Option<f64>,
    pub grid_points: Option<usize>,
    pub analytic_only: bool,
    pub json: bool,
}

fn parse_schemes(list: &[String]) -> Result<Vec<ProtocolKind>> {
    list.iter().map(|s| s.parse()).collect()
}

fn split_list(s: &str) -> Vec<String> {
    s.split(',').map(str::trim).filter(|p| !p.is_empty()).map(String::from).collect()
}

fn parse_file(text: &str) -> Result<FileConfig> {
    if text.trim().is_empty() {
        return Ok(FileConfig::default());
    }
    let value: serde_json::Value =
        serde_json::from_str(text).map_err(|e| Error::config_msg(format!("malformed config: {e}")))?;
    let obj = value.as_object().ok_or_else(|| Error::config_msg("config must be a JSON object"))?;
    if let Some(key) = obj.keys().find(|k| !FILE_KEYS.contains(&k.as_str())) {
        return Err(Error::config(key, "unknown config key"));
    }
    serde_json::from_value(value).map_err(|e| Error::config_msg(format!("invalid config: {e}")))
}

/// Builds a spec from defaults, an optional JSON file and flag overrides.
pub fn load_spec(kind: ExperimentKind, config: Option<&Path>, flags: &Overrides) -> Result<ExperimentSpec> {
    let text = match config {
        Some(path) => std::fs::read_to_string(path)
            .map_err(|e| Error::Config { key: Some("config".into()), message: format!("{}: {e}", path.display()) })?,
        None => String::new(),
    };
    spec_from_parts(kind, &text, flags)
}

/// As [`load_spec`], with the config file already read into `text`.
pub fn spec_from_parts(kind: ExperimentKind, text: &str, flags: &Overrides) -> Result<ExperimentSpec> {
    let file = parse_file(text)?;
    let mut spec = ExperimentSpec::defaults(kind);
    let explicit_grid = match kind {
        ExperimentKind::RatioSweep => file.ratio_grid,
        ExperimentKind::SnrSweep => file.snr_grid_db.clone(),
        ExperimentKind::GroupingSweep => file.group_grid,
        ExperimentKind::RelayCountSweep => file.relay_grid,
        ExperimentKind::SinglePoint => None,
    };
    if kind == ExperimentKind::GroupingSweep {
        if let Some(g) = file.snr_grid_db {
            spec.snr_grid_db = g;
        }
    }
    if let Some(s) = file.schemes {
        spec.schemes = parse_schemes(&s)?;
    }
    macro_rules! take {
        ($($field:ident => $target:ident),*) => {
            $( if let Some(v) = file.$field { spec.$target = v; } )*
        };
    }
    take!(snr_db => snr_db, relays => relays, sigma_g2 => sigma_g2, sigma_h2 => sigma_h2,
          slots => n_slots, seed => seed, workers => workers, analytic_only => analytic_only,
          grid_points => grid_points, json => json);
    if file.group_size.is_some() {
        spec.group_size = file.group_size;
    }
    if file.ratio.is_some() {
        spec.ratio = file.ratio;
    }
    if file.out.is_some() {
        spec.out = file.out;
    }

    // flags
    if let Some(s) = &flags.schemes {
        spec.schemes = parse_schemes(&split_list(s))?;
    }
    if let Some(v) = flags.snr_db {
        spec.snr_db = v;
    }
    if let Some(v) = flags.relays {
        spec.relays = v;
    }
    if flags.group_size.is_some() {
        spec.group_size = flags.group_size;
    }
    if let Some(v) = flags.slots {
        spec.n_slots = v;
    }
    if let Some(v) = flags.seed {
        spec.seed = v;
    }
    if let Some(v) = flags.workers {
        spec.workers = v;
    }
    if let Some(v) = flags.grid_points {
        spec.grid_points = v;
    }
    if flags.ratio.is_some() {
        spec.ratio = flags.ratio;
    }
    if flags.out.is_some() {
        spec.out = flags.out.clone();
    }
    spec.analytic_only |= flags.analytic_only;
    spec.json |= flags.json;

    let grid = match &flags.grid {
        Some(g) => Some(
            split_list(g)
                .iter()
                .map(|v| v.parse::<f64>().map_err(|_| Error::config("grid", format!("not a number: `{v}`"))))
                .collect::<Result<Vec<_>>>()?,
        ),
        None => explicit_grid,
    };
    match grid {
        Some(g) => spec.grid = g,
        None if kind == ExperimentKind::GroupingSweep => {
            spec.grid = (1..spec.relays).map(|m| m as f64).collect();
        }
        None => {}
    }
    spec.snr_total = db_to_linear(spec.snr_db);
    spec.validate()?;
    Ok(spec)
}

/// One output line. Field order is the CSV column order.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ResultRow {
    pub scheme: String,
    pub estimator: String,
    pub sweep_name: String,
    pub sweep_value: f64,
    #[serde(rename = "L")]
    pub relays: usize,
    /// ADB group size; empty for other schemes.
    #[serde(rename = "m")]
    pub group_size: Option<usize>,
    pub p_s: f64,
    pub p_r: f64,
    pub snr_total: f64,
    pub throughput: f64,
    pub std_error: f64,
    pub n_slots: u64,
    pub seed: u64,
}

pub const CSV_COLUMNS: [&str; 13] = [
    "scheme", "estimator", "sweep_name", "sweep_value", "L", "m", "p_s", "p_r", "snr_total", "throughput",
    "std_error", "n_slots", "seed",
];

#[derive(Debug, Clone, Default, PartialEq)]
pub struct SweepOutput {
    pub rows: Vec<ResultRow>,
    /// Skipped points, for the sidecar log.
    pub warnings: Vec<String>,
}

impl SweepOutput {
    fn extend(&mut self, other: SweepOutput) {
        self.rows.extend(other.rows);
        self.warnings.extend(other.warnings);
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Estimator {
    Simulated,
    Analytic,
}

impl Estimator {
    fn name(&self) -> &'static str {
        match self {
            Estimator::Simulated => "simulated",
            Estimator::Analytic => "analytic",
        }
    }
}

/// One network configuration a row is computed for.
#[derive(Debug, Clone, Copy)]
struct Point {
    scheme: ProtocolKind,
    relays: usize,
    group_size: usize,
    snr_total: f64,
    sweep_value: f64,
}

impl Point {
    fn budget(&self) -> Result<PowerBudget> {
        PowerBudget::new(self.snr_total, self.scheme, self.relays)
    }

    fn evaluate(&self, spec: &ExperimentSpec, est: Estimator, p_s: f64, p_r: f64) -> Result<Evaluation> {
        match est {
            Estimator::Analytic => {
                let cfg = AdbAnalyticConfig {
                    relays: self.relays,
                    group_size: self.group_size,
                    sigma_g2: spec.sigma_g2,
                    sigma_h2: spec.sigma_h2,
                    p_s,
                    p_r,
                };
                Ok(Evaluation::exact(adb_closed_form(&cfg)?.c_adb))
            }
            Estimator::Simulated => {
                let cfg = SimConfig::new(self.scheme, spec.channel(self.relays)?, p_s, p_r)
                    .with_group_size(self.group_size)
                    .with_slots(spec.n_slots)
                    .with_seed(spec.seed);
                let e = simulate(&cfg)?;
                Ok(Evaluation { throughput: e.mean, std_error: e.std_error })
            }
        }
    }

    fn row(&self, spec: &ExperimentSpec, est: Estimator, p_s: f64, p_r: f64, eval: Evaluation) -> Result<ResultRow> {
        let budget = self.budget()?;
        if !budget.admits(p_s, p_r, 1e-9) {
            return Err(Error::Domain(format!(
                "{} row violates its budget: p_s={p_s} p_r={p_r} snr={}",
                self.scheme, self.snr_total
            )));
        }
        Ok(ResultRow {
            scheme: self.scheme.name().to_string(),
            estimator: est.name().to_string(),
            sweep_name: spec.kind.sweep_name().to_string(),
            sweep_value: self.sweep_value,
            relays: self.relays,
            group_size: (self.scheme == ProtocolKind::Adb).then_some(self.group_size),
            p_s,
            p_r,
            snr_total: self.snr_total,
            throughput: eval.throughput,
            std_error: match est {
                Estimator::Analytic => 0.0,
                Estimator::Simulated => eval.std_error,
            },
            n_slots: match est {
                Estimator::Analytic => 0,
                Estimator::Simulated => spec.n_slots,
            },
            seed: spec.seed,
        })
    }

    fn estimators(&self, spec: &ExperimentSpec) -> Vec<Estimator> {
        let mut v = Vec::with_capacity(2);
        if !spec.analytic_only {
            v.push(Estimator::Simulated);
        }
        if self.scheme == ProtocolKind::Adb {
            v.push(Estimator::Analytic);
        }
        v
    }

    /// Rows at a fixed `P_S/P_R` on the tight budget line.
    fn at_ratio(&self, spec: &ExperimentSpec, ratio: f64) -> Result<Vec<ResultRow>> {
        let (p_s, p_r) = self.budget()?.split_for_ratio(ratio)?;
        self.estimators(spec)
            .into_iter()
            .map(|est| {
                let eval = self.evaluate(spec, est, p_s, p_r)?;
                self.row(spec, est, p_s, p_r, eval)
            })
            .collect()
    }

    /// Rows at the throughput-maximizing split.
    fn optimized(&self, spec: &ExperimentSpec) -> Result<Vec<ResultRow>> {
        let budget = self.budget()?;
        self.estimators(spec)
            .into_iter()
            .map(|est| {
                let sol = maximize(&budget, |ps, pr| self.evaluate(spec, est, ps, pr), &spec.optimizer())?;
                let eval = Evaluation { throughput: sol.throughput, std_error: sol.std_error };
                self.row(spec, est, sol.p_s, sol.p_r, eval)
            })
            .collect()
    }
}

/// Evaluates `task` for every grid index on `spec.workers` threads and
/// concatenates the outputs in index order.
fn dispatch<F>(spec: &ExperimentSpec, n: usize, task: F) -> Result<SweepOutput>
where
    F: Fn(usize) -> Result<SweepOutput> + Sync,
{
    let parts: Vec<Result<SweepOutput>> = if spec.workers <= 1 {
        (0..n).map(&task).collect()
    } else {
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(spec.workers)
            .build()
            .map_err(|e| Error::config("workers", e.to_string()))?;
        pool.install(|| (0..n).into_par_iter().map(&task).collect())
    };
    let mut out = SweepOutput::default();
    for p in parts {
        out.extend(p?);
    }
    Ok(out)
}

fn require_kind(spec: &ExperimentSpec, kind: ExperimentKind) -> Result<()> {
    spec.validate()?;
    if spec.kind != kind {
        return Err(Error::config_msg(format!("expected a {kind:?} spec, got {:?}", spec.kind)));
    }
    Ok(())
}

fn scheme_point(spec: &ExperimentSpec, scheme: ProtocolKind, relays: usize, snr_total: f64, sweep_value: f64) -> Point {
    Point { scheme, relays, group_size: spec.adb_group(relays), snr_total, sweep_value }
}

pub fn run_ratio_sweep(spec: &ExperimentSpec) -> Result<SweepOutput> {
    require_kind(spec, ExperimentKind::RatioSweep)?;
    dispatch(spec, spec.grid.len(), |i| {
        let ratio = spec.grid[i];
        let mut out = SweepOutput::default();
        if !(ratio > 0.0) {
            out.warnings.push(format!("skipped P_S/P_R = {ratio}: ratio must be positive"));
            return Ok(out);
        }
        for &scheme in &spec.schemes {
            let point = scheme_point(spec, scheme, spec.relays, spec.snr_total, ratio);
            out.rows.extend(point.at_ratio(spec, ratio)?);
        }
        Ok(out)
    })
}

pub fn run_snr_sweep(spec: &ExperimentSpec) -> Result<SweepOutput> {
    require_kind(spec, ExperimentKind::SnrSweep)?;
    dispatch(spec, spec.grid.len(), |i| {
        let snr_db = spec.grid[i];
        let mut out = SweepOutput::default();
        for &scheme in &spec.schemes {
            let point = scheme_point(spec, scheme, spec.relays, db_to_linear(snr_db), snr_db);
            out.rows.extend(point.optimized(spec)?);
        }
        Ok(out)
    })
}

pub fn run_grouping_sweep(spec: &ExperimentSpec) -> Result<SweepOutput> {
    require_kind(spec, ExperimentKind::GroupingSweep)?;
    let snrs = if spec.snr_grid_db.is_empty() { vec![spec.snr_db] } else { spec.snr_grid_db.clone() };
    let n_m = spec.grid.len();
    dispatch(spec, snrs.len() * n_m, |i| {
        let snr_db = snrs[i / n_m];
        let m = spec.grid[i % n_m] as usize;
        let point = Point {
            scheme: ProtocolKind::Adb,
            relays: spec.relays,
            group_size: m,
            snr_total: db_to_linear(snr_db),
            sweep_value: m as f64,
        };
        Ok(SweepOutput { rows: point.optimized(spec)?, warnings: Vec::new() })
    })
}

pub fn run_relay_count_sweep(spec: &ExperimentSpec) -> Result<SweepOutput> {
    require_kind(spec, ExperimentKind::RelayCountSweep)?;
    dispatch(spec, spec.grid.len(), |i| {
        let relays = spec.grid[i] as usize;
        let mut out = SweepOutput::default();
        for &scheme in &spec.schemes {
            if relays < scheme.min_relays() {
                out.warnings.push(format!("skipped {scheme} at L = {relays}: needs L >= {}", scheme.min_relays()));
                continue;
            }
            let point = scheme_point(spec, scheme, relays, spec.snr_total, relays as f64);
            out.rows.extend(point.optimized(spec)?);
        }
        Ok(out)
    })
}

pub fn run_single_point(spec: &ExperimentSpec) -> Result<SweepOutput> {
    require_kind(spec, ExperimentKind::SinglePoint)?;
    dispatch(spec, spec.schemes.len(), |i| {
        let point = scheme_point(spec, spec.schemes[i], spec.relays, spec.snr_total, spec.snr_db);
        let rows = match spec.ratio {
            Some(r) => point.at_ratio(spec, r)?,
            None => point.optimized(spec)?,
        };
        Ok(SweepOutput { rows, warnings: Vec::new() })
    })
}

pub fn run(spec: &ExperimentSpec) -> Result<SweepOutput> {
    match spec.kind {
        ExperimentKind::RatioSweep => run_ratio_sweep(spec),
        ExperimentKind::SnrSweep => run_snr_sweep(spec),
        ExperimentKind::GroupingSweep => run_grouping_sweep(spec),
        ExperimentKind::RelayCountSweep => run_relay_count_sweep(spec),
        ExperimentKind::SinglePoint => run_single_point(spec),
    }
}

pub fn write_csv<W: Write>(rows: &[ResultRow], w: W) -> Result<()> {
    let mut wtr = csv::Writer::from_writer(w);
    if rows.is_empty() {
        wtr.write_record(CSV_COLUMNS).map_err(|e| Error::Io(e.to_string()))?;
    }
    for r in rows {
        wtr.serialize(r).map_err(|e| Error::Io(e.to_string()))?;
    }
    wtr.flush()?;
    Ok(())
}

pub fn write_json_lines<W: Write>(rows: &[ResultRow], mut w: W) -> Result<()> {
    for r in rows {
        serde_json::to_writer(&mut w, r).map_err(|e| Error::Io(e.to_string()))?;
        w.write_all(b"\n")?;
    }
    w.flush()?;
    Ok(())
}

/// Sidecar log path for an output file: `<out>.log`.
pub fn warnings_path(out: &Path) -> PathBuf {
    let mut s = out.as_os_str().to_owned();
    s.push(".log");
    PathBuf::from(s)
}

/// Writes rows to `spec.out` (or `stdout`) and warnings to the sidecar log
/// (or `stderr` when writing to stdout).
pub fn emit(spec: &ExperimentSpec, output: &SweepOutput) -> Result<()> {
    let write_rows = |w: &mut dyn Write| -> Result<()> {
        if spec.json {
            write_json_lines(&output.rows, w)
        } else {
            write_csv(&output.rows, w)
        }
    };
    match &spec.out {
        Some(path) => {
            let mut file = std::io::BufWriter::new(std::fs::File::create(path)?);
            write_rows(&mut file)?;
            if !output.warnings.is_empty() {
                std::fs::write(warnings_path(path), output.warnings.join("\n") + "\n")?;
            }
        }
        None => {
            let stdout = std::io::stdout();
            write_rows(&mut stdout.lock())?;
            for w in &output.warnings {
                eprintln!("warning: {w}");
            }
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn flags() -> Overrides {
        Overrides::default()
    }

    #[test]
    fn empty_file_and_flags_give_valid_spec() {
        let f = Overrides {
            seed: Some(9),
            slots: Some(1000),
            snr_db: Some(12.0),
            relays: Some(4),
            group_size: Some(2),
            schemes: Some("adb,crs".into()),
            ..flags()
        };
        let spec = spec_from_parts(ExperimentKind::SnrSweep, "", &f).unwrap();
        assert_eq!(spec.schemes, vec![ProtocolKind::Adb, ProtocolKind::Crs]);
        assert_eq!(spec.seed, 9);
        assert!((spec.snr_total - db_to_linear(12.0)).abs() < 1e-12);
    }

    #[test]
    fn unknown_key_is_named() {
        let err = spec_from_parts(ExperimentKind::SnrSweep, r#"{"snr_db_list": [1, 2]}"#, &flags()).unwrap_err();
        match err {
            Error::Config { key, .. } => assert_eq!(key.as_deref(), Some("snr_db_list")),
            e => panic!("unexpected {e:?}"),
        }
    }

    #[test]
    fn flag_beats_file() {
        let spec = spec_from_parts(
            ExperimentKind::RatioSweep,
            r#"{"seed": 5, "slots": 100}"#,
            &Overrides { seed: Some(77), ..flags() },
        )
        .unwrap();
        assert_eq!(spec.seed, 77);
        assert_eq!(spec.n_slots, 100);
    }

    #[test]
    fn malformed_and_invalid_configs() {
        assert!(spec_from_parts(ExperimentKind::SnrSweep, "{not json", &flags()).is_err());
        assert!(spec_from_parts(ExperimentKind::SnrSweep, r#"{"snr_grid_db": [5, 0]}"#, &flags()).is_err());
        assert!(spec_from_parts(ExperimentKind::SnrSweep, r#"{"snr_grid_db": []}"#, &flags()).is_err());
        assert!(spec_from_parts(ExperimentKind::SnrSweep, r#"{"schemes": []}"#, &flags()).is_err());
        assert!(spec_from_parts(ExperimentKind::SnrSweep, r#"{"schemes": ["maxlink"]}"#, &flags()).is_err());
        assert!(spec_from_parts(ExperimentKind::SnrSweep, r#"{"slots": 7}"#, &flags()).is_err());
        assert!(spec_from_parts(ExperimentKind::RelayCountSweep, r#"{"relay_grid": [3]}"#, &flags()).is_err());
        let ok = spec_from_parts(
            ExperimentKind::RelayCountSweep,
            r#"{"relay_grid": [3], "group_size": 1}"#,
            &flags(),
        );
        assert!(ok.is_ok());
    }

    #[test]
    fn grouping_default_grid_follows_relays() {
        let spec = spec_from_parts(ExperimentKind::GroupingSweep, "", &Overrides { relays: Some(2), ..flags() }).unwrap();
        assert_eq!(spec.grid, vec![1.0]);
        let spec = spec_from_parts(ExperimentKind::GroupingSweep, "", &flags()).unwrap();
        assert_eq!(spec.grid, vec![1.0, 2.0, 3.0, 4.0, 5.0]);
    }

    #[test]
    fn default_ratio_grid_is_log_spaced() {
        let spec = ExperimentSpec::defaults(ExperimentKind::RatioSweep);
        assert_eq!(spec.grid.len(), 21);
        assert!((spec.grid[0] - 0.1).abs() < 1e-12);
        assert!((spec.grid[10] - 1.0).abs() < 1e-12);
        assert!((spec.grid[20] - 10.0).abs() < 1e-12);
    }

    #[test]
    fn single_ratio_point_single_scheme() {
        let f = Overrides { schemes: Some("crs".into()), grid: Some("1.0".into()), slots: Some(2000), ..flags() };
        let spec = spec_from_parts(ExperimentKind::RatioSweep, "", &f).unwrap();
        let out = run(&spec).unwrap();
        assert_eq!(out.rows.len(), 1);
        assert!(out.rows[0].std_error > 0.0);
        assert_eq!(out.rows[0].group_size, None);
    }

    #[test]
    fn csv_header_order() {
        let mut buf = Vec::new();
        write_csv(&[], &mut buf).unwrap();
        assert_eq!(String::from_utf8(buf).unwrap().trim_end(), CSV_COLUMNS.join(","));
        let row = ResultRow {
            scheme: "ADB".into(),
            estimator: "analytic".into(),
            sweep_name: "m".into(),
            sweep_value: 2.0,
            relays: 4,
            group_size: Some(2),
            p_s: 1.0,
            p_r: 2.0,
            snr_total: 5.0,
            throughput: 1.5,
            std_error: 0.0,
            n_slots: 0,
            seed: 1,
        };
        let mut buf = Vec::new();
        write_csv(&[row], &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert_eq!(text.lines().next().unwrap(), CSV_COLUMNS.join(","));
    }
}
