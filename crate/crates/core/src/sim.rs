//! Monte Carlo throughput estimation for CRS, SFD-MMRS, DF and ADB.
//!
//! Per-slot rates come from pure kernels ([`crs_rate`], [`sfd_mmrs_rates`],
//! [`df_rate`], [`adb_flow_rates`]). The estimators draw slot realizations
//! from stream 0 of the configured seed, so every protocol sees the same
//! channel sequence for a given seed (common random numbers).
//!
//! Slots are processed in fixed chunks of [`CHUNK_SLOTS`]; each chunk is
//! reduced on its own and the partial moments are merged in chunk order on
//! one thread. The result is bit-identical for every worker count.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use rayon::prelude::*;

use crate::channel::{ChannelParams, RngStream, SlotRealization};
use crate::error::{Error, Result};

/// Slots per independently reduced chunk.
pub const CHUNK_SLOTS: u64 = 1 << 14;

/// Stream id used by all estimators.
pub const SIM_STREAM: u64 = 0;

pub const DEFAULT_SLOTS: u64 = 1_000_000;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum ProtocolKind {
    Crs,
    SfdMmrs,
    Df,
    Adb,
}

impl ProtocolKind {
    pub const ALL: [ProtocolKind; 4] =
        [ProtocolKind::Crs, ProtocolKind::SfdMmrs, ProtocolKind::Df, ProtocolKind::Adb];

    pub fn name(&self) -> &'static str {
        match self {
            ProtocolKind::Crs => "CRS",
            ProtocolKind::SfdMmrs => "SFD-MMRS",
            ProtocolKind::Df => "DF",
            ProtocolKind::Adb => "ADB",
        }
    }

    /// Smallest relay count the protocol is defined for.
    pub fn min_relays(&self) -> usize {
        match self {
            ProtocolKind::Crs | ProtocolKind::Df => 1,
            ProtocolKind::SfdMmrs | ProtocolKind::Adb => 2,
        }
    }
}

impl fmt::Display for ProtocolKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for ProtocolKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let norm: String = s
            .trim()
            .chars()
            .filter(|c| !matches!(c, '-' | '_'))
            .collect::<String>()
            .to_ascii_lowercase();
        match norm.as_str() {
            "crs" => Ok(ProtocolKind::Crs),
            "sfdmmrs" => Ok(ProtocolKind::SfdMmrs),
            "df" => Ok(ProtocolKind::Df),
            "adb" => Ok(ProtocolKind::Adb),
            _ => Err(Error::config("schemes", format!("unknown protocol `{s}`"))),
        }
    }
}

/// Everything one Monte Carlo run needs.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SimConfig {
    pub protocol: ProtocolKind,
    pub channel: ChannelParams,
    pub p_s: f64,
    pub p_r: f64,
    /// Size of ADB group 1; ignored by the other protocols.
    pub group_size: usize,
    pub n_slots: u64,
    /// ADB switching period `M`: slots a group stays in one mode.
    pub switch_period: u64,
    pub seed: u64,
    pub workers: usize,
}

impl SimConfig {
    pub fn new(protocol: ProtocolKind, channel: ChannelParams, p_s: f64, p_r: f64) -> Self {
        SimConfig {
            protocol,
            channel,
            p_s,
            p_r,
            group_size: (channel.relays() / 2).max(1),
            n_slots: DEFAULT_SLOTS,
            switch_period: 1,
            seed: 0,
            workers: 1,
        }
    }

    pub fn with_group_size(mut self, m: usize) -> Self {
        self.group_size = m;
        self
    }

    pub fn with_slots(mut self, n: u64) -> Self {
        self.n_slots = n;
        self
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    pub fn with_workers(mut self, workers: usize) -> Self {
        self.workers = workers;
        self
    }

    pub fn with_switch_period(mut self, m: u64) -> Self {
        self.switch_period = m;
        self
    }

    pub fn validate(&self) -> Result<()> {
        for (name, p) in [("p_s", self.p_s), ("p_r", self.p_r)] {
            if !(p >= 0.0 && p.is_finite()) {
                return Err(Error::config(name, format!("power must be finite and >= 0, got {p}")));
            }
        }
        if self.n_slots < 2 || !self.n_slots.is_multiple_of(2) {
            return Err(Error::config("slots", format!("n_slots must be even and >= 2, got {}", self.n_slots)));
        }
        if self.workers == 0 {
            return Err(Error::config("workers", "need at least one worker"));
        }
        let l = self.channel.relays();
        if l < self.protocol.min_relays() {
            return Err(Error::config(
                "relays",
                format!("{} needs at least {} relays, got {l}", self.protocol, self.protocol.min_relays()),
            ));
        }
        if self.protocol == ProtocolKind::Adb {
            if self.group_size == 0 || self.group_size >= l {
                return Err(Error::config(
                    "group_size",
                    format!("must satisfy 1 <= m <= L-1, got m={} L={l}", self.group_size),
                ));
            }
            if self.switch_period == 0 || !(self.n_slots / 2).is_multiple_of(self.switch_period) {
                return Err(Error::config(
                    "switch_period",
                    format!("M={} must be >= 1 and divide n_slots/2={}", self.switch_period, self.n_slots / 2),
                ));
            }
        }
        Ok(())
    }
}

/// Sample-mean throughput with its standard error.
#[derive(Debug, Clone, PartialEq)]
pub struct ThroughputEstimate {
    /// bps/Hz
    pub mean: f64,
    pub std_error: f64,
    pub n_slots: u64,
    /// Named sub-averages (link means and their standard errors).
    pub aux: BTreeMap<String, f64>,
}

/// Streaming mean and sum of squared deviations.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct Moments {
    pub n: u64,
    pub mean: f64,
    m2: f64,
}

impl Moments {
    #[inline]
    pub fn push(&mut self, x: f64) {
        self.n += 1;
        let d = x - self.mean;
        self.mean += d / self.n as f64;
        self.m2 += d * (x - self.mean);
    }

    pub fn merge(&mut self, other: &Moments) {
        if other.n == 0 {
            return;
        }
        if self.n == 0 {
            *self = *other;
            return;
        }
        let n = self.n + other.n;
        let d = other.mean - self.mean;
        self.mean += d * other.n as f64 / n as f64;
        self.m2 += other.m2 + d * d * (self.n as f64 * other.n as f64 / n as f64);
        self.n = n;
    }

    pub fn variance(&self) -> f64 {
        if self.n < 2 {
            0.0
        } else {
            self.m2 / (self.n - 1) as f64
        }
    }

    pub fn std_error(&self) -> f64 {
        if self.n < 2 {
            0.0
        } else {
            (self.variance() / self.n as f64).sqrt()
        }
    }
}

#[inline]
fn log2_1p(x: f64) -> f64 {
    x.ln_1p() / std::f64::consts::LN_2
}

/// CRS rate of one two-slot frame: `log2(1 + max_k min(p_s g_k^2, p_r h_k^2)) / 2`.
pub fn crs_rate(slot: &SlotRealization, p_s: f64, p_r: f64) -> f64 {
    let best = slot
        .g
        .iter()
        .zip(&slot.h)
        .map(|(g, h)| (p_s * g * g).min(p_r * h * h))
        .fold(0.0f64, f64::max);
    0.5 * log2_1p(best)
}

/// Index of the largest `gain[i]^2`, skipping `exclude`; lowest index wins ties.
#[inline]
fn argmax_excluding(gains: &[f64], power: f64, exclude: Option<usize>) -> usize {
    let mut best = usize::MAX;
    let mut best_val = f64::NEG_INFINITY;
    for (i, a) in gains.iter().enumerate() {
        if Some(i) == exclude {
            continue;
        }
        let v = power * a * a;
        if v > best_val {
            best = i;
            best_val = v;
        }
    }
    best
}

/// SFD-MMRS `(rx, tx)` relay pair for one slot (0-based indices).
///
/// Distinct best relays are used directly. When one relay is best on both
/// hops, the pair `(second-best rx, best tx)` is taken only if its weaker
/// hop is strictly stronger than that of `(best rx, second-best tx)`.
pub fn sfd_mmrs_select(slot: &SlotRealization, p_s: f64, p_r: f64) -> Result<(usize, usize)> {
    if slot.relays() < 2 {
        return Err(Error::config("relays", "SFD-MMRS needs at least 2 relays"));
    }
    Ok(select_pair(slot, p_s, p_r))
}

#[inline]
fn select_pair(slot: &SlotRealization, p_s: f64, p_r: f64) -> (usize, usize) {
    let r1 = argmax_excluding(&slot.g, p_s, None);
    let t1 = argmax_excluding(&slot.h, p_r, None);
    if r1 != t1 {
        return (r1, t1);
    }
    let r2 = argmax_excluding(&slot.g, p_s, Some(r1));
    let t2 = argmax_excluding(&slot.h, p_r, Some(t1));
    let gs = |i: usize| p_s * slot.g[i] * slot.g[i];
    let gh = |i: usize| p_r * slot.h[i] * slot.h[i];
    if gs(r2).min(gh(t1)) > gs(r1).min(gh(t2)) {
        (r2, t1)
    } else {
        (r1, t2)
    }
}

/// `(C_SR, C_RD)` of the SFD-MMRS pair selected for this slot.
pub fn sfd_mmrs_rates(slot: &SlotRealization, p_s: f64, p_r: f64) -> Result<(f64, f64)> {
    let (rx, tx) = sfd_mmrs_select(slot, p_s, p_r)?;
    Ok((log2_1p(p_s * slot.g[rx] * slot.g[rx]), log2_1p(p_r * slot.h[tx] * slot.h[tx])))
}

/// DF beamforming rate of one two-slot frame:
/// `log2(1 + min(p_s min_k g_k^2, p_r (sum_k h_k)^2)) / 2`.
pub fn df_rate(slot: &SlotRealization, p_s: f64, p_r: f64) -> f64 {
    let weakest = slot.g.iter().map(|g| g * g).fold(f64::INFINITY, f64::min);
    let sum_h: f64 = slot.h.iter().sum();
    0.5 * log2_1p((p_s * weakest).min(p_r * sum_h * sum_h))
}

#[inline]
fn group_rates(g: &[f64], h: &[f64], p_s: f64, p_r: f64) -> (f64, f64) {
    let weakest = g.iter().map(|x| x * x).fold(f64::INFINITY, f64::min);
    let sum_h: f64 = h.iter().sum();
    (log2_1p(p_s * weakest), log2_1p(p_r * sum_h * sum_h))
}

/// ADB link rates of one slot, in the order `[A11, A22, A21, A12]`:
/// source to group 1, group 1 to destination, source to group 2,
/// group 2 to destination. Group 1 is relays `0..m`.
pub fn adb_flow_rates(slot: &SlotRealization, m: usize, p_s: f64, p_r: f64) -> [f64; 4] {
    let (a11, a22) = group_rates(&slot.g[..m], &slot.h[..m], p_s, p_r);
    let (a21, a12) = group_rates(&slot.g[m..], &slot.h[m..], p_s, p_r);
    [a11, a22, a21, a12]
}

/// Runs `kernel` over `n_draws` consecutive slots and returns per-output moments.
fn run_chunked<const K: usize, F>(cfg: &SimConfig, n_draws: u64, kernel: F) -> Result<[Moments; K]>
where
    F: Fn(&SlotRealization) -> [f64; K] + Sync,
{
    let stream = RngStream::new(cfg.seed, SIM_STREAM);
    let n_chunks = n_draws.div_ceil(CHUNK_SLOTS);
    let channel = cfg.channel;
    let run_chunk = |c: u64| -> [Moments; K] {
        let start = c * CHUNK_SLOTS;
        let end = (start + CHUNK_SLOTS).min(n_draws);
        let mut sampler = stream.slots_from(channel, start);
        let mut slot = SlotRealization::zeros(channel.relays());
        let mut acc = [Moments::default(); K];
        for _ in start..end {
            sampler.fill(&mut slot);
            let v = kernel(&slot);
            for (a, x) in acc.iter_mut().zip(v) {
                a.push(x);
            }
        }
        acc
    };
    let parts: Vec<[Moments; K]> = if cfg.workers <= 1 {
        (0..n_chunks).map(run_chunk).collect()
    } else {
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(cfg.workers)
            .build()
            .map_err(|e| Error::config("workers", e.to_string()))?;
        pool.install(|| (0..n_chunks).into_par_iter().map(run_chunk).collect())
    };
    let mut total = [Moments::default(); K];
    for part in &parts {
        for (t, p) in total.iter_mut().zip(part) {
            t.merge(p);
        }
    }
    Ok(total)
}

fn require(cfg: &SimConfig, kind: ProtocolKind) -> Result<()> {
    cfg.validate()?;
    if cfg.protocol != kind {
        return Err(Error::config(
            "protocol",
            format!("estimator for {kind} called with a {} config", cfg.protocol),
        ));
    }
    Ok(())
}

/// CRS: one channel draw per two-slot frame, `n_slots / 2` frames.
pub fn simulate_crs(cfg: &SimConfig) -> Result<ThroughputEstimate> {
    require(cfg, ProtocolKind::Crs)?;
    let (p_s, p_r) = (cfg.p_s, cfg.p_r);
    let [m] = run_chunked(cfg, cfg.n_slots / 2, |s| [crs_rate(s, p_s, p_r)])?;
    Ok(ThroughputEstimate { mean: m.mean, std_error: m.std_error(), n_slots: cfg.n_slots, aux: BTreeMap::new() })
}

/// DF: one channel draw per two-slot frame, `n_slots / 2` frames.
pub fn simulate_df(cfg: &SimConfig) -> Result<ThroughputEstimate> {
    require(cfg, ProtocolKind::Df)?;
    let (p_s, p_r) = (cfg.p_s, cfg.p_r);
    let [m] = run_chunked(cfg, cfg.n_slots / 2, |s| [df_rate(s, p_s, p_r)])?;
    Ok(ThroughputEstimate { mean: m.mean, std_error: m.std_error(), n_slots: cfg.n_slots, aux: BTreeMap::new() })
}

/// SFD-MMRS: throughput is `min(E[C_SR], E[C_RD])`.
pub fn simulate_sfd_mmrs(cfg: &SimConfig) -> Result<ThroughputEstimate> {
    require(cfg, ProtocolKind::SfdMmrs)?;
    let (p_s, p_r) = (cfg.p_s, cfg.p_r);
    let [sr, rd] = run_chunked(cfg, cfg.n_slots, |s| {
        let (rx, tx) = select_pair(s, p_s, p_r);
        assert_ne!(rx, tx, "SFD-MMRS selected relay {rx} for both hops in slot {}", s.slot_index);
        [log2_1p(p_s * s.g[rx] * s.g[rx]), log2_1p(p_r * s.h[tx] * s.h[tx])]
    })?;
    let limiting = if sr.mean <= rd.mean { sr } else { rd };
    let aux = BTreeMap::from([
        ("c_sr".to_string(), sr.mean),
        ("c_sr_se".to_string(), sr.std_error()),
        ("c_rd".to_string(), rd.mean),
        ("c_rd_se".to_string(), rd.std_error()),
    ]);
    Ok(ThroughputEstimate { mean: limiting.mean, std_error: limiting.std_error(), n_slots: cfg.n_slots, aux })
}

/// ADB flow-limit estimator: all four link means from every slot, then
/// `min(A11, A22) / 2 + min(A21, A12) / 2`.
pub fn adb_flow_estimate(cfg: &SimConfig) -> Result<ThroughputEstimate> {
    require(cfg, ProtocolKind::Adb)?;
    let (p_s, p_r, m) = (cfg.p_s, cfg.p_r, cfg.group_size);
    let [a11, a22, a21, a12] = run_chunked(cfg, cfg.n_slots, |s| adb_flow_rates(s, m, p_s, p_r))?;
    let lim1 = if a11.mean <= a22.mean { a11 } else { a22 };
    let lim2 = if a21.mean <= a12.mean { a21 } else { a12 };
    let mean = 0.5 * lim1.mean + 0.5 * lim2.mean;
    let std_error = 0.5 * (lim1.std_error().powi(2) + lim2.std_error().powi(2)).sqrt();
    let mut aux = BTreeMap::new();
    for (name, mo) in [("a11", a11), ("a22", a22), ("a21", a21), ("a12", a12)] {
        aux.insert(name.to_string(), mo.mean);
        aux.insert(format!("{name}_se"), mo.std_error());
    }
    Ok(ThroughputEstimate { mean, std_error, n_slots: cfg.n_slots, aux })
}

/// Buffer contents of an explicit ADB run.
///
/// Relays of one group hold the same decoded data, so one fluid buffer per
/// group is tracked; `relay_queue` maps a relay to its group's buffer.
#[derive(Debug, Clone, PartialEq)]
pub struct QueueTrace {
    pub group_size: usize,
    /// Buffer level (bits) of group 1 and group 2 at the end of each slot.
    pub group_queues: [Vec<f64>; 2],
    pub delivered_bits: f64,
    pub admitted_bits: f64,
    pub slots: u64,
}

impl QueueTrace {
    pub fn relay_queue(&self, relay: usize, slot: usize) -> f64 {
        let group = usize::from(relay >= self.group_size);
        self.group_queues[group][slot]
    }

    /// Time-averaged total buffered bits over both groups.
    pub fn mean_queue_bits(&self) -> f64 {
        let total: f64 = self.group_queues[0].iter().zip(&self.group_queues[1]).map(|(a, b)| a + b).sum();
        total / self.slots as f64
    }
}

/// Maximum number of batches used for the batch-means standard error.
const QUEUE_BATCHES: u64 = 64;

/// Slot-by-slot ADB simulation with explicit relay buffers.
///
/// Modes alternate in blocks of `switch_period` slots, group 1 receiving
/// first. The receiving group buffers `log2(1 + p_s min g^2)` bits; the
/// transmitting group drains up to `log2(1 + p_r (sum h)^2)` bits from its
/// buffer to the destination. The standard error uses batch means over
/// whole switching cycles.
pub fn adb_queue_sim(cfg: &SimConfig) -> Result<(ThroughputEstimate, QueueTrace)> {
    require(cfg, ProtocolKind::Adb)?;
    let (p_s, p_r, m) = (cfg.p_s, cfg.p_r, cfg.group_size);
    let period = cfg.switch_period;
    let n = cfg.n_slots;
    let cycle = 2 * period;
    let cycles = n / cycle;
    let batches = cycles.clamp(1, QUEUE_BATCHES);

    let mut sampler = RngStream::new(cfg.seed, SIM_STREAM).slots_from(cfg.channel, 0);
    let mut slot = SlotRealization::zeros(cfg.channel.relays());
    let mut buffers = [0.0f64; 2];
    let mut queues = [Vec::with_capacity(n as usize), Vec::with_capacity(n as usize)];
    let (mut delivered, mut admitted) = (0.0, 0.0);
    let mut batch_rates = Moments::default();
    let (mut batch_bits, mut batch_slots) = (0.0, 0u64);
    let mut batch_idx = 0u64;

    for s in 0..n {
        sampler.fill(&mut slot);
        let rx = ((s / period) % 2) as usize;
        let tx = 1 - rx;
        let (rx_range, tx_range) = if rx == 0 { (0..m, m..slot.relays()) } else { (m..slot.relays(), 0..m) };
        let (inflow, _) = group_rates(&slot.g[rx_range.clone()], &slot.h[rx_range], p_s, p_r);
        let (_, capacity) = group_rates(&slot.g[tx_range.clone()], &slot.h[tx_range], p_s, p_r);
        let sent = buffers[tx].min(capacity);
        buffers[tx] -= sent;
        buffers[rx] += inflow;
        delivered += sent;
        admitted += inflow;
        queues[0].push(buffers[0]);
        queues[1].push(buffers[1]);

        batch_bits += sent;
        batch_slots += 1;
        let cycle_done = (s + 1) % cycle == 0;
        if cycle_done {
            let cycles_done = (s + 1) / cycle;
            // batch j ends after cycle floor((j+1) * cycles / batches)
            if cycles_done == (batch_idx + 1) * cycles / batches {
                batch_rates.push(batch_bits / batch_slots as f64);
                batch_bits = 0.0;
                batch_slots = 0;
                batch_idx += 1;
            }
        }
    }

    let trace = QueueTrace { group_size: m, group_queues: queues, delivered_bits: delivered, admitted_bits: admitted, slots: n };
    let std_error = if batch_rates.n >= 2 { (batch_rates.variance() / batch_rates.n as f64).sqrt() } else { 0.0 };
    let aux = BTreeMap::from([
        ("admitted_per_slot".to_string(), admitted / n as f64),
        ("mean_queue_bits".to_string(), trace.mean_queue_bits()),
        ("final_queue_bits".to_string(), buffers[0] + buffers[1]),
    ]);
    let est = ThroughputEstimate { mean: delivered / n as f64, std_error, n_slots: n, aux };
    Ok((est, trace))
}

/// Dispatches to the estimator of `cfg.protocol` (ADB uses the flow estimator).
pub fn simulate(cfg: &SimConfig) -> Result<ThroughputEstimate> {
    match cfg.protocol {
        ProtocolKind::Crs => simulate_crs(cfg),
        ProtocolKind::SfdMmrs => simulate_sfd_mmrs(cfg),
        ProtocolKind::Df => simulate_df(cfg),
        ProtocolKind::Adb => adb_flow_estimate(cfg),
    }
}
