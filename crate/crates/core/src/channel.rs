//! i.i.d. Rayleigh block fading with directly addressable random streams.
//!
//! Channel power gains follow `|g|^2 ~ Exp(mean 2 sigma^2)`, i.e. the
//! survival function is `P(|g|^2 >= z) = exp(-z / (2 sigma^2))`. The same
//! convention is used by the closed forms in [`crate::analytic`], so the
//! Monte Carlo estimates and the analytic expressions describe the same law.
//!
//! Every slot consumes exactly `2L` 64-bit words of a ChaCha8 keystream:
//! the `L` source-relay draws first, then the `L` relay-destination draws.
//! A slot is therefore addressable by `(seed, stream_id, slot_index)` and
//! any contiguous slot range can be generated without touching the slots
//! before it.

use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};

/// Statistical description of the network: relay count and the fading
/// variance parameters shared by all relays. Noise power is fixed to 1.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ChannelParams {
    relays: usize,
    sigma_g2: f64,
    sigma_h2: f64,
}

impl ChannelParams {
    pub const NOISE_POWER: f64 = 1.0;

    pub fn new(relays: usize, sigma_g2: f64, sigma_h2: f64) -> Result<Self> {
        if relays == 0 {
            return Err(Error::config("relays", "relay count must be at least 1"));
        }
        check_variance("sigma_g2", sigma_g2)?;
        check_variance("sigma_h2", sigma_h2)?;
        Ok(ChannelParams { relays, sigma_g2, sigma_h2 })
    }

    /// Unit-variance network with `relays` relays.
    pub fn unit(relays: usize) -> Result<Self> {
        Self::new(relays, 1.0, 1.0)
    }

    pub fn relays(&self) -> usize {
        self.relays
    }

    pub fn sigma_g2(&self) -> f64 {
        self.sigma_g2
    }

    pub fn sigma_h2(&self) -> f64 {
        self.sigma_h2
    }

    pub fn noise_power(&self) -> f64 {
        Self::NOISE_POWER
    }

    /// Number of keystream words one slot occupies.
    fn words_per_slot(&self) -> u128 {
        // two u32 words per u64 draw
        2 * 2 * self.relays as u128
    }
}

fn check_variance(name: &str, v: f64) -> Result<()> {
    if !(v.is_finite() && v > 0.0) {
        return Err(Error::Domain(format!("{name} must be positive and finite, got {v}")));
    }
    Ok(())
}

/// One block-fading draw: amplitudes `|g_i|` and `|h_i|` for every relay.
#[derive(Debug, Clone, PartialEq)]
pub struct SlotRealization {
    pub g: Vec<f64>,
    pub h: Vec<f64>,
    pub slot_index: u64,
}

impl SlotRealization {
    pub fn new(g: Vec<f64>, h: Vec<f64>, slot_index: u64) -> Result<Self> {
        if g.len() != h.len() || g.is_empty() {
            return Err(Error::config_msg(format!(
                "g and h must have the same non-zero length (got {} and {})",
                g.len(),
                h.len()
            )));
        }
        if g.iter().chain(h.iter()).any(|x| !(x.is_finite() && *x >= 0.0)) {
            return Err(Error::domain("amplitudes must be finite and nonnegative"));
        }
        Ok(SlotRealization { g, h, slot_index })
    }

    pub(crate) fn zeros(relays: usize) -> Self {
        SlotRealization { g: vec![0.0; relays], h: vec![0.0; relays], slot_index: 0 }
    }

    pub fn relays(&self) -> usize {
        self.g.len()
    }
}

/// Address of an independent random stream: a 64-bit seed plus a stream id.
///
/// Identical `(seed, stream_id)` pairs replay identical sequences; distinct
/// stream ids select disjoint ChaCha keystreams.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct RngStream {
    pub seed: u64,
    pub stream_id: u64,
}

impl RngStream {
    pub fn new(seed: u64, stream_id: u64) -> Self {
        RngStream { seed, stream_id }
    }

    /// A generator positioned at the start of the stream.
    pub fn rng(&self) -> ChaCha8Rng {
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        rng.set_stream(self.stream_id);
        rng
    }

    /// A sampler positioned at `slot_index` for the given network.
    pub fn slots_from(&self, params: ChannelParams, slot_index: u64) -> SlotSampler {
        let mut rng = self.rng();
        rng.set_word_pos(slot_index as u128 * params.words_per_slot());
        SlotSampler { params, rng, next_index: slot_index }
    }
}

/// Uniform draw on `(0, 1]`. Zero is excluded so `ln(u)` is finite.
#[inline]
pub fn uniform_open_closed<R: RngCore + ?Sized>(rng: &mut R) -> f64 {
    ((rng.next_u64() >> 11) + 1) as f64 * (1.0 / (1u64 << 53) as f64)
}

/// Inverse-transform map from `u in (0, 1]` to a Rayleigh amplitude with
/// `P(x^2 >= z) = exp(-z / (2 sigma2))`.
#[inline]
pub fn rayleigh_from_uniform(u: f64, sigma2: f64) -> f64 {
    (-2.0 * sigma2 * u.ln()).sqrt()
}

pub fn sample_rayleigh_amplitude<R: RngCore + ?Sized>(rng: &mut R, sigma2: f64) -> Result<f64> {
    check_variance("sigma2", sigma2)?;
    Ok(rayleigh_from_uniform(uniform_open_closed(rng), sigma2))
}

/// Draws the realization of slot `slot_index` of `stream`.
pub fn sample_slot(params: ChannelParams, stream: RngStream, slot_index: u64) -> SlotRealization {
    let mut slot = SlotRealization::zeros(params.relays());
    stream.slots_from(params, slot_index).fill(&mut slot);
    slot
}

/// Sequential reader over consecutive slots of one stream.
#[derive(Debug, Clone)]
pub struct SlotSampler {
    params: ChannelParams,
    rng: ChaCha8Rng,
    next_index: u64,
}

impl SlotSampler {
    /// Overwrites `slot` with the next realization in the stream.
    pub fn fill(&mut self, slot: &mut SlotRealization) {
        let l = self.params.relays;
        slot.g.resize(l, 0.0);
        slot.h.resize(l, 0.0);
        let (sg, sh) = (self.params.sigma_g2, self.params.sigma_h2);
        for x in slot.g.iter_mut() {
            *x = rayleigh_from_uniform(uniform_open_closed(&mut self.rng), sg);
        }
        for x in slot.h.iter_mut() {
            *x = rayleigh_from_uniform(uniform_open_closed(&mut self.rng), sh);
        }
        slot.slot_index = self.next_index;
        self.next_index += 1;
    }

    pub fn next_index(&self) -> u64 {
        self.next_index
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn unit_uniform_maps_to_zero_amplitude() {
        assert_eq!(rayleigh_from_uniform(1.0, 1.0), 0.0);
        assert_eq!(rayleigh_from_uniform(1.0, 7.5), 0.0);
    }

    #[test]
    fn rejects_bad_variance() {
        let mut rng = RngStream::new(1, 0).rng();
        assert!(matches!(sample_rayleigh_amplitude(&mut rng, 0.0), Err(Error::Domain(_))));
        assert!(matches!(sample_rayleigh_amplitude(&mut rng, -1.0), Err(Error::Domain(_))));
        assert!(ChannelParams::new(0, 1.0, 1.0).is_err());
        assert!(ChannelParams::new(2, 1.0, f64::NAN).is_err());
    }

    #[test]
    fn single_relay_shape() {
        let p = ChannelParams::unit(1).unwrap();
        let s = sample_slot(p, RngStream::new(3, 0), 0);
        assert_eq!(s.g.len(), 1);
        assert_eq!(s.h.len(), 1);
    }

    #[test]
    fn slot_replay_is_identical() {
        let p = ChannelParams::new(4, 0.5, 2.0).unwrap();
        let st = RngStream::new(42, 7);
        assert_eq!(sample_slot(p, st, 123), sample_slot(p, st, 123));
    }

    #[test]
    fn direct_addressing_matches_sequential_read() {
        let p = ChannelParams::unit(3).unwrap();
        let st = RngStream::new(9, 1);
        let mut seq = st.slots_from(p, 0);
        let mut slot = SlotRealization::zeros(3);
        for i in 0..50 {
            seq.fill(&mut slot);
            assert_eq!(slot, sample_slot(p, st, i));
        }
    }

    #[test]
    fn exponential_power_mean() {
        let mut rng = RngStream::new(11, 0).rng();
        let n = 1_000_000;
        let mut sum = 0.0;
        let mut tail = 0usize;
        for _ in 0..n {
            let x = sample_rayleigh_amplitude(&mut rng, 1.0).unwrap();
            sum += x * x;
            if x * x >= 2.0 {
                tail += 1;
            }
        }
        let mean = sum / n as f64;
        assert!((mean - 2.0).abs() < 0.02, "mean {mean}");
        let p = tail as f64 / n as f64;
        assert!((p - (-1.0f64).exp()).abs() < 0.01, "tail {p}");
    }

    #[test]
    fn per_relay_means_l4() {
        let p = ChannelParams::unit(4).unwrap();
        let mut s = RngStream::new(5, 0).slots_from(p, 0);
        let mut slot = SlotRealization::zeros(4);
        let n = 100_000;
        let mut sums = [0.0; 4];
        for _ in 0..n {
            s.fill(&mut slot);
            for (acc, g) in sums.iter_mut().zip(&slot.g) {
                *acc += g * g;
            }
        }
        for acc in sums {
            let mean = acc / n as f64;
            assert!((mean - 2.0).abs() < 0.06, "mean {mean}");
        }
    }
}
