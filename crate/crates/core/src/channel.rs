//! Binary antipodal signalling of GF(2^r) symbols over AWGN and the
//! corresponding channel LLRVs.

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand::SeedableRng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::gf::GfElement;
use crate::llrv::{normalize_in_place, Llrv};

/// Operating point of the AWGN channel.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ChannelConfig {
    /// Eb/N0 per information bit, dB.
    pub ebn0_db: f64,
    /// Code rate K/N.
    pub rate: f64,
    /// Bits per symbol.
    pub r: u32,
    pub seed: u64,
}

impl ChannelConfig {
    /// Noise variance per real dimension for unit-energy antipodal bits.
    pub fn sigma2(&self) -> f64 {
        noise_variance(self.ebn0_db, self.rate)
    }
}

/// `sigma^2 = 1 / (2 * rate * 10^(ebn0/10))`.
pub fn noise_variance(ebn0_db: f64, rate: f64) -> f64 {
    1.0 / (2.0 * rate * 10f64.powf(ebn0_db / 10.0))
}

/// Random stream for one frame: fully determined by `(seed, frame)`.
pub fn frame_rng(seed: u64, frame: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(frame);
    rng
}

/// Maps each symbol to `r` antipodal values (bit 0 -> +1, bit 1 -> -1, LSB first)
/// and adds Gaussian noise of standard deviation `sigma`.
pub fn transmit_flat<R: Rng + ?Sized>(codeword: &[GfElement], r: u32, sigma: f64, rng: &mut R) -> Vec<f64> {
    let mut out = Vec::with_capacity(codeword.len() * r as usize);
    for c in codeword {
        for b in 0..r {
            let s = if (c.0 >> b) & 1 == 0 { 1.0 } else { -1.0 };
            let z: f64 = rng.sample(StandardNormal);
            out.push(s + sigma * z);
        }
    }
    out
}

/// Per-symbol received vectors for `codeword` under `cfg`.
pub fn transmit<R: Rng + ?Sized>(codeword: &[GfElement], cfg: &ChannelConfig, rng: &mut R) -> Vec<Vec<f64>> {
    let flat = transmit_flat(codeword, cfg.r, cfg.sigma2().sqrt(), rng);
    flat.chunks(cfg.r as usize).map(<[f64]>::to_vec).collect()
}

/// Writes the normalized symbol log-likelihoods of `y` (one symbol, `r` values) into `out`.
pub(crate) fn channel_llrv_into(y: &[f64], sigma2: f64, out: &mut [f64]) {
    // log p(y|theta) = sum_b s_b(theta) * y_b / sigma^2 + const
    out[0] = y.iter().sum::<f64>() / sigma2;
    let mut filled = 1;
    for (b, &yb) in y.iter().enumerate() {
        let flip = 2.0 * yb / sigma2;
        for t in 0..filled {
            out[t + filled] = out[t] - flip;
        }
        filled <<= 1;
        debug_assert_eq!(filled, 1 << (b + 1));
    }
    normalize_in_place(out);
}

/// Channel LLRV of one received symbol.
pub fn channel_llrv(y: &[f64], sigma2: f64) -> Llrv {
    let mut out = vec![0.0; 1 << y.len()];
    channel_llrv_into(y, sigma2, &mut out);
    Llrv::from_raw(out)
}

/// Flattened channel LLRVs for a whole received frame.
pub(crate) fn channel_llrvs_flat(y: &[f64], r: u32, sigma2: f64) -> Vec<f64> {
    let q = 1usize << r;
    let symbols = y.len() / r as usize;
    let mut out = vec![0.0; symbols * q];
    for (ys, o) in y.chunks(r as usize).zip(out.chunks_mut(q)) {
        channel_llrv_into(ys, sigma2, o);
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::llrv::CLAMP;

    #[test]
    fn noiseless_mapping() {
        let mut rng = frame_rng(1, 0);
        let y = transmit_flat(&[GfElement(0b1010_0001)], 8, 0.0, &mut rng);
        assert_eq!(y, vec![-1.0, 1.0, 1.0, 1.0, 1.0, -1.0, 1.0, -1.0]);
        let y = transmit_flat(&[GfElement(0)], 8, 0.0, &mut rng);
        assert!(y.iter().all(|&v| v == 1.0));
    }

    #[test]
    fn empirical_noise_variance() {
        let cfg = ChannelConfig { ebn0_db: 1.0, rate: 0.5, r: 8, seed: 9 };
        let mut rng = frame_rng(cfg.seed, 0);
        let cw = vec![GfElement(0); 125_000];
        let y = transmit_flat(&cw, 8, cfg.sigma2().sqrt(), &mut rng);
        assert_eq!(y.len(), 1_000_000);
        let var = y.iter().map(|v| (v - 1.0).powi(2)).sum::<f64>() / y.len() as f64;
        assert!((var / cfg.sigma2() - 1.0).abs() < 0.01, "{var} vs {}", cfg.sigma2());
    }

    #[test]
    fn noiseless_llrv_peaks_at_sent_symbol() {
        let sigma2 = 0.5;
        for theta in [0u8, 1, 77, 255] {
            let mut rng = frame_rng(0, 0);
            let y = transmit_flat(&[GfElement(theta)], 8, 0.0, &mut rng);
            let l = channel_llrv(&y, sigma2);
            assert_eq!(l.argmax(), GfElement(theta));
            // nearest competitor differs in one bit: margin 2 / sigma^2 per flipped bit
            let mut sorted = l.values().to_vec();
            sorted.sort_by(|a, b| b.total_cmp(a));
            assert!((sorted[1] + 2.0 / sigma2).abs() < 1e-12);
        }
    }

    #[test]
    fn binary_llrv_is_scaled_bit_llr() {
        let sigma2 = 0.8;
        for y in [-1.7, -0.2, 0.0, 0.4, 2.5] {
            let l = channel_llrv(&[y], sigma2);
            let llr = (l[0] - l[1]).clamp(-CLAMP, CLAMP);
            assert!((llr - (2.0 * y / sigma2).clamp(-CLAMP, CLAMP)).abs() < 1e-12);
        }
    }

    #[test]
    fn q4_llrv_matches_gaussian_enumeration() {
        let sigma2 = 0.7;
        let mut rng = frame_rng(4, 2);
        for _ in 0..100 {
            let y: Vec<f64> = (0..2).map(|_| rng.random_range(-2.0..2.0)).collect();
            let l = channel_llrv(&y, sigma2);
            let mut logs = [0.0; 4];
            for (theta, slot) in logs.iter_mut().enumerate() {
                for (b, yb) in y.iter().enumerate() {
                    let s = if (theta >> b) & 1 == 0 { 1.0 } else { -1.0 };
                    *slot += -(yb - s) * (yb - s) / (2.0 * sigma2);
                }
            }
            let m = logs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
            for t in 0..4 {
                assert!((l[t] - (logs[t] - m).max(-CLAMP)).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn frame_rng_is_counter_based() {
        let a: Vec<u64> = (0..4).map(|_| frame_rng(7, 3).random()).collect();
        assert!(a.windows(2).all(|w| w[0] == w[1]));
        let b: u64 = frame_rng(7, 4).random();
        assert_ne!(a[0], b);
    }
}
