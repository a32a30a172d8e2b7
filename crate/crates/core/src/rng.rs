//! Deterministic pseudo-random numbers for the optimizer and the simulator.
//!
//! The generator is SplitMix64 (Steele/Lea/Flood): the state advances by a
//! fixed odd constant and each output is a bijective finalizer of the state,
//! so it is a counter-based generator with a documented algorithm and
//! bit-identical output on every platform. Substreams are derived by hashing
//! `(seed, domain, index)`, which makes per-trial and per-restart streams
//! independent of execution order.

const GOLDEN_GAMMA: u64 = 0x9E37_79B9_7F4A_7C15;

#[inline]
fn mix64(mut z: u64) -> u64 {
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// SplitMix64 stream.
#[derive(Debug, Clone)]
pub struct SplitMix64 {
    state: u64,
}

impl SplitMix64 {
    pub fn new(seed: u64) -> Self {
        Self { state: seed }
    }

    /// Substream addressed by `(seed, domain, index)`; streams with distinct
    /// addresses are statistically independent.
    pub fn substream(seed: u64, domain: u64, index: u64) -> Self {
        let mut s = mix64(seed ^ GOLDEN_GAMMA.wrapping_mul(domain.wrapping_add(1)));
        s = mix64(s ^ index.wrapping_mul(0xD605_0B1A_DB0A_BFC5));
        Self { state: s }
    }

    #[inline]
    pub fn next_u64(&mut self) -> u64 {
        self.state = self.state.wrapping_add(GOLDEN_GAMMA);
        mix64(self.state)
    }

    /// Uniform in [0, 1) with 53 random bits.
    #[inline]
    pub fn next_f64(&mut self) -> f64 {
        (self.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
    }

    /// Uniform integer in [0, bound) via the widening-multiply reduction.
    #[inline]
    pub fn next_below(&mut self, bound: u64) -> u64 {
        debug_assert!(bound > 0);
        ((self.next_u64() as u128 * bound as u128) >> 64) as u64
    }

    /// Sample an index from a probability vector by inverse-CDF scan.
    pub fn sample(&mut self, probs: &[f64]) -> usize {
        let u = self.next_f64();
        let mut acc = 0.0;
        for (i, &p) in probs.iter().enumerate() {
            acc += p;
            if u < acc {
                return i;
            }
        }
        probs.len() - 1
    }

    /// A point drawn uniformly from the (k-1)-simplex: i.i.d. exponentials,
    /// normalized.
    pub fn simplex(&mut self, k: usize) -> Vec<f64> {
        let mut v: Vec<f64> = (0..k)
            .map(|_| {
                let u = self.next_f64();
                -(1.0 - u).ln()
            })
            .collect();
        let s: f64 = v.iter().sum();
        if s > 0.0 {
            for x in &mut v {
                *x /= s;
            }
        } else {
            v.fill(1.0 / k as f64);
        }
        v
    }
}
