//! Seedable, portable random number generation.
//!
//! All stochastic behaviour in this crate (augmentation angles, weight
//! initialization, corpus synthesis, GAN noise, dataset shuffles) draws from
//! [`SplitMix64`], Steele et al.'s 64-bit mixing generator. The algorithm is
//! fixed here rather than borrowed from an external crate so that identical
//! seeds produce identical bytes on every platform and toolchain.

/// SplitMix64 generator. One `u64` of state; each draw advances the state by
/// a fixed odd constant and scrambles it with two xor-multiply rounds.
#[derive(Debug, Clone)]
pub struct SplitMix64 {
    state: u64,
}

impl SplitMix64 {
    pub fn new(seed: u64) -> Self {
        SplitMix64 { state: seed }
    }

    pub fn next_u64(&mut self) -> u64 {
        self.state = self.state.wrapping_add(0x9E37_79B9_7F4A_7C15);
        let mut z = self.state;
        z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
        z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
        z ^ (z >> 31)
    }

    /// Uniform in `[0, 1)` with 53 bits of precision.
    pub fn next_f64(&mut self) -> f64 {
        (self.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
    }

    /// Uniform in `[lo, hi)`.
    pub fn range_f64(&mut self, lo: f64, hi: f64) -> f64 {
        lo + self.next_f64() * (hi - lo)
    }

    /// Uniform in `0..n`. `n` must be nonzero. The modulo bias is below
    /// 2^-53 for every `n` this crate uses.
    pub fn below(&mut self, n: usize) -> usize {
        assert!(n > 0, "below(0)");
        (self.next_u64() % n as u64) as usize
    }

    /// Standard normal via Box-Muller. Consumes exactly two draws per call;
    /// the second variate is discarded to keep the state sequence simple.
    pub fn normal(&mut self) -> f64 {
        let u1 = 1.0 - self.next_f64(); // (0, 1]
        let u2 = self.next_f64();
        (-2.0 * u1.ln()).sqrt() * (std::f64::consts::TAU * u2).cos()
    }

    /// Fisher-Yates shuffle.
    pub fn shuffle<T>(&mut self, items: &mut [T]) {
        for i in (1..items.len()).rev() {
            let j = self.below(i + 1);
            items.swap(i, j);
        }
    }

    /// `k` distinct indices drawn without replacement from `0..n`, in draw
    /// order.
    pub fn sample_without_replacement(&mut self, n: usize, k: usize) -> Vec<usize> {
        assert!(k <= n, "cannot sample {k} of {n}");
        let mut pool: Vec<usize> = (0..n).collect();
        self.shuffle(&mut pool);
        pool.truncate(k);
        pool
    }
}

/// Derive an independent stream seed from a base seed and a stream tag, so
/// that e.g. weight init and dataset shuffling never share a sequence.
pub fn derive(seed: u64, stream: u64) -> u64 {
    SplitMix64::new(seed ^ stream.wrapping_mul(0xA076_1D64_78BD_642F)).next_u64()
}

/// Stream tags for [`derive`]. Each subsystem draws from its own stream.
pub mod streams {
    pub const AUGMENT: u64 = 1;
    pub const WEIGHT_INIT: u64 = 2;
    pub const SHUFFLE: u64 = 3;
    pub const SYNTH: u64 = 4;
    pub const GAN_INIT: u64 = 5;
    pub const GAN_NOISE: u64 = 6;
    pub const GAN_DROPOUT: u64 = 7;
    pub const SELECTION: u64 = 8;
    pub const FINE_TUNE: u64 = 9;
    pub const GAN_SAMPLE: u64 = 10;
    pub const SPLIT: u64 = 11;
    pub const GAN_SHUFFLE: u64 = 12;
}
