//! Deterministic pseudo-randomness.
//!
//! All randomness in the library flows from a single `u64` seed through
//! [`SplitMix64`]. Parallel or per-task streams are derived with the
//! documented splitting rule `seed_i = split_seed(seed, i)`, so results are
//! bit-identical regardless of how work is scheduled.

/// SplitMix64 generator (Steele, Lea, Flood 2014). Small state, full period,
/// and stable output across platforms, which is what the reproducibility
/// contract needs.
#[derive(Debug, Clone)]
pub struct SplitMix64 {
    state: u64,
}

impl SplitMix64 {
    pub fn new(seed: u64) -> Self {
        SplitMix64 { state: seed }
    }

    pub fn next_u64(&mut self) -> u64 {
        self.state = self.state.wrapping_add(0x9E3779B97F4A7C15);
        let mut z = self.state;
        z = (z ^ (z >> 30)).wrapping_mul(0xBF58476D1CE4E5B9);
        z = (z ^ (z >> 27)).wrapping_mul(0x94D049BB133111EB);
        z ^ (z >> 31)
    }

    /// Uniform in [0, 1).
    pub fn next_f64(&mut self) -> f64 {
        // 53 high bits -> dyadic rational in [0,1)
        (self.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
    }

    /// Uniform in 0..bound (bound > 0), via rejection-free Lemire reduction.
    pub fn next_below(&mut self, bound: usize) -> usize {
        debug_assert!(bound > 0);
        ((self.next_u64() as u128 * bound as u128) >> 64) as usize
    }

    /// Sample an index according to a probability vector (entries >= 0, sum 1).
    pub fn sample_index(&mut self, probs: &[f64]) -> usize {
        let u = self.next_f64();
        let mut acc = 0.0;
        for (i, p) in probs.iter().enumerate() {
            acc += p;
            if u < acc {
                return i;
            }
        }
        probs.len() - 1
    }
}

/// The documented seed-splitting rule: stream `i` of master seed `s` is
/// `splitmix(s ^ (i+1) * 0x9E3779B97F4A7C15)`s first output. Distinct `i`
/// give statistically independent streams.
pub fn split_seed(seed: u64, i: u64) -> u64 {
    let mut g = SplitMix64::new(seed ^ (i.wrapping_add(1)).wrapping_mul(0x9E3779B97F4A7C15));
    g.next_u64()
}
