//! Portable deterministic generator used for phantoms.
//!
//! 64-bit linear congruential generator with Knuth's MMIX constants:
//!
//! ```text
//! state <- state * 6364136223846793005 + 1442695040888963407   (mod 2^64)
//! ```
//!
//! The seed is mixed once through the recurrence before the first draw, and
//! every output is the high 32 bits of the new state (the low bits of a
//! power-of-two LCG have short periods). Gaussian deviates use the
//! Irwin-Hall approximation (sum of 12 uniforms minus 6), so the pixel path
//! needs only integer arithmetic and basic IEEE-754 operations.

pub const LCG_MULTIPLIER: u64 = 6364136223846793005;
pub const LCG_INCREMENT: u64 = 1442695040888963407;

#[derive(Debug, Clone)]
pub struct Lcg64 {
    state: u64,
}

impl Lcg64 {
    pub fn new(seed: u64) -> Self {
        let mut rng = Self { state: seed };
        rng.step();
        rng
    }

    fn step(&mut self) -> u64 {
        self.state = self
            .state
            .wrapping_mul(LCG_MULTIPLIER)
            .wrapping_add(LCG_INCREMENT);
        self.state
    }

    pub fn next_u32(&mut self) -> u32 {
        (self.step() >> 32) as u32
    }

    /// Uniform in [0, 1) with 32 bits of resolution.
    pub fn next_unit(&mut self) -> f64 {
        f64::from(self.next_u32()) / 4_294_967_296.0
    }

    /// Uniform integer in `0..bound` (`bound > 0`), by multiply-shift.
    pub fn below(&mut self, bound: usize) -> usize {
        debug_assert!(bound > 0);
        ((u64::from(self.next_u32()) * bound as u64) >> 32) as usize
    }

    /// Approximately standard normal: Irwin-Hall with 12 terms.
    pub fn next_gaussian(&mut self) -> f64 {
        let mut sum = 0.0;
        for _ in 0..12 {
            sum += self.next_unit();
        }
        sum - 6.0
    }
}
