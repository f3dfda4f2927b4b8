//! Seeded counter-based pseudo-random numbers.
//!
//! The generator is deliberately simple and fully specified so fixtures can
//! be reproduced from any language:
//!
//! * the i-th raw word (i = 0, 1, …) is `mix(seed + (i+1) * 0x9E37_79B9_7F4A_7C15)`
//!   where `mix` is the splitmix64 finalizer
//!   (`z ^= z>>30; z *= 0xBF58_476D_1CE4_E5B9; z ^= z>>27; z *= 0x94D0_49BB_1331_11EB; z ^= z>>31`,
//!   all on wrapping u64 arithmetic);
//! * a uniform draw takes the top 53 bits: `u = (word >> 11) / 2^53 ∈ [0, 1)`;
//! * standard normals come from the Box–Muller transform on consecutive
//!   uniform pairs: `r = sqrt(-2 ln(1-u1))`, `z0 = r cos(2π u2)`,
//!   `z1 = r sin(2π u2)` (the `1-u1` keeps the logarithm finite).

const GOLDEN: u64 = 0x9E37_79B9_7F4A_7C15;

#[derive(Debug, Clone)]
pub struct CounterRng {
    seed: u64,
    counter: u64,
    spare_normal: Option<f64>,
}

impl CounterRng {
    pub fn new(seed: u64) -> Self {
        CounterRng {
            seed,
            counter: 0,
            spare_normal: None,
        }
    }

    pub fn next_u64(&mut self) -> u64 {
        self.counter += 1;
        let mut z = self.seed.wrapping_add(self.counter.wrapping_mul(GOLDEN));
        z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
        z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
        z ^ (z >> 31)
    }

    /// Uniform draw in [0, 1).
    pub fn uniform(&mut self) -> f64 {
        (self.next_u64() >> 11) as f64 / (1u64 << 53) as f64
    }

    /// Uniform draw in [lo, hi).
    pub fn uniform_in(&mut self, lo: f64, hi: f64) -> f64 {
        lo + (hi - lo) * self.uniform()
    }

    /// Standard normal draw (Box–Muller on uniform pairs).
    pub fn normal(&mut self) -> f64 {
        if let Some(z) = self.spare_normal.take() {
            return z;
        }
        let u1 = self.uniform();
        let u2 = self.uniform();
        let r = (-2.0 * (1.0 - u1).ln()).sqrt();
        let angle = 2.0 * std::f64::consts::PI * u2;
        self.spare_normal = Some(r * angle.sin());
        r * angle.cos()
    }

    pub fn normal_vec(&mut self, len: usize) -> Vec<f64> {
        (0..len).map(|_| self.normal()).collect()
    }

    pub fn uniform_vec(&mut self, len: usize, lo: f64, hi: f64) -> Vec<f64> {
        (0..len).map(|_| self.uniform_in(lo, hi)).collect()
    }
}
