//! Counter-based random numbers: every value is a pure function of a seed and
//! an index, so any range of a stream can be regenerated independently.

const GOLDEN: u64 = 0x9E37_79B9_7F4A_7C15;

/// SplitMix64 finaliser.
#[inline]
pub fn mix64(mut z: u64) -> u64 {
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Derive an independent key for sub-stream `stream` of `seed`.
#[inline]
pub fn substream(seed: u64, stream: u64) -> u64 {
    mix64(mix64(seed ^ GOLDEN).wrapping_add(stream.wrapping_mul(GOLDEN)) ^ 0xD1B5_4A32_D192_ED03)
}

/// 64 random bits at `index` of the stream identified by `key`.
#[inline]
pub fn bits(key: u64, index: u64) -> u64 {
    mix64(key.wrapping_add(index.wrapping_mul(GOLDEN)))
}

/// Maps 32 random bits to a zero-mean, unit-variance uniform value.
#[inline]
pub fn unit_uniform(bits32: u32) -> f64 {
    // (u + 0.5) / 2^32 lies strictly inside (0, 1).
    let u = (bits32 as f64 + 0.5) * (1.0 / 4_294_967_296.0);
    (2.0 * u - 1.0) * 1.732_050_807_568_877_2
}

/// Two independent zero-mean, unit-variance uniforms at `index`.
#[inline]
pub fn uniform_pair(key: u64, index: u64) -> (f64, f64) {
    let b = bits(key, index);
    (unit_uniform(b as u32), unit_uniform((b >> 32) as u32))
}

/// Seeded white noise, uniform on (-1, 1), addressed by sample index.
#[derive(Debug, Clone, Copy)]
pub struct WhiteNoise {
    key: u64,
}

impl WhiteNoise {
    pub fn new(seed: u64) -> Self {
        WhiteNoise {
            key: substream(seed, 0x0057_4849_5445),
        }
    }

    #[inline]
    pub fn sample(&self, index: u64) -> f64 {
        let b = bits(self.key, index) >> 11;
        (b as f64) * (2.0 / 9_007_199_254_740_992.0) - 1.0
    }

    pub fn fill(&self, start: u64, out: &mut [f64]) {
        for (i, v) in out.iter_mut().enumerate() {
            *v = self.sample(start + i as u64);
        }
    }
}
