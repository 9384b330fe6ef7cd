//! Radix-2 FFT with precomputed twiddles, a packed real-input transform and
//! the direct-summation DFT used as its reference.

use alloc::vec::Vec;
use core::f64::consts::PI;
use num_complex::Complex64;

use super::DspError;

pub fn is_power_of_two(n: usize) -> bool {
    n != 0 && n & (n - 1) == 0
}

/// Reusable plan for in-place complex transforms of one power-of-two size.
#[derive(Debug, Clone)]
pub struct FftPlan {
    n: usize,
    /// `exp(-2*pi*i*k/n)` for `k < n/2`.
    twiddles: Vec<Complex64>,
    bitrev: Vec<u32>,
}

impl FftPlan {
    pub fn new(n: usize) -> Result<Self, DspError> {
        if !is_power_of_two(n) {
            return Err(DspError::NotPowerOfTwo(n));
        }
        let twiddles = (0..n / 2)
            .map(|k| {
                let a = -2.0 * PI * k as f64 / n as f64;
                Complex64::new(libm::cos(a), libm::sin(a))
            })
            .collect();
        let bits = n.trailing_zeros();
        let bitrev = (0..n as u32)
            .map(|i| if bits == 0 { 0 } else { i.reverse_bits() >> (32 - bits) })
            .collect();
        Ok(FftPlan { n, twiddles, bitrev })
    }

    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    /// Unscaled forward transform, `X[k] = sum x[n] e^{-2 pi i k n / N}`.
    pub fn forward(&self, buf: &mut [Complex64]) {
        self.transform(buf, false);
    }

    /// Inverse transform including the `1/N` factor.
    pub fn inverse(&self, buf: &mut [Complex64]) {
        self.transform(buf, true);
        let scale = 1.0 / self.n as f64;
        for v in buf.iter_mut() {
            *v *= scale;
        }
    }

    fn transform(&self, buf: &mut [Complex64], inverse: bool) {
        assert_eq!(buf.len(), self.n, "buffer length does not match plan");
        for i in 0..self.n {
            let j = self.bitrev[i] as usize;
            if i < j {
                buf.swap(i, j);
            }
        }
        let mut size = 2;
        while size <= self.n {
            let half = size / 2;
            let stride = self.n / size;
            for chunk in buf.chunks_exact_mut(size) {
                let (lo, hi) = chunk.split_at_mut(half);
                for j in 0..half {
                    let w = self.twiddles[j * stride];
                    let w = if inverse { w.conj() } else { w };
                    let t = w * hi[j];
                    hi[j] = lo[j] - t;
                    lo[j] += t;
                }
            }
            size *= 2;
        }
    }
}

/// Forward (or scaled inverse) FFT of a power-of-two length vector.
pub fn fft(input: &[Complex64], inverse: bool) -> Result<Vec<Complex64>, DspError> {
    let plan = FftPlan::new(input.len())?;
    let mut buf = input.to_vec();
    if inverse {
        plan.inverse(&mut buf);
    } else {
        plan.forward(&mut buf);
    }
    Ok(buf)
}

/// Direct O(N^2) evaluation of the forward DFT definition. Accepts any length.
pub fn dft_oracle(input: &[Complex64]) -> Vec<Complex64> {
    let n = input.len();
    (0..n)
        .map(|k| {
            let mut acc = Complex64::new(0.0, 0.0);
            for (j, x) in input.iter().enumerate() {
                // Reduce k*j mod n before scaling keeps the angle small.
                let a = -2.0 * PI * ((k * j) % n) as f64 / n as f64;
                acc += x * Complex64::new(libm::cos(a), libm::sin(a));
            }
            acc
        })
        .collect()
}

/// Forward transform of real input of length `n`, returning bins `0..=n/2`.
/// Packs pairs of samples into an `n/2`-point complex FFT.
#[derive(Debug, Clone)]
pub struct RealFft {
    n: usize,
    half: Option<FftPlan>,
    /// `exp(-2*pi*i*k/n)` for `k < n/2`.
    split: Vec<Complex64>,
    scratch: Vec<Complex64>,
}

impl RealFft {
    pub fn new(n: usize) -> Result<Self, DspError> {
        if !is_power_of_two(n) {
            return Err(DspError::NotPowerOfTwo(n));
        }
        let half = if n >= 2 { Some(FftPlan::new(n / 2)?) } else { None };
        let split = (0..n / 2)
            .map(|k| {
                let a = -2.0 * PI * k as f64 / n as f64;
                Complex64::new(libm::cos(a), libm::sin(a))
            })
            .collect();
        Ok(RealFft {
            n,
            half,
            split,
            scratch: alloc::vec![Complex64::new(0.0, 0.0); n / 2],
        })
    }

    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    /// `out` must have length `n/2 + 1`.
    pub fn forward(&mut self, input: &[f64], out: &mut [Complex64]) {
        assert_eq!(input.len(), self.n);
        assert_eq!(out.len(), self.n / 2 + 1);
        let Some(plan) = &self.half else {
            out[0] = Complex64::new(input[0], 0.0);
            return;
        };
        let m = self.n / 2;
        for (k, z) in self.scratch.iter_mut().enumerate() {
            *z = Complex64::new(input[2 * k], input[2 * k + 1]);
        }
        plan.forward(&mut self.scratch);
        let z = &self.scratch;
        for k in 0..=m {
            let zk = z[k % m];
            let zc = z[(m - k) % m].conj();
            let even = (zk + zc) * 0.5;
            let odd = (zk - zc) * Complex64::new(0.0, -0.5);
            let w = if k < m { self.split[k] } else { Complex64::new(-1.0, 0.0) };
            out[k] = even + w * odd;
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;

    fn c(re: f64) -> Complex64 {
        Complex64::new(re, 0.0)
    }

    #[test]
    fn impulse_and_constant() {
        let out = fft(&[c(1.0), c(0.0), c(0.0), c(0.0)], false).unwrap();
        for v in &out {
            assert!((v - c(1.0)).norm() < 1e-15);
        }
        let out = fft(&[c(1.0); 4], false).unwrap();
        assert!((out[0] - c(4.0)).norm() < 1e-15);
        for v in &out[1..] {
            assert!(v.norm() < 1e-15);
        }
    }

    #[test]
    fn oracle_small_cases() {
        let out = dft_oracle(&[c(1.0), c(0.0), c(0.0), c(0.0)]);
        assert_eq!(out, vec![c(1.0); 4]);
        let x = Complex64::new(0.3, -2.0);
        assert_eq!(dft_oracle(&[x]), vec![x]);
    }

    #[test]
    fn rejects_non_power_of_two() {
        assert_eq!(fft(&[c(1.0); 6], false), Err(DspError::NotPowerOfTwo(6)));
        assert!(FftPlan::new(0).is_err());
        assert!(RealFft::new(12).is_err());
    }

    #[test]
    fn real_fft_matches_oracle() {
        let noise = crate::rng::WhiteNoise::new(9);
        for n in [1usize, 2, 4, 8, 64, 1024] {
            let mut x = vec![0.0; n];
            noise.fill(n as u64 * 1000, &mut x);
            let reference = dft_oracle(&x.iter().map(|v| c(*v)).collect::<Vec<_>>());
            let mut rf = RealFft::new(n).unwrap();
            let mut out = vec![Complex64::new(0.0, 0.0); n / 2 + 1];
            rf.forward(&x, &mut out);
            for k in 0..=n / 2 {
                assert!((out[k] - reference[k]).norm() < 1e-10, "n={n} k={k}");
            }
        }
    }
}
