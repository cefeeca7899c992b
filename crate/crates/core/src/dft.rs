//! Short temporal DFTs.
//!
//! Sign and scale convention used throughout the crate: the forward transform
//! is `X[k] = sum_n x[n] exp(+j 2 pi k n / N)` without normalization, and the
//! inverse carries `1/N`. With this choice the bin-1 phase of a pattern pixel
//! equals `+2 pi y_p`.

use num_complex::Complex64;
use std::f64::consts::TAU;

/// Precomputed twiddles for an `N`-point transform.
#[derive(Debug, Clone)]
pub struct Dft {
    n: usize,
    twiddles: Vec<Complex64>,
}

impl Dft {
    pub fn new(n: usize) -> Self {
        let twiddles = (0..n)
            .map(|m| Complex64::from_polar(1.0, TAU * m as f64 / n as f64))
            .collect();
        Self { n, twiddles }
    }

    #[inline]
    pub fn len(&self) -> usize {
        self.n
    }

    #[inline]
    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    /// `exp(+j 2 pi m / N)` for any integer `m`.
    #[inline]
    pub fn twiddle(&self, m: usize) -> Complex64 {
        self.twiddles[m % self.n]
    }

    pub fn forward_into(&self, input: &[f64], out: &mut [Complex64]) {
        debug_assert_eq!(input.len(), self.n);
        debug_assert_eq!(out.len(), self.n);
        for (k, bin) in out.iter_mut().enumerate() {
            let mut acc = Complex64::new(0.0, 0.0);
            for (n, &v) in input.iter().enumerate() {
                acc += self.twiddles[(k * n) % self.n] * v;
            }
            *bin = acc;
        }
    }

    pub fn forward(&self, input: &[f64]) -> Vec<Complex64> {
        let mut out = vec![Complex64::new(0.0, 0.0); self.n];
        self.forward_into(input, &mut out);
        out
    }

    /// Inverse transform keeping only the real part of each sample.
    pub fn inverse_real(&self, input: &[Complex64]) -> Vec<f64> {
        debug_assert_eq!(input.len(), self.n);
        let scale = 1.0 / self.n as f64;
        (0..self.n)
            .map(|n| {
                let mut acc = Complex64::new(0.0, 0.0);
                for (k, &bin) in input.iter().enumerate() {
                    acc += bin * self.twiddles[(k * n) % self.n].conj();
                }
                acc.re * scale
            })
            .collect()
    }
}
