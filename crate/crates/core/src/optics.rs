//! Defocused-projector model: square FIR kernels applied with toroidal
//! convolution on both axes.

use crate::patterns::{Domain, PatternSet};
use crate::{Error, Grid, Result};

/// Read access to a square, odd-sided tap grid centered on offset (0, 0).
pub trait Taps {
    fn side(&self) -> usize;

    /// Row-major taps; entry `j * side + i` is offset `(i - r, j - r)` with
    /// `r = side / 2`.
    fn taps(&self) -> &[f64];

    fn radius(&self) -> usize {
        self.side() / 2
    }

    /// Iterate `(dx, dy, weight)` over the non-zero taps.
    fn offsets(&self) -> Vec<(isize, isize, f64)> {
        let side = self.side();
        let r = self.radius() as isize;
        self.taps()
            .iter()
            .enumerate()
            .filter(|(_, &t)| t != 0.0)
            .map(|(idx, &t)| ((idx % side) as isize - r, (idx / side) as isize - r, t))
            .collect()
    }
}

/// Mean-preserving low-pass kernel: non-negative taps summing to one.
#[derive(Debug, Clone, PartialEq)]
pub struct Kernel {
    side: usize,
    taps: Vec<f64>,
}

/// A [`Kernel`] with its center tap removed. Convolving a binary image with
/// it measures the light blurred into a pixel from its neighbors only.
#[derive(Debug, Clone, PartialEq)]
pub struct SurroundKernel {
    side: usize,
    taps: Vec<f64>,
    center_weight: f64,
}

const SUM_TOLERANCE: f64 = 1e-12;

impl Kernel {
    pub fn from_taps(side: usize, taps: Vec<f64>) -> Result<Self> {
        if side.is_multiple_of(2) {
            return Err(Error::InvalidKernel(format!("side {side} is not odd")));
        }
        if taps.len() != side * side {
            return Err(Error::InvalidKernel(format!(
                "{} taps for a {side}x{side} kernel",
                taps.len()
            )));
        }
        if taps.iter().any(|&t| !t.is_finite() || t < 0.0) {
            return Err(Error::InvalidKernel("negative or non-finite tap".into()));
        }
        let sum: f64 = taps.iter().sum();
        if (sum - 1.0).abs() > SUM_TOLERANCE {
            return Err(Error::InvalidKernel(format!("taps sum to {sum}, not 1")));
        }
        let kernel = Self { side, taps };
        if kernel.center() <= 0.0 {
            return Err(Error::InvalidKernel("center tap must be positive".into()));
        }
        Ok(kernel)
    }

    /// Box filter; the large-sigma limit of [`gaussian_kernel`].
    pub fn uniform(side: usize) -> Result<Self> {
        if side.is_multiple_of(2) {
            return Err(Error::InvalidKernel(format!("side {side} is not odd")));
        }
        let n = side * side;
        Self::from_taps(side, vec![1.0 / n as f64; n])
    }

    /// Center weight `c`.
    pub fn center(&self) -> f64 {
        let r = self.side / 2;
        self.taps[r * self.side + r]
    }

    pub fn tap(&self, dx: isize, dy: isize) -> f64 {
        let r = (self.side / 2) as isize;
        if dx.abs() > r || dy.abs() > r {
            return 0.0;
        }
        self.taps[((dy + r) * self.side as isize + dx + r) as usize]
    }

    pub fn sum_of_squares(&self) -> f64 {
        self.taps.iter().map(|t| t * t).sum()
    }

    pub fn split_center(&self) -> (SurroundKernel, f64) {
        split_center(self)
    }
}

impl Taps for Kernel {
    fn side(&self) -> usize {
        self.side
    }

    fn taps(&self) -> &[f64] {
        &self.taps
    }
}

impl SurroundKernel {
    pub fn center_weight(&self) -> f64 {
        self.center_weight
    }
}

impl Taps for SurroundKernel {
    fn side(&self) -> usize {
        self.side
    }

    fn taps(&self) -> &[f64] {
        &self.taps
    }
}

/// Truncated, normalized Gaussian `exp(-(x^2 + y^2) / (2 sigma^2))`.
pub fn gaussian_kernel(side: usize, sigma: f64) -> Result<Kernel> {
    if side.is_multiple_of(2) {
        return Err(Error::InvalidKernel(format!("side {side} is not odd")));
    }
    if !sigma.is_finite() || sigma <= 0.0 {
        return Err(Error::InvalidKernel(format!(
            "sigma {sigma} must be positive"
        )));
    }
    let r = (side / 2) as isize;
    let two_var = 2.0 * sigma * sigma;
    let mut taps = Vec::with_capacity(side * side);
    for dy in -r..=r {
        for dx in -r..=r {
            taps.push((-((dx * dx + dy * dy) as f64) / two_var).exp());
        }
    }
    let sum: f64 = taps.iter().sum();
    taps.iter_mut().for_each(|t| *t /= sum);
    Ok(Kernel { side, taps })
}

pub fn split_center(kernel: &Kernel) -> (SurroundKernel, f64) {
    let c = kernel.center();
    let mut taps = kernel.taps.clone();
    let r = kernel.side / 2;
    taps[r * kernel.side + r] = 0.0;
    (
        SurroundKernel {
            side: kernel.side,
            taps,
            center_weight: c,
        },
        c,
    )
}

/// `out(p) = sum_o tap(o) * grid((p - o) mod dims)`.
pub fn convolve_toroidal(grid: &Grid, kernel: &impl Taps) -> Grid {
    let (w, h) = grid.dims();
    let mut out = Grid::zeros(w, h);
    let src = grid.data();
    for (dx, dy, t) in kernel.offsets() {
        // out(x, y) += t * src(x - dx, y - dy)
        let sx = (-dx).rem_euclid(w as isize) as usize;
        for y in 0..h {
            let sy = (y as isize - dy).rem_euclid(h as isize) as usize;
            let src_row = &src[sy * w..(sy + 1) * w];
            let dst_row = &mut out.data_mut()[y * w..(y + 1) * w];
            // x + sx wraps once at most
            let split = w - sx;
            for (d, s) in dst_row[..split].iter_mut().zip(&src_row[sx..]) {
                *d += t * s;
            }
            for (d, s) in dst_row[split..].iter_mut().zip(&src_row[..sx]) {
                *d += t * s;
            }
        }
    }
    out
}

/// Blur every frame with `kernel`; the result is contone.
pub fn defocus_set(set: &PatternSet, kernel: &Kernel) -> PatternSet {
    let frames = set
        .frames
        .iter()
        .map(|f| convolve_toroidal(f, kernel).map(|v| v.clamp(0.0, 1.0)))
        .collect();
    set.with_frames(frames, Domain::Contone)
}
