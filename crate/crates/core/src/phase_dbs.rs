//! Phase-weighted direct binary search.
//!
//! Instead of halftoning each frame on its own, every pixel is treated as an
//! `N`-bit temporal vector. Given the light `s[n]` that the defocused
//! projector blurs into the pixel from its neighbors, the pixel's own bits
//! `b[n]` are chosen to minimize
//!
//! ```text
//! sum_k w_k |D[k] - c B[k]|^2,   D = DFT(contone) - DFT(s)
//! ```
//!
//! where `c` is the kernel's center weight. Pixels are visited in raster
//! order and updated in place, so later pixels see earlier decisions of the
//! same pass.

use num_complex::Complex64;

use crate::decode::wrapped_difference_deg;
use crate::dft::Dft;
use crate::halftone::{require_contone, white_noise_dither, RngSeed};
use crate::optics::{convolve_toroidal, split_center, Kernel, SurroundKernel, Taps};
use crate::patterns::{Domain, PatternSet};
use crate::{Error, Grid, Result};

pub type SpectralVector = Vec<Complex64>;

/// Largest frame count the exhaustive solver accepts.
pub const MAX_EXHAUSTIVE_FRAMES: usize = 16;

/// Per-bin weights `w_k`.
///
/// Weights are used exactly as given: a preset that sets only `w_1` does not
/// implicitly weight bin `N - 1`. For real inputs the two bins carry the same
/// error, so this only scales the cost.
#[derive(Debug, Clone, PartialEq)]
pub struct WeightVector(Vec<f64>);

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum WeightPreset {
    All,
    K1,
    K12,
}

impl WeightPreset {
    pub fn name(&self) -> &'static str {
        match self {
            WeightPreset::All => "all",
            WeightPreset::K1 => "k1",
            WeightPreset::K12 => "k12",
        }
    }
}

impl std::str::FromStr for WeightPreset {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "all" => Ok(WeightPreset::All),
            "k1" => Ok(WeightPreset::K1),
            "k12" => Ok(WeightPreset::K12),
            other => Err(Error::InvalidConfig(format!(
                "unknown weight preset {other:?}"
            ))),
        }
    }
}

impl WeightVector {
    pub fn new(weights: Vec<f64>) -> Result<Self> {
        if weights.iter().any(|w| !w.is_finite() || *w < 0.0) {
            return Err(Error::InvalidConfig(
                "weights must be finite and >= 0".into(),
            ));
        }
        if !weights.iter().any(|&w| w > 0.0) {
            return Err(Error::InvalidConfig(
                "at least one weight must be positive".into(),
            ));
        }
        Ok(Self(weights))
    }

    pub fn preset(preset: WeightPreset, frames: usize) -> Result<Self> {
        let mut w = vec![0.0; frames];
        match preset {
            WeightPreset::All => w.iter_mut().for_each(|v| *v = 1.0),
            WeightPreset::K1 => {
                if frames < 2 {
                    return Err(Error::InvalidConfig("k1 weights need N >= 2".into()));
                }
                w[1] = 1.0;
            }
            WeightPreset::K12 => {
                if frames < 3 {
                    return Err(Error::InvalidConfig("k12 weights need N >= 3".into()));
                }
                w[1] = 1.0;
                w[2] = 1.0;
            }
        }
        Self::new(w)
    }

    pub fn all(frames: usize) -> Self {
        Self::preset(WeightPreset::All, frames).expect("non-empty")
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    fn active(&self) -> Vec<usize> {
        (0..self.0.len()).filter(|&k| self.0[k] > 0.0).collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Solver {
    /// Evaluate all `2^N` bit vectors; requires `N <= 16`.
    Exhaustive,
    /// Inverse-DFT the target and keep positive samples.
    Threshold,
}

impl Solver {
    pub fn name(&self) -> &'static str {
        match self {
            Solver::Exhaustive => "exhaustive",
            Solver::Threshold => "threshold",
        }
    }
}

impl std::str::FromStr for Solver {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "exhaustive" => Ok(Solver::Exhaustive),
            "threshold" => Ok(Solver::Threshold),
            other => Err(Error::InvalidConfig(format!("unknown solver {other:?}"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct OptimizeConfig {
    pub kernel: Kernel,
    pub weights: WeightVector,
    pub solver: Solver,
    pub max_passes: usize,
    /// Stop once a pass flips fewer bits than this.
    pub min_flips: usize,
    pub seed: RngSeed,
    /// Bin whose phase error drives snapshot selection. `None` uses the
    /// pattern mode's reported bin (1 for single, 2 for dual frequency).
    pub target_bin: Option<usize>,
}

impl OptimizeConfig {
    pub const DEFAULT_MAX_PASSES: usize = 30;

    pub fn new(kernel: Kernel, weights: WeightVector) -> Self {
        Self {
            kernel,
            weights,
            solver: Solver::Exhaustive,
            max_passes: Self::DEFAULT_MAX_PASSES,
            min_flips: 0,
            seed: RngSeed::default(),
            target_bin: None,
        }
    }

    fn validate(&self, frames: usize) -> Result<()> {
        if self.weights.len() != frames {
            return Err(Error::InvalidConfig(format!(
                "{} weights for {frames} frames",
                self.weights.len()
            )));
        }
        if self.solver == Solver::Exhaustive && frames > MAX_EXHAUSTIVE_FRAMES {
            return Err(Error::InvalidConfig(format!(
                "exhaustive search supports at most {MAX_EXHAUSTIVE_FRAMES} frames, got {frames}"
            )));
        }
        if self.max_passes < 1 {
            return Err(Error::InvalidConfig("max_passes must be at least 1".into()));
        }
        if let Some(k) = self.target_bin {
            if k == 0 || k >= frames {
                return Err(Error::UnsupportedBin {
                    k,
                    reason: "target bin must lie in 1..N".into(),
                });
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PassRecord {
    /// 0 for the white-noise seed, then 1, 2, ...
    pub pass: usize,
    pub flips: usize,
    pub mae_deg: f64,
    /// `sum_pixels sum_k w_k |G[k] - F[k]|^2` for the defocused set `F`.
    pub cost: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct OptimizationTrace {
    pub seed: PassRecord,
    pub passes: Vec<PassRecord>,
    /// Pass number of the returned snapshot.
    pub best_pass: usize,
    pub target_bin: usize,
}

/// Light blurred into `(x, y)` from its neighbors in every frame.
pub fn surround_vector(
    binary: &PatternSet,
    surround: &SurroundKernel,
    x: usize,
    y: usize,
) -> Result<Vec<f64>> {
    let (width, height) = binary.dims();
    if x >= width || y >= height {
        return Err(Error::OutOfRange {
            x,
            y,
            width,
            height,
        });
    }
    let offsets = surround.offsets();
    Ok(binary
        .frames
        .iter()
        .map(|f| {
            offsets
                .iter()
                .map(|&(dx, dy, t)| t * f.get_wrapped(x as isize - dx, y as isize - dy))
                .sum()
        })
        .collect())
}

/// `D[k] = DFT(contone)[k] - DFT(surround)[k]`.
pub fn spectral_difference(contone_vec: &[f64], surround_vec: &[f64]) -> Result<SpectralVector> {
    if contone_vec.len() != surround_vec.len() {
        return Err(Error::DimensionMismatch {
            expected: format!("{} samples", contone_vec.len()),
            actual: format!("{} samples", surround_vec.len()),
        });
    }
    let diff: Vec<f64> = contone_vec
        .iter()
        .zip(surround_vec)
        .map(|(a, b)| a - b)
        .collect();
    Ok(Dft::new(diff.len()).forward(&diff))
}

/// `sum_k w_k |d[k] - c DFT(bits)[k]|^2`, evaluated directly.
pub fn weighted_cost(d: &[Complex64], c: f64, weights: &WeightVector, bits: &[u8]) -> f64 {
    let samples: Vec<f64> = bits.iter().map(|&b| b as f64).collect();
    let spectrum = Dft::new(bits.len()).forward(&samples);
    d.iter()
        .zip(&spectrum)
        .zip(weights.as_slice())
        .map(|((dk, bk), w)| w * (dk - bk * c).norm_sqr())
        .sum()
}

fn pattern_bits(pattern: usize, n: usize) -> Vec<u8> {
    (0..n).map(|i| ((pattern >> i) & 1) as u8).collect()
}

/// Table-driven exhaustive minimizer for fixed `(N, c, w)`.
///
/// The cost of pattern `p` expands to
/// `sum w|d|^2 - 2c Re sum w conj(d) B_p + c^2 sum w |B_p|^2`;
/// the last term and the active bins of `B_p` are precomputed.
#[derive(Debug, Clone)]
pub struct ExhaustiveSolver {
    n: usize,
    active: Vec<usize>,
    active_weights: Vec<f64>,
    /// `c * B_p[k]` for active `k`, pattern-major.
    scaled_spectra: Vec<Complex64>,
    quadratic: Vec<f64>,
}

/// Costs within this margin count as ties and resolve to the smaller pattern.
const TIE_MARGIN: f64 = 1e-12;

impl ExhaustiveSolver {
    pub fn new(n: usize, c: f64, weights: &WeightVector) -> Result<Self> {
        if n > MAX_EXHAUSTIVE_FRAMES {
            return Err(Error::InvalidConfig(format!(
                "exhaustive search supports at most {MAX_EXHAUSTIVE_FRAMES} frames, got {n}"
            )));
        }
        if weights.len() != n {
            return Err(Error::InvalidConfig(format!(
                "{} weights for {n} frames",
                weights.len()
            )));
        }
        let dft = Dft::new(n);
        let active = weights.active();
        let active_weights: Vec<f64> = active.iter().map(|&k| weights.as_slice()[k]).collect();
        let count = 1usize << n;
        let mut scaled_spectra = Vec::with_capacity(count * active.len());
        let mut quadratic = Vec::with_capacity(count);
        for p in 0..count {
            let mut q = 0.0;
            for (&k, &w) in active.iter().zip(&active_weights) {
                let mut bin = Complex64::new(0.0, 0.0);
                for i in 0..n {
                    if (p >> i) & 1 == 1 {
                        bin += dft.twiddle(k * i);
                    }
                }
                let scaled = bin * c;
                q += w * scaled.norm_sqr();
                scaled_spectra.push(scaled);
            }
            quadratic.push(q);
        }
        Ok(Self {
            n,
            active,
            active_weights,
            scaled_spectra,
            quadratic,
        })
    }

    /// Minimizing pattern (bit `i` = frame `i`) and its cost.
    pub fn solve(&self, d: &[Complex64]) -> (usize, f64) {
        let m = self.active.len();
        let target: Vec<Complex64> = self
            .active
            .iter()
            .zip(&self.active_weights)
            .map(|(&k, &w)| d[k].conj() * w)
            .collect();
        let constant: f64 = self
            .active
            .iter()
            .zip(&self.active_weights)
            .map(|(&k, &w)| w * d[k].norm_sqr())
            .sum();
        let mut best = (0usize, f64::INFINITY);
        for (p, (spec, &q)) in self
            .scaled_spectra
            .chunks_exact(m.max(1))
            .zip(&self.quadratic)
            .enumerate()
        {
            let mut cross = 0.0;
            for (t, b) in target.iter().zip(spec) {
                cross += t.re * b.re - t.im * b.im;
            }
            let cost = q - 2.0 * cross;
            if cost < best.1 - TIE_MARGIN {
                best = (p, cost);
            }
        }
        (best.0, (best.1 + constant).max(0.0))
    }

    pub fn frames(&self) -> usize {
        self.n
    }
}

/// Exact minimizer of the weighted spectral cost over all `2^N` bit vectors.
/// Ties go to the numerically smallest pattern with bit 0 as the LSB.
pub fn best_binary_exhaustive(d: &[Complex64], c: f64, weights: &WeightVector) -> Result<Vec<u8>> {
    let solver = ExhaustiveSolver::new(d.len(), c, weights)?;
    Ok(pattern_bits(solver.solve(d).0, d.len()))
}

/// Samples within this distance of zero count as zero after the inverse DFT.
const THRESHOLD_ROUNDING: f64 = 1e-12;

/// Inverse-DFT `d` and keep the strictly positive samples.
pub fn best_binary_threshold(d: &[Complex64]) -> Vec<u8> {
    Dft::new(d.len())
        .inverse_real(d)
        .iter()
        .map(|&v| (v > THRESHOLD_ROUNDING) as u8)
        .collect()
}

/// Keep only bins `k` where `w_k > 0` or `w_{N-k} > 0`, so thresholding
/// targets the protected coefficients.
fn project_onto_weighted(d: &mut [Complex64], weights: &WeightVector) {
    let n = d.len();
    let w = weights.as_slice();
    for k in 0..n {
        if w[k] <= 0.0 && w[(n - k) % n] <= 0.0 {
            d[k] = Complex64::new(0.0, 0.0);
        }
    }
}

/// Pixel-interleaved working state: sample `p * N + n` is frame `n` of pixel `p`.
struct Workspace<'a> {
    width: usize,
    height: usize,
    n: usize,
    bits: Vec<u8>,
    surround_field: Vec<f64>,
    surround: &'a SurroundKernel,
    offsets: Vec<(isize, isize, f64)>,
}

impl<'a> Workspace<'a> {
    fn new(seed: &PatternSet, surround: &'a SurroundKernel) -> Self {
        let (width, height) = seed.dims();
        let n = seed.len();
        let mut bits = vec![0u8; width * height * n];
        for (f, frame) in seed.frames.iter().enumerate() {
            for (p, &v) in frame.data().iter().enumerate() {
                bits[p * n + f] = (v >= 0.5) as u8;
            }
        }
        let mut ws = Self {
            width,
            height,
            n,
            bits,
            surround_field: vec![0.0; width * height * n],
            surround,
            offsets: surround.offsets(),
        };
        ws.rebuild_surround();
        ws
    }

    fn frame(&self, f: usize) -> Grid {
        let data = (0..self.width * self.height)
            .map(|p| self.bits[p * self.n + f] as f64)
            .collect();
        Grid::from_vec(self.width, self.height, data).expect("workspace dims")
    }

    fn rebuild_surround(&mut self) {
        for f in 0..self.n {
            let blurred = convolve_toroidal(&self.frame(f), self.surround);
            for (p, &v) in blurred.data().iter().enumerate() {
                self.surround_field[p * self.n + f] = v;
            }
        }
    }

    fn flip(&mut self, x: usize, y: usize, f: usize) {
        let p = y * self.width + x;
        let amount = if self.bits[p * self.n + f] == 0 {
            1.0
        } else {
            -1.0
        };
        self.bits[p * self.n + f] ^= 1;
        let (w, h) = (self.width as isize, self.height as isize);
        for &(dx, dy, t) in &self.offsets {
            let qx = (x as isize + dx).rem_euclid(w) as usize;
            let qy = (y as isize + dy).rem_euclid(h) as usize;
            self.surround_field[(qy * self.width + qx) * self.n + f] += amount * t;
        }
    }

    fn into_frames(self) -> Vec<Grid> {
        (0..self.n).map(|f| self.frame(f)).collect()
    }
}

struct Evaluator<'a> {
    dft: &'a Dft,
    c: f64,
    weights: &'a WeightVector,
    target_bin: usize,
    contone_spectra: &'a [Complex64],
    truth: &'a Grid,
}

impl Evaluator<'_> {
    /// Phase MAE on the target bin and weighted cost of the defocused state.
    fn measure(&self, ws: &Workspace) -> (f64, f64) {
        let n = ws.n;
        let mut full = vec![0.0; n];
        let mut spec = vec![Complex64::new(0.0, 0.0); n];
        let mut abs_sum = 0.0;
        let mut cost = 0.0;
        let pixels = ws.width * ws.height;
        for p in 0..pixels {
            let surround = &ws.surround_field[p * n..(p + 1) * n];
            let bits = &ws.bits[p * n..(p + 1) * n];
            for ((v, s), &b) in full.iter_mut().zip(surround).zip(bits) {
                *v = s + self.c * b as f64;
            }
            self.dft.forward_into(&full, &mut spec);
            let bin = spec[self.target_bin];
            let phase = bin.im.atan2(bin.re).to_degrees().rem_euclid(360.0);
            abs_sum += wrapped_difference_deg(phase, self.truth.data()[p]);
            let ideal = &self.contone_spectra[p * n..(p + 1) * n];
            for (k, &w) in self.weights.as_slice().iter().enumerate() {
                if w > 0.0 {
                    cost += w * (ideal[k] - spec[k]).norm_sqr();
                }
            }
        }
        (abs_sum / pixels as f64, cost)
    }
}

/// Run phase-weighted DBS on a contone set.
///
/// Returns the pass snapshot with the lowest target-bin phase error together
/// with the full trace; the seed is recorded but never returned.
pub fn optimize(
    contone: &PatternSet,
    cfg: &OptimizeConfig,
) -> Result<(PatternSet, OptimizationTrace)> {
    require_contone(contone)?;
    let n = contone.len();
    cfg.validate(n)?;
    let target_bin = cfg
        .target_bin
        .unwrap_or_else(|| contone.spec.mode.reported_bin());
    let truth = contone.ideal_phase(target_bin)?.degrees;

    let (surround, c) = split_center(&cfg.kernel);
    let dft = Dft::new(n);
    let (width, height) = contone.dims();
    let pixels = width * height;

    let mut contone_spectra = vec![Complex64::new(0.0, 0.0); pixels * n];
    let mut samples = vec![0.0; n];
    for p in 0..pixels {
        for (f, frame) in contone.frames.iter().enumerate() {
            samples[f] = frame.data()[p];
        }
        dft.forward_into(&samples, &mut contone_spectra[p * n..(p + 1) * n]);
    }

    let exhaustive = match cfg.solver {
        Solver::Exhaustive => Some(ExhaustiveSolver::new(n, c, &cfg.weights)?),
        Solver::Threshold => None,
    };

    let seeded = white_noise_dither(contone, cfg.seed)?;
    let mut ws = Workspace::new(&seeded, &surround);
    let evaluator = Evaluator {
        dft: &dft,
        c,
        weights: &cfg.weights,
        target_bin,
        contone_spectra: &contone_spectra,
        truth: &truth,
    };
    let (mae, cost) = evaluator.measure(&ws);
    let seed_record = PassRecord {
        pass: 0,
        flips: 0,
        mae_deg: mae,
        cost,
    };

    let mut passes = Vec::new();
    let mut best: Option<(usize, f64, Vec<u8>)> = None;
    let mut surround_spec = vec![Complex64::new(0.0, 0.0); n];
    let mut d = vec![Complex64::new(0.0, 0.0); n];
    for pass in 1..=cfg.max_passes {
        if pass > 1 {
            ws.rebuild_surround();
        }
        let mut flips = 0;
        for y in 0..height {
            for x in 0..width {
                let p = y * width + x;
                dft.forward_into(&ws.surround_field[p * n..(p + 1) * n], &mut surround_spec);
                for k in 0..n {
                    d[k] = contone_spectra[p * n + k] - surround_spec[k];
                }
                let pattern = match &exhaustive {
                    Some(solver) => solver.solve(&d).0,
                    None => {
                        project_onto_weighted(&mut d, &cfg.weights);
                        best_binary_threshold(&d)
                            .iter()
                            .enumerate()
                            .fold(0usize, |acc, (i, &b)| acc | ((b as usize) << i))
                    }
                };
                for f in 0..n {
                    let bit = ((pattern >> f) & 1) as u8;
                    if ws.bits[p * n + f] != bit {
                        ws.flip(x, y, f);
                        flips += 1;
                    }
                }
            }
        }
        ws.rebuild_surround();
        let (mae, cost) = evaluator.measure(&ws);
        passes.push(PassRecord {
            pass,
            flips,
            mae_deg: mae,
            cost,
        });
        if best.as_ref().is_none_or(|(_, m, _)| mae < *m) {
            best = Some((pass, mae, ws.bits.clone()));
        }
        if flips == 0 || flips < cfg.min_flips {
            break;
        }
    }

    let (best_pass, _, bits) = best.expect("at least one pass");
    ws.bits = bits;
    let frames = ws.into_frames();
    let trace = OptimizationTrace {
        seed: seed_record,
        passes,
        best_pass,
        target_bin,
    };
    Ok((contone.with_frames(frames, Domain::Binary), trace))
}
