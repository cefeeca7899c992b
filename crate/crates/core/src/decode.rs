//! Per-pixel temporal DFT decoding and phase-error statistics.

use num_complex::Complex64;

use crate::dft::Dft;
use crate::optics::{defocus_set, Kernel};
use crate::patterns::{PatternSet, PhaseMap};
use crate::{Error, Grid, Result};

/// Bins with magnitude at or below this have undefined phase.
pub const DEFAULT_MAGNITUDE_FLOOR: f64 = 1e-9;

/// Temporal spectra of every pixel, pixel-interleaved.
#[derive(Debug, Clone, PartialEq)]
pub struct SpectralField {
    width: usize,
    height: usize,
    bins: usize,
    data: Vec<Complex64>,
}

impl SpectralField {
    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn bins(&self) -> usize {
        self.bins
    }

    pub fn pixel(&self, x: usize, y: usize) -> &[Complex64] {
        let p = y * self.width + x;
        &self.data[p * self.bins..(p + 1) * self.bins]
    }

    fn pixels(&self) -> impl Iterator<Item = &[Complex64]> {
        self.data.chunks_exact(self.bins)
    }

    fn check_bin(&self, k: usize) -> Result<()> {
        if k == 0 || k >= self.bins {
            return Err(Error::UnsupportedBin {
                k,
                reason: format!("expected 1..{}", self.bins),
            });
        }
        Ok(())
    }
}

pub fn dft_pixelwise(set: &PatternSet) -> Result<SpectralField> {
    let n = set.len();
    if n < 3 {
        return Err(Error::InvalidSpec(format!(
            "need at least 3 frames, got {n}"
        )));
    }
    let (width, height) = set.dims();
    let dft = Dft::new(n);
    let mut data = vec![Complex64::new(0.0, 0.0); width * height * n];
    let mut samples = vec![0.0; n];
    for p in 0..width * height {
        for (f, frame) in set.frames.iter().enumerate() {
            samples[f] = frame.data()[p];
        }
        dft.forward_into(&samples, &mut data[p * n..(p + 1) * n]);
    }
    Ok(SpectralField {
        width,
        height,
        bins: n,
        data,
    })
}

/// Inverse of [`dft_pixelwise`], one grid per frame.
pub fn inverse_pixelwise(field: &SpectralField) -> Vec<Grid> {
    let n = field.bins;
    let dft = Dft::new(n);
    let mut frames = vec![Grid::zeros(field.width, field.height); n];
    for (p, bins) in field.pixels().enumerate() {
        for (f, v) in dft.inverse_real(bins).into_iter().enumerate() {
            frames[f].data_mut()[p] = v;
        }
    }
    frames
}

/// Phase of bin `k` in degrees, `[0, 360)`. Pixels whose bin magnitude is at
/// or below `floor` get 0 and are marked invalid.
pub fn phase_map_with_floor(field: &SpectralField, k: usize, floor: f64) -> Result<PhaseMap> {
    field.check_bin(k)?;
    let mut valid = Vec::with_capacity(field.width * field.height);
    let degrees: Vec<f64> = field
        .pixels()
        .map(|bins| {
            let b = bins[k];
            if b.norm() <= floor {
                valid.push(false);
                0.0
            } else {
                valid.push(true);
                b.im.atan2(b.re).to_degrees().rem_euclid(360.0)
            }
        })
        .collect();
    Ok(PhaseMap {
        degrees: Grid::from_vec(field.width, field.height, degrees)?,
        valid,
    })
}

pub fn phase_map(field: &SpectralField, k: usize) -> Result<PhaseMap> {
    phase_map_with_floor(field, k, DEFAULT_MAGNITUDE_FLOOR)
}

/// `|X[k]|` per pixel; with `scaled` the result is multiplied by `2/N` so a
/// cosine of amplitude `B` reads as `B`.
pub fn magnitude_map(field: &SpectralField, k: usize, scaled: bool) -> Result<Grid> {
    field.check_bin(k)?;
    let scale = if scaled { 2.0 / field.bins as f64 } else { 1.0 };
    Grid::from_vec(
        field.width,
        field.height,
        field.pixels().map(|b| b[k].norm() * scale).collect(),
    )
}

/// `|((m - t + 180) mod 360) - 180|`, in `[0, 180]`.
#[inline]
pub fn wrapped_difference_deg(measured: f64, truth: f64) -> f64 {
    ((measured - truth + 180.0).rem_euclid(360.0) - 180.0).abs()
}

#[derive(Debug, Clone, PartialEq)]
pub struct ErrorReport {
    pub error_map: Grid,
    pub mae_deg: f64,
    pub rms_rad: f64,
    /// Pixels that entered the statistics.
    pub valid_pixels: usize,
    /// Mean residual power per DFT bin, when computed.
    pub power: Option<Vec<f64>>,
}

pub fn wrapped_abs_error(measured: &PhaseMap, truth: &PhaseMap) -> Result<ErrorReport> {
    let dims = measured.degrees.dims();
    if dims != truth.degrees.dims() {
        return Err(Error::DimensionMismatch {
            expected: format!("{}x{}", truth.width(), truth.height()),
            actual: format!("{}x{}", dims.0, dims.1),
        });
    }
    let mut sum = 0.0;
    let mut sum_sq = 0.0;
    let mut count = 0;
    let errors: Vec<f64> = measured
        .degrees
        .data()
        .iter()
        .zip(truth.degrees.data())
        .enumerate()
        .map(|(i, (&m, &t))| {
            let e = wrapped_difference_deg(m, t);
            if measured.valid[i] && truth.valid[i] {
                sum += e;
                sum_sq += e * e;
                count += 1;
            }
            e
        })
        .collect();
    let (mae_deg, rms_rad) = if count == 0 {
        (0.0, 0.0)
    } else {
        let n = count as f64;
        (sum / n, (sum_sq / n).sqrt().to_radians())
    };
    Ok(ErrorReport {
        error_map: Grid::from_vec(dims.0, dims.1, errors)?,
        mae_deg,
        rms_rad,
        valid_pixels: count,
        power: None,
    })
}

/// Mean of `|DFT(contone)[k] - DFT(h * binary)[k]|^2 / N^2` over pixels, per
/// bin, in squared intensity units.
pub fn residual_power(
    contone: &PatternSet,
    binary: &PatternSet,
    kernel: &Kernel,
) -> Result<Vec<f64>> {
    let n = contone.len() as f64;
    let mut power = residual_power_raw(contone, binary, kernel)?;
    power.iter_mut().for_each(|v| *v /= n * n);
    Ok(power)
}

/// Like [`residual_power`] but on the unnormalized DFT scale, i.e. the mean
/// of `|D[k]|^2` itself.
pub fn residual_power_raw(
    contone: &PatternSet,
    binary: &PatternSet,
    kernel: &Kernel,
) -> Result<Vec<f64>> {
    contone.check_same_shape(binary)?;
    let ideal = dft_pixelwise(contone)?;
    let blurred = dft_pixelwise(&defocus_set(binary, kernel))?;
    let n = ideal.bins;
    let mut power = vec![0.0; n];
    for (a, b) in ideal.pixels().zip(blurred.pixels()) {
        for k in 0..n {
            power[k] += (a[k] - b[k]).norm_sqr();
        }
    }
    let pixels = (ideal.width * ideal.height) as f64;
    power.iter_mut().for_each(|v| *v /= pixels);
    Ok(power)
}

/// Wrapped forward difference down the rows, in degrees per pixel, with the
/// last row differenced against the first.
pub fn gradient_map(phase: &PhaseMap) -> Grid {
    let (w, h) = phase.degrees.dims();
    Grid::from_fn(w, h, |x, y| {
        let next = phase.get(x, (y + 1) % h);
        (next - phase.get(x, y) + 180.0).rem_euclid(360.0) - 180.0
    })
}

/// Map gradient values linearly onto `[0, 1]`: `center` goes to mid-gray
/// and `center +- span` to the extremes.
pub fn gradient_to_unit(gradient: &Grid, center: f64, span: f64) -> Grid {
    let span = if span > 0.0 { span } else { 1.0 };
    gradient.map(|g| (0.5 + 0.5 * (g - center) / span).clamp(0.0, 1.0))
}

/// Defocus (when `kernel` is given), decode bin `k` and compare against the
/// set's ground truth.
pub fn evaluate(set: &PatternSet, kernel: Option<&Kernel>, k: usize) -> Result<ErrorReport> {
    let observed = match kernel {
        Some(kernel) => defocus_set(set, kernel),
        None => set.clone(),
    };
    let field = dft_pixelwise(&observed)?;
    let measured = phase_map(&field, k)?;
    wrapped_abs_error(&measured, &set.ideal_phase(k)?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::optics::gaussian_kernel;
    use crate::patterns::{make_dual_freq, make_single_freq, Domain, PatternSpec};

    #[test]
    fn constant_set_spectrum() {
        let spec = PatternSpec::single(5, 3, 2);
        let set = PatternSet::new(
            spec,
            (1, 1),
            vec![Grid::filled(3, 2, 0.25); 5],
            Domain::Contone,
        )
        .unwrap();
        let field = dft_pixelwise(&set).unwrap();
        for b in field.pixels() {
            assert!((b[0].re - 1.25).abs() < 1e-12);
            assert!(b[1..].iter().all(|v| v.norm() < 1e-12));
        }
        let zeros = set.with_frames(vec![Grid::zeros(3, 2); 5], Domain::Contone);
        let mag = magnitude_map(&dft_pixelwise(&zeros).unwrap(), 1, true).unwrap();
        assert!(mag.data().iter().all(|&v| v == 0.0));
    }

    #[test]
    fn single_freq_magnitudes_and_symmetry() {
        let set = make_single_freq(&PatternSpec::single(8, 2, 24)).unwrap();
        let field = dft_pixelwise(&set).unwrap();
        for b in field.pixels() {
            assert!((b[1].norm() - 2.0).abs() < 1e-12);
            for k in 1..8 {
                assert!((b[8 - k] - b[k].conj()).norm() < 1e-9);
            }
        }
        let mag = magnitude_map(&field, 1, true).unwrap();
        assert!(mag.data().iter().all(|v| (v - 0.5).abs() < 1e-12));
    }

    #[test]
    fn dual_freq_bin_two() {
        let spec = PatternSpec::dual(8, 2, 96, 8.0);
        let set = make_dual_freq(&spec).unwrap();
        let field = dft_pixelwise(&set).unwrap();
        let mag = magnitude_map(&field, 2, true).unwrap();
        assert!(mag.data().iter().all(|v| (v - 0.25).abs() < 1e-12));
        let report =
            wrapped_abs_error(&phase_map(&field, 2).unwrap(), &set.ideal_phase(2).unwrap())
                .unwrap();
        assert!(report.mae_deg < 1e-6);
    }

    #[test]
    fn phase_of_imaginary_bin() {
        let field = SpectralField {
            width: 1,
            height: 1,
            bins: 4,
            data: vec![
                Complex64::new(0.0, 0.0),
                Complex64::new(0.0, 3.0),
                Complex64::new(0.0, 0.0),
                Complex64::new(0.0, 0.0),
            ],
        };
        let p = phase_map(&field, 1).unwrap();
        assert!((p.get(0, 0) - 90.0).abs() < 1e-12);
        assert!(p.valid[0]);
        let p = phase_map(&field, 2).unwrap();
        assert_eq!(p.get(0, 0), 0.0);
        assert!(!p.valid[0]);
        assert!(phase_map(&field, 0).is_err());
        assert!(phase_map(&field, 4).is_err());
    }

    #[test]
    fn wrapped_error_examples() {
        assert!((wrapped_difference_deg(359.0, 1.0) - 2.0).abs() < 1e-12);
        assert_eq!(wrapped_difference_deg(90.0, 90.0), 0.0);
        assert_eq!(wrapped_difference_deg(0.0, 180.0), 180.0);
        assert_eq!(wrapped_difference_deg(180.0, 0.0), 180.0);
    }

    #[test]
    fn error_report_statistics() {
        let m = PhaseMap::from_grid(Grid::from_vec(2, 1, vec![359.0, 93.0]).unwrap());
        let t = PhaseMap::from_grid(Grid::from_vec(2, 1, vec![1.0, 90.0]).unwrap());
        let r = wrapped_abs_error(&m, &t).unwrap();
        assert!((r.mae_deg - 2.5).abs() < 1e-12);
        assert!((r.rms_rad - (6.5f64).sqrt().to_radians()).abs() < 1e-12);
        let short = PhaseMap::from_grid(Grid::zeros(1, 1));
        assert!(wrapped_abs_error(&m, &short).is_err());
    }

    #[test]
    fn invalid_pixels_are_excluded() {
        let mut m = PhaseMap::from_grid(Grid::from_vec(2, 1, vec![0.0, 10.0]).unwrap());
        m.valid[0] = false;
        let t = PhaseMap::from_grid(Grid::from_vec(2, 1, vec![170.0, 10.0]).unwrap());
        let r = wrapped_abs_error(&m, &t).unwrap();
        assert_eq!(r.valid_pixels, 1);
        assert_eq!(r.mae_deg, 0.0);
    }

    #[test]
    fn gradient_of_ramp_and_constant() {
        let set = make_single_freq(&PatternSpec::single(8, 3, 480)).unwrap();
        let g = gradient_map(&set.ideal_phase(1).unwrap());
        assert!(g.data().iter().all(|v| (v - 0.75).abs() < 1e-9));
        let flat = PhaseMap::from_grid(Grid::filled(4, 4, 33.0));
        let g = gradient_map(&flat);
        assert!(g.data().iter().all(|&v| v == 0.0));
        let unit = gradient_to_unit(&g, 0.0, 1.0);
        assert!(unit.data().iter().all(|&v| v == 0.5));
    }

    #[test]
    fn contone_residual_power_is_zero() {
        let set = make_single_freq(&PatternSpec::single(8, 4, 16)).unwrap();
        let power = residual_power(&set, &set, &gaussian_kernel(1, 1.0).unwrap()).unwrap();
        assert!(power.iter().all(|&p| p < 1e-30));
    }
}
