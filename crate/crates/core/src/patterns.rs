//! Contone phase-shift pattern synthesis and ground-truth phase.
//!
//! Row `r` of an `H`-row pattern encodes the projector coordinate
//! `y_p = r / H`, so the pattern is exactly periodic in `H` and tiles
//! seamlessly under toroidal wrap.

use std::f64::consts::TAU;

use crate::{Error, Grid, Result};

pub const DEFAULT_HIGH_FREQUENCY: f64 = 8.0;

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum PatternMode {
    /// Unit-frequency sinusoid carried on bin 1.
    Single,
    /// Unit frequency on bin 1 plus `high_frequency` periods on bin 2.
    Dual { high_frequency: f64 },
}

impl PatternMode {
    pub fn name(&self) -> &'static str {
        match self {
            PatternMode::Single => "single",
            PatternMode::Dual { .. } => "dual",
        }
    }

    /// The bin whose phase quality is reported for this mode.
    pub fn reported_bin(&self) -> usize {
        match self {
            PatternMode::Single => 1,
            PatternMode::Dual { .. } => 2,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PatternSpec {
    pub frames: usize,
    pub width: usize,
    pub height: usize,
    pub mode: PatternMode,
}

impl PatternSpec {
    pub fn single(frames: usize, width: usize, height: usize) -> Self {
        Self {
            frames,
            width,
            height,
            mode: PatternMode::Single,
        }
    }

    pub fn dual(frames: usize, width: usize, height: usize, high_frequency: f64) -> Self {
        Self {
            frames,
            width,
            height,
            mode: PatternMode::Dual { high_frequency },
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.frames < 3 {
            return Err(Error::InvalidSpec(format!(
                "need at least 3 frames, got {}",
                self.frames
            )));
        }
        if self.width < 1 || self.height < 2 {
            return Err(Error::InvalidSpec(format!(
                "pattern must be at least 1x2 pixels, got {}x{}",
                self.width, self.height
            )));
        }
        if let PatternMode::Dual { high_frequency } = self.mode {
            if self.frames < 5 {
                return Err(Error::InvalidSpec(format!(
                    "dual-frequency patterns need at least 5 frames, got {}",
                    self.frames
                )));
            }
            if !high_frequency.is_finite() {
                return Err(Error::InvalidSpec(
                    "high frequency must be finite".to_string(),
                ));
            }
        }
        Ok(())
    }

    /// Projector row coordinate in `[0, 1)`.
    #[inline]
    pub fn y_p(&self, row: usize) -> f64 {
        row as f64 / self.height as f64
    }

    /// Contone intensity of frame `n` at `row`.
    pub fn intensity(&self, n: usize, row: usize) -> f64 {
        let t = n as f64 / self.frames as f64;
        let y = self.y_p(row);
        match self.mode {
            PatternMode::Single => 0.5 + 0.5 * (TAU * (t - y)).cos(),
            PatternMode::Dual { high_frequency } => {
                0.5 + 0.25 * (TAU * (t - y)).cos()
                    + 0.25 * (TAU * (2.0 * t - high_frequency * y)).cos()
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Domain {
    Contone,
    Binary,
}

impl Domain {
    pub fn name(&self) -> &'static str {
        match self {
            Domain::Contone => "contone",
            Domain::Binary => "binary",
        }
    }
}

/// A stack of same-sized frames.
///
/// `tiling` records how many copies of the generating spec's tile the frames
/// span horizontally and vertically; ground truth is tiled the same way.
#[derive(Debug, Clone, PartialEq)]
pub struct PatternSet {
    pub spec: PatternSpec,
    pub tiling: (usize, usize),
    pub frames: Vec<Grid>,
    pub domain: Domain,
}

impl PatternSet {
    pub fn new(
        spec: PatternSpec,
        tiling: (usize, usize),
        frames: Vec<Grid>,
        domain: Domain,
    ) -> Result<Self> {
        spec.validate()?;
        if frames.len() != spec.frames {
            return Err(Error::DimensionMismatch {
                expected: format!("{} frames", spec.frames),
                actual: format!("{} frames", frames.len()),
            });
        }
        let dims = (spec.width * tiling.0, spec.height * tiling.1);
        for frame in &frames {
            if frame.dims() != dims {
                return Err(Error::DimensionMismatch {
                    expected: format!("{}x{}", dims.0, dims.1),
                    actual: format!("{}x{}", frame.width(), frame.height()),
                });
            }
        }
        let in_domain = |v: f64| match domain {
            Domain::Contone => (0.0..=1.0).contains(&v),
            Domain::Binary => v == 0.0 || v == 1.0,
        };
        if !frames
            .iter()
            .all(|f| f.data().iter().all(|&v| in_domain(v)))
        {
            return Err(Error::InvalidSpec(format!(
                "sample outside the {} range",
                domain.name()
            )));
        }
        Ok(Self {
            spec,
            tiling,
            frames,
            domain,
        })
    }

    /// Replace the frames, keeping spec and tiling. Used internally where
    /// the frames are known to be consistent.
    pub(crate) fn with_frames(&self, frames: Vec<Grid>, domain: Domain) -> Self {
        Self {
            spec: self.spec,
            tiling: self.tiling,
            frames,
            domain,
        }
    }

    #[inline]
    pub fn len(&self) -> usize {
        self.frames.len()
    }

    #[inline]
    pub fn is_empty(&self) -> bool {
        self.frames.is_empty()
    }

    #[inline]
    pub fn width(&self) -> usize {
        self.frames[0].width()
    }

    #[inline]
    pub fn height(&self) -> usize {
        self.frames[0].height()
    }

    pub fn dims(&self) -> (usize, usize) {
        (self.width(), self.height())
    }

    /// The temporal vector of pixel `(x, y)`.
    pub fn pixel_vector(&self, x: usize, y: usize) -> Vec<f64> {
        self.frames.iter().map(|f| f.get(x, y)).collect()
    }

    pub fn tile(&self, nx: usize, ny: usize) -> Self {
        Self {
            spec: self.spec,
            tiling: (self.tiling.0 * nx, self.tiling.1 * ny),
            frames: self.frames.iter().map(|f| f.tile(nx, ny)).collect(),
            domain: self.domain,
        }
    }

    /// Ground-truth phase for bin `k`, tiled to match the frames.
    pub fn ideal_phase(&self, k: usize) -> Result<PhaseMap> {
        Ok(ideal_phase(&self.spec, k)?.tile(self.tiling.0, self.tiling.1))
    }

    pub(crate) fn check_same_shape(&self, other: &PatternSet) -> Result<()> {
        if self.len() != other.len() || self.dims() != other.dims() {
            return Err(Error::DimensionMismatch {
                expected: format!(
                    "{} frames of {}x{}",
                    self.len(),
                    self.width(),
                    self.height()
                ),
                actual: format!(
                    "{} frames of {}x{}",
                    other.len(),
                    other.width(),
                    other.height()
                ),
            });
        }
        Ok(())
    }
}

/// Wrapped phase in degrees, `[0, 360)`, with a validity mask for pixels
/// whose phase is undefined.
#[derive(Debug, Clone, PartialEq)]
pub struct PhaseMap {
    pub degrees: Grid,
    pub valid: Vec<bool>,
}

impl PhaseMap {
    pub fn from_grid(degrees: Grid) -> Self {
        let valid = vec![true; degrees.data().len()];
        Self { degrees, valid }
    }

    pub fn width(&self) -> usize {
        self.degrees.width()
    }

    pub fn height(&self) -> usize {
        self.degrees.height()
    }

    pub fn get(&self, x: usize, y: usize) -> f64 {
        self.degrees.get(x, y)
    }

    pub fn tile(&self, nx: usize, ny: usize) -> Self {
        let (w, h) = self.degrees.dims();
        let degrees = self.degrees.tile(nx, ny);
        let valid = (0..h * ny)
            .flat_map(|y| (0..w * nx).map(move |x| (x % w, y % h)))
            .map(|(x, y)| self.valid[y * w + x])
            .collect();
        Self { degrees, valid }
    }
}

fn check_mode(spec: &PatternSpec, dual: bool) -> Result<()> {
    spec.validate()?;
    match (spec.mode, dual) {
        (PatternMode::Single, false) | (PatternMode::Dual { .. }, true) => Ok(()),
        _ => Err(Error::InvalidSpec(format!(
            "spec mode is {}, expected {}",
            spec.mode.name(),
            if dual { "dual" } else { "single" }
        ))),
    }
}

fn synthesize(spec: &PatternSpec) -> PatternSet {
    let frames = (0..spec.frames)
        .map(|n| {
            let column: Vec<f64> = (0..spec.height).map(|r| spec.intensity(n, r)).collect();
            Grid::from_fn(spec.width, spec.height, |_, y| column[y])
        })
        .collect();
    PatternSet {
        spec: *spec,
        tiling: (1, 1),
        frames,
        domain: Domain::Contone,
    }
}

/// `I[n] = 1/2 + 1/2 cos(2 pi (n/N - y_p))`.
pub fn make_single_freq(spec: &PatternSpec) -> Result<PatternSet> {
    check_mode(spec, false)?;
    Ok(synthesize(spec))
}

/// `I[n] = 1/2 + 1/4 cos(2 pi (n/N - y_p)) + 1/4 cos(2 pi (2n/N - f y_p))`.
pub fn make_dual_freq(spec: &PatternSpec) -> Result<PatternSet> {
    check_mode(spec, true)?;
    Ok(synthesize(spec))
}

pub fn make_patterns(spec: &PatternSpec) -> Result<PatternSet> {
    match spec.mode {
        PatternMode::Single => make_single_freq(spec),
        PatternMode::Dual { .. } => make_dual_freq(spec),
    }
}

pub fn ideal_phase(spec: &PatternSpec, k: usize) -> Result<PhaseMap> {
    spec.validate()?;
    let periods = match (k, spec.mode) {
        (1, _) => 1.0,
        (2, PatternMode::Dual { high_frequency }) => high_frequency,
        _ => {
            return Err(Error::UnsupportedBin {
                k,
                reason: format!("no phase is encoded there in {} mode", spec.mode.name()),
            })
        }
    };
    let column: Vec<f64> = (0..spec.height)
        .map(|r| (360.0 * periods * spec.y_p(r)).rem_euclid(360.0))
        .collect();
    Ok(PhaseMap::from_grid(Grid::from_fn(
        spec.width,
        spec.height,
        |_, y| column[y],
    )))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dft::Dft;

    fn close(a: f64, b: f64) -> bool {
        (a - b).abs() < 1e-12
    }

    #[test]
    fn single_freq_samples() {
        // rows 0 and 2 of a 4-row pattern are y_p = 0 and 0.5
        let set = make_single_freq(&PatternSpec::single(8, 3, 4)).unwrap();
        assert!(close(set.frames[0].get(0, 0), 1.0));
        assert!(close(set.frames[0].get(1, 2), 0.0));
        assert!(close(set.frames[2].get(2, 0), 0.5));
        assert_eq!(set.domain, Domain::Contone);
    }

    #[test]
    fn dual_freq_samples() {
        let set = make_dual_freq(&PatternSpec::dual(8, 2, 4, 8.0)).unwrap();
        assert!(close(set.frames[0].get(0, 0), 1.0));
        assert!(close(set.frames[0].get(0, 2), 0.5));
        for frame in &set.frames {
            assert!(frame.data().iter().all(|v| (0.0..=1.0).contains(v)));
        }
    }

    #[test]
    fn rejects_invalid_specs() {
        assert!(make_single_freq(&PatternSpec::single(2, 8, 8)).is_err());
        assert!(make_single_freq(&PatternSpec::single(8, 0, 8)).is_err());
        assert!(make_single_freq(&PatternSpec::single(8, 4, 1)).is_err());
        assert!(make_dual_freq(&PatternSpec::dual(4, 8, 8, 8.0)).is_err());
        assert!(make_single_freq(&PatternSpec::dual(8, 8, 8, 8.0)).is_err());
        assert!(make_dual_freq(&PatternSpec::single(8, 8, 8)).is_err());
    }

    #[test]
    fn ideal_phase_values() {
        let single = PatternSpec::single(8, 1, 4);
        let p = ideal_phase(&single, 1).unwrap();
        assert!(close(p.get(0, 0), 0.0));
        assert!(close(p.get(0, 1), 90.0));
        let dual = PatternSpec::dual(8, 1, 4, 8.0);
        assert!(close(ideal_phase(&dual, 2).unwrap().get(0, 1), 0.0));
        assert!(ideal_phase(&single, 2).is_err());
        assert!(ideal_phase(&dual, 3).is_err());
    }

    #[test]
    fn rows_are_constant() {
        let set = make_dual_freq(&PatternSpec::dual(6, 7, 12, 3.0)).unwrap();
        for frame in &set.frames {
            for y in 0..frame.height() {
                let row = frame.row(y);
                assert!(row.iter().all(|&v| v == row[0]));
            }
        }
    }

    #[test]
    fn vertically_periodic() {
        // extending the row index past the last row lands back on row 0
        let spec = PatternSpec::dual(8, 1, 48, 8.0);
        for n in 0..8 {
            let wrapped = 0.5
                + 0.25 * (TAU * (n as f64 / 8.0 - 1.0)).cos()
                + 0.25 * (TAU * (2.0 * n as f64 / 8.0 - 8.0)).cos();
            assert!((spec.intensity(n, 0) - wrapped).abs() < 1e-12);
        }
    }

    #[test]
    fn temporal_spectrum_support() {
        for (spec, support) in [
            (PatternSpec::single(8, 1, 40), vec![0, 1, 7]),
            (PatternSpec::dual(8, 1, 40, 8.0), vec![0, 1, 2, 6, 7]),
            (PatternSpec::dual(5, 1, 40, 3.0), vec![0, 1, 2, 3, 4]),
        ] {
            let set = make_patterns(&spec).unwrap();
            let dft = Dft::new(spec.frames);
            for y in 0..spec.height {
                let bins = dft.forward(&set.pixel_vector(0, y));
                for (k, b) in bins.iter().enumerate() {
                    if !support.contains(&k) {
                        assert!(b.norm() < 1e-9, "bin {k} = {b} at row {y}");
                    }
                }
            }
        }
    }

    #[test]
    fn tiled_ideal_phase_follows_tiles() {
        let set = make_single_freq(&PatternSpec::single(8, 2, 4))
            .unwrap()
            .tile(3, 2);
        let p = set.ideal_phase(1).unwrap();
        assert_eq!((p.width(), p.height()), (6, 8));
        assert!(close(p.get(5, 5), 90.0));
    }
}
