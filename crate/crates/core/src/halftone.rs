//! Reference contone-to-binary converters: white-noise dither, Bayer
//! ordered dither and classic spatial Direct Binary Search (DBS).

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::optics::{Kernel, Taps};
use crate::patterns::{Domain, PatternSet};
use crate::{Error, Grid, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default)]
pub struct RngSeed(pub u64);

impl RngSeed {
    pub fn rng(self) -> ChaCha8Rng {
        ChaCha8Rng::seed_from_u64(self.0)
    }
}

pub(crate) fn require_contone(set: &PatternSet) -> Result<()> {
    if set.domain != Domain::Contone {
        return Err(Error::WrongDomain {
            expected: "contone",
        });
    }
    Ok(())
}

/// Each sample becomes 1 with probability equal to its intensity. Samples are
/// drawn frame by frame in raster order from one seeded stream.
pub fn white_noise_dither(set: &PatternSet, seed: RngSeed) -> Result<PatternSet> {
    require_contone(set)?;
    let mut rng = seed.rng();
    let frames = set
        .frames
        .iter()
        .map(|f| f.map(|v| if rng.gen::<f64>() < v { 1.0 } else { 0.0 }))
        .collect();
    Ok(set.with_frames(frames, Domain::Binary))
}

/// Recursive Bayer index matrix of side `order`, row-major.
pub fn bayer_matrix(order: usize) -> Result<Vec<usize>> {
    if !matches!(order, 2 | 4 | 8 | 16) {
        return Err(Error::InvalidConfig(format!(
            "Bayer order must be one of 2, 4, 8, 16; got {order}"
        )));
    }
    let mut m = vec![0usize, 2, 3, 1];
    let mut side = 2;
    while side < order {
        let next = side * 2;
        let mut grown = vec![0; next * next];
        for y in 0..next {
            for x in 0..next {
                let base = 4 * m[(y % side) * side + x % side];
                let quadrant = [0, 2, 3, 1][(y / side) * 2 + x / side];
                grown[y * next + x] = base + quadrant;
            }
        }
        m = grown;
        side = next;
    }
    Ok(m)
}

/// Ordered dither: a sample is 1 iff it exceeds `(B(x, y) + 0.5) / M^2`.
pub fn bayer_dither(set: &PatternSet, order: usize) -> Result<PatternSet> {
    require_contone(set)?;
    let matrix = bayer_matrix(order)?;
    let levels = (order * order) as f64;
    let frames = set
        .frames
        .iter()
        .map(|f| {
            Grid::from_fn(f.width(), f.height(), |x, y| {
                let threshold = (matrix[(y % order) * order + x % order] as f64 + 0.5) / levels;
                if f.get(x, y) > threshold {
                    1.0
                } else {
                    0.0
                }
            })
        })
        .collect();
    Ok(set.with_frames(frames, Domain::Binary))
}

#[derive(Debug, Clone, PartialEq)]
pub struct DbsConfig {
    pub kernel: Kernel,
    pub max_passes: usize,
}

impl DbsConfig {
    pub const DEFAULT_MAX_PASSES: usize = 50;

    pub fn new(kernel: Kernel) -> Self {
        Self {
            kernel,
            max_passes: Self::DEFAULT_MAX_PASSES,
        }
    }

    fn validate(&self) -> Result<()> {
        if self.max_passes < 1 {
            return Err(Error::InvalidConfig("max_passes must be at least 1".into()));
        }
        Ok(())
    }
}

/// Neighbor offsets in swap-priority order.
pub const NEIGHBORS: [(isize, isize); 8] = [
    (-1, -1),
    (0, -1),
    (1, -1),
    (-1, 0),
    (1, 0),
    (-1, 1),
    (0, 1),
    (1, 1),
];

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum DbsMove {
    Toggle { x: usize, y: usize },
    Swap { x: usize, y: usize, neighbor: usize },
}

/// One accepted move, reported to observers.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DbsEvent {
    pub frame: usize,
    pub pass: usize,
    pub mv: DbsMove,
    /// Running objective after the move.
    pub error: f64,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct FrameDbsReport {
    pub initial_error: f64,
    pub accepted_per_pass: Vec<usize>,
    pub final_error: f64,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct DbsReport {
    pub frames: Vec<FrameDbsReport>,
}

/// Moves must lower the error by more than this to be accepted.
const MIN_IMPROVEMENT: f64 = 1e-12;

/// Toroidal kernel autocorrelation `c(d) = sum_x h(x) h(x + d)`, folded onto
/// a `w x h` torus so aliased offsets are summed.
struct Autocorrelation {
    width: usize,
    height: usize,
    dense: Vec<f64>,
    compact: Vec<(isize, isize, f64)>,
}

impl Autocorrelation {
    fn new(kernel: &Kernel, width: usize, height: usize) -> Self {
        let taps = kernel.offsets();
        let span = 2 * kernel.radius() as isize;
        let side = (2 * span + 1) as usize;
        let mut table = vec![0.0; side * side];
        for &(ax, ay, ta) in &taps {
            for &(bx, by, tb) in &taps {
                let (dx, dy) = (bx - ax, by - ay);
                table[((dy + span) as usize) * side + (dx + span) as usize] += ta * tb;
            }
        }
        let mut compact = Vec::new();
        let mut dense = vec![0.0; width * height];
        for (idx, &v) in table.iter().enumerate() {
            if v == 0.0 {
                continue;
            }
            let dx = (idx % side) as isize - span;
            let dy = (idx / side) as isize - span;
            compact.push((dx, dy, v));
            let wx = dx.rem_euclid(width as isize) as usize;
            let wy = dy.rem_euclid(height as isize) as usize;
            dense[wy * width + wx] += v;
        }
        Self {
            width,
            height,
            dense,
            compact,
        }
    }

    #[inline]
    fn at(&self, dx: isize, dy: isize) -> f64 {
        let wx = dx.rem_euclid(self.width as isize) as usize;
        let wy = dy.rem_euclid(self.height as isize) as usize;
        self.dense[wy * self.width + wx]
    }
}

/// Incremental DBS state for one frame.
struct FrameState<'a> {
    width: usize,
    height: usize,
    bits: Vec<u8>,
    /// `binary - contone`
    residual: Vec<f64>,
    /// autocorrelation applied to the residual
    cross: Vec<f64>,
    error: f64,
    acf: &'a Autocorrelation,
}

impl<'a> FrameState<'a> {
    fn new(bits: Vec<u8>, target: &Grid, acf: &'a Autocorrelation) -> Self {
        let (width, height) = target.dims();
        let residual: Vec<f64> = bits
            .iter()
            .zip(target.data())
            .map(|(&b, &g)| b as f64 - g)
            .collect();
        let mut state = Self {
            width,
            height,
            bits,
            residual,
            cross: vec![0.0; width * height],
            error: 0.0,
            acf,
        };
        state.rebuild();
        state
    }

    fn rebuild(&mut self) {
        self.cross.iter_mut().for_each(|v| *v = 0.0);
        for y in 0..self.height {
            for x in 0..self.width {
                let e = self.residual[y * self.width + x];
                if e != 0.0 {
                    self.scatter(x, y, e);
                }
            }
        }
        self.error = self
            .residual
            .iter()
            .zip(&self.cross)
            .map(|(e, c)| e * c)
            .sum();
    }

    #[inline]
    fn index(&self, x: isize, y: isize) -> usize {
        let wx = x.rem_euclid(self.width as isize) as usize;
        let wy = y.rem_euclid(self.height as isize) as usize;
        wy * self.width + wx
    }

    fn scatter(&mut self, x: usize, y: usize, amount: f64) {
        for &(dx, dy, v) in &self.acf.compact {
            let i = self.index(x as isize + dx, y as isize + dy);
            self.cross[i] += amount * v;
        }
    }

    /// Best move at `(x, y)` and its error change, if any lowers the error.
    fn best_move(&self, x: usize, y: usize) -> Option<(DbsMove, f64)> {
        let p = y * self.width + x;
        let c0 = self.acf.at(0, 0);
        let ap = 1.0 - 2.0 * self.bits[p] as f64;
        let mut best = (DbsMove::Toggle { x, y }, 2.0 * ap * self.cross[p] + c0);
        for (neighbor, &(dx, dy)) in NEIGHBORS.iter().enumerate() {
            let q = self.index(x as isize + dx, y as isize + dy);
            if q == p || self.bits[q] == self.bits[p] {
                continue;
            }
            let aq = -ap;
            let delta = 2.0 * ap * self.cross[p]
                + 2.0 * aq * self.cross[q]
                + 2.0 * c0
                + 2.0 * ap * aq * self.acf.at(dx, dy);
            if delta < best.1 {
                best = (DbsMove::Swap { x, y, neighbor }, delta);
            }
        }
        (best.1 < -MIN_IMPROVEMENT).then_some(best)
    }

    fn flip(&mut self, x: usize, y: usize) {
        let p = y * self.width + x;
        let a = 1.0 - 2.0 * self.bits[p] as f64;
        self.bits[p] ^= 1;
        self.residual[p] += a;
        self.scatter(x, y, a);
    }

    fn apply(&mut self, mv: DbsMove, delta: f64) {
        match mv {
            DbsMove::Toggle { x, y } => self.flip(x, y),
            DbsMove::Swap { x, y, neighbor } => {
                let (dx, dy) = NEIGHBORS[neighbor];
                let q = self.index(x as isize + dx, y as isize + dy);
                self.flip(x, y);
                self.flip(q % self.width, q / self.width);
            }
        }
        self.error += delta;
    }
}

fn to_bits(frame: &Grid) -> Vec<u8> {
    frame.data().iter().map(|&v| (v >= 0.5) as u8).collect()
}

fn from_bits(width: usize, height: usize, bits: &[u8]) -> Grid {
    Grid::from_vec(width, height, bits.iter().map(|&b| b as f64).collect())
        .expect("bit buffer matches grid")
}

/// Spatial DBS with every accepted move reported to `observer`.
///
/// Each frame is halftoned on its own, starting from the white-noise seed,
/// minimizing `sum_p [h * (binary - contone)](p)^2` by toggles and swaps
/// with the eight toroidal neighbors.
pub fn spatial_dbs_observed(
    set: &PatternSet,
    cfg: &DbsConfig,
    seed: RngSeed,
    mut observer: impl FnMut(&DbsEvent),
) -> Result<(PatternSet, DbsReport)> {
    require_contone(set)?;
    cfg.validate()?;
    let start = white_noise_dither(set, seed)?;
    let (width, height) = set.dims();
    let acf = Autocorrelation::new(&cfg.kernel, width, height);
    let mut report = DbsReport::default();
    let mut frames = Vec::with_capacity(set.len());
    for (index, (target, seeded)) in set.frames.iter().zip(&start.frames).enumerate() {
        let mut state = FrameState::new(to_bits(seeded), target, &acf);
        let mut frame_report = FrameDbsReport {
            initial_error: state.error,
            ..Default::default()
        };
        for pass in 0..cfg.max_passes {
            let mut accepted = 0;
            for y in 0..height {
                for x in 0..width {
                    if let Some((mv, delta)) = state.best_move(x, y) {
                        state.apply(mv, delta);
                        accepted += 1;
                        observer(&DbsEvent {
                            frame: index,
                            pass,
                            mv,
                            error: state.error,
                        });
                    }
                }
            }
            frame_report.accepted_per_pass.push(accepted);
            if accepted == 0 {
                break;
            }
        }
        // drop accumulated rounding from the incremental updates
        state.rebuild();
        frame_report.final_error = state.error;
        report.frames.push(frame_report);
        frames.push(from_bits(width, height, &state.bits));
    }
    Ok((set.with_frames(frames, Domain::Binary), report))
}

pub fn spatial_dbs(set: &PatternSet, cfg: &DbsConfig, seed: RngSeed) -> Result<PatternSet> {
    spatial_dbs_observed(set, cfg, seed, |_| {}).map(|(out, _)| out)
}

/// Per-frame DBS objective `sum_p [h * (binary - contone)](p)^2` under
/// toroidal convolution.
pub fn dbs_error(binary: &PatternSet, contone: &PatternSet, kernel: &Kernel) -> Result<Vec<f64>> {
    binary.check_same_shape(contone)?;
    Ok(binary
        .frames
        .iter()
        .zip(&contone.frames)
        .map(|(b, g)| {
            let diff = Grid::from_vec(
                b.width(),
                b.height(),
                b.data().iter().zip(g.data()).map(|(b, g)| b - g).collect(),
            )
            .expect("same shape");
            crate::optics::convolve_toroidal(&diff, kernel)
                .data()
                .iter()
                .map(|v| v * v)
                .sum()
        })
        .collect())
}
