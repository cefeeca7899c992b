//! Built-in comparison suites: the unit/dual-frequency halftoning table and
//! the short-period Bayer comparison.

use std::fmt;
use std::time::Instant;

use rayon::prelude::*;
use serde::Serialize;

use fringe_core::decode::{evaluate, residual_power, residual_power_raw};
use fringe_core::halftone::{
    bayer_dither, spatial_dbs_observed, white_noise_dither, DbsConfig, RngSeed,
};
use fringe_core::optics::{gaussian_kernel, Kernel};
use fringe_core::patterns::{make_patterns, PatternSpec};
use fringe_core::phase_dbs::{optimize, OptimizeConfig, WeightPreset, WeightVector};
use fringe_core::{PatternSet, Result};

pub const TABLE1_FRAMES: usize = 8;
pub const TABLE1_WIDTH: usize = 80;
pub const TABLE1_HEIGHT: usize = 480;
pub const TABLE1_KERNEL_SIZE: usize = 15;
pub const TABLE1_SIGMA: f64 = 2.0;
pub const TABLE1_HIGH_FREQUENCY: f64 = 8.0;

pub const DAI_PERIOD_ROWS: usize = 32;
pub const DAI_PERIODS: usize = 15;
pub const DAI_KERNEL_SIZE: usize = 5;
pub const DAI_VARIANCE: f64 = 5.0 / 3.0;
pub const DAI_BAYER_ORDER: usize = 8;

#[derive(Debug, Clone, Copy)]
pub struct SuiteConfig {
    pub seed: RngSeed,
    /// Overrides both the DBS and phase-DBS pass caps.
    pub max_passes: Option<usize>,
}

impl Default for SuiteConfig {
    fn default() -> Self {
        Self {
            seed: RngSeed(1),
            max_passes: None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Method {
    SpatialDbs,
    PhaseDbsAll,
    PhaseDbsK1,
    PhaseDbsK12,
}

impl Method {
    pub fn label(&self) -> &'static str {
        match self {
            Method::SpatialDbs => "spatial DBS",
            Method::PhaseDbsAll => "phase DBS (w_k=1 for all k)",
            Method::PhaseDbsK1 => "phase DBS (w_k=1 for k=1 else 0)",
            Method::PhaseDbsK12 => "phase DBS (w_k=1 for k=1,2 else 0)",
        }
    }

    fn preset(&self) -> Option<WeightPreset> {
        match self {
            Method::SpatialDbs => None,
            Method::PhaseDbsAll => Some(WeightPreset::All),
            Method::PhaseDbsK1 => Some(WeightPreset::K1),
            Method::PhaseDbsK12 => Some(WeightPreset::K12),
        }
    }
}

/// Outcome of one halftoning method on one pattern set.
#[derive(Debug, Clone, Serialize)]
pub struct MethodRun {
    pub method: Method,
    pub mae_deg: f64,
    pub rms_rad: f64,
    /// Residual power per bin, intensity units.
    pub power: Vec<f64>,
    /// Residual power per bin on the raw DFT scale.
    pub power_raw: Vec<f64>,
    pub passes_run: usize,
    pub best_pass: Option<usize>,
    pub seconds: f64,
    #[serde(skip)]
    pub binary: PatternSet,
}

/// Halftone `contone` with `method` and score it through `kernel` on `bin`.
pub fn run_method(
    contone: &PatternSet,
    method: Method,
    kernel: &Kernel,
    bin: usize,
    cfg: &SuiteConfig,
) -> Result<MethodRun> {
    let start = Instant::now();
    let (binary, passes_run, best_pass) = match method.preset() {
        None => {
            let mut dbs = DbsConfig::new(kernel.clone());
            if let Some(p) = cfg.max_passes {
                dbs.max_passes = p;
            }
            let (binary, report) = spatial_dbs_observed(contone, &dbs, cfg.seed, |_| {})?;
            let passes = report
                .frames
                .iter()
                .map(|f| f.accepted_per_pass.len())
                .max()
                .unwrap_or(0);
            (binary, passes, None)
        }
        Some(preset) => {
            let weights = WeightVector::preset(preset, contone.len())?;
            let mut opt = OptimizeConfig::new(kernel.clone(), weights);
            opt.seed = cfg.seed;
            opt.target_bin = Some(bin);
            if let Some(p) = cfg.max_passes {
                opt.max_passes = p;
            }
            let (binary, trace) = optimize(contone, &opt)?;
            (binary, trace.passes.len(), Some(trace.best_pass))
        }
    };
    let report = evaluate(&binary, Some(kernel), bin)?;
    Ok(MethodRun {
        method,
        mae_deg: report.mae_deg,
        rms_rad: report.rms_rad,
        power: residual_power(contone, &binary, kernel)?,
        power_raw: residual_power_raw(contone, &binary, kernel)?,
        passes_run,
        best_pass,
        seconds: start.elapsed().as_secs_f64(),
        binary,
    })
}

#[derive(Debug, Clone, Serialize)]
pub struct Table1Cell {
    pub block: &'static str,
    pub reference_deg: f64,
    pub run: MethodRun,
}

#[derive(Debug, Clone, Serialize)]
pub struct Table1Report {
    pub seed: u64,
    pub cells: Vec<Table1Cell>,
    /// White-noise seed error per block, before any optimization.
    pub seed_mae_single: f64,
    pub seed_mae_dual: f64,
    /// Sum of per-cell run times, a single-core runtime estimate.
    pub cpu_seconds: f64,
    pub wall_seconds: f64,
}

impl Table1Report {
    pub fn cell(&self, block: &str, method: Method) -> &Table1Cell {
        self.cells
            .iter()
            .find(|c| c.block == block && c.run.method == method)
            .expect("every table cell is run")
    }
}

pub fn table1_kernel() -> Kernel {
    gaussian_kernel(TABLE1_KERNEL_SIZE, TABLE1_SIGMA).expect("valid constants")
}

pub fn table1_specs() -> [PatternSpec; 2] {
    [
        PatternSpec::single(TABLE1_FRAMES, TABLE1_WIDTH, TABLE1_HEIGHT),
        PatternSpec::dual(
            TABLE1_FRAMES,
            TABLE1_WIDTH,
            TABLE1_HEIGHT,
            TABLE1_HIGH_FREQUENCY,
        ),
    ]
}

pub fn table1(cfg: &SuiteConfig) -> Result<Table1Report> {
    let start = Instant::now();
    let kernel = table1_kernel();
    let [single, dual] = table1_specs();
    let single_set = make_patterns(&single)?;
    let dual_set = make_patterns(&dual)?;
    let plan = [
        ("single", &single_set, Method::SpatialDbs, 0.43),
        ("single", &single_set, Method::PhaseDbsAll, 0.44),
        ("single", &single_set, Method::PhaseDbsK1, 0.10),
        ("dual", &dual_set, Method::SpatialDbs, 0.75),
        ("dual", &dual_set, Method::PhaseDbsAll, 0.87),
        ("dual", &dual_set, Method::PhaseDbsK12, 0.44),
    ];
    let cells = plan
        .par_iter()
        .map(|&(block, set, method, reference_deg)| {
            let bin = set.spec.mode.reported_bin();
            run_method(set, method, &kernel, bin, cfg).map(|run| Table1Cell {
                block,
                reference_deg,
                run,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let seed_mae = |set: &PatternSet| -> Result<f64> {
        let seeded = white_noise_dither(set, cfg.seed)?;
        Ok(evaluate(&seeded, Some(&kernel), set.spec.mode.reported_bin())?.mae_deg)
    };
    Ok(Table1Report {
        seed: cfg.seed.0,
        seed_mae_single: seed_mae(&single_set)?,
        seed_mae_dual: seed_mae(&dual_set)?,
        cpu_seconds: cells.iter().map(|c| c.run.seconds).sum(),
        cells,
        wall_seconds: start.elapsed().as_secs_f64(),
    })
}

impl fmt::Display for Table1Report {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(
            f,
            "Phase error, N={TABLE1_FRAMES}, {TABLE1_WIDTH}x{TABLE1_HEIGHT}, \
             {TABLE1_KERNEL_SIZE}x{TABLE1_KERNEL_SIZE} Gaussian sigma={TABLE1_SIGMA}, seed {}",
            self.seed
        )?;
        writeln!(
            f,
            "{:<8} {:<36} {:>10} {:>12} {:>7}",
            "block", "scheme", "ref deg", "measured deg", "passes"
        )?;
        for cell in &self.cells {
            writeln!(
                f,
                "{:<8} {:<36} {:>10.2} {:>12.3} {:>7}",
                cell.block,
                cell.run.method.label(),
                cell.reference_deg,
                cell.run.mae_deg,
                cell.run.passes_run
            )?;
        }
        writeln!(
            f,
            "white-noise seed: single {:.3} deg, dual {:.3} deg (reference 2.79)",
            self.seed_mae_single, self.seed_mae_dual
        )?;
        let k1 = self.cell("single", Method::PhaseDbsK1);
        let all = self.cell("single", Method::PhaseDbsAll);
        let fmt_power = |p: &[f64]| {
            p.iter()
                .map(|v| format!("{v:.2e}"))
                .collect::<Vec<_>>()
                .join(" ")
        };
        writeln!(
            f,
            "mean |D[k]|^2, k1 weights:  {}",
            fmt_power(&k1.run.power_raw)
        )?;
        writeln!(
            f,
            "mean |D[k]|^2, all weights: {}",
            fmt_power(&all.run.power_raw)
        )?;
        write!(
            f,
            "runtime: {:.1} s summed over cells, {:.1} s wall",
            self.cpu_seconds, self.wall_seconds
        )
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct DaiReport {
    pub seed: u64,
    pub width: usize,
    pub height: usize,
    pub period_rows: usize,
    pub kernel_size: usize,
    pub sigma: f64,
    pub bayer_order: usize,
    pub bayer_rms_rad: f64,
    pub dbs_rms_rad: f64,
    pub phase_dbs_rms_rad: f64,
}

impl DaiReport {
    pub fn dbs_ratio(&self) -> f64 {
        self.dbs_rms_rad / self.bayer_rms_rad
    }

    pub fn phase_ratio(&self) -> f64 {
        self.phase_dbs_rms_rad / self.bayer_rms_rad
    }
}

pub fn dai_kernel() -> Kernel {
    gaussian_kernel(DAI_KERNEL_SIZE, DAI_VARIANCE.sqrt()).expect("valid constants")
}

/// Unit-frequency tile one period tall, repeated down to full height.
pub fn dai_patterns() -> Result<PatternSet> {
    let tile = PatternSpec::single(TABLE1_FRAMES, TABLE1_WIDTH, DAI_PERIOD_ROWS);
    Ok(make_patterns(&tile)?.tile(1, DAI_PERIODS))
}

pub fn dai(cfg: &SuiteConfig) -> Result<DaiReport> {
    let kernel = dai_kernel();
    let set = dai_patterns()?;
    let bayer = bayer_dither(&set, DAI_BAYER_ORDER)?;
    let bayer_rms = evaluate(&bayer, Some(&kernel), 1)?.rms_rad;
    let runs = [Method::SpatialDbs, Method::PhaseDbsK1]
        .par_iter()
        .map(|&m| run_method(&set, m, &kernel, 1, cfg))
        .collect::<Result<Vec<_>>>()?;
    Ok(DaiReport {
        seed: cfg.seed.0,
        width: set.width(),
        height: set.height(),
        period_rows: DAI_PERIOD_ROWS,
        kernel_size: DAI_KERNEL_SIZE,
        sigma: DAI_VARIANCE.sqrt(),
        bayer_order: DAI_BAYER_ORDER,
        bayer_rms_rad: bayer_rms,
        dbs_rms_rad: runs[0].rms_rad,
        phase_dbs_rms_rad: runs[1].rms_rad,
    })
}

impl fmt::Display for DaiReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(
            f,
            "RMS phase error, N={TABLE1_FRAMES}, {}x{} ({} rows per period), \
             {k}x{k} Gaussian variance {:.4}, seed {}",
            self.width,
            self.height,
            self.period_rows,
            self.sigma * self.sigma,
            self.seed,
            k = self.kernel_size,
        )?;
        writeln!(
            f,
            "{:<24} {:>10} {:>13} {:>9}",
            "scheme", "ref rad", "measured rad", "vs Bayer"
        )?;
        let rows = [
            (
                format!("Bayer {0}x{0}", self.bayer_order),
                0.047,
                self.bayer_rms_rad,
            ),
            ("spatial DBS".to_string(), 0.027, self.dbs_rms_rad),
            ("phase DBS (k1)".to_string(), 0.014, self.phase_dbs_rms_rad),
        ];
        for (i, (name, reference, measured)) in rows.iter().enumerate() {
            write!(
                f,
                "{:<24} {:>10.3} {:>13.4} {:>9.2}",
                name,
                reference,
                measured,
                measured / self.bayer_rms_rad
            )?;
            if i + 1 < rows.len() {
                writeln!(f)?;
            }
        }
        Ok(())
    }
}
