//! Subcommand implementations.

use std::fs;
use std::io::Write;
use std::path::Path;
use std::time::Instant;

use fringe_core::decode::{
    dft_pixelwise, evaluate, gradient_map, gradient_to_unit, phase_map, residual_power,
    wrapped_abs_error,
};
use fringe_core::halftone::{
    bayer_dither, spatial_dbs_observed, white_noise_dither, DbsConfig, RngSeed,
};
use fringe_core::optics::{defocus_set, gaussian_kernel, Kernel};
use fringe_core::patterns::{make_patterns, DEFAULT_HIGH_FREQUENCY};
use fringe_core::phase_dbs::{optimize, OptimizeConfig, Solver, WeightPreset, WeightVector};
use fringe_core::{Domain, PatternSet, PatternSpec};

use crate::manifest::{
    frame_file_name, sorted_json, AlgorithmRecord, EvalMetrics, MetricsRecord, RunManifest,
    SpecRecord, TraceRecord, METRICS_FILE,
};
use crate::suites::{self, SuiteConfig};
use crate::{
    pnm, render, Algo, CliError, DitherArgs, EvalArgs, GenArgs, KernelArgs, ModeArg, ReproduceArgs,
    SpecArgs, Suite, TileArgs,
};

pub const DEFAULT_FRAMES: usize = 8;
pub const DEFAULT_WIDTH: usize = 80;
pub const DEFAULT_HEIGHT: usize = 480;
pub const DEFAULT_KERNEL_SIZE: usize = 15;
pub const DEFAULT_SIGMA: f64 = 2.0;
pub const DEFAULT_BAYER_ORDER: usize = 8;

/// Samples may differ from the regenerated contone by at most half a level.
const CONTONE_FILE_TOLERANCE: f64 = 0.5 / 255.0 + 1e-9;

fn write_out(out: &mut dyn Write, text: &str) -> Result<(), CliError> {
    writeln!(out, "{text}").map_err(|e| CliError::Data(format!("stdout: {e}")))
}

fn create_dir(dir: &Path) -> Result<(), CliError> {
    fs::create_dir_all(dir).map_err(|e| CliError::io(dir, e))
}

pub fn resolve_spec(args: &SpecArgs) -> Result<PatternSpec, CliError> {
    let frames = args.frames.unwrap_or(DEFAULT_FRAMES);
    let width = args.width.unwrap_or(DEFAULT_WIDTH);
    let height = args.height.unwrap_or(DEFAULT_HEIGHT);
    let spec = match args.mode.unwrap_or(ModeArg::Single) {
        ModeArg::Single => {
            if args.fhigh.is_some() {
                return Err(CliError::Usage(
                    "--fhigh only applies to --mode dual".into(),
                ));
            }
            PatternSpec::single(frames, width, height)
        }
        ModeArg::Dual => PatternSpec::dual(
            frames,
            width,
            height,
            args.fhigh.unwrap_or(DEFAULT_HIGH_FREQUENCY),
        ),
    };
    spec.validate()?;
    Ok(spec)
}

fn resolve_kernel(
    args: &KernelArgs,
    fallback: Option<&AlgorithmRecord>,
) -> Result<(Kernel, usize, f64), CliError> {
    let size = args
        .kernel_size
        .or(fallback.and_then(|a| a.kernel_size))
        .unwrap_or(DEFAULT_KERNEL_SIZE);
    let sigma = args
        .sigma
        .or(fallback.and_then(|a| a.sigma))
        .unwrap_or(DEFAULT_SIGMA);
    Ok((gaussian_kernel(size, sigma)?, size, sigma))
}

fn write_frames(dir: &Path, set: &PatternSet) -> Result<Vec<String>, CliError> {
    create_dir(dir)?;
    set.frames
        .iter()
        .enumerate()
        .map(|(n, frame)| {
            let name = frame_file_name(n);
            let path = dir.join(&name);
            pnm::write_pgm(&path, frame).map_err(|e| CliError::io(&path, e))?;
            Ok(name)
        })
        .collect()
}

/// Load a pattern set directory.
///
/// Binary sets are taken from the files, which must hold only 0 and 255.
/// Contone sets are regenerated from the manifest spec at full precision after
/// checking the files agree with it to within 8-bit quantization.
pub fn load_set(dir: &Path) -> Result<(RunManifest, PatternSet), CliError> {
    let manifest = RunManifest::read(dir)?;
    let (spec, tiling) = manifest.spec.to_spec()?;
    let dims = (spec.width * tiling.0, spec.height * tiling.1);
    let mut frames = Vec::with_capacity(spec.frames);
    for n in 0..spec.frames {
        let path = dir.join(frame_file_name(n));
        let grid = pnm::read_pgm(&path)?;
        if grid.dims() != dims {
            return Err(CliError::Data(format!(
                "{}: {}x{} does not match manifest size {}x{}",
                path.display(),
                grid.width(),
                grid.height(),
                dims.0,
                dims.1
            )));
        }
        frames.push(grid);
    }
    let set = match manifest.domain.as_str() {
        "binary" => {
            if frames
                .iter()
                .any(|f| f.data().iter().any(|&v| v != 0.0 && v != 1.0))
            {
                return Err(CliError::Data(format!(
                    "{}: binary set contains gray levels",
                    dir.display()
                )));
            }
            PatternSet::new(spec, tiling, frames, Domain::Binary)
                .map_err(|e| CliError::Data(e.to_string()))?
        }
        "contone" => {
            let exact = make_patterns(&spec)?.tile(tiling.0, tiling.1);
            for (n, (file, ideal)) in frames.iter().zip(&exact.frames).enumerate() {
                let worst = file
                    .data()
                    .iter()
                    .zip(ideal.data())
                    .map(|(a, b)| (a - b).abs())
                    .fold(0.0, f64::max);
                if worst > CONTONE_FILE_TOLERANCE {
                    return Err(CliError::Data(format!(
                        "{}: frame {n} deviates from the manifest spec by {worst:.4}",
                        dir.display()
                    )));
                }
            }
            exact
        }
        other => return Err(CliError::Data(format!("unknown domain {other:?}"))),
    };
    Ok((manifest, set))
}

pub fn gen(args: &GenArgs, stdout: &mut dyn Write) -> Result<(), CliError> {
    let start = Instant::now();
    let spec = resolve_spec(&args.spec)?;
    let set = make_patterns(&spec)?;
    let files = write_frames(&args.out, &set)?;
    let manifest = RunManifest {
        command: "gen".into(),
        spec: SpecRecord::from_spec(&spec, set.tiling),
        domain: Domain::Contone.name().into(),
        algorithm: None,
        input: None,
        output: args.out.display().to_string(),
        files,
        metrics: None,
        trace: None,
        best_pass: None,
        duration_s: start.elapsed().as_secs_f64(),
    };
    manifest.write(&args.out)?;
    write_out(stdout, &manifest.to_json())
}

fn reject_flag(present: bool, flag: &str, algo: Algo) -> Result<(), CliError> {
    if present {
        return Err(CliError::Usage(format!(
            "{flag} does not apply to --algo {}",
            algo.name()
        )));
    }
    Ok(())
}

pub fn dither(args: &DitherArgs, stdout: &mut dyn Write) -> Result<(), CliError> {
    let start = Instant::now();
    let algo = args.algo;
    let phase = algo == Algo::Phasedbs;
    reject_flag(args.weights.is_some() && !phase, "--weights", algo)?;
    reject_flag(args.solver.is_some() && !phase, "--solver", algo)?;
    reject_flag(args.min_flips.is_some() && !phase, "--min-flips", algo)?;
    reject_flag(
        args.passes.is_some() && !matches!(algo, Algo::Dbs | Algo::Phasedbs),
        "--passes",
        algo,
    )?;
    reject_flag(
        args.bayer_order.is_some() && algo != Algo::Bayer,
        "--bayer-order",
        algo,
    )?;
    if args.input.is_some() && args.spec.any_set() {
        return Err(CliError::Usage(
            "pattern flags cannot be combined with --input".into(),
        ));
    }

    let contone = match &args.input {
        Some(dir) => {
            let (_, set) = load_set(dir)?;
            if set.domain != Domain::Contone {
                return Err(CliError::Data(format!(
                    "{}: input is not contone",
                    dir.display()
                )));
            }
            set
        }
        None => make_patterns(&resolve_spec(&args.spec)?)?,
    };
    let (kernel, kernel_size, sigma) = resolve_kernel(&args.kernel, None)?;
    let seed = RngSeed(args.seed);
    let bin = contone.spec.mode.reported_bin();

    let mut record = AlgorithmRecord {
        name: algo.name().into(),
        kernel_size: Some(kernel_size),
        sigma: Some(sigma),
        ..Default::default()
    };
    let mut trace: Option<Vec<TraceRecord>> = None;
    let mut best_pass = None;
    let binary = match algo {
        Algo::Whitenoise => {
            record.seed = Some(args.seed);
            white_noise_dither(&contone, seed)?
        }
        Algo::Bayer => {
            let order = args.bayer_order.unwrap_or(DEFAULT_BAYER_ORDER);
            record.bayer_order = Some(order);
            bayer_dither(&contone, order)?
        }
        Algo::Dbs => {
            let mut cfg = DbsConfig::new(kernel.clone());
            if let Some(p) = args.passes {
                cfg.max_passes = p;
            }
            record.passes = Some(cfg.max_passes);
            record.seed = Some(args.seed);
            let (binary, report) = spatial_dbs_observed(&contone, &cfg, seed, |_| {})?;
            let passes = report
                .frames
                .iter()
                .map(|f| f.accepted_per_pass.len())
                .max()
                .unwrap_or(0);
            trace = Some(
                (0..passes)
                    .map(|i| TraceRecord {
                        pass: i + 1,
                        changes: report
                            .frames
                            .iter()
                            .filter_map(|f| f.accepted_per_pass.get(i))
                            .sum(),
                        mae_deg: None,
                        cost: None,
                    })
                    .collect(),
            );
            binary
        }
        Algo::Phasedbs => {
            let preset: WeightPreset = args.weights.as_deref().unwrap_or("all").parse()?;
            let solver: Solver = args.solver.as_deref().unwrap_or("exhaustive").parse()?;
            let mut cfg =
                OptimizeConfig::new(kernel.clone(), WeightVector::preset(preset, contone.len())?);
            cfg.solver = solver;
            cfg.seed = seed;
            if let Some(p) = args.passes {
                cfg.max_passes = p;
            }
            if let Some(m) = args.min_flips {
                cfg.min_flips = m;
            }
            record.weights = Some(preset.name().into());
            record.solver = Some(solver.name().into());
            record.passes = Some(cfg.max_passes);
            record.min_flips = Some(cfg.min_flips);
            record.seed = Some(args.seed);
            let (binary, t) = optimize(&contone, &cfg)?;
            best_pass = Some(t.best_pass);
            trace = Some(
                std::iter::once(&t.seed)
                    .chain(&t.passes)
                    .map(|r| TraceRecord {
                        pass: r.pass,
                        changes: r.flips,
                        mae_deg: Some(r.mae_deg),
                        cost: Some(r.cost),
                    })
                    .collect(),
            );
            binary
        }
    };

    let report = evaluate(&binary, Some(&kernel), bin)?;
    let metrics = MetricsRecord {
        coeff: bin,
        mae_deg: report.mae_deg,
        rms_rad: report.rms_rad,
        power: residual_power(&contone, &binary, &kernel)?,
    };
    let files = write_frames(&args.out, &binary)?;
    if let Some(trace) = &trace {
        let path = args.out.join("trace.log");
        let mut text = String::new();
        for r in trace {
            text.push_str(&format!("pass {:>3} changes {:>7}", r.pass, r.changes));
            if let Some(m) = r.mae_deg {
                text.push_str(&format!(" mae_deg {m:.6}"));
            }
            if let Some(c) = r.cost {
                text.push_str(&format!(" cost {c:.6}"));
            }
            text.push('\n');
        }
        fs::write(&path, &text).map_err(|e| CliError::io(&path, e))?;
        write_out(stdout, text.trim_end())?;
    }
    let manifest = RunManifest {
        command: "dither".into(),
        spec: SpecRecord::from_spec(&contone.spec, contone.tiling),
        domain: Domain::Binary.name().into(),
        algorithm: Some(record),
        input: args.input.as_ref().map(|p| p.display().to_string()),
        output: args.out.display().to_string(),
        files,
        metrics: Some(metrics),
        trace,
        best_pass,
        duration_s: start.elapsed().as_secs_f64(),
    };
    manifest.write(&args.out)?;
    write_out(
        stdout,
        &format!(
            "{}: bin {bin} mae_deg {:.6} rms_rad {:.6}",
            algo.name(),
            report.mae_deg,
            report.rms_rad
        ),
    )
}

pub fn eval(args: &EvalArgs, stdout: &mut dyn Write) -> Result<(), CliError> {
    let start = Instant::now();
    let (manifest, set) = load_set(&args.input)?;
    let coeff = args.coeff.unwrap_or(set.spec.mode.reported_bin());
    let truth = set.ideal_phase(coeff)?;
    let (kernel, kernel_size, sigma) = resolve_kernel(&args.kernel, manifest.algorithm.as_ref())?;

    let (observed, power, kernel_used) = match set.domain {
        Domain::Binary => {
            let contone = make_patterns(&set.spec)?.tile(set.tiling.0, set.tiling.1);
            let power = residual_power(&contone, &set, &kernel)?;
            (defocus_set(&set, &kernel), power, true)
        }
        Domain::Contone => (set.clone(), vec![0.0; set.len()], false),
    };
    let field = dft_pixelwise(&observed)?;
    let measured = phase_map(&field, coeff)?;
    let report = wrapped_abs_error(&measured, &truth)?;

    let algorithm = manifest.algorithm.clone().unwrap_or_default();
    let metrics = EvalMetrics {
        algorithm: if algorithm.name.is_empty() {
            "contone".into()
        } else {
            algorithm.name.clone()
        },
        frames: set.len(),
        width: set.width(),
        height: set.height(),
        kernel_size: kernel_used.then_some(kernel_size),
        sigma: kernel_used.then_some(sigma),
        weights: algorithm.weights,
        passes: algorithm.passes,
        seed: algorithm.seed,
        coeff,
        mae_deg: report.mae_deg,
        rms_rad: report.rms_rad,
        power,
        duration_s: start.elapsed().as_secs_f64(),
    };

    if let Some(dir) = &args.render {
        create_dir(dir)?;
        let (w, h) = (set.width(), set.height());
        let path = dir.join("phase.ppm");
        pnm::write_ppm(&path, w, h, &render::phase_to_rgb(&measured))
            .map_err(|e| CliError::io(&path, e))?;
        let gradient = gradient_map(&measured);
        let ideal_step = gradient_map(&truth);
        let center = ideal_step.mean();
        let span = gradient
            .data()
            .iter()
            .map(|g| (g - center).abs())
            .fold(0.0, f64::max);
        let path = dir.join("gradient.ppm");
        pnm::write_ppm(
            &path,
            w,
            h,
            &render::gray_to_rgb(&gradient_to_unit(&gradient, center, span)),
        )
        .map_err(|e| CliError::io(&path, e))?;
        if args.tile == 0 {
            return Err(CliError::Usage("--tile must be at least 1".into()));
        }
        let tiled = set.tile(args.tile, 1);
        for (n, frame) in tiled.frames.iter().enumerate() {
            let path = dir.join(format!("tiled_{n:02}.pgm"));
            pnm::write_pgm(&path, frame).map_err(|e| CliError::io(&path, e))?;
        }
    }

    let text = metrics.to_json();
    let out = args
        .out
        .clone()
        .unwrap_or_else(|| args.input.join(METRICS_FILE));
    fs::write(&out, text.clone() + "\n").map_err(|e| CliError::io(&out, e))?;
    write_out(stdout, &text)
}

pub fn reproduce(args: &ReproduceArgs, stdout: &mut dyn Write) -> Result<(), CliError> {
    if args.passes == Some(0) {
        return Err(CliError::Usage("--passes must be at least 1".into()));
    }
    let cfg = SuiteConfig {
        seed: RngSeed(args.seed),
        max_passes: args.passes,
    };
    let (text, json) = match args.suite {
        Suite::Table1 => {
            let report = suites::table1(&cfg)?;
            (report.to_string(), sorted_json(&report))
        }
        Suite::Dai => {
            let report = suites::dai(&cfg)?;
            (report.to_string(), sorted_json(&report))
        }
    };
    if let Some(path) = &args.out {
        fs::write(path, json + "\n").map_err(|e| CliError::io(path, e))?;
    }
    write_out(stdout, &text)
}

pub fn tile(args: &TileArgs, stdout: &mut dyn Write) -> Result<(), CliError> {
    let start = Instant::now();
    if args.nx == 0 || args.ny == 0 {
        return Err(CliError::Usage("--nx and --ny must be at least 1".into()));
    }
    let (manifest, set) = load_set(&args.input)?;
    let tiled = set.tile(args.nx, args.ny);
    let files = write_frames(&args.out, &tiled)?;
    let out = RunManifest {
        command: "tile".into(),
        spec: SpecRecord::from_spec(&tiled.spec, tiled.tiling),
        domain: manifest.domain.clone(),
        algorithm: manifest.algorithm.clone(),
        input: Some(args.input.display().to_string()),
        output: args.out.display().to_string(),
        files,
        metrics: None,
        trace: None,
        best_pass: None,
        duration_s: start.elapsed().as_secs_f64(),
    };
    out.write(&args.out)?;
    write_out(stdout, &out.to_json())
}
