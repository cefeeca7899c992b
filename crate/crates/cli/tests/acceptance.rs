//! Acceptance criteria. Each test prints one PASS/FAIL line for its
//! criterion, preceded by the individual checks behind it.
//!
//! Run with `cargo test -p fringe-cli --test acceptance -- --nocapture`.

use std::sync::OnceLock;

use fringe_cli::suites::{self, Method, SuiteConfig, Table1Report};
use fringe_core::decode::{dft_pixelwise, evaluate, phase_map};
use fringe_core::dft::Dft;
use fringe_core::halftone::{
    spatial_dbs, spatial_dbs_observed, white_noise_dither, DbsConfig, RngSeed,
};
use fringe_core::optics::{convolve_toroidal, defocus_set};
use fringe_core::patterns::make_patterns;
use fringe_core::phase_dbs::{
    best_binary_exhaustive, best_binary_threshold, optimize, weighted_cost, OptimizeConfig,
    WeightPreset, WeightVector,
};
use fringe_core::{PatternSet, PatternSpec};
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const SINGLE: &str = "single";
const DUAL: &str = "dual";

// Table 1, single frequency.
const C1_DBS_BAND: (f64, f64) = (0.30, 0.60);
const C1_ALL_BAND: (f64, f64) = (0.30, 0.60);
const C1_K1_MAX: f64 = 0.20;
const C1_RATIO_MIN: f64 = 2.5;
const C1_RUNTIME_MAX_S: f64 = 600.0;

// Table 1, dual frequency.
const C2_DBS_BAND: (f64, f64) = (0.55, 1.00);
const C2_ALL_BAND: (f64, f64) = (0.60, 1.15);
const C2_K12_MAX: f64 = 0.60;
const C2_RATIO_MIN: f64 = 1.4;

// White-noise seed.
const C3_SEED_DEG: f64 = 2.79;
const C3_SEED_TOL: f64 = 0.5;

// Dai comparison.
const C4_BAYER_RAD: f64 = 0.047;
const C4_BAYER_REL_TOL: f64 = 0.25;
const C4_DBS_MAX: f64 = 0.035;
const C4_PHASE_MAX: f64 = 0.020;
const C4_RATIO_MAX: f64 = 0.40;

// Spectral shaping.
const C5_MIN_SUPPRESSION: f64 = 100.0;

// Exactness.
const C6_DECODE_MAX_DEG: f64 = 1e-6;
const C6_DFT_TOL: f64 = 1e-9;
const C6_SPLIT_TOL: f64 = 1e-14;
const C6_RANDOM_VECTORS: usize = 1000;
const C6_COST_SLACK: f64 = 1e-9;

fn table1() -> &'static Table1Report {
    static REPORT: OnceLock<Table1Report> = OnceLock::new();
    REPORT.get_or_init(|| suites::table1(&SuiteConfig::default()).expect("table 1 suite runs"))
}

#[derive(Default)]
struct Criterion {
    lines: Vec<String>,
    failed: Vec<String>,
}

impl Criterion {
    fn check(&mut self, name: &str, ok: bool, detail: String) {
        let mark = if ok { "ok  " } else { "FAIL" };
        self.lines.push(format!("    {mark} {name}: {detail}"));
        if !ok {
            self.failed.push(name.to_string());
        }
    }

    fn band(&mut self, name: &str, value: f64, (lo, hi): (f64, f64)) {
        self.check(
            name,
            (lo..=hi).contains(&value),
            format!("{} in [{lo}, {hi}]", num(value)),
        );
    }

    fn at_most(&mut self, name: &str, value: f64, max: f64) {
        self.check(
            name,
            value <= max,
            format!("{} <= {}", num(value), num(max)),
        );
    }

    fn at_least(&mut self, name: &str, value: f64, min: f64) {
        self.check(
            name,
            value >= min,
            format!("{} >= {}", num(value), num(min)),
        );
    }

    fn finish(self, title: &str) {
        let status = if self.failed.is_empty() {
            "PASS"
        } else {
            "FAIL"
        };
        let mut text = self.lines.join("\n");
        text.push_str(&format!("\n{status} {title}\n"));
        println!("{text}");
        assert!(self.failed.is_empty(), "{title}: failed {:?}", self.failed);
    }
}

fn num(v: f64) -> String {
    if v == 0.0 || (1e-3..1e4).contains(&v.abs()) {
        format!("{v:.4}")
    } else {
        format!("{v:.3e}")
    }
}

fn mae(block: &str, method: Method) -> f64 {
    table1().cell(block, method).run.mae_deg
}

#[test]
fn criterion_1_table1_single_frequency() {
    let mut c = Criterion::default();
    let dbs = mae(SINGLE, Method::SpatialDbs);
    let k1 = mae(SINGLE, Method::PhaseDbsK1);
    c.band("spatial DBS MAE deg", dbs, C1_DBS_BAND);
    c.band(
        "phase DBS all-bins MAE deg",
        mae(SINGLE, Method::PhaseDbsAll),
        C1_ALL_BAND,
    );
    c.at_most("phase DBS k1 MAE deg", k1, C1_K1_MAX);
    c.at_least("spatial DBS / phase DBS k1", dbs / k1, C1_RATIO_MIN);
    c.at_most("summed runtime s", table1().cpu_seconds, C1_RUNTIME_MAX_S);
    c.finish("criterion 1: single-frequency errors");
}

#[test]
fn criterion_2_table1_dual_frequency() {
    let mut c = Criterion::default();
    let dbs = mae(DUAL, Method::SpatialDbs);
    let k12 = mae(DUAL, Method::PhaseDbsK12);
    c.band("spatial DBS MAE deg", dbs, C2_DBS_BAND);
    c.band(
        "phase DBS all-bins MAE deg",
        mae(DUAL, Method::PhaseDbsAll),
        C2_ALL_BAND,
    );
    c.at_most("phase DBS k1,k2 MAE deg", k12, C2_K12_MAX);
    c.at_least("spatial DBS / phase DBS k1,k2", dbs / k12, C2_RATIO_MIN);
    c.finish("criterion 2: dual-frequency errors");
}

#[test]
fn criterion_3_white_noise_seed() {
    let mut c = Criterion::default();
    let seed = table1().seed_mae_single;
    c.check(
        "white-noise MAE deg",
        (seed - C3_SEED_DEG).abs() <= C3_SEED_TOL,
        format!("{seed:.4} within {C3_SEED_DEG} +/- {C3_SEED_TOL}"),
    );
    c.finish("criterion 3: white-noise starting error");
}

#[test]
fn criterion_4_dai_comparison() {
    let report = suites::dai(&SuiteConfig::default()).expect("dai suite runs");
    let mut c = Criterion::default();
    let lo = C4_BAYER_RAD * (1.0 - C4_BAYER_REL_TOL);
    let hi = C4_BAYER_RAD * (1.0 + C4_BAYER_REL_TOL);
    c.band("Bayer RMS rad", report.bayer_rms_rad, (lo, hi));
    c.at_most("spatial DBS RMS rad", report.dbs_rms_rad, C4_DBS_MAX);
    c.at_most("phase DBS RMS rad", report.phase_dbs_rms_rad, C4_PHASE_MAX);
    c.at_most("phase DBS / Bayer", report.phase_ratio(), C4_RATIO_MAX);
    c.finish("criterion 4: Bayer / DBS / phase DBS comparison");
}

#[test]
fn criterion_5_spectral_shaping() {
    let mut c = Criterion::default();
    let power = &table1().cell(SINGLE, Method::PhaseDbsK1).run.power;
    let n = power.len();
    // bin N-1 is the conjugate of bin 1 for real frames and carries the same power
    for k in 2..n - 1 {
        c.at_least(
            &format!("power[{k}] / power[1]"),
            power[k] / power[1],
            C5_MIN_SUPPRESSION,
        );
    }
    c.finish("criterion 5: residual power concentrated away from bin 1");
}

fn max_abs_diff(a: &[f64], b: &[f64]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(x, y)| (x - y).abs())
        .fold(0.0, f64::max)
}

fn small_single() -> PatternSet {
    make_patterns(&PatternSpec::single(8, 80, 48)).unwrap()
}

#[test]
fn criterion_6_exactness() {
    let mut c = Criterion::default();
    let kernel = suites::table1_kernel();
    let mut rng = ChaCha8Rng::seed_from_u64(0x5eed);

    for spec in suites::table1_specs() {
        let set = make_patterns(&spec).unwrap();
        let bins: &[usize] = if spec.mode.reported_bin() == 1 {
            &[1]
        } else {
            &[1, 2]
        };
        for &k in bins {
            let plain = evaluate(&set, None, k).unwrap().mae_deg;
            let blurred = evaluate(&set, Some(&kernel), k).unwrap().mae_deg;
            let mode = spec.mode.name();
            c.at_most(
                &format!("{mode} contone decode bin {k}"),
                plain,
                C6_DECODE_MAX_DEG,
            );
            c.at_most(
                &format!("{mode} defocused contone decode bin {k}"),
                blurred,
                C6_DECODE_MAX_DEG,
            );
        }
    }

    let mut round_trip: f64 = 0.0;
    let mut parseval: f64 = 0.0;
    for n in 3..=16 {
        let dft = Dft::new(n);
        for _ in 0..50 {
            let x: Vec<f64> = (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect();
            let spectrum = dft.forward(&x);
            round_trip = round_trip.max(max_abs_diff(&dft.inverse_real(&spectrum), &x));
            let time: f64 = x.iter().map(|v| v * v).sum();
            let freq: f64 = spectrum.iter().map(|v| v.norm_sqr()).sum();
            parseval = parseval.max((freq - n as f64 * time).abs());
        }
    }
    c.at_most("DFT round trip", round_trip, C6_DFT_TOL);
    c.at_most("Parseval", parseval, C6_DFT_TOL);

    let (surround, center) = kernel.split_center();
    let white = white_noise_dither(&small_single(), RngSeed(3)).unwrap();
    let mut split: f64 = 0.0;
    for frame in &white.frames {
        let full = convolve_toroidal(frame, &kernel);
        let part = convolve_toroidal(frame, &surround);
        let rebuilt: Vec<f64> = part
            .data()
            .iter()
            .zip(frame.data())
            .map(|(s, g)| s + center * g)
            .collect();
        split = split.max(max_abs_diff(full.data(), &rebuilt));
    }
    c.at_most("surround + c * center = full", split, C6_SPLIT_TOL);

    for preset in [WeightPreset::All, WeightPreset::K1, WeightPreset::K12] {
        let weights = WeightVector::preset(preset, 8).unwrap();
        let mut violations = 0;
        let mut worst_gap = f64::NEG_INFINITY;
        for _ in 0..C6_RANDOM_VECTORS {
            let samples: Vec<f64> = (0..8).map(|_| rng.gen_range(-0.5..1.5) * center).collect();
            let d: Vec<Complex64> = Dft::new(8).forward(&samples);
            let exhaustive = best_binary_exhaustive(&d, center, &weights).unwrap();
            let threshold = best_binary_threshold(&d);
            let gap = weighted_cost(&d, center, &weights, &exhaustive)
                - weighted_cost(&d, center, &weights, &threshold);
            worst_gap = worst_gap.max(gap);
            if gap > C6_COST_SLACK {
                violations += 1;
            }
        }
        c.check(
            &format!(
                "exhaustive cost <= threshold cost, weights {}",
                preset.name()
            ),
            violations == 0,
            format!(
                "{violations} of {C6_RANDOM_VECTORS} violate, largest gap {}",
                num(worst_gap)
            ),
        );
    }

    let contone = small_single();
    let cfg = DbsConfig::new(kernel.clone());
    let mut last: Vec<f64> = Vec::new();
    let mut increases = 0;
    let mut events = 0;
    let (_, report) = spatial_dbs_observed(&contone, &cfg, RngSeed(1), |e| {
        if e.frame == last.len() {
            last.push(f64::INFINITY);
        }
        if e.error > last[e.frame] {
            increases += 1;
        }
        last[e.frame] = e.error;
        events += 1;
    })
    .unwrap();
    let starts_ok = report
        .frames
        .iter()
        .zip(&last)
        .all(|(f, &end)| end <= f.initial_error);
    c.check(
        "spatial DBS error non-increasing",
        increases == 0 && starts_ok && events > 0,
        format!("{increases} increases over {events} accepted moves"),
    );

    let pipeline = |set: &PatternSet| -> Vec<(Vec<f64>, u64)> {
        let seed = RngSeed(11);
        let mut outputs = vec![
            white_noise_dither(set, seed).unwrap(),
            spatial_dbs(set, &cfg, seed).unwrap(),
        ];
        for preset in [WeightPreset::All, WeightPreset::K1] {
            let mut opt =
                OptimizeConfig::new(kernel.clone(), WeightVector::preset(preset, 8).unwrap());
            opt.seed = seed;
            outputs.push(optimize(set, &opt).unwrap().0);
        }
        outputs
            .iter()
            .map(|b| {
                let bits = b.frames.iter().flat_map(|f| f.data().to_vec()).collect();
                (
                    bits,
                    evaluate(b, Some(&kernel), 1).unwrap().mae_deg.to_bits(),
                )
            })
            .collect()
    };
    let first = pipeline(&contone);
    let second = pipeline(&contone);
    c.check(
        "bit-exact reproducibility",
        first == second,
        format!("{} pipelines compared bit for bit", first.len()),
    );

    let binary = &table1().cell(SINGLE, Method::PhaseDbsK1).run.binary;
    let mut tiling: f64 = 0.0;
    for set in [&make_patterns(&suites::table1_specs()[0]).unwrap(), binary] {
        let narrow = phase_map(&dft_pixelwise(&defocus_set(set, &kernel)).unwrap(), 1).unwrap();
        let tiled = set.tile(8, 1);
        let wide = phase_map(&dft_pixelwise(&defocus_set(&tiled, &kernel)).unwrap(), 1).unwrap();
        assert_eq!(wide.width(), 640);
        for y in 0..wide.height() {
            for x in 0..wide.width() {
                let d = fringe_core::decode::wrapped_difference_deg(
                    wide.get(x, y),
                    narrow.get(x % 80, y),
                );
                tiling = tiling.max(d.abs());
            }
        }
    }
    c.at_most("80 vs 640 wide decoded phase deg", tiling, 1e-9);

    c.finish("criterion 6: exactness properties");
}

#[test]
fn criterion_7_hardware_results() {
    println!("INFO criterion 7: plane-fit measurements need projector hardware; nothing to check");
}
