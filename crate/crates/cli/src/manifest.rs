//! `run.json` manifests and `metrics.json` records.
//!
//! Both are written through `serde_json::Value`, whose object map is ordered
//! by key, so the text form is stable across runs.

use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use fringe_core::{PatternMode, PatternSpec};

use crate::CliError;

pub const MANIFEST_FILE: &str = "run.json";
pub const METRICS_FILE: &str = "metrics.json";

pub fn frame_file_name(index: usize) -> String {
    format!("pattern_{index:02}.pgm")
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpecRecord {
    pub mode: String,
    pub frames: usize,
    pub width: usize,
    pub height: usize,
    pub fhigh: Option<f64>,
    /// Copies of the `width x height` tile across and down.
    pub tiling: [usize; 2],
}

impl SpecRecord {
    pub fn from_spec(spec: &PatternSpec, tiling: (usize, usize)) -> Self {
        let fhigh = match spec.mode {
            PatternMode::Single => None,
            PatternMode::Dual { high_frequency } => Some(high_frequency),
        };
        Self {
            mode: spec.mode.name().to_string(),
            frames: spec.frames,
            width: spec.width,
            height: spec.height,
            fhigh,
            tiling: [tiling.0, tiling.1],
        }
    }

    pub fn to_spec(&self) -> Result<(PatternSpec, (usize, usize)), CliError> {
        let spec = match self.mode.as_str() {
            "single" => PatternSpec::single(self.frames, self.width, self.height),
            "dual" => PatternSpec::dual(
                self.frames,
                self.width,
                self.height,
                self.fhigh
                    .unwrap_or(fringe_core::patterns::DEFAULT_HIGH_FREQUENCY),
            ),
            other => return Err(CliError::Data(format!("unknown pattern mode {other:?}"))),
        };
        spec.validate()
            .map_err(|e| CliError::Data(format!("manifest spec: {e}")))?;
        if self.tiling.contains(&0) {
            return Err(CliError::Data("manifest tiling must be positive".into()));
        }
        Ok((spec, (self.tiling[0], self.tiling[1])))
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct AlgorithmRecord {
    pub name: String,
    pub kernel_size: Option<usize>,
    pub sigma: Option<f64>,
    pub weights: Option<String>,
    pub passes: Option<usize>,
    pub min_flips: Option<usize>,
    pub seed: Option<u64>,
    pub solver: Option<String>,
    pub bayer_order: Option<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricsRecord {
    pub coeff: usize,
    pub mae_deg: f64,
    pub rms_rad: f64,
    pub power: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TraceRecord {
    pub pass: usize,
    /// Bits flipped (phasedbs) or moves accepted over all frames (dbs).
    pub changes: usize,
    pub mae_deg: Option<f64>,
    pub cost: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub command: String,
    pub spec: SpecRecord,
    pub domain: String,
    pub algorithm: Option<AlgorithmRecord>,
    pub input: Option<String>,
    pub output: String,
    pub files: Vec<String>,
    pub metrics: Option<MetricsRecord>,
    pub trace: Option<Vec<TraceRecord>>,
    pub best_pass: Option<usize>,
    pub duration_s: f64,
}

impl RunManifest {
    pub fn to_json(&self) -> String {
        sorted_json(self)
    }

    pub fn write(&self, dir: &Path) -> Result<(), CliError> {
        let path = dir.join(MANIFEST_FILE);
        fs::write(&path, self.to_json() + "\n").map_err(|e| CliError::io(&path, e))
    }

    pub fn read(dir: &Path) -> Result<Self, CliError> {
        let path = dir.join(MANIFEST_FILE);
        let text = fs::read_to_string(&path).map_err(|e| CliError::io(&path, e))?;
        serde_json::from_str(&text).map_err(|e| CliError::Data(format!("{}: {e}", path.display())))
    }
}

/// The flat record written by `eval`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalMetrics {
    pub algorithm: String,
    pub frames: usize,
    pub width: usize,
    pub height: usize,
    pub kernel_size: Option<usize>,
    pub sigma: Option<f64>,
    pub weights: Option<String>,
    pub passes: Option<usize>,
    pub seed: Option<u64>,
    pub coeff: usize,
    pub mae_deg: f64,
    pub rms_rad: f64,
    pub power: Vec<f64>,
    pub duration_s: f64,
}

impl EvalMetrics {
    pub fn to_json(&self) -> String {
        sorted_json(self)
    }
}

pub fn sorted_json<T: Serialize>(value: &T) -> String {
    let value = serde_json::to_value(value).expect("manifest types serialize");
    serde_json::to_string_pretty(&value).expect("json value serializes")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn spec_record_round_trip() {
        let spec = PatternSpec::dual(8, 80, 480, 8.0);
        let rec = SpecRecord::from_spec(&spec, (8, 1));
        assert_eq!(rec.to_spec().unwrap(), (spec, (8, 1)));
        let bad = SpecRecord {
            frames: 2,
            ..rec.clone()
        };
        assert!(bad.to_spec().is_err());
    }

    #[test]
    fn keys_are_sorted() {
        let m = EvalMetrics {
            algorithm: "dbs".into(),
            frames: 8,
            width: 80,
            height: 480,
            kernel_size: Some(15),
            sigma: Some(2.0),
            weights: None,
            passes: Some(3),
            seed: Some(1),
            coeff: 1,
            mae_deg: 0.5,
            rms_rad: 0.01,
            power: vec![0.0; 8],
            duration_s: 0.1,
        };
        let text = m.to_json();
        let keys: Vec<&str> = text
            .lines()
            .filter(|l| l.starts_with("  \""))
            .map(|l| l.trim().split('"').nth(1).unwrap())
            .collect();
        let mut sorted = keys.clone();
        sorted.sort_unstable();
        assert_eq!(keys, sorted);
        assert_eq!(keys.len(), 14);
    }
}
