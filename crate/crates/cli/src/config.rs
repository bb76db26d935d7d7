//! Run configuration: one JSON document, with command-line flags taking
//! precedence over its fields.

use std::fs;
use std::path::{Path, PathBuf};

use memmeter_core::measurer::{CalibrationMode, EpisodeConfig, MachineCategory};
use memmeter_core::predictor::RegressionConfig;
use memmeter_core::tensor::{InputShape, MachineKind, MachineSpec, PretextMode};
use memmeter_core::{Error, Result};
use serde::{Deserialize, Serialize};
use serde_json::Value;

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct MachineSettings {
    pub kind: Option<MachineKind>,
    pub category: Option<MachineCategory>,
    pub hidden: Option<Vec<usize>>,
    pub conv_channels: Option<Vec<usize>>,
}

impl MachineSettings {
    pub fn spec(&self, input: InputShape) -> MachineSpec {
        let mut spec = match self.kind.unwrap_or(MachineKind::SmallCnn) {
            MachineKind::Linear => MachineSpec::linear(input),
            MachineKind::Mlp => MachineSpec::mlp(input, vec![64]),
            MachineKind::SmallCnn => MachineSpec::small_cnn(input),
        };
        if let Some(h) = &self.hidden {
            spec.hidden = h.clone();
        }
        if let Some(c) = &self.conv_channels {
            spec.conv_channels = c.clone();
        }
        spec
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct MeasureSettings {
    pub n: Option<usize>,
    pub m: Option<usize>,
    pub epochs_a: Option<usize>,
    pub epochs_b: Option<usize>,
    pub lr_a: Option<f64>,
    pub lr_b: Option<f64>,
    pub momentum: Option<f64>,
    pub weight_decay: Option<f64>,
    pub accuracy_gate: Option<f64>,
    pub pretext_mode: Option<PretextMode>,
    pub calibration_mode: Option<CalibrationMode>,
    /// Explicit set A; defaults to the first `n` images in load order.
    pub set_a: Option<Vec<String>>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PredictorSettings {
    pub epochs: Option<usize>,
    pub lr: Option<f64>,
    pub momentum: Option<f64>,
    pub weight_decay: Option<f64>,
    pub batch_size: Option<usize>,
    pub split_seed: Option<u64>,
    pub test_fraction: Option<f64>,
    pub augment: Option<bool>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AnalysisSettings {
    /// How many labels the top and bottom views show.
    pub k: usize,
    pub min_label_count: usize,
}

impl Default for AnalysisSettings {
    fn default() -> Self {
        Self {
            k: 5,
            min_label_count: memmeter_core::analysis::DEFAULT_MIN_LABEL_COUNT,
        }
    }
}

/// A sweep varies one knob over a list of values.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SweepSettings {
    /// `seed`, `n`, `m`, `epochs_a`, `epochs_b` or `machine`.
    pub knob: String,
    pub values: Vec<Value>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub data: Option<PathBuf>,
    /// Separate pool of never-seen images for set C.
    pub unseen_data: Option<PathBuf>,
    /// PPM manifest (`id,filename[,label]`).
    pub manifest: Option<PathBuf>,
    pub out: Option<PathBuf>,
    pub seed: Option<u64>,
    pub workers: Option<usize>,
    pub scores: Option<PathBuf>,
    pub attributes: Option<PathBuf>,
    pub merge_csv: Vec<PathBuf>,
    pub model: Option<PathBuf>,
    pub machine: MachineSettings,
    pub measure: MeasureSettings,
    pub predictor: PredictorSettings,
    pub analysis: AnalysisSettings,
    pub sweep: SweepSettings,
}

/// Flag values that override the file.
#[derive(Debug, Clone, Default)]
pub struct Overrides {
    pub data: Option<PathBuf>,
    pub unseen_data: Option<PathBuf>,
    pub manifest: Option<PathBuf>,
    pub out: Option<PathBuf>,
    pub seed: Option<u64>,
    pub workers: Option<usize>,
    pub scores: Option<PathBuf>,
    pub attributes: Option<PathBuf>,
    pub merge_csv: Vec<PathBuf>,
    pub model: Option<PathBuf>,
}

impl RunConfig {
    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path)
            .map_err(|e| Error::Config(format!("cannot read config {}: {e}", path.display())))?;
        serde_json::from_str(&text).map_err(|e| Error::Config(format!("{}: {e}", path.display())))
    }

    /// File (if any) with flags layered on top.
    pub fn resolve(file: Option<&Path>, flags: Overrides) -> Result<Self> {
        let mut cfg = match file {
            Some(path) => Self::load(path)?,
            None => Self::default(),
        };
        macro_rules! take {
            ($($field:ident),*) => {$(
                if flags.$field.is_some() {
                    cfg.$field = flags.$field;
                }
            )*};
        }
        take!(data, unseen_data, manifest, out, seed, workers, scores, attributes, model);
        if !flags.merge_csv.is_empty() {
            cfg.merge_csv = flags.merge_csv;
        }
        Ok(cfg)
    }

    pub fn data(&self) -> Result<&Path> {
        self.data
            .as_deref()
            .ok_or_else(|| Error::Config("no dataset given (--data or \"data\")".into()))
    }

    pub fn out(&self) -> PathBuf {
        self.out.clone().unwrap_or_else(|| PathBuf::from("memmeter-out"))
    }

    pub fn workers(&self) -> usize {
        self.workers
            .unwrap_or_else(|| std::thread::available_parallelism().map_or(1, |n| n.get()))
    }

    pub fn episode_config(&self, input: InputShape) -> EpisodeConfig {
        let mut c = EpisodeConfig::new(self.machine.spec(input));
        if let Some(category) = self.machine.category {
            c = c.with_category(category);
        }
        let m = &self.measure;
        macro_rules! set {
            ($($field:ident),*) => {$(
                if let Some(v) = m.$field.clone() {
                    c.$field = v;
                }
            )*};
        }
        set!(n, m, epochs_a, epochs_b, lr_a, lr_b, momentum, weight_decay, accuracy_gate, pretext_mode, calibration_mode);
        if let Some(seed) = self.seed {
            c.base_seed = seed;
        }
        c
    }

    pub fn regression_config(&self, input: InputShape) -> RegressionConfig {
        let mut c = RegressionConfig::new(self.machine.spec(input));
        let p = &self.predictor;
        macro_rules! set {
            ($($field:ident),*) => {$(
                if let Some(v) = p.$field {
                    c.$field = v;
                }
            )*};
        }
        set!(epochs, lr, momentum, weight_decay, batch_size, split_seed, test_fraction, augment);
        if let Some(seed) = self.seed {
            c.seed = seed;
        }
        c
    }

    /// One configuration per sweep value, labelled `knob=value`.
    pub fn sweep_variants(&self) -> Result<Vec<(String, RunConfig)>> {
        let SweepSettings { knob, values } = &self.sweep;
        if values.len() < 2 {
            return Err(Error::Usage(format!(
                "a sweep needs at least 2 values for its knob, got {}",
                values.len()
            )));
        }
        let mut out = Vec::with_capacity(values.len());
        for value in values {
            let mut cfg = self.clone();
            cfg.sweep = SweepSettings::default();
            let bad = || Error::Config(format!("sweep value {value} does not fit knob {knob:?}"));
            let as_usize = || value.as_u64().map(|v| v as usize).ok_or_else(bad);
            match knob.as_str() {
                "seed" => cfg.seed = Some(value.as_u64().ok_or_else(bad)?),
                "n" => cfg.measure.n = Some(as_usize()?),
                "m" => cfg.measure.m = Some(as_usize()?),
                "epochs_a" => cfg.measure.epochs_a = Some(as_usize()?),
                "epochs_b" => cfg.measure.epochs_b = Some(as_usize()?),
                "machine" => {
                    cfg.machine.kind = Some(serde_json::from_value(value.clone()).map_err(|_| bad())?);
                    cfg.machine.hidden = None;
                    cfg.machine.conv_channels = None;
                }
                other => {
                    return Err(Error::Config(format!(
                        "unknown sweep knob {other:?}; use seed, n, m, epochs_a, epochs_b or machine"
                    )))
                }
            }
            let label = format!("{knob}={}", value.as_str().map_or_else(|| value.to_string(), str::to_owned));
            out.push((label, cfg));
        }
        Ok(out)
    }
}
