use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::tensor::{MachineSpec, PretextMode, SgdConfig};

/// First 16 hex digits of the SHA-256 of the compact JSON form.
pub fn config_digest<T: Serialize>(value: &T) -> String {
    let canonical = serde_json::to_vec(value).expect("config serializes");
    Sha256::digest(&canonical)
        .iter()
        .take(8)
        .map(|b| format!("{b:02x}"))
        .collect()
}

/// Which images the per-epoch calibration error is computed on.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CalibrationMode {
    /// Set A itself, every record labelled seen.
    #[default]
    SeenOnly,
    /// A reserved mix of ⌊n/5⌋ seen and ⌊n/5⌋ unseen images kept out of B/C.
    HeldOut,
}

/// Training presets by machine family.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MachineCategory {
    Conventional,
    ClassicCnn,
    ModernCnn,
    Vit,
    Pretrained,
}

impl MachineCategory {
    /// `(stage-a epochs, learning rate)`.
    pub fn schedule(self) -> (usize, f64) {
        match self {
            MachineCategory::Conventional | MachineCategory::ModernCnn => (60, 0.01),
            MachineCategory::ClassicCnn | MachineCategory::Vit => (70, 0.0005),
            MachineCategory::Pretrained => (30, 0.01),
        }
    }
}

/// Every knob of a measurement run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EpisodeConfig {
    pub machine: MachineSpec,
    /// Size of each of the sets A, B and C.
    pub n: usize,
    /// Number of episodes.
    pub m: usize,
    pub epochs_a: usize,
    pub epochs_b: usize,
    pub lr_a: f64,
    pub lr_b: f64,
    pub momentum: f64,
    pub weight_decay: f64,
    pub accuracy_gate: f64,
    pub pretext_mode: PretextMode,
    pub calibration_mode: CalibrationMode,
    pub base_seed: u64,
}

impl EpisodeConfig {
    /// Full-size defaults: n = 500, m = 100, 60 + 10 epochs, lr 0.01,
    /// momentum 0.9, weight decay 1e-4, 80 % gate.
    pub fn new(machine: MachineSpec) -> Self {
        Self {
            machine,
            n: 500,
            m: 100,
            epochs_a: 60,
            epochs_b: 10,
            lr_a: 0.01,
            lr_b: 0.01,
            momentum: 0.9,
            weight_decay: 0.0001,
            accuracy_gate: 0.80,
            pretext_mode: PretextMode::FourWay,
            calibration_mode: CalibrationMode::SeenOnly,
            base_seed: 0,
        }
    }

    pub fn with_category(mut self, category: MachineCategory) -> Self {
        let (epochs, lr) = category.schedule();
        self.epochs_a = epochs;
        self.lr_a = lr;
        self.lr_b = lr;
        if category == MachineCategory::Conventional {
            self.pretext_mode = PretextMode::Binary;
        }
        self
    }

    pub fn validate(&self) -> Result<()> {
        self.machine.validate()?;
        for (name, v) in [
            ("n", self.n),
            ("m", self.m),
            ("epochs_a", self.epochs_a),
            ("epochs_b", self.epochs_b),
        ] {
            if v == 0 {
                return Err(Error::Config(format!("{name} must be at least 1")));
            }
        }
        if !(self.accuracy_gate > 0.0 && self.accuracy_gate <= 1.0) {
            return Err(Error::Config(format!(
                "accuracy gate {} not in (0, 1]",
                self.accuracy_gate
            )));
        }
        self.sgd_a().validate()?;
        self.sgd_b().validate()?;
        if self.calibration_mode == CalibrationMode::HeldOut && self.calibration_reserve() == 0 {
            return Err(Error::Config(
                "held-out calibration needs n >= 5".into(),
            ));
        }
        Ok(())
    }

    pub fn sgd_a(&self) -> SgdConfig {
        SgdConfig {
            learning_rate: self.lr_a,
            momentum: self.momentum,
            weight_decay: self.weight_decay,
        }
    }

    pub fn sgd_b(&self) -> SgdConfig {
        SgdConfig {
            learning_rate: self.lr_b,
            ..self.sgd_a()
        }
    }

    /// Number of extra seen (and unseen) images reserved for calibration.
    pub fn calibration_reserve(&self) -> usize {
        match self.calibration_mode {
            CalibrationMode::SeenOnly => 0,
            CalibrationMode::HeldOut => self.n / 5,
        }
    }

    pub fn config_hash(&self) -> String {
        config_digest(self)
    }
}
