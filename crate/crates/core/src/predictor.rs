//! Pixel-to-score regression: a small CNN with a one-wide sigmoid head,
//! trained by mean squared error on measured scores.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use crate::data::{augment_for_regression, stack_images, Dataset, ImageTensor};
use crate::error::{Error, Result};
use crate::metrics::spearman;
use crate::scores::ScoreMap;
use crate::seed;
use crate::tensor::{
    read_checkpoint, sigmoid, write_checkpoint, Dense, Machine, MachineSpec, Sgd, SgdConfig, Tape, Tensor,
};

const EVAL_BATCH: usize = 64;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RegressionConfig {
    pub machine: MachineSpec,
    pub epochs: usize,
    pub lr: f64,
    pub momentum: f64,
    pub weight_decay: f64,
    pub batch_size: usize,
    pub split_seed: u64,
    pub test_fraction: f64,
    pub augment: bool,
    pub seed: u64,
}

impl RegressionConfig {
    /// 30 epochs, lr 0.01, momentum 0.9, weight decay 1e-4, batches of 16,
    /// 20 % test split, augmentation on.
    pub fn new(machine: MachineSpec) -> Self {
        Self {
            machine,
            epochs: 30,
            lr: 0.01,
            momentum: 0.9,
            weight_decay: 0.0001,
            batch_size: 16,
            split_seed: 0,
            test_fraction: 0.2,
            augment: true,
            seed: 0,
        }
    }

    pub fn sgd(&self) -> SgdConfig {
        SgdConfig {
            learning_rate: self.lr,
            momentum: self.momentum,
            weight_decay: self.weight_decay,
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.machine.validate()?;
        self.sgd().validate()?;
        if self.epochs == 0 || self.batch_size == 0 {
            return Err(Error::Config("epochs and batch_size must be at least 1".into()));
        }
        if !(self.test_fraction > 0.0 && self.test_fraction < 1.0) {
            return Err(Error::Config(format!(
                "test fraction {} not in (0, 1)",
                self.test_fraction
            )));
        }
        Ok(())
    }
}

/// Disjoint, exhaustive train/test partition of the scored ids, each sorted.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Split {
    pub train: Vec<String>,
    pub test: Vec<String>,
}

/// Shuffles the sorted ids with `seed_value`; the test side gets
/// `round(N · fraction)` ids, at least one and at most N − 1.
pub fn split_ids(scores: &ScoreMap, fraction: f64, seed_value: u64) -> Result<Split> {
    if scores.len() < 2 {
        return Err(Error::Config(format!(
            "a train/test split needs at least 2 scored images, got {}",
            scores.len()
        )));
    }
    let mut ids: Vec<String> = scores.keys().cloned().collect();
    ids.shuffle(&mut seed::stream(seed_value, "split", 0));
    let test_len = ((ids.len() as f64 * fraction).round() as usize).clamp(1, ids.len() - 1);
    let mut test = ids.split_off(ids.len() - test_len);
    ids.sort();
    test.sort();
    Ok(Split { train: ids, test })
}

/// Anything that maps images to predicted scores.
pub trait ScorePredictor {
    fn predict_scores(&self, images: &[&ImageTensor]) -> Result<Vec<f64>>;
}

#[derive(Debug, Clone, PartialEq)]
pub struct PredictorModel {
    machine: Machine,
    config: RegressionConfig,
}

impl PredictorModel {
    pub fn new(config: RegressionConfig) -> Result<Self> {
        config.validate()?;
        let mut machine = Machine::new(config.machine.clone(), 1, &mut seed::stream(config.seed, "init", 0))?;
        // A zero head starts every prediction at 0.5, away from the flat
        // tails of the sigmoid.
        let features = machine.spec().feature_width();
        machine.set_head(Dense {
            weight: Tensor::zeros(vec![1, features]),
            bias: Tensor::zeros(vec![1]),
        })?;
        Ok(Self { machine, config })
    }

    /// Wraps an existing one-output machine, e.g. to evaluate an untrained
    /// network with a random head.
    pub fn from_machine(machine: Machine, config: RegressionConfig) -> Result<Self> {
        config.validate()?;
        if machine.head_width() != 1 || *machine.spec() != config.machine {
            return Err(Error::Config(
                "predictor machine must match the configured spec and have one output".into(),
            ));
        }
        Ok(Self { machine, config })
    }

    pub fn machine(&self) -> &Machine {
        &self.machine
    }

    pub fn config(&self) -> &RegressionConfig {
        &self.config
    }

    fn sidecar(path: &Path) -> PathBuf {
        path.with_extension("json")
    }

    /// Writes the parameters as an MMT1 checkpoint at `path` and the
    /// configuration next to it with a `.json` extension.
    pub fn save(&self, path: &Path) -> Result<()> {
        let mut out = fs::File::create(path)?;
        write_checkpoint(&mut out, &self.machine.named_parameters())?;
        let mut side = fs::File::create(Self::sidecar(path))?;
        serde_json::to_writer_pretty(&mut side, &self.config)?;
        side.write_all(b"\n")?;
        Ok(())
    }

    pub fn load(path: &Path) -> Result<Self> {
        let config: RegressionConfig = serde_json::from_reader(fs::File::open(Self::sidecar(path))?)?;
        let mut model = Self::new(config)?;
        let named = read_checkpoint(fs::File::open(path)?)?;
        model.machine.load_parameters(&named)?;
        Ok(model)
    }

    /// Scores in (0, 1) for each image, in input order.
    pub fn predict(&self, images: &[&ImageTensor]) -> Result<Vec<f64>> {
        let mut out = Vec::with_capacity(images.len());
        for chunk in images.chunks(EVAL_BATCH) {
            let logits = self.machine.logits(stack_images(chunk.iter().copied())?)?;
            out.extend(logits.data().iter().map(|&z| sigmoid(z)));
        }
        Ok(out)
    }
}

impl ScorePredictor for PredictorModel {
    fn predict_scores(&self, images: &[&ImageTensor]) -> Result<Vec<f64>> {
        self.predict(images)
    }
}

#[derive(Debug, Clone)]
pub struct TrainOutcome {
    pub model: PredictorModel,
    /// Un-augmented training-set MSE after each epoch.
    pub history: Vec<f64>,
    pub split: Split,
}

fn mse(model: &PredictorModel, images: &[&ImageTensor], targets: &[f64]) -> Result<f64> {
    let preds = model.predict(images)?;
    Ok(preds.iter().zip(targets).map(|(p, t)| (p - t).powi(2)).sum::<f64>() / targets.len() as f64)
}

/// Trains on the train side of the split; every scored id must be in
/// `dataset`.
pub fn train_predictor(scores: &ScoreMap, dataset: &Dataset, config: &RegressionConfig) -> Result<TrainOutcome> {
    let mut model = PredictorModel::new(config.clone())?;
    let split = split_ids(scores, config.test_fraction, config.split_seed)?;
    dataset.resolve(&split.test)?;
    let images = dataset.resolve(&split.train)?;
    let targets: Vec<f64> = split.train.iter().map(|id| scores[id]).collect();
    if let Some(bad) = targets.iter().find(|t| !(0.0..=1.0).contains(*t)) {
        return Err(Error::Data(format!("score {bad} outside [0, 1]")));
    }

    let batches = images.len().div_ceil(config.batch_size);
    let mut opt = Sgd::new(config.sgd(), config.epochs * batches)?;
    let mut order: Vec<usize> = (0..images.len()).collect();
    let mut history = Vec::with_capacity(config.epochs);
    for epoch in 0..config.epochs {
        order.shuffle(&mut seed::stream(config.seed, "shuffle", epoch as u64));
        for (b, batch) in order.chunks(config.batch_size).enumerate() {
            let inputs: Vec<ImageTensor> = batch
                .iter()
                .enumerate()
                .map(|(k, &i)| {
                    if config.augment {
                        let index = ((epoch * batches + b) * config.batch_size + k) as u64;
                        augment_for_regression(images[i], seed::derive(config.seed, "augment", index))
                    } else {
                        images[i].clone()
                    }
                })
                .collect();
            let batch_targets: Vec<f64> = batch.iter().map(|&i| targets[i]).collect();
            let mut tape = Tape::new();
            let x = tape.input(stack_images(inputs.iter())?);
            let out = model.machine.forward(&mut tape, x)?;
            let pred = tape.sigmoid(out.logits);
            let loss = tape.mse(pred, &batch_targets)?;
            let grads = tape.backward(loss)?;
            model.machine.absorb_grads(&grads, &out)?;
            opt.step(&mut model.machine.parameters_mut())?;
        }
        history.push(mse(&model, &images, &targets)?);
    }
    Ok(TrainOutcome { model, history, split })
}

/// Spearman ρ between predictions and measured scores over `ids`; `None`
/// when either side is constant.
pub fn evaluate_predictor(
    predictor: &dyn ScorePredictor,
    scores: &ScoreMap,
    dataset: &Dataset,
    ids: &[String],
) -> Result<Option<f64>> {
    if ids.is_empty() {
        return Err(Error::Usage("evaluation needs a non-empty test split".into()));
    }
    let images = dataset.resolve(ids)?;
    let truth = ids
        .iter()
        .map(|id| {
            scores
                .get(id)
                .copied()
                .ok_or_else(|| Error::Config(format!("{id} has no measured score")))
        })
        .collect::<Result<Vec<_>>>()?;
    let preds = predictor.predict_scores(&images)?;
    spearman(&preds, &truth)
}
