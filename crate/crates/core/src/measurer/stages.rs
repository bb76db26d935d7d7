use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use crate::data::{rotate, stack_images, ImageTensor, Rotation, SeenLabel};
use crate::error::{Error, Result};
use crate::metrics::{argmax, rms_calibration_error, CalibrationReport, PredictionRecord};
use crate::seed;
use crate::tensor::{rotation_loss, seen_loss, Machine, PretextMode, Sgd, Tape};

use super::config::EpisodeConfig;
use super::episode::EpisodeObserver;

const EVAL_BATCH: usize = 64;

fn softmax(row: &[f64]) -> Vec<f64> {
    let max = row.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let exps: Vec<f64> = row.iter().map(|v| (v - max).exp()).collect();
    let total: f64 = exps.iter().sum();
    exps.into_iter().map(|e| e / total).collect()
}

/// Softmax outputs of the machine for each image, evaluated in batches.
fn probabilities(machine: &Machine, images: &[&ImageTensor]) -> Result<Vec<Vec<f64>>> {
    let width = machine.head_width();
    let mut out = Vec::with_capacity(images.len());
    for chunk in images.chunks(EVAL_BATCH) {
        let logits = machine.logits(stack_images(chunk.iter().copied())?)?;
        out.extend(logits.data().chunks_exact(width).map(softmax));
    }
    Ok(out)
}

/// Two-way seen/unseen probabilities (seen first) for each image.
pub fn seen_probabilities(machine: &Machine, images: &[&ImageTensor]) -> Result<Vec<Vec<f64>>> {
    if machine.head_width() != 2 {
        return Err(Error::Config(format!(
            "seen/unseen prediction needs a 2-way head, machine has {}",
            machine.head_width()
        )));
    }
    probabilities(machine, images)
}

/// Top-1 accuracy of the rotation task over all four copies of each image.
pub fn rotation_accuracy(machine: &Machine, images: &[&ImageTensor], mode: PretextMode) -> Result<f64> {
    if images.is_empty() {
        return Err(Error::Usage("rotation accuracy of no images".into()));
    }
    let mut hits = 0usize;
    for chunk in images.chunks(EVAL_BATCH / 4) {
        let rotated = chunk
            .iter()
            .flat_map(|img| Rotation::ALL.iter().map(move |&r| rotate(img, r)))
            .collect::<Result<Vec<_>>>()?;
        let logits = machine.logits(stack_images(rotated.iter())?)?;
        for (row, logit) in logits.data().chunks_exact(machine.head_width()).enumerate() {
            let r = Rotation::ALL[row % 4];
            hits += usize::from(argmax(logit) == mode.class_of(r));
        }
    }
    Ok(hits as f64 / (4 * images.len()) as f64)
}

/// Training accuracy of the seen/unseen task.
pub fn seen_accuracy(machine: &Machine, seen: &[&ImageTensor], unseen: &[&ImageTensor]) -> Result<f64> {
    let total = seen.len() + unseen.len();
    if total == 0 {
        return Err(Error::Usage("seen accuracy of no images".into()));
    }
    let mut hits = 0;
    for (images, label) in [(seen, SeenLabel::Seen), (unseen, SeenLabel::Unseen)] {
        if images.is_empty() {
            continue;
        }
        for p in seen_probabilities(machine, images)? {
            hits += usize::from(argmax(&p) == label.index());
        }
    }
    Ok(hits as f64 / total as f64)
}

/// Stage (a): `epochs_a` passes over a seeded shuffle of `images`, one image
/// (its four rotations) per SGD step, cosine schedule over all steps.
/// Returns the final rotation accuracy over `images`.
pub fn stage_a(machine: &mut Machine, images: &[&ImageTensor], config: &EpisodeConfig, seed_value: u64) -> Result<f64> {
    let mode = config.pretext_mode;
    if machine.head_width() != mode.classes() {
        return Err(Error::Config(format!(
            "stage (a) in {mode:?} mode needs a {}-way head",
            mode.classes()
        )));
    }
    if images.is_empty() {
        return Err(Error::Usage("stage (a) without images".into()));
    }
    let mut opt = Sgd::new(config.sgd_a(), config.epochs_a * images.len())?;
    let mut rng = seed::rng(seed_value);
    let mut order: Vec<usize> = (0..images.len()).collect();
    for _ in 0..config.epochs_a {
        order.shuffle(&mut rng);
        for &i in &order {
            let mut tape = Tape::new();
            let (loss, out) = rotation_loss(machine, &mut tape, images[i], mode)?;
            let grads = tape.backward(loss)?;
            machine.absorb_grads(&grads, &out)?;
            opt.step(&mut machine.parameters_mut())?;
        }
    }
    rotation_accuracy(machine, images, mode)
}

/// Optimizer for the whole of stage (b): one cosine cycle over
/// `epochs_b · |B ∪ C|` steps.
pub fn stage_b_optimizer(config: &EpisodeConfig, pairs: usize) -> Result<Sgd> {
    Sgd::new(config.sgd_b(), config.epochs_b * 2 * pairs)
}

/// One stage-(b) epoch: a seeded shuffle of B (seen) ∪ C (unseen), one
/// un-rotated image per step, full-network fine-tuning.
#[allow(clippy::too_many_arguments)]
pub fn stage_b_epoch(
    machine: &mut Machine,
    opt: &mut Sgd,
    seen: &[&ImageTensor],
    unseen: &[&ImageTensor],
    seed_value: u64,
    epoch: usize,
    episode: usize,
    observer: &dyn EpisodeObserver,
) -> Result<()> {
    if seen.len() != unseen.len() {
        return Err(Error::Config(format!(
            "stage (b) needs balanced sets, got {} seen and {} unseen",
            seen.len(),
            unseen.len()
        )));
    }
    let mut samples: Vec<(&ImageTensor, SeenLabel)> = seen
        .iter()
        .map(|&img| (img, SeenLabel::Seen))
        .chain(unseen.iter().map(|&img| (img, SeenLabel::Unseen)))
        .collect();
    samples.shuffle(&mut seed::stream(seed_value, "stage_b_epoch", epoch as u64));
    for (img, label) in samples {
        observer.stage_b_step(episode, img.id(), label);
        let mut tape = Tape::new();
        let (loss, out) = seen_loss(machine, &mut tape, img, label)?;
        let grads = tape.backward(loss)?;
        machine.absorb_grads(&grads, &out)?;
        opt.step(&mut machine.parameters_mut())?;
    }
    Ok(())
}

/// Images the calibration error of stage (c) is measured on.
#[derive(Debug, Clone, Copy)]
pub enum CalibrationSet<'a> {
    /// Set A, all labelled seen.
    SeenOnly,
    HeldOut {
        seen: &'a [&'a ImageTensor],
        unseen: &'a [&'a ImageTensor],
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StageCOutcome {
    /// Verdict per image of A, in A order.
    pub verdicts: Vec<(String, SeenLabel)>,
    pub calibration: CalibrationReport,
}

/// Stage (c): gradient-free seen/unseen verdicts on A plus calibration.
pub fn stage_c(machine: &Machine, set_a: &[&ImageTensor], calibration: CalibrationSet<'_>) -> Result<StageCOutcome> {
    let probs = seen_probabilities(machine, set_a)?;
    let mut a_records = Vec::with_capacity(set_a.len());
    for (img, p) in set_a.iter().zip(probs) {
        a_records.push(PredictionRecord::new(img.id(), p, Some(SeenLabel::Seen.index()))?);
    }
    let verdicts = a_records
        .iter()
        .map(|r| (r.image_id.clone(), SeenLabel::from_index(r.predicted_class)))
        .collect();
    let calibration = match calibration {
        CalibrationSet::SeenOnly => rms_calibration_error(&a_records)?,
        CalibrationSet::HeldOut { seen, unseen } => {
            let mut records = Vec::with_capacity(seen.len() + unseen.len());
            for (images, label) in [(seen, SeenLabel::Seen), (unseen, SeenLabel::Unseen)] {
                if images.is_empty() {
                    continue;
                }
                for (img, p) in images.iter().zip(seen_probabilities(machine, images)?) {
                    records.push(PredictionRecord::new(img.id(), p, Some(label.index()))?);
                }
            }
            rms_calibration_error(&records)?
        }
    };
    Ok(StageCOutcome {
        verdicts,
        calibration,
    })
}
