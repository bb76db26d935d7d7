use serde::{Deserialize, Serialize};

use crate::data::{rotate, stack_images, ImageTensor, Rotation, SeenLabel};
use crate::error::{Error, Result};

use super::machine::{Machine, MachineOutput};
use super::tape::{Tape, Var};
use super::Tensor;

/// Self-supervised rotation task used to let a machine observe images.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PretextMode {
    /// Predict which of 0°/90°/180°/270° was applied.
    #[default]
    FourWay,
    /// {0°, 90°} versus {180°, 270°}, for low-capacity machines.
    Binary,
}

impl PretextMode {
    pub fn classes(self) -> usize {
        match self {
            PretextMode::FourWay => 4,
            PretextMode::Binary => 2,
        }
    }

    pub fn class_of(self, rotation: Rotation) -> usize {
        match self {
            PretextMode::FourWay => rotation.index(),
            PretextMode::Binary => rotation.index() / 2,
        }
    }
}

/// Batch-mean cross-entropy of `logits` against one-hot rows.
pub fn softmax_cross_entropy(tape: &mut Tape, logits: Var, one_hot: &Tensor) -> Result<Var> {
    tape.softmax_cross_entropy(logits, one_hot)
}

/// One-hot targets for the four rotated copies, in [`Rotation::ALL`] order.
pub fn rotation_targets(mode: PretextMode) -> Tensor {
    let classes = mode.classes();
    let mut data = vec![0.0; 4 * classes];
    for (row, r) in Rotation::ALL.iter().enumerate() {
        data[row * classes + mode.class_of(*r)] = 1.0;
    }
    Tensor::new(vec![4, classes], data).expect("4×classes")
}

fn check_head(machine: &Machine, expected: usize) -> Result<()> {
    if machine.head_width() != expected {
        return Err(Error::Config(format!(
            "head width {} but the task has {expected} classes",
            machine.head_width()
        )));
    }
    Ok(())
}

/// Mean cross-entropy over the four rotated copies of `image`, evaluated as
/// one batch of four.
pub fn rotation_loss(
    machine: &Machine,
    tape: &mut Tape,
    image: &ImageTensor,
    mode: PretextMode,
) -> Result<(Var, MachineOutput)> {
    check_head(machine, mode.classes())?;
    let rotated = Rotation::ALL
        .iter()
        .map(|&r| rotate(image, r))
        .collect::<Result<Vec<_>>>()?;
    let batch = stack_images(rotated.iter())?;
    let x = tape.input(batch);
    let out = machine.forward(tape, x)?;
    let loss = tape.softmax_cross_entropy(out.logits, &rotation_targets(mode))?;
    Ok((loss, out))
}

/// Two-way seen/unseen cross-entropy for one un-rotated image.
pub fn seen_loss(
    machine: &Machine,
    tape: &mut Tape,
    image: &ImageTensor,
    label: SeenLabel,
) -> Result<(Var, MachineOutput)> {
    check_head(machine, 2)?;
    let x = tape.input(stack_images(std::iter::once(image))?);
    let out = machine.forward(tape, x)?;
    let mut target = Tensor::zeros(vec![1, 2]);
    target.data_mut()[label.index()] = 1.0;
    let loss = tape.softmax_cross_entropy(out.logits, &target)?;
    Ok((loss, out))
}
