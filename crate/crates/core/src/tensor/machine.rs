use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

use super::tape::{Gradients, Tape, Var};
use super::Tensor;

/// Architecture family of a machine.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MachineKind {
    /// Pixels straight into the head; no hidden layers.
    Linear,
    /// Fully connected hidden layers with ReLU.
    Mlp,
    /// Conv3×3 → ReLU → MaxPool2 stages, then dense layers.
    SmallCnn,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct InputShape {
    pub channels: usize,
    pub height: usize,
    pub width: usize,
}

impl InputShape {
    pub fn new(channels: usize, height: usize, width: usize) -> Self {
        Self {
            channels,
            height,
            width,
        }
    }

    pub fn numel(&self) -> usize {
        self.channels * self.height * self.width
    }
}

/// Declarative description of a machine's backbone.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct MachineSpec {
    pub kind: MachineKind,
    pub input: InputShape,
    /// Widths of the dense hidden layers (after any convolutions).
    #[serde(default)]
    pub hidden: Vec<usize>,
    /// Output channels of each conv stage (small_cnn only).
    #[serde(default)]
    pub conv_channels: Vec<usize>,
}

impl MachineSpec {
    pub fn linear(input: InputShape) -> Self {
        Self {
            kind: MachineKind::Linear,
            input,
            hidden: Vec::new(),
            conv_channels: Vec::new(),
        }
    }

    pub fn mlp(input: InputShape, hidden: Vec<usize>) -> Self {
        Self {
            kind: MachineKind::Mlp,
            input,
            hidden,
            conv_channels: Vec::new(),
        }
    }

    /// conv3×3(16) → relu → pool → conv3×3(32) → relu → pool → linear(64) → relu.
    pub fn small_cnn(input: InputShape) -> Self {
        Self {
            kind: MachineKind::SmallCnn,
            input,
            hidden: vec![64],
            conv_channels: vec![16, 32],
        }
    }

    pub fn validate(&self) -> Result<()> {
        let InputShape {
            channels,
            height,
            width,
        } = self.input;
        if channels == 0 || height == 0 || width == 0 {
            return Err(Error::Config(format!("empty input shape {:?}", self.input)));
        }
        if self.hidden.iter().chain(&self.conv_channels).any(|&w| w == 0) {
            return Err(Error::Config("layer widths must be positive".into()));
        }
        match self.kind {
            MachineKind::Linear => {
                if !self.hidden.is_empty() || !self.conv_channels.is_empty() {
                    return Err(Error::Config("linear machines have no hidden layers".into()));
                }
            }
            MachineKind::Mlp => {
                if !self.conv_channels.is_empty() {
                    return Err(Error::Config("mlp machines have no convolutions".into()));
                }
                if self.hidden.is_empty() {
                    return Err(Error::Config("mlp needs at least one hidden layer".into()));
                }
            }
            MachineKind::SmallCnn => {
                if self.conv_channels.is_empty() {
                    return Err(Error::Config("small_cnn needs at least one conv stage".into()));
                }
                let stages = self.conv_channels.len() as u32;
                if height >> stages == 0 || width >> stages == 0 {
                    return Err(Error::Config(format!(
                        "{height}×{width} input is too small for {stages} pooling stages"
                    )));
                }
            }
        }
        Ok(())
    }

    /// Number of features entering the head.
    pub fn feature_width(&self) -> usize {
        if let Some(&last) = self.hidden.last() {
            return last;
        }
        self.flat_width()
    }

    /// Number of features after the convolutional trunk is flattened.
    fn flat_width(&self) -> usize {
        match self.kind {
            MachineKind::SmallCnn => {
                let stages = self.conv_channels.len() as u32;
                let last = *self.conv_channels.last().unwrap_or(&self.input.channels);
                last * (self.input.height >> stages) * (self.input.width >> stages)
            }
            _ => self.input.numel(),
        }
    }

    /// Short human-readable identifier, free of commas.
    pub fn descriptor(&self) -> String {
        let join = |v: &[usize]| {
            v.iter()
                .map(usize::to_string)
                .collect::<Vec<_>>()
                .join("-")
        };
        let InputShape {
            channels,
            height,
            width,
        } = self.input;
        let shape = format!("{channels}x{height}x{width}");
        match self.kind {
            MachineKind::Linear => format!("linear@{shape}"),
            MachineKind::Mlp => format!("mlp[{}]@{shape}", join(&self.hidden)),
            MachineKind::SmallCnn => format!(
                "small_cnn[c{};h{}]@{shape}",
                join(&self.conv_channels),
                join(&self.hidden)
            ),
        }
    }
}

/// Fully connected layer; `weight: [out, in]`, `bias: [out]`.
#[derive(Debug, Clone, PartialEq)]
pub struct Dense {
    pub weight: Tensor,
    pub bias: Tensor,
}

impl Dense {
    fn he_uniform(in_features: usize, out_features: usize, rng: &mut impl Rng) -> Self {
        let bound = (6.0 / in_features as f64).sqrt();
        let data = (0..in_features * out_features)
            .map(|_| rng.gen_range(-bound..bound))
            .collect();
        Self {
            weight: Tensor::new(vec![out_features, in_features], data)
                .expect("sizes agree")
                .tracked(),
            bias: Tensor::zeros(vec![out_features]).tracked(),
        }
    }

    pub fn out_features(&self) -> usize {
        self.weight.shape()[0]
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Layer {
    Conv { weight: Tensor, bias: Tensor },
    Dense(Dense),
    Relu,
    MaxPool2,
    Flatten,
}

/// The bound forward pass of a machine.
#[derive(Debug, Clone)]
pub struct MachineOutput {
    pub logits: Var,
    /// Parameter nodes in [`Machine::parameters`] order.
    pub params: Vec<Var>,
}

/// A differentiable model: a backbone plus a swappable linear head.
#[derive(Debug, Clone, PartialEq)]
pub struct Machine {
    spec: MachineSpec,
    backbone: Vec<Layer>,
    head: Dense,
}

impl Machine {
    /// He-uniform weights, zero biases.
    pub fn new(spec: MachineSpec, head_width: usize, rng: &mut impl Rng) -> Result<Self> {
        spec.validate()?;
        if head_width == 0 {
            return Err(Error::Config("head width must be positive".into()));
        }
        let mut backbone = Vec::new();
        if spec.kind == MachineKind::SmallCnn {
            let mut channels = spec.input.channels;
            for &out in &spec.conv_channels {
                let fan_in = channels * 9;
                let bound = (6.0 / fan_in as f64).sqrt();
                let data = (0..out * fan_in)
                    .map(|_| rng.gen_range(-bound..bound))
                    .collect();
                backbone.push(Layer::Conv {
                    weight: Tensor::new(vec![out, channels, 3, 3], data)?.tracked(),
                    bias: Tensor::zeros(vec![out]).tracked(),
                });
                backbone.push(Layer::Relu);
                backbone.push(Layer::MaxPool2);
                channels = out;
            }
        }
        backbone.push(Layer::Flatten);
        let mut width = spec.flat_width();
        for &h in &spec.hidden {
            backbone.push(Layer::Dense(Dense::he_uniform(width, h, rng)));
            backbone.push(Layer::Relu);
            width = h;
        }
        let head = Dense::he_uniform(width, head_width, rng);
        Ok(Self {
            spec,
            backbone,
            head,
        })
    }

    pub fn spec(&self) -> &MachineSpec {
        &self.spec
    }

    pub fn backbone(&self) -> &[Layer] {
        &self.backbone
    }

    pub fn head(&self) -> &Dense {
        &self.head
    }

    pub fn head_width(&self) -> usize {
        self.head.out_features()
    }

    /// Installs a freshly initialised head; the backbone is untouched.
    pub fn replace_head(&mut self, width: usize, rng: &mut impl Rng) -> Result<()> {
        if width == 0 {
            return Err(Error::Config("head width must be positive".into()));
        }
        self.head = Dense::he_uniform(self.spec.feature_width(), width, rng);
        Ok(())
    }

    /// Overwrites the head with explicit values.
    pub fn set_head(&mut self, head: Dense) -> Result<()> {
        if head.weight.shape() != [head.out_features(), self.spec.feature_width()]
            || head.bias.shape() != [head.out_features()]
        {
            return Err(Error::Shape(format!(
                "head {:?}/{:?} does not fit {} features",
                head.weight.shape(),
                head.bias.shape(),
                self.spec.feature_width()
            )));
        }
        self.head = head;
        Ok(())
    }

    pub fn parameter_count(&self) -> usize {
        self.parameters().iter().map(|t| t.numel()).sum()
    }

    /// Backbone parameters followed by head weight and bias.
    pub fn parameters(&self) -> Vec<&Tensor> {
        let mut out = self.backbone_parameters();
        out.push(&self.head.weight);
        out.push(&self.head.bias);
        out
    }

    pub fn backbone_parameters(&self) -> Vec<&Tensor> {
        let mut out = Vec::new();
        for layer in &self.backbone {
            match layer {
                Layer::Conv { weight, bias } | Layer::Dense(Dense { weight, bias }) => {
                    out.push(weight);
                    out.push(bias);
                }
                _ => {}
            }
        }
        out
    }

    pub fn parameters_mut(&mut self) -> Vec<&mut Tensor> {
        let mut out = Vec::new();
        for layer in &mut self.backbone {
            match layer {
                Layer::Conv { weight, bias } | Layer::Dense(Dense { weight, bias }) => {
                    out.push(weight);
                    out.push(bias);
                }
                _ => {}
            }
        }
        out.push(&mut self.head.weight);
        out.push(&mut self.head.bias);
        out
    }

    /// Stable parameter names, aligned with [`Machine::parameters`].
    pub fn parameter_names(&self) -> Vec<String> {
        let mut out = Vec::new();
        for (i, layer) in self.backbone.iter().enumerate() {
            if matches!(layer, Layer::Conv { .. } | Layer::Dense(_)) {
                out.push(format!("backbone.{i}.weight"));
                out.push(format!("backbone.{i}.bias"));
            }
        }
        out.push("head.weight".into());
        out.push("head.bias".into());
        out
    }

    /// Records the forward pass of `input: [batch, C, H, W]` on `tape`.
    pub fn forward(&self, tape: &mut Tape, input: Var) -> Result<MachineOutput> {
        let InputShape {
            channels,
            height,
            width,
        } = self.spec.input;
        match tape.shape(input) {
            [_, c, h, w] if (*c, *h, *w) == (channels, height, width) => {}
            s => {
                return Err(Error::Config(format!(
                    "input {s:?} does not match machine input {channels}×{height}×{width}"
                )))
            }
        }
        let mut params = Vec::new();
        let mut x = input;
        for layer in &self.backbone {
            x = match layer {
                Layer::Conv { weight, bias } => {
                    let (w, b) = (tape.param(weight), tape.param(bias));
                    params.extend([w, b]);
                    tape.conv2d(x, w, b)?
                }
                Layer::Dense(Dense { weight, bias }) => {
                    let (w, b) = (tape.param(weight), tape.param(bias));
                    params.extend([w, b]);
                    tape.linear(x, w, b)?
                }
                Layer::Relu => tape.relu(x),
                Layer::MaxPool2 => tape.max_pool2(x)?,
                Layer::Flatten => tape.flatten(x)?,
            };
        }
        let (w, b) = (tape.param(&self.head.weight), tape.param(&self.head.bias));
        params.extend([w, b]);
        let logits = tape.linear(x, w, b)?;
        Ok(MachineOutput { logits, params })
    }

    /// Copies gradients from a backward pass into the parameter tensors.
    pub fn absorb_grads(&mut self, grads: &Gradients, output: &MachineOutput) -> Result<()> {
        let mut params = self.parameters_mut();
        if params.len() != output.params.len() {
            return Err(Error::Usage(
                "forward output belongs to a different machine layout".into(),
            ));
        }
        for (param, var) in params.iter_mut().zip(&output.params) {
            let grad = grads
                .get(*var)
                .map(<[f64]>::to_vec)
                .unwrap_or_else(|| vec![0.0; param.numel()]);
            param.set_grad(grad)?;
        }
        Ok(())
    }

    /// Logits for a batch, without keeping the tape.
    pub fn logits(&self, batch: Tensor) -> Result<Tensor> {
        let mut tape = Tape::new();
        let x = tape.input(batch);
        let out = self.forward(&mut tape, x)?;
        Ok(tape.to_tensor(out.logits))
    }

    /// Replaces all parameters from `(name, tensor)` pairs, e.g. a checkpoint.
    pub fn load_parameters(&mut self, named: &[(String, Tensor)]) -> Result<()> {
        let names = self.parameter_names();
        if named.len() != names.len() {
            return Err(Error::Config(format!(
                "checkpoint has {} tensors, machine expects {}",
                named.len(),
                names.len()
            )));
        }
        let mut params = self.parameters_mut();
        for ((name, param), (got_name, tensor)) in names.iter().zip(params.iter_mut()).zip(named) {
            if name != got_name || param.shape() != tensor.shape() {
                return Err(Error::Config(format!(
                    "checkpoint tensor {got_name} {:?} does not match {name} {:?}",
                    tensor.shape(),
                    param.shape()
                )));
            }
            param.data_mut().copy_from_slice(tensor.data());
        }
        Ok(())
    }

    pub fn named_parameters(&self) -> Vec<(String, Tensor)> {
        self.parameter_names()
            .into_iter()
            .zip(self.parameters().into_iter().cloned())
            .collect()
    }
}
