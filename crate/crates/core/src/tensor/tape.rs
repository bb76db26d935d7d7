use crate::error::{Error, Result};

use super::Tensor;

/// Handle to a node recorded on a [`Tape`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Var(usize);

#[derive(Debug, Clone, Copy)]
struct ConvGeom {
    batch: usize,
    in_channels: usize,
    out_channels: usize,
    height: usize,
    width: usize,
    kernel: usize,
}

#[derive(Debug)]
enum Op {
    Leaf,
    Add(Var, Var),
    Mul(Var, Var),
    Square(Var),
    Sum(Var),
    Relu(Var),
    Sigmoid(Var),
    Reshape(Var),
    Linear {
        input: Var,
        weight: Var,
        bias: Var,
        batch: usize,
        in_features: usize,
        out_features: usize,
    },
    Conv2d {
        input: Var,
        weight: Var,
        bias: Var,
        geom: ConvGeom,
    },
    MaxPool2 {
        input: Var,
        argmax: Vec<usize>,
    },
    SoftmaxCrossEntropy {
        logits: Var,
        targets: Vec<f64>,
        probs: Vec<f64>,
        batch: usize,
        classes: usize,
    },
    MeanSquaredError {
        input: Var,
        targets: Vec<f64>,
    },
}

#[derive(Debug)]
struct Node {
    shape: Vec<usize>,
    value: Vec<f64>,
    op: Op,
    tracked: bool,
}

/// Records a single forward computation for reverse-mode differentiation.
#[derive(Debug, Default)]
pub struct Tape {
    nodes: Vec<Node>,
}

/// Gradients of a scalar with respect to every tracked node of a tape.
#[derive(Debug)]
pub struct Gradients {
    grads: Vec<Option<Vec<f64>>>,
}

impl Gradients {
    /// `None` when the node is untracked or does not influence the loss.
    pub fn get(&self, var: Var) -> Option<&[f64]> {
        self.grads.get(var.0).and_then(|g| g.as_deref())
    }
}

impl Tape {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    fn push(&mut self, shape: Vec<usize>, value: Vec<f64>, op: Op, tracked: bool) -> Var {
        debug_assert_eq!(shape.iter().product::<usize>(), value.len());
        self.nodes.push(Node {
            shape,
            value,
            op,
            tracked,
        });
        Var(self.nodes.len() - 1)
    }

    fn node(&self, v: Var) -> &Node {
        &self.nodes[v.0]
    }

    /// Untracked leaf (input data).
    pub fn input(&mut self, tensor: Tensor) -> Var {
        let shape = tensor.shape().to_vec();
        self.push(shape, tensor.into_data(), Op::Leaf, false)
    }

    /// Tracked leaf; gradients flow back to it.
    pub fn variable(&mut self, tensor: Tensor) -> Var {
        let shape = tensor.shape().to_vec();
        self.push(shape, tensor.into_data(), Op::Leaf, true)
    }

    /// Tracked copy of a parameter tensor.
    pub fn param(&mut self, tensor: &Tensor) -> Var {
        self.push(
            tensor.shape().to_vec(),
            tensor.data().to_vec(),
            Op::Leaf,
            true,
        )
    }

    pub fn value(&self, v: Var) -> &[f64] {
        &self.node(v).value
    }

    pub fn shape(&self, v: Var) -> &[usize] {
        &self.node(v).shape
    }

    pub fn to_tensor(&self, v: Var) -> Tensor {
        let node = self.node(v);
        Tensor::new(node.shape.clone(), node.value.clone()).expect("tape nodes are well-formed")
    }

    fn tracked(&self, vars: &[Var]) -> bool {
        vars.iter().any(|v| self.node(*v).tracked)
    }

    fn same_shape(&self, a: Var, b: Var, what: &str) -> Result<()> {
        if self.shape(a) != self.shape(b) {
            return Err(Error::Shape(format!(
                "{what}: {:?} vs {:?}",
                self.shape(a),
                self.shape(b)
            )));
        }
        Ok(())
    }

    pub fn add(&mut self, a: Var, b: Var) -> Result<Var> {
        self.same_shape(a, b, "add")?;
        let value = self
            .value(a)
            .iter()
            .zip(self.value(b))
            .map(|(x, y)| x + y)
            .collect();
        let shape = self.shape(a).to_vec();
        let tracked = self.tracked(&[a, b]);
        Ok(self.push(shape, value, Op::Add(a, b), tracked))
    }

    pub fn mul(&mut self, a: Var, b: Var) -> Result<Var> {
        self.same_shape(a, b, "mul")?;
        let value = self
            .value(a)
            .iter()
            .zip(self.value(b))
            .map(|(x, y)| x * y)
            .collect();
        let shape = self.shape(a).to_vec();
        let tracked = self.tracked(&[a, b]);
        Ok(self.push(shape, value, Op::Mul(a, b), tracked))
    }

    pub fn square(&mut self, a: Var) -> Var {
        let value = self.value(a).iter().map(|x| x * x).collect();
        let shape = self.shape(a).to_vec();
        let tracked = self.tracked(&[a]);
        self.push(shape, value, Op::Square(a), tracked)
    }

    /// Sum of all elements, as a one-element tensor.
    pub fn sum(&mut self, a: Var) -> Var {
        let total = self.value(a).iter().sum();
        let tracked = self.tracked(&[a]);
        self.push(vec![1], vec![total], Op::Sum(a), tracked)
    }

    pub fn relu(&mut self, a: Var) -> Var {
        let value = self.value(a).iter().map(|&x| x.max(0.0)).collect();
        let shape = self.shape(a).to_vec();
        let tracked = self.tracked(&[a]);
        self.push(shape, value, Op::Relu(a), tracked)
    }

    pub fn sigmoid(&mut self, a: Var) -> Var {
        let value = self.value(a).iter().map(|&x| sigmoid(x)).collect();
        let shape = self.shape(a).to_vec();
        let tracked = self.tracked(&[a]);
        self.push(shape, value, Op::Sigmoid(a), tracked)
    }

    pub fn reshape(&mut self, a: Var, shape: Vec<usize>) -> Result<Var> {
        if shape.iter().product::<usize>() != self.value(a).len() {
            return Err(Error::Shape(format!(
                "cannot reshape {:?} to {shape:?}",
                self.shape(a)
            )));
        }
        let value = self.value(a).to_vec();
        let tracked = self.tracked(&[a]);
        Ok(self.push(shape, value, Op::Reshape(a), tracked))
    }

    /// Collapses every dimension after the first.
    pub fn flatten(&mut self, a: Var) -> Result<Var> {
        let shape = self.shape(a);
        let batch = shape[0];
        let rest = shape[1..].iter().product::<usize>().max(1);
        self.reshape(a, vec![batch, rest])
    }

    /// Affine map `input · weightᵀ + bias` with `input: [batch, in]`,
    /// `weight: [out, in]`, `bias: [out]`.
    pub fn linear(&mut self, input: Var, weight: Var, bias: Var) -> Result<Var> {
        let (batch, in_features) = match self.shape(input) {
            [b, f] => (*b, *f),
            s => return Err(Error::Shape(format!("linear input must be 2-d, got {s:?}"))),
        };
        let out_features = match self.shape(weight) {
            [o, i] if *i == in_features => *o,
            s => {
                return Err(Error::Shape(format!(
                    "linear weight {s:?} does not accept {in_features} features"
                )))
            }
        };
        if self.shape(bias) != [out_features] {
            return Err(Error::Shape(format!(
                "linear bias {:?}, expected [{out_features}]",
                self.shape(bias)
            )));
        }
        let x = self.value(input);
        let w = self.value(weight);
        let b = self.value(bias);
        let mut out = vec![0.0; batch * out_features];
        for (row, x_row) in out.chunks_exact_mut(out_features).zip(x.chunks_exact(in_features)) {
            for ((o, w_row), bias) in row.iter_mut().zip(w.chunks_exact(in_features)).zip(b) {
                *o = bias + dot(w_row, x_row);
            }
        }
        let tracked = self.tracked(&[input, weight, bias]);
        Ok(self.push(
            vec![batch, out_features],
            out,
            Op::Linear {
                input,
                weight,
                bias,
                batch,
                in_features,
                out_features,
            },
            tracked,
        ))
    }

    /// Stride-1 convolution with an odd square kernel and zero "same"
    /// padding. `input: [B, C, H, W]`, `weight: [O, C, K, K]`, `bias: [O]`.
    pub fn conv2d(&mut self, input: Var, weight: Var, bias: Var) -> Result<Var> {
        let (batch, in_channels, height, width) = match self.shape(input) {
            [b, c, h, w] => (*b, *c, *h, *w),
            s => return Err(Error::Shape(format!("conv input must be 4-d, got {s:?}"))),
        };
        let (out_channels, kernel) = match self.shape(weight) {
            [o, c, k1, k2] if *c == in_channels && k1 == k2 && k1 % 2 == 1 => (*o, *k1),
            s => {
                return Err(Error::Shape(format!(
                    "conv weight {s:?} incompatible with {in_channels} input channels"
                )))
            }
        };
        if self.shape(bias) != [out_channels] {
            return Err(Error::Shape(format!(
                "conv bias {:?}, expected [{out_channels}]",
                self.shape(bias)
            )));
        }
        let geom = ConvGeom {
            batch,
            in_channels,
            out_channels,
            height,
            width,
            kernel,
        };
        let out = conv_forward(
            &geom,
            self.value(input),
            self.value(weight),
            self.value(bias),
        );
        let tracked = self.tracked(&[input, weight, bias]);
        Ok(self.push(
            vec![batch, out_channels, height, width],
            out,
            Op::Conv2d {
                input,
                weight,
                bias,
                geom,
            },
            tracked,
        ))
    }

    /// 2×2 max pooling with stride 2; trailing odd rows/columns are dropped.
    /// Ties go to the first element in row-major window order.
    pub fn max_pool2(&mut self, input: Var) -> Result<Var> {
        let (batch, channels, height, width) = match self.shape(input) {
            [b, c, h, w] => (*b, *c, *h, *w),
            s => return Err(Error::Shape(format!("pool input must be 4-d, got {s:?}"))),
        };
        let (oh, ow) = (height / 2, width / 2);
        if oh == 0 || ow == 0 {
            return Err(Error::Shape(format!(
                "cannot pool a {height}×{width} plane"
            )));
        }
        let x = self.value(input);
        let mut out = Vec::with_capacity(batch * channels * oh * ow);
        let mut argmax = Vec::with_capacity(batch * channels * oh * ow);
        for plane in 0..batch * channels {
            let base = plane * height * width;
            for y in 0..oh {
                for xx in 0..ow {
                    let mut best = base + 2 * y * width + 2 * xx;
                    for (dy, dx) in [(0, 1), (1, 0), (1, 1)] {
                        let idx = base + (2 * y + dy) * width + 2 * xx + dx;
                        if x[idx] > x[best] {
                            best = idx;
                        }
                    }
                    out.push(x[best]);
                    argmax.push(best);
                }
            }
        }
        let tracked = self.tracked(&[input]);
        Ok(self.push(
            vec![batch, channels, oh, ow],
            out,
            Op::MaxPool2 { input, argmax },
            tracked,
        ))
    }

    /// Batch-mean of `−Σ targets · log softmax(logits)`, log-sum-exp
    /// stabilised. `logits` and `targets` are `[batch, classes]`.
    pub fn softmax_cross_entropy(&mut self, logits: Var, targets: &Tensor) -> Result<Var> {
        let (batch, classes) = match self.shape(logits) {
            [b, c] => (*b, *c),
            s => return Err(Error::Shape(format!("logits must be 2-d, got {s:?}"))),
        };
        if targets.shape() != [batch, classes] {
            return Err(Error::Shape(format!(
                "targets {:?} vs logits {:?}",
                targets.shape(),
                self.shape(logits)
            )));
        }
        let z = self.value(logits);
        if let Some(bad) = z.iter().find(|v| !v.is_finite()) {
            return Err(Error::Numeric(format!("non-finite logit {bad}")));
        }
        for row in targets.data().chunks_exact(classes) {
            let total: f64 = row.iter().sum();
            if row.iter().any(|&t| t.is_nan() || t < 0.0) || (total - 1.0).abs() > 1e-9 {
                return Err(Error::Usage(format!(
                    "target rows must be distributions, got {row:?}"
                )));
            }
        }
        let mut probs = vec![0.0; batch * classes];
        let mut loss = 0.0;
        for ((zr, tr), pr) in z
            .chunks_exact(classes)
            .zip(targets.data().chunks_exact(classes))
            .zip(probs.chunks_exact_mut(classes))
        {
            let max = zr.iter().copied().fold(f64::NEG_INFINITY, f64::max);
            let mut denom = 0.0;
            for (p, &v) in pr.iter_mut().zip(zr) {
                *p = (v - max).exp();
                denom += *p;
            }
            let lse = max + denom.ln();
            for p in pr.iter_mut() {
                *p /= denom;
            }
            loss += zr.iter().zip(tr).map(|(&v, &t)| t * (lse - v)).sum::<f64>();
        }
        loss /= batch as f64;
        let tracked = self.tracked(&[logits]);
        Ok(self.push(
            vec![1],
            vec![loss],
            Op::SoftmaxCrossEntropy {
                logits,
                targets: targets.data().to_vec(),
                probs,
                batch,
                classes,
            },
            tracked,
        ))
    }

    /// Mean of squared differences over all elements.
    pub fn mse(&mut self, input: Var, targets: &[f64]) -> Result<Var> {
        if targets.len() != self.value(input).len() {
            return Err(Error::Shape(format!(
                "{} targets for {:?}",
                targets.len(),
                self.shape(input)
            )));
        }
        let n = targets.len() as f64;
        let loss = self
            .value(input)
            .iter()
            .zip(targets)
            .map(|(p, t)| (p - t) * (p - t))
            .sum::<f64>()
            / n;
        let tracked = self.tracked(&[input]);
        Ok(self.push(
            vec![1],
            vec![loss],
            Op::MeanSquaredError {
                input,
                targets: targets.to_vec(),
            },
            tracked,
        ))
    }

    /// Reverse pass from a scalar node.
    pub fn backward(&self, loss: Var) -> Result<Gradients> {
        let node = self.node(loss);
        if node.value.len() != 1 {
            return Err(Error::Usage(format!(
                "backward needs a scalar, got shape {:?}",
                node.shape
            )));
        }
        if !node.tracked {
            return Err(Error::Usage(
                "backward on a value that depends on no tracked tensor".into(),
            ));
        }
        let mut grads: Vec<Option<Vec<f64>>> = (0..self.nodes.len()).map(|_| None).collect();
        grads[loss.0] = Some(vec![1.0]);

        for i in (0..=loss.0).rev() {
            let node = &self.nodes[i];
            if !node.tracked {
                continue;
            }
            let Some(g) = grads[i].take() else { continue };
            self.propagate(node, &g, &mut grads);
            grads[i] = Some(g);
        }
        Ok(Gradients { grads })
    }

    fn propagate(&self, node: &Node, g: &[f64], grads: &mut [Option<Vec<f64>>]) {
        match &node.op {
            Op::Leaf => {}
            Op::Add(a, b) => {
                for v in [*a, *b] {
                    self.accumulate(grads, v, |acc| add_into(acc, g));
                }
            }
            Op::Mul(a, b) => {
                let (va, vb) = (self.value(*a), self.value(*b));
                self.accumulate(grads, *a, |acc| {
                    for ((d, gi), y) in acc.iter_mut().zip(g).zip(vb) {
                        *d += gi * y;
                    }
                });
                self.accumulate(grads, *b, |acc| {
                    for ((d, gi), x) in acc.iter_mut().zip(g).zip(va) {
                        *d += gi * x;
                    }
                });
            }
            Op::Square(a) => {
                let va = self.value(*a);
                self.accumulate(grads, *a, |acc| {
                    for ((d, gi), x) in acc.iter_mut().zip(g).zip(va) {
                        *d += 2.0 * x * gi;
                    }
                });
            }
            Op::Sum(a) => {
                self.accumulate(grads, *a, |acc| acc.iter_mut().for_each(|d| *d += g[0]));
            }
            Op::Relu(a) => {
                let va = self.value(*a);
                self.accumulate(grads, *a, |acc| {
                    for ((d, gi), x) in acc.iter_mut().zip(g).zip(va) {
                        if *x > 0.0 {
                            *d += gi;
                        }
                    }
                });
            }
            Op::Sigmoid(a) => {
                let out = &node.value;
                self.accumulate(grads, *a, |acc| {
                    for ((d, gi), s) in acc.iter_mut().zip(g).zip(out) {
                        *d += gi * s * (1.0 - s);
                    }
                });
            }
            Op::Reshape(a) => self.accumulate(grads, *a, |acc| add_into(acc, g)),
            Op::Linear {
                input,
                weight,
                bias,
                batch,
                in_features,
                out_features,
            } => {
                let (x, w) = (self.value(*input), self.value(*weight));
                let (inf, outf) = (*in_features, *out_features);
                self.accumulate(grads, *weight, |gw| {
                    for b in 0..*batch {
                        let x_row = &x[b * inf..(b + 1) * inf];
                        for o in 0..outf {
                            axpy(g[b * outf + o], x_row, &mut gw[o * inf..(o + 1) * inf]);
                        }
                    }
                });
                self.accumulate(grads, *bias, |gb| {
                    for g_row in g.chunks_exact(outf) {
                        add_into(gb, g_row);
                    }
                });
                self.accumulate(grads, *input, |gx| {
                    for b in 0..*batch {
                        let gx_row = &mut gx[b * inf..(b + 1) * inf];
                        for o in 0..outf {
                            axpy(g[b * outf + o], &w[o * inf..(o + 1) * inf], gx_row);
                        }
                    }
                });
            }
            Op::Conv2d {
                input,
                weight,
                bias,
                geom,
            } => {
                let (x, w) = (self.value(*input), self.value(*weight));
                let hw = geom.height * geom.width;
                self.accumulate(grads, *bias, |gb| {
                    for (plane, gplane) in g.chunks_exact(hw).enumerate() {
                        gb[plane % geom.out_channels] += gplane.iter().sum::<f64>();
                    }
                });
                self.accumulate(grads, *weight, |gw| conv_backward_weight(geom, x, g, gw));
                self.accumulate(grads, *input, |gx| conv_backward_input(geom, w, g, gx));
            }
            Op::MaxPool2 { input, argmax } => {
                self.accumulate(grads, *input, |acc| {
                    for (gi, &idx) in g.iter().zip(argmax) {
                        acc[idx] += gi;
                    }
                });
            }
            Op::SoftmaxCrossEntropy {
                logits,
                targets,
                probs,
                batch,
                classes,
            } => {
                let scale = g[0] / *batch as f64;
                self.accumulate(grads, *logits, |acc| {
                    for ((d, p), t) in acc
                        .chunks_exact_mut(*classes)
                        .zip(probs.chunks_exact(*classes))
                        .zip(targets.chunks_exact(*classes))
                    {
                        let mass: f64 = t.iter().sum();
                        for c in 0..*classes {
                            d[c] += scale * (p[c] * mass - t[c]);
                        }
                    }
                });
            }
            Op::MeanSquaredError { input, targets } => {
                let pred = self.value(*input);
                let scale = 2.0 * g[0] / targets.len() as f64;
                self.accumulate(grads, *input, |acc| {
                    for ((d, p), t) in acc.iter_mut().zip(pred).zip(targets) {
                        *d += scale * (p - t);
                    }
                });
            }
        }
    }

    fn accumulate(
        &self,
        grads: &mut [Option<Vec<f64>>],
        v: Var,
        f: impl FnOnce(&mut [f64]),
    ) {
        if !self.node(v).tracked {
            return;
        }
        let len = self.node(v).value.len();
        let slot = grads[v.0].get_or_insert_with(|| vec![0.0; len]);
        f(slot);
    }
}

pub fn sigmoid(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}

#[inline]
fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

#[inline]
fn axpy(alpha: f64, x: &[f64], y: &mut [f64]) {
    for (yi, xi) in y.iter_mut().zip(x) {
        *yi += alpha * xi;
    }
}

#[inline]
fn add_into(acc: &mut [f64], g: &[f64]) {
    for (a, b) in acc.iter_mut().zip(g) {
        *a += b;
    }
}

/// Valid output range along one axis for kernel offset `delta`.
#[inline]
fn span(len: usize, delta: isize) -> (usize, usize) {
    let lo = (-delta).max(0) as usize;
    let hi = (len as isize - delta).min(len as isize).max(0) as usize;
    (lo.min(hi), hi)
}

fn conv_forward(geom: &ConvGeom, x: &[f64], w: &[f64], bias: &[f64]) -> Vec<f64> {
    let ConvGeom {
        batch,
        in_channels,
        out_channels,
        height,
        width,
        kernel,
    } = *geom;
    let hw = height * width;
    let pad = (kernel / 2) as isize;
    let mut out = vec![0.0; batch * out_channels * hw];
    for b in 0..batch {
        for o in 0..out_channels {
            let out_plane = &mut out[(b * out_channels + o) * hw..][..hw];
            out_plane.iter_mut().for_each(|v| *v = bias[o]);
            for c in 0..in_channels {
                let in_plane = &x[(b * in_channels + c) * hw..][..hw];
                let w_base = (o * in_channels + c) * kernel * kernel;
                for ky in 0..kernel {
                    let dy = ky as isize - pad;
                    let (y0, y1) = span(height, dy);
                    for kx in 0..kernel {
                        let dx = kx as isize - pad;
                        let (x0, x1) = span(width, dx);
                        let wv = w[w_base + ky * kernel + kx];
                        for y in y0..y1 {
                            let src = ((y as isize + dy) as usize) * width;
                            let dst = y * width;
                            let src_row =
                                &in_plane[(src as isize + x0 as isize + dx) as usize..][..x1 - x0];
                            axpy(wv, src_row, &mut out_plane[dst + x0..dst + x1]);
                        }
                    }
                }
            }
        }
    }
    out
}

fn conv_backward_weight(geom: &ConvGeom, x: &[f64], g: &[f64], gw: &mut [f64]) {
    let ConvGeom {
        batch,
        in_channels,
        out_channels,
        height,
        width,
        kernel,
    } = *geom;
    let hw = height * width;
    let pad = (kernel / 2) as isize;
    for b in 0..batch {
        for o in 0..out_channels {
            let g_plane = &g[(b * out_channels + o) * hw..][..hw];
            for c in 0..in_channels {
                let in_plane = &x[(b * in_channels + c) * hw..][..hw];
                let w_base = (o * in_channels + c) * kernel * kernel;
                for ky in 0..kernel {
                    let dy = ky as isize - pad;
                    let (y0, y1) = span(height, dy);
                    for kx in 0..kernel {
                        let dx = kx as isize - pad;
                        let (x0, x1) = span(width, dx);
                        let mut acc = 0.0;
                        for y in y0..y1 {
                            let src = ((y as isize + dy) as usize) * width;
                            let dst = y * width;
                            let src_row =
                                &in_plane[(src as isize + x0 as isize + dx) as usize..][..x1 - x0];
                            acc += dot(&g_plane[dst + x0..dst + x1], src_row);
                        }
                        gw[w_base + ky * kernel + kx] += acc;
                    }
                }
            }
        }
    }
}

fn conv_backward_input(geom: &ConvGeom, w: &[f64], g: &[f64], gx: &mut [f64]) {
    let ConvGeom {
        batch,
        in_channels,
        out_channels,
        height,
        width,
        kernel,
    } = *geom;
    let hw = height * width;
    let pad = (kernel / 2) as isize;
    for b in 0..batch {
        for o in 0..out_channels {
            let g_plane = &g[(b * out_channels + o) * hw..][..hw];
            for c in 0..in_channels {
                let gx_plane = &mut gx[(b * in_channels + c) * hw..][..hw];
                let w_base = (o * in_channels + c) * kernel * kernel;
                for ky in 0..kernel {
                    let dy = ky as isize - pad;
                    let (y0, y1) = span(height, dy);
                    for kx in 0..kernel {
                        let dx = kx as isize - pad;
                        let (x0, x1) = span(width, dx);
                        let wv = w[w_base + ky * kernel + kx];
                        for y in y0..y1 {
                            let src = ((y as isize + dy) as usize) * width;
                            let dst = y * width;
                            let start = (src as isize + x0 as isize + dx) as usize;
                            axpy(
                                wv,
                                &g_plane[dst + x0..dst + x1],
                                &mut gx_plane[start..start + (x1 - x0)],
                            );
                        }
                    }
                }
            }
        }
    }
}
