//! Central finite-difference gradient checks for the tape and for whole
//! machines.
//!
//! A coordinate passes when the central difference with step
//! [`FD_STEP`] agrees with the analytic gradient to [`TOLERANCE`] relative
//! error. When it does not, the difference is retried with [`FINE_STEP`]:
//! agreement there means a ReLU or pooling kink lay inside ±`FD_STEP`, which
//! is recorded as a kink rather than a pass. Every tensor needs
//! [`MIN_COORDS`] passing coordinates (or all of them, if smaller) and at
//! most [`MAX_KINK_FRACTION`] kinks.

use rand::seq::index::sample;
use rand::Rng;
use rand_chacha::ChaCha8Rng;

use crate::data::{ImageTensor, SeenLabel};
use crate::seed;

use super::{rotation_loss, seen_loss, InputShape, Machine, MachineSpec, PretextMode, Tape, Tensor, Var};

pub const FD_STEP: f64 = 1e-6;
pub const FINE_STEP: f64 = 1e-8;
pub const TOLERANCE: f64 = 1e-4;
pub const MIN_COORDS: usize = 100;
pub const MAX_KINK_FRACTION: f64 = 0.05;

/// Relative error with a 1e-3 floor, so gradients near zero are compared
/// in absolute terms.
pub fn relative_error(analytic: f64, numeric: f64) -> f64 {
    (analytic - numeric).abs() / analytic.abs().max(numeric.abs()).max(1e-3)
}

#[derive(Debug, Clone, PartialEq)]
pub struct TensorCheck {
    pub label: String,
    pub passed: usize,
    pub kinks: usize,
    pub worst_error: f64,
}

fn central(f: &impl Fn(f64) -> f64, h: f64) -> f64 {
    (f(h) - f(-h)) / (2.0 * h)
}

/// Checks one tensor's gradient; `f(i, delta)` evaluates the scalar with
/// coordinate `i` moved by `delta`. Returns a description of the failure.
pub fn check_coordinates(
    label: &str,
    analytic: &[f64],
    rng: &mut ChaCha8Rng,
    f: impl Fn(usize, f64) -> f64,
) -> Result<TensorCheck, String> {
    let n = analytic.len();
    let mut check = TensorCheck {
        label: label.to_owned(),
        passed: 0,
        kinks: 0,
        worst_error: 0.0,
    };
    for i in sample(rng, n, n) {
        if check.passed >= MIN_COORDS {
            break;
        }
        let g = |d: f64| f(i, d);
        let err = relative_error(analytic[i], central(&g, FD_STEP));
        if err < TOLERANCE {
            check.passed += 1;
            check.worst_error = check.worst_error.max(err);
        } else if relative_error(analytic[i], central(&g, FINE_STEP)) < TOLERANCE {
            check.kinks += 1;
        } else {
            return Err(format!("{label}[{i}]: relative error {err:e}, analytic {}", analytic[i]));
        }
    }
    if check.passed < MIN_COORDS.min(n - check.kinks) {
        return Err(format!("{label}: only {} coordinates passed", check.passed));
    }
    if check.kinks as f64 > MAX_KINK_FRACTION * (check.passed + check.kinks) as f64 {
        return Err(format!(
            "{label}: {} kink crossings among {} coordinates",
            check.kinks,
            check.passed + check.kinks
        ));
    }
    Ok(check)
}

/// Checks the gradient of `build` with respect to each of `inputs`.
pub fn check_op(
    name: &str,
    inputs: &[Tensor],
    build: impl Fn(&mut Tape, &[Var]) -> Var,
) -> Result<Vec<TensorCheck>, String> {
    let eval = |inputs: &[Tensor]| {
        let mut tape = Tape::new();
        let vars: Vec<Var> = inputs.iter().map(|t| tape.variable(t.clone())).collect();
        let out = build(&mut tape, &vars);
        tape.value(out)[0]
    };
    let mut tape = Tape::new();
    let vars: Vec<Var> = inputs.iter().map(|t| tape.variable(t.clone())).collect();
    let out = build(&mut tape, &vars);
    let grads = tape.backward(out).map_err(|e| e.to_string())?;
    let mut rng = seed::rng(99);
    let mut checks = Vec::new();
    for (k, var) in vars.iter().enumerate() {
        let analytic = grads.get(*var).ok_or(format!("{name}: input {k} has no gradient"))?;
        checks.push(check_coordinates(&format!("{name} input {k}"), analytic, &mut rng, |i, d| {
            let mut moved = inputs.to_vec();
            moved[k].data_mut()[i] += d;
            eval(&moved)
        })?);
    }
    Ok(checks)
}

/// Which loss a machine check differentiates.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MachineLoss {
    Rotation(PretextMode),
    Seen(SeenLabel),
}

/// Checks every parameter tensor of a freshly initialized machine.
pub fn check_machine(spec: &MachineSpec, loss: MachineLoss, seed_value: u64) -> Result<Vec<TensorCheck>, String> {
    let classes = match loss {
        MachineLoss::Rotation(mode) => mode.classes(),
        MachineLoss::Seen(_) => 2,
    };
    let machine = Machine::new(spec.clone(), classes, &mut seed::stream(seed_value, "init", 0)).map_err(|e| e.to_string())?;
    let InputShape {
        channels,
        height,
        width,
    } = spec.input;
    let mut rng = seed::stream(seed_value, "image", 0);
    let pixels = (0..spec.input.numel()).map(|_| rng.gen::<f64>()).collect();
    let image = ImageTensor::new("x", channels, height, width, pixels).map_err(|e| e.to_string())?;
    let record = |m: &Machine, tape: &mut Tape| match loss {
        MachineLoss::Rotation(mode) => rotation_loss(m, tape, &image, mode),
        MachineLoss::Seen(label) => seen_loss(m, tape, &image, label),
    };
    let named = machine.named_parameters();
    let mut tape = Tape::new();
    let (l, out) = record(&machine, &mut tape).map_err(|e| e.to_string())?;
    let grads = tape.backward(l).map_err(|e| e.to_string())?;
    let mut coord_rng = seed::stream(seed_value, "coords", 0);
    let mut checks = Vec::new();
    for (k, (name, _)) in named.iter().enumerate() {
        let analytic = grads.get(out.params[k]).ok_or(format!("{name} has no gradient"))?;
        checks.push(check_coordinates(
            &format!("{} {name}", spec.descriptor()),
            analytic,
            &mut coord_rng,
            |i, d| {
                let mut p = named.clone();
                p[k].1.data_mut()[i] += d;
                let mut m = machine.clone();
                m.load_parameters(&p).expect("same layout");
                let mut tape = Tape::new();
                let (l, _) = record(&m, &mut tape).expect("forward succeeded before");
                tape.value(l)[0]
            },
        )?);
    }
    Ok(checks)
}

fn random(shape: &[usize], rng: &mut ChaCha8Rng) -> Tensor {
    let n = shape.iter().product();
    Tensor::new(shape.to_vec(), (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect()).expect("non-empty shape")
}

/// Weighted sum so every output coordinate gets a distinct upstream
/// gradient.
fn project(tape: &mut Tape, v: Var, seed_value: u64) -> Var {
    let shape = tape.shape(v).to_vec();
    let w = tape.input(random(&shape, &mut seed::rng(seed_value)));
    let prod = tape.mul(v, w).expect("same shape");
    tape.sum(prod)
}

/// Named checks covering every differentiable op, both losses and the
/// three machine kinds.
pub fn standard_suite() -> Vec<(String, Result<Vec<TensorCheck>, String>)> {
    let mut rng = seed::rng(1);
    let mut out = Vec::new();
    let (a, b) = (random(&[7, 19], &mut rng), random(&[7, 19], &mut rng));
    out.push(("add".to_owned(), check_op("add", &[a.clone(), b.clone()], |t, v| {
        let s = t.add(v[0], v[1]).expect("same shape");
        project(t, s, 2)
    })));
    out.push(("mul".to_owned(), check_op("mul", &[a.clone(), b], |t, v| {
        let s = t.mul(v[0], v[1]).expect("same shape");
        project(t, s, 3)
    })));
    out.push(("square".to_owned(), check_op("square", std::slice::from_ref(&a), |t, v| {
        let s = t.square(v[0]);
        project(t, s, 4)
    })));
    out.push(("sigmoid".to_owned(), check_op("sigmoid", std::slice::from_ref(&a), |t, v| {
        let s = t.sigmoid(v[0]);
        project(t, s, 5)
    })));
    out.push(("relu".to_owned(), check_op("relu", std::slice::from_ref(&a), |t, v| {
        let s = t.relu(v[0]);
        project(t, s, 6)
    })));
    out.push(("sum".to_owned(), check_op("sum", &[a], |t, v| t.sum(v[0]))));

    let x = random(&[3, 2, 4, 5], &mut rng);
    out.push(("reshape".to_owned(), check_op("reshape", std::slice::from_ref(&x), |t, v| {
        let r = t.reshape(v[0], vec![6, 20]).expect("same size");
        project(t, r, 8)
    })));
    out.push(("flatten".to_owned(), check_op("flatten", &[x], |t, v| {
        let r = t.flatten(v[0]).expect("4-d");
        project(t, r, 9)
    })));

    let lin = [random(&[6, 30], &mut rng), random(&[11, 30], &mut rng), random(&[11], &mut rng)];
    out.push(("linear".to_owned(), check_op("linear", &lin, |t, v| {
        let y = t.linear(v[0], v[1], v[2]).expect("shapes fit");
        project(t, y, 11)
    })));

    for kernel in [1, 3, 5] {
        let conv = [
            random(&[2, 3, 6, 5], &mut rng),
            random(&[4, 3, kernel, kernel], &mut rng),
            random(&[4], &mut rng),
        ];
        let name = format!("conv2d k{kernel}");
        let result = check_op(&name, &conv, |t, v| {
            let y = t.conv2d(v[0], v[1], v[2]).expect("shapes fit");
            project(t, y, 13)
        });
        out.push((name, result));
    }

    // distinct values so window maxima are well separated
    let n = 2 * 3 * 7 * 6;
    let mut values: Vec<f64> = (0..n).map(|i| i as f64 * 0.01).collect();
    for i in (1..n).rev() {
        values.swap(i, rng.gen_range(0..=i));
    }
    let pool = Tensor::new(vec![2, 3, 7, 6], values).expect("valid");
    out.push(("max_pool2".to_owned(), check_op("max_pool2", &[pool], |t, v| {
        let y = t.max_pool2(v[0]).expect("4-d");
        project(t, y, 15)
    })));

    let logits = random(&[20, 7], &mut rng);
    let mut targets = Tensor::zeros(vec![20, 7]);
    for r in 0..20 {
        if r % 3 == 0 {
            targets.data_mut()[r * 7] = 0.25;
            targets.data_mut()[r * 7 + 3] = 0.75;
        } else {
            targets.data_mut()[r * 7 + rng.gen_range(0..7)] = 1.0;
        }
    }
    out.push(("softmax_cross_entropy".to_owned(), check_op("softmax_cross_entropy", &[logits], |t, v| {
        t.softmax_cross_entropy(v[0], &targets).expect("valid targets")
    })));
    let pred = random(&[13, 9], &mut rng);
    let target: Vec<f64> = (0..117).map(|_| rng.gen()).collect();
    out.push(("mse".to_owned(), check_op("mse", &[pred], |t, v| t.mse(v[0], &target).expect("same size"))));

    for (spec, loss) in [
        (MachineSpec::small_cnn(InputShape::new(3, 8, 8)), MachineLoss::Rotation(PretextMode::FourWay)),
        (MachineSpec::small_cnn(InputShape::new(1, 8, 8)), MachineLoss::Seen(SeenLabel::Seen)),
        (MachineSpec::mlp(InputShape::new(1, 6, 6), vec![16, 8]), MachineLoss::Seen(SeenLabel::Unseen)),
        (MachineSpec::linear(InputShape::new(1, 4, 4)), MachineLoss::Rotation(PretextMode::Binary)),
    ] {
        let name = format!("machine {} {loss:?}", spec.descriptor());
        out.push((name, check_machine(&spec, loss, 17)));
    }
    out
}
