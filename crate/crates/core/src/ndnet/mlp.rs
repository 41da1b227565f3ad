//! Fully connected networks with reverse-mode gradients.
//!
//! A model is a stack of dense layers `y = act(x·Wᵀ + b)`. Hidden layers share
//! one activation; the output layer has its own (a noise estimator wants a
//! linear head, the frame decoder a sigmoid one). Inputs are any array whose
//! innermost extent equals the input width; all outer extents are treated as
//! a batch.

use std::fmt;
use std::str::FromStr;

use rand::Rng as _;

use super::array::{NdArray, Shape};
use crate::error::{Error, Result};
use crate::rng::rng_from_seed;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Activation {
    Relu,
    Tanh,
    Identity,
    Sigmoid,
}

impl Activation {
    #[inline]
    pub fn apply(self, x: f64) -> f64 {
        match self {
            Activation::Relu => x.max(0.0),
            Activation::Tanh => x.tanh(),
            Activation::Identity => x,
            Activation::Sigmoid => sigmoid(x),
        }
    }

    /// Derivative expressed through the activation output `y`.
    #[inline]
    fn derivative_from_output(self, y: f64) -> f64 {
        match self {
            Activation::Relu => {
                if y > 0.0 {
                    1.0
                } else {
                    0.0
                }
            }
            Activation::Tanh => 1.0 - y * y,
            Activation::Identity => 1.0,
            Activation::Sigmoid => y * (1.0 - y),
        }
    }

    pub(crate) fn code(self) -> u8 {
        match self {
            Activation::Relu => 0,
            Activation::Tanh => 1,
            Activation::Identity => 2,
            Activation::Sigmoid => 3,
        }
    }

    pub fn from_code(code: u8) -> Result<Self> {
        Ok(match code {
            0 => Activation::Relu,
            1 => Activation::Tanh,
            2 => Activation::Identity,
            3 => Activation::Sigmoid,
            other => return Err(Error::Format(format!("unknown activation code {other}"))),
        })
    }
}

impl fmt::Display for Activation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Activation::Relu => "relu",
            Activation::Tanh => "tanh",
            Activation::Identity => "identity",
            Activation::Sigmoid => "sigmoid",
        })
    }
}

impl FromStr for Activation {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "relu" => Ok(Activation::Relu),
            "tanh" => Ok(Activation::Tanh),
            "identity" => Ok(Activation::Identity),
            "sigmoid" => Ok(Activation::Sigmoid),
            other => Err(Error::invalid(format!("unknown activation '{other}'"))),
        }
    }
}

#[inline]
pub fn sigmoid(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}

/// One dense layer; `weights` is `outputs × inputs`, row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct Layer {
    pub inputs: usize,
    pub outputs: usize,
    pub weights: Vec<f64>,
    pub biases: Vec<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SgdConfig {
    pub learning_rate: f64,
    pub max_steps: usize,
    pub batch_size: usize,
}

impl SgdConfig {
    pub fn new(learning_rate: f64, max_steps: usize, batch_size: usize) -> Result<Self> {
        let cfg = SgdConfig {
            learning_rate,
            max_steps,
            batch_size,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        // lr = 0 is tolerated by `sgd_step` (identity update) but never by a trainer.
        if !(self.learning_rate >= 0.0) || !self.learning_rate.is_finite() {
            return Err(Error::invalid(format!(
                "learning rate {} must be ≥ 0",
                self.learning_rate
            )));
        }
        if self.batch_size == 0 {
            return Err(Error::invalid("batch size must be positive"));
        }
        Ok(())
    }
}

/// Parameter gradients, laid out like the model's layers.
#[derive(Debug, Clone, PartialEq)]
pub struct Gradients {
    pub weights: Vec<Vec<f64>>,
    pub biases: Vec<Vec<f64>>,
}

impl Gradients {
    pub fn zeros_like(model: &MlpModel) -> Self {
        Gradients {
            weights: model
                .layers
                .iter()
                .map(|l| vec![0.0; l.weights.len()])
                .collect(),
            biases: model
                .layers
                .iter()
                .map(|l| vec![0.0; l.biases.len()])
                .collect(),
        }
    }

    /// Flattened in checkpoint order: per layer, weights then biases.
    pub fn flat(&self) -> Vec<f64> {
        let mut out = Vec::new();
        for (w, b) in self.weights.iter().zip(&self.biases) {
            out.extend_from_slice(w);
            out.extend_from_slice(b);
        }
        out
    }

    pub fn add_assign(&mut self, other: &Gradients) {
        for (a, b) in self.weights.iter_mut().zip(&other.weights) {
            a.iter_mut().zip(b).for_each(|(x, y)| *x += y);
        }
        for (a, b) in self.biases.iter_mut().zip(&other.biases) {
            a.iter_mut().zip(b).for_each(|(x, y)| *x += y);
        }
    }

    pub fn scale(&mut self, s: f64) {
        self.weights
            .iter_mut()
            .chain(self.biases.iter_mut())
            .flatten()
            .for_each(|x| *x *= s);
    }

    pub fn norm(&self) -> f64 {
        self.weights
            .iter()
            .chain(&self.biases)
            .flatten()
            .map(|x| x * x)
            .sum::<f64>()
            .sqrt()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct MlpModel {
    widths: Vec<usize>,
    layers: Vec<Layer>,
    hidden: Activation,
    output: Activation,
    seed: u64,
}

/// Per-layer activations kept by the forward pass for the backward pass.
struct Trace {
    rows: usize,
    /// `acts[0]` is the input, `acts[l + 1]` the output of layer `l`.
    acts: Vec<Vec<f64>>,
}

impl MlpModel {
    /// Glorot-uniform weights in `±sqrt(6 / (fan_in + fan_out))`, zero biases.
    /// The same activation is used on every layer; see
    /// [`MlpModel::with_output_activation`].
    pub fn new(widths: &[usize], activation: Activation, seed: u64) -> Result<Self> {
        Self::check_widths(widths)?;
        let mut rng = rng_from_seed(seed);
        let layers = widths
            .windows(2)
            .map(|w| {
                let (fan_in, fan_out) = (w[0], w[1]);
                let bound = (6.0 / (fan_in + fan_out) as f64).sqrt();
                let weights = (0..fan_in * fan_out)
                    .map(|_| rng.gen_range(-bound..=bound))
                    .collect();
                Layer {
                    inputs: fan_in,
                    outputs: fan_out,
                    weights,
                    biases: vec![0.0; fan_out],
                }
            })
            .collect();
        Ok(MlpModel {
            widths: widths.to_vec(),
            layers,
            hidden: activation,
            output: activation,
            seed,
        })
    }

    /// All-zero parameters.
    pub fn zeros(widths: &[usize], activation: Activation) -> Result<Self> {
        Self::check_widths(widths)?;
        let layers = widths
            .windows(2)
            .map(|w| Layer {
                inputs: w[0],
                outputs: w[1],
                weights: vec![0.0; w[0] * w[1]],
                biases: vec![0.0; w[1]],
            })
            .collect();
        Ok(MlpModel {
            widths: widths.to_vec(),
            layers,
            hidden: activation,
            output: activation,
            seed: 0,
        })
    }

    pub fn from_layers(
        layers: Vec<Layer>,
        hidden: Activation,
        output: Activation,
        seed: u64,
    ) -> Result<Self> {
        if layers.is_empty() {
            return Err(Error::invalid("a model needs at least one layer"));
        }
        let mut widths = vec![layers[0].inputs];
        for (i, l) in layers.iter().enumerate() {
            if l.inputs != *widths.last().unwrap() {
                return Err(Error::invalid(format!(
                    "layer {i} expects {} inputs but the previous layer emits {}",
                    l.inputs,
                    widths.last().unwrap()
                )));
            }
            if l.weights.len() != l.inputs * l.outputs || l.biases.len() != l.outputs {
                return Err(Error::invalid(format!(
                    "layer {i} parameter lengths do not match its widths"
                )));
            }
            widths.push(l.outputs);
        }
        Self::check_widths(&widths)?;
        Ok(MlpModel {
            widths,
            layers,
            hidden,
            output,
            seed,
        })
    }

    fn check_widths(widths: &[usize]) -> Result<()> {
        if widths.len() < 2 {
            return Err(Error::invalid("a model needs an input and an output width"));
        }
        if widths.iter().any(|&w| w == 0) {
            return Err(Error::invalid(format!(
                "layer widths must be positive, got {widths:?}"
            )));
        }
        Ok(())
    }

    pub fn with_output_activation(mut self, output: Activation) -> Self {
        self.output = output;
        self
    }

    pub fn widths(&self) -> &[usize] {
        &self.widths
    }

    pub fn input_width(&self) -> usize {
        self.widths[0]
    }

    pub fn output_width(&self) -> usize {
        *self.widths.last().unwrap()
    }

    pub fn hidden_activation(&self) -> Activation {
        self.hidden
    }

    pub fn output_activation(&self) -> Activation {
        self.output
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn layers(&self) -> &[Layer] {
        &self.layers
    }

    pub fn layers_mut(&mut self) -> &mut [Layer] {
        &mut self.layers
    }

    pub fn param_count(&self) -> usize {
        self.layers
            .iter()
            .map(|l| l.weights.len() + l.biases.len())
            .sum()
    }

    /// Flattened parameters: per layer, weights then biases.
    pub fn parameters(&self) -> Vec<f64> {
        let mut out = Vec::with_capacity(self.param_count());
        for l in &self.layers {
            out.extend_from_slice(&l.weights);
            out.extend_from_slice(&l.biases);
        }
        out
    }

    pub fn set_parameters(&mut self, flat: &[f64]) -> Result<()> {
        if flat.len() != self.param_count() {
            return Err(Error::ShapeMismatch {
                op: "set_parameters",
                expected: vec![self.param_count()],
                found: vec![flat.len()],
            });
        }
        let mut at = 0;
        for l in &mut self.layers {
            let nw = l.weights.len();
            l.weights.copy_from_slice(&flat[at..at + nw]);
            at += nw;
            let nb = l.biases.len();
            l.biases.copy_from_slice(&flat[at..at + nb]);
            at += nb;
        }
        Ok(())
    }

    /// Zero the last layer so the network initially outputs `act(0)`.
    pub fn zero_output_layer(&mut self) {
        let last = self.layers.last_mut().unwrap();
        last.weights.iter_mut().for_each(|w| *w = 0.0);
        last.biases.iter_mut().for_each(|b| *b = 0.0);
    }

    fn activation_of(&self, layer: usize) -> Activation {
        if layer + 1 == self.layers.len() {
            self.output
        } else {
            self.hidden
        }
    }

    fn check_input(&self, input: &NdArray) -> Result<()> {
        if input.shape().last() != self.input_width() {
            return Err(Error::ShapeMismatch {
                op: "forward",
                expected: vec![self.input_width()],
                found: input.dims().to_vec(),
            });
        }
        Ok(())
    }

    fn output_shape(&self, input: &NdArray) -> Shape {
        let mut dims = input.dims().to_vec();
        *dims.last_mut().unwrap() = self.output_width();
        Shape::new(dims).expect("output widths are positive")
    }

    pub fn forward(&self, input: &NdArray) -> Result<NdArray> {
        self.check_input(input)?;
        let out = self.forward_rows(input.as_slice(), input.rows())?;
        let shape = self.output_shape(input);
        let arr = NdArray::from_parts_unchecked(shape, out);
        if let Some(index) = arr.as_slice().iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFinite {
                what: "forward output".into(),
                index,
            });
        }
        Ok(arr)
    }

    /// Forward over `rows` packed input rows.
    pub fn forward_rows(&self, input: &[f64], rows: usize) -> Result<Vec<f64>> {
        if input.len() != rows * self.input_width() {
            return Err(Error::ShapeMismatch {
                op: "forward",
                expected: vec![rows, self.input_width()],
                found: vec![input.len()],
            });
        }
        let mut cur = input.to_vec();
        for (li, layer) in self.layers.iter().enumerate() {
            cur = self.layer_forward(li, layer, &cur, rows);
        }
        Ok(cur)
    }

    fn layer_forward(&self, li: usize, layer: &Layer, x: &[f64], rows: usize) -> Vec<f64> {
        let mut y = vec![0.0; rows * layer.outputs];
        for r in 0..rows {
            y[r * layer.outputs..(r + 1) * layer.outputs].copy_from_slice(&layer.biases);
        }
        // y (rows × out) += x (rows × in) · Wᵀ
        gemm(
            rows,
            layer.inputs,
            layer.outputs,
            x,
            (layer.inputs as isize, 1),
            &layer.weights,
            (1, layer.inputs as isize),
            &mut y,
            1.0,
        );
        let act = self.activation_of(li);
        if act != Activation::Identity {
            y.iter_mut().for_each(|v| *v = act.apply(*v));
        }
        y
    }

    fn trace(&self, input: &[f64], rows: usize) -> Trace {
        let mut acts = Vec::with_capacity(self.layers.len() + 1);
        acts.push(input.to_vec());
        for (li, layer) in self.layers.iter().enumerate() {
            let next = self.layer_forward(li, layer, acts.last().unwrap(), rows);
            acts.push(next);
        }
        Trace { rows, acts }
    }

    fn check_upstream(&self, input: &NdArray, upstream: &NdArray) -> Result<()> {
        self.check_input(input)?;
        let expected = self.output_shape(input);
        if upstream.dims() != expected.dims() {
            return Err(Error::ShapeMismatch {
                op: "grad",
                expected: expected.dims().to_vec(),
                found: upstream.dims().to_vec(),
            });
        }
        Ok(())
    }

    /// Parameter gradients of `⟨upstream, forward(input)⟩`.
    pub fn grad(&self, input: &NdArray, upstream: &NdArray) -> Result<Gradients> {
        Ok(self.backward(input, upstream)?.0)
    }

    /// Parameter gradients plus the gradient with respect to the input.
    pub fn backward(&self, input: &NdArray, upstream: &NdArray) -> Result<(Gradients, NdArray)> {
        self.check_upstream(input, upstream)?;
        let (g, dx) = self.backward_rows(input.as_slice(), upstream.as_slice(), input.rows())?;
        let dx = NdArray::from_parts_unchecked(input.shape().clone(), dx);
        Ok((g, dx))
    }

    /// Packed-row variant of [`MlpModel::backward`].
    pub fn backward_rows(
        &self,
        input: &[f64],
        upstream: &[f64],
        rows: usize,
    ) -> Result<(Gradients, Vec<f64>)> {
        if input.len() != rows * self.input_width() || upstream.len() != rows * self.output_width()
        {
            return Err(Error::ShapeMismatch {
                op: "grad",
                expected: vec![rows, self.input_width(), self.output_width()],
                found: vec![input.len(), upstream.len()],
            });
        }
        let trace = self.trace(input, rows);
        Ok(self.backward_from_trace(&trace, upstream))
    }

    fn backward_from_trace(&self, trace: &Trace, upstream: &[f64]) -> (Gradients, Vec<f64>) {
        let rows = trace.rows;
        let mut grads = Gradients::zeros_like(self);
        let mut delta = upstream.to_vec();
        for li in (0..self.layers.len()).rev() {
            let layer = &self.layers[li];
            let act = self.activation_of(li);
            let y = &trace.acts[li + 1];
            if act != Activation::Identity {
                delta
                    .iter_mut()
                    .zip(y)
                    .for_each(|(d, &yv)| *d *= act.derivative_from_output(yv));
            }
            let x = &trace.acts[li];
            // dW (out × in) = δᵀ (out × rows) · x (rows × in)
            gemm(
                layer.outputs,
                rows,
                layer.inputs,
                &delta,
                (1, layer.outputs as isize),
                x,
                (layer.inputs as isize, 1),
                &mut grads.weights[li],
                0.0,
            );
            let db = &mut grads.biases[li];
            for r in 0..rows {
                for (b, d) in db
                    .iter_mut()
                    .zip(&delta[r * layer.outputs..(r + 1) * layer.outputs])
                {
                    *b += d;
                }
            }
            // dx (rows × in) = δ (rows × out) · W (out × in)
            let mut dx = vec![0.0; rows * layer.inputs];
            gemm(
                rows,
                layer.outputs,
                layer.inputs,
                &delta,
                (layer.outputs as isize, 1),
                &layer.weights,
                (layer.inputs as isize, 1),
                &mut dx,
                0.0,
            );
            delta = dx;
        }
        (grads, delta)
    }

    /// `p ← p − lr·g` for every parameter; returns the updated model.
    pub fn sgd_step(&self, grads: &Gradients, cfg: &SgdConfig) -> Result<MlpModel> {
        let mut next = self.clone();
        next.apply_sgd(grads, cfg.learning_rate)?;
        Ok(next)
    }

    /// In-place SGD update. The model is left untouched when any gradient is
    /// non-finite.
    pub fn apply_sgd(&mut self, grads: &Gradients, learning_rate: f64) -> Result<()> {
        if grads.weights.len() != self.layers.len()
            || self
                .layers
                .iter()
                .zip(&grads.weights)
                .any(|(l, g)| l.weights.len() != g.len())
            || self
                .layers
                .iter()
                .zip(&grads.biases)
                .any(|(l, g)| l.biases.len() != g.len())
        {
            return Err(Error::invalid("gradients do not match the model topology"));
        }
        let mut index = 0;
        for (w, b) in grads.weights.iter().zip(&grads.biases) {
            for v in w.iter().chain(b) {
                if !v.is_finite() {
                    return Err(Error::NonFinite {
                        what: "gradient".into(),
                        index,
                    });
                }
                index += 1;
            }
        }
        if learning_rate == 0.0 {
            return Ok(());
        }
        for (l, (gw, gb)) in self
            .layers
            .iter_mut()
            .zip(grads.weights.iter().zip(&grads.biases))
        {
            l.weights
                .iter_mut()
                .zip(gw)
                .for_each(|(p, g)| *p -= learning_rate * g);
            l.biases
                .iter_mut()
                .zip(gb)
                .for_each(|(p, g)| *p -= learning_rate * g);
        }
        Ok(())
    }
}

/// SGD with optional heavy-ball momentum: `v ← μ·v + g`, `p ← p − lr·v`.
/// With `μ = 0` this is exactly [`MlpModel::apply_sgd`].
#[derive(Debug, Clone)]
pub struct Momentum {
    pub coefficient: f64,
    velocity: Option<Gradients>,
}

impl Momentum {
    pub fn new(coefficient: f64) -> Result<Self> {
        if !(0.0..1.0).contains(&coefficient) {
            return Err(Error::invalid(format!(
                "momentum {coefficient} must lie in [0, 1)"
            )));
        }
        Ok(Momentum {
            coefficient,
            velocity: None,
        })
    }

    pub fn step(
        &mut self,
        model: &mut MlpModel,
        grads: &Gradients,
        learning_rate: f64,
    ) -> Result<()> {
        if self.coefficient == 0.0 {
            return model.apply_sgd(grads, learning_rate);
        }
        let mut v = match self.velocity.take() {
            Some(mut v) => {
                v.scale(self.coefficient);
                v.add_assign(grads);
                v
            }
            None => grads.clone(),
        };
        let result = model.apply_sgd(&v, learning_rate);
        if result.is_err() {
            // Do not keep a poisoned velocity around.
            v = Gradients::zeros_like(model);
        }
        self.velocity = Some(v);
        result
    }
}

/// `c = a·b + beta·c` with explicit (row, column) strides for `a` and `b`;
/// `c` is dense row-major `m × n`.
#[allow(clippy::too_many_arguments)]
fn gemm(
    m: usize,
    k: usize,
    n: usize,
    a: &[f64],
    a_strides: (isize, isize),
    b: &[f64],
    b_strides: (isize, isize),
    c: &mut [f64],
    beta: f64,
) {
    assert!(c.len() >= m * n);
    if m == 0 || n == 0 {
        return;
    }
    if k == 0 {
        c.iter_mut().for_each(|v| *v *= beta);
        return;
    }
    let max_a = (m as isize - 1) * a_strides.0 + (k as isize - 1) * a_strides.1;
    let max_b = (k as isize - 1) * b_strides.0 + (n as isize - 1) * b_strides.1;
    assert!((max_a as usize) < a.len() && (max_b as usize) < b.len());
    // SAFETY: the asserts above bound every strided access inside the slices.
    unsafe {
        matrixmultiply::dgemm(
            m,
            k,
            n,
            1.0,
            a.as_ptr(),
            a_strides.0,
            a_strides.1,
            b.as_ptr(),
            b_strides.0,
            b_strides.1,
            beta,
            c.as_mut_ptr(),
            n as isize,
            1,
        );
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn single(w: f64, b: f64, act: Activation) -> MlpModel {
        MlpModel::from_layers(
            vec![Layer {
                inputs: 1,
                outputs: 1,
                weights: vec![w],
                biases: vec![b],
            }],
            act,
            act,
            0,
        )
        .unwrap()
    }

    #[test]
    fn identity_layer_passes_input_through() {
        let layer = Layer {
            inputs: 3,
            outputs: 3,
            weights: vec![1.0, 0.0, 0.0, 0.0, 1.0, 0.0, 0.0, 0.0, 1.0],
            biases: vec![0.0; 3],
        };
        let m = MlpModel::from_layers(vec![layer], Activation::Identity, Activation::Identity, 0)
            .unwrap();
        let v = NdArray::from_vec(vec![0.5, -2.0, 7.25]);
        assert_eq!(m.forward(&v).unwrap(), v);
    }

    #[test]
    fn zero_relu_network_outputs_zero() {
        let m = MlpModel::zeros(&[4, 6, 3], Activation::Relu).unwrap();
        let x = NdArray::new(vec![2, 4], vec![1.0, -3.0, 2.0, 9.0, 0.1, 0.2, 0.3, 0.4]).unwrap();
        assert!(m.forward(&x).unwrap().as_slice().iter().all(|&v| v == 0.0));
    }

    #[test]
    fn forward_rejects_wrong_width_naming_both_shapes() {
        let m = MlpModel::new(&[3, 2], Activation::Tanh, 1).unwrap();
        let err = m.forward(&NdArray::from_vec(vec![1.0, 2.0])).unwrap_err();
        let msg = err.to_string();
        assert!(msg.contains("[3]") && msg.contains("[2]"), "{msg}");
    }

    #[test]
    fn linear_gradient_is_the_input() {
        let m = single(0.7, 0.0, Activation::Identity);
        let g = m
            .grad(&NdArray::from_vec(vec![3.0]), &NdArray::from_vec(vec![1.0]))
            .unwrap();
        assert_eq!(g.weights[0], vec![3.0]);
        assert_eq!(g.biases[0], vec![1.0]);
    }

    #[test]
    fn zero_upstream_gives_zero_gradients() {
        let m = MlpModel::new(&[3, 5, 2], Activation::Tanh, 9).unwrap();
        let x = NdArray::from_vec(vec![0.3, -1.0, 2.0]);
        let g = m.grad(&x, &NdArray::from_vec(vec![0.0, 0.0])).unwrap();
        assert!(g.flat().iter().all(|&v| v == 0.0));
    }

    #[test]
    fn grad_rejects_upstream_shape_mismatch() {
        let m = MlpModel::new(&[3, 2], Activation::Tanh, 1).unwrap();
        let x = NdArray::from_vec(vec![1.0, 2.0, 3.0]);
        assert!(m.grad(&x, &NdArray::from_vec(vec![1.0])).is_err());
    }

    #[test]
    fn sgd_arithmetic_and_zero_rate() {
        let m = single(1.0, 0.0, Activation::Identity);
        let grads = Gradients {
            weights: vec![vec![2.0]],
            biases: vec![vec![0.0]],
        };
        let next = m
            .sgd_step(&grads, &SgdConfig::new(0.1, 1, 1).unwrap())
            .unwrap();
        assert!((next.layers()[0].weights[0] - 0.8).abs() < 1e-15);
        let same = m
            .sgd_step(&grads, &SgdConfig::new(0.0, 1, 1).unwrap())
            .unwrap();
        assert_eq!(same, m);
    }

    #[test]
    fn sgd_rejects_non_finite_gradient_with_index() {
        let m = MlpModel::new(&[2, 2], Activation::Identity, 3).unwrap();
        let mut g = Gradients::zeros_like(&m);
        g.biases[0][1] = f64::NAN;
        match m.sgd_step(&g, &SgdConfig::new(0.1, 1, 1).unwrap()) {
            Err(Error::NonFinite { index, .. }) => assert_eq!(index, 5),
            other => panic!("expected NonFinite, got {other:?}"),
        }
    }

    #[test]
    fn batched_forward_matches_row_by_row() {
        let m = MlpModel::new(&[3, 7, 2], Activation::Sigmoid, 11).unwrap();
        let xs = vec![0.1, 0.2, 0.3, -1.0, 0.5, 2.0];
        let batched = m.forward_rows(&xs, 2).unwrap();
        let a = m.forward_rows(&xs[..3], 1).unwrap();
        let b = m.forward_rows(&xs[3..], 1).unwrap();
        assert_eq!(&batched[..2], &a[..]);
        assert_eq!(&batched[2..], &b[..]);
    }
}
