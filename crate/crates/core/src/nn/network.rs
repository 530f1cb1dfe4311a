use alloc::vec;
use alloc::vec::Vec;

use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use super::{xavier_uniform, AdamState, Gradients, NnError, Tape, Var};
use crate::math;
use crate::tensor::Tensor;

pub const BN_EPS: f64 = 1e-5;
pub const BN_MOMENTUM: f64 = 0.9;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Mode {
    Train,
    Predict,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub enum Layer {
    Dense {
        weight: Tensor,
        bias: Tensor,
    },
    /// Dense layer whose weight rows are `scale_k · direction_k / ‖direction_k‖`.
    WeightNormDense {
        direction: Tensor,
        scale: Tensor,
        bias: Tensor,
    },
    BatchNorm {
        gamma: Tensor,
        beta: Tensor,
        running_mean: Vec<f64>,
        running_var: Vec<f64>,
    },
    /// Additive `N(0, sigma²)` noise in train mode, identity in predict mode.
    GaussianNoise {
        sigma: f64,
    },
    Elu,
    Tanh,
}

impl Layer {
    pub fn dense<R: Rng + ?Sized>(inputs: usize, outputs: usize, rng: &mut R) -> Layer {
        Layer::Dense {
            weight: xavier_uniform(outputs, inputs, rng),
            bias: Tensor::zeros(1, outputs),
        }
    }

    /// Direction drawn with Xavier init; the scale starts at the row norms so
    /// the effective weight equals the Xavier draw.
    pub fn weight_norm_dense<R: Rng + ?Sized>(inputs: usize, outputs: usize, rng: &mut R) -> Layer {
        let direction = xavier_uniform(outputs, inputs, rng);
        let norms: Vec<f64> = (0..outputs)
            .map(|k| math::sqrt(direction.row(k).iter().map(|x| x * x).sum()))
            .collect();
        Layer::WeightNormDense {
            direction,
            scale: Tensor::row_vector(&norms),
            bias: Tensor::zeros(1, outputs),
        }
    }

    pub fn batch_norm(features: usize) -> Layer {
        Layer::BatchNorm {
            gamma: Tensor::filled(1, features, 1.0),
            beta: Tensor::zeros(1, features),
            running_mean: vec![0.0; features],
            running_var: vec![1.0; features],
        }
    }

    pub fn noise(sigma: f64) -> Result<Layer, NnError> {
        if sigma < 0.0 || sigma.is_nan() {
            return Err(NnError::NegativeSigma(sigma));
        }
        Ok(Layer::GaussianNoise { sigma })
    }

    fn params(&self) -> Vec<&Tensor> {
        match self {
            Layer::Dense { weight, bias } => vec![weight, bias],
            Layer::WeightNormDense {
                direction,
                scale,
                bias,
            } => vec![direction, scale, bias],
            Layer::BatchNorm { gamma, beta, .. } => vec![gamma, beta],
            _ => Vec::new(),
        }
    }

    fn params_mut(&mut self) -> Vec<&mut Tensor> {
        match self {
            Layer::Dense { weight, bias } => vec![weight, bias],
            Layer::WeightNormDense {
                direction,
                scale,
                bias,
            } => vec![direction, scale, bias],
            Layer::BatchNorm { gamma, beta, .. } => vec![gamma, beta],
            _ => Vec::new(),
        }
    }

    fn param_names(&self) -> &'static [&'static str] {
        match self {
            Layer::Dense { .. } => &["weight", "bias"],
            Layer::WeightNormDense { .. } => &["direction", "scale", "bias"],
            Layer::BatchNorm { .. } => &["gamma", "beta"],
            _ => &[],
        }
    }

    pub fn kind(&self) -> &'static str {
        match self {
            Layer::Dense { .. } => "dense",
            Layer::WeightNormDense { .. } => "weight_norm_dense",
            Layer::BatchNorm { .. } => "batch_norm",
            Layer::GaussianNoise { .. } => "gaussian_noise",
            Layer::Elu => "elu",
            Layer::Tanh => "tanh",
        }
    }

    /// Input width the layer expects, when it has one.
    fn input_width(&self) -> Option<usize> {
        match self {
            Layer::Dense { weight, .. } => Some(weight.cols()),
            Layer::WeightNormDense { direction, .. } => Some(direction.cols()),
            Layer::BatchNorm { gamma, .. } => Some(gamma.cols()),
            _ => None,
        }
    }
}

/// Classifier shape: input noise, then weight-normalized hidden layers each
/// followed by ELU and noise, then an `M`-unit output (the fake logit is
/// implicit).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ClassifierSpec {
    pub input_dim: usize,
    pub hidden: Vec<usize>,
    pub classes: usize,
    pub input_noise: f64,
    pub hidden_noise: f64,
}

/// Generator shape: dense + batch norm + ELU hidden layers, then a
/// weight-normalized output layer with tanh.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GeneratorSpec {
    pub noise_dim: usize,
    pub hidden: Vec<usize>,
    pub output_dim: usize,
}

/// Parameters of a network registered on one tape.
#[derive(Clone, Debug)]
pub struct Binding {
    vars: Vec<Var>,
    trainable: bool,
}

impl Binding {
    pub fn vars(&self) -> &[Var] {
        &self.vars
    }

    /// Gradients of every parameter, zero where the loss does not depend on
    /// it. Constant bindings always produce zeros.
    pub fn gradients(&self, tape: &Tape, grads: &mut Gradients) -> Vec<Tensor> {
        self.vars
            .iter()
            .map(|&v| {
                let shape = tape.value(v).shape();
                let g = if self.trainable { grads.take(v) } else { None };
                g.unwrap_or_else(|| Tensor::zeros(shape.0, shape.1))
            })
            .collect()
    }
}

#[derive(Clone, Copy, Debug)]
pub struct Forward {
    pub output: Var,
    /// Output of the designated feature layer.
    pub features: Var,
}

/// A layered network with a designated feature layer.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Network {
    layers: Vec<Layer>,
    feature_layer: usize,
    mode: Mode,
    noise_enabled: bool,
}

impl Network {
    pub fn from_layers(layers: Vec<Layer>, feature_layer: usize) -> Result<Self, NnError> {
        if feature_layer >= layers.len() {
            return Err(NnError::FeatureLayer(feature_layer));
        }
        let net = Network {
            layers,
            feature_layer,
            mode: Mode::Train,
            noise_enabled: true,
        };
        net.validate()?;
        Ok(net)
    }

    pub fn classifier<R: Rng + ?Sized>(spec: &ClassifierSpec, rng: &mut R) -> Result<Self, NnError> {
        let mut layers = vec![Layer::noise(spec.input_noise)?];
        let mut width = spec.input_dim;
        let mut feature_layer = 0;
        for &h in &spec.hidden {
            layers.push(Layer::weight_norm_dense(width, h, rng));
            layers.push(Layer::Elu);
            feature_layer = layers.len() - 1;
            layers.push(Layer::noise(spec.hidden_noise)?);
            width = h;
        }
        layers.push(Layer::weight_norm_dense(width, spec.classes, rng));
        Self::from_layers(layers, feature_layer)
    }

    pub fn generator<R: Rng + ?Sized>(spec: &GeneratorSpec, rng: &mut R) -> Result<Self, NnError> {
        let mut layers = Vec::new();
        let mut width = spec.noise_dim;
        for &h in &spec.hidden {
            layers.push(Layer::dense(width, h, rng));
            layers.push(Layer::batch_norm(h));
            layers.push(Layer::Elu);
            width = h;
        }
        let feature_layer = layers.len().saturating_sub(1);
        layers.push(Layer::weight_norm_dense(width, spec.output_dim, rng));
        layers.push(Layer::Tanh);
        Self::from_layers(layers, feature_layer)
    }

    /// Rejects zero weight-norm directions.
    pub fn validate(&self) -> Result<(), NnError> {
        for (i, layer) in self.layers.iter().enumerate() {
            if let Layer::WeightNormDense { direction, .. } = layer {
                for row in 0..direction.rows() {
                    if direction.row(row).iter().all(|&x| x == 0.0) {
                        return Err(NnError::ZeroDirection { layer: i, row });
                    }
                }
            }
        }
        Ok(())
    }

    pub fn layers(&self) -> &[Layer] {
        &self.layers
    }

    pub fn layers_mut(&mut self) -> &mut [Layer] {
        &mut self.layers
    }

    pub fn feature_layer(&self) -> usize {
        self.feature_layer
    }

    pub fn mode(&self) -> Mode {
        self.mode
    }

    pub fn set_mode(&mut self, mode: Mode) {
        self.mode = mode;
    }

    /// Switches noise layers off in train mode (used by gradient checks).
    pub fn set_noise_enabled(&mut self, enabled: bool) {
        self.noise_enabled = enabled;
    }

    pub fn input_dim(&self) -> Option<usize> {
        self.layers.iter().find_map(Layer::input_width)
    }

    pub fn params(&self) -> Vec<&Tensor> {
        self.layers.iter().flat_map(Layer::params).collect()
    }

    pub fn params_mut(&mut self) -> Vec<&mut Tensor> {
        self.layers.iter_mut().flat_map(Layer::params_mut).collect()
    }

    /// `layer{i}.{name}` for every parameter, in [`Network::params`] order.
    pub fn param_names(&self) -> Vec<alloc::string::String> {
        let mut out = Vec::new();
        for (i, layer) in self.layers.iter().enumerate() {
            for name in layer.param_names() {
                out.push(alloc::format!("layer{i}.{name}"));
            }
        }
        out
    }

    pub fn param_count(&self) -> usize {
        self.params().iter().map(|p| p.len()).sum()
    }

    /// Registers every parameter on `tape`, as variables when `trainable`.
    pub fn bind(&self, tape: &mut Tape, trainable: bool) -> Binding {
        let vars = self
            .params()
            .into_iter()
            .map(|p| {
                if trainable {
                    tape.variable(p.clone())
                } else {
                    tape.constant(p.clone())
                }
            })
            .collect();
        Binding { vars, trainable }
    }

    /// Records a forward pass. Train-mode batch normalization updates the
    /// running statistics.
    pub fn forward<R: Rng + ?Sized>(
        &mut self,
        tape: &mut Tape,
        binding: &Binding,
        input: Var,
        rng: &mut R,
    ) -> Result<Forward, NnError> {
        if let Some(expected) = self.input_dim() {
            let actual = tape.value(input).cols();
            if actual != expected {
                return Err(NnError::InputWidth { expected, actual });
            }
        }
        let mut x = input;
        let mut features = input;
        let mut p = 0;
        let train = self.mode == Mode::Train;
        for (i, layer) in self.layers.iter_mut().enumerate() {
            x = match layer {
                Layer::Dense { .. } => {
                    let (w, b) = (binding.vars[p], binding.vars[p + 1]);
                    p += 2;
                    let y = tape.matmul_nt(x, w);
                    tape.add_row(y, b)
                }
                Layer::WeightNormDense { .. } => {
                    let (v, s, b) = (binding.vars[p], binding.vars[p + 1], binding.vars[p + 2]);
                    p += 3;
                    let w = tape.weight_norm(v, s);
                    let y = tape.matmul_nt(x, w);
                    tape.add_row(y, b)
                }
                Layer::BatchNorm {
                    running_mean,
                    running_var,
                    ..
                } => {
                    let (g, b) = (binding.vars[p], binding.vars[p + 1]);
                    p += 2;
                    if train {
                        let rows = tape.value(x).rows();
                        if rows < 2 {
                            return Err(NnError::BatchTooSmall(rows));
                        }
                        let (y, mean, var) = tape.batch_norm(x, g, b, BN_EPS);
                        for (r, m) in running_mean.iter_mut().zip(&mean) {
                            *r = BN_MOMENTUM * *r + (1.0 - BN_MOMENTUM) * m;
                        }
                        for (r, v) in running_var.iter_mut().zip(&var) {
                            *r = BN_MOMENTUM * *r + (1.0 - BN_MOMENTUM) * v;
                        }
                        y
                    } else {
                        let inv_std: Vec<f64> = running_var.iter().map(|v| 1.0 / math::sqrt(v + BN_EPS)).collect();
                        tape.col_affine(x, g, b, running_mean, &inv_std)
                    }
                }
                Layer::GaussianNoise { sigma } => {
                    if train && self.noise_enabled && *sigma > 0.0 {
                        let shape = tape.value(x).shape();
                        let noise: Vec<f64> = (0..shape.0 * shape.1)
                            .map(|_| *sigma * rng.sample::<f64, _>(StandardNormal))
                            .collect();
                        let n = tape.constant(Tensor::from_vec(shape.0, shape.1, noise).expect("shape"));
                        tape.add(x, n)
                    } else {
                        x
                    }
                }
                Layer::Elu => tape.elu(x),
                Layer::Tanh => tape.tanh(x),
            };
            if i == self.feature_layer {
                features = x;
            }
        }
        Ok(Forward { output: x, features })
    }

    /// Convenience forward pass on a constant input with constant parameters.
    /// Returns `(output, features)`.
    pub fn infer<R: Rng + ?Sized>(&mut self, input: &Tensor, rng: &mut R) -> Result<(Tensor, Tensor), NnError> {
        let mut tape = Tape::new();
        let binding = self.bind(&mut tape, false);
        let x = tape.constant(input.clone());
        let f = self.forward(&mut tape, &binding, x, rng)?;
        Ok((tape.value(f.output).clone(), tape.value(f.features).clone()))
    }

    /// Applies one Adam update with gradients in [`Network::params`] order.
    pub fn apply_adam(&mut self, adam: &mut AdamState, grads: &[Tensor]) {
        let mut params = self.params_mut();
        adam.update(&mut params, grads);
    }

    /// Replaces all parameters, checking count and shapes.
    pub fn set_params(&mut self, values: Vec<Tensor>) -> Result<(), NnError> {
        let mut params = self.params_mut();
        if params.len() != values.len() {
            return Err(NnError::ParamCount {
                expected: params.len(),
                actual: values.len(),
            });
        }
        for (index, (p, v)) in params.iter_mut().zip(&values).enumerate() {
            if p.shape() != v.shape() {
                return Err(NnError::ParamShape {
                    index,
                    expected: p.shape(),
                    actual: v.shape(),
                });
            }
        }
        for (p, v) in params.into_iter().zip(values) {
            *p = v;
        }
        Ok(())
    }
}
