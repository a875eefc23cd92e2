//! Linear and one-hidden-layer predictors with hand-written reverse mode,
//! plus Adam and a reduce-on-plateau learning-rate schedule.
//!
//! Parameters are exposed as one flat vector (layer by layer, weights
//! row-major then bias) so optimizers never see the layer structure.

use std::path::Path;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{check_len, Error, Result};
use crate::linalg::Matrix;
use crate::scalar::Scalar;

const CHECKPOINT_VERSION: u32 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "type")]
pub enum ModelKind {
    Linear,
    Mlp { hidden: usize },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OutputActivation {
    #[default]
    None,
    Relu,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Scalar")]
pub struct Layer<T> {
    /// `out × in`
    pub weight: Matrix<T>,
    pub bias: Vec<T>,
}

impl<T: Scalar> Layer<T> {
    fn affine(&self, z: &[T]) -> Vec<T> {
        let mut a = self.weight.mul_vec(z);
        for (ai, &b) in a.iter_mut().zip(&self.bias) {
            *ai += b;
        }
        a
    }

    fn num_params(&self) -> usize {
        self.weight.rows() * self.weight.cols() + self.bias.len()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Scalar")]
pub struct PredictiveModel<T> {
    pub kind: ModelKind,
    pub input_dim: usize,
    pub output_dim: usize,
    pub output_activation: OutputActivation,
    pub layers: Vec<Layer<T>>,
}

/// Gradients of a scalar loss w.r.t. the flat parameter vector and the input.
#[derive(Debug, Clone, PartialEq)]
pub struct Gradients<T> {
    pub params: Vec<T>,
    pub input: Vec<T>,
}

fn relu<T: Scalar>(v: T) -> T {
    v.max(T::zero())
}

impl<T: Scalar> PredictiveModel<T> {
    /// Weights `U(−1/√fan_in, 1/√fan_in)`, biases zero.
    pub fn new<R: Rng + ?Sized>(
        kind: ModelKind,
        input_dim: usize,
        output_dim: usize,
        output_activation: OutputActivation,
        rng: &mut R,
    ) -> Result<Self> {
        if input_dim == 0 || output_dim == 0 {
            return Err(Error::InvalidConfig(
                "model dimensions must be positive".into(),
            ));
        }
        let shapes = match kind {
            ModelKind::Linear => vec![(output_dim, input_dim)],
            ModelKind::Mlp { hidden } => {
                if hidden == 0 {
                    return Err(Error::InvalidConfig(
                        "MLP hidden width must be positive".into(),
                    ));
                }
                vec![(hidden, input_dim), (output_dim, hidden)]
            }
        };
        let layers = shapes
            .into_iter()
            .map(|(out, inp)| {
                let bound = 1.0 / (inp as f64).sqrt();
                let data = (0..out * inp)
                    .map(|_| T::of(rng.random_range(-bound..=bound)))
                    .collect();
                Layer {
                    weight: Matrix::from_row_major(out, inp, data).expect("shape by construction"),
                    bias: vec![T::zero(); out],
                }
            })
            .collect();
        Ok(Self {
            kind,
            input_dim,
            output_dim,
            output_activation,
            layers,
        })
    }

    /// Single affine layer with the given weights (`k × l`) and bias.
    pub fn linear(
        weight: Matrix<T>,
        bias: Vec<T>,
        output_activation: OutputActivation,
    ) -> Result<Self> {
        check_len("linear bias", weight.rows(), bias.len())?;
        Ok(Self {
            kind: ModelKind::Linear,
            input_dim: weight.cols(),
            output_dim: weight.rows(),
            output_activation,
            layers: vec![Layer { weight, bias }],
        })
    }

    pub fn num_params(&self) -> usize {
        self.layers.iter().map(Layer::num_params).sum()
    }

    pub fn params(&self) -> Vec<T> {
        let mut p = Vec::with_capacity(self.num_params());
        for layer in &self.layers {
            p.extend_from_slice(layer.weight.as_slice());
            p.extend_from_slice(&layer.bias);
        }
        p
    }

    pub fn set_params(&mut self, params: &[T]) -> Result<()> {
        check_len("model parameters", self.num_params(), params.len())?;
        let mut off = 0;
        for layer in &mut self.layers {
            let nw = layer.weight.as_slice().len();
            layer
                .weight
                .as_mut_slice()
                .copy_from_slice(&params[off..off + nw]);
            off += nw;
            let nb = layer.bias.len();
            layer.bias.copy_from_slice(&params[off..off + nb]);
            off += nb;
        }
        Ok(())
    }

    /// Pre-activations of every layer.
    fn pre_activations(&self, z: &[T]) -> Vec<Vec<T>> {
        let mut pre = Vec::with_capacity(self.layers.len());
        let mut h = z.to_vec();
        for (i, layer) in self.layers.iter().enumerate() {
            let a = layer.affine(&h);
            if i + 1 < self.layers.len() {
                h = a.iter().map(|&v| relu(v)).collect();
            }
            pre.push(a);
        }
        pre
    }

    pub fn forward(&self, z: &[T]) -> Result<Vec<T>> {
        check_len("model input", self.input_dim, z.len())?;
        let mut out = self.pre_activations(z).pop().expect("at least one layer");
        if self.output_activation == OutputActivation::Relu {
            out.iter_mut().for_each(|v| *v = relu(*v));
        }
        Ok(out)
    }

    /// Reverse-mode gradients of `upstreamᵀ · forward(z)`.
    pub fn backward(&self, z: &[T], upstream: &[T]) -> Result<Gradients<T>> {
        check_len("model input", self.input_dim, z.len())?;
        check_len("upstream gradient", self.output_dim, upstream.len())?;
        let pre = self.pre_activations(z);
        let last = self.layers.len() - 1;
        let mut delta: Vec<T> = upstream.to_vec();
        if self.output_activation == OutputActivation::Relu {
            for (d, &a) in delta.iter_mut().zip(&pre[last]) {
                if a <= T::zero() {
                    *d = T::zero();
                }
            }
        }
        let mut params = vec![T::zero(); self.num_params()];
        let mut offsets = Vec::with_capacity(self.layers.len());
        let mut off = 0;
        for layer in &self.layers {
            offsets.push(off);
            off += layer.num_params();
        }
        for i in (0..=last).rev() {
            let layer = &self.layers[i];
            let input: Vec<T> = if i == 0 {
                z.to_vec()
            } else {
                pre[i - 1].iter().map(|&v| relu(v)).collect()
            };
            let cols = layer.weight.cols();
            let base = offsets[i];
            for (r, &d) in delta.iter().enumerate() {
                if d == T::zero() {
                    continue;
                }
                for (c, &x) in input.iter().enumerate() {
                    params[base + r * cols + c] = d * x;
                }
                params[base + layer.weight.rows() * cols + r] = d;
            }
            let mut back = layer.weight.tr_mul_vec(&delta);
            if i > 0 {
                for (b, &a) in back.iter_mut().zip(&pre[i - 1]) {
                    if a <= T::zero() {
                        *b = T::zero();
                    }
                }
            }
            delta = back;
        }
        Ok(Gradients {
            params,
            input: delta,
        })
    }

    pub fn save_checkpoint(&self, path: impl AsRef<Path>) -> Result<()> {
        #[derive(Serialize)]
        #[serde(bound = "T: Scalar")]
        struct Out<'a, T> {
            version: u32,
            model: &'a PredictiveModel<T>,
        }
        let json = serde_json::to_string(&Out {
            version: CHECKPOINT_VERSION,
            model: self,
        })
        .map_err(|e| Error::Io(e.to_string()))?;
        std::fs::write(path, json)?;
        Ok(())
    }

    pub fn load_checkpoint(path: impl AsRef<Path>) -> Result<Self> {
        #[derive(Deserialize)]
        #[serde(bound = "T: Scalar")]
        struct In<T> {
            version: u32,
            model: PredictiveModel<T>,
        }
        let text = std::fs::read_to_string(path)?;
        let parsed: In<T> = serde_json::from_str(&text).map_err(|e| Error::Io(e.to_string()))?;
        if parsed.version != CHECKPOINT_VERSION {
            return Err(Error::InvalidConfig(format!(
                "unsupported checkpoint version {}",
                parsed.version
            )));
        }
        parsed.model.validate()?;
        Ok(parsed.model)
    }

    fn validate(&self) -> Result<()> {
        let mut dim = self.input_dim;
        for layer in &self.layers {
            check_len("checkpoint layer input", dim, layer.weight.cols())?;
            check_len(
                "checkpoint layer bias",
                layer.weight.rows(),
                layer.bias.len(),
            )?;
            dim = layer.weight.rows();
        }
        check_len("checkpoint output", self.output_dim, dim)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Scalar")]
pub struct AdamState<T> {
    pub lr: T,
    pub beta1: T,
    pub beta2: T,
    pub eps: T,
    pub step: u64,
    m: Vec<T>,
    v: Vec<T>,
}

impl<T: Scalar> AdamState<T> {
    pub fn new(num_params: usize, lr: T) -> Self {
        Self {
            lr,
            beta1: T::of(0.9),
            beta2: T::of(0.999),
            eps: T::of(1e-8),
            step: 0,
            m: vec![T::zero(); num_params],
            v: vec![T::zero(); num_params],
        }
    }

    /// Bias-corrected Adam update of `params` in place. Rejects non-finite
    /// gradients before touching any state.
    pub fn step(&mut self, params: &mut [T], grads: &[T]) -> Result<()> {
        check_len("adam parameters", self.m.len(), params.len())?;
        check_len("adam gradients", self.m.len(), grads.len())?;
        if grads.iter().any(|g| !g.is_finite()) {
            return Err(Error::NonFinite("gradient"));
        }
        self.step += 1;
        let t = self.step as i32;
        let c1 = T::one() - self.beta1.powi(t);
        let c2 = T::one() - self.beta2.powi(t);
        for i in 0..params.len() {
            let g = grads[i];
            self.m[i] = self.beta1 * self.m[i] + (T::one() - self.beta1) * g;
            self.v[i] = self.beta2 * self.v[i] + (T::one() - self.beta2) * g * g;
            let m_hat = self.m[i] / c1;
            let v_hat = self.v[i] / c2;
            params[i] -= self.lr * m_hat / (v_hat.sqrt() + self.eps);
        }
        Ok(())
    }
}

/// Multiplies the learning rate by `factor` once the metric has failed to
/// improve by more than `threshold` for `patience` consecutive epochs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Scalar")]
pub struct PlateauScheduler<T> {
    pub lr: T,
    pub factor: T,
    pub patience: usize,
    pub min_lr: T,
    pub threshold: T,
    pub best: Option<T>,
    pub epochs_since_improve: usize,
}

impl<T: Scalar> PlateauScheduler<T> {
    pub fn new(lr: T) -> Self {
        Self {
            lr,
            factor: T::of(0.1),
            patience: 10,
            min_lr: T::of(1e-6),
            threshold: T::of(1e-8),
            best: None,
            epochs_since_improve: 0,
        }
    }

    pub fn step(&mut self, metric: T) -> Result<T> {
        if !metric.is_finite() {
            return Err(Error::NonFinite("validation metric"));
        }
        match self.best {
            Some(b) if !(metric < b - self.threshold) => self.epochs_since_improve += 1,
            _ => {
                self.best = Some(metric);
                self.epochs_since_improve = 0;
            }
        }
        if self.epochs_since_improve >= self.patience {
            self.lr = (self.lr * self.factor).max(self.min_lr.min(self.lr));
            self.epochs_since_improve = 0;
        }
        Ok(self.lr)
    }
}
