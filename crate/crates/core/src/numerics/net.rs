use rand::Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use super::optim::OptimizerState;
use super::{NumericsError, Tensor};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Activation {
    Relu,
    Sigmoid,
    Tanh,
    Identity,
}

impl Activation {
    #[inline]
    pub fn apply(self, x: f64) -> f64 {
        match self {
            Activation::Relu => x.max(0.0),
            Activation::Sigmoid => sigmoid(x),
            Activation::Tanh => x.tanh(),
            Activation::Identity => x,
        }
    }

    /// Derivative expressed through the activation's *output*. All four
    /// activations admit this form, so the backward pass only keeps outputs.
    #[inline]
    fn derivative_from_output(self, a: f64) -> f64 {
        match self {
            Activation::Relu => {
                if a > 0.0 {
                    1.0
                } else {
                    0.0
                }
            }
            Activation::Sigmoid => a * (1.0 - a),
            Activation::Tanh => 1.0 - a * a,
            Activation::Identity => 1.0,
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

/// Fully connected layer computing `act(x·W + b)`, with `W` stored
/// `input_dim × output_dim` row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct DenseLayer {
    input_dim: usize,
    output_dim: usize,
    weights: Vec<f64>,
    bias: Vec<f64>,
    activation: Activation,
}

impl DenseLayer {
    pub fn new(
        input_dim: usize,
        output_dim: usize,
        weights: Vec<f64>,
        bias: Vec<f64>,
        activation: Activation,
    ) -> Result<Self, NumericsError> {
        if input_dim == 0 || output_dim == 0 {
            return Err(NumericsError::InvalidShape(vec![input_dim, output_dim]));
        }
        if weights.len() != input_dim * output_dim {
            return Err(NumericsError::ShapeMismatch {
                expected: vec![input_dim, output_dim],
                found: vec![weights.len()],
            });
        }
        if bias.len() != output_dim {
            return Err(NumericsError::ShapeMismatch {
                expected: vec![output_dim],
                found: vec![bias.len()],
            });
        }
        if weights.iter().chain(&bias).any(|v| !v.is_finite()) {
            return Err(NumericsError::NonFinite("layer parameters"));
        }
        Ok(Self {
            input_dim,
            output_dim,
            weights,
            bias,
            activation,
        })
    }

    /// He-normal weights for relu layers, Xavier-normal otherwise; zero bias.
    pub fn init<R: Rng + ?Sized>(
        input_dim: usize,
        output_dim: usize,
        activation: Activation,
        rng: &mut R,
    ) -> Result<Self, NumericsError> {
        if input_dim == 0 || output_dim == 0 {
            return Err(NumericsError::InvalidShape(vec![input_dim, output_dim]));
        }
        let std = match activation {
            Activation::Relu => (2.0 / input_dim as f64).sqrt(),
            _ => (2.0 / (input_dim + output_dim) as f64).sqrt(),
        };
        let normal = Normal::new(0.0, std).expect("positive std");
        let weights = (0..input_dim * output_dim)
            .map(|_| normal.sample(rng))
            .collect();
        Self::new(
            input_dim,
            output_dim,
            weights,
            vec![0.0; output_dim],
            activation,
        )
    }

    pub fn input_dim(&self) -> usize {
        self.input_dim
    }

    pub fn output_dim(&self) -> usize {
        self.output_dim
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn bias(&self) -> &[f64] {
        &self.bias
    }

    pub fn activation(&self) -> Activation {
        self.activation
    }

    fn num_params(&self) -> usize {
        self.weights.len() + self.bias.len()
    }

    fn forward_rows(&self, input: &[f64], rows: usize) -> Vec<f64> {
        let mut out = vec![0.0; rows * self.output_dim];
        gemm(
            rows,
            self.input_dim,
            self.output_dim,
            input,
            (self.input_dim as isize, 1),
            &self.weights,
            (self.output_dim as isize, 1),
            &mut out,
        );
        for row in out.chunks_exact_mut(self.output_dim) {
            for (v, b) in row.iter_mut().zip(&self.bias) {
                *v = self.activation.apply(*v + b);
            }
        }
        out
    }
}

/// `c = a · b` for row-major `c` (`m × n`); `a` and `b` are given with
/// explicit (row, column) strides so transposed operands need no copy.
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
) {
    assert!(a.len() >= m * k && b.len() >= k * n && c.len() == m * n);
    // SAFETY: the operand extents were checked above and every stride
    // combination used in this module addresses within those extents.
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
            0.0,
            c.as_mut_ptr(),
            n as isize,
            1,
        );
    }
}

/// Gradients for one layer, laid out like the layer's parameters.
#[derive(Debug, Clone, PartialEq)]
pub struct LayerGrads {
    pub weights: Vec<f64>,
    pub bias: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ParamGrads {
    pub layers: Vec<LayerGrads>,
}

impl ParamGrads {
    /// Concatenates every layer's weight then bias gradient, matching
    /// [`DenseNet::params_flat`].
    pub fn to_flat(&self) -> Vec<f64> {
        let mut flat = Vec::with_capacity(
            self.layers
                .iter()
                .map(|l| l.weights.len() + l.bias.len())
                .sum(),
        );
        for layer in &self.layers {
            flat.extend_from_slice(&layer.weights);
            flat.extend_from_slice(&layer.bias);
        }
        flat
    }
}

/// Activations retained from a forward pass: `activations[0]` is the input,
/// `activations[l + 1]` the output of layer `l`.
#[derive(Debug, Clone)]
pub struct ForwardCache {
    rows: usize,
    activations: Vec<Vec<f64>>,
}

impl ForwardCache {
    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn output(&self) -> &[f64] {
        self.activations
            .last()
            .expect("cache holds the input at least")
    }

    /// Output of layer `index` (0-based).
    pub fn layer_output(&self, index: usize) -> &[f64] {
        &self.activations[index + 1]
    }
}

/// Feed-forward stack of dense layers.
#[derive(Debug, Clone, PartialEq)]
pub struct DenseNet {
    layers: Vec<DenseLayer>,
    frozen: bool,
}

impl DenseNet {
    pub fn new(layers: Vec<DenseLayer>) -> Result<Self, NumericsError> {
        if layers.is_empty() {
            return Err(NumericsError::InvalidShape(vec![]));
        }
        for pair in layers.windows(2) {
            if pair[0].output_dim != pair[1].input_dim {
                return Err(NumericsError::ShapeMismatch {
                    expected: vec![pair[0].output_dim],
                    found: vec![pair[1].input_dim],
                });
            }
        }
        Ok(Self {
            layers,
            frozen: false,
        })
    }

    /// Randomly initialized net with layer widths `dims` (`dims.len() ==
    /// activations.len() + 1`).
    pub fn init<R: Rng + ?Sized>(
        dims: &[usize],
        activations: &[Activation],
        rng: &mut R,
    ) -> Result<Self, NumericsError> {
        if dims.len() != activations.len() + 1 || activations.is_empty() {
            return Err(NumericsError::InvalidShape(dims.to_vec()));
        }
        let layers = dims
            .windows(2)
            .zip(activations)
            .map(|(w, &act)| DenseLayer::init(w[0], w[1], act, rng))
            .collect::<Result<Vec<_>, _>>()?;
        Self::new(layers)
    }

    pub fn freeze(&mut self) {
        self.frozen = true;
    }

    pub fn frozen(self) -> Self {
        Self {
            frozen: true,
            ..self
        }
    }

    pub fn is_frozen(&self) -> bool {
        self.frozen
    }

    pub fn layers(&self) -> &[DenseLayer] {
        &self.layers
    }

    pub fn input_dim(&self) -> usize {
        self.layers[0].input_dim
    }

    pub fn output_dim(&self) -> usize {
        self.layers[self.layers.len() - 1].output_dim
    }

    pub fn num_params(&self) -> usize {
        self.layers.iter().map(DenseLayer::num_params).sum()
    }

    /// Forward pass on a `[input_dim]` vector or an `[n, input_dim]` batch.
    /// The output keeps the input's rank.
    pub fn forward(&self, input: &Tensor) -> Result<Tensor, NumericsError> {
        let (rows, cols) = input.as_rows()?;
        self.check_input(cols)?;
        let out = self.forward_rows(input.data(), rows)?;
        let shape = if input.shape().len() == 1 {
            vec![self.output_dim()]
        } else {
            vec![rows, self.output_dim()]
        };
        Ok(Tensor::from_parts_unchecked(shape, out))
    }

    /// Forward pass on `rows` row-major input vectors.
    pub fn forward_rows(&self, input: &[f64], rows: usize) -> Result<Vec<f64>, NumericsError> {
        self.check_rows(input, rows)?;
        let mut current: Option<Vec<f64>> = None;
        for layer in &self.layers {
            let x = current.as_deref().unwrap_or(input);
            current = Some(layer.forward_rows(x, rows));
        }
        Ok(current.expect("at least one layer"))
    }

    pub fn forward_cached(
        &self,
        input: &[f64],
        rows: usize,
    ) -> Result<ForwardCache, NumericsError> {
        self.check_rows(input, rows)?;
        let mut activations = Vec::with_capacity(self.layers.len() + 1);
        activations.push(input.to_vec());
        for layer in &self.layers {
            let next = layer.forward_rows(activations.last().expect("nonempty"), rows);
            activations.push(next);
        }
        Ok(ForwardCache { rows, activations })
    }

    /// Gradients of a scalar objective with respect to every parameter and
    /// to the input, given `output_grad = ∂objective/∂output`. For batched
    /// input, parameter gradients are summed over rows.
    pub fn backward(
        &self,
        input: &Tensor,
        output_grad: &Tensor,
    ) -> Result<(ParamGrads, Tensor), NumericsError> {
        let (rows, cols) = input.as_rows()?;
        self.check_input(cols)?;
        let cache = self.forward_cached(input.data(), rows)?;
        let (params, input_grad) = self.backward_cached(&cache, output_grad.data())?;
        Ok((
            params,
            Tensor::from_parts_unchecked(input.shape().to_vec(), input_grad),
        ))
    }

    pub fn backward_cached(
        &self,
        cache: &ForwardCache,
        output_grad: &[f64],
    ) -> Result<(ParamGrads, Vec<f64>), NumericsError> {
        let (params, input_grad) = self.backprop(cache, output_grad, true, true)?;
        Ok((params.expect("requested"), input_grad.expect("requested")))
    }

    /// Parameter gradients only; skips the input-gradient product.
    pub fn param_gradients(
        &self,
        cache: &ForwardCache,
        output_grad: &[f64],
    ) -> Result<ParamGrads, NumericsError> {
        Ok(self
            .backprop(cache, output_grad, true, false)?
            .0
            .expect("requested"))
    }

    /// Input gradient only, for differentiating through frozen nets.
    pub fn input_gradient(
        &self,
        cache: &ForwardCache,
        output_grad: &[f64],
    ) -> Result<Vec<f64>, NumericsError> {
        Ok(self
            .backprop(cache, output_grad, false, true)?
            .1
            .expect("requested"))
    }

    fn backprop(
        &self,
        cache: &ForwardCache,
        output_grad: &[f64],
        want_params: bool,
        want_input: bool,
    ) -> Result<(Option<ParamGrads>, Option<Vec<f64>>), NumericsError> {
        let rows = cache.rows;
        if cache.activations.len() != self.layers.len() + 1
            || cache.activations[0].len() != rows * self.input_dim()
        {
            return Err(NumericsError::ShapeMismatch {
                expected: vec![rows, self.input_dim()],
                found: vec![cache.activations[0].len()],
            });
        }
        if output_grad.len() != rows * self.output_dim() {
            return Err(NumericsError::ShapeMismatch {
                expected: vec![rows, self.output_dim()],
                found: vec![output_grad.len()],
            });
        }
        if output_grad.iter().any(|g| !g.is_finite()) {
            return Err(NumericsError::NonFinite("output gradient"));
        }

        let mut layer_grads = Vec::with_capacity(if want_params { self.layers.len() } else { 0 });
        let mut grad = output_grad.to_vec();
        for (index, layer) in self.layers.iter().enumerate().rev() {
            let out = &cache.activations[index + 1];
            let inp = &cache.activations[index];
            for (g, &a) in grad.iter_mut().zip(out) {
                *g *= layer.activation.derivative_from_output(a);
            }
            if want_params {
                let mut dw = vec![0.0; layer.input_dim * layer.output_dim];
                // dW = inputᵀ · grad
                gemm(
                    layer.input_dim,
                    rows,
                    layer.output_dim,
                    inp,
                    (1, layer.input_dim as isize),
                    &grad,
                    (layer.output_dim as isize, 1),
                    &mut dw,
                );
                let mut db = vec![0.0; layer.output_dim];
                for row in grad.chunks_exact(layer.output_dim) {
                    for (d, g) in db.iter_mut().zip(row) {
                        *d += g;
                    }
                }
                layer_grads.push(LayerGrads {
                    weights: dw,
                    bias: db,
                });
            }
            if index > 0 || want_input {
                let mut next = vec![0.0; rows * layer.input_dim];
                // dX = grad · Wᵀ
                gemm(
                    rows,
                    layer.output_dim,
                    layer.input_dim,
                    &grad,
                    (layer.output_dim as isize, 1),
                    &layer.weights,
                    (1, layer.output_dim as isize),
                    &mut next,
                );
                grad = next;
            }
        }
        let params = want_params.then(|| {
            layer_grads.reverse();
            ParamGrads {
                layers: layer_grads,
            }
        });
        Ok((params, want_input.then_some(grad)))
    }

    /// All parameters, each layer's weights then bias.
    pub fn params_flat(&self) -> Vec<f64> {
        let mut flat = Vec::with_capacity(self.num_params());
        for layer in &self.layers {
            flat.extend_from_slice(&layer.weights);
            flat.extend_from_slice(&layer.bias);
        }
        flat
    }

    pub fn set_params_flat(&mut self, flat: &[f64]) -> Result<(), NumericsError> {
        if self.frozen {
            return Err(NumericsError::Frozen);
        }
        self.write_params(flat)
    }

    pub(crate) fn write_params(&mut self, flat: &[f64]) -> Result<(), NumericsError> {
        if flat.len() != self.num_params() {
            return Err(NumericsError::ShapeMismatch {
                expected: vec![self.num_params()],
                found: vec![flat.len()],
            });
        }
        if flat.iter().any(|v| !v.is_finite()) {
            return Err(NumericsError::NonFinite("parameters"));
        }
        let mut offset = 0;
        for layer in &mut self.layers {
            let nw = layer.weights.len();
            layer.weights.copy_from_slice(&flat[offset..offset + nw]);
            offset += nw;
            let nb = layer.bias.len();
            layer.bias.copy_from_slice(&flat[offset..offset + nb]);
            offset += nb;
        }
        Ok(())
    }

    /// One optimizer step descending along `grads`. Frozen nets are left
    /// untouched and report [`NumericsError::Frozen`].
    pub fn apply_gradients(
        &mut self,
        optimizer: &mut OptimizerState,
        grads: &ParamGrads,
    ) -> Result<(), NumericsError> {
        if self.frozen {
            return Err(NumericsError::Frozen);
        }
        let mut params = self.params_flat();
        optimizer.step(&mut params, &grads.to_flat())?;
        self.write_params(&params)
    }

    /// FNV-1a over the parameter bit patterns; equal fingerprints before and
    /// after an experiment show the net was not modified.
    pub fn fingerprint(&self) -> u64 {
        let mut hash: u64 = 0xcbf2_9ce4_8422_2325;
        for value in self
            .layers
            .iter()
            .flat_map(|l| l.weights.iter().chain(&l.bias))
        {
            for byte in value.to_bits().to_le_bytes() {
                hash ^= u64::from(byte);
                hash = hash.wrapping_mul(0x0000_0100_0000_01b3);
            }
        }
        hash
    }

    fn check_input(&self, cols: usize) -> Result<(), NumericsError> {
        if cols != self.input_dim() {
            return Err(NumericsError::ShapeMismatch {
                expected: vec![self.input_dim()],
                found: vec![cols],
            });
        }
        Ok(())
    }

    fn check_rows(&self, input: &[f64], rows: usize) -> Result<(), NumericsError> {
        if rows == 0 || input.len() != rows * self.input_dim() {
            return Err(NumericsError::ShapeMismatch {
                expected: vec![rows, self.input_dim()],
                found: vec![input.len()],
            });
        }
        if input.iter().any(|v| !v.is_finite()) {
            return Err(NumericsError::NonFinite("network input"));
        }
        Ok(())
    }
}
