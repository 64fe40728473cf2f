//! Layer kernels (forward and backward) and a sequential container.
//!
//! Image tensors are NCHW. Dense layers treat the last dimension as features
//! and every leading dimension as batch.

use rand::Rng;
use serde::{Deserialize, Serialize};

use super::Tensor;
use crate::{Error, Result};

fn dims4(t: &Tensor, what: &str) -> Result<[usize; 4]> {
    match *t.shape() {
        [n, c, h, w] => Ok([n, c, h, w]),
        ref s => Err(Error::Shape(format!("{what} must be NCHW, got {s:?}"))),
    }
}

fn conv_out_dim(input: usize, kernel: usize, stride: usize) -> Result<usize> {
    if kernel == 0 || stride == 0 {
        return Err(Error::Shape("kernel and stride must be positive".into()));
    }
    if input < kernel {
        return Err(Error::Shape(format!(
            "spatial size {input} smaller than kernel {kernel}"
        )));
    }
    Ok((input - kernel) / stride + 1)
}

/// Valid cross-correlation. `weights` is `[out, in, kh, kw]`, `bias` is `[out]`.
pub fn conv2d_forward(input: &Tensor, weights: &Tensor, bias: &Tensor, stride: usize) -> Result<Tensor> {
    let [n, c, h, w] = dims4(input, "conv input")?;
    let [o, wc, kh, kw] = dims4(weights, "conv weights")?;
    if wc != c {
        return Err(Error::Shape(format!("conv expects {wc} channels, got {c}")));
    }
    bias.expect_shape(&[o])?;
    let (ho, wo) = (conv_out_dim(h, kh, stride)?, conv_out_dim(w, kw, stride)?);
    let x = input.data();
    let k = weights.data();
    let mut out = vec![0.0; n * o * ho * wo];
    for b in 0..n {
        for oc in 0..o {
            let dst = &mut out[(b * o + oc) * ho * wo..][..ho * wo];
            dst.iter_mut().for_each(|v| *v = bias.data()[oc]);
            for ic in 0..c {
                let src = &x[(b * c + ic) * h * w..][..h * w];
                let ker = &k[(oc * c + ic) * kh * kw..][..kh * kw];
                for oy in 0..ho {
                    for ox in 0..wo {
                        let mut acc = 0.0;
                        for ky in 0..kh {
                            let row = &src[(oy * stride + ky) * w + ox * stride..][..kw];
                            let krow = &ker[ky * kw..][..kw];
                            acc += row.iter().zip(krow).map(|(a, b)| a * b).sum::<f64>();
                        }
                        dst[oy * wo + ox] += acc;
                    }
                }
            }
        }
    }
    Tensor::new(vec![n, o, ho, wo], out)
}

/// Gradients of [`conv2d_forward`] with respect to input, weights and bias.
pub fn conv2d_backward(
    grad_out: &Tensor,
    input: &Tensor,
    weights: &Tensor,
    stride: usize,
) -> Result<(Tensor, Tensor, Tensor)> {
    let [n, c, h, w] = dims4(input, "conv input")?;
    let [o, _, kh, kw] = dims4(weights, "conv weights")?;
    let (ho, wo) = (conv_out_dim(h, kh, stride)?, conv_out_dim(w, kw, stride)?);
    grad_out.expect_shape(&[n, o, ho, wo])?;
    let (x, k, g) = (input.data(), weights.data(), grad_out.data());
    let mut gi = vec![0.0; x.len()];
    let mut gw = vec![0.0; k.len()];
    let mut gb = vec![0.0; o];
    for b in 0..n {
        for oc in 0..o {
            let go = &g[(b * o + oc) * ho * wo..][..ho * wo];
            gb[oc] += go.iter().sum::<f64>();
            for ic in 0..c {
                let base_x = (b * c + ic) * h * w;
                let base_k = (oc * c + ic) * kh * kw;
                for oy in 0..ho {
                    for ox in 0..wo {
                        let gv = go[oy * wo + ox];
                        if gv == 0.0 {
                            continue;
                        }
                        for ky in 0..kh {
                            let xi = base_x + (oy * stride + ky) * w + ox * stride;
                            let ki = base_k + ky * kw;
                            for kx in 0..kw {
                                gw[ki + kx] += gv * x[xi + kx];
                                gi[xi + kx] += gv * k[ki + kx];
                            }
                        }
                    }
                }
            }
        }
    }
    Ok((
        Tensor::new(input.shape().to_vec(), gi)?,
        Tensor::new(weights.shape().to_vec(), gw)?,
        Tensor::new(vec![o], gb)?,
    ))
}

fn dense_dims(input: &Tensor, weights: &Tensor, bias: &Tensor) -> Result<(usize, usize, usize)> {
    let (out, inp) = match *weights.shape() {
        [o, i] => (o, i),
        ref s => return Err(Error::Shape(format!("dense weights must be 2-D, got {s:?}"))),
    };
    bias.expect_shape(&[out])?;
    let last = *input.shape().last().expect("tensor has at least one dim");
    if last != inp {
        return Err(Error::Shape(format!("dense expects {inp} features, got {last}")));
    }
    Ok((input.len() / inp, inp, out))
}

/// `y = W x + b` over the last dimension. `weights` is `[out, in]`.
pub fn dense_forward(input: &Tensor, weights: &Tensor, bias: &Tensor) -> Result<Tensor> {
    let (batch, inp, out) = dense_dims(input, weights, bias)?;
    let (x, wd) = (input.data(), weights.data());
    let mut y = Vec::with_capacity(batch * out);
    for b in 0..batch {
        let xr = &x[b * inp..][..inp];
        for o in 0..out {
            let wr = &wd[o * inp..][..inp];
            y.push(bias.data()[o] + xr.iter().zip(wr).map(|(a, b)| a * b).sum::<f64>());
        }
    }
    let mut shape = input.shape().to_vec();
    *shape.last_mut().expect("non-empty shape") = out;
    Tensor::new(shape, y)
}

pub fn dense_backward(grad_out: &Tensor, input: &Tensor, weights: &Tensor) -> Result<(Tensor, Tensor, Tensor)> {
    let bias_shape = Tensor::zeros(&[weights.shape()[0]]);
    let (batch, inp, out) = dense_dims(input, weights, &bias_shape)?;
    if grad_out.len() != batch * out {
        return Err(Error::Shape(format!(
            "dense grad has {} values, expected {}",
            grad_out.len(),
            batch * out
        )));
    }
    let (x, wd, g) = (input.data(), weights.data(), grad_out.data());
    let mut gi = vec![0.0; x.len()];
    let mut gw = vec![0.0; wd.len()];
    let mut gb = vec![0.0; out];
    for b in 0..batch {
        let xr = &x[b * inp..][..inp];
        let gir = &mut gi[b * inp..][..inp];
        for o in 0..out {
            let gv = g[b * out + o];
            gb[o] += gv;
            let wr = &wd[o * inp..][..inp];
            let gwr = &mut gw[o * inp..][..inp];
            for i in 0..inp {
                gwr[i] += gv * xr[i];
                gir[i] += gv * wr[i];
            }
        }
    }
    Ok((
        Tensor::new(input.shape().to_vec(), gi)?,
        Tensor::new(weights.shape().to_vec(), gw)?,
        Tensor::new(vec![out], gb)?,
    ))
}

/// 2×2 max pooling with stride 2. Spatial dims must be even.
pub fn maxpool2x2_forward(input: &Tensor) -> Result<Tensor> {
    let [n, c, h, w] = dims4(input, "pool input")?;
    if h % 2 != 0 || w % 2 != 0 {
        return Err(Error::Shape(format!("2x2 pooling needs even spatial dims, got {h}x{w}")));
    }
    let x = input.data();
    let (ho, wo) = (h / 2, w / 2);
    let mut out = Vec::with_capacity(n * c * ho * wo);
    for plane in x.chunks_exact(h * w) {
        for oy in 0..ho {
            for ox in 0..wo {
                let i = pool_argmax(plane, w, oy, ox);
                out.push(plane[i]);
            }
        }
    }
    Tensor::new(vec![n, c, ho, wo], out)
}

/// Index of the window maximum; the first in row-major order wins ties.
fn pool_argmax(plane: &[f64], w: usize, oy: usize, ox: usize) -> usize {
    let base = 2 * oy * w + 2 * ox;
    let mut best = base;
    for i in [base + 1, base + w, base + w + 1] {
        if plane[i] > plane[best] {
            best = i;
        }
    }
    best
}

pub fn maxpool2x2_backward(grad_out: &Tensor, input: &Tensor) -> Result<Tensor> {
    let [n, c, h, w] = dims4(input, "pool input")?;
    if h % 2 != 0 || w % 2 != 0 {
        return Err(Error::Shape(format!("2x2 pooling needs even spatial dims, got {h}x{w}")));
    }
    let (ho, wo) = (h / 2, w / 2);
    grad_out.expect_shape(&[n, c, ho, wo])?;
    let mut gi = vec![0.0; input.len()];
    for (p, (plane, gplane)) in input
        .data()
        .chunks_exact(h * w)
        .zip(grad_out.data().chunks_exact(ho * wo))
        .enumerate()
    {
        for oy in 0..ho {
            for ox in 0..wo {
                gi[p * h * w + pool_argmax(plane, w, oy, ox)] += gplane[oy * wo + ox];
            }
        }
    }
    Tensor::new(input.shape().to_vec(), gi)
}

pub fn relu_forward(input: &Tensor) -> Tensor {
    input.map(|x| x.max(0.0))
}

pub fn relu_backward(grad_out: &Tensor, input: &Tensor) -> Result<Tensor> {
    grad_out.zip_map(input, |g, x| if x > 0.0 { g } else { 0.0 })
}

pub fn tanh_forward(input: &Tensor) -> Tensor {
    input.map(f64::tanh)
}

pub fn tanh_backward(grad_out: &Tensor, input: &Tensor) -> Result<Tensor> {
    grad_out.zip_map(input, |g, x| {
        let t = x.tanh();
        g * (1.0 - t * t)
    })
}

/// `[n, ...] -> [n, prod(...)]`.
pub fn flatten_forward(input: &Tensor) -> Result<Tensor> {
    let n = input.shape()[0];
    input.clone().reshape(vec![n, input.len() / n])
}

pub fn flatten_backward(grad_out: &Tensor, input: &Tensor) -> Result<Tensor> {
    grad_out.clone().reshape(input.shape().to_vec())
}

/// Numerically stable softmax over the last dimension.
pub fn softmax(input: &Tensor) -> Tensor {
    let last = *input.shape().last().expect("non-empty shape");
    let mut out = input.clone();
    for row in out.data_mut().chunks_exact_mut(last) {
        let max = row.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let mut sum = 0.0;
        for v in row.iter_mut() {
            *v = (*v - max).exp();
            sum += *v;
        }
        row.iter_mut().for_each(|v| *v /= sum);
    }
    out
}

pub fn softmax_backward(grad_out: &Tensor, input: &Tensor) -> Result<Tensor> {
    input.expect_shape(grad_out.shape())?;
    let s = softmax(input);
    let last = *input.shape().last().expect("non-empty shape");
    let mut gi = grad_out.clone();
    for (gr, sr) in gi.data_mut().chunks_exact_mut(last).zip(s.data().chunks_exact(last)) {
        let dot: f64 = gr.iter().zip(sr).map(|(g, s)| g * s).sum();
        gr.iter_mut().zip(sr).for_each(|(g, s)| *g = s * (*g - dot));
    }
    Ok(gi)
}

/// Layer description without weights; serializable into checkpoints.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum LayerSpec {
    Conv2d {
        in_channels: usize,
        out_channels: usize,
        kernel: usize,
        stride: usize,
    },
    MaxPool2d,
    Dense {
        inputs: usize,
        units: usize,
    },
    Relu,
    Tanh,
    Flatten,
    Softmax,
}

impl LayerSpec {
    /// Shapes of this layer's parameter tensors, in storage order.
    pub fn param_shapes(&self) -> Vec<Vec<usize>> {
        match *self {
            LayerSpec::Conv2d {
                in_channels,
                out_channels,
                kernel,
                ..
            } => vec![vec![out_channels, in_channels, kernel, kernel], vec![out_channels]],
            LayerSpec::Dense { inputs, units } => vec![vec![units, inputs], vec![units]],
            _ => Vec::new(),
        }
    }

    fn fan_in(&self) -> usize {
        match *self {
            LayerSpec::Conv2d {
                in_channels, kernel, ..
            } => in_channels * kernel * kernel,
            LayerSpec::Dense { inputs, .. } => inputs,
            _ => 1,
        }
    }

    pub fn output_shape(&self, input: &[usize]) -> Result<Vec<usize>> {
        match *self {
            LayerSpec::Conv2d {
                in_channels,
                out_channels,
                kernel,
                stride,
            } => match *input {
                [n, c, h, w] if c == in_channels => Ok(vec![
                    n,
                    out_channels,
                    conv_out_dim(h, kernel, stride)?,
                    conv_out_dim(w, kernel, stride)?,
                ]),
                _ => Err(Error::Shape(format!(
                    "conv expects [n, {in_channels}, h, w], got {input:?}"
                ))),
            },
            LayerSpec::MaxPool2d => match *input {
                [n, c, h, w] if h % 2 == 0 && w % 2 == 0 => Ok(vec![n, c, h / 2, w / 2]),
                _ => Err(Error::Shape(format!("2x2 pooling cannot take {input:?}"))),
            },
            LayerSpec::Dense { inputs, units } => match input.split_last() {
                Some((&last, lead)) if last == inputs => {
                    let mut s = lead.to_vec();
                    s.push(units);
                    Ok(s)
                }
                _ => Err(Error::Shape(format!("dense expects {inputs} features, got {input:?}"))),
            },
            LayerSpec::Flatten => match input.split_first() {
                Some((&n, rest)) => Ok(vec![n, rest.iter().product()]),
                None => Err(Error::Shape("cannot flatten a scalar".into())),
            },
            LayerSpec::Relu | LayerSpec::Tanh | LayerSpec::Softmax => Ok(input.to_vec()),
        }
    }
}

/// A layer and its parameters (`[weights, bias]` for conv and dense).
#[derive(Clone, Debug, PartialEq)]
pub struct Layer {
    pub spec: LayerSpec,
    pub params: Vec<Tensor>,
}

impl Layer {
    /// Uniform(±√(1/fan_in)) initialization.
    pub fn init(spec: LayerSpec, rng: &mut impl Rng) -> Self {
        let bound = (1.0 / spec.fan_in() as f64).sqrt();
        let params = spec
            .param_shapes()
            .iter()
            .map(|s| Tensor::uniform(s, bound, rng))
            .collect();
        Self { spec, params }
    }

    pub fn zeroed(spec: LayerSpec) -> Self {
        let params = spec.param_shapes().iter().map(|s| Tensor::zeros(s)).collect();
        Self { spec, params }
    }

    pub fn forward(&self, x: &Tensor) -> Result<Tensor> {
        match self.spec {
            LayerSpec::Conv2d { stride, .. } => conv2d_forward(x, &self.params[0], &self.params[1], stride),
            LayerSpec::Dense { .. } => dense_forward(x, &self.params[0], &self.params[1]),
            LayerSpec::MaxPool2d => maxpool2x2_forward(x),
            LayerSpec::Relu => Ok(relu_forward(x)),
            LayerSpec::Tanh => Ok(tanh_forward(x)),
            LayerSpec::Flatten => flatten_forward(x),
            LayerSpec::Softmax => Ok(softmax(x)),
        }
    }

    /// Returns the input gradient and parameter gradients (same order as
    /// `params`).
    pub fn backward(&self, grad_out: &Tensor, input: &Tensor) -> Result<(Tensor, Vec<Tensor>)> {
        match self.spec {
            LayerSpec::Conv2d { stride, .. } => {
                let (gi, gw, gb) = conv2d_backward(grad_out, input, &self.params[0], stride)?;
                Ok((gi, vec![gw, gb]))
            }
            LayerSpec::Dense { .. } => {
                let (gi, gw, gb) = dense_backward(grad_out, input, &self.params[0])?;
                Ok((gi, vec![gw, gb]))
            }
            LayerSpec::MaxPool2d => Ok((maxpool2x2_backward(grad_out, input)?, Vec::new())),
            LayerSpec::Relu => Ok((relu_backward(grad_out, input)?, Vec::new())),
            LayerSpec::Tanh => Ok((tanh_backward(grad_out, input)?, Vec::new())),
            LayerSpec::Flatten => Ok((flatten_backward(grad_out, input)?, Vec::new())),
            LayerSpec::Softmax => Ok((softmax_backward(grad_out, input)?, Vec::new())),
        }
    }
}

/// Layers applied in order.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct Sequential {
    pub layers: Vec<Layer>,
}

/// Inputs seen by each layer during a forward pass.
#[derive(Clone, Debug)]
pub struct SequentialCache {
    inputs: Vec<Tensor>,
}

impl Sequential {
    pub fn init(specs: &[LayerSpec], rng: &mut impl Rng) -> Self {
        Self {
            layers: specs.iter().map(|s| Layer::init(s.clone(), rng)).collect(),
        }
    }

    pub fn zeroed(specs: &[LayerSpec]) -> Self {
        Self {
            layers: specs.iter().map(|s| Layer::zeroed(s.clone())).collect(),
        }
    }

    pub fn specs(&self) -> Vec<LayerSpec> {
        self.layers.iter().map(|l| l.spec.clone()).collect()
    }

    pub fn output_shape(&self, input: &[usize]) -> Result<Vec<usize>> {
        self.layers
            .iter()
            .try_fold(input.to_vec(), |s, l| l.spec.output_shape(&s))
    }

    pub fn params(&self) -> impl Iterator<Item = &Tensor> {
        self.layers.iter().flat_map(|l| l.params.iter())
    }

    pub fn params_mut(&mut self) -> impl Iterator<Item = &mut Tensor> {
        self.layers.iter_mut().flat_map(|l| l.params.iter_mut())
    }

    pub fn forward(&self, x: &Tensor) -> Result<(Tensor, SequentialCache)> {
        let mut inputs = Vec::with_capacity(self.layers.len());
        let mut cur = x.clone();
        for layer in &self.layers {
            let next = layer.forward(&cur)?;
            inputs.push(cur);
            cur = next;
        }
        Ok((cur, SequentialCache { inputs }))
    }

    /// Input gradient and the gradient of every parameter, in `params()` order.
    pub fn backward(&self, cache: &SequentialCache, grad_out: &Tensor) -> Result<(Tensor, Vec<Tensor>)> {
        let mut per_layer = Vec::with_capacity(self.layers.len());
        let mut g = grad_out.clone();
        for (layer, input) in self.layers.iter().zip(&cache.inputs).rev() {
            let (gi, pg) = layer.backward(&g, input)?;
            per_layer.push(pg);
            g = gi;
        }
        per_layer.reverse();
        Ok((g, per_layer.into_iter().flatten().collect()))
    }
}
