use std::f64::consts::PI;
use std::fmt;
use std::str::FromStr;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::circuits::{self, CircuitKind, CircuitSpec, READOUT_DIM};
use crate::neural::layers::softmax;
use crate::neural::{softmax_cross_entropy, Layer, LayerSpec, Sequential, SequentialCache, Tensor};
use crate::{Error, Result};

/// Width of the dense layer feeding the quantum layer.
pub const EMBED_DIM: usize = 4;

/// What sits between the two adapter layers.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ModelKind {
    NoEntanglement,
    Bellman,
    RealAmplitudes,
    /// One dense layer of 16 units in place of the circuit.
    ClassicalV1,
    /// Dense 256 → 64 → 32 → 10 in place of the circuit.
    ClassicalV2,
}

impl ModelKind {
    pub const ALL: [ModelKind; 5] = [
        ModelKind::NoEntanglement,
        ModelKind::Bellman,
        ModelKind::RealAmplitudes,
        ModelKind::ClassicalV1,
        ModelKind::ClassicalV2,
    ];

    pub fn as_str(&self) -> &'static str {
        match self {
            ModelKind::NoEntanglement => "no_entanglement",
            ModelKind::Bellman => "bellman",
            ModelKind::RealAmplitudes => "real_amplitudes",
            ModelKind::ClassicalV1 => "classical_v1",
            ModelKind::ClassicalV2 => "classical_v2",
        }
    }

    pub fn circuit(&self) -> Option<CircuitKind> {
        match self {
            ModelKind::NoEntanglement => Some(CircuitKind::NoEntanglement),
            ModelKind::Bellman => Some(CircuitKind::Bellman),
            ModelKind::RealAmplitudes => Some(CircuitKind::RealAmplitudes),
            _ => None,
        }
    }

    fn from_circuit(kind: CircuitKind) -> Self {
        match kind {
            CircuitKind::NoEntanglement => ModelKind::NoEntanglement,
            CircuitKind::Bellman => ModelKind::Bellman,
            CircuitKind::RealAmplitudes => ModelKind::RealAmplitudes,
        }
    }
}

impl fmt::Display for ModelKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for ModelKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        ModelKind::ALL
            .into_iter()
            .find(|k| k.as_str() == s)
            .ok_or_else(|| Error::Config(format!("unknown model identifier '{s}'")))
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConvStage {
    pub channels: usize,
    pub kernel: usize,
    #[serde(default = "yes")]
    pub pool: bool,
}

fn yes() -> bool {
    true
}

/// Convolutional trunk: conv → ReLU → 2×2 max-pool per stage, then flatten,
/// a dense layer and tanh.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct CnnConfig {
    pub stages: Vec<ConvStage>,
    pub dense_units: usize,
}

impl Default for CnnConfig {
    fn default() -> Self {
        Self {
            stages: vec![
                ConvStage {
                    channels: 6,
                    kernel: 5,
                    pool: true,
                },
                ConvStage {
                    channels: 16,
                    kernel: 5,
                    pool: true,
                },
            ],
            dense_units: 64,
        }
    }
}

impl CnnConfig {
    /// Layer list for an input of shape `[channels, h, w]`.
    pub fn layer_specs(&self, input: [usize; 3]) -> Result<Vec<LayerSpec>> {
        if self.dense_units == 0 {
            return Err(Error::Config("dense_units must be positive".into()));
        }
        let mut specs = Vec::new();
        let mut shape = vec![1, input[0], input[1], input[2]];
        let mut push = |spec: LayerSpec, shape: &mut Vec<usize>| -> Result<()> {
            *shape = spec
                .output_shape(shape)
                .map_err(|e| Error::Config(format!("CNN does not fit input {input:?}: {e}")))?;
            specs.push(spec);
            Ok(())
        };
        for stage in &self.stages {
            let in_channels = shape[1];
            push(
                LayerSpec::Conv2d {
                    in_channels,
                    out_channels: stage.channels,
                    kernel: stage.kernel,
                    stride: 1,
                },
                &mut shape,
            )?;
            push(LayerSpec::Relu, &mut shape)?;
            if stage.pool {
                push(LayerSpec::MaxPool2d, &mut shape)?;
            }
        }
        push(LayerSpec::Flatten, &mut shape)?;
        push(
            LayerSpec::Dense {
                inputs: shape[1],
                units: self.dense_units,
            },
            &mut shape,
        )?;
        push(LayerSpec::Tanh, &mut shape)?;
        Ok(specs)
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ModelConfig {
    pub kind: ModelKind,
    #[serde(default)]
    pub cnn: CnnConfig,
}

/// `θ_i = π·tanh(h_i)`, mapping activations onto rotation angles in (−π, π).
pub fn angle_embedding(activations: &[f64]) -> Result<Vec<f64>> {
    if let Some(h) = activations.iter().find(|h| !h.is_finite()) {
        return Err(Error::Domain(format!("cannot embed non-finite activation {h}")));
    }
    Ok(activations.iter().map(|h| PI * h.tanh()).collect())
}

fn angle_embedding_derivative(h: f64) -> f64 {
    let t = h.tanh();
    PI * (1.0 - t * t)
}

fn classical_specs(variant: ModelKind) -> Vec<LayerSpec> {
    let dense = |inputs, units| LayerSpec::Dense { inputs, units };
    match variant {
        ModelKind::ClassicalV1 => vec![dense(EMBED_DIM, 16), LayerSpec::Tanh],
        ModelKind::ClassicalV2 => vec![
            dense(EMBED_DIM, 256),
            LayerSpec::Relu,
            dense(256, 64),
            LayerSpec::Relu,
            dense(64, 32),
            LayerSpec::Relu,
            dense(32, 10),
        ],
        _ => Vec::new(),
    }
}

/// The layer between the two adapters.
#[derive(Clone, Debug, PartialEq)]
pub enum Head {
    Quantum {
        kind: CircuitKind,
        spec: CircuitSpec,
        /// Trainable rotation angles; `None` when the circuit has none.
        weights: Option<Tensor>,
    },
    Classical {
        kind: ModelKind,
        net: Sequential,
    },
}

impl Head {
    fn quantum(kind: CircuitKind) -> Self {
        let spec = kind.build();
        let weights = (spec.n_weight_params > 0).then(|| Tensor::zeros(&[spec.n_weight_params]));
        Head::Quantum { kind, spec, weights }
    }

    pub fn output_dim(&self) -> usize {
        match self {
            Head::Quantum { spec, .. } => spec.readout_dim(),
            Head::Classical { net, .. } => net
                .output_shape(&[1, EMBED_DIM])
                .map(|s| s[1])
                .unwrap_or(0),
        }
    }

    pub fn model_kind(&self) -> ModelKind {
        match self {
            Head::Quantum { kind, .. } => ModelKind::from_circuit(*kind),
            Head::Classical { kind, .. } => *kind,
        }
    }
}

/// CNN trunk → dense adapter (→ 4) → quantum layer or classical substitute →
/// dense adapter (→ classes) → softmax.
#[derive(Clone, Debug, PartialEq)]
pub struct HybridModel {
    pub input_shape: [usize; 3],
    pub class_names: Vec<String>,
    pub cnn: Sequential,
    pub adapter_in: Layer,
    pub head: Head,
    pub adapter_out: Layer,
}

/// Intermediate values of one forward pass, kept for the backward pass.
#[derive(Clone, Debug)]
pub struct ForwardCache {
    input: Tensor,
    cnn: SequentialCache,
    features: Tensor,
    /// adapter_in output, before the angle embedding
    pre_embed: Tensor,
    angles: Vec<f64>,
    head_cache: Option<SequentialCache>,
    head_out: Tensor,
    pub logits: Tensor,
}

impl HybridModel {
    pub fn new(config: &ModelConfig, input_shape: [usize; 3], class_names: Vec<String>, seed: u64) -> Result<Self> {
        if class_names.len() < 2 {
            return Err(Error::Config(format!("a classifier needs at least 2 classes, got {}", class_names.len())));
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let cnn = Sequential::init(&config.cnn.layer_specs(input_shape)?, &mut rng);
        let adapter_in = Layer::init(
            LayerSpec::Dense {
                inputs: config.cnn.dense_units,
                units: EMBED_DIM,
            },
            &mut rng,
        );
        let head = match config.kind.circuit() {
            Some(c) => Head::quantum(c),
            None => Head::Classical {
                kind: config.kind,
                net: Sequential::init(&classical_specs(config.kind), &mut rng),
            },
        };
        let adapter_out = Layer::init(
            LayerSpec::Dense {
                inputs: head.output_dim(),
                units: class_names.len(),
            },
            &mut rng,
        );
        let model = Self {
            input_shape,
            class_names,
            cnn,
            adapter_in,
            head,
            adapter_out,
        };
        model.validate()?;
        Ok(model)
    }

    /// Zero-weight model with the given layout, used when loading checkpoints.
    pub(crate) fn from_layout(
        input_shape: [usize; 3],
        class_names: Vec<String>,
        cnn: &[LayerSpec],
        adapter_in: LayerSpec,
        head_kind: ModelKind,
        head_layers: &[LayerSpec],
        adapter_out: LayerSpec,
    ) -> Result<Self> {
        let head = match head_kind.circuit() {
            Some(c) => Head::quantum(c),
            None => Head::Classical {
                kind: head_kind,
                net: Sequential::zeroed(head_layers),
            },
        };
        let model = Self {
            input_shape,
            class_names,
            cnn: Sequential::zeroed(cnn),
            adapter_in: Layer::zeroed(adapter_in),
            head,
            adapter_out: Layer::zeroed(adapter_out),
        };
        model.validate()?;
        Ok(model)
    }

    /// Checks that every stage's widths line up.
    pub fn validate(&self) -> Result<()> {
        let n = self.class_names.len();
        if n < 2 {
            return Err(Error::Config(format!("a classifier needs at least 2 classes, got {n}")));
        }
        let shape = [1, self.input_shape[0], self.input_shape[1], self.input_shape[2]];
        let feat = self.cnn.output_shape(&shape)?;
        let embed = self.adapter_in.spec.output_shape(&feat)?;
        if embed != [1, EMBED_DIM] {
            return Err(Error::Shape(format!("input adapter must emit {EMBED_DIM} values, got {embed:?}")));
        }
        if let Head::Quantum { spec, weights, .. } = &self.head {
            if spec.n_data_params != EMBED_DIM {
                return Err(Error::Shape("circuit data width differs from the input adapter".into()));
            }
            let nw = weights.as_ref().map_or(0, Tensor::len);
            if nw != spec.n_weight_params {
                return Err(Error::Shape("circuit weight count mismatch".into()));
            }
        }
        let out = self.adapter_out.spec.output_shape(&[1, self.head.output_dim()])?;
        if out != [1, n] {
            return Err(Error::Shape(format!("output adapter must emit {n} values, got {out:?}")));
        }
        Ok(())
    }

    pub fn n_classes(&self) -> usize {
        self.class_names.len()
    }

    pub fn kind(&self) -> ModelKind {
        self.head.model_kind()
    }

    pub fn params(&self) -> Vec<&Tensor> {
        let mut out: Vec<&Tensor> = self.cnn.params().collect();
        out.extend(self.adapter_in.params.iter());
        match &self.head {
            Head::Quantum { weights, .. } => out.extend(weights.iter()),
            Head::Classical { net, .. } => out.extend(net.params()),
        }
        out.extend(self.adapter_out.params.iter());
        out
    }

    pub fn params_mut(&mut self) -> Vec<&mut Tensor> {
        let mut out: Vec<&mut Tensor> = self.cnn.params_mut().collect();
        out.extend(self.adapter_in.params.iter_mut());
        match &mut self.head {
            Head::Quantum { weights, .. } => out.extend(weights.iter_mut()),
            Head::Classical { net, .. } => out.extend(net.params_mut()),
        }
        out.extend(self.adapter_out.params.iter_mut());
        out
    }

    /// Position of the quantum weight tensor within [`Self::params`].
    pub fn quantum_weight_index(&self) -> Option<usize> {
        match &self.head {
            Head::Quantum { weights: Some(_), .. } => Some(self.cnn.params().count() + self.adapter_in.params.len()),
            _ => None,
        }
    }

    pub fn quantum_weights(&self) -> &[f64] {
        match &self.head {
            Head::Quantum { weights: Some(w), .. } => w.data(),
            _ => &[],
        }
    }

    fn check_image(&self, image: &Tensor) -> Result<()> {
        image.expect_shape(&self.input_shape)?;
        if !image.is_finite() {
            return Err(Error::Domain("image contains non-finite pixels".into()));
        }
        Ok(())
    }

    pub fn forward_cached(&self, image: &Tensor) -> Result<ForwardCache> {
        self.check_image(image)?;
        let [c, h, w] = self.input_shape;
        let input = image.clone().reshape(vec![1, c, h, w])?;
        let (features, cnn) = self.cnn.forward(&input)?;
        let pre_embed = self.adapter_in.forward(&features)?;
        let (angles, head_cache, head_out) = match &self.head {
            Head::Quantum { spec, weights, .. } => {
                let angles = angle_embedding(pre_embed.data())?;
                let w = weights.as_ref().map_or(&[][..], Tensor::data);
                let readout = circuits::run_circuit(spec, &angles, w)?;
                (angles, None, Tensor::new(vec![1, READOUT_DIM], readout.probs)?)
            }
            Head::Classical { net, .. } => {
                let (out, cache) = net.forward(&pre_embed)?;
                (Vec::new(), Some(cache), out)
            }
        };
        let logits = self.adapter_out.forward(&head_out)?;
        Ok(ForwardCache {
            input,
            cnn,
            features,
            pre_embed,
            angles,
            head_cache,
            head_out,
            logits,
        })
    }

    /// Class probabilities for one `[3, H, W]` image.
    pub fn forward(&self, image: &Tensor) -> Result<Vec<f64>> {
        let cache = self.forward_cached(image)?;
        Ok(softmax(&cache.logits).into_data())
    }

    pub fn predict(&self, image: &Tensor) -> Result<usize> {
        Ok(self.forward_cached(image)?.logits.argmax())
    }

    pub fn loss(&self, image: &Tensor, label: usize) -> Result<f64> {
        let cache = self.forward_cached(image)?;
        Ok(softmax_cross_entropy(&cache.logits, label)?.0)
    }

    /// Loss, logits and per-parameter gradients (in [`Self::params`] order).
    /// With `freeze_quantum`, circuit weights get zero gradient and their
    /// Jacobian columns are skipped.
    pub fn backward(&self, image: &Tensor, label: usize, freeze_quantum: bool) -> Result<Backward> {
        if label >= self.n_classes() {
            return Err(Error::Argument(format!("label {label} out of range for {} classes", self.n_classes())));
        }
        let cache = self.forward_cached(image)?;
        let (loss, grad_logits) = softmax_cross_entropy(&cache.logits, label)?;
        let grads = self.backward_from(&cache, &grad_logits, freeze_quantum)?;
        Ok(Backward {
            loss,
            logits: cache.logits,
            grads,
        })
    }

    /// Backpropagates an arbitrary gradient with respect to the logits.
    pub fn backward_from(&self, cache: &ForwardCache, grad_logits: &Tensor, freeze_quantum: bool) -> Result<Vec<Tensor>> {
        let grad_logits = grad_logits.clone().reshape(cache.logits.shape().to_vec())?;
        let (g_head_out, g_adapter_out) = self.adapter_out.backward(&grad_logits, &cache.head_out)?;

        let (g_pre_embed, g_head) = match &self.head {
            Head::Quantum { spec, weights, .. } => {
                let w = weights.as_ref().map_or(&[][..], Tensor::data);
                let columns: Vec<usize> = if freeze_quantum {
                    (0..spec.n_data_params).collect()
                } else {
                    (0..spec.n_params()).collect()
                };
                let jac = circuits::param_shift_columns(spec, &cache.angles, w, &columns)?;
                let g_theta = jac.vjp(g_head_out.data());
                let g_h: Vec<f64> = cache
                    .pre_embed
                    .data()
                    .iter()
                    .zip(&g_theta)
                    .map(|(&h, &g)| g * angle_embedding_derivative(h))
                    .collect();
                let g_w = weights
                    .as_ref()
                    .map(|_| Tensor::from_vec(g_theta[spec.n_data_params..].to_vec()));
                (Tensor::new(vec![1, EMBED_DIM], g_h)?, g_w.into_iter().collect::<Vec<_>>())
            }
            Head::Classical { net, .. } => {
                let hc = cache.head_cache.as_ref().expect("classical head caches its inputs");
                net.backward(hc, &g_head_out)?
            }
        };

        let (g_features, g_adapter_in) = self.adapter_in.backward(&g_pre_embed, &cache.features)?;
        let (_, g_cnn) = self.cnn.backward(&cache.cnn, &g_features)?;
        debug_assert_eq!(cache.input.shape()[0], 1);

        let mut grads = g_cnn;
        grads.extend(g_adapter_in);
        grads.extend(g_head);
        grads.extend(g_adapter_out);
        Ok(grads)
    }
}

/// Result of [`HybridModel::backward`].
#[derive(Clone, Debug)]
pub struct Backward {
    pub loss: f64,
    pub logits: Tensor,
    pub grads: Vec<Tensor>,
}
