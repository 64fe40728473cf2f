//! Command-line front end.
//!
//! Experiments are described by a TOML file:
//!
//! ```toml
//! seed = 7
//! output_dir = "runs/synthetic"
//!
//! [dataset]
//! kind = "synthetic"        # or "directory" / "csv" with `path = "..."`
//! n_classes = 4
//! n_per_class = 50
//! image_size = 16
//! train_fraction = 0.8
//!
//! [model]
//! kind = "real_amplitudes"  # no_entanglement, bellman, classical_v1, classical_v2
//!
//! [model.cnn]
//! dense_units = 64
//! stages = [{ channels = 6, kernel = 5 }, { channels = 16, kernel = 5 }]
//!
//! [train]
//! epochs = 50
//! lr = 0.0002
//! batch_size = 32
//! ```
//!
//! The top-level `seed` drives the train/validation split, synthetic data and
//! weight initialization; `train.seed` drives batch order. Command-line flags
//! override the file. Exit codes: 0 success, 2 configuration, 3 data,
//! 4 compatibility (checkpoint or class-count mismatch), 1 anything else.

use std::f64::consts::FRAC_1_SQRT_2;
use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use clap::{Args, Parser, Subcommand};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::circuits::{
    CircuitKind, CircuitSpec, BELLMAN_ENTANGLER_LEN, READOUT_DIM, REAL_AMPLITUDES_ENCODING_LEN,
    REAL_AMPLITUDES_ENTANGLER_END,
};
use crate::datasets::{
    load_csv_manifest, load_directory, synthetic_generate, synthetic_generate_named, to_tensor, ClusterMap, Dataset,
    EUROSAT_CLASSES, EUROSAT_SIZE,
};
use crate::hybrid::{
    evaluate, load_checkpoint, save_checkpoint, train, Checkpoint, CoarseToFine, HybridModel, ModelConfig, ModelKind,
    TrainConfig, TrainHistory, TrainingMetadata,
};
use crate::metrics::{confusion_matrix, report, ConfusionMatrix};
use crate::statevector::StateVector;
use crate::util::write_atomic;
use crate::{Error, Result};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum DatasetSource {
    /// One subdirectory per class.
    Directory { path: PathBuf },
    /// `path,label` rows; relative paths resolve against the CSV's folder.
    Csv { path: PathBuf },
    /// Oriented-grating images. `class_names` defaults to `class_0..`; when
    /// given, its length must equal `n_classes`.
    Synthetic {
        n_classes: usize,
        n_per_class: usize,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        class_names: Option<Vec<String>>,
    },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DatasetConfig {
    #[serde(flatten)]
    pub source: DatasetSource,
    #[serde(default = "default_image_size")]
    pub image_size: usize,
    #[serde(default = "default_train_fraction")]
    pub train_fraction: f64,
}

fn default_image_size() -> usize {
    EUROSAT_SIZE
}

fn default_train_fraction() -> f64 {
    0.8
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    #[serde(default)]
    pub seed: u64,
    pub output_dir: PathBuf,
    pub dataset: DatasetConfig,
    pub model: ModelConfig,
    #[serde(default)]
    pub train: TrainConfig,
    /// Coarse-to-fine grouping; defaults to Vegetation / Urban / WaterBodies.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub clusters: Option<ClusterMap>,
}

impl ExperimentConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        let config: Self = toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        config.validate()?;
        Ok(config)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = fs::read_to_string(path)
            .map_err(|e| Error::Config(format!("cannot read config {}: {e}", path.display())))?;
        Self::from_toml(&text)
    }

    pub fn to_toml(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| Error::Config(e.to_string()))
    }

    pub fn validate(&self) -> Result<()> {
        self.train.validate()?;
        let d = &self.dataset;
        if d.image_size == 0 {
            return Err(Error::Config("dataset.image_size must be positive".into()));
        }
        if !(d.train_fraction > 0.0 && d.train_fraction < 1.0) {
            return Err(Error::Config(format!(
                "dataset.train_fraction {} must lie in (0, 1)",
                d.train_fraction
            )));
        }
        match &d.source {
            DatasetSource::Directory { path } if !path.is_dir() => {
                Err(Error::Config(format!("dataset directory {} does not exist", path.display())))
            }
            DatasetSource::Csv { path } if !path.is_file() => {
                Err(Error::Config(format!("dataset manifest {} does not exist", path.display())))
            }
            DatasetSource::Synthetic { n_classes, class_names, .. } => {
                if *n_classes < 2 {
                    return Err(Error::Config("synthetic datasets need at least 2 classes".into()));
                }
                match class_names {
                    Some(names) if names.len() != *n_classes => Err(Error::Config(format!(
                        "{} class names given for {n_classes} classes",
                        names.len()
                    ))),
                    _ => Ok(()),
                }
            }
            _ => Ok(()),
        }?;
        self.model
            .cnn
            .layer_specs([3, d.image_size, d.image_size])
            .map(|_| ())
    }

    pub fn cluster_map(&self) -> ClusterMap {
        self.clusters.clone().unwrap_or_default()
    }

    /// Loads or generates the full dataset.
    pub fn load_dataset(&self) -> Result<Dataset> {
        let d = &self.dataset;
        let data = match &d.source {
            DatasetSource::Directory { path } => load_directory(path)?.load(d.image_size)?,
            DatasetSource::Csv { path } => load_csv_manifest(path)?.load(d.image_size)?,
            DatasetSource::Synthetic {
                n_classes,
                n_per_class,
                class_names,
            } => match class_names {
                Some(names) => synthetic_generate_named(names, *n_per_class, d.image_size, self.seed)?,
                None => synthetic_generate(*n_classes, *n_per_class, d.image_size, self.seed)?,
            },
        };
        if data.is_empty() {
            return Err(Error::Data("dataset is empty".into()));
        }
        Ok(data)
    }

    /// Stratified train/validation split of [`Self::load_dataset`].
    pub fn load_split(&self) -> Result<(Dataset, Dataset)> {
        let data = self.load_dataset()?;
        data.split(self.dataset.train_fraction, self.seed).map_err(|e| match e {
            Error::Argument(m) => Error::Data(m),
            other => other,
        })
    }

    fn input_shape(&self) -> [usize; 3] {
        [3, self.dataset.image_size, self.dataset.image_size]
    }
}

#[derive(Debug, Parser)]
#[command(name = "hqnn", version, about = "Hybrid quantum-classical image classifier")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Train a model and write `model.ckpt` and `history.csv`.
    Train(TrainArgs),
    /// Evaluate a checkpoint and write the confusion matrix and reports.
    Eval(EvalArgs),
    /// Classify one image with a checkpoint.
    Predict(PredictArgs),
    /// Train (or load) a coarse model and one fine model per cluster, then
    /// report coarse and composite results.
    Coarse2fine(Coarse2fineArgs),
    /// Check a circuit against its closed-form states.
    CircuitDiag(CircuitDiagArgs),
}

#[derive(Debug, Default, Args)]
pub struct Overrides {
    #[arg(long)]
    pub epochs: Option<usize>,
    #[arg(long)]
    pub lr: Option<f64>,
    #[arg(long)]
    pub batch_size: Option<usize>,
    /// Sets both the experiment seed and the batch-order seed.
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub output_dir: Option<PathBuf>,
    /// Model identifier, e.g. `bellman` or `classical_v1`.
    #[arg(long, alias = "circuit")]
    pub model: Option<String>,
}

impl Overrides {
    pub fn apply(&self, config: &mut ExperimentConfig) -> Result<()> {
        if let Some(e) = self.epochs {
            config.train.epochs = e;
        }
        if let Some(lr) = self.lr {
            config.train.lr = lr;
        }
        if let Some(b) = self.batch_size {
            config.train.batch_size = b;
        }
        if let Some(s) = self.seed {
            config.seed = s;
            config.train.seed = s;
        }
        if let Some(dir) = &self.output_dir {
            config.output_dir = dir.clone();
        }
        if let Some(m) = &self.model {
            config.model.kind = ModelKind::from_str(m)?;
        }
        config.validate()
    }
}

#[derive(Debug, Args)]
pub struct TrainArgs {
    #[arg(long, short)]
    pub config: PathBuf,
    #[command(flatten)]
    pub overrides: Overrides,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, clap::ValueEnum)]
pub enum SplitChoice {
    Train,
    Val,
    All,
}

#[derive(Debug, Args)]
pub struct EvalArgs {
    #[arg(long, short)]
    pub config: PathBuf,
    #[arg(long)]
    pub checkpoint: PathBuf,
    /// Which part of the configured dataset to evaluate.
    #[arg(long, value_enum, default_value = "val")]
    pub split: SplitChoice,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub output_dir: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct PredictArgs {
    #[arg(long)]
    pub checkpoint: PathBuf,
    pub image: PathBuf,
}

#[derive(Debug, Args)]
pub struct Coarse2fineArgs {
    #[arg(long, short)]
    pub config: PathBuf,
    /// Directory holding `coarse.ckpt` and `fine_<cluster>.ckpt` to reuse
    /// instead of training.
    #[arg(long)]
    pub load: Option<PathBuf>,
    #[command(flatten)]
    pub overrides: Overrides,
}

#[derive(Debug, Args)]
pub struct CircuitDiagArgs {
    /// `no_entanglement`, `bellman` or `real_amplitudes`.
    pub circuit: String,
}

/// Sizes rayon's global pool from `HQNN_THREADS`, if set.
pub fn configure_threads() -> Result<()> {
    let Ok(value) = std::env::var("HQNN_THREADS") else {
        return Ok(());
    };
    let n: usize = value
        .trim()
        .parse()
        .ok()
        .filter(|&n| n > 0)
        .ok_or_else(|| Error::Config(format!("HQNN_THREADS must be a positive integer, got '{value}'")))?;
    // a pool may already exist inside a test harness; keep it
    let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
    Ok(())
}

pub fn run(cli: Cli) -> Result<()> {
    configure_threads()?;
    match cli.command {
        Command::Train(args) => {
            let mut config = ExperimentConfig::load(&args.config)?;
            args.overrides.apply(&mut config)?;
            let out = cmd_train(&config)?;
            if let Some(last) = out.history.last() {
                println!(
                    "trained {} for {} epochs: train acc {:.4}, val acc {}",
                    config.model.kind,
                    last.epoch,
                    last.train_acc,
                    last.val_acc.map_or("-".into(), |v| format!("{v:.4}"))
                );
            }
            println!("wrote {}", out.checkpoint.display());
            Ok(())
        }
        Command::Eval(args) => {
            let mut config = ExperimentConfig::load(&args.config)?;
            if let Some(s) = args.seed {
                config.seed = s;
            }
            if let Some(dir) = args.output_dir {
                config.output_dir = dir;
            }
            let out = cmd_eval(&config, &args.checkpoint, args.split)?;
            print!("{}", out.report_text);
            Ok(())
        }
        Command::Predict(args) => {
            let p = cmd_predict(&args.checkpoint, &args.image)?;
            println!("{}", p.class_name);
            for (name, prob) in p.class_names.iter().zip(&p.probabilities) {
                println!("  {name}: {prob:.4}");
            }
            Ok(())
        }
        Command::Coarse2fine(args) => {
            let mut config = ExperimentConfig::load(&args.config)?;
            args.overrides.apply(&mut config)?;
            let out = cmd_coarse2fine(&config, args.load.as_deref())?;
            println!("coarse\n{}", out.coarse_text);
            println!("composite\n{}", out.composite_text);
            Ok(())
        }
        Command::CircuitDiag(args) => {
            let checks = cmd_circuit_diag(&args.circuit)?;
            let mut failed = 0;
            for c in &checks {
                println!("{} {} (max deviation {:.3e})", if c.passed { "PASS" } else { "FAIL" }, c.name, c.max_error);
                failed += usize::from(!c.passed);
            }
            if failed > 0 {
                return Err(Error::Domain(format!("{failed} circuit check(s) failed")));
            }
            Ok(())
        }
    }
}

#[derive(Clone, Debug)]
pub struct TrainOutcome {
    pub model: HybridModel,
    pub history: TrainHistory,
    pub checkpoint: PathBuf,
}

fn train_model(config: &ExperimentConfig, train_set: &Dataset, val_set: &Dataset) -> Result<(HybridModel, TrainHistory)> {
    let mut model = HybridModel::new(&config.model, config.input_shape(), train_set.class_names.clone(), config.seed)?;
    let history = train(&mut model, train_set, Some(val_set), &config.train)?;
    Ok((model, history))
}

fn metadata(config: &ExperimentConfig, history: &TrainHistory) -> TrainingMetadata {
    TrainingMetadata {
        epoch: history.epochs.len(),
        loss_history: history.epochs.iter().map(|e| e.train_loss).collect(),
        seed: config.seed,
    }
}

pub fn cmd_train(config: &ExperimentConfig) -> Result<TrainOutcome> {
    config.validate()?;
    let (train_set, val_set) = config.load_split()?;
    log::info!(
        "training {} on {} images ({} validation), {} classes",
        config.model.kind,
        train_set.len(),
        val_set.len(),
        train_set.n_classes()
    );
    let (model, history) = train_model(config, &train_set, &val_set)?;
    let checkpoint = config.output_dir.join("model.ckpt");
    let ck = Checkpoint {
        model,
        metadata: metadata(config, &history),
    };
    save_checkpoint(&ck, &checkpoint)?;
    write_atomic(&config.output_dir.join("history.csv"), history.to_csv().as_bytes())?;
    Ok(TrainOutcome {
        model: ck.model,
        history,
        checkpoint,
    })
}

#[derive(Clone, Debug)]
pub struct EvalOutcome {
    pub confusion: ConfusionMatrix,
    pub report_text: String,
}

fn write_reports(dir: &Path, prefix: &str, cm: &ConfusionMatrix, class_names: &[String]) -> Result<String> {
    let r = report(cm)?;
    let text = r.to_text(class_names);
    write_atomic(&dir.join(format!("{prefix}confusion_matrix.csv")), cm.to_csv(class_names).as_bytes())?;
    write_atomic(&dir.join(format!("{prefix}report.csv")), r.to_csv(class_names).as_bytes())?;
    write_atomic(&dir.join(format!("{prefix}report.txt")), text.as_bytes())?;
    Ok(text)
}

pub fn cmd_eval(config: &ExperimentConfig, checkpoint: &Path, split: SplitChoice) -> Result<EvalOutcome> {
    let model = load_checkpoint(checkpoint)?.model;
    let data = match split {
        SplitChoice::All => config.load_dataset()?,
        SplitChoice::Train => config.load_split()?.0,
        SplitChoice::Val => config.load_split()?.1,
    };
    if data.is_empty() {
        return Err(Error::Data("nothing to evaluate".into()));
    }
    if data.n_classes() != model.n_classes() {
        return Err(Error::Compatibility(format!(
            "checkpoint predicts {} classes, dataset has {}",
            model.n_classes(),
            data.n_classes()
        )));
    }
    if data.class_names != model.class_names {
        log::warn!("dataset class names differ from the checkpoint's; labels are matched by position");
    }
    if data.items[0].pixels.shape() != model.input_shape {
        return Err(Error::Compatibility(format!(
            "checkpoint expects images {:?}, dataset provides {:?}",
            model.input_shape,
            data.items[0].pixels.shape()
        )));
    }
    let (pred, truth) = evaluate(&model, &data)?;
    let cm = confusion_matrix(&truth, &pred, model.n_classes())?;
    let report_text = write_reports(&config.output_dir, "", &cm, &model.class_names)?;
    Ok(EvalOutcome {
        confusion: cm,
        report_text,
    })
}

#[derive(Clone, Debug)]
pub struct Prediction {
    pub label: usize,
    pub class_name: String,
    pub class_names: Vec<String>,
    pub probabilities: Vec<f64>,
}

pub fn cmd_predict(checkpoint: &Path, image: &Path) -> Result<Prediction> {
    let model = load_checkpoint(checkpoint)?.model;
    let [_, h, w] = model.input_shape;
    if h != w {
        return Err(Error::Compatibility(format!("checkpoint input {h}x{w} is not square")));
    }
    let bytes = fs::read(image).map_err(|e| Error::Data(format!("cannot read {}: {e}", image.display())))?;
    let pixels = to_tensor(&bytes, h).map_err(|e| Error::Item {
        path: image.to_path_buf(),
        message: e.to_string(),
    })?;
    let probabilities = model.forward(&pixels)?;
    let label = model.predict(&pixels)?;
    Ok(Prediction {
        label,
        class_name: model.class_names[label].clone(),
        class_names: model.class_names,
        probabilities,
    })
}

#[derive(Clone, Debug)]
pub struct Coarse2fineOutcome {
    pub composite: CoarseToFine,
    pub coarse_confusion: ConfusionMatrix,
    pub composite_confusion: ConfusionMatrix,
    /// Fine-model accuracy on its own cluster's validation images.
    pub fine_accuracy: Vec<f64>,
    pub coarse_text: String,
    pub composite_text: String,
}

fn fine_checkpoint_name(cluster: &str) -> String {
    format!("fine_{cluster}.ckpt")
}

pub fn cmd_coarse2fine(config: &ExperimentConfig, load_from: Option<&Path>) -> Result<Coarse2fineOutcome> {
    config.validate()?;
    let map = config.cluster_map();
    let (train_set, val_set) = config.load_split()?;
    map.coarse_of(&train_set.class_names)?;
    let coarse_train = train_set.relabel_clusters(&map)?;
    let coarse_val = val_set.relabel_clusters(&map)?;
    let out = &config.output_dir;

    let obtain = |name: &str, tr: &Dataset, va: &Dataset| -> Result<HybridModel> {
        if let Some(dir) = load_from {
            let model = load_checkpoint(dir.join(name))?.model;
            if model.class_names != tr.class_names {
                return Err(Error::Compatibility(format!(
                    "{name} predicts {:?}, expected {:?}",
                    model.class_names, tr.class_names
                )));
            }
            return Ok(model);
        }
        log::info!("training {name} on {} images", tr.len());
        let (model, history) = train_model(config, tr, va)?;
        save_checkpoint(
            &Checkpoint {
                model: model.clone(),
                metadata: metadata(config, &history),
            },
            out.join(name),
        )?;
        Ok(model)
    };

    let coarse = obtain("coarse.ckpt", &coarse_train, &coarse_val)?;
    let mut fine = Vec::with_capacity(map.clusters.len());
    let mut fine_accuracy = Vec::with_capacity(map.clusters.len());
    for (k, cluster) in map.clusters.iter().enumerate() {
        let tr = train_set.restrict_to_cluster(&map, k)?;
        let va = val_set.restrict_to_cluster(&map, k)?;
        if cluster.classes.len() < 2 {
            return Err(Error::Config(format!(
                "cluster '{}' has a single class; a fine model needs at least 2",
                cluster.name
            )));
        }
        let model = obtain(&fine_checkpoint_name(&cluster.name), &tr, &va)?;
        fine_accuracy.push(crate::hybrid::accuracy(&model, &va)?);
        fine.push((cluster.name.clone(), model));
    }
    let composite = CoarseToFine::new(coarse, fine, map.clone(), train_set.class_names.clone())?;

    let mut coarse_pred = Vec::with_capacity(val_set.len());
    let mut fine_pred = Vec::with_capacity(val_set.len());
    for item in &val_set.items {
        let p = composite.predict(&item.pixels)?;
        coarse_pred.push(p.cluster);
        fine_pred.push(p.label);
    }
    let coarse_confusion = confusion_matrix(&coarse_val.labels(), &coarse_pred, map.clusters.len())?;
    let composite_confusion = confusion_matrix(&val_set.labels(), &fine_pred, val_set.n_classes())?;
    let coarse_text = write_reports(out, "coarse_", &coarse_confusion, &map.names())?;
    let composite_text = write_reports(out, "composite_", &composite_confusion, &val_set.class_names)?;
    Ok(Coarse2fineOutcome {
        composite,
        coarse_confusion,
        composite_confusion,
        fine_accuracy,
        coarse_text,
        composite_text,
    })
}

#[derive(Clone, Debug, PartialEq)]
pub struct DiagCheck {
    pub name: String,
    pub passed: bool,
    pub max_error: f64,
}

const DIAG_TOLERANCE: f64 = 1e-12;

fn diag(name: &str, state: &StateVector, expected: &[f64]) -> Result<DiagCheck> {
    let expected: Vec<Complex64> = expected.iter().map(|&v| Complex64::new(v, 0.0)).collect();
    let expected = StateVector::from_amplitudes(expected)?;
    let max_error = state.max_abs_diff(&expected);
    Ok(DiagCheck {
        name: name.to_string(),
        passed: max_error <= DIAG_TOLERANCE,
        max_error,
    })
}

fn basis_mix(entries: &[(usize, f64)]) -> Vec<f64> {
    let mut v = vec![0.0; READOUT_DIM];
    for &(k, a) in entries {
        v[k] = a;
    }
    v
}

/// Closed-form checks for one circuit.
pub fn cmd_circuit_diag(circuit: &str) -> Result<Vec<DiagCheck>> {
    let kind = CircuitKind::from_str(circuit)?;
    let spec: CircuitSpec = kind.build();
    let zeros = vec![0.0; spec.n_params()];
    let checks = match kind {
        CircuitKind::Bellman => vec![
            diag(
                "entangler prepares (|0000> + |1111>)/sqrt2",
                &spec.state_after(&zeros, BELLMAN_ENTANGLER_LEN)?,
                &basis_mix(&[(0b0000, FRAC_1_SQRT_2), (0b1111, FRAC_1_SQRT_2)]),
            )?,
            diag(
                "three closing CNOTs give (|0000> + |1000>)/sqrt2 at theta = 0",
                &spec.state_after(&zeros, spec.ops.len())?,
                &basis_mix(&[(0b0000, FRAC_1_SQRT_2), (0b1000, FRAC_1_SQRT_2)]),
            )?,
        ],
        CircuitKind::RealAmplitudes => {
            let psi1 = spec.state_after(&zeros, REAL_AMPLITUDES_ENCODING_LEN)?;
            let psi2 = spec.state_after(&zeros, REAL_AMPLITUDES_ENTANGLER_END)?;
            let max_error = psi1.max_abs_diff(&psi2);
            vec![
                diag("psi1 is the uniform 0.25 superposition", &psi1, &[0.25; READOUT_DIM])?,
                DiagCheck {
                    name: "CNOT block leaves psi1 unchanged (psi2 = psi1)".into(),
                    passed: max_error <= DIAG_TOLERANCE,
                    max_error,
                },
            ]
        }
        CircuitKind::NoEntanglement => {
            let theta = [0.4, -1.3, 2.2, 0.9];
            let wire = |t: f64, bit: usize| {
                let (s, c) = (t / 2.0).sin_cos();
                if bit == 0 {
                    (c - s) * FRAC_1_SQRT_2
                } else {
                    (c + s) * FRAC_1_SQRT_2
                }
            };
            let expected: Vec<f64> = (0..READOUT_DIM)
                .map(|k| (0..4).map(|q| wire(theta[q], (k >> (3 - q)) & 1)).product())
                .collect();
            vec![
                diag("theta = 0 gives the uniform 0.25 superposition", &spec.final_state(&zeros, &[])?, &[0.25; READOUT_DIM])?,
                diag(
                    "amplitudes equal the product of per-wire Ry(theta)H|0>",
                    &spec.final_state(&theta, &[])?,
                    &expected,
                )?,
            ]
        }
    };
    Ok(checks)
}

/// A ready-to-edit synthetic configuration, used by `hqnn` docs and tests.
pub fn example_config(output_dir: impl Into<PathBuf>) -> ExperimentConfig {
    ExperimentConfig {
        seed: 7,
        output_dir: output_dir.into(),
        dataset: DatasetConfig {
            source: DatasetSource::Synthetic {
                n_classes: 4,
                n_per_class: 50,
                class_names: None,
            },
            image_size: 16,
            train_fraction: 0.8,
        },
        model: ModelConfig {
            kind: ModelKind::RealAmplitudes,
            cnn: Default::default(),
        },
        train: TrainConfig {
            seed: 7,
            ..TrainConfig::default()
        },
        clusters: None,
    }
}

/// Synthetic stand-in for the ten EuroSAT classes, for coarse-to-fine runs.
pub fn eurosat_named_synthetic(n_per_class: usize) -> DatasetSource {
    DatasetSource::Synthetic {
        n_classes: EUROSAT_CLASSES.len(),
        n_per_class,
        class_names: Some(EUROSAT_CLASSES.iter().map(|s| s.to_string()).collect()),
    }
}

/// Renders `checks` as the lines printed by `circuit-diag`.
pub fn format_checks(checks: &[DiagCheck]) -> String {
    let mut s = String::new();
    for c in checks {
        let _ = writeln!(s, "{} {}", if c.passed { "PASS" } else { "FAIL" }, c.name);
    }
    s
}
