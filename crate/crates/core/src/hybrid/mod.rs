//! The hybrid classifier: model assembly, training and evaluation loops,
//! checkpoints and coarse-to-fine routing.

mod checkpoint;
mod coarse;
mod model;
mod train;

pub use checkpoint::{load_checkpoint, save_checkpoint, Checkpoint, TrainingMetadata, FORMAT_VERSION, MAGIC};
pub use coarse::{coarse_to_fine_predict, CoarseToFine, CompositePrediction};
pub use model::{
    angle_embedding, Backward, CnnConfig, ConvStage, ForwardCache, Head, HybridModel, ModelConfig, ModelKind, EMBED_DIM,
};
pub use train::{accuracy, evaluate, train, EpochStats, TrainConfig, TrainHistory};
