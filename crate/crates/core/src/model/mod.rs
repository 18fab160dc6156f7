//! Core-fringe graph models.

mod checkpoint;
pub mod layers;
mod network;
mod train;

pub use checkpoint::{load_checkpoint, save_checkpoint, Checkpoint, CHECKPOINT_MAGIC};
pub use network::{
    blend_scores, Architecture, ForwardCache, ForwardMode, GcnLayer, HierarchyHeads, ModelKind, ModelOutputs,
    ModelParams,
};
pub use train::{
    loss_and_gradients, masked_bce, model_loss, train, Adam, EpochRecord, Supervision, TrainConfig, TrainLog,
    TrainOutcome, PROB_CLAMP,
};
