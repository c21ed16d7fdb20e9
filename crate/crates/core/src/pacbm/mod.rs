//! Parallel concept bottleneck model: encoder, heads, trainers, metrics.

mod checkpoint;
mod data;
mod encoder;
mod loss;
mod metrics;
mod model;
mod train;

pub use checkpoint::{read_checkpoint, write_checkpoint, Checkpoint, CHECKPOINT_FORMAT, CHECKPOINT_VERSION};
pub use data::{sample_split, LabeledSet, Split};
pub use encoder::{
    Dense, Encoder, EncoderCache, Normalization, PatchStats, FEATURE_WIDTH, HIDDEN_WIDTH, SUMMARY_LEN,
};
pub use loss::{bce_with_logits, cross_entropy, softmax, softplus, total_loss};
pub use metrics::{auc, evaluate, ConfusionMetrics, DecisionHead, EvalReport};
pub use model::{
    argmax, Intervention, ModelConfig, ModelOutput, PaCBMModel, Strategy, Trainable, C2T_HIDDEN,
};
pub use train::{loss_and_gradient, train, EpochLog, LossParts, Objective, TrainConfig, TrainOutcome};
