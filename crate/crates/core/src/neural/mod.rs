//! Per-target regression networks: encoder, head, training and storage.

pub mod bundle;
pub mod mlp;
pub mod model;
pub mod optim;
pub mod train;

pub use bundle::{load_model, save_model, ModelBundle};
pub use mlp::{mse_loss, Activation, Cache, Gradients, Layer, Mlp, Mode, ModelConfig};
pub use model::{clamp_prediction, predict_profile, train_target, BundlePredictor, NutrientModel, ProfilePredictor};
pub use optim::{Adam, EarlyStopping, PlateauScheduler, StopDecision};
pub use train::{evaluate, split_indices, train_matrix, Split, TrainConfig, TrainReport, TrainedNet};
