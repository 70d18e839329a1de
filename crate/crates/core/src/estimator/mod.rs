//! Image-to-wrench regression: network, loss, augmentation and training.

mod augment;
mod checkpoint;
mod network;
mod train;

pub use augment::{augment_flip, augment_photometric, flip, PhotometricParams};
pub use checkpoint::{
    checkpoint_text, load_checkpoint, save_checkpoint, write_loss_curve, CHECKPOINT_MAGIC, CHECKPOINT_VERSION,
};
pub use network::{Activations, Architecture, RegressionModel, OUTPUTS};
pub use train::{
    gradient_check, gradient_check_with_fault, loss, loss_and_gradient, torque_weight, train,
    wrench_statistics, TorqueWeightMode, TrainConfig, TrainOutcome,
};
