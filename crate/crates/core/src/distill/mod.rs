//! Feature attribution modelling: collect expensive target maps and fit the
//! student explainer to them with a per-position MSE loss.

mod targets;
mod train;

pub use targets::{generate_targets, load_target_store, save_target_store, TargetMeta, TargetStore};
pub use train::{mse_loss, read_history_csv, train_student, write_history_csv, EpochRecord, TrainConfig};
