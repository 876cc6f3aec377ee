//! Data and key generation, the Alice/Bob/Eve losses and the alternating
//! cooperative/adversarial training schedule.

mod config;
mod data;
pub mod loss;
mod trainer;

pub use config::{AliceOutput, DataMode, EveBatch, LossVariant, TrainingConfig};
pub use data::{gen_batch, test_set, Batch, DataSource, KeyPool};
pub use loss::{distance, joint_loss, loss_bob, loss_eve, normalized_eve_loss};
pub use trainer::{bit_identical, train, CooperativeStep, LossHistory, LossReport, Parties, Trainer};
