//! Losses, learning-rate schedules, regularization, dataset splits and the
//! mini-batch SGD loop.

mod fit;
mod loss;
mod schedule;
mod split;

pub use fit::{
    evaluate, fit, fit_with, grid_search, sgd_step, Dataset, EpochRecord, Evaluation, Grid, GridResult, TrainConfig, TrainLog,
    sig6, DEFAULT_BATCH_SIZE, TRAIN_LOG_HEADER,
};
pub use loss::{batch_loss, bce_loss, bce_with_logit, ce_loss, ce_with_logits, reg_penalty, reg_penalty_slice, Loss, PROB_CLAMP};
pub use schedule::Schedule;
pub use split::{kfold_split, shuffled, split_dataset, SplitPlan, DEFAULT_TRAIN_FRACTION};
