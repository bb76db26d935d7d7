//! The three-stage memorability measurer.
//!
//! One episode observes sets A and B through the rotation pretext task
//! (stage a), fine-tunes a fresh two-way head to separate B from never-seen
//! set C (stage b), and after every stage-b epoch asks the machine whether
//! each image of A was seen (stage c). The epoch with the lowest calibration
//! error supplies the episode's verdicts. An image's score is the fraction of
//! gate-passing episodes that judged it seen.

mod config;
mod episode;
mod stages;

pub use config::{config_digest, CalibrationMode, EpisodeConfig, MachineCategory};
pub use episode::{
    aggregate, default_set_a, measure, run_episodes, select_epoch, EpisodeObserver, EpisodeResult, EpisodeRunner,
    MeasureOptions, Measurement, NoopObserver, ProtocolRunner,
};
pub use stages::{
    rotation_accuracy, seen_accuracy, seen_probabilities, stage_a, stage_b_epoch, stage_b_optimizer, stage_c,
    CalibrationSet, StageCOutcome,
};
