//! Configuration, the tracking pipeline, and subcommands of the `ebt` tool.

pub mod commands;
pub mod config;
pub mod pipeline;

pub use config::{CandidateSet, RunConfig, TrackerKind};
pub use pipeline::{FrameRecord, Pipeline, StageTiming};
