//! Proposal-driven visual tracking.
//!
//! The pipeline scores edge-based objectness over the whole frame, re-ranks
//! the surviving windows with an online linear classifier tuned to the
//! tracked instance, and hands the top proposals to a core tracker (a
//! budgeted structured SVM, or a fixed NCC template). A benchmark harness
//! with synthetic sequences and one-pass evaluation metrics is included.

pub mod edgemap;
pub mod error;
pub mod eval;
pub mod imgio;
pub mod ncctracker;
pub mod objectness;
pub mod rerank;
pub mod sstracker;

pub use error::{Error, Result};
