//! Agent pipeline, model gateway, memory, counter synthesis, human guidance
//! and the benchmark harness, all driving the arena in `varp-arena`.

pub mod agent;
pub mod bench;
pub mod error;
pub mod gateway;
pub mod guidance;
pub mod memory;
pub mod par;
pub mod perception;
pub mod soag;

pub use error::{Result, VarpError};
