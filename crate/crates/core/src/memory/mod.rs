//! The three libraries the agent keeps: actions it can take, what happened at
//! each step, and recorded human play.

mod action;
mod features;
mod guided;
mod persist;
mod situation;

pub use action::{ActionEntry, ActionLibrary, ActionStats, CounterKey, Provenance, DEFAULT_K};
pub use features::{frame_features, FeatureVector, FEATURE_DIM};
pub use guided::{GuidanceWindow, HumanGuidedLibrary, HumanGuidedRecord, DEFAULT_N};
pub use persist::LIBRARY_FORMAT_VERSION;
pub use situation::{SituationLibrary, SituationRecord, DEFAULT_M};
