//! Recorded human play: input logs, session files, replay, dataset stats,
//! and turning a retrieved stretch of play into a reusable action.

mod demonstrator;
mod keymap;
mod session;
mod stats;
mod summarize;

pub use demonstrator::{demonstrate, generate_dataset, DemoPlan, BUNDLED_PLAN};
pub use keymap::{events_to_atomics, Atomics, InputEvent, InputKind, Keymap};
pub use session::{
    build_guided_library, load_dataset, replay_session, Session, SessionHeader, SessionLine, SessionRecorder,
    SESSION_FORMAT_VERSION,
};
pub use stats::{compute_stats, DatasetStats, TaskShare, REFERENCE_SHARES};
pub use summarize::summarize_to_action;

/// Bundled demonstration sessions, relative to this crate's root.
pub fn bundled_dataset_dir() -> std::path::PathBuf {
    std::path::Path::new(env!("CARGO_MANIFEST_DIR")).join("data/sessions")
}
