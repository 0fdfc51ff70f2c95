use thiserror::Error;

#[derive(Debug, Error)]
pub enum ArenaError {
    #[error("unknown task id {0} (valid ids are 1..=12)")]
    UnknownTask(u8),
    #[error("action sequence of length {0} exceeds the 32-command cap")]
    SequenceTooLong(usize),
    #[error("unknown atomic command `{0}`")]
    UnknownCommand(String),
    #[error("invalid attack pattern `{label}`: {reason}")]
    InvalidPattern { label: String, reason: String },
    #[error("invalid arena config: {0}")]
    Config(String),
    #[error("malformed frame text: {0}")]
    FrameText(String),
    #[error("raster encoding failed: {0}")]
    Raster(String),
}
