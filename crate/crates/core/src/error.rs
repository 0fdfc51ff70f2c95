use thiserror::Error;
use varp_arena::ArenaError;

use crate::gateway::GatewayError;

#[derive(Debug, Error)]
pub enum VarpError {
    #[error("{0}")]
    Domain(String),
    #[error("not found: {0}")]
    NotFound(String),
    #[error("load error: {0}")]
    Load(String),
    #[error("integrity error at tick {tick}: {message}")]
    Integrity { tick: u64, message: String },
    #[error(transparent)]
    Gateway(#[from] GatewayError),
    #[error(transparent)]
    Arena(#[from] ArenaError),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl VarpError {
    pub fn domain(msg: impl Into<String>) -> Self {
        VarpError::Domain(msg.into())
    }
}

pub type Result<T, E = VarpError> = std::result::Result<T, E>;
