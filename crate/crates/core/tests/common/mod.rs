#![allow(dead_code)]

pub mod dataset;
pub mod retrieval;
pub mod soag;
pub mod wire;
