//! Wave-particle duality with a quantum which-way detector.

pub mod channel;
pub mod checks;
pub mod cli;
pub mod engine;
pub mod error;
pub mod qmath;
pub mod sqds;

pub use error::{Error, Result};
