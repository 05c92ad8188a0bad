//! Daisy extraction from weighted set systems, relaxed local decoder
//! preprocessing, and a sample-based global decoder, with an experiment
//! harness for checking the combinatorial claims on concrete codes.

pub mod daisy;
pub mod decoder;
mod error;
pub mod global;
pub mod harness;
pub mod preprocess;
pub mod radical;
pub mod set_system;

pub use error::{Error, Result};
