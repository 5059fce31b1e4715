pub mod cli;
pub mod error;
pub mod lab;
pub mod pi;
pub mod sandpile;
pub mod stats;

pub use error::{Error, Result};
