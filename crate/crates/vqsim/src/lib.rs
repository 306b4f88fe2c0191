//! File formats, benchmark harness and command-line front end for
//! [`vqsim_core`].

pub mod bench;
pub mod dump;
mod error;
pub mod text;

pub use error::{Error, Result};
