//! Partition functions, trial-with-parameters, small boolean circuits and
//! exact fitting-extremum search.

pub mod bits;
pub mod circuit;
pub mod error;
pub mod fepss;
pub mod par;
pub mod paramfn;
pub mod partition;

pub use error::{Error, Result};
