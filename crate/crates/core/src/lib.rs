//! Covert LQR: state-feedback design that trades quadratic performance for
//! reduced observability by an eavesdropping adversary.

use openblas_src as _;

pub mod bounds;
pub mod cli;
pub mod error;
pub mod fmt;
pub mod gramian;
pub mod linalg;
pub mod presets;
pub mod sdp;
pub mod sim;
pub mod system;
pub mod trace;
pub mod traceinv;

pub use error::{Error, Result};
