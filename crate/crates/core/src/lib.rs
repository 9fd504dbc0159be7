#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod cli;
pub mod error;
pub mod experiments;
pub mod grid;
pub mod states;
pub mod oracle;
pub mod qnd;
pub mod transforms;
pub mod wigner;

pub use error::{Error, Result};
pub use grid::GridSpec;
pub use states::{make_state, QuadratureWaveFunction, StatePreset};
