pub mod acceptance;
pub mod cli;
pub mod corpus;
pub mod cylinder;
pub mod error;
pub mod grid;
pub mod hilbert;
pub mod index;
pub mod matrix;
pub mod pairing;
pub mod symbol;
pub mod toeplitz;

pub use error::{Error, Result};
pub use index::{IndexReport, TruncationPolicy};
pub use matrix::{c64, Basis, GradingOp, Label, LabeledMatrix};
pub use symbol::TrigSymbol;
