pub mod amplify;
pub mod budget;
pub mod cloning;
pub mod error;
pub mod funclass;
pub mod gf2;
pub mod qsim;
pub mod report;
pub mod rng;
pub mod statehsp;

pub use error::{Error, Result};
pub use funclass::{Dataset, Hypothesis, LabeledSample, LinearFunctionClass, LinearFunctionCode};
pub use gf2::{BilinearPairing, BitMatrix, BitVector, Probability, Subspace};
pub use report::{EvalMode, GameReport};
