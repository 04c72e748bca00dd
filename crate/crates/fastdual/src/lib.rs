//! Linear-time repeat-accumulate style encoders over GF(2), exact dual pairs,
//! weight-transition probabilities and spectral-shape analysis.

pub mod code;
pub mod distance;
pub mod emvp;
pub mod error;
pub mod gf2;
pub mod matrix;
pub mod rng;
pub mod spectral;
pub mod transition;
pub mod verify;

pub use code::{
    dual_product_check, materialize, materialize_with_cap, orthogonality_check, sample_pair, CodeSpec,
    DualCheck, DualPair, EncoderChain, Family,
};
pub use error::{Error, Result};
pub use gf2::{apply, apply_chain, BitVector, KernelOp, Permutation};
pub use matrix::{systematic_form, DenseMatrixF2};
