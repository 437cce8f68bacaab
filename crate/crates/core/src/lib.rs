//! Ranks of 2×⋯×2 tensors over ℝ and ℂ.
//!
//! Order-3 tensors are classified exactly through the hyperdeterminant Δ and
//! decomposed into a minimal number of rank-one terms. Order-4 tensors get
//! constructive decompositions into at most 5 (real) or 4 (complex) terms,
//! and a multistart search for a 4-term real certificate. Higher orders get
//! decompositions into at most `2^(k−2) + 1` real terms.

pub mod action;
pub mod bound2222;
pub mod certify;
pub mod cli;
pub mod decomposition;
pub mod error;
pub mod field;
pub mod higher;
pub mod io;
pub mod mat2;
pub mod pencil;
pub mod rank222;
pub mod special;
pub mod tensor;

pub use action::GLAction;
pub use decomposition::{rank_one, Decomposition, RankOneTerm};
pub use error::{HtrError, Result};
pub use field::{Field, Scalar, Sign};
pub use mat2::{basis, vec2, Mat2, Vec2};
pub use tensor::{
    essential_flattenings, vec2x2, Flattening, ModePerm, QuadTensor, SlicePair, Tensor,
};

/// Generator behind every seeded computation in the crate.
pub type Rng = rand_chacha::ChaCha8Rng;

/// Crate version recorded in command output.
pub const VERSION: &str = env!("CARGO_PKG_VERSION");
