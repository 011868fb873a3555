//! Dimension bounds for subsets of `Sigma_m = {0..m-1}^N` cut out by
//! multiplicative constraints `x_k x_{k n_1} ... = 0`, organized along the
//! semigroup `S` generated by a finite set of primes.

pub mod constraints;
pub mod deterministic;
pub mod error;
pub mod hausdorff;
pub mod measures;
pub mod minkowski;
pub mod numeric;
pub mod semigroup;

pub use constraints::{
    compile, count_prefixes, count_prefixes_triangle, is_admissible_word, is_spherically_symmetric, Allowed,
    ConstraintFamily, ExtensionMode, LevelProfile, OmegaSpec, PrefixTree, Rule, Symmetry,
};
pub use error::{Error, Result};
pub use num_bigint::BigUint;
pub use semigroup::{PrimeBasis, SemigroupTable};
