//! Shared inputs for the criterion benches.

use multdim::{compile, ConstraintFamily, OmegaSpec, PrimeBasis, Rule};

/// `x_l x_{2l} x_{3l} = 0` over `<2, 3>`.
pub fn x23(depth: usize) -> OmegaSpec {
    let family = ConstraintFamily::new(2, vec![Rule::product_zero(vec![1, 2, 3]).unwrap()]).unwrap();
    compile(&family, &PrimeBasis::new(vec![2, 3]).unwrap(), depth).unwrap()
}
