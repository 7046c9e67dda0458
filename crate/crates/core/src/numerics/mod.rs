//! Scalar special functions and dense linear algebra.

mod eigen;
mod matrix;
mod solve;
mod special;

pub use eigen::{sym_eig, EigenPair};
pub use matrix::{axpy, dot, mean, norm, sub_vec, Matrix};
pub use solve::{row_space_projector_apply, sym_pseudo_inverse, Cholesky, Projection, SymPseudoInverse};
pub use special::{erf, erf_f64, erf_inv, erf_inv_f64, erfc_f64};
