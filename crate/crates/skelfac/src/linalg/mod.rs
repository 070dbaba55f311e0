//! Deterministic dense kernels: QR, interpolative decompositions, LU,
//! block-elimination operators, and norm estimation.

pub mod elim;
pub mod id;
pub mod lu;
pub mod ops;
pub mod power;
pub mod qr;

pub use elim::{elim_apply, elim_apply_right, elim_dense, ElimBlock};
pub use id::{column_id, fit_rows, row_id, IdResult};
pub use lu::LuFactors;
pub use ops::{nullspace_basis, orthonormal_columns, right_pseudoinverse};
pub use power::{spectral_norm_dense, spectral_norm_estimate};
pub use qr::Qr;
