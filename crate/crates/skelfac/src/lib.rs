//! Compression and factorization of rank-structured linear operators from
//! black-box products with the operator and its adjoint.
//!
//! Given only `x -> A x` and `x -> A* x` for an operator whose
//! well-separated interactions are numerically low rank, the crate draws
//! seeded Gaussian sketches once and post-processes them into an invertible
//! multilevel skeletonization of `A` (method `rsrs`). A classical
//! proxy-surface variant (`srs-proxy`) is included as a baseline for kernel
//! matrices with entry access. The factorization applies and solves in time
//! proportional to its storage.

pub mod clock;
pub mod config;
pub mod error;
pub mod factor;
pub mod linalg;
pub mod mat;
pub mod oracle;
pub mod rng;
pub mod sketch;
pub mod tree;

pub use error::{Error, Result};
pub use mat::Mat;
