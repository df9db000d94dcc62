//! Sparse storage and the factorization kernels the models are built from.

mod dense;
mod qr;
mod sparse;
mod svd;

pub use dense::DenseMatrix;
pub use qr::qr_thin;
pub use sparse::{spmm, spmm_transposed, SparseMatrix};
pub use svd::{dense_svd, truncated_svd, truncated_svd_with, Svd};
