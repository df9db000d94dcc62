//! Numeric constants shared by the kernels and their test suites.

/// Every tolerance and size cap used by the library, in one place.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Tolerances {
    /// Max deviation of `QᵀQ` from identity after a QR factorization.
    pub qr_orthonormality: f64,
    /// Relative residual bound for `‖QR − X‖ / (1 + ‖X‖)`.
    pub qr_residual: f64,
    /// Column orthonormality of SVD factors.
    pub svd_orthonormality: f64,
    /// Relative agreement of singular values against a dense reference.
    pub svd_singular_values: f64,
    /// Relative agreement of the optimal truncation error (Eckart–Young).
    pub svd_truncation_error: f64,
    /// Orthonormality of factor model bases after any update.
    pub model_orthonormality: f64,
    /// Relative Frobenius agreement of updated reconstructions.
    pub psi_reconstruction: f64,
    /// Agreement of reconstructions under a zero update.
    pub zero_update: f64,
    /// Relative off-diagonal threshold below which Jacobi rotations stop.
    pub jacobi_threshold: f64,
    /// Upper bound on Jacobi sweeps.
    pub jacobi_max_sweeps: usize,
    /// Largest `rows * cols` a model may be densified to.
    pub reconstruct_cap: usize,
}

impl Tolerances {
    pub const DEFAULT: Tolerances = Tolerances {
        qr_orthonormality: 1e-10,
        qr_residual: 1e-10,
        svd_orthonormality: 1e-10,
        svd_singular_values: 1e-8,
        svd_truncation_error: 1e-6,
        model_orthonormality: 1e-8,
        psi_reconstruction: 1e-8,
        zero_update: 1e-10,
        jacobi_threshold: 1e-15,
        jacobi_max_sweeps: 100,
        reconstruct_cap: 4_000_000,
    };
}

impl Default for Tolerances {
    fn default() -> Self {
        Self::DEFAULT
    }
}

/// Randomized range finder settings for the truncated SVD.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SvdOptions {
    pub oversampling: usize,
    pub power_iterations: usize,
    pub seed: u64,
    /// Matrices whose smaller side is at most this go through a dense SVD.
    pub dense_threshold: usize,
}

impl SvdOptions {
    pub const DEFAULT: SvdOptions = SvdOptions {
        oversampling: 10,
        power_iterations: 2,
        seed: 0x5eed_0001,
        dense_threshold: 64,
    };

    pub fn with_seed(seed: u64) -> Self {
        SvdOptions { seed, ..Self::DEFAULT }
    }
}

impl Default for SvdOptions {
    fn default() -> Self {
        Self::DEFAULT
    }
}
