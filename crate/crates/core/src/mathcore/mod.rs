//! Numerical kernels shared by every other module.

mod hermitian;
pub mod special;

pub use hermitian::{Cholesky, ComplexMatrix, ComplexVector, HermitianMatrix, C64, INGEST_TOLERANCE, PIVOT_THRESHOLD};
pub use special::{
    chi2_cdf, chi2_sf, digamma, gamma_cdf, kolmogorov_sf, lngamma, ln_multivariate_gamma, multivariate_polygamma,
    trigamma,
};
