//! Change detection for multilook polarimetric SAR covariance data under the
//! scaled complex Wishart model.

pub mod cli;
pub mod detector;
pub mod error;
pub mod estimation;
pub mod experiments;
pub mod hypotests;
pub mod infotheory;
pub mod io;
pub mod mathcore;
pub mod model;
pub mod presets;

pub use error::{Error, Result};
pub use estimation::{estimate, LooksMode, MLEstimate};
pub use hypotests::{decide, two_sample, Method, TestOptions, TestResult};
pub use infotheory::{EntropyKind, KronConvention};
pub use mathcore::{HermitianMatrix, C64};
pub use model::{MatrixSample, RngSeed, WishartParams};
