//! Weighted Ditzian–Totik moduli of smoothness, best weighted polynomial
//! approximation, and numerical checks of the sharp rates for k-monotone
//! functions on `[-1, 1]` with Jacobi weights.

pub mod approx;
pub mod chebyshev;
pub mod differences;
pub mod error;
pub mod extremals;
pub mod function;
pub mod kernels;
pub mod lp;
pub mod moduli;
pub mod par;
pub mod quadrature;
pub mod rates;
pub mod verify;
pub mod weight;

pub use chebyshev::ChebyshevPoly;
pub use error::{Error, Result};
pub use function::{CertificateSource, FunctionDescriptor, MonotoneOrder};
pub use quadrature::{graded_mesh, weighted_norm, QuadratureConfig};
pub use weight::{JacobiWeight, NormOrder};
