//! Small numerical kernels: quadrature, Chebyshev interpolation, root
//! bracketing, and polynomial arithmetic.

pub mod cheby;
pub mod poly;
pub mod quad;
pub mod root;

pub use cheby::ChebyshevTable;
pub use poly::Poly;
pub use quad::{adaptive_gauss, gauss_legendre_nodes};
pub use root::{bisect, brent};
