//! Linear algebra building blocks: CSR storage, orderings, sparse direct
//! factorizations and symmetric(-definite) eigensolvers.

pub mod dense;
pub mod factor;
pub mod lanczos;
pub mod ordering;
pub mod sparse;

pub use dense::{normalize_signs, symmetric_pencil_eigen, PencilEigen};
pub use factor::{BandLu, EnvelopeCholesky, Ordering};
pub use lanczos::{largest_eigenpair, TopEigenpair};
pub use sparse::CsrMatrix;
