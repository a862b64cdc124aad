//! Steklov spectra, pattern certificates and boundary-reaction dynamics on
//! convex planar domains, discretized with P1 finite elements.
//!
//! Every numerical routine is generic over [`scalar::Real`] (`f32` or `f64`).
//! The aliases below fix the scalar for the common cases.

pub mod assembly;
pub mod certificate;
pub mod dynamics;
pub mod error;
pub mod geometry;
pub mod linalg;
pub mod meshing;
pub mod scalar;
pub mod steklov;

pub use error::{Error, Result};
pub use scalar::Real;

pub type DomainSpec = geometry::DomainSpec<f64>;
pub type BoundaryPolygon = geometry::BoundaryPolygon<f64>;
pub type Mesh = meshing::Mesh<f64>;
pub type DiscreteOperators = assembly::DiscreteOperators<f64>;
pub type SteklovSpectrum = steklov::SteklovSpectrum<f64>;
pub type BoundCertificate = certificate::BoundCertificate<f64>;
pub type StabilityReport = dynamics::StabilityReport<f64>;

pub type DomainSpecF32 = geometry::DomainSpec<f32>;
pub type BoundaryPolygonF32 = geometry::BoundaryPolygon<f32>;
pub type MeshF32 = meshing::Mesh<f32>;
pub type DiscreteOperatorsF32 = assembly::DiscreteOperators<f32>;
pub type SteklovSpectrumF32 = steklov::SteklovSpectrum<f32>;
pub type BoundCertificateF32 = certificate::BoundCertificate<f32>;
pub type StabilityReportF32 = dynamics::StabilityReport<f32>;
