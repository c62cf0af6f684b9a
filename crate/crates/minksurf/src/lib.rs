//! Curvature of parametric surfaces immersed in three-dimensional normed
//! (Minkowski) spaces.
//!
//! The surface is endowed with the transversal field given by Birkhoff
//! orthogonality instead of the Euclidean normal. The resulting analogue of
//! the Gauss map, `eta = u . xi` (support map composed with the Euclidean
//! Gauss map), yields principal, Gaussian, mean, and normal curvatures. A
//! plane-section tracer provides a first-principles oracle for the normal
//! curvature, and flows of the principal and asymptotic direction fields give
//! curvature lines and asymptotic curves.

pub mod chart;
pub mod config;
pub mod curvature;
pub mod error;
pub mod flow;
pub mod norm;
pub mod plane;
pub mod run;
pub mod section;
pub mod support;

pub use chart::{ChartFamily, Domain, SurfaceChart, SurfaceJet};
pub use error::{GeomError, Result};
pub use norm::{NormFamily, NormJet, NormModel};
pub use support::{check_admissible, support_differential, support_point, SupportMapResult};
