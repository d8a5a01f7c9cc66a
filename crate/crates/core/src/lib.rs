//! Evolutes of plane curves and conjugate loci of points on smooth strictly
//! convex surfaces.
//!
//! The crate is organised around two closely related constructions:
//!
//! * the **evolute** of a plane oval (envelope of its normal lines), built
//!   from a support function or a parametric curve, together with the
//!   rotation-index bookkeeping for cusped closed curves;
//! * the **conjugate locus** of a point on a convex surface: geodesics are
//!   shot in ambient space while the scalar Jacobi equation is co-integrated,
//!   the per-direction conjugate distance `R(psi)` is extracted, and the
//!   locus is assembled, projected to a supporting plane and analysed
//!   (cusps, rotation index, geodesic curvature, segment counts).
//!
//! All heavy operations are pure functions of immutable inputs and may be
//! evaluated in parallel; the grid-based ones fan out with rayon.

pub mod conjlocus;
pub mod evolute;
pub mod geodesic;
pub mod planar;
pub mod surface;

/// 2-vector used for plane points and directions.
pub type Vec2 = nalgebra::Vector2<f64>;
/// 3-vector used for ambient points and directions.
pub type Vec3 = nalgebra::Vector3<f64>;
/// Ambient 3x3 matrix (Hessians, frames).
pub type Mat3 = nalgebra::Matrix3<f64>;

pub use conjlocus::{ConjugateLocus, CountField, LocusResult, RegionReport};
pub use evolute::{Evolute, EvoluteResult};
pub use geodesic::{DistanceCurve, GeodesicPath, IntegratorConfig};
pub use planar::{CuspedCurve, ParametricCurve, SupportFunction, TurningReport};
pub use surface::{ImplicitSurface, SupportingPlane, TangentFrame};
