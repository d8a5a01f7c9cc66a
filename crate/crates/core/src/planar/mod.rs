//! Plane-curve substrate: support functions, parametric ovals, and the
//! turning-number machinery for piecewise-smooth closed curves.

mod cusped;
mod intersect;
mod parametric;
mod support;

pub use cusped::{ArcSample, Cusp, CuspedCurve, TurningReport, turning_number};
pub use intersect::{Crossing, has_neck, self_intersections, winding_number};
pub use parametric::{CurveJet, ParametricCurve, PlaneCurve, curve_rotation_index};
pub use support::{SupportFunction, SupportJet, find_vertices, oval_point};

use thiserror::Error;

/// Errors from the plane-curve layer.
#[derive(Debug, Error)]
pub enum PlanarError {
    /// `h'' + h` is not strictly positive: the input does not describe an oval.
    #[error("support function is not an oval: min(h''+h) = {min_rho:.6e}")]
    NotAnOval { min_rho: f64 },
    /// `h''' + h'` vanishes identically (circle) — no isolated vertices exist.
    #[error("degenerate vertex equation: h'''+h' vanishes identically")]
    DegenerateVertices,
    /// A vertex is a non-simple zero of `h'''+h'`.
    #[error("non-generic input: vertex at theta = {theta:.12} is not a simple zero")]
    NonGenericVertex { theta: f64 },
    /// A tangent turning step within one arc reached `pi/2`; the sampling is
    /// too coarse for unambiguous angle lifting.
    #[error("sampling too coarse: turning step {step:.6} rad >= pi/2 in arc {arc}")]
    FinenessViolation { arc: usize, step: f64 },
    /// Total turning failed to round to an integer multiple of `2*pi`.
    #[error("turning total {total:.6} rad is not close to an integer multiple of 2*pi (residual {residual:.4})")]
    TurningResidual { total: f64, residual: f64 },
    /// A parametric curve has vanishing velocity.
    #[error("curve is not regular: |velocity| = {speed:.3e} at t = {t:.12}")]
    IrregularCurve { t: f64, speed: f64 },
    /// Structural problem with a cusped curve (arc/cusp bookkeeping).
    #[error("malformed cusped curve: {0}")]
    MalformedCurve(String),
    /// Rejected input description.
    #[error("invalid input: {0}")]
    InvalidInput(String),
}
