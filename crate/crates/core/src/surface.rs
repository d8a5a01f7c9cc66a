//! Smooth strictly convex surfaces as implicit level sets `F(x) = 0`.
//!
//! Everything is integrated in ambient 3-space, so there are no chart
//! singularities to dodge. Supported families: sphere and triaxial
//! ellipsoid, both with exact gradients and Hessians.

use crate::{Mat3, Vec2, Vec3};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum SurfaceError {
    #[error("invalid surface parameters: {0}")]
    InvalidParams(String),
    #[error("surface is not strictly convex: sampled Gauss curvature min = {k_min:.6e}")]
    NotStrictlyConvex { k_min: f64 },
    #[error("point is not on the surface: F = {f:.6e}")]
    OffSurface { f: f64 },
    #[error("Newton iteration for {what} did not converge")]
    NewtonDiverged { what: &'static str },
    #[error("frame seed is parallel to the surface normal")]
    SeedParallelToNormal,
    #[error("projection ray is not on the convex side (n.(x-p) >= 0)")]
    NonConvexProjection,
    #[error("supporting-plane projection is undefined at the base point")]
    ProjectionAtBasePoint,
}

#[derive(Debug, Clone, Copy)]
enum Family {
    Sphere { r: f64 },
    Ellipsoid { a: f64, b: f64, c: f64 },
}

/// Implicit strictly convex surface with cached curvature extremes.
#[derive(Debug, Clone)]
pub struct ImplicitSurface {
    family: Family,
    k_min: f64,
    k_max: f64,
}

/// Orthonormal tangent frame at a surface point; `e1 x e2 = n_out`.
#[derive(Debug, Clone, Copy)]
pub struct TangentFrame {
    pub p: Vec3,
    pub e1: Vec3,
    pub e2: Vec3,
    pub n_out: Vec3,
}

impl TangentFrame {
    /// Unit tangent launching direction at angle `psi` from `e1`.
    pub fn psi_direction(&self, psi: f64) -> Vec3 {
        psi.cos() * self.e1 + psi.sin() * self.e2
    }
}

fn adjugate(m: &Mat3) -> Mat3 {
    let c = |i: usize, j: usize| -> f64 {
        let (i1, i2) = ((i + 1) % 3, (i + 2) % 3);
        let (j1, j2) = ((j + 1) % 3, (j + 2) % 3);
        m[(i1, j1)] * m[(i2, j2)] - m[(i1, j2)] * m[(i2, j1)]
    };
    // adj(M) = cofactor(M)^T; for symmetric M the transpose is immaterial.
    Mat3::from_fn(|i, j| c(j, i))
}

impl ImplicitSurface {
    pub fn sphere(r: f64) -> Result<Self, SurfaceError> {
        if r <= 0.0 {
            return Err(SurfaceError::InvalidParams(format!("sphere radius {r} <= 0")));
        }
        Self::build(Family::Sphere { r })
    }

    pub fn ellipsoid(a: f64, b: f64, c: f64) -> Result<Self, SurfaceError> {
        if a <= 0.0 || b <= 0.0 || c <= 0.0 {
            return Err(SurfaceError::InvalidParams(format!(
                "ellipsoid semi-axes must be positive, got ({a}, {b}, {c})"
            )));
        }
        Self::build(Family::Ellipsoid { a, b, c })
    }

    fn build(family: Family) -> Result<Self, SurfaceError> {
        let mut surf = ImplicitSurface { family, k_min: 0.0, k_max: 0.0 };
        // Curvature extremes over a 32x64 sphere-parameter grid (poles included).
        let mut k_min = f64::INFINITY;
        let mut k_max = f64::NEG_INFINITY;
        for iu in 0..=32 {
            let theta = std::f64::consts::PI * iu as f64 / 32.0;
            for iv in 0..64 {
                let phi = std::f64::consts::TAU * iv as f64 / 64.0;
                let dir = Vec3::new(theta.sin() * phi.cos(), theta.sin() * phi.sin(), theta.cos());
                let x = surf.radial_point(dir);
                let k = surf.gauss_curvature_raw(&x);
                k_min = k_min.min(k);
                k_max = k_max.max(k);
            }
        }
        if !(k_min > 0.0) {
            return Err(SurfaceError::NotStrictlyConvex { k_min });
        }
        surf.k_min = k_min;
        surf.k_max = k_max;
        Ok(surf)
    }

    /// Sampled Gauss-curvature extremes `(k_min, k_max)`.
    pub fn curvature_extremes(&self) -> (f64, f64) {
        (self.k_min, self.k_max)
    }

    /// Characteristic length (largest semi-axis).
    pub fn length_scale(&self) -> f64 {
        match self.family {
            Family::Sphere { r } => r,
            Family::Ellipsoid { a, b, c } => a.max(b).max(c),
        }
    }

    pub fn f(&self, x: &Vec3) -> f64 {
        match self.family {
            Family::Sphere { r } => x.norm_squared() - r * r,
            Family::Ellipsoid { a, b, c } => {
                x.x * x.x / (a * a) + x.y * x.y / (b * b) + x.z * x.z / (c * c) - 1.0
            }
        }
    }

    pub fn grad(&self, x: &Vec3) -> Vec3 {
        match self.family {
            Family::Sphere { .. } => 2.0 * x,
            Family::Ellipsoid { a, b, c } => {
                Vec3::new(2.0 * x.x / (a * a), 2.0 * x.y / (b * b), 2.0 * x.z / (c * c))
            }
        }
    }

    pub fn hess(&self, _x: &Vec3) -> Mat3 {
        match self.family {
            Family::Sphere { .. } => Mat3::from_diagonal_element(2.0),
            Family::Ellipsoid { a, b, c } => Mat3::from_diagonal(&Vec3::new(
                2.0 / (a * a),
                2.0 / (b * b),
                2.0 / (c * c),
            )),
        }
    }

    /// Outward unit normal.
    pub fn normal(&self, x: &Vec3) -> Vec3 {
        let g = self.grad(x);
        g / g.norm()
    }

    /// Scale a direction from the origin onto the surface.
    pub fn radial_point(&self, dir: Vec3) -> Vec3 {
        let d = dir / dir.norm();
        match self.family {
            Family::Sphere { r } => r * d,
            Family::Ellipsoid { a, b, c } => {
                let q = d.x * d.x / (a * a) + d.y * d.y / (b * b) + d.z * d.z / (c * c);
                d / q.sqrt()
            }
        }
    }

    /// Gauss curvature of the implicit surface,
    /// `K = (grad . adj(Hess) . grad) / |grad|^4`.
    pub fn gauss_curvature(&self, x: &Vec3) -> Result<f64, SurfaceError> {
        let f = self.f(x);
        let g = self.grad(x).norm();
        // Distance-normalised on-surface tolerance.
        if f.abs() / g > 1e-7 * self.length_scale() {
            return Err(SurfaceError::OffSurface { f });
        }
        Ok(self.gauss_curvature_raw(x))
    }

    pub(crate) fn gauss_curvature_raw(&self, x: &Vec3) -> f64 {
        let g = self.grad(x);
        let adj = adjugate(&self.hess(x));
        let n4 = g.norm_squared().powi(2);
        (g.transpose() * adj * g)[(0, 0)] / n4
    }

    /// Newton projection along the gradient onto `F = 0`.
    pub fn project_to_surface(&self, x: &Vec3) -> Result<Vec3, SurfaceError> {
        let mut y = *x;
        let tol = 1e-13 * self.length_scale();
        for _ in 0..20 {
            let f = self.f(&y);
            let g = self.grad(&y);
            let step = f / g.norm_squared();
            y -= step * g;
            if (f / g.norm()).abs() < tol {
                return Ok(y);
            }
        }
        Err(SurfaceError::NewtonDiverged { what: "surface projection" })
    }

    /// Orthonormal frame at `p` with `e1` the tangential part of `seed`.
    pub fn tangent_frame(&self, p: &Vec3, seed: &Vec3) -> Result<TangentFrame, SurfaceError> {
        let f = self.f(p);
        let n = self.normal(p);
        if (f / self.grad(p).norm()).abs() > 1e-7 * self.length_scale() {
            return Err(SurfaceError::OffSurface { f });
        }
        let tang = seed - n * seed.dot(&n);
        let norm = tang.norm();
        if norm < 1e-12 * seed.norm() {
            return Err(SurfaceError::SeedParallelToNormal);
        }
        let e1 = tang / norm;
        let e2 = n.cross(&e1);
        Ok(TangentFrame { p: *p, e1, e2, n_out: n })
    }

    /// The point where the outward normal equals `-normal(p)`; for the
    /// centrally symmetric families this is `-p`, found by Newton on
    /// `(grad F + lambda n, F) = 0` from the Euclidean antipode.
    pub fn opposite_point(&self, p: &Vec3) -> Result<Vec3, SurfaceError> {
        let n = self.normal(p);
        let mut x = self.radial_point(-p);
        let mut lambda = self.grad(&x).norm();
        let scale = self.grad(&x).norm().max(1.0);
        for _ in 0..40 {
            let g = self.grad(&x);
            let r = nalgebra::Vector4::new(
                g.x + lambda * n.x,
                g.y + lambda * n.y,
                g.z + lambda * n.z,
                self.f(&x),
            );
            if r.norm() < 1e-13 * scale {
                return Ok(x);
            }
            let h = self.hess(&x);
            let mut jac = nalgebra::Matrix4::zeros();
            for i in 0..3 {
                for j in 0..3 {
                    jac[(i, j)] = h[(i, j)];
                }
                jac[(i, 3)] = n[i];
                jac[(3, i)] = g[i];
            }
            let delta = jac
                .lu()
                .solve(&r)
                .ok_or(SurfaceError::NewtonDiverged { what: "opposite point" })?;
            x -= Vec3::new(delta.x, delta.y, delta.z);
            lambda -= delta.w;
        }
        Err(SurfaceError::NewtonDiverged { what: "opposite point" })
    }
}

/// Supporting plane of the surface parallel to the tangent plane at the
/// frame's base point, with in-plane coordinates along the frame's axes.
#[derive(Debug, Clone, Copy)]
pub struct SupportingPlane {
    pub base: Vec3,
    /// Touch point `q*` of the supporting plane (plane origin).
    pub origin: Vec3,
    pub e1: Vec3,
    pub e2: Vec3,
    /// Outward normal at the base point.
    pub n: Vec3,
}

impl SupportingPlane {
    pub fn for_frame(surface: &ImplicitSurface, frame: &TangentFrame) -> Result<Self, SurfaceError> {
        let origin = surface.opposite_point(&frame.p)?;
        Ok(SupportingPlane {
            base: frame.p,
            origin,
            e1: frame.e1,
            e2: frame.e2,
            n: frame.n_out,
        })
    }

    /// Radial projection from the base point onto the plane:
    /// `Pi(x) = p + t (x - p)` with `t = n.(q*-p) / n.(x-p)`.
    pub fn project(&self, x: &Vec3) -> Result<Vec2, SurfaceError> {
        let w = x - self.base;
        if w.norm() < 1e-14 {
            return Err(SurfaceError::ProjectionAtBasePoint);
        }
        let denom = self.n.dot(&w);
        if denom >= 0.0 {
            return Err(SurfaceError::NonConvexProjection);
        }
        let t = self.n.dot(&(self.origin - self.base)) / denom;
        let pi = self.base + t * w;
        let rel = pi - self.origin;
        Ok(Vec2::new(rel.dot(&self.e1), rel.dot(&self.e2)))
    }

    /// Differential of the projection applied to a vector at `x`.
    pub fn project_tangent(&self, x: &Vec3, v: &Vec3) -> Result<Vec2, SurfaceError> {
        let w = x - self.base;
        let denom = self.n.dot(&w);
        if denom >= 0.0 {
            return Err(SurfaceError::NonConvexProjection);
        }
        let t = self.n.dot(&(self.origin - self.base)) / denom;
        let dv = t * (v - w * (self.n.dot(v) / denom));
        Ok(Vec2::new(dv.dot(&self.e1), dv.dot(&self.e2)))
    }

    /// Surface point projecting to the given plane coordinates: the second
    /// intersection of the ray from the base point with the surface.
    pub fn preimage(&self, surface: &ImplicitSurface, uv: Vec2) -> Result<Vec3, SurfaceError> {
        let target = self.origin + uv.x * self.e1 + uv.y * self.e2;
        let w = target - self.base;
        let g = |tau: f64| surface.f(&(self.base + tau * w));
        // F < 0 strictly between the base point and the far intersection,
        // >= 0 from there out to the plane. Find any interior point by
        // halving from tau = 1, then bisect the sign change above it.
        let mut lo = f64::NAN;
        let mut tau = 0.5;
        for _ in 0..60 {
            if g(tau) < 0.0 {
                lo = tau;
                break;
            }
            tau *= 0.5;
        }
        if lo.is_nan() {
            return Err(SurfaceError::NewtonDiverged { what: "projection preimage" });
        }
        let mut hi = 1.0;
        for _ in 0..80 {
            let mid = 0.5 * (lo + hi);
            if g(mid) >= 0.0 {
                hi = mid;
            } else {
                lo = mid;
            }
        }
        surface.project_to_surface(&(self.base + 0.5 * (lo + hi) * w))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn sphere_curvature_is_inverse_radius_squared() {
        let s = ImplicitSurface::sphere(2.0).unwrap();
        let x = s.radial_point(Vec3::new(0.3, -0.5, 0.81));
        assert_abs_diff_eq!(s.gauss_curvature(&x).unwrap(), 0.25, epsilon = 1e-13);
        let (k_min, k_max) = s.curvature_extremes();
        assert_abs_diff_eq!(k_min, 0.25, epsilon = 1e-12);
        assert_abs_diff_eq!(k_max, 0.25, epsilon = 1e-12);
    }

    #[test]
    fn ellipsoid_curvature_closed_form() {
        let (a, b, c) = (1.0, 1.2, 1.5);
        let s = ImplicitSurface::ellipsoid(a, b, c).unwrap();
        // At (a, 0, 0): K = a^2/(b^2 c^2).
        let k = s.gauss_curvature(&Vec3::new(a, 0.0, 0.0)).unwrap();
        assert_abs_diff_eq!(k, a * a / (b * b * c * c), epsilon = 1e-12);
        // General closed form on a scattering of points.
        for i in 0..48 {
            let theta = std::f64::consts::PI * (i as f64 + 0.41) / 48.0;
            let phi = 2.9 * i as f64;
            let dir = Vec3::new(theta.sin() * phi.cos(), theta.sin() * phi.sin(), theta.cos());
            let x = s.radial_point(dir);
            let q = x.x * x.x / a.powi(4) + x.y * x.y / b.powi(4) + x.z * x.z / c.powi(4);
            let closed = 1.0 / (a * a * b * b * c * c * q * q);
            assert_abs_diff_eq!(s.gauss_curvature(&x).unwrap(), closed, epsilon = 1e-12);
        }
    }

    #[test]
    fn off_surface_curvature_rejected() {
        let s = ImplicitSurface::sphere(1.0).unwrap();
        assert!(matches!(
            s.gauss_curvature(&Vec3::new(1.5, 0.0, 0.0)),
            Err(SurfaceError::OffSurface { .. })
        ));
    }

    #[test]
    fn projection_to_surface() {
        let s = ImplicitSurface::sphere(1.0).unwrap();
        let p = s.project_to_surface(&Vec3::new(2.0, 0.0, 0.0)).unwrap();
        assert_abs_diff_eq!((p - Vec3::new(1.0, 0.0, 0.0)).norm(), 0.0, epsilon = 1e-12);

        let e = ImplicitSurface::ellipsoid(1.0, 1.2, 1.5).unwrap();
        let x = e.radial_point(Vec3::new(0.2, 0.7, -0.4));
        let off = x + 1e-3 * e.normal(&x);
        let back = e.project_to_surface(&off).unwrap();
        assert!(e.f(&back).abs() < 1e-12);
        // on-surface input is a fixed point
        let same = e.project_to_surface(&x).unwrap();
        assert!((same - x).norm() < 1e-12);
    }

    #[test]
    fn frame_at_north_pole() {
        let s = ImplicitSurface::sphere(1.0).unwrap();
        let f = s
            .tangent_frame(&Vec3::new(0.0, 0.0, 1.0), &Vec3::new(1.0, 0.0, 0.0))
            .unwrap();
        assert!((f.e1 - Vec3::new(1.0, 0.0, 0.0)).norm() < 1e-12);
        assert!((f.e2 - Vec3::new(0.0, 1.0, 0.0)).norm() < 1e-12);
        assert!((f.n_out - Vec3::new(0.0, 0.0, 1.0)).norm() < 1e-12);
        // orthonormality and right-handedness
        assert!(f.e1.dot(&f.e2).abs() < 1e-12);
        assert!((f.e1.cross(&f.e2) - f.n_out).norm() < 1e-12);
        for psi in [0.0, 0.4, 2.0, 5.5] {
            assert_abs_diff_eq!(f.psi_direction(psi).norm(), 1.0, epsilon = 1e-12);
        }
        assert!(matches!(
            s.tangent_frame(&Vec3::new(0.0, 0.0, 1.0), &Vec3::new(0.0, 0.0, 2.0)),
            Err(SurfaceError::SeedParallelToNormal)
        ));
    }

    #[test]
    fn supporting_plane_examples() {
        let s = ImplicitSurface::sphere(1.0).unwrap();
        let p = Vec3::new(0.0, 0.0, 1.0);
        let frame = s.tangent_frame(&p, &Vec3::new(1.0, 0.0, 0.0)).unwrap();
        let plane = SupportingPlane::for_frame(&s, &frame).unwrap();
        assert!((plane.origin - Vec3::new(0.0, 0.0, -1.0)).norm() < 1e-10);

        // Equator point maps to distance 2 from the axis (similar triangles).
        let uv = plane.project(&Vec3::new(1.0, 0.0, 0.0)).unwrap();
        assert_abs_diff_eq!(uv.x, 2.0, epsilon = 1e-10);
        assert_abs_diff_eq!(uv.y, 0.0, epsilon = 1e-10);

        // q* maps to the plane origin.
        let uv0 = plane.project(&plane.origin.clone()).unwrap();
        assert!(uv0.norm() < 1e-10);

        // Tangent-plane directions are rejected.
        assert!(matches!(
            plane.project(&(p + Vec3::new(0.1, 0.0, 0.0))),
            Err(SurfaceError::NonConvexProjection)
        ));
        assert!(matches!(plane.project(&p), Err(SurfaceError::ProjectionAtBasePoint)));
    }

    #[test]
    fn ellipsoid_opposite_point_is_antipode() {
        let e = ImplicitSurface::ellipsoid(1.0, 1.2, 1.5).unwrap();
        let p = e.radial_point(Vec3::new(0.4, 0.8, 0.45));
        let q = e.opposite_point(&p).unwrap();
        assert!((q + p).norm() < 1e-10);
    }

    #[test]
    fn preimage_inverts_projection() {
        let e = ImplicitSurface::ellipsoid(1.0, 1.2, 1.5).unwrap();
        let p = e.radial_point(Vec3::new(0.1, -0.3, 0.95));
        let frame = e.tangent_frame(&p, &Vec3::new(1.0, 0.2, 0.0)).unwrap();
        let plane = SupportingPlane::for_frame(&e, &frame).unwrap();
        for i in 0..32 {
            let theta = std::f64::consts::PI * (i as f64 + 0.37) / 32.0;
            let phi = 1.7 * i as f64 + 0.2;
            let dir = Vec3::new(theta.sin() * phi.cos(), theta.sin() * phi.sin(), theta.cos());
            let x = e.radial_point(dir);
            if (x - p).norm() < 1e-6 {
                continue;
            }
            if let Ok(uv) = plane.project(&x) {
                let back = plane.preimage(&e, uv).unwrap();
                assert!((back - x).norm() < 1e-9, "roundtrip error {}", (back - x).norm());
            }
        }
    }

    #[test]
    fn projection_differential_matches_finite_differences() {
        let e = ImplicitSurface::ellipsoid(1.0, 1.2, 1.5).unwrap();
        let p = e.radial_point(Vec3::new(0.3, 0.5, 0.8));
        let frame = e.tangent_frame(&p, &Vec3::new(0.0, 1.0, 0.1)).unwrap();
        let plane = SupportingPlane::for_frame(&e, &frame).unwrap();
        let x = e.radial_point(Vec3::new(-0.5, 0.2, -0.8));
        let v = Vec3::new(0.3, -0.7, 0.2);
        let h = 1e-6;
        let fd = (plane.project(&(x + h * v)).unwrap() - plane.project(&(x - h * v)).unwrap())
            / (2.0 * h);
        let an = plane.project_tangent(&x, &v).unwrap();
        assert!((fd - an).norm() < 1e-6);
    }
}
