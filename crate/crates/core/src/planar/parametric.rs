//! Analytic closed plane curves with exact derivatives up to third order.
//!
//! All named families follow the clockwise orientation convention used
//! throughout: simple ovals have rotation index `I = -1` and negative signed
//! curvature, so the printed index relations hold without sign fixes.

use crate::planar::{PlanarError, SupportFunction};
use crate::Vec2;
use std::f64::consts::{PI, TAU};

/// Position and first three derivatives at one parameter value.
#[derive(Debug, Clone, Copy)]
pub struct CurveJet {
    pub pos: Vec2,
    pub vel: Vec2,
    pub acc: Vec2,
    pub jerk: Vec2,
}

impl CurveJet {
    /// Signed curvature `cross(v, a) / |v|^3`.
    pub fn curvature(&self) -> f64 {
        let g = self.vel.norm();
        self.vel.perp(&self.acc) / (g * g * g)
    }

    /// Derivative of the signed curvature w.r.t. the curve parameter.
    pub fn curvature_derivative(&self) -> f64 {
        let g2 = self.vel.norm_squared();
        let g = g2.sqrt();
        let c = self.vel.perp(&self.acc);
        self.vel.perp(&self.jerk) / (g2 * g) - 3.0 * c * self.vel.dot(&self.acc) / (g2 * g2 * g)
    }

    /// Left unit normal of the velocity.
    pub fn unit_normal(&self) -> Vec2 {
        let t = self.vel / self.vel.norm();
        Vec2::new(-t.y, t.x)
    }
}

/// Named closed curves, `2*pi`-periodic in the parameter.
#[derive(Debug, Clone)]
pub enum ParametricCurve {
    /// `(a cos t, -b sin t)`: ellipse traversed clockwise.
    Ellipse { a: f64, b: f64 },
    /// Limacon `r = a + b cos t` mirrored to clockwise orientation; with
    /// `b > a` it has an inner loop and rotation index `-2`.
    Limacon { a: f64, b: f64 },
    /// Oval reconstructed from a support function, traversed clockwise.
    Oval(SupportFunction),
}

impl ParametricCurve {
    pub fn jet(&self, t: f64) -> CurveJet {
        match self {
            ParametricCurve::Ellipse { a, b } => {
                let (s, c) = t.sin_cos();
                CurveJet {
                    pos: Vec2::new(a * c, -b * s),
                    vel: Vec2::new(-a * s, -b * c),
                    acc: Vec2::new(-a * c, b * s),
                    jerk: Vec2::new(a * s, b * c),
                }
            }
            ParametricCurve::Limacon { a, b } => {
                let (s, c) = t.sin_cos();
                let r = a + b * c;
                let r1 = -b * s;
                let r2 = -b * c;
                let r3 = b * s;
                let u = r * c;
                let u1 = r1 * c - r * s;
                let u2 = r2 * c - 2.0 * r1 * s - r * c;
                let u3 = r3 * c - 3.0 * r2 * s - 3.0 * r1 * c + r * s;
                let v = r * s;
                let v1 = r1 * s + r * c;
                let v2 = r2 * s + 2.0 * r1 * c - r * s;
                let v3 = r3 * s + 3.0 * r2 * c - 3.0 * r1 * s - r * c;
                CurveJet {
                    pos: Vec2::new(u, -v),
                    vel: Vec2::new(u1, -v1),
                    acc: Vec2::new(u2, -v2),
                    jerk: Vec2::new(u3, -v3),
                }
            }
            ParametricCurve::Oval(h) => {
                // gamma_cw(t) = gamma(-t) for the support parametrisation.
                let theta = -t;
                let jet = h.eval(theta);
                let (s, c) = theta.sin_cos();
                let rho = jet.rho();
                let rho1 = jet.dh + jet.d3h;
                let rho2 = jet.d2h + jet.d4h;
                let pos = Vec2::new(jet.h * c - jet.dh * s, jet.h * s + jet.dh * c);
                let radial = Vec2::new(c, s);
                let along = Vec2::new(-s, c);
                let d1 = rho * along;
                let d2 = rho1 * along - rho * radial;
                let d3 = rho2 * along - 2.0 * rho1 * radial - rho * along;
                CurveJet { pos, vel: -d1, acc: d2, jerk: -d3 }
            }
        }
    }
}

/// Blanket interface so test fixtures can feed synthetic curves through the
/// same machinery as the named families.
pub trait PlaneCurve {
    fn jet(&self, t: f64) -> CurveJet;
}

impl PlaneCurve for ParametricCurve {
    fn jet(&self, t: f64) -> CurveJet {
        ParametricCurve::jet(self, t)
    }
}

/// Rotation index of a regular closed curve: total lifted turning of the
/// velocity over one period divided by `2*pi`.
///
/// The sample grid doubles until every turning step is below `pi/2`
/// (up to `2^20` samples).
pub fn curve_rotation_index<C: PlaneCurve + ?Sized>(curve: &C) -> Result<i64, PlanarError> {
    let mut n = 1024usize;
    loop {
        match try_rotation_index(curve, n) {
            Ok(i) => return Ok(i),
            Err(PlanarError::FinenessViolation { .. }) if n < (1 << 20) => n *= 2,
            Err(e) => return Err(e),
        }
    }
}

fn try_rotation_index<C: PlaneCurve + ?Sized>(curve: &C, n: usize) -> Result<i64, PlanarError> {
    let samples: Vec<(f64, Vec2)> = (0..n)
        .map(|i| {
            let t = TAU * i as f64 / n as f64;
            (t, curve.jet(t).vel)
        })
        .collect();
    let speed_max = samples.iter().map(|(_, v)| v.norm()).fold(0.0f64, f64::max);
    for &(t, v) in &samples {
        let speed = v.norm();
        if speed < 1e-12 * speed_max.max(1.0) {
            return Err(PlanarError::IrregularCurve { t, speed });
        }
    }
    let mut total = 0.0;
    for i in 0..n {
        let a0 = samples[i].1.y.atan2(samples[i].1.x);
        let next = samples[(i + 1) % n].1;
        let a1 = next.y.atan2(next.x);
        let mut step = (a1 - a0) % TAU;
        if step > PI {
            step -= TAU;
        } else if step <= -PI {
            step += TAU;
        }
        if step.abs() >= PI / 2.0 {
            return Err(PlanarError::FinenessViolation { arc: 0, step: step.abs() });
        }
        total += step;
    }
    let turns = total / TAU;
    let index = turns.round() as i64;
    let residual = (turns - index as f64).abs();
    if residual >= 0.05 {
        return Err(PlanarError::TurningResidual { total, residual });
    }
    Ok(index)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn fd_check(curve: &ParametricCurve, t: f64) {
        let d = 1e-6;
        let j = curve.jet(t);
        let jp = curve.jet(t + d);
        let jm = curve.jet(t - d);
        let fd_vel = (jp.pos - jm.pos) / (2.0 * d);
        let fd_acc = (jp.vel - jm.vel) / (2.0 * d);
        let fd_jerk = (jp.acc - jm.acc) / (2.0 * d);
        assert_abs_diff_eq!((j.vel - fd_vel).norm(), 0.0, epsilon = 1e-6);
        assert_abs_diff_eq!((j.acc - fd_acc).norm(), 0.0, epsilon = 1e-6);
        assert_abs_diff_eq!((j.jerk - fd_jerk).norm(), 0.0, epsilon = 1e-6);
    }

    #[test]
    fn jets_match_finite_differences() {
        let h = SupportFunction::fourier(1.0, vec![(3, 0.05, 0.0)]).unwrap();
        let curves = [
            ParametricCurve::Ellipse { a: 2.0, b: 1.0 },
            ParametricCurve::Limacon { a: 1.0, b: 2.0 },
            ParametricCurve::Oval(h),
        ];
        for curve in &curves {
            for i in 0..24 {
                fd_check(curve, 0.05 + TAU * i as f64 / 24.0);
            }
        }
    }

    #[test]
    fn paper_orientation_rotation_indices() {
        let ellipse = ParametricCurve::Ellipse { a: 2.0, b: 1.0 };
        assert_eq!(curve_rotation_index(&ellipse).unwrap(), -1);

        let limacon = ParametricCurve::Limacon { a: 1.0, b: 2.0 };
        assert_eq!(curve_rotation_index(&limacon).unwrap(), -2);

        let circle = ParametricCurve::Ellipse { a: 1.0, b: 1.0 };
        assert_eq!(curve_rotation_index(&circle).unwrap(), -1);

        let h = SupportFunction::fourier(1.0, vec![(3, 0.05, 0.0)]).unwrap();
        assert_eq!(curve_rotation_index(&ParametricCurve::Oval(h)).unwrap(), -1);
    }

    #[test]
    fn oval_curvature_is_negative_with_magnitude_one_over_rho() {
        let h = SupportFunction::fourier(1.0, vec![(3, 0.05, 0.0)]).unwrap();
        let curve = ParametricCurve::Oval(h.clone());
        for i in 0..32 {
            let t = TAU * i as f64 / 32.0;
            let k = curve.jet(t).curvature();
            let rho = h.eval(-t).rho();
            assert!(k < 0.0);
            assert_abs_diff_eq!(k, -1.0 / rho, epsilon = 1e-12);
        }
    }

    #[test]
    fn ellipse_curvature_at_major_axis() {
        let curve = ParametricCurve::Ellipse { a: 2.0, b: 1.0 };
        // |k| = a/b^2 at the end of the major axis, negative by orientation.
        assert_abs_diff_eq!(curve.jet(0.0).curvature(), -2.0, epsilon = 1e-14);
    }
}
