//! Evolutes of plane curves: the envelope of normal lines.
//!
//! For an oval given by a support function `h` the evolute is
//! `beta(theta) = gamma(theta) - (h''+h)(cos theta, sin theta)`, with cusps
//! at the vertices `h'''+h' = 0`. For a parametric curve with nonvanishing
//! curvature it is `beta = gamma + N/k`, with cusps where `k' = 0`.
//!
//! Cusped curves are always assembled in the standard orientation (the one
//! where the tangent rotates by `+pi` across every cusp): for ovals this is
//! the direction of decreasing support angle, for parametric curves the
//! curve's own clockwise parameter direction.

use crate::planar::{
    self, ArcSample, Cusp, CuspedCurve, ParametricCurve, PlanarError, PlaneCurve,
    SupportFunction, TurningReport,
};
use crate::Vec2;
use std::f64::consts::TAU;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum EvoluteError {
    #[error(transparent)]
    Planar(#[from] PlanarError),
    #[error("signed curvature vanishing near t = {t:.12}; evolute undefined")]
    CurvatureVanishes { t: f64 },
    #[error("quadrature did not converge: {0}")]
    QuadratureDiverged(String),
    #[error("arc index {index} out of range ({count} arcs)")]
    BadArcIndex { index: usize, count: usize },
}

/// Evolute of a closed plane curve, as a cusped curve in standard
/// orientation plus its turning data.
#[derive(Debug, Clone)]
pub struct Evolute {
    pub curve: CuspedCurve,
    /// Cusp preimages (support angles or curve parameters), ascending in `[0, 2pi)`.
    pub vertex_params: Vec<f64>,
    /// Rotation index of the evolute.
    pub i: i64,
    /// Number of cusps.
    pub n: usize,
    /// Rotation index of the source curve (paper orientation; `-1` for ovals).
    pub source_index: i64,
    pub report: TurningReport,
}

impl Evolute {
    /// `i = (n + 2 I) / 2`, which reduces to `(n-2)/2` for ovals.
    pub fn index_relation_ok(&self) -> bool {
        2 * self.i == self.n as i64 + 2 * self.source_index
    }

    /// Signed total curvature of one smooth arc (standard orientation),
    /// measured from the sampled tangents.
    pub fn arc_total_curvature(&self, arc_index: usize) -> Result<f64, EvoluteError> {
        self.report
            .per_arc
            .get(arc_index)
            .copied()
            .ok_or(EvoluteError::BadArcIndex { index: arc_index, count: self.report.per_arc.len() })
    }
}

/// A circle's evolute collapses to its centre; reported as data, not an error.
#[derive(Debug, Clone)]
pub enum EvoluteResult {
    Degenerate { center: Vec2 },
    Evolute(Box<Evolute>),
}

impl EvoluteResult {
    pub fn unwrap_evolute(self) -> Evolute {
        match self {
            EvoluteResult::Evolute(e) => *e,
            EvoluteResult::Degenerate { .. } => panic!("unexpected degenerate evolute"),
        }
    }
}

fn center_of_curvature(h: &SupportFunction, theta: f64) -> Vec2 {
    let p = planar::oval_point(h, theta);
    let rho = h.eval(theta).rho();
    p - rho * Vec2::new(theta.cos(), theta.sin())
}

/// Evolute of an oval from its support function.
pub fn evolute_of_oval(h: &SupportFunction, samples: usize) -> Result<EvoluteResult, EvoluteError> {
    // Constant radius of curvature: the evolute is a single point.
    let grid: Vec<f64> = (0..512).map(|i| TAU * i as f64 / 512.0).collect();
    let rhos: Vec<f64> = grid.iter().map(|&t| h.eval(t).rho()).collect();
    let (rho_min, rho_max) = rhos
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &r| (lo.min(r), hi.max(r)));
    let rho_mean = rhos.iter().sum::<f64>() / rhos.len() as f64;
    if rho_max - rho_min < 1e-9 * rho_mean {
        let center = grid
            .iter()
            .map(|&t| center_of_curvature(h, t))
            .sum::<Vec2>()
            / grid.len() as f64;
        return Ok(EvoluteResult::Degenerate { center });
    }

    let verts = planar::find_vertices(h)?;
    let n = verts.len();

    // Traverse with decreasing theta (standard orientation). Arc j runs from
    // verts[n-1-j] down to the previous vertex; cusp j sits at its end.
    let mut arcs = Vec::with_capacity(n);
    let mut cusps = Vec::with_capacity(n);
    for j in 0..n {
        let top_idx = n - 1 - j;
        let top = verts[top_idx];
        let bot_idx = (top_idx + n - 1) % n;
        let mut bot = verts[bot_idx];
        if bot >= top {
            bot -= TAU;
        }
        let span = top - bot;
        let m = ((samples as f64 * span / TAU).round() as usize).max(16);
        let s_mid = h.eval(0.5 * (top + bot)).vertex_eq().signum();
        let arc = (0..=m)
            .map(|k| {
                let theta = top - span * k as f64 / m as f64;
                ArcSample {
                    param: theta,
                    point: center_of_curvature(h, theta),
                    tangent: s_mid * Vec2::new(theta.cos(), theta.sin()),
                }
            })
            .collect::<Vec<_>>();
        arcs.push(arc);
        let cusp_theta = (bot % TAU + TAU) % TAU;
        cusps.push(Cusp {
            param: cusp_theta,
            point: center_of_curvature(h, cusp_theta),
            ordinary: true,
        });
    }

    let curve = CuspedCurve { arcs, cusps, closed: true };
    let report = planar::turning_number(&curve)?;
    let source_index = planar::curve_rotation_index(&ParametricCurve::Oval(h.clone()))?;
    Ok(EvoluteResult::Evolute(Box::new(Evolute {
        curve,
        vertex_params: verts,
        i: report.rotation_index,
        n,
        source_index,
        report,
    })))
}

/// Evolute `beta = gamma + N/k` of a regular closed parametric curve with
/// nonvanishing signed curvature.
pub fn evolute_of_curve<C: PlaneCurve + ?Sized>(
    curve: &C,
    samples: usize,
) -> Result<EvoluteResult, EvoluteError> {
    let grid_n = 4096;
    let ts: Vec<f64> = (0..grid_n).map(|i| TAU * i as f64 / grid_n as f64).collect();
    let jets: Vec<_> = ts.iter().map(|&t| curve.jet(t)).collect();

    let speed_max = jets.iter().map(|j| j.vel.norm()).fold(0.0f64, f64::max);
    for (i, j) in jets.iter().enumerate() {
        if j.vel.norm() < 1e-12 * speed_max.max(1.0) {
            return Err(PlanarError::IrregularCurve { t: ts[i], speed: j.vel.norm() }.into());
        }
    }

    let ks: Vec<f64> = jets.iter().map(|j| j.curvature()).collect();
    let k_scale = ks.iter().fold(0.0f64, |m, k| m.max(k.abs()));
    for i in 0..grid_n {
        let (ka, kb) = (ks[i], ks[(i + 1) % grid_n]);
        if ka.abs() < 1e-9 * k_scale || ka * kb < 0.0 {
            return Err(EvoluteError::CurvatureVanishes { t: ts[i] });
        }
    }

    // Constant curvature: a circle, evolute degenerates to the centre.
    let dks: Vec<f64> = jets.iter().map(|j| j.curvature_derivative()).collect();
    let dk_scale = dks.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    let beta_at = |t: f64| {
        let j = curve.jet(t);
        j.pos + j.unit_normal() / j.curvature()
    };
    if dk_scale < 1e-9 * k_scale {
        let center = ts.iter().map(|&t| beta_at(t)).sum::<Vec2>() / grid_n as f64;
        return Ok(EvoluteResult::Degenerate { center });
    }

    // Cusp parameters: simple zeros of k'(t).
    let dk_at = |t: f64| curve.jet(t).curvature_derivative();
    let mut roots = Vec::new();
    for i in 0..grid_n {
        let (a, b) = (ts[i], ts[i] + TAU / grid_n as f64);
        let (fa, fb) = (dks[i], dks[(i + 1) % grid_n]);
        if fa == 0.0 {
            roots.push(a);
        } else if fa * fb < 0.0 {
            let (mut lo, mut hi, mut flo) = (a, b, fa);
            for _ in 0..200 {
                let mid = 0.5 * (lo + hi);
                let fm = dk_at(mid);
                if fm.abs() < 1e-13 * dk_scale || hi - lo < 1e-15 {
                    lo = mid;
                    break;
                }
                if flo * fm < 0.0 {
                    hi = mid;
                } else {
                    lo = mid;
                    flo = fm;
                }
            }
            roots.push(0.5 * (lo + hi));
        }
    }
    roots.sort_by(|x, y| x.partial_cmp(y).unwrap());
    roots.dedup_by(|a, b| (*a - *b).abs() < 1e-9);
    if roots.len() < 2 || roots.len() % 2 != 0 {
        return Err(PlanarError::MalformedCurve(format!(
            "expected an even number >= 2 of curvature extrema, found {}",
            roots.len()
        ))
        .into());
    }
    let n = roots.len();

    // Arcs follow the curve's own parameter direction; the tangent of the
    // evolute is -sign(k') N.
    let mut arcs = Vec::with_capacity(n);
    let mut cusps = Vec::with_capacity(n);
    for j in 0..n {
        let lo = roots[j];
        let mut hi = roots[(j + 1) % n];
        if hi <= lo {
            hi += TAU;
        }
        let span = hi - lo;
        let m = ((samples as f64 * span / TAU).round() as usize).max(16);
        let s_mid = -dk_at(0.5 * (lo + hi)).signum();
        let arc = (0..=m)
            .map(|k| {
                let t = lo + span * k as f64 / m as f64;
                let jet = curve.jet(t);
                ArcSample { param: t, point: beta_at(t), tangent: s_mid * jet.unit_normal() }
            })
            .collect::<Vec<_>>();
        arcs.push(arc);
        let tc = hi % TAU;
        cusps.push(Cusp { param: tc, point: beta_at(tc), ordinary: true });
    }

    let curve_out = CuspedCurve { arcs, cusps, closed: true };
    let report = planar::turning_number(&curve_out)?;
    let source_index = planar::curve_rotation_index(curve)?;
    Ok(EvoluteResult::Evolute(Box::new(Evolute {
        curve: curve_out,
        vertex_params: roots,
        i: report.rotation_index,
        n,
        source_index,
        report,
    })))
}

/// Total curvatures of a vertex-to-vertex segment of the oval and of the
/// corresponding evolute arc, by composite trapezoid on the analytic
/// integrands. The two values agree in magnitude and differ in sign.
pub fn lemma1_check(
    h: &SupportFunction,
    vertex_index: usize,
) -> Result<(f64, f64), EvoluteError> {
    let verts = planar::find_vertices(h)?;
    let n = verts.len();
    let t0 = verts[vertex_index % n];
    let mut t1 = verts[(vertex_index + 1) % n];
    if t1 <= t0 {
        t1 += TAU;
    }

    // gamma side: k_gamma ds = (-1/rho)(rho dtheta); beta side uses the
    // signed radius R = 1/k_gamma, so -ds/R = (1/rho)(rho dtheta).
    let gamma_integrand = |theta: f64| {
        let rho = h.eval(theta).rho();
        (-1.0 / rho) * rho
    };
    let beta_integrand = |theta: f64| {
        let rho = h.eval(theta).rho();
        (1.0 / rho) * rho
    };

    let trapezoid = |f: &dyn Fn(f64) -> f64, m: usize| {
        let step = (t1 - t0) / m as f64;
        let mut acc = 0.5 * (f(t0) + f(t1));
        for i in 1..m {
            acc += f(t0 + step * i as f64);
        }
        acc * step
    };

    let coarse = (trapezoid(&gamma_integrand, 2048), trapezoid(&beta_integrand, 2048));
    let fine = (trapezoid(&gamma_integrand, 4096), trapezoid(&beta_integrand, 4096));
    if (fine.0 - coarse.0).abs() > 1e-8 || (fine.1 - coarse.1).abs() > 1e-8 {
        return Err(EvoluteError::QuadratureDiverged(format!(
            "refinement shifted totals by ({:.3e}, {:.3e})",
            fine.0 - coarse.0,
            fine.1 - coarse.1
        )));
    }
    Ok(fine)
}

/// The unique parameter with tangent line parallel to the one at `theta`:
/// in support-angle parametrisation simply `theta + pi`.
pub fn parallel_tangent_partner(theta: f64) -> f64 {
    (theta + std::f64::consts::PI).rem_euclid(TAU)
}
