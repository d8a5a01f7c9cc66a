//! Geodesic shooting in ambient space with the scalar Jacobi equation
//! co-integrated, and extraction of the per-direction conjugate distance.
//!
//! The state is `(x, v, xi, xi_s)` in R^8 with
//!
//! ```text
//! x'  = v
//! v'  = lambda grad F,   lambda = -(v^T Hess F v) / |grad F|^2
//! xi'' = -K(x) xi,       xi(0) = 0, xi_s(0) = 1
//! ```
//!
//! integrated by an adaptive Dormand-Prince 5(4) pair. After every accepted
//! step the position is Newton-projected back onto `F = 0` and the velocity
//! re-tangentialised and renormalised; zeros of `xi` are then located by
//! re-integrating short spans from the last accepted state, never by
//! interpolation.

use crate::surface::{ImplicitSurface, SurfaceError, TangentFrame};
use crate::Vec3;
use rayon::prelude::*;
use std::f64::consts::{PI, TAU};
use thiserror::Error;

type State = nalgebra::SVector<f64, 8>;

#[derive(Debug, Error)]
pub enum GeodesicError {
    #[error(transparent)]
    Surface(#[from] SurfaceError),
    #[error("constraint drift at s = {s:.6}: |F| = {f_resid:.3e}, ||v|-1| = {v_resid:.3e}")]
    ConstraintDrift { s: f64, f_resid: f64, v_resid: f64 },
    #[error("step size underflow at s = {s:.6}")]
    StepUnderflow { s: f64 },
    #[error("no {j}-th Jacobi zero before s = {s_cap:.6} on psi = {psi:.6}")]
    NoConjugatePoint { psi: f64, j: usize, s_cap: f64 },
    #[error("geodesic invariant violated: {0}")]
    InvariantViolation(String),
}

/// Tolerances for the adaptive integrator.
#[derive(Debug, Clone, Copy)]
pub struct IntegratorConfig {
    pub rtol: f64,
    pub atol: f64,
    /// Hard cap on the step length (keeps stored paths dense enough for
    /// distance queries).
    pub max_step: f64,
}

impl Default for IntegratorConfig {
    fn default() -> Self {
        IntegratorConfig { rtol: 1e-10, atol: 1e-12, max_step: 0.05 }
    }
}

impl IntegratorConfig {
    /// Same tolerances halved — used by the robustness check.
    pub fn halved(&self) -> Self {
        IntegratorConfig { rtol: self.rtol / 2.0, atol: self.atol / 2.0, max_step: self.max_step }
    }
}

/// One accepted integration sample.
#[derive(Debug, Clone, Copy)]
pub struct GeodesicSample {
    pub s: f64,
    pub x: Vec3,
    pub v: Vec3,
    pub xi: f64,
    pub xi_s: f64,
}

impl GeodesicSample {
    fn from_state(s: f64, y: &State) -> Self {
        GeodesicSample {
            s,
            x: Vec3::new(y[0], y[1], y[2]),
            v: Vec3::new(y[3], y[4], y[5]),
            xi: y[6],
            xi_s: y[7],
        }
    }
}

/// Dense record of one radial geodesic.
#[derive(Debug, Clone)]
pub struct GeodesicPath {
    pub psi: f64,
    pub samples: Vec<GeodesicSample>,
}

impl GeodesicPath {
    pub fn endpoint(&self) -> &GeodesicSample {
        self.samples.last().expect("path has samples")
    }
}

fn rhs(surface: &ImplicitSurface, y: &State) -> State {
    let x = Vec3::new(y[0], y[1], y[2]);
    let v = Vec3::new(y[3], y[4], y[5]);
    let g = surface.grad(&x);
    let h = surface.hess(&x);
    let lambda = -v.dot(&(h * v)) / g.norm_squared();
    let k = surface.gauss_curvature_raw(&x);
    let acc = lambda * g;
    State::from_column_slice(&[v.x, v.y, v.z, acc.x, acc.y, acc.z, y[7], -k * y[6]])
}

// Dormand-Prince 5(4) coefficients.
const A21: f64 = 1.0 / 5.0;
const A31: f64 = 3.0 / 40.0;
const A32: f64 = 9.0 / 40.0;
const A41: f64 = 44.0 / 45.0;
const A42: f64 = -56.0 / 15.0;
const A43: f64 = 32.0 / 9.0;
const A51: f64 = 19372.0 / 6561.0;
const A52: f64 = -25360.0 / 2187.0;
const A53: f64 = 64448.0 / 6561.0;
const A54: f64 = -212.0 / 729.0;
const A61: f64 = 9017.0 / 3168.0;
const A62: f64 = -355.0 / 33.0;
const A63: f64 = 46732.0 / 5247.0;
const A64: f64 = 49.0 / 176.0;
const A65: f64 = -5103.0 / 18656.0;
const B1: f64 = 35.0 / 384.0;
const B3: f64 = 500.0 / 1113.0;
const B4: f64 = 125.0 / 192.0;
const B5: f64 = -2187.0 / 6784.0;
const B6: f64 = 11.0 / 84.0;
// b - b_hat, for the embedded error estimate.
const E1: f64 = 71.0 / 57600.0;
const E3: f64 = -71.0 / 16695.0;
const E4: f64 = 71.0 / 1920.0;
const E5: f64 = -17253.0 / 339200.0;
const E6: f64 = 22.0 / 525.0;
const E7: f64 = -1.0 / 40.0;

/// One trial step: returns the 5th-order candidate and the error estimate.
fn dp5_step(surface: &ImplicitSurface, y: &State, h: f64) -> (State, State) {
    let k1 = rhs(surface, y);
    let k2 = rhs(surface, &(y + h * A21 * k1));
    let k3 = rhs(surface, &(y + h * (A31 * k1 + A32 * k2)));
    let k4 = rhs(surface, &(y + h * (A41 * k1 + A42 * k2 + A43 * k3)));
    let k5 = rhs(surface, &(y + h * (A51 * k1 + A52 * k2 + A53 * k3 + A54 * k4)));
    let k6 = rhs(surface, &(y + h * (A61 * k1 + A62 * k2 + A63 * k3 + A64 * k4 + A65 * k5)));
    let y5 = y + h * (B1 * k1 + B3 * k3 + B4 * k4 + B5 * k5 + B6 * k6);
    let k7 = rhs(surface, &y5);
    let err = h * (E1 * k1 + E3 * k3 + E4 * k4 + E5 * k5 + E6 * k6 + E7 * k7);
    (y5, err)
}

fn scaled_error(y: &State, y_new: &State, err: &State, cfg: &IntegratorConfig) -> f64 {
    let mut acc = 0.0;
    for i in 0..8 {
        let sc = cfg.atol + cfg.rtol * y[i].abs().max(y_new[i].abs());
        let e = err[i] / sc;
        acc += e * e;
    }
    (acc / 8.0).sqrt()
}

/// Project the position onto the surface and re-tangentialise/renormalise
/// the velocity.
fn correct(surface: &ImplicitSurface, y: &mut State) -> Result<(), GeodesicError> {
    let x = Vec3::new(y[0], y[1], y[2]);
    let x = surface.project_to_surface(&x)?;
    let n = surface.normal(&x);
    let v = Vec3::new(y[3], y[4], y[5]);
    let vt = v - n * v.dot(&n);
    let v = vt / vt.norm();
    y[0] = x.x;
    y[1] = x.y;
    y[2] = x.z;
    y[3] = v.x;
    y[4] = v.y;
    y[5] = v.z;
    Ok(())
}

fn check_constraints(surface: &ImplicitSurface, s: f64, y: &State) -> Result<(), GeodesicError> {
    let x = Vec3::new(y[0], y[1], y[2]);
    let v = Vec3::new(y[3], y[4], y[5]);
    let f_resid = surface.f(&x).abs();
    let v_resid = (v.norm() - 1.0).abs();
    if !f_resid.is_finite() || f_resid > 1e-9 || v_resid > 1e-9 {
        return Err(GeodesicError::ConstraintDrift { s, f_resid, v_resid });
    }
    Ok(())
}

/// Integrate from `(s0, y0)` to exactly `s1`, reporting each accepted,
/// corrected state to `sink`.
fn integrate(
    surface: &ImplicitSurface,
    y0: State,
    s0: f64,
    s1: f64,
    cfg: &IntegratorConfig,
    sink: &mut dyn FnMut(f64, &State),
) -> Result<State, GeodesicError> {
    let mut y = y0;
    let mut s = s0;
    let mut h = (cfg.max_step / 8.0).min(s1 - s0).max(1e-12);
    let h_min = 1e-14 * surface.length_scale().max(1.0);
    let span_tol = 1e-13 * (1.0 + s1.abs());
    while s1 - s > span_tol {
        let h_try = h.min(s1 - s).min(cfg.max_step);
        let (y_new, err) = dp5_step(surface, &y, h_try);
        let e = scaled_error(&y, &y_new, &err, cfg);
        if e <= 1.0 {
            s += h_try;
            y = y_new;
            correct(surface, &mut y)?;
            check_constraints(surface, s, &y)?;
            sink(s, &y);
        } else if h_try <= h_min {
            return Err(GeodesicError::StepUnderflow { s });
        }
        let factor = if e > 0.0 { 0.9 * e.powf(-0.2) } else { 5.0 };
        h = (h_try * factor.clamp(0.2, 5.0)).min(cfg.max_step).max(h_min);
    }
    Ok(y)
}

fn initial_state(frame: &TangentFrame, psi: f64) -> State {
    let d = frame.psi_direction(psi);
    State::from_column_slice(&[frame.p.x, frame.p.y, frame.p.z, d.x, d.y, d.z, 0.0, 1.0])
}

/// Shoot the unit-speed geodesic at launch angle `psi` up to `s_max`.
pub fn shoot(
    surface: &ImplicitSurface,
    frame: &TangentFrame,
    psi: f64,
    s_max: f64,
    cfg: &IntegratorConfig,
) -> Result<GeodesicPath, GeodesicError> {
    let y0 = initial_state(frame, psi);
    let mut samples = vec![GeodesicSample::from_state(0.0, &y0)];
    integrate(surface, y0, 0.0, s_max, cfg, &mut |s, y| {
        samples.push(GeodesicSample::from_state(s, y));
    })?;
    Ok(GeodesicPath { psi, samples })
}

/// Locate the `j`-th nontrivial zero of `xi` by bisection between accepted
/// steps, re-integrating from the bracketing state.
fn refine_zero(
    surface: &ImplicitSurface,
    anchor: (f64, State),
    mut lo: f64,
    mut hi: f64,
    xi_lo: f64,
    cfg: &IntegratorConfig,
) -> Result<(f64, State), GeodesicError> {
    let (s_a, y_a) = anchor;
    let mut f_lo = xi_lo;
    let sink = &mut |_: f64, _: &State| {};
    for _ in 0..64 {
        if hi - lo < 1e-12 {
            break;
        }
        let mid = 0.5 * (lo + hi);
        let y_mid = integrate(surface, y_a, s_a, mid, cfg, sink)?;
        let f_mid = y_mid[6];
        if f_lo * f_mid <= 0.0 {
            hi = mid;
        } else {
            lo = mid;
            f_lo = f_mid;
        }
    }
    let root = 0.5 * (lo + hi);
    let y_root = integrate(surface, y_a, s_a, root, cfg, sink)?;
    Ok((root, y_root))
}

/// `(R, xi_s(R))` for the `j`-th conjugate point along launch angle `psi`.
pub fn conjugate_distance(
    surface: &ImplicitSurface,
    frame: &TangentFrame,
    psi: f64,
    j: usize,
    cfg: &IntegratorConfig,
) -> Result<(f64, f64), GeodesicError> {
    let (root, y) = conjugate_state(surface, frame, psi, j, cfg)?;
    Ok((root, y[7]))
}

fn conjugate_state(
    surface: &ImplicitSurface,
    frame: &TangentFrame,
    psi: f64,
    j: usize,
    cfg: &IntegratorConfig,
) -> Result<(f64, State), GeodesicError> {
    assert!(j >= 1, "conjugate order must be >= 1");
    let (k_min, _) = surface.curvature_extremes();
    let s_cap = (j as f64 + 1.5) * PI / k_min.sqrt();

    let y0 = initial_state(frame, psi);
    let mut prev: (f64, State) = (0.0, y0);
    let mut crossings = 0usize;
    let mut bracket: Option<((f64, State), f64, f64, f64)> = None;
    {
        let mut last = prev;
        integrate(surface, y0, 0.0, s_cap, cfg, &mut |s, y| {
            if bracket.is_some() {
                return;
            }
            let xi_prev = last.1[6];
            let xi_cur = y[6];
            if last.0 > 0.0 && xi_prev * xi_cur <= 0.0 && xi_cur != xi_prev {
                crossings += 1;
                if crossings == j {
                    bracket = Some((last, last.0, s, xi_prev));
                }
            }
            last = (s, *y);
        })?;
        prev = last;
    }
    let _ = prev;
    let (anchor, lo, hi, xi_lo) =
        bracket.ok_or(GeodesicError::NoConjugatePoint { psi, j, s_cap })?;
    refine_zero(surface, anchor, lo, hi, xi_lo, cfg)
}

/// Shoot and trim the path at the `j`-th conjugate point; the final sample
/// sits exactly at `s = R`.
pub fn shoot_to_conjugate(
    surface: &ImplicitSurface,
    frame: &TangentFrame,
    psi: f64,
    j: usize,
    cfg: &IntegratorConfig,
) -> Result<GeodesicPath, GeodesicError> {
    let (r, _) = conjugate_state(surface, frame, psi, j, cfg)?;
    let y0 = initial_state(frame, psi);
    let mut samples = vec![GeodesicSample::from_state(0.0, &y0)];
    let y_end = integrate(surface, y0, 0.0, r, cfg, &mut |s, y| {
        samples.push(GeodesicSample::from_state(s, y));
    })?;
    if (samples.last().unwrap().s - r).abs() > 1e-15 {
        samples.push(GeodesicSample::from_state(r, &y_end));
    }
    Ok(GeodesicPath { psi, samples })
}

/// Classification of a distance curve.
#[derive(Debug, Clone, PartialEq)]
pub enum Genericity {
    Generic,
    /// `R` is constant (round sphere): no isolated stationary points exist.
    Degenerate,
    /// Some stationary point failed the `A_1` test.
    NonGeneric { psis: Vec<f64> },
}

/// A refined stationary point of `R(psi)`.
#[derive(Debug, Clone, Copy)]
pub struct StationaryPoint {
    pub psi: f64,
    pub r: f64,
    /// Local quadratic-fit estimate of `R''(psi)`.
    pub r2: f64,
    pub a1: bool,
}

/// The distance function `R(psi)` on a uniform grid, with refined
/// stationary points.
#[derive(Debug, Clone)]
pub struct DistanceCurve {
    pub j: usize,
    pub psi: Vec<f64>,
    pub r: Vec<f64>,
    pub xi_s: Vec<f64>,
    pub stationary: Vec<StationaryPoint>,
    pub genericity: Genericity,
}

impl DistanceCurve {
    pub fn r_mean(&self) -> f64 {
        self.r.iter().sum::<f64>() / self.r.len() as f64
    }
}

/// Build the distance curve on `n_psi` uniform angles (parallel over psi).
pub fn distance_curve(
    surface: &ImplicitSurface,
    frame: &TangentFrame,
    j: usize,
    n_psi: usize,
    cfg: &IntegratorConfig,
) -> Result<DistanceCurve, GeodesicError> {
    assert!(n_psi >= 256, "distance curve needs at least 256 samples");
    let psis: Vec<f64> = (0..n_psi).map(|k| TAU * k as f64 / n_psi as f64).collect();
    let rx: Vec<(f64, f64)> = psis
        .par_iter()
        .map(|&psi| conjugate_distance(surface, frame, psi, j, cfg))
        .collect::<Result<_, _>>()?;
    let r: Vec<f64> = rx.iter().map(|p| p.0).collect();
    let xi_s: Vec<f64> = rx.iter().map(|p| p.1).collect();

    // Sign invariant: sign(xi_s at R_j) = (-1)^j.
    let want = if j % 2 == 0 { 1.0 } else { -1.0 };
    for (k, &v) in xi_s.iter().enumerate() {
        if v * want <= 0.0 {
            return Err(GeodesicError::InvariantViolation(format!(
                "xi_s({:.6}) = {v:.6e} has wrong sign for j = {j}",
                psis[k]
            )));
        }
    }

    let r_mean = r.iter().sum::<f64>() / n_psi as f64;
    let (r_min, r_max) = r.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &v| {
        (lo.min(v), hi.max(v))
    });
    if r_max - r_min < 1e-9 * r_mean {
        return Ok(DistanceCurve {
            j,
            psi: psis,
            r,
            xi_s,
            stationary: Vec::new(),
            genericity: Genericity::Degenerate,
        });
    }

    // Stationary points: sign change of forward differences, refined by
    // golden-section on re-evaluated R.
    let r_of = |psi: f64| conjugate_distance(surface, frame, psi, j, cfg).map(|p| p.0);
    let dpsi = TAU / n_psi as f64;
    let mut stationary = Vec::new();
    for k in 0..n_psi {
        let d_prev = r[k] - r[(k + n_psi - 1) % n_psi];
        let d_next = r[(k + 1) % n_psi] - r[k];
        if d_prev * d_next < 0.0 {
            let maximum = d_prev > 0.0;
            let lo = psis[k] - dpsi;
            let hi = psis[k] + dpsi;
            let psi_star = golden_section(&r_of, lo, hi, maximum, 1e-8)?;
            let r_star = r_of(psi_star)?;
            let rm = r_of(psi_star - dpsi)?;
            let rp = r_of(psi_star + dpsi)?;
            let r2 = (rm - 2.0 * r_star + rp) / (dpsi * dpsi);
            stationary.push(StationaryPoint {
                psi: psi_star.rem_euclid(TAU),
                r: r_star,
                r2,
                a1: r2.abs() > 1e-4 * r_mean,
            });
        }
    }
    stationary.sort_by(|a, b| a.psi.partial_cmp(&b.psi).unwrap());
    stationary.dedup_by(|a, b| {
        let d = (a.psi - b.psi).abs();
        d < 1e-6 || (TAU - d) < 1e-6
    });
    if stationary.len() % 2 != 0 {
        return Err(GeodesicError::InvariantViolation(format!(
            "odd number of stationary points ({})",
            stationary.len()
        )));
    }

    let bad: Vec<f64> = stationary.iter().filter(|s| !s.a1).map(|s| s.psi).collect();
    let genericity = if bad.is_empty() { Genericity::Generic } else { Genericity::NonGeneric { psis: bad } };
    Ok(DistanceCurve { j, psi: psis, r, xi_s, stationary, genericity })
}

fn golden_section(
    f: &dyn Fn(f64) -> Result<f64, GeodesicError>,
    mut lo: f64,
    mut hi: f64,
    maximum: bool,
    tol: f64,
) -> Result<f64, GeodesicError> {
    let phi = (5.0f64.sqrt() - 1.0) / 2.0;
    let sign = if maximum { -1.0 } else { 1.0 };
    let mut c = hi - phi * (hi - lo);
    let mut d = lo + phi * (hi - lo);
    let mut fc = sign * f(c)?;
    let mut fd = sign * f(d)?;
    while hi - lo > tol {
        if fc < fd {
            hi = d;
            d = c;
            fd = fc;
            c = hi - phi * (hi - lo);
            fc = sign * f(c)?;
        } else {
            lo = c;
            c = d;
            fc = fd;
            d = lo + phi * (hi - lo);
            fd = sign * f(d)?;
        }
    }
    Ok(0.5 * (lo + hi))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn sphere_frame(r: f64) -> (ImplicitSurface, TangentFrame) {
        let s = ImplicitSurface::sphere(r).unwrap();
        let p = Vec3::new(0.0, 0.0, r);
        let f = s.tangent_frame(&p, &Vec3::new(1.0, 0.0, 0.0)).unwrap();
        (s, f)
    }

    #[test]
    fn unit_sphere_great_circle_and_jacobi_field() {
        let (s, frame) = sphere_frame(1.0);
        let cfg = IntegratorConfig::default();
        let path = shoot(&s, &frame, 0.7, PI, &cfg).unwrap();
        let end = path.endpoint();
        assert!((end.x - Vec3::new(0.0, 0.0, -1.0)).norm() < 1e-8);
        for smp in &path.samples {
            assert!((smp.xi - smp.s.sin()).abs() < 1e-8, "xi mismatch at s = {}", smp.s);
            assert!(s.f(&smp.x).abs() < 1e-9);
            assert!((smp.v.norm() - 1.0).abs() < 1e-9);
        }
        assert_abs_diff_eq!(end.xi_s, -1.0, epsilon = 1e-8);
    }

    #[test]
    fn sphere_conjugate_distances() {
        let (s, frame) = sphere_frame(1.0);
        let cfg = IntegratorConfig::default();
        let (r1, xs1) = conjugate_distance(&s, &frame, 1.3, 1, &cfg).unwrap();
        assert_abs_diff_eq!(r1, PI, epsilon = 1e-8);
        assert_abs_diff_eq!(xs1, -1.0, epsilon = 1e-8);

        let (r3, xs3) = conjugate_distance(&s, &frame, 0.2, 3, &cfg).unwrap();
        assert_abs_diff_eq!(r3, 3.0 * PI, epsilon = 1e-7);
        assert_abs_diff_eq!(xs3, -1.0, epsilon = 1e-7);

        let (s2, frame2) = sphere_frame(2.0);
        let (r, _) = conjugate_distance(&s2, &frame2, 0.0, 1, &cfg).unwrap();
        assert_abs_diff_eq!(r, 2.0 * PI, epsilon = 1e-7);
    }

    #[test]
    fn principal_section_geodesic_stays_planar() {
        let s = ImplicitSurface::ellipsoid(1.0, 1.2, 1.5).unwrap();
        let p = Vec3::new(1.0, 0.0, 0.0);
        let frame = s.tangent_frame(&p, &Vec3::new(0.0, 1.0, 0.0)).unwrap();
        let cfg = IntegratorConfig::default();
        // Launch in the z = 0 section: reflection symmetry keeps it there.
        let path = shoot(&s, &frame, 0.0, 3.0, &cfg).unwrap();
        let max_z = path.samples.iter().map(|q| q.x.z.abs()).fold(0.0f64, f64::max);
        assert!(max_z < 1e-9, "max |z| = {max_z}");
    }

    #[test]
    fn sphere_distance_curve_is_degenerate() {
        let (s, frame) = sphere_frame(1.0);
        let cfg = IntegratorConfig::default();
        let dc = distance_curve(&s, &frame, 1, 256, &cfg).unwrap();
        assert_eq!(dc.genericity, Genericity::Degenerate);
        assert!(dc.stationary.is_empty());
        for &r in &dc.r {
            assert_abs_diff_eq!(r, PI, epsilon = 1e-8);
        }
    }

    #[test]
    fn shoot_to_conjugate_ends_exactly_at_r() {
        let (s, frame) = sphere_frame(1.0);
        let cfg = IntegratorConfig::default();
        let path = shoot_to_conjugate(&s, &frame, 2.1, 1, &cfg).unwrap();
        let end = path.endpoint();
        assert_abs_diff_eq!(end.s, PI, epsilon = 1e-8);
        assert!(end.xi.abs() < 1e-9);
    }
}
