//! Support functions of plane ovals.
//!
//! An oval is described by its support function `h(theta)`: the signed
//! distance from the origin to the oriented tangent line with outward normal
//! `(cos theta, sin theta)`. The curve is recovered as the envelope of those
//! tangent lines, its radius of curvature is `h'' + h`, and vertices sit at
//! the zeros of `h''' + h'`.

use crate::planar::PlanarError;
use crate::Vec2;

/// Number of samples used for validity scans and root bracketing.
const SCAN_GRID: usize = 4096;

/// Values of `h` and its first four derivatives at one angle.
#[derive(Debug, Clone, Copy)]
pub struct SupportJet {
    pub h: f64,
    pub dh: f64,
    pub d2h: f64,
    pub d3h: f64,
    pub d4h: f64,
}

impl SupportJet {
    /// Radius of curvature `h'' + h` of the underlying oval.
    pub fn rho(&self) -> f64 {
        self.d2h + self.h
    }

    /// The vertex equation `h''' + h'`.
    pub fn vertex_eq(&self) -> f64 {
        self.d3h + self.dh
    }
}

/// Support function of a plane oval, differentiable exactly.
///
/// Two analytic families are supported: finite Fourier sums and the ellipse
/// (kept as a closed form rather than a Fourier truncation so vertex counts
/// carry no truncation artifacts).
#[derive(Debug, Clone)]
pub enum SupportFunction {
    /// `h(theta) = a0 + sum_k (a_k cos k theta + b_k sin k theta)`.
    Fourier {
        a0: f64,
        /// `(k, a_k, b_k)` with `k >= 1`.
        harmonics: Vec<(u32, f64, f64)>,
    },
    /// `h(theta) = sqrt(a^2 cos^2 theta + b^2 sin^2 theta)`, the support
    /// function of the ellipse with semi-axes `a`, `b` about its centre.
    Ellipse { a: f64, b: f64 },
}

impl SupportFunction {
    /// Build a Fourier support function, checking strict convexity
    /// (`min (h''+h) > 0` on a scan grid).
    pub fn fourier(a0: f64, harmonics: Vec<(u32, f64, f64)>) -> Result<Self, PlanarError> {
        if harmonics.iter().any(|&(k, _, _)| k == 0) {
            return Err(PlanarError::InvalidInput(
                "harmonic index k must be >= 1 (use a0 for the constant term)".into(),
            ));
        }
        let sf = SupportFunction::Fourier { a0, harmonics };
        sf.check_oval()?;
        Ok(sf)
    }

    /// Build the analytic ellipse support function.
    pub fn ellipse(a: f64, b: f64) -> Result<Self, PlanarError> {
        if !(a > 0.0 && b > 0.0) {
            return Err(PlanarError::InvalidInput(format!(
                "ellipse semi-axes must be positive, got a={a}, b={b}"
            )));
        }
        let sf = SupportFunction::Ellipse { a, b };
        sf.check_oval()?;
        Ok(sf)
    }

    /// Circle of radius `r` about the origin.
    pub fn circle(r: f64) -> Result<Self, PlanarError> {
        Self::fourier(r, Vec::new())
    }

    /// Evaluate `h` and its derivatives by exact analytic differentiation.
    pub fn eval(&self, theta: f64) -> SupportJet {
        match self {
            SupportFunction::Fourier { a0, harmonics } => {
                let (mut h, mut dh, mut d2h, mut d3h, mut d4h) = (*a0, 0.0, 0.0, 0.0, 0.0);
                for &(k, a, b) in harmonics {
                    let k = f64::from(k);
                    let (s, c) = (k * theta).sin_cos();
                    let (ac, bs) = (a * c, b * s);
                    let (as_, bc) = (a * s, b * c);
                    h += ac + bs;
                    dh += k * (bc - as_);
                    d2h -= k * k * (ac + bs);
                    d3h += k * k * k * (as_ - bc);
                    d4h += k * k * k * k * (ac + bs);
                }
                SupportJet { h, dh, d2h, d3h, d4h }
            }
            SupportFunction::Ellipse { a, b } => {
                let d = b * b - a * a;
                let (s2, c2) = (2.0 * theta).sin_cos();
                let u = a * a + d * (1.0 - c2) / 2.0;
                let u1 = d * s2;
                let u2 = 2.0 * d * c2;
                let u3 = -4.0 * d * s2;
                let u4 = -8.0 * d * c2;
                let h = u.sqrt();
                let h3 = h * h * h;
                let h5 = h3 * h * h;
                let h7 = h5 * h * h;
                let dh = u1 / (2.0 * h);
                let d2h = u2 / (2.0 * h) - u1 * u1 / (4.0 * h3);
                let d3h = u3 / (2.0 * h) - 3.0 * u1 * u2 / (4.0 * h3) + 3.0 * u1 * u1 * u1 / (8.0 * h5);
                let d4h = u4 / (2.0 * h) - u1 * u3 / h3 - 3.0 * u2 * u2 / (4.0 * h3)
                    + 9.0 * u1 * u1 * u2 / (4.0 * h5)
                    - 15.0 * u1 * u1 * u1 * u1 / (16.0 * h7);
                SupportJet { h, dh, d2h, d3h, d4h }
            }
        }
    }

    /// Minimum of `h'' + h` over the scan grid.
    pub fn min_rho(&self) -> f64 {
        (0..SCAN_GRID)
            .map(|i| {
                let theta = 2.0 * std::f64::consts::PI * i as f64 / SCAN_GRID as f64;
                self.eval(theta).rho()
            })
            .fold(f64::INFINITY, f64::min)
    }

    fn check_oval(&self) -> Result<(), PlanarError> {
        let min_rho = self.min_rho();
        if min_rho <= 0.0 {
            return Err(PlanarError::NotAnOval { min_rho });
        }
        Ok(())
    }
}

/// Point of the oval at support angle `theta`:
/// `gamma(theta) = (h cos - h' sin, h sin + h' cos)`.
///
/// The outward normal there is `(cos theta, sin theta)` and the velocity is
/// `(h''+h) (-sin theta, cos theta)`.
pub fn oval_point(h: &SupportFunction, theta: f64) -> Vec2 {
    let jet = h.eval(theta);
    let (s, c) = theta.sin_cos();
    Vec2::new(jet.h * c - jet.dh * s, jet.h * s + jet.dh * c)
}

/// All vertices of the oval in `[0, 2*pi)`: the simple zeros of `h''' + h'`,
/// sorted increasing, each refined by bisection.
pub fn find_vertices(h: &SupportFunction) -> Result<Vec<f64>, PlanarError> {
    let two_pi = 2.0 * std::f64::consts::PI;
    let n = SCAN_GRID;
    let f = |theta: f64| h.eval(theta).vertex_eq();
    let df = |theta: f64| {
        let jet = h.eval(theta);
        jet.d4h + jet.d2h
    };

    let grid: Vec<f64> = (0..=n).map(|i| two_pi * i as f64 / n as f64).collect();
    let vals: Vec<f64> = grid.iter().map(|&t| f(t)).collect();
    let scale = vals.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    if scale < 1e-12 {
        return Err(PlanarError::DegenerateVertices);
    }
    let tol_root = 1e-12 * scale.max(1.0);

    let mut roots = Vec::new();
    for i in 0..n {
        let (a, b) = (grid[i], grid[i + 1]);
        let (fa, fb) = (vals[i], vals[i + 1]);
        if fa == 0.0 {
            roots.push(a);
            continue;
        }
        if fa * fb < 0.0 {
            let mut lo = a;
            let mut hi = b;
            let mut flo = fa;
            for _ in 0..200 {
                let mid = 0.5 * (lo + hi);
                let fm = f(mid);
                if fm.abs() < tol_root || (hi - lo) < 1e-15 {
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
    // Simple-zero check: a vanishing derivative marks a degenerate vertex.
    for &r in &roots {
        if df(r).abs() < 1e-6 * scale.max(1.0) {
            return Err(PlanarError::NonGenericVertex { theta: r });
        }
    }
    roots.sort_by(|x, y| x.partial_cmp(y).unwrap());
    roots.dedup_by(|a, b| (*a - *b).abs() < 1e-9);
    if roots.len() >= 2 && (roots[roots.len() - 1] - roots[0] - two_pi).abs() < 1e-9 {
        roots.pop();
    }
    if roots.len() < 4 || roots.len() % 2 != 0 {
        return Err(PlanarError::MalformedCurve(format!(
            "expected an even vertex count >= 4, found {}",
            roots.len()
        )));
    }
    Ok(roots)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use std::f64::consts::PI;

    #[test]
    fn constant_support_is_unit_circle() {
        let h = SupportFunction::circle(1.0).unwrap();
        let jet = h.eval(0.7);
        assert_eq!((jet.h, jet.dh, jet.d2h, jet.d3h), (1.0, 0.0, 0.0, 0.0));
        let p = oval_point(&h, PI / 2.0);
        assert_abs_diff_eq!(p.x, 0.0, epsilon = 1e-15);
        assert_abs_diff_eq!(p.y, 1.0, epsilon = 1e-15);
    }

    #[test]
    fn third_harmonic_jets() {
        let h = SupportFunction::fourier(1.0, vec![(3, 0.05, 0.0)]).unwrap();
        let j0 = h.eval(0.0);
        assert_abs_diff_eq!(j0.h, 1.05, epsilon = 1e-15);
        assert_abs_diff_eq!(j0.dh, 0.0, epsilon = 1e-15);
        assert_abs_diff_eq!(j0.d2h, -0.45, epsilon = 1e-15);
        assert_abs_diff_eq!(j0.d3h, 0.0, epsilon = 1e-15);

        let j1 = h.eval(PI / 6.0);
        assert_abs_diff_eq!(j1.h, 1.0, epsilon = 1e-12);
        assert_abs_diff_eq!(j1.dh, -0.15, epsilon = 1e-12);
        assert_abs_diff_eq!(j1.d2h, 0.0, epsilon = 1e-12);
        assert_abs_diff_eq!(j1.d3h, 1.35, epsilon = 1e-12);
    }

    #[test]
    fn scaled_circle_points_at_distance_r() {
        let h = SupportFunction::circle(2.5).unwrap();
        for i in 0..16 {
            let theta = 2.0 * PI * i as f64 / 16.0;
            assert_abs_diff_eq!(oval_point(&h, theta).norm(), 2.5, epsilon = 1e-14);
        }
    }

    #[test]
    fn ellipse_support_reconstructs_ellipse() {
        let h = SupportFunction::ellipse(2.0, 1.0).unwrap();
        let p0 = oval_point(&h, 0.0);
        assert_abs_diff_eq!(p0.x, 2.0, epsilon = 1e-14);
        assert_abs_diff_eq!(p0.y, 0.0, epsilon = 1e-14);
        // Envelope reconstruction vs the implicit equation of the ellipse.
        for i in 0..256 {
            let theta = 2.0 * PI * i as f64 / 256.0;
            let p = oval_point(&h, theta);
            let implicit = p.x * p.x / 4.0 + p.y * p.y - 1.0;
            assert_abs_diff_eq!(implicit, 0.0, epsilon = 1e-12);
        }
    }

    #[test]
    fn ellipse_jets_match_finite_differences() {
        let h = SupportFunction::ellipse(2.0, 1.0).unwrap();
        let d = 1e-5;
        for i in 0..32 {
            let t = 2.0 * PI * i as f64 / 32.0 + 0.013;
            let jet = h.eval(t);
            let hp = h.eval(t + d);
            let hm = h.eval(t - d);
            assert_abs_diff_eq!(jet.dh, (hp.h - hm.h) / (2.0 * d), epsilon = 1e-8);
            assert_abs_diff_eq!(jet.d2h, (hp.h - 2.0 * jet.h + hm.h) / (d * d), epsilon = 1e-5);
            assert_abs_diff_eq!(jet.d3h, (hp.d2h - hm.d2h) / (2.0 * d), epsilon = 1e-7);
            assert_abs_diff_eq!(jet.d4h, (hp.d3h - hm.d3h) / (2.0 * d), epsilon = 1e-6);
        }
    }

    #[test]
    fn vertices_of_third_harmonic_oval() {
        // h''' + h' = (27 - 3) * 0.05 * sin(3 theta) = 1.2 sin(3 theta):
        // six simple zeros at k*pi/3.
        let h = SupportFunction::fourier(1.0, vec![(3, 0.05, 0.0)]).unwrap();
        let verts = find_vertices(&h).unwrap();
        assert_eq!(verts.len(), 6);
        for (k, v) in verts.iter().enumerate() {
            assert_abs_diff_eq!(*v, k as f64 * PI / 3.0, epsilon = 1e-9);
        }
    }

    #[test]
    fn circle_vertices_degenerate() {
        let h = SupportFunction::circle(1.0).unwrap();
        assert!(matches!(find_vertices(&h), Err(PlanarError::DegenerateVertices)));
    }

    #[test]
    fn ellipse_has_axis_vertices() {
        let h = SupportFunction::ellipse(2.0, 1.0).unwrap();
        let verts = find_vertices(&h).unwrap();
        assert_eq!(verts.len(), 4);
        for (k, v) in verts.iter().enumerate() {
            assert_abs_diff_eq!(*v, k as f64 * PI / 2.0, epsilon = 1e-9);
        }
    }

    #[test]
    fn non_oval_rejected() {
        // Large third harmonic drives h''+h negative.
        assert!(matches!(
            SupportFunction::fourier(1.0, vec![(3, 0.2, 0.0)]),
            Err(PlanarError::NotAnOval { .. })
        ));
    }
}
