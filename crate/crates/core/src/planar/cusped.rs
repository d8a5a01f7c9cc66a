//! Piecewise-smooth closed curves and their rotation index.
//!
//! A closed curve with `n` ordinary cusps splits into `n` smooth arcs. Its
//! rotation index is the total turning of the unit tangent divided by
//! `2*pi`, where the tangent rotates by `+pi` across each cusp (the curves
//! produced here are always assembled in the orientation that makes this
//! convention hold). Within an arc the turning is the sum of lifted angle
//! steps between consecutive tangent samples; the sampling contract demands
//! every such step stay below `pi/2` so the lift is unambiguous.

use crate::planar::PlanarError;
use crate::Vec2;
use std::f64::consts::{PI, TAU};

/// One sample of a smooth arc: parameter value, position, unit tangent.
#[derive(Debug, Clone, Copy)]
pub struct ArcSample {
    pub param: f64,
    pub point: Vec2,
    pub tangent: Vec2,
}

/// A cusp record between two arcs.
#[derive(Debug, Clone, Copy)]
pub struct Cusp {
    pub param: f64,
    pub point: Vec2,
    /// True when the cusp is ordinary (semicubical, `A_1`).
    pub ordinary: bool,
}

/// Sampled piecewise-smooth curve. `cusps[j]` separates `arcs[j]` from
/// `arcs[(j+1) % arcs.len()]`; a closed smooth curve is a single arc with no
/// cusps.
#[derive(Debug, Clone)]
pub struct CuspedCurve {
    pub arcs: Vec<Vec<ArcSample>>,
    pub cusps: Vec<Cusp>,
    pub closed: bool,
}

/// Turning data of a closed cusped curve.
#[derive(Debug, Clone)]
pub struct TurningReport {
    pub rotation_index: i64,
    /// Lifted tangent turning over each smooth arc, radians.
    pub per_arc: Vec<f64>,
    pub cusp_count: usize,
    /// `sum(per_arc) + n*pi` plus the (tiny) junction corrections.
    pub total: f64,
    /// `|total/2pi - rotation_index|`, in turns.
    pub residual: f64,
}

fn wrap_angle(mut d: f64) -> f64 {
    d %= TAU;
    if d > PI {
        d -= TAU;
    } else if d <= -PI {
        d += TAU;
    }
    d
}

fn angle(v: Vec2) -> f64 {
    v.y.atan2(v.x)
}

impl CuspedCurve {
    /// Wrap a closed polyline (no cusps) into a one-arc curve with
    /// central-difference tangents.
    pub fn smooth_closed(points: Vec<(f64, Vec2)>) -> Result<Self, PlanarError> {
        let n = points.len();
        if n < 3 {
            return Err(PlanarError::MalformedCurve(
                "closed polyline needs at least 3 points".into(),
            ));
        }
        let arc = (0..n)
            .map(|i| {
                let prev = points[(i + n - 1) % n].1;
                let next = points[(i + 1) % n].1;
                let t = next - prev;
                let norm = t.norm();
                if norm == 0.0 {
                    return Err(PlanarError::MalformedCurve(format!(
                        "repeated point at index {i}"
                    )));
                }
                Ok(ArcSample {
                    param: points[i].0,
                    point: points[i].1,
                    tangent: t / norm,
                })
            })
            .collect::<Result<Vec<_>, _>>()?;
        Ok(CuspedCurve { arcs: vec![arc], cusps: Vec::new(), closed: true })
    }

    /// Total number of tangent samples.
    pub fn sample_count(&self) -> usize {
        self.arcs.iter().map(Vec::len).sum()
    }

    fn check_structure(&self) -> Result<(), PlanarError> {
        if self.arcs.is_empty() {
            return Err(PlanarError::MalformedCurve("curve has no arcs".into()));
        }
        if self.closed && !self.cusps.is_empty() && self.cusps.len() != self.arcs.len() {
            return Err(PlanarError::MalformedCurve(format!(
                "closed curve needs equal arc/cusp counts, got {} arcs, {} cusps",
                self.arcs.len(),
                self.cusps.len()
            )));
        }
        for (j, arc) in self.arcs.iter().enumerate() {
            if arc.len() < 2 {
                return Err(PlanarError::MalformedCurve(format!(
                    "arc {j} has fewer than 2 samples"
                )));
            }
        }
        Ok(())
    }
}

/// Rotation index of a closed cusped curve from its tangent samples.
///
/// Per-arc turning is the sum of lifted exterior angles; each cusp then
/// contributes `+pi` (plus the lifted correction between the one-sided
/// tangents, which vanishes as sampling reaches the cusp). The grand total
/// must land on an integer multiple of `2*pi` within 5% of a turn.
pub fn turning_number(c: &CuspedCurve) -> Result<TurningReport, PlanarError> {
    c.check_structure()?;
    if !c.closed {
        return Err(PlanarError::MalformedCurve(
            "turning number requires a closed curve".into(),
        ));
    }

    let mut per_arc = Vec::with_capacity(c.arcs.len());
    for (j, arc) in c.arcs.iter().enumerate() {
        let mut turn = 0.0;
        for w in arc.windows(2) {
            let step = wrap_angle(angle(w[1].tangent) - angle(w[0].tangent));
            if step.abs() >= PI / 2.0 {
                return Err(PlanarError::FinenessViolation { arc: j, step: step.abs() });
            }
            turn += step;
        }
        // A smooth closed curve: close the single arc on itself.
        if c.cusps.is_empty() {
            let step = wrap_angle(
                angle(arc.first().unwrap().tangent) - angle(arc.last().unwrap().tangent),
            );
            if step.abs() >= PI / 2.0 {
                return Err(PlanarError::FinenessViolation { arc: j, step: step.abs() });
            }
            turn += step;
        }
        per_arc.push(turn);
    }

    let n = c.cusps.len();
    let mut total: f64 = per_arc.iter().sum();
    for j in 0..n {
        let prev_end = angle(c.arcs[j].last().unwrap().tangent);
        let next_start = angle(c.arcs[(j + 1) % c.arcs.len()].first().unwrap().tangent);
        total += PI + wrap_angle(next_start - prev_end - PI);
    }

    let turns = total / TAU;
    let rotation_index = turns.round() as i64;
    let residual = (turns - rotation_index as f64).abs();
    if residual >= 0.05 {
        return Err(PlanarError::TurningResidual { total, residual });
    }
    Ok(TurningReport { rotation_index, per_arc, cusp_count: n, total, residual })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn circle_polyline(n: usize, ccw: bool) -> CuspedCurve {
        let pts = (0..n)
            .map(|i| {
                let t = TAU * i as f64 / n as f64;
                let t = if ccw { t } else { -t };
                (t, Vec2::new(t.cos(), t.sin()))
            })
            .collect();
        CuspedCurve::smooth_closed(pts).unwrap()
    }

    #[test]
    fn circle_turning_number_matches_orientation() {
        let ccw = turning_number(&circle_polyline(64, true)).unwrap();
        assert_eq!(ccw.rotation_index, 1);
        assert_eq!(ccw.cusp_count, 0);
        assert!(ccw.residual < 1e-9);

        let cw = turning_number(&circle_polyline(64, false)).unwrap();
        assert_eq!(cw.rotation_index, -1);
    }

    #[test]
    fn too_coarse_sampling_is_refused() {
        // A square: every step is exactly pi/2.
        let err = turning_number(&circle_polyline(4, true));
        assert!(matches!(err, Err(PlanarError::FinenessViolation { .. })));
    }

    #[test]
    fn refinement_leaves_index_unchanged() {
        for n in [16, 32, 64, 128, 256] {
            assert_eq!(turning_number(&circle_polyline(n, true)).unwrap().rotation_index, 1);
        }
    }

    /// Astroid `(cos^3 t, sin^3 t)` traversed with increasing `t`: the
    /// standard orientation of the 4-cusp evolute, so `i = 1`, `n = 4`.
    #[test]
    fn astroid_has_four_cusps_and_index_one() {
        let cusp_ts = [0.0, PI / 2.0, PI, 1.5 * PI, TAU];
        let mut arcs = Vec::new();
        let mut cusps = Vec::new();
        for k in 0..4 {
            let (t0, t1) = (cusp_ts[k], cusp_ts[k + 1]);
            let m = 48;
            let arc = (0..=m)
                .map(|i| {
                    let t = t0 + (t1 - t0) * i as f64 / m as f64;
                    let point = Vec2::new(t.cos().powi(3), t.sin().powi(3));
                    // velocity = 3 sin t cos t (-cos t, sin t); its sign is
                    // constant on the open arc, take it from the midpoint.
                    let tm = 0.5 * (t0 + t1);
                    let sign = if tm.sin() * tm.cos() >= 0.0 { 1.0 } else { -1.0 };
                    let tangent = sign * Vec2::new(-t.cos(), t.sin());
                    ArcSample { param: t, point, tangent: tangent.normalize() }
                })
                .collect::<Vec<_>>();
            arcs.push(arc);
            let tc = cusp_ts[k + 1];
            cusps.push(Cusp {
                param: tc,
                point: Vec2::new(tc.cos().powi(3), tc.sin().powi(3)),
                ordinary: true,
            });
        }
        let curve = CuspedCurve { arcs, cusps, closed: true };
        let report = turning_number(&curve).unwrap();
        assert_eq!(report.cusp_count, 4);
        assert_eq!(report.rotation_index, 1);
        assert!(report.residual < 1e-6, "residual {}", report.residual);
        for turn in &report.per_arc {
            assert!((turn + PI / 2.0).abs() < 1e-6, "arc turning {turn}");
        }
    }
}
