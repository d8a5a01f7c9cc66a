//! Assembly and analysis of the conjugate locus `C_p^j`.
//!
//! The locus is the image of the distance curve under the exponential map:
//! `beta(psi) = X(R(psi), psi)`, with a cusp wherever `R` is stationary. It
//! is projected to the supporting plane opposite the base point and fed
//! through the planar turning machinery; the projection traverses `psi`
//! downward, which is the standard orientation (the reference ellipsoid
//! locus then has rotation index `+1`).

mod count;

pub use count::{count_at, count_field, CountField, LevelReport, RegionReport};

use crate::geodesic::{
    self, DistanceCurve, GeodesicError, GeodesicPath, Genericity, IntegratorConfig,
};
use crate::planar::{self, ArcSample, Crossing, Cusp, CuspedCurve, PlanarError, TurningReport};
use crate::surface::{ImplicitSurface, SupportingPlane, SurfaceError, TangentFrame};
use crate::{Vec2, Vec3};
use rayon::prelude::*;
use std::f64::consts::TAU;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum ConjLocusError {
    #[error(transparent)]
    Geodesic(#[from] GeodesicError),
    #[error(transparent)]
    Surface(#[from] SurfaceError),
    #[error(transparent)]
    Planar(#[from] PlanarError),
    #[error("psi = {psi:.6} is within {distance:.4} rad of a cusp; k_g diverges there")]
    CuspProximity { psi: f64, distance: f64 },
    #[error("count grid too coarse: {0}")]
    GridTooCoarse(String),
    #[error("ambiguous geodesic crossing: {0}")]
    AmbiguousCount(String),
    #[error("operation needs a non-degenerate locus")]
    DegenerateLocus,
}

/// Cusp of the locus (stationary point of `R`).
#[derive(Debug, Clone, Copy)]
pub struct LocusCusp {
    pub psi: f64,
    pub r: f64,
    pub point: Vec3,
    /// Second derivative estimate of `R` at the stationary point.
    pub r2: f64,
    pub ordinary: bool,
}

/// One sample of a smooth locus arc.
#[derive(Debug, Clone, Copy)]
pub struct LocusSample {
    pub psi: f64,
    pub x: Vec3,
    /// Unit tangent `T(R(psi), psi)` of the radial geodesic at its endpoint.
    pub t: Vec3,
    pub r: f64,
    pub xi_s: f64,
}

/// Smooth arc between consecutive cusps, samples in increasing `psi`.
#[derive(Debug, Clone)]
pub struct LocusArc {
    pub samples: Vec<LocusSample>,
}

/// The assembled conjugate locus of a generic point.
#[derive(Debug, Clone)]
pub struct ConjugateLocus {
    pub j: usize,
    /// Cusps ascending in `psi`; arc `m` runs from `cusps[m]` to
    /// `cusps[(m+1) % n]`.
    pub cusps: Vec<LocusCusp>,
    pub arcs: Vec<LocusArc>,
    /// Ambient polyline length of each arc.
    pub arc_lengths: Vec<f64>,
    /// Projection to the supporting plane, standard orientation.
    pub projected: CuspedCurve,
    pub i: i64,
    pub n: usize,
    pub report: TurningReport,
    pub distance: DistanceCurve,
    pub plane: SupportingPlane,
    /// Trimmed radial geodesics, one per grid angle (used for counting).
    pub geodesics: Vec<GeodesicPath>,
    pub genericity: Genericity,
}

/// A sphere-like base point yields a single conjugate point, not a curve.
#[derive(Debug, Clone)]
pub enum LocusResult {
    Degenerate { point: Vec3, r: f64 },
    Locus(Box<ConjugateLocus>),
}

impl LocusResult {
    pub fn unwrap_locus(self) -> ConjugateLocus {
        match self {
            LocusResult::Locus(l) => *l,
            LocusResult::Degenerate { .. } => panic!("unexpected degenerate locus"),
        }
    }
}

impl ConjugateLocus {
    /// Theorem relation `i = (n-2)/2` for the first locus of a generic point.
    pub fn index_relation_ok(&self) -> bool {
        2 * self.i == self.n as i64 - 2
    }

    /// Alternating signed length `sum_k (-1)^k len(arc_k)`; zero in exact
    /// arithmetic because `R` is the arc-length parameter.
    pub fn alternating_length(&self) -> f64 {
        self.arc_lengths
            .iter()
            .enumerate()
            .map(|(k, len)| if k % 2 == 0 { *len } else { -*len })
            .sum()
    }

    pub fn mean_arc_length(&self) -> f64 {
        self.arc_lengths.iter().sum::<f64>() / self.arc_lengths.len().max(1) as f64
    }

    /// `|R(psi*_{k+1}) - R(psi*_k)|` for each arc: what the polyline lengths
    /// must reproduce, since `R` is the arc-length parameter.
    pub fn arc_length_from_r(&self, arc: usize) -> f64 {
        let a = &self.cusps[arc];
        let b = &self.cusps[(arc + 1) % self.n];
        (b.r - a.r).abs()
    }

    /// Smallest cyclic distance from `psi` to a cusp parameter.
    pub fn cusp_distance(&self, psi: f64) -> f64 {
        self.cusps
            .iter()
            .map(|c| {
                let d = (psi - c.psi).rem_euclid(TAU);
                d.min(TAU - d)
            })
            .fold(f64::INFINITY, f64::min)
    }
}

fn locus_sample(
    surface: &ImplicitSurface,
    frame: &TangentFrame,
    psi: f64,
    j: usize,
    cfg: &IntegratorConfig,
) -> Result<LocusSample, GeodesicError> {
    let path = geodesic::shoot_to_conjugate(surface, frame, psi, j, cfg)?;
    let end = *path.endpoint();
    Ok(LocusSample { psi, x: end.x, t: end.v, r: end.s, xi_s: end.xi_s })
}

/// Build the `j`-th conjugate locus on an `n_psi` grid.
pub fn build_locus(
    surface: &ImplicitSurface,
    frame: &TangentFrame,
    j: usize,
    n_psi: usize,
    cfg: &IntegratorConfig,
) -> Result<LocusResult, ConjLocusError> {
    let dc = geodesic::distance_curve(surface, frame, j, n_psi, cfg)?;
    if dc.genericity == Genericity::Degenerate {
        let path = geodesic::shoot_to_conjugate(surface, frame, 0.0, j, cfg)?;
        let end = path.endpoint();
        return Ok(LocusResult::Degenerate { point: end.x, r: end.s });
    }

    let paths: Vec<GeodesicPath> = dc
        .psi
        .par_iter()
        .map(|&psi| geodesic::shoot_to_conjugate(surface, frame, psi, j, cfg))
        .collect::<Result<_, _>>()?;

    let cusps: Vec<LocusCusp> = dc
        .stationary
        .iter()
        .map(|st| {
            let smp = locus_sample(surface, frame, st.psi, j, cfg)?;
            Ok(LocusCusp { psi: st.psi, r: st.r, point: smp.x, r2: st.r2, ordinary: st.a1 })
        })
        .collect::<Result<_, GeodesicError>>()?;
    let n = cusps.len();

    // Arcs in increasing psi, cusp endpoints included.
    let mut arcs: Vec<Vec<LocusSample>> = Vec::with_capacity(n);
    for m in 0..n {
        let lo = cusps[m];
        let hi = cusps[(m + 1) % n];
        let hi_psi = if m + 1 == n { hi.psi + TAU } else { hi.psi };
        let mut samples = Vec::new();
        samples.push(LocusSample { psi: lo.psi, x: lo.point, t: tangent_at(surface, frame, lo.psi, j, cfg)?, r: lo.r, xi_s: 0.0 });
        for (k, &psi) in dc.psi.iter().enumerate() {
            for cand in [psi, psi + TAU] {
                if cand > lo.psi + 1e-12 && cand < hi_psi - 1e-12 {
                    let end = paths[k].endpoint();
                    samples.push(LocusSample {
                        psi: cand,
                        x: end.x,
                        t: end.v,
                        r: end.s,
                        xi_s: end.xi_s,
                    });
                }
            }
        }
        samples.push(LocusSample { psi: hi_psi, x: hi.point, t: tangent_at(surface, frame, hi.psi, j, cfg)?, r: hi.r, xi_s: 0.0 });
        samples.sort_by(|a, b| a.psi.partial_cmp(&b.psi).unwrap());
        arcs.push(samples);
    }

    // Fill in xi_s at the cusp endpoints (xi_s is continuous there).
    for arc in arcs.iter_mut() {
        let len = arc.len();
        if len >= 3 {
            arc[0].xi_s = arc[1].xi_s;
            arc[len - 1].xi_s = arc[len - 2].xi_s;
        }
    }

    let plane = SupportingPlane::for_frame(surface, frame)?;

    // Refine near cusps until the projected turning steps obey the
    // fineness contract.
    for _round in 0..10 {
        let mut inserted = false;
        for (m, arc) in arcs.iter_mut().enumerate() {
            let sign = arc_direction_sign(&cusps, m);
            let mut k = 0;
            while k + 1 < arc.len() {
                let t0 = projected_tangent(&plane, &arc[k], sign)?;
                let t1 = projected_tangent(&plane, &arc[k + 1], sign)?;
                let step = t0.perp(&t1).atan2(t0.dot(&t1)).abs();
                if step >= 0.45 * std::f64::consts::PI {
                    let mid_psi = 0.5 * (arc[k].psi + arc[k + 1].psi);
                    let smp = locus_sample(surface, frame, mid_psi.rem_euclid(TAU), j, cfg)?;
                    arc.insert(k + 1, LocusSample { psi: mid_psi, ..smp });
                    inserted = true;
                }
                k += 1;
            }
        }
        if !inserted {
            break;
        }
    }

    let arc_lengths: Vec<f64> = arcs
        .iter()
        .map(|arc| arc.windows(2).map(|w| (w[1].x - w[0].x).norm()).sum())
        .collect();

    // Projected cusped curve in standard orientation: arcs reversed and
    // traversed with decreasing psi.
    let mut proj_arcs = Vec::with_capacity(n);
    let mut proj_cusps = Vec::with_capacity(n);
    for jj in 0..n {
        let m = n - 1 - jj;
        let sign = arc_direction_sign(&cusps, m);
        let arc = &arcs[m];
        let mut proj = Vec::with_capacity(arc.len());
        for smp in arc.iter().rev() {
            let uv = plane.project(&smp.x)?;
            let tangent = projected_tangent(&plane, smp, sign)?;
            proj.push(ArcSample { param: smp.psi, point: uv, tangent });
        }
        proj_arcs.push(proj);
        let c = &cusps[m];
        proj_cusps.push(Cusp { param: c.psi, point: plane.project(&c.point)?, ordinary: c.ordinary });
    }
    let projected = CuspedCurve { arcs: proj_arcs, cusps: proj_cusps, closed: true };
    let report = planar::turning_number(&projected)?;
    let genericity = dc.genericity.clone();

    Ok(LocusResult::Locus(Box::new(ConjugateLocus {
        j,
        cusps,
        arcs: arcs.into_iter().map(|samples| LocusArc { samples }).collect(),
        arc_lengths,
        projected,
        i: report.rotation_index,
        n,
        report,
        distance: dc,
        plane,
        geodesics: paths,
        genericity,
    })))
}

fn tangent_at(
    surface: &ImplicitSurface,
    frame: &TangentFrame,
    psi: f64,
    j: usize,
    cfg: &IntegratorConfig,
) -> Result<Vec3, GeodesicError> {
    Ok(locus_sample(surface, frame, psi, j, cfg)?.t)
}

/// Sign of `R'` on arc `m` (from its bounding cusp values).
fn arc_direction_sign(cusps: &[LocusCusp], m: usize) -> f64 {
    let n = cusps.len();
    if cusps[(m + 1) % n].r > cusps[m].r {
        1.0
    } else {
        -1.0
    }
}

/// Unit tangent of the projected locus at a sample, for the decreasing-psi
/// traversal: `-sign(R') dPi(T) / |dPi(T)|`.
fn projected_tangent(
    plane: &SupportingPlane,
    smp: &LocusSample,
    sign_rprime: f64,
) -> Result<Vec2, ConjLocusError> {
    let w = plane.project_tangent(&smp.x, &smp.t)?;
    let u = -sign_rprime * w / w.norm();
    Ok(u)
}

/// Geodesic curvature of the locus at a grid angle:
/// `k_g = xi_s(R(psi), psi) / R'(psi)`, with `R'` from the local quadratic
/// fit. Undefined within `delta_cusp` of a cusp.
pub fn geodesic_curvature(
    locus: &ConjugateLocus,
    psi: f64,
    delta_cusp: f64,
) -> Result<f64, ConjLocusError> {
    let d = locus.cusp_distance(psi);
    if d < delta_cusp {
        return Err(ConjLocusError::CuspProximity { psi, distance: d });
    }
    let n = locus.distance.psi.len();
    let dpsi = TAU / n as f64;
    let k = ((psi.rem_euclid(TAU) / dpsi).round() as usize) % n;
    let r_prev = locus.distance.r[(k + n - 1) % n];
    let r_next = locus.distance.r[(k + 1) % n];
    let r_prime = (r_next - r_prev) / (2.0 * dpsi);
    Ok(locus.distance.xi_s[k] / r_prime)
}

/// Same-arc self-intersections of the projected locus (smooth loops).
pub fn smooth_loop_scan(locus: &ConjugateLocus) -> Vec<Crossing> {
    planar::self_intersections(&locus.projected, true)
        .into_iter()
        .filter(|c| !c.ambiguous)
        .collect()
}

/// True when no self-intersection of the projected locus is a neck
/// (a crossing splitting the curve into non-overlapping loops).
pub fn neck_check(locus: &ConjugateLocus) -> Result<bool, ConjLocusError> {
    Ok(!planar::has_neck(&locus.projected)?)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sphere_locus_degenerates_to_antipode() {
        let s = ImplicitSurface::sphere(1.0).unwrap();
        let p = Vec3::new(0.0, 0.0, 1.0);
        let frame = s.tangent_frame(&p, &Vec3::new(1.0, 0.0, 0.0)).unwrap();
        let cfg = IntegratorConfig::default();
        match build_locus(&s, &frame, 1, 256, &cfg).unwrap() {
            LocusResult::Degenerate { point, r } => {
                assert!((point - Vec3::new(0.0, 0.0, -1.0)).norm() < 1e-7);
                assert!((r - std::f64::consts::PI).abs() < 1e-8);
            }
            _ => panic!("expected degenerate locus on the sphere"),
        }
    }
}
