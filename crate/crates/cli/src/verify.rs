//! The `verify` command: every acceptance criterion as an executable check
//! with its tolerance pinned in code. One pass/fail line per criterion.

use crate::jsonfmt::Json;
use anyhow::Result;
use conjloc_core::conjlocus::{self, ConjugateLocus};
use conjloc_core::evolute::{self, EvoluteResult};
use conjloc_core::geodesic::{self, Genericity, IntegratorConfig};
use conjloc_core::planar::{self, ParametricCurve, SupportFunction};
use conjloc_core::surface::{ImplicitSurface, TangentFrame};
use conjloc_core::{Vec2, Vec3};
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use std::f64::consts::{PI, TAU};
use std::path::Path;
use std::time::Instant;

#[derive(Debug, Clone)]
pub struct CriterionResult {
    pub id: usize,
    pub name: &'static str,
    pub pass: bool,
    pub details: String,
    pub seconds: f64,
}

const NAMES: [&str; 11] = [
    "sphere oracle",
    "annulus bound",
    "four cusps and index one",
    "evolute index relations",
    "segment/arc total curvatures",
    "vertex distribution corollaries",
    "arc-length identity",
    "geodesic curvature formula",
    "count field consistency",
    "higher-locus smooth loops",
    "numerical robustness",
];

pub fn criterion_ids(suite: &str) -> Option<Vec<usize>> {
    match suite {
        "planar" => Some(vec![4, 5, 6]),
        "surface" => Some(vec![1, 2]),
        "conjugate" => Some(vec![3, 7, 8, 9, 10, 11]),
        "all" => Some((1..=11).collect()),
        _ => None,
    }
}

/// Run one criterion by id (1-based).
pub fn criterion(id: usize) -> CriterionResult {
    let start = Instant::now();
    let outcome = match id {
        1 => c1_sphere_oracle(),
        2 => c2_annulus_bound(),
        3 => c3_four_cusps_random_points(),
        4 => c4_evolute_relations(),
        5 => c5_lemma1_totals(),
        6 => c6_vertex_distribution(),
        7 => c7_arc_length_identity(),
        8 => c8_geodesic_curvature(),
        9 => c9_count_field(),
        10 => c10_higher_locus_loops(),
        11 => c11_robustness(),
        _ => Err(format!("unknown criterion {id}")),
    };
    let seconds = start.elapsed().as_secs_f64();
    match outcome {
        Ok(details) => CriterionResult { id, name: NAMES[id - 1], pass: true, details, seconds },
        Err(details) => CriterionResult { id, name: NAMES[id - 1], pass: false, details, seconds },
    }
}

/// Run a whole suite, printing one line per criterion; optionally write the
/// machine-readable report. Returns true when everything passed.
pub fn run_suite(suite: &str, out: Option<&Path>) -> Result<bool> {
    let ids = criterion_ids(suite)
        .ok_or_else(|| anyhow::anyhow!("unknown suite {suite:?}; use planar|surface|conjugate|all"))?;
    let results: Vec<CriterionResult> = ids.into_iter().map(criterion).collect();
    for r in &results {
        println!("{}", format_line(r));
    }
    if let Some(dir) = out {
        let json = report_json(suite, &results);
        std::fs::create_dir_all(dir)?;
        std::fs::write(dir.join(format!("verify_{suite}.json")), json.render())?;
    }
    if let Some(first_fail) = results.iter().find(|r| !r.pass) {
        eprintln!(
            "verification failed at criterion {} ({}): {}",
            first_fail.id, first_fail.name, first_fail.details
        );
    }
    Ok(results.iter().all(|r| r.pass))
}

pub fn format_line(r: &CriterionResult) -> String {
    if r.pass {
        format!(
            "criterion {:2} {:<32} PASS   ({:.1}s) {}",
            r.id, r.name, r.seconds, r.details
        )
    } else {
        format!(
            "criterion {:2} {:<32} FAIL   ({:.1}s) {}",
            r.id, r.name, r.seconds, r.details
        )
    }
}

pub fn report_json(suite: &str, results: &[CriterionResult]) -> Json {
    Json::obj()
        .field("suite", suite)
        .field(
            "criteria",
            Json::Arr(
                results
                    .iter()
                    .map(|r| {
                        Json::obj()
                            .field("id", r.id)
                            .field("name", r.name)
                            .field("pass", r.pass)
                            .field("details", r.details.clone())
                            .field("seconds", r.seconds)
                    })
                    .collect(),
            ),
        )
        .field("all_pass", results.iter().all(|r| r.pass))
}

// ---------------------------------------------------------------- fixtures

fn integrator() -> IntegratorConfig {
    IntegratorConfig::default()
}

fn ellipsoid() -> Result<ImplicitSurface, String> {
    ImplicitSurface::ellipsoid(1.0, 1.2, 1.5).map_err(|e| e.to_string())
}

fn loop_ellipsoid() -> Result<ImplicitSurface, String> {
    ImplicitSurface::ellipsoid(1.0, 2.0f64.sqrt(), 3.0f64.sqrt()).map_err(|e| e.to_string())
}

fn frame_at(s: &ImplicitSurface, dir: Vec3) -> Result<TangentFrame, String> {
    let p = s.radial_point(dir);
    let seed = if dir.x.abs() < 0.9 { Vec3::new(1.0, 0.0, 0.0) } else { Vec3::new(0.0, 1.0, 0.0) };
    s.tangent_frame(&p, &seed).map_err(|e| e.to_string())
}

fn reference_dir() -> Vec3 {
    Vec3::new(0.2, 0.4, 0.89)
}

fn reference_locus(j: usize, n_psi: usize) -> Result<ConjugateLocus, String> {
    let s = ellipsoid()?;
    let frame = frame_at(&s, reference_dir())?;
    match conjlocus::build_locus(&s, &frame, j, n_psi, &integrator()) {
        Ok(conjlocus::LocusResult::Locus(l)) => Ok(*l),
        Ok(conjlocus::LocusResult::Degenerate { .. }) => Err("unexpected degenerate locus".into()),
        Err(e) => Err(e.to_string()),
    }
}

fn third_harmonic() -> Result<SupportFunction, String> {
    SupportFunction::fourier(1.0, vec![(3, 0.05, 0.0)]).map_err(|e| e.to_string())
}

fn oval_fixtures() -> Result<Vec<(&'static str, SupportFunction)>, String> {
    Ok(vec![
        ("ellipse", SupportFunction::ellipse(2.0, 1.0).map_err(|e| e.to_string())?),
        ("h3", third_harmonic()?),
        ("h4", SupportFunction::fourier(1.0, vec![(4, 0.03, 0.0)]).map_err(|e| e.to_string())?),
        (
            "mixed",
            SupportFunction::fourier(1.0, vec![(3, 0.05, 0.0), (4, 0.0, 0.02)])
                .map_err(|e| e.to_string())?,
        ),
    ])
}

// ---------------------------------------------------------------- criteria

/// Unit sphere, any base point, j = 1: R = pi and xi_s(R) = -1 within 1e-6
/// at all 1024 samples.
fn c1_sphere_oracle() -> Result<String, String> {
    let s = ImplicitSurface::sphere(1.0).map_err(|e| e.to_string())?;
    let frame = frame_at(&s, Vec3::new(0.3, -0.5, 0.81))?;
    let dc = geodesic::distance_curve(&s, &frame, 1, 1024, &integrator()).map_err(|e| e.to_string())?;
    let mut max_r = 0.0f64;
    let mut max_xs = 0.0f64;
    for (&r, &xs) in dc.r.iter().zip(&dc.xi_s) {
        max_r = max_r.max((r - PI).abs());
        max_xs = max_xs.max((xs + 1.0).abs());
    }
    if max_r >= 1e-6 {
        return Err(format!("max |R - pi| = {max_r:.3e} >= 1e-6"));
    }
    if max_xs >= 1e-6 {
        return Err(format!("max |xi_s + 1| = {max_xs:.3e} >= 1e-6"));
    }
    Ok(format!("max|R-pi| = {max_r:.2e}, max|xi_s+1| = {max_xs:.2e}"))
}

/// Ellipsoid (1, 1.2, 1.5): pi/sqrt(Kmax) <= R <= pi/sqrt(Kmin) everywhere.
fn c2_annulus_bound() -> Result<String, String> {
    let s = ellipsoid()?;
    let frame = frame_at(&s, reference_dir())?;
    let dc = geodesic::distance_curve(&s, &frame, 1, 1024, &integrator()).map_err(|e| e.to_string())?;
    let (k_min, k_max) = s.curvature_extremes();
    let (lo, hi) = (PI / k_max.sqrt(), PI / k_min.sqrt());
    for (&psi, &r) in dc.psi.iter().zip(&dc.r) {
        if !(r >= lo - 1e-12 && r <= hi + 1e-12) {
            return Err(format!("R({psi:.4}) = {r:.8} outside [{lo:.8}, {hi:.8}]"));
        }
    }
    let (r_lo, r_hi) = dc
        .r
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), &r| (a.min(r), b.max(r)));
    Ok(format!("R in [{r_lo:.6}, {r_hi:.6}] inside [{lo:.6}, {hi:.6}]"))
}

/// Five pseudo-random generic base points: n = 4, i = 1, i = (n-2)/2.
fn c3_four_cusps_random_points() -> Result<String, String> {
    let s = ellipsoid()?;
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    let mut tried = 0;
    for k in 0..5 {
        let dir = loop {
            tried += 1;
            if tried > 50 {
                return Err("could not sample base points".into());
            }
            let v = Vec3::new(
                rng.random_range(-1.0..1.0),
                rng.random_range(-1.0..1.0),
                rng.random_range(-1.0..1.0),
            );
            if v.norm() > 0.1 {
                break v / v.norm();
            }
        };
        let frame = frame_at(&s, dir)?;
        let locus = match conjlocus::build_locus(&s, &frame, 1, 1024, &integrator()) {
            Ok(conjlocus::LocusResult::Locus(l)) => *l,
            Ok(_) => return Err(format!("point {k}: degenerate locus")),
            Err(e) => return Err(format!("point {k}: {e}")),
        };
        if locus.genericity != Genericity::Generic {
            return Err(format!("point {k}: non-generic distance curve"));
        }
        if locus.n != 4 || locus.i != 1 || 2 * locus.i != locus.n as i64 - 2 {
            return Err(format!(
                "point {k}: (n, i) = ({}, {}), expected (4, 1)",
                locus.n, locus.i
            ));
        }
    }
    Ok("5 base points, all (n, i) = (4, 1)".into())
}

/// Ellipse (4,1); h3 (6,2); h4 (8,3); limacon (2, I=-2, -1), exactly.
fn c4_evolute_relations() -> Result<String, String> {
    let check_oval = |name: &str, h: &SupportFunction, want: (usize, i64)| -> Result<(), String> {
        match evolute::evolute_of_oval(h, 4096).map_err(|e| e.to_string())? {
            EvoluteResult::Evolute(e) => {
                if (e.n, e.i) != want {
                    return Err(format!("{name}: (n, i) = ({}, {}), want {want:?}", e.n, e.i));
                }
                if !e.index_relation_ok() {
                    return Err(format!("{name}: index relation violated"));
                }
                Ok(())
            }
            EvoluteResult::Degenerate { .. } => Err(format!("{name}: degenerate")),
        }
    };
    check_oval("ellipse", &SupportFunction::ellipse(2.0, 1.0).map_err(|e| e.to_string())?, (4, 1))?;
    check_oval("h3", &third_harmonic()?, (6, 2))?;
    check_oval(
        "h4",
        &SupportFunction::fourier(1.0, vec![(4, 0.03, 0.0)]).map_err(|e| e.to_string())?,
        (8, 3),
    )?;

    let limacon = ParametricCurve::Limacon { a: 1.0, b: 2.0 };
    match evolute::evolute_of_curve(&limacon, 4096).map_err(|e| e.to_string())? {
        EvoluteResult::Evolute(e) => {
            if (e.n, e.source_index, e.i) != (2, -2, -1) {
                return Err(format!(
                    "limacon: (n, I, i) = ({}, {}, {}), want (2, -2, -1)",
                    e.n, e.source_index, e.i
                ));
            }
            if !e.index_relation_ok() {
                return Err("limacon: i != (n + 2I)/2".into());
            }
        }
        EvoluteResult::Degenerate { .. } => return Err("limacon: degenerate".into()),
    }
    Ok("ellipse (4,1); h3 (6,2); h4 (8,3); limacon (2,-2,-1)".into())
}

/// Third-harmonic oval: each vertex-to-vertex pair of total curvatures sums
/// below 1e-4; the gamma-side totals close to -2 pi within 1e-6.
fn c5_lemma1_totals() -> Result<String, String> {
    let h = third_harmonic()?;
    let verts = planar::find_vertices(&h).map_err(|e| e.to_string())?;
    let mut gamma_total = 0.0;
    let mut worst_pair = 0.0f64;
    for k in 0..verts.len() {
        let (g, b) = evolute::lemma1_check(&h, k).map_err(|e| e.to_string())?;
        worst_pair = worst_pair.max((g + b).abs());
        gamma_total += g;
    }
    if worst_pair >= 1e-4 {
        return Err(format!("worst pair sum {worst_pair:.3e} >= 1e-4"));
    }
    let closure = (gamma_total + TAU).abs();
    if closure >= 1e-6 {
        return Err(format!("gamma totals sum to {gamma_total:.9}, off by {closure:.3e}"));
    }
    Ok(format!("worst pair {worst_pair:.2e}, closure {closure:.2e}"))
}

/// For every shipped oval: all evolute arc totals below pi in magnitude, no
/// same-arc self-intersections, and vertices on both sides of each of 256
/// normal lines.
fn c6_vertex_distribution() -> Result<String, String> {
    for (name, h) in oval_fixtures()? {
        let e = match evolute::evolute_of_oval(&h, 4096).map_err(|e| e.to_string())? {
            EvoluteResult::Evolute(e) => e,
            EvoluteResult::Degenerate { .. } => return Err(format!("{name}: degenerate")),
        };
        for k in 0..e.n {
            let total = e.arc_total_curvature(k).map_err(|er| er.to_string())?;
            if total.abs() >= PI {
                return Err(format!("{name}: arc {k} total curvature {total:.6} >= pi"));
            }
        }
        let loops: Vec<_> = planar::self_intersections(&e.curve, true)
            .into_iter()
            .filter(|c| !c.ambiguous)
            .collect();
        if !loops.is_empty() {
            return Err(format!("{name}: {} smooth loops found", loops.len()));
        }
        let verts = planar::find_vertices(&h).map_err(|er| er.to_string())?;
        let vert_pts: Vec<Vec2> = verts.iter().map(|&v| planar::oval_point(&h, v)).collect();
        for i in 0..256 {
            let theta = TAU * i as f64 / 256.0;
            let q = planar::oval_point(&h, theta);
            let dir = Vec2::new(theta.cos(), theta.sin());
            let sides: Vec<f64> = vert_pts
                .iter()
                .map(|p| dir.perp(&(p - q)))
                .filter(|s| s.abs() > 1e-9)
                .collect();
            if !sides.iter().any(|&s| s > 0.0) || !sides.iter().any(|&s| s < 0.0) {
                return Err(format!("{name}: all vertices on one side of normal at {theta:.4}"));
            }
        }
    }
    Ok("4 fixtures: arc totals < pi, no smooth loops, normals split vertices".into())
}

/// Each locus arc's polyline length matches |Delta R| within 1e-3 relative;
/// the alternating signed length stays below 1e-3 of the mean arc length.
fn c7_arc_length_identity() -> Result<String, String> {
    let locus = reference_locus(1, 1024)?;
    let mut worst = 0.0f64;
    for m in 0..locus.n {
        let poly = locus.arc_lengths[m];
        let dr = locus.arc_length_from_r(m);
        let rel = (poly - dr).abs() / dr;
        worst = worst.max(rel);
        if rel >= 1e-3 {
            return Err(format!("arc {m}: relative length mismatch {rel:.3e}"));
        }
    }
    let alt = locus.alternating_length().abs();
    let bound = 1e-3 * locus.mean_arc_length();
    if alt >= bound {
        return Err(format!("alternating length {alt:.3e} >= {bound:.3e}"));
    }
    Ok(format!("worst length mismatch {worst:.2e}, alternating {alt:.2e}"))
}

/// Midpoint-transported turning of the geodesic tangent field along the
/// locus; the alternating orientation runs with increasing R.
fn discrete_kg(
    s: &ImplicitSurface,
    a: (&Vec3, &Vec3),
    b: (&Vec3, &Vec3),
) -> Result<f64, String> {
    let mid = s
        .project_to_surface(&(0.5 * (a.0 + b.0)))
        .map_err(|e| e.to_string())?;
    let nm = s.normal(&mid);
    let ta = a.1 - nm * a.1.dot(&nm);
    let tb = b.1 - nm * b.1.dot(&nm);
    Ok(ta.cross(&tb).dot(&nm).atan2(ta.dot(&tb)))
}

/// Eq-(6) geodesic curvature against the discrete turning-rate oracle,
/// within 2% at every sample farther than 0.05 rad from cusps; no |k_g|
/// below 1e-6.
fn c8_geodesic_curvature() -> Result<String, String> {
    let s = ellipsoid()?;
    let locus = reference_locus(1, 1024)?;
    let delta_cusp = 0.05;
    let n = locus.distance.psi.len();
    let ends: Vec<_> = locus.geodesics.iter().map(|g| *g.endpoint()).collect();
    let mut compared = 0;
    let mut worst = 0.0f64;
    for k in 0..n {
        let psi = locus.distance.psi[k];
        if locus.cusp_distance(psi) <= delta_cusp {
            continue;
        }
        let kg = conjlocus::geodesic_curvature(&locus, psi, delta_cusp).map_err(|e| e.to_string())?;
        if kg.abs() < 1e-6 {
            return Err(format!("|k_g| = {:.3e} < 1e-6 at psi = {psi:.4}", kg.abs()));
        }
        let (qm, q, qp) = (&ends[(k + n - 1) % n], &ends[k], &ends[(k + 1) % n]);
        let angle = discrete_kg(&s, (&qm.x, &qm.v), (&q.x, &q.v))?
            + discrete_kg(&s, (&q.x, &q.v), (&qp.x, &qp.v))?;
        let dsigma = (q.x - qm.x).norm() + (qp.x - q.x).norm();
        let r_prime = locus.distance.r[(k + 1) % n] - locus.distance.r[(k + n - 1) % n];
        let kg_disc = r_prime.signum() * angle / dsigma;
        let rel = (kg_disc - kg).abs() / kg.abs();
        worst = worst.max(rel);
        if rel >= 0.02 {
            return Err(format!(
                "psi = {psi:.4}: k_g = {kg:.6}, discrete = {kg_disc:.6} (rel {rel:.3})"
            ));
        }
        compared += 1;
    }
    Ok(format!("{compared} samples compared, worst relative gap {worst:.4}"))
}

/// Count field at M = 401: exactly levels {1, 2}, m = 1 on the outer
/// component, and the McIntyre-Cairns sum equals the rotation index.
fn c9_count_field() -> Result<String, String> {
    let s = ellipsoid()?;
    let locus = reference_locus(1, 1024)?;
    let (field, report) = conjlocus::count_field(&s, &locus, 401).map_err(|e| e.to_string())?;
    let levels = field.levels_present();
    if levels != vec![1, 2] {
        return Err(format!("levels present {levels:?}, want [1, 2]"));
    }
    if field.border_counts() != vec![1] {
        return Err(format!("outer component counts {:?}, want [1]", field.border_counts()));
    }
    if report.i_mc != 1 || report.i_mc != locus.i {
        return Err(format!("sum chi_m = {} vs i = {}", report.i_mc, locus.i));
    }
    if !report.lemma3_ok() {
        return Err("a level with a hole has no answering disc".into());
    }
    for (arc, dm) in &report.arc_delta_m {
        if dm.abs() != 1 {
            return Err(format!("arc {arc}: observed |delta m| = {}", dm.abs()));
        }
    }
    Ok(format!(
        "levels [1, 2], i_mc = 1 = i, {} ambiguous cells",
        field.ambiguous.len()
    ))
}

/// Third locus of the eccentric ellipsoid carries a smooth loop; the first
/// locus never does.
fn c10_higher_locus_loops() -> Result<String, String> {
    let s = loop_ellipsoid()?;
    let frame = frame_at(&s, Vec3::new(0.59, 0.38, 0.71))?;
    let build = |j: usize| -> Result<ConjugateLocus, String> {
        match conjlocus::build_locus(&s, &frame, j, 1024, &integrator()) {
            Ok(conjlocus::LocusResult::Locus(l)) => Ok(*l),
            Ok(_) => Err("degenerate locus".into()),
            Err(e) => Err(e.to_string()),
        }
    };
    let l3 = build(3)?;
    let loops3 = conjlocus::smooth_loop_scan(&l3).len();
    if loops3 == 0 {
        return Err("no smooth loop on the third conjugate locus".into());
    }
    let l1 = build(1)?;
    let loops1 = conjlocus::smooth_loop_scan(&l1).len();
    if loops1 != 0 {
        return Err(format!("{loops1} smooth loops on the first conjugate locus"));
    }
    Ok(format!("j=3 loops: {loops3}; j=1 loops: 0"))
}

/// Halving the integrator tolerance moves every R by less than 1e-8 and
/// leaves (n, i) untouched.
fn c11_robustness() -> Result<String, String> {
    let s = ellipsoid()?;
    let frame = frame_at(&s, reference_dir())?;
    let cfg = integrator();
    let half = cfg.halved();
    let dc0 = geodesic::distance_curve(&s, &frame, 1, 1024, &cfg).map_err(|e| e.to_string())?;
    let dc1 = geodesic::distance_curve(&s, &frame, 1, 1024, &half).map_err(|e| e.to_string())?;
    let mut worst = 0.0f64;
    for (&a, &b) in dc0.r.iter().zip(&dc1.r) {
        worst = worst.max((a - b).abs());
    }
    if worst >= 1e-8 {
        return Err(format!("R shifted by {worst:.3e} >= 1e-8 under tolerance halving"));
    }
    let build = |c: &IntegratorConfig| -> Result<(usize, i64), String> {
        match conjlocus::build_locus(&s, &frame, 1, 1024, c) {
            Ok(conjlocus::LocusResult::Locus(l)) => Ok((l.n, l.i)),
            Ok(_) => Err("degenerate".into()),
            Err(e) => Err(e.to_string()),
        }
    };
    let (n0, i0) = build(&cfg)?;
    let (n1, i1) = build(&half)?;
    if (n0, i0) != (n1, i1) {
        return Err(format!("(n, i) changed: ({n0}, {i0}) vs ({n1}, {i1})"));
    }
    Ok(format!("max R shift {worst:.2e}; (n, i) = ({n0}, {i0}) stable"))
}
