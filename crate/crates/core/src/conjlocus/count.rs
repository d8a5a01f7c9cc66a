//! Counting geodesic segments through surface points, and the count field
//! over the projection plane with its region decomposition.
//!
//! A point `o` off the locus is hit by finitely many radial geodesic
//! segments `[p, conjugate point]`. Crossings are detected as sign changes
//! of the signed transversal offset of `o` from the stored geodesic
//! polylines between adjacent launch angles, and certified only when the
//! offsets are small enough to be the same passage. Grazing contacts are
//! flagged, never counted.

use super::{ConjLocusError, ConjugateLocus};
use crate::geodesic::{self, GeodesicPath, IntegratorConfig};
use crate::surface::{ImplicitSurface, TangentFrame};
use crate::{Vec2, Vec3};
use rayon::prelude::*;
use std::collections::{HashMap, HashSet};
use std::f64::consts::TAU;

/// Signed transversal offset of `o` from a stretch of one geodesic polyline.
#[derive(Debug, Clone, Copy)]
struct Offset {
    /// `(T x w) . n` at the nearest point; sign = side of the geodesic.
    signed: f64,
    /// Plain nearest distance.
    dist: f64,
    /// Arc length at the nearest point.
    s: f64,
    /// Nearest point clamped to the start (the base point) of the path.
    at_start: bool,
    /// Nearest point clamped to the conjugate endpoint.
    at_end: bool,
}

fn offset_in_window(
    surface: &ImplicitSurface,
    path: &GeodesicPath,
    o: &Vec3,
    lo: usize,
    hi: usize,
) -> Offset {
    let samples = &path.samples;
    let hi = hi.min(samples.len() - 1);
    let mut best_d2 = f64::INFINITY;
    let mut best = (Vec3::zeros(), Vec3::zeros(), 0.0, false, false);
    for i in lo..hi {
        let a = samples[i].x;
        let b = samples[i + 1].x;
        let ab = b - a;
        let len2 = ab.norm_squared();
        let mut t = if len2 > 0.0 { (o - a).dot(&ab) / len2 } else { 0.0 };
        t = t.clamp(0.0, 1.0);
        let q = a + t * ab;
        let d2 = (o - q).norm_squared();
        if d2 < best_d2 {
            best_d2 = d2;
            let s = samples[i].s + t * (samples[i + 1].s - samples[i].s);
            let at_start = i == 0 && lo == 0 && t == 0.0;
            let at_end = i + 1 == samples.len() - 1 && t == 1.0;
            best = (q, ab / ab.norm(), s, at_start, at_end);
        }
    }
    let (q, tdir, s, at_start, at_end) = best;
    let w = o - q;
    let n = surface.normal(&q);
    Offset { signed: tdir.cross(&w).dot(&n), dist: best_d2.sqrt(), s, at_start, at_end }
}

fn offset_full(surface: &ImplicitSurface, path: &GeodesicPath, o: &Vec3) -> Offset {
    offset_in_window(surface, path, o, 0, path.samples.len() - 1)
}

/// Upper bound on the ambient spacing of adjacent-grid geodesics:
/// `max |xi| * dpsi`.
fn near_threshold(locus: &ConjugateLocus) -> f64 {
    let xi_max = locus
        .geodesics
        .iter()
        .flat_map(|p| p.samples.iter().map(|q| q.xi.abs()))
        .fold(0.0f64, f64::max);
    let dpsi = TAU / locus.geodesics.len() as f64;
    2.5 * xi_max.max(0.1) * dpsi
}

/// Chord-sag scale of the stored polylines (largest sample gap squared).
fn polyline_sag(locus: &ConjugateLocus) -> f64 {
    let gap = locus
        .geodesics
        .iter()
        .flat_map(|p| p.samples.windows(2).map(|w| w[1].s - w[0].s))
        .fold(0.0f64, f64::max);
    gap * gap
}

struct PairScan {
    crossings: usize,
    grazes: usize,
}

/// Count certified sign-change crossings in a cyclic sequence of offsets.
/// Close passes with no sign change in the neighbourhood count as grazes.
fn scan_pairs(infos: &[Offset], d_near: f64, graze_tol: f64) -> PairScan {
    let n = infos.len();
    let crossing = |k: usize| -> bool {
        let a = &infos[k];
        let b = &infos[(k + 1) % n];
        !(a.at_start || b.at_start || a.at_end || b.at_end)
            && a.signed * b.signed < 0.0
            && a.dist.min(b.dist) < d_near
    };
    let crossings = (0..n).filter(|&k| crossing(k)).count();
    let mut grazes = 0;
    for k in 0..n {
        let info = &infos[k];
        if info.at_start || info.at_end || info.dist >= graze_tol {
            continue;
        }
        if !crossing(k) && !crossing((k + n - 1) % n) {
            grazes += 1;
        }
    }
    PairScan { crossings, grazes }
}

/// Number of geodesic segments through the surface point `o` (spec: the
/// `count` `m(o)`), by full scan plus bisection refinement of each crossing.
pub fn count_at(
    surface: &ImplicitSurface,
    frame: &TangentFrame,
    locus: &ConjugateLocus,
    o: &Vec3,
    cfg: &IntegratorConfig,
) -> Result<usize, ConjLocusError> {
    let d_near = near_threshold(locus);
    // Stored polylines deviate from the true geodesics by the chord sag
    // ~ gap^2 * curvature / 8; thresholds must respect that.
    let graze_tol = 0.25 * polyline_sag(locus);
    let infos: Vec<Offset> = locus
        .geodesics
        .iter()
        .map(|p| offset_full(surface, p, o))
        .collect();

    let n = infos.len();
    let crossing_pairs: Vec<usize> = (0..n)
        .filter(|&k| {
            let a = &infos[k];
            let b = &infos[(k + 1) % n];
            !(a.at_start || b.at_start || a.at_end || b.at_end)
                && a.signed * b.signed < 0.0
                && a.dist.min(b.dist) < d_near
        })
        .collect();

    // A close pass with no sign change nearby is an unresolved graze.
    for k in 0..n {
        let info = &infos[k];
        if info.at_start || info.at_end || info.dist >= graze_tol {
            continue;
        }
        let near_crossing = crossing_pairs
            .iter()
            .any(|&c| c == k || (c + 1) % n == k || c == (k + 1) % n);
        if !near_crossing {
            return Err(ConjLocusError::AmbiguousCount(format!(
                "tangential graze near psi index {k}"
            )));
        }
    }

    let mut m = 0usize;
    for &k in &crossing_pairs {
        // Refine by bisection in psi, re-shooting the geodesic.
        let psi_a = locus.geodesics[k].psi;
        let mut lo = psi_a;
        let mut hi = psi_a + TAU / n as f64;
        let mut f_lo = infos[k].signed;
        for _ in 0..30 {
            let mid = 0.5 * (lo + hi);
            let path =
                geodesic::shoot_to_conjugate(surface, frame, mid.rem_euclid(TAU), locus.j, cfg)?;
            let info = offset_full(surface, &path, o);
            if f_lo * info.signed <= 0.0 {
                hi = mid;
            } else {
                lo = mid;
                f_lo = info.signed;
            }
        }
        // Certify the passage on a finely sampled re-shot path.
        let psi_star = (0.5 * (lo + hi)).rem_euclid(TAU);
        let fine = IntegratorConfig { max_step: 0.004, ..*cfg };
        let path = geodesic::shoot_to_conjugate(surface, frame, psi_star, locus.j, &fine)?;
        let info = offset_full(surface, &path, o);
        if info.at_end || info.at_start {
            continue;
        }
        if info.dist > 50.0 * fine.max_step * fine.max_step {
            return Err(ConjLocusError::AmbiguousCount(format!(
                "crossing near psi = {psi_star:.6} refined to distance {:.3e}, not a clean passage",
                info.dist
            )));
        }
        m += 1;
    }
    Ok(m)
}

/// Grid of counts over the projection plane.
#[derive(Debug, Clone)]
pub struct CountField {
    pub m_grid: usize,
    /// Plane coordinates of cell `(0, 0)`.
    pub origin: Vec2,
    pub cell: f64,
    /// Row-major `m_grid x m_grid`; `None` marks locus-adjacent cells.
    pub counts: Vec<Option<u32>>,
    /// Cells with an unresolved near-tangential contact.
    pub ambiguous: Vec<(usize, usize)>,
}

impl CountField {
    pub fn at(&self, row: usize, col: usize) -> Option<u32> {
        self.counts[row * self.m_grid + col]
    }

    pub fn plane_point(&self, row: usize, col: usize) -> Vec2 {
        self.origin + Vec2::new(col as f64 * self.cell, row as f64 * self.cell)
    }

    /// Distinct counts present on clean cells, ascending.
    pub fn levels_present(&self) -> Vec<u32> {
        let mut v: Vec<u32> = self.counts.iter().flatten().copied().collect();
        v.sort_unstable();
        v.dedup();
        v
    }

    /// Counts of the clean cells on the grid border (the component of the
    /// base point, which projects to infinity).
    pub fn border_counts(&self) -> Vec<u32> {
        let mm = self.m_grid;
        let mut v = Vec::new();
        for k in 0..mm {
            for (r, c) in [(0, k), (mm - 1, k), (k, 0), (k, mm - 1)] {
                if let Some(m) = self.at(r, c) {
                    v.push(m);
                }
            }
        }
        v.sort_unstable();
        v.dedup();
        v
    }
}

/// Euler data of one superlevel set `S_m`.
#[derive(Debug, Clone, Copy)]
pub struct LevelReport {
    pub m: u32,
    pub components: usize,
    pub holes: usize,
    pub chi: i64,
    /// Some component of this level has no hole.
    pub has_disc: bool,
}

/// Region decomposition summary with the McIntyre-Cairns sum.
#[derive(Debug, Clone)]
pub struct RegionReport {
    pub levels: Vec<LevelReport>,
    /// `sum_{m >= 2} chi_m`.
    pub i_mc: i64,
    /// Observed count jumps across regular arcs: `(arc, delta)` per probe.
    pub arc_delta_m: Vec<(usize, i64)>,
}

impl RegionReport {
    /// Every level with a hole must be answered by a disc at some higher
    /// level.
    pub fn lemma3_ok(&self) -> bool {
        self.levels.iter().all(|lv| {
            lv.holes == 0 || self.levels.iter().any(|hv| hv.m > lv.m && hv.has_disc)
        })
    }
}

struct SegmentHash {
    cell: f64,
    origin: Vec2,
    bins: HashMap<(i64, i64), Vec<(u32, u32)>>,
}

impl SegmentHash {
    fn new(origin: Vec2, cell: f64) -> Self {
        SegmentHash { cell, origin, bins: HashMap::new() }
    }

    fn key(&self, p: Vec2) -> (i64, i64) {
        (
            ((p.x - self.origin.x) / self.cell).floor() as i64,
            ((p.y - self.origin.y) / self.cell).floor() as i64,
        )
    }

    fn insert_segment(&mut self, id: (u32, u32), a: Vec2, b: Vec2) {
        let (x0, y0) = self.key(Vec2::new(a.x.min(b.x), a.y.min(b.y)));
        let (x1, y1) = self.key(Vec2::new(a.x.max(b.x), a.y.max(b.y)));
        for kx in x0..=x1 {
            for ky in y0..=y1 {
                self.bins.entry((kx, ky)).or_default().push(id);
            }
        }
    }

    fn query(&self, p: Vec2, radius_bins: i64, out: &mut Vec<(u32, u32)>) {
        out.clear();
        let (kx, ky) = self.key(p);
        for dx in -radius_bins..=radius_bins {
            for dy in -radius_bins..=radius_bins {
                if let Some(v) = self.bins.get(&(kx + dx, ky + dy)) {
                    out.extend_from_slice(v);
                }
            }
        }
    }
}

fn point_segment_dist(p: Vec2, a: Vec2, b: Vec2) -> f64 {
    let ab = b - a;
    let len2 = ab.norm_squared();
    let t = if len2 > 0.0 { ((p - a).dot(&ab) / len2).clamp(0.0, 1.0) } else { 0.0 };
    (p - (a + t * ab)).norm()
}

/// Evaluate the count on an `m_grid x m_grid` plane grid and decompose the
/// regions. Cells within 1.5 cell diagonals of the projected locus are
/// excluded from regions.
pub fn count_field(
    surface: &ImplicitSurface,
    locus: &ConjugateLocus,
    m_grid: usize,
) -> Result<(CountField, RegionReport), ConjLocusError> {
    assert!(m_grid >= 21, "count grid too small to be meaningful");
    let plane = &locus.plane;

    // Grid geometry: square box around the projected locus, padded.
    let mut lo = Vec2::new(f64::INFINITY, f64::INFINITY);
    let mut hi = Vec2::new(f64::NEG_INFINITY, f64::NEG_INFINITY);
    for arc in &locus.projected.arcs {
        for s in arc {
            lo.x = lo.x.min(s.point.x);
            lo.y = lo.y.min(s.point.y);
            hi.x = hi.x.max(s.point.x);
            hi.y = hi.y.max(s.point.y);
        }
    }
    let center = 0.5 * (lo + hi);
    let half = 0.5 * (hi - lo).amax() * 1.7;
    let origin = center - Vec2::new(half, half);
    let cell = 2.0 * half / (m_grid - 1) as f64;

    // Spatial hash of the projected locus polyline (for the exclusion strip).
    let mut locus_hash = SegmentHash::new(origin, cell);
    let mut locus_segments: Vec<(Vec2, Vec2)> = Vec::new();
    for arc in &locus.projected.arcs {
        for w in arc.windows(2) {
            let id = locus_segments.len() as u32;
            locus_segments.push((w[0].point, w[1].point));
            locus_hash.insert_segment((id, 0), w[0].point, w[1].point);
        }
    }

    // Spatial hash of projected geodesic polylines.
    let in_region = |p: Vec2| -> bool {
        p.x >= origin.x - 2.0 * cell
            && p.y >= origin.y - 2.0 * cell
            && p.x <= origin.x + 2.0 * half + 2.0 * cell
            && p.y <= origin.y + 2.0 * half + 2.0 * cell
    };
    let mut geo_hash = SegmentHash::new(origin, cell);
    let projected_paths: Vec<Vec<Option<Vec2>>> = locus
        .geodesics
        .par_iter()
        .map(|path| {
            path.samples
                .iter()
                .map(|smp| if smp.s == 0.0 { None } else { plane.project(&smp.x).ok() })
                .collect()
        })
        .collect();
    for (k, pts) in projected_paths.iter().enumerate() {
        for i in 0..pts.len().saturating_sub(1) {
            if let (Some(a), Some(b)) = (pts[i], pts[i + 1]) {
                if in_region(a) || in_region(b) {
                    geo_hash.insert_segment((k as u32, i as u32), a, b);
                }
            }
        }
    }

    let d_near = near_threshold(locus);
    let graze_tol = 0.25 * polyline_sag(locus);
    let exclusion = 1.5 * cell * 2.0f64.sqrt();
    let query_bins = ((d_near * 3.0 / cell).ceil() as i64).max(3);
    let n_psi = locus.geodesics.len();

    // Window half-width in arc length for local offset evaluation.
    let s_window = 12.0 * d_near + 0.3;

    let cells: Vec<(Option<u32>, bool)> = (0..m_grid * m_grid)
        .into_par_iter()
        .map(|idx| -> Result<(Option<u32>, bool), ConjLocusError> {
            let row = idx / m_grid;
            let col = idx % m_grid;
            let uv = origin + Vec2::new(col as f64 * cell, row as f64 * cell);

            // Exclusion strip along the projected locus.
            let mut near_ids = Vec::new();
            locus_hash.query(uv, 3, &mut near_ids);
            for (id, _) in &near_ids {
                let (a, b) = locus_segments[*id as usize];
                if point_segment_dist(uv, a, b) < exclusion {
                    return Ok((None, false));
                }
            }

            let o3 = plane.preimage(surface, uv)?;

            // Candidate geodesics from the plane hash.
            let mut cand = Vec::new();
            geo_hash.query(uv, query_bins, &mut cand);
            let mut per_path: HashMap<u32, Vec<u32>> = HashMap::new();
            for (k, seg) in cand {
                per_path.entry(k).or_default().push(seg);
            }

            let mut crossings: HashSet<(u32, i64)> = HashSet::new();
            let mut ambiguous = false;
            for (k, mut segs) in per_path {
                segs.sort_unstable();
                // Split candidate segments into clusters along the path.
                let mut clusters: Vec<(u32, u32)> = Vec::new();
                for &s in &segs {
                    match clusters.last_mut() {
                        Some((_, hi_i)) if s <= *hi_i + 40 => *hi_i = s,
                        _ => clusters.push((s, s)),
                    }
                }
                for (c_lo, c_hi) in clusters {
                    let path = &locus.geodesics[k as usize];
                    let lo_i = (c_lo as usize).saturating_sub(2);
                    let hi_i = (c_hi as usize + 3).min(path.samples.len() - 1);
                    let center_off = offset_in_window(surface, path, &o3, lo_i, hi_i);
                    if center_off.dist > d_near * 1.5 {
                        continue;
                    }
                    let s_star = center_off.s;
                    // Walk psi neighbours, evaluating local offsets around
                    // s_star, until clear of the passage.
                    let mut seq: Vec<(i64, Offset)> = vec![(k as i64, center_off)];
                    for dir in [-1i64, 1i64] {
                        let mut step = dir;
                        loop {
                            let jdx = (k as i64 + step).rem_euclid(n_psi as i64) as usize;
                            let npath = &locus.geodesics[jdx];
                            let (wlo, whi) = s_range(npath, s_star - s_window, s_star + s_window);
                            let off = offset_in_window(surface, npath, &o3, wlo, whi);
                            seq.push((k as i64 + step, off));
                            if off.dist > 2.0 * d_near || step.abs() >= 4 {
                                break;
                            }
                            step += dir;
                        }
                    }
                    seq.sort_by_key(|(j, _)| *j);
                    let pair_crossing = |w: &[(i64, Offset)]| -> bool {
                        let (ja, a) = (w[0].0, &w[0].1);
                        let (jb, b) = (w[1].0, &w[1].1);
                        jb == ja + 1
                            && !(a.at_start || b.at_start || a.at_end || b.at_end)
                            && a.signed * b.signed < 0.0
                            && a.dist.min(b.dist) < d_near
                    };
                    for w in seq.windows(2) {
                        if pair_crossing(w) {
                            let (ja, a) = (w[0].0, &w[0].1);
                            let s_mid = 0.5 * (a.s + w[1].1.s);
                            let key =
                                (ja.rem_euclid(n_psi as i64) as u32, (s_mid / 0.7).round() as i64);
                            crossings.insert(key);
                        }
                    }
                    for (pos, (_, info)) in seq.iter().enumerate() {
                        // Boundary entries of a truncated walk cannot be
                        // judged; a closer-centred cluster will see them.
                        if pos == 0 || pos + 1 == seq.len() {
                            continue;
                        }
                        if info.at_start || info.at_end || info.dist >= graze_tol {
                            continue;
                        }
                        let near_cross = pair_crossing(&seq[pos - 1..=pos])
                            || pair_crossing(&seq[pos..=pos + 1]);
                        if !near_cross {
                            ambiguous = true;
                        }
                    }
                }
            }

            let mut m = crossings.len();
            if m == 0 {
                // The theory says m >= 1 everywhere; fall back to a full scan.
                let infos: Vec<Offset> = locus
                    .geodesics
                    .iter()
                    .map(|p| offset_full(surface, p, &o3))
                    .collect();
                let scan = scan_pairs(&infos, d_near, graze_tol);
                m = scan.crossings;
                ambiguous |= scan.grazes > 0;
                if m == 0 {
                    return Err(ConjLocusError::AmbiguousCount(format!(
                        "cell ({row}, {col}): no geodesic segment found through the point"
                    )));
                }
            }
            Ok((Some(m as u32), ambiguous))
        })
        .collect::<Result<_, _>>()?;

    let mut counts = Vec::with_capacity(cells.len());
    let mut ambiguous = Vec::new();
    for (idx, (m, amb)) in cells.into_iter().enumerate() {
        if amb {
            ambiguous.push((idx / m_grid, idx % m_grid));
        }
        counts.push(m);
    }
    let field = CountField { m_grid, origin, cell, counts, ambiguous };
    let report = analyze_regions(&field, locus)?;
    Ok((field, report))
}

fn s_range(path: &GeodesicPath, s_lo: f64, s_hi: f64) -> (usize, usize) {
    let samples = &path.samples;
    let lo = samples.partition_point(|q| q.s < s_lo);
    let hi = samples.partition_point(|q| q.s < s_hi);
    (lo.saturating_sub(1), (hi + 1).min(samples.len() - 1))
}

fn analyze_regions(
    field: &CountField,
    locus: &ConjugateLocus,
) -> Result<RegionReport, ConjLocusError> {
    let mm = field.m_grid;
    let idx = |r: usize, c: usize| r * mm + c;

    // Connected regions of equal count (4-connectivity).
    let mut region_id = vec![usize::MAX; mm * mm];
    let mut regions: Vec<(u32, Vec<usize>)> = Vec::new();
    for start in 0..mm * mm {
        if region_id[start] != usize::MAX || field.counts[start].is_none() {
            continue;
        }
        let value = field.counts[start].unwrap();
        let rid = regions.len();
        let mut cells = Vec::new();
        let mut stack = vec![start];
        region_id[start] = rid;
        while let Some(cur) = stack.pop() {
            cells.push(cur);
            let (r, c) = (cur / mm, cur % mm);
            let mut push = |nr: usize, nc: usize, stack: &mut Vec<usize>| {
                let ni = idx(nr, nc);
                if region_id[ni] == usize::MAX && field.counts[ni] == Some(value) {
                    region_id[ni] = rid;
                    stack.push(ni);
                }
            };
            if r > 0 {
                push(r - 1, c, &mut stack);
            }
            if r + 1 < mm {
                push(r + 1, c, &mut stack);
            }
            if c > 0 {
                push(r, c - 1, &mut stack);
            }
            if c + 1 < mm {
                push(r, c + 1, &mut stack);
            }
        }
        regions.push((value, cells));
    }

    // Thinness check: every region must contain an interior cell.
    for (rid, (value, cells)) in regions.iter().enumerate() {
        let interior = cells.iter().any(|&cur| {
            let (r, c) = (cur / mm, cur % mm);
            r > 0
                && r + 1 < mm
                && c > 0
                && c + 1 < mm
                && [idx(r - 1, c), idx(r + 1, c), idx(r, c - 1), idx(r, c + 1)]
                    .iter()
                    .all(|&ni| region_id[ni] == rid)
        });
        if !interior {
            return Err(ConjLocusError::GridTooCoarse(format!(
                "region with count {value} is thinner than 2 cells; increase the grid"
            )));
        }
    }

    let max_m = field.counts.iter().flatten().copied().max().unwrap_or(0);
    let mut levels = Vec::new();
    for m in 1..=max_m {
        levels.push(level_report(field, m)?);
    }
    let i_mc = levels.iter().filter(|l| l.m >= 2).map(|l| l.chi).sum();

    // Empirical count jumps across regular arcs: probe both sides of the
    // projected locus at a few stations per arc.
    let mut arc_delta_m = Vec::new();
    let offs = field.cell * 4.0;
    for (ai, arc) in locus.projected.arcs.iter().enumerate() {
        for frac in [0.25, 0.5, 0.75] {
            let k = ((arc.len() - 1) as f64 * frac) as usize;
            let s = &arc[k];
            let normal = Vec2::new(-s.tangent.y, s.tangent.x);
            let lookup = |p: Vec2| -> Option<u32> {
                let c = ((p.x - field.origin.x) / field.cell).round() as i64;
                let r = ((p.y - field.origin.y) / field.cell).round() as i64;
                if r < 0 || c < 0 || r as usize >= mm || c as usize >= mm {
                    return None;
                }
                field.at(r as usize, c as usize)
            };
            if let (Some(mp), Some(mn)) =
                (lookup(s.point + offs * normal), lookup(s.point - offs * normal))
            {
                arc_delta_m.push((ai, mp as i64 - mn as i64));
            }
        }
    }

    Ok(RegionReport { levels, i_mc, arc_delta_m })
}

/// Component/hole census of the superlevel set `S_m` (counts >= m, closure
/// taken by absorbing excluded cells adjacent to the set).
fn level_report(field: &CountField, m: u32) -> Result<LevelReport, ConjLocusError> {
    let mm = field.m_grid;
    let idx = |r: usize, c: usize| r * mm + c;
    let mut mask = vec![false; mm * mm];
    for r in 0..mm {
        for c in 0..mm {
            match field.counts[idx(r, c)] {
                Some(v) => mask[idx(r, c)] = v >= m,
                None => {
                    // Closure: an excluded strip cell belongs to S_m when a
                    // clean cell with count >= m sits within reach. Radius 3
                    // spans the whole exclusion strip (1.5 cell diagonals on
                    // either side of the curve).
                    let mut hit = false;
                    for dr in -3i64..=3 {
                        for dc in -3i64..=3 {
                            let (nr, nc) = (r as i64 + dr, c as i64 + dc);
                            if nr < 0 || nc < 0 || nr as usize >= mm || nc as usize >= mm {
                                continue;
                            }
                            if let Some(v) = field.counts[idx(nr as usize, nc as usize)] {
                                hit |= v >= m;
                            }
                        }
                    }
                    mask[idx(r, c)] = hit;
                }
            }
        }
    }

    // Components of the mask (8-connectivity).
    let mut comp = vec![usize::MAX; mm * mm];
    let mut n_comp = 0usize;
    for start in 0..mm * mm {
        if !mask[start] || comp[start] != usize::MAX {
            continue;
        }
        let cid = n_comp;
        n_comp += 1;
        let mut stack = vec![start];
        comp[start] = cid;
        while let Some(cur) = stack.pop() {
            let (r, c) = (cur / mm, cur % mm);
            for dr in -1i64..=1 {
                for dc in -1i64..=1 {
                    if dr == 0 && dc == 0 {
                        continue;
                    }
                    let (nr, nc) = (r as i64 + dr, c as i64 + dc);
                    if nr < 0 || nc < 0 || nr as usize >= mm || nc as usize >= mm {
                        continue;
                    }
                    let ni = idx(nr as usize, nc as usize);
                    if mask[ni] && comp[ni] == usize::MAX {
                        comp[ni] = cid;
                        stack.push(ni);
                    }
                }
            }
        }
    }

    // Holes: complement components (4-connectivity) not touching the border;
    // each is assigned to the mask component that surrounds it.
    let mut comp_holes = vec![0usize; n_comp];
    let mut visited = vec![false; mm * mm];
    let mut n_holes = 0usize;
    for start in 0..mm * mm {
        if mask[start] || visited[start] {
            continue;
        }
        let mut cellsv = Vec::new();
        let mut stack = vec![start];
        visited[start] = true;
        let mut touches_border = false;
        while let Some(cur) = stack.pop() {
            cellsv.push(cur);
            let (r, c) = (cur / mm, cur % mm);
            if r == 0 || c == 0 || r == mm - 1 || c == mm - 1 {
                touches_border = true;
            }
            let mut push = |nr: usize, nc: usize, stack: &mut Vec<usize>| {
                let ni = idx(nr, nc);
                if !mask[ni] && !visited[ni] {
                    visited[ni] = true;
                    stack.push(ni);
                }
            };
            if r > 0 {
                push(r - 1, c, &mut stack);
            }
            if r + 1 < mm {
                push(r + 1, c, &mut stack);
            }
            if c > 0 {
                push(r, c - 1, &mut stack);
            }
            if c + 1 < mm {
                push(r, c + 1, &mut stack);
            }
        }
        if !touches_border {
            n_holes += 1;
            // attribute the hole to an adjacent mask component
            'outer: for &cur in &cellsv {
                let (r, c) = (cur / mm, cur % mm);
                for dr in -1i64..=1 {
                    for dc in -1i64..=1 {
                        let (nr, nc) = (r as i64 + dr, c as i64 + dc);
                        if nr < 0 || nc < 0 || nr as usize >= mm || nc as usize >= mm {
                            continue;
                        }
                        let ni = idx(nr as usize, nc as usize);
                        if mask[ni] {
                            comp_holes[comp[ni]] += 1;
                            break 'outer;
                        }
                    }
                }
            }
        }
    }

    let has_disc = (0..n_comp).any(|cid| comp_holes[cid] == 0) && n_comp > 0;
    Ok(LevelReport {
        m,
        components: n_comp,
        holes: n_holes,
        chi: n_comp as i64 - n_holes as i64,
        has_disc,
    })
}
