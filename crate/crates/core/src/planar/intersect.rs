//! Self-intersections of sampled cusped curves, winding numbers, and the
//! neck test (a crossing whose two loops do not overlap).

use crate::planar::{CuspedCurve, PlanarError};
use crate::Vec2;
use std::collections::{HashMap, HashSet};
use std::f64::consts::{PI, TAU};

/// Sine of the smallest crossing angle still counted as transversal.
const ANGLE_TOL: f64 = 1e-3;

/// A transversal crossing between two (possibly equal) arcs.
#[derive(Debug, Clone, Copy)]
pub struct Crossing {
    pub arc_a: usize,
    pub seg_a: usize,
    pub param_a: f64,
    pub arc_b: usize,
    pub seg_b: usize,
    pub param_b: f64,
    pub point: Vec2,
    /// Near-tangential: below the angular threshold, reported but not to be
    /// counted blindly.
    pub ambiguous: bool,
}

#[derive(Clone, Copy)]
struct Segment {
    arc: usize,
    idx: usize,
    p0: Vec2,
    p1: Vec2,
    t0: f64,
    t1: f64,
}

/// All transversal polyline self-intersections.
///
/// With `same_arc_only` the search is restricted to pairs within a single
/// smooth arc (a hit is a smooth loop). Pairs of segments adjacent along the
/// traversal (within an arc or across a cusp) are skipped.
pub fn self_intersections(c: &CuspedCurve, same_arc_only: bool) -> Vec<Crossing> {
    let mut segments = Vec::new();
    for (ai, arc) in c.arcs.iter().enumerate() {
        for i in 0..arc.len().saturating_sub(1) {
            segments.push(Segment {
                arc: ai,
                idx: i,
                p0: arc[i].point,
                p1: arc[i + 1].point,
                t0: arc[i].param,
                t1: arc[i + 1].param,
            });
        }
    }
    // A smooth closed curve needs its wrap-around segment; cusped curves
    // already meet at shared cusp samples.
    let single_closed = c.closed && c.cusps.is_empty() && c.arcs.len() == 1;
    if single_closed {
        let arc = &c.arcs[0];
        let (first, last) = (arc[0], arc[arc.len() - 1]);
        segments.push(Segment {
            arc: 0,
            idx: arc.len() - 1,
            p0: last.point,
            p1: first.point,
            t0: last.param,
            t1: first.param,
        });
    }
    if segments.len() < 2 {
        return Vec::new();
    }
    let arc_seg_count = |arc: usize| -> usize {
        c.arcs[arc].len() - 1 + usize::from(single_closed)
    };

    // Uniform-grid binning over the bounding box.
    let (mut lo, mut hi) = (segments[0].p0, segments[0].p0);
    for s in &segments {
        for p in [s.p0, s.p1] {
            lo.x = lo.x.min(p.x);
            lo.y = lo.y.min(p.y);
            hi.x = hi.x.max(p.x);
            hi.y = hi.y.max(p.y);
        }
    }
    let extent = (hi - lo).amax().max(1e-12);
    let cell = extent / 256.0;
    let mut bins: HashMap<(i64, i64), Vec<usize>> = HashMap::new();
    let key = |p: Vec2| (((p.x - lo.x) / cell) as i64, ((p.y - lo.y) / cell) as i64);
    for (si, s) in segments.iter().enumerate() {
        let (kx0, ky0) = key(Vec2::new(s.p0.x.min(s.p1.x), s.p0.y.min(s.p1.y)));
        let (kx1, ky1) = key(Vec2::new(s.p0.x.max(s.p1.x), s.p0.y.max(s.p1.y)));
        for kx in kx0..=kx1 {
            for ky in ky0..=ky1 {
                bins.entry((kx, ky)).or_default().push(si);
            }
        }
    }

    let n_arcs = c.arcs.len();
    let chain_adjacent = |a: &Segment, b: &Segment| -> bool {
        if a.arc == b.arc {
            let d = a.idx.abs_diff(b.idx);
            return d <= 1 || d == arc_seg_count(a.arc) - 1;
        }
        // Segments meeting at a cusp: last of arc j and first of arc j+1.
        let (first, second) = if (a.arc + 1) % n_arcs == b.arc { (a, b) } else if (b.arc + 1) % n_arcs == a.arc { (b, a) } else { return false };
        first.idx == c.arcs[first.arc].len() - 2 && second.idx == 0
    };

    let mut seen: HashSet<(usize, usize)> = HashSet::new();
    let mut out = Vec::new();
    for ids in bins.values() {
        for (pos, &ia) in ids.iter().enumerate() {
            for &ib in &ids[pos + 1..] {
                let (ia, ib) = if ia < ib { (ia, ib) } else { (ib, ia) };
                let (a, b) = (&segments[ia], &segments[ib]);
                if same_arc_only && a.arc != b.arc {
                    continue;
                }
                if chain_adjacent(a, b) || !seen.insert((ia, ib)) {
                    continue;
                }
                if let Some(x) = segment_crossing(a, b) {
                    out.push(x);
                }
            }
        }
    }
    out.sort_by(|x, y| {
        (x.arc_a, x.param_a)
            .partial_cmp(&(y.arc_a, y.param_a))
            .unwrap()
    });
    out
}

fn segment_crossing(a: &Segment, b: &Segment) -> Option<Crossing> {
    let d1 = a.p1 - a.p0;
    let d2 = b.p1 - b.p0;
    let denom = d1.perp(&d2);
    let sin_angle = denom.abs() / (d1.norm() * d2.norm()).max(1e-300);
    if denom.abs() < 1e-300 {
        return None;
    }
    let w = b.p0 - a.p0;
    let s = w.perp(&d2) / denom;
    let u = w.perp(&d1) / denom;
    let inside = |x: f64| (-1e-12..1.0 - 1e-12).contains(&x);
    if !inside(s) || !inside(u) {
        return None;
    }
    let point = a.p0 + d1 * s;
    Some(Crossing {
        arc_a: a.arc,
        seg_a: a.idx,
        param_a: a.t0 + s * (a.t1 - a.t0),
        arc_b: b.arc,
        seg_b: b.idx,
        param_b: b.t0 + u * (b.t1 - b.t0),
        point,
        ambiguous: sin_angle < ANGLE_TOL,
    })
}

/// Winding number of a closed polyline around `p`, by summed lifted angles.
pub fn winding_number(points: &[Vec2], p: Vec2) -> i64 {
    let mut total = 0.0;
    let n = points.len();
    for i in 0..n {
        let a = points[i] - p;
        let b = points[(i + 1) % n] - p;
        let mut step = (b.y.atan2(b.x) - a.y.atan2(a.x)) % TAU;
        if step > PI {
            step -= TAU;
        } else if step <= -PI {
            step += TAU;
        }
        total += step;
    }
    (total / TAU).round() as i64
}

/// True when some transversal self-intersection splits the curve into two
/// loops with non-overlapping interiors (a `neck`).
pub fn has_neck(c: &CuspedCurve) -> Result<bool, PlanarError> {
    if !c.closed {
        return Err(PlanarError::MalformedCurve("neck test requires a closed curve".into()));
    }
    // Flatten the cyclic chain of samples.
    let chain: Vec<Vec2> = c.arcs.iter().flat_map(|a| a.iter().map(|s| s.point)).collect();
    if chain.len() < 4 {
        return Ok(false);
    }
    // Map (arc, segment) to a global chain coordinate.
    let mut arc_offsets = Vec::with_capacity(c.arcs.len());
    let mut acc = 0usize;
    for a in &c.arcs {
        arc_offsets.push(acc);
        acc += a.len();
    }

    for x in self_intersections(c, false) {
        if x.ambiguous {
            continue;
        }
        let ga = (arc_offsets[x.arc_a] + x.seg_a).min(chain.len() - 1);
        let gb = (arc_offsets[x.arc_b] + x.seg_b).min(chain.len() - 1);
        let (ga, gb) = if ga < gb { (ga, gb) } else { (gb, ga) };
        // Loop A: chain[ga+1 ..= gb], loop B: the complement, both closed
        // through the crossing point.
        let mut loop_a: Vec<Vec2> = vec![x.point];
        loop_a.extend(chain[ga + 1..=gb].iter().copied());
        let mut loop_b: Vec<Vec2> = vec![x.point];
        loop_b.extend(chain[gb + 1..].iter().copied());
        loop_b.extend(chain[..=ga].iter().copied());
        if !loops_overlap(&loop_a, &loop_b, x.point) {
            return Ok(true);
        }
    }
    Ok(false)
}

fn loops_overlap(a: &[Vec2], b: &[Vec2], crossing: Vec2) -> bool {
    let scale = a
        .iter()
        .chain(b.iter())
        .map(|p| (p - crossing).norm())
        .fold(0.0f64, f64::max);
    let near = 0.05 * scale;
    let probe = |loop_pts: &[Vec2], other: &[Vec2]| -> bool {
        let stride = (other.len() / 64).max(1);
        other
            .iter()
            .step_by(stride)
            .filter(|p| (*p - crossing).norm() > near)
            .any(|p| winding_number(loop_pts, *p) != 0)
    };
    probe(a, b) || probe(b, a)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn figure_eight(n: usize) -> CuspedCurve {
        let pts = (0..n)
            .map(|i| {
                let t = TAU * (i as f64 + 0.5) / n as f64;
                (t, Vec2::new((2.0 * t).sin(), t.sin()))
            })
            .collect();
        CuspedCurve::smooth_closed(pts).unwrap()
    }

    #[test]
    fn figure_eight_has_one_crossing_and_a_neck() {
        let c = figure_eight(256);
        let xs = self_intersections(&c, false);
        assert_eq!(xs.len(), 1);
        assert!(xs[0].point.norm() < 1e-3);
        assert!(!xs[0].ambiguous);
        assert!(has_neck(&c).unwrap());
    }

    #[test]
    fn circle_has_no_crossings() {
        let pts = (0..128)
            .map(|i| {
                let t = TAU * i as f64 / 128.0;
                (t, Vec2::new(t.cos(), t.sin()))
            })
            .collect();
        let c = CuspedCurve::smooth_closed(pts).unwrap();
        assert!(self_intersections(&c, false).is_empty());
        assert!(!has_neck(&c).unwrap());
    }

    #[test]
    fn inner_loop_limacon_is_not_a_neck() {
        // r = 1 + 2 cos t passes through the origin twice; the inner loop
        // lies inside the outer one, so the crossing is not a neck.
        let pts = (0..512)
            .map(|i| {
                let t = TAU * (i as f64 + 0.37) / 512.0;
                let r = 1.0 + 2.0 * t.cos();
                (t, Vec2::new(r * t.cos(), r * t.sin()))
            })
            .collect();
        let c = CuspedCurve::smooth_closed(pts).unwrap();
        let xs = self_intersections(&c, false);
        assert_eq!(xs.len(), 1);
        assert!(!has_neck(&c).unwrap());
    }

    #[test]
    fn winding_numbers_of_circle() {
        let pts: Vec<Vec2> = (0..128)
            .map(|i| {
                let t = TAU * i as f64 / 128.0;
                Vec2::new(t.cos(), t.sin())
            })
            .collect();
        assert_eq!(winding_number(&pts, Vec2::new(0.0, 0.0)), 1);
        assert_eq!(winding_number(&pts, Vec2::new(0.4, -0.2)), 1);
        assert_eq!(winding_number(&pts, Vec2::new(1.5, 0.0)), 0);
    }
}
