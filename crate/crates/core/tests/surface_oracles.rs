//! Independent oracles for the surface layer: Gauss curvature against a
//! finite-difference second fundamental form, and projection injectivity.

use conjloc_core::surface::{ImplicitSurface, SupportingPlane};
use conjloc_core::Vec3;
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn random_dir(rng: &mut ChaCha8Rng) -> Vec3 {
    loop {
        let v = Vec3::new(
            rng.random_range(-1.0..1.0),
            rng.random_range(-1.0..1.0),
            rng.random_range(-1.0..1.0),
        );
        let n = v.norm();
        if n > 1e-3 && n <= 1.0 {
            return v / n;
        }
    }
}

/// Height of the surface over the tangent plane at `x` along the normal,
/// solved by 1-D Newton on F.
fn graph_height(s: &ImplicitSurface, x: &Vec3, e1: &Vec3, e2: &Vec3, n: &Vec3, u: f64, v: f64) -> f64 {
    let base = x + u * e1 + v * e2;
    let mut w = 0.0;
    for _ in 0..40 {
        let p = base + w * n;
        let f = s.f(&p);
        let df = s.grad(&p).dot(n);
        let step = f / df;
        w -= step;
        if step.abs() < 1e-15 {
            break;
        }
    }
    w
}

#[test]
fn adjugate_curvature_matches_second_fundamental_form() {
    let s = ImplicitSurface::ellipsoid(1.0, 1.2, 1.5).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let h = 3e-4 * s.length_scale();
    for _ in 0..1000 {
        let x = s.radial_point(random_dir(&mut rng));
        let frame = s.tangent_frame(&x, &random_dir(&mut rng));
        let frame = match frame {
            Ok(f) => f,
            Err(_) => continue,
        };
        let (e1, e2, n) = (frame.e1, frame.e2, frame.n_out);
        let w = |u: f64, v: f64| graph_height(&s, &x, &e1, &e2, &n, u, v);
        let wuu = (w(h, 0.0) + w(-h, 0.0)) / (h * h);
        let wvv = (w(0.0, h) + w(0.0, -h)) / (h * h);
        let wuv = (w(h, h) - w(h, -h) - w(-h, h) + w(-h, -h)) / (4.0 * h * h);
        let k_fd = wuu * wvv - wuv * wuv;
        let k = s.gauss_curvature(&x).unwrap();
        let rel = (k_fd - k).abs() / k;
        assert!(rel < 1e-6, "K = {k}, finite-difference {k_fd} (rel {rel:.2e})");
    }
}

#[test]
fn projection_is_injective_on_random_pairs() {
    let s = ImplicitSurface::ellipsoid(1.0, 1.2, 1.5).unwrap();
    let p = s.radial_point(Vec3::new(0.3, -0.2, 0.93));
    let frame = s.tangent_frame(&p, &Vec3::new(1.0, 0.0, 0.0)).unwrap();
    let plane = SupportingPlane::for_frame(&s, &frame).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let mut checked = 0;
    while checked < 10_000 {
        let x1 = s.radial_point(random_dir(&mut rng));
        let x2 = s.radial_point(random_dir(&mut rng));
        if (x1 - x2).norm() < 1e-7 {
            continue;
        }
        let (Ok(u1), Ok(u2)) = (plane.project(&x1), plane.project(&x2)) else {
            continue;
        };
        assert!(
            (u1 - u2).norm() > 1e-9,
            "distinct points {x1:?} and {x2:?} collided in the plane"
        );
        checked += 1;
    }
}
