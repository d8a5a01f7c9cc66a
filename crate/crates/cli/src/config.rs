//! Job configuration: a single JSON file plus flag overrides.

use anyhow::{bail, Context, Result};
use conjloc_core::geodesic::IntegratorConfig;
use conjloc_core::planar::{ParametricCurve, SupportFunction};
use conjloc_core::surface::{ImplicitSurface, TangentFrame};
use conjloc_core::Vec3;
use serde::Deserialize;
use std::path::Path;

#[derive(Debug, Clone, Deserialize)]
#[serde(tag = "family", rename_all = "lowercase")]
pub enum SurfaceSpec {
    Sphere { r: f64 },
    Ellipsoid { a: f64, b: f64, c: f64 },
}

impl SurfaceSpec {
    pub fn build(&self) -> Result<ImplicitSurface> {
        Ok(match self {
            SurfaceSpec::Sphere { r } => ImplicitSurface::sphere(*r)?,
            SurfaceSpec::Ellipsoid { a, b, c } => ImplicitSurface::ellipsoid(*a, *b, *c)?,
        })
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(tag = "family", rename_all = "lowercase")]
pub enum CurveFamily {
    Ellipse { a: f64, b: f64 },
    Limacon { a: f64, b: f64 },
}

/// Plane-curve input: a finite Fourier support function or a named family.
#[derive(Debug, Clone, Deserialize)]
#[serde(untagged)]
pub enum CurveSpec {
    Family(CurveFamily),
    Fourier { a0: f64, harmonics: Vec<(u32, f64, f64)> },
}

/// How a curve input is consumed by the evolute builder.
pub enum CurveInput {
    Oval(SupportFunction),
    Parametric(ParametricCurve),
}

impl CurveSpec {
    pub fn build(&self) -> Result<CurveInput> {
        Ok(match self {
            CurveSpec::Fourier { a0, harmonics } => {
                CurveInput::Oval(SupportFunction::fourier(*a0, harmonics.clone())?)
            }
            CurveSpec::Family(CurveFamily::Ellipse { a, b }) => {
                CurveInput::Oval(SupportFunction::ellipse(*a, *b)?)
            }
            CurveSpec::Family(CurveFamily::Limacon { a, b }) => {
                CurveInput::Parametric(ParametricCurve::Limacon { a: *a, b: *b })
            }
        })
    }
}

/// Base point as a unit-sphere direction, radially scaled onto the surface.
#[derive(Debug, Clone, Copy, Deserialize)]
pub struct BasePoint {
    /// Polar angle in `[0, pi]`.
    pub u: f64,
    /// Azimuth in `[0, 2 pi)`.
    pub v: f64,
}

impl BasePoint {
    pub fn direction(&self) -> Vec3 {
        Vec3::new(
            self.u.sin() * self.v.cos(),
            self.u.sin() * self.v.sin(),
            self.u.cos(),
        )
    }

    pub fn frame(&self, surface: &ImplicitSurface, seed: &[f64; 3]) -> Result<TangentFrame> {
        let p = surface.radial_point(self.direction());
        Ok(surface.tangent_frame(&p, &Vec3::new(seed[0], seed[1], seed[2]))?)
    }
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Tolerances {
    pub rtol: Option<f64>,
    pub atol: Option<f64>,
    pub max_step: Option<f64>,
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct JobConfig {
    pub surface: Option<SurfaceSpec>,
    pub curve: Option<CurveSpec>,
    pub base_point: Option<BasePoint>,
    /// Frame seed direction; `e1` is its tangential part. Default `[1,0,0]`.
    pub seed: Option<[f64; 3]>,
    /// Conjugate order `j`.
    pub order: Option<usize>,
    /// psi samples for distance curves and loci.
    pub samples: Option<usize>,
    /// Count-field grid resolution.
    pub grid: Option<usize>,
    pub strict: Option<bool>,
    pub tol: Option<Tolerances>,
}

impl JobConfig {
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .with_context(|| format!("reading config {}", path.display()))?;
        let cfg: JobConfig = serde_json::from_str(&text)
            .with_context(|| format!("parsing config {}", path.display()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        if let Some(t) = &self.tol {
            for (name, v) in [("rtol", t.rtol), ("atol", t.atol), ("max_step", t.max_step)] {
                if let Some(v) = v {
                    if !(v > 0.0) {
                        bail!("tolerance {name} must be positive, got {v}");
                    }
                }
            }
        }
        if let Some(n) = self.samples {
            if !(256..=65536).contains(&n) {
                bail!("samples must lie in [256, 65536], got {n}");
            }
        }
        if let Some(m) = self.grid {
            if !(21..=2001).contains(&m) {
                bail!("grid must lie in [21, 2001], got {m}");
            }
        }
        if let Some(j) = self.order {
            if j == 0 || j > 8 {
                bail!("order j must lie in [1, 8], got {j}");
            }
        }
        Ok(())
    }

    pub fn integrator(&self) -> IntegratorConfig {
        let mut cfg = IntegratorConfig::default();
        if let Some(t) = &self.tol {
            if let Some(r) = t.rtol {
                cfg.rtol = r;
            }
            if let Some(a) = t.atol {
                cfg.atol = a;
            }
            if let Some(m) = t.max_step {
                cfg.max_step = m;
            }
        }
        cfg
    }

    pub fn seed_vector(&self) -> [f64; 3] {
        self.seed.unwrap_or([1.0, 0.0, 0.0])
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_surface_and_curve_specs() {
        let cfg: JobConfig = serde_json::from_str(
            r#"{
                "surface": {"family": "ellipsoid", "a": 1.0, "b": 1.2, "c": 1.5},
                "base_point": {"u": 0.5, "v": 1.1},
                "order": 1,
                "samples": 512
            }"#,
        )
        .unwrap();
        cfg.validate().unwrap();
        assert!(matches!(cfg.surface, Some(SurfaceSpec::Ellipsoid { .. })));

        let cfg: JobConfig = serde_json::from_str(
            r#"{"curve": {"a0": 1.0, "harmonics": [[3, 0.05, 0.0]]}}"#,
        )
        .unwrap();
        assert!(matches!(cfg.curve, Some(CurveSpec::Fourier { .. })));

        let cfg: JobConfig =
            serde_json::from_str(r#"{"curve": {"family": "limacon", "a": 1.0, "b": 2.0}}"#).unwrap();
        assert!(matches!(
            cfg.curve,
            Some(CurveSpec::Family(CurveFamily::Limacon { .. }))
        ));
    }

    #[test]
    fn rejects_bad_tolerances_and_ranges() {
        let cfg: JobConfig =
            serde_json::from_str(r#"{"tol": {"rtol": -1e-10}}"#).unwrap();
        assert!(cfg.validate().is_err());

        let cfg: JobConfig = serde_json::from_str(r#"{"samples": 10}"#).unwrap();
        assert!(cfg.validate().is_err());

        let cfg: JobConfig = serde_json::from_str(r#"{"grid": 5}"#).unwrap();
        assert!(cfg.validate().is_err());
    }
}
