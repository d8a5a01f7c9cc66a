//! Command drivers: compute, export, summarize.

use crate::config::{CurveInput, JobConfig};
use crate::jsonfmt::{fmt_sig, Json};
use anyhow::{anyhow, Context};
use conjloc_core::conjlocus::{self, ConjugateLocus, LocusResult};
use conjloc_core::evolute::{self, EvoluteError, EvoluteResult};
use conjloc_core::geodesic::{GeodesicError, Genericity};
use conjloc_core::planar::{CuspedCurve, PlanarError};
use conjloc_core::surface::ImplicitSurface;
use std::fmt::Write as _;
use std::path::Path;

/// Driver failure with its process exit code.
#[derive(Debug)]
pub enum RunError {
    /// Exit 1: I/O or configuration.
    Config(anyhow::Error),
    /// Exit 2: non-generic input (or too-coarse resolution for it).
    NonGeneric(String),
    /// Exit 3: integration failure.
    Integration(String),
}

impl RunError {
    pub fn exit_code(&self) -> i32 {
        match self {
            RunError::Config(_) => 1,
            RunError::NonGeneric(_) => 2,
            RunError::Integration(_) => 3,
        }
    }
}

impl std::fmt::Display for RunError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            RunError::Config(e) => write!(f, "{e:#}"),
            RunError::NonGeneric(s) => write!(f, "non-generic input: {s}"),
            RunError::Integration(s) => write!(f, "integration failure: {s}"),
        }
    }
}

fn map_evolute_err(e: EvoluteError) -> RunError {
    match e {
        EvoluteError::Planar(PlanarError::NonGenericVertex { theta }) => {
            RunError::NonGeneric(format!("vertex at theta = {theta} is degenerate"))
        }
        EvoluteError::Planar(PlanarError::DegenerateVertices) => {
            RunError::NonGeneric("vertex equation vanishes identically".into())
        }
        EvoluteError::CurvatureVanishes { t } => {
            RunError::NonGeneric(format!("curvature vanishes near t = {t}"))
        }
        other => RunError::Config(anyhow!(other)),
    }
}

fn write_file(path: &Path, text: &str) -> Result<(), RunError> {
    std::fs::write(path, text)
        .with_context(|| format!("writing {}", path.display()))
        .map_err(RunError::Config)
}

fn curve_csv(c: &CuspedCurve, arc: usize) -> String {
    let mut out = String::from("param,x,y,tangent_angle\n");
    for s in &c.arcs[arc] {
        let angle = s.tangent.y.atan2(s.tangent.x);
        writeln!(
            out,
            "{},{},{},{}",
            fmt_sig(s.param),
            fmt_sig(s.point.x),
            fmt_sig(s.point.y),
            fmt_sig(angle)
        )
        .unwrap();
    }
    out
}

fn cusped_curve_json(c: &CuspedCurve, param_key: &str) -> Json {
    let cusps = c
        .cusps
        .iter()
        .map(|cp| {
            Json::obj()
                .field(param_key, cp.param)
                .field("x", cp.point.x)
                .field("y", cp.point.y)
        })
        .collect::<Vec<_>>();
    let arcs = c
        .arcs
        .iter()
        .map(|arc| {
            Json::Arr(
                arc.iter()
                    .map(|s| {
                        Json::obj()
                            .field(param_key, s.param)
                            .field("x", s.point.x)
                            .field("y", s.point.y)
                    })
                    .collect(),
            )
        })
        .collect::<Vec<_>>();
    Json::obj().field("cusps", Json::Arr(cusps)).field("arcs", Json::Arr(arcs))
}

fn describe_curve(cfg: &JobConfig) -> String {
    match &cfg.curve {
        Some(crate::config::CurveSpec::Fourier { a0, harmonics }) => {
            format!("fourier(a0={a0}, harmonics={harmonics:?})")
        }
        Some(crate::config::CurveSpec::Family(f)) => format!("{f:?}").to_lowercase(),
        None => "unspecified".into(),
    }
}

/// `evolute` command: construct, export, and check the index relation.
pub fn run_evolute(cfg: &JobConfig, out: &Path) -> Result<String, RunError> {
    let spec = cfg
        .curve
        .as_ref()
        .ok_or_else(|| RunError::Config(anyhow!("config needs a \"curve\" entry")))?;
    let input = spec.build().map_err(RunError::Config)?;
    let samples = cfg.samples.unwrap_or(4096);
    let source = describe_curve(cfg);

    let (result, with_source_index) = match &input {
        CurveInput::Oval(h) => (evolute::evolute_of_oval(h, samples).map_err(map_evolute_err)?, false),
        CurveInput::Parametric(c) => {
            (evolute::evolute_of_curve(c, samples).map_err(map_evolute_err)?, true)
        }
    };

    match result {
        EvoluteResult::Degenerate { center } => {
            let json = Json::obj()
                .field("source", source.as_str())
                .field("degenerate", true)
                .field(
                    "center",
                    Json::obj().field("x", center.x).field("y", center.y),
                );
            write_file(&out.join("evolute.json"), &json.render())?;
            Ok(format!(
                "degenerate center=({}, {})",
                fmt_sig(center.x),
                fmt_sig(center.y)
            ))
        }
        EvoluteResult::Evolute(e) => {
            let relation = if e.index_relation_ok() { "ok" } else { "fail" };
            let body = cusped_curve_json(&e.curve, "theta");
            let (cusps, arcs) = match body {
                Json::Obj(fields) => {
                    let mut it = fields.into_iter();
                    (it.next().unwrap().1, it.next().unwrap().1)
                }
                _ => unreachable!(),
            };
            let json = Json::obj()
                .field("source", source.as_str())
                .field("n", e.n)
                .field("i", e.i)
                .field("I", e.source_index)
                .field("relation", relation)
                .field("cusps", cusps)
                .field("arcs", arcs);
            write_file(&out.join("evolute.json"), &json.render())?;
            for k in 0..e.curve.arcs.len() {
                write_file(&out.join(format!("evolute_arc_{k:03}.csv")), &curve_csv(&e.curve, k))?;
            }
            let summary = if with_source_index {
                format!("n={} I={} i={} relation={relation}", e.n, e.source_index, e.i)
            } else {
                format!("n={} i={} relation={relation}", e.n, e.i)
            };
            Ok(summary)
        }
    }
}

fn map_geodesic_err(e: GeodesicError) -> RunError {
    match e {
        GeodesicError::Surface(s) => RunError::Config(anyhow!(s)),
        other => RunError::Integration(other.to_string()),
    }
}

fn locus_json(l: &ConjugateLocus) -> Json {
    let cusps = l
        .cusps
        .iter()
        .map(|c| {
            Json::obj()
                .field("psi", c.psi)
                .field("R", c.r)
                .field("x", c.point.x)
                .field("y", c.point.y)
                .field("z", c.point.z)
        })
        .collect::<Vec<_>>();
    let arcs = l
        .arcs
        .iter()
        .map(|arc| {
            Json::Arr(
                arc.samples
                    .iter()
                    .map(|s| {
                        Json::obj()
                            .field("psi", s.psi)
                            .field("x", s.x.x)
                            .field("y", s.x.y)
                            .field("z", s.x.z)
                    })
                    .collect(),
            )
        })
        .collect::<Vec<_>>();
    Json::obj()
        .field("j", l.j)
        .field("n", l.n)
        .field("i", l.i)
        .field("cusps", Json::Arr(cusps))
        .field("arcs", Json::Arr(arcs))
        .field("projected", cusped_curve_json(&l.projected, "psi"))
        .field("alternating_length", l.alternating_length())
}

fn distance_curve_json(l: &ConjugateLocus) -> Json {
    let dc = &l.distance;
    let stationary = dc
        .stationary
        .iter()
        .map(|s| {
            Json::obj()
                .field("psi", s.psi)
                .field("R", s.r)
                .field("R2", s.r2)
                .field("A1", s.a1)
        })
        .collect::<Vec<_>>();
    Json::obj()
        .field("j", dc.j)
        .field("psi", dc.psi.clone())
        .field("R", dc.r.clone())
        .field("xi_s", dc.xi_s.clone())
        .field("stationary", Json::Arr(stationary))
}

struct ConjugateOutcome {
    summary: String,
    locus: Option<ConjugateLocus>,
    surface: ImplicitSurface,
}

fn conjugate_common(cfg: &JobConfig, out: &Path) -> Result<ConjugateOutcome, RunError> {
    let surface_spec = cfg
        .surface
        .as_ref()
        .ok_or_else(|| RunError::Config(anyhow!("config needs a \"surface\" entry")))?;
    let base = cfg
        .base_point
        .ok_or_else(|| RunError::Config(anyhow!("config needs a \"base_point\" entry")))?;
    let surface = surface_spec.build().map_err(RunError::Config)?;
    let frame = base.frame(&surface, &cfg.seed_vector()).map_err(RunError::Config)?;
    let j = cfg.order.unwrap_or(1);
    let n_psi = cfg.samples.unwrap_or(1024);
    let integ = cfg.integrator();

    let result = conjlocus::build_locus(&surface, &frame, j, n_psi, &integ).map_err(|e| match e {
        conjlocus::ConjLocusError::Geodesic(g) => map_geodesic_err(g),
        conjlocus::ConjLocusError::Surface(s) => RunError::Config(anyhow!(s)),
        other => RunError::Integration(other.to_string()),
    })?;

    match result {
        LocusResult::Degenerate { point, r } => {
            let json = Json::obj()
                .field("j", j)
                .field("degenerate", true)
                .field(
                    "point",
                    Json::obj().field("x", point.x).field("y", point.y).field("z", point.z),
                )
                .field("R", r);
            write_file(&out.join("locus.json"), &json.render())?;
            Ok(ConjugateOutcome { summary: "degenerate".into(), locus: None, surface })
        }
        LocusResult::Locus(l) => {
            let strict = cfg.strict.unwrap_or(false);
            let non_generic = matches!(l.genericity, Genericity::NonGeneric { .. });
            if non_generic && strict {
                return Err(RunError::NonGeneric(
                    "distance curve has a stationary point failing the A1 test".into(),
                ));
            }
            write_file(&out.join("locus.json"), &locus_json(&l).render())?;
            write_file(&out.join("distance_curve.json"), &distance_curve_json(&l).render())?;

            let relation = if l.index_relation_ok() { "ok" } else { "fail" };
            let (k_min, k_max) = surface.curvature_extremes();
            let (lo, hi) = (
                j as f64 * std::f64::consts::PI / k_max.sqrt(),
                j as f64 * std::f64::consts::PI / k_min.sqrt(),
            );
            let annulus_ok = l
                .distance
                .r
                .iter()
                .all(|&r| r >= lo - 1e-9 && r <= hi + 1e-9);
            let loops = conjlocus::smooth_loop_scan(&l).len();
            let mut summary = format!(
                "j={j} n={} i={} relation={relation} annulus={} loops={loops}",
                l.n,
                l.i,
                if annulus_ok { "ok" } else { "fail" },
            );
            if non_generic {
                summary.push_str(" genericity=warn");
            }
            Ok(ConjugateOutcome { summary, locus: Some(*l), surface })
        }
    }
}

/// `conjugate` command: distance curve, locus, projection, exports.
pub fn run_conjugate(cfg: &JobConfig, out: &Path) -> Result<String, RunError> {
    Ok(conjugate_common(cfg, out)?.summary)
}

/// `count-map` command: locus plus count field with region report.
pub fn run_count_map(cfg: &JobConfig, out: &Path) -> Result<String, RunError> {
    let outcome = conjugate_common(cfg, out)?;
    let Some(locus) = outcome.locus else {
        return Ok("degenerate".into());
    };
    let m_grid = cfg.grid.unwrap_or(401);
    let (field, report) =
        conjlocus::count_field(&outcome.surface, &locus, m_grid).map_err(|e| match e {
            conjlocus::ConjLocusError::GridTooCoarse(s) => RunError::NonGeneric(s),
            conjlocus::ConjLocusError::AmbiguousCount(s) => RunError::NonGeneric(s),
            conjlocus::ConjLocusError::Geodesic(g) => map_geodesic_err(g),
            other => RunError::Integration(other.to_string()),
        })?;

    let mut csv = String::from("row,col,plane_x,plane_y,m\n");
    for row in 0..field.m_grid {
        for col in 0..field.m_grid {
            let p = field.plane_point(row, col);
            let m = match field.at(row, col) {
                Some(v) => v.to_string(),
                None => String::new(),
            };
            writeln!(csv, "{row},{col},{},{},{m}", fmt_sig(p.x), fmt_sig(p.y)).unwrap();
        }
    }
    write_file(&out.join("countfield.csv"), &csv)?;

    let levels = report
        .levels
        .iter()
        .map(|lv| {
            Json::obj()
                .field("m", lv.m as i64)
                .field("components", lv.components)
                .field("holes", lv.holes)
                .field("chi", lv.chi)
        })
        .collect::<Vec<_>>();
    let json = Json::obj()
        .field("levels", Json::Arr(levels))
        .field("i_mc", report.i_mc)
        .field(
            "arc_delta_m",
            Json::Arr(
                report
                    .arc_delta_m
                    .iter()
                    .map(|(arc, dm)| Json::obj().field("arc", *arc).field("delta_m", *dm))
                    .collect(),
            ),
        );
    write_file(&out.join("regions.json"), &json.render())?;

    let consistent = report.i_mc == locus.i;
    Ok(format!(
        "i={} i_mc={} consistent={} levels={} ambiguous_cells={}",
        locus.i,
        report.i_mc,
        if consistent { "ok" } else { "fail" },
        report.levels.len(),
        field.ambiguous.len()
    ))
}
