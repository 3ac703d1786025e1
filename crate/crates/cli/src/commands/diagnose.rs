use std::fmt::Write as _;

use anosov::flow::{
    first_conjugate_point, lens_record, liouville_sample, lyapunov_estimate, trapped_measure,
    FlowOptions, TrappedEstimate, MIN_SAMPLES,
};
use anosov::metric::{Domain, Point, Surface, UnitTangent, Vector};
use serde::Serialize;

use super::{Context, Failure};
use crate::config::{positive, section, ConfigError, MetricConfig};

#[derive(Debug, Serialize)]
struct Convexity {
    /// Smallest sampled geodesic curvature per boundary component.
    min_curvature: Vec<f64>,
    strictly_convex: bool,
}

#[derive(Debug, Serialize)]
struct ConjugatePoints {
    geodesics: usize,
    /// Geodesics with a conjugate point before leaving or the time limit.
    flagged: usize,
    earliest: Option<f64>,
    failures: usize,
}

#[derive(Debug, Serialize)]
struct Lyapunov {
    /// Where the orbit starts: the core circle or a trapped boundary entry.
    orbit: String,
    time: f64,
    exponent: f64,
}

#[derive(Debug, Serialize)]
struct Report {
    convexity: Convexity,
    conjugate_points: ConjugatePoints,
    trapped: Vec<TrappedEstimate>,
    trapped_decays: bool,
    lyapunov: Option<Lyapunov>,
    /// All numeric surrogates hold.
    passes: bool,
}

fn convexity(surface: &Surface, checks: usize) -> Result<Convexity, Failure> {
    let mut min_curvature = Vec::new();
    for c in 0..surface.components() {
        let curve = surface.curve(c)?;
        let mut m = f64::INFINITY;
        for i in 0..checks {
            let u = curve.u_period * i as f64 / checks as f64;
            m = m.min(surface.geodesic_curvature(c, u)?);
        }
        min_curvature.push(m);
    }
    let strictly_convex = min_curvature.iter().all(|k| *k > 0.0);
    Ok(Convexity {
        min_curvature,
        strictly_convex,
    })
}

/// The closed geodesic at the waist of a warped band, when it is interior.
fn core_orbit(surface: &Surface, metric: &MetricConfig) -> Option<UnitTangent> {
    let Domain::Band { t_min, t_max, .. } = surface.domain() else {
        return None;
    };
    let w = metric.warped("metric").ok()?;
    let t = w.core();
    if t - t_min < 1e-6 || t_max - t < 1e-6 {
        return None;
    }
    UnitTangent::new(surface.metric(), Point::new(t, 0.0), Vector::new(0.0, 1.0)).ok()
}

pub fn run(ctx: &Context) -> Result<(), Failure> {
    let dc = section(&ctx.loaded.config.diagnose, "diagnose")?;
    if dc.samples < MIN_SAMPLES {
        return Err(ConfigError::new(
            "diagnose.samples",
            format!("at least {MIN_SAMPLES} samples are needed"),
        )
        .into());
    }
    if dc.times.is_empty() {
        return Err(ConfigError::new("diagnose.times", "at least one time is needed").into());
    }
    for (i, t) in dc.times.iter().enumerate() {
        positive(*t, &format!("diagnose.times[{i}]"))?;
    }
    positive(dc.conjugate_time, "diagnose.conjugate_time")?;
    positive(dc.lyapunov_time, "diagnose.lyapunov_time")?;
    positive(dc.tol, "diagnose.tol")?;
    if dc.boundary_checks < 8 {
        return Err(
            ConfigError::new("diagnose.boundary_checks", "at least 8 checks are needed").into(),
        );
    }
    let metric = ctx.loaded.metric()?;
    let surface = metric.surface("metric")?;
    let opts = FlowOptions::with_tol(dc.tol);

    let convexity = convexity(&surface, dc.boundary_checks)?;

    // conjugate points along boundary entries, from a stream disjoint from
    // the trapped-fraction samples
    let offset = dc.samples as u64;
    let found: Vec<Result<Option<f64>, anosov::Error>> =
        anosov::par::map_range(ctx.exec, dc.conjugate_samples, |i| {
            let s = liouville_sample(&surface, ctx.seed, offset + i as u64);
            let start = surface.entry_state(s.point, s.angle)?;
            first_conjugate_point(&surface, &start, dc.conjugate_time, &opts)
        });
    let mut conj = ConjugatePoints {
        geodesics: dc.conjugate_samples,
        flagged: 0,
        earliest: None,
        failures: 0,
    };
    for r in &found {
        match r {
            Ok(Some(t)) => {
                conj.flagged += 1;
                conj.earliest = Some(conj.earliest.map_or(*t, |e: f64| e.min(*t)));
            }
            Ok(None) => {}
            Err(_) => conj.failures += 1,
        }
    }
    let core = core_orbit(&surface, metric);
    if let Some(c) = &core {
        conj.geodesics += 1;
        if let Some(t) = first_conjugate_point(&surface, c, dc.conjugate_time, &opts)? {
            conj.flagged += 1;
            conj.earliest = Some(conj.earliest.map_or(t, |e| e.min(t)));
        }
    }

    let trapped = trapped_measure(&surface, &dc.times, dc.samples, ctx.seed, &opts, ctx.exec)?;
    let last = trapped
        .iter()
        .max_by(|a, b| a.time.total_cmp(&b.time))
        .map_or(0.0, |e| e.fraction);
    let first = trapped
        .iter()
        .min_by(|a, b| a.time.total_cmp(&b.time))
        .map_or(0.0, |e| e.fraction);
    let trapped_decays = last == 0.0 || last < first;

    let t_max = dc.times.iter().cloned().fold(0.0, f64::max);
    let lyapunov = match &core {
        Some(c) => {
            let l = lyapunov_estimate(&surface, c, dc.lyapunov_time, &opts)?;
            Some(Lyapunov {
                orbit: "core circle".into(),
                time: l.time,
                exponent: l.exponent,
            })
        }
        None => {
            // first sample still inside at the largest time
            (0..dc.samples as u64)
                .map(|i| liouville_sample(&surface, ctx.seed, i))
                .find(|s| matches!(lens_record(&surface, s, t_max, &opts), Ok(r) if r.is_trapped()))
                .and_then(|s| {
                    let start = surface.entry_state(s.point, s.angle).ok()?;
                    let l = lyapunov_estimate(&surface, &start, t_max, &opts).ok()?;
                    Some(Lyapunov {
                        orbit: format!("boundary entry s = {}, angle = {}", s.point.s, s.angle),
                        time: l.time,
                        exponent: l.exponent,
                    })
                })
        }
    };
    let passes = convexity.strictly_convex
        && conj.flagged == 0
        && conj.failures == 0
        && trapped_decays
        && lyapunov.as_ref().is_none_or(|l| l.exponent > 0.0);
    let report = Report {
        convexity,
        conjugate_points: conj,
        trapped,
        trapped_decays,
        lyapunov,
        passes,
    };
    ctx.out.json("diagnose.json", &report)?;

    let mut text = String::new();
    let mark = |b: bool| if b { "yes" } else { "NO" };
    let _ = writeln!(
        text,
        "strictly convex boundary: {} (min geodesic curvature {:?})",
        mark(report.convexity.strictly_convex),
        report.convexity.min_curvature
    );
    let c = &report.conjugate_points;
    let _ = writeln!(
        text,
        "no conjugate points: {} ({} of {} geodesics flagged, earliest {:?}, {} failures)",
        mark(c.flagged == 0 && c.failures == 0),
        c.flagged,
        c.geodesics,
        c.earliest,
        c.failures
    );
    let _ = writeln!(
        text,
        "trapped fraction decays: {}",
        mark(report.trapped_decays)
    );
    for e in &report.trapped {
        let _ = writeln!(
            text,
            "  T = {}: {:.6} +- {:.6}",
            e.time, e.fraction, e.half_width
        );
    }
    match &report.lyapunov {
        Some(l) => {
            let _ = writeln!(
                text,
                "Lyapunov exponent on {}: {:.6} over T = {}",
                l.orbit, l.exponent, l.time
            );
        }
        None => {
            let _ = writeln!(text, "Lyapunov exponent: no trapped orbit found");
        }
    }
    let _ = writeln!(text, "all checks pass: {}", mark(report.passes));
    ctx.out.text("diagnose.txt", &text)?;
    Ok(())
}
