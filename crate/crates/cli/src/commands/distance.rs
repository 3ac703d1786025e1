use anosov::distance::{distance_table, DistanceOptions, DistanceRow, DistanceSolver, Method};
use anosov::flow::{liouville_sample, FlowOptions};
use anosov::metric::{BoundaryPoint, Surface};
use serde::Serialize;

use super::{Context, Failure};
use crate::config::{positive, section, ConfigError, PointConfig};
use crate::output::num;

const HEADER: [&str; 10] = [
    "x_component",
    "x_s",
    "y_component",
    "y_s",
    "class",
    "length",
    "angle",
    "residual",
    "method",
    "error",
];

fn point(surface: &Surface, p: &PointConfig, field: &str) -> Result<BoundaryPoint, ConfigError> {
    if p.component >= surface.components() {
        return Err(ConfigError::new(
            format!("{field}.component"),
            format!("surface has {} boundary component(s)", surface.components()),
        ));
    }
    if !p.s.is_finite() {
        return Err(ConfigError::new(format!("{field}.s"), "must be finite"));
    }
    Ok(BoundaryPoint::new(p.component, p.s))
}

fn method_name(m: Method) -> &'static str {
    match m {
        Method::Shooting => "shooting",
        Method::MultipleShooting => "multiple-shooting",
    }
}

fn table_rows(rows: &[DistanceRow]) -> Vec<Vec<String>> {
    rows.iter()
        .map(|r| {
            let mut row = vec![
                r.x.component.to_string(),
                num(r.x.s),
                r.y.component.to_string(),
                num(r.y.s),
                r.class.to_string(),
            ];
            match &r.result {
                Ok(d) => row.extend([
                    num(d.length),
                    num(d.angle),
                    num(d.residual),
                    method_name(d.method).into(),
                    String::new(),
                ]),
                Err(e) => {
                    row.extend(std::iter::repeat_n(String::new(), 4));
                    row.push(e.to_string());
                }
            }
            row
        })
        .collect()
}

/// Per-class sup discrepancies between the tables of two metrics.
#[derive(Debug, Serialize)]
struct ClassDiscrepancy {
    class: i64,
    compared: usize,
    /// Pairs solved for one metric only.
    unmatched: usize,
    sup_length: f64,
    sup_angle: f64,
}

fn compare(a: &[DistanceRow], b: &[DistanceRow], classes: &[i64]) -> Vec<ClassDiscrepancy> {
    classes
        .iter()
        .map(|&class| {
            let mut d = ClassDiscrepancy {
                class,
                compared: 0,
                unmatched: 0,
                sup_length: 0.0,
                sup_angle: 0.0,
            };
            for (x, y) in a.iter().zip(b).filter(|(x, _)| x.class == class) {
                match (&x.result, &y.result) {
                    (Ok(p), Ok(q)) => {
                        d.compared += 1;
                        d.sup_length = d.sup_length.max((p.length - q.length).abs());
                        d.sup_angle = d.sup_angle.max((p.angle - q.angle).abs());
                    }
                    (Err(_), Err(_)) => {}
                    _ => d.unmatched += 1,
                }
            }
            d
        })
        .collect()
}

pub fn run(ctx: &Context) -> Result<(), Failure> {
    let cfg = &ctx.loaded.config;
    let dc = section(&cfg.distance, "distance")?;
    positive(dc.tol, "distance.tol")?;
    positive(dc.t_max, "distance.t_max")?;
    if dc.scan < 16 {
        return Err(ConfigError::new("distance.scan", "at least 16 scan angles are needed").into());
    }
    let surface = ctx.loaded.metric()?.surface("metric")?;
    let other = match &cfg.compare_metric {
        Some(m) => Some(m.surface("compare_metric")?),
        None => None,
    };
    let mut pairs = Vec::new();
    for (i, p) in dc.pairs.iter().enumerate() {
        pairs.push((
            point(&surface, &p.x, &format!("distance.pairs[{i}].x"))?,
            point(&surface, &p.y, &format!("distance.pairs[{i}].y"))?,
        ));
    }
    for i in 0..dc.random_pairs as u64 {
        let x = liouville_sample(&surface, ctx.seed, 2 * i).point;
        let y = liouville_sample(&surface, ctx.seed, 2 * i + 1).point;
        pairs.push((x, y));
    }
    let sweep = match &dc.sweep {
        Some(s) => {
            if s.n_max == 0 {
                return Err(ConfigError::new("distance.sweep.n_max", "must be nonzero").into());
            }
            Some((
                point(&surface, &s.x, "distance.sweep.x")?,
                point(&surface, &s.y, "distance.sweep.y")?,
                s.n_max,
            ))
        }
        None => None,
    };
    if pairs.is_empty() && sweep.is_none() {
        return Err(
            ConfigError::new("distance.pairs", "no pairs, random pairs or sweep given").into(),
        );
    }
    let opts = DistanceOptions {
        flow: FlowOptions::with_tol(dc.tol),
        scan: dc.scan,
        t_max: dc.t_max,
        exec: ctx.exec,
        ..DistanceOptions::default()
    };
    if !pairs.is_empty() {
        let rows = distance_table(&surface, &pairs, &dc.classes, &opts);
        ctx.out.csv("distance.csv", &HEADER, &table_rows(&rows))?;
        if let Some(other) = &other {
            let rows_b = distance_table(other, &pairs, &dc.classes, &opts);
            ctx.out
                .csv("distance_compare.csv", &HEADER, &table_rows(&rows_b))?;
            ctx.out.json(
                "distance_compare.json",
                &compare(&rows, &rows_b, &dc.classes),
            )?;
        }
    }
    if let Some((x, y, n_max)) = sweep {
        let solver = DistanceSolver::new(&surface, x, y, &opts)?;
        let rows: Vec<Vec<String>> = solver
            .sweep(n_max)
            .into_iter()
            .enumerate()
            .map(|(k, r)| {
                let n = n_max.signum() * (k as i64 + 1);
                match r {
                    Ok(d) => vec![
                        n.to_string(),
                        num(d.length),
                        num(d.length / n.abs() as f64),
                        num(d.angle),
                        num(d.residual),
                        method_name(d.method).into(),
                        String::new(),
                    ],
                    Err(e) => {
                        let mut row = vec![n.to_string()];
                        row.extend(std::iter::repeat_n(String::new(), 5));
                        row.push(e.to_string());
                        row
                    }
                }
            })
            .collect();
        ctx.out.csv(
            "winding.csv",
            &[
                "class",
                "length",
                "length_per_winding",
                "angle",
                "residual",
                "method",
                "error",
            ],
            &rows,
        )?;
    }
    Ok(())
}
