use anosov::expr::Expr;
use anosov::metric::{grid_cm_norm, Chart, GridField, GridMetric};
use anosov::prescription::{
    kernel_tuned_disk, lpsc_test, prescribe, DirichletOperator, PrescribeOptions,
};
use anosov::Error;
use serde::Serialize;

use super::{Context, Failure};
use crate::config::{positive, section, ConfigError};
use crate::output::num;

#[derive(Debug, Serialize)]
struct Summary {
    iterations: usize,
    final_residual: f64,
    f_sup: f64,
    f_c2: f64,
    h_sup: f64,
    lowest_eigenvalue: f64,
    /// Least-squares constant in `|f|_C2 <= C |h|_C0` over the sweep.
    fitted_constant: Option<f64>,
}

pub fn run(ctx: &Context) -> Result<(), Failure> {
    let cfg = &ctx.loaded.config;
    let pc = section(&cfg.prescribe, "prescribe")?;
    if pc.radial < 8 {
        return Err(
            ConfigError::new("prescribe.radial", "at least 8 radial nodes are needed").into(),
        );
    }
    if pc.angular < 8 || pc.angular % 2 != 0 {
        return Err(ConfigError::new("prescribe.angular", "must be even and at least 8").into());
    }
    if pc.dimension < 2 {
        return Err(ConfigError::new("prescribe.dimension", "must be at least 2").into());
    }
    positive(pc.tol, "prescribe.tol")?;
    positive(pc.gap_tol, "prescribe.gap_tol")?;
    let h_expr = Expr::parse(&pc.h, &["x", "y"]).map_err(|e| ConfigError::new("prescribe.h", e))?;
    let metric = if pc.tuned_kernel {
        kernel_tuned_disk(pc.radial, pc.angular)?.0
    } else {
        let (m, radius) = ctx.loaded.metric()?.disk("metric")?;
        GridMetric::sample(Chart::polar_disk(radius, pc.radial, pc.angular)?, &m)?
    };
    let chart = metric.chart;
    let h = GridField::from_cartesian(&chart, |p| h_expr.eval(&[p.x, p.y]));
    let op = DirichletOperator::assemble(&metric, pc.dimension)?.with_execution(ctx.exec);
    if pc.export_operator {
        let rows: Vec<Vec<String>> = op
            .to_coo()
            .into_iter()
            .map(|(i, j, v)| vec![i.to_string(), j.to_string(), num(v)])
            .collect();
        ctx.out
            .csv("operator.coo.csv", &["row", "col", "value"], &rows)?;
    }
    let spectrum = op.eigenpairs(0.0, 4)?;
    let rows: Vec<Vec<String>> = spectrum
        .iter()
        .enumerate()
        .map(|(i, (v, _))| vec![i.to_string(), num(*v)])
        .collect();
    ctx.out
        .csv("spectrum.csv", &["index", "eigenvalue"], &rows)?;
    let verdict = lpsc_test(&op, pc.gap_tol)?;
    if !verdict.lpsc {
        return Err(Failure::Compute(format!(
            "refusing to prescribe: operator has eigenvalue {:e} within gap_tol {:e} of zero (see spectrum.csv)",
            verdict.eigenvalue, pc.gap_tol
        )));
    }
    let opts = PrescribeOptions {
        tol: pc.tol,
        max_iter: pc.max_iter,
        gap_tol: pc.gap_tol,
        dimension: pc.dimension,
        exec: ctx.exec,
    };
    let sol = match prescribe(&metric, &h, &opts) {
        Ok(s) => s,
        Err(Error::NewtonDivergence(trace)) => {
            let rows: Vec<Vec<String>> = trace
                .iter()
                .enumerate()
                .map(|(i, r)| vec![i.to_string(), num(*r)])
                .collect();
            ctx.out
                .csv("trace.csv", &["iteration", "residual"], &rows)?;
            return Err(Error::NewtonDivergence(trace).into());
        }
        Err(e) => return Err(e.into()),
    };
    let rows: Vec<Vec<String>> = (0..chart.stored_len())
        .map(|k| {
            let (r, theta) = chart.coords(k);
            let p = chart.cartesian(k);
            vec![num(r), num(theta), num(p.x), num(p.y), num(sol.f.values[k])]
        })
        .collect();
    ctx.out
        .csv("field.csv", &["r", "theta", "x", "y", "f"], &rows)?;
    let rows: Vec<Vec<String>> = sol
        .trace
        .iter()
        .enumerate()
        .map(|(i, r)| vec![i.to_string(), num(*r)])
        .collect();
    ctx.out
        .csv("trace.csv", &["iteration", "residual"], &rows)?;

    let mut fitted = None;
    if pc.sweep > 0 {
        let mut rows = Vec::new();
        let (mut num_sum, mut den_sum) = (0.0, 0.0);
        for k in 0..=pc.sweep {
            let hk = h.scaled(0.5f64.powi(k as i32));
            let s = prescribe(&metric, &hk, &opts)?;
            let c2 = grid_cm_norm(&metric, &s.f, 2)?;
            let hs = hk.sup();
            num_sum += c2 * hs;
            den_sum += hs * hs;
            rows.push(vec![
                k.to_string(),
                num(hs),
                num(c2),
                num(if hs > 0.0 { c2 / hs } else { 0.0 }),
                s.iterations.to_string(),
            ]);
        }
        ctx.out.csv(
            "sweep.csv",
            &["halvings", "h_sup", "f_c2", "ratio", "iterations"],
            &rows,
        )?;
        if den_sum > 0.0 {
            fitted = Some(num_sum / den_sum);
        }
    }
    let summary = Summary {
        iterations: sol.iterations,
        final_residual: *sol.trace.last().unwrap_or(&0.0),
        f_sup: sol.f.sup(),
        f_c2: grid_cm_norm(&metric, &sol.f, 2)?,
        h_sup: h.sup(),
        lowest_eigenvalue: verdict.eigenvalue,
        fitted_constant: fitted,
    };
    ctx.out.json("prescribe.json", &summary)?;
    Ok(())
}
