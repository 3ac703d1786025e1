use std::fmt::Write as _;

use anosov::extension::{band_of, build_collar, certify, ell_sweep, mollify_joints, CollarSpec};
use serde::Serialize;

use super::{bool_flag, Context, Failure};
use crate::config::{positive, section, ConfigError, ExtendConfig};
use crate::output::num;

fn spec_of(ec: &ExtendConfig) -> Result<CollarSpec, ConfigError> {
    for (v, name) in [
        (ec.delta0, "extend.delta0"),
        (ec.epsilon, "extend.epsilon"),
        (ec.ell, "extend.ell"),
        (ec.delta, "extend.delta"),
        (ec.r0, "extend.r0"),
        (ec.kappa0, "extend.kappa0"),
        (ec.period, "extend.period"),
    ] {
        positive(v, name)?;
    }
    if ec.delta >= ec.epsilon / 2.0 {
        return Err(ConfigError::new(
            "extend.delta",
            format!(
                "must be below epsilon / 2 = {}, got {}",
                ec.epsilon / 2.0,
                ec.delta
            ),
        ));
    }
    if 2.0 + 2.0 * ec.epsilon >= anosov::extension::COLLAR_END {
        return Err(ConfigError::new(
            "extend.epsilon",
            "the rounding region must end before t = 4",
        ));
    }
    for (i, l) in ec.ells.iter().enumerate() {
        positive(*l, &format!("extend.ells[{i}]"))?;
    }
    if ec.samples < 10 {
        return Err(ConfigError::new(
            "extend.samples",
            "at least 10 samples are needed",
        ));
    }
    Ok(CollarSpec {
        delta0: ec.delta0,
        epsilon: ec.epsilon,
        ell: ec.ell,
        delta: ec.delta,
        r0: ec.r0,
        kappa0: ec.kappa0,
        period: ec.period,
    })
}

#[derive(Debug, Serialize)]
struct Certificate {
    spec: CollarSpec,
    mollified: bool,
    kappa: f64,
    r_tilde: f64,
    min_w: f64,
    max_curvature_after_epsilon: f64,
    negative_after_epsilon: bool,
    tail_residual: f64,
    min_band_convexity: f64,
    max_joint_value_residual: f64,
    max_joint_slope_residual: f64,
    threshold_ell: Option<f64>,
}

pub fn run(ctx: &Context) -> Result<(), Failure> {
    let ec = section(&ctx.loaded.config.extend, "extend")?;
    let mut spec = spec_of(ec)?;
    let band = if ec.from_metric {
        let m = ctx.loaded.metric()?.warped("metric")?;
        spec = CollarSpec::at_outer_circle(&m, ec.delta0, ec.epsilon, ec.ell, ec.delta);
        if !(spec.kappa0 > 0.0) {
            return Err(ConfigError::new(
                "metric.profile",
                "outer boundary circle is not strictly convex",
            )
            .into());
        }
        band_of(&m)
    } else {
        spec.flat_band()
    };
    spec.validate()?;
    let raw = build_collar(&spec, band.clone())?;
    let collar = if ec.mollify {
        mollify_joints(&raw, spec.delta)?
    } else {
        raw
    };
    let report = certify(&collar, ec.samples);
    let rows: Vec<Vec<String>> = report
        .samples
        .iter()
        .map(|s| {
            vec![
                num(s.t),
                num(s.w),
                num(s.dw),
                num(s.curvature),
                s.region.tag().to_string(),
            ]
        })
        .collect();
    ctx.out.csv(
        "profile.csv",
        &["t", "w", "dw", "curvature", "region_tag"],
        &rows,
    )?;

    let mut threshold = None;
    if !ec.ells.is_empty() {
        let sweep = ell_sweep(&spec, band, &ec.ells, ec.samples, ctx.exec)?;
        let rows: Vec<Vec<String>> = sweep
            .rows
            .iter()
            .map(|r| {
                vec![
                    num(r.ell),
                    num(r.kappa),
                    num(r.max_curvature),
                    bool_flag(r.negative),
                    num(r.tail_residual),
                ]
            })
            .collect();
        ctx.out.csv(
            "sweep.csv",
            &["ell", "kappa", "max_curvature", "negative", "tail_residual"],
            &rows,
        )?;
        threshold = sweep.threshold;
    }
    let (jv, js) = report.max_joint_residual();
    let cert = Certificate {
        spec,
        mollified: ec.mollify,
        kappa: report.kappa,
        r_tilde: report.r_tilde,
        min_w: report.min_w,
        max_curvature_after_epsilon: report.max_curvature,
        negative_after_epsilon: report.negative,
        tail_residual: report.tail_residual,
        min_band_convexity: report.min_band_convexity,
        max_joint_value_residual: jv,
        max_joint_slope_residual: js,
        threshold_ell: threshold,
    };
    ctx.out.json("certificate.json", &cert)?;
    let mut text = String::new();
    let ok = |b: bool| if b { "yes" } else { "NO" };
    let _ = writeln!(text, "collar certificate");
    let _ = writeln!(
        text,
        "  band: delta0 = {}, r0 = {}, kappa0 = {}",
        spec.delta0, spec.r0, spec.kappa0
    );
    let _ = writeln!(
        text,
        "  warp rate ell = {}, epsilon = {}, delta = {}",
        spec.ell, spec.epsilon, spec.delta
    );
    let _ = writeln!(text, "  mollified joints: {}", ok(ec.mollify));
    let _ = writeln!(
        text,
        "  tail: kappa = {:.12}, r_tilde = {:.12}",
        report.kappa, report.r_tilde
    );
    let _ = writeln!(
        text,
        "  tail |K + kappa^2| max: {:.3e}",
        report.tail_residual
    );
    let _ = writeln!(
        text,
        "  joint residuals (relative): value {jv:.3e}, slope {js:.3e}"
    );
    let _ = writeln!(text, "  min w: {:.6e}", report.min_w);
    let _ = writeln!(
        text,
        "  K < 0 on [epsilon, 4]: {} (max K = {:.6e})",
        ok(report.negative),
        report.max_curvature
    );
    let _ = writeln!(
        text,
        "  band circles convex: {}",
        ok(report.min_band_convexity > 0.0)
    );
    match threshold {
        Some(t) => {
            let _ = writeln!(text, "  sweep threshold ell0 = {t}");
        }
        None if !ec.ells.is_empty() => {
            let _ = writeln!(text, "  sweep threshold ell0: none among the swept rates");
        }
        None => {}
    }
    ctx.out.text("certificate.txt", &text)?;
    Ok(())
}
