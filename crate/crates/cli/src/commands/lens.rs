use anosov::distance::lens_compare;
use anosov::flow::{lens_data, liouville_sample, FlowOptions, LensSample};

use super::{bool_flag, Context, Failure};
use crate::config::{positive, section, ConfigError};
use crate::output::num;

const HEADER: [&str; 11] = [
    "index",
    "entry_component",
    "entry_s",
    "entry_angle",
    "exit_component",
    "exit_s",
    "exit_angle",
    "time",
    "winding",
    "trapped_flag",
    "error",
];

pub fn run(ctx: &Context) -> Result<(), Failure> {
    let cfg = &ctx.loaded.config;
    let lens = section(&cfg.lens, "lens")?;
    if lens.samples == 0 {
        return Err(ConfigError::new("lens.samples", "must be at least 1").into());
    }
    positive(lens.t_max, "lens.t_max")?;
    positive(lens.tol, "lens.tol")?;
    let surface = ctx.loaded.metric()?.surface("metric")?;
    let other = match &cfg.compare_metric {
        Some(m) => Some(m.surface("compare_metric")?),
        None => None,
    };
    let opts = FlowOptions::with_tol(lens.tol);
    let samples: Vec<LensSample> = (0..lens.samples as u64)
        .map(|i| liouville_sample(&surface, ctx.seed, i))
        .collect();
    let records = lens_data(&surface, &samples, lens.t_max, &opts, ctx.exec);
    let rows: Vec<Vec<String>> = samples
        .iter()
        .zip(&records)
        .enumerate()
        .map(|(i, (s, r))| {
            let mut row = vec![
                i.to_string(),
                s.point.component.to_string(),
                num(s.point.s),
                num(s.angle),
            ];
            match r {
                Ok(rec) => {
                    match rec.exit_at() {
                        Some(at) => {
                            row.extend([at.component.to_string(), num(at.s), num(at.angle)])
                        }
                        None => row.extend([String::new(), String::new(), String::new()]),
                    }
                    row.extend([
                        num(rec.time),
                        rec.winding.to_string(),
                        bool_flag(rec.is_trapped()),
                        String::new(),
                    ]);
                }
                Err(e) => {
                    row.extend(std::iter::repeat_n(String::new(), 6));
                    row.push(e.to_string());
                }
            }
            row
        })
        .collect();
    ctx.out.csv("lens.csv", &HEADER, &rows)?;
    if let Some(other) = other {
        let cmp = lens_compare(&surface, &other, &samples, lens.t_max, &opts, ctx.exec)?;
        ctx.out.json("lens_compare.json", &cmp)?;
    }
    Ok(())
}
