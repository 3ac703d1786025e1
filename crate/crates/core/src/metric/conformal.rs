//! Scalar curvature under conformal rescaling `g -> exp(2f) g`.

use super::grid::{GridField, GridMetric};
use crate::error::{Error, Result};

/// `exp(-2f) (s - 2(n-1) Laplacian f - (n-2)(n-1) |df|^2)` on the grid of
/// `metric`, with the non-positive (geometers') Laplacian.
pub fn conformal_scalar_curvature(
    metric: &GridMetric,
    s: &GridField,
    f: &GridField,
    n: usize,
) -> Result<GridField> {
    let len = metric.chart.stored_len();
    if s.values.len() != len || f.values.len() != len {
        return Err(Error::InvalidArgument(format!(
            "fields have {} and {} nodes but the grid has {len}",
            s.values.len(),
            f.values.len()
        )));
    }
    if n < 2 {
        return Err(Error::InvalidArgument(
            "dimension must be at least 2".into(),
        ));
    }
    let nm1 = (n - 1) as f64;
    let lap = metric.laplacian(f);
    let grad2 = if n > 2 {
        Some(metric.gradient_norm2(f))
    } else {
        None
    };
    Ok(GridField {
        values: (0..len)
            .map(|k| {
                let mut v = s.values[k] - 2.0 * nm1 * lap.values[k];
                if let Some(g) = &grad2 {
                    v -= (n - 2) as f64 * nm1 * g.values[k];
                }
                (-2.0 * f.values[k]).exp() * v
            })
            .collect(),
    })
}
