//! Monte Carlo estimate of the fraction of boundary entries still inside
//! after a given time, under the Liouville measure on inward vectors.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::geodesic::{lens_record, FlowOptions, LensSample};
use crate::error::{Error, Result};
use crate::metric::Surface;
use crate::par::{self, Execution};

/// Fewest samples accepted by [`trapped_measure`].
pub const MIN_SAMPLES: usize = 100;

/// Sample `index` of the stream for `seed`: boundary position uniform in arc
/// length and entry angle with density `cos(angle) / 2`.
///
/// Each index owns a separate generator stream, so samples do not depend on
/// how a batch is split across workers.
pub fn liouville_sample(surface: &Surface, seed: u64, index: u64) -> LensSample {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index);
    let mut s = rng.gen::<f64>() * surface.total_boundary_length();
    let mut component = 0;
    for c in 0..surface.components() {
        let len = surface.curve(c).map(|c| c.length).unwrap_or(0.0);
        if s < len || c + 1 == surface.components() {
            component = c;
            break;
        }
        s -= len;
    }
    let angle = (2.0 * rng.gen::<f64>() - 1.0).asin();
    LensSample::new(component, s, angle)
}

/// Trapped fraction at one time with its binomial 95% half-width.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TrappedEstimate {
    pub time: f64,
    pub fraction: f64,
    pub half_width: f64,
    pub samples: usize,
    /// Samples whose integration failed; counted as not trapped.
    pub failures: usize,
}

/// Estimates the trapped fraction at each of `times` from one batch of `n`
/// samples integrated up to the largest time. The estimates are
/// nonincreasing in time by construction.
pub fn trapped_measure(
    surface: &Surface,
    times: &[f64],
    n: usize,
    seed: u64,
    opts: &FlowOptions,
    exec: Execution,
) -> Result<Vec<TrappedEstimate>> {
    if n < MIN_SAMPLES {
        return Err(Error::InvalidArgument(format!(
            "at least {MIN_SAMPLES} samples are needed, got {n}"
        )));
    }
    if times.is_empty() || times.iter().any(|t| !(*t > 0.0)) {
        return Err(Error::InvalidArgument("times must be positive".into()));
    }
    let t_max = times.iter().cloned().fold(0.0, f64::max);
    // exit time, infinite when still inside at t_max; None on failure
    let exits: Vec<Option<f64>> = par::map_range(exec, n, |i| {
        let sample = liouville_sample(surface, seed, i as u64);
        match lens_record(surface, &sample, t_max, opts) {
            Ok(r) if r.is_trapped() => Some(f64::INFINITY),
            Ok(r) => Some(r.time),
            Err(_) => None,
        }
    });
    let failures = exits.iter().filter(|e| e.is_none()).count();
    Ok(times
        .iter()
        .map(|&t| {
            let inside = exits
                .iter()
                .filter(|e| matches!(e, Some(x) if *x > t))
                .count();
            let p = inside as f64 / n as f64;
            TrappedEstimate {
                time: t,
                fraction: p,
                half_width: 1.96 * (p * (1.0 - p) / n as f64).sqrt(),
                samples: n,
                failures,
            }
        })
        .collect())
}
