//! Curvature and regularity reports for collars.

use std::sync::Arc;

use serde::{Deserialize, Serialize};

use super::collar::{build_collar, mollify_joints, Collar, CollarSpec, Region, COLLAR_END};
use crate::error::Result;
use crate::par::{self, Execution};
use crate::profile::{Profile, Side};

/// One sampled row of a collar profile.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ProfileSample {
    pub t: f64,
    pub w: f64,
    pub dw: f64,
    pub curvature: f64,
    pub region: Region,
}

/// One-sided mismatches of `w` and `w'` at a breakpoint, relative to
/// `max(1, |w|)` and `max(1, |w'|)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct JointResidual {
    pub at: f64,
    pub value: f64,
    pub slope: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CollarReport {
    pub samples: Vec<ProfileSample>,
    pub min_w: f64,
    /// Largest curvature on `[epsilon, 4]`.
    pub max_curvature: f64,
    /// Whether the curvature is negative on all of `[epsilon, 4]`.
    pub negative: bool,
    /// `max |K + kappa^2|` over the tail, away from any mollified zone.
    pub tail_residual: f64,
    /// Smallest circle curvature `f'/f` on the band `[-delta0, 0]`.
    pub min_band_convexity: f64,
    pub joints: Vec<JointResidual>,
    pub kappa: f64,
    pub r_tilde: f64,
}

impl CollarReport {
    pub fn max_joint_residual(&self) -> (f64, f64) {
        self.joints.iter().fold((0.0f64, 0.0f64), |(a, b), j| {
            (a.max(j.value), b.max(j.slope))
        })
    }
}

/// Samples `K` on `samples + 1` uniform points of `[-delta0, 4]`, plus both
/// sides of every breakpoint, and summarizes the collar.
pub fn certify(collar: &Collar, samples: usize) -> CollarReport {
    let s = &collar.spec;
    let lo = -s.delta0;
    let n = samples.max(1);
    let mut ts: Vec<(f64, Side)> = (0..=n)
        .map(|i| (lo + (COLLAR_END - lo) * i as f64 / n as f64, Side::Right))
        .collect();
    for b in s.breakpoints() {
        ts.push((b, Side::Left));
        ts.push((b, Side::Right));
    }
    ts.retain(|&(t, side)| {
        !(t == lo && side == Side::Left) && !(t == COLLAR_END && side == Side::Right)
    });
    ts.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap());
    let kappa2 = collar.tail.kappa.powi(2);
    let smoothed = collar.mollified.unwrap_or(0.0);
    let mut report = CollarReport {
        samples: Vec::with_capacity(ts.len()),
        min_w: f64::INFINITY,
        max_curvature: f64::NEG_INFINITY,
        negative: true,
        tail_residual: 0.0,
        min_band_convexity: f64::INFINITY,
        joints: Vec::new(),
        kappa: collar.tail.kappa,
        r_tilde: collar.tail.r_tilde,
    };
    for (t, side) in ts {
        let w = collar.w_jet(t, side).derivatives();
        let f = collar.derivatives_one_sided(t, side);
        let k = -f[2] / f[0];
        let region = collar.region_at(t, side);
        report.min_w = report.min_w.min(w[0]);
        if t >= s.epsilon {
            report.max_curvature = report.max_curvature.max(k);
            report.negative &= k < 0.0;
        }
        if region == Region::Tail && t >= s.tail_start() + smoothed {
            report.tail_residual = report.tail_residual.max((k + kappa2).abs());
        }
        if t <= 0.0 {
            report.min_band_convexity = report.min_band_convexity.min(f[1] / f[0]);
        }
        report.samples.push(ProfileSample {
            t,
            w: w[0],
            dw: w[1],
            curvature: k,
            region,
        });
    }
    for b in &s.breakpoints()[1..4] {
        let l = collar.w_jet(*b, Side::Left);
        let r = collar.w_jet(*b, Side::Right);
        report.joints.push(JointResidual {
            at: *b,
            value: (l.c[0] - r.c[0]).abs() / r.c[0].abs().max(1.0),
            slope: (l.c[1] - r.c[1]).abs() / r.c[1].abs().max(1.0),
        });
    }
    report
}

/// One row of a sweep over the warp rate.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub ell: f64,
    pub kappa: f64,
    pub max_curvature: f64,
    pub negative: bool,
    pub tail_residual: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EllSweep {
    pub rows: Vec<SweepRow>,
    /// Smallest swept rate from which every larger swept rate gives negative
    /// curvature on `[epsilon, 4]`.
    pub threshold: Option<f64>,
}

/// Builds, mollifies and certifies the collar for each rate in `ells`
/// (sorted ascending), in parallel over rates.
pub fn ell_sweep(
    spec: &CollarSpec,
    band: Arc<dyn Profile>,
    ells: &[f64],
    samples: usize,
    exec: Execution,
) -> Result<EllSweep> {
    let mut ells = ells.to_vec();
    ells.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let rows: Vec<Result<SweepRow>> = par::map(exec, &ells, |_, &ell| {
        let spec = CollarSpec { ell, ..*spec };
        let collar = mollify_joints(&build_collar(&spec, band.clone())?, spec.delta)?;
        let r = certify(&collar, samples);
        Ok(SweepRow {
            ell,
            kappa: r.kappa,
            max_curvature: r.max_curvature,
            negative: r.negative,
            tail_residual: r.tail_residual,
        })
    });
    let rows = rows.into_iter().collect::<Result<Vec<_>>>()?;
    let threshold = rows
        .iter()
        .rposition(|r| !r.negative)
        .map_or(Some(0), |i| (i + 1 < rows.len()).then_some(i + 1))
        .and_then(|i| rows.get(i).map(|r| r.ell));
    Ok(EllSweep { rows, threshold })
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::TAU;

    fn reference() -> CollarSpec {
        CollarSpec {
            delta0: 0.05,
            epsilon: 0.1,
            ell: 8.0,
            delta: 0.04,
            r0: 1.0,
            kappa0: 1.0,
            period: TAU,
        }
    }

    #[test]
    fn reference_certificate() {
        let spec = reference();
        let raw = build_collar(&spec, spec.flat_band()).unwrap();
        let r = certify(&raw, 2000);
        assert!(r.tail_residual <= 1e-8);
        let (v, s) = r.max_joint_residual();
        assert!(v <= 1e-10 && s <= 1e-10);
        assert!(r.min_w > 0.0);
        assert!(r.negative);
        assert!((r.min_band_convexity - 1.0 / 0.95).abs() < 1e-12 || r.min_band_convexity > 0.0);
        let m = certify(&mollify_joints(&raw, spec.delta).unwrap(), 2000);
        assert!(m.tail_residual <= 1e-8);
        assert!(m.negative);
        assert!(m
            .samples
            .iter()
            .all(|s| s.region.tag() >= 1 && s.region.tag() <= 4));
    }

    #[test]
    fn sweep_finds_a_threshold() {
        let spec = reference();
        let s = ell_sweep(
            &spec,
            spec.flat_band(),
            &[16.0, 1.0, 4.0, 2.0, 8.0],
            1000,
            Execution::Parallel,
        )
        .unwrap();
        assert_eq!(s.rows.len(), 5);
        let threshold = s.threshold.unwrap();
        for pair in s.rows.windows(2) {
            assert!(pair[1].kappa > pair[0].kappa);
        }
        for r in &s.rows {
            assert_eq!(r.negative, r.ell >= threshold);
        }
        let seq = ell_sweep(
            &spec,
            spec.flat_band(),
            &[1.0, 2.0, 4.0, 8.0, 16.0],
            1000,
            Execution::Sequential,
        )
        .unwrap();
        assert_eq!(seq, s);
    }
}
