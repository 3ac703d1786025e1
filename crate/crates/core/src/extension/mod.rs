//! Collars that enlarge a convex rotationally symmetric end and bend it to
//! constant negative curvature.

mod certify;
mod collar;
mod equidistant;
mod step;

pub use certify::{
    certify, ell_sweep, CollarReport, EllSweep, JointResidual, ProfileSample, SweepRow,
};
pub use collar::{
    band_of, build_collar, glue, mollify_joints, solve_tail, Collar, CollarSpec, Region,
    Smoothness, TailParams, COLLAR_END,
};
pub use equidistant::{equidistant_extend, TaylorContinued};
pub use step::{exp_warp, exp_warp_jet, smooth_step, smooth_step_jet};
