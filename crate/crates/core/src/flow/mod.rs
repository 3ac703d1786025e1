//! Geodesic flow on surfaces with boundary.

mod geodesic;
mod jacobi;
pub mod rk;
mod trapped;

pub use geodesic::{
    boundary_coords, exit_event, integrate, lens_data, lens_record, winding_between,
    BoundaryCoords, FlowOptions, GeodesicPath, LensRecord, LensSample, Outcome,
};
pub use jacobi::{
    first_conjugate_point, jacobi, lyapunov_estimate, JacobiSolution, LyapunovEstimate,
};
pub use trapped::{liouville_sample, trapped_measure, TrappedEstimate, MIN_SAMPLES};
