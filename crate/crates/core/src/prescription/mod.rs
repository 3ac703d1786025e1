//! Conformal prescription of scalar curvature through the Dirichlet
//! operator, kernel splitting, and scaled bump families.

mod bump;
mod newton;
mod operator;
mod perturb;

pub use bump::{bump_family, BumpFamily, BumpProfile};
pub use newton::{curvature_residual, prescribe, PrescribeOptions, Prescription};
pub use operator::{
    eigenvalue_derivative, kernel_tuned_disk, lpsc_test, DirichletOperator, LpscVerdict,
    SpectralWindow,
};
pub use perturb::{bump_basis, lpsc_perturb, PerturbOptions, Perturbation};
