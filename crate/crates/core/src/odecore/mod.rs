//! Numerical engine: meshes, piecewise-polynomial profiles, a MIRK4
//! collocation BVP solver, an adaptive Dormand-Prince integrator, weighted
//! quadrature and scalar root finding.

mod banded;
mod bvp;
mod ivp;
mod mesh;
mod profile;
mod quadrature;
mod roots;

pub use banded::{BandLu, BandMatrix};
pub use bvp::{solve_bvp, BvpOptions, BvpSolution, BvpSystem};
pub use ivp::{integrate_ivp, IvpOptions, IvpTrajectory};
pub use mesh::Mesh;
pub(crate) use mesh::merge_breakpoints;
pub use profile::{Profile, PROFILE_ORDER};
pub use quadrature::{inner_product, integrate_pieces, Interpolant, Weight, GAUSS7};
pub use roots::{bisect, brent_root, BrentResult, BRENT_MAX_EVALUATIONS, BRENT_X_TOL};

use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum OdeError {
    #[error("Newton iteration did not converge (final residual {residual:.3e}): {detail}")]
    NonConvergence { residual: f64, detail: String },
    #[error("mesh refinement needs {nodes} nodes, above the cap of {cap}")]
    MeshOverflow { nodes: usize, cap: usize },
    #[error("step size underflow at r = {r}")]
    StepSizeUnderflow { r: f64 },
    #[error("operands live on different spans ({left} vs {right})")]
    SpanMismatch { left: f64, right: f64 },
    #[error("no sign change on [{lo}, {hi}] (f = {f_lo:.3e}, {f_hi:.3e})")]
    NoSignChange { lo: f64, hi: f64, f_lo: f64, f_hi: f64 },
    #[error("root finder hit the cap of {evaluations} evaluations (best estimate {best})")]
    MaxEvaluations { evaluations: usize, best: f64 },
    #[error("singular linear system (pivot ratio {pivot_ratio:.3e})")]
    SingularMatrix { pivot_ratio: f64 },
    #[error("invalid mesh: {0}")]
    InvalidMesh(String),
    #[error("invalid input: {0}")]
    InvalidInput(String),
}
