//! Numerical laboratory for linear and semilinear fractional wave equations
//! ∂_t^α u + A u = f with Caputo order 1 < α < 2 and Dirichlet boundary.

pub mod error;
pub mod laplace;
pub mod linear;
pub mod mlf;
pub mod norms;
pub mod profiles;
pub mod propagators;
pub mod quad;
pub mod report;
pub mod semilinear;
pub mod spectral;
pub mod strichartz;

pub use error::{Error, Result};
pub use linear::{solve_linear, solve_linear_derivative, LinearSolver, SolutionTrajectory, SourceTerm, TimeGrid};
pub use mlf::{mlf_bound_constant, mlf_eval, mlf_moment, MLParams};
pub use norms::MixedNormSpec;
pub use propagators::PropagatorKind;
pub use semilinear::{NonlinearitySpec, PicardReport};
pub use spectral::{build_fd_basis, build_interval_basis, build_rectangle_basis, EigenBasis, ModalCoeffs};
pub use strichartz::ExponentSet;
