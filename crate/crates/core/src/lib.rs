//! Solver and necessary-condition verifier for Herglotz-type variational
//! problems: extremize `z(b)` subject to `ż = L(t, x, ẋ, z)`, `x(a) = α`,
//! `z(a) = γ`.
//!
//! ```
//! use herglotz::{shoot, HerglotzProblem, ShootingOptions};
//!
//! let p = HerglotzProblem::from_source(1, 0.0, 1.0, "dx1^2/2 - x1", vec![1.0], 0.0).unwrap();
//! let sol = shoot(&p, &[0.0], &ShootingOptions::default()).unwrap();
//! assert!((sol.v_star[0] - 1.0).abs() < 1e-8);
//! assert!((sol.z_b() + 7.0 / 6.0).abs() < 1e-6);
//! ```

pub mod conditions;
pub mod error;
pub mod expr;
pub mod extremal;
pub mod integrate;
pub mod io;
pub mod noether;
pub mod problem;
pub mod report;

/// Toolkit version, embedded in reports.
pub const VERSION: &str = env!("CARGO_PKG_VERSION");

pub use error::{Error, Result};
pub use expr::{parse, Env, Expr, Var};
pub use extremal::{el_explicit_form, shoot, ShootingOptions, ShootingResult};
pub use integrate::compute_psi_z;
pub use io::{FamilySpec, ProblemFile};
pub use noether::{InvarianceReport, TransformationFamily};
pub use problem::{HerglotzProblem, Multipliers, Trajectory};
pub use report::ResidualReport;
