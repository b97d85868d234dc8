//! Numerical certificates for the properties of the Dirac initial-boundary
//! value problem, and the characteristic oracle they are checked against.

pub mod certificate;
pub mod compat;
pub mod convergence;
pub mod energy;
pub mod green;
pub mod norms;
pub mod oracle;
pub mod speed;
pub mod uniqueness;
pub mod weak;

pub use certificate::{Certificate, Check, Sense};
pub use compat::{compatibility_certificate, CompatibilityReport, CompatibilityStudy};
pub use convergence::{convergence_study, oracle_ladder, richardson_ladder, OrderReport};
pub use energy::{energy_certificate, energy_certificate_with_tol, solve_adjoint};
pub use green::{dirac_residual, green_apply, green_certificate, GreenDirection};
pub use oracle::{characteristic_oracle, reflection_certificate, OracleSolution};
pub use speed::{speed_certificate, speed_certificate_with, support_cone};
pub use uniqueness::{probe_invariance, uniqueness_certificate, uniqueness_certificate_with_tol, Problem};
pub use weak::{generate_test_fields, max_weak_residual, weak_residual, weak_residual_certificate, TestField};
