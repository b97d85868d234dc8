//! Dirac initial-boundary value problems on strips with timelike boundary,
//! solved as symmetric positive hyperbolic systems with local boundary
//! conditions, together with numerical certificates for the energy,
//! causality, uniqueness, weak-solution and Green-operator properties.

pub mod boundary;
pub mod clifford;
pub mod data;
pub mod error;
pub mod expr;
pub mod geometry;
pub mod linalg;
pub mod solver;
pub mod system;
pub mod verify;

pub use boundary::{
    adjoint_condition, admissibility_check, compatibility_jets, from_matrix, make_chirality, make_mit,
    make_mit_moving, BoundaryCondition, BoundaryKind, JetReport, Side,
};
pub use clifford::{build_gamma_rep, verify_clifford, AlgebraReport, GammaRep};
pub use data::{CauchyData, SpinorField};
pub use error::{Error, Result};
pub use expr::Expr;
pub use geometry::{causal_envelope, make_half_minkowski, CausalEnvelope, Direction, Geometry, Interval, SpacetimeBox};
pub use linalg::{CMat, CVec, C64};
pub use solver::{reduce_zero_initial, solve_ibvp, solve_ibvp_with, Grid, SolveOptions, Trajectory};
pub use system::{
    check_symbol, choose_lambda, compute_kappa, dirac_to_system, normal_form, Covector, HyperbolicSystem,
    KappaField, NormalForm, Region,
};
pub use verify::{Certificate, OracleSolution, OrderReport};
