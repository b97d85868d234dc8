//! `‖Ψ‖_{L²(strip)} ≤ κ_min⁻¹ ‖𝔣‖_{L²(strip)}` for zero initial data.

use std::time::Instant;

use crate::boundary::{adjoint_condition, BoundaryCondition};
use crate::data::{CauchyData, SpinorField};
use crate::error::{Error, Result};
use crate::solver::{solve_ibvp, Grid, Trajectory};
use crate::system::{compute_kappa, normal_form, HyperbolicSystem, Region};

use super::certificate::Certificate;
use super::norms::{field_strip_norm, strip_norm};

pub const ENERGY_TOL: f64 = 0.02;

pub fn energy_certificate(traj: &Trajectory, system: &HyperbolicSystem, source: &SpinorField) -> Result<Certificate> {
    energy_certificate_with_tol(traj, system, source, ENERGY_TOL)
}

pub fn energy_certificate_with_tol(
    traj: &Trajectory,
    system: &HyperbolicSystem,
    source: &SpinorField,
    tol: f64,
) -> Result<Certificate> {
    let start = Instant::now();
    if !(system.lambda > 0.0) {
        return Err(Error::NotApplicable(format!("λ = {} must be positive", system.lambda)));
    }
    let kappa = compute_kappa(system, &Region::lattice(&system.geometry, 3, 3))?.min_eig;
    if !(kappa > 0.0) {
        return Err(Error::NotApplicable(format!("κ is not positive (min eigenvalue {kappa})")));
    }
    if traj.fields[0].iter().any(|x| x.norm() != 0.0) {
        return Err(Error::NotApplicable("initial data must vanish".into()));
    }
    let grid = Grid { nz: traj.nz, length: traj.length, dz: traj.dz, cfl: 1.0 };
    let psi = strip_norm(traj);
    let f = field_strip_norm(source, &traj.times, &grid);
    Ok(Certificate::bounded("energy", psi, f / kappa, tol)
        .with_quantity("psi_norm", psi)
        .with_quantity("source_norm", f)
        .with_quantity("kappa_min", kappa)
        .with_quantity("ratio", if f > 0.0 { psi / f } else { 0.0 })
        .with_runtime(start.elapsed()))
}

/// Solves `𝔖†Φ = 𝔤` with `Φ|_{t=T} = 0` and `M†Φ = 0`, in reversed time
/// `s = T − t`. Returns the reversed system and the trajectory in `s`.
pub fn solve_adjoint(
    system: &HyperbolicSystem,
    bc_left: &BoundaryCondition,
    bc_right: &BoundaryCondition,
    source: &SpinorField,
    grid: &Grid,
) -> Result<(HyperbolicSystem, SpinorField, Trajectory)> {
    let reversed = system.time_reversed_adjoint();
    let nf = normal_form(&reversed)?;
    let left = adjoint_condition(bc_left, &system.rep)?;
    let right = adjoint_condition(bc_right, &system.rep)?;
    let horizon = system.geometry.time_horizon;
    let g = source.clone();
    let rank = source.components();
    let reversed_source = SpinorField::from_fn(rank, move |s, z, out| g.eval(horizon - s, z, out));
    let data = CauchyData::new(SpinorField::zero(rank), reversed_source.clone());
    let traj = solve_ibvp(&nf, &left, &right, &data, grid, horizon)?;
    Ok((reversed, reversed_source, traj))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::boundary::{make_mit, Side};
    use crate::clifford::build_gamma_rep;
    use crate::geometry::make_half_minkowski;
    use crate::system::dirac_to_system;

    #[test]
    fn zero_source_passes_trivially_and_lambda_zero_is_not_applicable() {
        let rep = build_gamma_rep(1).unwrap();
        let g = make_half_minkowski(1, 0.0, 0.5, 2.0).unwrap();
        let sys = dirac_to_system(&g, &rep, 1.0, None).unwrap();
        let nf = normal_form(&sys).unwrap();
        let grid = Grid::new(41, 2.0, 0.5).unwrap();
        let traj = solve_ibvp(
            &nf,
            &make_mit(&rep, Side::Left),
            &make_mit(&rep, Side::Right),
            &CauchyData::zero(2),
            &grid,
            0.5,
        )
        .unwrap();
        let c = energy_certificate(&traj, &sys, &SpinorField::zero(2)).unwrap();
        assert!(c.passed && c.measured == 0.0);
        assert!(matches!(
            energy_certificate(&traj, &sys.with_lambda(0.0), &SpinorField::zero(2)),
            Err(Error::NotApplicable(_))
        ));
    }
}
