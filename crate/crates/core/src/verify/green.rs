//! Advanced and retarded Green operators `G±` of the Dirac operator realised
//! by forward and backward solves, with discrete checks of `D G± f = f` and
//! of the support property `supp G±f ⊆ J±(supp f)`.

use std::time::Instant;

use serde::Serialize;

use crate::boundary::BoundaryCondition;
use crate::data::{CauchyData, SpinorField};
use crate::error::{Error, Result};
use crate::geometry::{Direction, SpacetimeBox};
use crate::linalg::{c, CMat, C64};
use crate::solver::{solve_ibvp, Grid, Trajectory};
use crate::system::{normal_form, HyperbolicSystem};

use super::certificate::{Certificate, Check};
use super::norms::{t_weights, z_weights};
use super::speed::speed_certificate_with;

/// Required reduction of `‖D G f − f‖` under one grid halving.
pub const GREEN_REDUCTION: f64 = 3.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum GreenDirection {
    /// `G⁺`: zero before the support of `f`, solved forward in time.
    Advanced,
    /// `G⁻`: zero after the support of `f`, solved backward in time.
    Retarded,
}

fn check_support(system: &HyperbolicSystem, support: &SpacetimeBox) -> Result<()> {
    let horizon = system.geometry.time_horizon;
    if !(support.t.lo > 0.0 && support.t.hi < horizon && support.t.lo <= support.t.hi) {
        return Err(Error::Config(format!(
            "source support [{}, {}] must lie strictly inside (0, {horizon})",
            support.t.lo, support.t.hi
        )));
    }
    Ok(())
}

fn reversed(traj: Trajectory, horizon: f64) -> Trajectory {
    let mut out = traj;
    out.times = out.times.iter().rev().map(|s| (horizon - s).max(0.0)).collect();
    out.fields.reverse();
    out.envelopes.reverse();
    out
}

/// `ψ = G±f` for a Dirac source `f` (`Dψ = f`), on the whole strip `[0, T]`.
pub fn green_apply(
    system: &HyperbolicSystem,
    bc_left: &BoundaryCondition,
    bc_right: &BoundaryCondition,
    f: &SpinorField,
    support: &SpacetimeBox,
    direction: GreenDirection,
    grid: &Grid,
) -> Result<Trajectory> {
    check_support(system, support)?;
    let horizon = system.geometry.time_horizon;
    let system = system.with_lambda(0.0);
    let gauge: CMat = system.rep.gamma0() * c(0.0, -1.0);
    let source = f.mapped(&gauge, 0.0);
    let n = system.rank();
    match direction {
        GreenDirection::Advanced => {
            let nf = normal_form(&system)?;
            let data = CauchyData::new(SpinorField::zero(n), source).with_source_support(*support);
            solve_ibvp(&nf, bc_left, bc_right, &data, grid, horizon)
        }
        GreenDirection::Retarded => {
            let nf = normal_form(&system.time_reversed_inverse())?;
            let reversed_source = SpinorField::from_fn(n, move |s, z, out| {
                source.eval(horizon - s, z, out);
                for x in out.iter_mut() {
                    *x = -*x;
                }
            });
            let mirrored = SpacetimeBox {
                t: crate::geometry::Interval::new(horizon - support.t.hi, horizon - support.t.lo),
                z: support.z,
            };
            let data = CauchyData::new(SpinorField::zero(n), reversed_source).with_source_support(mirrored);
            Ok(reversed(solve_ibvp(&nf, bc_left, bc_right, &data, grid, horizon)?, horizon))
        }
    }
}

fn diff_weights(k: usize, len: usize, h: f64) -> [(usize, f64); 3] {
    let s = 0.5 / h;
    if k == 0 {
        [(0, -3.0 * s), (1, 4.0 * s), (2, -s)]
    } else if k + 1 == len {
        [(len - 1, 3.0 * s), (len - 2, -4.0 * s), (len - 3, s)]
    } else {
        [(k - 1, -s), (k, 0.0), (k + 1, s)]
    }
}

/// `‖Dψ − f‖_{L²(strip)}` with `Dψ = iγ₀(A₀∂tψ + A_z̃∂z̃ψ + B₀ψ)`, `B₀` the
/// zero-order term without gauge, and second-order differences in `t` and `z̃`.
/// The trajectory must store every step.
pub fn dirac_residual(traj: &Trajectory, system: &HyperbolicSystem, f: &SpinorField) -> Result<f64> {
    let nt = traj.times.len();
    if nt < 3 || traj.nz < 3 {
        return Err(Error::Config("need at least three snapshots and nodes".into()));
    }
    let dt = traj.times[1] - traj.times[0];
    if traj.times.windows(2).any(|w| ((w[1] - w[0]) - dt).abs() > 1e-9 * dt) {
        return Err(Error::Config("snapshots must be equally spaced in time".into()));
    }
    let n = traj.rank;
    let ig0 = system.rep.gamma0() * c(0.0, 1.0);
    let a0 = &ig0 * system.a0_at(0.0, 0.0);
    let az = &ig0 * system.a_normal_at(0.0, 0.0);
    let b0 = &ig0 * &system.extra;
    let wz = z_weights(traj.nz, traj.dz);
    let wt = t_weights(&traj.times);
    let mut fv = vec![C64::new(0.0, 0.0); n];
    let mut total = 0.0;
    for k in 0..nt {
        let tw = diff_weights(k, nt, dt);
        let mut slice = 0.0;
        for i in 0..traj.nz {
            let zw = diff_weights(i, traj.nz, traj.dz);
            f.eval(traj.times[k], traj.z(i), &mut fv);
            for r in 0..n {
                let mut acc = -fv[r];
                for col in 0..n {
                    let psi_t: C64 = tw.iter().map(|&(kk, w)| traj.node(kk, i)[col] * w).sum();
                    let psi_z: C64 = zw.iter().map(|&(ii, w)| traj.node(k, ii)[col] * w).sum();
                    acc += a0[(r, col)] * psi_t + az[(r, col)] * psi_z + b0[(r, col)] * traj.node(k, i)[col];
                }
                slice += wz[i] * acc.norm_sqr();
            }
        }
        total += wt[k] * slice;
    }
    Ok(total.sqrt())
}

/// Residual reduction over a refinement pair and the support property, for both directions.
pub fn green_certificate(
    system: &HyperbolicSystem,
    bc_left: &BoundaryCondition,
    bc_right: &BoundaryCondition,
    f: &SpinorField,
    support: &SpacetimeBox,
    coarse: &Grid,
    fine: &Grid,
) -> Result<Certificate> {
    let start = Instant::now();
    if fine.dz >= coarse.dz {
        return Err(Error::Config("second grid must be finer than the first".into()));
    }
    let geometry = &system.geometry;
    let horizon = geometry.time_horizon;
    let data = CauchyData::new(SpinorField::zero(system.rank()), SpinorField::zero(system.rank()))
        .with_source_support(*support);
    let mut checks = Vec::new();
    let mut cert_quantities = Vec::new();
    for (direction, label, cone, t0) in [
        (GreenDirection::Advanced, "advanced", Direction::Future, 0.0),
        (GreenDirection::Retarded, "retarded", Direction::Past, horizon),
    ] {
        let tc = green_apply(system, bc_left, bc_right, f, support, direction, coarse)?;
        let tf = green_apply(system, bc_left, bc_right, f, support, direction, fine)?;
        let rc = dirac_residual(&tc, system, f)?;
        let rf = dirac_residual(&tf, system, f)?;
        let reduction = if rf > 0.0 { rc / rf } else { f64::INFINITY };
        checks.push(Check::at_least(&format!("{label}_residual_reduction"), reduction, GREEN_REDUCTION));
        let speed = speed_certificate_with(&tf, &data, geometry, 2.0 * fine.dz, cone, t0)?;
        checks.push(Check::at_most(&format!("{label}_support_excess"), speed.measured, speed.bound));
        cert_quantities.push((format!("{label}_residual_coarse"), rc));
        cert_quantities.push((format!("{label}_residual_fine"), rf));
    }
    let mut cert = Certificate::from_checks("green", checks);
    for (k, v) in cert_quantities {
        cert = cert.with_quantity(&k, v);
    }
    Ok(cert.with_runtime(start.elapsed()))
}
