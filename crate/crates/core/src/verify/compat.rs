//! Corner compatibility: smooth data satisfying the jet conditions converge
//! at full order, while data violating them carry a jump along the
//! characteristic leaving the corner and degrade the order.

use std::time::Instant;

use serde::Serialize;

use crate::boundary::{compatibility_jets, make_mit, BoundaryCondition, JetReport, Side};
use crate::clifford::build_gamma_rep;
use crate::data::{CauchyData, SpinorField};
use crate::error::{Error, Result};
use crate::geometry::{make_half_minkowski, Interval};
use crate::solver::{solve_ibvp, Grid, DEFAULT_CFL};
use crate::system::{dirac_to_system, normal_form, NormalForm};

use super::certificate::{Certificate, Check};
use super::convergence::{oracle_ladder, OrderReport};
use super::oracle::{characteristic_oracle, OracleSolution};

pub const COMPATIBLE_ORDER: f64 = 1.9;
pub const INCOMPATIBLE_ORDER: f64 = 1.2;
/// Minimum number of snapshots in which the jump must be located.
pub const MIN_TRACKED: usize = 5;
/// Latest time at which the jump is tracked.
pub const TRACK_UNTIL: f64 = 0.5;

#[derive(Debug, Clone)]
pub struct CompatibilityStudy {
    pub nf: NormalForm,
    pub bc_left: BoundaryCondition,
    pub bc_right: BoundaryCondition,
    pub compatible: CauchyData,
    /// Data whose jets violate the left corner conditions.
    pub incompatible: CauchyData,
    pub resolutions: Vec<usize>,
    pub horizon: f64,
    pub cfl: f64,
}

impl CompatibilityStudy {
    /// Flat strip of length 4, `λ = 1`, MIT walls; an interior Gaussian
    /// against a plateau that is not in `ker M` at `z = 0`.
    pub fn standard(resolutions: Vec<usize>) -> Result<Self> {
        let rep = build_gamma_rep(1)?;
        let horizon = TRACK_UNTIL;
        let geometry = make_half_minkowski(1, 0.0, horizon, 4.0)?;
        let nf = normal_form(&dirac_to_system(&geometry, &rep, 1.0, None)?)?;
        let compatible = CauchyData::new(
            SpinorField::parse(&["gaussian(2, 0.25)", "0.5i*gaussian(2, 0.25)"])?,
            SpinorField::zero(2),
        )
        .with_initial_support(Interval::new(0.5, 3.5));
        Self::new(
            nf,
            make_mit(&rep, Side::Left),
            make_mit(&rep, Side::Right),
            compatible,
            resolutions,
            horizon,
            DEFAULT_CFL,
        )
    }

    /// Pairs `compatible` with plateau data `u·exp(−(z/(0.375L))⁸)` where
    /// `u` is the basis vector least compatible with the left condition.
    pub fn new(
        nf: NormalForm,
        bc_left: BoundaryCondition,
        bc_right: BoundaryCondition,
        compatible: CauchyData,
        resolutions: Vec<usize>,
        horizon: f64,
        cfl: f64,
    ) -> Result<Self> {
        let n = nf.rank();
        let m = bc_left.m();
        let worst = (0..n)
            .max_by(|&a, &b| m.column(a).norm().total_cmp(&m.column(b).norm()))
            .expect("non-empty representation");
        let reach = 0.375 * nf.system.geometry.length;
        let exprs: Vec<String> =
            (0..n).map(|i| if i == worst { format!("exp(-(z/{reach})^8)") } else { "0".into() }).collect();
        let refs: Vec<&str> = exprs.iter().map(String::as_str).collect();
        let incompatible = CauchyData::new(SpinorField::parse(&refs)?, SpinorField::zero(n))
            .with_initial_support(Interval::new(0.0, (2.0 * reach).min(nf.system.geometry.length)));
        Ok(Self { nf, bc_left, bc_right, compatible, incompatible, resolutions, horizon, cfl })
    }

    fn oracle(&self, data: &CauchyData) -> Result<OracleSolution> {
        characteristic_oracle(&self.nf, &self.bc_left, &self.bc_right, data)
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct CompatibilityReport {
    pub certificate: Certificate,
    pub compatible_jets: JetReport,
    pub incompatible_jets: JetReport,
    pub compatible_order: OrderReport,
    pub incompatible_order: OrderReport,
    /// `[t, located, expected]` for each tracked snapshot.
    pub tracking: Vec<[f64; 3]>,
}

/// Locates the jump of `w₊` behind the corner characteristic `z = c t` by
/// the crossing of the level halfway between the exact values on either side.
fn track_jump(study: &CompatibilityStudy, oracle: &OracleSolution, nz: usize) -> Result<(Vec<[f64; 3]>, f64)> {
    let length = study.nf.system.geometry.length;
    let grid = Grid::new(nz, length, study.cfl)?;
    let traj = solve_ibvp(&study.nf, &study.bc_left, &study.bc_right, &study.incompatible, &grid, study.horizon)?;
    let speed = oracle.speed_plus;
    let mut out = Vec::new();
    for (k, &t) in traj.times.iter().enumerate() {
        if t < 10.0 * grid.dz || t > TRACK_UNTIL + 1e-12 {
            continue;
        }
        let front = speed * t;
        let ahead = oracle.w_plus(t, front + 1e-9);
        let behind = oracle.w_plus(t, front - 1e-9);
        let jump = behind - ahead;
        if jump.norm() < 1e-8 {
            continue;
        }
        let mid = (ahead + behind) * 0.5;
        let level = |i: usize| {
            let (wp, _) = oracle.amplitudes_of(traj.node(k, i));
            ((wp - mid) * jump.conj()).re / jump.norm_sqr()
        };
        let first = (((front + 0.25) / grid.dz).floor() as usize).min(nz - 1);
        let mut located = None;
        for i in (1..=first).rev() {
            let (hi, lo) = (level(i), level(i - 1));
            if hi < 0.0 && lo >= 0.0 {
                let s = hi / (hi - lo);
                located = Some(traj.z(i) - s * grid.dz);
                break;
            }
        }
        if let Some(z) = located {
            out.push([t, z, front]);
        }
    }
    Ok((out, grid.dz))
}

pub fn compatibility_certificate(study: &CompatibilityStudy, k_max: usize) -> Result<CompatibilityReport> {
    let start = Instant::now();
    if study.resolutions.is_empty() {
        return Err(Error::Config("no resolutions given".into()));
    }
    let left = &study.bc_left;
    let compatible_jets = compatibility_jets(&study.nf, left, &study.compatible.initial, &study.compatible.source, k_max)?;
    let incompatible_jets =
        compatibility_jets(&study.nf, left, &study.incompatible.initial, &study.incompatible.source, k_max)?;

    let oracle_c = study.oracle(&study.compatible)?;
    let oracle_i = study.oracle(&study.incompatible)?;
    let ladder = |data: &CauchyData, oracle: &OracleSolution| {
        oracle_ladder(&study.nf, left, &study.bc_right, data, oracle, &study.resolutions, study.horizon, study.cfl)
    };
    let compatible_order = ladder(&study.compatible, &oracle_c)?;
    let incompatible_order = ladder(&study.incompatible, &oracle_i)?;

    let finest = *study.resolutions.iter().max().expect("non-empty");
    let (tracking, dz) = track_jump(study, &oracle_i, finest)?;
    let worst = tracking.iter().map(|r| (r[1] - r[2]).abs()).fold(0.0, f64::max);

    let checks = vec![
        Check::at_least("compatible_jets", compatible_jets.compatible as u8 as f64, 1.0),
        Check::at_least("incompatible_rho1", incompatible_jets.rho(1), incompatible_jets.tolerance),
        Check::at_least("compatible_order", compatible_order.min_order(), COMPATIBLE_ORDER),
        Check::at_most("incompatible_order", incompatible_order.max_order(), INCOMPATIBLE_ORDER),
        Check::at_least("tracked_snapshots", tracking.len() as f64, MIN_TRACKED as f64),
        Check::at_most("tracking_error", if tracking.is_empty() { f64::INFINITY } else { worst }, 2.0 * dz),
    ];
    let certificate = Certificate::from_checks("compatibility", checks)
        .with_quantity("compatible_order", compatible_order.min_order())
        .with_quantity("incompatible_order", incompatible_order.max_order())
        .with_quantity("tracking_error", worst)
        .with_quantity("rho1_incompatible", incompatible_jets.rho(1))
        .with_runtime(start.elapsed());
    Ok(CompatibilityReport {
        certificate,
        compatible_jets,
        incompatible_jets,
        compatible_order,
        incompatible_order,
        tracking,
    })
}
