//! Observed orders of accuracy over nested grid ladders.

use rayon::prelude::*;
use serde::Serialize;

use crate::boundary::BoundaryCondition;
use crate::data::CauchyData;
use crate::error::{Error, Result};
use crate::solver::{solve_ibvp, Grid};
use crate::system::NormalForm;

use crate::linalg::C64;

use super::norms::{slice_error, z_weights};
use super::oracle::OracleSolution;

#[derive(Debug, Clone, Serialize, PartialEq)]
pub struct OrderReport {
    pub resolutions: Vec<usize>,
    pub spacings: Vec<f64>,
    pub errors: Vec<f64>,
    /// `ln(e_k/e_{k+1}) / ln(h_k/h_{k+1})` for each consecutive pair.
    pub orders: Vec<f64>,
    /// Order of the finest pair.
    pub asymptotic_order: f64,
}

impl OrderReport {
    pub fn min_order(&self) -> f64 {
        self.orders.iter().copied().fold(f64::INFINITY, f64::min)
    }

    pub fn max_order(&self) -> f64 {
        self.orders.iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }

    pub fn within(&self, lo: f64, hi: f64) -> bool {
        self.orders.iter().all(|&p| p >= lo && p <= hi)
    }

    /// CSV table `nz,dz,error,order` (no order on the first row).
    pub fn to_csv(&self) -> String {
        let mut s = String::from("nz,dz,error,order\n");
        for k in 0..self.resolutions.len() {
            let order = if k == 0 { String::new() } else { format!("{:.6}", self.orders[k - 1]) };
            s.push_str(&format!("{},{:.10e},{:.10e},{}\n", self.resolutions[k], self.spacings[k], self.errors[k], order));
        }
        s
    }
}

fn check_nested(resolutions: &[usize]) -> Result<()> {
    if resolutions.len() < 3 {
        return Err(Error::Config(format!("need at least 3 resolutions, got {}", resolutions.len())));
    }
    for w in resolutions.windows(2) {
        if w[0] < 2 || w[1] <= w[0] || (w[1] - 1) % (w[0] - 1) != 0 {
            return Err(Error::Config(format!("resolutions {} and {} are not nested", w[0], w[1])));
        }
    }
    Ok(())
}

/// Runs `error(nz)` for each resolution (concurrently) and fits orders.
/// Resolutions must be increasing and nested: `nz_{k+1} − 1` a multiple of `nz_k − 1`.
pub fn convergence_study<F>(resolutions: &[usize], length: f64, error: F) -> Result<OrderReport>
where
    F: Fn(usize) -> Result<f64> + Sync,
{
    check_nested(resolutions)?;
    let errors: Vec<f64> = resolutions.par_iter().map(|&nz| error(nz)).collect::<Result<_>>()?;
    let spacings: Vec<f64> = resolutions.iter().map(|&nz| length / (nz - 1) as f64).collect();
    let orders: Vec<f64> = (0..resolutions.len() - 1)
        .map(|k| (errors[k] / errors[k + 1]).ln() / (spacings[k] / spacings[k + 1]).ln())
        .collect();
    Ok(OrderReport {
        resolutions: resolutions.to_vec(),
        spacings,
        asymptotic_order: *orders.last().expect("at least two pairs"),
        errors,
        orders,
    })
}

/// L² error at `t = T` against the characteristic oracle over a ladder.
#[allow(clippy::too_many_arguments)]
pub fn oracle_ladder(
    nf: &NormalForm,
    bc_left: &BoundaryCondition,
    bc_right: &BoundaryCondition,
    data: &CauchyData,
    oracle: &OracleSolution,
    resolutions: &[usize],
    horizon: f64,
    cfl: f64,
) -> Result<OrderReport> {
    let length = nf.system.geometry.length;
    convergence_study(resolutions, length, |nz| {
        let grid = Grid::new(nz, length, cfl)?;
        let traj = solve_ibvp(nf, bc_left, bc_right, data, &grid, horizon)?;
        Ok(slice_error(&traj, traj.snapshots() - 1, |t, z, out| oracle.eval(t, z, out)))
    })
}

/// Self-convergence when no exact solution is known: `e_k = ‖u_k − u_{k+1}‖`
/// at `t = T` on the nodes of the coarser grid. Needs at least 3 resolutions
/// and reports one error per consecutive pair.
#[allow(clippy::too_many_arguments)]
pub fn richardson_ladder(
    nf: &NormalForm,
    bc_left: &BoundaryCondition,
    bc_right: &BoundaryCondition,
    data: &CauchyData,
    resolutions: &[usize],
    horizon: f64,
    cfl: f64,
) -> Result<OrderReport> {
    let length = nf.system.geometry.length;
    check_nested(resolutions)?;
    let finals: Vec<Vec<C64>> = resolutions
        .par_iter()
        .map(|&nz| {
            let grid = Grid::new(nz, length, cfl)?;
            let traj = solve_ibvp(nf, bc_left, bc_right, data, &grid, horizon)?;
            Ok(traj.final_field().to_vec())
        })
        .collect::<Result<_>>()?;
    let rank = nf.rank();
    let errors: Vec<f64> = (0..resolutions.len() - 1)
        .map(|k| {
            let (nc, nfine) = (resolutions[k], resolutions[k + 1]);
            let stride = (nfine - 1) / (nc - 1);
            let dz = length / (nc - 1) as f64;
            let w = z_weights(nc, dz);
            (0..nc)
                .map(|i| {
                    let (u, v) = (&finals[k][i * rank..(i + 1) * rank], &finals[k + 1][i * stride * rank..(i * stride + 1) * rank]);
                    w[i] * u.iter().zip(v).map(|(a, b)| (a - b).norm_sqr()).sum::<f64>()
                })
                .sum::<f64>()
                .sqrt()
        })
        .collect();
    let coarse = &resolutions[..resolutions.len() - 1];
    let spacings: Vec<f64> = coarse.iter().map(|&nz| length / (nz - 1) as f64).collect();
    let orders: Vec<f64> = (0..errors.len() - 1)
        .map(|k| (errors[k] / errors[k + 1]).ln() / (spacings[k] / spacings[k + 1]).ln())
        .collect();
    Ok(OrderReport {
        resolutions: coarse.to_vec(),
        spacings,
        asymptotic_order: *orders.last().expect("at least one pair"),
        errors,
        orders,
    })
}
