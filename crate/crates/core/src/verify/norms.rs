//! Discrete L² norms: trapezoidal in z and t with the flat volume element.

use crate::data::SpinorField;
use crate::linalg::C64;
use crate::solver::{Grid, Trajectory};

/// Trapezoid weights for `nz` equally spaced nodes.
pub fn z_weights(nz: usize, dz: f64) -> Vec<f64> {
    let mut w = vec![dz; nz];
    w[0] = 0.5 * dz;
    w[nz - 1] = 0.5 * dz;
    w
}

/// Trapezoid weights for arbitrary increasing sample times.
pub fn t_weights(times: &[f64]) -> Vec<f64> {
    let n = times.len();
    if n < 2 {
        return vec![0.0; n];
    }
    (0..n)
        .map(|k| {
            let left = if k > 0 { times[k] - times[k - 1] } else { 0.0 };
            let right = if k + 1 < n { times[k + 1] - times[k] } else { 0.0 };
            0.5 * (left + right)
        })
        .collect()
}

fn slice_sq(u: &[C64], rank: usize, wz: &[f64]) -> f64 {
    u.chunks(rank)
        .zip(wz)
        .map(|(v, w)| w * v.iter().map(|x| x.norm_sqr()).sum::<f64>())
        .sum()
}

pub fn slice_norm(traj: &Trajectory, k: usize) -> f64 {
    slice_sq(&traj.fields[k], traj.rank, &z_weights(traj.nz, traj.dz)).sqrt()
}

pub fn strip_norm(traj: &Trajectory) -> f64 {
    let wz = z_weights(traj.nz, traj.dz);
    t_weights(&traj.times)
        .iter()
        .zip(&traj.fields)
        .map(|(wt, u)| wt * slice_sq(u, traj.rank, &wz))
        .sum::<f64>()
        .sqrt()
}

/// Strip norm of a field sampled on the trajectory's lattice.
pub fn field_strip_norm(field: &SpinorField, times: &[f64], grid: &Grid) -> f64 {
    let wz = z_weights(grid.nz, grid.dz);
    let rank = field.components();
    t_weights(times)
        .iter()
        .zip(times)
        .map(|(wt, &t)| {
            let u = sample_on(field, t, grid);
            wt * slice_sq(&u, rank, &wz)
        })
        .sum::<f64>()
        .sqrt()
}

/// Samples a field on the grid nodes, hitting `z = L` exactly.
pub fn sample_on(field: &SpinorField, t: f64, grid: &Grid) -> Vec<C64> {
    let n = field.components();
    let mut u = vec![C64::new(0.0, 0.0); grid.nz * n];
    for (i, chunk) in u.chunks_mut(n).enumerate() {
        field.eval(t, grid.z(i), chunk);
    }
    u
}

/// L² distance at snapshot `k` between the trajectory and `exact(t, z, out)`.
pub fn slice_error<F>(traj: &Trajectory, k: usize, exact: F) -> f64
where
    F: Fn(f64, f64, &mut [C64]),
{
    let wz = z_weights(traj.nz, traj.dz);
    let t = traj.times[k];
    let mut e = vec![C64::new(0.0, 0.0); traj.rank];
    let mut acc = 0.0;
    for i in 0..traj.nz {
        exact(t, traj.z(i), &mut e);
        let v = traj.node(k, i);
        acc += wz[i] * v.iter().zip(&e).map(|(a, b)| (a - b).norm_sqr()).sum::<f64>();
    }
    acc.sqrt()
}
