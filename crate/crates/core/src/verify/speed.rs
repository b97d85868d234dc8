//! Finite propagation speed: the computed support stays inside the causal
//! cone of the data supports, up to a stencil-width dilation.

use std::time::Instant;

use crate::data::CauchyData;
use crate::error::Result;
use crate::geometry::{box_envelope, causal_envelope, CausalEnvelope, Direction, Geometry};
use crate::solver::{node_norm, Trajectory};

use super::certificate::Certificate;

/// Slice at `t` of the causal cone of the data: future of the initial support
/// from `t = 0` and of each source box from its first instant (or the past
/// cones from `t0` and the last instants for `Direction::Past`).
pub fn support_cone(geometry: &Geometry, data: &CauchyData, direction: Direction, t0: f64, t: f64) -> Result<CausalEnvelope> {
    let mut env = causal_envelope(geometry, &data.initial_support, t0, direction, t)?;
    for b in &data.source_support {
        env = env.union(box_envelope(geometry, b, direction, t)?);
    }
    Ok(env)
}

pub fn speed_certificate(traj: &Trajectory, data: &CauchyData, geometry: &Geometry) -> Result<Certificate> {
    speed_certificate_with(traj, data, geometry, 2.0 * traj.dz, Direction::Future, 0.0)
}

/// Largest distance from a supported node to the cone, against `dilation`.
pub fn speed_certificate_with(
    traj: &Trajectory,
    data: &CauchyData,
    geometry: &Geometry,
    dilation: f64,
    direction: Direction,
    t0: f64,
) -> Result<Certificate> {
    let start = Instant::now();
    let mut worst: f64 = 0.0;
    let mut worst_time = 0.0;
    let mut checked = 0usize;
    for (k, &t) in traj.times.iter().enumerate() {
        let norms: Vec<f64> = (0..traj.nz).map(|i| node_norm(traj.node(k, i))).collect();
        let max = norms.iter().copied().fold(0.0, f64::max);
        if max == 0.0 {
            continue;
        }
        let cone = support_cone(geometry, data, direction, t0, t.clamp(0.0, geometry.time_horizon))?;
        let thr = traj.support_eps * max;
        for (i, &v) in norms.iter().enumerate() {
            if v > thr {
                checked += 1;
                let d = if cone.is_empty() { geometry.length } else { cone.distance(traj.z(i)) };
                if d > worst {
                    worst = d;
                    worst_time = t;
                }
            }
        }
    }
    Ok(Certificate::bounded("finite_speed", worst, dilation, 0.0)
        .with_quantity("max_excess", worst)
        .with_quantity("time_of_max_excess", worst_time)
        .with_quantity("dilation", dilation)
        .with_quantity("supported_nodes", checked as f64)
        .with_runtime(start.elapsed()))
}
