//! Determinism, Lipschitz stability in the source and causal independence
//! of probe readings.

use std::time::Instant;

use crate::boundary::BoundaryCondition;
use crate::data::{CauchyData, SpinorField};
use crate::error::{Error, Result};
use crate::geometry::SpacetimeBox;
use crate::linalg::C64;
use crate::solver::{node_norm, solve_ibvp_with, Grid, SolveOptions, Trajectory};
use crate::system::{compute_kappa, NormalForm, Region};

use super::certificate::{Certificate, Check};
use super::norms::{field_strip_norm, strip_norm};

pub const UNIQUENESS_TOL: f64 = 0.02;
pub const PROBE_TOL: f64 = 1e-8;

/// Everything needed to run one solve.
#[derive(Debug, Clone)]
pub struct Problem {
    pub nf: NormalForm,
    pub bc_left: BoundaryCondition,
    pub bc_right: BoundaryCondition,
    pub data: CauchyData,
    pub grid: Grid,
    pub horizon: f64,
    pub options: SolveOptions,
}

impl Problem {
    pub fn solve(&self) -> Result<Trajectory> {
        solve_ibvp_with(&self.nf, &self.bc_left, &self.bc_right, &self.data, &self.grid, self.horizon, &self.options)
    }

    pub fn with_source(&self, source: SpinorField) -> Self {
        let mut p = self.clone();
        p.data.source = source;
        p
    }
}

fn bitwise_equal(a: &Trajectory, b: &Trajectory) -> bool {
    a.times.len() == b.times.len()
        && a.times.iter().zip(&b.times).all(|(x, y)| x.to_bits() == y.to_bits())
        && a.fields.iter().zip(&b.fields).all(|(u, v)| {
            u.len() == v.len()
                && u.iter().zip(v).all(|(x, y)| x.re.to_bits() == y.re.to_bits() && x.im.to_bits() == y.im.to_bits())
        })
}

/// `δ = 0`: two runs must agree bit for bit. `δ > 0`: the source is perturbed
/// by `perturbation` rescaled to strip norm `δ`, and the solution difference
/// must obey `‖Ψ₁ − Ψ₂‖ ≤ δ/κ_min · (1 + tol)`.
pub fn uniqueness_certificate(problem: &Problem, delta: f64, perturbation: &SpinorField) -> Result<Certificate> {
    uniqueness_certificate_with_tol(problem, delta, perturbation, UNIQUENESS_TOL)
}

pub fn uniqueness_certificate_with_tol(
    problem: &Problem,
    delta: f64,
    perturbation: &SpinorField,
    tol: f64,
) -> Result<Certificate> {
    let start = Instant::now();
    if !(delta >= 0.0 && delta.is_finite()) {
        return Err(Error::Config(format!("perturbation size must be non-negative, got {delta}")));
    }
    let base = problem.solve()?;
    if delta == 0.0 {
        let again = problem.solve()?;
        let identical = bitwise_equal(&base, &again);
        return Ok(Certificate::from_checks("determinism", vec![Check::at_least(
            "bitwise_identical",
            identical as u8 as f64,
            1.0,
        )])
        .with_runtime(start.elapsed()));
    }
    let system = &problem.nf.system;
    let kappa = compute_kappa(system, &Region::lattice(&system.geometry, 3, 3))?.min_eig;
    if !(kappa > 0.0) {
        return Err(Error::NotApplicable(format!("κ is not positive (min eigenvalue {kappa})")));
    }
    let raw = field_strip_norm(perturbation, &base.times, &problem.grid);
    if raw == 0.0 {
        return Err(Error::Config("perturbation vanishes on the grid".into()));
    }
    let p = perturbation.scaled(C64::from(delta / raw));
    let other = problem.with_source(problem.data.source.plus(&p)).solve()?;
    let diff = strip_norm(&other.combine(1.0, &base, -1.0)?);
    Ok(Certificate::bounded("stability", diff, delta / kappa, tol)
        .with_quantity("delta", delta)
        .with_quantity("kappa_min", kappa)
        .with_quantity("difference", diff)
        .with_quantity("constant", diff / delta)
        .with_runtime(start.elapsed()))
}

/// Solves with and without a source perturbation and compares the readings
/// inside `probe`; the relative change must stay below [`PROBE_TOL`].
pub fn probe_invariance(problem: &Problem, perturbation: &SpinorField, probe: &SpacetimeBox) -> Result<Certificate> {
    let start = Instant::now();
    let base = problem.solve()?;
    let other = problem.with_source(problem.data.source.plus(perturbation)).solve()?;
    let mut change: f64 = 0.0;
    let mut scale: f64 = 0.0;
    for (k, &t) in base.times.iter().enumerate() {
        if !probe.t.contains(t) {
            continue;
        }
        for i in 0..base.nz {
            if !probe.z.contains(base.z(i)) {
                continue;
            }
            let (u, v) = (base.node(k, i), other.node(k, i));
            scale = scale.max(node_norm(u));
            let d: Vec<C64> = u.iter().zip(v).map(|(a, b)| a - b).collect();
            change = change.max(node_norm(&d));
        }
    }
    let relative = if scale > 0.0 { change / scale } else { change };
    Ok(Certificate::bounded("probe_invariance", relative, PROBE_TOL, 0.0)
        .with_quantity("absolute_change", change)
        .with_quantity("probe_scale", scale)
        .with_runtime(start.elapsed()))
}
