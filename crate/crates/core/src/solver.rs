//! Method-of-lines integration of `∂tΨ = 𝔊Ψ + 𝔈𝔣` on `[0, L]` with classic
//! RK4, second-order differences and boundary conditions imposed by
//! projecting the wall nodes onto `ker M` after every stage.

use serde::Serialize;

use crate::boundary::{BoundaryCondition, Side};
use crate::data::{CauchyData, SpinorField};
use crate::error::{Error, Result};
use crate::expr::Var;
use crate::geometry::{Interval, SpacetimeBox};
use crate::linalg::{weighted_projector, CMat, C64};
use crate::system::NormalForm;

pub const DEFAULT_CFL: f64 = 0.5;
pub const SUPPORT_EPS: f64 = 1e-10;

/// Amplitude beyond which a run is declared divergent.
const BLOWUP: f64 = 1e150;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Grid {
    pub nz: usize,
    pub length: f64,
    pub dz: f64,
    pub cfl: f64,
}

impl Grid {
    pub fn new(nz: usize, length: f64, cfl: f64) -> Result<Self> {
        if nz < 5 {
            return Err(Error::Config(format!("need at least 5 grid points, got {nz}")));
        }
        if !(length > 0.0 && length.is_finite()) {
            return Err(Error::Config(format!("length must be positive, got {length}")));
        }
        if !(cfl > 0.0 && cfl <= 1.0) {
            return Err(Error::Config(format!("CFL violation: cfl = {cfl} must lie in (0, 1]")));
        }
        Ok(Self { nz, length, dz: length / (nz - 1) as f64, cfl })
    }

    pub fn z(&self, i: usize) -> f64 {
        if i + 1 == self.nz {
            self.length
        } else {
            i as f64 * self.dz
        }
    }

    /// Number of uniform steps covering `[0, T]` for characteristic speed `v_max`.
    pub fn steps_for(&self, horizon: f64, v_max: f64) -> usize {
        let dt_max = self.cfl * self.dz / v_max.max(f64::MIN_POSITIVE);
        ((horizon / dt_max) - 1e-9).ceil().max(1.0) as usize
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SolveOptions {
    /// Store every k-th step (the final step is always stored).
    pub snapshot_every: usize,
    pub support_eps: f64,
    /// Negative control: doubles `Â_z̃`, so signals travel at twice the speed of light.
    pub plant_speed_violation: bool,
}

impl Default for SolveOptions {
    fn default() -> Self {
        Self { snapshot_every: 1, support_eps: SUPPORT_EPS, plant_speed_violation: false }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    pub times: Vec<f64>,
    /// `fields[k][i * rank + c]`: component `c` at node `i` of snapshot `k`.
    pub fields: Vec<Vec<C64>>,
    pub nz: usize,
    pub rank: usize,
    pub dz: f64,
    pub length: f64,
    pub dt: f64,
    /// Smallest interval holding all nodes with `|Ψ| > support_eps · max|Ψ|`.
    pub envelopes: Vec<Option<Interval>>,
    pub support_eps: f64,
    /// Largest `‖MΨ‖` on the wall nodes after accepted steps.
    pub boundary_residual: f64,
    /// Set when a sampled source was linearly interpolated in time.
    pub interpolated_source: bool,
}

#[derive(Debug, Clone, Serialize, PartialEq)]
pub struct TrajectorySummary {
    pub nz: usize,
    pub snapshots: usize,
    pub dt: f64,
    pub dz: f64,
    pub final_time: f64,
    pub final_norm: f64,
    pub max_amplitude: f64,
    pub boundary_residual: f64,
    pub interpolated_source: bool,
}

impl Trajectory {
    pub fn z(&self, i: usize) -> f64 {
        if i + 1 == self.nz {
            self.length
        } else {
            i as f64 * self.dz
        }
    }

    pub fn snapshots(&self) -> usize {
        self.times.len()
    }

    pub fn node(&self, k: usize, i: usize) -> &[C64] {
        &self.fields[k][i * self.rank..(i + 1) * self.rank]
    }

    pub fn final_field(&self) -> &[C64] {
        self.fields.last().expect("trajectory has at least one snapshot")
    }

    /// Builds a trajectory by sampling `f(t, z, out)` on a grid.
    pub fn sample<F>(grid: &Grid, rank: usize, times: &[f64], support_eps: f64, f: F) -> Self
    where
        F: Fn(f64, f64, &mut [C64]),
    {
        let fields: Vec<Vec<C64>> = times
            .iter()
            .map(|&t| {
                let mut v = vec![C64::new(0.0, 0.0); grid.nz * rank];
                for (i, chunk) in v.chunks_mut(rank).enumerate() {
                    f(t, grid.z(i), chunk);
                }
                v
            })
            .collect();
        let envelopes = fields.iter().map(|u| envelope(u, rank, grid, support_eps)).collect();
        let dt = if times.len() > 1 { times[1] - times[0] } else { 0.0 };
        Self {
            times: times.to_vec(),
            fields,
            nz: grid.nz,
            rank,
            dz: grid.dz,
            length: grid.length,
            dt,
            envelopes,
            support_eps,
            boundary_residual: 0.0,
            interpolated_source: false,
        }
    }

    /// Adds a constant spinor at every node and time (a non-solution control).
    pub fn shifted(&self, spinor: &[C64]) -> Self {
        let mut out = self.clone();
        for u in &mut out.fields {
            for chunk in u.chunks_mut(self.rank) {
                for (x, s) in chunk.iter_mut().zip(spinor) {
                    *x += s;
                }
            }
        }
        out
    }

    /// Pointwise `a·self + b·other` on identical lattices.
    pub fn combine(&self, a: f64, other: &Trajectory, b: f64) -> Result<Trajectory> {
        if self.nz != other.nz || self.times.len() != other.times.len() || self.rank != other.rank {
            return Err(Error::Structural("trajectories live on different lattices".into()));
        }
        let mut out = self.clone();
        for (u, v) in out.fields.iter_mut().zip(&other.fields) {
            for (x, y) in u.iter_mut().zip(v) {
                *x = *x * a + y * b;
            }
        }
        Ok(out)
    }

    pub fn summary(&self) -> TrajectorySummary {
        let max_amplitude = self
            .fields
            .iter()
            .flat_map(|u| u.chunks(self.rank).map(node_norm))
            .fold(0.0, f64::max);
        TrajectorySummary {
            nz: self.nz,
            snapshots: self.times.len(),
            dt: self.dt,
            dz: self.dz,
            final_time: *self.times.last().unwrap_or(&0.0),
            final_norm: crate::verify::norms::slice_norm(self, self.times.len() - 1),
            max_amplitude,
            boundary_residual: self.boundary_residual,
            interpolated_source: self.interpolated_source,
        }
    }
}

pub(crate) fn node_norm(v: &[C64]) -> f64 {
    v.iter().map(|x| x.norm_sqr()).sum::<f64>().sqrt()
}

fn envelope(u: &[C64], rank: usize, grid: &Grid, eps: f64) -> Option<Interval> {
    let norms: Vec<f64> = u.chunks(rank).map(node_norm).collect();
    let max = norms.iter().copied().fold(0.0, f64::max);
    if max == 0.0 {
        return None;
    }
    let thr = eps * max;
    let first = norms.iter().position(|&x| x > thr)?;
    let last = norms.iter().rposition(|&x| x > thr)?;
    Some(Interval::new(grid.z(first), grid.z(last)))
}

struct Wall {
    bc: BoundaryCondition,
    node: usize,
    projector: CMat,
}

impl Wall {
    fn new(bc: &BoundaryCondition, node: usize, a0: &CMat) -> Result<Self> {
        let projector = weighted_projector(&bc.kernel_at(0.0), a0)?;
        Ok(Self { bc: bc.clone(), node, projector })
    }

    /// Energy-orthogonal projection `K(K†A₀K)⁻¹K†A₀` of the wall node onto ker M.
    fn project(&self, t: f64, a0: &CMat, psi: &mut [C64], rank: usize) -> Result<()> {
        let p = if self.bc.is_time_dependent() {
            weighted_projector(&self.bc.kernel_at(t), a0)?
        } else {
            self.projector.clone()
        };
        let v = &mut psi[self.node * rank..(self.node + 1) * rank];
        let old: Vec<C64> = v.to_vec();
        crate::linalg::matvec(&p, &old, v);
        Ok(())
    }

    fn residual(&self, t: f64, psi: &[C64], rank: usize) -> f64 {
        let m = self.bc.m_at(t);
        let v = &psi[self.node * rank..(self.node + 1) * rank];
        let mut out = vec![C64::new(0.0, 0.0); rank];
        crate::linalg::matvec(&m, v, &mut out);
        node_norm(&out)
    }
}

struct Rhs<'a> {
    rank: usize,
    nz: usize,
    dz: f64,
    a_hat: Vec<C64>,
    b_hat: Vec<C64>,
    e: &'a CMat,
    source: &'a SpinorField,
    grid: Grid,
    scratch: Vec<C64>,
}

impl Rhs<'_> {
    fn eval(&mut self, t: f64, psi: &[C64], out: &mut [C64]) {
        let n = self.rank;
        let nz = self.nz;
        let inv2dz = 1.0 / (2.0 * self.dz);
        let has_source = !self.source.is_zero();
        let mut d = vec![C64::new(0.0, 0.0); n];
        for i in 0..nz {
            let at = |k: usize, c: usize| psi[k * n + c];
            for (c, dc) in d.iter_mut().enumerate() {
                *dc = if i == 0 {
                    (-3.0 * at(0, c) + 4.0 * at(1, c) - at(2, c)) * inv2dz
                } else if i == nz - 1 {
                    (3.0 * at(nz - 1, c) - 4.0 * at(nz - 2, c) + at(nz - 3, c)) * inv2dz
                } else {
                    (at(i + 1, c) - at(i - 1, c)) * inv2dz
                };
            }
            if has_source {
                self.source.eval(t, self.grid.z(i), &mut self.scratch);
            }
            for r in 0..n {
                let mut acc = C64::new(0.0, 0.0);
                for c in 0..n {
                    acc -= self.a_hat[r * n + c] * d[c] + self.b_hat[r * n + c] * at(i, c);
                    if has_source {
                        acc += self.e[(r, c)] * self.scratch[c];
                    }
                }
                out[i * n + r] = acc;
            }
        }
    }
}

pub fn solve_ibvp(
    nf: &NormalForm,
    bc_left: &BoundaryCondition,
    bc_right: &BoundaryCondition,
    data: &CauchyData,
    grid: &Grid,
    horizon: f64,
) -> Result<Trajectory> {
    solve_ibvp_with(nf, bc_left, bc_right, data, grid, horizon, &SolveOptions::default())
}

pub fn solve_ibvp_with(
    nf: &NormalForm,
    bc_left: &BoundaryCondition,
    bc_right: &BoundaryCondition,
    data: &CauchyData,
    grid: &Grid,
    horizon: f64,
    opts: &SolveOptions,
) -> Result<Trajectory> {
    let n = nf.rank();
    if bc_left.side != Side::Left || bc_right.side != Side::Right {
        return Err(Error::Config("boundary conditions must be given as (left, right)".into()));
    }
    for bc in [bc_left, bc_right] {
        if bc.rank() != n {
            return Err(Error::Structural("boundary condition rank differs from the system".into()));
        }
        if bc.kernel_dim() == 0 || bc.kernel_dim() == n {
            return Err(Error::Config(format!(
                "boundary condition with kernel dimension {} cannot be imposed",
                bc.kernel_dim()
            )));
        }
    }
    data.validate(n, grid.length)?;
    if !(horizon > 0.0 && horizon.is_finite()) {
        return Err(Error::Config(format!("time horizon must be positive, got {horizon}")));
    }
    let geometry_length = nf.system.geometry.length;
    if (geometry_length - grid.length).abs() > 1e-12 * geometry_length.max(1.0) {
        return Err(Error::Config(format!(
            "grid length {} differs from the strip length {geometry_length}",
            grid.length
        )));
    }
    if opts.snapshot_every == 0 {
        return Err(Error::Config("snapshot_every must be at least 1".into()));
    }

    let mut a_hat_m = nf.a_normal_hat().clone();
    if opts.plant_speed_violation {
        a_hat_m *= C64::from(2.0);
    }
    let v_max = nf.max_speed() * if opts.plant_speed_violation { 2.0 } else { 1.0 };
    let steps = grid.steps_for(horizon, v_max);
    let dt = horizon / steps as f64;

    let flat = |m: &CMat| -> Vec<C64> { (0..n).flat_map(|r| (0..n).map(move |c| (r, c))).map(|(r, c)| m[(r, c)]).collect() };
    let mut rhs = Rhs {
        rank: n,
        nz: grid.nz,
        dz: grid.dz,
        a_hat: flat(&a_hat_m),
        b_hat: flat(&nf.b_hat),
        e: &nf.e,
        source: &data.source,
        grid: *grid,
        scratch: vec![C64::new(0.0, 0.0); n],
    };
    let walls = [Wall::new(bc_left, 0, &nf.a0)?, Wall::new(bc_right, grid.nz - 1, &nf.a0)?];
    let project = |t: f64, psi: &mut [C64]| -> Result<()> {
        for w in &walls {
            w.project(t, &nf.a0, psi, n)?;
        }
        Ok(())
    };

    let mut psi = data.initial.sample(0.0, 0.0, grid.dz, grid.nz);
    if let Some(last) = psi.chunks_mut(n).last() {
        data.initial.eval(0.0, grid.length, last);
    }
    let len = psi.len();
    let mut times = vec![0.0];
    let mut fields = vec![psi.clone()];
    let mut envelopes = vec![envelope(&psi, n, grid, opts.support_eps)];
    let mut boundary_residual: f64 = 0.0;
    let (mut k1, mut k2, mut k3, mut k4, mut tmp) =
        (vec![C64::new(0.0, 0.0); len], vec![C64::new(0.0, 0.0); len], vec![C64::new(0.0, 0.0); len], vec![C64::new(0.0, 0.0); len], vec![C64::new(0.0, 0.0); len]);

    for step in 0..steps {
        let t = step as f64 * dt;
        rhs.eval(t, &psi, &mut k1);
        for j in 0..len {
            tmp[j] = psi[j] + k1[j] * (0.5 * dt);
        }
        project(t + 0.5 * dt, &mut tmp)?;
        rhs.eval(t + 0.5 * dt, &tmp, &mut k2);
        for j in 0..len {
            tmp[j] = psi[j] + k2[j] * (0.5 * dt);
        }
        project(t + 0.5 * dt, &mut tmp)?;
        rhs.eval(t + 0.5 * dt, &tmp, &mut k3);
        for j in 0..len {
            tmp[j] = psi[j] + k3[j] * dt;
        }
        project(t + dt, &mut tmp)?;
        rhs.eval(t + dt, &tmp, &mut k4);
        for j in 0..len {
            psi[j] += (k1[j] + k2[j] * 2.0 + k3[j] * 2.0 + k4[j]) * (dt / 6.0);
        }
        let t_new = if step + 1 == steps { horizon } else { (step + 1) as f64 * dt };
        project(t_new, &mut psi)?;
        if psi.iter().any(|x| !x.re.is_finite() || !x.im.is_finite() || x.norm() > BLOWUP) {
            return Err(Error::Divergence { time: t_new });
        }
        for w in &walls {
            boundary_residual = boundary_residual.max(w.residual(t_new, &psi, n));
        }
        if (step + 1) % opts.snapshot_every == 0 || step + 1 == steps {
            times.push(t_new);
            envelopes.push(envelope(&psi, n, grid, opts.support_eps));
            fields.push(psi.clone());
        }
    }

    Ok(Trajectory {
        times,
        fields,
        nz: grid.nz,
        rank: n,
        dz: grid.dz,
        length: grid.length,
        dt: dt * opts.snapshot_every as f64,
        envelopes,
        support_eps: opts.support_eps,
        boundary_residual,
        interpolated_source: data.source.is_time_interpolated(),
    })
}

/// Trades initial data for a source: with `Ψ̃ = Ψ − 𝔥`, `𝔖Ψ̃ = 𝔣 − 𝔖𝔥`, so
/// `𝔣̃ = 𝔣 − A_z̃ ∂z̃𝔥 − B𝔥` (the data do not depend on t or transverse
/// coordinates) and `h̃ = 0`.
pub fn reduce_zero_initial(data: &CauchyData, nf: &NormalForm) -> Result<CauchyData> {
    if data.initial.is_zero() {
        return Ok(data.clone());
    }
    let h = &data.initial;
    let n = nf.rank();
    // Surface missing derivative information early.
    h.derivative(0, 1, 0.0, 0.0)?;
    let a = -nf.a_normal();
    let b = -&nf.b_sym;
    let correction = if let Some(exprs) = h.exprs() {
        let hz = SpinorField::from_exprs(exprs.iter().map(|e| e.diff(Var::Z)).collect());
        hz.mapped(&a, 0.0).plus(&h.mapped(&b, 0.0))
    } else {
        let h = h.clone();
        SpinorField::from_fn(n, move |_, z, out| {
            let hv = h.value(0.0, z);
            let hz = h.derivative(0, 1, 0.0, z).unwrap_or_else(|_| vec![C64::new(0.0, 0.0); hv.len()]);
            for (r, o) in out.iter_mut().enumerate() {
                let mut acc = C64::new(0.0, 0.0);
                for c in 0..hv.len() {
                    acc += a[(r, c)] * hz[c] + b[(r, c)] * hv[c];
                }
                *o = acc;
            }
        })
    };
    let horizon = nf.system.geometry.time_horizon;
    let mut source_support = data.source_support.clone();
    source_support.extend(
        data.initial_support
            .iter()
            .map(|&z| SpacetimeBox { t: Interval::new(0.0, horizon), z }),
    );
    Ok(CauchyData {
        initial: SpinorField::zero(n),
        source: data.source.plus(&correction),
        initial_support: Vec::new(),
        source_support,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::boundary::make_mit;
    use crate::clifford::build_gamma_rep;
    use crate::geometry::make_half_minkowski;
    use crate::system::{dirac_to_system, normal_form};

    fn setup(lambda: f64, length: f64) -> (NormalForm, BoundaryCondition, BoundaryCondition) {
        let rep = build_gamma_rep(1).unwrap();
        let g = make_half_minkowski(1, 0.0, 1.0, length).unwrap();
        let nf = normal_form(&dirac_to_system(&g, &rep, lambda, None).unwrap()).unwrap();
        (nf, make_mit(&rep, Side::Left), make_mit(&rep, Side::Right))
    }

    #[test]
    fn zero_data_stay_zero() {
        let (nf, l, r) = setup(0.0, 2.0);
        let grid = Grid::new(41, 2.0, 0.5).unwrap();
        let traj = solve_ibvp(&nf, &l, &r, &CauchyData::zero(2), &grid, 0.5).unwrap();
        assert!(traj.fields.iter().all(|u| u.iter().all(|x| *x == C64::new(0.0, 0.0))));
        assert!(traj.envelopes.iter().all(Option::is_none));
    }

    #[test]
    fn configuration_errors() {
        let (nf, l, r) = setup(0.0, 2.0);
        assert!(Grid::new(41, 2.0, 1.5).is_err());
        assert!(Grid::new(3, 2.0, 0.5).is_err());
        let grid = Grid::new(41, 3.0, 0.5).unwrap();
        assert!(matches!(solve_ibvp(&nf, &l, &r, &CauchyData::zero(2), &grid, 0.5), Err(Error::Config(_))));
        let grid = Grid::new(41, 2.0, 0.5).unwrap();
        assert!(solve_ibvp(&nf, &r, &l, &CauchyData::zero(2), &grid, 0.5).is_err());
    }

    #[test]
    fn boundary_nodes_stay_in_kernel() {
        let (nf, l, r) = setup(0.0, 2.0);
        let grid = Grid::new(81, 2.0, 0.5).unwrap();
        let data = CauchyData::new(
            SpinorField::parse(&["bump(0.4, 0.3)", "i*bump(0.4, 0.3)"]).unwrap(),
            SpinorField::zero(2),
        );
        let traj = solve_ibvp(&nf, &l, &r, &data, &grid, 1.0).unwrap();
        assert!(traj.boundary_residual <= 1e-12, "{}", traj.boundary_residual);
    }

    #[test]
    fn gauge_equivalence() {
        // Ψ_λ = e^{−λt}Ψ₀ up to the time-stepping error, which is fourth order.
        let lambda = 0.7;
        let (nf0, l, r) = setup(0.0, 2.0);
        let (nf1, _, _) = setup(lambda, 2.0);
        let h = SpinorField::parse(&["gaussian(1, 0.15)", "0"]).unwrap();
        let f0 = SpinorField::parse(&["gaussian(t, 0.25, 0.1)*gaussian(0.8, 0.1)", "0"]).unwrap();
        let f1 = f0.mapped(&crate::linalg::identity(2), lambda);
        let gap = |nz: usize| {
            let grid = Grid::new(nz, 2.0, 0.5).unwrap();
            let t0 = solve_ibvp(&nf0, &l, &r, &CauchyData::new(h.clone(), f0.clone()), &grid, 0.5).unwrap();
            let t1 = solve_ibvp(&nf1, &l, &r, &CauchyData::new(h.clone(), f1.clone()), &grid, 0.5).unwrap();
            let mut worst: f64 = 0.0;
            for k in 0..t0.snapshots() {
                let s = (-lambda * t0.times[k]).exp();
                for (a, b) in t0.fields[k].iter().zip(&t1.fields[k]) {
                    worst = worst.max((a * s - b).norm());
                }
            }
            worst
        };
        let (coarse, fine) = (gap(81), gap(161));
        assert!(coarse < 1e-4 && coarse / fine > 12.0, "{coarse} {fine}");
    }

    #[test]
    fn reduction_examples() {
        let (nf, _, _) = setup(0.0, 4.0);
        let data = CauchyData::new(SpinorField::zero(2), SpinorField::parse(&["bump(t,0.5,0.2)", "0"]).unwrap());
        let red = reduce_zero_initial(&data, &nf).unwrap();
        assert!(red.initial.is_zero());
        let h = SpinorField::parse(&["gaussian(2, 0.3)", "0"]).unwrap();
        let red = reduce_zero_initial(&CauchyData::new(h.clone(), SpinorField::zero(2)), &nf).unwrap();
        // 𝔣̃ = −γ₀γ₁ ∂z h, independent of time.
        for z in [1.5, 2.2] {
            let hz = h.derivative(0, 1, 0.0, z).unwrap();
            let expect = -(nf.a_normal() * crate::linalg::CVec::from_vec(hz));
            for t in [0.0, 0.7] {
                let got = red.source.value(t, z);
                assert!((got[0] - expect[0]).norm() < 1e-14 && (got[1] - expect[1]).norm() < 1e-14);
            }
        }
        let closure = SpinorField::from_fn(2, |_, _, out| out.fill(C64::new(1.0, 0.0)));
        assert!(matches!(
            reduce_zero_initial(&CauchyData::new(closure, SpinorField::zero(2)), &nf),
            Err(Error::Analysis(_))
        ));
    }
}
