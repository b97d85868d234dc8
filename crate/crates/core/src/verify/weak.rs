//! Weak-solution residuals `⟨Φ, 𝔣⟩ − ⟨𝔖†Φ, Ψ⟩ + ⟨Φ(0), A₀𝔥⟩` against smooth
//! test fields with `Φ|_{t=T} = 0` and `M†Φ = 0` on the walls.

use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::boundary::{adjoint_condition, BoundaryCondition};
use crate::data::{smoothstep, smoothstep_derivative, CauchyData};
use crate::error::{Error, Result};
use crate::linalg::{c, identity, projector, CMat, CVec, C64};
use crate::solver::Trajectory;
use crate::system::NormalForm;

use super::certificate::Certificate;
use super::norms::{t_weights, z_weights};

/// Required reduction of the largest residual under one grid halving.
pub const WEAK_REDUCTION: f64 = 3.0;

/// `Φ(t, z) = τ(t) ζ(z) χ(z) e` with `τ = (1 − t/T)³(c₀ + c₁t/T)`, a Gaussian
/// `ζ`, and `χ` blending `Id` into the projector onto `ker M†` near each wall.
#[derive(Debug, Clone)]
pub struct TestField {
    pub centre: f64,
    pub width: f64,
    pub c0: f64,
    pub c1: f64,
    pub spinor: CVec,
    pub horizon: f64,
    pub length: f64,
    pub collar: f64,
    left: CMat,
    right: CMat,
}

impl TestField {
    fn tau(&self, t: f64) -> (f64, f64) {
        let s = t / self.horizon;
        let q = 1.0 - s;
        let p = self.c0 + self.c1 * s;
        (q * q * q * p, (-3.0 * q * q * p + q * q * q * self.c1) / self.horizon)
    }

    fn zeta(&self, z: f64) -> (f64, f64) {
        let x = (z - self.centre) / self.width;
        let g = (-x * x).exp();
        (g, -2.0 * x / self.width * g)
    }

    fn chi(&self, z: f64) -> (CMat, CMat) {
        let n = self.spinor.len();
        let id = identity(n);
        let w = self.collar;
        let sl = 1.0 - smoothstep(z / w);
        let dsl = -smoothstep_derivative(z / w) / w;
        let sr = 1.0 - smoothstep((self.length - z) / w);
        let dsr = smoothstep_derivative((self.length - z) / w) / w;
        let dl = &self.left - &id;
        let dr = &self.right - &id;
        let chi = &id + &dl * C64::from(sl) + &dr * C64::from(sr);
        let dchi = dl * C64::from(dsl) + dr * C64::from(dsr);
        (chi, dchi)
    }

    /// `(Φ, ∂tΦ, ∂zΦ)` at a point.
    pub fn eval(&self, t: f64, z: f64) -> (CVec, CVec, CVec) {
        let (tau, dtau) = self.tau(t);
        let (zeta, dzeta) = self.zeta(z);
        let (chi, dchi) = self.chi(z);
        let ce = &chi * &self.spinor;
        let phi = &ce * C64::from(tau * zeta);
        let phit = &ce * C64::from(dtau * zeta);
        let phiz = (&ce * C64::from(dzeta) + &dchi * &self.spinor * C64::from(zeta)) * C64::from(tau);
        (phi, phit, phiz)
    }
}

fn kernel_projector(bc: &BoundaryCondition, nf: &NormalForm) -> Result<CMat> {
    Ok(projector(adjoint_condition(bc, &nf.system.rep)?.kernel_basis()))
}

/// Seeded family of boundary-adapted test fields on `[0, T] × [0, L]`.
pub fn generate_test_fields(
    nf: &NormalForm,
    bc_left: &BoundaryCondition,
    bc_right: &BoundaryCondition,
    count: usize,
    seed: u64,
    collar: f64,
    horizon: f64,
) -> Result<Vec<TestField>> {
    let length = nf.system.geometry.length;
    if !(collar > 0.0 && 2.0 * collar < length) {
        return Err(Error::Config(format!("collar width {collar} does not fit in [0, {length}]")));
    }
    let left = kernel_projector(bc_left, nf)?;
    let right = kernel_projector(bc_right, nf)?;
    let n = nf.rank();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    Ok((0..count)
        .map(|_| {
            let mut spinor = CVec::from_fn(n, |_, _| c(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)));
            let nrm = spinor.norm();
            spinor /= C64::from(nrm);
            TestField {
                centre: rng.random_range(0.0..length),
                width: length * rng.random_range(0.08..0.2),
                c0: rng.random_range(0.5..1.5),
                c1: rng.random_range(-1.0..1.0),
                spinor,
                horizon,
                length,
                collar,
                left: left.clone(),
                right: right.clone(),
            }
        })
        .collect())
}

/// Residual of the weak formulation for one test field.
pub fn weak_residual(traj: &Trajectory, nf: &NormalForm, data: &CauchyData, field: &TestField) -> f64 {
    let n = traj.rank;
    let wz = z_weights(traj.nz, traj.dz);
    let wt = t_weights(&traj.times);
    let a0 = &nf.a0;
    let az = nf.a_normal();
    let b_adj = nf.b_sym.adjoint();
    let has_source = !data.source.is_zero();
    let mut f = vec![C64::new(0.0, 0.0); n];
    let mut total = C64::new(0.0, 0.0);
    for (k, &t) in traj.times.iter().enumerate() {
        let mut slice = C64::new(0.0, 0.0);
        for i in 0..traj.nz {
            let z = traj.z(i);
            let (phi, phit, phiz) = field.eval(t, z);
            let s_adj = -(a0 * &phit) - az * &phiz + &b_adj * &phi;
            let psi = CVec::from_column_slice(traj.node(k, i));
            let mut v = -s_adj.dotc(&psi);
            if has_source {
                data.source.eval(t, z, &mut f);
                v += phi.dotc(&CVec::from_column_slice(&f));
            }
            slice += v * wz[i];
        }
        total += slice * wt[k];
    }
    let mut initial = C64::new(0.0, 0.0);
    for i in 0..traj.nz {
        let (phi, _, _) = field.eval(traj.times[0], traj.z(i));
        let psi = CVec::from_column_slice(traj.node(0, i));
        initial += phi.dotc(&(a0 * psi)) * wz[i];
    }
    (total + initial).norm()
}

/// Largest residual over the fields, evaluated in parallel.
pub fn max_weak_residual(traj: &Trajectory, nf: &NormalForm, data: &CauchyData, fields: &[TestField]) -> f64 {
    fields
        .par_iter()
        .map(|f| weak_residual(traj, nf, data, f))
        .collect::<Vec<_>>()
        .into_iter()
        .fold(0.0, f64::max)
}

/// Compares the largest residual on a coarse run and on a run with half the
/// spacing; passes when it drops by at least [`WEAK_REDUCTION`].
#[allow(clippy::too_many_arguments)]
pub fn weak_residual_certificate(
    coarse: &Trajectory,
    fine: &Trajectory,
    nf: &NormalForm,
    bc_left: &BoundaryCondition,
    bc_right: &BoundaryCondition,
    data: &CauchyData,
    test_count: usize,
    seed: u64,
) -> Result<Certificate> {
    let start = Instant::now();
    if test_count == 0 {
        return Err(Error::Config("need at least one test field".into()));
    }
    let horizon = *coarse.times.last().unwrap_or(&0.0);
    let fine_horizon = *fine.times.last().unwrap_or(&0.0);
    if (horizon - fine_horizon).abs() > 1e-12 * horizon.max(1.0) {
        return Err(Error::Config("coarse and fine runs cover different time intervals".into()));
    }
    if fine.dz >= coarse.dz {
        return Err(Error::Config("second run must be finer than the first".into()));
    }
    let fields = generate_test_fields(nf, bc_left, bc_right, test_count, seed, 10.0 * coarse.dz, horizon)?;
    let rc = max_weak_residual(coarse, nf, data, &fields);
    let rf = max_weak_residual(fine, nf, data, &fields);
    let ratio = if rc > 0.0 { rf / rc } else if rf == 0.0 { 0.0 } else { f64::INFINITY };
    Ok(Certificate::bounded("weak_residual", ratio, 1.0 / WEAK_REDUCTION, 0.0)
        .with_quantity("coarse_max", rc)
        .with_quantity("fine_max", rf)
        .with_quantity("reduction", if rf > 0.0 { rc / rf } else { f64::INFINITY })
        .with_quantity("constant", rf / (fine.dz * fine.dz))
        .with_quantity("test_fields", test_count as f64)
        .with_runtime(start.elapsed()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::boundary::{make_mit, Side};
    use crate::clifford::build_gamma_rep;
    use crate::geometry::make_half_minkowski;
    use crate::system::{dirac_to_system, normal_form};

    fn setup() -> (NormalForm, BoundaryCondition, BoundaryCondition) {
        let rep = build_gamma_rep(1).unwrap();
        let g = make_half_minkowski(1, 0.0, 1.0, 4.0).unwrap();
        let nf = normal_form(&dirac_to_system(&g, &rep, 0.0, None).unwrap()).unwrap();
        (nf, make_mit(&rep, Side::Left), make_mit(&rep, Side::Right))
    }

    #[test]
    fn test_fields_vanish_at_final_time_and_satisfy_adjoint_condition() {
        let (nf, l, r) = setup();
        let fields = generate_test_fields(&nf, &l, &r, 20, 7, 0.2, 1.0).unwrap();
        let ml = adjoint_condition(&l, &nf.system.rep).unwrap().m().clone();
        let mr = adjoint_condition(&r, &nf.system.rep).unwrap().m().clone();
        for f in &fields {
            let (phi, phit, _) = f.eval(1.0, 1.3);
            assert!(phi.norm() < 1e-15 && phit.norm() < 1e-15);
            assert!((&ml * f.eval(0.3, 0.0).0).norm() < 1e-13);
            assert!((&mr * f.eval(0.3, 4.0).0).norm() < 1e-13);
        }
    }

    #[test]
    fn derivatives_match_finite_differences() {
        let (nf, l, r) = setup();
        let f = &generate_test_fields(&nf, &l, &r, 1, 3, 0.5, 1.0).unwrap()[0];
        let h = 1e-6;
        for &(t, z) in &[(0.2, 0.1), (0.5, 2.0), (0.7, 3.8)] {
            let (_, phit, phiz) = f.eval(t, z);
            let dt = (f.eval(t + h, z).0 - f.eval(t - h, z).0) / C64::from(2.0 * h);
            let dz = (f.eval(t, z + h).0 - f.eval(t, z - h).0) / C64::from(2.0 * h);
            assert!((phit - dt).norm() < 1e-6);
            assert!((phiz - dz).norm() < 1e-5);
        }
    }

    #[test]
    fn same_seed_same_fields() {
        let (nf, l, r) = setup();
        let a = generate_test_fields(&nf, &l, &r, 5, 11, 0.2, 1.0).unwrap();
        let b = generate_test_fields(&nf, &l, &r, 5, 11, 0.2, 1.0).unwrap();
        for (x, y) in a.iter().zip(&b) {
            assert_eq!(x.centre.to_bits(), y.centre.to_bits());
            assert_eq!(x.spinor, y.spinor);
        }
    }
}
