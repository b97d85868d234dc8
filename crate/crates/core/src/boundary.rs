//! Local boundary conditions `MΨ = 0` on the two walls of the strip.

use serde::Serialize;

use crate::clifford::{GammaRep, ALGEBRA_TOL};
use crate::data::SpinorField;
use crate::error::{Error, Result};
use crate::linalg::{
    binomial, identity, kernel_basis, max_abs, orthonormalize, projector, rank, CMat, C64, I,
};
use crate::system::NormalForm;

/// Tolerance for flux and projector identities.
pub const ADMISSIBILITY_TOL: f64 = 1e-10;

pub const INVERTIBLE_FLAG: &str = "invertible M: no admissible states";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Side {
    /// Wall at `z̃ = 0`, outward normal `−eₙ`.
    Left,
    /// Wall at `z̃ = L`, outward normal `+eₙ`.
    Right,
}

impl Side {
    pub fn sign(self) -> f64 {
        match self {
            Side::Left => -1.0,
            Side::Right => 1.0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum BoundaryKind {
    Mit,
    Chirality,
    Matrix,
    Adjoint,
}

#[derive(Debug, Clone, PartialEq)]
pub struct BoundaryCondition {
    pub kind: BoundaryKind,
    pub side: Side,
    /// `∂t^k M(0)`; `M(t) = Σ_k derivs[k] t^k / k!`.
    derivs: Vec<CMat>,
    /// `γ(n)` for the outward unit normal.
    normal: CMat,
    /// `γ(e₀)γ(n)`.
    flux: CMat,
    kernel_basis: CMat,
}

/// `γ(n) = ±γ_L(γ(eₙ) − aγ(e₀))` for a wall moving with speed `a`.
///
/// At `a = 0` this is `∓γ(eₙ)`; in general `γ(e₀)γ(n)` is `±` the normal
/// coefficient `A_z̃` of the straightened system, so flux-free subspaces of
/// the condition are exactly the energy-neutral boundary states.
pub fn normal_clifford(rep: &GammaRep, side: Side, a: f64) -> Result<CMat> {
    if !a.is_finite() || a.abs() >= 1.0 {
        return Err(Error::BoundaryNotTimelike { speed: a.abs() });
    }
    let gl = 1.0 / (1.0 - a * a).sqrt();
    let n = rep.spatial_dim();
    Ok((rep.gamma(n) - rep.gamma0() * C64::from(a)) * C64::from(side.sign() * gl))
}

impl BoundaryCondition {
    fn build(kind: BoundaryKind, side: Side, rep: &GammaRep, normal: CMat, m: CMat) -> Self {
        let flux = rep.gamma0() * &normal;
        let kernel_basis = kernel_basis(&m);
        Self { kind, side, derivs: vec![m], normal, flux, kernel_basis }
    }

    pub fn m(&self) -> &CMat {
        &self.derivs[0]
    }

    pub fn rank(&self) -> usize {
        self.derivs[0].nrows()
    }

    pub fn kernel_dim(&self) -> usize {
        self.kernel_basis.ncols()
    }

    pub fn kernel_basis(&self) -> &CMat {
        &self.kernel_basis
    }

    pub fn normal(&self) -> &CMat {
        &self.normal
    }

    pub fn flux_matrix(&self) -> &CMat {
        &self.flux
    }

    pub fn is_time_dependent(&self) -> bool {
        self.derivs.len() > 1
    }

    /// Attaches time derivatives `∂t^k M(0)`, `k ≥ 1`.
    pub fn with_time_derivatives(mut self, derivs: Vec<CMat>) -> Result<Self> {
        let n = self.rank();
        if derivs.iter().any(|d| d.nrows() != n || d.ncols() != n) {
            return Err(Error::Structural(format!("time derivatives of M must be {n}×{n}")));
        }
        self.derivs.truncate(1);
        self.derivs.extend(derivs);
        Ok(self)
    }

    pub fn m_at(&self, t: f64) -> CMat {
        let mut out = self.derivs[0].clone();
        let mut coef = 1.0;
        for (k, d) in self.derivs.iter().enumerate().skip(1) {
            coef *= t / k as f64;
            out += d * C64::from(coef);
        }
        out
    }

    /// `∂t^j M(0)`.
    pub fn m_derivative(&self, j: usize) -> CMat {
        self.derivs
            .get(j)
            .cloned()
            .unwrap_or_else(|| CMat::zeros(self.rank(), self.rank()))
    }

    pub fn kernel_at(&self, t: f64) -> CMat {
        if self.is_time_dependent() {
            kernel_basis(&self.m_at(t))
        } else {
            self.kernel_basis.clone()
        }
    }

    /// `P± = ½(Id ± iγ(n))` for MIT conditions.
    pub fn mit_projectors(&self) -> Option<(CMat, CMat)> {
        if self.kind != BoundaryKind::Mit {
            return None;
        }
        let id = identity(self.rank());
        let ign = &self.normal * I;
        Some(((&id + &ign) * C64::from(0.5), (&id - &ign) * C64::from(0.5)))
    }
}

/// MIT bag condition `M = γ(n) − i` on a static wall.
pub fn make_mit(rep: &GammaRep, side: Side) -> BoundaryCondition {
    make_mit_moving(rep, side, 0.0).expect("a static wall is timelike")
}

/// MIT bag condition on a wall moving with speed `a`.
pub fn make_mit_moving(rep: &GammaRep, side: Side, a: f64) -> Result<BoundaryCondition> {
    let normal = normal_clifford(rep, side, a)?;
    let m = &normal - identity(rep.rank()) * I;
    Ok(BoundaryCondition::build(BoundaryKind::Mit, side, rep, normal, m))
}

/// Chirality condition `M = Id − γ(n)G` on a static wall.
pub fn make_chirality(rep: &GammaRep, side: Side, g: &CMat) -> Result<BoundaryCondition> {
    make_chirality_moving(rep, side, g, 0.0)
}

pub fn make_chirality_moving(rep: &GammaRep, side: Side, g: &CMat, a: f64) -> Result<BoundaryCondition> {
    let n = rep.rank();
    if g.nrows() != n || g.ncols() != n {
        return Err(Error::NotChirality(format!("expected a {n}×{n} matrix")));
    }
    let id = identity(n);
    if max_abs(&(g * g - &id)) > ALGEBRA_TOL {
        return Err(Error::NotChirality("G² ≠ Id".into()));
    }
    if max_abs(&(g.adjoint() * g - &id)) > ALGEBRA_TOL {
        return Err(Error::NotChirality("G is not unitary".into()));
    }
    for mu in 0..=rep.spatial_dim() {
        let gm = rep.gamma_mu(mu);
        if max_abs(&(g * gm + gm * g)) > ALGEBRA_TOL {
            return Err(Error::NotChirality(format!("G does not anticommute with γ(e{mu})")));
        }
    }
    let normal = normal_clifford(rep, side, a)?;
    let m = &id - &normal * g;
    Ok(BoundaryCondition::build(BoundaryKind::Chirality, side, rep, normal, m))
}

/// The volume element `γ(e₀)…γ(eₙ)`, phase-fixed to square to `Id`; a
/// chirality element exactly when `n` is odd.
pub fn standard_chirality(rep: &GammaRep) -> CMat {
    rep.volume_element()
}

/// A user-supplied constant matrix on a wall moving with speed `a`.
pub fn from_matrix(rep: &GammaRep, side: Side, m: CMat, a: f64) -> Result<BoundaryCondition> {
    let n = rep.rank();
    if m.nrows() != n || m.ncols() != n {
        return Err(Error::Structural(format!("boundary matrix must be {n}×{n}")));
    }
    let normal = normal_clifford(rep, side, a)?;
    Ok(BoundaryCondition::build(BoundaryKind::Matrix, side, rep, normal, m))
}

/// `M†`: the orthogonal projector onto `γ(e₀)γ(n) ker M`, whose kernel is
/// `{φ : ⟨φ, γ(e₀)γ(n)ψ⟩ = 0 for all ψ ∈ ker M}`.
pub fn adjoint_condition(bc: &BoundaryCondition, rep: &GammaRep) -> Result<BoundaryCondition> {
    if rep.rank() != bc.rank() {
        return Err(Error::Structural("representation and condition ranks differ".into()));
    }
    if rank(&bc.flux) < bc.rank() {
        return Err(Error::Analysis("degenerate flux pairing on the boundary".into()));
    }
    let image = orthonormalize(&(&bc.flux * &bc.kernel_basis));
    let m = projector(&image);
    let kernel_basis = kernel_basis(&m);
    Ok(BoundaryCondition {
        kind: BoundaryKind::Adjoint,
        side: bc.side,
        derivs: vec![m],
        normal: bc.normal.clone(),
        flux: bc.flux.clone(),
        kernel_basis,
    })
}

#[derive(Debug, Clone, Serialize, PartialEq)]
pub struct AdmissibilityReport {
    pub kernel_dim: usize,
    pub ranks: Vec<usize>,
    pub rank_constant: bool,
    /// `max |⟨ψ_i, γ(e₀)γ(n)ψ_j⟩|` over a basis of ker M.
    pub flux_residual: f64,
    /// Same for ker M†.
    pub adjoint_flux_residual: f64,
    pub invertible: bool,
    pub flags: Vec<String>,
    pub admissible: bool,
}

fn pairing_residual(basis: &CMat, flux: &CMat) -> f64 {
    if basis.ncols() == 0 {
        return 0.0;
    }
    max_abs(&(basis.adjoint() * flux * basis))
}

pub fn admissibility_check(bc: &BoundaryCondition, rep: &GammaRep, sample_times: &[f64]) -> AdmissibilityReport {
    let times: Vec<f64> = if sample_times.is_empty() { vec![0.0] } else { sample_times.to_vec() };
    let n = bc.rank();
    let ranks: Vec<usize> = times.iter().map(|&t| rank(&bc.m_at(t))).collect();
    let rank_constant = ranks.windows(2).all(|w| w[0] == w[1]);
    let flux_residual = times
        .iter()
        .map(|&t| pairing_residual(&bc.kernel_at(t), &bc.flux))
        .fold(0.0, f64::max);
    let adjoint_flux_residual = adjoint_condition(bc, rep)
        .map(|adj| pairing_residual(adj.kernel_basis(), &bc.flux))
        .unwrap_or(f64::INFINITY);
    let kernel_dim = bc.kernel_dim();
    let invertible = kernel_dim == 0;
    let mut flags = Vec::new();
    if invertible {
        flags.push(INVERTIBLE_FLAG.to_string());
    }
    if kernel_dim == n {
        flags.push("M = 0: no boundary condition imposed".to_string());
    }
    if !rank_constant {
        flags.push("kernel dimension varies along the boundary".to_string());
    }
    if flux_residual > ADMISSIBILITY_TOL || adjoint_flux_residual > ADMISSIBILITY_TOL {
        flags.push("boundary flux does not vanish on the kernel".to_string());
    }
    AdmissibilityReport {
        kernel_dim,
        ranks,
        rank_constant,
        flux_residual,
        adjoint_flux_residual,
        invertible,
        admissible: flags.is_empty(),
        flags,
    }
}

#[derive(Debug, Clone, Serialize, PartialEq)]
pub struct JetReport {
    pub order: usize,
    /// `h_k` at the corner as `[re, im]` pairs.
    pub jets: Vec<Vec<[f64; 2]>>,
    /// `ρ_k = ‖Σ_j binom(k, j)(∂t^j M)h_{k−j}‖` for `k = 0..=K`.
    pub residuals: Vec<f64>,
    pub h_norm: f64,
    pub tolerance: f64,
    pub compatible: bool,
}

impl JetReport {
    pub fn rho(&self, k: usize) -> f64 {
        self.residuals[k]
    }
}

/// Default relative tolerance of the jet test, `ρ_k ≤ tol (1 + ‖h‖)`.
pub const JET_TOL: f64 = 1e-8;

/// Corner jets `h_k = ∂t^k Ψ(0, corner)` of `∂tΨ = 𝔊Ψ + 𝔈𝔣` and the
/// compatibility residuals of `MΨ = 0` up to order `k_max`.
pub fn compatibility_jets(
    nf: &NormalForm,
    bc: &BoundaryCondition,
    h: &SpinorField,
    f: &SpinorField,
    k_max: usize,
) -> Result<JetReport> {
    compatibility_jets_with_tol(nf, bc, h, f, k_max, JET_TOL)
}

pub fn compatibility_jets_with_tol(
    nf: &NormalForm,
    bc: &BoundaryCondition,
    h: &SpinorField,
    f: &SpinorField,
    k_max: usize,
    tol: f64,
) -> Result<JetReport> {
    if k_max == 0 {
        return Err(Error::Config("compatibility order must be at least 1".into()));
    }
    let n = nf.rank();
    if h.components() != n || f.components() != n || bc.rank() != n {
        return Err(Error::Structural("data, condition and system ranks differ".into()));
    }
    let length = nf.system.geometry.length;
    let corner = match bc.side {
        Side::Left => 0.0,
        Side::Right => length,
    };
    // stacks[k][d] = ∂z^d h_k at the corner, for d = 0..=k_max − k.
    let mut stacks: Vec<Vec<Vec<C64>>> = Vec::with_capacity(k_max + 1);
    stacks.push((0..=k_max).map(|d| h.derivative(0, d, 0.0, corner)).collect::<Result<_>>()?);
    for k in 1..=k_max {
        let prev = &stacks[k - 1];
        let mut next = Vec::with_capacity(k_max - k + 1);
        for d in 0..=(k_max - k) {
            let mut v = nf.apply_g(&prev[d], &prev[d + 1]);
            let src = f.derivative(k - 1, d, 0.0, corner)?;
            for (i, vi) in v.iter_mut().enumerate() {
                for (j, sj) in src.iter().enumerate() {
                    *vi += nf.e[(i, j)] * sj;
                }
            }
            next.push(v);
        }
        stacks.push(next);
    }
    let residuals: Vec<f64> = (0..=k_max)
        .map(|k| {
            let mut acc = vec![C64::new(0.0, 0.0); n];
            for j in 0..=k {
                let mj = bc.m_derivative(j);
                let w = binomial(k, j);
                let hk = &stacks[k - j][0];
                for (i, a) in acc.iter_mut().enumerate() {
                    for (l, x) in hk.iter().enumerate() {
                        *a += mj[(i, l)] * x * w;
                    }
                }
            }
            acc.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
        })
        .collect();
    let h_norm = (0..=200)
        .map(|i| {
            let z = length * i as f64 / 200.0;
            h.value(0.0, z).iter().map(|v| v.norm_sqr()).sum::<f64>().sqrt()
        })
        .fold(0.0, f64::max);
    let tolerance = tol * (1.0 + h_norm);
    Ok(JetReport {
        order: k_max,
        jets: stacks.iter().map(|s| s[0].iter().map(|z| [z.re, z.im]).collect()).collect(),
        compatible: residuals.iter().all(|r| *r <= tolerance),
        residuals,
        h_norm,
        tolerance,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::clifford::build_gamma_rep;
    use crate::geometry::make_half_minkowski;
    use crate::linalg::{c, from_rows, subspace_distance};
    use crate::system::{dirac_to_system, normal_form};
    use proptest::prelude::*;

    fn rep1() -> GammaRep {
        build_gamma_rep(1).unwrap()
    }

    #[test]
    fn left_mit_in_one_dimension() {
        let rep = rep1();
        let bc = make_mit(&rep, Side::Left);
        let z = c(0.0, 0.0);
        let gn = from_rows(&[&[z, c(0.0, -1.0)], &[c(0.0, -1.0), z]]);
        assert!(max_abs(&(bc.normal() - gn)) < 1e-15);
        let m = from_rows(&[&[c(0.0, -1.0), c(0.0, -1.0)], &[c(0.0, -1.0), c(0.0, -1.0)]]);
        assert!(max_abs(&(bc.m() - m)) < 1e-15);
        assert_eq!(bc.kernel_dim(), 1);
        let k = bc.kernel_basis().column(0);
        assert!((k[0] + k[1]).norm() < 1e-14);
        let psi = crate::linalg::CVec::from_vec(vec![c(1.0, 0.0), c(-1.0, 0.0)]);
        assert!(psi.dotc(&(bc.flux_matrix() * &psi)).norm() < 1e-15);
    }

    #[test]
    fn mit_projector_algebra() {
        for n in 1..=3 {
            let rep = build_gamma_rep(n).unwrap();
            for side in [Side::Left, Side::Right] {
                let bc = make_mit(&rep, side);
                let (pp, pm) = bc.mit_projectors().unwrap();
                let id = identity(rep.rank());
                assert!(max_abs(&(&pp + &pm - &id)) < 1e-14);
                assert!(max_abs(&(&pp * &pp - &pp)) < 1e-14);
                assert!(max_abs(&(&pm * &pm - &pm)) < 1e-14);
                assert!(max_abs(&(&pp * &pm)) < 1e-14 && max_abs(&(&pm * &pp)) < 1e-14);
                assert!(max_abs(&(pp.adjoint() * &pm)) < 1e-14);
                assert_eq!(bc.kernel_dim(), rep.rank() / 2);
                assert!(subspace_distance(bc.kernel_basis(), &orthonormalize(&pm)) < 1e-12);
                let adj = adjoint_condition(&bc, &rep).unwrap();
                assert!(subspace_distance(adj.kernel_basis(), bc.kernel_basis()) < 1e-10);
                let adj2 = adjoint_condition(&adj, &rep).unwrap();
                assert!(subspace_distance(adj2.kernel_basis(), bc.kernel_basis()) < 1e-10);
                let r = admissibility_check(&bc, &rep, &[0.0, 0.5]);
                assert!(r.admissible && r.flux_residual < 1e-12, "{r:?}");
            }
        }
    }

    #[test]
    fn moving_mit_is_admissible_for_the_straightened_flux() {
        let rep = rep1();
        let g = make_half_minkowski(1, 0.5, 1.0, 4.0).unwrap();
        let nf = normal_form(&dirac_to_system(&g, &rep, 0.0, None).unwrap()).unwrap();
        for side in [Side::Left, Side::Right] {
            let bc = make_mit_moving(&rep, side, 0.5).unwrap();
            let expected = nf.a_normal() * C64::from(side.sign());
            assert!(max_abs(&(bc.flux_matrix() - expected)) < 1e-14);
            assert!(admissibility_check(&bc, &rep, &[]).admissible);
            let (pp, pm) = bc.mit_projectors().unwrap();
            assert!(max_abs(&(&pp * &pp - &pp)) < 1e-14 && max_abs(&(&pp * &pm)) < 1e-14);
        }
        assert!(make_mit_moving(&rep, Side::Left, 1.0).is_err());
    }

    #[test]
    fn chirality_conditions() {
        let rep = build_gamma_rep(3).unwrap();
        let g = standard_chirality(&rep);
        for side in [Side::Left, Side::Right] {
            let bc = make_chirality(&rep, side, &g).unwrap();
            assert_eq!(bc.kernel_dim(), 2);
            let r = admissibility_check(&bc, &rep, &[]);
            assert!(r.flux_residual < 1e-12 && r.admissible);
        }
        let id = identity(4);
        assert!(matches!(make_chirality(&rep, Side::Left, &id), Err(Error::NotChirality(_))));
        let rep1 = rep1();
        let bc = make_chirality(&rep1, Side::Left, &standard_chirality(&rep1)).unwrap();
        assert_eq!(bc.kernel_dim(), 1);
    }

    #[test]
    fn invertible_conditions_are_flagged() {
        let rep = rep1();
        let bc = from_matrix(&rep, Side::Left, identity(2), 0.0).unwrap();
        let r = admissibility_check(&bc, &rep, &[]);
        assert_eq!(r.kernel_dim, 0);
        assert!(r.flags.iter().any(|f| f == INVERTIBLE_FLAG) && !r.admissible);
        let (pp, pm) = make_mit(&rep, Side::Left).mit_projectors().unwrap();
        let bc = from_matrix(&rep, Side::Left, &pp + &pm * C64::from(2.0), 0.0).unwrap();
        assert!(admissibility_check(&bc, &rep, &[]).flags.iter().any(|f| f == INVERTIBLE_FLAG));
    }

    fn nf(lambda: f64) -> NormalForm {
        let g = make_half_minkowski(1, 0.0, 1.0, 4.0).unwrap();
        normal_form(&dirac_to_system(&g, &rep1(), lambda, None).unwrap()).unwrap()
    }

    #[test]
    fn jets_for_interior_and_zero_data() {
        let nf = nf(1.0);
        let bc = make_mit(&rep1(), Side::Left);
        let h = SpinorField::parse(&["bump(2, 0.5)", "i*bump(2, 0.5)"]).unwrap();
        let f = SpinorField::parse(&["bump(t, 0.5, 0.2)*bump(2.5, 0.3)", "0"]).unwrap();
        let r = compatibility_jets(&nf, &bc, &h, &f, 4).unwrap();
        assert!(r.compatible && r.residuals.iter().all(|x| *x == 0.0));
        let z = SpinorField::zero(2);
        let r = compatibility_jets(&nf, &bc, &z, &z, 3).unwrap();
        assert!(r.compatible);
    }

    #[test]
    fn gaussian_with_boundary_value_in_kernel_violates_first_order() {
        // h(0) ∈ ker M = span(1, −1) but 𝔊h(0) is not.
        let nf = nf(0.0);
        let bc = make_mit(&rep1(), Side::Left);
        let h = SpinorField::parse(&["gaussian(0.3, 0.2)", "-gaussian(0.3, 0.2)"]).unwrap();
        let r = compatibility_jets(&nf, &bc, &h, &SpinorField::zero(2), 1).unwrap();
        assert!(r.rho(0) < 1e-15);
        // ρ₁ = |M A g'(0) (1, −1)| = 2√2 |g'(0)|.
        let g1 = 0.3 / 0.04 * (-0.09f64 / 0.08).exp();
        assert!((r.rho(1) - 2.0 * 2f64.sqrt() * g1).abs() < 1e-12, "{}", r.rho(1));
        assert!(!r.compatible);
    }

    #[test]
    fn time_dependent_condition_enters_through_leibniz_terms() {
        let nf = nf(0.0);
        let rep = rep1();
        let bc = make_mit(&rep, Side::Left)
            .with_time_derivatives(vec![identity(2)])
            .unwrap();
        let h = SpinorField::parse(&["1", "-1"]).unwrap();
        let r = compatibility_jets(&nf, &bc, &h, &SpinorField::zero(2), 1).unwrap();
        // h₁ = 0, so ρ₁ = |M'(0) h₀| = √2.
        assert!((r.rho(1) - 2f64.sqrt()).abs() < 1e-14);
    }

    #[test]
    fn grid_data_too_coarse_for_order() {
        let nf = nf(0.0);
        let bc = make_mit(&rep1(), Side::Left);
        let h = SpinorField::from_nodes(2, 0.0, 1.0, vec![c(0.0, 0.0); 6]).unwrap();
        assert!(matches!(
            compatibility_jets(&nf, &bc, &h, &SpinorField::zero(2), 3),
            Err(Error::Analysis(_))
        ));
    }

    proptest! {
        #[test]
        fn flux_form_is_real(re in proptest::collection::vec(-1.0f64..1.0, 4), im in proptest::collection::vec(-1.0f64..1.0, 4)) {
            let rep = build_gamma_rep(3).unwrap();
            let bc = make_mit(&rep, Side::Right);
            let psi = crate::linalg::CVec::from_fn(4, |i, _| c(re[i], im[i]));
            let v = psi.dotc(&(bc.flux_matrix() * &psi));
            prop_assert!(v.im.abs() < 1e-14);
        }
    }
}
