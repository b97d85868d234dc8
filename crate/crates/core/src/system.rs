//! The symmetric hyperbolic system `𝔖 = A₀∂t + Σ A_j ∂_j + B` attached to
//! `-iγ(e₀)D + λ`, its positivity matrix κ, symbol checks and the normal form
//! `∂t − 𝔊` used by the time stepper.

use rayon::prelude::*;
use serde::Serialize;

use crate::clifford::{GammaRep, ALGEBRA_TOL};
use crate::error::{Error, Result};
use crate::expr::{Expr, Var};
use crate::geometry::{Geometry, GeometryKind};
use crate::linalg::{
    generalized_hermitian_eigen, hermitian_part, hermitian_residual, identity, max_abs,
    min_hermitian_eigenvalue, CMat, C64, I,
};

/// Step for the finite-difference fallback of density derivatives.
pub const KAPPA_FD_STEP: f64 = 1e-4;

/// A coefficient matrix field `factor(t, z) · matrix`.
#[derive(Debug, Clone, PartialEq)]
pub enum MatrixField {
    Constant(CMat),
    Scaled { factor: Expr, matrix: CMat },
}

impl MatrixField {
    pub fn at(&self, t: f64, z: f64) -> CMat {
        match self {
            MatrixField::Constant(m) => m.clone(),
            MatrixField::Scaled { factor, matrix } => matrix * factor.eval(t, z),
        }
    }

    pub fn matrix(&self) -> &CMat {
        match self {
            MatrixField::Constant(m) | MatrixField::Scaled { matrix: m, .. } => m,
        }
    }

    pub fn factor(&self) -> Expr {
        match self {
            MatrixField::Constant(_) => Expr::constant(C64::new(1.0, 0.0)),
            MatrixField::Scaled { factor, .. } => factor.clone(),
        }
    }

    fn negated(&self) -> Self {
        match self {
            MatrixField::Constant(m) => MatrixField::Constant(-m),
            MatrixField::Scaled { factor, matrix } => MatrixField::Scaled {
                factor: factor.clone(),
                matrix: -matrix,
            },
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct HyperbolicSystem {
    pub rep: GammaRep,
    pub geometry: Geometry,
    pub lambda: f64,
    pub a0: MatrixField,
    /// Spatial coefficients; the last entry multiplies `∂z̃`.
    pub a: Vec<MatrixField>,
    /// Zero-order part other than `λ Id`.
    pub extra: CMat,
}

/// The Dirac mass term `i m γ(e₀)` (anti-Hermitian, so κ is unchanged).
pub fn mass_term(rep: &GammaRep, mass: f64) -> CMat {
    rep.gamma0() * (I * mass)
}

/// A scalar potential `V · Id` (Hermitian, shifts κ by `V`).
pub fn potential_term(rep: &GammaRep, v: f64) -> CMat {
    identity(rep.rank()) * C64::new(v, 0.0)
}

/// Assembles `𝔖 = -iγ(e₀)D + λ` in straightened coordinates.
///
/// Half-Minkowski with boundary speed `a` uses the boundary rest frame, so
/// `A₀ = γ_L(1 − aγ₀γₙ)`, `Aₙ = γ_L(γ₀γₙ − a)` with `γ_L = (1 − a²)^{-1/2}`.
/// A diagonal metric gives `A₀ = β⁻¹`, `A_j = α⁻¹γ₀γ_j`.
pub fn dirac_to_system(
    geometry: &Geometry,
    rep: &GammaRep,
    lambda: f64,
    extra_zero_order: Option<CMat>,
) -> Result<HyperbolicSystem> {
    let n = rep.spatial_dim();
    if geometry.spatial_dim != n {
        return Err(Error::Structural(format!(
            "geometry has {} space dimensions, representation has {n}",
            geometry.spatial_dim
        )));
    }
    let rank = rep.rank();
    let extra = extra_zero_order.unwrap_or_else(|| CMat::zeros(rank, rank));
    if extra.nrows() != rank || extra.ncols() != rank {
        return Err(Error::Structural(format!("zero-order term must be {rank}×{rank}")));
    }
    if !lambda.is_finite() {
        return Err(Error::Config("λ must be finite".into()));
    }
    let id = identity(rank);
    let (a0, a) = match &geometry.kind {
        GeometryKind::HalfMinkowski { boundary_speed } => {
            let s = *boundary_speed;
            let gl = geometry.lorentz_factor();
            let an = rep.flux_matrix(n);
            let a0 = (&id - &an * C64::from(s)) * C64::from(gl);
            let mut a: Vec<MatrixField> = (1..n).map(|j| MatrixField::Constant(rep.flux_matrix(j))).collect();
            a.push(MatrixField::Constant((&an - &id * C64::from(s)) * C64::from(gl)));
            (MatrixField::Constant(a0), a)
        }
        GeometryKind::DiagonalMetric { lapse, spatial_factor } => {
            let inv = |e: &Expr| Expr::Div(Box::new(Expr::constant(1.0.into())), Box::new(e.clone()));
            let a0 = MatrixField::Scaled { factor: inv(lapse), matrix: id.clone() };
            let a = (1..=n)
                .map(|j| MatrixField::Scaled { factor: inv(spatial_factor), matrix: rep.flux_matrix(j) })
                .collect();
            (a0, a)
        }
    };
    Ok(HyperbolicSystem { rep: rep.clone(), geometry: geometry.clone(), lambda, a0, a, extra })
}

impl HyperbolicSystem {
    pub fn rank(&self) -> usize {
        self.rep.rank()
    }

    pub fn b(&self) -> CMat {
        &self.extra + identity(self.rank()) * C64::from(self.lambda)
    }

    pub fn with_lambda(&self, lambda: f64) -> Self {
        Self { lambda, ..self.clone() }
    }

    pub fn is_constant(&self) -> bool {
        matches!(self.a0, MatrixField::Constant(_))
            && self.a.iter().all(|m| matches!(m, MatrixField::Constant(_)))
    }

    pub fn a0_at(&self, t: f64, z: f64) -> CMat {
        self.a0.at(t, z)
    }

    pub fn a_at(&self, j: usize, t: f64, z: f64) -> CMat {
        self.a[j].at(t, z)
    }

    /// Coefficient of `∂z̃`.
    pub fn a_normal_at(&self, t: f64, z: f64) -> CMat {
        self.a.last().expect("at least one spatial direction").at(t, z)
    }

    /// `𝔖† = −A₀∂t − ΣA_j∂_j + B†` read in reversed time `s = T − t`:
    /// coefficients `(A₀, −A_j, B†)`.
    pub fn time_reversed_adjoint(&self) -> Self {
        Self {
            a: self.a.iter().map(MatrixField::negated).collect(),
            extra: self.extra.adjoint(),
            ..self.clone()
        }
    }

    /// `−𝔖` read in reversed time: coefficients `(A₀, −A_j, −B)`.
    pub fn time_reversed_inverse(&self) -> Self {
        Self {
            a: self.a.iter().map(MatrixField::negated).collect(),
            extra: -&self.extra,
            lambda: -self.lambda,
            ..self.clone()
        }
    }

    /// Largest Hermiticity residual of the principal coefficients at a point.
    pub fn symmetry_residual(&self, t: f64, z: f64) -> f64 {
        self.a
            .iter()
            .map(|m| hermitian_residual(&m.at(t, z)))
            .fold(hermitian_residual(&self.a0.at(t, z)), f64::max)
    }
}

/// Sample points `(t, z)` for κ and symbol scans.
#[derive(Debug, Clone, PartialEq)]
pub struct Region {
    pub points: Vec<(f64, f64)>,
}

impl Region {
    pub fn lattice(geometry: &Geometry, nt: usize, nz: usize) -> Self {
        Self { points: geometry.sample_points(nt, nz).collect() }
    }

    pub fn points(points: Vec<(f64, f64)>) -> Self {
        Self { points }
    }

    fn validate(&self) -> Result<()> {
        if self.points.is_empty() {
            return Err(Error::Structural("sample region is empty".into()));
        }
        if self.points.iter().any(|(t, z)| !t.is_finite() || !z.is_finite()) {
            return Err(Error::Structural("sample region is unbounded".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum KappaMethod {
    Symbolic,
    FiniteDifference,
}

#[derive(Debug, Clone)]
pub struct KappaSample {
    pub t: f64,
    pub z: f64,
    pub kappa: CMat,
    pub min_eig: f64,
}

#[derive(Debug, Clone)]
pub struct KappaField {
    pub samples: Vec<KappaSample>,
    pub min_eig: f64,
    pub argmin: (f64, f64),
    pub hermitian_residual: f64,
    pub method: KappaMethod,
}

#[derive(Debug, Clone, Serialize, PartialEq)]
pub struct KappaSummary {
    pub samples: usize,
    pub min_eig: f64,
    pub argmin: (f64, f64),
    pub hermitian_residual: f64,
    pub method: KappaMethod,
}

impl KappaField {
    pub fn summary(&self) -> KappaSummary {
        KappaSummary {
            samples: self.samples.len(),
            min_eig: self.min_eig,
            argmin: self.argmin,
            hermitian_residual: self.hermitian_residual,
            method: self.method,
        }
    }
}

/// κ = Herm(B) − (1/√g)∂t(√g A₀) − Σ_j (1/√g)∂_j(√g A_j).
///
/// Coefficients do not depend on the transverse coordinates, so only the
/// `∂z̃` term of the spatial sum can be non-zero.
pub fn compute_kappa(system: &HyperbolicSystem, region: &Region) -> Result<KappaField> {
    compute_kappa_with(system, region, KappaMethod::Symbolic)
}

pub fn compute_kappa_with(system: &HyperbolicSystem, region: &Region, method: KappaMethod) -> Result<KappaField> {
    region.validate()?;
    let density = system.geometry.volume_density();
    let normal = system.a.last().expect("at least one spatial direction");
    let terms = [(&system.a0, Var::T), (normal, Var::Z)];
    // Symbolic (1/√g)∂(√g f) for each scalar factor.
    let symbolic: Vec<Expr> = terms
        .iter()
        .map(|(m, var)| {
            let weighted = Expr::Mul(Box::new(density.clone()), Box::new(m.factor()));
            Expr::Div(Box::new(weighted.diff(*var)), Box::new(density.clone()))
        })
        .collect();
    let herm_b = hermitian_part(&system.b());
    let eval_term = |k: usize, t: f64, z: f64| -> Result<C64> {
        match method {
            KappaMethod::Symbolic => Ok(symbolic[k].eval(t, z)),
            KappaMethod::FiniteDifference => {
                let (m, var) = terms[k];
                let f = m.factor();
                let h = KAPPA_FD_STEP;
                let g = |t: f64, z: f64| density.eval(t, z) * f.eval(t, z);
                let d = match var {
                    Var::T => (g(t + h, z) - g(t - h, z)) / (2.0 * h),
                    Var::Z => (g(t, z + h) - g(t, z - h)) / (2.0 * h),
                };
                Ok(d / density.eval(t, z))
            }
        }
    };
    let samples: Vec<KappaSample> = region
        .points
        .par_iter()
        .map(|&(t, z)| -> Result<KappaSample> {
            let mut kappa = herm_b.clone();
            for (k, (m, _)) in terms.iter().enumerate() {
                let d = eval_term(k, t, z)?;
                if !d.re.is_finite() || !d.im.is_finite() {
                    return Err(Error::Analysis(format!(
                        "coefficient not differentiable at t = {t}, z = {z}"
                    )));
                }
                kappa -= m.matrix() * d;
            }
            let min_eig = min_hermitian_eigenvalue(&kappa);
            Ok(KappaSample { t, z, kappa, min_eig })
        })
        .collect::<Result<_>>()?;
    let (idx, min_eig) = samples
        .iter()
        .enumerate()
        .map(|(i, s)| (i, s.min_eig))
        .fold((0, f64::INFINITY), |acc, x| if x.1 < acc.1 { x } else { acc });
    let hermitian_residual = samples.iter().map(|s| hermitian_residual(&s.kappa)).fold(0.0, f64::max);
    Ok(KappaField {
        argmin: (samples[idx].t, samples[idx].z),
        samples,
        min_eig,
        hermitian_residual,
        method,
    })
}

/// Bracketing tolerance of [`choose_lambda`].
pub const LAMBDA_TOL: f64 = 1e-6;

/// Smallest λ (within [`LAMBDA_TOL`]) with `min_eig κ ≥ margin` on the region.
pub fn choose_lambda(system: &HyperbolicSystem, region: &Region, margin: f64) -> Result<f64> {
    if !(margin > 0.0) {
        return Err(Error::MarginNotPositive(margin));
    }
    let base = compute_kappa(&system.with_lambda(0.0), region)?;
    let id = identity(system.rank());
    let score = |lambda: f64| {
        base.samples
            .iter()
            .map(|s| min_hermitian_eigenvalue(&(&s.kappa + &id * C64::from(lambda))))
            .fold(f64::INFINITY, f64::min)
    };
    let mut hi = 1.0;
    let mut guard = 0;
    while score(hi) < margin {
        hi *= 2.0;
        guard += 1;
        if guard > 80 {
            return Err(Error::Analysis("no finite λ reaches the margin".into()));
        }
    }
    let mut lo = hi - 1.0;
    guard = 0;
    while score(lo) >= margin {
        let width = hi - lo;
        hi = lo;
        lo -= 2.0 * width;
        guard += 1;
        if guard > 80 {
            return Err(Error::Analysis("κ is bounded below by the margin for every λ".into()));
        }
    }
    while hi - lo > LAMBDA_TOL {
        let mid = 0.5 * (lo + hi);
        if score(mid) >= margin {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    Ok(hi)
}

/// `τ = dt + Σ_j α_j dx^j`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Covector {
    pub alpha: Vec<f64>,
}

impl Covector {
    pub fn dt(n: usize) -> Self {
        Self { alpha: vec![0.0; n] }
    }

    /// `dt + s dz` in `n` space dimensions.
    pub fn along_normal(n: usize, s: f64) -> Self {
        let mut alpha = vec![0.0; n];
        alpha[n - 1] = s;
        Self { alpha }
    }
}

#[derive(Debug, Clone, Serialize, PartialEq)]
pub struct SymbolReport {
    /// Minimal eigenvalue of `σ_𝔖(τ)` per covector.
    pub min_eigenvalues: Vec<f64>,
    pub min_eigenvalue: f64,
    pub hyperbolic: bool,
    pub hermitian_residual: f64,
    pub symmetric: bool,
}

/// Principal symbol `σ_𝔖(τ) = A₀ + Σ α_j A_j` at a point.
pub fn symbol_at(system: &HyperbolicSystem, tau: &Covector, t: f64, z: f64) -> CMat {
    let mut s = system.a0_at(t, z);
    for (j, alpha) in tau.alpha.iter().enumerate() {
        s += system.a_at(j, t, z) * C64::from(*alpha);
    }
    s
}

/// Checks (S) and (H) on covector samples at the given points (the origin if none).
pub fn check_symbol(system: &HyperbolicSystem, covectors: &[Covector], points: &[(f64, f64)]) -> SymbolReport {
    let origin = [(0.0, 0.0)];
    let points = if points.is_empty() { &origin[..] } else { points };
    let n = system.rep.spatial_dim();
    let min_eigenvalues: Vec<f64> = covectors
        .iter()
        .map(|tau| {
            if tau.alpha.len() != n {
                return f64::NAN;
            }
            points
                .iter()
                .map(|&(t, z)| min_hermitian_eigenvalue(&symbol_at(system, tau, t, z)))
                .fold(f64::INFINITY, f64::min)
        })
        .collect();
    let min_eigenvalue = min_eigenvalues.iter().copied().fold(f64::INFINITY, f64::min);
    let hermitian_residual = points
        .iter()
        .map(|&(t, z)| system.symmetry_residual(t, z))
        .fold(0.0, f64::max);
    SymbolReport {
        hyperbolic: min_eigenvalues.iter().all(|v| *v > 0.0),
        min_eigenvalues,
        min_eigenvalue,
        symmetric: hermitian_residual <= ALGEBRA_TOL,
        hermitian_residual,
    }
}

/// Normal form `Ŝ = 𝔈𝔖 = ∂t + ΣÂ_j∂_j + B̂ =: ∂t − 𝔊` of a constant-coefficient system.
#[derive(Debug, Clone)]
pub struct NormalForm {
    pub system: HyperbolicSystem,
    /// `1 − aγ₀γₙ`, the boundary multiplier before the Lorentz-factor scaling.
    pub multiplier: CMat,
    /// `𝔈 = A₀⁻¹`.
    pub e: CMat,
    pub a0: CMat,
    /// Symmetric coefficients `A_j` (last: `A_z̃`).
    pub a_sym: Vec<CMat>,
    pub b_sym: CMat,
    pub a_hat: Vec<CMat>,
    pub b_hat: CMat,
}

#[derive(Debug, Clone, Serialize, PartialEq)]
pub struct NormalFormSummary {
    pub multiplier_spectrum: Vec<f64>,
    pub characteristic_speeds: Vec<f64>,
    pub a_normal_det_abs: f64,
    pub dt_coefficient_residual: f64,
}

pub fn normal_form(system: &HyperbolicSystem) -> Result<NormalForm> {
    if !system.is_constant() {
        return Err(Error::Unsupported(
            "normal form and time stepping need constant coefficients".into(),
        ));
    }
    let rank = system.rank();
    let n = system.rep.spatial_dim();
    let a = system.geometry.boundary_speed();
    let multiplier = identity(rank) - system.rep.flux_matrix(n) * C64::from(a);
    if multiplier.clone().try_inverse().is_none() || min_abs_eigen(&multiplier) < 1e-12 {
        return Err(Error::BoundaryNotTimelike { speed: a.abs() });
    }
    let a0 = system.a0_at(0.0, 0.0);
    let e = a0
        .clone()
        .try_inverse()
        .ok_or(Error::BoundaryNotTimelike { speed: a.abs() })?;
    let a_sym: Vec<CMat> = (0..n).map(|j| system.a_at(j, 0.0, 0.0)).collect();
    let b_sym = system.b();
    let a_hat: Vec<CMat> = a_sym.iter().map(|m| &e * m).collect();
    let b_hat = &e * &b_sym;
    let nf = NormalForm { system: system.clone(), multiplier, e, a0, a_sym, b_sym, a_hat, b_hat };
    if nf.a_normal_hat().determinant().norm() < 1e-12 {
        return Err(Error::Analysis("normal coefficient is singular on the boundary".into()));
    }
    Ok(nf)
}

fn min_abs_eigen(m: &CMat) -> f64 {
    m.clone().singular_values().iter().copied().fold(f64::INFINITY, f64::min)
}

impl NormalForm {
    pub fn rank(&self) -> usize {
        self.a0.nrows()
    }

    pub fn lambda(&self) -> f64 {
        self.system.lambda
    }

    /// `Â_z̃ = 𝔈A_z̃`.
    pub fn a_normal_hat(&self) -> &CMat {
        self.a_hat.last().expect("at least one spatial direction")
    }

    pub fn a_normal(&self) -> &CMat {
        self.a_sym.last().expect("at least one spatial direction")
    }

    /// Eigenvalues of `1 − aγ₀γₙ` (real: the matrix is Hermitian).
    pub fn multiplier_spectrum(&self) -> Vec<f64> {
        crate::linalg::hermitian_eigenvalues(&self.multiplier)
    }

    /// Ascending speeds `μ` of `A_z̃ v = μ A₀ v` with `A₀`-orthonormal vectors.
    pub fn characteristics(&self) -> Result<(Vec<f64>, CMat)> {
        generalized_hermitian_eigen(self.a_normal(), &self.a0)
    }

    /// Spectral radius of `Â_z̃`.
    pub fn max_speed(&self) -> f64 {
        self.characteristics()
            .map(|(v, _)| v.iter().map(|x| x.abs()).fold(0.0, f64::max))
            .unwrap_or_else(|_| self.a_normal_hat().clone().singular_values().max())
    }

    /// `𝔊u = −(Â_z̃ ∂z u + B̂ u)` for one-dimensional data, given `u` and `∂z u`.
    pub fn apply_g(&self, u: &[C64], uz: &[C64]) -> Vec<C64> {
        let n = self.rank();
        (0..n)
            .map(|i| {
                let mut acc = C64::new(0.0, 0.0);
                for j in 0..n {
                    acc -= self.a_normal_hat()[(i, j)] * uz[j] + self.b_hat[(i, j)] * u[j];
                }
                acc
            })
            .collect()
    }

    pub fn summary(&self) -> NormalFormSummary {
        NormalFormSummary {
            multiplier_spectrum: self.multiplier_spectrum(),
            characteristic_speeds: self.characteristics().map(|(v, _)| v).unwrap_or_default(),
            a_normal_det_abs: self.a_normal_hat().determinant().norm(),
            dt_coefficient_residual: max_abs(&(&self.e * &self.a0 - identity(self.rank()))),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::clifford::build_gamma_rep;
    use crate::geometry::{diagonal_metric, make_half_minkowski};
    use crate::linalg::{c, from_rows};
    use proptest::prelude::*;

    fn flat(n: usize, a: f64, lambda: f64) -> HyperbolicSystem {
        let g = make_half_minkowski(n, a, 1.0, 4.0).unwrap();
        dirac_to_system(&g, &build_gamma_rep(n).unwrap(), lambda, None).unwrap()
    }

    fn exp_density(lambda: f64) -> HyperbolicSystem {
        let g = diagonal_metric(1, Expr::parse("1").unwrap(), Expr::parse("exp(t)").unwrap(), 1.0, 2.0).unwrap();
        dirac_to_system(&g, &build_gamma_rep(1).unwrap(), lambda, None).unwrap()
    }

    #[test]
    fn flat_coefficients() {
        let s = flat(3, 0.0, 1.0);
        assert!(max_abs(&(s.a0_at(0.0, 0.0) - identity(4))) == 0.0);
        for j in 0..3 {
            assert!(hermitian_residual(&s.a_at(j, 0.3, 0.2)) < 1e-15);
        }
        let s = flat(1, 0.0, 0.0);
        let expected = from_rows(&[&[c(0.0, 0.0), c(0.0, 1.0)], &[c(0.0, -1.0), c(0.0, 0.0)]]);
        assert!(max_abs(&(s.a_normal_at(0.0, 0.0) - expected)) < 1e-15);
        assert_eq!(max_abs(&s.b()), 0.0);
    }

    #[test]
    fn dimension_mismatch() {
        let g = make_half_minkowski(2, 0.0, 1.0, 1.0).unwrap();
        assert!(matches!(
            dirac_to_system(&g, &build_gamma_rep(3).unwrap(), 0.0, None),
            Err(Error::Structural(_))
        ));
    }

    #[test]
    fn kappa_examples() {
        let s = flat(3, 0.0, 1.0);
        let region = Region::lattice(&s.geometry, 3, 3);
        let k = compute_kappa(&s, &region).unwrap();
        assert!((k.min_eig - 1.0).abs() < 1e-12);
        assert!(max_abs(&(&k.samples[0].kappa - identity(4))) < 1e-12);
        let k0 = compute_kappa(&flat(1, 0.0, 0.0), &region).unwrap();
        assert_eq!(k0.min_eig, 0.0);
        let s = exp_density(2.0);
        let region = Region::lattice(&s.geometry, 5, 5);
        let sym = compute_kappa(&s, &region).unwrap();
        let fd = compute_kappa_with(&s, &region, KappaMethod::FiniteDifference).unwrap();
        assert!((sym.min_eig - 1.0).abs() < 1e-12);
        assert!((fd.min_eig - 1.0).abs() < 1e-7);
    }

    #[test]
    fn lambda_selection() {
        let s = flat(1, 0.0, 0.0);
        let region = Region::lattice(&s.geometry, 3, 3);
        assert!((choose_lambda(&s, &region, 0.5).unwrap() - 0.5).abs() <= LAMBDA_TOL);
        let s = exp_density(0.0);
        let region = Region::lattice(&s.geometry, 5, 5);
        assert!((choose_lambda(&s, &region, 0.5).unwrap() - 1.5).abs() <= LAMBDA_TOL);
        assert!(matches!(choose_lambda(&s, &region, 0.0), Err(Error::MarginNotPositive(_))));
        assert!(matches!(choose_lambda(&s, &Region::points(vec![]), 0.5), Err(Error::Structural(_))));
    }

    #[test]
    fn symbol_examples() {
        let s = flat(1, 0.0, 0.0);
        let r = check_symbol(&s, &[Covector::dt(1)], &[]);
        assert!((r.min_eigenvalue - 1.0).abs() < 1e-15 && r.hyperbolic && r.symmetric);
        let r = check_symbol(&s, &[Covector::along_normal(1, 0.9)], &[]);
        assert!((r.min_eigenvalue - 0.1).abs() < 1e-12);
        let r = check_symbol(&s, &[Covector::along_normal(1, 1.0)], &[]);
        assert!(r.min_eigenvalue.abs() < 1e-12);
        assert!(!check_symbol(&s, &[Covector::along_normal(1, 1.0 + 1e-9)], &[]).hyperbolic);
    }

    #[test]
    fn normal_form_examples() {
        let nf = normal_form(&flat(1, 0.0, 1.0)).unwrap();
        assert!(max_abs(&(&nf.e - identity(2))) < 1e-15);
        assert!(max_abs(&(&nf.b_hat - identity(2))) < 1e-15);
        assert!(nf.a_normal_hat().determinant().norm() > 0.5);
        let nf = normal_form(&flat(1, 0.5, 0.0)).unwrap();
        let spec = nf.multiplier_spectrum();
        assert!((spec[0] - 0.5).abs() < 1e-12 && (spec[1] - 1.5).abs() < 1e-12);
        let (speeds, _) = nf.characteristics().unwrap();
        assert!((speeds[0] + 1.0).abs() < 1e-12 && (speeds[1] - 1.0).abs() < 1e-12);
        assert!(max_abs(&(&nf.e * &nf.a0 - identity(2))) < 1e-14);
        assert!(matches!(normal_form(&exp_density(1.0)), Err(Error::Unsupported(_))));
    }

    #[test]
    fn mass_leaves_kappa_and_potential_shifts_it() {
        let g = make_half_minkowski(1, 0.0, 1.0, 1.0).unwrap();
        let rep = build_gamma_rep(1).unwrap();
        let region = Region::lattice(&g, 2, 2);
        let s = dirac_to_system(&g, &rep, 1.0, Some(mass_term(&rep, 3.0))).unwrap();
        assert!((compute_kappa(&s, &region).unwrap().min_eig - 1.0).abs() < 1e-12);
        let s = dirac_to_system(&g, &rep, 1.0, Some(potential_term(&rep, 0.25))).unwrap();
        assert!((compute_kappa(&s, &region).unwrap().min_eig - 1.25).abs() < 1e-12);
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(100))]
        #[test]
        fn symmetric_and_hyperbolic_on_random_samples(
            n in 1usize..4,
            a in -0.95f64..0.95,
            t in 0.0f64..1.0,
            z in 0.0f64..4.0,
            dir in proptest::collection::vec(-1.0f64..1.0, 3),
            speed in 0.0f64..0.999,
        ) {
            let s = flat(n, a, 0.5);
            prop_assert!(s.symmetry_residual(t, z) <= ALGEBRA_TOL);
            let d: Vec<f64> = dir[..n].to_vec();
            let norm = d.iter().map(|x| x * x).sum::<f64>().sqrt().max(1e-9);
            let tau = Covector { alpha: d.iter().map(|x| x / norm * speed).collect() };
            let r = check_symbol(&s, &[tau], &[(t, z)]);
            prop_assert!(r.hyperbolic);
            prop_assert!(r.symmetric);
        }
    }
}
