//! Minimal Dirac representations of the Clifford relations
//! `γ(u)γ(v) + γ(v)γ(u) = −2 g(u, v)` in signature `(−, +, …, +)`.
//!
//! The representation is built by tensor doubling: a family of mutually
//! anticommuting Hermitian involutions `E₀ … E_{2m}` of size `2^m` is
//! extended to size `2^{m+1}` via `σ_z ⊗ I, σ_x ⊗ E_k, σ_y ⊗ I`. Then
//! `γ(e₀) = E₀` and `γ(e_j) = i E_j`.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::linalg::{self, c, identity, max_abs, CMat, C64, I};

/// Algebra residual tolerance.
pub const ALGEBRA_TOL: f64 = 1e-12;

/// Largest spatial dimension we will build (rank 2^8 = 256).
pub const MAX_SPATIAL_DIM: usize = 16;

#[derive(Debug, Clone, PartialEq)]
pub struct GammaRep {
    spatial_dim: usize,
    rank: usize,
    gamma0: CMat,
    gammas: Vec<CMat>,
}

/// Maximal entrywise residual for each defining identity.
#[derive(Debug, Clone, Serialize, PartialEq)]
pub struct AlgebraReport {
    pub spatial_dim: usize,
    pub rank: usize,
    /// max over μ, ν of |γ_μγ_ν + γ_νγ_μ + 2η_μν|.
    pub anticommutator: f64,
    /// The μ = ν = 0 slot alone, i.e. |γ(e₀)² − Id|.
    pub gamma0_square: f64,
    pub gamma0_hermitian: f64,
    pub spatial_anti_hermitian: f64,
    /// max_j |(γ₀γ_j)† − γ₀γ_j|.
    pub flux_hermitian: f64,
    pub passed: bool,
}

impl AlgebraReport {
    pub fn max_residual(&self) -> f64 {
        [
            self.anticommutator,
            self.gamma0_square,
            self.gamma0_hermitian,
            self.spatial_anti_hermitian,
            self.flux_hermitian,
        ]
        .into_iter()
        .fold(0.0, f64::max)
    }
}

fn pauli() -> [CMat; 3] {
    let z = c(0.0, 0.0);
    let one = c(1.0, 0.0);
    [
        linalg::from_rows(&[&[z, one], &[one, z]]),
        linalg::from_rows(&[&[z, -I], &[I, z]]),
        linalg::from_rows(&[&[one, z], &[z, -one]]),
    ]
}

pub fn rank_for(spatial_dim: usize) -> usize {
    1usize << ((spatial_dim + 1) / 2)
}

/// Builds the fixed representation for `spatial_dim` space dimensions.
pub fn build_gamma_rep(spatial_dim: usize) -> Result<GammaRep> {
    if spatial_dim == 0 {
        return Err(Error::Structural("spatial dimension must be at least 1".into()));
    }
    if spatial_dim > MAX_SPATIAL_DIM {
        return Err(Error::Resource(format!(
            "spatial dimension {spatial_dim} exceeds the limit {MAX_SPATIAL_DIM}"
        )));
    }
    let levels = (spatial_dim + 1) / 2;
    let [sx, sy, sz] = pauli();
    // n = 1 seed: E₀ = σ_z, E₁ = σ_x, E₂ = σ_y.
    let mut family = vec![sz.clone(), sx.clone(), sy.clone()];
    for _ in 1..levels {
        let id = identity(family[0].nrows());
        let mut next = Vec::with_capacity(family.len() + 2);
        next.push(sz.kronecker(&id));
        for e in &family {
            next.push(sx.kronecker(e));
        }
        next.push(sy.kronecker(&id));
        family = next;
    }
    let gamma0 = family[0].clone();
    let gammas = family[1..=spatial_dim].iter().map(|e| e * I).collect();
    Ok(GammaRep {
        spatial_dim,
        rank: gamma0.nrows(),
        gamma0,
        gammas,
    })
}

impl GammaRep {
    /// Accepts user matrices; they must pass [`verify_clifford`].
    pub fn from_matrices(gamma0: CMat, gammas: Vec<CMat>) -> Result<Self> {
        let rep = Self::from_matrices_unchecked(gamma0, gammas)?;
        let report = verify_clifford(&rep)?;
        if !report.passed {
            return Err(Error::Structural(format!(
                "representation violates the Clifford relations (max residual {:.3e})",
                report.max_residual()
            )));
        }
        Ok(rep)
    }

    /// Shape-checked only; used to build deliberately broken representations.
    pub fn from_matrices_unchecked(gamma0: CMat, gammas: Vec<CMat>) -> Result<Self> {
        let n = gamma0.nrows();
        if gamma0.ncols() != n || gammas.iter().any(|g| g.nrows() != n || g.ncols() != n) {
            return Err(Error::Structural("gamma matrices must share one square shape".into()));
        }
        if gammas.is_empty() {
            return Err(Error::Structural("need at least one spatial gamma".into()));
        }
        Ok(Self {
            spatial_dim: gammas.len(),
            rank: n,
            gamma0,
            gammas,
        })
    }

    pub fn spatial_dim(&self) -> usize {
        self.spatial_dim
    }

    pub fn rank(&self) -> usize {
        self.rank
    }

    pub fn gamma0(&self) -> &CMat {
        &self.gamma0
    }

    /// γ(e_j) for j = 1..=n.
    pub fn gamma(&self, j: usize) -> &CMat {
        &self.gammas[j - 1]
    }

    pub fn gammas(&self) -> &[CMat] {
        &self.gammas
    }

    /// γ(e_μ) for μ = 0..=n.
    pub fn gamma_mu(&self, mu: usize) -> &CMat {
        if mu == 0 {
            &self.gamma0
        } else {
            self.gamma(mu)
        }
    }

    /// γ(e₀)γ(e_j), Hermitian for every j ≥ 1.
    pub fn flux_matrix(&self, j: usize) -> CMat {
        &self.gamma0 * self.gamma(j)
    }

    /// Clifford multiplication by `v = v⁰e₀ + Σ vʲe_j`.
    pub fn clifford(&self, v: &[f64]) -> CMat {
        let mut m = CMat::zeros(self.rank, self.rank);
        for (mu, &coef) in v.iter().enumerate() {
            m += self.gamma_mu(mu) * C64::from(coef);
        }
        m
    }

    /// Volume-element chirality candidate `φ·γ₀γ₁…γ_n` with the phase fixed by
    /// `G² = Id`. Anticommutes with Clifford multiplication only for odd `n`.
    pub fn volume_element(&self) -> CMat {
        let mut g = self.gamma0.clone();
        for gj in &self.gammas {
            g = g * gj;
        }
        let sq = &g * &g;
        // sq = ±Id; pick the phase accordingly.
        if sq[(0, 0)].re < 0.0 {
            g * I
        } else {
            g
        }
    }

    /// Nested `[re, im]` array layout used in reports.
    pub fn to_nested(&self) -> Vec<Vec<Vec<[f64; 2]>>> {
        std::iter::once(&self.gamma0)
            .chain(self.gammas.iter())
            .map(|m| {
                (0..m.nrows())
                    .map(|i| (0..m.ncols()).map(|j| [m[(i, j)].re, m[(i, j)].im]).collect())
                    .collect()
            })
            .collect()
    }
}

fn eta(mu: usize, nu: usize) -> f64 {
    match (mu, nu) {
        (0, 0) => -1.0,
        (a, b) if a == b => 1.0,
        _ => 0.0,
    }
}

pub fn verify_clifford(rep: &GammaRep) -> Result<AlgebraReport> {
    let n = rep.rank;
    if rep.gamma0.shape() != (n, n) || rep.gammas.iter().any(|g| g.shape() != (n, n)) {
        return Err(Error::Structural("inconsistent gamma shapes".into()));
    }
    let id = identity(n);
    let dim = rep.spatial_dim + 1;
    let mut anticommutator: f64 = 0.0;
    for mu in 0..dim {
        for nu in mu..dim {
            let (a, b) = (rep.gamma_mu(mu), rep.gamma_mu(nu));
            let r = a * b + b * a + &id * C64::from(2.0 * eta(mu, nu));
            anticommutator = anticommutator.max(max_abs(&r));
        }
    }
    let gamma0_square = max_abs(&(&rep.gamma0 * &rep.gamma0 - &id));
    let gamma0_hermitian = linalg::hermitian_residual(&rep.gamma0);
    let spatial_anti_hermitian = rep
        .gammas
        .iter()
        .map(linalg::anti_hermitian_residual)
        .fold(0.0, f64::max);
    let flux_hermitian = (1..=rep.spatial_dim)
        .map(|j| linalg::hermitian_residual(&rep.flux_matrix(j)))
        .fold(0.0, f64::max);
    let mut report = AlgebraReport {
        spatial_dim: rep.spatial_dim,
        rank: n,
        anticommutator,
        gamma0_square,
        gamma0_hermitian,
        spatial_anti_hermitian,
        flux_hermitian,
        passed: false,
    };
    report.passed = report.max_residual() <= ALGEBRA_TOL;
    Ok(report)
}
