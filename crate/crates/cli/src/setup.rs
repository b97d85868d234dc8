//! Turns a validated scenario into core objects.

use dirac_core::boundary::{make_chirality_moving, make_mit_moving, standard_chirality};
use dirac_core::geometry::diagonal_metric;
use dirac_core::system::{mass_term, potential_term};
use dirac_core::verify::{characteristic_oracle, Problem};
use dirac_core::{
    build_gamma_rep, choose_lambda, dirac_to_system, from_matrix, make_half_minkowski,
    normal_form, BoundaryCondition, CMat, CauchyData, Error, Expr, GammaRep, Geometry, Grid, HyperbolicSystem,
    Interval, NormalForm, OracleSolution, Region, Side, SolveOptions, SpacetimeBox, SpinorField,
};

use crate::error::CliError;
use crate::scenario::{BoundaryKindSpec, BoundarySpec, GeometryKindSpec, Scenario, SourceForm};

/// Lattice used to sample κ when choosing λ from a margin.
const MARGIN_LATTICE: usize = 9;

pub struct Setup {
    pub rep: GammaRep,
    pub geometry: Geometry,
    pub system: HyperbolicSystem,
    /// `None` for geometries the stepper does not handle.
    pub nf: Option<NormalForm>,
    pub bc_left: BoundaryCondition,
    pub bc_right: BoundaryCondition,
    pub data: CauchyData,
    pub grid: Grid,
    pub horizon: f64,
    pub options: SolveOptions,
}

impl Setup {
    pub fn build(s: &Scenario) -> Result<Self, CliError> {
        s.check_schema()?;
        let g = &s.geometry;
        let rep = build_gamma_rep(g.dim)?;
        let horizon = s.horizon();
        let geometry = match g.kind {
            GeometryKindSpec::HalfMinkowski => make_half_minkowski(g.dim, g.boundary_speed, g.time_horizon, g.length)?,
            GeometryKindSpec::DiagonalMetric => {
                let parse = |e: &Option<String>| e.as_deref().map(Expr::parse).unwrap_or(Ok(Expr::constant(1.0.into())));
                diagonal_metric(g.dim, parse(&g.lapse_expr)?, parse(&g.spatial_factor_expr)?, g.time_horizon, g.length)?
            }
        };
        let a = geometry.boundary_speed();

        let rank = rep.rank();
        let extra = mass_term(&rep, s.system.mass) + potential_term(&rep, s.system.potential);
        let mut system = dirac_to_system(&geometry, &rep, s.system.lambda.unwrap_or(0.0), Some(extra))?;
        if let Some(margin) = s.system.margin {
            let lambda = choose_lambda(&system, &Region::lattice(&geometry, MARGIN_LATTICE, MARGIN_LATTICE), margin)?;
            system = system.with_lambda(lambda);
        }
        let nf = match g.kind {
            GeometryKindSpec::HalfMinkowski => Some(normal_form(&system)?),
            GeometryKindSpec::DiagonalMetric => None,
        };

        let bc_left = boundary(&rep, Side::Left, &s.boundary.left, a)?;
        let bc_right = boundary(&rep, Side::Right, &s.boundary.right, a)?;

        let initial = field(s.data.initial_expr.as_deref(), rank, "initial_expr")?;
        let source = field(s.data.source_expr.as_deref(), rank, "source_expr")?;
        let mut data = match s.data.source_form {
            SourceForm::System => CauchyData::new(initial, source),
            SourceForm::Dirac => CauchyData::from_dirac(&source, &initial, rep.gamma0(), system.lambda),
        };
        for iv in &s.data.initial_support {
            data = data.with_initial_support(Interval::new(iv[0], iv[1]));
        }
        for b in &s.data.source_support {
            data = data.with_source_support(SpacetimeBox {
                t: Interval::new(b.t[0], b.t[1]),
                z: Interval::new(b.z[0], b.z[1]),
            });
        }
        data.validate(rank, g.length)?;

        let grid = Grid::new(s.solver.nz, g.length, s.solver.cfl)?;
        let options = SolveOptions {
            snapshot_every: s.solver.snapshot_every,
            support_eps: s.solver.support_eps,
            plant_speed_violation: s.solver.plant_speed_violation,
        };
        Ok(Self { rep, geometry, system, nf, bc_left, bc_right, data, grid, horizon, options })
    }

    pub fn normal_form(&self) -> Result<&NormalForm, CliError> {
        self.nf.as_ref().ok_or_else(|| {
            CliError::Core(Error::Unsupported("the time stepper handles half-Minkowski geometries only".into()))
        })
    }

    pub fn oracle(&self) -> Result<OracleSolution, CliError> {
        Ok(characteristic_oracle(self.normal_form()?, &self.bc_left, &self.bc_right, &self.data)?)
    }

    pub fn problem(&self) -> Result<Problem, CliError> {
        Ok(Problem {
            nf: self.normal_form()?.clone(),
            bc_left: self.bc_left.clone(),
            bc_right: self.bc_right.clone(),
            data: self.data.clone(),
            grid: self.grid,
            horizon: self.horizon,
            options: self.options.clone(),
        })
    }

    /// Grid with twice the resolution on nested nodes.
    pub fn refined_grid(&self) -> Result<Grid, CliError> {
        Ok(Grid::new(2 * self.grid.nz - 1, self.grid.length, self.grid.cfl)?)
    }

    /// The scenario perturbation, or a centred Gaussian in every component.
    pub fn perturbation(&self, s: &Scenario) -> Result<SpinorField, CliError> {
        match &s.verify.perturbation_expr {
            Some(exprs) => field(Some(exprs), self.rep.rank(), "perturbation_expr"),
            None => {
                let l = self.grid.length;
                let e = format!("gaussian({}, {})", 0.5 * l, 0.1 * l);
                let exprs = vec![e; self.rep.rank()];
                field(Some(&exprs), self.rep.rank(), "perturbation_expr")
            }
        }
    }
}

fn field(exprs: Option<&[String]>, rank: usize, key: &str) -> Result<SpinorField, CliError> {
    match exprs {
        None => Ok(SpinorField::zero(rank)),
        Some(list) => {
            if list.len() != rank {
                return Err(CliError::Schema(format!(
                    "{key} has {} components, the representation has rank {rank}",
                    list.len()
                )));
            }
            let refs: Vec<&str> = list.iter().map(String::as_str).collect();
            SpinorField::parse(&refs).map_err(|e| CliError::Schema(format!("{key}: {e}")))
        }
    }
}

fn matrix(rows: &[Vec<String>], rank: usize) -> Result<CMat, CliError> {
    if rows.len() != rank || rows.iter().any(|r| r.len() != rank) {
        return Err(CliError::Schema(format!("boundary matrix must be {rank}×{rank}")));
    }
    let mut m = CMat::zeros(rank, rank);
    for (i, row) in rows.iter().enumerate() {
        for (j, entry) in row.iter().enumerate() {
            m[(i, j)] = Expr::parse(entry)
                .ok()
                .and_then(|e| e.as_constant())
                .ok_or_else(|| CliError::Schema(format!("matrix entry \"{entry}\" is not a complex constant")))?;
        }
    }
    Ok(m)
}

fn boundary(rep: &GammaRep, side: Side, spec: &BoundarySpec, a: f64) -> Result<BoundaryCondition, CliError> {
    let given = spec.matrix.as_deref().map(|rows| matrix(rows, rep.rank())).transpose()?;
    let bc = match spec.kind {
        BoundaryKindSpec::Mit => make_mit_moving(rep, side, a)?,
        BoundaryKindSpec::Chirality => {
            let g = given.unwrap_or_else(|| standard_chirality(rep));
            make_chirality_moving(rep, side, &g, a)?
        }
        BoundaryKindSpec::Matrix => from_matrix(rep, side, given.unwrap_or_else(|| CMat::zeros(0, 0)), a)?,
    };
    Ok(bc)
}
