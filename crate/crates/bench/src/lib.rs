//! Fixtures shared by the benchmarks: a reflecting packet on the unit-speed strip.

use dirac_core::{
    build_gamma_rep, dirac_to_system, make_half_minkowski, make_mit, normal_form, BoundaryCondition, CauchyData, Grid,
    NormalForm, Side, SpinorField,
};

pub const LENGTH: f64 = 4.0;
pub const HORIZON: f64 = 1.0;

pub struct Fixture {
    pub nf: NormalForm,
    pub left: BoundaryCondition,
    pub right: BoundaryCondition,
    pub data: CauchyData,
}

pub fn fixture(lambda: f64) -> Fixture {
    let rep = build_gamma_rep(1).expect("n = 1");
    let geometry = make_half_minkowski(1, 0.0, HORIZON, LENGTH).expect("static wall");
    let nf = normal_form(&dirac_to_system(&geometry, &rep, lambda, None).expect("system")).expect("normal form");
    let data = CauchyData::new(
        SpinorField::parse(&["gaussian(1, 0.15)", "i*gaussian(1, 0.15)"]).expect("parses"),
        SpinorField::zero(2),
    );
    Fixture { left: make_mit(&rep, Side::Left), right: make_mit(&rep, Side::Right), nf, data }
}

pub fn grid(nz: usize) -> Grid {
    Grid::new(nz, LENGTH, dirac_core::solver::DEFAULT_CFL).expect("valid grid")
}
