use dirac_core::boundary::{from_matrix, make_mit, BoundaryCondition, Side};
use dirac_core::clifford::build_gamma_rep;
use dirac_core::data::{CauchyData, SpinorField};
use dirac_core::geometry::{make_half_minkowski, Direction, Interval, SpacetimeBox};
use dirac_core::linalg::{identity, projector, CMat, CVec, C64};
use dirac_core::solver::{solve_ibvp, Grid, Trajectory};
use dirac_core::system::{dirac_to_system, normal_form, NormalForm};
use dirac_core::verify::{
    characteristic_oracle, green_apply, probe_invariance, support_cone, weak_residual_certificate, Certificate,
    GreenDirection, Problem,
};
use proptest::prelude::*;

fn flat(lambda: f64, horizon: f64, length: f64) -> (NormalForm, BoundaryCondition, BoundaryCondition) {
    let rep = build_gamma_rep(1).unwrap();
    let g = make_half_minkowski(1, 0.0, horizon, length).unwrap();
    let nf = normal_form(&dirac_to_system(&g, &rep, lambda, None).unwrap()).unwrap();
    (nf, make_mit(&rep, Side::Left), make_mit(&rep, Side::Right))
}

#[test]
fn cone_of_unit_interval_at_half_time() {
    let g = make_half_minkowski(1, 0.0, 1.0, 4.0).unwrap();
    let data = CauchyData::zero(2).with_initial_support(Interval::new(1.0, 2.0));
    let cone = support_cone(&g, &data, Direction::Future, 0.0, 0.5).unwrap();
    assert_eq!(cone.intervals, vec![Interval::new(0.5, 2.5)]);
}

#[test]
fn sampled_oracle_is_a_weak_solution() {
    let (nf, l, r) = flat(0.0, 2.0, 4.0);
    let h = SpinorField::parse(&["gaussian(1, 0.2)", "0.5i*gaussian(1, 0.2)"]).unwrap();
    let data = CauchyData::new(h, SpinorField::zero(2));
    let oracle = characteristic_oracle(&nf, &l, &r, &data).unwrap();
    let sample = |nz: usize| {
        let grid = Grid::new(nz, 4.0, 0.5).unwrap();
        let steps = 2 * (nz - 1);
        let times: Vec<f64> = (0..=steps).map(|k| 2.0 * k as f64 / steps as f64).collect();
        Trajectory::sample(&grid, 2, &times, 1e-10, |t, z, out| oracle.eval(t, z, out))
    };
    let cert = weak_residual_certificate(&sample(201), &sample(401), &nf, &l, &r, &data, 20, 5).unwrap();
    assert!(cert.passed, "{}", cert.line());
}

#[test]
fn certificates_are_deterministic() {
    let (nf, l, r) = flat(0.5, 1.0, 4.0);
    let data = CauchyData::new(SpinorField::parse(&["gaussian(2, 0.3)", "0"]).unwrap(), SpinorField::zero(2));
    let run = |nz| solve_ibvp(&nf, &l, &r, &data, &Grid::new(nz, 4.0, 0.5).unwrap(), 1.0).unwrap();
    let (c, f) = (run(101), run(201));
    let a = weak_residual_certificate(&c, &f, &nf, &l, &r, &data, 20, 9).unwrap();
    let b = weak_residual_certificate(&c, &f, &nf, &l, &r, &data, 20, 9).unwrap();
    assert_eq!(a.measured.to_bits(), b.measured.to_bits());
}

#[test]
fn probe_detects_a_perturbation_in_its_past() {
    let (nf, l, r) = flat(1.0, 1.0, 4.0);
    let problem = Problem {
        nf,
        bc_left: l,
        bc_right: r,
        data: CauchyData::new(SpinorField::parse(&["bump(1, 0.5)", "0"]).unwrap(), SpinorField::zero(2)),
        grid: Grid::new(201, 4.0, 0.5).unwrap(),
        horizon: 1.0,
        options: Default::default(),
    };
    let near = SpinorField::parse(&["bump(t, 0.3, 0.2)*bump(1.2, 0.3)", "0"]).unwrap();
    let probe = SpacetimeBox { t: Interval::new(0.0, 1.0), z: Interval::new(0.0, 1.5) };
    assert!(!probe_invariance(&problem, &near, &probe).unwrap().passed);
}

#[test]
fn green_solutions_vanish_outside_their_time_cone() {
    let (nf, l, r) = flat(0.0, 1.0, 4.0);
    let f = SpinorField::parse(&["bump(t, 0.5, 0.2)*gaussian(2, 0.2)", "0"]).unwrap();
    let support = SpacetimeBox { t: Interval::new(0.3, 0.7), z: Interval::new(1.0, 3.0) };
    let grid = Grid::new(101, 4.0, 0.5).unwrap();
    let adv = green_apply(&nf.system, &l, &r, &f, &support, GreenDirection::Advanced, &grid).unwrap();
    let ret = green_apply(&nf.system, &l, &r, &f, &support, GreenDirection::Retarded, &grid).unwrap();
    for (k, &t) in adv.times.iter().enumerate() {
        if t <= 0.3 - 1e-12 {
            assert!(adv.fields[k].iter().all(|x| x.norm() == 0.0));
        }
    }
    for (k, &t) in ret.times.iter().enumerate() {
        if t >= 0.7 + 1e-12 {
            assert!(ret.fields[k].iter().all(|x| x.norm() == 0.0));
        }
    }
    assert!(adv.fields.last().unwrap().iter().any(|x| x.norm() > 0.0));
    assert!(ret.fields[0].iter().any(|x| x.norm() > 0.0));
}

/// Condition whose kernel is spanned by `v₊ + e^{iθ}v₋`, a flux-neutral line.
fn isotropic_condition(nf: &NormalForm, theta: f64, side: Side) -> BoundaryCondition {
    let (_, vecs) = nf.characteristics().unwrap();
    let k: CVec = vecs.column(1) + vecs.column(0) * C64::from_polar(1.0, theta);
    let k = &k / C64::from(k.norm());
    let m: CMat = identity(2) - projector(&CMat::from_columns(&[k]));
    from_matrix(&nf.system.rep, side, m, 0.0).unwrap()
}

proptest! {
    #[test]
    fn pass_flag_is_the_relative_bound(measured in 0.0f64..10.0, bound in 0.0f64..10.0, tol in 0.0f64..0.5) {
        let c = Certificate::bounded("p", measured, bound, tol);
        prop_assert_eq!(c.passed, measured <= bound * (1.0 + tol));
    }

    #[test]
    fn flux_neutral_conditions_reflect_with_unit_modulus(tl in 0.0f64..6.283, tr in 0.0f64..6.283) {
        let (nf, _, _) = flat(0.0, 1.0, 4.0);
        let l = isotropic_condition(&nf, tl, Side::Left);
        let r = isotropic_condition(&nf, tr, Side::Right);
        let o = characteristic_oracle(&nf, &l, &r, &CauchyData::zero(2)).unwrap();
        prop_assert!((o.reflection_left.norm() - 1.0).abs() <= 1e-10);
        prop_assert!((o.reflection_right.norm() - 1.0).abs() <= 1e-10);
        let state = &o.v_plus * o.reflection_left + &o.v_minus;
        prop_assert!((l.m() * state).norm() <= 1e-10);
    }
}
