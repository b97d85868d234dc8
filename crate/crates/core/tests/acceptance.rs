//! Acceptance suite. Each test prints one line per criterion:
//! `criterion N: PASS|FAIL <details> (<runtime>)`.

use std::time::{Duration, Instant};

use dirac_core::boundary::{make_mit, make_mit_moving, BoundaryCondition, Side};
use dirac_core::clifford::{build_gamma_rep, verify_clifford};
use dirac_core::data::{CauchyData, SpinorField};
use dirac_core::geometry::{make_half_minkowski, Interval, SpacetimeBox};
use dirac_core::linalg::{identity, max_abs, C64};
use dirac_core::solver::{solve_ibvp, solve_ibvp_with, Grid, SolveOptions, Trajectory};
use dirac_core::system::{compute_kappa, dirac_to_system, normal_form, symbol_at, Covector, HyperbolicSystem, NormalForm, Region};
use dirac_core::verify::compat::{compatibility_certificate, CompatibilityStudy};
use dirac_core::verify::{
    characteristic_oracle, energy_certificate, green_certificate, oracle_ladder, probe_invariance, solve_adjoint,
    speed_certificate, uniqueness_certificate, weak_residual_certificate, Problem,
};

const CFL: f64 = 0.5;
const LADDER: [usize; 3] = [201, 401, 801];

struct Setup {
    system: HyperbolicSystem,
    nf: NormalForm,
    left: BoundaryCondition,
    right: BoundaryCondition,
}

fn setup(a: f64, lambda: f64, horizon: f64, length: f64) -> Setup {
    let rep = build_gamma_rep(1).unwrap();
    let geometry = make_half_minkowski(1, a, horizon, length).unwrap();
    let system = dirac_to_system(&geometry, &rep, lambda, None).unwrap();
    let nf = normal_form(&system).unwrap();
    let (left, right) = if a == 0.0 {
        (make_mit(&rep, Side::Left), make_mit(&rep, Side::Right))
    } else {
        (make_mit_moving(&rep, Side::Left, a).unwrap(), make_mit_moving(&rep, Side::Right, a).unwrap())
    };
    Setup { system, nf, left, right }
}

fn report(criterion: usize, passed: bool, details: &str, elapsed: Duration, budget: Duration) -> bool {
    let in_time = elapsed < budget;
    let ok = passed && in_time;
    println!(
        "criterion {criterion}: {} {details} ({:.2}s, budget {}s)",
        if ok { "PASS" } else { "FAIL" },
        elapsed.as_secs_f64(),
        budget.as_secs()
    );
    ok
}

/// Left-moving (`sign < 0`) or right-moving Gaussian packet along a characteristic.
fn packet(s: &Setup, centre: f64, width: f64, sign: f64) -> SpinorField {
    let oracle = characteristic_oracle(&s.nf, &s.left, &s.right, &CauchyData::zero(2)).unwrap();
    let v = if sign < 0.0 { oracle.v_minus } else { oracle.v_plus };
    SpinorField::profile(vec![v[0], v[1]], move |_, z| (-((z - centre) / width).powi(2) / 2.0).exp())
}

fn grid(s: &Setup, nz: usize) -> Grid {
    Grid::new(nz, s.system.geometry.length, CFL).unwrap()
}

#[test]
fn criterion_01_clifford_and_hermiticity() {
    let start = Instant::now();
    let mut worst: f64 = 0.0;
    let mut passed = true;
    for n in 1..=3 {
        let rep = build_gamma_rep(n).unwrap();
        let r = verify_clifford(&rep).unwrap();
        worst = worst.max(r.max_residual());
        passed &= r.passed && r.max_residual() <= 1e-12;
    }
    let rep = build_gamma_rep(3).unwrap();
    let g = make_half_minkowski(3, 0.0, 1.0, 1.0).unwrap();
    let sys = dirac_to_system(&g, &rep, 1.0, None).unwrap();
    let kappa = compute_kappa(&sys, &Region::lattice(&g, 3, 3)).unwrap();
    let kappa_dev = kappa.samples.iter().map(|s| max_abs(&(&s.kappa - identity(4)))).fold(0.0, f64::max);
    let sigma = symbol_at(&sys, &Covector::dt(3), 0.3, 0.5);
    let sigma_dev = max_abs(&(sigma - identity(4)));
    passed &= kappa_dev <= 1e-12 && sigma_dev <= 1e-12;
    let details = format!("algebra {worst:.1e}, |κ − Id| {kappa_dev:.1e}, |σ(dt) − Id| {sigma_dev:.1e}");
    assert!(report(1, passed, &details, start.elapsed(), Duration::from_secs(1)));
}

#[test]
fn criterion_02_mit_algebra() {
    let start = Instant::now();
    let mut worst: f64 = 0.0;
    for n in 1..=3 {
        let rep = build_gamma_rep(n).unwrap();
        for side in [Side::Left, Side::Right] {
            let bc = make_mit(&rep, side);
            let (pp, pm) = bc.mit_projectors().unwrap();
            let id = identity(rep.rank());
            let k = bc.kernel_basis();
            let flux = k.adjoint() * bc.flux_matrix() * k;
            let adj = dirac_core::boundary::adjoint_condition(&bc, &rep).unwrap();
            let kernel_gap = dirac_core::linalg::subspace_distance(k, adj.kernel_basis());
            for r in [
                max_abs(&(&pp + &pm - &id)),
                max_abs(&(&pp * &pp - &pp)),
                max_abs(&(&pm * &pm - &pm)),
                max_abs(&(&pp * &pm)),
                max_abs(&flux),
                kernel_gap,
            ] {
                worst = worst.max(r);
            }
        }
    }
    let details = format!("largest residual {worst:.1e}");
    assert!(report(2, worst <= 1e-10, &details, start.elapsed(), Duration::from_secs(1)));
}

fn energy_source() -> SpinorField {
    SpinorField::parse(&["gaussian(t, 0.5, 0.1)*gaussian(2, 0.2)", "0.5i*gaussian(t, 0.5, 0.1)*gaussian(2.2, 0.2)"]).unwrap()
}

#[test]
fn criterion_03_energy_inequality() {
    let start = Instant::now();
    let mut passed = true;
    let mut details = Vec::new();
    for lambda in [1.0, 2.0] {
        let s = setup(0.0, lambda, 1.0, 4.0);
        let g = grid(&s, 401);
        let data = CauchyData::new(SpinorField::zero(2), energy_source());
        let traj = solve_ibvp(&s.nf, &s.left, &s.right, &data, &g, 1.0).unwrap();
        let forward = energy_certificate(&traj, &s.system, &data.source).unwrap();
        let (reversed, reversed_source, adj) = solve_adjoint(&s.system, &s.left, &s.right, &energy_source(), &g).unwrap();
        let adjoint = energy_certificate(&adj, &reversed, &reversed_source).unwrap();
        passed &= forward.passed && adjoint.passed;
        details.push(format!(
            "λ={lambda}: ratio {:.4} adjoint {:.4} (≤ {:.4})",
            forward.quantities["ratio"],
            adjoint.quantities["ratio"],
            1.02 / lambda
        ));
    }
    assert!(report(3, passed, &details.join("; "), start.elapsed(), Duration::from_secs(30)));
}

fn speed_runs(s: &Setup, nz: usize) -> Vec<(&'static str, Trajectory, CauchyData, bool)> {
    let g = grid(s, nz);
    let interior = CauchyData::new(SpinorField::parse(&["bump(2, 0.3)", "i*bump(2, 0.3)"]).unwrap(), SpinorField::zero(2))
        .with_initial_support(Interval::new(1.7, 2.3));
    let reflecting = CauchyData::new(SpinorField::parse(&["bump(0.8, 0.3)", "-bump(0.8, 0.3)"]).unwrap(), SpinorField::zero(2))
        .with_initial_support(Interval::new(0.5, 1.1));
    let sourced = CauchyData::new(SpinorField::zero(2), SpinorField::parse(&["bump(t, 0.5, 0.2)*bump(2, 0.3)", "0"]).unwrap())
        .with_source_support(SpacetimeBox { t: Interval::new(0.3, 0.7), z: Interval::new(1.7, 2.3) });
    let horizon = s.system.geometry.time_horizon;
    let mut out = Vec::new();
    for (name, data) in [("interior", interior.clone()), ("reflecting", reflecting), ("sourced", sourced)] {
        let traj = solve_ibvp(&s.nf, &s.left, &s.right, &data, &g, horizon).unwrap();
        out.push((name, traj, data, true));
    }
    let planted = SolveOptions { plant_speed_violation: true, ..SolveOptions::default() };
    let traj = solve_ibvp_with(&s.nf, &s.left, &s.right, &interior, &g, horizon, &planted).unwrap();
    out.push(("planted", traj, interior, false));
    out
}

fn check_speed(s: &Setup, nz: usize) -> (bool, String) {
    let mut passed = true;
    let mut parts = Vec::new();
    for (name, traj, data, expect_pass) in speed_runs(s, nz) {
        let c = speed_certificate(&traj, &data, &s.system.geometry).unwrap();
        passed &= c.passed == expect_pass;
        parts.push(format!("{name} excess {:.2e}/{:.2e} {}", c.measured, c.bound, if c.passed { "pass" } else { "fail" }));
    }
    (passed, parts.join(", "))
}

#[test]
fn criterion_04_finite_speed() {
    let start = Instant::now();
    let s = setup(0.0, 0.0, 1.5, 4.0);
    let (passed, details) = check_speed(&s, 401);
    assert!(report(4, passed, &details, start.elapsed(), Duration::from_secs(60)));
}

struct OracleCheck {
    passed: bool,
    details: String,
}

fn oracle_convergence(a: f64) -> OracleCheck {
    let mut passed = true;
    let mut parts = Vec::new();
    // Free transport: a packet in the middle that stays clear of both walls.
    let s = setup(a, 0.0, 1.0, 4.0);
    let data = CauchyData::new(packet(&s, 2.0, 0.15, -1.0), SpinorField::zero(2));
    let oracle = characteristic_oracle(&s.nf, &s.left, &s.right, &data).unwrap();
    let r = oracle_ladder(&s.nf, &s.left, &s.right, &data, &oracle, &LADDER, 1.0, CFL).unwrap();
    passed &= r.within(1.9, 2.1);
    parts.push(format!("free orders {:.3?}", r.orders));
    // Reflection off the left wall.
    let s = setup(a, 0.0, 2.0, 4.0);
    let data = CauchyData::new(packet(&s, 1.0, 0.15, -1.0), SpinorField::zero(2));
    let oracle = characteristic_oracle(&s.nf, &s.left, &s.right, &data).unwrap();
    let r = oracle_ladder(&s.nf, &s.left, &s.right, &data, &oracle, &LADDER, 2.0, CFL).unwrap();
    passed &= r.within(1.9, 2.1);
    parts.push(format!("reflection orders {:.3?}", r.orders));
    let unit = (oracle.reflection_left.norm() - 1.0).abs().max((oracle.reflection_right.norm() - 1.0).abs());
    passed &= unit <= 1e-10;
    parts.push(format!("|R| − 1 = {unit:.1e}"));
    let mut gaps = Vec::new();
    for nz in LADDER {
        let traj = solve_ibvp(&s.nf, &s.left, &s.right, &data, &grid(&s, nz), 2.0).unwrap();
        let m = oracle.measured_reflection_modulus(&traj, 0, traj.snapshots() - 1);
        gaps.push((m - 1.0).abs());
    }
    // O(Δz²): the deviation must shrink by about four per halving.
    let shrink = gaps.windows(2).all(|w| w[0] / w[1] >= 3.0);
    passed &= shrink;
    let gaps_s: Vec<String> = gaps.iter().map(|g| format!("{g:.2e}")).collect();
    parts.push(format!("solver |R| − 1 [{}]", gaps_s.join(", ")));
    OracleCheck { passed, details: parts.join(", ") }
}

#[test]
fn criterion_05_oracle_convergence() {
    let start = Instant::now();
    let c = oracle_convergence(0.0);
    assert!(report(5, c.passed, &c.details, start.elapsed(), Duration::from_secs(120)));
}

#[test]
fn criterion_06_uniqueness_and_stability() {
    let start = Instant::now();
    let s = setup(0.0, 1.0, 1.0, 4.0);
    let data = CauchyData::new(SpinorField::parse(&["bump(1.5, 0.5)", "0"]).unwrap(), energy_source());
    let problem = Problem {
        nf: s.nf.clone(),
        bc_left: s.left.clone(),
        bc_right: s.right.clone(),
        data,
        grid: grid(&s, 401),
        horizon: 1.0,
        options: SolveOptions::default(),
    };
    let perturbation = SpinorField::parse(&["bump(t, 0.5, 0.3)*gaussian(2.5, 0.3)", "i*bump(t, 0.5, 0.3)*gaussian(2.5, 0.3)"]).unwrap();
    let same = uniqueness_certificate(&problem, 0.0, &perturbation).unwrap();
    let stable = uniqueness_certificate(&problem, 1e-3, &perturbation).unwrap();
    // The perturbation lives at z ≥ 1.3 for t ≥ 0.2; the probe sits outside its future.
    let far = SpinorField::parse(&["bump(t, 0.5, 0.2)*bump(3.4, 0.3)", "0"]).unwrap();
    let probe = probe_invariance(&problem, &far, &SpacetimeBox { t: Interval::new(0.0, 1.0), z: Interval::new(0.0, 1.5) }).unwrap();
    let passed = same.passed && stable.passed && probe.passed;
    let details = format!(
        "δ=0 bitwise {}, δ=1e-3 difference {:.4e} ≤ {:.4e}, probe change {:.1e}",
        same.passed,
        stable.measured,
        stable.bound * 1.02,
        probe.measured
    );
    assert!(report(6, passed, &details, start.elapsed(), Duration::from_secs(60)));
}

#[test]
fn criterion_07_weak_residual() {
    let start = Instant::now();
    let s = setup(0.0, 0.5, 2.0, 4.0);
    let data = CauchyData::new(packet(&s, 1.0, 0.2, -1.0), energy_source());
    let coarse = solve_ibvp(&s.nf, &s.left, &s.right, &data, &grid(&s, 201), 2.0).unwrap();
    let fine = solve_ibvp(&s.nf, &s.left, &s.right, &data, &grid(&s, 401), 2.0).unwrap();
    let cert = weak_residual_certificate(&coarse, &fine, &s.nf, &s.left, &s.right, &data, 24, 2024).unwrap();
    let shift = [C64::new(0.1, 0.0), C64::new(0.0, -0.1)];
    let control =
        weak_residual_certificate(&coarse.shifted(&shift), &fine.shifted(&shift), &s.nf, &s.left, &s.right, &data, 24, 2024)
            .unwrap();
    let passed = cert.passed && !control.passed;
    let details = format!(
        "reduction {:.2} (≥ 3), control reduction {:.2} ({})",
        cert.quantities["reduction"],
        control.quantities["reduction"],
        if control.passed { "pass" } else { "fail" }
    );
    assert!(report(7, passed, &details, start.elapsed(), Duration::from_secs(120)));
}

#[test]
fn criterion_08_compatibility() {
    let start = Instant::now();
    let study = CompatibilityStudy::standard(LADDER.to_vec()).unwrap();
    let r = compatibility_certificate(&study, 3).unwrap();
    let details = format!(
        "compatible orders {:.3?}, incompatible orders {:.3?}, ρ₁ {:.3e}, tracked {} snapshots, worst offset {:.2e}",
        r.compatible_order.orders,
        r.incompatible_order.orders,
        r.incompatible_jets.rho(1),
        r.tracking.len(),
        r.certificate.quantities["tracking_error"]
    );
    assert!(report(8, r.certificate.passed, &details, start.elapsed(), Duration::from_secs(120)));
}

#[test]
fn criterion_09_green_operators() {
    let start = Instant::now();
    let s = setup(0.0, 0.0, 1.0, 4.0);
    let f = SpinorField::parse(&["bump(t, 0.5, 0.3)*gaussian(2, 0.2)", "0.5*bump(t, 0.5, 0.3)*gaussian(2, 0.2)"]).unwrap();
    let support = SpacetimeBox { t: Interval::new(0.2, 0.8), z: Interval::new(0.6, 3.4) };
    let c = green_certificate(&s.system, &s.left, &s.right, &f, &support, &grid(&s, 201), &grid(&s, 401)).unwrap();
    let details = c.checks.iter().map(|k| format!("{} {:.3e}", k.name, k.value)).collect::<Vec<_>>().join(", ");
    assert!(report(9, c.passed, &details, start.elapsed(), Duration::from_secs(120)));
}

#[test]
fn criterion_10_moving_boundary() {
    let start = Instant::now();
    let a = 0.5;
    let s = setup(a, 0.0, 1.5, 4.0);
    let spectrum = s.nf.multiplier_spectrum();
    let spectrum_ok = (spectrum[0] - 0.5).abs() < 1e-12 && (spectrum[1] - 1.5).abs() < 1e-12;
    let (speed_ok, speed) = check_speed(&s, 401);
    let oracle = oracle_convergence(a);
    let passed = spectrum_ok && speed_ok && oracle.passed;
    let details = format!("spectrum {spectrum:.6?}; {speed}; {}", oracle.details);
    assert!(report(10, passed, &details, start.elapsed(), Duration::from_secs(120)));
}
