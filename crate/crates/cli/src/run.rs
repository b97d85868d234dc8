//! Stage planning, execution and report assembly.

use std::collections::BTreeMap;
use std::path::PathBuf;
use std::time::Instant;

use dirac_core::boundary::{admissibility_check, compatibility_jets, AdmissibilityReport};
use dirac_core::clifford::{verify_clifford, AlgebraReport};
use dirac_core::solver::TrajectorySummary;
use dirac_core::system::{KappaSummary, NormalFormSummary, SymbolReport};
use dirac_core::verify::norms::slice_norm;
use dirac_core::verify::{
    compatibility_certificate, energy_certificate_with_tol, green_certificate, oracle_ladder, reflection_certificate,
    richardson_ladder, speed_certificate_with, uniqueness_certificate_with_tol, weak_residual_certificate, Check,
    CompatibilityStudy,
};
use dirac_core::{
    check_symbol, compute_kappa, reduce_zero_initial, solve_ibvp_with, Certificate, Covector, Direction, Error,
    Interval, JetReport, Region, Trajectory,
};
use serde::Serialize;

use crate::error::CliError;
use crate::output::OutputDir;
use crate::scenario::{CertificateName, Scenario};
use crate::setup::Setup;

/// Half-width of the accepted window around order 2.
pub const ORDER_HALF_WIDTH: f64 = 0.1;

/// κ is sampled on this lattice for the system report.
const KAPPA_LATTICE: usize = 5;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Command {
    CheckAlgebra,
    AnalyzeSystem,
    Solve,
    Verify,
    Green,
    Converge,
    All,
}

impl Command {
    pub fn as_str(self) -> &'static str {
        match self {
            Command::CheckAlgebra => "check-algebra",
            Command::AnalyzeSystem => "analyze-system",
            Command::Solve => "solve",
            Command::Verify => "verify",
            Command::Green => "green",
            Command::Converge => "converge",
            Command::All => "all",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum Stage {
    Algebra,
    System,
    Solve,
    Certificate(CertificateName),
}

impl Stage {
    fn name(self) -> &'static str {
        match self {
            Stage::Algebra => "algebra",
            Stage::System => "system",
            Stage::Solve => "solve",
            Stage::Certificate(c) => c.as_str(),
        }
    }

    fn parse(s: &str) -> Option<Self> {
        match s {
            "algebra" => Some(Stage::Algebra),
            "system" => Some(Stage::System),
            "solve" => Some(Stage::Solve),
            other => CertificateName::parse(other).map(Stage::Certificate),
        }
    }
}

/// Stages of `command` in dependency order, restricted to `only` when given.
pub fn plan(command: Command, scenario: &Scenario, only: Option<&[String]>) -> Result<Vec<Stage>, CliError> {
    let listed = |keep: &dyn Fn(CertificateName) -> bool| -> Vec<Stage> {
        let mut c: Vec<CertificateName> = scenario.verify.certificates.iter().copied().filter(|c| keep(*c)).collect();
        c.sort();
        c.dedup();
        c.into_iter().map(Stage::Certificate).collect()
    };
    let mut stages = match command {
        Command::CheckAlgebra => vec![Stage::Algebra],
        Command::AnalyzeSystem => vec![Stage::Algebra, Stage::System],
        Command::Solve => vec![Stage::Algebra, Stage::System, Stage::Solve],
        Command::Verify => {
            let mut s = vec![Stage::Algebra, Stage::System, Stage::Solve];
            s.extend(listed(&|c| !matches!(c, CertificateName::Green | CertificateName::Convergence)));
            s
        }
        Command::Green => vec![Stage::Algebra, Stage::System, Stage::Certificate(CertificateName::Green)],
        Command::Converge => vec![Stage::Algebra, Stage::System, Stage::Certificate(CertificateName::Convergence)],
        Command::All => {
            let mut s = vec![Stage::Algebra, Stage::System, Stage::Solve];
            s.extend(listed(&|_| true));
            s
        }
    };
    if let Some(only) = only {
        let mut wanted = Vec::new();
        for name in only.iter().map(|s| s.trim()).filter(|s| !s.is_empty()) {
            let stage = Stage::parse(name).ok_or_else(|| CliError::Schema(format!("unknown stage \"{name}\"")))?;
            if !stages.contains(&stage) {
                return Err(CliError::Schema(format!(
                    "stage \"{name}\" is not part of `{}` for this scenario",
                    command.as_str()
                )));
            }
            wanted.push(stage);
        }
        stages.retain(|s| wanted.contains(s));
    }
    Ok(stages)
}

#[derive(Debug, Serialize)]
pub struct AlgebraSection {
    pub report: AlgebraReport,
    /// `γ(e₀), γ(e₁), …` as nested `[re, im]` arrays.
    pub representation: Vec<Vec<Vec<[f64; 2]>>>,
}

#[derive(Debug, Serialize)]
pub struct WallSection {
    pub admissibility: AdmissibilityReport,
    pub jets: Option<JetReport>,
}

#[derive(Debug, Serialize)]
pub struct SystemSection {
    pub lambda: f64,
    pub kappa: KappaSummary,
    pub symbol: SymbolReport,
    pub normal_form: Option<NormalFormSummary>,
    pub left: WallSection,
    pub right: WallSection,
}

#[derive(Debug, Serialize)]
pub struct SnapshotRecord {
    pub t: f64,
    pub norm: f64,
    pub envelope: Option<Interval>,
}

#[derive(Debug, Serialize)]
pub struct SolveSection {
    pub summary: Option<TrajectorySummary>,
    pub snapshots: Vec<SnapshotRecord>,
    pub csv_files: usize,
    pub divergence_time: Option<f64>,
}

#[derive(Debug, Serialize)]
pub struct CertificateEntry {
    pub certificate: Certificate,
    pub details: Option<serde_json::Value>,
}

#[derive(Debug, Serialize)]
pub struct Report {
    pub scenario: String,
    pub digest: String,
    pub command: String,
    pub seed: u64,
    pub tol_scale: f64,
    pub stages: Vec<String>,
    pub algebra: Option<AlgebraSection>,
    pub system: Option<SystemSection>,
    pub solve: Option<SolveSection>,
    pub certificates: Vec<CertificateEntry>,
    pub status: String,
    pub exit_code: u8,
}

pub struct Outcome {
    pub exit_code: u8,
    pub report: Report,
}

struct CertificateRun {
    certificate: Certificate,
    details: Option<serde_json::Value>,
    csv: Option<String>,
}

impl CertificateRun {
    fn plain(certificate: Certificate) -> Self {
        Self { certificate, details: None, csv: None }
    }
}

/// Preconditions of every planned stage, checked before anything runs.
pub fn validate(stages: &[Stage], s: &Scenario, setup: &Setup) -> Result<(), CliError> {
    let dynamic = stages.iter().any(|st| matches!(st, Stage::Solve | Stage::Certificate(_)));
    if !dynamic {
        return Ok(());
    }
    setup.normal_form()?;
    for (label, bc) in [("left", &setup.bc_left), ("right", &setup.bc_right)] {
        let report = admissibility_check(bc, &setup.rep, &[0.0, setup.horizon]);
        if !report.admissible {
            return Err(CliError::Schema(format!(
                "{label} boundary condition is not admissible: {}",
                report.flags.join(", ")
            )));
        }
    }
    let declared = !setup.data.initial_support.is_empty() || !setup.data.source_support.is_empty();
    for stage in stages {
        let Stage::Certificate(c) = stage else { continue };
        match c {
            CertificateName::Speed => {
                if !declared && !(setup.data.initial.is_zero() && setup.data.source.is_zero()) {
                    return Err(CliError::Schema("speed certificate needs initial_support or source_support".into()));
                }
            }
            CertificateName::Reflection | CertificateName::Compatibility => {
                setup.oracle()?;
            }
            CertificateName::Uniqueness => {
                setup.perturbation(s)?;
                if !(s.verify.delta >= 0.0 && s.verify.delta.is_finite()) {
                    return Err(CliError::Schema("verify.delta must be non-negative".into()));
                }
            }
            CertificateName::Weak => {
                if s.verify.test_fields == 0 {
                    return Err(CliError::Schema("verify.test_fields must be at least 1".into()));
                }
            }
            CertificateName::Green => {
                let horizon = setup.horizon;
                let Some(b) = setup.data.source_support.first() else {
                    return Err(CliError::Schema("green certificate needs a source_support box".into()));
                };
                if setup.data.source.is_zero() {
                    return Err(CliError::Schema("green certificate needs a nonzero source_expr".into()));
                }
                if !(b.t.lo > 0.0 && b.t.hi < horizon) {
                    return Err(CliError::Schema(format!(
                        "green certificate needs the source support inside 0 < t < T = {horizon}"
                    )));
                }
            }
            CertificateName::Convergence => {
                let r = &s.verify.resolutions;
                let nested = r.len() >= 3 && r.windows(2).all(|w| w[0] >= 5 && w[1] - 1 == 2 * (w[0] - 1));
                if !nested {
                    return Err(CliError::Schema(format!(
                        "verify.resolutions {r:?} must be at least three doubling levels (n, 2n − 1, …)"
                    )));
                }
            }
            CertificateName::Energy => {}
        }
    }
    if stages.contains(&Stage::Certificate(CertificateName::Compatibility)) && s.verify.resolutions.is_empty() {
        return Err(CliError::Schema("verify.resolutions must not be empty".into()));
    }
    Ok(())
}

fn algebra(setup: &Setup) -> Result<AlgebraSection, CliError> {
    Ok(AlgebraSection { report: verify_clifford(&setup.rep)?, representation: setup.rep.to_nested() })
}

fn system(s: &Scenario, setup: &Setup) -> Result<SystemSection, CliError> {
    let n = setup.rep.spatial_dim();
    let kappa = compute_kappa(&setup.system, &Region::lattice(&setup.geometry, KAPPA_LATTICE, KAPPA_LATTICE))?;
    let points: Vec<(f64, f64)> = setup.geometry.sample_points(3, 3).collect();
    let covectors = [Covector::dt(n), Covector::along_normal(n, 0.5), Covector::along_normal(n, -0.5)];
    let symbol = check_symbol(&setup.system, &covectors, &points);
    let times = [0.0, setup.horizon];
    let wall = |bc| -> Result<WallSection, CliError> {
        let jets = match &setup.nf {
            Some(nf) => Some(compatibility_jets(nf, bc, &setup.data.initial, &setup.data.source, s.verify.jet_order)?),
            None => None,
        };
        Ok(WallSection { admissibility: admissibility_check(bc, &setup.rep, &times), jets })
    };
    Ok(SystemSection {
        lambda: setup.system.lambda,
        kappa: kappa.summary(),
        symbol,
        normal_form: setup.nf.as_ref().map(|nf| nf.summary()),
        left: wall(&setup.bc_left)?,
        right: wall(&setup.bc_right)?,
    })
}

fn solve(setup: &Setup) -> Result<Trajectory, Error> {
    let nf = setup.nf.as_ref().expect("validated");
    solve_ibvp_with(nf, &setup.bc_left, &setup.bc_right, &setup.data, &setup.grid, setup.horizon, &setup.options)
}

fn solve_section(traj: &Trajectory, csv_files: usize) -> SolveSection {
    SolveSection {
        summary: Some(traj.summary()),
        snapshots: (0..traj.snapshots())
            .map(|k| SnapshotRecord { t: traj.times[k], norm: slice_norm(traj, k), envelope: traj.envelopes[k] })
            .collect(),
        csv_files,
        divergence_time: None,
    }
}

fn certificate(
    name: CertificateName,
    s: &Scenario,
    setup: &Setup,
    traj: Option<&Trajectory>,
) -> Result<CertificateRun, CliError> {
    let scale = s.verify.tol_scale;
    let nf = setup.normal_form()?;
    let (l, r) = (&setup.bc_left, &setup.bc_right);
    let run = match name {
        CertificateName::Energy => {
            let traj = traj.expect("planned");
            if setup.data.initial.is_zero() {
                let c = energy_certificate_with_tol(traj, &setup.system, &setup.data.source, s.verify.energy_tol * scale)?;
                CertificateRun::plain(c)
            } else {
                let reduced = reduce_zero_initial(&setup.data, nf)?;
                let traj = solve_ibvp_with(nf, l, r, &reduced, &setup.grid, setup.horizon, &setup.options)?;
                let c = energy_certificate_with_tol(&traj, &setup.system, &reduced.source, s.verify.energy_tol * scale)?
                    .with_note("initial data removed by subtracting a cut-off lift");
                CertificateRun::plain(c)
            }
        }
        CertificateName::Speed => {
            let traj = traj.expect("planned");
            let dilation = 2.0 * traj.dz * scale;
            CertificateRun::plain(speed_certificate_with(traj, &setup.data, &setup.geometry, dilation, Direction::Future, 0.0)?)
        }
        CertificateName::Reflection => {
            let traj = traj.expect("planned");
            CertificateRun::plain(reflection_certificate(&setup.oracle()?, traj, scale))
        }
        CertificateName::Uniqueness => {
            let problem = setup.problem()?;
            let pert = setup.perturbation(s)?;
            CertificateRun::plain(uniqueness_certificate_with_tol(&problem, s.verify.delta, &pert, s.verify.uniqueness_tol * scale)?)
        }
        CertificateName::Weak => {
            let coarse = traj.expect("planned");
            let fine = solve_ibvp_with(nf, l, r, &setup.data, &setup.refined_grid()?, setup.horizon, &setup.options)?;
            CertificateRun::plain(weak_residual_certificate(
                coarse,
                &fine,
                nf,
                l,
                r,
                &setup.data,
                s.verify.test_fields,
                s.seed,
            )?)
        }
        CertificateName::Compatibility => {
            let study = CompatibilityStudy::new(
                nf.clone(),
                l.clone(),
                r.clone(),
                setup.data.clone(),
                s.verify.resolutions.clone(),
                setup.horizon,
                setup.grid.cfl,
            )?;
            let report = compatibility_certificate(&study, s.verify.jet_order)?;
            CertificateRun {
                certificate: report.certificate.clone(),
                details: Some(serde_json::to_value(&report).expect("serializable")),
                csv: None,
            }
        }
        CertificateName::Green => {
            let support = setup.data.source_support[0];
            let c = green_certificate(
                &setup.system,
                l,
                r,
                &setup.data.source,
                &support,
                &setup.grid,
                &setup.refined_grid()?,
            )?;
            CertificateRun::plain(c)
        }
        CertificateName::Convergence => {
            let res = &s.verify.resolutions;
            let cfl = setup.grid.cfl;
            let (report, method) = match setup.oracle() {
                Ok(oracle) => (oracle_ladder(nf, l, r, &setup.data, &oracle, res, setup.horizon, cfl)?, "oracle"),
                Err(_) => (richardson_ladder(nf, l, r, &setup.data, res, setup.horizon, cfl)?, "richardson"),
            };
            let c = Certificate::from_checks(
                "convergence",
                vec![
                    Check::at_least("min_order", report.min_order(), 2.0 - ORDER_HALF_WIDTH * scale),
                    Check::at_most("max_order", report.max_order(), 2.0 + ORDER_HALF_WIDTH * scale),
                ],
            )
            .with_quantity("asymptotic_order", report.asymptotic_order)
            .with_note(format!("errors measured against the {method} reference"));
            CertificateRun {
                certificate: c,
                details: Some(serde_json::to_value(&report).expect("serializable")),
                csv: Some(report.to_csv()),
            }
        }
    };
    Ok(run)
}

/// Errors a certificate may legitimately end with; they fail it instead of aborting.
fn failed_certificate(name: CertificateName, err: &Error) -> Option<Certificate> {
    match err {
        Error::NotApplicable(_) | Error::Unsupported(_) | Error::Analysis(_) => {
            Some(Certificate::bounded(name.as_str(), f64::NAN, 0.0, 0.0).with_note(err.to_string()))
        }
        _ => None,
    }
}

pub struct RunConfig {
    pub command: Command,
    pub out: PathBuf,
    pub only: Option<Vec<String>>,
}

pub fn run(s: &Scenario, cfg: &RunConfig) -> Result<Outcome, CliError> {
    let stages = plan(cfg.command, s, cfg.only.as_deref())?;
    let setup = Setup::build(s)?;
    validate(&stages, s, &setup)?;
    let digest = s.digest();
    let out = OutputDir::create(&cfg.out)?;
    let certs_dir = out.path("certificates");
    if certs_dir.exists() {
        std::fs::remove_dir_all(&certs_dir)?;
    }

    let mut timings: BTreeMap<String, f64> = BTreeMap::new();
    let mut report = Report {
        scenario: s.name.clone(),
        digest: digest.clone(),
        command: cfg.command.as_str().to_string(),
        seed: s.seed,
        tol_scale: s.verify.tol_scale,
        stages: stages.iter().map(|st| st.name().to_string()).collect(),
        algebra: None,
        system: None,
        solve: None,
        certificates: Vec::new(),
        status: "pass".into(),
        exit_code: 0,
    };
    let mut failed = false;

    if stages.contains(&Stage::Algebra) {
        let t = Instant::now();
        let section = algebra(&setup)?;
        failed |= !section.report.passed;
        println!(
            "algebra: n = {}, rank {}, max residual {:.3e} ({})",
            section.report.spatial_dim,
            section.report.rank,
            section.report.max_residual(),
            if section.report.passed { "ok" } else { "FAILED" }
        );
        report.algebra = Some(section);
        timings.insert("algebra".into(), t.elapsed().as_secs_f64());
    }
    if stages.contains(&Stage::System) {
        let t = Instant::now();
        let section = system(s, &setup)?;
        println!(
            "system: λ = {}, min κ = {:.6}, hyperbolic = {}, symmetric = {}",
            section.lambda, section.kappa.min_eig, section.symbol.hyperbolic, section.symbol.symmetric
        );
        report.system = Some(section);
        timings.insert("system".into(), t.elapsed().as_secs_f64());
    }

    let certs: Vec<CertificateName> = stages
        .iter()
        .filter_map(|st| if let Stage::Certificate(c) = st { Some(*c) } else { None })
        .collect();
    let needs_traj = stages.contains(&Stage::Solve) || certs.iter().any(|c| c.needs_solve());
    let mut traj = None;
    if needs_traj {
        let t = Instant::now();
        match solve(&setup) {
            Ok(tr) => {
                let files = if stages.contains(&Stage::Solve) { out.write_snapshots(&tr, s.output.csv_every)? } else { 0 };
                if stages.contains(&Stage::Solve) {
                    let sum = tr.summary();
                    println!(
                        "solve: nz = {}, {} snapshots, final norm {:.6e}, boundary residual {:.3e}",
                        sum.nz, sum.snapshots, sum.final_norm, sum.boundary_residual
                    );
                    report.solve = Some(solve_section(&tr, files));
                }
                traj = Some(tr);
            }
            Err(Error::Divergence { time }) => {
                eprintln!("solve: diverged at t = {time}");
                report.solve = Some(SolveSection {
                    summary: None,
                    snapshots: Vec::new(),
                    csv_files: 0,
                    divergence_time: Some(time),
                });
                return finish(&out, report, timings, "diverged", 3);
            }
            Err(e) => return Err(e.into()),
        }
        timings.insert("solve".into(), t.elapsed().as_secs_f64());
    }

    // Independent certificates run concurrently; results keep plan order.
    let results: Vec<(CertificateName, Result<CertificateRun, CliError>, f64)> = std::thread::scope(|scope| {
        let handles: Vec<_> = certs
            .iter()
            .map(|&c| {
                let (setup, traj) = (&setup, traj.as_ref());
                scope.spawn(move || {
                    let t = Instant::now();
                    let r = certificate(c, s, setup, traj);
                    (c, r, t.elapsed().as_secs_f64())
                })
            })
            .collect();
        handles.into_iter().map(|h| h.join().expect("certificate thread panicked")).collect()
    });

    let mut diverged = false;
    for (name, result, secs) in results {
        timings.insert(name.as_str().into(), secs);
        let run = match result {
            Ok(run) => run,
            Err(CliError::Core(e)) => match (&e, failed_certificate(name, &e)) {
                (_, Some(c)) => CertificateRun::plain(c),
                (Error::Divergence { time }, None) => {
                    eprintln!("{}: diverged at t = {time}", name.as_str());
                    diverged = true;
                    continue;
                }
                (_, None) => return Err(CliError::Core(e)),
            },
            Err(e) => return Err(e),
        };
        let cert = run.certificate.with_digest(&digest);
        println!("{}", cert.line());
        failed |= !cert.passed;
        out.write_json(&format!("certificates/{}.json", name.as_str()), &cert)?;
        if let Some(csv) = &run.csv {
            out.write_bytes("convergence.csv", csv.as_bytes())?;
        }
        report.certificates.push(CertificateEntry { certificate: cert, details: run.details });
    }
    if diverged {
        return finish(&out, report, timings, "diverged", 3);
    }
    let (status, code) = if failed { ("fail", 1) } else { ("pass", 0) };
    finish(&out, report, timings, status, code)
}

fn finish(
    out: &OutputDir,
    mut report: Report,
    timings: BTreeMap<String, f64>,
    status: &str,
    code: u8,
) -> Result<Outcome, CliError> {
    report.status = status.into();
    report.exit_code = code;
    out.write_json("report.json", &report)?;
    out.write_json("timings.json", &timings)?;
    Ok(Outcome { exit_code: code, report })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn scenario(certs: &str) -> Scenario {
        Scenario::from_toml(&format!(
            r#"
            name = "p"
            [geometry]
            time_horizon = 1.0
            length = 2.0
            [boundary.left]
            kind = "mit"
            [boundary.right]
            kind = "mit"
            [solver]
            nz = 41
            [verify]
            certificates = [{certs}]
            "#
        ))
        .unwrap()
    }

    #[test]
    fn plans_follow_dependency_order() {
        let s = scenario(r#""green", "speed", "energy""#);
        let all = plan(Command::All, &s, None).unwrap();
        assert_eq!(all[..3], [Stage::Algebra, Stage::System, Stage::Solve]);
        assert_eq!(
            all[3..],
            [
                Stage::Certificate(CertificateName::Energy),
                Stage::Certificate(CertificateName::Speed),
                Stage::Certificate(CertificateName::Green)
            ]
        );
        let verify = plan(Command::Verify, &s, None).unwrap();
        assert!(!verify.contains(&Stage::Certificate(CertificateName::Green)));
    }

    #[test]
    fn only_restricts_and_rejects() {
        let s = scenario(r#""speed""#);
        let only = vec!["speed".to_string(), "algebra".to_string()];
        let p = plan(Command::Verify, &s, Some(&only)).unwrap();
        assert_eq!(p, vec![Stage::Algebra, Stage::Certificate(CertificateName::Speed)]);
        assert!(plan(Command::CheckAlgebra, &s, Some(&["solve".to_string()])).is_err());
        assert!(plan(Command::Verify, &s, Some(&["bogus".to_string()])).is_err());
    }
}
