//! The `describe`, `check-stability` and `run` commands.

use std::fs;
use std::io::{self, Write};
use std::path::{Path, PathBuf};

use kinetic_core::euler::{
    full_grid_moments, mass_budget, total_mass, unit_velocity_field, vorticity, EulerFields,
    MassBudget,
};
use kinetic_core::scenario::{collision_boundary, empty_initial, uniform_initial};
use kinetic_core::solver::{nor_bound, optimal_s, NorReport};
use kinetic_core::{
    run_simulation, BoundaryData, DensityField, Error, MaskedScalarField, QuadratureWeights,
    ScalarField, Side, SpaceGrid, StepReport, TimeStepper, VectorField, VelIndex, ZeroBoundary,
};
use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::config::{Config, ConfigError, ScenarioKind};

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Config(#[from] ConfigError),
    #[error("{0}")]
    Stability(Error),
    #[error("{0}")]
    Solver(Error),
    #[error("{context}: {source}")]
    Io {
        context: String,
        #[source]
        source: io::Error,
    },
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Solver(_) => 2,
            _ => 1,
        }
    }
}

fn io_err(context: impl Into<String>) -> impl FnOnce(io::Error) -> CliError {
    let context = context.into();
    move |source| CliError::Io { context, source }
}

fn num(v: f64) -> String {
    format!("{v:.16e}")
}

/// Prints the resolved configuration followed by derived quantities.
pub fn describe(cfg: &Config, out: &mut dyn Write) -> io::Result<()> {
    let sg = cfg.space();
    let vg = cfg.velocity();
    let op = cfg.operator();
    let nor = nor_bound(op.coefficients(), &vg);
    write!(out, "{}", cfg.to_text())?;
    writeln!(out, "# derived")?;
    writeln!(out, "h1 = {:?}", sg.h1())?;
    writeln!(out, "h2 = {:?}", sg.h2())?;
    writeln!(out, "tau = {:?}", op.tau())?;
    writeln!(out, "space_nodes = {} x {}", sg.m1(), sg.m2())?;
    writeln!(out, "velocity_nodes = {} x {}", vg.n1(), vg.n2())?;
    let (lo, hi) = (vg.lower(), vg.upper());
    writeln!(
        out,
        "velocity_rectangle = [{:?}, {:?}] x [{:?}, {:?}]",
        lo.0, hi.0, lo.1, hi.1
    )?;
    writeln!(out, "unknowns = {}", sg.len() * vg.len())?;
    writeln!(out, "NOR = {:?}", nor.nor)?;
    writeln!(out, "s_opt = {:?}", optimal_s(&op.coefficients()[0]))?;
    Ok(())
}

/// Prints the stability report; returns it so the caller can pick the exit code.
pub fn check_stability(cfg: &Config, out: &mut dyn Write) -> io::Result<NorReport> {
    let vg = cfg.velocity();
    let op = cfg.operator();
    let coeffs = op.coefficients();
    let report = nor_bound(coeffs, &vg);
    let c = report.worst_coefficients;
    writeln!(out, "NOR = {:?}", report.nor)?;
    writeln!(out, "s_opt = {:?}", optimal_s(&c))?;
    writeln!(out, "d = {:?}", c.d)?;
    writeln!(
        out,
        "worst l = ({}, {}): a1 = {:?}, b1 = {:?}, a2 = {:?}, b2 = {:?}",
        report.worst.l1, report.worst.l2, c.a1, c.b1, c.a2, c.b2
    )?;
    writeln!(out, "l1,l2,a1,b1,a2,b2,d,nor")?;
    for (i, c) in coeffs.iter().enumerate() {
        let l = vg.index(i);
        let ratio = (c.a1.abs() + c.b1.abs() + c.a2.abs() + c.b2.abs()) / c.d;
        writeln!(
            out,
            "{},{},{},{},{},{},{},{}",
            l.l1,
            l.l2,
            num(c.a1),
            num(c.b1),
            num(c.a2),
            num(c.b2),
            num(c.d),
            num(ratio)
        )?;
    }
    if report.is_stable() {
        writeln!(out, "stable: NOR < 1")?;
    } else {
        writeln!(
            out,
            "unstable: NOR >= 1 at l = ({}, {}); reduce tau or refine the velocity grid",
            report.worst.l1, report.worst.l2
        )?;
    }
    Ok(report)
}

/// Diagnostics of one time level.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StepRecord {
    pub step: usize,
    pub t: f64,
    /// `None` at the initial level.
    pub solver: Option<StepReport>,
    pub mass: f64,
    /// Euler density at the node nearest the centre of the rectangle.
    pub center_rho: f64,
    /// Largest `|vorticity|` over the nodes where it is defined (0 if none).
    pub max_vorticity: f64,
    /// Budget of the step into this level; `None` at the initial level.
    pub budget: Option<MassBudget>,
}

#[derive(Debug, Clone)]
pub struct RunSummary {
    pub records: Vec<StepRecord>,
    pub final_field: DensityField,
    pub files: Vec<String>,
    pub config_hash: String,
}

/// The resolved configuration without the output location and the thread
/// count, neither of which affects results.
fn result_defining_text(cfg: &Config) -> String {
    cfg.to_text()
        .lines()
        .filter(|l| !l.starts_with("output =") && !l.starts_with("threads ="))
        .map(|l| format!("{l}\n"))
        .collect()
}

/// SHA-256 of the result-defining part of the configuration.
pub fn config_hash(cfg: &Config) -> String {
    Sha256::digest(result_defining_text(cfg).as_bytes())
        .iter()
        .map(|b| format!("{b:02x}"))
        .collect()
}

fn boundary_for(cfg: &Config) -> Result<Box<dyn BoundaryData>, CliError> {
    let sg = cfg.space();
    let vg = cfg.velocity();
    Ok(match cfg.scenario {
        ScenarioKind::Collision => Box::new(
            collision_boundary(cfg.collision.clone(), &sg, &vg).map_err(|e| {
                CliError::Config(ConfigError {
                    line: None,
                    key: "scenario".into(),
                    message: e.to_string(),
                })
            })?,
        ),
        ScenarioKind::Zero => Box::new(ZeroBoundary),
        ScenarioKind::Uniform => {
            let c = cfg.uniform_value;
            Box::new(move |_: Side, _: usize, _: usize, _: VelIndex| c)
        }
    })
}

fn initial_for(cfg: &Config) -> DensityField {
    let (sg, vg) = (cfg.space(), cfg.velocity());
    match cfg.scenario {
        ScenarioKind::Uniform => uniform_initial(&sg, &vg, cfg.uniform_value),
        _ => empty_initial(&sg, &vg),
    }
}

struct Writer {
    dir: PathBuf,
    files: Vec<String>,
    hash: String,
}

impl Writer {
    fn write(&mut self, name: &str, contents: &str) -> Result<(), CliError> {
        fs::write(self.dir.join(name), contents).map_err(io_err(format!("writing {name}")))?;
        if !self.files.iter().any(|f| f == name) {
            self.files.push(name.to_string());
        }
        Ok(())
    }

    fn manifest(
        &self,
        complete: bool,
        steps_done: usize,
        note: Option<&str>,
    ) -> Result<(), CliError> {
        let mut s = format!(
            "config_sha256 = {}\ncomplete = {complete}\nsteps_completed = {steps_done}\n",
            self.hash
        );
        if let Some(note) = note {
            s.push_str(&format!("error = {note}\n"));
        }
        for f in &self.files {
            s.push_str(&format!("file = {f}\n"));
        }
        fs::write(self.dir.join("MANIFEST"), s).map_err(io_err("writing MANIFEST"))
    }
}

fn euler_csv(sg: &SpaceGrid, e: &EulerFields) -> String {
    let mut s = String::from("k1,k2,x1,x2,rho,p1,p2,v1,v2,defined\n");
    for k2 in 0..sg.m2() {
        for k1 in 0..sg.m1() {
            let (x1, x2) = sg.coord(k1, k2);
            let [p1, p2] = e.impulse.get(k1, k2);
            let (v, flag) = match e.velocity.get(k1, k2) {
                Some([v1, v2]) => (format!("{},{}", num(v1), num(v2)), 1),
                None => (",".to_string(), 0),
            };
            s.push_str(&format!(
                "{k1},{k2},{},{},{},{},{},{v},{flag}\n",
                num(x1),
                num(x2),
                num(e.rho.get(k1, k2)),
                num(p1),
                num(p2)
            ));
        }
    }
    s
}

fn unitvec_csv(sg: &SpaceGrid, e: &EulerFields, eps: f64) -> String {
    let unit = unit_velocity_field(&e.velocity, eps);
    let mut s = String::from("x1,x2,u1,u2\n");
    for k2 in 0..sg.m2() {
        for k1 in 0..sg.m1() {
            if let Some([u1, u2]) = unit.get(k1, k2) {
                let (x1, x2) = sg.coord(k1, k2);
                s.push_str(&format!(
                    "{},{},{},{}\n",
                    num(x1),
                    num(x2),
                    num(u1),
                    num(u2)
                ));
            }
        }
    }
    s
}

fn vorticity_csv(sg: &SpaceGrid, w: &MaskedScalarField) -> String {
    let mut s = String::from("k1,k2,x1,x2,omega,defined\n");
    for k2 in 0..sg.m2() {
        for k1 in 0..sg.m1() {
            let (x1, x2) = sg.coord(k1, k2);
            let (v, flag) = match w.get(k1, k2) {
                Some(v) => (num(v), 1),
                None => (String::new(), 0),
            };
            s.push_str(&format!("{k1},{k2},{},{},{v},{flag}\n", num(x1), num(x2)));
        }
    }
    s
}

const REPORT_HEADER: &str =
    "step,t,picard_iters,linear_iters,picard_delta,linear_residual,mass,center_rho,max_abs_vorticity\n";
const BUDGET_HEADER: &str = "step,t,mass,dm_dt,impulse_flux,diffusive_flux,residual\n";

fn report_row(r: &StepRecord) -> String {
    let (pi, li, pd, lr) = match r.solver {
        Some(s) => (
            s.picard_iters,
            s.linear_iters_total,
            s.final_picard_delta,
            s.final_linear_residual,
        ),
        None => (0, 0, 0.0, 0.0),
    };
    format!(
        "{},{},{pi},{li},{},{},{},{},{}\n",
        r.step,
        num(r.t),
        num(pd),
        num(lr),
        num(r.mass),
        num(r.center_rho),
        num(r.max_vorticity)
    )
}

fn budget_row(step: usize, t: f64, b: &MassBudget) -> String {
    format!(
        "{step},{},{},{},{},{},{}\n",
        num(t),
        num(b.mass),
        num(b.dm_dt),
        num(b.impulse_flux),
        num(b.diffusive_flux),
        num(b.residual)
    )
}

/// Runs the configured scenario, writing outputs into `cfg.output`.
///
/// Progress lines go to `progress`. On solver failure the files written so
/// far are kept and the MANIFEST is marked incomplete.
pub fn run(cfg: &Config, progress: &mut (dyn Write + Send)) -> Result<RunSummary, CliError> {
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(cfg.threads)
        .build()
        .map_err(|e| CliError::Io {
            context: "starting worker threads".into(),
            source: io::Error::other(e.to_string()),
        })?;
    pool.install(|| run_in_pool(cfg, progress))
}

fn run_in_pool(cfg: &Config, progress: &mut (dyn Write + Send)) -> Result<RunSummary, CliError> {
    let sg = cfg.space();
    let vg = cfg.velocity();
    let time = cfg.time();
    let w = QuadratureWeights::trapezoid(&vg);
    let boundary = boundary_for(cfg)?;
    let stepper = TimeStepper::new(cfg.operator(), cfg.kappa, boundary.as_ref(), cfg.solver)
        .map_err(|e| match e {
            Error::Stability { .. } => CliError::Stability(e),
            other => CliError::Config(ConfigError {
                line: None,
                key: "solver".into(),
                message: other.to_string(),
            }),
        })?;

    prepare_dir(&cfg.output)?;
    let mut writer = Writer {
        dir: cfg.output.clone(),
        files: Vec::new(),
        hash: config_hash(cfg),
    };
    writer.write("config.txt", &result_defining_text(cfg))?;
    writer.manifest(false, 0, None)?;

    let center = sg
        .nearest_node(0.5 * cfg.l[0], 0.5 * cfg.l[1])
        .expect("centre lies inside the rectangle");
    let mut records: Vec<StepRecord> = Vec::with_capacity(cfg.steps + 1);
    let mut report = String::from(REPORT_HEADER);
    let mut budget = String::from(BUDGET_HEADER);
    let mut previous: Option<(ScalarField, VectorField)> = None;
    let mut io_failure: Option<CliError> = None;

    let mut observer =
        |n: usize, u: &DensityField, step: Option<&StepReport>| -> kinetic_core::Result<()> {
            let result = (|| -> Result<(), CliError> {
                let euler = EulerFields::compute(u, &vg, &w, cfg.kappa, cfg.eps_div)
                    .map_err(CliError::Solver)?;
                let omega = vorticity(&euler.velocity, sg.h1(), sg.h2());
                let max_vorticity = omega.max_abs();
                let (rho_full, p_full) =
                    full_grid_moments(u, boundary.as_ref(), n, &vg, &w, cfg.kappa)
                        .map_err(CliError::Solver)?;
                let mass = total_mass(&rho_full, &sg);
                let step_budget = match &previous {
                    Some((rho_prev, p_prev)) => {
                        let (n1, n2) = p_full.dims();
                        let p_mid = VectorField::from_fn(n1, n2, |i, j| {
                            let (a, b) = (p_prev.get(i, j), p_full.get(i, j));
                            [0.5 * (a[0] + b[0]), 0.5 * (a[1] + b[1])]
                        });
                        let b = mass_budget(rho_prev, &rho_full, &p_mid, &sg, cfg.nu, time.tau())
                            .map_err(CliError::Solver)?;
                        budget.push_str(&budget_row(n, time.time(n), &b));
                        Some(b)
                    }
                    None => None,
                };
                previous = Some((rho_full, p_full));
                let record = StepRecord {
                    step: n,
                    t: time.time(n),
                    solver: step.copied(),
                    mass,
                    center_rho: euler.rho.get(center.0, center.1),
                    max_vorticity,
                    budget: step_budget,
                };
                report.push_str(&report_row(&record));
                records.push(record);
                if cfg.snapshots.binary_search(&n).is_ok() {
                    writer.write(&format!("euler_{n}.csv"), &euler_csv(&sg, &euler))?;
                    writer.write(
                        &format!("unitvec_{n}.csv"),
                        &unitvec_csv(&sg, &euler, cfg.eps_div),
                    )?;
                    writer.write(&format!("vorticity_{n}.csv"), &vorticity_csv(&sg, &omega))?;
                }
                let picard = step.map(|s| s.picard_iters).unwrap_or(0);
                writeln!(
                    progress,
                    "step {n}/{} t = {:.6} picard = {picard} mass = {:.6e}",
                    cfg.steps,
                    time.time(n),
                    mass
                )
                .map_err(io_err("writing progress"))?;
                Ok(())
            })();
            result.map_err(|e| {
                let msg = e.to_string();
                io_failure = Some(e);
                Error::InvalidArgument(msg)
            })
        };

    let outcome = run_simulation(&stepper, initial_for(cfg), cfg.steps, &mut observer);
    writer.write("report.csv", &report)?;
    writer.write("massbudget.csv", &budget)?;
    let done = records.last().map(|r| r.step).unwrap_or(0);
    match outcome {
        Ok(out) => {
            writer.manifest(true, done, None)?;
            Ok(RunSummary {
                records,
                final_field: out.final_field,
                files: writer.files.clone(),
                config_hash: writer.hash.clone(),
            })
        }
        Err(e) => {
            writer.manifest(false, done, Some(&e.to_string()))?;
            Err(io_failure.unwrap_or(CliError::Solver(e)))
        }
    }
}

fn prepare_dir(dir: &Path) -> Result<(), CliError> {
    fs::create_dir_all(dir).map_err(io_err(format!("creating {}", dir.display())))
}
