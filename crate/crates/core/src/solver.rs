//! Time integration.
//!
//! Each time step solves the nonlinear system
//! `A u^{n+1} = B u^n + tau/2 (F(u^{n+1}) + F(u^n)) + DIR` by Picard
//! iteration starting from `u^(0) = u^n`. Every sweep solves a linear system
//! with `A` by Richardson iteration `x_{k+1} = x_k + s (f - A x_k)`.
//!
//! In the maximum norm `||I - s A|| <= NOR` for `s = 1/d`, where
//! `NOR = max_l (|a1| + |a2| + |b1| + |b2|) / d`; the solver refuses to run
//! unless `NOR < 1`.

use crate::error::{Error, Result};
use crate::field::DensityField;
use crate::grid::{QuadratureWeights, VelIndex, VelocityGrid};
use crate::mixer::Mixer;
use crate::scheme::{BoundaryData, SchemeCoefficients, SchemeOperator, SourceTerm};

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Relaxation {
    /// `s = 1/d`.
    Auto,
    Fixed(f64),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolverSettings {
    pub relaxation: Relaxation,
    /// Target for `||f - A x||_inf`.
    pub tol_linear: f64,
    pub max_linear_iters: usize,
    /// Target for `||u^(p+1) - u^(p)||_inf`.
    pub tol_picard: f64,
    /// Scale `tol_picard` by `1 + ||u^n||_inf`.
    pub picard_relative: bool,
    pub max_picard_iters: usize,
}

impl Default for SolverSettings {
    fn default() -> Self {
        SolverSettings {
            relaxation: Relaxation::Auto,
            tol_linear: 1e-10,
            max_linear_iters: 500,
            tol_picard: 1e-8,
            picard_relative: true,
            max_picard_iters: 50,
        }
    }
}

impl SolverSettings {
    pub fn validate(&self) -> Result<()> {
        if let Relaxation::Fixed(s) = self.relaxation {
            if !(s.is_finite() && s > 0.0) {
                return Err(Error::config(format!(
                    "relaxation s must be positive, got {s}"
                )));
            }
        }
        if !(self.tol_linear.is_finite() && self.tol_linear > 0.0) {
            return Err(Error::config("tol_linear must be positive"));
        }
        if !(self.tol_picard.is_finite() && self.tol_picard > 0.0) {
            return Err(Error::config("tol_picard must be positive"));
        }
        if self.max_linear_iters == 0 || self.max_picard_iters == 0 {
            return Err(Error::config("iteration caps must be at least 1"));
        }
        Ok(())
    }

    /// Picard tolerance for a step starting from `u_n`.
    pub fn picard_tolerance(&self, u_n: &DensityField) -> f64 {
        if self.picard_relative {
            self.tol_picard * (1.0 + u_n.max_abs())
        } else {
            self.tol_picard
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NorReport {
    pub nor: f64,
    /// Velocity node attaining the maximum.
    pub worst: VelIndex,
    pub worst_coefficients: SchemeCoefficients,
}

impl NorReport {
    pub fn is_stable(&self) -> bool {
        self.nor < 1.0
    }
}

/// `NOR` over all velocity nodes; `coeffs` are in `vg` storage order.
pub fn nor_bound(coeffs: &[SchemeCoefficients], vg: &VelocityGrid) -> NorReport {
    let mut best: Option<(f64, usize)> = None;
    for (lf, c) in coeffs.iter().enumerate() {
        let nor = (c.a1.abs() + c.a2.abs() + c.b1.abs() + c.b2.abs()) / c.d;
        if best.is_none_or(|(b, _)| nor > b) {
            best = Some((nor, lf));
        }
    }
    let (nor, lf) = best.expect("velocity grid is never empty");
    NorReport {
        nor,
        worst: vg.index(lf),
        worst_coefficients: coeffs[lf],
    }
}

/// `s_opt = 1 / a_ii = 1 / d`.
pub fn optimal_s(c: &SchemeCoefficients) -> f64 {
    1.0 / c.d
}

#[derive(Debug, Clone, PartialEq)]
pub struct LinearSolution {
    pub x: DensityField,
    pub iterations: usize,
    pub residual: f64,
}

/// Solves `A x = f` by Richardson iteration from `x_0 = f`.
pub fn richardson_solve(
    op: &SchemeOperator,
    f: &DensityField,
    settings: &SolverSettings,
) -> Result<LinearSolution> {
    richardson_solve_with(op, f, settings, |_, _| {})
}

/// As [`richardson_solve`], calling `on_iterate(k, x_k)` for every iterate.
pub fn richardson_solve_with(
    op: &SchemeOperator,
    f: &DensityField,
    settings: &SolverSettings,
    mut on_iterate: impl FnMut(usize, &DensityField),
) -> Result<LinearSolution> {
    f.check_grids(op.space(), op.velocity())?;
    let stability = nor_bound(op.coefficients(), op.velocity());
    if !stability.is_stable() {
        return Err(Error::Stability {
            nor: stability.nor,
            worst: stability.worst,
        });
    }
    let s = match settings.relaxation {
        Relaxation::Auto => optimal_s(&op.coefficients()[0]),
        Relaxation::Fixed(s) => s,
    };
    let mut x = f.clone();
    let mut r = op.zeros();
    let mut iterations = 0;
    loop {
        on_iterate(iterations, &x);
        let residual = op.residual_into(f, &x, &mut r);
        if residual <= settings.tol_linear {
            return Ok(LinearSolution {
                x,
                iterations,
                residual,
            });
        }
        if !residual.is_finite() || iterations >= settings.max_linear_iters {
            return Err(Error::NonConvergence {
                stage: "Richardson",
                iterations,
                last: residual,
            });
        }
        x.axpy(s, &r);
        iterations += 1;
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StepReport {
    pub picard_iters: usize,
    pub linear_iters_total: usize,
    pub final_picard_delta: f64,
    pub final_linear_residual: f64,
    pub nor: f64,
}

/// Everything needed to advance the density by one time level.
pub struct TimeStepper<'a> {
    operator: SchemeOperator,
    mixer: Mixer,
    weights: QuadratureWeights,
    boundary: &'a dyn BoundaryData,
    source: Option<&'a dyn SourceTerm>,
    settings: SolverSettings,
    nor: NorReport,
}

impl<'a> TimeStepper<'a> {
    /// Fails when the settings are invalid or `NOR >= 1`.
    pub fn new(
        operator: SchemeOperator,
        kappa: f64,
        boundary: &'a dyn BoundaryData,
        settings: SolverSettings,
    ) -> Result<Self> {
        settings.validate()?;
        if !kappa.is_finite() {
            return Err(Error::config("kappa must be finite"));
        }
        let nor = nor_bound(operator.coefficients(), operator.velocity());
        if !nor.is_stable() {
            return Err(Error::Stability {
                nor: nor.nor,
                worst: nor.worst,
            });
        }
        let weights = QuadratureWeights::trapezoid(operator.velocity());
        let mixer = Mixer::new(operator.velocity(), &weights, kappa);
        Ok(TimeStepper {
            operator,
            mixer,
            weights,
            boundary,
            source: None,
            settings,
            nor,
        })
    }

    pub fn with_source(mut self, source: &'a dyn SourceTerm) -> Self {
        self.source = Some(source);
        self
    }

    pub fn operator(&self) -> &SchemeOperator {
        &self.operator
    }

    pub fn mixer(&self) -> &Mixer {
        &self.mixer
    }

    pub fn weights(&self) -> &QuadratureWeights {
        &self.weights
    }

    pub fn boundary(&self) -> &dyn BoundaryData {
        self.boundary
    }

    pub fn settings(&self) -> &SolverSettings {
        &self.settings
    }

    pub fn nor(&self) -> &NorReport {
        &self.nor
    }

    /// The mixer term `F(u)` with `kappa` applied.
    pub fn mixer_field(&self, u: &DensityField) -> DensityField {
        self.mixer.apply(u)
    }

    /// Terms of the step `n -> n + 1` that do not change during Picard
    /// iteration: `B u^n + tau/2 F(u^n) + DIR (+ tau/2 (S^n + S^{n+1}))`.
    pub fn known_terms(&self, u_n: &DensityField, n: usize) -> Result<DensityField> {
        let op = &self.operator;
        let f_n = self.mixer.apply(u_n);
        let mut dir = op.dirichlet_terms(n, self.boundary)?;
        if let Some(source) = self.source {
            dir.axpy(1.0, &op.source_terms(n, source));
        }
        let mut known = op.apply_b(u_n)?;
        let half = 0.5 * op.tau();
        for ((k, f), d) in known
            .as_mut_slice()
            .iter_mut()
            .zip(f_n.as_slice())
            .zip(dir.as_slice())
        {
            *k += half * f + d;
        }
        Ok(known)
    }

    /// Advances `u_n` from level `n` to `n + 1`.
    pub fn step(&self, u_n: &DensityField, n: usize) -> Result<(DensityField, StepReport)> {
        u_n.check_grids(self.operator.space(), self.operator.velocity())?;
        if !u_n.is_finite() {
            return Err(Error::argument("density contains non-finite values"));
        }
        let known = self.known_terms(u_n, n)?;
        let tol = self.settings.picard_tolerance(u_n);
        let half = 0.5 * self.operator.tau();
        let mut current = u_n.clone();
        let mut linear_total = 0;
        let mut delta = f64::INFINITY;
        for sweep in 1..=self.settings.max_picard_iters {
            let mut rhs = known.clone();
            if self.mixer.kappa() != 0.0 {
                rhs.axpy(half, &self.mixer.apply(&current));
            }
            let solved = richardson_solve(&self.operator, &rhs, &self.settings)?;
            linear_total += solved.iterations;
            delta = solved.x.max_abs_diff(&current);
            current = solved.x;
            if delta <= tol {
                return Ok((
                    current,
                    StepReport {
                        picard_iters: sweep,
                        linear_iters_total: linear_total,
                        final_picard_delta: delta,
                        final_linear_residual: solved.residual,
                        nor: self.nor.nor,
                    },
                ));
            }
            if !delta.is_finite() {
                break;
            }
        }
        Err(Error::NonConvergence {
            stage: "Picard",
            iterations: self.settings.max_picard_iters,
            last: delta,
        })
    }
}

/// Receives the state after every accepted level (and the initial one,
/// with `report = None`).
pub trait Observer {
    fn observe(&mut self, n: usize, u: &DensityField, report: Option<&StepReport>) -> Result<()>;
}

impl<F> Observer for F
where
    F: FnMut(usize, &DensityField, Option<&StepReport>) -> Result<()>,
{
    fn observe(&mut self, n: usize, u: &DensityField, report: Option<&StepReport>) -> Result<()> {
        self(n, u, report)
    }
}

#[derive(Debug, Clone)]
pub struct RunOutcome {
    pub final_field: DensityField,
    pub reports: Vec<StepReport>,
}

/// Advances `initial` through `steps` time levels.
pub fn run_simulation(
    stepper: &TimeStepper<'_>,
    initial: DensityField,
    steps: usize,
    observer: &mut dyn Observer,
) -> Result<RunOutcome> {
    initial.check_grids(stepper.operator().space(), stepper.operator().velocity())?;
    if steps > stepper.operator().time().steps() {
        return Err(Error::argument(format!(
            "{steps} steps requested, time grid has {}",
            stepper.operator().time().steps()
        )));
    }
    observer.observe(0, &initial, None)?;
    let mut u = initial;
    let mut reports = Vec::with_capacity(steps);
    for n in 0..steps {
        let wrap = |e: Error| Error::Step {
            step: n + 1,
            source: Box::new(e),
        };
        let (next, report) = stepper.step(&u, n).map_err(wrap)?;
        observer
            .observe(n + 1, &next, Some(&report))
            .map_err(wrap)?;
        reports.push(report);
        u = next;
    }
    Ok(RunOutcome {
        final_field: u,
        reports,
    })
}
