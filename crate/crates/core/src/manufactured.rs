//! A smooth exact solution for convergence studies.
//!
//! Each velocity node carries the travelling, decaying wave
//!
//! ```text
//! rho(t, x, alpha) = c + A exp(-gamma t) sin(k . (x - alpha t) + theta)
//! ```
//!
//! which solves the linear advection–diffusion part exactly when
//! `gamma = nu |k|^2`. The source returned by [`SourceTerm::fill`] cancels
//! whatever the exact solution leaves over, including the discrete mixer
//! term, so the time-stepping scheme reproduces `rho` up to discretization
//! error.

use crate::error::Result;
use crate::field::DensityField;
use crate::grid::{QuadratureWeights, SpaceGrid, TimeGrid, VelIndex, VelocityGrid};
use crate::mixer::Mixer;
use crate::scheme::{BoundaryData, Side, SourceTerm};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WaveParams {
    pub offset: f64,
    pub amplitude: f64,
    pub wavenumber: [f64; 2],
    pub phase: f64,
    /// `None` selects the source-free decay rate `nu |k|^2`.
    pub decay: Option<f64>,
}

impl Default for WaveParams {
    fn default() -> Self {
        WaveParams {
            offset: 2.0,
            amplitude: 1.0,
            wavenumber: [std::f64::consts::PI, 2.0 * std::f64::consts::PI],
            phase: 0.3,
            decay: None,
        }
    }
}

#[derive(Debug, Clone)]
pub struct ManufacturedSolution {
    wave: WaveParams,
    gamma: f64,
    nu: f64,
    space: SpaceGrid,
    velocity: VelocityGrid,
    time: TimeGrid,
    mixer: Mixer,
}

impl ManufacturedSolution {
    pub fn new(
        wave: WaveParams,
        space: SpaceGrid,
        velocity: VelocityGrid,
        time: TimeGrid,
        nu: f64,
        kappa: f64,
    ) -> Result<Self> {
        let [k1, k2] = wave.wavenumber;
        let gamma = wave.decay.unwrap_or(nu * (k1 * k1 + k2 * k2));
        let w = QuadratureWeights::trapezoid(&velocity);
        Ok(ManufacturedSolution {
            wave,
            gamma,
            nu,
            space,
            velocity,
            time,
            mixer: Mixer::new(&velocity, &w, kappa),
        })
    }

    fn phase(&self, t: f64, x1: f64, x2: f64, alpha: (f64, f64)) -> f64 {
        let [k1, k2] = self.wave.wavenumber;
        k1 * (x1 - alpha.0 * t) + k2 * (x2 - alpha.1 * t) + self.wave.phase
    }

    pub fn exact(&self, t: f64, x1: f64, x2: f64, l: VelIndex) -> f64 {
        let alpha = self.velocity.alpha(l);
        self.wave.offset
            + self.wave.amplitude * (-self.gamma * t).exp() * self.phase(t, x1, x2, alpha).sin()
    }

    /// `rho_t + alpha . grad(rho) - nu lap(rho)` of the exact solution.
    fn linear_residual(&self, t: f64, x1: f64, x2: f64, l: VelIndex) -> f64 {
        let [k1, k2] = self.wave.wavenumber;
        let alpha = self.velocity.alpha(l);
        let rate = self.nu * (k1 * k1 + k2 * k2) - self.gamma;
        rate * self.wave.amplitude * (-self.gamma * t).exp() * self.phase(t, x1, x2, alpha).sin()
    }

    /// Exact solution on the interior nodes at time level `n`.
    pub fn exact_field(&self, n: usize) -> DensityField {
        let t = self.time.time(n);
        DensityField::from_fn(&self.space, &self.velocity, |k1, k2, lf| {
            let (x1, x2) = self.space.coord(k1, k2);
            self.exact(t, x1, x2, self.velocity.index(lf))
        })
    }

    /// Max-norm error of `u` against the exact solution at level `n`.
    pub fn max_error(&self, u: &DensityField, n: usize) -> f64 {
        u.max_abs_diff(&self.exact_field(n))
    }
}

impl BoundaryData for ManufacturedSolution {
    fn value(&self, side: Side, n: usize, j: usize, l: VelIndex) -> f64 {
        let (l1, l2) = self.space.lengths();
        let s = match side {
            Side::Left | Side::Right => self.space.h2() * j as f64,
            Side::Bottom | Side::Top => self.space.h1() * j as f64,
        };
        let (x1, x2) = match side {
            Side::Left => (0.0, s),
            Side::Right => (l1, s),
            Side::Bottom => (s, 0.0),
            Side::Top => (s, l2),
        };
        self.exact(self.time.time(n), x1, x2, l)
    }
}

impl SourceTerm for ManufacturedSolution {
    fn fill(&self, n: usize, out: &mut DensityField) {
        let t = self.time.time(n);
        let exact = self.exact_field(n);
        let mixed = self.mixer.apply(&exact);
        for lf in 0..out.nv() {
            let l = self.velocity.index(lf);
            for k2 in 0..out.m2() {
                for k1 in 0..out.m1() {
                    let (x1, x2) = self.space.coord(k1, k2);
                    let s = self.linear_residual(t, x1, x2, l) - mixed.get(k1, k2, lf);
                    out.set(k1, k2, lf, s);
                }
            }
        }
    }
}
