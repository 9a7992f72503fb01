//! Crank–Nicolson finite-difference operators.
//!
//! For each velocity node the time step couples the five-point stencil
//!
//! ```text
//! d u[k] + a1 u[k1-1] + b1 u[k1+1] + a2 u[k2-1] + b2 u[k2+1]      (level n+1)
//!   = d1 u[k] - a1 u[k1-1] - b1 u[k1+1] - a2 u[k2-1] - b2 u[k2+1]  (level n)
//!     + tau/2 (F(u^{n+1}) + F(u^n)) + DIR
//! ```
//!
//! with `a_i = -lambda_i alpha_i / 4 - nu mu_i / 2`,
//! `b_i = +lambda_i alpha_i / 4 - nu mu_i / 2`, `lambda_i = tau / h_i`,
//! `mu_i = lambda_i / h_i`, `d = 1 + nu (mu_1 + mu_2)`, `d1 = 2 - d`.
//! Neighbours outside the interior enter only through `DIR`.

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::field::DensityField;
use crate::grid::{SpaceGrid, TimeGrid, VelIndex, VelocityGrid};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SchemeCoefficients {
    pub a1: f64,
    pub b1: f64,
    pub a2: f64,
    pub b2: f64,
    pub d: f64,
    pub d1: f64,
    pub lambda1: f64,
    pub lambda2: f64,
    pub mu1: f64,
    pub mu2: f64,
    pub nu: f64,
}

pub fn coefficients(
    l: VelIndex,
    sg: &SpaceGrid,
    vg: &VelocityGrid,
    tau: f64,
    nu: f64,
) -> Result<SchemeCoefficients> {
    if !(tau.is_finite() && tau > 0.0) {
        return Err(Error::config(format!(
            "time step must be positive, got {tau}"
        )));
    }
    if !(nu.is_finite() && nu >= 0.0) {
        return Err(Error::config(format!(
            "diffusion nu must be >= 0, got {nu}"
        )));
    }
    if !vg.contains(l) {
        return Err(Error::argument(format!(
            "velocity node {l} is outside the grid"
        )));
    }
    let (alpha1, alpha2) = vg.alpha(l);
    let lambda1 = tau / sg.h1();
    let lambda2 = tau / sg.h2();
    let mu1 = lambda1 / sg.h1();
    let mu2 = lambda2 / sg.h2();
    let diffusion = nu * (mu1 + mu2);
    Ok(SchemeCoefficients {
        a1: -lambda1 * alpha1 / 4.0 - nu * mu1 / 2.0,
        b1: lambda1 * alpha1 / 4.0 - nu * mu1 / 2.0,
        a2: -lambda2 * alpha2 / 4.0 - nu * mu2 / 2.0,
        b2: lambda2 * alpha2 / 4.0 - nu * mu2 / 2.0,
        d: 1.0 + diffusion,
        d1: 1.0 - diffusion,
        lambda1,
        lambda2,
        mu1,
        mu2,
        nu,
    })
}

/// One side of the space rectangle.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Side {
    /// `x1 = 0`
    Left,
    /// `x1 = L1`
    Right,
    /// `x2 = 0`
    Bottom,
    /// `x2 = L2`
    Top,
}

impl Side {
    pub const ALL: [Side; 4] = [Side::Left, Side::Right, Side::Bottom, Side::Top];

    /// Number of full-grid nodes along the side, corners included.
    pub fn node_count(self, sg: &SpaceGrid) -> usize {
        match self {
            Side::Left | Side::Right => sg.m2() + 2,
            Side::Bottom | Side::Top => sg.m1() + 2,
        }
    }
}

/// Dirichlet data on the four sides of the space rectangle.
///
/// `j` is the full-grid node index along the side (`0..=M + 1`, corners
/// included, coordinate `h * j` measured from the side's lower end) and `n` is
/// the time level. The interior row `k` of the scheme reads `j = k + 1`.
pub trait BoundaryData: Send + Sync {
    fn value(&self, side: Side, n: usize, j: usize, l: VelIndex) -> f64;
}

impl<F> BoundaryData for F
where
    F: Fn(Side, usize, usize, VelIndex) -> f64 + Send + Sync,
{
    fn value(&self, side: Side, n: usize, j: usize, l: VelIndex) -> f64 {
        self(side, n, j, l)
    }
}

/// Homogeneous Dirichlet data.
#[derive(Debug, Clone, Copy, Default)]
pub struct ZeroBoundary;

impl BoundaryData for ZeroBoundary {
    fn value(&self, _: Side, _: usize, _: usize, _: VelIndex) -> f64 {
        0.0
    }
}

/// An additive source `S(t_n, x_k, alpha_l)` used for verification runs.
pub trait SourceTerm: Send + Sync {
    /// Writes `S` at time level `n` into `out`.
    fn fill(&self, n: usize, out: &mut DensityField);
}

#[derive(Debug, Clone, Copy)]
struct Stencil {
    center: f64,
    west: f64,
    east: f64,
    south: f64,
    north: f64,
}

impl Stencil {
    fn lhs(c: &SchemeCoefficients) -> Self {
        Stencil {
            center: c.d,
            west: c.a1,
            east: c.b1,
            south: c.a2,
            north: c.b2,
        }
    }

    fn rhs(c: &SchemeCoefficients) -> Self {
        Stencil {
            center: c.d1,
            west: -c.a1,
            east: -c.b1,
            south: -c.a2,
            north: -c.b2,
        }
    }

    /// `out = S u` on one velocity block.
    fn apply(&self, m1: usize, m2: usize, u: &[f64], out: &mut [f64]) {
        for k2 in 0..m2 {
            let row = k2 * m1;
            for k1 in 0..m1 {
                let i = row + k1;
                let mut y = self.center * u[i];
                if k1 > 0 {
                    y += self.west * u[i - 1];
                }
                if k1 + 1 < m1 {
                    y += self.east * u[i + 1];
                }
                if k2 > 0 {
                    y += self.south * u[i - m1];
                }
                if k2 + 1 < m2 {
                    y += self.north * u[i + m1];
                }
                out[i] = y;
            }
        }
    }
}

/// The linear part of the time-step system for fixed grids, `tau` and `nu`.
#[derive(Debug, Clone)]
pub struct SchemeOperator {
    space: SpaceGrid,
    velocity: VelocityGrid,
    time: TimeGrid,
    coeffs: Vec<SchemeCoefficients>,
}

impl SchemeOperator {
    pub fn new(space: SpaceGrid, velocity: VelocityGrid, time: TimeGrid, nu: f64) -> Result<Self> {
        let coeffs = velocity
            .indices()
            .map(|l| coefficients(l, &space, &velocity, time.tau(), nu))
            .collect::<Result<Vec<_>>>()?;
        Ok(SchemeOperator {
            space,
            velocity,
            time,
            coeffs,
        })
    }

    pub fn space(&self) -> &SpaceGrid {
        &self.space
    }

    pub fn velocity(&self) -> &VelocityGrid {
        &self.velocity
    }

    pub fn time(&self) -> &TimeGrid {
        &self.time
    }

    pub fn tau(&self) -> f64 {
        self.time.tau()
    }

    /// Coefficients in velocity storage order.
    pub fn coefficients(&self) -> &[SchemeCoefficients] {
        &self.coeffs
    }

    pub fn zeros(&self) -> DensityField {
        DensityField::zeros(&self.space, &self.velocity)
    }

    fn check(&self, u: &DensityField) -> Result<()> {
        u.check_grids(&self.space, &self.velocity)
    }

    pub fn apply_a(&self, u: &DensityField) -> Result<DensityField> {
        self.check(u)?;
        let mut out = self.zeros();
        self.apply_with(Stencil::lhs, u, &mut out);
        Ok(out)
    }

    pub fn apply_b(&self, u: &DensityField) -> Result<DensityField> {
        self.check(u)?;
        let mut out = self.zeros();
        self.apply_with(Stencil::rhs, u, &mut out);
        Ok(out)
    }

    fn apply_with(
        &self,
        stencil: fn(&SchemeCoefficients) -> Stencil,
        u: &DensityField,
        out: &mut DensityField,
    ) {
        let (m1, m2, n) = (self.space.m1(), self.space.m2(), self.space.len());
        out.as_mut_slice()
            .par_chunks_mut(n)
            .zip(u.as_slice().par_chunks(n))
            .zip(self.coeffs.par_iter())
            .for_each(|((y, x), c)| stencil(c).apply(m1, m2, x, y));
    }

    /// Writes `r = f - A x` and returns `max |r|`. Blocks run in parallel.
    pub(crate) fn residual_into(
        &self,
        f: &DensityField,
        x: &DensityField,
        r: &mut DensityField,
    ) -> f64 {
        let (m1, m2, n) = (self.space.m1(), self.space.m2(), self.space.len());
        r.as_mut_slice()
            .par_chunks_mut(n)
            .zip(x.as_slice().par_chunks(n))
            .zip(f.as_slice().par_chunks(n))
            .zip(self.coeffs.par_iter())
            .map(|(((r, x), f), c)| {
                Stencil::lhs(c).apply(m1, m2, x, r);
                let mut worst = 0.0f64;
                for (ri, fi) in r.iter_mut().zip(f) {
                    *ri = fi - *ri;
                    worst = worst.max(ri.abs());
                }
                worst
            })
            .reduce(|| 0.0, f64::max)
    }

    /// The additive Dirichlet contribution `DIR` for the step `n -> n + 1`.
    /// Contributions from two sides accumulate at corner nodes.
    pub fn dirichlet_terms(&self, n: usize, bd: &dyn BoundaryData) -> Result<DensityField> {
        if n >= self.time.steps() {
            return Err(Error::argument(format!(
                "time level {n} out of range for a step (N = {})",
                self.time.steps()
            )));
        }
        let (m1, m2) = (self.space.m1(), self.space.m2());
        let mut out = self.zeros();
        for (lf, c) in self.coeffs.iter().enumerate() {
            let l = self.velocity.index(lf);
            let pair = |side, j| bd.value(side, n, j, l) + bd.value(side, n + 1, j, l);
            for k2 in 0..m2 {
                let i = out.offset(0, k2, lf);
                out.as_mut_slice()[i] += -c.a1 * pair(Side::Left, k2 + 1);
                let i = out.offset(m1 - 1, k2, lf);
                out.as_mut_slice()[i] += -c.b1 * pair(Side::Right, k2 + 1);
            }
            for k1 in 0..m1 {
                let i = out.offset(k1, 0, lf);
                out.as_mut_slice()[i] += -c.a2 * pair(Side::Bottom, k1 + 1);
                let i = out.offset(k1, m2 - 1, lf);
                out.as_mut_slice()[i] += -c.b2 * pair(Side::Top, k1 + 1);
            }
        }
        Ok(out)
    }

    /// `tau/2 (S^n + S^{n+1})`.
    pub fn source_terms(&self, n: usize, source: &dyn SourceTerm) -> DensityField {
        let mut now = self.zeros();
        let mut next = self.zeros();
        source.fill(n, &mut now);
        source.fill(n + 1, &mut next);
        let half = 0.5 * self.tau();
        for (a, b) in now.as_mut_slice().iter_mut().zip(next.as_slice()) {
            *a = half * (*a + b);
        }
        now
    }

    /// `B u^n + tau/2 (F_p + F_n) + DIR`; the mixer fields carry `kappa`.
    pub fn assemble_rhs(
        &self,
        u_n: &DensityField,
        f_n: &DensityField,
        f_p: &DensityField,
        dir: &DensityField,
    ) -> Result<DensityField> {
        let mut rhs = self.apply_b(u_n)?;
        for (what, g) in [("F(u^n)", f_n), ("F(u^(p))", f_p), ("DIR", dir)] {
            rhs.check_shape(g, what)?;
        }
        let half = 0.5 * self.tau();
        for (((y, fp), fn_), dr) in rhs
            .as_mut_slice()
            .iter_mut()
            .zip(f_p.as_slice())
            .zip(f_n.as_slice())
            .zip(dir.as_slice())
        {
            *y += half * (fp + fn_) + dr;
        }
        Ok(rhs)
    }
}
