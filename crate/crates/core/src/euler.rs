//! Euler-level observables: velocity moments of the density and the mass
//! budget of the space rectangle.

use crate::error::{Error, Result};
use crate::field::{DensityField, MaskedScalarField, MaskedVectorField, ScalarField, VectorField};
use crate::grid::{QuadratureWeights, SpaceGrid, VelocityGrid};
use crate::scheme::{BoundaryData, Side};

/// Default guard for `v = p / rho`.
pub const DEFAULT_EPS_DIV: f64 = 1e-12;

fn check_weights(u: &DensityField, w: &QuadratureWeights) -> Result<()> {
    if u.nv() != w.len() {
        return Err(Error::argument(format!(
            "field has {} velocity nodes, weights have {}",
            u.nv(),
            w.len()
        )));
    }
    Ok(())
}

/// `rho(k) = kappa sum_l w(l) u[k, l]` on the interior nodes.
pub fn euler_density(u: &DensityField, w: &QuadratureWeights, kappa: f64) -> Result<ScalarField> {
    check_weights(u, w)?;
    let mut rho = ScalarField::zeros(u.m1(), u.m2());
    for l in 0..u.nv() {
        let wl = w.get(l);
        for (k, v) in u.block(l).iter().enumerate() {
            let (k1, k2) = (k % u.m1(), k / u.m1());
            rho.set(k1, k2, rho.get(k1, k2) + wl * v);
        }
    }
    Ok(ScalarField::from_fn(u.m1(), u.m2(), |k1, k2| {
        kappa * rho.get(k1, k2)
    }))
}

/// `p(k) = kappa sum_l w(l) alpha(l) u[k, l]` on the interior nodes.
pub fn euler_impulse(
    u: &DensityField,
    vg: &VelocityGrid,
    w: &QuadratureWeights,
    kappa: f64,
) -> Result<VectorField> {
    check_weights(u, w)?;
    if u.nv() != vg.len() {
        return Err(Error::argument("field does not match the velocity grid"));
    }
    let mut p = VectorField::zeros(u.m1(), u.m2());
    for l in 0..u.nv() {
        let (a1, a2) = vg.alpha_flat(l);
        let wl = w.get(l);
        for (k, v) in u.block(l).iter().enumerate() {
            let (k1, k2) = (k % u.m1(), k / u.m1());
            let [p1, p2] = p.get(k1, k2);
            p.set(k1, k2, [p1 + wl * a1 * v, p2 + wl * a2 * v]);
        }
    }
    Ok(VectorField::from_fn(u.m1(), u.m2(), |k1, k2| {
        let [p1, p2] = p.get(k1, k2);
        [kappa * p1, kappa * p2]
    }))
}

/// `v = p / rho` where `rho > eps_div`, undefined elsewhere.
pub fn euler_velocity(
    p: &VectorField,
    rho: &ScalarField,
    eps_div: f64,
) -> Result<MaskedVectorField> {
    if p.dims() != rho.dims() {
        return Err(Error::argument(
            "impulse and density fields differ in shape",
        ));
    }
    let (n1, n2) = rho.dims();
    Ok(MaskedVectorField::from_fn(n1, n2, |i1, i2| {
        let r = rho.get(i1, i2);
        (r > eps_div).then(|| {
            let [p1, p2] = p.get(i1, i2);
            [p1 / r, p2 / r]
        })
    }))
}

/// Inclusive index rectangle of interior nodes.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct IndexRect {
    pub k1_min: usize,
    pub k1_max: usize,
    pub k2_min: usize,
    pub k2_max: usize,
}

impl IndexRect {
    pub fn full(sg: &SpaceGrid) -> Self {
        IndexRect {
            k1_min: 0,
            k1_max: sg.m1() - 1,
            k2_min: 0,
            k2_max: sg.m2() - 1,
        }
    }
}

/// Trapezoid factor along a run of nodes `lo..=hi`; one-node runs keep 1.
fn trapezoid_factor(i: usize, lo: usize, hi: usize) -> f64 {
    if lo != hi && (i == lo || i == hi) {
        0.5
    } else {
        1.0
    }
}

/// Trapezoid integral of `p` over the rectangle spanned by `region`.
pub fn region_impulse(p: &VectorField, region: IndexRect, sg: &SpaceGrid) -> Result<[f64; 2]> {
    let (n1, n2) = p.dims();
    if region.k1_min > region.k1_max || region.k2_min > region.k2_max {
        return Err(Error::argument("empty region"));
    }
    if region.k1_max >= n1 || region.k2_max >= n2 {
        return Err(Error::argument("region exceeds the grid"));
    }
    let mut sum = [0.0; 2];
    for k2 in region.k2_min..=region.k2_max {
        let c2 = trapezoid_factor(k2, region.k2_min, region.k2_max);
        for k1 in region.k1_min..=region.k1_max {
            let c = c2 * trapezoid_factor(k1, region.k1_min, region.k1_max);
            let [p1, p2] = p.get(k1, k2);
            sum[0] += c * p1;
            sum[1] += c * p2;
        }
    }
    let area = sg.h1() * sg.h2();
    Ok([sum[0] * area, sum[1] * area])
}

/// Euler density and impulse on the full `(M1 + 2) x (M2 + 2)` node set:
/// interior values from `u`, boundary values from the Dirichlet data at level
/// `n`. Corners average the two sides that meet there.
pub fn full_grid_moments(
    u: &DensityField,
    bd: &dyn BoundaryData,
    n: usize,
    vg: &VelocityGrid,
    w: &QuadratureWeights,
    kappa: f64,
) -> Result<(ScalarField, VectorField)> {
    let rho_in = euler_density(u, w, kappa)?;
    let p_in = euler_impulse(u, vg, w, kappa)?;
    let (m1, m2) = (u.m1(), u.m2());
    let side_moments = |side: Side, j: usize| -> (f64, [f64; 2]) {
        let (mut r, mut p1, mut p2) = (0.0, 0.0, 0.0);
        for (lf, l) in vg.indices().enumerate() {
            let g = w.get(lf) * bd.value(side, n, j, l);
            let (a1, a2) = vg.alpha(l);
            r += g;
            p1 += a1 * g;
            p2 += a2 * g;
        }
        (kappa * r, [kappa * p1, kappa * p2])
    };
    let mut rho = ScalarField::zeros(m1 + 2, m2 + 2);
    let mut p = VectorField::zeros(m1 + 2, m2 + 2);
    for j2 in 0..m2 + 2 {
        for j1 in 0..m1 + 2 {
            let mut sides = Vec::with_capacity(2);
            if j1 == 0 {
                sides.push((Side::Left, j2));
            }
            if j1 == m1 + 1 {
                sides.push((Side::Right, j2));
            }
            if j2 == 0 {
                sides.push((Side::Bottom, j1));
            }
            if j2 == m2 + 1 {
                sides.push((Side::Top, j1));
            }
            if sides.is_empty() {
                rho.set(j1, j2, rho_in.get(j1 - 1, j2 - 1));
                p.set(j1, j2, p_in.get(j1 - 1, j2 - 1));
                continue;
            }
            let (mut r, mut q) = (0.0, [0.0; 2]);
            for &(side, j) in &sides {
                let (rs, ps) = side_moments(side, j);
                r += rs;
                q[0] += ps[0];
                q[1] += ps[1];
            }
            let k = sides.len() as f64;
            rho.set(j1, j2, r / k);
            p.set(j1, j2, [q[0] / k, q[1] / k]);
        }
    }
    Ok((rho, p))
}

/// Terms of the mass balance `dm/dt + (impulse flux) + (diffusive flux) = 0`
/// over the whole space rectangle for one step.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct MassBudget {
    /// Mass at the new level.
    pub mass: f64,
    pub dm_dt: f64,
    /// Outward flux of impulse, `oint n . p dS`.
    pub impulse_flux: f64,
    /// Outward diffusive mass flux, `-nu oint n . grad(rho) dS`.
    pub diffusive_flux: f64,
    pub residual: f64,
}

/// Trapezoid integral over the full node set of a field with `(M1 + 2) x (M2 + 2)` nodes.
pub fn total_mass(rho_full: &ScalarField, sg: &SpaceGrid) -> f64 {
    let (n1, n2) = rho_full.dims();
    let mut sum = 0.0;
    for j2 in 0..n2 {
        let c2 = trapezoid_factor(j2, 0, n2 - 1);
        for j1 in 0..n1 {
            sum += c2 * trapezoid_factor(j1, 0, n1 - 1) * rho_full.get(j1, j2);
        }
    }
    sum * sg.h1() * sg.h2()
}

/// Mass budget for the step `n -> n + 1` from full-grid fields (see
/// [`full_grid_moments`]). `p_mid` is the average impulse of the two levels.
/// Normal derivatives use second-order one-sided differences.
pub fn mass_budget(
    rho_n: &ScalarField,
    rho_np1: &ScalarField,
    p_mid: &VectorField,
    sg: &SpaceGrid,
    nu: f64,
    tau: f64,
) -> Result<MassBudget> {
    let dims = (sg.m1() + 2, sg.m2() + 2);
    if rho_n.dims() != dims || rho_np1.dims() != dims || p_mid.dims() != dims {
        return Err(Error::argument(format!(
            "mass budget expects full-grid fields of {dims:?} nodes"
        )));
    }
    let (n1, n2) = dims;
    let (h1, h2) = (sg.h1(), sg.h2());
    let mass_n = total_mass(rho_n, sg);
    let mass = total_mass(rho_np1, sg);
    let dm_dt = (mass - mass_n) / tau;

    let rho_mid = |j1, j2| 0.5 * (rho_n.get(j1, j2) + rho_np1.get(j1, j2));
    // one-sided derivative into the domain from node 0 along a line
    let inward = |f0: f64, f1: f64, f2: f64, h: f64| (-3.0 * f0 + 4.0 * f1 - f2) / (2.0 * h);

    let mut impulse_flux = 0.0;
    let mut normal_gradient = 0.0;
    for j2 in 0..n2 {
        let c = trapezoid_factor(j2, 0, n2 - 1) * h2;
        // left: n = (-1, 0)
        impulse_flux -= c * p_mid.get(0, j2)[0];
        normal_gradient -= c * inward(rho_mid(0, j2), rho_mid(1, j2), rho_mid(2, j2), h1);
        // right: n = (1, 0)
        let e = n1 - 1;
        impulse_flux += c * p_mid.get(e, j2)[0];
        normal_gradient -= c * inward(rho_mid(e, j2), rho_mid(e - 1, j2), rho_mid(e - 2, j2), h1);
    }
    for j1 in 0..n1 {
        let c = trapezoid_factor(j1, 0, n1 - 1) * h1;
        impulse_flux -= c * p_mid.get(j1, 0)[1];
        normal_gradient -= c * inward(rho_mid(j1, 0), rho_mid(j1, 1), rho_mid(j1, 2), h2);
        let e = n2 - 1;
        impulse_flux += c * p_mid.get(j1, e)[1];
        normal_gradient -= c * inward(rho_mid(j1, e), rho_mid(j1, e - 1), rho_mid(j1, e - 2), h2);
    }
    let diffusive_flux = -nu * normal_gradient;
    Ok(MassBudget {
        mass,
        dm_dt,
        impulse_flux,
        diffusive_flux,
        residual: dm_dt + impulse_flux + diffusive_flux,
    })
}

/// Central-difference curl `dv2/dx1 - dv1/dx2` at nodes whose four neighbours
/// are defined; undefined elsewhere, including the outermost ring.
pub fn vorticity(v: &MaskedVectorField, h1: f64, h2: f64) -> MaskedScalarField {
    let (n1, n2) = v.dims();
    MaskedScalarField::from_fn(n1, n2, |i1, i2| {
        if i1 == 0 || i2 == 0 || i1 + 1 >= n1 || i2 + 1 >= n2 {
            return None;
        }
        let east = v.get(i1 + 1, i2)?;
        let west = v.get(i1 - 1, i2)?;
        let north = v.get(i1, i2 + 1)?;
        let south = v.get(i1, i2 - 1)?;
        Some((east[1] - west[1]) / (2.0 * h1) - (north[0] - south[0]) / (2.0 * h2))
    })
}

/// `v / |v|` where `v` is defined and `|v| > eps_div`.
pub fn unit_velocity_field(v: &MaskedVectorField, eps_div: f64) -> MaskedVectorField {
    let (n1, n2) = v.dims();
    MaskedVectorField::from_fn(n1, n2, |i1, i2| {
        let [v1, v2] = v.get(i1, i2)?;
        let norm = v1.hypot(v2);
        (norm > eps_div).then(|| [v1 / norm, v2 / norm])
    })
}

/// Density, impulse and velocity on the interior nodes.
#[derive(Debug, Clone, PartialEq)]
pub struct EulerFields {
    pub rho: ScalarField,
    pub impulse: VectorField,
    pub velocity: MaskedVectorField,
}

impl EulerFields {
    pub fn compute(
        u: &DensityField,
        vg: &VelocityGrid,
        w: &QuadratureWeights,
        kappa: f64,
        eps_div: f64,
    ) -> Result<Self> {
        let rho = euler_density(u, w, kappa)?;
        let impulse = euler_impulse(u, vg, w, kappa)?;
        let velocity = euler_velocity(&impulse, &rho, eps_div)?;
        Ok(EulerFields {
            rho,
            impulse,
            velocity,
        })
    }
}
