//! The mixer: a pointwise nonlinear redistribution of density across
//! velocity nodes.
//!
//! For two velocity nodes `alpha`, `beta` at the same point `(t, x)`, let
//! `d = |beta| rho(beta) - |alpha| rho(alpha)`. The kernel is
//! `M = r(d) rho(alpha)` for `d >= 0` and `M = r(d) rho(beta)` otherwise, with
//! `r(d) = -d / (1 + |d|)`. `M` is antisymmetric in `(alpha, beta)`, so its
//! double integral over the velocity rectangle vanishes and the mixer never
//! changes the Euler mass density.

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::field::DensityField;
use crate::grid::{QuadratureWeights, VelocityGrid};

/// `-d / (1 + |d|)`: odd, bounded by 1 in magnitude, 1-Lipschitz.
#[inline]
pub fn r(d: f64) -> f64 {
    -d / (1.0 + d.abs())
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MixerInput {
    pub rho_alpha: f64,
    pub rho_beta: f64,
    pub norm_alpha: f64,
    pub norm_beta: f64,
}

#[inline]
pub fn mixer_kernel(input: MixerInput) -> f64 {
    kernel(
        input.norm_alpha * input.rho_alpha,
        input.norm_beta * input.rho_beta,
        input.rho_alpha,
        input.rho_beta,
    )
}

/// Kernel with the weighted densities `|alpha| rho(alpha)` precomputed.
#[inline]
fn kernel(flux_alpha: f64, flux_beta: f64, rho_alpha: f64, rho_beta: f64) -> f64 {
    let d = flux_beta - flux_alpha;
    if d >= 0.0 {
        r(d) * rho_alpha
    } else {
        r(d) * rho_beta
    }
}

/// The mixer term at every velocity node of one space node; `kappa` is
/// already applied.
#[derive(Debug, Clone, PartialEq)]
pub struct MixerField {
    pub values: Vec<f64>,
    pub kappa: f64,
}

impl MixerField {
    /// `sum_alpha w(alpha) values(alpha)`.
    pub fn weighted_sum(&self, w: &QuadratureWeights) -> f64 {
        w.integrate(&self.values)
    }
}

/// Evaluates `kappa * sum_beta w(beta) M(alpha, beta)` for all `alpha`.
pub fn mixer_integral(
    slice: &[f64],
    vg: &VelocityGrid,
    w: &QuadratureWeights,
    kappa: f64,
) -> Result<MixerField> {
    let mixer = Mixer::new(vg, w, kappa);
    if slice.len() != mixer.len() {
        return Err(Error::argument(format!(
            "density slice has {} entries, velocity grid has {}",
            slice.len(),
            mixer.len()
        )));
    }
    let mut values = vec![0.0; slice.len()];
    let mut scratch = vec![0.0; slice.len()];
    mixer.apply_slice(slice, &mut scratch, &mut values);
    Ok(MixerField { values, kappa })
}

/// Precomputed velocity norms and weights for repeated mixer evaluation.
#[derive(Debug, Clone)]
pub struct Mixer {
    norms: Vec<f64>,
    weights: Vec<f64>,
    kappa: f64,
}

impl Mixer {
    pub fn new(vg: &VelocityGrid, w: &QuadratureWeights, kappa: f64) -> Self {
        let norms = vg
            .indices()
            .map(|l| {
                let (a1, a2) = vg.alpha(l);
                a1.hypot(a2)
            })
            .collect();
        Mixer {
            norms,
            weights: w.as_slice().to_vec(),
            kappa,
        }
    }

    pub fn kappa(&self) -> f64 {
        self.kappa
    }

    pub fn len(&self) -> usize {
        self.norms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.norms.is_empty()
    }

    /// Writes the mixer term for one space node into `out`. `flux` is scratch
    /// of the same length. The beta-sum runs in storage order.
    pub fn apply_slice(&self, slice: &[f64], flux: &mut [f64], out: &mut [f64]) {
        for ((f, n), rho) in flux.iter_mut().zip(&self.norms).zip(slice) {
            *f = n * rho;
        }
        for (a, o) in out.iter_mut().enumerate() {
            let (fa, ra) = (flux[a], slice[a]);
            let mut acc = 0.0;
            for b in 0..slice.len() {
                acc += self.weights[b] * kernel(fa, flux[b], ra, slice[b]);
            }
            *o = self.kappa * acc;
        }
    }

    /// The mixer term at every space node of `u`. Space nodes are processed in
    /// parallel; each node's result does not depend on the thread count.
    pub fn apply(&self, u: &DensityField) -> DensityField {
        let nv = u.nv();
        assert_eq!(nv, self.len(), "velocity dimension mismatch");
        let (m1, m2) = (u.m1(), u.m2());
        let mut nodal = vec![0.0; m1 * m2 * nv];
        if self.kappa != 0.0 {
            nodal.par_chunks_mut(nv).enumerate().for_each_init(
                || (vec![0.0; nv], vec![0.0; nv]),
                |(slice, flux), (node, out)| {
                    u.gather_slice(node % m1, node / m1, slice);
                    self.apply_slice(slice, flux, out);
                },
            );
        }
        let n = m1 * m2;
        let mut data = vec![0.0; n * nv];
        for (node, vals) in nodal.chunks(nv).enumerate() {
            for (l, v) in vals.iter().enumerate() {
                data[l * n + node] = *v;
            }
        }
        DensityField::from_vec(m1, m2, nv, data).expect("shape preserved")
    }
}
