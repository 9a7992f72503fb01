//! Reference implementations for testing `kinetic-core`.
//!
//! Everything here is written from the defining formulas, independently of
//! the production code paths: dense assembly of the block matrices, dense LU
//! solves, brute-force mixer sums and plain moment sums.

use kinetic_core::{DensityField, SpaceGrid, VelIndex, VelocityGrid};
use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn random_field(
    sg: &SpaceGrid,
    vg: &VelocityGrid,
    rng: &mut impl Rng,
    lo: f64,
    hi: f64,
) -> DensityField {
    DensityField::from_fn(sg, vg, |_, _, _| rng.gen_range(lo..hi))
}

/// Velocity nodes in row-major order over `(l1, l2)`.
pub fn velocity_nodes(vg: &VelocityGrid) -> Vec<VelIndex> {
    let (mr1, pr1, mr2, pr2) = vg.ranges();
    let mut out = Vec::new();
    for l1 in -(mr1 as i64)..=pr1 as i64 {
        for l2 in -(mr2 as i64)..=pr2 as i64 {
            out.push(VelIndex::new(l1, l2));
        }
    }
    out
}

/// Trapezoid weights from the 1-D rule, one-node dimensions keep the step.
pub fn trapezoid(vg: &VelocityGrid) -> Vec<f64> {
    let (ah1, ah2) = vg.steps();
    let (mr1, pr1, mr2, pr2) = vg.ranges();
    let one_d = |l: i64, lo: i64, hi: i64| {
        if lo != hi && (l == lo || l == hi) {
            0.5
        } else {
            1.0
        }
    };
    velocity_nodes(vg)
        .into_iter()
        .map(|l| {
            ah1 * ah2
                * one_d(l.l1, -(mr1 as i64), pr1 as i64)
                * one_d(l.l2, -(mr2 as i64), pr2 as i64)
        })
        .collect()
}

/// Stencil coefficients `(a1, b1, a2, b2, d, d1)` of one velocity node.
pub fn stencil(sg: &SpaceGrid, alpha: (f64, f64), tau: f64, nu: f64) -> [f64; 6] {
    let (h1, h2) = (sg.h1(), sg.h2());
    let (lam1, lam2) = (tau / h1, tau / h2);
    let (mu1, mu2) = (tau / (h1 * h1), tau / (h2 * h2));
    [
        -lam1 * alpha.0 / 4.0 - nu * mu1 / 2.0,
        lam1 * alpha.0 / 4.0 - nu * mu1 / 2.0,
        -lam2 * alpha.1 / 4.0 - nu * mu2 / 2.0,
        lam2 * alpha.1 / 4.0 - nu * mu2 / 2.0,
        1.0 + nu * (mu1 + mu2),
        1.0 - nu * (mu1 + mu2),
    ]
}

/// Block tridiagonal `M2 x M2` matrix of `M1 x M1` blocks: `diag` on the
/// diagonal (itself tridiagonal with `sub`, `centre`, `sup`), `lower * I`
/// below and `upper * I` above.
fn velocity_block(
    m1: usize,
    m2: usize,
    centre: f64,
    sub: f64,
    sup: f64,
    lower: f64,
    upper: f64,
) -> DMatrix<f64> {
    let n = m1 * m2;
    let mut d = DMatrix::<f64>::zeros(m1, m1);
    for i in 0..m1 {
        d[(i, i)] = centre;
        if i > 0 {
            d[(i, i - 1)] = sub;
        }
        if i + 1 < m1 {
            d[(i, i + 1)] = sup;
        }
    }
    let eye = DMatrix::<f64>::identity(m1, m1);
    let mut out = DMatrix::<f64>::zeros(n, n);
    for bi in 0..m2 {
        out.view_mut((bi * m1, bi * m1), (m1, m1)).copy_from(&d);
        if bi > 0 {
            out.view_mut((bi * m1, (bi - 1) * m1), (m1, m1))
                .copy_from(&(&eye * lower));
        }
        if bi + 1 < m2 {
            out.view_mut((bi * m1, (bi + 1) * m1), (m1, m1))
                .copy_from(&(&eye * upper));
        }
    }
    out
}

fn block_diagonal(
    sg: &SpaceGrid,
    vg: &VelocityGrid,
    block: impl Fn(VelIndex) -> DMatrix<f64>,
) -> DMatrix<f64> {
    let n = sg.m1() * sg.m2();
    let nodes = velocity_nodes(vg);
    let mut out = DMatrix::<f64>::zeros(n * nodes.len(), n * nodes.len());
    for (b, l) in nodes.into_iter().enumerate() {
        out.view_mut((b * n, b * n), (n, n)).copy_from(&block(l));
    }
    out
}

/// The left-hand matrix: blocks `D = tri(a1, d, b1)`, `A = a2 I`, `B = b2 I`.
pub fn dense_lhs(sg: &SpaceGrid, vg: &VelocityGrid, tau: f64, nu: f64) -> DMatrix<f64> {
    block_diagonal(sg, vg, |l| {
        let [a1, b1, a2, b2, d, _] = stencil(sg, vg.alpha(l), tau, nu);
        velocity_block(sg.m1(), sg.m2(), d, a1, b1, a2, b2)
    })
}

/// The right-hand matrix: blocks `D1 = tri(-a1, d1, -b1)`, `-A`, `-B`.
pub fn dense_rhs(sg: &SpaceGrid, vg: &VelocityGrid, tau: f64, nu: f64) -> DMatrix<f64> {
    block_diagonal(sg, vg, |l| {
        let [a1, b1, a2, b2, _, d1] = stencil(sg, vg.alpha(l), tau, nu);
        velocity_block(sg.m1(), sg.m2(), d1, -a1, -b1, -a2, -b2)
    })
}

/// Flattens `u` as `[u_{., l_0} | u_{., l_1} | ...]` with `k1` fastest.
pub fn to_vector(u: &DensityField) -> DVector<f64> {
    let (m1, m2, nv) = u.shape();
    let mut v = DVector::zeros(m1 * m2 * nv);
    let mut i = 0;
    for l in 0..nv {
        for k2 in 0..m2 {
            for k1 in 0..m1 {
                v[i] = u.get(k1, k2, l);
                i += 1;
            }
        }
    }
    v
}

pub fn from_vector(v: &DVector<f64>, sg: &SpaceGrid, vg: &VelocityGrid) -> DensityField {
    let (m1, m2) = (sg.m1(), sg.m2());
    DensityField::from_fn(sg, vg, |k1, k2, l| v[(l * m2 + k2) * m1 + k1])
}

pub fn dense_solve(a: &DMatrix<f64>, f: &DVector<f64>) -> DVector<f64> {
    a.clone().lu().solve(f).expect("nonsingular")
}

/// `||I - s A||_inf` computed from the entries of `I - s A`.
pub fn inf_norm_of_iteration_matrix(a: &DMatrix<f64>, s: f64) -> f64 {
    let n = a.nrows();
    let m = DMatrix::<f64>::identity(n, n) - a * s;
    (0..n)
        .map(|i| m.row(i).iter().map(|v| v.abs()).sum::<f64>())
        .fold(0.0, f64::max)
}

/// `max_i (|1 - s a_ii| + s sum_{j != i} |a_ij|)`.
pub fn row_bound_formula(a: &DMatrix<f64>, s: f64) -> f64 {
    (0..a.nrows())
        .map(|i| {
            let off: f64 = (0..a.ncols())
                .filter(|&j| j != i)
                .map(|j| a[(i, j)].abs())
                .sum();
            (1.0 - s * a[(i, i)]).abs() + s * off
        })
        .fold(0.0, f64::max)
}

fn r_piecewise(d: f64) -> f64 {
    if d >= 0.0 {
        -d / (1.0 + d)
    } else {
        -d / (1.0 - d)
    }
}

/// `kappa * sum_beta w(beta) M(alpha, beta)` by direct double summation.
pub fn mixer_double_sum(slice: &[f64], vg: &VelocityGrid, kappa: f64) -> Vec<f64> {
    let nodes = velocity_nodes(vg);
    let w = trapezoid(vg);
    let norm = |l: VelIndex| {
        let (a1, a2) = vg.alpha(l);
        (a1 * a1 + a2 * a2).sqrt()
    };
    (0..nodes.len())
        .map(|a| {
            let mut s = 0.0;
            for b in 0..nodes.len() {
                let d = norm(nodes[b]) * slice[b] - norm(nodes[a]) * slice[a];
                let m = if d >= 0.0 {
                    r_piecewise(d) * slice[a]
                } else {
                    r_piecewise(d) * slice[b]
                };
                s += w[b] * m;
            }
            kappa * s
        })
        .collect()
}

/// `kappa * sum_l w(l) u[k, l]` and `kappa * sum_l w(l) alpha(l) u[k, l]` at one node.
pub fn moments_at(
    u: &DensityField,
    vg: &VelocityGrid,
    kappa: f64,
    k1: usize,
    k2: usize,
) -> (f64, [f64; 2]) {
    let w = trapezoid(vg);
    let (mut r, mut p1, mut p2) = (0.0, 0.0, 0.0);
    for (i, l) in velocity_nodes(vg).into_iter().enumerate() {
        let (a1, a2) = vg.alpha(l);
        let v = u.get(k1, k2, i);
        r += w[i] * v;
        p1 += w[i] * a1 * v;
        p2 += w[i] * a2 * v;
    }
    (kappa * r, [kappa * p1, kappa * p2])
}

/// `log2(coarse / fine)`.
pub fn observed_order(coarse: f64, fine: f64) -> f64 {
    (coarse / fine).log2()
}
