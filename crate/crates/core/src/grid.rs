//! Space, velocity and time grids.
//!
//! The space grid stores only interior unknowns: `M1 x M2` nodes at
//! `x_i = h_i (k_i + 1)` with `h_i = L_i / (M_i + 1)`. Dirichlet data lives on
//! the physical boundary `x_i in {0, L_i}`. Whenever boundary nodes are needed
//! (diagnostics, boundary data) the *full* node index `j in 0..=M_i + 1` is used,
//! with coordinate `h_i * j`.
//!
//! The velocity grid has nodes `alpha_j = ah_j * l_j` for
//! `l_j in -MR_j..=PR_j`; nodes are stored row-major with `l1` as the row.

use std::fmt;

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SpaceGrid {
    l1: f64,
    l2: f64,
    m1: usize,
    m2: usize,
    h1: f64,
    h2: f64,
}

impl SpaceGrid {
    pub fn new(l1: f64, l2: f64, m1: usize, m2: usize) -> Result<Self> {
        if !(l1.is_finite() && l1 > 0.0) || !(l2.is_finite() && l2 > 0.0) {
            return Err(Error::config(format!(
                "domain lengths must be positive, got L1 = {l1}, L2 = {l2}"
            )));
        }
        if m1 == 0 || m2 == 0 {
            return Err(Error::config(format!(
                "interior node counts must be at least 1, got M1 = {m1}, M2 = {m2}"
            )));
        }
        Ok(SpaceGrid {
            l1,
            l2,
            m1,
            m2,
            h1: l1 / (m1 + 1) as f64,
            h2: l2 / (m2 + 1) as f64,
        })
    }

    pub fn lengths(&self) -> (f64, f64) {
        (self.l1, self.l2)
    }

    pub fn m1(&self) -> usize {
        self.m1
    }

    pub fn m2(&self) -> usize {
        self.m2
    }

    /// Number of interior nodes.
    pub fn len(&self) -> usize {
        self.m1 * self.m2
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn h1(&self) -> f64 {
        self.h1
    }

    pub fn h2(&self) -> f64 {
        self.h2
    }

    /// Coordinates of interior node `(k1, k2)`.
    pub fn coord(&self, k1: usize, k2: usize) -> (f64, f64) {
        (self.h1 * (k1 + 1) as f64, self.h2 * (k2 + 1) as f64)
    }

    /// Coordinates of full-grid node `(j1, j2)`, `j_i in 0..=M_i + 1`.
    pub fn full_coord(&self, j1: usize, j2: usize) -> (f64, f64) {
        (self.h1 * j1 as f64, self.h2 * j2 as f64)
    }

    /// Interior node closest to `(x1, x2)`, if the point lies within half a
    /// step of one.
    pub fn nearest_node(&self, x1: f64, x2: f64) -> Option<(usize, usize)> {
        let k1 = nearest(x1 / self.h1 - 1.0, 0, self.m1 as i64 - 1)?;
        let k2 = nearest(x2 / self.h2 - 1.0, 0, self.m2 as i64 - 1)?;
        Some((k1 as usize, k2 as usize))
    }
}

fn nearest(pos: f64, lo: i64, hi: i64) -> Option<i64> {
    if !pos.is_finite() {
        return None;
    }
    let k = pos.round();
    if k < lo as f64 || k > hi as f64 {
        return None;
    }
    Some(k as i64)
}

/// A velocity node `(l1, l2)`; the coordinate is `(ah1 * l1, ah2 * l2)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct VelIndex {
    pub l1: i64,
    pub l2: i64,
}

impl VelIndex {
    pub const fn new(l1: i64, l2: i64) -> Self {
        VelIndex { l1, l2 }
    }
}

impl fmt::Display for VelIndex {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({}, {})", self.l1, self.l2)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct VelocityGrid {
    ah1: f64,
    ah2: f64,
    mr1: usize,
    pr1: usize,
    mr2: usize,
    pr2: usize,
}

impl VelocityGrid {
    pub fn new(ah1: f64, ah2: f64, mr1: usize, pr1: usize, mr2: usize, pr2: usize) -> Result<Self> {
        if !(ah1.is_finite() && ah1 > 0.0) || !(ah2.is_finite() && ah2 > 0.0) {
            return Err(Error::config(format!(
                "velocity steps must be positive, got ah1 = {ah1}, ah2 = {ah2}"
            )));
        }
        Ok(VelocityGrid {
            ah1,
            ah2,
            mr1,
            pr1,
            mr2,
            pr2,
        })
    }

    pub fn steps(&self) -> (f64, f64) {
        (self.ah1, self.ah2)
    }

    /// `(MR1, PR1, MR2, PR2)`.
    pub fn ranges(&self) -> (usize, usize, usize, usize) {
        (self.mr1, self.pr1, self.mr2, self.pr2)
    }

    pub fn n1(&self) -> usize {
        self.mr1 + self.pr1 + 1
    }

    pub fn n2(&self) -> usize {
        self.mr2 + self.pr2 + 1
    }

    /// Number of velocity nodes, `q + 1`.
    pub fn len(&self) -> usize {
        self.n1() * self.n2()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    /// Lower corner `(D1, D2)` of the velocity rectangle.
    pub fn lower(&self) -> (f64, f64) {
        (-self.ah1 * self.mr1 as f64, -self.ah2 * self.mr2 as f64)
    }

    /// Upper corner `(G1, G2)` of the velocity rectangle.
    pub fn upper(&self) -> (f64, f64) {
        (self.ah1 * self.pr1 as f64, self.ah2 * self.pr2 as f64)
    }

    pub fn area(&self) -> f64 {
        let (d1, d2) = self.lower();
        let (g1, g2) = self.upper();
        (g1 - d1) * (g2 - d2)
    }

    pub fn index(&self, flat: usize) -> VelIndex {
        let n2 = self.n2();
        VelIndex {
            l1: (flat / n2) as i64 - self.mr1 as i64,
            l2: (flat % n2) as i64 - self.mr2 as i64,
        }
    }

    pub fn flat(&self, l: VelIndex) -> Option<usize> {
        let i1 = l.l1 + self.mr1 as i64;
        let i2 = l.l2 + self.mr2 as i64;
        if i1 < 0 || i2 < 0 || i1 >= self.n1() as i64 || i2 >= self.n2() as i64 {
            return None;
        }
        Some(i1 as usize * self.n2() + i2 as usize)
    }

    pub fn contains(&self, l: VelIndex) -> bool {
        self.flat(l).is_some()
    }

    pub fn alpha(&self, l: VelIndex) -> (f64, f64) {
        (self.ah1 * l.l1 as f64, self.ah2 * l.l2 as f64)
    }

    pub fn alpha_flat(&self, flat: usize) -> (f64, f64) {
        self.alpha(self.index(flat))
    }

    /// All nodes in storage order.
    pub fn indices(&self) -> impl Iterator<Item = VelIndex> + '_ {
        (0..self.len()).map(|i| self.index(i))
    }

    pub fn nearest_index(&self, a1: f64, a2: f64) -> Option<VelIndex> {
        let l1 = nearest(a1 / self.ah1, -(self.mr1 as i64), self.pr1 as i64)?;
        let l2 = nearest(a2 / self.ah2, -(self.mr2 as i64), self.pr2 as i64)?;
        Some(VelIndex { l1, l2 })
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TimeGrid {
    t_final: f64,
    steps: usize,
    tau: f64,
}

impl TimeGrid {
    pub fn new(t_final: f64, steps: usize) -> Result<Self> {
        if !(t_final.is_finite() && t_final > 0.0) {
            return Err(Error::config(format!(
                "final time must be positive, got T = {t_final}"
            )));
        }
        if steps == 0 {
            return Err(Error::config("step count N must be at least 1"));
        }
        Ok(TimeGrid {
            t_final,
            steps,
            tau: t_final / steps as f64,
        })
    }

    pub fn t_final(&self) -> f64 {
        self.t_final
    }

    pub fn steps(&self) -> usize {
        self.steps
    }

    pub fn tau(&self) -> f64 {
        self.tau
    }

    pub fn time(&self, n: usize) -> f64 {
        n as f64 * self.tau
    }
}

/// Trapezoidal weights over the velocity rectangle, in velocity storage order.
#[derive(Debug, Clone, PartialEq)]
pub struct QuadratureWeights {
    w: Vec<f64>,
}

impl QuadratureWeights {
    pub fn trapezoid(vg: &VelocityGrid) -> Self {
        let (ah1, ah2) = vg.steps();
        let (n1, n2) = (vg.n1(), vg.n2());
        let mut w = Vec::with_capacity(vg.len());
        for i1 in 0..n1 {
            for i2 in 0..n2 {
                w.push(ah1 * ah2 * end_factor(i1, n1) * end_factor(i2, n2));
            }
        }
        QuadratureWeights { w }
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.w
    }

    pub fn get(&self, flat: usize) -> f64 {
        self.w[flat]
    }

    pub fn len(&self) -> usize {
        self.w.len()
    }

    pub fn is_empty(&self) -> bool {
        self.w.is_empty()
    }

    pub fn total(&self) -> f64 {
        self.w.iter().sum()
    }

    /// `sum_l w(l) f(l)` in storage order.
    pub fn integrate(&self, values: &[f64]) -> f64 {
        debug_assert_eq!(values.len(), self.w.len());
        self.w.iter().zip(values).map(|(w, v)| w * v).sum()
    }
}

/// A one-node dimension keeps the full step.
fn end_factor(i: usize, n: usize) -> f64 {
    if n > 1 && (i == 0 || i == n - 1) {
        0.5
    } else {
        1.0
    }
}

pub fn trapezoid_weights(vg: &VelocityGrid) -> QuadratureWeights {
    QuadratureWeights::trapezoid(vg)
}
