//! Grid functions.
//!
//! [`DensityField`] stores `u[k1, k2, l]` velocity-block-major: block `l` is a
//! contiguous `M1 * M2` slab with `k1` running fastest. This matches the block
//! vector `[u_{., l_0} | u_{., l_1} | ... | u_{., l_q}]` of the linear system,
//! so every velocity block can be processed independently.

use crate::error::{Error, Result};
use crate::grid::{SpaceGrid, VelocityGrid};

#[derive(Debug, Clone, PartialEq)]
pub struct DensityField {
    m1: usize,
    m2: usize,
    nv: usize,
    data: Vec<f64>,
}

impl DensityField {
    pub fn zeros(sg: &SpaceGrid, vg: &VelocityGrid) -> Self {
        Self::filled(sg, vg, 0.0)
    }

    pub fn filled(sg: &SpaceGrid, vg: &VelocityGrid, value: f64) -> Self {
        Self::from_shape(sg.m1(), sg.m2(), vg.len(), value)
    }

    pub fn from_shape(m1: usize, m2: usize, nv: usize, value: f64) -> Self {
        DensityField {
            m1,
            m2,
            nv,
            data: vec![value; m1 * m2 * nv],
        }
    }

    pub fn from_vec(m1: usize, m2: usize, nv: usize, data: Vec<f64>) -> Result<Self> {
        if data.len() != m1 * m2 * nv {
            return Err(Error::argument(format!(
                "density data has {} entries, expected {m1} x {m2} x {nv}",
                data.len()
            )));
        }
        Ok(DensityField { m1, m2, nv, data })
    }

    /// Evaluates `f(k1, k2, l_flat)` at every entry.
    pub fn from_fn(
        sg: &SpaceGrid,
        vg: &VelocityGrid,
        mut f: impl FnMut(usize, usize, usize) -> f64,
    ) -> Self {
        let mut u = Self::zeros(sg, vg);
        for l in 0..u.nv {
            for k2 in 0..u.m2 {
                for k1 in 0..u.m1 {
                    let i = u.offset(k1, k2, l);
                    u.data[i] = f(k1, k2, l);
                }
            }
        }
        u
    }

    pub fn shape(&self) -> (usize, usize, usize) {
        (self.m1, self.m2, self.nv)
    }

    pub fn m1(&self) -> usize {
        self.m1
    }

    pub fn m2(&self) -> usize {
        self.m2
    }

    /// Number of velocity nodes.
    pub fn nv(&self) -> usize {
        self.nv
    }

    pub fn block_len(&self) -> usize {
        self.m1 * self.m2
    }

    pub fn len(&self) -> usize {
        self.data.len()
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    #[inline]
    pub fn offset(&self, k1: usize, k2: usize, l: usize) -> usize {
        (l * self.m2 + k2) * self.m1 + k1
    }

    #[inline]
    pub fn get(&self, k1: usize, k2: usize, l: usize) -> f64 {
        self.data[self.offset(k1, k2, l)]
    }

    #[inline]
    pub fn set(&mut self, k1: usize, k2: usize, l: usize, value: f64) {
        let i = self.offset(k1, k2, l);
        self.data[i] = value;
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    pub fn as_mut_slice(&mut self) -> &mut [f64] {
        &mut self.data
    }

    pub fn into_vec(self) -> Vec<f64> {
        self.data
    }

    pub fn block(&self, l: usize) -> &[f64] {
        let n = self.block_len();
        &self.data[l * n..(l + 1) * n]
    }

    /// Copies the velocity slice at space node `(k1, k2)` into `out`.
    pub fn gather_slice(&self, k1: usize, k2: usize, out: &mut [f64]) {
        let n = self.block_len();
        let base = k2 * self.m1 + k1;
        for (l, o) in out.iter_mut().enumerate().take(self.nv) {
            *o = self.data[l * n + base];
        }
    }

    pub fn same_shape(&self, other: &DensityField) -> bool {
        self.shape() == other.shape()
    }

    pub fn check_shape(&self, other: &DensityField, what: &str) -> Result<()> {
        if self.same_shape(other) {
            Ok(())
        } else {
            Err(Error::argument(format!(
                "{what}: shape {:?} does not match {:?}",
                other.shape(),
                self.shape()
            )))
        }
    }

    pub fn check_grids(&self, sg: &SpaceGrid, vg: &VelocityGrid) -> Result<()> {
        if self.shape() == (sg.m1(), sg.m2(), vg.len()) {
            Ok(())
        } else {
            Err(Error::argument(format!(
                "field shape {:?} does not match grids ({}, {}, {})",
                self.shape(),
                sg.m1(),
                sg.m2(),
                vg.len()
            )))
        }
    }

    pub fn max_abs(&self) -> f64 {
        max_abs(&self.data)
    }

    pub fn max_abs_diff(&self, other: &DensityField) -> f64 {
        self.data
            .iter()
            .zip(&other.data)
            .fold(0.0, |m, (a, b)| m.max((a - b).abs()))
    }

    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|v| v.is_finite())
    }

    /// `self += factor * other`.
    pub fn axpy(&mut self, factor: f64, other: &DensityField) {
        debug_assert!(self.same_shape(other));
        for (a, b) in self.data.iter_mut().zip(&other.data) {
            *a += factor * b;
        }
    }

    pub fn scale(&mut self, factor: f64) {
        for a in &mut self.data {
            *a *= factor;
        }
    }
}

pub(crate) fn max_abs(values: &[f64]) -> f64 {
    values.iter().fold(0.0, |m, v| m.max(v.abs()))
}

/// A scalar nodal field over an `n1 x n2` node set, `i1` fastest.
#[derive(Debug, Clone, PartialEq)]
pub struct ScalarField {
    n1: usize,
    n2: usize,
    data: Vec<f64>,
}

impl ScalarField {
    pub fn zeros(n1: usize, n2: usize) -> Self {
        ScalarField {
            n1,
            n2,
            data: vec![0.0; n1 * n2],
        }
    }

    pub fn from_fn(n1: usize, n2: usize, mut f: impl FnMut(usize, usize) -> f64) -> Self {
        let mut data = Vec::with_capacity(n1 * n2);
        for i2 in 0..n2 {
            for i1 in 0..n1 {
                data.push(f(i1, i2));
            }
        }
        ScalarField { n1, n2, data }
    }

    pub fn dims(&self) -> (usize, usize) {
        (self.n1, self.n2)
    }

    #[inline]
    pub fn get(&self, i1: usize, i2: usize) -> f64 {
        self.data[i2 * self.n1 + i1]
    }

    #[inline]
    pub fn set(&mut self, i1: usize, i2: usize, v: f64) {
        self.data[i2 * self.n1 + i1] = v;
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    pub fn max_abs(&self) -> f64 {
        max_abs(&self.data)
    }
}

/// A two-component nodal field, `i1` fastest.
#[derive(Debug, Clone, PartialEq)]
pub struct VectorField {
    n1: usize,
    n2: usize,
    data: Vec<[f64; 2]>,
}

impl VectorField {
    pub fn zeros(n1: usize, n2: usize) -> Self {
        VectorField {
            n1,
            n2,
            data: vec![[0.0; 2]; n1 * n2],
        }
    }

    pub fn from_fn(n1: usize, n2: usize, mut f: impl FnMut(usize, usize) -> [f64; 2]) -> Self {
        let mut data = Vec::with_capacity(n1 * n2);
        for i2 in 0..n2 {
            for i1 in 0..n1 {
                data.push(f(i1, i2));
            }
        }
        VectorField { n1, n2, data }
    }

    pub fn dims(&self) -> (usize, usize) {
        (self.n1, self.n2)
    }

    #[inline]
    pub fn get(&self, i1: usize, i2: usize) -> [f64; 2] {
        self.data[i2 * self.n1 + i1]
    }

    #[inline]
    pub fn set(&mut self, i1: usize, i2: usize, v: [f64; 2]) {
        self.data[i2 * self.n1 + i1] = v;
    }

    pub fn as_slice(&self) -> &[[f64; 2]] {
        &self.data
    }

    /// Componentwise average of two fields of the same dimensions.
    pub fn midpoint(&self, other: &VectorField) -> VectorField {
        debug_assert_eq!(self.dims(), other.dims());
        VectorField {
            n1: self.n1,
            n2: self.n2,
            data: self
                .data
                .iter()
                .zip(&other.data)
                .map(|(a, b)| [0.5 * (a[0] + b[0]), 0.5 * (a[1] + b[1])])
                .collect(),
        }
    }
}

/// A nodal field whose value may be undefined at some nodes.
#[derive(Debug, Clone, PartialEq)]
pub struct Masked<T> {
    n1: usize,
    n2: usize,
    data: Vec<Option<T>>,
}

pub type MaskedVectorField = Masked<[f64; 2]>;
pub type MaskedScalarField = Masked<f64>;

impl<T: Copy> Masked<T> {
    pub fn from_fn(n1: usize, n2: usize, mut f: impl FnMut(usize, usize) -> Option<T>) -> Self {
        let mut data = Vec::with_capacity(n1 * n2);
        for i2 in 0..n2 {
            for i1 in 0..n1 {
                data.push(f(i1, i2));
            }
        }
        Masked { n1, n2, data }
    }

    pub fn dims(&self) -> (usize, usize) {
        (self.n1, self.n2)
    }

    #[inline]
    pub fn get(&self, i1: usize, i2: usize) -> Option<T> {
        self.data[i2 * self.n1 + i1]
    }

    pub fn is_defined(&self, i1: usize, i2: usize) -> bool {
        self.get(i1, i2).is_some()
    }

    pub fn defined_count(&self) -> usize {
        self.data.iter().filter(|v| v.is_some()).count()
    }

    pub fn as_slice(&self) -> &[Option<T>] {
        &self.data
    }
}

impl Masked<f64> {
    /// Largest magnitude over defined nodes; 0 when nothing is defined.
    pub fn max_abs(&self) -> f64 {
        self.data.iter().flatten().fold(0.0, |m, v| m.max(v.abs()))
    }
}
