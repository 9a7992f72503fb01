//! Initial and boundary data generators.
//!
//! The "Collision" experiment lets four streams enter an empty rectangle, one
//! through each side. On side `s` the Dirichlet data is
//! `H(n) * Lambda(j) * [l in band(s)]` where `Lambda` is the unit triangle
//! over the whole side and `H(n) = base_height + ramp_rate * n`.

use crate::error::{Error, Result};
use crate::field::DensityField;
use crate::grid::{SpaceGrid, VelIndex, VelocityGrid};
use crate::scheme::{BoundaryData, Side};

pub fn empty_initial(sg: &SpaceGrid, vg: &VelocityGrid) -> DensityField {
    DensityField::zeros(sg, vg)
}

pub fn uniform_initial(sg: &SpaceGrid, vg: &VelocityGrid, c: f64) -> DensityField {
    DensityField::filled(sg, vg, c)
}

fn side_slot(side: Side) -> usize {
    match side {
        Side::Left => 0,
        Side::Right => 1,
        Side::Bottom => 2,
        Side::Top => 3,
    }
}

/// Whether velocity node `l` points into the domain through `side`.
pub fn is_inward(side: Side, l: VelIndex) -> bool {
    match side {
        Side::Left => l.l1 > 0,
        Side::Right => l.l1 < 0,
        Side::Bottom => l.l2 > 0,
        Side::Top => l.l2 < 0,
    }
}

/// The inward node with the largest normal speed and no tangential
/// component, if the grid has one.
pub fn default_band(side: Side, vg: &VelocityGrid) -> Vec<VelIndex> {
    let (mr1, pr1, mr2, pr2) = vg.ranges();
    let l = match side {
        Side::Left => VelIndex::new(pr1 as i64, 0),
        Side::Right => VelIndex::new(-(mr1 as i64), 0),
        Side::Bottom => VelIndex::new(0, pr2 as i64),
        Side::Top => VelIndex::new(0, -(mr2 as i64)),
    };
    if is_inward(side, l) {
        vec![l]
    } else {
        Vec::new()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CollisionParams {
    /// Growth of the profile height per time level.
    pub ramp_rate: f64,
    pub base_height: f64,
    /// Inflow velocity nodes per side, indexed left, right, bottom, top.
    pub bands: [Vec<VelIndex>; 4],
    pub sides_enabled: [bool; 4],
}

impl CollisionParams {
    /// All four sides enabled with [`default_band`]s.
    pub fn new(vg: &VelocityGrid, ramp_rate: f64, base_height: f64) -> Self {
        CollisionParams {
            ramp_rate,
            base_height,
            bands: Side::ALL.map(|s| default_band(s, vg)),
            sides_enabled: [true; 4],
        }
    }

    pub fn band(&self, side: Side) -> &[VelIndex] {
        &self.bands[side_slot(side)]
    }

    pub fn set_band(&mut self, side: Side, band: Vec<VelIndex>) {
        self.bands[side_slot(side)] = band;
    }

    pub fn enabled(&self, side: Side) -> bool {
        self.sides_enabled[side_slot(side)]
    }

    pub fn set_enabled(&mut self, side: Side, on: bool) {
        self.sides_enabled[side_slot(side)] = on;
    }

    pub fn height(&self, n: usize) -> f64 {
        self.base_height + self.ramp_rate * n as f64
    }
}

/// Dirichlet data of the Collision experiment.
#[derive(Debug, Clone)]
pub struct CollisionBoundary {
    params: CollisionParams,
    /// Interior node count along each side, same slot order as the bands.
    tangential: [usize; 4],
    /// `bands` as velocity-grid membership masks.
    masks: [Vec<bool>; 4],
    velocity: VelocityGrid,
}

pub fn collision_boundary(
    params: CollisionParams,
    sg: &SpaceGrid,
    vg: &VelocityGrid,
) -> Result<CollisionBoundary> {
    for (name, v) in [
        ("ramp_rate", params.ramp_rate),
        ("base_height", params.base_height),
    ] {
        if !(v.is_finite() && v >= 0.0) {
            return Err(Error::config(format!("{name} must be >= 0, got {v}")));
        }
    }
    let mut masks: [Vec<bool>; 4] = Default::default();
    for side in Side::ALL {
        let mask = &mut masks[side_slot(side)];
        *mask = vec![false; vg.len()];
        for &l in params.band(side) {
            let Some(flat) = vg.flat(l) else {
                return Err(Error::config(format!(
                    "{side:?} inflow band node {l} is outside the velocity grid"
                )));
            };
            if !is_inward(side, l) {
                return Err(Error::config(format!(
                    "{side:?} inflow band node {l} does not point into the domain"
                )));
            }
            mask[flat] = true;
        }
    }
    Ok(CollisionBoundary {
        params,
        tangential: [sg.m2(), sg.m2(), sg.m1(), sg.m1()],
        masks,
        velocity: *vg,
    })
}

impl CollisionBoundary {
    pub fn params(&self) -> &CollisionParams {
        &self.params
    }

    /// Unit triangle along `side` at full-grid node `j`.
    pub fn profile(&self, side: Side, j: usize) -> f64 {
        let intervals = (self.tangential[side_slot(side)] + 1) as f64;
        let s = j as f64 / intervals;
        (1.0 - (2.0 * s - 1.0).abs()).max(0.0)
    }
}

impl BoundaryData for CollisionBoundary {
    fn value(&self, side: Side, n: usize, j: usize, l: VelIndex) -> f64 {
        let slot = side_slot(side);
        if !self.params.sides_enabled[slot] {
            return 0.0;
        }
        match self.velocity.flat(l) {
            Some(flat) if self.masks[slot][flat] => self.params.height(n) * self.profile(side, j),
            _ => 0.0,
        }
    }
}
