//! Discrete beam-pointing actions.
//!
//! The field of regard is tiled by an `N_a x N_a` grid. Grid spacing uses the
//! inscribed square of the circular beam (`sqrt(2)/2` of the beam width) so
//! that neighbouring beams overlap rather than leave gaps between them.

use std::f64::consts::{FRAC_1_SQRT_2, FRAC_PI_3};

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::Bearing;

/// Actions per axis: `ceil(field_of_regard / (sqrt(2)/2 * beam_width))`.
pub fn grid_size(field_of_regard: f64, beam_width: f64) -> Result<usize> {
    if !(field_of_regard > 0.0) || !(beam_width > 0.0) {
        return Err(Error::Domain(format!(
            "field of regard ({field_of_regard}) and beam width ({beam_width}) must be positive"
        )));
    }
    let n = (field_of_regard / (FRAC_1_SQRT_2 * beam_width)).ceil();
    if !n.is_finite() || n > u32::MAX as f64 {
        return Err(Error::Domain(format!("grid size {n} is not representable")));
    }
    Ok(n as usize)
}

/// A cell of the action grid: `(a_psi, a_theta)`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(from = "[u32; 2]", into = "[u32; 2]")]
pub struct BeamAction {
    pub a_psi: u32,
    pub a_theta: u32,
}

impl BeamAction {
    pub const fn new(a_psi: u32, a_theta: u32) -> Self {
        Self { a_psi, a_theta }
    }
}

impl From<[u32; 2]> for BeamAction {
    fn from(a: [u32; 2]) -> Self {
        Self::new(a[0], a[1])
    }
}

impl From<BeamAction> for [u32; 2] {
    fn from(a: BeamAction) -> Self {
        [a.a_psi, a.a_theta]
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ActionGrid {
    size: usize,
    field_of_regard: f64,
    beam_width: f64,
}

impl ActionGrid {
    pub fn new(field_of_regard: f64, beam_width: f64) -> Result<Self> {
        let size = grid_size(field_of_regard, beam_width)?;
        if size < 2 {
            return Err(Error::config(
                "grid.field_of_regard_deg",
                format!("grid needs at least 2 actions per axis, got {size}"),
            ));
        }
        Ok(Self {
            size,
            field_of_regard,
            beam_width,
        })
    }

    pub fn size(&self) -> usize {
        self.size
    }

    pub fn field_of_regard(&self) -> f64 {
        self.field_of_regard
    }

    pub fn beam_width(&self) -> f64 {
        self.beam_width
    }

    pub fn contains(&self, a: &BeamAction) -> bool {
        (a.a_psi as usize) < self.size && (a.a_theta as usize) < self.size
    }

    /// `[psi, theta] = pi/3 * (2a / (N_a - 1) - 1)`.
    pub fn to_bearing(&self, a: &BeamAction) -> Result<Bearing> {
        if !self.contains(a) {
            return Err(Error::Domain(format!(
                "action ({}, {}) outside the {n}x{n} grid",
                a.a_psi,
                a.a_theta,
                n = self.size
            )));
        }
        let denom = (self.size - 1) as f64;
        let map = |k: u32| FRAC_PI_3 * (2.0 * k as f64 / denom - 1.0);
        Ok(Bearing::new(map(a.a_psi), map(a.a_theta)))
    }

    pub fn sample_uniform<R: Rng + ?Sized>(&self, rng: &mut R) -> BeamAction {
        let n = self.size as u32;
        BeamAction::new(rng.random_range(0..n), rng.random_range(0..n))
    }

    pub fn iter(&self) -> impl Iterator<Item = BeamAction> + '_ {
        let n = self.size as u32;
        (0..n).flat_map(move |t| (0..n).map(move |p| BeamAction::new(p, t)))
    }
}

pub fn action_to_bearings(a: &BeamAction, grid: &ActionGrid) -> Result<Bearing> {
    grid.to_bearing(a)
}

/// Planar small-angle coverage estimate: fraction of uniform samples in the
/// square `[0, extent)^2` farther than `radius` from every point of a square
/// lattice with the given spacing and lattice points at cell centres.
pub fn uncovered_fraction<R: Rng + ?Sized>(
    extent: f64,
    spacing: f64,
    radius: f64,
    samples: usize,
    rng: &mut R,
) -> f64 {
    let cells = (extent / spacing - 1e-9).ceil() as i64;
    let centre = |k: i64| (k as f64 + 0.5) * spacing;
    let mut missed = 0usize;
    for _ in 0..samples {
        let x: f64 = rng.random_range(0.0..extent);
        let y: f64 = rng.random_range(0.0..extent);
        let (cx, cy) = ((x / spacing).floor() as i64, (y / spacing).floor() as i64);
        let mut covered = false;
        'search: for i in (cx - 1).max(0)..=(cx + 1).min(cells - 1) {
            for j in (cy - 1).max(0)..=(cy + 1).min(cells - 1) {
                let (dx, dy) = (x - centre(i), y - centre(j));
                if dx * dx + dy * dy <= radius * radius {
                    covered = true;
                    break 'search;
                }
            }
        }
        if !covered {
            missed += 1;
        }
    }
    missed as f64 / samples as f64
}
