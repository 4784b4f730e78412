use serde::{Deserialize, Serialize};

use super::point::{OpenBox, ParticlePoint, ParticleSet};
use crate::{Error, Result};

/// An open n-particle cube `{x : |x - u| < L}`, or a rectangle
/// `prod_i C_{L_i}(u_i)` when per-particle half-sides are given.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct CubeSpec {
    center: ParticlePoint,
    half_side: i64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    sides: Option<Vec<i64>>,
}

impl CubeSpec {
    pub fn new(center: ParticlePoint, half_side: i64) -> Result<Self> {
        if half_side <= 0 {
            return Err(Error::InvalidParameter(format!("half-side {half_side} must be positive")));
        }
        Ok(Self { center, half_side, sides: None })
    }

    /// Rectangle with half-side `sides[i]` for particle `i`.
    pub fn rectangle(center: ParticlePoint, sides: Vec<i64>) -> Result<Self> {
        if sides.len() != center.particles() {
            return Err(Error::DimensionMismatch(format!(
                "{} half-sides for {} particles",
                sides.len(),
                center.particles()
            )));
        }
        if sides.iter().any(|&s| s <= 0) {
            return Err(Error::InvalidParameter("rectangle half-sides must be positive".into()));
        }
        let half_side = *sides.iter().max().expect("at least one particle");
        if sides.iter().all(|&s| s == half_side) {
            return Ok(Self { center, half_side, sides: None });
        }
        Ok(Self { center, half_side, sides: Some(sides) })
    }

    /// Convenience constructor for one-dimensional particles.
    pub fn line(center: &[i64], half_side: i64) -> Result<Self> {
        Self::new(ParticlePoint::line(center), half_side)
    }

    pub fn center(&self) -> &ParticlePoint {
        &self.center
    }

    pub fn half_side(&self) -> i64 {
        self.half_side
    }

    pub fn is_rectangle(&self) -> bool {
        self.sides.is_some()
    }

    pub fn side(&self, particle: usize) -> i64 {
        self.sides.as_ref().map_or(self.half_side, |s| s[particle])
    }

    pub fn particles(&self) -> usize {
        self.center.particles()
    }

    pub fn dim(&self) -> usize {
        self.center.dim()
    }

    /// The one-particle cube `C_{L_i}(u_i)`.
    pub fn particle_box(&self, i: usize) -> OpenBox {
        OpenBox::around(self.center.particle(i), self.side(i))
    }

    /// `Pi C = C_L(u_1) u ... u C_L(u_n)`, one box per particle, not merged.
    pub fn projection(&self) -> Vec<OpenBox> {
        (0..self.particles()).map(|i| self.particle_box(i)).collect()
    }

    /// The factor cube of the particles in `set`.
    pub fn select(&self, set: ParticleSet) -> Result<Self> {
        let center = self.center.select(set)?;
        match &self.sides {
            None => Self::new(center, self.half_side),
            Some(s) => Self::rectangle(center, set.iter().map(|i| s[i]).collect()),
        }
    }

    /// Whether `other` is a subset of `self` (closed containment of open cubes).
    pub fn contains_cube(&self, other: &CubeSpec) -> bool {
        if other.particles() != self.particles() || other.dim() != self.dim() {
            return false;
        }
        (0..self.particles()).all(|i| {
            let (a, b) = (self.center.particle(i), other.center.particle(i));
            a.iter().zip(b).all(|(x, y)| (x - y).abs() + other.side(i) <= self.side(i))
        })
    }

    /// Same cube re-centred at `center`.
    pub fn recentered(&self, center: ParticlePoint) -> Result<Self> {
        if center.particles() != self.particles() || center.dim() != self.dim() {
            return Err(Error::DimensionMismatch("new center has a different shape".into()));
        }
        Ok(Self { center, half_side: self.half_side, sides: self.sides.clone() })
    }

    /// Same center, new half-side.
    pub fn with_half_side(&self, half_side: i64) -> Result<Self> {
        Self::new(self.center.clone(), half_side)
    }

    /// Interior and boundary-shell regions used by the singularity test.
    pub fn regions(&self) -> Result<RegionPair> {
        if self.half_side <= 3 {
            return Err(Error::DegenerateCube(self.half_side));
        }
        Ok(RegionPair {
            outer_half_side: self.half_side,
            interior_half_side: self.half_side / 3,
            shell_inner_half_side: self.half_side - 2,
        })
    }
}

/// `C^{int} = C_{floor(L/3)}` and the shell `C_L \ C_{L-2}`, both around the
/// cube center. All half-sides are in lattice units.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct RegionPair {
    pub outer_half_side: i64,
    pub interior_half_side: i64,
    pub shell_inner_half_side: i64,
}

impl RegionPair {
    /// Membership for a point at max-norm distance `dist / refinement` from
    /// the center.
    pub fn in_interior(&self, dist: i64, refinement: i64) -> bool {
        dist < self.interior_half_side * refinement
    }

    pub fn in_shell(&self, dist: i64, refinement: i64) -> bool {
        dist >= self.shell_inner_half_side * refinement && dist < self.outer_half_side * refinement
    }
}
