use std::fmt;

use serde::{Deserialize, Serialize};

use crate::{Error, Result};

/// A configuration of `n` particles in `Z^d`, stored particle-major.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct ParticlePoint {
    dim: usize,
    coords: Vec<i64>,
}

impl ParticlePoint {
    pub fn new(dim: usize, coords: Vec<i64>) -> Result<Self> {
        if dim == 0 {
            return Err(Error::InvalidParameter("configuration dimension must be >= 1".into()));
        }
        if coords.is_empty() || !coords.len().is_multiple_of(dim) {
            return Err(Error::DimensionMismatch(format!(
                "{} coordinates do not split into particles of dimension {dim}",
                coords.len()
            )));
        }
        Ok(Self { dim, coords })
    }

    /// One-dimensional particles; panics on an empty slice.
    pub fn line(coords: &[i64]) -> Self {
        assert!(!coords.is_empty(), "a configuration needs at least one particle");
        Self { dim: 1, coords: coords.to_vec() }
    }

    pub fn particles(&self) -> usize {
        self.coords.len() / self.dim
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn coords(&self) -> &[i64] {
        &self.coords
    }

    pub fn particle(&self, i: usize) -> &[i64] {
        &self.coords[i * self.dim..(i + 1) * self.dim]
    }

    /// Sub-configuration of the particles in `set`, in increasing index order.
    pub fn select(&self, set: ParticleSet) -> Result<Self> {
        if set.is_empty() {
            return Err(Error::EmptyIndexSet);
        }
        let mut coords = Vec::with_capacity(set.len() * self.dim);
        for i in set.iter() {
            if i >= self.particles() {
                return Err(Error::DimensionMismatch(format!("particle {i} out of range")));
            }
            coords.extend_from_slice(self.particle(i));
        }
        Ok(Self { dim: self.dim, coords })
    }

    /// `max_{i,j} |x_i - x_j|`, zero for a single particle.
    pub fn diameter(&self) -> i64 {
        let n = self.particles();
        let mut diam = 0;
        for i in 0..n {
            for j in i + 1..n {
                diam = diam.max(particle_distance(self.particle(i), self.particle(j)));
            }
        }
        diam
    }

    pub fn translate(&self, shift: &[i64]) -> Result<Self> {
        if shift.len() != self.coords.len() {
            return Err(Error::DimensionMismatch("shift length differs".into()));
        }
        let coords = self.coords.iter().zip(shift).map(|(a, b)| a + b).collect();
        Ok(Self { dim: self.dim, coords })
    }
}

impl fmt::Display for ParticlePoint {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "(")?;
        for (k, c) in self.coords.iter().enumerate() {
            if k > 0 {
                write!(f, ",")?;
            }
            write!(f, "{c}")?;
        }
        write!(f, ")")
    }
}

/// Max-norm distance between two single-particle positions.
pub(crate) fn particle_distance(a: &[i64], b: &[i64]) -> i64 {
    a.iter().zip(b).map(|(x, y)| (x - y).abs()).max().unwrap_or(0)
}

/// Max-norm distance in `Z^{nd}`.
pub fn max_norm(a: &ParticlePoint, b: &ParticlePoint) -> Result<i64> {
    if a.dim != b.dim || a.coords.len() != b.coords.len() {
        return Err(Error::DimensionMismatch(format!(
            "points have shapes {}x{} and {}x{}",
            a.particles(),
            a.dim,
            b.particles(),
            b.dim
        )));
    }
    Ok(particle_distance(&a.coords, &b.coords))
}

/// A subset of particle indices `{0, .., 63}` as a bit mask.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(transparent)]
pub struct ParticleSet(u64);

impl ParticleSet {
    pub const EMPTY: ParticleSet = ParticleSet(0);

    pub fn from_bits(bits: u64) -> Self {
        Self(bits)
    }

    pub fn bits(self) -> u64 {
        self.0
    }

    pub fn full(n: usize) -> Self {
        assert!(n <= 64);
        if n == 64 {
            Self(u64::MAX)
        } else {
            Self((1u64 << n) - 1)
        }
    }

    pub fn singleton(i: usize) -> Self {
        Self(1 << i)
    }

    pub fn from_indices(indices: &[usize]) -> Self {
        Self(indices.iter().fold(0, |acc, &i| acc | (1 << i)))
    }

    pub fn insert(&mut self, i: usize) {
        self.0 |= 1 << i;
    }

    pub fn contains(self, i: usize) -> bool {
        i < 64 && self.0 & (1 << i) != 0
    }

    pub fn len(self) -> usize {
        self.0.count_ones() as usize
    }

    pub fn is_empty(self) -> bool {
        self.0 == 0
    }

    pub fn complement(self, n: usize) -> Self {
        Self(!self.0 & Self::full(n).0)
    }

    pub fn union(self, other: Self) -> Self {
        Self(self.0 | other.0)
    }

    pub fn iter(self) -> impl Iterator<Item = usize> {
        let mut bits = self.0;
        std::iter::from_fn(move || {
            if bits == 0 {
                return None;
            }
            let i = bits.trailing_zeros() as usize;
            bits &= bits - 1;
            Some(i)
        })
    }

    pub fn to_vec(self) -> Vec<usize> {
        self.iter().collect()
    }
}

impl fmt::Display for ParticleSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{{")?;
        for (k, i) in self.iter().enumerate() {
            if k > 0 {
                write!(f, ",")?;
            }
            write!(f, "{i}")?;
        }
        write!(f, "}}")
    }
}

/// An open axis-aligned box `prod_k (lo_k, hi_k)` in `R^d` with integer corners.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct OpenBox {
    pub lo: Vec<i64>,
    pub hi: Vec<i64>,
}

impl OpenBox {
    pub fn around(center: &[i64], half_side: i64) -> Self {
        Self {
            lo: center.iter().map(|c| c - half_side).collect(),
            hi: center.iter().map(|c| c + half_side).collect(),
        }
    }

    /// Open sets touching only along a face do not intersect.
    pub fn intersects(&self, other: &OpenBox) -> bool {
        (0..self.lo.len()).all(|k| self.lo[k].max(other.lo[k]) < self.hi[k].min(other.hi[k]))
    }

    /// Max-norm distance between the closures.
    pub fn gap(&self, other: &OpenBox) -> i64 {
        (0..self.lo.len())
            .map(|k| (other.lo[k] - self.hi[k]).max(self.lo[k] - other.hi[k]).max(0))
            .max()
            .unwrap_or(0)
    }

    /// The pair `(lo, hi)` of a one-dimensional box.
    pub fn interval(&self) -> (i64, i64) {
        (self.lo[0], self.hi[0])
    }
}

/// Open boxes of half-sides `la`, `lb` around `a`, `b` intersect.
pub(crate) fn boxes_overlap(a: &[i64], la: i64, b: &[i64], lb: i64) -> bool {
    a.iter().zip(b).all(|(x, y)| (x - y).abs() < la + lb)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn max_norm_examples() {
        let a = ParticlePoint::line(&[0, 0]);
        let b = ParticlePoint::line(&[3, -5]);
        assert_eq!(max_norm(&a, &b).unwrap(), 5);
        assert_eq!(max_norm(&a, &a).unwrap(), 0);
        let c = ParticlePoint::line(&[0, 0, 0]);
        let d = ParticlePoint::line(&[7, 7, 7]);
        assert_eq!(max_norm(&c, &d).unwrap(), 7);
    }

    #[test]
    fn max_norm_rejects_shape_mismatch() {
        let a = ParticlePoint::line(&[0, 0]);
        let b = ParticlePoint::line(&[0, 0, 0]);
        assert!(matches!(max_norm(&a, &b), Err(Error::DimensionMismatch(_))));
        let c = ParticlePoint::new(2, vec![0, 0]).unwrap();
        assert!(max_norm(&a, &c).is_err());
    }

    #[test]
    fn point_validation() {
        assert!(ParticlePoint::new(0, vec![1]).is_err());
        assert!(ParticlePoint::new(2, vec![1, 2, 3]).is_err());
        assert!(ParticlePoint::new(1, vec![]).is_err());
        let p = ParticlePoint::new(2, vec![1, 2, 3, 4]).unwrap();
        assert_eq!(p.particles(), 2);
        assert_eq!(p.particle(1), &[3, 4]);
    }

    #[test]
    fn particle_set_ops() {
        let s = ParticleSet::from_indices(&[0, 2]);
        assert_eq!(s.len(), 2);
        assert_eq!(s.complement(4).to_vec(), vec![1, 3]);
        assert_eq!(s.to_string(), "{0,2}");
        assert_eq!(ParticleSet::full(3).bits(), 0b111);
    }

    #[test]
    fn open_boxes_touching_are_disjoint() {
        let a = OpenBox::around(&[0], 2);
        let b = OpenBox::around(&[4], 2);
        assert!(!a.intersects(&b));
        assert_eq!(a.gap(&b), 0);
        let c = OpenBox::around(&[3], 2);
        assert!(a.intersects(&c));
        let far = OpenBox::around(&[100], 20);
        assert_eq!(a.gap(&far), 78);
    }
}
