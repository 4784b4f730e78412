use serde::{Deserialize, Serialize};

use super::cluster::Components;
use super::cube::CubeSpec;
use super::point::{particle_distance, ParticleSet};
use crate::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Interactivity {
    Full,
    Partial,
}

/// FI iff `diam Pi u <= n (2L + r0)`; single-particle cubes are FI.
pub fn classify_interactivity(cube: &CubeSpec, r0: i64) -> Interactivity {
    let n = cube.particles() as i64;
    if cube.center().diameter() <= n * (2 * cube.half_side() + r0) {
        Interactivity::Full
    } else {
        Interactivity::Partial
    }
}

/// `max(0, inf distance)` between the closures of `Pi_J C` and `Pi_{J^c} C`.
pub fn projection_gap(cube: &CubeSpec, set: ParticleSet) -> i64 {
    let n = cube.particles();
    let other = set.complement(n);
    let mut gap = i64::MAX;
    for i in set.iter() {
        for j in other.iter() {
            gap = gap.min(cube.particle_box(i).gap(&cube.particle_box(j)));
        }
    }
    gap
}

/// A proper subset J with `dist(Pi_J C, Pi_{J^c} C) > r0`.
///
/// Particles are linked when `|u_i - u_j| <= 2L + r0`; a connected linked set
/// spans at most `(n-1)(2L + r0)`, so a PI cube always has several
/// components. The component of the first particle is returned.
pub fn pi_partition(cube: &CubeSpec, r0: i64) -> Result<ParticleSet> {
    if r0 < 0 {
        return Err(Error::InvalidParameter("interaction range must be nonnegative".into()));
    }
    let n = cube.particles();
    let c = cube.center();
    let mut comps = Components::new(n);
    for i in 0..n {
        for j in i + 1..n {
            let reach = cube.side(i) + cube.side(j) + r0;
            if particle_distance(c.particle(i), c.particle(j)) <= reach {
                comps.union(i, j);
            }
        }
    }
    let blocks = comps.sets();
    if blocks.len() < 2 {
        return Err(Error::FullyInteractive);
    }
    let set = blocks[0];
    let gap = projection_gap(cube, set);
    if gap <= r0 {
        return Err(Error::Precondition(format!("partition {set} has gap {gap} <= r0 = {r0}")));
    }
    Ok(set)
}

/// `Pi C(a) n Pi C(b) = {}`.
pub fn projections_disjoint(a: &CubeSpec, b: &CubeSpec) -> bool {
    a.projection()
        .iter()
        .all(|p| b.projection().iter().all(|q| !p.intersects(q)))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cube(c: &[i64], l: i64) -> CubeSpec {
        CubeSpec::line(c, l).unwrap()
    }

    #[test]
    fn classification_examples() {
        assert_eq!(classify_interactivity(&cube(&[0, 15], 10), 1), Interactivity::Full);
        assert_eq!(classify_interactivity(&cube(&[0, 100], 10), 1), Interactivity::Partial);
        assert_eq!(classify_interactivity(&cube(&[0, 10, 29], 5), 0), Interactivity::Full);
        assert_eq!(classify_interactivity(&cube(&[1000], 1), 0), Interactivity::Full);
    }

    #[test]
    fn partition_examples() {
        let c = cube(&[0, 100], 10);
        assert_eq!(pi_partition(&c, 1).unwrap(), ParticleSet::singleton(0));
        assert_eq!(projection_gap(&c, ParticleSet::singleton(0)), 80);

        assert_eq!(pi_partition(&cube(&[0, 1, 50], 2), 0).unwrap(), ParticleSet::from_indices(&[0, 1]));
        assert_eq!(pi_partition(&cube(&[0, 15], 10), 1).unwrap_err(), Error::FullyInteractive);
    }

    #[test]
    fn disjoint_examples() {
        assert!(projections_disjoint(&cube(&[0, 0], 5), &cube(&[100, 100], 5)));
        assert!(!projections_disjoint(&cube(&[0, 0], 5), &cube(&[100, 0], 5)));
    }
}
