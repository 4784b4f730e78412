use serde::{Deserialize, Serialize};

use super::point::{boxes_overlap, ParticlePoint, ParticleSet};

/// Connected components of `C_L(y_1) u ... u C_L(y_n)`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ClusterPartition {
    /// Maximal L-clusters, ordered by their smallest particle index.
    pub blocks: Vec<ParticleSet>,
    pub radius: i64,
}

impl ClusterPartition {
    pub fn block_of(&self, particle: usize) -> ParticleSet {
        *self
            .blocks
            .iter()
            .find(|b| b.contains(particle))
            .expect("partition covers every particle")
    }
}

/// Minimal union-find over at most 64 items.
pub(crate) struct Components {
    parent: Vec<usize>,
}

impl Components {
    pub(crate) fn new(n: usize) -> Self {
        Self { parent: (0..n).collect() }
    }

    pub(crate) fn find(&mut self, mut i: usize) -> usize {
        while self.parent[i] != i {
            self.parent[i] = self.parent[self.parent[i]];
            i = self.parent[i];
        }
        i
    }

    pub(crate) fn union(&mut self, a: usize, b: usize) {
        let (ra, rb) = (self.find(a), self.find(b));
        if ra != rb {
            let (lo, hi) = if ra < rb { (ra, rb) } else { (rb, ra) };
            self.parent[hi] = lo;
        }
    }

    /// Components as bit masks, ordered by smallest member.
    pub(crate) fn sets(&mut self) -> Vec<ParticleSet> {
        let n = self.parent.len();
        let mut by_root: Vec<ParticleSet> = vec![ParticleSet::EMPTY; n];
        for i in 0..n {
            let r = self.find(i);
            by_root[r].insert(i);
        }
        by_root.into_iter().filter(|s| !s.is_empty()).collect()
    }
}

/// Splits `y` into maximal L-clusters: two particles are linked when their
/// open cubes of half-side `radius` intersect.
pub fn decompose_clusters(y: &ParticlePoint, radius: i64) -> ClusterPartition {
    let n = y.particles();
    let mut comps = Components::new(n);
    for i in 0..n {
        for j in i + 1..n {
            if boxes_overlap(y.particle(i), radius, y.particle(j), radius) {
                comps.union(i, j);
            }
        }
    }
    ClusterPartition { blocks: comps.sets(), radius }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn cluster_examples() {
        let p = decompose_clusters(&ParticlePoint::line(&[0, 3, 100]), 2);
        assert_eq!(p.blocks, vec![ParticleSet::from_indices(&[0, 1]), ParticleSet::singleton(2)]);

        let p = decompose_clusters(&ParticlePoint::line(&[0]), 17);
        assert_eq!(p.blocks, vec![ParticleSet::singleton(0)]);

        let p = decompose_clusters(&ParticlePoint::line(&[0, 10, 20, 30]), 6);
        assert_eq!(p.blocks, vec![ParticleSet::full(4)]);
    }

    #[test]
    fn touching_intervals_split() {
        // (-2,2) and (2,6) share only an endpoint.
        let p = decompose_clusters(&ParticlePoint::line(&[0, 4]), 2);
        assert_eq!(p.blocks.len(), 2);
    }

    #[test]
    fn block_lookup() {
        let p = decompose_clusters(&ParticlePoint::line(&[50, 0, 51]), 1);
        assert_eq!(p.block_of(2), ParticleSet::from_indices(&[0, 2]));
    }
}
