use serde::{Deserialize, Serialize};

use super::cube::CubeSpec;
use super::interactivity::{classify_interactivity, Interactivity};
use super::point::max_norm;
use super::separability::is_separable_pair;
use crate::Result;

/// Beyond this many candidates the maximum compatible subset is found greedily.
pub const EXACT_SEARCH_LIMIT: usize = 12;

/// A cube together with its singularity flag.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct FlaggedCube {
    pub cube: CubeSpec,
    pub singular: bool,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct SingularCounts {
    /// Singular cubes with centers pairwise more than `7NL` apart.
    pub m: usize,
    /// Pairwise separable singular cubes.
    pub m_sep: usize,
    /// As `m`, restricted to PI cubes.
    pub m_pi: usize,
    /// As `m_sep`, restricted to PI cubes.
    pub m_pi_sep: usize,
    /// As `m`, restricted to FI cubes.
    pub m_fi: usize,
    /// All maxima were found by exhaustive search.
    pub exact: bool,
}

/// Size of the largest pairwise compatible subset, and whether it is exact.
///
/// Greedy search starts from every vertex, so a compatible pair is always
/// found when one exists.
fn max_compatible(compat: &[Vec<bool>]) -> (usize, bool) {
    let k = compat.len();
    if k <= EXACT_SEARCH_LIMIT {
        let mut best = 0;
        for mask in 0u32..(1 << k) {
            let size = mask.count_ones() as usize;
            if size <= best {
                continue;
            }
            let ok = (0..k).all(|i| {
                mask & (1 << i) == 0 || (i + 1..k).all(|j| mask & (1 << j) == 0 || compat[i][j])
            });
            if ok {
                best = size;
            }
        }
        return (best, true);
    }
    let mut best = 0;
    for start in 0..k {
        let mut chosen = vec![start];
        for v in 0..k {
            if v != start && chosen.iter().all(|&u| compat[u][v]) {
                chosen.push(v);
            }
        }
        best = best.max(chosen.len());
    }
    (best, false)
}

/// Counting functions `M`, `M^sep`, `M_PI`, `M_PI^sep`, `M_FI` over the
/// singular members of `cubes`.
pub fn count_singular(cubes: &[FlaggedCube], total_particles: usize, r0: i64) -> Result<SingularCounts> {
    let singular: Vec<&CubeSpec> = cubes.iter().filter(|c| c.singular).map(|c| &c.cube).collect();
    let k = singular.len();
    let mut far = vec![vec![false; k]; k];
    let mut sep = vec![vec![false; k]; k];
    for i in 0..k {
        for j in i + 1..k {
            let gate = 7 * total_particles as i64 * singular[i].half_side();
            far[i][j] = max_norm(singular[i].center(), singular[j].center())? > gate;
            sep[i][j] = is_separable_pair(singular[i], singular[j], total_particles)?.separable;
            far[j][i] = far[i][j];
            sep[j][i] = sep[i][j];
        }
    }
    let pi: Vec<usize> = (0..k)
        .filter(|&i| classify_interactivity(singular[i], r0) == Interactivity::Partial)
        .collect();
    let fi: Vec<usize> = (0..k).filter(|i| !pi.contains(i)).collect();
    let restrict = |m: &[Vec<bool>], idx: &[usize]| -> Vec<Vec<bool>> {
        idx.iter().map(|&i| idx.iter().map(|&j| m[i][j]).collect()).collect()
    };

    let (m, e1) = max_compatible(&far);
    let (m_sep, e2) = max_compatible(&sep);
    let (m_pi, e3) = max_compatible(&restrict(&far, &pi));
    let (m_pi_sep, e4) = max_compatible(&restrict(&sep, &pi));
    let (m_fi, e5) = max_compatible(&restrict(&far, &fi));
    Ok(SingularCounts { m, m_sep, m_pi, m_pi_sep, m_fi, exact: e1 && e2 && e3 && e4 && e5 })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn flagged(c: &[i64], l: i64, singular: bool) -> FlaggedCube {
        FlaggedCube { cube: CubeSpec::line(c, l).unwrap(), singular }
    }

    #[test]
    fn empty_list() {
        let c = count_singular(&[], 2, 0).unwrap();
        assert_eq!((c.m, c.m_sep, c.m_pi, c.m_fi), (0, 0, 0, 0));
        assert!(c.exact);
    }

    #[test]
    fn two_separable_fi_cubes() {
        let cubes = [flagged(&[0, 0], 2, true), flagged(&[100, 100], 2, true), flagged(&[50, 50], 2, false)];
        let c = count_singular(&cubes, 2, 0).unwrap();
        assert_eq!((c.m, c.m_sep, c.m_fi, c.m_pi), (2, 2, 2, 0));
    }

    #[test]
    fn greedy_beyond_limit() {
        let cubes: Vec<_> = (0..14).map(|i| flagged(&[100 * i], 2, true)).collect();
        let c = count_singular(&cubes, 1, 0).unwrap();
        assert!(!c.exact);
        assert_eq!(c.m_sep, 14);
    }

    #[test]
    fn exhaustive_beats_greedy_order() {
        // Vertex 0 is compatible with 1 only; 1,2,3 are mutually compatible.
        let t = true;
        let f = false;
        let compat = vec![
            vec![f, t, f, f],
            vec![t, f, t, t],
            vec![f, t, f, t],
            vec![f, t, t, f],
        ];
        assert_eq!(max_compatible(&compat), (3, true));
    }
}
