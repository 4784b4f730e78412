use serde::{Deserialize, Serialize};

use super::cluster::decompose_clusters;
use super::cube::CubeSpec;
use super::point::{boxes_overlap, max_norm, ParticlePoint, ParticleSet};
use crate::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum WitnessSide {
    /// The first cube is J-separable from the second.
    First,
    /// The second cube is J-separable from the first.
    Second,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct SeparabilityResult {
    pub separable: bool,
    pub distance: i64,
    /// Set whenever one cube is J-separable from the other, even if the
    /// distance gate fails.
    pub witness: Option<(WitnessSide, ParticleSet)>,
}

fn check_pair(a: &CubeSpec, b: &CubeSpec) -> Result<()> {
    if a.particles() != b.particles() || a.dim() != b.dim() {
        return Err(Error::DimensionMismatch("cubes differ in particle count or dimension".into()));
    }
    if a.half_side() != b.half_side() {
        return Err(Error::DimensionMismatch(format!(
            "cubes have half-sides {} and {}",
            a.half_side(),
            b.half_side()
        )));
    }
    Ok(())
}

/// `(U_{j in J} C(a_j)) n (U_{j notin J} C(a_j) u U_j C(b_j)) = {}`.
pub fn is_j_separable(a: &CubeSpec, b: &CubeSpec, set: ParticleSet) -> Result<bool> {
    check_pair(a, b)?;
    let n = a.particles();
    if set.is_empty() {
        return Err(Error::EmptyIndexSet);
    }
    if set.iter().any(|j| j >= n) {
        return Err(Error::DimensionMismatch(format!("index set {set} exceeds {n} particles")));
    }
    for j in set.iter() {
        let (cj, lj) = (a.center().particle(j), a.side(j));
        for i in 0..n {
            if !set.contains(i) && boxes_overlap(cj, lj, a.center().particle(i), a.side(i)) {
                return Ok(false);
            }
            if boxes_overlap(cj, lj, b.center().particle(i), b.side(i)) {
                return Ok(false);
            }
        }
    }
    Ok(true)
}

/// Smallest-index J for which `first` is J-separable from `second`, if any.
///
/// The J-boxes must avoid every other box of both cubes, so J is a union of
/// connected components of the overlap graph on all `2n` boxes that contain
/// no box of `second`; any single such component is a witness.
fn separating_component(first: &CubeSpec, second: &CubeSpec) -> Option<ParticleSet> {
    let n = first.particles();
    let m = 2 * n;
    let boxes = |k: usize| {
        if k < n {
            (first.center().particle(k), first.side(k))
        } else {
            (second.center().particle(k - n), second.side(k - n))
        }
    };
    // Bit mask of the component of each box, grown to a fixed point.
    let mut adj = [0u128; 128];
    for i in 0..m {
        adj[i] |= 1 << i;
        let (ci, li) = boxes(i);
        for j in i + 1..m {
            let (cj, lj) = boxes(j);
            if boxes_overlap(ci, li, cj, lj) {
                adj[i] |= 1 << j;
                adj[j] |= 1 << i;
            }
        }
    }
    let low = (1u128 << n) - 1;
    let mut seen = 0u128;
    for start in 0..n {
        if seen & (1 << start) != 0 {
            continue;
        }
        let mut comp = 1u128 << start;
        let mut frontier = comp;
        while frontier != 0 {
            let k = frontier.trailing_zeros() as usize;
            frontier &= frontier - 1;
            let fresh = adj[k] & !comp;
            comp |= fresh;
            frontier |= fresh;
        }
        seen |= comp;
        if comp & !low == 0 {
            return Some(ParticleSet::from_bits(comp as u64));
        }
    }
    None
}

/// Separability of a pair: `|x - y| > 7NL` and one cube J-separable from the
/// other. The first cube is tried first.
pub fn is_separable_pair(a: &CubeSpec, b: &CubeSpec, total_particles: usize) -> Result<SeparabilityResult> {
    check_pair(a, b)?;
    let distance = max_norm(a.center(), b.center())?;
    let gate = 7 * total_particles as i64 * a.half_side();
    let witness = separating_component(a, b)
        .map(|j| (WitnessSide::First, j))
        .or_else(|| separating_component(b, a).map(|j| (WitnessSide::Second, j)));
    Ok(SeparabilityResult { separable: distance > gate && witness.is_some(), distance, witness })
}

/// Covering cubes `C_{2nL}(x^(l))` around `x`.
///
/// The centers are `x^(l) = (x_{l(1)}, .., x_{l(n)})` for every map
/// `l : {1..n} -> {distinct positions of x}`, so there are at most `n^n`
/// of them. If some L-cluster of `y` misses `Pi C_L(x)` then `C_L(y)` is
/// J-separable from `C_L(x)`; otherwise every `y_j` lies within `2nL` of some
/// `x_i`, which places `y` inside one of the returned cubes.
pub fn separability_covering(x: &ParticlePoint, half_side: i64) -> Result<Vec<CubeSpec>> {
    if half_side <= 0 {
        return Err(Error::InvalidParameter("half-side must be positive".into()));
    }
    let n = x.particles();
    let d = x.dim();
    let mut positions: Vec<&[i64]> = Vec::new();
    for i in 0..n {
        if !positions.contains(&x.particle(i)) {
            positions.push(x.particle(i));
        }
    }
    let k = positions.len();
    let count = k.checked_pow(n as u32).ok_or_else(|| Error::Overflow("covering size".into()))?;
    let radius = 2 * n as i64 * half_side;
    let mut cubes = Vec::with_capacity(count);
    let mut digits = vec![0usize; n];
    for _ in 0..count {
        let mut coords = Vec::with_capacity(n * d);
        for &digit in &digits {
            coords.extend_from_slice(positions[digit]);
        }
        cubes.push(CubeSpec::new(ParticlePoint::new(d, coords)?, radius)?);
        for digit in digits.iter_mut().rev() {
            *digit += 1;
            if *digit < k {
                break;
            }
            *digit = 0;
        }
    }
    Ok(cubes)
}

/// `max_{i,j} |y_i - y_j| + 5NL`: beyond this distance from `y`, every cube is
/// J-separable from `C_L(y)`.
pub fn min_separation_radius(y: &ParticlePoint, half_side: i64, total_particles: usize) -> i64 {
    y.diameter() + 5 * total_particles as i64 * half_side
}

/// The J used in the argument for [`min_separation_radius`]: the L-cluster of
/// `x` containing the particle farthest from its counterpart in `y`.
pub fn farthest_cluster(x: &ParticlePoint, y: &ParticlePoint, half_side: i64) -> Result<ParticleSet> {
    max_norm(x, y)?;
    let far = (0..x.particles())
        .max_by_key(|&i| {
            let d = x.particle(i).iter().zip(y.particle(i)).map(|(a, b)| (a - b).abs()).max();
            (d, std::cmp::Reverse(i))
        })
        .expect("nonempty configuration");
    Ok(decompose_clusters(x, half_side).block_of(far))
}
