use faer::Mat;

use super::eigen::{eigendecompose, eigenvalues, EigenDecomposition, DENSE_LIMIT};
use crate::geometry::ParticleSet;
use crate::model::{CubeGrid, HamiltonianContext};
use crate::{Error, Result};

/// All sums `lambda^(1)_{j_1} + .. + lambda^(n)_{j_n}`, sorted, with
/// multiplicity.
pub fn tensor_spectrum(singles: &[Vec<f64>]) -> Result<Vec<f64>> {
    if singles.is_empty() || singles.iter().any(|s| s.is_empty()) {
        return Err(Error::InvalidParameter("tensor spectrum needs nonempty factors".into()));
    }
    let total = singles
        .iter()
        .try_fold(1usize, |acc, s| acc.checked_mul(s.len()))
        .ok_or_else(|| Error::Overflow("tensor spectrum size".into()))?;
    let mut sums = vec![0.0];
    sums.reserve(total);
    for s in singles {
        sums = sums.iter().flat_map(|a| s.iter().map(move |b| a + b)).collect();
    }
    sums.sort_by(f64::total_cmp);
    Ok(sums)
}

/// Particles whose boxes can come within interaction range, as groups that
/// never interact with one another.
pub fn interaction_groups(ctx: &HamiltonianContext) -> Vec<ParticleSet> {
    let cube = ctx.cube();
    let n = cube.particles();
    let r = ctx.domain.refinement as i64;
    let active = ctx.interaction.h != 0.0 && ctx.interaction.phi.iter().any(|&v| v != 0.0);
    let mut groups: Vec<ParticleSet> = (0..n).map(ParticleSet::singleton).collect();
    if !active {
        return groups;
    }
    let reach = r * ctx.interaction.r0();
    let near = |i: usize, j: usize| {
        let (a, b) = (cube.center().particle(i), cube.center().particle(j));
        let slack = r * cube.side(i) - 1 + r * cube.side(j) - 1;
        a.iter().zip(b).all(|(x, y)| (r * (x - y)).abs() - slack <= reach)
    };
    let mut merged = true;
    while merged {
        merged = false;
        'outer: for g in 0..groups.len() {
            for h in g + 1..groups.len() {
                if groups[g].iter().any(|i| groups[h].iter().any(|j| near(i, j))) {
                    groups[g] = groups[g].union(groups[h]);
                    groups.remove(h);
                    merged = true;
                    break 'outer;
                }
            }
        }
    }
    groups
}

/// Eigenvalues of `H` on the context cube, using the product structure of
/// non-interacting particle groups.
pub fn cube_eigenvalues(ctx: &HamiltonianContext) -> Result<Vec<f64>> {
    let groups = interaction_groups(ctx);
    if groups.len() == 1 {
        return eigenvalues(&ctx.assemble()?);
    }
    let dim = ctx.dim().ok_or_else(|| Error::Overflow("cube dimension".into()))?;
    if dim > ctx.max_dim {
        return Err(Error::TooLarge { dim, cap: ctx.max_dim });
    }
    let singles = groups
        .iter()
        .map(|&g| eigenvalues(&ctx.select(g)?.assemble()?))
        .collect::<Result<Vec<_>>>()?;
    tensor_spectrum(&singles)
}

/// Full eigendecomposition of `H` on the context cube. Non-interacting groups
/// are diagonalized separately and combined as tensor products.
pub fn decompose_cube(ctx: &HamiltonianContext) -> Result<EigenDecomposition> {
    let groups = interaction_groups(ctx);
    if groups.len() == 1 {
        return eigendecompose(&ctx.assemble()?);
    }
    let grid = ctx.grid();
    let dim = grid.states().ok_or_else(|| Error::Overflow("cube dimension".into()))?;
    if dim > DENSE_LIMIT.min(ctx.max_dim) {
        return Err(Error::TooLarge { dim, cap: DENSE_LIMIT.min(ctx.max_dim) });
    }
    let factors = groups
        .iter()
        .map(|&g| {
            let sub = ctx.select(g)?;
            Ok((sub.grid(), decompose_cube(&sub)?))
        })
        .collect::<Result<Vec<_>>>()?;
    combine(&grid, &groups, &factors)
}

/// Tensor products of group eigenvectors, re-indexed to the states of `grid`.
fn combine(
    grid: &CubeGrid,
    groups: &[ParticleSet],
    factors: &[(CubeGrid, EigenDecomposition)],
) -> Result<EigenDecomposition> {
    let dim = grid.states().expect("checked by caller");
    let d = grid.dim();
    // Index of each state within every group factor.
    let mut sub_index = vec![vec![0usize; dim]; groups.len()];
    let mut pos = vec![0i64; grid.shape().len()];
    for s in 0..dim {
        grid.position(s, &mut pos);
        for (g, &set) in groups.iter().enumerate() {
            let coords: Vec<i64> = set.iter().flat_map(|i| pos[i * d..(i + 1) * d].iter().copied()).collect();
            sub_index[g][s] = factors[g].0.state_of(&coords).expect("factor grid covers the state");
        }
    }
    // Eigen index tuples in the order of sorted eigenvalue sums.
    let mut tuples: Vec<(f64, Vec<usize>)> = vec![(0.0, Vec::new())];
    for (_, eig) in factors {
        tuples = tuples
            .into_iter()
            .flat_map(|(v, t)| {
                eig.values().iter().enumerate().map(move |(j, &l)| {
                    let mut t = t.clone();
                    t.push(j);
                    (v + l, t)
                })
            })
            .collect();
    }
    tuples.sort_by(|a, b| a.0.total_cmp(&b.0).then_with(|| a.1.cmp(&b.1)));
    let values: Vec<f64> = tuples.iter().map(|t| t.0).collect();
    let vectors = Mat::from_fn(dim, dim, |s, col| {
        tuples[col]
            .1
            .iter()
            .enumerate()
            .map(|(g, &j)| factors[g].1.vectors()[(sub_index[g][s], j)])
            .product()
    });
    EigenDecomposition::from_parts(values, vectors)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::CubeSpec;
    use crate::model::{DisorderSpec, InteractionSpec, ModelSpec};
    use crate::spectral::eigen::eigendecompose;

    #[test]
    fn tensor_examples() {
        let s = tensor_spectrum(&[vec![1.0, 2.0], vec![10.0, 20.0]]).unwrap();
        assert_eq!(s, vec![11.0, 12.0, 21.0, 22.0]);
        assert_eq!(tensor_spectrum(&[vec![3.0, 1.0]]).unwrap(), vec![1.0, 3.0]);
        let s = tensor_spectrum(&[vec![1.0, 2.0], vec![1.0, 2.0]]).unwrap();
        assert_eq!(s, vec![2.0, 3.0, 3.0, 4.0]);
        assert!(tensor_spectrum(&[]).is_err());
    }

    #[test]
    fn groups_follow_range() {
        let model = ModelSpec::new(DisorderSpec::Uniform { low: 0.0, high: 1.0 }, InteractionSpec::bump(1, 0.2).unwrap());
        let ctx = model.realize(&CubeSpec::line(&[0, 3, 30], 2).unwrap(), 1, 0).unwrap();
        let g = interaction_groups(&ctx);
        assert_eq!(g, vec![ParticleSet::from_indices(&[0, 1]), ParticleSet::singleton(2)]);
        assert_eq!(interaction_groups(&ctx.with_coupling(0.0)).len(), 3);
    }

    #[test]
    fn product_decomposition_matches_dense() {
        let model = ModelSpec::new(DisorderSpec::Uniform { low: 0.0, high: 4.0 }, InteractionSpec::bump(1, 0.7).unwrap());
        let cube = CubeSpec::line(&[0, 20, 1], 3).unwrap();
        let ctx = model.realize(&cube, 4, 2).unwrap();
        let h = ctx.assemble().unwrap();
        let dense = eigendecompose(&h).unwrap();
        let prod = decompose_cube(&ctx).unwrap();
        for (a, b) in prod.values().iter().zip(dense.values()) {
            assert!((a - b).abs() < 1e-10);
        }
        assert!(prod.max_residual(&h) < 1e-10);
        assert!(prod.orthogonality_defect() < 1e-10);
        let vals = cube_eigenvalues(&ctx).unwrap();
        for (a, b) in vals.iter().zip(dense.values()) {
            assert!((a - b).abs() < 1e-10);
        }
    }
}
