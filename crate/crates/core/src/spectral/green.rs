use faer::{Mat, MatRef};
use serde::{Deserialize, Serialize};

use super::eigen::{check_nonresonant, eigendecompose_dense, EigenDecomposition};
use super::tensor::decompose_cube;
use crate::geometry::CubeSpec;
use crate::model::{CubeGrid, HamiltonianContext, HamiltonianMatrix};
use crate::{Error, Result};

/// Resolvent condition number beyond which a probe is flagged.
pub const ILL_CONDITIONED: f64 = 1e12;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct GreenProbe {
    pub energy: f64,
    pub dist_to_spectrum: f64,
    pub block_norm: f64,
    /// `||G(E)|| = 1 / dist`.
    pub resolvent_norm: f64,
    pub ill_conditioned: bool,
}

/// A set of grid points defined relative to a cube.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Region {
    /// The open cube itself.
    Cube(CubeSpec),
    /// `C_{floor(L/3)}` around the center.
    Interior(CubeSpec),
    /// `C_L \ C_{L-2}`.
    Shell(CubeSpec),
    /// Complement of the open cube.
    Outside(CubeSpec),
}

fn scaled_distance(cube: &CubeSpec, coords: &[i64], r: i64) -> i64 {
    coords
        .iter()
        .zip(cube.center().coords())
        .map(|(p, u)| (p - r * u).abs())
        .max()
        .unwrap_or(0)
}

impl Region {
    pub fn contains(&self, coords: &[i64], r: i64) -> Result<bool> {
        Ok(match self {
            Region::Cube(c) => scaled_distance(c, coords, r) < r * c.half_side(),
            Region::Outside(c) => scaled_distance(c, coords, r) >= r * c.half_side(),
            Region::Interior(c) => c.regions()?.in_interior(scaled_distance(c, coords, r), r),
            Region::Shell(c) => c.regions()?.in_shell(scaled_distance(c, coords, r), r),
        })
    }

    /// Grid states of `grid` inside the region, in increasing order.
    pub fn states(&self, grid: &CubeGrid) -> Result<Vec<usize>> {
        let dim = grid.states().ok_or_else(|| Error::Overflow("grid size".into()))?;
        let mut pos = vec![0i64; grid.shape().len()];
        let mut out = Vec::new();
        for s in 0..dim {
            grid.position(s, &mut pos);
            if self.contains(&pos, grid.refinement())? {
                out.push(s);
            }
        }
        Ok(out)
    }
}

/// `G(E)[rows, cols] = V_rows diag(1/(lambda - E)) V_cols^T`.
pub fn green_block(eig: &EigenDecomposition, e: f64, rows: &[usize], cols: &[usize]) -> Result<Mat<f64>> {
    check_nonresonant(eig.values(), e)?;
    let v = eig.vectors();
    let k = eig.dim();
    let left = Mat::from_fn(rows.len(), k, |i, j| v[(rows[i], j)] / (eig.values()[j] - e));
    let right = Mat::from_fn(cols.len(), k, |i, j| v[(cols[i], j)]);
    Ok(&left * right.transpose())
}

pub fn resolvent(eig: &EigenDecomposition, e: f64) -> Result<Mat<f64>> {
    let all: Vec<usize> = (0..eig.dim()).collect();
    green_block(eig, e, &all, &all)
}

/// Largest singular value.
pub fn spectral_norm(m: MatRef<'_, f64>) -> Result<f64> {
    if m.nrows() == 0 || m.ncols() == 0 {
        return Ok(0.0);
    }
    let s = m.singular_values().map_err(|e| Error::Eigensolver(format!("{e:?}")))?;
    Ok(s.into_iter().fold(0.0, f64::max))
}

/// `|| 1_out G(E) 1_int ||` with the distance to the spectrum.
pub fn green_block_norm(eig: &EigenDecomposition, e: f64, out: &[usize], int: &[usize]) -> Result<GreenProbe> {
    let dist = check_nonresonant(eig.values(), e)?;
    let block = green_block(eig, e, out, int)?;
    let norm = eig.norm().max(1.0);
    Ok(GreenProbe {
        energy: e,
        dist_to_spectrum: dist,
        block_norm: spectral_norm(block.as_ref())?,
        resolvent_norm: 1.0 / dist,
        ill_conditioned: norm / dist > ILL_CONDITIONED,
    })
}

/// Shell-to-interior block norm of a cube's own resolvent. Operators on a
/// single axis use [`tridiagonal_green_block`], which keeps exponentially
/// small entries to relative precision.
pub fn cube_block_norm(ctx: &HamiltonianContext, eig: &EigenDecomposition, e: f64) -> Result<GreenProbe> {
    let grid = ctx.grid();
    let out = Region::Shell(ctx.cube().clone()).states(&grid)?;
    let int = Region::Interior(ctx.cube().clone()).states(&grid)?;
    if grid.shape().len() == 1 {
        let dist = check_nonresonant(eig.values(), e)?;
        if let Some(block) = tridiagonal_green_block(&ctx.assemble()?, e, &out, &int) {
            return Ok(GreenProbe {
                energy: e,
                dist_to_spectrum: dist,
                block_norm: spectral_norm(block.as_ref())?,
                resolvent_norm: 1.0 / dist,
                ill_conditioned: eig.norm().max(1.0) / dist > ILL_CONDITIONED,
            });
        }
    }
    green_block_norm(eig, e, &out, &int)
}

/// `(H - E)^{-1}[rows, cols]` for a one-axis operator from the two Schur
/// complement recursions `a_i = d_i - t^2 / a_{i-1}`, `b_i = d_i - t^2 / b_{i+1}`:
/// `G(y, y) = 1 / (a_y + b_y - d_y)` and each step away from the diagonal
/// multiplies by `t / b_k` (downwards) or `t / a_k` (upwards). `None` if a
/// pivot vanishes or the operator has more than one axis.
pub fn tridiagonal_green_block(h: &HamiltonianMatrix, e: f64, rows: &[usize], cols: &[usize]) -> Option<Mat<f64>> {
    if h.shape().len() != 1 {
        return None;
    }
    let n = h.dim();
    let t = h.hop();
    let d: Vec<f64> = h.diagonal().iter().map(|x| x - e).collect();
    let mut a = vec![0.0; n];
    let mut b = vec![0.0; n];
    a[0] = d[0];
    for i in 1..n {
        a[i] = d[i] - t * t / a[i - 1];
    }
    b[n - 1] = d[n - 1];
    for i in (0..n - 1).rev() {
        b[i] = d[i] - t * t / b[i + 1];
    }
    if a.iter().chain(&b).any(|x| *x == 0.0 || !x.is_finite()) {
        return None;
    }
    let diag: Vec<f64> = (0..n).map(|y| 1.0 / (a[y] + b[y] - d[y])).collect();
    if diag.iter().any(|x| !x.is_finite()) {
        return None;
    }
    Some(Mat::from_fn(rows.len(), cols.len(), |i, j| {
        let (x, y) = (rows[i], cols[j]);
        let mut g = diag[y];
        if x > y {
            for k in y + 1..=x {
                g *= t / b[k];
            }
        } else {
            for k in x..y {
                g *= t / a[k];
            }
        }
        g
    }))
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct GriReport {
    pub energy: f64,
    /// `||1_B G_big 1_A||`.
    pub direct: f64,
    /// `||1_B G_big 1_out||`.
    pub outer: f64,
    /// `||1_out G_inner 1_A||`.
    pub inner: f64,
    pub ratio: f64,
}

/// Measures the geometric resolvent inequality: the ratio of
/// `||1_B G_big 1_A||` to `||1_B G_big 1_out|| ||1_out G_inner 1_A||`, where
/// `out` is the shell of `inner`.
pub fn gri_check(big: &HamiltonianContext, inner: &CubeSpec, e: f64, a: &Region, b: &Region) -> Result<GriReport> {
    let inner_ctx = big.subcontext(inner)?;
    let grid = big.grid();
    let r = grid.refinement();
    let a_states = a.states(&grid)?;
    let b_states = b.states(&grid)?;
    let interior = Region::Interior(inner.clone());
    let inside = Region::Cube(inner.clone());
    let mut pos = vec![0i64; grid.shape().len()];
    for &s in &a_states {
        grid.position(s, &mut pos);
        if !interior.contains(&pos, r)? {
            return Err(Error::Precondition("region A leaves the interior of the inner cube".into()));
        }
    }
    for &s in &b_states {
        grid.position(s, &mut pos);
        if inside.contains(&pos, r)? {
            return Err(Error::Precondition("region B meets the inner cube".into()));
        }
    }
    if a_states.is_empty() || b_states.is_empty() {
        return Err(Error::Precondition("regions A and B must be nonempty".into()));
    }
    let shell = Region::Shell(inner.clone());
    let out_big = shell.states(&grid)?;
    let inner_grid = inner_ctx.grid();
    let to_inner = |states: &[usize]| -> Vec<usize> {
        states
            .iter()
            .map(|&s| inner_grid.state_of(&grid.positions(s)).expect("state lies in the inner cube"))
            .collect()
    };
    let out_inner = to_inner(&out_big);
    let a_inner = to_inner(&a_states);

    let eig_big = decompose_cube(big)?;
    let eig_inner = decompose_cube(&inner_ctx)?;
    let direct = green_block_norm(&eig_big, e, &b_states, &a_states)?.block_norm;
    let outer = green_block_norm(&eig_big, e, &b_states, &out_big)?.block_norm;
    let inner_norm = green_block_norm(&eig_inner, e, &out_inner, &a_inner)?.block_norm;
    Ok(GriReport { energy: e, direct, outer, inner: inner_norm, ratio: direct / (outer * inner_norm) })
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct EdiReport {
    pub energy: f64,
    /// `||1_{C_1(x)} psi||`.
    pub local: f64,
    /// `||1_out psi||`.
    pub shell: f64,
    /// `||1_out G_inner(lambda) 1_int||`.
    pub block: f64,
    pub ratio: f64,
}

/// Measures the eigenfunction decay inequality for `psi`, a function on the
/// grid of `big`, at the inner cube centred at `x`.
pub fn edi_check(big: &HamiltonianContext, psi: &[f64], lambda: f64, inner: &CubeSpec) -> Result<EdiReport> {
    let grid = big.grid();
    if Some(psi.len()) != grid.states() {
        return Err(Error::DimensionMismatch("eigenfunction length differs from the grid".into()));
    }
    let inner_ctx = big.subcontext(inner)?;
    let eig_inner = decompose_cube(&inner_ctx)?;
    let probe = cube_block_norm(&inner_ctx, &eig_inner, lambda)?;
    let unit = Region::Cube(inner.with_half_side(1)?);
    let norm_on = |states: Vec<usize>| states.iter().map(|&s| psi[s] * psi[s]).sum::<f64>().sqrt();
    let local = norm_on(unit.states(&grid)?);
    let shell = norm_on(Region::Shell(inner.clone()).states(&grid)?);
    let ratio = if local == 0.0 { 0.0 } else { local / (probe.block_norm * shell) };
    Ok(EdiReport { energy: lambda, local, shell, block: probe.block_norm, ratio })
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ResidualReport {
    pub residual: f64,
    pub g0_norm: f64,
    pub gh_norm: f64,
    /// `1e-9 ||G_0|| ||G_h|| max(1, |h| ||U||)`.
    pub bound: f64,
}

impl ResidualReport {
    pub fn holds(&self) -> bool {
        self.residual < self.bound
    }
}

/// `|| G_0 - G_h - h G_0 U G_h ||` for `H_h = H_0 + h diag(U)`.
pub fn resolvent_perturbation_residual(h0: MatRef<'_, f64>, u: &[f64], h: f64, e: f64) -> Result<ResidualReport> {
    let n = h0.nrows();
    if u.len() != n || h0.ncols() != n {
        return Err(Error::DimensionMismatch("interaction diagonal differs from the operator size".into()));
    }
    let mut hh = h0.to_owned();
    for i in 0..n {
        hh[(i, i)] += h * u[i];
    }
    let g0 = resolvent(&eigendecompose_dense(h0)?, e)?;
    let gh = resolvent(&eigendecompose_dense(hh.as_ref())?, e)?;
    let ugh = Mat::from_fn(n, n, |i, j| u[i] * gh[(i, j)]);
    let mut r = &g0 * &ugh;
    for i in 0..n {
        for j in 0..n {
            r[(i, j)] = g0[(i, j)] - gh[(i, j)] - h * r[(i, j)];
        }
    }
    let g0_norm = spectral_norm(g0.as_ref())?;
    let gh_norm = spectral_norm(gh.as_ref())?;
    let u_norm = u.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    Ok(ResidualReport {
        residual: spectral_norm(r.as_ref())?,
        g0_norm,
        gh_norm,
        bound: 1e-9 * g0_norm * gh_norm * (h.abs() * u_norm).max(1.0),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spectral::eigen::eigendecompose_dense;

    fn diag(values: &[f64]) -> Mat<f64> {
        Mat::from_fn(values.len(), values.len(), |i, j| if i == j { values[i] } else { 0.0 })
    }

    #[test]
    fn diagonal_green_function() {
        let eig = eigendecompose_dense(diag(&[1.0, 3.0]).as_ref()).unwrap();
        let p = green_block_norm(&eig, 0.0, &[0], &[1]).unwrap();
        assert_eq!(p.block_norm, 0.0);
        let p = green_block_norm(&eig, 0.5, &[0, 1], &[0, 1]).unwrap();
        assert!((p.block_norm - 2.0).abs() < 1e-14);
        assert!((p.block_norm * p.dist_to_spectrum - 1.0).abs() < 1e-12);
        assert!(matches!(green_block_norm(&eig, 3.0, &[0], &[0]), Err(Error::Resonant { .. })));
    }

    #[test]
    fn scalar_second_resolvent() {
        let r = resolvent_perturbation_residual(diag(&[2.0]).as_ref(), &[1.0], 0.5, 0.0).unwrap();
        assert!(r.residual < 1e-16);
        assert!((r.g0_norm - 0.5).abs() < 1e-15);
        assert!((r.gh_norm - 0.4).abs() < 1e-15);
        let r = resolvent_perturbation_residual(diag(&[2.0, 5.0]).as_ref(), &[1.0, 0.0], 0.0, 1.0).unwrap();
        assert_eq!(r.residual, 0.0);
    }

    #[test]
    fn tridiagonal_block_matches_dense() {
        let diag: Vec<f64> = (0..31).map(|i| ((i * 7919) % 13) as f64 * 0.9).collect();
        let h = HamiltonianMatrix::from_parts(vec![31], diag, 1.0).unwrap();
        let eig = eigendecompose_dense(h.to_dense().as_ref()).unwrap();
        let rows: Vec<usize> = (0..31).collect();
        let e = 2.345;
        let dense = green_block(&eig, e, &rows, &rows).unwrap();
        let tri = tridiagonal_green_block(&h, e, &rows, &rows).unwrap();
        for i in 0..31 {
            for j in 0..31 {
                assert!((dense[(i, j)] - tri[(i, j)]).abs() < 1e-10 * (1.0 + dense[(i, j)].abs()));
            }
        }
    }

    #[test]
    fn tridiagonal_entries_below_machine_precision() {
        // Constant diagonal far above the band: G(x, y) = q^{|x-y|} / (d sqrt(1 - 4/d^2)) with
        // q = (d - sqrt(d^2 - 4)) / 2 on the infinite line; the finite chain agrees away from
        // the ends to relative precision.
        let n = 201;
        let d = 30.0;
        let h = HamiltonianMatrix::from_parts(vec![n], vec![d; n], 1.0).unwrap();
        let g = tridiagonal_green_block(&h, 0.0, &[150], &[100]).unwrap()[(0, 0)];
        let q = (d - (d * d - 4.0f64).sqrt()) / 2.0;
        let exact = q.powi(50) / (d * d - 4.0f64).sqrt();
        assert!(exact < 1e-70);
        assert!((g / exact - 1.0).abs() < 1e-10);
    }
}
