use faer::{Mat, MatRef, Side};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::model::HamiltonianMatrix;
use crate::{Error, Result};

/// Largest matrix handed to the dense solver.
pub const DENSE_LIMIT: usize = 4096;

/// Relative distance below which an energy is treated as an eigenvalue.
pub const RESONANCE_GUARD: f64 = 1e-14;

/// Sorted eigenvalues with orthonormal eigenvectors stored as columns.
#[derive(Clone, Debug)]
pub struct EigenDecomposition {
    values: Vec<f64>,
    vectors: Mat<f64>,
}

impl EigenDecomposition {
    pub fn from_parts(values: Vec<f64>, vectors: Mat<f64>) -> Result<Self> {
        if vectors.nrows() != values.len() || vectors.ncols() != values.len() {
            return Err(Error::DimensionMismatch("eigenvector matrix shape differs from the spectrum".into()));
        }
        Ok(Self { values, vectors })
    }

    pub fn dim(&self) -> usize {
        self.values.len()
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn vectors(&self) -> MatRef<'_, f64> {
        self.vectors.as_ref()
    }

    pub fn vector(&self, j: usize) -> Vec<f64> {
        (0..self.dim()).map(|i| self.vectors[(i, j)]).collect()
    }

    /// `max |lambda|`.
    pub fn norm(&self) -> f64 {
        spectral_radius(&self.values)
    }

    pub fn dist_to_spectrum(&self, e: f64) -> f64 {
        dist_to_spectrum(&self.values, e)
    }

    /// `max_j |H v_j - lambda_j v_j|`.
    pub fn max_residual(&self, h: &HamiltonianMatrix) -> f64 {
        (0..self.dim())
            .map(|j| {
                let v = self.vector(j);
                let hv = h.matvec(&v);
                hv.iter().zip(&v).map(|(a, b)| (a - self.values[j] * b).powi(2)).sum::<f64>().sqrt()
            })
            .fold(0.0, f64::max)
    }

    /// `max |V^T V - I|` entrywise.
    pub fn orthogonality_defect(&self) -> f64 {
        let g = self.vectors.transpose() * &self.vectors;
        let mut worst = 0.0f64;
        for i in 0..self.dim() {
            for j in 0..self.dim() {
                let target = if i == j { 1.0 } else { 0.0 };
                worst = worst.max((g[(i, j)] - target).abs());
            }
        }
        worst
    }
}

pub fn spectral_radius(values: &[f64]) -> f64 {
    values.iter().fold(0.0f64, |m, v| m.max(v.abs()))
}

/// `min_j |lambda_j - E|` over a sorted spectrum.
pub fn dist_to_spectrum(values: &[f64], e: f64) -> f64 {
    let k = values.partition_point(|&v| v < e);
    let mut best = f64::INFINITY;
    if k < values.len() {
        best = best.min(values[k] - e);
    }
    if k > 0 {
        best = best.min(e - values[k - 1]);
    }
    best
}

/// Errors when `E` is within the guard of the spectrum.
pub fn check_nonresonant(values: &[f64], e: f64) -> Result<f64> {
    let dist = dist_to_spectrum(values, e);
    if dist <= RESONANCE_GUARD * spectral_radius(values).max(1.0) {
        return Err(Error::Resonant { energy: e, distance: dist });
    }
    Ok(dist)
}

fn check_dense(dim: usize) -> Result<()> {
    if dim > DENSE_LIMIT {
        return Err(Error::TooLarge { dim, cap: DENSE_LIMIT });
    }
    Ok(())
}

pub fn eigendecompose_dense(m: MatRef<'_, f64>) -> Result<EigenDecomposition> {
    if m.nrows() != m.ncols() {
        return Err(Error::DimensionMismatch("matrix is not square".into()));
    }
    check_dense(m.nrows())?;
    let evd = m
        .self_adjoint_eigen(Side::Lower)
        .map_err(|e| Error::Eigensolver(format!("{e:?}")))?;
    let values: Vec<f64> = (0..m.nrows()).map(|i| evd.S()[i]).collect();
    let vectors = evd.U().to_owned();
    if values.iter().any(|v| !v.is_finite()) {
        return Err(Error::Eigensolver("non-finite eigenvalue".into()));
    }
    Ok(EigenDecomposition { values, vectors })
}

pub fn eigenvalues_dense(m: MatRef<'_, f64>) -> Result<Vec<f64>> {
    check_dense(m.nrows())?;
    let mut values = m
        .self_adjoint_eigenvalues(Side::Lower)
        .map_err(|e| Error::Eigensolver(format!("{e:?}")))?;
    if values.iter().any(|v| !v.is_finite()) {
        return Err(Error::Eigensolver("non-finite eigenvalue".into()));
    }
    values.sort_by(f64::total_cmp);
    Ok(values)
}

/// Full dense eigendecomposition of an assembled operator.
pub fn eigendecompose(h: &HamiltonianMatrix) -> Result<EigenDecomposition> {
    check_dense(h.dim())?;
    eigendecompose_dense(h.to_dense().as_ref())
}

pub fn eigenvalues(h: &HamiltonianMatrix) -> Result<Vec<f64>> {
    check_dense(h.dim())?;
    eigenvalues_dense(h.to_dense().as_ref())
}

/// Lowest `k` eigenvalues by Lanczos with full reorthogonalization, for
/// operators beyond [`DENSE_LIMIT`]. Degenerate eigenvalues appear once.
pub fn lanczos_lowest(h: &HamiltonianMatrix, k: usize, seed: u64) -> Result<Vec<f64>> {
    let n = h.dim();
    if k == 0 || k > n {
        return Err(Error::InvalidParameter(format!("cannot extract {k} eigenvalues of a {n}-dimensional operator")));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut q: Vec<f64> = (0..n).map(|_| rng.random::<f64>() - 0.5).collect();
    normalize(&mut q);
    let scale = h.norm_bound().max(1.0);
    let mut basis: Vec<Vec<f64>> = Vec::new();
    let mut alpha: Vec<f64> = Vec::new();
    let mut beta: Vec<f64> = Vec::new();
    let mut previous: Option<Vec<f64>> = None;
    loop {
        basis.push(q.clone());
        let mut w = h.matvec(&q);
        alpha.push(dot(&w, &q));
        // Two passes of classical Gram-Schmidt against the whole basis.
        for _ in 0..2 {
            for b in &basis {
                let c = dot(&w, b);
                w.iter_mut().zip(b).for_each(|(x, y)| *x -= c * y);
            }
        }
        let norm = dot(&w, &w).sqrt();
        let exhausted = basis.len() == n || norm < 1e-12 * scale;
        if exhausted || (basis.len() >= k && basis.len().is_multiple_of(20)) {
            let ritz = tridiagonal_eigenvalues(&alpha, &beta)?;
            if ritz.len() >= k {
                let low = ritz[..k].to_vec();
                let settled = previous
                    .as_ref()
                    .is_some_and(|p| p.iter().zip(&low).all(|(a, b)| (a - b).abs() <= 1e-13 * scale));
                if settled || exhausted {
                    return Ok(low);
                }
                previous = Some(low);
            } else if exhausted {
                return Err(Error::Eigensolver(format!(
                    "invariant subspace of dimension {} holds fewer than {k} eigenvalues",
                    basis.len()
                )));
            }
        }
        beta.push(norm);
        q = w.into_iter().map(|x| x / norm).collect();
    }
}

fn tridiagonal_eigenvalues(alpha: &[f64], beta: &[f64]) -> Result<Vec<f64>> {
    let m = alpha.len();
    let t = Mat::from_fn(m, m, |i, j| {
        if i == j {
            alpha[i]
        } else if i + 1 == j {
            beta[i]
        } else if j + 1 == i {
            beta[j]
        } else {
            0.0
        }
    });
    eigenvalues_dense(t.as_ref())
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn normalize(v: &mut [f64]) {
    let n = dot(v, v).sqrt();
    v.iter_mut().for_each(|x| *x /= n);
}

#[cfg(test)]
mod tests {
    use super::*;

    fn diag(values: &[f64]) -> Mat<f64> {
        Mat::from_fn(values.len(), values.len(), |i, j| if i == j { values[i] } else { 0.0 })
    }

    #[test]
    fn diagonal_matrix() {
        let eig = eigendecompose_dense(diag(&[3.0, 1.0]).as_ref()).unwrap();
        assert_eq!(eig.values(), &[1.0, 3.0]);
        assert_eq!(eig.vectors()[(1, 0)].abs(), 1.0);
        assert_eq!(eig.vectors()[(0, 1)].abs(), 1.0);
    }

    #[test]
    fn trace_identity() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let mut m = Mat::<f64>::zeros(50, 50);
        for i in 0..50 {
            for j in 0..=i {
                let x: f64 = rng.random::<f64>() * 2.0 - 1.0;
                m[(i, j)] = x;
                m[(j, i)] = x;
            }
        }
        let trace: f64 = (0..50).map(|i| m[(i, i)]).sum();
        let eig = eigendecompose_dense(m.as_ref()).unwrap();
        assert!((eig.values().iter().sum::<f64>() - trace).abs() < 1e-9);
        assert!(eig.orthogonality_defect() < 1e-12);
    }

    #[test]
    fn distance_examples() {
        assert!((dist_to_spectrum(&[1.0, 3.0], 1.9) - 0.9).abs() < 1e-15);
        assert_eq!(dist_to_spectrum(&[1.0, 3.0], 3.0), 0.0);
        let e = (-10f64).exp();
        assert!((dist_to_spectrum(&[1.0], 1.0 + e) - e).abs() < 1e-15);
        assert!(matches!(check_nonresonant(&[1.0, 3.0], 3.0), Err(Error::Resonant { .. })));
    }

    #[test]
    fn dense_limit_enforced() {
        let h = HamiltonianMatrix::from_parts(vec![DENSE_LIMIT + 1], vec![0.0; DENSE_LIMIT + 1], 1.0).unwrap();
        assert!(matches!(eigenvalues(&h), Err(Error::TooLarge { .. })));
    }

    #[test]
    fn lanczos_matches_dense() {
        let diag: Vec<f64> = (0..300).map(|i| ((i * 37) % 11) as f64).collect();
        let h = HamiltonianMatrix::from_parts(vec![300], diag, 1.0).unwrap();
        let dense = eigenvalues(&h).unwrap();
        let low = lanczos_lowest(&h, 3, 1).unwrap();
        for (a, b) in low.iter().zip(&dense) {
            assert!((a - b).abs() < 1e-8, "{a} vs {b}");
        }
    }
}
