use std::sync::Arc;

use faer::Mat;
use serde::{Deserialize, Serialize};

use super::disorder::{sample_disorder, DisorderField, DisorderSpec, SiteWindow};
use crate::geometry::{CubeSpec, ParticlePoint, ParticleSet};
use crate::{Error, Result};

/// Default cap on the Hilbert-space dimension of an assembled operator.
pub const DEFAULT_MAX_DIM: usize = 20_000;

/// Pair potential `Phi` tabulated on `0..=r0`, and the coupling `h`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct InteractionSpec {
    pub phi: Vec<f64>,
    pub h: f64,
}

impl InteractionSpec {
    /// `Phi = 1` on `[0, r0]`.
    pub fn bump(r0: i64, h: f64) -> Result<Self> {
        if r0 < 0 {
            return Err(Error::InvalidParameter("interaction range must be nonnegative".into()));
        }
        Ok(Self { phi: vec![1.0; r0 as usize + 1], h })
    }

    pub fn tabulated(phi: Vec<f64>, h: f64) -> Result<Self> {
        let spec = Self { phi, h };
        spec.validate()?;
        Ok(spec)
    }

    pub fn validate(&self) -> Result<()> {
        if self.phi.is_empty() || self.phi.iter().any(|v| !v.is_finite()) || !self.h.is_finite() {
            return Err(Error::InvalidParameter("interaction table must be nonempty and finite".into()));
        }
        Ok(())
    }

    pub fn r0(&self) -> i64 {
        self.phi.len() as i64 - 1
    }

    pub fn with_h(&self, h: f64) -> Self {
        Self { phi: self.phi.clone(), h }
    }

    /// `Phi(r)`, zero beyond the range.
    pub fn phi_at(&self, r: i64) -> f64 {
        usize::try_from(r).ok().and_then(|r| self.phi.get(r)).copied().unwrap_or(0.0)
    }

    pub fn sup_phi(&self) -> f64 {
        self.phi.iter().fold(0.0, |m, v| m.max(v.abs()))
    }
}

/// `U(x) = sum_{i<j} Phi(|x_i - x_j|)` at a lattice configuration.
pub fn interaction_potential(x: &ParticlePoint, spec: &InteractionSpec) -> f64 {
    let n = x.particles();
    let mut u = 0.0;
    for i in 0..n {
        for j in i + 1..n {
            let d = x.particle(i).iter().zip(x.particle(j)).map(|(a, b)| (a - b).abs()).max().unwrap_or(0);
            u += spec.phi_at(d);
        }
    }
    u
}

/// A cube discretized with spacing `1 / refinement`; Dirichlet boundary.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct DomainSpec {
    pub cube: CubeSpec,
    pub refinement: u32,
}

impl DomainSpec {
    pub fn new(cube: CubeSpec, refinement: u32) -> Result<Self> {
        if refinement == 0 {
            return Err(Error::InvalidParameter("refinement must be >= 1".into()));
        }
        Ok(Self { cube, refinement })
    }

    /// Grid spacing `a`; only `a = 1/k` is supported.
    pub fn with_spacing(cube: CubeSpec, a: f64) -> Result<Self> {
        let k = (1.0 / a).round();
        if !(a > 0.0) || (k * a - 1.0).abs() > 1e-12 || k > u32::MAX as f64 {
            return Err(Error::InvalidParameter(format!("grid spacing {a} must be 1/k for an integer k")));
        }
        Self::new(cube, k as u32)
    }

    pub fn spacing(&self) -> f64 {
        1.0 / self.refinement as f64
    }

    pub fn grid(&self) -> CubeGrid {
        CubeGrid::new(&self.cube, self.refinement)
    }
}

/// Interior grid points of a cube in scaled integer coordinates `p = x / a`.
///
/// Axis `i * d + k` is coordinate `k` of particle `i`; states are row-major in
/// the axes, so particle 0 is the slowest index.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CubeGrid {
    refinement: i64,
    particles: usize,
    dim: usize,
    start: Vec<i64>,
    shape: Vec<usize>,
    center: Vec<i64>,
}

impl CubeGrid {
    pub fn new(cube: &CubeSpec, refinement: u32) -> Self {
        let r = refinement as i64;
        let (n, d) = (cube.particles(), cube.dim());
        let mut start = Vec::with_capacity(n * d);
        let mut shape = Vec::with_capacity(n * d);
        let mut center = Vec::with_capacity(n * d);
        for i in 0..n {
            let l = cube.side(i);
            for &u in cube.center().particle(i) {
                start.push(r * (u - l) + 1);
                shape.push((2 * r * l - 1) as usize);
                center.push(r * u);
            }
        }
        Self { refinement: r, particles: n, dim: d, start, shape, center }
    }

    pub fn refinement(&self) -> i64 {
        self.refinement
    }

    pub fn particles(&self) -> usize {
        self.particles
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn shape(&self) -> &[usize] {
        &self.shape
    }

    /// Number of states, or `None` on overflow.
    pub fn states(&self) -> Option<usize> {
        self.shape.iter().try_fold(1usize, |acc, &m| acc.checked_mul(m))
    }

    /// Scaled coordinates of `state`, particle-major.
    pub fn position(&self, mut state: usize, out: &mut [i64]) {
        for a in (0..self.shape.len()).rev() {
            out[a] = self.start[a] + (state % self.shape[a]) as i64;
            state /= self.shape[a];
        }
    }

    pub fn positions(&self, state: usize) -> Vec<i64> {
        let mut out = vec![0; self.shape.len()];
        self.position(state, &mut out);
        out
    }

    /// State index of scaled coordinates, if they are interior.
    pub fn state_of(&self, coords: &[i64]) -> Option<usize> {
        let mut s = 0usize;
        for a in 0..self.shape.len() {
            let off = coords[a] - self.start[a];
            if off < 0 || off >= self.shape[a] as i64 {
                return None;
            }
            s = s * self.shape[a] + off as usize;
        }
        Some(s)
    }

    /// `|x - u|` in scaled units.
    pub fn distance_from_center(&self, coords: &[i64]) -> i64 {
        coords.iter().zip(&self.center).map(|(p, c)| (p - c).abs()).max().unwrap_or(0)
    }

    /// The disorder site whose unit cell contains scaled coordinate `p`.
    pub fn site_of(&self, p: i64) -> i64 {
        (2 * p + self.refinement).div_euclid(2 * self.refinement)
    }
}

/// Finite-difference operator `-Lap + sum_i V(x_i) + h U(x)` on a cube grid.
///
/// Off-diagonal entries are the nearest-neighbour stencil `-1/a^2` along every
/// axis; only the diagonal is stored.
#[derive(Clone, Debug, PartialEq)]
pub struct HamiltonianMatrix {
    shape: Vec<usize>,
    diag: Vec<f64>,
    hop: f64,
}

impl HamiltonianMatrix {
    pub fn from_parts(shape: Vec<usize>, diag: Vec<f64>, hop: f64) -> Result<Self> {
        let dim: usize = shape.iter().product();
        if dim != diag.len() || dim == 0 {
            return Err(Error::DimensionMismatch(format!("{} diagonal entries for shape {shape:?}", diag.len())));
        }
        Ok(Self { shape, diag, hop })
    }

    pub fn dim(&self) -> usize {
        self.diag.len()
    }

    pub fn shape(&self) -> &[usize] {
        &self.shape
    }

    pub fn diagonal(&self) -> &[f64] {
        &self.diag
    }

    /// `1 / a^2`.
    pub fn hop(&self) -> f64 {
        self.hop
    }

    fn strides(&self) -> Vec<usize> {
        let mut strides = vec![1; self.shape.len()];
        for a in (0..self.shape.len().saturating_sub(1)).rev() {
            strides[a] = strides[a + 1] * self.shape[a + 1];
        }
        strides
    }

    /// Calls `f(j)` for every stencil neighbour `j > i`.
    fn for_upper_neighbours(&self, i: usize, strides: &[usize], mut f: impl FnMut(usize)) {
        for (a, &s) in strides.iter().enumerate() {
            if (i / s) % self.shape[a] + 1 < self.shape[a] {
                f(i + s);
            }
        }
    }

    /// Nonzero entries `(row, col, value)`, both triangles.
    pub fn triplets(&self) -> Vec<(usize, usize, f64)> {
        let strides = self.strides();
        let mut out = Vec::new();
        for i in 0..self.dim() {
            out.push((i, i, self.diag[i]));
            self.for_upper_neighbours(i, &strides, |j| {
                out.push((i, j, -self.hop));
                out.push((j, i, -self.hop));
            });
        }
        out
    }

    pub fn to_dense(&self) -> Mat<f64> {
        let n = self.dim();
        let strides = self.strides();
        let mut m = Mat::<f64>::zeros(n, n);
        for i in 0..n {
            m[(i, i)] = self.diag[i];
            self.for_upper_neighbours(i, &strides, |j| {
                m[(i, j)] = -self.hop;
                m[(j, i)] = -self.hop;
            });
        }
        m
    }

    pub fn matvec(&self, x: &[f64]) -> Vec<f64> {
        let strides = self.strides();
        let mut y: Vec<f64> = self.diag.iter().zip(x).map(|(d, v)| d * v).collect();
        for i in 0..self.dim() {
            self.for_upper_neighbours(i, &strides, |j| {
                y[i] -= self.hop * x[j];
                y[j] -= self.hop * x[i];
            });
        }
        y
    }

    /// Gershgorin bound on the spectral radius.
    pub fn norm_bound(&self) -> f64 {
        let off = 2.0 * self.shape.len() as f64 * self.hop;
        self.diag.iter().fold(0.0f64, |m, d| m.max(d.abs())) + off
    }

    pub fn shifted(&self, by: f64) -> Self {
        Self { shape: self.shape.clone(), diag: self.diag.iter().map(|d| d + by).collect(), hop: self.hop }
    }
}

/// Everything needed to assemble `H` on a cube and on its subcubes.
#[derive(Clone, Debug)]
pub struct HamiltonianContext {
    pub domain: DomainSpec,
    pub field: Arc<DisorderField>,
    pub interaction: InteractionSpec,
    pub max_dim: usize,
}

impl HamiltonianContext {
    pub fn new(domain: DomainSpec, field: DisorderField, interaction: InteractionSpec) -> Self {
        Self { domain, field: Arc::new(field), interaction, max_dim: DEFAULT_MAX_DIM }
    }

    pub fn with_max_dim(mut self, max_dim: usize) -> Self {
        self.max_dim = max_dim;
        self
    }

    pub fn cube(&self) -> &CubeSpec {
        &self.domain.cube
    }

    pub fn grid(&self) -> CubeGrid {
        self.domain.grid()
    }

    pub fn dim(&self) -> Option<usize> {
        self.grid().states()
    }

    pub fn assemble(&self) -> Result<HamiltonianMatrix> {
        assemble_with_cap(&self.domain, &self.field, &self.interaction, self.max_dim)
    }

    /// Same field and interaction on `sub`, with Dirichlet conditions on its
    /// own boundary.
    pub fn subcontext(&self, sub: &CubeSpec) -> Result<Self> {
        if !self.domain.cube.contains_cube(sub) {
            return Err(Error::NotContained(format!(
                "cube around {} with half-side {} is not inside the domain",
                sub.center(),
                sub.half_side()
            )));
        }
        Ok(Self {
            domain: DomainSpec::new(sub.clone(), self.domain.refinement)?,
            field: Arc::clone(&self.field),
            interaction: self.interaction.clone(),
            max_dim: self.max_dim,
        })
    }

    pub fn restrict(&self, sub: &CubeSpec) -> Result<HamiltonianMatrix> {
        self.subcontext(sub)?.assemble()
    }

    /// The operator of the particles in `set` only, on the factor cube.
    pub fn select(&self, set: ParticleSet) -> Result<Self> {
        Ok(Self {
            domain: DomainSpec::new(self.domain.cube.select(set)?, self.domain.refinement)?,
            field: Arc::clone(&self.field),
            interaction: self.interaction.clone(),
            max_dim: self.max_dim,
        })
    }

    pub fn with_coupling(&self, h: f64) -> Self {
        Self { interaction: self.interaction.with_h(h), ..self.clone() }
    }
}

/// Sites touched by the grid of `cube` at the given refinement.
pub fn field_window(cube: &CubeSpec) -> SiteWindow {
    let d = cube.dim();
    let mut lo = vec![i64::MAX; d];
    let mut hi = vec![i64::MIN; d];
    for i in 0..cube.particles() {
        for (k, &u) in cube.center().particle(i).iter().enumerate() {
            lo[k] = lo[k].min(u - cube.side(i));
            hi[k] = hi[k].max(u + cube.side(i));
        }
    }
    SiteWindow { lo, hi }
}

pub fn assemble_single(domain: &DomainSpec, field: &DisorderField) -> Result<HamiltonianMatrix> {
    if domain.cube.particles() != 1 {
        return Err(Error::DimensionMismatch("single-particle assembly needs a one-particle cube".into()));
    }
    assemble_with_cap(domain, field, &InteractionSpec { phi: vec![0.0], h: 0.0 }, DEFAULT_MAX_DIM)
}

pub fn assemble_multiparticle(
    domain: &DomainSpec,
    field: &DisorderField,
    interaction: &InteractionSpec,
) -> Result<HamiltonianMatrix> {
    assemble_with_cap(domain, field, interaction, DEFAULT_MAX_DIM)
}

pub fn assemble_with_cap(
    domain: &DomainSpec,
    field: &DisorderField,
    interaction: &InteractionSpec,
    max_dim: usize,
) -> Result<HamiltonianMatrix> {
    let grid = domain.grid();
    let (n, d) = (grid.particles(), grid.dim());
    if field.window().dim() != d {
        return Err(Error::DimensionMismatch(format!(
            "field is {}-dimensional, domain is {d}-dimensional",
            field.window().dim()
        )));
    }
    let dim = grid.states().ok_or(Error::TooLarge { dim: usize::MAX, cap: max_dim })?;
    if dim > max_dim {
        return Err(Error::TooLarge { dim, cap: max_dim });
    }
    let r = grid.refinement();
    let hop = (r * r) as f64;
    let kinetic = 2.0 * (n * d) as f64 * hop;
    let coupled = interaction.h != 0.0 && n > 1;
    let mut diag = Vec::with_capacity(dim);
    let mut pos = vec![0i64; n * d];
    let mut site = vec![0i64; d];
    for s in 0..dim {
        grid.position(s, &mut pos);
        let mut v = kinetic;
        for i in 0..n {
            for k in 0..d {
                site[k] = grid.site_of(pos[i * d + k]);
            }
            v += field.value(&site).ok_or_else(|| {
                Error::DimensionMismatch(format!("site {site:?} lies outside the disorder window"))
            })?;
        }
        if coupled {
            let mut u = 0.0;
            for i in 0..n {
                for j in i + 1..n {
                    let dist = (0..d).map(|k| (pos[i * d + k] - pos[j * d + k]).abs()).max().unwrap_or(0);
                    u += interaction.phi_at((dist + r - 1) / r);
                }
            }
            v += interaction.h * u;
        }
        diag.push(v);
    }
    HamiltonianMatrix::from_parts(grid.shape().to_vec(), diag, hop)
}

/// Disorder law, interaction and discretization shared by all cubes of an
/// experiment.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ModelSpec {
    pub disorder: DisorderSpec,
    pub interaction: InteractionSpec,
    pub refinement: u32,
    pub max_dim: usize,
}

impl ModelSpec {
    pub fn new(disorder: DisorderSpec, interaction: InteractionSpec) -> Self {
        Self { disorder, interaction, refinement: 1, max_dim: DEFAULT_MAX_DIM }
    }

    pub fn validate(&self) -> Result<()> {
        self.disorder.validate()?;
        self.interaction.validate()?;
        if self.refinement == 0 {
            return Err(Error::InvalidParameter("refinement must be >= 1".into()));
        }
        Ok(())
    }

    /// Samples realization `index` on the window of `cube`.
    pub fn realize(&self, cube: &CubeSpec, master_seed: u64, index: u64) -> Result<HamiltonianContext> {
        self.validate()?;
        let field = sample_disorder(&self.disorder, &field_window(cube), master_seed, index)?;
        self.with_field(cube, field)
    }

    pub fn with_field(&self, cube: &CubeSpec, field: DisorderField) -> Result<HamiltonianContext> {
        Ok(HamiltonianContext::new(DomainSpec::new(cube.clone(), self.refinement)?, field, self.interaction.clone())
            .with_max_dim(self.max_dim))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn zero_field(cube: &CubeSpec) -> DisorderField {
        DisorderField::constant(field_window(cube), 0.0)
    }

    #[test]
    fn potential_examples() {
        let spec = InteractionSpec::bump(1, 1.0).unwrap();
        assert_eq!(interaction_potential(&ParticlePoint::line(&[0, 5]), &spec), 0.0);
        assert_eq!(interaction_potential(&ParticlePoint::line(&[0, 1, 1]), &spec), 3.0);
        assert_eq!(interaction_potential(&ParticlePoint::line(&[4]), &spec), 0.0);
    }

    #[test]
    fn grid_sizes_and_sites() {
        let cube = CubeSpec::line(&[0], 2).unwrap();
        let g = CubeGrid::new(&cube, 1);
        assert_eq!(g.shape(), &[3]);
        assert_eq!(g.positions(0), vec![-1]);
        let g = CubeGrid::new(&cube, 2);
        assert_eq!(g.shape(), &[7]);
        // Scaled 1 is x = 0.5, which belongs to the cell of site 1.
        assert_eq!(g.site_of(1), 1);
        assert_eq!(g.site_of(-1), 0);
        assert_eq!(g.site_of(-3), -1);
    }

    #[test]
    fn three_point_matrix() {
        let cube = CubeSpec::line(&[0], 2).unwrap();
        let dom = DomainSpec::new(cube.clone(), 1).unwrap();
        let h = assemble_single(&dom, &zero_field(&cube)).unwrap();
        let m = h.to_dense();
        let expect = [[2.0, -1.0, 0.0], [-1.0, 2.0, -1.0], [0.0, -1.0, 2.0]];
        for i in 0..3 {
            for j in 0..3 {
                assert_eq!(m[(i, j)], expect[i][j]);
            }
        }
    }

    #[test]
    fn matvec_matches_dense_and_triplets() {
        let cube = CubeSpec::new(ParticlePoint::new(2, vec![0, 0, 1, 0]).unwrap(), 2).unwrap();
        let w = field_window(&cube);
        let field = sample_disorder(&DisorderSpec::Uniform { low: 0.0, high: 1.0 }, &w, 1, 0).unwrap();
        let dom = DomainSpec::new(cube, 1).unwrap();
        let h = assemble_multiparticle(&dom, &field, &InteractionSpec::bump(1, 0.3).unwrap()).unwrap();
        let x: Vec<f64> = (0..h.dim()).map(|i| (i as f64).sin()).collect();
        let y = h.matvec(&x);
        let m = h.to_dense();
        let mut z = vec![0.0; h.dim()];
        for (i, j, v) in h.triplets() {
            z[i] += v * x[j];
        }
        for i in 0..h.dim() {
            let dense: f64 = (0..h.dim()).map(|j| m[(i, j)] * x[j]).sum();
            assert!((dense - y[i]).abs() < 1e-12);
            assert!((z[i] - y[i]).abs() < 1e-12);
            for j in 0..h.dim() {
                assert_eq!(m[(i, j)], m[(j, i)]);
            }
        }
    }

    #[test]
    fn restriction_rules() {
        let cube = CubeSpec::line(&[0, 3], 6).unwrap();
        let model = ModelSpec::new(DisorderSpec::Uniform { low: 0.0, high: 5.0 }, InteractionSpec::bump(1, 0.5).unwrap());
        let ctx = model.realize(&cube, 9, 1).unwrap();
        assert_eq!(ctx.restrict(&cube).unwrap(), ctx.assemble().unwrap());
        let mid = CubeSpec::line(&[1, 2], 4).unwrap();
        let small = CubeSpec::line(&[1, 3], 2).unwrap();
        let nested = ctx.subcontext(&mid).unwrap().restrict(&small).unwrap();
        assert_eq!(nested, ctx.restrict(&small).unwrap());
        assert!(matches!(ctx.restrict(&CubeSpec::line(&[5, 3], 4).unwrap()), Err(Error::NotContained(_))));
    }

    #[test]
    fn finite_range_coupling() {
        // Particles confined to distant boxes never come within r0.
        let cube = CubeSpec::line(&[0, 40], 3).unwrap();
        let field = zero_field(&cube);
        let dom = DomainSpec::new(cube, 1).unwrap();
        let a = assemble_multiparticle(&dom, &field, &InteractionSpec::bump(2, 0.0).unwrap()).unwrap();
        let b = assemble_multiparticle(&dom, &field, &InteractionSpec::bump(2, 7.0).unwrap()).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn size_cap() {
        let cube = CubeSpec::line(&[0, 0, 0], 20).unwrap();
        let model = ModelSpec::new(DisorderSpec::Uniform { low: 0.0, high: 1.0 }, InteractionSpec::bump(1, 0.0).unwrap());
        let ctx = model.realize(&cube, 0, 0).unwrap();
        assert!(matches!(ctx.assemble(), Err(Error::TooLarge { .. })));
    }

    #[test]
    fn spacing_parsing() {
        let cube = CubeSpec::line(&[0], 2).unwrap();
        assert_eq!(DomainSpec::with_spacing(cube.clone(), 0.5).unwrap().refinement, 2);
        assert!(DomainSpec::with_spacing(cube, 0.3).is_err());
    }
}
