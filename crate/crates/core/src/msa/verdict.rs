use std::collections::HashMap;

use serde::{Deserialize, Serialize};

use super::params::{gamma, resonance_threshold, singularity_threshold, MsaParams};
use crate::geometry::{pi_partition, CubeSpec, ParticlePoint, ParticleSet};
use crate::model::HamiltonianContext;
use crate::spectral::{
    cube_block_norm, decompose_cube, dist_to_spectrum, eigenvalues, interaction_groups, EigenDecomposition, Region,
};
use crate::{Error, Result};

/// A cube's operator diagonalized once, for verdicts at many energies.
#[derive(Clone, Debug)]
pub struct CubeSpectrum {
    ctx: HamiltonianContext,
    eig: EigenDecomposition,
}

impl CubeSpectrum {
    pub fn new(ctx: &HamiltonianContext) -> Result<Self> {
        ctx.cube().regions()?;
        Ok(Self { eig: decompose_cube(ctx)?, ctx: ctx.clone() })
    }

    pub fn context(&self) -> &HamiltonianContext {
        &self.ctx
    }

    pub fn eigen(&self) -> &EigenDecomposition {
        &self.eig
    }

    /// NS/S and R/NR at `e`; CNR and localization are left unset.
    pub fn verdict(&self, e: f64, params: &MsaParams) -> Result<CubeVerdict> {
        self.verdict_with_mass(e, params.m, params.total_particles)
    }

    pub fn verdict_with_mass(&self, e: f64, m: f64, total_particles: usize) -> Result<CubeVerdict> {
        let cube = self.ctx.cube();
        let l = cube.half_side();
        let n = cube.particles();
        let dist = self.eig.dist_to_spectrum(e);
        let resonance = resonance_threshold(l);
        let threshold = singularity_threshold(m, l, n, total_particles);
        let block_norm = match cube_block_norm(&self.ctx, &self.eig, e) {
            Ok(p) => Some(p.block_norm),
            Err(Error::Resonant { .. }) => None,
            Err(err) => return Err(err),
        };
        Ok(CubeVerdict {
            center: cube.center().clone(),
            half_side: l,
            particles: n,
            energy: e,
            mass: m,
            gamma: gamma(m, l, n, total_particles),
            dist_to_spectrum: dist,
            resonance_threshold: resonance,
            resonant: dist <= resonance,
            block_norm,
            singularity_threshold: threshold,
            nonsingular: block_norm.is_some_and(|b| b <= threshold),
            cnr: None,
            localized: None,
        })
    }
}

/// Classification of one cube at one energy.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CubeVerdict {
    pub center: ParticlePoint,
    pub half_side: i64,
    pub particles: usize,
    pub energy: f64,
    pub mass: f64,
    pub gamma: f64,
    pub dist_to_spectrum: f64,
    /// `e^{-sqrt L}`; resonant iff `dist <= resonance_threshold`.
    pub resonance_threshold: f64,
    pub resonant: bool,
    /// `None` when `E` lies in the spectrum to working precision.
    pub block_norm: Option<f64>,
    /// `e^{-gamma L}`.
    pub singularity_threshold: f64,
    pub nonsingular: bool,
    pub cnr: Option<bool>,
    pub localized: Option<bool>,
}

pub fn classify_cube(ctx: &HamiltonianContext, e: f64, params: &MsaParams) -> Result<CubeVerdict> {
    CubeSpectrum::new(ctx)?.verdict(e, params)
}

/// Verdict including the CNR scan (and localization for PI cubes).
pub fn classify_cube_full(ctx: &HamiltonianContext, e: f64, params: &MsaParams) -> Result<CubeVerdict> {
    let mut v = classify_cube(ctx, e, params)?;
    v.cnr = Some(is_cnr(ctx, e)?.cnr);
    v.localized = match is_localized_pi(ctx, params) {
        Ok(r) => Some(r.localized),
        Err(Error::FullyInteractive) => None,
        Err(err) => return Err(err),
    };
    Ok(v)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CnrReport {
    pub cnr: bool,
    /// First resonant sub-cube found, scanning sizes upward.
    pub offender: Option<CubeSpec>,
    pub offender_dist: Option<f64>,
    pub sizes: Vec<i64>,
    pub cubes_scanned: usize,
    /// The cube itself is non-resonant.
    pub self_nonresonant: bool,
}

/// Sub-cube sizes tested by the CNR scan: `ceil(L^{2/3}) ..= L`.
pub fn cnr_sizes(l: i64) -> Vec<i64> {
    if l < 4 {
        return vec![l];
    }
    // Smallest integer s with s^3 >= l^2.
    let target = (l as i128) * (l as i128);
    let mut s = (target as f64).cbrt().floor() as i64;
    while (s as i128).pow(3) < target {
        s += 1;
    }
    while s > 1 && ((s - 1) as i128).pow(3) >= target {
        s -= 1;
    }
    (s..=l).collect()
}

/// Sub-cubes of half-side `size` with centers on `u + step Z^{nd}`,
/// `step = max(1, floor(size / 3))`, contained in `cube`.
pub fn subcube_lattice(cube: &CubeSpec, size: i64) -> Result<Vec<CubeSpec>> {
    let slack = cube.half_side() - size;
    if slack < 0 {
        return Ok(Vec::new());
    }
    let step = (size / 3).max(1);
    let reach = slack / step;
    let offsets: Vec<i64> = (-reach..=reach).map(|k| k * step).collect();
    let base = cube.center().coords();
    let axes = base.len();
    let mut out = Vec::new();
    let mut digits = vec![0usize; axes];
    loop {
        let coords: Vec<i64> = (0..axes).map(|a| base[a] + offsets[digits[a]]).collect();
        out.push(CubeSpec::new(ParticlePoint::new(cube.dim(), coords)?, size)?);
        let mut a = axes;
        loop {
            if a == 0 {
                return Ok(out);
            }
            a -= 1;
            digits[a] += 1;
            if digits[a] < offsets.len() {
                break;
            }
            digits[a] = 0;
        }
    }
}

/// `min |E - (l_1 + .. + l_k)|` over sums of one eigenvalue per sorted factor.
fn dist_to_sum_spectrum(factors: &[&[f64]], e: f64) -> f64 {
    match factors {
        [] => f64::INFINITY,
        [only] => dist_to_spectrum(only, e),
        [first, rest @ ..] => first
            .iter()
            .map(|l| dist_to_sum_spectrum(rest, e - l))
            .fold(f64::INFINITY, f64::min),
    }
}

/// Group center coordinates with the group tag, and the half-side.
type GroupKey = (Vec<i64>, i64);

/// Eigenvalues of particle groups, shared across the sub-cubes of one scan.
#[derive(Default)]
struct GroupCache {
    spectra: HashMap<GroupKey, Vec<f64>>,
}

impl GroupCache {
    /// Cache keys of the particle groups of `ctx`, computing missing spectra.
    fn keys(&mut self, ctx: &HamiltonianContext) -> Result<Vec<GroupKey>> {
        let groups = interaction_groups(ctx);
        let mut keys = Vec::with_capacity(groups.len());
        for &g in &groups {
            let sub = ctx.select(g)?;
            let mut key = sub.cube().center().coords().to_vec();
            key.extend(g.iter().map(|i| -1 - i as i64));
            let key = (key, ctx.cube().half_side());
            if !self.spectra.contains_key(&key) {
                let values = eigenvalues(&sub.assemble()?)?;
                self.spectra.insert(key.clone(), values);
            }
            keys.push(key);
        }
        Ok(keys)
    }

    fn dist(&self, keys: &[(Vec<i64>, i64)], e: f64) -> f64 {
        let factors: Vec<&[f64]> = keys.iter().map(|k| self.spectra[k].as_slice()).collect();
        dist_to_sum_spectrum(&factors, e)
    }
}

/// The spectra of every sub-cube tested by the CNR scan of one cube, for
/// queries at many energies.
pub struct CnrScan {
    sizes: Vec<i64>,
    cube_half_side: i64,
    own: Vec<GroupKey>,
    subcubes: Vec<(CubeSpec, Vec<GroupKey>)>,
    cache: GroupCache,
}

impl CnrScan {
    /// Sizes below 4 scan only the cube itself.
    pub fn new(ctx: &HamiltonianContext) -> Result<Self> {
        let cube = ctx.cube();
        let sizes = cnr_sizes(cube.half_side());
        let mut cache = GroupCache::default();
        let own = cache.keys(ctx)?;
        let mut subcubes = Vec::new();
        for &size in &sizes {
            for sub in subcube_lattice(cube, size)? {
                let keys = cache.keys(&ctx.subcontext(&sub)?)?;
                subcubes.push((sub, keys));
            }
        }
        Ok(Self { sizes, cube_half_side: cube.half_side(), own, subcubes, cache })
    }

    pub fn check(&self, e: f64) -> Result<CnrReport> {
        let self_dist = self.cache.dist(&self.own, e);
        let self_nonresonant = self_dist > resonance_threshold(self.cube_half_side);
        for (k, (sub, keys)) in self.subcubes.iter().enumerate() {
            let dist = self.cache.dist(keys, e);
            if dist <= resonance_threshold(sub.half_side()) {
                return Ok(CnrReport {
                    cnr: false,
                    offender: Some(sub.clone()),
                    offender_dist: Some(dist),
                    sizes: self.sizes.clone(),
                    cubes_scanned: k + 1,
                    self_nonresonant,
                });
            }
        }
        if !self_nonresonant {
            return Err(Error::Precondition("CNR scan passed a resonant cube".into()));
        }
        Ok(CnrReport {
            cnr: true,
            offender: None,
            offender_dist: None,
            sizes: self.sizes.clone(),
            cubes_scanned: self.subcubes.len(),
            self_nonresonant,
        })
    }
}

/// Scans every sub-cube of size at least `L^{2/3}` on the CNR lattice for
/// `dist(E, sigma) <= e^{-sqrt L'}`.
pub fn is_cnr(ctx: &HamiltonianContext, e: f64) -> Result<CnrReport> {
    CnrScan::new(ctx)?.check(e)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FactorLocalization {
    pub particles: ParticleSet,
    /// `max_j ||1_out phi_j||` over normalized eigenfunctions of the factor.
    pub worst_shell_mass: f64,
    /// `max_j ||1_out phi_j|| ||1_int phi_j||`.
    pub worst_shell_interior: f64,
    /// `e^{-2 gamma(m, L, n') L}`.
    pub threshold: f64,
    pub localized: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LocalizationReport {
    pub left: FactorLocalization,
    pub right: FactorLocalization,
    pub localized: bool,
}

fn masses(ctx: &HamiltonianContext) -> Result<(EigenDecomposition, Vec<(f64, f64)>)> {
    let eig = decompose_cube(ctx)?;
    let grid = ctx.grid();
    let out = Region::Shell(ctx.cube().clone()).states(&grid)?;
    let int = Region::Interior(ctx.cube().clone()).states(&grid)?;
    let v = eig.vectors();
    let norm = |states: &[usize], j: usize| states.iter().map(|&s| v[(s, j)] * v[(s, j)]).sum::<f64>().sqrt();
    let masses = (0..eig.dim()).map(|j| (norm(&out, j), norm(&int, j))).collect();
    Ok((eig, masses))
}

fn factor_localization(ctx: &HamiltonianContext, set: ParticleSet, params: &MsaParams) -> Result<FactorLocalization> {
    let sub = ctx.select(set)?;
    let l = sub.cube().half_side();
    let (_, m) = masses(&sub)?;
    let threshold = (-2.0 * gamma(params.m, l, set.len(), params.total_particles) * l as f64).exp();
    let worst_shell_mass = m.iter().map(|x| x.0).fold(0.0, f64::max);
    let worst_shell_interior = m.iter().map(|x| x.0 * x.1).fold(0.0, f64::max);
    Ok(FactorLocalization {
        particles: set,
        worst_shell_mass,
        worst_shell_interior,
        threshold,
        localized: worst_shell_mass <= threshold,
    })
}

/// m-localization of a PI cube: every normalized eigenfunction of both factor
/// operators has shell mass at most `e^{-2 gamma(m, L, n') L}`.
pub fn is_localized_pi(ctx: &HamiltonianContext, params: &MsaParams) -> Result<LocalizationReport> {
    let cube = ctx.cube();
    let left_set = pi_partition(cube, ctx.interaction.r0())?;
    let right_set = left_set.complement(cube.particles());
    let left = factor_localization(ctx, left_set, params)?;
    let right = factor_localization(ctx, right_set, params)?;
    let localized = left.localized && right.localized;
    Ok(LocalizationReport { left, right, localized })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ImplicationStatus {
    /// The hypotheses fail; nothing is claimed.
    Vacuous,
    /// Hypotheses and conclusion both hold.
    Confirmed,
    Counterexample,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ImplicationReport {
    pub status: ImplicationStatus,
    pub nonresonant: bool,
    /// Every single-particle eigenfunction satisfies the decay hypothesis.
    pub eigen_decay: bool,
    /// `max ||1_out psi|| ||1_int psi||` over all particles and eigenfunctions.
    pub worst_decay: f64,
    /// `e^{-2 gamma(m, L, n) L}`.
    pub decay_threshold: f64,
    pub nonsingular: bool,
    pub verdict: CubeVerdict,
}

/// Evaluates, on one realization without interaction, the hypotheses (E-NR
/// and decay of every single-particle eigenfunction) and the conclusion
/// (the cube is nonsingular) of the product-state argument.
pub fn noninteracting_ns_implication_check(
    ctx: &HamiltonianContext,
    e: f64,
    params: &MsaParams,
) -> Result<ImplicationReport> {
    if ctx.interaction.h != 0.0 {
        return Err(Error::Precondition("the product-state argument needs h = 0".into()));
    }
    let cube = ctx.cube();
    let (l, n) = (cube.half_side(), cube.particles());
    let decay_threshold = (-2.0 * gamma(params.m, l, n, params.total_particles) * l as f64).exp();
    let mut worst_decay = 0.0f64;
    for i in 0..n {
        let (_, m) = masses(&ctx.select(ParticleSet::singleton(i))?)?;
        worst_decay = m.iter().map(|x| x.0 * x.1).fold(worst_decay, f64::max);
    }
    let verdict = classify_cube(ctx, e, params)?;
    let nonresonant = !verdict.resonant;
    let eigen_decay = worst_decay <= decay_threshold;
    let status = match (nonresonant && eigen_decay, verdict.nonsingular) {
        (false, _) => ImplicationStatus::Vacuous,
        (true, true) => ImplicationStatus::Confirmed,
        (true, false) => ImplicationStatus::Counterexample,
    };
    Ok(ImplicationReport {
        status,
        nonresonant,
        eigen_decay,
        worst_decay,
        decay_threshold,
        nonsingular: verdict.nonsingular,
        verdict,
    })
}
