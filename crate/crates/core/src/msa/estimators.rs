use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::params::{energy_grid, MsaParams};
use super::verdict::{CnrScan, CubeSpectrum};
use crate::exec::{try_map_indexed, ExecMode};
use crate::geometry::{classify_interactivity, is_separable_pair, CubeSpec, Interactivity, ParticlePoint};
use crate::model::{field_window, sample_disorder, DisorderField, HamiltonianContext, ModelSpec, SiteWindow};
use crate::spectral::{eigenvalues_dense, resolvent, EigenDecomposition};
use crate::stats::{linear_fit, mean, std_dev, ProbabilityEstimate, Z95};
use crate::{Error, Result};

/// Note attached to every estimate quantified over an energy interval.
pub const GRID_NOTE: &str = "energy interval discretized; existence events may be under-detected";
pub const OUTSIDE_WEGNER: &str = "distribution outside the Wegner-bound hypotheses";

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct McSettings {
    pub trials: u64,
    pub seed: u64,
    #[serde(skip)]
    pub mode: ExecMode,
}

impl McSettings {
    pub fn new(trials: u64, seed: u64) -> Self {
        Self { trials, seed, mode: ExecMode::default() }
    }

    pub fn with_mode(self, mode: ExecMode) -> Self {
        Self { mode, ..self }
    }

    fn check(&self) -> Result<()> {
        if self.trials == 0 {
            return Err(Error::InvalidParameter("at least one trial is required".into()));
        }
        Ok(())
    }
}

/// One line of the estimate log.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EstimateRecord {
    pub op: String,
    #[serde(rename = "L")]
    pub l: i64,
    pub n: usize,
    #[serde(rename = "N")]
    pub total_particles: usize,
    pub h: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub energy: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub interval: Option<(f64, f64)>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub grid_points: Option<usize>,
    pub mass: f64,
    pub p: f64,
    #[serde(flatten)]
    pub estimate: ProbabilityEstimate,
    pub seed: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub pair_type: Option<String>,
    /// Per-cube event counts of a pair estimate.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub marginals: Option<(u64, u64)>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub flags: Vec<String>,
}

impl EstimateRecord {
    fn new(op: &str, cube: &CubeSpec, model: &ModelSpec, params: &MsaParams, estimate: ProbabilityEstimate, seed: u64) -> Self {
        Self {
            op: op.into(),
            l: cube.half_side(),
            n: cube.particles(),
            total_particles: params.total_particles,
            h: model.interaction.h,
            energy: None,
            interval: None,
            grid_points: None,
            mass: params.m,
            p: params.p,
            estimate,
            seed,
            pair_type: None,
            marginals: None,
            flags: Vec::new(),
        }
    }
}

/// Frequency of `event` over `trials` realizations; the count is
/// independent of the execution mode.
pub fn estimate_frequency<F>(mc: &McSettings, bound: f64, event: F) -> Result<ProbabilityEstimate>
where
    F: Fn(u64) -> Result<bool> + Sync + Send,
{
    mc.check()?;
    let hits = try_map_indexed(mc.mode, mc.trials, event)?;
    ProbabilityEstimate::new(hits.iter().filter(|&&b| b).count() as u64, mc.trials, bound)
}

/// A Bernoulli(`q`) verdict source keyed by `(seed, trial)`, for validating
/// the estimators themselves.
pub fn mock_verdict(q: f64, seed: u64, trial: u64) -> bool {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(trial);
    rng.random::<f64>() < q
}

fn check_cube(params: &MsaParams, cube: &CubeSpec) -> Result<()> {
    params.validate()?;
    if cube.particles() > params.total_particles {
        return Err(Error::InvalidParameter(format!(
            "{}-particle cube in a {}-particle system",
            cube.particles(),
            params.total_particles
        )));
    }
    Ok(())
}

fn singular_at(ctx: &HamiltonianContext, e: f64, params: &MsaParams) -> Result<bool> {
    Ok(!CubeSpectrum::new(ctx)?.verdict(e, params)?.nonsingular)
}

/// Fraction of realizations in which `cube` is `(E, m)`-singular, against
/// `L^{-2p 4^{N-n}} / 2`.
pub fn estimate_singularity_probability(
    model: &ModelSpec,
    params: &MsaParams,
    cube: &CubeSpec,
    e: f64,
    mc: &McSettings,
) -> Result<EstimateRecord> {
    check_cube(params, cube)?;
    let bound = params.singularity_bound(cube.half_side(), cube.particles());
    let est = estimate_frequency(mc, bound, |t| singular_at(&model.realize(cube, mc.seed, t)?, e, params))?;
    let mut rec = EstimateRecord::new("singularity", cube, model, params, est, mc.seed);
    rec.energy = Some(e);
    Ok(rec)
}

/// Smallest window holding the sites of both cubes.
pub fn union_window(a: &CubeSpec, b: &CubeSpec) -> SiteWindow {
    let (wa, wb) = (field_window(a), field_window(b));
    SiteWindow {
        lo: wa.lo.iter().zip(&wb.lo).map(|(x, y)| *x.min(y)).collect(),
        hi: wa.hi.iter().zip(&wb.hi).map(|(x, y)| *x.max(y)).collect(),
    }
}

/// One realization of the disorder seen by both cubes.
pub fn realize_pair(
    model: &ModelSpec,
    a: &CubeSpec,
    b: &CubeSpec,
    seed: u64,
    index: u64,
) -> Result<(HamiltonianContext, HamiltonianContext)> {
    model.validate()?;
    let field: DisorderField = sample_disorder(&model.disorder, &union_window(a, b), seed, index)?;
    Ok((model.with_field(a, field.clone())?, model.with_field(b, field)?))
}

fn pair_type(a: &CubeSpec, b: &CubeSpec, r0: i64) -> String {
    let tag = |c: &CubeSpec| match classify_interactivity(c, r0) {
        Interactivity::Full => "fi",
        Interactivity::Partial => "pi",
    };
    let (x, y) = (tag(a), tag(b));
    if x == y {
        format!("{x}-{y}")
    } else {
        "mixed".into()
    }
}

fn pair_grid(interval: (f64, f64), spacing: f64) -> Result<Vec<f64>> {
    energy_grid(interval.0, interval.1, spacing)
}

/// Fraction of realizations in which both cubes of a separable pair are
/// `(E, m)`-singular for some `E` on a grid over `interval`.
pub fn estimate_pair_probability(
    model: &ModelSpec,
    params: &MsaParams,
    a: &CubeSpec,
    b: &CubeSpec,
    interval: (f64, f64),
    spacing: f64,
    mc: &McSettings,
) -> Result<EstimateRecord> {
    check_cube(params, a)?;
    if a.half_side() != b.half_side() || a.particles() != b.particles() {
        return Err(Error::DimensionMismatch("pair cubes differ in size or particle number".into()));
    }
    let sep = is_separable_pair(a, b, params.total_particles)?;
    if !sep.separable {
        return Err(Error::Precondition(format!("cubes at distance {} are not separable", sep.distance)));
    }
    let grid = pair_grid(interval, spacing)?;
    mc.check()?;
    let rows = try_map_indexed(mc.mode, mc.trials, |t| {
        let (ca, cb) = realize_pair(model, a, b, mc.seed, t)?;
        let (sa, sb) = (CubeSpectrum::new(&ca)?, CubeSpectrum::new(&cb)?);
        let (mut any_a, mut any_b, mut both) = (false, false, false);
        for &e in &grid {
            let x = !sa.verdict(e, params)?.nonsingular;
            let y = !sb.verdict(e, params)?.nonsingular;
            any_a |= x;
            any_b |= y;
            both |= x && y;
        }
        Ok::<_, Error>((any_a, any_b, both))
    })?;
    let count = |f: fn(&(bool, bool, bool)) -> bool| rows.iter().filter(|r| f(r)).count() as u64;
    let est = ProbabilityEstimate::new(count(|r| r.2), mc.trials, params.pair_bound(a.half_side(), a.particles()))?;
    let mut rec = EstimateRecord::new("pair_singularity", a, model, params, est, mc.seed);
    rec.interval = Some(interval);
    rec.grid_points = Some(grid.len());
    rec.pair_type = Some(pair_type(a, b, model.interaction.r0()));
    rec.marginals = Some((count(|r| r.0), count(|r| r.1)));
    rec.flags.push(GRID_NOTE.into());
    Ok(rec)
}

fn wegner_flags(model: &ModelSpec, params: &MsaParams) -> Vec<String> {
    let check = model.disorder.validate_log_holder(params.p, params.total_particles as u32, params.dim as u32);
    if check.valid {
        Vec::new()
    } else {
        vec![OUTSIDE_WEGNER.into()]
    }
}

/// Frequency of `cube` failing to be `E`-CNR, against `L^{-p 4^{N-n}}`.
pub fn estimate_wegner(
    model: &ModelSpec,
    params: &MsaParams,
    cube: &CubeSpec,
    e: f64,
    mc: &McSettings,
) -> Result<EstimateRecord> {
    check_cube(params, cube)?;
    let bound = params.wegner_bound(cube.half_side(), cube.particles());
    let est = estimate_frequency(mc, bound, |t| {
        Ok(!CnrScan::new(&model.realize(cube, mc.seed, t)?)?.check(e)?.cnr)
    })?;
    let mut rec = EstimateRecord::new("wegner", cube, model, params, est, mc.seed);
    rec.energy = Some(e);
    rec.flags = wegner_flags(model, params);
    Ok(rec)
}

/// Frequency of neither cube being `E`-CNR for some `E` on the grid.
pub fn estimate_wegner_pair(
    model: &ModelSpec,
    params: &MsaParams,
    a: &CubeSpec,
    b: &CubeSpec,
    interval: (f64, f64),
    spacing: f64,
    mc: &McSettings,
) -> Result<EstimateRecord> {
    check_cube(params, a)?;
    if a.half_side() != b.half_side() || a.particles() != b.particles() {
        return Err(Error::DimensionMismatch("pair cubes differ in size or particle number".into()));
    }
    let grid = pair_grid(interval, spacing)?;
    let bound = params.wegner_bound(a.half_side(), a.particles());
    let est = estimate_frequency(mc, bound, |t| {
        let (ca, cb) = realize_pair(model, a, b, mc.seed, t)?;
        let (sa, sb) = (CnrScan::new(&ca)?, CnrScan::new(&cb)?);
        for &e in &grid {
            if !sa.check(e)?.cnr && !sb.check(e)?.cnr {
                return Ok(true);
            }
        }
        Ok(false)
    })?;
    let mut rec = EstimateRecord::new("wegner_pair", a, model, params, est, mc.seed);
    rec.interval = Some(interval);
    rec.grid_points = Some(grid.len());
    rec.pair_type = Some(if is_separable_pair(a, b, params.total_particles)?.separable {
        "separable".into()
    } else {
        "non-separable".into()
    });
    rec.flags = wegner_flags(model, params);
    rec.flags.push(GRID_NOTE.into());
    Ok(rec)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct WeakRow {
    pub h: f64,
    pub energy: f64,
    /// Singularity at the nominal mass.
    pub estimate: ProbabilityEstimate,
    /// Singularity at half the nominal mass.
    pub relaxed: ProbabilityEstimate,
    pub resolvent_checks: u64,
    pub resolvent_violations: u64,
    /// Largest `||G_0 - G_h|| / (|h| ||U|| ||G_0|| ||G_h||)` seen.
    pub worst_ratio: f64,
    pub within_h0: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct WeakScan {
    pub rows: Vec<WeakRow>,
    /// Largest `|h|` up to which every row at half mass stays within the
    /// upper confidence limit of the `h = 0` estimate.
    pub h_star: f64,
    pub seed: u64,
    pub trials: u64,
}

struct TrialOutcome {
    singular: Vec<bool>,
    relaxed: Vec<bool>,
    ratios: Vec<Option<f64>>,
}

const RESOLVENT_TOL: f64 = 1e-9;

fn resolvent_ratio(g0: &EigenDecomposition, gh: &EigenDecomposition, e: f64, h: f64, u_norm: f64) -> Result<Option<f64>> {
    let (a, b) = match (resolvent(g0, e), resolvent(gh, e)) {
        (Ok(a), Ok(b)) => (a, b),
        (Err(Error::Resonant { .. }), _) | (_, Err(Error::Resonant { .. })) => return Ok(None),
        (Err(err), _) | (_, Err(err)) => return Err(err),
    };
    let diff = &a - &b;
    let norm = eigenvalues_dense(diff.as_ref())?.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    let bound = h.abs() * u_norm / (g0.dist_to_spectrum(e) * gh.dist_to_spectrum(e));
    if bound == 0.0 {
        return Ok(Some(if norm <= RESOLVENT_TOL { 0.0 } else { f64::INFINITY }));
    }
    Ok(Some(norm / bound))
}

/// Singularity frequency along `h_grid` on common realizations, with the
/// empirical threshold `h*` and the per-realization resolvent identity check.
pub fn weak_interaction_scan(
    model: &ModelSpec,
    params: &MsaParams,
    cube: &CubeSpec,
    h_grid: &[f64],
    e_grid: &[f64],
    mc: &McSettings,
) -> Result<WeakScan> {
    check_cube(params, cube)?;
    mc.check()?;
    if !h_grid.contains(&0.0) {
        return Err(Error::InvalidParameter("the coupling grid must contain 0".into()));
    }
    if e_grid.is_empty() {
        return Err(Error::InvalidParameter("empty energy grid".into()));
    }
    let relaxed_params = params.with_mass(params.m / 2.0);
    let cells = h_grid.len() * e_grid.len();
    let outcomes = try_map_indexed(mc.mode, mc.trials, |t| {
        let base = model.realize(cube, mc.seed, t)?;
        let u = {
            let one = base.with_coupling(1.0).assemble()?;
            let zero = base.with_coupling(0.0).assemble()?;
            one.diagonal().iter().zip(zero.diagonal()).fold(0.0f64, |m, (a, b)| m.max((a - b).abs()))
        };
        let zero = CubeSpectrum::new(&base.with_coupling(0.0))?;
        let mut out = TrialOutcome {
            singular: Vec::with_capacity(cells),
            relaxed: Vec::with_capacity(cells),
            ratios: Vec::with_capacity(cells),
        };
        for &h in h_grid {
            let spec = if h == 0.0 { zero.clone() } else { CubeSpectrum::new(&base.with_coupling(h))? };
            for &e in e_grid {
                out.singular.push(!spec.verdict(e, params)?.nonsingular);
                out.relaxed.push(!spec.verdict(e, &relaxed_params)?.nonsingular);
                out.ratios.push(resolvent_ratio(zero.eigen(), spec.eigen(), e, h, u)?);
            }
        }
        Ok::<_, Error>(out)
    })?;
    let bound = params.singularity_bound(cube.half_side(), cube.particles());
    let mut rows = Vec::with_capacity(cells);
    for (hi, &h) in h_grid.iter().enumerate() {
        for (ei, &e) in e_grid.iter().enumerate() {
            let k = hi * e_grid.len() + ei;
            let s = outcomes.iter().filter(|o| o.singular[k]).count() as u64;
            let r = outcomes.iter().filter(|o| o.relaxed[k]).count() as u64;
            let ratios: Vec<f64> = outcomes.iter().filter_map(|o| o.ratios[k]).collect();
            rows.push(WeakRow {
                h,
                energy: e,
                estimate: ProbabilityEstimate::new(s, mc.trials, bound)?,
                relaxed: ProbabilityEstimate::new(r, mc.trials, bound)?,
                resolvent_checks: ratios.len() as u64,
                resolvent_violations: ratios.iter().filter(|&&q| q > 1.0 + RESOLVENT_TOL).count() as u64,
                worst_ratio: ratios.iter().fold(0.0f64, |m, &q| m.max(q)),
                within_h0: false,
            });
        }
    }
    let reference: Vec<f64> = e_grid
        .iter()
        .enumerate()
        .map(|(ei, _)| {
            let h0 = h_grid.iter().position(|&h| h == 0.0).expect("checked above");
            rows[h0 * e_grid.len() + ei].estimate.ci_hi
        })
        .collect();
    for (k, row) in rows.iter_mut().enumerate() {
        row.within_h0 = row.relaxed.point <= reference[k % e_grid.len()];
    }
    let mut order: Vec<usize> = (0..h_grid.len()).collect();
    order.sort_by(|&i, &j| h_grid[i].abs().total_cmp(&h_grid[j].abs()));
    let mut h_star = 0.0;
    for &hi in &order {
        let ok = (0..e_grid.len()).all(|ei| rows[hi * e_grid.len() + ei].within_h0);
        if !ok {
            break;
        }
        h_star = h_grid[hi].abs();
    }
    Ok(WeakScan { rows, h_star, seed: mc.seed, trials: mc.trials })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DecayRow {
    #[serde(rename = "L")]
    pub l: i64,
    pub mean_norm: f64,
    pub ci_lo: f64,
    pub ci_hi: f64,
    pub std: f64,
    pub trials: u64,
    /// Realizations with `E` in the spectrum, left out of the mean.
    pub skipped: u64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DecayCurve {
    pub energy: f64,
    pub rows: Vec<DecayRow>,
    /// Fitted `mu` in `mean_norm ~ e^{-mu L}`.
    pub rate: f64,
    pub rate_se: f64,
    pub rate_ci: (f64, f64),
    pub decaying: bool,
    pub seed: u64,
}

/// Below this fitted rate the curve is reported as not decaying.
pub const MIN_DECAY_RATE: f64 = 0.05;

/// Mean of `||1_out G(E) 1_int||` over realizations of cubes around
/// `center`, one row per half-side, and the exponential rate fitted to it.
pub fn block_norm_decay_curve(
    model: &ModelSpec,
    center: &ParticlePoint,
    sides: &[i64],
    e: f64,
    mc: &McSettings,
) -> Result<DecayCurve> {
    mc.check()?;
    let mut distinct = sides.to_vec();
    distinct.sort_unstable();
    distinct.dedup();
    if distinct.len() < 2 {
        return Err(Error::InvalidParameter("a decay fit needs at least two distinct half-sides".into()));
    }
    let mut rows = Vec::with_capacity(sides.len());
    for &l in sides {
        let cube = CubeSpec::new(center.clone(), l)?;
        cube.regions()?;
        let norms = try_map_indexed(mc.mode, mc.trials, |t| {
            let ctx = model.realize(&cube, mc.seed, t)?;
            let spec = CubeSpectrum::new(&ctx)?;
            let v = spec.verdict_with_mass(e, 1.0, cube.particles())?;
            Ok::<_, Error>(v.block_norm)
        })?;
        let kept: Vec<f64> = norms.iter().flatten().copied().collect();
        if kept.is_empty() {
            return Err(Error::Resonant { energy: e, distance: 0.0 });
        }
        let (mu, sd) = (mean(&kept), std_dev(&kept));
        let half = Z95 * sd / (kept.len() as f64).sqrt();
        rows.push(DecayRow {
            l,
            mean_norm: mu,
            ci_lo: (mu - half).max(0.0),
            ci_hi: mu + half,
            std: sd,
            trials: mc.trials,
            skipped: mc.trials - kept.len() as u64,
        });
    }
    let (rate, rate_se) = fit_rate(&rows)?;
    let rate_ci = (rate - Z95 * rate_se, rate + Z95 * rate_se);
    Ok(DecayCurve {
        energy: e,
        decaying: rate >= MIN_DECAY_RATE && rate_ci.0 > 0.0,
        rows,
        rate,
        rate_se,
        rate_ci,
        seed: mc.seed,
    })
}

/// Weighted least squares of `ln mean` against `L`; the weights come from
/// the delta method, `var ln X ~ var X / X^2`.
fn fit_rate(rows: &[DecayRow]) -> Result<(f64, f64)> {
    let x: Vec<f64> = rows.iter().map(|r| r.l as f64).collect();
    let y: Vec<f64> = rows.iter().map(|r| r.mean_norm.ln()).collect();
    let w: Vec<f64> = rows
        .iter()
        .map(|r| {
            let kept = (r.trials - r.skipped).max(1) as f64;
            let rel = (r.std / kept.sqrt() / r.mean_norm).max(1e-6);
            1.0 / (rel * rel)
        })
        .collect();
    let sw: f64 = w.iter().sum();
    let mx = x.iter().zip(&w).map(|(a, b)| a * b).sum::<f64>() / sw;
    let my = y.iter().zip(&w).map(|(a, b)| a * b).sum::<f64>() / sw;
    let sxx: f64 = x.iter().zip(&w).map(|(a, b)| b * (a - mx).powi(2)).sum();
    let sxy: f64 = x.iter().zip(&y).zip(&w).map(|((a, c), b)| b * (a - mx) * (c - my)).sum();
    if sxx == 0.0 {
        return Err(Error::InvalidParameter("all half-sides coincide".into()));
    }
    let slope = sxy / sxx;
    let mut se = (1.0 / sxx).sqrt();
    if rows.len() > 2 {
        // Inflate by the scatter about the line when it exceeds the sampling noise.
        let ols = linear_fit(&x, &y)?;
        se = se.max(ols.slope_se);
    }
    Ok((-slope, se))
}

/// `m* = 2^{-N-1} mu` from a fitted single-particle decay rate.
pub fn mass_from_rate(rate: f64, total_particles: usize) -> f64 {
    rate * 0.5f64.powi(total_particles as i32 + 1)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{DisorderSpec, InteractionSpec};

    fn strong(h: f64) -> ModelSpec {
        ModelSpec::new(DisorderSpec::Uniform { low: 0.0, high: 40.0 }, InteractionSpec::bump(1, h).unwrap())
    }

    #[test]
    fn zero_trials_rejected() {
        let params = MsaParams::new(0.2, 8, 1, 1, 0.0);
        let cube = CubeSpec::line(&[0], 8).unwrap();
        let mc = McSettings::new(0, 1);
        assert!(estimate_singularity_probability(&strong(0.0), &params, &cube, 20.0, &mc).is_err());
        assert!(estimate_wegner(&strong(0.0), &params, &cube, 20.0, &mc).is_err());
    }

    #[test]
    fn mocked_source_converges() {
        let mc = McSettings::new(4000, 3);
        let est = estimate_frequency(&mc, 1.0, |t| Ok(mock_verdict(0.3, 3, t))).unwrap();
        assert!(est.ci_lo <= 0.3 && 0.3 <= est.ci_hi);
    }

    #[test]
    fn modes_give_identical_records() {
        let params = MsaParams::new(0.2, 8, 1, 1, 0.0);
        let cube = CubeSpec::line(&[0], 8).unwrap();
        let a = McSettings::new(40, 9).with_mode(ExecMode::Sequential);
        let b = a.with_mode(ExecMode::Parallel);
        let ra = estimate_singularity_probability(&strong(0.0), &params, &cube, 20.0, &a).unwrap();
        let rb = estimate_singularity_probability(&strong(0.0), &params, &cube, 20.0, &b).unwrap();
        assert_eq!(ra, rb);
    }

    #[test]
    fn non_separable_pair_rejected() {
        let params = MsaParams::new(0.2, 8, 2, 2, 0.0);
        let a = CubeSpec::line(&[0, 0], 4).unwrap();
        let b = CubeSpec::line(&[3, 3], 4).unwrap();
        let err = estimate_pair_probability(&strong(0.0), &params, &a, &b, (0.0, 0.0), 1.0, &McSettings::new(2, 1));
        assert!(matches!(err, Err(Error::Precondition(_))));
    }

    #[test]
    fn bernoulli_wegner_flagged() {
        let model = ModelSpec::new(
            DisorderSpec::Bernoulli { p: 0.5, levels: [0.0, 1.0] },
            InteractionSpec::bump(1, 0.0).unwrap(),
        );
        let params = MsaParams::new(0.2, 8, 1, 1, 0.0);
        let cube = CubeSpec::line(&[0], 5).unwrap();
        let rec = estimate_wegner(&model, &params, &cube, 2.0, &McSettings::new(5, 2)).unwrap();
        assert!(rec.flags.iter().any(|f| f == OUTSIDE_WEGNER));
        let rec = estimate_wegner(&strong(0.0), &params, &cube, 2.0, &McSettings::new(5, 2)).unwrap();
        assert!(rec.flags.is_empty());
    }

    #[test]
    fn scan_needs_zero_coupling() {
        let params = MsaParams::new(0.2, 6, 2, 2, 0.0);
        let cube = CubeSpec::line(&[0, 20], 6).unwrap();
        let err = weak_interaction_scan(&strong(0.0), &params, &cube, &[0.1], &[20.0], &McSettings::new(2, 1));
        assert!(err.is_err());
    }

    #[test]
    fn scan_zero_row_matches_estimator() {
        let params = MsaParams::new(0.2, 6, 2, 2, 0.0);
        let cube = CubeSpec::line(&[0, 2], 6).unwrap();
        let mc = McSettings::new(12, 5);
        let scan = weak_interaction_scan(&strong(0.7), &params, &cube, &[0.0, 0.3], &[40.0], &mc).unwrap();
        let direct = estimate_singularity_probability(&strong(0.0), &params, &cube, 40.0, &mc).unwrap();
        assert_eq!(scan.rows[0].estimate, direct.estimate);
        assert!(scan.rows.iter().all(|r| r.resolvent_violations == 0));
        assert!(scan.rows[1].resolvent_checks > 0);
    }

    #[test]
    fn decay_fit_needs_two_sizes() {
        let center = ParticlePoint::line(&[0]);
        let err = block_norm_decay_curve(&strong(0.0), &center, &[8, 8], 20.0, &McSettings::new(2, 1));
        assert!(err.is_err());
    }

    #[test]
    fn mass_formula() {
        assert_eq!(mass_from_rate(0.8, 2), 0.1);
    }
}
