//! Localization observables: eigenfunction decay fits and the moment
//! `||X|^s e^{-itH} P_I 1_K||` computed by spectral time evolution.

use std::collections::BTreeMap;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::exec::try_map_indexed;
use crate::geometry::CubeSpec;
use crate::model::{CubeGrid, HamiltonianContext, ModelSpec};
use crate::msa::McSettings;
use crate::spectral::{decompose_cube, EigenDecomposition, Region};
use crate::stats::{mean, median, std_dev, Z95};
use crate::{Error, Result};

/// Cell amplitudes below this are numerical noise and left out of fits.
pub const AMPLITUDE_FLOOR: f64 = 1e-13;
/// Fitted rates at or below this count as not localized.
pub const LOCALIZED_RATE: f64 = 0.05;
pub const DEFAULT_T_MAX: f64 = 1e3;

/// `psi(t) = V e^{-it Lambda} V^T psi0`.
pub fn evolve_complex(eig: &EigenDecomposition, psi0: &[Complex64], t: f64) -> Result<Vec<Complex64>> {
    let dim = eig.dim();
    if psi0.len() != dim {
        return Err(Error::DimensionMismatch(format!("state of length {} for operator of dimension {dim}", psi0.len())));
    }
    if t == 0.0 {
        return Ok(psi0.to_vec());
    }
    let v = eig.vectors();
    let mut out = vec![Complex64::new(0.0, 0.0); dim];
    for (j, &lambda) in eig.values().iter().enumerate() {
        let mut c = Complex64::new(0.0, 0.0);
        for y in 0..dim {
            c += psi0[y] * v[(y, j)];
        }
        c *= Complex64::from_polar(1.0, -t * lambda);
        for y in 0..dim {
            out[y] += c * v[(y, j)];
        }
    }
    Ok(out)
}

pub fn evolve(eig: &EigenDecomposition, psi0: &[f64], t: f64) -> Result<Vec<Complex64>> {
    let psi: Vec<Complex64> = psi0.iter().map(|&x| Complex64::new(x, 0.0)).collect();
    evolve_complex(eig, &psi, t)
}

/// Indices of the eigenvalues in the closed interval.
pub fn spectral_window(eig: &EigenDecomposition, interval: (f64, f64)) -> Vec<usize> {
    (0..eig.dim()).filter(|&j| (interval.0..=interval.1).contains(&eig.values()[j])).collect()
}

/// Dense `P_I = V_I V_I^T`.
pub fn spectral_projection(eig: &EigenDecomposition, interval: (f64, f64)) -> faer::Mat<f64> {
    let cols = spectral_window(eig, interval);
    let v = eig.vectors();
    faer::Mat::from_fn(eig.dim(), eig.dim(), |a, b| cols.iter().map(|&j| v[(a, j)] * v[(b, j)]).sum())
}

/// `0` followed by `per_decade` log-spaced points per decade from `0.1` up to
/// and including `t_max`.
pub fn log_time_grid(t_max: f64, per_decade: usize) -> Result<Vec<f64>> {
    if !(t_max > 0.0) || per_decade == 0 {
        return Err(Error::InvalidParameter("time grid needs t_max > 0 and at least one point per decade".into()));
    }
    let t_min = 0.1f64.min(t_max);
    let decades = (t_max / t_min).log10();
    let steps = (decades * per_decade as f64).ceil() as usize;
    let mut out = vec![0.0];
    for k in 0..=steps {
        let t = if k == steps { t_max } else { t_min * 10f64.powf(k as f64 / per_decade as f64) };
        if t > *out.last().expect("nonempty") {
            out.push(t);
        }
    }
    Ok(out)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MomentRecord {
    pub s: f64,
    pub interval: (f64, f64),
    /// Number of grid states in `K`.
    pub k_states: usize,
    /// Eigenvalues inside the interval.
    pub projection_rank: usize,
    /// Where `|X|` is measured from.
    pub origin: String,
    pub t_max: f64,
    pub times: Vec<f64>,
    pub series: Vec<f64>,
    /// Maximum of `series`; the supremum over all `t > 0` is not computable.
    pub sup: f64,
}

/// `max_{x in K} ||X|^s e^{-itH} P_I delta_x||` on each time of the grid,
/// with `|X|` the max-norm distance from the cube center in lattice units.
pub fn moment_observable(
    eig: &EigenDecomposition,
    grid: &CubeGrid,
    s: f64,
    interval: (f64, f64),
    k: &[usize],
    times: &[f64],
) -> Result<MomentRecord> {
    if !(s > 0.0) {
        return Err(Error::InvalidParameter("moment exponent must be positive".into()));
    }
    if k.is_empty() {
        return Err(Error::EmptyIndexSet);
    }
    let dim = eig.dim();
    if grid.states() != Some(dim) {
        return Err(Error::DimensionMismatch("grid and operator differ in size".into()));
    }
    if let Some(&bad) = k.iter().find(|&&x| x >= dim) {
        return Err(Error::DimensionMismatch(format!("state {bad} out of range")));
    }
    let r = grid.refinement() as f64;
    let weights: Vec<f64> = (0..dim).map(|y| (grid.distance_from_center(&grid.positions(y)) as f64 / r).powf(s)).collect();
    let cols = spectral_window(eig, interval);
    let v = eig.vectors();
    let mut series = Vec::with_capacity(times.len());
    let (mut re, mut im) = (vec![0.0; dim], vec![0.0; dim]);
    for &t in times {
        let phases: Vec<(f64, f64)> = cols.iter().map(|&j| (t * eig.values()[j]).sin_cos()).collect();
        let mut worst = 0.0f64;
        for &x in k {
            re.fill(0.0);
            im.fill(0.0);
            for (q, &j) in cols.iter().enumerate() {
                let c = v[(x, j)];
                let (sin, cos) = phases[q];
                let (a, b) = (c * cos, -c * sin);
                for y in 0..dim {
                    let w = v[(y, j)];
                    re[y] += a * w;
                    im[y] += b * w;
                }
            }
            let norm2: f64 = (0..dim).map(|y| weights[y] * weights[y] * (re[y] * re[y] + im[y] * im[y])).sum();
            worst = worst.max(norm2.sqrt());
        }
        series.push(worst);
    }
    let sup = series.iter().fold(0.0f64, |m, &x| m.max(x));
    Ok(MomentRecord {
        s,
        interval,
        k_states: k.len(),
        projection_rank: cols.len(),
        origin: "cube center".into(),
        t_max: times.iter().fold(0.0f64, |m, &x| m.max(x)),
        times: times.to_vec(),
        series,
        sup,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MomentEstimate {
    pub trials: u64,
    pub seed: u64,
    pub t_max: f64,
    /// Sample mean of the per-realization grid suprema.
    pub mean_sup: f64,
    pub ci_lo: f64,
    pub ci_hi: f64,
    pub times: Vec<f64>,
    pub mean_series: Vec<f64>,
}

/// Disorder average of [`moment_observable`] with `K` given as a region.
pub fn moment_monte_carlo(
    model: &ModelSpec,
    cube: &CubeSpec,
    s: f64,
    interval: (f64, f64),
    k: &Region,
    times: &[f64],
    mc: &McSettings,
) -> Result<MomentEstimate> {
    if mc.trials == 0 {
        return Err(Error::InvalidParameter("at least one trial is required".into()));
    }
    let records = try_map_indexed(mc.mode, mc.trials, |t| {
        let ctx = model.realize(cube, mc.seed, t)?;
        let grid = ctx.grid();
        let states = k.states(&grid)?;
        moment_observable(&decompose_cube(&ctx)?, &grid, s, interval, &states, times)
    })?;
    let sups: Vec<f64> = records.iter().map(|r| r.sup).collect();
    let (mu, half) = (mean(&sups), Z95 * std_dev(&sups) / (sups.len() as f64).sqrt());
    let mean_series = (0..times.len())
        .map(|i| records.iter().map(|r| r.series[i]).sum::<f64>() / records.len() as f64)
        .collect();
    Ok(MomentEstimate {
        trials: mc.trials,
        seed: mc.seed,
        t_max: times.iter().fold(0.0f64, |m, &x| m.max(x)),
        mean_sup: mu,
        ci_lo: (mu - half).max(0.0),
        ci_hi: mu + half,
        times: times.to_vec(),
        mean_series,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DecayFit {
    /// Lattice cell the distances are measured from.
    pub center: Vec<i64>,
    /// Fitted `m` in `||1_{C_1(x)} psi|| ~ C e^{-m |x - center|}`.
    pub rate: f64,
    pub prefactor: f64,
    /// Root mean square residual of the log-amplitude fit.
    pub residual: f64,
    /// Smallest and largest distance used.
    pub window: (i64, i64),
    pub points: usize,
    pub degenerate: bool,
    pub localized: bool,
}

/// Mass of `psi` per unit lattice cell of the configuration space.
fn cell_masses(psi: &[f64], grid: &CubeGrid) -> BTreeMap<Vec<i64>, f64> {
    let mut cells = BTreeMap::new();
    let mut pos = vec![0i64; grid.shape().len()];
    for (s, &a) in psi.iter().enumerate() {
        grid.position(s, &mut pos);
        let cell: Vec<i64> = pos.iter().map(|&p| grid.site_of(p)).collect();
        *cells.entry(cell).or_insert(0.0) += a * a;
    }
    cells
}

/// Least squares of `ln ||1_{C_1(x)} psi||` against `|x - center|`; the
/// center is the heaviest cell unless given.
pub fn decay_fit(psi: &[f64], grid: &CubeGrid, center: Option<&[i64]>) -> Result<DecayFit> {
    if grid.states() != Some(psi.len()) {
        return Err(Error::DimensionMismatch("state and grid differ in size".into()));
    }
    let norm = psi.iter().map(|a| a * a).sum::<f64>().sqrt();
    if (norm - 1.0).abs() > 1e-8 {
        return Err(Error::InvalidParameter(format!("state has norm {norm}, expected 1")));
    }
    let cells = cell_masses(psi, grid);
    let center: Vec<i64> = match center {
        Some(c) => c.to_vec(),
        None => cells
            .iter()
            .max_by(|a, b| a.1.total_cmp(b.1))
            .map(|(c, _)| c.clone())
            .expect("nonempty grid"),
    };
    let mut points: Vec<(f64, f64)> = Vec::new();
    let mut window = (i64::MAX, i64::MIN);
    for (cell, &mass) in &cells {
        let amp = mass.sqrt();
        if amp <= AMPLITUDE_FLOOR {
            continue;
        }
        let dist = cell.iter().zip(&center).map(|(a, b)| (a - b).abs()).max().unwrap_or(0);
        window = (window.0.min(dist), window.1.max(dist));
        points.push((dist as f64, amp.ln()));
    }
    let degenerate = points.len() < 2 || window.0 == window.1;
    if degenerate {
        return Ok(DecayFit {
            center,
            rate: 0.0,
            prefactor: points.first().map_or(0.0, |p| p.1.exp()),
            residual: 0.0,
            window: if points.is_empty() { (0, 0) } else { window },
            points: points.len(),
            degenerate: true,
            localized: false,
        });
    }
    let x: Vec<f64> = points.iter().map(|p| p.0).collect();
    let y: Vec<f64> = points.iter().map(|p| p.1).collect();
    let fit = crate::stats::linear_fit(&x, &y)?;
    Ok(DecayFit {
        center,
        rate: -fit.slope,
        prefactor: fit.intercept.exp(),
        residual: fit.residual,
        window,
        points: points.len(),
        degenerate: false,
        localized: -fit.slope > LOCALIZED_RATE,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LocalizationSummary {
    pub fits: Vec<DecayFit>,
    /// Median fitted rate over non-degenerate fits, the empirical `mu`.
    pub median_rate: f64,
    pub fraction_fitted: f64,
    pub delocalized: bool,
    /// Mean over eigenfunctions of `||1_shell phi|| ||1_int phi||`.
    pub mean_boundary_mass: f64,
    /// `e^{-mu L}` at the fitted median rate.
    pub predicted_boundary_mass: f64,
}

/// Decay fits for every eigenfunction of the cube operator.
pub fn localization_report(ctx: &HamiltonianContext) -> Result<LocalizationSummary> {
    let eig = decompose_cube(ctx)?;
    let grid = ctx.grid();
    let cube = ctx.cube();
    let fits: Vec<DecayFit> =
        (0..eig.dim()).map(|j| decay_fit(&eig.vector(j), &grid, None)).collect::<Result<_>>()?;
    let rates: Vec<f64> = fits.iter().filter(|f| !f.degenerate).map(|f| f.rate).collect();
    let fitted = rates.len() as f64 / fits.len().max(1) as f64;
    let median_rate = if rates.is_empty() { 0.0 } else { median(&rates) };
    let (shell, interior) = (Region::Shell(cube.clone()).states(&grid)?, Region::Interior(cube.clone()).states(&grid)?);
    let mass = |phi: &[f64], set: &[usize]| set.iter().map(|&s| phi[s] * phi[s]).sum::<f64>().sqrt();
    let products: Vec<f64> = (0..eig.dim())
        .map(|j| {
            let phi = eig.vector(j);
            mass(&phi, &shell) * mass(&phi, &interior)
        })
        .collect();
    Ok(LocalizationSummary {
        fits,
        median_rate,
        fraction_fitted: fitted,
        delocalized: median_rate <= LOCALIZED_RATE,
        mean_boundary_mass: mean(&products),
        predicted_boundary_mass: (-median_rate * cube.half_side() as f64).exp(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{DisorderField, DisorderSpec, InteractionSpec};
    use crate::spectral::eigendecompose;

    fn two_level() -> EigenDecomposition {
        EigenDecomposition::from_parts(vec![1.0, 3.0], faer::Mat::identity(2, 2)).unwrap()
    }

    #[test]
    fn evolution_basics() {
        let eig = two_level();
        let psi0 = [0.6, 0.8];
        assert_eq!(evolve(&eig, &psi0, 0.0).unwrap(), vec![Complex64::new(0.6, 0.0), Complex64::new(0.8, 0.0)]);
        let t = 0.37;
        let psi = evolve(&eig, &psi0, t).unwrap();
        assert!((psi[0] - 0.6 * Complex64::from_polar(1.0, -t)).norm() < 1e-15);
        assert!((psi[1] - 0.8 * Complex64::from_polar(1.0, -3.0 * t)).norm() < 1e-15);
        assert!(evolve(&eig, &[1.0], 1.0).is_err());
    }

    #[test]
    fn time_grid_shape() {
        let g = log_time_grid(1000.0, 4).unwrap();
        assert_eq!(g[0], 0.0);
        assert_eq!(*g.last().unwrap(), 1000.0);
        assert!(g.windows(2).all(|w| w[0] < w[1]));
        assert_eq!(g.len(), 18);
    }

    fn free_line(l: i64) -> HamiltonianContext {
        let model = ModelSpec::new(DisorderSpec::Uniform { low: 0.0, high: 0.0 }, InteractionSpec::bump(1, 0.0).unwrap());
        let cube = CubeSpec::line(&[0], l).unwrap();
        model.with_field(&cube, DisorderField::constant(crate::model::field_window(&cube), 0.0)).unwrap()
    }

    #[test]
    fn empty_projection_and_origin() {
        let ctx = free_line(8);
        let eig = eigendecompose(&ctx.assemble().unwrap()).unwrap();
        let grid = ctx.grid();
        let origin = grid.state_of(&[0]).unwrap();
        let rec = moment_observable(&eig, &grid, 1.0, (-10.0, -5.0), &[origin, 3], &[0.0, 1.0]).unwrap();
        assert_eq!(rec.projection_rank, 0);
        assert!(rec.series.iter().all(|&x| x == 0.0));
        let rec = moment_observable(&eig, &grid, 1.0, (-1.0, 10.0), &[origin], &[0.0]).unwrap();
        assert!(rec.sup < 1e-12);
        let edge = grid.state_of(&[5]).unwrap();
        let rec = moment_observable(&eig, &grid, 2.0, (-1.0, 10.0), &[edge], &[0.0]).unwrap();
        assert!((rec.sup - 25.0).abs() < 1e-10);
        assert!(moment_observable(&eig, &grid, 1.0, (-1.0, 10.0), &[], &[0.0]).is_err());
    }

    #[test]
    fn synthetic_exponential() {
        let ctx = free_line(64);
        let grid = ctx.grid();
        let dim = grid.states().unwrap();
        let mut psi: Vec<f64> = (0..dim).map(|s| (-0.7 * grid.positions(s)[0].abs() as f64).exp()).collect();
        let n = psi.iter().map(|a| a * a).sum::<f64>().sqrt();
        psi.iter_mut().for_each(|a| *a /= n);
        let fit = decay_fit(&psi, &grid, None).unwrap();
        assert!((fit.rate - 0.7).abs() < 0.02);
        assert_eq!(fit.center, vec![0]);
        assert!(fit.localized);
    }

    #[test]
    fn flat_and_delta_states() {
        let ctx = free_line(16);
        let grid = ctx.grid();
        let dim = grid.states().unwrap();
        let flat = vec![1.0 / (dim as f64).sqrt(); dim];
        let fit = decay_fit(&flat, &grid, Some(&[0])).unwrap();
        assert!(fit.rate.abs() < 1e-10 && !fit.localized);
        let mut delta = vec![0.0; dim];
        delta[4] = 1.0;
        assert!(decay_fit(&delta, &grid, None).unwrap().degenerate);
    }
}
