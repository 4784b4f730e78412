use std::collections::BTreeMap;
use std::fs;

use mpmsa::dynamics::{localization_report, log_time_grid, moment_observable, MomentRecord};
use mpmsa::exec::{try_map_indexed, ExecMode};
use mpmsa::geometry::{suites, CubeSpec, ParticlePoint};
use mpmsa::model::ModelSpec;
use mpmsa::msa::{
    block_norm_decay_curve, estimate_pair_probability, estimate_singularity_probability, estimate_wegner,
    mass_from_rate, scale_sequence, variable_energy_interval, weak_interaction_scan, DecayCurve, EstimateRecord,
    McSettings,
};
use mpmsa::spectral::{decompose_cube, Region};
use serde::Serialize;
use serde_json::Value;

use crate::config::ExperimentConfig;
use crate::output::{num, OutputDir};
use crate::{CliError, Command};

pub fn dispatch(cmd: &Command, cfg: &ExperimentConfig, out: &mut OutputDir, notes: &mut Vec<String>) -> Result<(), CliError> {
    match cmd {
        Command::GeometryCheck { .. } => geometry_check(cfg, out),
        Command::Spectrum { half_side, realization } => spectrum(cfg, out, *half_side, *realization),
        Command::Wegner { .. } => wegner(cfg, out, notes),
        Command::MsaRun { .. } => msa_run(cfg, out, notes),
        Command::WeakintScan { .. } => weakint_scan(cfg, out, notes),
        Command::Dynamics { .. } => dynamics(cfg, out, notes),
        Command::Report => report(out, notes),
    }
}

fn mc(cfg: &ExperimentConfig, trials: u64) -> McSettings {
    McSettings::new(trials, cfg.seed()).with_mode(ExecMode::Parallel)
}

/// Particle `i` at `i * spacing` along the first axis.
pub fn center(particles: usize, dim: usize, spacing: i64) -> ParticlePoint {
    let mut coords = vec![0i64; particles * dim];
    for i in 0..particles {
        coords[i * dim] = i as i64 * spacing;
    }
    ParticlePoint::new(dim, coords).expect("nonempty configuration")
}

fn study_cube(cfg: &ExperimentConfig, half_side: i64) -> Result<CubeSpec, CliError> {
    let m = &cfg.msa;
    Ok(CubeSpec::new(center(m.particles, cfg.model.lattice_dim, m.particle_spacing_grid_units), half_side)?)
}

fn geometry_check(cfg: &ExperimentConfig, out: &mut OutputDir) -> Result<(), CliError> {
    let g = &cfg.geometry;
    let outcomes = suites::run_all(g.max_particles, g.randomized_trials, cfg.seed(), ExecMode::Parallel)?;
    let rows: Vec<Vec<String>> = outcomes
        .iter()
        .map(|o| {
            vec![o.name.clone(), o.cases.to_string(), o.exceptions.to_string(), o.passed().to_string()]
        })
        .collect();
    out.jsonl("geometry", &outcomes)?;
    out.csv("geometry", &["suite", "cases", "exceptions", "passed"], &rows)?;
    let failed: Vec<&str> = outcomes.iter().filter(|o| !o.passed()).map(|o| o.name.as_str()).collect();
    if failed.is_empty() {
        Ok(())
    } else {
        Err(CliError::Failed(format!("suites with exceptions: {}", failed.join(", "))))
    }
}

#[derive(Serialize)]
struct SpectrumRecord {
    op: &'static str,
    #[serde(rename = "L")]
    l: i64,
    n: usize,
    realization: u64,
    seed: u64,
    dim: usize,
    eigenvalues: Vec<f64>,
}

fn spectrum(cfg: &ExperimentConfig, out: &mut OutputDir, half_side: Option<i64>, realization: u64) -> Result<(), CliError> {
    let model = cfg.model()?;
    let cube = study_cube(cfg, half_side.unwrap_or(cfg.msa.l0_grid_units))?;
    let ctx = model.realize(&cube, cfg.seed(), realization)?;
    let values = mpmsa::spectral::cube_eigenvalues(&ctx)?;
    let rows: Vec<Vec<String>> = values.iter().enumerate().map(|(j, v)| vec![j.to_string(), num(*v)]).collect();
    let rec = SpectrumRecord {
        op: "spectrum",
        l: cube.half_side(),
        n: cube.particles(),
        realization,
        seed: cfg.seed(),
        dim: values.len(),
        eigenvalues: values,
    };
    out.jsonl("spectrum", &[rec])?;
    out.csv("spectrum", &["index", "eigenvalue"], &rows)?;
    Ok(())
}

fn estimate_rows(records: &[EstimateRecord]) -> Vec<Vec<String>> {
    records
        .iter()
        .map(|r| {
            let e = &r.estimate;
            vec![
                r.op.clone(),
                r.l.to_string(),
                r.n.to_string(),
                r.total_particles.to_string(),
                num(r.h),
                r.energy.map(num).unwrap_or_default(),
                num(r.mass),
                e.trials.to_string(),
                e.successes.to_string(),
                num(e.point),
                num(e.ci_lo),
                num(e.ci_hi),
                num(e.bound),
                format!("{:?}", e.status).to_lowercase(),
                e.pass.to_string(),
            ]
        })
        .collect()
}

const ESTIMATE_HEADER: [&str; 15] = [
    "op", "L", "n", "N", "h", "energy", "mass", "trials", "successes", "point", "ci_lo", "ci_hi", "bound", "status",
    "pass",
];

fn write_estimates(out: &mut OutputDir, name: &str, records: &[EstimateRecord]) -> Result<(), CliError> {
    out.jsonl(name, records)?;
    out.csv(name, &ESTIMATE_HEADER, &estimate_rows(records))?;
    let mut blocks: BTreeMap<String, Vec<Vec<f64>>> = BTreeMap::new();
    for r in records {
        let e = &r.estimate;
        blocks
            .entry(format!("{} n={}", r.op, r.n))
            .or_default()
            .push(vec![r.l as f64, e.point, e.ci_lo, e.ci_hi, e.bound]);
    }
    out.plot(name, &["L", "point", "ci_lo", "ci_hi", "bound"], &blocks.into_iter().collect::<Vec<_>>())
}

fn skip_too_large<T>(r: mpmsa::Result<T>, what: String, notes: &mut Vec<String>) -> Result<Option<T>, CliError> {
    match r {
        Ok(v) => Ok(Some(v)),
        Err(e @ mpmsa::Error::TooLarge { .. }) => {
            notes.push(format!("skipped {what}: {e}"));
            Ok(None)
        }
        Err(e) => Err(e.into()),
    }
}

fn decay_outputs(out: &mut OutputDir, curve: &DecayCurve) -> Result<(), CliError> {
    out.jsonl("decay", std::slice::from_ref(curve))?;
    let rows: Vec<Vec<f64>> = curve.rows.iter().map(|r| vec![r.l as f64, r.mean_norm, r.ci_lo, r.ci_hi]).collect();
    out.plot("decay_curve", &["L", "mean_norm", "ci_lo", "ci_hi"], &[(format!("E={}", curve.energy), rows)])
}

/// The configured mass, or `2^{-N-1} mu` with `mu` fitted to the
/// single-particle block-norm decay at `E_0`.
fn mass(cfg: &ExperimentConfig, model: &ModelSpec, out: &mut OutputDir, notes: &mut Vec<String>) -> Result<f64, CliError> {
    if let Some(m) = cfg.msa.mass_per_grid_unit {
        return Ok(m);
    }
    let single = ModelSpec { interaction: model.interaction.with_h(0.0), ..model.clone() };
    let curve = block_norm_decay_curve(
        &single,
        &center(1, cfg.model.lattice_dim, 0),
        &cfg.msa.decay_half_sides_grid_units,
        cfg.msa.e0_energy_units,
        &mc(cfg, cfg.msa.trials),
    )?;
    decay_outputs(out, &curve)?;
    if !curve.decaying {
        return Err(CliError::Numerical(format!(
            "fitted single-particle decay rate {} is not positive; configure mass_per_grid_unit",
            curve.rate
        )));
    }
    let m = mass_from_rate(curve.rate, cfg.msa.total_particles);
    notes.push(format!("mass derived from fitted rate {} as {m}", curve.rate));
    Ok(m)
}

fn msa_run(cfg: &ExperimentConfig, out: &mut OutputDir, notes: &mut Vec<String>) -> Result<(), CliError> {
    let model = cfg.model()?;
    let m = mass(cfg, &model, out, notes)?;
    let params = cfg.params(m);
    params.validate()?;
    let (n, nn) = (params.particles, params.total_particles);
    let window = variable_energy_interval(params.e0, params.l0, params.m, params.m1, nn, n)?;
    notes.push(format!("energy window delta={} gamma-dressed delta={}", window.delta, window.delta_gamma));
    let settings = mc(cfg, cfg.msa.trials);
    let mut records = Vec::new();
    for l in scale_sequence(params.l0, cfg.msa.k_max)? {
        let cube = study_cube(cfg, l)?;
        let r = estimate_singularity_probability(&model, &params, &cube, params.e0, &settings);
        if let Some(rec) = skip_too_large(r, format!("singularity at L={l}"), notes)? {
            records.push(rec);
        }
        if cfg.msa.pair {
            let shift = 8 * nn as i64 * l;
            let far: Vec<i64> = cube.center().coords().iter().map(|c| c + shift).collect();
            let b = CubeSpec::new(ParticlePoint::new(cfg.model.lattice_dim, far)?, l)?;
            let r = estimate_pair_probability(&model, &params, &cube, &b, window.interval(), window.delta / 4.0, &settings);
            if let Some(rec) = skip_too_large(r, format!("pair at L={l}"), notes)? {
                records.push(rec);
            }
        }
    }
    write_estimates(out, "msa", &records)
}

fn wegner(cfg: &ExperimentConfig, out: &mut OutputDir, notes: &mut Vec<String>) -> Result<(), CliError> {
    let model = cfg.model()?;
    let params = cfg.params(cfg.msa.mass_per_grid_unit.unwrap_or(1.0));
    let settings = mc(cfg, cfg.msa.trials);
    let mut records = Vec::new();
    for &l in &cfg.msa.wegner_half_sides_grid_units {
        let cube = study_cube(cfg, l)?;
        for &e in &cfg.msa.energies_energy_units {
            let r = estimate_wegner(&model, &params, &cube, e, &settings);
            if let Some(rec) = skip_too_large(r, format!("wegner at L={l}"), notes)? {
                records.push(rec);
            }
        }
    }
    write_estimates(out, "wegner", &records)
}

#[derive(Serialize)]
struct ScanSummary {
    op: &'static str,
    #[serde(rename = "L")]
    l: i64,
    n: usize,
    mass: f64,
    h_star: f64,
    trials: u64,
    seed: u64,
    resolvent_checks: u64,
    resolvent_violations: u64,
}

fn weakint_scan(cfg: &ExperimentConfig, out: &mut OutputDir, notes: &mut Vec<String>) -> Result<(), CliError> {
    let model = cfg.model()?;
    let m = mass(cfg, &model, out, notes)?;
    let params = cfg.params(m);
    let cube = study_cube(cfg, cfg.msa.weak_half_side_grid_units)?;
    let scan = weak_interaction_scan(
        &model,
        &params,
        &cube,
        &cfg.msa.h_grid_energy_units,
        &cfg.msa.energies_energy_units,
        &mc(cfg, cfg.msa.trials),
    )?;
    out.jsonl("weakint", &scan.rows)?;
    let rows: Vec<Vec<String>> = scan
        .rows
        .iter()
        .map(|r| {
            vec![
                num(r.h),
                num(r.energy),
                num(r.estimate.point),
                num(r.estimate.ci_lo),
                num(r.estimate.ci_hi),
                num(r.estimate.bound),
                num(r.relaxed.point),
                r.resolvent_checks.to_string(),
                r.resolvent_violations.to_string(),
                num(r.worst_ratio),
            ]
        })
        .collect();
    out.csv(
        "weakint",
        &["h", "energy", "p_singular", "ci_lo", "ci_hi", "bound", "p_relaxed", "checks", "violations", "worst_ratio"],
        &rows,
    )?;
    let mut blocks: BTreeMap<String, Vec<Vec<f64>>> = BTreeMap::new();
    for r in &scan.rows {
        blocks.entry(format!("E={}", r.energy)).or_default().push(vec![
            r.h,
            r.estimate.point,
            r.estimate.ci_lo,
            r.estimate.ci_hi,
            r.estimate.bound,
        ]);
    }
    out.plot("weakint", &["h", "p_singular", "ci_lo", "ci_hi", "bound"], &blocks.into_iter().collect::<Vec<_>>())?;
    let summary = ScanSummary {
        op: "weakint_summary",
        l: cube.half_side(),
        n: cube.particles(),
        mass: m,
        h_star: scan.h_star,
        trials: scan.trials,
        seed: scan.seed,
        resolvent_checks: scan.rows.iter().map(|r| r.resolvent_checks).sum(),
        resolvent_violations: scan.rows.iter().map(|r| r.resolvent_violations).sum(),
    };
    out.jsonl("weakint_summary", &[summary])?;
    notes.push(format!("empirical h* = {}", scan.h_star));
    Ok(())
}

#[derive(Serialize)]
struct MomentLine {
    op: &'static str,
    realization: u64,
    #[serde(flatten)]
    record: MomentRecord,
}

#[derive(Serialize)]
struct LocalizationLine {
    op: &'static str,
    realization: u64,
    median_rate: f64,
    fraction_fitted: f64,
    delocalized: bool,
    mean_boundary_mass: f64,
    predicted_boundary_mass: f64,
}

fn dynamics(cfg: &ExperimentConfig, out: &mut OutputDir, notes: &mut Vec<String>) -> Result<(), CliError> {
    let model = cfg.model()?;
    let d = &cfg.dynamics;
    let cube = study_cube(cfg, d.half_side_grid_units)?;
    let k = Region::Cube(cube.with_half_side(d.k_half_side_grid_units)?);
    let grids: Vec<Vec<f64>> =
        d.t_max_inverse_energy_units.iter().map(|&t| log_time_grid(t, d.times_per_decade)).collect::<Result<_, _>>()?;
    let seed = cfg.seed();
    let per_realization = try_map_indexed(ExecMode::Parallel, d.trials, |t| {
        let ctx = model.realize(&cube, seed, t)?;
        let grid = ctx.grid();
        let eig = decompose_cube(&ctx)?;
        let states = k.states(&grid)?;
        let interval = d.interval_energy_units.unwrap_or((f64::NEG_INFINITY, f64::INFINITY));
        let moments = grids
            .iter()
            .map(|times| moment_observable(&eig, &grid, d.moment_exponent, interval, &states, times))
            .collect::<mpmsa::Result<Vec<_>>>()?;
        Ok::<_, mpmsa::Error>((moments, localization_report(&ctx)?))
    })?;
    notes.push("|X| measured in max norm from the cube center; sup taken over a log-spaced time grid".into());
    let mut lines = Vec::new();
    let mut locs = Vec::new();
    let mut fit_rows = Vec::new();
    for (t, (moments, loc)) in per_realization.iter().enumerate() {
        for m in moments {
            lines.push(MomentLine { op: "moment", realization: t as u64, record: m.clone() });
        }
        locs.push(LocalizationLine {
            op: "localization",
            realization: t as u64,
            median_rate: loc.median_rate,
            fraction_fitted: loc.fraction_fitted,
            delocalized: loc.delocalized,
            mean_boundary_mass: loc.mean_boundary_mass,
            predicted_boundary_mass: loc.predicted_boundary_mass,
        });
        for (j, f) in loc.fits.iter().enumerate() {
            fit_rows.push(vec![
                t.to_string(),
                j.to_string(),
                num(f.rate),
                num(f.prefactor),
                num(f.residual),
                f.window.0.to_string(),
                f.window.1.to_string(),
                f.points.to_string(),
                f.degenerate.to_string(),
                f.localized.to_string(),
            ]);
        }
    }
    out.jsonl("moments", &lines)?;
    out.jsonl("localization", &locs)?;
    let summary: Vec<Vec<String>> = d
        .t_max_inverse_energy_units
        .iter()
        .enumerate()
        .map(|(i, &tm)| {
            let sups: Vec<f64> = per_realization.iter().map(|(m, _)| m[i].sup).collect();
            let mean = mpmsa::stats::mean(&sups);
            let half = mpmsa::stats::Z95 * mpmsa::stats::std_dev(&sups) / (sups.len() as f64).sqrt();
            vec![num(tm), num(d.moment_exponent), num(mean), num((mean - half).max(0.0)), num(mean + half)]
        })
        .collect();
    out.csv("moments", &["t_max", "s", "mean_sup", "ci_lo", "ci_hi"], &summary)?;
    out.csv(
        "decay_fits",
        &["realization", "state", "rate", "prefactor", "residual", "window_lo", "window_hi", "points", "degenerate", "localized"],
        &fit_rows,
    )?;
    let last = grids.len() - 1;
    let blocks: Vec<(String, Vec<Vec<f64>>)> = per_realization
        .iter()
        .enumerate()
        .map(|(t, (m, _))| {
            let rec = &m[last];
            (format!("realization {t}"), rec.times.iter().zip(&rec.series).map(|(a, b)| vec![*a, *b]).collect())
        })
        .collect();
    out.plot("moment_series", &["t", "value"], &blocks)
}

/// Summary of every estimate record found in the output directory.
fn report(out: &mut OutputDir, notes: &mut Vec<String>) -> Result<(), CliError> {
    let mut names: Vec<_> = fs::read_dir(out.root())?
        .filter_map(|e| e.ok())
        .map(|e| e.file_name().to_string_lossy().into_owned())
        .filter(|n| n.ends_with(".jsonl"))
        .collect();
    names.sort();
    let mut rows = Vec::new();
    let mut blocks: BTreeMap<String, Vec<Vec<f64>>> = BTreeMap::new();
    for name in names {
        let text = fs::read_to_string(out.root().join(&name))?;
        for line in text.lines() {
            let v: Value = serde_json::from_str(line).map_err(|e| CliError::Validation(format!("{name}: {e}")))?;
            let Some(point) = v.get("point").and_then(Value::as_f64) else { continue };
            let get = |k: &str| v.get(k).and_then(Value::as_f64).unwrap_or(f64::NAN);
            let op = v.get("op").and_then(Value::as_str).unwrap_or("?").to_string();
            let status = v.get("status").and_then(Value::as_str).unwrap_or("?").to_string();
            rows.push(vec![
                name.clone(),
                op.clone(),
                num(get("L")),
                num(get("n")),
                num(point),
                num(get("ci_lo")),
                num(get("ci_hi")),
                num(get("bound")),
                status,
            ]);
            blocks.entry(op).or_default().push(vec![get("L"), point, get("ci_lo"), get("ci_hi"), get("bound")]);
        }
    }
    if rows.is_empty() {
        notes.push("no estimate records found".into());
        eprintln!("warning: no estimate records in {}", out.root().display());
        return Ok(());
    }
    out.csv("report", &["file", "op", "L", "n", "point", "ci_lo", "ci_hi", "bound", "status"], &rows)?;
    out.plot("report", &["L", "point", "ci_lo", "ci_hi", "bound"], &blocks.into_iter().collect::<Vec<_>>())
}
