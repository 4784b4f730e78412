//! Exhaustive and randomized checks of the geometric lemmas, shared by the
//! command line `geometry-check` and the test suite.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::counting::{count_singular, FlaggedCube};
use super::cube::CubeSpec;
use super::interactivity::{classify_interactivity, pi_partition, projection_gap, projections_disjoint, Interactivity};
use super::point::{max_norm, ParticlePoint};
use super::separability::{
    farthest_cluster, is_j_separable, is_separable_pair, min_separation_radius, separability_covering,
};
use crate::exec::{map_indexed, ExecMode};
use crate::{Error, Result};

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct SuiteOutcome {
    pub name: String,
    pub cases: u64,
    pub exceptions: u64,
    pub first_exception: Option<String>,
}

impl SuiteOutcome {
    pub fn passed(&self) -> bool {
        self.cases > 0 && self.exceptions == 0
    }
}

#[derive(Default)]
struct Tally {
    cases: u64,
    exceptions: u64,
    first: Option<String>,
}

impl Tally {
    fn record(&mut self, ok: bool, describe: impl FnOnce() -> String) {
        self.cases += 1;
        if !ok {
            self.exceptions += 1;
            if self.first.is_none() {
                self.first = Some(describe());
            }
        }
    }

    fn merge(parts: Vec<Tally>, name: String) -> SuiteOutcome {
        let mut out = SuiteOutcome { name, cases: 0, exceptions: 0, first_exception: None };
        for t in parts {
            out.cases += t.cases;
            out.exceptions += t.exceptions;
            if out.first_exception.is_none() {
                out.first_exception = t.first;
            }
        }
        out
    }
}

fn trial_rng(seed: u64, trial: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(trial);
    rng
}

/// Centers used for the covering scan: coincident, clustered and spread
/// particles on the line.
pub fn covering_centers(n: usize, half_side: i64) -> Vec<ParticlePoint> {
    let l = half_side;
    match n {
        1 => vec![ParticlePoint::line(&[0])],
        2 => vec![
            ParticlePoint::line(&[0, 0]),
            ParticlePoint::line(&[0, l]),
            ParticlePoint::line(&[0, 3 * l + 1]),
            ParticlePoint::line(&[0, 10 * l]),
        ],
        _ => {
            let mut v = vec![
                ParticlePoint::line(&vec![0; n]),
                ParticlePoint::line(&(0..n as i64).map(|i| i * l).collect::<Vec<_>>()),
                ParticlePoint::line(&(0..n as i64).map(|i| i * (5 * l + 1) * (i % 2 * 2 - 1)).collect::<Vec<_>>()),
            ];
            let mut far = vec![0; n];
            far[n - 1] = 12 * l;
            v.push(ParticlePoint::line(&far));
            v
        }
    }
}

/// Every lattice `y` with `7NL < |y - x| <= 30L` outside the covering cubes
/// of `x` must give a separable pair. Here `N = n`.
pub fn covering_suite(x: &ParticlePoint, half_side: i64, mode: ExecMode) -> Result<SuiteOutcome> {
    if x.dim() != 1 {
        return Err(Error::InvalidParameter("covering scan is one-dimensional".into()));
    }
    let n = x.particles();
    let l = half_side;
    let covering = separability_covering(x, l)?;
    let reach = 30 * l;
    let gate = 7 * n as i64 * l;
    let cx = CubeSpec::new(x.clone(), l)?;
    let width = 2 * reach + 1;
    let rest = (width as u64).pow(n as u32 - 1);
    let parts = map_indexed(mode, width as u64, |slice| {
        let mut tally = Tally::default();
        let mut coords: Vec<i64> = vec![0; n];
        for k in 0..rest {
            let mut r = k;
            coords[0] = x.coords()[0] - reach + slice as i64;
            for j in 1..n {
                coords[j] = x.coords()[j] - reach + (r % width as u64) as i64;
                r /= width as u64;
            }
            let dist = (0..n).map(|j| (coords[j] - x.coords()[j]).abs()).max().unwrap_or(0);
            if dist <= gate {
                continue;
            }
            let covered = covering.iter().any(|c| {
                (0..n).all(|j| (coords[j] - c.center().coords()[j]).abs() < c.half_side())
            });
            if covered {
                continue;
            }
            let cy = cx.recentered(ParticlePoint::line(&coords)).expect("same shape");
            let ok = is_separable_pair(&cx, &cy, n).map(|r| r.separable).unwrap_or(false);
            tally.record(ok, || format!("x={x} y={} L={l}", cy.center()));
        }
        tally
    });
    Ok(Tally::merge(parts, format!("covering n={n} L={l} x={x}")))
}

/// Random pairs beyond [`min_separation_radius`] are J-separable with J the
/// cluster of the farthest particle.
pub fn separation_radius_suite(trials: u64, seed: u64, mode: ExecMode) -> SuiteOutcome {
    let parts = map_indexed(mode, trials, |t| {
        let mut rng = trial_rng(seed, t);
        let n = rng.random_range(1..=4usize);
        let total = n + rng.random_range(0..=1usize);
        let l = rng.random_range(1..=6i64);
        let spread = rng.random_range(0..=6 * l);
        let y: Vec<i64> = (0..n).map(|_| rng.random_range(-spread..=spread)).collect();
        let y = ParticlePoint::line(&y);
        let radius = min_separation_radius(&y, l, total);
        let mut x: Vec<i64> = (0..n).map(|j| y.coords()[j] + rng.random_range(-3 * l..=3 * l)).collect();
        let far = rng.random_range(0..n);
        let sign = if rng.random_bool(0.5) { 1 } else { -1 };
        x[far] = y.coords()[far] + sign * (radius + 1 + rng.random_range(0..=2 * l));
        let x = ParticlePoint::line(&x);
        let mut tally = Tally::default();
        if max_norm(&x, &y).unwrap_or(0) > radius {
            let ok = farthest_cluster(&x, &y, l)
                .and_then(|j| is_j_separable(&CubeSpec::new(x.clone(), l)?, &CubeSpec::new(y.clone(), l)?, j))
                .unwrap_or(false);
            tally.record(ok, || format!("x={x} y={y} L={l} N={total}"));
        }
        tally
    });
    Tally::merge(parts, "separation radius".into())
}

fn random_cube(rng: &mut ChaCha8Rng, n: usize, l: i64, spread: i64) -> CubeSpec {
    let c: Vec<i64> = (0..n).map(|_| rng.random_range(-spread..=spread)).collect();
    CubeSpec::line(&c, l).expect("positive half-side")
}

/// PI cubes admit a partition with gap `> r0`; FI cubes are rejected.
pub fn pi_partition_suite(trials: u64, seed: u64, mode: ExecMode) -> SuiteOutcome {
    let parts = map_indexed(mode, trials, |t| {
        let mut rng = trial_rng(seed, t);
        let n = rng.random_range(2..=4usize);
        let l = rng.random_range(1..=8i64);
        let r0 = rng.random_range(0..=3i64);
        let spread = rng.random_range(1..=(n as i64 * (2 * l + r0)));
        let cube = random_cube(&mut rng, n, l, spread);
        let mut tally = Tally::default();
        let ok = match (classify_interactivity(&cube, r0), pi_partition(&cube, r0)) {
            (Interactivity::Partial, Ok(j)) => {
                !j.is_empty() && j.len() < n && projection_gap(&cube, j) > r0
            }
            (Interactivity::Full, Err(Error::FullyInteractive)) => true,
            // FI cubes may still split; the lemma only constrains PI cubes.
            (Interactivity::Full, Ok(j)) => projection_gap(&cube, j) > r0,
            _ => false,
        };
        tally.record(ok, || format!("u={} L={l} r0={r0}", cube.center()));
        tally
    });
    Tally::merge(parts, "PI partition".into())
}

/// Random FI cube around a random base point.
fn random_fi_cube(rng: &mut ChaCha8Rng, n: usize, l: i64, r0: i64, base: i64) -> CubeSpec {
    let limit = n as i64 * (2 * l + r0);
    loop {
        let c: Vec<i64> = (0..n).map(|_| base + rng.random_range(0..=limit)).collect();
        let cube = CubeSpec::line(&c, l).expect("positive half-side");
        if classify_interactivity(&cube, r0) == Interactivity::Full {
            return cube;
        }
    }
}

/// Distant FI cubes with `L > 2 r0` have disjoint projections.
pub fn fi_projection_suite(trials: u64, seed: u64, mode: ExecMode) -> SuiteOutcome {
    let parts = map_indexed(mode, trials, |t| {
        let mut rng = trial_rng(seed, t);
        let n = rng.random_range(1..=4usize);
        let r0 = rng.random_range(0..=3i64);
        let l = 2 * r0 + rng.random_range(1..=5i64);
        let a = random_fi_cube(&mut rng, n, l, r0, 0);
        let gate = 7 * n as i64 * l;
        // Redraw until the pair is farther apart than the gate.
        let b = loop {
            let shift = gate - n as i64 * (2 * l + r0) + rng.random_range(0..=3 * n as i64 * l);
            let sign = if rng.random_bool(0.5) { 1 } else { -1 };
            let b = random_fi_cube(&mut rng, n, l, r0, sign * shift);
            if max_norm(a.center(), b.center()).unwrap_or(0) > gate {
                break b;
            }
        };
        let mut tally = Tally::default();
        tally.record(projections_disjoint(&a, &b), || format!("a={} b={} L={l} r0={r0}", a.center(), b.center()));
        tally
    });
    Tally::merge(parts, "FI projections".into())
}

/// `kappa(n) + 2` singular cubes pairwise `7NL` apart contain a separable
/// pair.
pub fn counting_suite(n: usize, trials: u64, seed: u64, mode: ExecMode) -> SuiteOutcome {
    let kappa = n.pow(n as u32);
    let parts = map_indexed(mode, trials, |t| {
        let mut rng = trial_rng(seed, t);
        let l = rng.random_range(1..=3i64);
        let gate = 7 * n as i64 * l;
        // Centers built from a few shared positions make non-separable
        // pairs common.
        let anchors: Vec<i64> = (0..n).map(|_| rng.random_range(-4 * gate..=4 * gate)).collect();
        let mut cubes: Vec<FlaggedCube> = Vec::new();
        let mut attempts = 0;
        while cubes.len() < kappa + 2 && attempts < 20_000 {
            attempts += 1;
            let c: Vec<i64> = (0..n)
                .map(|_| {
                    if rng.random_bool(0.7) {
                        anchors[rng.random_range(0..n)] + rng.random_range(-l..=l)
                    } else {
                        rng.random_range(-6 * gate..=6 * gate)
                    }
                })
                .collect();
            let cube = CubeSpec::line(&c, l).expect("positive half-side");
            let far = cubes
                .iter()
                .all(|f| max_norm(f.cube.center(), cube.center()).unwrap_or(0) > gate);
            if far {
                cubes.push(FlaggedCube { cube, singular: true });
            }
        }
        let mut tally = Tally::default();
        if let Ok(counts) = count_singular(&cubes, n, 0) {
            if counts.m >= kappa + 2 {
                tally.record(counts.m_sep >= 2, || format!("{} cubes, L={l}", cubes.len()));
            }
        }
        tally
    });
    Tally::merge(parts, format!("counting n={n}"))
}

/// Full geometry suite: covering scans for `n <= max_n` and
/// `L in {2, 3, 5}`, then the randomized lemmas.
pub fn run_all(max_n: usize, trials: u64, seed: u64, mode: ExecMode) -> Result<Vec<SuiteOutcome>> {
    let mut out = Vec::new();
    for n in 1..=max_n {
        for l in [2, 3, 5] {
            for x in covering_centers(n, l) {
                out.push(covering_suite(&x, l, mode)?);
            }
        }
    }
    out.push(separation_radius_suite(trials, seed, mode));
    out.push(pi_partition_suite(trials, seed ^ 0x4_4, mode));
    out.push(fi_projection_suite(trials, seed ^ 0x4_6, mode));
    for n in 2..=max_n.clamp(2, 3) {
        out.push(counting_suite(n, trials, seed ^ 0x48, mode));
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn covering_small() {
        for x in covering_centers(2, 2) {
            let r = covering_suite(&x, 2, ExecMode::Sequential).unwrap();
            assert!(r.passed(), "{r:?}");
        }
    }

    #[test]
    fn randomized_suites_pass() {
        let s = ExecMode::Sequential;
        for r in [
            separation_radius_suite(500, 1, s),
            pi_partition_suite(500, 2, s),
            fi_projection_suite(500, 3, s),
            counting_suite(2, 20, 4, s),
        ] {
            assert!(r.passed(), "{r:?}");
        }
    }
}
