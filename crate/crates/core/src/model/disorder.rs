use std::fmt::Write as _;

use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::{Error, Result};

/// Single-site distribution of the i.i.d. potential `V(x, w) = w_x`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum DisorderSpec {
    Uniform { low: f64, high: f64 },
    /// `levels[1]` with probability `p`, otherwise `levels[0]`.
    Bernoulli { p: f64, levels: [f64; 2] },
    /// Distribution function `F(v) = min(1, C / |ln v|^{2A})` on `(0, 1)`,
    /// the extremal log-Hölder law.
    Holder { c: f64, a: f64 },
    /// Deterministic potential, for free-particle controls.
    Constant { value: f64 },
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct HolderCheck {
    pub valid: bool,
    pub threshold: f64,
    /// `A - threshold`; `+inf` for laws with bounded density and `-inf` for
    /// laws with atoms.
    pub margin: f64,
}

impl DisorderSpec {
    pub fn validate(&self) -> Result<()> {
        let ok = match *self {
            DisorderSpec::Uniform { low, high } => low.is_finite() && high.is_finite() && low < high,
            DisorderSpec::Bernoulli { p, levels } => {
                p > 0.0 && p < 1.0 && levels.iter().all(|l| l.is_finite()) && levels[0] != levels[1]
            }
            DisorderSpec::Holder { c, a } => c > 0.0 && a > 0.0 && c.is_finite() && a.is_finite(),
            DisorderSpec::Constant { value } => value.is_finite(),
        };
        if ok {
            Ok(())
        } else {
            Err(Error::InvalidParameter(format!("invalid disorder distribution {self:?}")))
        }
    }

    /// Inverse distribution function at `u` in `[0, 1)`.
    pub fn quantile(&self, u: f64) -> f64 {
        match *self {
            DisorderSpec::Uniform { low, high } => low + (high - low) * u,
            DisorderSpec::Bernoulli { p, levels } => {
                if u < p {
                    levels[1]
                } else {
                    levels[0]
                }
            }
            DisorderSpec::Holder { c, a } => {
                if u <= 0.0 {
                    0.0
                } else {
                    (-(c / u).powf(1.0 / (2.0 * a))).exp()
                }
            }
            DisorderSpec::Constant { value } => value,
        }
    }

    pub fn is_bernoulli(&self) -> bool {
        matches!(self, DisorderSpec::Bernoulli { .. })
    }

    /// Largest absolute value the potential can take.
    pub fn sup_abs(&self) -> f64 {
        match *self {
            DisorderSpec::Uniform { low, high } => low.abs().max(high.abs()),
            DisorderSpec::Bernoulli { levels, .. } => levels[0].abs().max(levels[1].abs()),
            DisorderSpec::Holder { .. } => 1.0,
            DisorderSpec::Constant { value } => value.abs(),
        }
    }

    /// `s(F, eps) = sup_a (F(a + eps) - F(a))`; for the Hölder family the
    /// bound `C / |ln eps|^{2A}`.
    pub fn concentration(&self, eps: f64) -> Result<f64> {
        if !(eps > 0.0) {
            return Err(Error::InvalidParameter(format!("eps = {eps} must be positive")));
        }
        Ok(match *self {
            DisorderSpec::Uniform { low, high } => (eps / (high - low)).min(1.0),
            DisorderSpec::Bernoulli { p, levels } => {
                if eps > (levels[1] - levels[0]).abs() {
                    1.0
                } else {
                    p.max(1.0 - p)
                }
            }
            DisorderSpec::Holder { c, a } => {
                if eps >= 1.0 {
                    return Err(Error::InvalidParameter(format!(
                        "log-Hölder bound needs eps < 1, got {eps}"
                    )));
                }
                (c / eps.ln().abs().powf(2.0 * a)).min(1.0)
            }
            DisorderSpec::Constant { .. } => 1.0,
        })
    }

    /// Checks `A > (3/2) 4^N p + 9 N d`.
    pub fn validate_log_holder(&self, p: f64, particles: u32, dim: u32) -> HolderCheck {
        let threshold = log_holder_threshold(p, particles, dim);
        let margin = match *self {
            DisorderSpec::Holder { a, .. } => a - threshold,
            DisorderSpec::Uniform { .. } => f64::INFINITY,
            DisorderSpec::Bernoulli { .. } | DisorderSpec::Constant { .. } => f64::NEG_INFINITY,
        };
        HolderCheck { valid: margin > 0.0, threshold, margin }
    }
}

pub fn log_holder_threshold(p: f64, particles: u32, dim: u32) -> f64 {
    1.5 * 4f64.powi(particles as i32) * p + 9.0 * particles as f64 * dim as f64
}

/// Inclusive box of integer sites.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct SiteWindow {
    pub lo: Vec<i64>,
    pub hi: Vec<i64>,
}

impl SiteWindow {
    pub fn new(lo: Vec<i64>, hi: Vec<i64>) -> Result<Self> {
        if lo.is_empty() || lo.len() != hi.len() || lo.iter().zip(&hi).any(|(a, b)| a > b) {
            return Err(Error::InvalidParameter("empty or malformed site window".into()));
        }
        Ok(Self { lo, hi })
    }

    pub fn interval(lo: i64, hi: i64) -> Result<Self> {
        Self::new(vec![lo], vec![hi])
    }

    pub fn dim(&self) -> usize {
        self.lo.len()
    }

    pub fn len(&self) -> usize {
        self.lo.iter().zip(&self.hi).map(|(a, b)| (b - a + 1) as usize).product()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn contains(&self, site: &[i64]) -> bool {
        site.len() == self.dim() && site.iter().enumerate().all(|(k, &s)| s >= self.lo[k] && s <= self.hi[k])
    }

    pub fn contains_window(&self, other: &SiteWindow) -> bool {
        self.contains(&other.lo) && self.contains(&other.hi)
    }

    /// Row-major offset, last coordinate fastest.
    pub fn offset(&self, site: &[i64]) -> Option<usize> {
        if !self.contains(site) {
            return None;
        }
        let mut off = 0usize;
        for k in 0..self.dim() {
            off = off * (self.hi[k] - self.lo[k] + 1) as usize + (site[k] - self.lo[k]) as usize;
        }
        Some(off)
    }

    pub fn site(&self, mut offset: usize) -> Vec<i64> {
        let mut site = vec![0; self.dim()];
        for k in (0..self.dim()).rev() {
            let w = (self.hi[k] - self.lo[k] + 1) as usize;
            site[k] = self.lo[k] + (offset % w) as i64;
            offset /= w;
        }
        site
    }
}

/// Zigzag-packs up to three coordinates of magnitude below `2^20` into a key.
pub fn site_key(site: &[i64]) -> Result<u64> {
    if site.len() > 3 {
        return Err(Error::InvalidParameter("site keys support d <= 3".into()));
    }
    let mut key = 0u64;
    for &s in site {
        if s.abs() >= 1 << 20 {
            return Err(Error::Overflow(format!("site coordinate {s} out of range")));
        }
        let z = ((s << 1) ^ (s >> 63)) as u64;
        key = (key << 21) | z;
    }
    Ok(key)
}

/// Counter-based uniform stream: the draw for a site depends only on
/// `(master_seed, realization, site)`.
pub struct SiteStream {
    rng: ChaCha8Rng,
}

impl SiteStream {
    pub fn new(master_seed: u64, realization: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(master_seed);
        rng.set_stream(realization);
        Self { rng }
    }

    pub fn uniform(&mut self, site: &[i64]) -> Result<f64> {
        let key = site_key(site)?;
        self.rng.set_word_pos(u128::from(key) * 2);
        Ok((self.rng.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64))
    }
}

/// One realization of the potential on a window of sites.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DisorderField {
    window: SiteWindow,
    values: Vec<f64>,
}

impl DisorderField {
    pub fn from_values(window: SiteWindow, values: Vec<f64>) -> Result<Self> {
        if values.len() != window.len() {
            return Err(Error::DimensionMismatch(format!(
                "{} values for a window of {} sites",
                values.len(),
                window.len()
            )));
        }
        Ok(Self { window, values })
    }

    pub fn constant(window: SiteWindow, value: f64) -> Self {
        let values = vec![value; window.len()];
        Self { window, values }
    }

    pub fn window(&self) -> &SiteWindow {
        &self.window
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn value(&self, site: &[i64]) -> Option<f64> {
        self.window.offset(site).map(|o| self.values[o])
    }

    pub fn shifted(&self, by: f64) -> Self {
        Self { window: self.window.clone(), values: self.values.iter().map(|v| v + by).collect() }
    }

    pub fn scaled(&self, by: f64) -> Self {
        Self { window: self.window.clone(), values: self.values.iter().map(|v| v * by).collect() }
    }

    /// `site_0,..,site_{d-1},value` rows with a header.
    pub fn to_csv(&self) -> String {
        let d = self.window.dim();
        let mut out = String::new();
        let header: Vec<String> = (0..d).map(|k| format!("site_{k}")).collect();
        let _ = writeln!(out, "{},value", header.join(","));
        for (o, v) in self.values.iter().enumerate() {
            let site = self.window.site(o);
            let coords: Vec<String> = site.iter().map(|s| s.to_string()).collect();
            let _ = writeln!(out, "{},{v:e}", coords.join(","));
        }
        out
    }
}

/// Samples `spec` on every site of `window` for realization `index`.
pub fn sample_disorder(spec: &DisorderSpec, window: &SiteWindow, master_seed: u64, index: u64) -> Result<DisorderField> {
    spec.validate()?;
    let mut stream = SiteStream::new(master_seed, index);
    let values = (0..window.len())
        .map(|o| stream.uniform(&window.site(o)).map(|u| spec.quantile(u)))
        .collect::<Result<Vec<_>>>()?;
    DisorderField::from_values(window.clone(), values)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn concentration_examples() {
        let u = DisorderSpec::Uniform { low: 0.0, high: 1.0 };
        assert!((u.concentration(0.1).unwrap() - 0.1).abs() < 1e-15);
        let b = DisorderSpec::Bernoulli { p: 0.5, levels: [0.0, 1.0] };
        assert_eq!(b.concentration(0.3).unwrap(), 0.5);
        assert_eq!(b.concentration(1.5).unwrap(), 1.0);
        let h = DisorderSpec::Holder { c: 1.0, a: 2.0 };
        assert!((h.concentration((-10f64).exp()).unwrap() - 1e-4).abs() < 1e-16);
        assert!(h.concentration(1.0).is_err());
    }

    #[test]
    fn log_holder_examples() {
        let h = |a| DisorderSpec::Holder { c: 1.0, a };
        let r = h(400.0).validate_log_holder(13.0, 2, 1);
        assert!(r.valid);
        assert_eq!(r.threshold, 330.0);
        assert!(!h(330.0).validate_log_holder(13.0, 2, 1).valid);
        let r = h(60.0).validate_log_holder(7.0, 1, 1);
        assert!(r.valid);
        assert_eq!(r.threshold, 51.0);
        let b = DisorderSpec::Bernoulli { p: 0.5, levels: [0.0, 1.0] };
        assert!(!b.validate_log_holder(1.0, 1, 1).valid);
    }

    #[test]
    fn holder_sampler_matches_distribution() {
        let spec = DisorderSpec::Holder { c: 0.5, a: 1.0 };
        let w = SiteWindow::interval(0, 19_999).unwrap();
        let f = sample_disorder(&spec, &w, 3, 0).unwrap();
        for v in [0.01f64, 0.2, 0.6] {
            let expect = (0.5 / v.ln().powi(2)).min(1.0);
            let got = f.values().iter().filter(|&&x| x <= v).count() as f64 / 20_000.0;
            assert!((got - expect).abs() < 0.015, "v={v} got={got} expect={expect}");
        }
    }

    #[test]
    fn uniform_mean() {
        let w = SiteWindow::interval(-50_000, 49_999).unwrap();
        let f = sample_disorder(&DisorderSpec::Uniform { low: 0.0, high: 1.0 }, &w, 11, 0).unwrap();
        let mean = f.values().iter().sum::<f64>() / f.values().len() as f64;
        assert!((mean - 0.5).abs() < 0.01);
    }

    #[test]
    fn determinism_and_independence() {
        let spec = DisorderSpec::Bernoulli { p: 0.5, levels: [0.0, 1.0] };
        let w = SiteWindow::new(vec![-3, -3], vec![3, 3]).unwrap();
        let a = sample_disorder(&spec, &w, 5, 2).unwrap();
        let b = sample_disorder(&spec, &w, 5, 2).unwrap();
        assert_eq!(a, b);
        let c = sample_disorder(&spec, &w, 5, 3).unwrap();
        assert_ne!(a, c);
        // Window-independent values.
        let small = SiteWindow::new(vec![0, 0], vec![1, 2]).unwrap();
        let s = sample_disorder(&spec, &small, 5, 2).unwrap();
        assert_eq!(s.value(&[1, 2]), a.value(&[1, 2]));
    }

    #[test]
    fn window_offsets_roundtrip() {
        let w = SiteWindow::new(vec![-2, 0, 5], vec![1, 3, 6]).unwrap();
        for o in 0..w.len() {
            assert_eq!(w.offset(&w.site(o)), Some(o));
        }
        assert_eq!(site_key(&[0]).unwrap(), 0);
        assert_ne!(site_key(&[-1]).unwrap(), site_key(&[1]).unwrap());
    }

    #[test]
    fn csv_export() {
        let f = DisorderField::constant(SiteWindow::interval(0, 1).unwrap(), 0.5);
        assert_eq!(f.to_csv(), "site_0,value\n0,5e-1\n1,5e-1\n");
    }
}
