use serde::{Deserialize, Serialize};

use crate::{Error, Result};

/// Scale exponent `alpha` of the schedule `L_k = floor(L_{k-1}^alpha) + 1`.
pub const ALPHA: f64 = 1.5;

/// Parameters of the multi-scale analysis.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MsaParams {
    /// Decay mass `m`.
    pub m: f64,
    /// Reduced mass `m_1` of the variable-energy window.
    pub m1: f64,
    /// Probability exponent, `p > 6Nd`.
    pub p: f64,
    /// Initial scale.
    pub l0: i64,
    /// Total particle number `N`.
    pub total_particles: usize,
    /// Particle number `n` of the cubes under study.
    pub particles: usize,
    /// Configuration dimension.
    pub dim: usize,
    /// Reference energy.
    pub e0: f64,
}

/// Smallest integer exponent allowed: `6Nd + 1`.
pub fn default_p(total_particles: usize, dim: usize) -> f64 {
    (6 * total_particles * dim + 1) as f64
}

impl MsaParams {
    pub fn new(m: f64, l0: i64, total_particles: usize, particles: usize, e0: f64) -> Self {
        Self { m, m1: m / 2.0, p: default_p(total_particles, 1), l0, total_particles, particles, dim: 1, e0 }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::InvalidParameter(msg));
        if !(self.m > 0.0 && self.m.is_finite()) {
            return bad(format!("mass m = {} must be positive", self.m));
        }
        if !(self.m1 > 0.0 && self.m1 < self.m) {
            return bad(format!("need 0 < m1 < m, got m1 = {}, m = {}", self.m1, self.m));
        }
        let floor = (6 * self.total_particles * self.dim) as f64;
        if !(self.p > floor) {
            return bad(format!("p = {} must exceed 6Nd = {floor}", self.p));
        }
        if self.l0 < 4 {
            return bad(format!("initial scale {} must be at least 4", self.l0));
        }
        if self.particles == 0 || self.particles > self.total_particles || self.dim == 0 {
            return bad(format!("need 1 <= n = {} <= N = {}", self.particles, self.total_particles));
        }
        if !self.e0.is_finite() {
            return bad("reference energy must be finite".into());
        }
        Ok(())
    }

    pub fn with_particles(&self, particles: usize) -> Self {
        Self { particles, ..self.clone() }
    }

    pub fn with_mass(&self, m: f64) -> Self {
        Self { m, m1: self.m1.min(m / 2.0), ..self.clone() }
    }

    /// `4^{N-n} p`.
    pub fn dressed_p(&self, particles: usize) -> f64 {
        self.p * 4f64.powi((self.total_particles - particles) as i32)
    }

    /// `L^{-p 4^{N-n}}`.
    pub fn wegner_bound(&self, l: i64, particles: usize) -> f64 {
        (l as f64).powf(-self.dressed_p(particles))
    }

    /// `L^{-2p 4^{N-n}}`.
    pub fn pair_bound(&self, l: i64, particles: usize) -> f64 {
        (l as f64).powf(-2.0 * self.dressed_p(particles))
    }

    /// `(1/2) L^{-2p 4^{N-n}}`.
    pub fn singularity_bound(&self, l: i64, particles: usize) -> f64 {
        0.5 * self.pair_bound(l, particles)
    }

    pub fn gamma(&self, l: i64, particles: usize) -> f64 {
        gamma(self.m, l, particles, self.total_particles)
    }
}

/// `L_0, L_1, .., L_{k_max}` with `L_k = floor(L_{k-1}^{3/2}) + 1`, in exact
/// integer arithmetic.
pub fn scale_sequence(l0: i64, k_max: usize) -> Result<Vec<i64>> {
    if l0 < 2 {
        return Err(Error::InvalidParameter(format!("initial scale {l0} must be at least 2")));
    }
    let mut out = vec![l0];
    for _ in 0..k_max {
        let l = *out.last().expect("nonempty") as u128;
        let cube = l.checked_pow(3).ok_or_else(|| Error::Overflow("scale schedule".into()))?;
        let next = i64::try_from(cube.isqrt() + 1).map_err(|_| Error::Overflow("scale schedule".into()))?;
        out.push(next);
    }
    Ok(out)
}

/// `gamma(m, L, n) = m (1 + L^{-1/8})^{N - n + 1}`.
pub fn gamma(m: f64, l: i64, particles: usize, total_particles: usize) -> f64 {
    let power = (total_particles + 1).saturating_sub(particles) as i32;
    m * (1.0 + (l as f64).powf(-0.125)).powi(power)
}

/// `e^{-sqrt L}`.
pub fn resonance_threshold(l: i64) -> f64 {
    (-(l as f64).sqrt()).exp()
}

/// `e^{-gamma L}`.
pub fn singularity_threshold(m: f64, l: i64, particles: usize, total_particles: usize) -> f64 {
    (-gamma(m, l, particles, total_particles) * l as f64).exp()
}

/// Energy window `I_0 = [E_0 - delta, E_0 + delta]` of the variable-energy
/// analysis, in its plain and gamma-dressed forms.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct EnergyWindow {
    pub e0: f64,
    /// `(1/2) e^{-2 sqrt L0} (e^{-m1 L0} - e^{-m L0})`.
    pub delta: f64,
    /// As `delta` with `m1, m` replaced by `gamma(m1, L0, n), gamma(m, L0, n)`.
    pub delta_gamma: f64,
}

impl EnergyWindow {
    pub fn interval(&self) -> (f64, f64) {
        (self.e0 - self.delta, self.e0 + self.delta)
    }

    pub fn interval_gamma(&self) -> (f64, f64) {
        (self.e0 - self.delta_gamma, self.e0 + self.delta_gamma)
    }
}

pub fn variable_energy_interval(
    e0: f64,
    l0: i64,
    m: f64,
    m1: f64,
    total_particles: usize,
    particles: usize,
) -> Result<EnergyWindow> {
    if !(m1 > 0.0 && m1 < m) {
        return Err(Error::InvalidParameter(format!("need 0 < m1 < m, got m1 = {m1}, m = {m}")));
    }
    let l = l0 as f64;
    let front = 0.5 * (-2.0 * l.sqrt()).exp();
    let delta = front * ((-m1 * l).exp() - (-m * l).exp());
    let g1 = gamma(m1, l0, particles, total_particles);
    let g = gamma(m, l0, particles, total_particles);
    let delta_gamma = front * ((-g1 * l).exp() - (-g * l).exp());
    Ok(EnergyWindow { e0, delta, delta_gamma })
}

/// Uniform grid on `[lo, hi]` with spacing at most `max_spacing`, including
/// both endpoints.
pub fn energy_grid(lo: f64, hi: f64, max_spacing: f64) -> Result<Vec<f64>> {
    if !(hi >= lo) || !(max_spacing > 0.0) {
        return Err(Error::InvalidParameter("energy grid needs lo <= hi and a positive spacing".into()));
    }
    if hi == lo {
        return Ok(vec![lo]);
    }
    let steps = ((hi - lo) / max_spacing).ceil().max(1.0) as usize;
    Ok((0..=steps).map(|k| lo + (hi - lo) * k as f64 / steps as f64).collect())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn schedules() {
        assert_eq!(scale_sequence(4, 3).unwrap(), vec![4, 9, 28, 149]);
        assert_eq!(scale_sequence(2, 3).unwrap(), vec![2, 3, 6, 15]);
        assert_eq!(scale_sequence(7, 0).unwrap(), vec![7]);
        assert!(scale_sequence(1, 2).is_err());
        assert!(matches!(scale_sequence(1 << 20, 4), Err(Error::Overflow(_))));
    }

    #[test]
    fn gamma_examples() {
        assert!((gamma(2.0, 256, 2, 2) - 3.0).abs() < 1e-14);
        assert!((gamma(1.0, 256, 1, 2) - 2.25).abs() < 1e-14);
        assert!((gamma(1.0, 1 << 60, 1, 1) - 1.0) < 0.01);
    }

    #[test]
    fn resonance_threshold_at_100() {
        assert_eq!(resonance_threshold(100), (-10f64).exp());
    }

    #[test]
    fn window_examples() {
        let w = variable_energy_interval(0.0, 16, 0.2, 0.1, 1, 1).unwrap();
        let expect = 0.5 * (-8f64).exp() * ((-1.6f64).exp() - (-3.2f64).exp());
        assert!((w.delta - expect).abs() < 1e-18);
        assert!(w.delta < 0.5 * (-8f64).exp());
        let near = variable_energy_interval(0.0, 16, 0.2, 0.2 - 1e-12, 1, 1).unwrap();
        assert!(near.delta < 1e-14);
        assert!(variable_energy_interval(0.0, 16, 0.2, 0.2, 1, 1).is_err());
        assert!(w.delta_gamma > 0.0);
    }

    #[test]
    fn grids_respect_spacing() {
        let g = energy_grid(1.0, 2.0, 0.3).unwrap();
        assert_eq!(g.len(), 5);
        assert_eq!(*g.last().unwrap(), 2.0);
        assert!(g.windows(2).all(|w| w[1] - w[0] <= 0.3));
    }

    #[test]
    fn params_validation() {
        let p = MsaParams::new(0.5, 8, 2, 1, 1.0);
        assert_eq!(p.p, 13.0);
        p.validate().unwrap();
        assert!(MsaParams { p: 12.0, ..p.clone() }.validate().is_err());
        assert!(MsaParams { m1: 0.5, ..p.clone() }.validate().is_err());
        assert!(MsaParams { l0: 3, ..p }.validate().is_err());
    }
}
