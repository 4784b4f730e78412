//! Experiment configuration. Every key that carries a physical quantity
//! names its unit: lengths in lattice grid units, energies and couplings in
//! energy units, times in inverse energy units.

use mpmsa::model::{DisorderSpec, InteractionSpec, ModelSpec, DEFAULT_MAX_DIM};
use mpmsa::msa::{default_p, MsaParams};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::CliError;

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub master_seed: Option<u64>,
    #[serde(default)]
    pub model: ModelBlock,
    #[serde(default)]
    pub msa: MsaBlock,
    #[serde(default)]
    pub dynamics: DynamicsBlock,
    #[serde(default)]
    pub geometry: GeometryBlock,
    #[serde(default)]
    pub output: OutputBlock,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ModelBlock {
    pub disorder: DisorderSpec,
    pub lattice_dim: usize,
    pub interaction_range_grid_units: i64,
    /// `Phi(0), .., Phi(r0)`; a unit bump when empty.
    pub interaction_profile_energy_units: Vec<f64>,
    pub interaction_amplitude: f64,
    pub refinement_points_per_grid_unit: u32,
    pub max_dim_states: usize,
}

impl Default for ModelBlock {
    fn default() -> Self {
        Self {
            disorder: DisorderSpec::Uniform { low: 0.0, high: 20.0 },
            lattice_dim: 1,
            interaction_range_grid_units: 1,
            interaction_profile_energy_units: Vec::new(),
            interaction_amplitude: 0.0,
            refinement_points_per_grid_unit: 1,
            max_dim_states: DEFAULT_MAX_DIM,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct MsaBlock {
    pub total_particles: usize,
    pub particles: usize,
    /// Spacing between consecutive particle centers of the studied cubes.
    pub particle_spacing_grid_units: i64,
    /// Decay mass; derived as `2^{-N-1} mu` from a fitted decay curve when absent.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub mass_per_grid_unit: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub reduced_mass_per_grid_unit: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub p_exponent: Option<f64>,
    pub l0_grid_units: i64,
    pub k_max: usize,
    pub e0_energy_units: f64,
    pub trials: u64,
    /// Also estimate the two-cube singularity probability at every scale.
    pub pair: bool,
    pub wegner_half_sides_grid_units: Vec<i64>,
    pub decay_half_sides_grid_units: Vec<i64>,
    pub weak_half_side_grid_units: i64,
    pub h_grid_energy_units: Vec<f64>,
    pub energies_energy_units: Vec<f64>,
}

impl Default for MsaBlock {
    fn default() -> Self {
        Self {
            total_particles: 1,
            particles: 1,
            particle_spacing_grid_units: 2,
            mass_per_grid_unit: None,
            reduced_mass_per_grid_unit: None,
            p_exponent: None,
            l0_grid_units: 8,
            k_max: 2,
            e0_energy_units: 1.0,
            trials: 200,
            pair: false,
            wegner_half_sides_grid_units: vec![8, 16, 32],
            decay_half_sides_grid_units: vec![8, 16, 32],
            weak_half_side_grid_units: 8,
            h_grid_energy_units: vec![0.0, 0.05, 0.1, 0.15, 0.2],
            energies_energy_units: Vec::new(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct DynamicsBlock {
    pub moment_exponent: f64,
    pub t_max_inverse_energy_units: Vec<f64>,
    pub times_per_decade: usize,
    pub half_side_grid_units: i64,
    /// `K` is the open cube of this half-side around the cube center.
    pub k_half_side_grid_units: i64,
    /// Spectral window `I`; the whole spectrum when absent.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub interval_energy_units: Option<(f64, f64)>,
    pub trials: u64,
}

impl Default for DynamicsBlock {
    fn default() -> Self {
        Self {
            moment_exponent: 1.0,
            t_max_inverse_energy_units: vec![10.0, 100.0, 1000.0],
            times_per_decade: 8,
            half_side_grid_units: 64,
            k_half_side_grid_units: 1,
            interval_energy_units: None,
            trials: 20,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct GeometryBlock {
    pub max_particles: usize,
    pub randomized_trials: u64,
}

impl Default for GeometryBlock {
    fn default() -> Self {
        Self { max_particles: 3, randomized_trials: 10_000 }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct OutputBlock {
    pub directory: String,
    /// Any of `jsonl`, `csv`, `dat`.
    pub formats: Vec<String>,
}

impl Default for OutputBlock {
    fn default() -> Self {
        Self { directory: "out".into(), formats: vec!["jsonl".into(), "csv".into(), "dat".into()] }
    }
}

pub const FORMATS: [&str; 3] = ["jsonl", "csv", "dat"];

fn invalid(msg: impl Into<String>) -> CliError {
    CliError::Validation(msg.into())
}

impl ExperimentConfig {
    pub fn parse(text: &str) -> Result<Self, CliError> {
        toml::from_str(text).map_err(|e| invalid(format!("config: {e}")))
    }

    /// Fills every optional value with its default so the emitted copy is
    /// complete. The mass stays absent when it is to be derived.
    pub fn resolve(mut self, seed: u64) -> Result<Self, CliError> {
        self.master_seed = Some(seed);
        let m = &mut self.msa;
        m.p_exponent.get_or_insert(default_p(m.total_particles, self.model.lattice_dim));
        if let Some(mass) = m.mass_per_grid_unit {
            m.reduced_mass_per_grid_unit.get_or_insert(mass / 2.0);
        }
        if m.energies_energy_units.is_empty() {
            m.energies_energy_units.push(m.e0_energy_units);
        }
        self.validate()?;
        Ok(self)
    }

    pub fn validate(&self) -> Result<(), CliError> {
        self.model().map_err(|e| invalid(e.to_string()))?;
        let md = &self.model;
        if md.lattice_dim == 0 || md.lattice_dim > 3 {
            return Err(invalid("lattice_dim must be 1, 2 or 3"));
        }
        let m = &self.msa;
        if m.particles == 0 || m.particles > m.total_particles || m.total_particles > 64 {
            return Err(invalid(format!("need 1 <= particles <= total_particles <= 64, got {} and {}", m.particles, m.total_particles)));
        }
        if m.particle_spacing_grid_units < 0 {
            return Err(invalid("particle spacing must be nonnegative"));
        }
        if m.trials == 0 || self.dynamics.trials == 0 {
            return Err(invalid("trial counts must be positive"));
        }
        if let Some(mass) = m.mass_per_grid_unit {
            self.params(mass).validate().map_err(|e| invalid(e.to_string()))?;
        } else if m.l0_grid_units < 4 {
            return Err(invalid("l0_grid_units must be at least 4"));
        }
        if m.wegner_half_sides_grid_units.iter().chain(&m.decay_half_sides_grid_units).any(|&l| l < 4)
            || m.weak_half_side_grid_units < 4
        {
            return Err(invalid("cube half-sides must be at least 4"));
        }
        if !m.h_grid_energy_units.contains(&0.0) {
            return Err(invalid("h_grid_energy_units must contain 0"));
        }
        let all_finite = m.h_grid_energy_units.iter().chain(&m.energies_energy_units).all(|x| x.is_finite());
        if !all_finite || !m.e0_energy_units.is_finite() {
            return Err(invalid("energies and couplings must be finite"));
        }
        let d = &self.dynamics;
        if !(d.moment_exponent > 0.0) {
            return Err(invalid("moment_exponent must be positive"));
        }
        if d.t_max_inverse_energy_units.is_empty() || d.t_max_inverse_energy_units.iter().any(|&t| !(t > 0.0)) {
            return Err(invalid("t_max_inverse_energy_units must be a nonempty list of positive times"));
        }
        if d.times_per_decade == 0 || d.half_side_grid_units < 4 || d.k_half_side_grid_units < 1 {
            return Err(invalid("dynamics grid parameters out of range"));
        }
        if d.k_half_side_grid_units > d.half_side_grid_units {
            return Err(invalid("K must lie inside the dynamics cube"));
        }
        if let Some((lo, hi)) = d.interval_energy_units {
            if !(lo <= hi) {
                return Err(invalid("interval_energy_units must satisfy lo <= hi"));
            }
        }
        if self.geometry.max_particles == 0 || self.geometry.max_particles > 4 || self.geometry.randomized_trials == 0 {
            return Err(invalid("geometry.max_particles must be in 1..=4 with a positive trial count"));
        }
        if let Some(f) = self.output.formats.iter().find(|f| !FORMATS.contains(&f.as_str())) {
            return Err(invalid(format!("unknown output format {f:?}")));
        }
        Ok(())
    }

    pub fn seed(&self) -> u64 {
        self.master_seed.unwrap_or(0)
    }

    pub fn model(&self) -> mpmsa::Result<ModelSpec> {
        let md = &self.model;
        let interaction = if md.interaction_profile_energy_units.is_empty() {
            InteractionSpec::bump(md.interaction_range_grid_units, md.interaction_amplitude)?
        } else {
            InteractionSpec::tabulated(md.interaction_profile_energy_units.clone(), md.interaction_amplitude)?
        };
        let spec = ModelSpec {
            disorder: md.disorder.clone(),
            interaction,
            refinement: md.refinement_points_per_grid_unit,
            max_dim: md.max_dim_states,
        };
        spec.validate()?;
        Ok(spec)
    }

    pub fn params(&self, mass: f64) -> MsaParams {
        let m = &self.msa;
        let mut p = MsaParams::new(mass, m.l0_grid_units, m.total_particles, m.particles, m.e0_energy_units);
        p.dim = self.model.lattice_dim;
        p.p = m.p_exponent.unwrap_or(default_p(m.total_particles, p.dim));
        p.m1 = m.reduced_mass_per_grid_unit.unwrap_or(mass / 2.0);
        p
    }

    pub fn wants(&self, format: &str) -> bool {
        self.output.formats.iter().any(|f| f == format)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }

    /// SHA-256 of the resolved configuration text, leaving out the output
    /// directory so relocated runs hash alike.
    pub fn hash(&self) -> String {
        let mut c = self.clone();
        c.output.directory.clear();
        format!("{:x}", Sha256::digest(c.to_toml().as_bytes()))
    }
}
