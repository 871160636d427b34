//! Run configuration: a sectioned TOML file with explicit unit suffixes in
//! every physical key. Unknown keys are rejected, and a supply given in
//! both volts and thermal-voltage units is an error.

use std::path::Path;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use mesogate::constants::PhysicalConstants;
use mesogate::device::LevelMap;
use mesogate::efficiency::GaConfig;
use mesogate::gate::XorParams;

use crate::CliError;

/// Raw on-disk schema; every field optional, defaults documented in the
/// README. The resolved snapshot written to run records uses the same
/// schema with every field present.
#[derive(Debug, Clone, Default, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct RawConfig {
    /// Optional experiment name; must match the invoked subcommand.
    pub experiment: Option<String>,
    #[serde(default)]
    pub run: RawRun,
    #[serde(default)]
    pub physics: RawPhysics,
    #[serde(default)]
    pub gate: RawGate,
    #[serde(default)]
    pub inputs: RawInputs,
    pub sweep: Option<RawSweep>,
    #[serde(default)]
    pub ga: RawGa,
    #[serde(default)]
    pub gillespie: RawGillespie,
}

#[derive(Debug, Clone, Default, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct RawRun {
    pub seed: Option<u64>,
    pub out_dir: Option<String>,
    /// Worker threads; 0 or absent = all cores.
    pub jobs: Option<usize>,
}

#[derive(Debug, Clone, Default, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct RawPhysics {
    pub temperature_kelvin: Option<f64>,
}

#[derive(Debug, Clone, Default, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct RawGate {
    /// Supply in thermal-voltage units (exclusive with `v_d_volts`).
    pub v_d_vt: Option<f64>,
    /// Supply in volts (exclusive with `v_d_vt`).
    pub v_d_volts: Option<f64>,
    pub c_g_farads: Option<f64>,
    /// Interior-node load; defaults to `c_g_farads / 50`.
    pub interior_c_g_farads: Option<f64>,
    pub alpha: Option<f64>,
    pub gamma_per_second: Option<f64>,
    pub bose_rate_cap: Option<f64>,
    pub kappa: Option<f64>,
    pub margin_n_kt: Option<f64>,
    pub margin_p_kt: Option<f64>,
    pub eps0_n_joules: Option<f64>,
    pub eps0_p_joules: Option<f64>,
    /// Switching-model activity coefficient.
    pub zeta: Option<f64>,
}

#[derive(Debug, Clone, Default, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct RawInputs {
    pub p_a: Option<f64>,
    pub p_b: Option<f64>,
    pub p_c: Option<f64>,
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct RawSweep {
    /// Swept parameter; `v_d_vt` is the only axis the experiments expose.
    pub variable: String,
    pub start: f64,
    pub stop: f64,
    pub points: usize,
}

#[derive(Debug, Clone, Default, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct RawGa {
    pub gene_bits: Option<u32>,
    pub population: Option<usize>,
    pub generations: Option<usize>,
    pub mutation_probability: Option<f64>,
    pub crossover_probability: Option<f64>,
    pub tournament_size: Option<usize>,
    pub elitism: Option<usize>,
    pub v_d_min_vt: Option<f64>,
    pub v_d_max_vt: Option<f64>,
}

#[derive(Debug, Clone, Default, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct RawGillespie {
    pub n_samples: Option<usize>,
    /// Burn-in horizon in units of `1 / gamma`.
    pub burn_in_gamma_units: Option<f64>,
    pub n_bins: Option<usize>,
}

/// Fully resolved configuration.
#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub seed: u64,
    pub out_dir: String,
    pub jobs: usize,
    pub temperature_kelvin: f64,
    pub v_d_volts: f64,
    pub c_g_farads: f64,
    pub interior_c_g_farads: f64,
    pub alpha: f64,
    pub gamma_per_second: f64,
    pub bose_rate_cap: f64,
    pub kappa: f64,
    pub margin_n_kt: f64,
    pub margin_p_kt: f64,
    pub eps0_n_joules: Option<f64>,
    pub eps0_p_joules: Option<f64>,
    pub zeta: f64,
    pub p_a: f64,
    pub p_b: f64,
    pub p_c: f64,
    pub sweep: Option<Sweep>,
    pub ga: GaConfig,
    pub n_samples: usize,
    pub burn_in_gamma_units: f64,
    pub n_bins: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Sweep {
    pub variable: String,
    pub start: f64,
    pub stop: f64,
    pub points: usize,
}

impl Sweep {
    pub fn values(&self) -> Vec<f64> {
        if self.points == 1 {
            return vec![self.start];
        }
        (0..self.points)
            .map(|i| self.start + (self.stop - self.start) * i as f64 / (self.points - 1) as f64)
            .collect()
    }
}

pub fn load_raw(path: &Path) -> Result<RawConfig, CliError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| CliError::Config(format!("cannot read {}: {e}", path.display())))?;
    toml::from_str(&text)
        .map_err(|e| CliError::Config(format!("{}: {e}", path.display())))
}

impl RawConfig {
    pub fn resolve(&self, experiment: &str) -> Result<RunConfig, CliError> {
        if let Some(named) = &self.experiment {
            if named != experiment {
                return Err(CliError::Config(format!(
                    "config names experiment '{named}' but '{experiment}' was invoked"
                )));
            }
        }
        let temperature = self.physics.temperature_kelvin.unwrap_or(300.0);
        if temperature <= 0.0 || !temperature.is_finite() {
            return Err(CliError::Config("temperature_kelvin must be > 0".into()));
        }
        let constants = PhysicalConstants::at_temperature(temperature);
        let vt = constants.thermal_voltage();
        let v_d_volts = match (self.gate.v_d_vt, self.gate.v_d_volts) {
            (Some(_), Some(_)) => {
                return Err(CliError::Config(
                    "gate.v_d_vt and gate.v_d_volts are both set; give the supply once".into(),
                ))
            }
            (Some(vt_units), None) => vt_units * vt,
            (None, Some(volts)) => volts,
            (None, None) => 15.0 * vt,
        };
        let c_g = self.gate.c_g_farads.unwrap_or(1.62e-16);
        let config = RunConfig {
            seed: self.run.seed.unwrap_or(42),
            out_dir: self.run.out_dir.clone().unwrap_or_else(|| "out".into()),
            jobs: self.run.jobs.unwrap_or(0),
            temperature_kelvin: temperature,
            v_d_volts,
            c_g_farads: c_g,
            interior_c_g_farads: self.gate.interior_c_g_farads.unwrap_or(c_g / 50.0),
            alpha: self.gate.alpha.unwrap_or(0.2),
            gamma_per_second: self.gate.gamma_per_second.unwrap_or(1e12),
            bose_rate_cap: self.gate.bose_rate_cap.unwrap_or(10.0),
            kappa: self.gate.kappa.unwrap_or(2.0),
            margin_n_kt: self.gate.margin_n_kt.unwrap_or(1.5),
            margin_p_kt: self.gate.margin_p_kt.unwrap_or(2.0),
            eps0_n_joules: self.gate.eps0_n_joules,
            eps0_p_joules: self.gate.eps0_p_joules,
            zeta: self.gate.zeta.unwrap_or(0.2),
            p_a: self.inputs.p_a.unwrap_or(0.5),
            p_b: self.inputs.p_b.unwrap_or(0.5),
            p_c: self.inputs.p_c.unwrap_or(0.5),
            sweep: self.sweep.as_ref().map(|s| Sweep {
                variable: s.variable.clone(),
                start: s.start,
                stop: s.stop,
                points: s.points,
            }),
            ga: GaConfig {
                gene_bits: self.ga.gene_bits.unwrap_or(10),
                population: self.ga.population.unwrap_or(80),
                generations: self.ga.generations.unwrap_or(100),
                mutation_probability: self.ga.mutation_probability.unwrap_or(0.001),
                crossover_probability: self.ga.crossover_probability.unwrap_or(0.8),
                tournament_size: self.ga.tournament_size.unwrap_or(2),
                elitism: self.ga.elitism.unwrap_or(1),
                v_d_min_vt: self.ga.v_d_min_vt.unwrap_or(4.0),
                v_d_max_vt: self.ga.v_d_max_vt.unwrap_or(6.0),
                seed: self.run.seed.unwrap_or(42),
            },
            n_samples: self.gillespie.n_samples.unwrap_or(10_000),
            burn_in_gamma_units: self.gillespie.burn_in_gamma_units.unwrap_or(2500.0),
            n_bins: self.gillespie.n_bins.unwrap_or(60),
        };
        config.validate()?;
        Ok(config)
    }
}

impl RunConfig {
    fn validate(&self) -> Result<(), CliError> {
        let positive = [
            ("gate.c_g_farads", self.c_g_farads),
            ("gate.interior_c_g_farads", self.interior_c_g_farads),
            ("gate.gamma_per_second", self.gamma_per_second),
            ("gate.bose_rate_cap", self.bose_rate_cap),
            ("v_d", self.v_d_volts),
        ];
        for (name, v) in positive {
            if !(v > 0.0 && v.is_finite()) {
                return Err(CliError::Config(format!("{name} must be finite and > 0")));
            }
        }
        if !(self.alpha > 0.0 && self.alpha < 0.5) {
            return Err(CliError::Config("gate.alpha must lie in (0, 0.5)".into()));
        }
        for (name, p) in [
            ("inputs.p_a", self.p_a),
            ("inputs.p_b", self.p_b),
            ("inputs.p_c", self.p_c),
        ] {
            if !(0.0..=1.0).contains(&p) {
                return Err(CliError::Config(format!("{name} must lie in [0, 1]")));
            }
        }
        if self.zeta < 0.0 {
            return Err(CliError::Config("gate.zeta must be >= 0".into()));
        }
        if let Some(sweep) = &self.sweep {
            if sweep.variable != "v_d_vt" {
                return Err(CliError::Config(format!(
                    "sweep.variable '{}' is not a sweepable parameter (expected 'v_d_vt')",
                    sweep.variable
                )));
            }
            if sweep.points == 0 || sweep.start <= 0.0 || sweep.stop < sweep.start {
                return Err(CliError::Config(
                    "sweep needs points >= 1 and 0 < start <= stop".into(),
                ));
            }
        }
        Ok(())
    }

    pub fn constants(&self) -> PhysicalConstants {
        PhysicalConstants::at_temperature(self.temperature_kelvin)
    }

    pub fn thermal_voltage(&self) -> f64 {
        self.constants().thermal_voltage()
    }

    pub fn xor_params(&self) -> XorParams {
        XorParams {
            v_d: self.v_d_volts,
            c_g_output: self.c_g_farads,
            c_g_interior: self.interior_c_g_farads,
            alpha: self.alpha,
            gamma: self.gamma_per_second,
            bose_rate_cap: self.bose_rate_cap,
            level_map: LevelMap {
                kappa: self.kappa,
                margin_n_kt: self.margin_n_kt,
                margin_p_kt: self.margin_p_kt,
                eps0_n: self.eps0_n_joules,
                eps0_p: self.eps0_p_joules,
            },
            constants: self.constants(),
        }
    }

    /// Snapshot in the on-disk schema with every field made explicit.
    pub fn to_raw(&self, experiment: &str) -> RawConfig {
        RawConfig {
            experiment: Some(experiment.to_string()),
            run: RawRun {
                seed: Some(self.seed),
                out_dir: Some(self.out_dir.clone()),
                jobs: Some(self.jobs),
            },
            physics: RawPhysics {
                temperature_kelvin: Some(self.temperature_kelvin),
            },
            gate: RawGate {
                v_d_vt: None,
                v_d_volts: Some(self.v_d_volts),
                c_g_farads: Some(self.c_g_farads),
                interior_c_g_farads: Some(self.interior_c_g_farads),
                alpha: Some(self.alpha),
                gamma_per_second: Some(self.gamma_per_second),
                bose_rate_cap: Some(self.bose_rate_cap),
                kappa: Some(self.kappa),
                margin_n_kt: Some(self.margin_n_kt),
                margin_p_kt: Some(self.margin_p_kt),
                eps0_n_joules: self.eps0_n_joules,
                eps0_p_joules: self.eps0_p_joules,
                zeta: Some(self.zeta),
            },
            inputs: RawInputs {
                p_a: Some(self.p_a),
                p_b: Some(self.p_b),
                p_c: Some(self.p_c),
            },
            sweep: self.sweep.as_ref().map(|s| RawSweep {
                variable: s.variable.clone(),
                start: s.start,
                stop: s.stop,
                points: s.points,
            }),
            ga: RawGa {
                gene_bits: Some(self.ga.gene_bits),
                population: Some(self.ga.population),
                generations: Some(self.ga.generations),
                mutation_probability: Some(self.ga.mutation_probability),
                crossover_probability: Some(self.ga.crossover_probability),
                tournament_size: Some(self.ga.tournament_size),
                elitism: Some(self.ga.elitism),
                v_d_min_vt: Some(self.ga.v_d_min_vt),
                v_d_max_vt: Some(self.ga.v_d_max_vt),
            },
            gillespie: RawGillespie {
                n_samples: Some(self.n_samples),
                burn_in_gamma_units: Some(self.burn_in_gamma_units),
                n_bins: Some(self.n_bins),
            },
        }
    }

    /// Short hash of the resolved configuration; stamped into every output
    /// file so artifacts stay traceable to their settings. Execution-only
    /// knobs (worker count, output directory) do not shape the data and are
    /// excluded.
    pub fn hash(&self, experiment: &str) -> String {
        let mut canonical = self.to_raw(experiment);
        canonical.run.jobs = Some(0);
        canonical.run.out_dir = Some("out".into());
        let snapshot = toml::to_string(&canonical).expect("config serializes");
        let mut hasher = Sha256::new();
        hasher.update(snapshot.as_bytes());
        let digest = hasher.finalize();
        let mut hex = String::with_capacity(16);
        for b in digest.iter().take(8) {
            hex.push_str(&format!("{b:02x}"));
        }
        hex
    }
}
