//! TOML run configuration. Every section is optional; missing keys take the
//! reference-device defaults (155 µA/V², 0.74 V, 0.037 1/V, Vds 4.5:0.1:10,
//! Vgs levels on [1, 5] V, noiseless).

use std::path::{Path, PathBuf};

use ajscc::device::MosfetParams;
use ajscc::experiments::{default_lambda_grid, default_phi_grid, SweepSpec};
use ajscc::precircuit::QuantizerConfig;
use ajscc::receiver::Pairing;
use ajscc::transmitter::VdsSweep;
use serde::{Deserialize, Serialize};

use crate::CliError;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SweepSection {
    pub phi_values: Vec<f64>,
    pub lambda_values: Vec<f64>,
    pub pairing: Pairing,
    pub noise_sigma: f64,
    pub seed: u64,
}

impl Default for SweepSection {
    fn default() -> Self {
        Self {
            phi_values: default_phi_grid(),
            lambda_values: default_lambda_grid(),
            pairing: Pairing::Sliding,
            noise_sigma: 0.0,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OutputSection {
    pub path: Option<PathBuf>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub device: MosfetParams,
    pub quantizer: QuantizerConfig,
    pub vds: VdsSweep,
    pub sweep: SweepSection,
    pub output: OutputSection,
}

impl RunConfig {
    /// Reads a config file. A missing path yields the defaults.
    pub fn load(path: Option<&Path>) -> Result<Self, CliError> {
        let Some(path) = path else {
            return Ok(Self::default());
        };
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Io(format!("cannot read {}: {e}", path.display())))?;
        Self::parse(&text)
    }

    pub fn parse(text: &str) -> Result<Self, CliError> {
        toml::from_str(text).map_err(|e| CliError::Invalid(format!("config: {e}")))
    }

    pub fn sweep_spec(&self) -> SweepSpec {
        SweepSpec {
            device: self.device.clone(),
            phi_values: self.sweep.phi_values.clone(),
            lambda_values: self.sweep.lambda_values.clone(),
            vds: self.vds.clone(),
            vgs_min: self.quantizer.vgs_min,
            vgs_max: self.quantizer.vgs_max,
            pairing: self.sweep.pairing,
            noise_sigma: self.sweep.noise_sigma,
            seed: self.sweep.seed,
        }
    }

    /// Validates everything that later computation depends on.
    pub fn validate(&self) -> Result<(), CliError> {
        self.device.validate()?;
        self.quantizer.validate()?;
        self.sweep_spec().validate()?;
        Ok(())
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_document_is_reference_setup() {
        let c = RunConfig::parse("").unwrap();
        assert_eq!(c, RunConfig::default());
        assert_eq!(c.device.kprime, 155e-6);
        assert_eq!(c.vds.min, 4.5);
        assert!(c.validate().is_ok());
    }

    #[test]
    fn partial_sections() {
        let c = RunConfig::parse(
            "[device]\nlambda = 0.01\n[sweep]\nphi_values = [0.5]\npairing = \"disjoint\"\n",
        )
        .unwrap();
        assert_eq!(c.device.lambda, 0.01);
        assert_eq!(c.device.vth, 0.74);
        assert_eq!(c.sweep.pairing, Pairing::Disjoint);
        assert_eq!(c.sweep_spec().phi_values, vec![0.5]);
    }

    #[test]
    fn unknown_keys_rejected() {
        assert!(RunConfig::parse("[device]\nvt = 0.7\n").is_err());
        assert!(RunConfig::parse("[devices]\n").is_err());
    }

    #[test]
    fn roundtrips_through_toml() {
        let c = RunConfig::default();
        assert_eq!(RunConfig::parse(&c.to_toml()).unwrap(), c);
    }
}
