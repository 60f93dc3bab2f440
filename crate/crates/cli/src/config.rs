use std::path::{Path, PathBuf};

use levycal::calib::{CollocationSpec, FormConfig, Mode, QuadratureSpec};
use levycal::market::{PairwiseConfig, DEFAULT_RETURN_SCALE};
use levycal::simulate::{SpectralShape, DEFAULT_DIRECTIONS};
use levycal::{Error, OptimizerOptions};
use serde::{Deserialize, Serialize};

/// Everything a run needs, read from one JSON file. Missing keys take
/// their defaults; unknown keys are rejected.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub mode: Mode,
    pub form: FormConfig,
    pub quadrature: QuadratureSpec,
    pub collocation: CollocationSpec,
    pub optimizer: OptimizerOptions,
    pub init_seed: u64,
    pub alpha_init: f64,
    pub simulation: SimulationConfig,
    /// Multiplier applied to log returns in the `stocks` subcommand.
    pub return_scale: f64,
    pub input: Option<PathBuf>,
    pub output: Option<PathBuf>,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            mode: Mode::Stable,
            form: FormConfig::default(),
            quadrature: QuadratureSpec::default(),
            collocation: CollocationSpec::default(),
            optimizer: OptimizerOptions::default(),
            init_seed: 0,
            alpha_init: 1.0,
            simulation: SimulationConfig::default(),
            return_scale: DEFAULT_RETURN_SCALE,
            input: None,
            output: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SimulationConfig {
    pub alpha: f64,
    pub dt: f64,
    pub n: usize,
    /// Directions of the discretized spectral measure.
    pub n_dirs: usize,
    pub gamma: SpectralShape,
    pub seed: u64,
}

impl Default for SimulationConfig {
    fn default() -> Self {
        SimulationConfig {
            alpha: 1.5,
            dt: 0.5,
            n: 1000,
            n_dirs: DEFAULT_DIRECTIONS,
            gamma: SpectralShape::default(),
            seed: 0,
        }
    }
}

impl RunConfig {
    pub fn load(path: Option<&Path>) -> Result<Self, Error> {
        match path {
            None => Ok(RunConfig::default()),
            Some(p) => {
                let text = std::fs::read_to_string(p)
                    .map_err(|e| Error::Config(format!("cannot read config {}: {e}", p.display())))?;
                serde_json::from_str(&text).map_err(|e| Error::Config(format!("config {}: {e}", p.display())))
            }
        }
    }

    pub fn pairwise(&self) -> PairwiseConfig {
        PairwiseConfig {
            form: self.form.clone(),
            quadrature: self.quadrature.clone(),
            collocation: self.collocation.clone(),
            optimizer: self.optimizer.clone(),
            return_scale: self.return_scale,
            init_seed: self.init_seed,
            alpha_init: self.alpha_init,
        }
    }

    /// The defaults as pretty JSON, shown in `--help`.
    pub fn defaults_json() -> String {
        serde_json::to_string_pretty(&RunConfig::default()).expect("default config serializes")
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_object_is_default() {
        let c: RunConfig = serde_json::from_str("{}").unwrap();
        assert_eq!(c, RunConfig::default());
        assert_eq!(c.init_seed, 0);
        assert_eq!(c.simulation.seed, 0);
        assert_eq!(c.collocation.seed, 0);
    }

    #[test]
    fn unknown_keys_rejected() {
        assert!(serde_json::from_str::<RunConfig>(r#"{"modee": "levy"}"#).is_err());
        assert!(serde_json::from_str::<RunConfig>(r#"{"simulation": {"alfa": 1.2}}"#).is_err());
        assert!(serde_json::from_str::<RunConfig>(r#"{"optimizer": {"iters": 3}}"#).is_err());
    }

    #[test]
    fn partial_sections_keep_other_defaults() {
        let c: RunConfig = serde_json::from_str(
            r#"{"mode": "levy", "form": {"kind": "pl", "grid": 7}, "simulation": {"gamma": {"shape": "step", "value": 2.0, "cut": 0.5}}}"#,
        )
        .unwrap();
        assert_eq!(c.mode, Mode::Levy);
        assert_eq!(c.form.grid, 7);
        assert_eq!(c.form.layers, 5);
        assert_eq!(c.simulation.gamma, SpectralShape::Step { value: 2.0, cut: 0.5 });
        assert_eq!(c.simulation.n, 1000);
    }

    #[test]
    fn defaults_round_trip() {
        let text = RunConfig::defaults_json();
        assert_eq!(serde_json::from_str::<RunConfig>(&text).unwrap(), RunConfig::default());
        assert!(text.contains("\"max_iters\": 500"));
    }
}
