//! Run configuration. Every field has a default, so an empty document is a
//! valid config; `--print-config` dumps the effective values.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use zeipel::elements::{kep_to_delaunay, EARTH_J2, EARTH_MU, EARTH_RADIUS};
use zeipel::{CanonicalMap, KeplerianElements, Order, PhysicalModel};

use crate::error::{input, CliError};

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub model: ModelConfig,
    pub elements: ElementsConfig,
    pub time: TimeConfig,
    pub theory: TheoryConfig,
    pub oracle: OracleConfig,
    pub output: OutputConfig,
    pub verify: VerifySettings,
    pub halving: HalvingSettings,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ModelConfig {
    /// km³/s²
    pub mu: f64,
    /// km
    pub radius: f64,
    /// `[J2, J3, ...]`; empty means two-body.
    pub zonal: Vec<f64>,
}

impl Default for ModelConfig {
    fn default() -> Self {
        ModelConfig {
            mu: EARTH_MU,
            radius: EARTH_RADIUS,
            zonal: vec![EARTH_J2],
        }
    }
}

/// Osculating Keplerian elements at `t = 0`, km and radians.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ElementsConfig {
    pub a: f64,
    pub e: f64,
    pub i: f64,
    pub raan: f64,
    pub argp: f64,
    pub mean_anomaly: f64,
}

impl Default for ElementsConfig {
    fn default() -> Self {
        ElementsConfig {
            a: 7000.0,
            e: 0.01,
            i: 0.5,
            raan: 0.3,
            argp: 1.2,
            mean_anomaly: 2.1,
        }
    }
}

/// Output grid in seconds from the epoch of the initial elements. Give
/// either `step` or `count` (points including both ends).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TimeConfig {
    #[serde(default)]
    pub t0: f64,
    pub t1: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub step: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub count: Option<usize>,
}

impl Default for TimeConfig {
    fn default() -> Self {
        TimeConfig {
            t0: 0.0,
            t1: 57600.0,
            step: Some(60.0),
            count: None,
        }
    }
}

impl TimeConfig {
    pub fn grid(&self) -> Result<Vec<f64>, CliError> {
        let bad = |msg: &str| Err(CliError::Config(format!("time: {msg}")));
        if !(self.t0.is_finite() && self.t1.is_finite()) || self.t0 < 0.0 {
            return bad("t0 and t1 must be finite with t0 >= 0");
        }
        if self.t1 <= self.t0 {
            return bad("t1 must be greater than t0");
        }
        match (self.step, self.count) {
            (Some(step), None) => {
                if !(step > 0.0 && step.is_finite()) {
                    return bad("step must be positive");
                }
                let n = ((self.t1 - self.t0) / step * (1.0 + 1e-12)).floor() as usize + 1;
                Ok((0..n).map(|k| self.t0 + k as f64 * step).collect())
            }
            (None, Some(count)) => {
                if count < 2 {
                    return bad("count must be at least 2");
                }
                let span = self.t1 - self.t0;
                Ok((0..count)
                    .map(|k| self.t0 + span * k as f64 / (count - 1) as f64)
                    .collect())
            }
            (Some(_), Some(_)) => bad("give step or count, not both"),
            (None, None) => bad("one of step or count is required"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TheoryConfig {
    pub order: u8,
}

impl Default for TheoryConfig {
    fn default() -> Self {
        TheoryConfig { order: 2 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OracleConfig {
    /// Highest zonal degree in the reference force model.
    pub nmax: usize,
}

impl Default for OracleConfig {
    fn default() -> Self {
        OracleConfig { nmax: 2 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OutputConfig {
    pub dir: PathBuf,
}

impl Default for OutputConfig {
    fn default() -> Self {
        OutputConfig { dir: PathBuf::from("out") }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct VerifySettings {
    pub seed: u64,
    /// Replaces every property tolerance when set.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub tolerance: Option<f64>,
}

impl Default for VerifySettings {
    fn default() -> Self {
        VerifySettings {
            seed: 1,
            tolerance: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct HalvingSettings {
    pub levels: usize,
    pub orbits: f64,
    pub samples_per_orbit: usize,
}

impl Default for HalvingSettings {
    fn default() -> Self {
        HalvingSettings {
            levels: 3,
            orbits: 10.0,
            samples_per_orbit: 20,
        }
    }
}

impl RunConfig {
    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Config(format!("cannot read {}: {e}", path.display())))?;
        Self::parse(&text)
    }

    pub fn parse(text: &str) -> Result<Self, CliError> {
        toml::from_str(text).map_err(|e| CliError::Config(e.to_string()))
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config is always serializable")
    }

    pub fn physical_model(&self) -> Result<PhysicalModel, CliError> {
        input(PhysicalModel::new(
            self.model.mu,
            self.model.radius,
            self.model.zonal.clone(),
        ))
    }

    pub fn initial_elements(&self) -> Result<KeplerianElements, CliError> {
        let e = &self.elements;
        input(KeplerianElements::new(e.a, e.e, e.i, e.raan, e.argp, e.mean_anomaly))
    }

    pub fn order(&self) -> Result<Order, CliError> {
        input(Order::from_int(self.theory.order))
    }

    /// Checks everything a propagation needs before any work starts.
    pub fn validate(&self) -> Result<(), CliError> {
        let model = self.physical_model()?;
        let el = self.initial_elements()?;
        input(kep_to_delaunay(&el, &model))?;
        input(CanonicalMap::new(&model, self.order()?))?;
        self.time.grid()?;
        if self.oracle.nmax < 2 {
            return Err(CliError::Config("oracle.nmax must be at least 2".into()));
        }
        if self.halving.levels < 2 || self.halving.samples_per_orbit == 0 || !(self.halving.orbits > 0.0) {
            return Err(CliError::Config(
                "halving needs levels >= 2, orbits > 0 and samples_per_orbit > 0".into(),
            ));
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_document_is_default() {
        assert_eq!(RunConfig::parse("").unwrap(), RunConfig::default());
    }

    #[test]
    fn dump_round_trips() {
        let cfg = RunConfig::default();
        assert_eq!(RunConfig::parse(&cfg.to_toml()).unwrap(), cfg);
    }

    #[test]
    fn unknown_keys_rejected() {
        assert!(RunConfig::parse("[model]\nmu = 1.0\nfoo = 2").is_err());
    }

    #[test]
    fn step_and_count_grids() {
        let t = TimeConfig {
            t0: 0.0,
            t1: 10.0,
            step: Some(2.5),
            count: None,
        };
        assert_eq!(t.grid().unwrap(), vec![0.0, 2.5, 5.0, 7.5, 10.0]);
        let t = TimeConfig {
            step: None,
            count: Some(3),
            ..t
        };
        assert_eq!(t.grid().unwrap(), vec![0.0, 5.0, 10.0]);
        let both = TimeConfig { step: Some(1.0), ..t.clone() };
        assert!(both.grid().is_err());
        let backwards = TimeConfig { t1: 0.0, ..t };
        assert!(backwards.grid().is_err());
    }

    #[test]
    fn time_table_without_step_uses_count() {
        let cfg = RunConfig::parse("[time]\nt1 = 100.0\ncount = 11").unwrap();
        assert_eq!(cfg.time.grid().unwrap().len(), 11);
        assert!(RunConfig::parse("[time]\nt1 = 100.0").unwrap().time.grid().is_err());
    }

    #[test]
    fn validation() {
        let mut cfg = RunConfig::default();
        cfg.validate().unwrap();
        cfg.theory.order = 3;
        assert!(matches!(cfg.validate(), Err(CliError::Config(_))));
        cfg.theory.order = 1;
        cfg.elements.e = 0.0;
        assert!(matches!(cfg.validate(), Err(CliError::Config(_))));
    }
}
