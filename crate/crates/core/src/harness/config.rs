//! Experiment configuration, profiles, and digests.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::antenna::{ArrayGeometry, Design, ElementPattern, Panel};
use crate::beamcore::Radio;
use crate::channel::{OfdmConfig, Scene};
use crate::evalkit::OverheadConfig;
use crate::neural::TrainConfig;
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Scenario {
    Indoor,
    Sub6,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Profile {
    Desk,
    Paper,
}

impl std::str::FromStr for Profile {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "desk" => Ok(Profile::Desk),
            "paper" => Ok(Profile::Paper),
            other => Err(Error::config(format!("unknown profile '{other}' (expected desk or paper)"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NetworkConfig {
    pub hidden_layers: usize,
    pub hidden_width: usize,
}

/// Parameters of the dual-band scenario.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DualBandConfig {
    pub sub6: OfdmConfig,
    pub mmwave: OfdmConfig,
    /// Sub-6 array at the AP, one UT antenna.
    pub sub6_array: ArrayGeometry,
}

impl Default for DualBandConfig {
    fn default() -> Self {
        DualBandConfig {
            sub6: OfdmConfig {
                subcarriers: 32,
                bandwidth_hz: 20e6,
                cp_taps: 8,
            },
            mmwave: OfdmConfig {
                subcarriers: 64,
                bandwidth_hz: 400e6,
                cp_taps: 32,
            },
            sub6_array: ArrayGeometry { nx: 1, ny: 4, nz: 1 },
        }
    }
}

/// Everything that determines dataset contents. Its digest is embedded in
/// every dataset and model.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DataSpec {
    pub scenario: Scenario,
    pub scene: Scene,
    pub ap_array: ArrayGeometry,
    pub ap_pattern: ElementPattern,
    pub radio: Radio,
    pub noisy_labels: bool,
    pub master_seed: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dual_band: Option<DualBandConfig>,
}

impl DataSpec {
    pub fn ap_panel(&self) -> Panel {
        Panel {
            geometry: self.ap_array,
            orientation: [0.0; 3],
            pattern: self.ap_pattern,
        }
    }

    pub fn digest(&self) -> String {
        digest_json(self)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentConfig {
    pub name: String,
    pub profile: Profile,
    pub data: DataSpec,
    /// Devices to generate datasets for and train on.
    pub devices: Vec<Design>,
    pub n_fib: usize,
    /// Extra grid sizes for the sensitivity experiment.
    #[serde(default)]
    pub grid_sweep: Vec<usize>,
    /// Mixed training sets, each the concatenation of per-device sets.
    #[serde(default)]
    pub mixtures: Vec<Vec<Design>>,
    pub train_size: usize,
    /// Truncated training sizes for the data-efficiency experiment.
    #[serde(default)]
    pub train_size_sweep: Vec<usize>,
    pub test_size: usize,
    /// Candidate-list sizes (indoor) or Top-n values (sub-6).
    pub n_sweep: Vec<usize>,
    pub seeds: Vec<u64>,
    pub network: NetworkConfig,
    pub train: TrainConfig,
    pub overhead: OverheadConfig,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub out_dir: Option<PathBuf>,
}

impl ExperimentConfig {
    pub fn indoor(profile: Profile) -> Self {
        let (ap_array, network, train_size, test_size, train_size_sweep) = match profile {
            Profile::Desk => (
                ArrayGeometry { nx: 1, ny: 8, nz: 1 },
                NetworkConfig {
                    hidden_layers: 3,
                    hidden_width: 64,
                },
                4000,
                1000,
                vec![],
            ),
            Profile::Paper => (
                ArrayGeometry { nx: 1, ny: 8, nz: 8 },
                NetworkConfig {
                    hidden_layers: 5,
                    hidden_width: 128,
                },
                56_000,
                14_000,
                vec![500, 1000, 2000, 4000, 8000, 19_000],
            ),
        };
        ExperimentConfig {
            name: "indoor".into(),
            profile,
            data: DataSpec {
                scenario: Scenario::Indoor,
                scene: Scene::indoor(),
                ap_array,
                ap_pattern: ElementPattern::patch(),
                radio: Radio::default(),
                noisy_labels: true,
                master_seed: 2024,
                dual_band: None,
            },
            devices: Design::all().to_vec(),
            n_fib: 100,
            grid_sweep: vec![10],
            mixtures: vec![Design::all().to_vec()],
            train_size,
            train_size_sweep,
            test_size,
            n_sweep: vec![1, 2, 3, 5, 10, 15, 20, 30, 40],
            seeds: vec![0, 1, 2],
            network,
            train: TrainConfig::default(),
            overhead: OverheadConfig::default(),
            out_dir: None,
        }
    }

    pub fn sub6(profile: Profile) -> Self {
        let base = ExperimentConfig::indoor(profile);
        let (train_size, test_size) = match profile {
            Profile::Desk => (4000, 1000),
            Profile::Paper => (14_000, 6_000),
        };
        ExperimentConfig {
            name: "sub6".into(),
            data: DataSpec {
                scenario: Scenario::Sub6,
                scene: Scene::dual_band(),
                ap_array: ArrayGeometry { nx: 1, ny: 8, nz: 1 },
                dual_band: Some(DualBandConfig::default()),
                ..base.data
            },
            devices: vec![Design::F],
            grid_sweep: vec![],
            mixtures: vec![],
            train_size_sweep: vec![],
            train_size,
            test_size,
            n_sweep: vec![1, 2, 3, 5, 10],
            ..base
        }
    }

    pub fn for_scenario(scenario: Scenario, profile: Profile) -> Self {
        match scenario {
            Scenario::Indoor => ExperimentConfig::indoor(profile),
            Scenario::Sub6 => ExperimentConfig::sub6(profile),
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.data.scene.validate()?;
        self.train.validate()?;
        self.overhead.validate()?;
        if self.devices.is_empty() {
            return Err(Error::config("at least one device is required"));
        }
        if self.n_fib == 0 || self.train_size == 0 || self.test_size == 0 {
            return Err(Error::config("n_fib and dataset sizes must be >= 1"));
        }
        if self.grid_sweep.contains(&0) {
            return Err(Error::config("grid sizes must be >= 1"));
        }
        if self.train_size_sweep.iter().any(|&n| n == 0 || n > self.train_size) {
            return Err(Error::config("training-size sweep values must lie in 1..=train_size"));
        }
        if self.mixtures.iter().any(|m| m.len() < 2 || m.iter().any(|d| !self.devices.contains(d))) {
            return Err(Error::config("mixtures need >= 2 devices, all listed in devices"));
        }
        if self.seeds.is_empty() {
            return Err(Error::config("at least one seed is required"));
        }
        if self.n_sweep.contains(&0) {
            return Err(Error::config("N_b / n values must be >= 1"));
        }
        if self.network.hidden_layers == 0 || self.network.hidden_width < 2 {
            return Err(Error::config("networks need >= 1 hidden layer of width >= 2"));
        }
        if self.data.scenario == Scenario::Sub6 {
            let db = self.data.dual_band.ok_or_else(|| Error::config("sub6 scenario needs dual_band settings"))?;
            db.sub6.validate()?;
            db.mmwave.validate()?;
        }
        Ok(())
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        let cfg: ExperimentConfig = serde_json::from_str(&text)?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        std::fs::write(path, serde_json::to_string_pretty(self)?)?;
        Ok(())
    }
}

/// SHA-256 of the compact JSON encoding, hex.
pub fn digest_json<T: Serialize>(value: &T) -> String {
    let bytes = serde_json::to_vec(value).expect("serializable");
    let hash = Sha256::digest(&bytes);
    hash.iter().map(|b| format!("{b:02x}")).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_validate() {
        for p in [Profile::Desk, Profile::Paper] {
            ExperimentConfig::indoor(p).validate().unwrap();
            ExperimentConfig::sub6(p).validate().unwrap();
        }
        assert_eq!(ExperimentConfig::indoor(Profile::Paper).data.ap_array.element_count(), 64);
    }

    #[test]
    fn digest_tracks_content() {
        let a = ExperimentConfig::indoor(Profile::Desk).data;
        let mut b = a.clone();
        assert_eq!(a.digest(), b.digest());
        b.master_seed += 1;
        assert_ne!(a.digest(), b.digest());
        assert_eq!(a.digest().len(), 64);
    }

    #[test]
    fn json_roundtrip_and_bad_values() {
        let cfg = ExperimentConfig::sub6(Profile::Desk);
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("c.json");
        cfg.save(&p).unwrap();
        assert_eq!(ExperimentConfig::load(&p).unwrap(), cfg);
        let mut bad = cfg.clone();
        bad.train_size = 0;
        bad.save(&p).unwrap();
        assert!(matches!(ExperimentConfig::load(&p), Err(Error::Config(_))));
        assert!("lab".parse::<Profile>().is_err());
    }
}
