//! Command implementations behind the CLI. Every command reads and writes
//! a fixed layout under the output directory:
//!
//! ```text
//! config.json  scene.json
//! data/{train,test}_{id}.jsonl  data/coverage.json
//! models/seed{s}/{id}/{role}.json
//! metrics.csv  plot_data.csv
//! map/{device}_n{n_fib}_{regions.csv,fib_map.json,histogram.csv}
//! ```

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use serde::Serialize;

use super::config::ExperimentConfig;
use super::export::{best_beam_histogram, fib_map_export, save_histogram, save_metrics, save_plot_data};
use super::generate::device_with_grid;
use super::study::{evaluate_all, generate_all, train_all, Evaluation, Mismatch, ModelSet, StudyData};
use crate::antenna::{beam_region_grid, Design};
use crate::beamcore::Dataset;
use crate::neural::Model;
use crate::{Error, Result};

fn data_dir(out: &Path) -> PathBuf {
    out.join("data")
}

fn models_dir(out: &Path) -> PathBuf {
    out.join("models")
}

fn write_json<T: Serialize>(value: &T, path: &Path) -> Result<()> {
    fs::write(path, serde_json::to_string_pretty(value)?)?;
    Ok(())
}

fn create_dir(path: &Path) -> Result<()> {
    fs::create_dir_all(path)?;
    Ok(())
}

/// Writes the resolved config and its scene.
pub fn cmd_gen_scene(cfg: &ExperimentConfig, out: &Path) -> Result<PathBuf> {
    cfg.validate()?;
    create_dir(out)?;
    cfg.save(&out.join("config.json"))?;
    let path = out.join("scene.json");
    write_json(&cfg.data.scene, &path)?;
    Ok(path)
}

#[derive(Serialize)]
struct CoverageEntry {
    device: String,
    n_fib: usize,
    uncovered_beams: Vec<usize>,
}

/// Generates every dataset of the config plus coverage diagnostics.
pub fn cmd_gen_dataset(cfg: &ExperimentConfig, out: &Path) -> Result<StudyData> {
    let data = generate_all(cfg)?;
    let dir = data_dir(out);
    create_dir(&dir)?;
    cfg.save(&out.join("config.json"))?;
    for (split, sets) in [("train", &data.train), ("test", &data.test)] {
        for (id, ds) in sets {
            ds.save(&dir.join(format!("{split}_{id}.jsonl")))?;
        }
    }
    let mut coverage = Vec::new();
    let mut sizes = vec![cfg.n_fib];
    sizes.extend(cfg.grid_sweep.iter().copied().filter(|&n| n != cfg.n_fib));
    for &d in &cfg.devices {
        for &n in &sizes {
            coverage.push(CoverageEntry {
                device: d.name().into(),
                n_fib: n,
                uncovered_beams: crate::beamcore::report_coverage(&device_with_grid(d, n)?)?,
            });
        }
    }
    write_json(&coverage, &dir.join("coverage.json"))?;
    Ok(data)
}

fn load_split(cfg: &ExperimentConfig, out: &Path, split: &str) -> Result<BTreeMap<String, Dataset>> {
    let dir = data_dir(out);
    let mut ids: Vec<String> = cfg.devices.iter().map(|d| d.name().to_string()).collect();
    if split == "train" {
        ids.extend(cfg.mixtures.iter().map(|m| super::study::mixture_id(m)));
    }
    let want = cfg.data.digest();
    let mut sets = BTreeMap::new();
    for id in ids {
        let path = dir.join(format!("{split}_{id}.jsonl"));
        if !path.exists() {
            return Err(Error::config(format!("missing dataset {}; run gen-dataset first", path.display())));
        }
        let ds = Dataset::load(&path)?;
        if ds.header.config_digest != want {
            return Err(Error::config(format!(
                "{} was generated from a different configuration",
                path.display()
            )));
        }
        if ds.header.n_fib != cfg.n_fib || ds.header.n_ap != cfg.data.ap_array.element_count() {
            return Err(Error::config(format!(
                "{} does not match the configured grid or AP codebook size",
                path.display()
            )));
        }
        sets.insert(id, ds);
    }
    Ok(sets)
}

/// Trains every network for every seed and saves them.
pub fn cmd_train(cfg: &ExperimentConfig, out: &Path) -> Result<ModelSet> {
    cfg.validate()?;
    let data = StudyData {
        train: load_split(cfg, out, "train")?,
        test: BTreeMap::new(),
    };
    let models = train_all(cfg, &data)?;
    let root = models_dir(out);
    for (key, m) in &models {
        let path = root.join(format!("{key}.json"));
        create_dir(path.parent().unwrap_or(&root))?;
        m.save(&path)?;
    }
    Ok(models)
}

fn load_models(cfg: &ExperimentConfig, out: &Path) -> Result<ModelSet> {
    let root = models_dir(out);
    let mut models = ModelSet::new();
    for &seed in &cfg.seeds {
        let seed_dir = root.join(format!("seed{seed}"));
        if !seed_dir.is_dir() {
            return Err(Error::config(format!("missing models for seed {seed}; run train first")));
        }
        let mut ids: Vec<_> = fs::read_dir(&seed_dir)?.collect::<std::io::Result<Vec<_>>>()?;
        ids.sort_by_key(|e| e.file_name());
        for id in ids {
            let mut files: Vec<_> = fs::read_dir(id.path())?.collect::<std::io::Result<Vec<_>>>()?;
            files.sort_by_key(|e| e.file_name());
            for f in files {
                let path = f.path();
                let Some(role) = path.file_stem().and_then(|s| s.to_str()) else {
                    continue;
                };
                let key = format!("seed{seed}/{}/{role}", id.file_name().to_string_lossy());
                models.insert(key, Model::load(&path)?);
            }
        }
    }
    Ok(models)
}

/// Evaluates saved models on saved test sets and writes the metric tables.
/// With `mismatch`, only that train/test pairing is evaluated and the
/// tables get a `_tr{A}_te{B}` suffix.
pub fn cmd_eval(cfg: &ExperimentConfig, out: &Path, mismatch: Option<&Mismatch>) -> Result<Evaluation> {
    cfg.validate()?;
    let data = StudyData {
        train: BTreeMap::new(),
        test: load_split(cfg, out, "test")?,
    };
    let models = load_models(cfg, out)?;
    let ev = evaluate_all(cfg, &data, &models, mismatch)?;
    let suffix = mismatch.map_or(String::new(), |m| format!("_tr{}_te{}", m.train, m.test));
    save_metrics(&ev.rows, &out.join(format!("metrics{suffix}.csv")))?;
    save_plot_data(&ev.rows, &out.join(format!("plot_data{suffix}.csv")))?;
    Ok(ev)
}

/// Paths written by [`cmd_map`].
#[derive(Debug, Clone)]
pub struct MapOutputs {
    pub regions: PathBuf,
    pub fib_map: PathBuf,
    pub histogram: Option<PathBuf>,
}

/// Beam regions, the grid map, and optionally the best-beam histogram of
/// a dataset.
pub fn cmd_map(
    design: Design,
    n_fib: usize,
    az_steps: usize,
    el_steps: usize,
    dataset: Option<&Path>,
    out: &Path,
) -> Result<MapOutputs> {
    let device = device_with_grid(design, n_fib)?;
    let dir = out.join("map");
    create_dir(&dir)?;
    let stem = format!("{}_n{n_fib}", design.name());
    let regions = dir.join(format!("{stem}_regions.csv"));
    beam_region_grid(&device, az_steps, el_steps)?.write_csv(std::io::BufWriter::new(fs::File::create(&regions)?))?;
    let fib_map = dir.join(format!("{stem}_fib_map.json"));
    write_json(&fib_map_export(&device)?, &fib_map)?;
    crate::beamcore::report_coverage(&device)?;
    let histogram = match dataset {
        Some(p) => {
            let ds = Dataset::load(p)?;
            if ds.header.device_ids != [design.name()] {
                return Err(Error::config(format!(
                    "dataset holds devices {:?}, not {design}",
                    ds.header.device_ids
                )));
            }
            let path = dir.join(format!("{stem}_histogram.csv"));
            save_histogram(&best_beam_histogram(&ds, device.n_beams())?, &path)?;
            Some(path)
        }
        None => None,
    };
    Ok(MapOutputs {
        regions,
        fib_map,
        histogram,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::harness::config::{NetworkConfig, Profile};
    use crate::harness::export::load_metrics;

    fn tiny() -> ExperimentConfig {
        let mut cfg = ExperimentConfig::indoor(Profile::Desk);
        cfg.devices = vec![Design::E, Design::F];
        cfg.mixtures = vec![];
        cfg.grid_sweep = vec![];
        cfg.train_size = 40;
        cfg.test_size = 10;
        cfg.seeds = vec![0];
        cfg.n_sweep = vec![1, 3];
        cfg.train.epochs = 1;
        cfg.network = NetworkConfig {
            hidden_layers: 1,
            hidden_width: 8,
        };
        cfg
    }

    #[test]
    fn pipeline_roundtrip_on_disk() {
        let dir = tempfile::tempdir().unwrap();
        let cfg = tiny();
        cmd_gen_scene(&cfg, dir.path()).unwrap();
        assert!(matches!(cmd_train(&cfg, dir.path()), Err(Error::Config(_))));
        cmd_gen_dataset(&cfg, dir.path()).unwrap();
        let trained = cmd_train(&cfg, dir.path()).unwrap();
        assert_eq!(load_models(&cfg, dir.path()).unwrap(), trained);
        let ev = cmd_eval(&cfg, dir.path(), None).unwrap();
        assert_eq!(load_metrics(&dir.path().join("metrics.csv")).unwrap(), ev.rows);
        let mm: Mismatch = "trE:teF".parse().unwrap();
        cmd_eval(&cfg, dir.path(), Some(&mm)).unwrap();
        assert!(dir.path().join("metrics_trE_teF.csv").exists());
    }

    #[test]
    fn config_drift_is_refused() {
        let dir = tempfile::tempdir().unwrap();
        let cfg = tiny();
        cmd_gen_dataset(&cfg, dir.path()).unwrap();
        let mut other = cfg.clone();
        other.data.master_seed += 1;
        assert!(matches!(cmd_train(&other, dir.path()), Err(Error::Config(_))));
        let mut grid = cfg.clone();
        grid.n_fib = 25;
        assert!(matches!(cmd_train(&grid, dir.path()), Err(Error::Config(_))));
    }

    #[test]
    fn map_outputs() {
        let dir = tempfile::tempdir().unwrap();
        let cfg = tiny();
        cmd_gen_dataset(&cfg, dir.path()).unwrap();
        let ds = dir.path().join("data/test_E.jsonl");
        let m = cmd_map(Design::E, 25, 36, 18, Some(&ds), dir.path()).unwrap();
        let text = fs::read_to_string(&m.regions).unwrap();
        assert_eq!(text.lines().count(), 1 + 36 * 18);
        let fm: serde_json::Value = serde_json::from_str(&fs::read_to_string(&m.fib_map).unwrap()).unwrap();
        assert_eq!(fm["beam_of_point"].as_array().unwrap().len(), 25);
        let hist = fs::read_to_string(m.histogram.unwrap()).unwrap();
        let total: f64 = hist.lines().skip(1).map(|l| l.split(',').nth(1).unwrap().parse::<f64>().unwrap()).sum();
        assert!((total - 1.0).abs() < 1e-12);
        assert!(cmd_map(Design::F, 25, 4, 4, Some(&ds), dir.path()).is_err());
    }
}
