//! Experiment recipes: which networks to train on which datasets, how they
//! are evaluated, and the metric rows they produce.
//!
//! A study runs in three stages that the CLI persists between commands:
//! [`generate_all`] builds datasets, [`train_all`] fits every network for
//! every seed, and [`evaluate_all`] turns both into metric rows.

use std::collections::BTreeMap;

use ndarray::{Array2, ArrayView2};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::config::{ExperimentConfig, NetworkConfig, Scenario};
use super::generate::{device_with_grid, mixture, relabel_generic, Generator, Split};
use crate::antenna::{Design, Device};
use crate::beamcore::{beam_train_rss, candidate_pairs, Dataset, Radio};
use crate::evalkit::{effective_se, genie_baseline, is_misaligned, top_n_accuracy, top_n_se_per_sample, OverheadConfig};
use crate::neural::{
    build_baseline_specific, collapse_sub6, fit_model, net1_shape, net2_shape, normalized_targets, predict_joint_batch,
    sub6_generic_label, Model, NetShape, TrainConfig, TrainSet, UtHead,
};
use crate::{Error, Result};

const EVAL_SALT: u64 = 0x9e37_79b9_7f4a_7c15;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Method {
    Agnostic,
    Specific,
}

impl Method {
    pub fn name(&self) -> &'static str {
        match self {
            Method::Agnostic => "agnostic",
            Method::Specific => "specific",
        }
    }
}

/// One output row: `seed` is the seed number or `"mean"`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricRow {
    pub experiment: String,
    pub seed: String,
    pub n: usize,
    pub metric: String,
    pub value: f64,
    pub sample_count: usize,
}

/// Appends a `"mean"` row for every (experiment, n, metric) group, after
/// the per-seed rows and in first-appearance order.
pub fn with_seed_means(rows: Vec<MetricRow>) -> Vec<MetricRow> {
    let mut order: Vec<(String, usize, String)> = Vec::new();
    let mut groups: BTreeMap<(String, usize, String), (f64, usize, usize)> = BTreeMap::new();
    for r in rows.iter().filter(|r| r.seed != "mean") {
        let key = (r.experiment.clone(), r.n, r.metric.clone());
        let e = groups.entry(key.clone()).or_insert_with(|| {
            order.push(key);
            (0.0, 0, 0)
        });
        e.0 += r.value;
        e.1 += 1;
        e.2 += r.sample_count;
    }
    let mut out = rows;
    for key in order {
        let (sum, k, count) = groups[&key];
        out.push(MetricRow {
            experiment: key.0,
            seed: "mean".into(),
            n: key.1,
            metric: key.2,
            value: sum / k as f64,
            sample_count: count,
        });
    }
    out
}

/// Identity of a dataset for digest checks: data spec digest plus devices.
pub fn dataset_digest(ds: &Dataset) -> String {
    format!("{}:{}", ds.header.config_digest, ds.header.device_ids.join("+"))
}

/// Refuses a model trained on different data unless `allow_mismatch`. The
/// scene part of the digest must match in every mode.
pub fn check_digest(model: &Model, test: &Dataset, allow_mismatch: bool) -> Result<()> {
    let want = dataset_digest(test);
    if model.data_digest == want {
        return Ok(());
    }
    let scene = |d: &str| d.split(':').next().unwrap_or("").to_string();
    if scene(&model.data_digest) != scene(&want) {
        return Err(Error::config(format!(
            "model {} was trained on data generated from a different configuration",
            model.role
        )));
    }
    if !allow_mismatch {
        return Err(Error::config(format!(
            "model {} was trained on {} but the test set is {}; use mismatch mode to cross devices",
            model.role,
            model.data_digest.split(':').nth(1).unwrap_or("?"),
            test.header.device_ids.join("+")
        )));
    }
    Ok(())
}

/// Grid-mapped device for a sample's device id.
pub fn device_for(id: &str, n_fib: usize) -> Result<Device> {
    device_with_grid(id.parse::<Design>()?, n_fib)
}

pub fn mixture_id(devices: &[Design]) -> String {
    devices.iter().map(Design::name).collect::<Vec<_>>().join("+")
}

fn features(ds: &Dataset) -> Result<Array2<f64>> {
    let d = ds.header.feature_dim;
    let flat: Vec<f64> = ds.samples.iter().flat_map(|s| s.features.iter().copied()).collect();
    Array2::from_shape_vec((ds.len(), d), flat).map_err(|e| Error::invalid(e.to_string()))
}

fn one_hot(indices: impl Iterator<Item = usize>, width: usize) -> Array2<f64> {
    let idx: Vec<usize> = indices.collect();
    let mut t = Array2::zeros((idx.len(), width));
    for (r, &k) in idx.iter().enumerate() {
        t[[r, k]] = 1.0;
    }
    t
}

fn single_device(ds: &Dataset) -> Result<&str> {
    match ds.header.device_ids.as_slice() {
        [one] => Ok(one),
        _ => Err(Error::config("device-specific networks need a single-device dataset")),
    }
}

/// NET_I: pose to AP-beam probabilities.
pub fn train_net1(ds: &Dataset, net: &NetworkConfig, tc: &TrainConfig) -> Result<Model> {
    let n_ap = ds.header.n_ap;
    let data = TrainSet {
        x: features(ds)?,
        targets: one_hot(ds.samples.iter().map(|s| s.i_star), n_ap),
        cond: None,
    };
    let shape = net1_shape(ds.header.feature_dim, net.hidden_layers, net.hidden_width, n_ap)?;
    fit_model("net1", &data, shape, tc, false, &dataset_digest(ds))
}

/// NET_II conditioned on `i*`, over grid directions or device beams.
pub fn train_net2(ds: &Dataset, net: &NetworkConfig, tc: &TrainConfig, method: Method) -> Result<Model> {
    let n_ap = ds.header.n_ap;
    let generic = net2_shape(ds.header.feature_dim, net.hidden_layers, net.hidden_width, ds.header.n_fib, n_ap)?;
    let (shape, targets) = match method {
        Method::Agnostic => (
            generic,
            normalized_targets(ds.samples.iter().map(|s| s.label_generic.as_slice()), ds.header.n_fib)?,
        ),
        Method::Specific => {
            single_device(ds)?;
            let n_ut = ds.samples.first().map_or(0, |s| s.label_specific.len());
            (
                build_baseline_specific(&generic, n_ut)?,
                normalized_targets(ds.samples.iter().map(|s| s.label_specific.as_slice()), n_ut)?,
            )
        }
    };
    let data = TrainSet {
        x: features(ds)?,
        targets,
        cond: Some(ds.samples.iter().map(|s| s.i_star).collect()),
    };
    fit_model(&format!("net2-{}", method.name()), &data, shape, tc, false, &dataset_digest(ds))
}

/// Single sub-6 network over flattened `N_AP × (n_fib | N_UT)` outputs.
pub fn train_sub6(ds: &Dataset, net: &NetworkConfig, tc: &TrainConfig, method: Method) -> Result<Model> {
    let n_ap = ds.header.n_ap;
    let (width, labels): (usize, Vec<Vec<u8>>) = match method {
        Method::Agnostic => (
            n_ap * ds.header.n_fib,
            ds.samples
                .iter()
                .map(|s| sub6_generic_label(s.i_star, &s.label_generic, n_ap))
                .collect(),
        ),
        Method::Specific => {
            single_device(ds)?;
            let n_ut = ds.samples.first().map_or(0, |s| s.n_ut());
            let mut l = Vec::with_capacity(ds.len());
            for s in &ds.samples {
                let mut v = vec![0u8; n_ap * n_ut];
                v[s.i_star * n_ut + s.j_star] = 1;
                l.push(v);
            }
            (n_ap * n_ut, l)
        }
    };
    let data = TrainSet {
        x: features(ds)?,
        targets: normalized_targets(labels.iter().map(Vec::as_slice), width)?,
        cond: None,
    };
    let shape = NetShape::new(ds.header.feature_dim, net.hidden_layers, net.hidden_width, width, None)?;
    fit_model(&format!("sub6-{}", method.name()), &data, shape, tc, true, &dataset_digest(ds))
}

/// Per-trial outcome of candidate-list sensing.
#[derive(Debug, Clone, PartialEq)]
pub struct Trial {
    pub sample: usize,
    pub n_b: usize,
    pub selected: (usize, usize),
    pub misaligned: bool,
    pub ese: f64,
    pub genie_ese: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SensingOptions {
    pub noiseless: bool,
    /// Seeds the sensing noise; shared by every method so comparisons use
    /// the same noise draws.
    pub seed: u64,
}

/// Misalignment, ESE, and genie ESE for every N_b of a sweep.
#[derive(Debug, Clone, PartialEq)]
pub struct IndoorEval {
    pub n_sweep: Vec<usize>,
    pub trials: Vec<Trial>,
    pub sample_count: usize,
}

impl IndoorEval {
    fn at(&self, n_b: usize) -> impl Iterator<Item = &Trial> {
        self.trials.iter().filter(move |t| t.n_b == n_b)
    }

    pub fn misalignment(&self, n_b: usize) -> f64 {
        self.at(n_b).filter(|t| t.misaligned).count() as f64 / self.sample_count as f64
    }

    pub fn ese(&self, n_b: usize) -> f64 {
        self.at(n_b).map(|t| t.ese).sum::<f64>() / self.sample_count as f64
    }

    pub fn genie_ese(&self) -> f64 {
        self.at(self.n_sweep[0]).map(|t| t.genie_ese).sum::<f64>() / self.sample_count as f64
    }

    pub fn rows(&self, experiment: &str, seed: &str) -> Vec<MetricRow> {
        let row = |n, metric: &str, value| MetricRow {
            experiment: experiment.to_string(),
            seed: seed.to_string(),
            n,
            metric: metric.to_string(),
            value,
            sample_count: self.sample_count,
        };
        let mut out = Vec::new();
        for &n_b in &self.n_sweep {
            out.push(row(n_b, "misalignment", self.misalignment(n_b)));
            out.push(row(n_b, "ese", self.ese(n_b)));
            out.push(row(n_b, "genie_ese", self.genie_ese()));
        }
        out
    }
}

/// Joint predictions for every test sample. The generic head uses the
/// test device's grid map, which is how mismatch evaluation works.
pub fn indoor_joint(net1: &Model, net2: &Model, method: Method, test: &Dataset) -> Result<Vec<Array2<f64>>> {
    let x = features(test)?;
    match method {
        Method::Specific => {
            let n_ut = test.samples.first().map_or(0, |s| s.n_ut());
            if net2.shape().output_dim != n_ut {
                return Err(Error::config(format!(
                    "specific network has {} outputs but the test device has {n_ut} beams",
                    net2.shape().output_dim
                )));
            }
            predict_joint_batch(net1, net2, x.view(), UtHead::Specific)
        }
        Method::Agnostic => {
            let n_fib = net2.shape().output_dim;
            let mut out = Vec::with_capacity(test.len());
            let mut start = 0;
            // consecutive runs of one device share a grid map
            while start < test.len() {
                let id = &test.samples[start].device_id;
                let end = (start..test.len()).find(|&k| &test.samples[k].device_id != id).unwrap_or(test.len());
                let device = device_for(id, n_fib)?;
                let xs: ArrayView2<f64> = x.slice(ndarray::s![start..end, ..]);
                out.extend(predict_joint_batch(net1, net2, xs, UtHead::Generic(&device))?);
                start = end;
            }
            Ok(out)
        }
    }
}

/// Candidate-list sensing over stored noiseless sweeps.
pub fn evaluate_candidates(
    joint: &[Array2<f64>],
    test: &Dataset,
    n_sweep: &[usize],
    radio: &Radio,
    overhead: &OverheadConfig,
    opts: SensingOptions,
) -> Result<IndoorEval> {
    if joint.len() != test.len() || test.is_empty() {
        return Err(Error::invalid("need one prediction per test sample"));
    }
    let noise = if opts.noiseless { 0.0 } else { radio.noise_var_w };
    let mut trials = Vec::with_capacity(joint.len() * n_sweep.len());
    for &n_b in n_sweep {
        overhead.prefactor(n_b)?;
        for (s, (p, sample)) in joint.iter().zip(&test.samples).enumerate() {
            let rss = sample.rss_true.values();
            let cand = candidate_pairs(p, n_b)?;
            let mut rng = ChaCha8Rng::seed_from_u64(opts.seed ^ EVAL_SALT);
            rng.set_stream(((n_b as u64) << 32) | s as u64);
            let selected = beam_train_rss(rss, &cand, noise, &mut rng)?;
            let (_, genie) = genie_baseline(rss, radio.noise_var_w)?;
            trials.push(Trial {
                sample: s,
                n_b,
                selected,
                misaligned: is_misaligned(rss, selected),
                ese: effective_se(rss[selected] / radio.noise_var_w, n_b, overhead)?,
                genie_ese: genie,
            });
        }
    }
    Ok(IndoorEval {
        n_sweep: n_sweep.to_vec(),
        trials,
        sample_count: test.len(),
    })
}

/// Top-n accuracy and spectral efficiency of a sub-6 predictor.
#[derive(Debug, Clone, PartialEq)]
pub struct Sub6Eval {
    pub n_sweep: Vec<usize>,
    pub accuracy: Vec<f64>,
    pub se: Vec<f64>,
    pub genie_se: f64,
    pub sample_count: usize,
}

impl Sub6Eval {
    pub fn accuracy_at(&self, n: usize) -> Option<f64> {
        self.n_sweep.iter().position(|&k| k == n).map(|p| self.accuracy[p])
    }

    pub fn rows(&self, experiment: &str, seed: &str) -> Vec<MetricRow> {
        let mut out = Vec::new();
        for (p, &n) in self.n_sweep.iter().enumerate() {
            for (metric, value) in [
                ("top_n_accuracy", self.accuracy[p]),
                ("top_n_se", self.se[p]),
                ("genie_se", self.genie_se),
            ] {
                out.push(MetricRow {
                    experiment: experiment.to_string(),
                    seed: seed.to_string(),
                    n,
                    metric: metric.to_string(),
                    value,
                    sample_count: self.sample_count,
                });
            }
        }
        out
    }
}

pub fn sub6_joint(model: &Model, method: Method, test: &Dataset) -> Result<Vec<Array2<f64>>> {
    let n_ap = test.header.n_ap;
    let probs = model.predict(features(test)?.view(), None)?;
    test.samples
        .iter()
        .zip(probs.rows())
        .map(|(s, row)| match method {
            Method::Agnostic => collapse_sub6(&row.to_vec(), &device_for(&s.device_id, test.header.n_fib)?, n_ap),
            Method::Specific => Array2::from_shape_vec((n_ap, s.n_ut()), row.to_vec())
                .map_err(|_| Error::config("specific sub-6 network does not match the test codebooks")),
        })
        .collect()
}

pub fn evaluate_sub6(joint: &[Array2<f64>], test: &Dataset, n_sweep: &[usize]) -> Result<Sub6Eval> {
    let mut truth = Vec::with_capacity(test.len());
    let mut se = Vec::with_capacity(test.len());
    for s in &test.samples {
        let rate = s.rate.clone().ok_or_else(|| Error::config("sub-6 test samples need rates"))?;
        se.push(Array2::from_shape_vec((s.n_ap(), s.n_ut()), rate).map_err(|e| Error::invalid(e.to_string()))?);
        truth.push((s.i_star, s.j_star));
    }
    let mut accuracy = Vec::new();
    let mut mean_se = Vec::new();
    for &n in n_sweep {
        accuracy.push(top_n_accuracy(joint, &truth, n)?);
        let v = top_n_se_per_sample(joint, &se, n)?;
        mean_se.push(v.iter().sum::<f64>() / v.len() as f64);
    }
    let genie_se = se.iter().map(|m| m.iter().copied().fold(f64::NEG_INFINITY, f64::max)).sum::<f64>() / se.len() as f64;
    Ok(Sub6Eval {
        n_sweep: n_sweep.to_vec(),
        accuracy,
        se: mean_se,
        genie_se,
        sample_count: test.len(),
    })
}

/// Datasets keyed by training-set id (device name or mixture id) and by
/// test device.
#[derive(Debug, Clone, Default)]
pub struct StudyData {
    pub train: BTreeMap<String, Dataset>,
    pub test: BTreeMap<String, Dataset>,
}

pub fn generate_all(cfg: &ExperimentConfig) -> Result<StudyData> {
    cfg.validate()?;
    let generator = Generator::new(cfg.data.clone())?;
    let mut data = StudyData::default();
    for &d in &cfg.devices {
        let device = device_with_grid(d, cfg.n_fib)?;
        log::info!("generating {} samples for device {d}", cfg.train_size + cfg.test_size);
        data.train
            .insert(d.name().into(), generator.generate(&device, cfg.train_size, Split::Train)?);
        data.test
            .insert(d.name().into(), generator.generate(&device, cfg.test_size, Split::Test)?);
    }
    for m in &cfg.mixtures {
        let parts: Vec<&Dataset> = m.iter().map(|d| &data.train[d.name()]).collect();
        let mixed = mixture(&parts, cfg.train_size)?;
        data.train.insert(mixture_id(m), mixed);
    }
    Ok(data)
}

/// Trained networks keyed `seed{s}/{train id}/{role}`.
pub type ModelSet = BTreeMap<String, Model>;

pub fn model_key(seed: u64, train_id: &str, role: &str) -> String {
    format!("seed{seed}/{train_id}/{role}")
}

fn truncated(ds: &Dataset, n: usize) -> Dataset {
    let mut d = ds.clone();
    d.samples.truncate(n);
    d
}

fn relabeled(ds: &Dataset, n_fib: usize) -> Result<Dataset> {
    relabel_generic(ds, &device_for(single_device(ds)?, n_fib)?)
}

pub fn train_all(cfg: &ExperimentConfig, data: &StudyData) -> Result<ModelSet> {
    let mut models = ModelSet::new();
    for &seed in &cfg.seeds {
        let tc = TrainConfig { seed, ..cfg.train };
        let net = &cfg.network;
        let mut put = |id: &str, role: &str, m: Model| {
            log::info!("trained {}", model_key(seed, id, role));
            models.insert(model_key(seed, id, role), m);
        };
        match cfg.data.scenario {
            Scenario::Indoor => {
                for d in &cfg.devices {
                    let ds = &data.train[d.name()];
                    put(d.name(), "net1", train_net1(ds, net, &tc)?);
                    put(d.name(), "agnostic", train_net2(ds, net, &tc, Method::Agnostic)?);
                    put(d.name(), "specific", train_net2(ds, net, &tc, Method::Specific)?);
                    for &n in cfg.grid_sweep.iter().filter(|&&n| n != cfg.n_fib) {
                        let r = relabeled(ds, n)?;
                        put(d.name(), &format!("agnostic-fib{n}"), train_net2(&r, net, &tc, Method::Agnostic)?);
                    }
                    for &n in &cfg.train_size_sweep {
                        let t = truncated(ds, n);
                        let id = format!("{}-n{n}", d.name());
                        put(&id, "net1", train_net1(&t, net, &tc)?);
                        put(&id, "agnostic", train_net2(&t, net, &tc, Method::Agnostic)?);
                        put(&id, "specific", train_net2(&t, net, &tc, Method::Specific)?);
                    }
                }
                for m in &cfg.mixtures {
                    let id = mixture_id(m);
                    let ds = &data.train[&id];
                    put(&id, "net1", train_net1(ds, net, &tc)?);
                    put(&id, "agnostic", train_net2(ds, net, &tc, Method::Agnostic)?);
                }
            }
            Scenario::Sub6 => {
                for d in &cfg.devices {
                    let ds = &data.train[d.name()];
                    put(d.name(), "agnostic", train_sub6(ds, net, &tc, Method::Agnostic)?);
                    put(d.name(), "specific", train_sub6(ds, net, &tc, Method::Specific)?);
                }
            }
        }
    }
    Ok(models)
}

fn get<'a>(models: &'a ModelSet, seed: u64, id: &str, role: &str) -> Result<&'a Model> {
    let key = model_key(seed, id, role);
    models
        .get(&key)
        .ok_or_else(|| Error::config(format!("missing model {key}; run train first")))
}

/// Evaluation output: CSV rows plus the per-trial records behind them,
/// keyed `{experiment}@{seed}`.
#[derive(Debug, Clone, Default)]
pub struct Evaluation {
    pub rows: Vec<MetricRow>,
    pub indoor: BTreeMap<String, IndoorEval>,
    pub sub6: BTreeMap<String, Sub6Eval>,
}

impl Evaluation {
    pub fn indoor_runs(&self, experiment: &str) -> Vec<&IndoorEval> {
        let prefix = format!("{experiment}@");
        self.indoor.iter().filter(|(k, _)| k.starts_with(&prefix)).map(|(_, v)| v).collect()
    }

    pub fn sub6_runs(&self, experiment: &str) -> Vec<&Sub6Eval> {
        let prefix = format!("{experiment}@");
        self.sub6.iter().filter(|(k, _)| k.starts_with(&prefix)).map(|(_, v)| v).collect()
    }

    /// Seed-averaged value of one metric.
    pub fn mean(&self, experiment: &str, metric: &str, n: usize) -> Option<f64> {
        self.rows
            .iter()
            .find(|r| r.seed == "mean" && r.experiment == experiment && r.metric == metric && r.n == n)
            .map(|r| r.value)
    }
}

/// A train/test pairing for mismatch evaluation.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Mismatch {
    pub train: String,
    pub test: String,
}

impl std::str::FromStr for Mismatch {
    type Err = Error;

    /// Parses `trA:teB`.
    fn from_str(s: &str) -> Result<Self> {
        let (a, b) = s
            .split_once(':')
            .ok_or_else(|| Error::invalid(format!("mismatch must look like trA:teB, got {s:?}")))?;
        let train = a.strip_prefix("tr").ok_or_else(|| Error::invalid("mismatch train part must start with tr"))?;
        let test = b.strip_prefix("te").ok_or_else(|| Error::invalid("mismatch test part must start with te"))?;
        if train.is_empty() || test.is_empty() {
            return Err(Error::invalid("mismatch needs both a training and a test dataset"));
        }
        Ok(Mismatch {
            train: train.to_string(),
            test: test.to_string(),
        })
    }
}

struct Evaluator<'a> {
    cfg: &'a ExperimentConfig,
    data: &'a StudyData,
    models: &'a ModelSet,
    out: Evaluation,
}

impl Evaluator<'_> {
    fn test(&self, id: &str) -> Result<&Dataset> {
        self.data
            .test
            .get(id)
            .ok_or_else(|| Error::config(format!("missing test set for {id}; run gen-dataset first")))
    }

    fn indoor(&mut self, experiment: &str, seed: u64, net1: (&str, &str), net2: (&str, &str), method: Method, test_id: &str, mismatch: bool) -> Result<()> {
        let test = self.test(test_id)?;
        let m1 = get(self.models, seed, net1.0, net1.1)?;
        let m2 = get(self.models, seed, net2.0, net2.1)?;
        check_digest(m1, test, mismatch)?;
        check_digest(m2, test, mismatch)?;
        let joint = indoor_joint(m1, m2, method, test)?;
        let opts = SensingOptions {
            noiseless: false,
            seed: self.cfg.data.master_seed,
        };
        let ev = evaluate_candidates(&joint, test, &self.cfg.n_sweep, &self.cfg.data.radio, &self.cfg.overhead, opts)?;
        self.out.rows.extend(ev.rows(experiment, &seed.to_string()));
        self.out.indoor.insert(format!("{experiment}@{seed}"), ev);
        Ok(())
    }

    fn sub6(&mut self, experiment: &str, seed: u64, id: &str, method: Method, test_id: &str, mismatch: bool) -> Result<()> {
        let test = self.test(test_id)?;
        let m = get(self.models, seed, id, method.name())?;
        check_digest(m, test, mismatch)?;
        let joint = sub6_joint(m, method, test)?;
        let ev = evaluate_sub6(&joint, test, &self.cfg.n_sweep)?;
        self.out.rows.extend(ev.rows(experiment, &seed.to_string()));
        self.out.sub6.insert(format!("{experiment}@{seed}"), ev);
        Ok(())
    }
}

/// Runs every experiment of the config, or only the given train/test
/// pairing.
pub fn evaluate_all(cfg: &ExperimentConfig, data: &StudyData, models: &ModelSet, only: Option<&Mismatch>) -> Result<Evaluation> {
    let mut ev = Evaluator {
        cfg,
        data,
        models,
        out: Evaluation::default(),
    };
    for &seed in &cfg.seeds {
        if let Some(mm) = only {
            let exp = format!("mismatch:tr={}:te={}", mm.train, mm.test);
            match cfg.data.scenario {
                Scenario::Indoor => {
                    let id = mm.train.as_str();
                    ev.indoor(&exp, seed, (id, "net1"), (id, "agnostic"), Method::Agnostic, &mm.test, true)?
                }
                Scenario::Sub6 => ev.sub6(&exp, seed, &mm.train, Method::Agnostic, &mm.test, true)?,
            }
            continue;
        }
        match cfg.data.scenario {
            Scenario::Indoor => {
                for d in &cfg.devices {
                    let id = d.name();
                    for method in [Method::Agnostic, Method::Specific] {
                        let exp = format!("matched:{id}:{}", method.name());
                        ev.indoor(&exp, seed, (id, "net1"), (id, method.name()), method, id, false)?;
                    }
                    for &n in cfg.grid_sweep.iter().filter(|&&n| n != cfg.n_fib) {
                        let exp = format!("grid:{id}:n_fib={n}");
                        let role = format!("agnostic-fib{n}");
                        ev.indoor(&exp, seed, (id, "net1"), (id, &role), Method::Agnostic, id, false)?;
                    }
                    for &n in &cfg.train_size_sweep {
                        let tid = format!("{id}-n{n}");
                        for method in [Method::Agnostic, Method::Specific] {
                            let exp = format!("train_size:{id}:{}:n={n}", method.name());
                            ev.indoor(&exp, seed, (&tid, "net1"), (&tid, method.name()), method, id, true)?;
                        }
                    }
                }
                for a in &cfg.devices {
                    for b in &cfg.devices {
                        let exp = format!("mismatch:tr={a}:te={b}");
                        ev.indoor(&exp, seed, (a.name(), "net1"), (a.name(), "agnostic"), Method::Agnostic, b.name(), true)?;
                    }
                }
                for m in &cfg.mixtures {
                    let id = mixture_id(m);
                    for b in m {
                        let exp = format!("mixed:tr={id}:te={b}");
                        ev.indoor(&exp, seed, (&id, "net1"), (&id, "agnostic"), Method::Agnostic, b.name(), true)?;
                    }
                }
            }
            Scenario::Sub6 => {
                for d in &cfg.devices {
                    let id = d.name();
                    for method in [Method::Agnostic, Method::Specific] {
                        let exp = format!("sub6:{id}:{}", method.name());
                        ev.sub6(&exp, seed, id, method, id, false)?;
                    }
                }
            }
        }
    }
    let mut out = ev.out;
    out.rows = with_seed_means(out.rows);
    Ok(out)
}
