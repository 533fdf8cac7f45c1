//! From-scratch MLP beam predictors: training, saved models, feature
//! encodings, and the inference pipelines that turn network outputs into
//! joint AP/UT beam-pair probabilities.

mod mlp;

pub use mlp::{cross_entropy, normalized_targets, softmax_rows, ForwardCache, MlpParams, NetShape, LOG_FLOOR};

use std::path::Path as FsPath;

use ndarray::{Array2, ArrayView2, Axis};
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::antenna::Device;
use crate::beamcore::{joint_probability, postprocess};
use crate::channel::Pose;
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TrainConfig {
    pub epochs: usize,
    pub batch_size: usize,
    pub learning_rate: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub epsilon: f64,
    pub seed: u64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            epochs: 40,
            batch_size: 64,
            learning_rate: 1e-3,
            beta1: 0.9,
            beta2: 0.999,
            epsilon: 1e-8,
            seed: 0,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        if self.epochs == 0 || self.batch_size == 0 {
            return Err(Error::config("epochs and batch size must be >= 1"));
        }
        if !(self.learning_rate > 0.0) {
            return Err(Error::config("learning rate must be positive"));
        }
        Ok(())
    }
}

/// Training inputs: feature rows, normalized target rows, and the optional
/// conditioning index per row.
#[derive(Debug, Clone)]
pub struct TrainSet {
    pub x: Array2<f64>,
    pub targets: Array2<f64>,
    pub cond: Option<Vec<usize>>,
}

impl TrainSet {
    pub fn len(&self) -> usize {
        self.x.nrows()
    }

    pub fn is_empty(&self) -> bool {
        self.x.nrows() == 0
    }
}

struct Adam {
    m: Vec<f64>,
    v: Vec<f64>,
    t: i32,
}

impl Adam {
    fn new(n: usize) -> Self {
        Adam {
            m: vec![0.0; n],
            v: vec![0.0; n],
            t: 0,
        }
    }

    fn step(&mut self, theta: &mut [f64], grad: &[f64], cfg: &TrainConfig) {
        self.t += 1;
        let c1 = 1.0 - cfg.beta1.powi(self.t);
        let c2 = 1.0 - cfg.beta2.powi(self.t);
        for (((p, g), m), v) in theta.iter_mut().zip(grad).zip(&mut self.m).zip(&mut self.v) {
            *m = cfg.beta1 * *m + (1.0 - cfg.beta1) * g;
            *v = cfg.beta2 * *v + (1.0 - cfg.beta2) * g * g;
            *p -= cfg.learning_rate * (*m / c1) / ((*v / c2).sqrt() + cfg.epsilon);
        }
    }
}

/// Shuffled mini-batch Adam. Returns the parameters and the mean training
/// loss of each epoch.
pub fn train(data: &TrainSet, shape: NetShape, cfg: &TrainConfig) -> Result<(MlpParams, Vec<f64>)> {
    cfg.validate()?;
    shape.validate()?;
    if data.is_empty() {
        return Err(Error::invalid("training set is empty"));
    }
    if data.x.ncols() != shape.input_dim || data.targets.ncols() != shape.output_dim {
        return Err(Error::config(format!(
            "training data is {}→{} but the network is {}→{}",
            data.x.ncols(),
            data.targets.ncols(),
            shape.input_dim,
            shape.output_dim
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut params = MlpParams::init(shape, &mut rng)?;
    let mut adam = Adam::new(params.theta.len());
    let mut order: Vec<usize> = (0..data.len()).collect();
    let mut trace = Vec::with_capacity(cfg.epochs);
    for epoch in 0..cfg.epochs {
        order.shuffle(&mut rng);
        let mut total = 0.0;
        for batch in order.chunks(cfg.batch_size) {
            let x = data.x.select(Axis(0), batch);
            let t = data.targets.select(Axis(0), batch);
            let c: Option<Vec<usize>> = data.cond.as_ref().map(|c| batch.iter().map(|&r| c[r]).collect());
            let (loss, grad) = params.loss_and_gradient(x.view(), c.as_deref(), t.view())?;
            if !loss.is_finite() {
                return Err(Error::Numerical(format!("non-finite loss in epoch {epoch}")));
            }
            total += loss * batch.len() as f64;
            adam.step(&mut params.theta, &grad, cfg);
        }
        let mean = total / data.len() as f64;
        log::debug!("epoch {epoch}: loss {mean:.5}");
        trace.push(mean);
    }
    Ok((params, trace))
}

/// Per-feature affine standardization fit on training data.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Standardizer {
    pub mean: Vec<f64>,
    pub std: Vec<f64>,
}

impl Standardizer {
    pub fn fit(x: &Array2<f64>) -> Self {
        let n = x.nrows().max(1) as f64;
        let mean: Vec<f64> = x.sum_axis(Axis(0)).iter().map(|s| s / n).collect();
        let std = x
            .axis_iter(Axis(1))
            .zip(&mean)
            .map(|(col, m)| {
                let var = col.iter().map(|v| (v - m).powi(2)).sum::<f64>() / n;
                if var > 0.0 {
                    var.sqrt()
                } else {
                    1.0
                }
            })
            .collect();
        Standardizer { mean, std }
    }

    pub fn apply(&self, x: &mut Array2<f64>) {
        for mut row in x.outer_iter_mut() {
            for ((v, m), s) in row.iter_mut().zip(&self.mean).zip(&self.std) {
                *v = (*v - m) / s;
            }
        }
    }
}

/// A trained network with everything needed to reproduce its inputs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Model {
    pub role: String,
    pub params: MlpParams,
    pub standardizer: Option<Standardizer>,
    pub train_config: TrainConfig,
    pub data_digest: String,
    pub loss_trace: Vec<f64>,
}

impl Model {
    pub fn shape(&self) -> &NetShape {
        &self.params.shape
    }

    /// Batched probabilities from raw (unstandardized) features.
    pub fn predict(&self, x: ArrayView2<f64>, cond: Option<&[usize]>) -> Result<Array2<f64>> {
        match &self.standardizer {
            Some(s) => {
                let mut z = x.to_owned();
                s.apply(&mut z);
                Ok(self.params.forward_batch(z.view(), cond)?.probs)
            }
            None => Ok(self.params.forward_batch(x, cond)?.probs),
        }
    }

    pub fn save(&self, path: &FsPath) -> Result<()> {
        let f = std::io::BufWriter::new(std::fs::File::create(path)?);
        serde_json::to_writer(f, self)?;
        Ok(())
    }

    pub fn load(path: &FsPath) -> Result<Model> {
        let f = std::io::BufReader::new(std::fs::File::open(path)?);
        let m: Model = serde_json::from_reader(f)?;
        MlpParams::from_flat(m.params.shape, m.params.theta.clone())?;
        Ok(m)
    }
}

/// Fits a model; `standardize` fits feature statistics on `data.x` first.
pub fn fit_model(role: &str, data: &TrainSet, shape: NetShape, cfg: &TrainConfig, standardize: bool, data_digest: &str) -> Result<Model> {
    let standardizer = standardize.then(|| Standardizer::fit(&data.x));
    let (params, loss_trace) = match &standardizer {
        Some(s) => {
            let mut x = data.x.clone();
            s.apply(&mut x);
            let scaled = TrainSet {
                x,
                targets: data.targets.clone(),
                cond: data.cond.clone(),
            };
            train(&scaled, shape, cfg)?
        }
        None => train(data, shape, cfg)?,
    };
    Ok(Model {
        role: role.to_string(),
        params,
        standardizer,
        train_config: *cfg,
        data_digest: data_digest.to_string(),
        loss_trace,
    })
}

/// Pose features: position over room size, then sin/cos of each angle.
pub fn indoor_features(pose: &Pose, room: &[f64; 3]) -> Vec<f64> {
    let mut f = Vec::with_capacity(9);
    for i in 0..3 {
        f.push(pose.position[i] / room[i]);
    }
    for a in pose.orientation {
        f.push(a.sin());
        f.push(a.cos());
    }
    f
}

/// Shape of NET_I (AP-beam probabilities).
pub fn net1_shape(input_dim: usize, hidden_layers: usize, hidden_width: usize, n_ap: usize) -> Result<NetShape> {
    NetShape::new(input_dim, hidden_layers, hidden_width, n_ap, None)
}

/// Shape of NET_II; `outputs` is `n_fib` for the generic net or `N_UT` for
/// the device-specific baseline.
pub fn net2_shape(input_dim: usize, hidden_layers: usize, hidden_width: usize, outputs: usize, n_ap: usize) -> Result<NetShape> {
    NetShape::new(input_dim, hidden_layers, hidden_width, outputs, Some(n_ap))
}

/// Device-specific counterpart of a generic shape: same body, output over
/// `n_outputs` beams or beam pairs.
pub fn build_baseline_specific(generic: &NetShape, n_outputs: usize) -> Result<NetShape> {
    NetShape::new(
        generic.input_dim,
        generic.hidden_layers,
        generic.hidden_width,
        n_outputs,
        generic.embedding_vocab,
    )
}

/// How NET_II outputs map to UT beams.
pub enum UtHead<'a> {
    /// Grid-direction outputs collapsed through the device's grid map.
    Generic(&'a Device),
    /// Outputs are already over the device's beams.
    Specific,
}

/// Joint `N_AP × N_UT` probabilities for a batch of feature rows.
pub fn predict_joint_batch(net1: &Model, net2: &Model, x: ArrayView2<f64>, head: UtHead<'_>) -> Result<Vec<Array2<f64>>> {
    let n_ap = net1.shape().output_dim;
    if net2.shape().embedding_vocab != Some(n_ap) {
        return Err(Error::config("NET_II embedding vocabulary must equal the AP codebook size"));
    }
    let b = x.nrows();
    let p_ap = net1.predict(x, None)?;
    let rows: Vec<usize> = (0..b).flat_map(|s| std::iter::repeat_n(s, n_ap)).collect();
    let x_rep = x.select(Axis(0), &rows);
    let cond: Vec<usize> = (0..b).flat_map(|_| 0..n_ap).collect();
    let p_cond = net2.predict(x_rep.view(), Some(&cond))?;
    let n_ut = match head {
        UtHead::Generic(d) => d.n_beams(),
        UtHead::Specific => net2.shape().output_dim,
    };
    let mut out = Vec::with_capacity(b);
    for s in 0..b {
        let mut cond_m = Array2::<f64>::zeros((n_ap, n_ut));
        for i in 0..n_ap {
            let row = p_cond.row(s * n_ap + i);
            match head {
                UtHead::Generic(d) => {
                    let pb = postprocess(&row.to_vec(), d)?;
                    cond_m.row_mut(i).assign(&ndarray::Array1::from(pb));
                }
                UtHead::Specific => cond_m.row_mut(i).assign(&row),
            }
        }
        let p = p_ap.row(s);
        out.push(joint_probability(&p.to_vec(), &cond_m)?);
    }
    Ok(out)
}

/// Joint probabilities for one sample from the generic NET_I/NET_II pair.
pub fn predict_joint(net1: &Model, net2: &Model, x: &[f64], device: &Device) -> Result<Array2<f64>> {
    let xv = ArrayView2::from_shape((1, x.len()), x).map_err(|e| Error::invalid(e.to_string()))?;
    Ok(predict_joint_batch(net1, net2, xv, UtHead::Generic(device))?.remove(0))
}

/// Collapses a flat `N_AP · n_fib` softmax into `N_AP × N_UT` probabilities.
pub fn collapse_sub6(flat: &[f64], device: &Device, n_ap: usize) -> Result<Array2<f64>> {
    let n_fib = device.require_fib_map()?.n_fib();
    if flat.len() != n_ap * n_fib {
        return Err(Error::invalid(format!(
            "output length {} is not N_AP·n_fib = {}",
            flat.len(),
            n_ap * n_fib
        )));
    }
    let mut out = Array2::<f64>::zeros((n_ap, device.n_beams()));
    for i in 0..n_ap {
        let pb = postprocess(&flat[i * n_fib..(i + 1) * n_fib], device)?;
        out.row_mut(i).assign(&ndarray::Array1::from(pb));
    }
    Ok(out)
}

/// Sub-6 generic prediction for one feature vector.
pub fn predict_sub6(model: &Model, h_features: &[f64], device: &Device, n_ap: usize) -> Result<Array2<f64>> {
    let n_fib = device.require_fib_map()?.n_fib();
    if model.shape().output_dim != n_ap * n_fib {
        return Err(Error::invalid("model output size is not N_AP·n_fib"));
    }
    let xv = ArrayView2::from_shape((1, h_features.len()), h_features).map_err(|e| Error::invalid(e.to_string()))?;
    let p = model.predict(xv, None)?;
    collapse_sub6(&p.row(0).to_vec(), device, n_ap)
}

/// Flat sub-6 generic labels: ones at `(i*, k)` for every marked point `k`.
pub fn sub6_generic_label(i_star: usize, label_generic: &[u8], n_ap: usize) -> Vec<u8> {
    let n_fib = label_generic.len();
    let mut l = vec![0u8; n_ap * n_fib];
    l[i_star * n_fib..(i_star + 1) * n_fib].copy_from_slice(label_generic);
    l
}
