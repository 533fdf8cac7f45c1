//! Dense ReLU networks with a softmax head and an optional embedded
//! conditioning index, stored as one flat parameter vector.
//!
//! Layout per dense layer: `W` (out × in, row-major) then `b`. The embedding
//! table (vocab × n_h/2) comes last. With an embedding, the first hidden
//! activation is concatenated with the embedded index before the remaining
//! layers.

use ndarray::{s, Array2, ArrayView1, ArrayView2, ArrayViewMut2, Axis};
use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::{Error, Result};

/// Log-probability floor in the loss.
pub const LOG_FLOOR: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct NetShape {
    pub input_dim: usize,
    pub hidden_layers: usize,
    pub hidden_width: usize,
    pub output_dim: usize,
    /// Vocabulary size of the conditioning index, if any.
    pub embedding_vocab: Option<usize>,
}

#[derive(Debug, Clone, Copy)]
struct Dense {
    inputs: usize,
    outputs: usize,
    offset: usize,
}

impl NetShape {
    pub fn new(
        input_dim: usize,
        hidden_layers: usize,
        hidden_width: usize,
        output_dim: usize,
        embedding_vocab: Option<usize>,
    ) -> Result<Self> {
        let s = NetShape {
            input_dim,
            hidden_layers,
            hidden_width,
            output_dim,
            embedding_vocab,
        };
        s.validate()?;
        Ok(s)
    }

    pub fn validate(&self) -> Result<()> {
        if self.input_dim == 0 || self.hidden_layers == 0 || self.hidden_width == 0 || self.output_dim == 0 {
            return Err(Error::config("network dimensions must be >= 1"));
        }
        if let Some(v) = self.embedding_vocab {
            if v == 0 || self.hidden_width < 2 {
                return Err(Error::config("embedding needs vocab >= 1 and hidden width >= 2"));
            }
        }
        Ok(())
    }

    pub fn embedding_dim(&self) -> usize {
        self.embedding_vocab.map_or(0, |_| self.hidden_width / 2)
    }

    fn layers(&self) -> Vec<Dense> {
        let h = self.hidden_width;
        let mut dims = vec![(self.input_dim, h)];
        for l in 1..=self.hidden_layers {
            let inputs = if l == 1 { h + self.embedding_dim() } else { h };
            let outputs = if l == self.hidden_layers { self.output_dim } else { h };
            dims.push((inputs, outputs));
        }
        let mut offset = 0;
        dims.into_iter()
            .map(|(inputs, outputs)| {
                let d = Dense { inputs, outputs, offset };
                offset += outputs * (inputs + 1);
                d
            })
            .collect()
    }

    fn embedding_offset(&self) -> usize {
        self.layers().last().map_or(0, |d| d.offset + d.outputs * (d.inputs + 1))
    }

    pub fn param_count(&self) -> usize {
        self.embedding_offset() + self.embedding_vocab.unwrap_or(0) * self.embedding_dim()
    }
}

/// Network parameters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MlpParams {
    pub shape: NetShape,
    pub theta: Vec<f64>,
}

/// Intermediate values of a batched forward pass.
pub struct ForwardCache {
    /// Input to each dense layer.
    inputs: Vec<Array2<f64>>,
    pub probs: Array2<f64>,
}

impl MlpParams {
    pub fn zeros(shape: NetShape) -> Result<Self> {
        shape.validate()?;
        Ok(MlpParams {
            shape,
            theta: vec![0.0; shape.param_count()],
        })
    }

    /// He-normal weights, zero biases, unit-normal embeddings.
    pub fn init<R: Rng + ?Sized>(shape: NetShape, rng: &mut R) -> Result<Self> {
        let mut p = MlpParams::zeros(shape)?;
        for d in shape.layers() {
            let sd = (2.0 / d.inputs as f64).sqrt();
            for w in &mut p.theta[d.offset..d.offset + d.outputs * d.inputs] {
                *w = sd * rng.sample::<f64, _>(StandardNormal);
            }
        }
        let off = shape.embedding_offset();
        for e in &mut p.theta[off..] {
            *e = rng.sample(StandardNormal);
        }
        Ok(p)
    }

    pub fn from_flat(shape: NetShape, theta: Vec<f64>) -> Result<Self> {
        shape.validate()?;
        if theta.len() != shape.param_count() {
            return Err(Error::invalid(format!(
                "{} parameters for a shape needing {}",
                theta.len(),
                shape.param_count()
            )));
        }
        Ok(MlpParams { shape, theta })
    }

    fn weights(&self, d: &Dense) -> (ArrayView2<'_, f64>, ArrayView1<'_, f64>) {
        let w_end = d.offset + d.outputs * d.inputs;
        let w = ArrayView2::from_shape((d.outputs, d.inputs), &self.theta[d.offset..w_end]).expect("layout");
        let b = ArrayView1::from(&self.theta[w_end..w_end + d.outputs]);
        (w, b)
    }

    fn embedding(&self) -> Option<ArrayView2<'_, f64>> {
        let vocab = self.shape.embedding_vocab?;
        let off = self.shape.embedding_offset();
        Some(ArrayView2::from_shape((vocab, self.shape.embedding_dim()), &self.theta[off..]).expect("layout"))
    }

    fn check_inputs(&self, x: &ArrayView2<f64>, cond: Option<&[usize]>) -> Result<()> {
        if x.ncols() != self.shape.input_dim {
            return Err(Error::invalid(format!(
                "feature length {} but the network expects {}",
                x.ncols(),
                self.shape.input_dim
            )));
        }
        match (self.shape.embedding_vocab, cond) {
            (Some(v), Some(c)) => {
                if c.len() != x.nrows() {
                    return Err(Error::invalid("one conditioning index per row is required"));
                }
                if c.iter().any(|&i| i >= v) {
                    return Err(Error::invalid("conditioning index out of range"));
                }
                Ok(())
            }
            (Some(_), None) => Err(Error::invalid("this network needs a conditioning beam index")),
            (None, Some(_)) => Err(Error::invalid("this network takes no conditioning beam index")),
            (None, None) => Ok(()),
        }
    }

    /// Batched forward pass; rows of `x` are samples.
    pub fn forward_batch(&self, x: ArrayView2<f64>, cond: Option<&[usize]>) -> Result<ForwardCache> {
        self.check_inputs(&x, cond)?;
        let layers = self.shape.layers();
        let mut inputs = Vec::with_capacity(layers.len());
        let mut a = x.to_owned();
        for (l, d) in layers.iter().enumerate() {
            if l == 1 {
                if let (Some(table), Some(c)) = (self.embedding(), cond) {
                    let emb = table.select(Axis(0), c);
                    a = ndarray::concatenate![Axis(1), a, emb];
                }
            }
            let (w, b) = self.weights(d);
            let mut z = a.dot(&w.t());
            z += &b;
            inputs.push(a);
            if l + 1 < layers.len() {
                z.mapv_inplace(|v| v.max(0.0));
            } else {
                softmax_rows(&mut z);
            }
            a = z;
        }
        Ok(ForwardCache { inputs, probs: a })
    }

    /// Probabilities for one sample.
    pub fn forward(&self, x: &[f64], cond: Option<usize>) -> Result<Vec<f64>> {
        let xv = ArrayView2::from_shape((1, x.len()), x).expect("row");
        let c = cond.map(|c| [c]);
        let cache = self.forward_batch(xv, c.as_ref().map(|c| &c[..]))?;
        Ok(cache.probs.row(0).to_vec())
    }

    /// Mean batch loss and its gradient. `targets` rows must already be
    /// normalized to sum 1.
    pub fn loss_and_gradient(
        &self,
        x: ArrayView2<f64>,
        cond: Option<&[usize]>,
        targets: ArrayView2<f64>,
    ) -> Result<(f64, Vec<f64>)> {
        let batch = x.nrows();
        if batch == 0 {
            return Err(Error::invalid("empty batch"));
        }
        if targets.dim() != (batch, self.shape.output_dim) {
            return Err(Error::invalid("target shape does not match batch and output size"));
        }
        let cache = self.forward_batch(x, cond)?;
        let loss = cache
            .probs
            .outer_iter()
            .zip(targets.outer_iter())
            .map(|(p, t)| p.iter().zip(t).map(|(p, t)| if *t > 0.0 { -t * p.max(LOG_FLOOR).ln() } else { 0.0 }).sum::<f64>())
            .sum::<f64>()
            / batch as f64;

        let layers = self.shape.layers();
        let mut grad = vec![0.0; self.theta.len()];
        let mut dz = (&cache.probs - &targets) / batch as f64;
        for l in (0..layers.len()).rev() {
            let d = &layers[l];
            let input = &cache.inputs[l];
            {
                let w_end = d.offset + d.outputs * d.inputs;
                let (gw, rest) = grad[d.offset..].split_at_mut(w_end - d.offset);
                let mut gw = ArrayViewMut2::from_shape((d.outputs, d.inputs), gw).expect("layout");
                gw.assign(&dz.t().dot(input));
                for (g, v) in rest[..d.outputs].iter_mut().zip(dz.sum_axis(Axis(0))) {
                    *g = v;
                }
            }
            if l == 0 {
                break;
            }
            let (w, _) = self.weights(d);
            let mut da = dz.dot(&w);
            if l == 1 {
                if let Some(c) = cond {
                    let h = self.shape.hidden_width;
                    let e = self.shape.embedding_dim();
                    let off = self.shape.embedding_offset();
                    for (row, &idx) in c.iter().enumerate() {
                        for t in 0..e {
                            grad[off + idx * e + t] += da[[row, h + t]];
                        }
                    }
                    da = da.slice(s![.., ..h]).to_owned();
                }
            }
            // ReLU mask from the layer's own input, which is the previous activation
            let act = &cache.inputs[l];
            let h = da.ncols();
            ndarray::Zip::from(&mut da)
                .and(&act.slice(s![.., ..h]))
                .for_each(|g, &a| {
                    if a <= 0.0 {
                        *g = 0.0;
                    }
                });
            dz = da;
        }
        Ok((loss, grad))
    }
}

/// In-place row-wise softmax with max subtraction.
pub fn softmax_rows(z: &mut Array2<f64>) {
    for mut row in z.outer_iter_mut() {
        let m = row.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        row.mapv_inplace(|v| (v - m).exp());
        let s = row.sum();
        row /= s;
    }
}

/// `-Σ L̃ log p` with `L̃ = label / Σ label` and `log` floored at 1e-12.
pub fn cross_entropy(probs: &[f64], label: &[f64]) -> Result<f64> {
    if probs.len() != label.len() {
        return Err(Error::invalid("probability and label lengths differ"));
    }
    if label.iter().any(|l| *l < 0.0) {
        return Err(Error::invalid("label entries must be >= 0"));
    }
    let total: f64 = label.iter().sum();
    if !(total > 0.0) {
        return Err(Error::invalid("label has no positive entry"));
    }
    Ok(-probs
        .iter()
        .zip(label)
        .filter(|(_, l)| **l > 0.0)
        .map(|(p, l)| l / total * p.max(LOG_FLOOR).ln())
        .sum::<f64>())
}

/// Normalizes binary label rows into target distributions.
pub fn normalized_targets<'a>(labels: impl Iterator<Item = &'a [u8]>, width: usize) -> Result<Array2<f64>> {
    let rows: Vec<&[u8]> = labels.collect();
    let mut t = Array2::<f64>::zeros((rows.len(), width));
    for (r, l) in rows.iter().enumerate() {
        if l.len() != width {
            return Err(Error::invalid(format!("label length {} but expected {width}", l.len())));
        }
        let s: f64 = l.iter().map(|&v| v as f64).sum();
        if s == 0.0 {
            return Err(Error::invalid(format!("label row {r} is all zero")));
        }
        for (c, &v) in l.iter().enumerate() {
            t[[r, c]] = v as f64 / s;
        }
    }
    Ok(t)
}
