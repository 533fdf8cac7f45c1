//! Labeled samples and their line-delimited JSON persistence.
//!
//! A file holds one header object followed by one sample per line.

use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path as FsPath;

use serde::{Deserialize, Serialize};

use super::RssMatrix;
use crate::channel::Pose;
use crate::{Error, Result};

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Sample {
    pub features: Vec<f64>,
    /// Sweep as measured (noisy unless the generator disabled noise).
    pub rss: RssMatrix,
    /// Noiseless sweep, used for misalignment and SNR.
    pub rss_true: RssMatrix,
    /// Per-pair spectral efficiency for OFDM scenarios, row-major.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub rate: Option<Vec<f64>>,
    pub i_star: usize,
    pub j_star: usize,
    pub label_specific: Vec<u8>,
    pub label_generic: Vec<u8>,
    pub device_id: String,
    pub n_fib: usize,
    pub seed: u64,
    pub los: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub pose: Option<Pose>,
}

impl Sample {
    pub fn n_ap(&self) -> usize {
        self.rss.n_ap()
    }

    pub fn n_ut(&self) -> usize {
        self.rss.n_ut()
    }

    pub fn rate_at(&self, i: usize, j: usize) -> Option<f64> {
        self.rate.as_ref().map(|r| r[i * self.n_ut() + j])
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DatasetHeader {
    pub schema_version: u32,
    pub kind: String,
    pub split: String,
    pub config_digest: String,
    pub master_seed: u64,
    pub device_ids: Vec<String>,
    pub n_fib: usize,
    pub n_ap: usize,
    pub feature_dim: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    pub header: DatasetHeader,
    pub samples: Vec<Sample>,
}

impl Dataset {
    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    /// Concatenates datasets of the same kind and split in order.
    pub fn concat(parts: Vec<Dataset>) -> Result<Dataset> {
        let mut it = parts.into_iter();
        let mut out = it.next().ok_or_else(|| Error::invalid("nothing to concatenate"))?;
        for d in it {
            let h = &out.header;
            if d.header.kind != h.kind || d.header.n_fib != h.n_fib || d.header.feature_dim != h.feature_dim {
                return Err(Error::invalid("datasets differ in kind, grid, or feature size"));
            }
            out.header.device_ids.extend(d.header.device_ids);
            out.samples.extend(d.samples);
        }
        out.header.device_ids.dedup();
        Ok(out)
    }

    pub fn write_jsonl<W: Write>(&self, mut w: W) -> Result<()> {
        serde_json::to_writer(&mut w, &self.header)?;
        w.write_all(b"\n")?;
        for s in &self.samples {
            serde_json::to_writer(&mut w, s)?;
            w.write_all(b"\n")?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn read_jsonl<R: BufRead>(r: R) -> Result<Dataset> {
        let mut lines = r.lines();
        let first = lines.next().ok_or_else(|| Error::config("empty dataset file"))??;
        let header: DatasetHeader = serde_json::from_str(&first)?;
        if header.schema_version != SCHEMA_VERSION {
            return Err(Error::config(format!(
                "unsupported dataset schema version {}",
                header.schema_version
            )));
        }
        let mut samples = Vec::new();
        for line in lines {
            let line = line?;
            if line.trim().is_empty() {
                continue;
            }
            samples.push(serde_json::from_str(&line)?);
        }
        Ok(Dataset { header, samples })
    }

    pub fn save(&self, path: &FsPath) -> Result<()> {
        self.write_jsonl(BufWriter::new(File::create(path)?))
    }

    pub fn load(path: &FsPath) -> Result<Dataset> {
        Dataset::read_jsonl(BufReader::new(File::open(path)?))
    }
}
