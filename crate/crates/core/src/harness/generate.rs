//! Dataset generation for the indoor pose scenario and the dual-band
//! sub-6 scenario.
//!
//! Sample `s` of a split draws from its own ChaCha stream, so the pose
//! sequence is identical across devices and independent of dataset size.
//! Odd samples have the LOS path blocked, even samples keep it.

use ndarray::Array2;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::config::{DataSpec, Scenario};
use crate::antenna::{dft_codebook, Codebook, Design, Device, build_device};
use crate::beamcore::{
    label_generic, label_specific, remeasure, report_coverage, sweep, Dataset, DatasetHeader, RssMatrix, Sample,
    SCHEMA_VERSION,
};
use crate::channel::narrowband::narrowband_channel;
use crate::channel::ofdm::{beamspace_ofdm, ofdm_channels, pair_rates};
use crate::channel::{sample_pose, trace_paths, Band};
use crate::neural::indoor_features;
use crate::sphgrid::fibonacci_grid;
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Split {
    Train,
    Test,
}

impl Split {
    pub fn name(&self) -> &'static str {
        match self {
            Split::Train => "train",
            Split::Test => "test",
        }
    }

    fn stream_base(&self) -> u64 {
        match self {
            Split::Train => 0,
            Split::Test => 1 << 40,
        }
    }
}

/// Per-sample RNG.
pub fn sample_rng(master_seed: u64, split: Split, index: usize) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(master_seed);
    rng.set_stream(split.stream_base() + index as u64);
    rng
}

/// A device with its grid map attached.
pub fn device_with_grid(design: Design, n_fib: usize) -> Result<Device> {
    Ok(build_device(design).with_grid(fibonacci_grid(n_fib)?))
}

pub struct Generator {
    pub spec: DataSpec,
    ap_codebook: Codebook,
}

impl Generator {
    pub fn new(spec: DataSpec) -> Result<Self> {
        spec.scene.validate()?;
        let ap_codebook = dft_codebook(&spec.ap_array);
        Ok(Generator { spec, ap_codebook })
    }

    pub fn n_ap(&self) -> usize {
        self.ap_codebook.len()
    }

    pub fn ap_codebook(&self) -> &Codebook {
        &self.ap_codebook
    }

    /// Generates `n` samples for `device` (which must carry a grid map).
    pub fn generate(&self, device: &Device, n: usize, split: Split) -> Result<Dataset> {
        let n_fib = device.require_fib_map()?.n_fib();
        report_coverage(device)?;
        let samples = (0..n)
            .map(|s| match self.spec.scenario {
                Scenario::Indoor => self.indoor_sample(device, split, s),
                Scenario::Sub6 => self.sub6_sample(device, split, s),
            })
            .collect::<Result<Vec<_>>>()?;
        let feature_dim = samples.first().map_or(0, |s| s.features.len());
        Ok(Dataset {
            header: DatasetHeader {
                schema_version: SCHEMA_VERSION,
                kind: match self.spec.scenario {
                    Scenario::Indoor => "indoor".into(),
                    Scenario::Sub6 => "sub6".into(),
                },
                split: split.name().into(),
                config_digest: self.spec.digest(),
                master_seed: self.spec.master_seed,
                device_ids: vec![device.id().to_string()],
                n_fib,
                n_ap: self.n_ap(),
                feature_dim,
            },
            samples,
        })
    }

    fn indoor_sample(&self, device: &Device, split: Split, s: usize) -> Result<Sample> {
        let spec = &self.spec;
        let mut rng = sample_rng(spec.master_seed, split, s);
        let pose = sample_pose(&spec.scene, &mut rng);
        let blocked = s % 2 == 1;
        let paths = trace_paths(&spec.scene, &pose, blocked, Band::MmWave)?;
        let ap = spec.ap_panel();
        let channels: Vec<_> = device.panels().iter().map(|p| narrowband_channel(&paths, &ap, p)).collect();
        let (rss_true, best_true) = sweep(&channels, &self.ap_codebook, device, &spec.radio, true, &mut rng)?;
        let (rss, (i_star, j_star)) = if spec.noisy_labels {
            sweep(&channels, &self.ap_codebook, device, &spec.radio, false, &mut rng)?
        } else {
            (rss_true.clone(), best_true)
        };
        Ok(Sample {
            features: indoor_features(&pose, &spec.scene.room),
            rss,
            rss_true,
            rate: None,
            i_star,
            j_star,
            label_specific: label_specific(j_star, device.n_beams())?,
            label_generic: label_generic(j_star, device)?,
            device_id: device.id().to_string(),
            n_fib: device.require_fib_map()?.n_fib(),
            seed: s as u64,
            los: !blocked,
            pose: Some(pose),
        })
    }

    fn sub6_sample(&self, device: &Device, split: Split, s: usize) -> Result<Sample> {
        let spec = &self.spec;
        let db = spec.dual_band.ok_or_else(|| Error::config("sub6 scenario needs dual_band settings"))?;
        let mut rng = sample_rng(spec.master_seed, split, s);
        let pose = sample_pose(&spec.scene, &mut rng);
        let blocked = s % 2 == 1;

        let sub6_paths = trace_paths(&spec.scene, &pose, blocked, Band::Sub6)?;
        let sub6_panel = crate::antenna::Panel {
            geometry: db.sub6_array,
            ..spec.ap_panel()
        };
        let h = ofdm_channels(&sub6_paths, &db.sub6, &sub6_panel, None)?;
        let mut features = Vec::with_capacity(2 * db.sub6.subcarriers * db.sub6_array.element_count());
        // scale to unit-order magnitudes before standardization
        let scale = 1.0 / spec.scene.wavelength(Band::Sub6);
        for hk in &h.per_subcarrier {
            for c in hk.iter() {
                features.push(c.re * scale);
                features.push(c.im * scale);
            }
        }

        let mm_paths = trace_paths(&spec.scene, &pose, blocked, Band::MmWave)?;
        let beamspace = beamspace_ofdm(&mm_paths, &db.mmwave, &spec.ap_panel(), &self.ap_codebook, device)?;
        let rates = pair_rates(&beamspace, spec.radio.snr_scale());
        let k = beamspace.len() as f64;
        let mut power = Array2::<f64>::zeros(rates.dim());
        for m in &beamspace {
            for (p, a) in power.iter_mut().zip(m.iter()) {
                *p += spec.radio.power_w * a.norm_sqr() / k;
            }
        }
        let rss_true = RssMatrix::new(power.clone(), true)?;
        let rss = if spec.noisy_labels {
            RssMatrix::new(power.mapv(|p| remeasure(p, spec.radio.noise_var_w, &mut rng)), false)?
        } else {
            rss_true.clone()
        };
        let (i_star, j_star) = crate::beamcore::argmax2(&rates);
        Ok(Sample {
            features,
            rss,
            rss_true,
            rate: Some(rates.iter().copied().collect()),
            i_star,
            j_star,
            label_specific: label_specific(j_star, device.n_beams())?,
            label_generic: label_generic(j_star, device)?,
            device_id: device.id().to_string(),
            n_fib: device.require_fib_map()?.n_fib(),
            seed: s as u64,
            los: !blocked,
            pose: Some(pose),
        })
    }
}

/// Recomputes generic labels for a different grid without re-tracing.
pub fn relabel_generic(ds: &Dataset, device: &Device) -> Result<Dataset> {
    let n_fib = device.require_fib_map()?.n_fib();
    let mut out = ds.clone();
    for s in &mut out.samples {
        if s.device_id != device.id() {
            return Err(Error::invalid(format!(
                "sample from device {} relabeled with device {}",
                s.device_id,
                device.id()
            )));
        }
        s.label_generic = label_generic(s.j_star, device)?;
        s.n_fib = n_fib;
    }
    out.header.n_fib = n_fib;
    Ok(out)
}

/// Stratified mixture: the first `per_device` samples of each dataset, in
/// order.
pub fn mixture(parts: &[&Dataset], per_device: usize) -> Result<Dataset> {
    let taken = parts
        .iter()
        .map(|d| {
            if d.len() < per_device {
                return Err(Error::invalid("dataset smaller than the requested share"));
            }
            let mut c = (*d).clone();
            c.samples.truncate(per_device);
            Ok(c)
        })
        .collect::<Result<Vec<_>>>()?;
    Dataset::concat(taken)
}
