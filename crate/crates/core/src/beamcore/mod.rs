//! RSS sweeps, optimal-pair extraction, labels, probability post-processing,
//! candidate lists, and the beam-training step.
//!
//! AP beams are indexed by `i`, UT beams by `j`, grid points by `k`. Pair
//! candidates are flattened row-major as `i * n_ut + j`.

mod dataset;

pub use dataset::{Dataset, DatasetHeader, Sample, SCHEMA_VERSION};

use std::collections::HashSet;
use std::sync::{Mutex, OnceLock};

use ndarray::Array2;
use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::antenna::{beam_gain, coverage_diagnostic, Codebook, Device};
use crate::channel::narrowband::{bilinear, CMatrix};
use crate::{Error, Result, C64};

/// Transmit power and receiver noise, both in watts.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Radio {
    pub power_w: f64,
    pub noise_var_w: f64,
}

impl Default for Radio {
    /// 24 dBm transmit power, -84 dBm noise.
    fn default() -> Self {
        Radio {
            power_w: dbm_to_watts(24.0),
            noise_var_w: dbm_to_watts(-84.0),
        }
    }
}

impl Radio {
    pub fn noiseless(&self) -> Self {
        Radio {
            noise_var_w: 0.0,
            ..*self
        }
    }

    pub fn snr_scale(&self) -> f64 {
        self.power_w / self.noise_var_w
    }
}

pub fn dbm_to_watts(dbm: f64) -> f64 {
    10f64.powf(dbm / 10.0 - 3.0)
}

/// Measured RSS for every AP/UT beam pair.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RssRecord", into = "RssRecord")]
pub struct RssMatrix {
    values: Array2<f64>,
    noiseless: bool,
}

#[derive(Serialize, Deserialize)]
struct RssRecord {
    n_ap: usize,
    n_ut: usize,
    noiseless: bool,
    values: Vec<f64>,
}

impl TryFrom<RssRecord> for RssMatrix {
    type Error = Error;

    fn try_from(r: RssRecord) -> Result<Self> {
        let values = Array2::from_shape_vec((r.n_ap, r.n_ut), r.values)
            .map_err(|e| Error::invalid(format!("rss shape: {e}")))?;
        RssMatrix::new(values, r.noiseless)
    }
}

impl From<RssMatrix> for RssRecord {
    fn from(m: RssMatrix) -> Self {
        let (n_ap, n_ut) = m.values.dim();
        RssRecord {
            n_ap,
            n_ut,
            noiseless: m.noiseless,
            values: m.values.iter().copied().collect(),
        }
    }
}

impl RssMatrix {
    pub fn new(values: Array2<f64>, noiseless: bool) -> Result<Self> {
        if values.iter().any(|v| !v.is_finite() || *v < 0.0) {
            return Err(Error::Numerical("RSS entries must be finite and non-negative".into()));
        }
        Ok(RssMatrix { values, noiseless })
    }

    pub fn values(&self) -> &Array2<f64> {
        &self.values
    }

    pub fn is_noiseless(&self) -> bool {
        self.noiseless
    }

    pub fn n_ap(&self) -> usize {
        self.values.nrows()
    }

    pub fn n_ut(&self) -> usize {
        self.values.ncols()
    }

    /// Lexicographic argmax `(i, j)`.
    pub fn argmax(&self) -> (usize, usize) {
        argmax2(&self.values)
    }

    pub fn max(&self) -> f64 {
        self.values.iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }
}

/// First `(i, j)` in row-major order holding the maximum.
pub fn argmax2(m: &Array2<f64>) -> (usize, usize) {
    let mut best = (0, 0);
    let mut best_v = f64::NEG_INFINITY;
    for ((i, j), &v) in m.indexed_iter() {
        if v > best_v {
            best_v = v;
            best = (i, j);
        }
    }
    best
}

/// One circularly-symmetric complex Gaussian draw with variance `var`.
pub fn complex_gaussian<R: Rng + ?Sized>(rng: &mut R, var: f64) -> C64 {
    let s = (var / 2.0).sqrt();
    let re: f64 = rng.sample(StandardNormal);
    let im: f64 = rng.sample(StandardNormal);
    C64::new(s * re, s * im)
}

/// `|√P vᴴ H u + vᴴ n|²` with a fresh noise vector `n ~ CN(0, σ² I)`.
pub fn measure_rss<R: Rng + ?Sized>(
    h: &CMatrix,
    u: &[C64],
    v: &[C64],
    radio: &Radio,
    rng: &mut R,
) -> Result<f64> {
    let (rows, cols) = h.dim();
    if u.len() != cols || v.len() != rows {
        return Err(Error::invalid(format!(
            "beam sizes ({}, {}) do not match a {rows}x{cols} channel",
            u.len(),
            v.len()
        )));
    }
    if !(radio.noise_var_w >= 0.0) {
        return Err(Error::invalid("noise variance must be >= 0"));
    }
    let mut y = bilinear(h, u, v) * radio.power_w.sqrt();
    if radio.noise_var_w > 0.0 {
        for vr in v {
            y += vr.conj() * complex_gaussian(rng, radio.noise_var_w);
        }
    }
    Ok(y.norm_sqr())
}

/// Noisy re-measurement of a pair whose noiseless RSS is known. For unit-norm
/// beams `vᴴn ~ CN(0, σ²)`, and the magnitude of signal plus circular noise
/// does not depend on the signal phase, so this has the same distribution
/// as [`measure_rss`].
pub fn remeasure<R: Rng + ?Sized>(rss_true: f64, noise_var: f64, rng: &mut R) -> f64 {
    if noise_var == 0.0 {
        return rss_true;
    }
    (C64::new(rss_true.sqrt(), 0.0) + complex_gaussian(rng, noise_var)).norm_sqr()
}

fn check_channels(channels: &[CMatrix], ap: &Codebook, device: &Device) -> Result<()> {
    if channels.len() != device.panels().len() {
        return Err(Error::invalid(format!(
            "{} channels for {} panels",
            channels.len(),
            device.panels().len()
        )));
    }
    let n_ap = ap.beams().first().map_or(0, Vec::len);
    for (h, panel) in channels.iter().zip(device.panels()) {
        if h.dim() != (panel.geometry.element_count(), n_ap) {
            return Err(Error::invalid("channel shape does not match panel and AP codebook"));
        }
    }
    Ok(())
}

/// Exhaustive sweep over all `N_AP × N_UT` pairs. `channels[p]` is the
/// channel to UT panel `p`.
pub fn sweep<R: Rng + ?Sized>(
    channels: &[CMatrix],
    ap: &Codebook,
    device: &Device,
    radio: &Radio,
    noiseless: bool,
    rng: &mut R,
) -> Result<(RssMatrix, (usize, usize))> {
    check_channels(channels, ap, device)?;
    let radio = if noiseless { radio.noiseless() } else { *radio };
    let owners = device.codebook().owner_panel();
    let mut values = Array2::<f64>::zeros((ap.len(), device.n_beams()));
    for (i, u) in ap.beams().iter().enumerate() {
        for (j, v) in device.codebook().beams().iter().enumerate() {
            values[[i, j]] = measure_rss(&channels[owners[j]], u, v, &radio, rng)?;
        }
    }
    let rss = RssMatrix::new(values, noiseless)?;
    let best = rss.argmax();
    Ok((rss, best))
}

/// Noiseless beam-domain amplitudes `√P v_jᴴ H u_i`.
pub fn beam_amplitudes(channels: &[CMatrix], ap: &Codebook, device: &Device, radio: &Radio) -> Result<Array2<C64>> {
    check_channels(channels, ap, device)?;
    let owners = device.codebook().owner_panel();
    let scale = radio.power_w.sqrt();
    let mut out = Array2::<C64>::zeros((ap.len(), device.n_beams()));
    for (i, u) in ap.beams().iter().enumerate() {
        for (j, v) in device.codebook().beams().iter().enumerate() {
            out[[i, j]] = bilinear(&channels[owners[j]], u, v) * scale;
        }
    }
    Ok(out)
}

/// One-hot device-specific label.
pub fn label_specific(j_star: usize, n_beams: usize) -> Result<Vec<u8>> {
    if j_star >= n_beams {
        return Err(Error::invalid(format!("beam {j_star} out of range for {n_beams} beams")));
    }
    let mut l = vec![0u8; n_beams];
    l[j_star] = 1;
    Ok(l)
}

/// Marks every grid point owned by `j_star`. When that region is empty the
/// single grid point where `j_star` has the highest gain is marked instead.
pub fn label_generic(j_star: usize, device: &Device) -> Result<Vec<u8>> {
    let fm = device.require_fib_map()?;
    if j_star >= device.n_beams() {
        return Err(Error::invalid(format!("beam {j_star} out of range")));
    }
    let mut l = vec![0u8; fm.n_fib()];
    let region = &fm.partition[j_star];
    if region.is_empty() {
        let mut best = 0;
        let mut best_g = f64::NEG_INFINITY;
        for (k, d) in fm.grid.points().iter().enumerate() {
            let g = beam_gain(device, j_star, d)?;
            if g > best_g {
                best_g = g;
                best = k;
            }
        }
        warn_once(device.id(), fm.n_fib(), j_star, best);
        l[best] = 1;
    } else {
        for &k in region {
            l[k] = 1;
        }
    }
    Ok(l)
}

fn warn_once(device: &str, n_fib: usize, j: usize, k: usize) {
    static SEEN: OnceLock<Mutex<HashSet<(String, usize, usize)>>> = OnceLock::new();
    let mut seen = SEEN.get_or_init(Default::default).lock().unwrap_or_else(|e| e.into_inner());
    if seen.insert((device.to_string(), n_fib, j)) {
        log::warn!("beam {j} of device {device} owns no point of the {n_fib}-point grid; labeling point {k}");
    }
}

/// `P_j^B = Σ_{k ∈ I^j} P_k^D`.
pub fn postprocess(p_directions: &[f64], device: &Device) -> Result<Vec<f64>> {
    let fm = device.require_fib_map()?;
    if p_directions.len() != fm.n_fib() {
        return Err(Error::invalid(format!(
            "{} direction probabilities for a grid of {}",
            p_directions.len(),
            fm.n_fib()
        )));
    }
    Ok(fm
        .partition
        .iter()
        .map(|ks| ks.iter().map(|&k| p_directions[k]).sum())
        .collect())
}

/// `P_{i,j} = P_{j|i} · P_i`.
pub fn joint_probability(p_ap: &[f64], p_ut_given_ap: &Array2<f64>) -> Result<Array2<f64>> {
    if p_ap.len() != p_ut_given_ap.nrows() {
        return Err(Error::invalid("AP probability length does not match conditional rows"));
    }
    let mut out = p_ut_given_ap.clone();
    for (mut row, &p) in out.rows_mut().into_iter().zip(p_ap) {
        row *= p;
    }
    Ok(out)
}

/// Indices of the `n_b` largest entries, descending, ties to the lower index.
pub fn candidate_list(p: &[f64], n_b: usize) -> Result<Vec<usize>> {
    if n_b == 0 {
        return Err(Error::invalid("candidate list size must be >= 1"));
    }
    if n_b > p.len() {
        return Err(Error::invalid(format!("n_b = {n_b} exceeds {} candidates", p.len())));
    }
    Ok(ranking(p).into_iter().take(n_b).collect())
}

/// Full descending order with lowest-index tie-break; every candidate list
/// is a prefix of it.
pub fn ranking(p: &[f64]) -> Vec<usize> {
    let mut idx: Vec<usize> = (0..p.len()).collect();
    idx.sort_by(|&a, &b| p[b].total_cmp(&p[a]));
    idx
}

/// Candidate list over a joint matrix, as `(i, j)` pairs.
pub fn candidate_pairs(p: &Array2<f64>, n_b: usize) -> Result<Vec<(usize, usize)>> {
    let flat: Vec<f64> = p.iter().copied().collect();
    let n_ut = p.ncols();
    Ok(candidate_list(&flat, n_b)?.into_iter().map(|f| (f / n_ut, f % n_ut)).collect())
}

fn first_max(values: impl Iterator<Item = ((usize, usize), f64)>) -> Result<(usize, usize)> {
    let mut best = None;
    let mut best_v = f64::NEG_INFINITY;
    for (pair, v) in values {
        if best.is_none() || v > best_v {
            best_v = v;
            best = Some(pair);
        }
    }
    best.ok_or_else(|| Error::invalid("candidate list is empty"))
}

/// Senses every pair in `s` once with fresh noise and returns the strongest.
pub fn beam_train<R: Rng + ?Sized>(
    channels: &[CMatrix],
    ap: &Codebook,
    device: &Device,
    s: &[(usize, usize)],
    radio: &Radio,
    rng: &mut R,
) -> Result<(usize, usize)> {
    check_channels(channels, ap, device)?;
    let owners = device.codebook().owner_panel();
    let mut measured = Vec::with_capacity(s.len());
    for &(i, j) in s {
        if i >= ap.len() || j >= device.n_beams() {
            return Err(Error::invalid(format!("pair ({i}, {j}) out of range")));
        }
        let v = measure_rss(&channels[owners[j]], ap.beam(i), device.codebook().beam(j), radio, rng)?;
        measured.push(((i, j), v));
    }
    first_max(measured.into_iter())
}

/// [`beam_train`] driven by stored noiseless RSS values via [`remeasure`].
pub fn beam_train_rss<R: Rng + ?Sized>(
    rss_true: &Array2<f64>,
    s: &[(usize, usize)],
    noise_var: f64,
    rng: &mut R,
) -> Result<(usize, usize)> {
    let (n_i, n_j) = rss_true.dim();
    let mut measured = Vec::with_capacity(s.len());
    for &(i, j) in s {
        if i >= n_i || j >= n_j {
            return Err(Error::invalid(format!("pair ({i}, {j}) out of range")));
        }
        measured.push(((i, j), remeasure(rss_true[[i, j]], noise_var, rng)));
    }
    first_max(measured.into_iter())
}

/// Logs and returns the beams of `device` with an empty grid region.
pub fn report_coverage(device: &Device) -> Result<Vec<usize>> {
    let empty = coverage_diagnostic(device)?;
    if !empty.is_empty() {
        log::warn!(
            "device {} has {} beam(s) without grid points: {:?}",
            device.id(),
            empty.len(),
            empty
        );
    }
    Ok(empty)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::antenna::{build_device, dft_codebook, single_panel_device, ArrayGeometry, Design, ElementPattern};
    use crate::channel::narrowband::narrowband_channel;
    use crate::channel::scene::{Band, Path, PathSet};
    use crate::sphgrid::{fibonacci_grid, Direction};
    use ndarray::array;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;
    use std::f64::consts::FRAC_PI_2;

    fn rng() -> ChaCha8Rng {
        ChaCha8Rng::seed_from_u64(1)
    }

    fn one() -> Vec<C64> {
        vec![C64::new(1.0, 0.0)]
    }

    fn random_simplex(rng: &mut ChaCha8Rng, n: usize) -> Vec<f64> {
        let raw: Vec<f64> = (0..n).map(|_| -rng.random::<f64>().max(1e-300).ln()).collect();
        let s: f64 = raw.iter().sum();
        raw.into_iter().map(|x| x / s).collect()
    }

    #[test]
    fn defaults_match_dbm_figures() {
        let r = Radio::default();
        assert!((r.power_w - 0.251_188_643_150_958).abs() < 1e-12);
        assert!((r.noise_var_w - 3.981_071_705_534_97e-12).abs() < 1e-24);
    }

    #[test]
    fn scalar_measurement() {
        let h = array![[C64::new(1.0, 0.0)]];
        let radio = Radio {
            power_w: 1.0,
            noise_var_w: 0.0,
        };
        assert_eq!(measure_rss(&h, &one(), &one(), &radio, &mut rng()).unwrap(), 1.0);
        let h = array![[C64::new(0.3, -0.4)]];
        let radio = Radio {
            power_w: 2.0,
            noise_var_w: 0.0,
        };
        let v = measure_rss(&h, &one(), &one(), &radio, &mut rng()).unwrap();
        assert!((v - 2.0 * 0.25).abs() < 1e-15);
    }

    #[test]
    fn dimension_mismatch_rejected() {
        let h = Array2::<C64>::zeros((2, 3));
        let r = measure_rss(&h, &one(), &one(), &Radio::default(), &mut rng());
        assert!(matches!(r, Err(Error::InvalidArgument(_))));
    }

    #[test]
    fn noise_mean_adds_variance() {
        let h = array![[C64::new(1.0, 0.0)]];
        let radio = Radio {
            power_w: 1.0,
            noise_var_w: 0.5,
        };
        let mut r = rng();
        let n = 200_000;
        let mean: f64 = (0..n).map(|_| measure_rss(&h, &one(), &one(), &radio, &mut r).unwrap()).sum::<f64>() / n as f64;
        assert!((mean - 1.5).abs() < 0.01, "{mean}");
        let mean_re: f64 = (0..n).map(|_| remeasure(1.0, 0.5, &mut r)).sum::<f64>() / n as f64;
        assert!((mean_re - 1.5).abs() < 0.01, "{mean_re}");
    }

    fn los_setup() -> (Vec<CMatrix>, Codebook, Device, usize, usize) {
        // AP ULA along y, UT ULA along y; both DFT grids contain the path angles
        let ap_panel = crate::antenna::Panel {
            geometry: ArrayGeometry { nx: 1, ny: 8, nz: 1 },
            orientation: [0.0; 3],
            pattern: ElementPattern::Isotropic,
        };
        let ap = dft_codebook(&ap_panel.geometry);
        let dev = single_panel_device("u", ArrayGeometry { nx: 1, ny: 4, nz: 1 }, ElementPattern::Isotropic);
        // AP: sinφ = 2/8 -> beam 1; UT: sinφ = -2/4 ≡ beam 3 (e^{jπ m(-0.5)})
        let paths = PathSet {
            band: Band::MmWave,
            paths: vec![Path {
                power: 1e-6,
                phase: 0.3,
                aod: Direction::new(0.25f64.asin(), FRAC_PI_2),
                aoa: Direction::new((-0.5f64).asin(), FRAC_PI_2),
                delay: 0.0,
                is_los: true,
            }],
        };
        let h = narrowband_channel(&paths, &ap_panel, &dev.panels()[0]);
        (vec![h], ap, dev, 1, 3)
    }

    #[test]
    fn aligned_pair_wins_noiseless_sweep() {
        let (ch, ap, dev, i0, j0) = los_setup();
        let (rss, best) = sweep(&ch, &ap, &dev, &Radio::default(), true, &mut rng()).unwrap();
        assert_eq!(best, (i0, j0));
        assert!(rss.is_noiseless());
        // brute force over all pairs with the gain formula
        let p = Radio::default().power_w;
        let expected = p * 1e-6;
        assert!((rss.values()[[i0, j0]] - expected).abs() < 1e-9 * expected);
        let amps = beam_amplitudes(&ch, &ap, &dev, &Radio::default()).unwrap();
        for ((i, j), a) in amps.indexed_iter() {
            assert!((a.norm_sqr() - rss.values()[[i, j]]).abs() < 1e-12 * expected);
        }
    }

    #[test]
    fn unit_codebooks_give_origin() {
        let ap = dft_codebook(&ArrayGeometry { nx: 1, ny: 1, nz: 1 });
        let dev = single_panel_device("u", ArrayGeometry { nx: 1, ny: 1, nz: 1 }, ElementPattern::Isotropic);
        let h = array![[C64::new(0.2, 0.1)]];
        let (_, best) = sweep(&[h], &ap, &dev, &Radio::default(), false, &mut rng()).unwrap();
        assert_eq!(best, (0, 0));
    }

    #[test]
    fn duplicate_values_tie_to_lower_index() {
        let m = array![[1.0, 3.0], [3.0, 0.0]];
        assert_eq!(argmax2(&m), (0, 1));
        let rss = RssMatrix::new(m, true).unwrap();
        assert_eq!(rss.argmax(), (0, 1));
    }

    #[test]
    fn specific_labels() {
        assert_eq!(label_specific(2, 8).unwrap(), vec![0, 0, 1, 0, 0, 0, 0, 0]);
        assert_eq!(label_specific(0, 1).unwrap(), vec![1]);
        assert!(label_specific(8, 8).is_err());
        let mut r = rng();
        for _ in 0..1000 {
            let n = r.random_range(1..40);
            let j = r.random_range(0..n);
            let l = label_specific(j, n).unwrap();
            assert_eq!(l.iter().map(|&x| x as usize).sum::<usize>(), 1);
        }
    }

    #[test]
    fn generic_labels_follow_partition() {
        let one = single_panel_device("1", ArrayGeometry { nx: 1, ny: 1, nz: 1 }, ElementPattern::Isotropic)
            .with_grid(fibonacci_grid(10).unwrap());
        assert_eq!(label_generic(0, &one).unwrap(), vec![1u8; 10]);

        let grid = fibonacci_grid(100).unwrap();
        let ef = build_device(Design::EF).with_grid(grid.clone());
        let mut r = rng();
        for _ in 0..30 {
            let j = r.random_range(0..20);
            let l = label_generic(j, &ef).unwrap();
            let empty = coverage_diagnostic(&ef).unwrap();
            if empty.contains(&j) {
                assert_eq!(l.iter().filter(|&&x| x == 1).count(), 1);
                continue;
            }
            for (k, p) in grid.points().iter().enumerate() {
                let gains = ef.beam_gains(p);
                let best = crate::antenna::argmax(&gains);
                assert_eq!(l[k] == 1, best == j, "point {k}");
            }
        }
    }

    #[test]
    fn generic_label_fallback_picks_max_gain_point() {
        let e = build_device(Design::E).with_grid(fibonacci_grid(100).unwrap());
        let l = label_generic(10, &e).unwrap();
        assert_eq!(l.iter().map(|&x| x as usize).sum::<usize>(), 1);
        let k = l.iter().position(|&x| x == 1).unwrap();
        let g: Vec<f64> = e
            .fib_map()
            .unwrap()
            .grid
            .points()
            .iter()
            .map(|d| beam_gain(&e, 10, d).unwrap())
            .collect();
        assert_eq!(k, crate::antenna::argmax(&g));
        assert!(label_generic(0, &build_device(Design::E)).is_err());
    }

    #[test]
    fn postprocess_laws() {
        let f = build_device(Design::EF).with_grid(fibonacci_grid(100).unwrap());
        let map = f.fib_map().unwrap().beam_of_point.clone();
        for k in 0..100 {
            let mut p = vec![0.0; 100];
            p[k] = 1.0;
            let b = postprocess(&p, &f).unwrap();
            for (j, v) in b.iter().enumerate() {
                assert_eq!(*v, if j == map[k] { 1.0 } else { 0.0 });
            }
        }
        let uniform = vec![0.01; 100];
        let b = postprocess(&uniform, &f).unwrap();
        for (j, v) in b.iter().enumerate() {
            let owned = f.fib_map().unwrap().partition[j].len() as f64;
            assert!((v - owned / 100.0).abs() < 1e-12);
        }
        let mut r = rng();
        for _ in 0..1000 {
            let p = random_simplex(&mut r, 100);
            let s: f64 = p.iter().sum();
            let b: f64 = postprocess(&p, &f).unwrap().iter().sum();
            assert!((b - s).abs() <= 1e-12);
        }
        assert!(postprocess(&[0.5, 0.5], &f).is_err());
    }

    #[test]
    fn joint_laws() {
        let cond = array![[0.2, 0.8], [0.5, 0.5], [1.0, 0.0]];
        let j = joint_probability(&[0.0, 1.0, 0.0], &cond).unwrap();
        assert_eq!(j.row(1).to_vec(), vec![0.5, 0.5]);
        assert_eq!(j.row(0).to_vec(), vec![0.0, 0.0]);
        let uni = Array2::from_elem((4, 5), 0.2);
        let j = joint_probability(&[0.25; 4], &uni).unwrap();
        assert!(j.iter().all(|v| (v - 0.05).abs() < 1e-15));
        let mut r = rng();
        for _ in 0..100 {
            let p = random_simplex(&mut r, 6);
            let mut c = Array2::zeros((6, 7));
            for mut row in c.rows_mut() {
                row.assign(&ndarray::Array1::from(random_simplex(&mut r, 7)));
            }
            let s: f64 = joint_probability(&p, &c).unwrap().sum();
            assert!((s - 1.0).abs() < 1e-12);
        }
        assert!(joint_probability(&[1.0], &cond).is_err());
    }

    #[test]
    fn candidate_examples() {
        assert_eq!(candidate_list(&[0.1, 0.7, 0.2], 2).unwrap(), vec![1, 2]);
        let mut all = candidate_list(&[0.3, 0.3, 0.1, 0.3], 4).unwrap();
        assert_eq!(all, vec![0, 1, 3, 2]);
        all.sort();
        assert_eq!(all, vec![0, 1, 2, 3]);
        assert!(candidate_list(&[0.5, 0.5], 0).is_err());
        assert!(candidate_list(&[0.5, 0.5], 3).is_err());
        let m = array![[0.1, 0.4], [0.4, 0.1]];
        assert_eq!(candidate_pairs(&m, 2).unwrap(), vec![(0, 1), (1, 0)]);
    }

    #[test]
    fn candidate_lists_nested() {
        let mut r = rng();
        for _ in 0..1000 {
            let len = r.random_range(1..30);
            // coarse values force plenty of ties
            let p: Vec<f64> = (0..len).map(|_| r.random_range(0..5) as f64).collect();
            let full = candidate_list(&p, len).unwrap();
            for n in 1..=len {
                assert_eq!(candidate_list(&p, n).unwrap(), full[..n]);
            }
        }
    }

    #[test]
    fn training_examples() {
        let (ch, ap, dev, i0, j0) = los_setup();
        let radio = Radio::default();
        assert_eq!(beam_train(&ch, &ap, &dev, &[(4, 2)], &radio, &mut rng()).unwrap(), (4, 2));
        let all: Vec<(usize, usize)> = (0..8).flat_map(|i| (0..4).map(move |j| (i, j))).collect();
        assert_eq!(beam_train(&ch, &ap, &dev, &all, &radio.noiseless(), &mut rng()).unwrap(), (i0, j0));
        assert!(beam_train(&ch, &ap, &dev, &[], &radio, &mut rng()).is_err());

        let (rss, _) = sweep(&ch, &ap, &dev, &radio, true, &mut rng()).unwrap();
        let flat: Vec<f64> = (0..32).map(|f| ((f * 7919) % 31) as f64).collect();
        let order = ranking(&flat);
        let mut last = 0.0;
        for n in 1..=32 {
            let s: Vec<(usize, usize)> = order[..n].iter().map(|f| (f / 4, f % 4)).collect();
            let (i, j) = beam_train_rss(rss.values(), &s, 0.0, &mut rng()).unwrap();
            let v = rss.values()[[i, j]];
            assert!(v >= last);
            last = v;
        }
        assert_eq!(last, rss.max());
    }
}
