//! Beam-selection metrics: misalignment probability, SNR, effective spectral
//! efficiency, Top-n accuracy and spectral efficiency, and the
//! perfect-alignment reference.

use ndarray::Array2;
use serde::{Deserialize, Serialize};

use crate::antenna::inner;
use crate::beamcore::{argmax2, ranking, Radio};
use crate::channel::narrowband::{bilinear, CMatrix};
use crate::{Error, Result, C64};

/// Relative tolerance under which two RSS values count as equal.
pub const TIE_TOLERANCE: f64 = 1e-12;

/// Outcome of one beam-selection trial.
#[derive(Debug, Clone, PartialEq)]
pub struct TrialResult {
    /// Noiseless RSS of every pair.
    pub rss_true: Array2<f64>,
    pub selected: (usize, usize),
    pub n_b: usize,
}

impl TrialResult {
    pub fn new(rss_true: Array2<f64>, selected: (usize, usize), n_b: usize) -> Result<Self> {
        let (n_i, n_j) = rss_true.dim();
        if selected.0 >= n_i || selected.1 >= n_j {
            return Err(Error::invalid(format!("selected pair {selected:?} outside a {n_i}x{n_j} codebook")));
        }
        Ok(TrialResult { rss_true, selected, n_b })
    }

    pub fn is_misaligned(&self) -> bool {
        is_misaligned(&self.rss_true, self.selected)
    }

    /// SNR of the selected pair given the noise power.
    pub fn snr(&self, noise_var: f64) -> f64 {
        self.rss_true[self.selected] / noise_var
    }
}

/// True when `pair` is below the best RSS by more than the tie tolerance.
pub fn is_misaligned(rss_true: &Array2<f64>, pair: (usize, usize)) -> bool {
    let best = rss_true.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    rss_true[pair] < best * (1.0 - TIE_TOLERANCE)
}

/// Beam-sensing overhead parameters in seconds.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OverheadConfig {
    pub frame_s: f64,
    pub sense_s: f64,
}

impl Default for OverheadConfig {
    /// 20 ms frames, 0.1 ms per sensed pair.
    fn default() -> Self {
        OverheadConfig {
            frame_s: 20e-3,
            sense_s: 0.1e-3,
        }
    }
}

impl OverheadConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.frame_s > 0.0 && self.sense_s > 0.0) {
            return Err(Error::config("frame and sensing durations must be positive"));
        }
        Ok(())
    }

    /// Largest feasible candidate-list size.
    pub fn max_candidates(&self) -> usize {
        (self.frame_s / self.sense_s + 1e-9).floor() as usize
    }

    /// Fraction of the frame left for data after sensing `n_b` pairs.
    pub fn prefactor(&self, n_b: usize) -> Result<f64> {
        self.validate()?;
        if n_b == 0 {
            return Err(Error::invalid("at least one pair must be sensed"));
        }
        let used = n_b as f64 * self.sense_s;
        if used > self.frame_s * (1.0 + 1e-12) {
            return Err(Error::invalid(format!(
                "sensing {n_b} pairs takes {used} s, longer than the {} s frame",
                self.frame_s
            )));
        }
        Ok(((self.frame_s - used) / self.frame_s).max(0.0))
    }
}

pub fn misalignment_probability(results: &[TrialResult]) -> Result<f64> {
    if results.is_empty() {
        return Err(Error::invalid("no trials"));
    }
    let miss = results.iter().filter(|r| r.is_misaligned()).count();
    Ok(miss as f64 / results.len() as f64)
}

/// `P |vᴴ H u|² / σ²`.
pub fn snr_of(h: &CMatrix, u: &[C64], v: &[C64], radio: &Radio) -> Result<f64> {
    if !(radio.noise_var_w > 0.0) {
        return Err(Error::invalid("noise variance must be positive"));
    }
    if u.len() != h.ncols() || v.len() != h.nrows() {
        return Err(Error::invalid("beam sizes do not match the channel"));
    }
    Ok(radio.power_w * bilinear(h, u, v).norm_sqr() / radio.noise_var_w)
}

/// `((T_fr − n_b t_s) / T_fr) · log₂(1 + snr)`.
pub fn effective_se(snr: f64, n_b: usize, cfg: &OverheadConfig) -> Result<f64> {
    Ok(cfg.prefactor(n_b)? * (1.0 + snr).log2())
}

/// Fraction of samples whose true pair is among the `n` most probable.
pub fn top_n_accuracy(joint: &[Array2<f64>], truth: &[(usize, usize)], n: usize) -> Result<f64> {
    if n == 0 {
        return Err(Error::invalid("n must be >= 1"));
    }
    if joint.len() != truth.len() || joint.is_empty() {
        return Err(Error::invalid("need one truth pair per prediction and at least one sample"));
    }
    let hits = joint
        .iter()
        .zip(truth)
        .filter(|(p, &(i, j))| {
            let flat: Vec<f64> = p.iter().copied().collect();
            let target = i * p.ncols() + j;
            ranking(&flat).iter().take(n).any(|&f| f == target)
        })
        .count();
    Ok(hits as f64 / joint.len() as f64)
}

/// Per-sample best spectral efficiency within the `n` most probable pairs.
pub fn top_n_se_per_sample(joint: &[Array2<f64>], se: &[Array2<f64>], n: usize) -> Result<Vec<f64>> {
    if n == 0 {
        return Err(Error::invalid("n must be >= 1"));
    }
    if joint.len() != se.len() || joint.is_empty() {
        return Err(Error::invalid("need one SE matrix per prediction and at least one sample"));
    }
    joint
        .iter()
        .zip(se)
        .map(|(p, s)| {
            if p.dim() != s.dim() {
                return Err(Error::invalid("prediction and SE shapes differ"));
            }
            let flat_p: Vec<f64> = p.iter().copied().collect();
            let flat_s: Vec<f64> = s.iter().copied().collect();
            Ok(ranking(&flat_p)
                .iter()
                .take(n)
                .map(|&f| flat_s[f])
                .fold(f64::NEG_INFINITY, f64::max))
        })
        .collect()
}

/// Mean of [`top_n_se_per_sample`].
pub fn top_n_se(joint: &[Array2<f64>], se: &[Array2<f64>], n: usize) -> Result<f64> {
    let v = top_n_se_per_sample(joint, se, n)?;
    Ok(v.iter().sum::<f64>() / v.len() as f64)
}

/// Single-carrier `log₂(1 + P|vᴴHu|²/σ²)` for every pair, from noiseless RSS.
pub fn narrowband_se(rss_true: &Array2<f64>, noise_var: f64) -> Array2<f64> {
    rss_true.mapv(|r| (1.0 + r / noise_var).log2())
}

/// Per-pair spectral efficiency straight from a channel matrix and codebooks.
pub fn pair_se(h: &CMatrix, ap: &[Vec<C64>], ut: &[Vec<C64>], radio: &Radio) -> Result<Array2<f64>> {
    let mut out = Array2::<f64>::zeros((ap.len(), ut.len()));
    for (i, u) in ap.iter().enumerate() {
        let hu: Vec<C64> = h.outer_iter().map(|row| inner(&row.mapv(|c| c.conj()).to_vec(), u)).collect();
        for (j, v) in ut.iter().enumerate() {
            let g = inner(v, &hu).norm_sqr();
            out[[i, j]] = (1.0 + radio.power_w * g / radio.noise_var_w).log2();
        }
    }
    Ok(out)
}

/// Best pair by noiseless RSS and its spectral efficiency with no sensing
/// overhead.
pub fn genie_baseline(rss_true: &Array2<f64>, noise_var: f64) -> Result<((usize, usize), f64)> {
    if !(noise_var > 0.0) {
        return Err(Error::invalid("noise variance must be positive"));
    }
    let best = argmax2(rss_true);
    Ok((best, (1.0 + rss_true[best] / noise_var).log2()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::beamcore::{beam_train_rss, candidate_pairs, remeasure};
    use ndarray::array;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn misalignment_counts() {
        let m = array![[1.0, 2.0], [3.0, 0.5]];
        let good = TrialResult::new(m.clone(), (1, 0), 1).unwrap();
        assert_eq!(misalignment_probability(&[good.clone(), good.clone()]).unwrap(), 0.0);
        let mut v = vec![good; 7];
        v.extend(vec![TrialResult::new(m.clone(), (0, 1), 1).unwrap(); 3]);
        assert!((misalignment_probability(&v).unwrap() - 0.3).abs() < 1e-15);
        assert!(misalignment_probability(&[]).is_err());
        assert!(TrialResult::new(m, (2, 0), 1).is_err());
    }

    #[test]
    fn near_ties_are_not_misaligned() {
        let m = array![[1.0, 1.0 - 1e-15]];
        assert!(!is_misaligned(&m, (0, 1)));
        let m = array![[1.0, 1.0 - 1e-9]];
        assert!(is_misaligned(&m, (0, 1)));
    }

    #[test]
    fn snr_examples() {
        let h = array![[C64::new(1.0, 0.0)]];
        let one = vec![C64::new(1.0, 0.0)];
        let r = Radio {
            power_w: 1.0,
            noise_var_w: 1.0,
        };
        assert_eq!(snr_of(&h, &one, &one, &r).unwrap(), 1.0);
        let r3 = Radio { power_w: 3.0, ..r };
        assert_eq!(snr_of(&h, &one, &one, &r3).unwrap(), 3.0);
        assert!(snr_of(&h, &one, &one, &Radio { noise_var_w: 0.0, ..r }).is_err());
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let h = array![[C64::new(0.3, 0.7)]];
        let rss = crate::beamcore::measure_rss(&h, &one, &one, &Radio::default().noiseless(), &mut rng).unwrap();
        let snr = snr_of(&h, &one, &one, &Radio::default()).unwrap();
        assert!((rss / Radio::default().noise_var_w - snr).abs() < 1e-12 * snr);
    }

    #[test]
    fn ese_examples() {
        let cfg = OverheadConfig::default();
        let snr = 2f64.powi(10) - 1.0;
        assert!((effective_se(snr, 5, &cfg).unwrap() - 9.75).abs() < 1e-12);
        assert!((cfg.prefactor(5).unwrap() - 0.975).abs() < 1e-15);
        assert!((cfg.prefactor(1).unwrap() - 0.995).abs() < 1e-15);
        assert_eq!(cfg.max_candidates(), 200);
        assert!(effective_se(snr, 200, &cfg).unwrap().abs() < 1e-12);
        assert!(effective_se(snr, 201, &cfg).is_err());
        assert!(effective_se(snr, 0, &cfg).is_err());
    }

    fn random_joint(r: &mut ChaCha8Rng, n_i: usize, n_j: usize) -> Array2<f64> {
        let m = Array2::from_shape_fn((n_i, n_j), |_| r.random::<f64>());
        let s = m.sum();
        m / s
    }

    #[test]
    fn top_n_examples() {
        let mut r = ChaCha8Rng::seed_from_u64(1);
        let joint: Vec<Array2<f64>> = (0..50).map(|_| random_joint(&mut r, 3, 4)).collect();
        let truth: Vec<(usize, usize)> = (0..50).map(|_| (r.random_range(0..3), r.random_range(0..4))).collect();
        assert_eq!(top_n_accuracy(&joint, &truth, 12).unwrap(), 1.0);
        let oracle: Vec<Array2<f64>> = truth
            .iter()
            .map(|&(i, j)| {
                let mut m = Array2::zeros((3, 4));
                m[[i, j]] = 1.0;
                m
            })
            .collect();
        assert_eq!(top_n_accuracy(&oracle, &truth, 1).unwrap(), 1.0);
        let mut last = 0.0;
        for n in 1..=12 {
            let a = top_n_accuracy(&joint, &truth, n).unwrap();
            assert!(a >= last);
            last = a;
        }
        assert!(top_n_accuracy(&joint, &truth, 0).is_err());
    }

    #[test]
    fn uniform_predictor_accuracy_is_n_over_total() {
        let mut r = ChaCha8Rng::seed_from_u64(2);
        let samples = 20_000;
        let joint = vec![Array2::from_elem((4, 5), 0.05); samples];
        let truth: Vec<(usize, usize)> = (0..samples).map(|_| (r.random_range(0..4), r.random_range(0..5))).collect();
        for n in [1, 5, 10] {
            let a = top_n_accuracy(&joint, &truth, n).unwrap();
            let expected = n as f64 / 20.0;
            let sd = (expected * (1.0 - expected) / samples as f64).sqrt();
            assert!((a - expected).abs() < 4.0 * sd, "n={n}: {a}");
        }
    }

    #[test]
    fn top_n_se_properties() {
        let mut r = ChaCha8Rng::seed_from_u64(3);
        let joint: Vec<Array2<f64>> = (0..30).map(|_| random_joint(&mut r, 3, 4)).collect();
        let se: Vec<Array2<f64>> = (0..30).map(|_| Array2::from_shape_fn((3, 4), |_| r.random_range(0.0..10.0))).collect();
        let genie: f64 = se.iter().map(|s| s.iter().copied().fold(0.0, f64::max)).sum::<f64>() / 30.0;
        assert!((top_n_se(&joint, &se, 12).unwrap() - genie).abs() < 1e-12);
        let mut last = vec![f64::NEG_INFINITY; 30];
        for n in 1..=12 {
            let v = top_n_se_per_sample(&joint, &se, n).unwrap();
            for (a, b) in v.iter().zip(&last) {
                assert!(a >= b);
            }
            last = v;
        }
    }

    #[test]
    fn single_path_se_matches_direct_formula() {
        use crate::antenna::{dft_codebook, ArrayGeometry, Panel, ElementPattern};
        use crate::channel::narrowband::narrowband_channel;
        use crate::channel::scene::{Band, Path, PathSet};
        use crate::sphgrid::Direction;
        let panel = Panel {
            geometry: ArrayGeometry { nx: 1, ny: 4, nz: 1 },
            orientation: [0.0; 3],
            pattern: ElementPattern::Isotropic,
        };
        let cb = dft_codebook(&panel.geometry);
        let paths = PathSet {
            band: Band::MmWave,
            paths: vec![Path {
                power: 1e-8,
                phase: 1.0,
                aod: Direction::new(0.5f64.asin(), std::f64::consts::FRAC_PI_2),
                aoa: Direction::new(0.0, std::f64::consts::FRAC_PI_2),
                delay: 0.0,
                is_los: true,
            }],
        };
        let h = narrowband_channel(&paths, &panel, &panel);
        let radio = Radio::default();
        let se = pair_se(&h, cb.beams(), cb.beams(), &radio).unwrap();
        // phase step π·0.5 per element matches AP beam 1; broadside matches UT beam 0
        let direct = (1.0 + radio.power_w * 1e-8 / radio.noise_var_w).log2();
        assert!((se[[1, 0]] - direct).abs() < 1e-9);
        assert_eq!(argmax2(&se), (1, 0));
        let joint = vec![Array2::from_elem((4, 4), 1.0 / 16.0)];
        assert!((top_n_se(&joint, std::slice::from_ref(&se), 16).unwrap() - direct).abs() < 1e-9);
    }

    #[test]
    fn genie_dominates_every_run() {
        let mut r = ChaCha8Rng::seed_from_u64(4);
        let cfg = OverheadConfig::default();
        let noise = Radio::default().noise_var_w;
        for _ in 0..200 {
            let rss = Array2::from_shape_fn((4, 6), |_| r.random_range(0.0..1e-8));
            let (pair, genie) = genie_baseline(&rss, noise).unwrap();
            assert_eq!(pair, argmax2(&rss));
            assert!((genie - (1.0 + rss[pair] / noise).log2()).abs() < 1e-12);
            let probs = Array2::from_shape_fn((4, 6), |_| r.random::<f64>());
            for n_b in [1, 5, 24] {
                let s = candidate_pairs(&probs, n_b).unwrap();
                let sel = beam_train_rss(&rss, &s, noise, &mut r).unwrap();
                let ese = effective_se(rss[sel] / noise, n_b, &cfg).unwrap();
                assert!(ese <= genie);
            }
        }
        assert_eq!(remeasure(1.0, 0.0, &mut r), 1.0);
    }
}
