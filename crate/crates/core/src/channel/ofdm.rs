//! Frequency-selective channels with an ideal (sinc) pulse.
//!
//! Per subcarrier `k`:
//! `H[k] = Σ_{d<D_c} Σ_l α_l e^{-j2πkd/K} p(d·T - τ_l) · a_U(AoA_l) a_BS(AoD_l)ᴴ`,
//! an `N_U × N_BS` matrix. The path-and-tap sum factors into one scalar
//! frequency response per path, which is what [`path_frequency_response`]
//! computes.

use std::f64::consts::PI;

use ndarray::Array2;
use serde::{Deserialize, Serialize};

use super::narrowband::{panel_response, CMatrix};
use super::scene::PathSet;
use crate::antenna::{inner, Codebook, Device, Panel};
use crate::{Error, Result, C64};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OfdmConfig {
    pub subcarriers: usize,
    pub bandwidth_hz: f64,
    pub cp_taps: usize,
}

impl OfdmConfig {
    pub fn new(subcarriers: usize, bandwidth_hz: f64, cp_taps: usize) -> Result<Self> {
        let cfg = OfdmConfig {
            subcarriers,
            bandwidth_hz,
            cp_taps,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        if self.subcarriers == 0 {
            return Err(Error::invalid("OFDM needs at least one subcarrier"));
        }
        if self.cp_taps == 0 {
            return Err(Error::invalid("cyclic prefix must span at least one tap"));
        }
        if !(self.bandwidth_hz > 0.0) {
            return Err(Error::invalid("bandwidth must be positive"));
        }
        Ok(())
    }

    /// Sampling period `1/bandwidth`.
    pub fn sample_period(&self) -> f64 {
        1.0 / self.bandwidth_hz
    }

    /// Paths at or beyond this delay fall outside the cyclic prefix.
    pub fn max_delay(&self) -> f64 {
        self.cp_taps as f64 * self.sample_period()
    }
}

/// Normalized sinc, `sin(πx)/(πx)`.
pub fn sinc(x: f64) -> f64 {
    if x.abs() < 1e-12 {
        1.0
    } else {
        (PI * x).sin() / (PI * x)
    }
}

/// Sampled taps `p(d·T - τ)` for `d < D_c`.
pub fn pulse_taps(cfg: &OfdmConfig, delay: f64) -> Vec<f64> {
    let t = cfg.sample_period();
    (0..cfg.cp_taps).map(|d| sinc(d as f64 - delay / t)).collect()
}

/// `Σ_d e^{-j2πkd/K} p(d·T - τ)` for every subcarrier.
pub fn path_frequency_response(cfg: &OfdmConfig, delay: f64) -> Vec<C64> {
    let k_total = cfg.subcarriers as f64;
    let taps = pulse_taps(cfg, delay);
    (0..cfg.subcarriers)
        .map(|k| {
            taps.iter()
                .enumerate()
                .map(|(d, p)| C64::from_polar(*p, -2.0 * PI * (k * d) as f64 / k_total))
                .sum()
        })
        .collect()
}

/// Per-subcarrier channels plus the indices of paths dropped because their
/// delay exceeds the cyclic prefix.
#[derive(Debug, Clone)]
pub struct OfdmChannels {
    pub per_subcarrier: Vec<CMatrix>,
    pub excluded: Vec<usize>,
}

fn usable_paths(paths: &PathSet, cfg: &OfdmConfig) -> (Vec<usize>, Vec<usize>) {
    let limit = cfg.max_delay();
    let (mut keep, mut drop) = (Vec::new(), Vec::new());
    for (l, p) in paths.paths.iter().enumerate() {
        if p.delay >= limit {
            drop.push(l);
        } else {
            keep.push(l);
        }
    }
    if !drop.is_empty() {
        log::warn!("{} path(s) exceed the cyclic prefix and were excluded", drop.len());
    }
    (keep, drop)
}

/// Channel matrices `N_U × N_BS` per subcarrier. `ue = None` means a single
/// isotropic terminal antenna.
pub fn ofdm_channels(paths: &PathSet, cfg: &OfdmConfig, bs: &Panel, ue: Option<&Panel>) -> Result<OfdmChannels> {
    cfg.validate()?;
    let (keep, excluded) = usable_paths(paths, cfg);
    let n_bs = bs.geometry.element_count();
    let n_u = ue.map_or(1, |p| p.geometry.element_count());
    let mut per_subcarrier = vec![Array2::<C64>::zeros((n_u, n_bs)); cfg.subcarriers];
    for l in keep {
        let path = &paths.paths[l];
        let alpha = path.complex_gain();
        let freq = path_frequency_response(cfg, path.delay);
        let a_bs = panel_response(bs, &path.aod);
        let a_u = match ue {
            Some(p) => panel_response(p, &path.aoa),
            None => vec![C64::new(1.0, 0.0)],
        };
        let outer: Vec<C64> = a_u
            .iter()
            .flat_map(|u| a_bs.iter().map(move |b| u * b.conj()))
            .collect();
        for (h, f) in per_subcarrier.iter_mut().zip(&freq) {
            let g = alpha * f;
            for (cell, o) in h.iter_mut().zip(&outer) {
                *cell += g * o;
            }
        }
    }
    Ok(OfdmChannels {
        per_subcarrier,
        excluded,
    })
}

/// Beam-domain responses `w_jᴴ H[k] f_i` for every subcarrier, as
/// `N_BS_beams × N_UT_beams` matrices. Equivalent to projecting
/// [`ofdm_channels`] onto both codebooks, but computed per path.
pub fn beamspace_ofdm(
    paths: &PathSet,
    cfg: &OfdmConfig,
    bs: &Panel,
    bs_codebook: &Codebook,
    device: &Device,
) -> Result<Vec<Array2<C64>>> {
    cfg.validate()?;
    let (keep, _) = usable_paths(paths, cfg);
    let n_i = bs_codebook.len();
    let n_j = device.n_beams();
    let owners = device.codebook().owner_panel();
    let mut out = vec![Array2::<C64>::zeros((n_i, n_j)); cfg.subcarriers];
    for l in keep {
        let path = &paths.paths[l];
        let alpha = path.complex_gain();
        let freq = path_frequency_response(cfg, path.delay);
        let a_bs = panel_response(bs, &path.aod);
        let u = path.aoa.unit_vector();
        let panel_resp: Vec<Vec<C64>> = (0..device.panels().len()).map(|p| device.panel_response(p, &u)).collect();
        let tx: Vec<C64> = bs_codebook.beams().iter().map(|f| inner(&a_bs, f)).collect();
        let rx: Vec<C64> = device
            .codebook()
            .beams()
            .iter()
            .zip(owners)
            .map(|(w, &p)| inner(w, &panel_resp[p]))
            .collect();
        let mut g = Array2::<C64>::zeros((n_i, n_j));
        for (i, t) in tx.iter().enumerate() {
            for (j, r) in rx.iter().enumerate() {
                g[[i, j]] = alpha * r * t;
            }
        }
        for (m, f) in out.iter_mut().zip(&freq) {
            m.scaled_add(*f, &g);
        }
    }
    Ok(out)
}

/// Achievable rate `Σ_k log₂(1 + snr·|w_jᴴ H[k] f_i|²)` for every beam pair.
pub fn pair_rates(beamspace: &[Array2<C64>], snr: f64) -> Array2<f64> {
    let (n_i, n_j) = beamspace.first().map_or((0, 0), |m| m.dim());
    let mut rates = Array2::<f64>::zeros((n_i, n_j));
    for m in beamspace {
        for (r, a) in rates.iter_mut().zip(m.iter()) {
            *r += (1.0 + snr * a.norm_sqr()).log2();
        }
    }
    rates
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::antenna::{dft_codebook, single_panel_device, ArrayGeometry, ElementPattern};
    use crate::channel::narrowband::bilinear;
    use crate::channel::scene::{Band, Path};
    use crate::sphgrid::Direction;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;
    use rustfft::FftPlanner;

    fn ula(n: usize) -> Panel {
        Panel {
            geometry: ArrayGeometry { nx: 1, ny: n, nz: 1 },
            orientation: [0.0; 3],
            pattern: ElementPattern::Isotropic,
        }
    }

    fn one_path(delay: f64) -> PathSet {
        PathSet {
            band: Band::Sub6,
            paths: vec![Path {
                power: 1.0,
                phase: 0.4,
                aod: Direction::new(0.3, 1.3),
                aoa: Direction::new(2.0, 1.0),
                delay,
                is_los: true,
            }],
        }
    }

    #[test]
    fn zero_delay_is_flat() {
        let cfg = OfdmConfig::new(16, 20e6, 4).unwrap();
        let ch = ofdm_channels(&one_path(0.0), &cfg, &ula(4), None).unwrap();
        let first = &ch.per_subcarrier[0];
        for h in &ch.per_subcarrier {
            for (a, b) in h.iter().zip(first.iter()) {
                assert!((a - b).norm() < 1e-12);
            }
        }
    }

    #[test]
    fn one_sample_delay_rotates_phase() {
        let cfg = OfdmConfig::new(16, 20e6, 4).unwrap();
        let ch = ofdm_channels(&one_path(cfg.sample_period()), &cfg, &ula(4), None).unwrap();
        let base = ch.per_subcarrier[0][[0, 1]];
        for (k, h) in ch.per_subcarrier.iter().enumerate() {
            let want = base * C64::from_polar(1.0, -2.0 * PI * k as f64 / 16.0);
            assert!((h[[0, 1]] - want).norm() < 1e-12);
        }
    }

    #[test]
    fn excess_delay_excluded() {
        let cfg = OfdmConfig::new(8, 20e6, 2).unwrap();
        let ch = ofdm_channels(&one_path(2.0 * cfg.sample_period()), &cfg, &ula(2), None).unwrap();
        assert_eq!(ch.excluded, vec![0]);
        assert!(ch.per_subcarrier.iter().all(|h| h.iter().all(|c| c.norm() == 0.0)));
    }

    #[test]
    fn config_validation() {
        assert!(OfdmConfig::new(0, 1e6, 1).is_err());
        assert!(OfdmConfig::new(4, 0.0, 1).is_err());
        assert!(OfdmConfig::new(4, 1e6, 0).is_err());
    }

    #[test]
    fn idft_recovers_taps() {
        let k = 32;
        let cfg = OfdmConfig::new(k, 20e6, 16).unwrap();
        let bs = ula(4);
        let mut rng = ChaCha8Rng::seed_from_u64(17);
        let paths = PathSet {
            band: Band::Sub6,
            paths: (0..6)
                .map(|_| Path {
                    power: rng.random_range(0.1..1.0),
                    phase: rng.random_range(0.0..std::f64::consts::TAU),
                    aod: Direction::new(rng.random_range(0.0..std::f64::consts::TAU), rng.random_range(0.1..3.0)),
                    aoa: Direction::new(0.0, 1.0),
                    delay: rng.random_range(0.0..8.0) * cfg.sample_period(),
                    is_los: false,
                })
                .collect(),
        };
        let ch = ofdm_channels(&paths, &cfg, &bs, None).unwrap();
        let mut planner = FftPlanner::<f64>::new();
        let ifft = planner.plan_fft_inverse(k);
        for m in 0..4 {
            let mut buf: Vec<rustfft::num_complex::Complex<f64>> = ch
                .per_subcarrier
                .iter()
                .map(|h| rustfft::num_complex::Complex::new(h[[0, m]].re, h[[0, m]].im))
                .collect();
            ifft.process(&mut buf);
            for d in 0..k {
                // expected tap: Σ_l α_l p(dT - τ_l) conj(a_BS,l[m]); zero beyond the prefix
                let mut want = C64::new(0.0, 0.0);
                if d < cfg.cp_taps {
                    for p in &paths.paths {
                        let a = panel_response(&bs, &p.aod)[m].conj();
                        want += p.complex_gain() * sinc(d as f64 - p.delay / cfg.sample_period()) * a;
                    }
                }
                let got = C64::new(buf[d].re / k as f64, buf[d].im / k as f64);
                assert!((got - want).norm() < 1e-8, "tap {d} elem {m}: {got} vs {want}");
            }
        }
    }

    #[test]
    fn beamspace_matches_projection() {
        let cfg = OfdmConfig::new(8, 500e6, 16).unwrap();
        let bs = ula(8);
        let cb = dft_codebook(&bs.geometry);
        let dev = single_panel_device("u", ArrayGeometry { nx: 1, ny: 4, nz: 1 }, ElementPattern::Isotropic);
        let mut ps = one_path(3.3e-9);
        ps.paths.push(Path {
            power: 0.3,
            phase: 2.0,
            aod: Direction::new(5.5, 1.9),
            aoa: Direction::new(0.4, 1.4),
            delay: 7.1e-9,
            is_los: false,
        });
        let full = ofdm_channels(&ps, &cfg, &bs, Some(&dev.panels()[0])).unwrap();
        let bsp = beamspace_ofdm(&ps, &cfg, &bs, &cb, &dev).unwrap();
        for (h, m) in full.per_subcarrier.iter().zip(&bsp) {
            for i in 0..cb.len() {
                for j in 0..dev.n_beams() {
                    let want = bilinear(h, cb.beam(i), dev.codebook().beam(j));
                    assert!((m[[i, j]] - want).norm() < 1e-12);
                }
            }
        }
        let rates = pair_rates(&bsp, 10.0);
        let direct: f64 = bsp.iter().map(|m| (1.0 + 10.0 * m[[2, 1]].norm_sqr()).log2()).sum();
        assert!((rates[[2, 1]] - direct).abs() < 1e-12);
    }
}
