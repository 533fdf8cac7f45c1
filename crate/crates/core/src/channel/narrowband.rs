//! Narrowband multipath MIMO channel between the AP and one UT panel.

use ndarray::Array2;

use super::scene::PathSet;
use crate::antenna::{array_response, Panel};
use crate::sphgrid::Direction;
use crate::C64;

pub type CMatrix = Array2<C64>;

/// Array response of `panel` toward a direction given in the frame the
/// panel's orientation is expressed in (device LCS for UT panels).
pub fn panel_response(panel: &Panel, d: &Direction) -> Vec<C64> {
    let local = panel.rotation().apply_inverse(&d.unit_vector());
    let d_local = Direction::from_vector(local).expect("rotated unit vector");
    array_response(&panel.geometry, &panel.pattern, &d_local)
}

/// `H = Σ_l √ρ_l e^{jϑ_l} a_UT(AoA_l) a_AP(AoD_l)ᴴ`, shape `N_UT^(p) × N_AP`.
pub fn narrowband_channel(paths: &PathSet, ap: &Panel, ut_panel: &Panel) -> CMatrix {
    let n_ap = ap.geometry.element_count();
    let n_ut = ut_panel.geometry.element_count();
    let mut h = Array2::<C64>::zeros((n_ut, n_ap));
    for path in &paths.paths {
        let alpha = path.complex_gain();
        let a_ut = panel_response(ut_panel, &path.aoa);
        let a_ap = panel_response(ap, &path.aod);
        for (r, ur) in a_ut.iter().enumerate() {
            let scaled = alpha * ur;
            for (c, ac) in a_ap.iter().enumerate() {
                h[[r, c]] += scaled * ac.conj();
            }
        }
    }
    h
}

/// `vᴴ H u`.
pub fn bilinear(h: &CMatrix, u: &[C64], v: &[C64]) -> C64 {
    let mut acc = C64::new(0.0, 0.0);
    for (r, vr) in v.iter().enumerate() {
        let row = h.row(r);
        let hu: C64 = row.iter().zip(u).map(|(a, b)| a * b).sum();
        acc += vr.conj() * hu;
    }
    acc
}
