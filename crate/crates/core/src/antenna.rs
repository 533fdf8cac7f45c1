//! Antenna arrays, DFT codebooks, and multi-panel devices.
//!
//! Every panel has its own local frame. The element pattern boresight is
//! the panel's +x axis (azimuth 0, zenith π/2), matching the AP convention
//! where the array lies in the LCS yz-plane. A panel's `orientation`
//! rotates its frame into the device frame.
//!
//! A [`Device`] unions its panels' DFT codebooks into one codebook, and once
//! a Fibonacci grid is attached it knows, for every grid point, which beam
//! gives the highest gain there (`fib_map`) and the inverse partition.

use std::f64::consts::{FRAC_PI_2, PI, TAU};
use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::channel::pose::{rotation_matrix, Rotation};
use crate::sphgrid::{DirectionSet, Direction};
use crate::{Error, Result, C64};

/// Elements per axis; half-wavelength spacing.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ArrayGeometry {
    pub nx: usize,
    pub ny: usize,
    pub nz: usize,
}

impl ArrayGeometry {
    pub fn new(nx: usize, ny: usize, nz: usize) -> Result<Self> {
        if nx == 0 || ny == 0 || nz == 0 {
            return Err(Error::invalid(format!("array dims must be >= 1, got {{{nx}, {ny}, {nz}}}")));
        }
        Ok(Self { nx, ny, nz })
    }

    pub fn element_count(&self) -> usize {
        self.nx * self.ny * self.nz
    }
}

/// Element radiation pattern.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ElementPattern {
    Isotropic,
    /// Parabolic patch pattern:
    /// `G_dB = max_gain_db - min(12(φ'/HPBW_az)² + 12(θ'/HPBW_el)², floor)`
    /// with `φ'` the azimuth off boresight and `θ'` the elevation.
    Patch {
        max_gain_db: f64,
        hpbw_az_deg: f64,
        hpbw_el_deg: f64,
        front_back_floor_db: f64,
    },
}

impl ElementPattern {
    pub fn patch() -> Self {
        ElementPattern::Patch {
            max_gain_db: 8.0,
            hpbw_az_deg: 65.0,
            hpbw_el_deg: 65.0,
            front_back_floor_db: 30.0,
        }
    }

    /// Gain in dB toward `d` (panel frame).
    pub fn gain_db(&self, d: &Direction) -> f64 {
        match *self {
            ElementPattern::Isotropic => 0.0,
            ElementPattern::Patch {
                max_gain_db,
                hpbw_az_deg,
                hpbw_el_deg,
                front_back_floor_db,
            } => {
                let mut az = d.azimuth();
                if az > PI {
                    az -= TAU;
                }
                let el = d.elevation();
                let az_term = 12.0 * (az.to_degrees() / hpbw_az_deg).powi(2);
                let el_term = 12.0 * (el.to_degrees() / hpbw_el_deg).powi(2);
                max_gain_db - (az_term + el_term).min(front_back_floor_db)
            }
        }
    }

    /// Amplitude gain `10^(G_dB/20)`.
    pub fn amplitude(&self, d: &Direction) -> f64 {
        match self {
            ElementPattern::Isotropic => 1.0,
            _ => 10f64.powf(self.gain_db(d) / 20.0),
        }
    }
}

pub fn element_gain_amplitude(pattern: &ElementPattern, d: &Direction) -> f64 {
    pattern.amplitude(d)
}

/// `(1/√N)·g_a(d)·(a_z ⊗ a_y ⊗ a_x)`; entry `iz·ny·nx + iy·nx + ix`.
pub fn array_response(geometry: &ArrayGeometry, pattern: &ElementPattern, d: &Direction) -> Vec<C64> {
    let u = d.unit_vector();
    let scale = pattern.amplitude(d) / (geometry.element_count() as f64).sqrt();
    steering(geometry, &u, scale)
}

fn steering(geometry: &ArrayGeometry, u: &[f64; 3], scale: f64) -> Vec<C64> {
    let ax = axis_phasors(geometry.nx, u[0]);
    let ay = axis_phasors(geometry.ny, u[1]);
    let az = axis_phasors(geometry.nz, u[2]);
    let mut out = Vec::with_capacity(geometry.element_count());
    for z in &az {
        for y in &ay {
            let zy = z * y * scale;
            for x in &ax {
                out.push(zy * x);
            }
        }
    }
    out
}

fn axis_phasors(n: usize, cosine: f64) -> Vec<C64> {
    (0..n).map(|m| C64::from_polar(1.0, PI * m as f64 * cosine)).collect()
}

/// A set of unit-norm beams, each tagged with its owning panel.
#[derive(Debug, Clone, PartialEq)]
pub struct Codebook {
    beams: Vec<Vec<C64>>,
    owner_panel: Vec<usize>,
}

impl Codebook {
    pub fn len(&self) -> usize {
        self.beams.len()
    }

    pub fn is_empty(&self) -> bool {
        self.beams.is_empty()
    }

    pub fn beams(&self) -> &[Vec<C64>] {
        &self.beams
    }

    pub fn beam(&self, j: usize) -> &[C64] {
        &self.beams[j]
    }

    pub fn owner_panel(&self) -> &[usize] {
        &self.owner_panel
    }

    /// Unions codebooks in order, offsetting panel indices.
    pub fn union(parts: Vec<Codebook>) -> Codebook {
        let mut beams = Vec::new();
        let mut owner_panel = Vec::new();
        for (p, cb) in parts.into_iter().enumerate() {
            owner_panel.extend(std::iter::repeat_n(p, cb.beams.len()));
            beams.extend(cb.beams);
        }
        Codebook { beams, owner_panel }
    }
}

/// Square DFT codebook, beams row-major over `(iz, iy, ix)`.
pub fn dft_codebook(geometry: &ArrayGeometry) -> Codebook {
    let n = geometry.element_count();
    let norm = 1.0 / (n as f64).sqrt();
    let mut beams = Vec::with_capacity(n);
    for iz in 0..geometry.nz {
        for iy in 0..geometry.ny {
            for ix in 0..geometry.nx {
                let mut v = Vec::with_capacity(n);
                for mz in 0..geometry.nz {
                    for my in 0..geometry.ny {
                        for mx in 0..geometry.nx {
                            let turns = (mz * iz) as f64 / geometry.nz as f64
                                + (my * iy) as f64 / geometry.ny as f64
                                + (mx * ix) as f64 / geometry.nx as f64;
                            v.push(C64::from_polar(norm, TAU * turns));
                        }
                    }
                }
                beams.push(v);
            }
        }
    }
    Codebook {
        owner_panel: vec![0; n],
        beams,
    }
}

/// `vᴴa`.
pub fn inner(v: &[C64], a: &[C64]) -> C64 {
    v.iter().zip(a).map(|(v, a)| v.conj() * a).sum()
}

/// One antenna panel of a device.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Panel {
    pub geometry: ArrayGeometry,
    /// `(α, β, γ)` rotating the panel frame into the device frame.
    pub orientation: [f64; 3],
    pub pattern: ElementPattern,
}

impl Panel {
    pub fn rotation(&self) -> Rotation {
        let [a, b, g] = self.orientation;
        rotation_matrix(a, b, g)
    }

    /// Array response toward a device-frame unit vector.
    pub fn response_device_frame(&self, rot: &Rotation, u_device: &[f64; 3]) -> Vec<C64> {
        let local = rot.apply_inverse(u_device);
        let d = Direction::from_vector(local).expect("unit vector");
        array_response(&self.geometry, &self.pattern, &d)
    }
}

/// Panel placement designs.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Design {
    E,
    F,
    EF,
}

impl Design {
    pub fn name(&self) -> &'static str {
        match self {
            Design::E => "E",
            Design::F => "F",
            Design::EF => "EF",
        }
    }

    pub fn all() -> [Design; 3] {
        [Design::E, Design::F, Design::EF]
    }
}

impl std::str::FromStr for Design {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_uppercase().as_str() {
            "E" => Ok(Design::E),
            "F" => Ok(Design::F),
            "EF" => Ok(Design::EF),
            other => Err(Error::invalid(format!("unknown device design {other:?}"))),
        }
    }
}

impl std::fmt::Display for Design {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

/// Edge panels: 4-element ULAs laid along their edge, facing -x, +x, +y.
fn edge_panels() -> Vec<Panel> {
    let ula = ArrayGeometry { nx: 1, ny: 4, nz: 1 };
    [PI, 0.0, FRAC_PI_2]
        .into_iter()
        .map(|alpha| Panel {
            geometry: ula,
            orientation: [alpha, 0.0, 0.0],
            pattern: ElementPattern::patch(),
        })
        .collect()
}

/// Face and back panels: 2×2 UPAs in the screen plane, facing +z and -z.
/// In the panel frame the array spans y and z with boresight +x.
fn face_panels() -> Vec<Panel> {
    let upa = ArrayGeometry { nx: 1, ny: 2, nz: 2 };
    [-FRAC_PI_2, FRAC_PI_2]
        .into_iter()
        .map(|beta| Panel {
            geometry: upa,
            orientation: [0.0, beta, 0.0],
            pattern: ElementPattern::patch(),
        })
        .collect()
}

/// Serializable device description.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DeviceDescription {
    pub id: String,
    pub panels: Vec<Panel>,
}

/// Grid-to-beam map: `beam_of_point[k]` is the best beam at grid point `k`,
/// `partition[j]` lists the points owned by beam `j`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FibMap {
    pub grid: DirectionSet,
    pub beam_of_point: Vec<usize>,
    pub partition: Vec<Vec<usize>>,
}

impl FibMap {
    pub fn n_fib(&self) -> usize {
        self.beam_of_point.len()
    }

    fn from_assignment(grid: DirectionSet, beam_of_point: Vec<usize>, n_beams: usize) -> Self {
        let mut partition = vec![Vec::new(); n_beams];
        for (k, &j) in beam_of_point.iter().enumerate() {
            partition[j].push(k);
        }
        FibMap {
            grid,
            beam_of_point,
            partition,
        }
    }
}

/// A multi-panel terminal with its unioned codebook.
#[derive(Debug, Clone)]
pub struct Device {
    id: String,
    panels: Vec<Panel>,
    rotations: Vec<Rotation>,
    codebook: Codebook,
    fib_map: Option<FibMap>,
}

impl Device {
    pub fn new(id: impl Into<String>, panels: Vec<Panel>) -> Result<Self> {
        if panels.is_empty() {
            return Err(Error::invalid("device needs at least one panel"));
        }
        let codebook = Codebook::union(panels.iter().map(|p| dft_codebook(&p.geometry)).collect());
        let rotations = panels.iter().map(Panel::rotation).collect();
        Ok(Self {
            id: id.into(),
            panels,
            rotations,
            codebook,
            fib_map: None,
        })
    }

    pub fn from_description(desc: &DeviceDescription) -> Result<Self> {
        Device::new(desc.id.clone(), desc.panels.clone())
    }

    pub fn description(&self) -> DeviceDescription {
        DeviceDescription {
            id: self.id.clone(),
            panels: self.panels.clone(),
        }
    }

    pub fn id(&self) -> &str {
        &self.id
    }

    pub fn panels(&self) -> &[Panel] {
        &self.panels
    }

    pub fn codebook(&self) -> &Codebook {
        &self.codebook
    }

    pub fn n_beams(&self) -> usize {
        self.codebook.len()
    }

    pub fn fib_map(&self) -> Option<&FibMap> {
        self.fib_map.as_ref()
    }

    pub fn require_fib_map(&self) -> Result<&FibMap> {
        self.fib_map
            .as_ref()
            .ok_or_else(|| Error::invalid(format!("device {} has no Fibonacci map attached", self.id)))
    }

    /// Computes and stores the grid-to-beam map.
    pub fn attach_grid(&mut self, grid: DirectionSet) {
        let (map, _) = fib_beam_map(self, &grid);
        self.fib_map = Some(FibMap::from_assignment(grid, map, self.n_beams()));
    }

    pub fn with_grid(mut self, grid: DirectionSet) -> Self {
        self.attach_grid(grid);
        self
    }

    /// Beam gains `|v_jᴴ a^(p_j)(d')|²` for all beams toward a device-frame unit vector.
    pub fn beam_gains_vector(&self, u: &[f64; 3]) -> Vec<f64> {
        let mut out = Vec::with_capacity(self.n_beams());
        let mut start = 0;
        for (p, panel) in self.panels.iter().enumerate() {
            let a = panel.response_device_frame(&self.rotations[p], u);
            let n = panel.geometry.element_count();
            for v in &self.codebook.beams[start..start + n] {
                out.push(inner(v, &a).norm_sqr());
            }
            start += n;
        }
        out
    }

    pub fn beam_gains(&self, d: &Direction) -> Vec<f64> {
        self.beam_gains_vector(&d.unit_vector())
    }

    /// Best beam toward `d`, lowest index on ties.
    pub fn best_beam(&self, d: &Direction) -> usize {
        best_of(&self.beam_gains(d))
    }

    /// Response of panel `p` toward a device-frame unit vector.
    pub fn panel_response(&self, p: usize, u_device: &[f64; 3]) -> Vec<C64> {
        self.panels[p].response_device_frame(&self.rotations[p], u_device)
    }
}

/// First index of the maximum; NaN entries never win.
#[cfg(test)]
pub(crate) fn argmax(values: &[f64]) -> usize {
    let mut best = 0;
    let mut best_v = f64::NEG_INFINITY;
    for (i, &v) in values.iter().enumerate() {
        if v > best_v {
            best_v = v;
            best = i;
        }
    }
    best
}

/// Relative gain difference treated as a tie when mapping directions to
/// beams. Mirror-image panels tie exactly in exact arithmetic.
pub const GAIN_TIE_TOLERANCE: f64 = 1e-12;

/// Lowest index whose gain is within [`GAIN_TIE_TOLERANCE`] of the maximum.
pub fn best_of(gains: &[f64]) -> usize {
    let max = gains.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    gains
        .iter()
        .position(|&g| g >= max * (1.0 - GAIN_TIE_TOLERANCE))
        .unwrap_or(0)
}

/// Builds one of the three reference devices (no grid attached).
pub fn build_device(design: Design) -> Device {
    let panels = match design {
        Design::E => edge_panels(),
        Design::F => face_panels(),
        Design::EF => {
            let mut p = edge_panels();
            p.extend(face_panels());
            p
        }
    };
    Device::new(design.name(), panels).expect("non-empty panel list")
}

/// Single-panel device.
pub fn single_panel_device(id: impl Into<String>, geometry: ArrayGeometry, pattern: ElementPattern) -> Device {
    Device::new(
        id,
        vec![Panel {
            geometry,
            orientation: [0.0; 3],
            pattern,
        }],
    )
    .expect("one panel")
}

/// `|v_jᴴ a^(p_j)(d')|²` with `d` in the device frame.
pub fn beam_gain(device: &Device, j: usize, d: &Direction) -> Result<f64> {
    if j >= device.n_beams() {
        return Err(Error::invalid(format!(
            "beam index {j} out of range for {} beams",
            device.n_beams()
        )));
    }
    let p = device.codebook.owner_panel[j];
    let a = device.panel_response(p, &d.unit_vector());
    Ok(inner(&device.codebook.beams[j], &a).norm_sqr())
}

/// Best beam per grid point plus the partition `{I^j}`.
pub fn fib_beam_map(device: &Device, grid: &DirectionSet) -> (Vec<usize>, Vec<Vec<usize>>) {
    let map: Vec<usize> = grid
        .unit_vectors()
        .iter()
        .map(|u| best_of(&device.beam_gains_vector(u)))
        .collect();
    let mut partition = vec![Vec::new(); device.n_beams()];
    for (k, &j) in map.iter().enumerate() {
        partition[j].push(k);
    }
    (map, partition)
}

/// Beams whose grid region is empty.
pub fn coverage_diagnostic(device: &Device) -> Result<Vec<usize>> {
    let fm = device.require_fib_map()?;
    Ok(fm
        .partition
        .iter()
        .enumerate()
        .filter(|(_, s)| s.is_empty())
        .map(|(j, _)| j)
        .collect())
}

/// Best-beam labels over an azimuth/elevation grid of cell centers.
#[derive(Debug, Clone, PartialEq)]
pub struct BeamRegionGrid {
    pub az_steps: usize,
    pub el_steps: usize,
    /// `beams[e][a]`, elevation rows from +π/2 down to -π/2.
    pub beams: Vec<Vec<usize>>,
}

impl BeamRegionGrid {
    pub fn azimuth(&self, a: usize) -> f64 {
        (a as f64 + 0.5) * TAU / self.az_steps as f64
    }

    pub fn zenith(&self, e: usize) -> f64 {
        (e as f64 + 0.5) * PI / self.el_steps as f64
    }

    /// CSV rows `azimuth_rad,elevation_rad,beam`.
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["azimuth_rad", "elevation_rad", "beam"])?;
        for (e, row) in self.beams.iter().enumerate() {
            let el = FRAC_PI_2 - self.zenith(e);
            for (a, beam) in row.iter().enumerate() {
                w.write_record([format!("{:.6}", self.azimuth(a)), format!("{el:.6}"), beam.to_string()])?;
            }
        }
        w.flush()?;
        Ok(())
    }
}

pub fn beam_region_grid(device: &Device, az_steps: usize, el_steps: usize) -> Result<BeamRegionGrid> {
    if az_steps == 0 || el_steps == 0 {
        return Err(Error::invalid("beam region grid needs at least one step per axis"));
    }
    let mut grid = BeamRegionGrid {
        az_steps,
        el_steps,
        beams: Vec::with_capacity(el_steps),
    };
    for e in 0..el_steps {
        let zen = grid.zenith(e);
        let row = (0..az_steps)
            .map(|a| device.best_beam(&Direction::new(grid.azimuth(a), zen)))
            .collect();
        grid.beams.push(row);
    }
    Ok(grid)
}
