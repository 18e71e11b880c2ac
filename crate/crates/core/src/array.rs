//! Uniform planar arrays, array response vectors, conjugate beams and
//! steering-direction codebooks.
//!
//! Every panel has its own local frame: the boresight is the panel normal,
//! azimuth rotates about the panel's vertical axis and elevation about its
//! horizontal axis. Element `(r, c)` sits on row `r` (vertical) and column
//! `c` (horizontal); its phase relative to element `(0, 0)` toward
//! direction `(az, el)` is
//!
//! ```text
//! 2π · spacing · (r · sin(el) + c · cos(el) · sin(az))
//! ```
//!
//! Elements are stored row-major, index `r * cols + c`.

use std::cmp::Ordering;
use std::fmt;

use num_complex::Complex64;

use crate::error::{Result, SteerError};

/// Speed of light in vacuum, m/s.
pub const SPEED_OF_LIGHT: f64 = 299_792_458.0;

/// Name of the codebook/geometry preset modeled on a 28 GHz two-panel
/// platform with 16×16 half-wavelength arrays.
pub const DEFAULT_PRESET: &str = "paper-28ghz";

/// Carrier wavelength for a carrier frequency in GHz.
pub fn wavelength_m(carrier_ghz: f64) -> f64 {
    SPEED_OF_LIGHT / (carrier_ghz * 1e9)
}

/// An (azimuth, elevation) steering direction in degrees, in the front
/// hemisphere of a panel.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SteeringDirection {
    azimuth_deg: f64,
    elevation_deg: f64,
}

impl SteeringDirection {
    pub fn new(azimuth_deg: f64, elevation_deg: f64) -> Result<Self> {
        let in_range = |x: f64| x.is_finite() && (-90.0..=90.0).contains(&x);
        if !in_range(azimuth_deg) || !in_range(elevation_deg) {
            return Err(SteerError::domain(format!(
                "direction ({azimuth_deg}, {elevation_deg}) deg is outside the front hemisphere"
            )));
        }
        Ok(Self {
            azimuth_deg,
            elevation_deg,
        })
    }

    pub const fn broadside() -> Self {
        Self {
            azimuth_deg: 0.0,
            elevation_deg: 0.0,
        }
    }

    #[inline]
    pub fn azimuth_deg(&self) -> f64 {
        self.azimuth_deg
    }

    #[inline]
    pub fn elevation_deg(&self) -> f64 {
        self.elevation_deg
    }

    /// Shift by an offset in degrees, validating the result.
    pub fn offset(&self, d_az: f64, d_el: f64) -> Result<Self> {
        Self::new(self.azimuth_deg + d_az, self.elevation_deg + d_el)
    }
}

impl Eq for SteeringDirection {}

impl PartialOrd for SteeringDirection {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for SteeringDirection {
    fn cmp(&self, other: &Self) -> Ordering {
        self.azimuth_deg
            .total_cmp(&other.azimuth_deg)
            .then(self.elevation_deg.total_cmp(&other.elevation_deg))
    }
}

impl fmt::Display for SteeringDirection {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({}°, {}°)", self.azimuth_deg, self.elevation_deg)
    }
}

/// Geometry of one uniform planar array panel.
#[derive(Clone, Debug, PartialEq)]
pub struct UpaGeometry {
    rows: usize,
    cols: usize,
    element_spacing_wavelengths: f64,
    panel_center_m: [f64; 3],
    panel_normal_azimuth_deg: f64,
}

impl UpaGeometry {
    /// A panel at the origin facing +x.
    pub fn new(rows: usize, cols: usize, element_spacing_wavelengths: f64) -> Result<Self> {
        if rows == 0 || cols == 0 {
            return Err(SteerError::config(format!(
                "array must have at least one element, got {rows}x{cols}"
            )));
        }
        if !(element_spacing_wavelengths > 0.0 && element_spacing_wavelengths.is_finite()) {
            return Err(SteerError::config(format!(
                "element spacing must be positive, got {element_spacing_wavelengths}"
            )));
        }
        Ok(Self {
            rows,
            cols,
            element_spacing_wavelengths,
            panel_center_m: [0.0; 3],
            panel_normal_azimuth_deg: 0.0,
        })
    }

    pub fn half_wavelength(rows: usize, cols: usize) -> Result<Self> {
        Self::new(rows, cols, 0.5)
    }

    pub fn with_placement(mut self, center_m: [f64; 3], normal_azimuth_deg: f64) -> Self {
        self.panel_center_m = center_m;
        self.panel_normal_azimuth_deg = normal_azimuth_deg;
        self
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    /// Number of elements, Na.
    pub fn num_elements(&self) -> usize {
        self.rows * self.cols
    }

    pub fn element_spacing_wavelengths(&self) -> f64 {
        self.element_spacing_wavelengths
    }

    pub fn panel_center_m(&self) -> [f64; 3] {
        self.panel_center_m
    }

    pub fn panel_normal_azimuth_deg(&self) -> f64 {
        self.panel_normal_azimuth_deg
    }

    /// Global 3-D element positions in meters, row-major. The panel is
    /// vertical, centered on `panel_center_m`, with its normal in the
    /// horizontal plane at `panel_normal_azimuth_deg`.
    pub fn element_positions(&self, wavelength_m: f64) -> Vec<[f64; 3]> {
        let psi = self.panel_normal_azimuth_deg.to_radians();
        // Horizontal in-panel axis (local +azimuth) and the vertical axis.
        let horiz = [-psi.sin(), psi.cos(), 0.0];
        let d = self.element_spacing_wavelengths * wavelength_m;
        let r0 = (self.rows as f64 - 1.0) / 2.0;
        let c0 = (self.cols as f64 - 1.0) / 2.0;
        let [cx, cy, cz] = self.panel_center_m;
        let mut out = Vec::with_capacity(self.num_elements());
        for r in 0..self.rows {
            for c in 0..self.cols {
                let u = (c as f64 - c0) * d;
                let v = (r as f64 - r0) * d;
                out.push([cx + u * horiz[0], cy + u * horiz[1], cz + v]);
            }
        }
        out
    }
}

/// Array response toward `direction`: unit-modulus entries, `‖a‖² = Na`.
pub fn array_response(geometry: &UpaGeometry, direction: SteeringDirection) -> Vec<Complex64> {
    let az = direction.azimuth_deg.to_radians();
    let el = direction.elevation_deg.to_radians();
    let k = std::f64::consts::TAU * geometry.element_spacing_wavelengths;
    let row_step = k * el.sin();
    let col_step = k * el.cos() * az.sin();
    let mut out = Vec::with_capacity(geometry.num_elements());
    for r in 0..geometry.rows {
        for c in 0..geometry.cols {
            out.push(Complex64::from_polar(1.0, r as f64 * row_step + c as f64 * col_step));
        }
    }
    out
}

/// `Σ conj(a_k) · b_k`.
pub fn inner(a: &[Complex64], b: &[Complex64]) -> Complex64 {
    a.iter().zip(b).map(|(x, y)| x.conj() * y).sum()
}

/// Unit-norm beamforming weights for one panel.
#[derive(Clone, Debug, PartialEq)]
pub struct BeamWeights {
    weights: Vec<Complex64>,
}

impl BeamWeights {
    /// Wrap a weight vector, rejecting anything whose squared norm is not
    /// one to within 1e-12 relative.
    pub fn new(weights: Vec<Complex64>) -> Result<Self> {
        let norm_sq: f64 = weights.iter().map(|w| w.norm_sqr()).sum();
        if weights.is_empty() || (norm_sq - 1.0).abs() > 1e-12 {
            return Err(SteerError::domain(format!(
                "beam weights must have unit norm, got ‖w‖² = {norm_sq}"
            )));
        }
        Ok(Self { weights })
    }

    /// Scale an arbitrary non-zero vector to unit norm.
    pub fn normalized(mut weights: Vec<Complex64>) -> Result<Self> {
        let norm = weights.iter().map(|w| w.norm_sqr()).sum::<f64>().sqrt();
        if !(norm > 0.0 && norm.is_finite()) {
            return Err(SteerError::domain("cannot normalize a zero weight vector"));
        }
        weights.iter_mut().for_each(|w| *w /= norm);
        Ok(Self { weights })
    }

    pub fn as_slice(&self) -> &[Complex64] {
        &self.weights
    }

    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }
}

/// Conjugate (matched-filter) beam: `a(direction) / √Na`.
pub fn conjugate_beam(geometry: &UpaGeometry, direction: SteeringDirection) -> BeamWeights {
    let scale = 1.0 / (geometry.num_elements() as f64).sqrt();
    let weights = array_response(geometry, direction)
        .into_iter()
        .map(|a| a * scale)
        .collect();
    BeamWeights { weights }
}

/// Beamforming gain `|h* f|²`.
pub fn beam_gain(channel: &[Complex64], beam: &BeamWeights) -> f64 {
    inner(channel, &beam.weights).norm_sqr()
}

/// Grid extent of a codebook, before it is bound to a geometry.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct CodebookSpec {
    pub azimuth_range_deg: (f64, f64),
    pub elevation_range_deg: (f64, f64),
    pub spacing_deg: f64,
}

impl CodebookSpec {
    /// 15 × 7 = 105 beams over ±56° azimuth and ±24° elevation at 8° spacing.
    pub const PRESET_28GHZ: CodebookSpec = CodebookSpec {
        azimuth_range_deg: (-56.0, 56.0),
        elevation_range_deg: (-24.0, 24.0),
        spacing_deg: 8.0,
    };

    pub fn from_preset(name: &str) -> Result<Self> {
        match name {
            DEFAULT_PRESET => Ok(Self::PRESET_28GHZ),
            other => Err(SteerError::config(format!("unknown codebook preset '{other}'"))),
        }
    }
}

fn grid_axis(lo: f64, hi: f64, spacing: f64, axis: &str) -> Result<Vec<f64>> {
    if !(spacing > 0.0 && spacing.is_finite()) {
        return Err(SteerError::config(format!("{axis} spacing must be positive, got {spacing}")));
    }
    if !(lo.is_finite() && hi.is_finite()) || hi < lo {
        return Err(SteerError::config(format!("{axis} range [{lo}, {hi}] is invalid")));
    }
    let steps = (hi - lo) / spacing;
    let n = steps.round();
    if (steps - n).abs() > 1e-9 {
        return Err(SteerError::config(format!(
            "{axis} range [{lo}, {hi}] is not a multiple of spacing {spacing}"
        )));
    }
    Ok((0..=n as usize).map(|k| lo + k as f64 * spacing).collect())
}

/// Ordered steering directions and their conjugate beams.
#[derive(Clone, Debug)]
pub struct Codebook {
    directions: Vec<SteeringDirection>,
    beams: Vec<BeamWeights>,
    spec: CodebookSpec,
}

impl Codebook {
    pub fn directions(&self) -> &[SteeringDirection] {
        &self.directions
    }

    pub fn beams(&self) -> &[BeamWeights] {
        &self.beams
    }

    pub fn spec(&self) -> &CodebookSpec {
        &self.spec
    }

    pub fn len(&self) -> usize {
        self.directions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.directions.is_empty()
    }

    /// Index of a grid direction, if it belongs to this codebook.
    pub fn index_of(&self, direction: SteeringDirection) -> Option<usize> {
        self.directions.iter().position(|d| *d == direction)
    }
}

/// Build the full grid codebook, elevation-major with azimuth ascending
/// inside each elevation row.
pub fn build_codebook(geometry: &UpaGeometry, spec: CodebookSpec) -> Result<Codebook> {
    let (az_lo, az_hi) = spec.azimuth_range_deg;
    let (el_lo, el_hi) = spec.elevation_range_deg;
    let azs = grid_axis(az_lo, az_hi, spec.spacing_deg, "azimuth")?;
    let els = grid_axis(el_lo, el_hi, spec.spacing_deg, "elevation")?;
    let mut directions = Vec::with_capacity(azs.len() * els.len());
    for &el in &els {
        for &az in &azs {
            directions.push(SteeringDirection::new(az, el)?);
        }
    }
    let beams = directions
        .iter()
        .map(|&d| conjugate_beam(geometry, d))
        .collect();
    Ok(Codebook {
        directions,
        beams,
        spec,
    })
}
