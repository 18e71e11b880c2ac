//! Line-of-sight link channels and the synthetic self-interference channel.
//!
//! The self-interference matrix maps transmit-panel weights to receive-panel
//! element outputs (`rows = Na_rx`, `cols = Na_tx`, row-major) and is always
//! renormalized so that `‖H‖_F² = Na_rx · Na_tx`.

use std::fmt;
use std::str::FromStr;

use num_complex::Complex64;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::array::{array_response, wavelength_m, BeamWeights, SteeringDirection, UpaGeometry};
use crate::error::{Result, SteerError};

/// LOS channel toward a user: the array response of the user direction.
#[derive(Clone, Debug)]
pub struct LosChannel {
    user_direction: SteeringDirection,
    vector: Vec<Complex64>,
}

impl LosChannel {
    pub fn user_direction(&self) -> SteeringDirection {
        self.user_direction
    }

    pub fn vector(&self) -> &[Complex64] {
        &self.vector
    }
}

pub fn los_channel(geometry: &UpaGeometry, user_direction: SteeringDirection) -> LosChannel {
    LosChannel {
        user_direction,
        vector: array_response(geometry, user_direction),
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SiModel {
    /// Free-space spherical-wave coupling between every element pair.
    SphericalWave,
    /// i.i.d. complex Gaussian entries.
    Rayleigh,
}

impl SiModel {
    pub fn tag(&self) -> &'static str {
        match self {
            SiModel::SphericalWave => "spherical-wave",
            SiModel::Rayleigh => "rayleigh",
        }
    }
}

impl FromStr for SiModel {
    type Err = SteerError;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "spherical-wave" => Ok(SiModel::SphericalWave),
            "rayleigh" => Ok(SiModel::Rayleigh),
            other => Err(SteerError::config(format!(
                "unknown self-interference model '{other}' (expected spherical-wave or rayleigh)"
            ))),
        }
    }
}

impl fmt::Display for SiModel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.tag())
    }
}

#[derive(Clone, Debug)]
pub struct SiChannel {
    rows: usize,
    cols: usize,
    matrix: Vec<Complex64>,
    model_tag: String,
}

impl SiChannel {
    /// Wrap a row-major `rows × cols` matrix, renormalizing it to
    /// `‖H‖_F² = rows · cols`.
    pub fn from_matrix(
        rows: usize,
        cols: usize,
        mut matrix: Vec<Complex64>,
        model_tag: impl Into<String>,
    ) -> Result<Self> {
        if rows == 0 || cols == 0 || matrix.len() != rows * cols {
            return Err(SteerError::domain(format!(
                "matrix has {} entries, expected {rows}x{cols}",
                matrix.len()
            )));
        }
        let fro_sq: f64 = matrix.iter().map(|h| h.norm_sqr()).sum();
        if !(fro_sq > 0.0 && fro_sq.is_finite()) {
            return Err(SteerError::domain("self-interference matrix has zero or non-finite norm"));
        }
        let scale = ((rows * cols) as f64 / fro_sq).sqrt();
        matrix.iter_mut().for_each(|h| *h *= scale);
        Ok(Self {
            rows,
            cols,
            matrix,
            model_tag: model_tag.into(),
        })
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn matrix(&self) -> &[Complex64] {
        &self.matrix
    }

    pub fn entry(&self, m: usize, n: usize) -> Complex64 {
        self.matrix[m * self.cols + n]
    }

    pub fn model_tag(&self) -> &str {
        &self.model_tag
    }

    pub fn frobenius_sq(&self) -> f64 {
        self.matrix.iter().map(|h| h.norm_sqr()).sum()
    }

    /// `H · f`, one entry per receive element.
    pub fn apply(&self, tx_beam: &BeamWeights) -> Result<Vec<Complex64>> {
        let f = tx_beam.as_slice();
        if f.len() != self.cols {
            return Err(SteerError::domain(format!(
                "transmit beam has {} weights, channel expects {}",
                f.len(),
                self.cols
            )));
        }
        Ok(self
            .matrix
            .chunks_exact(self.cols)
            .map(|row| row.iter().zip(f).map(|(h, x)| h * x).sum())
            .collect())
    }
}

/// Synthesize a self-interference channel between two panels.
///
/// `SphericalWave`: `H[m, n] = (d0 / d_mn) · exp(-j 2π d_mn / λ)` with
/// `d_mn` the distance from tx element `n` to rx element `m` and `d0` the
/// smallest such distance. `Rayleigh`: i.i.d. CN(0, 1) entries drawn from a
/// ChaCha8 stream seeded with `seed`. Both are renormalized afterwards.
pub fn synthesize_si_channel(
    tx: &UpaGeometry,
    rx: &UpaGeometry,
    carrier_wavelength_m: f64,
    model: SiModel,
    seed: u64,
) -> Result<SiChannel> {
    let rows = rx.num_elements();
    let cols = tx.num_elements();
    let matrix = match model {
        SiModel::SphericalWave => {
            if !(carrier_wavelength_m > 0.0 && carrier_wavelength_m.is_finite()) {
                return Err(SteerError::config(format!(
                    "carrier wavelength must be positive, got {carrier_wavelength_m}"
                )));
            }
            let tx_pos = tx.element_positions(carrier_wavelength_m);
            let rx_pos = rx.element_positions(carrier_wavelength_m);
            let mut dist = Vec::with_capacity(rows * cols);
            for p in &rx_pos {
                for q in &tx_pos {
                    let d = ((p[0] - q[0]).powi(2) + (p[1] - q[1]).powi(2) + (p[2] - q[2]).powi(2))
                        .sqrt();
                    if d == 0.0 {
                        return Err(SteerError::Geometry(
                            "transmit and receive panels have coincident elements".into(),
                        ));
                    }
                    dist.push(d);
                }
            }
            let d0 = dist.iter().copied().fold(f64::INFINITY, f64::min);
            let k = std::f64::consts::TAU / carrier_wavelength_m;
            dist.into_iter()
                .map(|d| Complex64::from_polar(d0 / d, -k * d))
                .collect()
        }
        SiModel::Rayleigh => {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            (0..rows * cols)
                .map(|_| {
                    let re: f64 = StandardNormal.sample(&mut rng);
                    let im: f64 = StandardNormal.sample(&mut rng);
                    Complex64::new(re, im)
                })
                .collect()
        }
    };
    SiChannel::from_matrix(rows, cols, matrix, model.tag())
}

/// Transmit and receive panels of a full-duplex node plus its carrier.
#[derive(Clone, Debug)]
pub struct Platform {
    pub tx: UpaGeometry,
    pub rx: UpaGeometry,
    pub carrier_wavelength_m: f64,
}

impl Platform {
    /// Two 16×16 half-wavelength panels on adjacent faces of a triangular
    /// platform at 28 GHz: normals at ±60° azimuth, centers 0.3 m apart.
    pub fn default_28ghz() -> Self {
        Self::sectorized(16, 16, 0.5, 28.0, 0.3, 120.0).expect("valid preset geometry")
    }

    /// Two identical panels whose normals are `normal_separation_deg` apart
    /// (symmetric about +x) and whose centers are `center_separation_m`
    /// apart, both on the inscribed circle of the platform.
    pub fn sectorized(
        rows: usize,
        cols: usize,
        spacing_wavelengths: f64,
        carrier_ghz: f64,
        center_separation_m: f64,
        normal_separation_deg: f64,
    ) -> Result<Self> {
        let half = (normal_separation_deg / 2.0).to_radians();
        if !(half.sin() > 0.0) {
            return Err(SteerError::config(format!(
                "panel normal separation must be in (0, 360) deg, got {normal_separation_deg}"
            )));
        }
        let radius = center_separation_m / (2.0 * half.sin());
        let base = UpaGeometry::new(rows, cols, spacing_wavelengths)?;
        let at = |sign: f64| {
            let psi = sign * half;
            base.clone().with_placement(
                [radius * psi.cos(), radius * psi.sin(), 0.0],
                psi.to_degrees(),
            )
        };
        Ok(Self {
            tx: at(1.0),
            rx: at(-1.0),
            carrier_wavelength_m: wavelength_m(carrier_ghz),
        })
    }

    pub fn si_channel(&self, model: SiModel, seed: u64) -> Result<SiChannel> {
        synthesize_si_channel(&self.tx, &self.rx, self.carrier_wavelength_m, model, seed)
    }
}
