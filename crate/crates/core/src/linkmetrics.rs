//! Scalar link quality: SNR, INR, SINR, spectral efficiency and the rates
//! of each multiplexing strategy normalized to codebook capacity.

use std::fmt;
use std::str::FromStr;

use crate::array::{beam_gain, inner, BeamWeights};
use crate::channels::{LosChannel, SiChannel};
use crate::error::{Result, SteerError};

#[inline]
pub fn db_to_linear(db: f64) -> f64 {
    10f64.powf(db / 10.0)
}

#[inline]
pub fn linear_to_db(linear: f64) -> f64 {
    10.0 * linear.log10()
}

/// Scenario-level powers, all in dB.
///
/// Large-scale path gains, transmit powers and noise floors are folded
/// into these four numbers: `snrbar_*` is the SNR a link would see with
/// full beamforming gain, `inr_tx_db` is the fixed cross-link interference
/// at the transmit-link user, and `si_ref_inr_db` is the receive INR a
/// hypothetical full-gain self-interference coupling would produce.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct LinkBudget {
    pub snrbar_tx_db: f64,
    pub snrbar_rx_db: f64,
    pub inr_tx_db: f64,
    pub si_ref_inr_db: f64,
}

impl LinkBudget {
    pub fn validate(&self) -> Result<()> {
        let finite = [self.snrbar_tx_db, self.snrbar_rx_db, self.si_ref_inr_db];
        if finite.iter().any(|x| !x.is_finite()) {
            return Err(SteerError::config(format!("link budget must be finite: {self:?}")));
        }
        if self.inr_tx_db.is_nan() || self.inr_tx_db == f64::INFINITY {
            return Err(SteerError::config(format!(
                "cross-link INR must be finite or -inf, got {}",
                self.inr_tx_db
            )));
        }
        Ok(())
    }
}

/// `linear(snrbar_db) · |h* f|² / Na`.
pub fn snr_with_beam(snrbar_db: f64, channel: &LosChannel, beam: &BeamWeights) -> Result<f64> {
    let h = channel.vector();
    if h.len() != beam.len() {
        return Err(SteerError::domain(format!(
            "channel has {} elements but beam has {}",
            h.len(),
            beam.len()
        )));
    }
    Ok(db_to_linear(snrbar_db) * normalized_gain(channel, beam))
}

/// `|h* f|² / Na` in [0, 1].
pub fn normalized_gain(channel: &LosChannel, beam: &BeamWeights) -> f64 {
    let h = channel.vector();
    beam_gain(h, beam) / h.len() as f64
}

/// `|w* H f|² / (Na_rx · Na_tx)`, the coupling relative to a full-gain
/// rank-one channel.
pub fn normalized_coupling(si: &SiChannel, tx_beam: &BeamWeights, rx_beam: &BeamWeights) -> Result<f64> {
    if rx_beam.len() != si.rows() {
        return Err(SteerError::domain(format!(
            "receive beam has {} weights, channel expects {}",
            rx_beam.len(),
            si.rows()
        )));
    }
    let hf = si.apply(tx_beam)?;
    Ok(coupling_from_product(&hf, rx_beam, si.cols()))
}

/// `|w* (H f)|² / (Na_rx · Na_tx)` given a precomputed `H f`.
pub(crate) fn coupling_from_product(hf: &[num_complex::Complex64], rx_beam: &BeamWeights, na_tx: usize) -> f64 {
    inner(rx_beam.as_slice(), hf).norm_sqr() / (hf.len() * na_tx) as f64
}

/// `linear(si_ref_inr_db) · |w* H f|² / Na²`.
pub fn inr_from_si(
    si_ref_inr_db: f64,
    si: &SiChannel,
    tx_beam: &BeamWeights,
    rx_beam: &BeamWeights,
) -> Result<f64> {
    Ok(db_to_linear(si_ref_inr_db) * normalized_coupling(si, tx_beam, rx_beam)?)
}

pub fn sinr(snr: f64, inr: f64) -> Result<f64> {
    if !(snr >= 0.0) || !(inr >= 0.0) {
        return Err(SteerError::domain(format!(
            "SNR and INR must be non-negative, got snr={snr}, inr={inr}"
        )));
    }
    Ok(snr / (1.0 + inr))
}

/// `log2(1 + sinr)` in bps/Hz.
pub fn spectral_efficiency(sinr: f64) -> Result<f64> {
    if !(sinr >= 0.0) {
        return Err(SteerError::domain(format!("SINR must be non-negative, got {sinr}")));
    }
    Ok((1.0 + sinr).log2())
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Strategy {
    /// Equal time division, fixed transmit power.
    Tdd,
    /// Equal time division with power doubled during each link's half.
    TddPc,
    /// Full duplex on the conventionally aligned beams.
    FdConv,
    /// Full duplex on the beams selected by STEER.
    FdSteer,
}

impl Strategy {
    pub const ALL: [Strategy; 4] = [Strategy::Tdd, Strategy::TddPc, Strategy::FdConv, Strategy::FdSteer];

    pub fn tag(&self) -> &'static str {
        match self {
            Strategy::Tdd => "TDD",
            Strategy::TddPc => "TDD-PC",
            Strategy::FdConv => "FD-CONV",
            Strategy::FdSteer => "FD-STEER",
        }
    }
}

impl FromStr for Strategy {
    type Err = SteerError;

    fn from_str(s: &str) -> Result<Self> {
        Strategy::ALL
            .into_iter()
            .find(|st| st.tag() == s)
            .ok_or_else(|| SteerError::config(format!("unknown strategy '{s}'")))
    }
}

impl fmt::Display for Strategy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.tag())
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct LinkRates {
    pub r_tx: f64,
    pub r_rx: f64,
    pub r_sum: f64,
    pub kappa_sum: f64,
}

/// Linear SNR/INR inputs to [`strategy_rates`].
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct LinkState {
    pub snr_tx_nom: f64,
    pub snr_rx_nom: f64,
    pub snr_tx_sel: f64,
    pub snr_rx_sel: f64,
    pub inr_rx_sel: f64,
}

/// Rates of one multiplexing strategy and its fraction of the codebook sum
/// capacity `log2(1 + snr_tx_nom) + log2(1 + snr_rx_nom)`.
///
/// The TDD variants ignore the `sel` fields and all interference; the FD
/// variants use the selected-beam SNRs, the budget's cross-link INR on the
/// transmit link and `inr_rx_sel` on the receive link.
pub fn strategy_rates(budget: &LinkBudget, state: &LinkState, strategy: Strategy) -> Result<LinkRates> {
    let capacity = spectral_efficiency(state.snr_tx_nom)? + spectral_efficiency(state.snr_rx_nom)?;
    if !(capacity > 0.0) {
        return Err(SteerError::UndefinedKappa);
    }
    let (r_tx, r_rx) = match strategy {
        Strategy::Tdd => (
            0.5 * spectral_efficiency(state.snr_tx_nom)?,
            0.5 * spectral_efficiency(state.snr_rx_nom)?,
        ),
        Strategy::TddPc => (
            0.5 * spectral_efficiency(2.0 * state.snr_tx_nom)?,
            0.5 * spectral_efficiency(2.0 * state.snr_rx_nom)?,
        ),
        Strategy::FdConv | Strategy::FdSteer => {
            let inr_tx = db_to_linear(budget.inr_tx_db);
            (
                spectral_efficiency(sinr(state.snr_tx_sel, inr_tx)?)?,
                spectral_efficiency(sinr(state.snr_rx_sel, state.inr_rx_sel)?)?,
            )
        }
    };
    let r_sum = r_tx + r_rx;
    Ok(LinkRates {
        r_tx,
        r_rx,
        r_sum,
        kappa_sum: r_sum / capacity,
    })
}
