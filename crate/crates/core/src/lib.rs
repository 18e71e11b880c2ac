//! Joint transmit/receive beam selection for full-duplex mmWave
//! transceivers with separate transmit and receive phased arrays.
//!
//! The crate models uniform planar arrays and beam codebooks, line-of-sight
//! user channels, the self-interference (SI) channel between the two arrays,
//! per-link SNR/INR/SINR and spectral efficiency, and the beam selection
//! routine that trades a small beam deviation for lower self-interference.
//! [`sim`] runs Monte Carlo comparisons of duplexing strategies.

// `!(x > 0.0)` guards are meant to reject NaN too.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod alignment;
pub mod array;
pub mod channels;
pub mod error;
pub mod linkmetrics;
pub mod oracle;
pub mod sim;
pub mod steer;
mod textio;

pub use alignment::{align, AlignmentResult};
pub use array::{
    array_response, beam_gain, build_codebook, conjugate_beam, wavelength_m, BeamWeights, Codebook, CodebookSpec,
    SteeringDirection, UpaGeometry,
};
pub use channels::{los_channel, synthesize_si_channel, LosChannel, Platform, SiChannel, SiModel};
pub use error::{Result, SteerError};
pub use linkmetrics::{
    db_to_linear, linear_to_db, sinr, spectral_efficiency, strategy_rates, LinkBudget, LinkRates, LinkState, Strategy,
};
pub use oracle::{
    export_grid, import_grid, GridOracle, InrGrid, InrOracle, MeasurementModel, OracleStats, SyntheticOracle,
};
pub use sim::{
    empirical_cdf, kappa_grid, run_scenario, snr_grid_sweep, summarize, sweep_neighborhood, sweep_target, DropResult,
    DuplexMode, LinkGains, Scenario, Selection, SnrGrid, Summary, SweepPoint, Testbed,
};
pub use steer::{
    neighborhood_offsets, precompute_lookup, solve_steer_exhaustive, solve_steer_incremental, sort_pairs_by_deviation,
    DeviationMetric, LookupTable, NeighborhoodSpec, SteerConfig, SteerSolution,
};
pub use textio::fmt_num;
