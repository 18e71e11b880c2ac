//! Monte Carlo evaluation: random user drops, conventional alignment,
//! beam selection and a comparison of the four multiplexing strategies.
//!
//! Drop `u` draws its user directions from a ChaCha8 stream keyed by
//! `(seed, u)`, so results do not depend on the number of worker threads,
//! and every sweep evaluates the same drops for each swept value.

use std::collections::BTreeMap;
use std::fmt;
use std::fs::File;
use std::io::Write;
use std::path::Path;
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::alignment::{align, AlignmentResult};
use crate::array::{build_codebook, conjugate_beam, Codebook, CodebookSpec, SteeringDirection, UpaGeometry};
use crate::channels::{los_channel, LosChannel, Platform};
use crate::error::{Result, SteerError};
use crate::linkmetrics::{db_to_linear, linear_to_db, normalized_gain, strategy_rates, LinkBudget, LinkRates, LinkState, Strategy};
use crate::oracle::{median, InrOracle};
use crate::steer::{solve_steer_incremental, LookupTable, NeighborhoodSpec, SteerConfig, SteerSolution};
use crate::textio::{fmt_num, write_metadata};

pub const RESULTS_HEADER: &str = "drop,mode,strategy,theta_u_tx,phi_u_tx,theta_u_rx,phi_u_rx,snr_tx_db,snr_rx_db,inr_rx_db,r_tx,r_rx,r_sum,kappa_sum,measurements";

/// Which links the transmit and receive panels serve. Only a label: both
/// modes share one code path.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum DuplexMode {
    #[default]
    DlDl,
    UlUl,
}

impl DuplexMode {
    pub fn tag(&self) -> &'static str {
        match self {
            DuplexMode::DlDl => "DL-DL",
            DuplexMode::UlUl => "UL-UL",
        }
    }
}

impl FromStr for DuplexMode {
    type Err = SteerError;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "DL-DL" => Ok(DuplexMode::DlDl),
            "UL-UL" => Ok(DuplexMode::UlUl),
            other => Err(SteerError::config(format!("unknown duplex mode '{other}' (expected DL-DL or UL-UL)"))),
        }
    }
}

impl fmt::Display for DuplexMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.tag())
    }
}

/// Panel geometries and their codebooks.
#[derive(Clone, Debug)]
pub struct Testbed {
    pub tx_geometry: UpaGeometry,
    pub rx_geometry: UpaGeometry,
    pub codebook_tx: Codebook,
    pub codebook_rx: Codebook,
}

impl Testbed {
    /// Same codebook layout on both panels.
    pub fn new(platform: &Platform, spec: CodebookSpec) -> Result<Self> {
        Ok(Self {
            tx_geometry: platform.tx.clone(),
            rx_geometry: platform.rx.clone(),
            codebook_tx: build_codebook(&platform.tx, spec)?,
            codebook_rx: build_codebook(&platform.rx, spec)?,
        })
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Scenario {
    pub drop_region_az: (f64, f64),
    pub drop_region_el: (f64, f64),
    pub budget: LinkBudget,
    pub steer_config: SteerConfig,
    pub n_drops: usize,
    pub seed: u64,
    pub mode: DuplexMode,
}

impl Scenario {
    /// Drop region ±60° × ±28°, (Δ, δ) = (2°, 1°), target −7 dB.
    pub fn with_defaults(budget: LinkBudget, n_drops: usize, seed: u64) -> Result<Self> {
        Ok(Self {
            drop_region_az: (-60.0, 60.0),
            drop_region_el: (-28.0, 28.0),
            budget,
            steer_config: SteerConfig::new(NeighborhoodSpec::square(2.0, 1.0)?, -7.0)?,
            n_drops,
            seed,
            mode: DuplexMode::DlDl,
        })
    }

    /// The region must lie inside what both codebooks cover, each beam
    /// covering half a grid spacing around its direction.
    pub fn validate(&self, testbed: &Testbed) -> Result<()> {
        self.budget.validate()?;
        if self.n_drops == 0 {
            return Err(SteerError::config("n_drops must be at least 1"));
        }
        for (name, (lo, hi)) in [("azimuth", self.drop_region_az), ("elevation", self.drop_region_el)] {
            if !(lo.is_finite() && hi.is_finite() && lo <= hi && lo >= -90.0 && hi <= 90.0) {
                return Err(SteerError::config(format!("{name} drop region ({lo}, {hi}) is not a valid interval")));
            }
        }
        for cb in [&testbed.codebook_tx, &testbed.codebook_rx] {
            let spec = cb.spec();
            let half = spec.spacing_deg / 2.0;
            let covers = |(lo, hi): (f64, f64), (clo, chi): (f64, f64)| lo >= clo - half - 1e-9 && hi <= chi + half + 1e-9;
            if !covers(self.drop_region_az, spec.azimuth_range_deg)
                || !covers(self.drop_region_el, spec.elevation_range_deg)
            {
                return Err(SteerError::config(format!(
                    "drop region {:?} x {:?} exceeds codebook coverage {:?} x {:?} (+/- {half})",
                    self.drop_region_az, self.drop_region_el, spec.azimuth_range_deg, spec.elevation_range_deg
                )));
            }
        }
        Ok(())
    }
}

/// Normalized beamforming gains `|h* f|² / Na` of one drop.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct LinkGains {
    pub tx_nom: f64,
    pub rx_nom: f64,
    pub tx_sel: f64,
    pub rx_sel: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct DropResult {
    pub drop: usize,
    pub user_tx: SteeringDirection,
    pub user_rx: SteeringDirection,
    pub nominal_tx: AlignmentResult,
    pub nominal_rx: AlignmentResult,
    /// Receive INR of the nominal beam pair.
    pub inr_nom_db: f64,
    pub steer: SteerSolution,
    pub snr_tx_sel: f64,
    pub snr_rx_sel: f64,
    pub gains: LinkGains,
    /// In [`Strategy::ALL`] order.
    pub rates: [LinkRates; 4],
}

impl DropResult {
    pub fn rates(&self, strategy: Strategy) -> &LinkRates {
        &self.rates[strategy_index(strategy)]
    }
}

fn strategy_index(strategy: Strategy) -> usize {
    Strategy::ALL.iter().position(|&s| s == strategy).expect("listed")
}

/// Where the selected beam pair comes from.
#[derive(Clone, Copy, Debug)]
pub enum Selection<'a> {
    /// Run the incremental solver against the oracle.
    Online,
    /// Read a precomputed table indexed by the nominal beam indices.
    Lookup(&'a LookupTable),
}

/// The part of a drop that does not depend on the beam selection settings.
struct DropBase {
    drop: usize,
    user_tx: LosChannel,
    user_rx: LosChannel,
    nominal_tx: AlignmentResult,
    nominal_rx: AlignmentResult,
    inr_nom_db: f64,
}

fn sample_users(scenario: &Scenario, drop: usize) -> Result<(SteeringDirection, SteeringDirection)> {
    let mut rng = ChaCha8Rng::seed_from_u64(scenario.seed);
    rng.set_stream(drop as u64);
    let (alo, ahi) = scenario.drop_region_az;
    let (elo, ehi) = scenario.drop_region_el;
    let mut draw = || SteeringDirection::new(rng.random_range(alo..=ahi), rng.random_range(elo..=ehi));
    let tx = draw()?;
    let rx = draw()?;
    Ok((tx, rx))
}

fn prepare_drop(scenario: &Scenario, oracle: &dyn InrOracle, testbed: &Testbed, drop: usize) -> Result<DropBase> {
    let (dir_tx, dir_rx) = sample_users(scenario, drop)?;
    let user_tx = los_channel(&testbed.tx_geometry, dir_tx);
    let user_rx = los_channel(&testbed.rx_geometry, dir_rx);
    let nominal_tx = align(&testbed.codebook_tx, &user_tx, scenario.budget.snrbar_tx_db)?;
    let nominal_rx = align(&testbed.codebook_rx, &user_rx, scenario.budget.snrbar_rx_db)?;
    let inr_nom_db = oracle.query_inr_db(nominal_tx.direction, nominal_rx.direction)?;
    Ok(DropBase {
        drop,
        user_tx,
        user_rx,
        nominal_tx,
        nominal_rx,
        inr_nom_db,
    })
}

fn finish_drop(
    base: &DropBase,
    budget: &LinkBudget,
    config: &SteerConfig,
    oracle: &dyn InrOracle,
    testbed: &Testbed,
    selection: Selection<'_>,
) -> Result<DropResult> {
    let steer = match selection {
        Selection::Online => {
            solve_steer_incremental(oracle, base.nominal_tx.direction, base.nominal_rx.direction, config)?
        }
        Selection::Lookup(table) => *table
            .get(base.nominal_tx.beam_index, base.nominal_rx.beam_index)
            .ok_or_else(|| {
                SteerError::config(format!(
                    "lookup table is {}x{} but nominal beams are ({}, {})",
                    table.n_tx(),
                    table.n_rx(),
                    base.nominal_tx.beam_index,
                    base.nominal_rx.beam_index
                ))
            })?,
    };
    let gains = LinkGains {
        tx_nom: normalized_gain(&base.user_tx, &testbed.codebook_tx.beams()[base.nominal_tx.beam_index]),
        rx_nom: normalized_gain(&base.user_rx, &testbed.codebook_rx.beams()[base.nominal_rx.beam_index]),
        tx_sel: normalized_gain(&base.user_tx, &conjugate_beam(&testbed.tx_geometry, steer.d_tx_star)),
        rx_sel: normalized_gain(&base.user_rx, &conjugate_beam(&testbed.rx_geometry, steer.d_rx_star)),
    };
    let rates = rates_for(budget, &gains, base.inr_nom_db, steer.inr_achieved_db)?;
    Ok(DropResult {
        drop: base.drop,
        user_tx: base.user_tx.user_direction(),
        user_rx: base.user_rx.user_direction(),
        nominal_tx: AlignmentResult {
            snr_nom: db_to_linear(budget.snrbar_tx_db) * gains.tx_nom,
            ..base.nominal_tx
        },
        nominal_rx: AlignmentResult {
            snr_nom: db_to_linear(budget.snrbar_rx_db) * gains.rx_nom,
            ..base.nominal_rx
        },
        inr_nom_db: base.inr_nom_db,
        steer,
        snr_tx_sel: db_to_linear(budget.snrbar_tx_db) * gains.tx_sel,
        snr_rx_sel: db_to_linear(budget.snrbar_rx_db) * gains.rx_sel,
        gains,
        rates,
    })
}

fn rates_for(budget: &LinkBudget, gains: &LinkGains, inr_nom_db: f64, inr_sel_db: f64) -> Result<[LinkRates; 4]> {
    let (snrbar_tx, snrbar_rx) = (db_to_linear(budget.snrbar_tx_db), db_to_linear(budget.snrbar_rx_db));
    let nominal = LinkState {
        snr_tx_nom: snrbar_tx * gains.tx_nom,
        snr_rx_nom: snrbar_rx * gains.rx_nom,
        snr_tx_sel: snrbar_tx * gains.tx_nom,
        snr_rx_sel: snrbar_rx * gains.rx_nom,
        inr_rx_sel: db_to_linear(inr_nom_db),
    };
    let steered = LinkState {
        snr_tx_sel: snrbar_tx * gains.tx_sel,
        snr_rx_sel: snrbar_rx * gains.rx_sel,
        inr_rx_sel: db_to_linear(inr_sel_db),
        ..nominal
    };
    let mut out = [LinkRates {
        r_tx: 0.0,
        r_rx: 0.0,
        r_sum: 0.0,
        kappa_sum: 0.0,
    }; 4];
    for (slot, strategy) in out.iter_mut().zip(Strategy::ALL) {
        let state = if strategy == Strategy::FdSteer { &steered } else { &nominal };
        *slot = strategy_rates(budget, state, strategy)?;
    }
    Ok(out)
}

/// Collect per-drop results in drop order; the first failing drop (by
/// index) determines the error.
fn collect_ordered<T: Send>(n: usize, f: impl Fn(usize) -> Result<T> + Sync + Send) -> Result<Vec<T>> {
    let results: Vec<Result<T>> = (0..n).into_par_iter().map(f).collect();
    results.into_iter().collect()
}

fn prepare_drops(scenario: &Scenario, oracle: &dyn InrOracle, testbed: &Testbed) -> Result<Vec<DropBase>> {
    scenario.validate(testbed)?;
    collect_ordered(scenario.n_drops, |u| prepare_drop(scenario, oracle, testbed, u))
}

fn finish_drops(
    bases: &[DropBase],
    budget: &LinkBudget,
    config: &SteerConfig,
    oracle: &dyn InrOracle,
    testbed: &Testbed,
    selection: Selection<'_>,
) -> Result<Vec<DropResult>> {
    collect_ordered(bases.len(), |u| finish_drop(&bases[u], budget, config, oracle, testbed, selection))
}

/// Run every drop of `scenario`. Deterministic in the seed and independent
/// of the rayon pool size.
pub fn run_scenario(
    scenario: &Scenario,
    oracle: &dyn InrOracle,
    testbed: &Testbed,
    selection: Selection<'_>,
) -> Result<Vec<DropResult>> {
    let bases = prepare_drops(scenario, oracle, testbed)?;
    finish_drops(&bases, &scenario.budget, &scenario.steer_config, oracle, testbed, selection)
}

/// Aggregate statistics of a set of drops.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Summary {
    pub n_drops: usize,
    /// In [`Strategy::ALL`] order.
    pub mean_kappa: [f64; 4],
    pub mean_r_sum: [f64; 4],
    pub median_inr_nom_db: f64,
    pub median_inr_steer_db: f64,
    pub target_met_fraction: f64,
    /// Mean of `measurements_used / |T × R|`.
    pub mean_fraction_measured: f64,
}

impl Summary {
    pub fn mean_kappa_of(&self, strategy: Strategy) -> f64 {
        self.mean_kappa[strategy_index(strategy)]
    }
}

pub fn summarize(drops: &[DropResult], config: &SteerConfig) -> Summary {
    let n = drops.len() as f64;
    let mut mean_kappa = [0.0; 4];
    let mut mean_r_sum = [0.0; 4];
    for d in drops {
        for k in 0..4 {
            mean_kappa[k] += d.rates[k].kappa_sum;
            mean_r_sum[k] += d.rates[k].r_sum;
        }
    }
    for k in 0..4 {
        mean_kappa[k] /= n;
        mean_r_sum[k] /= n;
    }
    let pairs = config.pair_count() as f64;
    Summary {
        n_drops: drops.len(),
        mean_kappa,
        mean_r_sum,
        median_inr_nom_db: median_of(drops.iter().map(|d| d.inr_nom_db)),
        median_inr_steer_db: median_of(drops.iter().map(|d| d.steer.inr_achieved_db)),
        target_met_fraction: drops.iter().filter(|d| d.steer.target_met).count() as f64 / n,
        mean_fraction_measured: drops.iter().map(|d| d.steer.measurements_used as f64 / pairs).sum::<f64>() / n,
    }
}

fn median_of(values: impl Iterator<Item = f64>) -> f64 {
    let mut v: Vec<f64> = values.collect();
    if v.is_empty() {
        return f64::NAN;
    }
    median(&mut v)
}

/// One value of a swept parameter with the drops it produced.
#[derive(Clone, Debug)]
pub struct SweepPoint<P> {
    pub param: P,
    pub summary: Summary,
    pub drops: Vec<DropResult>,
}

fn sweep<P: Copy>(
    scenario: &Scenario,
    oracle: &dyn InrOracle,
    testbed: &Testbed,
    params: &[P],
    configure: impl Fn(P) -> Result<SteerConfig>,
) -> Result<Vec<SweepPoint<P>>> {
    let bases = prepare_drops(scenario, oracle, testbed)?;
    params
        .iter()
        .map(|&param| {
            let config = configure(param)?;
            let drops = finish_drops(&bases, &scenario.budget, &config, oracle, testbed, Selection::Online)?;
            Ok(SweepPoint {
                param,
                summary: summarize(&drops, &config),
                drops,
            })
        })
        .collect()
}

/// Same drops for every INR target.
pub fn sweep_target(
    scenario: &Scenario,
    oracle: &dyn InrOracle,
    testbed: &Testbed,
    targets_db: &[f64],
) -> Result<Vec<SweepPoint<f64>>> {
    sweep(scenario, oracle, testbed, targets_db, |t| {
        if t.is_nan() {
            return Err(SteerError::config("INR target must not be NaN"));
        }
        Ok(scenario.steer_config.with_target(t))
    })
}

/// Same drops for every neighborhood; each spec applies to both links.
pub fn sweep_neighborhood(
    scenario: &Scenario,
    oracle: &dyn InrOracle,
    testbed: &Testbed,
    specs: &[NeighborhoodSpec],
) -> Result<Vec<SweepPoint<NeighborhoodSpec>>> {
    sweep(scenario, oracle, testbed, specs, |spec| {
        Ok(SteerConfig {
            tx_spec: spec,
            rx_spec: spec,
            ..scenario.steer_config
        })
    })
}

/// Mean κ over drops for every `(snrbar_tx, snrbar_rx)` cell.
#[derive(Clone, Debug, PartialEq)]
pub struct SnrGrid {
    pub snrbar_tx_db: Vec<f64>,
    pub snrbar_rx_db: Vec<f64>,
    /// `mean_kappa[s][a][b]` for strategy `Strategy::ALL[s]`, transmit SNR
    /// `a` and receive SNR `b`.
    pub mean_kappa: [Vec<Vec<f64>>; 4],
}

impl SnrGrid {
    pub fn kappa(&self, strategy: Strategy) -> &[Vec<f64>] {
        &self.mean_kappa[strategy_index(strategy)]
    }

    /// Cells where the strategy reaches at most half the sum capacity.
    pub fn half_duplex_region(&self, strategy: Strategy) -> Vec<Vec<bool>> {
        self.kappa(strategy)
            .iter()
            .map(|row| row.iter().map(|&k| k <= 0.5).collect())
            .collect()
    }
}

/// Beam selection depends only on INR, so the drops are run once and their
/// rates re-evaluated for each SNR pair.
pub fn snr_grid_sweep(
    scenario: &Scenario,
    oracle: &dyn InrOracle,
    testbed: &Testbed,
    snrbar_tx_db: &[f64],
    snrbar_rx_db: &[f64],
) -> Result<SnrGrid> {
    let drops = run_scenario(scenario, oracle, testbed, Selection::Online)?;
    kappa_grid(&drops, &scenario.budget, snrbar_tx_db, snrbar_rx_db)
}

/// Re-evaluate finished drops under other SNR budgets.
pub fn kappa_grid(
    drops: &[DropResult],
    budget: &LinkBudget,
    snrbar_tx_db: &[f64],
    snrbar_rx_db: &[f64],
) -> Result<SnrGrid> {
    let n = drops.len() as f64;
    let mut mean_kappa: [Vec<Vec<f64>>; 4] = Default::default();
    for grid in mean_kappa.iter_mut() {
        *grid = vec![vec![0.0; snrbar_rx_db.len()]; snrbar_tx_db.len()];
    }
    for (a, &stx) in snrbar_tx_db.iter().enumerate() {
        for (b, &srx) in snrbar_rx_db.iter().enumerate() {
            let cell_budget = LinkBudget {
                snrbar_tx_db: stx,
                snrbar_rx_db: srx,
                ..*budget
            };
            cell_budget.validate()?;
            let per_drop = collect_ordered(drops.len(), |u| {
                let d = &drops[u];
                rates_for(&cell_budget, &d.gains, d.inr_nom_db, d.steer.inr_achieved_db)
            })?;
            let mut total = [0.0; 4];
            for rates in &per_drop {
                for k in 0..4 {
                    total[k] += rates[k].kappa_sum;
                }
            }
            for k in 0..4 {
                mean_kappa[k][a][b] = total[k] / n;
            }
        }
    }
    Ok(SnrGrid {
        snrbar_tx_db: snrbar_tx_db.to_vec(),
        snrbar_rx_db: snrbar_rx_db.to_vec(),
        mean_kappa,
    })
}

/// Empirical CDF as `(value, fraction ≤ value)` for each distinct value.
pub fn empirical_cdf(values: &[f64]) -> Result<Vec<(f64, f64)>> {
    if values.iter().any(|v| v.is_nan()) {
        return Err(SteerError::domain("cannot build a CDF from NaN values"));
    }
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    let n = v.len() as f64;
    let mut out: Vec<(f64, f64)> = Vec::new();
    for (k, &x) in v.iter().enumerate() {
        let frac = (k + 1) as f64 / n;
        match out.last_mut() {
            Some(last) if last.0 == x => last.1 = frac,
            _ => out.push((x, frac)),
        }
    }
    Ok(out)
}

pub fn cdf_to_text(cdf: &[(f64, f64)], value_column: &str, metadata: &BTreeMap<String, String>) -> String {
    let mut out = String::new();
    write_metadata(&mut out, metadata);
    out.push_str(&format!("{value_column},fraction\n"));
    for &(x, p) in cdf {
        out.push_str(&format!("{},{}\n", fmt_num(x), fmt_num(p)));
    }
    out
}

/// Four rows per drop, one per strategy. TDD rows carry no
/// self-interference (`-inf`), and only FD-STEER rows report measurements.
pub fn results_to_text(drops: &[DropResult], mode: DuplexMode, metadata: &BTreeMap<String, String>) -> String {
    let mut out = String::new();
    write_metadata(&mut out, metadata);
    out.push_str(RESULTS_HEADER);
    out.push('\n');
    for d in drops {
        for (strategy, rates) in Strategy::ALL.iter().zip(&d.rates) {
            let (snr_tx, snr_rx, inr_db, measurements) = match strategy {
                Strategy::Tdd | Strategy::TddPc => (d.nominal_tx.snr_nom, d.nominal_rx.snr_nom, f64::NEG_INFINITY, 0),
                Strategy::FdConv => (d.nominal_tx.snr_nom, d.nominal_rx.snr_nom, d.inr_nom_db, 0),
                Strategy::FdSteer => (d.snr_tx_sel, d.snr_rx_sel, d.steer.inr_achieved_db, d.steer.measurements_used),
            };
            let cols = [
                d.drop.to_string(),
                mode.tag().to_owned(),
                strategy.tag().to_owned(),
                fmt_num(d.user_tx.azimuth_deg()),
                fmt_num(d.user_tx.elevation_deg()),
                fmt_num(d.user_rx.azimuth_deg()),
                fmt_num(d.user_rx.elevation_deg()),
                fmt_num(linear_to_db(snr_tx)),
                fmt_num(linear_to_db(snr_rx)),
                fmt_num(inr_db),
                fmt_num(rates.r_tx),
                fmt_num(rates.r_rx),
                fmt_num(rates.r_sum),
                fmt_num(rates.kappa_sum),
                measurements.to_string(),
            ];
            out.push_str(&cols.join(","));
            out.push('\n');
        }
    }
    out
}

pub fn write_text(path: &Path, text: &str) -> Result<()> {
    File::create(path)?.write_all(text.as_bytes())?;
    Ok(())
}
