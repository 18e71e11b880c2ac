//! STEER: joint transmit/receive beam selection around conventionally
//! aligned beams.
//!
//! Starting from the nominal transmit and receive directions, candidate
//! directions are drawn from a small spatial neighborhood around each. The
//! selected pair is the one closest to the nominal pair whose receive INR
//! is at most `max(target, min INR in the neighborhood)`. Closeness is the
//! sort key `Δϑ² + Δφ̂²`, where `Δϑ` (`Δφ̂`) is the larger azimuth
//! (elevation) deviation across the two links; equal keys are ordered
//! lexicographically by `(tx.az, tx.el, rx.az, rx.el)`.
//!
//! [`solve_steer_exhaustive`] measures the whole neighborhood first;
//! [`solve_steer_incremental`] walks the sorted pairs and stops at the
//! first one meeting the target. Both return the same pair.

use std::collections::BTreeMap;
use std::fs::File;
use std::io::Write;
use std::path::Path;

use rayon::prelude::*;

use crate::array::{Codebook, SteeringDirection};
use crate::error::{Result, SteerError};
use crate::oracle::InrOracle;
use crate::textio::{fmt_num, parse_error, parse_f64, parse_usize, read_csv, write_metadata};

pub const LOOKUP_HEADER: &str =
    "i,j,theta_tx_star,phi_tx_star,theta_rx_star,phi_rx_star,inr_db,measurements,target_met";

/// Extent `(Δθ, Δφ)` and resolution `(δθ, δφ)` of a spatial neighborhood,
/// in degrees.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct NeighborhoodSpec {
    delta_theta_deg: f64,
    delta_phi_deg: f64,
    res_theta_deg: f64,
    res_phi_deg: f64,
}

impl NeighborhoodSpec {
    pub fn new(delta_theta_deg: f64, delta_phi_deg: f64, res_theta_deg: f64, res_phi_deg: f64) -> Result<Self> {
        for (name, delta, res) in [
            ("azimuth", delta_theta_deg, res_theta_deg),
            ("elevation", delta_phi_deg, res_phi_deg),
        ] {
            if !(delta >= 0.0 && delta.is_finite()) {
                return Err(SteerError::config(format!("{name} extent must be >= 0, got {delta}")));
            }
            if !(res > 0.0 && res.is_finite()) {
                return Err(SteerError::config(format!("{name} resolution must be > 0, got {res}")));
            }
            if delta > 0.0 && res > delta {
                return Err(SteerError::config(format!(
                    "{name} resolution {res} exceeds the neighborhood extent {delta}"
                )));
            }
        }
        Ok(Self {
            delta_theta_deg,
            delta_phi_deg,
            res_theta_deg,
            res_phi_deg,
        })
    }

    /// Same extent and resolution on both axes.
    pub fn square(delta_deg: f64, res_deg: f64) -> Result<Self> {
        Self::new(delta_deg, delta_deg, res_deg, res_deg)
    }

    /// The single-direction neighborhood: no steering on this link.
    pub fn fixed() -> Self {
        Self {
            delta_theta_deg: 0.0,
            delta_phi_deg: 0.0,
            res_theta_deg: 1.0,
            res_phi_deg: 1.0,
        }
    }

    pub fn delta_theta_deg(&self) -> f64 {
        self.delta_theta_deg
    }

    pub fn delta_phi_deg(&self) -> f64 {
        self.delta_phi_deg
    }

    pub fn res_theta_deg(&self) -> f64 {
        self.res_theta_deg
    }

    pub fn res_phi_deg(&self) -> f64 {
        self.res_phi_deg
    }

    /// `K_θ = ⌊Δθ / δθ⌋`.
    pub fn k_theta(&self) -> usize {
        steps(self.delta_theta_deg, self.res_theta_deg)
    }

    /// `K_φ = ⌊Δφ / δφ⌋`.
    pub fn k_phi(&self) -> usize {
        steps(self.delta_phi_deg, self.res_phi_deg)
    }

    /// `(2 K_θ + 1)(2 K_φ + 1)`.
    pub fn size(&self) -> usize {
        (2 * self.k_theta() + 1) * (2 * self.k_phi() + 1)
    }

    /// Integer step offsets, azimuth ascending then elevation ascending.
    fn step_offsets(&self) -> Vec<(i64, i64)> {
        let kt = self.k_theta() as i64;
        let kp = self.k_phi() as i64;
        (-kt..=kt)
            .flat_map(|m| (-kp..=kp).map(move |n| (m, n)))
            .collect()
    }
}

/// Floor of `delta / res`, forgiving ratios that land a hair under an
/// integer through rounding (e.g. 0.3 / 0.1).
fn steps(delta: f64, res: f64) -> usize {
    (delta / res + 1e-9).floor() as usize
}

/// Offsets `(m·δθ, n·δφ)` for `m ∈ [−K_θ, K_θ]`, `n ∈ [−K_φ, K_φ]`.
pub fn neighborhood_offsets(spec: &NeighborhoodSpec) -> Vec<(f64, f64)> {
    spec.step_offsets()
        .into_iter()
        .map(|(m, n)| (m as f64 * spec.res_theta_deg, n as f64 * spec.res_phi_deg))
        .collect()
}

/// How a pair's `(Δϑ, Δφ̂)` deviation is scored.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum DeviationMetric {
    /// `Δϑ² + Δφ̂²`.
    #[default]
    SquaredSum,
    /// `max(Δϑ, Δφ̂)`.
    Chebyshev,
}

impl DeviationMetric {
    fn score(&self, d_theta: f64, d_phi: f64) -> f64 {
        match self {
            DeviationMetric::SquaredSum => d_theta * d_theta + d_phi * d_phi,
            DeviationMetric::Chebyshev => d_theta.max(d_phi),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SteerConfig {
    pub tx_spec: NeighborhoodSpec,
    pub rx_spec: NeighborhoodSpec,
    /// Receive INR target in dB; `-inf` asks for the neighborhood minimum.
    pub inr_target_db: f64,
    pub metric: DeviationMetric,
}

impl SteerConfig {
    pub fn new(spec: NeighborhoodSpec, inr_target_db: f64) -> Result<Self> {
        Self::per_link(spec, spec, inr_target_db)
    }

    /// Separate neighborhoods per link. A [`NeighborhoodSpec::fixed`] link
    /// keeps its nominal direction.
    pub fn per_link(tx_spec: NeighborhoodSpec, rx_spec: NeighborhoodSpec, inr_target_db: f64) -> Result<Self> {
        if inr_target_db.is_nan() {
            return Err(SteerError::config("INR target must not be NaN"));
        }
        Ok(Self {
            tx_spec,
            rx_spec,
            inr_target_db,
            metric: DeviationMetric::default(),
        })
    }

    pub fn with_metric(mut self, metric: DeviationMetric) -> Self {
        self.metric = metric;
        self
    }

    pub fn with_target(mut self, inr_target_db: f64) -> Self {
        self.inr_target_db = inr_target_db;
        self
    }

    /// Number of beam pairs in the joint neighborhood.
    pub fn pair_count(&self) -> usize {
        self.tx_spec.size() * self.rx_spec.size()
    }
}

/// One candidate transmit/receive direction pair.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct CandidatePair {
    pub tx: SteeringDirection,
    pub rx: SteeringDirection,
    /// `(Δϑ, Δφ̂)`: largest azimuth and elevation deviation across links.
    pub deviation: (f64, f64),
    pub key: f64,
}

fn sorted_candidates(
    nominal_tx: SteeringDirection,
    nominal_rx: SteeringDirection,
    config: &SteerConfig,
) -> Result<Vec<CandidatePair>> {
    let expand = |nominal: SteeringDirection, spec: &NeighborhoodSpec| -> Result<Vec<(SteeringDirection, f64, f64)>> {
        spec.step_offsets()
            .into_iter()
            .map(|(m, n)| {
                let (dt, dp) = (m as f64 * spec.res_theta_deg, n as f64 * spec.res_phi_deg);
                Ok((nominal.offset(dt, dp)?, dt.abs(), dp.abs()))
            })
            .collect()
    };
    let txs = expand(nominal_tx, &config.tx_spec)?;
    let rxs = expand(nominal_rx, &config.rx_spec)?;
    let mut pairs = Vec::with_capacity(txs.len() * rxs.len());
    for &(tx, tx_dt, tx_dp) in &txs {
        for &(rx, rx_dt, rx_dp) in &rxs {
            let deviation = (tx_dt.max(rx_dt), tx_dp.max(rx_dp));
            pairs.push(CandidatePair {
                tx,
                rx,
                deviation,
                key: config.metric.score(deviation.0, deviation.1),
            });
        }
    }
    pairs.sort_by(|a, b| {
        a.key
            .total_cmp(&b.key)
            .then_with(|| a.tx.cmp(&b.tx))
            .then_with(|| a.rx.cmp(&b.rx))
    });
    Ok(pairs)
}

/// Every pair in `T × R` around the nominal directions, nearest first.
/// The first element is always the nominal pair.
pub fn sort_pairs_by_deviation(
    nominal_tx: SteeringDirection,
    nominal_rx: SteeringDirection,
    spec: &NeighborhoodSpec,
) -> Result<Vec<CandidatePair>> {
    sorted_candidates(nominal_tx, nominal_rx, &SteerConfig::new(*spec, f64::NEG_INFINITY)?)
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SteerSolution {
    pub d_tx_star: SteeringDirection,
    pub d_rx_star: SteeringDirection,
    pub inr_achieved_db: f64,
    /// `(Δϑ, Δφ̂)` of the selected pair.
    pub deviation: (f64, f64),
    pub measurements_used: usize,
    pub target_met: bool,
}

impl SteerSolution {
    fn from_pair(pair: &CandidatePair, inr_db: f64, measurements_used: usize, target_db: f64) -> Self {
        Self {
            d_tx_star: pair.tx,
            d_rx_star: pair.rx,
            inr_achieved_db: inr_db,
            deviation: pair.deviation,
            measurements_used,
            target_met: inr_db <= target_db,
        }
    }
}

/// Measure every pair in the neighborhood, then return the nearest pair
/// with INR at most `max(target, INR_min)`.
pub fn solve_steer_exhaustive(
    oracle: &dyn InrOracle,
    nominal_tx: SteeringDirection,
    nominal_rx: SteeringDirection,
    config: &SteerConfig,
) -> Result<SteerSolution> {
    let pairs = sorted_candidates(nominal_tx, nominal_rx, config)?;
    let inrs = pairs
        .iter()
        .map(|p| oracle.query_inr_db(p.tx, p.rx))
        .collect::<Result<Vec<f64>>>()?;
    let inr_min = inrs.iter().copied().fold(f64::INFINITY, f64::min);
    let threshold = config.inr_target_db.max(inr_min);
    let k = inrs
        .iter()
        .position(|&v| v <= threshold)
        .expect("the minimum itself is feasible");
    Ok(SteerSolution::from_pair(&pairs[k], inrs[k], pairs.len(), config.inr_target_db))
}

/// Measure pairs nearest-first and stop as soon as one meets the target;
/// if none does, the whole neighborhood is measured and the first pair
/// attaining the minimum wins.
pub fn solve_steer_incremental(
    oracle: &dyn InrOracle,
    nominal_tx: SteeringDirection,
    nominal_rx: SteeringDirection,
    config: &SteerConfig,
) -> Result<SteerSolution> {
    let pairs = sorted_candidates(nominal_tx, nominal_rx, config)?;
    let mut inr_min = f64::INFINITY;
    let mut best = 0;
    let mut measured = 0;
    for (k, pair) in pairs.iter().enumerate() {
        let v = oracle.query_inr_db(pair.tx, pair.rx)?;
        measured += 1;
        if v < inr_min {
            inr_min = v;
            best = k;
            if v <= config.inr_target_db {
                break;
            }
        }
    }
    Ok(SteerSolution::from_pair(&pairs[best], inr_min, measured, config.inr_target_db))
}

/// Precomputed solutions for every nominal beam pair `(i, j)`.
#[derive(Clone, Debug, PartialEq)]
pub struct LookupTable {
    n_tx: usize,
    n_rx: usize,
    entries: Vec<SteerSolution>,
}

impl LookupTable {
    pub fn n_tx(&self) -> usize {
        self.n_tx
    }

    pub fn n_rx(&self) -> usize {
        self.n_rx
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn get(&self, i: usize, j: usize) -> Option<&SteerSolution> {
        (i < self.n_tx && j < self.n_rx).then(|| &self.entries[i * self.n_rx + j])
    }

    pub fn iter(&self) -> impl Iterator<Item = ((usize, usize), &SteerSolution)> {
        let n_rx = self.n_rx;
        self.entries
            .iter()
            .enumerate()
            .map(move |(k, s)| ((k / n_rx, k % n_rx), s))
    }

    pub fn to_text(&self, metadata: &BTreeMap<String, String>) -> String {
        let mut out = String::new();
        write_metadata(&mut out, metadata);
        out.push_str(LOOKUP_HEADER);
        out.push('\n');
        for ((i, j), s) in self.iter() {
            out.push_str(&format!(
                "{i},{j},{},{},{},{},{},{},{}\n",
                fmt_num(s.d_tx_star.azimuth_deg()),
                fmt_num(s.d_tx_star.elevation_deg()),
                fmt_num(s.d_rx_star.azimuth_deg()),
                fmt_num(s.d_rx_star.elevation_deg()),
                fmt_num(s.inr_achieved_db),
                s.measurements_used,
                u8::from(s.target_met),
            ));
        }
        out
    }

    pub fn write(&self, path: &Path, metadata: &BTreeMap<String, String>) -> Result<()> {
        File::create(path)?.write_all(self.to_text(metadata).as_bytes())?;
        Ok(())
    }

    /// Read a table written for these codebooks. Deviations are recomputed
    /// against the codebook directions.
    pub fn read(path: &Path, codebook_tx: &Codebook, codebook_rx: &Codebook) -> Result<Self> {
        Self::parse(path, File::open(path)?, codebook_tx, codebook_rx)
    }

    pub fn parse(
        path: &Path,
        reader: impl std::io::Read,
        codebook_tx: &Codebook,
        codebook_rx: &Codebook,
    ) -> Result<Self> {
        let body = read_csv(path, reader, LOOKUP_HEADER)?;
        let (n_tx, n_rx) = (codebook_tx.len(), codebook_rx.len());
        let mut slots: Vec<Option<SteerSolution>> = vec![None; n_tx * n_rx];
        for (line, f) in body.rows {
            let i = parse_usize(path, line, &f[0], "i")?;
            let j = parse_usize(path, line, &f[1], "j")?;
            if i >= n_tx || j >= n_rx {
                return Err(parse_error(path, line, format!("index ({i}, {j}) outside a {n_tx}x{n_rx} codebook pair")));
            }
            let num = |k: usize, name: &str| parse_f64(path, line, &f[k], name);
            let dir = |az: f64, el: f64| SteeringDirection::new(az, el).map_err(|e| parse_error(path, line, e.to_string()));
            let tx = dir(num(2, "theta_tx_star")?, num(3, "phi_tx_star")?)?;
            let rx = dir(num(4, "theta_rx_star")?, num(5, "phi_rx_star")?)?;
            let inr_db = num(6, "inr_db")?;
            if inr_db.is_nan() {
                return Err(parse_error(path, line, "inr_db is NaN"));
            }
            let measurements_used = parse_usize(path, line, &f[7], "measurements")?;
            let target_met = match f[8].as_str() {
                "1" | "true" => true,
                "0" | "false" => false,
                other => return Err(parse_error(path, line, format!("column target_met: '{other}' is not 0/1"))),
            };
            let (nt, nr) = (codebook_tx.directions()[i], codebook_rx.directions()[j]);
            let deviation = (
                (tx.azimuth_deg() - nt.azimuth_deg()).abs().max((rx.azimuth_deg() - nr.azimuth_deg()).abs()),
                (tx.elevation_deg() - nt.elevation_deg()).abs().max((rx.elevation_deg() - nr.elevation_deg()).abs()),
            );
            let slot = &mut slots[i * n_rx + j];
            if slot.is_some() {
                return Err(parse_error(path, line, format!("duplicate entry for ({i}, {j})")));
            }
            *slot = Some(SteerSolution {
                d_tx_star: tx,
                d_rx_star: rx,
                inr_achieved_db: inr_db,
                deviation,
                measurements_used,
                target_met,
            });
        }
        let entries = slots
            .into_iter()
            .enumerate()
            .map(|(k, s)| {
                s.ok_or_else(|| parse_error(path, 0, format!("missing entry for ({}, {})", k / n_rx, k % n_rx)))
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(Self { n_tx, n_rx, entries })
    }
}

/// Solve every `(i, j)` codebook pair. Pairs are independent and solved in
/// parallel; the table does not depend on scheduling.
pub fn precompute_lookup(
    oracle: &dyn InrOracle,
    codebook_tx: &Codebook,
    codebook_rx: &Codebook,
    config: &SteerConfig,
) -> Result<LookupTable> {
    let (n_tx, n_rx) = (codebook_tx.len(), codebook_rx.len());
    let results: Vec<Result<SteerSolution>> = (0..n_tx * n_rx)
        .into_par_iter()
        .map(|k| {
            let (i, j) = (k / n_rx, k % n_rx);
            solve_steer_incremental(
                oracle,
                codebook_tx.directions()[i],
                codebook_rx.directions()[j],
                config,
            )
            .map_err(|e| SteerError::Lookup { i, j, source: Box::new(e) })
        })
        .collect();
    let entries = results.into_iter().collect::<Result<Vec<_>>>()?;
    Ok(LookupTable { n_tx, n_rx, entries })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::oracle::{GridEntry, GridOracle, InrGrid};

    fn d(az: f64, el: f64) -> SteeringDirection {
        SteeringDirection::new(az, el).unwrap()
    }

    #[test]
    fn offsets_follow_the_floor_rule() {
        let s = NeighborhoodSpec::square(2.0, 1.0).unwrap();
        assert_eq!(neighborhood_offsets(&s).len(), 25);
        assert_eq!(s.size(), 25);

        let zero = NeighborhoodSpec::square(0.0, 1.0).unwrap();
        assert_eq!(neighborhood_offsets(&zero), vec![(0.0, 0.0)]);

        let coarse = NeighborhoodSpec::new(2.0, 0.0, 1.5, 1.0).unwrap();
        assert_eq!(coarse.k_theta(), 1);
        let az: Vec<f64> = neighborhood_offsets(&coarse).iter().map(|o| o.0).collect();
        assert_eq!(az, vec![-1.5, 0.0, 1.5]);

        let fine = NeighborhoodSpec::square(0.3, 0.1).unwrap();
        assert_eq!(fine.k_theta(), 3);
    }

    #[test]
    fn offsets_are_ordered_azimuth_then_elevation() {
        let s = NeighborhoodSpec::square(1.0, 1.0).unwrap();
        let o = neighborhood_offsets(&s);
        assert_eq!(o[0], (-1.0, -1.0));
        assert_eq!(o[1], (-1.0, 0.0));
        assert_eq!(o[3], (0.0, -1.0));
        assert_eq!(o[8], (1.0, 1.0));
    }

    #[test]
    fn spec_validation() {
        assert!(NeighborhoodSpec::new(1.0, 1.0, 2.0, 1.0).is_err());
        assert!(NeighborhoodSpec::new(-1.0, 1.0, 1.0, 1.0).is_err());
        assert!(NeighborhoodSpec::new(1.0, 1.0, 0.0, 1.0).is_err());
        assert!(NeighborhoodSpec::new(0.0, 0.0, 5.0, 5.0).is_ok());
        assert!(SteerConfig::new(NeighborhoodSpec::fixed(), f64::NAN).is_err());
    }

    #[test]
    fn sorted_pairs_start_at_nominal_with_non_decreasing_keys() {
        let s1 = NeighborhoodSpec::square(1.0, 1.0).unwrap();
        let pairs = sort_pairs_by_deviation(d(8.0, 0.0), d(-16.0, 8.0), &s1).unwrap();
        assert_eq!(pairs.len(), 81);
        assert_eq!((pairs[0].tx, pairs[0].rx), (d(8.0, 0.0), d(-16.0, 8.0)));
        assert_eq!(pairs[0].key, 0.0);
        assert!(pairs.windows(2).all(|w| w[0].key <= w[1].key));

        let s2 = NeighborhoodSpec::square(2.0, 1.0).unwrap();
        assert_eq!(sort_pairs_by_deviation(d(0.0, 0.0), d(0.0, 0.0), &s2).unwrap().len(), 625);
    }

    #[test]
    fn deviation_uses_the_max_across_links() {
        let s = NeighborhoodSpec::square(1.0, 1.0).unwrap();
        let pairs = sort_pairs_by_deviation(d(0.0, 0.0), d(0.0, 0.0), &s).unwrap();
        // tx shifted in azimuth and rx shifted in elevation: (1, 1), key 2
        let p = pairs.iter().find(|p| p.tx == d(1.0, 0.0) && p.rx == d(0.0, -1.0)).unwrap();
        assert_eq!(p.deviation, (1.0, 1.0));
        assert_eq!(p.key, 2.0);
        // both links shifted by one degree in azimuth: (1, 0), key 1
        let q = pairs.iter().find(|p| p.tx == d(1.0, 0.0) && p.rx == d(-1.0, 0.0)).unwrap();
        assert_eq!(q.key, 1.0);
        // ties are lexicographic
        let key1: Vec<_> = pairs.iter().filter(|p| p.key == 1.0).collect();
        assert!(key1.windows(2).all(|w| (w[0].tx, w[0].rx) < (w[1].tx, w[1].rx)));
    }

    #[test]
    fn neighborhood_leaving_the_hemisphere_is_a_domain_error() {
        let s = NeighborhoodSpec::square(2.0, 1.0).unwrap();
        assert!(matches!(
            sort_pairs_by_deviation(d(89.0, 0.0), d(0.0, 0.0), &s),
            Err(SteerError::Domain(_))
        ));
    }

    /// A 3×3 neighborhood per link (Δ = δ = 1) with every INR at 10 dB
    /// except a unique 4 dB minimum at tx offset (+1, 0), rx offset (0, +1).
    fn fixture_oracle() -> GridOracle {
        let offsets = neighborhood_offsets(&NeighborhoodSpec::square(1.0, 1.0).unwrap());
        let mut grid = InrGrid::new(Some((1.0, 1.0))).unwrap();
        for &(a, b) in &offsets {
            for &(c, e) in &offsets {
                let inr_db = if (a, b, c, e) == (1.0, 0.0, 0.0, 1.0) { 4.0 } else { 10.0 };
                grid.insert(GridEntry { tx: d(a, b), rx: d(c, e), inr_db }).unwrap();
            }
        }
        GridOracle::new(grid)
    }

    #[test]
    fn unreachable_target_returns_the_unique_minimum() {
        let o = fixture_oracle();
        let cfg = SteerConfig::new(NeighborhoodSpec::square(1.0, 1.0).unwrap(), 0.0).unwrap();
        for sol in [
            solve_steer_exhaustive(&o, d(0.0, 0.0), d(0.0, 0.0), &cfg).unwrap(),
            solve_steer_incremental(&o, d(0.0, 0.0), d(0.0, 0.0), &cfg).unwrap(),
        ] {
            assert_eq!((sol.d_tx_star, sol.d_rx_star), (d(1.0, 0.0), d(0.0, 1.0)));
            assert_eq!(sol.inr_achieved_db, 4.0);
            assert_eq!(sol.deviation, (1.0, 1.0));
            assert!(!sol.target_met);
            assert_eq!(sol.measurements_used, 81);
        }
    }

    #[test]
    fn nominal_pair_meeting_the_target_is_kept() {
        let o = fixture_oracle();
        let cfg = SteerConfig::new(NeighborhoodSpec::square(1.0, 1.0).unwrap(), 10.0).unwrap();
        let inc = solve_steer_incremental(&o, d(0.0, 0.0), d(0.0, 0.0), &cfg).unwrap();
        assert_eq!((inc.d_tx_star, inc.d_rx_star), (d(0.0, 0.0), d(0.0, 0.0)));
        assert_eq!(inc.measurements_used, 1);
        assert!(inc.target_met);
        let exh = solve_steer_exhaustive(&o, d(0.0, 0.0), d(0.0, 0.0), &cfg).unwrap();
        assert_eq!((exh.d_tx_star, exh.d_rx_star), (inc.d_tx_star, inc.d_rx_star));
        assert_eq!(exh.measurements_used, 81);
    }

    #[test]
    fn minus_infinity_target_finds_the_global_minimum() {
        let o = fixture_oracle();
        let cfg = SteerConfig::new(NeighborhoodSpec::square(1.0, 1.0).unwrap(), f64::NEG_INFINITY).unwrap();
        let sol = solve_steer_exhaustive(&o, d(0.0, 0.0), d(0.0, 0.0), &cfg).unwrap();
        assert_eq!(sol.inr_achieved_db, 4.0);
    }

    #[test]
    fn fixed_link_only_steers_the_other() {
        let o = fixture_oracle();
        let cfg = SteerConfig::per_link(
            NeighborhoodSpec::fixed(),
            NeighborhoodSpec::square(1.0, 1.0).unwrap(),
            f64::NEG_INFINITY,
        )
        .unwrap();
        let sol = solve_steer_incremental(&o, d(0.0, 0.0), d(0.0, 0.0), &cfg).unwrap();
        assert_eq!(sol.d_tx_star, d(0.0, 0.0));
        assert_eq!(sol.measurements_used, 9);
        assert_eq!(sol.inr_achieved_db, 10.0);
    }

    #[test]
    fn missing_measurement_propagates() {
        let o = fixture_oracle();
        let cfg = SteerConfig::new(NeighborhoodSpec::square(2.0, 1.0).unwrap(), 0.0).unwrap();
        assert!(matches!(
            solve_steer_incremental(&o, d(0.0, 0.0), d(0.0, 0.0), &cfg),
            Err(SteerError::MeasurementUnavailable { .. })
        ));
    }

    #[test]
    fn chebyshev_metric_changes_the_order() {
        let s = NeighborhoodSpec::square(1.0, 1.0).unwrap();
        let cfg = SteerConfig::new(s, 0.0).unwrap().with_metric(DeviationMetric::Chebyshev);
        let pairs = sorted_candidates(d(0.0, 0.0), d(0.0, 0.0), &cfg).unwrap();
        assert_eq!(pairs[0].key, 0.0);
        assert!(pairs[1..].iter().all(|p| p.key == 1.0));
    }
}
