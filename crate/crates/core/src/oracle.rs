//! Self-interference oracles: "what receive INR does beam pair
//! (tx direction, rx direction) incur?"
//!
//! Two backends exist. [`SyntheticOracle`] evaluates a synthesized
//! self-interference channel with conjugate beams on demand and caches the
//! result. [`GridOracle`] answers from an [`InrGrid`], typically imported
//! from a measurement file. INRs are handled in dB.

use std::collections::{BTreeMap, HashMap};
use std::fs::File;
use std::io::Write;
use std::path::Path;
use std::sync::atomic::{AtomicU64, Ordering};
use std::sync::Arc;

use dashmap::DashMap;
use num_complex::Complex64;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use crate::array::{conjugate_beam, BeamWeights, Codebook, SteeringDirection};
use crate::channels::{Platform, SiChannel};
use crate::error::{Result, SteerError};
use crate::linkmetrics::{coupling_from_product, db_to_linear, linear_to_db};
use crate::textio::{fmt_num, parse_error, parse_f64, read_csv, write_metadata};

pub const GRID_HEADER: &str = "theta_tx_deg,phi_tx_deg,theta_rx_deg,phi_rx_deg,inr_db";

/// Directions quantized to 1e-6 degrees so lattice-generated values that
/// differ by rounding noise share a key.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct DirectionKey(i64, i64);

impl From<SteeringDirection> for DirectionKey {
    fn from(d: SteeringDirection) -> Self {
        let q = |x: f64| (x * 1e6).round() as i64;
        DirectionKey(q(d.azimuth_deg()), q(d.elevation_deg()))
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct PairKey(DirectionKey, DirectionKey);

impl PairKey {
    pub fn new(tx: SteeringDirection, rx: SteeringDirection) -> Self {
        PairKey(tx.into(), rx.into())
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct OracleStats {
    pub queries_total: u64,
    pub queries_served_from_cache: u64,
}

#[derive(Debug, Default)]
struct StatCounters {
    total: AtomicU64,
    cached: AtomicU64,
}

impl StatCounters {
    fn snapshot(&self) -> OracleStats {
        OracleStats {
            queries_total: self.total.load(Ordering::Relaxed),
            queries_served_from_cache: self.cached.load(Ordering::Relaxed),
        }
    }
}

/// A source of receive-link INR measurements.
pub trait InrOracle: Send + Sync {
    /// Receive INR in dB for transmitting toward `tx` while receiving
    /// toward `rx`. Repeated queries return identical values.
    fn query_inr_db(&self, tx: SteeringDirection, rx: SteeringDirection) -> Result<f64>;

    fn query_inr(&self, tx: SteeringDirection, rx: SteeringDirection) -> Result<f64> {
        Ok(db_to_linear(self.query_inr_db(tx, rx)?))
    }

    fn stats(&self) -> OracleStats;

    /// Reference INR that puts the median INR over all codebook beam pairs
    /// at `target_median_inr_db`.
    fn calibrate_reference(
        &self,
        _codebook_tx: &Codebook,
        _codebook_rx: &Codebook,
        _target_median_inr_db: f64,
    ) -> Result<f64> {
        Err(SteerError::Unsupported(
            "calibration needs a synthetic self-interference channel".into(),
        ))
    }
}

impl<T: InrOracle + ?Sized> InrOracle for &T {
    fn query_inr_db(&self, tx: SteeringDirection, rx: SteeringDirection) -> Result<f64> {
        (**self).query_inr_db(tx, rx)
    }

    fn stats(&self) -> OracleStats {
        (**self).stats()
    }

    fn calibrate_reference(&self, a: &Codebook, b: &Codebook, t: f64) -> Result<f64> {
        (**self).calibrate_reference(a, b, t)
    }
}

impl<T: InrOracle + ?Sized> InrOracle for Arc<T> {
    fn query_inr_db(&self, tx: SteeringDirection, rx: SteeringDirection) -> Result<f64> {
        (**self).query_inr_db(tx, rx)
    }

    fn stats(&self) -> OracleStats {
        (**self).stats()
    }

    fn calibrate_reference(&self, a: &Codebook, b: &Codebook, t: f64) -> Result<f64> {
        (**self).calibrate_reference(a, b, t)
    }
}

/// Optional imperfections layered on synthetic measurements.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct MeasurementModel {
    /// Standard deviation of an additive Gaussian error in dB. Zero disables.
    pub noise_sigma_db: f64,
    /// Seed of the per-pair error draws.
    pub noise_seed: u64,
    /// Receiver saturation: reported INRs never exceed this level.
    pub clip_ceiling_db: Option<f64>,
}

/// Oracle backed by a synthesized self-interference channel.
pub struct SyntheticOracle {
    platform: Platform,
    si: SiChannel,
    si_ref_inr_db: f64,
    measurement: MeasurementModel,
    /// `10 log10(|w* H f|² / Na²)` per beam pair.
    coupling_db: DashMap<PairKey, f64>,
    /// `H f` per transmit direction.
    tx_products: DashMap<DirectionKey, Arc<Vec<Complex64>>>,
    rx_beams: DashMap<DirectionKey, Arc<BeamWeights>>,
    counters: StatCounters,
}

impl SyntheticOracle {
    pub fn new(platform: Platform, si: SiChannel, si_ref_inr_db: f64) -> Result<Self> {
        if si.rows() != platform.rx.num_elements() || si.cols() != platform.tx.num_elements() {
            return Err(SteerError::domain(format!(
                "self-interference channel is {}x{}, panels have {} rx and {} tx elements",
                si.rows(),
                si.cols(),
                platform.rx.num_elements(),
                platform.tx.num_elements()
            )));
        }
        if !si_ref_inr_db.is_finite() {
            return Err(SteerError::config("reference INR must be finite"));
        }
        Ok(Self {
            platform,
            si,
            si_ref_inr_db,
            measurement: MeasurementModel::default(),
            coupling_db: DashMap::new(),
            tx_products: DashMap::new(),
            rx_beams: DashMap::new(),
            counters: StatCounters::default(),
        })
    }

    pub fn with_measurement_model(mut self, model: MeasurementModel) -> Result<Self> {
        if !(model.noise_sigma_db >= 0.0 && model.noise_sigma_db.is_finite()) {
            return Err(SteerError::config(format!(
                "measurement noise sigma must be non-negative, got {}",
                model.noise_sigma_db
            )));
        }
        self.measurement = model;
        Ok(self)
    }

    pub fn si_ref_inr_db(&self) -> f64 {
        self.si_ref_inr_db
    }

    /// Change the reference level. Cached couplings stay valid.
    pub fn set_si_ref_inr_db(&mut self, db: f64) -> Result<()> {
        if !db.is_finite() {
            return Err(SteerError::config("reference INR must be finite"));
        }
        self.si_ref_inr_db = db;
        Ok(())
    }

    pub fn platform(&self) -> &Platform {
        &self.platform
    }

    pub fn channel(&self) -> &SiChannel {
        &self.si
    }

    /// Normalized coupling in dB, computed once per pair.
    fn coupling(&self, tx: SteeringDirection, rx: SteeringDirection) -> Result<(f64, bool)> {
        let key = PairKey::new(tx, rx);
        if let Some(v) = self.coupling_db.get(&key) {
            return Ok((*v, true));
        }
        let hf = match self.tx_products.get(&key.0) {
            Some(v) => Arc::clone(&v),
            None => {
                let f = conjugate_beam(&self.platform.tx, tx);
                let hf = Arc::new(self.si.apply(&f)?);
                Arc::clone(self.tx_products.entry(key.0).or_insert(hf).value())
            }
        };
        let w = match self.rx_beams.get(&key.1) {
            Some(v) => Arc::clone(&v),
            None => {
                let w = Arc::new(conjugate_beam(&self.platform.rx, rx));
                Arc::clone(self.rx_beams.entry(key.1).or_insert(w).value())
            }
        };
        let c = linear_to_db(coupling_from_product(&hf, &w, self.si.cols()));
        Ok((*self.coupling_db.entry(key).or_insert(c).value(), false))
    }

    fn perturb(&self, key: PairKey, inr_db: f64) -> f64 {
        let mut v = inr_db;
        if self.measurement.noise_sigma_db > 0.0 {
            let mut rng = ChaCha8Rng::seed_from_u64(pair_seed(self.measurement.noise_seed, key));
            let n = Normal::new(0.0, self.measurement.noise_sigma_db).expect("validated sigma");
            v += n.sample(&mut rng);
        }
        if let Some(ceiling) = self.measurement.clip_ceiling_db {
            v = v.min(ceiling);
        }
        v
    }
}

/// SplitMix64 over the seed and the quantized key.
fn pair_seed(seed: u64, key: PairKey) -> u64 {
    let mut z = seed;
    for part in [key.0 .0, key.0 .1, key.1 .0, key.1 .1] {
        z = z.wrapping_add(0x9E37_79B9_7F4A_7C15).wrapping_add(part as u64);
        z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
        z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
        z ^= z >> 31;
    }
    z
}

impl InrOracle for SyntheticOracle {
    fn query_inr_db(&self, tx: SteeringDirection, rx: SteeringDirection) -> Result<f64> {
        let (c, hit) = self.coupling(tx, rx)?;
        self.counters.total.fetch_add(1, Ordering::Relaxed);
        if hit {
            self.counters.cached.fetch_add(1, Ordering::Relaxed);
        }
        Ok(self.perturb(PairKey::new(tx, rx), self.si_ref_inr_db + c))
    }

    fn stats(&self) -> OracleStats {
        self.counters.snapshot()
    }

    /// Closed form: `target − median(coupling_db)` over all `(i, j)`.
    /// Measurement noise and clipping are not part of the calibration.
    fn calibrate_reference(
        &self,
        codebook_tx: &Codebook,
        codebook_rx: &Codebook,
        target_median_inr_db: f64,
    ) -> Result<f64> {
        if !target_median_inr_db.is_finite() {
            return Err(SteerError::config("calibration target must be finite"));
        }
        if codebook_tx.is_empty() || codebook_rx.is_empty() {
            return Err(SteerError::config("calibration needs non-empty codebooks"));
        }
        let mut couplings = Vec::with_capacity(codebook_tx.len() * codebook_rx.len());
        for &tx in codebook_tx.directions() {
            for &rx in codebook_rx.directions() {
                couplings.push(self.coupling(tx, rx)?.0);
            }
        }
        Ok(target_median_inr_db - median(&mut couplings))
    }
}

/// Median; the mean of the two middle values for even lengths.
pub(crate) fn median(values: &mut [f64]) -> f64 {
    values.sort_by(f64::total_cmp);
    let n = values.len();
    if n % 2 == 1 {
        values[n / 2]
    } else {
        0.5 * (values[n / 2 - 1] + values[n / 2])
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct GridEntry {
    pub tx: SteeringDirection,
    pub rx: SteeringDirection,
    pub inr_db: f64,
}

/// A table of measured INRs keyed by beam pair.
#[derive(Clone, Debug, Default)]
pub struct InrGrid {
    entries: Vec<GridEntry>,
    index: HashMap<PairKey, usize>,
    resolution_deg: Option<(f64, f64)>,
    metadata: BTreeMap<String, String>,
}

fn on_lattice(x: f64, step: f64) -> bool {
    let k = x / step;
    (k - k.round()).abs() < 1e-6
}

impl InrGrid {
    pub fn new(resolution_deg: Option<(f64, f64)>) -> Result<Self> {
        if let Some((a, b)) = resolution_deg {
            if !(a > 0.0 && b > 0.0 && a.is_finite() && b.is_finite()) {
                return Err(SteerError::config(format!("grid resolution must be positive, got ({a}, {b})")));
            }
        }
        Ok(Self {
            resolution_deg,
            ..Self::default()
        })
    }

    pub fn insert(&mut self, entry: GridEntry) -> Result<()> {
        if !entry.inr_db.is_finite() {
            return Err(SteerError::domain(format!(
                "grid INR must be finite, got {} for tx {} / rx {}",
                entry.inr_db, entry.tx, entry.rx
            )));
        }
        if let Some((d_az, d_el)) = self.resolution_deg {
            for d in [entry.tx, entry.rx] {
                if !on_lattice(d.azimuth_deg(), d_az) || !on_lattice(d.elevation_deg(), d_el) {
                    return Err(SteerError::domain(format!(
                        "direction {d} is off the ({d_az}, {d_el}) deg lattice"
                    )));
                }
            }
        }
        let key = PairKey::new(entry.tx, entry.rx);
        if self.index.contains_key(&key) {
            return Err(SteerError::domain(format!(
                "duplicate grid entry for tx {} / rx {}",
                entry.tx, entry.rx
            )));
        }
        self.index.insert(key, self.entries.len());
        self.entries.push(entry);
        Ok(())
    }

    pub fn get(&self, tx: SteeringDirection, rx: SteeringDirection) -> Option<f64> {
        self.index
            .get(&PairKey::new(tx, rx))
            .map(|&k| self.entries[k].inr_db)
    }

    pub fn entries(&self) -> &[GridEntry] {
        &self.entries
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn resolution_deg(&self) -> Option<(f64, f64)> {
        self.resolution_deg
    }

    pub fn metadata(&self) -> &BTreeMap<String, String> {
        &self.metadata
    }

    pub fn metadata_mut(&mut self) -> &mut BTreeMap<String, String> {
        &mut self.metadata
    }

    /// Query `oracle` for every pair, in order. Repeated pairs are kept once.
    pub fn measure(
        oracle: &dyn InrOracle,
        pairs: &[(SteeringDirection, SteeringDirection)],
        resolution_deg: Option<(f64, f64)>,
    ) -> Result<Self> {
        let mut grid = Self::new(resolution_deg)?;
        for &(tx, rx) in pairs {
            if grid.get(tx, rx).is_some() {
                continue;
            }
            let inr_db = oracle.query_inr_db(tx, rx)?;
            grid.insert(GridEntry { tx, rx, inr_db })?;
        }
        Ok(grid)
    }

    pub fn to_text(&self) -> String {
        let mut meta = self.metadata.clone();
        if let Some((a, b)) = self.resolution_deg {
            meta.insert("resolution_deg".into(), format!("{} {}", fmt_num(a), fmt_num(b)));
        }
        let mut out = String::new();
        write_metadata(&mut out, &meta);
        out.push_str(GRID_HEADER);
        out.push('\n');
        for e in &self.entries {
            out.push_str(&format!(
                "{},{},{},{},{}\n",
                fmt_num(e.tx.azimuth_deg()),
                fmt_num(e.tx.elevation_deg()),
                fmt_num(e.rx.azimuth_deg()),
                fmt_num(e.rx.elevation_deg()),
                fmt_num(e.inr_db)
            ));
        }
        out
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        let mut f = File::create(path)?;
        f.write_all(self.to_text().as_bytes())?;
        Ok(())
    }

    pub fn read(path: &Path) -> Result<Self> {
        Self::parse(path, File::open(path)?)
    }

    pub fn parse(path: &Path, reader: impl std::io::Read) -> Result<Self> {
        let body = read_csv(path, reader, GRID_HEADER)?;
        let mut metadata = body.metadata;
        let resolution = match metadata.remove("resolution_deg") {
            None => None,
            Some(v) => {
                let parts: Vec<&str> = v.split_whitespace().collect();
                let parsed: Option<Vec<f64>> = parts.iter().map(|p| p.parse().ok()).collect();
                match parsed.as_deref() {
                    Some([a, b]) => Some((*a, *b)),
                    _ => return Err(parse_error(path, 1, format!("bad resolution_deg metadata '{v}'"))),
                }
            }
        };
        let mut grid = Self::new(resolution).map_err(|e| parse_error(path, 1, e.to_string()))?;
        grid.metadata = metadata;
        let names: Vec<&str> = GRID_HEADER.split(',').collect();
        for (line, fields) in body.rows {
            let mut v = [0.0; 5];
            for k in 0..5 {
                v[k] = parse_f64(path, line, &fields[k], names[k])?;
            }
            let dir = |az, el| SteeringDirection::new(az, el).map_err(|e| parse_error(path, line, e.to_string()));
            let entry = GridEntry {
                tx: dir(v[0], v[1])?,
                rx: dir(v[2], v[3])?,
                inr_db: v[4],
            };
            grid.insert(entry).map_err(|e| parse_error(path, line, e.to_string()))?;
        }
        Ok(grid)
    }
}

/// Oracle answering from a fixed grid; missing pairs are an error.
#[derive(Debug)]
pub struct GridOracle {
    grid: InrGrid,
    counters: StatCounters,
}

impl GridOracle {
    pub fn new(grid: InrGrid) -> Self {
        Self {
            grid,
            counters: StatCounters::default(),
        }
    }

    pub fn grid(&self) -> &InrGrid {
        &self.grid
    }
}

impl InrOracle for GridOracle {
    fn query_inr_db(&self, tx: SteeringDirection, rx: SteeringDirection) -> Result<f64> {
        self.counters.total.fetch_add(1, Ordering::Relaxed);
        self.grid
            .get(tx, rx)
            .ok_or(SteerError::MeasurementUnavailable { tx, rx })
    }

    fn stats(&self) -> OracleStats {
        self.counters.snapshot()
    }
}

/// Measure `pairs` with `oracle` and write them as an INR grid file.
pub fn export_grid(
    oracle: &dyn InrOracle,
    pairs: &[(SteeringDirection, SteeringDirection)],
    resolution_deg: Option<(f64, f64)>,
    path: &Path,
) -> Result<InrGrid> {
    let grid = InrGrid::measure(oracle, pairs, resolution_deg)?;
    grid.write(path)?;
    Ok(grid)
}

/// Load an INR grid file as a file-backed oracle.
pub fn import_grid(path: &Path) -> Result<GridOracle> {
    Ok(GridOracle::new(InrGrid::read(path)?))
}
