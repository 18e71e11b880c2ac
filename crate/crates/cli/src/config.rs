//! Run configuration: one TOML document with a section per component.
//! Angles are in degrees, powers and INRs in dB. Every field has a default,
//! so an empty file is a valid configuration.

use std::path::{Path, PathBuf};

use anyhow::{anyhow, bail, Context, Result};
use serde::Deserialize;
use steer_core::array::DEFAULT_PRESET;
use steer_core::oracle::MeasurementModel;
use steer_core::sim::DuplexMode;
use steer_core::{
    CodebookSpec, DeviationMetric, LinkBudget, NeighborhoodSpec, Platform, Scenario, SiModel, SteerConfig,
};

#[derive(Clone, Debug, Default, Deserialize, PartialEq)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub codebook: CodebookSection,
    pub array: ArraySection,
    pub oracle: OracleSection,
    pub steer: SteerSection,
    pub scenario: ScenarioSection,
    pub sweep: SweepSection,
}

#[derive(Clone, Debug, Deserialize, PartialEq)]
#[serde(default, deny_unknown_fields)]
pub struct CodebookSection {
    pub preset: String,
    /// Explicit grid; overrides the preset when all three are given.
    pub azimuth_range_deg: Option<[f64; 2]>,
    pub elevation_range_deg: Option<[f64; 2]>,
    pub spacing_deg: Option<f64>,
}

impl Default for CodebookSection {
    fn default() -> Self {
        Self {
            preset: DEFAULT_PRESET.to_owned(),
            azimuth_range_deg: None,
            elevation_range_deg: None,
            spacing_deg: None,
        }
    }
}

#[derive(Clone, Debug, Deserialize, PartialEq)]
#[serde(default, deny_unknown_fields)]
pub struct ArraySection {
    pub rows: usize,
    pub cols: usize,
    pub spacing_wavelengths: f64,
    pub carrier_ghz: f64,
    pub panel_separation_m: f64,
    pub normal_separation_deg: f64,
}

impl Default for ArraySection {
    fn default() -> Self {
        Self {
            rows: 16,
            cols: 16,
            spacing_wavelengths: 0.5,
            carrier_ghz: 28.0,
            panel_separation_m: 0.3,
            normal_separation_deg: 120.0,
        }
    }
}

#[derive(Clone, Debug, Deserialize, PartialEq)]
#[serde(default, deny_unknown_fields)]
pub struct OracleSection {
    pub si_model: String,
    pub si_seed: u64,
    /// Median INR over all codebook pairs after calibration.
    pub calibrate_median_inr_db: f64,
    /// Fixed reference INR; skips calibration when set.
    pub si_ref_inr_db: Option<f64>,
    pub noise_sigma_db: f64,
    pub noise_seed: u64,
    pub clip_ceiling_db: Option<f64>,
    /// Measurement grid file to use instead of the synthetic channel.
    pub grid: Option<PathBuf>,
}

impl Default for OracleSection {
    fn default() -> Self {
        Self {
            si_model: "spherical-wave".to_owned(),
            si_seed: 0,
            calibrate_median_inr_db: 20.0,
            si_ref_inr_db: None,
            noise_sigma_db: 0.0,
            noise_seed: 0,
            clip_ceiling_db: None,
            grid: None,
        }
    }
}

#[derive(Clone, Debug, Deserialize, PartialEq)]
#[serde(default, deny_unknown_fields)]
pub struct SteerSection {
    pub delta_theta_deg: f64,
    pub delta_phi_deg: f64,
    pub res_theta_deg: f64,
    pub res_phi_deg: f64,
    pub inr_target_db: f64,
    /// "squared-sum" or "chebyshev".
    pub metric: String,
}

impl Default for SteerSection {
    fn default() -> Self {
        Self {
            delta_theta_deg: 2.0,
            delta_phi_deg: 2.0,
            res_theta_deg: 1.0,
            res_phi_deg: 1.0,
            inr_target_db: -7.0,
            metric: "squared-sum".to_owned(),
        }
    }
}

#[derive(Clone, Debug, Deserialize, PartialEq)]
#[serde(default, deny_unknown_fields)]
pub struct ScenarioSection {
    pub n_drops: usize,
    pub seed: u64,
    pub mode: String,
    pub drop_azimuth_deg: [f64; 2],
    pub drop_elevation_deg: [f64; 2],
    pub snrbar_tx_db: f64,
    pub snrbar_rx_db: f64,
    pub inr_tx_db: f64,
}

impl Default for ScenarioSection {
    fn default() -> Self {
        Self {
            n_drops: 10_000,
            seed: 1,
            mode: "DL-DL".to_owned(),
            drop_azimuth_deg: [-60.0, 60.0],
            drop_elevation_deg: [-28.0, 28.0],
            snrbar_tx_db: 10.0,
            snrbar_rx_db: 10.0,
            inr_tx_db: 0.0,
        }
    }
}

#[derive(Clone, Debug, Deserialize, PartialEq)]
#[serde(default, deny_unknown_fields)]
pub struct SweepSection {
    pub targets_db: Vec<f64>,
    /// `[Δθ, Δφ, δθ, δφ]` per entry.
    pub neighborhoods: Vec<[f64; 4]>,
    pub snrbar_tx_db: Vec<f64>,
    pub snrbar_rx_db: Vec<f64>,
    /// Codebook beam indices whose neighborhoods the `grid` command
    /// measures; empty means every beam.
    pub grid_tx_beams: Vec<usize>,
    pub grid_rx_beams: Vec<usize>,
}

impl Default for SweepSection {
    fn default() -> Self {
        let range = |lo: i32, hi: i32, step: i32| (lo..=hi).step_by(step as usize).map(f64::from).collect::<Vec<_>>();
        Self {
            targets_db: range(-20, 20, 1),
            neighborhoods: vec![
                [0.0, 0.0, 1.0, 1.0],
                [1.0, 1.0, 1.0, 1.0],
                [2.0, 2.0, 1.0, 1.0],
                [3.0, 3.0, 1.0, 1.0],
            ],
            snrbar_tx_db: range(-10, 30, 2),
            snrbar_rx_db: range(-10, 30, 2),
            grid_tx_beams: Vec::new(),
            grid_rx_beams: Vec::new(),
        }
    }
}

impl RunConfig {
    /// Parse `text`, then apply `key=value` overrides (`section.field`).
    pub fn parse(text: &str, origin: &Path, overrides: &[String]) -> Result<Self> {
        let base: RunConfig =
            toml::from_str(text).map_err(|e| anyhow!("invalid config {}: {e}", origin.display()))?;
        if overrides.is_empty() {
            return Ok(base);
        }
        let mut table: toml::Table =
            toml::from_str(text).map_err(|e| anyhow!("invalid config {}: {e}", origin.display()))?;
        for item in overrides {
            apply_override(&mut table, item)?;
        }
        toml::Value::Table(table)
            .try_into()
            .map_err(|e| anyhow!("invalid --set override: {e}"))
    }

    pub fn load(path: Option<&Path>, overrides: &[String]) -> Result<Self> {
        match path {
            Some(p) => {
                let text = std::fs::read_to_string(p).with_context(|| format!("reading config {}", p.display()))?;
                Self::parse(&text, p, overrides)
            }
            None => Self::parse("", Path::new("<defaults>"), overrides),
        }
    }

    pub fn platform(&self) -> Result<Platform> {
        let a = &self.array;
        Platform::sectorized(
            a.rows,
            a.cols,
            a.spacing_wavelengths,
            a.carrier_ghz,
            a.panel_separation_m,
            a.normal_separation_deg,
        )
        .context("array section")
    }

    pub fn codebook_spec(&self) -> Result<CodebookSpec> {
        let c = &self.codebook;
        match (c.azimuth_range_deg, c.elevation_range_deg, c.spacing_deg) {
            (Some(az), Some(el), Some(spacing)) => Ok(CodebookSpec {
                azimuth_range_deg: (az[0], az[1]),
                elevation_range_deg: (el[0], el[1]),
                spacing_deg: spacing,
            }),
            (None, None, None) => CodebookSpec::from_preset(&c.preset).context("codebook.preset"),
            _ => bail!("codebook: azimuth_range_deg, elevation_range_deg and spacing_deg must be given together"),
        }
    }

    pub fn si_model(&self) -> Result<SiModel> {
        self.oracle.si_model.parse().context("oracle.si_model")
    }

    pub fn measurement_model(&self) -> MeasurementModel {
        MeasurementModel {
            noise_sigma_db: self.oracle.noise_sigma_db,
            noise_seed: self.oracle.noise_seed,
            clip_ceiling_db: self.oracle.clip_ceiling_db,
        }
    }

    pub fn steer_config(&self) -> Result<SteerConfig> {
        let s = &self.steer;
        let spec = NeighborhoodSpec::new(s.delta_theta_deg, s.delta_phi_deg, s.res_theta_deg, s.res_phi_deg)
            .context("steer section")?;
        let metric = match s.metric.as_str() {
            "squared-sum" => DeviationMetric::SquaredSum,
            "chebyshev" => DeviationMetric::Chebyshev,
            other => bail!("steer.metric: unknown metric '{other}' (expected squared-sum or chebyshev)"),
        };
        Ok(SteerConfig::new(spec, s.inr_target_db).context("steer.inr_target_db")?.with_metric(metric))
    }

    pub fn neighborhoods(&self) -> Result<Vec<NeighborhoodSpec>> {
        self.sweep
            .neighborhoods
            .iter()
            .enumerate()
            .map(|(k, n)| NeighborhoodSpec::new(n[0], n[1], n[2], n[3]).with_context(|| format!("sweep.neighborhoods[{k}]")))
            .collect()
    }

    pub fn mode(&self) -> Result<DuplexMode> {
        self.scenario.mode.parse().context("scenario.mode")
    }

    /// Scenario with the given reference INR folded into the budget.
    pub fn scenario(&self, si_ref_inr_db: f64) -> Result<Scenario> {
        let s = &self.scenario;
        let budget = LinkBudget {
            snrbar_tx_db: s.snrbar_tx_db,
            snrbar_rx_db: s.snrbar_rx_db,
            inr_tx_db: s.inr_tx_db,
            si_ref_inr_db,
        };
        budget.validate().context("scenario section")?;
        Ok(Scenario {
            drop_region_az: (s.drop_azimuth_deg[0], s.drop_azimuth_deg[1]),
            drop_region_el: (s.drop_elevation_deg[0], s.drop_elevation_deg[1]),
            budget,
            steer_config: self.steer_config()?,
            n_drops: s.n_drops,
            seed: s.seed,
            mode: self.mode()?,
        })
    }
}

/// Set `section.field` (or deeper) in `table` to the TOML value `raw`;
/// values that are not valid TOML are taken as strings.
fn apply_override(table: &mut toml::Table, item: &str) -> Result<()> {
    let (key, raw) = item
        .split_once('=')
        .ok_or_else(|| anyhow!("--set expects KEY=VALUE, got '{item}'"))?;
    let key = key.trim();
    let raw = raw.trim();
    let value = match toml::from_str::<toml::Table>(&format!("v = {raw}")) {
        Ok(mut t) => t.remove("v").expect("parsed key"),
        Err(_) => toml::Value::String(raw.to_owned()),
    };
    let parts: Vec<&str> = key.split('.').collect();
    if parts.iter().any(|p| p.is_empty()) {
        bail!("--set: malformed key '{key}'");
    }
    let (last, path) = parts.split_last().expect("non-empty");
    let mut cur = table;
    for p in path {
        cur = cur
            .entry(p.to_string())
            .or_insert_with(|| toml::Value::Table(toml::Table::new()))
            .as_table_mut()
            .ok_or_else(|| anyhow!("--set {key}: '{p}' is not a section"))?;
    }
    cur.insert(last.to_string(), value);
    Ok(())
}
