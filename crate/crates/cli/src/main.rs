//! `steer-sim`: run full-duplex beam selection experiments from a TOML
//! configuration and write the results as CSV files.

mod config;
mod output;

use std::collections::{BTreeMap, BTreeSet};
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use clap::{Parser, Subcommand};
use log::info;
use steer_core::oracle::InrGrid;
use steer_core::sim::{self, Selection};
use steer_core::{
    neighborhood_offsets, precompute_lookup, import_grid, InrOracle, LookupTable, SteeringDirection, SyntheticOracle,
    Testbed,
};

use crate::config::RunConfig;

const AFTER_HELP: &str = "\
Units: all angles are in degrees; SNRs, INRs and targets are in dB.
Configuration: a TOML file with sections [codebook], [array], [oracle],
[steer], [scenario] and [sweep]. Unknown keys are rejected. Any field can be
overridden with --set section.field=value (repeatable).
Logging: set STEER_SIM_LOG (e.g. info, debug) to control verbosity.";

#[derive(Debug, Parser)]
#[command(name = "steer-sim", version, about = "Full-duplex mmWave beam selection simulator", after_help = AFTER_HELP)]
struct Cli {
    #[command(subcommand)]
    command: Command,

    /// Configuration file; built-in defaults when omitted.
    #[arg(long, global = true, value_name = "PATH")]
    config: Option<PathBuf>,

    /// Output directory, created if missing.
    #[arg(long, global = true, value_name = "DIR", default_value = "out")]
    out: PathBuf,

    /// Override scenario.seed.
    #[arg(long, global = true, value_name = "N")]
    seed: Option<u64>,

    /// Worker threads; 0 uses every available core.
    #[arg(long, global = true, value_name = "N", default_value_t = 0)]
    threads: usize,

    /// Override one configuration field, e.g. --set steer.inr_target_db=-3.
    #[arg(long = "set", global = true, value_name = "KEY=VALUE")]
    set: Vec<String>,

    /// Answer INR queries from this measurement grid instead of the
    /// synthetic channel (overrides oracle.grid).
    #[arg(long, global = true, value_name = "PATH")]
    grid: Option<PathBuf>,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Run the scenario and write per-drop results, a summary and INR CDFs.
    Simulate {
        /// Take beam selections from a precomputed lookup table.
        #[arg(long, value_name = "PATH")]
        lookup: Option<PathBuf>,
    },
    /// Mean κ per strategy for each INR target in sweep.targets_db.
    SweepTarget,
    /// Mean κ and INR CDFs for each entry of sweep.neighborhoods.
    SweepNeighborhood,
    /// Mean κ over the sweep.snrbar_tx_db × sweep.snrbar_rx_db grid.
    SweepSnr,
    /// Measure the INR of every beam pair in the codebook neighborhoods.
    Grid,
    /// Solve every codebook beam pair and write the lookup table.
    Precompute,
}

fn main() {
    env_logger::Builder::from_env(env_logger::Env::new().filter_or("STEER_SIM_LOG", "warn")).init();
    if let Err(e) = run(Cli::parse()) {
        eprintln!("error: {e:#}");
        std::process::exit(1);
    }
}

/// Everything a subcommand needs besides the configuration.
struct Setup {
    testbed: Testbed,
    oracle: Box<dyn InrOracle>,
    si_ref_inr_db: f64,
    metadata: BTreeMap<String, String>,
}

fn run(cli: Cli) -> Result<()> {
    let mut cfg = RunConfig::load(cli.config.as_deref(), &cli.set)?;
    if let Some(seed) = cli.seed {
        cfg.scenario.seed = seed;
    }
    if let Some(grid) = &cli.grid {
        cfg.oracle.grid = Some(grid.clone());
    }
    rayon::ThreadPoolBuilder::new()
        .num_threads(cli.threads)
        .build_global()
        .context("starting the worker pool")?;
    std::fs::create_dir_all(&cli.out).with_context(|| format!("creating {}", cli.out.display()))?;

    let setup = build(&cfg)?;
    match &cli.command {
        Command::Simulate { lookup } => simulate(&cfg, &setup, lookup.as_deref(), &cli.out),
        Command::SweepTarget => sweep_target(&cfg, &setup, &cli.out),
        Command::SweepNeighborhood => sweep_neighborhood(&cfg, &setup, &cli.out),
        Command::SweepSnr => sweep_snr(&cfg, &setup, &cli.out),
        Command::Grid => grid(&cfg, &setup, &cli.out),
        Command::Precompute => precompute(&cfg, &setup, &cli.out),
    }
}

fn build(cfg: &RunConfig) -> Result<Setup> {
    let platform = cfg.platform()?;
    let testbed = Testbed::new(&platform, cfg.codebook_spec()?).context("codebook section")?;
    // Validate the remaining sections before any heavy computation.
    cfg.steer_config()?;
    cfg.neighborhoods()?;
    cfg.mode()?;
    let mut metadata = BTreeMap::new();
    let (oracle, si_ref_inr_db): (Box<dyn InrOracle>, f64) = match &cfg.oracle.grid {
        Some(path) => {
            let o = import_grid(path).with_context(|| format!("loading INR grid {}", path.display()))?;
            let si_ref = cfg
                .oracle
                .si_ref_inr_db
                .or_else(|| o.grid().metadata().get("si_ref_inr_db").and_then(|v| v.parse().ok()))
                .unwrap_or(0.0);
            metadata.insert("oracle".into(), format!("grid:{}", path.display()));
            info!("loaded {} grid entries from {}", o.grid().len(), path.display());
            (Box::new(o), si_ref)
        }
        None => {
            let model = cfg.si_model()?;
            let si = platform.si_channel(model, cfg.oracle.si_seed)?;
            let mut o = SyntheticOracle::new(platform.clone(), si, 0.0)?
                .with_measurement_model(cfg.measurement_model())
                .context("oracle section")?;
            let si_ref = match cfg.oracle.si_ref_inr_db {
                Some(v) => v,
                None => o
                    .calibrate_reference(&testbed.codebook_tx, &testbed.codebook_rx, cfg.oracle.calibrate_median_inr_db)
                    .context("oracle.calibrate_median_inr_db")?,
            };
            o.set_si_ref_inr_db(si_ref).context("oracle.si_ref_inr_db")?;
            metadata.insert("oracle".into(), format!("synthetic:{}", model.tag()));
            metadata.insert("si_seed".into(), cfg.oracle.si_seed.to_string());
            info!("synthetic {} oracle, reference INR {si_ref:.3} dB", model.tag());
            (Box::new(o), si_ref)
        }
    };
    metadata.insert("si_ref_inr_db".into(), steer_core::fmt_num(si_ref_inr_db));
    Ok(Setup {
        testbed,
        oracle,
        si_ref_inr_db,
        metadata,
    })
}

fn scenario_metadata(setup: &Setup, scenario: &steer_core::Scenario) -> BTreeMap<String, String> {
    let mut m = setup.metadata.clone();
    m.extend(output::steer_metadata(&scenario.steer_config));
    m.insert("seed".into(), scenario.seed.to_string());
    m.insert("n_drops".into(), scenario.n_drops.to_string());
    m.insert("mode".into(), scenario.mode.tag().into());
    m.insert("snrbar_tx_db".into(), steer_core::fmt_num(scenario.budget.snrbar_tx_db));
    m.insert("snrbar_rx_db".into(), steer_core::fmt_num(scenario.budget.snrbar_rx_db));
    m.insert("inr_tx_db".into(), steer_core::fmt_num(scenario.budget.inr_tx_db));
    m
}

fn simulate(cfg: &RunConfig, setup: &Setup, lookup: Option<&Path>, out: &Path) -> Result<()> {
    let scenario = cfg.scenario(setup.si_ref_inr_db)?;
    let mut meta = scenario_metadata(setup, &scenario);
    let table = match lookup {
        Some(path) => {
            let t = LookupTable::read(path, &setup.testbed.codebook_tx, &setup.testbed.codebook_rx)
                .with_context(|| format!("loading lookup table {}", path.display()))?;
            let file_meta = output::read_metadata(path)?;
            output::check_lookup_matches(&file_meta, &scenario.steer_config)
                .with_context(|| format!("lookup table {}", path.display()))?;
            meta.insert("selection".into(), format!("lookup:{}", path.display()));
            Some(t)
        }
        None => None,
    };
    let selection = table.as_ref().map_or(Selection::Online, Selection::Lookup);
    let drops = sim::run_scenario(&scenario, setup.oracle.as_ref(), &setup.testbed, selection)?;
    let summary = sim::summarize(&drops, &scenario.steer_config);
    info!("{} drops, mean kappa {:?}", drops.len(), summary.mean_kappa);

    sim::write_text(&out.join("results.csv"), &sim::results_to_text(&drops, scenario.mode, &meta))?;
    sim::write_text(&out.join("summary.csv"), &output::summary_text(&summary, &meta))?;
    output::write_inr_cdfs(out, "", &drops, &meta)?;
    let stats = setup.oracle.stats();
    info!(
        "oracle queries: {} total, {} from cache",
        stats.queries_total, stats.queries_served_from_cache
    );
    Ok(())
}

fn sweep_target(cfg: &RunConfig, setup: &Setup, out: &Path) -> Result<()> {
    if cfg.sweep.targets_db.is_empty() {
        bail!("sweep.targets_db is empty");
    }
    let scenario = cfg.scenario(setup.si_ref_inr_db)?;
    let points = sim::sweep_target(&scenario, setup.oracle.as_ref(), &setup.testbed, &cfg.sweep.targets_db)?;
    let meta = scenario_metadata(setup, &scenario);
    let rows: Vec<(Vec<String>, _)> = points
        .iter()
        .map(|p| (vec![steer_core::fmt_num(p.param)], &p.summary))
        .collect();
    sim::write_text(&out.join("sweep_target.csv"), &output::sweep_text(&["target_db"], &rows, &meta))?;
    Ok(())
}

fn sweep_neighborhood(cfg: &RunConfig, setup: &Setup, out: &Path) -> Result<()> {
    let specs = cfg.neighborhoods()?;
    if specs.is_empty() {
        bail!("sweep.neighborhoods is empty");
    }
    let scenario = cfg.scenario(setup.si_ref_inr_db)?;
    let points = sim::sweep_neighborhood(&scenario, setup.oracle.as_ref(), &setup.testbed, &specs)?;
    let meta = scenario_metadata(setup, &scenario);
    let rows: Vec<(Vec<String>, _)> = points
        .iter()
        .map(|p| {
            let s = p.param;
            let cols = [s.delta_theta_deg(), s.delta_phi_deg(), s.res_theta_deg(), s.res_phi_deg()]
                .map(steer_core::fmt_num)
                .to_vec();
            (cols, &p.summary)
        })
        .collect();
    let keys = ["delta_theta_deg", "delta_phi_deg", "res_theta_deg", "res_phi_deg"];
    sim::write_text(&out.join("sweep_neighborhood.csv"), &output::sweep_text(&keys, &rows, &meta))?;
    for (k, p) in points.iter().enumerate() {
        let mut m = meta.clone();
        m.extend(output::spec_metadata(&p.param));
        output::write_inr_cdfs(out, &format!("_nbhd{k}"), &p.drops, &m)?;
    }
    Ok(())
}

fn sweep_snr(cfg: &RunConfig, setup: &Setup, out: &Path) -> Result<()> {
    let (tx, rx) = (&cfg.sweep.snrbar_tx_db, &cfg.sweep.snrbar_rx_db);
    if tx.is_empty() || rx.is_empty() {
        bail!("sweep.snrbar_tx_db and sweep.snrbar_rx_db must be non-empty");
    }
    let scenario = cfg.scenario(setup.si_ref_inr_db)?;
    let grid = sim::snr_grid_sweep(&scenario, setup.oracle.as_ref(), &setup.testbed, tx, rx)?;
    let meta = scenario_metadata(setup, &scenario);
    output::write_snr_grid(out, &grid, &meta)
}

/// Directions within `spec` of any of the chosen beams, sorted and unique.
fn neighborhood_union(
    beams: &[SteeringDirection],
    spec: &steer_core::NeighborhoodSpec,
) -> Result<Vec<SteeringDirection>> {
    let mut set = BTreeSet::new();
    for &b in beams {
        for (da, de) in neighborhood_offsets(spec) {
            set.insert(b.offset(da, de)?);
        }
    }
    Ok(set.into_iter().collect())
}

fn pick_beams(codebook: &steer_core::Codebook, picks: &[usize], key: &str) -> Result<Vec<SteeringDirection>> {
    if picks.is_empty() {
        return Ok(codebook.directions().to_vec());
    }
    picks
        .iter()
        .map(|&i| {
            codebook
                .directions()
                .get(i)
                .copied()
                .with_context(|| format!("{key}: beam index {i} out of range (codebook has {})", codebook.len()))
        })
        .collect()
}

fn grid(cfg: &RunConfig, setup: &Setup, out: &Path) -> Result<()> {
    let steer = cfg.steer_config()?;
    let tx_beams = pick_beams(&setup.testbed.codebook_tx, &cfg.sweep.grid_tx_beams, "sweep.grid_tx_beams")?;
    let rx_beams = pick_beams(&setup.testbed.codebook_rx, &cfg.sweep.grid_rx_beams, "sweep.grid_rx_beams")?;
    let txs = neighborhood_union(&tx_beams, &steer.tx_spec)?;
    let rxs = neighborhood_union(&rx_beams, &steer.rx_spec)?;
    let pairs: Vec<_> = txs.iter().flat_map(|&t| rxs.iter().map(move |&r| (t, r))).collect();
    info!("measuring {} beam pairs", pairs.len());
    let resolution = (steer.tx_spec.res_theta_deg(), steer.tx_spec.res_phi_deg());
    let lattice = output::all_on_lattice(txs.iter().chain(&rxs), resolution).then_some(resolution);
    let mut grid = InrGrid::measure(setup.oracle.as_ref(), &pairs, lattice)?;
    grid.metadata_mut().extend(setup.metadata.clone());
    let path = out.join("inr_grid.csv");
    grid.write(&path)?;
    info!("wrote {} entries to {}", grid.len(), path.display());
    Ok(())
}

fn precompute(cfg: &RunConfig, setup: &Setup, out: &Path) -> Result<()> {
    let steer = cfg.steer_config()?;
    let t = &setup.testbed;
    let table = precompute_lookup(setup.oracle.as_ref(), &t.codebook_tx, &t.codebook_rx, &steer)?;
    let mut meta = setup.metadata.clone();
    meta.extend(output::steer_metadata(&steer));
    let path = out.join("lookup.csv");
    table.write(&path, &meta)?;
    let pairs = steer.pair_count() as f64;
    let fractions: Vec<f64> = table.iter().map(|(_, s)| s.measurements_used as f64 / pairs).collect();
    let cdf = sim::empirical_cdf(&fractions)?;
    sim::write_text(
        &out.join("measurement_fraction_cdf.csv"),
        &sim::cdf_to_text(&cdf, "fraction_measured", &meta),
    )?;
    info!("wrote {} entries to {}", table.len(), path.display());
    Ok(())
}
