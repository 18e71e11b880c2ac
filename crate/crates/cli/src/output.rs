//! CSV layouts of the summary, sweep and CDF outputs.

use std::collections::BTreeMap;
use std::io::{BufRead, BufReader};
use std::path::Path;

use anyhow::{bail, Context, Result};
use steer_core::sim::{self, DropResult, SnrGrid, Summary};
use steer_core::{fmt_num, NeighborhoodSpec, SteerConfig, SteeringDirection, Strategy};

fn meta_lines(meta: &BTreeMap<String, String>) -> String {
    meta.iter().map(|(k, v)| format!("# {k}={v}\n")).collect()
}

fn spec_string(s: &NeighborhoodSpec) -> String {
    [s.delta_theta_deg(), s.delta_phi_deg(), s.res_theta_deg(), s.res_phi_deg()]
        .map(fmt_num)
        .join(" ")
}

pub fn spec_metadata(spec: &NeighborhoodSpec) -> BTreeMap<String, String> {
    BTreeMap::from([("neighborhood".to_owned(), spec_string(spec))])
}

/// Settings that determine a beam selection.
pub fn steer_metadata(cfg: &SteerConfig) -> BTreeMap<String, String> {
    BTreeMap::from([
        ("steer_tx".to_owned(), spec_string(&cfg.tx_spec)),
        ("steer_rx".to_owned(), spec_string(&cfg.rx_spec)),
        ("inr_target_db".to_owned(), fmt_num(cfg.inr_target_db)),
        ("metric".to_owned(), format!("{:?}", cfg.metric)),
    ])
}

/// A table computed under other selection settings would silently give
/// different selections.
pub fn check_lookup_matches(file_meta: &BTreeMap<String, String>, cfg: &SteerConfig) -> Result<()> {
    for (k, want) in steer_metadata(cfg) {
        if let Some(have) = file_meta.get(&k) {
            if *have != want {
                bail!("was computed with {k}={have}, but the configuration has {k}={want}");
            }
        }
    }
    Ok(())
}

pub fn read_metadata(path: &Path) -> Result<BTreeMap<String, String>> {
    let file = std::fs::File::open(path).with_context(|| format!("opening {}", path.display()))?;
    let mut meta = BTreeMap::new();
    for line in BufReader::new(file).lines() {
        let line = line?;
        let Some(comment) = line.strip_prefix('#') else { break };
        if let Some((k, v)) = comment.trim().split_once('=') {
            meta.insert(k.trim().to_owned(), v.trim().to_owned());
        }
    }
    Ok(meta)
}

fn kappa_columns() -> String {
    Strategy::ALL.iter().map(|s| format!("kappa_{}", s.tag())).collect::<Vec<_>>().join(",")
}

pub fn summary_text(summary: &Summary, meta: &BTreeMap<String, String>) -> String {
    let mut m = meta.clone();
    m.insert("median_inr_nom_db".into(), fmt_num(summary.median_inr_nom_db));
    m.insert("median_inr_steer_db".into(), fmt_num(summary.median_inr_steer_db));
    m.insert("mean_fraction_measured".into(), fmt_num(summary.mean_fraction_measured));
    m.insert("target_met_fraction".into(), fmt_num(summary.target_met_fraction));
    let mut out = meta_lines(&m);
    out.push_str("strategy,mean_kappa,mean_r_sum\n");
    for (k, s) in Strategy::ALL.iter().enumerate() {
        out.push_str(&format!(
            "{},{},{}\n",
            s.tag(),
            fmt_num(summary.mean_kappa[k]),
            fmt_num(summary.mean_r_sum[k])
        ));
    }
    out
}

/// One row per swept value: the parameter columns, mean κ per strategy and
/// selection statistics.
pub fn sweep_text(keys: &[&str], rows: &[(Vec<String>, &Summary)], meta: &BTreeMap<String, String>) -> String {
    let mut out = meta_lines(meta);
    out.push_str(&format!(
        "{},{},mean_fraction_measured,target_met_fraction,median_inr_steer_db\n",
        keys.join(","),
        kappa_columns()
    ));
    for (params, s) in rows {
        let mut cols = params.clone();
        cols.extend(s.mean_kappa.iter().map(|&k| fmt_num(k)));
        cols.push(fmt_num(s.mean_fraction_measured));
        cols.push(fmt_num(s.target_met_fraction));
        cols.push(fmt_num(s.median_inr_steer_db));
        out.push_str(&cols.join(","));
        out.push('\n');
    }
    out
}

/// `inr_cdf_nominal{suffix}.csv` and `inr_cdf_steer{suffix}.csv`.
pub fn write_inr_cdfs(out: &Path, suffix: &str, drops: &[DropResult], meta: &BTreeMap<String, String>) -> Result<()> {
    let nominal: Vec<f64> = drops.iter().map(|d| d.inr_nom_db).collect();
    let steered: Vec<f64> = drops.iter().map(|d| d.steer.inr_achieved_db).collect();
    for (name, values) in [("nominal", nominal), ("steer", steered)] {
        let cdf = sim::empirical_cdf(&values)?;
        sim::write_text(
            &out.join(format!("inr_cdf_{name}{suffix}.csv")),
            &sim::cdf_to_text(&cdf, "inr_db", meta),
        )?;
    }
    Ok(())
}

/// Matrix files `kappa_grid_<strategy>.csv` (rows: transmit SNR, columns:
/// receive SNR) and `region_<strategy>.csv` marking cells with κ ≤ 0.5.
pub fn write_snr_grid(out: &Path, grid: &SnrGrid, meta: &BTreeMap<String, String>) -> Result<()> {
    let header = format!(
        "snrbar_tx_db,{}\n",
        grid.snrbar_rx_db
            .iter()
            .map(|&v| format!("rx_{}", fmt_num(v)))
            .collect::<Vec<_>>()
            .join(",")
    );
    for s in Strategy::ALL {
        let mut m = meta.clone();
        m.insert("strategy".into(), s.tag().into());
        m.insert("rows".into(), "snrbar_tx_db".into());
        m.insert("columns".into(), "snrbar_rx_db".into());
        let mut kappa = meta_lines(&m) + &header;
        let mut region = meta_lines(&m) + &header;
        for (a, row) in grid.kappa(s).iter().enumerate() {
            let mask = &grid.half_duplex_region(s)[a];
            let lead = fmt_num(grid.snrbar_tx_db[a]);
            kappa.push_str(&format!("{lead},{}\n", row.iter().map(|&k| fmt_num(k)).collect::<Vec<_>>().join(",")));
            region.push_str(&format!(
                "{lead},{}\n",
                mask.iter().map(|&b| if b { "1" } else { "0" }).collect::<Vec<_>>().join(",")
            ));
        }
        sim::write_text(&out.join(format!("kappa_grid_{}.csv", s.tag())), &kappa)?;
        sim::write_text(&out.join(format!("region_{}.csv", s.tag())), &region)?;
    }
    Ok(())
}

pub fn all_on_lattice<'a>(dirs: impl Iterator<Item = &'a SteeringDirection>, (d_az, d_el): (f64, f64)) -> bool {
    let on = |x: f64, step: f64| {
        let k = x / step;
        (k - k.round()).abs() < 1e-9
    };
    dirs.into_iter().all(|d| on(d.azimuth_deg(), d_az) && on(d.elevation_deg(), d_el))
}
