//! Acceptance suite. Each criterion prints one PASS/FAIL line; the process
//! exits non-zero if any criterion fails.

use std::collections::BTreeSet;
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::Path;
use std::process::Command;
use std::time::{Duration, Instant};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use steer_core::array::{build_codebook, conjugate_beam};
use steer_core::linkmetrics::normalized_gain;
use steer_core::oracle::OracleStats;
use steer_core::sim::{self, Selection};
use steer_core::*;

type Check = std::result::Result<String, String>;

fn ensure(cond: bool, msg: impl FnOnce() -> String) -> std::result::Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

fn fail<E: std::fmt::Display>(e: E) -> String {
    e.to_string()
}

/// The default synthetic preset: two 16×16 panels at 28 GHz, 105-beam
/// codebooks, spherical-wave coupling calibrated to a 20 dB median.
struct Preset {
    testbed: Testbed,
    oracle: SyntheticOracle,
    budget: LinkBudget,
}

impl Preset {
    fn new() -> Self {
        let platform = Platform::default_28ghz();
        let testbed = Testbed::new(&platform, CodebookSpec::from_preset("paper-28ghz").unwrap()).unwrap();
        let si = platform.si_channel(SiModel::SphericalWave, 0).unwrap();
        let mut oracle = SyntheticOracle::new(platform, si, 0.0).unwrap();
        let si_ref = oracle
            .calibrate_reference(&testbed.codebook_tx, &testbed.codebook_rx, 20.0)
            .unwrap();
        oracle.set_si_ref_inr_db(si_ref).unwrap();
        let budget = LinkBudget {
            snrbar_tx_db: 10.0,
            snrbar_rx_db: 10.0,
            inr_tx_db: 0.0,
            si_ref_inr_db: si_ref,
        };
        Self { testbed, oracle, budget }
    }

    fn scenario(&self, n_drops: usize) -> Scenario {
        Scenario::with_defaults(self.budget, n_drops, 1).unwrap()
    }
}

struct ZeroInterference;

impl InrOracle for ZeroInterference {
    fn query_inr_db(&self, _: SteeringDirection, _: SteeringDirection) -> Result<f64> {
        Ok(f64::NEG_INFINITY)
    }

    fn stats(&self) -> OracleStats {
        OracleStats::default()
    }
}

fn random_spec(rng: &mut ChaCha8Rng) -> NeighborhoodSpec {
    loop {
        let d = [0.0, 1.0, 2.0];
        let r = [1.0, 1.5, 2.0];
        let (dt, dp) = (d[rng.random_range(0..3)], d[rng.random_range(0..3)]);
        let (rt, rp) = (r[rng.random_range(0..3)], r[rng.random_range(0..3)]);
        if let Ok(s) = NeighborhoodSpec::new(dt, dp, rt, rp) {
            return s;
        }
    }
}

fn solver_equivalence() -> Check {
    let start = Instant::now();
    let targets = [f64::NEG_INFINITY, -7.0, 0.0, 10.0];
    let small = CodebookSpec {
        azimuth_range_deg: (-40.0, 40.0),
        elevation_range_deg: (-20.0, 20.0),
        spacing_deg: 20.0,
    };
    let instances = 1000;
    let mut met = 0;
    for k in 0..instances {
        let mut rng = ChaCha8Rng::seed_from_u64(k);
        let model = if k % 2 == 0 { SiModel::Rayleigh } else { SiModel::SphericalWave };
        let platform = Platform::sectorized(
            8,
            8,
            0.5,
            28.0,
            rng.random_range(0.05..0.5),
            [90.0, 120.0, 150.0][rng.random_range(0..3)],
        )
        .map_err(fail)?;
        let si = platform.si_channel(model, rng.random()).map_err(fail)?;
        let cb_tx = build_codebook(&platform.tx, small).map_err(fail)?;
        let cb_rx = build_codebook(&platform.rx, small).map_err(fail)?;
        let mut oracle = SyntheticOracle::new(platform, si, 0.0).map_err(fail)?;
        let si_ref = oracle
            .calibrate_reference(&cb_tx, &cb_rx, rng.random_range(-10.0..20.0))
            .map_err(fail)?;
        oracle.set_si_ref_inr_db(si_ref).map_err(fail)?;

        let dir = |rng: &mut ChaCha8Rng| {
            let az = (rng.random_range(-600..=600) as f64) / 10.0;
            let el = (rng.random_range(-300..=300) as f64) / 10.0;
            SteeringDirection::new(az, el).unwrap()
        };
        let (ntx, nrx) = (dir(&mut rng), dir(&mut rng));
        let target = targets[rng.random_range(0..targets.len())];
        let cfg = if rng.random_bool(0.5) {
            SteerConfig::new(random_spec(&mut rng), target)
        } else {
            let tx = random_spec(&mut rng);
            SteerConfig::per_link(tx, random_spec(&mut rng), target)
        }
        .map_err(fail)?;

        let inc = solve_steer_incremental(&oracle, ntx, nrx, &cfg).map_err(fail)?;
        let exh = solve_steer_exhaustive(&oracle, ntx, nrx, &cfg).map_err(fail)?;
        let same = inc.d_tx_star == exh.d_tx_star
            && inc.d_rx_star == exh.d_rx_star
            && inc.inr_achieved_db.to_bits() == exh.inr_achieved_db.to_bits()
            && inc.target_met == exh.target_met;
        ensure(same, || format!("instance {k}: incremental {inc:?} != exhaustive {exh:?}"))?;
        met += usize::from(inc.target_met);
    }
    let elapsed = start.elapsed();
    ensure(elapsed < Duration::from_secs(60), || format!("took {elapsed:.1?} (limit 60 s)"))?;
    Ok(format!(
        "{instances} instances identical ({met} met their target), {:.1} s",
        elapsed.as_secs_f64()
    ))
}

/// Fraction of `sorted` that is ≤ x.
fn cdf_at(sorted: &[f64], x: f64) -> f64 {
    sorted.partition_point(|&v| v <= x) as f64 / sorted.len() as f64
}

fn inr_guarantee(drops: &[DropResult], elapsed: Duration) -> Check {
    ensure(drops.len() == 10_000, || format!("expected 10000 drops, got {}", drops.len()))?;
    for d in drops {
        ensure(d.steer.inr_achieved_db <= d.inr_nom_db, || {
            format!("drop {}: STEER INR {} dB > nominal {} dB", d.drop, d.steer.inr_achieved_db, d.inr_nom_db)
        })?;
    }
    let mut nominal: Vec<f64> = drops.iter().map(|d| d.inr_nom_db).collect();
    let mut steered: Vec<f64> = drops.iter().map(|d| d.steer.inr_achieved_db).collect();
    nominal.sort_by(f64::total_cmp);
    steered.sort_by(f64::total_cmp);
    for &x in nominal.iter().chain(&steered) {
        let (fs, fn_) = (cdf_at(&steered, x), cdf_at(&nominal, x));
        ensure(fs >= fn_, || format!("CDF at {x} dB: STEER {fs} < nominal {fn_}"))?;
    }
    ensure(elapsed < Duration::from_secs(300), || format!("run took {elapsed:.1?} (limit 5 min)"))?;
    Ok(format!(
        "10000 drops, median INR {:.2} dB -> {:.2} dB, CDF dominance holds, {:.1} s",
        nominal[5000],
        steered[5000],
        elapsed.as_secs_f64()
    ))
}

fn deviation_bounds(scenario: &Scenario, drops: &[DropResult]) -> Check {
    let (tx, rx) = (scenario.steer_config.tx_spec, scenario.steer_config.rx_spec);
    let mut worst: f64 = 0.0;
    for d in drops {
        for (star, nom, spec) in [
            (d.steer.d_tx_star, d.nominal_tx.direction, tx),
            (d.steer.d_rx_star, d.nominal_rx.direction, rx),
        ] {
            let da = (star.azimuth_deg() - nom.azimuth_deg()).abs();
            let de = (star.elevation_deg() - nom.elevation_deg()).abs();
            ensure(da <= spec.delta_theta_deg() && de <= spec.delta_phi_deg(), || {
                format!("drop {}: deviation ({da}, {de}) exceeds ({}, {})", d.drop, spec.delta_theta_deg(), spec.delta_phi_deg())
            })?;
            worst = worst.max(da).max(de);
        }
    }
    Ok(format!("{} drops within (2, 2) deg, largest per-axis deviation {worst} deg", drops.len()))
}

fn cardinalities() -> Check {
    // (Δ, δ) with K = ⌊Δ/δ⌋ worked out by hand.
    let table = [(0.0, 1.0, 0usize), (1.0, 1.0, 1), (2.0, 1.0, 2), (2.0, 1.5, 1), (3.0, 1.0, 3)];
    let nominal = SteeringDirection::new(10.0, -5.0).map_err(fail)?;
    let mut checked = 0;
    for &(dt, rt, kt) in &table {
        for &(dp, rp, kp) in &table {
            let spec = NeighborhoodSpec::new(dt, dp, rt, rp).map_err(fail)?;
            let size = (2 * kt + 1) * (2 * kp + 1);
            let offsets = neighborhood_offsets(&spec);
            ensure(offsets.len() == size, || format!("({dt},{dp},{rt},{rp}): {} offsets, want {size}", offsets.len()))?;
            let distinct: BTreeSet<(u64, u64)> = offsets.iter().map(|o| (o.0.to_bits(), o.1.to_bits())).collect();
            ensure(distinct.len() == size, || format!("({dt},{dp},{rt},{rp}): duplicate offsets"))?;
            let pairs = sort_pairs_by_deviation(nominal, nominal, &spec).map_err(fail)?;
            let distinct: BTreeSet<_> = pairs.iter().map(|p| (p.tx, p.rx)).collect();
            ensure(pairs.len() == size * size && distinct.len() == size * size, || {
                format!("({dt},{dp},{rt},{rp}): {} pairs ({} distinct), want {}", pairs.len(), distinct.len(), size * size)
            })?;
            checked += 1;
        }
    }
    Ok(format!("{checked} (Δθ,δθ)×(Δφ,δφ) combinations match (2K_θ+1)(2K_φ+1) and its square"))
}

fn codebook_preset(preset: &Preset) -> Check {
    let cb = &preset.testbed.codebook_tx;
    ensure(cb.len() == 105, || format!("{} beams, want 105", cb.len()))?;
    let geom = &preset.testbed.tx_geometry;
    let beam = conjugate_beam(geom, SteeringDirection::broadside());
    let gain_db = |k: i32| {
        let d = SteeringDirection::new(k as f64 * 0.1, 0.0).unwrap();
        10.0 * normalized_gain(&los_channel(geom, d), &beam).log10()
    };
    let above = |k: i32| gain_db(k) >= -3.0;
    let mut right = 0;
    while above(right + 1) {
        right += 1;
    }
    let mut left = 0;
    while above(left - 1) {
        left -= 1;
    }
    let width = (right - left) as f64 * 0.1;
    ensure((6.0..=8.0).contains(&width), || format!("3 dB beamwidth {width:.1} deg outside [6, 8]"))?;
    Ok(format!("105 beams, broadside 3 dB azimuth beamwidth {width:.1} deg"))
}

fn metric_identities(preset: &Preset, drops: &[DropResult]) -> Check {
    for d in drops {
        ensure(d.nominal_tx.snr_nom > 0.0 && d.nominal_rx.snr_nom > 0.0, || format!("drop {}: non-positive SNR", d.drop))?;
        let k = d.rates(Strategy::Tdd).kappa_sum;
        ensure(k == 0.5, || format!("drop {}: kappa(TDD) = {k:e}", d.drop))?;
    }
    let mut s = preset.scenario(1000);
    s.budget.inr_tx_db = f64::NEG_INFINITY;
    let clean = sim::run_scenario(&s, &ZeroInterference, &preset.testbed, Selection::Online).map_err(fail)?;
    for d in &clean {
        ensure(
            d.steer.d_tx_star == d.nominal_tx.direction && d.steer.d_rx_star == d.nominal_rx.direction,
            || format!("drop {}: selection moved without interference", d.drop),
        )?;
        for st in [Strategy::FdConv, Strategy::FdSteer] {
            let k = d.rates(st).kappa_sum;
            ensure(k == 1.0, || format!("drop {}: kappa({st}) = {k:e}", d.drop))?;
        }
    }
    let s1 = sinr(10.0, 1.0).map_err(fail)?;
    let se = spectral_efficiency(3.0).map_err(fail)?;
    ensure((s1 - 5.0).abs() <= 1e-12, || format!("sinr(10, 1) = {s1}"))?;
    ensure((se - 2.0).abs() <= 1e-12, || format!("spectral_efficiency(3) = {se}"))?;
    Ok(format!(
        "kappa(TDD) = 0.5 on {} drops, kappa(FD) = 1 on {} interference-free drops, sinr/SE hand values exact",
        drops.len(),
        clean.len()
    ))
}

fn mean_fraction(table: &LookupTable, pairs: usize) -> f64 {
    table.iter().map(|(_, s)| s.measurements_used as f64 / pairs as f64).sum::<f64>() / table.len() as f64
}

fn measurement_savings(preset: &Preset, table_m7: &LookupTable) -> Check {
    let t = &preset.testbed;
    let cfg0 = preset.scenario(1).steer_config.with_target(0.0);
    let table0 = precompute_lookup(&preset.oracle, &t.codebook_tx, &t.codebook_rx, &cfg0).map_err(fail)?;
    let pairs = cfg0.pair_count();
    ensure(table0.len() == 11_025, || format!("{} codebook pairs, want 11025", table0.len()))?;
    let (f0, f7) = (mean_fraction(&table0, pairs), mean_fraction(table_m7, pairs));
    ensure(f0 < 1.0, || format!("mean fraction at 0 dB is {f0}"))?;
    ensure(f0 <= f7, || format!("raising the target from -7 to 0 dB raised the mean fraction {f7} -> {f0}"))?;
    let cheap = table0
        .iter()
        .filter(|(_, s)| s.measurements_used as f64 <= 0.2 * pairs as f64)
        .count() as f64
        / table0.len() as f64;
    Ok(format!(
        "mean fraction measured {f7:.3} at -7 dB, {f0:.3} at 0 dB over 11025 pairs; {:.1}% of pairs need <= 20% (reported)",
        100.0 * cheap
    ))
}

fn neighborhood_monotonicity(preset: &Preset) -> Check {
    let specs = [
        NeighborhoodSpec::fixed(),
        NeighborhoodSpec::square(1.0, 1.0).map_err(fail)?,
        NeighborhoodSpec::new(2.0, 2.0, 1.0, 1.0).map_err(fail)?,
    ];
    let points = sim::sweep_neighborhood(&preset.scenario(10_000), &preset.oracle, &preset.testbed, &specs)
        .map_err(fail)?;
    for w in points.windows(2) {
        for (a, b) in w[0].drops.iter().zip(&w[1].drops) {
            ensure(a.user_tx == b.user_tx && a.user_rx == b.user_rx, || format!("drop {} differs across specs", a.drop))?;
            ensure(b.steer.inr_achieved_db <= a.steer.inr_achieved_db, || {
                format!(
                    "drop {}: INR rose from {} to {} dB with a larger neighborhood",
                    a.drop, a.steer.inr_achieved_db, b.steer.inr_achieved_db
                )
            })?;
        }
    }
    let kappas: Vec<f64> = points.iter().map(|p| p.summary.mean_kappa_of(Strategy::FdSteer)).collect();
    ensure(kappas.windows(2).all(|w| w[0] <= w[1]), || format!("mean kappa(FD-STEER) not non-decreasing: {kappas:?}"))?;
    Ok(format!(
        "per-drop INR non-increasing on 10000 drops; mean kappa(FD-STEER) {}",
        kappas.iter().map(|k| format!("{k:.4}")).collect::<Vec<_>>().join(" <= ")
    ))
}

fn data_lines(path: &Path) -> Vec<String> {
    std::fs::read_to_string(path)
        .unwrap()
        .lines()
        .filter(|l| !l.starts_with('#'))
        .map(str::to_owned)
        .collect()
}

fn steer_sim(args: &[&str]) -> std::result::Result<(), String> {
    let out = Command::new(env!("CARGO_BIN_EXE_steer-sim"))
        .args(args)
        .output()
        .map_err(fail)?;
    ensure(out.status.success(), || {
        format!("steer-sim {args:?} failed: {}", String::from_utf8_lossy(&out.stderr))
    })
}

fn round_trips(preset: &Preset, table_m7: &LookupTable) -> Check {
    let dir = tempfile::tempdir().map_err(fail)?;
    let t = &preset.testbed;

    // INR grid over the neighborhoods of a few beams on each panel.
    let spec = NeighborhoodSpec::square(2.0, 1.0).map_err(fail)?;
    let around = |cb: &Codebook| -> Vec<SteeringDirection> {
        [0, 52, 104]
            .iter()
            .flat_map(|&i| {
                neighborhood_offsets(&spec)
                    .into_iter()
                    .map(move |(a, e)| cb.directions()[i].offset(a, e).unwrap())
            })
            .collect()
    };
    let (txs, rxs) = (around(&t.codebook_tx), around(&t.codebook_rx));
    let pairs: Vec<_> = txs.iter().flat_map(|&a| rxs.iter().map(move |&b| (a, b))).collect();
    let grid_path = dir.path().join("grid.csv");
    export_grid(&preset.oracle, &pairs, Some((1.0, 1.0)), &grid_path).map_err(fail)?;
    let imported = import_grid(&grid_path).map_err(fail)?;
    let mut worst: f64 = 0.0;
    for &(a, b) in &pairs {
        let want = preset.oracle.query_inr_db(a, b).map_err(fail)?;
        let got = imported.query_inr_db(a, b).map_err(fail)?;
        worst = worst.max((want - got).abs());
    }
    ensure(worst <= 1e-9, || format!("grid round trip error {worst:e} dB"))?;

    // Lookup table file.
    let lookup_path = dir.path().join("lookup.csv");
    table_m7.write(&lookup_path, &Default::default()).map_err(fail)?;
    let back = LookupTable::read(&lookup_path, &t.codebook_tx, &t.codebook_rx).map_err(fail)?;
    for ((ij, a), (_, b)) in table_m7.iter().zip(back.iter()) {
        ensure(a.d_tx_star == b.d_tx_star && a.d_rx_star == b.d_rx_star, || format!("{ij:?}: selection changed"))?;
        ensure((a.inr_achieved_db - b.inr_achieved_db).abs() <= 1e-9, || format!("{ij:?}: INR changed"))?;
    }

    // precompute + simulate --lookup against direct simulate.
    let config = Path::new(env!("CARGO_MANIFEST_DIR")).join("config/default.toml");
    let config = config.to_str().unwrap();
    let (pre, direct, lookup) = (dir.path().join("pre"), dir.path().join("direct"), dir.path().join("lookup"));
    let n = "scenario.n_drops=2000";
    steer_sim(&["precompute", "--config", config, "--out", pre.to_str().unwrap()])?;
    steer_sim(&["simulate", "--config", config, "--set", n, "--out", direct.to_str().unwrap()])?;
    let table = pre.join("lookup.csv");
    steer_sim(&[
        "simulate", "--config", config, "--set", n, "--out", lookup.to_str().unwrap(), "--lookup", table.to_str().unwrap(),
    ])?;
    let (a, b) = (data_lines(&direct.join("results.csv")), data_lines(&lookup.join("results.csv")));
    ensure(a.len() == 1 + 4 * 2000, || format!("{} result lines, want {}", a.len(), 1 + 4 * 2000))?;
    ensure(a == b, || {
        let k = a.iter().zip(&b).position(|(x, y)| x != y).unwrap_or(0);
        format!("lookup run differs at row {k}: {} vs {}", a[k], b[k])
    })?;
    Ok(format!(
        "grid of {} pairs within {worst:e} dB, 11025-entry lookup table intact, CLI lookup run identical on 2000 drops",
        pairs.len()
    ))
}

fn main() {
    let mut outcomes: Vec<(&str, std::result::Result<String, String>)> = Vec::new();
    let mut record = |name: &'static str, f: &mut dyn FnMut() -> Check| {
        let r = catch_unwind(AssertUnwindSafe(f)).unwrap_or_else(|p| {
            Err(p
                .downcast_ref::<String>()
                .cloned()
                .or_else(|| p.downcast_ref::<&str>().map(|s| s.to_string()))
                .unwrap_or_else(|| "panicked".into()))
        });
        let (tag, msg) = match &r {
            Ok(m) => ("PASS", m),
            Err(m) => ("FAIL", m),
        };
        println!("{tag} {name}: {msg}");
        outcomes.push((name, r));
    };

    record("solver-equivalence", &mut solver_equivalence);

    let preset = Preset::new();
    let scenario = preset.scenario(10_000);
    let start = Instant::now();
    let drops = sim::run_scenario(&scenario, &preset.oracle, &preset.testbed, Selection::Online);
    let elapsed = start.elapsed();
    let drops = match drops {
        Ok(d) => d,
        Err(e) => {
            println!("FAIL default-run: {e}");
            std::process::exit(1);
        }
    };
    record("inr-guarantee", &mut || inr_guarantee(&drops, elapsed));
    record("deviation-bounds", &mut || deviation_bounds(&scenario, &drops));
    record("cardinalities", &mut cardinalities);
    record("codebook-preset", &mut || codebook_preset(&preset));
    record("metric-identities", &mut || metric_identities(&preset, &drops));

    let t = &preset.testbed;
    let table_m7 = precompute_lookup(&preset.oracle, &t.codebook_tx, &t.codebook_rx, &scenario.steer_config)
        .expect("precompute at the default target");
    record("measurement-savings", &mut || measurement_savings(&preset, &table_m7));
    record("neighborhood-monotonicity", &mut || neighborhood_monotonicity(&preset));
    record("round-trips", &mut || round_trips(&preset, &table_m7));

    let failed = outcomes.iter().filter(|(_, r)| r.is_err()).count();
    println!("{} of {} acceptance criteria passed", outcomes.len() - failed, outcomes.len());
    if failed > 0 {
        std::process::exit(1);
    }
}
