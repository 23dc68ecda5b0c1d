mod options;

use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::Parser;
use matid::csvio::CsvDoc;
use matid::em::{fresnel_thick, relative_permittivity, MaterialParams, MaterialTable};
use matid::identify::{
    identify_loop, measurements_to_csv, simulate_measurement, trajectory_id, IdentifyConfig, MeasurementTable, RpScope,
    SimulationSetup,
};
use matid::scene::{trace, Point, Scene};
use matid::settling::{settling_thickness, settling_to_csv, sweep_to_csv, thickness_sweep, SettlingQuery, SettlingRow};
use matid::RlDatabase;
use options::{
    Cli, CoeffArgs, Command, IdentifyArgs, PlacementArgs, ReportFormat, RlArgs, RldbCommand, SettlingArgs, SimulateArgs,
    TraceArgs,
};

/// Exit status for runs that finish but leave a contradiction or an unmatched measurement.
const EXIT_UNRESOLVED: u8 = 2;

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(1) } else { ExitCode::SUCCESS };
        }
    };
    match run(cli) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(EXIT_UNRESOLVED),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
    }
}

/// Returns `Ok(false)` when identification ends unresolved.
fn run(cli: Cli) -> Result<bool> {
    let out = Output { dir: cli.out_dir.clone() };
    let table = match &cli.material_file {
        Some(path) => fs::read_to_string(path)
            .with_context(|| format!("reading {}", path.display()))?
            .parse::<MaterialTable>()
            .with_context(|| format!("in {}", path.display()))?,
        None => MaterialTable::builtin(),
    };
    match cli.command {
        Command::Coeff(a) => coeff(&table, a, &out)?,
        Command::Rl(a) => rl(&table, a, &out)?,
        Command::Settling(a) => settling(&table, a, &out)?,
        Command::Rldb { command } => rldb(&table, command, &out)?,
        Command::Trace(a) => trace_cmd(a, &out)?,
        Command::Simulate(a) => simulate(&table, a, &out)?,
        Command::Identify(a) => return identify(&table, a, &out),
    }
    Ok(true)
}

struct Output {
    dir: Option<PathBuf>,
}

impl Output {
    /// Writes to `path`, else to `<out-dir>/<default_name>`, else to stdout.
    fn emit(&self, path: Option<&Path>, default_name: &str, text: &str) -> Result<()> {
        let target = match (path, &self.dir) {
            (Some(p), _) => p.to_path_buf(),
            (None, Some(dir)) => {
                fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
                dir.join(default_name)
            }
            (None, None) => {
                print!("{text}");
                return Ok(());
            }
        };
        fs::write(&target, text).with_context(|| format!("writing {}", target.display()))?;
        eprintln!("wrote {}", target.display());
        Ok(())
    }
}

fn select(table: &MaterialTable, names: &[String]) -> Result<Vec<MaterialParams>> {
    if names.is_empty() {
        return Ok(table.materials().to_vec());
    }
    names
        .iter()
        .map(|n| table.get(n).cloned().with_context(|| format!("unknown material {n:?}")))
        .collect()
}

fn ascending(mut values: Vec<f64>, what: &str) -> Result<Vec<f64>> {
    values.sort_by(f64::total_cmp);
    if values.windows(2).any(|w| w[0] == w[1]) {
        bail!("duplicate {what}");
    }
    Ok(values)
}

fn coeff(table: &MaterialTable, a: CoeffArgs, out: &Output) -> Result<()> {
    let mat = select(table, std::slice::from_ref(&a.material))?.remove(0);
    let theta = a.angle.to_radians();
    let h_m: Vec<f64> = a.thickness.0.iter().map(|mm| mm * 1e-3).collect();
    let points = thickness_sweep(&mat, a.freq, theta, &h_m)?;
    let thick = fresnel_thick(relative_permittivity(&mat, a.freq)?, theta)?;
    let doc = CsvDoc::default()
        .meta("material", &mat.name)
        .meta("f_ghz", a.freq)
        .meta("angle_deg", a.angle)
        .meta("thick_te_db", thick.te_db())
        .meta("thick_tm_db", thick.tm_db());
    out.emit(a.out.output.as_deref(), "coeff.csv", &sweep_to_csv(doc, &points))
}

fn rl(table: &MaterialTable, a: RlArgs, out: &Output) -> Result<()> {
    let mats = select(table, &a.materials)?;
    let db = RlDatabase::build(&mats, &ascending(a.freqs, "frequencies")?, &a.angles.0, a.kappa.value())?;
    out.emit(a.out.output.as_deref(), "rl.csv", &db.to_csv())
}

fn settling(table: &MaterialTable, a: SettlingArgs, out: &Output) -> Result<()> {
    let mats = select(table, &a.materials)?;
    let mut rows = Vec::new();
    for mat in &mats {
        for &f in &a.freqs {
            let mut q = SettlingQuery::new(mat.clone(), f).angle(a.angle.to_radians()).tolerance(a.tol);
            q.grid_step = a.step.map(|mm| mm * 1e-3);
            q.h_max = a.max_thickness.map(|mm| mm * 1e-3);
            let s = settling_thickness(&q).with_context(|| format!("{} at {f} GHz", mat.name))?;
            rows.push(SettlingRow {
                material: mat.name.clone(),
                f_ghz: f,
                theta_deg: a.angle,
                tol_db: a.tol,
                h_m: s.thickness_m,
            });
        }
    }
    out.emit(a.out.output.as_deref(), "settling.csv", &settling_to_csv(CsvDoc::default(), &rows))
}

fn rldb(table: &MaterialTable, cmd: RldbCommand, out: &Output) -> Result<()> {
    match cmd {
        RldbCommand::Build { materials, freqs, angles, kappa, out: o } => {
            let mats = select(table, &materials)?;
            let db = RlDatabase::build(&mats, &ascending(freqs, "frequencies")?, &angles.0, kappa.value())?;
            out.emit(o.output.as_deref(), "rldb.csv", &db.to_csv())
        }
        RldbCommand::Show { db, material, freq, angle } => {
            let db = RlDatabase::load(&db)?;
            match (material, freq, angle) {
                (Some(m), Some(f), Some(a)) => println!("{}", db.lookup(&m, f, a)?),
                _ => {
                    let range = |v: &[f64]| format!("{} to {} ({} values)", v[0], v[v.len() - 1], v.len());
                    println!("materials: {}", db.materials().join(", "));
                    println!("frequencies (GHz): {}", range(db.freqs()));
                    println!("angles (deg): {}", range(db.angles_deg()));
                    println!("kappa: {}", db.kappa());
                }
            }
            Ok(())
        }
    }
}

struct Placed {
    scene: Scene,
    tx: Vec<Point>,
    rx: Vec<Point>,
}

fn place(a: &PlacementArgs) -> Result<Placed> {
    let scene = Scene::load(&a.scene)?;
    let stored = scene.placement().cloned().unwrap_or_default();
    let pick = |given: &[options::Xyz], stored: Vec<Point>, what: &str| -> Result<Vec<Point>> {
        let points: Vec<Point> = if given.is_empty() { stored } else { given.iter().map(|p| Point::from(p.0)).collect() };
        if points.is_empty() {
            bail!("no {what} positions: pass --{what} or add a placement to the scene");
        }
        Ok(points)
    };
    let tx = pick(&a.tx, stored.tx, "tx")?;
    let rx = pick(&a.rx, stored.rx, "rx")?;
    Ok(Placed { scene, tx, rx })
}

fn trace_cmd(a: TraceArgs, out: &Output) -> Result<()> {
    let p = place(&a.placement)?;
    let mut doc = CsvDoc::new(&["trajectory_id", "hop", "facet_id", "x", "y", "z", "theta_deg", "length_m"])
        .meta("max_bounces", a.placement.max_bounces);
    for (i, tx) in p.tx.iter().enumerate() {
        for (j, rx) in p.rx.iter().enumerate() {
            for (n, t) in trace(&p.scene, *tx, *rx, a.placement.max_bounces)?.iter().enumerate() {
                for (h, hop) in t.hops.iter().enumerate() {
                    doc.push_row(vec![
                        trajectory_id(i, j, n),
                        (h + 1).to_string(),
                        hop.facet_id.clone(),
                        hop.point.x.to_string(),
                        hop.point.y.to_string(),
                        hop.point.z.to_string(),
                        hop.theta_i.to_degrees().to_string(),
                        t.total_length.to_string(),
                    ]);
                }
            }
        }
    }
    out.emit(a.out.output.as_deref(), "trace.csv", &doc.render())
}

fn simulate(table: &MaterialTable, a: SimulateArgs, out: &Output) -> Result<()> {
    let p = place(&a.placement)?;
    let truth = matid::identify::ground_truth_from_scene(&p.scene);
    let setup = SimulationSetup {
        p_tx_dbm: a.p_tx,
        kappa: a.kappa.value(),
        noise_sigma_db: a.noise,
        u_db: a.u,
        ..SimulationSetup::new(table.clone(), truth, a.freq)
    };
    let mut records = Vec::new();
    let mut skipped = 0;
    for (i, tx) in p.tx.iter().enumerate() {
        for (j, rx) in p.rx.iter().enumerate() {
            for (n, t) in trace(&p.scene, *tx, *rx, a.placement.max_bounces)?.iter().enumerate() {
                if t.hops.iter().any(|h| !setup.ground_truth.contains_key(&h.facet_id)) {
                    skipped += 1;
                    continue;
                }
                let seed = a.seed.wrapping_add(records.len() as u64);
                records.push(simulate_measurement(&setup, &trajectory_id(i, j, n), t, seed)?.record);
            }
        }
    }
    let doc = CsvDoc::default()
        .meta("f_ghz", a.freq)
        .meta("p_tx_dbm", a.p_tx)
        .meta("noise_db", a.noise)
        .meta("kappa", setup.kappa)
        .meta("seed", a.seed)
        .meta("skipped_unknown_material", skipped);
    out.emit(a.out.output.as_deref(), "measurements.csv", &measurements_to_csv(doc, &records))
}

fn identify(table: &MaterialTable, a: IdentifyArgs, out: &Output) -> Result<bool> {
    let p = place(&a.placement)?;
    let palette = select(table, &a.palette)?;
    let db = match &a.db {
        Some(path) => RlDatabase::load(path)?,
        None => RlDatabase::build(&palette, &[a.freq], &matid::rldb::default_angles(), a.kappa.value())?,
    };
    let text = fs::read_to_string(&a.measurements).with_context(|| format!("reading {}", a.measurements.display()))?;
    let mut measurements =
        MeasurementTable::from_csv(&text).with_context(|| format!("in {}", a.measurements.display()))?;
    if let Some(u) = a.u {
        measurements = measurements.with_uncertainty(u)?;
    }
    let cfg = IdentifyConfig {
        max_bounces: a.placement.max_bounces,
        scope: if a.per_facet { RpScope::Facet } else { RpScope::Point { delta_m: a.rp_tolerance } },
        early_stop: !a.no_early_stop,
        ..IdentifyConfig::new(palette, a.freq)
    };
    let outcome = identify_loop(&p.scene, &p.tx, &p.rx, &db, &cfg, &mut measurements)?;
    let report = &outcome.report;

    let traced = report.trajectories.iter().filter(|t| t.measurement.is_some()).count();
    if traced < measurements.len() && !report.stopped_early {
        eprintln!("warning: {} measurement(s) name no traced trajectory", measurements.len() - traced);
    }
    match a.format {
        ReportFormat::Text => print!("{}", report.to_text()),
        ReportFormat::Csv if a.output.is_none() && out.dir.is_none() => print!("{}", report.to_csv()),
        ReportFormat::Csv => {}
    }
    if a.output.is_some() || out.dir.is_some() {
        out.emit(a.output.as_deref(), "identify.csv", &report.to_csv())?;
    }
    Ok(!report.has_failures())
}
