//! Measurement records, their CSV form, and a seeded measurement simulator.

use std::collections::BTreeMap;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use crate::csvio::{parse_f64, CsvDoc};
use crate::em::{extract_total_rl, received_power, reflection_loss, MaterialTable};
use crate::error::{Error, Result};
use crate::scene::{Scene, Trajectory};

pub const MEASUREMENT_COLUMNS: [&str; 3] = ["trajectory_id", "measured_rl_db", "u_db"];

/// A measured total reflection loss for one trajectory, with uncertainty `±u`.
#[derive(Debug, Clone, PartialEq)]
pub struct MeasurementRecord {
    pub trajectory_ref: String,
    pub measured_total_rl: f64,
    pub uncertainty_u: f64,
}

impl MeasurementRecord {
    pub fn new(trajectory_ref: impl Into<String>, measured_total_rl: f64, uncertainty_u: f64) -> Result<Self> {
        let trajectory_ref = trajectory_ref.into();
        if trajectory_ref.is_empty() || trajectory_ref.contains([',', '#']) || trajectory_ref.chars().any(char::is_whitespace) {
            return Err(Error::invalid(format!("bad trajectory id {trajectory_ref:?}")));
        }
        if !measured_total_rl.is_finite() {
            return Err(Error::invalid(format!("{trajectory_ref}: measured RL must be finite")));
        }
        if !(uncertainty_u.is_finite() && uncertainty_u >= 0.0) {
            return Err(Error::invalid(format!("{trajectory_ref}: uncertainty must be >= 0 dB, got {uncertainty_u}")));
        }
        Ok(Self { trajectory_ref, measured_total_rl, uncertainty_u })
    }
}

pub fn measurements_to_csv(doc: CsvDoc, records: &[MeasurementRecord]) -> String {
    let mut doc = CsvDoc { columns: MEASUREMENT_COLUMNS.iter().map(|c| c.to_string()).collect(), ..doc };
    for r in records {
        doc.push_row(vec![r.trajectory_ref.clone(), r.measured_total_rl.to_string(), r.uncertainty_u.to_string()]);
    }
    doc.render()
}

pub fn measurements_from_csv(text: &str) -> Result<Vec<MeasurementRecord>> {
    let doc = CsvDoc::parse(text, Some(&MEASUREMENT_COLUMNS))?;
    let mut out: Vec<MeasurementRecord> = Vec::with_capacity(doc.rows.len());
    for (line, f) in &doc.rows {
        let record = MeasurementRecord::new(
            f[0].clone(),
            parse_f64(&f[1], *line, "measured_rl_db")?,
            parse_f64(&f[2], *line, "u_db")?,
        )
        .map_err(|e| Error::parse(format!("line {line}"), e.to_string()))?;
        if out.iter().any(|r| r.trajectory_ref == record.trajectory_ref) {
            return Err(Error::parse(format!("line {line}"), format!("duplicate trajectory id {}", record.trajectory_ref)));
        }
        out.push(record);
    }
    Ok(out)
}

/// Supplies a measurement for a traced trajectory, or `None` if it was not measured.
pub trait MeasurementSource {
    fn measure(&mut self, trajectory_ref: &str, traj: &Trajectory) -> Result<Option<MeasurementRecord>>;
}

/// Measurements looked up by trajectory id.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct MeasurementTable {
    records: BTreeMap<String, MeasurementRecord>,
}

impl MeasurementTable {
    pub fn new(records: Vec<MeasurementRecord>) -> Result<Self> {
        let mut map = BTreeMap::new();
        for r in records {
            let id = r.trajectory_ref.clone();
            if map.insert(id.clone(), r).is_some() {
                return Err(Error::invalid(format!("duplicate trajectory id {id}")));
            }
        }
        Ok(Self { records: map })
    }

    pub fn from_csv(text: &str) -> Result<Self> {
        Self::new(measurements_from_csv(text)?)
    }

    /// Replaces every record's uncertainty.
    pub fn with_uncertainty(mut self, u: f64) -> Result<Self> {
        if !(u.is_finite() && u >= 0.0) {
            return Err(Error::invalid(format!("uncertainty must be >= 0 dB, got {u}")));
        }
        for r in self.records.values_mut() {
            r.uncertainty_u = u;
        }
        Ok(self)
    }

    pub fn get(&self, id: &str) -> Option<&MeasurementRecord> {
        self.records.get(id)
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }
}

impl MeasurementSource for MeasurementTable {
    fn measure(&mut self, trajectory_ref: &str, _traj: &Trajectory) -> Result<Option<MeasurementRecord>> {
        Ok(self.records.get(trajectory_ref).cloned())
    }
}

/// Ground truth and radio settings for simulated measurements.
#[derive(Debug, Clone)]
pub struct SimulationSetup {
    pub materials: MaterialTable,
    /// Facet id to material name.
    pub ground_truth: BTreeMap<String, String>,
    pub f_ghz: f64,
    pub p_tx_dbm: f64,
    pub kappa: f64,
    pub noise_sigma_db: f64,
    /// Uncertainty written into each record.
    pub u_db: f64,
}

impl SimulationSetup {
    /// Noise-free setup at 0 dBm with no roughness and `u = 1 dB`.
    pub fn new(materials: MaterialTable, ground_truth: BTreeMap<String, String>, f_ghz: f64) -> Self {
        Self { materials, ground_truth, f_ghz, p_tx_dbm: 0.0, kappa: 0.0, noise_sigma_db: 0.0, u_db: 1.0 }
    }
}

/// Facet id to material for every facet whose material is known.
pub fn ground_truth_from_scene(scene: &Scene) -> BTreeMap<String, String> {
    scene
        .facets()
        .iter()
        .filter(|f| f.is_material_known())
        .map(|f| (f.id().to_string(), f.material().to_string()))
        .collect()
}

#[derive(Debug, Clone, PartialEq)]
pub struct SimulatedMeasurement {
    pub record: MeasurementRecord,
    pub true_per_hop_rl: Vec<f64>,
    pub true_total_rl: f64,
    pub noise_db: f64,
    pub p_rx_dbm: f64,
}

/// Simulates a power measurement along `traj` and extracts its total reflection loss.
///
/// Per-hop losses come from the thick-surface model of each facet's true material.
/// Gaussian noise is drawn from a ChaCha8 generator seeded with `seed`.
pub fn simulate_measurement(
    setup: &SimulationSetup,
    trajectory_ref: &str,
    traj: &Trajectory,
    seed: u64,
) -> Result<SimulatedMeasurement> {
    if !(setup.noise_sigma_db.is_finite() && setup.noise_sigma_db >= 0.0) {
        return Err(Error::invalid(format!("noise sigma must be >= 0 dB, got {}", setup.noise_sigma_db)));
    }
    let mut per_hop = Vec::with_capacity(traj.bounces());
    for hop in &traj.hops {
        let name = setup
            .ground_truth
            .get(&hop.facet_id)
            .ok_or_else(|| Error::invalid(format!("no ground-truth material for facet {}", hop.facet_id)))?;
        let mat = setup
            .materials
            .get(name)
            .ok_or_else(|| Error::invalid(format!("facet {}: material {name} is not in the material table", hop.facet_id)))?;
        per_hop.push(reflection_loss(mat, setup.f_ghz, hop.theta_i, setup.kappa)?);
    }
    let true_total: f64 = per_hop.iter().sum();

    let normal = Normal::new(0.0, setup.noise_sigma_db).map_err(|e| Error::invalid(e.to_string()))?;
    let noise = normal.sample(&mut ChaCha8Rng::seed_from_u64(seed));

    let p_rx = received_power(setup.p_tx_dbm, true_total + noise, setup.f_ghz, traj.total_length)?;
    let budget = extract_total_rl(setup.p_tx_dbm, p_rx, setup.f_ghz, traj.total_length)?;
    Ok(SimulatedMeasurement {
        record: MeasurementRecord::new(trajectory_ref, budget.rl_total, setup.u_db)?,
        true_per_hop_rl: per_hop,
        true_total_rl: true_total,
        noise_db: noise,
        p_rx_dbm: p_rx,
    })
}

/// Measures every trajectory it is asked about; the n-th draw uses `seed + n`.
#[derive(Debug, Clone)]
pub struct Simulator {
    setup: SimulationSetup,
    seed: u64,
    log: Vec<SimulatedMeasurement>,
}

impl Simulator {
    pub fn new(setup: SimulationSetup, seed: u64) -> Self {
        Self { setup, seed, log: Vec::new() }
    }

    pub fn setup(&self) -> &SimulationSetup {
        &self.setup
    }

    /// Every measurement drawn so far, in order.
    pub fn log(&self) -> &[SimulatedMeasurement] {
        &self.log
    }
}

impl MeasurementSource for Simulator {
    fn measure(&mut self, trajectory_ref: &str, traj: &Trajectory) -> Result<Option<MeasurementRecord>> {
        let seed = self.seed.wrapping_add(self.log.len() as u64);
        let sim = simulate_measurement(&self.setup, trajectory_ref, traj, seed)?;
        let record = sim.record.clone();
        self.log.push(sim);
        Ok(Some(record))
    }
}
