//! Material identification from measured total reflection loss.
//!
//! A traced trajectory with `k` reflection points admits `|palette|^k`
//! sequences-of-material, each with a predicted total RL from the database.
//! A measurement keeps the sequences whose total lies within `±u` of the
//! measured value. Trajectories that share reflection points then constrain
//! each other: a material stays possible at a shared point only if every
//! trajectory through it still has a surviving sequence using it there.

mod measure;
mod merge;
mod run;

use std::fmt;

pub use measure::{
    ground_truth_from_scene, measurements_from_csv, measurements_to_csv, simulate_measurement, MeasurementRecord,
    MeasurementSource, MeasurementTable, SimulatedMeasurement, SimulationSetup, Simulator, MEASUREMENT_COLUMNS,
};
pub use merge::{merge_candidates, merge_with_budget, BeliefState, Contradiction, TrajectoryEvidence, DEFAULT_NODE_BUDGET};
pub use run::{
    identify_loop, trajectory_id, FacetStatus, IdentifyConfig, IdentifyOutcome, IdentifyReport, RpSummary,
    TrajectoryOutcome, TrajectoryStatus, REPORT_COLUMNS,
};

use crate::em::MaterialParams;
use crate::error::{Error, Result};
use crate::rldb::RlDatabase;
use crate::scene::{Point, Trajectory};

/// Slack added to `±u` when matching, to absorb rounding in the summed totals.
pub const MATCH_SLACK_DB: f64 = 1e-9;

/// Default distance within which two hops on one facet count as the same reflection point.
pub const DEFAULT_RP_DELTA_M: f64 = 0.01;

/// A reflection point shared across trajectories. Displayed as `RP1`, `RP2`, ...
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct RpKey(pub usize);

impl fmt::Display for RpKey {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "RP{}", self.0 + 1)
    }
}

/// How hops are grouped into reflection points.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum RpScope {
    /// Same facet and within `delta_m` of the point that opened the key.
    Point { delta_m: f64 },
    /// One key per facet, for scenes where each facet is a single material.
    Facet,
}

impl Default for RpScope {
    fn default() -> Self {
        RpScope::Point { delta_m: DEFAULT_RP_DELTA_M }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RpEntry {
    pub facet_id: String,
    /// The first hop registered under this key.
    pub point: Point,
    pub hits: usize,
}

/// Assigns [`RpKey`]s to hops in order of first appearance.
#[derive(Debug, Clone, PartialEq)]
pub struct RpRegistry {
    scope: RpScope,
    entries: Vec<RpEntry>,
}

impl Default for RpRegistry {
    fn default() -> Self {
        Self { scope: RpScope::default(), entries: Vec::new() }
    }
}

impl RpRegistry {
    pub fn new(scope: RpScope) -> Result<Self> {
        if let RpScope::Point { delta_m } = scope {
            if !(delta_m.is_finite() && delta_m > 0.0) {
                return Err(Error::invalid(format!("reflection-point tolerance must be > 0 m, got {delta_m}")));
            }
        }
        Ok(Self { scope, entries: Vec::new() })
    }

    pub fn scope(&self) -> RpScope {
        self.scope
    }

    pub fn key_for(&mut self, facet_id: &str, point: &Point) -> RpKey {
        let existing = self
            .entries
            .iter()
            .enumerate()
            .filter(|(_, e)| e.facet_id == facet_id)
            .map(|(i, e)| (i, (e.point - point).norm()))
            .filter(|&(_, d)| match self.scope {
                RpScope::Point { delta_m } => d <= delta_m,
                RpScope::Facet => true,
            })
            .min_by(|a, b| a.1.total_cmp(&b.1));
        let index = match existing {
            Some((i, _)) => i,
            None => {
                self.entries.push(RpEntry { facet_id: facet_id.to_string(), point: *point, hits: 0 });
                self.entries.len() - 1
            }
        };
        self.entries[index].hits += 1;
        RpKey(index)
    }

    /// Keys for every hop of `traj`, registering new reflection points as needed.
    pub fn register(&mut self, traj: &Trajectory) -> Vec<RpKey> {
        traj.hops.iter().map(|h| self.key_for(&h.facet_id, &h.point)).collect()
    }

    pub fn entry(&self, key: RpKey) -> Option<&RpEntry> {
        self.entries.get(key.0)
    }

    pub fn entries(&self) -> &[RpEntry] {
        &self.entries
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }
}

/// One material per reflection point along a trajectory, with the predicted losses.
#[derive(Debug, Clone, PartialEq)]
pub struct SequenceCandidate {
    assignment: Vec<(RpKey, String)>,
    per_hop_rl: Vec<f64>,
    total_rl: f64,
}

impl SequenceCandidate {
    pub fn new(assignment: Vec<(RpKey, String)>, per_hop_rl: Vec<f64>) -> Result<Self> {
        if assignment.is_empty() || assignment.len() != per_hop_rl.len() {
            return Err(Error::invalid(format!(
                "{} materials for {} per-hop losses",
                assignment.len(),
                per_hop_rl.len()
            )));
        }
        if per_hop_rl.iter().any(|v| !v.is_finite()) {
            return Err(Error::invalid("per-hop reflection loss must be finite"));
        }
        let total_rl = per_hop_rl.iter().sum();
        Ok(Self { assignment, per_hop_rl, total_rl })
    }

    pub fn assignment(&self) -> &[(RpKey, String)] {
        &self.assignment
    }

    pub fn per_hop_rl(&self) -> &[f64] {
        &self.per_hop_rl
    }

    pub fn total_rl(&self) -> f64 {
        self.total_rl
    }

    pub fn bounces(&self) -> usize {
        self.assignment.len()
    }

    pub fn keys(&self) -> impl Iterator<Item = RpKey> + '_ {
        self.assignment.iter().map(|(k, _)| *k)
    }

    /// Material at `key`, if this candidate visits it.
    pub fn material_at(&self, key: RpKey) -> Option<&str> {
        self.assignment.iter().find(|(k, _)| *k == key).map(|(_, m)| m.as_str())
    }

    /// False if the trajectory visits one key twice with different materials.
    pub fn is_consistent(&self) -> bool {
        self.assignment
            .iter()
            .enumerate()
            .all(|(i, (k, m))| self.assignment[..i].iter().all(|(k2, m2)| k2 != k || m2 == m))
    }
}

impl fmt::Display for SequenceCandidate {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("(")?;
        for (i, (k, m)) in self.assignment.iter().enumerate() {
            if i > 0 {
                f.write_str(", ")?;
            }
            write!(f, "{k}-{m}")?;
        }
        f.write_str(")")
    }
}

/// Every sequence-of-material for `traj` in lexicographic palette order, first hop slowest.
pub fn enumerate_sequences(
    traj: &Trajectory,
    keys: &[RpKey],
    palette: &[MaterialParams],
    db: &RlDatabase,
    f_ghz: f64,
) -> Result<Vec<SequenceCandidate>> {
    if palette.is_empty() {
        return Err(Error::invalid("material palette is empty"));
    }
    for (i, m) in palette.iter().enumerate() {
        if palette[..i].iter().any(|o| o.name == m.name) {
            return Err(Error::invalid(format!("material {} appears twice in the palette", m.name)));
        }
    }
    let k = traj.bounces();
    if k == 0 || keys.len() != k {
        return Err(Error::invalid(format!("{} keys for a trajectory with {k} hops", keys.len())));
    }

    // rl[hop][material]
    let mut rl = Vec::with_capacity(k);
    for (j, hop) in traj.hops.iter().enumerate() {
        let theta_deg = hop.theta_i.to_degrees();
        let row = palette
            .iter()
            .map(|m| {
                db.lookup(&m.name, f_ghz, theta_deg).map_err(|e| {
                    let detail = match e {
                        Error::OutOfRange(msg) => msg,
                        other => other.to_string(),
                    };
                    Error::OutOfRange(format!("hop {} on facet {} at {theta_deg:.3} deg: {detail}", j + 1, hop.facet_id))
                })
            })
            .collect::<Result<Vec<_>>>()?;
        rl.push(row);
    }

    let n = palette.len();
    let total = n.pow(k as u32);
    let mut out = Vec::with_capacity(total);
    let mut digits = vec![0usize; k];
    for _ in 0..total {
        let assignment = digits.iter().zip(keys).map(|(&d, &key)| (key, palette[d].name.clone())).collect();
        let per_hop = digits.iter().enumerate().map(|(j, &d)| rl[j][d]).collect();
        out.push(SequenceCandidate::new(assignment, per_hop)?);
        for d in digits.iter_mut().rev() {
            *d += 1;
            if *d < n {
                break;
            }
            *d = 0;
        }
    }
    Ok(out)
}

/// Candidates whose total lies in the closed band `measured ± u`, in input order.
/// An empty result is a no-hypothesis outcome for this trajectory.
pub fn match_measurement(candidates: &[SequenceCandidate], m: &MeasurementRecord) -> Vec<SequenceCandidate> {
    let limit = m.uncertainty_u + MATCH_SLACK_DB;
    candidates.iter().filter(|c| (c.total_rl - m.measured_total_rl).abs() <= limit).cloned().collect()
}
