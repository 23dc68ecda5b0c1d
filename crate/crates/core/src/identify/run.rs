//! The measure-and-merge loop over transmitter/receiver placements.

use std::collections::BTreeSet;
use std::fmt::Write as _;

use super::merge::{merge_candidates, BeliefState, Contradiction, TrajectoryEvidence};
use super::{
    enumerate_sequences, match_measurement, MeasurementRecord, MeasurementSource, RpKey, RpRegistry, RpScope,
    SequenceCandidate,
};
use crate::csvio::CsvDoc;
use crate::em::MaterialParams;
use crate::error::{Error, Result};
use crate::rldb::RlDatabase;
use crate::scene::{trace, Point, Scene};

pub const REPORT_COLUMNS: [&str; 7] = ["rp", "facet_id", "x", "y", "z", "materials", "status"];

#[derive(Debug, Clone)]
pub struct IdentifyConfig {
    pub palette: Vec<MaterialParams>,
    pub f_ghz: f64,
    pub max_bounces: usize,
    pub scope: RpScope,
    /// Stop once every covered reflection point has a single material.
    pub early_stop: bool,
}

impl IdentifyConfig {
    /// Two bounces, 1 cm reflection-point tolerance, early stop.
    pub fn new(palette: Vec<MaterialParams>, f_ghz: f64) -> Self {
        Self { palette, f_ghz, max_bounces: 2, scope: RpScope::default(), early_stop: true }
    }
}

/// `tx{i}_rx{j}_{n}`: the `n`-th traced trajectory between transmitter `i` and receiver `j`.
pub fn trajectory_id(tx: usize, rx: usize, n: usize) -> String {
    format!("tx{tx}_rx{rx}_{n}")
}

#[derive(Debug, Clone, PartialEq)]
pub enum TrajectoryStatus {
    Merged,
    /// No sequence matched the measurement.
    NoHypothesis,
    Unmeasured,
    /// Some hop lies outside the database grid.
    OutOfRange(String),
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrajectoryOutcome {
    pub id: String,
    pub facet_ids: Vec<String>,
    pub theta_deg: Vec<f64>,
    pub length_m: f64,
    /// Reflection-point keys, assigned only to merged trajectories.
    pub keys: Vec<RpKey>,
    pub measurement: Option<MeasurementRecord>,
    pub candidates: Vec<SequenceCandidate>,
    pub matched: Vec<SequenceCandidate>,
    pub survivors: Vec<SequenceCandidate>,
    /// Lowest and highest per-hop loss among the survivors.
    pub hop_rl_spread_db: Vec<(f64, f64)>,
    pub status: TrajectoryStatus,
}

#[derive(Debug, Clone, PartialEq)]
pub enum FacetStatus {
    Resolved(String),
    Ambiguous(Vec<String>),
    Contradiction,
    Uncovered,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RpSummary {
    pub key: RpKey,
    pub facet_id: String,
    pub point: Point,
    /// Empty when contradictory.
    pub materials: Vec<String>,
}

impl RpSummary {
    pub fn status(&self) -> &'static str {
        match self.materials.len() {
            0 => "contradiction",
            1 => "resolved",
            _ => "ambiguous",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct IdentifyReport {
    pub f_ghz: f64,
    /// Transmitter/receiver pairs processed.
    pub iterations: usize,
    pub stopped_early: bool,
    pub trajectories: Vec<TrajectoryOutcome>,
    pub rps: Vec<RpSummary>,
    pub facets: Vec<(String, FacetStatus)>,
    /// Each contradiction with the iteration (1-based) in which it first appeared.
    pub contradictions: Vec<(usize, Contradiction)>,
}

#[derive(Debug, Clone)]
pub struct IdentifyOutcome {
    pub belief: BeliefState,
    pub registry: RpRegistry,
    pub report: IdentifyReport,
}

/// Traces every transmitter/receiver pair in order, matches each measured
/// trajectory and merges all evidence gathered so far after each pair.
pub fn identify_loop(
    scene: &Scene,
    tx_positions: &[Point],
    rx_positions: &[Point],
    db: &RlDatabase,
    cfg: &IdentifyConfig,
    source: &mut dyn MeasurementSource,
) -> Result<IdentifyOutcome> {
    if tx_positions.is_empty() || rx_positions.is_empty() {
        return Err(Error::invalid("need at least one transmitter and one receiver position"));
    }
    let mut registry = RpRegistry::new(cfg.scope)?;
    let mut evidence: Vec<TrajectoryEvidence> = Vec::new();
    let mut outcomes: Vec<TrajectoryOutcome> = Vec::new();
    let mut contradictions: Vec<(usize, Contradiction)> = Vec::new();
    let mut belief = BeliefState::default();
    let pairs: Vec<(usize, usize)> =
        (0..tx_positions.len()).flat_map(|i| (0..rx_positions.len()).map(move |j| (i, j))).collect();
    let mut iterations = 0;
    let mut stopped_early = false;

    for (p, &(i, j)) in pairs.iter().enumerate() {
        iterations += 1;
        for (n, traj) in trace(scene, tx_positions[i], rx_positions[j], cfg.max_bounces)?.into_iter().enumerate() {
            let id = trajectory_id(i, j, n);
            let mut outcome = TrajectoryOutcome {
                id: id.clone(),
                facet_ids: traj.facet_ids().iter().map(|s| s.to_string()).collect(),
                theta_deg: traj.hops.iter().map(|h| h.theta_i.to_degrees()).collect(),
                length_m: traj.total_length,
                keys: Vec::new(),
                measurement: None,
                candidates: Vec::new(),
                matched: Vec::new(),
                survivors: Vec::new(),
                hop_rl_spread_db: Vec::new(),
                status: TrajectoryStatus::Unmeasured,
            };
            // Keys are registered only for merged trajectories, so enumerate with placeholders first.
            let placeholder: Vec<RpKey> = (0..traj.bounces()).map(RpKey).collect();
            let candidates = match enumerate_sequences(&traj, &placeholder, &cfg.palette, db, cfg.f_ghz) {
                Ok(c) => c,
                Err(Error::OutOfRange(msg)) => {
                    outcome.status = TrajectoryStatus::OutOfRange(msg);
                    outcomes.push(outcome);
                    continue;
                }
                Err(e) => return Err(e),
            };
            let Some(record) = source.measure(&id, &traj)? else {
                outcomes.push(outcome);
                continue;
            };
            let matched = match_measurement(&candidates, &record);
            outcome.measurement = Some(record);
            if matched.is_empty() {
                outcome.status = TrajectoryStatus::NoHypothesis;
            } else {
                let keys = registry.register(&traj);
                let rekey = |c: &SequenceCandidate| {
                    let assignment = keys.iter().zip(c.assignment()).map(|(k, (_, m))| (*k, m.clone())).collect();
                    SequenceCandidate::new(assignment, c.per_hop_rl().to_vec())
                };
                outcome.candidates = candidates.iter().map(rekey).collect::<Result<_>>()?;
                outcome.matched = matched.iter().map(rekey).collect::<Result<_>>()?;
                outcome.keys = keys;
                outcome.status = TrajectoryStatus::Merged;
                evidence.push(TrajectoryEvidence::new(id, outcome.matched.clone()));
                outcomes.push(outcome);
                continue;
            }
            outcome.candidates = candidates;
            outcomes.push(outcome);
        }

        belief = merge_candidates(&evidence);
        for c in &belief.contradictions {
            if !contradictions.iter().any(|(_, old)| old.key == c.key) {
                contradictions.push((iterations, c.clone()));
            }
        }
        if cfg.early_stop && belief.all_resolved() && !belief.has_contradiction() {
            stopped_early = p + 1 < pairs.len();
            break;
        }
    }

    for o in outcomes.iter_mut().filter(|o| o.status == TrajectoryStatus::Merged) {
        o.survivors = belief.survivors_of(&o.id).map(<[_]>::to_vec).unwrap_or_default();
        o.hop_rl_spread_db = (0..o.keys.len())
            .map(|h| {
                o.survivors.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), c| {
                    (lo.min(c.per_hop_rl()[h]), hi.max(c.per_hop_rl()[h]))
                })
            })
            .collect();
    }

    let rps: Vec<RpSummary> = registry
        .entries()
        .iter()
        .enumerate()
        .map(|(k, e)| RpSummary {
            key: RpKey(k),
            facet_id: e.facet_id.clone(),
            point: e.point,
            materials: belief.material_set(RpKey(k)).map(|s| s.iter().cloned().collect()).unwrap_or_default(),
        })
        .collect();

    let facets = scene
        .facets()
        .iter()
        .map(|f| {
            let on_facet: Vec<&RpSummary> = rps.iter().filter(|r| r.facet_id == f.id()).collect();
            let status = if on_facet.is_empty() {
                FacetStatus::Uncovered
            } else if on_facet.iter().any(|r| r.materials.is_empty()) {
                FacetStatus::Contradiction
            } else {
                let union: BTreeSet<&String> = on_facet.iter().flat_map(|r| &r.materials).collect();
                let mut names: Vec<String> = union.into_iter().cloned().collect();
                if names.len() == 1 {
                    FacetStatus::Resolved(names.remove(0))
                } else {
                    FacetStatus::Ambiguous(names)
                }
            };
            (f.id().to_string(), status)
        })
        .collect();

    let report = IdentifyReport {
        f_ghz: cfg.f_ghz,
        iterations,
        stopped_early,
        trajectories: outcomes,
        rps,
        facets,
        contradictions,
    };
    Ok(IdentifyOutcome { belief, registry, report })
}

impl IdentifyReport {
    /// True if any reflection point is contradictory or any measurement matched nothing.
    pub fn has_failures(&self) -> bool {
        !self.contradictions.is_empty()
            || self.rps.iter().any(|r| r.materials.is_empty())
            || self.trajectories.iter().any(|t| t.status == TrajectoryStatus::NoHypothesis)
    }

    pub fn facet_status(&self, facet_id: &str) -> Option<&FacetStatus> {
        self.facets.iter().find(|(id, _)| id == facet_id).map(|(_, s)| s)
    }

    /// Reflection points as CSV, one row per point, materials separated by `|`.
    pub fn to_csv(&self) -> String {
        let merged = self.trajectories.iter().filter(|t| t.status == TrajectoryStatus::Merged).count();
        let no_hyp = self.trajectories.iter().filter(|t| t.status == TrajectoryStatus::NoHypothesis).count();
        let mut doc = CsvDoc::new(&REPORT_COLUMNS)
            .meta("f_ghz", self.f_ghz)
            .meta("iterations", self.iterations)
            .meta("stopped_early", self.stopped_early)
            .meta("merged_trajectories", merged)
            .meta("no_hypothesis", no_hyp)
            .meta("contradictions", self.contradictions.len());
        for r in &self.rps {
            doc.push_row(vec![
                r.key.to_string(),
                r.facet_id.clone(),
                r.point.x.to_string(),
                r.point.y.to_string(),
                r.point.z.to_string(),
                r.materials.join("|"),
                r.status().to_string(),
            ]);
        }
        doc.render()
    }

    /// Human-readable summary.
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(
            out,
            "{} placement pair(s) processed{}",
            self.iterations,
            if self.stopped_early { ", stopped early" } else { "" }
        );
        out.push_str("\nreflection points:\n");
        for r in &self.rps {
            let mats = if r.materials.is_empty() { "-".to_string() } else { r.materials.join(" | ") };
            let _ = writeln!(
                out,
                "  {}={} on {} at ({:.3}, {:.3}, {:.3}) [{}]",
                r.key,
                mats,
                r.facet_id,
                r.point.x,
                r.point.y,
                r.point.z,
                r.status()
            );
        }
        out.push_str("\nfacets:\n");
        for (id, s) in &self.facets {
            let text = match s {
                FacetStatus::Resolved(m) => format!("resolved {m}"),
                FacetStatus::Ambiguous(ms) => format!("ambiguous {}", ms.join(" | ")),
                FacetStatus::Contradiction => "contradiction".to_string(),
                FacetStatus::Uncovered => "uncovered".to_string(),
            };
            let _ = writeln!(out, "  {id}: {text}");
        }
        out.push_str("\nmeasured trajectories:\n");
        for t in self.trajectories.iter().filter(|t| t.measurement.is_some()) {
            let m = t.measurement.as_ref().expect("filtered");
            let angles: Vec<String> = t.theta_deg.iter().map(|a| format!("{a:.1}")).collect();
            let _ = writeln!(
                out,
                "  {} via {} at {} deg, measured {} ± {} dB",
                t.id,
                t.facet_ids.join(" -> "),
                angles.join(", "),
                m.measured_total_rl,
                m.uncertainty_u
            );
            match &t.status {
                TrajectoryStatus::NoHypothesis => out.push_str("    no hypothesis: no sequence matches\n"),
                _ => {
                    let _ = writeln!(out, "    {} matched of {} sequences:", t.matched.len(), t.candidates.len());
                    for c in &t.matched {
                        let kept = if t.survivors.contains(c) { "" } else { "  (eliminated by merge)" };
                        let _ = writeln!(out, "      {c} total {:.2} dB{kept}", c.total_rl());
                    }
                    for (h, (lo, hi)) in t.hop_rl_spread_db.iter().enumerate() {
                        if hi > lo {
                            let _ = writeln!(out, "    hop {} RL spread {lo:.2}..{hi:.2} dB", h + 1);
                        }
                    }
                }
            }
        }
        let skipped = self.trajectories.iter().filter(|t| matches!(t.status, TrajectoryStatus::OutOfRange(_))).count();
        if skipped > 0 {
            let _ = writeln!(out, "\n{skipped} trajectory(ies) skipped: incident angle outside the database grid");
        }
        if !self.contradictions.is_empty() {
            out.push_str("\ncontradictions:\n");
            for (it, c) in &self.contradictions {
                let _ = writeln!(out, "  iteration {it}: {c}");
            }
        }
        out
    }
}
