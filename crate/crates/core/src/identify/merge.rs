//! Cross-trajectory elimination at shared reflection points.
//!
//! Propagation alone (intersect per-key material sets, drop candidates using
//! eliminated materials, repeat) can leave candidates that appear in no joint
//! assignment once two trajectories share more than one key or the sharing
//! graph has cycles. After propagation reaches its fixpoint, each group of
//! connected trajectories is therefore searched for joint assignments and only
//! candidates that take part in one are kept. The search is bounded; a group
//! that exceeds the bound keeps the propagation result.

use std::collections::{BTreeMap, BTreeSet};

use super::{RpKey, SequenceCandidate};

pub const DEFAULT_NODE_BUDGET: usize = 1_000_000;

/// Surviving sequences of one measured trajectory.
#[derive(Debug, Clone, PartialEq)]
pub struct TrajectoryEvidence {
    pub id: String,
    pub survivors: Vec<SequenceCandidate>,
}

impl TrajectoryEvidence {
    pub fn new(id: impl Into<String>, survivors: Vec<SequenceCandidate>) -> Self {
        Self { id: id.into(), survivors }
    }
}

/// A reflection point left with no possible material.
#[derive(Debug, Clone, PartialEq)]
pub struct Contradiction {
    pub key: RpKey,
    /// Trajectories that pass through the key.
    pub trajectories: Vec<String>,
}

impl std::fmt::Display for Contradiction {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "no material at {} is consistent with trajectories {}", self.key, self.trajectories.join(", "))
    }
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct BeliefState {
    /// Possible materials per covered reflection point.
    pub materials: BTreeMap<RpKey, BTreeSet<String>>,
    /// Surviving candidates per trajectory, in input order.
    pub survivors: Vec<TrajectoryEvidence>,
    pub contradictions: Vec<Contradiction>,
    /// Trajectories that entered the merge with no candidates and were left out.
    pub no_hypothesis: Vec<String>,
    /// False if some group fell back to propagation only.
    pub exact: bool,
}

impl BeliefState {
    pub fn material_set(&self, key: RpKey) -> Option<&BTreeSet<String>> {
        self.materials.get(&key)
    }

    /// The material at `key` if exactly one remains.
    pub fn resolved(&self, key: RpKey) -> Option<&str> {
        match self.materials.get(&key) {
            Some(s) if s.len() == 1 => s.iter().next().map(String::as_str),
            _ => None,
        }
    }

    /// Every covered key has exactly one material.
    pub fn all_resolved(&self) -> bool {
        !self.materials.is_empty() && self.materials.values().all(|s| s.len() == 1)
    }

    pub fn has_contradiction(&self) -> bool {
        !self.contradictions.is_empty()
    }

    pub fn survivors_of(&self, id: &str) -> Option<&[SequenceCandidate]> {
        self.survivors.iter().find(|t| t.id == id).map(|t| t.survivors.as_slice())
    }
}

pub fn merge_candidates(evidence: &[TrajectoryEvidence]) -> BeliefState {
    merge_with_budget(evidence, DEFAULT_NODE_BUDGET)
}

/// Merge with an explicit bound on search nodes per group of connected trajectories.
pub fn merge_with_budget(evidence: &[TrajectoryEvidence], node_budget: usize) -> BeliefState {
    let active: Vec<usize> = (0..evidence.len()).filter(|&t| !evidence[t].survivors.is_empty()).collect();
    let no_hypothesis = evidence.iter().filter(|t| t.survivors.is_empty()).map(|t| t.id.clone()).collect();

    let mut alive: Vec<Vec<bool>> =
        evidence.iter().map(|t| t.survivors.iter().map(SequenceCandidate::is_consistent).collect()).collect();
    let keys_of: Vec<BTreeSet<RpKey>> =
        evidence.iter().map(|t| t.survivors.iter().flat_map(SequenceCandidate::keys).collect()).collect();

    propagate(evidence, &active, &keys_of, &mut alive);

    let mut exact = true;
    for group in groups(&active, &keys_of) {
        if group.len() > 1 && !keep_supported(evidence, &group, &mut alive, node_budget) {
            exact = false;
        }
    }

    let materials = domains(evidence, &active, &keys_of, &alive);
    let contradictions = materials
        .iter()
        .filter(|(_, set)| set.is_empty())
        .map(|(&key, _)| Contradiction {
            key,
            trajectories: active.iter().filter(|&&t| keys_of[t].contains(&key)).map(|&t| evidence[t].id.clone()).collect(),
        })
        .collect();
    let survivors = evidence
        .iter()
        .zip(&alive)
        .map(|(t, keep)| TrajectoryEvidence {
            id: t.id.clone(),
            survivors: t.survivors.iter().zip(keep).filter(|(_, &k)| k).map(|(c, _)| c.clone()).collect(),
        })
        .collect();
    BeliefState { materials, survivors, contradictions, no_hypothesis, exact }
}

/// Materials at each key allowed by every trajectory covering it.
fn domains(
    evidence: &[TrajectoryEvidence],
    active: &[usize],
    keys_of: &[BTreeSet<RpKey>],
    alive: &[Vec<bool>],
) -> BTreeMap<RpKey, BTreeSet<String>> {
    let mut out: BTreeMap<RpKey, BTreeSet<String>> = BTreeMap::new();
    for &t in active {
        for &key in &keys_of[t] {
            let here: BTreeSet<String> = evidence[t]
                .survivors
                .iter()
                .zip(&alive[t])
                .filter(|(_, &a)| a)
                .filter_map(|(c, _)| c.material_at(key).map(str::to_string))
                .collect();
            out.entry(key).and_modify(|s| s.retain(|m| here.contains(m))).or_insert(here);
        }
    }
    out
}

fn propagate(evidence: &[TrajectoryEvidence], active: &[usize], keys_of: &[BTreeSet<RpKey>], alive: &mut [Vec<bool>]) {
    loop {
        let dom = domains(evidence, active, keys_of, alive);
        let mut changed = false;
        for &t in active {
            for (c, a) in evidence[t].survivors.iter().zip(alive[t].iter_mut()) {
                if *a && c.assignment().iter().any(|(k, m)| !dom[k].contains(m)) {
                    *a = false;
                    changed = true;
                }
            }
        }
        if !changed {
            return;
        }
    }
}

/// Connected groups of trajectories under key sharing, each in ascending order.
fn groups(active: &[usize], keys_of: &[BTreeSet<RpKey>]) -> Vec<Vec<usize>> {
    let mut group_of: Vec<Option<usize>> = vec![None; keys_of.len()];
    let mut out: Vec<Vec<usize>> = Vec::new();
    for &start in active {
        if group_of[start].is_some() {
            continue;
        }
        let g = out.len();
        let mut members = vec![start];
        group_of[start] = Some(g);
        let mut i = 0;
        while i < members.len() {
            let t = members[i];
            for &u in active {
                if group_of[u].is_none() && !keys_of[t].is_disjoint(&keys_of[u]) {
                    group_of[u] = Some(g);
                    members.push(u);
                }
            }
            i += 1;
        }
        members.sort_unstable();
        out.push(members);
    }
    out
}

struct Search<'a> {
    evidence: &'a [TrajectoryEvidence],
    order: Vec<usize>,
    alive: &'a [Vec<bool>],
    nodes: usize,
    budget: usize,
}

impl Search<'_> {
    /// Depth-first search for a joint assignment extending `fixed`. `Err` when out of budget.
    fn solve(&mut self, depth: usize, fixed: &mut BTreeMap<RpKey, String>, chosen: &mut Vec<(usize, usize)>) -> Result<bool, ()> {
        if depth == self.order.len() {
            return Ok(true);
        }
        let t = self.order[depth];
        if chosen.iter().any(|&(ct, _)| ct == t) {
            return self.solve(depth + 1, fixed, chosen);
        }
        for (ci, c) in self.evidence[t].survivors.iter().enumerate() {
            if !self.alive[t][ci] {
                continue;
            }
            self.nodes += 1;
            if self.nodes > self.budget {
                return Err(());
            }
            if c.assignment().iter().any(|(k, m)| fixed.get(k).is_some_and(|f| f != m)) {
                continue;
            }
            let added: Vec<RpKey> = c
                .assignment()
                .iter()
                .filter_map(|(k, m)| fixed.insert(*k, m.clone()).is_none().then_some(*k))
                .collect();
            chosen.push((t, ci));
            let found = self.solve(depth + 1, fixed, chosen)?;
            if found {
                return Ok(true);
            }
            chosen.pop();
            for k in added {
                fixed.remove(&k);
            }
        }
        Ok(false)
    }
}

/// Drops candidates of `group` that belong to no joint assignment. Returns false if
/// the search budget ran out, in which case `alive` is left unchanged.
fn keep_supported(evidence: &[TrajectoryEvidence], group: &[usize], alive: &mut [Vec<bool>], budget: usize) -> bool {
    let mut order = group.to_vec();
    order.sort_by_key(|&t| (alive[t].iter().filter(|&&a| a).count(), t));
    let mut supported: Vec<Vec<bool>> = alive.iter().map(|a| vec![false; a.len()]).collect();
    let mut search = Search { evidence, order, alive, nodes: 0, budget };

    for &t in group {
        for ci in 0..evidence[t].survivors.len() {
            if !search.alive[t][ci] || supported[t][ci] {
                continue;
            }
            let c = &evidence[t].survivors[ci];
            let mut fixed: BTreeMap<RpKey, String> = c.assignment().iter().cloned().collect();
            let mut chosen = vec![(t, ci)];
            match search.solve(0, &mut fixed, &mut chosen) {
                Ok(true) => {
                    for (st, sc) in chosen {
                        supported[st][sc] = true;
                    }
                }
                Ok(false) => {}
                Err(()) => return false,
            }
        }
    }
    for &t in group {
        for (a, s) in alive[t].iter_mut().zip(&supported[t]) {
            *a = *a && *s;
        }
    }
    true
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cand(pairs: &[(usize, &str)], total: f64) -> SequenceCandidate {
        let n = pairs.len() as f64;
        SequenceCandidate::new(
            pairs.iter().map(|&(k, m)| (RpKey(k), m.to_string())).collect(),
            vec![total / n; pairs.len()],
        )
        .unwrap()
    }

    fn set(items: &[&str]) -> BTreeSet<String> {
        items.iter().map(|s| s.to_string()).collect()
    }

    #[test]
    fn single_trajectory_unchanged() {
        let ev = vec![TrajectoryEvidence::new(
            "t1",
            vec![cand(&[(0, "plaster"), (1, "glass")], 19.0), cand(&[(0, "glass"), (1, "plaster")], 19.0)],
        )];
        let b = merge_candidates(&ev);
        assert_eq!(b.survivors, ev);
        assert_eq!(b.materials[&RpKey(0)], set(&["glass", "plaster"]));
        assert!(!b.all_resolved());
    }

    #[test]
    fn disjoint_sets_contradict() {
        let ev = vec![
            TrajectoryEvidence::new("a", vec![cand(&[(0, "wood")], 15.0)]),
            TrajectoryEvidence::new("b", vec![cand(&[(0, "glass")], 7.0)]),
        ];
        let b = merge_candidates(&ev);
        assert_eq!(b.contradictions.len(), 1);
        assert_eq!(b.contradictions[0].key, RpKey(0));
        assert_eq!(b.contradictions[0].trajectories, vec!["a", "b"]);
        assert!(b.survivors.iter().all(|t| t.survivors.is_empty()));
    }

    #[test]
    fn empty_evidence_is_left_out() {
        let ev = vec![
            TrajectoryEvidence::new("a", vec![cand(&[(0, "wood")], 15.0)]),
            TrajectoryEvidence::new("b", vec![]),
        ];
        let b = merge_candidates(&ev);
        assert_eq!(b.no_hypothesis, vec!["b"]);
        assert_eq!(b.resolved(RpKey(0)), Some("wood"));
        assert!(!b.has_contradiction());
    }

    #[test]
    fn cycle_needs_search() {
        // Each pair of keys is locally consistent but no joint assignment exists:
        // a says k0 == k1, b says k1 == k2, c says k0 != k2.
        let ev = vec![
            TrajectoryEvidence::new("a", vec![cand(&[(0, "x"), (1, "x")], 1.0), cand(&[(0, "y"), (1, "y")], 1.0)]),
            TrajectoryEvidence::new("b", vec![cand(&[(1, "x"), (2, "x")], 1.0), cand(&[(1, "y"), (2, "y")], 1.0)]),
            TrajectoryEvidence::new("c", vec![cand(&[(0, "x"), (2, "y")], 1.0), cand(&[(0, "y"), (2, "x")], 1.0)]),
        ];
        let b = merge_candidates(&ev);
        assert!(b.exact);
        assert_eq!(b.contradictions.len(), 3);

        let capped = merge_with_budget(&ev, 1);
        assert!(!capped.exact);
        assert_eq!(capped.materials[&RpKey(0)], set(&["x", "y"]));
    }

    #[test]
    fn inconsistent_candidate_dropped() {
        let ev = vec![TrajectoryEvidence::new(
            "loop",
            vec![cand(&[(0, "x"), (1, "y"), (0, "z")], 3.0), cand(&[(0, "x"), (1, "y"), (0, "x")], 3.0)],
        )];
        let b = merge_candidates(&ev);
        assert_eq!(b.survivors[0].survivors.len(), 1);
        assert_eq!(b.resolved(RpKey(0)), Some("x"));
    }
}
