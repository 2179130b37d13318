//! Transitions between employers and the yearly aggregate flow network.

use std::collections::{BTreeMap, BTreeSet};
use std::io::Write;

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::model::{
    CareerTrajectory, Corpus, EdgeKey, EmploymentSpell, FlowNetwork, OrgId, Transition, TransitionKind, Year,
};

/// Soft iff the prior job is still held after the new job's start year.
/// A prior job ending in the very year the new one starts counts as hard.
pub fn classify_transition(prior: &EmploymentSpell, new: &EmploymentSpell) -> TransitionKind {
    if prior.held_past(new.start_year) {
        TransitionKind::Soft
    } else {
        TransitionKind::Hard
    }
}

/// Index of the spell a person is moving away from when spell `j` starts:
/// the earliest-started earlier job still held, else the job that ended
/// most recently.
fn source_spell(spells: &[EmploymentSpell], j: usize) -> Option<usize> {
    let year = spells[j].start_year;
    let prior = &spells[..j];
    prior.iter().position(|s| s.held_past(year)).or_else(|| {
        prior
            .iter()
            .enumerate()
            .max_by_key(|(i, s)| (s.end_year.unwrap_or(Year::MAX), s.start_year, *i))
            .map(|(i, _)| i)
    })
}

pub fn person_transitions(traj: &CareerTrajectory) -> Vec<Transition> {
    let spells = traj.spells();
    (1..spells.len())
        .filter_map(|j| {
            let i = source_spell(spells, j)?;
            let (prior, new) = (&spells[i], &spells[j]);
            (prior.org != new.org).then(|| Transition {
                person: traj.person().clone(),
                source: prior.org.clone(),
                target: new.org.clone(),
                year: new.start_year,
                kind: classify_transition(prior, new),
                involves_postdoc: prior.is_postdoc || new.is_postdoc,
            })
        })
        .collect()
}

/// All transitions in the corpus, ordered by person then year.
pub fn derive_transitions(corpus: &Corpus) -> Vec<Transition> {
    corpus
        .trajectories()
        .par_iter()
        .map(person_transitions)
        .collect::<Vec<_>>()
        .into_iter()
        .flatten()
        .collect()
}

/// Drops transitions touching a postdoc position when `exclude_postdocs`.
pub fn filter_postdocs(transitions: &[Transition], exclude_postdocs: bool) -> Vec<Transition> {
    transitions
        .iter()
        .filter(|t| !(exclude_postdocs && t.involves_postdoc))
        .cloned()
        .collect()
}

/// Builds the yearly flow network over `years`.
///
/// Edge `(u, v, t)` counts transitions from `u` to `v` in year `t`. The self
/// weight of `(v, t)` counts distinct persons holding a job at `v` during
/// `t` that began before `t` (so arrivals of that year are excluded).
pub fn build_network(
    transitions: &[Transition],
    corpus: &Corpus,
    years: impl IntoIterator<Item = Year>,
) -> Result<FlowNetwork> {
    let years: BTreeSet<Year> = years.into_iter().collect();
    if years.is_empty() {
        return Err(Error::InvalidParameter("network needs at least one year".into()));
    }
    let mut net = FlowNetwork::new(years.iter().copied());

    let mut counts: BTreeMap<EdgeKey, u64> = BTreeMap::new();
    for t in transitions.iter().filter(|t| years.contains(&t.year)) {
        let key = EdgeKey {
            source: t.source.clone(),
            target: t.target.clone(),
            year: t.year,
        };
        *counts.entry(key).or_default() += 1;
    }
    for (key, n) in counts {
        net.add_edge_weight(key, n as f64)?;
    }

    let (&first, &last) = (years.first().unwrap(), years.last().unwrap());
    let mut staff: BTreeMap<(OrgId, Year), BTreeSet<&str>> = BTreeMap::new();
    for traj in corpus.trajectories() {
        for spell in traj.spells() {
            let from = (spell.start_year + 1).max(first);
            let to = spell.end_year.unwrap_or(corpus.horizon()).min(last);
            for year in from..=to {
                if years.contains(&year) {
                    staff
                        .entry((spell.org.clone(), year))
                        .or_default()
                        .insert(traj.person().as_str());
                }
            }
        }
    }
    for ((org, year), persons) in staff {
        net.set_self_weight(org, year, persons.len() as f64)?;
    }
    Ok(net)
}

/// Single-layer weighted digraph with nodes indexed `0..n` in sorted id order.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct WeightedDigraph {
    nodes: Vec<OrgId>,
    edges: Vec<(usize, usize, f64)>,
}

impl WeightedDigraph {
    /// Builds a graph from node ids and `(source, target, weight)` triples.
    /// Parallel edges are summed; endpoints missing from `nodes` are added.
    pub fn from_edges(
        nodes: impl IntoIterator<Item = OrgId>,
        edges: impl IntoIterator<Item = (OrgId, OrgId, f64)>,
    ) -> Result<Self> {
        let mut node_set: BTreeSet<OrgId> = nodes.into_iter().collect();
        let mut summed: BTreeMap<(OrgId, OrgId), f64> = BTreeMap::new();
        for (u, v, w) in edges {
            if !(w >= 0.0 && w.is_finite()) {
                return Err(Error::InvalidParameter(format!("edge weight {w}")));
            }
            node_set.insert(u.clone());
            node_set.insert(v.clone());
            *summed.entry((u, v)).or_insert(0.0) += w;
        }
        let nodes: Vec<OrgId> = node_set.into_iter().collect();
        let index = |id: &OrgId| nodes.binary_search(id).expect("node registered");
        let edges = summed.iter().map(|((u, v), &w)| (index(u), index(v), w)).collect();
        Ok(Self { nodes, edges })
    }

    pub fn nodes(&self) -> &[OrgId] {
        &self.nodes
    }

    pub fn edges(&self) -> &[(usize, usize, f64)] {
        &self.edges
    }

    pub fn node_count(&self) -> usize {
        self.nodes.len()
    }

    pub fn index_of(&self, id: &OrgId) -> Option<usize> {
        self.nodes.binary_search(id).ok()
    }

    pub fn weight(&self, source: &OrgId, target: &OrgId) -> f64 {
        match (self.index_of(source), self.index_of(target)) {
            (Some(u), Some(v)) => self
                .edges
                .iter()
                .filter(|&&(a, b, _)| a == u && b == v)
                .map(|&(_, _, w)| w)
                .sum(),
            _ => 0.0,
        }
    }

    pub fn total_weight(&self) -> f64 {
        self.edges.iter().map(|&(_, _, w)| w).sum()
    }

    /// Nodes with no incident edge of positive weight.
    pub fn isolated(&self) -> Vec<bool> {
        let mut touched = vec![false; self.nodes.len()];
        for &(u, v, w) in &self.edges {
            if w > 0.0 {
                touched[u] = true;
                touched[v] = true;
            }
        }
        touched.into_iter().map(|t| !t).collect()
    }
}

/// Sums yearly edge weights over the inclusive window. Organizations with a
/// positive self weight in the window are kept as (possibly isolated) nodes;
/// self weights themselves never become edges.
pub fn window_aggregate(net: &FlowNetwork, window: (Year, Year)) -> Result<WeightedDigraph> {
    let (start, end) = window;
    if start > end {
        return Err(Error::InvalidParameter(format!(
            "window start {start} is after end {end}"
        )));
    }
    let in_window = |year: Year| (start..=end).contains(&year);
    let nodes = net
        .self_weights()
        .iter()
        .filter(|((_, year), &w)| in_window(*year) && w > 0.0)
        .map(|((org, _), _)| org.clone());
    let edges = net
        .edges()
        .iter()
        .filter(|(k, _)| in_window(k.year))
        .map(|(k, &w)| (k.source.clone(), k.target.clone(), w));
    WeightedDigraph::from_edges(nodes, edges)
}

/// Writes `source,target,year,weight` rows. Integer weights are written as
/// integers; others with six fractional digits.
pub fn write_edges_csv<W: Write>(net: &FlowNetwork, out: W) -> Result<()> {
    let mut writer = csv::Writer::from_writer(out);
    writer.write_record(["source", "target", "year", "weight"])?;
    for (key, &w) in net.edges() {
        writer.write_record([
            key.source.as_str(),
            key.target.as_str(),
            &key.year.to_string(),
            &format_weight(w),
        ])?;
    }
    writer.flush()?;
    Ok(())
}

/// Writes `org,year,self_weight` rows.
pub fn write_self_weights_csv<W: Write>(net: &FlowNetwork, out: W) -> Result<()> {
    let mut writer = csv::Writer::from_writer(out);
    writer.write_record(["org", "year", "self_weight"])?;
    for ((org, year), &w) in net.self_weights() {
        writer.write_record([org.as_str(), &year.to_string(), &format_weight(w)])?;
    }
    writer.flush()?;
    Ok(())
}

pub(crate) fn format_weight(w: f64) -> String {
    if w.fract() == 0.0 && w.abs() < 1e15 {
        format!("{}", w as i64)
    } else {
        format!("{w:.6}")
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{Organization, PersonId, Sector};

    fn spell(org: &str, start: Year, end: Option<Year>) -> EmploymentSpell {
        EmploymentSpell {
            org: OrgId::new(org).unwrap(),
            start_year: start,
            end_year: end,
            title: String::new(),
            is_postdoc: false,
        }
    }

    fn traj(id: &str, spells: Vec<EmploymentSpell>) -> CareerTrajectory {
        let grad = spells.iter().map(|s| s.start_year).min().unwrap();
        CareerTrajectory::new(PersonId::new(id).unwrap(), OrgId::new("school").unwrap(), grad, spells).unwrap()
    }

    fn corpus(trajs: Vec<CareerTrajectory>, horizon: Year) -> Corpus {
        let orgs = trajs
            .iter()
            .flat_map(|t| t.spells().iter().map(|s| s.org.clone()))
            .map(|id| {
                (
                    id.clone(),
                    Organization {
                        id,
                        sector: Sector::Industry,
                        aliases: Default::default(),
                    },
                )
            })
            .collect();
        Corpus::new(orgs, trajs, horizon).unwrap()
    }

    fn org(s: &str) -> OrgId {
        OrgId::new(s).unwrap()
    }

    #[test]
    fn single_spell_has_no_transitions() {
        let t = traj("p", vec![spell("a", 2000, None)]);
        assert!(person_transitions(&t).is_empty());
    }

    #[test]
    fn sample_person_a_moves_oracle_to_google() {
        let t = traj(
            "A",
            vec![spell("Oracle", 1996, Some(2001)), spell("Google", 2001, None)],
        );
        let moves = person_transitions(&t);
        assert_eq!(moves.len(), 1);
        assert_eq!(moves[0].source, org("Oracle"));
        assert_eq!(moves[0].target, org("Google"));
        assert_eq!(moves[0].year, 2001);
        assert_eq!(moves[0].kind, TransitionKind::Hard);
    }

    #[test]
    fn earliest_held_job_stays_the_source() {
        // Uni 2000-, Startup 2005-, Lab 2008-2010 while Uni still held, then
        // Uni closes in 2011 and the next move leaves from Startup.
        let t = traj(
            "p",
            vec![
                spell("uni", 2000, Some(2011)),
                spell("startup", 2005, None),
                spell("lab", 2008, Some(2010)),
                spell("bigco", 2012, None),
            ],
        );
        let moves = person_transitions(&t);
        let summary: Vec<_> = moves
            .iter()
            .map(|m| (m.source.as_str(), m.target.as_str(), m.year, m.kind))
            .collect();
        assert_eq!(
            summary,
            vec![
                ("uni", "startup", 2005, TransitionKind::Soft),
                ("uni", "lab", 2008, TransitionKind::Soft),
                ("startup", "bigco", 2012, TransitionKind::Soft),
            ]
        );
    }

    #[test]
    fn gap_between_jobs_is_a_hard_move_from_the_last_job() {
        let t = traj(
            "p",
            vec![
                spell("a", 2000, Some(2003)),
                spell("b", 2001, Some(2002)),
                spell("c", 2006, None),
            ],
        );
        let moves = person_transitions(&t);
        assert_eq!(moves.len(), 2);
        assert_eq!(moves[1].source, org("a"));
        assert_eq!(moves[1].kind, TransitionKind::Hard);
    }

    #[test]
    fn rehire_at_same_org_is_not_a_transition() {
        let t = traj("p", vec![spell("a", 2000, Some(2003)), spell("a", 2006, None)]);
        assert!(person_transitions(&t).is_empty());
    }

    #[test]
    fn classify_boundaries() {
        let prior = spell("a", 2000, Some(2004));
        assert_eq!(
            classify_transition(&prior, &spell("b", 2005, None)),
            TransitionKind::Hard
        );
        let open = spell("a", 2000, None);
        assert_eq!(
            classify_transition(&open, &spell("b", 2005, None)),
            TransitionKind::Soft
        );
        let same_year = spell("a", 2000, Some(2005));
        assert_eq!(
            classify_transition(&same_year, &spell("b", 2005, None)),
            TransitionKind::Hard
        );
    }

    #[test]
    fn edges_count_movers_and_self_weights_count_stock() {
        let mut trajs: Vec<_> = (0..3)
            .map(|i| {
                traj(
                    &format!("m{i}"),
                    vec![spell("A", 2005, Some(2010)), spell("B", 2010, None)],
                )
            })
            .collect();
        trajs.push(traj("stay", vec![spell("A", 2008, None)]));
        let c = corpus(trajs, 2012);
        let moves = derive_transitions(&c);
        let net = build_network(&moves, &c, 2009..=2011).unwrap();
        assert_eq!(net.weight(&org("A"), &org("B"), 2010), 3.0);
        // Movers still count at A in 2010 (before transitions), not at B.
        assert_eq!(net.self_weight(&org("A"), 2010), 4.0);
        assert_eq!(net.self_weight(&org("B"), 2010), 0.0);
        assert_eq!(net.self_weight(&org("B"), 2011), 3.0);
        assert_eq!(net.self_weight(&org("A"), 2011), 1.0);
    }

    #[test]
    fn stayer_only_network_has_no_edges() {
        let c = corpus(vec![traj("p", vec![spell("A", 2008, Some(2011))])], 2012);
        let net = build_network(&derive_transitions(&c), &c, 2009..=2011).unwrap();
        assert!(net.edges().is_empty());
        for year in 2009..=2011 {
            assert_eq!(net.self_weight(&org("A"), year), 1.0);
        }
    }

    #[test]
    fn empty_year_set_is_rejected() {
        let c = corpus(vec![traj("p", vec![spell("A", 2008, None)])], 2012);
        assert!(build_network(&[], &c, std::iter::empty()).is_err());
    }

    fn three_edge_net() -> FlowNetwork {
        let mut net = FlowNetwork::new(1990..=2010);
        for (u, v, y, w) in [
            ("A", "B", 2001, 1.0),
            ("A", "B", 2002, 2.0),
            ("B", "C", 1994, 5.0),
            ("C", "A", 2006, 7.0),
            ("B", "C", 2005, 4.0),
        ] {
            net.add_edge_weight(
                EdgeKey {
                    source: org(u),
                    target: org(v),
                    year: y,
                },
                w,
            )
            .unwrap();
        }
        net.set_self_weight(org("D"), 2003, 10.0).unwrap();
        net
    }

    #[test]
    fn window_sums_yearly_weights() {
        let g = window_aggregate(&three_edge_net(), (2000, 2004)).unwrap();
        assert_eq!(g.weight(&org("A"), &org("B")), 3.0);
        assert_eq!(g.total_weight(), 3.0);
        // D only has a self weight: present, isolated, no self-loop.
        let d = g.index_of(&org("D")).unwrap();
        assert!(g.isolated()[d]);
        assert!(g.edges().iter().all(|&(u, v, _)| u != v));
    }

    #[test]
    fn window_before_data_is_empty() {
        let g = window_aggregate(&three_edge_net(), (1980, 1984)).unwrap();
        assert_eq!(g.node_count(), 0);
    }

    #[test]
    fn wide_window_matches_hand_sums() {
        // (A,B): 1 + 2 = 3; (B,C): 5 + 4 = 9; (C,A) in 2006 is outside.
        let g = window_aggregate(&three_edge_net(), (1995, 2005)).unwrap();
        assert_eq!(g.weight(&org("A"), &org("B")), 3.0);
        assert_eq!(g.weight(&org("B"), &org("C")), 4.0);
        let g = window_aggregate(&three_edge_net(), (1990, 2005)).unwrap();
        assert_eq!(g.weight(&org("B"), &org("C")), 9.0);
        assert_eq!(g.weight(&org("C"), &org("A")), 0.0);
        assert!(window_aggregate(&three_edge_net(), (2005, 2000)).is_err());
    }

    #[test]
    fn weights_format_compactly() {
        assert_eq!(format_weight(3.0), "3");
        assert_eq!(format_weight(0.5), "0.500000");
    }
}
