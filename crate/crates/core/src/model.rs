//! Domain types shared across the crate.
//!
//! All values are plain data: once built they are not mutated in place, so
//! they can be shared freely between threads.

use std::borrow::Borrow;
use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};

/// Calendar year. All temporal reasoning happens at year granularity.
pub type Year = i32;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Sector {
    Industry,
    Academia,
    Government,
}

impl Sector {
    pub const ALL: [Sector; 3] = [Sector::Industry, Sector::Academia, Sector::Government];

    /// Small integer code used in feature exports.
    pub fn code(self) -> u8 {
        match self {
            Sector::Industry => 0,
            Sector::Academia => 1,
            Sector::Government => 2,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Sector::Industry => "industry",
            Sector::Academia => "academia",
            Sector::Government => "government",
        }
    }
}

impl fmt::Display for Sector {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Sector {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "industry" => Ok(Sector::Industry),
            "academia" => Ok(Sector::Academia),
            "government" => Ok(Sector::Government),
            other => Err(Error::InvalidParameter(format!("unknown sector `{other}`"))),
        }
    }
}

macro_rules! string_id {
    ($(#[$meta:meta])* $name:ident) => {
        $(#[$meta])*
        #[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
        pub struct $name(String);

        impl $name {
            pub fn new(id: impl Into<String>) -> Result<Self> {
                let id = id.into();
                if id.trim().is_empty() {
                    return Err(Error::EmptyId);
                }
                Ok(Self(id))
            }

            pub fn as_str(&self) -> &str {
                &self.0
            }
        }

        impl fmt::Display for $name {
            fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
                f.write_str(&self.0)
            }
        }

        impl Borrow<str> for $name {
            fn borrow(&self) -> &str {
                &self.0
            }
        }

        impl AsRef<str> for $name {
            fn as_ref(&self) -> &str {
                &self.0
            }
        }
    };
}

string_id!(
    /// Canonical organization name.
    OrgId
);
string_id!(
    /// Opaque person identifier.
    PersonId
);

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Organization {
    pub id: OrgId,
    pub sector: Sector,
    /// Raw names that canonicalized to `id`.
    pub aliases: BTreeSet<String>,
}

/// One job held by a person. `end_year == None` means the job is ongoing.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct EmploymentSpell {
    pub org: OrgId,
    pub start_year: Year,
    pub end_year: Option<Year>,
    pub title: String,
    pub is_postdoc: bool,
}

impl EmploymentSpell {
    pub fn is_open(&self) -> bool {
        self.end_year.is_none()
    }

    /// True if the person holds this job during `year`.
    pub fn covers(&self, year: Year) -> bool {
        self.start_year <= year && self.end_year.is_none_or(|end| end >= year)
    }

    /// True if the job is still held after the transitions of `year`,
    /// i.e. it is open or ends strictly later.
    pub fn held_past(&self, year: Year) -> bool {
        self.end_year.is_none_or(|end| end > year)
    }

    /// Duration in years as observable at `year`: open spells and spells
    /// ending later are clipped at `year`.
    pub fn duration_at(&self, year: Year) -> f64 {
        let end = self.end_year.map_or(year, |end| end.min(year));
        f64::from((end - self.start_year).max(0))
    }

    /// Sort key: start year, then end year with open spells last.
    fn order_key(&self) -> (Year, Year) {
        (self.start_year, self.end_year.unwrap_or(Year::MAX))
    }
}

/// A person's post-PhD employment history, spells sorted by start year
/// (ties by end year).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CareerTrajectory {
    person: PersonId,
    phd_school: OrgId,
    grad_year: Year,
    spells: Vec<EmploymentSpell>,
}

impl CareerTrajectory {
    pub fn new(person: PersonId, phd_school: OrgId, grad_year: Year, mut spells: Vec<EmploymentSpell>) -> Result<Self> {
        for spell in &spells {
            if let Some(end) = spell.end_year {
                if end < spell.start_year {
                    return Err(Error::InvalidSpell {
                        person: person.to_string(),
                        message: format!(
                            "spell at `{}` ends ({end}) before it starts ({})",
                            spell.org, spell.start_year
                        ),
                    });
                }
            }
            if spell.start_year < grad_year - 1 {
                return Err(Error::InvalidSpell {
                    person: person.to_string(),
                    message: format!(
                        "spell at `{}` starts in {}, more than a year before graduation ({grad_year})",
                        spell.org, spell.start_year
                    ),
                });
            }
        }
        spells.sort_by_key(EmploymentSpell::order_key);
        Ok(Self {
            person,
            phd_school,
            grad_year,
            spells,
        })
    }

    pub fn person(&self) -> &PersonId {
        &self.person
    }

    pub fn phd_school(&self) -> &OrgId {
        &self.phd_school
    }

    pub fn grad_year(&self) -> Year {
        self.grad_year
    }

    pub fn spells(&self) -> &[EmploymentSpell] {
        &self.spells
    }

    /// Start of the first post-PhD spell.
    pub fn career_start(&self) -> Option<Year> {
        self.spells.first().map(|s| s.start_year)
    }

    pub fn is_active(&self, year: Year) -> bool {
        self.spells.iter().any(|s| s.covers(year))
    }

    /// Index of the "most current" spell at `year`: among jobs still held
    /// after `year`, the one started earliest; failing that, the earliest
    /// started job that ends in `year`.
    pub fn current_spell_index(&self, year: Year) -> Option<usize> {
        let held = self
            .spells
            .iter()
            .position(|s| s.start_year <= year && s.held_past(year));
        held.or_else(|| self.spells.iter().position(|s| s.covers(year)))
    }

    pub fn current_spell(&self, year: Year) -> Option<&EmploymentSpell> {
        self.current_spell_index(year).map(|i| &self.spells[i])
    }

    /// The trajectory as observable at the end of `year`: later spells are
    /// dropped and spells ending after `year` become open.
    pub fn truncated_at(&self, year: Year) -> Option<Self> {
        let spells: Vec<_> = self
            .spells
            .iter()
            .filter(|s| s.start_year <= year)
            .map(|s| EmploymentSpell {
                end_year: s.end_year.filter(|&end| end <= year),
                ..s.clone()
            })
            .collect();
        if spells.is_empty() {
            return None;
        }
        Some(Self { spells, ..self.clone() })
    }
}

/// Validated collection of trajectories plus the organizations they reference.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Corpus {
    organizations: BTreeMap<OrgId, Organization>,
    trajectories: Vec<CareerTrajectory>,
    horizon: Year,
}

impl Corpus {
    /// Builds a corpus. Trajectories are stored sorted by person id.
    pub fn new(
        organizations: BTreeMap<OrgId, Organization>,
        mut trajectories: Vec<CareerTrajectory>,
        horizon: Year,
    ) -> Result<Self> {
        trajectories.sort_by(|a, b| a.person.cmp(&b.person));
        for pair in trajectories.windows(2) {
            if pair[0].person == pair[1].person {
                return Err(Error::DuplicatePerson(pair[0].person.to_string()));
            }
        }
        for traj in &trajectories {
            for spell in &traj.spells {
                if !organizations.contains_key(&spell.org) {
                    return Err(Error::UnknownOrganization(spell.org.to_string()));
                }
            }
        }
        Ok(Self {
            organizations,
            trajectories,
            horizon,
        })
    }

    pub fn organizations(&self) -> &BTreeMap<OrgId, Organization> {
        &self.organizations
    }

    pub fn trajectories(&self) -> &[CareerTrajectory] {
        &self.trajectories
    }

    /// Year through which open spells are assumed to extend.
    pub fn horizon(&self) -> Year {
        self.horizon
    }

    pub fn sector_of(&self, org: &OrgId) -> Option<Sector> {
        self.organizations.get(org).map(|o| o.sector)
    }

    pub fn trajectory(&self, person: &PersonId) -> Option<&CareerTrajectory> {
        self.trajectories
            .binary_search_by(|t| t.person.cmp(person))
            .ok()
            .map(|i| &self.trajectories[i])
    }

    pub fn spell_count(&self) -> usize {
        self.trajectories.iter().map(|t| t.spells.len()).sum()
    }

    /// First and last year touched by any spell start or end.
    pub fn year_span(&self) -> Option<(Year, Year)> {
        let mut lo = Year::MAX;
        let mut hi = Year::MIN;
        for spell in self.trajectories.iter().flat_map(|t| &t.spells) {
            lo = lo.min(spell.start_year);
            hi = hi.max(spell.end_year.unwrap_or(spell.start_year));
        }
        (lo <= hi).then_some((lo, hi))
    }

    /// The corpus as observable at the end of `year`. Persons without any
    /// spell starting by `year` are dropped; the horizon becomes `year`.
    pub fn truncated_at(&self, year: Year) -> Corpus {
        let trajectories: Vec<_> = self.trajectories.iter().filter_map(|t| t.truncated_at(year)).collect();
        let used: BTreeSet<&OrgId> = trajectories
            .iter()
            .flat_map(|t| t.spells.iter().map(|s| &s.org))
            .collect();
        let organizations = self
            .organizations
            .iter()
            .filter(|(id, _)| used.contains(id))
            .map(|(id, org)| (id.clone(), org.clone()))
            .collect();
        Corpus {
            organizations,
            trajectories,
            horizon: year,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum TransitionKind {
    /// The previous job ended before (or in the same year as) the new one began.
    Hard,
    /// The new job began while the previous one was still held.
    Soft,
}

impl TransitionKind {
    pub fn as_str(self) -> &'static str {
        match self {
            TransitionKind::Hard => "hard",
            TransitionKind::Soft => "soft",
        }
    }
}

/// A move of one person from `source` to `target` in `year`.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord)]
pub struct Transition {
    pub person: PersonId,
    pub source: OrgId,
    pub target: OrgId,
    pub year: Year,
    pub kind: TransitionKind,
    /// Either end of the move is a postdoc position.
    pub involves_postdoc: bool,
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct EdgeKey {
    pub source: OrgId,
    pub target: OrgId,
    pub year: Year,
}

/// Yearly weighted directed multigraph over organizations.
///
/// Inter-organization edges carry transition weights; `self_weights` carry
/// the number of PhDs employed at an organization in a year before that
/// year's transitions.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct FlowNetwork {
    years: BTreeSet<Year>,
    nodes: BTreeSet<OrgId>,
    edges: BTreeMap<EdgeKey, f64>,
    self_weights: BTreeMap<(OrgId, Year), f64>,
}

impl FlowNetwork {
    pub fn new(years: impl IntoIterator<Item = Year>) -> Self {
        Self {
            years: years.into_iter().collect(),
            ..Self::default()
        }
    }

    pub fn years(&self) -> &BTreeSet<Year> {
        &self.years
    }

    pub fn nodes(&self) -> &BTreeSet<OrgId> {
        &self.nodes
    }

    pub fn edges(&self) -> &BTreeMap<EdgeKey, f64> {
        &self.edges
    }

    pub fn self_weights(&self) -> &BTreeMap<(OrgId, Year), f64> {
        &self.self_weights
    }

    /// Adds `weight` to an inter-organization edge. Self-loops and years
    /// outside the network are rejected.
    pub fn add_edge_weight(&mut self, key: EdgeKey, weight: f64) -> Result<()> {
        if key.source == key.target {
            return Err(Error::InvalidParameter(format!(
                "self-loop on `{}` must be recorded as a self weight",
                key.source
            )));
        }
        if !(weight >= 0.0 && weight.is_finite()) {
            return Err(Error::InvalidParameter(format!("edge weight {weight}")));
        }
        if !self.years.contains(&key.year) {
            return Err(Error::InvalidParameter(format!(
                "year {} is outside the network",
                key.year
            )));
        }
        self.nodes.insert(key.source.clone());
        self.nodes.insert(key.target.clone());
        *self.edges.entry(key).or_insert(0.0) += weight;
        Ok(())
    }

    pub fn set_self_weight(&mut self, org: OrgId, year: Year, weight: f64) -> Result<()> {
        if !(weight >= 0.0 && weight.is_finite()) {
            return Err(Error::InvalidParameter(format!("self weight {weight}")));
        }
        if !self.years.contains(&year) {
            return Err(Error::InvalidParameter(format!("year {year} is outside the network")));
        }
        self.nodes.insert(org.clone());
        self.self_weights.insert((org, year), weight);
        Ok(())
    }

    pub fn weight(&self, source: &OrgId, target: &OrgId, year: Year) -> f64 {
        let key = EdgeKey {
            source: source.clone(),
            target: target.clone(),
            year,
        };
        self.edges.get(&key).copied().unwrap_or(0.0)
    }

    pub fn self_weight(&self, org: &OrgId, year: Year) -> f64 {
        self.self_weights.get(&(org.clone(), year)).copied().unwrap_or(0.0)
    }

    pub fn edges_in_year(&self, year: Year) -> impl Iterator<Item = (&EdgeKey, f64)> {
        self.edges
            .iter()
            .filter(move |(k, _)| k.year == year)
            .map(|(k, &w)| (k, w))
    }

    /// Per-organization (influx, outflux) in `year`, covering every node with
    /// an edge or a positive self weight that year.
    pub fn flux_in_year(&self, year: Year) -> BTreeMap<&OrgId, (f64, f64)> {
        let mut flux: BTreeMap<&OrgId, (f64, f64)> = BTreeMap::new();
        for ((org, y), &w) in &self.self_weights {
            if *y == year && w > 0.0 {
                flux.entry(org).or_default();
            }
        }
        for (key, w) in self.edges_in_year(year) {
            flux.entry(&key.target).or_default().0 += w;
            flux.entry(&key.source).or_default().1 += w;
        }
        flux
    }

    pub fn total_edge_weight(&self) -> f64 {
        self.edges.values().sum()
    }

    /// Same network with every edge weight multiplied by `factor(edge)`.
    /// Self weights are carried over unchanged.
    pub fn scale_edges(&self, mut factor: impl FnMut(&EdgeKey) -> f64) -> FlowNetwork {
        let edges = self.edges.iter().map(|(k, &w)| (k.clone(), w * factor(k))).collect();
        FlowNetwork { edges, ..self.clone() }
    }
}

/// Hub and authority scores and ordinal ranks for one organization.
#[derive(Debug, Clone, PartialEq)]
pub struct RankEntry {
    pub org: OrgId,
    pub hub: f64,
    pub hub_rank: usize,
    pub authority: f64,
    pub authority_rank: usize,
    /// Node present in the window but without any edge.
    pub isolated: bool,
}

/// HITS results for one time window; entries sorted by organization id.
#[derive(Debug, Clone, PartialEq)]
pub struct RankingTable {
    pub window: (Year, Year),
    pub entries: Vec<RankEntry>,
    pub converged: bool,
    pub iterations: usize,
}

impl RankingTable {
    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn get(&self, org: &OrgId) -> Option<&RankEntry> {
        self.entries
            .binary_search_by(|e| e.org.cmp(org))
            .ok()
            .map(|i| &self.entries[i])
    }

    pub fn top_hub(&self) -> Option<&RankEntry> {
        self.entries.iter().find(|e| e.hub_rank == 1)
    }

    pub fn top_authority(&self) -> Option<&RankEntry> {
        self.entries.iter().find(|e| e.authority_rank == 1)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn spell(org: &str, start: Year, end: Option<Year>) -> EmploymentSpell {
        EmploymentSpell {
            org: OrgId::new(org).unwrap(),
            start_year: start,
            end_year: end,
            title: String::new(),
            is_postdoc: false,
        }
    }

    fn person(spells: Vec<EmploymentSpell>) -> CareerTrajectory {
        CareerTrajectory::new(PersonId::new("p").unwrap(), OrgId::new("school").unwrap(), 1999, spells).unwrap()
    }

    #[test]
    fn spells_are_sorted_with_open_last_on_ties() {
        let t = person(vec![
            spell("b", 2005, None),
            spell("a", 2000, Some(2004)),
            spell("c", 2005, Some(2006)),
        ]);
        let orgs: Vec<_> = t.spells().iter().map(|s| s.org.as_str()).collect();
        assert_eq!(orgs, ["a", "c", "b"]);
    }

    #[test]
    fn rejects_inverted_and_pre_graduation_spells() {
        let err = CareerTrajectory::new(
            PersonId::new("p").unwrap(),
            OrgId::new("s").unwrap(),
            2000,
            vec![spell("a", 2005, Some(2004))],
        );
        assert!(matches!(err, Err(Error::InvalidSpell { .. })));
        let early = CareerTrajectory::new(
            PersonId::new("p").unwrap(),
            OrgId::new("s").unwrap(),
            2000,
            vec![spell("a", 1998, None)],
        );
        assert!(early.is_err());
        let one_year_before = CareerTrajectory::new(
            PersonId::new("p").unwrap(),
            OrgId::new("s").unwrap(),
            2000,
            vec![spell("a", 1999, None)],
        );
        assert!(one_year_before.is_ok());
    }

    #[test]
    fn current_spell_prefers_earliest_held_job() {
        let t = person(vec![spell("uni", 2000, None), spell("startup", 2005, None)]);
        assert_eq!(t.current_spell(2007).unwrap().org.as_str(), "uni");
        let t = person(vec![spell("a", 2000, Some(2004)), spell("b", 2004, None)]);
        assert_eq!(t.current_spell(2004).unwrap().org.as_str(), "b");
        let t = person(vec![spell("a", 2000, Some(2004))]);
        assert_eq!(t.current_spell(2004).unwrap().org.as_str(), "a");
        assert!(t.current_spell(2005).is_none());
    }

    #[test]
    fn duration_is_clipped_at_the_query_year() {
        let s = spell("a", 2000, Some(2010));
        assert_eq!(s.duration_at(2004), 4.0);
        assert_eq!(s.duration_at(2015), 10.0);
        assert_eq!(spell("a", 2007, None).duration_at(2010), 3.0);
    }

    #[test]
    fn truncation_hides_the_future() {
        let t = person(vec![spell("a", 2000, Some(2008)), spell("b", 2008, None)]);
        let cut = t.truncated_at(2005).unwrap();
        assert_eq!(cut.spells().len(), 1);
        assert!(cut.spells()[0].is_open());
        assert!(t.truncated_at(1990).is_none());
    }

    #[test]
    fn network_rejects_self_loops_and_negative_weights() {
        let mut net = FlowNetwork::new([2000]);
        let a = OrgId::new("a").unwrap();
        let key = EdgeKey {
            source: a.clone(),
            target: a.clone(),
            year: 2000,
        };
        assert!(net.add_edge_weight(key, 1.0).is_err());
        let key = EdgeKey {
            source: a.clone(),
            target: OrgId::new("b").unwrap(),
            year: 2000,
        };
        assert!(net.add_edge_weight(key.clone(), -1.0).is_err());
        net.add_edge_weight(key.clone(), 2.0).unwrap();
        net.add_edge_weight(key, 1.0).unwrap();
        assert_eq!(net.total_edge_weight(), 3.0);
    }
}
