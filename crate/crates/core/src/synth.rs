//! Deterministic corpora for verification: the four-organization example
//! (a stable company, a university, a declining company and a startup) and
//! random heavy-tailed populations.

use std::collections::{BTreeMap, BTreeSet};

use rand::distr::weighted::WeightedIndex;
use rand::distr::Distribution;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::flownet::{build_network, derive_transitions};
use crate::ingest::{PatternKind, RuleSet};
use crate::model::{
    CareerTrajectory, Corpus, EmploymentSpell, FlowNetwork, OrgId, Organization, PersonId, Sector, Year,
};

pub const STABLE: &str = "STABLE-LLC";
pub const UNI: &str = "UNI";
pub const DECLINE: &str = "DECLINE-LLC";
pub const STARTUP: &str = "STARTUP";

#[derive(Debug, Clone, PartialEq)]
pub struct ScenarioOrg {
    pub id: String,
    pub sector: Sector,
    /// Employed PhDs before the scenario year's transitions.
    pub staff: u32,
    /// Mean retention as a multiple of the sector mean.
    pub retention_ratio: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScenarioEdge {
    pub source: String,
    pub target: String,
    pub movers: u32,
    /// Career length of every mover on this edge.
    pub experience: i32,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScenarioSpec {
    pub year: Year,
    pub orgs: Vec<ScenarioOrg>,
    pub edges: Vec<ScenarioEdge>,
    pub system_mean_career_length: f64,
}

impl ScenarioSpec {
    pub fn validate(&self) -> Result<()> {
        let ids: BTreeSet<&str> = self.orgs.iter().map(|o| o.id.as_str()).collect();
        for e in &self.edges {
            for end in [&e.source, &e.target] {
                if !ids.contains(end.as_str()) {
                    return Err(Error::UnknownOrganization(end.clone()));
                }
            }
            if e.experience < 0 {
                return Err(Error::InvalidParameter(format!(
                    "negative experience on {} -> {}",
                    e.source, e.target
                )));
            }
        }
        if self
            .orgs
            .iter()
            .any(|o| o.retention_ratio.is_nan() || o.retention_ratio < 0.0)
        {
            return Err(Error::InvalidParameter("negative retention ratio".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone)]
pub struct Scenario {
    pub corpus: Corpus,
    pub network: FlowNetwork,
    pub spec: ScenarioSpec,
    /// Rules that classify the scenario's organizations on re-ingest.
    pub rules: RuleSet,
}

/// Persons holding a single spell `start..end` at `org`.
struct Cohort {
    org: &'static str,
    count: u32,
    start: Year,
    end: Option<Year>,
}

const YEAR: Year = 2010;

// Counts for the four-organization example, chosen to satisfy exactly:
//  * staff before transitions 100 / 20 / 30 / 3;
//  * UNI movers have 20 years of experience, all other movers 5;
//  * mean career length over everyone active in 2010 is exactly 10
//    (153 active persons, 1530 career-years);
//  * mean retention in 2010: STABLE-LLC 9 = industry mean, DECLINE-LLC 4.5
//    = half of it, UNI 13 = twice the academia mean of 6.5. Closed
//    historical spells, including two filler organizations, set the means.
const EDGES: &[(&str, &str, u32, i32)] = &[
    (DECLINE, STABLE, 10, 5),
    (DECLINE, STARTUP, 3, 5),
    (STABLE, STARTUP, 3, 5),
    (UNI, STABLE, 1, 20),
    (STABLE, UNI, 1, 20),
    (DECLINE, UNI, 1, 20),
];

const STAYERS: &[Cohort] = &[
    Cohort {
        org: STABLE,
        count: 66,
        start: 2000,
        end: None,
    },
    Cohort {
        org: STABLE,
        count: 30,
        start: 1999,
        end: None,
    },
    Cohort {
        org: UNI,
        count: 19,
        start: 1996,
        end: None,
    },
    Cohort {
        org: DECLINE,
        count: 16,
        start: 2002,
        end: None,
    },
    Cohort {
        org: STARTUP,
        count: 3,
        start: 2008,
        end: None,
    },
];

const HISTORY: &[Cohort] = &[
    Cohort {
        org: STABLE,
        count: 13,
        start: 1990,
        end: Some(1997),
    },
    Cohort {
        org: DECLINE,
        count: 52,
        start: 1999,
        end: Some(2002),
    },
    Cohort {
        org: "OTHER-LLC",
        count: 74,
        start: 1985,
        end: Some(2000),
    },
    Cohort {
        org: "OTHER-UNI",
        count: 26,
        start: 1995,
        end: Some(1996),
    },
];

const ORGS: &[(&str, Sector)] = &[
    (STABLE, Sector::Industry),
    (UNI, Sector::Academia),
    (DECLINE, Sector::Industry),
    (STARTUP, Sector::Industry),
    ("OTHER-LLC", Sector::Industry),
    ("OTHER-UNI", Sector::Academia),
];

fn title_for(sector: Sector) -> &'static str {
    match sector {
        Sector::Academia => "Professor",
        Sector::Industry => "Software Engineer",
        Sector::Government => "Research Scientist",
    }
}

fn org_id(s: &str) -> OrgId {
    OrgId::new(s).expect("non-empty literal")
}

fn spell(org: &str, sector: Sector, start: Year, end: Option<Year>) -> EmploymentSpell {
    EmploymentSpell {
        org: org_id(org),
        start_year: start,
        end_year: end,
        title: title_for(sector).to_string(),
        is_postdoc: false,
    }
}

/// The four-organization example with transitions in 2010 and a network
/// over 2006-2010.
pub fn four_org_scenario() -> Scenario {
    let sectors: BTreeMap<&str, Sector> = ORGS.iter().copied().collect();
    let mut trajectories = Vec::new();
    let mut next_id = 0u32;
    let mut person = |spells: Vec<EmploymentSpell>| {
        next_id += 1;
        let grad = spells[0].start_year;
        CareerTrajectory::new(
            PersonId::new(format!("p{next_id:04}")).expect("non-empty"),
            org_id("PHD-SCHOOL"),
            grad,
            spells,
        )
        .expect("scenario spells are valid")
    };
    for &(source, target, movers, experience) in EDGES {
        for _ in 0..movers {
            trajectories.push(person(vec![
                spell(source, sectors[source], YEAR - experience, Some(YEAR)),
                spell(target, sectors[target], YEAR, None),
            ]));
        }
    }
    for cohort in STAYERS.iter().chain(HISTORY) {
        for _ in 0..cohort.count {
            trajectories.push(person(vec![spell(
                cohort.org,
                sectors[cohort.org],
                cohort.start,
                cohort.end,
            )]));
        }
    }

    let organizations = ORGS
        .iter()
        .map(|&(id, sector)| {
            (
                org_id(id),
                Organization {
                    id: org_id(id),
                    sector,
                    aliases: BTreeSet::new(),
                },
            )
        })
        .collect();
    let corpus = Corpus::new(organizations, trajectories, YEAR).expect("scenario corpus is valid");
    let network =
        build_network(&derive_transitions(&corpus), &corpus, YEAR - 4..=YEAR).expect("scenario network is valid");

    let mut rules = RuleSet::new();
    for &(id, sector) in ORGS {
        rules.add_sector_rule(PatternKind::Exact, id, sector);
    }
    rules.add_sector_rule(PatternKind::Exact, "PHD-SCHOOL", Sector::Academia);

    let staff = |org: &str| network.self_weight(&org_id(org), YEAR) as u32;
    let spec = ScenarioSpec {
        year: YEAR,
        // STARTUP's retention is not constrained by the example.
        orgs: [(STABLE, 1.0), (UNI, 2.0), (DECLINE, 0.5), (STARTUP, 0.0)]
            .into_iter()
            .map(|(id, ratio)| ScenarioOrg {
                id: id.to_string(),
                sector: sectors[id],
                staff: staff(id),
                retention_ratio: ratio,
            })
            .collect(),
        edges: EDGES
            .iter()
            .map(|&(s, t, movers, experience)| ScenarioEdge {
                source: s.to_string(),
                target: t.to_string(),
                movers,
                experience,
            })
            .collect(),
        system_mean_career_length: 10.0,
    };
    Scenario {
        corpus,
        network,
        spec,
        rules,
    }
}

/// Parameters for [`random_population`].
#[derive(Debug, Clone, PartialEq)]
pub struct PopulationSpec {
    pub seed: u64,
    pub n_persons: usize,
    pub n_orgs: usize,
    /// Tail exponent of the employer-popularity CCDF. Org of popularity rank
    /// `r` is drawn with weight `r^(-1/tail_exponent)`.
    pub tail_exponent: f64,
    pub first_year: Year,
    pub horizon: Year,
    /// Yearly probability of changing jobs without a planted signal.
    pub hazard: f64,
    /// Fraction of moves that keep the old job one more year.
    pub soft_share: f64,
    /// Fraction of persons starting with a two-year academic postdoc.
    pub postdoc_share: f64,
    /// When set, the move probability depends only on tenure: `high` from
    /// `tenure` years on and `low` before.
    pub planted_signal: Option<PlantedSignal>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PlantedSignal {
    pub tenure: i32,
    pub low: f64,
    pub high: f64,
}

impl Default for PlantedSignal {
    fn default() -> Self {
        Self {
            tenure: 4,
            low: 0.02,
            high: 0.9,
        }
    }
}

impl Default for PopulationSpec {
    fn default() -> Self {
        Self {
            seed: 0,
            n_persons: 1000,
            n_orgs: 200,
            tail_exponent: 1.5,
            first_year: 1990,
            horizon: 2015,
            hazard: 0.2,
            soft_share: 0.2,
            postdoc_share: 0.1,
            planted_signal: None,
        }
    }
}

const TITLES: &[&str] = &[
    "Software Engineer",
    "Research Scientist",
    "Senior Engineer",
    "Principal Researcher",
    "Professor",
    "Assistant Professor",
    "Founder & CEO",
    "Visiting Researcher",
    "Developer",
    "Director of Engineering",
];

fn org_name(index: usize, sector: Sector) -> String {
    let suffix = match sector {
        Sector::Industry => "llc",
        Sector::Academia => "university",
        Sector::Government => "national laboratory",
    };
    format!("org{:04} {suffix}", index + 1)
}

fn check_probability(name: &str, p: f64) -> Result<()> {
    if (0.0..=1.0).contains(&p) {
        Ok(())
    } else {
        Err(Error::InvalidParameter(format!("{name} must be in [0, 1], got {p}")))
    }
}

/// Random corpus with Zipf employer popularity. Organizations are assigned
/// sectors in a fixed 6:3:1 industry/academia/government cycle.
pub fn random_population(spec: &PopulationSpec) -> Result<Corpus> {
    if !(spec.tail_exponent > 0.0 && spec.tail_exponent.is_finite()) {
        return Err(Error::InvalidParameter(format!(
            "tail exponent must be positive, got {}",
            spec.tail_exponent
        )));
    }
    if spec.n_persons == 0 || spec.n_orgs < 2 {
        return Err(Error::InvalidParameter(
            "need at least one person and two organizations".into(),
        ));
    }
    if spec.horizon <= spec.first_year {
        return Err(Error::InvalidParameter("horizon must follow the first year".into()));
    }
    check_probability("hazard", spec.hazard)?;
    check_probability("soft_share", spec.soft_share)?;
    check_probability("postdoc_share", spec.postdoc_share)?;
    if let Some(s) = spec.planted_signal {
        check_probability("signal low", s.low)?;
        check_probability("signal high", s.high)?;
    }

    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let cycle = [
        Sector::Industry,
        Sector::Academia,
        Sector::Industry,
        Sector::Government,
        Sector::Industry,
        Sector::Academia,
        Sector::Industry,
        Sector::Industry,
        Sector::Academia,
        Sector::Industry,
    ];
    let orgs: Vec<(OrgId, Sector)> = (0..spec.n_orgs)
        .map(|i| {
            let sector = cycle[i % cycle.len()];
            (org_id(&org_name(i, sector)), sector)
        })
        .collect();
    let academic: Vec<usize> = (0..orgs.len()).filter(|&i| orgs[i].1 == Sector::Academia).collect();
    let weights: Vec<f64> = (1..=spec.n_orgs)
        .map(|r| (r as f64).powf(-1.0 / spec.tail_exponent))
        .collect();
    let popularity = WeightedIndex::new(&weights).expect("positive weights");

    let mut trajectories = Vec::with_capacity(spec.n_persons);
    for p in 0..spec.n_persons {
        let grad = rng.random_range(spec.first_year..spec.horizon);
        let mut spells: Vec<EmploymentSpell> = Vec::new();
        let mut current = popularity.sample(&mut rng);
        let mut start = grad;
        let mut postdoc = false;
        if !academic.is_empty() && rng.random_bool(spec.postdoc_share) {
            current = academic[rng.random_range(0..academic.len())];
            postdoc = true;
        }
        let mut year = start + 1;
        while year <= spec.horizon {
            let tenure = year - start;
            let p_move = if postdoc {
                if tenure >= 2 {
                    1.0
                } else {
                    0.0
                }
            } else {
                match spec.planted_signal {
                    Some(s) if tenure >= s.tenure => s.high,
                    Some(s) => s.low,
                    None => spec.hazard,
                }
            };
            // Not the current employer, nor one whose soft-held spell still
            // reaches this year.
            let held = |i: usize| {
                i == current
                    || spells
                        .iter()
                        .any(|s| s.org == orgs[i].0 && s.end_year.is_none_or(|e| e >= year))
            };
            if rng.random_bool(p_move) && !(0..orgs.len()).all(held) {
                let mut next = popularity.sample(&mut rng);
                while held(next) {
                    next = popularity.sample(&mut rng);
                }
                let soft = rng.random_bool(spec.soft_share);
                let end = if soft {
                    Some(year + 1).filter(|&e| e <= spec.horizon)
                } else {
                    Some(year)
                };
                spells.push(random_spell(&orgs[current].0, start, end, postdoc, &mut rng));
                current = next;
                start = year;
                postdoc = false;
            }
            year += 1;
        }
        spells.push(random_spell(&orgs[current].0, start, None, postdoc, &mut rng));
        trajectories.push(CareerTrajectory::new(
            PersonId::new(format!("r{:06}", p + 1))?,
            orgs[academic.first().copied().unwrap_or(0)].0.clone(),
            grad,
            spells,
        )?);
    }

    let organizations = orgs
        .into_iter()
        .map(|(id, sector)| {
            (
                id.clone(),
                Organization {
                    id,
                    sector,
                    aliases: BTreeSet::new(),
                },
            )
        })
        .collect();
    Corpus::new(organizations, trajectories, spec.horizon)
}

fn random_spell(org: &OrgId, start: Year, end: Option<Year>, postdoc: bool, rng: &mut ChaCha8Rng) -> EmploymentSpell {
    let title = if postdoc {
        "Postdoctoral Researcher"
    } else {
        TITLES[rng.random_range(0..TITLES.len())]
    };
    EmploymentSpell {
        org: org.clone(),
        start_year: start,
        end_year: end,
        title: title.to_string(),
        is_postdoc: postdoc,
    }
}
