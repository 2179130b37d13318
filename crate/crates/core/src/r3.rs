//! Resource, retention and relative-growth reweighting of the flow network.
//!
//! Each transform multiplies inter-organization edge weights by a factor in
//! `[0, 1]`:
//!
//! * resources: mean over the edge's movers of `logistic((ℓ - ℓ̄) / α)`, where
//!   `ℓ` is a mover's career length, `ℓ̄` the mean career length of everyone
//!   active that year and `α = alpha_ratio · ℓ̄`;
//! * retention: `1 - logistic((r_v - r_s) / β)` on the source's outgoing
//!   edges, with `r_v` the source's mean spell duration, `r_s` its sector's
//!   and `β = beta_ratio · r_s`;
//! * growth: `exp(γ·g_v) / max_v' exp(γ·g_v')` on the target's incoming
//!   edges, with `g_v = [ln(in+1) - ln(out+1)] / [ln(self+1) + 1]`.
//!
//! All factors are computed from the untransformed network, so the unified
//! transform is the edgewise product of the three and does not depend on
//! the order of application.

use std::collections::BTreeMap;

use crate::error::{Error, Result};
use crate::flownet::derive_transitions;
use crate::model::{CareerTrajectory, Corpus, EdgeKey, FlowNetwork, OrgId, Sector, Year};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct R3Params {
    /// α as a fraction of the system mean career length.
    pub alpha_ratio: f64,
    /// β as a fraction of the sector mean retention.
    pub beta_ratio: f64,
    /// Steepness of the growth exponential.
    pub gamma: f64,
}

impl Default for R3Params {
    fn default() -> Self {
        Self {
            alpha_ratio: 0.5,
            beta_ratio: 0.5,
            gamma: 1.5,
        }
    }
}

impl R3Params {
    pub fn validate(&self) -> Result<()> {
        for (name, v) in [
            ("alpha_ratio", self.alpha_ratio),
            ("beta_ratio", self.beta_ratio),
            ("gamma", self.gamma),
        ] {
            if !(v > 0.0 && v.is_finite()) {
                return Err(Error::InvalidParameter(format!("{name} must be positive, got {v}")));
            }
        }
        Ok(())
    }
}

pub fn logistic(x: f64) -> f64 {
    1.0 / (1.0 + (-x).exp())
}

/// Sigmoid of `(value - midpoint) / (ratio · midpoint)`. A zero midpoint is
/// the limit of the curve: 0.5 at the midpoint, 1 above it.
fn relative_sigmoid(value: f64, midpoint: f64, ratio: f64) -> f64 {
    let scale = ratio * midpoint;
    if scale > 0.0 {
        logistic((value - midpoint) / scale)
    } else if value > midpoint {
        1.0
    } else if value < midpoint {
        0.0
    } else {
        0.5
    }
}

/// Years since the first post-PhD job started.
pub fn career_length(traj: &CareerTrajectory, year: Year) -> Result<f64> {
    let start = traj.career_start().ok_or_else(|| Error::BeforeCareerStart {
        person: traj.person().to_string(),
        year,
        start: year,
    })?;
    if year < start {
        return Err(Error::BeforeCareerStart {
            person: traj.person().to_string(),
            year,
            start,
        });
    }
    Ok(f64::from(year - start))
}

/// Mean career length over persons holding a job in `year`.
pub fn system_mean_career_length(corpus: &Corpus, year: Year) -> Result<f64> {
    let mut sum = 0.0;
    let mut n = 0usize;
    for traj in corpus.trajectories().iter().filter(|t| t.is_active(year)) {
        sum += career_length(traj, year)?;
        n += 1;
    }
    if n == 0 {
        return Err(Error::NoActivePersons(year));
    }
    Ok(sum / n as f64)
}

/// Resource score of a career of `career_length` years against the system mean.
pub fn r_src(career_length: f64, system_mean: f64, params: &R3Params) -> f64 {
    relative_sigmoid(career_length, system_mean, params.alpha_ratio)
}

/// Retention score of an organization with mean retention `org_mean` in a
/// sector with mean `sector_mean`.
pub fn r_tn_from_means(org_mean: f64, sector_mean: f64, params: &R3Params) -> f64 {
    relative_sigmoid(org_mean, sector_mean, params.beta_ratio)
}

/// Per-organization and per-sector spell durations, for retention means.
#[derive(Debug, Clone)]
pub struct RetentionIndex {
    by_org: BTreeMap<OrgId, Vec<(Year, Option<Year>)>>,
    by_sector: BTreeMap<Sector, Vec<(Year, Option<Year>)>>,
    sectors: BTreeMap<OrgId, Sector>,
}

fn mean_duration(spells: &[(Year, Option<Year>)], year: Year) -> Option<f64> {
    let mut sum = 0.0;
    let mut n = 0usize;
    for &(start, end) in spells.iter().filter(|(start, _)| *start <= year) {
        let end = end.map_or(year, |e| e.min(year));
        sum += f64::from(end - start);
        n += 1;
    }
    (n > 0).then(|| sum / n as f64)
}

impl RetentionIndex {
    pub fn new(corpus: &Corpus) -> Self {
        let mut by_org: BTreeMap<OrgId, Vec<_>> = BTreeMap::new();
        let mut by_sector: BTreeMap<Sector, Vec<_>> = BTreeMap::new();
        for spell in corpus.trajectories().iter().flat_map(|t| t.spells()) {
            let entry = (spell.start_year, spell.end_year);
            by_org.entry(spell.org.clone()).or_default().push(entry);
            if let Some(sector) = corpus.sector_of(&spell.org) {
                by_sector.entry(sector).or_default().push(entry);
            }
        }
        let sectors = corpus
            .organizations()
            .iter()
            .map(|(id, org)| (id.clone(), org.sector))
            .collect();
        Self {
            by_org,
            by_sector,
            sectors,
        }
    }

    /// Mean spell duration at `org` over spells started by `year`, with
    /// durations clipped at `year`.
    pub fn org_mean(&self, org: &OrgId, year: Year) -> Result<f64> {
        self.by_org
            .get(org)
            .and_then(|spells| mean_duration(spells, year))
            .ok_or_else(|| Error::NoRetentionHistory {
                org: org.to_string(),
                year,
            })
    }

    /// Same as [`RetentionIndex::org_mean`] pooled over every spell in the sector.
    pub fn sector_mean(&self, sector: Sector, year: Year) -> Option<f64> {
        self.by_sector
            .get(&sector)
            .and_then(|spells| mean_duration(spells, year))
    }

    pub fn sector_of(&self, org: &OrgId) -> Option<Sector> {
        self.sectors.get(org).copied()
    }

    /// Retention score; errors if the organization or its sector has no
    /// history by `year`.
    pub fn r_tn(&self, org: &OrgId, year: Year, params: &R3Params) -> Result<f64> {
        let sector = self
            .sector_of(org)
            .ok_or_else(|| Error::UnknownOrganization(org.to_string()))?;
        let own = self.org_mean(org, year)?;
        let pooled = self
            .sector_mean(sector, year)
            .ok_or_else(|| Error::NoRetentionHistory {
                org: sector.to_string(),
                year,
            })?;
        Ok(r_tn_from_means(own, pooled, params))
    }

    /// Retention score with the neutral fallback of 0.5 for organizations
    /// without history.
    pub fn r_tn_or_neutral(&self, org: &OrgId, year: Year, params: &R3Params) -> f64 {
        self.r_tn(org, year, params).unwrap_or(0.5)
    }
}

pub fn org_mean_retention(org: &OrgId, year: Year, corpus: &Corpus) -> Result<f64> {
    RetentionIndex::new(corpus).org_mean(org, year)
}

pub fn r_tn(org: &OrgId, year: Year, corpus: &Corpus, params: &R3Params) -> Result<f64> {
    RetentionIndex::new(corpus).r_tn(org, year, params)
}

/// Relative growth from raw flux totals (natural log).
pub fn relative_growth(influx: f64, outflux: f64, staff: f64) -> f64 {
    ((influx + 1.0).ln() - (outflux + 1.0).ln()) / ((staff + 1.0).ln() + 1.0)
}

pub fn r_gr(org: &OrgId, year: Year, net: &FlowNetwork) -> f64 {
    let mut influx = 0.0;
    let mut outflux = 0.0;
    for (key, w) in net.edges_in_year(year) {
        if &key.target == org {
            influx += w;
        }
        if &key.source == org {
            outflux += w;
        }
    }
    relative_growth(influx, outflux, net.self_weight(org, year))
}

/// Relative growth of every active node in `year`.
pub fn growth_scores(net: &FlowNetwork, year: Year) -> BTreeMap<OrgId, f64> {
    net.flux_in_year(year)
        .into_iter()
        .map(|(org, (influx, outflux))| {
            let g = relative_growth(influx, outflux, net.self_weight(org, year));
            (org.clone(), g)
        })
        .collect()
}

pub type EdgeFactors = BTreeMap<EdgeKey, f64>;

/// Mean resource score of each edge's movers.
pub fn resource_factors(net: &FlowNetwork, corpus: &Corpus, params: &R3Params) -> Result<EdgeFactors> {
    params.validate()?;
    let mut system_means: BTreeMap<Year, f64> = BTreeMap::new();
    let mut sums: BTreeMap<EdgeKey, (f64, usize)> = BTreeMap::new();
    for t in derive_transitions(corpus) {
        let key = EdgeKey {
            source: t.source,
            target: t.target,
            year: t.year,
        };
        if !net.edges().contains_key(&key) {
            continue;
        }
        let mean = match system_means.get(&t.year) {
            Some(&m) => m,
            None => {
                let m = system_mean_career_length(corpus, t.year)?;
                system_means.insert(t.year, m);
                m
            }
        };
        let traj = corpus
            .trajectory(&t.person)
            .ok_or_else(|| Error::UnknownPerson(t.person.to_string()))?;
        let score = r_src(career_length(traj, t.year)?, mean, params);
        let slot = sums.entry(key).or_insert((0.0, 0));
        slot.0 += score;
        slot.1 += 1;
    }
    net.edges()
        .keys()
        .map(|key| match sums.get(key) {
            Some(&(sum, n)) => Ok((key.clone(), sum / n as f64)),
            None => Err(Error::InvalidParameter(format!(
                "no movers in the corpus for edge {} -> {} in {}",
                key.source, key.target, key.year
            ))),
        })
        .collect()
}

/// `1 - R_TN(source, year)` for every edge.
pub fn retention_factors(net: &FlowNetwork, corpus: &Corpus, params: &R3Params) -> Result<EdgeFactors> {
    params.validate()?;
    let index = RetentionIndex::new(corpus);
    let mut cache: BTreeMap<(&OrgId, Year), f64> = BTreeMap::new();
    Ok(net
        .edges()
        .keys()
        .map(|key| {
            let score = *cache
                .entry((&key.source, key.year))
                .or_insert_with(|| index.r_tn_or_neutral(&key.source, key.year, params));
            (key.clone(), 1.0 - score)
        })
        .collect())
}

/// Max-normalized `exp(γ · R_GR(target, year))` for every edge.
pub fn growth_factors(net: &FlowNetwork, params: &R3Params) -> Result<EdgeFactors> {
    params.validate()?;
    let mut per_year: BTreeMap<Year, BTreeMap<OrgId, f64>> = BTreeMap::new();
    for &year in net.years() {
        let scores = growth_scores(net, year);
        let Some(max) = scores.values().copied().reduce(f64::max) else {
            continue;
        };
        // exp(γg) / max exp(γg') computed as exp(γ(g - max g)) to avoid overflow.
        let factors = scores
            .into_iter()
            .map(|(org, g)| (org, (params.gamma * (g - max)).exp()))
            .collect();
        per_year.insert(year, factors);
    }
    Ok(net
        .edges()
        .keys()
        .map(|key| {
            let factor = per_year
                .get(&key.year)
                .and_then(|m| m.get(&key.target))
                .copied()
                .expect("edge targets are active in their year");
            (key.clone(), factor)
        })
        .collect())
}

fn apply(net: &FlowNetwork, factors: &EdgeFactors) -> FlowNetwork {
    net.scale_edges(|key| factors[key])
}

pub fn transform_resources(net: &FlowNetwork, corpus: &Corpus, params: &R3Params) -> Result<FlowNetwork> {
    Ok(apply(net, &resource_factors(net, corpus, params)?))
}

pub fn transform_retention(net: &FlowNetwork, corpus: &Corpus, params: &R3Params) -> Result<FlowNetwork> {
    Ok(apply(net, &retention_factors(net, corpus, params)?))
}

pub fn transform_growth(net: &FlowNetwork, params: &R3Params) -> Result<FlowNetwork> {
    Ok(apply(net, &growth_factors(net, params)?))
}

/// Product of the three factor sets, all computed on `net` as given.
pub fn unified_factors(net: &FlowNetwork, corpus: &Corpus, params: &R3Params) -> Result<EdgeFactors> {
    let src = resource_factors(net, corpus, params)?;
    let tn = retention_factors(net, corpus, params)?;
    let gr = growth_factors(net, params)?;
    Ok(net
        .edges()
        .keys()
        .map(|k| (k.clone(), src[k] * tn[k] * gr[k]))
        .collect())
}

pub fn transform_unified(net: &FlowNetwork, corpus: &Corpus, params: &R3Params) -> Result<FlowNetwork> {
    Ok(apply(net, &unified_factors(net, corpus, params)?))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TransformMode {
    Resources,
    Retention,
    Growth,
    Unified,
}

impl std::str::FromStr for TransformMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "src" | "resources" => Ok(Self::Resources),
            "tn" | "retention" => Ok(Self::Retention),
            "gr" | "growth" => Ok(Self::Growth),
            "unified" | "r3" => Ok(Self::Unified),
            other => Err(Error::InvalidParameter(format!("unknown transform `{other}`"))),
        }
    }
}

pub fn transform(net: &FlowNetwork, corpus: &Corpus, params: &R3Params, mode: TransformMode) -> Result<FlowNetwork> {
    match mode {
        TransformMode::Resources => transform_resources(net, corpus, params),
        TransformMode::Retention => transform_retention(net, corpus, params),
        TransformMode::Growth => transform_growth(net, params),
        TransformMode::Unified => transform_unified(net, corpus, params),
    }
}
