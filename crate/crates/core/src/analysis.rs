//! Descriptive and inferential statistics over corpora and transitions.

use std::collections::{BTreeMap, BTreeSet};
use std::io::Write;

use statrs::distribution::{ContinuousCDF, StudentsT};

use crate::error::{Error, Result};
use crate::model::{Corpus, OrgId, Sector, Transition, TransitionKind, Year};
use crate::r3::career_length;
use crate::rank::{rank_delta, RankHistory};

fn mean(xs: &[f64]) -> f64 {
    xs.iter().sum::<f64>() / xs.len() as f64
}

/// Sample variance (n - 1 denominator).
fn sample_variance(xs: &[f64]) -> f64 {
    let m = mean(xs);
    xs.iter().map(|x| (x - m).powi(2)).sum::<f64>() / (xs.len() as f64 - 1.0)
}

/// Two-sided tail probability of a Student t statistic.
fn two_sided_p(t: f64, df: f64) -> f64 {
    if t.is_infinite() {
        return 0.0;
    }
    let dist = StudentsT::new(0.0, 1.0, df).expect("positive degrees of freedom");
    (2.0 * dist.cdf(-t.abs())).min(1.0)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TTest {
    pub t: f64,
    pub p_value: f64,
    pub df: f64,
}

/// Welch's unequal-variance two-sample t-test, two-sided.
///
/// When both samples have zero variance, equal means give `t = 0, p = 1` and
/// different means give `t = ±∞, p = 0`.
pub fn t_test_two_sided(a: &[f64], b: &[f64]) -> Result<TTest> {
    for s in [a, b] {
        if s.len() < 2 {
            return Err(Error::TooFewObservations {
                needed: 2,
                got: s.len(),
            });
        }
    }
    let (na, nb) = (a.len() as f64, b.len() as f64);
    let (va, vb) = (sample_variance(a) / na, sample_variance(b) / nb);
    let diff = mean(a) - mean(b);
    let se2 = va + vb;
    if se2 == 0.0 {
        let df = na + nb - 2.0;
        return Ok(if diff == 0.0 {
            TTest {
                t: 0.0,
                p_value: 1.0,
                df,
            }
        } else {
            TTest {
                t: diff.signum() * f64::INFINITY,
                p_value: 0.0,
                df,
            }
        });
    }
    let t = diff / se2.sqrt();
    let df = se2 * se2 / (va * va / (na - 1.0) + vb * vb / (nb - 1.0));
    Ok(TTest {
        t,
        p_value: two_sided_p(t, df),
        df,
    })
}

pub fn pearson_r(x: &[f64], y: &[f64]) -> Result<f64> {
    if x.len() != y.len() {
        return Err(Error::InvalidParameter(format!(
            "length mismatch: {} vs {}",
            x.len(),
            y.len()
        )));
    }
    if x.len() < 2 {
        return Err(Error::TooFewObservations {
            needed: 2,
            got: x.len(),
        });
    }
    let (mx, my) = (mean(x), mean(y));
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let sxx: f64 = x.iter().map(|a| (a - mx).powi(2)).sum();
    let syy: f64 = y.iter().map(|b| (b - my).powi(2)).sum();
    if sxx == 0.0 || syy == 0.0 {
        return Err(Error::ZeroVariance);
    }
    Ok((sxy / (sxx.sqrt() * syy.sqrt())).clamp(-1.0, 1.0))
}

/// Fleiss' kappa from per-item category counts. Every row must sum to the
/// same number of raters. When chance agreement is 1 (every rating in one
/// category) kappa is defined as 1.
pub fn fleiss_kappa(ratings: &[Vec<u64>]) -> Result<f64> {
    let first = ratings.first().ok_or(Error::TooFewObservations { needed: 1, got: 0 })?;
    let k = first.len();
    let n = first.iter().sum::<u64>();
    if n < 2 {
        return Err(Error::InvalidParameter(format!(
            "need at least 2 raters per item, got {n}"
        )));
    }
    if let Some(i) = ratings
        .iter()
        .position(|row| row.len() != k || row.iter().sum::<u64>() != n)
    {
        return Err(Error::InvalidParameter(format!(
            "item {i} does not have {n} ratings over {k} categories"
        )));
    }
    let items = ratings.len() as f64;
    let nf = n as f64;
    let p_bar = ratings
        .iter()
        .map(|row| {
            let sq: f64 = row.iter().map(|&c| (c * c) as f64).sum();
            (sq - nf) / (nf * (nf - 1.0))
        })
        .sum::<f64>()
        / items;
    let p_e: f64 = (0..k)
        .map(|j| {
            let share = ratings.iter().map(|row| row[j] as f64).sum::<f64>() / (items * nf);
            share * share
        })
        .sum();
    if p_e >= 1.0 {
        return Ok(1.0);
    }
    Ok((p_bar - p_e) / (1.0 - p_e))
}

/// Ordinary least squares of `y` on `x` with a two-sided slope test.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LinearFit {
    pub slope: f64,
    pub intercept: f64,
    pub p_value: f64,
}

pub fn linear_fit(x: &[f64], y: &[f64]) -> Result<LinearFit> {
    if x.len() != y.len() {
        return Err(Error::InvalidParameter("x and y differ in length".into()));
    }
    if x.len() < 3 {
        return Err(Error::TooFewObservations {
            needed: 3,
            got: x.len(),
        });
    }
    let n = x.len() as f64;
    let (mx, my) = (mean(x), mean(y));
    let sxx: f64 = x.iter().map(|a| (a - mx).powi(2)).sum();
    if sxx == 0.0 {
        return Err(Error::ZeroVariance);
    }
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let ssr: f64 = x.iter().zip(y).map(|(a, b)| (b - intercept - slope * a).powi(2)).sum();
    let se = (ssr / (n - 2.0) / sxx).sqrt();
    let p_value = if se == 0.0 {
        if slope == 0.0 {
            1.0
        } else {
            0.0
        }
    } else {
        two_sided_p(slope / se, n - 2.0)
    };
    Ok(LinearFit {
        slope,
        intercept,
        p_value,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct SoftTrend {
    /// (year, percentage of that year's transitions that were soft).
    pub points: Vec<(Year, f64)>,
    pub fit: LinearFit,
}

/// Yearly soft-transition percentage over the inclusive range, fitted
/// linearly on year. Years without transitions are left out.
pub fn soft_trend(transitions: &[Transition], years: (Year, Year)) -> Result<SoftTrend> {
    let mut counts: BTreeMap<Year, (u64, u64)> = BTreeMap::new();
    for t in transitions.iter().filter(|t| (years.0..=years.1).contains(&t.year)) {
        let entry = counts.entry(t.year).or_default();
        entry.1 += 1;
        if t.kind == TransitionKind::Soft {
            entry.0 += 1;
        }
    }
    let points: Vec<(Year, f64)> = counts
        .into_iter()
        .map(|(y, (soft, all))| (y, 100.0 * soft as f64 / all as f64))
        .collect();
    let x: Vec<f64> = points.iter().map(|p| f64::from(p.0)).collect();
    let y: Vec<f64> = points.iter().map(|p| p.1).collect();
    let fit = linear_fit(&x, &y)?;
    Ok(SoftTrend { points, fit })
}

/// Points `(count, fraction of organizations with at least count distinct
/// employees)`, ascending in count.
pub fn employment_ccdf(corpus: &Corpus) -> Vec<(u64, f64)> {
    let mut employees: BTreeMap<&OrgId, BTreeSet<&str>> = BTreeMap::new();
    for traj in corpus.trajectories() {
        for spell in traj.spells() {
            employees.entry(&spell.org).or_default().insert(traj.person().as_str());
        }
    }
    let mut counts: Vec<u64> = employees.values().map(|s| s.len() as u64).collect();
    counts.sort_unstable();
    let total = counts.len() as f64;
    let mut out = Vec::new();
    for (i, &c) in counts.iter().enumerate() {
        if i == 0 || counts[i - 1] != c {
            out.push((c, (counts.len() - i) as f64 / total));
        }
    }
    out
}

/// Mean spell duration per sector, with spell ends clipped at `horizon`.
/// Spells starting after the horizon are ignored.
pub fn retention_by_sector(corpus: &Corpus, horizon: Year) -> BTreeMap<Sector, f64> {
    let mut sums: BTreeMap<Sector, (f64, usize)> = BTreeMap::new();
    for spell in corpus.trajectories().iter().flat_map(|t| t.spells()) {
        if spell.start_year > horizon {
            continue;
        }
        let Some(sector) = corpus.sector_of(&spell.org) else {
            continue;
        };
        let entry = sums.entry(sector).or_default();
        entry.0 += spell.duration_at(horizon);
        entry.1 += 1;
    }
    sums.into_iter().map(|(s, (sum, n))| (s, sum / n as f64)).collect()
}

#[derive(Debug, Clone, PartialEq)]
pub struct SectorCell {
    pub source: Sector,
    pub target: Sector,
    pub kind: TransitionKind,
    pub count: usize,
    /// Share of all counted transitions.
    pub share: f64,
    /// Mean rank delta over the transitions whose organizations appear in
    /// the preceding baseline window; `None` if none do.
    pub mean_delta_gf: Option<f64>,
    pub covered_gf: usize,
    pub mean_delta_r3: Option<f64>,
    pub covered_r3: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CrossSectorReport {
    pub cells: Vec<SectorCell>,
    pub total: usize,
    pub soft_share: f64,
    pub cross_sector: usize,
    /// Cross-sector transitions over all transitions.
    pub cross_sector_share: f64,
    /// Share of cross-sector transitions that end in industry.
    pub to_industry_share: f64,
}

/// Rank histories used to attach rank deltas to the cross-sector table.
pub struct DeltaSources<'a> {
    pub gf: &'a RankHistory,
    pub r3: &'a RankHistory,
    pub window_len: i32,
}

/// Transition counts by (source sector, target sector, kind).
pub fn cross_sector_report(
    transitions: &[Transition],
    corpus: &Corpus,
    deltas: Option<&DeltaSources<'_>>,
    exclude_postdocs: bool,
) -> Result<CrossSectorReport> {
    type Cell = (Vec<i64>, Vec<i64>, usize);
    let mut cells: BTreeMap<(Sector, Sector, TransitionKind), Cell> = BTreeMap::new();
    let mut total = 0usize;
    let mut soft = 0usize;
    for t in transitions {
        if exclude_postdocs && t.involves_postdoc {
            continue;
        }
        let sector = |org: &OrgId| {
            corpus
                .sector_of(org)
                .ok_or_else(|| Error::UnknownOrganization(org.to_string()))
        };
        let key = (sector(&t.source)?, sector(&t.target)?, t.kind);
        let cell = cells.entry(key).or_default();
        cell.2 += 1;
        total += 1;
        if t.kind == TransitionKind::Soft {
            soft += 1;
        }
        if let Some(d) = deltas {
            if let Some(x) = d.gf.preceding(t.year, d.window_len).and_then(|tb| rank_delta(t, tb)) {
                cell.0.push(x);
            }
            if let Some(x) = d.r3.preceding(t.year, d.window_len).and_then(|tb| rank_delta(t, tb)) {
                cell.1.push(x);
            }
        }
    }
    let share = |n: usize| if total == 0 { 0.0 } else { n as f64 / total as f64 };
    let mean_delta = |xs: &[i64]| (!xs.is_empty()).then(|| xs.iter().sum::<i64>() as f64 / xs.len() as f64);
    let cross: Vec<_> = cells.iter().filter(|((s, t, _), _)| s != t).collect();
    let cross_sector: usize = cross.iter().map(|(_, c)| c.2).sum();
    let to_industry: usize = cross
        .iter()
        .filter(|((_, t, _), _)| *t == Sector::Industry)
        .map(|(_, c)| c.2)
        .sum();
    Ok(CrossSectorReport {
        cells: cells
            .iter()
            .map(|(&(source, target, kind), (gf, r3, count))| SectorCell {
                source,
                target,
                kind,
                count: *count,
                share: share(*count),
                mean_delta_gf: mean_delta(gf),
                covered_gf: gf.len(),
                mean_delta_r3: mean_delta(r3),
                covered_r3: r3.len(),
            })
            .collect(),
        total,
        soft_share: share(soft),
        cross_sector,
        cross_sector_share: share(cross_sector),
        to_industry_share: if cross_sector == 0 {
            0.0
        } else {
            to_industry as f64 / cross_sector as f64
        },
    })
}

/// Career lengths at the move of persons entering industry from another
/// sector and of persons leaving industry for another sector.
pub fn industry_mover_career_lengths(transitions: &[Transition], corpus: &Corpus) -> Result<(Vec<f64>, Vec<f64>)> {
    let mut into = Vec::new();
    let mut out_of = Vec::new();
    for t in transitions {
        let (Some(s), Some(d)) = (corpus.sector_of(&t.source), corpus.sector_of(&t.target)) else {
            continue;
        };
        if s == d {
            continue;
        }
        let traj = corpus
            .trajectory(&t.person)
            .ok_or_else(|| Error::UnknownPerson(t.person.to_string()))?;
        let len = career_length(traj, t.year)?;
        if d == Sector::Industry {
            into.push(len);
        } else if s == Sector::Industry {
            out_of.push(len);
        }
    }
    Ok((into, out_of))
}

fn fmt_opt(x: Option<f64>) -> String {
    x.map(|v| format!("{v:.6}")).unwrap_or_default()
}

pub fn write_cross_sector_csv<W: Write>(report: &CrossSectorReport, out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record([
        "source_sector",
        "target_sector",
        "kind",
        "count",
        "share",
        "mean_rank_delta_gf",
        "covered_gf",
        "mean_rank_delta_r3",
        "covered_r3",
    ])?;
    for c in &report.cells {
        w.write_record([
            c.source.as_str(),
            c.target.as_str(),
            c.kind.as_str(),
            &c.count.to_string(),
            &format!("{:.6}", c.share),
            &fmt_opt(c.mean_delta_gf),
            &c.covered_gf.to_string(),
            &fmt_opt(c.mean_delta_r3),
            &c.covered_r3.to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_soft_trend_csv<W: Write>(trend: &SoftTrend, out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["year", "soft_percent"])?;
    for (y, pct) in &trend.points {
        w.write_record([y.to_string(), format!("{pct:.6}")])?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_ccdf_csv<W: Write>(points: &[(u64, f64)], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["employee_count", "fraction_at_least"])?;
    for (c, f) in points {
        w.write_record([c.to_string(), format!("{f:.6}")])?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_retention_csv<W: Write>(means: &BTreeMap<Sector, f64>, out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["sector", "mean_spell_years"])?;
    for (s, m) in means {
        w.write_record([s.as_str().to_string(), format!("{m:.6}")])?;
    }
    w.flush()?;
    Ok(())
}
