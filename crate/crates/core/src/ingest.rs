//! Employment-record parsing, organization name canonicalization, rule-based
//! sector classification and trajectory assembly.
//!
//! Record CSV columns (header required):
//!
//! ```text
//! person_id,phd_school,grad_year,employer,start_year,end_year,title,is_postdoc
//! ```
//!
//! An empty `end_year` marks an ongoing job. Dates may carry month/day
//! suffixes (`2001-06-15`); only the year is kept.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::io::{Read, Write};

use crate::error::{Error, Result};
use crate::model::{CareerTrajectory, Corpus, EmploymentSpell, OrgId, Organization, PersonId, Sector, Year};

pub const RECORD_COLUMNS: [&str; 8] = [
    "person_id",
    "phd_school",
    "grad_year",
    "employer",
    "start_year",
    "end_year",
    "title",
    "is_postdoc",
];

const DEFAULT_RULES: &str = include_str!("default_rules.csv");

/// One data row of the record CSV, after field-level validation.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RawRecord {
    /// 1-based line number in the source file.
    pub line: u64,
    pub person_id: String,
    pub phd_school: String,
    pub grad_year: Year,
    pub employer: String,
    pub start_year: Year,
    pub end_year: Option<Year>,
    pub title: String,
    pub is_postdoc: bool,
}

/// A per-row problem. Rows with diagnostics are not turned into records.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Diagnostic {
    pub line: u64,
    pub message: String,
}

impl fmt::Display for Diagnostic {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "line {}: {}", self.line, self.message)
    }
}

#[derive(Debug, Clone, Default)]
pub struct ParseOutcome {
    pub records: Vec<RawRecord>,
    pub diagnostics: Vec<Diagnostic>,
}

/// Extracts the year from `2001`, `2001-06` or `2001-06-15`.
pub fn parse_year(raw: &str) -> Option<Year> {
    let raw = raw.trim();
    let digits = raw.get(..4)?;
    if !digits.bytes().all(|b| b.is_ascii_digit()) {
        return None;
    }
    let rest = &raw[4..];
    if !(rest.is_empty() || rest.starts_with('-') || rest.starts_with('/')) {
        return None;
    }
    digits.parse().ok()
}

/// Parses a record stream. Fails only if the stream itself is unreadable
/// or the header lacks a required column; bad rows become diagnostics.
pub fn parse_records<R: Read>(input: R) -> Result<ParseOutcome> {
    let mut reader = csv::ReaderBuilder::new()
        .flexible(true)
        .trim(csv::Trim::All)
        .from_reader(input);
    let headers = reader.headers()?.clone();
    let mut columns = [0usize; RECORD_COLUMNS.len()];
    for (slot, name) in columns.iter_mut().zip(RECORD_COLUMNS) {
        *slot = headers
            .iter()
            .position(|h| h.eq_ignore_ascii_case(name))
            .ok_or_else(|| Error::MissingColumn(name.to_string()))?;
    }

    let mut outcome = ParseOutcome::default();
    for row in reader.records() {
        let row = match row {
            Ok(row) => row,
            Err(err) => {
                let line = err.position().map_or(0, |p| p.line());
                if matches!(err.kind(), csv::ErrorKind::Io(_)) {
                    return Err(err.into());
                }
                outcome.diagnostics.push(Diagnostic {
                    line,
                    message: err.to_string(),
                });
                continue;
            }
        };
        let line = row.position().map_or(0, |p| p.line());
        let field = |i: usize| row.get(columns[i]).unwrap_or("");
        match record_from_fields(line, field) {
            Ok(record) => outcome.records.push(record),
            Err(message) => outcome.diagnostics.push(Diagnostic { line, message }),
        }
    }
    Ok(outcome)
}

fn record_from_fields<'a>(line: u64, field: impl Fn(usize) -> &'a str) -> std::result::Result<RawRecord, String> {
    let required = |i: usize| {
        let value = field(i);
        if value.is_empty() {
            Err(format!("missing `{}`", RECORD_COLUMNS[i]))
        } else {
            Ok(value.to_string())
        }
    };
    let year = |i: usize| {
        let value = field(i);
        parse_year(value).ok_or_else(|| format!("bad `{}` value `{value}`", RECORD_COLUMNS[i]))
    };

    let person_id = required(0)?;
    let phd_school = required(1)?;
    let grad_year = year(2)?;
    let employer = required(3)?;
    let start_year = year(4)?;
    let end_year = if field(5).is_empty() { None } else { Some(year(5)?) };
    let title = field(6).to_string();
    let is_postdoc = match field(7) {
        "0" => false,
        "1" => true,
        other => return Err(format!("`is_postdoc` must be 0 or 1, got `{other}`")),
    };

    if let Some(end) = end_year {
        if end < start_year {
            return Err(format!("end_year {end} precedes start_year {start_year}"));
        }
    }
    if start_year < grad_year - 1 {
        return Err(format!(
            "start_year {start_year} is more than a year before grad_year {grad_year}"
        ));
    }

    Ok(RawRecord {
        line,
        person_id,
        phd_school,
        grad_year,
        employer,
        start_year,
        end_year,
        title,
        is_postdoc,
    })
}

/// Trims, case-folds and collapses internal whitespace.
pub fn normalize_name(raw: &str) -> String {
    raw.split_whitespace()
        .map(str::to_lowercase)
        .collect::<Vec<_>>()
        .join(" ")
}

fn tokens(name: &str) -> Vec<String> {
    name.to_lowercase()
        .split(|c: char| !c.is_alphanumeric())
        .filter(|t| !t.is_empty())
        .map(str::to_string)
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PatternKind {
    /// Whole-name match (after normalization).
    Exact,
    /// Keyword match on word boundaries anywhere in the name.
    Keyword,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SectorRule {
    pub kind: PatternKind,
    pub pattern: String,
    pub sector: Sector,
}

impl SectorRule {
    fn matches(&self, canonical: &str) -> bool {
        match self.kind {
            PatternKind::Exact => normalize_name(&self.pattern) == normalize_name(canonical),
            PatternKind::Keyword => {
                let needle = tokens(&self.pattern);
                !needle.is_empty() && tokens(canonical).windows(needle.len()).any(|w| w == needle.as_slice())
            }
        }
    }
}

/// Alias map plus ordered sector rules (first match wins).
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct RuleSet {
    aliases: BTreeMap<String, OrgId>,
    sector_rules: Vec<SectorRule>,
}

impl RuleSet {
    pub fn new() -> Self {
        Self::default()
    }

    /// Rules shipped with the crate: common industry, academia and
    /// government keywords plus a handful of well-known aliases.
    pub fn defaults() -> Self {
        Self::from_reader(DEFAULT_RULES.as_bytes()).expect("bundled rule file is valid")
    }

    /// Reads a `kind,pattern,target` rule file.
    pub fn from_reader<R: Read>(input: R) -> Result<Self> {
        let mut reader = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(input);
        let mut rules = RuleSet::new();
        for row in reader.records() {
            let row = row?;
            let line = row.position().map_or(0, |p| p.line());
            let rule_err = |message: String| Error::Rule { line, message };
            if row.len() != 3 {
                return Err(rule_err(format!("expected 3 fields, got {}", row.len())));
            }
            let (kind, pattern, target) = (&row[0], &row[1], &row[2]);
            match kind.to_ascii_lowercase().as_str() {
                "alias" => rules.add_alias(pattern, target).map_err(|e| rule_err(e.to_string()))?,
                "exact" | "keyword" => {
                    let sector = target.parse().map_err(|e: Error| rule_err(e.to_string()))?;
                    let kind = if kind.eq_ignore_ascii_case("exact") {
                        PatternKind::Exact
                    } else {
                        PatternKind::Keyword
                    };
                    rules.add_sector_rule(kind, pattern, sector);
                }
                other => return Err(rule_err(format!("unknown rule kind `{other}`"))),
            }
        }
        Ok(rules)
    }

    /// Maps `raw` (and, implicitly, `canonical` itself) to `canonical`.
    pub fn add_alias(&mut self, raw: &str, canonical: &str) -> Result<()> {
        let canonical_id = OrgId::new(canonical.trim()).map_err(|_| Error::EmptyName)?;
        for key in [normalize_name(raw), normalize_name(canonical)] {
            if key.is_empty() {
                return Err(Error::EmptyName);
            }
            match self.aliases.get(&key) {
                Some(existing) if existing != &canonical_id => {
                    return Err(Error::InvalidParameter(format!(
                        "`{key}` already maps to `{existing}`, cannot also map to `{canonical_id}`"
                    )));
                }
                _ => {
                    self.aliases.insert(key, canonical_id.clone());
                }
            }
        }
        Ok(())
    }

    pub fn add_sector_rule(&mut self, kind: PatternKind, pattern: &str, sector: Sector) {
        self.sector_rules.push(SectorRule {
            kind,
            pattern: pattern.to_string(),
            sector,
        });
    }

    pub fn sector_rules(&self) -> &[SectorRule] {
        &self.sector_rules
    }

    /// Appends the rules of `other` after this set's rules.
    pub fn extend(&mut self, other: &RuleSet) -> Result<()> {
        for (key, id) in &other.aliases {
            self.add_alias(key, id.as_str())?;
        }
        self.sector_rules.extend(other.sector_rules.iter().cloned());
        Ok(())
    }

    /// Writes the rule set in the `kind,pattern,target` format.
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut writer = csv::Writer::from_writer(out);
        writer.write_record(["kind", "pattern", "target"])?;
        for (key, id) in &self.aliases {
            if key != &normalize_name(id.as_str()) {
                writer.write_record(["alias", key.as_str(), id.as_str()])?;
            } else {
                writer.write_record(["alias", id.as_str(), id.as_str()])?;
            }
        }
        for rule in &self.sector_rules {
            let kind = match rule.kind {
                PatternKind::Exact => "exact",
                PatternKind::Keyword => "keyword",
            };
            writer.write_record([kind, rule.pattern.as_str(), rule.sector.as_str()])?;
        }
        writer.flush()?;
        Ok(())
    }
}

/// Canonical organization id for a raw employer name: the alias target if
/// one matches, else the spelling of a matching exact sector rule, else the
/// normalized name itself.
pub fn canonicalize(raw_name: &str, rules: &RuleSet) -> Result<OrgId> {
    let key = normalize_name(raw_name);
    if key.is_empty() {
        return Err(Error::EmptyName);
    }
    if let Some(id) = rules.aliases.get(&key) {
        return Ok(id.clone());
    }
    if let Some(rule) = rules
        .sector_rules
        .iter()
        .find(|r| r.kind == PatternKind::Exact && normalize_name(&r.pattern) == key)
    {
        return OrgId::new(rule.pattern.trim());
    }
    OrgId::new(key)
}

pub fn classify_sector(canonical_id: &str, rules: &RuleSet) -> Result<Sector> {
    rules
        .sector_rules
        .iter()
        .find(|rule| rule.matches(canonical_id))
        .map(|rule| rule.sector)
        .ok_or_else(|| Error::Unclassified(canonical_id.to_string()))
}

/// Summary of a trajectory build.
#[derive(Debug, Clone, Default)]
pub struct IngestReport {
    pub persons: usize,
    pub spells: usize,
    /// Persons dropped because none of their spells survived.
    pub excluded_persons: Vec<String>,
    /// Organization names no sector rule matched; their spells are dropped.
    pub unclassified: BTreeSet<String>,
    pub diagnostics: Vec<Diagnostic>,
    pub organizations_by_sector: BTreeMap<Sector, usize>,
}

impl IngestReport {
    /// Share of organizations per sector, in [0, 1].
    pub fn sector_shares(&self) -> BTreeMap<Sector, f64> {
        let total: usize = self.organizations_by_sector.values().sum();
        self.organizations_by_sector
            .iter()
            .map(|(&s, &n)| (s, if total == 0 { 0.0 } else { n as f64 / total as f64 }))
            .collect()
    }
}

/// Groups records by person, canonicalizes and classifies employers, merges
/// contiguous spells at the same organization and validates the result.
pub fn build_trajectories(records: &[RawRecord], rules: &RuleSet, horizon: Year) -> Result<(Corpus, IngestReport)> {
    if let Some(max_start) = records.iter().map(|r| r.start_year).max() {
        if horizon < max_start {
            return Err(Error::InvalidParameter(format!(
                "horizon {horizon} precedes the latest start year {max_start}"
            )));
        }
    }

    let mut report = IngestReport::default();
    let mut organizations: BTreeMap<OrgId, Organization> = BTreeMap::new();
    let mut by_person: BTreeMap<&str, Vec<&RawRecord>> = BTreeMap::new();
    for record in records {
        by_person.entry(&record.person_id).or_default().push(record);
    }

    let mut trajectories = Vec::with_capacity(by_person.len());
    for (person_id, rows) in by_person {
        let first = rows[0];
        let phd_school = match canonicalize(&first.phd_school, rules) {
            Ok(id) => id,
            Err(err) => {
                report.diagnostics.push(Diagnostic {
                    line: first.line,
                    message: err.to_string(),
                });
                report.excluded_persons.push(person_id.to_string());
                continue;
            }
        };
        let mut spells = Vec::with_capacity(rows.len());
        for row in &rows {
            if row.grad_year != first.grad_year {
                report.diagnostics.push(Diagnostic {
                    line: row.line,
                    message: format!(
                        "grad_year {} conflicts with {} on line {}; keeping the first",
                        row.grad_year, first.grad_year, first.line
                    ),
                });
            }
            let org = match canonicalize(&row.employer, rules) {
                Ok(org) => org,
                Err(err) => {
                    report.diagnostics.push(Diagnostic {
                        line: row.line,
                        message: err.to_string(),
                    });
                    continue;
                }
            };
            let sector = match organizations.get(&org) {
                Some(known) => Some(known.sector),
                None => classify_sector(org.as_str(), rules).ok(),
            };
            let Some(sector) = sector else {
                report.unclassified.insert(org.to_string());
                continue;
            };
            organizations
                .entry(org.clone())
                .or_insert_with(|| Organization {
                    id: org.clone(),
                    sector,
                    aliases: BTreeSet::new(),
                })
                .aliases
                .insert(row.employer.trim().to_string());
            spells.push(EmploymentSpell {
                org,
                start_year: row.start_year,
                end_year: row.end_year,
                title: row.title.clone(),
                is_postdoc: row.is_postdoc,
            });
        }
        if spells.is_empty() {
            report.excluded_persons.push(person_id.to_string());
            continue;
        }
        let person = PersonId::new(person_id)?;
        let trajectory = CareerTrajectory::new(person, phd_school.clone(), first.grad_year, spells)?;
        let merged = merge_contiguous(trajectory.spells().to_vec());
        trajectories.push(CareerTrajectory::new(
            trajectory.person().clone(),
            phd_school,
            first.grad_year,
            merged,
        )?);
    }

    for org in organizations.values() {
        *report.organizations_by_sector.entry(org.sector).or_default() += 1;
    }
    report.persons = trajectories.len();
    report.spells = trajectories.iter().map(|t| t.spells().len()).sum();
    let corpus = Corpus::new(organizations, trajectories, horizon)?;
    Ok((corpus, report))
}

/// Merges a spell into an earlier one at the same organization when the
/// earlier one ends exactly in the year the later one starts and both agree
/// on postdoc status. Input must be sorted.
fn merge_contiguous(spells: Vec<EmploymentSpell>) -> Vec<EmploymentSpell> {
    let mut merged: Vec<EmploymentSpell> = Vec::with_capacity(spells.len());
    for spell in spells {
        let target = merged.iter_mut().rev().find(|prev| {
            prev.org == spell.org && prev.end_year == Some(spell.start_year) && prev.is_postdoc == spell.is_postdoc
        });
        match target {
            Some(prev) => {
                prev.end_year = spell.end_year;
                prev.title = spell.title;
            }
            None => merged.push(spell),
        }
    }
    merged
}

/// Writes a corpus back out in the record CSV schema.
pub fn write_records_csv<W: Write>(corpus: &Corpus, out: W) -> Result<()> {
    let mut writer = csv::Writer::from_writer(out);
    writer.write_record(RECORD_COLUMNS)?;
    for traj in corpus.trajectories() {
        let grad = traj.grad_year().to_string();
        for spell in traj.spells() {
            let start = spell.start_year.to_string();
            let end = spell.end_year.map(|e| e.to_string()).unwrap_or_default();
            writer.write_record([
                traj.person().as_str(),
                traj.phd_school().as_str(),
                grad.as_str(),
                spell.org.as_str(),
                start.as_str(),
                end.as_str(),
                spell.title.as_str(),
                if spell.is_postdoc { "1" } else { "0" },
            ])?;
        }
    }
    writer.flush()?;
    Ok(())
}

/// Parses and builds in one step, returning row diagnostics in the report.
pub fn load_corpus<R: Read>(input: R, rules: &RuleSet, horizon: Option<Year>) -> Result<(Corpus, IngestReport)> {
    let parsed = parse_records(input)?;
    let horizon = horizon.unwrap_or_else(|| {
        parsed
            .records
            .iter()
            .flat_map(|r| [Some(r.start_year), r.end_year])
            .flatten()
            .max()
            .unwrap_or(0)
    });
    let (corpus, mut report) = build_trajectories(&parsed.records, rules, horizon)?;
    let mut diagnostics = parsed.diagnostics;
    diagnostics.append(&mut report.diagnostics);
    diagnostics.sort_by_key(|d| d.line);
    report.diagnostics = diagnostics;
    Ok((corpus, report))
}
