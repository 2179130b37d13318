//! Transition prediction: labels, features, a baseline learner and
//! stratified cross-validation.
//!
//! A prediction instance is a person employed in year `t`; the label says
//! whether they make a transition in `(t, t + n]`. Features only use
//! records up to `t`.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt::Debug;
use std::io::Write;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::flownet::{build_network, derive_transitions, person_transitions};
use crate::model::{CareerTrajectory, Corpus, FlowNetwork, OrgId, PersonId, RankingTable, TransitionKind, Year};
use crate::r3::{career_length, r_gr, r_src, system_mean_career_length, transform_unified, R3Params, RetentionIndex};
use crate::rank::{rank_windows, HitsConfig, RankHistory};

pub const IND_FEATURES: [&str; 19] = [
    "years_since_grad",
    "career_length",
    "num_employers",
    "avg_years_per_employer",
    "years_at_current",
    "num_jobs_industry",
    "num_jobs_not_in_industry",
    "num_inter_sector_transitions",
    "first_sector",
    "current_sector",
    "num_hard",
    "num_soft",
    "num_postdocs",
    "is_senior",
    "is_founder_or_ceo",
    "is_professor",
    "is_researcher",
    "is_engineer",
    "is_visiting",
];

const NETWORK_FEATURES: [&str; 8] = [
    "hub_score_t",
    "hub_rank_t",
    "auth_score_t",
    "auth_rank_t",
    "hub_score_start",
    "hub_rank_start",
    "auth_score_start",
    "auth_rank_start",
];

const R3_SCALARS: [&str; 3] = ["r_src", "r_tn", "r_gr"];

pub const IND_LEN: usize = IND_FEATURES.len();
pub const GF_LEN: usize = NETWORK_FEATURES.len();
pub const R3_LEN: usize = R3_SCALARS.len() + NETWORK_FEATURES.len();
pub const FEATURE_COUNT: usize = IND_LEN + GF_LEN + R3_LEN;

/// Column names in feature-vector order: IND, then G_f, then R³.
pub fn feature_names() -> Vec<String> {
    let mut names: Vec<String> = IND_FEATURES.iter().map(|s| s.to_string()).collect();
    names.extend(NETWORK_FEATURES.iter().map(|s| format!("gf_{s}")));
    names.extend(R3_SCALARS.iter().map(|s| s.to_string()));
    names.extend(NETWORK_FEATURES.iter().map(|s| format!("r3_{s}")));
    names
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum FeatureConfig {
    Ind,
    IndGf,
    IndR3,
    All,
}

impl FeatureConfig {
    pub const ALL: [FeatureConfig; 4] = [Self::Ind, Self::IndGf, Self::IndR3, Self::All];

    pub fn name(self) -> &'static str {
        match self {
            Self::Ind => "IND",
            Self::IndGf => "IND+Gf",
            Self::IndR3 => "IND+R3",
            Self::All => "ALL",
        }
    }

    /// Indices into the full feature vector.
    pub fn columns(self) -> Vec<usize> {
        let ind = 0..IND_LEN;
        let gf = IND_LEN..IND_LEN + GF_LEN;
        let r3 = IND_LEN + GF_LEN..FEATURE_COUNT;
        match self {
            Self::Ind => ind.collect(),
            Self::IndGf => ind.chain(gf).collect(),
            Self::IndR3 => ind.chain(r3).collect(),
            Self::All => (0..FEATURE_COUNT).collect(),
        }
    }
}

impl std::str::FromStr for FeatureConfig {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "ind" => Ok(Self::Ind),
            "ind+gf" | "ind-gf" | "gf" => Ok(Self::IndGf),
            "ind+r3" | "ind-r3" | "r3" => Ok(Self::IndR3),
            "all" => Ok(Self::All),
            other => Err(Error::InvalidParameter(format!("unknown feature group `{other}`"))),
        }
    }
}

/// `(person, label)` for everyone employed in `t`: does the person make a
/// transition in `(t, t + n]`?
pub fn make_labels(corpus: &Corpus, t: Year, n: u32) -> Vec<(PersonId, bool)> {
    let until = t + n as Year;
    corpus
        .trajectories()
        .iter()
        .filter(|traj| traj.is_active(t))
        .map(|traj| {
            let moves = person_transitions(traj).iter().any(|m| m.year > t && m.year <= until);
            (traj.person().clone(), moves)
        })
        .collect()
}

const TITLE_KEYWORDS: [&[&str]; 6] = [
    &[
        "senior",
        "principal",
        "staff",
        "distinguished",
        "director",
        "vp",
        "chief",
    ],
    &["founder", "ceo", "co-founder"],
    &["professor", "lecturer", "faculty"],
    &["research", "scientist"],
    &["engineer", "developer"],
    &["visiting"],
];

/// Senior, founder/CEO, professor, researcher, engineer and visiting flags.
/// A keyword matches any title word that starts with it, case-insensitively.
pub fn title_flags(title: &str) -> [bool; 6] {
    let lower = title.to_lowercase();
    let words: Vec<&str> = lower
        .split(|c: char| !c.is_alphanumeric() && c != '-')
        .filter(|w| !w.is_empty())
        .flat_map(|w| std::iter::once(w).chain(w.split('-')))
        .collect();
    TITLE_KEYWORDS.map(|keys| keys.iter().any(|k| words.iter().any(|w| w.starts_with(k))))
}

fn sector_code(corpus: &Corpus, org: &OrgId) -> Result<u8> {
    corpus
        .sector_of(org)
        .map(|s| s.code())
        .ok_or_else(|| Error::UnknownOrganization(org.to_string()))
}

/// The IND group for `traj` at `t`, from spells started by `t`.
pub fn features_individual(traj: &CareerTrajectory, corpus: &Corpus, t: Year) -> Result<[f64; IND_LEN]> {
    let inactive = || Error::Inactive {
        person: traj.person().to_string(),
        year: t,
    };
    if !traj.is_active(t) {
        return Err(inactive());
    }
    let seen = traj.truncated_at(t).ok_or_else(inactive)?;
    let spells = seen.spells();
    let current = seen.current_spell(t).ok_or_else(inactive)?;
    let length = career_length(&seen, t)?;
    let employers = spells.iter().map(|s| &s.org).collect::<BTreeSet<_>>().len() as f64;
    let mut industry_jobs = 0.0;
    for s in spells {
        if corpus.sector_of(&s.org) == Some(crate::model::Sector::Industry) {
            industry_jobs += 1.0;
        }
    }
    let moves = person_transitions(&seen);
    let mut inter_sector = 0.0;
    let (mut hard, mut soft) = (0.0, 0.0);
    for m in &moves {
        if sector_code(corpus, &m.source)? != sector_code(corpus, &m.target)? {
            inter_sector += 1.0;
        }
        match m.kind {
            TransitionKind::Hard => hard += 1.0,
            TransitionKind::Soft => soft += 1.0,
        }
    }
    let flags = title_flags(&current.title).map(|f| if f { 1.0 } else { 0.0 });
    Ok([
        f64::from(t - seen.grad_year()),
        length,
        employers,
        length / employers,
        f64::from(t - current.start_year),
        industry_jobs,
        spells.len() as f64 - industry_jobs,
        inter_sector,
        f64::from(sector_code(corpus, &spells[0].org)?),
        f64::from(sector_code(corpus, &current.org)?),
        hard,
        soft,
        spells.iter().filter(|s| s.is_postdoc).count() as f64,
        flags[0],
        flags[1],
        flags[2],
        flags[3],
        flags[4],
        flags[5],
    ])
}

/// Score and rank lookup with the sentinel `(0, N + 1)` for organizations
/// missing from the window.
fn rank_pair(table: Option<&RankingTable>, org: &OrgId, fallback_n: usize) -> [f64; 4] {
    match table {
        Some(tb) => match tb.get(org) {
            Some(e) => [e.hub, e.hub_rank as f64, e.authority, e.authority_rank as f64],
            None => {
                let missing = (tb.len() + 1) as f64;
                [0.0, missing, 0.0, missing]
            }
        },
        None => {
            let missing = (fallback_n + 1) as f64;
            [0.0, missing, 0.0, missing]
        }
    }
}

/// Window scores of `org` for the window ending at `t` and the window
/// ending at `job_start`.
pub fn features_network(
    org: &OrgId,
    t: Year,
    job_start: Year,
    history: &RankHistory,
    window_len: i32,
) -> [f64; GF_LEN] {
    let largest = history.tables().map(RankingTable::len).max().unwrap_or(0);
    let now = rank_pair(history.ending_at(t, window_len), org, largest);
    let then = rank_pair(history.ending_at(job_start, window_len), org, largest);
    [now[0], now[1], now[2], now[3], then[0], then[1], then[2], then[3]]
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FeatureSettings {
    pub window_len: i32,
    pub params: R3Params,
    pub hits: HitsConfig,
}

impl Default for FeatureSettings {
    fn default() -> Self {
        Self {
            window_len: 5,
            params: R3Params::default(),
            hits: HitsConfig::default(),
        }
    }
}

/// Precomputed networks and rankings for feature extraction over a corpus.
pub struct FeatureExtractor<'a> {
    corpus: &'a Corpus,
    settings: FeatureSettings,
    gf: FlowNetwork,
    gf_history: RankHistory,
    r3_history: RankHistory,
    retention: RetentionIndex,
    system_means: BTreeMap<Year, f64>,
}

impl<'a> FeatureExtractor<'a> {
    /// Builds the flow network over every corpus year and ranks each
    /// `window_len`-year window ending in those years.
    pub fn new(corpus: &'a Corpus, settings: FeatureSettings) -> Result<Self> {
        settings.params.validate()?;
        if settings.window_len < 1 {
            return Err(Error::InvalidParameter("window length must be at least 1".into()));
        }
        let (first, _) = corpus.year_span().ok_or(Error::EmptyGraph)?;
        let last = corpus.horizon();
        let gf = build_network(&derive_transitions(corpus), corpus, first..=last)?;
        let r3 = transform_unified(&gf, corpus, &settings.params)?;
        let windows: Vec<(Year, Year)> = (first..=last).map(|end| (end - settings.window_len + 1, end)).collect();
        let gf_history = RankHistory::new(rank_windows(&gf, &windows, &settings.hits)?.tables);
        let r3_history = RankHistory::new(rank_windows(&r3, &windows, &settings.hits)?.tables);
        let system_means = (first..=last)
            .filter_map(|y| system_mean_career_length(corpus, y).ok().map(|m| (y, m)))
            .collect();
        Ok(Self {
            corpus,
            settings,
            gf,
            gf_history,
            r3_history,
            retention: RetentionIndex::new(corpus),
            system_means,
        })
    }

    pub fn corpus(&self) -> &Corpus {
        self.corpus
    }

    /// All [`FEATURE_COUNT`] values for `person` at `t`.
    pub fn features(&self, person: &PersonId, t: Year) -> Result<Vec<f64>> {
        let traj = self
            .corpus
            .trajectory(person)
            .ok_or_else(|| Error::UnknownPerson(person.to_string()))?;
        let ind = features_individual(traj, self.corpus, t)?;
        let current = traj.current_spell(t).ok_or_else(|| Error::Inactive {
            person: person.to_string(),
            year: t,
        })?;
        let len = self.settings.window_len;
        let gf = features_network(&current.org, t, current.start_year, &self.gf_history, len);
        let r3_net = features_network(&current.org, t, current.start_year, &self.r3_history, len);
        let mean = *self.system_means.get(&t).ok_or(Error::NoActivePersons(t))?;
        let scalars = [
            r_src(career_length(traj, t)?, mean, &self.settings.params),
            self.retention.r_tn_or_neutral(&current.org, t, &self.settings.params),
            r_gr(&current.org, t, &self.gf),
        ];
        let mut out = Vec::with_capacity(FEATURE_COUNT);
        out.extend_from_slice(&ind);
        out.extend_from_slice(&gf);
        out.extend_from_slice(&scalars);
        out.extend_from_slice(&r3_net);
        Ok(out)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Instance {
    pub person: PersonId,
    pub t: Year,
    pub n: u32,
    pub label: bool,
    pub features: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    pub feature_names: Vec<String>,
    pub instances: Vec<Instance>,
}

impl Dataset {
    pub fn labels(&self) -> Vec<bool> {
        self.instances.iter().map(|i| i.label).collect()
    }

    /// Rows restricted to `columns`.
    pub fn matrix(&self, columns: &[usize]) -> Vec<Vec<f64>> {
        self.instances
            .iter()
            .map(|i| columns.iter().map(|&c| i.features[c]).collect())
            .collect()
    }

    pub fn positive_share(&self) -> f64 {
        if self.instances.is_empty() {
            return 0.0;
        }
        self.instances.iter().filter(|i| i.label).count() as f64 / self.instances.len() as f64
    }
}

/// Instances for every person employed in each `t` of the inclusive range,
/// labeled with horizon `n`.
pub fn build_dataset(corpus: &Corpus, years: (Year, Year), n: u32, settings: FeatureSettings) -> Result<Dataset> {
    if n == 0 {
        return Err(Error::InvalidParameter("horizon n must be at least 1".into()));
    }
    if years.0 > years.1 {
        return Err(Error::InvalidParameter("empty prediction year range".into()));
    }
    if years.1 + n as Year > corpus.horizon() {
        return Err(Error::InvalidParameter(format!(
            "labels for {} need data through {}, but the corpus ends in {}",
            years.1,
            years.1 + n as Year,
            corpus.horizon()
        )));
    }
    let extractor = FeatureExtractor::new(corpus, settings)?;
    let cases: Vec<(PersonId, bool, Year)> = (years.0..=years.1)
        .flat_map(|t| make_labels(corpus, t, n).into_iter().map(move |(p, l)| (p, l, t)))
        .collect();
    let instances = cases
        .into_par_iter()
        .map(|(person, label, t)| {
            let features = extractor.features(&person, t)?;
            Ok(Instance {
                person,
                t,
                n,
                label,
                features,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(Dataset {
        feature_names: feature_names(),
        instances,
    })
}

pub fn write_dataset_csv<W: Write>(dataset: &Dataset, out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    let mut header = vec!["person_id".to_string(), "t".into(), "n".into(), "label".into()];
    header.extend(dataset.feature_names.iter().cloned());
    w.write_record(&header)?;
    for i in &dataset.instances {
        let mut row = vec![
            i.person.to_string(),
            i.t.to_string(),
            i.n.to_string(),
            u8::from(i.label).to_string(),
        ];
        row.extend(i.features.iter().map(|x| format!("{x}")));
        w.write_record(&row)?;
    }
    w.flush()?;
    Ok(())
}

/// Probability that a random positive scores above a random negative, ties
/// counting one half.
pub fn auc(labels: &[bool], scores: &[f64]) -> Result<f64> {
    if labels.len() != scores.len() {
        return Err(Error::InvalidParameter("labels and scores differ in length".into()));
    }
    let pos = labels.iter().filter(|&&l| l).count();
    let neg = labels.len() - pos;
    if pos == 0 || neg == 0 {
        return Err(Error::SingleClass);
    }
    let mut order: Vec<usize> = (0..scores.len()).collect();
    order.sort_by(|&a, &b| scores[a].total_cmp(&scores[b]));
    // Midranks over tied scores, 1-based.
    let mut rank_sum_pos = 0.0;
    let mut i = 0;
    while i < order.len() {
        let mut j = i;
        while j + 1 < order.len() && scores[order[j + 1]] == scores[order[i]] {
            j += 1;
        }
        let midrank = (i + j) as f64 / 2.0 + 1.0;
        rank_sum_pos += midrank * order[i..=j].iter().filter(|&&k| labels[k]).count() as f64;
        i = j + 1;
    }
    let (p, n) = (pos as f64, neg as f64);
    Ok((rank_sum_pos - p * (p + 1.0) / 2.0) / (p * n))
}

/// F1 score; 0 when there are no true positives.
pub fn f1(labels: &[bool], predictions: &[bool]) -> f64 {
    let mut tp = 0.0;
    let mut fp = 0.0;
    let mut fn_ = 0.0;
    for (&l, &p) in labels.iter().zip(predictions) {
        match (l, p) {
            (true, true) => tp += 1.0,
            (false, true) => fp += 1.0,
            (true, false) => fn_ += 1.0,
            _ => {}
        }
    }
    if tp == 0.0 {
        0.0
    } else {
        2.0 * tp / (2.0 * tp + fp + fn_)
    }
}

/// A learner pluggable into [`cross_validate`].
pub trait Classifier: Sync {
    type Params: Clone + Debug + Send + Sync;
    type Model: Send;

    fn fit(&self, x: &[Vec<f64>], y: &[bool], params: &Self::Params, seed: u64) -> Result<Self::Model>;

    fn predict_proba(&self, model: &Self::Model, x: &[Vec<f64>]) -> Result<Vec<f64>>;
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LogisticParams {
    pub l2: f64,
    pub learning_rate: f64,
    pub iterations: usize,
    /// Weight of positive examples relative to negatives.
    pub pos_weight: f64,
}

impl Default for LogisticParams {
    fn default() -> Self {
        Self {
            l2: 1e-3,
            learning_rate: 0.5,
            iterations: 500,
            pos_weight: 1.0,
        }
    }
}

/// L2-regularized logistic regression on standardized features, trained by
/// full-batch gradient descent.
#[derive(Debug, Clone, Copy, Default)]
pub struct LogisticBaseline;

#[derive(Debug, Clone, PartialEq)]
pub struct LogisticModel {
    pub mean: Vec<f64>,
    pub scale: Vec<f64>,
    pub weights: Vec<f64>,
    pub bias: f64,
}

fn check_finite(x: &[Vec<f64>]) -> Result<usize> {
    let width = x.first().map_or(0, Vec::len);
    for (row, values) in x.iter().enumerate() {
        if values.len() != width {
            return Err(Error::InvalidParameter(format!(
                "row {row} has {} columns, expected {width}",
                values.len()
            )));
        }
        if let Some(column) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFinite { row, column });
        }
    }
    Ok(width)
}

fn sigmoid(z: f64) -> f64 {
    if z >= 0.0 {
        1.0 / (1.0 + (-z).exp())
    } else {
        let e = z.exp();
        e / (1.0 + e)
    }
}

/// Weighted mean log-loss plus `l2/2 · |w|²`, and its gradient with respect
/// to the weights and the bias, on already standardized rows.
pub fn logistic_loss_gradient(
    x: &[Vec<f64>],
    y: &[bool],
    weights: &[f64],
    bias: f64,
    params: &LogisticParams,
) -> (f64, Vec<f64>, f64) {
    let mut loss = 0.0;
    let mut grad = vec![0.0; weights.len()];
    let mut grad_bias = 0.0;
    let mut total = 0.0;
    for (row, &label) in x.iter().zip(y) {
        let c = if label { params.pos_weight } else { 1.0 };
        let z = bias + row.iter().zip(weights).map(|(a, b)| a * b).sum::<f64>();
        // log(1 + e^z) - y·z, computed stably.
        let softplus = if z > 0.0 {
            z + (-z).exp().ln_1p()
        } else {
            z.exp().ln_1p()
        };
        loss += c * (softplus - if label { z } else { 0.0 });
        let r = c * (sigmoid(z) - if label { 1.0 } else { 0.0 });
        for (g, a) in grad.iter_mut().zip(row) {
            *g += r * a;
        }
        grad_bias += r;
        total += c;
    }
    let norm2: f64 = weights.iter().map(|w| w * w).sum();
    let loss = loss / total + 0.5 * params.l2 * norm2;
    for (g, w) in grad.iter_mut().zip(weights) {
        *g = *g / total + params.l2 * w;
    }
    (loss, grad, grad_bias / total)
}

impl LogisticBaseline {
    fn standardize(model_mean: &[f64], scale: &[f64], x: &[Vec<f64>]) -> Vec<Vec<f64>> {
        x.iter()
            .map(|row| {
                row.iter()
                    .zip(model_mean.iter().zip(scale))
                    .map(|(v, (m, s))| (v - m) / s)
                    .collect()
            })
            .collect()
    }
}

impl Classifier for LogisticBaseline {
    type Params = LogisticParams;
    type Model = LogisticModel;

    /// Deterministic; `seed` is unused because training starts at zero.
    fn fit(&self, x: &[Vec<f64>], y: &[bool], params: &LogisticParams, _seed: u64) -> Result<LogisticModel> {
        if x.len() != y.len() {
            return Err(Error::InvalidParameter("rows and labels differ in length".into()));
        }
        if x.is_empty() {
            return Err(Error::TooFewObservations { needed: 1, got: 0 });
        }
        if !(params.l2 >= 0.0 && params.learning_rate > 0.0 && params.pos_weight > 0.0) {
            return Err(Error::InvalidParameter(format!("{params:?}")));
        }
        let width = check_finite(x)?;
        let n = x.len() as f64;
        let mean: Vec<f64> = (0..width).map(|j| x.iter().map(|r| r[j]).sum::<f64>() / n).collect();
        let scale: Vec<f64> = (0..width)
            .map(|j| {
                let var = x.iter().map(|r| (r[j] - mean[j]).powi(2)).sum::<f64>() / n;
                if var > 0.0 {
                    var.sqrt()
                } else {
                    1.0
                }
            })
            .collect();
        let xs = Self::standardize(&mean, &scale, x);
        let mut weights = vec![0.0; width];
        let mut bias = 0.0;
        for _ in 0..params.iterations {
            let (_, grad, grad_bias) = logistic_loss_gradient(&xs, y, &weights, bias, params);
            let norm = grad.iter().map(|g| g * g).sum::<f64>() + grad_bias * grad_bias;
            if norm.sqrt() < 1e-12 {
                break;
            }
            for (w, g) in weights.iter_mut().zip(&grad) {
                *w -= params.learning_rate * g;
            }
            bias -= params.learning_rate * grad_bias;
        }
        Ok(LogisticModel {
            mean,
            scale,
            weights,
            bias,
        })
    }

    fn predict_proba(&self, model: &LogisticModel, x: &[Vec<f64>]) -> Result<Vec<f64>> {
        let width = check_finite(x)?;
        if !x.is_empty() && width != model.weights.len() {
            return Err(Error::InvalidParameter(format!(
                "model has {} features, input has {width}",
                model.weights.len()
            )));
        }
        Ok(Self::standardize(&model.mean, &model.scale, x)
            .iter()
            .map(|row| sigmoid(model.bias + row.iter().zip(&model.weights).map(|(a, b)| a * b).sum::<f64>()))
            .collect())
    }
}

/// Fold index in `0..k` per example. Each class is shuffled with `seed` and
/// dealt round-robin, so every fold gets a near-equal share of both.
pub fn stratified_folds(labels: &[bool], k: usize, seed: u64) -> Result<Vec<usize>> {
    if k < 2 {
        return Err(Error::Folds(format!("need at least 2 folds, got {k}")));
    }
    let mut pos: Vec<usize> = (0..labels.len()).filter(|&i| labels[i]).collect();
    let mut neg: Vec<usize> = (0..labels.len()).filter(|&i| !labels[i]).collect();
    if pos.is_empty() || neg.is_empty() {
        return Err(Error::SingleClass);
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    pos.shuffle(&mut rng);
    neg.shuffle(&mut rng);
    let mut folds = vec![0; labels.len()];
    for (slot, &i) in pos.iter().chain(&neg).enumerate() {
        folds[i] = slot % k;
    }
    Ok(folds)
}

/// Stratified folds where every test fold holds both classes, retrying
/// with the next seeds a few times.
fn usable_folds(labels: &[bool], k: usize, seed: u64) -> Result<Vec<usize>> {
    for offset in 0..10 {
        let folds = stratified_folds(labels, k, seed.wrapping_add(offset))?;
        let ok = (0..k).all(|f| {
            let test: Vec<bool> = (0..labels.len())
                .filter(|&i| folds[i] == f)
                .map(|i| labels[i])
                .collect();
            test.contains(&true) && test.contains(&false)
        });
        if ok {
            return Ok(folds);
        }
    }
    let pos = labels.iter().filter(|&&l| l).count();
    Err(Error::Folds(format!(
        "cannot place both classes in each of {k} folds ({pos} positives, {} negatives)",
        labels.len() - pos
    )))
}

fn split<T: Clone>(items: &[T], folds: &[usize], fold: usize) -> (Vec<T>, Vec<T>) {
    let mut train = Vec::new();
    let mut test = Vec::new();
    for (item, &f) in items.iter().zip(folds) {
        if f == fold {
            test.push(item.clone());
        } else {
            train.push(item.clone());
        }
    }
    (train, test)
}

fn mean_std(xs: &[f64]) -> (f64, f64) {
    let m = xs.iter().sum::<f64>() / xs.len() as f64;
    let var = xs.iter().map(|x| (x - m).powi(2)).sum::<f64>() / xs.len() as f64;
    (m, var.sqrt())
}

#[derive(Debug, Clone, PartialEq)]
pub struct CvResult {
    pub config: String,
    pub n: u32,
    pub features: usize,
    pub fold_auc: Vec<f64>,
    pub fold_f1: Vec<f64>,
    pub auc_mean: f64,
    pub auc_std: f64,
    pub f1_mean: f64,
    pub f1_std: f64,
    /// Index into the grid chosen for each outer fold.
    pub chosen: Vec<usize>,
}

const INNER_FOLDS: usize = 3;

fn select_params<C: Classifier>(
    classifier: &C,
    x: &[Vec<f64>],
    y: &[bool],
    grid: &[C::Params],
    seed: u64,
) -> Result<usize> {
    if grid.len() == 1 {
        return Ok(0);
    }
    let folds = usable_folds(y, INNER_FOLDS, seed)?;
    let mut best = (0, f64::NEG_INFINITY);
    for (g, params) in grid.iter().enumerate() {
        let mut total = 0.0;
        for f in 0..INNER_FOLDS {
            let (xtr, xte) = split(x, &folds, f);
            let (ytr, yte) = split(y, &folds, f);
            let model = classifier.fit(&xtr, &ytr, params, seed)?;
            total += auc(&yte, &classifier.predict_proba(&model, &xte)?)?;
        }
        if total > best.1 {
            best = (g, total);
        }
    }
    Ok(best.0)
}

/// Stratified `k`-fold evaluation of one feature configuration. With more
/// than one grid entry, each outer fold picks hyperparameters by mean AUC
/// over inner folds of its training part. F1 uses a 0.5 threshold.
pub fn cross_validate<C: Classifier>(
    dataset: &Dataset,
    config: FeatureConfig,
    classifier: &C,
    grid: &[C::Params],
    k: usize,
    seed: u64,
) -> Result<CvResult> {
    if grid.is_empty() {
        return Err(Error::InvalidParameter("empty hyperparameter grid".into()));
    }
    let columns = config.columns();
    let x = dataset.matrix(&columns);
    let y = dataset.labels();
    let folds = usable_folds(&y, k, seed)?;
    let per_fold = (0..k)
        .into_par_iter()
        .map(|f| {
            let (xtr, xte) = split(&x, &folds, f);
            let (ytr, yte) = split(&y, &folds, f);
            let fold_seed = seed.wrapping_mul(31).wrapping_add(f as u64);
            let chosen = select_params(classifier, &xtr, &ytr, grid, fold_seed)?;
            let model = classifier.fit(&xtr, &ytr, &grid[chosen], fold_seed)?;
            let proba = classifier.predict_proba(&model, &xte)?;
            let predicted: Vec<bool> = proba.iter().map(|&p| p >= 0.5).collect();
            Ok((auc(&yte, &proba)?, f1(&yte, &predicted), chosen))
        })
        .collect::<Result<Vec<_>>>()?;
    let fold_auc: Vec<f64> = per_fold.iter().map(|r| r.0).collect();
    let fold_f1: Vec<f64> = per_fold.iter().map(|r| r.1).collect();
    let (auc_mean, auc_std) = mean_std(&fold_auc);
    let (f1_mean, f1_std) = mean_std(&fold_f1);
    Ok(CvResult {
        config: config.name().to_string(),
        n: dataset.instances.first().map_or(0, |i| i.n),
        features: columns.len(),
        chosen: per_fold.iter().map(|r| r.2).collect(),
        fold_auc,
        fold_f1,
        auc_mean,
        auc_std,
        f1_mean,
        f1_std,
    })
}

/// Default grid: learning rate × positive-class weight.
pub fn default_grid(positive_share: f64) -> Vec<LogisticParams> {
    let balance = if positive_share > 0.0 && positive_share < 1.0 {
        (1.0 - positive_share) / positive_share
    } else {
        1.0
    };
    let mut grid = Vec::new();
    for learning_rate in [0.1, 0.5] {
        for pos_weight in [1.0, balance] {
            grid.push(LogisticParams {
                learning_rate,
                pos_weight,
                ..LogisticParams::default()
            });
        }
    }
    grid.dedup();
    grid
}

pub fn write_metrics_csv<'a, W: Write>(results: impl IntoIterator<Item = &'a CvResult>, out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["config", "n", "metric", "mean", "std"])?;
    for r in results {
        let n = r.n.to_string();
        w.write_record([
            &r.config,
            &n,
            "auc",
            &format!("{:.6}", r.auc_mean),
            &format!("{:.6}", r.auc_std),
        ])?;
        w.write_record([
            &r.config,
            &n,
            "f1",
            &format!("{:.6}", r.f1_mean),
            &format!("{:.6}", r.f1_std),
        ])?;
        w.write_record([&r.config, &n, "features", &r.features.to_string(), "0"])?;
    }
    w.flush()?;
    Ok(())
}
