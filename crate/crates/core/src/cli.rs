//! Command-line interface.

use std::collections::BTreeMap;
use std::ffi::OsString;
use std::fs::{self, File};
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::str::FromStr;

use clap::{Args, Parser, Subcommand};

use crate::analysis::{
    cross_sector_report, employment_ccdf, industry_mover_career_lengths, retention_by_sector, soft_trend,
    t_test_two_sided, write_ccdf_csv, write_cross_sector_csv, write_retention_csv, write_soft_trend_csv, DeltaSources,
};
use crate::error::{Error, Result};
use crate::flownet::{build_network, derive_transitions, filter_postdocs, write_edges_csv, write_self_weights_csv};
use crate::ingest::{load_corpus, write_records_csv, IngestReport, RuleSet};
use crate::model::{Corpus, FlowNetwork, Transition, Year};
use crate::predict::{
    build_dataset, cross_validate, default_grid, write_dataset_csv, write_metrics_csv, FeatureConfig, FeatureSettings,
    LogisticBaseline, FEATURE_COUNT,
};
use crate::r3::{transform, R3Params, TransformMode};
use crate::rank::{
    rank_change_outliers, rank_windows, write_rankings_csv, HitsConfig, RankHistory, RankKind, WindowPlan,
};
use crate::synth::{four_org_scenario, random_population, PlantedSignal, PopulationSpec};

const AFTER_HELP: &str = "\
File formats
  records (input of every command, output of ingest and synth):
    person_id,phd_school,grad_year,employer,start_year,end_year,title,is_postdoc
    end_year empty = job still held; is_postdoc 0/1.
  rules (--rules): kind,pattern,target
    alias,<raw name>,<canonical name> | exact,<name>,<sector> | keyword,<words>,<sector>
    sectors: industry, academia, government. Rules extend the built-in set.
  edges.csv: source,target,year,weight      self_weights.csv: org,year,self_weight
  transitions.csv: person_id,source,target,year,kind,involves_postdoc
  rankings.csv: org,window_start,window_end,hub_score,hub_rank,auth_score,auth_rank,converged
  outliers.csv: window_start,window_end,org,residual
  cross_sector.csv: source_sector,target_sector,kind,count,share,
                    mean_rank_delta_gf,covered_gf,mean_rank_delta_r3,covered_r3
  soft_trend.csv: year,soft_percent          retention.csv: sector,mean_spell_years
  ccdf.csv: employee_count,fraction_at_least summary.csv: statistic,value
  dataset.csv: person_id,t,n,label,<38 features>; sector codes industry=0, academia=1, government=2
  metrics.csv: config,n,metric,mean,std (metric: auc, f1, features)

Configuration
  --config FILE reads key=value lines ('#' starts a comment). Keys are the long
  flag names without dashes, e.g. window=5, alpha-ratio=0.5, seed=7.
  Flags override the file; the file overrides built-in defaults.";

#[derive(Debug, Parser)]
#[command(
    name = "careerflow",
    version,
    about = "Career-transition networks: build, reweight, rank, analyze, predict"
)]
#[command(after_help = AFTER_HELP)]
pub struct Cli {
    /// key=value configuration file.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Validate and normalize a records file.
    Ingest {
        #[command(flatten)]
        input: InputArgs,
        #[arg(long)]
        out: PathBuf,
    },
    /// Build the yearly flow network.
    Network {
        #[command(flatten)]
        input: InputArgs,
        #[command(flatten)]
        years: YearArgs,
        #[arg(long)]
        out: PathBuf,
    },
    /// Reweight the flow network.
    Transform {
        #[command(flatten)]
        input: InputArgs,
        #[command(flatten)]
        years: YearArgs,
        /// src, tn, gr or unified.
        #[arg(long)]
        mode: Option<String>,
        #[command(flatten)]
        r3: R3Args,
        #[arg(long)]
        out: PathBuf,
    },
    /// Windowed HITS rankings.
    Rank {
        #[command(flatten)]
        input: InputArgs,
        #[command(flatten)]
        years: YearArgs,
        #[command(flatten)]
        windows: WindowArgs,
        /// none or r3.
        #[arg(long)]
        transform: Option<String>,
        #[command(flatten)]
        r3: R3Args,
        #[command(flatten)]
        hits: HitsArgs,
        /// Output file; standard output if absent.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Organizations whose rank moves most between the baseline and the
    /// reweighted network, per window.
    Outliers {
        #[command(flatten)]
        input: InputArgs,
        #[command(flatten)]
        years: YearArgs,
        #[command(flatten)]
        windows: WindowArgs,
        #[arg(long)]
        top_k: Option<usize>,
        /// hub or authority.
        #[arg(long)]
        kind: Option<String>,
        #[command(flatten)]
        r3: R3Args,
        #[command(flatten)]
        hits: HitsArgs,
        /// Output file; standard output if absent.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Cross-sector flows, soft-transition trend, retention and CCDF.
    Analyze {
        #[command(flatten)]
        input: InputArgs,
        /// Year range of the soft-transition trend, e.g. 1995-2015.
        #[arg(long)]
        trend_years: Option<String>,
        /// Length of the ranking window preceding each transition.
        #[arg(long)]
        window: Option<i32>,
        #[command(flatten)]
        r3: R3Args,
        #[command(flatten)]
        hits: HitsArgs,
        #[arg(long)]
        out: PathBuf,
    },
    /// Build the prediction dataset and cross-validate the baseline learner.
    Predict {
        #[command(flatten)]
        input: InputArgs,
        /// Horizon in years.
        #[arg(long)]
        n: Option<u32>,
        /// Prediction years, e.g. 2001-2009.
        #[arg(long)]
        years: Option<String>,
        /// Comma-separated: ind, ind+gf, ind+r3, all.
        #[arg(long)]
        groups: Option<String>,
        #[arg(long)]
        folds: Option<usize>,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        window: Option<i32>,
        #[command(flatten)]
        r3: R3Args,
        #[command(flatten)]
        hits: HitsArgs,
        #[arg(long)]
        out: PathBuf,
    },
    /// Write a synthetic records file (and its rules).
    Synth {
        /// Built-in scenario; only `four-org`.
        #[arg(long, conflicts_with = "random")]
        scenario: Option<String>,
        /// Random heavy-tailed population.
        #[arg(long)]
        random: bool,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        persons: Option<usize>,
        #[arg(long)]
        orgs: Option<usize>,
        #[arg(long)]
        tail: Option<f64>,
        /// Make the move probability depend only on tenure.
        #[arg(long)]
        planted_signal: bool,
        #[arg(long)]
        out: PathBuf,
    },
}

#[derive(Debug, Args)]
pub struct InputArgs {
    /// Records CSV.
    #[arg(long)]
    pub input: PathBuf,
    /// Extra rules appended to the built-in ones.
    #[arg(long)]
    pub rules: Option<PathBuf>,
    /// Last observed year; open jobs run to it. Defaults to the latest year in the input.
    #[arg(long)]
    pub horizon: Option<Year>,
    /// Drop transitions into or out of postdoc positions.
    #[arg(long)]
    pub exclude_postdocs: bool,
}

#[derive(Debug, Args)]
pub struct YearArgs {
    /// First network year; defaults to the first year in the corpus.
    #[arg(long)]
    pub from: Option<Year>,
    /// Last network year; defaults to the horizon.
    #[arg(long)]
    pub to: Option<Year>,
}

#[derive(Debug, Args)]
pub struct WindowArgs {
    /// Window length in years [default: 5]
    #[arg(long)]
    pub window: Option<i32>,
    /// Years between window starts [default: the window length]
    #[arg(long)]
    pub step: Option<i32>,
}

#[derive(Debug, Args)]
pub struct R3Args {
    /// Resource sigmoid scale as a fraction of the mean career length [default: 0.5]
    #[arg(long)]
    pub alpha_ratio: Option<f64>,
    /// Retention sigmoid scale as a fraction of the sector mean [default: 0.5]
    #[arg(long)]
    pub beta_ratio: Option<f64>,
    /// Growth sharpness [default: 1.5]
    #[arg(long)]
    pub gamma: Option<f64>,
}

#[derive(Debug, Args)]
pub struct HitsArgs {
    /// HITS convergence tolerance [default: 1e-8]
    #[arg(long)]
    pub tol: Option<f64>,
    /// HITS iteration cap [default: 100]
    #[arg(long)]
    pub max_iter: Option<usize>,
}

/// Flat key=value settings.
#[derive(Debug, Clone, Default)]
pub struct Config {
    values: BTreeMap<String, String>,
}

impl Config {
    pub fn parse(text: &str) -> Result<Self> {
        let mut values = BTreeMap::new();
        for (i, line) in text.lines().enumerate() {
            let line = line.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (k, v) = line.split_once('=').ok_or_else(|| Error::Rule {
                line: i as u64 + 1,
                message: format!("expected key=value, got `{line}`"),
            })?;
            values.insert(k.trim().replace('_', "-"), v.trim().to_string());
        }
        Ok(Self { values })
    }

    pub fn load(path: Option<&Path>) -> Result<Self> {
        match path {
            Some(p) => Self::parse(&fs::read_to_string(p)?),
            None => Ok(Self::default()),
        }
    }

    /// `flag`, else the config value for `key`, else `default`.
    pub fn pick<T: FromStr>(&self, flag: Option<T>, key: &str, default: T) -> Result<T> {
        Ok(self.pick_opt(flag, key)?.unwrap_or(default))
    }

    pub fn pick_opt<T: FromStr>(&self, flag: Option<T>, key: &str) -> Result<Option<T>> {
        if flag.is_some() {
            return Ok(flag);
        }
        match self.values.get(key) {
            Some(raw) => raw
                .parse()
                .map(Some)
                .map_err(|_| Error::InvalidParameter(format!("config key `{key}`: cannot parse `{raw}`"))),
            None => Ok(None),
        }
    }

    fn flag(&self, flag: bool, key: &str) -> Result<bool> {
        Ok(flag || self.pick_opt::<bool>(None, key)?.unwrap_or(false))
    }
}

fn parse_year_range(raw: &str) -> Result<(Year, Year)> {
    let parts: Vec<&str> = raw.split(['-', ':']).filter(|s| !s.is_empty()).collect();
    let bad = || Error::InvalidParameter(format!("year range `{raw}`; expected e.g. 2001-2009"));
    match parts.as_slice() {
        [a, b] => {
            let (a, b) = (
                a.trim().parse().map_err(|_| bad())?,
                b.trim().parse().map_err(|_| bad())?,
            );
            if a > b {
                return Err(bad());
            }
            Ok((a, b))
        }
        [a] => {
            let y = a.trim().parse().map_err(|_| bad())?;
            Ok((y, y))
        }
        _ => Err(bad()),
    }
}

fn r3_params(args: &R3Args, cfg: &Config) -> Result<R3Params> {
    let d = R3Params::default();
    let p = R3Params {
        alpha_ratio: cfg.pick(args.alpha_ratio, "alpha-ratio", d.alpha_ratio)?,
        beta_ratio: cfg.pick(args.beta_ratio, "beta-ratio", d.beta_ratio)?,
        gamma: cfg.pick(args.gamma, "gamma", d.gamma)?,
    };
    p.validate()?;
    Ok(p)
}

fn hits_config(args: &HitsArgs, cfg: &Config) -> Result<HitsConfig> {
    let d = HitsConfig::default();
    Ok(HitsConfig {
        tol: cfg.pick(args.tol, "tol", d.tol)?,
        max_iter: cfg.pick(args.max_iter, "max-iter", d.max_iter)?,
    })
}

struct Loaded {
    corpus: Corpus,
    report: IngestReport,
    exclude_postdocs: bool,
}

impl Loaded {
    fn transitions(&self) -> Vec<Transition> {
        filter_postdocs(&derive_transitions(&self.corpus), self.exclude_postdocs)
    }

    fn network(&self, years: &YearArgs, cfg: &Config) -> Result<FlowNetwork> {
        let (first, _) = self.corpus.year_span().ok_or(Error::EmptyGraph)?;
        let from = cfg.pick(years.from, "from", first)?;
        let to = cfg.pick(years.to, "to", self.corpus.horizon())?;
        if from > to {
            return Err(Error::InvalidParameter(format!("--from {from} is after --to {to}")));
        }
        build_network(&self.transitions(), &self.corpus, from..=to)
    }
}

fn load(input: &InputArgs, cfg: &Config) -> Result<Loaded> {
    let mut rules = RuleSet::defaults();
    if let Some(extra) = cfg.pick_opt(input.rules.clone(), "rules")? {
        rules.extend(&RuleSet::from_reader(File::open(extra)?)?)?;
    }
    let horizon = cfg.pick_opt(input.horizon, "horizon")?;
    let (corpus, report) = load_corpus(File::open(&input.input)?, &rules, horizon)?;
    for d in &report.diagnostics {
        eprintln!("{d}");
    }
    Ok(Loaded {
        corpus,
        report,
        exclude_postdocs: cfg.flag(input.exclude_postdocs, "exclude-postdocs")?,
    })
}

fn create(dir: &Path, name: &str) -> Result<BufWriter<File>> {
    fs::create_dir_all(dir)?;
    Ok(BufWriter::new(File::create(dir.join(name))?))
}

fn output(path: Option<&Path>) -> Result<Box<dyn Write>> {
    match path {
        Some(p) => {
            if let Some(parent) = p.parent().filter(|d| !d.as_os_str().is_empty()) {
                fs::create_dir_all(parent)?;
            }
            Ok(Box::new(BufWriter::new(File::create(p)?)))
        }
        None => Ok(Box::new(io::stdout().lock())),
    }
}

fn write_transitions_csv<W: Write>(transitions: &[Transition], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["person_id", "source", "target", "year", "kind", "involves_postdoc"])?;
    for t in transitions {
        w.write_record([
            t.person.as_str(),
            t.source.as_str(),
            t.target.as_str(),
            &t.year.to_string(),
            t.kind.as_str(),
            if t.involves_postdoc { "1" } else { "0" },
        ])?;
    }
    w.flush()?;
    Ok(())
}

fn write_network(net: &FlowNetwork, out: &Path) -> Result<()> {
    write_edges_csv(net, create(out, "edges.csv")?)?;
    write_self_weights_csv(net, create(out, "self_weights.csv")?)
}

fn window_plan(args: &WindowArgs, net: &FlowNetwork, cfg: &Config) -> Result<WindowPlan> {
    let len = cfg.pick(args.window, "window", 5)?;
    let step = cfg.pick(args.step, "step", len)?;
    let (Some(&from), Some(&to)) = (net.years().first(), net.years().last()) else {
        return Err(Error::EmptyGraph);
    };
    Ok(WindowPlan { len, step, from, to })
}

fn run_command(cli: Cli) -> Result<bool> {
    let cfg = Config::load(cli.config.as_deref())?;
    let mut ok = true;
    match cli.command {
        Command::Ingest { input, out } => {
            let loaded = load(&input, &cfg)?;
            write_records_csv(&loaded.corpus, create(&out, "records.csv")?)?;
            let mut w = csv::Writer::from_writer(create(&out, "organizations.csv")?);
            w.write_record(["org", "sector"])?;
            for (id, org) in loaded.corpus.organizations() {
                w.write_record([id.as_str(), org.sector.as_str()])?;
            }
            w.flush()?;
            let r = &loaded.report;
            println!(
                "persons={} spells={} excluded_persons={} unclassified_orgs={} diagnostics={}",
                r.persons,
                r.spells,
                r.excluded_persons.len(),
                r.unclassified.len(),
                r.diagnostics.len()
            );
        }
        Command::Network { input, years, out } => {
            let loaded = load(&input, &cfg)?;
            let net = loaded.network(&years, &cfg)?;
            write_network(&net, &out)?;
            write_transitions_csv(&loaded.transitions(), create(&out, "transitions.csv")?)?;
        }
        Command::Transform {
            input,
            years,
            mode,
            r3,
            out,
        } => {
            let loaded = load(&input, &cfg)?;
            let mode: TransformMode = cfg.pick(mode, "mode", "unified".to_string())?.parse()?;
            let net = loaded.network(&years, &cfg)?;
            let reweighted = transform(&net, &loaded.corpus, &r3_params(&r3, &cfg)?, mode)?;
            write_network(&reweighted, &out)?;
        }
        Command::Rank {
            input,
            years,
            windows,
            transform: which,
            r3,
            hits,
            out,
        } => {
            let loaded = load(&input, &cfg)?;
            let net = loaded.network(&years, &cfg)?;
            let net = match cfg.pick(which, "transform", "none".to_string())?.as_str() {
                "none" | "gf" => net,
                "r3" | "unified" => transform(&net, &loaded.corpus, &r3_params(&r3, &cfg)?, TransformMode::Unified)?,
                other => return Err(Error::InvalidParameter(format!("unknown transform `{other}`"))),
            };
            let plan = window_plan(&windows, &net, &cfg)?;
            let ranked = rank_windows(&net, &plan.windows()?, &hits_config(&hits, &cfg)?)?;
            for (a, b) in &ranked.skipped {
                eprintln!("window {a}-{b}: no organizations, skipped");
            }
            write_rankings_csv(&ranked.tables, output(out.as_deref())?)?;
        }
        Command::Outliers {
            input,
            years,
            windows,
            top_k,
            kind,
            r3,
            hits,
            out,
        } => {
            let loaded = load(&input, &cfg)?;
            let net = loaded.network(&years, &cfg)?;
            let reweighted = transform(&net, &loaded.corpus, &r3_params(&r3, &cfg)?, TransformMode::Unified)?;
            let plan = window_plan(&windows, &net, &cfg)?;
            let hits = hits_config(&hits, &cfg)?;
            let k = cfg.pick(top_k, "top-k", 10)?;
            let kind: RankKind = cfg.pick(kind, "kind", "authority".to_string())?.parse()?;
            let base = RankHistory::new(rank_windows(&net, &plan.windows()?, &hits)?.tables);
            let r3 = RankHistory::new(rank_windows(&reweighted, &plan.windows()?, &hits)?.tables);
            let mut w = csv::Writer::from_writer(output(out.as_deref())?);
            w.write_record(["window_start", "window_end", "org", "residual"])?;
            for table in base.tables() {
                let Some(other) = r3.get(table.window) else { continue };
                match rank_change_outliers(table, other, k, kind) {
                    Ok(list) => {
                        for (org, r) in list {
                            w.write_record([
                                table.window.0.to_string(),
                                table.window.1.to_string(),
                                org.to_string(),
                                format!("{r:.6}"),
                            ])?;
                        }
                    }
                    Err(e) => eprintln!("window {}-{}: {e}", table.window.0, table.window.1),
                }
            }
            w.flush()?;
        }
        Command::Analyze {
            input,
            trend_years,
            window,
            r3,
            hits,
            out,
        } => {
            let loaded = load(&input, &cfg)?;
            ok = analyze(&loaded, trend_years, window, &r3, &hits, &cfg, &out)?;
        }
        Command::Predict {
            input,
            n,
            years,
            groups,
            folds,
            seed,
            window,
            r3,
            hits,
            out,
        } => {
            let loaded = load(&input, &cfg)?;
            let n = cfg.pick(n, "n", 1)?;
            let horizon = loaded.corpus.horizon();
            let default_years = format!("{}-{}", horizon - 14, horizon - 5);
            let years = parse_year_range(&cfg.pick(years, "years", default_years)?)?;
            let configs = cfg
                .pick(groups, "groups", "all".to_string())?
                .split(',')
                .map(|g| g.trim().parse::<FeatureConfig>())
                .collect::<Result<Vec<_>>>()?;
            let folds = cfg.pick(folds, "folds", 10)?;
            let seed = cfg.pick(seed, "seed", 0)?;
            let settings = FeatureSettings {
                window_len: cfg.pick(window, "window", 5)?,
                params: r3_params(&r3, &cfg)?,
                hits: hits_config(&hits, &cfg)?,
            };
            let dataset = build_dataset(&loaded.corpus, years, n, settings)?;
            write_dataset_csv(&dataset, create(&out, "dataset.csv")?)?;
            let grid = default_grid(dataset.positive_share());
            let results = configs
                .iter()
                .map(|&c| cross_validate(&dataset, c, &LogisticBaseline, &grid, folds, seed))
                .collect::<Result<Vec<_>>>()?;
            write_metrics_csv(&results, create(&out, "metrics.csv")?)?;
            println!(
                "instances={} positive_share={:.4} features={FEATURE_COUNT}",
                dataset.instances.len(),
                dataset.positive_share()
            );
        }
        Command::Synth {
            scenario,
            random,
            seed,
            persons,
            orgs,
            tail,
            planted_signal,
            out,
        } => {
            let scenario = cfg.pick_opt(scenario, "scenario")?;
            let random = cfg.flag(random, "random")?;
            if random {
                let d = PopulationSpec::default();
                let spec = PopulationSpec {
                    seed: cfg.pick(seed, "seed", d.seed)?,
                    n_persons: cfg.pick(persons, "persons", d.n_persons)?,
                    n_orgs: cfg.pick(orgs, "orgs", d.n_orgs)?,
                    tail_exponent: cfg.pick(tail, "tail", d.tail_exponent)?,
                    planted_signal: cfg.flag(planted_signal, "planted-signal")?.then(PlantedSignal::default),
                    ..d
                };
                let corpus = random_population(&spec)?;
                write_records_csv(&corpus, create(&out, "records.csv")?)?;
            } else {
                match scenario.as_deref() {
                    Some("four-org") => {
                        let s = four_org_scenario();
                        write_records_csv(&s.corpus, create(&out, "records.csv")?)?;
                        s.rules.write_csv(create(&out, "rules.csv")?)?;
                    }
                    Some(other) => return Err(Error::InvalidParameter(format!("unknown scenario `{other}`"))),
                    None => {
                        return Err(Error::InvalidParameter(
                            "synth needs --scenario four-org or --random".into(),
                        ))
                    }
                }
            }
        }
    }
    Ok(ok)
}

/// Runs each analysis independently; a failing stage is reported and the
/// others still run. Returns whether every stage succeeded.
fn analyze(
    loaded: &Loaded,
    trend_years: Option<String>,
    window: Option<i32>,
    r3: &R3Args,
    hits: &HitsArgs,
    cfg: &Config,
    out: &Path,
) -> Result<bool> {
    let corpus = &loaded.corpus;
    let transitions = loaded.transitions();
    let mut summary: Vec<(String, String)> = Vec::new();
    let mut ok = true;
    let mut stage = |name: &str, result: Result<()>| {
        if let Err(e) = result {
            eprintln!("stage {name} failed: {e}");
            ok = false;
        }
    };

    stage(
        "cross-sector",
        (|| {
            let len = cfg.pick(window, "window", 5)?;
            let (first, _) = corpus.year_span().ok_or(Error::EmptyGraph)?;
            let net = build_network(&transitions, corpus, first..=corpus.horizon())?;
            let reweighted = transform(&net, corpus, &r3_params(r3, cfg)?, TransformMode::Unified)?;
            let windows: Vec<_> = (first..=corpus.horizon()).map(|e| (e - len + 1, e)).collect();
            let hc = hits_config(hits, cfg)?;
            let gf = RankHistory::new(rank_windows(&net, &windows, &hc)?.tables);
            let r3h = RankHistory::new(rank_windows(&reweighted, &windows, &hc)?.tables);
            let sources = DeltaSources {
                gf: &gf,
                r3: &r3h,
                window_len: len,
            };
            let report = cross_sector_report(&transitions, corpus, Some(&sources), false)?;
            write_cross_sector_csv(&report, create(out, "cross_sector.csv")?)?;
            summary.push(("transitions".into(), report.total.to_string()));
            summary.push(("soft_share".into(), format!("{:.6}", report.soft_share)));
            summary.push(("cross_sector_share".into(), format!("{:.6}", report.cross_sector_share)));
            summary.push((
                "cross_sector_to_industry_share".into(),
                format!("{:.6}", report.to_industry_share),
            ));
            Ok(())
        })(),
    );

    stage(
        "soft-trend",
        (|| {
            let (first, _) = corpus.year_span().ok_or(Error::EmptyGraph)?;
            let default = format!("{}-{}", first, corpus.horizon());
            let years = parse_year_range(&cfg.pick(trend_years, "trend-years", default)?)?;
            let trend = soft_trend(&transitions, years)?;
            write_soft_trend_csv(&trend, create(out, "soft_trend.csv")?)?;
            summary.push(("soft_trend_slope".into(), format!("{:.6}", trend.fit.slope)));
            summary.push(("soft_trend_p_value".into(), format!("{:.6}", trend.fit.p_value)));
            Ok(())
        })(),
    );

    stage(
        "retention",
        (|| {
            let means = retention_by_sector(corpus, corpus.horizon());
            write_retention_csv(&means, create(out, "retention.csv")?)?;
            Ok(())
        })(),
    );

    stage(
        "ccdf",
        write_ccdf_csv(&employment_ccdf(corpus), create(out, "ccdf.csv")?),
    );

    stage(
        "career-lengths",
        (|| {
            let (into, out_of) = industry_mover_career_lengths(&transitions, corpus)?;
            let test = t_test_two_sided(&into, &out_of)?;
            let mean = |xs: &[f64]| xs.iter().sum::<f64>() / xs.len() as f64;
            summary.push(("career_length_into_industry".into(), format!("{:.6}", mean(&into))));
            summary.push(("career_length_out_of_industry".into(), format!("{:.6}", mean(&out_of))));
            summary.push(("career_length_t".into(), format!("{:.6}", test.t)));
            summary.push(("career_length_p_value".into(), format!("{:.6e}", test.p_value)));
            Ok(())
        })(),
    );

    let mut w = csv::Writer::from_writer(create(out, "summary.csv")?);
    w.write_record(["statistic", "value"])?;
    for (k, v) in &summary {
        w.write_record([k, v])?;
    }
    w.flush()?;
    Ok(ok)
}

/// Parses `args` and runs the command. Returns the process exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return e.exit_code();
        }
    };
    match run_command(cli) {
        Ok(true) => 0,
        Ok(false) => 1,
        Err(e) => {
            eprintln!("error: {e}");
            2
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn config_precedence() {
        let cfg = Config::parse("window = 3\n# comment\nalpha_ratio=0.25\n").unwrap();
        assert_eq!(cfg.pick(Some(7), "window", 5).unwrap(), 7);
        assert_eq!(cfg.pick(None, "window", 5).unwrap(), 3);
        assert_eq!(cfg.pick(None, "step", 5).unwrap(), 5);
        assert_eq!(cfg.pick(None, "alpha-ratio", 0.5).unwrap(), 0.25);
        assert!(cfg.pick::<i32>(None, "alpha-ratio", 1).is_err());
        assert!(Config::parse("novalue").is_err());
    }

    #[test]
    fn year_ranges() {
        assert_eq!(parse_year_range("2001-2009").unwrap(), (2001, 2009));
        assert_eq!(parse_year_range("2005").unwrap(), (2005, 2005));
        assert!(parse_year_range("2009-2001").is_err());
        assert!(parse_year_range("soon").is_err());
    }
}
