//! Weighted HITS, windowed ranking tables and rank-change outliers.

use std::collections::BTreeMap;
use std::io::Write;

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::flownet::{window_aggregate, WeightedDigraph};
use crate::model::{Corpus, FlowNetwork, OrgId, RankEntry, RankingTable, Transition, Year};
use crate::r3::{transform_unified, R3Params};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HitsConfig {
    pub tol: f64,
    pub max_iter: usize,
}

impl Default for HitsConfig {
    fn default() -> Self {
        Self {
            tol: 1e-8,
            max_iter: 100,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct HitsResult {
    pub hub: Vec<f64>,
    pub authority: Vec<f64>,
    pub converged: bool,
    pub iterations: usize,
}

fn normalize(v: &mut [f64]) {
    let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
    if norm > 0.0 {
        v.iter_mut().for_each(|x| *x /= norm);
    }
}

fn max_change(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
}

/// HITS on an edge list over nodes `0..n`.
///
/// Scores start uniform at `1/√n`; each iteration sets `a ← Wᵀh` and then
/// `h ← Wa`, both rescaled to unit Euclidean norm, until neither vector moves
/// by `tol` in any component. A graph with no positive weight gets uniform
/// scores.
pub fn hits_edges(n: usize, edges: &[(usize, usize, f64)], cfg: &HitsConfig) -> Result<HitsResult> {
    if n == 0 {
        return Err(Error::EmptyGraph);
    }
    if cfg.tol.is_nan() || cfg.tol <= 0.0 {
        return Err(Error::InvalidParameter(format!(
            "tol must be positive, got {}",
            cfg.tol
        )));
    }
    if let Some(&(u, v, w)) = edges
        .iter()
        .find(|&&(u, v, w)| u >= n || v >= n || !(w >= 0.0 && w.is_finite()))
    {
        return Err(Error::InvalidParameter(format!("bad edge ({u}, {v}, {w})")));
    }
    let uniform = vec![1.0 / (n as f64).sqrt(); n];
    if edges.iter().all(|e| e.2 == 0.0) {
        return Ok(HitsResult {
            hub: uniform.clone(),
            authority: uniform,
            converged: true,
            iterations: 0,
        });
    }

    let mut hub = uniform.clone();
    let mut auth = uniform;
    for iter in 1..=cfg.max_iter {
        let mut next_auth = vec![0.0; n];
        for &(u, v, w) in edges {
            next_auth[v] += w * hub[u];
        }
        normalize(&mut next_auth);
        let mut next_hub = vec![0.0; n];
        for &(u, v, w) in edges {
            next_hub[u] += w * next_auth[v];
        }
        normalize(&mut next_hub);
        let delta = max_change(&hub, &next_hub).max(max_change(&auth, &next_auth));
        hub = next_hub;
        auth = next_auth;
        if delta < cfg.tol {
            return Ok(HitsResult {
                hub,
                authority: auth,
                converged: true,
                iterations: iter,
            });
        }
    }
    Ok(HitsResult {
        hub,
        authority: auth,
        converged: false,
        iterations: cfg.max_iter,
    })
}

pub fn hits(graph: &WeightedDigraph, cfg: &HitsConfig) -> Result<HitsResult> {
    hits_edges(graph.node_count(), graph.edges(), cfg)
}

/// HITS on a dense row-major `n × n` weight matrix. Diagonal entries are
/// ignored, matching the flow network where self weights are not edges.
pub fn hits_dense(n: usize, weights: &[f64], cfg: &HitsConfig) -> Result<HitsResult> {
    if weights.len() != n * n {
        return Err(Error::InvalidParameter(format!(
            "expected {} matrix entries, got {}",
            n * n,
            weights.len()
        )));
    }
    let edges: Vec<_> = (0..n)
        .flat_map(|u| (0..n).map(move |v| (u, v)))
        .filter(|&(u, v)| u != v)
        .map(|(u, v)| (u, v, weights[u * n + v]))
        .filter(|&(_, _, w)| w != 0.0)
        .collect();
    hits_edges(n, &edges, cfg)
}

/// Ordinal ranks: higher score first, ties by org id, isolated nodes last.
fn ordinal_ranks(ids: &[OrgId], scores: &[f64], isolated: &[bool]) -> Vec<usize> {
    let mut order: Vec<usize> = (0..ids.len()).collect();
    order.sort_by(|&a, &b| {
        isolated[a]
            .cmp(&isolated[b])
            .then_with(|| {
                if isolated[a] {
                    std::cmp::Ordering::Equal
                } else {
                    scores[b].total_cmp(&scores[a])
                }
            })
            .then_with(|| ids[a].cmp(&ids[b]))
    });
    let mut ranks = vec![0; ids.len()];
    for (pos, &i) in order.iter().enumerate() {
        ranks[i] = pos + 1;
    }
    ranks
}

pub fn ranking_table(graph: &WeightedDigraph, window: (Year, Year), cfg: &HitsConfig) -> Result<RankingTable> {
    let result = hits(graph, cfg)?;
    let isolated = graph.isolated();
    let hub_ranks = ordinal_ranks(graph.nodes(), &result.hub, &isolated);
    let auth_ranks = ordinal_ranks(graph.nodes(), &result.authority, &isolated);
    let entries = graph
        .nodes()
        .iter()
        .enumerate()
        .map(|(i, org)| RankEntry {
            org: org.clone(),
            hub: result.hub[i],
            hub_rank: hub_ranks[i],
            authority: result.authority[i],
            authority_rank: auth_ranks[i],
            isolated: isolated[i],
        })
        .collect();
    Ok(RankingTable {
        window,
        entries,
        converged: result.converged,
        iterations: result.iterations,
    })
}

/// Sliding windows of `len` years starting at `from`, every `step` years.
/// Only windows that end by `to` are produced.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct WindowPlan {
    pub len: i32,
    pub step: i32,
    pub from: Year,
    pub to: Year,
}

impl WindowPlan {
    pub fn windows(&self) -> Result<Vec<(Year, Year)>> {
        if self.len < 1 || self.step < 1 {
            return Err(Error::InvalidParameter(format!(
                "window length and step must be at least 1 (got {} and {})",
                self.len, self.step
            )));
        }
        let mut out = Vec::new();
        let mut start = self.from;
        while start + self.len - 1 <= self.to {
            out.push((start, start + self.len - 1));
            start += self.step;
        }
        Ok(out)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum RankTransform {
    None,
    R3(R3Params),
}

#[derive(Debug, Clone, PartialEq)]
pub struct WindowedRankings {
    pub tables: Vec<RankingTable>,
    /// Windows with no nodes.
    pub skipped: Vec<(Year, Year)>,
}

/// Ranks every window of `plan`. Transforms act per year, so the network is
/// reweighted once before the windows are aggregated.
pub fn windowed_rankings(
    net: &FlowNetwork,
    corpus: &Corpus,
    plan: &WindowPlan,
    transform: RankTransform,
    cfg: &HitsConfig,
) -> Result<WindowedRankings> {
    let transformed;
    let net = match transform {
        RankTransform::None => net,
        RankTransform::R3(params) => {
            transformed = transform_unified(net, corpus, &params)?;
            &transformed
        }
    };
    rank_windows(net, &plan.windows()?, cfg)
}

pub fn rank_windows(net: &FlowNetwork, windows: &[(Year, Year)], cfg: &HitsConfig) -> Result<WindowedRankings> {
    let results: Vec<Result<Option<RankingTable>>> = windows
        .par_iter()
        .map(|&window| {
            let graph = window_aggregate(net, window)?;
            if graph.node_count() == 0 {
                return Ok(None);
            }
            ranking_table(&graph, window, cfg).map(Some)
        })
        .collect();
    let mut out = WindowedRankings {
        tables: Vec::new(),
        skipped: Vec::new(),
    };
    for (window, result) in windows.iter().zip(results) {
        match result? {
            Some(table) => out.tables.push(table),
            None => {
                log::info!("window {}-{} has no nodes; skipped", window.0, window.1);
                out.skipped.push(*window);
            }
        }
    }
    Ok(out)
}

/// Ranking tables indexed by window.
#[derive(Debug, Clone, Default)]
pub struct RankHistory {
    tables: BTreeMap<(Year, Year), RankingTable>,
}

impl RankHistory {
    pub fn new(tables: impl IntoIterator<Item = RankingTable>) -> Self {
        Self {
            tables: tables.into_iter().map(|t| (t.window, t)).collect(),
        }
    }

    pub fn get(&self, window: (Year, Year)) -> Option<&RankingTable> {
        self.tables.get(&window)
    }

    /// The `len`-year window ending at `end`, inclusive.
    pub fn ending_at(&self, end: Year, len: i32) -> Option<&RankingTable> {
        self.get((end - len + 1, end))
    }

    /// The `len`-year window ending the year before `year`.
    pub fn preceding(&self, year: Year, len: i32) -> Option<&RankingTable> {
        self.ending_at(year - 1, len)
    }

    pub fn tables(&self) -> impl Iterator<Item = &RankingTable> {
        self.tables.values()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RankKind {
    Hub,
    Authority,
}

impl RankKind {
    fn of(self, entry: &RankEntry) -> usize {
        match self {
            RankKind::Hub => entry.hub_rank,
            RankKind::Authority => entry.authority_rank,
        }
    }
}

impl std::str::FromStr for RankKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "hub" => Ok(Self::Hub),
            "authority" | "auth" => Ok(Self::Authority),
            other => Err(Error::InvalidParameter(format!("unknown rank kind `{other}`"))),
        }
    }
}

/// Regresses transformed ranks on baseline ranks over the common nodes and
/// returns the `k` organizations with the largest absolute residuals.
pub fn rank_change_outliers(
    baseline: &RankingTable,
    transformed: &RankingTable,
    k: usize,
    kind: RankKind,
) -> Result<Vec<(OrgId, f64)>> {
    let pairs: Vec<(&OrgId, f64, f64)> = baseline
        .entries
        .iter()
        .filter_map(|e| {
            transformed
                .get(&e.org)
                .map(|t| (&e.org, kind.of(e) as f64, kind.of(t) as f64))
        })
        .collect();
    if pairs.len() < 3 {
        return Err(Error::TooFewObservations {
            needed: 3,
            got: pairs.len(),
        });
    }
    let n = pairs.len() as f64;
    let mean_x = pairs.iter().map(|p| p.1).sum::<f64>() / n;
    let mean_y = pairs.iter().map(|p| p.2).sum::<f64>() / n;
    let sxx: f64 = pairs.iter().map(|p| (p.1 - mean_x).powi(2)).sum();
    if sxx == 0.0 {
        return Err(Error::ZeroVariance);
    }
    let sxy: f64 = pairs.iter().map(|p| (p.1 - mean_x) * (p.2 - mean_y)).sum();
    let slope = sxy / sxx;
    let intercept = mean_y - slope * mean_x;
    let mut residuals: Vec<(OrgId, f64)> = pairs
        .into_iter()
        .map(|(org, x, y)| (org.clone(), (y - (intercept + slope * x)).abs()))
        .collect();
    residuals.sort_by(|a, b| b.1.total_cmp(&a.1).then_with(|| a.0.cmp(&b.0)));
    residuals.truncate(k);
    Ok(residuals)
}

/// Authority rank of the source minus that of the target in `table`;
/// positive when moving to a better-ranked organization.
pub fn rank_delta(transition: &Transition, table: &RankingTable) -> Option<i64> {
    let source = table.get(&transition.source)?;
    let target = table.get(&transition.target)?;
    Some(source.authority_rank as i64 - target.authority_rank as i64)
}

pub fn write_rankings_csv<'a, W: Write>(tables: impl IntoIterator<Item = &'a RankingTable>, out: W) -> Result<()> {
    let mut writer = csv::Writer::from_writer(out);
    writer.write_record([
        "org",
        "window_start",
        "window_end",
        "hub_score",
        "hub_rank",
        "auth_score",
        "auth_rank",
        "converged",
    ])?;
    for table in tables {
        for e in &table.entries {
            writer.write_record([
                e.org.as_str(),
                &table.window.0.to_string(),
                &table.window.1.to_string(),
                &format!("{:.9}", e.hub),
                &e.hub_rank.to_string(),
                &format!("{:.9}", e.authority),
                &e.authority_rank.to_string(),
                &table.converged.to_string(),
            ])?;
        }
    }
    writer.flush()?;
    Ok(())
}

pub fn write_outliers_csv<W: Write>(outliers: &[(OrgId, f64)], out: W) -> Result<()> {
    let mut writer = csv::Writer::from_writer(out);
    writer.write_record(["org", "residual"])?;
    for (org, r) in outliers {
        writer.write_record([org.as_str(), &format!("{r:.6}")])?;
    }
    writer.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn org(s: &str) -> OrgId {
        OrgId::new(s).unwrap()
    }

    fn graph(nodes: &[&str], edges: &[(&str, &str, f64)]) -> WeightedDigraph {
        WeightedDigraph::from_edges(
            nodes.iter().map(|n| org(n)),
            edges.iter().map(|&(u, v, w)| (org(u), org(v), w)),
        )
        .unwrap()
    }

    #[test]
    fn one_link_graph() {
        let g = graph(&[], &[("A", "B", 3.0)]);
        let r = hits(&g, &HitsConfig::default()).unwrap();
        assert_abs_diff_eq!(r.hub[0], 1.0, epsilon = 1e-12);
        assert_abs_diff_eq!(r.hub[1], 0.0, epsilon = 1e-12);
        assert_abs_diff_eq!(r.authority[0], 0.0, epsilon = 1e-12);
        assert_abs_diff_eq!(r.authority[1], 1.0, epsilon = 1e-12);
        assert!(r.converged);
    }

    #[test]
    fn complete_symmetric_graph_is_uniform() {
        let names = ["a", "b", "c"];
        let mut edges = Vec::new();
        for u in names {
            for v in names {
                if u != v {
                    edges.push((u, v, 2.0));
                }
            }
        }
        let r = hits(&graph(&[], &edges), &HitsConfig::default()).unwrap();
        for x in r.hub.iter().chain(&r.authority) {
            assert_abs_diff_eq!(*x, 1.0 / 3f64.sqrt(), epsilon = 1e-12);
        }
    }

    #[test]
    fn zero_weight_graph_is_uniform() {
        let g = graph(&["x", "y"], &[]);
        let r = hits(&g, &HitsConfig::default()).unwrap();
        assert_eq!(r.hub, vec![1.0 / 2f64.sqrt(); 2]);
        assert!(r.converged);
        assert!(matches!(
            hits(&graph(&[], &[]), &HitsConfig::default()),
            Err(Error::EmptyGraph)
        ));
    }

    #[test]
    fn non_convergence_is_flagged() {
        let g = graph(
            &[],
            &[("a", "b", 1.0), ("b", "c", 1.0), ("c", "a", 1.0), ("a", "c", 0.5)],
        );
        let cfg = HitsConfig {
            tol: 1e-300,
            max_iter: 3,
        };
        let r = hits(&g, &cfg).unwrap();
        assert!(!r.converged);
        assert_eq!(r.iterations, 3);
    }

    #[test]
    fn ranks_break_ties_by_id_and_put_isolated_last() {
        let g = graph(&["zz", "aa"], &[("c", "a", 1.0), ("d", "b", 1.0)]);
        let t = ranking_table(&g, (2000, 2004), &HitsConfig::default()).unwrap();
        let auth: Vec<_> = ["a", "b", "c", "d", "aa", "zz"]
            .iter()
            .map(|n| t.get(&org(n)).unwrap().authority_rank)
            .collect();
        assert_eq!(auth, vec![1, 2, 3, 4, 5, 6]);
        assert!(t.get(&org("aa")).unwrap().isolated);
        assert_eq!(t.get(&org("zz")).unwrap().hub, 0.0);
    }

    #[test]
    fn window_plan_counts() {
        let plan = WindowPlan {
            len: 5,
            step: 5,
            from: 1980,
            to: 2014,
        };
        let w = plan.windows().unwrap();
        assert_eq!(w.len(), 7);
        assert_eq!(w[0], (1980, 1984));
        assert_eq!(w[6], (2010, 2014));
        assert!(WindowPlan { len: 0, ..plan }.windows().is_err());
    }

    fn table(ranks: &[(&str, usize)]) -> RankingTable {
        let mut entries: Vec<_> = ranks
            .iter()
            .map(|&(o, r)| RankEntry {
                org: org(o),
                hub: 0.0,
                hub_rank: r,
                authority: 0.0,
                authority_rank: r,
                isolated: false,
            })
            .collect();
        entries.sort_by(|a, b| a.org.cmp(&b.org));
        RankingTable {
            window: (2000, 2004),
            entries,
            converged: true,
            iterations: 1,
        }
    }

    #[test]
    fn identical_tables_have_zero_residuals() {
        let t = table(&[("a", 1), ("b", 2), ("c", 3), ("d", 4)]);
        let out = rank_change_outliers(&t, &t, 10, RankKind::Authority).unwrap();
        assert!(out.iter().all(|(_, r)| r.abs() < 1e-12));
    }

    #[test]
    fn single_mover_has_the_largest_residual() {
        let names: Vec<String> = (0..60).map(|i| format!("o{i:02}")).collect();
        let base: Vec<(&str, usize)> = names.iter().enumerate().map(|(i, n)| (n.as_str(), i + 1)).collect();
        let mut moved = base.clone();
        // o55 jumps 50 places; everyone between shifts down by one.
        for entry in moved.iter_mut() {
            if entry.1 >= 6 && entry.1 <= 55 {
                entry.1 += 1;
            }
        }
        moved[55].1 = 6;
        let out = rank_change_outliers(&table(&base), &table(&moved), 1, RankKind::Hub).unwrap();
        assert_eq!(out[0].0.as_str(), "o55");
    }

    #[test]
    fn outliers_need_three_nodes() {
        let t = table(&[("a", 1), ("b", 2)]);
        assert!(matches!(
            rank_change_outliers(&t, &t, 1, RankKind::Hub),
            Err(Error::TooFewObservations { needed: 3, got: 2 })
        ));
    }

    #[test]
    fn rank_delta_sign() {
        let t = table(&[("src", 50), ("dst", 10)]);
        let mv = Transition {
            person: crate::model::PersonId::new("p").unwrap(),
            source: org("src"),
            target: org("dst"),
            year: 2005,
            kind: crate::model::TransitionKind::Hard,
            involves_postdoc: false,
        };
        assert_eq!(rank_delta(&mv, &t), Some(40));
        let back = Transition {
            source: org("dst"),
            target: org("src"),
            ..mv.clone()
        };
        assert_eq!(rank_delta(&back, &t), Some(-40));
        let missing = Transition {
            target: org("nowhere"),
            ..mv
        };
        assert_eq!(rank_delta(&missing, &t), None);
    }

    #[test]
    fn history_lookup() {
        let mut a = table(&[("a", 1)]);
        a.window = (2001, 2005);
        let h = RankHistory::new([a]);
        assert!(h.ending_at(2005, 5).is_some());
        assert!(h.preceding(2006, 5).is_some());
        assert!(h.preceding(2005, 5).is_none());
    }
}
