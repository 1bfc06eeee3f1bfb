//! Window-by-window orchestration: networks, metrics, series and yearly
//! summaries.

use std::collections::{BTreeMap, BTreeSet};
use std::io::{Read, Write};
use std::path::PathBuf;
use std::str::FromStr;

use chrono::{Datelike, NaiveDate};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::curvature::{all_pair_curvatures, curvature_matrix, edge_curvatures, CurvatureResult};
use crate::entropy::global_entropy;
use crate::error::{Error, Result};
use crate::graph::{path_stats, DistanceMatrix, Graph};
use crate::market::{build_window_network, log_returns, PriceMatrix, WindowSpec};
use crate::portfolio::{curvature_portfolio_measure, min_risk_weights, PortfolioProblem};

/// Which measures to compute per window.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct MetricSet {
    pub curvature: bool,
    pub entropy: bool,
    pub paths: bool,
    pub portfolio: bool,
}

impl Default for MetricSet {
    fn default() -> Self {
        Self {
            curvature: true,
            entropy: true,
            paths: true,
            portfolio: false,
        }
    }
}

impl MetricSet {
    pub fn none() -> Self {
        Self {
            curvature: false,
            entropy: false,
            paths: false,
            portfolio: false,
        }
    }

    pub fn all() -> Self {
        Self {
            portfolio: true,
            ..Self::default()
        }
    }

    /// Series columns after `b,end_date,nodes,edges`.
    pub fn columns(&self) -> Vec<&'static str> {
        let mut cols = Vec::new();
        if self.curvature {
            cols.push("avg_kappa");
        }
        if self.entropy {
            cols.push("entropy");
        }
        if self.paths {
            cols.extend(["avg_path", "diameter"]);
        }
        if self.portfolio {
            cols.extend(["min_risk", "w_kappa_port"]);
        }
        cols
    }
}

impl FromStr for MetricSet {
    type Err = Error;

    /// Comma-separated subset of `curvature,entropy,paths,portfolio`, or `all`.
    fn from_str(s: &str) -> Result<Self> {
        let mut set = MetricSet::none();
        for name in s.split(',').map(str::trim).filter(|n| !n.is_empty()) {
            match name {
                "curvature" => set.curvature = true,
                "entropy" => set.entropy = true,
                "paths" => set.paths = true,
                "portfolio" => set.portfolio = true,
                "all" => set = MetricSet::all(),
                other => {
                    return Err(Error::InvalidParameter(format!(
                        "unknown metric `{other}` (expected curvature, entropy, paths, portfolio or all)"
                    )))
                }
            }
        }
        if set == MetricSet::none() {
            return Err(Error::InvalidParameter("no metrics selected".into()));
        }
        Ok(set)
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct PipelineConfig {
    pub window: WindowSpec,
    pub metrics: MetricSet,
    /// Also compute curvature for every non-adjacent pair.
    pub all_pairs: bool,
    pub input: Option<PathBuf>,
    pub output: Option<PathBuf>,
    pub summary: Option<PathBuf>,
}

/// Parses `key = value` lines. `#` starts a comment.
pub fn parse_config(text: &str) -> Result<BTreeMap<String, String>> {
    let mut map = BTreeMap::new();
    for (lineno, line) in text.lines().enumerate() {
        let content = line.split('#').next().unwrap_or("").trim();
        if content.is_empty() {
            continue;
        }
        let (key, value) = content.split_once('=').ok_or_else(|| Error::Parse {
            line: lineno + 1,
            message: format!("expected `key = value`, got `{content}`"),
        })?;
        map.insert(key.trim().to_string(), value.trim().to_string());
    }
    Ok(map)
}

fn parse_value<T: FromStr>(key: &str, value: &str) -> Result<T> {
    value
        .parse()
        .map_err(|_| Error::InvalidParameter(format!("bad value `{value}` for `{key}`")))
}

impl PipelineConfig {
    /// Applies recognized keys from a parsed config file. Unknown keys are
    /// rejected so typos do not silently fall back to defaults.
    pub fn apply(&mut self, entries: &BTreeMap<String, String>) -> Result<()> {
        for (key, value) in entries {
            match key.as_str() {
                "window_length" => self.window.window_length = parse_value(key, value)?,
                "threshold" => self.window.threshold = parse_value(key, value)?,
                "step" => self.window.step = parse_value(key, value)?,
                "metrics" => self.metrics = value.parse()?,
                "all_pairs" => self.all_pairs = parse_value(key, value)?,
                "input" => self.input = Some(PathBuf::from(value)),
                "output" => self.output = Some(PathBuf::from(value)),
                "summary" => self.summary = Some(PathBuf::from(value)),
                other => {
                    return Err(Error::InvalidParameter(format!("unknown config key `{other}`")))
                }
            }
        }
        Ok(())
    }
}

/// Per-window measures. Fields for metrics that were not requested are `None`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WindowRecord {
    pub b: usize,
    pub end_date: NaiveDate,
    pub nodes: usize,
    pub edges: usize,
    pub avg_kappa: Option<f64>,
    pub entropy: Option<f64>,
    pub avg_path: Option<f64>,
    pub diameter: Option<u32>,
    pub min_risk: Option<f64>,
    pub w_kappa_port: Option<f64>,
}

impl WindowRecord {
    fn value(&self, column: &str) -> Option<f64> {
        match column {
            "avg_kappa" => self.avg_kappa,
            "entropy" => self.entropy,
            "avg_path" => self.avg_path,
            "diameter" => self.diameter.map(f64::from),
            "min_risk" => self.min_risk,
            "w_kappa_port" => self.w_kappa_port,
            _ => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SkippedWindow {
    pub b: usize,
    pub reason: String,
}

/// One all-pairs curvature row, labelled.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PairRow {
    pub b: usize,
    pub u: String,
    pub v: String,
    pub kappa: f64,
    pub w1: f64,
    pub hop: u32,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PipelineOutput {
    pub metrics: MetricSet,
    pub records: Vec<WindowRecord>,
    pub skipped: Vec<SkippedWindow>,
    pub all_pairs: Vec<PairRow>,
}

/// Graph-only measures of a single network.
#[derive(Debug, Clone, PartialEq)]
pub struct GraphMetrics {
    pub avg_kappa: Option<f64>,
    pub entropy: Option<f64>,
    pub avg_path: Option<f64>,
    pub diameter: Option<u32>,
    pub all_pairs: Vec<CurvatureResult>,
    pub curvature: Option<nalgebra::DMatrix<f64>>,
}

/// Curvature, entropy and path statistics of one connected graph.
/// `keep_matrix` retains the edge-curvature matrix for portfolio use.
pub fn graph_metrics(
    graph: &Graph,
    metrics: &MetricSet,
    all_pairs: bool,
    keep_matrix: bool,
) -> Result<GraphMetrics> {
    let distances = DistanceMatrix::new(graph);
    let mut out = GraphMetrics {
        avg_kappa: None,
        entropy: None,
        avg_path: None,
        diameter: None,
        all_pairs: Vec::new(),
        curvature: None,
    };
    if metrics.curvature || keep_matrix {
        let summary = edge_curvatures(graph, &distances)?;
        if metrics.curvature {
            out.avg_kappa = Some(summary.average);
        }
        if keep_matrix {
            out.curvature = Some(curvature_matrix(&summary, graph));
        }
    }
    if all_pairs {
        out.all_pairs = all_pair_curvatures(graph, &distances)?;
    }
    if metrics.entropy {
        out.entropy = Some(global_entropy(graph)?.global);
    }
    if metrics.paths {
        let stats = path_stats(graph, &distances)?;
        out.avg_path = Some(stats.average_shortest_path);
        out.diameter = Some(stats.diameter);
    }
    Ok(out)
}

enum WindowOutcome {
    Done(WindowRecord, Vec<PairRow>),
    Skipped(SkippedWindow),
}

/// Runs every window of `prices`. Windows with a zero-variance ticker are
/// skipped with a warning; any other failure aborts with the window index.
pub fn run_pipeline(prices: &PriceMatrix, config: &PipelineConfig) -> Result<PipelineOutput> {
    let returns = log_returns(prices)?;
    let spec = config.window;
    let starts = spec.window_starts(returns.len())?;
    log::info!(
        "{} windows of {} returns over {} tickers",
        starts.len(),
        spec.window_length,
        prices.tickers().len()
    );
    let metrics = config.metrics;
    let outcomes: Vec<WindowOutcome> = starts
        .par_iter()
        .enumerate()
        .map(|(b, &start)| {
            let net = match build_window_network(&returns, b, start, &spec) {
                Ok(net) => net,
                Err(e @ Error::ZeroVariance { .. }) => {
                    return Ok(WindowOutcome::Skipped(SkippedWindow {
                        b,
                        reason: e.to_string(),
                    }))
                }
                Err(e) => return Err(e),
            };
            let gm = graph_metrics(&net.graph, &metrics, config.all_pairs, metrics.portfolio)?;
            let (min_risk, w_kappa_port) = if metrics.portfolio {
                let problem = PortfolioProblem::from_window(&returns, start, spec.window_length)?;
                let result = min_risk_weights(&problem)?;
                let k = gm.curvature.as_ref().expect("curvature matrix kept for portfolio");
                let measure = curvature_portfolio_measure(&result.weights, k)?;
                (Some(result.risk), Some(measure))
            } else {
                (None, None)
            };
            let pairs = gm
                .all_pairs
                .iter()
                .map(|c| PairRow {
                    b,
                    u: net.graph.label(c.pair.0).to_string(),
                    v: net.graph.label(c.pair.1).to_string(),
                    kappa: c.kappa,
                    w1: c.w1,
                    hop: c.hop,
                })
                .collect();
            Ok(WindowOutcome::Done(
                WindowRecord {
                    b,
                    end_date: net.end_date,
                    nodes: net.graph.node_count(),
                    edges: net.graph.edge_count(),
                    avg_kappa: gm.avg_kappa,
                    entropy: gm.entropy,
                    avg_path: gm.avg_path,
                    diameter: gm.diameter,
                    min_risk,
                    w_kappa_port,
                },
                pairs,
            ))
        })
        .map(|r: Result<WindowOutcome>| r)
        .enumerate()
        .map(|(b, r)| {
            r.map_err(|source| Error::Window {
                index: b,
                source: Box::new(source),
            })
        })
        .collect::<Result<_>>()?;

    let mut output = PipelineOutput {
        metrics,
        records: Vec::new(),
        skipped: Vec::new(),
        all_pairs: Vec::new(),
    };
    for outcome in outcomes {
        match outcome {
            WindowOutcome::Done(record, pairs) => {
                output.records.push(record);
                output.all_pairs.extend(pairs);
            }
            WindowOutcome::Skipped(s) => {
                log::warn!("skipping window {}: {}", s.b, s.reason);
                output.skipped.push(s);
            }
        }
    }
    Ok(output)
}

fn fmt_opt(value: Option<f64>) -> String {
    value.map(|v| v.to_string()).unwrap_or_default()
}

/// Series CSV: `b,end_date,nodes,edges` followed by the selected metric columns.
pub fn write_series_csv<W: Write>(records: &[WindowRecord], metrics: &MetricSet, out: W) -> Result<()> {
    let columns = metrics.columns();
    let mut writer = csv::Writer::from_writer(out);
    let mut header = vec!["b", "end_date", "nodes", "edges"];
    header.extend(&columns);
    writer.write_record(&header)?;
    for r in records {
        let mut row = vec![
            r.b.to_string(),
            r.end_date.to_string(),
            r.nodes.to_string(),
            r.edges.to_string(),
        ];
        for col in &columns {
            row.push(match *col {
                "diameter" => r.diameter.map(|d| d.to_string()).unwrap_or_default(),
                other => fmt_opt(r.value(other)),
            });
        }
        writer.write_record(&row)?;
    }
    writer.flush()?;
    Ok(())
}

/// Reads a series CSV written by [`write_series_csv`], returning the
/// records and the metric set implied by its columns.
pub fn read_series_csv<R: Read>(input: R) -> Result<(Vec<WindowRecord>, MetricSet)> {
    let mut reader = csv::Reader::from_reader(input);
    let header = reader.headers()?.clone();
    let position = |name: &str| header.iter().position(|h| h == name);
    for required in ["b", "end_date", "nodes", "edges"] {
        if position(required).is_none() {
            return Err(Error::Data(format!("series CSV lacks column `{required}`")));
        }
    }
    let metrics = MetricSet {
        curvature: position("avg_kappa").is_some(),
        entropy: position("entropy").is_some(),
        paths: position("avg_path").is_some() && position("diameter").is_some(),
        portfolio: position("min_risk").is_some() && position("w_kappa_port").is_some(),
    };
    let mut records = Vec::new();
    for (row_no, rec) in reader.records().enumerate() {
        let rec = rec?;
        let line = row_no + 2;
        let bad = |col: &str| Error::Parse {
            line,
            message: format!("bad `{col}` value"),
        };
        let field = |col: &str| position(col).and_then(|i| rec.get(i)).unwrap_or("");
        let opt_f64 = |col: &str| -> Result<Option<f64>> {
            let v = field(col);
            if v.is_empty() {
                Ok(None)
            } else {
                v.parse().map(Some).map_err(|_| bad(col))
            }
        };
        let diameter = match field("diameter") {
            "" => None,
            v => Some(v.parse().map_err(|_| bad("diameter"))?),
        };
        records.push(WindowRecord {
            b: field("b").parse().map_err(|_| bad("b"))?,
            end_date: field("end_date").parse().map_err(|_| bad("end_date"))?,
            nodes: field("nodes").parse().map_err(|_| bad("nodes"))?,
            edges: field("edges").parse().map_err(|_| bad("edges"))?,
            avg_kappa: opt_f64("avg_kappa")?,
            entropy: opt_f64("entropy")?,
            avg_path: opt_f64("avg_path")?,
            diameter,
            min_risk: opt_f64("min_risk")?,
            w_kappa_port: opt_f64("w_kappa_port")?,
        });
    }
    Ok((records, metrics))
}

/// Portfolio CSV: `date,min_risk,w_kappa_port` per window.
pub fn write_portfolio_csv<W: Write>(records: &[WindowRecord], out: W) -> Result<()> {
    let mut writer = csv::Writer::from_writer(out);
    writer.write_record(["date", "min_risk", "w_kappa_port"])?;
    for r in records {
        writer.write_record([
            r.end_date.to_string(),
            fmt_opt(r.min_risk),
            fmt_opt(r.w_kappa_port),
        ])?;
    }
    writer.flush()?;
    Ok(())
}

/// All-pairs curvature CSV: `b,u,v,kappa,w1,hop`.
pub fn write_pairs_csv<W: Write>(rows: &[PairRow], out: W) -> Result<()> {
    let mut writer = csv::Writer::from_writer(out);
    writer.write_record(["b", "u", "v", "kappa", "w1", "hop"])?;
    for r in rows {
        writer.write_record([
            r.b.to_string(),
            r.u.clone(),
            r.v.clone(),
            r.kappa.to_string(),
            r.w1.to_string(),
            r.hop.to_string(),
        ])?;
    }
    writer.flush()?;
    Ok(())
}

/// Calendar-year means of each measure, keyed by measure then year.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct YearlySummary {
    pub years: Vec<i32>,
    /// `(measure, per-year mean)`; a year without values for a measure is `None`.
    pub rows: Vec<(String, Vec<Option<f64>>)>,
}

pub fn yearly_summary(records: &[WindowRecord], metrics: &MetricSet) -> YearlySummary {
    let years: Vec<i32> = records
        .iter()
        .map(|r| r.end_date.year())
        .collect::<BTreeSet<_>>()
        .into_iter()
        .collect();
    let rows = metrics
        .columns()
        .into_iter()
        .map(|col| {
            let means = years
                .iter()
                .map(|&year| {
                    let values: Vec<f64> = records
                        .iter()
                        .filter(|r| r.end_date.year() == year)
                        .filter_map(|r| r.value(col))
                        .collect();
                    (!values.is_empty()).then(|| values.iter().sum::<f64>() / values.len() as f64)
                })
                .collect();
            (col.to_string(), means)
        })
        .collect();
    YearlySummary { years, rows }
}

/// Summary CSV: one row per measure, one column per year.
pub fn write_summary_csv<W: Write>(summary: &YearlySummary, out: W) -> Result<()> {
    let mut writer = csv::Writer::from_writer(out);
    let mut header = vec!["measure".to_string()];
    header.extend(summary.years.iter().map(|y| y.to_string()));
    writer.write_record(&header)?;
    for (name, means) in &summary.rows {
        let mut row = vec![name.clone()];
        row.extend(means.iter().map(|m| fmt_opt(*m)));
        writer.write_record(&row)?;
    }
    writer.flush()?;
    Ok(())
}
