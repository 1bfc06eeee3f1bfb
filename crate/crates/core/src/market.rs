//! Price ingestion and sliding-window correlation networks.
//!
//! Each window of `T` daily log returns yields a Pearson correlation
//! matrix. The network for that window is the minimum spanning tree under
//! `ĉ = √(2(1 − c))` plus every pair whose raw correlation reaches the
//! threshold `ξ`. The resulting graph is unweighted.

use std::collections::BTreeSet;
use std::fs;
use std::io::{Read, Write};
use std::path::Path;

use chrono::NaiveDate;
use nalgebra::DMatrix;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::{Graph, GraphBuilder};

pub const DEFAULT_SHORT_WINDOW: usize = 22;
pub const DEFAULT_LONG_WINDOW: usize = 132;
pub const DEFAULT_THRESHOLD: f64 = 0.85;

const DATE_FORMAT: &str = "%Y-%m-%d";

/// Daily closes, dates × tickers. Tickers are sorted; every close is
/// positive and present.
#[derive(Debug, Clone, PartialEq)]
pub struct PriceMatrix {
    dates: Vec<NaiveDate>,
    tickers: Vec<String>,
    closes: DMatrix<f64>,
}

impl PriceMatrix {
    /// Validates and reorders columns so tickers are sorted.
    pub fn new(dates: Vec<NaiveDate>, tickers: Vec<String>, closes: DMatrix<f64>) -> Result<Self> {
        if closes.nrows() != dates.len() || closes.ncols() != tickers.len() {
            return Err(Error::Data(format!(
                "close matrix is {}x{}, expected {}x{}",
                closes.nrows(),
                closes.ncols(),
                dates.len(),
                tickers.len()
            )));
        }
        check_dates(&dates)?;
        for t in &tickers {
            if t.is_empty() || t.chars().any(char::is_whitespace) {
                return Err(Error::Data(format!("invalid ticker {t:?}")));
            }
        }
        let unique: BTreeSet<&String> = tickers.iter().collect();
        if unique.len() != tickers.len() {
            return Err(Error::Data("duplicate ticker column".into()));
        }
        if let Some(bad) = closes.iter().find(|c| !(c.is_finite() && **c > 0.0)) {
            return Err(Error::Data(format!("non-positive close {bad}")));
        }
        let mut order: Vec<usize> = (0..tickers.len()).collect();
        order.sort_by(|&a, &b| tickers[a].cmp(&tickers[b]));
        let sorted_tickers = order.iter().map(|&i| tickers[i].clone()).collect();
        let sorted = DMatrix::from_fn(dates.len(), order.len(), |r, c| closes[(r, order[c])]);
        Ok(Self {
            dates,
            tickers: sorted_tickers,
            closes: sorted,
        })
    }

    pub fn dates(&self) -> &[NaiveDate] {
        &self.dates
    }

    pub fn tickers(&self) -> &[String] {
        &self.tickers
    }

    pub fn closes(&self) -> &DMatrix<f64> {
        &self.closes
    }

    /// Writes the price CSV format read by [`load_prices`].
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut writer = csv::Writer::from_writer(out);
        let mut header = vec!["date".to_string()];
        header.extend(self.tickers.iter().cloned());
        writer.write_record(&header)?;
        for (r, date) in self.dates.iter().enumerate() {
            let mut row = vec![date.format(DATE_FORMAT).to_string()];
            row.extend(self.closes.row(r).iter().map(|c| c.to_string()));
            writer.write_record(&row)?;
        }
        writer.flush()?;
        Ok(())
    }
}

fn check_dates(dates: &[NaiveDate]) -> Result<()> {
    for pair in dates.windows(2) {
        if pair[1] <= pair[0] {
            return Err(Error::Data(format!(
                "dates must be strictly increasing: {} follows {}",
                pair[1], pair[0]
            )));
        }
    }
    Ok(())
}

/// Tickers removed during loading, with the reason.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct DropReport {
    pub dropped: Vec<(String, String)>,
}

/// Reads `date,T1,T2,...` CSV with `YYYY-MM-DD` dates. Empty cells are
/// missing values; any ticker with a missing or non-positive close is
/// dropped and reported.
pub fn load_prices<R: Read>(input: R) -> Result<(PriceMatrix, DropReport)> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .trim(csv::Trim::All)
        .from_reader(input);
    let header = reader.headers()?.clone();
    if header.len() < 2 || !header[0].eq_ignore_ascii_case("date") {
        return Err(Error::Data(
            "header must be `date,TICKER1,TICKER2,...`".into(),
        ));
    }
    let tickers: Vec<String> = header.iter().skip(1).map(str::to_string).collect();
    let mut dates = Vec::new();
    let mut columns: Vec<Vec<Option<f64>>> = vec![Vec::new(); tickers.len()];
    for (row_no, record) in reader.records().enumerate() {
        let record = record?;
        let line = row_no + 2;
        if record.len() != header.len() {
            return Err(Error::Parse {
                line,
                message: format!("expected {} fields, found {}", header.len(), record.len()),
            });
        }
        let date = NaiveDate::parse_from_str(&record[0], DATE_FORMAT).map_err(|e| Error::Parse {
            line,
            message: format!("bad date `{}`: {e}", &record[0]),
        })?;
        dates.push(date);
        for (col, cell) in record.iter().skip(1).enumerate() {
            let value = if cell.is_empty() {
                None
            } else {
                Some(cell.parse::<f64>().map_err(|_| Error::Parse {
                    line,
                    message: format!("bad close `{cell}` for {}", tickers[col]),
                })?)
            };
            columns[col].push(value);
        }
    }
    check_dates(&dates)?;

    let mut report = DropReport::default();
    let mut kept_tickers = Vec::new();
    let mut kept_columns = Vec::new();
    for (ticker, column) in tickers.into_iter().zip(columns) {
        let reason = if column.iter().any(Option::is_none) {
            Some("missing close")
        } else if column.iter().flatten().any(|c| !(c.is_finite() && *c > 0.0)) {
            Some("non-positive close")
        } else {
            None
        };
        match reason {
            Some(r) => {
                log::warn!("dropping {ticker}: {r}");
                report.dropped.push((ticker, r.to_string()));
            }
            None => {
                kept_tickers.push(ticker);
                kept_columns.push(column.into_iter().flatten().collect::<Vec<f64>>());
            }
        }
    }
    if kept_tickers.len() < 2 {
        return Err(Error::InsufficientData(format!(
            "{} ticker(s) survive filtering, need at least 2",
            kept_tickers.len()
        )));
    }
    let closes = DMatrix::from_fn(dates.len(), kept_tickers.len(), |r, c| kept_columns[c][r]);
    Ok((PriceMatrix::new(dates, kept_tickers, closes)?, report))
}

pub fn load_prices_file(path: &Path) -> Result<(PriceMatrix, DropReport)> {
    load_prices(fs::File::open(path)?)
}

/// Daily log returns; row `t` covers `dates[t] → dates[t + 1]`.
#[derive(Debug, Clone, PartialEq)]
pub struct ReturnMatrix {
    /// End date of each return.
    pub dates: Vec<NaiveDate>,
    pub tickers: Vec<String>,
    pub values: DMatrix<f64>,
}

impl ReturnMatrix {
    pub fn len(&self) -> usize {
        self.dates.len()
    }

    pub fn is_empty(&self) -> bool {
        self.dates.is_empty()
    }
}

pub fn log_returns(prices: &PriceMatrix) -> Result<ReturnMatrix> {
    let rows = prices.dates.len();
    if rows < 2 {
        return Err(Error::InsufficientData(
            "log returns need at least two dates".into(),
        ));
    }
    let c = &prices.closes;
    let values = DMatrix::from_fn(rows - 1, c.ncols(), |t, j| (c[(t + 1, j)] / c[(t, j)]).ln());
    Ok(ReturnMatrix {
        dates: prices.dates[1..].to_vec(),
        tickers: prices.tickers.clone(),
        values,
    })
}

/// Window length, correlation threshold and sliding step.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WindowSpec {
    pub window_length: usize,
    pub threshold: f64,
    pub step: usize,
}

impl Default for WindowSpec {
    fn default() -> Self {
        Self {
            window_length: DEFAULT_SHORT_WINDOW,
            threshold: DEFAULT_THRESHOLD,
            step: 1,
        }
    }
}

impl WindowSpec {
    pub fn validate(&self) -> Result<()> {
        if self.window_length < 2 {
            return Err(Error::InvalidParameter(format!(
                "window length must be at least 2, got {}",
                self.window_length
            )));
        }
        if !(self.threshold > -1.0 && self.threshold <= 1.0) {
            return Err(Error::InvalidParameter(format!(
                "threshold must lie in (-1, 1], got {}",
                self.threshold
            )));
        }
        if self.step == 0 {
            return Err(Error::InvalidParameter("step must be positive".into()));
        }
        Ok(())
    }

    /// Start offsets (in return rows) of every full window.
    pub fn window_starts(&self, returns: usize) -> Result<Vec<usize>> {
        self.validate()?;
        if returns < self.window_length {
            return Err(Error::InsufficientData(format!(
                "window length {} needs at least {} price dates, have {}",
                self.window_length,
                self.window_length + 1,
                returns + 1
            )));
        }
        Ok((0..=returns - self.window_length).step_by(self.step).collect())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CorrelationWindow {
    pub index: usize,
    pub start_date: NaiveDate,
    pub end_date: NaiveDate,
    pub tickers: Vec<String>,
    pub corr: DMatrix<f64>,
}

/// Sample covariance of the window rows `start..start + len`.
pub fn window_covariance(returns: &ReturnMatrix, start: usize, len: usize) -> Result<DMatrix<f64>> {
    let centered = centered_window(returns, start, len)?;
    Ok(centered.transpose() * &centered / (len as f64 - 1.0))
}

fn centered_window(returns: &ReturnMatrix, start: usize, len: usize) -> Result<DMatrix<f64>> {
    if len < 2 || start + len > returns.len() {
        return Err(Error::InsufficientData(format!(
            "window [{start}, {}) exceeds {} returns",
            start + len,
            returns.len()
        )));
    }
    let mut rows = returns.values.rows(start, len).into_owned();
    for mut col in rows.column_iter_mut() {
        let mean = col.mean();
        col.add_scalar_mut(-mean);
    }
    Ok(rows)
}

/// Pearson correlation over `len` return rows starting at `start`.
/// `index` labels the window in errors and output.
pub fn window_correlation(
    returns: &ReturnMatrix,
    index: usize,
    start: usize,
    len: usize,
) -> Result<CorrelationWindow> {
    let centered = centered_window(returns, start, len)?;
    let n = centered.ncols();
    let norms: Vec<f64> = centered.column_iter().map(|c| c.norm()).collect();
    if let Some(j) = norms.iter().position(|s| !(s.is_finite() && *s > 0.0)) {
        return Err(Error::ZeroVariance {
            ticker: returns.tickers[j].clone(),
            window: index,
        });
    }
    let gram = centered.transpose() * &centered;
    let corr = DMatrix::from_fn(n, n, |a, b| {
        if a == b {
            1.0
        } else {
            (gram[(a, b)] / (norms[a] * norms[b])).clamp(-1.0, 1.0)
        }
    });
    Ok(CorrelationWindow {
        index,
        start_date: returns.dates[start],
        end_date: returns.dates[start + len - 1],
        tickers: returns.tickers.clone(),
        corr,
    })
}

/// `√(2(1 − c))`, rejecting correlations outside `[-1, 1]` by more than 1e-12.
pub fn corr_to_distance(c: f64) -> Result<f64> {
    const SLACK: f64 = 1e-12;
    if !(c.is_finite() && (-1.0 - SLACK..=1.0 + SLACK).contains(&c)) {
        return Err(Error::InvalidParameter(format!(
            "correlation {c} outside [-1, 1]"
        )));
    }
    Ok((2.0 * (1.0 - c.clamp(-1.0, 1.0))).sqrt())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MstEdge {
    pub u: usize,
    pub v: usize,
    pub distance: f64,
}

/// Kruskal's algorithm on `ĉ`. Ties fall back to ticker-pair order, which
/// equals index order because tickers are sorted.
pub fn build_mst(window: &CorrelationWindow) -> Result<Vec<MstEdge>> {
    let n = window.tickers.len();
    if n < 2 {
        return Err(Error::InsufficientData(
            "a spanning tree needs at least two tickers".into(),
        ));
    }
    let mut candidates = Vec::with_capacity(n * (n - 1) / 2);
    for u in 0..n {
        for v in (u + 1)..n {
            candidates.push(MstEdge {
                u,
                v,
                distance: corr_to_distance(window.corr[(u, v)])?,
            });
        }
    }
    candidates.sort_by(|a, b| {
        a.distance
            .total_cmp(&b.distance)
            .then(a.u.cmp(&b.u))
            .then(a.v.cmp(&b.v))
    });
    let mut sets = DisjointSets::new(n);
    let mut tree = Vec::with_capacity(n - 1);
    for edge in candidates {
        if sets.union(edge.u, edge.v) {
            tree.push(edge);
            if tree.len() == n - 1 {
                break;
            }
        }
    }
    Ok(tree)
}

struct DisjointSets {
    parent: Vec<usize>,
    rank: Vec<u8>,
}

impl DisjointSets {
    fn new(n: usize) -> Self {
        Self {
            parent: (0..n).collect(),
            rank: vec![0; n],
        }
    }

    fn find(&mut self, mut x: usize) -> usize {
        while self.parent[x] != x {
            self.parent[x] = self.parent[self.parent[x]];
            x = self.parent[x];
        }
        x
    }

    fn union(&mut self, a: usize, b: usize) -> bool {
        let (ra, rb) = (self.find(a), self.find(b));
        if ra == rb {
            return false;
        }
        match self.rank[ra].cmp(&self.rank[rb]) {
            std::cmp::Ordering::Less => self.parent[ra] = rb,
            std::cmp::Ordering::Greater => self.parent[rb] = ra,
            std::cmp::Ordering::Equal => {
                self.parent[rb] = ra;
                self.rank[ra] += 1;
            }
        }
        true
    }
}

/// Unweighted window network with edge provenance.
#[derive(Debug, Clone, PartialEq)]
pub struct MarketGraph {
    pub index: usize,
    pub start_date: NaiveDate,
    pub end_date: NaiveDate,
    pub graph: Graph,
    /// Tree edges as `(u, v, ĉ)`.
    pub mst_edges: Vec<MstEdge>,
    /// Non-tree pairs with `c ≥ ξ`, as `(u, v, c)`.
    pub threshold_edges: Vec<(usize, usize, f64)>,
}

/// Union of the tree and every pair with `c_xy ≥ xi`.
pub fn add_threshold_edges(mst: &[MstEdge], window: &CorrelationWindow, xi: f64) -> Result<MarketGraph> {
    let n = window.tickers.len();
    if mst.len() + 1 != n {
        return Err(Error::InvalidGraph(format!(
            "tree has {} edges for {n} tickers",
            mst.len()
        )));
    }
    let in_tree: BTreeSet<(usize, usize)> = mst.iter().map(|e| (e.u.min(e.v), e.u.max(e.v))).collect();
    let mut threshold_edges = Vec::new();
    for u in 0..n {
        for v in (u + 1)..n {
            let c = window.corr[(u, v)];
            if c >= xi && !in_tree.contains(&(u, v)) {
                threshold_edges.push((u, v, c));
            }
        }
    }
    let mut builder = GraphBuilder::new();
    for t in &window.tickers {
        builder.add_node(t.as_str())?;
    }
    for &(u, v) in &in_tree {
        builder.add_edge(window.tickers[u].as_str(), window.tickers[v].as_str(), 1.0)?;
    }
    for &(u, v, _) in &threshold_edges {
        builder.add_edge(window.tickers[u].as_str(), window.tickers[v].as_str(), 1.0)?;
    }
    Ok(MarketGraph {
        index: window.index,
        start_date: window.start_date,
        end_date: window.end_date,
        graph: builder.build(),
        mst_edges: mst.to_vec(),
        threshold_edges,
    })
}

/// Network for the window starting at return row `start`.
pub fn build_window_network(
    returns: &ReturnMatrix,
    index: usize,
    start: usize,
    spec: &WindowSpec,
) -> Result<MarketGraph> {
    let window = window_correlation(returns, index, start, spec.window_length)?;
    let mst = build_mst(&window)?;
    add_threshold_edges(&mst, &window, spec.threshold)
}

/// One network per window, in date order. Any failing window aborts.
pub fn build_network_series(prices: &PriceMatrix, spec: &WindowSpec) -> Result<Vec<MarketGraph>> {
    let returns = log_returns(prices)?;
    let starts = spec.window_starts(returns.len())?;
    starts
        .par_iter()
        .enumerate()
        .map(|(b, &start)| build_window_network(&returns, b, start, spec))
        .collect()
}

/// Manifest row describing one serialized window network.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ManifestEntry {
    pub index: usize,
    pub start_date: NaiveDate,
    pub end_date: NaiveDate,
    pub file: String,
    pub nodes: usize,
    pub edges: usize,
    pub mst_edges: usize,
    pub threshold_edges: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NetworkManifest {
    pub window_length: usize,
    pub threshold: f64,
    pub step: usize,
    pub windows: Vec<ManifestEntry>,
}

pub const MANIFEST_FILE: &str = "manifest.json";

/// Writes `window_XXXXX.edges` per network plus `manifest.json` into `dir`.
pub fn write_network_series(series: &[MarketGraph], spec: &WindowSpec, dir: &Path) -> Result<NetworkManifest> {
    fs::create_dir_all(dir)?;
    let mut windows = Vec::with_capacity(series.len());
    for net in series {
        let file = format!("window_{:05}.edges", net.index);
        fs::write(dir.join(&file), net.graph.to_edge_list())?;
        windows.push(ManifestEntry {
            index: net.index,
            start_date: net.start_date,
            end_date: net.end_date,
            file,
            nodes: net.graph.node_count(),
            edges: net.graph.edge_count(),
            mst_edges: net.mst_edges.len(),
            threshold_edges: net.threshold_edges.len(),
        });
    }
    let manifest = NetworkManifest {
        window_length: spec.window_length,
        threshold: spec.threshold,
        step: spec.step,
        windows,
    };
    let mut json = serde_json::to_string_pretty(&manifest)?;
    json.push('\n');
    fs::write(dir.join(MANIFEST_FILE), json)?;
    Ok(manifest)
}

/// Reads back a directory produced by [`write_network_series`].
pub fn read_network_series(dir: &Path) -> Result<(NetworkManifest, Vec<Graph>)> {
    let manifest: NetworkManifest =
        serde_json::from_reader(fs::File::open(dir.join(MANIFEST_FILE))?)?;
    let graphs = manifest
        .windows
        .iter()
        .map(|w| {
            let file = fs::File::open(dir.join(&w.file))?;
            Graph::read_edge_list(std::io::BufReader::new(file))
        })
        .collect::<Result<Vec<_>>>()?;
    Ok((manifest, graphs))
}
