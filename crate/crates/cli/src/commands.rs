use std::fs::{self, File};
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::time::Instant;

use ricci_core::market::{build_network_series, load_prices_file, log_returns, read_network_series, write_network_series};
use ricci_core::pipeline::{
    graph_metrics, parse_config, read_series_csv, run_pipeline, write_pairs_csv, write_portfolio_csv,
    write_series_csv, write_summary_csv, yearly_summary, PairRow, PipelineOutput, WindowRecord,
};
use ricci_core::portfolio::min_risk_weights;
use ricci_core::stochastic::{ou_curvature, simulate_ou, simulate_ou_exact, OuPath};
use ricci_core::synth::synthesize_market;
use ricci_core::{Error, MetricSet, OuParams, PipelineConfig, PortfolioProblem, PriceMatrix, Result};

use crate::{Cli, Command, WindowArgs};

pub fn run(cli: Cli) -> Result<()> {
    let started = Instant::now();
    let mut config = PipelineConfig::default();
    if let Some(path) = &cli.config {
        config.apply(&parse_config(&fs::read_to_string(path)?)?)?;
    }
    match cli.command {
        Command::Ingest { input, out } => ingest(&config, input, out.or(config.output.clone()))?,
        Command::Networks {
            input,
            window,
            out_dir,
        } => {
            window.apply(&mut config);
            networks(&config, input, &out_dir)?
        }
        Command::Analyze {
            input,
            networks,
            window,
            metrics,
            out,
            summary,
            all_pairs_out,
        } => {
            window.apply(&mut config);
            if let Some(m) = metrics {
                config.metrics = m.parse()?;
            }
            if input.is_some() {
                config.input = input;
            }
            if out.is_some() {
                config.output = out;
            }
            if summary.is_some() {
                config.summary = summary;
            }
            config.all_pairs |= all_pairs_out.is_some();
            if config.all_pairs && all_pairs_out.is_none() {
                return Err(Error::InvalidParameter("all_pairs needs --all-pairs-out".into()));
            }
            analyze(&config, networks.as_deref(), all_pairs_out.as_deref())?
        }
        Command::Portfolio {
            input,
            window,
            out,
            weights_out,
        } => {
            window.apply(&mut config);
            portfolio(&config, input, out, weights_out.as_deref())?
        }
        Command::Ou {
            beta,
            sigma,
            x0,
            dt,
            steps,
            seed,
            exact,
            out,
            curve_out,
        } => {
            let base = OuParams { beta: 1.0, sigma, x0, dt, steps, seed };
            ou(&beta, base, exact, out.as_deref(), curve_out.as_deref())?
        }
        Command::Synth {
            regimes,
            assets,
            seed,
            out,
        } => {
            let prices = synthesize_market(&regimes, assets, seed)?;
            prices.write_csv(sink(out.as_deref())?)?;
            log::info!("synthesized {} dates x {} assets", prices.dates().len(), assets);
        }
        Command::Report { series, out } => {
            let (records, metrics) = read_series_csv(File::open(&series)?)?;
            write_summary_csv(&yearly_summary(&records, &metrics), sink(out.as_deref())?)?;
        }
    }
    log::info!("done in {:.2?}", started.elapsed());
    Ok(())
}

impl WindowArgs {
    fn apply(&self, config: &mut PipelineConfig) {
        if let Some(t) = self.window_length {
            config.window.window_length = t;
        }
        if let Some(xi) = self.threshold {
            config.window.threshold = xi;
        }
        if let Some(s) = self.step {
            config.window.step = s;
        }
    }
}

/// Buffered writer on `path`, or on standard output when absent.
fn sink(path: Option<&Path>) -> Result<Box<dyn Write>> {
    Ok(match path {
        Some(p) => Box::new(BufWriter::new(File::create(p)?)),
        None => Box::new(BufWriter::new(io::stdout().lock())),
    })
}

fn load(config: &PipelineConfig, input: Option<PathBuf>) -> Result<PriceMatrix> {
    let path = input
        .or_else(|| config.input.clone())
        .ok_or_else(|| Error::InvalidParameter("no input: pass --input or set `input` in the config".into()))?;
    let (prices, report) = load_prices_file(&path)?;
    for (ticker, reason) in &report.dropped {
        log::warn!("dropped {ticker}: {reason}");
    }
    log::info!(
        "loaded {} dates x {} tickers from {}",
        prices.dates().len(),
        prices.tickers().len(),
        path.display()
    );
    Ok(prices)
}

fn ingest(config: &PipelineConfig, input: Option<PathBuf>, out: Option<PathBuf>) -> Result<()> {
    let prices = load(config, input)?;
    prices.write_csv(sink(out.as_deref())?)
}

fn networks(config: &PipelineConfig, input: Option<PathBuf>, dir: &Path) -> Result<()> {
    let prices = load(config, input)?;
    let series = build_network_series(&prices, &config.window)?;
    let manifest = write_network_series(&series, &config.window, dir)?;
    log::info!("wrote {} networks to {}", manifest.windows.len(), dir.display());
    Ok(())
}

fn analyze(config: &PipelineConfig, networks: Option<&Path>, pairs_out: Option<&Path>) -> Result<()> {
    let output = match networks {
        Some(dir) => analyze_networks(config, dir)?,
        None => {
            let prices = load(config, None)?;
            run_pipeline(&prices, config)?
        }
    };
    log::info!("{} windows analyzed, {} skipped", output.records.len(), output.skipped.len());
    write_series_csv(&output.records, &output.metrics, sink(config.output.as_deref())?)?;
    if let Some(path) = &config.summary {
        write_summary_csv(&yearly_summary(&output.records, &output.metrics), sink(Some(path))?)?;
    }
    if let Some(path) = pairs_out {
        write_pairs_csv(&output.all_pairs, sink(Some(path))?)?;
    }
    Ok(())
}

/// Graph-only measures of networks previously written by `networks`.
fn analyze_networks(config: &PipelineConfig, dir: &Path) -> Result<PipelineOutput> {
    if config.metrics.portfolio {
        return Err(Error::InvalidParameter(
            "the portfolio metric needs returns; analyze the price CSV instead of --networks".into(),
        ));
    }
    let (manifest, graphs) = read_network_series(dir)?;
    let mut output = PipelineOutput {
        metrics: config.metrics,
        records: Vec::with_capacity(graphs.len()),
        skipped: Vec::new(),
        all_pairs: Vec::new(),
    };
    for (entry, graph) in manifest.windows.iter().zip(&graphs) {
        let gm = graph_metrics(graph, &config.metrics, config.all_pairs, false).map_err(|e| Error::Window {
            index: entry.index,
            source: Box::new(e),
        })?;
        output.all_pairs.extend(gm.all_pairs.iter().map(|c| PairRow {
            b: entry.index,
            u: graph.label(c.pair.0).to_string(),
            v: graph.label(c.pair.1).to_string(),
            kappa: c.kappa,
            w1: c.w1,
            hop: c.hop,
        }));
        output.records.push(WindowRecord {
            b: entry.index,
            end_date: entry.end_date,
            nodes: graph.node_count(),
            edges: graph.edge_count(),
            avg_kappa: gm.avg_kappa,
            entropy: gm.entropy,
            avg_path: gm.avg_path,
            diameter: gm.diameter,
            min_risk: None,
            w_kappa_port: None,
        });
    }
    Ok(output)
}

fn portfolio(config: &PipelineConfig, input: Option<PathBuf>, out: Option<PathBuf>, weights_out: Option<&Path>) -> Result<()> {
    let prices = load(config, input)?;
    let config = PipelineConfig {
        metrics: MetricSet {
            portfolio: true,
            ..MetricSet::none()
        },
        all_pairs: false,
        ..config.clone()
    };
    let output = run_pipeline(&prices, &config)?;
    write_portfolio_csv(&output.records, sink(out.as_deref())?)?;
    if let Some(path) = weights_out {
        let returns = log_returns(&prices)?;
        let starts = config.window.window_starts(returns.len())?;
        let mut w = sink(Some(path))?;
        writeln!(w, "b,ticker,weight")?;
        for record in &output.records {
            let problem = PortfolioProblem::from_window(&returns, starts[record.b], config.window.window_length)?;
            let result = min_risk_weights(&problem)?;
            for (ticker, weight) in returns.tickers.iter().zip(&result.weights) {
                if *weight > 0.0 {
                    writeln!(w, "{},{ticker},{weight}", record.b)?;
                }
            }
        }
        w.flush()?;
    }
    Ok(())
}

fn ou(betas: &[f64], base: OuParams, exact: bool, out: Option<&Path>, curve_out: Option<&Path>) -> Result<()> {
    if betas.is_empty() {
        return Err(Error::InvalidParameter("at least one beta is required".into()));
    }
    let paths: Vec<OuPath> = betas
        .iter()
        .map(|&beta| {
            let params = OuParams { beta, ..base };
            if exact {
                simulate_ou_exact(&params)
            } else {
                simulate_ou(&params)
            }
        })
        .collect::<Result<_>>()?;
    let times = &paths[0].times;
    let header = |name: &str| {
        if betas.len() == 1 {
            format!("t,{name}")
        } else {
            let cols: Vec<String> = betas.iter().map(|b| format!("{name}_{b}")).collect();
            format!("t,{}", cols.join(","))
        }
    };

    let mut w = sink(out)?;
    writeln!(w, "{}", header("x"))?;
    for (k, t) in times.iter().enumerate() {
        let xs: Vec<String> = paths.iter().map(|p| p.values[k].to_string()).collect();
        writeln!(w, "{t},{}", xs.join(","))?;
    }
    w.flush()?;

    if let Some(path) = curve_out {
        let mut w = sink(Some(path))?;
        writeln!(w, "{}", header("kappa"))?;
        for t in times {
            let ks = betas
                .iter()
                .map(|&b| ou_curvature(b, *t).map(|k| k.to_string()))
                .collect::<Result<Vec<_>>>()?;
            writeln!(w, "{t},{}", ks.join(","))?;
        }
        w.flush()?;
    }
    for (beta, p) in betas.iter().zip(&paths) {
        if let Some(t) = p.first_time_within(0.5) {
            log::info!("beta {beta}: |x| first below half of |x0| at t = {t}");
        }
    }
    Ok(())
}
