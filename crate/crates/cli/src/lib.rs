//! `failfreq` command line: generate grid systems, run estimators and
//! oracles, and merge report rows into comparison tables.

use std::fs::File;
use std::io::{self, BufWriter, Read, Write};
use std::path::{Path, PathBuf};
use std::time::Instant;

use clap::{Args, Parser, Subcommand, ValueEnum};
use failfreq::exact::FirstOrderBounds;
use failfreq::frequency::{auto_epsilon_all_terminal, auto_epsilon_poly_n};
use failfreq::mcs::mcs_epsilon_for_trials;
use failfreq::*;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

/// Trials per batch ceiling used by `--epsilon-auto`.
pub const DEFAULT_SAMPLE_BUDGET: u64 = 1_000_000;

/// Largest α counted when `--epsilon-auto` sizes the all-terminal method.
const AUTO_ALPHA_CAP: f64 = 3.0;

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error(transparent)]
    Core(#[from] failfreq::Error),
    #[error("{path}: {source}")]
    File { path: PathBuf, source: io::Error },
    #[error("{0}")]
    Input(String),
    #[error("report schema mismatch in {path}: {detail}")]
    Schema { path: PathBuf, detail: String },
    #[error(transparent)]
    Io(#[from] io::Error),
}

impl CliError {
    /// 2 input error, 3 invalid plan, 4 budget or cap exceeded.
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Core(Error::InvalidPlan(_) | Error::FormulaAlmostSurelyFalse) => 3,
            CliError::Core(Error::CapExceeded { .. }) => 4,
            _ => 2,
        }
    }
}

#[derive(Debug, Parser)]
#[command(name = "failfreq", version, about = "Failure frequency and probability of k-terminal reliability networks")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Write a rows x cols all-terminal grid network document.
    GenGrid {
        rows: usize,
        cols: usize,
        /// Unavailability of every component.
        p: f64,
        /// Repair rate of every component.
        mu: f64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Run an estimator or oracle on one or more network documents.
    Estimate(EstimateArgs),
    /// Merge report rows into one comparison table.
    Report {
        rows: Vec<PathBuf>,
        #[arg(long)]
        out: Option<PathBuf>,
        /// Significant digits of values in the table.
        #[arg(long, default_value_t = 6)]
        precision: usize,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
pub enum Method {
    #[value(name = "polyN")]
    #[serde(rename = "polyN")]
    PolyN,
    #[value(name = "all_terminal")]
    #[serde(rename = "all_terminal")]
    AllTerminal,
    #[value(name = "mcs")]
    #[serde(rename = "mcs")]
    Mcs,
    #[value(name = "bounds")]
    #[serde(rename = "bounds")]
    Bounds,
    #[value(name = "exact")]
    #[serde(rename = "exact")]
    Exact,
}

impl Method {
    fn name(self) -> &'static str {
        match self {
            Method::PolyN => "polyN",
            Method::AllTerminal => "all_terminal",
            Method::Mcs => "mcs",
            Method::Bounds => "bounds",
            Method::Exact => "exact",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
pub enum Quantity {
    #[value(name = "pf")]
    #[serde(rename = "P_f")]
    Pf,
    #[value(name = "ff")]
    #[serde(rename = "F_f")]
    Ff,
}

impl Quantity {
    fn name(self) -> &'static str {
        match self {
            Quantity::Pf => "P_f",
            Quantity::Ff => "F_f",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Csv,
    Json,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum SamplerArg {
    Naive,
    Skip,
}

#[derive(Debug, Clone, Args)]
pub struct EstimateArgs {
    #[arg(required = true)]
    pub systems: Vec<PathBuf>,
    #[arg(long, value_enum)]
    pub method: Method,
    #[arg(long, conflicts_with = "epsilon_auto")]
    pub epsilon: Option<f64>,
    /// Pick the smallest ε whose estimator batches fit --sample-budget.
    #[arg(long)]
    pub epsilon_auto: bool,
    #[arg(long, default_value_t = 1e-2)]
    pub delta: f64,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, default_value_t = 4.0)]
    pub threshold_exponent: f64,
    #[arg(long, default_value_t = 2.0)]
    pub rgc_c: f64,
    #[arg(long, default_value_t = 1e7)]
    pub rgc_budget: f64,
    #[arg(long, default_value_t = DEFAULT_SAMPLE_BUDGET as f64)]
    pub sample_budget: f64,
    #[arg(long, value_enum, default_value_t = Format::Csv)]
    pub format: Format,
    /// Worker threads across systems.
    #[arg(long, default_value_t = 1)]
    pub jobs: usize,
    /// Quantities to report; both by default.
    #[arg(long, value_enum)]
    pub quantity: Option<Quantity>,
    /// Also compute first-order bounds and the actual error factor.
    #[arg(long)]
    pub with_bounds: bool,
    /// Write the cutsets used as JSON lines (single system only).
    #[arg(long)]
    pub cutsets_out: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t = SamplerArg::Naive)]
    pub mcs_sampler: SamplerArg,
    /// Size Monte Carlo for an additive error ε on F_f.
    #[arg(long)]
    pub additive: bool,
}

/// One output row: a single quantity of a single system from one method.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunReportRow {
    pub system: String,
    /// Uniform component unavailability, or `mixed`.
    pub p: String,
    pub method: Method,
    pub quantity: Quantity,
    pub value: Option<f64>,
    pub runtime_s: f64,
    pub theoretical_epsilon: Option<f64>,
    /// `max{|φ−F⁻|, |φ−F⁺|}/F⁻`; absent without bounds or without failures.
    pub actual_error: Option<f64>,
    pub lower: Option<f64>,
    pub upper: Option<f64>,
    pub matched_decimals: Option<u32>,
    pub p_star: Option<f64>,
    pub alpha: Option<f64>,
    pub n_alpha: Option<usize>,
    pub samples: Option<u64>,
    pub seed: Option<u64>,
    pub no_failure: bool,
}

const ROW_HEADER: [&str; 17] = [
    "system",
    "p",
    "method",
    "quantity",
    "value",
    "runtime_s",
    "theoretical_epsilon",
    "actual_error",
    "lower",
    "upper",
    "matched_decimals",
    "p_star",
    "alpha",
    "n_alpha",
    "samples",
    "seed",
    "no_failure",
];

fn full(x: f64) -> String {
    format!("{x:.16e}")
}

fn opt<T>(x: Option<T>, f: impl Fn(T) -> String) -> String {
    x.map(f).unwrap_or_default()
}

impl RunReportRow {
    fn new(system: &str, p: &str, method: Method, quantity: Quantity) -> Self {
        Self {
            system: system.to_owned(),
            p: p.to_owned(),
            method,
            quantity,
            value: None,
            runtime_s: 0.0,
            theoretical_epsilon: None,
            actual_error: None,
            lower: None,
            upper: None,
            matched_decimals: None,
            p_star: None,
            alpha: None,
            n_alpha: None,
            samples: None,
            seed: None,
            no_failure: false,
        }
    }

    fn record(&self) -> Vec<String> {
        vec![
            self.system.clone(),
            self.p.clone(),
            self.method.name().to_owned(),
            self.quantity.name().to_owned(),
            opt(self.value, full),
            full(self.runtime_s),
            opt(self.theoretical_epsilon, full),
            opt(self.actual_error, full),
            opt(self.lower, full),
            opt(self.upper, full),
            opt(self.matched_decimals, |d| d.to_string()),
            opt(self.p_star, full),
            opt(self.alpha, full),
            opt(self.n_alpha, |n| n.to_string()),
            opt(self.samples, |n| n.to_string()),
            opt(self.seed, |n| n.to_string()),
            self.no_failure.to_string(),
        ]
    }

    fn with_bounds(mut self, b: Option<&FirstOrderBounds<f64>>) -> Self {
        if let Some(b) = b {
            self.lower = Some(b.lower);
            self.upper = Some(b.upper);
            self.matched_decimals = Some(b.matched_decimals);
            if let (Some(v), false) = (self.value, self.no_failure) {
                self.actual_error = Some(actual_error(v, b.lower, b.upper));
            }
        }
        self
    }
}

/// Observed error factor of `value` against bounds `[lower, upper]`.
pub fn actual_error(value: f64, lower: f64, upper: f64) -> f64 {
    (value - lower).abs().max((value - upper).abs()) / lower
}

/// Writes rows as CSV with 17 significant digits.
pub fn write_rows_csv(rows: &[RunReportRow], out: impl Write) -> Result<(), CliError> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(ROW_HEADER).map_err(csv_io)?;
    for r in rows {
        w.write_record(r.record()).map_err(csv_io)?;
    }
    w.flush()?;
    Ok(())
}

fn csv_io(e: csv::Error) -> CliError {
    CliError::Io(io::Error::other(e))
}

/// Reads rows written by `estimate` (CSV or JSON).
pub fn read_rows(path: &Path) -> Result<Vec<RunReportRow>, CliError> {
    let mut text = String::new();
    File::open(path)
        .and_then(|mut f| f.read_to_string(&mut text))
        .map_err(|source| CliError::File { path: path.to_owned(), source })?;
    let schema = |detail: String| CliError::Schema { path: path.to_owned(), detail };
    if text.trim().is_empty() {
        return Ok(Vec::new());
    }
    if text.trim_start().starts_with('[') {
        return serde_json::from_str(&text).map_err(|e| schema(e.to_string()));
    }
    let mut reader = csv::Reader::from_reader(text.as_bytes());
    let headers = reader.headers().map_err(|e| schema(e.to_string()))?.clone();
    if headers.iter().ne(ROW_HEADER.iter().copied()) {
        return Err(schema(format!("unexpected header {:?}", headers.iter().collect::<Vec<_>>())));
    }
    reader
        .deserialize()
        .collect::<Result<Vec<RunReportRow>, _>>()
        .map_err(|e| schema(e.to_string()))
}

fn system_id(path: &Path, sys: &SystemF64) -> String {
    sys.name().map(str::to_owned).unwrap_or_else(|| {
        path.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_else(|| path.display().to_string())
    })
}

fn uniform_p(sys: &SystemF64) -> String {
    let ps = sys.unavailabilities();
    let first = ps[0];
    if ps.iter().all(|&p| (p - first).abs() <= 1e-12 * first) {
        format!("{first:.6e}")
    } else {
        "mixed".into()
    }
}

struct Settings<'a> {
    args: &'a EstimateArgs,
    options: AllTerminalOptions,
    budget: u64,
}

impl Settings<'_> {
    fn wants(&self, q: Quantity) -> bool {
        self.args.quantity.is_none_or(|x| x == q)
    }

    fn epsilon(&self) -> Result<f64, CliError> {
        self.args
            .epsilon
            .ok_or_else(|| CliError::Input("give --epsilon or --epsilon-auto".into()))
    }
}

fn to_count(x: f64, what: &str) -> Result<u64, CliError> {
    if x.is_finite() && x >= 1.0 {
        Ok(x as u64)
    } else {
        Err(CliError::Input(format!("{what} must be a positive number")))
    }
}

/// Runs `estimate` and returns its rows, in system order.
pub fn estimate(args: &EstimateArgs) -> Result<Vec<RunReportRow>, CliError> {
    if args.epsilon.is_none() && !args.epsilon_auto && matches!(args.method, Method::PolyN | Method::AllTerminal | Method::Mcs) {
        return Err(CliError::Input("give --epsilon or --epsilon-auto".into()));
    }
    if args.cutsets_out.is_some() && args.systems.len() != 1 {
        return Err(CliError::Input("--cutsets-out needs exactly one system".into()));
    }
    let settings = Settings {
        args,
        options: AllTerminalOptions {
            threshold_exponent: args.threshold_exponent,
            rgc: RgcConfig { c: args.rgc_c, budget: to_count(args.rgc_budget, "--rgc-budget")? },
            mcs_sampler: match args.mcs_sampler {
                SamplerArg::Naive => McsSampler::Naive,
                SamplerArg::Skip => McsSampler::Skip,
            },
        },
        budget: to_count(args.sample_budget, "--sample-budget")?,
    };
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(args.jobs.max(1))
        .build()
        .map_err(|e| CliError::Input(e.to_string()))?;
    let per_system: Vec<Result<Vec<RunReportRow>, CliError>> =
        pool.install(|| args.systems.par_iter().map(|path| estimate_one(path, &settings)).collect());
    let mut rows = Vec::new();
    for r in per_system {
        rows.extend(r?);
    }
    Ok(rows)
}

fn estimate_one(path: &Path, s: &Settings) -> Result<Vec<RunReportRow>, CliError> {
    let sys: SystemF64 = load_system_file(path).map_err(|e| match e {
        Error::Io(source) => CliError::File { path: path.to_owned(), source },
        other => CliError::Core(other),
    })?;
    let id = system_id(path, &sys);
    let p = uniform_p(&sys);
    let args = s.args;
    let needs_bounds = args.with_bounds || args.method == Method::Bounds;
    let all = if needs_bounds || matches!(args.method, Method::PolyN) {
        Some(enumerate_bruteforce(&sys, None)?)
    } else {
        None
    };
    let bounds = match (&all, needs_bounds) {
        (Some(all), true) => Some(first_order_bounds(all, &sys)?),
        _ => None,
    };
    let (pb, fb) = match &bounds {
        Some((pb, fb)) => (Some(pb), Some(fb)),
        None => (None, None),
    };
    let row = |q| RunReportRow::new(&id, &p, args.method, q);
    let mut rows = Vec::new();
    match args.method {
        Method::Exact => {
            let started = Instant::now();
            let ex = exact_by_states(&sys)?;
            let took = started.elapsed().as_secs_f64();
            for (q, v, b) in [(Quantity::Pf, ex.p_f, pb), (Quantity::Ff, ex.f_f, fb)] {
                rows.push(RunReportRow { value: Some(v), runtime_s: took, theoretical_epsilon: Some(0.0), ..row(q) }.with_bounds(b));
            }
        }
        Method::Bounds => {
            let all = all.as_ref().expect("bounds enumerate cutsets");
            for (q, b) in [(Quantity::Pf, pb), (Quantity::Ff, fb)] {
                let b = b.expect("bounds computed");
                let mut r = row(q).with_bounds(Some(b));
                r.value = b.truncated;
                r.n_alpha = Some(all.count());
                rows.push(r);
            }
            write_cutsets(args, all)?;
        }
        Method::PolyN => {
            let all = all.as_ref().expect("polyN enumerates cutsets");
            let eps = if args.epsilon_auto { auto_epsilon_poly_n(&sys, all, s.budget)?.epsilon } else { s.epsilon()? };
            if s.wants(Quantity::Pf) {
                let e = approx_pf_poly_n(&sys, eps, args.delta, args.seed)?;
                rows.push(estimate_row(row(Quantity::Pf), &e, args.seed).with_bounds(pb));
            }
            if s.wants(Quantity::Ff) {
                let e = approx_ff_poly_n_with(&sys, all, eps, args.delta, args.seed)?;
                let mut r = estimate_row(row(Quantity::Ff), &e.f_f, args.seed).with_bounds(fb);
                r.p_star = Some(all.p_star);
                r.n_alpha = Some(all.count());
                rows.push(r);
            }
            write_cutsets(args, all)?;
        }
        Method::AllTerminal => {
            let started = Instant::now();
            let eps = if args.epsilon_auto {
                auto_epsilon_all_terminal(&sys, args.delta, s.budget, AUTO_ALPHA_CAP, args.seed, &s.options)?.epsilon
            } else {
                s.epsilon()?
            };
            let e = approx_ff_all_terminal(&sys, eps, args.delta, args.seed, &s.options)?;
            if e.rgc_capped {
                log::warn!("{id}: contraction budget hit after {} runs; the result may miss cutsets", e.rgc_runs);
            }
            let took = started.elapsed().as_secs_f64();
            let n_alpha = e.cutsets.as_ref().map(CutsetCollection::count);
            for (q, est, b) in [(Quantity::Pf, &e.p_f, pb), (Quantity::Ff, &e.f_f, fb)] {
                if !s.wants(q) {
                    continue;
                }
                let mut r = estimate_row(row(q), est, args.seed);
                r.runtime_s = took;
                r.theoretical_epsilon = Some(eps);
                r.p_star = Some(e.plan.p_star);
                r.alpha = e.plan.alpha;
                r.n_alpha = n_alpha;
                rows.push(r.with_bounds(b));
            }
            if let Some(c) = &e.cutsets {
                write_cutsets(args, c)?;
            }
        }
        Method::Mcs => {
            let started = Instant::now();
            let (eps, (size, batches), p_star) = mcs_sizing(&sys, s)?;
            let run = mcs_run(&sys, size, batches, args.seed, s.options.mcs_sampler)?;
            let mode = if args.additive { ErrorMode::Additive } else { ErrorMode::Multiplicative };
            let (pf, ff) = run.estimates(mode, eps, args.delta);
            let took = started.elapsed().as_secs_f64();
            for (q, est, b) in [(Quantity::Pf, &pf, pb), (Quantity::Ff, &ff, fb)] {
                if !s.wants(q) {
                    continue;
                }
                let mut r = estimate_row(row(q), est, args.seed);
                r.runtime_s = took;
                r.p_star = p_star;
                rows.push(r.with_bounds(b));
            }
        }
    }
    if let Some(q) = args.quantity {
        rows.retain(|r| r.quantity == q);
    }
    Ok(rows)
}

fn estimate_row(mut r: RunReportRow, e: &EstimateF64, seed: u64) -> RunReportRow {
    r.value = Some(e.value);
    r.runtime_s = e.elapsed.as_secs_f64();
    r.theoretical_epsilon = Some(e.epsilon);
    r.samples = Some(e.samples);
    r.seed = Some(seed);
    r.no_failure = e.no_failure_observed;
    r
}

/// ε, (trials per batch, batches) and p* for the Monte Carlo method.
type McsSizing = (f64, (u64, u64), Option<f64>);

fn mcs_sizing(sys: &SystemF64, s: &Settings) -> Result<McsSizing, CliError> {
    let args = s.args;
    if args.additive {
        let eps = if args.epsilon_auto {
            // S ε² − μ ln 8 ε − 2μ² ln 8 = 0
            let mu = sys.mu_total();
            let b = mu * 8f64.ln();
            let a = s.budget as f64;
            (b + (b * b + 8.0 * a * mu * b).sqrt()) / (2.0 * a)
        } else {
            s.epsilon()?
        };
        return Ok((eps, mcs_additive_params(sys, eps, args.delta)?, None));
    }
    let (p_star, rho) = if sys.is_all_terminal() {
        let plan = plan_all_terminal(sys, 1.0, args.delta, args.threshold_exponent)?;
        (plan.p_star, plan.rho)
    } else {
        let all = enumerate_bruteforce(sys, None)?;
        (all.p_star, sys.stats(all.s_star)?.validate_rho()?)
    };
    let eps = if args.epsilon_auto {
        mcs_epsilon_for_trials(s.budget, sys.mu_total(), p_star, rho)
    } else {
        s.epsilon()?
    };
    Ok((eps, mcs_multiplicative_params(sys, eps, args.delta, p_star, rho)?, Some(p_star)))
}

fn write_cutsets(args: &EstimateArgs, cutsets: &CutsetsF64) -> Result<(), CliError> {
    if let Some(path) = &args.cutsets_out {
        let file = File::create(path).map_err(|source| CliError::File { path: path.clone(), source })?;
        cutsets.write_jsonl(BufWriter::new(file))?;
    }
    Ok(())
}

const TABLE_HEADER: [&str; 12] = [
    "system",
    "p",
    "F_lower",
    "F_upper",
    "proposed",
    "mcs",
    "runtime_proposed_s",
    "runtime_mcs_s",
    "epsilon_proposed",
    "epsilon_mcs",
    "error_proposed",
    "error_mcs",
];

#[derive(Default)]
struct TableRow {
    key: (String, String),
    bounds: Option<(f64, f64)>,
    proposed: Option<RunReportRow>,
    mcs: Option<RunReportRow>,
}

/// Merges `F_f` rows per (system, p) into a table shaped like the paper's
/// comparison tables.
pub fn report(rows: &[RunReportRow], precision: usize, out: impl Write) -> Result<(), CliError> {
    let mut table: Vec<TableRow> = Vec::new();
    for r in rows.iter().filter(|r| r.quantity == Quantity::Ff) {
        let key = (r.system.clone(), r.p.clone());
        let idx = match table.iter().position(|t| t.key == key) {
            Some(i) => i,
            None => {
                table.push(TableRow { key, ..Default::default() });
                table.len() - 1
            }
        };
        let t = &mut table[idx];
        if let (Some(lo), Some(hi)) = (r.lower, r.upper) {
            t.bounds.get_or_insert((lo, hi));
        }
        match r.method {
            Method::PolyN | Method::AllTerminal => t.proposed = Some(r.clone()),
            Method::Mcs => t.mcs = Some(r.clone()),
            Method::Bounds | Method::Exact => {}
        }
    }
    let sig = |x: f64| format!("{:.*e}", precision.saturating_sub(1), x);
    let mut w = csv::Writer::from_writer(out);
    w.write_record(TABLE_HEADER).map_err(csv_io)?;
    for t in &table {
        let value = |r: &Option<RunReportRow>| opt(r.as_ref().and_then(|r| r.value), sig);
        let runtime = |r: &Option<RunReportRow>| opt(r.as_ref().map(|r| r.runtime_s), |x| format!("{x:.3}"));
        let eps = |r: &Option<RunReportRow>| opt(r.as_ref().and_then(|r| r.theoretical_epsilon), |x| format!("{x:.3}"));
        let error = |r: &Option<RunReportRow>| match r {
            Some(r) if r.no_failure => "--".to_owned(),
            Some(r) => {
                let computed = r.actual_error.or_else(|| Some(actual_error(r.value?, t.bounds?.0, t.bounds?.1)));
                opt(computed, |x| format!("{x:.2e}"))
            }
            None => String::new(),
        };
        w.write_record([
            t.key.0.clone(),
            t.key.1.clone(),
            opt(t.bounds.map(|b| b.0), sig),
            opt(t.bounds.map(|b| b.1), sig),
            value(&t.proposed),
            value(&t.mcs),
            runtime(&t.proposed),
            runtime(&t.mcs),
            eps(&t.proposed),
            eps(&t.mcs),
            error(&t.proposed),
            error(&t.mcs),
        ])
        .map_err(csv_io)?;
    }
    w.flush()?;
    Ok(())
}

fn output(path: Option<&Path>) -> Result<Box<dyn Write>, CliError> {
    Ok(match path {
        Some(p) => Box::new(BufWriter::new(
            File::create(p).map_err(|source| CliError::File { path: p.to_owned(), source })?,
        )),
        None => Box::new(io::stdout().lock()),
    })
}

/// Executes a parsed command line.
pub fn run(cli: Cli) -> Result<(), CliError> {
    match cli.command {
        Command::GenGrid { rows, cols, p, mu, out } => {
            let doc = grid_document(rows, cols, p, mu)?;
            let mut w = output(out.as_deref())?;
            serde_json::to_writer_pretty(&mut w, &doc).map_err(io::Error::from)?;
            writeln!(w)?;
            w.flush()?;
        }
        Command::Estimate(args) => {
            let rows = estimate(&args)?;
            let mut w = io::stdout().lock();
            match args.format {
                Format::Csv => write_rows_csv(&rows, &mut w)?,
                Format::Json => {
                    serde_json::to_writer_pretty(&mut w, &rows).map_err(io::Error::from)?;
                    writeln!(w)?;
                }
            }
        }
        Command::Report { rows, out, precision } => {
            let mut all = Vec::new();
            for path in &rows {
                all.extend(read_rows(path)?);
            }
            let mut w = output(out.as_deref())?;
            report(&all, precision.max(1), &mut w)?;
            w.flush()?;
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn actual_error_uses_lower_bound_scale() {
        let e = actual_error(8.04784e-6, 8.04785e-6, 8.04807e-6);
        assert!((e - 2.3e-10 / 8.04785e-6).abs() < 1e-12);
    }

    #[test]
    fn csv_rows_round_trip() {
        let mut r = RunReportRow::new("g", "1.0e-3", Method::Mcs, Quantity::Ff);
        r.value = Some(1.0 / 3.0);
        r.no_failure = true;
        let mut buf = Vec::new();
        write_rows_csv(std::slice::from_ref(&r), &mut buf).unwrap();
        let dir = std::env::temp_dir().join(format!("failfreq-rows-{}.csv", std::process::id()));
        std::fs::write(&dir, &buf).unwrap();
        let back = read_rows(&dir).unwrap();
        std::fs::remove_file(&dir).ok();
        assert_eq!(back, vec![r]);
    }

    #[test]
    fn exit_codes_by_error_class() {
        assert_eq!(CliError::Core(Error::InvalidPlan("x".into())).exit_code(), 3);
        assert_eq!(CliError::Core(Error::CapExceeded { what: "m", size: 30, cap: 25 }).exit_code(), 4);
        assert_eq!(CliError::Core(Error::DisconnectedTerminals).exit_code(), 2);
        assert_eq!(CliError::Input("x".into()).exit_code(), 2);
    }

    #[test]
    fn report_marks_failure_free_mcs() {
        let mut b = RunReportRow::new("g", "p", Method::Bounds, Quantity::Ff);
        b.lower = Some(1.0);
        b.upper = Some(1.1);
        let mut m = RunReportRow::new("g", "p", Method::Mcs, Quantity::Ff);
        m.value = Some(0.0);
        m.no_failure = true;
        let mut prop = RunReportRow::new("g", "p", Method::AllTerminal, Quantity::Ff);
        prop.value = Some(1.05);
        let mut buf = Vec::new();
        report(&[b, m, prop], 6, &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let line = text.lines().nth(1).unwrap();
        assert!(line.ends_with(",5.00e-2,--"), "{line}");
    }
}
