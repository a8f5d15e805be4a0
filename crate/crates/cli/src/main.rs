//! `mmm`: calibrate, price, hedge and backtest under the minimal market model.

mod config;
mod output;

use std::fmt;
use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use mmm_core::calibration::FitOptions;
use mmm_core::hedging::backtest_cash_annuity;
use mmm_core::pricing::{
    cash_annuity_value, equity_annuity_value_bs, equity_annuity_value_mmm, fair_zcb, zcb_delta, zcb_index_fraction,
};
use mmm_core::{
    backtest_zcb, fit_gbm, fit_mmm, hedge_zcb, Annuity, AnnuityKind, BacktestOptions, DateRange, Discounting,
    FittedParams, Gbm, IngestionConfig, Mmm, Month, Report, Series,
};
use serde::Serialize;

use config::{resolve_defaults, ModelArgs, RunConfig};
use output::{print_pairs, OutputDir};

#[derive(Debug, Parser)]
#[command(
    name = "mmm",
    version,
    about = "Real-world pricing and hedging under the minimal market model"
)]
struct Cli {
    /// Monthly data file with header `date,index,short_rate`
    #[arg(long, global = true, env = "MMM_DATA")]
    data: Option<PathBuf>,
    /// TOML run configuration; flags override it
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Output directory
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    #[arg(long, global = true)]
    seed: Option<u64>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Fit the minimal market model or the Black-Scholes comparator
    Calibrate(CalibrateArgs),
    /// Fair zero-coupon bond and its hedge ratio
    PriceZcb(PriceZcbArgs),
    /// Monthly self-financing hedge of one fair bond
    Hedge(HedgeArgs),
    /// Hedge every bond of the given tenors inside a window
    Backtest(BacktestArgs),
    /// Value a deferred cash-linked annuity bought at every month of a window
    BacktestAnnuity(BacktestAnnuityArgs),
    /// Value an annuity at each month of a valuation range
    Annuity(AnnuityArgs),
    /// Exact simulation of discounted index paths
    Simulate(SimulateArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
enum ModelKind {
    Mmm,
    Gbm,
}

#[derive(Debug, Args, Serialize)]
struct CalibrateArgs {
    #[arg(long, value_enum, default_value_t = ModelKind::Mmm)]
    model: ModelKind,
    /// Window start [default: 1871-01]
    #[arg(long)]
    from: Option<Month>,
    /// Window end [default: 1932-01]
    #[arg(long)]
    to: Option<Month>,
    #[arg(long)]
    tol: Option<f64>,
    #[arg(long)]
    max_iter: Option<usize>,
    /// Also write every surrogate grid evaluation
    #[arg(long)]
    grid: bool,
}

#[derive(Debug, Args, Serialize)]
struct PriceZcbArgs {
    #[arg(long = "t")]
    t: Month,
    #[arg(long = "T")]
    maturity: Month,
    /// Discount at this flat short rate instead of the realized savings account
    #[arg(long)]
    flat_rate: Option<f64>,
    #[command(flatten)]
    model: ModelArgs,
}

#[derive(Debug, Args, Serialize)]
struct HedgeArgs {
    #[arg(long)]
    t0: Month,
    #[arg(long = "T")]
    maturity: Month,
    #[command(flatten)]
    model: ModelArgs,
}

#[derive(Debug, Args, Serialize)]
struct BacktestArgs {
    /// Bond tenors in years
    #[arg(long, value_delimiter = ',', default_value = "10,15,20,25")]
    tenors: Vec<u32>,
    #[arg(long, default_value = "1932-01")]
    from: Month,
    /// Window end [default: last month of the data]
    #[arg(long)]
    to: Option<Month>,
    /// Refit the model up to each start date
    #[arg(long)]
    rolling: bool,
    #[command(flatten)]
    model: ModelArgs,
}

#[derive(Debug, Args, Serialize)]
struct BacktestAnnuityArgs {
    /// Years from purchase to the first payment
    #[arg(long, default_value_t = 40)]
    deferral: u32,
    /// Number of yearly payments
    #[arg(long, default_value_t = 45)]
    payments: u32,
    /// First purchase month
    #[arg(long, default_value = "1871-01")]
    from: Month,
    /// Last purchase month
    #[arg(long, default_value = "1932-01")]
    to: Month,
    #[command(flatten)]
    model: ModelArgs,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
enum Kind {
    Cash,
    Equity,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
enum Valuation {
    Mmm,
    Bs,
    Both,
}

#[derive(Debug, Args, Serialize)]
struct AnnuityArgs {
    #[arg(long, value_enum)]
    kind: Kind,
    /// Purchase month
    #[arg(long)]
    t0: Month,
    /// `FROM..TO[:STEP]` in months (yearly by default) or a file with one
    /// YYYY-MM per line
    #[arg(long)]
    payments: String,
    /// [default: purchase month]
    #[arg(long)]
    valuation_from: Option<Month>,
    /// [default: last payment or end of data, whichever is earlier]
    #[arg(long)]
    valuation_to: Option<Month>,
    /// Pricing model for the equity-linked annuity
    #[arg(long = "model", value_enum, default_value_t = Valuation::Both)]
    valuation: Valuation,
    /// Growth rate of the guarantee [default: fitted eta]
    #[arg(long)]
    guarantee_rate: Option<f64>,
    #[command(flatten)]
    model: ModelArgs,
}

#[derive(Debug, Args, Serialize)]
struct SimulateArgs {
    #[arg(long)]
    t0: Month,
    #[arg(long = "T")]
    maturity: Month,
    /// Starting discounted index [default: data value at t0]
    #[arg(long)]
    x0: Option<f64>,
    #[arg(long, default_value_t = 100)]
    paths: usize,
    #[arg(long, default_value_t = 1)]
    steps_per_month: u32,
    #[command(flatten)]
    model: ModelArgs,
}

/// A problem with the request itself rather than with the data or model.
#[derive(Debug)]
struct Usage(String);

impl fmt::Display for Usage {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for Usage {}

fn usage(msg: impl Into<String>) -> anyhow::Error {
    Usage(msg.into()).into()
}

fn category(err: &anyhow::Error) -> &'static str {
    for cause in err.chain() {
        if let Some(e) = cause.downcast_ref::<mmm_core::Error>() {
            return e.category();
        }
        if cause.is::<toml::de::Error>() {
            return "Config";
        }
        if cause.is::<Usage>() {
            return "Usage";
        }
        if cause.is::<std::io::Error>() {
            return "IO";
        }
    }
    "Internal"
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error[{}]: {e:#}", category(&e));
            ExitCode::from(1)
        }
    }
}

/// Resolved configuration plus lazily loaded inputs.
struct Session {
    config: RunConfig,
    series: Option<Series>,
}

#[derive(Debug, Default, Serialize)]
struct ParamsUsed {
    mmm: Option<Mmm>,
    gbm: Option<Gbm>,
    /// Whether the parameters were fitted during this run.
    calibrated: bool,
}

impl Session {
    fn new(cli: &Cli, model: Option<&ModelArgs>) -> Result<Self> {
        let mut config = match &cli.config {
            Some(path) => RunConfig::load(path)?,
            None => RunConfig::default(),
        };
        config.data = cli.data.clone().or(config.data);
        config.out = cli.out.clone().or(config.out);
        config.seed = cli.seed.or(config.seed);
        if let Some(m) = model {
            m.apply(&mut config);
        }
        Ok(Session { config, series: None })
    }

    fn resolve(&mut self) {
        resolve_defaults(&mut self.config);
    }

    fn series(&mut self) -> Result<&Series> {
        if self.series.is_none() {
            let path = self.config.data.clone().expect("resolved");
            let s = Series::load(&path, &IngestionConfig::default())
                .with_context(|| format!("loading {}", path.display()))?;
            self.series = Some(s);
        }
        Ok(self.series.as_ref().unwrap())
    }

    fn calibration_window(&self) -> Result<DateRange> {
        let c = &self.config.calibration;
        Ok(DateRange::new(c.from.unwrap(), c.to.unwrap())?)
    }

    fn fit_options(&self) -> FitOptions<f64> {
        FitOptions {
            rel_tol: self.config.calibration.tol.unwrap(),
            max_iter: self.config.calibration.max_iter.unwrap(),
            ..FitOptions::default()
        }
    }

    /// Supplied parameters, or a fit on the calibration window.
    fn mmm(&mut self, used: &mut ParamsUsed) -> Result<Mmm> {
        let m = &self.config.model;
        let p = match (m.alpha, m.eta) {
            (Some(alpha), Some(eta)) => Mmm::new(alpha, eta, m.origin.unwrap())?,
            (None, None) => {
                let window = self.calibration_window()?;
                let options = self.fit_options();
                let report = fit_mmm(self.series()?, window, &options)?;
                warn_unconverged(&report);
                used.calibrated = true;
                *report.mmm().unwrap()
            }
            _ => return Err(usage("--alpha and --eta must be given together")),
        };
        used.mmm = Some(p);
        Ok(p)
    }

    fn gbm(&mut self, used: &mut ParamsUsed) -> Result<Gbm> {
        let p = match self.config.model.theta {
            Some(theta) => Gbm::new(theta)?,
            None => {
                let window = self.calibration_window()?;
                used.calibrated = true;
                *fit_gbm(self.series()?, window)?.gbm().unwrap()
            }
        };
        used.gbm = Some(p);
        Ok(p)
    }

    fn output(&self) -> Result<OutputDir> {
        OutputDir::create(self.config.out.as_ref().unwrap())
    }
}

fn warn_unconverged(report: &Report) {
    if !report.converged {
        eprintln!(
            "warning: calibration stopped after {} iterations without converging",
            report.iterations
        );
    }
}

fn run(cli: Cli) -> Result<()> {
    match &cli.command {
        Command::Calibrate(a) => calibrate(&cli, a),
        Command::PriceZcb(a) => price_zcb(&cli, a),
        Command::Hedge(a) => hedge(&cli, a),
        Command::Backtest(a) => backtest(&cli, a),
        Command::BacktestAnnuity(a) => backtest_annuity(&cli, a),
        Command::Annuity(a) => annuity(&cli, a),
        Command::Simulate(a) => simulate(&cli, a),
    }
}

fn kv(key: &str, value: impl ToString) -> (String, String) {
    (key.to_string(), value.to_string())
}

fn opt(value: Option<f64>) -> String {
    value.map(|v| v.to_string()).unwrap_or_default()
}

fn calibrate(cli: &Cli, a: &CalibrateArgs) -> Result<()> {
    let mut s = Session::new(cli, None)?;
    let c = &mut s.config.calibration;
    c.from = a.from.or(c.from);
    c.to = a.to.or(c.to);
    c.tol = a.tol.or(c.tol);
    c.max_iter = a.max_iter.or(c.max_iter);
    s.resolve();
    let window = s.calibration_window()?;
    let report = match a.model {
        ModelKind::Mmm => {
            let options = FitOptions {
                record_grid: a.grid,
                ..s.fit_options()
            };
            fit_mmm(s.series()?, window, &options)?
        }
        ModelKind::Gbm => fit_gbm(s.series()?, window)?,
    };
    warn_unconverged(&report);

    let mut pairs = vec![
        kv("model", serde_json::to_value(a.model)?.as_str().unwrap()),
        kv("from", window.from),
        kv("to", window.to),
        kv("observations", window.len()),
    ];
    match &report.params {
        FittedParams::Mmm(p) => {
            let (sa, se) = p.std_err.unzip();
            pairs.extend([
                kv("alpha", p.alpha),
                kv("eta", p.eta),
                kv("se_alpha", opt(sa)),
                kv("se_eta", opt(se)),
                kv("log_likelihood", opt(p.log_likelihood)),
                kv("initial_alpha", report.initial_guess.0),
                kv("initial_eta", report.initial_guess.1),
            ]);
            if let Some(cov) = report.covariance {
                pairs.extend([
                    kv("cov_alpha_alpha", cov[0][0]),
                    kv("cov_alpha_eta", cov[0][1]),
                    kv("cov_eta_eta", cov[1][1]),
                ]);
            }
        }
        FittedParams::Gbm(p) => pairs.extend([
            kv("theta", p.theta),
            kv("se_theta", opt(p.std_err)),
            kv("log_likelihood", opt(p.log_likelihood)),
        ]),
    }
    pairs.extend([kv("iterations", report.iterations), kv("converged", report.converged)]);
    print_pairs(&pairs);

    let mut out = s.output()?;
    out.key_values("calibration.csv", &pairs)?;
    if let Some(grid) = &report.grid_history {
        out.table(
            "calibration_grid.csv",
            &["iteration", "alpha", "eta", "log_likelihood"],
            grid.iter().map(|g| {
                [
                    g.iteration.to_string(),
                    g.alpha.to_string(),
                    g.eta.to_string(),
                    g.log_likelihood.to_string(),
                ]
            }),
        )?;
    }
    out.finish("calibrate", a, &s.config, &report)
}

fn price_zcb(cli: &Cli, a: &PriceZcbArgs) -> Result<()> {
    let mut s = Session::new(cli, Some(&a.model))?;
    s.config.valuation.flat_rate = a.flat_rate.or(s.config.valuation.flat_rate);
    s.resolve();
    let mut used = ParamsUsed::default();
    let p = s.mmm(&mut used)?;
    let discounting = match s.config.valuation.flat_rate {
        Some(r) => Discounting::Flat(r),
        None => Discounting::Realized,
    };
    let series = s.series()?;
    let q = fair_zcb(&p, series, a.t, a.maturity, discounting)?;
    let i = series.position(a.t)?;
    let s_bar = series.discounted_index()[i];
    let d0_maturity = q.savings_bond / series.savings_account()[i];
    let (tt, tm) = (p.time_of(a.t), p.time_of(a.maturity));
    let delta = zcb_delta(&p, s_bar, tt, tm, d0_maturity)?;
    let fraction = zcb_index_fraction(&p, s_bar, tt, tm)?;

    let pairs = vec![
        kv("t", q.t),
        kv("T", q.maturity),
        kv("savings_bond", q.savings_bond),
        kv("fair_bond", q.fair_bond),
        kv("fair_to_savings", q.fair_bond / q.savings_bond),
        kv("benchmarked_fair", q.benchmarked_fair),
        kv("lambda", q.lambda),
        kv("delta_units", delta),
        kv("index_fraction", fraction),
    ];
    print_pairs(&pairs);
    let mut out = s.output()?;
    out.table(
        "zcb.csv",
        &pairs.iter().map(|(k, _)| k.as_str()).collect::<Vec<_>>(),
        [pairs.iter().map(|(_, v)| v.as_str())],
    )?;
    if discounting == Discounting::Realized {
        out.note("savings bond from the realized savings account");
    } else {
        out.note("savings bond from a flat short rate");
    }
    out.finish("price-zcb", a, &s.config, &used)
}

fn hedge(cli: &Cli, a: &HedgeArgs) -> Result<()> {
    let mut s = Session::new(cli, Some(&a.model))?;
    s.resolve();
    let mut used = ParamsUsed::default();
    let p = s.mmm(&mut used)?;
    let h = hedge_zcb(&p, s.series()?, a.t0, a.maturity)?;
    let n = h.dates.len() - 1;
    let max_bpnl = h.benchmarked_pnl.iter().fold(0.0f64, |m, x| m.max(x.abs()));
    print_pairs(&[
        kv("t0", a.t0),
        kv("T", a.maturity),
        kv("initial_value", h.portfolio_value[0]),
        kv("terminal_value", h.portfolio_value[n]),
        kv("terminal_pnl", h.terminal_pnl),
        kv("max_abs_benchmarked_pnl", max_bpnl),
    ]);
    let mut out = s.output()?;
    out.table(
        "hedge.csv",
        &[
            "date",
            "portfolio_value",
            "fair_value",
            "delta_units",
            "index_fraction",
            "benchmarked_pnl",
        ],
        (0..=n).map(|k| {
            [
                h.dates[k].to_string(),
                h.portfolio_value[k].to_string(),
                h.fair_value[k].to_string(),
                h.delta_units[k].to_string(),
                h.index_fraction[k].to_string(),
                h.benchmarked_pnl[k].to_string(),
            ]
        }),
    )?;
    out.note("portfolio and fair values in dollars; benchmarked P&L in index units");
    out.finish("hedge", a, &s.config, &used)
}

fn backtest(cli: &Cli, a: &BacktestArgs) -> Result<()> {
    let mut s = Session::new(cli, Some(&a.model))?;
    s.resolve();
    let mut used = ParamsUsed::default();
    let p = s.mmm(&mut used)?;
    let series = s.series()?;
    let window = DateRange::new(a.from, a.to.unwrap_or(series.last_month()))?;
    let options = BacktestOptions {
        rolling_recalibration: a.rolling,
    };
    let rows = backtest_zcb(&p, series, window, &a.tenors, &options)?;
    let mut out = s.output()?;
    let header = [
        "tenor_years",
        "mean_D",
        "mean_P",
        "mean_diff",
        "mean_pnl",
        "std_pnl",
        "n_windows",
    ];
    let cells: Vec<[String; 7]> = rows
        .iter()
        .map(|r| {
            [
                r.tenor_years.to_string(),
                r.mean_D.to_string(),
                r.mean_P.to_string(),
                r.mean_diff.to_string(),
                r.mean_pnl.to_string(),
                r.std_pnl.to_string(),
                r.n_windows.to_string(),
            ]
        })
        .collect();
    println!("{}", header.join("  "));
    for c in &cells {
        println!("{}", c.join("  "));
    }
    out.table("backtest.csv", &header, cells)?;
    out.note(format!("window {}..{}", window.from, window.to));
    out.note("P&L in nominal dollars at maturity against a one-dollar face");
    out.finish("backtest", a, &s.config, &used)
}

fn backtest_annuity(cli: &Cli, a: &BacktestAnnuityArgs) -> Result<()> {
    let mut s = Session::new(cli, Some(&a.model))?;
    s.resolve();
    let mut used = ParamsUsed::default();
    let p = s.mmm(&mut used)?;
    let window = DateRange::new(a.from, a.to)?;
    let sum = backtest_cash_annuity(&p, s.series()?, window, a.deferral, a.payments)?;
    let pairs = vec![
        kv("n_windows", sum.n_windows),
        kv("mean_rw", sum.mean_rw),
        kv("std_rw", sum.std_rw),
        kv("mean_rn", sum.mean_rn),
        kv("std_rn", sum.std_rn),
        kv("saving_pct", sum.saving_pct),
        kv("std_saving_pct", sum.std_saving_pct),
    ];
    print_pairs(&pairs);
    let mut out = s.output()?;
    out.key_values("annuity_backtest.csv", &pairs)?;
    out.note("values in units of the savings account at purchase");
    out.finish("backtest-annuity", a, &s.config, &used)
}

/// Parses `FROM..TO[:STEP]` or reads one month per line from a file.
fn payment_dates(arg: &str) -> Result<Vec<Month>> {
    if let Some((from, rest)) = arg.split_once("..") {
        let (to, step) = match rest.split_once(':') {
            Some((to, step)) => (
                to,
                step.parse::<i32>().map_err(|_| usage(format!("bad step {step:?}")))?,
            ),
            None => (rest, 12),
        };
        if step < 1 {
            return Err(usage("payment step must be at least one month"));
        }
        let (from, to): (Month, Month) = (from.parse()?, to.parse()?);
        let count = to.months_since(from) / step + 1;
        return Ok((0..count.max(0)).map(|k| from.offset(k * step)).collect());
    }
    let text = std::fs::read_to_string(arg).with_context(|| format!("reading payment dates from {arg}"))?;
    text.lines()
        .map(str::trim)
        .filter(|l| !l.is_empty() && !l.starts_with('#'))
        .map(|l| Ok(l.parse::<Month>()?))
        .collect()
}

fn annuity(cli: &Cli, a: &AnnuityArgs) -> Result<()> {
    let mut s = Session::new(cli, Some(&a.model))?;
    s.config.valuation.guarantee_rate = a.guarantee_rate.or(s.config.valuation.guarantee_rate);
    s.resolve();
    let kind = match a.kind {
        Kind::Cash => AnnuityKind::CashLinked,
        Kind::Equity => AnnuityKind::EquityLinkedWithGuarantee,
    };
    let spec = Annuity::new(
        a.t0,
        payment_dates(&a.payments)?,
        kind,
        s.config.valuation.guarantee_rate,
    )?;
    let mut used = ParamsUsed::default();
    let p = s.mmm(&mut used)?;
    let gbm = match (a.kind, a.valuation) {
        (Kind::Equity, Valuation::Bs | Valuation::Both) => Some(s.gbm(&mut used)?),
        _ => None,
    };
    let mut out = s.output()?;
    let series = s.series()?;
    let from = a.valuation_from.unwrap_or(a.t0);
    let to = a
        .valuation_to
        .unwrap_or_else(|| series.last_month().min(*spec.payments.last().unwrap()));
    let dates: Vec<Month> = (0..DateRange::new(from, to)?.len() as i32)
        .map(|k| from.offset(k))
        .collect();

    match a.kind {
        Kind::Cash => {
            let rows = dates
                .iter()
                .map(|&t| {
                    let v = cash_annuity_value(&p, series, t, &spec)?;
                    Ok([t.to_string(), v.discounted_rw.to_string(), v.discounted_rn.to_string()])
                })
                .collect::<Result<Vec<_>>>()?;
            out.table("annuity.csv", &["date", "discounted_rw", "discounted_rn"], rows)?;
        }
        Kind::Equity => {
            let mut header = vec!["date"];
            if a.valuation != Valuation::Bs {
                header.extend(["mmm_value", "mmm_discounted"]);
            }
            if a.valuation != Valuation::Mmm {
                header.extend(["bs_value", "bs_discounted"]);
            }
            let rows = dates
                .iter()
                .map(|&t| {
                    let mut row = vec![t.to_string()];
                    if a.valuation != Valuation::Bs {
                        let v = equity_annuity_value_mmm(&p, series, t, &spec)?;
                        row.extend([v.value.to_string(), v.discounted.to_string()]);
                    }
                    if let Some(g) = &gbm {
                        let v = equity_annuity_value_bs(g, series, t, &spec, p.eta)?;
                        row.extend([v.value.to_string(), v.discounted.to_string()]);
                    }
                    Ok(row)
                })
                .collect::<Result<Vec<_>>>()?;
            out.table("annuity.csv", &header, rows)?;
            let rate = spec.guarantee_rate.unwrap_or(p.eta);
            out.note(format!("guarantee growth rate {rate}"));
        }
    }
    println!(
        "wrote {} valuation dates to {}",
        dates.len(),
        out.path("annuity.csv").display()
    );
    out.note("discounted values in units of the savings account; values with the savings account at one at purchase");
    out.finish("annuity", a, &s.config, &used)
}

fn simulate(cli: &Cli, a: &SimulateArgs) -> Result<()> {
    let mut s = Session::new(cli, Some(&a.model))?;
    s.resolve();
    if a.maturity <= a.t0 {
        bail!(usage(format!("T {} must be after t0 {}", a.maturity, a.t0)));
    }
    if a.steps_per_month == 0 {
        bail!(usage("steps-per-month must be positive"));
    }
    let mut used = ParamsUsed::default();
    let p = s.mmm(&mut used)?;
    let x0 = match a.x0 {
        Some(x) => x,
        None => {
            let series = s.series()?;
            series.discounted_index()[series.position(a.t0)?]
        }
    };
    let t0 = p.time_of(a.t0);
    let per_year = f64::from(12 * a.steps_per_month);
    let steps = a.maturity.months_since(a.t0) as usize * a.steps_per_month as usize;
    let grid: Vec<f64> = (1..=steps).map(|k| t0 + k as f64 / per_year).collect();
    let seed = s.config.seed.unwrap();
    let paths = p.simulate_paths(x0, t0, &grid, a.paths, seed)?;

    let grid = &grid;
    let mut out = s.output()?;
    out.table(
        "paths.csv",
        &["path", "step", "time", "s_bar"],
        paths.iter().enumerate().flat_map(|(i, row)| {
            row.iter().enumerate().map(move |(k, x)| {
                let t = if k == 0 { t0 } else { grid[k - 1] };
                [i.to_string(), k.to_string(), t.to_string(), x.to_string()]
            })
        }),
    )?;
    println!(
        "wrote {} paths of {steps} steps to {}",
        a.paths,
        out.path("paths.csv").display()
    );
    out.note("time in years from the model origin; s_bar is the discounted index");
    out.finish("simulate", a, &s.config, &used)
}
