//! Monthly self-financing hedges of the fair zero-coupon bond and the
//! historical backtest sweeps built on them.

use rayon::prelude::*;
use serde::Serialize;

use crate::calibration::{fit_mmm, FitOptions};
use crate::error::{Error, Result};
use crate::market_data::{DateRange, MarketSeries, Month};
use crate::mmm::MmmParams;
use crate::pricing::{cash_annuity_from_state, discounted_fair_zcb, zcb_delta, AnnuityKind, AnnuitySpec};
use crate::scalar::Real;

/// Hedge of one fair bond in units of the savings account.
#[derive(Debug, Clone, PartialEq)]
pub struct DiscountedHedge<F> {
    /// Hedge portfolio `V_t / S0_t`.
    pub value: Vec<F>,
    /// Discounted fair bond `P(t,T) / S0_t`; the last entry is `D(0,T)`.
    pub fair: Vec<F>,
    /// Index units held over each step; zero at maturity.
    pub delta: Vec<F>,
}

/// Runs the self-financing hedge along a discounted index path observed at
/// model `times`, the last of which is the maturity. `d0_maturity` is
/// `1 / S0_T` under the savings-account normalization of the path.
pub fn hedge_discounted<F: Real>(
    params: &MmmParams<F>,
    times: &[F],
    s_bar: &[F],
    d0_maturity: F,
) -> Result<DiscountedHedge<F>> {
    if times.len() != s_bar.len() {
        return Err(Error::MalformedSeries(format!(
            "{} times but {} states",
            times.len(),
            s_bar.len()
        )));
    }
    if times.len() < 2 {
        return Err(Error::InvalidWindow("hedge needs at least one rebalancing step".into()));
    }
    let n = times.len() - 1;
    let maturity = times[n];
    let mut value = Vec::with_capacity(n + 1);
    let mut fair = Vec::with_capacity(n + 1);
    let mut delta = Vec::with_capacity(n + 1);
    let mut v = discounted_fair_zcb(params, s_bar[0], times[0], maturity, d0_maturity)?;
    for k in 0..n {
        let d = zcb_delta(params, s_bar[k], times[k], maturity, d0_maturity)?;
        value.push(v);
        fair.push(discounted_fair_zcb(params, s_bar[k], times[k], maturity, d0_maturity)?);
        delta.push(d);
        v = v + d * (s_bar[k + 1] - s_bar[k]);
    }
    value.push(v);
    fair.push(d0_maturity);
    delta.push(F::zero());
    Ok(DiscountedHedge { value, fair, delta })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct HedgeResult<F> {
    pub dates: Vec<Month>,
    /// Hedge portfolio in dollars.
    pub portfolio_value: Vec<F>,
    /// Fair bond price in dollars.
    pub fair_value: Vec<F>,
    pub delta_units: Vec<F>,
    /// Share of the portfolio held in the index.
    pub index_fraction: Vec<F>,
    /// `(V_t - P(t,T)) / S*_t`.
    pub benchmarked_pnl: Vec<F>,
    /// Portfolio value at maturity less the one-dollar face.
    pub terminal_pnl: F,
}

/// Hedges the fair bond bought at `t0` and maturing at `maturity`,
/// rebalancing monthly along the realized series.
pub fn hedge_zcb<F: Real>(
    params: &MmmParams<F>,
    series: &MarketSeries<F>,
    t0: Month,
    maturity: Month,
) -> Result<HedgeResult<F>> {
    if maturity <= t0 {
        return Err(Error::InvalidWindow(format!(
            "maturity {maturity} not after inception {t0}"
        )));
    }
    let range = series.window(DateRange::new(t0, maturity)?)?;
    let s0 = &series.savings_account()[range.clone()];
    let s_bar = &series.discounted_index()[range.clone()];
    let dates: Vec<Month> = range.clone().map(|i| series.month_at(i)).collect();
    let times: Vec<F> = dates.iter().map(|&m| params.time_of(m)).collect();
    let d0_maturity = s0[s0.len() - 1].recip();

    let h = hedge_discounted(params, &times, s_bar, d0_maturity)?;
    let portfolio_value: Vec<F> = h.value.iter().zip(s0).map(|(&v, &b)| v * b).collect();
    let fair_value = h.fair.iter().zip(s0).map(|(&p, &b)| p * b).collect();
    let index_fraction = h
        .delta
        .iter()
        .zip(s_bar)
        .zip(&h.value)
        .map(|((&d, &s), &v)| d * s / v)
        .collect();
    let benchmarked_pnl = h
        .value
        .iter()
        .zip(&h.fair)
        .zip(s_bar)
        .map(|((&v, &p), &s)| (v - p) / s)
        .collect();
    Ok(HedgeResult {
        dates,
        terminal_pnl: portfolio_value[portfolio_value.len() - 1] - F::one(),
        portfolio_value,
        fair_value,
        delta_units: h.delta,
        index_fraction,
        benchmarked_pnl,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[allow(non_snake_case)]
pub struct BacktestSummary<F> {
    pub tenor_years: u32,
    pub mean_D: F,
    pub mean_P: F,
    pub mean_diff: F,
    /// Terminal hedge P&L in dollars at maturity.
    pub mean_pnl: F,
    pub std_pnl: F,
    pub n_windows: usize,
}

#[derive(Debug, Clone, Copy, Default)]
pub struct BacktestOptions {
    /// Refit the model on data from its origin up to each start date instead
    /// of holding the supplied parameters fixed.
    pub rolling_recalibration: bool,
}

struct WindowOutcome<F> {
    d: F,
    p: F,
    pnl: F,
}

/// Hedges every fair bond of each tenor whose inception and maturity lie in
/// `window`, one start per month.
pub fn backtest_zcb<F: Real>(
    params: &MmmParams<F>,
    series: &MarketSeries<F>,
    window: DateRange,
    tenors: &[u32],
    options: &BacktestOptions,
) -> Result<Vec<BacktestSummary<F>>> {
    series.window(window)?;
    tenors
        .iter()
        .map(|&tenor| {
            let months = 12 * tenor as i32;
            let last_start = window.to.offset(-months);
            if tenor == 0 || last_start < window.from {
                return Err(Error::EmptyBacktest(format!(
                    "no {tenor}-year bond fits between {} and {}",
                    window.from, window.to
                )));
            }
            let starts: Vec<Month> = (0..=last_start.months_since(window.from))
                .map(|k| window.from.offset(k))
                .collect();
            let outcomes = starts
                .par_iter()
                .map(|&start| {
                    let p = window_params(params, series, start, options)?;
                    let maturity = start.offset(months);
                    let h = hedge_zcb(&p, series, start, maturity)?;
                    Ok(WindowOutcome {
                        d: series.savings_bond(start, maturity)?,
                        p: h.fair_value[0],
                        pnl: h.terminal_pnl,
                    })
                })
                .collect::<Result<Vec<_>>>()?;
            let (mean_d, _) = mean_std(outcomes.iter().map(|o| o.d));
            let (mean_p, _) = mean_std(outcomes.iter().map(|o| o.p));
            let (mean_pnl, std_pnl) = mean_std(outcomes.iter().map(|o| o.pnl));
            Ok(BacktestSummary {
                tenor_years: tenor,
                mean_D: mean_d,
                mean_P: mean_p,
                mean_diff: mean_d - mean_p,
                mean_pnl,
                std_pnl,
                n_windows: outcomes.len(),
            })
        })
        .collect()
}

fn window_params<F: Real>(
    params: &MmmParams<F>,
    series: &MarketSeries<F>,
    start: Month,
    options: &BacktestOptions,
) -> Result<MmmParams<F>> {
    if !options.rolling_recalibration {
        return Ok(*params);
    }
    let fit_options = FitOptions {
        initial: Some((params.alpha, params.eta)),
        ..FitOptions::default()
    };
    let report = fit_mmm(series, DateRange::new(params.origin, start)?, &fit_options)?;
    Ok(*report.mmm().expect("fit_mmm yields model parameters"))
}

/// Sample mean and standard deviation (`n - 1` denominator, zero for a
/// single value), accumulated in input order.
fn mean_std<F: Real>(values: impl Iterator<Item = F> + Clone) -> (F, F) {
    let n = values.clone().count();
    let mean = values.clone().sum::<F>() / F::count(n);
    if n < 2 {
        return (mean, F::zero());
    }
    let ss: F = values.map(|x| (x - mean) * (x - mean)).sum();
    (mean, (ss / F::count(n - 1)).sqrt())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct AnnuityBacktestSummary<F> {
    pub n_windows: usize,
    pub mean_rw: F,
    pub std_rw: F,
    pub mean_rn: F,
    pub std_rn: F,
    /// `100 (1 - mean_rw / mean_rn)`.
    pub saving_pct: F,
    /// Standard deviation of the per-purchase percentage saving.
    pub std_saving_pct: F,
}

/// Values at purchase the deferred cash-linked annuity bought at each month
/// of `start_window`, paying `payment_years` yearly amounts starting
/// `deferral_years` after purchase.
pub fn backtest_cash_annuity<F: Real>(
    params: &MmmParams<F>,
    series: &MarketSeries<F>,
    start_window: DateRange,
    deferral_years: u32,
    payment_years: u32,
) -> Result<AnnuityBacktestSummary<F>> {
    backtest_cash_annuity_with(params, series, start_window, |m| {
        AnnuitySpec::annual(m, deferral_years, payment_years, AnnuityKind::CashLinked)
    })
}

/// As [`backtest_cash_annuity`], with the contract for each purchase month
/// built by `contract`.
pub fn backtest_cash_annuity_with<F: Real>(
    params: &MmmParams<F>,
    series: &MarketSeries<F>,
    start_window: DateRange,
    contract: impl Fn(Month) -> Result<AnnuitySpec<F>> + Sync,
) -> Result<AnnuityBacktestSummary<F>> {
    let range = series.window(start_window)?;
    if range.is_empty() {
        return Err(Error::EmptyBacktest("start window is empty".into()));
    }
    let values = range
        .into_par_iter()
        .map(|i| {
            let m = series.month_at(i);
            cash_annuity_from_state(params, series.discounted_index()[i], m, &contract(m)?)
        })
        .collect::<Result<Vec<_>>>()?;
    let (mean_rw, std_rw) = mean_std(values.iter().map(|v| v.discounted_rw));
    let (mean_rn, std_rn) = mean_std(values.iter().map(|v| v.discounted_rn));
    let hundred = F::lit(100.0);
    let (_, std_saving_pct) = mean_std(
        values
            .iter()
            .map(|v| hundred * (F::one() - v.discounted_rw / v.discounted_rn)),
    );
    Ok(AnnuityBacktestSummary {
        n_windows: values.len(),
        mean_rw,
        std_rw,
        mean_rn,
        std_rn,
        saving_pct: hundred * (F::one() - mean_rw / mean_rn),
        std_saving_pct,
    })
}
