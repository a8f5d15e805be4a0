//! Closed-form real-world prices under the minimal market model, and the
//! Black-Scholes comparator for the equity-linked annuity.

use num_rational::Ratio;
use serde::Serialize;

use crate::calibration::GbmParams;
use crate::error::{Error, Result};
use crate::market_data::{MarketSeries, Month};
use crate::mmm::MmmParams;
use crate::scalar::Real;
use crate::special_fn::{inv_moment, ncx2_cdf, Ncx2Params};

/// How the savings bond `D(t,T)` is obtained.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub enum Discounting<F> {
    /// Realized savings account path; `T` must lie inside the series.
    #[default]
    Realized,
    /// Deterministic flat short rate, for maturities beyond the data.
    Flat(F),
}

impl<F: Real> Discounting<F> {
    pub fn savings_bond(&self, series: &MarketSeries<F>, t: Month, maturity: Month) -> Result<F> {
        match *self {
            Discounting::Realized => series.savings_bond(t, maturity),
            Discounting::Flat(r) => {
                if t > maturity {
                    return Err(Error::InvalidWindow(format!("{t} is after {maturity}")));
                }
                Ok((-r * maturity.years_since::<F>(t)).exp())
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ZcbQuote<F> {
    pub t: Month,
    pub maturity: Month,
    /// `D(t,T)`.
    pub savings_bond: F,
    /// `P(t,T)`.
    pub fair_bond: F,
    /// `P(t,T) / S*_t`.
    pub benchmarked_fair: F,
    pub lambda: F,
}

/// `1 - exp(-2 eta s / (alpha (e^{eta T} - e^{eta t})))`, the ratio
/// `P(t,T) / D(t,T)` written out directly.
pub fn fair_to_savings_ratio<F: Real>(params: &MmmParams<F>, s_bar: F, t: F, maturity: F) -> Result<F> {
    if !(maturity > t) {
        return Err(Error::InvalidWindow(format!("need T > t, got t={t} T={maturity}")));
    }
    let two = F::lit(2.0);
    let denom = params.alpha * ((params.eta * maturity).exp() - (params.eta * t).exp());
    Ok(-(-two * params.eta * s_bar / denom).exp_m1())
}

/// Fair zero-coupon bond paying one dollar at `maturity`.
pub fn fair_zcb<F: Real>(
    params: &MmmParams<F>,
    series: &MarketSeries<F>,
    t: Month,
    maturity: Month,
    discounting: Discounting<F>,
) -> Result<ZcbQuote<F>> {
    if t >= maturity {
        return Err(Error::InvalidWindow(format!(
            "valuation {t} not before maturity {maturity}"
        )));
    }
    let i = series.position(t)?;
    let s_bar = series.discounted_index()[i];
    let (tt, tm) = (params.time_of(t), params.time_of(maturity));
    let d = discounting.savings_bond(series, t, maturity)?;
    let fair_bond = d * fair_to_savings_ratio(params, s_bar, tt, tm)?;
    Ok(ZcbQuote {
        t,
        maturity,
        savings_bond: d,
        fair_bond,
        benchmarked_fair: fair_bond / series.index_level()[i],
        lambda: params.lambda(s_bar, tt, tm)?,
    })
}

/// Discounted fair bond `P(t,T) / S0_t = D(0,T) (1 - e^{-lambda/2})`, where
/// `d0_maturity = D(0,T) = 1 / S0_T` under the savings-account normalization.
pub fn discounted_fair_zcb<F: Real>(params: &MmmParams<F>, s_bar: F, t: F, maturity: F, d0_maturity: F) -> Result<F> {
    Ok(d0_maturity * fair_to_savings_ratio(params, s_bar, t, maturity)?)
}

/// Units of the index held to hedge the fair bond: the derivative of the
/// discounted fair bond with respect to the discounted index.
pub fn zcb_delta<F: Real>(params: &MmmParams<F>, s_bar: F, t: F, maturity: F, d0_maturity: F) -> Result<F> {
    if !(maturity > t) {
        return Err(Error::InvalidWindow(format!("need T > t, got t={t} T={maturity}")));
    }
    if !(s_bar > F::zero()) {
        return Err(Error::DomainError(format!(
            "discounted index must be positive, got {s_bar}"
        )));
    }
    let two = F::lit(2.0);
    let k = two * params.eta / (params.alpha * ((params.eta * maturity).exp() - (params.eta * t).exp()));
    Ok(d0_maturity * (-k * s_bar).exp() * k)
}

/// Fraction of hedge wealth held in the index, `(lambda/2) e^{-lambda/2} / (1 - e^{-lambda/2})`.
pub fn zcb_index_fraction<F: Real>(params: &MmmParams<F>, s_bar: F, t: F, maturity: F) -> Result<F> {
    let half = params.lambda(s_bar, t, maturity)? * F::lit(0.5);
    if half == F::zero() {
        return Ok(F::one());
    }
    // x / (e^x - 1)
    Ok(half / half.exp_m1())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum AnnuityKind {
    CashLinked,
    EquityLinkedWithGuarantee,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AnnuitySpec<F> {
    pub purchase: Month,
    pub payments: Vec<Month>,
    pub kind: AnnuityKind,
    /// Growth rate of the guaranteed savings-account units; the model's
    /// `eta` when unset.
    pub guarantee_rate: Option<F>,
}

impl<F: Real> AnnuitySpec<F> {
    pub fn new(purchase: Month, payments: Vec<Month>, kind: AnnuityKind, guarantee_rate: Option<F>) -> Result<Self> {
        if payments.is_empty() {
            return Err(Error::DomainError("annuity has no payment dates".into()));
        }
        if payments[0] <= purchase {
            return Err(Error::InvalidWindow(format!(
                "first payment {} not after purchase {purchase}",
                payments[0]
            )));
        }
        if payments.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::InvalidWindow("payment dates not strictly increasing".into()));
        }
        Ok(AnnuitySpec {
            purchase,
            payments,
            kind,
            guarantee_rate,
        })
    }

    /// `count` yearly payments, the first `deferral_years` after purchase.
    pub fn annual(purchase: Month, deferral_years: u32, count: u32, kind: AnnuityKind) -> Result<Self> {
        let payments = (0..count)
            .map(|k| purchase.offset(12 * (deferral_years + k) as i32))
            .collect();
        Self::new(purchase, payments, kind, None)
    }

    /// Payments strictly after `t`; a payment falling on `t` counts as paid.
    pub fn remaining(&self, t: Month) -> impl Iterator<Item = Month> + '_ {
        self.payments.iter().copied().filter(move |&p| p > t)
    }

    fn expect(&self, kind: AnnuityKind, t: Month) -> Result<()> {
        if self.kind != kind {
            return Err(Error::DomainError(format!(
                "expected {kind:?} annuity, got {:?}",
                self.kind
            )));
        }
        if t < self.purchase {
            return Err(Error::InvalidWindow(format!(
                "valuation {t} before purchase {}",
                self.purchase
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CashAnnuityValue<F> {
    /// Real-world value in units of the savings account.
    pub discounted_rw: F,
    /// Risk-neutral value in units of the savings account.
    pub discounted_rn: F,
}

/// Annuity paying one unit of the savings account (grown from purchase) at
/// each remaining payment date.
pub fn cash_annuity_value<F: Real>(
    params: &MmmParams<F>,
    series: &MarketSeries<F>,
    t: Month,
    spec: &AnnuitySpec<F>,
) -> Result<CashAnnuityValue<F>> {
    spec.expect(AnnuityKind::CashLinked, t)?;
    let s_bar = series.discounted_index()[series.position(t)?];
    cash_annuity_from_state(params, s_bar, t, spec)
}

pub(crate) fn cash_annuity_from_state<F: Real>(
    params: &MmmParams<F>,
    s_bar: F,
    t: Month,
    spec: &AnnuitySpec<F>,
) -> Result<CashAnnuityValue<F>> {
    let tt = params.time_of(t);
    let mut rw = F::zero();
    let mut rn = F::zero();
    for p in spec.remaining(t) {
        rw = rw + fair_to_savings_ratio(params, s_bar, tt, params.time_of(p))?;
        rn = rn + F::one();
    }
    Ok(CashAnnuityValue {
        discounted_rw: rw,
        discounted_rn: rn,
    })
}

/// Mortality index `1 / (1 + survivors at T)`.
pub fn mortality_index<F: Real>(death_times: &[F], maturity: F) -> Ratio<u64> {
    let alive = death_times.iter().filter(|&&tau| tau > maturity).count() as u64;
    Ratio::new(1, 1 + alive)
}

/// Aggregate payoff at `maturity` of the pooled annuity portfolio: one fee
/// leg plus one leg per surviving policyholder, each paying the mortality
/// index times `s0_ratio`. Equals `s0_ratio` for every set of death times.
pub fn pooled_payoff_identity<F: Real>(death_times: &[F], maturity: F, s0_ratio: F) -> F {
    let legs = 1 + death_times.iter().filter(|&&tau| tau > maturity).count() as u64;
    let units = mortality_index(death_times, maturity) * Ratio::from_integer(legs);
    s0_ratio * F::from_u64(*units.numer()).unwrap() / F::from_u64(*units.denom()).unwrap()
}

/// `E_t[(S_t/S_T - S_t/(S_t0 e^{g(T-t0)}))^+]` under the model, with `g` the
/// guarantee growth rate (the model's `eta` when `None`).
pub fn guarantee_put_expectation_mmm<F: Real>(
    params: &MmmParams<F>,
    s_bar_t: F,
    s_bar_t0: F,
    t0: F,
    t: F,
    maturity: F,
    guarantee_rate: Option<F>,
) -> Result<F> {
    if !(t0 <= t) {
        return Err(Error::InvalidWindow(format!("purchase {t0} after valuation {t}")));
    }
    let terms = put_terms(params, s_bar_t, s_bar_t0, t0, t, maturity, guarantee_rate)?;
    Ok((terms.chi0 - terms.point_mass - terms.ratio * terms.chi4).max(F::zero()))
}

struct PutTerms<F> {
    chi0: F,
    chi4: F,
    point_mass: F,
    /// `S_t / (S_t0 e^{g(T-t0)})`
    ratio: F,
    growth: F,
}

fn put_terms<F: Real>(
    params: &MmmParams<F>,
    s_bar_t: F,
    s_bar_t0: F,
    t0: F,
    t: F,
    maturity: F,
    guarantee_rate: Option<F>,
) -> Result<PutTerms<F>> {
    let g = guarantee_rate.unwrap_or(params.eta);
    let dphi = params.phi_increment(t, maturity)?;
    let growth = (g * (maturity - t0)).exp();
    let lambda = s_bar_t / dphi;
    let kappa = s_bar_t0 * growth / dphi;
    Ok(PutTerms {
        chi0: ncx2_cdf(Ncx2Params::new(0, lambda)?, kappa)?,
        chi4: ncx2_cdf(Ncx2Params::new(4, lambda)?, kappa)?,
        point_mass: (-lambda * F::lit(0.5)).exp(),
        ratio: s_bar_t / (s_bar_t0 * growth),
        growth,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct AnnuityValue<F> {
    /// Value with the savings account normalized to one at purchase.
    pub value: F,
    /// `value` in units of the savings account at valuation.
    pub discounted: F,
}

/// Per-payment-date discounted value of the guaranteed equity-linked
/// annuity: equity leg `(S_t/S_t0)(1 - chi2_4(kappa))` plus guarantee leg
/// `e^{g(T-t0)} (chi2_0(kappa) - e^{-lambda/2})`.
pub fn equity_annuity_date_value_mmm<F: Real>(
    params: &MmmParams<F>,
    s_bar_t: F,
    s_bar_t0: F,
    t0: F,
    t: F,
    maturity: F,
    guarantee_rate: Option<F>,
) -> Result<F> {
    let p = put_terms(params, s_bar_t, s_bar_t0, t0, t, maturity, guarantee_rate)?;
    Ok(s_bar_t / s_bar_t0 * (F::one() - p.chi4) + p.growth * (p.chi0 - p.point_mass))
}

pub fn equity_annuity_value_mmm<F: Real>(
    params: &MmmParams<F>,
    series: &MarketSeries<F>,
    t: Month,
    spec: &AnnuitySpec<F>,
) -> Result<AnnuityValue<F>> {
    spec.expect(AnnuityKind::EquityLinkedWithGuarantee, t)?;
    let (i, i0) = (series.position(t)?, series.position(spec.purchase)?);
    let sb = series.discounted_index();
    let (tt, t0) = (params.time_of(t), params.time_of(spec.purchase));
    let mut discounted = F::zero();
    for p in spec.remaining(t) {
        discounted = discounted
            + equity_annuity_date_value_mmm(params, sb[i], sb[i0], t0, tt, params.time_of(p), spec.guarantee_rate)?;
    }
    let growth = series.savings_account()[i] / series.savings_account()[i0];
    Ok(AnnuityValue {
        value: discounted * growth,
        discounted,
    })
}

/// Black-Scholes counterpart of [`guarantee_put_expectation_mmm`]:
/// `N(d1) - ratio N(d2)`.
pub fn guarantee_put_expectation_bs<F: Real>(theta: F, s_ratio: F, growth_factor: F, tau: F) -> Result<F> {
    let (d1, d2) = bs_d(theta, s_ratio, growth_factor, tau)?;
    Ok((d1.norm_cdf() - s_ratio / growth_factor * d2.norm_cdf()).max(F::zero()))
}

/// `d1, d2` with `s_ratio = S_t / S_t0` and `growth_factor = e^{g(T-t0)}`.
fn bs_d<F: Real>(theta: F, s_ratio: F, growth_factor: F, tau: F) -> Result<(F, F)> {
    if !(tau > F::zero()) {
        return Err(Error::InvalidWindow(format!(
            "time to payment must be positive, got {tau}"
        )));
    }
    let vol = theta * tau.sqrt();
    let d1 = ((growth_factor / s_ratio).ln() + F::lit(0.5) * vol * vol) / vol;
    Ok((d1, d1 - vol))
}

/// Per-payment-date discounted value under Black-Scholes dynamics.
pub fn equity_annuity_date_value_bs<F: Real>(theta: F, s_ratio: F, growth_factor: F, tau: F) -> Result<F> {
    let (d1, d2) = bs_d(theta, s_ratio, growth_factor, tau)?;
    Ok(s_ratio * (F::one() - d2.norm_cdf()) + growth_factor * d1.norm_cdf())
}

pub fn equity_annuity_value_bs<F: Real>(
    params: &GbmParams<F>,
    series: &MarketSeries<F>,
    t: Month,
    spec: &AnnuitySpec<F>,
    eta: F,
) -> Result<AnnuityValue<F>> {
    spec.expect(AnnuityKind::EquityLinkedWithGuarantee, t)?;
    let g = spec.guarantee_rate.unwrap_or(eta);
    let (i, i0) = (series.position(t)?, series.position(spec.purchase)?);
    let sb = series.discounted_index();
    let s_ratio = sb[i] / sb[i0];
    let mut discounted = F::zero();
    for p in spec.remaining(t) {
        let growth = (g * p.years_since::<F>(spec.purchase)).exp();
        let tau = p.years_since::<F>(t);
        discounted = discounted + equity_annuity_date_value_bs(params.theta, s_ratio, growth, tau)?;
    }
    let growth = series.savings_account()[i] / series.savings_account()[i0];
    Ok(AnnuityValue {
        value: discounted * growth,
        discounted,
    })
}

/// `D(t,T) * E(lambda/U)`: the fair bond through the inverse-moment route.
pub fn fair_zcb_via_inverse_moment<F: Real>(
    params: &MmmParams<F>,
    s_bar: F,
    t: F,
    maturity: F,
    savings_bond: F,
) -> Result<F> {
    let lambda = params.lambda(s_bar, t, maturity)?;
    Ok(savings_bond * inv_moment(Ncx2Params::new(4, lambda)?)?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn params() -> MmmParams<f64> {
        MmmParams::new(0.00586, 0.049496, Month::new(1871, 1).unwrap()).unwrap()
    }

    fn flat_series(start: Month, n: usize, s_bar: f64, rate: f64) -> MarketSeries<f64> {
        let growth: Vec<f64> = (0..n).map(|i| (rate * i as f64 / 12.0).exp()).collect();
        let idx = growth.iter().map(|g| s_bar * g).collect();
        MarketSeries::from_observations(start, idx, vec![rate; n], 1.0).unwrap()
    }

    #[test]
    fn closed_form_matches_inverse_moment_route() {
        let p = params();
        for &s in &[0.01, 0.05, 0.3, 2.0] {
            for &(t, tm) in &[(0.0, 1.0), (10.0, 40.0), (61.0, 146.2), (100.0, 100.5)] {
                let a = fair_to_savings_ratio(&p, s, t, tm).unwrap();
                let b = fair_zcb_via_inverse_moment(&p, s, t, tm, 1.0).unwrap();
                assert!((a - b).abs() <= 1e-14 * a.max(1e-300) + 1e-16, "{s} {t} {tm}: {a} {b}");
                assert!(a > 0.0 && a <= 1.0);
                if p.lambda(s, t, tm).unwrap() < 60.0 {
                    assert!(a < 1.0);
                }
            }
        }
    }

    #[test]
    fn fair_bond_tends_to_savings_bond_at_maturity() {
        let p = params();
        let r = fair_to_savings_ratio(&p, 0.05, 61.0, 61.0 + 1e-6).unwrap();
        assert_eq!(r, 1.0);
        assert!(matches!(
            fair_to_savings_ratio(&p, 0.05, 2.0, 2.0),
            Err(Error::InvalidWindow(_))
        ));
    }

    #[test]
    fn fair_zcb_quote_fields() {
        let start = Month::new(1930, 1).unwrap();
        let s = flat_series(start, 240, 0.05, 0.03);
        let p = MmmParams::new(0.00586, 0.049496, start).unwrap();
        let (t, tm) = (start.offset(24), start.offset(204));
        let q = fair_zcb(&p, &s, t, tm, Discounting::Realized).unwrap();
        assert!((q.savings_bond - (-0.03f64 * 15.0).exp()).abs() < 1e-13);
        assert!(q.fair_bond < q.savings_bond);
        let expect = q.savings_bond * -(-q.lambda / 2.0).exp_m1();
        assert!((q.fair_bond - expect).abs() <= 1e-14 * expect);
        assert!((q.benchmarked_fair - q.fair_bond / s.index_level()[24]).abs() < 1e-18);
        let far = start.offset(600);
        assert!(matches!(
            fair_zcb(&p, &s, t, far, Discounting::Realized),
            Err(Error::OutOfRange(..))
        ));
        let fwd = fair_zcb(&p, &s, t, far, Discounting::Flat(0.03)).unwrap();
        assert!((fwd.savings_bond - (-0.03f64 * 48.0).exp()).abs() < 1e-14);
        assert!(matches!(
            fair_zcb(&p, &s, tm, t, Discounting::Realized),
            Err(Error::InvalidWindow(_))
        ));
    }

    #[test]
    fn delta_matches_finite_difference() {
        let p = params();
        for &(t, tm, s) in &[(1.0, 11.0, 0.02), (61.0, 146.0, 0.04), (5.0, 30.0, 0.5)] {
            let pb = |x: f64| discounted_fair_zcb(&p, x, t, tm, 0.4).unwrap();
            let d = zcb_delta(&p, s, t, tm, 0.4).unwrap();
            let fd = |h: f64| (pb(s + h) - pb(s - h)) / (2.0 * h);
            assert!(((fd(1e-5) - d) / d).abs() < 1e-6, "{t} {tm} {s}");
            let e4 = (fd(1e-3) - d).abs();
            let e5 = (fd(1e-4) - d).abs();
            let ratio = e4 / e5;
            assert!(ratio > 50.0 && ratio < 200.0, "richardson ratio {ratio}");
        }
    }

    #[test]
    fn index_fraction_limits() {
        let p = params();
        let (t, tm) = (1.0, 11.0);
        let dphi = p.phi_increment(t, tm).unwrap();
        let small = zcb_index_fraction(&p, 1e-6 * dphi, t, tm).unwrap();
        assert!((small - 1.0).abs() < 1e-6);
        let large = zcb_index_fraction(&p, 200.0 * dphi, t, tm).unwrap();
        assert!(large < 1e-40);
        let s = 0.3 * dphi;
        let pi = zcb_delta(&p, s, t, tm, 1.0).unwrap() * s / discounted_fair_zcb(&p, s, t, tm, 1.0).unwrap();
        assert!((pi - zcb_index_fraction(&p, s, t, tm).unwrap()).abs() < 1e-14);
        assert!(zcb_delta(&p, 200.0 * dphi, t, tm, 1.0).unwrap() < 1e-40);
    }

    #[test]
    fn annuity_spec_validation() {
        let t0 = Month::new(1932, 1).unwrap();
        let spec = AnnuitySpec::<f64>::annual(t0, 40, 45, AnnuityKind::CashLinked).unwrap();
        assert_eq!(spec.payments[0], Month::new(1972, 1).unwrap());
        assert_eq!(*spec.payments.last().unwrap(), Month::new(2016, 1).unwrap());
        assert!(AnnuitySpec::<f64>::new(t0, vec![t0], AnnuityKind::CashLinked, None).is_err());
        assert!(AnnuitySpec::<f64>::new(t0, vec![t0.offset(2), t0.offset(1)], AnnuityKind::CashLinked, None).is_err());
        assert!(AnnuitySpec::<f64>::new(t0, vec![], AnnuityKind::CashLinked, None).is_err());
    }

    #[test]
    fn cash_annuity_basics() {
        let start = Month::new(1871, 1).unwrap();
        let s = flat_series(start, 800, 0.05, 0.03);
        let p = params();
        let t0 = Month::new(1900, 1).unwrap();
        let spec = AnnuitySpec::annual(t0, 40, 45, AnnuityKind::CashLinked).unwrap();
        let v = cash_annuity_value(&p, &s, t0, &spec).unwrap();
        assert_eq!(v.discounted_rn, 45.0);
        assert!(v.discounted_rw < v.discounted_rn && v.discounted_rw > 0.0);

        let single = AnnuitySpec::new(t0, vec![t0.offset(120)], AnnuityKind::CashLinked, None).unwrap();
        let one = cash_annuity_value(&p, &s, t0, &single).unwrap();
        let q = fair_zcb(&p, &s, t0, t0.offset(120), Discounting::Realized).unwrap();
        assert!((one.discounted_rw - q.fair_bond / q.savings_bond).abs() < 1e-15);

        let paid = cash_annuity_value(&p, &s, t0.offset(120), &single).unwrap();
        assert_eq!((paid.discounted_rw, paid.discounted_rn), (0.0, 0.0));

        let equity = AnnuitySpec::new(t0, vec![t0.offset(12)], AnnuityKind::EquityLinkedWithGuarantee, None).unwrap();
        assert!(cash_annuity_value(&p, &s, t0, &equity).is_err());
        assert!(cash_annuity_value(&p, &s, t0.offset(-1), &single).is_err());
    }

    #[test]
    fn cash_annuity_monotone() {
        let p = params();
        let t0 = Month::new(1932, 1).unwrap();
        let spec = AnnuitySpec::annual(t0, 40, 45, AnnuityKind::CashLinked).unwrap();
        let later = AnnuitySpec::annual(t0, 45, 45, AnnuityKind::CashLinked).unwrap();
        let mut prev = 0.0;
        for &s in &[0.01, 0.02, 0.05, 0.1] {
            let v = cash_annuity_from_state(&p, s, t0, &spec).unwrap().discounted_rw;
            let w = cash_annuity_from_state(&p, s, t0, &later).unwrap().discounted_rw;
            assert!(v > prev && w < v);
            prev = v;
        }
    }

    #[test]
    fn pooled_identity_examples() {
        assert_eq!(pooled_payoff_identity::<f64>(&[], 5.0, 1.7), 1.7);
        assert_eq!(mortality_index(&[6.0, 7.0, 8.0], 5.0), Ratio::new(1, 4));
        assert_eq!(pooled_payoff_identity(&[6.0, 7.0, 8.0], 5.0, 1.7), 1.7);
        assert_eq!(mortality_index(&[1.0, 7.0, 5.0], 5.0), Ratio::new(1, 2));
    }

    proptest! {
        #[test]
        fn pooled_identity_exact(deaths in proptest::collection::vec(0.0f64..100.0, 0..200), tm in 0.0f64..100.0, r in 0.01f64..100.0) {
            prop_assert_eq!(pooled_payoff_identity(&deaths, tm, r), r);
        }
    }

    #[test]
    fn put_limits() {
        let p = params();
        let (t0, t, tm) = (10.0, 20.0, 40.0);
        let dphi = p.phi_increment(t, tm).unwrap();
        let s_t = 2.0 * dphi;
        let growth = (p.eta * (tm - t0)).exp();
        // strike at zero
        let tiny = guarantee_put_expectation_mmm(&p, s_t, 1e-12 * dphi / growth, t0, t, tm, None).unwrap();
        assert!(tiny < 1e-10);
        // deep in the money
        let s_t0 = 1e8 * dphi / growth;
        let deep = guarantee_put_expectation_mmm(&p, s_t, s_t0, t0, t, tm, None).unwrap();
        let lim = inv_moment(Ncx2Params::new(4, 2.0).unwrap()).unwrap();
        assert!((deep - lim).abs() < 1e-7, "{deep} {lim}");
        assert!(guarantee_put_expectation_mmm(&p, s_t, s_t0, 25.0, t, tm, None).is_err());
    }

    #[test]
    fn equity_annuity_decomposes_into_forward_and_put() {
        let p = params();
        let (t0, t) = (61.0, 70.0);
        for &(s_t, s_t0) in &[(0.02, 0.03), (0.05, 0.03), (0.01, 0.01)] {
            for &tm in &[71.0, 101.0, 145.0] {
                for g in [None, Some(0.02)] {
                    let v = equity_annuity_date_value_mmm(&p, s_t, s_t0, t0, t, tm, g).unwrap();
                    let put = guarantee_put_expectation_mmm(&p, s_t, s_t0, t0, t, tm, g).unwrap();
                    let growth = (g.unwrap_or(p.eta) * (tm - t0)).exp();
                    let alt = s_t / s_t0 + growth * put;
                    assert!((v - alt).abs() <= 1e-12 * v, "{v} {alt}");
                }
            }
        }
    }

    #[test]
    fn bs_degenerate_volatility_is_pure_guarantee() {
        let growth = (0.05f64 * 30.0).exp();
        let v = equity_annuity_date_value_bs(1e-9, 0.8, growth, 10.0).unwrap();
        assert!((v - growth).abs() < 1e-12 * growth);
        let above = equity_annuity_date_value_bs(1e-9, 10.0, growth, 10.0).unwrap();
        assert!((above - 10.0).abs() < 1e-9);
        let put = guarantee_put_expectation_bs(1e-9, 0.8, growth, 10.0).unwrap();
        assert!((put - (1.0 - 0.8 / growth)).abs() < 1e-12);
        assert!(equity_annuity_date_value_bs(0.2, 1.0, 1.0, 0.0).is_err());
    }

    #[test]
    fn annuity_values_on_series() {
        let start = Month::new(1871, 1).unwrap();
        let s = flat_series(start, 1000, 0.05, 0.03);
        let p = params();
        let t0 = Month::new(1932, 1).unwrap();
        let mut spec = AnnuitySpec::annual(t0, 40, 45, AnnuityKind::EquityLinkedWithGuarantee).unwrap();
        let mmm = equity_annuity_value_mmm(&p, &s, t0, &spec).unwrap();
        assert_eq!(mmm.value, mmm.discounted);
        let gbm = GbmParams::new(0.13).unwrap();
        let bs = equity_annuity_value_bs(&gbm, &s, t0, &spec, p.eta).unwrap();
        assert!(mmm.discounted < bs.discounted);
        let later = t0.offset(12);
        let v = equity_annuity_value_mmm(&p, &s, later, &spec).unwrap();
        assert!((v.value / v.discounted - (0.03f64).exp()).abs() < 1e-12);
        spec.kind = AnnuityKind::CashLinked;
        assert!(equity_annuity_value_mmm(&p, &s, t0, &spec).is_err());
    }
}
