//! The stylized minimal market model: the discounted index is a
//! time-changed squared Bessel process of dimension four whose drift grows
//! as `alpha * exp(eta * t)`.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::market_data::{DateRange, MarketSeries, Month};
use crate::scalar::Real;
use crate::special_fn::log_bessel_i1;

/// Fitted or supplied model parameters.
///
/// Model time is measured in years from `origin`, the first month of the
/// calibration window; `phi` and every closed-form price depend on it.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct MmmParams<F> {
    pub alpha: F,
    pub eta: F,
    /// Standard errors of `(alpha, eta)`.
    pub std_err: Option<(F, F)>,
    pub log_likelihood: Option<F>,
    pub origin: Month,
}

impl<F: Real> MmmParams<F> {
    pub fn new(alpha: F, eta: F, origin: Month) -> Result<Self> {
        if !(alpha > F::zero() && alpha.is_finite()) {
            return Err(Error::DomainError(format!("alpha must be positive, got {alpha}")));
        }
        if !(eta > F::zero() && eta.is_finite()) {
            return Err(Error::DomainError(format!("eta must be positive, got {eta}")));
        }
        Ok(MmmParams {
            alpha,
            eta,
            std_err: None,
            log_likelihood: None,
            origin,
        })
    }

    /// Model time of a calendar month.
    pub fn time_of(&self, m: Month) -> F {
        m.years_since(self.origin)
    }

    /// Drift `alpha_t = alpha * exp(eta * t)`.
    pub fn drift(&self, t: F) -> F {
        self.alpha * (self.eta * t).exp()
    }

    /// `phi(t) = alpha (exp(eta t) - 1) / (4 eta)`, the quadratic variation of
    /// the square root of the discounted index.
    pub fn phi(&self, t: F) -> Result<F> {
        if !(t >= F::zero()) {
            return Err(Error::DomainError(format!("phi needs t >= 0, got {t}")));
        }
        Ok(self.alpha * (self.eta * t).exp_m1() / (F::lit(4.0) * self.eta))
    }

    /// `phi(T) - phi(t)` without cancellation.
    pub fn phi_increment(&self, t: F, maturity: F) -> Result<F> {
        if !(maturity > t) {
            return Err(Error::InvalidWindow(format!("need T > t, got t={t} T={maturity}")));
        }
        if !(t >= F::zero()) {
            return Err(Error::DomainError(format!("model time must be >= 0, got {t}")));
        }
        Ok(self.drift(t) * (self.eta * (maturity - t)).exp_m1() / (F::lit(4.0) * self.eta))
    }

    /// Non-centrality `S_bar_t / (phi_T - phi_t)`.
    pub fn lambda(&self, s_bar: F, t: F, maturity: F) -> Result<F> {
        Ok(s_bar / self.phi_increment(t, maturity)?)
    }

    /// Market price of risk `sqrt(alpha_t / S_bar_t)`; diagnostic only.
    pub fn market_price_of_risk(&self, s_bar: F, t: F) -> F {
        (self.drift(t) / s_bar).sqrt()
    }

    /// Log transition density of the discounted index from `x_t` at `t` to
    /// `x_maturity` at `maturity`.
    pub fn transition_log_density(&self, t: F, x_t: F, maturity: F, x_maturity: F) -> Result<F> {
        if !(x_t > F::zero() && x_maturity > F::zero()) {
            return Err(Error::DomainError(format!(
                "states must be positive, got {x_t} and {x_maturity}"
            )));
        }
        let dphi = self.phi_increment(t, maturity)?;
        Ok(log_density_step(x_t, x_maturity, dphi))
    }

    /// Log-likelihood of observed `states` at strictly increasing model `times`.
    pub fn log_likelihood_path(&self, times: &[F], states: &[F]) -> Result<F> {
        if times.len() != states.len() {
            return Err(Error::DomainError("times and states differ in length".into()));
        }
        if states.len() < 2 {
            return Err(Error::InsufficientData(format!(
                "{} observation(s), need at least 2",
                states.len()
            )));
        }
        let mut total = F::zero();
        for (t, x) in times.windows(2).zip(states.windows(2)) {
            total = total + self.transition_log_density(t[0], x[0], t[1], x[1])?;
        }
        Ok(total)
    }

    /// Sum of transition log densities over consecutive observations in `window`.
    pub fn path_log_likelihood(&self, series: &MarketSeries<F>, window: DateRange) -> Result<F> {
        let range = series.window(window)?;
        if range.len() < 2 {
            return Err(Error::InsufficientData(format!(
                "window {}..{} holds {} observation(s)",
                window.from,
                window.to,
                range.len()
            )));
        }
        if window.from < self.origin {
            return Err(Error::DomainError(format!(
                "window starts {} before model origin {}",
                window.from, self.origin
            )));
        }
        let times: Vec<F> = range.clone().map(|i| self.time_of(series.month_at(i))).collect();
        self.log_likelihood_path(&times, &series.discounted_index()[range])
    }

    /// Exact simulation on `grid` (strictly increasing, all after `t0`),
    /// one independent random stream per path. Row `p` holds `x0` followed
    /// by the state at each grid time.
    pub fn simulate_paths(&self, x0: F, t0: F, grid: &[F], n_paths: usize, seed: u64) -> Result<Vec<Vec<F>>>
    where
        StandardNormal: Distribution<F>,
    {
        if !(x0 > F::zero()) {
            return Err(Error::DomainError(format!("x0 must be positive, got {x0}")));
        }
        if n_paths == 0 {
            return Err(Error::DomainError("n_paths must be at least 1".into()));
        }
        let mut prev = t0;
        let mut dphis = Vec::with_capacity(grid.len());
        for &t in grid {
            if !(t > prev) {
                return Err(Error::InvalidWindow(format!("grid not increasing at {t}")));
            }
            dphis.push(self.phi_increment(prev, t)?);
            prev = t;
        }
        Ok((0..n_paths)
            .into_par_iter()
            .map(|p| {
                let mut rng = path_rng(seed, p as u64);
                let mut row = Vec::with_capacity(grid.len() + 1);
                let mut x = x0;
                row.push(x);
                for &dphi in &dphis {
                    x = sample_transition(&mut rng, x, dphi);
                    row.push(x);
                }
                row
            })
            .collect())
    }
}

/// Per-path random stream derived from `(seed, path)`.
pub fn path_rng(seed: u64, path: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(path);
    rng
}

/// Log transition density for a time-change increment `dphi`.
pub(crate) fn log_density_step<F: Real>(x0: F, x1: F, dphi: F) -> F {
    let two_dphi = dphi + dphi;
    let z = (x0 * x1).sqrt() / dphi;
    -two_dphi.ln() + F::lit(0.5) * (x1 / x0).ln() - (x0 + x1) / two_dphi
        + log_bessel_i1(z).expect("z > 0 for positive states")
}

/// One exact step: `dphi * U` with `U ~ ncx2(4, x / dphi)`, drawn as
/// `(Z1 + sqrt(lambda))^2 + Z2^2 + Z3^2 + Z4^2`.
pub fn sample_transition<F: Real, R: Rng + ?Sized>(rng: &mut R, x: F, dphi: F) -> F
where
    StandardNormal: Distribution<F>,
{
    let shift = (x / dphi).sqrt();
    let z1: F = StandardNormal.sample(rng) + shift;
    let z2: F = StandardNormal.sample(rng);
    let z3: F = StandardNormal.sample(rng);
    let z4: F = StandardNormal.sample(rng);
    dphi * (z1 * z1 + z2 * z2 + z3 * z3 + z4 * z4)
}
