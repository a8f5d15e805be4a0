//! Maximum likelihood calibration of the minimal market model (iterated
//! quadratic surrogate on a 5x5 likelihood grid, started from a
//! quadratic-variation match) and of the geometric Brownian motion
//! comparator.

use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::market_data::{DateRange, MarketSeries, MONTH_FRACTION};
use crate::mmm::MmmParams;
use crate::scalar::Real;

/// Volatility of the Black-Scholes comparator `dS = theta^2 S dt + theta S dW`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct GbmParams<F> {
    pub theta: F,
    pub std_err: Option<F>,
    pub log_likelihood: Option<F>,
}

impl<F: Real> GbmParams<F> {
    pub fn new(theta: F) -> Result<Self> {
        if !(theta > F::zero() && theta.is_finite()) {
            return Err(Error::DomainError(format!("theta must be positive, got {theta}")));
        }
        Ok(GbmParams {
            theta,
            std_err: None,
            log_likelihood: None,
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "model", rename_all = "lowercase")]
pub enum FittedParams<F> {
    Mmm(MmmParams<F>),
    Gbm(GbmParams<F>),
}

/// One likelihood evaluation on the surrogate grid.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct GridPoint<F> {
    pub iteration: usize,
    pub alpha: F,
    pub eta: F,
    pub log_likelihood: F,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CalibrationReport<F> {
    pub params: FittedParams<F>,
    pub iterations: usize,
    pub converged: bool,
    /// `(alpha0, eta0)` for the minimal market model, `(theta, 0)` for GBM.
    pub initial_guess: (F, F),
    /// Estimator covariance bound, row-major `[[aa, ae], [ea, ee]]`.
    pub covariance: Option<[[F; 2]; 2]>,
    pub grid_history: Option<Vec<GridPoint<F>>>,
}

impl<F: Real> CalibrationReport<F> {
    pub fn mmm(&self) -> Option<&MmmParams<F>> {
        match &self.params {
            FittedParams::Mmm(p) => Some(p),
            FittedParams::Gbm(_) => None,
        }
    }

    pub fn gbm(&self) -> Option<&GbmParams<F>> {
        match &self.params {
            FittedParams::Gbm(p) => Some(p),
            FittedParams::Mmm(_) => None,
        }
    }
}

#[derive(Debug, Clone, Copy)]
pub struct FitOptions<F> {
    /// Relative parameter step below which the iteration stops.
    pub rel_tol: F,
    pub max_iter: usize,
    /// Grid halvings allowed when the surrogate is not concave or does not
    /// improve the likelihood.
    pub max_shrinks: usize,
    /// Overrides the quadratic-variation starting point.
    pub initial: Option<(F, F)>,
    pub record_grid: bool,
}

impl<F: Real> Default for FitOptions<F> {
    fn default() -> Self {
        FitOptions {
            rel_tol: F::lit(1e-8),
            max_iter: 100,
            max_shrinks: 10,
            initial: None,
            record_grid: false,
        }
    }
}

fn window_states<F: Real>(series: &MarketSeries<F>, window: DateRange, min: usize) -> Result<&[F]> {
    let range = series.window(window)?;
    if range.len() < min {
        return Err(Error::InsufficientData(format!(
            "window {}..{} holds {} observation(s), need at least {min}",
            window.from,
            window.to,
            range.len()
        )));
    }
    Ok(&series.discounted_index()[range])
}

fn grid_times<F: Real>(n: usize) -> Vec<F> {
    (0..n).map(|i| F::count(i) * F::lit(MONTH_FRACTION)).collect()
}

/// Cumulative realized quadratic variation of the square root of the
/// discounted index, one entry per observation (the first is zero).
pub fn empirical_qv_sqrt<F: Real>(series: &MarketSeries<F>, window: DateRange) -> Result<Vec<F>> {
    let states = window_states(series, window, 2)?;
    Ok(qv_sqrt(states))
}

fn qv_sqrt<F: Real>(states: &[F]) -> Vec<F> {
    let mut acc = F::zero();
    let mut out = Vec::with_capacity(states.len());
    out.push(acc);
    for w in states.windows(2) {
        let d = w[1].sqrt() - w[0].sqrt();
        acc = acc + d * d;
        out.push(acc);
    }
    out
}

/// Starting point `(alpha0, eta0)` from matching the realized quadratic
/// variation to `phi` at the middle and at the end of the window.
pub fn initial_estimates<F: Real>(series: &MarketSeries<F>, window: DateRange) -> Result<(F, F)> {
    let states = window_states(series, window, 4)?;
    initial_from_states(states)
}

fn initial_from_states<F: Real>(states: &[F]) -> Result<(F, F)> {
    let qv = qv_sqrt(states);
    let n = states.len() - 1;
    let k = n / 2;
    let t_k = F::count(k) * F::lit(MONTH_FRACTION);
    let (qk, q2k) = (qv[k], qv[2 * k]);
    if !(qk > F::zero()) {
        return Err(Error::InitializationFailure(
            "zero realized variation in first half".into(),
        ));
    }
    let eta0 = (q2k / qk - F::one()).ln() / t_k;
    if !(eta0 > F::zero()) || !eta0.is_finite() {
        return Err(Error::InitializationFailure(format!(
            "variation ratio {} gives non-positive growth rate",
            q2k / qk
        )));
    }
    let alpha0 = qk * F::lit(4.0) * eta0 / (eta0 * t_k).exp_m1();
    Ok((alpha0, eta0))
}

/// Quadratic surrogate fitted in grid units `z = (x - center) / step`:
/// `l(z) ~ c + g.z + z' H z`.
#[derive(Debug, Clone, Copy)]
struct Surrogate<F> {
    g: [F; 2],
    h: [[F; 2]; 2],
}

impl<F: Real> Surrogate<F> {
    fn fit(values: &[F; 25]) -> Option<Self> {
        // features 1, u, w, u^2, u w, w^2 on u, w in {-2..2}
        let mut ata = [[F::zero(); 6]; 6];
        let mut atb = [F::zero(); 6];
        for (idx, &l) in values.iter().enumerate() {
            let u = F::from_i32(idx as i32 / 5 - 2).unwrap();
            let w = F::from_i32(idx as i32 % 5 - 2).unwrap();
            let row = [F::one(), u, w, u * u, u * w, w * w];
            for r in 0..6 {
                atb[r] = atb[r] + row[r] * l;
                for c in 0..6 {
                    ata[r][c] = ata[r][c] + row[r] * row[c];
                }
            }
        }
        let coef = solve(ata, atb)?;
        let half = F::lit(0.5);
        Some(Surrogate {
            g: [coef[1], coef[2]],
            h: [[coef[3], coef[4] * half], [coef[4] * half, coef[5]]],
        })
    }

    fn det(&self) -> F {
        self.h[0][0] * self.h[1][1] - self.h[0][1] * self.h[1][0]
    }

    fn concave(&self) -> bool {
        self.h[0][0] < F::zero() && self.det() > F::zero()
    }

    /// Maximizer `-H^{-1} g / 2` in grid units.
    fn argmax(&self) -> [F; 2] {
        let d = self.det();
        let two = F::lit(2.0);
        [
            -(self.h[1][1] * self.g[0] - self.h[0][1] * self.g[1]) / (two * d),
            -(self.h[0][0] * self.g[1] - self.h[1][0] * self.g[0]) / (two * d),
        ]
    }

    /// `(-2A)^{-1}` in parameter units, `A = D^{-1} H D^{-1}`.
    fn covariance(&self, step: [F; 2]) -> [[F; 2]; 2] {
        let d = self.det();
        let m = -F::lit(0.5) / d;
        let off = -m * self.h[0][1] * step[0] * step[1];
        [
            [m * self.h[1][1] * step[0] * step[0], off],
            [off, m * self.h[0][0] * step[1] * step[1]],
        ]
    }
}

/// Gaussian elimination with partial pivoting.
#[allow(clippy::needless_range_loop)]
fn solve<F: Real, const N: usize>(mut a: [[F; N]; N], mut b: [F; N]) -> Option<[F; N]> {
    for col in 0..N {
        let pivot = (col..N).max_by(|&i, &j| a[i][col].abs().partial_cmp(&a[j][col].abs()).unwrap())?;
        if a[pivot][col].abs() <= F::epsilon() {
            return None;
        }
        a.swap(col, pivot);
        b.swap(col, pivot);
        for row in col + 1..N {
            let f = a[row][col] / a[col][col];
            for c in col..N {
                a[row][c] = a[row][c] - f * a[col][c];
            }
            b[row] = b[row] - f * b[col];
        }
    }
    let mut x = [F::zero(); N];
    for row in (0..N).rev() {
        let mut s = b[row];
        for c in row + 1..N {
            s = s - a[row][c] * x[c];
        }
        x[row] = s / a[row][row];
    }
    Some(x)
}

/// Maximum likelihood fit of `(alpha, eta)` on `window`, with model time
/// starting at zero on the first month of the window.
pub fn fit_mmm<F: Real>(
    series: &MarketSeries<F>,
    window: DateRange,
    options: &FitOptions<F>,
) -> Result<CalibrationReport<F>> {
    let states = window_states(series, window, 4)?;
    let times = grid_times::<F>(states.len());
    let origin = window.from;
    let initial = match options.initial {
        Some(p) => p,
        None => initial_from_states(states)?,
    };

    let loglik = |alpha: F, eta: F| -> F {
        MmmParams::new(alpha, eta, origin)
            .and_then(|p| p.log_likelihood_path(&times, states))
            .unwrap_or(F::neg_infinity())
    };

    let mut center = [initial.0, initial.1];
    let mut center_ll = loglik(center[0], center[1]);
    let mut shrink = F::one();
    let mut shrinks = 0usize;
    let mut history = options.record_grid.then(Vec::new);
    let mut converged = false;
    let mut iterations = 0usize;
    let mut last_fit: Option<(Surrogate<F>, [F; 2])> = None;

    while iterations < options.max_iter {
        iterations += 1;
        let step = [center[0] * F::lit(0.25) * shrink, center[1] * F::lit(0.25) * shrink];
        let points: Vec<(F, F)> = (0..25)
            .map(|idx| {
                let i = F::from_i32(idx / 5 - 2).unwrap();
                let j = F::from_i32(idx % 5 - 2).unwrap();
                (center[0] + i * step[0], center[1] + j * step[1])
            })
            .collect();
        let evaluated: Vec<F> = points.par_iter().map(|&(a, e)| loglik(a, e)).collect();
        if let Some(h) = history.as_mut() {
            h.extend(points.iter().zip(&evaluated).map(|(&(alpha, eta), &l)| GridPoint {
                iteration: iterations,
                alpha,
                eta,
                log_likelihood: l,
            }));
        }
        let mut values = [F::zero(); 25];
        values.copy_from_slice(&evaluated);

        let surrogate = values
            .iter()
            .all(|v| v.is_finite())
            .then(|| Surrogate::fit(&values))
            .flatten()
            .filter(Surrogate::concave);
        let Some(surrogate) = surrogate else {
            if shrinks == options.max_shrinks {
                return Err(Error::SurrogateNotConcave {
                    iteration: iterations,
                    grid: points
                        .iter()
                        .zip(&evaluated)
                        .map(|(&(a, e), &l)| (a.to_f64().unwrap(), e.to_f64().unwrap(), l.to_f64().unwrap()))
                        .collect(),
                });
            }
            shrink = shrink * F::lit(0.5);
            shrinks += 1;
            continue;
        };

        let z = surrogate.argmax();
        let next = [center[0] + z[0] * step[0], center[1] + z[1] * step[1]];
        if !(next[0] > F::zero() && next[1] > F::zero()) || !next[0].is_finite() || !next[1].is_finite() {
            return Err(Error::DivergedEstimate(format!(
                "iteration {iterations} proposed alpha={} eta={}",
                next[0], next[1]
            )));
        }
        let next_ll = loglik(next[0], next[1]);
        if !(next_ll >= center_ll) {
            if shrinks == options.max_shrinks {
                // cannot improve on the current center at any grid scale
                last_fit = Some((surrogate, step));
                converged = surrogate.concave();
                break;
            }
            shrink = shrink * F::lit(0.5);
            shrinks += 1;
            continue;
        }

        let rel = ((next[0] - center[0]) / center[0])
            .abs()
            .max(((next[1] - center[1]) / center[1]).abs());
        center = next;
        center_ll = next_ll;
        last_fit = Some((surrogate, step));
        if rel < options.rel_tol {
            converged = true;
            break;
        }
    }

    let mut params = MmmParams::new(center[0], center[1], origin)?;
    params.log_likelihood = Some(center_ll);
    let covariance = last_fit.map(|(s, step)| s.covariance(step));
    if let Some(cov) = covariance {
        params.std_err = Some((cov[0][0].max(F::zero()).sqrt(), cov[1][1].max(F::zero()).sqrt()));
    }
    Ok(CalibrationReport {
        params: FittedParams::Mmm(params),
        iterations,
        converged,
        initial_guess: initial,
        covariance,
        grid_history: history,
    })
}

/// Exact Gaussian maximum likelihood for the GBM discounted index, whose
/// monthly log-increments are `N(theta^2 dt / 2, theta^2 dt)`. The
/// likelihood is that of the index levels, so it is comparable with the
/// minimal market model's.
pub fn fit_gbm<F: Real>(series: &MarketSeries<F>, window: DateRange) -> Result<CalibrationReport<F>> {
    let states = window_states(series, window, 2)?;
    let dt = F::lit(MONTH_FRACTION);
    let n = F::count(states.len() - 1);
    let returns: Vec<F> = states.windows(2).map(|w| (w[1] / w[0]).ln()).collect();
    let sum_sq: F = returns.iter().map(|&r| r * r).sum();
    if !(sum_sq > F::zero()) {
        return Err(Error::InsufficientData("window has no price variation".into()));
    }

    // score in v = theta^2 dt: -n/(2v) + S/(2v^2) - n/8 = 0  =>  n v^2 + 4 n v - 4 S = 0
    let two = F::lit(2.0);
    let v = two * ((F::one() + sum_sq / n).sqrt() - F::one());
    let theta = (v / dt).sqrt();

    let half = F::lit(0.5);
    let log_jacobian: F = states[1..].iter().map(|s| s.ln()).sum();
    let resid: F = returns.iter().map(|&r| (r - half * v) * (r - half * v)).sum();
    let log_likelihood = -half * n * (F::TAU() * v).ln() - resid / (two * v) - log_jacobian;

    // observed information in theta at the optimum, where dl/dv = 0
    let l_vv = n / (two * v * v) - sum_sq / (v * v * v);
    let dv_dtheta = two * theta * dt;
    let info = -(l_vv * dv_dtheta * dv_dtheta);
    let std_err = info.recip().sqrt();

    Ok(CalibrationReport {
        params: FittedParams::Gbm(GbmParams {
            theta,
            std_err: Some(std_err),
            log_likelihood: Some(log_likelihood),
        }),
        iterations: 1,
        converged: true,
        initial_guess: (theta, F::zero()),
        covariance: None,
        grid_history: None,
    })
}
