//! Special functions behind the closed-form prices: `ln I1`, the
//! non-central chi-squared distribution for even degrees of freedom, and
//! the inverse moments of a four-degree non-central chi-squared variable.

use crate::error::{Error, Result};
use crate::scalar::{ln_factorial, Real};

/// Power series below, large-argument expansion above.
const BESSEL_SWITCH: f64 = 20.0;

/// Poisson mixing mass allowed to be dropped from either tail.
const MIXTURE_TAIL: f64 = 1e-14;

/// Natural log of the modified Bessel function of the first kind, order one.
pub fn log_bessel_i1<F: Real>(z: F) -> Result<F> {
    if !(z > F::zero()) || z.is_infinite() {
        return Err(Error::DomainError(format!("ln I1 needs 0 < z < inf, got {z}")));
    }
    let eps = F::epsilon();
    if z < F::lit(BESSEL_SWITCH) {
        // I1(z) = (z/2) * sum_k q^k / (k! (k+1)!),  q = z^2/4
        let q = z * z * F::lit(0.25);
        let mut term = F::one();
        let mut rest = F::zero();
        let mut k = F::zero();
        loop {
            let k1 = k + F::one();
            term = term * q / (k1 * (k1 + F::one()));
            rest = rest + term;
            k = k1;
            if term <= eps * F::lit(0.25) * (F::one() + rest) {
                break;
            }
        }
        Ok((z * F::lit(0.5)).ln() + rest.ln_1p())
    } else {
        // I1(z) ~ e^z / sqrt(2 pi z) * sum_k (-1)^k a_k / z^k
        let mut term = F::one();
        let mut rest = F::zero();
        let mut k = 1u32;
        loop {
            let odd = F::from_u32(2 * k - 1).unwrap();
            let next = -term * (F::lit(4.0) - odd * odd) / (F::from_u32(8 * k).unwrap() * z);
            if next.abs() >= term.abs() {
                break;
            }
            term = next;
            rest = rest + term;
            if term.abs() <= eps * F::lit(0.25) {
                break;
            }
            k += 1;
        }
        Ok(z - F::lit(0.5) * (F::TAU() * z).ln() + rest.ln_1p())
    }
}

/// Degrees of freedom and non-centrality of a non-central chi-squared law.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Ncx2Params<F> {
    dof: u32,
    noncentrality: F,
}

impl<F: Real> Ncx2Params<F> {
    /// `dof` must be even (zero allowed), `noncentrality` strictly positive.
    pub fn new(dof: u32, noncentrality: F) -> Result<Self> {
        if !dof.is_multiple_of(2) {
            return Err(Error::DomainError(format!("odd degrees of freedom {dof}")));
        }
        if !(noncentrality > F::zero()) || !noncentrality.is_finite() {
            return Err(Error::DomainError(format!(
                "non-centrality must be positive and finite, got {noncentrality}"
            )));
        }
        Ok(Ncx2Params { dof, noncentrality })
    }

    pub fn dof(&self) -> u32 {
        self.dof
    }

    pub fn noncentrality(&self) -> F {
        self.noncentrality
    }
}

/// Walks the family of Erlang laws `Gamma(a, 1)` at a fixed point `y`,
/// tracking the lower regularized gamma `P(a, y)` and `pmf(a - 1; y)`.
struct ErlangLadder<F> {
    a: u64,
    y: F,
    lower: F,
    pmf_prev: F,
}

impl<F: Real> ErlangLadder<F> {
    fn new(a: u64, y: F) -> Self {
        if a == 0 {
            return ErlangLadder {
                a,
                y,
                lower: F::one(),
                pmf_prev: F::zero(),
            };
        }
        let pmf_prev = poisson_ln_pmf(a - 1, y).exp();
        ErlangLadder {
            a,
            y,
            lower: gamma_p_int(a, y),
            pmf_prev,
        }
    }

    fn up(&mut self) {
        let pmf_a = if self.a == 0 {
            (-self.y).exp()
        } else {
            self.pmf_prev * self.y / F::from_u64(self.a).unwrap()
        };
        self.lower = (self.lower - pmf_a).max(F::zero());
        self.pmf_prev = pmf_a;
        self.a += 1;
    }

    fn down(&mut self) {
        debug_assert!(self.a > 0);
        self.lower = (self.lower + self.pmf_prev).min(F::one());
        self.a -= 1;
        self.pmf_prev = if self.a == 0 {
            F::zero()
        } else {
            self.pmf_prev * F::from_u64(self.a).unwrap() / self.y
        };
    }

    /// Central chi-squared density with `2a` degrees of freedom at `2y`.
    fn density(&self) -> F {
        self.pmf_prev * F::lit(0.5)
    }
}

fn poisson_ln_pmf<F: Real>(k: u64, mean: F) -> F {
    if k == 0 {
        return -mean;
    }
    -mean + F::from_u64(k).unwrap() * mean.ln() - ln_factorial::<F>(k)
}

/// Regularized lower incomplete gamma `P(a, y)` for integer `a >= 1`, `y >= 0`:
/// the central chi-squared CDF with `2a` degrees of freedom at `2y`.
fn gamma_p_int<F: Real>(a: u64, y: F) -> F {
    if a == 0 {
        return F::one();
    }
    if y <= F::zero() {
        return F::zero();
    }
    let eps = F::epsilon();
    let af = F::from_u64(a).unwrap();
    if y < af + F::one() {
        // e^-y y^a / a! * sum_k y^k / ((a+1)...(a+k))
        let lead = poisson_ln_pmf(a, y).exp();
        let mut term = F::one();
        let mut sum = F::one();
        let mut k = F::one();
        while term > eps * sum {
            term = term * y / (af + k);
            sum = sum + term;
            k = k + F::one();
        }
        (lead * sum).min(F::one())
    } else {
        // Q = e^-y sum_{i<a} y^i / i!, summed downward from i = a-1
        let lead = poisson_ln_pmf(a - 1, y).exp();
        let mut term = F::one();
        let mut sum = F::one();
        let mut i = a - 1;
        while i > 0 && term > eps * sum {
            term = term * F::from_u64(i).unwrap() / y;
            sum = sum + term;
            i -= 1;
        }
        (F::one() - lead * sum).max(F::zero())
    }
}

/// Sums `weight_j * component_j` over the Poisson(`mean`) mixing law,
/// starting at the mode and expanding both ways until the dropped mass in
/// each tail is below [`MIXTURE_TAIL`]. With `relative` set, expansion also
/// continues until the terms themselves are negligible against the total
/// (needed for densities, whose components are unbounded in `j`).
fn poisson_mixture<F: Real>(
    mean: F,
    first_shape: u64,
    y: F,
    relative: bool,
    component: impl Fn(&ErlangLadder<F>) -> F,
) -> F {
    let tol = F::lit(MIXTURE_TAIL);
    let j0 = mean.floor().to_u64().unwrap_or(0);
    let w0 = poisson_ln_pmf(j0, mean).exp();

    let start = ErlangLadder::new(first_shape + j0, y);
    let mut total = w0 * component(&start);

    // upward, j > j0
    let mut ladder = start;
    let mut w = w0;
    let mut j = j0;
    let mut last = total;
    loop {
        let next_w = w * mean / F::from_u64(j + 1).unwrap();
        let ratio = mean / F::from_u64(j + 2).unwrap();
        if ratio < F::one() && next_w / (F::one() - ratio) < tol && (!relative || negligible(last, total)) {
            break;
        }
        ladder.up();
        j += 1;
        w = next_w;
        last = w * component(&ladder);
        total = total + last;
    }

    // downward, j < j0
    let mut ladder = ErlangLadder::new(first_shape + j0, y);
    let mut w = w0;
    let mut j = j0;
    let mut last = w0 * component(&ladder);
    while j > 0 {
        let next_w = w * F::from_u64(j).unwrap() / mean;
        let ratio = F::from_u64(j - 1).unwrap() / mean;
        if ratio < F::one() && next_w / (F::one() - ratio) < tol && (!relative || negligible(last, total)) {
            break;
        }
        ladder.down();
        j -= 1;
        w = next_w;
        last = w * component(&ladder);
        total = total + last;
    }
    total
}

fn negligible<F: Real>(term: F, total: F) -> bool {
    term <= F::epsilon() * F::lit(1e-3) * total
}

/// Non-central chi-squared CDF for even degrees of freedom.
///
/// For `dof = 0` the zeroth mixture component is a point mass at the
/// origin, so the CDF at `x = 0` is `exp(-lambda/2)`.
pub fn ncx2_cdf<F: Real>(params: Ncx2Params<F>, x: F) -> Result<F> {
    if !(x >= F::zero()) {
        return Err(Error::DomainError(format!("ncx2 cdf needs x >= 0, got {x}")));
    }
    let mean = params.noncentrality * F::lit(0.5);
    if x == F::zero() {
        return Ok(if params.dof == 0 { (-mean).exp() } else { F::zero() });
    }
    if x.is_infinite() {
        return Ok(F::one());
    }
    let y = x * F::lit(0.5);
    let v = poisson_mixture(mean, u64::from(params.dof / 2), y, false, |l| l.lower);
    Ok(v.max(F::zero()).min(F::one()))
}

/// Non-central chi-squared density (continuous part) via its Poisson
/// mixture of central chi-squared densities.
pub fn ncx2_pdf<F: Real>(params: Ncx2Params<F>, x: F) -> Result<F> {
    if !(x > F::zero()) || x.is_infinite() {
        return Err(Error::DomainError(format!("ncx2 pdf needs 0 < x < inf, got {x}")));
    }
    let mean = params.noncentrality * F::lit(0.5);
    Ok(poisson_mixture(
        mean,
        u64::from(params.dof / 2),
        x * F::lit(0.5),
        true,
        |l| l.density(),
    ))
}

fn require_four<F: Real>(params: &Ncx2Params<F>) -> Result<()> {
    if params.dof != 4 {
        return Err(Error::UnsupportedDof(params.dof));
    }
    Ok(())
}

/// `E(lambda / U) = 1 - exp(-lambda/2)` for `U ~ ncx2(4, lambda)`.
pub fn inv_moment<F: Real>(params: Ncx2Params<F>) -> Result<F> {
    require_four(&params)?;
    Ok(-(-params.noncentrality * F::lit(0.5)).exp_m1())
}

/// `E(lambda / U; U < x) = ncx2_cdf(0, lambda; x) - exp(-lambda/2)`.
pub fn inv_moment_below<F: Real>(params: Ncx2Params<F>, x: F) -> Result<F> {
    require_four(&params)?;
    let zero = Ncx2Params::new(0, params.noncentrality)?;
    let v = ncx2_cdf(zero, x)? - (-params.noncentrality * F::lit(0.5)).exp();
    Ok(v.max(F::zero()))
}

/// `E(lambda / U; U >= x) = 1 - ncx2_cdf(0, lambda; x)`.
pub fn inv_moment_above<F: Real>(params: Ncx2Params<F>, x: F) -> Result<F> {
    require_four(&params)?;
    let zero = Ncx2Params::new(0, params.noncentrality)?;
    Ok((F::one() - ncx2_cdf(zero, x)?).max(F::zero()))
}
