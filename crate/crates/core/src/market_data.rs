//! Monthly market observations: total-return index, short rate, the
//! savings account compounded from the short rate and the discounted index.

use std::fmt;
use std::ops::Range;
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Error, Result};
use crate::scalar::Real;

/// Year fraction of one month on the monthly grid.
pub const MONTH_FRACTION: f64 = 1.0 / 12.0;

/// A calendar month, stored as months since January of year 0.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Month(i32);

impl Month {
    pub fn new(year: i32, month: u32) -> Result<Self> {
        if !(1..=12).contains(&month) {
            return Err(Error::DomainError(format!("month {month} not in 1..=12")));
        }
        Ok(Month(year * 12 + month as i32 - 1))
    }

    pub fn year(self) -> i32 {
        self.0.div_euclid(12)
    }

    pub fn month(self) -> u32 {
        self.0.rem_euclid(12) as u32 + 1
    }

    /// Month `n` months later (earlier for negative `n`).
    pub fn offset(self, n: i32) -> Month {
        Month(self.0 + n)
    }

    /// Signed number of months from `earlier` to `self`.
    pub fn months_since(self, earlier: Month) -> i32 {
        self.0 - earlier.0
    }

    /// Year fraction from `origin` to `self` on the 1/12 grid.
    pub fn years_since<F: Real>(self, origin: Month) -> F {
        F::from_i32(self.months_since(origin)).unwrap() / F::lit(12.0)
    }
}

impl fmt::Display for Month {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:04}-{:02}", self.year(), self.month())
    }
}

impl FromStr for Month {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let bad = || Error::DomainError(format!("expected YYYY-MM, got {s:?}"));
        let (y, m) = s.trim().split_once('-').ok_or_else(bad)?;
        if y.len() != 4 || m.len() != 2 {
            return Err(bad());
        }
        let year = y.parse::<i32>().map_err(|_| bad())?;
        let month = m.parse::<u32>().map_err(|_| bad())?;
        Month::new(year, month)
    }
}

impl Serialize for Month {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for Month {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

/// Inclusive month range.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct DateRange {
    pub from: Month,
    pub to: Month,
}

impl DateRange {
    pub fn new(from: Month, to: Month) -> Result<Self> {
        if from > to {
            return Err(Error::InvalidWindow(format!("{from} is after {to}")));
        }
        Ok(DateRange { from, to })
    }

    /// Number of months in the range, both ends included.
    pub fn len(&self) -> usize {
        (self.to.months_since(self.from) + 1) as usize
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn contains(&self, m: Month) -> bool {
        self.from <= m && m <= self.to
    }
}

#[derive(Debug, Clone, Copy)]
pub struct IngestionConfig<F> {
    /// Savings account value at the first series date.
    pub normalization: F,
    pub delimiter: u8,
}

impl<F: Real> Default for IngestionConfig<F> {
    fn default() -> Self {
        IngestionConfig {
            normalization: F::one(),
            delimiter: b',',
        }
    }
}

/// Aligned monthly observations. Immutable once built.
#[derive(Debug, Clone, PartialEq)]
pub struct MarketSeries<F> {
    start: Month,
    index_level: Vec<F>,
    short_rate: Vec<F>,
    savings_account: Vec<F>,
    discounted_index: Vec<F>,
}

impl<F: Real> MarketSeries<F> {
    /// Builds the series from consecutive monthly observations starting at
    /// `start`, compounding the savings account forward from `normalization`.
    pub fn from_observations(start: Month, index_level: Vec<F>, short_rate: Vec<F>, normalization: F) -> Result<Self> {
        if index_level.len() != short_rate.len() {
            return Err(Error::MalformedSeries(format!(
                "{} index levels but {} short rates",
                index_level.len(),
                short_rate.len()
            )));
        }
        if index_level.is_empty() {
            return Err(Error::MalformedSeries("no observations".into()));
        }
        if !(normalization > F::zero() && normalization.is_finite()) {
            return Err(Error::DomainError("normalization must be positive".into()));
        }
        for (i, (&s, &r)) in index_level.iter().zip(&short_rate).enumerate() {
            if !(s > F::zero() && s.is_finite()) {
                return Err(Error::InvalidDatum {
                    row: i,
                    reason: format!("index level {s} is not strictly positive"),
                });
            }
            if !r.is_finite() {
                return Err(Error::InvalidDatum {
                    row: i,
                    reason: format!("short rate {r} is not finite"),
                });
            }
        }
        let dt = F::lit(MONTH_FRACTION);
        let mut savings_account = Vec::with_capacity(index_level.len());
        let mut s0 = normalization;
        savings_account.push(s0);
        for &r in &short_rate[..short_rate.len() - 1] {
            s0 = s0 * (r * dt).exp();
            savings_account.push(s0);
        }
        let discounted_index = index_level.iter().zip(&savings_account).map(|(&s, &b)| s / b).collect();
        Ok(MarketSeries {
            start,
            index_level,
            short_rate,
            savings_account,
            discounted_index,
        })
    }

    /// Reads a headered `date,index,short_rate` file.
    pub fn load(path: impl AsRef<Path>, config: &IngestionConfig<F>) -> Result<Self> {
        let path = path.as_ref();
        let file = std::fs::File::open(path)?;
        Self::read(file, config)
    }

    pub fn read<R: std::io::Read>(reader: R, config: &IngestionConfig<F>) -> Result<Self> {
        let mut rdr = csv::ReaderBuilder::new()
            .delimiter(config.delimiter)
            .has_headers(true)
            .trim(csv::Trim::All)
            .from_reader(reader);

        let headers = rdr
            .headers()
            .map_err(|e| Error::MalformedSeries(e.to_string()))?
            .clone();
        let expected = ["date", "index", "short_rate"];
        let got: Vec<String> = headers.iter().map(|h| h.to_ascii_lowercase()).collect();
        if got.len() != 3 || got.iter().zip(expected).any(|(g, e)| g != e) {
            return Err(Error::MalformedSeries(format!(
                "expected header `date,index,short_rate`, found `{}`",
                headers.iter().collect::<Vec<_>>().join(",")
            )));
        }

        let mut start = None;
        let mut prev: Option<Month> = None;
        let mut index_level = Vec::new();
        let mut short_rate = Vec::new();
        for (i, rec) in rdr.records().enumerate() {
            // header is line 1
            let row = i + 2;
            let rec = rec.map_err(|e| Error::MalformedSeries(format!("row {row}: {e}")))?;
            if rec.len() != 3 {
                return Err(Error::MalformedSeries(format!("row {row}: expected 3 fields")));
            }
            let month: Month = rec[0]
                .parse()
                .map_err(|_| Error::MalformedSeries(format!("row {row}: bad date {:?}", &rec[0])))?;
            if let Some(p) = prev {
                match month.months_since(p) {
                    1 => {}
                    0 => return Err(Error::MalformedSeries(format!("row {row}: duplicate month {month}"))),
                    d if d > 1 => {
                        return Err(Error::MalformedSeries(format!(
                            "row {row}: {} missing month(s) between {p} and {month}",
                            d - 1
                        )))
                    }
                    _ => {
                        return Err(Error::MalformedSeries(format!(
                            "row {row}: {month} out of order after {p}"
                        )))
                    }
                }
            } else {
                start = Some(month);
            }
            prev = Some(month);

            let parse = |field: &str, what: &str| -> Result<F> {
                field
                    .parse::<f64>()
                    .ok()
                    .and_then(F::from_f64)
                    .ok_or_else(|| Error::InvalidDatum {
                        row,
                        reason: format!("{what} {field:?} is not a number"),
                    })
            };
            let s = parse(&rec[1], "index")?;
            if !(s > F::zero() && s.is_finite()) {
                return Err(Error::InvalidDatum {
                    row,
                    reason: format!("index level {s} is not strictly positive"),
                });
            }
            index_level.push(s);
            short_rate.push(parse(&rec[2], "short_rate")?);
        }
        let start = start.ok_or_else(|| Error::MalformedSeries("file has no data rows".into()))?;
        Self::from_observations(start, index_level, short_rate, config.normalization)
    }

    pub fn len(&self) -> usize {
        self.index_level.len()
    }

    pub fn is_empty(&self) -> bool {
        self.index_level.is_empty()
    }

    pub fn first_month(&self) -> Month {
        self.start
    }

    pub fn last_month(&self) -> Month {
        self.start.offset(self.len() as i32 - 1)
    }

    pub fn range(&self) -> DateRange {
        DateRange {
            from: self.first_month(),
            to: self.last_month(),
        }
    }

    pub fn month_at(&self, i: usize) -> Month {
        self.start.offset(i as i32)
    }

    pub fn dates(&self) -> impl Iterator<Item = Month> + '_ {
        (0..self.len()).map(|i| self.month_at(i))
    }

    pub fn index_level(&self) -> &[F] {
        &self.index_level
    }

    pub fn short_rate(&self) -> &[F] {
        &self.short_rate
    }

    pub fn savings_account(&self) -> &[F] {
        &self.savings_account
    }

    pub fn discounted_index(&self) -> &[F] {
        &self.discounted_index
    }

    /// Position of `m` in the series.
    pub fn position(&self, m: Month) -> Result<usize> {
        let d = m.months_since(self.start);
        if d < 0 || d as usize >= self.len() {
            return Err(Error::OutOfRange(m, self.first_month(), self.last_month()));
        }
        Ok(d as usize)
    }

    /// Index positions covered by `window`, which must lie inside the series.
    pub fn window(&self, window: DateRange) -> Result<Range<usize>> {
        let a = self.position(window.from)?;
        let b = self.position(window.to)?;
        Ok(a..b + 1)
    }

    /// The savings bond `D(t,T) = S0_t / S0_T` along the realized rate path.
    pub fn savings_bond(&self, t: Month, maturity: Month) -> Result<F> {
        if t > maturity {
            return Err(Error::InvalidWindow(format!("{t} is after {maturity}")));
        }
        let i = self.position(t)?;
        let j = self.position(maturity)?;
        Ok(self.savings_account[i] / self.savings_account[j])
    }

    /// Recompounds the savings account from the stored short rates.
    pub fn rebuild(&self) -> Result<Self> {
        Self::from_observations(
            self.start,
            self.index_level.clone(),
            self.short_rate.clone(),
            self.savings_account[0],
        )
    }
}
