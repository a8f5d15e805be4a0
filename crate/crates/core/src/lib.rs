//! Real-world pricing and hedging of long-dated bonds and annuities under
//! the stylized minimal market model.
//!
//! Everything numeric is generic over [`Real`] (`f64` or `f32`). The
//! aliases below fix the scalar to `f64`, with `…32` variants for `f32`.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod calibration;
pub mod error;
pub mod hedging;
pub mod market_data;
pub mod mmm;
pub mod pricing;
pub mod scalar;
pub mod special_fn;

pub use calibration::{fit_gbm, fit_mmm, CalibrationReport, FitOptions, FittedParams, GbmParams};
pub use error::{Error, Result};
pub use hedging::{backtest_cash_annuity, backtest_zcb, hedge_zcb, BacktestOptions, BacktestSummary, HedgeResult};
pub use market_data::{DateRange, IngestionConfig, MarketSeries, Month};
pub use mmm::MmmParams;
pub use pricing::{AnnuityKind, AnnuitySpec, Discounting, ZcbQuote};
pub use scalar::Real;
pub use special_fn::Ncx2Params;

pub type Series = MarketSeries<f64>;
pub type Mmm = MmmParams<f64>;
pub type Gbm = GbmParams<f64>;
pub type Report = CalibrationReport<f64>;
pub type Annuity = AnnuitySpec<f64>;

pub type Series32 = MarketSeries<f32>;
pub type Mmm32 = MmmParams<f32>;
pub type Gbm32 = GbmParams<f32>;
pub type Report32 = CalibrationReport<f32>;
pub type Annuity32 = AnnuitySpec<f32>;
