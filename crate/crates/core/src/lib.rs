//! Tail-quantile analysis of quarterly inflation.
//!
//! The crate covers the whole study workflow:
//!
//! - [`timeseries`]: quarterly series, lagging, alignment, CSV ingestion
//! - [`hp`]: Hodrick–Prescott trend and output gap
//! - [`dependence`]: Pearson, Spearman and Kendall tau-b lag tables
//! - [`qr`]: exact pinball-loss quantile regression with an optimality check
//! - [`inference`]: Powell kernel sandwich covariance and coefficient tables
//! - [`selection`]: best-subset search by quantile AIC
//! - [`dgp`]: synthetic data generators with known quantiles
//! - [`pipeline`]: the batch study and its report files

// `!(x > 0.0)` is used on purpose so that NaN fails validation.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod dependence;
pub mod dgp;
pub mod error;
pub mod hp;
pub mod inference;
pub mod pipeline;
pub mod qr;
pub mod selection;
pub mod timeseries;

pub use error::{Error, ErrorKind, Result};
pub use qr::{fit, pinball, QrFit, QuantileLevel};
pub use timeseries::{ColumnRef, DesignMatrix, Frame, Period, QuarterlySeries};
