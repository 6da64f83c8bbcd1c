//! Quarterly series, frames of named series, and design-matrix assembly.

mod frame;
pub mod io;
mod period;
mod series;

pub use frame::{ColumnRef, DesignMatrix, Frame, INTERCEPT};
pub use period::Period;
pub use series::QuarterlySeries;
