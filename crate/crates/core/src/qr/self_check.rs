//! Optional certification of every fit as it is produced.
//!
//! Off by default. Set `QTAIL_CERTIFY_FITS=1` in the environment (the
//! workspace's cargo config does this for tests) or call [`enable`]. While
//! on, each fit is passed to [`check_optimality`] and a violation above
//! [`OPTIMALITY_TOLERANCE`] panics.

use std::sync::atomic::{AtomicBool, AtomicU64, Ordering};
use std::sync::OnceLock;

use nalgebra::DMatrix;

use super::certificate::{check_optimality, OPTIMALITY_TOLERANCE};
use super::QrFit;

pub const ENV_VAR: &str = "QTAIL_CERTIFY_FITS";

static FORCED: AtomicBool = AtomicBool::new(false);
static FROM_ENV: OnceLock<bool> = OnceLock::new();
static FITS: AtomicU64 = AtomicU64::new(0);
// Bit pattern of the largest violation seen; non-negative floats order like
// their bits.
static WORST: AtomicU64 = AtomicU64::new(0);

pub fn enable() {
    FORCED.store(true, Ordering::Relaxed);
}

pub fn enabled() -> bool {
    FORCED.load(Ordering::Relaxed)
        || *FROM_ENV.get_or_init(|| std::env::var(ENV_VAR).is_ok_and(|v| v != "0" && !v.is_empty()))
}

/// Fits certified so far in this process and the largest violation.
pub fn stats() -> (u64, f64) {
    (
        FITS.load(Ordering::Relaxed),
        f64::from_bits(WORST.load(Ordering::Relaxed)),
    )
}

pub(crate) fn record(x: &DMatrix<f64>, y: &[f64], fit: &QrFit) {
    let cert = check_optimality(x, y, fit);
    FITS.fetch_add(1, Ordering::Relaxed);
    let v = if cert.violation.is_nan() { f64::INFINITY } else { cert.violation.max(0.0) };
    WORST.fetch_max(v.to_bits(), Ordering::Relaxed);
    assert!(
        cert.violation <= OPTIMALITY_TOLERANCE,
        "fit at tau = {} ({} x {}) failed certification: violation {:e}",
        fit.tau,
        fit.n,
        fit.p,
        cert.violation
    );
}
