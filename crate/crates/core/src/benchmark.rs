//! Macrocell-only market: the price that exactly sells out the capacity.

use serde::{Deserialize, Serialize};

use crate::error::{domain, Result};

const BRACKET_LO: f64 = 1e-12;
const WIDTH_TOL: f64 = 1e-12;
const RESIDUAL_TOL: f64 = 1e-10;
const MAX_ITER: usize = 400;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BenchmarkResult {
    pub capacity: f64,
    pub price: f64,
    pub profit: f64,
    /// Fraction of users buying any bandwidth, `1 - price`.
    pub served_fraction: f64,
}

/// `1/p - 1 + ln p - B`: total demand at price `p` minus capacity.
/// Strictly decreasing on `(0, 1]`.
pub fn clearing_residual(price: f64, capacity: f64) -> f64 {
    1.0 / price - 1.0 + price.ln() - capacity
}

/// Finds the unique price in `(0, 1]` whose total demand equals `capacity`.
pub fn solve_benchmark(capacity: f64) -> Result<BenchmarkResult> {
    if !capacity.is_finite() || capacity < 0.0 {
        return domain(format!("B must be finite and nonnegative, got {capacity}"));
    }
    let price = if capacity == 0.0 {
        1.0
    } else {
        bisect_price(capacity)
    };
    Ok(BenchmarkResult {
        capacity,
        price,
        profit: price * capacity,
        served_fraction: 1.0 - price,
    })
}

fn bisect_price(capacity: f64) -> f64 {
    // residual(lo) > 0 > residual(hi) = -B.
    let (mut lo, mut hi) = (BRACKET_LO, 1.0);
    for _ in 0..MAX_ITER {
        let mid = 0.5 * (lo + hi);
        let r = clearing_residual(mid, capacity);
        if hi - lo < WIDTH_TOL && r.abs() < RESIDUAL_TOL {
            return mid;
        }
        if mid <= lo || mid >= hi {
            break;
        }
        if r > 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    // Interval exhausted at machine precision; keep the better endpoint.
    if clearing_residual(lo, capacity).abs() <= clearing_residual(hi, capacity).abs() {
        lo
    } else {
        hi
    }
}
