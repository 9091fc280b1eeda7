//! Macrocell operator's Stage-I problem and equilibrium assembly.
//!
//! The macrocell operator chooses its price `p_M` and the band `B_F` it
//! offers for leasing, anticipating the femtocell best response. It must keep
//! enough macrocell band to serve every user who prefers the macrocell. The
//! objective is non-convex in `(p_M, B_F)` and has separate local optima for
//! small and large leases, so the search is a coarse exhaustive grid followed
//! by shrinking local grids around the best few basins.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::benchmark::solve_benchmark;
use crate::error::{domain, MarketError, Result};
use crate::model::{
    aggregate_macro_demand, Equilibrium, MarketParams, Regime, StageOneDecision, StageTwoDecision,
    ABS_TOL,
};
use crate::stage2::{femto_best_response, FemtoBestResponse};

/// Slack allowed on the macrocell capacity constraint.
const CONSTRAINT_SLACK: f64 = ABS_TOL;

/// False for NaN as well as for nonpositive values.
fn is_positive(x: f64) -> bool {
    x > 0.0
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StageOneSolverConfig {
    pub grid_n_price: usize,
    pub grid_n_band: usize,
    pub refine_rounds: usize,
    pub refine_shrink: f64,
    /// Leases below this band count as no lease.
    pub feasibility_tol: f64,
    /// Largest relative profit gain tolerated in the final refinement round.
    pub convergence_tol: f64,
    /// Number of coarse-grid basins refined independently.
    pub restarts: usize,
}

impl Default for StageOneSolverConfig {
    fn default() -> Self {
        Self {
            grid_n_price: 200,
            grid_n_band: 200,
            refine_rounds: 4,
            refine_shrink: 0.2,
            feasibility_tol: 1e-4,
            convergence_tol: 1e-4,
            restarts: 6,
        }
    }
}

impl StageOneSolverConfig {
    pub fn validate(&self) -> Result<()> {
        if self.grid_n_price < 100 || self.grid_n_band < 100 {
            return domain(format!(
                "grid sizes must be at least 100, got {} x {}",
                self.grid_n_price, self.grid_n_band
            ));
        }
        if self.refine_rounds < 2 {
            return domain(format!("refine_rounds must be at least 2, got {}", self.refine_rounds));
        }
        if !(self.refine_shrink > 0.0 && self.refine_shrink < 1.0) {
            return domain(format!("refine_shrink must lie in (0, 1), got {}", self.refine_shrink));
        }
        if !is_positive(self.feasibility_tol) || !is_positive(self.convergence_tol) {
            return domain("tolerances must be positive");
        }
        if self.restarts == 0 {
            return domain("restarts must be at least 1");
        }
        Ok(())
    }
}

/// Macrocell demand of users who end up on the macrocell: every uncovered
/// user above `p_M`, and covered users above `theta_th`.
pub fn served_macro_demand(p_m: f64, theta_th: f64, eta: f64) -> Result<f64> {
    let covered = aggregate_macro_demand(p_m, theta_th)?;
    if eta < 1.0 {
        Ok((1.0 - eta) * aggregate_macro_demand(p_m, p_m)? + eta * covered)
    } else {
        Ok(covered)
    }
}

/// Everything Stage I needs to know about one `(p_M, B_F)` decision.
#[derive(Debug, Clone, Copy)]
struct Outcome {
    response: FemtoBestResponse,
    profit: f64,
}

fn outcome(p_m: f64, band: f64, params: &MarketParams) -> Result<Outcome> {
    if !(p_m.is_finite() && p_m > 0.0 && p_m <= 1.0) {
        return domain(format!("p_M must lie in (0, 1], got {p_m}"));
    }
    let capacity = params.capacity();
    if !(band.is_finite() && band >= 0.0 && band <= capacity) {
        return domain(format!("B_F must lie in [0, {capacity}], got {band}"));
    }
    let response = femto_best_response(p_m, band, params.cost(), params.coverage())?;
    let theta_th = p_m / response.decision.femto_price;
    let macro_demand = served_macro_demand(p_m, theta_th, params.coverage())?;
    if macro_demand > capacity - band + CONSTRAINT_SLACK {
        return Err(MarketError::Infeasible(format!(
            "macrocell demand {macro_demand} exceeds macrocell band {}",
            capacity - band
        )));
    }
    Ok(Outcome {
        response,
        profit: p_m * (response.decision.leased_band + macro_demand),
    })
}

/// Macrocell profit `p_M B_R* + p_M D_macro` of a feasible Stage-I decision.
pub fn macro_profit(p_m: f64, band: f64, params: &MarketParams) -> Result<f64> {
    outcome(p_m, band, params).map(|o| o.profit)
}

/// Threshold the macrocell operator would choose to maximize total demand,
/// `1 / (1/p_M - 1/p_F + 1)`.
pub fn preferred_partition(p_m: f64, p_f: f64) -> Result<f64> {
    if !(p_m.is_finite() && p_f.is_finite() && p_m > 0.0 && p_m <= p_f && p_f <= 1.0) {
        return domain(format!("need 0 < p_M <= p_F <= 1, got p_M = {p_m}, p_F = {p_f}"));
    }
    Ok(1.0 / (1.0 / p_m - 1.0 / p_f + 1.0))
}

#[derive(Debug, Clone, Copy, PartialEq)]
struct Point {
    price: f64,
    band: f64,
    profit: f64,
}

impl Point {
    /// Higher profit wins; exact ties go to the smaller band, then price.
    fn beats(&self, other: &Point) -> bool {
        if self.profit != other.profit {
            return self.profit > other.profit;
        }
        (self.band, self.price) < (other.band, other.price)
    }
}

fn evaluate(price: f64, band: f64, params: &MarketParams) -> Option<Point> {
    outcome(price, band, params).ok().map(|o| Point {
        price,
        band,
        profit: o.profit,
    })
}

fn best_of(points: impl IntoIterator<Item = Option<Point>>) -> Option<Point> {
    points.into_iter().flatten().fold(None, |acc, p| match acc {
        Some(a) if !p.beats(&a) => Some(a),
        _ => Some(p),
    })
}

fn linspace(lo: f64, hi: f64, n: usize) -> impl Iterator<Item = f64> {
    let step = if n > 1 { (hi - lo) / (n - 1) as f64 } else { 0.0 };
    (0..n).map(move |i| if i + 1 == n { hi } else { lo + step * i as f64 })
}

/// Best feasible point on a `price x band` grid over the given boxes.
fn scan_box(
    params: &MarketParams,
    price_range: (f64, f64),
    band_range: (f64, f64),
    n_price: usize,
    n_band: usize,
) -> Option<Point> {
    let prices: Vec<f64> = linspace(price_range.0, price_range.1, n_price).collect();
    let bands: Vec<f64> = linspace(band_range.0, band_range.1, n_band).collect();
    let rows: Vec<Option<Point>> = bands
        .par_iter()
        .map(|&band| best_of(prices.iter().map(|&p| evaluate(p, band, params))))
        .collect();
    best_of(rows)
}

/// Raises the price of `point` onto the capacity constraint when a slightly
/// lower price is infeasible; profit is increasing up to that kink.
fn polish(point: Point, step: f64, params: &MarketParams) -> Point {
    let lo_price = point.price - step;
    if lo_price <= 0.0 || evaluate(lo_price, point.band, params).is_some() {
        return point;
    }
    let (mut infeasible, mut feasible) = (lo_price, point.price);
    for _ in 0..80 {
        let mid = 0.5 * (infeasible + feasible);
        if mid <= infeasible || mid >= feasible {
            break;
        }
        if evaluate(mid, point.band, params).is_some() {
            feasible = mid;
        } else {
            infeasible = mid;
        }
    }
    match evaluate(feasible, point.band, params) {
        Some(p) if p.beats(&point) => p,
        _ => point,
    }
}

/// Returns the refined point and the relative gain of the last round.
fn refine(start: Point, params: &MarketParams, cfg: &StageOneSolverConfig, cells: (f64, f64)) -> (Point, f64) {
    let price_max = params.max_macro_price();
    let capacity = params.capacity();
    let (mut half_price, mut half_band) = (2.0 * cells.0, 2.0 * cells.1);
    let mut best = start;
    let mut last_gain = 0.0;
    for _ in 0..cfg.refine_rounds {
        let price_range = (
            (best.price - half_price).max(half_price * 1e-3),
            (best.price + half_price).min(price_max),
        );
        let band_range = ((best.band - half_band).max(0.0), (best.band + half_band).min(capacity));
        let before = best.profit;
        if let Some(p) = scan_box(params, price_range, band_range, cfg.grid_n_price, cfg.grid_n_band) {
            if p.beats(&best) {
                best = p;
            }
        }
        last_gain = (best.profit - before) / before.abs().max(f64::MIN_POSITIVE);
        half_price *= cfg.refine_shrink;
        half_band *= cfg.refine_shrink;
    }
    let step = 2.0 * half_price / cfg.refine_shrink / (cfg.grid_n_price - 1) as f64;
    (polish(best, step, params), last_gain)
}

/// Picks up to `k` coarse-grid rows whose best profit is a local maximum
/// along the band axis, best first, plus up to `k` more kept at least
/// `spacing` rows apart so that one jagged ridge cannot take every slot.
fn basin_starts(rows: &[Option<Point>], k: usize, spacing: usize) -> Vec<Point> {
    let value = |i: usize| rows[i].map_or(f64::NEG_INFINITY, |p| p.profit);
    let mut candidates: Vec<(usize, Point)> = (0..rows.len())
        .filter_map(|i| {
            let here = value(i);
            let left = if i == 0 { f64::NEG_INFINITY } else { value(i - 1) };
            let right = if i + 1 == rows.len() { f64::NEG_INFINITY } else { value(i + 1) };
            (here >= left && here >= right).then(|| rows[i].map(|p| (i, p))).flatten()
        })
        .collect();
    candidates.sort_by(|a, b| {
        if a.1.beats(&b.1) {
            std::cmp::Ordering::Less
        } else {
            std::cmp::Ordering::Greater
        }
    });
    let mut spaced: Vec<(usize, Point)> = Vec::with_capacity(k);
    for &(i, p) in &candidates {
        if spaced.len() == k {
            break;
        }
        if spaced.iter().all(|&(j, _)| i.abs_diff(j) >= spacing) {
            spaced.push((i, p));
        }
    }
    let mut starts: Vec<(usize, Point)> = candidates.into_iter().take(k).collect();
    for s in spaced {
        if !starts.iter().any(|&(j, _)| j == s.0) {
            starts.push(s);
        }
    }
    starts.into_iter().map(|(_, p)| p).collect()
}

fn macro_only(params: &MarketParams) -> Result<Equilibrium> {
    let bench = solve_benchmark(params.capacity())?;
    let capacity = params.capacity();
    Ok(Equilibrium {
        params: *params,
        stage1: StageOneDecision::new(bench.price, 0.0, capacity),
        stage2: StageTwoDecision {
            femto_price: 1.0,
            leased_band: 0.0,
        },
        theta_th: bench.price,
        theta_pref_macro: bench.price,
        profit_macro: bench.profit,
        profit_femto: 0.0,
        regime: Regime::MacroOnly,
    })
}

fn assemble(point: Point, params: &MarketParams) -> Result<Equilibrium> {
    let o = outcome(point.price, point.band, params)?;
    let femto_price = o.response.decision.femto_price;
    Ok(Equilibrium {
        params: *params,
        stage1: StageOneDecision::new(point.price, point.band, params.capacity()),
        stage2: o.response.decision,
        theta_th: point.price / femto_price,
        theta_pref_macro: preferred_partition(point.price, femto_price)?,
        profit_macro: o.profit,
        profit_femto: o.response.profit,
        regime: Regime::DualService,
    })
}

/// Solves the full three-stage game for `params`.
pub fn solve_stage1(params: &MarketParams, cfg: &StageOneSolverConfig) -> Result<Equilibrium> {
    cfg.validate()?;
    let capacity = params.capacity();
    if capacity == 0.0 {
        return macro_only(params);
    }

    let price_max = params.max_macro_price();
    let cells = (price_max / cfg.grid_n_price as f64, capacity / cfg.grid_n_band as f64);
    let prices: Vec<f64> = (1..=cfg.grid_n_price).map(|i| price_max * i as f64 / cfg.grid_n_price as f64).collect();
    let rows: Vec<Option<Point>> = (1..=cfg.grid_n_band)
        .into_par_iter()
        .map(|j| {
            let band = capacity * j as f64 / cfg.grid_n_band as f64;
            best_of(prices.iter().map(|&p| evaluate(p, band, params))).map(|p| polish(p, cells.0, params))
        })
        .collect();

    let bench = solve_benchmark(capacity)?;
    let mut best = Point {
        price: bench.price,
        band: 0.0,
        profit: macro_profit(bench.price, 0.0, params)?,
    };
    let mut worst_gain: f64 = 0.0;
    let spacing = (cfg.grid_n_band / 20).max(1);
    for start in basin_starts(&rows, cfg.restarts, spacing) {
        let (point, gain) = refine(start, params, cfg, cells);
        if point.beats(&best) {
            best = point;
            worst_gain = gain;
        }
    }
    if worst_gain > cfg.convergence_tol {
        return Err(MarketError::NonConvergence {
            improvement: worst_gain,
            tolerance: cfg.convergence_tol,
        });
    }

    if best.band < cfg.feasibility_tol {
        return macro_only(params);
    }
    assemble(best, params)
}

/// Smallest capacity in `[lo, hi]` (to within `tol`) at which the operator
/// stops leasing.
pub fn find_regime_boundary(
    cost: f64,
    eta: f64,
    lo: f64,
    hi: f64,
    tol: f64,
    cfg: &StageOneSolverConfig,
) -> Result<f64> {
    if !is_positive(tol) || !is_positive(hi - lo) {
        return domain(format!("need lo < hi and tol > 0, got [{lo}, {hi}], tol {tol}"));
    }
    let regime_at = |b: f64| -> Result<Regime> {
        Ok(solve_stage1(&MarketParams::new(b, cost, eta)?, cfg)?.regime)
    };
    let (lo_regime, hi_regime) = (regime_at(lo)?, regime_at(hi)?);
    if lo_regime != Regime::DualService || hi_regime != Regime::MacroOnly {
        return Err(MarketError::Bracket {
            lo,
            hi,
            detail: format!("regimes are {lo_regime} at B = {lo} and {hi_regime} at B = {hi}"),
        });
    }
    let (mut lo, mut hi) = (lo, hi);
    while hi - lo > tol {
        let mid = 0.5 * (lo + hi);
        match regime_at(mid)? {
            Regime::DualService => lo = mid,
            Regime::MacroOnly => hi = mid,
        }
    }
    Ok(hi)
}
