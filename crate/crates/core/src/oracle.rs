//! Brute-force and Monte-Carlo cross-checks for the closed forms.
//!
//! [`grid_argmax_femto`] and [`monte_carlo_demand`] only use the user-level
//! functions in [`crate::model`]; they never call the solvers, so agreement
//! between them and the closed forms is evidence rather than a tautology.
//! [`verify_all`] is the one place the two sides meet.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::model::{
    aggregate_femto_demand, aggregate_macro_demand, femto_demand, femto_payoff, macro_demand,
    macro_payoff,
};
use crate::stage2::femto_best_response;

/// Grid size used by [`verify_all`] on each axis of the full grid.
pub const VERIFY_GRID: usize = 1000;
/// Price points used by [`verify_all`] on the supply-matched grid.
pub const VERIFY_CURVE_GRID: usize = 10_000;
/// Simulated users per Monte-Carlo scenario in [`verify_all`].
pub const VERIFY_USERS: usize = 20_000;
/// Allowed profit gap between closed form and grid optimum.
pub const PROFIT_TOL: f64 = 1e-3;
/// Monte-Carlo estimates must fall within this many standard errors...
pub const MC_SIGMAS: f64 = 3.0;
/// ...in at least this fraction of estimates.
pub const MC_MIN_COVERAGE: f64 = 0.99;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GridOptimum {
    pub femto_price: f64,
    pub leased_band: f64,
    pub profit: f64,
    /// Spacing of the price axis.
    pub price_cell: f64,
    /// Spacing of the lease axis.
    pub band_cell: f64,
}

/// Femtocell profit straight from its definition: revenue on the bandwidth
/// actually sold, minus operating cost on it, minus the lease payment.
fn profit_by_definition(p_f: f64, leased: f64, p_m: f64, cost: f64, eta: f64) -> f64 {
    let demand = aggregate_femto_demand(p_m, p_f, eta).unwrap_or(0.0);
    (p_f - cost) * leased.min(demand) - p_m * leased
}

/// Exhaustive maximum of the femtocell profit over an `n x n` grid of
/// `p_F in (p_M + C, 1]` and `B_R in [0, B_F]`.
pub fn grid_argmax_femto(p_m: f64, band: f64, cost: f64, eta: f64, n: usize) -> GridOptimum {
    let n = n.max(2);
    let lo = p_m + cost;
    let price_cell = (1.0 - lo) / n as f64;
    let band_cell = band / (n - 1) as f64;
    let best = (1..=n)
        .into_par_iter()
        .map(|i| {
            let p_f = if i == n { 1.0 } else { lo + price_cell * i as f64 };
            (0..n)
                .map(|j| {
                    let leased = if j + 1 == n { band } else { band_cell * j as f64 };
                    (profit_by_definition(p_f, leased, p_m, cost, eta), p_f, leased)
                })
                .fold((f64::NEG_INFINITY, 1.0, 0.0), |a, b| if b.0 > a.0 { b } else { a })
        })
        .collect::<Vec<_>>()
        .into_iter()
        .fold((f64::NEG_INFINITY, 1.0, 0.0), |a, b| if b.0 > a.0 { b } else { a });
    GridOptimum {
        femto_price: best.1,
        leased_band: best.2,
        profit: best.0,
        price_cell,
        band_cell,
    }
}

/// Maximum over `n` prices in `(p_M + C, 1]` with the lease set to
/// `min(demand(p_F), B_F)`.
///
/// On the full grid the profit is nearly flat along the line where the lease
/// equals demand, so its argmax price wanders by several cells even though
/// its profit is accurate. Fixing the lease to the supply that balances both
/// terms of the minimum leaves a one-dimensional search whose argmax price is
/// resolved to one cell.
pub fn curve_argmax_femto(p_m: f64, band: f64, cost: f64, eta: f64, n: usize) -> GridOptimum {
    let n = n.max(1);
    let lo = p_m + cost;
    let price_cell = (1.0 - lo) / n as f64;
    let best = (1..=n)
        .map(|i| {
            let p_f = if i == n { 1.0 } else { lo + price_cell * i as f64 };
            let leased = aggregate_femto_demand(p_m, p_f, eta).unwrap_or(0.0).min(band);
            (profit_by_definition(p_f, leased, p_m, cost, eta), p_f, leased)
        })
        .fold((f64::NEG_INFINITY, 1.0, 0.0), |a, b| if b.0 > a.0 { b } else { a });
    GridOptimum {
        femto_price: best.1,
        leased_band: best.2,
        profit: best.0,
        price_cell,
        band_cell: 0.0,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DemandEstimate {
    pub femto_total: f64,
    pub macro_total: f64,
    pub femto_std_err: f64,
    pub macro_std_err: f64,
}

/// Simulates `n_users` users with uniform efficiency; a fraction `eta` of
/// them is covered by the femtocell and takes whichever service pays more.
pub fn monte_carlo_demand(p_m: f64, p_f: f64, eta: f64, n_users: usize, seed: u64) -> DemandEstimate {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    simulate(&mut rng, p_m, p_f, eta, n_users)
}

fn simulate(rng: &mut ChaCha8Rng, p_m: f64, p_f: f64, eta: f64, n_users: usize) -> DemandEstimate {
    let femto_each = femto_demand(p_f).unwrap_or(0.0);
    let femto_gain = femto_payoff(p_f).unwrap_or(0.0);
    let (mut sf, mut sf2, mut sm, mut sm2) = (0.0, 0.0, 0.0, 0.0);
    for _ in 0..n_users {
        let theta: f64 = rng.gen();
        let covered = rng.gen::<f64>() < eta;
        let macro_gain = macro_payoff(theta, p_m).unwrap_or(0.0);
        let (f, m) = if covered && femto_gain > macro_gain {
            (femto_each, 0.0)
        } else {
            (0.0, macro_demand(theta, p_m).unwrap_or(0.0))
        };
        sf += f;
        sf2 += f * f;
        sm += m;
        sm2 += m * m;
    }
    let n = n_users.max(1) as f64;
    let std_err = |s: f64, s2: f64| {
        let mean = s / n;
        ((s2 / n - mean * mean).max(0.0) / (n - 1.0).max(1.0)).sqrt()
    };
    DemandEstimate {
        femto_total: sf / n,
        macro_total: sm / n,
        femto_std_err: std_err(sf, sf2),
        macro_std_err: std_err(sm, sm2),
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OracleFailure {
    pub check: String,
    pub input: String,
    pub expected: f64,
    pub got: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OracleReport {
    pub seed: u64,
    pub samples: usize,
    /// Largest profit gap between a closed-form best response and its grid
    /// optimum.
    pub max_abs_deviation: f64,
    /// Largest closed-form vs supply-matched grid price gap, in grid cells.
    pub max_price_cells: f64,
    pub mc_estimates: usize,
    pub mc_within: usize,
    pub failures: Vec<OracleFailure>,
}

impl OracleReport {
    pub fn passed(&self) -> bool {
        self.failures.is_empty()
    }
}

#[derive(Debug, Clone, Copy)]
struct Scenario {
    p_m: f64,
    band: f64,
    cost: f64,
    eta: f64,
    /// Arbitrary femtocell price in `[p_M, 1]` for the demand check.
    p_f: f64,
}

impl std::fmt::Display for Scenario {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(
            f,
            "p_M={:.6} B_F={:.6} C={:.6} eta={:.6} p_F={:.6}",
            self.p_m, self.band, self.cost, self.eta, self.p_f
        )
    }
}

fn draw_scenario(rng: &mut ChaCha8Rng, index: usize) -> Scenario {
    let (cost, eta) = match index % 3 {
        0 => (0.0, 1.0),
        1 => (rng.gen_range(0.01..0.5), 1.0),
        _ => (0.0, rng.gen_range(0.1..1.0)),
    };
    let p_m = rng.gen_range(0.05..(0.95 - cost));
    // Half the bands are small enough that the lease is capacity-limited.
    let band = if rng.gen_bool(0.5) {
        rng.gen_range(0.01..0.5)
    } else {
        rng.gen_range(0.5..4.0)
    };
    let p_f = rng.gen_range(p_m..=1.0);
    Scenario {
        p_m,
        band,
        cost,
        eta,
        p_f,
    }
}

#[derive(Debug, Default)]
struct ScenarioResult {
    profit_gap: f64,
    price_cells: f64,
    mc_within: usize,
    failures: Vec<OracleFailure>,
}

fn check_scenario(s: Scenario, rng: &mut ChaCha8Rng) -> ScenarioResult {
    let mut out = ScenarioResult::default();
    let input = s.to_string();
    let mut fail = |check: &str, expected: f64, got: f64| {
        out.failures.push(OracleFailure {
            check: check.into(),
            input: input.clone(),
            expected,
            got,
        })
    };

    let grid = grid_argmax_femto(s.p_m, s.band, s.cost, s.eta, VERIFY_GRID);
    let curve = curve_argmax_femto(s.p_m, s.band, s.cost, s.eta, VERIFY_CURVE_GRID);
    match femto_best_response(s.p_m, s.band, s.cost, s.eta) {
        Err(e) => fail(&format!("closed form errored: {e}"), grid.profit, f64::NAN),
        Ok(r) => {
            let gap = (r.profit - grid.profit).abs().max((r.profit - curve.profit).abs());
            let cells = (r.decision.femto_price - curve.femto_price).abs() / curve.price_cell;
            out.profit_gap = gap;
            out.price_cells = cells;
            if (r.profit - grid.profit).abs() > PROFIT_TOL {
                fail("best-response profit vs full grid", grid.profit, r.profit);
            }
            if (r.profit - curve.profit).abs() > PROFIT_TOL {
                fail("best-response profit vs supply-matched grid", curve.profit, r.profit);
            }
            // One cell on either side of the closed-form price, plus rounding.
            if cells > 1.0 + 1e-6 {
                fail("best-response price (cells)", curve.femto_price, r.decision.femto_price);
            }
        }
    }

    // Where the grid optimum leases strictly less than offered, selling out
    // the lease and the demand must coincide up to discretization.
    if grid.leased_band > 0.0 && grid.leased_band < s.band {
        let demand = aggregate_femto_demand(s.p_m, grid.femto_price, s.eta).unwrap_or(0.0);
        let margin = grid.femto_price - s.cost;
        let slope = s.eta * s.p_m * (2.0 - grid.femto_price) / grid.femto_price.powi(3);
        let tol = 2.0 * margin * (grid.band_cell + slope * grid.price_cell);
        let gap = margin * (grid.leased_band - demand).abs();
        if gap > tol {
            fail("min-branch balance at grid optimum", tol, gap);
        }
    }

    // Separate user samples for the two estimates keep their coverage
    // outcomes independent.
    let femto_run = simulate(rng, s.p_m, s.p_f, s.eta, VERIFY_USERS);
    let macro_run = simulate(rng, s.p_m, s.p_f, s.eta, VERIFY_USERS);
    let femto_exact = aggregate_femto_demand(s.p_m, s.p_f, s.eta).unwrap_or(f64::NAN);
    let theta_th = s.p_m / s.p_f;
    let macro_exact = (1.0 - s.eta) * aggregate_macro_demand(s.p_m, s.p_m).unwrap_or(f64::NAN)
        + s.eta * aggregate_macro_demand(s.p_m, theta_th).unwrap_or(f64::NAN);
    for (exact, got, se) in [
        (femto_exact, femto_run.femto_total, femto_run.femto_std_err),
        (macro_exact, macro_run.macro_total, macro_run.macro_std_err),
    ] {
        let within = if se > 0.0 {
            (got - exact).abs() <= MC_SIGMAS * se
        } else {
            (got - exact).abs() <= 1e-12
        };
        out.mc_within += within as usize;
    }
    out
}

/// Runs every cross-check on `sample_count` random scenarios cycling through
/// the base, operational-cost and limited-coverage variants.
pub fn verify_all(sample_count: usize, seed: u64) -> OracleReport {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let scenarios: Vec<Scenario> = (0..sample_count).map(|i| draw_scenario(&mut rng, i)).collect();
    let results: Vec<ScenarioResult> = scenarios
        .par_iter()
        .enumerate()
        .map(|(i, &s)| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(i as u64 + 1);
            check_scenario(s, &mut rng)
        })
        .collect();

    let mut report = OracleReport {
        seed,
        samples: sample_count,
        max_abs_deviation: 0.0,
        max_price_cells: 0.0,
        mc_estimates: 2 * sample_count,
        mc_within: 0,
        failures: Vec::new(),
    };
    for r in results {
        report.max_abs_deviation = report.max_abs_deviation.max(r.profit_gap);
        report.max_price_cells = report.max_price_cells.max(r.price_cells);
        report.mc_within += r.mc_within;
        report.failures.extend(r.failures);
    }
    if report.mc_estimates > 0 {
        let coverage = report.mc_within as f64 / report.mc_estimates as f64;
        if coverage < MC_MIN_COVERAGE {
            report.failures.push(OracleFailure {
                check: format!("monte-carlo estimates within {MC_SIGMAS} standard errors"),
                input: format!("{} estimates", report.mc_estimates),
                expected: MC_MIN_COVERAGE,
                got: coverage,
            });
        }
    }
    report
}
