//! Consumer surplus, social welfare and per-user payoffs, with the
//! macrocell-only market as the comparison point.

use serde::{Deserialize, Serialize};

use crate::benchmark::solve_benchmark;
use crate::error::{domain, Result};
use crate::model::{femto_payoff, macro_payoff, Equilibrium, MarketParams};
use crate::quadrature::{integrate, QuadratureConfig};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WelfareReport {
    pub consumer_surplus: f64,
    pub profit_macro: f64,
    pub profit_femto: f64,
    pub social_welfare: f64,
    /// `(theta, payoff)` samples of the per-user payoff.
    pub payoff_curve: Vec<(f64, f64)>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PayoffSample {
    pub theta: f64,
    pub dual: f64,
    pub benchmark: f64,
}

const CURVE_POINTS: usize = 101;

fn curve_grid() -> Vec<f64> {
    (0..CURVE_POINTS).map(|i| i as f64 / (CURVE_POINTS - 1) as f64).collect()
}

/// `int_lo^1 macro_payoff(theta, p) dtheta`.
fn macro_surplus(price: f64, lo: f64, qcfg: &QuadratureConfig) -> f64 {
    integrate(
        |theta| macro_payoff(theta, price).unwrap_or(0.0),
        lo.max(price),
        1.0,
        qcfg,
    )
}

pub fn consumer_surplus_benchmark(capacity: f64, qcfg: &QuadratureConfig) -> Result<f64> {
    let bench = solve_benchmark(capacity)?;
    Ok(macro_surplus(bench.price, bench.price, qcfg))
}

pub fn consumer_surplus_dual(eq: &Equilibrium, params: &MarketParams, qcfg: &QuadratureConfig) -> Result<f64> {
    let p_m = eq.stage1.macro_price;
    let eta = params.coverage();
    let covered = eq.theta_th * femto_payoff(eq.stage2.femto_price)? + macro_surplus(p_m, eq.theta_th, qcfg);
    let uncovered = if eta < 1.0 { macro_surplus(p_m, p_m, qcfg) } else { 0.0 };
    Ok(eta * covered + (1.0 - eta) * uncovered)
}

/// Welfare accounting of a solved equilibrium.
pub fn social_welfare(eq: &Equilibrium, params: &MarketParams, qcfg: &QuadratureConfig) -> Result<WelfareReport> {
    let consumer_surplus = consumer_surplus_dual(eq, params, qcfg)?;
    let payoff_curve = payoff_curve(eq, params, &curve_grid())?
        .into_iter()
        .map(|s| (s.theta, s.dual))
        .collect();
    Ok(WelfareReport {
        consumer_surplus,
        profit_macro: eq.profit_macro,
        profit_femto: eq.profit_femto,
        social_welfare: consumer_surplus + eq.profit_macro + eq.profit_femto,
        payoff_curve,
    })
}

/// Welfare accounting of the macrocell-only market with capacity `capacity`.
pub fn benchmark_welfare(capacity: f64, qcfg: &QuadratureConfig) -> Result<WelfareReport> {
    let bench = solve_benchmark(capacity)?;
    let consumer_surplus = macro_surplus(bench.price, bench.price, qcfg);
    let payoff_curve = curve_grid()
        .into_iter()
        .map(|theta| Ok((theta, macro_payoff(theta, bench.price)?)))
        .collect::<Result<_>>()?;
    Ok(WelfareReport {
        consumer_surplus,
        profit_macro: bench.profit,
        profit_femto: 0.0,
        social_welfare: consumer_surplus + bench.profit,
        payoff_curve,
    })
}

/// Payoff of a user with efficiency `theta` under the equilibrium prices and
/// under the benchmark price.
///
/// With limited coverage the dual payoff is the population average at that
/// `theta`: covered users take the better service, uncovered users the
/// macrocell.
pub fn payoff_curve(eq: &Equilibrium, params: &MarketParams, theta_grid: &[f64]) -> Result<Vec<PayoffSample>> {
    let bench = solve_benchmark(params.capacity())?;
    let p_m = eq.stage1.macro_price;
    let femto = femto_payoff(eq.stage2.femto_price)?;
    let eta = params.coverage();
    theta_grid
        .iter()
        .map(|&theta| {
            if !(0.0..=1.0).contains(&theta) {
                return domain(format!("theta must lie in [0, 1], got {theta}"));
            }
            let macro_side = macro_payoff(theta, p_m)?;
            let covered = femto.max(macro_side);
            debug_assert!(
                (theta >= eq.theta_th) == (macro_side >= femto)
                    || (macro_side - femto).abs() < 1e-9
                    || eq.stage2.leased_band == 0.0,
                "service choice disagrees with the partition threshold at theta = {theta}"
            );
            Ok(PayoffSample {
                theta,
                dual: eta * covered + (1.0 - eta) * macro_side,
                benchmark: macro_payoff(theta, bench.price)?,
            })
        })
        .collect()
}
