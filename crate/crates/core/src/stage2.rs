//! Femtocell operator's best response to a Stage-I decision.
//!
//! Given the macrocell price and the band offered for leasing, the
//! femtocell operator picks its own price and how much to lease. The
//! optimum always leases exactly what its customers demand: either the
//! unconstrained demand at the profit-maximizing price, or the whole offered
//! band with the price raised until demand shrinks to fit.

use serde::{Deserialize, Serialize};

use crate::error::{domain, MarketError, Result};
use crate::model::{aggregate_femto_demand, StageTwoDecision};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Binding {
    /// The offered band exceeds what customers want at the interior price.
    DemandLimited,
    /// The whole offered band is leased and the price rations demand.
    CapacityLimited,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FemtoBestResponse {
    pub decision: StageTwoDecision,
    pub binding: Binding,
    pub profit: f64,
}

fn check_inputs(p_m: f64, band: f64, cost: f64, eta: f64) -> Result<()> {
    if !(p_m.is_finite() && p_m > 0.0 && p_m <= 1.0) {
        return domain(format!("p_M must lie in (0, 1], got {p_m}"));
    }
    if !(band.is_finite() && band >= 0.0) {
        return domain(format!("B_F must be finite and nonnegative, got {band}"));
    }
    if !(cost.is_finite() && (0.0..1.0).contains(&cost)) {
        return domain(format!("C must lie in [0, 1), got {cost}"));
    }
    if !(eta.is_finite() && eta > 0.0 && eta <= 1.0) {
        return domain(format!("eta must lie in (0, 1], got {eta}"));
    }
    if cost > 0.0 && eta < 1.0 {
        return Err(MarketError::UnsupportedCombination {
            cost,
            coverage: eta,
        });
    }
    Ok(())
}

/// Price maximizing the femtocell margin along the demand-matching lease
/// curve, `2a / (1 + a)` with `a = p_M + C`.
pub fn interior_price(p_m: f64, cost: f64) -> f64 {
    let a = p_m + cost;
    2.0 * a / (1.0 + a)
}

/// Demand of covered femtocell users at [`interior_price`].
pub fn interior_lease(p_m: f64, cost: f64, eta: f64) -> f64 {
    let a = p_m + cost;
    eta * p_m * (1.0 / (a * a) - 1.0) / 4.0
}

/// Price at which covered femtocell demand exactly fills `band`.
///
/// Algebraically `(-x + sqrt(x^2 + 4 x B_F)) / (2 B_F)` with `x = eta p_M`;
/// evaluated in the rationalized form to avoid cancellation for small bands.
pub fn capacity_price(p_m: f64, band: f64, eta: f64) -> f64 {
    let x = eta * p_m;
    2.0 * x / (x + (x * x + 4.0 * x * band).sqrt())
}

/// Closed-form Stage-II best response.
pub fn femto_best_response(p_m: f64, band: f64, cost: f64, eta: f64) -> Result<FemtoBestResponse> {
    check_inputs(p_m, band, cost, eta)?;
    if band == 0.0 {
        // Limit of the capacity branch as B_F -> 0+.
        return Ok(FemtoBestResponse {
            decision: StageTwoDecision {
                femto_price: 1.0,
                leased_band: 0.0,
            },
            binding: Binding::CapacityLimited,
            profit: 0.0,
        });
    }
    if cost > 0.0 && p_m + cost >= 1.0 {
        return Err(MarketError::Infeasible(format!(
            "p_M + C = {} leaves no room for a femtocell price below 1",
            p_m + cost
        )));
    }

    let demand = interior_lease(p_m, cost, eta);
    let (femto_price, leased_band, binding) = if demand <= band {
        (interior_price(p_m, cost), demand, Binding::DemandLimited)
    } else {
        (
            capacity_price(p_m, band, eta).max(interior_price(p_m, cost)),
            band,
            Binding::CapacityLimited,
        )
    };
    let profit = femto_profit(femto_price, leased_band, p_m, cost, eta)?;
    Ok(FemtoBestResponse {
        decision: StageTwoDecision {
            femto_price,
            leased_band,
        },
        binding,
        profit,
    })
}

/// Femtocell profit for an arbitrary `(p_F, B_R)`, in the raw
/// `(p_F - C) min(B_R, demand) - p_M B_R` form. Negative when the operator
/// leases more than it can sell.
pub fn femto_profit(p_f: f64, leased: f64, p_m: f64, cost: f64, eta: f64) -> Result<f64> {
    if !(leased.is_finite() && leased >= 0.0) {
        return domain(format!("B_R must be finite and nonnegative, got {leased}"));
    }
    if !(cost.is_finite() && (0.0..1.0).contains(&cost)) {
        return domain(format!("C must lie in [0, 1), got {cost}"));
    }
    let served = leased.min(aggregate_femto_demand(p_m, p_f, eta)?);
    Ok((p_f - cost) * served - p_m * leased)
}

/// Lease level at which both terms of the profit minimum coincide,
/// `eta p_M (1 - p_F) / p_F^2`.
pub fn interior_lease_curve(p_f: f64, p_m: f64, eta: f64) -> Result<f64> {
    if !(p_m.is_finite() && p_f.is_finite() && p_m > 0.0 && p_m < p_f && p_f <= 1.0) {
        return domain(format!("need 0 < p_M < p_F <= 1, got p_M = {p_m}, p_F = {p_f}"));
    }
    if !(eta > 0.0 && eta <= 1.0) {
        return domain(format!("eta must lie in (0, 1], got {eta}"));
    }
    Ok(eta * p_m * (1.0 - p_f) / (p_f * p_f))
}
