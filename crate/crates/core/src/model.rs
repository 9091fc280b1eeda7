//! Scenario and decision types plus the user-level demand and payoff
//! functions shared by every solver stage.
//!
//! Users are a unit mass with macrocell spectrum efficiency `theta`
//! uniform on `[0, 1]`. A user with efficiency `theta` buying bandwidth `b`
//! at price `p` from the macrocell gets `ln(1 + theta b) - p b`; the
//! femtocell delivers efficiency 1 to every covered user.

use serde::{Deserialize, Serialize};

use crate::error::{domain, MarketError, Result};

/// Absolute tolerance used for equality checks on normalized quantities.
pub const ABS_TOL: f64 = 1e-9;

fn finite(name: &str, x: f64) -> Result<f64> {
    if x.is_finite() {
        Ok(x)
    } else {
        domain(format!("{name} must be finite, got {x}"))
    }
}

fn positive_price(name: &str, p: f64) -> Result<f64> {
    let p = finite(name, p)?;
    if p > 0.0 {
        Ok(p)
    } else {
        domain(format!("{name} must be positive, got {p}"))
    }
}

fn efficiency(theta: f64) -> Result<f64> {
    let theta = finite("theta", theta)?;
    if (0.0..=1.0).contains(&theta) {
        Ok(theta)
    } else {
        domain(format!("theta must lie in [0, 1], got {theta}"))
    }
}

fn coverage(eta: f64) -> Result<f64> {
    let eta = finite("eta", eta)?;
    if eta > 0.0 && eta <= 1.0 {
        Ok(eta)
    } else {
        domain(format!("eta must lie in (0, 1], got {eta}"))
    }
}

/// Exogenous scenario: total capacity, femtocell operational cost and
/// femtocell coverage fraction.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MarketParams {
    capacity: f64,
    cost: f64,
    coverage: f64,
}

/// Which of the two model extensions a scenario uses.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Variant {
    Base,
    OperationalCost,
    LimitedCoverage,
}

impl MarketParams {
    pub fn new(capacity: f64, cost: f64, eta: f64) -> Result<Self> {
        let capacity = finite("B", capacity)?;
        if capacity < 0.0 {
            return domain(format!("B must be nonnegative, got {capacity}"));
        }
        let cost = finite("C", cost)?;
        if !(0.0..1.0).contains(&cost) {
            return domain(format!("C must lie in [0, 1), got {cost}"));
        }
        let eta = coverage(eta)?;
        if cost > 0.0 && eta < 1.0 {
            return Err(MarketError::UnsupportedCombination {
                cost,
                coverage: eta,
            });
        }
        Ok(Self {
            capacity,
            cost,
            coverage: eta,
        })
    }

    /// Base model: no operational cost, full coverage.
    pub fn base(capacity: f64) -> Result<Self> {
        Self::new(capacity, 0.0, 1.0)
    }

    pub fn capacity(&self) -> f64 {
        self.capacity
    }

    pub fn cost(&self) -> f64 {
        self.cost
    }

    pub fn coverage(&self) -> f64 {
        self.coverage
    }

    pub fn variant(&self) -> Variant {
        if self.cost > 0.0 {
            Variant::OperationalCost
        } else if self.coverage < 1.0 {
            Variant::LimitedCoverage
        } else {
            Variant::Base
        }
    }

    /// Largest macrocell price compatible with femtocell service.
    pub fn max_macro_price(&self) -> f64 {
        1.0 - self.cost
    }

    pub fn with_capacity(&self, capacity: f64) -> Result<Self> {
        Self::new(capacity, self.cost, self.coverage)
    }
}

/// Macrocell operator's Stage-I decision.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StageOneDecision {
    pub macro_price: f64,
    pub femto_band: f64,
    pub macro_band: f64,
}

impl StageOneDecision {
    pub fn new(macro_price: f64, femto_band: f64, capacity: f64) -> Self {
        Self {
            macro_price,
            femto_band,
            macro_band: capacity - femto_band,
        }
    }
}

/// Femtocell operator's Stage-II decision.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StageTwoDecision {
    pub femto_price: f64,
    pub leased_band: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Regime {
    DualService,
    MacroOnly,
}

impl Regime {
    pub fn as_str(&self) -> &'static str {
        match self {
            Regime::DualService => "DualService",
            Regime::MacroOnly => "MacroOnly",
        }
    }
}

impl std::fmt::Display for Regime {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

/// A solved subgame-perfect outcome of the three-stage game.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Equilibrium {
    pub params: MarketParams,
    pub stage1: StageOneDecision,
    pub stage2: StageTwoDecision,
    /// Lowest efficiency served by the macrocell, `p_M / p_F`.
    pub theta_th: f64,
    /// Partition the macrocell operator would like to see.
    pub theta_pref_macro: f64,
    pub profit_macro: f64,
    pub profit_femto: f64,
    pub regime: Regime,
}

impl Equilibrium {
    /// Checks the structural invariants every solved outcome must satisfy.
    pub fn validate(&self) -> Result<()> {
        let s1 = &self.stage1;
        let s2 = &self.stage2;
        let bad = |msg: String| Err(MarketError::Infeasible(msg));
        if (s1.femto_band + s1.macro_band - self.params.capacity).abs() > ABS_TOL {
            return bad(format!(
                "B_F + B_M = {} differs from B = {}",
                s1.femto_band + s1.macro_band,
                self.params.capacity
            ));
        }
        if s2.leased_band > s1.femto_band + ABS_TOL {
            return bad(format!(
                "B_R = {} exceeds B_F = {}",
                s2.leased_band, s1.femto_band
            ));
        }
        if (self.theta_th - s1.macro_price / s2.femto_price).abs() > ABS_TOL {
            return bad(format!(
                "theta_th = {} differs from p_M / p_F = {}",
                self.theta_th,
                s1.macro_price / s2.femto_price
            ));
        }
        if self.theta_pref_macro > self.theta_th + ABS_TOL {
            return bad(format!(
                "preferred threshold {} exceeds finalized threshold {}",
                self.theta_pref_macro, self.theta_th
            ));
        }
        match self.regime {
            Regime::MacroOnly if s1.femto_band != 0.0 || s2.leased_band != 0.0 => {
                bad("MacroOnly regime with a nonzero lease".into())
            }
            Regime::DualService if s1.femto_band == 0.0 => {
                bad("DualService regime without a femtocell band".into())
            }
            Regime::DualService if s2.femto_price <= s1.macro_price => bad(format!(
                "femtocell price {} not above macrocell price {}",
                s2.femto_price, s1.macro_price
            )),
            _ => Ok(()),
        }
    }
}

/// Optimal macrocell bandwidth demand of a user with efficiency `theta`.
pub fn macro_demand(theta: f64, p_m: f64) -> Result<f64> {
    let theta = efficiency(theta)?;
    let p_m = positive_price("p_M", p_m)?;
    Ok(if p_m <= theta {
        1.0 / p_m - 1.0 / theta
    } else {
        0.0
    })
}

/// Payoff of a user with efficiency `theta` at its optimal macrocell demand.
pub fn macro_payoff(theta: f64, p_m: f64) -> Result<f64> {
    let theta = efficiency(theta)?;
    let p_m = positive_price("p_M", p_m)?;
    Ok(if p_m <= theta {
        // ln(x) - 1 + 1/x >= 0 with equality at x = 1; clamp rounding noise.
        ((theta / p_m).ln() - 1.0 + p_m / theta).max(0.0)
    } else {
        0.0
    })
}

/// Optimal femtocell bandwidth demand (identical for every covered user).
pub fn femto_demand(p_f: f64) -> Result<f64> {
    let p_f = positive_price("p_F", p_f)?;
    Ok(if p_f <= 1.0 { 1.0 / p_f - 1.0 } else { 0.0 })
}

/// Payoff of a covered user at its optimal femtocell demand.
pub fn femto_payoff(p_f: f64) -> Result<f64> {
    let p_f = positive_price("p_F", p_f)?;
    Ok(if p_f <= 1.0 {
        ((1.0 / p_f).ln() - 1.0 + p_f).max(0.0)
    } else {
        0.0
    })
}

/// Efficiency above which users prefer the macrocell, `p_M / p_F`.
pub fn preferred_threshold(p_m: f64, p_f: f64) -> Result<f64> {
    let p_m = positive_price("p_M", p_m)?;
    let p_f = positive_price("p_F", p_f)?;
    if p_m > p_f {
        return domain(format!("p_M = {p_m} exceeds p_F = {p_f}"));
    }
    Ok(p_m / p_f)
}

/// Total macrocell demand of users with efficiency in `[theta_lo, 1]`.
///
/// `theta_lo` below `p_M` is rejected rather than clamped: those users buy
/// nothing, so a caller passing one has a bug upstream.
pub fn aggregate_macro_demand(p_m: f64, theta_lo: f64) -> Result<f64> {
    let p_m = positive_price("p_M", p_m)?;
    let theta_lo = efficiency(theta_lo)?;
    if theta_lo < p_m {
        return domain(format!("theta_lo = {theta_lo} is below p_M = {p_m}"));
    }
    Ok(((1.0 - theta_lo) / p_m + theta_lo.ln()).max(0.0))
}

/// Total femtocell demand of covered users below the preferred threshold.
pub fn aggregate_femto_demand(p_m: f64, p_f: f64, eta: f64) -> Result<f64> {
    let threshold = preferred_threshold(p_m, p_f)?;
    if p_f > 1.0 {
        return domain(format!("p_F must not exceed 1, got {p_f}"));
    }
    let eta = coverage(eta)?;
    Ok(eta * threshold * (1.0 / p_f - 1.0))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn close(a: f64, b: f64, tol: f64) -> bool {
        (a - b).abs() <= tol
    }

    #[test]
    fn macro_demand_examples() {
        assert_eq!(macro_demand(0.5, 0.5).unwrap(), 0.0);
        assert!(close(macro_demand(1.0, 0.5).unwrap(), 1.0, 1e-15));
        assert_eq!(macro_demand(0.3, 0.5).unwrap(), 0.0);
    }

    #[test]
    fn macro_payoff_examples() {
        assert_eq!(macro_payoff(0.5, 0.5).unwrap(), 0.0);
        let expected = 2f64.ln() - 0.5;
        assert!(close(macro_payoff(1.0, 0.5).unwrap(), expected, 1e-15));
        assert!(close(expected, 0.1931, 1e-4));
        assert_eq!(macro_payoff(0.2, 0.5).unwrap(), 0.0);
    }

    #[test]
    fn femto_examples() {
        assert_eq!(femto_demand(1.0).unwrap(), 0.0);
        assert!(close(femto_demand(0.5).unwrap(), 1.0, 1e-15));
        assert_eq!(femto_demand(1.2).unwrap(), 0.0);

        assert_eq!(femto_payoff(1.0).unwrap(), 0.0);
        assert!(close(femto_payoff(0.5).unwrap(), 2f64.ln() - 0.5, 1e-15));
        let inv_e = (-1f64).exp();
        assert!(close(femto_payoff(inv_e).unwrap(), inv_e, 1e-15));
    }

    #[test]
    fn threshold_examples() {
        assert_eq!(preferred_threshold(0.3, 0.3).unwrap(), 1.0);
        assert!(close(preferred_threshold(0.2, 1.0 / 3.0).unwrap(), 0.6, 1e-15));
        assert_eq!(preferred_threshold(0.5, 1.0).unwrap(), 0.5);
        assert!(preferred_threshold(0.6, 0.5).is_err());
    }

    #[test]
    fn aggregate_examples() {
        assert_eq!(aggregate_macro_demand(1.0, 1.0).unwrap(), 0.0);
        let q = aggregate_macro_demand(0.5, 0.5).unwrap();
        assert!(close(q, 1.0 / 0.5 - 1.0 + 0.5f64.ln(), 1e-15));
        assert!(close(q, 0.3069, 1e-4));
        let q = aggregate_macro_demand(0.2, 0.6).unwrap();
        assert!(close(q, 0.4 / 0.2 + 0.6f64.ln(), 1e-14));
        assert!(close(q, 1.4892, 1e-4));
        assert!(aggregate_macro_demand(0.5, 0.4).is_err());

        assert_eq!(aggregate_femto_demand(0.2, 1.0, 1.0).unwrap(), 0.0);
        assert!(close(aggregate_femto_demand(0.2, 1.0 / 3.0, 1.0).unwrap(), 1.2, 1e-14));
        assert!(close(aggregate_femto_demand(0.2, 1.0 / 3.0, 0.5).unwrap(), 0.6, 1e-14));
    }

    #[test]
    fn rejects_bad_inputs() {
        assert!(macro_demand(f64::NAN, 0.5).is_err());
        assert!(macro_demand(1.5, 0.5).is_err());
        assert!(macro_payoff(0.5, 0.0).is_err());
        assert!(femto_demand(0.0).is_err());
        assert!(femto_payoff(-1.0).is_err());
        assert!(aggregate_femto_demand(0.2, 0.5, 0.0).is_err());
        assert!(aggregate_femto_demand(0.2, 1.5, 1.0).is_err());
    }

    #[test]
    fn params_validation() {
        assert!(MarketParams::new(1.0, 0.0, 1.0).is_ok());
        assert!(MarketParams::new(-1.0, 0.0, 1.0).is_err());
        assert!(MarketParams::new(1.0, 1.0, 1.0).is_err());
        assert!(MarketParams::new(1.0, 0.0, 0.0).is_err());
        assert!(matches!(
            MarketParams::new(1.1, 0.2, 0.5),
            Err(MarketError::UnsupportedCombination { .. })
        ));
        assert_eq!(MarketParams::new(1.0, 0.2, 1.0).unwrap().variant(), Variant::OperationalCost);
        assert_eq!(MarketParams::new(1.0, 0.0, 0.5).unwrap().variant(), Variant::LimitedCoverage);
    }
}
