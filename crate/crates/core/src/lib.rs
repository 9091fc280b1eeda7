//! Subgame-perfect equilibria of a two-tier spectrum market in which a
//! macrocell operator leases bandwidth to a femtocell operator serving the
//! same continuum of users.
//!
//! The game is solved backwards: users pick a service and a quantity
//! ([`model`]), the femtocell operator best-responds in closed form
//! ([`stage2`]), and the macrocell operator searches over its price and
//! leased band ([`stage1`]). [`benchmark`] solves the macrocell-only market,
//! [`welfare`] does the surplus accounting and [`oracle`] holds the
//! brute-force cross-checks.

pub mod benchmark;
pub mod cli;
pub mod error;
pub mod model;
pub mod oracle;
pub mod quadrature;
pub mod stage1;
pub mod stage2;
pub mod welfare;

pub use benchmark::{solve_benchmark, BenchmarkResult};
pub use error::{MarketError, Result};
pub use model::{Equilibrium, MarketParams, Regime, StageOneDecision, StageTwoDecision};
pub use quadrature::QuadratureConfig;
pub use stage1::{find_regime_boundary, solve_stage1, StageOneSolverConfig};
pub use stage2::{femto_best_response, FemtoBestResponse};
pub use welfare::WelfareReport;
