//! CSV rows for solved scenarios.

use crate::benchmark::{solve_benchmark, BenchmarkResult};
use crate::error::{MarketError, Result};
use crate::model::{Equilibrium, MarketParams};
use crate::quadrature::QuadratureConfig;
use crate::stage1::{solve_stage1, StageOneSolverConfig};
use crate::welfare::{benchmark_welfare, social_welfare, WelfareReport};

pub const EQUILIBRIUM_HEADER: [&str; 17] = [
    "B",
    "C",
    "eta",
    "regime",
    "p_M",
    "p_F",
    "B_F",
    "B_M",
    "B_R",
    "theta_th",
    "theta_tilde",
    "profit_macro",
    "profit_femto",
    "cs_dual",
    "cs_bench",
    "welfare_dual",
    "welfare_bench",
];

pub const BENCHMARK_HEADER: [&str; 4] = ["B", "p_M_bench", "profit", "served_fraction"];

/// Formats `x` with 10 significant digits in the style of C's `%.10g`.
pub fn fmt_sig(x: f64) -> String {
    const DIGITS: i32 = 10;
    if x == 0.0 {
        return "0".to_string();
    }
    if !x.is_finite() {
        return x.to_string();
    }
    let sci = format!("{:.*e}", (DIGITS - 1) as usize, x);
    let (mantissa, exp) = sci.split_once('e').expect("exponent form");
    let exp: i32 = exp.parse().expect("integer exponent");
    if !(-4..DIGITS).contains(&exp) {
        let mantissa = trim_zeros(mantissa);
        let sign = if exp < 0 { '-' } else { '+' };
        format!("{mantissa}e{sign}{:02}", exp.abs())
    } else {
        let decimals = (DIGITS - 1 - exp).max(0) as usize;
        trim_zeros(&format!("{x:.decimals$}")).to_string()
    }
}

fn trim_zeros(s: &str) -> &str {
    if s.contains('.') {
        s.trim_end_matches('0').trim_end_matches('.')
    } else {
        s
    }
}

/// One solved scenario with its welfare accounting and the benchmark at the
/// same capacity.
#[derive(Debug, Clone)]
pub struct ScenarioRow {
    pub params: MarketParams,
    pub equilibrium: Equilibrium,
    pub dual: WelfareReport,
    pub bench: WelfareReport,
    pub benchmark: BenchmarkResult,
}

impl ScenarioRow {
    pub fn solve(params: &MarketParams, cfg: &StageOneSolverConfig, qcfg: &QuadratureConfig) -> Result<Self> {
        let equilibrium = solve_stage1(params, cfg)?;
        let dual = social_welfare(&equilibrium, params, qcfg)?;
        let bench = benchmark_welfare(params.capacity(), qcfg)?;
        Ok(Self {
            params: *params,
            equilibrium,
            dual,
            bench,
            benchmark: solve_benchmark(params.capacity())?,
        })
    }

    /// Checks the equilibrium invariants and welfare additivity before the
    /// row is written.
    pub fn validate(&self) -> Result<()> {
        self.equilibrium.validate()?;
        for (name, r) in [("dual", &self.dual), ("benchmark", &self.bench)] {
            let sum = r.consumer_surplus + r.profit_macro + r.profit_femto;
            if (r.social_welfare - sum).abs() > 1e-9 {
                return Err(MarketError::Infeasible(format!(
                    "{name} welfare {} is not the sum of its parts {sum}",
                    r.social_welfare
                )));
            }
        }
        Ok(())
    }

    pub fn record(&self) -> Vec<String> {
        let e = &self.equilibrium;
        let p = &self.params;
        let mut out = vec![fmt_sig(p.capacity()), fmt_sig(p.cost()), fmt_sig(p.coverage())];
        out.push(e.regime.as_str().to_string());
        out.extend(
            [
                e.stage1.macro_price,
                e.stage2.femto_price,
                e.stage1.femto_band,
                e.stage1.macro_band,
                e.stage2.leased_band,
                e.theta_th,
                e.theta_pref_macro,
                e.profit_macro,
                e.profit_femto,
                self.dual.consumer_surplus,
                self.bench.consumer_surplus,
                self.dual.social_welfare,
                self.bench.social_welfare,
            ]
            .into_iter()
            .map(fmt_sig),
        );
        out
    }
}

pub fn benchmark_record(b: &BenchmarkResult) -> Vec<String> {
    [b.capacity, b.price, b.profit, b.served_fraction]
        .into_iter()
        .map(fmt_sig)
        .collect()
}

/// Serializes a header and records as comma-separated, newline-terminated
/// text.
pub fn to_csv<S: AsRef<str>>(header: &[&str], records: &[Vec<S>]) -> String {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(header).expect("write to memory");
    for r in records {
        w.write_record(r.iter().map(|s| s.as_ref())).expect("write to memory");
    }
    String::from_utf8(w.into_inner().expect("flush to memory")).expect("utf-8 fields")
}
