//! Acceptance suite: one PASS/FAIL line per criterion, nonzero exit if any
//! criterion fails.

use std::time::{Duration, Instant};

use femtomarket::benchmark::{clearing_residual, solve_benchmark};
use femtomarket::model::{Equilibrium, MarketParams, Regime};
use femtomarket::oracle::verify_all;
use femtomarket::quadrature::QuadratureConfig;
use femtomarket::stage1::{find_regime_boundary, solve_stage1, StageOneSolverConfig};
use femtomarket::welfare::{benchmark_welfare, payoff_curve, social_welfare};
use femtomarket::MarketError;
use rayon::prelude::*;

const BOUNDARY_WINDOW: (f64, f64) = (4.6, 4.9);
const BOUNDARY_BRACKET: (f64, f64) = (3.0, 8.0);
const BOUNDARY_TOL: f64 = 0.005;
const BOUNDARY_TIME_LIMIT: Duration = Duration::from_secs(60);
const UPLIFT_WINDOW: (f64, f64) = (1.22, 1.32);
const PRICE_SLACK: f64 = 1e-4;
const CS_CROSSING_WINDOW: (f64, f64) = (0.25, 0.35);
const WELFARE_SLACK: f64 = 1e-6;
const RESIDUAL_TOL: f64 = 1e-10;
const DEGENERATE_PROFIT_TOL: f64 = 1e-5;

type Criterion = (&'static str, fn() -> Verdict);

struct Verdict {
    passed: bool,
    detail: String,
}

fn verdict(passed: bool, detail: impl Into<String>) -> Verdict {
    Verdict {
        passed,
        detail: detail.into(),
    }
}

fn cfg() -> StageOneSolverConfig {
    StageOneSolverConfig::default()
}

fn solve(b: f64, c: f64, eta: f64) -> Equilibrium {
    solve_stage1(&MarketParams::new(b, c, eta).unwrap(), &cfg()).unwrap()
}

fn boundary(c: f64, eta: f64) -> Result<f64, MarketError> {
    find_regime_boundary(c, eta, BOUNDARY_BRACKET.0, BOUNDARY_BRACKET.1, BOUNDARY_TOL, &cfg())
}

fn describe(r: &Result<f64, MarketError>) -> String {
    match r {
        Ok(b) => format!("{b:.3}"),
        Err(e) => format!("error ({e})"),
    }
}

fn in_window(x: f64, w: (f64, f64)) -> bool {
    x >= w.0 && x <= w.1
}

fn regime_boundary() -> Verdict {
    let start = Instant::now();
    let r = boundary(0.0, 1.0);
    let elapsed = start.elapsed();
    let passed = matches!(r, Ok(b) if in_window(b, BOUNDARY_WINDOW)) && elapsed < BOUNDARY_TIME_LIMIT;
    verdict(passed, format!("boundary {} in {:.1} s", describe(&r), elapsed.as_secs_f64()))
}

fn coverage_invariance() -> Verdict {
    let results: Vec<(f64, Result<f64, MarketError>)> =
        [0.25, 0.5, 0.75].into_iter().map(|eta| (eta, boundary(0.0, eta))).collect();
    let passed = results.iter().all(|(_, r)| matches!(r, Ok(b) if in_window(*b, BOUNDARY_WINDOW)));
    let detail = results
        .iter()
        .map(|(eta, r)| format!("eta={eta}: {}", describe(r)))
        .collect::<Vec<_>>()
        .join("; ");
    verdict(passed, detail)
}

fn profit_uplift() -> Verdict {
    let eq = solve(0.1, 0.0, 1.0);
    let ratio = eq.profit_macro / solve_benchmark(0.1).unwrap().profit;
    verdict(in_window(ratio, UPLIFT_WINDOW), format!("ratio {ratio:.4} at B=0.1"))
}

fn price_dominance() -> Verdict {
    let gaps: Vec<(f64, f64)> = [0.1, 0.5, 1.0, 2.0, 3.0, 4.0]
        .par_iter()
        .map(|&b| (b, solve(b, 0.0, 1.0).stage1.macro_price - solve_benchmark(b).unwrap().price))
        .collect();
    let worst = gaps.iter().copied().fold((0.0, f64::INFINITY), |a, g| if g.1 < a.1 { g } else { a });
    verdict(
        worst.1 >= -PRICE_SLACK,
        format!("smallest p_M* - p_bench = {:.3e} at B={}", worst.1, worst.0),
    )
}

fn cost_boundary_shape() -> Verdict {
    let costs = [0.0, 0.06, 0.12, 0.24, 0.4];
    let results: Vec<Result<f64, MarketError>> = costs.iter().map(|&c| boundary(c, 1.0)).collect();
    let detail = costs
        .iter()
        .zip(&results)
        .map(|(c, r)| format!("C={c}: {}", describe(r)))
        .collect::<Vec<_>>()
        .join("; ");
    let values: Option<Vec<f64>> = results.iter().map(|r| r.as_ref().ok().copied()).collect();
    let passed = values.is_some_and(|v| {
        let argmin = (0..v.len()).min_by(|&i, &j| v[i].total_cmp(&v[j])).unwrap();
        costs[argmin] == 0.12 && v[4] > 5.2
    });
    verdict(passed, detail)
}

fn cs_crossing() -> Verdict {
    let q = QuadratureConfig::default();
    let cs_bench = benchmark_welfare(1.1, &q).unwrap().consumer_surplus;
    let costs: Vec<f64> = (0..=60).map(|i| i as f64 / 100.0).collect();
    let diffs: Vec<f64> = costs
        .par_iter()
        .map(|&c| {
            let params = MarketParams::new(1.1, c, 1.0).unwrap();
            let eq = solve_stage1(&params, &cfg()).unwrap();
            social_welfare(&eq, &params, &q).unwrap().consumer_surplus - cs_bench
        })
        .collect();
    let crossings: Vec<f64> = (1..costs.len())
        .filter(|&i| (diffs[i - 1] > 0.0) != (diffs[i] > 0.0))
        .map(|i| {
            let (c0, c1, d0, d1) = (costs[i - 1], costs[i], diffs[i - 1], diffs[i]);
            c0 + (c1 - c0) * d0 / (d0 - d1)
        })
        .collect();
    let passed = crossings.len() == 1 && in_window(crossings[0], CS_CROSSING_WINDOW);
    verdict(passed, format!("sign changes at C = {crossings:.3?}"))
}

fn welfare_dominance() -> Verdict {
    let q = QuadratureConfig::default();
    let bench = benchmark_welfare(1.1, &q).unwrap().social_welfare;
    let gaps: Vec<(f64, f64)> = (0..=9)
        .into_par_iter()
        .map(|i| {
            let c = i as f64 / 10.0;
            let params = MarketParams::new(1.1, c, 1.0).unwrap();
            let eq = solve_stage1(&params, &cfg()).unwrap();
            (c, social_welfare(&eq, &params, &q).unwrap().social_welfare - bench)
        })
        .collect();
    let worst = gaps.iter().copied().fold((0.0, f64::INFINITY), |a, g| if g.1 < a.1 { g } else { a });
    verdict(
        worst.1 >= -WELFARE_SLACK,
        format!("smallest welfare gain {:.3e} at C={}", worst.1, worst.0),
    )
}

fn per_user_crossing() -> Verdict {
    let params = MarketParams::base(2.1).unwrap();
    let eq = solve_stage1(&params, &cfg()).unwrap();
    let grid: Vec<f64> = (0..1000).map(|i| i as f64 / 999.0).collect();
    let diffs: Vec<f64> = payoff_curve(&eq, &params, &grid)
        .unwrap()
        .iter()
        .map(|s| s.dual - s.benchmark)
        .collect();
    let signed: Vec<f64> = diffs.iter().copied().filter(|d| d.abs() > 1e-12).collect();
    let changes = signed.windows(2).filter(|w| (w[0] > 0.0) != (w[1] > 0.0)).count();
    let passed = diffs[0] > 0.0 && *diffs.last().unwrap() < 0.0 && changes <= 1;
    verdict(
        passed,
        format!(
            "difference {:.4} at theta=0, {:.4} at theta=1, {changes} sign change(s)",
            diffs[0],
            diffs.last().unwrap()
        ),
    )
}

fn oracle_equivalence() -> Verdict {
    let r = verify_all(200, 1);
    verdict(
        r.passed(),
        format!(
            "{} failures, max profit deviation {:.2e}, max price offset {:.2} cells, MC {}/{} within 3 SE",
            r.failures.len(),
            r.max_abs_deviation,
            r.max_price_cells,
            r.mc_within,
            r.mc_estimates
        ),
    )
}

fn benchmark_properties() -> Verdict {
    let grid: Vec<f64> = (0..50).map(|i| 0.01 + (10.0 - 0.01) * i as f64 / 49.0).collect();
    let sols: Vec<_> = grid.iter().map(|&b| solve_benchmark(b).unwrap()).collect();
    let decreasing = sols.windows(2).all(|w| w[1].price < w[0].price);
    let increasing = sols.windows(2).all(|w| w[1].profit > w[0].profit);
    let residual = sols
        .iter()
        .map(|s| clearing_residual(s.price, s.capacity).abs())
        .fold(0.0, f64::max);
    verdict(
        decreasing && increasing && residual < RESIDUAL_TOL,
        format!("price decreasing: {decreasing}, profit increasing: {increasing}, max residual {residual:.1e}"),
    )
}

fn threshold_ordering() -> Verdict {
    let grid: Vec<f64> = (0..60).map(|i| if i == 59 { 6.0 } else { 0.1 + 5.9 * i as f64 / 59.0 }).collect();
    let eqs: Vec<Equilibrium> = grid.par_iter().map(|&b| solve(b, 0.0, 1.0)).collect();
    let dual: Vec<(f64, f64)> = grid
        .iter()
        .zip(&eqs)
        .filter(|(_, e)| e.regime == Regime::DualService)
        .map(|(&b, e)| (b, e.theta_th - e.theta_pref_macro))
        .collect();
    let ordered = dual.iter().all(|&(_, g)| g >= -1e-12);
    let drops: Vec<(f64, f64)> = dual
        .windows(2)
        .filter(|w| w[1].1 < w[0].1 - 1e-9)
        .map(|w| (w[1].0, w[1].1 - w[0].1))
        .collect();
    let biggest = drops.iter().copied().fold((f64::NAN, 0.0), |a, d| if d.1 < a.1 { d } else { a });
    let detail = if drops.is_empty() {
        format!("{} dual points, gap nondecreasing", dual.len())
    } else {
        format!(
            "{} dual points, ordering held: {ordered}, gap decreases at {} points (largest {:.4} at B={:.2})",
            dual.len(),
            drops.len(),
            biggest.1,
            biggest.0
        )
    };
    verdict(ordered && drops.is_empty(), detail)
}

fn degeneracy() -> Verdict {
    let checks: Vec<(f64, Equilibrium, f64)> = [5.0, 6.0]
        .into_iter()
        .map(|b| (b, solve(b, 0.0, 1.0), solve_benchmark(b).unwrap().profit))
        .collect();
    let passed = checks.iter().all(|(_, e, bench)| {
        e.stage2.femto_price == 1.0
            && e.stage1.femto_band == 0.0
            && (e.profit_macro - bench).abs() <= DEGENERATE_PROFIT_TOL
    });
    let detail = checks
        .iter()
        .map(|(b, e, bench)| {
            format!(
                "B={b}: {} p_F={:.4} B_F={:.4} profit gap {:.2e}",
                e.regime,
                e.stage2.femto_price,
                e.stage1.femto_band,
                e.profit_macro - bench
            )
        })
        .collect::<Vec<_>>()
        .join("; ");
    verdict(passed, detail)
}

fn main() {
    let criteria: [Criterion; 12] = [
        ("regime boundary at C=0, eta=1", regime_boundary),
        ("boundary invariant in coverage", coverage_invariance),
        ("profit uplift at B=0.1", profit_uplift),
        ("macro price dominates benchmark", price_dominance),
        ("boundary vs cost shape", cost_boundary_shape),
        ("consumer-surplus crossing in C", cs_crossing),
        ("welfare dominance in C", welfare_dominance),
        ("per-user payoff crossing at B=2.1", per_user_crossing),
        ("oracle equivalence", oracle_equivalence),
        ("benchmark monotonicity and residual", benchmark_properties),
        ("threshold ordering and gap growth", threshold_ordering),
        ("degeneracy to benchmark at large B", degeneracy),
    ];
    let mut failed = Vec::new();
    for (i, (name, check)) in criteria.iter().enumerate() {
        let start = Instant::now();
        let v = check();
        let tag = if v.passed { "PASS" } else { "FAIL" };
        println!(
            "[{tag}] {:>2}. {name}: {} ({:.1} s)",
            i + 1,
            v.detail,
            start.elapsed().as_secs_f64()
        );
        if !v.passed {
            failed.push(i + 1);
        }
    }
    println!("acceptance: {} of {} criteria passed", criteria.len() - failed.len(), criteria.len());
    if !failed.is_empty() {
        println!("failed criteria: {failed:?}");
        std::process::exit(1);
    }
}
