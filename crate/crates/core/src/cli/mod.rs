//! Command-line front end: single solves, sweeps, boundary search and the
//! oracle suite, with CSV and SVG output.

pub mod config;
pub mod output;
pub mod svg;

use std::ffi::OsString;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use rayon::prelude::*;

use crate::benchmark::solve_benchmark;
use crate::error::MarketError;
use crate::model::MarketParams;
use crate::oracle::verify_all;
use crate::quadrature::QuadratureConfig;
use crate::stage1::{find_regime_boundary, StageOneSolverConfig};
use crate::welfare::payoff_curve;

use config::FileConfig;
use output::{benchmark_record, to_csv, ScenarioRow, BENCHMARK_HEADER, EQUILIBRIUM_HEADER};

pub const EXIT_OK: i32 = 0;
pub const EXIT_VERIFY: i32 = 1;
pub const EXIT_DOMAIN: i32 = 2;
pub const EXIT_SOLVER: i32 = 3;
pub const EXIT_IO: i32 = 4;

const DEFAULT_CAPACITY: f64 = 1.1;
const BOUNDARY_TOL: f64 = 0.005;

#[derive(Debug)]
pub struct CliError {
    pub code: i32,
    pub message: String,
}

impl CliError {
    pub fn domain(message: impl Into<String>) -> Self {
        Self {
            code: EXIT_DOMAIN,
            message: message.into(),
        }
    }

    pub fn io(message: impl Into<String>) -> Self {
        Self {
            code: EXIT_IO,
            message: message.into(),
        }
    }
}

impl From<MarketError> for CliError {
    fn from(e: MarketError) -> Self {
        let code = match e {
            MarketError::Domain(_) | MarketError::UnsupportedCombination { .. } | MarketError::Infeasible(_) => {
                EXIT_DOMAIN
            }
            MarketError::NonConvergence { .. } | MarketError::Bracket { .. } => EXIT_SOLVER,
        };
        Self {
            code,
            message: e.to_string(),
        }
    }
}

#[derive(Debug, Parser)]
#[command(name = "femtomarket", version, about = "Macrocell/femtocell spectrum leasing equilibria")]
pub struct Cli {
    /// Write CSV here instead of standard output.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Also write an SVG plot next to the CSV file.
    #[arg(long, global = true)]
    svg: bool,
    /// Flat TOML file of flag values; flags given on the command line win.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Macrocell-only market at one capacity.
    Benchmark {
        #[arg(long = "B", allow_negative_numbers = true)]
        capacity: Option<f64>,
    },
    /// Full equilibrium and welfare for one scenario.
    Equilibrium(ScenarioArgs),
    /// One equilibrium row per value of the swept parameter.
    Sweep {
        #[arg(long, value_enum)]
        param: Option<SweepParam>,
        #[arg(long, allow_negative_numbers = true)]
        from: Option<f64>,
        #[arg(long, allow_negative_numbers = true)]
        to: Option<f64>,
        #[arg(long)]
        steps: Option<usize>,
        #[command(flatten)]
        fixed: ScenarioArgs,
    },
    /// Smallest capacity at which the macrocell stops leasing.
    Boundary {
        #[arg(long = "C", allow_negative_numbers = true)]
        cost: Option<f64>,
        #[arg(long, allow_negative_numbers = true)]
        eta: Option<f64>,
        /// Lower end of the capacity bracket.
        #[arg(long, allow_negative_numbers = true)]
        from: Option<f64>,
        /// Upper end of the capacity bracket.
        #[arg(long, allow_negative_numbers = true)]
        to: Option<f64>,
    },
    /// Closed-form vs brute-force cross-checks on random scenarios.
    Verify {
        #[arg(long)]
        samples: Option<usize>,
        #[arg(long)]
        seed: Option<u64>,
    },
}

#[derive(Debug, Clone, Args)]
struct ScenarioArgs {
    #[arg(long = "B", allow_negative_numbers = true)]
    capacity: Option<f64>,
    #[arg(long = "C", allow_negative_numbers = true)]
    cost: Option<f64>,
    #[arg(long, allow_negative_numbers = true)]
    eta: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum SweepParam {
    #[value(name = "B")]
    Capacity,
    #[value(name = "C")]
    Cost,
    #[value(name = "eta")]
    Coverage,
}

impl SweepParam {
    fn label(self) -> &'static str {
        match self {
            SweepParam::Capacity => "B",
            SweepParam::Cost => "C",
            SweepParam::Coverage => "eta",
        }
    }

    fn default_range(self) -> (f64, f64, usize) {
        match self {
            SweepParam::Capacity => (0.1, 6.0, 60),
            SweepParam::Cost => (0.0, 0.9, 46),
            SweepParam::Coverage => (0.1, 1.0, 10),
        }
    }
}

/// Parameter values of a sweep, evenly spaced with both ends included.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SweepSpec {
    pub parameter: SweepParam,
    pub from: f64,
    pub to: f64,
    pub steps: usize,
    pub fixed: MarketParams,
}

impl SweepSpec {
    pub fn new(parameter: SweepParam, from: f64, to: f64, steps: usize, fixed: MarketParams) -> Result<Self, CliError> {
        if !(from.is_finite() && to.is_finite() && from < to) {
            return Err(CliError::domain(format!("need from < to, got {from} and {to}")));
        }
        if steps < 2 {
            return Err(CliError::domain(format!("need at least 2 steps, got {steps}")));
        }
        let spec = Self {
            parameter,
            from,
            to,
            steps,
            fixed,
        };
        spec.params_at(from)?;
        spec.params_at(to)?;
        Ok(spec)
    }

    pub fn values(&self) -> Vec<f64> {
        let n = self.steps - 1;
        (0..=n)
            .map(|i| {
                if i == n {
                    self.to
                } else {
                    self.from + (self.to - self.from) * i as f64 / n as f64
                }
            })
            .collect()
    }

    pub fn params_at(&self, value: f64) -> Result<MarketParams, CliError> {
        let f = &self.fixed;
        let p = match self.parameter {
            SweepParam::Capacity => MarketParams::new(value, f.cost(), f.coverage()),
            SweepParam::Cost => MarketParams::new(f.capacity(), value, f.coverage()),
            SweepParam::Coverage => MarketParams::new(f.capacity(), f.cost(), value),
        };
        Ok(p?)
    }
}

/// Runs the command line given in `args` (program name first) and returns
/// the process exit code.
pub fn run_from<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return match e.exit_code() {
                0 => EXIT_OK,
                _ => EXIT_DOMAIN,
            };
        }
    };
    match execute(&cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {}", e.message);
            e.code
        }
    }
}

pub fn run() -> i32 {
    run_from(std::env::args_os())
}

struct Settings {
    file: FileConfig,
    out: Option<PathBuf>,
    svg: bool,
}

impl Settings {
    fn scenario(&self, args: &ScenarioArgs) -> Result<MarketParams, CliError> {
        let capacity = args.capacity.or(self.file.capacity).unwrap_or(DEFAULT_CAPACITY);
        let cost = args.cost.or(self.file.cost).unwrap_or(0.0);
        let eta = args.eta.or(self.file.eta).unwrap_or(1.0);
        Ok(MarketParams::new(capacity, cost, eta)?)
    }

    fn svg_path(&self) -> Result<Option<PathBuf>, CliError> {
        if !self.svg {
            return Ok(None);
        }
        match &self.out {
            Some(out) => Ok(Some(out.with_extension("svg"))),
            None => Err(CliError::domain("--svg needs --out to name the plot file")),
        }
    }
}

fn execute(cli: &Cli) -> Result<i32, CliError> {
    let file = match &cli.config {
        Some(path) => FileConfig::load(path)?,
        None => FileConfig::default(),
    };
    let settings = Settings {
        out: cli.out.clone().or_else(|| file.out.clone()),
        svg: cli.svg || file.svg.unwrap_or(false),
        file,
    };
    match &cli.command {
        Command::Benchmark { capacity } => cmd_benchmark(&settings, *capacity),
        Command::Equilibrium(args) => cmd_equilibrium(&settings, args),
        Command::Sweep {
            param,
            from,
            to,
            steps,
            fixed,
        } => {
            let parameter = match param {
                Some(p) => *p,
                None => match &settings.file.param {
                    Some(s) => SweepParam::from_str(s, false)
                        .map_err(|_| CliError::domain(format!("unknown sweep parameter {s:?}")))?,
                    None => SweepParam::Capacity,
                },
            };
            let (d_from, d_to, d_steps) = parameter.default_range();
            let spec = SweepSpec::new(
                parameter,
                from.or(settings.file.from).unwrap_or(d_from),
                to.or(settings.file.to).unwrap_or(d_to),
                steps.or(settings.file.steps).unwrap_or(d_steps),
                settings.scenario(fixed)?,
            )?;
            cmd_sweep(&settings, &spec)
        }
        Command::Boundary { cost, eta, from, to } => {
            let cost = cost.or(settings.file.cost).unwrap_or(0.0);
            let eta = eta.or(settings.file.eta).unwrap_or(1.0);
            MarketParams::new(1.0, cost, eta)?;
            let lo = from.or(settings.file.from).unwrap_or(1.0);
            let hi = to.or(settings.file.to).unwrap_or(8.0);
            cmd_boundary(cost, eta, lo, hi)
        }
        Command::Verify { samples, seed } => cmd_verify(
            samples.or(settings.file.samples).unwrap_or(200),
            seed.or(settings.file.seed).unwrap_or(1),
        ),
    }
}

fn write_file(path: &Path, text: &str) -> Result<(), CliError> {
    std::fs::write(path, text).map_err(|e| CliError::io(format!("cannot write {}: {e}", path.display())))
}

/// Sends CSV to `--out` when given, otherwise to standard output.
fn emit_csv(settings: &Settings, text: &str) -> Result<(), CliError> {
    match &settings.out {
        Some(path) => write_file(path, text),
        None => std::io::stdout()
            .write_all(text.as_bytes())
            .map_err(|e| CliError::io(format!("cannot write to stdout: {e}"))),
    }
}

fn cmd_benchmark(settings: &Settings, capacity: Option<f64>) -> Result<i32, CliError> {
    let capacity = capacity.or(settings.file.capacity).unwrap_or(DEFAULT_CAPACITY);
    let b = solve_benchmark(capacity)?;
    if settings.svg {
        eprintln!("note: benchmark has no plot; --svg ignored");
    }
    let text = to_csv(&BENCHMARK_HEADER, &[benchmark_record(&b)]);
    emit_csv(settings, &text)?;
    if settings.out.is_some() {
        println!(
            "B={} p_M_bench={} profit={} served_fraction={}",
            b.capacity, b.price, b.profit, b.served_fraction
        );
    }
    Ok(EXIT_OK)
}

fn solve_row(params: &MarketParams) -> Result<ScenarioRow, CliError> {
    let row = ScenarioRow::solve(params, &StageOneSolverConfig::default(), &QuadratureConfig::default())?;
    row.validate()?;
    Ok(row)
}

fn cmd_equilibrium(settings: &Settings, args: &ScenarioArgs) -> Result<i32, CliError> {
    let params = settings.scenario(args)?;
    let svg_path = settings.svg_path()?;
    let row = solve_row(&params)?;
    emit_csv(settings, &to_csv(&EQUILIBRIUM_HEADER, &[row.record()]))?;
    if settings.out.is_some() {
        let e = &row.equilibrium;
        println!(
            "{} p_M={} p_F={} B_F={} profit_macro={} profit_femto={} cs_dual={} cs_bench={}",
            e.regime,
            e.stage1.macro_price,
            e.stage2.femto_price,
            e.stage1.femto_band,
            e.profit_macro,
            e.profit_femto,
            row.dual.consumer_surplus,
            row.bench.consumer_surplus
        );
    }
    if let Some(path) = svg_path {
        let thetas: Vec<f64> = (0..=200).map(|i| i as f64 / 200.0).collect();
        let curve = payoff_curve(&row.equilibrium, &params, &thetas)?;
        let panel = svg::Panel::new(
            "user payoff",
            vec![
                ("dual", curve.iter().map(|s| s.dual).collect()),
                ("benchmark", curve.iter().map(|s| s.benchmark).collect()),
            ],
        );
        write_file(&path, &svg::render(&thetas, "theta", &[panel]))?;
    }
    Ok(EXIT_OK)
}

fn sweep_plot(spec: &SweepSpec, rows: &[ScenarioRow]) -> String {
    let xs = spec.values();
    let col = |f: &dyn Fn(&ScenarioRow) -> f64| rows.iter().map(f).collect::<Vec<f64>>();
    let panels = [
        svg::Panel::new(
            "prices",
            vec![
                ("p_M", col(&|r| r.equilibrium.stage1.macro_price)),
                ("p_F", col(&|r| r.equilibrium.stage2.femto_price)),
                ("p_M bench", col(&|r| r.benchmark.price)),
            ],
        ),
        svg::Panel::new(
            "bands",
            vec![
                ("B_F", col(&|r| r.equilibrium.stage1.femto_band)),
                ("B_M", col(&|r| r.equilibrium.stage1.macro_band)),
                ("B_R", col(&|r| r.equilibrium.stage2.leased_band)),
            ],
        ),
        svg::Panel::new(
            "profits",
            vec![
                ("macro", col(&|r| r.equilibrium.profit_macro)),
                ("femto", col(&|r| r.equilibrium.profit_femto)),
                ("benchmark", col(&|r| r.bench.profit_macro)),
            ],
        ),
        svg::Panel::new(
            "surplus",
            vec![
                ("CS dual", col(&|r| r.dual.consumer_surplus)),
                ("CS bench", col(&|r| r.bench.consumer_surplus)),
                ("SW dual", col(&|r| r.dual.social_welfare)),
                ("SW bench", col(&|r| r.bench.social_welfare)),
            ],
        ),
    ];
    svg::render(&xs, spec.parameter.label(), &panels)
}

fn cmd_sweep(settings: &Settings, spec: &SweepSpec) -> Result<i32, CliError> {
    let svg_path = settings.svg_path()?;
    let params: Vec<MarketParams> = spec
        .values()
        .into_iter()
        .map(|v| spec.params_at(v))
        .collect::<Result<_, _>>()?;
    let results: Vec<Result<ScenarioRow, CliError>> = params.par_iter().map(solve_row).collect();
    let rows: Vec<ScenarioRow> = results.into_iter().collect::<Result<_, _>>()?;
    let records: Vec<Vec<String>> = rows.iter().map(ScenarioRow::record).collect();
    emit_csv(settings, &to_csv(&EQUILIBRIUM_HEADER, &records))?;
    if let Some(path) = svg_path {
        write_file(&path, &sweep_plot(spec, &rows))?;
    }
    if let Some(out) = &settings.out {
        println!("{} rows over {} written to {}", rows.len(), spec.parameter.label(), out.display());
    }
    Ok(EXIT_OK)
}

fn cmd_boundary(cost: f64, eta: f64, lo: f64, hi: f64) -> Result<i32, CliError> {
    let b = find_regime_boundary(cost, eta, lo, hi, BOUNDARY_TOL, &StageOneSolverConfig::default())?;
    println!("{b:.2}");
    Ok(EXIT_OK)
}

fn cmd_verify(samples: usize, seed: u64) -> Result<i32, CliError> {
    let report = verify_all(samples, seed);
    println!(
        "samples={} seed={} max_profit_deviation={:e} max_price_cells={} mc_within={}/{} failures={}",
        report.samples,
        report.seed,
        report.max_abs_deviation,
        report.max_price_cells,
        report.mc_within,
        report.mc_estimates,
        report.failures.len()
    );
    for f in &report.failures {
        println!("FAIL {}: {} expected {} got {}", f.check, f.input, f.expected, f.got);
    }
    Ok(if report.passed() { EXIT_OK } else { EXIT_VERIFY })
}
