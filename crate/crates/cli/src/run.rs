use std::fs;
use std::io::{self, Write};
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use idde_core::analysis::{
    input_probe, positivity_test, theorem2_estimate, theorem3_estimate, verify_exponential_estimate,
    EstimateTarget, InputClass, INV_E,
};
use idde_core::expansion::compare_on_grid;
use idde_core::fundamental::{check_lemma1, FundamentalTable, Kind, Lemma1Report};
use idde_core::integrator::solve;
use idde_core::model::{check_hypotheses, ValidatedSpec};
use idde_core::representation::representation_residual_at;
use idde_core::MeshOptions;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::grid::{parse_grid, parse_list};
use crate::problem::{parse_problem_file, ParseError};

#[derive(Debug, Parser)]
#[command(name = "idde", version, about = "Scalar linear impulsive delay differential equations")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

/// A list of times given as `a:b:h` or `a,b,c`.
#[derive(Debug, Clone, PartialEq)]
pub struct Points(pub Vec<f64>);

fn grid_arg(s: &str) -> Result<Points, String> {
    parse_grid(s).map(Points)
}

fn list_arg(s: &str) -> Result<Points, String> {
    parse_list(s).map(Points)
}

/// Flags shared by every command.
#[derive(Debug, Clone, Args)]
pub struct RunConfig {
    /// Problem file.
    #[arg(long)]
    pub problem: PathBuf,
    #[arg(long, allow_negative_numbers = true)]
    pub horizon: f64,
    /// Base integration step.
    #[arg(long, default_value_t = 1e-3)]
    pub step: f64,
    /// Depth of breakpoint propagation through the delays.
    #[arg(long, default_value_t = 3)]
    pub depth: usize,
    #[arg(long, default_value_t = 1e-6)]
    pub tol: f64,
    /// CSV destination. Without it, `solve`, `fundamental`, `cauchy` and
    /// `expand` print CSV on stdout and other commands print no CSV.
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Time grid `start:stop:step`.
    #[arg(long, value_parser = grid_arg)]
    pub grid: Option<Points>,
}

impl RunConfig {
    fn check(&self) -> Result<(), CliError> {
        let positive = |v: f64| v > 0.0 && v.is_finite();
        if !positive(self.horizon) {
            return Err(CliError::Usage(format!("horizon must be positive, got {}", self.horizon)));
        }
        if !positive(self.step) {
            return Err(CliError::Usage(format!("step must be positive, got {}", self.step)));
        }
        if !positive(self.tol) {
            return Err(CliError::Usage(format!("tolerance must be positive, got {}", self.tol)));
        }
        Ok(())
    }

    fn mesh(&self) -> MeshOptions {
        MeshOptions { base_step: self.step, propagation_depth: self.depth }
    }

    /// `--grid`, or `horizon * i / n` for `i` in `from..=n`.
    fn grid_or(&self, from: usize, n: usize) -> Vec<f64> {
        match &self.grid {
            Some(p) => p.0.clone(),
            None => (from..=n).map(|i| self.horizon * i as f64 / n as f64).collect(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Check {
    Lemma1,
    Theorem5,
    Representation,
    Positivity,
    Estimate,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Class {
    Bounded,
    Vanishing,
    Exponential,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Solves the problem; CSV `t,x,is_impulse,left_limit`.
    Solve(RunConfig),
    /// Fundamental function columns G(., s); CSV `s,t,value`.
    Fundamental {
        #[command(flatten)]
        config: RunConfig,
        /// Column start times, e.g. `0,0.5`. Defaults to 0, which gives X.
        #[arg(long, value_parser = list_arg)]
        s: Option<Points>,
    },
    /// Columns C(., s) of the equation without impulses; CSV `s,t,value`.
    Cauchy {
        #[command(flatten)]
        config: RunConfig,
        #[arg(long, value_parser = list_arg)]
        s: Option<Points>,
    },
    /// Direct G against both reconstructions from C on a (t, s) grid.
    Expand {
        #[command(flatten)]
        config: RunConfig,
        /// Start times; defaults to `horizon * i / 10`, i = 0..9.
        #[arg(long, value_parser = grid_arg)]
        s_grid: Option<Points>,
    },
    /// Runs one numerical check; exit status 1 when it fails.
    Verify {
        #[arg(value_enum)]
        check: Check,
        #[command(flatten)]
        config: RunConfig,
        #[arg(long, value_parser = grid_arg)]
        s_grid: Option<Points>,
        /// Number of random triples for `lemma1`.
        #[arg(long, default_value_t = 200)]
        trials: usize,
        /// Quadrature step for `representation`.
        #[arg(long)]
        quad_step: Option<f64>,
        /// Column start for `estimate`; without it X is checked.
        #[arg(long)]
        column: Option<f64>,
    },
    /// Solves with random inputs of one class.
    Probe {
        #[arg(value_enum)]
        class: Class,
        #[command(flatten)]
        config: RunConfig,
        #[arg(long, default_value_t = 50)]
        trials: usize,
        #[arg(long, default_value_t = 1.0)]
        amplitude: f64,
        /// Decay rate of the exponential class.
        #[arg(long, default_value_t = 0.5)]
        lambda: f64,
    },
}

impl Command {
    fn config(&self) -> &RunConfig {
        match self {
            Command::Solve(c) => c,
            Command::Fundamental { config, .. }
            | Command::Cauchy { config, .. }
            | Command::Expand { config, .. }
            | Command::Verify { config, .. }
            | Command::Probe { config, .. } => config,
        }
    }
}

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error("{path}: {source}")]
    Problem { path: String, source: ParseError },
    #[error(transparent)]
    Core(#[from] idde_core::Error),
    #[error("{path}: {source}")]
    Io { path: String, source: io::Error },
}

impl CliError {
    /// 1 when the problem is fine but the hypotheses of a check fail, 2 for
    /// everything else.
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Core(idde_core::Error::HypothesesNotMet(_))
            | CliError::Core(idde_core::Error::InsufficientSamples { .. }) => 1,
            _ => 2,
        }
    }
}

/// Where output goes. Tests pass buffers.
pub struct Streams<'a> {
    pub out: &'a mut dyn Write,
    pub err: &'a mut dyn Write,
}

fn io_err(path: &str) -> impl FnOnce(io::Error) -> CliError + '_ {
    move |source| CliError::Io { path: path.to_string(), source }
}

fn num(v: f64) -> String {
    format!("{v:.16e}")
}

/// Report values: floats switch to exponent notation when very large or small.
trait ReportValue {
    fn text(&self) -> String;
}

impl ReportValue for f64 {
    fn text(&self) -> String {
        let a = self.abs();
        if a == 0.0 || !a.is_finite() || (1e-4..1e6).contains(&a) {
            format!("{self}")
        } else {
            format!("{self:e}")
        }
    }
}

macro_rules! display_value {
    ($($t:ty),*) => {$(
        impl ReportValue for $t {
            fn text(&self) -> String {
                self.to_string()
            }
        }
    )*};
}

display_value!(usize, u64, bool, &str, String);

impl<T: ReportValue> ReportValue for &T {
    fn text(&self) -> String {
        (**self).text()
    }
}

fn csv_text(header: &str, rows: impl IntoIterator<Item = Vec<String>>) -> String {
    let mut s = String::from(header);
    s.push('\n');
    for row in rows {
        s.push_str(&row.join(","));
        s.push('\n');
    }
    s
}

struct Output<'a, 'b> {
    io: &'a mut Streams<'b>,
    out: Option<PathBuf>,
    csv_on_stdout: bool,
    report: String,
}

impl Output<'_, '_> {
    fn line(&mut self, key: &str, value: impl ReportValue) {
        self.report.push_str(&format!("{key} = {}\n", value.text()));
    }

    /// Writes CSV to `--out`, or to stdout for table commands.
    fn csv(&mut self, text: &str) -> Result<(), CliError> {
        match &self.out {
            Some(path) => {
                let p = path.display().to_string();
                fs::write(path, text).map_err(io_err(&p))
            }
            None if self.csv_on_stdout => self.io.out.write_all(text.as_bytes()).map_err(io_err("stdout")),
            None => Ok(()),
        }
    }

    /// The report goes to stdout unless stdout already carries CSV.
    fn finish(self) -> Result<(), CliError> {
        let to_err = self.csv_on_stdout && self.out.is_none();
        let w: &mut dyn Write = if to_err { self.io.err } else { self.io.out };
        w.write_all(self.report.as_bytes()).map_err(io_err("output"))
    }
}

pub fn load_problem(path: &PathBuf) -> Result<ValidatedSpec, CliError> {
    let p = path.display().to_string();
    let text = fs::read_to_string(path).map_err(io_err(&p))?;
    parse_problem_file(&text).map_err(|source| CliError::Problem { path: p, source })
}

/// Runs a parsed command line. `Ok(true)` is success or a passed check,
/// `Ok(false)` a failed check.
pub fn run(cli: &Cli, io: &mut Streams<'_>) -> Result<bool, CliError> {
    let config = cli.command.config();
    config.check()?;
    let spec = load_problem(&config.problem)?;
    let opts = config.mesh();
    let horizon = config.horizon;
    let table_command = matches!(
        cli.command,
        Command::Solve(_) | Command::Fundamental { .. } | Command::Cauchy { .. } | Command::Expand { .. }
    );
    let mut o = Output { io, out: config.out.clone(), csv_on_stdout: table_command, report: String::new() };

    let pass = match &cli.command {
        Command::Solve(_) => {
            let x = solve(&spec, horizon, &opts)?;
            let rows: Vec<Vec<String>> = match &config.grid {
                Some(g) => g
                    .0
                    .iter()
                    .map(|&t| {
                        let v = x.eval(t).ok_or_else(|| out_of_range(t, horizon))?;
                        let jump = spec.impulses.index_of(t).is_some();
                        let left = if jump { num(x.eval_left(t).unwrap_or(f64::NAN)) } else { String::new() };
                        Ok(vec![num(t), num(v), u8::from(jump).to_string(), left])
                    })
                    .collect::<Result<_, CliError>>()?,
                None => (0..x.nodes().len())
                    .map(|i| {
                        let left = x.left_limit(i).map(num).unwrap_or_default();
                        vec![num(x.nodes()[i]), num(x.values()[i]), u8::from(x.is_impulse(i)).to_string(), left]
                    })
                    .collect(),
            };
            o.line("nodes", x.nodes().len());
            o.line("max_abs", x.max_abs());
            o.line("x_end", x.eval(horizon).unwrap_or(f64::NAN));
            o.csv(&csv_text("t,x,is_impulse,left_limit", rows))?;
            true
        }
        Command::Fundamental { s, .. } | Command::Cauchy { s, .. } => {
            let kind = if matches!(cli.command, Command::Fundamental { .. }) { Kind::Impulsive } else { Kind::NonImpulsive };
            let starts = s.as_ref().map_or_else(|| vec![0.0], |p| p.0.clone());
            let table = FundamentalTable::build(&spec, &starts, horizon, kind, &opts)?;
            let rows: Vec<Vec<String>> = match &config.grid {
                Some(g) => {
                    let mut rows = Vec::new();
                    for (c, &s) in starts.iter().enumerate() {
                        for &t in &g.0 {
                            let v = table.value(t, c).ok_or_else(|| out_of_range(t, horizon))?;
                            rows.push(vec![num(s), num(t), num(v)]);
                        }
                    }
                    rows
                }
                None => table.rows().map(|(s, t, v)| vec![num(s), num(t), num(v)]).collect(),
            };
            for (col, &s) in table.columns().iter().zip(&starts) {
                o.line(&format!("column {s} min"), col.min_value());
                let changes = col.sign_changes();
                o.line(&format!("column {s} sign_changes"), changes.len());
                if let Some(first) = changes.first() {
                    o.line(&format!("column {s} first_sign_change"), first);
                }
            }
            o.csv(&csv_text("s,t,value", rows))?;
            true
        }
        Command::Expand { s_grid, .. } => {
            let (_, max) = theorem5(&spec, config, s_grid, &opts, &mut o)?;
            max.is_finite()
        }
        Command::Verify { check, s_grid, trials, quad_step, column, .. } => match check {
            Check::Theorem5 => {
                let (_, max) = theorem5(&spec, config, s_grid, &opts, &mut o)?;
                let pass = max <= config.tol;
                o.line("tolerance", config.tol);
                o.line("pass", pass);
                pass
            }
            Check::Lemma1 => lemma1(&spec, config, *trials, &opts, &mut o)?,
            Check::Representation => representation(&spec, config, *quad_step, &opts, &mut o)?,
            Check::Positivity => {
                let report = positivity_test(&spec, horizon, config.step)?;
                o.line("max_functional", report.max_functional);
                o.line("at", report.at);
                o.line("threshold", INV_E);
                o.line("pass", report.pass);
                if !report.pass {
                    o.line("note", "the condition is only sufficient; failing it proves nothing");
                }
                let rows = report.samples.iter().map(|&(t, v)| vec![num(t), num(v)]);
                o.csv(&csv_text("t,functional", rows))?;
                report.pass
            }
            Check::Estimate => estimate(&spec, config, *column, &opts, &mut o)?,
        },
        Command::Probe { class, trials, amplitude, lambda, .. } => {
            let class = match class {
                Class::Bounded => InputClass::Bounded { amplitude: *amplitude },
                Class::Vanishing => InputClass::Vanishing { amplitude: *amplitude },
                Class::Exponential => InputClass::Exponential { p: *amplitude, lambda: *lambda },
            };
            let r = input_probe(&spec, class, *trials, horizon, config.seed, &opts)?;
            o.line("class", format!("{class:?}"));
            o.line("seed", r.seed);
            o.line("trials", r.trials.len());
            o.line("max_sup", r.max_sup);
            o.line("max_tail", r.max_tail);
            if let Some(min_rate) = r.trials.iter().filter_map(|s| s.fit.map(|f| f.rate)).reduce(f64::min) {
                o.line("min_fitted_rate", min_rate);
            }
            o.line("verdict", r.verdict);
            let rows = r.trials.iter().enumerate().map(|(i, s)| {
                let (amp, rate) = s.fit.map_or((String::new(), String::new()), |f| (num(f.amplitude), num(f.rate)));
                vec![i.to_string(), num(s.sup_abs), num(s.tail_sup), num(s.sup_forcing), num(s.sup_jump), amp, rate]
            });
            o.csv(&csv_text("trial,sup_abs,tail_sup,sup_forcing,sup_jump,fit_amplitude,fit_rate", rows))?;
            r.verdict
        }
    };
    o.finish()?;
    Ok(pass)
}

fn out_of_range(t: f64, end: f64) -> CliError {
    CliError::Core(idde_core::Error::OutOfRange { t, start: 0.0, end })
}

fn theorem5(
    spec: &ValidatedSpec,
    config: &RunConfig,
    s_grid: &Option<Points>,
    opts: &MeshOptions,
    o: &mut Output<'_, '_>,
) -> Result<(usize, f64), CliError> {
    let t_grid = config.grid_or(1, 10);
    let s_grid = match s_grid {
        Some(p) => p.0.clone(),
        None => (0..10).map(|i| config.horizon * i as f64 / 10.0).collect(),
    };
    let rows = compare_on_grid(spec, &t_grid, &s_grid, opts)?;
    let max = rows.iter().map(|r| r.abs_error).fold(0.0, f64::max);
    o.line("pairs", rows.len());
    o.line("expansion_skipped", rows.iter().filter(|r| r.expansion.is_none()).count());
    o.line("max_abs_error", max);
    let csv = rows.iter().map(|r| {
        vec![num(r.t), num(r.s), num(r.direct), r.expansion.map(num).unwrap_or_default(), num(r.recursion), num(r.abs_error)]
    });
    o.csv(&csv_text("t,s,G_direct,G_expansion,G_recursion,abs_error", csv))?;
    Ok((rows.len(), max))
}

fn lemma1(
    spec: &ValidatedSpec,
    config: &RunConfig,
    trials: usize,
    opts: &MeshOptions,
    o: &mut Output<'_, '_>,
) -> Result<bool, CliError> {
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let triples: Vec<(f64, f64, f64)> = (0..trials)
        .map(|_| {
            let mut v = [0.0; 3].map(|_| rng.random_range(0.0..=config.horizon));
            v.sort_by(f64::total_cmp);
            (v[0], v[1], v[2])
        })
        .collect();
    let report = check_lemma1(spec, &triples, config.tol, opts)?;
    match &report {
        Lemma1Report::HypothesesNotMet(why) => o.line("hypotheses_not_met", why),
        Lemma1Report::Checked { triples, violations, worst_product_margin, worst_lower_margin } => {
            o.line("triples", triples);
            o.line("violations", violations);
            o.line("worst_product_margin", worst_product_margin);
            o.line("worst_lower_margin", worst_lower_margin);
        }
    }
    o.line("seed", config.seed);
    o.line("pass", report.passed());
    let rows = triples.iter().map(|&(s, z, t)| vec![num(s), num(z), num(t)]);
    o.csv(&csv_text("s,z,t", rows))?;
    Ok(report.passed())
}

fn representation(
    spec: &ValidatedSpec,
    config: &RunConfig,
    quad_step: Option<f64>,
    opts: &MeshOptions,
    o: &mut Output<'_, '_>,
) -> Result<bool, CliError> {
    let quad = match quad_step {
        Some(q) => q,
        None => {
            let rho = check_hypotheses(spec, config.horizon)?.rho;
            rho.map_or(0.01, |r| r.min(0.01))
        }
    };
    let targets = config.grid_or(1, 10);
    let report = representation_residual_at(spec, &targets, opts, quad)?;
    let pass = report.max_error <= config.tol;
    o.line("quadrature_step", quad);
    o.line("max_error", report.max_error);
    o.line("tolerance", config.tol);
    o.line("pass", pass);
    let rows = report.rows.iter().map(|r| vec![num(r.t), num(r.direct), num(r.representation), num(r.abs_error)]);
    o.csv(&csv_text("t,direct,representation,abs_error", rows))?;
    Ok(pass)
}

fn estimate(
    spec: &ValidatedSpec,
    config: &RunConfig,
    column: Option<f64>,
    opts: &MeshOptions,
    o: &mut Output<'_, '_>,
) -> Result<bool, CliError> {
    let grid = config.grid_or(0, 200);
    let (report, target) = match column {
        None => (theorem2_estimate(spec, config.horizon, &grid, opts)?, EstimateTarget::Fundamental),
        Some(s) => (theorem3_estimate(spec, config.horizon, &grid, opts)?, EstimateTarget::Column(s)),
    };
    let v = verify_exponential_estimate(spec, &report, target, &grid, config.tol, opts)?;
    o.line("provenance", format!("{:?}", report.provenance));
    o.line("k", report.k);
    o.line("nu", report.nu);
    o.line("N", report.n);
    if let Some(sigma) = report.sigma {
        o.line("sigma", sigma);
    }
    match report.min_gap {
        Some(gap) => o.line("min_gap", gap),
        None => o.line("min_gap", "none"),
    }
    o.line("checked", v.checked);
    o.line("worst_margin", v.worst_margin);
    o.line("at", v.at);
    o.line("pass", v.pass);
    Ok(v.pass)
}
