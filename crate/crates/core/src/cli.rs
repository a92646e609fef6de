//! Command-line front end: `run`, `parallel`, `sweep`, `fit` and `speedup`.
//!
//! Every command prints a summary of `key=value` lines. Data goes to the file
//! named by `--output` (written through a temporary file and renamed), or to
//! stdout when no path is given, in which case the summary moves to stderr.

use std::ffi::OsString;
use std::fmt;
use std::io::{self, Write};
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};

use crate::analysis::{
    fit_ab, load_sweep_csv, optimal_window, speedup_curve, summarize, write_speedup_csv,
    write_sweep_csv, SpeedupInputs, SweepRow,
};
use crate::error::{Error, Result};
use crate::integrators::{integrate_sequential, SchemeSpec};
use crate::io::{format_f64, write_atomic, FloatFormat};
use crate::problems::{SplitProblem, State};
use crate::timeparallel::{
    run_window, verify_against_sequential, ExecMode, RemainderStart, Variant, WindowConfig,
};

#[derive(Debug, Parser)]
#[command(name = "parawin", version, about = "Shifting-window parallel-in-time integration")]
pub struct Cli {
    /// Echo the full command line to stderr before running.
    #[arg(long, global = true)]
    pub emit_cmdline: bool,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Sequential fixed-step integration.
    Run(RunArgs),
    /// One time-parallel run.
    Parallel(ParallelArgs),
    /// Time-parallel runs over a list of window sizes.
    Sweep(SweepArgs),
    /// Least-squares fit of `I = j (a P + b)` to a sweep CSV.
    Fit(FitArgs),
    /// Speed-up model curve and optimal window.
    Speedup(SpeedupArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ProblemArg {
    Pendulum,
    SpinOrbit,
}

#[derive(Debug, Clone, Args)]
pub struct ProblemArgs {
    #[arg(long, value_enum, default_value = "pendulum")]
    pub problem: ProblemArg,
    #[arg(long, default_value_t = 0.01, allow_negative_numbers = true)]
    pub epsilon: f64,
    /// Spin-orbit secondary amplitude.
    #[arg(long, default_value_t = 1e-4, allow_negative_numbers = true)]
    pub alpha: f64,
    /// Spin-orbit phase in radians.
    #[arg(long, default_value_t = 0.2, allow_negative_numbers = true)]
    pub phi: f64,
    #[arg(long, default_value_t = 1.0, allow_negative_numbers = true)]
    pub p0: f64,
    #[arg(long, default_value_t = 0.0, allow_negative_numbers = true)]
    pub q0: f64,
    /// `leapfrog`, `sabaN` or `sbabN` with N in 1..=10.
    #[arg(long, default_value = "sbab4", value_parser = parse_scheme)]
    pub scheme: SchemeSpec,
    /// Fine step size.
    #[arg(long, default_value_t = 0.01, allow_negative_numbers = true)]
    pub dt: f64,
    /// Number of fine steps N.
    #[arg(long)]
    pub steps: usize,
}

impl ProblemArgs {
    pub fn problem(&self) -> Result<SplitProblem> {
        for (name, v) in [("epsilon", self.epsilon), ("alpha", self.alpha), ("phi", self.phi)] {
            if !v.is_finite() {
                return Err(Error::InvalidConfig(format!("--{name} must be finite")));
            }
        }
        Ok(match self.problem {
            ProblemArg::Pendulum => SplitProblem::pendulum(self.epsilon),
            ProblemArg::SpinOrbit => SplitProblem::spin_orbit(self.epsilon, self.alpha, self.phi),
        })
    }

    pub fn initial_state(&self) -> Result<State> {
        if !(self.p0.is_finite() && self.q0.is_finite()) {
            return Err(Error::InvalidConfig("--p0 and --q0 must be finite".into()));
        }
        Ok(State::scalar(self.p0, self.q0))
    }
}

fn parse_scheme(s: &str) -> std::result::Result<SchemeSpec, String> {
    s.parse().map_err(|e: Error| e.to_string())
}

#[derive(Debug, Clone, Args)]
pub struct OutputArgs {
    /// Data output path; stdout when omitted.
    #[arg(long, short)]
    pub output: Option<PathBuf>,
    /// Also write the summary to this path.
    #[arg(long)]
    pub summary: Option<PathBuf>,
    /// Write floats as exact hexadecimal literals.
    #[arg(long)]
    pub hex_floats: bool,
}

impl OutputArgs {
    fn format(&self) -> FloatFormat {
        if self.hex_floats {
            FloatFormat::Hex
        } else {
            FloatFormat::Decimal
        }
    }
}

#[derive(Debug, Clone, Args)]
pub struct RunArgs {
    #[command(flatten)]
    pub problem: ProblemArgs,
    /// Keep every k-th step.
    #[arg(long, default_value_t = 1)]
    pub sample_every: usize,
    #[command(flatten)]
    pub out: OutputArgs,
}

#[derive(Debug, Clone, Args)]
pub struct WindowArgs {
    /// Fine steps per slice j.
    #[arg(long, short = 'j', default_value_t = 100)]
    pub substeps: usize,
    #[arg(long, value_enum, default_value = "refined")]
    pub variant: VariantArg,
    #[arg(long, value_enum, default_value = "simulated")]
    pub mode: ModeArg,
    /// Predictor threads in threaded mode (default: the window size).
    #[arg(long)]
    pub workers: Option<usize>,
    /// Iteration cap (default: 100 N / (j P)).
    #[arg(long)]
    pub max_iter: Option<usize>,
    /// Remainder baseline on a slice's first corrector pass.
    #[arg(long, value_enum, default_value = "seed")]
    pub remainder_start: RemainderArg,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum VariantArg {
    Refined,
    Sst97,
    Picard,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ModeArg {
    Simulated,
    Threaded,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum RemainderArg {
    Seed,
    Zero,
}

impl WindowArgs {
    fn config(&self, problem: &ProblemArgs, window: usize) -> Result<WindowConfig> {
        let mut cfg = WindowConfig::new(
            problem.problem()?,
            problem.scheme.clone(),
            problem.initial_state()?,
            problem.dt,
            problem.steps,
            self.substeps,
            window,
        )
        .with_variant(match self.variant {
            VariantArg::Refined => Variant::Refined,
            VariantArg::Sst97 => Variant::Sst97,
            VariantArg::Picard => Variant::Picard,
        })
        .with_mode(match self.mode {
            ModeArg::Simulated => ExecMode::Simulated,
            ModeArg::Threaded => ExecMode::Threaded,
        })
        .with_remainder_start(match self.remainder_start {
            RemainderArg::Seed => RemainderStart::Seed,
            RemainderArg::Zero => RemainderStart::Zero,
        });
        cfg.workers = self.workers;
        cfg.max_iterations = self.max_iter;
        cfg.validate()?;
        Ok(cfg)
    }
}

#[derive(Debug, Clone, Args)]
pub struct ParallelArgs {
    #[command(flatten)]
    pub problem: ProblemArgs,
    #[command(flatten)]
    pub window: WindowArgs,
    /// Window size P.
    #[arg(long, short = 'P', default_value_t = 50)]
    pub window_size: usize,
    /// Compare against a sequential run and fail (exit 4) unless identical.
    #[arg(long)]
    pub verify: bool,
    /// Iteration log CSV path.
    #[arg(long)]
    pub log: Option<PathBuf>,
    #[command(flatten)]
    pub out: OutputArgs,
}

#[derive(Debug, Clone, Args)]
pub struct SweepArgs {
    #[command(flatten)]
    pub problem: ProblemArgs,
    #[command(flatten)]
    pub window: WindowArgs,
    /// Window sizes, comma separated (e.g. `50,100,150`) or a range `50..500:50`.
    #[arg(long, value_parser = parse_window_list)]
    pub windows: WindowList,
    #[command(flatten)]
    pub out: OutputArgs,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct WindowList(pub Vec<usize>);

fn parse_window_list(s: &str) -> std::result::Result<WindowList, String> {
    let bad = || format!("invalid window list `{s}`");
    let list: Vec<usize> = if let Some((range, step)) = s.split_once(':') {
        let (lo, hi) = range.split_once("..").ok_or_else(bad)?;
        let lo: usize = lo.trim().parse().map_err(|_| bad())?;
        let hi: usize = hi.trim().parse().map_err(|_| bad())?;
        let step: usize = step.trim().parse().map_err(|_| bad())?;
        if step == 0 || lo > hi {
            return Err(bad());
        }
        (lo..=hi).step_by(step).collect()
    } else {
        s.split(',')
            .map(|p| p.trim().parse::<usize>().map_err(|_| bad()))
            .collect::<std::result::Result<_, _>>()?
    };
    if list.is_empty() || list.contains(&0) {
        return Err(bad());
    }
    Ok(WindowList(list))
}

#[derive(Debug, Clone, Args)]
pub struct FitArgs {
    /// Sweep CSV with header `P,C_dt,I_dtP,k_dtP`.
    #[arg(long, short)]
    pub input: PathBuf,
    /// Fine steps per slice j used in the sweep.
    #[arg(long, short = 'j', default_value_t = 100)]
    pub substeps: usize,
    /// Fine steps N, for the implied iteration counts.
    #[arg(long, default_value_t = 1_000_000)]
    pub steps: usize,
    #[command(flatten)]
    pub out: OutputArgs,
}

#[derive(Debug, Clone, Args)]
pub struct SpeedupArgs {
    #[arg(long, short)]
    pub a: f64,
    #[arg(long, short)]
    pub b: f64,
    #[arg(long, short = 'j', default_value_t = 100)]
    pub substeps: usize,
    /// Predictor to corrector time ratio Tp/Tc.
    #[arg(long, default_value_t = 10.0, conflicts_with_all = ["ta", "tb"])]
    pub ratio: f64,
    /// Drift evaluation time; with `--tb`, derives Tp and Tc from the cost model.
    #[arg(long, requires = "tb")]
    pub ta: Option<f64>,
    /// Kick evaluation time.
    #[arg(long, requires = "ta")]
    pub tb: Option<f64>,
    /// Largest window size on the curve.
    #[arg(long, default_value_t = 10_000)]
    pub p_max: usize,
    #[command(flatten)]
    pub out: OutputArgs,
}

/// Ordered `key=value` lines.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Summary(pub Vec<(String, String)>);

impl Summary {
    pub fn push(&mut self, key: &str, value: impl fmt::Display) {
        self.0.push((key.to_string(), value.to_string()));
    }

    pub fn get(&self, key: &str) -> Option<&str> {
        self.0.iter().find(|(k, _)| k == key).map(|(_, v)| v.as_str())
    }
}

impl fmt::Display for Summary {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (k, v) in &self.0 {
            writeln!(f, "{k}={v}")?;
        }
        Ok(())
    }
}

/// Writes data either to `path` (atomically) or to stdout.
fn emit<F>(path: Option<&Path>, body: F) -> Result<()>
where
    F: FnOnce(&mut dyn Write) -> Result<()>,
{
    match path {
        Some(path) => write_atomic(path, |w| body(w)),
        None => {
            let stdout = io::stdout();
            let mut lock = stdout.lock();
            match body(&mut lock).and_then(|_| Ok(lock.flush()?)) {
                Err(Error::Io(e)) if e.kind() == io::ErrorKind::BrokenPipe => Ok(()),
                other => other,
            }
        }
    }
}

fn problem_summary(s: &mut Summary, args: &ProblemArgs) {
    s.push("problem", args.problem().map(|p| p.name()).unwrap_or("?"));
    s.push("epsilon", args.epsilon);
    if args.problem == ProblemArg::SpinOrbit {
        s.push("alpha", args.alpha);
        s.push("phi", args.phi);
    }
    s.push("p0", args.p0);
    s.push("q0", args.q0);
    s.push("scheme", &args.scheme);
    s.push("dt", args.dt);
    s.push("steps", args.steps);
}

pub fn cmd_run(args: &RunArgs) -> Result<Summary> {
    let problem = args.problem.problem()?;
    let y0 = args.problem.initial_state()?;
    let traj = integrate_sequential(
        &problem,
        &args.problem.scheme,
        &y0,
        args.problem.dt,
        args.problem.steps,
        args.sample_every,
    )?;
    let format = args.out.format();
    emit(args.out.output.as_deref(), |w| traj.write_csv(w, format))?;
    let mut s = Summary::default();
    problem_summary(&mut s, &args.problem);
    s.push("sample_every", args.sample_every);
    s.push("samples", traj.len());
    s.push("final_time", format_f64(traj.last().t, format));
    s.push("energy_initial", format_f64(traj.energies[0], format));
    s.push("max_energy_error", format_f64(traj.max_energy_error(), format));
    Ok(s)
}

pub fn cmd_parallel(args: &ParallelArgs) -> Result<Summary> {
    let cfg = args.window.config(&args.problem, args.window_size)?;
    let format = args.out.format();
    let run = run_window(&cfg)?;
    let row = summarize(&run.log)?;
    emit(args.out.output.as_deref(), |w| run.write_csv(w, &cfg.problem, format))?;
    if let Some(path) = &args.log {
        run.log.save_csv(path, format)?;
    }
    let mut s = Summary::default();
    problem_summary(&mut s, &args.problem);
    s.push("substeps", cfg.substeps);
    s.push("window", cfg.window);
    s.push("variant", cfg.variant);
    if cfg.variant == Variant::Refined {
        s.push("remainder_start", cfg.remainder_start);
    }
    s.push("mode", cfg.mode);
    if cfg.mode == ExecMode::Threaded {
        s.push("workers", cfg.workers.unwrap_or(cfg.window));
    }
    s.push("slices", cfg.slices());
    s.push("iterations", row.k);
    s.push("mean_converged", row.c);
    s.push("iterations_per_window", row.i);
    s.push("predict_seconds", run.log.total_predict_time().as_secs_f64());
    s.push("correct_seconds", run.log.total_correct_time().as_secs_f64());
    if args.verify {
        let reference = integrate_sequential(&cfg.problem, &cfg.scheme, &cfg.y0, cfg.dt, cfg.steps, cfg.substeps)?;
        let errors = verify_against_sequential(&run.u, &reference, cfg.substeps)?;
        let max_error = errors.iter().copied().fold(0.0, f64::max);
        s.push("err_max", format_f64(max_error, format));
        if let Some(boundary) = errors.iter().position(|&e| e != 0.0) {
            return Err(Error::VerificationFailed { max_error, boundary });
        }
    }
    Ok(s)
}

pub fn cmd_sweep(args: &SweepArgs) -> Result<Summary> {
    let mut rows: Vec<SweepRow> = Vec::with_capacity(args.windows.0.len());
    for &p in &args.windows.0 {
        let cfg = args.window.config(&args.problem, p)?;
        let run = run_window(&cfg)?;
        rows.push(summarize(&run.log)?);
    }
    let format = args.out.format();
    emit(args.out.output.as_deref(), |w| write_sweep_csv(w, &rows, format))?;
    let mut s = Summary::default();
    problem_summary(&mut s, &args.problem);
    s.push("substeps", args.window.substeps);
    s.push("variant", format!("{:?}", args.window.variant).to_lowercase());
    s.push("rows", rows.len());
    Ok(s)
}

pub fn cmd_fit(args: &FitArgs) -> Result<Summary> {
    let rows = load_sweep_csv(&args.input)?;
    let fit = fit_ab(&rows, args.substeps)?;
    let format = args.out.format();
    let steps = args.steps as f64;
    emit(args.out.output.as_deref(), |w| {
        writeln!(w, "P,I_dtP,I_fit,residual,k_dtP,k_fit")?;
        for (row, res) in rows.iter().zip(&fit.residuals) {
            let p = row.p as f64;
            writeln!(
                w,
                "{},{},{},{},{},{}",
                row.p,
                format_f64(row.i, format),
                format_f64(fit.iterations_per_window(p), format),
                format_f64(*res, format),
                row.k,
                format_f64(fit.total_iterations(p, steps), format),
            )?;
        }
        Ok(())
    })?;
    let mut s = Summary::default();
    s.push("input", args.input.display());
    s.push("rows", rows.len());
    s.push("j", fit.j);
    s.push("a", format_f64(fit.a, format));
    s.push("b", format_f64(fit.b, format));
    let worst = fit.residuals.iter().map(|r| r.abs()).fold(0.0, f64::max);
    s.push("max_abs_residual", format_f64(worst, format));
    Ok(s)
}

pub fn cmd_speedup(args: &SpeedupArgs) -> Result<Summary> {
    let inp = match (args.ta, args.tb) {
        (Some(ta), Some(tb)) => SpeedupInputs::from_stage_times(args.a, args.b, args.substeps, ta, tb),
        _ => SpeedupInputs::with_ratio(args.a, args.b, args.substeps, args.ratio),
    };
    if args.p_max == 0 {
        return Err(Error::InvalidConfig("--p-max must be at least 1".into()));
    }
    let opt = optimal_window(&inp)?;
    let curve = speedup_curve(&inp, args.p_max)?;
    let format = args.out.format();
    emit(args.out.output.as_deref(), |w| write_speedup_csv(w, &curve, format))?;
    let (grid_p, grid_s) = curve
        .iter()
        .copied()
        .fold((0, f64::MIN), |best, (p, s)| if s > best.1 { (p, s) } else { best });
    let mut s = Summary::default();
    s.push("a", inp.a);
    s.push("b", inp.b);
    s.push("j", inp.j);
    s.push("tp_over_tc", inp.tp / inp.tc);
    s.push("p_cont", format_f64(opt.p_cont, format));
    s.push("p_star", opt.p_star);
    s.push("s_at_p_star", format_f64(opt.s_at_p_star, format));
    s.push("s_closed_form", format_f64(opt.s_closed_form, format));
    s.push("grid_argmax", grid_p);
    s.push("grid_max", format_f64(grid_s, format));
    s.push("bound", format_f64(opt.bound, format));
    Ok(s)
}

impl Command {
    fn out(&self) -> &OutputArgs {
        match self {
            Command::Run(a) => &a.out,
            Command::Parallel(a) => &a.out,
            Command::Sweep(a) => &a.out,
            Command::Fit(a) => &a.out,
            Command::Speedup(a) => &a.out,
        }
    }

    pub fn execute(&self) -> Result<Summary> {
        match self {
            Command::Run(a) => cmd_run(a),
            Command::Parallel(a) => cmd_parallel(a),
            Command::Sweep(a) => cmd_sweep(a),
            Command::Fit(a) => cmd_fit(a),
            Command::Speedup(a) => cmd_speedup(a),
        }
    }
}

fn quote(arg: &str) -> String {
    if !arg.is_empty() && arg.chars().all(|c| c.is_ascii_alphanumeric() || "-_./=:,+".contains(c)) {
        arg.to_string()
    } else {
        format!("'{}'", arg.replace('\'', r"'\''"))
    }
}

/// Parses `args` (program name first), runs the command and returns the exit
/// status.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let args: Vec<OsString> = args.into_iter().map(Into::into).collect();
    let cli = match Cli::try_parse_from(&args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 2 } else { 0 };
        }
    };
    let cmdline = args
        .iter()
        .map(|a| quote(&a.to_string_lossy()))
        .collect::<Vec<_>>()
        .join(" ");
    if cli.emit_cmdline {
        eprintln!("{cmdline}");
    }
    match cli.command.execute() {
        Ok(mut summary) => {
            summary.push("cmdline", &cmdline);
            let out = cli.command.out();
            if let Some(path) = &out.summary {
                if let Err(e) = write_atomic(path, |w| Ok(write!(w, "{summary}")?)) {
                    eprintln!("error: {e}");
                    return e.exit_code();
                }
            }
            // a closed pipe downstream is not an error of ours
            let _ = if out.output.is_some() {
                write!(io::stdout(), "{summary}")
            } else {
                write!(io::stderr(), "{summary}")
            };
            0
        }
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}

pub fn main() -> i32 {
    main_with_args(std::env::args_os())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn window_lists() {
        assert_eq!(parse_window_list("50..500:50").unwrap().0.len(), 10);
        assert_eq!(parse_window_list("3, 7,9").unwrap().0, vec![3, 7, 9]);
        assert!(parse_window_list("0,5").is_err());
        assert!(parse_window_list("5..1:1").is_err());
        assert!(parse_window_list("x").is_err());
    }

    #[test]
    fn quoting() {
        assert_eq!(quote("--dt=0.01"), "--dt=0.01");
        assert_eq!(quote("a b"), "'a b'");
        assert_eq!(quote("it's"), r"'it'\''s'");
    }

    #[test]
    fn argument_errors_exit_2() {
        assert_eq!(main_with_args(["parawin", "run", "--steps", "-3"]), 2);
        assert_eq!(main_with_args(["parawin", "run", "--steps", "1.5"]), 2);
        assert_eq!(main_with_args(["parawin", "frobnicate"]), 2);
        assert_eq!(main_with_args(["parawin", "run", "--steps", "10", "--scheme", "sbab11"]), 2);
    }

    #[test]
    fn summary_lines() {
        let mut s = Summary::default();
        s.push("a", 1);
        s.push("b", "x y");
        assert_eq!(s.to_string(), "a=1\nb=x y\n");
        assert_eq!(s.get("b"), Some("x y"));
    }
}
