use std::fmt;
use std::io::{Read, Write};
use std::path::Path;
use std::str::FromStr;
use std::time::{Duration, Instant};

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::integrators::{SchemeSpec, StageTap, Stepper, Trajectory};
use crate::io::{format_f64, parse_f64, write_atomic, FloatFormat};
use crate::problems::{PerturbationValue, SplitHamiltonian, SplitProblem, State};

/// Which corrector is used.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default)]
pub enum Variant {
    /// Saved kicks plus the endpoint remainder `G(new) - G(previous pass)`.
    #[default]
    Refined,
    /// Saved kicks only.
    Sst97,
    /// Every increment (drifts too) replayed from the predictor.
    Picard,
}

impl fmt::Display for Variant {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Variant::Refined => "refined",
            Variant::Sst97 => "sst97",
            Variant::Picard => "picard",
        })
    }
}

impl FromStr for Variant {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "refined" => Ok(Variant::Refined),
            "sst97" => Ok(Variant::Sst97),
            "picard" => Ok(Variant::Picard),
            _ => Err(Error::Parse(format!("unknown variant `{s}`"))),
        }
    }
}

/// How the predictor phase is executed. Results never depend on it.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default)]
pub enum ExecMode {
    /// Slices predicted one after another on the calling thread.
    #[default]
    Simulated,
    /// Slices predicted on a dedicated thread pool.
    Threaded,
}

impl fmt::Display for ExecMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            ExecMode::Simulated => "simulated",
            ExecMode::Threaded => "threaded",
        })
    }
}

impl FromStr for ExecMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "simulated" => Ok(ExecMode::Simulated),
            "threaded" => Ok(ExecMode::Threaded),
            _ => Err(Error::Parse(format!("unknown mode `{s}`"))),
        }
    }
}

/// Baseline for the remainder on a slice's first corrector pass.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default)]
pub enum RemainderStart {
    /// `G` evaluated at the drift-only seed, the iterate the first pass corrects.
    #[default]
    Seed,
    /// Zero: the first pass adds the whole endpoint term `Delta t * eps g`.
    Zero,
}

impl fmt::Display for RemainderStart {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            RemainderStart::Seed => "seed",
            RemainderStart::Zero => "zero",
        })
    }
}

impl FromStr for RemainderStart {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "seed" => Ok(RemainderStart::Seed),
            "zero" => Ok(RemainderStart::Zero),
            _ => Err(Error::Parse(format!("unknown remainder start `{s}`"))),
        }
    }
}

#[derive(Debug, Clone)]
pub struct WindowConfig<H = SplitProblem> {
    pub problem: H,
    pub scheme: SchemeSpec,
    pub y0: State,
    /// Fine step `dt`.
    pub dt: f64,
    /// Total fine steps `N`.
    pub steps: usize,
    /// Fine steps per slice `j`.
    pub substeps: usize,
    /// Slices in flight `P`.
    pub window: usize,
    pub variant: Variant,
    /// Only used by [`Variant::Refined`].
    pub remainder_start: RemainderStart,
    pub mode: ExecMode,
    /// Predictor thread count in threaded mode (defaults to `window`).
    pub workers: Option<usize>,
    /// Defaults to `100 * ceil(N / (j P))`.
    pub max_iterations: Option<usize>,
}

impl<H: SplitHamiltonian> WindowConfig<H> {
    pub fn new(
        problem: H,
        scheme: SchemeSpec,
        y0: State,
        dt: f64,
        steps: usize,
        substeps: usize,
        window: usize,
    ) -> Self {
        Self {
            problem,
            scheme,
            y0,
            dt,
            steps,
            substeps,
            window,
            variant: Variant::Refined,
            remainder_start: RemainderStart::Seed,
            mode: ExecMode::Simulated,
            workers: None,
            max_iterations: None,
        }
    }

    pub fn with_variant(mut self, variant: Variant) -> Self {
        self.variant = variant;
        self
    }

    pub fn with_remainder_start(mut self, start: RemainderStart) -> Self {
        self.remainder_start = start;
        self
    }

    pub fn with_mode(mut self, mode: ExecMode) -> Self {
        self.mode = mode;
        self
    }

    pub fn with_workers(mut self, workers: usize) -> Self {
        self.workers = Some(workers);
        self
    }

    pub fn with_max_iterations(mut self, cap: usize) -> Self {
        self.max_iterations = Some(cap);
        self
    }

    /// Number of slices `N / j`.
    pub fn slices(&self) -> usize {
        self.steps / self.substeps
    }

    /// Slice length `Delta t = j dt`.
    pub fn slice_length(&self) -> f64 {
        self.substeps as f64 * self.dt
    }

    pub fn iteration_cap(&self) -> usize {
        self.max_iterations
            .unwrap_or_else(|| 100 * self.slices().div_ceil(self.window).max(1))
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::InvalidConfig(msg));
        if self.window == 0 {
            return bad("window size P must be at least 1".into());
        }
        if self.substeps == 0 {
            return bad("sub-steps per slice j must be at least 1".into());
        }
        if self.steps % self.substeps != 0 {
            return bad(format!(
                "step count N = {} is not a multiple of j = {}",
                self.steps, self.substeps
            ));
        }
        if self.dt == 0.0 || !self.dt.is_finite() {
            return bad(format!("step size must be finite and non-zero, got {}", self.dt));
        }
        if self.y0.dof() != self.problem.dof() || !self.y0.is_finite() {
            return bad("initial state must be finite and match the problem's degrees of freedom".into());
        }
        if self.workers == Some(0) {
            return bad("worker count must be at least 1".into());
        }
        Ok(())
    }
}

/// One slice of the window.
#[derive(Debug, Clone, PartialEq)]
pub struct SliceCell {
    /// Slice index `n`: the slice spans boundaries `n` and `n + 1`.
    pub index: usize,
    /// Current iterate at boundary `n`.
    pub y_start: State,
    /// Current iterate at boundary `n + 1`.
    pub y_end: State,
    /// Start the saved increments were produced from.
    pub predicted_from: Option<State>,
    /// Predictor endpoint.
    pub y_end_pred: Option<State>,
    /// Kick increments saved by the predictor.
    pub taps: StageTap,
    /// Drift increments saved by the predictor (Picard corrector only).
    pub drift_tape: Vec<f64>,
    /// Slice-weighted endpoint perturbation from the previous corrector pass.
    pub g_prev: PerturbationValue,
    /// Not yet corrected since it was seeded.
    pub fresh: bool,
}

impl SliceCell {
    fn seeded(index: usize, y_start: State, y_end: State) -> Self {
        let dof = y_start.dof();
        Self {
            index,
            y_start,
            y_end,
            predicted_from: None,
            y_end_pred: None,
            taps: StageTap::new(dof),
            drift_tape: Vec::new(),
            g_prev: PerturbationValue::zeros(dof),
            fresh: true,
        }
    }

    /// Whether the saved increments belong to the current start.
    pub fn is_predicted(&self) -> bool {
        self.predicted_from
            .as_ref()
            .is_some_and(|s| s.same_point(&self.y_start))
    }
}

/// Slices currently in flight, ordered by index.
#[derive(Debug, Clone, Default)]
pub struct WindowState {
    pub cells: Vec<SliceCell>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IterationRecord {
    /// 1-based iteration counter.
    pub iter: usize,
    /// First non-accepted slice when the iteration started.
    pub frontier: usize,
    /// Slices accepted during the iteration.
    pub conv: usize,
    /// Largest change of a slice endpoint during the corrector pass.
    pub max_correction: f64,
    /// Slices integrated by the predictor.
    pub predicted: usize,
    /// Slices swept by the corrector.
    pub corrected: usize,
    pub predict_time: Duration,
    pub correct_time: Duration,
}

#[derive(Debug, Clone, PartialEq)]
pub struct IterationLog {
    pub window: usize,
    pub substeps: usize,
    pub steps: usize,
    pub records: Vec<IterationRecord>,
}

impl IterationLog {
    pub fn iterations(&self) -> usize {
        self.records.len()
    }

    pub fn total_predict_time(&self) -> Duration {
        self.records.iter().map(|r| r.predict_time).sum()
    }

    pub fn total_correct_time(&self) -> Duration {
        self.records.iter().map(|r| r.correct_time).sum()
    }

    /// `iter,frontier,conv,max_correction` rows.
    pub fn write_csv<W: Write>(&self, mut w: W, format: FloatFormat) -> Result<()> {
        writeln!(w, "iter,frontier,conv,max_correction")?;
        for r in &self.records {
            writeln!(
                w,
                "{},{},{},{}",
                r.iter,
                r.frontier,
                r.conv,
                format_f64(r.max_correction, format)
            )?;
        }
        Ok(())
    }

    pub fn save_csv(&self, path: &Path, format: FloatFormat) -> Result<()> {
        write_atomic(path, |w| self.write_csv(w, format))
    }

    /// Reads back the rows of [`IterationLog::write_csv`]. Timings and
    /// prediction counts are not stored and come back as zero.
    pub fn read_records<R: Read>(reader: R) -> Result<Vec<IterationRecord>> {
        let mut csv = csv::Reader::from_reader(reader);
        let header: Vec<String> = csv.headers()?.iter().map(str::to_string).collect();
        if header.join(",") != "iter,frontier,conv,max_correction" {
            return Err(Error::Parse(format!("unrecognised log header `{}`", header.join(","))));
        }
        let int = |s: &str| {
            s.parse::<usize>()
                .map_err(|_| Error::Parse(format!("expected a count, got `{s}`")))
        };
        let mut out = Vec::new();
        for record in csv.records() {
            let record = record?;
            if record.len() != 4 {
                return Err(Error::Parse(format!("expected 4 fields, got {}", record.len())));
            }
            out.push(IterationRecord {
                iter: int(&record[0])?,
                frontier: int(&record[1])?,
                conv: int(&record[2])?,
                max_correction: parse_f64(&record[3])?,
                predicted: 0,
                corrected: 0,
                predict_time: Duration::ZERO,
                correct_time: Duration::ZERO,
            });
        }
        Ok(out)
    }
}

/// Accepted prefix of the solution and the iteration history.
#[derive(Debug, Clone)]
pub struct FrontierState {
    /// Index of the first slice not yet accepted.
    pub r: usize,
    /// Accepted boundary values `u_0 ..= u_r`.
    pub u: Vec<State>,
    /// Iterations performed so far.
    pub iter: usize,
    pub log: IterationLog,
}

/// Output of [`run_window`].
#[derive(Debug, Clone)]
pub struct WindowRun {
    /// Accepted values at every slice boundary, `N / j + 1` of them.
    pub u: Vec<State>,
    pub log: IterationLog,
}

impl WindowRun {
    pub fn iterations(&self) -> usize {
        self.log.iterations()
    }

    /// Writes the accepted boundary values as `t,p,q,energy` rows.
    pub fn write_csv<W: Write, H: SplitHamiltonian + ?Sized>(
        &self,
        mut w: W,
        problem: &H,
        format: FloatFormat,
    ) -> Result<()> {
        let dof = self.u.first().map_or(1, State::dof);
        crate::integrators::write_state_header(&mut w, dof, true)?;
        for state in &self.u {
            crate::integrators::write_state_row(&mut w, state, Some(problem.energy(state)), format)?;
        }
        Ok(())
    }

    pub fn save_csv<H: SplitHamiltonian + ?Sized>(
        &self,
        path: &Path,
        problem: &H,
        format: FloatFormat,
    ) -> Result<()> {
        write_atomic(path, |w| self.write_csv(w, problem, format))
    }
}

fn slice_fault(slice: usize, substeps: usize, step: usize, stage: usize) -> Error {
    Error::SliceBlowUp {
        slice,
        step: slice * substeps + step,
        stage,
    }
}

/// Integrates the drift alone over one slice.
fn drift_only<H: SplitHamiltonian>(
    stepper: &mut Stepper<'_, H>,
    start: &State,
    slice: usize,
    substeps: usize,
) -> Result<State> {
    let mut y = start.clone();
    for i in 0..substeps {
        stepper
            .step_drift_only(&mut y)
            .map_err(|f| slice_fault(slice, substeps, i, f.stage))?;
    }
    Ok(y)
}

/// Seeds slices `first..first + count` by drift-only continuation from `start`.
fn seed_cells<H: SplitHamiltonian>(
    cfg: &WindowConfig<H>,
    first: usize,
    count: usize,
    start: &State,
) -> Result<Vec<SliceCell>> {
    let mut stepper = Stepper::new(&cfg.problem, &cfg.scheme, cfg.dt);
    let mut cells = Vec::with_capacity(count);
    let mut y = start.clone();
    for index in first..first + count {
        let end = drift_only(&mut stepper, &y, index, cfg.substeps)?;
        cells.push(SliceCell::seeded(index, y, end.clone()));
        y = end;
    }
    Ok(cells)
}

/// Builds the initial guess: drift-only propagation from `y0` over the first
/// window, all remainder stores zeroed.
pub fn init_window<H: SplitHamiltonian>(cfg: &WindowConfig<H>) -> Result<(WindowState, FrontierState)> {
    cfg.validate()?;
    let count = cfg.window.min(cfg.slices());
    let cells = seed_cells(cfg, 0, count, &cfg.y0)?;
    let frontier = FrontierState {
        r: 0,
        u: vec![cfg.y0.clone()],
        iter: 0,
        log: IterationLog {
            window: cfg.window,
            substeps: cfg.substeps,
            steps: cfg.steps,
            records: Vec::new(),
        },
    };
    Ok((WindowState { cells }, frontier))
}

fn predict_in_place<H: SplitHamiltonian>(cell: &mut SliceCell, cfg: &WindowConfig<H>) -> Result<()> {
    let mut stepper = Stepper::new(&cfg.problem, &cfg.scheme, cfg.dt);
    let full = cfg.variant == Variant::Picard;
    let kicks = cfg.substeps * stepper.kicks_per_step();
    cell.taps = StageTap::with_capacity(cell.y_start.dof(), kicks);
    cell.drift_tape.clear();
    let mut y = cell.y_start.clone();
    for i in 0..cfg.substeps {
        let res = if full {
            stepper.step_full_record(&mut y, &mut cell.taps.values, &mut cell.drift_tape)
        } else {
            stepper.step(&mut y, Some(&mut cell.taps))
        };
        res.map_err(|f| slice_fault(cell.index, cfg.substeps, i, f.stage))?;
    }
    cell.predicted_from = Some(cell.y_start.clone());
    cell.y_end_pred = Some(y);
    Ok(())
}

/// Runs the predictor on one slice: `j` full steps from its current start,
/// saving every kick increment. Reads nothing outside `cell`.
pub fn predict_slice<H: SplitHamiltonian>(cell: &SliceCell, cfg: &WindowConfig<H>) -> Result<SliceCell> {
    let mut out = cell.clone();
    predict_in_place(&mut out, cfg)?;
    Ok(out)
}

/// Predicts every slice whose saved increments are stale. Returns how many
/// slices were integrated.
fn predict_window<H: SplitHamiltonian>(
    window: &mut WindowState,
    cfg: &WindowConfig<H>,
    pool: Option<&rayon::ThreadPool>,
) -> Result<usize> {
    let stale = window.cells.iter().filter(|c| !c.is_predicted()).count();
    match pool {
        Some(pool) => pool.install(|| {
            window
                .cells
                .par_iter_mut()
                .filter(|c| !c.is_predicted())
                .try_for_each(|c| predict_in_place(c, cfg))
        })?,
        None => {
            for cell in window.cells.iter_mut().filter(|c| !c.is_predicted()) {
                predict_in_place(cell, cfg)?;
            }
        }
    }
    Ok(stale)
}

/// Re-integrates `cell` from `start` with its saved increments and applies the
/// variant's endpoint update.
fn correct_cell<H: SplitHamiltonian>(
    cell: &mut SliceCell,
    start: &State,
    cfg: &WindowConfig<H>,
    stepper: &mut Stepper<'_, H>,
) -> Result<State> {
    let mut y = start.clone();
    let fault = |i: usize, stage: usize| slice_fault(cell.index, cfg.substeps, i, stage);
    match cfg.variant {
        Variant::Picard => {
            let (mut kc, mut dc) = (0, 0);
            for i in 0..cfg.substeps {
                (kc, dc) = stepper
                    .step_replay_all(&mut y, cell.taps.raw(), kc, &cell.drift_tape, dc)
                    .map_err(|f| fault(i, f.stage))?;
            }
        }
        Variant::Refined | Variant::Sst97 => {
            let mut cursor = 0;
            for i in 0..cfg.substeps {
                cursor = stepper
                    .step_replay_kicks(&mut y, cell.taps.raw(), cursor)
                    .map_err(|f| fault(i, f.stage))?;
            }
        }
    }
    if cfg.variant == Variant::Refined {
        let mut g = cfg.problem.eval_perturbation(y.t, &y);
        g.scale(cfg.slice_length());
        if cell.fresh && cfg.remainder_start == RemainderStart::Seed {
            // first pass: the previous iterate is the drift-only seed
            cell.g_prev = cfg.problem.eval_perturbation(cell.y_end.t, &cell.y_end);
            cell.g_prev.scale(cfg.slice_length());
        }
        for i in 0..y.dof() {
            y.p[i] += g.force_p[i] - cell.g_prev.force_p[i];
            y.q[i] += g.drift_q[i] - cell.g_prev.drift_q[i];
        }
        if !y.is_finite() {
            return Err(fault(cfg.substeps, 0));
        }
        cell.g_prev = g;
    }
    cell.fresh = false;
    Ok(y)
}

/// One sequential corrector sweep over the window. Accepts the leading run of
/// converged slices, shifts the window past them and admits new slices at the
/// tail. Returns the number of slices accepted.
pub fn correct_pass<H: SplitHamiltonian>(
    window: &mut WindowState,
    frontier: &mut FrontierState,
    cfg: &WindowConfig<H>,
) -> Result<usize> {
    let Some(head) = window.cells.first() else {
        return Ok(0);
    };
    if let Some(stale) = window.cells.iter().find(|c| !c.is_predicted()) {
        return Err(Error::InvalidConfig(format!(
            "slice {} has not been predicted from its current start",
            stale.index
        )));
    }
    debug_assert_eq!(head.index, frontier.r);
    debug_assert!(head.y_start.same_point(frontier.u.last().unwrap()));

    let started_at = frontier.r;
    frontier.iter += 1;
    let mut stepper = Stepper::new(&cfg.problem, &cfg.scheme, cfg.dt);

    // The head slice starts from an accepted value: its prediction is exact.
    let first = &mut window.cells[0];
    let exact = first.y_end_pred.clone().expect("predicted slice has an endpoint");
    let mut max_correction = exact.distance(&first.y_end);
    first.y_end = exact.clone();
    frontier.u.push(exact.clone());
    let mut conv = 1;
    let mut accepting = true;

    let mut current = exact;
    for cell in window.cells.iter_mut().skip(1) {
        let taps_match = cell.y_start.same_point(&current);
        let corrected = correct_cell(cell, &current, cfg, &mut stepper)?;
        let converged = taps_match && corrected.same_point(&cell.y_end);
        max_correction = max_correction.max(corrected.distance(&cell.y_end));
        cell.y_start = current;
        cell.y_end = corrected.clone();
        if accepting && converged {
            frontier.u.push(corrected.clone());
            conv += 1;
        } else {
            accepting = false;
        }
        current = corrected;
    }
    let corrected = window.cells.len() - 1;

    frontier.r += conv;
    window.cells.drain(..conv);
    let in_flight = window.cells.len();
    let room = cfg.window.saturating_sub(in_flight);
    let next = frontier.r + in_flight;
    let admit = room.min(cfg.slices() - next);
    if admit > 0 {
        let from = window
            .cells
            .last()
            .map_or_else(|| frontier.u.last().unwrap().clone(), |c| c.y_end.clone());
        let fresh = seed_cells(cfg, next, admit, &from)?;
        window.cells.extend(fresh);
    }

    frontier.log.records.push(IterationRecord {
        iter: frontier.iter,
        frontier: started_at,
        conv,
        max_correction,
        predicted: 0,
        corrected,
        predict_time: Duration::ZERO,
        correct_time: Duration::ZERO,
    });
    Ok(conv)
}

/// Runs the whole time-parallel integration until every slice is accepted.
pub fn run_window<H: SplitHamiltonian>(cfg: &WindowConfig<H>) -> Result<WindowRun> {
    let (mut window, mut frontier) = init_window(cfg)?;
    let pool = match cfg.mode {
        ExecMode::Simulated => None,
        ExecMode::Threaded => Some(
            rayon::ThreadPoolBuilder::new()
                .num_threads(cfg.workers.unwrap_or(cfg.window))
                .build()
                .map_err(|e| Error::InvalidConfig(format!("cannot start worker pool: {e}")))?,
        ),
    };
    let cap = cfg.iteration_cap();
    let slices = cfg.slices();
    while frontier.r < slices {
        if frontier.iter >= cap {
            return Err(Error::NonConvergence {
                iterations: frontier.iter,
                frontier: frontier.r,
                slices,
                last_correction: frontier.log.records.last().map_or(f64::NAN, |r| r.max_correction),
            });
        }
        let clock = Instant::now();
        let predicted = predict_window(&mut window, cfg, pool.as_ref())?;
        let predict_time = clock.elapsed();
        let clock = Instant::now();
        correct_pass(&mut window, &mut frontier, cfg)?;
        let correct_time = clock.elapsed();
        let record = frontier.log.records.last_mut().expect("pass logged");
        record.predicted = predicted;
        record.predict_time = predict_time;
        record.correct_time = correct_time;
    }
    Ok(WindowRun {
        u: frontier.u,
        log: frontier.log,
    })
}

/// Euclidean distance between the accepted values and a sequential reference
/// at every slice boundary. The reference must be sampled at a divisor of `j`.
pub fn verify_against_sequential(u: &[State], reference: &Trajectory, substeps: usize) -> Result<Vec<f64>> {
    if reference.sample_every == 0 || substeps % reference.sample_every != 0 {
        return Err(Error::GridMismatch(format!(
            "reference sampled every {} steps cannot be aligned with slices of {} steps",
            reference.sample_every, substeps
        )));
    }
    let stride = substeps / reference.sample_every;
    let needed = (u.len().saturating_sub(1)) * stride + 1;
    if reference.len() < needed {
        return Err(Error::GridMismatch(format!(
            "reference has {} samples, {} boundaries need {}",
            reference.len(),
            u.len(),
            needed
        )));
    }
    Ok(u.iter()
        .enumerate()
        .map(|(n, y)| y.distance(&reference.states[n * stride]))
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::integrators::{integrate_sequential, make_scheme, SchemeFamily};

    fn sbab4() -> SchemeSpec {
        make_scheme(SchemeFamily::Sbab, 4).unwrap()
    }

    fn pendulum_cfg(eps: f64, steps: usize, window: usize) -> WindowConfig {
        WindowConfig::new(
            SplitProblem::pendulum(eps),
            sbab4(),
            State::scalar(1.0, 0.0),
            0.01,
            steps,
            100,
            window,
        )
    }

    #[test]
    fn rejects_bad_configs() {
        assert!(pendulum_cfg(0.01, 1050, 4).validate().is_err());
        assert!(pendulum_cfg(0.01, 1000, 0).validate().is_err());
        let mut cfg = pendulum_cfg(0.01, 1000, 4);
        cfg.substeps = 0;
        assert!(matches!(init_window(&cfg), Err(Error::InvalidConfig(_))));
    }

    #[test]
    fn initial_guess_is_drift_only() {
        let cfg = WindowConfig::new(
            SplitProblem::pendulum(0.01),
            SchemeSpec::leapfrog(),
            State::scalar(1.0, 0.0),
            0.5,
            4,
            2,
            2,
        );
        let (window, frontier) = init_window(&cfg).unwrap();
        assert_eq!(window.cells.len(), 2);
        assert_eq!(frontier.u.len(), 1);
        let first = &window.cells[0];
        assert_eq!(first.y_end.p[0], 1.0);
        assert_eq!(first.y_end.q[0], 1.0);
        assert_eq!(window.cells[1].y_end.q[0], 2.0);
        assert!(window.cells.iter().all(|c| c.g_prev.is_zero() && !c.is_predicted()));
    }

    #[test]
    fn unperturbed_guess_is_already_sequential() {
        let cfg = pendulum_cfg(0.0, 1000, 10);
        let (window, _) = init_window(&cfg).unwrap();
        let reference =
            integrate_sequential(&cfg.problem, &cfg.scheme, &cfg.y0, cfg.dt, 1000, 100).unwrap();
        for (n, cell) in window.cells.iter().enumerate() {
            assert!(cell.y_end.same_point(&reference.states[n + 1]));
        }
    }

    #[test]
    fn predictor_on_exact_start_is_sequential() {
        let cfg = pendulum_cfg(0.01, 1000, 4);
        let (window, _) = init_window(&cfg).unwrap();
        let cell = predict_slice(&window.cells[0], &cfg).unwrap();
        assert_eq!(cell.taps.len(), 500);
        let reference = integrate_sequential(&cfg.problem, &cfg.scheme, &cfg.y0, cfg.dt, 100, 100).unwrap();
        assert!(cell.y_end_pred.unwrap().same_point(reference.last()));
    }

    #[test]
    fn unperturbed_predictor_has_zero_taps() {
        let cfg = pendulum_cfg(0.0, 1000, 4);
        let (window, _) = init_window(&cfg).unwrap();
        let cell = predict_slice(&window.cells[2], &cfg).unwrap();
        assert!(cell.taps.iter().all(|v| v.is_zero()));
        assert!(cell.y_end_pred.unwrap().same_point(&cell.y_end));
    }

    #[test]
    fn unperturbed_first_pass_accepts_whole_window() {
        let cfg = pendulum_cfg(0.0, 2000, 5);
        let (mut window, mut frontier) = init_window(&cfg).unwrap();
        predict_window(&mut window, &cfg, None).unwrap();
        let conv = correct_pass(&mut window, &mut frontier, &cfg).unwrap();
        assert_eq!(conv, 5);
        assert_eq!(frontier.r, 5);
        assert_eq!(window.cells.first().unwrap().index, 5);
    }

    #[test]
    fn unperturbed_run_takes_one_iteration_per_window() {
        for p in [1, 3, 7, 20] {
            let cfg = pendulum_cfg(0.0, 2000, p);
            let run = run_window(&cfg).unwrap();
            assert_eq!(run.iterations(), 20usize.div_ceil(p), "P = {p}");
        }
        let run = run_window(&pendulum_cfg(0.0, 2000, 20)).unwrap();
        assert_eq!(run.iterations(), 1);
    }

    #[test]
    fn correct_pass_needs_predictions() {
        let cfg = pendulum_cfg(0.01, 1000, 4);
        let (mut window, mut frontier) = init_window(&cfg).unwrap();
        assert!(correct_pass(&mut window, &mut frontier, &cfg).is_err());
    }

    #[test]
    fn remainder_vanishes_at_a_fixed_point() {
        let cfg = pendulum_cfg(0.01, 1000, 3);
        let (mut window, _) = init_window(&cfg).unwrap();
        let mut cell = predict_slice(&window.cells.remove(1), &cfg).unwrap();
        let start = cell.y_start.clone();
        let mut stepper = Stepper::new(&cfg.problem, &cfg.scheme, cfg.dt);
        let first = correct_cell(&mut cell, &start, &cfg, &mut stepper).unwrap();
        // same start, same taps: the half step repeats, G(new) - G(prev) = 0
        let second = correct_cell(&mut cell, &start, &cfg, &mut stepper).unwrap();
        let half = cell.y_end_pred.clone().unwrap();
        assert!(second.same_point(&half));
        assert!(!first.same_point(&half));
    }

    #[test]
    fn frontier_is_monotone_and_accepted_values_are_final() {
        let cfg = pendulum_cfg(0.01, 20_000, 8);
        let (mut window, mut frontier) = init_window(&cfg).unwrap();
        let mut accepted: Vec<State> = frontier.u.clone();
        while frontier.r < cfg.slices() {
            let before = frontier.r;
            predict_window(&mut window, &cfg, None).unwrap();
            correct_pass(&mut window, &mut frontier, &cfg).unwrap();
            assert!(frontier.r > before);
            assert!(accepted.iter().zip(&frontier.u).all(|(a, b)| a.same_point(b)));
            accepted = frontier.u.clone();
        }
    }

    #[test]
    fn verify_checks_grid() {
        let cfg = pendulum_cfg(0.01, 1000, 4);
        let reference = integrate_sequential(&cfg.problem, &cfg.scheme, &cfg.y0, cfg.dt, 1000, 30).unwrap();
        assert!(matches!(
            verify_against_sequential(&reference.states, &reference, 100),
            Err(Error::GridMismatch(_))
        ));
        let reference = integrate_sequential(&cfg.problem, &cfg.scheme, &cfg.y0, cfg.dt, 1000, 100).unwrap();
        let zeros = verify_against_sequential(&reference.states, &reference, 100).unwrap();
        assert!(zeros.iter().all(|&e| e == 0.0));
        let fine = integrate_sequential(&cfg.problem, &cfg.scheme, &cfg.y0, cfg.dt, 1000, 10).unwrap();
        let zeros = verify_against_sequential(&reference.states, &fine, 100).unwrap();
        assert!(zeros.iter().all(|&e| e == 0.0));
    }

    #[test]
    fn log_csv_round_trip() {
        let run = run_window(&pendulum_cfg(0.01, 5000, 6)).unwrap();
        for format in [FloatFormat::Decimal, FloatFormat::Hex] {
            let mut first = Vec::new();
            run.log.write_csv(&mut first, format).unwrap();
            let records = IterationLog::read_records(first.as_slice()).unwrap();
            assert_eq!(records.len(), run.iterations());
            let copy = IterationLog { records, ..run.log.clone() };
            let mut second = Vec::new();
            copy.write_csv(&mut second, format).unwrap();
            assert_eq!(first, second);
        }
    }

    #[test]
    fn variant_names() {
        for v in [Variant::Refined, Variant::Sst97, Variant::Picard] {
            assert_eq!(v.to_string().parse::<Variant>().unwrap(), v);
        }
        assert!("parareal".parse::<Variant>().is_err());
        assert_eq!("threaded".parse::<ExecMode>().unwrap(), ExecMode::Threaded);
    }
}
