//! Explicit symmetric symplectic integrators for [`SplitHamiltonian`]s.
//!
//! Every step is a fixed sequence of stages. A drift advances `q` by
//! `c_i dt * dH_int/dp`, a kick advances `p` (and `q`) by `d_i dt * eps g`.
//! Each stage increment is formed first and then added, in the same order
//! whether it is computed fresh or replayed from a recording. That is what
//! lets the time-parallel corrector reproduce the sequential integrator bit
//! for bit when its inputs match.

mod scheme;
mod trajectory;

pub use scheme::{make_scheme, SchemeFamily, SchemeSpec, Stage, MAX_ORDER_INDEX};
pub use trajectory::{integrate_sequential, read_states_csv, Trajectory};
pub(crate) use trajectory::{write_state_header, write_state_row};

use crate::error::{Error, Result};
use crate::problems::{PerturbationValue, SplitHamiltonian, State};

/// Kick increments `d_i dt * eps g` recorded during one or more steps, in
/// execution order.
#[derive(Debug, Clone, PartialEq)]
pub struct StageTap {
    dof: usize,
    // per kick: force_p[0..dof] then drift_q[0..dof]
    pub(crate) values: Vec<f64>,
}

impl StageTap {
    pub fn new(dof: usize) -> Self {
        Self {
            dof,
            values: Vec::new(),
        }
    }

    pub fn with_capacity(dof: usize, kicks: usize) -> Self {
        Self {
            dof,
            values: Vec::with_capacity(2 * dof * kicks),
        }
    }

    /// Number of recorded kicks.
    pub fn len(&self) -> usize {
        self.values.len() / (2 * self.dof)
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn clear(&mut self) {
        self.values.clear();
    }

    pub fn get(&self, i: usize) -> PerturbationValue {
        let chunk = &self.values[2 * self.dof * i..2 * self.dof * (i + 1)];
        PerturbationValue {
            force_p: chunk[..self.dof].to_vec(),
            drift_q: chunk[self.dof..].to_vec(),
        }
    }

    pub fn iter(&self) -> impl Iterator<Item = PerturbationValue> + '_ {
        (0..self.len()).map(|i| self.get(i))
    }

    pub(crate) fn raw(&self) -> &[f64] {
        &self.values
    }
}

/// Where a stage takes its increment from.
enum Source<'t> {
    /// Evaluate the field; optionally append the increment to a tape.
    Fresh(Option<&'t mut Vec<f64>>),
    /// Read increments from a tape, advancing the cursor.
    Replay(&'t [f64], usize),
    /// Leave the stage out entirely.
    Skip,
}

#[derive(Debug, Clone, Copy)]
enum Planned {
    Drift { h: f64 },
    Kick { h: f64, offset: f64 },
}

/// A scheme bound to a problem and a step size, with scratch buffers.
///
/// Not shareable across threads; create one per worker.
pub struct Stepper<'a, H: SplitHamiltonian + ?Sized> {
    problem: &'a H,
    plan: Vec<Planned>,
    dt: f64,
    kicks: usize,
    drifts: usize,
    velocity: Vec<f64>,
    field: PerturbationValue,
}

/// A non-finite value appeared at `stage` (counted from zero within the step).
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct StageFault {
    pub stage: usize,
}

impl<'a, H: SplitHamiltonian + ?Sized> Stepper<'a, H> {
    pub fn new(problem: &'a H, scheme: &SchemeSpec, dt: f64) -> Self {
        let mut plan = Vec::new();
        let mut elapsed = 0.0;
        for stage in scheme.stages() {
            match stage {
                Stage::Drift(c) => {
                    plan.push(Planned::Drift { h: c * dt });
                    elapsed += c;
                }
                Stage::Kick(d) => plan.push(Planned::Kick {
                    h: d * dt,
                    offset: elapsed * dt,
                }),
            }
        }
        let dof = problem.dof();
        Self {
            problem,
            plan,
            dt,
            kicks: scheme.kick_count(),
            drifts: scheme.drift_count(),
            velocity: vec![0.0; dof],
            field: PerturbationValue::zeros(dof),
        }
    }

    pub fn dt(&self) -> f64 {
        self.dt
    }

    pub fn kicks_per_step(&self) -> usize {
        self.kicks
    }

    pub fn drifts_per_step(&self) -> usize {
        self.drifts
    }

    pub fn problem(&self) -> &'a H {
        self.problem
    }

    /// One full step with fresh evaluations; kick increments are appended to
    /// `tap` when given.
    pub fn step(&mut self, state: &mut State, tap: Option<&mut StageTap>) -> Result<(), StageFault> {
        self.apply(state, Source::Fresh(tap.map(|t| &mut t.values)), Source::Fresh(None))
            .map(|_| ())
    }

    /// One step that records both kick and drift increments.
    pub(crate) fn step_full_record(
        &mut self,
        state: &mut State,
        kicks: &mut Vec<f64>,
        drifts: &mut Vec<f64>,
    ) -> Result<(), StageFault> {
        self.apply(state, Source::Fresh(Some(kicks)), Source::Fresh(Some(drifts)))
            .map(|_| ())
    }

    /// One step whose kicks are read from `taps` starting at `cursor`; drifts
    /// are evaluated fresh. Returns the advanced cursor.
    pub(crate) fn step_replay_kicks(
        &mut self,
        state: &mut State,
        taps: &[f64],
        cursor: usize,
    ) -> Result<usize, StageFault> {
        let (k, _) = self.apply(state, Source::Replay(taps, cursor), Source::Fresh(None))?;
        Ok(k)
    }

    /// One step replaying every increment. Returns the advanced cursors.
    pub(crate) fn step_replay_all(
        &mut self,
        state: &mut State,
        kicks: &[f64],
        kick_cursor: usize,
        drifts: &[f64],
        drift_cursor: usize,
    ) -> Result<(usize, usize), StageFault> {
        self.apply(
            state,
            Source::Replay(kicks, kick_cursor),
            Source::Replay(drifts, drift_cursor),
        )
    }

    /// One step of the integrable flow alone (kicks skipped).
    pub fn step_drift_only(&mut self, state: &mut State) -> Result<(), StageFault> {
        self.apply(state, Source::Skip, Source::Fresh(None)).map(|_| ())
    }

    fn apply(
        &mut self,
        state: &mut State,
        mut kick_src: Source<'_>,
        mut drift_src: Source<'_>,
    ) -> Result<(usize, usize), StageFault> {
        let dof = state.dof();
        let t0 = state.t;
        for (index, stage) in self.plan.iter().enumerate() {
            match *stage {
                Planned::Kick { h, offset } => match &mut kick_src {
                    Source::Skip => continue,
                    Source::Fresh(tape) => {
                        self.problem
                            .perturbation(t0 + offset, &state.p, &state.q, &mut self.field);
                        for i in 0..dof {
                            let inc = h * self.field.force_p[i];
                            state.p[i] += inc;
                            if let Some(tape) = tape.as_deref_mut() {
                                tape.push(inc);
                            }
                        }
                        for i in 0..dof {
                            let inc = h * self.field.drift_q[i];
                            state.q[i] += inc;
                            if let Some(tape) = tape.as_deref_mut() {
                                tape.push(inc);
                            }
                        }
                    }
                    Source::Replay(tape, cursor) => {
                        let chunk = &tape[*cursor..*cursor + 2 * dof];
                        for i in 0..dof {
                            state.p[i] += chunk[i];
                        }
                        for i in 0..dof {
                            state.q[i] += chunk[dof + i];
                        }
                        *cursor += 2 * dof;
                    }
                },
                Planned::Drift { h } => match &mut drift_src {
                    Source::Skip => continue,
                    Source::Fresh(tape) => {
                        self.problem.integrable_drift(&state.p, &mut self.velocity);
                        for i in 0..dof {
                            let inc = h * self.velocity[i];
                            state.q[i] += inc;
                            if let Some(tape) = tape.as_deref_mut() {
                                tape.push(inc);
                            }
                        }
                    }
                    Source::Replay(tape, cursor) => {
                        for i in 0..dof {
                            state.q[i] += tape[*cursor + i];
                        }
                        *cursor += dof;
                    }
                },
            }
            if !state.p.iter().chain(&state.q).all(|x| x.is_finite()) {
                return Err(StageFault { stage: index });
            }
        }
        state.t = t0 + self.dt;
        let cursor = |src: &Source<'_>| match src {
            Source::Replay(_, c) => *c,
            _ => 0,
        };
        Ok((cursor(&kick_src), cursor(&drift_src)))
    }
}

/// Applies one full step of `scheme` to `state`, optionally recording every
/// kick increment.
pub fn slice_step<H: SplitHamiltonian + ?Sized>(
    problem: &H,
    scheme: &SchemeSpec,
    state: &State,
    dt: f64,
    record: bool,
) -> Result<(State, Option<StageTap>)> {
    if dt == 0.0 || !dt.is_finite() {
        return Err(Error::InvalidConfig(format!("step size must be finite and non-zero, got {dt}")));
    }
    if state.dof() != problem.dof() {
        return Err(Error::InvalidConfig(format!(
            "state has {} degrees of freedom, problem expects {}",
            state.dof(),
            problem.dof()
        )));
    }
    let mut stepper = Stepper::new(problem, scheme, dt);
    let mut out = state.clone();
    let mut tap = record.then(|| StageTap::with_capacity(state.dof(), scheme.kick_count()));
    stepper
        .step(&mut out, tap.as_mut())
        .map_err(|f| Error::NumericalBlowUp {
            step: 0,
            stage: f.stage,
        })?;
    Ok((out, tap))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::problems::SplitProblem;
    use proptest::prelude::*;

    #[test]
    fn unperturbed_leapfrog_is_pure_drift() {
        let pend = SplitProblem::pendulum(0.0);
        let (out, _) =
            slice_step(&pend, &SchemeSpec::leapfrog(), &State::scalar(1.0, 0.0), 0.01, false).unwrap();
        assert_eq!(out.p[0], 1.0);
        assert_eq!(out.q[0], 0.01);
        assert_eq!(out.t, 0.01);
    }

    #[test]
    fn leapfrog_matches_hand_written_kdk() {
        let eps = 0.01;
        let dt = 0.01;
        let pend = SplitProblem::pendulum(eps);
        let (out, tap) =
            slice_step(&pend, &SchemeSpec::leapfrog(), &State::scalar(1.0, 0.0), dt, true).unwrap();

        // kick, drift, kick written out by hand
        let (mut p, mut q) = (1.0f64, 0.0f64);
        p += (0.5 * dt) * -(eps * q.sin());
        q += (1.0 * dt) * p;
        p += (0.5 * dt) * -(eps * q.sin());

        assert_eq!(out.p[0].to_bits(), p.to_bits());
        assert_eq!(out.q[0].to_bits(), q.to_bits());
        let tap = tap.unwrap();
        assert_eq!(tap.len(), 2);
        assert_eq!(tap.get(0).force_p[0], 0.0);
        assert_eq!(tap.get(1).force_p[0], (0.5 * dt) * -(eps * q.sin()));
    }

    #[test]
    fn tap_replay_is_bitwise() {
        let spin = SplitProblem::spin_orbit(0.01, 1e-4, 0.2);
        let scheme = make_scheme(SchemeFamily::Sbab, 4).unwrap();
        let mut stepper = Stepper::new(&spin, &scheme, 0.01);
        let start = State::scalar(0.7, 1.3);

        let mut fresh = start.clone();
        let mut tap = StageTap::new(1);
        for _ in 0..50 {
            stepper.step(&mut fresh, Some(&mut tap)).unwrap();
        }
        assert_eq!(tap.len(), 250);

        let mut replayed = start.clone();
        let mut cursor = 0;
        for _ in 0..50 {
            cursor = stepper.step_replay_kicks(&mut replayed, tap.raw(), cursor).unwrap();
        }
        assert_eq!(cursor, tap.raw().len());
        assert!(fresh.same_point(&replayed));
        assert_eq!(fresh.t.to_bits(), replayed.t.to_bits());
    }

    #[test]
    fn full_replay_is_bitwise() {
        let pend = SplitProblem::pendulum(0.05);
        let scheme = make_scheme(SchemeFamily::Saba, 3).unwrap();
        let mut stepper = Stepper::new(&pend, &scheme, 0.02);
        let start = State::scalar(-0.4, 2.0);
        let (mut kicks, mut drifts) = (Vec::new(), Vec::new());
        let mut fresh = start.clone();
        for _ in 0..20 {
            stepper.step_full_record(&mut fresh, &mut kicks, &mut drifts).unwrap();
        }
        let mut replayed = start;
        let (mut kc, mut dc) = (0, 0);
        for _ in 0..20 {
            (kc, dc) = stepper
                .step_replay_all(&mut replayed, &kicks, kc, &drifts, dc)
                .unwrap();
        }
        assert!(fresh.same_point(&replayed));
    }

    #[test]
    fn drift_only_equals_full_step_without_perturbation() {
        let pend = SplitProblem::pendulum(0.0);
        let scheme = make_scheme(SchemeFamily::Sbab, 4).unwrap();
        let mut stepper = Stepper::new(&pend, &scheme, 0.01);
        let mut a = State::scalar(1.0, 0.0);
        let mut b = a.clone();
        for _ in 0..100 {
            stepper.step(&mut a, None).unwrap();
            stepper.step_drift_only(&mut b).unwrap();
        }
        assert!(a.same_point(&b));
    }

    #[test]
    fn rejects_zero_step() {
        let pend = SplitProblem::pendulum(0.01);
        assert!(slice_step(&pend, &SchemeSpec::leapfrog(), &State::scalar(1.0, 0.0), 0.0, false).is_err());
    }

    struct Exploding;

    impl SplitHamiltonian for Exploding {
        fn dof(&self) -> usize {
            1
        }
        fn integrable_drift(&self, p: &[f64], out: &mut [f64]) {
            out.copy_from_slice(p);
        }
        fn perturbation(&self, _t: f64, _p: &[f64], q: &[f64], out: &mut PerturbationValue) {
            out.force_p[0] = if q[0] > 0.5 { f64::INFINITY } else { 0.0 };
            out.drift_q[0] = 0.0;
        }
        fn energy(&self, s: &State) -> f64 {
            0.5 * s.p[0] * s.p[0]
        }
    }

    #[test]
    fn blow_up_reports_stage() {
        let (state, dt) = (State::scalar(1.0, 0.0), 1.0);
        let err = slice_step(&Exploding, &SchemeSpec::leapfrog(), &state, dt, false).unwrap_err();
        // kick(0) fine, drift(1) moves q to 1, kick(2) explodes
        assert!(matches!(err, Error::NumericalBlowUp { stage: 2, .. }), "{err}");
    }

    /// `H = p^2/2 + eps (cos q + p^3/3)`: exercises a perturbation that also
    /// moves the angles.
    struct MixedPerturbation(f64);

    impl SplitHamiltonian for MixedPerturbation {
        fn dof(&self) -> usize {
            1
        }
        fn integrable_drift(&self, p: &[f64], out: &mut [f64]) {
            out.copy_from_slice(p);
        }
        fn perturbation(&self, _t: f64, p: &[f64], q: &[f64], out: &mut PerturbationValue) {
            out.force_p[0] = self.0 * q[0].sin();
            out.drift_q[0] = self.0 * p[0] * p[0];
        }
        fn energy(&self, s: &State) -> f64 {
            let (p, q) = (s.p[0], s.q[0]);
            0.5 * p * p + self.0 * (q.cos() + p * p * p / 3.0)
        }
    }

    #[test]
    fn momentum_dependent_perturbation_conserves_energy() {
        // the kick map is no longer exact here, but it is still a symmetric
        // composition of explicit maps: energy stays bounded near its start
        let h = MixedPerturbation(1e-3);
        let scheme = make_scheme(SchemeFamily::Sbab, 2).unwrap();
        let mut stepper = Stepper::new(&h, &scheme, 0.01);
        let mut s = State::scalar(0.8, 0.1);
        let e0 = h.energy(&s);
        let mut tap = StageTap::new(1);
        for _ in 0..10_000 {
            stepper.step(&mut s, Some(&mut tap)).unwrap();
        }
        assert!(tap.iter().any(|v| v.drift_q[0] != 0.0));
        assert!((h.energy(&s) - e0).abs() < 1e-6);
    }

    proptest! {
        #[test]
        fn forward_backward_returns_start(
            p in -2.0..2.0f64,
            q in -4.0..4.0f64,
            dt in 0.001..0.2f64,
            spin in any::<bool>(),
            family in prop_oneof![Just(SchemeFamily::Saba), Just(SchemeFamily::Sbab)],
            n in 1usize..=6,
        ) {
            let problem = if spin {
                SplitProblem::spin_orbit(0.01, 1e-4, 0.2)
            } else {
                SplitProblem::pendulum(0.01)
            };
            let scheme = make_scheme(family, n).unwrap();
            let start = State::scalar(p, q);
            let (fwd, _) = slice_step(&problem, &scheme, &start, dt, false).unwrap();
            let (back, _) = slice_step(&problem, &scheme, &fwd, -dt, false).unwrap();
            prop_assert!((back.p[0] - p).abs() <= 1e-13 * p.abs().max(1.0));
            prop_assert!((back.q[0] - q).abs() <= 1e-13 * q.abs().max(1.0));
        }
    }

    #[test]
    fn first_order_consistency() {
        // (step(y) - y) / dt = f + eps g + dt/2 * y'' + O(dt^2)
        let pend = SplitProblem::pendulum(0.3);
        let scheme = make_scheme(SchemeFamily::Sbab, 4).unwrap();
        let start = State::scalar(0.9, 0.7);
        let exact_p = -0.3 * 0.7f64.sin();
        let exact_q = 0.9;
        let errs: Vec<f64> = [1e-3, 1e-4]
            .iter()
            .map(|&dt| {
                let (out, _) = slice_step(&pend, &scheme, &start, dt, false).unwrap();
                let dp = (out.p[0] - start.p[0]) / dt - exact_p;
                let dq = (out.q[0] - start.q[0]) / dt - exact_q;
                dp.hypot(dq)
            })
            .collect();
        let ratio = errs[0] / errs[1];
        assert!(ratio > 8.0 && ratio < 12.0, "ratio {ratio}, errs {errs:?}");
    }
}
