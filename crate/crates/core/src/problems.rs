//! Separable almost-integrable Hamiltonians `H = H_int(p) + eps * H_per(t, q, p)`.
//!
//! The integrable part must depend on the momenta only so that its flow (the
//! *drift*) is an exact rotation of the angles. The perturbation is separable,
//! `H_per = H^p(t, q) + H^q(t, p)`, which makes the *kick* explicit as well.
//!
//! Evaluators never allocate: they write into caller-provided buffers so the
//! integrators can call them in tight loops from many threads at once.

use std::fmt;

/// A phase-space point: one canonical pair `(p, q)` per degree of freedom.
#[derive(Debug, Clone, PartialEq)]
pub struct State {
    pub p: Vec<f64>,
    pub q: Vec<f64>,
    pub t: f64,
}

impl State {
    pub fn new(p: Vec<f64>, q: Vec<f64>, t: f64) -> Self {
        assert_eq!(p.len(), q.len(), "p and q must have the same length");
        assert!(!p.is_empty(), "a state needs at least one degree of freedom");
        Self { p, q, t }
    }

    /// Single degree of freedom at `t = 0`.
    pub fn scalar(p: f64, q: f64) -> Self {
        Self::new(vec![p], vec![q], 0.0)
    }

    pub fn dof(&self) -> usize {
        self.p.len()
    }

    pub fn is_finite(&self) -> bool {
        self.t.is_finite()
            && self.p.iter().all(|x| x.is_finite())
            && self.q.iter().all(|x| x.is_finite())
    }

    /// Bitwise equality of the phase-space coordinates (time is not compared).
    pub fn same_point(&self, other: &State) -> bool {
        fn bits_eq(a: &[f64], b: &[f64]) -> bool {
            a.len() == b.len() && a.iter().zip(b).all(|(x, y)| x.to_bits() == y.to_bits())
        }
        bits_eq(&self.p, &other.p) && bits_eq(&self.q, &other.q)
    }

    /// Euclidean distance between the phase-space coordinates.
    pub fn distance(&self, other: &State) -> f64 {
        let dp = self.p.iter().zip(&other.p).map(|(a, b)| (a - b) * (a - b));
        let dq = self.q.iter().zip(&other.q).map(|(a, b)| (a - b) * (a - b));
        dp.chain(dq).sum::<f64>().sqrt()
    }
}

/// `eps * g(t, y)`: the perturbing part of the vector field, with the small
/// parameter already multiplied in.
#[derive(Debug, Clone, PartialEq)]
pub struct PerturbationValue {
    /// Contribution to `dp/dt`, i.e. `-eps * dH^p/dq`.
    pub force_p: Vec<f64>,
    /// Contribution to `dq/dt`, i.e. `eps * dH^q/dp`.
    pub drift_q: Vec<f64>,
}

impl PerturbationValue {
    pub fn zeros(dof: usize) -> Self {
        Self {
            force_p: vec![0.0; dof],
            drift_q: vec![0.0; dof],
        }
    }

    pub fn dof(&self) -> usize {
        self.force_p.len()
    }

    pub fn is_zero(&self) -> bool {
        self.force_p.iter().chain(&self.drift_q).all(|&x| x == 0.0)
    }

    /// Multiplies every component by `factor` in place.
    pub fn scale(&mut self, factor: f64) {
        for x in self.force_p.iter_mut().chain(self.drift_q.iter_mut()) {
            *x *= factor;
        }
    }
}

/// Evaluator interface consumed by every integrator.
///
/// Implementations must be pure: the same inputs always produce the same bits,
/// and no call may observe another.
pub trait SplitHamiltonian: Send + Sync {
    /// Degrees of freedom `r`.
    fn dof(&self) -> usize;

    /// `dH_int/dp`, written into `out`.
    fn integrable_drift(&self, p: &[f64], out: &mut [f64]);

    /// `eps * g(t, q, p)`, written into `out`.
    fn perturbation(&self, t: f64, p: &[f64], q: &[f64], out: &mut PerturbationValue);

    /// Total energy `H(t, p, q)`.
    fn energy(&self, state: &State) -> f64;

    /// Owned variant of [`SplitHamiltonian::integrable_drift`].
    fn eval_integrable_drift(&self, p: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; p.len()];
        self.integrable_drift(p, &mut out);
        out
    }

    /// Owned variant of [`SplitHamiltonian::perturbation`].
    fn eval_perturbation(&self, t: f64, state: &State) -> PerturbationValue {
        let mut out = PerturbationValue::zeros(state.dof());
        self.perturbation(t, &state.p, &state.q, &mut out);
        out
    }
}

/// The built-in test problems.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ProblemKind {
    /// `H = p^2/2 - eps cos q`.
    Pendulum,
    /// `H = p^2/2 - eps cos 2q - alpha (cos(2q + phi) - 7 cos(2q - phi))`.
    SpinOrbit { alpha: f64, phi: f64 },
}

/// A built-in one-degree-of-freedom problem with its parameters.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SplitProblem {
    pub kind: ProblemKind,
    pub epsilon: f64,
}

impl SplitProblem {
    pub fn pendulum(epsilon: f64) -> Self {
        Self {
            kind: ProblemKind::Pendulum,
            epsilon,
        }
    }

    pub fn spin_orbit(epsilon: f64, alpha: f64, phi: f64) -> Self {
        Self {
            kind: ProblemKind::SpinOrbit { alpha, phi },
            epsilon,
        }
    }

    pub fn name(&self) -> &'static str {
        match self.kind {
            ProblemKind::Pendulum => "pendulum",
            ProblemKind::SpinOrbit { .. } => "spin_orbit",
        }
    }

    /// `dH/dq` of the perturbing part (including the small parameters).
    fn potential_gradient(&self, q: f64) -> f64 {
        let eps = self.epsilon;
        match self.kind {
            ProblemKind::Pendulum => eps * q.sin(),
            ProblemKind::SpinOrbit { alpha, phi } => {
                let two_q = 2.0 * q;
                2.0 * eps * two_q.sin() + 2.0 * alpha * (two_q + phi).sin()
                    - 14.0 * alpha * (two_q - phi).sin()
            }
        }
    }
}

impl SplitHamiltonian for SplitProblem {
    fn dof(&self) -> usize {
        1
    }

    fn integrable_drift(&self, p: &[f64], out: &mut [f64]) {
        out.copy_from_slice(p);
    }

    fn perturbation(&self, _t: f64, _p: &[f64], q: &[f64], out: &mut PerturbationValue) {
        for (f, &qi) in out.force_p.iter_mut().zip(q) {
            *f = -self.potential_gradient(qi);
        }
        out.drift_q.fill(0.0);
    }

    fn energy(&self, state: &State) -> f64 {
        let (p, q) = (state.p[0], state.q[0]);
        let kinetic = 0.5 * p * p;
        match self.kind {
            ProblemKind::Pendulum => kinetic - self.epsilon * q.cos(),
            ProblemKind::SpinOrbit { alpha, phi } => {
                let two_q = 2.0 * q;
                kinetic
                    - self.epsilon * two_q.cos()
                    - alpha * ((two_q + phi).cos() - 7.0 * (two_q - phi).cos())
            }
        }
    }
}

impl fmt::Display for SplitProblem {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.kind {
            ProblemKind::Pendulum => write!(f, "pendulum(eps={})", self.epsilon),
            ProblemKind::SpinOrbit { alpha, phi } => write!(
                f,
                "spin_orbit(eps={}, alpha={}, phi={})",
                self.epsilon, alpha, phi
            ),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn fd_force(problem: &SplitProblem, p: f64, q: f64) -> f64 {
        let h = 1e-6;
        let plus = problem.energy(&State::scalar(p, q + h));
        let minus = problem.energy(&State::scalar(p, q - h));
        -(plus - minus) / (2.0 * h)
    }

    #[test]
    fn drift_is_momentum() {
        let pend = SplitProblem::pendulum(0.01);
        assert_eq!(pend.eval_integrable_drift(&[1.0]), vec![1.0]);
        assert_eq!(pend.eval_integrable_drift(&[0.0]), vec![0.0]);
        let spin = SplitProblem::spin_orbit(0.01, 1e-4, 0.2);
        assert_eq!(spin.eval_integrable_drift(&[-2.5]), vec![-2.5]);
    }

    #[test]
    fn pendulum_force_values() {
        let pend = SplitProblem::pendulum(0.01);
        let at_zero = pend.eval_perturbation(0.0, &State::scalar(1.0, 0.0));
        assert_eq!(at_zero.force_p[0], 0.0);
        let at_quarter = pend.eval_perturbation(0.0, &State::scalar(1.0, std::f64::consts::FRAC_PI_2));
        assert!((at_quarter.force_p[0] + 0.01).abs() < 1e-15);
        let fd = fd_force(&pend, 1.0, std::f64::consts::FRAC_PI_2);
        assert!((fd + 0.01).abs() < 1e-9);
    }

    #[test]
    fn spin_orbit_force_at_zero_angle() {
        let spin = SplitProblem::spin_orbit(0.01, 1e-4, 0.2);
        let v = spin.eval_perturbation(0.0, &State::scalar(1.0, 0.0));
        let expected = -16.0 * 1e-4 * 0.2_f64.sin();
        assert!((v.force_p[0] - expected).abs() < 1e-18);
        let fd = fd_force(&spin, 1.0, 0.0);
        assert!((fd - expected).abs() / expected.abs() < 1e-6);
    }

    #[test]
    fn energies() {
        let pend = SplitProblem::pendulum(0.01);
        assert!((pend.energy(&State::scalar(1.0, 0.0)) - 0.49).abs() < 1e-15);
        assert_eq!(SplitProblem::pendulum(0.0).energy(&State::scalar(0.0, 0.0)), 0.0);
        let spin = SplitProblem::spin_orbit(0.01, 1e-4, 0.2);
        // cos(0.2) - 7 cos(0.2) = -6 cos(0.2)
        let expected = 0.5 - 0.01 + 6e-4 * 0.2_f64.cos();
        assert!((spin.energy(&State::scalar(1.0, 0.0)) - expected).abs() < 1e-15);
    }

    #[test]
    fn epsilon_is_a_literal_factor() {
        let one = SplitProblem::pendulum(0.01);
        let two = SplitProblem::pendulum(0.02);
        for q in [0.1, 1.0, 2.5, -3.0, 17.0] {
            let s = State::scalar(0.3, q);
            let a = one.eval_perturbation(0.0, &s).force_p[0];
            let b = two.eval_perturbation(0.0, &s).force_p[0];
            assert_eq!(b, 2.0 * a);
        }
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(1000))]

        #[test]
        fn force_matches_finite_difference(p in -3.0..3.0f64, q in -10.0..10.0f64, which in 0..2u8) {
            let problem = if which == 0 {
                SplitProblem::pendulum(0.01)
            } else {
                SplitProblem::spin_orbit(0.01, 1e-4, 0.2)
            };
            let v = problem.eval_perturbation(0.0, &State::scalar(p, q));
            prop_assert_eq!(v.drift_q[0], 0.0);
            let fd = fd_force(&problem, p, q);
            let force = v.force_p[0];
            // Relative to the perturbation scale: near a zero of the force the
            // quotient is dominated by cancellation noise (~eps_mach * |H| / h).
            let tol = 1e-7 * force.abs().max(problem.epsilon);
            prop_assert!((force - fd).abs() <= tol, "force {force} vs fd {fd}");
        }
    }
}
