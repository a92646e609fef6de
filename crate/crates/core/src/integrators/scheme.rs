//! Symmetric drift/kick compositions.
//!
//! `SABA_n` interleaves `n + 1` drifts with `n` kicks, `SBAB_n` interleaves
//! `n + 1` kicks with `n` drifts. The coefficients cancel every `tau^k eps`
//! error term up to `k = 2n`, leaving `O(tau^{2n} eps + tau^2 eps^2)`. Those
//! conditions are the exactness conditions of a quadrature rule along the
//! unperturbed flow, so the kick positions are Gauss-Legendre nodes on `[0, 1]`
//! for `SABA_n` and Gauss-Lobatto nodes for `SBAB_n`, with the quadrature
//! weights as kick coefficients. `SBAB_1` is the kick-drift-kick leapfrog.

use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};

/// Largest `n` accepted by [`make_scheme`].
pub const MAX_ORDER_INDEX: usize = 10;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum SchemeFamily {
    /// Drift first: `A B A ... B A`.
    Saba,
    /// Kick first: `B A B ... A B`.
    Sbab,
}

impl fmt::Display for SchemeFamily {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            SchemeFamily::Saba => f.write_str("saba"),
            SchemeFamily::Sbab => f.write_str("sbab"),
        }
    }
}

/// One stage of a composition, as a fraction of the step.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Stage {
    Drift(f64),
    Kick(f64),
}

/// Coefficients of an explicit symmetric symplectic composition.
#[derive(Debug, Clone, PartialEq)]
pub struct SchemeSpec {
    pub family: SchemeFamily,
    pub n: usize,
    pub drift_coeffs: Vec<f64>,
    pub kick_coeffs: Vec<f64>,
}

impl SchemeSpec {
    /// Kick-drift-kick leapfrog, identical to `sbab(1)`.
    pub fn leapfrog() -> Self {
        Self {
            family: SchemeFamily::Sbab,
            n: 1,
            drift_coeffs: vec![1.0],
            kick_coeffs: vec![0.5, 0.5],
        }
    }

    pub fn name(&self) -> String {
        format!("{}{}", self.family, self.n)
    }

    pub fn kick_count(&self) -> usize {
        self.kick_coeffs.len()
    }

    pub fn drift_count(&self) -> usize {
        self.drift_coeffs.len()
    }

    /// Stages in execution order.
    pub fn stages(&self) -> Vec<Stage> {
        let mut out = Vec::with_capacity(self.kick_count() + self.drift_count());
        let (first, second): (&[f64], &[f64]) = match self.family {
            SchemeFamily::Saba => (&self.drift_coeffs, &self.kick_coeffs),
            SchemeFamily::Sbab => (&self.kick_coeffs, &self.drift_coeffs),
        };
        let wrap = |c: f64, leading: bool| match (self.family, leading) {
            (SchemeFamily::Saba, true) | (SchemeFamily::Sbab, false) => Stage::Drift(c),
            _ => Stage::Kick(c),
        };
        for (i, &c) in first.iter().enumerate() {
            out.push(wrap(c, true));
            if let Some(&d) = second.get(i) {
                out.push(wrap(d, false));
            }
        }
        out
    }
}

impl fmt::Display for SchemeSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}{}", self.family, self.n)
    }
}

impl FromStr for SchemeSpec {
    type Err = Error;

    /// Accepts `leapfrog`, `sabaN` and `sbabN` (case-insensitive).
    fn from_str(s: &str) -> Result<Self> {
        let lower = s.trim().to_ascii_lowercase();
        if lower == "leapfrog" {
            return Ok(Self::leapfrog());
        }
        let (family, digits) = if let Some(rest) = lower.strip_prefix("saba") {
            (SchemeFamily::Saba, rest)
        } else if let Some(rest) = lower.strip_prefix("sbab") {
            (SchemeFamily::Sbab, rest)
        } else {
            return Err(Error::Parse(format!("unknown scheme `{s}`")));
        };
        let n = digits
            .trim_start_matches(['(', '_'])
            .trim_end_matches(')')
            .parse::<usize>()
            .map_err(|_| Error::Parse(format!("bad scheme order in `{s}`")))?;
        make_scheme(family, n)
    }
}

/// Builds `SABA_n` or `SBAB_n`.
pub fn make_scheme(family: SchemeFamily, n: usize) -> Result<SchemeSpec> {
    if n == 0 || n > MAX_ORDER_INDEX {
        return Err(Error::UnsupportedScheme {
            family: family.to_string(),
            n,
        });
    }
    if family == SchemeFamily::Sbab && n == 1 {
        return Ok(SchemeSpec::leapfrog());
    }
    let (nodes, weights) = match family {
        SchemeFamily::Saba => gauss_legendre_unit(n),
        SchemeFamily::Sbab => gauss_lobatto_unit(n + 1),
    };
    let drift_coeffs = match family {
        // drifts fill the gaps 0 -> x_1 -> ... -> x_n -> 1
        SchemeFamily::Saba => {
            let mut gaps = Vec::with_capacity(n + 1);
            gaps.push(nodes[0]);
            gaps.extend(nodes.windows(2).map(|w| w[1] - w[0]));
            gaps.push(1.0 - nodes[n - 1]);
            symmetrize(gaps)
        }
        // nodes include both endpoints
        SchemeFamily::Sbab => symmetrize(nodes.windows(2).map(|w| w[1] - w[0]).collect()),
    };
    Ok(SchemeSpec {
        family,
        n,
        drift_coeffs,
        kick_coeffs: symmetrize(weights),
    })
}

/// Mirrors the first half onto the second so the list is exactly palindromic,
/// then recomputes a central element (if any) so the sum is one.
fn symmetrize(mut coeffs: Vec<f64>) -> Vec<f64> {
    let len = coeffs.len();
    for i in 0..len / 2 {
        coeffs[len - 1 - i] = coeffs[i];
    }
    if len % 2 == 1 {
        let half: f64 = coeffs[..len / 2].iter().sum();
        coeffs[len / 2] = 1.0 - 2.0 * half;
    }
    coeffs
}

/// `(P_n(x), P_n'(x))` by the three-term recurrence.
fn legendre(n: usize, x: f64) -> (f64, f64) {
    let (mut p_prev, mut p) = (1.0, x);
    if n == 0 {
        return (1.0, 0.0);
    }
    for k in 2..=n {
        let k = k as f64;
        let next = ((2.0 * k - 1.0) * x * p - (k - 1.0) * p_prev) / k;
        p_prev = p;
        p = next;
    }
    let dp = n as f64 * (x * p - p_prev) / (x * x - 1.0);
    (p, dp)
}

/// Newton iteration until the update stops shrinking the residual.
fn polish(mut x: f64, f: impl Fn(f64) -> (f64, f64)) -> f64 {
    for _ in 0..100 {
        let (value, slope) = f(x);
        let dx = value / slope;
        x -= dx;
        if dx.abs() <= 4.0 * f64::EPSILON * x.abs().max(1.0) {
            break;
        }
    }
    x
}

/// `n`-point Gauss-Legendre rule mapped to `[0, 1]`, nodes ascending.
pub(crate) fn gauss_legendre_unit(n: usize) -> (Vec<f64>, Vec<f64>) {
    let mut nodes = Vec::with_capacity(n);
    let mut weights = Vec::with_capacity(n);
    for i in 1..=n {
        let guess = -(std::f64::consts::PI * (i as f64 - 0.25) / (n as f64 + 0.5)).cos();
        let x = polish(guess, |x| legendre(n, x));
        let (_, dp) = legendre(n, x);
        nodes.push(0.5 * (1.0 + x));
        // weight on [-1, 1] is 2 / ((1 - x^2) P_n'^2); halve for [0, 1]
        weights.push(1.0 / ((1.0 - x * x) * dp * dp));
    }
    (nodes, weights)
}

/// `m`-point Gauss-Lobatto rule mapped to `[0, 1]`, nodes ascending, `m >= 2`.
pub(crate) fn gauss_lobatto_unit(m: usize) -> (Vec<f64>, Vec<f64>) {
    let n = m - 1;
    let nf = n as f64;
    let mut nodes = vec![0.0; m];
    let mut weights = vec![0.0; m];
    nodes[n] = 1.0;
    weights[0] = 1.0 / (nf * (nf + 1.0));
    weights[n] = weights[0];
    for i in 1..n {
        let guess = -(std::f64::consts::PI * i as f64 / nf).cos();
        // interior nodes are the roots of P_n'; P_n'' from the Legendre equation
        let x = polish(guess, |x| {
            let (p, dp) = legendre(n, x);
            let ddp = (2.0 * x * dp - nf * (nf + 1.0) * p) / (1.0 - x * x);
            (dp, ddp)
        });
        let (p, _) = legendre(n, x);
        nodes[i] = 0.5 * (1.0 + x);
        weights[i] = 1.0 / (nf * (nf + 1.0) * p * p);
    }
    (nodes, weights)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn assert_close(a: &[f64], b: &[f64], tol: f64) {
        assert_eq!(a.len(), b.len());
        for (x, y) in a.iter().zip(b) {
            assert!((x - y).abs() <= tol, "{a:?} vs {b:?}");
        }
    }

    #[test]
    fn leapfrog_and_saba1() {
        let lf = make_scheme(SchemeFamily::Sbab, 1).unwrap();
        assert_eq!(lf.kick_coeffs, vec![0.5, 0.5]);
        assert_eq!(lf.drift_coeffs, vec![1.0]);
        assert_eq!(lf, SchemeSpec::leapfrog());
        let saba1 = make_scheme(SchemeFamily::Saba, 1).unwrap();
        assert_eq!(saba1.drift_coeffs, vec![0.5, 0.5]);
        assert_eq!(saba1.kick_coeffs, vec![1.0]);
    }

    #[test]
    fn closed_form_coefficients() {
        let s3 = 3f64.sqrt();
        let saba2 = make_scheme(SchemeFamily::Saba, 2).unwrap();
        assert_close(&saba2.drift_coeffs, &[0.5 - s3 / 6.0, s3 / 3.0, 0.5 - s3 / 6.0], 1e-15);
        assert_close(&saba2.kick_coeffs, &[0.5, 0.5], 1e-15);

        let sbab2 = make_scheme(SchemeFamily::Sbab, 2).unwrap();
        assert_close(&sbab2.drift_coeffs, &[0.5, 0.5], 1e-15);
        assert_close(&sbab2.kick_coeffs, &[1.0 / 6.0, 2.0 / 3.0, 1.0 / 6.0], 1e-15);

        let s5 = 5f64.sqrt();
        let sbab3 = make_scheme(SchemeFamily::Sbab, 3).unwrap();
        assert_close(&sbab3.drift_coeffs, &[0.5 - s5 / 10.0, s5 / 5.0, 0.5 - s5 / 10.0], 1e-15);
        assert_close(&sbab3.kick_coeffs, &[1.0 / 12.0, 5.0 / 12.0, 5.0 / 12.0, 1.0 / 12.0], 1e-15);

        let s21 = 21f64.sqrt();
        let sbab4 = make_scheme(SchemeFamily::Sbab, 4).unwrap();
        let c1 = 0.5 - s21 / 14.0;
        assert_close(&sbab4.drift_coeffs, &[c1, s21 / 14.0, s21 / 14.0, c1], 1e-15);
        assert_close(
            &sbab4.kick_coeffs,
            &[1.0 / 20.0, 49.0 / 180.0, 16.0 / 45.0, 49.0 / 180.0, 1.0 / 20.0],
            1e-15,
        );
    }

    #[test]
    fn invariants_for_all_supported() {
        for family in [SchemeFamily::Saba, SchemeFamily::Sbab] {
            for n in 1..=MAX_ORDER_INDEX {
                let s = make_scheme(family, n).unwrap();
                let (kicks, drifts) = match family {
                    SchemeFamily::Saba => (n, n + 1),
                    SchemeFamily::Sbab => (n + 1, n),
                };
                assert_eq!(s.kick_count(), kicks);
                assert_eq!(s.drift_count(), drifts);
                for c in [&s.drift_coeffs, &s.kick_coeffs] {
                    let rev: Vec<f64> = c.iter().rev().copied().collect();
                    assert_eq!(c, &rev, "{family}{n} not palindromic");
                    assert!((c.iter().sum::<f64>() - 1.0).abs() < 1e-14);
                }
                let stages = s.stages();
                assert_eq!(stages.len(), kicks + drifts);
                let leading_kick = matches!(stages[0], Stage::Kick(_));
                assert_eq!(leading_kick, family == SchemeFamily::Sbab);
            }
        }
    }

    #[test]
    fn quadrature_exactness() {
        // n-point Gauss integrates degree 2n-1 exactly, m-point Lobatto 2m-3
        for n in 1..=8 {
            let (x, w) = gauss_legendre_unit(n);
            for deg in 0..2 * n {
                let q: f64 = x.iter().zip(&w).map(|(x, w)| w * x.powi(deg as i32)).sum();
                assert!((q - 1.0 / (deg as f64 + 1.0)).abs() < 1e-14, "gauss n={n} deg={deg}");
            }
        }
        for m in 2..=9 {
            let (x, w) = gauss_lobatto_unit(m);
            for deg in 0..=(2 * m - 3) {
                let q: f64 = x.iter().zip(&w).map(|(x, w)| w * x.powi(deg as i32)).sum();
                assert!((q - 1.0 / (deg as f64 + 1.0)).abs() < 1e-14, "lobatto m={m} deg={deg}");
            }
        }
    }

    #[test]
    fn unsupported_orders() {
        assert!(matches!(
            make_scheme(SchemeFamily::Sbab, 0),
            Err(Error::UnsupportedScheme { .. })
        ));
        assert!(make_scheme(SchemeFamily::Saba, MAX_ORDER_INDEX + 1).is_err());
    }

    #[test]
    fn parse_names() {
        assert_eq!("leapfrog".parse::<SchemeSpec>().unwrap(), SchemeSpec::leapfrog());
        assert_eq!("SBAB4".parse::<SchemeSpec>().unwrap().kick_count(), 5);
        assert_eq!("saba(3)".parse::<SchemeSpec>().unwrap().drift_count(), 4);
        assert!("rk4".parse::<SchemeSpec>().is_err());
        assert!("sbab".parse::<SchemeSpec>().is_err());
    }
}
