//! Iteration statistics, the linear iteration-count fit and the speed-up model.
//!
//! With `C` the mean number of slices accepted per iteration, a window of `P`
//! slices needs `I = P / C` iterations on average to clear, and a run of `N`
//! fine steps takes `k = N / (j C)` iterations. Empirically `I / j` grows
//! linearly in `P`, `I = j (a P + b)`, which gives the speed-up
//!
//! ```text
//! S(P) = Tp / (a Tc) * P / (P^2 + B P + C)
//! B = Tp / Tc + b / a - 1 / (j a),   C = b Tp / (a Tc)
//! ```
//!
//! maximal at `P = sqrt(b Tp / (a Tc))` and bounded by `1 / a`.

use std::io::{Read, Write};
use std::path::Path;

use crate::error::{Error, Result};
use crate::io::{format_f64, parse_f64, write_atomic, FloatFormat};
use crate::timeparallel::IterationLog;

/// One row of a window-size sweep.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SweepRow {
    /// Window size `P`.
    pub p: usize,
    /// Mean slices accepted per iteration.
    pub c: f64,
    /// Mean iterations per window, `P / C`.
    pub i: f64,
    /// Total iterations.
    pub k: usize,
}

/// Reduces a run log to its sweep row.
pub fn summarize(log: &IterationLog) -> Result<SweepRow> {
    if log.records.is_empty() {
        return Err(Error::EmptyLog);
    }
    let k = log.records.len();
    let accepted: usize = log.records.iter().map(|r| r.conv).sum();
    let c = accepted as f64 / k as f64;
    Ok(SweepRow {
        p: log.window,
        c,
        i: log.window as f64 / c,
        k,
    })
}

pub const SWEEP_HEADER: &str = "P,C_dt,I_dtP,k_dtP";

/// Writes `P,C_dt,I_dtP,k_dtP` rows.
pub fn write_sweep_csv<W: Write>(mut w: W, rows: &[SweepRow], format: FloatFormat) -> Result<()> {
    writeln!(w, "{SWEEP_HEADER}")?;
    for r in rows {
        writeln!(w, "{},{},{},{}", r.p, format_f64(r.c, format), format_f64(r.i, format), r.k)?;
    }
    Ok(())
}

pub fn save_sweep_csv(path: &Path, rows: &[SweepRow], format: FloatFormat) -> Result<()> {
    write_atomic(path, |w| write_sweep_csv(w, rows, format))
}

/// Reads a sweep CSV. Lines starting with `#` are ignored; both float formats
/// are accepted.
pub fn read_sweep_csv<R: Read>(reader: R) -> Result<Vec<SweepRow>> {
    let mut csv = csv::ReaderBuilder::new()
        .comment(Some(b'#'))
        .trim(csv::Trim::All)
        .from_reader(reader);
    let header: Vec<String> = csv.headers()?.iter().map(str::to_string).collect();
    if header.join(",") != SWEEP_HEADER {
        return Err(Error::Parse(format!(
            "expected header `{SWEEP_HEADER}`, found `{}`",
            header.join(",")
        )));
    }
    let count = |s: &str, what: &str| {
        s.parse::<usize>()
            .map_err(|_| Error::Parse(format!("{what} must be a non-negative integer, got `{s}`")))
    };
    let mut rows = Vec::new();
    for record in csv.records() {
        let record = record?;
        if record.len() != 4 {
            return Err(Error::Parse(format!("expected 4 fields, got {}", record.len())));
        }
        rows.push(SweepRow {
            p: count(&record[0], "P")?,
            c: parse_f64(&record[1])?,
            i: parse_f64(&record[2])?,
            k: count(&record[3], "k")?,
        });
    }
    Ok(rows)
}

pub fn load_sweep_csv(path: &Path) -> Result<Vec<SweepRow>> {
    read_sweep_csv(std::fs::File::open(path)?)
}

/// `I = j (a P + b)`.
#[derive(Debug, Clone, PartialEq)]
pub struct FitParams {
    pub a: f64,
    pub b: f64,
    pub j: usize,
    /// `I / j - (a P + b)` per input row.
    pub residuals: Vec<f64>,
}

impl FitParams {
    /// Mean iterations per window predicted at `p`.
    pub fn iterations_per_window(&self, p: f64) -> f64 {
        self.j as f64 * (self.a * p + self.b)
    }

    /// Total iterations predicted for `steps` fine steps, `(a + b / P) N`.
    pub fn total_iterations(&self, p: f64, steps: f64) -> f64 {
        (self.a + self.b / p) * steps
    }

    /// Mean slices accepted per iteration, `1 / (j (a + b / P))`.
    pub fn mean_converged(&self, p: f64) -> f64 {
        1.0 / (self.j as f64 * (self.a + self.b / p))
    }
}

/// Ordinary least squares of `I / j` against `P`.
pub fn fit_ab(rows: &[SweepRow], j: usize) -> Result<FitParams> {
    if j == 0 {
        return Err(Error::DegenerateFit("j must be positive".into()));
    }
    if rows.len() < 2 {
        return Err(Error::DegenerateFit(format!("need at least 2 rows, got {}", rows.len())));
    }
    let jf = j as f64;
    let n = rows.len() as f64;
    let xs: Vec<f64> = rows.iter().map(|r| r.p as f64).collect();
    let ys: Vec<f64> = rows.iter().map(|r| r.i / jf).collect();
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxx: f64 = xs.iter().map(|x| (x - mx) * (x - mx)).sum();
    if sxx == 0.0 {
        return Err(Error::DegenerateFit("all rows share the same P".into()));
    }
    let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let a = sxy / sxx;
    let b = my - a * mx;
    let residuals = xs.iter().zip(&ys).map(|(x, y)| y - (a * x + b)).collect();
    Ok(FitParams { a, b, j, residuals })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SpeedupInputs {
    pub a: f64,
    pub b: f64,
    pub j: usize,
    /// Predictor time per slice.
    pub tp: f64,
    /// Corrector time per slice.
    pub tc: f64,
}

impl SpeedupInputs {
    /// Times only enter through their ratio, so `tc` is set to one.
    pub fn with_ratio(a: f64, b: f64, j: usize, tp_over_tc: f64) -> Self {
        Self { a, b, j, tp: tp_over_tc, tc: 1.0 }
    }

    /// `Tp` and `Tc` from the drift and kick evaluation times, via [`cost_model`].
    pub fn from_stage_times(a: f64, b: f64, j: usize, ta: f64, tb: f64) -> Self {
        let cost = cost_model(j, 1, 1.0, ta, tb);
        Self { a, b, j, tp: cost.tp, tc: cost.tc }
    }

    pub fn validate(&self) -> Result<()> {
        let fields = [("a", self.a), ("b", self.b), ("Tp", self.tp), ("Tc", self.tc)];
        for (name, v) in fields {
            if !(v > 0.0 && v.is_finite()) {
                return Err(Error::ModelDomain(format!("{name} must be positive, got {v}")));
            }
        }
        if self.j == 0 {
            return Err(Error::ModelDomain("j must be positive".into()));
        }
        Ok(())
    }

    fn coeffs(&self) -> (f64, f64) {
        let ratio = self.tp / self.tc;
        let big_b = ratio + self.b / self.a - 1.0 / (self.j as f64 * self.a);
        let big_c = self.b * ratio / self.a;
        (big_b, big_c)
    }

    /// `sqrt(b Tp / (a Tc))`.
    pub fn continuous_optimum(&self) -> f64 {
        (self.b * self.tp / (self.a * self.tc)).sqrt()
    }

    /// Closed-form maximum of the continuous model,
    /// `1 / (a + 2a sqrt(b Tc / (a Tp)) + (b - 1/j) Tc / Tp)`.
    pub fn closed_form_max(&self) -> f64 {
        let r = self.tc / self.tp;
        1.0 / (self.a + 2.0 * self.a * (self.b * r / self.a).sqrt() + (self.b - 1.0 / self.j as f64) * r)
    }

    /// Upper bound `1 / a`.
    pub fn bound(&self) -> f64 {
        1.0 / self.a
    }
}

/// Model speed-up of a window of `p` slices over the sequential run.
pub fn speedup(p: f64, inp: &SpeedupInputs) -> Result<f64> {
    inp.validate()?;
    if p == 0.0 {
        return Ok(0.0);
    }
    if p < 0.0 || !p.is_finite() {
        return Err(Error::ModelDomain(format!("window size must be non-negative, got {p}")));
    }
    let (big_b, big_c) = inp.coeffs();
    let denom = p * p + big_b * p + big_c;
    if denom <= 0.0 {
        return Err(Error::ModelDomain(format!("non-positive denominator {denom} at P = {p}")));
    }
    Ok(inp.tp / (inp.a * inp.tc) * p / denom)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OptimalWindow {
    /// Best integer window size.
    pub p_star: usize,
    /// `S(p_star)`.
    pub s_at_p_star: f64,
    /// Continuous maximizer.
    pub p_cont: f64,
    /// Closed-form maximum at `p_cont`.
    pub s_closed_form: f64,
    /// `1 / a`.
    pub bound: f64,
}

/// The speed-up is unimodal in `P`, so the best integer is one of the two
/// neighbours of the continuous optimum.
pub fn optimal_window(inp: &SpeedupInputs) -> Result<OptimalWindow> {
    inp.validate()?;
    let p_cont = inp.continuous_optimum();
    let lo = (p_cont.floor() as usize).max(1);
    let mut best = (lo, speedup(lo as f64, inp)?);
    let hi = lo + 1;
    let s_hi = speedup(hi as f64, inp)?;
    if s_hi > best.1 {
        best = (hi, s_hi);
    }
    Ok(OptimalWindow {
        p_star: best.0,
        s_at_p_star: best.1,
        p_cont,
        s_closed_form: inp.closed_form_max(),
        bound: inp.bound(),
    })
}

/// `(P, S(P))` for `P = 1..=p_max`.
pub fn speedup_curve(inp: &SpeedupInputs, p_max: usize) -> Result<Vec<(usize, f64)>> {
    (1..=p_max).map(|p| Ok((p, speedup(p as f64, inp)?))).collect()
}

pub fn write_speedup_csv<W: Write>(mut w: W, curve: &[(usize, f64)], format: FloatFormat) -> Result<()> {
    writeln!(w, "P,S")?;
    for &(p, s) in curve {
        writeln!(w, "{p},{}", format_f64(s, format))?;
    }
    Ok(())
}

/// Per-iteration wall-clock estimate for a scheme with four drifts and five
/// kicks per step (`SBAB_4`).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IterationCost {
    /// Predictor time per slice, `j (4 Ta + 5 Tb)`.
    pub tp: f64,
    /// Corrector time per slice, `4 j Ta + Tb`.
    pub tc: f64,
    /// `Tp + (P - C) Tc`.
    pub per_iteration: f64,
    pub ratio: f64,
}

pub fn cost_model(j: usize, p: usize, c: f64, ta: f64, tb: f64) -> IterationCost {
    let jf = j as f64;
    let tp = jf * (4.0 * ta + 5.0 * tb);
    let tc = 4.0 * jf * ta + tb;
    IterationCost {
        tp,
        tc,
        per_iteration: tp + (p as f64 - c) * tc,
        ratio: tp / tc,
    }
}
