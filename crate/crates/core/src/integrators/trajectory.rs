use std::io::{Read, Write};
use std::path::Path;

use super::{SchemeSpec, Stepper};
use crate::error::{Error, Result};
use crate::io::{format_f64, parse_f64, write_atomic, FloatFormat};
use crate::problems::{SplitHamiltonian, State};

/// States sampled every `sample_every` steps of a fixed-step integration.
#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    pub t0: f64,
    pub dt: f64,
    pub sample_every: usize,
    pub states: Vec<State>,
    pub energies: Vec<f64>,
}

impl Trajectory {
    pub fn len(&self) -> usize {
        self.states.len()
    }

    pub fn is_empty(&self) -> bool {
        self.states.is_empty()
    }

    pub fn last(&self) -> &State {
        self.states.last().expect("a trajectory always holds its initial state")
    }

    /// `max |H(t) - H(t0)|` over the samples.
    pub fn max_energy_error(&self) -> f64 {
        let e0 = self.energies[0];
        self.energies.iter().map(|e| (e - e0).abs()).fold(0.0, f64::max)
    }

    /// Writes `t,p,q,energy` rows (one `p`/`q` column per degree of freedom).
    pub fn write_csv<W: Write>(&self, mut w: W, format: FloatFormat) -> Result<()> {
        let dof = self.states.first().map_or(1, State::dof);
        write_state_header(&mut w, dof, true)?;
        for (state, energy) in self.states.iter().zip(&self.energies) {
            write_state_row(&mut w, state, Some(*energy), format)?;
        }
        Ok(())
    }

    pub fn save_csv(&self, path: &Path, format: FloatFormat) -> Result<()> {
        write_atomic(path, |w| self.write_csv(w, format))
    }
}

pub(crate) fn write_state_header<W: Write>(w: &mut W, dof: usize, energy: bool) -> Result<()> {
    let mut cols = vec!["t".to_string()];
    if dof == 1 {
        cols.extend(["p".to_string(), "q".to_string()]);
    } else {
        cols.extend((1..=dof).map(|i| format!("p{i}")));
        cols.extend((1..=dof).map(|i| format!("q{i}")));
    }
    if energy {
        cols.push("energy".to_string());
    }
    writeln!(w, "{}", cols.join(","))?;
    Ok(())
}

pub(crate) fn write_state_row<W: Write>(
    w: &mut W,
    state: &State,
    energy: Option<f64>,
    format: FloatFormat,
) -> Result<()> {
    let mut fields = Vec::with_capacity(2 + 2 * state.dof());
    fields.push(format_f64(state.t, format));
    fields.extend(state.p.iter().map(|&x| format_f64(x, format)));
    fields.extend(state.q.iter().map(|&x| format_f64(x, format)));
    if let Some(e) = energy {
        fields.push(format_f64(e, format));
    }
    writeln!(w, "{}", fields.join(","))?;
    Ok(())
}

/// Reads rows written by [`Trajectory::write_csv`] (or any `t,p,q[,energy]`
/// table, with `p1..pr,q1..qr` columns for `r > 1`).
pub fn read_states_csv<R: Read>(reader: R) -> Result<Vec<(State, Option<f64>)>> {
    let mut csv = csv::ReaderBuilder::new()
        .comment(Some(b'#'))
        .from_reader(reader);
    let header: Vec<String> = csv.headers()?.iter().map(str::to_string).collect();
    let energy = header.last().is_some_and(|h| h == "energy");
    let coords = header.len().saturating_sub(1 + usize::from(energy));
    let dof = coords / 2;
    let mut expected = Vec::new();
    write_state_header(&mut expected, dof.max(1), energy)?;
    if dof == 0 || coords % 2 != 0 || String::from_utf8_lossy(&expected).trim_end() != header.join(",") {
        return Err(Error::Parse(format!("unrecognised state header `{}`", header.join(","))));
    }
    let mut rows = Vec::new();
    for record in csv.records() {
        let values = record?
            .iter()
            .map(parse_f64)
            .collect::<Result<Vec<f64>>>()?;
        if values.len() != header.len() {
            return Err(Error::Parse(format!("expected {} fields, got {}", header.len(), values.len())));
        }
        let state = State::new(values[1..1 + dof].to_vec(), values[1 + dof..1 + 2 * dof].to_vec(), values[0]);
        rows.push((state, energy.then(|| values[1 + 2 * dof])));
    }
    Ok(rows)
}

/// Runs `steps` fixed steps of `scheme` from `y0`, sampling every
/// `sample_every` steps (the initial state is always sampled).
pub fn integrate_sequential<H: SplitHamiltonian + ?Sized>(
    problem: &H,
    scheme: &SchemeSpec,
    y0: &State,
    dt: f64,
    steps: usize,
    sample_every: usize,
) -> Result<Trajectory> {
    if sample_every == 0 {
        return Err(Error::InvalidConfig("sample_every must be at least 1".into()));
    }
    if dt == 0.0 || !dt.is_finite() {
        return Err(Error::InvalidConfig(format!("step size must be finite and non-zero, got {dt}")));
    }
    if y0.dof() != problem.dof() || !y0.is_finite() {
        return Err(Error::InvalidConfig(
            "initial state must be finite and match the problem's degrees of freedom".into(),
        ));
    }
    let samples = steps / sample_every + 1;
    let mut states = Vec::with_capacity(samples);
    let mut energies = Vec::with_capacity(samples);
    states.push(y0.clone());
    energies.push(problem.energy(y0));

    let mut stepper = Stepper::new(problem, scheme, dt);
    let mut y = y0.clone();
    for step in 0..steps {
        stepper
            .step(&mut y, None)
            .map_err(|f| Error::NumericalBlowUp { step, stage: f.stage })?;
        if (step + 1) % sample_every == 0 {
            energies.push(problem.energy(&y));
            states.push(y.clone());
        }
    }
    Ok(Trajectory {
        t0: y0.t,
        dt,
        sample_every,
        states,
        energies,
    })
}
