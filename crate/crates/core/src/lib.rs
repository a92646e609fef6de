//! Shifting-window parallel-in-time integration of almost-integrable
//! Hamiltonian systems.
//!
//! A long fixed-step run of an explicit symplectic scheme is cut into slices.
//! Slices inside a moving window are integrated in parallel from provisional
//! starting values, then corrected sequentially by replaying the saved
//! perturbation increments. The accepted values are bitwise identical to the
//! sequential run.
//!
//! ```
//! use parawin::integrators::{integrate_sequential, SchemeSpec};
//! use parawin::problems::{SplitProblem, State};
//! use parawin::timeparallel::{run_window, WindowConfig};
//!
//! let problem = SplitProblem::pendulum(0.01);
//! let scheme: SchemeSpec = "sbab4".parse()?;
//! let y0 = State::scalar(1.0, 0.0);
//! let cfg = WindowConfig::new(problem, scheme.clone(), y0.clone(), 0.01, 2_000, 100, 8);
//! let run = run_window(&cfg)?;
//!
//! let seq = integrate_sequential(&problem, &scheme, &y0, 0.01, 2_000, 100)?;
//! assert!(run.u.iter().zip(&seq.states).all(|(a, b)| a.same_point(b)));
//! # Ok::<(), parawin::Error>(())
//! ```

pub mod analysis;
pub mod cli;
pub mod error;
pub mod integrators;
pub mod io;
pub mod problems;
pub mod timeparallel;

pub use error::{Error, Result};
