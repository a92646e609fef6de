//! Shifting-window parallel-in-time integration.
//!
//! The run is cut into slices of `j` fine steps. A window of `P` slices is in
//! flight at once. Every iteration has two phases:
//!
//! 1. **Predictor** (parallel): each slice whose start changed is integrated
//!    with the full scheme from its current start, and every kick increment is
//!    saved.
//! 2. **Corrector** (sequential): sweeping left to right, each slice is
//!    re-integrated from the freshly corrected end of its left neighbour. The
//!    drifts are recomputed, the kicks are taken from the saved increments, and
//!    the endpoint receives the remainder `G(new) - G(previous pass)`, with `G`
//!    the perturbation at the endpoint weighted by the slice length. On a
//!    slice's first pass the previous iterate is its drift-only seed (see
//!    [`RemainderStart`]).
//!
//! The first slice of the window starts from an accepted value, so its
//! predictor result is already the sequential one and is accepted outright.
//! Following slices are accepted while their corrected endpoint reproduces the
//! previous iterate bit for bit; the window then shifts past them. Because the
//! corrector replays the sequential operation sequence exactly, the accepted
//! values are bitwise identical to a sequential run with the same scheme.

mod window;

pub use window::{
    correct_pass, init_window, predict_slice, run_window, verify_against_sequential,
    ExecMode, FrontierState, IterationLog, IterationRecord, RemainderStart, SliceCell, Variant, WindowConfig,
    WindowRun, WindowState,
};
