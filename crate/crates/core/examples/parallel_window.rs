//! One time-parallel run checked against the sequential integrator.
//!
//!     cargo run --release --example parallel_window -- [steps] [window]

use parawin::analysis::summarize;
use parawin::integrators::{integrate_sequential, SchemeSpec};
use parawin::problems::{SplitProblem, State};
use parawin::timeparallel::{run_window, verify_against_sequential, WindowConfig};

fn main() -> parawin::Result<()> {
    let mut args = std::env::args().skip(1);
    let steps: usize = args.next().map_or(100_000, |s| s.parse().expect("steps"));
    let window: usize = args.next().map_or(50, |s| s.parse().expect("window"));
    let substeps = 100;

    let problem = SplitProblem::pendulum(0.01);
    let scheme: SchemeSpec = "sbab4".parse()?;
    let y0 = State::scalar(1.0, 0.0);
    let cfg = WindowConfig::new(problem, scheme.clone(), y0.clone(), 0.01, steps, substeps, window);

    let run = run_window(&cfg)?;
    let row = summarize(&run.log)?;
    println!("slices            {}", cfg.slices());
    println!("iterations k      {}", row.k);
    println!("mean accepted C   {:.4}", row.c);
    println!("per window I      {:.4}", row.i);

    let reference = integrate_sequential(&problem, &scheme, &y0, cfg.dt, steps, substeps)?;
    let errors = verify_against_sequential(&run.u, &reference, substeps)?;
    let worst = errors.iter().copied().fold(0.0, f64::max);
    println!("max |u - seq|     {worst:e}");
    assert_eq!(worst, 0.0);

    println!("\nfirst iterations (iter, frontier, accepted, max correction):");
    for r in run.log.records.iter().take(8) {
        println!("  {:>3} {:>5} {:>3} {:e}", r.iter, r.frontier, r.conv, r.max_correction);
    }
    Ok(())
}
