//! Spin-orbit problem on a real thread pool. The result does not depend on
//! the number of workers: every run below is bitwise identical.
//!
//!     cargo run --release --example spin_orbit_threaded

use std::time::Instant;

use parawin::problems::{SplitProblem, State};
use parawin::timeparallel::{run_window, ExecMode, WindowConfig};

fn main() -> parawin::Result<()> {
    let problem = SplitProblem::spin_orbit(0.01, 1e-4, 0.2);
    let base = WindowConfig::new(problem, "sbab4".parse()?, State::scalar(1.0, 0.0), 0.01, 200_000, 100, 100);

    let clock = Instant::now();
    let reference = run_window(&base)?;
    println!("simulated      k = {:>4}  {:?}", reference.iterations(), clock.elapsed());

    for workers in [1, 2, 4, 8] {
        let cfg = base.clone().with_mode(ExecMode::Threaded).with_workers(workers);
        let clock = Instant::now();
        let run = run_window(&cfg)?;
        let elapsed = clock.elapsed();
        let same = run.u.iter().zip(&reference.u).all(|(a, b)| a.same_point(b));
        println!(
            "{workers} worker(s)    k = {:>4}  {elapsed:?}  predictor {:?}  identical: {same}",
            run.iterations(),
            run.log.total_predict_time()
        );
        assert!(same && run.log.records.len() == reference.log.records.len());
    }
    Ok(())
}
