//! Iteration counts of the three correctors on both built-in problems.
//!
//!     cargo run --release --example compare_variants

use parawin::problems::{SplitProblem, State};
use parawin::timeparallel::{run_window, RemainderStart, Variant, WindowConfig};

fn main() -> parawin::Result<()> {
    let problems = [
        SplitProblem::pendulum(0.01),
        SplitProblem::spin_orbit(0.01, 1e-4, 0.2),
    ];
    let steps = 100_000;
    for problem in problems {
        println!("{problem}");
        for window in [50, 500] {
            let base = WindowConfig::new(
                problem,
                "sbab4".parse()?,
                State::scalar(1.0, 0.0),
                0.01,
                steps,
                100,
                window,
            );
            let mut line = format!("  P={window:<4}");
            for variant in [Variant::Refined, Variant::Sst97, Variant::Picard] {
                let run = run_window(&base.clone().with_variant(variant))?;
                line += &format!(" {variant}={:<5}", run.iterations());
            }
            let zero = run_window(&base.clone().with_remainder_start(RemainderStart::Zero))?;
            line += &format!(" refined(zero start)={}", zero.iterations());
            println!("{line}");
        }
    }
    Ok(())
}
