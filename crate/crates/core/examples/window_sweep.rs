//! Sweeps the window size, prints the `P,C,I,k` table and fits `I = j (aP + b)`.
//! The full-scale run (`--full`, N = 1e6) takes a minute or so in release mode.
//!
//!     cargo run --release --example window_sweep -- [--full] [--spin]

use parawin::analysis::{fit_ab, load_sweep_csv, summarize, write_sweep_csv};
use parawin::io::FloatFormat;
use parawin::problems::{SplitProblem, State};
use parawin::timeparallel::{run_window, WindowConfig};

fn main() -> parawin::Result<()> {
    let args: Vec<String> = std::env::args().collect();
    let full = args.iter().any(|a| a == "--full");
    let spin = args.iter().any(|a| a == "--spin");
    let steps = if full { 1_000_000 } else { 100_000 };
    let problem = if spin {
        SplitProblem::spin_orbit(0.01, 1e-4, 0.2)
    } else {
        SplitProblem::pendulum(0.01)
    };

    let mut rows = Vec::new();
    for window in (50..=500).step_by(50) {
        let cfg = WindowConfig::new(problem, "sbab4".parse()?, State::scalar(1.0, 0.0), 0.01, steps, 100, window);
        rows.push(summarize(&run_window(&cfg)?.log)?);
    }
    write_sweep_csv(std::io::stdout().lock(), &rows, FloatFormat::Decimal)?;

    let fit = fit_ab(&rows, 100)?;
    println!("\nfit: a = {:.4e}, b = {:.4e}", fit.a, fit.b);

    if full {
        let name = if spin { "table2_spin_orbit.csv" } else { "table1_pendulum.csv" };
        let path = std::path::Path::new(env!("CARGO_MANIFEST_DIR")).join("../../data").join(name);
        let published = load_sweep_csv(&path)?;
        println!("\n{:>5} {:>7} {:>7} {:>8}", "P", "k", "k pub", "rel");
        for (ours, theirs) in rows.iter().zip(&published) {
            let rel = ours.k as f64 / theirs.k as f64 - 1.0;
            println!("{:>5} {:>7} {:>7} {:>+8.3}", ours.p, ours.k, theirs.k, rel);
        }
    }
    Ok(())
}
