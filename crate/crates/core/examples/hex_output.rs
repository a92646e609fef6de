//! Writes a short trajectory with exact hexadecimal floats and reads it back.
//!
//!     cargo run --example hex_output

use parawin::integrators::{integrate_sequential, read_states_csv, SchemeSpec};
use parawin::io::FloatFormat;
use parawin::problems::{SplitProblem, State};

fn main() -> parawin::Result<()> {
    let problem = SplitProblem::pendulum(0.01);
    let scheme: SchemeSpec = "saba3".parse()?;
    let traj = integrate_sequential(&problem, &scheme, &State::scalar(1.0, 0.0), 0.01, 1000, 250)?;

    let mut buf = Vec::new();
    traj.write_csv(&mut buf, FloatFormat::Hex)?;
    print!("{}", String::from_utf8_lossy(&buf));

    let back = read_states_csv(buf.as_slice())?;
    let exact = back.iter().zip(&traj.states).all(|((s, _), t)| s.same_point(t));
    println!("read back bit for bit: {exact}");
    Ok(())
}
