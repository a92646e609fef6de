//! The speed-up model: optimal window, its value and the `1/a` ceiling, for
//! parameters fitted to the shipped sweeps.
//!
//!     cargo run --example speedup_model

use parawin::analysis::{cost_model, fit_ab, load_sweep_csv, optimal_window, speedup, SpeedupInputs};

fn main() -> parawin::Result<()> {
    let data = std::path::Path::new(env!("CARGO_MANIFEST_DIR")).join("../../data");
    for name in ["table1_pendulum.csv", "table2_spin_orbit.csv"] {
        let rows = load_sweep_csv(&data.join(name))?;
        let fit = fit_ab(&rows, 100)?;
        println!("{name}: a = {:.4e}, b = {:.4e}", fit.a, fit.b);

        for ratio in [2.0, 10.0, 100.0] {
            let inp = SpeedupInputs::with_ratio(fit.a, fit.b, fit.j, ratio);
            let opt = optimal_window(&inp)?;
            println!(
                "  Tp/Tc = {ratio:>5}: P* = {:>4} (continuous {:.2}), S(P*) = {:.2}, S(2P*) = {:.2}, bound {:.0}",
                opt.p_star,
                opt.p_cont,
                opt.s_at_p_star,
                speedup(2.0 * opt.p_star as f64, &inp)?,
                opt.bound
            );
        }
    }

    // Tp/Tc for sbab4 when a kick costs as much as a drift, and when it costs 100 times more
    for tb in [1.0, 100.0] {
        let c = cost_model(100, 50, 7.0, 1.0, tb);
        println!("Ta = 1, Tb = {tb}: Tp = {}, Tc = {}, Tp/Tc = {:.3}", c.tp, c.tc, c.ratio);
    }
    Ok(())
}
