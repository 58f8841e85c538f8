//! Macro-cell coverage: analytic curve against a Monte Carlo run of the
//! same network, static DL and dynamic TDD.
//!
//! cargo run --release --example macro_coverage

use tddgeom::hexgrid::mc_coverage_macro;
use tddgeom::macro_analytic::{InverseMethod, MacroModel};
use tddgeom::{Direction, MacroNetwork, PropagationParams, SeriesControl, TddMix};

fn main() -> tddgeom::Result<()> {
    let net = MacroNetwork { rings: 10, ..MacroNetwork::default() };
    let prop = PropagationParams::default();
    let grid: Vec<f64> = (-10..=10).map(|g| 3.0 * g as f64).collect();
    for (alpha_d, dir) in [(1.0, Direction::Dl), (0.5, Direction::Dl), (0.0, Direction::Ul), (0.5, Direction::Ul)] {
        let mix = TddMix::new(alpha_d)?;
        let model = MacroModel::new(net, prop, mix, None, SeriesControl::default())?;
        let analytic = model.coverage_curve(&grid, dir, InverseMethod::Bisection)?;
        let series = model.coverage_curve(&grid, dir, InverseMethod::Series)?;
        let mc = mc_coverage_macro(&net, &prop, mix, dir, &grid, 10_000, 1)?;
        println!("\n{dir} alpha_d = {alpha_d}  (sup gap to MC {:.3})", analytic.sup_gap(&mc));
        println!("{:>8} {:>9} {:>9} {:>9} {:>7}", "gamma dB", "analytic", "series", "MC", "+/-");
        for i in 0..grid.len() {
            println!(
                "{:>8} {:>9.4} {:>9.4} {:>9.4} {:>7.4}",
                grid[i], analytic.value[i], series.value[i], mc.value[i], mc.ci_halfwidth[i]
            );
        }
    }
    Ok(())
}
