//! Small-cell coverage on a Poisson deployment: Laplace-transform analysis
//! against Monte Carlo, outdoor and deep indoor.
//!
//! cargo run --release --example ppp_coverage

use tddgeom::ppp_model::{coverage_curve_ppp, mc_coverage_ppp, Environment, QuadratureControl, SmallCellScenario};
use tddgeom::{Direction, TddMix};

fn main() -> tddgeom::Result<()> {
    let grid: Vec<f64> = (-4..=6).map(|g| 5.0 * g as f64).collect();
    for env in [Environment::Outdoor, Environment::Indoor] {
        for (dir, alpha_d) in [(Direction::Dl, 1.0), (Direction::Dl, 0.5), (Direction::Ul, 0.0), (Direction::Ul, 0.5)] {
            let scen = SmallCellScenario { mix: TddMix::new(alpha_d)?, ..SmallCellScenario::default() }.with_environment(env);
            let analytic = coverage_curve_ppp(&grid, dir, &scen, QuadratureControl::default())?;
            let mc = mc_coverage_ppp(&scen, dir, &grid, 20_000, 3)?;
            println!("\n{env:?} {dir} alpha_d = {alpha_d}");
            for i in 0..grid.len() {
                println!("{:>6} dB  analytic {:.4}  MC {:.4} +/- {:.4}", grid[i], analytic.value[i], mc.value[i], mc.ci_halfwidth[i]);
            }
        }
    }
    Ok(())
}
