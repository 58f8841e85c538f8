//! Average spectral efficiency against small-cell density, static and
//! dynamic TDD.
//!
//! cargo run --release --example ase_sweep

use tddgeom::ppp_model::{ase, mc_ase, Environment, QuadratureControl, SmallCellScenario};
use tddgeom::{Direction, TddMix};

fn main() -> tddgeom::Result<()> {
    let q = QuadratureControl::default();
    for env in [Environment::Outdoor, Environment::Indoor] {
        println!("\n{env:?}");
        println!("{:>6} {:>10} {:>10} {:>10} {:>10} {:>14}", "lambda", "DL S-TDD", "DL D-TDD", "UL S-TDD", "UL D-TDD", "MC DL D-TDD");
        for lambda in [5.0, 10.0, 20.0, 50.0] {
            let scen = |alpha_d: f64| SmallCellScenario {
                lambda,
                window_radius: 3f64.max(5.0 / lambda.sqrt()),
                mix: TddMix { alpha_d },
                ..SmallCellScenario::default()
            }
            .with_environment(env);
            let mc = mc_ase(&scen(0.5), Direction::Dl, 5_000, 2)?;
            println!(
                "{lambda:>6} {:>10.4} {:>10.4} {:>10.4} {:>10.4} {:>8.4}+/-{:.3}",
                ase(&scen(1.0), Direction::Dl, q)?,
                ase(&scen(0.5), Direction::Dl, q)?,
                ase(&scen(0.0), Direction::Ul, q)?,
                ase(&scen(0.5), Direction::Ul, q)?,
                mc.mean,
                1.96 * mc.std_error
            );
        }
    }
    Ok(())
}
