//! Inverting the SINR maps: the distance beyond which a mobile falls
//! below a threshold, by bisection and by the truncated series.
//!
//! cargo run --release --example inverse_sinr

use tddgeom::macro_analytic::{InverseMethod, MacroModel};
use tddgeom::units::db_to_linear;
use tddgeom::{MacroNetwork, PropagationParams, SeriesControl, TddMix};

fn main() -> tddgeom::Result<()> {
    let model = MacroModel::new(
        MacroNetwork::default(),
        PropagationParams::default(),
        TddMix::new(0.5)?,
        None,
        SeriesControl::default(),
    )?;
    println!("{:>8} {:>10} {:>10} {:>10}", "gamma dB", "DL bisect", "DL series", "UL");
    for gamma_db in [-10.0, -5.0, 0.0, 5.0, 10.0, 20.0] {
        let y = 1.0 / db_to_linear(gamma_db);
        let show = |r: tddgeom::Result<f64>| r.map_or_else(|e| format!("({e})"), |x| format!("{x:.5}"));
        println!(
            "{gamma_db:>8} {:>10} {:>10} {:>10}",
            show(model.inv_d(y, InverseMethod::Bisection)),
            show(model.inv_d(y, InverseMethod::Series)),
            show(model.inv_u(y)),
        );
    }
    Ok(())
}
