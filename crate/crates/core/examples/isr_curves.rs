//! The four interference-to-signal ratios of the macro lattice along the
//! normalised distance x = r / delta, for a half-and-half TDD mix.
//!
//! cargo run --release --example isr_curves [alpha_d]

use tddgeom::macro_analytic::MacroModel;
use tddgeom::{MacroNetwork, PropagationParams, SeriesControl, TddMix};

fn main() -> tddgeom::Result<()> {
    let alpha_d = std::env::args().nth(1).map_or(Ok(0.5), |a| a.parse()).expect("alpha_d must be a number");
    let net = MacroNetwork::default();
    let model = MacroModel::new(net, PropagationParams::default(), TddMix::new(alpha_d)?, None, SeriesControl::default())?;
    println!("R/delta = {:.4}; UL->DL mean is finite for x < {:.4}", net.radius_ratio(), model.ul_dl_convergence_radius());
    println!("{:>5} {:>12} {:>12} {:>12} {:>12} {:>12} {:>12}", "x", "DL->DL", "UL->DL", "UL->UL", "DL->UL", "total DL", "total UL");
    let mut x = 0.05;
    while x <= net.radius_ratio() {
        let i = model.isr(x)?;
        let mark = if i.ul_to_dl_truncated { "*" } else { "" };
        println!(
            "{x:>5.2} {:>12.4e} {:>12.4e} {:>12.4e} {:>12.4e} {:>12.4e} {:>12.4e} {mark}",
            i.dl_to_dl, i.ul_to_dl, i.ul_to_ul, i.dl_to_ul, i.total_dl, i.total_ul
        );
        x += 0.05;
    }
    println!("* UL->DL from the truncated edge series");
    Ok(())
}
