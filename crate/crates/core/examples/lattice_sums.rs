//! Hexagonal lattice sums against the closed form `6 omega(b)`.
//!
//! cargo run --release --example lattice_sums

use tddgeom::hexgrid::lattice_sum;
use tddgeom::specfun::{hurwitz_zeta, omega, riemann_zeta};

fn main() -> tddgeom::Result<()> {
    println!("zeta(3.5) = {:.15}", riemann_zeta(3.5)?);
    println!("zeta(3.5, 1/3) - zeta(3.5, 2/3) = {:.15}", hurwitz_zeta(3.5, 1.0 / 3.0)? - hurwitz_zeta(3.5, 2.0 / 3.0)?);
    println!();
    println!("{:>5} {:>6} {:>16} {:>16} {:>16} {:>10}", "2b", "rings", "raw sum", "with tail", "6 omega(b)", "rel err");
    for two_b in [2.5, 3.0, 3.5, 4.0] {
        let exact = 6.0 * omega(two_b / 2.0)?;
        for rings in [10, 100, 500] {
            let raw = lattice_sum(1.0, rings, two_b, false)?;
            let tail = lattice_sum(1.0, rings, two_b, true)?;
            println!(
                "{two_b:>5} {rings:>6} {raw:>16.10} {tail:>16.10} {exact:>16.10} {:>10.2e}",
                ((tail - exact) / exact).abs()
            );
        }
    }
    Ok(())
}
