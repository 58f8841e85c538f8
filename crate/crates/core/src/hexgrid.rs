//! Hexagonal macro-cell lattice: geometry, brute-force interference sums and
//! the Monte Carlo simulator that serve as independent oracles for
//! [`crate::macro_analytic`].
//!
//! Distances are in kilometres. Powers are effective received powers at a
//! 1 km reference, i.e. transmit power plus antenna gain minus the
//! propagation factor `a`, so the path loss of a link of length `d` is
//! `d^(2b)` on top of them.

use std::f64::consts::{FRAC_PI_3, PI};

use num_complex::Complex64;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::curve::{check_grid, CoverageCurve};
use crate::error::{Error, Result};
use crate::quad::{integrate, QuadTol};
use crate::rng::par_draws;
use crate::units::{dbm_to_mw, linear_to_db};

/// Transmission direction of the serving (studied) link.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Direction {
    Dl,
    Ul,
}

impl std::fmt::Display for Direction {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Direction::Dl => "dl",
            Direction::Ul => "ul",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct MacroNetwork {
    /// Intersite distance, km.
    pub delta: f64,
    /// Radius of the disk in which users are placed, km.
    pub cell_radius: f64,
    /// Number of hexagonal rings of interfering sites.
    pub rings: usize,
    /// Average load of the interfering cells.
    pub load_eta: f64,
}

impl Default for MacroNetwork {
    fn default() -> Self {
        MacroNetwork {
            delta: 1.0,
            cell_radius: 1.0 / 3f64.sqrt(),
            rings: 4,
            load_eta: 1.0,
        }
    }
}

impl MacroNetwork {
    pub fn validate(&self) -> Result<()> {
        let mut errs = Vec::new();
        if !(self.delta > 0.0) {
            errs.push(format!("delta must be > 0, got {}", self.delta));
        }
        let max_r = self.delta / 3f64.sqrt();
        if !(self.cell_radius > 0.0 && self.cell_radius <= max_r * (1.0 + 1e-12)) {
            errs.push(format!(
                "cell_radius must lie in (0, delta/sqrt(3) = {max_r}], got {}",
                self.cell_radius
            ));
        }
        if self.rings == 0 {
            errs.push("rings must be >= 1".into());
        }
        if !(self.load_eta > 0.0 && self.load_eta <= 1.0) {
            errs.push(format!("load_eta must lie in (0, 1], got {}", self.load_eta));
        }
        if errs.is_empty() {
            Ok(())
        } else {
            Err(Error::Config(errs))
        }
    }

    /// Cell radius relative to the intersite distance, `R / delta`.
    pub fn radius_ratio(&self) -> f64 {
        self.cell_radius / self.delta
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct PropagationParams {
    /// Path-loss exponent `2b`.
    pub two_b: f64,
    /// Propagation factor `a`, dB, for distances in km.
    pub a_db: f64,
    /// Fractional power control compensation factor.
    pub k: f64,
    /// Macro base station transmit power, dBm.
    pub p_dl_dbm: f64,
    /// Cell specific uplink target power, dBm.
    pub p_star_dbm: f64,
    /// Thermal noise power, dBm; `-inf` for an interference-limited network.
    pub p_noise_dbm: f64,
    /// Antenna gain folded into every link budget, dBi.
    pub antenna_gain_dbi: f64,
}

impl Default for PropagationParams {
    fn default() -> Self {
        PropagationParams {
            two_b: 3.5,
            a_db: 130.0,
            k: 0.4,
            p_dl_dbm: 60.0,
            p_star_dbm: 20.0,
            p_noise_dbm: -93.0,
            antenna_gain_dbi: 16.0,
        }
    }
}

impl PropagationParams {
    pub fn validate(&self) -> Result<()> {
        let mut errs = Vec::new();
        if !(self.two_b > 2.0) {
            errs.push(format!("two_b must be > 2, got {}", self.two_b));
        }
        if !(0.0..=1.0).contains(&self.k) {
            errs.push(format!("k must lie in [0, 1], got {}", self.k));
        }
        for (name, v) in [
            ("a_db", self.a_db),
            ("p_dl_dbm", self.p_dl_dbm),
            ("p_star_dbm", self.p_star_dbm),
            ("antenna_gain_dbi", self.antenna_gain_dbi),
        ] {
            if !v.is_finite() {
                errs.push(format!("{name} must be finite"));
            }
        }
        // -inf switches the noise off
        if self.p_noise_dbm.is_nan() || self.p_noise_dbm == f64::INFINITY {
            errs.push("p_noise_dbm must be finite or -inf".to_string());
        }
        if errs.is_empty() {
            Ok(())
        } else {
            Err(Error::Config(errs))
        }
    }

    pub fn b(&self) -> f64 {
        0.5 * self.two_b
    }

    /// Effective power at the 1 km reference for a transmit power in dBm, mW.
    pub fn effective_mw(&self, tx_dbm: f64) -> f64 {
        dbm_to_mw(tx_dbm + self.antenna_gain_dbi - self.a_db)
    }

    pub fn p_dl_eff(&self) -> f64 {
        self.effective_mw(self.p_dl_dbm)
    }

    pub fn p_star_eff(&self) -> f64 {
        self.effective_mw(self.p_star_dbm)
    }

    pub fn noise_mw(&self) -> f64 {
        if self.p_noise_dbm == f64::NEG_INFINITY {
            0.0
        } else {
            dbm_to_mw(self.p_noise_dbm)
        }
    }

    /// `P* / P`; propagation factor and gain cancel.
    pub fn pstar_over_p(&self) -> f64 {
        dbm_to_mw(self.p_star_dbm - self.p_dl_dbm)
    }
}

/// Fraction of cells transmitting downlink; uplink is the complement.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TddMix {
    pub alpha_d: f64,
}

impl TddMix {
    pub fn new(alpha_d: f64) -> Result<Self> {
        let mix = TddMix { alpha_d };
        mix.validate()?;
        Ok(mix)
    }

    /// All cells in downlink (static TDD seen from a downlink receiver).
    pub fn static_dl() -> Self {
        TddMix { alpha_d: 1.0 }
    }

    /// All cells in uplink.
    pub fn static_ul() -> Self {
        TddMix { alpha_d: 0.0 }
    }

    pub fn alpha_u(&self) -> f64 {
        1.0 - self.alpha_d
    }

    pub fn validate(&self) -> Result<()> {
        if !(0.0..=1.0).contains(&self.alpha_d) {
            return Err(Error::config(format!(
                "alpha_d must lie in [0, 1], got {}",
                self.alpha_d
            )));
        }
        Ok(())
    }
}

impl Default for TddMix {
    fn default() -> Self {
        TddMix { alpha_d: 0.5 }
    }
}

/// Position of the studied mobile relative to its serving site.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MobilePolar {
    /// Distance to the serving site, km.
    pub r: f64,
    /// Azimuth, radians.
    pub theta: f64,
}

impl MobilePolar {
    pub fn new(r: f64, theta: f64) -> Self {
        MobilePolar { r, theta }
    }

    pub fn position(&self) -> Complex64 {
        Complex64::from_polar(self.r, self.theta)
    }
}

/// Hexagonal ring index of `m + n e^{i pi/3}`.
pub fn ring_index(m: i64, n: i64) -> i64 {
    m.abs().max(n.abs()).max((m + n).abs())
}

/// All sites `delta (m + n e^{i pi/3})` with ring index `1..=rings`, ring by
/// ring. Ring `h` holds `6h` sites.
pub fn lattice_points(net: &MacroNetwork) -> Vec<Complex64> {
    lattice_sites(net.delta, net.rings)
}

pub fn lattice_sites(delta: f64, rings: usize) -> Vec<Complex64> {
    let rings = rings as i64;
    let e = Complex64::from_polar(1.0, FRAC_PI_3);
    let mut pts = Vec::with_capacity((3 * rings * (rings + 1)) as usize);
    for ring in 1..=rings {
        for m in -ring..=ring {
            for n in -ring..=ring {
                if ring_index(m, n) == ring {
                    pts.push((m as f64 + n as f64 * e) * delta);
                }
            }
        }
    }
    pts
}

/// Lattice sum `sum_{s != 0} |s - w|^(-2b)` over a finite number of rings,
/// optionally completed by a continuum estimate of the sites beyond.
///
/// The truncated region is treated as the hexagon of equal area (one
/// `sqrt(3)/2 delta^2` cell per site); sites outside it are replaced by the
/// lattice density `2 / (sqrt(3) delta^2)` integrated over the complement.
/// The tail includes the isotropic second-order term in `|w|`.
#[derive(Debug, Clone)]
pub struct LatticeSummer {
    sites: Vec<Complex64>,
    b: f64,
    tail0: f64,
    tail2: f64,
}

impl LatticeSummer {
    pub fn new(delta: f64, rings: usize, two_b: f64, tail_correction: bool) -> Result<Self> {
        if !(two_b > 2.0) {
            return Err(Error::domain("LatticeSummer", format!("need 2b > 2, got {two_b}")));
        }
        let b = 0.5 * two_b;
        let (tail0, tail2) = if tail_correction {
            let density = 2.0 / (3f64.sqrt() * delta * delta);
            let n = rings as f64;
            let circumradius = delta * ((3.0 * n * n + 3.0 * n + 1.0) / 3.0).sqrt();
            (
                density * hexagon_exterior_integral(circumradius, two_b)?,
                density * b * b * hexagon_exterior_integral(circumradius, two_b + 2.0)?,
            )
        } else {
            (0.0, 0.0)
        };
        Ok(LatticeSummer {
            sites: lattice_sites(delta, rings),
            b,
            tail0,
            tail2,
        })
    }

    pub fn sites(&self) -> &[Complex64] {
        &self.sites
    }

    /// `sum |s - w|^(-2b)` plus the tail estimate.
    pub fn sum_at(&self, w: Complex64) -> f64 {
        let direct: f64 = self
            .sites
            .iter()
            .map(|s| (s - w).norm_sqr().powf(-self.b))
            .sum();
        direct + self.tail0 + self.tail2 * w.norm_sqr()
    }
}

/// `int |u|^(-p) dA` over the exterior of a regular hexagon with the given
/// circumradius (corners on the real axis). Requires `p > 2`.
pub fn hexagon_exterior_integral(circumradius: f64, p: f64) -> Result<f64> {
    let apothem = circumradius * 3f64.sqrt() / 2.0;
    // boundary distance at angle psi from an edge normal: apothem / cos(psi)
    let angular = integrate(
        |psi: f64| psi.cos().powf(p - 2.0),
        0.0,
        PI / 6.0,
        QuadTol::new(1e-15, 1e-13),
    )?
    .value;
    Ok(12.0 * apothem.powf(2.0 - p) * angular / (p - 2.0))
}

/// `sum_{s != 0} (delta / |s|)^(2b)`, the quantity equal to `6 omega(b)` on
/// the infinite lattice.
pub fn lattice_sum(delta: f64, rings: usize, two_b: f64, tail_correction: bool) -> Result<f64> {
    let summer = LatticeSummer::new(delta, rings, two_b, tail_correction)?;
    Ok(summer.sum_at(Complex64::new(0.0, 0.0)) * delta.powf(two_b))
}

/// Downlink-to-downlink ISR at mobile position `m`:
/// `sum_s (r / |s - z0|)^(2b)` over `net.rings` rings.
pub fn bruteforce_isr_dl(
    m: MobilePolar,
    net: &MacroNetwork,
    prop: &PropagationParams,
    tail_correction: bool,
) -> Result<f64> {
    if m.r == 0.0 {
        return Ok(0.0);
    }
    let summer = LatticeSummer::new(net.delta, net.rings, prop.two_b, tail_correction)?;
    Ok(m.r.powf(prop.two_b) * summer.sum_at(m.position()))
}

/// Azimuth average of [`bruteforce_isr_dl`] at distance `r`.
///
/// The lattice sum is `pi/3` periodic in azimuth, so a midpoint rule with
/// `n_theta` nodes over one period is exact for all harmonics below
/// `6 n_theta`; the default 24 nodes leave an error of order `x^144`.
pub fn bruteforce_isr_dl_avg(
    r: f64,
    net: &MacroNetwork,
    prop: &PropagationParams,
    tail_correction: bool,
) -> Result<f64> {
    if r == 0.0 {
        return Ok(0.0);
    }
    let summer = LatticeSummer::new(net.delta, net.rings, prop.two_b, tail_correction)?;
    let n_theta = 24;
    let mean = (0..n_theta)
        .map(|j| {
            let theta = (j as f64 + 0.5) * FRAC_PI_3 / n_theta as f64;
            summer.sum_at(Complex64::from_polar(r, theta))
        })
        .sum::<f64>()
        / n_theta as f64;
    Ok(r.powf(prop.two_b) * mean)
}

/// Monte Carlo estimate with its standard error.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct McEstimate {
    pub mean: f64,
    pub std_error: f64,
    pub samples: usize,
}

impl McEstimate {
    pub fn from_samples(values: &[f64]) -> Self {
        let n = values.len() as f64;
        let mean = values.iter().sum::<f64>() / n;
        let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0).max(1.0);
        McEstimate {
            mean,
            std_error: (var / n).sqrt(),
            samples: values.len(),
        }
    }
}

fn uniform_in_disk(rng: &mut impl Rng, radius: f64) -> (f64, f64) {
    let rho = radius * rng.random::<f64>().sqrt();
    let phi = 2.0 * PI * rng.random::<f64>();
    (rho, phi)
}

/// Azimuth of the studied mobile in the uplink-to-downlink Monte Carlo.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Azimuth {
    /// Keep the azimuth of the given position.
    Fixed,
    /// Draw it uniformly per sample (the azimuth average).
    Uniform,
}

/// Monte Carlo evaluation of the uplink-to-downlink ISR integral: one
/// interfering mobile per site, uniform in the disk of radius `R` around it,
/// transmitting with fractional power control. Every sample draws one
/// offset `rho e^{i phi}` shared by all sites and evaluates the lattice sum
/// (with tail correction) exactly.
pub fn bruteforce_isr_ul_dl(
    m: MobilePolar,
    azimuth: Azimuth,
    net: &MacroNetwork,
    prop: &PropagationParams,
    n_samples: usize,
    seed: u64,
) -> Result<McEstimate> {
    if n_samples == 0 {
        return Err(Error::config("n_samples must be >= 1"));
    }
    let summer = LatticeSummer::new(net.delta, net.rings, prop.two_b, true)?;
    let ratio = prop.pstar_over_p();
    let two_bk = prop.two_b * prop.k;
    let r_pow = m.r.powf(prop.two_b);
    let values = par_draws(n_samples, seed, |rng, _| {
        let (rho, phi) = uniform_in_disk(rng, net.cell_radius);
        let theta = match azimuth {
            Azimuth::Fixed => m.theta,
            Azimuth::Uniform => 2.0 * PI * rng.random::<f64>(),
        };
        let z0 = Complex64::from_polar(m.r, theta);
        // |s + rho e^{i phi} - z0| = |s - (z0 - rho e^{i phi})|
        let w = z0 - Complex64::from_polar(rho, phi);
        ratio * rho.powf(two_bk) * r_pow * summer.sum_at(w)
    });
    Ok(McEstimate::from_samples(&values))
}

/// One Monte Carlo realisation of the macro network seen by the studied link.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MacroDraw {
    /// Distance of the studied mobile to its serving site, km.
    pub r: f64,
    pub theta: f64,
    /// Useful received power, mW.
    pub signal: f64,
    /// Interference from cells in the same direction as the studied link
    /// (DL to DL, or UL to UL), mW.
    pub same_link: f64,
    /// Cross-link interference (UL to DL, or DL to UL), mW.
    pub cross_link: f64,
    pub noise: f64,
}

impl MacroDraw {
    pub fn interference(&self) -> f64 {
        self.same_link + self.cross_link
    }

    pub fn sinr(&self) -> f64 {
        self.signal / (self.interference() + self.noise)
    }

    /// Interference-to-signal ratio of this realisation.
    pub fn isr(&self) -> f64 {
        self.interference() / self.signal
    }
}

/// Draws one realisation: the studied mobile uniform in the serving disk,
/// every interfering cell active with probability `eta` and in downlink with
/// probability `alpha_d`; an uplink cell's mobile is uniform in its own disk
/// and transmits `P* rho^(2bk)`.
pub fn macro_draw(
    rng: &mut impl Rng,
    sites: &[Complex64],
    net: &MacroNetwork,
    prop: &PropagationParams,
    mix: TddMix,
    direction: Direction,
) -> MacroDraw {
    let b = prop.b();
    let two_bk = prop.two_b * prop.k;
    let p = prop.p_dl_eff();
    let p_star = prop.p_star_eff();
    let (r, theta) = uniform_in_disk(rng, net.cell_radius);
    let z0 = Complex64::from_polar(r, theta);
    let mut same = 0.0;
    let mut cross = 0.0;
    for s in sites {
        if net.load_eta < 1.0 && rng.random::<f64>() >= net.load_eta {
            continue;
        }
        let downlink = rng.random::<f64>() < mix.alpha_d;
        if downlink {
            let rx = match direction {
                Direction::Dl => *s - z0,
                Direction::Ul => *s,
            };
            let power = p * rx.norm_sqr().powf(-b);
            match direction {
                Direction::Dl => same += power,
                Direction::Ul => cross += power,
            }
        } else {
            let (rho, phi) = uniform_in_disk(rng, net.cell_radius);
            let z = s + Complex64::from_polar(rho, phi);
            let rx = match direction {
                Direction::Dl => z - z0,
                Direction::Ul => z,
            };
            let power = p_star * rho.powf(two_bk) * rx.norm_sqr().powf(-b);
            match direction {
                Direction::Dl => cross += power,
                Direction::Ul => same += power,
            }
        }
    }
    let signal = match direction {
        Direction::Dl => p * r.powf(-prop.two_b),
        Direction::Ul => p_star * r.powf(-prop.two_b * (1.0 - prop.k)),
    };
    MacroDraw {
        r,
        theta,
        signal,
        same_link: same,
        cross_link: cross,
        noise: prop.noise_mw(),
    }
}

/// `n_draws` independent realisations, one random stream per draw index.
pub fn macro_draws(
    net: &MacroNetwork,
    prop: &PropagationParams,
    mix: TddMix,
    direction: Direction,
    n_draws: usize,
    seed: u64,
) -> Result<Vec<MacroDraw>> {
    net.validate()?;
    prop.validate()?;
    mix.validate()?;
    if n_draws == 0 {
        return Err(Error::config("n_draws must be >= 1"));
    }
    let sites = lattice_points(net);
    Ok(par_draws(n_draws, seed, |rng, _| {
        macro_draw(rng, &sites, net, prop, mix, direction)
    }))
}

/// Empirical SINR coverage of the macro network over `gamma_grid_db`.
pub fn mc_coverage_macro(
    net: &MacroNetwork,
    prop: &PropagationParams,
    mix: TddMix,
    direction: Direction,
    gamma_grid_db: &[f64],
    n_draws: usize,
    seed: u64,
) -> Result<CoverageCurve> {
    check_grid(gamma_grid_db, "gamma")?;
    let draws = macro_draws(net, prop, mix, direction, n_draws, seed)?;
    let sinr_db: Vec<f64> = draws.iter().map(|d| linear_to_db(d.sinr())).collect();
    CoverageCurve::from_sinr_samples(gamma_grid_db, &sinr_db)
}
