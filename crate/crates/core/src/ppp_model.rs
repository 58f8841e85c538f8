//! Poisson small-cell deployment running dynamic TDD.
//!
//! Each small cell serves one mobile. Following the displacement argument,
//! the interfering pairs are modelled by a PPP of intensity `lambda` outside
//! the serving distance `R`, each point carrying its partner at an
//! independent Rayleigh offset `rho` (density `2 pi lambda rho e^(-lambda pi rho^2)`).
//! For a downlink receiver the PPP points are the interfering mobiles and
//! their cells sit at the offset; for an uplink receiver the points are the
//! interfering cells and their mobiles sit at the offset. Fading is
//! Rayleigh on every link and the serving distance is Rayleigh as well.
//!
//! Analytic coverage follows from the Laplace transform of the interference.
//! The Monte Carlo simulator implements the same model; a diagnostic mode
//! with true nearest-cell association measures the gap to a full simulation.

use std::f64::consts::PI;

use num_complex::Complex64;
use rand::Rng;
use rand_distr::{Distribution, Exp1, Poisson};
use serde::{Deserialize, Serialize};

use crate::curve::{check_grid, CoverageCurve};
use crate::error::{Error, Result};
use crate::hexgrid::{Direction, McEstimate, PropagationParams, TddMix};
use crate::quad::{try_integrate, try_integrate_to_infinity, QuadTol};
use crate::rng::{par_draws, stream};
use crate::units::{db_to_linear, linear_to_db};

/// Upper limit of `u = lambda pi rho^2` for offset expectations
/// (`e^(-u) < 1e-12`).
const OFFSET_U_MAX: f64 = 27.631_021_115_928_547;
/// Upper limit of `u = lambda pi r^2` for the serving-distance integral
/// (`e^(-u) < 1e-8`).
const SERVING_U_MAX: f64 = 18.420_680_743_952_367;

/// Propagation environment of the small cells.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Environment {
    Outdoor,
    Indoor,
}

impl Environment {
    /// Propagation factor `a`, dB.
    pub fn a_db(self) -> f64 {
        match self {
            Environment::Outdoor => 130.0,
            Environment::Indoor => 160.0,
        }
    }
}

/// Offset between an interfering cell and its mobile.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CellOffset {
    /// Rayleigh distributed, as for the distance to the nearest PPP point.
    #[default]
    Rayleigh,
    /// Interfering mobiles co-located with their cells. With `alpha_d = 1`
    /// this is the classical nearest-cell downlink model.
    None,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SmallCellScenario {
    /// Small-cell density, cells per km^2.
    pub lambda: f64,
    /// Radius of the Monte Carlo window around the typical receiver, km.
    pub window_radius: f64,
    /// Small-cell transmit power, dBm.
    pub p_small_dbm: f64,
    /// Uplink target power, dBm.
    pub p_small_star_dbm: f64,
    /// Path loss, FPC factor, noise and antenna gain. The macro power
    /// `p_dl_dbm` and `p_star_dbm` are ignored here.
    pub prop: PropagationParams,
    pub mix: TddMix,
    pub cell_offset: CellOffset,
}

impl Default for SmallCellScenario {
    fn default() -> Self {
        SmallCellScenario {
            lambda: 10.0,
            window_radius: 3.0,
            p_small_dbm: 26.0,
            p_small_star_dbm: 20.0,
            prop: PropagationParams::default(),
            mix: TddMix::default(),
            cell_offset: CellOffset::Rayleigh,
        }
    }
}

impl SmallCellScenario {
    pub fn with_environment(mut self, env: Environment) -> Self {
        self.prop.a_db = env.a_db();
        self
    }

    pub fn validate(&self) -> Result<()> {
        let mut errs = Vec::new();
        if !(self.lambda > 0.0 && self.lambda.is_finite()) {
            errs.push(format!("lambda must be positive, got {}", self.lambda));
        }
        if !(self.window_radius > 0.0 && self.window_radius.is_finite()) {
            errs.push(format!("window_radius must be positive, got {}", self.window_radius));
        }
        for (name, v) in [("p_small_dbm", self.p_small_dbm), ("p_small_star_dbm", self.p_small_star_dbm)] {
            if !v.is_finite() {
                errs.push(format!("{name} must be finite"));
            }
        }
        if let Err(Error::Config(more)) = self.prop.validate() {
            errs.extend(more);
        }
        if let Err(Error::Config(more)) = self.mix.validate() {
            errs.extend(more);
        }
        if errs.is_empty() {
            Ok(())
        } else {
            Err(Error::Config(errs))
        }
    }

    /// Monte Carlo needs the window to hold the bulk of the interference:
    /// radius at least `5 / sqrt(lambda)`.
    fn check_window(&self) -> Result<()> {
        let min = 5.0 / self.lambda.sqrt();
        if self.window_radius < min {
            return Err(Error::config(format!(
                "window_radius {} below 5/sqrt(lambda) = {min:.3} km",
                self.window_radius
            )));
        }
        Ok(())
    }

    /// Effective small-cell power at the 1 km reference, mW.
    pub fn p_eff(&self) -> f64 {
        self.prop.effective_mw(self.p_small_dbm)
    }

    /// Effective uplink target power at the 1 km reference, mW.
    pub fn p_star_eff(&self) -> f64 {
        self.prop.effective_mw(self.p_small_star_dbm)
    }

    fn offset_power(&self, rho: f64) -> f64 {
        match self.prop.k {
            k if k == 0.0 => 1.0,
            k => rho.powf(self.prop.two_b * k),
        }
    }
}

/// Tolerances of the nested quadratures: `inner` for the offset and
/// interferer integrals inside a Laplace transform, `outer` for the
/// serving-distance and threshold integrals.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct QuadratureControl {
    pub inner: QuadTol,
    pub outer: QuadTol,
}

impl Default for QuadratureControl {
    fn default() -> Self {
        QuadratureControl {
            inner: QuadTol::new(1e-6, 1e-6),
            outer: QuadTol::new(1e-5, 1e-5),
        }
    }
}

/// Exponentially distributed fading power of one link.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FadingDraw {
    pub h: f64,
}

impl FadingDraw {
    pub fn sample(rng: &mut impl Rng) -> Self {
        FadingDraw { h: Exp1.sample(rng) }
    }
}

/// Geometry of one interfering pair relative to the typical receiver.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GeometryDraw {
    /// Position of the PPP point.
    pub z: Complex64,
    /// Cell-to-mobile distance of the pair.
    pub rho: f64,
    /// Direction of the offset.
    pub phi: f64,
}

impl GeometryDraw {
    /// Distance from the typical receiver to the displaced partner,
    /// `|z + rho e^(i phi)|`.
    pub fn displaced_distance(&self) -> f64 {
        (self.z + Complex64::from_polar(self.rho, self.phi)).norm()
    }
}

fn sample_rayleigh(rng: &mut impl Rng, lambda: f64) -> f64 {
    let e: f64 = Exp1.sample(rng);
    (e / (lambda * PI)).sqrt()
}

fn sample_poisson(rng: &mut impl Rng, mean: f64) -> usize {
    if mean <= 0.0 {
        return 0;
    }
    let d = Poisson::new(mean).expect("positive finite mean");
    let n: f64 = d.sample(rng);
    n as usize
}

/// PPP of intensity `lambda` in the annulus `inner < |z| < outer`.
fn sample_annulus(rng: &mut impl Rng, lambda: f64, inner: f64, outer: f64) -> Vec<Complex64> {
    let (a2, b2) = (inner * inner, outer * outer);
    let n = sample_poisson(rng, lambda * PI * (b2 - a2));
    (0..n)
        .map(|_| {
            let r = (a2 + rng.random::<f64>() * (b2 - a2)).sqrt();
            Complex64::from_polar(r, 2.0 * PI * rng.random::<f64>())
        })
        .collect()
}

/// PPP of intensity `lambda` in the disk of radius `window_radius`.
pub fn sample_ppp(lambda: f64, window_radius: f64, seed: u64) -> Result<Vec<Complex64>> {
    if !(lambda > 0.0 && window_radius > 0.0) {
        return Err(Error::domain("sample_ppp", "lambda and window_radius must be positive"));
    }
    Ok(sample_annulus(&mut stream(seed, 0), lambda, 0.0, window_radius))
}

/// Moves every point by an independent Rayleigh offset with uniform
/// direction.
pub fn displace_cells(users: &[Complex64], lambda: f64, seed: u64) -> Result<Vec<Complex64>> {
    if !(lambda > 0.0) {
        return Err(Error::domain("displace_cells", "lambda must be positive"));
    }
    let mut rng = stream(seed, 1);
    Ok(users
        .iter()
        .map(|u| {
            let rho = sample_rayleigh(&mut rng, lambda);
            u + Complex64::from_polar(rho, 2.0 * PI * rng.random::<f64>())
        })
        .collect())
}

/// One Monte Carlo realisation seen by the typical receiver.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PppDraw {
    /// Serving distance, km.
    pub r: f64,
    pub signal: f64,
    /// Interference from pairs transmitting in the studied direction.
    pub same_link: f64,
    /// Cross-link interference.
    pub cross_link: f64,
    pub noise: f64,
}

impl PppDraw {
    pub fn interference(&self) -> f64 {
        self.same_link + self.cross_link
    }

    pub fn sinr(&self) -> f64 {
        self.signal / (self.interference() + self.noise)
    }
}

/// Interference association used by the Monte Carlo simulator.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Association {
    /// The analysed model: Rayleigh serving distance, interferers outside
    /// it, independent Rayleigh offsets.
    #[default]
    Model,
    /// Diagnostic: explicit cell PPP, nearest-cell association and each
    /// cell's mobile uniform in its Voronoi cell.
    NearestCell,
}

/// Interference at the origin from the model's PPP of pairs outside `r`,
/// returned as `(same_link, cross_link)`.
fn model_interference(
    rng: &mut impl Rng,
    scen: &SmallCellScenario,
    direction: Direction,
    r: f64,
) -> (f64, f64) {
    let b = scen.prop.b();
    let (p, p_star) = (scen.p_eff(), scen.p_star_eff());
    let outer = scen.window_radius.max(r);
    let mut same = 0.0;
    let mut cross = 0.0;
    for z in sample_annulus(rng, scen.lambda, r, outer) {
        let rho = match scen.cell_offset {
            CellOffset::Rayleigh => sample_rayleigh(rng, scen.lambda),
            CellOffset::None => 0.0,
        };
        let offset = Complex64::from_polar(rho, 2.0 * PI * rng.random::<f64>());
        let downlink = rng.random::<f64>() < scen.mix.alpha_d;
        let h: f64 = Exp1.sample(rng);
        match (direction, downlink) {
            // cell displaced from the PPP mobile
            (Direction::Dl, true) => same += p * h * (z + offset).norm_sqr().powf(-b),
            (Direction::Dl, false) => cross += p_star * scen.offset_power(rho) * h * z.norm_sqr().powf(-b),
            // mobile displaced from the PPP cell
            (Direction::Ul, false) => {
                same += p_star * scen.offset_power(rho) * h * (z - offset).norm_sqr().powf(-b)
            }
            (Direction::Ul, true) => cross += p * h * z.norm_sqr().powf(-b),
        }
    }
    (same, cross)
}

fn serving_signal(rng: &mut impl Rng, scen: &SmallCellScenario, direction: Direction, r: f64) -> f64 {
    let h: f64 = Exp1.sample(rng);
    match direction {
        Direction::Dl => scen.p_eff() * h * r.powf(-scen.prop.two_b),
        Direction::Ul => scen.p_star_eff() * h * r.powf(-scen.prop.two_b * (1.0 - scen.prop.k)),
    }
}

/// One realisation of the analysed model.
pub fn ppp_draw(rng: &mut impl Rng, scen: &SmallCellScenario, direction: Direction) -> PppDraw {
    let r = sample_rayleigh(rng, scen.lambda);
    let signal = serving_signal(rng, scen, direction, r);
    let (same_link, cross_link) = model_interference(rng, scen, direction, r);
    PppDraw {
        r,
        signal,
        same_link,
        cross_link,
        noise: scen.prop.noise_mw(),
    }
}

/// Bucket grid over the window for nearest-cell queries.
struct CellIndex {
    cells: Vec<Complex64>,
    origin: f64,
    size: f64,
    n: usize,
    buckets: Vec<Vec<usize>>,
}

impl CellIndex {
    fn new(cells: Vec<Complex64>, half_width: f64, size: f64) -> Self {
        let n = ((2.0 * half_width / size).ceil() as usize).max(1);
        let mut idx = CellIndex {
            cells,
            origin: -half_width,
            size,
            n,
            buckets: vec![Vec::new(); n * n],
        };
        for (i, c) in idx.cells.iter().enumerate() {
            let (bx, by) = idx.bucket(*c);
            idx.buckets[by * n + bx].push(i);
        }
        idx
    }

    fn bucket(&self, p: Complex64) -> (usize, usize) {
        let clamp = |v: f64| (((v - self.origin) / self.size).floor().max(0.0) as usize).min(self.n - 1);
        (clamp(p.re), clamp(p.im))
    }

    /// True when no cell other than `own` is strictly closer to `p`.
    fn owns(&self, own: usize, p: Complex64) -> bool {
        let d2 = (p - self.cells[own]).norm_sqr();
        let d = d2.sqrt();
        let (lo_x, lo_y) = self.bucket(p - Complex64::new(d, d));
        let (hi_x, hi_y) = self.bucket(p + Complex64::new(d, d));
        for by in lo_y..=hi_y {
            for bx in lo_x..=hi_x {
                for &j in &self.buckets[by * self.n + bx] {
                    if j != own && (p - self.cells[j]).norm_sqr() < d2 {
                        return false;
                    }
                }
            }
        }
        true
    }

    /// Uniform point of the Voronoi cell of `own` by rejection from a disk.
    /// Falls back to the cell site when the cell is larger than the disk.
    fn voronoi_point(&self, rng: &mut impl Rng, own: usize, radius: f64) -> Complex64 {
        let s = self.cells[own];
        for _ in 0..10_000 {
            let rho = radius * rng.random::<f64>().sqrt();
            let p = s + Complex64::from_polar(rho, 2.0 * PI * rng.random::<f64>());
            if self.owns(own, p) {
                return p;
            }
        }
        s
    }
}

/// One realisation with explicit nearest-cell association inside the window.
fn nearest_cell_draw(rng: &mut impl Rng, scen: &SmallCellScenario, direction: Direction) -> PppDraw {
    let b = scen.prop.b();
    let (p, p_star) = (scen.p_eff(), scen.p_star_eff());
    let spacing = 1.0 / scen.lambda.sqrt();
    let proposal = 4.0 * spacing;
    let w = scen.window_radius;
    let mut cells = sample_annulus(rng, scen.lambda, 0.0, w);
    // the typical receiver: a mobile at the origin (downlink) or a cell at
    // the origin (uplink, Palm distribution)
    let serving = match direction {
        Direction::Dl => {
            while cells.is_empty() {
                cells = sample_annulus(rng, scen.lambda, 0.0, w);
            }
            cells
                .iter()
                .enumerate()
                .min_by(|a, b| a.1.norm_sqr().total_cmp(&b.1.norm_sqr()))
                .map(|(i, _)| i)
                .expect("non-empty")
        }
        Direction::Ul => {
            cells.push(Complex64::new(0.0, 0.0));
            cells.len() - 1
        }
    };
    let index = CellIndex::new(cells, w + proposal, spacing);
    let (r, signal) = match direction {
        Direction::Dl => {
            let r = index.cells[serving].norm();
            (r, serving_signal(rng, scen, direction, r))
        }
        Direction::Ul => {
            let r = index.voronoi_point(rng, serving, proposal).norm();
            (r, serving_signal(rng, scen, direction, r))
        }
    };
    let mut same = 0.0;
    let mut cross = 0.0;
    for i in 0..index.cells.len() {
        if i == serving {
            continue;
        }
        let s = index.cells[i];
        let downlink = rng.random::<f64>() < scen.mix.alpha_d;
        let h: f64 = Exp1.sample(rng);
        if downlink {
            let power = p * h * s.norm_sqr().powf(-b);
            match direction {
                Direction::Dl => same += power,
                Direction::Ul => cross += power,
            }
        } else {
            let m = match scen.cell_offset {
                CellOffset::Rayleigh => index.voronoi_point(rng, i, proposal),
                CellOffset::None => s,
            };
            let power = p_star * scen.offset_power((m - s).norm()) * h * m.norm_sqr().powf(-b);
            match direction {
                Direction::Dl => cross += power,
                Direction::Ul => same += power,
            }
        }
    }
    PppDraw {
        r,
        signal,
        same_link: same,
        cross_link: cross,
        noise: scen.prop.noise_mw(),
    }
}

/// `n_draws` independent realisations, one random stream per draw.
pub fn ppp_draws(
    scen: &SmallCellScenario,
    direction: Direction,
    association: Association,
    n_draws: usize,
    seed: u64,
) -> Result<Vec<PppDraw>> {
    scen.validate()?;
    scen.check_window()?;
    if n_draws == 0 {
        return Err(Error::config("n_draws must be >= 1"));
    }
    Ok(par_draws(n_draws, seed, |rng, _| match association {
        Association::Model => ppp_draw(rng, scen, direction),
        Association::NearestCell => nearest_cell_draw(rng, scen, direction),
    }))
}

/// Empirical SINR coverage of the analysed model.
pub fn mc_coverage_ppp(
    scen: &SmallCellScenario,
    direction: Direction,
    gamma_grid_db: &[f64],
    n_draws: usize,
    seed: u64,
) -> Result<CoverageCurve> {
    mc_coverage_ppp_with(scen, direction, Association::Model, gamma_grid_db, n_draws, seed)
}

pub fn mc_coverage_ppp_with(
    scen: &SmallCellScenario,
    direction: Direction,
    association: Association,
    gamma_grid_db: &[f64],
    n_draws: usize,
    seed: u64,
) -> Result<CoverageCurve> {
    check_grid(gamma_grid_db, "gamma")?;
    let draws = ppp_draws(scen, direction, association, n_draws, seed)?;
    let sinr_db: Vec<f64> = draws.iter().map(|d| linear_to_db(d.sinr())).collect();
    CoverageCurve::from_sinr_samples(gamma_grid_db, &sinr_db)
}

/// Monte Carlo estimate of `E[exp(-v I) | R = r]` under the analysed model.
pub fn mc_laplace(
    scen: &SmallCellScenario,
    direction: Direction,
    v: f64,
    r: f64,
    n_draws: usize,
    seed: u64,
) -> Result<McEstimate> {
    scen.validate()?;
    scen.check_window()?;
    if n_draws == 0 {
        return Err(Error::config("n_draws must be >= 1"));
    }
    let values = par_draws(n_draws, seed, |rng, _| {
        let (same, cross) = model_interference(rng, scen, direction, r);
        (-v * (same + cross)).exp()
    });
    Ok(McEstimate::from_samples(&values))
}

/// Monte Carlo mean of `log2(1 + SINR)`.
pub fn mc_ase(scen: &SmallCellScenario, direction: Direction, n_draws: usize, seed: u64) -> Result<McEstimate> {
    let draws = ppp_draws(scen, direction, Association::Model, n_draws, seed)?;
    let se: Vec<f64> = draws.iter().map(|d| d.sinr().ln_1p() / std::f64::consts::LN_2).collect();
    Ok(McEstimate::from_samples(&se))
}

/// `int_0^inf ds / (1 + s^b) = (pi/b) / sin(pi/b)`.
fn kernel_total(b: f64) -> f64 {
    (PI / b) / (PI / b).sin()
}

/// `int_s^inf dx / (1 + x^b)`.
///
/// With `w = 1 / (1 + x^b)` this is `kernel_total(b) I_w0(1 - 1/b, 1/b)`,
/// `w0 = 1 / (1 + s^b)`, a regularised incomplete beta function.
fn kernel_tail(s: f64, b: f64) -> f64 {
    if s <= 0.0 {
        return kernel_total(b);
    }
    let w0 = 1.0 / (1.0 + s.powf(b));
    if w0 == 0.0 {
        // far tail: int_s^inf x^(-b) dx
        return s.powf(1.0 - b) / (b - 1.0);
    }
    kernel_total(b) * statrs::function::beta::beta_reg(1.0 - 1.0 / b, 1.0 / b, w0)
}

/// `int_{|y| > r} dy / (1 + |y|^(2b) / c)`.
fn ring_integral(c: f64, r: f64, b: f64) -> f64 {
    if c <= 0.0 {
        return 0.0;
    }
    let scale = c.powf(1.0 / b);
    PI * scale * kernel_tail(r * r / scale, b)
}

/// `int_{|y| > r} dy / (1 + |y + rho e|^(2b) / c)` for a unit vector `e`:
/// the ring integral of a kernel centred at distance `rho` from the hole.
fn displaced_integral(c: f64, r: f64, rho: f64, b: f64, tol: QuadTol) -> Result<f64> {
    if c <= 0.0 {
        return Ok(0.0);
    }
    if rho == 0.0 {
        return Ok(ring_integral(c, r, b));
    }
    let scale = c.powf(1.0 / b);
    let (lo, hi) = ((r - rho).abs(), r + rho);
    // circles |z| = t with t > r + rho lie entirely outside the hole
    let mut total = PI * scale * kernel_tail(hi * hi / scale, b);
    if rho > r {
        // and so do those with t < rho - r
        total += PI * scale * (kernel_total(b) - kernel_tail(lo * lo / scale, b));
    }
    if r > 0.0 {
        // t^2 = m - h cos(psi) removes the square-root behaviour of acos at both ends
        let (m, h) = ((hi * hi + lo * lo) / 2.0, (hi * hi - lo * lo) / 2.0);
        let part = try_integrate(
            |psi| {
                let t2 = m - h * psi.cos();
                let t = t2.sqrt();
                if t == 0.0 {
                    return Ok(0.0);
                }
                let cos = ((t2 + rho * rho - r * r) / (2.0 * t * rho)).clamp(-1.0, 1.0);
                let outside = 2.0 * PI - 2.0 * cos.acos();
                Ok(0.5 * h * psi.sin() * outside / (1.0 + (t2 / scale).powf(b)))
            },
            0.0,
            PI,
            tol,
        )?;
        total += part;
    }
    Ok(total)
}

/// `E[f(rho)]` for the Rayleigh offset of density `lambda`.
fn offset_expectation(
    scen: &SmallCellScenario,
    r: f64,
    tol: QuadTol,
    mut f: impl FnMut(f64) -> Result<f64>,
) -> Result<f64> {
    if scen.cell_offset == CellOffset::None {
        return f(0.0);
    }
    let lp = scen.lambda * PI;
    let mut g = |u: f64| Ok((-u).exp() * f((u / lp).sqrt())?);
    // the integrand has a kink where the offset equals the hole radius
    let kink = lp * r * r;
    if kink > 0.0 && kink < OFFSET_U_MAX {
        Ok(try_integrate(&mut g, 0.0, kink, tol)? + try_integrate(&mut g, kink, OFFSET_U_MAX, tol)?)
    } else {
        try_integrate(g, 0.0, OFFSET_U_MAX, tol)
    }
}

fn check_laplace_args(v: f64, r: f64, scen: &SmallCellScenario) -> Result<()> {
    scen.validate()?;
    if !(v >= 0.0 && v.is_finite()) || !(r >= 0.0 && r.is_finite()) {
        return Err(Error::domain("laplace", format!("need v >= 0 and r >= 0, got v = {v}, r = {r}")));
    }
    Ok(())
}

/// Laplace transform of the downlink interference given serving distance
/// `r`, at `v` (in 1/mW).
pub fn laplace_dl(v: f64, r: f64, scen: &SmallCellScenario, quad: QuadratureControl) -> Result<f64> {
    check_laplace_args(v, r, scen)?;
    if v == 0.0 {
        return Ok(1.0);
    }
    let b = scen.prop.b();
    let tol = quad.inner;
    let (ad, au) = (scen.mix.alpha_d, scen.mix.alpha_u());
    let mut exponent = 0.0;
    if ad > 0.0 {
        let c = v * scen.p_eff();
        exponent += ad * offset_expectation(scen, r, tol, |rho| displaced_integral(c, r, rho, b, tol))?;
    }
    if au > 0.0 {
        let c = v * scen.p_star_eff();
        let term = if scen.prop.k == 0.0 {
            ring_integral(c, r, b)
        } else {
            offset_expectation(scen, r, tol, |rho| Ok(ring_integral(c * scen.offset_power(rho), r, b)))?
        };
        exponent += au * term;
    }
    Ok((-scen.lambda * exponent).exp())
}

/// Laplace transform of the uplink interference at the typical cell.
pub fn laplace_ul(v: f64, r: f64, scen: &SmallCellScenario, quad: QuadratureControl) -> Result<f64> {
    check_laplace_args(v, r, scen)?;
    if v == 0.0 {
        return Ok(1.0);
    }
    let b = scen.prop.b();
    let tol = quad.inner;
    let (ad, au) = (scen.mix.alpha_d, scen.mix.alpha_u());
    let mut exponent = 0.0;
    if au > 0.0 {
        let c = v * scen.p_star_eff();
        exponent += au
            * offset_expectation(scen, r, tol, |rho| {
                displaced_integral(c * scen.offset_power(rho), r, rho, b, tol)
            })?;
    }
    if ad > 0.0 {
        exponent += ad * ring_integral(v * scen.p_eff(), r, b);
    }
    Ok((-scen.lambda * exponent).exp())
}

pub fn laplace(
    direction: Direction,
    v: f64,
    r: f64,
    scen: &SmallCellScenario,
    quad: QuadratureControl,
) -> Result<f64> {
    match direction {
        Direction::Dl => laplace_dl(v, r, scen, quad),
        Direction::Ul => laplace_ul(v, r, scen, quad),
    }
}

/// Laplace transform by direct nested quadrature of the PGFL expression,
/// over interferer distance `x`, relative angle `theta` and offset `rho`.
/// Much slower than [`laplace`]; kept as an independent check.
pub fn laplace_direct(
    direction: Direction,
    v: f64,
    r: f64,
    scen: &SmallCellScenario,
    quad: QuadratureControl,
) -> Result<f64> {
    check_laplace_args(v, r, scen)?;
    let b = scen.prop.b();
    let (p, p_star) = (scen.p_eff(), scen.p_star_eff());
    let (ad, au) = (scen.mix.alpha_d, scen.mix.alpha_u());
    let lp = scen.lambda * PI;
    // a / (1 + a) = 1 - 1 / (1 + a), without cancellation
    let hit = |a: f64| a / (1.0 + a);
    let bracket = |x: f64, theta: f64, rho: f64| {
        let cos = theta.cos();
        match direction {
            Direction::Dl => {
                let d2 = x * x + rho * rho + 2.0 * x * rho * cos;
                ad * hit(v * p * d2.powf(-b)) + au * hit(v * scen.offset_power(rho) * p_star * x.powf(-2.0 * b))
            }
            Direction::Ul => {
                let d2 = x * x + rho * rho - 2.0 * x * rho * cos;
                au * hit(v * scen.offset_power(rho) * p_star * d2.powf(-b)) + ad * hit(v * p * x.powf(-2.0 * b))
            }
        }
    };
    let inner = quad.inner;
    let outer = quad.outer;
    let radial = try_integrate_to_infinity(
        |x| {
            let angular = try_integrate(
                |theta| match scen.cell_offset {
                    CellOffset::None => Ok(bracket(x, theta, 0.0)),
                    CellOffset::Rayleigh => try_integrate(
                        |u| Ok((-u).exp() * bracket(x, theta, (u / lp).sqrt())),
                        0.0,
                        OFFSET_U_MAX,
                        inner,
                    ),
                },
                0.0,
                PI,
                inner,
            )?;
            Ok(2.0 * angular * x)
        },
        r,
        outer,
    )?;
    Ok((-scen.lambda * radial).exp())
}

/// Coverage probability `P(SINR > gamma)` by quadrature over the Rayleigh
/// serving distance.
pub fn coverage_ppp(
    gamma_db: f64,
    direction: Direction,
    scen: &SmallCellScenario,
    quad: QuadratureControl,
) -> Result<f64> {
    scen.validate()?;
    if !gamma_db.is_finite() {
        return Err(Error::domain("coverage_ppp", "gamma_db must be finite"));
    }
    let gamma = db_to_linear(gamma_db);
    let (power, exponent) = match direction {
        Direction::Dl => (scen.p_eff(), scen.prop.two_b),
        Direction::Ul => (scen.p_star_eff(), scen.prop.two_b * (1.0 - scen.prop.k)),
    };
    let noise = scen.prop.noise_mw();
    let lp = scen.lambda * PI;
    let mut integrand = |u: f64| {
        let r = (u / lp).sqrt();
        let v = gamma * r.powf(exponent) / power;
        let noise_term = (-v * noise).exp();
        if noise_term == 0.0 {
            return Ok(0.0);
        }
        Ok((-u).exp() * noise_term * laplace(direction, v, r, scen, quad)?)
    };
    // At high thresholds the noise confines the integrand to u below the
    // scale where v N = 1, possibly far inside the first interval; cut
    // around that scale so the rule sees it.
    let mut cuts = vec![0.0];
    if noise > 0.0 {
        let u_noise = lp * (power / (gamma * noise)).powf(2.0 / exponent);
        cuts.extend([1e-3, 1e-2, 0.1, 1.0, 10.0].iter().map(|f| f * u_noise).filter(|u| *u < SERVING_U_MAX));
    }
    cuts.push(SERVING_U_MAX);
    let mut value = 0.0;
    for w in cuts.windows(2) {
        value += try_integrate(&mut integrand, w[0], w[1], quad.outer)?;
    }
    Ok(value.clamp(0.0, 1.0))
}

pub fn coverage_ppp_dl(gamma_db: f64, scen: &SmallCellScenario, quad: QuadratureControl) -> Result<f64> {
    coverage_ppp(gamma_db, Direction::Dl, scen, quad)
}

pub fn coverage_ppp_ul(gamma_db: f64, scen: &SmallCellScenario, quad: QuadratureControl) -> Result<f64> {
    coverage_ppp(gamma_db, Direction::Ul, scen, quad)
}

pub fn coverage_curve_ppp(
    gamma_grid_db: &[f64],
    direction: Direction,
    scen: &SmallCellScenario,
    quad: QuadratureControl,
) -> Result<CoverageCurve> {
    check_grid(gamma_grid_db, "gamma")?;
    let values = gamma_grid_db
        .iter()
        .map(|&g| coverage_ppp(g, direction, scen, quad))
        .collect::<Result<Vec<_>>>()?;
    Ok(CoverageCurve::analytic(gamma_grid_db, values))
}

/// `(1/ln 2) int_0^inf theta(gamma) / (1 + gamma) dgamma` for a coverage
/// function given on the linear threshold, integrated in `t = ln gamma`.
/// Thresholds where `theta` jumps go in `breaks`: a discontinuity falling
/// between the nodes of a rule is otherwise invisible to it.
pub fn ase_from_fn(
    mut theta: impl FnMut(f64) -> Result<f64>,
    breaks: &[f64],
    tol: QuadTol,
) -> Result<f64> {
    let segment = |theta: &mut dyn FnMut(f64) -> Result<f64>, a: f64, b: f64| {
        try_integrate(
            |t: f64| {
                let g = t.exp();
                Ok(theta(g)? * g / (1.0 + g))
            },
            a,
            b,
            tol,
        )
    };
    // below t = -30 the integrand is under e^(-30)
    let (lo, hi) = (-30.0, 30.0);
    let mut cuts = vec![lo];
    let mut inner: Vec<f64> = breaks
        .iter()
        .filter(|g| **g > 0.0)
        .map(|g| g.ln())
        .filter(|t| *t > lo && *t < hi)
        .collect();
    inner.sort_by(f64::total_cmp);
    cuts.extend(inner);
    cuts.push(hi);
    let mut total = 0.0;
    for w in cuts.windows(2) {
        total += segment(&mut theta, w[0], w[1])?;
    }
    let mut edge: f64 = hi;
    while theta(edge.exp())? > 1e-12 {
        if edge > 700.0 {
            return Err(Error::domain("ase_from_fn", "coverage does not vanish at large thresholds"));
        }
        total += segment(&mut theta, edge, 2.0 * edge)?;
        edge *= 2.0;
    }
    Ok(total / std::f64::consts::LN_2)
}

/// Average spectral efficiency `E[log2(1 + SINR)]`, bits/s/Hz.
pub fn ase(scen: &SmallCellScenario, direction: Direction, quad: QuadratureControl) -> Result<f64> {
    ase_from_fn(|g| coverage_ppp(linear_to_db(g), direction, scen, quad), &[], quad.outer)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn ks_uniform(mut u: Vec<f64>) -> f64 {
        u.sort_by(f64::total_cmp);
        let n = u.len() as f64;
        u.iter()
            .enumerate()
            .map(|(i, &x)| (x - i as f64 / n).abs().max(((i + 1) as f64 / n - x).abs()))
            .fold(0.0, f64::max)
    }

    fn closed_form_dl(gamma_db: f64) -> f64 {
        let g = db_to_linear(gamma_db);
        1.0 / (1.0 + g.sqrt() * (PI / 2.0 - (1.0 / g.sqrt()).atan()))
    }

    fn interference_limited(alpha_d: f64) -> SmallCellScenario {
        SmallCellScenario {
            prop: PropagationParams { two_b: 4.0, p_noise_dbm: f64::NEG_INFINITY, ..PropagationParams::default() },
            mix: TddMix::new(alpha_d).unwrap(),
            ..SmallCellScenario::default()
        }
    }

    #[test]
    fn ppp_count_and_radial_law() {
        let (lambda, w) = (10.0, 3.0);
        let counts: Vec<f64> = (0..2000).map(|s| sample_ppp(lambda, w, s).unwrap().len() as f64).collect();
        let est = McEstimate::from_samples(&counts);
        assert!((est.mean - lambda * PI * w * w).abs() < 3.0 * est.std_error);
        assert_eq!(sample_ppp(lambda, w, 7).unwrap(), sample_ppp(lambda, w, 7).unwrap());
        let radial: Vec<f64> = (0..400)
            .flat_map(|s| sample_ppp(lambda, w, 10_000 + s).unwrap())
            .map(|z| z.norm_sqr() / (w * w))
            .collect();
        let n = radial.len() as f64;
        assert!(ks_uniform(radial) < 1.63 / n.sqrt());
    }

    #[test]
    fn rayleigh_offsets() {
        let lambda = 10.0;
        let users = vec![Complex64::new(0.0, 0.0); 50_000];
        let cells = displace_cells(&users, lambda, 3).unwrap();
        let rho: Vec<f64> = cells.iter().map(|c| c.norm()).collect();
        let est = McEstimate::from_samples(&rho);
        assert!((est.mean - 0.5 / lambda.sqrt()).abs() < 3.0 * est.std_error);
        let u: Vec<f64> = rho.iter().map(|r| 1.0 - (-lambda * PI * r * r).exp()).collect();
        assert!(ks_uniform(u) < 1.63 / (50_000f64).sqrt());
    }

    #[test]
    fn displaced_points_stay_poisson() {
        let lambda = 10.0;
        // count displaced points in the unit disk: Poisson with mean lambda * pi
        let counts: Vec<f64> = (0..1500)
            .map(|s| {
                let users = sample_ppp(lambda, 3.0, s).unwrap();
                displace_cells(&users, lambda, s).unwrap().iter().filter(|c| c.norm() < 1.0).count() as f64
            })
            .collect();
        let est = McEstimate::from_samples(&counts);
        let var = est.std_error.powi(2) * counts.len() as f64;
        assert!((est.mean - lambda * PI).abs() < 3.0 * est.std_error);
        assert!((var / est.mean - 1.0).abs() < 0.15, "dispersion {}", var / est.mean);
    }

    #[test]
    fn kernel_pieces() {
        let tol = QuadTol::new(1e-12, 1e-12);
        for b in [1.25, 1.75, 2.0] {
            assert_relative_eq!(kernel_tail(0.0, b), kernel_total(b), max_relative = 1e-12);
            for s in [0.1f64, 0.7, 1.0, 2.5, 40.0] {
                // x = w^(-1/(b-1)) maps the tail onto a finite interval
                let e = b / (b - 1.0);
                let direct = try_integrate(|w| Ok(1.0 / (1.0 + w.powf(e))), 0.0, s.powf(1.0 - b), tol).unwrap() / (b - 1.0);
                assert_relative_eq!(kernel_tail(s, b), direct, max_relative = 1e-10);
            }
            let s: f64 = 1e6;
            assert_relative_eq!(kernel_tail(s, b), s.powf(1.0 - b) / (b - 1.0), max_relative = 1e-5);
        }
        // b = 2: int_0^inf dx / (1 + x^2) = pi / 2, and the tail is pi/2 - atan(s)
        assert_relative_eq!(kernel_total(2.0), PI / 2.0, max_relative = 1e-14);
        assert_relative_eq!(kernel_tail(3.0, 2.0), PI / 2.0 - 3f64.atan(), max_relative = 1e-12);
    }

    #[test]
    fn displaced_integral_against_polar_quadrature() {
        let tol = QuadTol::new(1e-10, 1e-10);
        let b = 1.75;
        for (c, r, rho) in [(0.3, 0.2, 0.1), (0.3, 0.1, 0.25), (2.0, 0.0, 0.3), (0.05, 0.3, 0.3)] {
            let fast = displaced_integral(c, r, rho, b, tol).unwrap();
            // integrate over the plane outside the hole in polar coordinates
            let slow = try_integrate_to_infinity(
                |x| {
                    if x < r {
                        return Ok(0.0);
                    }
                    let ang = try_integrate(
                        |th| {
                            let d2 = x * x + rho * rho + 2.0 * x * rho * th.cos();
                            Ok(1.0 / (1.0 + d2.powf(b) / c))
                        },
                        0.0,
                        2.0 * PI,
                        tol,
                    )?;
                    Ok(ang * x)
                },
                r,
                tol,
            )
            .unwrap();
            assert_relative_eq!(fast, slow, max_relative = 1e-7);
        }
    }

    #[test]
    fn laplace_trivial_limits() {
        let scen = SmallCellScenario::default();
        let q = QuadratureControl::default();
        for dir in [Direction::Dl, Direction::Ul] {
            assert_eq!(laplace(dir, 0.0, 0.1, &scen, q).unwrap(), 1.0);
            // with k > 0 the offset power grows as lambda shrinks, so use k = 0
            let sparse = SmallCellScenario {
                lambda: 1e-9,
                prop: PropagationParams { k: 0.0, ..scen.prop },
                ..scen
            };
            let v = 1.0 / scen.p_eff();
            assert!(laplace(dir, v, 0.1, &sparse, q).unwrap() > 1.0 - 1e-6);
        }
        assert!(laplace_dl(-1.0, 0.1, &scen, q).is_err());
    }

    #[test]
    fn laplace_completely_monotone_in_v() {
        let scen = SmallCellScenario::default();
        let q = QuadratureControl::default();
        let base = 1.0 / scen.p_eff();
        for dir in [Direction::Dl, Direction::Ul] {
            let vals: Vec<f64> = (0..8)
                .map(|i| laplace(dir, i as f64 * base, 0.1, &scen, q).unwrap())
                .collect();
            for w in vals.windows(2) {
                assert!(w[1] < w[0]);
            }
            // log-convex on an equispaced grid
            for w in vals.windows(3) {
                assert!(w[0].ln() + w[2].ln() >= 2.0 * w[1].ln() - 1e-9);
            }
        }
    }

    #[test]
    fn laplace_matches_direct_and_mc() {
        let scen = SmallCellScenario::default();
        let q = QuadratureControl::default();
        let loose = QuadratureControl { inner: QuadTol::new(1e-7, 1e-6), outer: QuadTol::new(1e-7, 1e-6) };
        for dir in [Direction::Dl, Direction::Ul] {
            let (v, r) = (3.0 / scen.p_eff(), 0.15);
            let fast = laplace(dir, v, r, &scen, q).unwrap();
            let direct = laplace_direct(dir, v, r, &scen, loose).unwrap();
            assert!((fast - direct).abs() < 1e-4, "{dir}: {fast} vs {direct}");
            let mc = mc_laplace(&scen, dir, v, r, 20_000, 11).unwrap();
            assert!((fast - mc.mean).abs() < 3.0 * mc.std_error + 2e-4, "{dir}: {fast} vs {mc:?}");
        }
    }

    #[test]
    fn ul_kernel_sign_is_immaterial() {
        // with alpha_d = 0 the uplink and downlink brackets differ only in
        // the sign of the cross term, and in which link carries the offset
        let scen = SmallCellScenario {
            mix: TddMix::new(1.0).unwrap(),
            p_small_star_dbm: 26.0,
            prop: PropagationParams { k: 0.0, ..PropagationParams::default() },
            ..SmallCellScenario::default()
        };
        let ul = SmallCellScenario { mix: TddMix::new(0.0).unwrap(), ..scen };
        let q = QuadratureControl::default();
        let v = 2.0 / scen.p_eff();
        let a = laplace_dl(v, 0.1, &scen, q).unwrap();
        let b = laplace_ul(v, 0.1, &ul, q).unwrap();
        assert_relative_eq!(a, b, max_relative = 1e-6);
    }

    #[test]
    fn undisplaced_quadrature_reproduces_closed_form() {
        let scen = SmallCellScenario { cell_offset: CellOffset::None, ..interference_limited(1.0) };
        let q = QuadratureControl::default();
        for g in [-5.0, 0.0, 5.0, 10.0] {
            let c = coverage_ppp_dl(g, &scen, q).unwrap();
            assert!((c - closed_form_dl(g)).abs() < 1e-5, "{g} dB: {c} vs {}", closed_form_dl(g));
        }
    }

    #[test]
    fn undisplaced_mc_reproduces_closed_form() {
        let scen = SmallCellScenario { cell_offset: CellOffset::None, ..interference_limited(1.0) };
        let mc = mc_coverage_ppp(&scen, Direction::Dl, &[0.0, 5.0], 20_000, 5).unwrap();
        for (i, g) in [0.0, 5.0].iter().enumerate() {
            assert!((mc.value[i] - closed_form_dl(*g)).abs() < 0.015);
        }
    }

    #[test]
    fn coverage_limits_and_monotone() {
        let scen = SmallCellScenario::default();
        let q = QuadratureControl::default();
        for dir in [Direction::Dl, Direction::Ul] {
            assert!(coverage_ppp(-200.0, dir, &scen, q).unwrap() > 1.0 - 1e-7);
            let mut prev = 1.0;
            for g in [-20.0, -10.0, 0.0, 10.0, 20.0] {
                let c = coverage_ppp(g, dir, &scen, q).unwrap();
                assert!(c <= prev + 1e-9);
                prev = c;
            }
            let noisy = SmallCellScenario {
                prop: PropagationParams { p_noise_dbm: -80.0, ..scen.prop },
                ..scen
            };
            assert!(coverage_ppp(0.0, dir, &noisy, q).unwrap() <= coverage_ppp(0.0, dir, &scen, q).unwrap());
        }
    }

    #[test]
    fn draws_decompose_and_repeat() {
        let scen = SmallCellScenario::default();
        for dir in [Direction::Dl, Direction::Ul] {
            let a = ppp_draws(&scen, dir, Association::Model, 200, 9).unwrap();
            let b = ppp_draws(&scen, dir, Association::Model, 200, 9).unwrap();
            assert_eq!(a, b);
            for d in &a {
                assert_eq!(d.interference(), d.same_link + d.cross_link);
                assert!(d.signal > 0.0 && d.same_link >= 0.0 && d.cross_link >= 0.0);
            }
        }
        let dl_only = SmallCellScenario { mix: TddMix::static_dl(), ..scen };
        let d = ppp_draws(&dl_only, Direction::Dl, Association::Model, 50, 1).unwrap();
        assert!(d.iter().all(|d| d.cross_link == 0.0));
        let n = ppp_draws(&dl_only, Direction::Ul, Association::NearestCell, 50, 1).unwrap();
        assert!(n.iter().all(|d| d.same_link == 0.0));
    }

    #[test]
    fn mc_guards() {
        let scen = SmallCellScenario::default();
        assert!(mc_coverage_ppp(&scen, Direction::Dl, &[], 10, 1).is_err());
        let tiny = SmallCellScenario { window_radius: 0.5, ..scen };
        assert!(matches!(mc_coverage_ppp(&tiny, Direction::Dl, &[0.0], 10, 1), Err(Error::Config(_))));
        let c = mc_coverage_ppp(&scen, Direction::Dl, &[-200.0], 500, 1).unwrap();
        assert_eq!(c.value[0], 1.0);
    }

    #[test]
    fn ase_of_degenerate_sinr() {
        for c in [0.5, 3.0, 100.0] {
            let a = ase_from_fn(|g| Ok(if g < c { 1.0 } else { 0.0 }), &[c], QuadTol::new(1e-10, 1e-10)).unwrap();
            assert_relative_eq!(a, (1.0 + c).log2(), max_relative = 1e-7);
        }
    }

    #[test]
    fn voronoi_sampling_stays_in_cell() {
        let mut rng = stream(4, 0);
        let cells = sample_annulus(&mut rng, 10.0, 0.0, 2.0);
        let index = CellIndex::new(cells.clone(), 3.0, 1.0 / 10f64.sqrt());
        for own in 0..cells.len().min(20) {
            let p = index.voronoi_point(&mut rng, own, 4.0 / 10f64.sqrt());
            let d = (p - cells[own]).norm();
            assert!(cells.iter().all(|c| (p - c).norm() >= d - 1e-12));
        }
    }
}
