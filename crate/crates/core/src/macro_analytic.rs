//! Series evaluation of the four macro-cell interference-to-signal ratios,
//! the resulting SINR maps, their inverses and the coverage probability
//! under uniformly distributed users.
//!
//! All ISRs are azimuth averages and depend on the mobile only through
//! `x = r / delta`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::hexgrid::{Direction, MacroNetwork, PropagationParams, TddMix};
use crate::specfun::{gamma, ln_gamma, omega, shadowing_mean_factor, SeriesControl, ShadowingSpec};
use crate::units::db_to_linear;

const INV_SQRT3: f64 = 0.577_350_269_189_625_8;

/// Number of leading terms kept for the uplink-to-downlink series where it
/// does not converge, see [`MacroModel::isr`].
pub const UL_DL_EDGE_TERMS: usize = 8;

/// `omega(b + m)` for `m = 0, 1, ...`, computed on demand.
#[derive(Debug, Clone)]
pub struct OmegaTable {
    b: f64,
    values: Vec<f64>,
}

impl OmegaTable {
    pub fn new(b: f64) -> Result<Self> {
        if !(b > 1.0) {
            return Err(Error::domain("OmegaTable", format!("need b > 1, got {b}")));
        }
        Ok(OmegaTable { b, values: Vec::new() })
    }

    pub fn get(&mut self, m: usize) -> f64 {
        while self.values.len() <= m {
            let z = self.b + self.values.len() as f64;
            self.values.push(omega(z).expect("z > 1"));
        }
        self.values[m]
    }
}

fn check_b(b: f64, func: &'static str) -> Result<()> {
    if !(b > 1.0) {
        return Err(Error::domain(func, format!("need b > 1, got {b}")));
    }
    Ok(())
}

fn check_x(x: f64, func: &'static str) -> Result<()> {
    if !(0.0..1.0).contains(&x) {
        return Err(Error::domain(func, format!("need 0 <= x < 1, got {x}")));
    }
    Ok(())
}

/// Downlink-to-downlink ISR
/// `6 x^(2b) / Gamma(b)^2 sum_h Gamma(b+h)^2 / Gamma(h+1)^2 omega(b+h) x^(2h)`.
pub fn isr_dl_dl(x: f64, b: f64, ctrl: SeriesControl) -> Result<f64> {
    check_b(b, "isr_dl_dl")?;
    check_x(x, "isr_dl_dl")?;
    if x == 0.0 {
        return Ok(0.0);
    }
    let mut table = OmegaTable::new(b)?;
    dl_dl_with(&mut table, x, b, ctrl)
}

fn dl_dl_with(table: &mut OmegaTable, x: f64, b: f64, ctrl: SeriesControl) -> Result<f64> {
    let x2 = x * x;
    // running Gamma(b+h)^2 / (Gamma(b)^2 h!^2) x^(2h)
    let mut coef = 1.0;
    let sum = ctrl.sum(|h| {
        if h > 0 {
            let r = (b + h as f64 - 1.0) / h as f64;
            coef *= r * r * x2;
        }
        coef * table.get(h)
    })?;
    Ok(6.0 * x.powf(2.0 * b) * sum)
}

/// Coefficient of the uplink-to-downlink series in `x^2`:
///
/// `beta_h = sum_{n=0}^{h} sum_{i>=0} Gamma(b+h+n+i)^2 omega(b+h+n+i) rd^(2n+2i)
///   / (Gamma(b)^2 n!^2 i! (h-n)! (h+n+i)! (n+i+bk+1))` with `rd = R / delta`.
pub fn beta_h(h: usize, b: f64, k: f64, r_over_delta: f64, ctrl: SeriesControl) -> Result<f64> {
    check_b(b, "beta_h")?;
    check_rd(r_over_delta, "beta_h")?;
    if !(0.0..=1.0).contains(&k) {
        return Err(Error::domain("beta_h", format!("need k in [0, 1], got {k}")));
    }
    let mut table = OmegaTable::new(b)?;
    beta_with(&mut table, h, b, k, r_over_delta, ctrl)
}

fn check_rd(rd: f64, func: &'static str) -> Result<()> {
    if !(rd > 0.0 && rd <= INV_SQRT3 * (1.0 + 1e-12)) {
        return Err(Error::domain(func, format!("need 0 < R/delta <= 1/sqrt(3), got {rd}")));
    }
    Ok(())
}

fn beta_with(
    table: &mut OmegaTable,
    h: usize,
    b: f64,
    k: f64,
    rd: f64,
    ctrl: SeriesControl,
) -> Result<f64> {
    let rd2 = rd * rd;
    let bk = b * k;
    let lg_b = ln_gamma(b)?;
    let mut total = 0.0;
    for n in 0..=h {
        let (hf, nf) = (h as f64, n as f64);
        let m0 = h + n;
        // i = 0 term in logs, later terms by ratio
        let ln_first = 2.0 * ln_gamma(b + m0 as f64)? - 2.0 * lg_b
            - 2.0 * ln_gamma(nf + 1.0)?
            - ln_gamma(hf - nf + 1.0)?
            - ln_gamma(hf + nf + 1.0)?
            + 2.0 * nf * rd.ln();
        let mut coef = ln_first.exp();
        // terms grow until i is about (h + n) (R/delta)^2, so the cap scales with h
        let inner_ctrl = SeriesControl {
            max_terms: ctrl.max_terms + 4 * m0,
            ..ctrl
        };
        let inner = inner_ctrl.sum(|i| {
            if i > 0 {
                let fi = i as f64;
                let m = (m0 + i) as f64;
                // Gamma(b+m)^2 / (i! (h+n+i)!) ratio from i-1 to i
                let g = b + m - 1.0;
                coef *= g * g / (fi * m) * rd2;
            }
            coef * table.get(m0 + i) / (nf + i as f64 + bk + 1.0)
        })?;
        total += inner;
    }
    Ok(total)
}

/// Uplink-to-downlink ISR `6 (P*/P) x^(2b) R^(2bk) sum_h beta_h x^(2h)`,
/// with `R = r_over_delta * delta` in km.
pub fn isr_ul_dl(
    x: f64,
    b: f64,
    k: f64,
    r_over_delta: f64,
    delta: f64,
    p_star_over_p: f64,
    ctrl: SeriesControl,
) -> Result<f64> {
    check_b(b, "isr_ul_dl")?;
    check_rd(r_over_delta, "isr_ul_dl")?;
    check_x(x, "isr_ul_dl")?;
    if x == 0.0 {
        return Ok(0.0);
    }
    let mut table = OmegaTable::new(b)?;
    let x2 = x * x;
    let mut x2h = 1.0;
    let mut failure = None;
    let sum = ctrl.sum(|h| {
        if h > 0 {
            x2h *= x2;
        }
        match beta_with(&mut table, h, b, k, r_over_delta, ctrl) {
            Ok(beta) => beta * x2h,
            Err(e) => {
                failure.get_or_insert(e);
                f64::NAN
            }
        }
    });
    if let Some(e) = failure {
        return Err(e);
    }
    let cell_radius = r_over_delta * delta;
    Ok(6.0 * p_star_over_p * x.powf(2.0 * b) * cell_radius.powf(2.0 * b * k) * sum?)
}

/// Uplink-to-uplink constant: `U_up(x) = A1 x^(2b(1-k))`.
pub fn a1(b: f64, k: f64, r_over_delta: f64, ctrl: SeriesControl) -> Result<f64> {
    check_b(b, "a1")?;
    check_rd(r_over_delta, "a1")?;
    let mut table = OmegaTable::new(b)?;
    a1_with(&mut table, b, k, r_over_delta, ctrl)
}

fn a1_with(table: &mut OmegaTable, b: f64, k: f64, rd: f64, ctrl: SeriesControl) -> Result<f64> {
    let rd2 = rd * rd;
    let bk = b * k;
    let mut coef = 1.0;
    let sum = ctrl.sum(|h| {
        if h > 0 {
            let r = (b + h as f64 - 1.0) / h as f64;
            coef *= r * r * rd2;
        }
        coef * table.get(h) / (bk + h as f64 + 1.0)
    })?;
    Ok(6.0 * rd.powf(2.0 * b * k) * sum)
}

/// Downlink-to-uplink constant `A2 = 6 (P/P*) omega(b) / delta^(2bk)`:
/// `U_down(x) = A2 x^(2b(1-k))`.
pub fn a2(b: f64, k: f64, p_over_pstar: f64, delta: f64) -> Result<f64> {
    check_b(b, "a2")?;
    Ok(6.0 * p_over_pstar * omega(b)? / delta.powf(2.0 * b * k))
}

/// The four mean ISR components at one position, and their mixtures.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct IsrBreakdown {
    pub dl_to_dl: f64,
    pub ul_to_dl: f64,
    pub ul_to_ul: f64,
    pub dl_to_ul: f64,
    /// `alpha_d * dl_to_dl + alpha_u * ul_to_dl`
    pub total_dl: f64,
    /// `alpha_u * ul_to_ul + alpha_d * dl_to_ul`
    pub total_ul: f64,
    /// `ul_to_dl` is a fixed-order partial sum because `x` lies outside the
    /// region where the averaged uplink interference is integrable.
    pub ul_to_dl_truncated: bool,
}

/// Noise terms of the SINR maps:
/// `d(x) = eta D(x) + y0 x^(2b)` and `u(x) = eta U(x) + y0' x^(2b(1-k))`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SinrParams {
    /// `P_N delta^(2b) / P`
    pub y0: f64,
    /// `P_N delta^(2b(1-k)) / P*`
    pub y0_prime: f64,
    pub eta: f64,
}

impl SinrParams {
    pub fn new(net: &MacroNetwork, prop: &PropagationParams) -> Self {
        let noise = prop.noise_mw();
        SinrParams {
            y0: noise * net.delta.powf(prop.two_b) / prop.p_dl_eff(),
            y0_prime: noise * net.delta.powf(prop.two_b * (1.0 - prop.k)) / prop.p_star_eff(),
            eta: net.load_eta,
        }
    }
}

/// How the downlink SINR map is inverted.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum InverseMethod {
    /// Second-order series reversion.
    Series,
    /// Bisection on `(0, 1/sqrt(3)]`, exact to 1e-12 in `x`.
    #[default]
    Bisection,
}

/// Macro network with all series coefficients precomputed, for repeated
/// evaluation (coverage curves, inversions).
#[derive(Debug, Clone)]
pub struct MacroModel {
    pub net: MacroNetwork,
    pub prop: PropagationParams,
    pub mix: TddMix,
    pub sinr: SinrParams,
    pub ctrl: SeriesControl,
    shadow: f64,
    b: f64,
    dl_coef: Vec<f64>,
    beta: Vec<f64>,
    a1: f64,
    a2: f64,
    /// `6 (P*/P) R^(2bk)`
    ul_dl_prefactor: f64,
    edge_terms: usize,
}

impl MacroModel {
    pub fn new(
        net: MacroNetwork,
        prop: PropagationParams,
        mix: TddMix,
        shadowing: Option<ShadowingSpec>,
        ctrl: SeriesControl,
    ) -> Result<Self> {
        net.validate()?;
        prop.validate()?;
        mix.validate()?;
        ctrl.validate()?;
        let b = prop.b();
        let rd = net.radius_ratio();
        let mut table = OmegaTable::new(b)?;
        let mut dl_coef = Vec::with_capacity(ctrl.max_terms);
        let mut c = 1.0;
        for h in 0..ctrl.max_terms {
            if h > 0 {
                let r = (b + h as f64 - 1.0) / h as f64;
                c *= r * r;
            }
            dl_coef.push(c * table.get(h));
        }
        let mut beta = Vec::with_capacity(ctrl.max_terms);
        for h in 0..ctrl.max_terms {
            let v = beta_with(&mut table, h, b, prop.k, rd, ctrl)?;
            if !v.is_finite() {
                break;
            }
            beta.push(v);
        }
        let a1 = a1_with(&mut table, b, prop.k, rd, ctrl)?;
        let a2 = a2(b, prop.k, 1.0 / prop.pstar_over_p(), net.delta)?;
        Ok(MacroModel {
            sinr: SinrParams::new(&net, &prop),
            shadow: shadowing.map_or(1.0, shadowing_mean_factor),
            ul_dl_prefactor: 6.0 * prop.pstar_over_p() * net.cell_radius.powf(2.0 * b * prop.k),
            net,
            prop,
            mix,
            ctrl,
            b,
            dl_coef,
            beta,
            a1,
            a2,
            edge_terms: UL_DL_EDGE_TERMS,
        })
    }

    /// Number of uplink-to-downlink terms kept where that series does not
    /// converge (default [`UL_DL_EDGE_TERMS`]).
    pub fn with_edge_terms(mut self, terms: usize) -> Self {
        self.edge_terms = terms.clamp(1, self.beta.len());
        self
    }

    pub fn b(&self) -> f64 {
        self.b
    }

    pub fn a1(&self) -> f64 {
        self.a1
    }

    pub fn a2(&self) -> f64 {
        self.a2
    }

    pub fn beta(&self) -> &[f64] {
        &self.beta
    }

    /// Largest `x` for which the averaged uplink-to-downlink interference is
    /// finite: an interfering mobile's disk reaches the studied mobile beyond
    /// `1 - R/delta`.
    pub fn ul_dl_convergence_radius(&self) -> f64 {
        1.0 - self.net.radius_ratio()
    }

    fn check_x(&self, x: f64) -> Result<()> {
        if !(0.0..=INV_SQRT3 * (1.0 + 1e-12)).contains(&x) {
            return Err(Error::domain("MacroModel", format!("need 0 <= x <= 1/sqrt(3), got {x}")));
        }
        Ok(())
    }

    fn dl_dl(&self, x: f64) -> Result<f64> {
        let x2 = x * x;
        let mut p = 1.0;
        let sum = self.ctrl.sum(|h| {
            if h > 0 {
                p *= x2;
            }
            self.dl_coef.get(h).copied().unwrap_or(f64::NAN) * p
        })?;
        Ok(6.0 * x.powf(2.0 * self.b) * sum)
    }

    fn ul_dl(&self, x: f64) -> (f64, bool) {
        let x2 = x * x;
        let term = |h: usize| self.beta.get(h).map_or(f64::NAN, |b| b * x2.powi(h as i32));
        let (sum, truncated) = match self.ctrl.sum(term) {
            Ok(s) if s.is_finite() => (s, false),
            _ => ((0..self.edge_terms).map(term).sum(), true),
        };
        (self.ul_dl_prefactor * x.powf(2.0 * self.b) * sum, truncated)
    }

    /// Mean ISR components at `x = r / delta`, with the shadowing factor
    /// applied to each.
    ///
    /// The uplink-to-downlink mean diverges once an interfering mobile's disk
    /// can reach the studied mobile (`x >= 1 - R/delta`); there, and wherever
    /// its series does not meet the truncation rule, the first
    /// [`UL_DL_EDGE_TERMS`] terms are used and the breakdown is flagged.
    pub fn isr(&self, x: f64) -> Result<IsrBreakdown> {
        self.check_x(x)?;
        let f = self.shadow;
        let dl_to_dl = f * self.dl_dl(x)?;
        let (ul_dl, truncated) = self.ul_dl(x);
        let ul_to_dl = f * ul_dl;
        let scale = x.powf(self.prop.two_b * (1.0 - self.prop.k));
        let ul_to_ul = f * self.a1 * scale;
        let dl_to_ul = f * self.a2 * scale;
        let (ad, au) = (self.mix.alpha_d, self.mix.alpha_u());
        Ok(IsrBreakdown {
            dl_to_dl,
            ul_to_dl,
            ul_to_ul,
            dl_to_ul,
            total_dl: ad * dl_to_dl + au * ul_to_dl,
            total_ul: au * ul_to_ul + ad * dl_to_ul,
            ul_to_dl_truncated: truncated,
        })
    }

    /// `d(x) = eta D(x) + y0 x^(2b)`, the inverse downlink SINR.
    pub fn d(&self, x: f64) -> Result<f64> {
        let isr = self.isr(x)?;
        Ok(self.sinr.eta * isr.total_dl + self.sinr.y0 * x.powf(self.prop.two_b))
    }

    /// Constant `c` in `u(x) = c x^(2b(1-k))`.
    fn u_coefficient(&self) -> f64 {
        let (ad, au) = (self.mix.alpha_d, self.mix.alpha_u());
        self.sinr.eta * self.shadow * (au * self.a1 + ad * self.a2) + self.sinr.y0_prime
    }

    /// `u(x) = eta U(x) + y0' x^(2b(1-k))`, the inverse uplink SINR.
    pub fn u(&self, x: f64) -> Result<f64> {
        self.check_x(x)?;
        Ok(self.u_coefficient() * x.powf(self.prop.two_b * (1.0 - self.prop.k)))
    }

    pub fn sinr_dl(&self, x: f64) -> Result<f64> {
        let d = self.d(x)?;
        if d <= 0.0 {
            return Err(Error::UnboundedSinr(format!("d({x}) = 0")));
        }
        Ok(1.0 / d)
    }

    pub fn sinr_ul(&self, x: f64) -> Result<f64> {
        let u = self.u(x)?;
        if u <= 0.0 {
            return Err(Error::UnboundedSinr(format!("u({x}) = 0")));
        }
        Ok(1.0 / u)
    }

    /// Closed-form inverse of `u`.
    pub fn inv_u(&self, y: f64) -> Result<f64> {
        if !(y > 0.0) {
            return Err(Error::domain("inv_u", format!("need y > 0, got {y}")));
        }
        let exponent = self.prop.two_b * (1.0 - self.prop.k);
        if exponent == 0.0 {
            return Err(Error::NotInvertible("k = 1 makes u constant in x".into()));
        }
        let c = self.u_coefficient();
        if c <= 0.0 {
            return Err(Error::NotInvertible("u vanishes identically".into()));
        }
        Ok((y / c).powf(1.0 / exponent))
    }

    /// Leading coefficient `f(b)` of `d(x) = x^(2b) f(b) (1 + sum c_h x^(2h))`.
    pub fn d_leading(&self) -> f64 {
        let (ad, au) = (self.mix.alpha_d, self.mix.alpha_u());
        let eta_f = self.sinr.eta * self.shadow;
        eta_f * (6.0 * ad * self.dl_coef[0] + au * self.ul_dl_prefactor * self.beta[0]) + self.sinr.y0
    }

    /// `c_1` of the same expansion.
    pub fn d_c1(&self) -> f64 {
        let (ad, au) = (self.mix.alpha_d, self.mix.alpha_u());
        let eta_f = self.sinr.eta * self.shadow;
        eta_f * (6.0 * ad * self.dl_coef[1] + au * self.ul_dl_prefactor * self.beta[1]) / self.d_leading()
    }

    /// Inverse of `d` on `(0, 1/sqrt(3)]`.
    pub fn inv_d(&self, y: f64, method: InverseMethod) -> Result<f64> {
        if !(y > 0.0) {
            return Err(Error::domain("inv_d", format!("need y > 0, got {y}")));
        }
        match method {
            InverseMethod::Series => {
                let f = self.d_leading();
                if f <= 0.0 {
                    return Err(Error::NotInvertible("d vanishes identically".into()));
                }
                let v2 = (y / f).powf(1.0 / self.b);
                let c1 = self.d_c1();
                Ok((v2 / (0.5 + (0.25 + c1 / self.b * v2).sqrt())).sqrt())
            }
            InverseMethod::Bisection => self.bisect_d(y, INV_SQRT3),
        }
    }

    fn bisect_d(&self, y: f64, x_max: f64) -> Result<f64> {
        let top = self.d(x_max)?;
        if y > top {
            return Err(Error::domain(
                "inv_d",
                format!("y = {y} above d(x_max) = {top}"),
            ));
        }
        let (mut lo, mut hi) = (0.0f64, x_max);
        while hi - lo > 1e-13 {
            let mid = 0.5 * (lo + hi);
            if self.d(mid)? < y {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        Ok(0.5 * (lo + hi))
    }

    /// Coverage probability `min(x*, R/delta)^2 / (R/delta)^2` where `x*`
    /// inverts the SINR map at `1/gamma`.
    pub fn coverage(&self, gamma_db: f64, direction: Direction, method: InverseMethod) -> Result<f64> {
        let y = 1.0 / db_to_linear(gamma_db);
        let rd = self.net.radius_ratio();
        let x = match direction {
            Direction::Ul => {
                if self.u_coefficient() == 0.0 {
                    return Ok(1.0);
                }
                if self.prop.k == 1.0 {
                    // u constant: everyone or no one is covered
                    return Ok(if self.u_coefficient() < y { 1.0 } else { 0.0 });
                }
                self.inv_u(y)?
            }
            Direction::Dl => {
                if self.d(rd)? <= y {
                    return Ok(1.0);
                }
                match method {
                    InverseMethod::Bisection => self.bisect_d(y, rd)?,
                    InverseMethod::Series => self.inv_d(y, method)?,
                }
            }
        };
        let ratio = x.min(rd) / rd;
        Ok(ratio * ratio)
    }

    pub fn coverage_curve(
        &self,
        gamma_grid_db: &[f64],
        direction: Direction,
        method: InverseMethod,
    ) -> Result<crate::curve::CoverageCurve> {
        crate::curve::check_grid(gamma_grid_db, "gamma")?;
        let values = gamma_grid_db
            .iter()
            .map(|&g| self.coverage(g, direction, method))
            .collect::<Result<Vec<_>>>()?;
        Ok(crate::curve::CoverageCurve::analytic(gamma_grid_db, values))
    }
}

/// Mean ISR breakdown at a mobile position (azimuth ignored, the series are
/// azimuth averages).
pub fn isr_total(
    m: crate::hexgrid::MobilePolar,
    net: &MacroNetwork,
    prop: &PropagationParams,
    mix: TddMix,
    shadowing: Option<ShadowingSpec>,
) -> Result<IsrBreakdown> {
    MacroModel::new(*net, *prop, mix, shadowing, SeriesControl::default())?.isr(m.r / net.delta)
}

/// Analytic coverage with the default bisection inverse.
pub fn coverage_macro(
    gamma_db: f64,
    direction: Direction,
    net: &MacroNetwork,
    prop: &PropagationParams,
    mix: TddMix,
) -> Result<f64> {
    MacroModel::new(*net, *prop, mix, None, SeriesControl::default())?.coverage(
        gamma_db,
        direction,
        InverseMethod::Bisection,
    )
}

/// `Gamma(b)` is only needed by callers reproducing the textbook form.
pub fn gamma_b(b: f64) -> Result<f64> {
    gamma(b)
}
