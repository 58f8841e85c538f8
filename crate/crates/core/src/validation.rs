//! Self-check suite: every model quantity against an independent oracle.
//!
//! Each check reports the achieved error next to the required tolerance.
//! Monte Carlo checks report `|z|`, the gap in standard errors, or a
//! sup-norm gap for coverage curves.

use std::fmt;
use std::time::Instant;

use crate::curve::CoverageCurve;
use crate::error::{Error, Result};
use crate::hexgrid::{
    bruteforce_isr_dl_avg, bruteforce_isr_ul_dl, lattice_sum, mc_coverage_macro, Azimuth, Direction, MacroNetwork,
    McEstimate, MobilePolar, PropagationParams, TddMix,
};
use crate::macro_analytic::{a1, a2, beta_h, isr_dl_dl, isr_ul_dl, InverseMethod, MacroModel};
use crate::ppp_model::{
    ase, coverage_curve_ppp, coverage_ppp_dl, laplace, laplace_direct, mc_ase, mc_coverage_ppp, mc_laplace,
    CellOffset, QuadratureControl, SmallCellScenario,
};
use crate::specfun::{hurwitz_zeta, omega, riemann_zeta, SeriesControl};
use crate::units::db_to_linear;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Metric {
    RelativeError,
    AbsoluteError,
    /// Gap between estimate and reference in standard errors.
    ZScore,
    SupGap,
}

impl fmt::Display for Metric {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Metric::RelativeError => "rel err",
            Metric::AbsoluteError => "abs err",
            Metric::ZScore => "|z|",
            Metric::SupGap => "sup gap",
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CheckResult {
    pub name: &'static str,
    pub metric: Metric,
    /// NaN when the check itself failed to evaluate.
    pub achieved: f64,
    pub required: f64,
    pub seconds: f64,
    pub error: Option<String>,
}

impl CheckResult {
    pub fn passed(&self) -> bool {
        self.error.is_none() && self.achieved <= self.required
    }
}

impl fmt::Display for CheckResult {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let status = if self.passed() { "PASS" } else { "FAIL" };
        write!(
            f,
            "{status}  {:<44} {} {:.3e} (required <= {:.1e})  {:.2} s",
            self.name, self.metric, self.achieved, self.required, self.seconds
        )?;
        if let Some(e) = &self.error {
            write!(f, "  [{e}]")?;
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct ValidationOptions {
    /// Smaller Monte Carlo budgets and lattice sizes.
    pub quick: bool,
    /// Negates every `beta_h` coefficient before the identity check.
    /// Mutation hook: the suite must fail when this is set.
    pub flip_beta_sign: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Report {
    pub checks: Vec<CheckResult>,
}

impl Report {
    pub fn all_passed(&self) -> bool {
        self.checks.iter().all(CheckResult::passed)
    }

    pub fn failures(&self) -> impl Iterator<Item = &CheckResult> {
        self.checks.iter().filter(|c| !c.passed())
    }

    /// `Err(Error::Validation)` if any check failed.
    pub fn into_result(self) -> Result<Report> {
        let n = self.failures().count();
        if n == 0 {
            Ok(self)
        } else {
            Err(Error::Validation(n))
        }
    }
}

impl fmt::Display for Report {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for c in &self.checks {
            writeln!(f, "{c}")?;
        }
        let failed = self.failures().count();
        write!(f, "{} checks, {} failed", self.checks.len(), failed)
    }
}

struct Measure {
    metric: Metric,
    achieved: f64,
    required: f64,
}

fn rel(a: f64, b: f64) -> f64 {
    ((a - b) / b).abs()
}

fn z(est: McEstimate, reference: f64) -> f64 {
    (est.mean - reference).abs() / est.std_error
}

fn budget(opts: &ValidationOptions, quick: usize, full: usize) -> usize {
    if opts.quick {
        quick
    } else {
        full
    }
}

/// Euler-Maclaurin tail for `sum_{n >= N} (n + q)^(-s)`, written out
/// separately from the library's implementation.
fn zeta_direct(s: f64, q: f64) -> f64 {
    let n = 2000.0;
    let head: f64 = (0..2000).map(|i| (i as f64 + q).powf(-s)).sum();
    let a = n + q;
    head + a.powf(1.0 - s) / (s - 1.0) + 0.5 * a.powf(-s) + s * a.powf(-s - 1.0) / 12.0
        - s * (s + 1.0) * (s + 2.0) * a.powf(-s - 3.0) / 720.0
}

fn check_zeta(_: &ValidationOptions) -> Result<Measure> {
    let err = rel(riemann_zeta(3.5)?, zeta_direct(3.5, 1.0))
        .max(rel(hurwitz_zeta(3.5, 1.0 / 3.0)?, zeta_direct(3.5, 1.0 / 3.0)))
        .max(rel(hurwitz_zeta(2.25, 2.0 / 3.0)?, zeta_direct(2.25, 2.0 / 3.0)));
    Ok(Measure { metric: Metric::RelativeError, achieved: err, required: 1e-12 })
}

fn check_lattice(two_b: f64, required: f64, opts: &ValidationOptions) -> Result<Measure> {
    let rings = budget(opts, 200, 500);
    let sum = lattice_sum(1.0, rings, two_b, true)?;
    Ok(Measure {
        metric: Metric::RelativeError,
        achieved: rel(sum, 6.0 * omega(two_b / 2.0)?),
        required,
    })
}

fn check_dl_series(opts: &ValidationOptions) -> Result<Measure> {
    let net = MacroNetwork { rings: budget(opts, 60, 150), ..MacroNetwork::default() };
    let prop = PropagationParams::default();
    let mut worst: f64 = 0.0;
    for x in [0.1, 0.3, 0.5] {
        let series = isr_dl_dl(x, prop.b(), SeriesControl::default())?;
        let lattice = bruteforce_isr_dl_avg(x, &net, &prop, true)?;
        worst = worst.max(rel(series, lattice));
    }
    Ok(Measure { metric: Metric::RelativeError, achieved: worst, required: 1e-5 })
}

fn check_beta_identity(opts: &ValidationOptions) -> Result<Measure> {
    let sign = if opts.flip_beta_sign { -1.0 } else { 1.0 };
    let ctrl = SeriesControl::default();
    let mut worst: f64 = 0.0;
    for b in [1.25, 1.75] {
        for k in [0.0, 0.4, 1.0] {
            for rd in [0.3, 1.0 / 3f64.sqrt()] {
                let beta0 = sign * beta_h(0, b, k, rd, ctrl)?;
                worst = worst.max(rel(6.0 * rd.powf(2.0 * b * k) * beta0, a1(b, k, rd, ctrl)?));
            }
        }
    }
    Ok(Measure { metric: Metric::RelativeError, achieved: worst, required: 1e-10 })
}

fn check_ul_dl_series(opts: &ValidationOptions) -> Result<Measure> {
    let net = MacroNetwork { rings: 10, ..MacroNetwork::default() };
    let prop = PropagationParams { k: 0.4, ..PropagationParams::default() };
    let x = 0.3;
    let series = isr_ul_dl(
        x,
        prop.b(),
        prop.k,
        net.radius_ratio(),
        net.delta,
        prop.pstar_over_p(),
        SeriesControl::default(),
    )?;
    let n = budget(opts, 100_000, 1_000_000);
    let mc = bruteforce_isr_ul_dl(MobilePolar::new(x, 0.0), Azimuth::Uniform, &net, &prop, n, 11)?;
    Ok(Measure { metric: Metric::ZScore, achieved: z(mc, series), required: 3.0 })
}

fn check_a2(_: &ValidationOptions) -> Result<Measure> {
    let (delta, two_b, k): (f64, f64, f64) = (2.0, 3.5, 0.4);
    let prop = PropagationParams { two_b, k, ..PropagationParams::default() };
    let p_over_pstar = 1.0 / prop.pstar_over_p();
    // lattice_sum is the dimensionless sum of (delta / |s|)^(2b)
    let direct = p_over_pstar * delta.powf(-two_b * k) * lattice_sum(delta, 300, two_b, true)?;
    Ok(Measure {
        metric: Metric::RelativeError,
        achieved: rel(a2(two_b / 2.0, k, p_over_pstar, delta)?, direct),
        required: 1e-6,
    })
}

fn macro_model(alpha_d: f64) -> Result<MacroModel> {
    MacroModel::new(
        MacroNetwork::default(),
        PropagationParams::default(),
        TddMix::new(alpha_d)?,
        None,
        SeriesControl::default(),
    )
}

fn check_inv_u(_: &ValidationOptions) -> Result<Measure> {
    let m = macro_model(0.5)?;
    let mut worst: f64 = 0.0;
    for i in 1..=10 {
        let x = 0.05 * i as f64;
        worst = worst.max(rel(m.inv_u(m.u(x)?)?, x));
    }
    Ok(Measure { metric: Metric::RelativeError, achieved: worst, required: 1e-12 })
}

fn check_inv_d_bisection(_: &ValidationOptions) -> Result<Measure> {
    let m = macro_model(0.5)?;
    let mut worst: f64 = 0.0;
    for i in 1..=10 {
        let y = m.d(0.05 * i as f64)?;
        worst = worst.max(rel(m.d(m.inv_d(y, InverseMethod::Bisection)?)?, y));
    }
    Ok(Measure { metric: Metric::RelativeError, achieved: worst, required: 1e-10 })
}

fn check_inv_d_series(_: &ValidationOptions) -> Result<Measure> {
    let mut worst: f64 = 0.0;
    for alpha_d in [1.0, 0.5] {
        let m = macro_model(alpha_d)?;
        for i in 1..=8 {
            let y = m.d(0.05 * i as f64)?;
            let exact = m.inv_d(y, InverseMethod::Bisection)?;
            worst = worst.max(rel(m.inv_d(y, InverseMethod::Series)?, exact));
        }
    }
    Ok(Measure { metric: Metric::RelativeError, achieved: worst, required: 0.02 })
}

fn check_macro_coverage(opts: &ValidationOptions) -> Result<Measure> {
    let net = MacroNetwork { rings: 30, ..MacroNetwork::default() };
    let prop = PropagationParams::default();
    let mix = TddMix::static_dl();
    let grid: Vec<f64> = (-15..=15).map(|g| 2.0 * g as f64).collect();
    let analytic = MacroModel::new(net, prop, mix, None, SeriesControl::default())?.coverage_curve(
        &grid,
        Direction::Dl,
        InverseMethod::Bisection,
    )?;
    let mc = mc_coverage_macro(&net, &prop, mix, Direction::Dl, &grid, budget(opts, 5_000, 20_000), 12)?;
    Ok(Measure { metric: Metric::SupGap, achieved: analytic.sup_gap(&mc), required: 0.03 })
}

fn ppp_scenario() -> SmallCellScenario {
    let mut s = SmallCellScenario { mix: TddMix { alpha_d: 0.5 }, ..SmallCellScenario::default() };
    s.prop.k = 0.4;
    s
}

fn check_laplace_direct(_: &ValidationOptions) -> Result<Measure> {
    let s = ppp_scenario();
    let q = QuadratureControl::default();
    let mut worst: f64 = 0.0;
    for dir in [Direction::Dl, Direction::Ul] {
        let v = 0.1f64.powf(3.5) / s.p_eff();
        worst = worst.max(rel(laplace(dir, v, 0.1, &s, q)?, laplace_direct(dir, v, 0.1, &s, q)?));
    }
    Ok(Measure { metric: Metric::RelativeError, achieved: worst, required: 1e-4 })
}

/// Monte Carlo scenario with a window wide enough that truncating the
/// interference field leaves a bias well inside one standard error.
fn wide_window() -> SmallCellScenario {
    SmallCellScenario { window_radius: 22.0 / 10f64.sqrt(), ..ppp_scenario() }
}

fn check_laplace_mc(opts: &ValidationOptions) -> Result<Measure> {
    let s = wide_window();
    let q = QuadratureControl::default();
    let n = budget(opts, 20_000, 100_000);
    let mut worst: f64 = 0.0;
    for dir in [Direction::Dl, Direction::Ul] {
        let (r, v) = (0.15, 1.0 / (s.p_eff() * 0.15f64.powf(-3.5)));
        worst = worst.max(z(mc_laplace(&s, dir, v, r, n, 13)?, laplace(dir, v, r, &s, q)?));
    }
    Ok(Measure { metric: Metric::ZScore, achieved: worst, required: 3.0 })
}

fn check_ppp_closed_form(_: &ValidationOptions) -> Result<Measure> {
    let mut s = SmallCellScenario { mix: TddMix::static_dl(), cell_offset: CellOffset::None, ..Default::default() };
    s.prop.two_b = 4.0;
    s.prop.p_noise_dbm = f64::NEG_INFINITY;
    let mut worst: f64 = 0.0;
    for gamma_db in [-5.0, 0.0, 5.0, 10.0] {
        let g: f64 = db_to_linear(gamma_db);
        let exact = 1.0 / (1.0 + g.sqrt() * (std::f64::consts::FRAC_PI_2 - (1.0 / g.sqrt()).atan()));
        let got = coverage_ppp_dl(gamma_db, &s, QuadratureControl::default())?;
        worst = worst.max((got - exact).abs());
    }
    Ok(Measure { metric: Metric::AbsoluteError, achieved: worst, required: 1e-4 })
}

fn check_ppp_coverage(opts: &ValidationOptions) -> Result<Measure> {
    let s = ppp_scenario();
    let grid: Vec<f64> = (-10..=15).map(|g| 2.0 * g as f64).collect();
    let n = budget(opts, 20_000, 100_000);
    let mut worst: f64 = 0.0;
    for dir in [Direction::Dl, Direction::Ul] {
        let analytic: CoverageCurve = coverage_curve_ppp(&grid, dir, &s, QuadratureControl::default())?;
        worst = worst.max(analytic.sup_gap(&mc_coverage_ppp(&s, dir, &grid, n, 14)?));
    }
    Ok(Measure { metric: Metric::SupGap, achieved: worst, required: 0.05 })
}

fn check_ase(opts: &ValidationOptions) -> Result<Measure> {
    let s = wide_window();
    let n = budget(opts, 20_000, 100_000);
    let mut worst: f64 = 0.0;
    for dir in [Direction::Dl, Direction::Ul] {
        worst = worst.max(z(mc_ase(&s, dir, n, 15)?, ase(&s, dir, QuadratureControl::default())?));
    }
    Ok(Measure { metric: Metric::ZScore, achieved: worst, required: 3.0 })
}

type CheckFn = fn(&ValidationOptions) -> Result<Measure>;

const CHECKS: &[(&str, CheckFn)] = &[
    ("zeta functions vs direct summation", check_zeta),
    ("lattice sum vs 6 omega(b), 2b = 3.5", |o| check_lattice(3.5, 1e-6, o)),
    ("lattice sum vs 6 omega(b), 2b = 2.5", |o| check_lattice(2.5, 1e-3, o)),
    ("DL->DL series vs azimuth-averaged lattice", check_dl_series),
    ("6 (R/delta)^(2bk) beta_0 = A1", check_beta_identity),
    ("UL->DL series vs Monte Carlo", check_ul_dl_series),
    ("A2 vs lattice sum", check_a2),
    ("inv_u(u(x)) = x", check_inv_u),
    ("d(inv_d(y)) = y, bisection", check_inv_d_bisection),
    ("series inv_d vs bisection, x <= 0.4", check_inv_d_series),
    ("macro coverage vs Monte Carlo, static DL", check_macro_coverage),
    ("PPP Laplace vs direct quadrature", check_laplace_direct),
    ("PPP Laplace vs Monte Carlo", check_laplace_mc),
    ("PPP coverage vs closed form, 2b = 4", check_ppp_closed_form),
    ("PPP coverage vs Monte Carlo", check_ppp_coverage),
    ("ASE quadrature vs Monte Carlo", check_ase),
];

/// Names of the checks in the order they run.
pub fn check_names() -> Vec<&'static str> {
    CHECKS.iter().map(|c| c.0).collect()
}

/// Runs the whole suite. Failing checks are reported, not returned as
/// errors; use [`Report::into_result`] to turn failures into an error.
pub fn run_suite(opts: ValidationOptions) -> Report {
    run_selected(opts, |_| true)
}

/// Runs the checks whose name satisfies `select`.
pub fn run_selected(opts: ValidationOptions, select: impl Fn(&str) -> bool) -> Report {
    let checks = CHECKS
        .iter()
        .filter(|(name, _)| select(name))
        .map(|(name, check)| {
            let t = Instant::now();
            let outcome = check(&opts);
            let seconds = t.elapsed().as_secs_f64();
            match outcome {
                Ok(m) => CheckResult {
                    name,
                    metric: m.metric,
                    achieved: m.achieved,
                    required: m.required,
                    seconds,
                    error: None,
                },
                Err(e) => CheckResult {
                    name,
                    metric: Metric::AbsoluteError,
                    achieved: f64::NAN,
                    required: 0.0,
                    seconds,
                    error: Some(e.to_string()),
                },
            }
        })
        .collect();
    Report { checks }
}
