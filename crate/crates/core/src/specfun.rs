//! Special functions behind the hexagonal lattice series: Gamma, Riemann and
//! Hurwitz zeta, the lattice constant `omega`, and the log-normal shadowing
//! mean.

use std::f64::consts::LN_10;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Truncation rule for the infinite series used throughout the crate.
///
/// A series stops once `|term| < rel_tol * |partial sum|` holds for three
/// consecutive terms. Reaching `max_terms` first is an error.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SeriesControl {
    pub rel_tol: f64,
    pub max_terms: usize,
}

impl Default for SeriesControl {
    fn default() -> Self {
        SeriesControl {
            rel_tol: 1e-10,
            max_terms: 200,
        }
    }
}

impl SeriesControl {
    pub fn new(rel_tol: f64, max_terms: usize) -> Result<Self> {
        let ctrl = SeriesControl { rel_tol, max_terms };
        ctrl.validate()?;
        Ok(ctrl)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.rel_tol > 0.0) || self.max_terms == 0 {
            return Err(Error::domain(
                "SeriesControl",
                format!("need rel_tol > 0 and max_terms >= 1, got {self:?}"),
            ));
        }
        Ok(())
    }

    /// Sums `term(0) + term(1) + ...` under this rule.
    pub fn sum(&self, mut term: impl FnMut(usize) -> f64) -> Result<f64> {
        let mut sum = 0.0;
        let mut small = 0;
        let mut last = f64::NAN;
        for n in 0..self.max_terms {
            last = term(n);
            sum += last;
            if !sum.is_finite() {
                break;
            }
            if last.abs() < self.rel_tol * sum.abs() || (last == 0.0 && sum == 0.0) {
                small += 1;
                if small == 3 {
                    return Ok(sum);
                }
            } else {
                small = 0;
            }
        }
        Err(Error::Truncation {
            terms: self.max_terms,
            partial: sum,
            last_term: last,
        })
    }
}

/// Log-normal shadowing of the interferer-to-serving ratio.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ShadowingSpec {
    /// Standard deviation of the ratio variable, dB.
    pub sigma_tilde_db: f64,
}

impl ShadowingSpec {
    pub fn new(sigma_tilde_db: f64) -> Result<Self> {
        if !(sigma_tilde_db >= 0.0) {
            return Err(Error::domain(
                "ShadowingSpec",
                format!("sigma must be >= 0, got {sigma_tilde_db}"),
            ));
        }
        Ok(ShadowingSpec { sigma_tilde_db })
    }
}

/// Euler Gamma function for positive real arguments.
pub fn gamma(x: f64) -> Result<f64> {
    if !(x > 0.0) || !x.is_finite() {
        return Err(Error::domain("gamma", format!("need x > 0, got {x}")));
    }
    Ok(statrs::function::gamma::gamma(x))
}

/// Natural log of Gamma for positive real arguments.
pub fn ln_gamma(x: f64) -> Result<f64> {
    if !(x > 0.0) || !x.is_finite() {
        return Err(Error::domain("ln_gamma", format!("need x > 0, got {x}")));
    }
    Ok(statrs::function::gamma::ln_gamma(x))
}

// B_2, B_4, ..., B_20
const BERNOULLI_EVEN: [f64; 10] = [
    1.0 / 6.0,
    -1.0 / 30.0,
    1.0 / 42.0,
    -1.0 / 30.0,
    5.0 / 66.0,
    -691.0 / 2730.0,
    7.0 / 6.0,
    -3617.0 / 510.0,
    43867.0 / 798.0,
    -174611.0 / 330.0,
];

/// Hurwitz zeta `sum_{n >= 0} (n + q)^(-s)` for real `s > 1`, `q > 0`.
///
/// Direct summation of the leading terms followed by an Euler-Maclaurin
/// correction; the number of leading terms grows until the last correction
/// term is below double precision relative to the sum.
pub fn hurwitz_zeta(s: f64, q: f64) -> Result<f64> {
    if !(s > 1.0) || !s.is_finite() {
        return Err(Error::domain("hurwitz_zeta", format!("need s > 1, got {s}")));
    }
    if !(q > 0.0) || !q.is_finite() {
        return Err(Error::domain("hurwitz_zeta", format!("need q > 0, got {q}")));
    }
    let mut n_direct = 9usize;
    loop {
        let (value, last) = euler_maclaurin(s, q, n_direct);
        if last.abs() <= 1e-16 * value.abs() || n_direct > 1 << 16 {
            return Ok(value);
        }
        n_direct *= 2;
    }
}

fn euler_maclaurin(s: f64, q: f64, n_direct: usize) -> (f64, f64) {
    let mut sum = 0.0;
    // smallest terms first
    for n in (0..n_direct).rev() {
        sum += (n as f64 + q).powf(-s);
    }
    let a = n_direct as f64 + q;
    let a_s = a.powf(-s);
    let mut tail = a * a_s / (s - 1.0) + 0.5 * a_s;
    // term_j = s (s+1) ... (s+2j-2) a^(-s-2j+1) / (2j)!
    let mut pochhammer_pow = s * a_s / a;
    let mut factorial = 2.0;
    let mut last = 0.0;
    for (j, b2j) in BERNOULLI_EVEN.iter().enumerate() {
        let j = j as f64 + 1.0;
        last = b2j * pochhammer_pow / factorial;
        tail += last;
        pochhammer_pow *= (s + 2.0 * j - 1.0) * (s + 2.0 * j) / (a * a);
        factorial *= (2.0 * j + 1.0) * (2.0 * j + 2.0);
    }
    (sum + tail, last)
}

/// Riemann zeta for real `s > 1`.
pub fn riemann_zeta(s: f64) -> Result<f64> {
    if !(s > 1.0) {
        return Err(Error::domain("riemann_zeta", format!("need s > 1, got {s}")));
    }
    hurwitz_zeta(s, 1.0)
}

/// Above this exponent `3^-z` times the Hurwitz difference is evaluated as
/// the equivalent alternating Dirichlet series, which cannot overflow.
const OMEGA_DIRECT_ABOVE: f64 = 20.0;

/// Hexagonal lattice constant `3^-z zeta(z) (zeta(z, 1/3) - zeta(z, 2/3))`.
///
/// `6 omega(z)` is the lattice sum `sum |s / delta|^(-2z)` over all non-zero
/// sites of the hexagonal lattice with spacing `delta`.
pub fn omega(z: f64) -> Result<f64> {
    if !(z > 1.0) || !z.is_finite() {
        return Err(Error::domain(
            "omega",
            format!("lattice sum diverges for z <= 1, got {z}"),
        ));
    }
    let zeta = riemann_zeta(z)?;
    let l = if z <= OMEGA_DIRECT_ABOVE {
        3f64.powf(-z) * (hurwitz_zeta(z, 1.0 / 3.0)? - hurwitz_zeta(z, 2.0 / 3.0)?)
    } else {
        // sum over n of (3n+1)^-z - (3n+2)^-z
        let mut acc = 0.0;
        for n in 0..64 {
            let t = (3.0 * n as f64 + 1.0).powf(-z) - (3.0 * n as f64 + 2.0).powf(-z);
            acc += t;
            if t < 1e-18 * acc {
                break;
            }
        }
        acc
    };
    Ok(zeta * l)
}

/// Mean of `10^(Y/10)` for `Y ~ N(0, sigma^2)` in dB, the factor that
/// log-normal shadowing applies to a mean interference-to-signal ratio.
pub fn shadowing_mean_factor(spec: ShadowingSpec) -> f64 {
    let s = spec.sigma_tilde_db * LN_10 / 10.0;
    (0.5 * s * s).exp()
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use std::f64::consts::PI;

    #[test]
    fn gamma_known_values() {
        assert_relative_eq!(gamma(1.0).unwrap(), 1.0, max_relative = 1e-14);
        assert_relative_eq!(gamma(5.0).unwrap(), 24.0, max_relative = 1e-13);
        assert_relative_eq!(gamma(0.5).unwrap(), PI.sqrt(), max_relative = 1e-13);
        assert!(gamma(0.0).is_err());
        assert!(gamma(-1.5).is_err());
    }

    #[test]
    fn gamma_recurrence() {
        for x in [0.5, 1.25, 1.75, 3.2] {
            let lhs = gamma(x + 1.0).unwrap();
            let rhs = x * gamma(x).unwrap();
            assert_relative_eq!(lhs, rhs, max_relative = 1e-12);
        }
    }

    #[test]
    fn ln_gamma_matches_gamma_and_stirling_branch() {
        for x in [0.3, 1.75, 7.5, 14.9, 15.0, 40.0] {
            let direct = gamma(x).unwrap().ln();
            assert_relative_eq!(ln_gamma(x).unwrap(), direct, max_relative = 1e-13, epsilon = 1e-14);
        }
        // ln 100! = ln Gamma(101)
        let ln_fact: f64 = (1..=100).map(|k| (k as f64).ln()).sum();
        assert_relative_eq!(ln_gamma(101.0).unwrap(), ln_fact, max_relative = 1e-14);
    }

    #[test]
    fn zeta_known_values() {
        assert_relative_eq!(riemann_zeta(2.0).unwrap(), PI * PI / 6.0, max_relative = 1e-13);
        assert_relative_eq!(riemann_zeta(4.0).unwrap(), PI.powi(4) / 90.0, max_relative = 1e-13);
        let z50 = riemann_zeta(50.0).unwrap();
        assert!(z50 > 1.0 && z50 <= 1.0 + 1e-14);
        assert!(riemann_zeta(1.0).is_err());
        assert!(riemann_zeta(0.5).is_err());
    }

    #[test]
    fn hurwitz_identities() {
        for s in [2.0, 3.5] {
            assert_relative_eq!(
                hurwitz_zeta(s, 1.0).unwrap(),
                riemann_zeta(s).unwrap(),
                max_relative = 1e-15
            );
        }
        assert_relative_eq!(hurwitz_zeta(2.0, 0.5).unwrap(), PI * PI / 2.0, max_relative = 1e-13);
        assert!(hurwitz_zeta(2.0, 0.0).is_err());
        assert!(hurwitz_zeta(1.0, 0.5).is_err());
    }

    /// Brute-force Dirichlet sum with the integral tail bracketed on both
    /// sides; the midpoint is accurate to well below 1e-12 at this length.
    fn dirichlet_oracle(s: f64, q: f64) -> f64 {
        let n = 200_000usize;
        let head: f64 = (0..n).rev().map(|k| (k as f64 + q).powf(-s)).sum();
        let a = n as f64 + q;
        let tail_upper = a.powf(1.0 - s) / (s - 1.0) + a.powf(-s);
        let tail_lower = a.powf(1.0 - s) / (s - 1.0);
        head + 0.5 * (tail_upper + tail_lower)
    }

    #[test]
    fn zeta_against_brute_force() {
        let z = riemann_zeta(3.5).unwrap();
        assert!((z - dirichlet_oracle(3.5, 1.0)).abs() < 1e-10);
        let h = hurwitz_zeta(3.5, 1.0 / 3.0).unwrap();
        assert!((h - dirichlet_oracle(3.5, 1.0 / 3.0)).abs() < 1e-10);
    }

    #[test]
    fn hurwitz_difference_positive() {
        for s in [1.05, 1.25, 1.75, 3.0, 10.0, 19.5] {
            let d = hurwitz_zeta(s, 1.0 / 3.0).unwrap() - hurwitz_zeta(s, 2.0 / 3.0).unwrap();
            assert!(d > 0.0, "s = {s}");
        }
    }

    #[test]
    fn omega_limits_and_branch_continuity() {
        let w = omega(40.0).unwrap();
        assert!((w - 1.0).abs() < 1e-9);
        let below = omega(OMEGA_DIRECT_ABOVE).unwrap();
        let above = omega(OMEGA_DIRECT_ABOVE + 1e-12).unwrap();
        assert_relative_eq!(below, above, max_relative = 1e-12);
        assert!(omega(1.0).is_err());
        for z in [1.01, 1.25, 1.75, 2.5, 5.0] {
            assert!(omega(z).unwrap() > 0.0);
        }
    }

    #[test]
    fn shadowing_closed_form() {
        assert_eq!(shadowing_mean_factor(ShadowingSpec::new(0.0).unwrap()), 1.0);
        let f6 = shadowing_mean_factor(ShadowingSpec::new(6.0).unwrap());
        assert!((f6 - 2.5971).abs() < 5e-4, "{f6}");
        assert!(ShadowingSpec::new(-1.0).is_err());
    }

    #[test]
    fn shadowing_against_sampled_mean() {
        use rand::SeedableRng;
        use rand_distr::{Distribution, Normal};
        let sigma = 8.0;
        let normal = Normal::new(0.0, sigma).unwrap();
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(7);
        let n = 1_000_000;
        let mut sum = 0.0;
        let mut sum2 = 0.0;
        for _ in 0..n {
            let v = 10f64.powf(normal.sample(&mut rng) / 10.0);
            sum += v;
            sum2 += v * v;
        }
        let mean = sum / n as f64;
        let se = ((sum2 / n as f64 - mean * mean) / n as f64).sqrt();
        let exact = shadowing_mean_factor(ShadowingSpec::new(sigma).unwrap());
        assert!((mean - exact).abs() < 3.0 * se, "mean {mean} exact {exact} se {se}");
    }

    #[test]
    fn series_control_rules() {
        let ctrl = SeriesControl::default();
        let geo = ctrl.sum(|n| 0.5f64.powi(n as i32)).unwrap();
        assert_relative_eq!(geo, 2.0, max_relative = 1e-9);
        let err = ctrl.sum(|n| 1.0 / (n as f64 + 1.0)).unwrap_err();
        assert!(matches!(err, Error::Truncation { terms: 200, .. }));
        assert!(SeriesControl::new(0.0, 10).is_err());
        assert!(SeriesControl::new(1e-8, 0).is_err());
    }

    proptest::proptest! {
        #[test]
        fn shadowing_monotone(a in 0.0f64..20.0, b in 0.0f64..20.0) {
            let (lo, hi) = if a < b { (a, b) } else { (b, a) };
            let f_lo = shadowing_mean_factor(ShadowingSpec { sigma_tilde_db: lo });
            let f_hi = shadowing_mean_factor(ShadowingSpec { sigma_tilde_db: hi });
            proptest::prop_assert!(f_lo <= f_hi);
        }
    }
}
