//! Globally adaptive Gauss-Kronrod (7/15) quadrature.

use std::cmp::Ordering;
use std::collections::BinaryHeap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Tolerances for one level of adaptive integration. The integral is accepted
/// once the summed error estimate is below `max(abs_tol, rel_tol * |I|)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct QuadTol {
    pub abs_tol: f64,
    pub rel_tol: f64,
    pub max_intervals: usize,
}

impl QuadTol {
    pub const fn new(abs_tol: f64, rel_tol: f64) -> Self {
        QuadTol {
            abs_tol,
            rel_tol,
            max_intervals: 400,
        }
    }
}

impl Default for QuadTol {
    fn default() -> Self {
        QuadTol::new(1e-8, 1e-8)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Quadrature {
    pub value: f64,
    pub abs_error: f64,
    pub intervals: usize,
}

const XGK: [f64; 8] = [
    0.991_455_371_120_812_6,
    0.949_107_912_342_758_5,
    0.864_864_423_359_769_1,
    0.741_531_185_599_394_4,
    0.586_087_235_467_691_1,
    0.405_845_151_377_397_2,
    0.207_784_955_007_898_5,
    0.0,
];
const WGK: [f64; 8] = [
    0.022_935_322_010_529_22,
    0.063_092_092_629_978_55,
    0.104_790_010_322_250_2,
    0.140_653_259_715_525_9,
    0.169_004_726_639_267_9,
    0.190_350_578_064_785_4,
    0.204_432_940_075_298_9,
    0.209_482_141_084_727_8,
];
const WG: [f64; 4] = [
    0.129_484_966_168_869_7,
    0.279_705_391_489_276_7,
    0.381_830_050_505_118_9,
    0.417_959_183_673_469_4,
];

fn gk15(f: &mut impl FnMut(f64) -> f64, a: f64, b: f64) -> (f64, f64) {
    let c = 0.5 * (a + b);
    let h = 0.5 * (b - a);
    let mut fv = [0.0; 15];
    fv[7] = f(c);
    for j in 0..7 {
        let dx = h * XGK[j];
        fv[j] = f(c - dx);
        fv[14 - j] = f(c + dx);
    }
    let weight = |i: usize| WGK[if i < 8 { i } else { 14 - i }];
    let mut kronrod = 0.0;
    let mut abs_sum = 0.0;
    for (i, v) in fv.iter().enumerate() {
        kronrod += weight(i) * v;
        abs_sum += weight(i) * v.abs();
    }
    let mut gauss = WG[3] * fv[7];
    for j in (1..7).step_by(2) {
        gauss += WG[j / 2] * (fv[j] + fv[14 - j]);
    }
    let mean = 0.5 * kronrod;
    let asc: f64 = fv.iter().enumerate().map(|(i, v)| weight(i) * (v - mean).abs()).sum::<f64>() * h;
    // error heuristic of QUADPACK's qk15
    let mut err = ((kronrod - gauss) * h).abs();
    if asc != 0.0 && err != 0.0 {
        err = asc * (200.0 * err / asc).powf(1.5).min(1.0);
    }
    let floor = 50.0 * f64::EPSILON * abs_sum * h;
    (kronrod * h, err.max(floor))
}

struct Segment {
    a: f64,
    b: f64,
    value: f64,
    error: f64,
}

impl PartialEq for Segment {
    fn eq(&self, other: &Self) -> bool {
        self.error == other.error
    }
}
impl Eq for Segment {}
impl PartialOrd for Segment {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for Segment {
    fn cmp(&self, other: &Self) -> Ordering {
        self.error.total_cmp(&other.error)
    }
}

/// Integrates `f` over the finite interval `[a, b]`.
pub fn integrate(mut f: impl FnMut(f64) -> f64, a: f64, b: f64, tol: QuadTol) -> Result<Quadrature> {
    if a == b {
        return Ok(Quadrature {
            value: 0.0,
            abs_error: 0.0,
            intervals: 0,
        });
    }
    let (v, e) = gk15(&mut f, a, b);
    let mut heap = BinaryHeap::new();
    heap.push(Segment { a, b, value: v, error: e });
    let mut total = v;
    let mut total_err = e;
    let mut n = 1;
    loop {
        if !total.is_finite() {
            return Err(Error::Integration {
                estimate: total,
                abs_error: total_err,
                intervals: n,
            });
        }
        if total_err <= tol.abs_tol.max(tol.rel_tol * total.abs()) {
            break;
        }
        if n >= tol.max_intervals {
            return Err(Error::Integration {
                estimate: total,
                abs_error: total_err,
                intervals: n,
            });
        }
        let worst = heap.pop().expect("heap never empty");
        let mid = 0.5 * (worst.a + worst.b);
        if mid <= worst.a || mid >= worst.b {
            // interval exhausted at machine precision, accept as is
            heap.push(worst);
            break;
        }
        let (lv, le) = gk15(&mut f, worst.a, mid);
        let (rv, re) = gk15(&mut f, mid, worst.b);
        total += lv + rv - worst.value;
        total_err += le + re - worst.error;
        heap.push(Segment { a: worst.a, b: mid, value: lv, error: le });
        heap.push(Segment { a: mid, b: worst.b, value: rv, error: re });
        n += 1;
    }
    // re-sum to shed accumulated rounding from the running totals
    let value = heap.iter().map(|s| s.value).sum();
    let abs_error = heap.iter().map(|s| s.error).sum();
    Ok(Quadrature { value, abs_error, intervals: n })
}

/// Integrates `f` over `[a, inf)` through `x = a + t / (1 - t)`.
pub fn integrate_to_infinity(mut f: impl FnMut(f64) -> f64, a: f64, tol: QuadTol) -> Result<Quadrature> {
    integrate(
        |t| {
            let one_minus = 1.0 - t;
            let x = a + t / one_minus;
            let v = f(x) / (one_minus * one_minus);
            if v.is_finite() {
                v
            } else {
                0.0
            }
        },
        0.0,
        1.0,
        tol,
    )
}

/// [`integrate`] for an integrand that can fail; the first failure aborts
/// the remaining evaluations and is returned.
pub fn try_integrate(
    mut f: impl FnMut(f64) -> Result<f64>,
    a: f64,
    b: f64,
    tol: QuadTol,
) -> Result<f64> {
    let mut failure = None;
    let q = integrate(
        |x| {
            if failure.is_some() {
                return 0.0;
            }
            f(x).unwrap_or_else(|e| {
                failure = Some(e);
                0.0
            })
        },
        a,
        b,
        tol,
    );
    match failure {
        Some(e) => Err(e),
        None => q.map(|q| q.value),
    }
}

/// [`integrate_to_infinity`] for an integrand that can fail.
pub fn try_integrate_to_infinity(
    mut f: impl FnMut(f64) -> Result<f64>,
    a: f64,
    tol: QuadTol,
) -> Result<f64> {
    let mut failure = None;
    let q = integrate_to_infinity(
        |x| {
            if failure.is_some() {
                return 0.0;
            }
            f(x).unwrap_or_else(|e| {
                failure = Some(e);
                0.0
            })
        },
        a,
        tol,
    );
    match failure {
        Some(e) => Err(e),
        None => q.map(|q| q.value),
    }
}
