//! Special functions and quadrature used by the analytic engine.
//!
//! Everything here is a pure function of its arguments. `erf`/`erfc` and the
//! complete gamma function are delegated to `libm`; the Lambert W, the upper
//! incomplete gamma for arbitrary real order, adaptive Gauss-Kronrod
//! quadrature and generalized Gauss-Laguerre rules live in this module.

use std::cmp::Ordering;
use std::collections::BinaryHeap;
use std::f64::consts::{E, FRAC_1_SQRT_2};

use thiserror::Error;

/// Euler-Mascheroni constant.
const EULER_GAMMA: f64 = 0.577_215_664_901_532_9;

/// Smallest representable magnitude used by the Lentz algorithm.
const TINY: f64 = 1e-300;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SpecFunError {
    #[error("{func}: argument {arg} outside the domain")]
    Domain { func: &'static str, arg: f64 },
    #[error(
        "quadrature did not converge after {subdivisions} subdivisions \
         (estimate {estimate:e}, error bound {error_bound:e})"
    )]
    NonConvergence {
        estimate: f64,
        error_bound: f64,
        subdivisions: usize,
    },
}

pub type Result<T> = std::result::Result<T, SpecFunError>;

/// Principal branch of the Lambert W function, `w * exp(w) = x` for `x >= -1/e`.
pub fn lambert_w0(x: f64) -> Result<f64> {
    let branch = -1.0 / E;
    if x.is_nan() || x < branch {
        return Err(SpecFunError::Domain {
            func: "lambert_w0",
            arg: x,
        });
    }
    if x == 0.0 {
        return Ok(0.0);
    }
    if x == branch {
        return Ok(-1.0);
    }
    if x.is_infinite() {
        return Ok(f64::INFINITY);
    }

    let mut w = if x < -0.25 {
        // series about the branch point
        let p = (2.0 * (E * x + 1.0)).max(0.0).sqrt();
        -1.0 + p - p * p / 3.0 + 11.0 / 72.0 * p * p * p
    } else if x < 3.0 {
        // ln(1 + x) tracks W0 to within a factor of two on this range
        (x.ln_1p()).max(-0.5)
    } else {
        let l1 = x.ln();
        let l2 = l1.ln();
        l1 - l2 + l2 / l1
    };

    for _ in 0..64 {
        let ew = w.exp();
        let f = w * ew - x;
        let wp1 = w + 1.0;
        if wp1.abs() < 1e-300 {
            break;
        }
        // Halley step
        let denom = ew * wp1 - (w + 2.0) * f / (2.0 * wp1);
        let dw = f / denom;
        w -= dw;
        if dw.abs() <= 4.0 * f64::EPSILON * (1.0 + w.abs()) {
            break;
        }
    }
    Ok(w)
}

pub fn erf(x: f64) -> f64 {
    libm::erf(x)
}

pub fn erfc(x: f64) -> f64 {
    libm::erfc(x)
}

/// Gaussian tail probability `Q(z) = P(N(0,1) > z)`.
pub fn q_function(z: f64) -> f64 {
    0.5 * erfc(z * FRAC_1_SQRT_2)
}

/// Complete gamma function.
pub fn gamma(a: f64) -> f64 {
    libm::tgamma(a)
}

/// `ln |Gamma(a)|`.
pub fn ln_gamma(a: f64) -> f64 {
    libm::lgamma(a)
}

/// Upper incomplete gamma `Gamma(a, x) = int_x^inf t^(a-1) e^(-t) dt`, any
/// real `a`, `x > 0`.
///
/// Non-positive orders go through the continued fraction when `x >= 1` and
/// otherwise through the recurrence
/// `Gamma(a, x) = (Gamma(a + 1, x) - x^a e^(-x)) / a`
/// started from an order in `[0, 1)`.
pub fn upper_incomplete_gamma(a: f64, x: f64) -> Result<f64> {
    if !(x > 0.0) || a.is_nan() {
        return Err(SpecFunError::Domain {
            func: "upper_incomplete_gamma",
            arg: x,
        });
    }
    if x.is_infinite() {
        return Ok(0.0);
    }
    if a > 0.0 {
        return Ok(upper_gamma_positive(a, x));
    }
    if x >= 1.0 {
        return Ok(upper_gamma_cf(a, x));
    }

    let steps = (-a).ceil();
    let a0 = a + steps;
    let mut value = if a0 == 0.0 {
        exp_integral_e1(x)
    } else {
        upper_gamma_positive(a0, x)
    };
    let ln_x = x.ln();
    let mut order = a0;
    for _ in 0..steps as usize {
        order -= 1.0;
        value = (value - (order * ln_x - x).exp()) / order;
    }
    Ok(value)
}

fn upper_gamma_positive(a: f64, x: f64) -> f64 {
    if x < a + 1.0 {
        let lower = lower_gamma_series(a, x);
        gamma(a) - lower
    } else {
        upper_gamma_cf(a, x)
    }
}

/// `gamma(a, x)` by its power series, valid for `a > 0`.
fn lower_gamma_series(a: f64, x: f64) -> f64 {
    let mut ap = a;
    let mut term = 1.0 / a;
    let mut sum = term;
    for _ in 0..10_000 {
        ap += 1.0;
        term *= x / ap;
        sum += term;
        if term.abs() < sum.abs() * 1e-17 {
            break;
        }
    }
    sum * (a * x.ln() - x).exp()
}

/// Legendre continued fraction for `Gamma(a, x)` evaluated by modified Lentz.
fn upper_gamma_cf(a: f64, x: f64) -> f64 {
    let mut b = x + 1.0 - a;
    let mut c = 1.0 / TINY;
    let mut d = 1.0 / b;
    let mut h = d;
    for i in 1..100_000 {
        let i = i as f64;
        let an = -i * (i - a);
        b += 2.0;
        d = an * d + b;
        if d.abs() < TINY {
            d = TINY;
        }
        c = b + an / c;
        if c.abs() < TINY {
            c = TINY;
        }
        d = 1.0 / d;
        let del = d * c;
        h *= del;
        if (del - 1.0).abs() < 1e-16 {
            break;
        }
    }
    (a * x.ln() - x).exp() * h
}

/// Exponential integral `E1(x) = Gamma(0, x)`.
fn exp_integral_e1(x: f64) -> f64 {
    if x >= 1.0 {
        return upper_gamma_cf(0.0, x);
    }
    let mut sum = 0.0;
    let mut term = 1.0;
    for k in 1..200 {
        let k = k as f64;
        term *= -x / k;
        let contrib = -term / k;
        sum += contrib;
        if contrib.abs() < 1e-17 * sum.abs().max(1e-300) {
            break;
        }
    }
    -EULER_GAMMA - x.ln() + sum
}

/// Tolerances and work limit for [`integrate`].
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct QuadratureSpec {
    pub max_subdivisions: usize,
    pub abs_tol: f64,
    pub rel_tol: f64,
}

impl Default for QuadratureSpec {
    fn default() -> Self {
        Self {
            max_subdivisions: 500,
            abs_tol: 1e-12,
            rel_tol: 1e-10,
        }
    }
}

impl QuadratureSpec {
    pub fn new(max_subdivisions: usize, abs_tol: f64, rel_tol: f64) -> Result<Self> {
        if max_subdivisions == 0 {
            return Err(SpecFunError::Domain {
                func: "QuadratureSpec::max_subdivisions",
                arg: 0.0,
            });
        }
        if !(abs_tol > 0.0) {
            return Err(SpecFunError::Domain {
                func: "QuadratureSpec::abs_tol",
                arg: abs_tol,
            });
        }
        if !(rel_tol > 0.0) {
            return Err(SpecFunError::Domain {
                func: "QuadratureSpec::rel_tol",
                arg: rel_tol,
            });
        }
        Ok(Self {
            max_subdivisions,
            abs_tol,
            rel_tol,
        })
    }
}

// 15-point Kronrod extension of the 7-point Gauss rule.
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

struct Segment {
    lo: f64,
    hi: f64,
    value: f64,
    error: f64,
}

impl PartialEq for Segment {
    fn eq(&self, other: &Self) -> bool {
        self.error.total_cmp(&other.error) == Ordering::Equal
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

fn gauss_kronrod<F: FnMut(f64) -> f64>(f: &mut F, lo: f64, hi: f64) -> Segment {
    let center = 0.5 * (lo + hi);
    let half = 0.5 * (hi - lo);
    let fc = f(center);
    let mut kronrod = fc * WGK[7];
    let mut gauss = fc * WG[3];
    for (j, (&x, &wk)) in XGK.iter().zip(WGK.iter()).take(7).enumerate() {
        let dx = half * x;
        let pair = f(center - dx) + f(center + dx);
        kronrod += wk * pair;
        if j % 2 == 1 {
            gauss += WG[j / 2] * pair;
        }
    }
    Segment {
        lo,
        hi,
        value: kronrod * half,
        error: ((kronrod - gauss) * half).abs(),
    }
}

/// Adaptive Gauss-Kronrod integration of `f` over `[lo, hi]`.
///
/// `hi` may be `f64::INFINITY`; `[lo, lo + 1]` is integrated directly and
/// the rest is mapped onto `(0, 1]` with `t = lo + 1 + (1 - u) / u`. Endpoints are never evaluated, so integrable
/// endpoint singularities are fine.
pub fn integrate<F: FnMut(f64) -> f64>(
    mut f: F,
    lo: f64,
    hi: f64,
    spec: &QuadratureSpec,
) -> Result<f64> {
    if lo.is_nan() || hi.is_nan() || lo.is_infinite() {
        return Err(SpecFunError::Domain {
            func: "integrate",
            arg: lo,
        });
    }
    if hi.is_infinite() {
        if hi < 0.0 {
            return Err(SpecFunError::Domain {
                func: "integrate",
                arg: hi,
            });
        }
        let split = lo + 1.0;
        let head = integrate_finite(&mut f, lo, split, spec)?;
        let g = |u: f64| {
            let t = split + (1.0 - u) / u;
            let v = f(t) / (u * u);
            if v.is_finite() {
                v
            } else {
                0.0
            }
        };
        return integrate_finite(g, 0.0, 1.0, spec).map(|tail| head + tail);
    }
    if hi == lo {
        return Ok(0.0);
    }
    if hi < lo {
        return integrate_finite(f, hi, lo, spec).map(|v| -v);
    }
    integrate_finite(f, lo, hi, spec)
}

fn integrate_finite<F: FnMut(f64) -> f64>(
    mut f: F,
    lo: f64,
    hi: f64,
    spec: &QuadratureSpec,
) -> Result<f64> {
    let first = gauss_kronrod(&mut f, lo, hi);
    let mut total = first.value;
    let mut total_err = first.error;
    let mut heap = BinaryHeap::new();
    heap.push(first);
    let mut subdivisions = 1;

    while total_err > spec.abs_tol.max(spec.rel_tol * total.abs()) {
        if subdivisions >= spec.max_subdivisions {
            return Err(SpecFunError::NonConvergence {
                estimate: total,
                error_bound: total_err,
                subdivisions,
            });
        }
        let Some(worst) = heap.pop() else { break };
        let mid = 0.5 * (worst.lo + worst.hi);
        if mid <= worst.lo || mid >= worst.hi {
            // interval exhausted at machine precision
            heap.push(Segment {
                error: 0.0,
                ..worst
            });
            total_err = heap.iter().map(|s| s.error).sum();
            if heap.iter().all(|s| s.error == 0.0) {
                break;
            }
            continue;
        }
        let left = gauss_kronrod(&mut f, worst.lo, mid);
        let right = gauss_kronrod(&mut f, mid, worst.hi);
        total += left.value + right.value - worst.value;
        total_err += left.error + right.error - worst.error;
        heap.push(left);
        heap.push(right);
        subdivisions += 1;
        if subdivisions % 64 == 0 {
            // refresh the running sums against drift
            total = heap.iter().map(|s| s.value).sum();
            total_err = heap.iter().map(|s| s.error).sum();
        }
    }
    Ok(heap.iter().map(|s| s.value).sum())
}

/// Generalized Gauss-Laguerre rule for the weight `x^alpha e^(-x)` on
/// `[0, inf)`, `alpha > -1`. Returns `(nodes, weights)`; the weights sum to
/// `Gamma(alpha + 1)`.
pub fn gauss_laguerre(n: usize, alpha: f64) -> Result<(Vec<f64>, Vec<f64>)> {
    if n == 0 {
        return Err(SpecFunError::Domain {
            func: "gauss_laguerre",
            arg: 0.0,
        });
    }
    if !(alpha > -1.0) {
        return Err(SpecFunError::Domain {
            func: "gauss_laguerre",
            arg: alpha,
        });
    }
    let nf = n as f64;
    let mut nodes = vec![0.0; n];
    let mut weights = vec![0.0; n];
    let mut z = 0.0;
    for i in 0..n {
        z = match i {
            0 => (1.0 + alpha) * (3.0 + 0.92 * alpha) / (1.0 + 2.4 * nf + 1.8 * alpha),
            1 => z + (15.0 + 6.25 * alpha) / (1.0 + 0.9 * alpha + 2.5 * nf),
            _ => {
                let ai = (i - 1) as f64;
                z + ((1.0 + 2.55 * ai) / (1.9 * ai) + 1.26 * ai * alpha / (1.0 + 3.5 * ai))
                    * (z - nodes[i - 2])
                    / (1.0 + 0.3 * alpha)
            }
        };
        let mut pp = 0.0;
        let mut p2 = 0.0;
        for _ in 0..100 {
            let mut p1 = 1.0;
            p2 = 0.0;
            for j in 1..=n {
                let jf = j as f64;
                let p3 = p2;
                p2 = p1;
                p1 = ((2.0 * jf - 1.0 + alpha - z) * p2 - (jf - 1.0 + alpha) * p3) / jf;
            }
            pp = (nf * p1 - (nf + alpha) * p2) / z;
            let z1 = z;
            z = z1 - p1 / pp;
            if (z - z1).abs() <= 1e-15 * z.abs().max(1.0) {
                break;
            }
        }
        nodes[i] = z;
        weights[i] = -(ln_gamma(alpha + nf) - ln_gamma(nf)).exp() / (pp * nf * p2);
    }
    Ok((nodes, weights))
}
