//! Infinite-N references: the picket-fence branch function, its resultant,
//! the power-law compensation classes and the large-N secular integral.

use std::f64::consts::PI;

use num_bigint::BigInt;
use num_complex::Complex64;
use num_rational::BigRational;
use num_traits::{ToPrimitive, Zero};
use serde::Serialize;

use crate::error::{Error, Result};
use crate::model::CouplingParameter;

const I: Complex64 = Complex64 { re: 0.0, im: 1.0 };
const ONE: Complex64 = Complex64 { re: 1.0, im: 0.0 };

/// Default relative tolerance of [`secular_integral`].
pub const INTEGRAL_TOL: f64 = 1e-12;
const BRANCH_POINT_TOL: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Compensation {
    Overcompensated,
    Compensated,
    Undercompensated,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum CriticalCoupling {
    Zero,
    Finite,
    Infinite,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CompensationClass {
    pub class: Compensation,
    pub predicted_lambda_c: CriticalCoupling,
    /// `2(1 + r)/t`.
    pub exponent: f64,
}

/// Classifies `(r, t)` by comparing `2(1 + r)` with `t` exactly on the
/// binary values of the arguments.
pub fn classify_compensation(r: f64, t: f64) -> Result<CompensationClass> {
    let (Some(rq), Some(tq)) = (BigRational::from_float(r), BigRational::from_float(t)) else {
        return Err(Error::InvalidSpec("exponents must be finite".into()));
    };
    classify_compensation_exact(&rq, &tq)
}

/// As [`classify_compensation`] for exact rational exponents.
pub fn classify_compensation_exact(r: &BigRational, t: &BigRational) -> Result<CompensationClass> {
    let one = BigRational::from_integer(BigInt::from(1));
    let two = BigRational::from_integer(BigInt::from(2));
    if t <= &(r + &one) {
        return Err(Error::DivergentModel {
            r: r.to_f64().unwrap_or(f64::NAN),
            t: t.to_f64().unwrap_or(f64::NAN),
        });
    }
    let lhs = (r + &one) * &two;
    let (class, predicted_lambda_c) = match lhs.cmp(t) {
        std::cmp::Ordering::Greater => (Compensation::Overcompensated, CriticalCoupling::Zero),
        std::cmp::Ordering::Equal => (Compensation::Compensated, CriticalCoupling::Finite),
        std::cmp::Ordering::Less => (Compensation::Undercompensated, CriticalCoupling::Infinite),
    };
    let exponent = (lhs / t).to_f64().unwrap_or(f64::NAN);
    Ok(CompensationClass {
        class,
        predicted_lambda_c,
        exponent,
    })
}

/// Parses `"3"`, `"-0.25"`, `"1.5e-3"` or `"2/3"` into an exact rational.
pub fn parse_exact(s: &str) -> Result<BigRational> {
    let bad = || Error::InvalidSpec(format!("not an exact number: {s:?}"));
    let s = s.trim();
    if let Some((num, den)) = s.split_once('/') {
        let num: BigInt = num.trim().parse().map_err(|_| bad())?;
        let den: BigInt = den.trim().parse().map_err(|_| bad())?;
        if den.is_zero() {
            return Err(bad());
        }
        return Ok(BigRational::new(num, den));
    }
    let (mantissa, exponent) = match s.find(['e', 'E']) {
        Some(i) => (&s[..i], s[i + 1..].parse::<i32>().map_err(|_| bad())?),
        None => (s, 0),
    };
    let (sign, digits) = match mantissa.strip_prefix('-') {
        Some(rest) => (-1, rest),
        None => (1, mantissa.strip_prefix('+').unwrap_or(mantissa)),
    };
    let (int, frac) = digits.split_once('.').unwrap_or((digits, ""));
    if int.is_empty() && frac.is_empty() {
        return Err(bad());
    }
    if !(int.chars().all(|c| c.is_ascii_digit()) && frac.chars().all(|c| c.is_ascii_digit())) {
        return Err(bad());
    }
    let all: BigInt = format!("{int}{frac}").parse().unwrap_or_else(|_| BigInt::zero());
    let scale = exponent - frac.len() as i32;
    let ten = BigInt::from(10);
    let value = if scale >= 0 {
        BigRational::from_integer(all * num_traits::pow(ten, scale as usize))
    } else {
        BigRational::new(all, num_traits::pow(ten, (-scale) as usize))
    };
    Ok(if sign < 0 { -value } else { value })
}

/// `E(Lambda) = (i / 2 pi) ln((1 - pi Lambda) / (1 + pi Lambda)) + k`.
///
/// The logarithm is principal. On the cut `pi Lambda` real with `|pi Lambda| > 1`
/// the value is the limit from `Im Lambda > 0`, so `E = 1/2 + k + ...` at
/// `Lambda = 2`.
pub fn infinite_fence_energy(coupling: &CouplingParameter, branch_k: i64) -> Result<Complex64> {
    infinite_fence_energy_at(coupling.value(), branch_k)
}

pub fn infinite_fence_energy_at(lambda: Complex64, branch_k: i64) -> Result<Complex64> {
    let x = lambda * PI;
    if (x - 1.0).norm() <= BRANCH_POINT_TOL || (x + 1.0).norm() <= BRANCH_POINT_TOL {
        return Err(Error::BranchPoint { lambda });
    }
    let ratio = (ONE - x) / (ONE + x);
    let log = if ratio.im == 0.0 && ratio.re < 0.0 {
        let arg = if lambda.re > 0.0 { -PI } else { PI };
        Complex64::new(ratio.re.abs().ln(), arg)
    } else {
        ratio.ln()
    };
    Ok(I / (2.0 * PI) * log + branch_k as f64)
}

/// `sqrt(1 + (i pi Lambda)^2)`, principal branch; zeros at `Lambda = +-1/pi`.
pub fn resultant_function(coupling: &CouplingParameter) -> Complex64 {
    resultant_function_at(coupling.value())
}

pub fn resultant_function_at(lambda: Complex64) -> Complex64 {
    let x = I * PI * lambda;
    (ONE + x * x).sqrt()
}

/// `-2 i z int_1^inf k^r dk / (z^2 + k^t)` to relative accuracy [`INTEGRAL_TOL`].
pub fn secular_integral(z: Complex64, r: f64, t: f64) -> Result<Complex64> {
    secular_integral_with_tol(z, r, t, INTEGRAL_TOL)
}

pub fn secular_integral_with_tol(z: Complex64, r: f64, t: f64, tol: f64) -> Result<Complex64> {
    if !(t > r + 1.0) {
        return Err(Error::DivergentModel { r, t });
    }
    check_contour(z, t)?;
    let z2 = z * z;
    // Past K the tail is a rapidly convergent series in z^2 / k^t.
    let k_tail = (1e3 * z2.norm().max(1.0)).powf(1.0 / t).max(2.0);
    let body = log_quadrature(z2, r, t, k_tail.ln(), tol);
    let mut tail = Complex64::new(0.0, 0.0);
    let mut power = ONE;
    for n in 0..200 {
        let e = t * (n as f64 + 1.0) - r - 1.0;
        let term = power * k_tail.powf(-e) / e;
        tail += term;
        if term.norm() <= 1e-17 * tail.norm() {
            break;
        }
        power *= -z2;
    }
    Ok(-2.0 * I * z * (body + tail))
}

/// The same integrand cut off at `k = cutoff`, defined for every `(r, t)`.
pub fn secular_integral_cutoff(z: Complex64, r: f64, t: f64, cutoff: f64) -> Result<Complex64> {
    if !(cutoff > 1.0) || !cutoff.is_finite() {
        return Err(Error::InvalidSpec(format!("cutoff must exceed 1, got {cutoff}")));
    }
    check_contour(z, t)?;
    Ok(-2.0 * I * z * log_quadrature(z * z, r, t, cutoff.ln(), INTEGRAL_TOL))
}

/// The integrand has a pole on `[1, inf)` when `z^2` lies on `(-inf, -1]`.
fn check_contour(z: Complex64, t: f64) -> Result<()> {
    if !(z.re.is_finite() && z.im.is_finite() && t > 0.0) {
        return Err(Error::Contour(format!("invalid arguments z = {z}, t = {t}")));
    }
    let z2 = z * z;
    let dist = if z2.re <= -1.0 { z2.im.abs() } else { (z2 + 1.0).norm() };
    if dist <= 1e-10 * z2.norm().max(1.0) {
        return Err(Error::Contour(format!(
            "z^2 = {z2} is on the pole ray (-inf, -1] of the integrand"
        )));
    }
    Ok(())
}

/// `int_0^{s_max} e^{(r+1)s} / (z^2 + e^{t s}) ds` (the body integral in `s = ln k`).
fn log_quadrature(z2: Complex64, r: f64, t: f64, s_max: f64, tol: f64) -> Complex64 {
    let f = |s: f64| {
        let k = s.exp();
        Complex64::new(k.powf(r + 1.0), 0.0) / (z2 + k.powf(t))
    };
    let panels = (s_max.ceil() as usize).max(1);
    let h = s_max / panels as f64;
    let mut segments: Vec<(f64, f64, Complex64, f64)> = (0..panels)
        .map(|i| {
            let (a, b) = (h * i as f64, h * (i + 1) as f64);
            let (v, e) = gauss_kronrod(&f, a, b);
            (a, b, v, e)
        })
        .collect();
    for _ in 0..5000 {
        let total: Complex64 = segments.iter().map(|s| s.2).sum();
        let err: f64 = segments.iter().map(|s| s.3).sum();
        if err <= tol * total.norm() || err == 0.0 {
            break;
        }
        let worst = (0..segments.len())
            .max_by(|&a, &b| segments[a].3.total_cmp(&segments[b].3))
            .unwrap();
        let (a, b, _, _) = segments.swap_remove(worst);
        let m = 0.5 * (a + b);
        if m <= a || m >= b {
            break;
        }
        for (lo, hi) in [(a, m), (m, b)] {
            let (v, e) = gauss_kronrod(&f, lo, hi);
            segments.push((lo, hi, v, e));
        }
    }
    segments.sort_by(|x, y| x.0.total_cmp(&y.0));
    segments.iter().map(|s| s.2).sum()
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

/// 15-point Kronrod value and `|K15 - G7|` on `[a, b]`.
fn gauss_kronrod<F: Fn(f64) -> Complex64>(f: &F, a: f64, b: f64) -> (Complex64, f64) {
    let c = 0.5 * (a + b);
    let h = 0.5 * (b - a);
    let fc = f(c);
    let mut kron = fc * WGK[7];
    let mut gauss = fc * WG[3];
    for j in 0..7 {
        let x = h * XGK[j];
        let pair = f(c - x) + f(c + x);
        kron += pair * WGK[j];
        if j % 2 == 1 {
            gauss += pair * WG[j / 2];
        }
    }
    ((kron * h), ((kron - gauss) * h).norm())
}

/// Least-squares log-log slope of `|secular_integral(Gamma/2)|` against `Gamma`
/// on `points` logarithmically spaced values in `[gamma_lo, gamma_hi]`.
pub fn compensation_slope(r: f64, t: f64, gamma_lo: f64, gamma_hi: f64, points: usize) -> Result<f64> {
    if !(gamma_lo > 0.0 && gamma_hi > gamma_lo && points >= 2) {
        return Err(Error::InvalidGrid("slope needs 0 < lo < hi and >= 2 points".into()));
    }
    let mut xs = Vec::with_capacity(points);
    let mut ys = Vec::with_capacity(points);
    for i in 0..points {
        let g = gamma_lo * (gamma_hi / gamma_lo).powf(i as f64 / (points - 1) as f64);
        let v = secular_integral(Complex64::new(0.5 * g, 0.0), r, t)?;
        xs.push(g.ln());
        ys.push(v.norm().ln());
    }
    let mx = xs.iter().sum::<f64>() / points as f64;
    let my = ys.iter().sum::<f64>() / points as f64;
    let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    Ok(sxy / sxx)
}
