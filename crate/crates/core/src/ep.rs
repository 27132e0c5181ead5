//! Exceptional points: simultaneous roots of `F(E; Lambda) = 0` and `dF/dE = 0`.
//!
//! The derivative condition does not involve `Lambda`, so the EP energies are
//! the roots of `T(E) = sum_k w_k / (E - epsilon_k)^2`, i.e. of the polynomial
//! `Q(E) = sum_k w_k prod_{j != k} (E - epsilon_j)^2` of degree `2n - 2`. Each
//! root fixes `Lambda = i / S(E)`. Roots come in conjugate pairs `(E, E*)`,
//! which map to the pair `(Lambda, -Lambda*)`; one such pair is a symmetry
//! class, represented by its member with `Re Lambda >= 0`.

use num_bigint::BigInt;
use num_complex::Complex64;
use num_rational::BigRational;
use num_traits::{One, ToPrimitive, Zero};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::model::{Angle, EffectiveModel, ModelSpec};
use crate::oracle;
use crate::par::{self, Execution};
use crate::secular::secular_eval_at;

const I: Complex64 = Complex64 { re: 0.0, im: 1.0 };
const ZERO: Complex64 = Complex64 { re: 0.0, im: 0.0 };
const ONE: Complex64 = Complex64 { re: 1.0, im: 0.0 };

/// Largest active subsystem handled by [`resultant_oracle`].
pub const RESULTANT_MAX_N: usize = 6;
/// Residual bound every reported point satisfies.
pub const EP_RESIDUAL_TOL: f64 = 1e-9;
const NEWTON_TOL: f64 = 1e-11;
const NEWTON_MAX_ITER: usize = 60;
const MERGE_LAMBDA_TOL: f64 = 1e-8;
const MERGE_ENERGY_TOL: f64 = 1e-6;
const SEEDING_ROUNDS: usize = 6;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ExceptionalPoint {
    /// Class representative, `Re Lambda >= 0`.
    pub lambda_ep: Complex64,
    pub energy_ep: Complex64,
    /// `max(|F|, |dF/dE|)` re-evaluated at the solution.
    pub residual: f64,
    /// Index of the symmetry class within its set.
    pub pair_id: usize,
    /// The other member `-Lambda*` of the class; its energy is `energy_ep*`.
    pub partner: Complex64,
    /// `|Im Lambda|` exceeds three times the median of its set.
    pub edge: bool,
}

impl ExceptionalPoint {
    /// Both points of the class as `(Lambda, E)`.
    pub fn members(&self) -> [(Complex64, Complex64); 2] {
        [
            (self.lambda_ep, self.energy_ep),
            (self.partner, self.energy_ep.conj()),
        ]
    }
}

fn class_point(lambda: Complex64, energy: Complex64, residual: f64, pair_id: usize) -> ExceptionalPoint {
    let (lambda_ep, energy_ep) = if lambda.re >= 0.0 {
        (lambda, energy)
    } else {
        (-lambda.conj(), energy.conj())
    };
    ExceptionalPoint {
        lambda_ep,
        energy_ep,
        residual,
        pair_id,
        partner: -lambda_ep.conj(),
        edge: false,
    }
}

/// The two EPs `Lambda = i (eps2 - eps1) e^{+-2 i omega}` of a two-level
/// model with couplings `(cos omega, sin omega)`, each with energy
/// `(eps1 + eps2 - i Lambda) / 2`.
pub fn two_level_eps(eps1: f64, eps2: f64, omega: Angle) -> Result<[ExceptionalPoint; 2]> {
    if eps1 == eps2 {
        return Err(Error::InvalidSpec("eps1 = eps2".into()));
    }
    let twice = Angle::from_degrees(2.0 * omega.degrees());
    let (c, s) = twice.cos_sin();
    let d = eps2 - eps1;
    let energy = |l: Complex64| (Complex64::new(eps1 + eps2, 0.0) - I * l) * 0.5;
    let plus = I * Complex64::new(d * c, d * s);
    let minus = I * Complex64::new(d * c, -d * s);
    let point = |l: Complex64| ExceptionalPoint {
        lambda_ep: l,
        energy_ep: energy(l),
        residual: 0.0,
        pair_id: 0,
        partner: -l.conj(),
        edge: false,
    };
    Ok([point(plus), point(minus)])
}

/// All symmetry classes of EPs of the model, sorted by `Re Lambda` then `Im Lambda`.
///
/// Decoupled levels (`v_k = 0`) do not take part; an active subsystem of `n`
/// levels has `n - 1` classes.
pub fn find_eps(model: &EffectiveModel) -> Result<Vec<ExceptionalPoint>> {
    find_eps_with(model, Execution::default())
}

pub fn find_eps_with(model: &EffectiveModel, exec: Execution) -> Result<Vec<ExceptionalPoint>> {
    if model.n() < 2 {
        return Err(Error::InvalidSpec("EP search needs N >= 2".into()));
    }
    let (eps, w) = active_subsystem(model);
    let n = eps.len();
    if n < 2 {
        return Ok(Vec::new());
    }
    let expected = n - 1;
    let mut rng = ChaCha8Rng::seed_from_u64(0x0e9_c1a55);
    let mut seeds = pair_seeds(&eps, &w);
    let mut best: Vec<ExceptionalPoint> = Vec::new();
    for round in 0..SEEDING_ROUNDS {
        if round > 0 {
            let span = eps[n - 1] - eps[0];
            for z in seeds.iter_mut() {
                let a = rng.random::<f64>() * std::f64::consts::TAU;
                let r = 1e-2 * span * rng.random::<f64>();
                *z += Complex64::from_polar(r, a);
            }
        }
        let mut roots = seeds.clone();
        aberth_q(&eps, &w, &mut roots);
        let candidates: Vec<Complex64> = roots.iter().copied().filter(|z| z.im < 0.0).collect();
        let polished = par::map(exec, &candidates, |&e| polish_candidate(model, &eps, &w, e));
        let points = merge(polished.into_iter().flatten().collect());
        if points.len() > best.len() {
            best = points;
        }
        if best.len() == expected {
            break;
        }
    }
    if best.len() != expected {
        return Err(Error::IncompleteSearch {
            found: best.len(),
            expected,
            points: best.iter().map(|p| p.lambda_ep).collect(),
        });
    }
    flag_edges(&mut best);
    Ok(best)
}

fn active_subsystem(model: &EffectiveModel) -> (Vec<f64>, Vec<f64>) {
    model
        .epsilons()
        .iter()
        .zip(model.couplings())
        .filter(|(_, &v)| v != 0.0)
        .map(|(&e, &v)| (e, v * v))
        .unzip()
}

/// Exact two-level EP energies of every adjacent pair: `(E - e2) / (E - e1) = +-i sqrt(b/a)`.
fn pair_seeds(eps: &[f64], w: &[f64]) -> Vec<Complex64> {
    let mut seeds = Vec::with_capacity(2 * eps.len() - 2);
    for k in 0..eps.len() - 1 {
        let rho = (w[k + 1] / w[k]).sqrt();
        for sign in [1.0, -1.0] {
            let q = I * (sign * rho);
            seeds.push((eps[k + 1] - q * eps[k]) / (ONE - q));
        }
    }
    seeds
}

/// `Q'/Q = 2 sum 1/(E - e) + T'/T` with `T' = -2 sum w / (E - e)^3`.
fn q_log_derivative(eps: &[f64], w: &[f64], z: Complex64) -> Option<Complex64> {
    let mut poles = ZERO;
    let mut t = ZERO;
    let mut dt = ZERO;
    for (&e, &x) in eps.iter().zip(w) {
        let d = (z - e).inv();
        poles += d;
        let d2 = d * d * x;
        t += d2;
        dt -= d2 * d * 2.0;
    }
    if t == ZERO {
        return None;
    }
    let r = poles * 2.0 + dt / t;
    (r.re.is_finite() && r.im.is_finite()).then_some(r)
}

fn aberth_q(eps: &[f64], w: &[f64], z: &mut [Complex64]) {
    let m = z.len();
    let mut done = vec![false; m];
    for _ in 0..2000 {
        let mut active = false;
        for i in 0..m {
            if done[i] {
                continue;
            }
            active = true;
            let zi = z[i];
            let Some(ratio) = q_log_derivative(eps, w, zi) else {
                done[i] = true;
                continue;
            };
            let newton = ratio.inv();
            let repel: Complex64 = z
                .iter()
                .enumerate()
                .filter(|&(j, _)| j != i)
                .map(|(_, &zj)| (zi - zj).inv())
                .sum();
            let step = newton / (ONE - newton * repel);
            if !(step.re.is_finite() && step.im.is_finite()) {
                continue;
            }
            z[i] = zi - step;
            if step.norm() <= 1e-14 * (1.0 + zi.norm()) {
                done[i] = true;
            }
        }
        if !active {
            break;
        }
    }
}

/// `(S, S', S'')` of the active subsystem.
fn s_derivatives(eps: &[f64], w: &[f64], z: Complex64) -> (Complex64, Complex64, Complex64) {
    let (mut s, mut ds, mut dds) = (ZERO, ZERO, ZERO);
    for (&e, &x) in eps.iter().zip(w) {
        let d = (z - e).inv();
        let xd = d * x;
        s += xd;
        ds -= xd * d;
        dds += xd * d * d * 2.0;
    }
    (s, ds, dds)
}

/// Damped Newton on `(F, dF/dE)` in `(E, Lambda)` with Jacobian
/// `[[S', i/Lambda^2], [S'', 0]]`.
fn newton_2d(eps: &[f64], w: &[f64], mut e: Complex64, mut lambda: Complex64) -> (Complex64, Complex64) {
    let residual = |e: Complex64, l: Complex64| {
        let (s, ds, _) = s_derivatives(eps, w, e);
        (s - I / l).norm().max(ds.norm())
    };
    let mut res = residual(e, lambda);
    for _ in 0..NEWTON_MAX_ITER {
        if res <= NEWTON_TOL * 1e-3 {
            break;
        }
        let (s, ds, dds) = s_derivatives(eps, w, e);
        if dds == ZERO {
            break;
        }
        let f = s - I / lambda;
        let de = -ds / dds;
        let dl = (-f - ds * de) * lambda * lambda / I;
        let mut step = 1.0;
        let mut improved = false;
        while step > 1e-6 {
            let (ce, cl) = (e + de * step, lambda + dl * step);
            let r = residual(ce, cl);
            if r < res {
                e = ce;
                lambda = cl;
                res = r;
                improved = true;
                break;
            }
            step *= 0.5;
        }
        if !improved {
            break;
        }
    }
    (e, lambda)
}

fn polish_candidate(model: &EffectiveModel, eps: &[f64], w: &[f64], e0: Complex64) -> Option<(Complex64, Complex64, f64)> {
    let (s, _, _) = s_derivatives(eps, w, e0);
    if s == ZERO {
        return None;
    }
    let (e, lambda) = newton_2d(eps, w, e0, I / s);
    let ev = secular_eval_at(model, lambda, e).ok()?;
    let residual = ev.value.norm().max(ev.derivative.norm());
    let finite = lambda.re.is_finite() && lambda.im.is_finite() && e.re.is_finite() && e.im.is_finite();
    (finite && residual <= EP_RESIDUAL_TOL).then_some((lambda, e, residual))
}

fn merge(points: Vec<(Complex64, Complex64, f64)>) -> Vec<ExceptionalPoint> {
    let mut out: Vec<ExceptionalPoint> = Vec::new();
    for (lambda, energy, residual) in points {
        let p = class_point(lambda, energy, residual, 0);
        let duplicate = out.iter().any(|q| {
            (q.lambda_ep - p.lambda_ep).norm() <= MERGE_LAMBDA_TOL * (1.0 + p.lambda_ep.norm())
                && (q.energy_ep - p.energy_ep).norm() <= MERGE_ENERGY_TOL
        });
        if !duplicate {
            out.push(p);
        }
    }
    out.sort_by(|a, b| {
        a.lambda_ep
            .re
            .total_cmp(&b.lambda_ep.re)
            .then(a.lambda_ep.im.total_cmp(&b.lambda_ep.im))
    });
    for (k, p) in out.iter_mut().enumerate() {
        p.pair_id = k;
    }
    out
}

fn flag_edges(points: &mut [ExceptionalPoint]) {
    let mut ims: Vec<f64> = points.iter().map(|p| p.lambda_ep.im.abs()).collect();
    if ims.is_empty() {
        return;
    }
    ims.sort_by(f64::total_cmp);
    let median = median_sorted(&ims);
    for p in points.iter_mut() {
        p.edge = p.lambda_ep.im.abs() > 3.0 * median;
    }
}

fn median_sorted(x: &[f64]) -> f64 {
    let m = x.len();
    if m % 2 == 1 {
        x[m / 2]
    } else {
        0.5 * (x[m / 2 - 1] + x[m / 2])
    }
}

/// EPs as the roots in `Lambda` of the resultant of `P(E) = det(E - H)` and
/// `dP/dE`, all `2(n - 1)` points sorted by `(Re, Im)`.
///
/// With `mu = i Lambda`, `P = prod (E - e_k) + mu sum w_k prod_{j != k} (E - e_j)`
/// has real coefficients. The Sylvester determinant is evaluated exactly in
/// rational arithmetic at `2n` integer values of `mu` and interpolated exactly;
/// only the final coefficients are rounded to `f64`.
pub fn resultant_oracle(model: &EffectiveModel) -> Result<Vec<Complex64>> {
    let (eps, w) = active_subsystem(model);
    let n = eps.len();
    if n > RESULTANT_MAX_N {
        return Err(Error::OracleRange {
            n,
            limit: RESULTANT_MAX_N,
        });
    }
    if n < 2 {
        return Ok(Vec::new());
    }
    let eps_q: Vec<BigRational> = eps.iter().map(|&x| exact(x)).collect();
    let w_q: Vec<BigRational> = w.iter().map(|&x| exact(x)).collect();
    // Ascending E-coefficients of prod(E - e) and of sum w prod_{j != k}(E - e_j).
    let base = poly_from_roots(&eps_q);
    let mut coupled = vec![BigRational::zero(); n];
    for k in 0..n {
        let others: Vec<BigRational> = (0..n).filter(|&j| j != k).map(|j| eps_q[j].clone()).collect();
        for (c, p) in coupled.iter_mut().zip(poly_from_roots(&others)) {
            *c += &w_q[k] * p;
        }
    }
    let samples = 2 * n;
    let xs: Vec<BigRational> = (0..samples).map(|j| BigRational::from_integer(BigInt::from(j))).collect();
    let ys: Vec<BigRational> = xs
        .iter()
        .map(|mu| {
            let p: Vec<BigRational> = (0..=n)
                .map(|i| {
                    let c = if i < n { &coupled[i] * mu } else { BigRational::zero() };
                    &base[i] + c
                })
                .collect();
            let dp: Vec<BigRational> = (1..=n)
                .map(|i| &p[i] * BigRational::from_integer(BigInt::from(i)))
                .collect();
            sylvester_det(&p, &dp)
        })
        .collect();
    let coeffs = interpolate(&xs, &ys);
    let c64: Vec<Complex64> = coeffs
        .iter()
        .map(|c| Complex64::new(c.to_f64().unwrap_or(f64::NAN), 0.0))
        .collect();
    let mut lambdas: Vec<Complex64> = oracle::polynomial_roots(&c64).into_iter().map(|mu| -I * mu).collect();
    crate::secular::sort_complex(&mut lambdas);
    Ok(lambdas)
}

fn exact(x: f64) -> BigRational {
    BigRational::from_float(x).expect("finite model entry")
}

/// Ascending coefficients of `prod (E - r)`.
fn poly_from_roots(roots: &[BigRational]) -> Vec<BigRational> {
    let mut p = vec![BigRational::one()];
    for r in roots {
        let mut q = vec![BigRational::zero(); p.len() + 1];
        for (i, c) in p.iter().enumerate() {
            q[i + 1] += c;
            q[i] -= c * r;
        }
        p = q;
    }
    p
}

/// Determinant of the Sylvester matrix of `p` (degree `m`) and `q` (degree `m - 1`)
/// by exact Gaussian elimination.
fn sylvester_det(p: &[BigRational], q: &[BigRational]) -> BigRational {
    let dp = p.len() - 1;
    let dq = q.len() - 1;
    let size = dp + dq;
    let mut a = vec![vec![BigRational::zero(); size]; size];
    for row in 0..dq {
        for (i, c) in p.iter().rev().enumerate() {
            a[row][row + i] = c.clone();
        }
    }
    for row in 0..dp {
        for (i, c) in q.iter().rev().enumerate() {
            a[dq + row][row + i] = c.clone();
        }
    }
    let mut det = BigRational::one();
    for col in 0..size {
        let Some(pivot) = (col..size).find(|&r| !a[r][col].is_zero()) else {
            return BigRational::zero();
        };
        if pivot != col {
            a.swap(pivot, col);
            det = -det;
        }
        let p = a[col][col].clone();
        det *= &p;
        for row in col + 1..size {
            if a[row][col].is_zero() {
                continue;
            }
            let f = &a[row][col] / &p;
            for k in col..size {
                let t = &a[col][k] * &f;
                a[row][k] -= t;
            }
        }
    }
    det
}

/// Ascending coefficients of the Lagrange interpolant through `(xs, ys)`.
fn interpolate(xs: &[BigRational], ys: &[BigRational]) -> Vec<BigRational> {
    let m = xs.len();
    let mut out = vec![BigRational::zero(); m];
    for i in 0..m {
        let others: Vec<BigRational> = (0..m).filter(|&j| j != i).map(|j| xs[j].clone()).collect();
        let basis = poly_from_roots(&others);
        let denom: BigRational = others.iter().fold(BigRational::one(), |acc, x| acc * (&xs[i] - x));
        let scale = &ys[i] / denom;
        for (o, b) in out.iter_mut().zip(basis) {
            *o += b * &scale;
        }
    }
    out
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct DistanceSummary {
    pub min: f64,
    pub median: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AccumulationReport {
    pub n_values: Vec<usize>,
    pub ep_sets: Vec<Vec<ExceptionalPoint>>,
    /// `|Lambda_EP - lambda_c|` over the non-edge classes, when `lambda_c` is known.
    pub distances: Option<Vec<DistanceSummary>>,
    /// Analytic infinite-N accumulation point, when known.
    pub lambda_c: Option<f64>,
    /// `Re Lambda` of the non-edge class closest to the real axis at the largest N.
    pub lambda_c_estimate: f64,
}

/// Analytic accumulation point of a family: `t / (2 pi)` for compensated
/// power laws, `1/pi` for the picket fence and its perturbations.
pub fn analytic_lambda_c(spec: &ModelSpec) -> Option<f64> {
    match *spec {
        ModelSpec::PicketFence { .. } | ModelSpec::PerturbedPicketFence { .. } => {
            Some(std::f64::consts::FRAC_1_PI)
        }
        ModelSpec::PowerLaw { r, t, .. } if 2.0 * (1.0 + r) == t => {
            Some(t / (2.0 * std::f64::consts::PI))
        }
        _ => None,
    }
}

/// EP sets of one family over a ladder of sizes.
pub fn accumulation_scan(n_ladder: &[usize], family: &ModelSpec) -> Result<AccumulationReport> {
    accumulation_scan_with(n_ladder, family, Execution::default())
}

pub fn accumulation_scan_with(
    n_ladder: &[usize],
    family: &ModelSpec,
    exec: Execution,
) -> Result<AccumulationReport> {
    if n_ladder.is_empty() {
        return Err(Error::InvalidSpec("empty N ladder".into()));
    }
    if let Some(&n) = n_ladder.iter().find(|&&n| n < 3) {
        return Err(Error::InvalidSpec(format!("N ladder entries must be >= 3, got {n}")));
    }
    let lambda_c = analytic_lambda_c(family);
    let ep_sets = n_ladder
        .iter()
        .map(|&n| find_eps_with(&family.with_n(n).build()?, exec))
        .collect::<Result<Vec<_>>>()?;
    let distances = lambda_c.map(|lc| {
        ep_sets
            .iter()
            .map(|set| {
                let mut d: Vec<f64> = set
                    .iter()
                    .filter(|p| !p.edge)
                    .map(|p| (p.lambda_ep - lc).norm())
                    .collect();
                d.sort_by(f64::total_cmp);
                DistanceSummary {
                    min: d.first().copied().unwrap_or(f64::NAN),
                    median: if d.is_empty() { f64::NAN } else { median_sorted(&d) },
                }
            })
            .collect()
    });
    let largest = n_ladder
        .iter()
        .enumerate()
        .max_by_key(|&(_, &n)| n)
        .map(|(i, _)| i)
        .unwrap();
    let lambda_c_estimate = ep_sets[largest]
        .iter()
        .filter(|p| !p.edge)
        .min_by(|a, b| a.lambda_ep.im.abs().total_cmp(&b.lambda_ep.im.abs()))
        .map_or(f64::NAN, |p| p.lambda_ep.re);
    Ok(AccumulationReport {
        n_values: n_ladder.to_vec(),
        ep_sets,
        distances,
        lambda_c,
        lambda_c_estimate,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{build_perturbed_fence, build_picket_fence, build_power_law, build_two_level};
    use crate::secular::eigen_spectrum_at;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn two_level_closed_form_values() {
        let [a, b] = two_level_eps(0.0, 1.0, Angle::from_degrees(45.0)).unwrap();
        assert_eq!(a.lambda_ep, c(-1.0, 0.0));
        assert_eq!(b.lambda_ep, c(1.0, 0.0));
        let [a, b] = two_level_eps(0.0, 1.0, Angle::from_degrees(30.0)).unwrap();
        let r3 = 3f64.sqrt() / 2.0;
        assert!((a.lambda_ep - c(-r3, 0.5)).norm() < 1e-15);
        assert!((b.lambda_ep - c(r3, 0.5)).norm() < 1e-15);
        assert!((b.energy_ep - (c(1.0, 0.0) - I * b.lambda_ep) * 0.5).norm() < 1e-15);
    }

    #[test]
    fn two_level_ep_circle() {
        for k in 1..90 {
            let om = Angle::from_degrees(k as f64);
            for p in two_level_eps(-0.3, 1.7, om).unwrap() {
                assert!((p.lambda_ep.norm() - 2.0).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn finder_matches_two_level_closed_form() {
        for &deg in &[10.0, 30.0, 45.0, 60.0, 80.0] {
            let om = Angle::from_degrees(deg);
            let m = build_two_level(0.0, 1.0, om).unwrap();
            let found = find_eps(&m).unwrap();
            assert_eq!(found.len(), 1);
            let [a, b] = two_level_eps(0.0, 1.0, om).unwrap();
            let rep = if a.lambda_ep.re >= 0.0 { a } else { b };
            assert!((found[0].lambda_ep - rep.lambda_ep).norm() < 1e-10, "{deg}");
            assert!((found[0].energy_ep - rep.energy_ep).norm() < 1e-10, "{deg}");
        }
    }

    #[test]
    fn picket_count_law_and_residuals() {
        let m = build_picket_fence(15).unwrap();
        let eps = find_eps(&m).unwrap();
        assert_eq!(eps.len(), 14);
        assert_eq!(eps.iter().flat_map(|p| p.members()).count(), 28);
        for p in &eps {
            let ev = secular_eval_at(&m, p.lambda_ep, p.energy_ep).unwrap();
            assert!(ev.value.norm() <= 1e-9 && ev.derivative.norm() <= 1e-9);
            let ev = secular_eval_at(&m, p.partner, p.energy_ep.conj()).unwrap();
            assert!(ev.value.norm() <= 1e-9 && ev.derivative.norm() <= 1e-9);
        }
    }

    #[test]
    fn even_picket_has_real_axis_class() {
        let eps = find_eps(&build_picket_fence(4).unwrap()).unwrap();
        assert_eq!(eps.len(), 3);
        assert_eq!(eps.iter().filter(|p| p.lambda_ep.im.abs() < 1e-9).count(), 1);
    }

    #[test]
    fn odd_picket_has_no_real_axis_class() {
        for n in [3, 5, 7, 9] {
            let eps = find_eps(&build_picket_fence(n).unwrap()).unwrap();
            assert!(eps.iter().all(|p| p.lambda_ep.im.abs() > 1e-6), "N = {n}");
        }
    }

    #[test]
    fn mirror_symmetric_set_is_closed() {
        let eps = find_eps(&build_picket_fence(9).unwrap()).unwrap();
        let all: Vec<Complex64> = eps.iter().flat_map(|p| [p.lambda_ep, p.partner]).collect();
        for &l in &all {
            for image in [l.conj(), -l] {
                assert!(all.iter().any(|&m| (m - image).norm() < 1e-8), "{image}");
            }
        }
    }

    #[test]
    fn resultant_two_level() {
        let m = build_two_level(0.0, 1.0, Angle::from_degrees(45.0)).unwrap();
        let r = resultant_oracle(&m).unwrap();
        assert_eq!(r.len(), 2);
        assert!((r[0] - c(-1.0, 0.0)).norm() < 1e-12);
        assert!((r[1] - c(1.0, 0.0)).norm() < 1e-12);
    }

    #[test]
    fn resultant_agrees_with_finder() {
        let models = [
            build_picket_fence(3).unwrap(),
            build_picket_fence(6).unwrap(),
            build_perturbed_fence(5, 0.3, 8).unwrap(),
            build_power_law(4, 1.0, 4.0).unwrap(),
        ];
        for m in &models {
            let roots = resultant_oracle(m).unwrap();
            assert_eq!(roots.len(), 2 * (m.n() - 1));
            let eps = find_eps(m).unwrap();
            for p in &eps {
                for l in [p.lambda_ep, p.partner] {
                    let d = roots.iter().map(|r| (r - l).norm()).fold(f64::INFINITY, f64::min);
                    assert!(d < 1e-8, "{} {l}: {d:e}", m.spec().label());
                }
            }
        }
    }

    #[test]
    fn resultant_range() {
        assert!(matches!(
            resultant_oracle(&build_picket_fence(7).unwrap()),
            Err(Error::OracleRange { n: 7, limit: 6 })
        ));
    }

    #[test]
    fn eigenvectors_coalesce_at_ep() {
        let m = build_picket_fence(5).unwrap();
        let p = find_eps(&m).unwrap()[0].clone();
        let mut last = 0.0;
        for off in [1e-4, 1e-5, 1e-6] {
            let lam = p.lambda_ep * (1.0 + off);
            let sp = eigen_spectrum_at(&m, lam).unwrap();
            let mut idx: Vec<usize> = (0..sp.len()).collect();
            idx.sort_by(|&a, &b| {
                (sp.eigenvalues()[a] - p.energy_ep)
                    .norm()
                    .total_cmp(&(sp.eigenvalues()[b] - p.energy_ep).norm())
            });
            let (x, y) = (&sp.eigenvectors()[idx[0]], &sp.eigenvectors()[idx[1]]);
            let dot: Complex64 = x.iter().zip(y).map(|(a, b)| a.conj() * b).sum();
            let nx: f64 = x.iter().map(|a| a.norm_sqr()).sum::<f64>().sqrt();
            let ny: f64 = y.iter().map(|a| a.norm_sqr()).sum::<f64>().sqrt();
            let overlap = dot.norm() / (nx * ny);
            assert!(overlap > last, "{off}: {overlap}");
            last = overlap;
        }
        assert!(last > 0.99);
    }

    #[test]
    fn accumulation_scan_reports_distances() {
        let rep = accumulation_scan(&[5, 9], &ModelSpec::PicketFence { n: 0 }).unwrap();
        assert_eq!(rep.lambda_c, Some(std::f64::consts::FRAC_1_PI));
        let d = rep.distances.unwrap();
        assert_eq!(d.len(), 2);
        assert!(d.iter().all(|s| s.min <= s.median));
        assert!(accumulation_scan(&[2, 5], &ModelSpec::PicketFence { n: 0 }).is_err());
    }
}
