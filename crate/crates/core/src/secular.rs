//! Spectrum of `H(Lambda) = diag(epsilon) - i Lambda v v^T` from the rank-one
//! secular equation `F(E) = sum_k v_k^2 / (E - epsilon_k) - i / Lambda = 0`.
//!
//! Roots are found by simultaneous (Aberth-Ehrlich) iteration on the monic
//! characteristic polynomial, with every Newton quotient evaluated through the
//! secular form in `O(N)`. Levels with `v_k = 0` are decoupled and returned
//! exactly. Eigenvectors have components `v_k / (E - epsilon_k)` scaled to
//! `psi^T psi = 1`.

use num_complex::Complex64;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::model::{Angle, CouplingParameter, EffectiveModel};
use crate::oracle;

const I: Complex64 = Complex64 { re: 0.0, im: 1.0 };
const ZERO: Complex64 = Complex64 { re: 0.0, im: 0.0 };

/// Bilinear-to-Hermitian norm ratio `|psi^T psi| / <psi|psi>` below which
/// c-normalization is refused. A numerically coalesced pair is only resolved to
/// about `sqrt(machine epsilon)`, so the ratio there sits near `1e-8`.
pub const NORMALIZATION_TOL: f64 = 1e-6;
const POLE_TOL: f64 = 1e-14;
const MAX_SWEEPS: usize = 2000;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SecularEvaluation {
    pub value: Complex64,
    pub derivative: Complex64,
}

/// Evaluates `F(E)` and `dF/dE` with compensated summation.
pub fn secular_eval(
    model: &EffectiveModel,
    coupling: &CouplingParameter,
    energy: Complex64,
) -> Result<SecularEvaluation> {
    if !(coupling.lambda() > 0.0) {
        return Err(Error::InvalidCoupling(
            "secular function needs lambda > 0".into(),
        ));
    }
    secular_eval_at(model, coupling.value(), energy)
}

/// As [`secular_eval`] for an arbitrary nonzero complex `Lambda`.
pub fn secular_eval_at(
    model: &EffectiveModel,
    lambda: Complex64,
    energy: Complex64,
) -> Result<SecularEvaluation> {
    if lambda == ZERO {
        return Err(Error::InvalidCoupling("Lambda = 0".into()));
    }
    let mut value = Neumaier::default();
    let mut deriv = Neumaier::default();
    for (&e, &v) in model.epsilons().iter().zip(model.couplings()) {
        let dist = (energy - e).norm();
        if dist <= POLE_TOL * (1.0 + e.abs()) {
            return Err(Error::PoleProximity {
                energy,
                pole: e,
                distance: dist,
            });
        }
        let d = (energy - e).inv();
        let w = v * v;
        value.add(d * w);
        deriv.add(-(d * d) * w);
    }
    Ok(SecularEvaluation {
        value: value.sum() - I / lambda,
        derivative: deriv.sum(),
    })
}

/// Complex Neumaier summation.
#[derive(Default)]
struct Neumaier {
    re: (f64, f64),
    im: (f64, f64),
}

impl Neumaier {
    fn add(&mut self, z: Complex64) {
        fn step(acc: &mut (f64, f64), x: f64) {
            let t = acc.0 + x;
            if acc.0.abs() >= x.abs() {
                acc.1 += (acc.0 - t) + x;
            } else {
                acc.1 += (x - t) + acc.0;
            }
            acc.0 = t;
        }
        step(&mut self.re, z.re);
        step(&mut self.im, z.im);
    }

    fn sum(&self) -> Complex64 {
        Complex64::new(self.re.0 + self.re.1, self.im.0 + self.im.1)
    }
}

/// All eigenpairs of `H(Lambda)` at one coupling.
#[derive(Debug, Clone, Serialize)]
pub struct Spectrum {
    lambda_value: Complex64,
    eigenvalues: Vec<Complex64>,
    eigenvectors: Vec<Vec<Complex64>>,
    hermitian_norms: Vec<f64>,
}

impl Spectrum {
    pub fn lambda_value(&self) -> Complex64 {
        self.lambda_value
    }

    /// Sorted by real part, then imaginary part.
    pub fn eigenvalues(&self) -> &[Complex64] {
        &self.eigenvalues
    }

    /// c-normalized: `psi^T psi = 1`, first nonzero component with nonnegative real part.
    pub fn eigenvectors(&self) -> &[Vec<Complex64>] {
        &self.eigenvectors
    }

    /// `<psi_k|psi_k>` of the c-normalized vectors.
    pub fn hermitian_norms(&self) -> &[f64] {
        &self.hermitian_norms
    }

    /// `Gamma_k = -2 Im E_k`.
    pub fn widths(&self) -> Vec<f64> {
        self.eigenvalues.iter().map(|z| -2.0 * z.im).collect()
    }

    pub fn len(&self) -> usize {
        self.eigenvalues.len()
    }

    pub fn is_empty(&self) -> bool {
        self.eigenvalues.is_empty()
    }
}

/// Eigenvalues only, sorted by `(Re, Im)`.
pub fn eigenvalues(model: &EffectiveModel, coupling: &CouplingParameter) -> Result<Vec<Complex64>> {
    eigenvalues_at(model, coupling.value())
}

pub fn eigenvalues_at(model: &EffectiveModel, lambda: Complex64) -> Result<Vec<Complex64>> {
    if !(lambda.re.is_finite() && lambda.im.is_finite()) {
        return Err(Error::InvalidCoupling(format!("non-finite Lambda {lambda}")));
    }
    let mut roots = if lambda == ZERO {
        model.epsilons().iter().map(|&e| Complex64::new(e, 0.0)).collect()
    } else {
        let (active, decoupled) = split_active(model);
        let eps: Vec<f64> = active.iter().map(|&k| model.epsilons()[k]).collect();
        let w: Vec<f64> = active
            .iter()
            .map(|&k| model.couplings()[k] * model.couplings()[k])
            .collect();
        let mut roots = if eps.is_empty() {
            Vec::new()
        } else {
            solve_active(model, &eps, &w, lambda)?
        };
        roots.extend(decoupled.iter().map(|&k| Complex64::new(model.epsilons()[k], 0.0)));
        roots
    };
    sort_complex(&mut roots);
    Ok(roots)
}

pub fn eigen_spectrum(model: &EffectiveModel, coupling: &CouplingParameter) -> Result<Spectrum> {
    eigen_spectrum_at(model, coupling.value())
}

pub fn eigen_spectrum_at(model: &EffectiveModel, lambda: Complex64) -> Result<Spectrum> {
    let n = model.n();
    let eigenvalues = eigenvalues_at(model, lambda)?;
    if lambda == ZERO {
        let eigenvectors = (0..n)
            .map(|k| {
                let mut e = vec![ZERO; n];
                e[k] = Complex64::new(1.0, 0.0);
                e
            })
            .collect();
        return Ok(Spectrum {
            lambda_value: lambda,
            eigenvalues,
            eigenvectors,
            hermitian_norms: vec![1.0; n],
        });
    }
    let mut eigenvectors = Vec::with_capacity(n);
    let mut hermitian_norms = Vec::with_capacity(n);
    let mut used_decoupled = vec![false; n];
    for (state, &z) in eigenvalues.iter().enumerate() {
        let psi = match decoupled_state(model, z, &mut used_decoupled) {
            Some(k) => {
                let mut e = vec![ZERO; n];
                e[k] = Complex64::new(1.0, 0.0);
                e
            }
            None => c_normalized_vector(model, lambda, z, state)?,
        };
        hermitian_norms.push(psi.iter().map(|c| c.norm_sqr()).sum());
        eigenvectors.push(psi);
    }
    Ok(Spectrum {
        lambda_value: lambda,
        eigenvalues,
        eigenvectors,
        hermitian_norms,
    })
}

/// Hermitian norms of the c-normalized eigenvectors for given eigenvalues,
/// without materializing the vectors.
pub fn hermitian_norms_at(
    model: &EffectiveModel,
    lambda: Complex64,
    eigenvalues: &[Complex64],
) -> Result<Vec<f64>> {
    let n = model.n();
    let mut used_decoupled = vec![false; n];
    let mut out = Vec::with_capacity(eigenvalues.len());
    for (state, &z) in eigenvalues.iter().enumerate() {
        if lambda == ZERO || decoupled_state(model, z, &mut used_decoupled).is_some() {
            out.push(1.0);
            continue;
        }
        let (bilinear, hermitian) = raw_norms(model, z);
        let ratio = bilinear.norm() / hermitian;
        if !(ratio >= NORMALIZATION_TOL) {
            return Err(Error::IllConditionedNormalization {
                lambda,
                state,
                ratio,
            });
        }
        out.push(1.0 / ratio);
    }
    Ok(out)
}

fn raw_norms(model: &EffectiveModel, z: Complex64) -> (Complex64, f64) {
    let mut bilinear = ZERO;
    let mut hermitian = 0.0;
    for (&e, &v) in model.epsilons().iter().zip(model.couplings()) {
        if v == 0.0 {
            continue;
        }
        let c = (z - e).inv() * v;
        bilinear += c * c;
        hermitian += c.norm_sqr();
    }
    (bilinear, hermitian)
}

fn c_normalized_vector(
    model: &EffectiveModel,
    lambda: Complex64,
    z: Complex64,
    state: usize,
) -> Result<Vec<Complex64>> {
    let raw: Vec<Complex64> = model
        .epsilons()
        .iter()
        .zip(model.couplings())
        .map(|(&e, &v)| if v == 0.0 { ZERO } else { (z - e).inv() * v })
        .collect();
    let bilinear: Complex64 = raw.iter().map(|c| c * c).sum();
    let hermitian: f64 = raw.iter().map(|c| c.norm_sqr()).sum();
    let ratio = bilinear.norm() / hermitian;
    if !(ratio >= NORMALIZATION_TOL) {
        return Err(Error::IllConditionedNormalization {
            lambda,
            state,
            ratio,
        });
    }
    let scale = bilinear.sqrt().inv();
    let mut psi: Vec<Complex64> = raw.iter().map(|c| c * scale).collect();
    apply_gauge(&mut psi);
    Ok(psi)
}

/// Sign gauge: the first nonzero component gets nonnegative real part
/// (positive imaginary part when the real part vanishes).
pub fn apply_gauge(psi: &mut [Complex64]) {
    if let Some(first) = psi.iter().find(|c| c.norm() > 0.0).copied() {
        if first.re < 0.0 || (first.re == 0.0 && first.im < 0.0) {
            for c in psi.iter_mut() {
                *c = -*c;
            }
        }
    }
}

fn decoupled_state(model: &EffectiveModel, z: Complex64, used: &mut [bool]) -> Option<usize> {
    if z.im != 0.0 {
        return None;
    }
    let k = model
        .epsilons()
        .iter()
        .zip(model.couplings())
        .enumerate()
        .position(|(k, (&e, &v))| v == 0.0 && e == z.re && !used[k])?;
    used[k] = true;
    Some(k)
}

fn split_active(model: &EffectiveModel) -> (Vec<usize>, Vec<usize>) {
    (0..model.n()).partition(|&k| model.couplings()[k] != 0.0)
}

pub(crate) fn sort_complex(v: &mut [Complex64]) {
    v.sort_by(|a, b| a.re.total_cmp(&b.re).then(a.im.total_cmp(&b.im)));
}

fn solve_active(
    model: &EffectiveModel,
    eps: &[f64],
    w: &[f64],
    lambda: Complex64,
) -> Result<Vec<Complex64>> {
    let n = eps.len();
    let mu = I / lambda;
    if n == 1 {
        return Ok(vec![eps[0] - I * lambda * w[0]]);
    }
    let mut roots = initial_guesses(eps, w, lambda);
    let mut last_reason = String::new();
    for attempt in 0..4 {
        if attempt > 0 {
            jitter(&mut roots, eps, attempt as u64);
        }
        aberth(eps, w, mu, &mut roots);
        for z in roots.iter_mut() {
            newton_polish(eps, w, mu, z);
        }
        match validate(eps, w, lambda, &roots) {
            Ok(()) => return Ok(roots),
            Err(reason) => last_reason = reason,
        }
    }
    if model.n() <= oracle::DENSE_ORACLE_MAX_N {
        let sub = EffectiveModel::new(
            eps.to_vec(),
            w.iter().map(|x| x.sqrt()).collect(),
            model.spec().clone(),
        )?;
        let roots = oracle::dense_oracle_at(&sub, lambda)?;
        if validate(eps, w, lambda, &roots).is_ok() {
            return Ok(roots);
        }
    }
    Err(Error::SolverFailure {
        lambda,
        reason: last_reason,
    })
}

/// Starting points: first-order shifts `epsilon_k + w_k / (i/Lambda - R_k)` in
/// the weak-coupling regime, otherwise one guess between each adjacent pair
/// plus one deep collective guess at `<epsilon>_w - i Lambda sum w`.
fn initial_guesses(eps: &[f64], w: &[f64], lambda: Complex64) -> Vec<Complex64> {
    let n = eps.len();
    let mu = I / lambda;
    let lam = lambda.norm();
    let gap = |k: usize| {
        let left = if k > 0 { eps[k] - eps[k - 1] } else { f64::INFINITY };
        let right = if k + 1 < n { eps[k + 1] - eps[k] } else { f64::INFINITY };
        left.min(right)
    };
    let weak = (0..n).all(|k| lam * w[k] <= 0.25 * gap(k));
    if weak {
        return (0..n)
            .map(|k| {
                let r: f64 = (0..n)
                    .filter(|&j| j != k)
                    .map(|j| w[j] / (eps[k] - eps[j]))
                    .sum();
                eps[k] + w[k] / (mu - r)
            })
            .collect();
    }
    let dir = -I * lambda / lam;
    let total: f64 = w.iter().sum();
    let mut guesses: Vec<Complex64> = (0..n - 1)
        .map(|k| {
            let g = eps[k + 1] - eps[k];
            let mid = 0.5 * (eps[k] + eps[k + 1]);
            let l = lam * 0.5 * (w[k] + w[k + 1]) / g;
            let depth = g * l.min(1.0 / (std::f64::consts::PI.powi(2) * l));
            mid + dir * depth
        })
        .collect();
    let centre: f64 = eps.iter().zip(w).map(|(e, x)| e * x).sum::<f64>() / total;
    guesses.push(centre - I * lambda * total);
    guesses
}

fn jitter(roots: &mut [Complex64], eps: &[f64], attempt: u64) {
    let span = (eps[eps.len() - 1] - eps[0]).max(1.0);
    let mut state = 0x9E37_79B9_7F4A_7C15u64.wrapping_mul(attempt + 1);
    for z in roots.iter_mut() {
        state ^= state << 13;
        state ^= state >> 7;
        state ^= state << 17;
        let a = (state % 10_000) as f64 / 10_000.0 * std::f64::consts::TAU;
        *z += Complex64::from_polar(1e-3 * span, a);
    }
}

/// Newton quotient `P'/P` of the characteristic polynomial at `z`.
#[inline]
fn log_derivative(eps: &[f64], w: &[f64], mu: Complex64, z: Complex64) -> Option<Complex64> {
    let mut pole_sum = ZERO;
    let mut s = ZERO;
    let mut ds = ZERO;
    for (&e, &x) in eps.iter().zip(w) {
        let d = (z - e).inv();
        pole_sum += d;
        let xd = d * x;
        s += xd;
        ds -= xd * d;
    }
    let f = s - mu;
    if f == ZERO {
        return None;
    }
    let r = pole_sum + ds / f;
    (r.re.is_finite() && r.im.is_finite()).then_some(r)
}

/// Gauss-Seidel Aberth-Ehrlich sweeps; converged roots are frozen but keep
/// repelling the others.
fn aberth(eps: &[f64], w: &[f64], mu: Complex64, z: &mut [Complex64]) -> bool {
    let n = z.len();
    let mut done = vec![false; n];
    for _ in 0..MAX_SWEEPS {
        let mut active = 0;
        for i in 0..n {
            if done[i] {
                continue;
            }
            active += 1;
            let zi = z[i];
            let Some(ratio) = log_derivative(eps, w, mu, zi) else {
                done[i] = true;
                continue;
            };
            let newton = ratio.inv();
            let mut repel = ZERO;
            for (j, &zj) in z.iter().enumerate() {
                if j != i {
                    repel += (zi - zj).inv();
                }
            }
            let step = newton / (Complex64::new(1.0, 0.0) - newton * repel);
            if !(step.re.is_finite() && step.im.is_finite()) {
                continue;
            }
            z[i] = zi - step;
            if step.norm() <= 1e-13 * (1.0 + zi.norm()) {
                done[i] = true;
            }
        }
        if active == 0 {
            return true;
        }
    }
    done.iter().all(|&d| d)
}

fn secular_pair(eps: &[f64], w: &[f64], mu: Complex64, z: Complex64) -> (Complex64, Complex64) {
    let mut s = ZERO;
    let mut ds = ZERO;
    for (&e, &x) in eps.iter().zip(w) {
        let d = (z - e).inv();
        let xd = d * x;
        s += xd;
        ds -= xd * d;
    }
    (s - mu, ds)
}

fn newton_polish(eps: &[f64], w: &[f64], mu: Complex64, z: &mut Complex64) {
    let (mut f, mut df) = secular_pair(eps, w, mu, *z);
    for _ in 0..4 {
        if f == ZERO || df == ZERO {
            return;
        }
        let cand = *z - f / df;
        let (fc, dfc) = secular_pair(eps, w, mu, cand);
        if !(fc.norm() < f.norm()) {
            return;
        }
        *z = cand;
        f = fc;
        df = dfc;
    }
}

fn validate(eps: &[f64], w: &[f64], lambda: Complex64, roots: &[Complex64]) -> std::result::Result<(), String> {
    if roots.iter().any(|z| !(z.re.is_finite() && z.im.is_finite())) {
        return Err("non-finite root".into());
    }
    let expected: Complex64 =
        eps.iter().sum::<f64>() - I * lambda * w.iter().sum::<f64>();
    let got: Complex64 = roots.iter().sum();
    let scale = 1.0 + eps.iter().map(|e| e.abs()).sum::<f64>() + lambda.norm() * w.iter().sum::<f64>();
    let trace_err = (got - expected).norm() / scale;
    if trace_err > 1e-10 {
        return Err(format!("trace identity violated by {trace_err:e}"));
    }
    let mu = I / lambda;
    for &z in roots {
        let mut s = ZERO;
        let mut mag = 0.0;
        for (&e, &x) in eps.iter().zip(w) {
            let d = (z - e).inv() * x;
            s += d;
            mag += d.norm();
        }
        let res = (s - mu).norm() / (mag + mu.norm());
        if res > 1e-9 {
            return Err(format!("root {z} has relative residual {res:e}"));
        }
    }
    Ok(())
}

/// Continuous square-root branch for the two-level discriminant.
#[derive(Debug, Clone, Copy)]
pub struct SqrtBranch {
    last: Complex64,
}

impl SqrtBranch {
    pub fn starting_at(value: Complex64) -> Self {
        SqrtBranch { last: value }
    }

    /// The square root of `d` nearest the previously returned value.
    pub fn next(&mut self, d: Complex64) -> Complex64 {
        let s = d.sqrt();
        self.last = if (s - self.last).norm() <= (s + self.last).norm() { s } else { -s };
        self.last
    }

    pub fn current(&self) -> Complex64 {
        self.last
    }
}

/// `(eps1 - eps2)^2 - 2 i Lambda (eps1 - eps2) cos 2 omega + (i Lambda)^2`.
pub fn two_level_discriminant(eps1: f64, eps2: f64, omega: Angle, lambda: Complex64) -> Complex64 {
    let a = eps1 - eps2;
    let c2 = (2.0 * omega.radians()).cos();
    let il = I * lambda;
    Complex64::new(a * a, 0.0) - il * (2.0 * a * c2) + il * il
}

/// The pair `(E_1, E_2)` for a given square root of the discriminant.
pub fn two_level_energies(eps1: f64, eps2: f64, lambda: Complex64, root: Complex64) -> (Complex64, Complex64) {
    let centre = (Complex64::new(eps1 + eps2, 0.0) - I * lambda) * 0.5;
    (centre + root * 0.5, centre - root * 0.5)
}

/// Closed-form two-level eigenvalues with the square root continued along the
/// straight path `t Lambda`, `t: 0 -> 1`, from `sqrt(D(0)) = eps1 - eps2`, so
/// that `E_1(0) = eps1`.
pub fn two_level_closed_form(
    eps1: f64,
    eps2: f64,
    omega: Angle,
    coupling: &CouplingParameter,
) -> Result<(Complex64, Complex64)> {
    if eps1 == eps2 {
        return Err(Error::InvalidSpec("eps1 = eps2".into()));
    }
    Ok(two_level_closed_form_at(eps1, eps2, omega, coupling.value()))
}

pub fn two_level_closed_form_at(eps1: f64, eps2: f64, omega: Angle, lambda: Complex64) -> (Complex64, Complex64) {
    const STEPS: usize = 512;
    let mut branch = SqrtBranch::starting_at(Complex64::new(eps1 - eps2, 0.0));
    for s in 1..=STEPS {
        let t = s as f64 / STEPS as f64;
        branch.next(two_level_discriminant(eps1, eps2, omega, lambda * t));
    }
    two_level_energies(eps1, eps2, lambda, branch.current())
}
