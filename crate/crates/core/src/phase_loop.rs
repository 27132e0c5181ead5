//! Two-level eigenvector phases: the complex angle `theta` with
//! `psi_1 = (cos theta, sin theta)`, `psi_2 = (-sin theta, cos theta)`,
//! monodromy of loops around an EP, and the omega-comparison experiment.

use num_complex::Complex64;
use serde::Serialize;

use crate::ep::two_level_eps;
use crate::error::{Error, Result};
use crate::model::Angle;
use crate::secular::{two_level_closed_form_at, two_level_discriminant, two_level_energies, SqrtBranch};

const I: Complex64 = Complex64 { re: 0.0, im: 1.0 };

/// `|psi^T psi| / <psi|psi>` below which `theta` is singular.
pub const THETA_SINGULAR_TOL: f64 = crate::secular::NORMALIZATION_TOL;
/// Loops closer than this to an EP are refused.
pub const CONTOUR_EP_DISTANCE: f64 = 1e-6;
/// Target minimal normalized overlap between consecutive loop samples.
pub const LOOP_OVERLAP_TARGET: f64 = 0.99;
/// Below this minimal overlap the loop is unresolved.
pub const LOOP_OVERLAP_FLOOR: f64 = 0.9;
const MAX_DOUBLINGS: usize = 6;

/// Two-level parameters: `epsilon = (eps1, eps2)`, `v = (cos omega, sin omega)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TwoLevel {
    pub eps1: f64,
    pub eps2: f64,
    pub omega: Angle,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ThetaEvaluation {
    pub theta: Complex64,
    pub tan_theta: Complex64,
    /// `E_1`, the eigenvalue of `psi_1`.
    pub energy: Complex64,
    pub psi1: [Complex64; 2],
    pub psi2: [Complex64; 2],
}

/// `theta` for the eigenvalue `E_1` continued from `eps1` along the straight
/// path `t Lambda`, with `tan theta = -i Lambda c s / (E_1 - eps2 + i Lambda s^2)`.
pub fn theta_of(lambda: Complex64, eps1: f64, eps2: f64, omega: Angle) -> Result<ThetaEvaluation> {
    if eps1 == eps2 {
        return Err(Error::InvalidSpec("eps1 = eps2".into()));
    }
    let (e1, _) = two_level_closed_form_at(eps1, eps2, omega, lambda);
    theta_for_energy(lambda, eps1, eps2, omega, e1)
}

/// `theta` for a given eigenvalue `E_1` of the two-level `H(Lambda)`.
pub fn theta_for_energy(
    lambda: Complex64,
    eps1: f64,
    eps2: f64,
    omega: Angle,
    e1: Complex64,
) -> Result<ThetaEvaluation> {
    let (c, s) = omega.cos_sin();
    // Both rows of (H - E_1) psi_1 = 0; the better conditioned one is used.
    let row2 = [e1 - eps2 + I * lambda * (s * s), -I * lambda * (c * s)];
    let row1 = [I * lambda * (c * s), eps1 - I * lambda * (c * c) - e1];
    let norm = |u: &[Complex64; 2]| u[0].norm_sqr() + u[1].norm_sqr();
    let u = if norm(&row2) >= norm(&row1) { row2 } else { row1 };
    let bilinear = u[0] * u[0] + u[1] * u[1];
    if bilinear.norm() <= THETA_SINGULAR_TOL * norm(&u) {
        return Err(Error::ThetaSingular { lambda });
    }
    let mut scale = bilinear.sqrt().inv();
    if (u[0] * scale).re < 0.0 {
        scale = -scale;
    }
    let (cos, sin) = (u[0] * scale, u[1] * scale);
    // e^{i theta} = cos theta + i sin theta.
    let theta = -I * (cos + I * sin).ln();
    Ok(ThetaEvaluation {
        theta,
        tan_theta: sin / cos,
        energy: e1,
        psi1: [cos, sin],
        psi2: [-sin, cos],
    })
}

/// `tan^2 theta = (dE - d + i Lambda cos 2w) / (dE + d - i Lambda cos 2w)` with
/// `dE = E_1 - E_2`, `d = eps1 - eps2`.
pub fn tan_squared_theta(lambda: Complex64, eps1: f64, eps2: f64, omega: Angle, e1: Complex64, e2: Complex64) -> Complex64 {
    let de = e1 - e2;
    let d = eps1 - eps2;
    let c2 = Angle::from_degrees(2.0 * omega.degrees()).cos_sin().0;
    (de - d + I * lambda * c2) / (de + d - I * lambda * c2)
}

/// Signed permutation `psi_i(end) = signs[i] * psi_{permutation[i]}(start)`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LoopResult {
    pub permutation: [usize; 2],
    pub signs: [i8; 2],
    pub windings: i32,
    pub center: Complex64,
    pub radius: f64,
    /// Samples per winding actually used.
    pub samples: usize,
    pub min_step_overlap: f64,
    /// Largest component deviation of the end vectors from the signed permutation.
    pub max_deviation: f64,
    /// The contour and the continued `psi_1`, one entry per sample.
    pub contour: Vec<LoopSample>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct LoopSample {
    pub lambda: Complex64,
    pub energy1: Complex64,
    pub theta: Complex64,
}

impl LoopResult {
    /// The map of `self` applied after `first`.
    pub fn compose_after(&self, first: &LoopResult) -> ([usize; 2], [i8; 2]) {
        compose((self.permutation, self.signs), (first.permutation, first.signs))
    }
}

/// `(b then a)`: `psi_i -> a.s[i] * (b applied to psi_{a.p[i]})`.
pub fn compose(a: ([usize; 2], [i8; 2]), b: ([usize; 2], [i8; 2])) -> ([usize; 2], [i8; 2]) {
    let mut p = [0; 2];
    let mut s = [0; 2];
    for i in 0..2 {
        let j = a.0[i];
        p[i] = b.0[j];
        s[i] = a.1[i] * b.1[j];
    }
    (p, s)
}

/// Continues `(psi_1, psi_2)` counterclockwise around the circle
/// `center + radius e^{i alpha}`, `windings` times, starting at `alpha = 0`.
///
/// The starting labels follow [`theta_of`]: `psi_1` belongs to the eigenvalue
/// continued from `eps1` along the ray to the start point. At every step the
/// common sign of the pair is chosen to maximize the overlap with the
/// previous step. `samples` per winding is doubled until every step overlap
/// reaches [`LOOP_OVERLAP_TARGET`].
pub fn loop_ep(center: Complex64, radius: f64, windings: i32, samples: usize, model: TwoLevel) -> Result<LoopResult> {
    if !(radius > 0.0 && radius.is_finite()) {
        return Err(Error::Contour(format!("radius must be positive, got {radius}")));
    }
    if samples < 64 {
        return Err(Error::Contour(format!("need at least 64 samples, got {samples}")));
    }
    if windings < 0 {
        return Err(Error::Contour("windings must be nonnegative".into()));
    }
    let eps = two_level_eps(model.eps1, model.eps2, model.omega)?;
    let mut enclosed = 0;
    for p in &eps {
        let d = (p.lambda_ep - center).norm();
        if (d - radius).abs() <= CONTOUR_EP_DISTANCE {
            return Err(Error::Contour(format!(
                "circle passes within {:e} of the EP at {}",
                (d - radius).abs(),
                p.lambda_ep
            )));
        }
        if d < radius {
            enclosed += 1;
        }
    }
    if enclosed == 2 && eps[0].lambda_ep != eps[1].lambda_ep {
        return Err(Error::Contour("circle encloses both EPs".into()));
    }
    let mut n = samples;
    for doubling in 0..=MAX_DOUBLINGS {
        let result = run_loop(center, radius, windings, n, model)?;
        if result.min_step_overlap >= LOOP_OVERLAP_TARGET {
            return Ok(result);
        }
        if doubling == MAX_DOUBLINGS {
            if result.min_step_overlap >= LOOP_OVERLAP_FLOOR {
                return Ok(result);
            }
            return Err(Error::LoopResolution {
                min_overlap: result.min_step_overlap,
                samples: n,
            });
        }
        n *= 2;
    }
    unreachable!()
}

fn hermitian_overlap(a: &[Complex64; 2], b: &[Complex64; 2]) -> f64 {
    let dot = a[0].conj() * b[0] + a[1].conj() * b[1];
    let na = (a[0].norm_sqr() + a[1].norm_sqr()).sqrt();
    let nb = (b[0].norm_sqr() + b[1].norm_sqr()).sqrt();
    dot.norm() / (na * nb)
}

fn run_loop(center: Complex64, radius: f64, windings: i32, samples: usize, m: TwoLevel) -> Result<LoopResult> {
    let start = center + radius;
    let (e1, _) = two_level_closed_form_at(m.eps1, m.eps2, m.omega, start);
    let theta0 = theta_for_energy(start, m.eps1, m.eps2, m.omega, e1)?;
    let centre_e = |l: Complex64| two_level_energies(m.eps1, m.eps2, l, Complex64::new(0.0, 0.0)).0;
    let mut branch = SqrtBranch::starting_at((e1 - centre_e(start)) * 2.0);
    let (mut psi1, mut psi2) = (theta0.psi1, theta0.psi2);
    let (start1, start2) = (psi1, psi2);
    let mut min_overlap: f64 = 1.0;
    let total = samples * windings as usize;
    let mut contour = Vec::with_capacity(total + 1);
    contour.push(LoopSample {
        lambda: start,
        energy1: e1,
        theta: theta0.theta,
    });
    for k in 1..=total {
        let alpha = std::f64::consts::TAU * k as f64 / samples as f64;
        let lambda = if k % samples == 0 {
            start
        } else {
            center + Complex64::from_polar(radius, alpha)
        };
        let root = branch.next(two_level_discriminant(m.eps1, m.eps2, m.omega, lambda));
        let (e1, _) = two_level_energies(m.eps1, m.eps2, lambda, root);
        let th = theta_for_energy(lambda, m.eps1, m.eps2, m.omega, e1)?;
        let flip = (psi1[0] * th.psi1[0] + psi1[1] * th.psi1[1]).re < 0.0;
        let sign = if flip { -1.0 } else { 1.0 };
        let next1 = [th.psi1[0] * sign, th.psi1[1] * sign];
        let next2 = [th.psi2[0] * sign, th.psi2[1] * sign];
        min_overlap = min_overlap
            .min(hermitian_overlap(&psi1, &next1))
            .min(hermitian_overlap(&psi2, &next2));
        psi1 = next1;
        psi2 = next2;
        contour.push(LoopSample {
            lambda,
            energy1: e1,
            theta: if flip { th.theta + std::f64::consts::PI } else { th.theta },
        });
    }
    let starts = [start1, start2];
    let ends = [psi1, psi2];
    let mut permutation = [0; 2];
    let mut signs = [1i8; 2];
    let mut max_deviation: f64 = 0.0;
    for i in 0..2 {
        let mut best = (f64::INFINITY, 0, 1i8);
        for (j, s) in starts.iter().enumerate() {
            for sign in [1i8, -1] {
                let dev = (0..2)
                    .map(|c| (ends[i][c] - s[c] * f64::from(sign)).norm())
                    .fold(0.0, f64::max);
                if dev < best.0 {
                    best = (dev, j, sign);
                }
            }
        }
        max_deviation = max_deviation.max(best.0);
        permutation[i] = best.1;
        signs[i] = best.2;
    }
    Ok(LoopResult {
        permutation,
        signs,
        windings,
        center,
        radius,
        samples,
        min_step_overlap: min_overlap,
        max_deviation,
        contour,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct OmegaBranch {
    pub omega: Angle,
    /// `tan theta` at `lambda_max`.
    pub tan_theta_raw: Complex64,
    /// Richardson extrapolation in `1/lambda` from `lambda_max`, `/2`, `/4`.
    pub tan_theta_asymptotic: Complex64,
    /// `tan omega` and `-cot omega`.
    pub tan_omega: f64,
    pub minus_cot_omega: f64,
    pub theta: Complex64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct OmegaComparison {
    pub lambda_max: f64,
    pub delta: Angle,
    pub above: OmegaBranch,
    pub below: OmegaBranch,
    /// `theta(45 + delta) - theta(45 - delta)` at `lambda_max`, reduced modulo `pi`.
    pub theta_difference: Complex64,
}

/// Real-lambda sweeps at `omega = 45 deg +- delta` out to `lambda_max`.
pub fn omega_comparison(eps1: f64, eps2: f64, lambda_max: f64, delta: Angle) -> Result<OmegaComparison> {
    let gap = (eps2 - eps1).abs();
    if !(gap > 0.0) {
        return Err(Error::InvalidSpec("eps1 = eps2".into()));
    }
    if !(lambda_max > 3.0 * gap) {
        return Err(Error::InvalidCoupling(format!(
            "lambda_max = {lambda_max} must exceed 3 |eps2 - eps1| = {}",
            3.0 * gap
        )));
    }
    if !(delta.degrees() > 0.0 && delta.degrees() < 45.0) {
        return Err(Error::InvalidSpec("delta must lie in (0, 45) degrees".into()));
    }
    let branch = |omega: Angle| -> Result<OmegaBranch> {
        let tan_at = |l: f64| theta_of(Complex64::new(l, 0.0), eps1, eps2, omega).map(|t| t.tan_theta);
        let (t1, t2, t4) = (tan_at(lambda_max)?, tan_at(lambda_max / 2.0)?, tan_at(lambda_max / 4.0)?);
        let r1 = t1 * 2.0 - t2;
        let r2 = t2 * 2.0 - t4;
        let asymptotic = (r1 * 4.0 - r2) / 3.0;
        let (c, s) = omega.cos_sin();
        Ok(OmegaBranch {
            omega,
            tan_theta_raw: t1,
            tan_theta_asymptotic: asymptotic,
            tan_omega: s / c,
            minus_cot_omega: -c / s,
            theta: theta_of(Complex64::new(lambda_max, 0.0), eps1, eps2, omega)?.theta,
        })
    };
    let above = branch(Angle::from_degrees(45.0 + delta.degrees()))?;
    let below = branch(Angle::from_degrees(45.0 - delta.degrees()))?;
    let mut diff = above.theta - below.theta;
    diff.re -= std::f64::consts::PI * (diff.re / std::f64::consts::PI).floor();
    Ok(OmegaComparison {
        lambda_max,
        delta,
        above,
        below,
        theta_difference: diff,
    })
}
