//! Independent eigenvalue oracle for small models: complex Schur
//! decomposition of the dense matrix. Nothing here touches the secular path.
//! Also a general polynomial root finder.

use nalgebra::DMatrix;
use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::model::{CouplingParameter, EffectiveModel};

pub const DENSE_ORACLE_MAX_N: usize = 16;

const ZERO: Complex64 = Complex64 { re: 0.0, im: 0.0 };
const ONE: Complex64 = Complex64 { re: 1.0, im: 0.0 };

pub fn dense_oracle(model: &EffectiveModel, coupling: &CouplingParameter) -> Result<Vec<Complex64>> {
    dense_oracle_at(model, coupling.value())
}

pub fn dense_oracle_at(model: &EffectiveModel, lambda: Complex64) -> Result<Vec<Complex64>> {
    let n = model.n();
    if n > DENSE_ORACLE_MAX_N {
        return Err(Error::OracleRange {
            n,
            limit: DENSE_ORACLE_MAX_N,
        });
    }
    let h = DMatrix::from_row_slice(n, n, &model.dense_hamiltonian(lambda));
    let schur = nalgebra::Schur::try_new(h, f64::EPSILON, 10_000).ok_or_else(|| Error::SolverFailure {
        lambda,
        reason: "dense Schur iteration did not converge".into(),
    })?;
    let mut roots: Vec<Complex64> = schur
        .eigenvalues()
        .ok_or_else(|| Error::SolverFailure {
            lambda,
            reason: "dense Schur form not triangular".into(),
        })?
        .iter()
        .copied()
        .collect();
    roots.sort_by(|a, b| a.re.total_cmp(&b.re).then(a.im.total_cmp(&b.im)));
    Ok(roots)
}

/// Horner evaluation of `p` and `p'` (ascending coefficients).
fn horner(coeffs: &[Complex64], z: Complex64) -> (Complex64, Complex64) {
    let mut p = ZERO;
    let mut dp = ZERO;
    for &c in coeffs.iter().rev() {
        dp = dp * z + p;
        p = p * z + c;
    }
    (p, dp)
}

/// All roots of a polynomial given by ascending coefficients. Leading zero
/// coefficients are dropped; the result has `degree` entries.
pub fn polynomial_roots(coeffs: &[Complex64]) -> Vec<Complex64> {
    let mut c: Vec<Complex64> = coeffs.to_vec();
    while c.len() > 1 && c[c.len() - 1] == ZERO {
        c.pop();
    }
    let deg = c.len() - 1;
    if deg == 0 {
        return Vec::new();
    }
    let lead = c[deg];
    let monic: Vec<Complex64> = c.iter().map(|x| x / lead).collect();
    // Cauchy bound for the initial circle.
    let bound = 1.0 + monic[..deg].iter().map(|x| x.norm()).fold(0.0, f64::max);
    let r0 = bound.min(
        monic[..deg]
            .iter()
            .map(|x| x.norm())
            .sum::<f64>()
            .max(1.0),
    );
    let seed = Complex64::new(0.4, 0.9);
    let mut z: Vec<Complex64> = (0..deg)
        .map(|k| seed.powu(k as u32 + 1) / seed.norm().powi(k as i32 + 1) * r0 * 0.9)
        .collect();
    for _ in 0..5000 {
        let mut moved = 0.0f64;
        for i in 0..deg {
            let (p, _) = horner(&monic, z[i]);
            let mut denom = ONE;
            for j in 0..deg {
                if j != i {
                    denom *= z[i] - z[j];
                }
            }
            if denom == ZERO {
                z[i] += Complex64::new(1e-10, 1e-10);
                moved = f64::INFINITY;
                continue;
            }
            let step = p / denom;
            z[i] -= step;
            moved = moved.max(step.norm() / (1.0 + z[i].norm()));
        }
        if moved < 1e-15 {
            break;
        }
    }
    for zi in z.iter_mut() {
        for _ in 0..3 {
            let (p, dp) = horner(&monic, *zi);
            if dp == ZERO {
                break;
            }
            let cand = *zi - p / dp;
            if horner(&monic, cand).0.norm() < p.norm() {
                *zi = cand;
            } else {
                break;
            }
        }
    }
    z
}
