//! Property bodies shared by the proptest suite and the acceptance runner.

use ep_atlas::collectivity::b_measure_at;
use ep_atlas::model::{build_picket_fence, EffectiveModel, ModelSpec, SpacingEnsemble};
use ep_atlas::oracle::dense_oracle_at;
use ep_atlas::secular::{eigen_spectrum_at, eigenvalues_at};
use ep_atlas::Error;
use num_complex::Complex64;
use proptest::prelude::*;
use proptest::test_runner::TestCaseError;

pub type Outcome = Result<(), TestCaseError>;

/// Strictly increasing energies with gaps in [0.2, 2) and couplings of
/// magnitude [0.1, 2) with random signs.
pub fn arbitrary_model(max_n: usize) -> impl Strategy<Value = EffectiveModel> {
    (2..=max_n).prop_flat_map(|n| {
        (
            -5.0..5.0f64,
            prop::collection::vec(0.2..2.0f64, n - 1),
            prop::collection::vec((0.1..2.0f64, any::<bool>()), n),
        )
            .prop_map(move |(start, gaps, vs)| {
                let mut eps = vec![start];
                for g in gaps {
                    eps.push(eps.last().unwrap() + g);
                }
                let v = vs.into_iter().map(|(m, neg)| if neg { -m } else { m }).collect();
                let spec = ModelSpec::RandomSpacing {
                    n,
                    ensemble: SpacingEnsemble::Poisson,
                    seed: 0,
                };
                EffectiveModel::new(eps, v, spec).unwrap()
            })
    })
}

pub fn coupling() -> impl Strategy<Value = Complex64> {
    (0.01..5.0f64, 0.0..=90.0f64).prop_map(|(l, phi)| Complex64::from_polar(l, phi.to_radians()))
}

pub fn trace_is_conserved(model: &EffectiveModel, lambda: Complex64) -> Outcome {
    let e = eigenvalues_at(model, lambda).map_err(fail)?;
    let sum: Complex64 = e.iter().sum();
    let want = Complex64::new(model.epsilons().iter().sum(), 0.0) - Complex64::i() * lambda * model.coupling_norm_sq();
    let scale = model.epsilons().iter().map(|x| x.abs()).sum::<f64>() + lambda.norm() * model.coupling_norm_sq();
    prop_assert!((sum - want).norm() <= 1e-10 * scale, "{sum} vs {want}");
    Ok(())
}

pub fn oracle_agrees(model: &EffectiveModel, lambda: Complex64) -> Outcome {
    let a = eigenvalues_at(model, lambda).map_err(fail)?;
    let b = dense_oracle_at(model, lambda).map_err(fail)?;
    let scale = 1.0 + lambda.norm() * model.coupling_norm_sq();
    prop_assert_eq!(a.len(), b.len());
    for (p, q) in [(&a, &b), (&b, &a)] {
        for x in p {
            let d = q.iter().map(|y| (y - x).norm()).fold(f64::INFINITY, f64::min);
            prop_assert!(d <= 1e-8 * scale, "{x} unmatched ({d:e})");
        }
    }
    Ok(())
}

pub fn b_at_least_one(model: &EffectiveModel, lambda: Complex64) -> Outcome {
    match b_measure_at(model, lambda) {
        Ok(b) => prop_assert!(b >= 1.0 - 1e-12, "B = {b}"),
        Err(Error::BUndefinedAtEp { .. }) => {}
        Err(e) => return Err(fail(e)),
    }
    Ok(())
}

pub fn norms_at_least_one(model: &EffectiveModel, lambda: Complex64) -> Outcome {
    match eigen_spectrum_at(model, lambda) {
        Ok(s) => {
            for &h in s.hermitian_norms() {
                prop_assert!(h >= 1.0 - 1e-12, "norm {h}");
            }
        }
        Err(Error::IllConditionedNormalization { .. }) => {}
        Err(e) => return Err(fail(e)),
    }
    Ok(())
}

pub fn imaginary_coupling_real_spectrum(model: &EffectiveModel, lambda: f64) -> Outcome {
    let e = eigenvalues_at(model, Complex64::new(0.0, lambda)).map_err(fail)?;
    let scale = 1.0 + e.iter().map(|z| z.norm()).fold(0.0, f64::max);
    for z in e {
        prop_assert!(z.im.abs() <= 1e-10 * scale, "{z}");
    }
    Ok(())
}

pub fn picket_mirror_symmetric(n: usize, lambda: f64) -> Outcome {
    let model = build_picket_fence(n).map_err(fail)?;
    let e = eigenvalues_at(&model, Complex64::new(lambda, 0.0)).map_err(fail)?;
    for x in &e {
        let m = -x.conj();
        let d = e.iter().map(|y| (y - m).norm()).fold(f64::INFINITY, f64::min);
        prop_assert!(d <= 1e-9 * (1.0 + x.norm()), "{x} has no mirror partner ({d:e})");
    }
    Ok(())
}

fn fail(e: Error) -> TestCaseError {
    TestCaseError::fail(e.to_string())
}
