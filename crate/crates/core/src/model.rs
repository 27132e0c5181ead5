//! Model families: realized `(epsilon, v)` pairs defining
//! `H(Lambda) = diag(epsilon) - i Lambda v v^T`.

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// An angle accepted in degrees and kept in radians.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd, Serialize, Deserialize)]
#[serde(into = "f64", from = "f64")]
pub struct Angle {
    degrees: f64,
}

impl Angle {
    pub const ZERO: Angle = Angle { degrees: 0.0 };

    pub fn from_degrees(degrees: f64) -> Self {
        Angle { degrees }
    }

    pub fn degrees(self) -> f64 {
        self.degrees
    }

    pub fn radians(self) -> f64 {
        self.degrees.to_radians()
    }

    /// `(cos, sin)` with exact values on multiples of 90 degrees.
    pub fn cos_sin(self) -> (f64, f64) {
        let q = self.degrees / 90.0;
        if q.fract() == 0.0 {
            match (q as i64).rem_euclid(4) {
                0 => (1.0, 0.0),
                1 => (0.0, 1.0),
                2 => (-1.0, 0.0),
                _ => (0.0, -1.0),
            }
        } else {
            let r = self.radians();
            (r.cos(), r.sin())
        }
    }
}

impl From<Angle> for f64 {
    fn from(a: Angle) -> f64 {
        a.degrees
    }
}

impl From<f64> for Angle {
    fn from(d: f64) -> Angle {
        Angle::from_degrees(d)
    }
}

/// The complex coupling `Lambda = lambda e^{i phi}`, stored as modulus and phase.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CouplingParameter {
    lambda: f64,
    phi: Angle,
}

impl CouplingParameter {
    pub fn new(lambda: f64, phi: Angle) -> Result<Self> {
        if !(lambda >= 0.0) || !lambda.is_finite() {
            return Err(Error::InvalidCoupling(format!(
                "lambda must be a finite nonnegative number, got {lambda}"
            )));
        }
        if !(0.0..=90.0).contains(&phi.degrees()) {
            return Err(Error::InvalidCoupling(format!(
                "phi must lie in [0, 90] degrees, got {}",
                phi.degrees()
            )));
        }
        Ok(CouplingParameter { lambda, phi })
    }

    /// Real coupling, `phi = 0`.
    pub fn real(lambda: f64) -> Result<Self> {
        Self::new(lambda, Angle::ZERO)
    }

    pub fn lambda(&self) -> f64 {
        self.lambda
    }

    pub fn phi(&self) -> Angle {
        self.phi
    }

    pub fn value(&self) -> Complex64 {
        let (c, s) = self.phi.cos_sin();
        Complex64::new(self.lambda * c, self.lambda * s)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SpacingEnsemble {
    /// Exponential spacings with unit mean.
    Poisson,
    /// GOE Wigner surmise `P(s) = (pi/2) s exp(-pi s^2 / 4)`.
    Wigner,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ModelSpec {
    PicketFence {
        n: usize,
    },
    PerturbedPicketFence {
        n: usize,
        amplitude: f64,
        seed: u64,
    },
    PowerLaw {
        n: usize,
        r: f64,
        t: f64,
    },
    TwoLevel {
        eps1: f64,
        eps2: f64,
        omega: Angle,
    },
    RandomSpacing {
        n: usize,
        ensemble: SpacingEnsemble,
        seed: u64,
    },
}

impl ModelSpec {
    pub fn n(&self) -> usize {
        match *self {
            ModelSpec::PicketFence { n }
            | ModelSpec::PerturbedPicketFence { n, .. }
            | ModelSpec::PowerLaw { n, .. }
            | ModelSpec::RandomSpacing { n, .. } => n,
            ModelSpec::TwoLevel { .. } => 2,
        }
    }

    /// Same family at a different size. Two-level specs are returned unchanged.
    pub fn with_n(&self, n: usize) -> ModelSpec {
        let mut spec = self.clone();
        match &mut spec {
            ModelSpec::PicketFence { n: m }
            | ModelSpec::PerturbedPicketFence { n: m, .. }
            | ModelSpec::PowerLaw { n: m, .. }
            | ModelSpec::RandomSpacing { n: m, .. } => *m = n,
            ModelSpec::TwoLevel { .. } => {}
        }
        spec
    }

    pub fn build(&self) -> Result<EffectiveModel> {
        match *self {
            ModelSpec::PicketFence { n } => build_picket_fence(n),
            ModelSpec::PerturbedPicketFence { n, amplitude, seed } => {
                build_perturbed_fence(n, amplitude, seed)
            }
            ModelSpec::PowerLaw { n, r, t } => build_power_law(n, r, t),
            ModelSpec::TwoLevel { eps1, eps2, omega } => build_two_level(eps1, eps2, omega),
            ModelSpec::RandomSpacing { n, ensemble, seed } => {
                build_random_spacing(n, ensemble, seed)
            }
        }
    }

    pub fn label(&self) -> String {
        match *self {
            ModelSpec::PicketFence { n } => format!("picket_n{n}"),
            ModelSpec::PerturbedPicketFence { n, amplitude, seed } => {
                format!("perturbed_n{n}_a{amplitude}_s{seed}")
            }
            ModelSpec::PowerLaw { n, r, t } => format!("powerlaw_n{n}_r{r}_t{t}"),
            ModelSpec::TwoLevel { eps1, eps2, omega } => {
                format!("twolevel_{eps1}_{eps2}_w{}", omega.degrees())
            }
            ModelSpec::RandomSpacing { n, ensemble, seed } => {
                let e = match ensemble {
                    SpacingEnsemble::Poisson => "poisson",
                    SpacingEnsemble::Wigner => "wigner",
                };
                format!("{e}_n{n}_s{seed}")
            }
        }
    }
}

/// Diagonal energies `epsilon_k` and real couplings `v_k` of one realized model.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EffectiveModel {
    epsilons: Vec<f64>,
    couplings: Vec<f64>,
    spec: ModelSpec,
}

impl EffectiveModel {
    /// Validates lengths and strict ordering of the energies.
    pub fn new(epsilons: Vec<f64>, couplings: Vec<f64>, spec: ModelSpec) -> Result<Self> {
        if epsilons.is_empty() {
            return Err(Error::InvalidSpec("model needs at least one state".into()));
        }
        if epsilons.len() != couplings.len() {
            return Err(Error::InvalidSpec(format!(
                "{} energies but {} couplings",
                epsilons.len(),
                couplings.len()
            )));
        }
        if epsilons.iter().chain(&couplings).any(|x| !x.is_finite()) {
            return Err(Error::InvalidSpec("non-finite model entry".into()));
        }
        if let Some(w) = epsilons.windows(2).find(|w| w[1] <= w[0]) {
            return Err(Error::InvalidSpec(format!(
                "energies must be strictly increasing ({} then {})",
                w[0], w[1]
            )));
        }
        Ok(EffectiveModel {
            epsilons,
            couplings,
            spec,
        })
    }

    pub fn n(&self) -> usize {
        self.epsilons.len()
    }

    pub fn epsilons(&self) -> &[f64] {
        &self.epsilons
    }

    pub fn couplings(&self) -> &[f64] {
        &self.couplings
    }

    pub fn spec(&self) -> &ModelSpec {
        &self.spec
    }

    /// `v_k^2`.
    pub fn weights(&self) -> Vec<f64> {
        self.couplings.iter().map(|v| v * v).collect()
    }

    pub fn coupling_norm_sq(&self) -> f64 {
        self.couplings.iter().map(|v| v * v).sum()
    }

    /// Whether `(epsilon, v)` is invariant under `epsilon -> -epsilon` with
    /// index reversal. Such models have EPs closed under both `Lambda -> -Lambda`
    /// and `Lambda -> Lambda*`.
    pub fn is_mirror_symmetric(&self) -> bool {
        let n = self.n();
        (0..n).all(|k| {
            let j = n - 1 - k;
            self.epsilons[k] == -self.epsilons[j]
                && self.couplings[k].abs() == self.couplings[j].abs()
        })
    }

    /// Dense `H(Lambda)` in row-major order.
    pub fn dense_hamiltonian(&self, lambda: Complex64) -> Vec<Complex64> {
        let n = self.n();
        let mil = Complex64::new(0.0, -1.0) * lambda;
        let mut h = vec![Complex64::new(0.0, 0.0); n * n];
        for i in 0..n {
            for j in 0..n {
                h[i * n + j] = mil * (self.couplings[i] * self.couplings[j]);
            }
            h[i * n + i] += self.epsilons[i];
        }
        h
    }
}

pub fn build_picket_fence(n: usize) -> Result<EffectiveModel> {
    if n == 0 {
        return Err(Error::InvalidSpec("picket fence needs N >= 1".into()));
    }
    let eps = picket_energies(n);
    EffectiveModel::new(eps, vec![1.0; n], ModelSpec::PicketFence { n })
}

fn picket_energies(n: usize) -> Vec<f64> {
    let half = (n as f64 - 1.0) / 2.0;
    (0..n).map(|k| k as f64 - half).collect()
}

/// Picket fence with `r_k` uniform in `[-amplitude, amplitude]` added to each level.
///
/// The stream is ChaCha8 seeded with `seed_from_u64(seed)`; `r_k` is drawn in
/// index order as `amplitude * (2u - 1)` with `u` a standard `[0, 1)` sample.
pub fn build_perturbed_fence(n: usize, amplitude: f64, seed: u64) -> Result<EffectiveModel> {
    if n == 0 {
        return Err(Error::InvalidSpec("perturbed fence needs N >= 1".into()));
    }
    if !(amplitude >= 0.0) {
        return Err(Error::InvalidSpec(format!(
            "perturbation amplitude must be nonnegative, got {amplitude}"
        )));
    }
    if amplitude >= 0.5 {
        return Err(Error::InvalidSpec(format!(
            "perturbation amplitude {amplitude} >= 1/2 may break level ordering"
        )));
    }
    let mut eps = picket_energies(n);
    if amplitude > 0.0 {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        for e in eps.iter_mut() {
            let u: f64 = rng.random();
            *e += amplitude * (2.0 * u - 1.0);
        }
    }
    EffectiveModel::new(
        eps,
        vec![1.0; n],
        ModelSpec::PerturbedPicketFence { n, amplitude, seed },
    )
}

/// Index set of the power-law family: `{-N/2..-1, 1..N/2}` for even `N`,
/// `{-(N-1)/2..(N-1)/2}` for odd `N`.
pub fn power_law_indices(n: usize) -> Vec<i64> {
    let h = (n / 2) as i64;
    if n.is_multiple_of(2) {
        (-h..=h).filter(|&k| k != 0).collect()
    } else {
        (-h..=h).collect()
    }
}

/// `|v_k|^2 = |k|^r`, `epsilon_k = sign(k) |k|^{t/2}`. For odd `N` the `k = 0`
/// state has `epsilon_0 = 0` and `v_0 = 1` when `r = 0`, `v_0 = 0` when `r > 0`.
pub fn build_power_law(n: usize, r: f64, t: f64) -> Result<EffectiveModel> {
    if n == 0 {
        return Err(Error::InvalidSpec("power-law model needs N >= 1".into()));
    }
    if !r.is_finite() || !t.is_finite() {
        return Err(Error::InvalidSpec("exponents must be finite".into()));
    }
    if !(t > r + 1.0) {
        return Err(Error::DivergentModel { r, t });
    }
    if t <= 0.0 {
        return Err(Error::InvalidSpec(format!(
            "t = {t} must be positive for increasing energies"
        )));
    }
    if n % 2 == 1 && r < 0.0 {
        return Err(Error::InvalidSpec(format!(
            "odd N includes k = 0, where |k|^r is undefined for r = {r} < 0"
        )));
    }
    let idx = power_law_indices(n);
    let mut eps = Vec::with_capacity(n);
    let mut v = Vec::with_capacity(n);
    for &k in &idx {
        let a = k.unsigned_abs() as f64;
        if k == 0 {
            eps.push(0.0);
            v.push(if r == 0.0 { 1.0 } else { 0.0 });
        } else {
            eps.push((k.signum() as f64) * a.powf(t / 2.0));
            v.push(a.powf(r / 2.0));
        }
    }
    EffectiveModel::new(eps, v, ModelSpec::PowerLaw { n, r, t })
}

/// Two levels coupled through `V = (cos omega, sin omega)`. Energies are
/// stored in increasing order; when `eps1 > eps2` the couplings are swapped
/// along with them.
pub fn build_two_level(eps1: f64, eps2: f64, omega: Angle) -> Result<EffectiveModel> {
    if eps1 == eps2 {
        return Err(Error::InvalidSpec(
            "two-level model with eps1 = eps2 is a genuine degeneracy".into(),
        ));
    }
    let (c, s) = omega.cos_sin();
    let spec = ModelSpec::TwoLevel { eps1, eps2, omega };
    if eps1 < eps2 {
        EffectiveModel::new(vec![eps1, eps2], vec![c, s], spec)
    } else {
        EffectiveModel::new(vec![eps2, eps1], vec![s, c], spec)
    }
}

/// Unit couplings with level spacings drawn from `ensemble` by inverse-CDF
/// sampling (ChaCha8 stream, one uniform per spacing in index order), then
/// centred on zero.
pub fn build_random_spacing(
    n: usize,
    ensemble: SpacingEnsemble,
    seed: u64,
) -> Result<EffectiveModel> {
    if n == 0 {
        return Err(Error::InvalidSpec("random-spacing model needs N >= 1".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut eps = Vec::with_capacity(n);
    let mut x = 0.0;
    eps.push(x);
    for _ in 1..n {
        let u: f64 = rng.random();
        // 1 - u lies in (0, 1]; spacings are strictly positive except for u = 0.
        let tail = (1.0 - u).max(f64::MIN_POSITIVE);
        let s = match ensemble {
            SpacingEnsemble::Poisson => -tail.ln(),
            SpacingEnsemble::Wigner => (-4.0 / std::f64::consts::PI * tail.ln()).sqrt(),
        };
        x += s.max(1e-12);
        eps.push(x);
    }
    let mean = eps.iter().sum::<f64>() / n as f64;
    for e in eps.iter_mut() {
        *e -= mean;
    }
    EffectiveModel::new(
        eps,
        vec![1.0; n],
        ModelSpec::RandomSpacing { n, ensemble, seed },
    )
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rel(a: f64, b: f64) -> f64 {
        (a - b).abs() / b.abs().max(1e-300)
    }

    #[test]
    fn picket_small_cases() {
        let m = build_picket_fence(3).unwrap();
        assert_eq!(m.epsilons(), &[-1.0, 0.0, 1.0]);
        assert_eq!(m.couplings(), &[1.0, 1.0, 1.0]);
        let m = build_picket_fence(2).unwrap();
        assert_eq!(m.epsilons(), &[-0.5, 0.5]);
        let m = build_picket_fence(15).unwrap();
        let expect: Vec<f64> = (-7..=7).map(|k| k as f64).collect();
        assert_eq!(m.epsilons(), expect.as_slice());
        assert!(build_picket_fence(0).is_err());
    }

    #[test]
    fn perturbed_fence_contract() {
        let base = build_picket_fence(19).unwrap();
        let zero = build_perturbed_fence(19, 0.0, 7).unwrap();
        assert_eq!(zero.epsilons(), base.epsilons());

        let a = build_perturbed_fence(19, 0.1, 42).unwrap();
        for (e, p) in a.epsilons().iter().zip(base.epsilons()) {
            assert!((e - p).abs() <= 0.1);
        }
        assert!(a.epsilons() != base.epsilons());
        let b = build_perturbed_fence(19, 0.1, 42).unwrap();
        let bits = |m: &EffectiveModel| m.epsilons().iter().map(|x| x.to_bits()).collect::<Vec<_>>();
        assert_eq!(bits(&a), bits(&b));
        let c = build_perturbed_fence(19, 0.1, 43).unwrap();
        assert_ne!(bits(&a), bits(&c));

        assert!(build_perturbed_fence(5, 0.5, 1).is_err());
        assert!(build_perturbed_fence(5, -0.1, 1).is_err());
    }

    #[test]
    fn power_law_cases() {
        let m = build_power_law(6, 0.0, 2.0).unwrap();
        assert_eq!(m.epsilons(), &[-3.0, -2.0, -1.0, 1.0, 2.0, 3.0]);
        assert!(m.couplings().iter().all(|&v| v == 1.0));

        let m = build_power_law(5, 0.0, 2.0).unwrap();
        assert_eq!(m.epsilons(), &[-2.0, -1.0, 0.0, 1.0, 2.0]);
        assert_eq!(m.couplings()[2], 1.0);

        let m = build_power_law(7, 1.0, 4.0).unwrap();
        assert_eq!(m.epsilons(), &[-9.0, -4.0, -1.0, 0.0, 1.0, 4.0, 9.0]);
        assert_eq!(m.couplings()[3], 0.0);
        assert!((m.couplings()[5] - 2f64.sqrt()).abs() < 1e-15);

        let m = build_power_law(4, 0.0, 4.0).unwrap();
        assert_eq!(m.epsilons(), &[-4.0, -1.0, 1.0, 4.0]);
        assert!(m.couplings().iter().all(|&v| v == 1.0));

        assert_eq!(
            build_power_law(4, 1.0, 2.0),
            Err(Error::DivergentModel { r: 1.0, t: 2.0 })
        );
        assert!(build_power_law(5, -0.5, 1.0).is_err());
    }

    #[test]
    fn two_level_cases() {
        let h = std::f64::consts::FRAC_1_SQRT_2;
        let m = build_two_level(0.0, 1.0, Angle::from_degrees(45.0)).unwrap();
        assert!((m.couplings()[0] - h).abs() < 1e-15 && (m.couplings()[1] - h).abs() < 1e-15);
        let m = build_two_level(0.0, 1.0, Angle::from_degrees(0.0)).unwrap();
        assert_eq!(m.couplings(), &[1.0, 0.0]);
        let m = build_two_level(0.0, 1.0, Angle::from_degrees(30.0)).unwrap();
        assert!((m.couplings()[0] - 3f64.sqrt() / 2.0).abs() < 1e-15);
        assert!((m.couplings()[1] - 0.5).abs() < 1e-15);
        assert!(build_two_level(1.0, 1.0, Angle::from_degrees(10.0)).is_err());

        let m = build_two_level(1.0, 0.0, Angle::from_degrees(30.0)).unwrap();
        assert_eq!(m.epsilons(), &[0.0, 1.0]);
        assert!((m.couplings()[0] - 0.5).abs() < 1e-15);
    }

    #[test]
    fn coupling_norms() {
        let specs = [
            (ModelSpec::PicketFence { n: 11 }, 11.0),
            (
                ModelSpec::PerturbedPicketFence {
                    n: 9,
                    amplitude: 0.2,
                    seed: 3,
                },
                9.0,
            ),
            (
                ModelSpec::TwoLevel {
                    eps1: -0.3,
                    eps2: 2.0,
                    omega: Angle::from_degrees(33.0),
                },
                1.0,
            ),
        ];
        for (s, want) in specs {
            assert!(rel(s.build().unwrap().coupling_norm_sq(), want) < 1e-12);
        }
        for (n, r, t) in [(10usize, 1.0, 4.0), (11, 0.0, 4.0), (9, 0.5, 3.0)] {
            let m = build_power_law(n, r, t).unwrap();
            let want: f64 = power_law_indices(n)
                .iter()
                .map(|&k| if k == 0 { if r == 0.0 { 1.0 } else { 0.0 } } else { (k.abs() as f64).powf(r) })
                .sum();
            assert!(rel(m.coupling_norm_sq(), want) < 1e-12);
        }
    }

    #[test]
    fn random_spacing_is_ordered_and_deterministic() {
        for ens in [SpacingEnsemble::Poisson, SpacingEnsemble::Wigner] {
            let a = build_random_spacing(200, ens, 5).unwrap();
            let b = build_random_spacing(200, ens, 5).unwrap();
            assert_eq!(a, b);
            let mean_spacing = (a.epsilons()[199] - a.epsilons()[0]) / 199.0;
            assert!((mean_spacing - 1.0).abs() < 0.2, "{mean_spacing}");
        }
    }

    #[test]
    fn coupling_parameter_rules() {
        assert!(CouplingParameter::real(-1.0).is_err());
        assert!(CouplingParameter::new(1.0, Angle::from_degrees(91.0)).is_err());
        let c = CouplingParameter::new(2.0, Angle::from_degrees(90.0)).unwrap();
        assert_eq!(c.value(), Complex64::new(0.0, 2.0));
        let c = CouplingParameter::new(2.0, Angle::from_degrees(30.0)).unwrap();
        assert!((c.value() - Complex64::from_polar(2.0, 30f64.to_radians())).norm() < 1e-15);
    }

    #[test]
    fn mirror_symmetry_detection() {
        assert!(build_picket_fence(8).unwrap().is_mirror_symmetric());
        assert!(build_power_law(9, 1.0, 4.0).unwrap().is_mirror_symmetric());
        assert!(!build_perturbed_fence(8, 0.1, 1).unwrap().is_mirror_symmetric());
    }
}
