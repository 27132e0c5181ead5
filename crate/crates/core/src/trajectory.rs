//! Eigenvalue trajectories over a real lambda grid at fixed phase: matched
//! paths, the broad (collective) state, turning points and the order parameter.

use num_complex::Complex64;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::model::{Angle, CouplingParameter, EffectiveModel};
use crate::par::{self, Execution};
use crate::secular::{eigenvalues, Spectrum};

/// A step is accepted when every path moves less than this fraction of its
/// distance to the nearest other eigenvalue at the start of the step.
pub const MATCH_FRACTION: f64 = 0.5;
/// Bisection depth for unresolved steps.
pub const MAX_REFINEMENT_DEPTH: usize = 12;
/// Minimal prominence of a turning point in `Im E`.
pub const TURNING_PROMINENCE: f64 = 1e-4;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TurningPoint {
    pub lambda: f64,
    pub energy: Complex64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TrajectoryBundle {
    pub lambda_grid: Vec<f64>,
    pub phi: Angle,
    /// `paths[k][i]` is the eigenvalue on path `k` at `lambda_grid[i]`; path
    /// `k` starts at `epsilon_k`.
    pub paths: Vec<Vec<Complex64>>,
    /// Path with the largest `|Im E|` at the grid end.
    pub broad_index: usize,
    /// Local minima of `Im E` per path.
    pub turning_points: Vec<Vec<TurningPoint>>,
    /// Largest displacement of any path over each step (first entry: from `epsilon`).
    pub matching_quality: Vec<f64>,
    /// Number of bisection points inserted while matching.
    pub refinements: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct OrderParameterCurve {
    pub lambda_grid: Vec<f64>,
    pub gamma0_over_n: Vec<f64>,
    /// Centered differences, one-sided at the ends.
    pub derivative: Vec<f64>,
}

pub fn validate_grid(grid: &[f64]) -> Result<()> {
    if grid.is_empty() {
        return Err(Error::InvalidGrid("empty lambda grid".into()));
    }
    if grid.iter().any(|x| !(x.is_finite() && *x > 0.0)) {
        return Err(Error::InvalidGrid("lambda grid must be finite and positive".into()));
    }
    if grid.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::InvalidGrid("lambda grid must be strictly increasing".into()));
    }
    Ok(())
}

pub fn sweep(model: &EffectiveModel, phi: Angle, grid: &[f64]) -> Result<TrajectoryBundle> {
    sweep_with(model, phi, grid, Execution::default())
}

pub fn sweep_with(
    model: &EffectiveModel,
    phi: Angle,
    grid: &[f64],
    exec: Execution,
) -> Result<TrajectoryBundle> {
    validate_grid(grid)?;
    let solve = |lam: f64| eigenvalues(model, &CouplingParameter::new(lam, phi)?);
    let spectra = par::try_map(exec, grid, |&lam| solve(lam))?;
    let start: Vec<Complex64> = model.epsilons().iter().map(|&e| Complex64::new(e, 0.0)).collect();
    let mut current = start;
    let mut lo = 0.0;
    let mut columns = Vec::with_capacity(grid.len());
    let mut matching_quality = Vec::with_capacity(grid.len());
    let mut refinements = 0;
    for (&lam, next) in grid.iter().zip(spectra) {
        let ordered = advance(&solve, lo, lam, &current, next, 0, &mut refinements)?;
        matching_quality.push(
            current
                .iter()
                .zip(&ordered)
                .map(|(a, b)| (a - b).norm())
                .fold(0.0, f64::max),
        );
        columns.push(ordered.clone());
        current = ordered;
        lo = lam;
    }
    let n = model.n();
    let paths: Vec<Vec<Complex64>> = (0..n).map(|k| columns.iter().map(|c| c[k]).collect()).collect();
    let broad_index = (0..n)
        .max_by(|&a, &b| {
            let ia = paths[a].last().unwrap().im.abs();
            let ib = paths[b].last().unwrap().im.abs();
            ia.total_cmp(&ib).then(b.cmp(&a))
        })
        .unwrap();
    let turning_points = paths.iter().map(|p| turning_points(grid, p)).collect();
    Ok(TrajectoryBundle {
        lambda_grid: grid.to_vec(),
        phi,
        paths,
        broad_index,
        turning_points,
        matching_quality,
        refinements,
    })
}

/// Orders `next` along the paths ending in `prev`, bisecting `[lo, hi]` when
/// a step is too large to be matched unambiguously.
fn advance<F>(
    solve: &F,
    lo: f64,
    hi: f64,
    prev: &[Complex64],
    next: Vec<Complex64>,
    depth: usize,
    refinements: &mut usize,
) -> Result<Vec<Complex64>>
where
    F: Fn(f64) -> Result<Vec<Complex64>>,
{
    let perm = assign(prev, &next);
    let ordered: Vec<Complex64> = perm.iter().map(|&j| next[j]).collect();
    if step_is_safe(prev, &ordered) {
        return Ok(ordered);
    }
    if depth >= MAX_REFINEMENT_DEPTH {
        return Err(Error::TrajectoryAmbiguity { lo, hi });
    }
    let mid = 0.5 * (lo + hi);
    *refinements += 1;
    let mid_ordered = advance(solve, lo, mid, prev, solve(mid)?, depth + 1, refinements)?;
    advance(solve, mid, hi, &mid_ordered, next, depth + 1, refinements)
}

fn step_is_safe(prev: &[Complex64], ordered: &[Complex64]) -> bool {
    let n = prev.len();
    if n < 2 {
        return true;
    }
    let mut sorted: Vec<(usize, Complex64)> = prev.iter().copied().enumerate().collect();
    sorted.sort_by(|a, b| a.1.re.total_cmp(&b.1.re));
    let mut nearest = vec![f64::INFINITY; n];
    // Sweep in Re order; a neighbour farther in Re than the best so far cannot be closer.
    for a in 0..n {
        let (i, zi) = sorted[a];
        let mut best = f64::INFINITY;
        for &(_, zj) in sorted[a + 1..].iter() {
            if zj.re - zi.re >= best {
                break;
            }
            best = best.min((zi - zj).norm());
        }
        for &(_, zj) in sorted[..a].iter().rev() {
            if zi.re - zj.re >= best {
                break;
            }
            best = best.min((zi - zj).norm());
        }
        nearest[i] = best;
    }
    (0..n).all(|i| (prev[i] - ordered[i]).norm() < MATCH_FRACTION * nearest[i])
}

/// Minimal-total-distance assignment of `next` to `prev`: `result[i]` is the
/// index in `next` taken by path `i`. Row-wise nearest neighbours are used
/// when they form a bijection (then optimal); otherwise the Hungarian method.
pub fn assign(prev: &[Complex64], next: &[Complex64]) -> Vec<usize> {
    let n = prev.len();
    let mut taken = vec![false; n];
    let mut greedy = Vec::with_capacity(n);
    for p in prev {
        let j = (0..n)
            .min_by(|&a, &b| (p - next[a]).norm().total_cmp(&(p - next[b]).norm()))
            .unwrap();
        if taken[j] {
            return hungarian(prev, next);
        }
        taken[j] = true;
        greedy.push(j);
    }
    greedy
}

/// O(n^3) Hungarian method with potentials on `|prev_i - next_j|`.
fn hungarian(prev: &[Complex64], next: &[Complex64]) -> Vec<usize> {
    let n = prev.len();
    let cost = |i: usize, j: usize| (prev[i] - next[j]).norm();
    let mut u = vec![0.0; n + 1];
    let mut v = vec![0.0; n + 1];
    let mut owner = vec![0usize; n + 1];
    let mut way = vec![0usize; n + 1];
    for i in 1..=n {
        owner[0] = i;
        let mut j0 = 0;
        let mut minv = vec![f64::INFINITY; n + 1];
        let mut used = vec![false; n + 1];
        loop {
            used[j0] = true;
            let i0 = owner[j0];
            let mut delta = f64::INFINITY;
            let mut j1 = 0;
            for j in 1..=n {
                if used[j] {
                    continue;
                }
                let cur = cost(i0 - 1, j - 1) - u[i0] - v[j];
                if cur < minv[j] {
                    minv[j] = cur;
                    way[j] = j0;
                }
                if minv[j] < delta {
                    delta = minv[j];
                    j1 = j;
                }
            }
            for j in 0..=n {
                if used[j] {
                    u[owner[j]] += delta;
                    v[j] -= delta;
                } else {
                    minv[j] -= delta;
                }
            }
            j0 = j1;
            if owner[j0] == 0 {
                break;
            }
        }
        loop {
            let j1 = way[j0];
            owner[j0] = owner[j1];
            j0 = j1;
            if j0 == 0 {
                break;
            }
        }
    }
    let mut result = vec![0; n];
    for j in 1..=n {
        result[owner[j] - 1] = j - 1;
    }
    result
}

/// Interior local minima of `Im E` whose prominence is at least [`TURNING_PROMINENCE`].
pub fn turning_points(grid: &[f64], path: &[Complex64]) -> Vec<TurningPoint> {
    let y: Vec<f64> = path.iter().map(|z| z.im).collect();
    let m = y.len();
    let mut out = Vec::new();
    for i in 1..m.saturating_sub(1) {
        if !(y[i] < y[i - 1] && y[i] <= y[i + 1]) {
            continue;
        }
        let mut left = y[i];
        for &yj in y[..i].iter().rev() {
            if yj < y[i] {
                break;
            }
            left = left.max(yj);
        }
        let mut right = y[i];
        for &yj in &y[i + 1..] {
            if yj < y[i] {
                break;
            }
            right = right.max(yj);
        }
        if left.min(right) - y[i] >= TURNING_PROMINENCE {
            out.push(TurningPoint {
                lambda: grid[i],
                energy: path[i],
            });
        }
    }
    out
}

/// `Gamma_0 / N` of the broad path, with `Gamma_0 = -2 Im E_broad`.
pub fn order_parameter(bundle: &TrajectoryBundle) -> Result<OrderParameterCurve> {
    if bundle.phi.degrees() != 0.0 {
        return Err(Error::InvalidCoupling("order parameter needs phi = 0".into()));
    }
    let n = bundle.paths.len() as f64;
    let g: Vec<f64> = bundle.paths[bundle.broad_index]
        .iter()
        .map(|z| -2.0 * z.im / n)
        .collect();
    let derivative = centered_differences(&bundle.lambda_grid, &g);
    Ok(OrderParameterCurve {
        lambda_grid: bundle.lambda_grid.clone(),
        gamma0_over_n: g,
        derivative,
    })
}

pub fn centered_differences(x: &[f64], y: &[f64]) -> Vec<f64> {
    let m = x.len();
    if m < 2 {
        return vec![0.0; m];
    }
    (0..m)
        .map(|i| {
            let (a, b) = match i {
                0 => (0, 1),
                _ if i == m - 1 => (m - 2, m - 1),
                _ => (i - 1, i + 1),
            };
            (y[b] - y[a]) / (x[b] - x[a])
        })
        .collect()
}

/// Splits the widths `Gamma_k = -2 Im E_k` into the broadest one and the rest
/// (in eigenvalue order).
pub fn width_partition(spectrum: &Spectrum) -> Result<(f64, Vec<f64>)> {
    let l = spectrum.lambda_value();
    if !(l.im == 0.0 && l.re > 0.0) {
        return Err(Error::InvalidCoupling(
            "width partition needs real positive Lambda".into(),
        ));
    }
    let widths = spectrum.widths();
    let broad = (0..widths.len())
        .max_by(|&a, &b| widths[a].total_cmp(&widths[b]).then(b.cmp(&a)))
        .unwrap();
    let trapped = widths
        .iter()
        .enumerate()
        .filter(|&(k, _)| k != broad)
        .map(|(_, &g)| g)
        .collect();
    Ok((widths[broad], trapped))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{build_perturbed_fence, build_picket_fence, build_two_level};
    use crate::secular::eigen_spectrum;
    use std::f64::consts::PI;

    fn grid(start: f64, stop: f64, step: f64) -> Vec<f64> {
        let m = ((stop - start) / step).round() as usize;
        (0..=m).map(|i| start + step * i as f64).collect()
    }

    #[test]
    fn grid_validation() {
        let m = build_picket_fence(3).unwrap();
        assert!(matches!(sweep(&m, Angle::ZERO, &[]), Err(Error::InvalidGrid(_))));
        assert!(sweep(&m, Angle::ZERO, &[0.1, 0.1]).is_err());
        assert!(sweep(&m, Angle::ZERO, &[0.0, 0.1]).is_err());
    }

    #[test]
    fn hungarian_finds_the_optimum() {
        let prev = [Complex64::new(0.0, 0.0), Complex64::new(1.0, 0.0), Complex64::new(1.1, 0.0)];
        let next = [Complex64::new(1.05, 0.0), Complex64::new(2.0, 0.0), Complex64::new(0.1, 0.0)];
        let perm = hungarian(&prev, &next);
        let total: f64 = perm.iter().enumerate().map(|(i, &j)| (prev[i] - next[j]).norm()).sum();
        let mut best = f64::INFINITY;
        for p in [[0, 1, 2], [0, 2, 1], [1, 0, 2], [1, 2, 0], [2, 0, 1], [2, 1, 0]] {
            let t: f64 = p.iter().enumerate().map(|(i, &j)| (prev[i] - next[j]).norm()).sum();
            best = best.min(t);
        }
        assert!((total - best).abs() < 1e-12);
        assert_eq!(assign(&prev, &next), perm);
    }

    #[test]
    fn central_path_stays_on_imaginary_axis() {
        let m = build_picket_fence(15).unwrap();
        let b = sweep(&m, Angle::ZERO, &grid(0.001, 2.0, 0.001)).unwrap();
        assert_eq!(b.paths.len(), 15);
        assert!(b.paths.iter().all(|p| p.len() == 2000));
        assert!(b.paths[7].iter().all(|z| z.re.abs() < 1e-9));
        let (mut big, mut small) = (0, 0);
        for p in &b.paths {
            let g = -2.0 * p.last().unwrap().im;
            if g > 1.0 {
                big += 1;
            } else if g < 1.5 * 2.0 / (PI * PI * 2.0) {
                small += 1;
            }
        }
        assert_eq!((big, small), (1, 14));
        assert_eq!(b.broad_index, 7);
        for (k, p) in b.paths.iter().enumerate() {
            assert!((p[0] - m.epsilons()[k]).norm() < 0.01);
        }
    }

    #[test]
    fn turning_points_deepen_with_n() {
        let g = grid(0.001, 2.0, 0.001);
        let depth = |n: usize| {
            let b = sweep(&build_picket_fence(n).unwrap(), Angle::ZERO, &g).unwrap();
            let k = n / 2 + 1;
            b.turning_points[k].first().map(|t| -t.energy.im).unwrap()
        };
        assert!(depth(43) > depth(15));
    }

    #[test]
    fn reversed_sweep_reproduces_matching() {
        let m = build_perturbed_fence(9, 0.2, 5).unwrap();
        let g = grid(0.01, 1.5, 0.01);
        let f = sweep(&m, Angle::ZERO, &g).unwrap();
        let spectra: Vec<Vec<Complex64>> = g
            .iter()
            .map(|&l| eigenvalues(&m, &CouplingParameter::real(l).unwrap()).unwrap())
            .collect();
        let mut current: Vec<Complex64> = f.paths.iter().map(|p| *p.last().unwrap()).collect();
        for i in (0..g.len() - 1).rev() {
            let perm = assign(&current, &spectra[i]);
            current = perm.iter().map(|&j| spectra[i][j]).collect();
            for (k, z) in current.iter().enumerate() {
                assert_eq!(*z, f.paths[k][i]);
            }
        }
    }

    #[test]
    fn order_parameter_limits() {
        let m = build_picket_fence(101).unwrap();
        let g = grid(0.002, 1.0, 0.002);
        let b = sweep(&m, Angle::ZERO, &g).unwrap();
        let op = order_parameter(&b).unwrap();
        assert!(op.gamma0_over_n[0] < 1e-3);
        assert!(op.gamma0_over_n.iter().all(|&x| x >= 0.0));
        let below = op.derivative[(0.2 / 0.002) as usize - 1];
        let above = op.derivative[(0.5 / 0.002) as usize - 1];
        assert!(below < 0.5 && above > 2.0, "{below} {above}");
    }

    #[test]
    fn width_partition_examples() {
        let m = build_picket_fence(101).unwrap();
        let sp = eigen_spectrum(&m, &CouplingParameter::real(10.0).unwrap()).unwrap();
        let (broad, trapped) = width_partition(&sp).unwrap();
        let total = broad + trapped.iter().sum::<f64>();
        assert!(((total - 2.0 * 10.0 * 101.0) / total).abs() < 1e-9);
        assert!(broad / total >= 0.95);
        let sp = eigen_spectrum(&m, &CouplingParameter::real(0.1).unwrap()).unwrap();
        let (broad, trapped) = width_partition(&sp).unwrap();
        for g in trapped.iter().chain([&broad]) {
            assert!((g - 0.2).abs() < 0.25 * 0.2, "{g}");
        }
        let m = build_two_level(0.0, 1.0, Angle::from_degrees(45.0)).unwrap();
        let sp = eigen_spectrum(&m, &CouplingParameter::real(50.0).unwrap()).unwrap();
        let (broad, trapped) = width_partition(&sp).unwrap();
        assert!((broad - 100.0).abs() < 0.1 && trapped[0] < 0.1);
        let sp = eigen_spectrum(&m, &CouplingParameter::new(1.0, Angle::from_degrees(30.0)).unwrap()).unwrap();
        assert!(width_partition(&sp).is_err());
    }
}
