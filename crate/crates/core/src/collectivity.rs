//! Collectivity diagnostics: the mean Hermitian norm `B` of the c-normalized
//! eigenvectors and per-state participation ratios.

use num_complex::Complex64;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::model::{Angle, CouplingParameter, EffectiveModel};
use crate::par::{self, Execution};
use crate::secular::{eigenvalues_at, hermitian_norms_at, Spectrum};
use crate::trajectory::validate_grid;

/// An interior maximum counts as a peak only when its topographic prominence
/// is at least this fraction of its excess `B - 1`; smaller bumps are finite-N
/// ripples on a flat curve.
pub const PEAK_MIN_RELATIVE_PROMINENCE: f64 = 0.5;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Peak {
    pub lambda: f64,
    pub value: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CollectivityCurve {
    /// Grid points where `B` is defined.
    pub lambda_grid: Vec<f64>,
    pub phi: Angle,
    pub b_values: Vec<f64>,
    /// Parabolic refinement of the grid maximum; `None` when the maximum sits
    /// on the grid boundary or is not prominent (see [`PEAK_MIN_RELATIVE_PROMINENCE`]).
    pub peak: Option<Peak>,
    /// Largest grid value, wherever it sits.
    pub grid_max: Option<Peak>,
    /// Prominence of the grid maximum divided by its excess `B - 1`.
    pub relative_prominence: Option<f64>,
    /// Grid points skipped because they sit numerically on an EP.
    pub skipped: Vec<f64>,
    pub n_states: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ParticipationReport {
    /// `PR_k = (sum_i |psi_ki|^2)^2 / sum_i |psi_ki|^4`.
    pub pr: Vec<f64>,
    /// State with the largest width.
    pub broad_index: usize,
    pub broad_state_pr: f64,
}

/// `B = (1/M) sum_k <psi_k|psi_k>` over the `M` states of the model.
pub fn b_measure(model: &EffectiveModel, coupling: &CouplingParameter) -> Result<f64> {
    b_measure_at(model, coupling.value())
}

pub fn b_measure_at(model: &EffectiveModel, lambda: Complex64) -> Result<f64> {
    let eigs = eigenvalues_at(model, lambda)?;
    let norms = hermitian_norms_at(model, lambda, &eigs).map_err(|e| match e {
        Error::IllConditionedNormalization { lambda, .. } => Error::BUndefinedAtEp { lambda },
        other => other,
    })?;
    Ok(norms.iter().sum::<f64>() / norms.len() as f64)
}

pub fn b_curve(model: &EffectiveModel, phi: Angle, grid: &[f64]) -> Result<CollectivityCurve> {
    b_curve_with(model, phi, grid, Execution::default())
}

pub fn b_curve_with(
    model: &EffectiveModel,
    phi: Angle,
    grid: &[f64],
    exec: Execution,
) -> Result<CollectivityCurve> {
    validate_grid(grid)?;
    let values = par::map(exec, grid, |&lam| {
        CouplingParameter::new(lam, phi).and_then(|c| b_measure(model, &c))
    });
    let mut lambda_grid = Vec::with_capacity(grid.len());
    let mut b_values = Vec::with_capacity(grid.len());
    let mut skipped = Vec::new();
    for (&lam, v) in grid.iter().zip(values) {
        match v {
            Ok(b) => {
                lambda_grid.push(lam);
                b_values.push(b);
            }
            Err(Error::BUndefinedAtEp { .. }) => skipped.push(lam),
            Err(e) => return Err(e),
        }
    }
    let grid_max = (0..b_values.len())
        .max_by(|&a, &b| b_values[a].total_cmp(&b_values[b]).then(b.cmp(&a)))
        .map(|i| Peak {
            lambda: lambda_grid[i],
            value: b_values[i],
        });
    let relative_prominence = grid_max.map(|g| prominence(&b_values, g.value) / (g.value - 1.0));
    let peak = interior_peak(&lambda_grid, &b_values)
        .filter(|_| relative_prominence.is_some_and(|r| r >= PEAK_MIN_RELATIVE_PROMINENCE));
    Ok(CollectivityCurve {
        lambda_grid,
        phi,
        b_values,
        peak,
        grid_max,
        relative_prominence,
        skipped,
        n_states: model.n(),
    })
}

/// Prominence of the global maximum `top` of `y`: its height above the higher
/// of the lowest values on either side.
fn prominence(y: &[f64], top: f64) -> f64 {
    let i = y.iter().position(|&v| v == top).unwrap_or(0);
    let left = y[..=i].iter().copied().fold(f64::INFINITY, f64::min);
    let right = y[i..].iter().copied().fold(f64::INFINITY, f64::min);
    top - left.max(right)
}

/// Grid maximum refined by the parabola through it and its neighbours.
pub fn interior_peak(x: &[f64], y: &[f64]) -> Option<Peak> {
    let m = y.len();
    if m < 3 {
        return None;
    }
    let i = (0..m).max_by(|&a, &b| y[a].total_cmp(&y[b]).then(b.cmp(&a)))?;
    if i == 0 || i == m - 1 {
        return None;
    }
    let (x0, x1, x2) = (x[i - 1], x[i], x[i + 1]);
    let (y0, y1, y2) = (y[i - 1], y[i], y[i + 1]);
    let d01 = (y1 - y0) / (x1 - x0);
    let d12 = (y2 - y1) / (x2 - x1);
    let curvature = (d12 - d01) / (x2 - x0);
    if !(curvature < 0.0) {
        return Some(Peak { lambda: x1, value: y1 });
    }
    // Vertex of y0 + d01 (x - x0) + curvature (x - x0)(x - x1).
    let lambda = (0.5 * (x0 + x1) - d01 / (2.0 * curvature)).clamp(x0, x2);
    let value = y0 + d01 * (lambda - x0) + curvature * (lambda - x0) * (lambda - x1);
    Some(Peak { lambda, value })
}

pub fn participation(spectrum: &Spectrum) -> ParticipationReport {
    let pr: Vec<f64> = spectrum
        .eigenvectors()
        .iter()
        .map(|psi| {
            let s2: f64 = psi.iter().map(|c| c.norm_sqr()).sum();
            let s4: f64 = psi.iter().map(|c| c.norm_sqr().powi(2)).sum();
            s2 * s2 / s4
        })
        .collect();
    let widths = spectrum.widths();
    let broad_index = (0..widths.len())
        .max_by(|&a, &b| widths[a].total_cmp(&widths[b]).then(b.cmp(&a)))
        .unwrap_or(0);
    ParticipationReport {
        broad_state_pr: pr.get(broad_index).copied().unwrap_or(f64::NAN),
        pr,
        broad_index,
    }
}
