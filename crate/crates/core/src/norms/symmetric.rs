//! Spectral norm of a symmetric tensor through a single unit vector:
//! for symmetric `T`, `‖T‖_σ = max_{‖x‖=1} |⟨T, x ⊗ … ⊗ x⟩|`.
//!
//! Used as an independent oracle: a dense grid on one sphere followed by a
//! shifted symmetric power iteration from the best grid points.

use crate::error::{Error, Result};
use crate::numeric::{dot, normalize};
use crate::tensor::DenseTensor;

use super::net::{sphere_grid, MAX_NET_DIM};

#[derive(Debug, Clone, Copy)]
pub struct SymmetricOptions {
    /// Covering radius of the grid on the unit sphere.
    pub grid_epsilon: f64,
    /// Number of best grid points that are polished.
    pub polish_starts: usize,
    pub polish_iters: usize,
    /// Entrywise tolerance of the symmetry check.
    pub symmetry_tol: f64,
}

impl Default for SymmetricOptions {
    fn default() -> Self {
        Self {
            grid_epsilon: 0.02,
            polish_starts: 8,
            polish_iters: 5000,
            symmetry_tol: 1e-12,
        }
    }
}

fn power(t: &DenseTensor, x: &[f64]) -> Vec<Vec<f64>> {
    vec![x.to_vec(); t.order()]
}

fn form(t: &DenseTensor, x: &[f64]) -> f64 {
    t.contract_all(&power(t, x)).expect("lengths match")
}

/// Shifted symmetric power iteration on `s·⟨T, x^d⟩`; with the shift at least
/// `(d−1)·‖T‖_2` each step does not decrease the objective.
fn polish(t: &DenseTensor, mut x: Vec<f64>, iters: usize) -> f64 {
    let d = t.order();
    let alpha = (d.saturating_sub(1)) as f64 * t.frobenius();
    let mut f = form(t, &x);
    let s = if f < 0.0 { -1.0 } else { 1.0 };
    for _ in 0..iters {
        let g = t.contract_except(0, &power(t, &x));
        let mut next: Vec<f64> = g.iter().zip(&x).map(|(gi, xi)| s * gi + alpha * xi).collect();
        if normalize(&mut next) == 0.0 {
            break;
        }
        let fn_ = form(t, &next);
        let moved = 1.0 - dot(&next, &x).abs();
        if s * fn_ < s * f {
            break;
        }
        x = next;
        f = fn_;
        if moved < 1e-30 {
            break;
        }
    }
    f.abs()
}

/// `max_{‖x‖=1} |⟨T, x^{⊗d}⟩|` for a symmetric tensor with mode dimension at most 4.
pub fn spectral_symmetric_banach(t: &DenseTensor, opts: &SymmetricOptions) -> Result<f64> {
    if !t.is_symmetric(opts.symmetry_tol) {
        return Err(Error::pre("tensor is not symmetric under mode permutations"));
    }
    let n = t.shape()[0];
    if n > MAX_NET_DIM {
        return Err(Error::pre(format!("sphere grids are limited to dimension {MAX_NET_DIM}, got {n}")));
    }
    if t.is_zero() {
        return Ok(0.0);
    }
    if opts.polish_starts == 0 {
        return Err(Error::param("at least one polish start is required"));
    }
    let grid = sphere_grid(n, opts.grid_epsilon)?;
    let mut scored: Vec<(f64, usize)> = grid.iter().enumerate().map(|(i, x)| (form(t, x).abs(), i)).collect();
    scored.sort_by(|a, b| b.0.total_cmp(&a.0).then(a.1.cmp(&b.1)));
    let best = scored
        .iter()
        .take(opts.polish_starts)
        .map(|&(v, i)| v.max(polish(t, grid[i].clone(), opts.polish_iters)))
        .fold(0.0, f64::max);
    Ok(best)
}
