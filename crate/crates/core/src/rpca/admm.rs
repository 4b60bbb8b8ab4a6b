//! Matrix low-rank plus sparse splitting by ADMM on the augmented Lagrangian
//! `‖L‖_* + λ‖S‖_1 + ⟨Y, M − L − S⟩ + (μ/2)‖M − L − S‖_F²`.

use nalgebra::DMatrix;
use serde::Serialize;

use crate::error::{Error, Result};

use super::instance::{default_lambda, generate_instance, FactorStyle, InstanceSpec};

#[derive(Debug, Clone, Copy)]
pub struct AdmmOptions {
    /// Penalty; defaults to `n1·n2 / (4‖M‖_1)`.
    pub mu: Option<f64>,
    /// Stop once `‖M − L − S‖_F` and the dual residual `μ‖S_k − S_{k−1}‖_F`
    /// are both at most `tol·‖M‖_F`.
    pub tol: f64,
    pub max_iter: usize,
}

impl Default for AdmmOptions {
    fn default() -> Self {
        Self { mu: None, tol: 1e-9, max_iter: 20_000 }
    }
}

#[derive(Debug, Clone)]
pub struct MatrixRpcaSolution {
    pub l: DMatrix<f64>,
    pub s: DMatrix<f64>,
    /// Final multiplier; at the optimum it is a common subgradient.
    pub y: DMatrix<f64>,
    pub mu: f64,
    pub iterations: usize,
    /// Relative primal residual after each iteration.
    pub residuals: Vec<f64>,
    /// Relative dual residual after each iteration.
    pub dual_residuals: Vec<f64>,
}

pub fn solve_matrix_rpca(m: &DMatrix<f64>, lambda: f64, opts: &AdmmOptions) -> Result<MatrixRpcaSolution> {
    if m.is_empty() {
        return Err(Error::dim("empty matrix"));
    }
    if !(lambda > 0.0) || !(opts.tol > 0.0) || opts.max_iter == 0 {
        return Err(Error::param("lambda and tol must be positive, max_iter at least 1"));
    }
    if m.iter().any(|x| !x.is_finite()) {
        return Err(Error::param("M has non-finite entries"));
    }
    let (n1, n2) = m.shape();
    let mnorm = m.norm();
    let zero = || DMatrix::zeros(n1, n2);
    if mnorm == 0.0 {
        return Ok(MatrixRpcaSolution { l: zero(), s: zero(), y: zero(), mu: 1.0, iterations: 0, residuals: vec![0.0], dual_residuals: vec![0.0] });
    }
    let l1: f64 = m.iter().map(|x| x.abs()).sum();
    let mu = opts.mu.unwrap_or((n1 * n2) as f64 / (4.0 * l1));
    if !(mu > 0.0) {
        return Err(Error::param("mu must be positive"));
    }
    let (mut s, mut y) = (zero(), zero());
    let (mut residuals, mut dual_residuals) = (Vec::new(), Vec::new());
    for it in 1..=opts.max_iter {
        let l = singular_value_threshold(&(m - &s + &y / mu), 1.0 / mu);
        let s_next = (m - &l + &y / mu).map(|x| soft(x, lambda / mu));
        let dual = mu * (&s_next - &s).norm() / mnorm;
        s = s_next;
        let r = m - &l - &s;
        y += &r * mu;
        let rel = r.norm() / mnorm;
        residuals.push(rel);
        dual_residuals.push(dual);
        if rel <= opts.tol && dual <= opts.tol {
            return Ok(MatrixRpcaSolution { l, s, y, mu, iterations: it, residuals, dual_residuals });
        }
    }
    Err(Error::Convergence {
        what: "matrix ADMM".into(),
        iterations: opts.max_iter,
        best: residuals.last().zip(dual_residuals.last()).map_or(f64::NAN, |(p, d)| p.max(*d)),
    })
}

fn soft(x: f64, t: f64) -> f64 {
    x.signum() * (x.abs() - t).max(0.0)
}

fn singular_value_threshold(a: &DMatrix<f64>, t: f64) -> DMatrix<f64> {
    let mut svd = crate::numeric::checked_svd(a);
    svd.singular_values.iter_mut().for_each(|s| *s = (*s - t).max(0.0));
    svd.recompose().expect("both factors computed")
}

/// Residuals of the optimality conditions `Y ∈ ∂‖L‖_*` and `Y ∈ λ∂‖S‖_1`.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct MatrixOptimality {
    /// `‖M − L − S‖_F / ‖M‖_F`.
    pub feasibility: f64,
    pub rank: usize,
    /// `max(‖Uᵀ Y − Vᵀ‖_max, ‖Y V − U‖_max)`: `Y` acts as `UVᵀ` on the tangent directions.
    pub tangent: f64,
    /// `‖(I − UUᵀ) Y (I − VVᵀ)‖_2 − 1` (nonpositive when the spectral condition holds).
    pub normal_excess: f64,
    /// `max |Y_ij − λ sign(S_ij)|` on the support of `S`.
    pub sign: f64,
    /// `max |Y_ij| − λ` off the support (nonpositive when the bound holds).
    pub off_support_excess: f64,
}

impl MatrixOptimality {
    pub fn holds(&self, tol: f64) -> bool {
        self.tangent <= tol && self.normal_excess <= tol && self.sign <= tol && self.off_support_excess <= tol
    }
}

/// `rank_tol` is relative to the largest singular value of `L`; entries of `S`
/// with magnitude at most `support_tol` count as zero.
pub fn matrix_optimality(
    m: &DMatrix<f64>,
    sol: &MatrixRpcaSolution,
    lambda: f64,
    rank_tol: f64,
    support_tol: f64,
) -> MatrixOptimality {
    let feasibility = (m - &sol.l - &sol.s).norm() / m.norm().max(f64::MIN_POSITIVE);
    let svd = crate::numeric::checked_svd(&sol.l);
    let (u_all, vt_all) = (svd.u.expect("computed"), svd.v_t.expect("computed"));
    let smax = svd.singular_values.max();
    let keep: Vec<usize> = (0..svd.singular_values.len())
        .filter(|&i| svd.singular_values[i] > rank_tol * smax && smax > 0.0)
        .collect();
    let u = u_all.select_columns(&keep);
    let v = vt_all.transpose().select_columns(&keep);
    let tangent = if keep.is_empty() {
        0.0
    } else {
        (u.transpose() * &sol.y - v.transpose()).amax().max((&sol.y * &v - &u).amax())
    };
    let (n1, n2) = m.shape();
    let pu = DMatrix::identity(n1, n1) - &u * u.transpose();
    let pv = DMatrix::identity(n2, n2) - &v * v.transpose();
    let normal_excess = (pu * &sol.y * pv).singular_values().max() - 1.0;
    let (mut sign, mut off) = (0.0f64, f64::NEG_INFINITY);
    for (yv, sv) in sol.y.iter().zip(sol.s.iter()) {
        if sv.abs() > support_tol {
            sign = sign.max((yv - lambda * sv.signum()).abs());
        } else {
            off = off.max(yv.abs() - lambda);
        }
    }
    MatrixOptimality {
        feasibility,
        rank: keep.len(),
        tangent,
        normal_excess,
        sign,
        off_support_excess: if off.is_finite() { off } else { 0.0 },
    }
}

/// One seeded matrix experiment: generate `L + S`, solve, compare with `L`.
#[derive(Debug, Clone, Serialize)]
pub struct MatrixTrial {
    pub n: usize,
    pub rank: usize,
    pub rho: f64,
    pub seed: u64,
    pub lambda: f64,
    pub support_size: usize,
    pub iterations: usize,
    pub mu: f64,
    /// `‖L̂ − L‖_F / ‖L‖_F`.
    pub l_error: f64,
    /// `‖Ŝ − S‖_F / ‖S‖_F` (zero when `S = 0` is recovered exactly).
    pub s_error: f64,
    pub optimality: MatrixOptimality,
}

/// `lambda` defaults to `1/√n`.
pub fn matrix_trial(n: usize, rank: usize, rho: f64, seed: u64, lambda: Option<f64>, opts: &AdmmOptions) -> Result<MatrixTrial> {
    let inst = generate_instance(&InstanceSpec::new(&[n, n], rank, rho, 1, FactorStyle::Gaussian, seed))?;
    let lambda = lambda.unwrap_or_else(|| default_lambda(&[n, n]));
    let m = DMatrix::from_row_slice(n, n, inst.observed().data());
    let l = DMatrix::from_row_slice(n, n, inst.l.data());
    let s = DMatrix::from_row_slice(n, n, inst.s.data());
    let sol = solve_matrix_rpca(&m, lambda, opts)?;
    let s_norm = s.norm();
    Ok(MatrixTrial {
        n,
        rank,
        rho,
        seed,
        lambda,
        support_size: inst.support.count(),
        iterations: sol.iterations,
        mu: sol.mu,
        l_error: (&sol.l - &l).norm() / l.norm(),
        s_error: if s_norm > 0.0 { (&sol.s - &s).norm() / s_norm } else { sol.s.norm() },
        optimality: matrix_optimality(&m, &sol, lambda, 1e-6, 1e-9),
    })
}
