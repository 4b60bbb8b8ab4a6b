//! Rigorous upper bounds on `‖T‖_σ` by branch and bound over the spheres of
//! all but two modes.
//!
//! For unit vectors on the branched modes, the maximum over the two remaining
//! modes is a matrix spectral norm, computed exactly: `F(x) = ‖A(x)‖` with
//! `A(x) = T(x_1, …, x_m, •, •)`, and `‖T‖_σ = max F`.
//!
//! Cells live on the faces `x_j = 1` of the cube (one face per coordinate
//! suffices because `F(−x) = F(x)`). The map `y ↦ y/‖y‖` restricted to a face
//! has derivative norm `1/‖y‖`, so every point of a box of half-width `w`
//! lies within geodesic distance `ρ = w·√(n−1)/min‖y‖` of the normalized box
//! center `c`.
//!
//! Two bounds hold on a cell whenever it contains a maximizer:
//!
//! * first order: moving the branched vectors a total distance `r = Σρ_k`
//!   changes `F` by at most `r·‖T‖_σ`, so `‖T‖_σ ≤ F(c)/(1 − r)`;
//! * second order: along the product of geodesics from `c` to `x`, every
//!   bilinear value `pᵀA(x)q` has second derivative at most `‖T‖_σ·r²` in
//!   magnitude, so `F(x) ≤ max_δ ‖A(c) + Σ_k A(c_{−k}, δ_k)‖ + ½‖T‖_σ·r²`,
//!   with `δ_k` ranging over tangent vectors of length `ρ_k`. The first term
//!   is convex in `δ`, so its maximum over the cross-polytope of radius
//!   `ρ_k·√(n_k−1)` (which contains the tangent ball) sits at a vertex.
//!   Hence `‖T‖_σ ≤ V/(1 − r²/2)`.
//!
//! The search keeps the smaller of the two, and the largest bound over the
//! live cells is a valid upper bound at every stage.

use std::cmp::Ordering;
use std::collections::BinaryHeap;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::numeric::{matrix_spectral_norm, normalize, unit_vector};
use crate::tensor::DenseTensor;

use super::hopm::{hopm_best_effort, HopmOptions, SpectralResult};
use super::net::{spectral_net_bounds, NetSpec, MAX_NET_DIM};

/// Relative allowance for rounding in the exact matrix norms.
const ROUNDING_SLACK: f64 = 1e-12;

#[derive(Debug, Clone, Copy)]
pub struct CertifyOptions {
    /// Stop once `upper ≤ lower·(1 + rel_gap)`.
    pub rel_gap: f64,
    pub max_cells: usize,
    /// Largest total number of free sphere coordinates that is branched on.
    pub max_branch_dim: usize,
}

impl Default for CertifyOptions {
    fn default() -> Self {
        Self {
            rel_gap: 1e-8,
            max_cells: 500_000,
            max_branch_dim: 6,
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct SpectralBounds {
    pub lower: f64,
    pub upper: f64,
    /// Unit vectors with `|T(x_1, …, x_d)| = lower`.
    pub maximizers: Vec<Vec<f64>>,
    /// Whether `upper ≤ lower·(1 + rel_gap)` was reached within the cell budget.
    pub converged: bool,
    pub cells: usize,
    /// False when `upper` is only a local-search value, not a proven bound.
    pub certified: bool,
}

impl SpectralBounds {
    pub fn width(&self) -> f64 {
        self.upper - self.lower
    }
}

/// Whether [`spectral_certify`] can handle this shape under `opts`.
pub fn certifiable(shape: &[usize], opts: &CertifyOptions) -> bool {
    branch_plan(shape, opts).is_ok()
}

/// Returns (free pair, branched modes).
fn branch_plan(shape: &[usize], opts: &CertifyOptions) -> Result<((usize, usize), Vec<usize>)> {
    let d = shape.len();
    if d <= 2 {
        return Ok(((0, d.saturating_sub(1)), Vec::new()));
    }
    let mut order: Vec<usize> = (0..d).collect();
    order.sort_by(|&a, &b| shape[b].cmp(&shape[a]).then(a.cmp(&b)));
    let (a, b) = (order[0].min(order[1]), order[0].max(order[1]));
    let branched: Vec<usize> = (0..d).filter(|&k| k != a && k != b).collect();
    if let Some(&k) = branched.iter().find(|&&k| shape[k] > MAX_NET_DIM) {
        return Err(Error::pre(format!(
            "certification branches on mode {} of dimension {} > {MAX_NET_DIM}",
            k + 1,
            shape[k]
        )));
    }
    let dim: usize = branched.iter().map(|&k| shape[k] - 1).sum();
    if dim > opts.max_branch_dim {
        return Err(Error::pre(format!(
            "branching over {dim} sphere coordinates exceeds the limit {}",
            opts.max_branch_dim
        )));
    }
    Ok(((a, b), branched))
}

#[derive(Debug, Clone)]
struct ModeCell {
    face: usize,
    center: Vec<f64>,
    half: f64,
}

impl ModeCell {
    /// Unit center and the geodesic radius of the cell around it.
    fn point(&self, n: usize) -> (Vec<f64>, f64) {
        let mut y = Vec::with_capacity(n);
        let mut c = 0;
        for j in 0..n {
            if j == self.face {
                y.push(1.0);
            } else {
                y.push(self.center[c]);
                c += 1;
            }
        }
        normalize(&mut y);
        let near: f64 = self.center.iter().map(|&c| (c.abs() - self.half).max(0.0).powi(2)).sum();
        let r = self.half * ((n - 1) as f64).sqrt() / (1.0 + near).sqrt();
        (y, r)
    }

    fn split(&self) -> Vec<ModeCell> {
        let k = self.center.len();
        let h = self.half / 2.0;
        (0..1usize << k)
            .map(|mask| ModeCell {
                face: self.face,
                center: (0..k)
                    .map(|i| self.center[i] + if mask >> i & 1 == 1 { h } else { -h })
                    .collect(),
                half: h,
            })
            .collect()
    }
}

/// Orthonormal basis of the complement of the unit vector `c`.
fn tangent_basis(c: &[f64]) -> Vec<Vec<f64>> {
    let n = c.len();
    let mut out: Vec<Vec<f64>> = Vec::with_capacity(n - 1);
    // Start from the coordinate axes least aligned with `c`.
    let mut axes: Vec<usize> = (0..n).collect();
    axes.sort_by(|&i, &j| c[i].abs().total_cmp(&c[j].abs()));
    for &i in &axes {
        if out.len() == n - 1 {
            break;
        }
        let mut v = crate::numeric::unit_vector(n, i);
        for _ in 0..2 {
            for b in std::iter::once(c).chain(out.iter().map(Vec::as_slice)) {
                let p = crate::numeric::dot(&v, b);
                v.iter_mut().zip(b).for_each(|(x, y)| *x -= p * y);
            }
        }
        if normalize(&mut v) > 1e-6 {
            out.push(v);
        }
    }
    out
}

struct Cell {
    modes: Vec<ModeCell>,
    radii: Vec<f64>,
    bound: f64,
}

impl PartialEq for Cell {
    fn eq(&self, other: &Self) -> bool {
        self.bound.total_cmp(&other.bound) == Ordering::Equal
    }
}
impl Eq for Cell {}
impl PartialOrd for Cell {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for Cell {
    fn cmp(&self, other: &Self) -> Ordering {
        self.bound.total_cmp(&other.bound)
    }
}

/// Top singular pair of a matrix, signed so that `uᵀ M v ≥ 0`.
fn top_pair(m: &nalgebra::DMatrix<f64>) -> (Vec<f64>, Vec<f64>) {
    let svd = crate::numeric::checked_svd(m);
    let i = svd.singular_values.imax();
    let u = svd.u.as_ref().expect("requested").column(i).iter().copied().collect();
    let v = svd.v_t.as_ref().expect("requested").row(i).iter().copied().collect();
    (u, v)
}

/// Certified interval for `‖T‖_σ`. `hint` is any known local maximum (for
/// instance from [`super::spectral_hopm`]); it only affects when the search
/// stops.
pub fn spectral_certify(t: &DenseTensor, hint: Option<&SpectralResult>, opts: &CertifyOptions) -> Result<SpectralBounds> {
    let shape = t.shape().to_vec();
    let ((a, b), branched) = branch_plan(&shape, opts)?;
    if t.is_zero() {
        return Ok(SpectralBounds {
            lower: 0.0,
            upper: 0.0,
            maximizers: shape.iter().map(|&n| unit_vector(n, 0)).collect(),
            converged: true,
            cells: 0,
            certified: true,
        });
    }
    match shape.len() {
        1 => {
            let v = t.frobenius();
            return Ok(SpectralBounds {
                lower: v,
                upper: v * (1.0 + ROUNDING_SLACK),
                maximizers: vec![t.data().iter().map(|x| x / v).collect()],
                converged: true,
                cells: 1,
                certified: true,
            });
        }
        2 => {
            let m = t.matricize(0)?;
            let (u, w) = top_pair(&m);
            let v = t.contract_all(&[u.clone(), w.clone()])?.abs();
            return Ok(SpectralBounds {
                lower: v,
                upper: matrix_spectral_norm(&m).max(v) * (1.0 + ROUNDING_SLACK),
                maximizers: vec![u, w],
                converged: true,
                cells: 1,
                certified: true,
            });
        }
        _ => {}
    }

    // Returns (F at the cell center, geodesic radii, cell bound, center vectors, center matrix).
    let eval = |modes: &[ModeCell]| -> (f64, Vec<f64>, f64, Vec<Option<Vec<f64>>>, nalgebra::DMatrix<f64>) {
        let mut xs: Vec<Option<Vec<f64>>> = vec![None; shape.len()];
        let mut radii = Vec::with_capacity(modes.len());
        for (cell, &k) in modes.iter().zip(&branched) {
            let (x, r) = cell.point(shape[k]);
            xs[k] = Some(x);
            radii.push(r);
        }
        let center = t.contract_except_pair(a, b, &xs);
        let f = matrix_spectral_norm(&center);
        let r: f64 = radii.iter().sum();
        let first = if r < 1.0 { f / (1.0 - r) } else { f64::INFINITY };
        let second = if r * r < 2.0 {
            // Vertex directions per branched mode: ±ρ√(n−1) along each tangent axis.
            let mut options: Vec<Vec<nalgebra::DMatrix<f64>>> = Vec::with_capacity(branched.len());
            for (j, &k) in branched.iter().enumerate() {
                let c = xs[k].clone().expect("set above");
                let scale = radii[j] * ((shape[k] - 1) as f64).sqrt();
                let mut dirs = Vec::new();
                for axis in tangent_basis(&c) {
                    let mut ys = xs.clone();
                    ys[k] = Some(axis);
                    let m = t.contract_except_pair(a, b, &ys) * scale;
                    dirs.push(-m.clone());
                    dirs.push(m);
                }
                // A mode of dimension 1 is a fixed point with no tangent directions.
                if !dirs.is_empty() {
                    options.push(dirs);
                }
            }
            let mut v = 0.0f64;
            let mut pick = vec![0usize; options.len()];
            loop {
                let mut m = center.clone();
                for (o, &p) in options.iter().zip(&pick) {
                    m += &o[p];
                }
                v = v.max(matrix_spectral_norm(&m));
                // Odometer over vertex choices.
                let mut j = 0;
                while j < pick.len() {
                    pick[j] += 1;
                    if pick[j] < options[j].len() {
                        break;
                    }
                    pick[j] = 0;
                    j += 1;
                }
                if j == pick.len() {
                    break;
                }
            }
            v / (1.0 - r * r / 2.0)
        } else {
            f64::INFINITY
        };
        (f, radii, first.min(second) * (1.0 + ROUNDING_SLACK), xs, center)
    };

    // Initial cells: every combination of faces, each face box at full size.
    let mut initial: Vec<Vec<ModeCell>> = vec![Vec::new()];
    for &k in &branched {
        let n = shape[k];
        let mut next = Vec::new();
        for prefix in &initial {
            for face in 0..n {
                let mut p = prefix.clone();
                p.push(ModeCell { face, center: vec![0.0; n - 1], half: 1.0 });
                next.push(p);
            }
        }
        initial = next;
    }

    let mut lower = 0.0;
    let mut maximizers = Vec::new();
    if let Some(h) = hint {
        lower = h.value;
        maximizers = h.maximizers.clone();
    }
    let mut heap = BinaryHeap::new();
    let mut cells = 0usize;
    let mut consider = |f: f64, xs: Vec<Option<Vec<f64>>>, m: &nalgebra::DMatrix<f64>, lower: &mut f64| {
        if f > *lower || maximizers.is_empty() {
            let (u, v) = top_pair(m);
            let mut full: Vec<Vec<f64>> = xs.into_iter().map(|x| x.unwrap_or_default()).collect();
            full[a] = u;
            full[b] = v;
            let value = t.contract_all(&full).expect("lengths match").abs();
            if value > *lower || maximizers.is_empty() {
                *lower = value;
                maximizers = full;
            }
        }
    };
    for modes in initial {
        let (f, radii, bound, xs, m) = eval(&modes);
        cells += 1;
        consider(f, xs, &m, &mut lower);
        heap.push(Cell { bound, modes, radii });
    }

    let (upper, converged) = loop {
        let top = heap.peek().expect("cells never run out");
        if top.bound <= lower * (1.0 + opts.rel_gap) {
            break (top.bound, true);
        }
        if cells >= opts.max_cells {
            break (top.bound, false);
        }
        let top = heap.pop().expect("peeked");
        // Refine the branched mode that contributes the largest radius.
        let j = (0..top.radii.len())
            .max_by(|&x, &y| top.radii[x].total_cmp(&top.radii[y]))
            .expect("at least one branched mode");
        for child in top.modes[j].split() {
            let mut modes = top.modes.clone();
            modes[j] = child;
            let (f, radii, bound, xs, m) = eval(&modes);
            cells += 1;
            consider(f, xs, &m, &mut lower);
            heap.push(Cell { bound, modes, radii });
        }
    };
    // Sign the first factor so the form is nonnegative.
    if t.contract_all(&maximizers)? < 0.0 {
        maximizers[0].iter_mut().for_each(|x| *x = -*x);
    }
    Ok(SpectralBounds { lower, upper: upper.max(lower), maximizers, converged, cells, certified: true })
}

/// Best available interval for `‖T‖_σ`: branch and bound when the shape
/// allows it, then a supplied net, and otherwise the multi-start value with
/// `certified = false`.
pub fn spectral_bounds(
    t: &DenseTensor,
    hopm: &HopmOptions,
    opts: &CertifyOptions,
    net: Option<&NetSpec>,
) -> Result<SpectralBounds> {
    let (h, _) = hopm_best_effort(t, hopm)?;
    if certifiable(t.shape(), opts) {
        return spectral_certify(t, Some(&h), opts);
    }
    if let Some(net) = net {
        let b = spectral_net_bounds(t, net)?;
        if let Some(upper) = b.upper {
            return Ok(SpectralBounds {
                lower: h.value,
                upper: upper.max(h.value),
                maximizers: h.maximizers,
                converged: true,
                cells: net.size(),
                certified: true,
            });
        }
    }
    Ok(SpectralBounds {
        lower: h.value,
        upper: h.value,
        maximizers: h.maximizers,
        converged: false,
        cells: 0,
        certified: false,
    })
}
