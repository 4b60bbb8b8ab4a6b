//! Compensated summation and small dense linear-algebra helpers.

use nalgebra::{DMatrix, DVector, SymmetricEigen, SVD};

/// Neumaier's variant of Kahan summation.
#[derive(Debug, Clone, Copy, Default)]
pub struct NeumaierSum {
    sum: f64,
    comp: f64,
}

impl NeumaierSum {
    pub fn new() -> Self {
        Self::default()
    }

    #[inline]
    pub fn add(&mut self, x: f64) {
        let t = self.sum + x;
        if self.sum.abs() >= x.abs() {
            self.comp += (self.sum - t) + x;
        } else {
            self.comp += (x - t) + self.sum;
        }
        self.sum = t;
    }

    #[inline]
    pub fn value(&self) -> f64 {
        self.sum + self.comp
    }
}

pub fn sum<I: IntoIterator<Item = f64>>(values: I) -> f64 {
    let mut acc = NeumaierSum::new();
    for v in values {
        acc.add(v);
    }
    acc.value()
}

pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    debug_assert_eq!(a.len(), b.len());
    let mut acc = NeumaierSum::new();
    for (x, y) in a.iter().zip(b) {
        acc.add(x * y);
    }
    acc.value()
}

pub fn norm2(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

/// Scales `v` to unit length in place and returns the old norm; zero vectors are left alone.
pub fn normalize(v: &mut [f64]) -> f64 {
    let n = norm2(v);
    if n > 0.0 {
        for x in v.iter_mut() {
            *x /= n;
        }
    }
    n
}

pub fn unit_vector(n: usize, i: usize) -> Vec<f64> {
    let mut v = vec![0.0; n];
    v[i] = 1.0;
    v
}

/// Gram matrix `A Aᵀ` (or `Aᵀ A`, whichever is smaller) with compensated entries.
pub fn small_gram(a: &DMatrix<f64>) -> DMatrix<f64> {
    let (r, c) = a.shape();
    if r <= c {
        let mut g = DMatrix::zeros(r, r);
        for i in 0..r {
            for j in i..r {
                let mut acc = NeumaierSum::new();
                for k in 0..c {
                    acc.add(a[(i, k)] * a[(j, k)]);
                }
                g[(i, j)] = acc.value();
                g[(j, i)] = acc.value();
            }
        }
        g
    } else {
        small_gram(&a.transpose())
    }
}

/// Largest eigenvalue of a symmetric matrix.
pub fn sym_max_eigenvalue(g: &DMatrix<f64>) -> f64 {
    match g.nrows() {
        0 => 0.0,
        1 => g[(0, 0)],
        2 => {
            let (a, b, c) = (g[(0, 0)], g[(0, 1)], g[(1, 1)]);
            let half = 0.5 * (a - c);
            0.5 * (a + c) + (half * half + b * b).sqrt()
        }
        _ => SymmetricEigen::new(g.clone()).eigenvalues.max(),
    }
}

/// Largest singular value of a dense matrix.
pub fn matrix_spectral_norm(a: &DMatrix<f64>) -> f64 {
    if a.is_empty() {
        return 0.0;
    }
    sym_max_eigenvalue(&small_gram(a)).max(0.0).sqrt()
}

/// Thin SVD whose factors reproduce `a`. nalgebra's bidiagonal solver can
/// return inaccurate left vectors for some rank-deficient inputs, so the
/// result is checked and, when needed, recomputed from `aᵀ` or from the Gram
/// matrix.
pub fn checked_svd(a: &DMatrix<f64>) -> SVD<f64, nalgebra::Dyn, nalgebra::Dyn> {
    let scale = a.norm();
    let tol = 1e-12 * scale.max(f64::MIN_POSITIVE) * (a.nrows().max(a.ncols()) as f64).sqrt();
    let err = |s: &SVD<f64, nalgebra::Dyn, nalgebra::Dyn>| {
        s.clone().recompose().map_or(f64::INFINITY, |r| (r - a).norm())
    };
    let direct = a.clone().svd(true, true);
    let e0 = err(&direct);
    if e0 <= tol {
        return direct;
    }
    let t = a.transpose().svd(true, true);
    let flipped = SVD {
        u: t.v_t.as_ref().map(|vt| vt.transpose()),
        v_t: t.u.as_ref().map(|u| u.transpose()),
        singular_values: t.singular_values.clone(),
    };
    let e1 = err(&flipped);
    if e1 <= tol {
        return flipped;
    }
    let gram = gram_svd(a);
    let e2 = err(&gram);
    [(e0, direct), (e1, flipped), (e2, gram)]
        .into_iter()
        .min_by(|x, y| x.0.total_cmp(&y.0))
        .expect("three candidates")
        .1
}

fn gram_svd(a: &DMatrix<f64>) -> SVD<f64, nalgebra::Dyn, nalgebra::Dyn> {
    let (n, m) = a.shape();
    let k = n.min(m);
    let eig = SymmetricEigen::new(a.transpose() * a);
    let mut order: Vec<usize> = (0..m).collect();
    order.sort_by(|&i, &j| eig.eigenvalues[j].total_cmp(&eig.eigenvalues[i]));
    let mut v = DMatrix::zeros(m, k);
    let mut u = DMatrix::zeros(n, k);
    let mut sv = DVector::zeros(k);
    let top = eig.eigenvalues.max().max(0.0).sqrt();
    let mut filled = 0;
    for (c, &i) in order.iter().take(k).enumerate() {
        let vc = eig.eigenvectors.column(i).into_owned();
        let av = a * &vc;
        let s = av.norm();
        v.set_column(c, &vc);
        sv[c] = s;
        if s > 1e-13 * top {
            u.set_column(c, &(av / s));
            filled = c + 1;
        }
    }
    // Complete the left factor for (numerically) zero singular values.
    if filled < k {
        let mut basis = u.columns(0, filled).into_owned();
        for e in 0..n {
            if basis.ncols() == k {
                break;
            }
            let mut x = DVector::from_fn(n, |i, _| if i == e { 1.0 } else { 0.0 });
            for _ in 0..2 {
                for c in 0..basis.ncols() {
                    let b = basis.column(c).into_owned();
                    x -= &b * b.dot(&x);
                }
            }
            let nx = x.norm();
            if nx > 1e-8 {
                let last = basis.ncols();
                basis = basis.insert_column(last, 0.0);
                basis.set_column(last, &(x / nx));
            }
        }
        u = basis;
    }
    SVD { u: Some(u), v_t: Some(v.transpose()), singular_values: sv }
}

/// Orthonormal basis of the column space, keeping singular values above `rel_tol * σ_max`.
pub fn column_space(a: &DMatrix<f64>, rel_tol: f64) -> DMatrix<f64> {
    let n = a.nrows();
    if a.ncols() == 0 || a.iter().all(|&x| x == 0.0) {
        return DMatrix::zeros(n, 0);
    }
    // An SVD of `a` itself: a Gram matrix would square the rounding noise and
    // leave spurious directions near `√ε · σ_max`.
    let svd = checked_svd(a);
    let u = svd.u.expect("left factor requested");
    let sv = &svd.singular_values;
    let smax = sv.max();
    let mut keep: Vec<usize> = (0..sv.len()).filter(|&i| sv[i] > rel_tol * smax).collect();
    keep.sort_by(|&i, &j| sv[j].total_cmp(&sv[i]));
    let mut basis = DMatrix::zeros(n, keep.len());
    for (c, &i) in keep.iter().enumerate() {
        basis.set_column(c, &u.column(i));
    }
    // Re-orthonormalize the (already nearly orthonormal) columns.
    orthonormalize(&basis)
}

/// Thin QR based orthonormalization; the input is assumed to have full column rank.
pub fn orthonormalize(a: &DMatrix<f64>) -> DMatrix<f64> {
    if a.ncols() == 0 {
        return a.clone();
    }
    let q = a.clone().qr().q();
    q.columns(0, a.ncols()).into_owned()
}
