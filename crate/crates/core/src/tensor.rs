//! Dense real tensors in row-major layout (last index fastest) and the
//! multilinear primitives the rest of the crate is built on.

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numeric::{norm2, NeumaierSum};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawTensor")]
pub struct DenseTensor {
    shape: Vec<usize>,
    data: Vec<f64>,
}

#[derive(Deserialize)]
struct RawTensor {
    shape: Vec<usize>,
    data: Vec<f64>,
}

impl TryFrom<RawTensor> for DenseTensor {
    type Error = Error;
    fn try_from(raw: RawTensor) -> Result<Self> {
        DenseTensor::new(raw.shape, raw.data)
    }
}

/// Hölder exponent for entrywise norms.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Holder {
    One,
    Two,
    Inf,
}

/// One argument of a multilinear contraction: a vector, or a free mode.
#[derive(Debug, Clone, Copy)]
pub enum Slot<'a> {
    Vector(&'a [f64]),
    Hole,
}

#[derive(Debug, Clone, PartialEq)]
pub enum Contraction {
    Scalar(f64),
    Tensor(DenseTensor),
}

fn check_shape(shape: &[usize]) -> Result<usize> {
    if shape.is_empty() {
        return Err(Error::dim("a tensor needs at least one mode"));
    }
    if let Some(k) = shape.iter().position(|&n| n == 0) {
        return Err(Error::dim(format!("mode {} has dimension 0", k + 1)));
    }
    Ok(shape.iter().product())
}

impl DenseTensor {
    pub fn new(shape: Vec<usize>, data: Vec<f64>) -> Result<Self> {
        let n = check_shape(&shape)?;
        if data.len() != n {
            return Err(Error::dim(format!(
                "shape {:?} needs {} entries, got {}",
                shape,
                n,
                data.len()
            )));
        }
        if let Some(i) = data.iter().position(|x| !x.is_finite()) {
            return Err(Error::param(format!("entry {i} is not finite")));
        }
        Ok(Self { shape, data })
    }

    /// Panics on an empty shape or a zero dimension.
    pub fn zeros(shape: &[usize]) -> Self {
        let n = check_shape(shape).expect("invalid tensor shape");
        Self {
            shape: shape.to_vec(),
            data: vec![0.0; n],
        }
    }

    pub fn from_fn(shape: &[usize], mut f: impl FnMut(&[usize]) -> f64) -> Self {
        let mut t = Self::zeros(shape);
        let mut idx = vec![0; shape.len()];
        for o in 0..t.data.len() {
            t.data[o] = f(&idx);
            increment(&mut idx, shape);
        }
        t
    }

    /// The tensor with a single 1 at `index` (0-based).
    pub fn unit(shape: &[usize], index: &[usize]) -> Result<Self> {
        let mut t = Self::zeros(shape);
        let o = t.offset(index)?;
        t.data[o] = 1.0;
        Ok(t)
    }

    pub(crate) fn from_parts_unchecked(shape: Vec<usize>, data: Vec<f64>) -> Self {
        debug_assert_eq!(shape.iter().product::<usize>(), data.len());
        Self { shape, data }
    }

    pub fn shape(&self) -> &[usize] {
        &self.shape
    }

    pub fn order(&self) -> usize {
        self.shape.len()
    }

    pub fn len(&self) -> usize {
        self.data.len()
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn data_mut(&mut self) -> &mut [f64] {
        &mut self.data
    }

    pub fn into_data(self) -> Vec<f64> {
        self.data
    }

    pub fn is_zero(&self) -> bool {
        self.data.iter().all(|&x| x == 0.0)
    }

    pub fn offset(&self, index: &[usize]) -> Result<usize> {
        if index.len() != self.order() {
            return Err(Error::Index(format!(
                "index of length {} for an order-{} tensor",
                index.len(),
                self.order()
            )));
        }
        let mut o = 0;
        for (k, (&i, &n)) in index.iter().zip(&self.shape).enumerate() {
            if i >= n {
                return Err(Error::Index(format!("index {i} in mode {} of size {n}", k + 1)));
            }
            o = o * n + i;
        }
        Ok(o)
    }

    pub fn multi_index(&self, mut offset: usize) -> Vec<usize> {
        let mut idx = vec![0; self.order()];
        for k in (0..self.order()).rev() {
            idx[k] = offset % self.shape[k];
            offset /= self.shape[k];
        }
        idx
    }

    pub fn get(&self, index: &[usize]) -> Result<f64> {
        Ok(self.data[self.offset(index)?])
    }

    pub fn set(&mut self, index: &[usize], value: f64) -> Result<()> {
        let o = self.offset(index)?;
        self.data[o] = value;
        Ok(())
    }

    fn same_shape(&self, other: &Self) -> Result<()> {
        if self.shape != other.shape {
            return Err(Error::dim(format!("shapes {:?} and {:?} differ", self.shape, other.shape)));
        }
        Ok(())
    }

    pub fn add(&self, other: &Self) -> Result<Self> {
        self.lincomb(1.0, other, 1.0)
    }

    pub fn sub(&self, other: &Self) -> Result<Self> {
        self.lincomb(1.0, other, -1.0)
    }

    /// `a·self + b·other`.
    pub fn lincomb(&self, a: f64, other: &Self, b: f64) -> Result<Self> {
        self.same_shape(other)?;
        let data = self.data.iter().zip(&other.data).map(|(x, y)| a * x + b * y).collect();
        Ok(Self::from_parts_unchecked(self.shape.clone(), data))
    }

    /// `self += alpha·other`.
    pub fn axpy(&mut self, alpha: f64, other: &Self) -> Result<()> {
        self.same_shape(other)?;
        for (x, y) in self.data.iter_mut().zip(&other.data) {
            *x += alpha * y;
        }
        Ok(())
    }

    pub fn scaled(&self, c: f64) -> Self {
        Self::from_parts_unchecked(self.shape.clone(), self.data.iter().map(|x| c * x).collect())
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> Self {
        Self::from_parts_unchecked(self.shape.clone(), self.data.iter().map(|&x| f(x)).collect())
    }

    pub fn inner(&self, other: &Self) -> Result<f64> {
        self.same_shape(other)?;
        Ok(crate::numeric::dot(&self.data, &other.data))
    }

    pub fn norm(&self, p: Holder) -> f64 {
        match p {
            Holder::One => crate::numeric::sum(self.data.iter().map(|x| x.abs())),
            Holder::Two => norm2(&self.data),
            Holder::Inf => self.data.iter().fold(0.0, |m, x| m.max(x.abs())),
        }
    }

    pub fn frobenius(&self) -> f64 {
        self.norm(Holder::Two)
    }

    /// `(∏_{j<k} n_j, n_k, ∏_{j>k} n_j)`.
    fn split_at_mode(&self, k: usize) -> (usize, usize, usize) {
        let outer = self.shape[..k].iter().product();
        let inner = self.shape[k + 1..].iter().product();
        (outer, self.shape[k], inner)
    }

    fn check_mode(&self, k: usize) -> Result<()> {
        if k >= self.order() {
            return Err(Error::Index(format!(
                "mode {} of an order-{} tensor",
                k + 1,
                self.order()
            )));
        }
        Ok(())
    }

    /// Mode-`k` matricization (0-based `k`): an `n_k × ∏_{j≠k} n_j` matrix whose
    /// columns are the mode-`k` fibers, ordered row-major over the remaining modes.
    pub fn matricize(&self, k: usize) -> Result<DMatrix<f64>> {
        self.check_mode(k)?;
        let (outer, n, inner) = self.split_at_mode(k);
        let mut m = DMatrix::zeros(n, outer * inner);
        for a in 0..outer {
            for i in 0..n {
                let base = (a * n + i) * inner;
                for b in 0..inner {
                    m[(i, a * inner + b)] = self.data[base + b];
                }
            }
        }
        Ok(m)
    }

    /// Inverse of [`DenseTensor::matricize`].
    pub fn dematricize(k: usize, shape: &[usize], m: &DMatrix<f64>) -> Result<Self> {
        let mut t = Self::zeros(shape);
        t.check_mode(k)?;
        let (outer, n, inner) = t.split_at_mode(k);
        if m.shape() != (n, outer * inner) {
            return Err(Error::dim(format!(
                "matrix {:?} does not unfold shape {:?} along mode {}",
                m.shape(),
                shape,
                k + 1
            )));
        }
        for a in 0..outer {
            for i in 0..n {
                let base = (a * n + i) * inner;
                for b in 0..inner {
                    t.data[base + b] = m[(i, a * inner + b)];
                }
            }
        }
        Ok(t)
    }

    /// Mode-`k` product with an `m × n_k` matrix: `(T ×_k M)_(k) = M · T_(k)`.
    pub fn mode_product(&self, k: usize, m: &DMatrix<f64>) -> Result<Self> {
        self.check_mode(k)?;
        let (outer, n, inner) = self.split_at_mode(k);
        if m.ncols() != n {
            return Err(Error::dim(format!(
                "mode {} has size {n} but the matrix has {} columns",
                k + 1,
                m.ncols()
            )));
        }
        let rows = m.nrows();
        let mut shape = self.shape.clone();
        shape[k] = rows;
        let mut out = vec![0.0; outer * rows * inner];
        for a in 0..outer {
            for r in 0..rows {
                for b in 0..inner {
                    let mut acc = NeumaierSum::new();
                    for i in 0..n {
                        acc.add(m[(r, i)] * self.data[(a * n + i) * inner + b]);
                    }
                    out[(a * rows + r) * inner + b] = acc.value();
                }
            }
        }
        Ok(Self::from_parts_unchecked(shape, out))
    }

    /// Multilinear form with vectors in some slots and free modes in the others.
    pub fn contract(&self, slots: &[Slot<'_>]) -> Result<Contraction> {
        if slots.len() != self.order() {
            return Err(Error::dim(format!(
                "{} slots for an order-{} tensor",
                slots.len(),
                self.order()
            )));
        }
        for (k, s) in slots.iter().enumerate() {
            if let Slot::Vector(x) = s
                && x.len() != self.shape[k]
            {
                return Err(Error::dim(format!(
                    "vector of length {} in mode {} of size {}",
                    x.len(),
                    k + 1,
                    self.shape[k]
                )));
            }
        }
        let mut shape = self.shape.clone();
        let mut data = self.data.clone();
        for k in (0..slots.len()).rev() {
            if let Slot::Vector(x) = slots[k] {
                data = contract_mode(&shape, &data, k, x);
                shape.remove(k);
            }
        }
        if shape.is_empty() {
            Ok(Contraction::Scalar(data[0]))
        } else {
            Ok(Contraction::Tensor(Self::from_parts_unchecked(shape, data)))
        }
    }

    /// `T(x_1, …, x_d)` with every slot filled.
    pub fn contract_all(&self, xs: &[Vec<f64>]) -> Result<f64> {
        let slots: Vec<Slot> = xs.iter().map(|x| Slot::Vector(x)).collect();
        match self.contract(&slots)? {
            Contraction::Scalar(v) => Ok(v),
            Contraction::Tensor(_) => unreachable!("all slots were vectors"),
        }
    }

    /// `T(x_1, …, •, …, x_d)` with mode `k` left free. Lengths are trusted.
    pub(crate) fn contract_except(&self, k: usize, xs: &[Vec<f64>]) -> Vec<f64> {
        let mut shape = self.shape.clone();
        let mut data: Option<Vec<f64>> = None;
        for j in (0..self.order()).rev() {
            if j == k {
                continue;
            }
            let src = data.as_deref().unwrap_or(&self.data);
            let next = contract_mode(&shape, src, j, &xs[j]);
            shape.remove(j);
            data = Some(next);
        }
        data.unwrap_or_else(|| self.data.clone())
    }

    /// Matrix `T(…, •_a, …, •_b, …)` with modes `a < b` free and the rest contracted.
    pub(crate) fn contract_except_pair(&self, a: usize, b: usize, xs: &[Option<Vec<f64>>]) -> DMatrix<f64> {
        debug_assert!(a < b);
        let mut shape = self.shape.clone();
        let mut data: Option<Vec<f64>> = None;
        for j in (0..self.order()).rev() {
            if j == a || j == b {
                continue;
            }
            let x = xs[j].as_ref().expect("contracted mode needs a vector");
            let src = data.as_deref().unwrap_or(&self.data);
            let next = contract_mode(&shape, src, j, x);
            shape.remove(j);
            data = Some(next);
        }
        let data = data.unwrap_or_else(|| self.data.clone());
        DMatrix::from_row_slice(self.shape[a], self.shape[b], &data)
    }

    /// True when every permutation of modes leaves the tensor unchanged within `tol`.
    pub fn is_symmetric(&self, tol: f64) -> bool {
        let d = self.order();
        if self.shape.iter().any(|&n| n != self.shape[0]) {
            return false;
        }
        // Adjacent transpositions generate the symmetric group.
        for k in 0..d.saturating_sub(1) {
            for o in 0..self.len() {
                let mut idx = self.multi_index(o);
                idx.swap(k, k + 1);
                let p = self.offset(&idx).expect("index in range");
                if (self.data[o] - self.data[p]).abs() > tol {
                    return false;
                }
            }
        }
        true
    }
}

/// Advance a row-major multi-index; wraps to zeros after the last entry.
pub(crate) fn increment(idx: &mut [usize], shape: &[usize]) {
    for k in (0..shape.len()).rev() {
        idx[k] += 1;
        if idx[k] < shape[k] {
            return;
        }
        idx[k] = 0;
    }
}

/// Contract mode `j` of a row-major block with vector `x`.
fn contract_mode(shape: &[usize], data: &[f64], j: usize, x: &[f64]) -> Vec<f64> {
    let outer: usize = shape[..j].iter().product();
    let n = shape[j];
    let inner: usize = shape[j + 1..].iter().product();
    let mut out = vec![0.0; outer * inner];
    for a in 0..outer {
        for b in 0..inner {
            let mut acc = NeumaierSum::new();
            for (i, xi) in x.iter().enumerate() {
                acc.add(data[(a * n + i) * inner + b] * xi);
            }
            out[a * inner + b] = acc.value();
        }
    }
    out
}

/// `weight · x_1 ⊗ … ⊗ x_d`.
pub fn outer_atom(factors: &[Vec<f64>], weight: f64) -> Result<DenseTensor> {
    let shape: Vec<usize> = factors.iter().map(Vec::len).collect();
    check_shape(&shape)?;
    let mut data = vec![weight];
    for f in factors {
        let mut next = Vec::with_capacity(data.len() * f.len());
        for &p in &data {
            for &x in f {
                next.push(p * x);
            }
        }
        data = next;
    }
    Ok(DenseTensor::from_parts_unchecked(shape, data))
}

/// A weighted simple tensor `λ · x_1 ⊗ … ⊗ x_d` with unit factors.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RankOneAtom {
    pub weight: f64,
    pub factors: Vec<Vec<f64>>,
}

pub const UNIT_TOL: f64 = 1e-12;

impl RankOneAtom {
    pub fn new(weight: f64, factors: Vec<Vec<f64>>) -> Result<Self> {
        check_shape(&factors.iter().map(Vec::len).collect::<Vec<_>>())?;
        for (k, f) in factors.iter().enumerate() {
            let n = norm2(f);
            if (n - 1.0).abs() > UNIT_TOL {
                return Err(Error::param(format!("factor {} has norm {n}, expected 1", k + 1)));
            }
        }
        if !weight.is_finite() {
            return Err(Error::param("atom weight is not finite"));
        }
        Ok(Self { weight, factors })
    }

    pub fn shape(&self) -> Vec<usize> {
        self.factors.iter().map(Vec::len).collect()
    }

    pub fn to_tensor(&self) -> DenseTensor {
        outer_atom(&self.factors, self.weight).expect("validated atom")
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NuclearDecomposition {
    pub shape: Vec<usize>,
    pub atoms: Vec<RankOneAtom>,
}

impl NuclearDecomposition {
    pub fn new(shape: Vec<usize>, atoms: Vec<RankOneAtom>) -> Result<Self> {
        check_shape(&shape)?;
        if let Some(i) = atoms.iter().position(|a| a.shape() != shape) {
            return Err(Error::dim(format!("atom {i} does not match shape {shape:?}")));
        }
        Ok(Self { shape, atoms })
    }

    pub fn weight_sum(&self) -> f64 {
        crate::numeric::sum(self.atoms.iter().map(|a| a.weight.abs()))
    }

    /// `Σ_i λ_i · x_1^i ⊗ … ⊗ x_d^i`, accumulated entrywise with compensation.
    pub fn sum(&self) -> DenseTensor {
        let n: usize = self.shape.iter().product();
        let mut acc = vec![NeumaierSum::new(); n];
        for a in &self.atoms {
            let t = a.to_tensor();
            for (s, x) in acc.iter_mut().zip(t.data()) {
                s.add(*x);
            }
        }
        DenseTensor::from_parts_unchecked(self.shape.clone(), acc.iter().map(|s| s.value()).collect())
    }
}

/// Free-function spelling of [`DenseTensor::inner`].
pub fn inner(a: &DenseTensor, b: &DenseTensor) -> Result<f64> {
    a.inner(b)
}
