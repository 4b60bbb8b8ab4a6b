//! Mode subspaces, the basic subspaces `T^I` they generate, the relaxed
//! families `U^I` / `U_I`, entry supports, and operator norms of projector
//! chains.
//!
//! Mode indices are 0-based in the API and 1-based in the text form of
//! selectors (`basic:1,3`, `upperU:1,2`, `lowerU:2`, `sum:[1,2;1,3]`).

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use nalgebra::{DMatrix, SymmetricEigen};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numeric::{column_space, matrix_spectral_norm, orthonormalize};
use crate::rng::{self, Rng};
use crate::tensor::DenseTensor;

pub const DEFAULT_RANK_TOL: f64 = 1e-10;
pub const ORTHONORMAL_TOL: f64 = 1e-10;

/// A subset of modes `{0, …, d−1}` stored as a bit mask.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Default)]
pub struct ModeSet(u32);

impl ModeSet {
    pub const MAX_ORDER: usize = 16;

    pub fn empty() -> Self {
        ModeSet(0)
    }

    pub fn full(d: usize) -> Self {
        ModeSet(((1u64 << d) - 1) as u32)
    }

    pub fn from_bits(bits: u32) -> Self {
        ModeSet(bits)
    }

    pub fn bits(self) -> u32 {
        self.0
    }

    pub fn from_modes(modes: &[usize]) -> Self {
        ModeSet(modes.iter().fold(0, |acc, &k| acc | (1 << k)))
    }

    /// Parses 1-based indices such as `[1, 2]` for an order-`d` tensor.
    pub fn from_one_based(modes: &[usize], d: usize) -> Result<Self> {
        let mut set = 0u32;
        for &k in modes {
            if k == 0 || k > d {
                return Err(Error::Index(format!("mode {k} outside 1..={d}")));
            }
            set |= 1 << (k - 1);
        }
        Ok(ModeSet(set))
    }

    pub fn contains(self, k: usize) -> bool {
        self.0 >> k & 1 == 1
    }

    pub fn len(self) -> usize {
        self.0.count_ones() as usize
    }

    pub fn is_empty(self) -> bool {
        self.0 == 0
    }

    pub fn modes(self) -> Vec<usize> {
        (0..32).filter(|&k| self.contains(k)).collect()
    }

    pub fn complement(self, d: usize) -> Self {
        ModeSet(!self.0 & Self::full(d).0)
    }

    pub fn is_subset(self, other: Self) -> bool {
        self.0 & !other.0 == 0
    }

    /// All `2^d` subsets in increasing bit order.
    pub fn all(d: usize) -> impl Iterator<Item = ModeSet> {
        (0..(1u32 << d)).map(ModeSet)
    }

    pub fn fits(self, d: usize) -> bool {
        self.is_subset(Self::full(d))
    }
}

impl fmt::Display for ModeSet {
    /// 1-based, comma separated; the empty set prints as nothing.
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> = self.modes().iter().map(|k| (k + 1).to_string()).collect();
        write!(f, "{}", parts.join(","))
    }
}

impl FromStr for ModeSet {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        if s.is_empty() || s == "{}" {
            return Ok(ModeSet::empty());
        }
        let mut set = 0u32;
        for part in s.split(',') {
            let k: usize = part
                .trim()
                .parse()
                .map_err(|_| Error::param(format!("bad mode index `{part}`")))?;
            if k == 0 || k > Self::MAX_ORDER {
                return Err(Error::Index(format!("mode {k} outside 1..={}", Self::MAX_ORDER)));
            }
            set |= 1 << (k - 1);
        }
        Ok(ModeSet(set))
    }
}

impl Serialize for ModeSet {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.serialize_str(&self.to_string())
    }
}

impl<'de> Deserialize<'de> for ModeSet {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

/// A subspace of `R^n` held as an orthonormal basis (`n × r`).
#[derive(Debug, Clone, PartialEq)]
pub struct ModeSubspace {
    basis: DMatrix<f64>,
}

impl ModeSubspace {
    pub fn new(basis: DMatrix<f64>) -> Result<Self> {
        let r = basis.ncols();
        if r > basis.nrows() {
            return Err(Error::dim(format!("{r} basis vectors in R^{}", basis.nrows())));
        }
        let err = (basis.transpose() * &basis - DMatrix::identity(r, r)).amax();
        if r > 0 && err > ORTHONORMAL_TOL {
            return Err(Error::param(format!("basis is not orthonormal (error {err:e})")));
        }
        Ok(Self { basis })
    }

    /// Orthonormal basis of the span of the given columns.
    pub fn span(vectors: &DMatrix<f64>, rank_tol: f64) -> Self {
        Self {
            basis: column_space(vectors, rank_tol),
        }
    }

    pub fn zero(n: usize) -> Self {
        Self {
            basis: DMatrix::zeros(n, 0),
        }
    }

    pub fn full(n: usize) -> Self {
        Self {
            basis: DMatrix::identity(n, n),
        }
    }

    /// `span(e_i : i ∈ indices)`, 0-based.
    pub fn coordinate(n: usize, indices: &[usize]) -> Self {
        let mut b = DMatrix::zeros(n, indices.len());
        for (c, &i) in indices.iter().enumerate() {
            b[(i, c)] = 1.0;
        }
        Self { basis: b }
    }

    /// Uniformly random `r`-dimensional subspace.
    pub fn random(n: usize, r: usize, rng: &mut Rng) -> Self {
        let g = DMatrix::from_vec(n, r, rng::gaussian_vec(rng, n * r));
        Self {
            basis: orthonormalize(&g),
        }
    }

    pub fn ambient_dim(&self) -> usize {
        self.basis.nrows()
    }

    pub fn dim(&self) -> usize {
        self.basis.ncols()
    }

    pub fn basis(&self) -> &DMatrix<f64> {
        &self.basis
    }

    pub fn projector(&self) -> DMatrix<f64> {
        &self.basis * self.basis.transpose()
    }

    pub fn complement(&self) -> Self {
        let (n, r) = self.basis.shape();
        if r == 0 {
            return Self::full(n);
        }
        if r == n {
            return Self::zero(n);
        }
        let q = DMatrix::identity(n, n) - self.projector();
        let eig = SymmetricEigen::new(q);
        let keep: Vec<usize> = (0..n).filter(|&i| eig.eigenvalues[i] > 0.5).collect();
        let mut b = DMatrix::zeros(n, keep.len());
        for (c, &i) in keep.iter().enumerate() {
            b.set_column(c, &eig.eigenvectors.column(i));
        }
        Self {
            basis: orthonormalize(&b),
        }
    }

    /// Squared norm of the projection of each coordinate vector `e_i`.
    pub fn leverage(&self) -> Vec<f64> {
        self.basis.row_iter().map(|row| row.norm_squared()).collect()
    }
}

/// One subspace per mode; generates the basic subspaces `T^I`.
#[derive(Debug, Clone)]
pub struct ModeFamily {
    subspaces: Vec<ModeSubspace>,
    proj: Vec<DMatrix<f64>>,
    comp: Vec<DMatrix<f64>>,
}

impl ModeFamily {
    pub fn new(subspaces: Vec<ModeSubspace>) -> Result<Self> {
        if subspaces.is_empty() || subspaces.len() > ModeSet::MAX_ORDER {
            return Err(Error::param(format!(
                "families need between 1 and {} modes",
                ModeSet::MAX_ORDER
            )));
        }
        let proj: Vec<DMatrix<f64>> = subspaces.iter().map(ModeSubspace::projector).collect();
        let comp = proj
            .iter()
            .map(|p| DMatrix::identity(p.nrows(), p.nrows()) - p)
            .collect();
        Ok(Self { subspaces, proj, comp })
    }

    pub fn shape(&self) -> Vec<usize> {
        self.subspaces.iter().map(ModeSubspace::ambient_dim).collect()
    }

    pub fn order(&self) -> usize {
        self.subspaces.len()
    }

    pub fn subspace(&self, k: usize) -> &ModeSubspace {
        &self.subspaces[k]
    }

    pub fn subspaces(&self) -> &[ModeSubspace] {
        &self.subspaces
    }

    pub fn ranks(&self) -> Vec<usize> {
        self.subspaces.iter().map(ModeSubspace::dim).collect()
    }

    pub fn random(shape: &[usize], ranks: &[usize], rng: &mut Rng) -> Result<Self> {
        if shape.len() != ranks.len() {
            return Err(Error::dim("one rank per mode is required"));
        }
        if let Some(k) = (0..shape.len()).find(|&k| ranks[k] > shape[k]) {
            return Err(Error::param(format!(
                "rank {} exceeds dimension {} in mode {}",
                ranks[k],
                shape[k],
                k + 1
            )));
        }
        let subspaces = shape
            .iter()
            .zip(ranks)
            .map(|(&n, &r)| ModeSubspace::random(n, r, rng))
            .collect();
        Self::new(subspaces)
    }

    fn check(&self, t: &DenseTensor) -> Result<()> {
        if t.shape() != self.shape().as_slice() {
            return Err(Error::dim(format!(
                "tensor shape {:?} does not match family shape {:?}",
                t.shape(),
                self.shape()
            )));
        }
        Ok(())
    }

    /// Applies `P_k` for modes in `on`, `I − P_k` for modes in `off`, identity elsewhere.
    fn apply(&self, t: &DenseTensor, on: ModeSet, off: ModeSet) -> DenseTensor {
        let mut out = t.clone();
        for k in 0..self.order() {
            let (n, r) = (self.subspaces[k].ambient_dim(), self.subspaces[k].dim());
            let m = if on.contains(k) {
                if r == n {
                    continue;
                }
                if r == 0 {
                    return DenseTensor::zeros(t.shape());
                }
                &self.proj[k]
            } else if off.contains(k) {
                if r == 0 {
                    continue;
                }
                if r == n {
                    return DenseTensor::zeros(t.shape());
                }
                &self.comp[k]
            } else {
                continue;
            };
            out = out.mode_product(k, m).expect("shapes checked");
        }
        out
    }
}

/// `sp_k(T)` for every mode: the column space of each matricization, with
/// singular values below `rank_tol · σ_max` discarded.
pub fn family_from_tensor(t: &DenseTensor, rank_tol: f64) -> ModeFamily {
    let subspaces = (0..t.order())
        .map(|k| ModeSubspace::span(&t.matricize(k).expect("mode in range"), rank_tol))
        .collect();
    ModeFamily::new(subspaces).expect("tensor orders are small")
}

pub fn complement(v: &ModeSubspace) -> ModeSubspace {
    v.complement()
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum SubspaceSelector {
    /// `T^I`: complements on `I`, the subspaces themselves elsewhere.
    Basic(ModeSet),
    /// `U^I`: complements on `I`, unconstrained elsewhere.
    UpperU(ModeSet),
    /// `U_I`: the subspaces on `I`, unconstrained elsewhere.
    LowerU(ModeSet),
    /// `⊕_{I ∈ J} T^I` over distinct index sets.
    DirectSum(Vec<ModeSet>),
}

impl SubspaceSelector {
    /// `⊕_{|I| ≥ k} T^I`.
    pub fn at_least(d: usize, k: usize) -> Self {
        SubspaceSelector::DirectSum(ModeSet::all(d).filter(|s| s.len() >= k).collect())
    }

    pub fn validate(&self, d: usize) -> Result<()> {
        let check = |s: &ModeSet| {
            if s.fits(d) {
                Ok(())
            } else {
                Err(Error::Index(format!("index set {{{s}}} exceeds order {d}")))
            }
        };
        match self {
            SubspaceSelector::Basic(s) | SubspaceSelector::UpperU(s) | SubspaceSelector::LowerU(s) => {
                check(s)
            }
            SubspaceSelector::DirectSum(sets) => {
                let mut seen = std::collections::BTreeSet::new();
                for s in sets {
                    check(s)?;
                    if !seen.insert(*s) {
                        return Err(Error::param(format!("index set {{{s}}} repeated in direct sum")));
                    }
                }
                Ok(())
            }
        }
    }

    /// The basic subspaces whose direct sum this selector is, when it is one.
    pub fn basic_sets(&self, d: usize) -> Vec<ModeSet> {
        match self {
            SubspaceSelector::Basic(s) => vec![*s],
            SubspaceSelector::DirectSum(sets) => sets.clone(),
            // U^I collects every T^J with J ⊇ I; U_I every T^J with J ∩ I = ∅.
            SubspaceSelector::UpperU(i) => ModeSet::all(d).filter(|j| i.is_subset(*j)).collect(),
            SubspaceSelector::LowerU(i) => ModeSet::all(d).filter(|j| j.bits() & i.bits() == 0).collect(),
        }
    }
}

impl fmt::Display for SubspaceSelector {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            SubspaceSelector::Basic(s) => write!(f, "basic:{s}"),
            SubspaceSelector::UpperU(s) => write!(f, "upperU:{s}"),
            SubspaceSelector::LowerU(s) => write!(f, "lowerU:{s}"),
            SubspaceSelector::DirectSum(sets) => {
                let parts: Vec<String> = sets.iter().map(ToString::to_string).collect();
                write!(f, "sum:[{}]", parts.join(";"))
            }
        }
    }
}

impl FromStr for SubspaceSelector {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        let (kind, rest) = s
            .split_once(':')
            .ok_or_else(|| Error::param(format!("selector `{s}` lacks a `kind:` prefix")))?;
        match kind {
            "basic" => Ok(SubspaceSelector::Basic(rest.parse()?)),
            "upperU" => Ok(SubspaceSelector::UpperU(rest.parse()?)),
            "lowerU" => Ok(SubspaceSelector::LowerU(rest.parse()?)),
            "sum" => {
                let inner = rest
                    .trim()
                    .strip_prefix('[')
                    .and_then(|r| r.strip_suffix(']'))
                    .ok_or_else(|| Error::param(format!("direct sum `{rest}` must be bracketed")))?;
                let sets = inner.split(';').map(str::parse).collect::<Result<Vec<ModeSet>>>()?;
                Ok(SubspaceSelector::DirectSum(sets))
            }
            other => Err(Error::param(format!("unknown selector kind `{other}`"))),
        }
    }
}

impl Serialize for SubspaceSelector {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.serialize_str(&self.to_string())
    }
}

impl<'de> Deserialize<'de> for SubspaceSelector {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

/// Orthogonal projection onto the subspace named by `selector`.
pub fn project(selector: &SubspaceSelector, family: &ModeFamily, t: &DenseTensor) -> Result<DenseTensor> {
    family.check(t)?;
    let d = family.order();
    selector.validate(d)?;
    Ok(match selector {
        SubspaceSelector::Basic(i) => family.apply(t, i.complement(d), *i),
        SubspaceSelector::UpperU(i) => family.apply(t, ModeSet::empty(), *i),
        SubspaceSelector::LowerU(i) => family.apply(t, *i, ModeSet::empty()),
        SubspaceSelector::DirectSum(sets) => {
            // Basic subspaces are mutually orthogonal; sum whichever side is shorter.
            let total = 1usize << d;
            if 2 * sets.len() <= total {
                let mut acc = DenseTensor::zeros(t.shape());
                for &i in sets {
                    acc.axpy(1.0, &family.apply(t, i.complement(d), i))?;
                }
                acc
            } else {
                let mut acc = t.clone();
                for i in ModeSet::all(d).filter(|i| !sets.contains(i)) {
                    acc.axpy(-1.0, &family.apply(t, i.complement(d), i))?;
                }
                acc
            }
        }
    })
}

/// All `2^d` basic components of `t`.
pub fn basic_split(family: &ModeFamily, t: &DenseTensor) -> Result<BTreeMap<ModeSet, DenseTensor>> {
    family.check(t)?;
    let d = family.order();
    Ok(ModeSet::all(d)
        .map(|i| (i, family.apply(t, i.complement(d), i)))
        .collect())
}

/// A set of entries of a tensor of fixed shape.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct EntrySupport {
    shape: Vec<usize>,
    mask: Vec<bool>,
}

impl EntrySupport {
    pub fn empty(shape: &[usize]) -> Self {
        Self {
            shape: shape.to_vec(),
            mask: vec![false; shape.iter().product()],
        }
    }

    pub fn full(shape: &[usize]) -> Self {
        Self {
            shape: shape.to_vec(),
            mask: vec![true; shape.iter().product()],
        }
    }

    pub fn from_mask(shape: &[usize], mask: Vec<bool>) -> Result<Self> {
        if mask.len() != shape.iter().product::<usize>() {
            return Err(Error::dim("mask length does not match shape"));
        }
        Ok(Self {
            shape: shape.to_vec(),
            mask,
        })
    }

    /// From 0-based multi-indices.
    pub fn from_indices(shape: &[usize], indices: &[Vec<usize>]) -> Result<Self> {
        let probe = DenseTensor::zeros(shape);
        let mut s = Self::empty(shape);
        for idx in indices {
            s.mask[probe.offset(idx)?] = true;
        }
        Ok(s)
    }

    /// From row-major linear offsets.
    pub fn from_offsets(shape: &[usize], offsets: &[usize]) -> Result<Self> {
        let mut s = Self::empty(shape);
        for &o in offsets {
            if o >= s.mask.len() {
                return Err(Error::Index(format!("offset {o} outside {} entries", s.mask.len())));
            }
            s.mask[o] = true;
        }
        Ok(s)
    }

    /// Entries where `t` is nonzero.
    pub fn nonzeros(t: &DenseTensor) -> Self {
        Self {
            shape: t.shape().to_vec(),
            mask: t.data().iter().map(|&x| x != 0.0).collect(),
        }
    }

    pub fn shape(&self) -> &[usize] {
        &self.shape
    }

    pub fn mask(&self) -> &[bool] {
        &self.mask
    }

    pub fn contains(&self, offset: usize) -> bool {
        self.mask[offset]
    }

    pub fn count(&self) -> usize {
        self.mask.iter().filter(|&&b| b).count()
    }

    pub fn offsets(&self) -> Vec<usize> {
        (0..self.mask.len()).filter(|&o| self.mask[o]).collect()
    }

    pub fn complement(&self) -> Self {
        Self {
            shape: self.shape.clone(),
            mask: self.mask.iter().map(|b| !b).collect(),
        }
    }

    pub fn intersection(&self, other: &Self) -> Result<Self> {
        if self.shape != other.shape {
            return Err(Error::dim("supports of different shapes"));
        }
        Ok(Self {
            shape: self.shape.clone(),
            mask: self.mask.iter().zip(&other.mask).map(|(a, b)| *a && *b).collect(),
        })
    }
}

/// Keeps the entries in the support (or outside it, with `complement`), zeroing the rest.
pub fn support_project(support: &EntrySupport, t: &DenseTensor, complement: bool) -> Result<DenseTensor> {
    if support.shape != t.shape() {
        return Err(Error::dim(format!(
            "support shape {:?} does not match tensor shape {:?}",
            support.shape,
            t.shape()
        )));
    }
    let data = t
        .data()
        .iter()
        .zip(&support.mask)
        .map(|(&x, &inside)| if inside != complement { x } else { 0.0 })
        .collect();
    Ok(DenseTensor::from_parts_unchecked(t.shape().to_vec(), data))
}

/// One self-adjoint factor of an operator chain.
#[derive(Debug, Clone, Copy)]
pub enum ChainOp<'a> {
    Subspace {
        selector: &'a SubspaceSelector,
        family: &'a ModeFamily,
    },
    Support {
        support: &'a EntrySupport,
        complement: bool,
    },
    /// Entrywise multiplication by fixed weights.
    Weights(&'a DenseTensor),
}

impl ChainOp<'_> {
    fn apply(&self, t: &DenseTensor) -> Result<DenseTensor> {
        match self {
            ChainOp::Subspace { selector, family } => project(selector, family, t),
            ChainOp::Support { support, complement } => support_project(support, t, *complement),
            ChainOp::Weights(w) => {
                if w.shape() != t.shape() {
                    return Err(Error::dim("weight tensor shape mismatch"));
                }
                let data = t.data().iter().zip(w.data()).map(|(x, y)| x * y).collect();
                Ok(DenseTensor::from_parts_unchecked(t.shape().to_vec(), data))
            }
        }
    }
}

/// Applies the chain right to left: `chain[0]` is applied last.
pub fn apply_chain(chain: &[ChainOp<'_>], t: &DenseTensor) -> Result<DenseTensor> {
    let mut out = t.clone();
    for op in chain.iter().rev() {
        out = op.apply(&out)?;
        if out.is_zero() {
            break;
        }
    }
    Ok(out)
}

fn apply_adjoint(chain: &[ChainOp<'_>], t: &DenseTensor) -> Result<DenseTensor> {
    let mut out = t.clone();
    for op in chain {
        out = op.apply(&out)?;
        if out.is_zero() {
            break;
        }
    }
    Ok(out)
}

#[derive(Debug, Clone, Copy)]
pub struct OperatorNormOptions {
    pub tol: f64,
    pub max_iter: usize,
    pub seed: u64,
    /// Largest `∏ n_k` for which the map is materialized densely.
    pub dense_cutoff: usize,
}

impl Default for OperatorNormOptions {
    fn default() -> Self {
        Self {
            tol: 1e-10,
            max_iter: 10_000,
            seed: 0,
            dense_cutoff: 4096,
        }
    }
}

/// `max ‖chain(T)‖_2` over unit `T` of the given shape. Chains are written
/// left to right as composed operators, so `[p_L, p_I]` means `p_L ∘ p_I`.
pub fn operator_norm_chain(chain: &[ChainOp<'_>], shape: &[usize], opts: &OperatorNormOptions) -> Result<f64> {
    if chain.is_empty() {
        return Err(Error::param("operator chain is empty"));
    }
    let n: usize = shape.iter().product();
    if n <= opts.dense_cutoff {
        dense_operator_norm(chain, shape)
    } else {
        power_operator_norm(chain, shape, opts)
    }
}

fn dense_operator_norm(chain: &[ChainOp<'_>], shape: &[usize]) -> Result<f64> {
    let n: usize = shape.iter().product();
    let mut columns: Vec<Vec<f64>> = Vec::new();
    let mut e = DenseTensor::zeros(shape);
    for j in 0..n {
        e.data_mut()[j] = 1.0;
        let col = apply_chain(chain, &e)?;
        e.data_mut()[j] = 0.0;
        if !col.is_zero() {
            columns.push(col.into_data());
        }
    }
    if columns.is_empty() {
        return Ok(0.0);
    }
    // Drop rows that vanish for every column; they do not affect singular values.
    let rows: Vec<usize> = (0..n).filter(|&i| columns.iter().any(|c| c[i] != 0.0)).collect();
    let m = DMatrix::from_fn(rows.len(), columns.len(), |i, j| columns[j][rows[i]]);
    Ok(large_spectral_norm(&m))
}

/// Largest singular value, using the compensated small Gram for modest sizes
/// and a plain matrix product otherwise.
pub(crate) fn large_spectral_norm(m: &DMatrix<f64>) -> f64 {
    let k = m.nrows().min(m.ncols());
    if k <= 64 {
        return matrix_spectral_norm(m);
    }
    let g = if m.nrows() <= m.ncols() {
        m * m.transpose()
    } else {
        m.transpose() * m
    };
    SymmetricEigen::new(g).eigenvalues.max().max(0.0).sqrt()
}

fn power_operator_norm(chain: &[ChainOp<'_>], shape: &[usize], opts: &OperatorNormOptions) -> Result<f64> {
    let n: usize = shape.iter().product();
    let mut rng = rng::stream(opts.seed, 0);
    let mut v = DenseTensor::new(shape.to_vec(), rng::unit_vec(&mut rng, n))?;
    let mut last = 0.0;
    let mut best = 0.0f64;
    for it in 0..opts.max_iter {
        let av = apply_chain(chain, &v)?;
        let lambda = av.inner(&av)?;
        best = best.max(lambda);
        if lambda == 0.0 {
            return Ok(0.0);
        }
        if it > 0 && (lambda - last).abs() <= opts.tol * lambda {
            return Ok(lambda.sqrt());
        }
        last = lambda;
        let w = apply_adjoint(chain, &av)?;
        let norm = w.frobenius();
        if norm == 0.0 {
            return Ok(lambda.sqrt());
        }
        v = w.scaled(1.0 / norm);
    }
    Err(Error::Convergence {
        what: "operator norm power iteration".into(),
        iterations: opts.max_iter,
        best: best.sqrt(),
    })
}
