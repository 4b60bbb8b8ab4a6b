//! Low-rank plus sparse instances with the Bernoulli batch structure used by golfing.

use std::fmt;
use std::str::FromStr;

use nalgebra::DMatrix;
use rand::RngExt;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numeric::orthonormalize;
use crate::rng::{self, Rng};
use crate::subspace::EntrySupport;
use crate::tensor::{outer_atom, DenseTensor};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum FactorStyle {
    /// Independent Gaussian factors scaled by `1/√n_k`.
    Gaussian,
    /// Orthonormal factors spread over all coordinates (small `u_k`).
    Incoherent,
}

impl fmt::Display for FactorStyle {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            FactorStyle::Gaussian => "gaussian",
            FactorStyle::Incoherent => "incoherent",
        })
    }
}

impl FromStr for FactorStyle {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "gaussian" => Ok(FactorStyle::Gaussian),
            "incoherent" => Ok(FactorStyle::Incoherent),
            _ => Err(Error::Lookup(s.to_string())),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InstanceSpec {
    pub shape: Vec<usize>,
    pub rank: usize,
    pub rho: f64,
    /// Number of golfing batches.
    pub m: usize,
    pub style: FactorStyle,
    pub magnitude_range: (f64, f64),
    pub seed: u64,
}

impl InstanceSpec {
    pub fn new(shape: &[usize], rank: usize, rho: f64, m: usize, style: FactorStyle, seed: u64) -> Self {
        Self {
            shape: shape.to_vec(),
            rank,
            rho,
            m,
            style,
            magnitude_range: (0.5, 2.0),
            seed,
        }
    }
}

#[derive(Debug, Clone)]
pub struct RpcaInstance {
    pub l: DenseTensor,
    pub s: DenseTensor,
    /// `sign(S)`.
    pub e: DenseTensor,
    pub support: EntrySupport,
    pub rho: f64,
    /// `I(S_j)`; the support is their intersection.
    pub batch_masks: Vec<EntrySupport>,
    pub seed: u64,
}

impl RpcaInstance {
    /// Assembles an instance from explicit parts, checking every structural invariant.
    pub fn from_parts(l: DenseTensor, s: DenseTensor, rho: f64, batch_masks: Vec<EntrySupport>, seed: u64) -> Result<Self> {
        if l.shape() != s.shape() {
            return Err(Error::dim("L and S have different shapes"));
        }
        if l.is_zero() {
            return Err(Error::pre("L must be nonzero"));
        }
        if !(0.0..1.0).contains(&rho) {
            return Err(Error::param(format!("rho = {rho} outside [0, 1)")));
        }
        let support = EntrySupport::nonzeros(&s);
        if let Some(mask) = batch_masks.iter().find(|b| b.shape() != l.shape()) {
            return Err(Error::dim(format!("batch mask of shape {:?}", mask.shape())));
        }
        let mut inter = EntrySupport::full(l.shape());
        for b in &batch_masks {
            inter = inter.intersection(b)?;
        }
        if !batch_masks.is_empty() && inter != support {
            return Err(Error::pre("support of S is not the intersection of the batch masks"));
        }
        let e = s.map(|x| if x > 0.0 { 1.0 } else if x < 0.0 { -1.0 } else { 0.0 });
        Ok(Self { l, s, e, support, rho, batch_masks, seed })
    }

    pub fn shape(&self) -> &[usize] {
        self.l.shape()
    }

    pub fn m(&self) -> usize {
        self.batch_masks.len()
    }

    /// Per-batch inclusion probability `ρ^{1/m}`.
    pub fn phi(&self) -> f64 {
        batch_probability(self.rho, self.m().max(1))
    }

    pub fn observed(&self) -> DenseTensor {
        self.l.add(&self.s).expect("same shape")
    }
}

pub fn batch_probability(rho: f64, m: usize) -> f64 {
    if rho == 0.0 { 0.0 } else { rho.powf(1.0 / m as f64) }
}

/// `λ = 1/√(max_k n_k)`.
pub fn default_lambda(shape: &[usize]) -> f64 {
    1.0 / (*shape.iter().max().unwrap_or(&1) as f64).sqrt()
}

/// `⌈2 ln n_d⌉`, at least 1.
pub fn default_batches(shape: &[usize]) -> usize {
    let nd = *shape.iter().max().unwrap_or(&1) as f64;
    ((2.0 * nd.ln()).ceil() as usize).max(1)
}

fn check_low_rank(shape: &[usize], rank: usize) -> Result<()> {
    if shape.len() < 2 || shape.contains(&0) {
        return Err(Error::param(format!("shape {shape:?} needs at least two nonempty modes")));
    }
    let nmin = *shape.iter().min().expect("nonempty");
    if rank == 0 || rank > nmin {
        return Err(Error::param(format!("rank {rank} must lie in [1, {nmin}]")));
    }
    Ok(())
}

/// The uncorrupted low-rank part on its own: the same `L` that
/// [`generate_instance`] draws for this seed.
pub fn low_rank_tensor(shape: &[usize], rank: usize, style: FactorStyle, seed: u64) -> Result<DenseTensor> {
    check_low_rank(shape, rank)?;
    low_rank(shape, rank, style, &mut rng::stream(seed, 0))
}

pub fn generate_instance(spec: &InstanceSpec) -> Result<RpcaInstance> {
    let shape = &spec.shape;
    check_low_rank(shape, spec.rank)?;
    if !(spec.rho > 0.0 && spec.rho < 1.0) {
        return Err(Error::param(format!("rho = {} outside (0, 1)", spec.rho)));
    }
    if spec.m == 0 {
        return Err(Error::param("at least one batch is required"));
    }
    let (lo, hi) = spec.magnitude_range;
    if !(lo > 0.0 && lo <= hi && hi.is_finite()) {
        return Err(Error::param(format!("magnitude range [{lo}, {hi}] must be positive and ordered")));
    }

    let mut factor_rng = rng::stream(spec.seed, 0);
    let l = low_rank(shape, spec.rank, spec.style, &mut factor_rng)?;

    let phi = batch_probability(spec.rho, spec.m);
    let n: usize = shape.iter().product();
    let batch_masks = (0..spec.m)
        .map(|j| {
            let mut r = rng::stream(spec.seed, 1 + j as u64);
            EntrySupport::from_mask(shape, (0..n).map(|_| r.random_bool(phi)).collect())
        })
        .collect::<Result<Vec<_>>>()?;
    let mut support = EntrySupport::full(shape);
    for b in &batch_masks {
        support = support.intersection(b)?;
    }

    let mut mag_rng = rng::stream(spec.seed, 1 + spec.m as u64);
    let mut s = DenseTensor::zeros(shape);
    for o in support.offsets() {
        let v = if hi > lo { mag_rng.random_range(lo..hi) } else { lo };
        s.data_mut()[o] = if mag_rng.random_bool(0.5) { v } else { -v };
    }
    RpcaInstance::from_parts(l, s, spec.rho, batch_masks, spec.seed)
}

fn low_rank(shape: &[usize], r: usize, style: FactorStyle, rng: &mut Rng) -> Result<DenseTensor> {
    let factors: Vec<DMatrix<f64>> = shape
        .iter()
        .map(|&n| match style {
            FactorStyle::Gaussian => DMatrix::from_vec(n, r, rng::gaussian_vec(rng, n * r)) / (n as f64).sqrt(),
            FactorStyle::Incoherent => spread_frame(n, r, rng),
        })
        .collect();
    let mut l = DenseTensor::zeros(shape);
    for i in 0..r {
        let cols: Vec<Vec<f64>> = factors.iter().map(|f| f.column(i).iter().copied().collect()).collect();
        let weight = match style {
            FactorStyle::Gaussian => 1.0,
            // Bounded away from zero so every component stays visible.
            FactorStyle::Incoherent => 0.5 + rng::gaussian_vec(rng, 1)[0].abs(),
        };
        l.axpy(1.0, &outer_atom(&cols, weight)?)?;
    }
    Ok(l)
}

/// Orthonormalized random-sign columns, then rotated inside their span.
/// The rotation leaves every row norm, and so the leverage, unchanged.
fn spread_frame(n: usize, r: usize, rng: &mut Rng) -> DMatrix<f64> {
    let scale = 1.0 / (n as f64).sqrt();
    let signs = DMatrix::from_fn(n, r, |_, _| if rng.random_bool(0.5) { scale } else { -scale });
    let q = if r == 1 { signs } else { orthonormalize(&signs) };
    let g = orthonormalize(&DMatrix::from_vec(r, r, rng::gaussian_vec(rng, r * r)));
    q * g
}

/// Serializable form of an instance: tensors inline, masks as row-major offsets.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct InstanceArchive {
    pub shape: Vec<usize>,
    pub rank: Option<usize>,
    pub rho: f64,
    pub m: usize,
    pub seed: u64,
    pub style: Option<FactorStyle>,
    pub l: DenseTensor,
    pub s: DenseTensor,
    pub masks: Vec<Vec<usize>>,
}

impl InstanceArchive {
    pub fn from_instance(inst: &RpcaInstance, spec: Option<&InstanceSpec>) -> Self {
        Self {
            shape: inst.shape().to_vec(),
            rank: spec.map(|s| s.rank),
            rho: inst.rho,
            m: inst.m(),
            seed: inst.seed,
            style: spec.map(|s| s.style),
            l: inst.l.clone(),
            s: inst.s.clone(),
            masks: inst.batch_masks.iter().map(EntrySupport::offsets).collect(),
        }
    }

    pub fn into_instance(self) -> Result<RpcaInstance> {
        if self.l.shape() != self.shape.as_slice() {
            return Err(Error::Format("archive shape does not match L".into()));
        }
        if self.masks.len() != self.m {
            return Err(Error::Format(format!("archive lists {} masks for m = {}", self.masks.len(), self.m)));
        }
        let masks = self
            .masks
            .iter()
            .map(|o| EntrySupport::from_offsets(&self.shape, o))
            .collect::<Result<Vec<_>>>()?;
        RpcaInstance::from_parts(self.l, self.s, self.rho, masks, self.seed)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn low_rank_part_matches_the_instance() {
        let spec = InstanceSpec::new(&[5, 4, 6], 2, 0.1, 2, FactorStyle::Incoherent, 17);
        let l = low_rank_tensor(&spec.shape, spec.rank, spec.style, spec.seed).unwrap();
        assert_eq!(l, generate_instance(&spec).unwrap().l);
        assert!(low_rank_tensor(&[5, 4], 5, FactorStyle::Gaussian, 0).is_err());
    }

    #[test]
    fn support_fraction_matches_rho() {
        let mut total = 0.0;
        for seed in 0..10 {
            let inst = generate_instance(&InstanceSpec::new(&[10, 10, 10], 2, 0.05, 3, FactorStyle::Gaussian, seed)).unwrap();
            total += inst.support.count() as f64 / 1000.0;
        }
        let mean = total / 10.0;
        assert!((mean - 0.05).abs() <= 0.015, "mean support fraction {mean}");
    }

    #[test]
    fn structural_invariants() {
        let inst = generate_instance(&InstanceSpec::new(&[6, 5, 4], 2, 0.2, 3, FactorStyle::Incoherent, 3)).unwrap();
        for (o, &x) in inst.s.data().iter().enumerate() {
            let e = inst.e.data()[o];
            assert_eq!(inst.support.contains(o), x != 0.0);
            assert_eq!(e, x.signum() * (x != 0.0) as u8 as f64);
            if x != 0.0 {
                assert!((0.5..=2.0).contains(&x.abs()));
            }
        }
        let mut inter = EntrySupport::full(inst.shape());
        for b in &inst.batch_masks {
            inter = inter.intersection(b).unwrap();
        }
        assert_eq!(inter, inst.support);
        assert!((inst.phi() - 0.2f64.powf(1.0 / 3.0)).abs() < 1e-15);
    }

    #[test]
    fn single_batch_is_the_support() {
        let inst = generate_instance(&InstanceSpec::new(&[8, 8], 1, 0.1, 1, FactorStyle::Gaussian, 9)).unwrap();
        assert_eq!(inst.batch_masks.len(), 1);
        assert_eq!(inst.batch_masks[0], inst.support);
        assert_eq!(inst.phi(), 0.1);
    }

    #[test]
    fn incoherent_rank_one_is_flat() {
        let inst = generate_instance(&InstanceSpec::new(&[12, 12, 12], 1, 0.02, 3, FactorStyle::Incoherent, 1)).unwrap();
        let first = inst.l.data()[0].abs();
        assert!(inst.l.data().iter().all(|x| (x.abs() - first).abs() < 1e-12));
    }

    #[test]
    fn rejects_bad_parameters() {
        let base = InstanceSpec::new(&[4, 4, 4], 1, 0.1, 2, FactorStyle::Gaussian, 0);
        for spec in [
            InstanceSpec { rank: 5, ..base.clone() },
            InstanceSpec { rank: 0, ..base.clone() },
            InstanceSpec { rho: 0.0, ..base.clone() },
            InstanceSpec { rho: 1.0, ..base.clone() },
            InstanceSpec { m: 0, ..base.clone() },
            InstanceSpec { magnitude_range: (2.0, 1.0), ..base.clone() },
        ] {
            assert!(matches!(generate_instance(&spec), Err(Error::Parameter(_))), "{spec:?}");
        }
    }

    #[test]
    fn archive_round_trip() {
        let spec = InstanceSpec::new(&[4, 3, 5], 2, 0.3, 2, FactorStyle::Gaussian, 4);
        let inst = generate_instance(&spec).unwrap();
        let doc = serde_json::to_string(&InstanceArchive::from_instance(&inst, Some(&spec))).unwrap();
        let back: InstanceArchive = serde_json::from_str(&doc).unwrap();
        let back = back.into_instance().unwrap();
        assert_eq!(back.l, inst.l);
        assert_eq!(back.s, inst.s);
        assert_eq!(back.batch_masks, inst.batch_masks);
    }
}
