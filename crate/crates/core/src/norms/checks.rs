//! Consistency checks between the two norms and the span subspace `T((V_k))`.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::subspace::{project, ModeFamily, ModeSet, SubspaceSelector};
use crate::tensor::DenseTensor;

use super::certify::{spectral_bounds, CertifyOptions, SpectralBounds};
use super::hopm::{run_start, spectral_hopm, HopmOptions};
use super::nuclear::{nuclear_sandwich, NuclearOptions, NuclearSandwich};

/// `⟨T, S⟩ ≤ ‖T‖_σ ‖S‖_*` evaluated with upper bounds on the right.
#[derive(Debug, Clone, Serialize)]
pub struct DualityReport {
    pub pairing: f64,
    pub spectral_upper: f64,
    pub nuclear_upper: f64,
    pub bound: f64,
    pub slack: f64,
    pub holds: bool,
    /// False when the spectral upper bound is only a multi-start value.
    pub certified: bool,
}

pub fn duality_gap_check(
    t: &DenseTensor,
    s: &DenseTensor,
    t_spectral: &SpectralBounds,
    s_nuclear: &NuclearSandwich,
) -> Result<DualityReport> {
    let pairing = t.inner(s)?;
    let bound = t_spectral.upper * s_nuclear.upper;
    // The products above carry a few ulps of rounding.
    let holds = pairing <= bound + 1e-12 * bound.abs().max(pairing.abs());
    Ok(DualityReport {
        pairing,
        spectral_upper: t_spectral.upper,
        nuclear_upper: s_nuclear.upper,
        bound,
        slack: bound - pairing,
        holds,
        certified: t_spectral.certified && s_nuclear.witness_certified,
    })
}

#[derive(Debug, Clone, Serialize)]
pub struct RestrictedReport {
    /// Largest `‖x_k − P_k x_k‖ / ‖x_k‖` over the polished maximizers.
    pub maximizer_residual: f64,
    pub maximizers_pass: bool,
    pub nuclear: NuclearSandwich,
    /// `⟨T, p(W)⟩` for the witness `W` scaled to spectral upper bound 1.
    pub projected_pairing: f64,
    pub projected_spectral: SpectralBounds,
    pub witness_pass: bool,
    pub pass: bool,
}

#[derive(Debug, Clone, Copy, Default)]
pub struct RestrictedOptions {
    pub hopm: HopmOptions,
    pub certify: CertifyOptions,
    pub nuclear: NuclearOptions,
}

/// For `T ∈ T((V_k))`: maximizers live in the `V_k`, and projecting a dual
/// witness onto `T((V_k))` keeps it a witness.
pub fn restricted_norm_check(t: &DenseTensor, family: &ModeFamily, opts: &RestrictedOptions) -> Result<RestrictedReport> {
    let span = SubspaceSelector::Basic(ModeSet::empty());
    let p = project(&span, family, t)?;
    let off = p.sub(t)?.frobenius();
    if off > 1e-10 * t.frobenius().max(1.0) {
        return Err(Error::pre(format!("tensor lies {off:e} away from the span subspace")));
    }

    let h = spectral_hopm(t, &opts.hopm)?;
    // One more sweep moves every vector into the span of the mode contractions.
    let polished = run_start(t, h.maximizers, 1e-14, 50, None).xs;
    let mut maximizer_residual = 0.0f64;
    for (k, x) in polished.iter().enumerate() {
        let b = family.subspace(k).basis();
        let coeff = b.transpose() * nalgebra::DVector::from_column_slice(x);
        let inside = b * coeff;
        let r: f64 = x.iter().zip(inside.iter()).map(|(a, c)| (a - c).powi(2)).sum::<f64>().sqrt();
        maximizer_residual = maximizer_residual.max(r / crate::numeric::norm2(x).max(f64::MIN_POSITIVE));
    }
    let maximizers_pass = t.is_zero() || maximizer_residual <= 1e-6;

    let nuclear = nuclear_sandwich(t, &opts.nuclear, None)?;
    let w = nuclear.dual_witness.scaled(1.0 / nuclear.witness_spectral_upper.max(f64::MIN_POSITIVE));
    let pw = project(&span, family, &w)?;
    let projected_pairing = t.inner(&pw)?;
    let projected_spectral = spectral_bounds(&pw, &opts.hopm, &opts.certify, None)?;
    // `W` has spectral norm at most 1, so a projection attaining more would refute the claim.
    let witness_pass = projected_pairing >= nuclear.lower * (1.0 - 1e-6) && projected_spectral.lower <= 1.0 + 1e-9;
    Ok(RestrictedReport {
        maximizer_residual,
        maximizers_pass,
        pass: maximizers_pass && witness_pass,
        nuclear,
        projected_pairing,
        projected_spectral,
        witness_pass,
    })
}
