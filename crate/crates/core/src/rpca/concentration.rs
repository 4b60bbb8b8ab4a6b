//! Monte-Carlo samples of the random operators that drive the certificate
//! analysis, printed next to the closed-form bounds they are compared with.

use rand::RngExt;
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::norms::{spectral_hopm, HopmOptions};
use crate::rng;
use crate::subspace::{family_from_tensor, operator_norm_chain, ChainOp, EntrySupport, OperatorNormOptions};
use crate::tensor::DenseTensor;

use super::certificate::LowRankSpace;

#[derive(Debug, Clone)]
pub struct ConcentrationOptions {
    pub trials: usize,
    pub seed: u64,
    /// Density of the fresh sign tensors; defaults to `1 − q`.
    pub sign_density: Option<f64>,
    pub rank_tol: f64,
    pub hopm: HopmOptions,
    pub operator: OperatorNormOptions,
}

impl Default for ConcentrationOptions {
    fn default() -> Self {
        Self {
            trials: 20,
            seed: 0,
            sign_density: None,
            rank_tol: crate::subspace::DEFAULT_RANK_TOL,
            hopm: HopmOptions { starts: 8, ..HopmOptions::default() },
            operator: OperatorNormOptions { dense_cutoff: 0, ..OperatorNormOptions::default() },
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct ConcentrationRecord {
    pub trial: usize,
    pub sampled: usize,
    /// `‖p_𝕃 (id − q⁻¹ p_I) p_𝕃‖`.
    pub deviation: f64,
    /// `‖p_𝕃 p_{I^⊥}‖`.
    pub perp_coupling: f64,
    /// `√(1 − q + q·deviation)`, which bounds `perp_coupling` for every sample.
    pub envelope: f64,
    /// Best-effort `‖E‖_σ` of a fresh sign tensor (multi-start lower bound).
    pub sign_spectral: f64,
}

#[derive(Debug, Clone, Copy, Serialize)]
pub struct Quantiles {
    pub min: f64,
    pub median: f64,
    pub max: f64,
}

impl Quantiles {
    fn of(mut xs: Vec<f64>) -> Self {
        xs.sort_by(f64::total_cmp);
        let n = xs.len();
        let median = if n % 2 == 1 { xs[n / 2] } else { 0.5 * (xs[n / 2 - 1] + xs[n / 2]) };
        Self { min: xs[0], median, max: xs[n - 1] }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct ConcentrationReport {
    pub q: f64,
    pub sign_density: f64,
    pub u0: f64,
    pub ranks: Vec<usize>,
    pub records: Vec<ConcentrationRecord>,
    pub deviation: Quantiles,
    pub perp_coupling: Quantiles,
    pub sign_spectral: Quantiles,
    /// `min(1, Π n_k · exp(−3t²q / (u0 (6 + 2t) Σ r_k/n_k)))` at `t` = median deviation.
    pub bernstein_tail_at_median: f64,
    /// `√(Σ n_k) / √(−ln ρ)` with `ρ` the sign density; the unknown constant is fitted below.
    pub sign_reference: f64,
    /// Median of `‖E‖_σ / sign_reference`.
    pub fitted_sign_constant: f64,
}

pub fn concentration_trial(l: &DenseTensor, q: f64, opts: &ConcentrationOptions) -> Result<ConcentrationReport> {
    if !(q > 0.0 && q <= 1.0) {
        return Err(Error::param(format!("q = {q} outside (0, 1]")));
    }
    if opts.trials == 0 {
        return Err(Error::param("at least one trial is required"));
    }
    let density = opts.sign_density.unwrap_or(1.0 - q);
    if !(0.0..=1.0).contains(&density) {
        return Err(Error::param(format!("sign density {density} outside [0, 1]")));
    }
    let space = LowRankSpace::from_tensor(l, opts.rank_tol)?;
    let shape = l.shape().to_vec();
    let n: usize = shape.iter().product();

    let records = (0..opts.trials)
        .into_par_iter()
        .map(|trial| {
            let mut r = rng::stream(rng::derive(opts.seed, trial as u64), 0);
            let mask: Vec<bool> = (0..n).map(|_| r.random_bool(q)).collect();
            let support = EntrySupport::from_mask(&shape, mask)?;
            let weights = DenseTensor::new(
                shape.clone(),
                support.mask().iter().map(|&b| if b { 1.0 - 1.0 / q } else { 1.0 }).collect(),
            )?;
            let deviation = operator_norm_chain(&[space.op(), ChainOp::Weights(&weights), space.op()], &shape, &opts.operator)?;
            let perp = ChainOp::Support { support: &support, complement: true };
            let perp_coupling = operator_norm_chain(&[space.op(), perp], &shape, &opts.operator)?;

            let signs: Vec<f64> = (0..n)
                .map(|_| {
                    if r.random_bool(density) {
                        if r.random_bool(0.5) { 1.0 } else { -1.0 }
                    } else {
                        0.0
                    }
                })
                .collect();
            let e = DenseTensor::new(shape.clone(), signs)?;
            let sign_spectral = if e.is_zero() { 0.0 } else { spectral_hopm(&e, &opts.hopm)?.value };
            Ok(ConcentrationRecord {
                trial,
                sampled: support.count(),
                deviation,
                perp_coupling,
                envelope: (1.0 - q + q * deviation).sqrt(),
                sign_spectral,
            })
        })
        .collect::<Result<Vec<_>>>()?;

    let family = family_from_tensor(l, opts.rank_tol);
    let ranks = family.ranks();
    let u0 = family
        .subspaces()
        .iter()
        .map(|s| s.ambient_dim() as f64 / s.dim() as f64 * s.leverage().into_iter().fold(0.0, f64::max))
        .fold(0.0, f64::max);
    let ratio: f64 = ranks.iter().zip(&shape).map(|(&r, &n)| r as f64 / n as f64).sum();
    let deviation = Quantiles::of(records.iter().map(|r| r.deviation).collect());
    let t = deviation.median;
    let tail = (n as f64) * (-3.0 * t * t * q / (u0 * (6.0 + 2.0 * t) * ratio)).exp();
    let sign_reference = if density > 0.0 && density < 1.0 {
        (shape.iter().sum::<usize>() as f64).sqrt() / (-density.ln()).sqrt()
    } else {
        f64::NAN
    };
    let sign_spectral = Quantiles::of(records.iter().map(|r| r.sign_spectral).collect());
    let fitted = Quantiles::of(records.iter().map(|r| r.sign_spectral / sign_reference).collect()).median;
    Ok(ConcentrationReport {
        q,
        sign_density: density,
        u0,
        ranks,
        perp_coupling: Quantiles::of(records.iter().map(|r| r.perp_coupling).collect()),
        deviation,
        sign_spectral,
        records,
        bernstein_tail_at_median: tail.min(1.0),
        sign_reference,
        fitted_sign_constant: fitted,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::tensor::outer_atom;

    fn flat(n: usize) -> DenseTensor {
        let v: Vec<f64> = (0..n).map(|i| if i % 3 == 0 { -1.0 } else { 1.0 } / (n as f64).sqrt()).collect();
        outer_atom(&[v.clone(), v.clone(), v], 1.0).unwrap()
    }

    #[test]
    fn full_sampling_has_no_deviation() {
        let rep = concentration_trial(&flat(5), 1.0, &ConcentrationOptions { trials: 3, ..Default::default() }).unwrap();
        assert!(rep.records.iter().all(|r| r.deviation == 0.0 && r.perp_coupling == 0.0));
    }

    #[test]
    fn coupling_stays_under_envelope() {
        let opts = ConcentrationOptions { trials: 10, seed: 3, ..Default::default() };
        let rep = concentration_trial(&flat(8), 0.9, &opts).unwrap();
        for r in &rep.records {
            assert!(r.perp_coupling <= r.envelope + 1e-8, "{r:?}");
            assert!(r.sign_spectral > 0.0);
        }
        assert!(rep.deviation.min <= rep.deviation.median && rep.deviation.median <= rep.deviation.max);
        assert!((rep.u0 - 1.0).abs() < 1e-12);
        let again = concentration_trial(&flat(8), 0.9, &opts).unwrap();
        assert_eq!(again.records[4].deviation, rep.records[4].deviation);
    }

    #[test]
    fn rejects_bad_probability() {
        assert!(concentration_trial(&flat(4), 0.0, &ConcentrationOptions::default()).is_err());
        assert!(concentration_trial(&flat(4), 1.5, &ConcentrationOptions::default()).is_err());
    }
}
