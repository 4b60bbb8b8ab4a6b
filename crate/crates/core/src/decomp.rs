//! Numerical checks of norm decomposability over pairs of orthogonal
//! subspaces built from a mode family.

use std::collections::BTreeMap;

use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::norms::{nuclear_sandwich, spectral_bounds, CertifyOptions, HopmOptions, NuclearOptions};
use crate::rng;
use crate::subspace::{project, ModeFamily, ModeSet, SubspaceSelector};
use crate::tensor::DenseTensor;
use crate::verdict::{Interval, Verdict};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum DecompMode {
    Spectral,
    Nuclear,
    LowerBound,
    Weak,
}

#[derive(Debug, Clone, Serialize)]
pub struct DecompReport {
    pub mode: DecompMode,
    /// Certified intervals of every norm involved, keyed by a short label.
    pub measured: BTreeMap<String, Interval>,
    /// Spectral and nuclear modes: distance from the claimed identity.
    /// Inequality modes: how far the claimed inequality is violated (negative
    /// values are slack).
    pub discrepancy: f64,
    pub verdict: Verdict,
    pub tolerances: BTreeMap<String, f64>,
}

#[derive(Debug, Clone, Copy)]
pub struct DecompOptions {
    pub hopm: HopmOptions,
    pub certify: CertifyOptions,
    pub nuclear: NuclearOptions,
    /// Largest spectral discrepancy accepted as equality.
    pub spectral_tol: f64,
    /// Allowance added to the combined sandwich gaps in the nuclear check.
    pub nuclear_slack: f64,
    /// Combined sandwich gap above which a nuclear check cannot pass.
    pub gap_budget: f64,
    /// Allowance in the inequality checks.
    pub inequality_slack: f64,
    /// Relative residual accepted in the subspace membership preconditions.
    pub membership_tol: f64,
}

impl Default for DecompOptions {
    fn default() -> Self {
        Self {
            hopm: HopmOptions::default(),
            certify: CertifyOptions::default(),
            nuclear: NuclearOptions { tol: 1e-7, ..NuclearOptions::default() },
            spectral_tol: 1e-6,
            nuclear_slack: 1e-3,
            gap_budget: 1e-2,
            inequality_slack: 1e-6,
            membership_tol: 1e-10,
        }
    }
}

fn require_member(sel: &SubspaceSelector, family: &ModeFamily, x: &DenseTensor, name: &str, tol: f64) -> Result<()> {
    let off = project(sel, family, x)?.sub(x)?.frobenius();
    if off > tol * x.frobenius().max(1.0) {
        return Err(Error::pre(format!("{name} is {off:e} away from {sel}")));
    }
    Ok(())
}

fn require_pair(t: &DenseTensor, s: &DenseTensor, family: &ModeFamily, modes: ModeSet, tol: f64) -> Result<()> {
    if modes.len() < 2 {
        return Err(Error::pre(format!("index set {{{modes}}} needs at least two modes")));
    }
    require_member(&SubspaceSelector::LowerU(modes), family, t, "T", tol)?;
    require_member(&SubspaceSelector::UpperU(modes), family, s, "S", tol)
}

fn tolerances(pairs: &[(&str, f64)]) -> BTreeMap<String, f64> {
    pairs.iter().map(|&(k, v)| (k.to_string(), v)).collect()
}

/// Draws a family with the given ranks and `T ∈ U_I`, `S ∈ U^I`.
pub fn sample_pair(shape: &[usize], ranks: &[usize], modes: ModeSet, seed: u64) -> Result<(ModeFamily, DenseTensor, DenseTensor)> {
    if modes.is_empty() || !modes.fits(shape.len()) {
        return Err(Error::param(format!("index set {{{modes}}} must be a nonempty subset of the modes")));
    }
    let lower = SubspaceSelector::LowerU(modes);
    let upper = SubspaceSelector::UpperU(modes);
    sample_with(shape, ranks, seed, &lower, &upper)
}

/// Draws a family and `T ∈ T((V_k))`, `S ∈ ⊕_{|I| ≥ 2} T^I((V_k))`.
pub fn sample_weak_pair(shape: &[usize], ranks: &[usize], seed: u64) -> Result<(ModeFamily, DenseTensor, DenseTensor)> {
    let d = shape.len();
    if d < 2 {
        return Err(Error::param("weak pairs need at least two modes"));
    }
    let span = SubspaceSelector::Basic(ModeSet::empty());
    sample_with(shape, ranks, seed, &span, &SubspaceSelector::at_least(d, 2))
}

fn sample_with(
    shape: &[usize],
    ranks: &[usize],
    seed: u64,
    first: &SubspaceSelector,
    second: &SubspaceSelector,
) -> Result<(ModeFamily, DenseTensor, DenseTensor)> {
    let n: usize = shape.iter().product();
    for attempt in 0..16u64 {
        let mut r = rng::stream(seed, attempt);
        let family = ModeFamily::random(shape, ranks, &mut r)?;
        let g1 = DenseTensor::new(shape.to_vec(), rng::gaussian_vec(&mut r, n))?;
        let g2 = DenseTensor::new(shape.to_vec(), rng::gaussian_vec(&mut r, n))?;
        let t = project(first, &family, &g1)?;
        let s = project(second, &family, &g2)?;
        if t.frobenius() > 1e-8 * g1.frobenius() && s.frobenius() > 1e-8 * g2.frobenius() {
            return Ok((family, t, s));
        }
    }
    Err(Error::param(format!("ranks {ranks:?} leave one of the two subspaces empty")))
}

/// `‖T + S‖_σ = max(‖T‖_σ, ‖S‖_σ)` for `T ∈ U_I`, `S ∈ U^I`, `|I| ≥ 2`.
pub fn check_spectral_decomp(
    t: &DenseTensor,
    s: &DenseTensor,
    family: &ModeFamily,
    modes: ModeSet,
    opts: &DecompOptions,
) -> Result<DecompReport> {
    require_pair(t, s, family, modes, opts.membership_tol)?;
    let sum = t.add(s)?;
    let bound = |x: &DenseTensor| spectral_bounds(x, &opts.hopm, &opts.certify, None);
    let (bt, bs, bsum) = (bound(t)?, bound(s)?, bound(&sum)?);
    let discrepancy = (bsum.lower - bt.lower.max(bs.lower)).abs();
    Ok(DecompReport {
        mode: DecompMode::Spectral,
        measured: [("T", &bt), ("S", &bs), ("T+S", &bsum)]
            .into_iter()
            .map(|(k, b)| (k.to_string(), Interval::from(b)))
            .collect(),
        discrepancy,
        verdict: Verdict::from_bool(discrepancy <= opts.spectral_tol),
        tolerances: tolerances(&[("spectral", opts.spectral_tol), ("certify-gap", opts.certify.rel_gap)]),
    })
}

/// `‖T + S‖_* = ‖T‖_* + ‖S‖_*` for `T ∈ U_I`, `S ∈ U^I`, `|I| ≥ 2`.
pub fn check_nuclear_decomp(
    t: &DenseTensor,
    s: &DenseTensor,
    family: &ModeFamily,
    modes: ModeSet,
    opts: &DecompOptions,
) -> Result<DecompReport> {
    require_pair(t, s, family, modes, opts.membership_tol)?;
    let sum = t.add(s)?;
    let nt = Interval::from(&nuclear_sandwich(t, &opts.nuclear, None)?);
    let ns = Interval::from(&nuclear_sandwich(s, &opts.nuclear, None)?);
    let nsum = Interval::from(&nuclear_sandwich(&sum, &opts.nuclear, None)?);
    let discrepancy = (nsum.mid() - nt.mid() - ns.mid()).abs();
    let gaps = nt.width() + ns.width() + nsum.width();
    let verdict = if discrepancy > gaps + opts.nuclear_slack {
        Verdict::Fail
    } else if gaps > opts.gap_budget {
        Verdict::Inconclusive
    } else {
        Verdict::Pass
    };
    Ok(DecompReport {
        mode: DecompMode::Nuclear,
        measured: [("T", nt), ("S", ns), ("T+S", nsum)]
            .into_iter()
            .map(|(k, b)| (k.to_string(), b))
            .collect(),
        discrepancy,
        verdict,
        tolerances: tolerances(&[
            ("slack", opts.nuclear_slack),
            ("gap-budget", opts.gap_budget),
            ("combined-gap", gaps),
        ]),
    })
}

/// `‖T‖_* ≥ ‖p_{U_I}(T)‖_* + ‖p_{U^I}(T)‖_*` for arbitrary `T`, `|I| ≥ 2`.
pub fn check_nuclear_lower_bound(t: &DenseTensor, family: &ModeFamily, modes: ModeSet, opts: &DecompOptions) -> Result<DecompReport> {
    if modes.len() < 2 {
        return Err(Error::pre(format!("index set {{{modes}}} needs at least two modes")));
    }
    let a = project(&SubspaceSelector::LowerU(modes), family, t)?;
    let b = project(&SubspaceSelector::UpperU(modes), family, t)?;
    let nt = Interval::from(&nuclear_sandwich(t, &opts.nuclear, None)?);
    let na = Interval::from(&nuclear_sandwich(&a, &opts.nuclear, None)?);
    let nb = Interval::from(&nuclear_sandwich(&b, &opts.nuclear, None)?);
    let discrepancy = na.lower + nb.lower - nt.upper;
    Ok(DecompReport {
        mode: DecompMode::LowerBound,
        measured: [("T", nt), ("lowerU(T)", na), ("upperU(T)", nb)]
            .into_iter()
            .map(|(k, b)| (k.to_string(), b))
            .collect(),
        discrepancy,
        verdict: Verdict::from_bool(discrepancy <= opts.inequality_slack),
        tolerances: tolerances(&[("slack", opts.inequality_slack)]),
    })
}

/// Default weak-decomposability constant: the sharper `1/2` for third-order
/// tensors, `2/(d(d−1))` otherwise.
pub fn weak_alpha(d: usize) -> f64 {
    if d == 3 { 0.5 } else { 2.0 / (d * (d - 1)) as f64 }
}

/// `‖T + S‖_* ≥ ‖T‖_* + α‖S‖_*` for `T ∈ T((V_k))`, `S ∈ ⊕_{|I|≥2} T^I`.
pub fn check_weak_decomp(
    t: &DenseTensor,
    s: &DenseTensor,
    family: &ModeFamily,
    alpha: Option<f64>,
    opts: &DecompOptions,
) -> Result<DecompReport> {
    let d = family.order();
    if d < 2 {
        return Err(Error::pre("weak decomposability needs at least two modes"));
    }
    let alpha = alpha.unwrap_or_else(|| weak_alpha(d));
    if !(alpha >= 0.0) {
        return Err(Error::param("alpha must be nonnegative"));
    }
    require_member(&SubspaceSelector::Basic(ModeSet::empty()), family, t, "T", opts.membership_tol)?;
    require_member(&SubspaceSelector::at_least(d, 2), family, s, "S", opts.membership_tol)?;
    let sum = t.add(s)?;
    let nt = Interval::from(&nuclear_sandwich(t, &opts.nuclear, None)?);
    let ns = Interval::from(&nuclear_sandwich(s, &opts.nuclear, None)?);
    let nsum = Interval::from(&nuclear_sandwich(&sum, &opts.nuclear, None)?);
    let discrepancy = nt.lower + alpha * ns.lower - nsum.upper;
    Ok(DecompReport {
        mode: DecompMode::Weak,
        measured: [("T", nt), ("S", ns), ("T+S", nsum)]
            .into_iter()
            .map(|(k, b)| (k.to_string(), b))
            .collect(),
        discrepancy,
        verdict: Verdict::from_bool(discrepancy <= opts.inequality_slack),
        tolerances: tolerances(&[("alpha", alpha), ("slack", opts.inequality_slack)]),
    })
}

#[derive(Debug, Clone)]
pub struct SuiteConfig {
    pub mode: DecompMode,
    pub shape: Vec<usize>,
    pub ranks: Vec<usize>,
    /// The index set `I`; ignored by the weak suite.
    pub modes: ModeSet,
    pub trials: usize,
    pub seed: u64,
    pub alpha: Option<f64>,
    pub opts: DecompOptions,
}

#[derive(Debug, Clone, Serialize)]
pub struct TrialRecord {
    pub trial: usize,
    pub report: DecompReport,
}

#[derive(Debug, Clone, Serialize)]
pub struct SuiteSummary {
    pub mode: DecompMode,
    pub shape: Vec<usize>,
    pub trials: usize,
    pub pass: usize,
    pub fail: usize,
    pub inconclusive: usize,
    pub max_discrepancy: f64,
    pub records: Vec<TrialRecord>,
}

impl SuiteSummary {
    pub fn verdict(&self) -> Verdict {
        if self.fail > 0 {
            Verdict::Fail
        } else if self.inconclusive > 0 {
            Verdict::Inconclusive
        } else {
            Verdict::Pass
        }
    }
}

fn run_trial(cfg: &SuiteConfig, trial: usize) -> Result<DecompReport> {
    let seed = rng::derive(cfg.seed, trial as u64);
    let o = &cfg.opts;
    match cfg.mode {
        DecompMode::Spectral => {
            let (f, t, s) = sample_pair(&cfg.shape, &cfg.ranks, cfg.modes, seed)?;
            check_spectral_decomp(&t, &s, &f, cfg.modes, o)
        }
        DecompMode::Nuclear => {
            let (f, t, s) = sample_pair(&cfg.shape, &cfg.ranks, cfg.modes, seed)?;
            check_nuclear_decomp(&t, &s, &f, cfg.modes, o)
        }
        DecompMode::LowerBound => {
            let (f, _, _) = sample_pair(&cfg.shape, &cfg.ranks, cfg.modes, seed)?;
            let n: usize = cfg.shape.iter().product();
            let g = rng::gaussian_vec(&mut rng::stream(seed, u64::MAX), n);
            check_nuclear_lower_bound(&DenseTensor::new(cfg.shape.clone(), g)?, &f, cfg.modes, o)
        }
        DecompMode::Weak => {
            let (f, t, s) = sample_weak_pair(&cfg.shape, &cfg.ranks, seed)?;
            check_weak_decomp(&t, &s, &f, cfg.alpha, o)
        }
    }
}

/// Runs independent seeded trials; trial `i` depends only on `(seed, i)`.
pub fn run_suite(cfg: &SuiteConfig) -> Result<SuiteSummary> {
    let reports = (0..cfg.trials)
        .into_par_iter()
        .map(|i| run_trial(cfg, i).map(|report| TrialRecord { trial: i, report }))
        .collect::<Result<Vec<_>>>()?;
    let count = |v: Verdict| reports.iter().filter(|r| r.report.verdict == v).count();
    Ok(SuiteSummary {
        mode: cfg.mode,
        shape: cfg.shape.clone(),
        trials: cfg.trials,
        pass: count(Verdict::Pass),
        fail: count(Verdict::Fail),
        inconclusive: count(Verdict::Inconclusive),
        max_discrepancy: reports.iter().map(|r| r.report.discrepancy).fold(f64::NEG_INFINITY, f64::max),
        records: reports,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numeric::unit_vector;
    use crate::subspace::ModeSubspace;
    use crate::tensor::outer_atom;

    fn e(i: usize) -> Vec<f64> {
        unit_vector(2, i)
    }

    fn e1_family(d: usize) -> ModeFamily {
        ModeFamily::new(vec![ModeSubspace::coordinate(2, &[0]); d]).unwrap()
    }

    fn i12() -> ModeSet {
        ModeSet::from_modes(&[0, 1])
    }

    #[test]
    fn diagonal_pair_is_decomposable() {
        let t = outer_atom(&[e(0), e(0), e(0)], 1.0).unwrap();
        let s = outer_atom(&[e(1), e(1), e(1)], 1.0).unwrap();
        let f = e1_family(3);
        let all = ModeSet::full(3);
        let o = DecompOptions::default();
        let r = check_spectral_decomp(&t, &s, &f, all, &o).unwrap();
        assert_eq!(r.verdict, Verdict::Pass);
        assert!((r.measured["T+S"].lower - 1.0).abs() < 1e-12);
        let n = check_nuclear_decomp(&t, &s, &f, all, &o).unwrap();
        assert_eq!(n.verdict, Verdict::Pass, "{n:?}");
        assert!((n.measured["T+S"].mid() - 2.0).abs() < 1e-6);
    }

    #[test]
    fn scaled_pair_follows_the_larger_norm() {
        let (f, t, s) = sample_pair(&[2, 2, 2], &[1, 1, 1], i12(), 3).unwrap();
        let o = DecompOptions::default();
        let r = check_spectral_decomp(&t.scaled(2.0), &s, &f, i12(), &o).unwrap();
        assert_eq!(r.verdict, Verdict::Pass);
        let want = r.measured["T"].lower.max(r.measured["S"].lower);
        assert!((r.measured["T+S"].lower - want).abs() < 1e-6);
    }

    #[test]
    fn sampled_pairs_are_orthogonal_and_reproducible() {
        let (f, t, s) = sample_pair(&[2, 2, 2], &[1, 1, 1], i12(), 9).unwrap();
        assert!(t.inner(&s).unwrap().abs() < 1e-12);
        require_member(&SubspaceSelector::LowerU(i12()), &f, &t, "T", 1e-12).unwrap();
        let (_, t2, s2) = sample_pair(&[2, 2, 2], &[1, 1, 1], i12(), 9).unwrap();
        assert_eq!(t.data(), t2.data());
        assert_eq!(s.data(), s2.data());
        assert!(sample_pair(&[2, 2], &[3, 1], i12(), 0).is_err());
    }

    #[test]
    fn membership_is_enforced() {
        let t = outer_atom(&[e(1), e(0), e(0)], 1.0).unwrap();
        let s = outer_atom(&[e(1), e(1), e(1)], 1.0).unwrap();
        let r = check_spectral_decomp(&t, &s, &e1_family(3), i12(), &DecompOptions::default());
        assert!(matches!(r, Err(Error::Precondition(_))));
        let r = check_spectral_decomp(&s, &s, &e1_family(3), ModeSet::from_modes(&[0]), &DecompOptions::default());
        assert!(matches!(r, Err(Error::Precondition(_))));
    }

    #[test]
    fn matrix_blocks_add_exactly() {
        // Block-diagonal matrices with disjoint row and column spaces.
        let t = DenseTensor::new(vec![4, 4], vec![
            3.0, 1.0, 0.0, 0.0, //
            1.0, 2.0, 0.0, 0.0, //
            0.0, 0.0, 0.0, 0.0, //
            0.0, 0.0, 0.0, 0.0,
        ])
        .unwrap();
        let s = DenseTensor::new(vec![4, 4], vec![
            0.0, 0.0, 0.0, 0.0, //
            0.0, 0.0, 0.0, 0.0, //
            0.0, 0.0, 1.0, -2.0, //
            0.0, 0.0, 0.5, 1.0,
        ])
        .unwrap();
        let f = ModeFamily::new(vec![ModeSubspace::coordinate(4, &[0, 1]), ModeSubspace::coordinate(4, &[0, 1])]).unwrap();
        let r = check_nuclear_decomp(&t, &s, &f, ModeSet::full(2), &DecompOptions::default()).unwrap();
        assert_eq!(r.verdict, Verdict::Pass);
        assert!(r.discrepancy < 1e-10, "{}", r.discrepancy);
    }

    #[test]
    fn weak_with_zero_perturbation_is_equality() {
        let t = outer_atom(&[e(0), e(0), e(0)], 1.0).unwrap();
        let s = DenseTensor::zeros(&[2, 2, 2]);
        let r = check_weak_decomp(&t, &s, &e1_family(3), None, &DecompOptions::default()).unwrap();
        assert_eq!(r.verdict, Verdict::Pass);
        assert!(r.discrepancy.abs() < 1e-8);
        assert_eq!(r.tolerances["alpha"], 0.5);
    }

    #[test]
    fn matrix_lower_bound_holds() {
        let mut r = rng::stream(5, 0);
        let f = ModeFamily::random(&[4, 4], &[2, 2], &mut r).unwrap();
        let t = DenseTensor::new(vec![4, 4], rng::gaussian_vec(&mut r, 16)).unwrap();
        let rep = check_nuclear_lower_bound(&t, &f, ModeSet::full(2), &DecompOptions::default()).unwrap();
        assert_eq!(rep.verdict, Verdict::Pass, "{rep:?}");
        assert!(rep.discrepancy < 0.0, "a generic tensor leaves strict slack");
    }

    #[test]
    fn small_spectral_suite() {
        let cfg = SuiteConfig {
            mode: DecompMode::Spectral,
            shape: vec![2, 2, 2],
            ranks: vec![1, 1, 1],
            modes: i12(),
            trials: 4,
            seed: 1,
            alpha: None,
            opts: DecompOptions::default(),
        };
        let s = run_suite(&cfg).unwrap();
        assert_eq!(s.pass, 4, "{:?}", s.max_discrepancy);
    }
}
