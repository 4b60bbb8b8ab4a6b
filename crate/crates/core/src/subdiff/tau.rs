//! Empirical evidence on the stretch radii `τ̲`, `τ̄` of a subspace family.
//!
//! For a tensor `T`, some `Z ∈ Z(T)` and a direction `U` in the probed
//! subspace of `T`, bisection finds the largest `s ∈ [0, 2]` with certified
//! `‖Z + sU‖_σ ≤ 1`. The feasible end gives evidence `τ̄ ≥ ‖sU‖_σ`; a
//! certified infeasible end gives evidence `τ̲ ≤ ‖sU‖_σ`. Sampling can never
//! cover every `T` and `Z`, so these are evidence intervals, not values.

use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::norms::nuclear_sandwich;
use crate::rng;
use crate::subspace::{family_from_tensor, project, ModeFamily, ModeSet, SubspaceSelector};
use crate::tensor::DenseTensor;
use crate::verdict::Interval;

use super::{find_z_witness, gallery, SubdiffOptions};

#[derive(Debug, Clone)]
pub struct TauOptions {
    pub subdiff: SubdiffOptions,
    /// Mode ranks of the random tensors; defaults to `max(1, n_k / 2)`.
    pub ranks: Option<Vec<usize>>,
    /// `‖Z + sU‖_σ ≤ 1 + feas_tol` counts as feasible. Must exceed the
    /// certifier's relative gap so that norm-one tensors are recognised.
    pub feas_tol: f64,
    pub include_gallery: bool,
}

impl Default for TauOptions {
    fn default() -> Self {
        Self {
            subdiff: SubdiffOptions::default(),
            ranks: None,
            feas_tol: 1e-7,
            include_gallery: true,
        }
    }
}

/// A `(T, Z, X)` triple behind one end of the evidence interval.
#[derive(Debug, Clone, Serialize)]
pub struct TauWitness {
    pub source: String,
    pub t: DenseTensor,
    pub z: DenseTensor,
    pub x: DenseTensor,
    pub x_spectral: Interval,
    pub sum_spectral: Interval,
    pub feasible: bool,
}

impl TauWitness {
    /// Recomputes both spectral norms and confirms the recorded feasibility.
    pub fn reverify(&self, opts: &TauOptions) -> Result<bool> {
        let sum = opts.subdiff.spectral(&self.z.add(&self.x)?)?;
        let x = opts.subdiff.spectral(&self.x)?;
        let consistent = (x.lower - self.x_spectral.lower).abs() <= 1e-9 * x.lower.max(1.0);
        Ok(consistent
            && if self.feasible {
                sum.certified && sum.upper <= 1.0 + opts.feas_tol
            } else {
                sum.lower > 1.0 + opts.feas_tol
            })
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct TauTrial {
    pub source: String,
    /// Certified lower bound on `‖X‖_σ` at the largest feasible step.
    pub feasible_norm: Option<f64>,
    /// Certified upper bound on `‖X‖_σ` at the smallest certified-infeasible step.
    pub infeasible_norm: Option<f64>,
    pub note: Option<String>,
}

#[derive(Debug, Clone, Serialize)]
pub struct TauEstimate {
    pub selector: SubspaceSelector,
    pub d: usize,
    pub dims: Vec<usize>,
    /// Largest `‖X‖_σ` seen with `‖Z + X‖_σ ≤ 1`: evidence that `τ̄` is at least this.
    pub feasible_max: Option<f64>,
    /// Smallest `‖X‖_σ` seen with `‖Z + X‖_σ > 1`: evidence that `τ̲` is at most this.
    pub infeasible_min: Option<f64>,
    pub trials: usize,
    pub records: Vec<TauTrial>,
    pub feasible_witness: Option<TauWitness>,
    pub infeasible_witness: Option<TauWitness>,
    pub feas_tol: f64,
}

struct Job {
    source: String,
    t: DenseTensor,
    z: DenseTensor,
    u: DenseTensor,
}

struct Outcome {
    trial: TauTrial,
    feasible: Option<TauWitness>,
    infeasible: Option<TauWitness>,
}

fn embed(t: &DenseTensor, shape: &[usize]) -> Option<DenseTensor> {
    if t.order() != shape.len() || t.shape().iter().zip(shape).any(|(a, b)| a > b) {
        return None;
    }
    Some(DenseTensor::from_fn(shape, |idx| {
        if idx.iter().zip(t.shape()).all(|(i, n)| i < n) {
            t.get(idx).expect("index checked")
        } else {
            0.0
        }
    }))
}

fn in_subspace(sel: &SubspaceSelector, family: &ModeFamily, x: &DenseTensor) -> Result<bool> {
    let off = project(sel, family, x)?.sub(x)?.frobenius();
    Ok(!x.is_zero() && off <= 1e-10 * x.frobenius())
}

/// Gallery directions that fit the probed order, dimensions and subspace.
fn gallery_jobs(selector: &SubspaceSelector, shape: &[usize], opts: &TauOptions) -> Result<Vec<Job>> {
    let cases: [(&str, f64, &str); 8] = [
        ("oneperp", 1.0, "X"),
        ("oneperp", 1.0, "Y"),
        ("yuan3", 1.0, "X"),
        ("yuan3", -1.0, "X"),
        ("yuan4", 1.0, "X"),
        ("yuan4", -1.0, "X"),
        ("limitation", 1.0, "S"),
        ("limitation", -1.0, "S"),
    ];
    let mut jobs = Vec::new();
    for (name, sign, key) in cases {
        let c = gallery(name, Some(sign))?;
        let raw_t = c.tensor("T")?;
        let Some(t) = embed(raw_t, shape) else { continue };
        let mut dir = c.tensor(key)?.clone();
        if name == "limitation" {
            dir = dir.scaled(sign);
        }
        let Some(u) = embed(&dir, shape) else { continue };
        let family = family_from_tensor(&t, opts.subdiff.rank_tol);
        if !in_subspace(selector, &family, &u)? {
            continue;
        }
        let source = format!("gallery:{name} {key} sign {sign:+}");
        let known = embed(c.tensor("T")?, shape).expect("same shape as T");
        let known_z = match c.tensors.get("Z") {
            Some(z) => embed(z, shape).expect("same shape as T"),
            None => known,
        };
        let ns = nuclear_sandwich(&t, &opts.subdiff.nuclear, opts.subdiff.net.as_ref())?;
        let w = find_z_witness(&t, &ns, &opts.subdiff)?;
        if w.z.sub(&known_z)?.frobenius() > 1e-8 {
            jobs.push(Job { source: format!("{source} (witness Z)"), t: t.clone(), z: w.z, u: u.clone() });
        }
        jobs.push(Job { source, t, z: known_z, u });
    }
    Ok(jobs)
}

fn random_job(selector: &SubspaceSelector, shape: &[usize], ranks: &[usize], seed: u64, trial: usize, opts: &TauOptions) -> Result<std::result::Result<Job, TauTrial>> {
    let source = format!("random#{trial}");
    let n: usize = shape.iter().product();
    let mut r = rng::stream(rng::derive(seed, trial as u64), 0);
    let fam = ModeFamily::random(shape, ranks, &mut r)?;
    let t = project(&SubspaceSelector::Basic(ModeSet::empty()), &fam, &DenseTensor::new(shape.to_vec(), rng::gaussian_vec(&mut r, n))?)?;
    let family = family_from_tensor(&t, opts.subdiff.rank_tol);
    let u = project(selector, &family, &DenseTensor::new(shape.to_vec(), rng::gaussian_vec(&mut r, n))?)?;
    if t.is_zero() || u.frobenius() < 1e-8 {
        return Ok(Err(TauTrial {
            source,
            feasible_norm: None,
            infeasible_norm: None,
            note: Some("probed subspace is empty for this tensor".into()),
        }));
    }
    let ns = nuclear_sandwich(&t, &opts.subdiff.nuclear, opts.subdiff.net.as_ref())?;
    let z = find_z_witness(&t, &ns, &opts.subdiff)?.z;
    Ok(Ok(Job { source, t, z, u }))
}

enum Status {
    Feasible,
    Infeasible,
    Undecided,
}

fn status(z: &DenseTensor, u: &DenseTensor, s: f64, opts: &TauOptions) -> Result<(Status, Interval)> {
    let b = opts.subdiff.spectral(&z.lincomb(1.0, u, s)?)?;
    let st = if b.certified && b.upper <= 1.0 + opts.feas_tol {
        Status::Feasible
    } else if b.lower > 1.0 + opts.feas_tol {
        Status::Infeasible
    } else {
        Status::Undecided
    };
    Ok((st, Interval::from(&b)))
}

fn run_job(job: Job, bisect_tol: f64, opts: &TauOptions) -> Result<Outcome> {
    let ub = opts.subdiff.spectral(&job.u)?;
    let u = job.u.scaled(1.0 / ub.lower);
    let skip = |note: &str| Outcome {
        trial: TauTrial { source: job.source.clone(), feasible_norm: None, infeasible_norm: None, note: Some(note.into()) },
        feasible: None,
        infeasible: None,
    };
    let (s0, sum0) = status(&job.z, &u, 0.0, opts)?;
    if !matches!(s0, Status::Feasible) {
        return Ok(skip(&format!("bisection not bracketed: ‖Z‖_σ ∈ [{}, {}]", sum0.lower, sum0.upper)));
    }
    let (mut lo, mut lo_sum) = (0.0, sum0);
    let mut hi = 2.0;
    // Smallest step certified infeasible; the bracket end may be undecided.
    let mut infeasible_at: Option<(f64, Interval)> = None;
    let (s2, sum2) = status(&job.z, &u, 2.0, opts)?;
    match s2 {
        Status::Feasible => {
            lo = 2.0;
            lo_sum = sum2;
        }
        Status::Infeasible => infeasible_at = Some((2.0, sum2)),
        Status::Undecided => {}
    }
    if lo < hi {
        while hi - lo > bisect_tol {
            let mid = 0.5 * (lo + hi);
            let (st, sum) = status(&job.z, &u, mid, opts)?;
            match st {
                Status::Feasible => {
                    lo = mid;
                    lo_sum = sum;
                }
                Status::Infeasible => {
                    hi = mid;
                    infeasible_at = Some((mid, sum));
                }
                Status::Undecided => hi = mid,
            }
        }
    }

    let witness = |s: f64, sum: Interval, feasible: bool| -> Result<TauWitness> {
        let x = u.scaled(s);
        let xb = opts.subdiff.spectral(&x)?;
        Ok(TauWitness {
            source: job.source.clone(),
            t: job.t.clone(),
            z: job.z.clone(),
            x,
            x_spectral: Interval::from(&xb),
            sum_spectral: sum,
            feasible,
        })
    };
    let feasible = if lo > 0.0 { Some(witness(lo, lo_sum, true)?) } else { None };
    let infeasible = match infeasible_at {
        Some((s, sum)) => Some(witness(s, sum, false)?),
        None => None,
    };
    let note = match (&feasible, &infeasible) {
        (_, None) if lo < 2.0 => Some("no step beyond the feasible end was certified infeasible".to_string()),
        _ => None,
    };
    Ok(Outcome {
        trial: TauTrial {
            source: job.source.clone(),
            feasible_norm: feasible.as_ref().map(|w| w.x_spectral.lower).or(Some(0.0)),
            infeasible_norm: infeasible.as_ref().map(|w| w.x_spectral.upper),
            note,
        },
        feasible,
        infeasible,
    })
}

/// Probes the stretch radii of `selector` on `trials` random tensors of the
/// given shape plus every fitting gallery direction.
pub fn probe_tau(
    selector: &SubspaceSelector,
    shape: &[usize],
    trials: usize,
    seed: u64,
    bisect_tol: f64,
    opts: &TauOptions,
) -> Result<TauEstimate> {
    let d = shape.len();
    if d < 2 || shape.contains(&0) {
        return Err(Error::param(format!("shape {shape:?} needs at least two nonempty modes")));
    }
    selector.validate(d)?;
    if selector.basic_sets(d).contains(&ModeSet::empty()) {
        return Err(Error::pre(format!("{selector} is not orthogonal to the span subspace")));
    }
    if trials == 0 {
        return Err(Error::param("at least one trial is required"));
    }
    if !(bisect_tol > 0.0) {
        return Err(Error::param("bisection tolerance must be positive"));
    }
    let ranks = match &opts.ranks {
        Some(r) if r.len() == d => r.clone(),
        Some(r) => return Err(Error::dim(format!("{} ranks for order {d}", r.len()))),
        None => shape.iter().map(|&n| (n / 2).max(1)).collect(),
    };

    let mut jobs: Vec<std::result::Result<Job, TauTrial>> = Vec::new();
    if opts.include_gallery {
        jobs.extend(gallery_jobs(selector, shape, opts)?.into_iter().map(Ok));
    }
    let random: Vec<_> = (0..trials)
        .into_par_iter()
        .map(|i| random_job(selector, shape, &ranks, seed, i, opts))
        .collect::<Result<_>>()?;
    jobs.extend(random);

    let outcomes: Vec<Outcome> = jobs
        .into_par_iter()
        .map(|j| match j {
            Ok(job) => run_job(job, bisect_tol, opts),
            Err(trial) => Ok(Outcome { trial, feasible: None, infeasible: None }),
        })
        .collect::<Result<_>>()?;

    // Ties keep the earliest job, so the merge does not depend on scheduling.
    let mut feasible_witness: Option<TauWitness> = None;
    let mut infeasible_witness: Option<TauWitness> = None;
    let mut records = Vec::with_capacity(outcomes.len());
    for o in outcomes {
        if let Some(w) = o.feasible
            && feasible_witness.as_ref().is_none_or(|b| w.x_spectral.lower > b.x_spectral.lower)
        {
            feasible_witness = Some(w);
        }
        if let Some(w) = o.infeasible
            && infeasible_witness.as_ref().is_none_or(|b| w.x_spectral.upper < b.x_spectral.upper)
        {
            infeasible_witness = Some(w);
        }
        records.push(o.trial);
    }
    Ok(TauEstimate {
        selector: selector.clone(),
        d,
        dims: shape.to_vec(),
        feasible_max: feasible_witness.as_ref().map(|w| w.x_spectral.lower),
        infeasible_min: infeasible_witness.as_ref().map(|w| w.x_spectral.upper),
        trials,
        records,
        feasible_witness,
        infeasible_witness,
        feas_tol: opts.feas_tol,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn order_three_at_least_two_reaches_beyond_one() {
        let o = TauOptions::default();
        let est = probe_tau(&SubspaceSelector::at_least(3, 2), &[2, 2, 2], 2, 7, 1e-6, &o).unwrap();
        let want = 2.0 / 3f64.sqrt() - 1e-3;
        assert!(est.feasible_max.unwrap() >= want, "{:?}", est.feasible_max);
        assert!(est.feasible_witness.as_ref().unwrap().reverify(&o).unwrap());
        if let Some(w) = &est.infeasible_witness {
            assert!(w.reverify(&o).unwrap());
        }
    }

    #[test]
    fn singleton_mode_can_fail_at_any_radius() {
        let o = TauOptions::default();
        let est = probe_tau(&SubspaceSelector::Basic(ModeSet::from_modes(&[2])), &[2, 2, 3], 1, 1, 1e-6, &o).unwrap();
        assert!(est.infeasible_min.unwrap() < 1e-3, "{:?}", est.infeasible_min);
        assert!(est.infeasible_witness.unwrap().reverify(&o).unwrap());
    }

    #[test]
    fn rejects_span_subspace() {
        let o = TauOptions::default();
        let err = probe_tau(&SubspaceSelector::Basic(ModeSet::empty()), &[2, 2, 2], 1, 0, 1e-6, &o);
        assert!(matches!(err, Err(Error::Precondition(_))));
    }
}
