//! End-to-end reproduction checks. Each criterion runs a fixed, seeded
//! experiment and reports pass/fail with the numbers behind the verdict.

use std::collections::BTreeMap;
use std::time::Instant;

use rayon::prelude::*;
use serde::Serialize;

use crate::decomp::{run_suite, DecompMode, DecompOptions, SuiteConfig};
use crate::error::{Error, Result};
use crate::norms::{nuclear_sandwich, spectral_bounds, CertifyOptions, HopmOptions, NuclearOptions};
use crate::rng;
use crate::rpca::{
    build_certificate, default_lambda, generate_instance, matrix_trial, support_free,
    AdmmOptions, CertifyConfig, FactorStyle, InstanceSpec, COND_COUPLING,
};
use crate::subdiff::{gallery, is_subgradient, probe_tau, solve_sphere_program, sphere_program, z_membership};
use crate::subdiff::{SphereOptions, SubdiffOptions, TauOptions};
use crate::subspace::{basic_split, project, ModeFamily, ModeSet, SubspaceSelector};
use crate::tensor::DenseTensor;
use crate::verdict::Verdict;

pub const CRITERIA: [(u8, &str); 11] = [
    (1, "closed-form spectral norms"),
    (2, "sphere programs"),
    (3, "nuclear norm is not additive on a coherent pair"),
    (4, "spectral decomposability suite"),
    (5, "nuclear decomposability suite"),
    (6, "weak decomposability suite"),
    (7, "subdifferential membership"),
    (8, "stretch-radius probing"),
    (9, "matrix robust PCA recovery"),
    (10, "tensor certificate pipeline"),
    (11, "projection algebra"),
];

#[derive(Debug, Clone, Serialize)]
pub struct CriterionOutcome {
    pub id: u8,
    pub name: String,
    pub pass: bool,
    pub seconds: f64,
    pub summary: String,
    pub metrics: BTreeMap<String, f64>,
}

#[derive(Default)]
struct Tally {
    ok: bool,
    notes: Vec<String>,
    metrics: BTreeMap<String, f64>,
}

impl Tally {
    fn new() -> Self {
        Self { ok: true, ..Self::default() }
    }

    fn check(&mut self, ok: bool, what: impl Into<String>) {
        if !ok {
            self.ok = false;
            self.notes.push(what.into());
        }
    }

    fn metric(&mut self, k: &str, v: f64) {
        self.metrics.insert(k.to_string(), v);
    }

    fn note(&mut self, s: impl Into<String>) {
        self.notes.push(s.into());
    }
}

pub fn run_criterion(id: u8) -> Result<CriterionOutcome> {
    let name = CRITERIA
        .iter()
        .find(|(i, _)| *i == id)
        .ok_or_else(|| Error::Lookup(format!("criterion {id}")))?
        .1;
    let start = Instant::now();
    let mut tally = Tally::new();
    let budget = match id {
        1 => closed_form_spectral(&mut tally).map(|_| Some(5.0)),
        2 => sphere_values(&mut tally).map(|_| Some(10.0)),
        3 => coherent_pair(&mut tally).map(|_| Some(60.0)),
        4 => spectral_suite(&mut tally).map(|_| None),
        5 => nuclear_suite(&mut tally).map(|_| None),
        6 => weak_suite(&mut tally).map(|_| None),
        7 => membership(&mut tally).map(|_| None),
        8 => stretch(&mut tally).map(|_| None),
        9 => matrix_recovery(&mut tally).map(|_| Some(60.0)),
        10 => tensor_pipeline(&mut tally).map(|_| None),
        _ => projection_algebra(&mut tally).map(|_| None),
    }?;
    let seconds = start.elapsed().as_secs_f64();
    if let Some(limit) = budget {
        tally.check(seconds < limit, format!("runtime {seconds:.2}s exceeds {limit}s"));
    }
    let summary = if tally.notes.is_empty() { "all checks hold".to_string() } else { tally.notes.join("; ") };
    Ok(CriterionOutcome { id, name: name.to_string(), pass: tally.ok, seconds, summary, metrics: tally.metrics })
}

pub fn run_all() -> Result<Vec<CriterionOutcome>> {
    CRITERIA.iter().map(|&(id, _)| run_criterion(id)).collect()
}

/// The certified gap only needs to resolve the 1e-6 tolerance. `Z(1)` attains
/// its norm on a whole circle, which makes tighter gaps expensive.
fn bounds(t: &DenseTensor) -> Result<crate::norms::SpectralBounds> {
    spectral_bounds(t, &HopmOptions::default(), &CertifyOptions { rel_gap: 5e-7, ..CertifyOptions::default() }, None)
}

fn expect_spectral(tally: &mut Tally, label: &str, t: &DenseTensor, want: f64) -> Result<()> {
    let b = bounds(t)?;
    let err = (b.lower - want).abs().max((b.upper - want).abs());
    tally.check(b.certified && err <= 1e-6, format!("{label}: [{}, {}] vs {want}", b.lower, b.upper));
    let worst = tally.metrics.get("max_error").copied().unwrap_or(0.0);
    tally.metric("max_error", worst.max(err));
    Ok(())
}

fn closed_form_spectral(tally: &mut Tally) -> Result<()> {
    let s3 = 3f64.sqrt();
    for (t, want) in [(1.0, 2.0 / s3), (1.0 / 3.0, 2.0 / (3.0 * s3))] {
        let c = gallery("yuan3", Some(t))?;
        expect_spectral(tally, &format!("X({t})"), c.tensor("X")?, want)?;
    }
    for t in [-1.0f64, -0.5, 0.0, 0.5, 0.6, -1.1] {
        let want = if (-1.0..=0.5).contains(&t) { 1.0 } else { 2.0 * (t * t * t / (3.0 * t - 1.0)).sqrt() };
        let c = gallery("yuan3", Some(t))?;
        expect_spectral(tally, &format!("Z+X({t})"), c.tensor("Z+X")?, want)?;
    }
    for t in [0.0, 0.5, 1.0, 1.5] {
        let c = gallery("notsingle", Some(t))?;
        expect_spectral(tally, &format!("Z({t})"), c.tensor("Z")?, f64::max(1.0, t))?;
    }
    Ok(())
}

fn sphere_values(tally: &mut Tally) -> Result<()> {
    let want = [
        ("opt-b1", (1.0 + 2f64.sqrt()) / 2.0),
        ("opt-b2", 1.5),
        ("opt-d4-a", (1.0 + 3f64.sqrt()) / 2.0),
        ("opt-d4-b", 1.6),
    ];
    let got = want
        .par_iter()
        .map(|(name, _)| solve_sphere_program(&sphere_program(name)?, &SphereOptions::default()))
        .collect::<Result<Vec<_>>>()?;
    for ((name, w), s) in want.iter().zip(got) {
        tally.metric(name, s.value);
        tally.check((s.value - w).abs() <= 1e-6 && s.constraint_slack >= 0.0, format!("{name}: {} vs {w}", s.value));
    }
    Ok(())
}

fn coherent_pair(tally: &mut Tally) -> Result<()> {
    let c = gallery("limitation", None)?;
    let opts = NuclearOptions::default();
    let keys = ["T", "S", "T+S"];
    let s = keys
        .par_iter()
        .map(|k| nuclear_sandwich(c.tensor(k)?, &opts, None))
        .collect::<Result<Vec<_>>>()?;
    let (t, s, ts) = (&s[0], &s[1], &s[2]);
    for (k, x) in keys.iter().zip([t, s, ts]) {
        tally.metric(&format!("lower({k})"), x.lower);
        tally.metric(&format!("upper({k})"), x.upper);
    }
    tally.check((t.lower - 1.0).abs() <= 1e-8 && (t.upper - 1.0).abs() <= 1e-8, format!("T sandwich [{}, {}]", t.lower, t.upper));
    tally.check((ts.mid() - 3.078).abs() <= 0.02, format!("mid(T+S) = {}", ts.mid()));
    tally.check((s.mid() - 3.162).abs() <= 0.02, format!("mid(S) = {}", s.mid()));
    tally.check(ts.mid() < t.mid() + s.mid(), "sum is additive");
    tally.check(ts.mid() < s.mid(), "mid(T+S) >= mid(S)");
    Ok(())
}

fn suite(mode: DecompMode, shape: &[usize], trials: usize, seed: u64, opts: DecompOptions) -> Result<crate::decomp::SuiteSummary> {
    run_suite(&SuiteConfig {
        mode,
        shape: shape.to_vec(),
        ranks: vec![1; shape.len()],
        modes: ModeSet::from_modes(&[0, 1]),
        trials,
        seed,
        alpha: None,
        opts,
    })
}

fn spectral_suite(tally: &mut Tally) -> Result<()> {
    let mut pass = 0;
    let mut worst = 0.0f64;
    for (shape, seed) in [(&[2, 2, 2][..], 41), (&[2, 2, 2, 2][..], 42)] {
        let s = suite(DecompMode::Spectral, shape, 50, seed, DecompOptions::default())?;
        pass += s.records.iter().filter(|r| r.report.discrepancy <= 1e-6).count();
        worst = worst.max(s.max_discrepancy);
    }
    tally.metric("within_tolerance", pass as f64);
    tally.metric("max_discrepancy", worst);
    tally.check(pass == 100, format!("{pass}/100 trials within 1e-6"));
    Ok(())
}

fn nuclear_suite(tally: &mut Tally) -> Result<()> {
    let s = suite(DecompMode::Nuclear, &[2, 2, 2], 50, 51, DecompOptions::default())?;
    tally.metric("pass", s.pass as f64);
    tally.metric("fail", s.fail as f64);
    tally.metric("inconclusive", s.inconclusive as f64);
    tally.check(s.pass >= 48 && s.fail == 0, format!("pass {} fail {} inconclusive {}", s.pass, s.fail, s.inconclusive));
    Ok(())
}

fn weak_suite(tally: &mut Tally) -> Result<()> {
    let s = suite(DecompMode::Weak, &[2, 2, 2], 100, 61, DecompOptions::default())?;
    let margins: Vec<f64> = s
        .records
        .iter()
        .map(|r| {
            let m = &r.report.measured;
            m["T+S"].mid() - m["T"].mid() - 0.5 * m["S"].mid()
        })
        .collect();
    let held = margins.iter().filter(|&&x| x >= -1e-3).count();
    tally.metric("held", held as f64);
    tally.metric("min_margin", margins.iter().copied().fold(f64::INFINITY, f64::min));
    tally.check(held == 100, format!("{held}/100 trials satisfy the inequality"));
    Ok(())
}

fn membership(tally: &mut Tally) -> Result<()> {
    // (label, gallery case, parameter, tensor tested against T, expected pass)
    let mut cases: Vec<(String, &str, f64, &str, bool)> = Vec::new();
    for t in [-1.0, -0.5, 0.0, 0.5, 1.0] {
        cases.push((format!("Z({t}) in Z(T)"), "notsingle", t, "Z", true));
    }
    cases.push(("Z+X(0.8)".into(), "oneperp", 0.8, "Z+X", true));
    cases.push(("Z+Y(0.3)".into(), "oneperp", 0.3, "Z+Y", false));
    for (t, ok) in [(-1.0, true), (0.5, true), (-1.05, false), (0.55, false)] {
        cases.push((format!("yuan3 Z+X({t})"), "yuan3", t, "Z+X", ok));
    }
    let lo = -(1.0 + 2f64.sqrt()) / 3.0;
    for (t, ok) in [(lo + 1e-3, true), (1.0 / 3.0 - 1e-3, true), (0.35, false)] {
        cases.push((format!("yuan4 Z+X({t:.6})"), "yuan4", t, "Z+X", ok));
    }
    let opts = SubdiffOptions::default();
    let verdicts = cases
        .par_iter()
        .map(|(_, name, t, key, _)| -> Result<Verdict> {
            let c = gallery(name, Some(*t))?;
            let tt = c.tensor("T")?;
            let g = match *key {
                "Z" => return Ok(z_membership(c.tensor("Z")?, tt, &opts)?.verdict),
                "Z+Y" => c.tensor("Z")?.add(c.tensor("Y")?)?,
                _ => c.tensors.get("Z+X").cloned().map_or_else(|| c.tensor("Z")?.add(c.tensor("X")?), Ok)?,
            };
            Ok(is_subgradient(&g, tt, &opts)?.verdict)
        })
        .collect::<Result<Vec<_>>>()?;
    let mut wrong = 0;
    for ((label, .., want), v) in cases.iter().zip(verdicts) {
        let expected = if *want { Verdict::Pass } else { Verdict::Fail };
        if v != expected {
            wrong += 1;
            tally.note(format!("{label}: {v:?}"));
        }
    }
    tally.metric("cases", cases.len() as f64);
    tally.metric("wrong", wrong as f64);
    tally.check(wrong == 0, format!("{wrong} verdicts differ"));
    Ok(())
}

fn stretch(tally: &mut Tally) -> Result<()> {
    let o = TauOptions::default();
    let runs = [
        ("sum|I|>=2 d=3", SubspaceSelector::at_least(3, 2), vec![2, 2, 2], 2.0 / 3f64.sqrt() - 1e-3, f64::INFINITY),
        ("sum|I|>=2 d=4", SubspaceSelector::at_least(4, 2), vec![2, 2, 2, 2], (1.0 + 2f64.sqrt()) / 2.0 - 1e-3, f64::INFINITY),
        ("upperU{1,2}", SubspaceSelector::UpperU(ModeSet::from_modes(&[0, 1])), vec![2, 2, 2], 1.0 - 1e-3, 1.0 + 1e-3),
    ];
    let got = runs
        .par_iter()
        .map(|(_, sel, shape, ..)| probe_tau(sel, shape, 4, 81, 1e-7, &o))
        .collect::<Result<Vec<_>>>()?;
    for ((label, _, _, lo, hi), est) in runs.iter().zip(got) {
        let f = est.feasible_max.unwrap_or(f64::NAN);
        tally.metric(label, f);
        tally.check(f >= *lo && f <= *hi, format!("{label}: feasible max {f} outside [{lo}, {hi}]"));
    }
    Ok(())
}

fn matrix_recovery(tally: &mut Tally) -> Result<()> {
    let results = (1..=10u64)
        .into_par_iter()
        .map(|seed| matrix_trial(40, 2, 0.05, seed, Some(1.0 / 40f64.sqrt()), &AdmmOptions::default()))
        .collect::<Result<Vec<_>>>()?;
    let recovered = results.iter().filter(|r| r.l_error <= 1e-4).count();
    let optimal = results.iter().filter(|r| r.optimality.holds(1e-5)).count();
    tally.metric("recovered", recovered as f64);
    tally.metric("optimality_holds", optimal as f64);
    tally.metric("max_error", results.iter().map(|r| r.l_error).fold(0.0, f64::max));
    tally.check(recovered >= 9, format!("{recovered}/10 seeds recovered to 1e-4"));
    Ok(())
}

/// Seeds whose full five-condition report passed when the pipeline was calibrated.
pub const FROZEN_FIVE_CONDITION_PASSES: usize = 0;

fn tensor_pipeline(tally: &mut Tally) -> Result<()> {
    let shape = [12, 12, 12];
    let config = CertifyConfig { lambda: Some(default_lambda(&shape)), ..CertifyConfig::default() };
    let rows = (1..=10u64)
        .into_par_iter()
        .map(|seed| -> Result<(bool, bool, bool, bool, f64)> {
            let inst = generate_instance(&InstanceSpec::new(&shape, 1, 0.02, 3, FactorStyle::Incoherent, seed))?;
            let (cert, report) = build_certificate(&inst, &config)?;
            let free = support_free(&cert.d1, &inst.support)?;
            let identity = report
                .neumann
                .as_ref()
                .is_some_and(|n| n.tail_bound <= 1e-8 && n.identity_residual <= n.tail_bound.max(1e-12));
            let coupling = report.condition(COND_COUPLING).map_or(f64::NAN, |c| c.value);
            Ok((free && identity, coupling < 0.5, report.golfing.strictly_decreasing(), report.verdict.is_pass(), coupling))
        })
        .collect::<Result<Vec<_>>>()?;
    let count = |f: fn(&(bool, bool, bool, bool, f64)) -> bool| rows.iter().filter(|r| f(r)).count();
    let (exact, coupled, decreasing, full) = (count(|r| r.0), count(|r| r.1), count(|r| r.2), count(|r| r.3));
    tally.metric("construction_exact", exact as f64);
    tally.metric("coupling_below_half", coupled as f64);
    tally.metric("golfing_decreasing", decreasing as f64);
    tally.metric("five_condition_passes", full as f64);
    tally.metric("min_coupling", rows.iter().map(|r| r.4).fold(f64::INFINITY, f64::min));
    tally.check(exact == 10, format!("construction-exact in {exact}/10"));
    tally.check(coupled >= 8, format!("||p_L p_I|| < 1/2 in {coupled}/10"));
    tally.check(decreasing == 10, format!("golfing decreasing in {decreasing}/10"));
    tally.note(format!("five-condition pass rate {full}/10 (calibrated value {FROZEN_FIVE_CONDITION_PASSES}/10)"));
    Ok(())
}

fn projection_algebra(tally: &mut Tally) -> Result<()> {
    let worst = (0..50u64)
        .into_par_iter()
        .map(|trial| -> Result<[f64; 4]> {
            let mut r = rng::stream(rng::derive(111, trial), 0);
            let d = 2 + (trial % 3) as usize;
            let shape: Vec<usize> = (0..d).map(|k| 1 + ((trial as usize * 7 + k * 3) % 4)).collect();
            let ranks: Vec<usize> = shape.iter().enumerate().map(|(k, &n)| (trial as usize + k) % (n + 1)).collect();
            let family = ModeFamily::random(&shape, &ranks, &mut r)?;
            let n: usize = shape.iter().product();
            let t = DenseTensor::new(shape.clone(), rng::gaussian_vec(&mut r, n))?;
            let u = DenseTensor::new(shape.clone(), rng::gaussian_vec(&mut r, n))?;
            let parts: Vec<DenseTensor> = basic_split(&family, &t)?.into_values().collect();
            let mut orth = 0.0f64;
            for i in 0..parts.len() {
                for j in i + 1..parts.len() {
                    orth = orth.max(parts[i].inner(&parts[j])?.abs());
                }
            }
            let mut sum = DenseTensor::zeros(&shape);
            for p in &parts {
                sum = sum.add(p)?;
            }
            let recon = sum.sub(&t)?.frobenius();
            let mut selectors: Vec<SubspaceSelector> = ModeSet::all(d).map(SubspaceSelector::Basic).collect();
            selectors.extend(ModeSet::all(d).map(SubspaceSelector::UpperU));
            selectors.extend(ModeSet::all(d).map(SubspaceSelector::LowerU));
            selectors.push(SubspaceSelector::at_least(d, 2));
            let (mut adj, mut idem) = (0.0f64, 0.0f64);
            for sel in &selectors {
                let pt = project(sel, &family, &t)?;
                let pu = project(sel, &family, &u)?;
                adj = adj.max((pt.inner(&u)? - t.inner(&pu)?).abs());
                idem = idem.max(project(sel, &family, &pt)?.sub(&pt)?.frobenius());
            }
            Ok([orth, recon, adj, idem])
        })
        .collect::<Result<Vec<_>>>()?
        .into_iter()
        .fold([0.0f64; 4], |a, b| [a[0].max(b[0]), a[1].max(b[1]), a[2].max(b[2]), a[3].max(b[3])]);
    for (k, v) in ["orthogonality", "reconstruction", "self_adjoint", "idempotent"].iter().zip(worst) {
        tally.metric(k, v);
    }
    tally.check(worst[0] <= 1e-10, format!("components overlap by {}", worst[0]));
    tally.check(worst[1] <= 1e-12, format!("reconstruction error {}", worst[1]));
    tally.check(worst[2] <= 1e-10, format!("self-adjointness defect {}", worst[2]));
    tally.check(worst[3] <= 1e-10, format!("idempotency defect {}", worst[3]));
    Ok(())
}
