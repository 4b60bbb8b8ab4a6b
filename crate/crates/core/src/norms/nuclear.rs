//! Two-sided bounds on `‖T‖_*`.
//!
//! The upper side is any explicit decomposition: `‖T‖_* ≤ Σ|λ_i| + ‖T − Σλ_i A_i‖_1`.
//! The lower side is any witness `W`: `‖T‖_* ≥ ⟨T, W⟩ / ‖W‖_σ`, evaluated
//! with a certified upper bound on `‖W‖_σ`.
//!
//! For small tensors the decomposition comes from column generation on the
//! atomic linear program `max ⟨T, Y⟩ s.t. |⟨A_i, Y⟩| ≤ 1`, whose optimal `Y`
//! doubles as the witness and whose multipliers are the weights. Atoms are
//! added by multi-start power iteration on `Y` until no atom violates the
//! constraints. Larger tensors fall back to greedy pursuit with least-squares
//! refits. Orders one and two are exact through the SVD.

use clarabel::algebra::CscMatrix;
use clarabel::solver::{DefaultSettingsBuilder, DefaultSolver, IPSolver, NonnegativeConeT, SolverStatus};
use nalgebra::{DMatrix, DVector};
use serde::Serialize;

use crate::error::{Error, Result};
use crate::numeric::{dot, matrix_spectral_norm, sum, NeumaierSum};
use crate::rng;
use crate::tensor::{outer_atom, DenseTensor, Holder, NuclearDecomposition, RankOneAtom};

use super::certify::{certifiable, spectral_bounds, spectral_certify, CertifyOptions, SpectralBounds};
use super::hopm::{all_starts, hopm_best_effort, run_start, HopmOptions};
use super::net::NetSpec;

#[derive(Debug, Clone, Copy)]
pub struct NuclearOptions {
    /// Column generation stops once no atom exceeds `1 + tol` on the witness;
    /// greedy pursuit stops once `‖R‖_1 < tol·‖T‖_2`.
    pub tol: f64,
    pub max_atoms: usize,
    pub seed: u64,
    pub hopm: HopmOptions,
    pub certify: CertifyOptions,
    /// Relative gap to which the witness's spectral norm is certified. Optimal
    /// witnesses tend to have flat maxima, so this is much looser than the
    /// certifier's own default.
    pub witness_gap: f64,
    /// Largest entry count handled by the linear program.
    pub lp_max_len: usize,
}

impl Default for NuclearOptions {
    fn default() -> Self {
        Self {
            tol: 1e-9,
            max_atoms: 1000,
            seed: 0,
            hopm: HopmOptions::default(),
            certify: CertifyOptions::default(),
            witness_gap: 1e-6,
            lp_max_len: 512,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum SandwichMethod {
    Exact,
    ColumnGeneration,
    Greedy,
}

#[derive(Debug, Clone, Serialize)]
pub struct NuclearSandwich {
    pub lower: f64,
    pub upper: f64,
    pub gap: f64,
    pub decomposition: NuclearDecomposition,
    pub dual_witness: DenseTensor,
    /// Upper bound on `‖dual_witness‖_σ` used for `lower`.
    pub witness_spectral_upper: f64,
    pub witness_certified: bool,
    pub method: SandwichMethod,
    pub flags: Vec<String>,
}

impl NuclearSandwich {
    pub fn mid(&self) -> f64 {
        0.5 * (self.lower + self.upper)
    }

    pub fn contains(&self, x: f64, slack: f64) -> bool {
        self.lower - slack <= x && x <= self.upper + slack
    }

    fn scaled(mut self, c: f64) -> Self {
        self.lower *= c;
        self.upper *= c;
        self.gap = self.upper - self.lower;
        for a in &mut self.decomposition.atoms {
            a.weight *= c;
        }
        self
    }
}

#[derive(Clone)]
struct Atom {
    factors: Vec<Vec<f64>>,
    data: Vec<f64>,
    /// Consecutive rounds with a zero weight.
    idle: usize,
}

impl Atom {
    fn new(factors: Vec<Vec<f64>>) -> Self {
        let data = outer_atom(&factors, 1.0).expect("valid factors").into_data();
        Self { factors, data, idle: 0 }
    }

    fn overlap(&self, other: &Atom) -> f64 {
        self.factors.iter().zip(&other.factors).map(|(x, y)| dot(x, y)).product::<f64>().abs()
    }
}

/// Certified interval for `‖T‖_*` with the decomposition and witness behind it.
pub fn nuclear_sandwich(t: &DenseTensor, opts: &NuclearOptions, net: Option<&NetSpec>) -> Result<NuclearSandwich> {
    if !(opts.tol > 0.0) || opts.max_atoms == 0 {
        return Err(Error::param("tolerance must be positive and at least one atom allowed"));
    }
    let shape = t.shape().to_vec();
    let scale = t.frobenius();
    if scale == 0.0 {
        return Ok(NuclearSandwich {
            lower: 0.0,
            upper: 0.0,
            gap: 0.0,
            decomposition: NuclearDecomposition::new(shape.clone(), Vec::new())?,
            dual_witness: DenseTensor::zeros(&shape),
            witness_spectral_upper: 0.0,
            witness_certified: true,
            method: SandwichMethod::Exact,
            flags: Vec::new(),
        });
    }
    // Work at unit Frobenius norm so every output is exactly homogeneous.
    let unit = t.scaled(1.0 / scale);
    let out = if shape.len() <= 2 {
        exact_low_order(&unit)?
    } else if unit.len() <= opts.lp_max_len {
        column_generation(&unit, opts, net)?
    } else {
        greedy(&unit, opts, net)?
    };
    Ok(out.scaled(scale))
}

fn exact_low_order(t: &DenseTensor) -> Result<NuclearSandwich> {
    let shape = t.shape().to_vec();
    let (atoms, witness) = if shape.len() == 1 {
        let v = t.data().to_vec();
        let n = t.frobenius();
        let u: Vec<f64> = v.iter().map(|x| x / n).collect();
        (vec![RankOneAtom::new(n, vec![u.clone()])?], DenseTensor::new(shape.clone(), u)?)
    } else {
        let m = t.matricize(0)?;
        let svd = crate::numeric::checked_svd(&m);
        let u = svd.u.as_ref().expect("requested");
        let vt = svd.v_t.as_ref().expect("requested");
        let top = svd.singular_values.max();
        let mut atoms = Vec::new();
        let mut w = DMatrix::zeros(shape[0], shape[1]);
        for (i, &s) in svd.singular_values.iter().enumerate() {
            if s <= top * 1e-14 {
                continue;
            }
            let mut a: Vec<f64> = u.column(i).iter().copied().collect();
            let mut b: Vec<f64> = vt.row(i).iter().copied().collect();
            crate::numeric::normalize(&mut a);
            crate::numeric::normalize(&mut b);
            w += DVector::from_column_slice(&a) * DVector::from_column_slice(&b).transpose();
            atoms.push(RankOneAtom::new(s, vec![a, b])?);
        }
        let data: Vec<f64> = (0..shape[0]).flat_map(|i| (0..shape[1]).map(move |j| (i, j))).map(|(i, j)| w[(i, j)]).collect();
        (atoms, DenseTensor::new(shape.clone(), data)?)
    };
    let decomposition = NuclearDecomposition::new(shape.clone(), atoms)?;
    let upper = decomposition.weight_sum() + t.sub(&decomposition.sum())?.norm(Holder::One);
    let w_norm = if shape.len() == 1 {
        witness.frobenius()
    } else {
        matrix_spectral_norm(&witness.matricize(0)?)
    } * (1.0 + 1e-12);
    finish(t, decomposition, upper, vec![(witness, w_norm, true)], SandwichMethod::Exact, Vec::new())
}

/// Assemble the sandwich from candidate witnesses `(W, upper bound on ‖W‖_σ, certified)`.
fn finish(
    t: &DenseTensor,
    decomposition: NuclearDecomposition,
    upper: f64,
    candidates: Vec<(DenseTensor, f64, bool)>,
    method: SandwichMethod,
    mut flags: Vec<String>,
) -> Result<NuclearSandwich> {
    let frob = t.frobenius();
    let mut best: Option<(f64, DenseTensor, f64, bool)> = None;
    for (w, w_upper, certified) in candidates {
        if !(w_upper > 0.0) {
            continue;
        }
        let ratio = t.inner(&w)? / w_upper;
        let better = match &best {
            None => true,
            Some((r, _, _, c)) => (certified && !c) || (certified == *c && ratio > *r),
        };
        if better {
            best = Some((ratio, w, w_upper, certified));
        }
    }
    // `T` itself is always a certified witness with ratio `‖T‖_2`.
    let (lower, dual_witness, witness_spectral_upper, witness_certified) = match best {
        Some((r, w, u, c)) if r > frob => (r, w, u, c),
        _ => (frob, t.clone(), frob, true),
    };
    if !witness_certified {
        flags.push("witness-uncertified".into());
    }
    // Only rounding (or an uncertified witness) can push the lower bound past
    // the decomposition's value.
    let lower = lower.min(upper);
    Ok(NuclearSandwich {
        lower,
        upper,
        gap: upper - lower,
        decomposition,
        dual_witness,
        witness_spectral_upper,
        witness_certified,
        method,
        flags,
    })
}

/// Solves `max ⟨t, Y⟩ s.t. |⟨a_i, Y⟩| ≤ 1`; returns `Y` and the multipliers.
fn solve_lp(t: &[f64], atoms: &[Atom]) -> Result<(Vec<f64>, Vec<f64>)> {
    let n = t.len();
    let m = atoms.len();
    let mut colptr = Vec::with_capacity(n + 1);
    let mut rowval = Vec::new();
    let mut nzval = Vec::new();
    colptr.push(0);
    for j in 0..n {
        for (i, a) in atoms.iter().enumerate() {
            if a.data[j] != 0.0 {
                rowval.push(i);
                nzval.push(a.data[j]);
            }
        }
        for (i, a) in atoms.iter().enumerate() {
            if a.data[j] != 0.0 {
                rowval.push(m + i);
                nzval.push(-a.data[j]);
            }
        }
        colptr.push(rowval.len());
    }
    let a = CscMatrix::new(2 * m, n, colptr, rowval, nzval);
    let p = CscMatrix::<f64>::zeros((n, n));
    let q: Vec<f64> = t.iter().map(|x| -x).collect();
    let b = vec![1.0; 2 * m];
    let settings = DefaultSettingsBuilder::default()
        .verbose(false)
        .tol_gap_abs(1e-11)
        .tol_gap_rel(1e-11)
        .tol_feas(1e-11)
        .max_iter(400)
        .build()
        .map_err(|e| Error::Solver(format!("{e:?}")))?;
    let mut solver = DefaultSolver::new(&p, &q, &a, &b, &[NonnegativeConeT(2 * m)], settings)
        .map_err(|e| Error::Solver(format!("{e:?}")))?;
    solver.solve();
    match solver.solution.status {
        SolverStatus::Solved | SolverStatus::AlmostSolved => {}
        s => return Err(Error::Solver(format!("atomic linear program ended with status {s:?}"))),
    }
    let z = &solver.solution.z;
    let lambda = (0..m).map(|i| z[i] - z[m + i]).collect();
    Ok((solver.solution.x.clone(), lambda))
}

fn residual(t: &DenseTensor, atoms: &[Atom], lambda: &[f64]) -> Vec<f64> {
    (0..t.len())
        .map(|j| {
            let mut acc = NeumaierSum::new();
            acc.add(t.data()[j]);
            for (a, l) in atoms.iter().zip(lambda) {
                acc.add(-l * a.data[j]);
            }
            acc.value()
        })
        .collect()
}

/// Interior-point weights are never exactly zero; drop those that are
/// negligible. The residual absorbs them, so the upper bound stays valid.
fn drop_negligible(atoms: &[Atom], lambda: &[f64]) -> (Vec<Atom>, Vec<f64>) {
    let cut = lambda.iter().fold(0.0f64, |m, l| m.max(l.abs())) * 1e-12;
    atoms
        .iter()
        .zip(lambda)
        .filter(|(_, l)| l.abs() > cut)
        .map(|(a, &l)| (a.clone(), l))
        .unzip()
}

fn decomposition_of(shape: &[usize], atoms: &[Atom], lambda: &[f64]) -> Result<NuclearDecomposition> {
    let list = atoms
        .iter()
        .zip(lambda)
        .filter(|(_, l)| **l != 0.0)
        .map(|(a, &l)| RankOneAtom::new(l, a.factors.clone()))
        .collect::<Result<Vec<_>>>()?;
    NuclearDecomposition::new(shape.to_vec(), list)
}

/// Minimum-norm tensor in the span of `atoms` with `⟨W, a_i⟩ = sign(λ_i)`.
fn gram_witness(shape: &[usize], atoms: &[Atom], lambda: &[f64], flags: &mut Vec<String>) -> Option<DenseTensor> {
    // Interior-point multipliers are never exactly zero; keep the active ones.
    let cut = lambda.iter().fold(0.0f64, |m, l| m.max(l.abs())) * 1e-7;
    let used: Vec<(&Atom, f64)> = atoms
        .iter()
        .zip(lambda)
        .filter(|(_, l)| l.abs() > cut)
        .map(|(a, l)| (a, l.signum()))
        .collect();
    if used.is_empty() {
        return None;
    }
    let k = used.len();
    let g = DMatrix::from_fn(k, k, |i, j| dot(&used[i].0.data, &used[j].0.data));
    let rhs = DVector::from_iterator(k, used.iter().map(|u| u.1));
    let c = match g.clone().cholesky() {
        Some(ch) => ch.solve(&rhs),
        None => {
            flags.push("gram-ridge".into());
            let ridge = g.trace() * 1e-12;
            (g + DMatrix::identity(k, k) * ridge).cholesky()?.solve(&rhs)
        }
    };
    let n: usize = shape.iter().product();
    let data = (0..n).map(|j| sum(used.iter().zip(c.iter()).map(|((a, _), ci)| ci * a.data[j]))).collect();
    DenseTensor::new(shape.to_vec(), data).ok()
}

fn certify_candidates(
    raw: Vec<DenseTensor>,
    opts: &NuclearOptions,
    net: Option<&NetSpec>,
) -> Result<Vec<(DenseTensor, f64, bool)>> {
    raw.into_iter()
        .filter(|w| !w.is_zero())
        .map(|w| {
            let b = spectral_bounds(&w, &opts.hopm, &opts.certify, net)?;
            Ok((w, b.upper, b.certified))
        })
        .collect()
}

/// Cell budget for certifying a witness. Optimal witnesses often attain their
/// norm on a whole region, where branch and bound needs cells in proportion to
/// `1/gap`; past this budget the unconverged upper bound is used as is.
const WITNESS_CELLS: usize = 100_000;

const ATOMS_PER_ROUND: usize = 8;

const RETIRE_AFTER: usize = 5;

fn column_generation(t: &DenseTensor, opts: &NuclearOptions, net: Option<&NetSpec>) -> Result<NuclearSandwich> {
    let shape = t.shape().to_vec();
    let mut flags = Vec::new();
    let mut atoms: Vec<Atom> = (0..t.len())
        .map(|o| {
            let idx = t.multi_index(o);
            Atom::new(idx.iter().zip(&shape).map(|(&i, &n)| crate::numeric::unit_vector(n, i)).collect())
        })
        .collect();
    let (h, _) = hopm_best_effort(t, &opts.hopm)?;
    let first = Atom::new(h.maximizers);
    if atoms.iter().all(|a| a.overlap(&first) <= 1.0 - 1e-9) {
        atoms.push(first);
    }
    let basis_count = t.len();
    let mut generated = atoms.len() - basis_count;

    let witness_certify = CertifyOptions {
        rel_gap: opts.witness_gap,
        max_cells: opts.certify.max_cells.min(WITNESS_CELLS),
        ..opts.certify
    };
    let mut round = 0u64;
    let mut y_bound: Option<SpectralBounds> = None;
    // Best dual point seen so far, scaled by its estimated spectral norm.
    // Pricing at a blend of it and the LP dual damps the usual tailing-off of
    // cutting planes: since the best point is (nearly) feasible, an atom that
    // violates the blend also violates the LP dual.
    let mut best: Option<(Vec<f64>, f64)> = None;
    let (y, lambda) = loop {
        let (y, lambda) = solve_lp(t.data(), &atoms)?;
        let value = sum(lambda.iter().map(|l| l.abs()));
        // `T` has unit Frobenius norm, a lower bound on its nuclear norm.
        if value <= 1.0 + 1e-12 {
            break (y, lambda);
        }
        if generated >= opts.max_atoms {
            flags.push("atom-limit".into());
            break (y, lambda);
        }
        let pricing = HopmOptions { seed: rng::derive(opts.seed, round), tol: 1e-10, max_iter: 300, ..opts.hopm };
        let yt = DenseTensor::new(shape.clone(), y.clone())?;
        let at_lp = all_starts(&yt, &pricing);
        let peak = at_lp.iter().map(|(_, o)| o.value).fold(0.0, f64::max);
        let mut found: Vec<(f64, Vec<Vec<f64>>)> = at_lp
            .into_iter()
            .filter(|(_, o)| o.value > 1.0 + opts.tol)
            .map(|(_, o)| (o.value, o.xs))
            .collect();
        if peak > 1.0 {
            let objective = dot(t.data(), &y) / peak;
            if best.as_ref().is_none_or(|b| objective > b.1) {
                best = Some((y.iter().map(|v| v / peak).collect(), objective));
            }
        }
        // Close enough by the (uncertified) estimate; the witnesses are
        // certified afterwards, so stopping here cannot overstate the bounds.
        if best.as_ref().is_some_and(|b| value - b.1 <= opts.tol * value) {
            break (y, lambda);
        }
        if let (Some((yb, _)), false) = (&best, found.is_empty()) {
            let blend: Vec<f64> = yb.iter().zip(&y).map(|(a, b)| 0.5 * (a + b)).collect();
            let bt = DenseTensor::new(shape.clone(), blend)?;
            for (_, o) in all_starts(&bt, &pricing) {
                let v = yt.contract_all(&o.xs)?.abs();
                if v > 1.0 + opts.tol {
                    found.push((v, o.xs));
                }
            }
        }
        if found.is_empty() && certifiable(&shape, &witness_certify) {
            // Local search saw no violation; let branch and bound look globally.
            let b = spectral_certify(&yt, None, &witness_certify)?;
            if b.lower > 1.0 + opts.tol {
                let polished = run_start(&yt, b.maximizers.clone(), 1e-12, 300, None);
                found.push((polished.value, polished.xs));
            } else {
                y_bound = Some(b);
            }
        }
        found.sort_by(|a, b| b.0.total_cmp(&a.0));
        let mut fresh: Vec<Atom> = Vec::new();
        for (_, xs) in found {
            let cand = Atom::new(xs);
            if atoms.iter().chain(&fresh).any(|a| a.overlap(&cand) > 1.0 - 1e-9) {
                continue;
            }
            fresh.push(cand);
            if fresh.len() == ATOMS_PER_ROUND {
                break;
            }
        }
        if fresh.is_empty() {
            break (y, lambda);
        }
        // Retire generated atoms that have carried no weight for a while, to
        // keep the linear programs small.
        let big = lambda.iter().fold(0.0f64, |m, l| m.max(l.abs()));
        for (a, l) in atoms.iter_mut().zip(&lambda) {
            a.idle = if l.abs() <= 1e-9 * big { a.idle + 1 } else { 0 };
        }
        let mut k = 0;
        atoms.retain(|a| {
            k += 1;
            k <= basis_count || a.idle < RETIRE_AFTER
        });
        generated += fresh.len();
        atoms.extend(fresh);
        y_bound = None;
        round += 1;
    };

    let (kept, weights) = drop_negligible(&atoms, &lambda);
    let r = residual(t, &kept, &weights);
    let upper = sum(weights.iter().map(|l| l.abs())) + sum(r.iter().map(|x| x.abs()));
    let decomposition = decomposition_of(&shape, &kept, &weights)?;
    let y = DenseTensor::new(shape.clone(), y)?;
    let mut raw = Vec::new();
    let mut candidates = Vec::new();
    match y_bound {
        Some(b) => candidates.push((y, b.upper, true)),
        None => raw.push(y),
    }
    if let Some(g) = gram_witness(&shape, &atoms, &lambda, &mut flags) {
        raw.push(g);
    }
    if let Some((yb, _)) = best {
        raw.push(DenseTensor::new(shape.clone(), yb)?);
    }
    let nopts = NuclearOptions { certify: witness_certify, ..*opts };
    candidates.extend(certify_candidates(raw, &nopts, net)?);
    finish(t, decomposition, upper, candidates, SandwichMethod::ColumnGeneration, flags)
}

fn greedy(t: &DenseTensor, opts: &NuclearOptions, net: Option<&NetSpec>) -> Result<NuclearSandwich> {
    let shape = t.shape().to_vec();
    let mut flags = Vec::new();
    let mut atoms: Vec<Atom> = Vec::new();
    let mut lambda: Vec<f64> = Vec::new();
    let mut r = t.data().to_vec();
    let target = opts.tol * t.frobenius();
    for step in 0..opts.max_atoms {
        if sum(r.iter().map(|x| x.abs())) < target {
            break;
        }
        let rt = DenseTensor::new(shape.clone(), r.clone())?;
        let (h, _) = hopm_best_effort(&rt, &HopmOptions { seed: rng::derive(opts.seed, step as u64), ..opts.hopm })?;
        if h.value == 0.0 {
            break;
        }
        let cand = Atom::new(h.maximizers);
        if atoms.iter().any(|a| a.overlap(&cand) > 1.0 - 1e-9) {
            flags.push("colinear-atom-dropped".into());
            break;
        }
        atoms.push(cand);
        // Fully corrective least-squares refit over all atoms.
        let k = atoms.len();
        let g = DMatrix::from_fn(k, k, |i, j| dot(&atoms[i].data, &atoms[j].data));
        let rhs = DVector::from_iterator(k, atoms.iter().map(|a| dot(&a.data, t.data())));
        match g.cholesky() {
            Some(ch) => lambda = ch.solve(&rhs).iter().copied().collect(),
            None => {
                atoms.pop();
                flags.push("colinear-atom-dropped".into());
                break;
            }
        }
        r = residual(t, &atoms, &lambda);
        if step + 1 == opts.max_atoms {
            flags.push("atom-limit".into());
        }
    }
    let upper = sum(lambda.iter().map(|l| l.abs())) + sum(r.iter().map(|x| x.abs()));
    let decomposition = decomposition_of(&shape, &atoms, &lambda)?;
    let mut raw = Vec::new();
    if let Some(g) = gram_witness(&shape, &atoms, &lambda, &mut flags) {
        raw.push(g);
    }
    let candidates = certify_candidates(raw, opts, net)?;
    flags.push("greedy".into());
    finish(t, decomposition, upper, candidates, SandwichMethod::Greedy, flags)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numeric::unit_vector;

    fn e(n: usize, i: usize) -> Vec<f64> {
        unit_vector(n, i)
    }

    fn diag3() -> DenseTensor {
        let mut t = DenseTensor::zeros(&[3, 3, 3]);
        for i in 0..3 {
            t.set(&[i, i, i], 1.0).unwrap();
        }
        t
    }

    fn check_invariants(t: &DenseTensor, s: &NuclearSandwich) {
        assert!(s.lower <= s.upper);
        assert!(s.lower >= t.frobenius() * (1.0 - 1e-12));
        let ratio = t.inner(&s.dual_witness).unwrap() / s.witness_spectral_upper;
        assert!((ratio - s.lower).abs() <= 1e-10 * s.lower.max(1.0), "{ratio} vs {}", s.lower);
        let r = t.sub(&s.decomposition.sum()).unwrap().norm(Holder::One);
        assert!((s.decomposition.weight_sum() + r - s.upper).abs() <= 1e-10 * s.upper.max(1.0));
    }

    #[test]
    fn unit_atom_is_tight() {
        let t = outer_atom(&[vec![0.6, 0.8], e(2, 1), e(3, 2)], 1.0).unwrap();
        let s = nuclear_sandwich(&t, &NuclearOptions::default(), None).unwrap();
        assert!((s.lower - 1.0).abs() < 1e-8 && (s.upper - 1.0).abs() < 1e-8, "{s:?}");
        check_invariants(&t, &s);
    }

    #[test]
    fn orthogonal_diagonal() {
        let t = diag3();
        let s = nuclear_sandwich(&t, &NuclearOptions::default(), None).unwrap();
        assert!(s.contains(3.0, 1e-8) && s.gap <= 0.05, "{s:?}");
        check_invariants(&t, &s);
    }

    #[test]
    fn matrices_are_exact() {
        let t = DenseTensor::new(vec![2, 3], vec![1.0, 2.0, 0.0, -1.0, 0.5, 3.0]).unwrap();
        let sv = t.matricize(0).unwrap().svd(false, false).singular_values.sum();
        let s = nuclear_sandwich(&t, &NuclearOptions::default(), None).unwrap();
        assert_eq!(s.method, SandwichMethod::Exact);
        assert!((s.lower - sv).abs() < 1e-10 && (s.upper - sv).abs() < 1e-10);
        check_invariants(&t, &s);
    }

    #[test]
    fn greedy_path_on_orthogonal_atoms() {
        let t = outer_atom(&[e(9, 0), e(8, 1), e(9, 2)], 2.0)
            .unwrap()
            .add(&outer_atom(&[e(9, 3), e(8, 4), e(9, 5)], -1.0).unwrap())
            .unwrap();
        let s = nuclear_sandwich(&t, &NuclearOptions::default(), None).unwrap();
        assert_eq!(s.method, SandwichMethod::Greedy);
        assert!((s.upper - 3.0).abs() < 1e-9 && (s.lower - 3.0).abs() < 1e-9, "{s:?}");
        check_invariants(&t, &s);
    }

    #[test]
    fn homogeneous_under_scaling() {
        let t = DenseTensor::new(vec![2, 2, 2], rng::gaussian_vec(&mut rng::stream(3, 0), 8)).unwrap();
        let a = nuclear_sandwich(&t, &NuclearOptions::default(), None).unwrap();
        let b = nuclear_sandwich(&t.scaled(3.5), &NuclearOptions::default(), None).unwrap();
        assert!((b.upper / (3.5 * a.upper) - 1.0).abs() < 1e-10);
        assert!((b.lower / (3.5 * a.lower) - 1.0).abs() < 1e-10);
        check_invariants(&t, &a);
    }
}
