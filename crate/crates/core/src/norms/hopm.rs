//! Multi-start alternating maximization (higher-order power method) for
//! `max ⟨T, x_1 ⊗ … ⊗ x_d⟩` over unit vectors.

use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::numeric::{column_space, normalize, unit_vector};
use crate::rng;
use crate::tensor::DenseTensor;

#[derive(Debug, Clone, Copy)]
pub struct HopmOptions {
    /// Total starts; start 0 is the truncated-HOSVD start when `hosvd_start` is set.
    pub starts: usize,
    pub tol: f64,
    pub max_iter: usize,
    pub seed: u64,
    pub hosvd_start: bool,
}

impl Default for HopmOptions {
    fn default() -> Self {
        Self {
            starts: 32,
            tol: 1e-12,
            max_iter: 2000,
            seed: 0,
            hosvd_start: true,
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct SpectralResult {
    pub value: f64,
    pub maximizers: Vec<Vec<f64>>,
    pub certified_lower: f64,
    pub certified_upper: Option<f64>,
    pub starts_used: usize,
    pub iterations: usize,
    pub best_start: usize,
}

#[derive(Debug, Clone)]
pub(crate) struct StartOutcome {
    pub value: f64,
    pub xs: Vec<Vec<f64>>,
    pub sweeps: usize,
    pub converged: bool,
}

fn hosvd_vectors(t: &DenseTensor) -> Vec<Vec<f64>> {
    (0..t.order())
        .map(|k| {
            let b = column_space(&t.matricize(k).expect("mode in range"), 1e-14);
            if b.ncols() == 0 {
                unit_vector(t.shape()[k], 0)
            } else {
                b.column(0).iter().copied().collect()
            }
        })
        .collect()
}

/// One alternating-maximization run from `xs`. If `trace` is given, the
/// objective after every single-mode update is appended to it.
pub(crate) fn run_start(
    t: &DenseTensor,
    mut xs: Vec<Vec<f64>>,
    tol: f64,
    max_iter: usize,
    mut trace: Option<&mut Vec<f64>>,
) -> StartOutcome {
    let d = t.order();
    let mut value = t.contract_all(&xs).expect("lengths match").abs();
    for sweep in 1..=max_iter {
        let before = value;
        for k in 0..d {
            let mut g = t.contract_except(k, &xs);
            let n = normalize(&mut g);
            if n > 0.0 {
                xs[k] = g;
                value = n;
            }
            if let Some(tr) = trace.as_deref_mut() {
                tr.push(value);
            }
        }
        if (value - before).abs() <= tol * value.max(f64::MIN_POSITIVE) {
            return StartOutcome { value, xs, sweeps: sweep, converged: true };
        }
    }
    StartOutcome { value, xs, sweeps: max_iter, converged: false }
}

/// Orders starts by value, then by smallest index.
fn better(a: &(usize, StartOutcome), b: &(usize, StartOutcome)) -> bool {
    a.1.value > b.1.value || (a.1.value == b.1.value && a.0 < b.0)
}

pub(crate) fn all_starts(t: &DenseTensor, opts: &HopmOptions) -> Vec<(usize, StartOutcome)> {
    let shape = t.shape().to_vec();
    (0..opts.starts.max(1))
        .into_par_iter()
        .map(|s| {
            let x0 = if s == 0 && opts.hosvd_start {
                hosvd_vectors(t)
            } else {
                let mut r = rng::stream(opts.seed, s as u64);
                shape.iter().map(|&n| rng::unit_vec(&mut r, n)).collect()
            };
            (s, run_start(t, x0, opts.tol, opts.max_iter, None))
        })
        .collect()
}

/// Best-of-starts lower estimate of `‖T‖_σ` with its maximizing vectors.
pub fn spectral_hopm(t: &DenseTensor, opts: &HopmOptions) -> Result<SpectralResult> {
    let (r, any_converged) = hopm_best_effort(t, opts)?;
    if !any_converged {
        return Err(Error::Convergence {
            what: "alternating maximization".into(),
            iterations: opts.max_iter,
            best: r.value,
        });
    }
    Ok(r)
}

/// Like [`spectral_hopm`] but returns the best start even when none met the
/// tolerance; the value is still attained, hence a valid lower bound. The
/// flag reports whether any start converged.
pub(crate) fn hopm_best_effort(t: &DenseTensor, opts: &HopmOptions) -> Result<(SpectralResult, bool)> {
    if opts.starts == 0 {
        return Err(Error::param("at least one start is required"));
    }
    if t.is_zero() {
        let r = SpectralResult {
            value: 0.0,
            maximizers: t.shape().iter().map(|&n| unit_vector(n, 0)).collect(),
            certified_lower: 0.0,
            certified_upper: Some(0.0),
            starts_used: 0,
            iterations: 0,
            best_start: 0,
        };
        return Ok((r, true));
    }
    let runs = all_starts(t, opts);
    let iterations = runs.iter().map(|r| r.1.sweeps).sum();
    let any_converged = runs.iter().any(|r| r.1.converged);
    let (best_start, out) = runs
        .into_iter()
        .reduce(|a, b| if better(&b, &a) { b } else { a })
        .expect("at least one start");
    // Report the multilinear form itself so value and maximizers agree exactly.
    let mut xs = out.xs;
    let mut value = t.contract_all(&xs)?;
    if value < 0.0 {
        xs[0].iter_mut().for_each(|x| *x = -*x);
        value = -value;
    }
    let r = SpectralResult {
        value,
        maximizers: xs,
        certified_lower: value,
        certified_upper: None,
        starts_used: opts.starts,
        iterations,
        best_start,
    };
    Ok((r, any_converged))
}

/// Objective values after each single-mode update of one start.
pub fn hopm_trace(t: &DenseTensor, x0: Vec<Vec<f64>>, sweeps: usize) -> Vec<f64> {
    let mut trace = vec![t.contract_all(&x0).expect("lengths match").abs()];
    run_start(t, x0, 0.0, sweeps, Some(&mut trace));
    trace
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::tensor::outer_atom;

    fn e(i: usize) -> Vec<f64> {
        unit_vector(2, i)
    }

    fn x_sym(t: f64) -> DenseTensor {
        let mut x = DenseTensor::zeros(&[2, 2, 2]);
        for idx in [[0, 1, 1], [1, 0, 1], [1, 1, 0]] {
            x.set(&idx, t).unwrap();
        }
        x
    }

    #[test]
    fn rank_one_unit_atom() {
        let t = outer_atom(&[vec![0.6, 0.8], e(1), vec![0.0, 1.0, 0.0]], 1.0).unwrap();
        let r = spectral_hopm(&t, &HopmOptions::default()).unwrap();
        assert!((r.value - 1.0).abs() < 1e-12);
        assert!((t.contract_all(&r.maximizers).unwrap() - r.value).abs() < 1e-10);
    }

    #[test]
    fn symmetric_three_term_tensor() {
        let r = spectral_hopm(&x_sym(1.0), &HopmOptions::default()).unwrap();
        assert!((r.value - 2.0 / 3f64.sqrt()).abs() < 1e-8, "{}", r.value);
    }

    #[test]
    fn diagonal_plus_off_diagonal() {
        let mut z = DenseTensor::zeros(&[3, 3, 3]);
        for i in 0..3 {
            z.set(&[i, i, i], 1.0).unwrap();
        }
        z.set(&[0, 1, 2], 0.5).unwrap();
        let r = spectral_hopm(&z, &HopmOptions::default()).unwrap();
        assert!((r.value - 1.0).abs() < 1e-8);
    }

    #[test]
    fn zero_tensor_gives_zero() {
        let r = spectral_hopm(&DenseTensor::zeros(&[2, 3]), &HopmOptions::default()).unwrap();
        assert_eq!(r.value, 0.0);
        assert!(r.maximizers.iter().all(|x| (crate::numeric::norm2(x) - 1.0).abs() < 1e-15));
    }

    #[test]
    fn matrices_give_top_singular_value() {
        let m = DenseTensor::new(vec![2, 3], vec![1.0, 2.0, 0.0, -1.0, 0.5, 3.0]).unwrap();
        let svd = m.matricize(0).unwrap().svd(false, false).singular_values.max();
        let r = spectral_hopm(&m, &HopmOptions::default()).unwrap();
        assert!((r.value - svd).abs() < 1e-10);
    }

    #[test]
    fn deterministic_for_a_seed() {
        let t = DenseTensor::new(vec![2, 2, 2], rng::gaussian_vec(&mut rng::stream(4, 0), 8)).unwrap();
        let o = HopmOptions { seed: 9, ..Default::default() };
        let a = spectral_hopm(&t, &o).unwrap();
        let b = spectral_hopm(&t, &o).unwrap();
        assert_eq!(a.value.to_bits(), b.value.to_bits());
        assert_eq!(a.maximizers, b.maximizers);
    }
}
