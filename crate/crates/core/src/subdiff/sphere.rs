//! Low-dimensional programs over products of nonnegative quarter circles:
//! maximize `f(a)` subject to `f(a) ≤ 1 + c(a)`, where each variable is a
//! pair `(a_1, a_2) = (cos θ, sin θ)` with `θ ∈ [0, π/2]` and `f`, `c` are
//! polynomials in the coordinates.
//!
//! Solved by a full angular grid followed by a feasible-direction ascent
//! from the best grid points: along the gradient while the constraint is
//! slack, along its projection onto the constraint's tangent plane with a
//! Newton restoration step once the constraint is active.

use std::f64::consts::FRAC_PI_2;

use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};

/// `coeff · Π a[var][coord]` with `coord` 0 for the cosine, 1 for the sine.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Monomial {
    pub coeff: f64,
    pub factors: Vec<(usize, usize)>,
}

impl Monomial {
    pub fn new(coeff: f64, factors: &[(usize, usize)]) -> Self {
        Self { coeff, factors: factors.to_vec() }
    }

    fn eval(&self, a: &[[f64; 2]]) -> f64 {
        self.factors.iter().fold(self.coeff, |acc, &(v, c)| acc * a[v][c])
    }

    /// Adds `∂/∂θ` of this monomial to `grad`.
    fn add_gradient(&self, a: &[[f64; 2]], grad: &mut [f64]) {
        for (skip, &(v, c)) in self.factors.iter().enumerate() {
            // d cos = −sin, d sin = cos
            let d = if c == 0 { -a[v][1] } else { a[v][0] };
            let rest = self
                .factors
                .iter()
                .enumerate()
                .filter(|&(j, _)| j != skip)
                .fold(self.coeff, |acc, (_, &(w, k))| acc * a[w][k]);
            grad[v] += rest * d;
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SphereProgram {
    pub name: String,
    pub variables: usize,
    pub objective: Vec<Monomial>,
    pub coupling: Monomial,
}

#[derive(Debug, Clone, Serialize)]
pub struct SphereSolution {
    pub value: f64,
    pub angles: Vec<f64>,
    /// `1 + c − f ≥ 0` at the returned point.
    pub constraint_slack: f64,
    pub grid_points: usize,
}

#[derive(Debug, Clone, Copy)]
pub struct SphereOptions {
    /// Points per angle; `None` sizes the grid to about `grid_budget` points.
    pub grid_per_angle: Option<usize>,
    pub grid_budget: usize,
    pub polish_starts: usize,
    pub polish_iters: usize,
}

impl Default for SphereOptions {
    fn default() -> Self {
        Self {
            grid_per_angle: None,
            grid_budget: 4_000_000,
            polish_starts: 16,
            polish_iters: 20_000,
        }
    }
}

pub const PROGRAM_NAMES: [&str; 4] = ["opt-b1", "opt-b2", "opt-d4-a", "opt-d4-b"];

/// Variables are `x, y, z, w` in that order; `(v, 0)` is `v_1`, `(v, 1)` is `v_2`.
pub fn sphere_program(name: &str) -> Result<SphereProgram> {
    const X: usize = 0;
    const Y: usize = 1;
    const Z: usize = 2;
    const W: usize = 3;
    let m = |f: &[(usize, usize)]| Monomial::new(1.0, f);
    let (variables, objective, coupling) = match name {
        "opt-b1" => (3, vec![m(&[(X, 0), (Y, 1), (Z, 1)]), m(&[(X, 1)])], m(&[(X, 0), (Y, 0), (Z, 0)])),
        "opt-b2" => (
            3,
            vec![m(&[(X, 0), (Y, 0), (Z, 1)]), m(&[(X, 0), (Y, 1)]), m(&[(X, 1)])],
            m(&[(X, 0), (Y, 0), (Z, 0)]),
        ),
        "opt-d4-a" => (
            4,
            vec![m(&[(X, 0), (Y, 0), (Z, 1), (W, 1)]), m(&[(X, 0), (Y, 1)]), m(&[(X, 1)])],
            m(&[(X, 0), (Y, 0), (Z, 0), (W, 0)]),
        ),
        "opt-d4-b" => (
            4,
            vec![
                m(&[(X, 0), (Y, 0), (Z, 0), (W, 1)]),
                m(&[(X, 0), (Y, 0), (Z, 1)]),
                m(&[(X, 0), (Y, 1)]),
                m(&[(X, 1)]),
            ],
            m(&[(X, 0), (Y, 0), (Z, 0), (W, 0)]),
        ),
        other => return Err(Error::Lookup(format!("sphere program {other}"))),
    };
    let p = SphereProgram { name: name.to_string(), variables, objective, coupling };
    p.validate()?;
    Ok(p)
}

impl SphereProgram {
    pub fn validate(&self) -> Result<()> {
        if self.variables == 0 || self.variables > 6 {
            return Err(Error::param(format!("{} variables; 1 to 6 are supported", self.variables)));
        }
        for mono in self.objective.iter().chain(std::iter::once(&self.coupling)) {
            if !mono.coeff.is_finite() {
                return Err(Error::param("monomial coefficients must be finite"));
            }
            if let Some(&(v, c)) = mono.factors.iter().find(|&&(v, c)| v >= self.variables || c > 1) {
                return Err(Error::Index(format!("factor ({v}, {c}) outside {} variables", self.variables)));
            }
        }
        Ok(())
    }

    pub fn objective_at(&self, a: &[[f64; 2]]) -> f64 {
        self.objective.iter().map(|m| m.eval(a)).sum()
    }

    /// `1 + c(a) − f(a)`; feasible when nonnegative.
    pub fn slack_at(&self, a: &[[f64; 2]]) -> f64 {
        1.0 + self.coupling.eval(a) - self.objective_at(a)
    }

    fn point(angles: &[f64]) -> Vec<[f64; 2]> {
        angles.iter().map(|&t| [t.cos(), t.sin()]).collect()
    }

    fn gradients(&self, a: &[[f64; 2]]) -> (Vec<f64>, Vec<f64>) {
        let mut gf = vec![0.0; self.variables];
        for m in &self.objective {
            m.add_gradient(a, &mut gf);
        }
        // Gradient of the constraint function f − 1 − c.
        let mut gc = vec![0.0; self.variables];
        self.coupling.add_gradient(a, &mut gc);
        let gg = gf.iter().zip(&gc).map(|(f, c)| f - c).collect();
        (gf, gg)
    }
}

fn clamp_box(theta: &mut [f64]) {
    for t in theta {
        *t = t.clamp(0.0, FRAC_PI_2);
    }
}

/// Zeroes components that would push a coordinate sitting on a box face outward.
fn box_project(theta: &[f64], d: &mut [f64]) {
    for (t, di) in theta.iter().zip(d.iter_mut()) {
        if (*t <= 0.0 && *di < 0.0) || (*t >= FRAC_PI_2 && *di > 0.0) {
            *di = 0.0;
        }
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Constraint counted as active below this slack.
const ACTIVE: f64 = 1e-9;
/// Slack targeted by the restoration step, keeping iterates strictly feasible.
const RESTORE_TARGET: f64 = 1e-13;

/// Moves onto `slack ≥ 0` by Newton steps along the constraint gradient.
fn restore(p: &SphereProgram, theta: &mut [f64]) -> bool {
    for _ in 0..50 {
        let a = SphereProgram::point(theta);
        let s = p.slack_at(&a);
        if s >= 0.0 {
            return true;
        }
        let (_, gg) = p.gradients(&a);
        let n2 = dot(&gg, &gg);
        if n2 < 1e-30 {
            return false;
        }
        let step = (-s + RESTORE_TARGET) / n2;
        for (t, g) in theta.iter_mut().zip(&gg) {
            *t -= step * g;
        }
        clamp_box(theta);
    }
    p.slack_at(&SphereProgram::point(theta)) >= 0.0
}

fn polish(p: &SphereProgram, mut theta: Vec<f64>, iters: usize) -> (f64, Vec<f64>) {
    let mut f = p.objective_at(&SphereProgram::point(&theta));
    let mut step = 1e-2;
    for _ in 0..iters {
        let a = SphereProgram::point(&theta);
        let (gf, gg) = p.gradients(&a);
        let mut d = gf.clone();
        if p.slack_at(&a) < ACTIVE {
            let n2 = dot(&gg, &gg);
            if n2 > 1e-30 {
                let c = dot(&gf, &gg) / n2;
                for (di, g) in d.iter_mut().zip(&gg) {
                    *di -= c * g;
                }
            }
        }
        box_project(&theta, &mut d);
        let norm = dot(&d, &d).sqrt();
        if norm < 1e-15 {
            break;
        }
        let mut trial: Vec<f64> = theta.iter().zip(&d).map(|(t, di)| t + step * di / norm).collect();
        clamp_box(&mut trial);
        let ok = restore(p, &mut trial);
        let ft = p.objective_at(&SphereProgram::point(&trial));
        if ok && ft > f {
            theta = trial;
            f = ft;
            step = (step * 1.5).min(0.1);
        } else {
            step *= 0.5;
            if step < 1e-15 {
                break;
            }
        }
    }
    (f, theta)
}

/// Global maximum of a sphere program by grid search and local polish.
pub fn solve_sphere_program(p: &SphereProgram, opts: &SphereOptions) -> Result<SphereSolution> {
    p.validate()?;
    let m = p.variables;
    let k = match opts.grid_per_angle {
        Some(k) => k,
        None => ((opts.grid_budget.max(2) as f64).powf(1.0 / m as f64).floor() as usize).max(2),
    };
    if k < 2 || opts.polish_starts == 0 {
        return Err(Error::param("the grid needs at least two points per angle and one polish start"));
    }
    let total = k
        .checked_pow(m as u32)
        .filter(|&n| n <= 1usize << 32)
        .ok_or_else(|| Error::param(format!("grid of {k}^{m} points is too large")))?;
    let angle = |i: usize| FRAC_PI_2 * i as f64 / (k - 1) as f64;
    let decode = |mut idx: usize| -> Vec<f64> {
        let mut th = vec![0.0; m];
        for slot in th.iter_mut().rev() {
            *slot = angle(idx % k);
            idx /= k;
        }
        th
    };

    // Best feasible grid points per chunk, merged by (value, index).
    let chunk = k.pow((m - 1) as u32);
    let mut best: Vec<(f64, usize)> = (0..k)
        .into_par_iter()
        .flat_map_iter(|c| {
            let mut local: Vec<(f64, usize)> = Vec::new();
            for idx in c * chunk..(c + 1) * chunk {
                let a = SphereProgram::point(&decode(idx));
                if p.slack_at(&a) >= 0.0 {
                    local.push((p.objective_at(&a), idx));
                    if local.len() > 4 * opts.polish_starts {
                        local.sort_by(|x, y| y.0.total_cmp(&x.0).then(x.1.cmp(&y.1)));
                        local.truncate(opts.polish_starts);
                    }
                }
            }
            local
        })
        .collect();
    best.sort_by(|x, y| y.0.total_cmp(&x.0).then(x.1.cmp(&y.1)));
    best.truncate(opts.polish_starts);
    if best.is_empty() {
        return Err(Error::Infeasible(format!("no feasible grid point for {}", p.name)));
    }

    let polished: Vec<(f64, Vec<f64>, usize)> = best
        .par_iter()
        .map(|&(_, idx)| {
            let (f, th) = polish(p, decode(idx), opts.polish_iters);
            (f, th, idx)
        })
        .collect();
    let (value, angles, _) = polished
        .into_iter()
        .max_by(|x, y| x.0.total_cmp(&y.0).then(y.2.cmp(&x.2)))
        .expect("nonempty");
    let slack = p.slack_at(&SphereProgram::point(&angles));
    Ok(SphereSolution { value, angles, constraint_slack: slack, grid_points: total })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn solve(name: &str) -> SphereSolution {
        solve_sphere_program(&sphere_program(name).unwrap(), &SphereOptions::default()).unwrap()
    }

    #[test]
    fn known_optimal_values() {
        for (name, want) in [
            ("opt-b1", (1.0 + 2f64.sqrt()) / 2.0),
            ("opt-b2", 1.5),
            ("opt-d4-a", (1.0 + 3f64.sqrt()) / 2.0),
            ("opt-d4-b", 1.6),
        ] {
            let s = solve(name);
            assert!((s.value - want).abs() < 1e-6, "{name}: {} vs {want}", s.value);
            assert!(s.constraint_slack >= 0.0);
        }
    }

    #[test]
    fn gradient_matches_finite_differences() {
        let p = sphere_program("opt-d4-b").unwrap();
        let th = [0.3, 0.7, 1.1, 0.2];
        let (gf, gg) = p.gradients(&SphereProgram::point(&th));
        for i in 0..4 {
            let h = 1e-6;
            let mut up = th;
            up[i] += h;
            let mut dn = th;
            dn[i] -= h;
            let f = |t: &[f64]| p.objective_at(&SphereProgram::point(t));
            let s = |t: &[f64]| -p.slack_at(&SphereProgram::point(t));
            assert!(((f(&up) - f(&dn)) / (2.0 * h) - gf[i]).abs() < 1e-8);
            assert!(((s(&up) - s(&dn)) / (2.0 * h) - gg[i]).abs() < 1e-8);
        }
    }

    #[test]
    fn rejects_bad_programs() {
        assert!(matches!(sphere_program("opt-b9"), Err(Error::Lookup(_))));
        let mut p = sphere_program("opt-b1").unwrap();
        p.objective.push(Monomial::new(1.0, &[(3, 0)]));
        assert!(matches!(p.validate(), Err(Error::Index(_))));
    }

    #[test]
    fn unconstrained_maximum_is_found() {
        // max x1 + x2 on the quarter circle is √2 and the coupling keeps it feasible.
        let p = SphereProgram {
            name: "sum".into(),
            variables: 1,
            objective: vec![Monomial::new(1.0, &[(0, 0)]), Monomial::new(1.0, &[(0, 1)])],
            coupling: Monomial::new(1.0, &[]),
        };
        let s = solve_sphere_program(&p, &SphereOptions::default()).unwrap();
        assert!((s.value - 2f64.sqrt()).abs() < 1e-9, "{}", s.value);
    }
}
