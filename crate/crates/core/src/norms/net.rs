//! Finite nets on mode spheres and the resulting two-sided spectral bounds.
//!
//! Points are built on the faces `x_j = 1` of the cube `[-1, 1]^n` and then
//! normalized. Only one face per coordinate is used: `v` and `-v` give the
//! same `|⟨T, v_1 ⊗ … ⊗ v_d⟩|`, so a half-sphere net `E` with `E ∪ −E`
//! covering the sphere is as good as a full one.
//!
//! Covering radius: for a point `y` on a face and the nearest grid point `g`
//! (spacing `h`), `‖y − g‖ ≤ (h/2)·√(n−1)`, and since `‖g‖ ≥ 1`,
//! `‖y/‖y‖ − g/‖g‖‖ ≤ 2‖y − g‖/‖g‖ ≤ h·√(n−1)`.

use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::numeric::{dot, normalize};
use crate::tensor::DenseTensor;

/// Largest mode dimension for which grids are generated.
pub const MAX_NET_DIM: usize = 4;

#[derive(Debug, Clone)]
pub struct NetSpec {
    pub epsilon: f64,
    pub points: Vec<Vec<Vec<f64>>>,
    pub covering_certified: bool,
}

#[derive(Debug, Clone, Copy, Serialize)]
pub struct NetBounds {
    pub lower: f64,
    /// Absent when the net's covering radius is not certified.
    pub upper: Option<f64>,
    pub epsilon: f64,
}

/// Half-sphere grid in `R^n` with covering radius at most `epsilon`.
pub fn sphere_grid(n: usize, epsilon: f64) -> Result<Vec<Vec<f64>>> {
    if !(epsilon > 0.0) {
        return Err(Error::param("net radius must be positive"));
    }
    if n == 0 || n > MAX_NET_DIM {
        return Err(Error::pre(format!(
            "grids are certified only for dimensions 1..={MAX_NET_DIM}, got {n}"
        )));
    }
    if n == 1 {
        return Ok(vec![vec![1.0]]);
    }
    let free = n - 1;
    let m = ((2.0 * (free as f64).sqrt() / epsilon).ceil() as usize + 1).max(2);
    let ticks: Vec<f64> = (0..m).map(|i| -1.0 + 2.0 * i as f64 / (m - 1) as f64).collect();
    let per_face = m.pow(free as u32);
    let mut out = Vec::with_capacity(n * per_face);
    for face in 0..n {
        for code in 0..per_face {
            let mut rest = code;
            let mut v: Vec<f64> = (0..n)
                .map(|j| {
                    if j == face {
                        1.0
                    } else {
                        let t = ticks[rest % m];
                        rest /= m;
                        t
                    }
                })
                .collect();
            normalize(&mut v);
            out.push(v);
        }
    }
    Ok(out)
}

impl NetSpec {
    /// Certified grids for every mode of `shape`.
    pub fn grid(shape: &[usize], epsilon: f64) -> Result<Self> {
        let points = shape
            .iter()
            .map(|&n| sphere_grid(n, epsilon))
            .collect::<Result<Vec<_>>>()?;
        Ok(Self {
            epsilon,
            points,
            covering_certified: true,
        })
    }

    /// A net from arbitrary points; its covering radius is not certified.
    pub fn from_points(points: Vec<Vec<Vec<f64>>>, epsilon: f64) -> Self {
        Self {
            epsilon,
            points,
            covering_certified: false,
        }
    }

    pub fn size(&self) -> usize {
        self.points.iter().map(Vec::len).product()
    }
}

fn best_over(data: &[f64], shape: &[usize], nets: &[Vec<Vec<f64>>]) -> f64 {
    if shape.len() == 1 {
        return nets[0].iter().fold(0.0, |m, v| m.max(dot(data, v).abs()));
    }
    let n0 = shape[0];
    let rest: usize = shape[1..].iter().product();
    let mut best = 0.0f64;
    let mut slice = vec![0.0; rest];
    for v in &nets[0] {
        for (b, s) in slice.iter_mut().enumerate() {
            let mut acc = crate::numeric::NeumaierSum::new();
            for i in 0..n0 {
                acc.add(v[i] * data[i * rest + b]);
            }
            *s = acc.value();
        }
        best = best.max(best_over(&slice, &shape[1..], &nets[1..]));
    }
    best
}

/// `lower = max |⟨T, v_1 ⊗ … ⊗ v_d⟩|` over the net; `upper = lower / (1 − dε)`.
pub fn spectral_net_bounds(t: &DenseTensor, net: &NetSpec) -> Result<NetBounds> {
    let d = t.order();
    if !(net.epsilon > 0.0) || net.epsilon * d as f64 >= 1.0 {
        return Err(Error::param(format!(
            "net radius {} must lie in (0, 1/{d})",
            net.epsilon
        )));
    }
    if net.points.len() != d {
        return Err(Error::dim(format!("net has {} modes, tensor has {d}", net.points.len())));
    }
    for (k, pts) in net.points.iter().enumerate() {
        if pts.is_empty() || pts.iter().any(|p| p.len() != t.shape()[k]) {
            return Err(Error::dim(format!("net points of mode {} have the wrong length", k + 1)));
        }
    }
    let shape = t.shape();
    let rest: usize = shape[1..].iter().product();
    let lower = if d == 1 {
        best_over(t.data(), shape, &net.points)
    } else {
        net.points[0]
            .par_iter()
            .map(|v| {
                let mut slice = vec![0.0; rest];
                for (b, s) in slice.iter_mut().enumerate() {
                    let mut acc = crate::numeric::NeumaierSum::new();
                    for i in 0..shape[0] {
                        acc.add(v[i] * t.data()[i * rest + b]);
                    }
                    *s = acc.value();
                }
                best_over(&slice, &shape[1..], &net.points[1..])
            })
            .reduce(|| 0.0, f64::max)
    };
    let upper = net
        .covering_certified
        .then(|| lower / (1.0 - d as f64 * net.epsilon));
    Ok(NetBounds {
        lower,
        upper,
        epsilon: net.epsilon,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng;
    use crate::tensor::outer_atom;

    #[test]
    fn grid_covers_random_directions() {
        for n in 2..=4 {
            let eps = 0.3;
            let grid = sphere_grid(n, eps).unwrap();
            let mut r = rng::stream(1, n as u64);
            for _ in 0..500 {
                let x = rng::unit_vec(&mut r, n);
                let dist = grid
                    .iter()
                    .map(|g| {
                        let c = dot(&x, g).abs();
                        (2.0 - 2.0 * c).max(0.0).sqrt()
                    })
                    .fold(f64::INFINITY, f64::min);
                assert!(dist <= eps, "n={n}: distance {dist}");
            }
        }
        assert!(sphere_grid(5, 0.1).is_err());
    }

    #[test]
    fn rank_one_half_radius_net() {
        let t = outer_atom(&[vec![1.0, 0.0], vec![1.0, 0.0], vec![1.0, 0.0]], 1.0).unwrap();
        let b = spectral_net_bounds(&t, &NetSpec::grid(&[2, 2, 2], 1.0 / 6.0).unwrap()).unwrap();
        assert!(b.lower <= 1.0 + 1e-15);
        assert!(b.upper.unwrap() <= 2.0 * b.lower + 1e-15);
        assert!(b.upper.unwrap() >= 1.0);
    }

    #[test]
    fn zero_tensor_and_bad_radius() {
        let z = DenseTensor::zeros(&[2, 2, 2]);
        let b = spectral_net_bounds(&z, &NetSpec::grid(&[2, 2, 2], 0.1).unwrap()).unwrap();
        assert_eq!((b.lower, b.upper), (0.0, Some(0.0)));
        let coarse = NetSpec::grid(&[2, 2, 2], 0.34).unwrap();
        assert!(matches!(spectral_net_bounds(&z, &coarse), Err(Error::Parameter(_))));
    }

    #[test]
    fn uncertified_net_withholds_upper_bound() {
        let z = outer_atom(&[vec![1.0, 0.0], vec![1.0, 0.0]], 1.0).unwrap();
        let net = NetSpec::from_points(vec![vec![vec![1.0, 0.0]], vec![vec![1.0, 0.0]]], 0.1);
        let b = spectral_net_bounds(&z, &net).unwrap();
        assert_eq!(b.lower, 1.0);
        assert!(b.upper.is_none());
    }
}
