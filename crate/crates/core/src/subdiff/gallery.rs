//! Small tensors with known spectral norms and known subgradient ranges.
//!
//! Every case is built from coordinate atoms `e_i ⊗ e_j ⊗ …` (0-based
//! indices below). The closed forms of the symmetric cases follow from the
//! one-vector formula for symmetric spectral norms.

use std::collections::BTreeMap;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::tensor::DenseTensor;

pub const GALLERY_NAMES: [&str; 6] = ["notsingle", "oneperp", "yuan3", "yuan33", "yuan4", "limitation"];

#[derive(Debug, Clone, Serialize)]
pub struct GalleryCase {
    pub name: String,
    pub t: f64,
    /// `T` and the example's `Z`, `X`, `Y`, `S` as applicable.
    pub tensors: BTreeMap<String, DenseTensor>,
    /// Exact values, keyed like `spectral(Z+X)`.
    pub closed_forms: BTreeMap<String, f64>,
    /// Published numerical estimates that have no closed form.
    pub reference_values: BTreeMap<String, f64>,
    /// Parameter interval on which `Z + X(t)` (or `Z(t)`) is a subgradient.
    pub subgradient_range: Option<(f64, f64)>,
}

impl GalleryCase {
    pub fn tensor(&self, key: &str) -> Result<&DenseTensor> {
        self.tensors
            .get(key)
            .ok_or_else(|| Error::Lookup(format!("{}: tensor {key}", self.name)))
    }

    pub fn closed_form(&self, key: &str) -> Result<f64> {
        self.closed_forms
            .get(key)
            .copied()
            .ok_or_else(|| Error::Lookup(format!("{}: closed form {key}", self.name)))
    }
}

fn atoms(shape: &[usize], entries: &[(&[usize], f64)]) -> DenseTensor {
    let mut t = DenseTensor::zeros(shape);
    for &(idx, v) in entries {
        let cur = t.get(idx).expect("gallery index in range");
        t.set(idx, cur + v).expect("gallery index in range");
    }
    t
}

/// `t(e1⊗e2⊗e2 + e2⊗e1⊗e2 + e2⊗e2⊗e1)` in 2×2×2.
fn three_mixed(t: f64) -> DenseTensor {
    atoms(&[2, 2, 2], &[(&[0, 1, 1], t), (&[1, 0, 1], t), (&[1, 1, 0], t)])
}

fn e111() -> DenseTensor {
    atoms(&[2, 2, 2], &[(&[0, 0, 0], 1.0)])
}

/// `max_{|x|≤1} x³ + 3t·x(1−x²)`, the spectral norm of `e1^{⊗3} + three_mixed(t)`.
pub fn yuan3_sum_norm(t: f64) -> f64 {
    if (-1.0..=0.5).contains(&t) {
        1.0
    } else {
        2.0 * (t.powi(3) / (3.0 * t - 1.0)).sqrt()
    }
}

/// Spectral norm of `e1^{⊗4} + X(t)` with `X(t)` the symmetric 2×2×2×2 tensor
/// carrying `t` on every index with exactly two 2's. On the unit circle the
/// form is `(1−6t)u² + 6tu` with `u = x1² ∈ [0, 1]`; its interior critical
/// value `9t²/(6t−1)` only matters when it beats the endpoint value 1.
pub fn yuan4_sum_norm(t: f64) -> f64 {
    let denom = 6.0 * t - 1.0;
    if denom == 0.0 {
        return 1.0;
    }
    let u = 3.0 * t / denom;
    if (0.0..=1.0).contains(&u) {
        (9.0 * t * t / denom).abs().max(1.0)
    } else {
        1.0
    }
}

pub fn gallery(name: &str, t: Option<f64>) -> Result<GalleryCase> {
    if let Some(t) = t
        && !t.is_finite()
    {
        return Err(Error::param(format!("gallery parameter must be finite, got {t}")));
    }
    let mut tensors = BTreeMap::new();
    let mut closed = BTreeMap::new();
    let mut reference = BTreeMap::new();
    let (t, range) = match name {
        "notsingle" => {
            let t = t.unwrap_or(0.0);
            let sh = [3, 3, 3];
            let tt = atoms(&sh, &[(&[0, 0, 0], 1.0), (&[1, 1, 1], 1.0), (&[2, 2, 2], 1.0)]);
            let z = atoms(&sh, &[(&[0, 0, 0], 1.0), (&[1, 1, 1], 1.0), (&[2, 2, 2], 1.0), (&[0, 1, 2], t)]);
            tensors.insert("T".into(), tt);
            tensors.insert("Z".into(), z);
            closed.insert("spectral(Z)".into(), t.abs().max(1.0));
            closed.insert("nuclear(T)".into(), 3.0);
            closed.insert("inner(Z,T)".into(), 3.0);
            (t, Some((-1.0, 1.0)))
        }
        "oneperp" => {
            let t = t.unwrap_or(1.0);
            let sh = [2, 2, 3];
            let tt = atoms(&sh, &[(&[0, 0, 0], 1.0), (&[1, 1, 1], 1.0)]);
            tensors.insert("X".into(), atoms(&sh, &[(&[0, 1, 2], t)]));
            tensors.insert("Y".into(), atoms(&sh, &[(&[0, 0, 2], t)]));
            tensors.insert("Z".into(), tt.clone());
            tensors.insert("T".into(), tt);
            closed.insert("nuclear(T)".into(), 2.0);
            closed.insert("spectral(Z)".into(), 1.0);
            closed.insert("spectral(Z+X)".into(), t.abs().max(1.0));
            // Z + Y(t) splits into e1⊗e1⊗(e1 + t·e3) and e2⊗e2⊗e2 on disjoint supports.
            closed.insert("spectral(Z+Y)".into(), (1.0 + t * t).sqrt());
            (t, Some((-1.0, 1.0)))
        }
        "yuan3" | "yuan33" => {
            let t = t.unwrap_or(1.0);
            let x = three_mixed(t);
            if name == "yuan33" {
                let y = e111().scaled(-t);
                tensors.insert("X+Y".into(), x.add(&y)?);
                tensors.insert("Y".into(), y);
                closed.insert("spectral(X+Y)".into(), t.abs());
            }
            tensors.insert("Z+X".into(), e111().add(&x)?);
            tensors.insert("X".into(), x);
            tensors.insert("T".into(), e111());
            tensors.insert("Z".into(), e111());
            closed.insert("nuclear(T)".into(), 1.0);
            closed.insert("spectral(X)".into(), 2.0 * t.abs() / 3f64.sqrt());
            closed.insert("spectral(Z+X)".into(), yuan3_sum_norm(t));
            (t, Some((-1.0, 0.5)))
        }
        "yuan4" => {
            let t = t.unwrap_or(1.0);
            let sh = [2, 2, 2, 2];
            let tt = atoms(&sh, &[(&[0, 0, 0, 0], 1.0)]);
            let mixed: Vec<[usize; 4]> = (0..16usize)
                .map(|o| [(o >> 3) & 1, (o >> 2) & 1, (o >> 1) & 1, o & 1])
                .filter(|i| i.iter().sum::<usize>() == 2)
                .collect();
            let entries: Vec<(&[usize], f64)> = mixed.iter().map(|i| (&i[..], t)).collect();
            let x = atoms(&sh, &entries);
            tensors.insert("Z+X".into(), tt.add(&x)?);
            tensors.insert("X".into(), x);
            tensors.insert("Z".into(), tt.clone());
            tensors.insert("T".into(), tt);
            closed.insert("nuclear(T)".into(), 1.0);
            closed.insert("spectral(X)".into(), 1.5 * t.abs());
            closed.insert("spectral(Z+X)".into(), yuan4_sum_norm(t));
            (t, Some((-(1.0 + 2f64.sqrt()) / 3.0, 1.0 / 3.0)))
        }
        "limitation" => {
            let sh = [2, 2, 2];
            let tt = e111();
            let s = atoms(&sh, &[(&[0, 1, 1], 1.0), (&[1, 0, 1], 1.0), (&[1, 1, 0], 1.0), (&[1, 1, 1], 1.0)]);
            tensors.insert("T+S".into(), tt.add(&s)?);
            tensors.insert("S".into(), s);
            tensors.insert("T".into(), tt);
            closed.insert("nuclear(T)".into(), 1.0);
            reference.insert("nuclear(S)".into(), 3.162);
            reference.insert("nuclear(T+S)".into(), 3.078);
            (t.unwrap_or(0.0), None)
        }
        other => return Err(Error::Lookup(format!("gallery case {other}"))),
    };
    Ok(GalleryCase {
        name: name.to_string(),
        t,
        tensors,
        closed_forms: closed,
        reference_values: reference,
        subgradient_range: range,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::norms::{spectral_bounds, spectral_symmetric_banach, CertifyOptions, HopmOptions, SymmetricOptions};

    fn spectral(t: &DenseTensor) -> (f64, f64) {
        let b = spectral_bounds(t, &HopmOptions::default(), &CertifyOptions::default(), None).unwrap();
        assert!(b.certified);
        (b.lower, b.upper)
    }

    #[test]
    fn unknown_name_is_a_lookup_error() {
        assert!(matches!(gallery("nope", None), Err(Error::Lookup(_))));
        assert!(matches!(gallery("yuan3", Some(f64::NAN)), Err(Error::Parameter(_))));
    }

    #[test]
    fn notsingle_at_zero_is_the_diagonal() {
        let c = gallery("notsingle", Some(0.0)).unwrap();
        let t = c.tensor("T").unwrap();
        assert_eq!(t, c.tensor("Z").unwrap());
        assert_eq!(t.data().iter().filter(|&&v| v != 0.0).count(), 3);
        assert_eq!(t.get(&[1, 1, 1]).unwrap(), 1.0);
    }

    #[test]
    fn yuan3_third_matches_closed_form() {
        let c = gallery("yuan3", Some(1.0 / 3.0)).unwrap();
        let want = 2.0 / (3.0 * 3f64.sqrt());
        assert!((c.closed_form("spectral(X)").unwrap() - want).abs() < 1e-15);
        let (lo, hi) = spectral(c.tensor("X").unwrap());
        assert!((lo - want).abs() < 1e-8 && (hi - want).abs() < 1e-8, "{lo} {hi}");
    }

    #[test]
    fn symmetric_cases_agree_with_one_vector_oracle() {
        let opts = SymmetricOptions::default();
        for &t in &[-1.3, -1.0, -0.4, 0.2, 0.5, 0.6, 1.0] {
            for name in ["yuan3", "yuan4"] {
                let c = gallery(name, Some(t)).unwrap();
                for key in ["X", "Z+X"] {
                    let want = c.closed_form(&format!("spectral({key})")).unwrap();
                    let got = spectral_symmetric_banach(c.tensor(key).unwrap(), &opts).unwrap();
                    assert!((got - want).abs() < 1e-8, "{name} {key} t={t}: {got} vs {want}");
                }
            }
        }
    }

    #[test]
    fn yuan4_range_endpoints_are_tight() {
        let lo = -(1.0 + 2f64.sqrt()) / 3.0;
        assert!((yuan4_sum_norm(lo) - 1.0).abs() < 1e-12);
        assert!(yuan4_sum_norm(lo - 1e-3) > 1.0);
        assert_eq!(yuan4_sum_norm(1.0 / 3.0), 1.0);
        assert!(yuan4_sum_norm(0.35) > 1.002);
    }

    #[test]
    fn asymmetric_cases_agree_with_certified_bounds() {
        for &t in &[-1.5, -0.7, 0.3, 1.0, 1.5] {
            let c = gallery("notsingle", Some(t)).unwrap();
            let want = c.closed_form("spectral(Z)").unwrap();
            let (lo, hi) = spectral(c.tensor("Z").unwrap());
            assert!((lo - want).abs() < 1e-8 && (hi - want).abs() < 1e-6, "notsingle t={t}: [{lo}, {hi}]");

            let c = gallery("oneperp", Some(t)).unwrap();
            let z = c.tensor("Z").unwrap();
            for key in ["X", "Y"] {
                let want = c.closed_form(&format!("spectral(Z+{key})")).unwrap();
                let (lo, hi) = spectral(&z.add(c.tensor(key).unwrap()).unwrap());
                assert!((lo - want).abs() < 1e-8 && (hi - want).abs() < 1e-7, "oneperp {key} t={t}: [{lo}, {hi}]");
            }
        }
    }

    #[test]
    fn yuan33_sum_has_norm_abs_t() {
        let c = gallery("yuan33", Some(-0.8)).unwrap();
        let (lo, hi) = spectral(c.tensor("X+Y").unwrap());
        assert!((lo - 0.8).abs() < 1e-8 && (hi - 0.8).abs() < 1e-7);
    }
}
