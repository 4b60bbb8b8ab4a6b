//! Subgradients of the nuclear norm: membership tests, the dual certificate
//! set `Z(T)`, inclusion families built on top of it, and numerical probes
//! of how far perturbations can stretch before leaving the subdifferential.
//!
//! `G ∈ ∂‖T‖_*` exactly when `⟨G, T⟩ = ‖T‖_*` and `‖G‖_σ ≤ 1`; every test
//! here evaluates those two conditions with certified bounds.

pub mod gallery;
pub mod sphere;
pub mod tau;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::norms::{nuclear_sandwich, spectral_bounds, CertifyOptions, HopmOptions, NetSpec, NuclearOptions, NuclearSandwich};
use crate::subspace::{family_from_tensor, project, ModeFamily, ModeSet, SubspaceSelector, DEFAULT_RANK_TOL};
use crate::tensor::DenseTensor;
use crate::verdict::{Interval, Verdict};

pub use gallery::{gallery, GalleryCase, GALLERY_NAMES};
pub use sphere::{solve_sphere_program, sphere_program, Monomial, SphereOptions, SphereProgram, SphereSolution, PROGRAM_NAMES};
pub use tau::{probe_tau, TauEstimate, TauOptions, TauTrial, TauWitness};

#[derive(Debug, Clone)]
pub struct SubdiffOptions {
    pub hopm: HopmOptions,
    pub certify: CertifyOptions,
    pub nuclear: NuclearOptions,
    pub net: Option<NetSpec>,
    /// Allowance in both membership conditions.
    pub tol: f64,
    /// Singular values below `rank_tol · σ_max` do not count toward `sp_k(T)`.
    pub rank_tol: f64,
    /// Relative projection residual accepted as subspace membership.
    pub membership_tol: f64,
    /// Relative allowance on the radius of an inclusion family.
    pub radius_tol: f64,
}

impl Default for SubdiffOptions {
    fn default() -> Self {
        Self {
            hopm: HopmOptions::default(),
            certify: CertifyOptions::default(),
            nuclear: NuclearOptions { tol: 1e-7, ..NuclearOptions::default() },
            net: None,
            tol: 1e-3,
            rank_tol: DEFAULT_RANK_TOL,
            membership_tol: 1e-10,
            radius_tol: 1e-6,
        }
    }
}

impl SubdiffOptions {
    pub(crate) fn spectral(&self, t: &DenseTensor) -> Result<crate::norms::SpectralBounds> {
        spectral_bounds(t, &self.hopm, &self.certify, self.net.as_ref())
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct SubgradientReport {
    pub pairing: f64,
    pub nuclear: Interval,
    pub spectral: Interval,
    pub spectral_certified: bool,
    /// `⟨G, T⟩ − (lower(‖T‖_*) − tol)`; nonnegative when the pairing condition passes.
    pub pairing_slack: f64,
    /// `1 + tol − upper(‖G‖_σ)`; nonnegative when the norm condition passes.
    pub spectral_slack: f64,
    pub verdict: Verdict,
}

/// Decides `G ∈ ∂‖T‖_*` against a precomputed sandwich of `‖T‖_*`.
pub fn subgradient_report(g: &DenseTensor, t: &DenseTensor, t_nuclear: &NuclearSandwich, opts: &SubdiffOptions) -> Result<SubgradientReport> {
    if g.shape() != t.shape() {
        return Err(Error::dim(format!("G has shape {:?}, T has {:?}", g.shape(), t.shape())));
    }
    if t.is_zero() {
        return Err(Error::pre("T must be nonzero"));
    }
    let pairing = g.inner(t)?;
    let sb = opts.spectral(g)?;
    let tol = opts.tol;
    let scale = t_nuclear.lower.max(1.0);
    let pairing_slack = pairing - (t_nuclear.lower - tol * scale);
    let spectral_slack = 1.0 + tol - sb.upper;
    let fails = pairing < t_nuclear.lower - t_nuclear.gap - tol * scale || sb.lower > 1.0 + tol;
    let passes = pairing_slack >= 0.0 && spectral_slack >= 0.0 && sb.certified;
    let verdict = if fails {
        Verdict::Fail
    } else if passes {
        Verdict::Pass
    } else {
        Verdict::Inconclusive
    };
    Ok(SubgradientReport {
        pairing,
        nuclear: Interval::from(t_nuclear),
        spectral: Interval::from(&sb),
        spectral_certified: sb.certified,
        pairing_slack,
        spectral_slack,
        verdict,
    })
}

pub fn is_subgradient(g: &DenseTensor, t: &DenseTensor, opts: &SubdiffOptions) -> Result<SubgradientReport> {
    if t.is_zero() {
        return Err(Error::pre("T must be nonzero"));
    }
    let ns = nuclear_sandwich(t, &opts.nuclear, opts.net.as_ref())?;
    subgradient_report(g, t, &ns, opts)
}

#[derive(Debug, Clone, Serialize)]
pub struct ZWitness {
    pub z: DenseTensor,
    pub pairing: f64,
    pub spectral: Interval,
    pub certified: bool,
    /// Set when the projected dual witness was degenerate and `T/‖T‖_σ` was used instead.
    pub fallback: bool,
    pub flags: Vec<String>,
}

/// A member of `Z(T)` (up to the sandwich accuracy) from the sandwich's dual
/// witness, projected onto `T(T)` and scaled to certified spectral norm 1.
pub fn find_z_witness(t: &DenseTensor, sandwich: &NuclearSandwich, opts: &SubdiffOptions) -> Result<ZWitness> {
    if t.is_zero() {
        return Err(Error::pre("T must be nonzero"));
    }
    if sandwich.dual_witness.shape() != t.shape() {
        return Err(Error::dim("sandwich belongs to a tensor of another shape"));
    }
    let family = family_from_tensor(t, opts.rank_tol);
    let span = SubspaceSelector::Basic(ModeSet::empty());
    let p = project(&span, &family, &sandwich.dual_witness)?;
    let sb = opts.spectral(&p)?;
    let mut flags = Vec::new();
    if !sb.certified {
        flags.push("spectral-uncertified".to_string());
    }
    if sb.upper > 0.0 {
        let z = p.scaled(1.0 / sb.upper);
        let pairing = z.inner(t)?;
        // Any member of Z(T) pairs to ‖T‖_* ≥ ‖T‖_2; allow for the certification gap.
        if pairing >= t.frobenius() * (1.0 - 1e-6) {
            return Ok(ZWitness {
                spectral: Interval::new(sb.lower / sb.upper, 1.0),
                certified: sb.certified,
                z,
                pairing,
                fallback: false,
                flags,
            });
        }
    }
    flags.push("degenerate-witness".to_string());
    let tb = opts.spectral(t)?;
    let z = t.scaled(1.0 / tb.upper);
    Ok(ZWitness {
        pairing: z.inner(t)?,
        spectral: Interval::new(tb.lower / tb.upper, 1.0),
        certified: tb.certified,
        z,
        fallback: true,
        flags,
    })
}

#[derive(Debug, Clone, Serialize)]
pub struct ZMembershipReport {
    /// `‖Z − p(Z)‖_2 / ‖Z‖_2` for the projection onto `T(T)`.
    pub residual: f64,
    pub pairing: f64,
    pub nuclear: Interval,
    pub spectral: Interval,
    pub spectral_certified: bool,
    pub verdict: Verdict,
}

/// Checks `Z ∈ Z(T)`: `Z ∈ T(T)`, `⟨Z, T⟩ = ‖T‖_*` and `‖Z‖_σ = 1`.
pub fn z_membership(z: &DenseTensor, t: &DenseTensor, opts: &SubdiffOptions) -> Result<ZMembershipReport> {
    if z.shape() != t.shape() {
        return Err(Error::dim(format!("Z has shape {:?}, T has {:?}", z.shape(), t.shape())));
    }
    if t.is_zero() {
        return Err(Error::pre("T must be nonzero"));
    }
    let ns = nuclear_sandwich(t, &opts.nuclear, opts.net.as_ref())?;
    z_membership_with(z, t, &ns, opts)
}

pub fn z_membership_with(z: &DenseTensor, t: &DenseTensor, t_nuclear: &NuclearSandwich, opts: &SubdiffOptions) -> Result<ZMembershipReport> {
    let family = family_from_tensor(t, opts.rank_tol);
    let p = project(&SubspaceSelector::Basic(ModeSet::empty()), &family, z)?;
    let residual = p.sub(z)?.frobenius() / z.frobenius().max(f64::MIN_POSITIVE);
    let pairing = z.inner(t)?;
    let sb = opts.spectral(z)?;
    let tol = opts.tol;
    let scale = t_nuclear.upper.max(1.0);
    let fails = residual > tol
        || pairing < t_nuclear.lower - t_nuclear.gap - tol * scale
        || pairing > t_nuclear.upper + tol * scale
        || sb.lower > 1.0 + tol
        || sb.upper < 1.0 - tol;
    let passes = residual <= tol
        && pairing >= t_nuclear.lower - tol * scale
        && sb.certified
        && sb.upper <= 1.0 + tol
        && sb.lower >= 1.0 - tol;
    Ok(ZMembershipReport {
        residual,
        pairing,
        nuclear: Interval::from(t_nuclear),
        spectral: Interval::from(&sb),
        spectral_certified: sb.certified,
        verdict: if fails {
            Verdict::Fail
        } else if passes {
            Verdict::Pass
        } else {
            Verdict::Inconclusive
        },
    })
}

/// One term `w·X` of a convex combination with `X ∈ U^I(T)`, `‖X‖_σ ≤ 1`.
#[derive(Debug, Clone)]
pub struct HullTerm {
    pub weight: f64,
    pub modes: ModeSet,
    pub x: DenseTensor,
}

/// A perturbation `X` together with the inclusion family it is claimed to belong to.
#[derive(Debug, Clone)]
pub enum Inclusion {
    /// `X ∈ ⊕_{|I| ≥ 2} T^I(T)`, `‖X‖_σ ≤ ½`, order 3 only.
    D1(DenseTensor),
    /// `X ∈ ⊕_{|I| ≥ 2} T^I(T)`, `‖X‖_σ ≤ 2/(d(d−1))`.
    D2(DenseTensor),
    /// `X ∈ U^I(T)` with `|I| ≥ 2`, `‖X‖_σ ≤ 1`.
    Single(ModeSet, DenseTensor),
    /// Convex combination of `Single` members; weights are nonnegative and sum to at most 1.
    Hull(Vec<HullTerm>),
}

impl Inclusion {
    pub fn family_name(&self) -> &'static str {
        match self {
            Inclusion::D1(_) => "D1",
            Inclusion::D2(_) => "D2",
            Inclusion::Single(..) => "D^I",
            Inclusion::Hull(_) => "D",
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct InclusionReport {
    pub family: String,
    pub g: DenseTensor,
    /// Certified interval of `‖X‖_σ`; for hulls, of the largest term.
    pub x_spectral: Interval,
    pub radius: f64,
    pub subgradient: SubgradientReport,
}

fn require_in(sel: &SubspaceSelector, family: &ModeFamily, x: &DenseTensor, rule: &str, tol: f64) -> Result<()> {
    let off = project(sel, family, x)?.sub(x)?.frobenius();
    if off > tol * x.frobenius().max(1.0) {
        return Err(Error::pre(format!("{rule}: X is {off:e} away from {sel}")));
    }
    Ok(())
}

/// Builds `G = Z + X` for a member of an inclusion family and tests it.
/// Members of every family must pass.
pub fn build_inclusion_member(t: &DenseTensor, z: &DenseTensor, member: &Inclusion, opts: &SubdiffOptions) -> Result<InclusionReport> {
    if t.is_zero() {
        return Err(Error::pre("T must be nonzero"));
    }
    if z.shape() != t.shape() {
        return Err(Error::dim("Z and T differ in shape"));
    }
    let d = t.order();
    let family = family_from_tensor(t, opts.rank_tol);
    let name = member.family_name();
    let radius_ok = |upper_radius: f64, lower: f64| lower <= upper_radius * (1.0 + opts.radius_tol);

    let (x, x_spectral, radius) = match member {
        Inclusion::D1(x) | Inclusion::D2(x) => {
            let radius = match member {
                Inclusion::D1(_) if d != 3 => return Err(Error::pre("D1: defined for order-3 tensors only")),
                Inclusion::D1(_) => 0.5,
                _ => 2.0 / (d * (d - 1)) as f64,
            };
            check_shape(x, t)?;
            require_in(&SubspaceSelector::at_least(d, 2), &family, x, name, opts.membership_tol)?;
            let sb = opts.spectral(x)?;
            if !radius_ok(radius, sb.lower) {
                return Err(Error::pre(format!("{name}: ‖X‖_σ ≥ {} exceeds radius {radius}", sb.lower)));
            }
            (x.clone(), Interval::from(&sb), radius)
        }
        Inclusion::Single(modes, x) => {
            check_shape(x, t)?;
            check_index_set(*modes, d, name)?;
            require_in(&SubspaceSelector::UpperU(*modes), &family, x, name, opts.membership_tol)?;
            let sb = opts.spectral(x)?;
            if !radius_ok(1.0, sb.lower) {
                return Err(Error::pre(format!("{name}: ‖X‖_σ ≥ {} exceeds radius 1", sb.lower)));
            }
            (x.clone(), Interval::from(&sb), 1.0)
        }
        Inclusion::Hull(terms) => {
            if terms.is_empty() {
                return Err(Error::pre("D: empty convex combination"));
            }
            let total: f64 = terms.iter().map(|h| h.weight).sum();
            if terms.iter().any(|h| !(h.weight >= 0.0)) || total > 1.0 + 1e-12 {
                return Err(Error::pre(format!("D: weights must be nonnegative with sum ≤ 1, got {total}")));
            }
            let mut x = DenseTensor::zeros(t.shape());
            let mut widest = Interval::point(0.0);
            for h in terms {
                check_shape(&h.x, t)?;
                check_index_set(h.modes, d, name)?;
                require_in(&SubspaceSelector::UpperU(h.modes), &family, &h.x, name, opts.membership_tol)?;
                let sb = opts.spectral(&h.x)?;
                if !radius_ok(1.0, sb.lower) {
                    return Err(Error::pre(format!("{name}: a term has ‖X_i‖_σ ≥ {} > 1", sb.lower)));
                }
                if sb.upper > widest.upper {
                    widest = Interval::from(&sb);
                }
                x.axpy(h.weight, &h.x)?;
            }
            (x, widest, 1.0)
        }
    };
    let g = z.add(&x)?;
    let subgradient = is_subgradient(&g, t, opts)?;
    Ok(InclusionReport { family: name.to_string(), g, x_spectral, radius, subgradient })
}

fn check_shape(x: &DenseTensor, t: &DenseTensor) -> Result<()> {
    if x.shape() != t.shape() {
        return Err(Error::dim(format!("X has shape {:?}, T has {:?}", x.shape(), t.shape())));
    }
    Ok(())
}

fn check_index_set(modes: ModeSet, d: usize, name: &str) -> Result<()> {
    if !modes.fits(d) || modes.len() < 2 {
        return Err(Error::pre(format!("{name}: index set {{{modes}}} needs at least two of the {d} modes")));
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numeric::unit_vector;
    use crate::rng;
    use crate::tensor::outer_atom;
    use nalgebra::DMatrix;

    fn opts() -> SubdiffOptions {
        SubdiffOptions::default()
    }

    #[test]
    fn unit_rank_one_is_its_own_subgradient() {
        let mut r = rng::stream(3, 0);
        let f: Vec<Vec<f64>> = (0..3).map(|_| rng::unit_vec(&mut r, 3)).collect();
        let t = outer_atom(&f, 2.5).unwrap();
        let g = t.scaled(1.0 / t.frobenius());
        let rep = is_subgradient(&g, &t, &opts()).unwrap();
        assert_eq!(rep.verdict, Verdict::Pass, "{rep:?}");
    }

    #[test]
    fn oneperp_directions() {
        let c = gallery("oneperp", Some(0.8)).unwrap();
        let (t, z) = (c.tensor("T").unwrap(), c.tensor("Z").unwrap());
        let pass = is_subgradient(&z.add(c.tensor("X").unwrap()).unwrap(), t, &opts()).unwrap();
        assert_eq!(pass.verdict, Verdict::Pass, "{pass:?}");
        let c = gallery("oneperp", Some(0.3)).unwrap();
        let fail = is_subgradient(&z.add(c.tensor("Y").unwrap()).unwrap(), t, &opts()).unwrap();
        assert_eq!(fail.verdict, Verdict::Fail, "{fail:?}");
        assert!((fail.spectral.lower - 1.09f64.sqrt()).abs() < 1e-8);
    }

    #[test]
    fn witness_of_rank_one_is_the_normalized_atom() {
        let t = outer_atom(&[unit_vector(2, 0), unit_vector(2, 0), unit_vector(2, 0)], 1.0).unwrap();
        let ns = nuclear_sandwich(&t, &opts().nuclear, None).unwrap();
        let w = find_z_witness(&t, &ns, &opts()).unwrap();
        assert!(!w.fallback);
        assert!(w.z.sub(&t).unwrap().frobenius() < 1e-8, "{:?}", w.z);
    }

    #[test]
    fn witness_of_matrix_is_uv_transpose() {
        let mut r = rng::stream(5, 0);
        let m = DenseTensor::new(vec![3, 3], rng::gaussian_vec(&mut r, 9)).unwrap();
        let svd = m.matricize(0).unwrap().svd(true, true);
        let uvt: DMatrix<f64> = svd.u.unwrap() * svd.v_t.unwrap();
        let ns = nuclear_sandwich(&m, &opts().nuclear, None).unwrap();
        let w = find_z_witness(&m, &ns, &opts()).unwrap();
        let want = DenseTensor::dematricize(0, &[3, 3], &uvt).unwrap();
        assert!(w.z.sub(&want).unwrap().frobenius() < 1e-6);
        assert!(w.pairing >= ns.lower * (1.0 - 1e-6));
    }

    #[test]
    fn diagonal_witness_pairs_to_three() {
        let c = gallery("notsingle", Some(0.0)).unwrap();
        let t = c.tensor("T").unwrap();
        let ns = nuclear_sandwich(t, &opts().nuclear, None).unwrap();
        let w = find_z_witness(t, &ns, &opts()).unwrap();
        assert!((w.pairing - 3.0).abs() < 1e-6, "{}", w.pairing);
        assert!(w.spectral.lower > 1.0 - 1e-6);
    }

    #[test]
    fn notsingle_membership() {
        let t = gallery("notsingle", None).unwrap().tensor("T").unwrap().clone();
        let o = opts();
        let ns = nuclear_sandwich(&t, &o.nuclear, None).unwrap();
        for (s, want) in [(-1.0, Verdict::Pass), (0.0, Verdict::Pass), (1.0, Verdict::Pass), (1.2, Verdict::Fail)] {
            let z = gallery("notsingle", Some(s)).unwrap().tensor("Z").unwrap().clone();
            let r = z_membership_with(&z, &t, &ns, &o).unwrap();
            assert_eq!(r.verdict, want, "t={s}: {r:?}");
        }
        let mid = gallery("notsingle", Some(-1.0))
            .unwrap()
            .tensor("Z")
            .unwrap()
            .lincomb(0.5, gallery("notsingle", Some(1.0)).unwrap().tensor("Z").unwrap(), 0.5)
            .unwrap();
        assert_eq!(z_membership_with(&mid, &t, &ns, &o).unwrap().verdict, Verdict::Pass);
    }

    #[test]
    fn inclusion_families() {
        let c = gallery("yuan3", Some(1.0)).unwrap();
        let (t, z) = (c.tensor("T").unwrap(), c.tensor("Z").unwrap());
        let x = c.tensor("X").unwrap();
        let o = opts();

        // D2 at order 3: radius 1/3.
        let rep = build_inclusion_member(t, z, &Inclusion::D2(x.scaled(3f64.sqrt() / 6.0)), &o).unwrap();
        assert_eq!(rep.subgradient.verdict, Verdict::Pass);
        assert!((rep.x_spectral.lower - 1.0 / 3.0).abs() < 1e-8);
        let rep = build_inclusion_member(t, z, &Inclusion::D1(x.scaled(3f64.sqrt() / 4.0)), &o).unwrap();
        assert_eq!(rep.subgradient.verdict, Verdict::Pass);
        assert!(matches!(
            build_inclusion_member(t, z, &Inclusion::D2(x.scaled(0.5)), &o),
            Err(Error::Precondition(_))
        ));

        // D^I with I = {1, 2} and a unit-norm X.
        let u = DenseTensor::unit(&[2, 2, 2], &[1, 1, 0]).unwrap();
        let rep = build_inclusion_member(t, z, &Inclusion::Single(ModeSet::from_modes(&[0, 1]), u.clone()), &o).unwrap();
        assert_eq!(rep.subgradient.verdict, Verdict::Pass);
        assert!(matches!(
            build_inclusion_member(t, z, &Inclusion::Single(ModeSet::from_modes(&[0, 2]), u.clone()), &o),
            Err(Error::Precondition(_))
        ));

        let v = DenseTensor::unit(&[2, 2, 2], &[0, 1, 1]).unwrap();
        let hull = Inclusion::Hull(vec![
            HullTerm { weight: 0.5, modes: ModeSet::from_modes(&[0, 1]), x: u },
            HullTerm { weight: 0.5, modes: ModeSet::from_modes(&[1, 2]), x: v },
        ]);
        let rep = build_inclusion_member(t, z, &hull, &o).unwrap();
        assert_eq!(rep.subgradient.verdict, Verdict::Pass);
    }

    #[test]
    fn beyond_full_stretch_still_passes() {
        let c = gallery("yuan3", Some(-1.0)).unwrap();
        let g = c.tensor("Z+X").unwrap();
        let rep = is_subgradient(g, c.tensor("T").unwrap(), &opts()).unwrap();
        assert_eq!(rep.verdict, Verdict::Pass, "{rep:?}");
    }
}
