use proptest::prelude::*;
use tnn_core::norms::{
    nuclear_sandwich, spectral_bounds, spectral_hopm, spectral_symmetric_banach, HopmOptions, NuclearOptions,
    SymmetricOptions,
};
use tnn_core::subdiff::{build_inclusion_member, gallery, is_subgradient, probe_tau, Inclusion, SubdiffOptions, TauOptions};
use tnn_core::subspace::{family_from_tensor, project, ModeSet, SubspaceSelector};
use tnn_core::{rng, DenseTensor, Verdict};

fn tensor_of(case: &tnn_core::subdiff::GalleryCase, key: &str) -> DenseTensor {
    match case.tensor(key) {
        Ok(x) => x.clone(),
        Err(_) => {
            let (a, b) = key.split_once('+').expect("sum key");
            case.tensor(a).unwrap().add(case.tensor(b).unwrap()).unwrap()
        }
    }
}

/// `‖Y‖_* − ‖T‖_* ≥ ⟨G, Y − T⟩` for any subgradient `G`, checked with
/// certified sandwiches on both nuclear norms.
#[test]
fn passing_subgradients_satisfy_the_defining_inequality() {
    let opts = SubdiffOptions::default();
    let nuclear = NuclearOptions { tol: 1e-7, ..NuclearOptions::default() };
    let cases = [("yuan3", 0.25, "Z+X"), ("yuan3", -0.8, "Z+X"), ("oneperp", 0.8, "Z+X")];
    for (name, t, key) in cases {
        let case = gallery(name, Some(t)).unwrap();
        let tt = case.tensor("T").unwrap();
        let g = tensor_of(&case, key);
        assert_eq!(is_subgradient(&g, tt, &opts).unwrap().verdict, Verdict::Pass, "{name}({t})");
        let nt = nuclear_sandwich(tt, &nuclear, None).unwrap();
        let mut r = rng::stream(77, t.to_bits());
        for _ in 0..20 {
            let y = DenseTensor::new(tt.shape().to_vec(), rng::gaussian_vec(&mut r, tt.len())).unwrap();
            let ny = nuclear_sandwich(&y, &nuclear, None).unwrap();
            let rhs = g.inner(&y.sub(tt).unwrap()).unwrap();
            assert!(ny.upper - nt.lower >= rhs - ny.gap - nt.gap - 1e-6, "{name}({t}): {} < {rhs}", ny.upper - nt.lower);
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(12))]

    #[test]
    fn second_family_members_are_subgradients(seed in 0u64..1_000_000, frac in 0.05f64..1.0, order4 in any::<bool>()) {
        let case = gallery(if order4 { "yuan4" } else { "yuan3" }, Some(0.0)).unwrap();
        let (t, z) = (case.tensor("T").unwrap(), case.tensor("Z").unwrap());
        let d = t.order();
        let opts = SubdiffOptions::default();
        let family = family_from_tensor(t, opts.rank_tol);
        let mut r = rng::stream(seed, 0);
        let g = DenseTensor::new(t.shape().to_vec(), rng::gaussian_vec(&mut r, t.len())).unwrap();
        let x = project(&SubspaceSelector::at_least(d, 2), &family, &g).unwrap();
        let sb = spectral_bounds(&x, &opts.hopm, &opts.certify, None).unwrap();
        let radius = 2.0 / (d * (d - 1)) as f64;
        let x = x.scaled(frac * radius / sb.upper);
        let rep = build_inclusion_member(t, z, &Inclusion::D2(x), &opts).unwrap();
        prop_assert_eq!(rep.subgradient.verdict, Verdict::Pass, "{:?}", rep.subgradient);
    }
}

#[test]
fn first_family_radius_is_tight() {
    let opts = SubdiffOptions::default();
    for t in [-0.9, -0.3, 0.2, 0.55, 1.0] {
        let case = gallery("yuan33", Some(t)).unwrap();
        let b = spectral_bounds(case.tensor("X+Y").unwrap(), &opts.hopm, &opts.certify, None).unwrap();
        assert!(b.lower - 1e-8 <= t.abs() && t.abs() <= b.upper + 1e-8, "t = {t}: {b:?}");
    }
    let case = gallery("yuan33", Some(0.55)).unwrap();
    let g = tensor_of(&case, "Z+X");
    let rep = is_subgradient(&g, case.tensor("T").unwrap(), &opts).unwrap();
    assert_eq!(rep.verdict, Verdict::Fail, "{rep:?}");
}

#[test]
fn upper_u_radii_meet_at_one() {
    let sel = SubspaceSelector::UpperU(ModeSet::from_modes(&[0, 1]));
    let est = probe_tau(&sel, &[2, 2, 2], 2, 5, 1e-6, &TauOptions::default()).unwrap();
    let feasible = est.feasible_max.unwrap();
    assert!((feasible - 1.0).abs() <= 1e-3, "{feasible}");
    if let Some(infeasible) = est.infeasible_min {
        assert!(infeasible >= 1.0 - 1e-3, "{infeasible}");
    }
}

#[test]
fn gallery_closed_forms_match_independent_solvers() {
    let hopm = HopmOptions::default();
    let sym = SymmetricOptions::default();
    for name in ["notsingle", "oneperp", "yuan3", "yuan33", "yuan4"] {
        for t in [-1.2, -0.5, 0.0, 0.4, 0.8, 1.5] {
            let case = gallery(name, Some(t)).unwrap();
            for (key, &want) in &case.closed_forms {
                let Some(inner) = key.strip_prefix("spectral(").and_then(|k| k.strip_suffix(')')) else {
                    continue;
                };
                let x = tensor_of(&case, inner);
                let h = spectral_hopm(&x, &hopm).unwrap().value;
                assert!((h - want).abs() <= 1e-8, "{name}({t}) {key}: multi-start {h} vs {want}");
                if x.is_symmetric(1e-12) {
                    let s = spectral_symmetric_banach(&x, &sym).unwrap();
                    assert!((s - want).abs() <= 1e-8, "{name}({t}) {key}: symmetric {s} vs {want}");
                }
            }
        }
    }
}
