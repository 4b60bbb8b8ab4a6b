use proptest::prelude::*;
use tnn_core::rng;
use tnn_core::subspace::{
    family_from_tensor, operator_norm_chain, project, ChainOp, ModeFamily, ModeSet, OperatorNormOptions,
    SubspaceSelector,
};
use tnn_core::DenseTensor;

/// A random family on a random small shape plus two random tensors.
fn setup(seed: u64) -> (ModeFamily, DenseTensor, DenseTensor) {
    let mut r = rng::stream(seed, 0);
    let d = 2 + (seed % 3) as usize;
    let shape: Vec<usize> = (0..d).map(|k| 1 + ((seed as usize / 3 + 5 * k) % 4)).collect();
    let ranks: Vec<usize> = shape.iter().enumerate().map(|(k, &n)| (seed as usize + 2 * k) % (n + 1)).collect();
    let family = ModeFamily::random(&shape, &ranks, &mut r).unwrap();
    let n: usize = shape.iter().product();
    let a = DenseTensor::new(shape.clone(), rng::gaussian_vec(&mut r, n)).unwrap();
    let b = DenseTensor::new(shape, rng::gaussian_vec(&mut r, n)).unwrap();
    (family, a, b)
}

fn selectors(d: usize) -> Vec<SubspaceSelector> {
    let mut v: Vec<SubspaceSelector> = ModeSet::all(d).map(SubspaceSelector::Basic).collect();
    v.extend(ModeSet::all(d).map(SubspaceSelector::UpperU));
    v.extend(ModeSet::all(d).map(SubspaceSelector::LowerU));
    v.push(SubspaceSelector::at_least(d, 2));
    v
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn projections_are_self_adjoint_and_idempotent(seed in 0u64..10_000) {
        let (f, a, b) = setup(seed);
        for sel in selectors(f.order()) {
            let pa = project(&sel, &f, &a).unwrap();
            let pb = project(&sel, &f, &b).unwrap();
            prop_assert!((pa.inner(&b).unwrap() - a.inner(&pb).unwrap()).abs() <= 1e-10, "{sel}");
            let ppa = project(&sel, &f, &pa).unwrap();
            prop_assert!(ppa.sub(&pa).unwrap().frobenius() <= 1e-12 * a.frobenius().max(1.0), "{sel}");
        }
    }

    #[test]
    fn span_lies_in_every_lower_u(seed in 0u64..10_000) {
        let (f, a, _) = setup(seed);
        let span = project(&SubspaceSelector::Basic(ModeSet::empty()), &f, &a).unwrap();
        for i in ModeSet::all(f.order()) {
            let again = project(&SubspaceSelector::LowerU(i), &f, &span).unwrap();
            prop_assert!(again.sub(&span).unwrap().frobenius() <= 1e-12 * a.frobenius().max(1.0));
        }
    }

    #[test]
    fn single_projector_norm_is_zero_or_one(seed in 0u64..10_000) {
        let (f, a, _) = setup(seed);
        let opts = OperatorNormOptions::default();
        for sel in selectors(f.order()) {
            let norm = operator_norm_chain(&[ChainOp::Subspace { selector: &sel, family: &f }], a.shape(), &opts).unwrap();
            prop_assert!(norm.abs() <= 1e-8 || (norm - 1.0).abs() <= 1e-8, "{sel}: {norm}");
        }
    }

    #[test]
    fn span_membership_matches_mode_spans(seed in 0u64..10_000) {
        // T lies in T((V_k)) exactly when every mode span of T sits inside V_k.
        let (f, a, _) = setup(seed);
        let span = SubspaceSelector::Basic(ModeSet::empty());
        for t in [a.clone(), project(&span, &f, &a).unwrap()] {
            let inside = project(&span, &f, &t).unwrap().sub(&t).unwrap().frobenius() <= 1e-9 * t.frobenius().max(1e-300);
            let spans = family_from_tensor(&t, 1e-9);
            let contained = (0..f.order()).all(|k| {
                let v = f.subspace(k).projector();
                let s = spans.subspace(k).basis();
                (&v * s - s).amax() <= 1e-7
            });
            prop_assert_eq!(inside, contained);
        }
    }
}
