use proptest::prelude::*;
use tnn_core::norms::{
    hopm_trace, nuclear_sandwich, spectral_bounds, spectral_net_bounds, CertifyOptions, HopmOptions, NetSpec,
    NuclearOptions,
};
use tnn_core::subdiff::gallery;
use tnn_core::{rng, DenseTensor, Holder};

fn spectral(t: &DenseTensor) -> (f64, f64, bool) {
    let b = spectral_bounds(t, &HopmOptions::default(), &CertifyOptions::default(), None).unwrap();
    (b.lower, b.upper, b.certified)
}

fn random_tensor(shape: &[usize], seed: u64) -> DenseTensor {
    let mut r = rng::stream(seed, 0);
    let n = shape.iter().product();
    DenseTensor::new(shape.to_vec(), rng::gaussian_vec(&mut r, n)).unwrap()
}

fn small_shape() -> impl Strategy<Value = Vec<usize>> {
    prop::collection::vec(1usize..=3, 3)
}

#[test]
fn sandwiches_contain_gallery_closed_forms() {
    let params = [-1.2, -1.0, -0.4, 0.0, 0.3, 0.5, 0.7, 1.0, 1.6];
    for name in ["notsingle", "oneperp", "yuan3", "yuan33", "yuan4"] {
        for &t in &params {
            let case = gallery(name, Some(t)).unwrap();
            for (key, &want) in &case.closed_forms {
                let Some(inner) = key.strip_prefix("spectral(").and_then(|k| k.strip_suffix(')')) else {
                    continue;
                };
                let tensor = match case.tensor(inner) {
                    Ok(x) => x.clone(),
                    Err(_) => {
                        let (a, b) = inner.split_once('+').unwrap();
                        case.tensor(a).unwrap().add(case.tensor(b).unwrap()).unwrap()
                    }
                };
                let (lo, hi, certified) = spectral(&tensor);
                assert!(certified, "{name}({t}) {key}");
                // notsingle's Z(t) keeps a circle of maximizers, so branch and bound ends unconverged; the
                // bounds stay valid either way.
                assert!(lo - 1e-8 <= want && want <= hi + 1e-8, "{name}({t}) {key}: [{lo}, {hi}] vs {want}");
            }
        }
    }
    let nuclear = NuclearOptions { tol: 1e-7, ..NuclearOptions::default() };
    for name in ["notsingle", "oneperp", "yuan3", "yuan4"] {
        let case = gallery(name, None).unwrap();
        let want = case.closed_form("nuclear(T)").unwrap();
        let s = nuclear_sandwich(case.tensor("T").unwrap(), &nuclear, None).unwrap();
        assert!(s.lower - 1e-8 <= want && want <= s.upper + 1e-8, "{name}: [{}, {}] vs {want}", s.lower, s.upper);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(10))]

    #[test]
    fn norm_bounds_respect_entrywise_norms(shape in small_shape(), seed in 0u64..1_000_000) {
        let t = random_tensor(&shape, seed);
        let (lo, hi, _) = spectral(&t);
        prop_assert!(lo >= t.norm(Holder::Inf) - 1e-10);
        prop_assert!(hi <= t.norm(Holder::Two) + 1e-10);
        let s = nuclear_sandwich(&t, &NuclearOptions::default(), None).unwrap();
        prop_assert!(s.upper <= t.norm(Holder::One) + 1e-10, "{} > {}", s.upper, t.norm(Holder::One));
        prop_assert!(s.lower >= t.norm(Holder::Two) * (1.0 - 1e-9) && s.lower <= s.upper);
    }

    #[test]
    fn norms_scale_linearly(shape in small_shape(), seed in 0u64..1_000_000, c in 0.01f64..100.0) {
        let t = random_tensor(&shape, seed);
        let ct = t.scaled(c);
        let (lo, hi, _) = spectral(&t);
        let (clo, chi, _) = spectral(&ct);
        prop_assert!((clo / (c * lo) - 1.0).abs() <= 1e-10, "{clo} vs {}", c * lo);
        prop_assert!((chi / (c * hi) - 1.0).abs() <= 1e-8, "{chi} vs {}", c * hi);
        let opts = NuclearOptions::default();
        let s = nuclear_sandwich(&t, &opts, None).unwrap();
        let cs = nuclear_sandwich(&ct, &opts, None).unwrap();
        // Each sandwich brackets the same value, so matching ends can differ by both widths together.
        let tol = (2.0 * opts.tol).max(s.gap / s.lower + cs.gap / cs.lower) + 1e-10;
        prop_assert!((cs.lower / (c * s.lower) - 1.0).abs() <= tol, "{:?} {:?}", s, cs);
        prop_assert!((cs.upper / (c * s.upper) - 1.0).abs() <= tol, "{:?} {:?}", s, cs);
        prop_assert!(cs.lower <= c * s.upper * (1.0 + 1e-10) && c * s.lower <= cs.upper * (1.0 + 1e-10));
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn alternating_updates_never_decrease_the_objective(
        shape in prop::collection::vec(2usize..=4, 2..=4),
        seed in 0u64..1_000_000,
    ) {
        let t = random_tensor(&shape, seed);
        let mut r = rng::stream(seed, 1);
        let x0: Vec<Vec<f64>> = shape.iter().map(|&n| rng::unit_vec(&mut r, n)).collect();
        let trace = hopm_trace(&t, x0, 20);
        prop_assert!(trace.len() > 1);
        for w in trace.windows(2) {
            prop_assert!(w[1] >= w[0] - 1e-12 * w[0].abs().max(1.0), "{} -> {}", w[0], w[1]);
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(6))]

    #[test]
    fn finer_nets_give_narrower_intervals(seed in 0u64..1_000_000) {
        let t = random_tensor(&[2, 2, 2], seed);
        let (lo, hi, _) = spectral(&t);
        let mut last = f64::INFINITY;
        for eps in [0.1, 0.05, 0.02] {
            let b = spectral_net_bounds(&t, &NetSpec::grid(t.shape(), eps).unwrap()).unwrap();
            let upper = b.upper.unwrap();
            prop_assert!(b.lower <= hi + 1e-12 && upper >= lo - 1e-12);
            let width = upper - b.lower;
            prop_assert!(width <= last, "width {width} at {eps} after {last}");
            last = width;
        }
    }
}
