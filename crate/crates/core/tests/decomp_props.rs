use proptest::prelude::*;
use tnn_core::decomp::{check_nuclear_decomp, check_spectral_decomp, sample_pair, DecompOptions};
use tnn_core::norms::{nuclear_sandwich, NuclearOptions};
use tnn_core::subdiff::gallery;
use tnn_core::subspace::ModeSet;
use tnn_core::{DenseTensor, Verdict};

fn mid(t: &DenseTensor) -> f64 {
    let s = nuclear_sandwich(t, &NuclearOptions { tol: 1e-9, ..NuclearOptions::default() }, None).unwrap();
    0.5 * (s.lower + s.upper)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(16))]

    /// A pair drawn for the larger index set also qualifies for every
    /// two-element subset, and both checks agree.
    #[test]
    fn spectral_identity_is_monotone_in_the_index_set(seed in 0u64..1_000_000, drop in 0usize..3) {
        let full = ModeSet::full(3);
        let (family, t, s) = sample_pair(&[2, 2, 2], &[1, 1, 1], full, seed).unwrap();
        let opts = DecompOptions::default();
        let big = check_spectral_decomp(&t, &s, &family, full, &opts).unwrap();
        prop_assert_eq!(big.verdict, Verdict::Pass, "{:?}", big);
        let modes: Vec<usize> = (0..3).filter(|&k| k != drop).collect();
        let small = check_spectral_decomp(&t, &s, &family, ModeSet::from_modes(&modes), &opts).unwrap();
        prop_assert_eq!(small.verdict, Verdict::Pass, "{:?}", small);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(4))]

    /// A loose sandwich may leave the verdict open, but never turns it into a failure.
    #[test]
    fn partition_check_never_fails(seed in 0u64..1_000_000) {
        let modes = ModeSet::from_modes(&[0, 1]);
        let (family, t, s) = sample_pair(&[2, 2, 2], &[1, 1, 1], modes, seed).unwrap();
        let rep = check_nuclear_decomp(&t, &s, &family, modes, &DecompOptions::default()).unwrap();
        prop_assert_ne!(rep.verdict, Verdict::Fail, "{:?}", rep);
    }
}

/// With `|I| = 2` the partition upper bound `‖T₁‖_* + ‖T₂‖_*` is attained.
#[test]
fn partition_bound_is_attained() {
    let modes = ModeSet::from_modes(&[0, 1]);
    for seed in 0..4 {
        let (family, t, s) = sample_pair(&[2, 2, 2], &[1, 1, 1], modes, seed).unwrap();
        let rep = check_nuclear_decomp(&t, &s, &family, modes, &DecompOptions::default()).unwrap();
        assert_eq!(rep.verdict, Verdict::Pass, "seed {seed}: {rep:?}");
    }
}

#[test]
fn one_shared_mode_breaks_additivity() {
    // T = e1⊗e1 and S = ε e1⊗e2 differ in one mode only; ‖T+S‖_* = √(1+ε²)
    // falls below ‖T‖_* + α‖S‖_* for α = ½ at every small ε.
    for eps in [0.1, 0.01] {
        let t = DenseTensor::new(vec![2, 2], vec![1.0, 0.0, 0.0, 0.0]).unwrap();
        let s = DenseTensor::new(vec![2, 2], vec![0.0, eps, 0.0, 0.0]).unwrap();
        let sum = mid(&t.add(&s).unwrap());
        assert!((sum - (1.0 + eps * eps).sqrt()).abs() < 1e-8, "{sum}");
        assert!(sum < mid(&t) + 0.5 * mid(&s), "ε = {eps}");
    }
}

#[test]
fn adding_a_nonorthogonal_atom_can_shrink_the_nuclear_norm() {
    let case = gallery("limitation", None).unwrap();
    let opts = NuclearOptions { tol: 1e-7, ..NuclearOptions::default() };
    let sum = nuclear_sandwich(case.tensor("T+S").unwrap(), &opts, None).unwrap();
    let s = nuclear_sandwich(case.tensor("S").unwrap(), &opts, None).unwrap();
    let budget = 0.5 * (sum.gap + s.gap);
    assert!(sum.upper < s.lower + budget, "‖T+S‖_* ≤ {} vs ‖S‖_* ≥ {}", sum.upper, s.lower);
    assert!((sum.lower - 3.078).abs() < 0.02 && (s.lower - 3.162).abs() < 0.02);
}
