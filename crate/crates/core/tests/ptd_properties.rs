use num_complex::Complex64 as C64;
use polcbm::polsar::CoherencyMatrix;
use polcbm::ptd::{cloude_pottier, freeman_durden, huynen, huynen_to_t};
use polcbm::synthgen::sample_wishart;
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Wishart draw around a random full-rank base matrix.
fn random_coherency(seed: u64, looks: usize) -> CoherencyMatrix {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut base = CoherencyMatrix::zero();
    for _ in 0..3 {
        let k = polcbm::polsar::PauliVector(std::array::from_fn(|_| {
            C64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0))
        }));
        base = base + CoherencyMatrix::outer(&k);
    }
    sample_wishart(&base, looks, &mut rng).unwrap()
}

fn looks() -> impl Strategy<Value = usize> {
    prop_oneof![Just(1usize), Just(4), Just(8)]
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(300))]

    #[test]
    fn cloude_pottier_ranges(seed in any::<u64>(), l in looks()) {
        let t = random_coherency(seed, l);
        let cp = cloude_pottier(&t).unwrap();
        prop_assert!((0.0..=1.0).contains(&cp.entropy));
        prop_assert!((0.0..=1.0).contains(&cp.anisotropy));
        prop_assert!((0.0..=90.0).contains(&cp.alpha_bar));
        prop_assert!(cp.lambdas[0] >= cp.lambdas[1] && cp.lambdas[1] >= cp.lambdas[2] && cp.lambdas[2] >= 0.0);
        let sum: f64 = cp.lambdas.iter().sum();
        prop_assert!((sum - t.trace()).abs() <= 1e-9 * t.trace());
        prop_assert!((cp.probabilities.iter().sum::<f64>() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn cloude_pottier_is_scale_invariant(seed in any::<u64>(), l in looks(), s in 1e-3f64..1e3) {
        let t = random_coherency(seed, l);
        let a = cloude_pottier(&t).unwrap();
        let b = cloude_pottier(&t.scale(s)).unwrap();
        prop_assert!((a.entropy - b.entropy).abs() < 1e-9);
        prop_assert!((a.anisotropy - b.anisotropy).abs() < 1e-9);
        prop_assert!((a.alpha_bar - b.alpha_bar).abs() < 1e-7);
    }

    #[test]
    fn eigenpairs_reconstruct_the_matrix(seed in any::<u64>(), l in looks()) {
        let t = random_coherency(seed, l);
        let (vals, vecs) = t.eigen();
        let mut rebuilt = CoherencyMatrix::zero();
        for n in 0..3 {
            let v = polcbm::polsar::PauliVector([vecs[0][n], vecs[1][n], vecs[2][n]]);
            rebuilt = rebuilt + CoherencyMatrix::outer(&v).scale(vals[n]);
        }
        prop_assert!(rebuilt.frobenius_distance(&t) <= 1e-10 * t.frobenius_norm());
    }

    #[test]
    fn huynen_round_trip(seed in any::<u64>(), l in looks()) {
        let t = random_coherency(seed, l);
        let back = huynen_to_t(&huynen(&t));
        prop_assert!(back.frobenius_distance(&t) <= 1e-12 * t.frobenius_norm());
    }

    #[test]
    fn freeman_durden_conserves_span_when_unclamped(seed in any::<u64>(), l in looks()) {
        let d = random_coherency(seed, l).diagnostics();
        let fd = freeman_durden(&d);
        prop_assert!(fd.ps >= 0.0 && fd.pd >= 0.0 && fd.pv >= 0.0);
        if !fd.clamped {
            prop_assert!((fd.total() - d.span()).abs() <= 1e-6 * d.span());
        }
    }

    #[test]
    fn freeman_durden_fixes_one_parameter_per_branch(seed in any::<u64>(), l in looks()) {
        let d = random_coherency(seed, l).diagnostics();
        let fd = freeman_durden(&d);
        let c_re = d.c_hhvv.re - d.p_hv;
        if c_re >= 0.0 {
            prop_assert_eq!(fd.alpha, C64::new(-1.0, 0.0));
        } else {
            prop_assert_eq!(fd.beta, C64::new(1.0, 0.0));
        }
    }
}

#[test]
fn degree_of_polarization_limits() {
    let pure = cloude_pottier(&CoherencyMatrix::from_diag([2.0, 0.0, 0.0])).unwrap();
    assert!((pure.degree_of_polarization() - 1.0).abs() < 1e-12);
    let random = cloude_pottier(&CoherencyMatrix::from_diag([1.0, 1.0, 1.0])).unwrap();
    assert!(random.degree_of_polarization().abs() < 1e-12);
}
