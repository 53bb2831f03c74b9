use faer::Mat;
use indexlab::c64;
use indexlab::cylinder::{build_t_phi, CylinderTruncation};
use indexlab::pairing::cocycle_identities;
use indexlab::toeplitz::{fredholm_index, toeplitz_section};
use indexlab::{TrigSymbol, TruncationPolicy};
use proptest::prelude::*;

fn max_abs(m: faer::MatRef<'_, c64>) -> f64 {
    let mut r = 0.0f64;
    for j in 0..m.ncols() {
        for i in 0..m.nrows() {
            r = r.max(m[(i, j)].norm());
        }
    }
    r
}

fn coeffs(max_degree: i64) -> impl Strategy<Value = Vec<(i64, c64)>> {
    prop::collection::btree_map(-max_degree..=max_degree, (-1.0f64..1.0, -1.0f64..1.0), 1..6)
        .prop_map(|m| m.into_iter().map(|(k, (re, im))| (k, c64::new(re, im))).collect())
}

/// `c z^k` plus a perturbation of sup norm below `|c| / 2`, so the winding is `k`.
fn dominated(k: i64) -> impl Strategy<Value = TrigSymbol> {
    prop::collection::btree_map(-3i64..=3, (-1.0f64..1.0, -1.0f64..1.0), 0..4).prop_map(move |mut m| {
        let total: f64 = m.values().map(|(a, b)| a.hypot(*b)).sum::<f64>().max(1.0);
        let lead = m.remove(&k).map_or(0.0, |(a, _)| a * 0.4 / total);
        let mut c: Vec<(i64, c64)> = m.into_iter().map(|(j, (a, b))| (j, c64::new(a, b) * (0.4 / total))).collect();
        c.push((k, c64::new(1.0 + lead.abs(), 0.0)));
        TrigSymbol::scalar(&c).unwrap()
    })
}

fn symbol_distance(a: &TrigSymbol, b: &TrigSymbol) -> f64 {
    let lo = a.modes().chain(b.modes()).min().unwrap_or(0);
    let hi = a.modes().chain(b.modes()).max().unwrap_or(0);
    (lo..=hi).map(|k| max_abs((a.coeff(k) - b.coeff(k)).as_ref())).fold(0.0, f64::max)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn fourier_round_trip(degree in 0i64..=64, c in coeffs(64), scale in 0.1f64..10.0) {
        let c: Vec<(i64, c64)> = c.into_iter().filter(|(k, _)| k.abs() <= degree).map(|(k, v)| (k, v * scale)).collect();
        let phi = TrigSymbol::scalar(&c).unwrap();
        let d = phi.degree();
        let back = TrigSymbol::analyze(&phi.sample(4 * d + 8), d).unwrap();
        prop_assert!(symbol_distance(&phi, &back) <= 1e-12 * scale.max(1.0) * 8.0);
    }

    #[test]
    fn inverse_is_two_sided(phi in (-3i64..=3).prop_flat_map(dominated)) {
        let psi = phi.invert(192, 1e-10).unwrap();
        prop_assert!(phi.inverse_residual(&psi, 512) <= 1e-10);
        prop_assert!(psi.inverse_residual(&phi, 512) <= 1e-10);
    }

    #[test]
    fn winding_is_homotopy_invariant(a in (-4i64..=4).prop_flat_map(dominated)) {
        let k_a = a.winding().unwrap();
        let target = TrigSymbol::monomial(k_a);
        for i in 0..=10 {
            let t = i as f64 / 10.0;
            let mid = a.scale(c64::new(1.0 - t, 0.0)).add(&target.scale(c64::new(t, 0.0))).unwrap();
            prop_assert_eq!(mid.winding().unwrap(), k_a);
        }
    }

    #[test]
    fn winding_is_additive(a in (-3i64..=3).prop_flat_map(dominated), b in (-3i64..=3).prop_flat_map(dominated)) {
        let ab = a.mul(&b).unwrap();
        prop_assert_eq!(ab.winding().unwrap(), a.winding().unwrap() + b.winding().unwrap());
    }

    /// Kernel vectors of these symbols can decay slowly, so a couple of
    /// extra doublings beyond the default policy are allowed.
    #[test]
    fn toeplitz_index_is_minus_winding(phi in (-3i64..=3).prop_flat_map(dominated)) {
        let r = fredholm_index(&phi, &TruncationPolicy::default().with_max_attempts(6)).unwrap();
        prop_assert!(r.converged);
        prop_assert_eq!(r.index, -phi.winding().unwrap());
    }

    #[test]
    fn toeplitz_adjoint(c in coeffs(4), n in 4usize..20) {
        let phi = TrigSymbol::scalar(&c).unwrap();
        let a = toeplitz_section(&phi, n).unwrap().matrix;
        let b = toeplitz_section(&phi.adjoint(), n).unwrap().matrix;
        prop_assert!(max_abs((a.adjoint().data() - b.data()).as_ref()) <= 1e-14);
    }

    /// `T_{phi psi} - T_phi T_psi` is the Hankel product and vanishes when
    /// `phi` has no negative modes or `psi` has no positive ones.
    #[test]
    fn toeplitz_multiplicative_for_analytic_pairs(a in coeffs(3), b in coeffs(3), n in 8usize..24) {
        let phi = TrigSymbol::scalar(&a.iter().filter(|(k, _)| *k >= 0).copied().collect::<Vec<_>>()).unwrap();
        let psi = TrigSymbol::scalar(&b).unwrap();
        let prod = psi.mul(&phi).unwrap();
        let lhs = toeplitz_section(&prod, n).unwrap().matrix;
        let tp = toeplitz_section(&psi, n).unwrap().matrix.matmul(&toeplitz_section(&phi, n).unwrap().matrix).unwrap();
        let inner = n - 3;
        let diff = Mat::from_fn(inner, inner, |i, j| lhs.data()[(i, j)] - tp.data()[(i, j)]);
        prop_assert!(max_abs(diff.as_ref()) <= 1e-12);
    }

    #[test]
    fn cylinder_operator_adjoint(c in coeffs(2)) {
        let phi = TrigSymbol::scalar(&c).unwrap();
        let trunc = CylinderTruncation::for_symbol(&phi, 2, 6);
        let t = build_t_phi(&phi, trunc).unwrap().compressed();
        let s = build_t_phi(&phi.adjoint(), trunc).unwrap().compressed();
        prop_assert!(max_abs((t.adjoint().data() - s.data()).as_ref()) <= 1e-12);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(8))]

    #[test]
    fn cocycle_identities_hold(seed in any::<u64>(), n_max in 3i64..10) {
        let r = cocycle_identities(seed, n_max, 4).unwrap();
        prop_assert!(r.antisymmetry <= 1e-10);
        prop_assert!(r.hochschild <= 1e-10);
    }
}
