use nalgebra::{Matrix3, SymmetricEigen, Vector3};
use num_complex::Complex64 as C64;
use proptest::prelude::*;

use qd_cavity::dynamics::{coherent_weights, build_manifold, DressedSystem, ModelParams};
use qd_cavity::material::{bessel_root, spherical_bessel_j, LevelIndex};
use qd_cavity::observables::{excitation_number, inversions, photon_distribution};
use qd_cavity::oracle::{integrate_manifold, IntegratorConfig};
use qd_cavity::spectrum::{
    couplings, cubic_coefficients, manifold_matrix, solve_cubic, solve_cubic_closed_form,
    Convention, DetuningSet,
};

fn eigen(d: &DetuningSet, c: &qd_cavity::spectrum::CouplingPair) -> SymmetricEigen<f64, nalgebra::U3> {
    let m = manifold_matrix(d, c);
    SymmetricEigen::new(Matrix3::from_fn(|i, j| m[i][j]))
}

fn sorted(v: &Vector3<f64>) -> [f64; 3] {
    let mut w = [v[0], v[1], v[2]];
    w.sort_by(f64::total_cmp);
    w
}

/// c(t) via V e^{iΛt} Vᵀ applied to the rotating-frame state, then the
/// detuning phases put back.
fn spectral_amplitudes(
    d: &DetuningSet,
    c: &qd_cavity::spectrum::CouplingPair,
    init: [C64; 3],
    t: f64,
) -> [C64; 3] {
    let e = eigen(d, c);
    let mut out = [C64::default(); 3];
    for k in 0..3 {
        let v = e.eigenvectors.column(k);
        let proj: C64 = (0..3).map(|j| init[j] * v[j]).sum();
        let phase = C64::from_polar(1.0, e.eigenvalues[k] * t);
        for j in 0..3 {
            out[j] += proj * phase * v[j];
        }
    }
    [
        out[0],
        out[1] * C64::from_polar(1.0, -d.oe * t),
        out[2] * C64::from_polar(1.0, -d.ob * t),
    ]
}

fn state() -> impl Strategy<Value = [C64; 3]> {
    prop::array::uniform6(-1.0f64..1.0)
        .prop_filter("nonzero", |v| v.iter().any(|x| x.abs() > 1e-3))
        .prop_map(|v| {
            let s = [C64::new(v[0], v[1]), C64::new(v[2], v[3]), C64::new(v[4], v[5])];
            let n = s.iter().map(|c| c.norm_sqr()).sum::<f64>().sqrt();
            s.map(|c| c / n)
        })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(256))]

    #[test]
    fn cubic_roots_agree_with_eigensolver(
        delta in -10.0f64..10.0,
        binding in 0.0f64..10.0,
        n in 0i64..=30,
        g in 0.1f64..3.0,
        rb in 0.0f64..2.0,
    ) {
        let c = couplings(g, rb, n).unwrap();
        let d = DetuningSet::from_exciton(delta, binding);
        let coeffs = cubic_coefficients(&d, &c, Convention::Matrix);
        let trig = solve_cubic(&coeffs).unwrap();
        let closed = solve_cubic_closed_form(&coeffs).unwrap();
        let reference = sorted(&eigen(&d, &c).eigenvalues);
        let scale = coeffs.scale().max(1.0);
        prop_assert!(trig.vieta_error(&coeffs) <= 1e-9);
        for k in 0..3 {
            prop_assert!((trig.omega[k] - reference[k]).abs() <= 1e-10 * scale);
            prop_assert!((trig.omega[k] - closed.omega[k]).abs() <= 1e-8 * scale);
        }
        prop_assert!(trig.omega.windows(2).all(|w| w[0] <= w[1]));
        let shifted: f64 = trig.shifted().iter().sum();
        prop_assert!(shifted.abs() <= 1e-12 * scale);
    }

    #[test]
    fn amplitudes_match_spectral_propagator(
        delta in -10.0f64..10.0,
        binding in 0.0f64..10.0,
        n in 0i64..=30,
        init in state(),
        t in 0.0f64..50.0,
    ) {
        let params = ModelParams { delta_oe: delta, binding, ..ModelParams::default() };
        let m = build_manifold(&params, n, 1.0).unwrap().with_initial(init).unwrap();
        let got = m.amplitudes(t);
        let want = spectral_amplitudes(&m.detunings, &m.couplings, init, t);
        for k in 0..3 {
            prop_assert!((got[k] - want[k]).norm() <= 1e-9, "{k}: {} vs {}", got[k], want[k]);
        }
        let norm: f64 = got.iter().map(|c| c.norm_sqr()).sum();
        prop_assert!((norm - 1.0).abs() <= 1e-10);
    }

    #[test]
    fn excitation_number_and_normalization_conserved(
        nbar in 0.0f64..15.0,
        delta in -5.0f64..5.0,
        binding in 0.0f64..5.0,
        two_level in any::<bool>(),
        t in 0.0f64..60.0,
    ) {
        let params = ModelParams { delta_oe: delta, binding, two_level, ..ModelParams::default() };
        let field = coherent_weights(nbar, qd_cavity::dynamics::default_n_max(nbar)).unwrap();
        let tail = field.tail;
        let sys = DressedSystem::new(params, field).unwrap();
        let sets = sys.evolve(&[0.0, t]);
        let x: Vec<f64> = sets
            .iter()
            .map(|s| excitation_number(&photon_distribution(s), &inversions(s)))
            .collect();
        prop_assert!((x[0] - nbar).abs() <= 1e-8 * nbar.max(1.0));
        prop_assert!((x[1] - x[0]).abs() <= 1e-9 * nbar.max(1.0));
        let total = photon_distribution(&sets[1]).total();
        prop_assert!(total <= 1.0 + 1e-9 && total >= 1.0 - tail - 1e-9);
        if two_level {
            prop_assert!(inversions(&sets[1]).pb == 0.0);
        }
    }

    #[test]
    fn two_level_mode_has_zero_root(delta in -10.0f64..10.0, n in 0i64..=30, g in 0.1f64..3.0) {
        let params = ModelParams { g, delta_oe: delta, two_level: true, ..ModelParams::default() };
        let (d, c) = params.manifold_params(n).unwrap();
        prop_assert_eq!(c.eb, 0.0);
        prop_assert_eq!(d.ob, 0.0);
        let e = solve_cubic(&cubic_coefficients(&d, &c, Convention::Matrix)).unwrap();
        let smallest = e.omega.iter().fold(f64::INFINITY, |m, w| m.min(w.abs()));
        prop_assert_eq!(smallest, 0.0);
    }

    #[test]
    fn coherent_weights_account_for_all_probability(nbar in 0.0f64..40.0) {
        let f = coherent_weights(nbar, qd_cavity::dynamics::default_n_max(nbar)).unwrap();
        prop_assert!((f.retained() + f.tail - 1.0).abs() <= 1e-12);
        prop_assert!(f.tail <= 1e-10);
    }

    #[test]
    fn integrator_is_linear(
        delta in -5.0f64..5.0,
        binding in 0.0f64..5.0,
        n in 0i64..=10,
        init in state(),
        re in -2.0f64..2.0,
        im in -2.0f64..2.0,
    ) {
        let params = ModelParams { delta_oe: delta, binding, ..ModelParams::default() };
        let (d, c) = params.manifold_params(n).unwrap();
        let cfg = IntegratorConfig::resolving(&d, &c, 5.0, 0.01).record_every(50);
        let a = integrate_manifold(&d, &c, init, &cfg).unwrap();
        let s = C64::new(re, im);
        let b = integrate_manifold(&d, &c, init.map(|x| x * s), &cfg).unwrap();
        for (x, y) in a.states.iter().zip(&b.states) {
            for k in 0..3 {
                prop_assert!((x[k] * s - y[k]).norm() <= 1e-12 * s.norm().max(1.0));
            }
        }
    }

    #[test]
    fn bessel_roots_are_zeros(l in 0u32..5, m in 1u32..5) {
        let kappa = bessel_root(LevelIndex::new(m, l).unwrap()).unwrap();
        prop_assert!(spherical_bessel_j(l, kappa).abs() <= 1e-12);
        if m > 1 {
            let prev = bessel_root(LevelIndex::new(m - 1, l).unwrap()).unwrap();
            prop_assert!(prev < kappa);
        }
    }
}
