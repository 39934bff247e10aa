use nalgebra::{Matrix3, SymmetricEigen};

use qd_cavity::spectrum::{eigen_sweep, manifold_matrix, Convention, SweepParams};

fn params(g: f64, n: i64, binding: f64, two_level: bool) -> SweepParams {
    SweepParams {
        g,
        dipole_ratio: std::f64::consts::SQRT_2,
        n,
        binding,
        two_level,
        convention: Convention::Matrix,
    }
}

fn grid(a: f64, b: f64, count: usize) -> Vec<f64> {
    (0..count)
        .map(|k| a + (b - a) * k as f64 / (count - 1) as f64)
        .collect()
}

#[test]
fn zero_coupling_gives_bare_levels() {
    let p = params(0.0, 10, 3.0, false);
    for row in eigen_sweep(&p, &grid(-10.0, 10.0, 81)).unwrap() {
        let d = row.delta_oe;
        let mut bare = [0.0, d, 2.0 * d + 3.0];
        bare.sort_by(f64::total_cmp);
        let mut got = row.omega;
        got.sort_by(f64::total_cmp);
        for k in 0..3 {
            assert!((got[k] - bare[k]).abs() < 1e-12, "{d}: {got:?} vs {bare:?}");
        }
    }
}

#[test]
fn two_level_gap_at_resonance() {
    let p = params(1.0, 10, 0.0, true);
    let rows = eigen_sweep(&p, &grid(-10.0, 10.0, 401)).unwrap();
    let row = rows.iter().find(|r| r.delta_oe == 0.0).unwrap();
    let mut w = row.shifted;
    w.sort_by(f64::total_cmp);
    assert!((w[2] - w[0] - 2.0 * 11f64.sqrt()).abs() < 1e-12);
    assert_eq!(row.omega.iter().filter(|x| **x == 0.0).count(), 1);
}

#[test]
fn sweep_matches_eigensolver_and_branches_are_continuous() {
    let p = params(1.0, 10, 5.0, false);
    let rows = eigen_sweep(&p, &grid(-15.0, 10.0, 501)).unwrap();
    for r in &rows {
        let (d, c) = p.manifold_at(r.delta_oe).unwrap();
        let m = manifold_matrix(&d, &c);
        let e = SymmetricEigen::new(Matrix3::from_fn(|i, j| m[i][j]));
        let mut want = [e.eigenvalues[0], e.eigenvalues[1], e.eigenvalues[2]];
        want.sort_by(f64::total_cmp);
        let mut got = r.omega;
        got.sort_by(f64::total_cmp);
        for k in 0..3 {
            assert!((got[k] - want[k]).abs() < 1e-10, "{}: {got:?} {want:?}", r.delta_oe);
        }
        let sum: f64 = r.shifted.iter().sum();
        assert!(sum.abs() < 1e-10);
    }
    // each branch moves by at most a few grid steps between neighbours
    let step = 25.0 / 500.0;
    for w in rows.windows(2) {
        for k in 0..3 {
            assert!((w[1].omega[k] - w[0].omega[k]).abs() < 3.0 * step, "jump at {}", w[1].delta_oe);
        }
    }
}

/// Near Δ_oe = 0 with a far-detuned biexciton, the |0⟩–|e⟩ splitting is
/// 2 g_oe up to the level shift from the third state, of relative order
/// (g_eb / Δ_ob)².
#[test]
fn resonance_gap_within_perturbative_bound() {
    for binding in [20.0, 50.0, 100.0] {
        let p = params(1.0, 10, binding, false);
        let rows = eigen_sweep(&p, &grid(-1.0, 1.0, 2001)).unwrap();
        let (_, c) = p.manifold_at(0.0).unwrap();
        let gap = rows
            .iter()
            .map(|r| {
                let mut w = r.omega;
                w.sort_by(f64::total_cmp);
                w[1] - w[0]
            })
            .fold(f64::INFINITY, f64::min);
        let bound = 2.0 * c.oe * (c.eb / binding).powi(2);
        assert!((gap - 2.0 * c.oe).abs() <= bound, "binding {binding}: gap {gap}, 2g_oe {}", 2.0 * c.oe);
    }
}
