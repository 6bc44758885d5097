use proptest::prelude::*;
use weyl_lab::discretization::{build, GridSpec};
use weyl_lab::eigen::{self, Method};
use weyl_lab::potentials::{make_power, Potential};
use weyl_lab::spectral::Spectrum;

fn dense_oracle(m: &weyl_lab::discretization::SparseSymmetric, k: usize) -> Vec<f64> {
    let mut all: Vec<f64> = m
        .to_dense()
        .symmetric_eigen()
        .eigenvalues
        .iter()
        .copied()
        .collect();
    all.sort_by(f64::total_cmp);
    all.truncate(k);
    all
}

fn quadratic_plus(c: f64) -> Potential {
    Potential::custom(
        1,
        move |x| x[0] * x[0] + c * x[0].abs(),
        move |r| r * r,
        0.0,
        "x^2 + c|x|",
    )
}

#[test]
fn tridiagonal_solver_matches_dense_oracle() {
    let v = make_power(1, 2.0).unwrap();
    let h = build(&v, GridSpec::new(1, 8.0, 300).unwrap(), 1.0).unwrap();
    let r = eigen::lowest(&h.matrix, 40).unwrap();
    assert_eq!(r.method, Method::Tridiagonal);
    for (a, b) in r.values.iter().zip(dense_oracle(&h.matrix, 40)) {
        assert!((a - b).abs() <= 1e-9 * b.abs().max(1.0), "{a} vs {b}");
    }
}

#[test]
fn chebyshev_matches_dense_oracle_in_2d() {
    let v = make_power(2, 2.0).unwrap();
    let h = build(&v, GridSpec::new(2, 5.0, 40).unwrap(), 1.0).unwrap();
    let opts = eigen::ChebyshevOptions::default();
    let r = eigen::chebyshev_lowest(&h.matrix, 25, &opts).unwrap();
    for (a, b) in r.values.iter().zip(dense_oracle(&h.matrix, 25)) {
        assert!((a - b).abs() <= 1e-7 * b.abs().max(1.0), "{a} vs {b}");
    }
}

fn kinetic_parts(v: &Potential, grid: GridSpec, hbar: f64) -> Vec<Vec<(usize, f64)>> {
    let m = build(v, grid, hbar).unwrap().matrix;
    let n = grid.points_per_axis;
    (0..m.dim())
        .map(|i| {
            let pot = v.eval(&[grid.coord(i % n), grid.coord(i / n)]);
            m.row(i)
                .map(|(c, x)| (c, if c == i { x - pot } else { x }))
                .collect()
        })
        .collect()
}

#[test]
fn hbar_scaling_is_exact_for_powers_of_two() {
    let grid = GridSpec::new(2, 4.0, 20).unwrap();
    let zero = Potential::custom(2, |_| 0.0, |_| 0.0, 0.0, "0");
    let a = kinetic_parts(&zero, grid, 0.25);
    let b = kinetic_parts(&zero, grid, 0.5);
    for (ra, rb) in a.iter().zip(&b) {
        assert_eq!(ra.len(), rb.len());
        for (&(ca, va), &(cb, vb)) in ra.iter().zip(rb) {
            assert_eq!(ca, cb);
            assert_eq!(4.0 * va, vb);
        }
    }
    // with a potential the diagonal keeps V, so only roundoff separates the parts
    let v = make_power(2, 2.0).unwrap();
    let a = kinetic_parts(&v, grid, 0.25);
    let b = kinetic_parts(&v, grid, 0.5);
    for (ra, rb) in a.iter().zip(&b) {
        for (&(_, va), &(_, vb)) in ra.iter().zip(rb) {
            assert!((4.0 * va - vb).abs() <= 1e-12 * vb.abs());
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    // V1 <= V2 pointwise gives lambda_k(H1) <= lambda_k(H2) for every k.
    #[test]
    fn eigenvalues_are_monotone_in_the_potential(c1 in 0.0f64..3.0, dc in 0.0f64..3.0, n in 60usize..160) {
        let grid = GridSpec::new(1, 6.0, n).unwrap();
        let lo = build(&quadratic_plus(c1), grid, 1.0).unwrap();
        let hi = build(&quadratic_plus(c1 + dc), grid, 1.0).unwrap();
        let k = n / 4;
        let a = eigen::lowest(&lo.matrix, k).unwrap().values;
        let b = eigen::lowest(&hi.matrix, k).unwrap().values;
        let oracle = dense_oracle(&lo.matrix, k);
        for i in 0..k {
            prop_assert!(a[i] <= b[i] + 1e-9 * b[i].abs().max(1.0));
            prop_assert!((a[i] - oracle[i]).abs() <= 1e-9 * oracle[i].abs().max(1.0));
        }
    }

    #[test]
    fn heat_trace_is_log_convex(hbar in 0.05f64..1.0, t in 0.2f64..4.0) {
        let s = Spectrum::harmonic_1d(hbar, 400.0).unwrap();
        let h = 0.25 * t;
        let (l0, _) = s.heat_trace(t - h).unwrap();
        let (l1, _) = s.heat_trace(t).unwrap();
        let (l2, _) = s.heat_trace(t + h).unwrap();
        prop_assert!(l1 * l1 <= l0 * l2 * (1.0 + 1e-12));
        prop_assert!(l0 >= l1 && l1 >= l2);
    }

    #[test]
    fn counting_is_additive(vals in prop::collection::vec(0.0f64..100.0, 1..80), cuts in prop::collection::vec(0.0f64..100.0, 3)) {
        let mut vals = vals;
        // integer-valued points so the cut points can land on eigenvalues
        for v in &mut vals { *v = v.round(); }
        // pin the trusted window above every cut
        vals.push(100.0);
        let mut c: Vec<f64> = cuts.iter().map(|x| x.round()).collect();
        c.sort_by(f64::total_cmp);
        prop_assume!(c[0] < c[1] && c[1] < c[2]);
        let s = Spectrum::from_eigenvalues(vals.clone(), 1.0).unwrap();
        let at_b = vals.iter().filter(|&&v| v == c[1]).count();
        let whole = s.counting_interval(c[0], c[2]).unwrap();
        let parts = s.counting_interval(c[0], c[1]).unwrap() + at_b + s.counting_interval(c[1], c[2]).unwrap();
        prop_assert_eq!(whole, parts);
        let below = s.counting(c[2]).unwrap();
        prop_assert_eq!(below, vals.iter().filter(|&&v| v < c[2]).count());
    }
}
