use birkhoff::fourier_circle::{analyze, grid_nodes, synthesize};
use birkhoff::{CMat64, CauchySide, Complex64, Loop64, Route};
use proptest::prelude::*;

fn complex() -> impl Strategy<Value = Complex64> {
    (-1.0..1.0f64, -1.0..1.0f64).prop_map(|(a, b)| Complex64::new(a, b))
}

/// Random 2×2 loop with cutoff `m` and geometrically decaying modes.
fn band_limited(m: usize) -> impl Strategy<Value = Loop64> {
    proptest::collection::vec(complex(), 4 * (2 * m + 1)).prop_map(move |v| {
        let coeffs = v
            .chunks(4)
            .enumerate()
            .map(|(i, c)| {
                let k = i as i64 - m as i64;
                CMat64::from_fn(2, |i, j| c[2 * i + j]).scale_real(0.7f64.powi(k.abs() as i32))
            })
            .collect();
        Loop64::from_coefficients(m, coeffs).unwrap()
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(100))]

    #[test]
    fn plemelj_jump_is_identity(f in band_limited(8)) {
        let plus = f.cauchy_project(CauchySide::Plus);
        let minus = f.cauchy_project(CauchySide::Minus);
        let jump = plus.lin_comb(Complex64::new(1.0, 0.0), &minus, Complex64::new(-1.0, 0.0)).unwrap();
        prop_assert_eq!(jump.coeffs(), f.coeffs());
    }

    #[test]
    fn hilbert_recombines_projectors(f in band_limited(6)) {
        // C+ = ½(I - H)
        let h = f.hilbert();
        let half = Complex64::new(0.5, 0.0);
        let c = f.lin_comb(half, &h, -half).unwrap();
        prop_assert!(c.coeff_distance(&f.cauchy_project(CauchySide::Plus)) < 1e-15);
    }

    #[test]
    fn round_trip(f in band_limited(10)) {
        let back = Loop64::from_samples(f.samples(), f.cutoff()).unwrap();
        let scale = f.coeffs().iter().map(CMat64::norm_max).fold(0.0, f64::max);
        prop_assert!(back.coeff_distance(&f) < 1e-13 * scale.max(1.0));
    }

    #[test]
    fn contour_integral_of_derivative_vanishes(f in band_limited(7)) {
        prop_assert!(f.derivative().contour_integral().norm_max() < 1e-14);
    }

    #[test]
    fn product_rule(f in band_limited(5), g in band_limited(5)) {
        let fg = f.multiply_exact(&g).unwrap();
        let lhs = fg.derivative();
        let a = f.derivative().multiply_exact(&g).unwrap();
        let b = f.multiply_exact(&g.derivative()).unwrap();
        let x = Complex64::from_polar(1.0, 0.37);
        let rhs = &a.eval(x) + &b.eval(x);
        prop_assert!((&lhs.eval(x) - &rhs).norm_max() < 1e-11);
    }

    #[test]
    fn cauchy_routes_agree_off_circle(f in band_limited(6), r in prop_oneof![0.0..0.3f64, 2.5..5.0f64], t in 0.0..std::f64::consts::TAU) {
        let x = Complex64::from_polar(r, t);
        let s = f.cauchy_eval(x, Route::Series).unwrap();
        let q = f.cauchy_eval(x, Route::Integral).unwrap();
        prop_assert!((&s - &q).norm_max() < 1e-10);
    }
}

#[test]
fn monomial_projector_table() {
    // residue calculus: (1/2πi)∮ ξ^k/(ξ-x) dξ is x^k inside for k >= 0,
    // -x^k outside for k < 0, and zero otherwise
    let m = 6;
    for k in -6..=6i64 {
        let f = Loop64::monomial(1, k, m).unwrap();
        for x in [Complex64::new(0.3, 0.2), Complex64::new(-0.5, 0.1), Complex64::new(2.0, -1.0), Complex64::new(0.0, 3.0)] {
            let got = f.cauchy_eval(x, Route::Series).unwrap()[(0, 0)];
            let expect = match (x.norm() < 1.0, k >= 0) {
                (true, true) => x.powi(k as i32),
                (false, false) => -x.powi(k as i32),
                _ => Complex64::new(0.0, 0.0),
            };
            assert!((got - expect).norm() < 1e-15 * (1.0 + expect.norm()), "k={k} x={x}");
        }
        let plus = f.cauchy_project(CauchySide::Plus);
        let minus = f.cauchy_project(CauchySide::Minus);
        let (p, q) = if k >= 0 { (1.0, 0.0) } else { (0.0, -1.0) };
        assert_eq!(plus.coeff(k)[(0, 0)], Complex64::new(p, 0.0));
        assert_eq!(minus.coeff(k)[(0, 0)], Complex64::new(q, 0.0));
    }
}

#[test]
fn analyze_synthesize_examples() {
    let beta: f64 = 0.3;
    let nodes = grid_nodes::<f64>(64);
    let samples: Vec<CMat64> = nodes.iter().map(|x| CMat64::scalar((x * beta).exp())).collect();
    let c = analyze(&samples, 16).unwrap();
    let mut fact = 1.0;
    for k in 0..=16usize {
        if k > 0 {
            fact *= k as f64;
        }
        assert!((c[16 + k][(0, 0)] - Complex64::new(beta.powi(k as i32) / fact, 0.0)).norm() < 1e-12);
    }
    let g = Loop64::from_fn(1, 24, |x| CMat64::scalar((x * 0.3 + x.inv() * 0.2).exp())).unwrap();
    let probe: Vec<Complex64> = (0..50).map(|j| Complex64::from_polar(1.0, 0.123 * j as f64)).collect();
    let vals = synthesize(g.coeffs(), 24, &probe).unwrap();
    for (x, v) in probe.iter().zip(vals) {
        assert!((v[(0, 0)] - (x * 0.3 + x.inv() * 0.2).exp()).norm() < 1e-12);
    }
}
