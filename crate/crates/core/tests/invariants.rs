use num_complex::Complex64;
use proptest::prelude::*;

use halfwave::ensemble::{random_spectrum, CounterRng};
use halfwave::nonlinearity::power_nonlinearity_spectrum;
use halfwave::norms::{energy_norm, l2_norm, linf_norm, sobolev_norm, wiener_norm};
use halfwave::propagator::apply_linear_flow;
use halfwave::{make_grid, Field, GridSpec, Spectrum};

fn grid() -> GridSpec {
    make_grid(16, 8, 3.0, 2.0).unwrap()
}

fn field_strategy() -> impl Strategy<Value = Field> {
    let g = grid();
    prop::collection::vec((-2.0..2.0f64, -2.0..2.0f64), g.len()).prop_map(move |v| {
        Field::new(
            g,
            v.into_iter()
                .map(|(re, im)| Complex64::new(re, im))
                .collect(),
        )
        .unwrap()
    })
}

fn spectrum_strategy() -> impl Strategy<Value = Spectrum> {
    (any::<u64>(), 0i64..=3).prop_map(|(seed, band)| {
        random_spectrum(&grid(), band, &mut CounterRng::new(seed, 0)).unwrap()
    })
}

fn max_diff(a: &[Complex64], b: &[Complex64]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(x, y)| (x - y).norm())
        .fold(0.0, f64::max)
}

proptest! {
    #[test]
    fn transform_round_trip(f in field_strategy()) {
        let back = f.to_spectrum().unwrap().to_field().unwrap();
        prop_assert!(max_diff(f.values(), back.values()) <= 1e-12);
    }

    #[test]
    fn parseval(f in field_strategy()) {
        let s = f.to_spectrum().unwrap();
        let from_coeffs = (f.grid().area() * s.coeffs().iter().map(|c| c.norm_sqr()).sum::<f64>()).sqrt();
        let direct = l2_norm(&f).unwrap();
        prop_assert!((from_coeffs - direct).abs() <= 1e-12 * direct.max(1.0));
        // H^{0,0} is L^2
        prop_assert!((sobolev_norm(&s, 0.0, 0.0).unwrap() - direct).abs() <= 1e-12 * direct.max(1.0));
    }

    #[test]
    fn transform_is_linear(f in field_strategy(), g in field_strategy(), a in -3.0..3.0f64) {
        let alpha = Complex64::new(a, 0.5);
        let combo = Field::new(
            *f.grid(),
            f.values().iter().zip(g.values()).map(|(x, y)| alpha * x + y).collect(),
        ).unwrap();
        let lhs = combo.to_spectrum().unwrap();
        let rhs = f.to_spectrum().unwrap().scaled(alpha).axpy(Complex64::new(1.0, 0.0), &g.to_spectrum().unwrap()).unwrap();
        prop_assert!(max_diff(lhs.coeffs(), rhs.coeffs()) <= 1e-12);
    }

    #[test]
    fn sup_norm_below_wiener(s in spectrum_strategy()) {
        let linf = linf_norm(&s.to_field().unwrap()).unwrap();
        prop_assert!(linf <= wiener_norm(&s).unwrap() * (1.0 + 1e-12) + 1e-15);
    }

    #[test]
    fn norms_are_homogeneous(s in spectrum_strategy(), a in -5.0..5.0f64, b in -5.0..5.0f64) {
        let alpha = Complex64::new(a, b);
        let t = s.scaled(alpha);
        let scale = alpha.norm();
        for (x, y) in [
            (energy_norm(&t).unwrap(), energy_norm(&s).unwrap()),
            (wiener_norm(&t).unwrap(), wiener_norm(&s).unwrap()),
            (sobolev_norm(&t, 1.0, 0.5).unwrap(), sobolev_norm(&s, 1.0, 0.5).unwrap()),
        ] {
            prop_assert!((x - scale * y).abs() <= 1e-12 * (scale * y).max(1e-300));
        }
    }

    #[test]
    fn nonlinearity_is_gauge_covariant(s in spectrum_strategy(), theta in 0.0..6.3f64, k in 1u32..=2) {
        let phase = Complex64::from_polar(1.0, theta);
        let lhs = power_nonlinearity_spectrum(&s.scaled(phase), k, true).unwrap();
        let rhs = power_nonlinearity_spectrum(&s, k, true).unwrap().scaled(phase);
        prop_assert!(max_diff(lhs.coeffs(), rhs.coeffs()) <= 1e-12);
    }

    #[test]
    fn wiener_algebra_bound(s in spectrum_strategy(), k in 1u32..=2) {
        let n = power_nonlinearity_spectrum(&s, k, true).unwrap();
        let w = wiener_norm(&s).unwrap();
        prop_assert!(wiener_norm(&n).unwrap() <= w.powi(2 * k as i32 + 1) * (1.0 + 1e-12) + 1e-15);
    }

    #[test]
    fn linear_flow_is_unitary_group(s in spectrum_strategy(), t1 in -10.0..10.0f64, t2 in -10.0..10.0f64) {
        let a = apply_linear_flow(&apply_linear_flow(&s, t1).unwrap(), t2).unwrap();
        let b = apply_linear_flow(&s, t1 + t2).unwrap();
        prop_assert!(max_diff(a.coeffs(), b.coeffs()) <= 1e-12);
        let e0 = energy_norm(&s).unwrap();
        prop_assert!((energy_norm(&a).unwrap() - e0).abs() <= 1e-12 * e0.max(1e-300));
        let back = apply_linear_flow(&a, -(t1 + t2)).unwrap();
        prop_assert!(max_diff(back.coeffs(), s.coeffs()) <= 1e-12);
    }
}
