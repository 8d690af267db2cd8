//! Property tests for the analytic building blocks.

use num_complex::Complex;
use proptest::prelude::*;

use aasenv_core::geometry::{ArrayGeometry, SteeringConfig, TwoElementArray};
use aasenv_core::pattern::ElementPatternParams;
use aasenv_core::units::wrap_degrees;
use aasenv_core::waveform::PaModel;

proptest! {
    #[test]
    fn wrapped_degrees_stay_in_half_open_turn(deg in -1e6f64..1e6) {
        let w = wrap_degrees(deg);
        prop_assert!(w > -180.0 && w <= 180.0);
        // wrapping is idempotent
        prop_assert_eq!(w, wrap_degrees(w));
    }

    #[test]
    fn pattern_is_even_and_floored(
        phi in -720.0f64..720.0,
        g in -10.0f64..20.0,
        phi_3db in 10.0f64..160.0,
        a_m in 5.0f64..60.0,
    ) {
        let p = ElementPatternParams::new(g, phi_3db, a_m).unwrap();
        let lhs = p.element_gain_dbi(phi).unwrap();
        let rhs = p.element_gain_dbi(-phi).unwrap();
        prop_assert_eq!(lhs, rhs);
        prop_assert!(lhs <= g);
        prop_assert!(lhs >= g - a_m);
    }

    #[test]
    fn two_element_af_magnitude_is_bounded(
        phi in -180.0f64..180.0,
        delta_phi in -10.0f64..10.0,
        d in 0.05f64..3.0,
    ) {
        let arr = TwoElementArray::new(d).unwrap();
        let m = arr.af_magnitude(phi, delta_phi);
        prop_assert!((0.0..=2.0 + 1e-12).contains(&m));
        let c = arr.af_complex(phi, delta_phi).norm();
        prop_assert!((m - c).abs() < 1e-12);
    }

    #[test]
    fn phase_sweep_reaches_the_full_pair_gain(phi in -180.0f64..180.0) {
        // 0.5°-step sweep as in the envelope lemma
        let arr = TwoElementArray::<f64>::half_wave();
        let mut best: f64 = 0.0;
        for k in 0..720 {
            let dp = 2.0 * std::f64::consts::PI * k as f64 / 720.0;
            best = best.max(arr.af_magnitude(phi, dp));
        }
        prop_assert!((best - 2.0).abs() / 2.0 < 1e-4);
    }

    #[test]
    fn grid_af_never_exceeds_position_count(
        m in 1usize..9,
        n in 1usize..9,
        d_v in 0.1f64..2.0,
        d_h in 0.1f64..2.0,
        sv in -7.0f64..7.0,
        sh in -7.0f64..7.0,
        theta in 0.0f64..180.0,
        phi in -180.0f64..180.0,
    ) {
        let g = ArrayGeometry::new(m, n, d_v, d_h, 1).unwrap();
        let s = SteeringConfig::new(sv, sh).unwrap();
        prop_assert!(g.af(&s, theta, phi).norm() <= (m * n) as f64 + 1e-9);
    }

    #[test]
    fn steering_compensation_recovers_full_gain(
        m in 1usize..9,
        n in 1usize..9,
        d_v in 0.1f64..2.0,
        d_h in 0.1f64..2.0,
        theta0 in 0.0f64..180.0,
        phi0 in -180.0f64..180.0,
    ) {
        let g = ArrayGeometry::new(m, n, d_v, d_h, 2).unwrap();
        let s = g.compensate_steering(theta0, phi0);
        let af = g.af(&s, theta0, phi0).norm();
        let full = (m * n) as f64;
        prop_assert!((af - full).abs() / full < 1e-9, "af={} mn={}", af, full);
    }

    #[test]
    fn excitation_phase_commutes_with_cubic_pa(
        samples in prop::collection::vec((-1.0f64..1.0, -1.0f64..1.0), 1..64),
        alpha in -0.5f64..0.0,
        rot in -3.15f64..3.15,
    ) {
        let pa = PaModel::new(alpha, f64::NEG_INFINITY).unwrap();
        let x: Vec<Complex<f64>> = samples.iter().map(|&(r, i)| Complex::new(r, i)).collect();
        let phasor = Complex::from_polar(1.0, rot);
        let rotated: Vec<Complex<f64>> = x.iter().map(|&s| s * phasor).collect();
        let lhs = pa.noiseless_output(&rotated);
        let rhs: Vec<Complex<f64>> = pa.noiseless_output(&x).into_iter().map(|y| y * phasor).collect();
        for (a, b) in lhs.iter().zip(rhs.iter()) {
            prop_assert!((a - b).norm() <= 1e-13 * (1.0 + b.norm()));
        }
    }
}
