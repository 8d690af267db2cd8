//! Array-factor geometry: the two-element reference array and the M×N grid.
//!
//! Spacings are stored in wavelengths, which keeps the carrier frequency out
//! of the geometry entirely. Element indexing starts at (m, n) = (0, 0).

use std::error::Error;
use std::fmt;

use num_complex::Complex;

use crate::scalar::Scalar;
use crate::units::{wrap_degrees, wrap_radians};

/// Errors from geometry construction.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum GeometryError {
    InvalidParameter(&'static str),
}

impl fmt::Display for GeometryError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            GeometryError::InvalidParameter(what) => {
                write!(f, "invalid geometry parameter: {what}")
            }
        }
    }
}

impl Error for GeometryError {}

/// Two identical radiators on the y-axis separated by `spacing` wavelengths.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TwoElementArray<T> {
    spacing_wavelengths: T,
}

impl<T: Scalar> TwoElementArray<T> {
    pub fn new(spacing_wavelengths: T) -> Result<Self, GeometryError> {
        if !(spacing_wavelengths.is_finite() && spacing_wavelengths > T::zero()) {
            return Err(GeometryError::InvalidParameter(
                "spacing_wavelengths must be > 0",
            ));
        }
        Ok(Self {
            spacing_wavelengths,
        })
    }

    /// The standard half-wavelength spacing.
    pub fn half_wave() -> Self {
        Self {
            spacing_wavelengths: T::of(0.5),
        }
    }

    pub fn spacing_wavelengths(&self) -> T {
        self.spacing_wavelengths
    }

    /// Geometrical phase term `k·d·sin φ = 2π·(d/λ)·sin φ` in radians.
    pub fn geometric_phase_rad(&self, phi_deg: T) -> T {
        let phi = wrap_degrees(phi_deg).to_radians();
        T::of(2.0) * T::PI() * self.spacing_wavelengths * phi.sin()
    }

    /// Complex array factor `1 + e^{j(ψ(φ) + ΔΦ)}`.
    pub fn af_complex(&self, phi_deg: T, delta_phi_rad: T) -> Complex<T> {
        let arg = self.geometric_phase_rad(phi_deg) + delta_phi_rad;
        Complex::new(T::one(), T::zero()) + Complex::from_polar(T::one(), arg)
    }

    /// Array factor magnitude `2·|cos(π·(d/λ)·sin φ + ΔΦ/2)|`, in [0, 2].
    pub fn af_magnitude(&self, phi_deg: T, delta_phi_rad: T) -> T {
        let phi = wrap_degrees(phi_deg).to_radians();
        let arg = T::PI() * self.spacing_wavelengths * phi.sin() + delta_phi_rad / T::of(2.0);
        T::of(2.0) * arg.cos().abs()
    }
}

/// M×N grid of sub-arrays with per-chain phase control.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ArrayGeometry<T> {
    rows_m: usize,
    cols_n: usize,
    d_v_wavelengths: T,
    d_h_wavelengths: T,
    polarizations: u8,
}

impl<T: Scalar> ArrayGeometry<T> {
    pub fn new(
        rows_m: usize,
        cols_n: usize,
        d_v_wavelengths: T,
        d_h_wavelengths: T,
        polarizations: u8,
    ) -> Result<Self, GeometryError> {
        if rows_m < 1 || cols_n < 1 {
            return Err(GeometryError::InvalidParameter("M and N must be >= 1"));
        }
        if !(d_v_wavelengths.is_finite() && d_v_wavelengths > T::zero())
            || !(d_h_wavelengths.is_finite() && d_h_wavelengths > T::zero())
        {
            return Err(GeometryError::InvalidParameter("spacings must be > 0"));
        }
        if !(polarizations == 1 || polarizations == 2) {
            return Err(GeometryError::InvalidParameter(
                "polarizations must be 1 or 2",
            ));
        }
        Ok(Self {
            rows_m,
            cols_n,
            d_v_wavelengths,
            d_h_wavelengths,
            polarizations,
        })
    }

    pub fn rows_m(&self) -> usize {
        self.rows_m
    }

    pub fn cols_n(&self) -> usize {
        self.cols_n
    }

    pub fn d_v_wavelengths(&self) -> T {
        self.d_v_wavelengths
    }

    pub fn d_h_wavelengths(&self) -> T {
        self.d_h_wavelengths
    }

    pub fn polarizations(&self) -> u8 {
        self.polarizations
    }

    /// Number of grid positions M·N.
    pub fn num_positions(&self) -> usize {
        self.rows_m * self.cols_n
    }

    /// Total RF chains: polarizations · M · N.
    pub fn rf_chains(&self) -> usize {
        self.polarizations as usize * self.num_positions()
    }

    /// Array factor `Σ_m Σ_n w_{m,n} v_{m,n}(θ, φ)` with unit-magnitude
    /// weights `w_{m,n} = e^{j(mΔΦ_V + nΔΦ_H)}`. `|result| <= M·N`.
    pub fn af(&self, steering: &SteeringConfig<T>, theta_deg: T, phi_deg: T) -> Complex<T> {
        let theta = theta_deg.to_radians();
        let phi = wrap_degrees(phi_deg).to_radians();
        let two_pi = T::of(2.0) * T::PI();
        let row_phase = steering.delta_phi_v_rad() + two_pi * self.d_v_wavelengths * theta.cos();
        let col_phase =
            steering.delta_phi_h_rad() + two_pi * self.d_h_wavelengths * theta.sin() * phi.sin();
        let mut sum = Complex::new(T::zero(), T::zero());
        for m in 0..self.rows_m {
            for n in 0..self.cols_n {
                let arg = T::of(m as f64) * row_phase + T::of(n as f64) * col_phase;
                sum = sum + Complex::from_polar(T::one(), arg);
            }
        }
        sum
    }

    /// Phase gradients that cancel the geometrical phase toward (θ₀, φ₀),
    /// making all M·N phasors add constructively there.
    pub fn compensate_steering(&self, theta0_deg: T, phi0_deg: T) -> SteeringConfig<T> {
        let theta0 = theta0_deg.to_radians();
        let phi0 = wrap_degrees(phi0_deg).to_radians();
        let two_pi = T::of(2.0) * T::PI();
        let v = -two_pi * self.d_v_wavelengths * theta0.cos();
        let h = -two_pi * self.d_h_wavelengths * theta0.sin() * phi0.sin();
        SteeringConfig::new(v, h).expect("compensation phases are finite")
    }
}

/// Per-row and per-column excitation phase steps, stored wrapped to (-π, π].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SteeringConfig<T> {
    delta_phi_v_rad: T,
    delta_phi_h_rad: T,
}

impl<T: Scalar> SteeringConfig<T> {
    pub fn new(delta_phi_v_rad: T, delta_phi_h_rad: T) -> Result<Self, GeometryError> {
        if !delta_phi_v_rad.is_finite() || !delta_phi_h_rad.is_finite() {
            return Err(GeometryError::InvalidParameter(
                "steering phases must be finite",
            ));
        }
        Ok(Self {
            delta_phi_v_rad: wrap_radians(delta_phi_v_rad),
            delta_phi_h_rad: wrap_radians(delta_phi_h_rad),
        })
    }

    /// No steering: broadside excitation.
    pub fn boresight() -> Self {
        Self {
            delta_phi_v_rad: T::zero(),
            delta_phi_h_rad: T::zero(),
        }
    }

    pub fn delta_phi_v_rad(&self) -> T {
        self.delta_phi_v_rad
    }

    pub fn delta_phi_h_rad(&self) -> T {
        self.delta_phi_h_rad
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    #[test]
    fn geometric_phase_reference_values() {
        let arr = TwoElementArray::<f64>::half_wave();
        assert_eq!(arr.geometric_phase_rad(0.0), 0.0);
        assert!((arr.geometric_phase_rad(90.0) - PI).abs() < 1e-12);
        assert!((arr.geometric_phase_rad(30.0) - PI / 2.0).abs() < 1e-12);
    }

    #[test]
    fn af_magnitude_reference_values() {
        let arr = TwoElementArray::<f64>::half_wave();
        assert!((arr.af_magnitude(0.0, 0.0) - 2.0).abs() < 1e-12);
        // cos(π/2) = 0: array null at endfire
        assert!(arr.af_magnitude(90.0, 0.0).abs() < 1e-12);
    }

    #[test]
    fn af_complex_matches_af_magnitude() {
        let arr = TwoElementArray::<f64>::new(0.7).unwrap();
        let mut phi = -180.0;
        while phi <= 180.0 {
            for k in 0..16 {
                let dp = 2.0 * PI * k as f64 / 16.0;
                let m = arr.af_complex(phi, dp).norm();
                assert!((m - arr.af_magnitude(phi, dp)).abs() < 1e-12);
            }
            phi += 7.0;
        }
    }

    #[test]
    fn envelope_lemma_on_quarter_degree_grid() {
        // max over a 0.5°-step ΔΦ sweep reaches 2 for every φ
        let arr = TwoElementArray::<f64>::half_wave();
        let steps = 720;
        let mut phi = -180.0;
        while phi <= 180.0 {
            let mut best: f64 = 0.0;
            for k in 0..steps {
                let dp = 2.0 * PI * k as f64 / steps as f64;
                best = best.max(arr.af_magnitude(phi, dp));
            }
            assert!((best - 2.0).abs() / 2.0 < 1e-4, "phi={phi} best={best}");
            phi += 0.25;
        }
    }

    #[test]
    fn af_magnitude_is_two_pi_periodic_in_delta_phi() {
        let arr = TwoElementArray::<f64>::half_wave();
        for phi in [-170.0, -31.0, 0.0, 12.5, 88.0] {
            for dp in [-2.0, 0.0, 1.3, 3.0] {
                let a = arr.af_magnitude(phi, dp);
                let b = arr.af_magnitude(phi, dp + 2.0 * PI);
                assert!((a - b).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn single_position_af_is_unity() {
        let g = ArrayGeometry::<f64>::new(1, 1, 0.5, 0.5, 1).unwrap();
        let s = SteeringConfig::new(1.0, -2.0).unwrap();
        let af = g.af(&s, 37.0, -121.0);
        assert!((af.re - 1.0).abs() < 1e-12 && af.im.abs() < 1e-12);
    }

    #[test]
    fn compensated_af_reaches_mn() {
        let g = ArrayGeometry::<f64>::new(8, 2, 0.5, 0.5, 2).unwrap();
        let s = g.compensate_steering(75.0, 20.0);
        let af = g.af(&s, 75.0, 20.0);
        assert!((af.norm() - 16.0).abs() < 1e-9);
        assert!(af.im.abs() < 1e-9);
    }

    #[test]
    fn horizontal_cut_keeps_rows_cophased() {
        // cos θ = 0 at θ = 90°: vertical spacing does not matter
        let g = ArrayGeometry::<f64>::new(2, 1, 0.5, 0.5, 1).unwrap();
        let s = SteeringConfig::boresight();
        for phi in [-60.0, 0.0, 45.0] {
            let af = g.af(&s, 90.0, phi);
            assert!((af.norm() - 2.0).abs() < 1e-12, "phi={phi}");
        }
    }

    #[test]
    fn compensation_reference_values() {
        let g = ArrayGeometry::<f64>::new(4, 4, 0.5, 0.5, 1).unwrap();
        let s = g.compensate_steering(90.0, 0.0);
        assert!(s.delta_phi_v_rad().abs() < 1e-12);
        assert!(s.delta_phi_h_rad().abs() < 1e-12);

        let s = g.compensate_steering(90.0, 30.0);
        assert!((s.delta_phi_h_rad() + PI / 2.0).abs() < 1e-12);

        let g = ArrayGeometry::<f64>::new(4, 4, 0.7, 0.5, 1).unwrap();
        let s = g.compensate_steering(90.0, 10.0);
        assert!(s.delta_phi_v_rad().abs() < 1e-12);
    }

    #[test]
    fn af_bound_holds_for_random_samples() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(7);
        for _ in 0..200 {
            let m = rng.random_range(1..=8);
            let n = rng.random_range(1..=8);
            let g = ArrayGeometry::<f64>::new(
                m,
                n,
                rng.random_range(0.1..2.0),
                rng.random_range(0.1..2.0),
                1,
            )
            .unwrap();
            let s =
                SteeringConfig::new(rng.random_range(-10.0..10.0), rng.random_range(-10.0..10.0))
                    .unwrap();
            let af = g.af(
                &s,
                rng.random_range(0.0..180.0),
                rng.random_range(-180.0..180.0),
            );
            let bound = (m * n) as f64;
            assert!(af.norm() <= bound + 1e-9);
        }
    }

    #[test]
    fn steering_is_stored_wrapped() {
        let s = SteeringConfig::<f64>::new(3.0 * PI, -3.0 * PI).unwrap();
        assert!((s.delta_phi_v_rad() - PI).abs() < 1e-12);
        assert!((s.delta_phi_h_rad() - PI).abs() < 1e-12);
        assert!(SteeringConfig::<f64>::new(f64::NAN, 0.0).is_err());
    }

    #[test]
    fn works_at_f32() {
        let arr = TwoElementArray::<f32>::half_wave();
        assert!((arr.af_magnitude(0.0, 0.0) - 2.0).abs() < 1e-6);
        let g = ArrayGeometry::<f32>::new(4, 4, 0.5, 0.5, 1).unwrap();
        let s = g.compensate_steering(90.0, 20.0);
        assert!((g.af(&s, 90.0, 20.0).norm() - 16.0).abs() < 1e-3);
    }

    #[test]
    fn invalid_geometry_is_rejected() {
        assert!(ArrayGeometry::<f64>::new(0, 2, 0.5, 0.5, 1).is_err());
        assert!(ArrayGeometry::<f64>::new(2, 2, 0.0, 0.5, 1).is_err());
        assert!(ArrayGeometry::<f64>::new(2, 2, 0.5, 0.5, 3).is_err());
        assert!(TwoElementArray::<f64>::new(-0.5).is_err());
    }
}
