//! Parametric radiation pattern of the elementary radiator.
//!
//! Horizontal-plane azimuth model: a quadratic main-lobe rolloff of
//! `12·(φ/φ_3dB)²` dB limited by a front-to-back attenuation floor. The
//! same parametrization describes a single element or a whole sub-array.

use std::error::Error;
use std::fmt;

use crate::scalar::Scalar;
use crate::units::wrap_degrees;

/// Element (or sub-array) pattern parameters.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ElementPatternParams<T> {
    g_e_max_dbi: T,
    phi_3db_deg: T,
    a_m_db: T,
}

/// Errors from pattern construction and evaluation.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum PatternError {
    /// A constructor argument was out of range.
    InvalidParameter(&'static str),
    /// An angle argument was NaN or infinite.
    NonFiniteAngle,
}

impl fmt::Display for PatternError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            PatternError::InvalidParameter(what) => write!(f, "invalid pattern parameter: {what}"),
            PatternError::NonFiniteAngle => write!(f, "angle must be finite"),
        }
    }
}

impl Error for PatternError {}

impl<T: Scalar> ElementPatternParams<T> {
    /// Half-power beamwidth used when a scenario does not override it.
    pub const DEFAULT_PHI_3DB_DEG: f64 = 85.0;
    /// Front-to-back attenuation used when a scenario does not override it.
    pub const DEFAULT_A_M_DB: f64 = 30.0;

    pub fn new(g_e_max_dbi: T, phi_3db_deg: T, a_m_db: T) -> Result<Self, PatternError> {
        if !g_e_max_dbi.is_finite() {
            return Err(PatternError::InvalidParameter("g_e_max_dbi must be finite"));
        }
        if !(phi_3db_deg.is_finite() && phi_3db_deg > T::zero()) {
            return Err(PatternError::InvalidParameter("phi_3db_deg must be > 0"));
        }
        if !(a_m_db.is_finite() && a_m_db > T::zero()) {
            return Err(PatternError::InvalidParameter("a_m_db must be > 0"));
        }
        Ok(Self {
            g_e_max_dbi,
            phi_3db_deg,
            a_m_db,
        })
    }

    /// Pattern with the default 85° beamwidth and 30 dB front-to-back ratio.
    /// The peak gain has no default and must always be supplied.
    pub fn with_default_shape(g_e_max_dbi: T) -> Result<Self, PatternError> {
        Self::new(
            g_e_max_dbi,
            T::of(Self::DEFAULT_PHI_3DB_DEG),
            T::of(Self::DEFAULT_A_M_DB),
        )
    }

    pub fn g_e_max_dbi(&self) -> T {
        self.g_e_max_dbi
    }

    pub fn phi_3db_deg(&self) -> T {
        self.phi_3db_deg
    }

    pub fn a_m_db(&self) -> T {
        self.a_m_db
    }

    /// Relative attenuation `-min{12(φ/φ_3dB)², A_m}` in dB (≤ 0).
    ///
    /// `phi_deg` is wrapped into (-180°, 180°] first; the result is an even
    /// function of the wrapped angle.
    pub fn attenuation_db(&self, phi_deg: T) -> Result<T, PatternError> {
        if !phi_deg.is_finite() {
            return Err(PatternError::NonFiniteAngle);
        }
        let phi = wrap_degrees(phi_deg);
        let ratio = phi / self.phi_3db_deg;
        let rolloff = T::of(12.0) * ratio * ratio;
        Ok(-rolloff.min(self.a_m_db))
    }

    /// Absolute gain `G_E,max + A(φ)` in dBi.
    pub fn element_gain_dbi(&self, phi_deg: T) -> Result<T, PatternError> {
        Ok(self.g_e_max_dbi + self.attenuation_db(phi_deg)?)
    }

    /// Field amplitude `10^(gain/20)` in the given direction.
    pub fn field_amplitude(&self, phi_deg: T) -> Result<T, PatternError> {
        Ok(crate::units::field_from_db(self.element_gain_dbi(phi_deg)?))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn params() -> ElementPatternParams<f64> {
        ElementPatternParams::new(8.0, 85.0, 30.0).unwrap()
    }

    #[test]
    fn boresight_attenuation_is_zero() {
        assert_eq!(params().attenuation_db(0.0).unwrap(), 0.0);
    }

    #[test]
    fn half_beamwidth_gives_three_db() {
        // 12·(42.5/85)² = 3
        let a = params().attenuation_db(42.5).unwrap();
        assert!((a + 3.0).abs() < 1e-12, "got {a}");
    }

    #[test]
    fn back_lobe_hits_the_floor() {
        // 12·(180/85)² = 53.8 > 30, floor applies
        assert_eq!(params().attenuation_db(180.0).unwrap(), -30.0);
    }

    #[test]
    fn gain_is_peak_plus_attenuation() {
        let p = params();
        assert_eq!(p.element_gain_dbi(0.0).unwrap(), 8.0);
        assert!((p.element_gain_dbi(42.5).unwrap() - 5.0).abs() < 1e-12);
    }

    #[test]
    fn zero_gain_identity() {
        let p = ElementPatternParams::new(0.0, 85.0, 30.0).unwrap();
        for phi in [-120.0, -13.0, 0.0, 7.5, 95.0] {
            assert_eq!(
                p.element_gain_dbi(phi).unwrap(),
                p.attenuation_db(phi).unwrap()
            );
        }
    }

    #[test]
    fn even_symmetry_is_exact() {
        let p = params();
        let mut phi = -180.0;
        while phi <= 180.0 {
            assert_eq!(
                p.element_gain_dbi(phi).unwrap(),
                p.element_gain_dbi(-phi).unwrap(),
                "phi={phi}"
            );
            phi += 0.25;
        }
    }

    #[test]
    fn floor_bounds_gain_everywhere() {
        let p = params();
        let mut phi = -180.0;
        while phi <= 180.0 {
            assert!(p.element_gain_dbi(phi).unwrap() >= p.g_e_max_dbi() - p.a_m_db());
            phi += 0.25;
        }
    }

    #[test]
    fn peak_sits_at_boresight() {
        let p = params();
        let angles: Vec<f64> = (-720..=720).map(|i| i as f64 * 0.25).collect();
        let gains: Vec<f64> = angles
            .iter()
            .map(|&a| p.element_gain_dbi(a).unwrap())
            .collect();
        let best = crate::units::argmax_toward_zero(&angles, &gains);
        assert_eq!(angles[best], 0.0);
    }

    #[test]
    fn non_finite_angle_is_rejected() {
        assert_eq!(
            params().attenuation_db(f64::NAN).unwrap_err(),
            PatternError::NonFiniteAngle
        );
        assert_eq!(
            params().element_gain_dbi(f64::INFINITY).unwrap_err(),
            PatternError::NonFiniteAngle
        );
    }

    #[test]
    fn invalid_parameters_are_rejected() {
        assert!(ElementPatternParams::new(8.0, 0.0, 30.0).is_err());
        assert!(ElementPatternParams::new(8.0, 85.0, -1.0).is_err());
        assert!(ElementPatternParams::new(f64::NAN, 85.0, 30.0).is_err());
    }

    #[test]
    fn works_at_f32() {
        let p = ElementPatternParams::<f32>::with_default_shape(8.0).unwrap();
        assert!((p.element_gain_dbi(42.5).unwrap() - 5.0).abs() < 1e-5);
    }
}
