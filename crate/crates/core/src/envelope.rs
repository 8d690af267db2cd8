//! Analytic directional EIRP and per-regime spatial envelopes.
//!
//! Sweeping the excitation phase of a two-element array over a full turn
//! drives the array-factor magnitude to its maximum of 2 in every
//! direction, so the per-regime envelope is the elementary radiator's
//! pattern plus a constant offset: 20·log10(2) for coherently combining
//! components (signal, IM3), 10·log10(2) for uncorrelated noise. The
//! offsets generalize to M×N grids as 20·log10(MN) and 10·log10 of the
//! RF-chain count. Exact constants are carried throughout (6.0206 and
//! 3.0103 dB rather than the rounded 6 and 3 dB).

use std::error::Error;
use std::fmt;

use crate::geometry::{ArrayGeometry, TwoElementArray};
use crate::pattern::{ElementPatternParams, PatternError};
use crate::scalar::Scalar;
use crate::spectral::SpectralRegion;
use crate::units::{argmax_toward_zero, db10};

/// Conducted per-element / per-branch / per-sub-array powers in dBm.
/// Absent fields mark regimes a scenario does not provide.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct RegimePowers<T> {
    /// Conducted signal power of one element.
    pub p_e_dbm: Option<T>,
    /// Conducted third-order distortion power of one element.
    pub p_im3_dbm: Option<T>,
    /// Noise power per branch.
    pub p_noise_dbm: Option<T>,
    /// Conducted power of one sub-array.
    pub p_sub_dbm: Option<T>,
    /// Noise power per sub-array.
    pub p_noise_s_dbm: Option<T>,
}

/// A labelled (angle grid, dB values) pair.
#[derive(Debug, Clone, PartialEq)]
pub struct AngularCut<T> {
    angles_deg: Vec<T>,
    values_db: Vec<T>,
    label: String,
}

/// One-sided uncertainty margins added on top of an envelope.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct UncertaintyMargins<T> {
    pub in_band_db: T,
    pub oob_db: T,
}

/// Direction of a Type-B intermodulation beam, or the marker that the
/// required sine exceeds unity and no propagating lobe exists.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ImDirection<T> {
    Visible { phi_deg: T },
    Invisible { sine: T },
}

/// Result of checking a measured cut against an envelope plus slack.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BoundReport<T> {
    /// Largest value of (cut - envelope) over the grid.
    pub worst_margin_db: T,
    /// Angle where the worst margin occurs.
    pub worst_angle_deg: T,
    /// Slack the check ran with.
    pub slack_db: T,
    pub pass: bool,
}

/// Errors from envelope computations.
#[derive(Debug, Clone, PartialEq)]
pub enum EnvelopeError {
    /// A regime power required by the operation is absent.
    MissingPower(&'static str),
    /// Angle grid is empty, unordered, or lengths differ.
    InvalidGrid(&'static str),
    /// Cuts to compare are not on the same grid.
    GridMismatch,
    /// Angle out of the operation's domain.
    AngleOutOfDomain(&'static str),
    /// Margins must be non-negative.
    InvalidMargins,
    Pattern(PatternError),
}

impl fmt::Display for EnvelopeError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            EnvelopeError::MissingPower(which) => write!(f, "regime power not set: {which}"),
            EnvelopeError::InvalidGrid(what) => write!(f, "invalid angle grid: {what}"),
            EnvelopeError::GridMismatch => write!(f, "cuts are not on the same angle grid"),
            EnvelopeError::AngleOutOfDomain(what) => write!(f, "angle out of domain: {what}"),
            EnvelopeError::InvalidMargins => write!(f, "margins must be >= 0"),
            EnvelopeError::Pattern(e) => write!(f, "{e}"),
        }
    }
}

impl Error for EnvelopeError {}

impl From<PatternError> for EnvelopeError {
    fn from(e: PatternError) -> Self {
        EnvelopeError::Pattern(e)
    }
}

impl<T: Scalar> Default for UncertaintyMargins<T> {
    /// ±1.3 dB in band (95% confidence OTA) and 3.0 dB out of band.
    fn default() -> Self {
        Self {
            in_band_db: T::of(1.3),
            oob_db: T::of(3.0),
        }
    }
}

impl<T: Scalar> UncertaintyMargins<T> {
    pub fn new(in_band_db: T, oob_db: T) -> Result<Self, EnvelopeError> {
        if in_band_db < T::zero() || oob_db < T::zero() {
            return Err(EnvelopeError::InvalidMargins);
        }
        Ok(Self { in_band_db, oob_db })
    }
}

impl<T: Scalar> AngularCut<T> {
    pub fn new(
        angles_deg: Vec<T>,
        values_db: Vec<T>,
        label: impl Into<String>,
    ) -> Result<Self, EnvelopeError> {
        if angles_deg.is_empty() {
            return Err(EnvelopeError::InvalidGrid("empty"));
        }
        if angles_deg.len() != values_db.len() {
            return Err(EnvelopeError::InvalidGrid("length mismatch"));
        }
        if angles_deg.windows(2).any(|w| !(w[0] < w[1])) {
            return Err(EnvelopeError::InvalidGrid("angles must strictly increase"));
        }
        Ok(Self {
            angles_deg,
            values_db,
            label: label.into(),
        })
    }

    pub fn angles_deg(&self) -> &[T] {
        &self.angles_deg
    }

    pub fn values_db(&self) -> &[T] {
        &self.values_db
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    pub fn len(&self) -> usize {
        self.angles_deg.len()
    }

    pub fn is_empty(&self) -> bool {
        self.angles_deg.is_empty()
    }

    pub fn with_label(mut self, label: impl Into<String>) -> Self {
        self.label = label.into();
        self
    }

    /// Index of the grid angle closest to 0°.
    pub fn boresight_index(&self) -> usize {
        let mut best = 0;
        for (i, a) in self.angles_deg.iter().enumerate() {
            if a.abs() < self.angles_deg[best].abs() {
                best = i;
            }
        }
        best
    }

    /// Value at the grid angle closest to 0°.
    pub fn boresight_value_db(&self) -> T {
        self.values_db[self.boresight_index()]
    }

    /// Index of the peak, ties broken toward 0°.
    pub fn peak_index(&self) -> usize {
        argmax_toward_zero(&self.angles_deg, &self.values_db)
    }

    /// Same cut shifted so the boresight value reads 0 dB.
    pub fn normalized_to_boresight(&self) -> Self {
        let reference = self.boresight_value_db();
        Self {
            angles_deg: self.angles_deg.clone(),
            values_db: self.values_db.iter().map(|&v| v - reference).collect(),
            label: format!("{}_normalized", self.label),
        }
    }

    fn same_grid(&self, other: &Self) -> bool {
        self.angles_deg.len() == other.angles_deg.len()
            && self
                .angles_deg
                .iter()
                .zip(other.angles_deg.iter())
                .all(|(a, b)| a == b)
    }
}

fn require<T>(power: Option<T>, name: &'static str) -> Result<T, EnvelopeError> {
    power.ok_or(EnvelopeError::MissingPower(name))
}

/// Offset of a coherently combining component over its per-element power:
/// 20·log10(2) ≈ 6.0206 dB.
pub fn coherent_pair_gain_db<T: Scalar>() -> T {
    T::of(20.0) * T::of(2.0).log10()
}

/// Offset of two uncorrelated noise branches: 10·log10(2) ≈ 3.0103 dB.
pub fn incoherent_pair_gain_db<T: Scalar>() -> T {
    T::of(10.0) * T::of(2.0).log10()
}

/// Directional EIRP of the useful signal for a fixed excitation phase:
/// `P_e + A_E(φ) + 20·log10|AF(φ, ΔΦ)|`. Array nulls give -inf.
pub fn eirp_signal<T: Scalar>(
    powers: &RegimePowers<T>,
    pattern: &ElementPatternParams<T>,
    array: &TwoElementArray<T>,
    phi_deg: T,
    delta_phi_rad: T,
) -> Result<T, EnvelopeError> {
    let p_e = require(powers.p_e_dbm, "p_e_dbm")?;
    let gain = pattern.element_gain_dbi(phi_deg)?;
    let af = array.af_magnitude(phi_deg, delta_phi_rad);
    // magnitudes below the numerical resolution of the cosine are nulls
    if af < T::of(1e-12) {
        return Ok(T::neg_infinity());
    }
    Ok(p_e + gain + T::of(20.0) * db10(af) / T::of(10.0))
}

fn pattern_cut<T: Scalar>(
    pattern: &ElementPatternParams<T>,
    angles_deg: &[T],
    offset_db: T,
    label: &str,
) -> Result<AngularCut<T>, EnvelopeError> {
    let values = angles_deg
        .iter()
        .map(|&phi| Ok(pattern.element_gain_dbi(phi)? + offset_db))
        .collect::<Result<Vec<_>, EnvelopeError>>()?;
    AngularCut::new(angles_deg.to_vec(), values, label)
}

/// Signal-regime spatial envelope `P_e + A_E(φ) + 20·log10(2)`.
pub fn envelope_signal<T: Scalar>(
    powers: &RegimePowers<T>,
    pattern: &ElementPatternParams<T>,
    angles_deg: &[T],
) -> Result<AngularCut<T>, EnvelopeError> {
    let p_e = require(powers.p_e_dbm, "p_e_dbm")?;
    pattern_cut(
        pattern,
        angles_deg,
        p_e + coherent_pair_gain_db(),
        "signal_envelope",
    )
}

/// IM3-regime spatial envelope `P_IM3 + A_E(φ) + 20·log10(2)`: the
/// distortion co-beamforms with the signal, so only the power changes.
pub fn envelope_im3<T: Scalar>(
    powers: &RegimePowers<T>,
    pattern: &ElementPatternParams<T>,
    angles_deg: &[T],
) -> Result<AngularCut<T>, EnvelopeError> {
    let p_im3 = require(powers.p_im3_dbm, "p_im3_dbm")?;
    pattern_cut(
        pattern,
        angles_deg,
        p_im3 + coherent_pair_gain_db(),
        "im3_envelope",
    )
}

/// Noise EIRP of the two-branch array: `P_noise + A_E(φ) + 10·log10(2)`.
/// There is deliberately no excitation-phase argument: uncorrelated noise
/// adds in power and its spatial distribution cannot be steered.
pub fn eirp_noise_two_element<T: Scalar>(
    powers: &RegimePowers<T>,
    pattern: &ElementPatternParams<T>,
    phi_deg: T,
) -> Result<T, EnvelopeError> {
    let p_noise = require(powers.p_noise_dbm, "p_noise_dbm")?;
    Ok(p_noise + pattern.element_gain_dbi(phi_deg)? + incoherent_pair_gain_db())
}

/// Noise offset of a grid with `polarizations·M·N` chains: 10·log10 of the
/// chain count.
pub fn noise_aas_offset_db<T: Scalar>(geometry: &ArrayGeometry<T>) -> T {
    T::of(10.0) * T::of(geometry.rf_chains() as f64).log10()
}

/// Coherent offset of a grid: 20·log10(MN), plus 10·log10(2) when two
/// polarizations each carry the component.
pub fn coherent_aas_offset_db<T: Scalar>(geometry: &ArrayGeometry<T>) -> T {
    let beam = T::of(20.0) * T::of(geometry.num_positions() as f64).log10();
    if geometry.polarizations() == 2 {
        beam + incoherent_pair_gain_db()
    } else {
        beam
    }
}

/// AAS noise envelope `P_noise,s + A_sub(φ) + 10·log10(pol·M·N)`.
pub fn envelope_noise_aas<T: Scalar>(
    powers: &RegimePowers<T>,
    sub_pattern: &ElementPatternParams<T>,
    geometry: &ArrayGeometry<T>,
    angles_deg: &[T],
) -> Result<AngularCut<T>, EnvelopeError> {
    let p = require(powers.p_noise_s_dbm, "p_noise_s_dbm")?;
    pattern_cut(
        sub_pattern,
        angles_deg,
        p + noise_aas_offset_db(geometry),
        "noise_aas_envelope",
    )
}

/// AAS coherent envelope `P_sub + [3 dB] + A_sub(φ) + 20·log10(MN)`; the
/// polarization term appears only for two polarizations and is carried as
/// 10·log10(2).
pub fn envelope_coherent_aas<T: Scalar>(
    powers: &RegimePowers<T>,
    sub_pattern: &ElementPatternParams<T>,
    geometry: &ArrayGeometry<T>,
    angles_deg: &[T],
) -> Result<AngularCut<T>, EnvelopeError> {
    let p = require(powers.p_sub_dbm, "p_sub_dbm")?;
    pattern_cut(
        sub_pattern,
        angles_deg,
        p + coherent_aas_offset_db(geometry),
        "coherent_aas_envelope",
    )
}

/// Directions of the two Type-B cross-IM beams for users at φ₁ and φ₂:
/// `sin φ_B1 = 2 sin φ₁ − sin φ₂` and `sin φ_B2 = 2 sin φ₂ − sin φ₁`.
/// A sine beyond ±1 marks an evanescent component that radiates no lobe;
/// it is flagged, never clamped.
pub fn mu_im_directions<T: Scalar>(
    phi1_deg: T,
    phi2_deg: T,
) -> Result<(ImDirection<T>, ImDirection<T>), EnvelopeError> {
    let ninety = T::of(90.0);
    if !phi1_deg.is_finite() || !phi2_deg.is_finite() {
        return Err(EnvelopeError::AngleOutOfDomain(
            "beam angles must be finite",
        ));
    }
    if phi1_deg.abs() > ninety || phi2_deg.abs() > ninety {
        return Err(EnvelopeError::AngleOutOfDomain(
            "beam angles must lie in [-90, 90] degrees",
        ));
    }
    let s1 = phi1_deg.to_radians().sin();
    let s2 = phi2_deg.to_radians().sin();
    let two = T::of(2.0);
    let direction = |s: T| {
        if s.abs() <= T::one() {
            ImDirection::Visible {
                phi_deg: s.asin().to_degrees(),
            }
        } else {
            ImDirection::Invisible { sine: s }
        }
    };
    Ok((direction(two * s1 - s2), direction(two * s2 - s1)))
}

/// Check `mu_cut(φ) <= su_envelope(φ) + slack` at every grid point.
pub fn check_mu_bound<T: Scalar>(
    mu_cut: &AngularCut<T>,
    su_envelope: &AngularCut<T>,
    slack_db: T,
) -> Result<BoundReport<T>, EnvelopeError> {
    if !mu_cut.same_grid(su_envelope) {
        return Err(EnvelopeError::GridMismatch);
    }
    let mut worst = T::neg_infinity();
    let mut worst_angle = mu_cut.angles_deg()[0];
    for i in 0..mu_cut.len() {
        let margin = mu_cut.values_db()[i] - su_envelope.values_db()[i];
        if margin > worst {
            worst = margin;
            worst_angle = mu_cut.angles_deg()[i];
        }
    }
    Ok(BoundReport {
        worst_margin_db: worst,
        worst_angle_deg: worst_angle,
        slack_db,
        pass: worst <= slack_db,
    })
}

/// Add the uncertainty margin of the dominant regime to a cut: the in-band
/// margin for signal-dominated content, the out-of-band margin otherwise.
pub fn apply_margins<T: Scalar>(
    cut: &AngularCut<T>,
    margins: &UncertaintyMargins<T>,
    region: SpectralRegion,
) -> AngularCut<T> {
    let margin = match region {
        SpectralRegion::SignalDominated => margins.in_band_db,
        _ => margins.oob_db,
    };
    AngularCut {
        angles_deg: cut.angles_deg.clone(),
        values_db: cut.values_db.iter().map(|&v| v + margin).collect(),
        label: format!("{}_bound", cut.label),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn pattern() -> ElementPatternParams<f64> {
        ElementPatternParams::new(8.0, 85.0, 30.0).unwrap()
    }

    fn grid(start: f64, stop: f64, step: f64) -> Vec<f64> {
        let mut v = Vec::new();
        let mut a = start;
        while a <= stop + 1e-9 {
            v.push(a);
            a += step;
        }
        v
    }

    #[test]
    fn eirp_signal_boresight_reference() {
        let powers = RegimePowers {
            p_e_dbm: Some(30.0),
            ..Default::default()
        };
        let arr = TwoElementArray::half_wave();
        let v = eirp_signal(&powers, &pattern(), &arr, 0.0, 0.0).unwrap();
        assert!((v - (38.0 + 20.0 * 2.0_f64.log10())).abs() < 1e-12);
        assert!((v - 44.02).abs() < 0.01);
    }

    #[test]
    fn eirp_signal_null_is_neg_infinity() {
        let powers = RegimePowers {
            p_e_dbm: Some(30.0),
            ..Default::default()
        };
        let arr = TwoElementArray::half_wave();
        // ΔΦ = π at boresight: perfect cancellation
        let v = eirp_signal(&powers, &pattern(), &arr, 0.0, std::f64::consts::PI).unwrap();
        assert_eq!(v, f64::NEG_INFINITY);
    }

    #[test]
    fn missing_power_is_reported_by_name() {
        let powers = RegimePowers::<f64>::default();
        let arr = TwoElementArray::half_wave();
        assert_eq!(
            eirp_signal(&powers, &pattern(), &arr, 0.0, 0.0).unwrap_err(),
            EnvelopeError::MissingPower("p_e_dbm")
        );
    }

    #[test]
    fn signal_envelope_shape_and_offset() {
        let powers = RegimePowers {
            p_e_dbm: Some(30.0),
            p_im3_dbm: Some(5.0),
            ..Default::default()
        };
        let angles = grid(-60.0, 60.0, 1.0);
        let env = envelope_signal(&powers, &pattern(), &angles).unwrap();
        // boresight = P_e + g_e_max + 20log10(2)
        let expect = 30.0 + 8.0 + 20.0 * 2.0_f64.log10();
        assert!((env.boresight_value_db() - expect).abs() < 1e-12);
        // envelope(φ) − envelope(0) = A(φ)
        for (i, &phi) in angles.iter().enumerate() {
            let shape = env.values_db()[i] - env.boresight_value_db();
            let a = pattern().attenuation_db(phi).unwrap();
            assert!((shape - a).abs() < 1e-12);
        }
        // parallel IM3 envelope
        let im3 = envelope_im3(&powers, &pattern(), &angles).unwrap();
        for i in 0..angles.len() {
            let gap = im3.values_db()[i] - env.values_db()[i];
            assert!((gap - (5.0 - 30.0)).abs() < 1e-12);
        }
    }

    #[test]
    fn envelope_matches_brute_force_sweep() {
        let powers = RegimePowers {
            p_e_dbm: Some(30.0),
            ..Default::default()
        };
        let arr = TwoElementArray::half_wave();
        let angles = grid(-60.0, 60.0, 1.0);
        let env = envelope_signal(&powers, &pattern(), &angles).unwrap();
        let steps = 720;
        for (i, &phi) in angles.iter().enumerate() {
            let mut best = f64::NEG_INFINITY;
            for k in 0..steps {
                let dp = 2.0 * std::f64::consts::PI * k as f64 / steps as f64;
                best = best.max(eirp_signal(&powers, &pattern(), &arr, phi, dp).unwrap());
            }
            assert!(
                (best - env.values_db()[i]).abs() < 1e-3,
                "phi={phi} best={best} env={}",
                env.values_db()[i]
            );
        }
    }

    #[test]
    fn envelope_dominates_every_phase() {
        let powers = RegimePowers {
            p_e_dbm: Some(0.0),
            ..Default::default()
        };
        let arr = TwoElementArray::half_wave();
        let angles = grid(-180.0, 180.0, 2.5);
        let env = envelope_signal(&powers, &pattern(), &angles).unwrap();
        for (i, &phi) in angles.iter().enumerate() {
            for k in 0..96 {
                let dp = 2.0 * std::f64::consts::PI * k as f64 / 96.0;
                let e = eirp_signal(&powers, &pattern(), &arr, phi, dp).unwrap();
                assert!(e <= env.values_db()[i] + 1e-6);
            }
        }
    }

    #[test]
    fn noise_eirp_two_element_reference() {
        let powers = RegimePowers {
            p_noise_dbm: Some(-10.0),
            ..Default::default()
        };
        let v = eirp_noise_two_element(&powers, &pattern(), 0.0).unwrap();
        assert!((v - (-10.0 + 8.0 + 10.0 * 2.0_f64.log10())).abs() < 1e-12);
        assert!((v - 1.01).abs() < 0.01);
    }

    #[test]
    fn aas_offsets_follow_chain_counts() {
        let g = ArrayGeometry::<f64>::new(8, 2, 0.5, 0.5, 2).unwrap();
        assert!((noise_aas_offset_db(&g) - 10.0 * 32.0_f64.log10()).abs() < 1e-12);
        let coh = coherent_aas_offset_db(&g);
        assert!((coh - (10.0 * 2.0_f64.log10() + 20.0 * 16.0_f64.log10())).abs() < 1e-12);

        // one position, two polarizations reduces to the two-branch case
        let g1 = ArrayGeometry::<f64>::new(1, 1, 0.5, 0.5, 2).unwrap();
        assert!((noise_aas_offset_db(&g1) - incoherent_pair_gain_db::<f64>()).abs() < 1e-12);

        // single radiator: no offsets at all
        let g0 = ArrayGeometry::<f64>::new(1, 1, 0.5, 0.5, 1).unwrap();
        assert_eq!(noise_aas_offset_db(&g0), 0.0);
        assert_eq!(coherent_aas_offset_db(&g0), 0.0);
    }

    #[test]
    fn doubling_columns_scales_envelopes_differently() {
        let powers = RegimePowers {
            p_sub_dbm: Some(0.0),
            p_noise_s_dbm: Some(0.0),
            ..Default::default()
        };
        let angles = grid(-10.0, 10.0, 1.0);
        let mut previous: Option<(f64, f64)> = None;
        for n in [1usize, 2, 4, 8] {
            let g = ArrayGeometry::new(1, n, 0.5, 0.5, 2).unwrap();
            let coh = envelope_coherent_aas(&powers, &pattern(), &g, &angles).unwrap();
            let noi = envelope_noise_aas(&powers, &pattern(), &g, &angles).unwrap();
            if let Some((c0, n0)) = previous {
                assert!((coh.boresight_value_db() - c0 - 6.0206).abs() < 1e-3);
                assert!((noi.boresight_value_db() - n0 - 3.0103).abs() < 1e-3);
            }
            previous = Some((coh.boresight_value_db(), noi.boresight_value_db()));
        }
    }

    #[test]
    fn coherent_incoherent_gap_is_ten_log_mn() {
        let powers = RegimePowers {
            p_sub_dbm: Some(0.0),
            p_noise_s_dbm: Some(0.0),
            ..Default::default()
        };
        let angles = grid(-5.0, 5.0, 1.0);
        for m in [1usize, 2, 4, 8] {
            for n in [1usize, 2, 4, 8] {
                let g = ArrayGeometry::new(m, n, 0.5, 0.5, 2).unwrap();
                let coh = envelope_coherent_aas(&powers, &pattern(), &g, &angles).unwrap();
                let noi = envelope_noise_aas(&powers, &pattern(), &g, &angles).unwrap();
                let gap = coh.boresight_value_db() - noi.boresight_value_db();
                let expect = 10.0 * ((m * n) as f64).log10();
                assert!((gap - expect).abs() < 1e-12, "m={m} n={n}");
            }
        }
    }

    #[test]
    fn compensated_full_eirp_meets_the_coherent_envelope() {
        // at the compensated direction the array factor is exactly MN, so
        // the directional EIRP equals the envelope value there
        let powers = RegimePowers {
            p_sub_dbm: Some(20.0),
            ..Default::default()
        };
        let g = ArrayGeometry::new(8, 2, 0.5, 0.5, 2).unwrap();
        let pat = pattern();
        let phi0 = 25.0;
        let env = envelope_coherent_aas(&powers, &pat, &g, &[phi0]).unwrap();
        let steering = g.compensate_steering(90.0, phi0);
        let af = g.af(&steering, 90.0, phi0).norm();
        let eirp = 20.0
            + incoherent_pair_gain_db::<f64>()
            + pat.element_gain_dbi(phi0).unwrap()
            + 20.0 * af.log10();
        assert!((eirp - env.values_db()[0]).abs() < 1e-9);
    }

    #[test]
    fn boresight_is_the_argmax_of_every_regime() {
        let powers = RegimePowers {
            p_e_dbm: Some(3.0),
            p_im3_dbm: Some(-20.0),
            p_noise_dbm: Some(-40.0),
            p_sub_dbm: Some(3.0),
            p_noise_s_dbm: Some(-40.0),
        };
        let angles = grid(-180.0, 180.0, 0.25);
        let g = ArrayGeometry::new(8, 2, 0.5, 0.5, 2).unwrap();
        let cuts = [
            envelope_signal(&powers, &pattern(), &angles).unwrap(),
            envelope_im3(&powers, &pattern(), &angles).unwrap(),
            envelope_coherent_aas(&powers, &pattern(), &g, &angles).unwrap(),
            envelope_noise_aas(&powers, &pattern(), &g, &angles).unwrap(),
        ];
        for cut in &cuts {
            assert_eq!(cut.angles_deg()[cut.peak_index()], 0.0, "{}", cut.label());
        }
    }

    #[test]
    fn im_direction_reference_values() {
        let (b1, b2) = mu_im_directions::<f64>(0.0, 18.0).unwrap();
        match b1 {
            ImDirection::Visible { phi_deg } => assert!((phi_deg + 18.0).abs() < 1e-9),
            _ => panic!("b1 should be visible"),
        }
        match b2 {
            ImDirection::Visible { phi_deg } => assert!((phi_deg - 38.17).abs() < 0.05),
            _ => panic!("b2 should be visible"),
        }
    }

    #[test]
    fn im_direction_degenerate_and_invisible() {
        let (b1, b2) = mu_im_directions::<f64>(25.0, 25.0).unwrap();
        for b in [b1, b2] {
            match b {
                ImDirection::Visible { phi_deg } => assert!((phi_deg - 25.0).abs() < 1e-9),
                _ => panic!("degenerate case must stay visible"),
            }
        }

        let (_, b2) = mu_im_directions::<f64>(-30.0, 45.0).unwrap();
        match b2 {
            ImDirection::Invisible { sine } => assert!((sine - 1.914).abs() < 1e-3),
            _ => panic!("2 sin 45° − sin(−30°) exceeds 1"),
        }

        assert!(mu_im_directions::<f64>(-30.0, 95.0).is_err());
    }

    #[test]
    fn mu_bound_reports_worst_margin() {
        let angles = grid(-60.0, 60.0, 1.0);
        let su = AngularCut::new(angles.clone(), vec![10.0; angles.len()], "su").unwrap();
        let mu_vals: Vec<f64> = vec![7.0; angles.len()];
        let mu = AngularCut::new(angles.clone(), mu_vals, "mu").unwrap();
        let report = check_mu_bound(&mu, &su, 0.5).unwrap();
        assert!(report.pass);
        assert!((report.worst_margin_db + 3.0).abs() < 1e-12);

        // single exceeding angle is localized
        let mut exceeded: Vec<f64> = vec![7.0; angles.len()];
        exceeded[17] = 11.0;
        let mu = AngularCut::new(angles.clone(), exceeded, "mu").unwrap();
        let report = check_mu_bound(&mu, &su, 0.5).unwrap();
        assert!(!report.pass);
        assert_eq!(report.worst_angle_deg, angles[17]);
        assert!((report.worst_margin_db - 1.0).abs() < 1e-12);

        let other = AngularCut::new(grid(-50.0, 50.0, 1.0), vec![0.0; 101], "x").unwrap();
        assert_eq!(
            check_mu_bound(&other, &su, 0.5).unwrap_err(),
            EnvelopeError::GridMismatch
        );
    }

    #[test]
    fn margins_add_exactly_and_zero_is_identity() {
        let angles = grid(-10.0, 10.0, 1.0);
        let cut = AngularCut::new(angles.clone(), vec![1.5; angles.len()], "cut").unwrap();
        let margins = UncertaintyMargins::default();
        let in_band = apply_margins(&cut, &margins, SpectralRegion::SignalDominated);
        let oob = apply_margins(&cut, &margins, SpectralRegion::NoiseDominated);
        for i in 0..cut.len() {
            assert_eq!(in_band.values_db()[i], 1.5 + 1.3);
            assert_eq!(oob.values_db()[i], 1.5 + 3.0);
        }
        let zero = UncertaintyMargins::new(0.0, 0.0).unwrap();
        let same = apply_margins(&cut, &zero, SpectralRegion::Im3Dominated);
        assert_eq!(same.values_db(), cut.values_db());
        assert!(UncertaintyMargins::new(-1.0, 0.0).is_err());
    }

    #[test]
    fn cut_construction_validates_grid() {
        assert!(AngularCut::<f64>::new(vec![], vec![], "x").is_err());
        assert!(AngularCut::new(vec![0.0, 1.0], vec![0.0], "x").is_err());
        assert!(AngularCut::new(vec![0.0, 0.0], vec![1.0, 2.0], "x").is_err());
        let cut = AngularCut::new(vec![-1.0, 0.5, 2.0], vec![0.0, 3.0, 1.0], "x").unwrap();
        assert_eq!(cut.boresight_index(), 1);
        assert_eq!(cut.normalized_to_boresight().values_db()[1], 0.0);
    }
}
