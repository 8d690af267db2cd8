//! dB conversions and angle normalization shared across modules.

use crate::scalar::Scalar;

/// Floor substituted for -inf dBm in exported spectra and cuts.
pub const DBM_FLOOR: f64 = -400.0;

/// 10·log10 of a linear power; zero or negative maps to -inf.
pub fn db10<T: Scalar>(linear: T) -> T {
    if linear <= T::zero() {
        T::neg_infinity()
    } else {
        T::of(10.0) * linear.log10()
    }
}

/// 10·log10 clamped at the export floor of -400 dBm.
pub fn dbm_floored<T: Scalar>(linear: T) -> T {
    let db = db10(linear);
    if db < T::of(DBM_FLOOR) {
        T::of(DBM_FLOOR)
    } else {
        db
    }
}

/// Linear power from a dB value; -inf maps to zero.
pub fn linear_from_db<T: Scalar>(db: T) -> T {
    if db == T::neg_infinity() {
        T::zero()
    } else {
        T::of(10.0).powf(db / T::of(10.0))
    }
}

/// Linear power from a floored dBm value: the -400 dBm sentinel (and
/// anything below) maps back to exactly zero.
pub fn linear_from_dbm_floored<T: Scalar>(db: T) -> T {
    if db <= T::of(DBM_FLOOR) {
        T::zero()
    } else {
        linear_from_db(db)
    }
}

/// Field amplitude from a dB gain (20·log10 convention).
pub fn field_from_db<T: Scalar>(db: T) -> T {
    if db == T::neg_infinity() {
        T::zero()
    } else {
        T::of(10.0).powf(db / T::of(20.0))
    }
}

/// Wrap an angle in degrees into (-180, 180].
pub fn wrap_degrees<T: Scalar>(deg: T) -> T {
    let turn = T::of(360.0);
    let mut w = deg - turn * (deg / turn).round();
    if w <= T::of(-180.0) {
        w = w + turn;
    }
    w
}

/// Wrap an angle in radians into (-pi, pi].
pub fn wrap_radians<T: Scalar>(rad: T) -> T {
    let turn = T::of(2.0) * T::PI();
    let mut w = rad - turn * (rad / turn).round();
    if w <= -T::PI() {
        w = w + turn;
    }
    w
}

/// Index of the maximum value; ties are broken toward the angle closest to 0°.
///
/// Panics if the slices are empty or of different lengths.
pub fn argmax_toward_zero<T: Scalar>(angles_deg: &[T], values: &[T]) -> usize {
    assert_eq!(angles_deg.len(), values.len());
    assert!(!values.is_empty());
    let mut best = 0;
    for i in 1..values.len() {
        if values[i] > values[best]
            || (values[i] == values[best] && angles_deg[i].abs() < angles_deg[best].abs())
        {
            best = i;
        }
    }
    best
}
