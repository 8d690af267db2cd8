//! Power spectral density estimation and band power integration.
//!
//! Averaged periodogram with Hann-windowed 50%-overlapping segments sized to
//! the requested resolution bandwidth. Spectra are two-sided, centered on the
//! carrier (bin frequencies are offsets from it), and store power per
//! resolution-bandwidth bin in dBm so that summing linear bin powers over a
//! band gives the band power directly.

use std::error::Error;
use std::fmt;
use std::sync::Arc;

use num_complex::Complex;
use rustfft::{Fft, FftPlanner};

use crate::scalar::{FftScalar, Scalar};
use crate::units::{dbm_floored, linear_from_dbm_floored};

/// Two-sided spectrum with uniformly spaced bins.
#[derive(Debug, Clone, PartialEq)]
pub struct Spectrum<T> {
    bin_freqs_hz: Vec<T>,
    psd_dbm: Vec<T>,
    rbw_hz: T,
}

/// Frequency band with a label, `f_low < f_high`, both relative to carrier.
#[derive(Debug, Clone, PartialEq)]
pub struct BandDefinition<T> {
    f_low_hz: T,
    f_high_hz: T,
    label: String,
}

/// Dominant component of a spectral bin.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SpectralRegion {
    SignalDominated,
    Im3Dominated,
    NoiseDominated,
}

/// Errors from spectral estimation and integration.
#[derive(Debug, Clone, PartialEq)]
pub enum SpectralError {
    /// Too few samples for the requested resolution bandwidth.
    InsufficientSamples { needed: usize, got: usize },
    /// Resolution bandwidth not representable with the given sample rate.
    InvalidRbw,
    /// Band bounds are not ordered.
    InvalidBand,
    /// Band extends beyond the spectrum span.
    BandOutsideSpan,
    /// Spectra do not share the same bin grid.
    GridMismatch,
}

impl fmt::Display for SpectralError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            SpectralError::InsufficientSamples { needed, got } => {
                write!(f, "need at least {needed} samples, got {got}")
            }
            SpectralError::InvalidRbw => write!(f, "resolution bandwidth out of range"),
            SpectralError::InvalidBand => write!(f, "band must satisfy f_low < f_high"),
            SpectralError::BandOutsideSpan => write!(f, "band lies outside the spectrum span"),
            SpectralError::GridMismatch => write!(f, "spectra are not on the same bin grid"),
        }
    }
}

impl Error for SpectralError {}

impl<T: Scalar> BandDefinition<T> {
    pub fn new(f_low_hz: T, f_high_hz: T, label: impl Into<String>) -> Result<Self, SpectralError> {
        if !(f_low_hz.is_finite() && f_high_hz.is_finite() && f_low_hz < f_high_hz) {
            return Err(SpectralError::InvalidBand);
        }
        Ok(Self {
            f_low_hz,
            f_high_hz,
            label: label.into(),
        })
    }

    pub fn f_low_hz(&self) -> T {
        self.f_low_hz
    }

    pub fn f_high_hz(&self) -> T {
        self.f_high_hz
    }

    pub fn label(&self) -> &str {
        &self.label
    }
}

impl<T: Scalar> Spectrum<T> {
    /// Build from per-bin linear powers (one rbw bin each); floors at -400 dBm.
    pub(crate) fn from_linear(bin_freqs_hz: Vec<T>, linear: &[T], rbw_hz: T) -> Self {
        let psd_dbm = linear.iter().map(|&p| dbm_floored(p)).collect();
        Self {
            bin_freqs_hz,
            psd_dbm,
            rbw_hz,
        }
    }

    pub fn bin_freqs_hz(&self) -> &[T] {
        &self.bin_freqs_hz
    }

    /// Per-bin power in dBm per resolution bandwidth, floored at -400.
    pub fn psd_dbm(&self) -> &[T] {
        &self.psd_dbm
    }

    pub fn rbw_hz(&self) -> T {
        self.rbw_hz
    }

    pub fn num_bins(&self) -> usize {
        self.bin_freqs_hz.len()
    }

    fn bin_spacing_hz(&self) -> T {
        if self.bin_freqs_hz.len() >= 2 {
            self.bin_freqs_hz[1] - self.bin_freqs_hz[0]
        } else {
            self.rbw_hz
        }
    }

    /// Total power integrated over every bin, in dBm.
    pub fn total_power_dbm(&self) -> T {
        let ratio = self.bin_spacing_hz() / self.rbw_hz;
        let sum: T = self
            .psd_dbm
            .iter()
            .map(|&db| linear_from_dbm_floored(db) * ratio)
            .sum();
        dbm_floored(sum)
    }

    fn same_grid(&self, other: &Self) -> bool {
        self.rbw_hz == other.rbw_hz
            && self.bin_freqs_hz.len() == other.bin_freqs_hz.len()
            && self
                .bin_freqs_hz
                .iter()
                .zip(other.bin_freqs_hz.iter())
                .all(|(a, b)| a == b)
    }
}

/// Welch segmentation shared by PSD and cross-spectral estimation.
pub(crate) struct WelchGrid<T> {
    pub nperseg: usize,
    pub step: usize,
    pub num_segments: usize,
    pub window: Vec<T>,
    /// 1 / (num_segments · nperseg · Σw²): scales accumulated |X|² to
    /// per-bin power so that the bins sum to the total signal power.
    pub scale: T,
    pub rbw_hz: T,
    fft: Arc<dyn Fft<T>>,
}

impl<T: FftScalar> WelchGrid<T> {
    pub fn new(num_samples: usize, sample_rate_hz: T, rbw_hz: T) -> Result<Self, SpectralError> {
        if !(rbw_hz.is_finite() && rbw_hz > T::zero()) || !(sample_rate_hz > T::zero()) {
            return Err(SpectralError::InvalidRbw);
        }
        let half = (sample_rate_hz / (T::of(2.0) * rbw_hz))
            .round()
            .to_usize()
            .ok_or(SpectralError::InvalidRbw)?;
        if half < 2 {
            return Err(SpectralError::InvalidRbw);
        }
        let nperseg = 2 * half;
        if num_samples < 2 * nperseg {
            return Err(SpectralError::InsufficientSamples {
                needed: 2 * nperseg,
                got: num_samples,
            });
        }
        let step = nperseg / 2;
        let num_segments = 1 + (num_samples - nperseg) / step;
        let n_t = T::of(nperseg as f64);
        let window: Vec<T> = (0..nperseg)
            .map(|i| {
                let x = T::of(2.0) * T::PI() * T::of(i as f64) / n_t;
                T::of(0.5) * (T::one() - x.cos())
            })
            .collect();
        let wsq: T = window.iter().map(|&w| w * w).sum();
        let scale = T::one() / (T::of(num_segments as f64) * n_t * wsq);
        let fft = FftPlanner::new().plan_fft_forward(nperseg);
        Ok(Self {
            nperseg,
            step,
            num_segments,
            window,
            scale,
            rbw_hz: sample_rate_hz / n_t,
            fft,
        })
    }

    /// Centered bin frequencies (fftshift order), nperseg of them.
    pub fn bin_freqs(&self, sample_rate_hz: T) -> Vec<T> {
        let n = self.nperseg;
        let df = sample_rate_hz / T::of(n as f64);
        (0..n)
            .map(|i| T::of(i as f64 - (n / 2) as f64) * df)
            .collect()
    }

    /// Windowed FFT of segment `s` of `samples`, in natural (unshifted) order.
    pub fn segment_fft(&self, samples: &[Complex<T>], s: usize, out: &mut [Complex<T>]) {
        let start = s * self.step;
        for (i, slot) in out.iter_mut().enumerate() {
            slot.re = samples[start + i].re * self.window[i];
            slot.im = samples[start + i].im * self.window[i];
        }
        self.fft.process(out);
    }

    /// Move a natural-order bin index to centered (fftshift) order.
    pub fn shift_index(&self, k: usize) -> usize {
        (k + self.nperseg / 2) % self.nperseg
    }
}

/// Welch PSD estimate of a complex waveform.
///
/// Segments are sized so that the bin width matches `rbw_hz` as closely as
/// possible (the achieved value is stored in the result). Requires
/// `rbw_hz >= sample_rate / num_samples` and at least two segments of data.
pub fn estimate_psd<T: FftScalar>(
    samples: &[Complex<T>],
    sample_rate_hz: T,
    rbw_hz: T,
) -> Result<Spectrum<T>, SpectralError> {
    let grid = WelchGrid::new(samples.len(), sample_rate_hz, rbw_hz)?;
    let n = grid.nperseg;
    let mut acc = vec![T::zero(); n];
    let mut buf = vec![Complex::new(T::zero(), T::zero()); n];
    for s in 0..grid.num_segments {
        grid.segment_fft(samples, s, &mut buf);
        for (a, x) in acc.iter_mut().zip(buf.iter()) {
            *a += x.norm_sqr();
        }
    }
    let mut linear = vec![T::zero(); n];
    for k in 0..n {
        linear[grid.shift_index(k)] = acc[k] * grid.scale;
    }
    Ok(Spectrum::from_linear(
        grid.bin_freqs(sample_rate_hz),
        &linear,
        grid.rbw_hz,
    ))
}

/// Indices of the bins whose centers fall in `[f_low, f_high)`.
///
/// Half-open on the high side so that adjacent bands partition the bins.
pub(crate) fn bins_in_band<T: Scalar>(
    bin_freqs_hz: &[T],
    rbw_hz: T,
    band: &BandDefinition<T>,
) -> Result<std::ops::Range<usize>, SpectralError> {
    let half = rbw_hz / T::of(2.0);
    let span_lo = bin_freqs_hz[0] - half;
    // two-sided span reaches +fs/2 even though the last bin center stops
    // one bin short of it
    let span_hi = (-bin_freqs_hz[0]).max(bin_freqs_hz[bin_freqs_hz.len() - 1] + half);
    if band.f_low_hz() < span_lo || band.f_high_hz() > span_hi {
        return Err(SpectralError::BandOutsideSpan);
    }
    let start = bin_freqs_hz.partition_point(|&f| f < band.f_low_hz());
    let end = bin_freqs_hz.partition_point(|&f| f < band.f_high_hz());
    Ok(start..end)
}

/// Power integrated over a band, in dBm.
pub fn integrate_band<T: Scalar>(
    spectrum: &Spectrum<T>,
    band: &BandDefinition<T>,
) -> Result<T, SpectralError> {
    let range = bins_in_band(spectrum.bin_freqs_hz(), spectrum.rbw_hz(), band)?;
    let ratio = spectrum.bin_spacing_hz() / spectrum.rbw_hz();
    let sum: T = spectrum.psd_dbm()[range]
        .iter()
        .map(|&db| linear_from_dbm_floored(db) * ratio)
        .sum();
    Ok(dbm_floored(sum))
}

/// Per-bin dominant component. Ties resolve signal > IM3 > noise.
pub fn classify_regions<T: Scalar>(
    signal_psd: &Spectrum<T>,
    im3_psd: &Spectrum<T>,
    noise_psd: &Spectrum<T>,
) -> Result<Vec<SpectralRegion>, SpectralError> {
    if !signal_psd.same_grid(im3_psd) || !signal_psd.same_grid(noise_psd) {
        return Err(SpectralError::GridMismatch);
    }
    Ok((0..signal_psd.num_bins())
        .map(|k| {
            let s = signal_psd.psd_dbm()[k];
            let i = im3_psd.psd_dbm()[k];
            let n = noise_psd.psd_dbm()[k];
            if s >= i && s >= n {
                SpectralRegion::SignalDominated
            } else if i >= n {
                SpectralRegion::Im3Dominated
            } else {
                SpectralRegion::NoiseDominated
            }
        })
        .collect())
}

/// Merge groups of `factor` consecutive bins into wider bins by summing
/// linear powers. Remainder bins at the high end are dropped.
pub fn rebin<T: Scalar>(
    spectrum: &Spectrum<T>,
    factor: usize,
) -> Result<Spectrum<T>, SpectralError> {
    if factor < 1 || spectrum.num_bins() < factor {
        return Err(SpectralError::InvalidRbw);
    }
    let groups = spectrum.num_bins() / factor;
    let f_t = T::of(factor as f64);
    let mut freqs = Vec::with_capacity(groups);
    let mut linear = Vec::with_capacity(groups);
    for g in 0..groups {
        let lo = g * factor;
        let hi = lo + factor;
        let centre: T = spectrum.bin_freqs_hz()[lo..hi].iter().copied().sum::<T>() / f_t;
        let p: T = spectrum.psd_dbm()[lo..hi]
            .iter()
            .map(|&db| linear_from_dbm_floored(db))
            .sum();
        freqs.push(centre);
        linear.push(p);
    }
    Ok(Spectrum::from_linear(
        freqs,
        &linear,
        spectrum.rbw_hz() * f_t,
    ))
}
