//! Waveform-level far-field sweep simulator.
//!
//! Radiates per-branch PA outputs with their geometric phases and measures
//! band-integrated angular cuts, independently of the analytic envelope
//! formulas. The far field is narrowband: geometric phases use the carrier
//! wavelength for every spectral component, and there is no path loss or
//! propagation delay beyond phase.
//!
//! Rather than re-synthesizing the far-field sequence for every
//! (angle, sweep-phase) pair, the engine accumulates the Welch
//! cross-spectral matrix of the branch sources once and evaluates each
//! configuration as a quadratic form in the per-branch combining
//! coefficients. Welch estimation is linear in the segment FFTs, so this is
//! algebraically identical to `estimate_psd(radiate(...))`; a test pins the
//! two routes against each other. A common sweep offset multiplies each
//! column's input by a unit phasor, which commutes through the memoryless
//! PA, so the noiseless column outputs are computed once per scenario.
//!
//! Noise realizations are drawn once per branch per scenario and held fixed
//! across the sweep; the sweep phase steers only the signal path.

use std::error::Error;
use std::fmt;

use num_complex::Complex;
use rayon::prelude::*;

use crate::geometry::{ArrayGeometry, TwoElementArray};
use crate::pattern::{ElementPatternParams, PatternError};
use crate::scalar::{FftScalar, Scalar};
use crate::spectral::{
    bins_in_band, BandDefinition, SpectralError, SpectralRegion, Spectrum, WelchGrid,
};
use crate::units::{dbm_floored, linear_from_db};
use crate::waveform::{
    derive_seed, generate_user_signal, noise_realization, PaModel, SeedRole, UserSignal,
    WaveformError,
};

/// Radiating aperture driven by the scenario.
#[derive(Debug, Clone, PartialEq)]
pub enum ArrayModel<T> {
    TwoElement(TwoElementArray<T>),
    Grid(ArrayGeometry<T>),
}

impl<T: Scalar> ArrayModel<T> {
    /// (rows, columns, column spacing in wavelengths). Rows share their
    /// column's drive signal in the horizontal cut; only columns take
    /// distinct geometric phases there.
    fn layout(&self) -> (usize, usize, T) {
        match self {
            ArrayModel::TwoElement(arr) => (1, 2, arr.spacing_wavelengths()),
            ArrayModel::Grid(g) => (g.rows_m(), g.cols_n(), g.d_h_wavelengths()),
        }
    }

    /// Number of simulated RF branches (one polarization).
    pub fn num_branches(&self) -> usize {
        let (rows, cols, _) = self.layout();
        rows * cols
    }

    /// Coherent combining gain of the simulated branches, 20·log10(B).
    pub fn coherent_gain_db(&self) -> T {
        T::of(20.0) * T::of(self.num_branches() as f64).log10()
    }

    /// Incoherent combining gain of the simulated branches, 10·log10(B).
    pub fn incoherent_gain_db(&self) -> T {
        T::of(10.0) * T::of(self.num_branches() as f64).log10()
    }
}

/// One served user: waveform statistics plus the beam steering target.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct UserSpec<T> {
    pub power_dbm: T,
    pub bandwidth_hz: T,
    pub center_offset_hz: T,
    pub beam_phi_deg: T,
}

/// Everything a far-field run needs.
#[derive(Debug, Clone, PartialEq)]
pub struct FarFieldScenario<T> {
    pub array: ArrayModel<T>,
    pub pattern: ElementPatternParams<T>,
    pub pa: PaModel<T>,
    pub users: Vec<UserSpec<T>>,
    pub angles_deg: Vec<T>,
    pub phase_steps: usize,
    pub bands: Vec<BandDefinition<T>>,
    pub sample_rate_hz: T,
    pub num_samples: usize,
    pub rbw_hz: T,
    pub master_seed: u64,
    /// Refusal threshold on angles × phase steps × samples.
    pub budget_samples: u128,
}

/// Default compute budget: 2³¹ processed samples.
pub const DEFAULT_BUDGET_SAMPLES: u128 = 1 << 31;

/// Extra excitation on top of the per-user beam phases.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Excitation<T> {
    /// Steer each user to its configured beam target only.
    BeamsOnly,
    /// Add a common per-column phase gradient offset (radians per column).
    SweepOffset(T),
}

/// Errors from far-field runs.
#[derive(Debug, Clone, PartialEq)]
pub enum OracleError {
    InvalidScenario(&'static str),
    /// angles × phase steps × samples exceeded the configured budget.
    BudgetExceeded {
        needed: u128,
        budget: u128,
    },
    Waveform(WaveformError),
    Spectral(SpectralError),
    Pattern(PatternError),
}

impl fmt::Display for OracleError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            OracleError::InvalidScenario(what) => write!(f, "invalid scenario: {what}"),
            OracleError::BudgetExceeded { needed, budget } => write!(
                f,
                "scenario needs {needed} processed samples, budget is {budget}"
            ),
            OracleError::Waveform(e) => write!(f, "{e}"),
            OracleError::Spectral(e) => write!(f, "{e}"),
            OracleError::Pattern(e) => write!(f, "{e}"),
        }
    }
}

impl Error for OracleError {}

impl From<WaveformError> for OracleError {
    fn from(e: WaveformError) -> Self {
        OracleError::Waveform(e)
    }
}

impl From<SpectralError> for OracleError {
    fn from(e: SpectralError) -> Self {
        OracleError::Spectral(e)
    }
}

impl From<PatternError> for OracleError {
    fn from(e: PatternError) -> Self {
        OracleError::Pattern(e)
    }
}

impl<T: Scalar> FarFieldScenario<T> {
    fn validate(&self, phase_count: usize) -> Result<(), OracleError> {
        if self.users.is_empty() {
            return Err(OracleError::InvalidScenario("no users"));
        }
        if self.bands.is_empty() {
            return Err(OracleError::InvalidScenario("no bands"));
        }
        if self.angles_deg.is_empty() {
            return Err(OracleError::InvalidScenario("empty angle grid"));
        }
        if self.angles_deg.windows(2).any(|w| !(w[0] < w[1])) {
            return Err(OracleError::InvalidScenario(
                "angle grid must strictly increase",
            ));
        }
        let needed = self.angles_deg.len() as u128 * phase_count as u128 * self.num_samples as u128;
        if needed > self.budget_samples {
            return Err(OracleError::BudgetExceeded {
                needed,
                budget: self.budget_samples,
            });
        }
        Ok(())
    }

    /// Per-user column phase gradients `-2π·(d_h/λ)·sin(beam φ)`.
    fn user_gradients(&self) -> Vec<T> {
        let (_, _, d_h) = self.array.layout();
        self.users
            .iter()
            .map(|u| -T::of(2.0) * T::PI() * d_h * u.beam_phi_deg.to_radians().sin())
            .collect()
    }
}

/// Per-band angular cuts under fixed beam excitation.
#[derive(Debug, Clone, PartialEq)]
pub struct FixedCutResult<T> {
    pub band_labels: Vec<String>,
    /// `[band][angle]` integrated power in dBm.
    pub cuts_dbm: Vec<Vec<T>>,
    pub angles_deg: Vec<T>,
    /// Per-band conducted per-branch power (mean over branches), dBm.
    pub conducted_dbm: Vec<T>,
    pub master_seed: u64,
}

/// Sweep result: per (angle, band) the full series over the phase grid and
/// its maximum.
#[derive(Debug, Clone, PartialEq)]
pub struct SweepResult<T> {
    pub band_labels: Vec<String>,
    pub angles_deg: Vec<T>,
    pub phase_grid_rad: Vec<T>,
    /// `[band][angle][phase]` integrated power in dBm.
    pub sweep_dbm: Vec<Vec<Vec<T>>>,
    /// `[band][angle]` max over the phase grid.
    pub max_dbm: Vec<Vec<T>>,
    /// Per-band conducted per-branch power (mean over branches), dBm.
    pub conducted_dbm: Vec<T>,
    pub master_seed: u64,
}

impl<T: Scalar> SweepResult<T> {
    pub fn band_index(&self, label: &str) -> Option<usize> {
        self.band_labels.iter().position(|l| l == label)
    }

    /// Max-over-sweep cut of one band as an `AngularCut`.
    pub fn max_cut(&self, band: usize) -> crate::envelope::AngularCut<T> {
        crate::envelope::AngularCut::new(
            self.angles_deg.clone(),
            self.max_dbm[band].clone(),
            self.band_labels[band].clone(),
        )
        .expect("sweep grids are valid by construction")
    }

    /// Largest (max - min) over the sweep at any angle of one band.
    pub fn worst_spread_db(&self, band: usize) -> T {
        let mut worst = T::zero();
        for series in &self.sweep_dbm[band] {
            let mut lo = T::infinity();
            let mut hi = T::neg_infinity();
            for &v in series {
                lo = lo.min(v);
                hi = hi.max(v);
            }
            worst = worst.max(hi - lo);
        }
        worst
    }
}

impl<T: Scalar> FixedCutResult<T> {
    pub fn band_index(&self, label: &str) -> Option<usize> {
        self.band_labels.iter().position(|l| l == label)
    }

    pub fn cut(&self, band: usize) -> crate::envelope::AngularCut<T> {
        crate::envelope::AngularCut::new(
            self.angles_deg.clone(),
            self.cuts_dbm[band].clone(),
            self.band_labels[band].clone(),
        )
        .expect("cut grids are valid by construction")
    }
}

/// Branch drive signals and noise draws for one scenario.
struct Sources<T> {
    /// Noiseless PA output per column at zero sweep offset.
    col_signals: Vec<Vec<Complex<T>>>,
    /// Noise realization per branch, row-major (m·cols + n).
    noises: Vec<Vec<Complex<T>>>,
    rows: usize,
    cols: usize,
    col_spacing: T,
}

impl<T: FftScalar> Sources<T> {
    fn build(scenario: &FarFieldScenario<T>) -> Result<Self, OracleError> {
        let (rows, cols, col_spacing) = scenario.array.layout();
        let users: Vec<UserSignal<T>> = scenario
            .users
            .iter()
            .enumerate()
            .map(|(k, u)| {
                generate_user_signal(
                    u.bandwidth_hz,
                    scenario.sample_rate_hz,
                    scenario.num_samples,
                    u.power_dbm,
                    derive_seed(scenario.master_seed, k as u64, SeedRole::UserSignal),
                )
                .map(|s| s.with_center_offset(u.center_offset_hz))
            })
            .collect::<Result<_, _>>()?;

        let gradients = scenario.user_gradients();
        let col_signals: Vec<Vec<Complex<T>>> = (0..cols)
            .map(|n| {
                let mut x = vec![Complex::new(T::zero(), T::zero()); scenario.num_samples];
                for (u, &grad) in users.iter().zip(gradients.iter()) {
                    let rot = Complex::from_polar(T::one(), grad * T::of(n as f64));
                    for (xi, &s) in x.iter_mut().zip(u.samples()) {
                        *xi = *xi + s * rot;
                    }
                }
                scenario.pa.noiseless_output(&x)
            })
            .collect();

        let noises: Vec<Vec<Complex<T>>> = (0..rows * cols)
            .map(|b| {
                noise_realization(
                    scenario.pa.noise_power_dbm(),
                    scenario.num_samples,
                    derive_seed(scenario.master_seed, b as u64, SeedRole::BranchNoise),
                )
            })
            .collect();

        Ok(Self {
            col_signals,
            noises,
            rows,
            cols,
            col_spacing,
        })
    }

    fn num_sources(&self) -> usize {
        self.cols + self.rows * self.cols
    }

    fn source(&self, z: usize) -> &[Complex<T>] {
        if z < self.cols {
            &self.col_signals[z]
        } else {
            &self.noises[z - self.cols]
        }
    }

    /// Combining coefficients at (angle, sweep offset): field pattern times
    /// geometric column phase, with the sweep gradient on signal sources
    /// only and row multiplicity folded onto the column signals.
    fn coefficients(
        &self,
        pattern: &ElementPatternParams<T>,
        phi_deg: T,
        sweep_offset_rad: T,
    ) -> Result<Vec<Complex<T>>, PatternError> {
        let field = pattern.field_amplitude(phi_deg)?;
        let theta = T::of(2.0) * T::PI() * self.col_spacing * phi_deg.to_radians().sin();
        let rows_t = T::of(self.rows as f64);
        let mut coeffs = Vec::with_capacity(self.num_sources());
        for n in 0..self.cols {
            let arg = T::of(n as f64) * (theta + sweep_offset_rad);
            coeffs.push(Complex::from_polar(field * rows_t, arg));
        }
        for b in 0..self.rows * self.cols {
            let n = b % self.cols;
            let arg = T::of(n as f64) * theta;
            coeffs.push(Complex::from_polar(field, arg));
        }
        Ok(coeffs)
    }
}

/// Welch cross-spectral matrix of all sources on a common segmentation.
struct CrossSpectra<T> {
    nsources: usize,
    nbins: usize,
    /// Upper-triangular entries in shifted bin order:
    /// `matrix[(z, z')][k] = avg X_z[k]·conj(X_z'[k])`, z <= z'.
    matrix: Vec<Vec<Complex<T>>>,
    bin_freqs_hz: Vec<T>,
    rbw_hz: T,
}

impl<T: FftScalar> CrossSpectra<T> {
    fn index(&self, z: usize, zp: usize) -> usize {
        // upper triangle, z <= zp
        z * self.nsources - z * (z + 1) / 2 + zp
    }

    fn build(sources: &Sources<T>, scenario: &FarFieldScenario<T>) -> Result<Self, OracleError> {
        let grid = WelchGrid::new(
            scenario.num_samples,
            scenario.sample_rate_hz,
            scenario.rbw_hz,
        )?;
        let nsources = sources.num_sources();
        let nbins = grid.nperseg;
        let npairs = nsources * (nsources + 1) / 2;
        let mut acc = vec![vec![Complex::new(T::zero(), T::zero()); nbins]; npairs];
        let mut ffts = vec![vec![Complex::new(T::zero(), T::zero()); nbins]; nsources];

        for s in 0..grid.num_segments {
            for (z, fft) in ffts.iter_mut().enumerate() {
                grid.segment_fft(sources.source(z), s, fft);
            }
            let mut pair = 0;
            for z in 0..nsources {
                for zp in z..nsources {
                    let (a, b) = (&ffts[z], &ffts[zp]);
                    let slot = &mut acc[pair];
                    for k in 0..nbins {
                        slot[k] = slot[k] + a[k] * b[k].conj();
                    }
                    pair += 1;
                }
            }
        }

        // scale and reorder into centered bins
        let mut matrix = vec![vec![Complex::new(T::zero(), T::zero()); nbins]; npairs];
        for (dst, src) in matrix.iter_mut().zip(acc.iter()) {
            for k in 0..nbins {
                dst[grid.shift_index(k)] = src[k].scale(grid.scale);
            }
        }

        Ok(Self {
            nsources,
            nbins,
            matrix,
            bin_freqs_hz: grid.bin_freqs(scenario.sample_rate_hz),
            rbw_hz: grid.rbw_hz,
        })
    }

    /// Band-integrated cross matrix (upper triangle).
    fn band_matrix(&self, band: &BandDefinition<T>) -> Result<Vec<Complex<T>>, SpectralError> {
        let range = bins_in_band(&self.bin_freqs_hz, self.rbw_hz, band)?;
        Ok(self
            .matrix
            .iter()
            .map(|bins| {
                bins[range.clone()]
                    .iter()
                    .fold(Complex::new(T::zero(), T::zero()), |acc, &v| acc + v)
            })
            .collect())
    }

    /// Quadratic form `Σ c_z conj(c_z') M[z,z']` over an integrated matrix.
    fn combine(&self, band_matrix: &[Complex<T>], coeffs: &[Complex<T>]) -> T {
        let mut total = T::zero();
        let mut pair = 0;
        for z in 0..self.nsources {
            let cz = coeffs[z];
            // diagonal
            total += cz.norm_sqr() * band_matrix[pair].re;
            pair += 1;
            for zp in z + 1..self.nsources {
                let cross = cz * coeffs[zp].conj() * band_matrix[pair];
                total += T::of(2.0) * cross.re;
                pair += 1;
            }
        }
        total
    }

    /// Full PSD (linear per-bin powers) for one coefficient vector.
    fn psd_linear(&self, coeffs: &[Complex<T>]) -> Vec<T> {
        let mut out = vec![T::zero(); self.nbins];
        let mut pair = 0;
        for z in 0..self.nsources {
            let cz = coeffs[z];
            let czn = cz.norm_sqr();
            let bins = &self.matrix[pair];
            for (o, v) in out.iter_mut().zip(bins.iter()) {
                *o += czn * v.re;
            }
            pair += 1;
            for zp in z + 1..self.nsources {
                let cc = cz * coeffs[zp].conj();
                let bins = &self.matrix[pair];
                for (o, v) in out.iter_mut().zip(bins.iter()) {
                    *o += T::of(2.0) * (cc * *v).re;
                }
                pair += 1;
            }
        }
        out
    }

    /// Mean conducted per-branch band power (signal + noise + cross term).
    fn conducted_linear(&self, sources: &Sources<T>, band_matrix: &[Complex<T>]) -> T {
        let branches = sources.rows * sources.cols;
        let mut total = T::zero();
        for b in 0..branches {
            let sig = b % sources.cols;
            let noi = sources.cols + b;
            total += band_matrix[self.index(sig, sig)].re;
            total += band_matrix[self.index(noi, noi)].re;
            total += T::of(2.0) * band_matrix[self.index(sig, noi)].re;
        }
        total / T::of(branches as f64)
    }
}

/// Far-field sample sequence at one angle:
/// `field(φ) · Σ_b (e^{j·n_b·δ}·s_b + w_b) · e^{jψ_b(φ)}`.
///
/// Direct synthesis; the sweep and cut entry points below are evaluated
/// through the cross-spectral engine instead, which this function anchors
/// in tests.
pub fn radiate<T: FftScalar>(
    scenario: &FarFieldScenario<T>,
    excitation: &Excitation<T>,
    phi_deg: T,
) -> Result<Vec<Complex<T>>, OracleError> {
    scenario.validate(1)?;
    let sources = Sources::build(scenario)?;
    let offset = match *excitation {
        Excitation::BeamsOnly => T::zero(),
        Excitation::SweepOffset(d) => d,
    };
    let field = scenario.pattern.field_amplitude(phi_deg)?;
    let theta = T::of(2.0) * T::PI() * sources.col_spacing * phi_deg.to_radians().sin();
    let mut far = vec![Complex::new(T::zero(), T::zero()); scenario.num_samples];
    for b in 0..sources.rows * sources.cols {
        let n = b % sources.cols;
        let geo = Complex::from_polar(field, T::of(n as f64) * theta);
        let sweep = Complex::from_polar(T::one(), T::of(n as f64) * offset);
        let sig = &sources.col_signals[n];
        let noi = &sources.noises[b];
        for i in 0..scenario.num_samples {
            far[i] = far[i] + (sig[i] * sweep + noi[i]) * geo;
        }
    }
    Ok(far)
}

/// Far-field PSD at one angle via the cross-spectral engine.
pub fn psd_at<T: FftScalar>(
    scenario: &FarFieldScenario<T>,
    excitation: &Excitation<T>,
    phi_deg: T,
) -> Result<Spectrum<T>, OracleError> {
    scenario.validate(1)?;
    let sources = Sources::build(scenario)?;
    let spectra = CrossSpectra::build(&sources, scenario)?;
    let offset = match *excitation {
        Excitation::BeamsOnly => T::zero(),
        Excitation::SweepOffset(d) => d,
    };
    let coeffs = sources.coefficients(&scenario.pattern, phi_deg, offset)?;
    let linear = spectra.psd_linear(&coeffs);
    Ok(Spectrum::from_linear(
        spectra.bin_freqs_hz.clone(),
        &linear,
        spectra.rbw_hz,
    ))
}

fn band_matrices<T: FftScalar>(
    spectra: &CrossSpectra<T>,
    bands: &[BandDefinition<T>],
) -> Result<Vec<Vec<Complex<T>>>, SpectralError> {
    bands.iter().map(|b| spectra.band_matrix(b)).collect()
}

/// Max-hold envelope over a full-turn sweep of the common excitation
/// gradient, per angle and band. Deterministic for a fixed seed, also under
/// parallel evaluation: angles are independent tasks reduced in grid order.
pub fn sweep_envelope<T: FftScalar>(
    scenario: &FarFieldScenario<T>,
) -> Result<SweepResult<T>, OracleError> {
    if scenario.phase_steps < 8 {
        return Err(OracleError::InvalidScenario(
            "phase sweep needs at least 8 steps",
        ));
    }
    scenario.validate(scenario.phase_steps)?;
    let sources = Sources::build(scenario)?;
    let spectra = CrossSpectra::build(&sources, scenario)?;
    let mats = band_matrices(&spectra, &scenario.bands)?;

    let phase_grid: Vec<T> = (0..scenario.phase_steps)
        .map(|p| T::of(2.0) * T::PI() * T::of(p as f64) / T::of(scenario.phase_steps as f64))
        .collect();

    // per angle: [band][phase] series
    let per_angle: Vec<Result<Vec<Vec<T>>, PatternError>> = scenario
        .angles_deg
        .par_iter()
        .map(|&phi| {
            let mut series = vec![Vec::with_capacity(phase_grid.len()); mats.len()];
            for &dp in &phase_grid {
                let coeffs = sources.coefficients(&scenario.pattern, phi, dp)?;
                for (bi, mat) in mats.iter().enumerate() {
                    series[bi].push(dbm_floored(spectra.combine(mat, &coeffs)));
                }
            }
            Ok(series)
        })
        .collect();

    let mut sweep_dbm = vec![Vec::with_capacity(scenario.angles_deg.len()); mats.len()];
    for angle_series in per_angle {
        let angle_series = angle_series?;
        for (bi, series) in angle_series.into_iter().enumerate() {
            sweep_dbm[bi].push(series);
        }
    }
    let max_dbm: Vec<Vec<T>> = sweep_dbm
        .iter()
        .map(|band| {
            band.iter()
                .map(|series| series.iter().fold(T::neg_infinity(), |acc, &v| acc.max(v)))
                .collect()
        })
        .collect();

    let conducted_dbm = mats
        .iter()
        .map(|m| dbm_floored(spectra.conducted_linear(&sources, m)))
        .collect();

    Ok(SweepResult {
        band_labels: scenario
            .bands
            .iter()
            .map(|b| b.label().to_string())
            .collect(),
        angles_deg: scenario.angles_deg.clone(),
        phase_grid_rad: phase_grid,
        sweep_dbm,
        max_dbm,
        conducted_dbm,
        master_seed: scenario.master_seed,
    })
}

/// Angular cuts under fixed beam steering (no sweep), any user count.
pub fn fixed_cut<T: FftScalar>(
    scenario: &FarFieldScenario<T>,
) -> Result<FixedCutResult<T>, OracleError> {
    scenario.validate(1)?;
    let sources = Sources::build(scenario)?;
    let spectra = CrossSpectra::build(&sources, scenario)?;
    let mats = band_matrices(&spectra, &scenario.bands)?;

    let per_angle: Vec<Result<Vec<T>, PatternError>> = scenario
        .angles_deg
        .par_iter()
        .map(|&phi| {
            let coeffs = sources.coefficients(&scenario.pattern, phi, T::zero())?;
            Ok(mats
                .iter()
                .map(|mat| dbm_floored(spectra.combine(mat, &coeffs)))
                .collect())
        })
        .collect();

    let mut cuts_dbm = vec![Vec::with_capacity(scenario.angles_deg.len()); mats.len()];
    for angle_values in per_angle {
        for (bi, v) in angle_values?.into_iter().enumerate() {
            cuts_dbm[bi].push(v);
        }
    }

    let conducted_dbm = mats
        .iter()
        .map(|m| dbm_floored(spectra.conducted_linear(&sources, m)))
        .collect();

    Ok(FixedCutResult {
        band_labels: scenario
            .bands
            .iter()
            .map(|b| b.label().to_string())
            .collect(),
        cuts_dbm,
        angles_deg: scenario.angles_deg.clone(),
        conducted_dbm,
        master_seed: scenario.master_seed,
    })
}

/// Two-user spatial dispersion cuts: fixed steering toward the two beam
/// targets, per-band angular cuts of the radiated power.
pub fn mu_cut<T: FftScalar>(
    scenario: &FarFieldScenario<T>,
) -> Result<FixedCutResult<T>, OracleError> {
    if scenario.users.len() != 2 {
        return Err(OracleError::InvalidScenario(
            "multi-user cut needs exactly two users",
        ));
    }
    fixed_cut(scenario)
}

/// Dominant component per band, measured at the branch-0 conducted output:
/// the linear part, the cubic residual and the branch noise are estimated
/// separately and the per-band winner picked with ties resolved
/// signal > IM3 > noise.
pub fn band_regions<T: FftScalar>(
    scenario: &FarFieldScenario<T>,
) -> Result<Vec<SpectralRegion>, OracleError> {
    scenario.validate(1)?;
    let users: Vec<UserSignal<T>> = scenario
        .users
        .iter()
        .enumerate()
        .map(|(k, u)| {
            generate_user_signal(
                u.bandwidth_hz,
                scenario.sample_rate_hz,
                scenario.num_samples,
                u.power_dbm,
                derive_seed(scenario.master_seed, k as u64, SeedRole::UserSignal),
            )
            .map(|s| s.with_center_offset(u.center_offset_hz))
        })
        .collect::<Result<_, _>>()?;
    let mut x = vec![Complex::new(T::zero(), T::zero()); scenario.num_samples];
    for u in &users {
        for (xi, &s) in x.iter_mut().zip(u.samples()) {
            *xi = *xi + s;
        }
    }
    let im3: Vec<Complex<T>> = scenario
        .pa
        .noiseless_output(&x)
        .into_iter()
        .zip(x.iter())
        .map(|(y, &xi)| y - xi)
        .collect();
    let noise = noise_realization(
        scenario.pa.noise_power_dbm(),
        scenario.num_samples,
        derive_seed(scenario.master_seed, 0, SeedRole::BranchNoise),
    );

    let psd = |samples: &[Complex<T>]| {
        crate::spectral::estimate_psd(samples, scenario.sample_rate_hz, scenario.rbw_hz)
    };
    let (sig_psd, im3_psd, noise_psd) = (psd(&x)?, psd(&im3)?, psd(&noise)?);

    scenario
        .bands
        .iter()
        .map(|band| {
            let p_sig = crate::spectral::integrate_band(&sig_psd, band)?;
            let p_im3 = crate::spectral::integrate_band(&im3_psd, band)?;
            let p_noi = crate::spectral::integrate_band(&noise_psd, band)?;
            Ok(if p_sig >= p_im3 && p_sig >= p_noi {
                SpectralRegion::SignalDominated
            } else if p_im3 >= p_noi {
                SpectralRegion::Im3Dominated
            } else {
                SpectralRegion::NoiseDominated
            })
        })
        .collect()
}

/// Conducted per-branch band powers (mean over branches) without running
/// an angular cut.
pub fn conducted_band_powers<T: FftScalar>(
    scenario: &FarFieldScenario<T>,
) -> Result<Vec<T>, OracleError> {
    scenario.validate(1)?;
    let sources = Sources::build(scenario)?;
    let spectra = CrossSpectra::build(&sources, scenario)?;
    let mats = band_matrices(&spectra, &scenario.bands)?;
    Ok(mats
        .iter()
        .map(|m| dbm_floored(spectra.conducted_linear(&sources, m)))
        .collect())
}

/// Linear sum of dBm powers, back in dBm. Used when pooling user powers
/// into a single-user reference drive.
pub fn sum_powers_dbm<T: Scalar>(powers_dbm: &[T]) -> T {
    dbm_floored(powers_dbm.iter().map(|&p| linear_from_db(p)).sum())
}
