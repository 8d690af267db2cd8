//! Subcommand implementations.
//!
//! Every analytic envelope a command emits is anchored on conducted
//! per-branch powers measured from the scenario's own waveforms, mirroring
//! the measurement-first methodology: the envelope contributes the angular
//! shape and the combining gain, the waveform provides the level.

use std::path::Path;

use anyhow::{anyhow, bail, Context, Result};
use serde::Serialize;

use aasenv_core::envelope::{
    apply_margins, check_mu_bound, eirp_noise_two_element, envelope_coherent_aas,
    envelope_noise_aas, envelope_signal, mu_im_directions, AngularCut, ImDirection, RegimePowers,
};
use aasenv_core::oracle::{
    band_regions, conducted_band_powers, fixed_cut, mu_cut, sum_powers_dbm, sweep_envelope,
    ArrayModel,
};
use aasenv_core::spectral::{classify_regions, estimate_psd, SpectralRegion};
use aasenv_core::units::linear_from_db;
use aasenv_core::waveform::{
    decompose_two_user, derive_seed, generate_user_signal, write_iq64, BranchAssignment,
    Iq64Header, SeedRole, UserSignal,
};
use num_complex::Complex;

use crate::config::ScenarioConfig;
use crate::output::{
    artifact_name, write_cuts_csv, write_json, write_regions_csv, write_spectrum_csv,
    write_sweep_csv, write_sweep_metadata, OutDirs,
};

// Oracle-agreement tolerances, all in dB.
const TOL_SIGNAL_CLEAN: f64 = 0.1;
const TOL_SIGNAL: f64 = 0.3;
const TOL_IM3: f64 = 0.5;
const TOL_NOISE_SPREAD: f64 = 0.5;
const TOL_NOISE_LEVEL: f64 = 0.3;
const TOL_NOISE_SHAPE: f64 = 0.3;
/// Estimation slack when requiring a cut to stay below its envelope.
const TOL_STEER_EXCESS: f64 = 0.15;
/// Envelope tightness at the steered peak.
const TOL_STEER_PEAK_GAP: f64 = 1.0;
/// Slack of the multi-user bound check.
const MU_BOUND_SLACK: f64 = 0.5;

/// Which combining law anchors an envelope.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum RegimeKind {
    Coherent,
    Incoherent,
}

/// Envelope cut for one band power under the simulated (single
/// polarization) branch layout.
fn regime_envelope_cut(
    cfg: &ScenarioConfig,
    band_power_dbm: f64,
    kind: RegimeKind,
    angles: &[f64],
    label: &str,
) -> Result<AngularCut<f64>> {
    let pattern = cfg.element_pattern()?;
    let cut = match (cfg.aas_single_polarization()?, kind) {
        (None, RegimeKind::Coherent) => {
            let powers = RegimePowers {
                p_e_dbm: Some(band_power_dbm),
                ..Default::default()
            };
            envelope_signal(&powers, &pattern, angles)?
        }
        (None, RegimeKind::Incoherent) => {
            let powers = RegimePowers {
                p_noise_dbm: Some(band_power_dbm),
                ..Default::default()
            };
            let values = angles
                .iter()
                .map(|&phi| eirp_noise_two_element(&powers, &pattern, phi))
                .collect::<Result<Vec<_>, _>>()?;
            AngularCut::new(angles.to_vec(), values, "noise")?
        }
        (Some(g), RegimeKind::Coherent) => {
            let powers = RegimePowers {
                p_sub_dbm: Some(band_power_dbm),
                ..Default::default()
            };
            envelope_coherent_aas(&powers, &pattern, &g, angles)?
        }
        (Some(g), RegimeKind::Incoherent) => {
            let powers = RegimePowers {
                p_noise_s_dbm: Some(band_power_dbm),
                ..Default::default()
            };
            envelope_noise_aas(&powers, &pattern, &g, angles)?
        }
    };
    Ok(cut.with_label(label))
}

fn shift_cut(cut: &AngularCut<f64>, db: f64) -> AngularCut<f64> {
    AngularCut::new(
        cut.angles_deg().to_vec(),
        cut.values_db().iter().map(|v| v + db).collect(),
        cut.label(),
    )
    .expect("shifting preserves the grid")
}

fn maybe_normalized(cut: &AngularCut<f64>, normalize: bool) -> AngularCut<f64> {
    if normalize {
        cut.normalized_to_boresight()
    } else {
        cut.clone()
    }
}

// ---------------------------------------------------------------------------
// envelope
// ---------------------------------------------------------------------------

#[derive(Debug, Serialize)]
pub struct EnvelopeReport {
    pub scenario: String,
    pub seed: u64,
    pub coherent_offset_db: f64,
    pub incoherent_offset_db: f64,
    pub margins_in_band_db: f64,
    pub margins_oob_db: f64,
    pub bands: Vec<BandPowerRow>,
    pub regimes: Vec<RegimeRow>,
}

#[derive(Debug, Serialize)]
pub struct BandPowerRow {
    pub label: String,
    pub region: String,
    pub conducted_dbm: f64,
}

#[derive(Debug, Serialize)]
pub struct RegimeRow {
    pub regime: String,
    pub anchored_power_dbm: f64,
    pub boresight_envelope_dbm: f64,
    pub boresight_bound_dbm: f64,
}

fn region_name(r: SpectralRegion) -> &'static str {
    match r {
        SpectralRegion::SignalDominated => "signal",
        SpectralRegion::Im3Dominated => "im3",
        SpectralRegion::NoiseDominated => "noise",
    }
}

/// Pool the conducted power of all bands sharing a dominant region.
fn pooled_power(
    conducted: &[f64],
    regions: &[SpectralRegion],
    which: SpectralRegion,
) -> Option<f64> {
    let linear: f64 = conducted
        .iter()
        .zip(regions)
        .filter(|(_, &r)| r == which)
        .map(|(&p, _)| linear_from_db(p))
        .sum();
    if linear > 0.0 {
        Some(10.0 * linear.log10())
    } else {
        None
    }
}

/// Write analytic envelope cuts for every regime plus margined bounds.
pub fn run_envelope(
    cfg: &ScenarioConfig,
    name: &str,
    out: &Path,
    seed: Option<u64>,
    budget: Option<u128>,
    normalize: bool,
) -> Result<EnvelopeReport> {
    let scenario = cfg.to_scenario(seed, budget)?;
    let dirs = OutDirs::create(out)?;
    let conducted = conducted_band_powers(&scenario).map_err(|e| anyhow!("{e}"))?;
    let regions = band_regions(&scenario).map_err(|e| anyhow!("{e}"))?;
    let angles = cfg.angle_grid();
    let margins = cfg.margins();
    let pattern = cfg.element_pattern()?;

    // Envelope offsets honoring the configured polarizations (the
    // analytic product, unlike the single-polarization oracle).
    let full_model = cfg.array_model()?;
    let (coh_offset, incoh_offset) = match &full_model {
        ArrayModel::TwoElement(_) => (
            aasenv_core::envelope::coherent_pair_gain_db::<f64>(),
            aasenv_core::envelope::incoherent_pair_gain_db::<f64>(),
        ),
        ArrayModel::Grid(g) => (
            aasenv_core::envelope::coherent_aas_offset_db(g),
            aasenv_core::envelope::noise_aas_offset_db(g),
        ),
    };

    let mut report = EnvelopeReport {
        scenario: name.to_string(),
        seed: scenario.master_seed,
        coherent_offset_db: coh_offset,
        incoherent_offset_db: incoh_offset,
        margins_in_band_db: margins.in_band_db,
        margins_oob_db: margins.oob_db,
        bands: conducted
            .iter()
            .zip(&regions)
            .zip(&scenario.bands)
            .map(|((&p, &r), b)| BandPowerRow {
                label: b.label().to_string(),
                region: region_name(r).to_string(),
                conducted_dbm: p,
            })
            .collect(),
        regimes: Vec::new(),
    };

    let full_cut = |power: f64, kind: RegimeKind, label: &str| -> Result<AngularCut<f64>> {
        match (&full_model, kind) {
            (ArrayModel::TwoElement(_), RegimeKind::Coherent) => {
                let powers = RegimePowers {
                    p_e_dbm: Some(power),
                    ..Default::default()
                };
                Ok(envelope_signal(&powers, &pattern, &angles)?.with_label(label))
            }
            (ArrayModel::TwoElement(_), RegimeKind::Incoherent) => {
                let powers = RegimePowers {
                    p_noise_dbm: Some(power),
                    ..Default::default()
                };
                let values = angles
                    .iter()
                    .map(|&phi| eirp_noise_two_element(&powers, &pattern, phi))
                    .collect::<Result<Vec<_>, _>>()?;
                Ok(AngularCut::new(angles.clone(), values, label)?)
            }
            (ArrayModel::Grid(g), RegimeKind::Coherent) => {
                let powers = RegimePowers {
                    p_sub_dbm: Some(power),
                    ..Default::default()
                };
                Ok(envelope_coherent_aas(&powers, &pattern, g, &angles)?.with_label(label))
            }
            (ArrayModel::Grid(g), RegimeKind::Incoherent) => {
                let powers = RegimePowers {
                    p_noise_s_dbm: Some(power),
                    ..Default::default()
                };
                Ok(envelope_noise_aas(&powers, &pattern, g, &angles)?.with_label(label))
            }
        }
    };

    let regimes: [(&str, SpectralRegion, RegimeKind); 3] = [
        (
            "signal",
            SpectralRegion::SignalDominated,
            RegimeKind::Coherent,
        ),
        ("im3", SpectralRegion::Im3Dominated, RegimeKind::Coherent),
        (
            "noise",
            SpectralRegion::NoiseDominated,
            RegimeKind::Incoherent,
        ),
    ];
    let mut bound_cuts: Vec<AngularCut<f64>> = Vec::new();
    for (regime, region, kind) in regimes {
        let Some(power) = pooled_power(&conducted, &regions, region) else {
            continue;
        };
        let cut = full_cut(power, kind, &format!("{regime}_envelope"))?;
        let bound = apply_margins(&cut, &margins, region);
        report.regimes.push(RegimeRow {
            regime: regime.to_string(),
            anchored_power_dbm: power,
            boresight_envelope_dbm: cut.boresight_value_db(),
            boresight_bound_dbm: bound.boresight_value_db(),
        });
        let path = dirs.cuts.join(artifact_name(
            name,
            scenario.master_seed,
            &format!("envelope_{regime}"),
            "csv",
        ));
        write_cuts_csv(&path, &[&maybe_normalized(&cut, normalize)])?;
        bound_cuts.push(maybe_normalized(&bound, normalize));
    }
    let bound_path = dirs.cuts.join(artifact_name(
        name,
        scenario.master_seed,
        "envelope_bound",
        "csv",
    ));
    write_cuts_csv(&bound_path, &bound_cuts.iter().collect::<Vec<_>>())?;
    write_json(
        &dirs.reports.join(artifact_name(
            name,
            scenario.master_seed,
            "envelope_report",
            "json",
        )),
        &report,
    )?;
    Ok(report)
}

// ---------------------------------------------------------------------------
// validate
// ---------------------------------------------------------------------------

#[derive(Debug, Serialize)]
pub struct ClaimResult {
    pub name: String,
    pub band: String,
    pub tolerance_db: f64,
    pub deviation_db: f64,
    pub pass: bool,
}

#[derive(Debug, Serialize)]
pub struct SteeredRow {
    pub steering_deg: f64,
    pub band: String,
    pub peak_deg: f64,
    /// Envelope minus cut at the cut's peak (bound tightness).
    pub peak_gap_db: f64,
    /// Largest cut-over-envelope excess anywhere on the grid.
    pub max_excess_db: f64,
    pub pass: bool,
}

#[derive(Debug, Serialize)]
pub struct PeakCoincidenceRow {
    pub steering_deg: f64,
    pub in_band_peak_deg: f64,
    pub adjacent_peak_deg: f64,
    pub grid_step_deg: f64,
    pub pass: bool,
}

#[derive(Debug, Serialize)]
pub struct ValidateReport {
    pub scenario: String,
    pub seed: u64,
    pub claims: Vec<ClaimResult>,
    pub steered: Vec<SteeredRow>,
    pub coincidence: Vec<PeakCoincidenceRow>,
    pub skipped: Vec<String>,
    pub pass: bool,
}

impl ValidateReport {
    pub fn render_text(&self) -> String {
        let mut text = format!("validate scenario={} seed={}\n", self.scenario, self.seed);
        for c in &self.claims {
            text.push_str(&format!(
                "{} {} band={} deviation={:.3} dB (tol {:.2})\n",
                if c.pass { "PASS" } else { "FAIL" },
                c.name,
                c.band,
                c.deviation_db,
                c.tolerance_db
            ));
        }
        for row in &self.coincidence {
            text.push_str(&format!(
                "{} steered_peak_coincidence steer={:+.1} in_band_peak={:+.1} adjacent_peak={:+.1}\n",
                if row.pass { "PASS" } else { "FAIL" },
                row.steering_deg,
                row.in_band_peak_deg,
                row.adjacent_peak_deg
            ));
        }
        for row in &self.steered {
            text.push_str(&format!(
                "{} steered_bound steer={:+.1} band={} peak={:+.1} gap_at_peak={:.3} dB max_excess={:.3} dB\n",
                if row.pass { "PASS" } else { "FAIL" },
                row.steering_deg,
                row.band,
                row.peak_deg,
                row.peak_gap_db,
                row.max_excess_db
            ));
        }
        for s in &self.skipped {
            text.push_str(&format!("SKIP {s}\n"));
        }
        text.push_str(&format!(
            "overall: {}\n",
            if self.pass { "PASS" } else { "FAIL" }
        ));
        text
    }
}

fn max_abs_deviation(a: &AngularCut<f64>, b: &AngularCut<f64>) -> f64 {
    a.values_db()
        .iter()
        .zip(b.values_db())
        .map(|(x, y)| (x - y).abs())
        .fold(0.0, f64::max)
}

/// Run the oracle against the analytic envelopes and report per-claim
/// pass/fail. `corrupt_envelope_db` shifts every analytic envelope and is a
/// fault-injection hook for tests.
pub fn run_validate(
    cfg: &ScenarioConfig,
    name: &str,
    out: Option<&Path>,
    seed: Option<u64>,
    budget: Option<u128>,
    corrupt_envelope_db: f64,
) -> Result<ValidateReport> {
    let scenario = cfg.to_scenario(seed, budget)?;
    let regions = band_regions(&scenario).map_err(|e| anyhow!("{e}"))?;
    let sweep = sweep_envelope(&scenario).map_err(|e| anyhow!("{e}"))?;
    let pattern = cfg.element_pattern()?;
    let noiseless_linear = cfg.pa.alpha_re == 0.0
        && cfg.pa.alpha_im == 0.0
        && cfg.pa.noise_power_dbm == f64::NEG_INFINITY;

    let mut report = ValidateReport {
        scenario: name.to_string(),
        seed: scenario.master_seed,
        claims: Vec::new(),
        steered: Vec::new(),
        coincidence: Vec::new(),
        skipped: Vec::new(),
        pass: true,
    };

    let incoherent_gain = scenario.array.incoherent_gain_db();

    for (bi, region) in regions.iter().enumerate() {
        let label = sweep.band_labels[bi].clone();
        let conducted = sweep.conducted_dbm[bi];
        let measured = sweep.max_cut(bi);
        if conducted <= aasenv_core::units::DBM_FLOOR + 1.0 {
            report
                .skipped
                .push(format!("band={label}: conducted power at the floor"));
            continue;
        }
        match region {
            SpectralRegion::SignalDominated => {
                let env = shift_cut(
                    &regime_envelope_cut(
                        cfg,
                        conducted,
                        RegimeKind::Coherent,
                        &scenario.angles_deg,
                        "signal",
                    )?,
                    corrupt_envelope_db,
                );
                let tol = if noiseless_linear {
                    TOL_SIGNAL_CLEAN
                } else {
                    TOL_SIGNAL
                };
                let dev = max_abs_deviation(&measured, &env);
                report.claims.push(ClaimResult {
                    name: "signal_envelope_match".into(),
                    band: label,
                    tolerance_db: tol,
                    deviation_db: dev,
                    pass: dev <= tol,
                });
            }
            SpectralRegion::Im3Dominated => {
                if cfg.pa.alpha_re == 0.0 && cfg.pa.alpha_im == 0.0 {
                    report
                        .skipped
                        .push(format!("im3_envelope_match band={label}: alpha is zero"));
                    continue;
                }
                let env = shift_cut(
                    &regime_envelope_cut(
                        cfg,
                        conducted,
                        RegimeKind::Coherent,
                        &scenario.angles_deg,
                        "im3",
                    )?,
                    corrupt_envelope_db,
                );
                let dev = max_abs_deviation(&measured, &env);
                report.claims.push(ClaimResult {
                    name: "im3_envelope_match".into(),
                    band: label,
                    tolerance_db: TOL_IM3,
                    deviation_db: dev,
                    pass: dev <= TOL_IM3,
                });
            }
            SpectralRegion::NoiseDominated => {
                if cfg.pa.noise_power_dbm == f64::NEG_INFINITY {
                    report
                        .skipped
                        .push(format!("noise claims band={label}: noise disabled"));
                    continue;
                }
                let spread = sweep.worst_spread_db(bi);
                report.claims.push(ClaimResult {
                    name: "noise_flatness".into(),
                    band: label.clone(),
                    tolerance_db: TOL_NOISE_SPREAD,
                    deviation_db: spread,
                    pass: spread <= TOL_NOISE_SPREAD,
                });

                let boresight = measured.boresight_value_db();
                let expect =
                    conducted + pattern.g_e_max_dbi() + incoherent_gain + corrupt_envelope_db;
                let dev = (boresight - expect).abs();
                report.claims.push(ClaimResult {
                    name: "noise_boresight_level".into(),
                    band: label.clone(),
                    tolerance_db: TOL_NOISE_LEVEL,
                    deviation_db: dev,
                    pass: dev <= TOL_NOISE_LEVEL,
                });

                let env = shift_cut(
                    &regime_envelope_cut(
                        cfg,
                        conducted,
                        RegimeKind::Incoherent,
                        &scenario.angles_deg,
                        "noise",
                    )?,
                    corrupt_envelope_db,
                );
                let dev = max_abs_deviation(&measured, &env);
                report.claims.push(ClaimResult {
                    name: "noise_envelope_match".into(),
                    band: label,
                    tolerance_db: TOL_NOISE_SHAPE,
                    deviation_db: dev,
                    pass: dev <= TOL_NOISE_SHAPE,
                });
            }
        }
    }

    // Steered pass: fixed beams at each configured steering angle.
    if !cfg.grids.steering_phis_deg.is_empty() {
        let signal_band = regions
            .iter()
            .position(|&r| r == SpectralRegion::SignalDominated);
        let im3_band = regions
            .iter()
            .position(|&r| r == SpectralRegion::Im3Dominated);
        for &steer in &cfg.grids.steering_phis_deg {
            let mut steered_scenario = scenario.clone();
            for user in steered_scenario.users.iter_mut() {
                user.beam_phi_deg = steer;
            }
            let cut = fixed_cut(&steered_scenario).map_err(|e| anyhow!("{e}"))?;

            if let (Some(si), Some(ii)) = (signal_band, im3_band) {
                let in_peak = cut.cut(si).peak_index();
                let adj_peak = cut.cut(ii).peak_index();
                let in_deg = cut.angles_deg[in_peak];
                let adj_deg = cut.angles_deg[adj_peak];
                let step = cfg.grids.angle_step_deg;
                let pass = (in_deg - adj_deg).abs() <= step + 1e-9;
                report.coincidence.push(PeakCoincidenceRow {
                    steering_deg: steer,
                    in_band_peak_deg: in_deg,
                    adjacent_peak_deg: adj_deg,
                    grid_step_deg: step,
                    pass,
                });
            }

            for (bi, kind_label) in [(signal_band, "signal"), (im3_band, "im3")] {
                let Some(bi) = bi else { continue };
                let measured = cut.cut(bi);
                let env = shift_cut(
                    &regime_envelope_cut(
                        cfg,
                        cut.conducted_dbm[bi],
                        RegimeKind::Coherent,
                        &scenario.angles_deg,
                        kind_label,
                    )?,
                    corrupt_envelope_db,
                );
                let peak = measured.peak_index();
                let peak_gap = env.values_db()[peak] - measured.values_db()[peak];
                let max_excess = measured
                    .values_db()
                    .iter()
                    .zip(env.values_db())
                    .map(|(m, e)| m - e)
                    .fold(f64::NEG_INFINITY, f64::max);
                let pass = peak_gap.abs() <= TOL_STEER_PEAK_GAP && max_excess <= TOL_STEER_EXCESS;
                report.steered.push(SteeredRow {
                    steering_deg: steer,
                    band: sweep.band_labels[bi].clone(),
                    peak_deg: measured.angles_deg()[peak],
                    peak_gap_db: peak_gap,
                    max_excess_db: max_excess,
                    pass,
                });
            }
        }
    }

    report.pass = report.claims.iter().all(|c| c.pass)
        && report.steered.iter().all(|r| r.pass)
        && report.coincidence.iter().all(|r| r.pass);

    if let Some(out) = out {
        let dirs = OutDirs::create(out)?;
        let base = artifact_name(name, scenario.master_seed, "validate_report", "json");
        write_json(&dirs.reports.join(base), &report)?;
        std::fs::write(
            dirs.reports.join(artifact_name(
                name,
                scenario.master_seed,
                "validate_report",
                "txt",
            )),
            report.render_text(),
        )?;
        let sweep_path = dirs.reports.join(artifact_name(
            name,
            scenario.master_seed,
            "sweep_max",
            "csv",
        ));
        write_sweep_csv(&sweep_path, &sweep)?;
        write_sweep_metadata(
            &dirs.reports.join(artifact_name(
                name,
                scenario.master_seed,
                "sweep_max",
                "meta.txt",
            )),
            &sweep,
            cfg.pa.alpha_re,
            cfg.pa.alpha_im,
        )?;
    }
    Ok(report)
}

// ---------------------------------------------------------------------------
// mu
// ---------------------------------------------------------------------------

#[derive(Debug, Serialize)]
pub struct ImDirectionRow {
    pub kind: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub phi_deg: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub sine: Option<f64>,
}

impl From<ImDirection<f64>> for ImDirectionRow {
    fn from(d: ImDirection<f64>) -> Self {
        match d {
            ImDirection::Visible { phi_deg } => Self {
                kind: "visible".into(),
                phi_deg: Some(phi_deg),
                sine: None,
            },
            ImDirection::Invisible { sine } => Self {
                kind: "invisible".into(),
                phi_deg: None,
                sine: Some(sine),
            },
        }
    }
}

#[derive(Debug, Serialize)]
pub struct MuBandBound {
    pub band: String,
    pub worst_margin_db: f64,
    pub worst_angle_deg: f64,
    pub slack_db: f64,
    pub pass: bool,
}

#[derive(Debug, Serialize)]
pub struct MuReport {
    pub scenario: String,
    pub seed: u64,
    pub user_beams_deg: [f64; 2],
    pub predicted_im_directions: [ImDirectionRow; 2],
    pub bounds: Vec<MuBandBound>,
    pub pass: bool,
}

/// Two-user dispersion cuts, predicted IM directions and the bound check
/// against the pooled-power single-user boresight envelope.
pub fn run_mu(
    cfg: &ScenarioConfig,
    name: &str,
    out: &Path,
    seed: Option<u64>,
    budget: Option<u128>,
    normalize: bool,
) -> Result<MuReport> {
    if cfg.users.len() != 2 {
        bail!(
            "mu needs exactly two [[users]] entries, config has {}",
            cfg.users.len()
        );
    }
    let scenario = cfg.to_scenario(seed, budget)?;
    let dirs = OutDirs::create(out)?;
    let cut = mu_cut(&scenario).map_err(|e| anyhow!("{e}"))?;

    let (phi1, phi2) = (cfg.users[0].beam_phi_deg, cfg.users[1].beam_phi_deg);
    let (b1, b2) = mu_im_directions(phi1, phi2)?;

    // single-user reference: all power pooled into one boresight beam
    let mut su = scenario.clone();
    let pooled = sum_powers_dbm(&[cfg.users[0].power_dbm, cfg.users[1].power_dbm]);
    su.users = vec![aasenv_core::oracle::UserSpec {
        power_dbm: pooled,
        bandwidth_hz: cfg.users[0].bandwidth_hz,
        center_offset_hz: cfg.users[0].center_offset_hz,
        beam_phi_deg: 0.0,
    }];
    let su_conducted = conducted_band_powers(&su).map_err(|e| anyhow!("{e}"))?;
    let su_regions = band_regions(&su).map_err(|e| anyhow!("{e}"))?;

    let mut bounds = Vec::new();
    let mut cuts_for_csv = Vec::new();
    for bi in 0..cut.band_labels.len() {
        let mu_band_cut = cut.cut(bi);
        let kind = match su_regions[bi] {
            SpectralRegion::NoiseDominated => RegimeKind::Incoherent,
            _ => RegimeKind::Coherent,
        };
        let su_env = regime_envelope_cut(
            cfg,
            su_conducted[bi],
            kind,
            &scenario.angles_deg,
            &format!("su_envelope_{}", cut.band_labels[bi]),
        )?;
        let check = check_mu_bound(&mu_band_cut, &su_env, MU_BOUND_SLACK)?;
        bounds.push(MuBandBound {
            band: cut.band_labels[bi].clone(),
            worst_margin_db: check.worst_margin_db,
            worst_angle_deg: check.worst_angle_deg,
            slack_db: check.slack_db,
            pass: check.pass,
        });
        cuts_for_csv.push(maybe_normalized(&mu_band_cut, normalize));
    }

    let report = MuReport {
        scenario: name.to_string(),
        seed: scenario.master_seed,
        user_beams_deg: [phi1, phi2],
        predicted_im_directions: [b1.into(), b2.into()],
        bounds,
        pass: true,
    };
    let report = MuReport {
        pass: report.bounds.iter().all(|b| b.pass),
        ..report
    };

    write_cuts_csv(
        &dirs
            .cuts
            .join(artifact_name(name, scenario.master_seed, "mu_cuts", "csv")),
        &cuts_for_csv.iter().collect::<Vec<_>>(),
    )?;
    write_json(
        &dirs.reports.join(artifact_name(
            name,
            scenario.master_seed,
            "mu_report",
            "json",
        )),
        &report,
    )?;
    Ok(report)
}

// ---------------------------------------------------------------------------
// psd
// ---------------------------------------------------------------------------

/// Dump branch-level component spectra (linear, the three IM3 groups,
/// noise, total) plus the per-bin region classification.
pub fn run_psd(
    cfg: &ScenarioConfig,
    name: &str,
    out: &Path,
    seed: Option<u64>,
    budget: Option<u128>,
    branch: usize,
    dump_iq: bool,
) -> Result<()> {
    if cfg.users.is_empty() || cfg.users.len() > 2 {
        bail!(
            "psd supports one or two [[users]] entries, config has {}",
            cfg.users.len()
        );
    }
    let scenario = cfg.to_scenario(seed, budget)?;
    let dirs = OutDirs::create(out)?;
    let master = scenario.master_seed;
    let branches = scenario.array.num_branches();
    if branch < 1 || branch > branches {
        bail!("--branch must be in 1..={branches}");
    }
    let branch_idx = branch - 1;

    let fs = cfg.grids.sample_rate_hz;
    let build_user = |k: usize| -> Result<UserSignal<f64>> {
        let u = &cfg.users[k];
        Ok(generate_user_signal(
            u.bandwidth_hz,
            fs,
            cfg.grids.num_samples,
            u.power_dbm,
            derive_seed(master, k as u64, SeedRole::UserSignal),
        )
        .map_err(|e| anyhow!("{e}"))?
        .with_center_offset(u.center_offset_hz))
    };
    let u1 = build_user(0)?;
    let u2 = if cfg.users.len() == 2 {
        build_user(1)?
    } else {
        generate_user_signal(
            cfg.users[0].bandwidth_hz,
            fs,
            cfg.grids.num_samples,
            f64::NEG_INFINITY,
            derive_seed(master, 1, SeedRole::UserSignal),
        )
        .map_err(|e| anyhow!("{e}"))?
    };

    // per-branch excitation phases from the column gradients
    let (_, cols, d_h) = match cfg.array_model()? {
        ArrayModel::TwoElement(arr) => (1usize, 2usize, arr.spacing_wavelengths()),
        ArrayModel::Grid(g) => (g.rows_m(), g.cols_n(), g.d_h_wavelengths()),
    };
    let gradient =
        |beam_deg: f64| -> f64 { -2.0 * std::f64::consts::PI * d_h * beam_deg.to_radians().sin() };
    let beams = [
        cfg.users[0].beam_phi_deg,
        cfg.users.get(1).map(|u| u.beam_phi_deg).unwrap_or(0.0),
    ];
    let phases: Vec<Vec<f64>> = beams
        .iter()
        .map(|&b| {
            (0..branches)
                .map(|idx| (idx % cols) as f64 * gradient(b))
                .collect()
        })
        .collect();
    let assignment = BranchAssignment::new(phases).map_err(|e| anyhow!("{e}"))?;

    let noise_seed = derive_seed(master, branch_idx as u64, SeedRole::BranchNoise);
    let d = decompose_two_user(&scenario.pa, &u1, &u2, &assignment, branch_idx, noise_seed)
        .map_err(|e| anyhow!("{e}"))?;

    let alpha = scenario.pa.alpha();
    let scale =
        |v: &[Complex<f64>]| -> Vec<Complex<f64>> { v.iter().map(|&s| alpha * s).collect() };
    let total = d.reconstruct(alpha);
    let im3_total = d.im3_total(alpha);

    let rbw = cfg.grids.rbw_hz;
    let components: [(&str, Vec<Complex<f64>>); 6] = [
        ("linear", d.linear.clone()),
        ("self_distortion", scale(&d.self_distortion)),
        ("cross_a", scale(&d.cross_a)),
        ("cross_b", scale(&d.cross_b)),
        ("noise", d.noise.clone()),
        ("total", total.clone()),
    ];
    for (label, samples) in &components {
        let spec = estimate_psd(samples, fs, rbw).map_err(|e| anyhow!("{e}"))?;
        write_spectrum_csv(
            &dirs
                .spectra
                .join(artifact_name(name, master, &format!("psd_{label}"), "csv")),
            &spec,
        )?;
    }

    let sig_psd = estimate_psd(&d.linear, fs, rbw).map_err(|e| anyhow!("{e}"))?;
    let im3_psd = estimate_psd(&im3_total, fs, rbw).map_err(|e| anyhow!("{e}"))?;
    let noise_psd = estimate_psd(&d.noise, fs, rbw).map_err(|e| anyhow!("{e}"))?;
    let regions = classify_regions(&sig_psd, &im3_psd, &noise_psd).map_err(|e| anyhow!("{e}"))?;
    write_regions_csv(
        &dirs
            .spectra
            .join(artifact_name(name, master, "regions", "csv")),
        sig_psd.bin_freqs_hz(),
        &regions,
    )?;

    if dump_iq {
        write_iq64(
            &dirs
                .spectra
                .join(artifact_name(name, master, "branch_output", "iq64")),
            &total,
            &Iq64Header {
                sample_rate_hz: fs,
                power_dbm: 10.0
                    * (total.iter().map(|c| c.norm_sqr()).sum::<f64>() / total.len() as f64)
                        .log10(),
                seed: master,
            },
        )
        .context("writing branch iq64")?;
    }
    Ok(())
}

// ---------------------------------------------------------------------------
// config-dump
// ---------------------------------------------------------------------------

pub fn run_config_dump(cfg: &ScenarioConfig, out: Option<&Path>) -> Result<String> {
    let text = cfg.dump()?;
    if let Some(path) = out {
        std::fs::write(path, &text).with_context(|| format!("writing {}", path.display()))?;
    }
    Ok(text)
}
