//! Deterministic CSV and JSON artifact writers.
//!
//! All floats are written with fixed decimal counts so identical runs
//! produce byte-identical files.

use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use serde::Serialize;

use aasenv_core::envelope::AngularCut;
use aasenv_core::oracle::SweepResult;
use aasenv_core::spectral::{SpectralRegion, Spectrum};

/// Fixed output directory layout under `--out`.
pub struct OutDirs {
    pub cuts: PathBuf,
    pub spectra: PathBuf,
    pub reports: PathBuf,
}

impl OutDirs {
    pub fn create(out: &Path) -> Result<Self> {
        let dirs = Self {
            cuts: out.join("cuts"),
            spectra: out.join("spectra"),
            reports: out.join("reports"),
        };
        for d in [&dirs.cuts, &dirs.spectra, &dirs.reports] {
            fs::create_dir_all(d).with_context(|| format!("creating {}", d.display()))?;
        }
        Ok(dirs)
    }
}

/// `<scenario>_seed<seed>_<what>.<ext>`
pub fn artifact_name(scenario: &str, seed: u64, what: &str, ext: &str) -> String {
    format!("{scenario}_seed{seed}_{what}.{ext}")
}

fn write_text(path: &Path, text: &str) -> Result<()> {
    fs::write(path, text).with_context(|| format!("writing {}", path.display()))
}

/// One or more cuts stacked into an `angle_deg,value_db,label` CSV.
pub fn write_cuts_csv(path: &Path, cuts: &[&AngularCut<f64>]) -> Result<()> {
    let mut text = String::from("angle_deg,value_db,label\n");
    for cut in cuts {
        for (a, v) in cut.angles_deg().iter().zip(cut.values_db()) {
            text.push_str(&format!("{a:.4},{v:.6},{}\n", cut.label()));
        }
    }
    write_text(path, &text)
}

/// Spectrum CSV with the rbw and carrier named in a comment header.
pub fn write_spectrum_csv(path: &Path, spectrum: &Spectrum<f64>) -> Result<()> {
    let mut text = format!(
        "# rbw_hz={:.3} carrier_hz=0.000\nfreq_hz,psd_dbm_per_rbw\n",
        spectrum.rbw_hz()
    );
    for (f, p) in spectrum.bin_freqs_hz().iter().zip(spectrum.psd_dbm()) {
        text.push_str(&format!("{f:.3},{p:.6}\n"));
    }
    write_text(path, &text)
}

/// Per-bin region classification CSV.
pub fn write_regions_csv(path: &Path, freqs_hz: &[f64], regions: &[SpectralRegion]) -> Result<()> {
    let mut text = String::from("freq_hz,region\n");
    for (f, r) in freqs_hz.iter().zip(regions) {
        let name = match r {
            SpectralRegion::SignalDominated => "signal",
            SpectralRegion::Im3Dominated => "im3",
            SpectralRegion::NoiseDominated => "noise",
        };
        text.push_str(&format!("{f:.3},{name}\n"));
    }
    write_text(path, &text)
}

/// Max-hold sweep CSV: `angle_deg,band_label,max_dbm`.
pub fn write_sweep_csv(path: &Path, sweep: &SweepResult<f64>) -> Result<()> {
    let mut text = String::from("angle_deg,band_label,max_dbm\n");
    for (bi, label) in sweep.band_labels.iter().enumerate() {
        for (ai, angle) in sweep.angles_deg.iter().enumerate() {
            text.push_str(&format!(
                "{angle:.4},{label},{:.6}\n",
                sweep.max_dbm[bi][ai]
            ));
        }
    }
    write_text(path, &text)
}

/// Sidecar metadata for a sweep export.
pub fn write_sweep_metadata(
    path: &Path,
    sweep: &SweepResult<f64>,
    alpha_re: f64,
    alpha_im: f64,
) -> Result<()> {
    let mut text = String::new();
    text.push_str(&format!("seed={}\n", sweep.master_seed));
    text.push_str(&format!("alpha_re={alpha_re:.9}\n"));
    text.push_str(&format!("alpha_im={alpha_im:.9}\n"));
    text.push_str(&format!(
        "angles_deg={:.4}..{:.4} ({} points)\n",
        sweep.angles_deg.first().unwrap(),
        sweep.angles_deg.last().unwrap(),
        sweep.angles_deg.len()
    ));
    text.push_str(&format!("phase_steps={}\n", sweep.phase_grid_rad.len()));
    for (label, p) in sweep.band_labels.iter().zip(&sweep.conducted_dbm) {
        text.push_str(&format!("conducted_dbm[{label}]={p:.6}\n"));
    }
    write_text(path, &text)
}

/// Pretty JSON with a trailing newline.
pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    write_text(path, &text)
}
