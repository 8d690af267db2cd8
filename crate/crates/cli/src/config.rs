//! Scenario configuration: a TOML document with explicit physical units in
//! every key name. Unknown keys are rejected; `--set` overrides are applied
//! on the raw document before typed deserialization so a dumped config
//! always re-parses to the same scenario.

use std::path::Path;

use anyhow::{anyhow, bail, Context, Result};
use serde::{Deserialize, Serialize};

use aasenv_core::envelope::UncertaintyMargins;
use aasenv_core::geometry::{ArrayGeometry, TwoElementArray};
use aasenv_core::oracle::{ArrayModel, FarFieldScenario, UserSpec, DEFAULT_BUDGET_SAMPLES};
use aasenv_core::pattern::ElementPatternParams;
use aasenv_core::spectral::BandDefinition;
use aasenv_core::waveform::PaModel;
use num_complex::Complex;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioConfig {
    pub pattern: PatternSection,
    pub geometry: GeometrySection,
    pub pa: PaSection,
    pub users: Vec<UserSection>,
    pub bands: Vec<BandSection>,
    pub grids: GridsSection,
    #[serde(default)]
    pub margins: MarginsSection,
    pub seed: SeedSection,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PatternSection {
    /// Peak gain has no default and must be given explicitly.
    pub g_e_max_dbi: f64,
    #[serde(default = "default_phi_3db")]
    pub phi_3db_deg: f64,
    #[serde(default = "default_a_m")]
    pub a_m_db: f64,
}

fn default_phi_3db() -> f64 {
    ElementPatternParams::<f64>::DEFAULT_PHI_3DB_DEG
}

fn default_a_m() -> f64 {
    ElementPatternParams::<f64>::DEFAULT_A_M_DB
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GeometryKind {
    TwoElement,
    Aas,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GeometrySection {
    pub kind: GeometryKind,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub spacing_wavelengths: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub rows_m: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub cols_n: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub d_v_wavelengths: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub d_h_wavelengths: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub polarizations: Option<u8>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PaSection {
    pub alpha_re: f64,
    #[serde(default)]
    pub alpha_im: f64,
    pub noise_power_dbm: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct UserSection {
    pub power_dbm: f64,
    pub bandwidth_hz: f64,
    #[serde(default)]
    pub center_offset_hz: f64,
    #[serde(default)]
    pub beam_phi_deg: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BandSection {
    pub label: String,
    pub f_low_hz: f64,
    pub f_high_hz: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridsSection {
    pub angle_start_deg: f64,
    pub angle_stop_deg: f64,
    pub angle_step_deg: f64,
    pub phase_steps: usize,
    pub sample_rate_hz: f64,
    pub num_samples: usize,
    pub rbw_hz: f64,
    /// Beam directions for the steered validation pass (empty = skip).
    #[serde(default)]
    pub steering_phis_deg: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MarginsSection {
    pub in_band_db: f64,
    pub oob_db: f64,
}

impl Default for MarginsSection {
    fn default() -> Self {
        let m = UncertaintyMargins::<f64>::default();
        Self {
            in_band_db: m.in_band_db,
            oob_db: m.oob_db,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SeedSection {
    pub master: u64,
}

impl ScenarioConfig {
    /// Parse a TOML document, then apply `--set key.path=value` overrides.
    pub fn from_str_with_overrides(text: &str, overrides: &[String]) -> Result<Self> {
        let mut doc: toml::Value = toml::from_str(text).context("config parse error")?;
        for item in overrides {
            let (key, raw) = item
                .split_once('=')
                .ok_or_else(|| anyhow!("--set expects KEY=VALUE, got '{item}'"))?;
            apply_override(&mut doc, key.trim(), raw.trim())
                .with_context(|| format!("applying --set {item}"))?;
        }
        let config: ScenarioConfig = doc
            .try_into()
            .map_err(|e| anyhow!("config validation error: {e}"))?;
        config.check()?;
        Ok(config)
    }

    pub fn load(path: &Path, overrides: &[String]) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .with_context(|| format!("reading config {}", path.display()))?;
        Self::from_str_with_overrides(&text, overrides)
    }

    /// Canonical TOML form; re-parses to an identical scenario.
    pub fn dump(&self) -> Result<String> {
        Ok(toml::to_string_pretty(self)?)
    }

    /// Semantic checks beyond what the type structure enforces.
    pub fn check(&self) -> Result<()> {
        self.element_pattern()?;
        self.array_model()?;
        if self.users.is_empty() {
            bail!("[[users]] must list at least one user");
        }
        if self.bands.is_empty() {
            bail!("[[bands]] must list at least one band");
        }
        for band in &self.bands {
            BandDefinition::new(band.f_low_hz, band.f_high_hz, band.label.clone())
                .map_err(|e| anyhow!("band '{}': {e}", band.label))?;
        }
        if !(self.grids.angle_step_deg > 0.0) {
            bail!("[grids] angle_step_deg must be > 0");
        }
        if !(self.grids.angle_start_deg < self.grids.angle_stop_deg) {
            bail!("[grids] angle_start_deg must be below angle_stop_deg");
        }
        UncertaintyMargins::new(self.margins.in_band_db, self.margins.oob_db)
            .map_err(|e| anyhow!("[margins]: {e}"))?;
        PaModel::with_complex_alpha(
            Complex::new(self.pa.alpha_re, self.pa.alpha_im),
            self.pa.noise_power_dbm,
        )
        .map_err(|e| anyhow!("[pa]: {e}"))?;
        Ok(())
    }

    pub fn element_pattern(&self) -> Result<ElementPatternParams<f64>> {
        ElementPatternParams::new(
            self.pattern.g_e_max_dbi,
            self.pattern.phi_3db_deg,
            self.pattern.a_m_db,
        )
        .map_err(|e| anyhow!("[pattern]: {e}"))
    }

    pub fn array_model(&self) -> Result<ArrayModel<f64>> {
        match self.geometry.kind {
            GeometryKind::TwoElement => {
                let d = self
                    .geometry
                    .spacing_wavelengths
                    .ok_or_else(|| anyhow!("[geometry]: two_element needs spacing_wavelengths"))?;
                Ok(ArrayModel::TwoElement(
                    TwoElementArray::new(d).map_err(|e| anyhow!("[geometry]: {e}"))?,
                ))
            }
            GeometryKind::Aas => {
                let missing = |k: &'static str| anyhow!("[geometry]: aas needs {k}");
                let g = ArrayGeometry::new(
                    self.geometry.rows_m.ok_or_else(|| missing("rows_m"))?,
                    self.geometry.cols_n.ok_or_else(|| missing("cols_n"))?,
                    self.geometry
                        .d_v_wavelengths
                        .ok_or_else(|| missing("d_v_wavelengths"))?,
                    self.geometry
                        .d_h_wavelengths
                        .ok_or_else(|| missing("d_h_wavelengths"))?,
                    self.geometry.polarizations.unwrap_or(1),
                )
                .map_err(|e| anyhow!("[geometry]: {e}"))?;
                Ok(ArrayModel::Grid(g))
            }
        }
    }

    /// The geometry with polarizations forced to one, matching what the
    /// waveform oracle simulates.
    pub fn aas_single_polarization(&self) -> Result<Option<ArrayGeometry<f64>>> {
        match self.array_model()? {
            ArrayModel::Grid(g) => Ok(Some(
                ArrayGeometry::new(
                    g.rows_m(),
                    g.cols_n(),
                    g.d_v_wavelengths(),
                    g.d_h_wavelengths(),
                    1,
                )
                .expect("validated geometry stays valid"),
            )),
            ArrayModel::TwoElement(_) => Ok(None),
        }
    }

    pub fn angle_grid(&self) -> Vec<f64> {
        let g = &self.grids;
        let mut angles = Vec::new();
        let mut k = 0usize;
        loop {
            let a = g.angle_start_deg + k as f64 * g.angle_step_deg;
            if a > g.angle_stop_deg + 1e-9 {
                break;
            }
            angles.push(a);
            k += 1;
        }
        angles
    }

    pub fn margins(&self) -> UncertaintyMargins<f64> {
        UncertaintyMargins {
            in_band_db: self.margins.in_band_db,
            oob_db: self.margins.oob_db,
        }
    }

    pub fn band_definitions(&self) -> Vec<BandDefinition<f64>> {
        self.bands
            .iter()
            .map(|b| {
                BandDefinition::new(b.f_low_hz, b.f_high_hz, b.label.clone())
                    .expect("checked at load")
            })
            .collect()
    }

    /// Full far-field scenario; `seed` and `budget` override the config.
    pub fn to_scenario(
        &self,
        seed: Option<u64>,
        budget: Option<u128>,
    ) -> Result<FarFieldScenario<f64>> {
        Ok(FarFieldScenario {
            array: self.array_model()?,
            pattern: self.element_pattern()?,
            pa: PaModel::with_complex_alpha(
                Complex::new(self.pa.alpha_re, self.pa.alpha_im),
                self.pa.noise_power_dbm,
            )
            .map_err(|e| anyhow!("[pa]: {e}"))?,
            users: self
                .users
                .iter()
                .map(|u| UserSpec {
                    power_dbm: u.power_dbm,
                    bandwidth_hz: u.bandwidth_hz,
                    center_offset_hz: u.center_offset_hz,
                    beam_phi_deg: u.beam_phi_deg,
                })
                .collect(),
            angles_deg: self.angle_grid(),
            phase_steps: self.grids.phase_steps,
            bands: self.band_definitions(),
            sample_rate_hz: self.grids.sample_rate_hz,
            num_samples: self.grids.num_samples,
            rbw_hz: self.grids.rbw_hz,
            master_seed: seed.unwrap_or(self.seed.master),
            budget_samples: budget.unwrap_or(DEFAULT_BUDGET_SAMPLES),
        })
    }
}

/// Parse a `--set` value as a TOML literal, falling back to a string.
fn parse_value(raw: &str) -> toml::Value {
    let wrapped = format!("v = {raw}");
    if let Ok(table) = toml::from_str::<toml::Table>(&wrapped) {
        if let Some(v) = table.get("v") {
            return v.clone();
        }
    }
    toml::Value::String(raw.to_string())
}

/// Walk a dot path (`pa.alpha_re`, `users.0.power_dbm`) and set the leaf.
fn apply_override(doc: &mut toml::Value, key: &str, raw: &str) -> Result<()> {
    let mut node = doc;
    let segments: Vec<&str> = key.split('.').collect();
    if segments.is_empty() || segments.iter().any(|s| s.is_empty()) {
        bail!("empty key path");
    }
    for segment in &segments[..segments.len() - 1] {
        node = if let Ok(index) = segment.parse::<usize>() {
            node.get_mut(index)
                .ok_or_else(|| anyhow!("index '{segment}' out of bounds in '{key}'"))?
        } else {
            node.as_table_mut()
                .ok_or_else(|| anyhow!("'{segment}' is not a table in '{key}'"))?
                .entry(segment.to_string())
                .or_insert(toml::Value::Table(Default::default()))
        };
    }
    let leaf = segments[segments.len() - 1];
    let value = parse_value(raw);
    if let Ok(index) = leaf.parse::<usize>() {
        let array = node
            .as_array_mut()
            .ok_or_else(|| anyhow!("'{key}' indexes into a non-array"))?;
        let slot = array
            .get_mut(index)
            .ok_or_else(|| anyhow!("index {index} out of bounds in '{key}'"))?;
        *slot = value;
    } else {
        node.as_table_mut()
            .ok_or_else(|| anyhow!("'{key}' sets a key on a non-table"))?
            .insert(leaf.to_string(), value);
    }
    Ok(())
}
