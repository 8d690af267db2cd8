//! CLI-level integration tests: config round-trips, fault injection,
//! output invariants and the process exit-status contract.

use std::path::Path;
use std::process::Command;

use aasenv::commands::{run_config_dump, run_envelope, run_validate};
use aasenv::config::ScenarioConfig;

fn small_config() -> String {
    r#"
[pattern]
g_e_max_dbi = 8.0

[geometry]
kind = "two_element"
spacing_wavelengths = 0.5

[pa]
alpha_re = -0.05
noise_power_dbm = -40.0

[[users]]
power_dbm = 0.0
bandwidth_hz = 20e6

[[bands]]
label = "in_band"
f_low_hz = -12e6
f_high_hz = 12e6

[[bands]]
label = "adjacent_high"
f_low_hz = 12e6
f_high_hz = 28e6

[[bands]]
label = "far_out"
f_low_hz = 36e6
f_high_hz = 50e6

[grids]
angle_start_deg = -60.0
angle_stop_deg = 60.0
angle_step_deg = 5.0
phase_steps = 32
sample_rate_hz = 122.88e6
num_samples = 16384
rbw_hz = 1e6

[seed]
master = 5
"#
    .to_string()
}

fn write_config(dir: &Path, text: &str) -> std::path::PathBuf {
    let path = dir.join("scenario.toml");
    std::fs::write(&path, text).unwrap();
    path
}

#[test]
fn config_dump_roundtrips_through_a_file() {
    let dir = tempfile::tempdir().unwrap();
    let path = write_config(dir.path(), &small_config());
    let cfg = ScenarioConfig::load(&path, &[]).unwrap();
    let dumped_path = dir.path().join("dumped.toml");
    run_config_dump(&cfg, Some(&dumped_path)).unwrap();
    let reparsed = ScenarioConfig::load(&dumped_path, &[]).unwrap();
    assert_eq!(cfg, reparsed);
}

#[test]
fn corrupted_envelope_fails_with_named_claims() {
    let cfg = ScenarioConfig::from_str_with_overrides(&small_config(), &[]).unwrap();
    let clean = run_validate(&cfg, "hook", None, None, None, 0.0).unwrap();
    assert!(clean.pass);

    let corrupted = run_validate(&cfg, "hook", None, None, None, 1.0).unwrap();
    assert!(!corrupted.pass);
    let failing: Vec<&str> = corrupted
        .claims
        .iter()
        .filter(|c| !c.pass)
        .map(|c| c.name.as_str())
        .collect();
    assert!(
        failing.contains(&"signal_envelope_match"),
        "failing claims: {failing:?}"
    );
}

#[test]
fn zero_margins_make_bound_equal_envelope() {
    let overrides = vec![
        "margins.in_band_db=0.0".to_string(),
        "margins.oob_db=0.0".to_string(),
    ];
    let cfg = ScenarioConfig::from_str_with_overrides(&small_config(), &overrides).unwrap();
    let dir = tempfile::tempdir().unwrap();
    run_envelope(&cfg, "zm", dir.path(), None, None, false).unwrap();

    let read_rows = |name: &str| -> Vec<(String, String, String)> {
        let text = std::fs::read_to_string(dir.path().join("cuts").join(name)).unwrap();
        text.lines()
            .skip(1)
            .map(|l| {
                let mut it = l.split(',');
                (
                    it.next().unwrap().to_string(),
                    it.next().unwrap().to_string(),
                    it.next().unwrap().to_string(),
                )
            })
            .collect()
    };
    let bound = read_rows("zm_seed5_envelope_bound.csv");
    let mut stacked = Vec::new();
    for regime in ["signal", "im3", "noise"] {
        stacked.extend(read_rows(&format!("zm_seed5_envelope_{regime}.csv")));
    }
    assert_eq!(bound.len(), stacked.len());
    for ((a_ang, a_val, _), (b_ang, b_val, _)) in bound.iter().zip(stacked.iter()) {
        assert_eq!(a_ang, b_ang);
        assert_eq!(a_val, b_val);
    }
}

#[test]
fn missing_pa_section_is_reported_by_name() {
    let text = small_config().replace("[pa]\nalpha_re = -0.05\nnoise_power_dbm = -40.0\n", "");
    let err = ScenarioConfig::from_str_with_overrides(&text, &[])
        .unwrap_err()
        .to_string();
    assert!(err.contains("pa"), "error: {err}");
}

#[test]
fn validate_exit_status_reflects_claims() {
    let dir = tempfile::tempdir().unwrap();
    let path = write_config(dir.path(), &small_config());
    let bin = env!("CARGO_BIN_EXE_aasenv");

    let ok = Command::new(bin)
        .args(["validate", "--config"])
        .arg(&path)
        .output()
        .unwrap();
    assert!(ok.status.success(), "stdout: {:?}", ok.stdout);

    let bad = Command::new(bin)
        .args(["validate", "--corrupt-envelope-db", "1.0", "--config"])
        .arg(&path)
        .output()
        .unwrap();
    assert_eq!(bad.status.code(), Some(1));

    let missing = Command::new(bin)
        .args(["validate", "--config", "/nonexistent/config.toml"])
        .output()
        .unwrap();
    assert_eq!(missing.status.code(), Some(2));
}

#[test]
fn mu_subcommand_rejects_wrong_user_count() {
    let dir = tempfile::tempdir().unwrap();
    let path = write_config(dir.path(), &small_config());
    let bin = env!("CARGO_BIN_EXE_aasenv");
    let out = Command::new(bin)
        .args(["mu", "--config"])
        .arg(&path)
        .args(["--out"])
        .arg(dir.path().join("out"))
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(2));
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("exactly two"), "stderr: {err}");
}

#[test]
fn seed_flag_overrides_config_seed() {
    let cfg = ScenarioConfig::from_str_with_overrides(&small_config(), &[]).unwrap();
    let dir = tempfile::tempdir().unwrap();
    let report = run_envelope(&cfg, "seedtest", dir.path(), Some(42), None, false).unwrap();
    assert_eq!(report.seed, 42);
    assert!(dir
        .path()
        .join("cuts/seedtest_seed42_envelope_signal.csv")
        .exists());
}

#[test]
fn normalize_flag_zeroes_boresight() {
    let cfg = ScenarioConfig::from_str_with_overrides(&small_config(), &[]).unwrap();
    let dir = tempfile::tempdir().unwrap();
    run_envelope(&cfg, "norm", dir.path(), None, None, true).unwrap();
    let text =
        std::fs::read_to_string(dir.path().join("cuts/norm_seed5_envelope_signal.csv")).unwrap();
    let boresight_row = text
        .lines()
        .find(|l| l.starts_with("0.0000,"))
        .expect("boresight row present");
    let value: f64 = boresight_row.split(',').nth(1).unwrap().parse().unwrap();
    assert_eq!(value, 0.0);
}

#[test]
fn invisible_im_direction_is_flagged_in_mu_output() {
    let manifest = std::path::Path::new(env!("CARGO_MANIFEST_DIR"));
    let config_path = manifest.join("../../scenarios/mu_two_user.toml");
    let overrides = vec![
        "users.0.beam_phi_deg=0.0".to_string(),
        "users.1.beam_phi_deg=45.0".to_string(),
        "grids.num_samples=16384".to_string(),
        "grids.angle_step_deg=5.0".to_string(),
    ];
    let cfg = ScenarioConfig::load(&config_path, &overrides).unwrap();
    let dir = tempfile::tempdir().unwrap();
    let report = aasenv::commands::run_mu(&cfg, "inv", dir.path(), None, None, false).unwrap();
    // 2·sin 45° − sin 0° = 1.414 > 1: the second beam is evanescent
    assert_eq!(report.predicted_im_directions[1].kind, "invisible");
    assert!(report.predicted_im_directions[1].sine.unwrap() > 1.0);
    assert_eq!(report.predicted_im_directions[0].kind, "visible");
    let json =
        std::fs::read_to_string(dir.path().join("reports/inv_seed1_mu_report.json")).unwrap();
    assert!(json.contains("invisible"));
}

#[test]
fn psd_writes_component_spectra_and_regions() {
    let dir = tempfile::tempdir().unwrap();
    let path = write_config(dir.path(), &small_config());
    let cfg = ScenarioConfig::load(&path, &[]).unwrap();
    let out = dir.path().join("out");
    aasenv::commands::run_psd(&cfg, "p", &out, None, None, 2, true).unwrap();
    for what in [
        "psd_linear",
        "psd_self_distortion",
        "psd_cross_a",
        "psd_cross_b",
        "psd_noise",
        "psd_total",
        "regions",
    ] {
        assert!(
            out.join("spectra")
                .join(format!("p_seed5_{what}.csv"))
                .exists(),
            "{what} missing"
        );
    }
    assert!(out.join("spectra/p_seed5_branch_output.iq64").exists());
    let regions = std::fs::read_to_string(out.join("spectra/p_seed5_regions.csv")).unwrap();
    assert!(regions.contains("signal") && regions.contains("im3") && regions.contains("noise"));
}

#[test]
fn envelope_artifacts_are_byte_identical_across_runs() {
    let cfg = ScenarioConfig::from_str_with_overrides(&small_config(), &[]).unwrap();
    let dir_a = tempfile::tempdir().unwrap();
    let dir_b = tempfile::tempdir().unwrap();
    run_envelope(&cfg, "det", dir_a.path(), None, None, false).unwrap();
    run_envelope(&cfg, "det", dir_b.path(), None, None, false).unwrap();
    for name in [
        "cuts/det_seed5_envelope_signal.csv",
        "cuts/det_seed5_envelope_im3.csv",
        "cuts/det_seed5_envelope_noise.csv",
        "cuts/det_seed5_envelope_bound.csv",
        "reports/det_seed5_envelope_report.json",
    ] {
        let a = std::fs::read(dir_a.path().join(name)).unwrap();
        let b = std::fs::read(dir_b.path().join(name)).unwrap();
        assert_eq!(a, b, "{name} differs");
    }
}

#[test]
fn budget_flag_guards_oversized_runs() {
    let cfg = ScenarioConfig::from_str_with_overrides(&small_config(), &[]).unwrap();
    let err = run_validate(&cfg, "budget", None, None, Some(1000), 0.0)
        .unwrap_err()
        .to_string();
    assert!(err.contains("budget"), "error: {err}");
}
