use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use polsqueeze::detector::{digitize, shot_noise_counts, write_records, DetectorParams, AMPLIFICATION_1, AMPLIFICATION_2};
use polsqueeze::Efficiency;
use polsqueeze_cli::svg::series_data;
use tempfile::TempDir;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_polsqueeze"))
}

fn run(dir: &Path, config: Option<&str>, args: &[&str]) -> Output {
    let mut cmd = bin();
    if let Some(text) = config {
        let path = dir.join("run.conf");
        fs::write(&path, text).unwrap();
        cmd.arg("--config").arg(path);
    }
    cmd.arg("--out-dir").arg(dir).args(args).output().unwrap()
}

fn report_value(out: &Output, key: &str) -> f64 {
    let text = String::from_utf8_lossy(&out.stdout);
    text.lines()
        .find_map(|l| l.strip_prefix(&format!("{key}=")))
        .unwrap_or_else(|| panic!("{key} missing from {text}"))
        .parse()
        .unwrap()
}

fn csv_column(text: &str, name: &str) -> Vec<f64> {
    let mut lines = text.lines();
    let header: Vec<&str> = lines.next().unwrap().split(',').collect();
    let i = header.iter().position(|h| *h == name).unwrap();
    lines.map(|l| l.split(',').nth(i).unwrap().parse().unwrap()).collect()
}

const LOW_GAIN: &str = "opa.gain = 0.05\nopa.mode_count = 100000000\nsweep.tilt_steps = 25\n";

#[test]
fn same_seed_same_bytes() {
    let (a, b) = (TempDir::new().unwrap(), TempDir::new().unwrap());
    for d in [&a, &b] {
        assert!(run(d.path(), None, &["--seed", "11", "simulate-run"]).status.success());
    }
    let (x, y) = (fs::read(a.path().join("records.csv")).unwrap(), fs::read(b.path().join("records.csv")).unwrap());
    assert_eq!(x, y);
    let c = TempDir::new().unwrap();
    run(c.path(), None, &["--seed", "12", "simulate-run"]);
    assert_ne!(x, fs::read(c.path().join("records.csv")).unwrap());
}

#[test]
fn default_run_has_thirty_thousand_pulses() {
    let d = TempDir::new().unwrap();
    let out = run(d.path(), None, &["simulate-run"]);
    assert_eq!(report_value(&out, "run.pulses"), 30000.0);
    let text = fs::read_to_string(d.path().join("records.csv")).unwrap();
    assert_eq!(text.lines().count(), 30001);
}

#[test]
fn simulate_then_estimate_round_trip() {
    let d = TempDir::new().unwrap();
    let out = run(d.path(), None, &["simulate-run"]);
    let expected = report_value(&out, "run.expected_nrf");
    let records = d.path().join("records.csv");
    let est = run(d.path(), None, &["estimate", records.to_str().unwrap()]);
    assert!(est.status.success(), "{}", String::from_utf8_lossy(&est.stderr));
    let (nrf, err) = (report_value(&est, "estimate.nrf"), report_value(&est, "estimate.nrf_err"));
    assert!((nrf - expected).abs() < 3.0 * err, "{nrf} +- {err} vs {expected}");
    assert!(d.path().join("estimate.txt").exists());
}

#[test]
fn shot_noise_limited_records_estimate_to_one() {
    let d = TempDir::new().unwrap();
    let dets = (DetectorParams::reference_1(), DetectorParams::reference_2());
    let qe = Efficiency::new(0.9).unwrap();
    let counts = shot_noise_counts(500_000.0, (qe, qe), 30_000, 3).unwrap();
    let mut buf = Vec::new();
    write_records(&mut buf, &digitize(&counts, (&dets.0, &dets.1), 0, 4)).unwrap();
    let path = d.path().join("poisson.csv");
    fs::write(&path, buf).unwrap();
    let est = run(d.path(), None, &["estimate", path.to_str().unwrap()]);
    assert!(est.status.success(), "{}", String::from_utf8_lossy(&est.stderr));
    let nrf = report_value(&est, "estimate.nrf");
    assert!((nrf - 1.0).abs() < 0.02, "{nrf} +- {}", report_value(&est, "estimate.nrf_err"));
    let beta = report_value(&est, "estimate.balance_factor");
    assert!((beta - AMPLIFICATION_1 / AMPLIFICATION_2).abs() < 1e-2);
}

#[test]
fn empty_or_malformed_records_are_input_errors() {
    let d = TempDir::new().unwrap();
    let empty = d.path().join("empty.csv");
    fs::write(&empty, "").unwrap();
    let out = run(d.path(), None, &["estimate", empty.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(3));
    assert!(out.stdout.is_empty());
    assert!(!d.path().join("estimate.txt").exists());

    let bad = d.path().join("bad.csv");
    fs::write(&bad, "pulse_id,s1_nvs,s2_nvs\n0,1.0,2.0\n1,oops,2.0\n").unwrap();
    let out = run(d.path(), None, &["estimate", bad.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(3));
    assert!(String::from_utf8_lossy(&out.stderr).contains("line 3"), "{}", String::from_utf8_lossy(&out.stderr));
}

#[test]
fn config_errors_exit_with_two_and_name_the_field() {
    let d = TempDir::new().unwrap();
    let out = run(d.path(), Some("optics.efficiency = 1.7\n"), &["simulate-run"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("optics.efficiency"));
    let out = run(d.path(), Some("measurement.n_pulse = 10\n"), &["simulate-run"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("measurement.n_pulse"));
}

#[test]
fn show_config_round_trips_through_a_file() {
    let d = TempDir::new().unwrap();
    let first = run(d.path(), Some("opa.gain = 0.2\ncrystal.sellmeier = bbo-kato-1986\n"), &["show-config"]);
    let text = String::from_utf8(first.stdout).unwrap();
    let second = run(d.path(), Some(&text), &["show-config"]);
    assert_eq!(String::from_utf8(second.stdout).unwrap(), text);
}

#[test]
fn lossless_noiseless_records_have_no_difference_noise() {
    let d = TempDir::new().unwrap();
    let cfg = "opa.mode_count = 1000\noptics.efficiency = 1\ndetector1.noise_sigma = 0\ndetector2.noise_sigma = 0\n\
               detector1.quantum_efficiency = 1\ndetector2.quantum_efficiency = 1\nmeasurement.n_pulses = 2000\n";
    assert!(run(d.path(), Some(cfg), &["simulate-run"]).status.success());
    let text = fs::read_to_string(d.path().join("records.csv")).unwrap();
    let (s1, s2) = (csv_column(&text, "s1_nvs"), csv_column(&text, "s2_nvs"));
    let diff: Vec<f64> = s1.iter().zip(&s2).map(|(a, b)| a / AMPLIFICATION_1 - b / AMPLIFICATION_2).collect();
    assert!(diff.iter().all(|x| x.abs() < 1e-6), "{:?}", &diff[..5]);
    assert!(s1.iter().any(|&x| x > 0.0));
}

#[test]
fn phase_sweep_is_anti_phased_and_plots_its_csv() {
    let d = TempDir::new().unwrap();
    let out = run(d.path(), Some(LOW_GAIN), &["sweep-phase"]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let csv = fs::read_to_string(d.path().join("sweep_phase.csv")).unwrap();
    let (s2, s3) = (csv_column(&csv, "nrf_s2"), csv_column(&csv, "nrf_s3"));
    let lo = s2.iter().cloned().fold(f64::INFINITY, f64::min);
    let hi = s2.iter().cloned().fold(0.0, f64::max);
    assert!((lo - 0.55).abs() < 0.04 && (hi - 1.45).abs() < 0.06, "{lo} {hi}");
    for (a, b) in s2.iter().zip(&s3) {
        assert!((a + b - 2.0).abs() < 0.08, "{a} + {b}");
    }
    let svg = fs::read_to_string(d.path().join("sweep_phase.svg")).unwrap();
    let series = series_data(&svg);
    let alpha = csv_column(&csv, "alpha_deg");
    for (label, col) in [("S2 simulated", "nrf_s2"), ("S3 simulated", "nrf_s3"), ("S2 model", "model_s2"), ("S3 model", "model_s3")] {
        let (_, pts) = series.iter().find(|(l, _)| l == label).unwrap();
        let expect: Vec<(f64, f64)> = alpha.iter().copied().zip(csv_column(&csv, col)).collect();
        assert_eq!(pts, &expect, "{label}");
    }
    assert!((report_value(&out, "s2.fit.eta") - 0.45).abs() < 0.03);
}

#[test]
fn no_usable_squeezing_gives_flat_curves() {
    let d = TempDir::new().unwrap();
    let cfg = format!("{LOW_GAIN}optics.squeezed_fraction = 0\n");
    assert!(run(d.path(), Some(&cfg), &["sweep-phase"]).status.success());
    let csv = fs::read_to_string(d.path().join("sweep_phase.csv")).unwrap();
    for col in ["model_s2", "model_s3"] {
        assert!(csv_column(&csv, col).iter().all(|x| (x - 1.0).abs() < 0.01));
    }
    for col in ["nrf_s2", "nrf_s3"] {
        assert!(csv_column(&csv, col).iter().all(|x| (x - 1.0).abs() < 0.06), "{col}");
    }
}

#[test]
fn partial_fraction_lifts_the_minimum() {
    let d = TempDir::new().unwrap();
    let cfg = format!("{LOW_GAIN}optics.squeezed_fraction = 0.52\noptics.efficiency = 0.5333333333333333\n");
    assert!(run(d.path(), Some(&cfg), &["sweep-phase"]).status.success());
    let csv = fs::read_to_string(d.path().join("sweep_phase.csv")).unwrap();
    let lo = csv_column(&csv, "model_s2").into_iter().fold(f64::INFINITY, f64::min);
    assert!((lo - 0.75).abs() < 0.01, "{lo}");
    let sim = csv_column(&csv, "nrf_s2").into_iter().fold(f64::INFINITY, f64::min);
    assert!((sim - 0.75).abs() < 0.04, "{sim}");
}

#[test]
fn power_sweep_shapes() {
    let d = TempDir::new().unwrap();
    let tight = format!("opa.gain_coefficient = {}\nopa.mode_count = 18\n", 3.4 / 120f64.sqrt());
    let out = run(d.path(), Some(&tight), &["sweep-power"]);
    assert!(out.status.success());
    let csv = fs::read_to_string(d.path().join("sweep_power.csv")).unwrap();
    let n = csv_column(&csv, "n_photons");
    assert_eq!(n[0], 0.0);
    assert!((n[n.len() - 1] / 4000.0 - 1.0).abs() < 0.05, "{}", n[n.len() - 1]);
    // superlinear: the last step dwarfs the first
    assert!(n[n.len() - 1] - n[n.len() - 2] > 10.0 * (n[2] - n[1]));
    assert!((report_value(&out, "fit.gamma_max") - 3.4).abs() < 1e-6);

    let soft = format!("opa.gain_coefficient = {}\nopa.mode_count = 1926\n", 0.8 / 120f64.sqrt());
    run(d.path(), Some(&soft), &["sweep-power"]);
    let n = csv_column(&fs::read_to_string(d.path().join("sweep_power.csv")).unwrap(), "n_photons");
    let last = n.len() - 1;
    assert!((n[last] / 1500.0 - 1.0).abs() < 0.05);
    let ratio = (n[last] - n[last - 1]) / (n[2] - n[1]);
    assert!(ratio > 1.0 && ratio < 2.0, "{ratio}");
}

#[test]
fn zero_length_second_crystal_keeps_everything() {
    let d = TempDir::new().unwrap();
    let out = run(d.path(), Some("crystal.second_length_mm = 0\n"), &["spectral-fraction"]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    assert!((report_value(&out, "spectral.fraction") - 1.0).abs() < 1e-12);
    assert!(d.path().join("spectrum_degenerate.csv").exists());
}

#[test]
fn fit_verb_reads_sweep_output() {
    let d = TempDir::new().unwrap();
    let cfg = "sweep.power_noise = 0.05\n";
    run(d.path(), Some(cfg), &["sweep-power"]);
    let input = d.path().join("sweep_power.csv");
    let out = run(d.path(), Some(cfg), &["fit", "gain", input.to_str().unwrap(), "--y", "n_photons"]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    assert!((report_value(&out, "fit.kappa") / 0.31 - 1.0).abs() < 0.1);
    assert!(d.path().join("fit_gain.txt").exists() && d.path().join("fit_gain.csv").exists());

    let bad = d.path().join("short.csv");
    fs::write(&bad, "x,y\n1,2\n").unwrap();
    let out = run(d.path(), None, &["fit", "gain", bad.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(3));
}
