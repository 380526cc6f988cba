//! The virtual experiments. Each command is a pure function of the
//! configuration and its input files and returns the text it reports; files
//! are written only once everything has been computed.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use polsqueeze::detector::{
    analyse_run, read_records, write_records, AnalysisSettings, CalibrationResult, NrfEstimate,
};
use polsqueeze::fitting::{fit_gain_curve, fit_nrf_curve, gain_model, FitPoint, GainFit, NrfFit};
use polsqueeze::fock::SamplingStrategy;
use polsqueeze::kv::{fmt_f64, KvBlock};
use polsqueeze::rng::{derive_seed, stream_rng, Stream};
use polsqueeze::simulation::VirtualRun;
use polsqueeze::spectral::{QuartzPlatePair, SqueezedFraction};
use polsqueeze::stokes::nrf_exact;
use polsqueeze::{Efficiency, StokesIndex};
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;

use crate::config::{AlignmentChoice, RunConfig};
use crate::error::CliError;
use crate::svg::{Plot, Series, Style};

/// Text for stdout plus the files to create, relative to the output directory.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Output {
    pub report: String,
    pub files: Vec<(String, String)>,
}

impl Output {
    /// Writes every file under `dir`, creating it if needed.
    pub fn write(&self, dir: &Path) -> Result<Vec<PathBuf>, CliError> {
        fs::create_dir_all(dir)?;
        let mut written = Vec::new();
        for (name, body) in &self.files {
            let path = dir.join(name);
            fs::write(&path, body)?;
            written.push(path);
        }
        Ok(written)
    }

    pub fn file(&self, name: &str) -> Option<&str> {
        self.files.iter().find(|(n, _)| n == name).map(|(_, b)| b.as_str())
    }
}

fn efficiency(x: f64, field: &str) -> Result<Efficiency, CliError> {
    Efficiency::new(x).map_err(|e| CliError::Config {
        field: field.into(),
        message: e.to_string(),
    })
}

fn virtual_run(cfg: &RunConfig, pump_phase: f64, index: StokesIndex, seed: u64) -> Result<VirtualRun, CliError> {
    Ok(VirtualRun {
        gain: cfg.gain,
        pump_phase,
        index,
        mode_count: cfg.mode_count,
        optical_efficiency: efficiency(cfg.optical_efficiency, "optics.efficiency")?,
        squeezed_fraction: cfg.squeezed_fraction,
        detectors: cfg.detectors()?,
        n_pulses: cfg.n_pulses,
        seed,
        strategy: SamplingStrategy::Auto,
    })
}

fn settings(cfg: &RunConfig, seed: u64) -> AnalysisSettings {
    AnalysisSettings {
        reference_amplification: cfg.detector_1.amplification,
        calibration_pulses: cfg.calibration_pulses,
        seed,
    }
}

/// Closed-form NRF with the spectral fraction modelled as two equal mode
/// groups at `+-acos(f)` around the pump phase.
pub fn model_nrf(cfg: &RunConfig, index: StokesIndex, pump_phase: f64) -> Result<f64, CliError> {
    let eta = efficiency(cfg.total_efficiency(), "optics.efficiency")?;
    let off = cfg.squeezed_fraction.acos();
    let at = |p: f64| nrf_exact(index, cfg.gain, p, eta).map_err(CliError::from_model);
    Ok(0.5 * (at(pump_phase + off)? + at(pump_phase - off)?))
}

fn plate_map(plates: QuartzPlatePair, pump_nm: f64, offset: f64) -> impl Fn(f64) -> polsqueeze::Result<f64> {
    move |a| Ok(offset + plates.phase_from_tilt(a, pump_nm)?)
}

#[derive(Debug, Clone, PartialEq)]
pub struct PhaseRow {
    pub alpha_deg: f64,
    pub phase_rad: f64,
    pub s2: NrfEstimate,
    pub s3: NrfEstimate,
    pub model_s2: f64,
    pub model_s3: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PhaseSweep {
    pub rows: Vec<PhaseRow>,
    pub fit_s2: Option<NrfFit>,
    pub fit_s3: Option<NrfFit>,
}

fn fit_points(rows: &[PhaseRow], pick: impl Fn(&PhaseRow) -> &NrfEstimate) -> Vec<FitPoint> {
    rows.iter()
        .map(|r| {
            let e = pick(r);
            let w = if e.std_error > 0.0 { 1.0 / (e.std_error * e.std_error) } else { 1.0 };
            FitPoint {
                x: r.alpha_deg,
                y: e.nrf,
                weight: w,
            }
        })
        .collect()
}

/// Simulated S2 and S3 noise against plate tilt, with fits of both curves.
pub fn sweep_phase(cfg: &RunConfig) -> Result<PhaseSweep, CliError> {
    let plates = cfg.plates()?;
    let map = plate_map(plates, cfg.pump_wavelength_nm, cfg.phase_offset);
    let tilts = cfg.tilts();
    let rows = tilts
        .par_iter()
        .enumerate()
        .map(|(i, &alpha)| {
            let phase = map(alpha).map_err(CliError::from_model)?;
            let one = |index: StokesIndex| -> Result<NrfEstimate, CliError> {
                let seed = derive_seed(cfg.seed, &[i as u64, index.index() as u64]);
                let run = virtual_run(cfg, phase, index, seed)?;
                let records = run.simulate().map_err(CliError::from_model)?;
                let dets = cfg.detectors()?;
                let (_, _, est) =
                    analyse_run(&records, (&dets.0, &dets.1), &settings(cfg, derive_seed(seed, &[7]))).map_err(CliError::from_data)?;
                Ok(est)
            };
            Ok(PhaseRow {
                alpha_deg: alpha,
                phase_rad: phase,
                s2: one(StokesIndex::S2)?,
                s3: one(StokesIndex::S3)?,
                model_s2: model_nrf(cfg, StokesIndex::S2, phase)?,
                model_s3: model_nrf(cfg, StokesIndex::S3, phase)?,
            })
        })
        .collect::<Result<Vec<_>, CliError>>()?;
    // plate-only map for the fits: the configured offset is what phi0 recovers
    let fit_map = plate_map(plates, cfg.pump_wavelength_nm, 0.0);
    let fit_s2 = fit_nrf_curve(&fit_points(&rows, |r| &r.s2), &fit_map, StokesIndex::S2).ok();
    let fit_s3 = fit_nrf_curve(&fit_points(&rows, |r| &r.s3), &fit_map, StokesIndex::S3).ok();
    Ok(PhaseSweep { rows, fit_s2, fit_s3 })
}

pub const PHASE_SWEEP_HEADER: &str = "alpha_deg,phase_rad,nrf_s2,nrf_s2_err,nrf_s3,nrf_s3_err,model_s2,model_s3";

pub fn cmd_sweep_phase(cfg: &RunConfig) -> Result<Output, CliError> {
    let sweep = sweep_phase(cfg)?;
    let f = fmt_f64;
    let mut csv = format!("{PHASE_SWEEP_HEADER}\n");
    for r in &sweep.rows {
        let _ = writeln!(
            csv,
            "{},{},{},{},{},{},{},{}",
            f(r.alpha_deg),
            f(r.phase_rad),
            f(r.s2.nrf),
            f(r.s2.std_error),
            f(r.s3.nrf),
            f(r.s3.std_error),
            f(r.model_s2),
            f(r.model_s3)
        );
    }
    let col = |g: &dyn Fn(&PhaseRow) -> f64| sweep.rows.iter().map(|r| (r.alpha_deg, g(r))).collect::<Vec<_>>();
    let plot = Plot {
        title: "Noise reduction factor against plate tilt".into(),
        x_label: "tilt (deg)".into(),
        y_label: "NRF".into(),
        series: vec![
            Series::new("S2 simulated", col(&|r| r.s2.nrf), Style::Markers),
            Series::new("S3 simulated", col(&|r| r.s3.nrf), Style::Markers),
            Series::new("S2 model", col(&|r| r.model_s2), Style::Solid),
            Series::new("S3 model", col(&|r| r.model_s3), Style::Dashed),
        ],
    };
    let mut report = KvBlock::default();
    report.push("sweep.points", sweep.rows.len());
    let (lo, hi) = sweep
        .rows
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), r| (a.min(r.s2.nrf), b.max(r.s2.nrf)));
    report.push("sweep.nrf_s2_min", f(lo));
    report.push("sweep.nrf_s2_max", f(hi));
    let mut text = report.to_text();
    for (name, fit) in [("s2", &sweep.fit_s2), ("s3", &sweep.fit_s3)] {
        match fit {
            Some(fit) => {
                for line in fit.to_kv().to_text().lines() {
                    let _ = writeln!(text, "{name}.{line}");
                }
            }
            None => {
                let _ = writeln!(text, "{name}.fit.converged=false");
            }
        }
    }
    Ok(Output {
        report: text,
        files: vec![("sweep_phase.csv".into(), csv), ("sweep_phase.svg".into(), plot.to_svg())],
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct PowerSweep {
    pub points: Vec<FitPoint>,
    pub fit: GainFit,
}

/// OPA output against pump power from the gain law, optionally scattered.
pub fn sweep_power(cfg: &RunConfig) -> Result<PowerSweep, CliError> {
    let n = cfg.power_steps;
    let mut rng = stream_rng(cfg.seed, Stream::FitNoise, 0);
    let params = [cfg.gain_coefficient, cfg.mode_count as f64];
    let points: Vec<FitPoint> = (0..n)
        .map(|i| {
            let p = cfg.max_power_mw * i as f64 / (n - 1) as f64;
            let z: f64 = StandardNormal.sample(&mut rng);
            let scatter = if cfg.power_noise > 0.0 { 1.0 + cfg.power_noise * z } else { 1.0 };
            FitPoint::new(p, gain_model(p, &params) * scatter)
        })
        .collect();
    let fit = fit_gain_curve(&points).map_err(CliError::from_data)?;
    Ok(PowerSweep { points, fit })
}

pub fn cmd_sweep_power(cfg: &RunConfig) -> Result<Output, CliError> {
    let sweep = sweep_power(cfg)?;
    let f = fmt_f64;
    let fitted = [sweep.fit.kappa, sweep.fit.modes];
    let mut csv = String::from("power_mw,n_photons,n_fit\n");
    for p in &sweep.points {
        let _ = writeln!(csv, "{},{},{}", f(p.x), f(p.y), f(gain_model(p.x, &fitted)));
    }
    let plot = Plot {
        title: "OPA output against pump power".into(),
        x_label: "pump power (mW)".into(),
        y_label: "photons per pulse".into(),
        series: vec![
            Series::new("data", sweep.points.iter().map(|p| (p.x, p.y)).collect(), Style::Markers),
            Series::new("fit", sweep.points.iter().map(|p| (p.x, gain_model(p.x, &fitted))).collect(), Style::Solid),
        ],
    };
    Ok(Output {
        report: sweep.fit.to_kv().to_text(),
        files: vec![("sweep_power.csv".into(), csv), ("sweep_power.svg".into(), plot.to_svg())],
    })
}

pub fn spectral_fraction(cfg: &RunConfig, alignment: AlignmentChoice) -> Result<SqueezedFraction, CliError> {
    cfg.cascade(alignment)?.squeezed_fraction().map_err(CliError::from_model)
}

pub fn cmd_spectral_fraction(cfg: &RunConfig, alignment: AlignmentChoice) -> Result<Output, CliError> {
    let model = cfg.cascade(alignment)?;
    let profile = model.profile().map_err(CliError::from_model)?;
    let frac = polsqueeze::spectral::squeezed_fraction(&profile);
    let mut csv = Vec::new();
    profile.write_csv(&mut csv).map_err(CliError::from_model)?;
    let eta = cfg.total_efficiency();
    let mut kv = KvBlock::default();
    kv.push("spectral.alignment", alignment.name());
    kv.push("spectral.sellmeier", cfg.sellmeier.name());
    kv.push("spectral.cut_angle_deg", fmt_f64(model.crystal.cut_angle_deg()));
    kv.push("spectral.fwhm_nm", fmt_f64(profile.fwhm_nm()));
    kv.push("spectral.fraction", fmt_f64(frac.fraction));
    kv.push("spectral.fraction_at_reference_gauge", fmt_f64(frac.at_reference_gauge));
    kv.push("spectral.optimal_offset_rad", fmt_f64(frac.optimal_offset));
    kv.push("spectral.efficiency", fmt_f64(eta));
    kv.push("spectral.nrf_floor", fmt_f64(frac.nrf_floor(eta)));
    let pts: Vec<(f64, f64)> = profile.wavelengths_nm().iter().copied().zip(profile.weights().iter().copied()).collect();
    let plot = Plot {
        title: format!("Down-conversion spectrum, {}", alignment.name()),
        x_label: "signal wavelength (nm)".into(),
        y_label: "weight (1/nm)".into(),
        series: vec![Series::new("spectrum", pts, Style::Solid)],
    };
    let stem = format!("spectrum_{}", alignment.name());
    Ok(Output {
        report: kv.to_text(),
        files: vec![
            (format!("{stem}.csv"), String::from_utf8(csv).expect("ascii")),
            (format!("{stem}.svg"), plot.to_svg()),
        ],
    })
}

pub fn cmd_simulate_run(cfg: &RunConfig) -> Result<Output, CliError> {
    let run = virtual_run(cfg, cfg.pump_phase, cfg.stokes_index, cfg.seed)?;
    let records = run.simulate().map_err(CliError::from_model)?;
    let mut csv = Vec::new();
    write_records(&mut csv, &records).map_err(CliError::from_model)?;
    let mut kv = KvBlock::default();
    kv.push("run.pulses", records.len());
    kv.push("run.stokes_index", cfg.stokes_index.index());
    kv.push("run.expected_nrf", fmt_f64(run.expected_nrf().map_err(CliError::from_model)?));
    kv.push("run.records", &cfg.records_file);
    Ok(Output {
        report: kv.to_text(),
        files: vec![(cfg.records_file.clone(), String::from_utf8(csv).expect("ascii"))],
    })
}

pub fn estimate_records(cfg: &RunConfig, records_csv: &[u8]) -> Result<(CalibrationResult, NrfEstimate), CliError> {
    let records = read_records(records_csv).map_err(|e| CliError::Input(e.to_string()))?;
    let dets = cfg.detectors()?;
    let (cal, _, est) =
        analyse_run(&records, (&dets.0, &dets.1), &settings(cfg, derive_seed(cfg.seed, &[7]))).map_err(CliError::from_data)?;
    Ok((cal, est))
}

pub fn cmd_estimate(cfg: &RunConfig, records_path: &Path) -> Result<Output, CliError> {
    let bytes = fs::read(records_path).map_err(|e| CliError::Input(format!("{}: {e}", records_path.display())))?;
    let (cal, est) = estimate_records(cfg, &bytes)?;
    let f = fmt_f64;
    let mut kv = KvBlock::default();
    kv.push("estimate.records", est.n_records);
    kv.push("estimate.nrf", f(est.nrf));
    kv.push("estimate.nrf_err", f(est.std_error));
    kv.push("estimate.mean_1", f(est.mean_1));
    kv.push("estimate.mean_2", f(est.mean_2));
    kv.push("estimate.var_diff_raw", f(est.var_diff_raw));
    kv.push("estimate.var_diff_corrected", f(est.var_diff_corrected));
    kv.push("estimate.noise_clamped", est.clamped);
    kv.push("estimate.balance_factor", f(cal.balance_factor));
    kv.push("estimate.balance_residual", f(cal.balance_residual));
    kv.push("estimate.electronic_variance_1", f(cal.electronic_variance_1));
    kv.push("estimate.electronic_variance_2", f(cal.electronic_variance_2));
    kv.push("estimate.shot_noise_level", f(cal.shot_noise_level));
    if let Some(r) = est.shot_noise_normalized(&cal) {
        kv.push("estimate.shot_noise_normalized", f(r));
    }
    Ok(Output {
        report: kv.to_text(),
        files: vec![("estimate.txt".into(), kv.to_text())],
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FitKind {
    Gain,
    Nrf,
}

/// Reads `(x, y, weight)` from a CSV with a header row. Columns are chosen
/// by name; by default the first two, with unit weights.
pub fn read_fit_points(data: &[u8], x_col: Option<&str>, y_col: Option<&str>, w_col: Option<&str>) -> Result<Vec<FitPoint>, CliError> {
    let mut reader = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(data);
    let header = reader.headers().map_err(|e| CliError::Input(format!("header: {e}")))?.clone();
    let find = |name: Option<&str>, default: Option<usize>| -> Result<Option<usize>, CliError> {
        match name {
            Some(n) => header
                .iter()
                .position(|h| h == n)
                .map(Some)
                .ok_or_else(|| CliError::Input(format!("no column named {n:?}"))),
            None => Ok(default),
        }
    };
    let xi = find(x_col, Some(0))?.expect("default");
    let yi = find(y_col, Some(1))?.expect("default");
    let wi = find(w_col, None)?;
    let mut points = Vec::new();
    for (k, row) in reader.records().enumerate() {
        let line = k + 2;
        let row = row.map_err(|e| CliError::Input(format!("line {line}: {e}")))?;
        let get = |i: usize| -> Result<f64, CliError> {
            let v = row.get(i).ok_or_else(|| CliError::Input(format!("line {line}: missing column {}", i + 1)))?;
            v.parse::<f64>()
                .ok()
                .filter(|x| x.is_finite())
                .ok_or_else(|| CliError::Input(format!("line {line}: {v:?} is not a finite number")))
        };
        let weight = match wi {
            Some(i) => get(i)?,
            None => 1.0,
        };
        points.push(FitPoint { x: get(xi)?, y: get(yi)?, weight });
    }
    if points.is_empty() {
        return Err(CliError::Input("no data rows".into()));
    }
    Ok(points)
}

pub fn cmd_fit(cfg: &RunConfig, kind: FitKind, points: &[FitPoint]) -> Result<Output, CliError> {
    let f = fmt_f64;
    let (name, kv, model): (&str, KvBlock, Box<dyn Fn(f64) -> f64>) = match kind {
        FitKind::Gain => {
            let fit = fit_gain_curve(points).map_err(CliError::from_data)?;
            let p = [fit.kappa, fit.modes];
            ("gain", fit.to_kv(), Box::new(move |x| gain_model(x, &p)))
        }
        FitKind::Nrf => {
            let map = plate_map(cfg.plates()?, cfg.pump_wavelength_nm, 0.0);
            let fit = fit_nrf_curve(points, &map, cfg.stokes_index).map_err(CliError::from_data)?;
            let sign = if cfg.stokes_index == StokesIndex::S3 { -1.0 } else { 1.0 };
            let p = [fit.efficiency, fit.phase_offset];
            (
                "nrf",
                fit.to_kv(),
                Box::new(move |a| polsqueeze::fitting::nrf_model(map(a).unwrap_or(f64::NAN), &p, sign)),
            )
        }
    };
    let mut csv = String::from("x,y,weight,model\n");
    for p in points {
        let _ = writeln!(csv, "{},{},{},{}", f(p.x), f(p.y), f(p.weight), f(model(p.x)));
    }
    Ok(Output {
        report: kv.to_text(),
        files: vec![(format!("fit_{name}.csv"), csv), (format!("fit_{name}.txt"), kv.to_text())],
    })
}
