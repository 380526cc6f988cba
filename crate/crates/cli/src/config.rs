//! Run configuration: flat `section.key=value` text. Every key is optional
//! and falls back to the documented default; unknown keys are rejected.

use std::f64::consts::PI;

use polsqueeze::detector::{DetectorParams, AMPLIFICATION_1, AMPLIFICATION_2, DETECTOR_QUANTUM_EFFICIENCY, ELECTRONIC_NOISE_SIGMA};
use polsqueeze::kv::{fmt_f64, KvBlock};
use polsqueeze::spectral::{
    Alignment, BboSellmeier, CascadeModel, CrystalParams, QuartzPlatePair, GRID_MIN_NM, GRID_POINTS,
    NONDEGENERATE_SIGNAL_NM, PUMP_WAVELENGTH_NM,
};
use polsqueeze::{Efficiency, StokesIndex};

use crate::error::CliError;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DetectorConfig {
    pub amplification: f64,
    pub noise_sigma: f64,
    pub quantum_efficiency: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum AlignmentChoice {
    Degenerate,
    NonDegenerate,
}

impl AlignmentChoice {
    pub fn name(self) -> &'static str {
        match self {
            Self::Degenerate => "degenerate",
            Self::NonDegenerate => "nondegenerate",
        }
    }

    pub fn from_name(s: &str) -> Option<Self> {
        match s {
            "degenerate" => Some(Self::Degenerate),
            "nondegenerate" => Some(Self::NonDegenerate),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    // OPA
    pub gain: f64,
    pub pump_phase: f64,
    pub mode_count: u64,
    /// mW^-1/2, used by the power sweep.
    pub gain_coefficient: f64,
    // pump
    pub pump_wavelength_nm: f64,
    pub pulse_width_ps: f64,
    pub repetition_rate_hz: f64,
    pub max_power_mw: f64,
    // losses and spectral degradation
    pub optical_efficiency: f64,
    pub squeezed_fraction: f64,
    pub detector_1: DetectorConfig,
    pub detector_2: DetectorConfig,
    pub plate_thickness_1_um: f64,
    pub plate_thickness_2_um: f64,
    pub crystal_length_mm: f64,
    pub second_length_mm: f64,
    pub sellmeier: BboSellmeier,
    pub alignment: AlignmentChoice,
    pub signal_nm: f64,
    pub grid_min_nm: f64,
    pub grid_points: usize,
    pub stokes_index: StokesIndex,
    pub n_pulses: usize,
    pub calibration_pulses: usize,
    pub seed: u64,
    pub tilt_min_deg: f64,
    pub tilt_max_deg: f64,
    pub tilt_steps: usize,
    /// Pump phase at zero plate tilt.
    pub phase_offset: f64,
    pub power_steps: usize,
    /// Relative scatter added to the power sweep; 0 gives the analytic curve.
    pub power_noise: f64,
    pub records_file: String,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            gain: 0.3,
            pump_phase: PI,
            mode_count: 1_000_000,
            gain_coefficient: 0.31,
            pump_wavelength_nm: PUMP_WAVELENGTH_NM,
            pulse_width_ps: 17.0,
            repetition_rate_hz: 1000.0,
            max_power_mw: 120.0,
            optical_efficiency: 0.5,
            squeezed_fraction: 1.0,
            detector_1: DetectorConfig {
                amplification: AMPLIFICATION_1,
                noise_sigma: ELECTRONIC_NOISE_SIGMA,
                quantum_efficiency: DETECTOR_QUANTUM_EFFICIENCY,
            },
            detector_2: DetectorConfig {
                amplification: AMPLIFICATION_2,
                noise_sigma: ELECTRONIC_NOISE_SIGMA,
                quantum_efficiency: DETECTOR_QUANTUM_EFFICIENCY,
            },
            plate_thickness_1_um: 532.0,
            plate_thickness_2_um: 523.0,
            crystal_length_mm: 1.0,
            second_length_mm: 1.0,
            sellmeier: BboSellmeier::default(),
            alignment: AlignmentChoice::Degenerate,
            signal_nm: NONDEGENERATE_SIGNAL_NM,
            grid_min_nm: GRID_MIN_NM,
            grid_points: GRID_POINTS,
            stokes_index: StokesIndex::S2,
            n_pulses: 30_000,
            calibration_pulses: 30_000,
            seed: 1,
            tilt_min_deg: 0.0,
            tilt_max_deg: 30.0,
            tilt_steps: 31,
            phase_offset: 0.0,
            power_steps: 12,
            power_noise: 0.0,
            records_file: "records.csv".into(),
        }
    }
}

fn bad(field: &str, message: impl Into<String>) -> CliError {
    CliError::Config {
        field: field.to_string(),
        message: message.into(),
    }
}

struct Reader<'a> {
    block: &'a KvBlock,
    used: Vec<&'static str>,
}

impl Reader<'_> {
    fn raw(&mut self, key: &'static str) -> Option<&str> {
        self.used.push(key);
        self.block.get(key)
    }

    fn parsed<T: std::str::FromStr>(&mut self, key: &'static str, slot: &mut T) -> Result<(), CliError> {
        let line = self.block.line_of(key);
        if let Some(v) = self.raw(key) {
            *slot = v
                .parse()
                .map_err(|_| bad(key, format!("line {line}: cannot parse {v:?}")))?;
        }
        Ok(())
    }
}

impl RunConfig {
    pub fn parse(text: &str) -> Result<Self, CliError> {
        let block = KvBlock::parse(text).map_err(|e| bad("config", e.to_string()))?;
        Self::from_kv(&block)
    }

    pub fn from_kv(block: &KvBlock) -> Result<Self, CliError> {
        let mut c = Self::default();
        let mut r = Reader { block, used: Vec::new() };
        r.parsed("opa.gain", &mut c.gain)?;
        r.parsed("opa.pump_phase", &mut c.pump_phase)?;
        r.parsed("opa.mode_count", &mut c.mode_count)?;
        r.parsed("opa.gain_coefficient", &mut c.gain_coefficient)?;
        r.parsed("pump.wavelength_nm", &mut c.pump_wavelength_nm)?;
        r.parsed("pump.pulse_width_ps", &mut c.pulse_width_ps)?;
        r.parsed("pump.repetition_rate_hz", &mut c.repetition_rate_hz)?;
        r.parsed("pump.max_power_mw", &mut c.max_power_mw)?;
        r.parsed("optics.efficiency", &mut c.optical_efficiency)?;
        r.parsed("optics.squeezed_fraction", &mut c.squeezed_fraction)?;
        r.parsed("detector1.amplification", &mut c.detector_1.amplification)?;
        r.parsed("detector1.noise_sigma", &mut c.detector_1.noise_sigma)?;
        r.parsed("detector1.quantum_efficiency", &mut c.detector_1.quantum_efficiency)?;
        r.parsed("detector2.amplification", &mut c.detector_2.amplification)?;
        r.parsed("detector2.noise_sigma", &mut c.detector_2.noise_sigma)?;
        r.parsed("detector2.quantum_efficiency", &mut c.detector_2.quantum_efficiency)?;
        r.parsed("plates.thickness_1_um", &mut c.plate_thickness_1_um)?;
        r.parsed("plates.thickness_2_um", &mut c.plate_thickness_2_um)?;
        r.parsed("crystal.length_mm", &mut c.crystal_length_mm)?;
        r.parsed("crystal.second_length_mm", &mut c.second_length_mm)?;
        if let Some(v) = r.raw("crystal.sellmeier") {
            c.sellmeier = BboSellmeier::from_name(v)
                .ok_or_else(|| bad("crystal.sellmeier", format!("unknown table {v:?}; use bbo-eimerl-1987 or bbo-kato-1986")))?;
        }
        if let Some(v) = r.raw("crystal.alignment") {
            c.alignment = AlignmentChoice::from_name(v)
                .ok_or_else(|| bad("crystal.alignment", format!("{v:?} is neither degenerate nor nondegenerate")))?;
        }
        r.parsed("crystal.signal_nm", &mut c.signal_nm)?;
        r.parsed("crystal.grid_min_nm", &mut c.grid_min_nm)?;
        r.parsed("crystal.grid_points", &mut c.grid_points)?;
        let mut index = c.stokes_index.index();
        r.parsed("measurement.stokes_index", &mut index)?;
        c.stokes_index =
            StokesIndex::from_index(index).ok_or_else(|| bad("measurement.stokes_index", "must be 1, 2 or 3"))?;
        r.parsed("measurement.n_pulses", &mut c.n_pulses)?;
        r.parsed("measurement.calibration_pulses", &mut c.calibration_pulses)?;
        r.parsed("measurement.seed", &mut c.seed)?;
        r.parsed("sweep.tilt_min_deg", &mut c.tilt_min_deg)?;
        r.parsed("sweep.tilt_max_deg", &mut c.tilt_max_deg)?;
        r.parsed("sweep.tilt_steps", &mut c.tilt_steps)?;
        r.parsed("sweep.phase_offset", &mut c.phase_offset)?;
        r.parsed("sweep.power_steps", &mut c.power_steps)?;
        r.parsed("sweep.power_noise", &mut c.power_noise)?;
        if let Some(v) = r.raw("output.records") {
            c.records_file = v.to_string();
        }
        if let Some(k) = block.keys().find(|k| !r.used.contains(k)) {
            return Err(bad(k, format!("line {}: unknown key", block.line_of(k))));
        }
        c.validate()?;
        Ok(c)
    }

    pub fn to_kv(&self) -> KvBlock {
        let mut b = KvBlock::default();
        let f = fmt_f64;
        b.push("opa.gain", f(self.gain));
        b.push("opa.pump_phase", f(self.pump_phase));
        b.push("opa.mode_count", self.mode_count);
        b.push("opa.gain_coefficient", f(self.gain_coefficient));
        b.push("pump.wavelength_nm", f(self.pump_wavelength_nm));
        b.push("pump.pulse_width_ps", f(self.pulse_width_ps));
        b.push("pump.repetition_rate_hz", f(self.repetition_rate_hz));
        b.push("pump.max_power_mw", f(self.max_power_mw));
        b.push("optics.efficiency", f(self.optical_efficiency));
        b.push("optics.squeezed_fraction", f(self.squeezed_fraction));
        for (p, d) in [("detector1", &self.detector_1), ("detector2", &self.detector_2)] {
            b.push(format!("{p}.amplification"), f(d.amplification));
            b.push(format!("{p}.noise_sigma"), f(d.noise_sigma));
            b.push(format!("{p}.quantum_efficiency"), f(d.quantum_efficiency));
        }
        b.push("plates.thickness_1_um", f(self.plate_thickness_1_um));
        b.push("plates.thickness_2_um", f(self.plate_thickness_2_um));
        b.push("crystal.length_mm", f(self.crystal_length_mm));
        b.push("crystal.second_length_mm", f(self.second_length_mm));
        b.push("crystal.sellmeier", self.sellmeier.name());
        b.push("crystal.alignment", self.alignment.name());
        b.push("crystal.signal_nm", f(self.signal_nm));
        b.push("crystal.grid_min_nm", f(self.grid_min_nm));
        b.push("crystal.grid_points", self.grid_points);
        b.push("measurement.stokes_index", self.stokes_index.index());
        b.push("measurement.n_pulses", self.n_pulses);
        b.push("measurement.calibration_pulses", self.calibration_pulses);
        b.push("measurement.seed", self.seed);
        b.push("sweep.tilt_min_deg", f(self.tilt_min_deg));
        b.push("sweep.tilt_max_deg", f(self.tilt_max_deg));
        b.push("sweep.tilt_steps", self.tilt_steps);
        b.push("sweep.phase_offset", f(self.phase_offset));
        b.push("sweep.power_steps", self.power_steps);
        b.push("sweep.power_noise", f(self.power_noise));
        b.push("output.records", &self.records_file);
        b
    }

    pub fn to_text(&self) -> String {
        self.to_kv().to_text()
    }

    /// Checks every physical parameter against its module's domain.
    pub fn validate(&self) -> Result<(), CliError> {
        fn wrap(field: &'static str) -> impl Fn(polsqueeze::Error) -> CliError {
            move |e| bad(field, e.to_string())
        }
        polsqueeze::OpaConfig::new(self.gain, self.pump_phase, self.mode_count).map_err(wrap("opa"))?;
        if !(self.gain_coefficient >= 0.0 && self.gain_coefficient.is_finite()) {
            return Err(bad("opa.gain_coefficient", "must be finite and non-negative"));
        }
        for (k, v) in [
            ("pump.pulse_width_ps", self.pulse_width_ps),
            ("pump.repetition_rate_hz", self.repetition_rate_hz),
            ("pump.max_power_mw", self.max_power_mw),
        ] {
            if !(v > 0.0 && v.is_finite()) {
                return Err(bad(k, "must be positive"));
            }
        }
        Efficiency::new(self.optical_efficiency).map_err(wrap("optics.efficiency"))?;
        if !(-1.0..=1.0).contains(&self.squeezed_fraction) {
            return Err(bad("optics.squeezed_fraction", "must lie in [-1, 1]"));
        }
        self.detectors()?;
        self.plates()?;
        if !(self.second_length_mm >= 0.0 && self.second_length_mm.is_finite()) {
            return Err(bad("crystal.second_length_mm", "must be non-negative"));
        }
        if self.grid_points < 3 {
            return Err(bad("crystal.grid_points", "at least 3 points"));
        }
        CrystalParams::new(self.crystal_length_mm, 30.0, self.sellmeier, self.pump_wavelength_nm)
            .map_err(wrap("crystal"))?;
        if !(self.signal_nm > self.pump_wavelength_nm && self.signal_nm.is_finite()) {
            return Err(bad("crystal.signal_nm", "must exceed the pump wavelength"));
        }
        if self.n_pulses < 2 {
            return Err(bad("measurement.n_pulses", "at least 2 pulses"));
        }
        if self.calibration_pulses < 2 {
            return Err(bad("measurement.calibration_pulses", "at least 2 pulses"));
        }
        if !(self.tilt_min_deg.abs() <= 30.0 && self.tilt_max_deg.abs() <= 30.0 && self.tilt_min_deg <= self.tilt_max_deg) {
            return Err(bad("sweep.tilt_max_deg", "tilts must satisfy -30 <= min <= max <= 30 degrees"));
        }
        if self.tilt_steps < 2 {
            return Err(bad("sweep.tilt_steps", "at least 2 steps"));
        }
        if !self.phase_offset.is_finite() {
            return Err(bad("sweep.phase_offset", "must be finite"));
        }
        if self.power_steps < 2 {
            return Err(bad("sweep.power_steps", "at least 2 steps"));
        }
        if !(self.power_noise >= 0.0 && self.power_noise < 1.0) {
            return Err(bad("sweep.power_noise", "must lie in [0, 1)"));
        }
        if self.records_file.is_empty() {
            return Err(bad("output.records", "empty file name"));
        }
        Ok(())
    }

    pub fn detectors(&self) -> Result<(DetectorParams, DetectorParams), CliError> {
        let make = |p: &str, d: &DetectorConfig| {
            DetectorParams::new(d.amplification, d.noise_sigma, d.quantum_efficiency).map_err(|e| bad(p, e.to_string()))
        };
        Ok((make("detector1", &self.detector_1)?, make("detector2", &self.detector_2)?))
    }

    pub fn plates(&self) -> Result<QuartzPlatePair, CliError> {
        QuartzPlatePair::new(self.plate_thickness_1_um, self.plate_thickness_2_um).map_err(|e| bad("plates", e.to_string()))
    }

    /// Optical transmission times the mean detector quantum efficiency.
    pub fn total_efficiency(&self) -> f64 {
        self.optical_efficiency * 0.5 * (self.detector_1.quantum_efficiency + self.detector_2.quantum_efficiency)
    }

    pub fn cascade(&self, alignment: AlignmentChoice) -> Result<CascadeModel, CliError> {
        let alignment = match alignment {
            AlignmentChoice::Degenerate => Alignment::Degenerate,
            AlignmentChoice::NonDegenerate => Alignment::NonDegenerate {
                signal_nm: self.signal_nm,
            },
        };
        let crystal = CrystalParams::phase_matched(
            self.crystal_length_mm,
            alignment.signal_nm(self.pump_wavelength_nm),
            self.sellmeier,
            self.pump_wavelength_nm,
        )
        .map_err(|e| bad("crystal", e.to_string()))?;
        Ok(CascadeModel {
            crystal,
            second_length_mm: self.second_length_mm,
            alignment,
            grid_min_nm: self.grid_min_nm,
            grid_points: self.grid_points,
        })
    }

    /// Tilts of the phase sweep, endpoints included.
    pub fn tilts(&self) -> Vec<f64> {
        let n = self.tilt_steps;
        (0..n)
            .map(|i| self.tilt_min_deg + (self.tilt_max_deg - self.tilt_min_deg) * i as f64 / (n - 1) as f64)
            .collect()
    }
}
