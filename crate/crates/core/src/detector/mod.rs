//! Virtual detection chain.
//!
//! Photon counts become integrated charge signals `A (n + g)` with a Gaussian
//! electronic-noise term `g` quoted in photon equivalents. The analysis side
//! balances the two arms numerically, references a shot-noise source,
//! subtracts the electronic-noise variance and estimates the NRF with a
//! delta-method standard error.

mod io;
mod moments;

pub use io::{read_calibration, read_records, write_calibration, write_records};
pub use moments::PairMoments;

use rand_distr::{Binomial, Distribution, Poisson, StandardNormal};
use rayon::prelude::*;

use crate::error::{check_finite, Error, Result};
use crate::fock::PhotonCounts;
use crate::rng::{stream_rng, Stream};
use crate::stokes::Efficiency;

/// Detector 1 amplification, nV s per photon.
pub const AMPLIFICATION_1: f64 = 9.96e-3;
/// Detector 2 amplification, nV s per photon.
pub const AMPLIFICATION_2: f64 = 1.107e-2;
/// Electronic noise per pulse in photon equivalents.
pub const ELECTRONIC_NOISE_SIGMA: f64 = 180.0;
pub const DETECTOR_QUANTUM_EFFICIENCY: f64 = 0.9;

/// Fewest records [`balance`] accepts.
pub const MIN_BALANCE_RECORDS: usize = 1000;
/// Required agreement of the calibrated arm means.
pub const BALANCE_ACCURACY: f64 = 1e-3;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DetectorParams {
    amplification: f64,
    noise_sigma: f64,
    quantum_efficiency: Efficiency,
}

impl DetectorParams {
    pub fn new(amplification: f64, noise_sigma: f64, quantum_efficiency: f64) -> Result<Self> {
        let amplification = check_finite("amplification", amplification)?;
        if amplification <= 0.0 {
            return Err(Error::InvalidParameter {
                name: "amplification",
                value: amplification,
                reason: "must be positive",
            });
        }
        let noise_sigma = check_finite("electronic_noise_sigma", noise_sigma)?;
        if noise_sigma < 0.0 {
            return Err(Error::InvalidParameter {
                name: "electronic_noise_sigma",
                value: noise_sigma,
                reason: "must be non-negative",
            });
        }
        Ok(Self {
            amplification,
            noise_sigma,
            quantum_efficiency: Efficiency::new(quantum_efficiency)?,
        })
    }

    /// Detector 1 of the reference setup.
    pub fn reference_1() -> Self {
        Self::new(AMPLIFICATION_1, ELECTRONIC_NOISE_SIGMA, DETECTOR_QUANTUM_EFFICIENCY).expect("valid constants")
    }

    /// Detector 2 of the reference setup.
    pub fn reference_2() -> Self {
        Self::new(AMPLIFICATION_2, ELECTRONIC_NOISE_SIGMA, DETECTOR_QUANTUM_EFFICIENCY).expect("valid constants")
    }

    pub fn amplification(&self) -> f64 {
        self.amplification
    }

    pub fn noise_sigma(&self) -> f64 {
        self.noise_sigma
    }

    pub fn quantum_efficiency(&self) -> Efficiency {
        self.quantum_efficiency
    }

    pub fn with_noise_sigma(self, sigma: f64) -> Result<Self> {
        Self::new(self.amplification, sigma, self.quantum_efficiency.value())
    }

    pub fn with_amplification(self, amplification: f64) -> Result<Self> {
        Self::new(amplification, self.noise_sigma, self.quantum_efficiency.value())
    }
}

/// Signal of one detector for `n_photons` detected photons. `noise_draw` is a
/// standard normal variate; it is scaled by the detector's noise sigma.
pub fn to_electrical(n_photons: f64, params: &DetectorParams, noise_draw: f64) -> f64 {
    params.amplification * (n_photons + params.noise_sigma * noise_draw)
}

/// One laser shot as recorded by the two charge-sensitive channels.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PulseRecord {
    pub pulse_id: u64,
    /// nV s.
    pub s1: f64,
    pub s2: f64,
    /// Photon equivalents, present after [`balance`].
    pub n1_cal: Option<f64>,
    pub n2_cal: Option<f64>,
}

impl PulseRecord {
    pub fn raw(pulse_id: u64, s1: f64, s2: f64) -> Self {
        Self {
            pulse_id,
            s1,
            s2,
            n1_cal: None,
            n2_cal: None,
        }
    }

    pub fn is_calibrated(&self) -> bool {
        self.n1_cal.is_some() && self.n2_cal.is_some()
    }
}

/// Turns detected photon counts into raw records. Pulse `i` gets id
/// `first_id + i`; its noise depends only on `(seed, id)`.
pub fn digitize(
    counts: &[PhotonCounts],
    detectors: (&DetectorParams, &DetectorParams),
    first_id: u64,
    seed: u64,
) -> Vec<PulseRecord> {
    let (d1, d2) = detectors;
    counts
        .par_iter()
        .enumerate()
        .map(|(i, c)| {
            let id = first_id + i as u64;
            let mut rng = stream_rng(seed, Stream::ElectronicNoise, id);
            let z1: f64 = StandardNormal.sample(&mut rng);
            let z2: f64 = StandardNormal.sample(&mut rng);
            PulseRecord::raw(id, to_electrical(c.n1 as f64, d1, z1), to_electrical(c.n2 as f64, d2, z2))
        })
        .collect()
}

/// Everything the analysis needs to turn signals into corrected statistics.
/// All variances are in photon equivalents of detector 1 (`s / A1`).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CalibrationResult {
    pub balance_factor: f64,
    /// Var(n1 - n2) of a shot-noise limited source at the run's mean photon number.
    pub shot_noise_level: f64,
    pub electronic_variance_1: f64,
    /// Variance of `s2 / A1` on dark pulses, before scaling by the balance factor.
    pub electronic_variance_2: f64,
    /// |mean(n1) - mean(n2)| / mean(n1) after balancing.
    pub balance_residual: f64,
}

impl CalibrationResult {
    /// Noise variance added to the balanced difference signal.
    pub fn electronic_difference_variance(&self) -> f64 {
        self.electronic_variance_1 + self.balance_factor.powi(2) * self.electronic_variance_2
    }
}

/// Numerical balancing: `beta = mean(s1) / mean(s2)`, `n1 = s1 / A1`,
/// `n2 = beta s2 / A1`. Only the balance factor and residual of the returned
/// calibration are filled in.
pub fn balance(records: &[PulseRecord], reference_amplification: f64) -> Result<(CalibrationResult, Vec<PulseRecord>)> {
    if records.len() < MIN_BALANCE_RECORDS {
        return Err(Error::InsufficientData {
            what: "balance",
            needed: MIN_BALANCE_RECORDS,
            got: records.len(),
        });
    }
    if !(reference_amplification > 0.0 && reference_amplification.is_finite()) {
        return Err(Error::InvalidParameter {
            name: "reference_amplification",
            value: reference_amplification,
            reason: "must be positive",
        });
    }
    let sums = PairMoments::from_pairs(records.iter().map(|r| (r.s1, r.s2)));
    let (m1, m2) = (sums.mean_x(), sums.mean_y());
    if m1 <= 0.0 {
        return Err(Error::NonPositiveMean("detector 1 signal"));
    }
    if m2 <= 0.0 {
        return Err(Error::NonPositiveMean("detector 2 signal"));
    }
    let beta = m1 / m2;
    let calibrated: Vec<PulseRecord> = records
        .iter()
        .map(|r| PulseRecord {
            n1_cal: Some(r.s1 / reference_amplification),
            n2_cal: Some(beta * r.s2 / reference_amplification),
            ..*r
        })
        .collect();
    let check = PairMoments::from_pairs(calibrated.iter().map(|r| (r.n1_cal.unwrap(), r.n2_cal.unwrap())));
    let residual = (check.mean_x() - check.mean_y()).abs() / check.mean_x();
    if residual > BALANCE_ACCURACY {
        return Err(Error::Calibration(format!(
            "balance residual {residual:.3e} exceeds {BALANCE_ACCURACY}"
        )));
    }
    Ok((
        CalibrationResult {
            balance_factor: beta,
            shot_noise_level: 0.0,
            electronic_variance_1: 0.0,
            electronic_variance_2: 0.0,
            balance_residual: residual,
        },
        calibrated,
    ))
}

/// Photon counts of a Poissonian source of mean `mean_photons` split 50/50
/// onto the two detectors, each with its quantum efficiency.
pub fn shot_noise_counts(
    mean_photons: f64,
    efficiencies: (Efficiency, Efficiency),
    n_pulses: usize,
    seed: u64,
) -> Result<Vec<PhotonCounts>> {
    let mean_photons = check_finite("mean_photons", mean_photons)?;
    if mean_photons <= 0.0 {
        return Err(Error::NonPositiveMean("shot-noise source"));
    }
    // binomial thinning of a Poisson variable is again Poisson, so each arm
    // is independent; drawing the split explicitly keeps the model literal
    let source = Poisson::new(mean_photons).map_err(|_| Error::InvalidParameter {
        name: "mean_photons",
        value: mean_photons,
        reason: "not a usable Poisson mean",
    })?;
    let (e1, e2) = (efficiencies.0.value(), efficiencies.1.value());
    Ok((0..n_pulses as u64)
        .into_par_iter()
        .map(|i| {
            let mut rng = stream_rng(seed, Stream::ShotNoise, i);
            let n = source.sample(&mut rng) as u64;
            let to_1 = Binomial::new(n, 0.5).expect("valid p").sample(&mut rng);
            let k1 = Binomial::new(to_1, e1).expect("efficiency in [0, 1]").sample(&mut rng);
            let k2 = Binomial::new(n - to_1, e2).expect("efficiency in [0, 1]").sample(&mut rng);
            PhotonCounts { n1: k1, n2: k2 }
        })
        .collect())
}

/// Shot-noise level Var(n1 - n2) measured on a simulated Poissonian source.
pub fn shot_noise_calibration(mean_photons: f64, n_pulses: usize, seed: u64) -> Result<f64> {
    if n_pulses < 2 {
        return Err(Error::InsufficientData {
            what: "shot_noise_calibration",
            needed: 2,
            got: n_pulses,
        });
    }
    let counts = shot_noise_counts(mean_photons, (Efficiency::PERFECT, Efficiency::PERFECT), n_pulses, seed)?;
    Ok(PairMoments::from_pairs(counts.iter().map(|c| (c.n1 as f64, c.n2 as f64))).var_diff())
}

/// Electronic variances `(Var(s1)/A1^2, Var(s2)/A1^2)` measured on dark pulses.
pub fn electronic_noise_calibration(
    detectors: (&DetectorParams, &DetectorParams),
    reference_amplification: f64,
    n_pulses: usize,
    seed: u64,
) -> Result<(f64, f64)> {
    if n_pulses < 2 {
        return Err(Error::InsufficientData {
            what: "electronic_noise_calibration",
            needed: 2,
            got: n_pulses,
        });
    }
    let dark = vec![PhotonCounts::default(); n_pulses];
    let records = digitize(&dark, detectors, 0, seed);
    let m = PairMoments::from_pairs(
        records
            .iter()
            .map(|r| (r.s1 / reference_amplification, r.s2 / reference_amplification)),
    );
    Ok((m.var_x(), m.var_y()))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NoiseSubtraction {
    pub variance: f64,
    /// The raw difference went negative and was clamped to zero.
    pub clamped: bool,
}

/// Removes the electronic contribution `e1 + beta^2 e2` from a measured
/// difference variance. A negative result is clamped to zero and flagged.
/// With `sample_size` given, a result more than three standard errors of the
/// variance estimator below zero is reported as a calibration failure.
pub fn subtract_electronic_noise(
    var_measured: f64,
    cal: &CalibrationResult,
    sample_size: Option<usize>,
) -> Result<NoiseSubtraction> {
    let var_measured = check_finite("var_measured", var_measured)?;
    if var_measured < 0.0 {
        return Err(Error::InvalidParameter {
            name: "var_measured",
            value: var_measured,
            reason: "a variance cannot be negative",
        });
    }
    let corrected = var_measured - cal.electronic_difference_variance();
    if corrected >= 0.0 {
        return Ok(NoiseSubtraction {
            variance: corrected,
            clamped: false,
        });
    }
    if let Some(n) = sample_size {
        // standard error of a sample variance for near-Gaussian data
        let sigma = var_measured * (2.0 / (n.max(2) - 1) as f64).sqrt();
        if corrected < -3.0 * sigma {
            return Err(Error::Calibration(format!(
                "noise-subtracted variance {corrected:.4e} is {:.1} standard errors below zero",
                -corrected / sigma
            )));
        }
    }
    Ok(NoiseSubtraction {
        variance: 0.0,
        clamped: true,
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NrfEstimate {
    pub nrf: f64,
    pub std_error: f64,
    pub mean_1: f64,
    pub mean_2: f64,
    /// Var(n1 - n2) before and after noise subtraction.
    pub var_diff_raw: f64,
    pub var_diff_corrected: f64,
    pub mean_sum: f64,
    pub n_records: usize,
    pub clamped: bool,
}

impl NrfEstimate {
    /// Corrected variance over the calibrated shot-noise level, when one is known.
    pub fn shot_noise_normalized(&self, cal: &CalibrationResult) -> Option<f64> {
        (cal.shot_noise_level > 0.0).then(|| self.var_diff_corrected / cal.shot_noise_level)
    }
}

/// NRF of calibrated records after electronic-noise subtraction.
///
/// The standard error follows from the delta method applied to the ratio of
/// the sample variance of `D = n1 - n2` and the sample mean of `S = n1 + n2`:
/// `Var(R) ~ [Var(s_D^2) - 2 R Cov(s_D^2, S_bar) + R^2 Var(S_bar)] / S_bar^2`
/// with `Var(s_D^2) = (mu4_D - var_D^2) / n` and
/// `Cov(s_D^2, S_bar) = E[(D - mu_D)^2 (S - mu_S)] / n`. For Gaussian `D`
/// the first term is the familiar `2 var_D^2 / n`. The calibration constants
/// are treated as exact.
pub fn estimate_nrf(records: &[PulseRecord], cal: &CalibrationResult) -> Result<NrfEstimate> {
    if records.len() < 2 {
        return Err(Error::InsufficientData {
            what: "estimate_nrf",
            needed: 2,
            got: records.len(),
        });
    }
    let mut pairs = Vec::with_capacity(records.len());
    for r in records {
        match (r.n1_cal, r.n2_cal) {
            (Some(a), Some(b)) => pairs.push((a, b)),
            _ => {
                return Err(Error::Calibration(format!(
                    "pulse {} has no calibrated photon numbers",
                    r.pulse_id
                )))
            }
        }
    }
    let m = PairMoments::from_slice(&pairs);
    let mean_sum = m.mean_x() + m.mean_y();
    if mean_sum <= 0.0 {
        return Err(Error::NonPositiveMean("n1 + n2"));
    }
    let var_raw = m.var_diff();
    let sub = subtract_electronic_noise(var_raw, cal, Some(pairs.len()))?;
    let ratio = sub.variance / mean_sum;
    let n = pairs.len() as f64;
    let higher = m.difference_higher_moments(&pairs);
    let var_s2 = (higher.mu4_diff - var_raw * var_raw).max(0.0) / n;
    let cov = higher.mu_diff2_sum / n;
    let var_sbar = m.var_sum() / n;
    let var_ratio = (var_s2 - 2.0 * ratio * cov + ratio * ratio * var_sbar) / (mean_sum * mean_sum);
    Ok(NrfEstimate {
        nrf: ratio,
        std_error: var_ratio.max(0.0).sqrt(),
        mean_1: m.mean_x(),
        mean_2: m.mean_y(),
        var_diff_raw: var_raw,
        var_diff_corrected: sub.variance,
        mean_sum,
        n_records: pairs.len(),
        clamped: sub.clamped,
    })
}

/// Complete analysis of a raw run: balancing against detector 1, dark-pulse
/// electronic noise, a shot-noise reference at the run's photon level, and
/// the NRF estimate.
#[derive(Debug, Clone, Copy)]
pub struct AnalysisSettings {
    pub reference_amplification: f64,
    pub calibration_pulses: usize,
    pub seed: u64,
}

pub fn analyse_run(
    records: &[PulseRecord],
    detectors: (&DetectorParams, &DetectorParams),
    settings: &AnalysisSettings,
) -> Result<(CalibrationResult, Vec<PulseRecord>, NrfEstimate)> {
    let (mut cal, calibrated) = balance(records, settings.reference_amplification)?;
    let (e1, e2) = electronic_noise_calibration(
        detectors,
        settings.reference_amplification,
        settings.calibration_pulses,
        crate::rng::derive_seed(settings.seed, &[1]),
    )?;
    cal.electronic_variance_1 = e1;
    cal.electronic_variance_2 = e2;
    let est = estimate_nrf(&calibrated, &cal)?;
    if est.mean_sum > 0.0 {
        cal.shot_noise_level = shot_noise_calibration(
            est.mean_sum,
            settings.calibration_pulses,
            crate::rng::derive_seed(settings.seed, &[2]),
        )?;
    }
    Ok((cal, calibrated, est))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn noiseless(a: f64) -> DetectorParams {
        DetectorParams::new(a, 0.0, 0.9).unwrap()
    }

    fn blank_cal(beta: f64, e1: f64, e2: f64) -> CalibrationResult {
        CalibrationResult {
            balance_factor: beta,
            shot_noise_level: 0.0,
            electronic_variance_1: e1,
            electronic_variance_2: e2,
            balance_residual: 0.0,
        }
    }

    #[test]
    fn electrical_signal_scale() {
        let d = noiseless(AMPLIFICATION_1);
        assert!((to_electrical(1000.0, &d, 0.7) - 9.96).abs() < 1e-12);
        assert_eq!(to_electrical(0.0, &d, 0.0), 0.0);
    }

    #[test]
    fn electronic_noise_variance_matches_sigma() {
        let d = DetectorParams::reference_1();
        let counts = vec![PhotonCounts { n1: 500, n2: 500 }; 30_000];
        let recs = digitize(&counts, (&d, &d), 0, 8);
        let m = PairMoments::from_pairs(recs.iter().map(|r| (r.s1 / d.amplification(), r.s2 / d.amplification())));
        assert!((m.var_x() / 180f64.powi(2) - 1.0).abs() < 0.05);
        assert!((m.mean_x() - 500.0).abs() < 5.0 * 180.0 / (30_000f64).sqrt());
    }

    #[test]
    fn rejects_bad_params() {
        assert!(DetectorParams::new(0.0, 1.0, 0.5).is_err());
        assert!(DetectorParams::new(1.0, -1.0, 0.5).is_err());
        assert!(DetectorParams::new(1.0, 1.0, 1.5).is_err());
    }

    #[test]
    fn identical_detectors_balance_to_one() {
        let d = noiseless(AMPLIFICATION_1);
        let counts = vec![PhotonCounts { n1: 300, n2: 300 }; 1000];
        let (cal, _) = balance(&digitize(&counts, (&d, &d), 0, 1), AMPLIFICATION_1).unwrap();
        assert!((cal.balance_factor - 1.0).abs() < 1e-14);
    }

    #[test]
    fn reference_amplifications_give_expected_beta() {
        let (d1, d2) = (noiseless(AMPLIFICATION_1), noiseless(AMPLIFICATION_2));
        let counts = vec![PhotonCounts { n1: 400, n2: 400 }; 1000];
        let (cal, recs) = balance(&digitize(&counts, (&d1, &d2), 0, 1), AMPLIFICATION_1).unwrap();
        assert!((cal.balance_factor - AMPLIFICATION_1 / AMPLIFICATION_2).abs() < 1e-12);
        assert!((cal.balance_factor - 0.900).abs() < 1e-3);
        assert!(cal.balance_residual <= BALANCE_ACCURACY);
        assert!((recs[0].n2_cal.unwrap() - 400.0).abs() < 1e-9);
    }

    #[test]
    fn balance_is_idempotent() {
        let (d1, d2) = (DetectorParams::reference_1(), DetectorParams::reference_2());
        let counts = shot_noise_counts(5000.0, (Efficiency::PERFECT, Efficiency::PERFECT), 2000, 4).unwrap();
        let (_, recs) = balance(&digitize(&counts, (&d1, &d2), 0, 2), AMPLIFICATION_1).unwrap();
        // feed the balanced photon numbers back in as signals
        let again: Vec<_> = recs
            .iter()
            .map(|r| PulseRecord::raw(r.pulse_id, r.n1_cal.unwrap(), r.n2_cal.unwrap()))
            .collect();
        let (cal, _) = balance(&again, 1.0).unwrap();
        assert!((cal.balance_factor - 1.0).abs() < 1e-3);
    }

    #[test]
    fn balance_needs_data_and_signal() {
        let few = vec![PulseRecord::raw(0, 1.0, 1.0); 10];
        assert!(matches!(balance(&few, 1.0), Err(Error::InsufficientData { .. })));
        let dark = vec![PulseRecord::raw(0, 1.0, 0.0); 1000];
        assert!(matches!(balance(&dark, 1.0), Err(Error::NonPositiveMean(_))));
    }

    #[test]
    fn shot_noise_level_tracks_mean() {
        let level = shot_noise_calibration(400.0, 30_000, 17).unwrap();
        assert!((level / 400.0 - 1.0).abs() < 0.05, "{level}");
        assert!(shot_noise_calibration(0.0, 10, 1).is_err());
    }

    #[test]
    fn subtraction_cases() {
        let none = blank_cal(1.0, 0.0, 0.0);
        assert_eq!(subtract_electronic_noise(123.0, &none, None).unwrap().variance, 123.0);
        let cal = blank_cal(0.9, 180f64.powi(2), 180f64.powi(2));
        assert!((cal.electronic_difference_variance() - 58_644.0).abs() < 1e-9);
        let r = subtract_electronic_noise(200f64.powi(2), &cal, None).unwrap();
        assert_eq!(r, NoiseSubtraction { variance: 0.0, clamped: true });
        // far below zero given a large sample is a calibration failure
        assert!(matches!(
            subtract_electronic_noise(200f64.powi(2), &cal, Some(30_000)),
            Err(Error::Calibration(_))
        ));
        assert!(subtract_electronic_noise(-1.0, &none, None).is_err());
    }

    #[test]
    fn estimate_requires_calibrated_records() {
        let recs = vec![PulseRecord::raw(0, 1.0, 1.0); 5];
        assert!(matches!(estimate_nrf(&recs, &blank_cal(1.0, 0.0, 0.0)), Err(Error::Calibration(_))));
        assert!(estimate_nrf(&recs[..1], &blank_cal(1.0, 0.0, 0.0)).is_err());
    }
}
