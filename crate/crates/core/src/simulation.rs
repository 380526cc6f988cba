//! End-to-end virtual runs: OPA state, detection basis, losses and mode
//! ensemble from the Fock engine, followed by the detector chain.

use crate::detector::{digitize, DetectorParams, PulseRecord};
use crate::error::{Error, Result};
use crate::fock::{self, ModeEnsemble, SamplingStrategy};
use crate::rng::derive_seed;
use crate::stokes::{Efficiency, StokesIndex};

#[derive(Debug, Clone, PartialEq)]
pub struct VirtualRun {
    pub gain: f64,
    pub pump_phase: f64,
    pub index: StokesIndex,
    pub mode_count: u64,
    /// Transmission between the crystals and the detectors.
    pub optical_efficiency: Efficiency,
    /// Fraction f of the spectrum carrying the intended relative phase.
    pub squeezed_fraction: f64,
    pub detectors: (DetectorParams, DetectorParams),
    pub n_pulses: usize,
    pub seed: u64,
    pub strategy: SamplingStrategy,
}

impl VirtualRun {
    /// Total detection efficiency of each arm.
    pub fn efficiencies(&self) -> (Efficiency, Efficiency) {
        (
            self.optical_efficiency.then(self.detectors.0.quantum_efficiency()),
            self.optical_efficiency.then(self.detectors.1.quantum_efficiency()),
        )
    }

    /// Mode ensemble of one pulse. With `f < 1` the modes are split into two
    /// equal groups whose pump phases are offset by `+-acos(f)`, so the
    /// mode-averaged `cos` of the phase is `f cos(phi)`.
    pub fn ensemble(&self) -> Result<ModeEnsemble> {
        let f = self.squeezed_fraction;
        if !(-1.0..=1.0).contains(&f) {
            return Err(Error::InvalidParameter {
                name: "squeezed_fraction",
                value: f,
                reason: "must lie in [-1, 1]",
            });
        }
        if self.mode_count == 0 {
            return Err(Error::InvalidParameter {
                name: "mode_count",
                value: 0.0,
                reason: "must be at least 1",
            });
        }
        let (e1, e2) = self.efficiencies();
        let dist = |phase: f64| fock::stokes_measurement_asymmetric(self.gain, phase, self.index, e1, e2);
        let ens = if f == 1.0 {
            ModeEnsemble::uniform(&dist(self.pump_phase)?, self.mode_count)?
        } else {
            let offset = f.acos();
            let half = self.mode_count / 2;
            ModeEnsemble::from_groups(&[
                (dist(self.pump_phase + offset)?, self.mode_count - half),
                (dist(self.pump_phase - offset)?, half),
            ])?
        };
        Ok(ens.with_strategy(self.strategy))
    }

    /// Raw pulse records; a pure function of the run description.
    pub fn simulate(&self) -> Result<Vec<PulseRecord>> {
        if self.n_pulses == 0 {
            return Err(Error::InsufficientData {
                what: "n_pulses",
                needed: 1,
                got: 0,
            });
        }
        let counts = self.ensemble()?.sample(self.n_pulses, derive_seed(self.seed, &[1]));
        Ok(digitize(
            &counts,
            (&self.detectors.0, &self.detectors.1),
            0,
            derive_seed(self.seed, &[2]),
        ))
    }

    /// Exact NRF of the simulated photon counts, before any electronics.
    pub fn expected_nrf(&self) -> Result<f64> {
        self.ensemble()?.moments().nrf()
    }
}
