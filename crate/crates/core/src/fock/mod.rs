//! Exact truncated two-mode Fock-space engine.
//!
//! The two-mode squeezed vacuum of one mode pair is built in its Schmidt
//! form, rotated into the detected polarization ports by a passive two-mode
//! unitary, reduced to a joint photon-number distribution, thinned by losses
//! and sampled. Everything downstream of the state is exact up to the tail
//! mass dropped by the truncation, which is tracked explicitly.

mod basis;
mod distribution;
mod sampling;
mod state;

pub use basis::DetectionBasis;
pub use distribution::{apply_loss, joint_distribution, JointPhotonDistribution, PhotonMoments};
pub use sampling::{sample_pulses, ModeEnsemble, PhotonCounts, PulseSampler, SamplingStrategy, GAUSSIAN_SHORTCUT_MIN_MODES};
pub use state::{required_cutoff, rotate_basis, tmsv_state, TruncatedTwoModeState, DEFAULT_TAIL_TOLERANCE, MAX_ENGINE_GAIN};

use crate::error::Result;
use crate::stokes::{Efficiency, StokesIndex};

/// Per-mode-pair photon counting statistics for measuring `index` at pump
/// phase `pump_phase` after symmetric loss `efficiency` in each arm.
pub fn stokes_measurement(
    gain: f64,
    pump_phase: f64,
    index: StokesIndex,
    efficiency: Efficiency,
) -> Result<JointPhotonDistribution> {
    stokes_measurement_asymmetric(gain, pump_phase, index, efficiency, efficiency)
}

/// As [`stokes_measurement`] with separate efficiencies for the two ports.
pub fn stokes_measurement_asymmetric(
    gain: f64,
    pump_phase: f64,
    index: StokesIndex,
    efficiency_1: Efficiency,
    efficiency_2: Efficiency,
) -> Result<JointPhotonDistribution> {
    let state = TruncatedTwoModeState::tmsv_auto(gain)?;
    let basis = DetectionBasis::for_stokes(index, pump_phase);
    let rotated = rotate_basis(&state, &basis)?;
    Ok(apply_loss(&joint_distribution(&rotated), efficiency_1, efficiency_2))
}
