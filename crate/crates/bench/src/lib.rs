//! Shared fixtures for the benchmarks.

use std::f64::consts::PI;

use polsqueeze::detector::DetectorParams;
use polsqueeze::fock::SamplingStrategy;
use polsqueeze::simulation::VirtualRun;
use polsqueeze::{Efficiency, StokesIndex};

/// The squeezed reference run with a configurable pulse count and sampler.
pub fn reference_run(mode_count: u64, n_pulses: usize, strategy: SamplingStrategy) -> VirtualRun {
    VirtualRun {
        gain: 0.3,
        pump_phase: PI,
        index: StokesIndex::S2,
        mode_count,
        optical_efficiency: Efficiency::new(0.5).expect("valid"),
        squeezed_fraction: 1.0,
        detectors: (DetectorParams::reference_1(), DetectorParams::reference_2()),
        n_pulses,
        seed: 1,
        strategy,
    }
}
