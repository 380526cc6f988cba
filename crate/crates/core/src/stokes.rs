//! Closed-form Heisenberg-picture model of the two-crystal OPA output.
//!
//! Each of the `m` frequency/angular mode pairs is an independent copy of the
//! two-mode squeezed vacuum in the elliptical modes `(a_phi, b_phi)`, so all
//! means and variances below scale linearly with the mode count.

use crate::error::{check_finite, Error, Result};

/// Largest gain accepted by the analytic model; `sinh` stays far from overflow.
pub const MAX_GAIN: f64 = 12.0;

/// Stokes observable measured by the polarization analyser.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum StokesIndex {
    S1,
    S2,
    S3,
}

impl StokesIndex {
    pub const ALL: [Self; 3] = [Self::S1, Self::S2, Self::S3];

    pub fn from_index(index: u8) -> Option<Self> {
        match index {
            1 => Some(Self::S1),
            2 => Some(Self::S2),
            3 => Some(Self::S3),
            _ => None,
        }
    }

    pub fn index(self) -> u8 {
        match self {
            Self::S1 => 1,
            Self::S2 => 2,
            Self::S3 => 3,
        }
    }
}

fn check_gain(gain: f64) -> Result<f64> {
    check_finite("gain", gain)?;
    if gain < 0.0 {
        return Err(Error::InvalidParameter {
            name: "gain",
            value: gain,
            reason: "must be non-negative",
        });
    }
    if gain > MAX_GAIN {
        return Err(Error::InvalidParameter {
            name: "gain",
            value: gain,
            reason: "exceeds the analytic model cap of 12",
        });
    }
    Ok(gain)
}

fn check_modes(mode_count: u64) -> Result<u64> {
    if mode_count == 0 {
        return Err(Error::InvalidParameter {
            name: "mode_count",
            value: 0.0,
            reason: "must be at least 1",
        });
    }
    Ok(mode_count)
}

/// Physical configuration of the OPA.
#[derive(Debug, Clone, PartialEq)]
pub struct OpaConfig {
    gain: f64,
    pub pump_phase: f64,
    mode_count: u64,
    gain_coefficient: Option<f64>,
    pump_power_mw: Option<f64>,
    pump_split: bool,
}

impl OpaConfig {
    pub fn new(gain: f64, pump_phase: f64, mode_count: u64) -> Result<Self> {
        Ok(Self {
            gain: check_gain(gain)?,
            pump_phase: check_finite("pump_phase", pump_phase)?,
            mode_count: check_modes(mode_count)?,
            gain_coefficient: None,
            pump_power_mw: None,
            pump_split: false,
        })
    }

    /// Gain from the square-root law `gain = kappa * sqrt(P)`. With the pump
    /// polarized at 45 degrees each crystal sees half the power, so the gain
    /// drops by `sqrt(2)`.
    pub fn from_pump(
        gain_coefficient: f64,
        pump_power_mw: f64,
        pump_split: bool,
        pump_phase: f64,
        mode_count: u64,
    ) -> Result<Self> {
        check_finite("gain_coefficient", gain_coefficient)?;
        check_finite("pump_power", pump_power_mw)?;
        if gain_coefficient < 0.0 {
            return Err(Error::InvalidParameter {
                name: "gain_coefficient",
                value: gain_coefficient,
                reason: "must be non-negative",
            });
        }
        if pump_power_mw < 0.0 {
            return Err(Error::InvalidParameter {
                name: "pump_power",
                value: pump_power_mw,
                reason: "must be non-negative",
            });
        }
        let gain = gain_from_power(gain_coefficient, pump_power_mw, pump_split);
        let mut config = Self::new(gain, pump_phase, mode_count)?;
        config.gain_coefficient = Some(gain_coefficient);
        config.pump_power_mw = Some(pump_power_mw);
        config.pump_split = pump_split;
        Ok(config)
    }

    pub fn gain(&self) -> f64 {
        self.gain
    }

    pub fn mode_count(&self) -> u64 {
        self.mode_count
    }

    pub fn gain_coefficient(&self) -> Option<f64> {
        self.gain_coefficient
    }

    pub fn pump_power_mw(&self) -> Option<f64> {
        self.pump_power_mw
    }

    pub fn pump_split(&self) -> bool {
        self.pump_split
    }

    pub fn bogoliubov(&self) -> BogoliubovCoeffs {
        // gain was validated on construction
        BogoliubovCoeffs {
            u: self.gain.cosh(),
            v: self.gain.sinh(),
        }
    }
}

/// `kappa * sqrt(P)`, or `kappa * sqrt(P / 2)` when the pump is split between
/// the two crystals.
pub fn gain_from_power(gain_coefficient: f64, pump_power_mw: f64, pump_split: bool) -> f64 {
    let power = if pump_split {
        pump_power_mw / 2.0
    } else {
        pump_power_mw
    };
    gain_coefficient * power.sqrt()
}

/// Bogoliubov coefficients `(U, V) = (cosh G, sinh G)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BogoliubovCoeffs {
    pub u: f64,
    pub v: f64,
}

impl BogoliubovCoeffs {
    /// Photons per mode, `V^2`.
    pub fn photons_per_mode(&self) -> f64 {
        self.v * self.v
    }
}

pub fn bogoliubov(gain: f64) -> Result<BogoliubovCoeffs> {
    let gain = check_gain(gain)?;
    Ok(BogoliubovCoeffs {
        u: gain.cosh(),
        v: gain.sinh(),
    })
}

/// Overall detection efficiency (optical transmission times quantum efficiency).
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd)]
pub struct Efficiency(f64);

impl Efficiency {
    pub const PERFECT: Efficiency = Efficiency(1.0);

    pub fn new(eta: f64) -> Result<Self> {
        check_finite("efficiency", eta)?;
        if !(0.0..=1.0).contains(&eta) {
            return Err(Error::InvalidParameter {
                name: "efficiency",
                value: eta,
                reason: "must lie in [0, 1]",
            });
        }
        Ok(Self(eta))
    }

    pub fn value(self) -> f64 {
        self.0
    }

    /// Efficiency of two losses in series.
    pub fn then(self, other: Efficiency) -> Efficiency {
        Efficiency(self.0 * other.0)
    }
}

/// Means and variances of the Stokes operators, in photons and photons^2.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StokesMoments {
    pub mean_s0: f64,
    pub mean_s1: f64,
    pub mean_s2: f64,
    pub mean_s3: f64,
    pub var_s1: f64,
    pub var_s2: f64,
    pub var_s3: f64,
}

impl StokesMoments {
    pub fn variance(&self, index: StokesIndex) -> f64 {
        match index {
            StokesIndex::S1 => self.var_s1,
            StokesIndex::S2 => self.var_s2,
            StokesIndex::S3 => self.var_s3,
        }
    }

    /// NRF of the chosen Stokes observable, `Var(S_i) / <S_0>`.
    pub fn nrf(&self, index: StokesIndex) -> Result<f64> {
        nrf(self.variance(index), self.mean_s0)
    }
}

/// Total OPA output `m * sinh^2(G)`.
pub fn opa_output_mean(gain: f64, mode_count: u64) -> Result<f64> {
    let coeffs = bogoliubov(gain)?;
    let m = check_modes(mode_count)? as f64;
    Ok(m * coeffs.photons_per_mode())
}

/// Registered photons `<S_0> = m * 2 eta V^2`.
pub fn mean_registered_photons(gain: f64, mode_count: u64, efficiency: Efficiency) -> Result<f64> {
    let coeffs = bogoliubov(gain)?;
    let m = check_modes(mode_count)? as f64;
    Ok(m * 2.0 * efficiency.value() * coeffs.photons_per_mode())
}

/// Stokes moments of `m` mode pairs after symmetric loss `eta`.
///
/// `Var(S2)` and `Var(S3)` follow the standard Heisenberg calculation; the
/// `Var(S1)` closed form `2 eta V^2 (1 - eta + 2 eta U^2)` comes from the same
/// method and is checked against the Fock engine in the test suite.
pub fn stokes_variances(
    gain: f64,
    pump_phase: f64,
    efficiency: Efficiency,
    mode_count: u64,
) -> Result<StokesMoments> {
    let BogoliubovCoeffs { u, v } = bogoliubov(gain)?;
    check_finite("pump_phase", pump_phase)?;
    let m = check_modes(mode_count)? as f64;
    let eta = efficiency.value();

    let scale = m * 2.0 * eta * v * v;
    let anti = 2.0 * eta * u * u + 1.0 - eta;
    let sin2 = (pump_phase / 2.0).sin().powi(2);
    let cos2 = (pump_phase / 2.0).cos().powi(2);

    Ok(StokesMoments {
        mean_s0: scale,
        mean_s1: 0.0,
        mean_s2: 0.0,
        mean_s3: 0.0,
        var_s1: scale * anti,
        var_s2: scale * ((1.0 - eta) * sin2 + anti * cos2),
        var_s3: scale * ((1.0 - eta) * cos2 + anti * sin2),
    })
}

/// Noise reduction factor `Var(N1 - N2) / <N1 + N2>`.
pub fn nrf(var_diff: f64, mean_sum: f64) -> Result<f64> {
    if !(mean_sum > 0.0) {
        return Err(Error::NonPositiveMean("NRF denominator <N1 + N2>"));
    }
    Ok(var_diff / mean_sum)
}

/// Low-gain (`U ~ 1`) NRF of `(S2, S3)`: `(1 + eta cos phi, 1 - eta cos phi)`.
pub fn nrf_low_gain(pump_phase: f64, efficiency: Efficiency) -> (f64, f64) {
    let c = efficiency.value() * pump_phase.cos();
    (1.0 + c, 1.0 - c)
}

/// Exact per-mode NRF of one Stokes observable at nonzero gain. At zero gain
/// this is the `G -> 0+` limit, which is finite for every observable.
pub fn nrf_exact(index: StokesIndex, gain: f64, pump_phase: f64, efficiency: Efficiency) -> Result<f64> {
    let BogoliubovCoeffs { u, .. } = bogoliubov(gain)?;
    let eta = efficiency.value();
    let anti = 2.0 * eta * u * u + 1.0 - eta;
    let sin2 = (pump_phase / 2.0).sin().powi(2);
    let cos2 = (pump_phase / 2.0).cos().powi(2);
    Ok(match index {
        StokesIndex::S1 => anti,
        StokesIndex::S2 => (1.0 - eta) * sin2 + anti * cos2,
        StokesIndex::S3 => (1.0 - eta) * cos2 + anti * sin2,
    })
}
