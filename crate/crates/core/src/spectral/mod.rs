//! Spectral model of the two-crystal cascade.
//!
//! Both crystals are collinear type-I (e -> o + o) BBO of equal length and
//! cut, the second one rotated by 90 degrees about the beam. Pairs from the
//! first crystal are polarized along the second crystal's extraordinary
//! axis, so on their way out they pick up `[k_e(l_s) + k_e(l_i)] L2`. The
//! generation phases of the two crystals are identical functions of
//! wavelength and cancel, which leaves that propagation term (minus its
//! value at the reference wavelength) as the relative phase of the two
//! pair amplitudes.

mod quartz;
mod sellmeier;

pub use quartz::{quartz_phase_from_tilt, QuartzPlatePair, MAX_TILT_DEG};
pub use sellmeier::{BboSellmeier, QuartzGhosh1999, Ray};

use std::f64::consts::PI;
use std::io::Write;

use num_complex::Complex64;

use crate::error::{check_finite, Error, Result};

pub const PUMP_WAVELENGTH_NM: f64 = 355.0;
pub const CRYSTAL_LENGTH_MM: f64 = 1.0;
/// Signal wavelength of the non-degenerate alignment; its idler is near 780 nm.
pub const NONDEGENERATE_SIGNAL_NM: f64 = 650.0;
/// Default lower edge of the signal grid; the upper edge is its idler partner.
pub const GRID_MIN_NM: f64 = 550.0;
pub const GRID_POINTS: usize = 2001;

/// Below this peak `sinc^2` on the grid nothing is considered phase matched.
const MIN_PEAK: f64 = 0.5;

/// Idler wavelength paired with `signal_nm` by energy conservation.
pub fn idler_wavelength(pump_nm: f64, signal_nm: f64) -> f64 {
    1.0 / (1.0 / pump_nm - 1.0 / signal_nm)
}

fn wavenumber_per_m(index: f64, wavelength_nm: f64) -> f64 {
    2.0 * PI * index / (wavelength_nm * 1e-9)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CrystalParams {
    length_mm: f64,
    cut_angle_deg: f64,
    sellmeier: BboSellmeier,
    pump_wavelength_nm: f64,
}

impl CrystalParams {
    pub fn new(length_mm: f64, cut_angle_deg: f64, sellmeier: BboSellmeier, pump_wavelength_nm: f64) -> Result<Self> {
        let length_mm = check_finite("crystal.length_mm", length_mm)?;
        if length_mm <= 0.0 {
            return Err(Error::InvalidParameter {
                name: "crystal.length_mm",
                value: length_mm,
                reason: "must be positive",
            });
        }
        let cut_angle_deg = check_finite("crystal.cut_angle_deg", cut_angle_deg)?;
        if !(0.0..=90.0).contains(&cut_angle_deg) {
            return Err(Error::InvalidParameter {
                name: "crystal.cut_angle_deg",
                value: cut_angle_deg,
                reason: "must lie in [0, 90]",
            });
        }
        sellmeier.principal_index(pump_wavelength_nm, Ray::Ordinary)?;
        Ok(Self {
            length_mm,
            cut_angle_deg,
            sellmeier,
            pump_wavelength_nm,
        })
    }

    /// Crystal cut for collinear phase matching of `signal_nm`.
    pub fn phase_matched(length_mm: f64, signal_nm: f64, sellmeier: BboSellmeier, pump_wavelength_nm: f64) -> Result<Self> {
        let theta = solve_cut_angle(signal_nm, sellmeier, pump_wavelength_nm)?;
        Self::new(length_mm, theta.to_degrees(), sellmeier, pump_wavelength_nm)
    }

    pub fn length_mm(&self) -> f64 {
        self.length_mm
    }

    pub fn cut_angle_deg(&self) -> f64 {
        self.cut_angle_deg
    }

    pub fn sellmeier(&self) -> BboSellmeier {
        self.sellmeier
    }

    pub fn pump_wavelength_nm(&self) -> f64 {
        self.pump_wavelength_nm
    }

    fn theta(&self) -> f64 {
        self.cut_angle_deg.to_radians()
    }

    /// Index for a wave propagating along the crystal axis at the cut angle.
    pub fn refractive_index(&self, wavelength_nm: f64, ray: Ray) -> Result<f64> {
        self.sellmeier.index_at_angle(wavelength_nm, ray, self.theta())
    }

    /// Collinear type-I mismatch `k_p,e - k_s,o - k_i,o` in 1/m.
    pub fn phase_mismatch(&self, signal_nm: f64) -> Result<f64> {
        let idler_nm = idler_wavelength(self.pump_wavelength_nm, signal_nm);
        mismatch(self.sellmeier, self.theta(), self.pump_wavelength_nm, signal_nm, idler_nm)
    }
}

fn mismatch(s: BboSellmeier, theta: f64, pump_nm: f64, signal_nm: f64, idler_nm: f64) -> Result<f64> {
    Ok(wavenumber_per_m(s.index_at_angle(pump_nm, Ray::Extraordinary, theta)?, pump_nm)
        - wavenumber_per_m(s.principal_index(signal_nm, Ray::Ordinary)?, signal_nm)
        - wavenumber_per_m(s.principal_index(idler_nm, Ray::Ordinary)?, idler_nm))
}

/// Free-function form of [`CrystalParams::refractive_index`].
pub fn refractive_index(wavelength_nm: f64, ray: Ray, crystal: &CrystalParams) -> Result<f64> {
    crystal.refractive_index(wavelength_nm, ray)
}

/// Cut angle (rad) with zero collinear mismatch at `signal_nm`, by bisection.
pub fn solve_cut_angle(signal_nm: f64, sellmeier: BboSellmeier, pump_nm: f64) -> Result<f64> {
    let idler_nm = idler_wavelength(pump_nm, signal_nm);
    if !(idler_nm > 0.0) {
        return Err(Error::InvalidParameter {
            name: "signal_nm",
            value: signal_nm,
            reason: "must be longer than the pump wavelength",
        });
    }
    let f = |t: f64| mismatch(sellmeier, t, pump_nm, signal_nm, idler_nm);
    let (mut lo, mut hi) = (0.0, PI / 2.0);
    let (flo, fhi) = (f(lo)?, f(hi)?);
    if flo.signum() == fhi.signum() {
        return Err(Error::NoPhaseMatching { peak: 0.0 });
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if f(mid)?.signum() == flo.signum() {
            lo = mid;
        } else {
            hi = mid;
        }
        if hi - lo < 1e-15 {
            break;
        }
    }
    Ok(0.5 * (lo + hi))
}

/// Which pair of wavelengths the cut angle phase matches.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Alignment {
    /// Signal and idler at twice the pump wavelength.
    Degenerate,
    /// Phase matched at the given signal wavelength.
    NonDegenerate { signal_nm: f64 },
}

impl Alignment {
    pub fn nondegenerate() -> Self {
        Self::NonDegenerate {
            signal_nm: NONDEGENERATE_SIGNAL_NM,
        }
    }

    pub fn signal_nm(self, pump_nm: f64) -> f64 {
        match self {
            Self::Degenerate => 2.0 * pump_nm,
            Self::NonDegenerate { signal_nm } => signal_nm,
        }
    }
}

/// Uniform signal-wavelength grid from `min_nm` to its idler partner.
pub fn default_grid(pump_nm: f64, min_nm: f64, points: usize) -> Vec<f64> {
    let max_nm = idler_wavelength(pump_nm, min_nm);
    let step = (max_nm - min_nm) / (points.max(2) - 1) as f64;
    (0..points.max(2)).map(|i| min_nm + step * i as f64).collect()
}

/// Spectral weights (normalized so `sum w dl = 1`) and relative phases on a
/// signal-wavelength grid. Every grid point stands for one signal/idler pair,
/// so both halves of a degenerate spectrum appear on the same grid.
#[derive(Debug, Clone, PartialEq)]
pub struct SpectralProfile {
    wavelengths_nm: Vec<f64>,
    weights: Vec<f64>,
    phases: Vec<f64>,
}

impl SpectralProfile {
    pub fn new(wavelengths_nm: Vec<f64>, weights: Vec<f64>, phases: Vec<f64>) -> Result<Self> {
        if wavelengths_nm.len() < 2 || weights.len() != wavelengths_nm.len() || phases.len() != wavelengths_nm.len() {
            return Err(Error::InvalidParameter {
                name: "spectral grid",
                value: wavelengths_nm.len() as f64,
                reason: "needs at least two points and matching weight and phase lengths",
            });
        }
        if wavelengths_nm.windows(2).any(|w| !(w[1] > w[0])) {
            return Err(Error::InvalidParameter {
                name: "spectral grid",
                value: f64::NAN,
                reason: "wavelengths must be strictly increasing",
            });
        }
        if weights.iter().any(|w| !(*w >= 0.0)) {
            return Err(Error::InvalidParameter {
                name: "spectral weight",
                value: f64::NAN,
                reason: "weights must be non-negative",
            });
        }
        let mut p = Self {
            wavelengths_nm,
            weights,
            phases,
        };
        let total: f64 = p.weights.iter().zip(p.cell_widths()).map(|(w, d)| w * d).sum();
        if !(total > 0.0) {
            return Err(Error::InvalidParameter {
                name: "spectral weight",
                value: total,
                reason: "weights must not all vanish",
            });
        }
        p.weights.iter_mut().for_each(|w| *w /= total);
        Ok(p)
    }

    pub fn wavelengths_nm(&self) -> &[f64] {
        &self.wavelengths_nm
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn phases(&self) -> &[f64] {
        &self.phases
    }

    pub fn with_phases(mut self, phases: Vec<f64>) -> Result<Self> {
        if phases.len() != self.wavelengths_nm.len() {
            return Err(Error::InvalidParameter {
                name: "relative phase",
                value: phases.len() as f64,
                reason: "must match the grid length",
            });
        }
        self.phases = phases;
        Ok(self)
    }

    /// Trapezoid cell widths.
    pub fn cell_widths(&self) -> Vec<f64> {
        let l = &self.wavelengths_nm;
        let n = l.len();
        (0..n)
            .map(|i| {
                let left = if i == 0 { l[0] } else { l[i - 1] };
                let right = if i + 1 == n { l[n - 1] } else { l[i + 1] };
                0.5 * (right - left)
            })
            .collect()
    }

    pub fn total_weight(&self) -> f64 {
        self.weights.iter().zip(self.cell_widths()).map(|(w, d)| w * d).sum()
    }

    /// Width of the region where the weight exceeds half its maximum,
    /// with linear interpolation at the edges.
    pub fn fwhm_nm(&self) -> f64 {
        let max = self.weights.iter().cloned().fold(0.0, f64::max);
        let half = 0.5 * max;
        let l = &self.wavelengths_nm;
        let w = &self.weights;
        let first = w.iter().position(|&x| x >= half).unwrap_or(0);
        let last = w.iter().rposition(|&x| x >= half).unwrap_or(w.len() - 1);
        let edge = |i: usize, j: usize| l[i] + (half - w[i]) / (w[j] - w[i]) * (l[j] - l[i]);
        let lo = if first == 0 { l[0] } else { edge(first - 1, first) };
        let hi = if last + 1 == w.len() { l[last] } else { edge(last, last + 1) };
        hi - lo
    }

    /// `sum w dl exp(i phase)`.
    fn phasor(&self) -> Complex64 {
        self.weights
            .iter()
            .zip(&self.phases)
            .zip(self.cell_widths())
            .map(|((w, p), d)| Complex64::from_polar(w * d, *p))
            .sum()
    }

    /// Writes `wavelength_nm,weight,phase_rad`.
    pub fn write_csv<W: Write>(&self, mut out: W) -> Result<()> {
        writeln!(out, "wavelength_nm,weight,phase_rad")?;
        for ((l, w), p) in self.wavelengths_nm.iter().zip(&self.weights).zip(&self.phases) {
            writeln!(out, "{l:.16e},{w:.16e},{p:.16e}")?;
        }
        Ok(())
    }
}

/// Collinear phase-matching spectrum `sinc^2(dk L / 2)` on `signal_grid_nm`.
pub fn pdc_spectrum(crystal: &CrystalParams, signal_grid_nm: &[f64]) -> Result<SpectralProfile> {
    let half_l = 0.5 * crystal.length_mm * 1e-3;
    let weights = signal_grid_nm
        .iter()
        .map(|&l| {
            let x = crystal.phase_mismatch(l)? * half_l;
            Ok(if x == 0.0 { 1.0 } else { (x.sin() / x).powi(2) })
        })
        .collect::<Result<Vec<f64>>>()?;
    let peak = weights.iter().cloned().fold(0.0, f64::max);
    if peak < MIN_PEAK {
        return Err(Error::NoPhaseMatching { peak });
    }
    SpectralProfile::new(signal_grid_nm.to_vec(), weights, vec![0.0; signal_grid_nm.len()])
}

/// Relative phase between the two crystals' pair amplitudes at each grid
/// point, fixed to zero at `reference_signal_nm`. `second_length_mm` may be
/// zero, in which case the phase vanishes identically.
pub fn relative_phase(
    signal_grid_nm: &[f64],
    crystal: &CrystalParams,
    second_length_mm: f64,
    reference_signal_nm: f64,
) -> Result<Vec<f64>> {
    let second_length_mm = check_finite("second_crystal_length_mm", second_length_mm)?;
    if second_length_mm < 0.0 {
        return Err(Error::InvalidParameter {
            name: "second_crystal_length_mm",
            value: second_length_mm,
            reason: "must be non-negative",
        });
    }
    let len = second_length_mm * 1e-3;
    let pump = crystal.pump_wavelength_nm;
    let pair_phase = |s: f64| -> Result<f64> {
        let i = idler_wavelength(pump, s);
        let ks = wavenumber_per_m(crystal.refractive_index(s, Ray::Extraordinary)?, s);
        let ki = wavenumber_per_m(crystal.refractive_index(i, Ray::Extraordinary)?, i);
        Ok(-(ks + ki) * len)
    };
    let reference = pair_phase(reference_signal_nm)?;
    signal_grid_nm.iter().map(|&s| Ok(pair_phase(s)? - reference)).collect()
}

/// Overlap of the broadband state with the intended one.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SqueezedFraction {
    /// `max_c sum w cos(phase + c) dl`, the value at the best pump phase.
    pub fraction: f64,
    /// `sum w cos(phase) dl` with the phase gauge fixed at the reference wavelength.
    pub at_reference_gauge: f64,
    /// The maximizing pump-phase offset `c`.
    pub optimal_offset: f64,
}

impl SqueezedFraction {
    /// Lowest reachable NRF at efficiency `eta` in the low-gain limit.
    pub fn nrf_floor(&self, eta: f64) -> f64 {
        1.0 - eta * self.fraction
    }
}

pub fn squeezed_fraction(profile: &SpectralProfile) -> SqueezedFraction {
    let z = profile.phasor();
    SqueezedFraction {
        fraction: z.norm(),
        at_reference_gauge: z.re,
        optimal_offset: -z.arg(),
    }
}

/// Spectrum, phase and fraction of one alignment of the cascade.
#[derive(Debug, Clone, PartialEq)]
pub struct CascadeModel {
    pub crystal: CrystalParams,
    pub second_length_mm: f64,
    pub alignment: Alignment,
    pub grid_min_nm: f64,
    pub grid_points: usize,
}

impl CascadeModel {
    /// Two identical 1 mm crystals pumped at 355 nm and cut for `alignment`.
    pub fn reference(alignment: Alignment, sellmeier: BboSellmeier) -> Result<Self> {
        let crystal = CrystalParams::phase_matched(
            CRYSTAL_LENGTH_MM,
            alignment.signal_nm(PUMP_WAVELENGTH_NM),
            sellmeier,
            PUMP_WAVELENGTH_NM,
        )?;
        Ok(Self {
            crystal,
            second_length_mm: CRYSTAL_LENGTH_MM,
            alignment,
            grid_min_nm: GRID_MIN_NM,
            grid_points: GRID_POINTS,
        })
    }

    pub fn profile(&self) -> Result<SpectralProfile> {
        let pump = self.crystal.pump_wavelength_nm;
        let grid = default_grid(pump, self.grid_min_nm, self.grid_points);
        let spectrum = pdc_spectrum(&self.crystal, &grid)?;
        let phases = relative_phase(&grid, &self.crystal, self.second_length_mm, self.alignment.signal_nm(pump))?;
        spectrum.with_phases(phases)
    }

    pub fn squeezed_fraction(&self) -> Result<SqueezedFraction> {
        Ok(squeezed_fraction(&self.profile()?))
    }
}
