use std::f64::consts::PI;

use super::{solve_least_squares, FitPoint, FitProblem, FitResult};
use crate::error::{Error, Result};
use crate::kv::{fmt_f64, KvBlock};
use crate::rng::{stream_rng, Stream};
use crate::StokesIndex;

use rand_distr::{Distribution, StandardNormal};

/// `N(P) = m sinh^2(kappa sqrt(P))`, parameters `[kappa, m]`.
pub fn gain_model(power: f64, params: &[f64]) -> f64 {
    params[1] * (params[0] * power.max(0.0).sqrt()).sinh().powi(2)
}

/// `1 + s eta cos(phi + phi0)`, parameters `[eta, phi0]`; `s` is +1 for S2
/// and -1 for S3.
pub fn nrf_model(phase: f64, params: &[f64], sign: f64) -> f64 {
    1.0 + sign * params[0] * (phase + params[1]).cos()
}

#[derive(Debug, Clone, PartialEq)]
pub struct GainFit {
    pub kappa: f64,
    pub modes: f64,
    /// `kappa sqrt(P_max)` over the fitted powers.
    pub gamma_max: f64,
    /// Correlation between `kappa` and `m`; near +-1 when only `m kappa^2`
    /// is constrained.
    pub correlation: f64,
    pub result: FitResult,
}

impl GainFit {
    pub fn to_kv(&self) -> KvBlock {
        let mut b = self.result.to_kv(&["kappa", "m"]);
        b.push("fit.gamma_max", fmt_f64(self.gamma_max));
        b.push("fit.correlation", fmt_f64(self.correlation));
        b
    }
}

/// Fits the gain law to `(P, N)` points. The power unit is whatever the
/// caller uses; `kappa` comes out in its inverse square root.
pub fn fit_gain_curve(points: &[FitPoint]) -> Result<GainFit> {
    if points.len() < 4 {
        return Err(Error::InsufficientData {
            what: "gain fit",
            needed: 4,
            got: points.len(),
        });
    }
    if points.iter().any(|p| !(p.x >= 0.0)) {
        return Err(Error::InvalidProblem("powers must be non-negative".into()));
    }
    let informative: Vec<&FitPoint> = points.iter().filter(|p| p.x > 0.0 && p.y > 0.0).collect();
    let (Some(max_n), Some(low)) = (
        informative.iter().map(|p| p.y).reduce(f64::max),
        informative.iter().min_by(|a, b| a.x.total_cmp(&b.x)),
    ) else {
        return Err(Error::InvalidProblem("need at least one point with P > 0 and N > 0".into()));
    };
    // m from the brightest point as if the gain there were 1, kappa from the
    // low-power slope N ~ m kappa^2 P
    let m0 = max_n / 1f64.sinh().powi(2);
    let k0 = (low.y / (m0 * low.x)).sqrt();
    let p_max = points.iter().map(|p| p.x).fold(0.0, f64::max);
    let problem = FitProblem {
        name: "gain".into(),
        points: points.to_vec(),
        model: Box::new(gain_model),
        bounds: vec![(0.0, f64::INFINITY), (0.0, f64::INFINITY)],
        initial_guess: vec![k0, m0],
    };
    let result = solve_least_squares(&problem)?.into_converged()?;
    Ok(GainFit {
        kappa: result.parameters[0],
        modes: result.parameters[1],
        gamma_max: result.parameters[0] * p_max.sqrt(),
        correlation: result.correlation(0, 1),
        result,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct NrfFit {
    pub efficiency: f64,
    pub phase_offset: f64,
    pub result: FitResult,
}

impl NrfFit {
    pub fn to_kv(&self) -> KvBlock {
        self.result.to_kv(&["eta", "phi0"])
    }
}

fn wrap_phase(x: f64) -> f64 {
    let y = x.rem_euclid(2.0 * PI);
    if y > PI {
        y - 2.0 * PI
    } else {
        y
    }
}

/// Fits NRF against plate tilt. `plate_map` turns a tilt in degrees into the
/// pump phase, usually a quartz plate pair. Both S2 and S3 use the same
/// `phi0` convention, so fits of complementary curves agree on it.
pub fn fit_nrf_curve(
    points: &[FitPoint],
    plate_map: &dyn Fn(f64) -> Result<f64>,
    index: StokesIndex,
) -> Result<NrfFit> {
    if points.len() < 5 {
        return Err(Error::InsufficientData {
            what: "NRF fit",
            needed: 5,
            got: points.len(),
        });
    }
    let sign = match index {
        StokesIndex::S2 => 1.0,
        StokesIndex::S3 => -1.0,
        StokesIndex::S1 => return Err(Error::InvalidProblem("S1 noise does not depend on the pump phase".into())),
    };
    let mapped = points
        .iter()
        .map(|p| Ok(FitPoint { x: plate_map(p.x)?, ..*p }))
        .collect::<Result<Vec<_>>>()?;
    let (lo, hi) = mapped.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), p| (lo.min(p.y), hi.max(p.y)));
    let eta0 = ((hi - lo) / 2.0).clamp(0.0, 1.0);
    let at_min = mapped.iter().min_by(|a, b| a.y.total_cmp(&b.y)).expect("non-empty");
    let phi0 = if sign > 0.0 { wrap_phase(PI - at_min.x) } else { wrap_phase(-at_min.x) };
    let problem = FitProblem {
        name: format!("nrf-s{}", index.index()),
        points: mapped,
        model: Box::new(move |x, p| nrf_model(x, p, sign)),
        bounds: vec![(0.0, 1.0), (-4.0 * PI, 4.0 * PI)],
        initial_guess: vec![eta0, phi0],
    };
    let result = solve_least_squares(&problem)?.into_converged()?;
    Ok(NrfFit {
        efficiency: result.parameters[0],
        phase_offset: result.parameters[1],
        result,
    })
}

/// `n` evenly spaced powers up to `p_max` with `N` scattered by a
/// multiplicative Gaussian factor `1 + noise z`.
pub fn synthetic_gain_points(kappa: f64, modes: f64, p_max: f64, n: usize, noise: f64, seed: u64) -> Vec<FitPoint> {
    let mut rng = stream_rng(seed, Stream::FitNoise, 0);
    (1..=n)
        .map(|i| {
            let p = p_max * i as f64 / n as f64;
            let z: f64 = StandardNormal.sample(&mut rng);
            FitPoint::new(p, gain_model(p, &[kappa, modes]) * (1.0 + noise * z))
        })
        .collect()
}

/// NRF against tilt with additive Gaussian scatter `sigma`.
pub fn synthetic_nrf_points(
    eta: f64,
    phi0: f64,
    index: StokesIndex,
    tilts_deg: &[f64],
    plate_map: &dyn Fn(f64) -> Result<f64>,
    sigma: f64,
    seed: u64,
) -> Result<Vec<FitPoint>> {
    let sign = if index == StokesIndex::S3 { -1.0 } else { 1.0 };
    let mut rng = stream_rng(seed, Stream::FitNoise, index.index() as u64);
    tilts_deg
        .iter()
        .map(|&a| {
            let z: f64 = StandardNormal.sample(&mut rng);
            Ok(FitPoint::new(a, nrf_model(plate_map(a)?, &[eta, phi0], sign) + sigma * z))
        })
        .collect()
}
