use std::f64::consts::PI;

use super::sellmeier::{QuartzGhosh1999, Ray};
use crate::error::{check_finite, Error, Result};

pub const MAX_TILT_DEG: f64 = 30.0;

/// Two quartz plates with vertical optic axes, tilted together about the
/// vertical axis. The plane of incidence is then perpendicular to the optic
/// axis, so the vertically polarized pump sees `n_e` and the horizontal one
/// `n_o` at every tilt.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuartzPlatePair {
    thickness_1_um: f64,
    thickness_2_um: f64,
}

impl Default for QuartzPlatePair {
    fn default() -> Self {
        Self {
            thickness_1_um: 532.0,
            thickness_2_um: 523.0,
        }
    }
}

impl QuartzPlatePair {
    pub fn new(thickness_1_um: f64, thickness_2_um: f64) -> Result<Self> {
        for (name, t) in [("plates.thickness_1_um", thickness_1_um), ("plates.thickness_2_um", thickness_2_um)] {
            if !(check_finite(name, t)? > 0.0) {
                return Err(Error::InvalidParameter {
                    name,
                    value: t,
                    reason: "must be positive",
                });
            }
        }
        Ok(Self {
            thickness_1_um,
            thickness_2_um,
        })
    }

    pub fn thicknesses_um(&self) -> (f64, f64) {
        (self.thickness_1_um, self.thickness_2_um)
    }

    /// Retardance (rad) between the vertical and horizontal pump components
    /// after both plates at external tilt `alpha_deg`:
    /// `k0 d [sqrt(n_e^2 - sin^2 a) - sqrt(n_o^2 - sin^2 a)]` per plate.
    pub fn retardance(&self, alpha_deg: f64, pump_nm: f64) -> Result<f64> {
        let alpha_deg = check_finite("tilt", alpha_deg)?;
        if alpha_deg.abs() > MAX_TILT_DEG {
            return Err(Error::InvalidParameter {
                name: "tilt",
                value: alpha_deg,
                reason: "must satisfy |alpha| <= 30 degrees",
            });
        }
        let no = QuartzGhosh1999::principal_index(pump_nm, Ray::Ordinary)?;
        let ne = QuartzGhosh1999::principal_index(pump_nm, Ray::Extraordinary)?;
        let s2 = alpha_deg.to_radians().sin().powi(2);
        let k0 = 2.0 * PI / (pump_nm * 1e-9);
        let path = (ne * ne - s2).sqrt() - (no * no - s2).sqrt();
        Ok(k0 * (self.thickness_1_um + self.thickness_2_um) * 1e-6 * path)
    }

    /// Retardance change relative to normal incidence.
    pub fn phase_from_tilt(&self, alpha_deg: f64, pump_nm: f64) -> Result<f64> {
        Ok(self.retardance(alpha_deg, pump_nm)? - self.retardance(0.0, pump_nm)?)
    }
}

/// Free-function form of [`QuartzPlatePair::retardance`].
pub fn quartz_phase_from_tilt(plates: &QuartzPlatePair, alpha_deg: f64, pump_nm: f64) -> Result<f64> {
    plates.retardance(alpha_deg, pump_nm)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn even_and_flat_at_normal_incidence() {
        let p = QuartzPlatePair::default();
        let h = 1e-4;
        let d = (p.retardance(h, 355.0).unwrap() - p.retardance(-h, 355.0).unwrap()) / (2.0 * h);
        assert!(d.abs() < 1e-9);
        for a in [3.0, 11.0, 29.0] {
            let (l, r) = (p.retardance(a, 355.0).unwrap(), p.retardance(-a, 355.0).unwrap());
            assert!((l - r).abs() < 1e-9);
        }
        assert_eq!(p.phase_from_tilt(0.0, 355.0).unwrap(), 0.0);
    }

    #[test]
    fn baseline_from_birefringence() {
        let p = QuartzPlatePair::default();
        let dn = QuartzGhosh1999::principal_index(355.0, Ray::Extraordinary).unwrap()
            - QuartzGhosh1999::principal_index(355.0, Ray::Ordinary).unwrap();
        let expected = 2.0 * PI / 355e-9 * 1055e-6 * dn;
        assert!((p.retardance(0.0, 355.0).unwrap() - expected).abs() < 1e-9 * expected);
        assert!(dn > 0.0);
    }

    #[test]
    fn tilt_sweeps_several_radians_monotonically() {
        let p = QuartzPlatePair::default();
        let mut last = 0.0;
        for k in 1..=30 {
            let phi = p.phase_from_tilt(k as f64, 355.0).unwrap();
            assert!(phi > last);
            last = phi;
        }
        // about one and a half interference periods over the full tilt range
        assert!(last.abs() > 2.0 * PI && last.abs() < 6.0 * PI, "{last}");
    }

    #[test]
    fn rejects_large_tilt_and_bad_plates() {
        let p = QuartzPlatePair::default();
        assert!(p.retardance(31.0, 355.0).is_err());
        assert!(QuartzPlatePair::new(0.0, 1.0).is_err());
        assert!(quartz_phase_from_tilt(&p, 10.0, 355.0).is_ok());
    }
}
