use num_complex::Complex64;
use std::f64::consts::FRAC_1_SQRT_2;

use crate::error::{Error, Result};
use crate::stokes::StokesIndex;

const UNITARITY_TOLERANCE: f64 = 1e-12;

/// Passive two-mode transformation from the squeezed pair `(a_phi, b_phi)` to
/// the two detected ports: `port_j = sum_k matrix[j][k] * mode_k`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DetectionBasis {
    matrix: [[Complex64; 2]; 2],
}

impl DetectionBasis {
    pub fn identity() -> Self {
        Self::new(0.0, 0.0)
    }

    /// Beam splitter with mixing angle `theta` and relative phase `delta`:
    /// `[[cos t, -e^{-i d} sin t], [e^{i d} sin t, cos t]]`.
    pub fn new(mixing_angle: f64, relative_phase: f64) -> Self {
        let (s, c) = mixing_angle.sin_cos();
        let e = Complex64::from_polar(1.0, relative_phase);
        Self {
            matrix: [
                [Complex64::new(c, 0.0), -e.conj() * s],
                [e * s, Complex64::new(c, 0.0)],
            ],
        }
    }

    pub fn from_matrix(matrix: [[Complex64; 2]; 2]) -> Result<Self> {
        let deviation = unitarity_deviation(&matrix);
        if !(deviation <= UNITARITY_TOLERANCE) {
            return Err(Error::NonUnitary { deviation });
        }
        Ok(Self { matrix })
    }

    /// Ports of a standard Stokes measurement of `index`, expressed in the
    /// squeezed modes for pump phase `pump_phase`.
    ///
    /// The laboratory modes are recovered from
    /// `a_phi^+ = (a_h^+ + i e^{i phi/2} a_v^+) / sqrt 2` and
    /// `b_phi^+ = (a_h^+ - i e^{i phi/2} a_v^+) / sqrt 2`, then the analyser
    /// (none, half-wave at 22.5 degrees, quarter-wave) maps H/V to the
    /// measured pair. Up to irrelevant output phases this equals
    /// [`DetectionBasis::new`] with
    ///
    /// | index | mixing angle       | relative phase |
    /// |-------|--------------------|----------------|
    /// | S1    | pi/4               | pi             |
    /// | S2    | phi/4 + pi/4       | -pi/2          |
    /// | S3    | phi/4 + pi/2       | -pi/2          |
    pub fn for_stokes(index: StokesIndex, pump_phase: f64) -> Self {
        let r = Complex64::new(FRAC_1_SQRT_2, 0.0);
        let w = Complex64::i() * Complex64::from_polar(1.0, pump_phase / 2.0);
        // rows: a_h, a_v in terms of (a_phi, b_phi)
        let lab = [[r, r], [w * r, -w * r]];
        let analyser = match index {
            StokesIndex::S1 => [[Complex64::new(1.0, 0.0), Complex64::new(0.0, 0.0)], [Complex64::new(0.0, 0.0), Complex64::new(1.0, 0.0)]],
            StokesIndex::S2 => [[r, r], [r, -r]],
            StokesIndex::S3 => [[r, Complex64::i() * r], [r, -Complex64::i() * r]],
        };
        Self {
            matrix: matmul(&analyser, &lab),
        }
    }

    pub fn matrix(&self) -> &[[Complex64; 2]; 2] {
        &self.matrix
    }

    pub fn inverse(&self) -> Self {
        let m = &self.matrix;
        Self {
            matrix: [[m[0][0].conj(), m[1][0].conj()], [m[0][1].conj(), m[1][1].conj()]],
        }
    }

    pub fn mixing_angle(&self) -> f64 {
        self.matrix[0][1].norm().atan2(self.matrix[0][0].norm())
    }

    /// `arg(m10) - arg(m00)`; meaningless when the angle is 0 or pi/2.
    pub fn relative_phase(&self) -> f64 {
        self.matrix[1][0].arg() - self.matrix[0][0].arg()
    }
}

fn matmul(a: &[[Complex64; 2]; 2], b: &[[Complex64; 2]; 2]) -> [[Complex64; 2]; 2] {
    let mut out = [[Complex64::new(0.0, 0.0); 2]; 2];
    for i in 0..2 {
        for j in 0..2 {
            out[i][j] = a[i][0] * b[0][j] + a[i][1] * b[1][j];
        }
    }
    out
}

fn unitarity_deviation(m: &[[Complex64; 2]; 2]) -> f64 {
    let mut worst: f64 = 0.0;
    for i in 0..2 {
        for j in 0..2 {
            let dot = m[i][0] * m[j][0].conj() + m[i][1] * m[j][1].conj();
            let target = if i == j { 1.0 } else { 0.0 };
            worst = worst.max((dot - target).norm());
        }
    }
    if m.iter().flatten().any(|z| !z.is_finite()) {
        return f64::INFINITY;
    }
    worst
}
