use num_complex::Complex64;

use super::basis::DetectionBasis;
use crate::error::{check_finite, Error, Result};

/// Default bound on the probability mass dropped by truncation.
pub const DEFAULT_TAIL_TOLERANCE: f64 = 1e-12;

/// Above this gain the cutoff grows quickly; use the analytic model instead.
pub const MAX_ENGINE_GAIN: f64 = 1.5;

/// Complex amplitudes over `|n1, n2>` with `0 <= n1, n2 <= cutoff`.
#[derive(Debug, Clone, PartialEq)]
pub struct TruncatedTwoModeState {
    cutoff: usize,
    amplitudes: Vec<Complex64>,
    tail_bound: f64,
}

/// Smallest cutoff whose two-mode squeezed vacuum tail `tanh^(2(c+1)) G`
/// stays below `tolerance`.
pub fn required_cutoff(gain: f64, tolerance: f64) -> usize {
    if gain == 0.0 {
        return 0;
    }
    let t = gain.tanh().powi(2);
    let needed = (tolerance.ln() / t.ln()).ceil() - 1.0;
    needed.max(0.0) as usize
}

/// Two-mode squeezed vacuum `sum_n tanh^n G / cosh G |n, n>` on a grid of the
/// given cutoff, checked against [`DEFAULT_TAIL_TOLERANCE`].
pub fn tmsv_state(gain: f64, cutoff: usize) -> Result<TruncatedTwoModeState> {
    TruncatedTwoModeState::tmsv(gain, cutoff, DEFAULT_TAIL_TOLERANCE)
}

impl TruncatedTwoModeState {
    pub fn tmsv(gain: f64, cutoff: usize, tolerance: f64) -> Result<Self> {
        check_finite("gain", gain)?;
        if !(0.0..=MAX_ENGINE_GAIN).contains(&gain) {
            return Err(Error::InvalidParameter {
                name: "gain",
                value: gain,
                reason: "Fock engine supports 0 <= gain <= 1.5",
            });
        }
        if !(tolerance > 0.0 && tolerance < 1.0) {
            return Err(Error::InvalidParameter {
                name: "tail tolerance",
                value: tolerance,
                reason: "must lie in (0, 1)",
            });
        }
        let required = required_cutoff(gain, tolerance);
        if cutoff < required {
            return Err(Error::CutoffTooSmall {
                given: cutoff,
                required,
                tolerance,
            });
        }
        let dim = cutoff + 1;
        let ratio = gain.tanh();
        let mut amplitudes = vec![Complex64::new(0.0, 0.0); dim * dim];
        let mut amp = 1.0 / gain.cosh();
        for n in 0..dim {
            amplitudes[n * dim + n] = Complex64::new(amp, 0.0);
            amp *= ratio;
        }
        let tail_bound = if gain == 0.0 { 0.0 } else { (ratio * ratio).powi(dim as i32) };
        Ok(Self {
            cutoff,
            amplitudes,
            tail_bound,
        })
    }

    /// Two-mode squeezed vacuum with the cutoff chosen automatically.
    pub fn tmsv_auto(gain: f64) -> Result<Self> {
        let cutoff = if gain.is_finite() && gain >= 0.0 {
            required_cutoff(gain, DEFAULT_TAIL_TOLERANCE)
        } else {
            0
        };
        Self::tmsv(gain, cutoff, DEFAULT_TAIL_TOLERANCE)
    }

    /// State from explicit amplitudes, `amplitudes[n1 * (cutoff + 1) + n2]`.
    pub fn from_amplitudes(cutoff: usize, amplitudes: Vec<Complex64>, tail_bound: f64) -> Result<Self> {
        let dim = cutoff + 1;
        if amplitudes.len() != dim * dim {
            return Err(Error::InvalidParameter {
                name: "amplitude count",
                value: amplitudes.len() as f64,
                reason: "must equal (cutoff + 1)^2",
            });
        }
        let state = Self {
            cutoff,
            amplitudes,
            tail_bound,
        };
        let norm = state.norm_squared();
        if !(norm <= 1.0 + 1e-10 && norm >= 1.0 - tail_bound - 1e-10) {
            return Err(Error::InvalidParameter {
                name: "state norm",
                value: norm,
                reason: "must lie within the tail bound of 1",
            });
        }
        Ok(state)
    }

    pub fn cutoff(&self) -> usize {
        self.cutoff
    }

    pub fn dim(&self) -> usize {
        self.cutoff + 1
    }

    pub fn tail_bound(&self) -> f64 {
        self.tail_bound
    }

    /// Amplitude of `|n1, n2>`; zero outside the grid.
    pub fn amplitude(&self, n1: usize, n2: usize) -> Complex64 {
        if n1 > self.cutoff || n2 > self.cutoff {
            Complex64::new(0.0, 0.0)
        } else {
            self.amplitudes[n1 * self.dim() + n2]
        }
    }

    pub fn amplitudes(&self) -> &[Complex64] {
        &self.amplitudes
    }

    pub fn norm_squared(&self) -> f64 {
        self.amplitudes.iter().map(|a| a.norm_sqr()).sum()
    }

    /// Largest amplitude difference over the union of both grids.
    pub fn max_deviation(&self, other: &Self) -> f64 {
        let n = self.cutoff.max(other.cutoff);
        let mut worst: f64 = 0.0;
        for n1 in 0..=n {
            for n2 in 0..=n {
                worst = worst.max((self.amplitude(n1, n2) - other.amplitude(n1, n2)).norm());
            }
        }
        worst
    }

    fn max_total_photons(&self) -> usize {
        let dim = self.dim();
        self.amplitudes
            .iter()
            .enumerate()
            .filter(|(_, a)| a.norm_sqr() > 0.0)
            .map(|(i, _)| i / dim + i % dim)
            .max()
            .unwrap_or(0)
    }

    /// Applies the passive transformation `basis`; see [`rotate_basis`].
    pub fn rotate(&self, basis: &DetectionBasis) -> Self {
        let (out_phases, angle, in_phases) = factorize(basis.matrix());
        let mut state = self.clone().with_mode_phases(in_phases);
        let steps = ((angle.abs() / MAX_ROTATION_STEP).ceil() as usize).max(1);
        let step = angle / steps as f64;
        let (s, c) = step.sin_cos();
        for _ in 0..steps {
            state = state.rotate_real(c, s);
        }
        state.with_mode_phases(out_phases)
    }

    /// Multiplies `|n1, n2>` by `exp(i (p1 n1 + p2 n2))`.
    fn with_mode_phases(mut self, (p1, p2): (f64, f64)) -> Self {
        if p1 == 0.0 && p2 == 0.0 {
            return self;
        }
        let dim = self.dim();
        for (i, z) in self.amplitudes.iter_mut().enumerate() {
            let (n1, n2) = (i / dim, i % dim);
            *z *= Complex64::from_polar(1.0, p1 * n1 as f64 + p2 * n2 as f64);
        }
        self
    }

    /// Real rotation `a^+ -> c a^+ + s b^+`, `b^+ -> -s a^+ + c b^+`, built
    /// by applying the transformed creation operators one at a time.
    fn rotate_real(&self, c: f64, s: f64) -> Self {
        let create_a = (Complex64::new(c, 0.0), Complex64::new(s, 0.0));
        let create_b = (Complex64::new(-s, 0.0), Complex64::new(c, 0.0));

        let out_cutoff = self.max_total_photons();
        let out_dim = out_cutoff + 1;
        let in_dim = self.dim();
        let mut out = vec![Complex64::new(0.0, 0.0); out_dim * out_dim];

        // image of |p, 0>
        let mut row_head = vec![Complex64::new(1.0, 0.0)];
        for p in 0..in_dim {
            if p > 0 {
                row_head = apply_creation(&row_head, create_a, p);
            }
            let last_q = (0..in_dim)
                .rev()
                .find(|&q| self.amplitudes[p * in_dim + q].norm_sqr() > 0.0);
            let Some(last_q) = last_q else { continue };
            let mut image = row_head.clone();
            for q in 0..=last_q {
                if q > 0 {
                    image = apply_creation(&image, create_b, q);
                }
                let amp = self.amplitudes[p * in_dim + q];
                if amp.norm_sqr() == 0.0 {
                    continue;
                }
                let total = p + q;
                for (k, z) in image.iter().enumerate() {
                    out[k * out_dim + (total - k)] += amp * z;
                }
            }
        }
        Self {
            cutoff: out_cutoff,
            amplitudes: out,
            tail_bound: self.tail_bound,
        }
    }
}

/// The one-shot creation-operator recursion loses precision quickly for
/// large mixing angles at high photon number; rotations are split into
/// steps no larger than this.
const MAX_ROTATION_STEP: f64 = 0.05;

/// Writes a unitary as `diag(e^{i a1}, e^{i a2}) R(theta) diag(1, e^{i b2})`
/// with `R(theta) = [[cos, -sin], [sin, cos]]`. Phases are taken from the
/// larger entries so tiny entries cannot spoil the reconstruction.
pub(crate) fn factorize(m: &[[Complex64; 2]; 2]) -> ((f64, f64), f64, (f64, f64)) {
    let c = m[0][0].norm();
    let s = m[1][0].norm();
    let angle = s.atan2(c);
    let (a1, a2, b2) = if c >= s {
        let a1 = m[0][0].arg();
        let a2 = if s > 0.0 { m[1][0].arg() } else { 0.0 };
        (a1, a2, m[1][1].arg() - a2)
    } else {
        let a1 = if c > 0.0 { m[0][0].arg() } else { 0.0 };
        let a2 = m[1][0].arg();
        (a1, a2, (-m[0][1]).arg() - a1)
    };
    ((a1, a2), angle, (0.0, b2))
}

/// `(alpha c^+ + beta d^+) / sqrt(count)` applied to a vector in the
/// fixed-total block `N = len - 1`, indexed by the photon number in `c`.
fn apply_creation(block: &[Complex64], (alpha, beta): (Complex64, Complex64), count: usize) -> Vec<Complex64> {
    let n = block.len() - 1;
    let norm = 1.0 / (count as f64).sqrt();
    let mut out = vec![Complex64::new(0.0, 0.0); n + 2];
    for (k, &z) in block.iter().enumerate() {
        if z.norm_sqr() == 0.0 {
            continue;
        }
        out[k + 1] += alpha * z * (((k + 1) as f64).sqrt() * norm);
        out[k] += beta * z * (((n - k + 1) as f64).sqrt() * norm);
    }
    out
}

/// Expresses `state` in the detected ports of `basis`. The output grid is
/// enlarged to the largest total photon number present so nothing is lost.
pub fn rotate_basis(state: &TruncatedTwoModeState, basis: &DetectionBasis) -> Result<TruncatedTwoModeState> {
    // re-validate in case the basis was assembled by hand
    let basis = DetectionBasis::from_matrix(*basis.matrix())?;
    Ok(state.rotate(&basis))
}
