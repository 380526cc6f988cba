use super::state::TruncatedTwoModeState;
use crate::error::{Error, Result};
use crate::stokes::{nrf, Efficiency};

/// Joint photon-number distribution `P(n1, n2)` on a square grid.
#[derive(Debug, Clone, PartialEq)]
pub struct JointPhotonDistribution {
    cutoff: usize,
    probabilities: Vec<f64>,
    tail_bound: f64,
}

impl JointPhotonDistribution {
    /// `probabilities[n1 * (cutoff + 1) + n2]`.
    pub fn new(cutoff: usize, probabilities: Vec<f64>, tail_bound: f64) -> Result<Self> {
        let dim = cutoff + 1;
        if probabilities.len() != dim * dim {
            return Err(Error::InvalidParameter {
                name: "probability count",
                value: probabilities.len() as f64,
                reason: "must equal (cutoff + 1)^2",
            });
        }
        if let Some(&p) = probabilities.iter().find(|p| !(**p >= 0.0)) {
            return Err(Error::InvalidParameter {
                name: "probability",
                value: p,
                reason: "must be non-negative",
            });
        }
        let total: f64 = probabilities.iter().sum();
        if !(total <= 1.0 + 1e-10 && total >= 1.0 - tail_bound - 1e-10) {
            return Err(Error::InvalidParameter {
                name: "total probability",
                value: total,
                reason: "must lie within the tail bound of 1",
            });
        }
        Ok(Self {
            cutoff,
            probabilities,
            tail_bound,
        })
    }

    /// All mass on `(n1, n2)`.
    pub fn point_mass(n1: usize, n2: usize) -> Self {
        let cutoff = n1.max(n2);
        let dim = cutoff + 1;
        let mut probabilities = vec![0.0; dim * dim];
        probabilities[n1 * dim + n2] = 1.0;
        Self {
            cutoff,
            probabilities,
            tail_bound: 0.0,
        }
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

    pub fn probability(&self, n1: usize, n2: usize) -> f64 {
        if n1 > self.cutoff || n2 > self.cutoff {
            0.0
        } else {
            self.probabilities[n1 * self.dim() + n2]
        }
    }

    pub fn probabilities(&self) -> &[f64] {
        &self.probabilities
    }

    pub fn total(&self) -> f64 {
        self.probabilities.iter().sum()
    }

    pub fn marginal_1(&self) -> Vec<f64> {
        let dim = self.dim();
        (0..dim).map(|n1| self.probabilities[n1 * dim..(n1 + 1) * dim].iter().sum()).collect()
    }

    pub fn marginal_2(&self) -> Vec<f64> {
        let dim = self.dim();
        (0..dim)
            .map(|n2| (0..dim).map(|n1| self.probabilities[n1 * dim + n2]).sum())
            .collect()
    }

    /// Exact moments of the (renormalised) truncated distribution.
    pub fn moments(&self) -> PhotonMoments {
        let dim = self.dim();
        let total = self.total();
        let mut mean1 = 0.0;
        let mut mean2 = 0.0;
        for n1 in 0..dim {
            for n2 in 0..dim {
                let p = self.probabilities[n1 * dim + n2];
                mean1 += p * n1 as f64;
                mean2 += p * n2 as f64;
            }
        }
        mean1 /= total;
        mean2 /= total;
        let (mut var_diff, mut var_sum, mut var1, mut var2) = (0.0, 0.0, 0.0, 0.0);
        for n1 in 0..dim {
            for n2 in 0..dim {
                let p = self.probabilities[n1 * dim + n2];
                if p == 0.0 {
                    continue;
                }
                let d1 = n1 as f64 - mean1;
                let d2 = n2 as f64 - mean2;
                var_diff += p * (d1 - d2) * (d1 - d2);
                var_sum += p * (d1 + d2) * (d1 + d2);
                var1 += p * d1 * d1;
                var2 += p * d2 * d2;
            }
        }
        PhotonMoments {
            mean1,
            mean2,
            var1: var1 / total,
            var2: var2 / total,
            var_diff: var_diff / total,
            var_sum: var_sum / total,
        }
    }
}

/// Count statistics of the two detected ports.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PhotonMoments {
    pub mean1: f64,
    pub mean2: f64,
    pub var1: f64,
    pub var2: f64,
    pub var_diff: f64,
    pub var_sum: f64,
}

impl PhotonMoments {
    pub fn mean_sum(&self) -> f64 {
        self.mean1 + self.mean2
    }

    pub fn nrf(&self) -> Result<f64> {
        nrf(self.var_diff, self.mean_sum())
    }

    /// Moments of the sum of `m` independent copies.
    pub fn aggregate(&self, mode_count: u64) -> Result<PhotonMoments> {
        if mode_count == 0 {
            return Err(Error::InvalidParameter {
                name: "mode_count",
                value: 0.0,
                reason: "must be at least 1",
            });
        }
        let m = mode_count as f64;
        Ok(PhotonMoments {
            mean1: m * self.mean1,
            mean2: m * self.mean2,
            var1: m * self.var1,
            var2: m * self.var2,
            var_diff: m * self.var_diff,
            var_sum: m * self.var_sum,
        })
    }

    /// Covariance of the two counts.
    pub fn covariance(&self) -> f64 {
        (self.var_sum - self.var_diff) / 4.0
    }
}

/// `P(n1, n2) = |amplitude(n1, n2)|^2`.
pub fn joint_distribution(state: &TruncatedTwoModeState) -> JointPhotonDistribution {
    JointPhotonDistribution {
        cutoff: state.cutoff(),
        probabilities: state.amplitudes().iter().map(|a| a.norm_sqr()).collect(),
        tail_bound: state.tail_bound(),
    }
}

/// `T[k][n] = C(n, k) eta^k (1 - eta)^(n - k)` via Pascal's recurrence.
fn thinning_matrix(dim: usize, eta: f64) -> Vec<f64> {
    let mut t = vec![0.0; dim * dim];
    let mut row = vec![0.0; dim];
    row[0] = 1.0;
    for n in 0..dim {
        if n > 0 {
            for k in (1..=n).rev() {
                row[k] = eta * row[k - 1] + (1.0 - eta) * row[k];
            }
            row[0] *= 1.0 - eta;
        }
        for k in 0..=n {
            t[k * dim + n] = row[k];
        }
    }
    t
}

/// Independent binomial thinning of each port, the photon-counting picture
/// of a beam splitter with amplitude transmission `sqrt(eta)` in front of
/// each detector.
pub fn apply_loss(
    dist: &JointPhotonDistribution,
    efficiency_1: Efficiency,
    efficiency_2: Efficiency,
) -> JointPhotonDistribution {
    let dim = dist.dim();
    let t1 = thinning_matrix(dim, efficiency_1.value());
    let t2 = thinning_matrix(dim, efficiency_2.value());
    let p = &dist.probabilities;

    // thin port 2: q[n1][k2] = sum_n2 p[n1][n2] t2[k2][n2]
    let mut q = vec![0.0; dim * dim];
    for n1 in 0..dim {
        let row = &p[n1 * dim..(n1 + 1) * dim];
        if row.iter().all(|&x| x == 0.0) {
            continue;
        }
        for k2 in 0..dim {
            let tk = &t2[k2 * dim..(k2 + 1) * dim];
            q[n1 * dim + k2] = row[k2..].iter().zip(&tk[k2..]).map(|(a, b)| a * b).sum();
        }
    }
    // thin port 1
    let mut out = vec![0.0; dim * dim];
    for k1 in 0..dim {
        for n1 in k1..dim {
            let w = t1[k1 * dim + n1];
            if w == 0.0 {
                continue;
            }
            let src = &q[n1 * dim..(n1 + 1) * dim];
            let dst = &mut out[k1 * dim..(k1 + 1) * dim];
            for (d, s) in dst.iter_mut().zip(src) {
                *d += w * s;
            }
        }
    }
    JointPhotonDistribution {
        cutoff: dist.cutoff,
        probabilities: out,
        tail_bound: dist.tail_bound,
    }
}
