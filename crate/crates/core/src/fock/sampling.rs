use rand::Rng;
use rand_distr::weighted::WeightedAliasIndex;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;

use super::distribution::{JointPhotonDistribution, PhotonMoments};
use crate::error::{Error, Result};
use crate::rng::{stream_rng, Stream};

/// Below this many modes per pulse every mode is drawn exactly.
pub const GAUSSIAN_SHORTCUT_MIN_MODES: u64 = 10_000;

/// Photon counts registered in the two ports during one pulse.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default)]
pub struct PhotonCounts {
    pub n1: u64,
    pub n2: u64,
}

/// Walker alias table over a flattened joint distribution.
#[derive(Debug, Clone)]
pub struct PulseSampler {
    dim: usize,
    alias: Option<WeightedAliasIndex<f64>>,
}

impl PulseSampler {
    pub fn new(dist: &JointPhotonDistribution) -> Result<Self> {
        let dim = dist.dim();
        let alias = if dim == 1 {
            None
        } else {
            Some(WeightedAliasIndex::new(dist.probabilities().to_vec()).map_err(|e| {
                Error::InvalidParameter {
                    name: "sampling weights",
                    value: dist.total(),
                    reason: match e {
                        rand_distr::weighted::Error::InsufficientNonZero => "no non-zero weight",
                        _ => "not usable as an alias table",
                    },
                }
            })?)
        };
        Ok(Self { dim, alias })
    }

    pub fn draw<R: Rng + ?Sized>(&self, rng: &mut R) -> PhotonCounts {
        match &self.alias {
            None => PhotonCounts::default(),
            Some(alias) => {
                let idx = alias.sample(rng);
                PhotonCounts {
                    n1: (idx / self.dim) as u64,
                    n2: (idx % self.dim) as u64,
                }
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SamplingStrategy {
    /// m independent draws per pulse.
    Exact,
    /// Moment-matched bivariate normal for the m-fold sum, rounded to counts.
    Gaussian,
    /// Gaussian from [`GAUSSIAN_SHORTCUT_MIN_MODES`] modes upwards.
    Auto,
}

#[derive(Debug, Clone)]
struct Group {
    sampler: PulseSampler,
    moments: PhotonMoments,
    modes: u64,
}

/// Independent mode pairs making up one pulse. Groups let modes with
/// different statistics (for instance different spectral phases) share a pulse.
#[derive(Debug, Clone)]
pub struct ModeEnsemble {
    groups: Vec<Group>,
    strategy: SamplingStrategy,
}

impl ModeEnsemble {
    pub fn uniform(dist: &JointPhotonDistribution, modes: u64) -> Result<Self> {
        Self::from_groups(&[(dist.clone(), modes)])
    }

    pub fn from_groups(groups: &[(JointPhotonDistribution, u64)]) -> Result<Self> {
        let groups = groups
            .iter()
            .filter(|(_, m)| *m > 0)
            .map(|(d, m)| {
                Ok(Group {
                    sampler: PulseSampler::new(d)?,
                    moments: d.moments(),
                    modes: *m,
                })
            })
            .collect::<Result<Vec<_>>>()?;
        if groups.is_empty() {
            return Err(Error::InvalidParameter {
                name: "mode_count",
                value: 0.0,
                reason: "must be at least 1",
            });
        }
        Ok(Self {
            groups,
            strategy: SamplingStrategy::Auto,
        })
    }

    pub fn with_strategy(mut self, strategy: SamplingStrategy) -> Self {
        self.strategy = strategy;
        self
    }

    pub fn total_modes(&self) -> u64 {
        self.groups.iter().map(|g| g.modes).sum()
    }

    /// Exact moments of one pulse.
    pub fn moments(&self) -> PhotonMoments {
        let mut out = PhotonMoments {
            mean1: 0.0,
            mean2: 0.0,
            var1: 0.0,
            var2: 0.0,
            var_diff: 0.0,
            var_sum: 0.0,
        };
        for g in &self.groups {
            let m = g.moments.aggregate(g.modes).expect("groups have modes");
            out.mean1 += m.mean1;
            out.mean2 += m.mean2;
            out.var1 += m.var1;
            out.var2 += m.var2;
            out.var_diff += m.var_diff;
            out.var_sum += m.var_sum;
        }
        out
    }

    fn uses_gaussian(&self) -> bool {
        match self.strategy {
            SamplingStrategy::Exact => false,
            SamplingStrategy::Gaussian => true,
            SamplingStrategy::Auto => self.total_modes() >= GAUSSIAN_SHORTCUT_MIN_MODES,
        }
    }

    /// Counts of pulse `index`; a pure function of `(seed, index)`.
    pub fn sample_pulse(&self, seed: u64, index: u64) -> PhotonCounts {
        let mut rng = stream_rng(seed, Stream::Photons, index);
        if self.uses_gaussian() {
            let m = self.moments();
            let cov = m.covariance();
            let l11 = m.var1.max(0.0).sqrt();
            let l21 = if l11 > 0.0 { cov / l11 } else { 0.0 };
            let l22 = (m.var2 - l21 * l21).max(0.0).sqrt();
            let z1: f64 = StandardNormal.sample(&mut rng);
            let z2: f64 = StandardNormal.sample(&mut rng);
            let x1 = m.mean1 + l11 * z1;
            let x2 = m.mean2 + l21 * z1 + l22 * z2;
            PhotonCounts {
                n1: x1.round().max(0.0) as u64,
                n2: x2.round().max(0.0) as u64,
            }
        } else {
            let mut total = PhotonCounts::default();
            for g in &self.groups {
                for _ in 0..g.modes {
                    let c = g.sampler.draw(&mut rng);
                    total.n1 += c.n1;
                    total.n2 += c.n2;
                }
            }
            total
        }
    }

    /// `n_pulses` pulses, generated in parallel; the output only depends on
    /// the seed.
    pub fn sample(&self, n_pulses: usize, seed: u64) -> Vec<PhotonCounts> {
        (0..n_pulses as u64)
            .into_par_iter()
            .map(|i| self.sample_pulse(seed, i))
            .collect()
    }
}

/// Each pulse is the sum of `modes` independent draws from `dist`.
pub fn sample_pulses(
    dist: &JointPhotonDistribution,
    modes: u64,
    n_pulses: usize,
    seed: u64,
) -> Result<Vec<PhotonCounts>> {
    if n_pulses == 0 {
        return Err(Error::InsufficientData {
            what: "sample_pulses",
            needed: 1,
            got: 0,
        });
    }
    Ok(ModeEnsemble::uniform(dist, modes)?.sample(n_pulses, seed))
}
