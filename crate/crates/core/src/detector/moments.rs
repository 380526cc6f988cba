use rayon::prelude::*;

/// Records are folded in chunks of this size and merged in order, so the
/// result is identical for any number of worker threads.
const CHUNK: usize = 4096;

/// Running first and second moments of a pair `(x, y)`, mergeable exactly
/// with the pairwise update of Chan, Golub and LeVeque.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct PairMoments {
    count: u64,
    mean_x: f64,
    mean_y: f64,
    m2_x: f64,
    m2_y: f64,
    c_xy: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub(crate) struct HigherMoments {
    /// E[(D - mu_D)^4] with D = x - y.
    pub mu4_diff: f64,
    /// E[(D - mu_D)^2 (S - mu_S)] with S = x + y.
    pub mu_diff2_sum: f64,
}

impl PairMoments {
    pub fn push(&mut self, x: f64, y: f64) {
        self.count += 1;
        let n = self.count as f64;
        let dx = x - self.mean_x;
        let dy = y - self.mean_y;
        self.mean_x += dx / n;
        self.mean_y += dy / n;
        self.m2_x += dx * (x - self.mean_x);
        self.m2_y += dy * (y - self.mean_y);
        self.c_xy += dx * (y - self.mean_y);
    }

    pub fn merge(&self, other: &Self) -> Self {
        if self.count == 0 {
            return *other;
        }
        if other.count == 0 {
            return *self;
        }
        let (na, nb) = (self.count as f64, other.count as f64);
        let n = na + nb;
        let dx = other.mean_x - self.mean_x;
        let dy = other.mean_y - self.mean_y;
        let w = na * nb / n;
        Self {
            count: self.count + other.count,
            mean_x: self.mean_x + dx * nb / n,
            mean_y: self.mean_y + dy * nb / n,
            m2_x: self.m2_x + other.m2_x + dx * dx * w,
            m2_y: self.m2_y + other.m2_y + dy * dy * w,
            c_xy: self.c_xy + other.c_xy + dx * dy * w,
        }
    }

    pub fn from_pairs(pairs: impl IntoIterator<Item = (f64, f64)>) -> Self {
        let mut m = Self::default();
        for (x, y) in pairs {
            m.push(x, y);
        }
        m
    }

    /// Parallel chunked fold; thread-count independent.
    pub fn from_slice(pairs: &[(f64, f64)]) -> Self {
        let parts: Vec<Self> = pairs
            .par_chunks(CHUNK)
            .map(|c| Self::from_pairs(c.iter().copied()))
            .collect();
        parts.iter().fold(Self::default(), |acc, p| acc.merge(p))
    }

    pub fn count(&self) -> u64 {
        self.count
    }

    pub fn mean_x(&self) -> f64 {
        self.mean_x
    }

    pub fn mean_y(&self) -> f64 {
        self.mean_y
    }

    fn dof(&self) -> f64 {
        (self.count.max(2) - 1) as f64
    }

    /// Unbiased sample variances.
    pub fn var_x(&self) -> f64 {
        self.m2_x / self.dof()
    }

    pub fn var_y(&self) -> f64 {
        self.m2_y / self.dof()
    }

    pub fn covariance(&self) -> f64 {
        self.c_xy / self.dof()
    }

    pub fn var_diff(&self) -> f64 {
        ((self.m2_x + self.m2_y - 2.0 * self.c_xy) / self.dof()).max(0.0)
    }

    pub fn var_sum(&self) -> f64 {
        ((self.m2_x + self.m2_y + 2.0 * self.c_xy) / self.dof()).max(0.0)
    }

    /// Second pass over the same data for the moments the NRF standard error needs.
    pub(crate) fn difference_higher_moments(&self, pairs: &[(f64, f64)]) -> HigherMoments {
        let mu_d = self.mean_x - self.mean_y;
        let mu_s = self.mean_x + self.mean_y;
        let parts: Vec<(f64, f64)> = pairs
            .par_chunks(CHUNK)
            .map(|c| {
                c.iter().fold((0.0, 0.0), |(a, b), &(x, y)| {
                    let d2 = (x - y - mu_d).powi(2);
                    (a + d2 * d2, b + d2 * (x + y - mu_s))
                })
            })
            .collect();
        let (s4, s3) = parts.iter().fold((0.0, 0.0), |(a, b), p| (a + p.0, b + p.1));
        let n = pairs.len().max(1) as f64;
        HigherMoments {
            mu4_diff: s4 / n,
            mu_diff2_sum: s3 / n,
        }
    }
}
