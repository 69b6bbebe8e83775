use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// `M` independent `K`-dimensional Brownian paths on a uniform grid of `N`
/// steps over `[0, T]`. Paths are regenerated on demand from `(seed, m)`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct BrownianEnsemble {
    pub samples: usize,
    pub modes: usize,
    pub steps: usize,
    pub horizon: f64,
    pub seed: u64,
}

/// Increments of one path, stored step-major: `dw[j*K + k] = ΔW^k_j`.
#[derive(Clone, Debug, PartialEq)]
pub struct BrownianPath {
    pub index: usize,
    pub dt: f64,
    pub modes: usize,
    dw: Vec<f64>,
}

impl BrownianEnsemble {
    pub fn new(samples: usize, modes: usize, steps: usize, horizon: f64, seed: u64) -> Result<Self> {
        if samples == 0 || modes == 0 || steps == 0 {
            return Err(Error::InvalidConfig(format!(
                "ensemble sizes must be positive (M = {samples}, K = {modes}, N = {steps})"
            )));
        }
        if !(horizon > 0.0 && horizon.is_finite()) {
            return Err(Error::InvalidConfig(format!("time horizon must be positive, got {horizon}")));
        }
        Ok(Self {
            samples,
            modes,
            steps,
            horizon,
            seed,
        })
    }

    pub fn dt(&self) -> f64 {
        self.horizon / self.steps as f64
    }

    /// Path `m` is drawn from ChaCha8 stream `m` of the master seed, so it does
    /// not depend on which other paths are generated or in what order.
    pub fn path(&self, m: usize) -> BrownianPath {
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        rng.set_stream(m as u64);
        let sd = self.dt().sqrt();
        let dw = (0..self.steps * self.modes)
            .map(|_| {
                let z: f64 = StandardNormal.sample(&mut rng);
                sd * z
            })
            .collect();
        BrownianPath {
            index: m,
            dt: self.dt(),
            modes: self.modes,
            dw,
        }
    }
}

impl BrownianPath {
    pub fn from_increments(index: usize, dt: f64, modes: usize, dw: Vec<f64>) -> Self {
        assert!(modes > 0 && dw.len().is_multiple_of(modes));
        Self { index, dt, modes, dw }
    }

    pub fn steps(&self) -> usize {
        self.dw.len() / self.modes
    }

    pub fn horizon(&self) -> f64 {
        self.dt * self.steps() as f64
    }

    #[inline]
    pub fn increment(&self, j: usize) -> &[f64] {
        &self.dw[j * self.modes..(j + 1) * self.modes]
    }

    pub fn increments(&self) -> &[f64] {
        &self.dw
    }

    /// `W(t_j)` for `j = 0..=N`.
    pub fn values(&self) -> Vec<Vec<f64>> {
        let mut w = vec![0.0; self.modes];
        let mut out = vec![w.clone()];
        for j in 0..self.steps() {
            for (wk, dk) in w.iter_mut().zip(self.increment(j)) {
                *wk += dk;
            }
            out.push(w.clone());
        }
        out
    }

    pub fn endpoint(&self) -> Vec<f64> {
        self.values().pop().unwrap()
    }

    /// Sums consecutive blocks of `factor` increments, giving the same path on
    /// a grid with step `factor·Δt`.
    pub fn coarsened(&self, factor: usize) -> BrownianPath {
        assert!(factor > 0 && self.steps().is_multiple_of(factor));
        let steps = self.steps() / factor;
        let mut dw = vec![0.0; steps * self.modes];
        for j in 0..self.steps() {
            let jc = j / factor;
            for k in 0..self.modes {
                dw[jc * self.modes + k] += self.dw[j * self.modes + k];
            }
        }
        BrownianPath {
            index: self.index,
            dt: self.dt * factor as f64,
            modes: self.modes,
            dw,
        }
    }

    /// Keeps only the first `steps` increments.
    pub fn truncated(&self, steps: usize) -> BrownianPath {
        assert!(steps <= self.steps());
        BrownianPath {
            index: self.index,
            dt: self.dt,
            modes: self.modes,
            dw: self.dw[..steps * self.modes].to_vec(),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_nonpositive_sizes() {
        assert!(BrownianEnsemble::new(0, 1, 1, 1.0, 0).is_err());
        assert!(BrownianEnsemble::new(1, 0, 1, 1.0, 0).is_err());
        assert!(BrownianEnsemble::new(1, 1, 0, 1.0, 0).is_err());
        assert!(BrownianEnsemble::new(1, 1, 1, 0.0, 0).is_err());
    }

    #[test]
    fn same_seed_is_bit_identical_in_any_order() {
        let e = BrownianEnsemble::new(8, 3, 16, 1.0, 42).unwrap();
        let fwd: Vec<_> = (0..8).map(|m| e.path(m)).collect();
        let rev: Vec<_> = (0..8).rev().map(|m| e.path(m)).collect();
        for m in 0..8 {
            assert_eq!(fwd[m], rev[7 - m]);
        }
        let other = BrownianEnsemble::new(8, 3, 16, 1.0, 43).unwrap();
        assert_ne!(e.path(0), other.path(0));
    }

    #[test]
    fn unit_variance_increments() {
        let e = BrownianEnsemble::new(10_000, 1, 1, 1.0, 7).unwrap();
        let xs: Vec<f64> = (0..e.samples).map(|m| e.path(m).increment(0)[0]).collect();
        let n = xs.len() as f64;
        let mean = xs.iter().sum::<f64>() / n;
        let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0);
        assert!(mean.abs() < 4.0 * (1.0 / n).sqrt());
        assert!((0.9..=1.1).contains(&var), "{var}");
    }

    #[test]
    fn pooled_mean_and_variance() {
        let e = BrownianEnsemble::new(200, 4, 64, 0.5, 3).unwrap();
        let all: Vec<f64> = (0..e.samples).flat_map(|m| e.path(m).increments().to_vec()).collect();
        let n = all.len() as f64;
        let mean = all.iter().sum::<f64>() / n;
        let var = all.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0);
        assert!(mean.abs() <= 4.0 * (e.dt() / n).sqrt());
        assert!((var / e.dt() - 1.0).abs() < 0.1);
    }

    #[test]
    fn distinct_streams_are_uncorrelated() {
        let e = BrownianEnsemble::new(2, 1, 10_000, 10_000.0, 11).unwrap();
        let (a, b) = (e.path(0), e.path(1));
        let (x, y) = (a.increments(), b.increments());
        let n = x.len() as f64;
        let (mx, my) = (x.iter().sum::<f64>() / n, y.iter().sum::<f64>() / n);
        let cov: f64 = x.iter().zip(y).map(|(p, q)| (p - mx) * (q - my)).sum();
        let vx: f64 = x.iter().map(|p| (p - mx).powi(2)).sum();
        let vy: f64 = y.iter().map(|q| (q - my).powi(2)).sum();
        let rho = cov / (vx * vy).sqrt();
        assert!(rho.abs() < 0.05, "{rho}");
    }

    #[test]
    fn coarsening_preserves_endpoints() {
        let e = BrownianEnsemble::new(1, 2, 16, 1.0, 5).unwrap();
        let p = e.path(0);
        let c = p.coarsened(4);
        assert_eq!(c.steps(), 4);
        assert!((c.dt - 0.25).abs() < 1e-15);
        for (a, b) in p.endpoint().iter().zip(c.endpoint()) {
            assert!((a - b).abs() < 1e-14);
        }
        assert_eq!(p.truncated(4).steps(), 4);
    }
}
