use crate::error::{Error, Result};
use crate::fields::{Grid, GridField};
use crate::parabolic::{outer_square, sym_len};
use crate::stats::{ensemble_stats, RunningStats};

/// Per-node Monte-Carlo mean and its standard error.
#[derive(Clone, Debug)]
pub struct Estimate<const D: usize> {
    pub mean: GridField<D>,
    pub standard_error: GridField<D>,
    pub samples: usize,
}

impl<const D: usize> Estimate<D> {
    pub fn from_stats(stats: &RunningStats, grid: Grid<D>, ncomp: usize) -> Self {
        let mut mean = GridField::zeros(grid, ncomp);
        mean.data.copy_from_slice(&stats.mean);
        let mut standard_error = GridField::zeros(grid, ncomp);
        standard_error.data.copy_from_slice(&stats.standard_error());
        Self {
            mean,
            standard_error,
            samples: stats.count,
        }
    }
}

fn check_shape<const D: usize>(field: &GridField<D>, grid: Grid<D>, ncomp: usize) -> Result<()> {
    if field.grid != grid || field.ncomp != ncomp {
        return Err(Error::DimensionMismatch {
            expected: grid.len() * ncomp,
            got: field.data.len(),
        });
    }
    Ok(())
}

/// `V = E[B e_f]` from `sample(m) = (B_m, e_f,m)` for `m < samples`.
pub fn estimate_v<const D: usize, F>(samples: usize, grid: Grid<D>, sample: F) -> Result<Estimate<D>>
where
    F: Fn(usize) -> Result<(GridField<D>, f64)> + Sync,
{
    let stats = ensemble_stats(samples, grid.len() * D, |m, out| {
        let (b, e) = sample(m)?;
        check_shape(&b, grid, D)?;
        for (o, x) in out.iter_mut().zip(&b.data) {
            *o = x * e;
        }
        Ok(())
    })?;
    Ok(Estimate::from_stats(&stats, grid, D))
}

/// `u^{αβ} = E[B^α B^β]` in symmetric storage.
pub fn estimate_moments<const D: usize, F>(samples: usize, grid: Grid<D>, sample: F) -> Result<Estimate<D>>
where
    F: Fn(usize) -> Result<GridField<D>> + Sync,
{
    let stats = ensemble_stats(samples, grid.len() * sym_len(D), |m, out| {
        let b = sample(m)?;
        check_shape(&b, grid, D)?;
        out.copy_from_slice(&outer_square(&b).data);
        Ok(())
    })?;
    Ok(Estimate::from_stats(&stats, grid, sym_len(D)))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::random_fields::TrigPolynomial;
    use std::f64::consts::PI;

    #[test]
    fn zero_samples_give_zero_estimates() {
        let g = Grid::<2>::new(8, PI);
        let est = estimate_v(10, g, |_| Ok((GridField::zeros(g, 2), 1.3))).unwrap();
        assert_eq!(est.mean.max_abs(), 0.0);
        assert_eq!(est.standard_error.max_abs(), 0.0);
        assert!(matches!(
            estimate_v(1, g, |_| Ok((GridField::zeros(g, 2), 1.0))),
            Err(Error::InsufficientSamples { .. })
        ));
        assert!(estimate_v(4, g, |_| Ok((GridField::zeros(g, 1), 1.0))).is_err());
    }

    #[test]
    fn deterministic_samples_give_outer_products() {
        let g = Grid::<2>::new(8, PI);
        let b = TrigPolynomial::<2>::random(2, 2, 3).sample(g);
        let est = estimate_moments(6, g, |_| Ok(b.clone())).unwrap();
        for node in 0..g.len() {
            let v = b.vector(node);
            let u = est.mean.node(node);
            let expect = [v[0] * v[0], v[0] * v[1], v[1] * v[1]];
            for c in 0..3 {
                assert!((u[c] - expect[c]).abs() < 1e-14 * expect[c].abs().max(1.0));
            }
        }
        assert!(est.standard_error.max_abs() < 1e-12);
    }

    #[test]
    fn union_of_ensembles_is_the_weighted_mean() {
        let g = Grid::<2>::new(8, PI);
        let sample = |m: usize| Ok((TrigPolynomial::<2>::random(2, 2, m as u64).sample(g), 1.0 + 0.1 * m as f64));
        let all = estimate_v(96, g, sample).unwrap();
        let first = estimate_v(64, g, sample).unwrap();
        let second = estimate_v(32, g, |m| sample(m + 64)).unwrap();
        let pooled = GridField::linear_combination(64.0 / 96.0, &first.mean, 32.0 / 96.0, &second.mean);
        let diff = pooled.data.iter().zip(&all.mean.data).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
        assert!(diff < 1e-13);
    }

    #[test]
    fn squares_are_nonnegative() {
        let g = Grid::<2>::new(8, PI);
        let est = estimate_moments(20, g, |m| Ok(TrigPolynomial::<2>::random(2, 2, m as u64).sample(g))).unwrap();
        for node in 0..g.len() {
            assert!(est.mean.get(node, 0) >= 0.0 && est.mean.get(node, 2) >= 0.0);
        }
    }
}
