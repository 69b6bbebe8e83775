use rayon::prelude::*;

use super::flow::Characteristics;
use crate::error::{Error, Result};
use crate::fields::{AnalyticField, Grid, GridField};
use crate::linalg;
use crate::noise::BrownianPath;

/// Default bound on the round-trip certificate `|Φ_t(Ψ_t(x)) − x|`.
pub const TOL_INV: f64 = 1e-2;
/// A sample is rejected when more than this fraction of nodes fail the certificate.
pub const MAX_FAILED_FRACTION: f64 = 1e-3;

/// `B(t,·)` on a grid for one Brownian path.
#[derive(Clone, Debug)]
pub struct SpdeSampleField<const D: usize> {
    pub field: GridField<D>,
    pub index: usize,
    pub t: f64,
    /// `e_f(t)` on the same path; 1 unless set by the caller.
    pub exponential: f64,
    pub failed_nodes: usize,
    pub max_residual: f64,
}

impl<const D: usize> Characteristics<'_, D> {
    /// `B(t,x) = DΦ_t(Ψ_t(x)) B_0(Ψ_t(x))` at every node of `grid`, with `t`
    /// the end of `path`.
    pub fn solve_spde_sample(
        &self,
        b0: &dyn AnalyticField<D>,
        path: &BrownianPath,
        grid: Grid<D>,
        tol_inv: f64,
    ) -> Result<SpdeSampleField<D>> {
        let t = path.horizon();
        let wrap = |y: &linalg::Vector<D>| match self.torus {
            Some(g) => g.wrap(y),
            None => *y,
        };
        if self.is_translation() {
            let shift = self.translation(path);
            let field = GridField::from_fn(grid, D, |x, out| {
                out.copy_from_slice(&b0.eval(0.0, &wrap(&linalg::sub(x, &shift))));
            });
            return Ok(SpdeSampleField {
                field,
                index: path.index,
                t,
                exponential: 1.0,
                failed_nodes: 0,
                max_residual: 0.0,
            });
        }
        let nodes = (0..grid.len())
            .into_par_iter()
            .map(|node| {
                let inv = self.integrate_inverse(&grid.coords(node), path)?;
                let b = linalg::mat_vec(&inv.jac, &b0.eval(0.0, &wrap(&inv.y)));
                Ok((b, inv.residual))
            })
            .collect::<Result<Vec<_>>>()?;
        let failed = nodes.iter().filter(|(_, r)| !(*r <= tol_inv)).count();
        if failed as f64 > MAX_FAILED_FRACTION * grid.len() as f64 {
            return Err(Error::TooManyInverseFailures {
                failed,
                total: grid.len(),
            });
        }
        let max_residual = nodes.iter().map(|(_, r)| *r).fold(0.0, f64::max);
        let values: Vec<_> = nodes.into_iter().map(|(b, _)| b).collect();
        Ok(SpdeSampleField {
            field: GridField::from_vectors(grid, &values),
            index: path.index,
            t,
            exponential: 1.0,
            failed_nodes: failed,
            max_residual,
        })
    }

    /// Samples `B(t_j, ·)` for `j = 0..=N` along one path.
    pub fn solve_spde_series(
        &self,
        b0: &dyn AnalyticField<D>,
        path: &BrownianPath,
        grid: Grid<D>,
        tol_inv: f64,
    ) -> Result<Vec<GridField<D>>> {
        (0..=path.steps())
            .map(|j| Ok(self.solve_spde_sample(b0, &path.truncated(j), grid, tol_inv)?.field))
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fields::analytic::{gaussian_stream, Cellular, Constant, GaussianBump, Linear, Zero};
    use crate::fields::SharedField;
    use crate::noise::{BrownianEnsemble, NoiseBasis};
    use std::f64::consts::PI;
    use std::sync::Arc;

    #[test]
    fn constant_noise_translates() {
        let basis = NoiseBasis::<2>::constant();
        let g = Grid::<2>::new(32, PI);
        let ch = Characteristics::new(&Zero, &basis, Some(g));
        let b0 = gaussian_stream(1.0, [0.0, 0.0], 0.6);
        let path = BrownianEnsemble::new(1, 2, 64, 0.25, 9).unwrap().path(0);
        let w = path.endpoint();
        let s = ch.solve_spde_sample(&b0, &path, g, TOL_INV).unwrap();
        for node in 0..g.len() {
            let x = g.coords(node);
            let expect = b0.eval(0.0, &g.wrap(&[x[0] - w[0], x[1] - w[1]]));
            assert!(linalg::norm(&linalg::sub(&s.field.vector(node), &expect)) < 1e-12);
        }
    }

    #[test]
    fn translation_shortcut_agrees_with_general_path() {
        // a constant drift reported as non-constant forces the general code path
        #[derive(Debug)]
        struct Opaque(Constant<2>);
        impl AnalyticField<2> for Opaque {
            fn eval(&self, t: f64, x: &linalg::Vector<2>) -> linalg::Vector<2> {
                self.0.eval(t, x)
            }
            fn jacobian(&self, t: f64, x: &linalg::Vector<2>) -> linalg::Matrix<2> {
                self.0.jacobian(t, x)
            }
            fn hessian(&self, t: f64, x: &linalg::Vector<2>) -> linalg::Tensor3<2> {
                self.0.hessian(t, x)
            }
        }
        let basis = NoiseBasis::<2>::constant();
        let g = Grid::<2>::new(16, PI);
        let b0 = gaussian_stream(1.0, [0.2, 0.0], 0.6);
        let path = BrownianEnsemble::new(1, 2, 32, 0.5, 1).unwrap().path(0);
        let fast_v = Constant::new([0.3, -0.2]);
        let slow_v = Opaque(fast_v);
        let fast = Characteristics::new(&fast_v, &basis, Some(g)).solve_spde_sample(&b0, &path, g, TOL_INV).unwrap();
        let slow = Characteristics::new(&slow_v, &basis, Some(g)).solve_spde_sample(&b0, &path, g, TOL_INV).unwrap();
        let diff = fast.field.data.iter().zip(&slow.field.data).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
        assert!(diff < 1e-12, "{diff}");
    }

    #[test]
    fn zero_initial_data_stays_zero() {
        let basis = NoiseBasis::<2>::sinusoidal();
        let g = Grid::<2>::new(8, PI);
        let v = Cellular::<2>::new(0.5, [1.0, 1.0]);
        let ch = Characteristics::new(&v, &basis, Some(g));
        let path = BrownianEnsemble::new(1, basis.len(), 16, 0.1, 2).unwrap().path(0);
        let s = ch.solve_spde_sample(&Zero, &path, g, TOL_INV).unwrap();
        assert_eq!(s.field.max_abs(), 0.0);
    }

    #[test]
    fn shear_with_constant_initial_field() {
        let basis = NoiseBasis::new(vec![Arc::new(Linear::new([[0.0, 0.0], [1.0, 0.0]])) as SharedField<2>]);
        let ch = Characteristics::new(&Zero, &basis, None);
        let g = Grid::<2>::new(8, 1.0);
        let c = [0.7, -0.3];
        let path = BrownianEnsemble::new(1, 1, 256, 1.0, 5).unwrap().path(0);
        let w = path.endpoint()[0];
        let s = ch.solve_spde_sample(&Constant::new(c), &path, g, TOL_INV).unwrap();
        for node in [0, 9, 27, 40, 63] {
            let b = s.field.vector(node);
            assert!((b[0] - c[0]).abs() < 1e-12 && (b[1] - (w * c[0] + c[1])).abs() < 1e-12);
        }
    }

    #[test]
    fn linear_in_initial_data() {
        let basis = NoiseBasis::<2>::sinusoidal();
        let g = Grid::<2>::new(16, PI);
        let v = Cellular::<2>::new(0.5, [1.0, 1.0]);
        let ch = Characteristics::new(&v, &basis, Some(g));
        let path = BrownianEnsemble::new(1, basis.len(), 32, 0.2, 3).unwrap().path(0);
        let p = gaussian_stream(1.0, [0.0, 0.0], 0.6);
        let q = GaussianBump {
            amplitude: [0.5, 1.0],
            center: [0.3, 0.3],
            width: 0.5,
        };
        #[derive(Debug)]
        struct Combo<'a>(&'a dyn AnalyticField<2>, &'a dyn AnalyticField<2>);
        impl AnalyticField<2> for Combo<'_> {
            fn eval(&self, t: f64, x: &linalg::Vector<2>) -> linalg::Vector<2> {
                let (a, b) = (self.0.eval(t, x), self.1.eval(t, x));
                [2.0 * a[0] - 3.0 * b[0], 2.0 * a[1] - 3.0 * b[1]]
            }
            fn jacobian(&self, _: f64, _: &linalg::Vector<2>) -> linalg::Matrix<2> {
                unreachable!()
            }
            fn hessian(&self, _: f64, _: &linalg::Vector<2>) -> linalg::Tensor3<2> {
                unreachable!()
            }
        }
        let sp = ch.solve_spde_sample(&p, &path, g, TOL_INV).unwrap().field;
        let sq = ch.solve_spde_sample(&q, &path, g, TOL_INV).unwrap().field;
        let sc = ch.solve_spde_sample(&Combo(&p, &q), &path, g, TOL_INV).unwrap().field;
        let lin = GridField::linear_combination(2.0, &sp, -3.0, &sq);
        let diff = lin.data.iter().zip(&sc.data).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
        assert!(diff < 1e-13 * sc.max_abs().max(1.0));
    }

    #[test]
    fn certificate_failures_reject_the_sample() {
        let basis = NoiseBasis::<2>::sinusoidal();
        let g = Grid::<2>::new(8, PI);
        let v = Cellular::<2>::new(0.5, [1.0, 1.0]);
        let ch = Characteristics::new(&v, &basis, Some(g));
        let path = BrownianEnsemble::new(1, basis.len(), 4, 1.0, 3).unwrap().path(0);
        let err = ch.solve_spde_sample(&gaussian_stream(1.0, [0.0, 0.0], 0.6), &path, g, 1e-14);
        assert!(matches!(err, Err(Error::TooManyInverseFailures { .. })));
    }
}
