//! Discrete periodic convolution with a truncated, renormalized Gaussian.

use super::analytic::AnalyticField;
use super::grid::{Grid, GridField};
use super::interp::Interpolated;
use crate::error::{Error, Result};

/// Symmetric mollifier `ρ_ε`: a Gaussian of standard deviation `ε`
/// truncated at radius `4ε` and renormalized to unit discrete mass.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Mollifier {
    pub width: f64,
}

/// Stencil offsets (in nodes) and weights of the discrete kernel on a grid.
/// The weights already include the `Δx^D` quadrature factor, so they sum to 1.
#[derive(Clone, Debug)]
pub struct DiscreteKernel<const D: usize> {
    pub offsets: Vec<[isize; D]>,
    pub weights: Vec<f64>,
}

impl<const D: usize> DiscreteKernel<D> {
    /// `Σ ρ(x_j) Δx^D`
    pub fn mass(&self) -> f64 {
        self.weights.iter().sum()
    }
}

impl Mollifier {
    pub fn new(width: f64) -> Self {
        assert!(width > 0.0);
        Self { width }
    }

    pub const TRUNCATION: f64 = 4.0;

    pub fn kernel<const D: usize>(&self, grid: &Grid<D>) -> Result<DiscreteKernel<D>> {
        let dx = grid.dx();
        if self.width < dx {
            return Err(Error::KernelUnderresolved { eps: self.width, dx });
        }
        let cutoff = Self::TRUNCATION * self.width;
        let r = (cutoff / dx).floor() as isize;
        let side = (2 * r + 1) as usize;
        let mut offsets = Vec::new();
        let mut raw = Vec::new();
        for combo in 0..side.pow(D as u32) {
            let mut c = combo;
            let mut off = [0isize; D];
            for a in (0..D).rev() {
                off[a] = (c % side) as isize - r;
                c /= side;
            }
            let dist2: f64 = off.iter().map(|&o| (o as f64 * dx).powi(2)).sum();
            if dist2 <= cutoff * cutoff {
                offsets.push(off);
                raw.push((-dist2 / (2.0 * self.width * self.width)).exp());
            }
        }
        let total: f64 = raw.iter().sum();
        let weights = raw.into_iter().map(|w| w / total).collect();
        Ok(DiscreteKernel { offsets, weights })
    }

    /// `ρ_ε * f` on the periodic grid of `f`, applied to every component.
    pub fn apply<const D: usize>(&self, f: &GridField<D>) -> Result<GridField<D>> {
        let kernel = self.kernel(&f.grid)?;
        Ok(convolve(f, &kernel))
    }

    /// Samples an analytic field on `grid` and mollifies it there.
    pub fn apply_analytic<const D: usize>(
        &self,
        f: &dyn AnalyticField<D>,
        grid: Grid<D>,
        t: f64,
    ) -> Result<GridField<D>> {
        self.apply(&GridField::sample(f, grid, t))
    }

    /// The mollified field on `grid`, extended off-grid by periodic cubic interpolation.
    pub fn smoothed<const D: usize>(&self, f: &dyn AnalyticField<D>, grid: Grid<D>) -> Result<Interpolated<D>> {
        Ok(Interpolated::new(self.apply_analytic(f, grid, 0.0)?))
    }
}

pub fn convolve<const D: usize>(f: &GridField<D>, kernel: &DiscreteKernel<D>) -> GridField<D> {
    let g = f.grid;
    let n = g.n as isize;
    let mut out = GridField::zeros(g, f.ncomp);
    for node in 0..g.len() {
        let m = g.multi_index(node);
        let acc = out.node_mut(node);
        for (off, &w) in kernel.offsets.iter().zip(&kernel.weights) {
            // ρ is even, so summing f(x - y) ρ(y) over y equals summing f(x + y) ρ(y)
            let mut src = 0usize;
            for a in 0..D {
                src = src * g.n + (m[a] as isize + off[a]).rem_euclid(n) as usize;
            }
            for (c, a) in acc.iter_mut().enumerate() {
                *a += w * f.data[src * f.ncomp + c];
            }
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fields::analytic::{Constant, PlaneWave, SingularVortex, Zero};
    use crate::fields::grid::divergence;
    use crate::fields::interp::Interpolated;
    use crate::linalg;
    use std::f64::consts::PI;

    #[test]
    fn kernel_has_unit_mass_and_is_even() {
        let g = Grid::<2>::new(64, PI);
        let k = Mollifier::new(3.0 * g.dx()).kernel(&g).unwrap();
        assert!((k.mass() - 1.0).abs() < 1e-12);
        for (off, w) in k.offsets.iter().zip(&k.weights) {
            let j = k.offsets.iter().position(|o| *o == [-off[0], -off[1]]).unwrap();
            assert_eq!(*w, k.weights[j]);
        }
    }

    #[test]
    fn underresolved_width_is_rejected() {
        let g = Grid::<2>::new(64, PI);
        let err = Mollifier::new(0.5 * g.dx()).kernel(&g).unwrap_err();
        assert!(matches!(err, Error::KernelUnderresolved { .. }));
    }

    #[test]
    fn zero_and_constant_fields_are_fixed_points() {
        let g = Grid::<2>::new(32, PI);
        let m = Mollifier::new(2.0 * g.dx());
        assert_eq!(m.apply_analytic(&Zero, g, 0.0).unwrap().max_abs(), 0.0);
        let c = m.apply_analytic(&Constant::new([0.7, -1.2]), g, 0.0).unwrap();
        for node in 0..g.len() {
            assert!((c.get(node, 0) - 0.7).abs() < 1e-13);
            assert!((c.get(node, 1) + 1.2).abs() < 1e-13);
        }
    }

    #[test]
    fn sup_norm_does_not_grow() {
        let g = Grid::<2>::new(32, PI);
        let f = GridField::sample(&PlaneWave::new(1.0, [3.0, 1.0], [1.0, -3.0], 0.1), g, 0.0);
        let out = Mollifier::new(2.0 * g.dx()).apply(&f).unwrap();
        assert!(out.sup_norm() <= f.sup_norm());
    }

    #[test]
    fn commutes_with_divergence() {
        let g = Grid::<2>::new(32, PI);
        let f = GridField::from_fn(g, 2, |x, out| {
            out[0] = (x[0] + 0.3 * x[1]).sin() * x[1].cos();
            out[1] = (2.0 * x[0]).cos() + x[1] * x[1] * 0.1;
        });
        let m = Mollifier::new(2.5 * g.dx());
        let a = divergence(&m.apply(&f).unwrap());
        let b = m.apply(&divergence(&f)).unwrap();
        let diff = a.data.iter().zip(&b.data).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max);
        assert!(diff < 1e-10, "{diff:e}");
    }

    #[test]
    fn divergence_free_input_stays_divergence_free() {
        let g = Grid::<2>::new(64, PI);
        let v = SingularVortex {
            exponent: 1.5,
            cutoff_inner: PI / 2.0 - 0.5,
            cutoff_outer: PI / 2.0,
        };
        let sampled = GridField::sample(&v, g, 0.0);
        let before = divergence(&sampled).max_abs();
        let after = divergence(&Mollifier::new(4.0 * g.dx()).apply(&sampled).unwrap()).max_abs();
        // the discrete divergence of the sampled field is not zero near the
        // singularity; convolution can only average it
        assert!(after <= before + 10.0 * f64::EPSILON * g.n as f64);
    }

    #[test]
    fn singular_vortex_matches_direct_quadrature() {
        let g = Grid::<2>::new(128, PI);
        let eps = 4.0 * g.dx();
        let v = SingularVortex {
            exponent: 1.5,
            cutoff_inner: PI / 2.0 - 0.5,
            cutoff_outer: PI / 2.0,
        };
        let moll = Mollifier::new(eps).apply_analytic(&v, g, 0.0).unwrap();
        assert!(moll.is_finite() && moll.sup_norm().is_finite());
        let x = [0.5, 0.0];

        // Brute-force oracle: polar quadrature about the singularity of
        // ∫ v(z) ρ(x - z) dz, which removes the r^{-1/2} blow-up.
        let cutoff = 4.0 * eps;
        let rho = |d2: f64| {
            if d2 <= cutoff * cutoff {
                (-d2 / (2.0 * eps * eps)).exp()
            } else {
                0.0
            }
        };
        let (nr, nt) = (3000, 2000);
        let rmax = linalg::norm(&x) + cutoff;
        let mut acc = [0.0; 2];
        let mut mass = 0.0;
        for ir in 0..nr {
            let r = (ir as f64 + 0.5) / nr as f64 * rmax;
            for it in 0..nt {
                let th = (it as f64 + 0.5) / nt as f64 * 2.0 * PI;
                let z = [r * th.cos(), r * th.sin()];
                let w = rho((x[0] - z[0]).powi(2) + (x[1] - z[1]).powi(2)) * r;
                let vz = v.eval(0.0, &z);
                acc[0] += w * vz[0];
                acc[1] += w * vz[1];
                mass += w;
            }
        }
        let oracle = [acc[0] / mass, acc[1] / mass];
        let got = Interpolated::new(moll).eval(0.0, &x);
        let rel = linalg::norm(&linalg::sub(&got, &oracle)) / linalg::norm(&oracle);
        assert!(rel < 0.01, "grid {got:?} vs oracle {oracle:?}: {rel:e}");
    }

    #[test]
    fn is_linear() {
        let g = Grid::<2>::new(32, PI);
        let f = GridField::from_fn(g, 2, |x, o| {
            o[0] = x[0].sin();
            o[1] = x[1].cos() * x[0];
        });
        let h = GridField::from_fn(g, 2, |x, o| {
            o[0] = (x[0] * x[1]).cos();
            o[1] = 1.0;
        });
        let m = Mollifier::new(2.0 * g.dx());
        let lhs = m.apply(&GridField::linear_combination(2.0, &f, -0.5, &h)).unwrap();
        let rhs = GridField::linear_combination(2.0, &m.apply(&f).unwrap(), -0.5, &m.apply(&h).unwrap());
        let diff = lhs.data.iter().zip(&rhs.data).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
        assert!(diff < 1e-13);
    }
}
