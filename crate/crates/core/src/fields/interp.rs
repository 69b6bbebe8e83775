//! Periodic cubic-convolution (Catmull–Rom) interpolation of grid fields,
//! bicubic in 2-D and tricubic in 3-D, with analytic derivatives of the
//! interpolant.

use super::analytic::AnalyticField;
use super::grid::GridField;
use crate::linalg::{self, Matrix, Tensor3, Vector};

/// Catmull–Rom weights for the four nodes at offsets -1, 0, 1, 2 around a
/// fractional position `s ∈ [0, 1)`, plus their first and second derivatives
/// in `s`.
#[inline]
fn weights(s: f64) -> ([f64; 4], [f64; 4], [f64; 4]) {
    let s2 = s * s;
    let s3 = s2 * s;
    let w = [
        0.5 * (-s3 + 2.0 * s2 - s),
        0.5 * (3.0 * s3 - 5.0 * s2 + 2.0),
        0.5 * (-3.0 * s3 + 4.0 * s2 + s),
        0.5 * (s3 - s2),
    ];
    let dw = [
        0.5 * (-3.0 * s2 + 4.0 * s - 1.0),
        0.5 * (9.0 * s2 - 10.0 * s),
        0.5 * (-9.0 * s2 + 8.0 * s + 1.0),
        0.5 * (3.0 * s2 - 2.0 * s),
    ];
    let ddw = [
        0.5 * (-6.0 * s + 4.0),
        0.5 * (18.0 * s - 10.0),
        0.5 * (-18.0 * s + 8.0),
        0.5 * (6.0 * s - 2.0),
    ];
    (w, dw, ddw)
}

/// A `D`-component grid field seen as a smooth periodic vector field.
#[derive(Clone, Debug)]
pub struct Interpolated<const D: usize> {
    field: GridField<D>,
}

struct Stencil<const D: usize> {
    base: [usize; D],
    w: [[f64; 4]; D],
    dw: [[f64; 4]; D],
    ddw: [[f64; 4]; D],
}

impl<const D: usize> Interpolated<D> {
    pub fn new(field: GridField<D>) -> Self {
        assert_eq!(field.ncomp, D, "interpolation needs a D-component field");
        Self { field }
    }

    pub fn grid_field(&self) -> &GridField<D> {
        &self.field
    }

    fn stencil(&self, x: &Vector<D>) -> Stencil<D> {
        let g = &self.field.grid;
        let n = g.n as isize;
        let dx = g.dx();
        let mut st = Stencil {
            base: [0; D],
            w: [[0.0; 4]; D],
            dw: [[0.0; 4]; D],
            ddw: [[0.0; 4]; D],
        };
        for a in 0..D {
            let u = (x[a] + g.half_width) / dx;
            let fl = u.floor();
            let s = u - fl;
            st.base[a] = ((fl as isize) - 1).rem_euclid(n) as usize;
            let (w, dw, ddw) = weights(s);
            st.w[a] = w;
            st.dw[a] = dw.map(|v| v / dx);
            st.ddw[a] = ddw.map(|v| v / (dx * dx));
        }
        st
    }

    /// Visits the 4^D stencil nodes with their flat index and per-axis offsets.
    #[inline]
    fn for_each_node(&self, st: &Stencil<D>, mut f: impl FnMut(usize, &[usize; D])) {
        let n = self.field.grid.n;
        let total = 4usize.pow(D as u32);
        let mut offs = [0usize; D];
        for combo in 0..total {
            let mut c = combo;
            let mut idx = 0;
            for a in (0..D).rev() {
                offs[a] = c % 4;
                c /= 4;
            }
            for a in 0..D {
                idx = idx * n + (st.base[a] + offs[a]) % n;
            }
            f(idx, &offs);
        }
    }
}

impl<const D: usize> AnalyticField<D> for Interpolated<D> {
    fn eval(&self, _t: f64, x: &Vector<D>) -> Vector<D> {
        let st = self.stencil(x);
        let mut out = linalg::zeros::<D>();
        self.for_each_node(&st, |idx, offs| {
            let w: f64 = (0..D).map(|a| st.w[a][offs[a]]).product();
            let v = &self.field.data[idx * D..idx * D + D];
            for c in 0..D {
                out[c] += w * v[c];
            }
        });
        out
    }

    fn jacobian(&self, t: f64, x: &Vector<D>) -> Matrix<D> {
        self.eval_with_jacobian(t, x).1
    }

    fn eval_with_jacobian(&self, _t: f64, x: &Vector<D>) -> (Vector<D>, Matrix<D>) {
        let st = self.stencil(x);
        let mut val = linalg::zeros::<D>();
        let mut jac = linalg::zero_matrix::<D>();
        self.for_each_node(&st, |idx, offs| {
            let w: f64 = (0..D).map(|a| st.w[a][offs[a]]).product();
            let grads: [f64; D] = std::array::from_fn(|i| {
                (0..D)
                    .map(|a| if a == i { st.dw[a][offs[a]] } else { st.w[a][offs[a]] })
                    .product()
            });
            let v = &self.field.data[idx * D..idx * D + D];
            for c in 0..D {
                val[c] += w * v[c];
                for i in 0..D {
                    jac[c][i] += grads[i] * v[c];
                }
            }
        });
        (val, jac)
    }

    fn hessian(&self, _t: f64, x: &Vector<D>) -> Tensor3<D> {
        let st = self.stencil(x);
        let mut h = linalg::zero_tensor::<D>();
        self.for_each_node(&st, |idx, offs| {
            let v = &self.field.data[idx * D..idx * D + D];
            for i in 0..D {
                for j in 0..D {
                    let w: f64 = (0..D)
                        .map(|a| match (a == i, a == j) {
                            (true, true) => st.ddw[a][offs[a]],
                            (true, false) | (false, true) => st.dw[a][offs[a]],
                            _ => st.w[a][offs[a]],
                        })
                        .product();
                    for c in 0..D {
                        h[c][i][j] += w * v[c];
                    }
                }
            }
        });
        h
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fields::analytic::{gaussian_stream, PlaneWave};
    use crate::fields::grid::Grid;
    use std::f64::consts::PI;

    #[test]
    fn reproduces_node_values() {
        let g = Grid::<2>::new(16, PI);
        let f = GridField::sample(&PlaneWave::new(1.0, [1.0, 2.0], [2.0, -1.0], 0.3), g, 0.0);
        let interp = Interpolated::new(f.clone());
        for idx in [0, 17, 100, 255] {
            let v = interp.eval(0.0, &g.coords(idx));
            assert!((v[0] - f.get(idx, 0)).abs() < 1e-13);
            assert!((v[1] - f.get(idx, 1)).abs() < 1e-13);
        }
    }

    #[test]
    fn third_order_accuracy_on_smooth_data() {
        let exact = gaussian_stream(1.0, [0.1, -0.2], 0.6);
        let probe = [0.3137, -0.2718];
        let err = |n: usize| {
            let g = Grid::<2>::new(n, PI);
            let interp = Interpolated::new(GridField::sample(&exact, g, 0.0));
            let a = interp.eval(0.0, &probe);
            let b = exact.eval(0.0, &probe);
            linalg::norm(&linalg::sub(&a, &b))
        };
        let (e1, e2) = (err(64), err(128));
        assert!(e2 < e1 / 6.0, "{e1:e} -> {e2:e}");
        assert!(e2 < 1e-4);
    }

    #[test]
    fn periodic_across_the_seam() {
        let g = Grid::<2>::new(32, PI);
        let wave = PlaneWave::new(1.0, [1.0, 0.0], [0.0, 1.0], 0.0);
        let interp = Interpolated::new(GridField::sample(&wave, g, 0.0));
        let a = interp.eval(0.0, &[PI - 0.01, 0.3]);
        let b = interp.eval(0.0, &[-PI - 0.01, 0.3]);
        assert!((a[1] - b[1]).abs() < 1e-14);
        assert!((a[1] - (PI - 0.01_f64).sin()).abs() < 1e-4);
    }

    #[test]
    fn jacobian_matches_interpolant_differences() {
        let g = Grid::<3>::new(12, PI);
        let wave = PlaneWave::new(1.0, [1.0, 1.0, 0.0], [1.0, -1.0, 0.5], 0.2);
        let interp = Interpolated::new(GridField::sample(&wave, g, 0.0));
        let x = [0.123, -0.77, 1.9];
        let (_, j) = interp.eval_with_jacobian(0.0, &x);
        let d = 1e-6;
        for i in 0..3 {
            let mut xp = x;
            let mut xm = x;
            xp[i] += d;
            xm[i] -= d;
            let (fp, fm) = (interp.eval(0.0, &xp), interp.eval(0.0, &xm));
            for c in 0..3 {
                assert!(((fp[c] - fm[c]) / (2.0 * d) - j[c][i]).abs() < 1e-7);
            }
        }
    }
}
