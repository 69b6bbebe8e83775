//! Closed-form vector fields with exact first and second derivatives.

use std::fmt::Debug;
use std::sync::Arc;

use crate::linalg::{self, Matrix, Tensor3, Vector};

/// Value, Jacobian and Hessian of a field at one point.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Jet<const D: usize> {
    pub value: Vector<D>,
    /// `jac[a][i] = ∂_i f^a`
    pub jac: Matrix<D>,
    /// `hess[a][i][j] = ∂_i ∂_j f^a`
    pub hess: Tensor3<D>,
}

/// A vector field on `ℝ^D` (optionally time dependent) with exact derivatives.
pub trait AnalyticField<const D: usize>: Send + Sync + Debug {
    fn eval(&self, t: f64, x: &Vector<D>) -> Vector<D>;

    fn jacobian(&self, t: f64, x: &Vector<D>) -> Matrix<D>;

    fn hessian(&self, t: f64, x: &Vector<D>) -> Tensor3<D>;

    fn eval_with_jacobian(&self, t: f64, x: &Vector<D>) -> (Vector<D>, Matrix<D>) {
        (self.eval(t, x), self.jacobian(t, x))
    }

    fn jet(&self, t: f64, x: &Vector<D>) -> Jet<D> {
        Jet {
            value: self.eval(t, x),
            jac: self.jacobian(t, x),
            hess: self.hessian(t, x),
        }
    }

    /// True when the field does not depend on `x`; lets integrators skip
    /// Jacobian work that would only add zeros.
    fn is_constant(&self) -> bool {
        false
    }

    fn divergence(&self, t: f64, x: &Vector<D>) -> f64 {
        let j = self.jacobian(t, x);
        (0..D).map(|a| j[a][a]).sum()
    }
}

pub type SharedField<const D: usize> = Arc<dyn AnalyticField<D>>;

#[derive(Clone, Copy, Debug, Default)]
pub struct Zero;

impl<const D: usize> AnalyticField<D> for Zero {
    fn eval(&self, _t: f64, _x: &Vector<D>) -> Vector<D> {
        linalg::zeros()
    }
    fn jacobian(&self, _t: f64, _x: &Vector<D>) -> Matrix<D> {
        linalg::zero_matrix()
    }
    fn hessian(&self, _t: f64, _x: &Vector<D>) -> Tensor3<D> {
        linalg::zero_tensor()
    }
    fn is_constant(&self) -> bool {
        true
    }
}

#[derive(Clone, Copy, Debug)]
pub struct Constant<const D: usize> {
    pub value: Vector<D>,
}

impl<const D: usize> Constant<D> {
    pub fn new(value: Vector<D>) -> Self {
        Self { value }
    }
}

impl<const D: usize> AnalyticField<D> for Constant<D> {
    fn eval(&self, _t: f64, _x: &Vector<D>) -> Vector<D> {
        self.value
    }
    fn jacobian(&self, _t: f64, _x: &Vector<D>) -> Matrix<D> {
        linalg::zero_matrix()
    }
    fn hessian(&self, _t: f64, _x: &Vector<D>) -> Tensor3<D> {
        linalg::zero_tensor()
    }
    fn is_constant(&self) -> bool {
        true
    }
}

/// `f(x) = A x + b`.
#[derive(Clone, Copy, Debug)]
pub struct Linear<const D: usize> {
    pub matrix: Matrix<D>,
    pub offset: Vector<D>,
}

impl<const D: usize> Linear<D> {
    pub fn new(matrix: Matrix<D>) -> Self {
        Self {
            matrix,
            offset: linalg::zeros(),
        }
    }
}

impl<const D: usize> AnalyticField<D> for Linear<D> {
    fn eval(&self, _t: f64, x: &Vector<D>) -> Vector<D> {
        linalg::add(&linalg::mat_vec(&self.matrix, x), &self.offset)
    }
    fn jacobian(&self, _t: f64, _x: &Vector<D>) -> Matrix<D> {
        self.matrix
    }
    fn hessian(&self, _t: f64, _x: &Vector<D>) -> Tensor3<D> {
        linalg::zero_tensor()
    }
}

/// `f(x) = A u sin(k·x + φ)`; divergence free whenever `u ⊥ k`.
#[derive(Clone, Copy, Debug)]
pub struct PlaneWave<const D: usize> {
    pub amplitude: f64,
    pub wavevector: Vector<D>,
    pub direction: Vector<D>,
    pub phase: f64,
}

impl<const D: usize> PlaneWave<D> {
    pub fn new(amplitude: f64, wavevector: Vector<D>, direction: Vector<D>, phase: f64) -> Self {
        Self {
            amplitude,
            wavevector,
            direction,
            phase,
        }
    }

    #[inline]
    fn arg(&self, x: &Vector<D>) -> f64 {
        linalg::dot(&self.wavevector, x) + self.phase
    }
}

impl<const D: usize> AnalyticField<D> for PlaneWave<D> {
    fn eval(&self, _t: f64, x: &Vector<D>) -> Vector<D> {
        linalg::scale(self.amplitude * self.arg(x).sin(), &self.direction)
    }

    fn jacobian(&self, _t: f64, x: &Vector<D>) -> Matrix<D> {
        let c = self.amplitude * self.arg(x).cos();
        std::array::from_fn(|a| std::array::from_fn(|i| c * self.direction[a] * self.wavevector[i]))
    }

    fn hessian(&self, _t: f64, x: &Vector<D>) -> Tensor3<D> {
        let s = -self.amplitude * self.arg(x).sin();
        let (u, k) = (&self.direction, &self.wavevector);
        std::array::from_fn(|a| std::array::from_fn(|i| std::array::from_fn(|j| s * u[a] * k[i] * k[j])))
    }

    fn eval_with_jacobian(&self, _t: f64, x: &Vector<D>) -> (Vector<D>, Matrix<D>) {
        let (s, c) = self.arg(x).sin_cos();
        let (u, k) = (&self.direction, &self.wavevector);
        let value = linalg::scale(self.amplitude * s, u);
        let c = self.amplitude * c;
        let jac = std::array::from_fn(|a| std::array::from_fn(|i| c * u[a] * k[i]));
        (value, jac)
    }
}

/// Derivatives of a scalar potential in the plane, up to third order.
#[derive(Clone, Copy, Debug, Default)]
pub struct PotentialJet {
    pub value: f64,
    pub grad: [f64; 2],
    pub hess: [[f64; 2]; 2],
    pub third: [[[f64; 2]; 2]; 2],
}

pub trait Potential2D: Send + Sync + Debug {
    fn derivatives(&self, x: &Vector<2>) -> PotentialJet;
}

/// `ψ = A exp(-|x - c|² / (2 s²))`
#[derive(Clone, Copy, Debug)]
pub struct GaussianPotential {
    pub amplitude: f64,
    pub center: Vector<2>,
    pub width: f64,
}

impl Potential2D for GaussianPotential {
    fn derivatives(&self, x: &Vector<2>) -> PotentialJet {
        let r = linalg::sub(x, &self.center);
        let s2 = self.width * self.width;
        let g = self.amplitude * (-linalg::dot(&r, &r) / (2.0 * s2)).exp();
        let d = |i: usize, j: usize| if i == j { 1.0 } else { 0.0 };
        PotentialJet {
            value: g,
            grad: std::array::from_fn(|i| -r[i] / s2 * g),
            hess: std::array::from_fn(|i| {
                std::array::from_fn(|j| (r[i] * r[j] / (s2 * s2) - d(i, j) / s2) * g)
            }),
            third: std::array::from_fn(|i| {
                std::array::from_fn(|j| {
                    std::array::from_fn(|k| {
                        ((d(i, j) * r[k] + d(i, k) * r[j] + d(j, k) * r[i]) / (s2 * s2)
                            - r[i] * r[j] * r[k] / (s2 * s2 * s2))
                            * g
                    })
                })
            }),
        }
    }
}

/// `ψ = A sin(k₁ x + p₁) sin(k₂ y + p₂)`, the cellular-flow stream function.
#[derive(Clone, Copy, Debug)]
pub struct SinProductPotential {
    pub amplitude: f64,
    pub wavenumbers: [f64; 2],
    pub phases: [f64; 2],
}

impl Potential2D for SinProductPotential {
    fn derivatives(&self, x: &Vector<2>) -> PotentialJet {
        // Derivatives of sin(k z + p) of order 0..=3.
        let axis = |i: usize| {
            let k = self.wavenumbers[i];
            let (s, c) = (k * x[i] + self.phases[i]).sin_cos();
            [s, k * c, -k * k * s, -k * k * k * c]
        };
        let (fx, fy) = (axis(0), axis(1));
        let a = self.amplitude;
        // order along x and along y for a derivative multi-index
        let term = |nx: usize, ny: usize| a * fx[nx] * fy[ny];
        let count = |idx: &[usize]| {
            let nx = idx.iter().filter(|&&i| i == 0).count();
            (nx, idx.len() - nx)
        };
        PotentialJet {
            value: term(0, 0),
            grad: [term(1, 0), term(0, 1)],
            hess: std::array::from_fn(|i| {
                std::array::from_fn(|j| {
                    let (nx, ny) = count(&[i, j]);
                    term(nx, ny)
                })
            }),
            third: std::array::from_fn(|i| {
                std::array::from_fn(|j| {
                    std::array::from_fn(|k| {
                        let (nx, ny) = count(&[i, j, k]);
                        term(nx, ny)
                    })
                })
            }),
        }
    }
}

/// Divergence-free field `f = ∇^⊥ψ = (-∂₂ψ, ∂₁ψ)` generated by a potential.
#[derive(Clone, Copy, Debug)]
pub struct PerpGradient<P> {
    pub potential: P,
}

impl<P: Potential2D> PerpGradient<P> {
    pub fn new(potential: P) -> Self {
        Self { potential }
    }
}

// (-∂₂, ∂₁): component a is sign[a] * ∂_{src[a]}
const PERP_SRC: [usize; 2] = [1, 0];
const PERP_SIGN: [f64; 2] = [-1.0, 1.0];

impl<P: Potential2D> AnalyticField<2> for PerpGradient<P> {
    fn eval(&self, _t: f64, x: &Vector<2>) -> Vector<2> {
        let p = self.potential.derivatives(x);
        std::array::from_fn(|a| PERP_SIGN[a] * p.grad[PERP_SRC[a]])
    }

    fn jacobian(&self, _t: f64, x: &Vector<2>) -> Matrix<2> {
        let p = self.potential.derivatives(x);
        std::array::from_fn(|a| std::array::from_fn(|i| PERP_SIGN[a] * p.hess[PERP_SRC[a]][i]))
    }

    fn hessian(&self, _t: f64, x: &Vector<2>) -> Tensor3<2> {
        let p = self.potential.derivatives(x);
        std::array::from_fn(|a| {
            std::array::from_fn(|i| std::array::from_fn(|j| PERP_SIGN[a] * p.third[PERP_SRC[a]][i][j]))
        })
    }

    fn eval_with_jacobian(&self, _t: f64, x: &Vector<2>) -> (Vector<2>, Matrix<2>) {
        let p = self.potential.derivatives(x);
        (
            std::array::from_fn(|a| PERP_SIGN[a] * p.grad[PERP_SRC[a]]),
            std::array::from_fn(|a| std::array::from_fn(|i| PERP_SIGN[a] * p.hess[PERP_SRC[a]][i])),
        )
    }

    fn jet(&self, _t: f64, x: &Vector<2>) -> Jet<2> {
        let p = self.potential.derivatives(x);
        Jet {
            value: std::array::from_fn(|a| PERP_SIGN[a] * p.grad[PERP_SRC[a]]),
            jac: std::array::from_fn(|a| std::array::from_fn(|i| PERP_SIGN[a] * p.hess[PERP_SRC[a]][i])),
            hess: std::array::from_fn(|a| {
                std::array::from_fn(|i| std::array::from_fn(|j| PERP_SIGN[a] * p.third[PERP_SRC[a]][i][j]))
            }),
        }
    }
}

/// Divergence-free Gaussian vortex blob `∇^⊥ [A exp(-|x-c|²/(2s²))]`.
pub fn gaussian_stream(amplitude: f64, center: Vector<2>, width: f64) -> PerpGradient<GaussianPotential> {
    PerpGradient::new(GaussianPotential {
        amplitude,
        center,
        width,
    })
}

/// Cellular flow `∇^⊥ [A sin(k₁x) sin(k₂y)]`.
pub fn cellular(amplitude: f64, wavenumbers: [f64; 2]) -> PerpGradient<SinProductPotential> {
    PerpGradient::new(SinProductPotential {
        amplitude,
        wavenumbers,
        phases: [0.0, 0.0],
    })
}

/// `f(x) = a exp(-|x-c|²/(2s²))` with a constant vector amplitude `a`.
#[derive(Clone, Copy, Debug)]
pub struct GaussianBump<const D: usize> {
    pub amplitude: Vector<D>,
    pub center: Vector<D>,
    pub width: f64,
}

impl<const D: usize> GaussianBump<D> {
    fn profile(&self, x: &Vector<D>) -> (f64, Vector<D>) {
        let r = linalg::sub(x, &self.center);
        let g = (-linalg::dot(&r, &r) / (2.0 * self.width * self.width)).exp();
        (g, r)
    }
}

impl<const D: usize> AnalyticField<D> for GaussianBump<D> {
    fn eval(&self, _t: f64, x: &Vector<D>) -> Vector<D> {
        let (g, _) = self.profile(x);
        linalg::scale(g, &self.amplitude)
    }

    fn jacobian(&self, _t: f64, x: &Vector<D>) -> Matrix<D> {
        let (g, r) = self.profile(x);
        let s2 = self.width * self.width;
        std::array::from_fn(|a| std::array::from_fn(|i| -self.amplitude[a] * r[i] / s2 * g))
    }

    fn hessian(&self, _t: f64, x: &Vector<D>) -> Tensor3<D> {
        let (g, r) = self.profile(x);
        let s2 = self.width * self.width;
        std::array::from_fn(|a| {
            std::array::from_fn(|i| {
                std::array::from_fn(|j| {
                    let delta = if i == j { 1.0 } else { 0.0 };
                    self.amplitude[a] * (r[i] * r[j] / (s2 * s2) - delta / s2) * g
                })
            })
        })
    }
}

/// C² quintic step: 1 for `r <= inner`, 0 for `r >= outer`.
/// Returns the value and its first two derivatives in `r`.
pub fn smooth_cutoff(r: f64, inner: f64, outer: f64) -> (f64, f64, f64) {
    if r <= inner {
        return (1.0, 0.0, 0.0);
    }
    if r >= outer {
        return (0.0, 0.0, 0.0);
    }
    let w = outer - inner;
    let s = (r - inner) / w;
    let p = s * s * s * (10.0 - 15.0 * s + 6.0 * s * s);
    let dp = 30.0 * s * s * (1.0 - s) * (1.0 - s);
    let ddp = 60.0 * s * (1.0 - s) * (1.0 - 2.0 * s);
    (1.0 - p, -dp / w, -ddp / (w * w))
}

/// Rough rotational drift `x^⊥ |x|^{-α} χ(|x|)` with a smooth radial cutoff χ.
///
/// For `α = 1.5` the magnitude behaves like `|x|^{-1/2}` near the origin, so
/// the field lies in `L^p` for every `p < 4` but is not Lipschitz. It is
/// divergence free away from the origin; the value at the origin is taken
/// as zero.
#[derive(Clone, Copy, Debug)]
pub struct SingularVortex {
    pub exponent: f64,
    pub cutoff_inner: f64,
    pub cutoff_outer: f64,
}

impl SingularVortex {
    /// `x^⊥ / |x|^{1.5}`, cut off smoothly on `[L/2 − 0.5, L/2]`.
    pub fn example(half_width: f64) -> Self {
        Self {
            exponent: 1.5,
            cutoff_inner: 0.5 * half_width - 0.5,
            cutoff_outer: 0.5 * half_width,
        }
    }

    /// Radial profile `g(r) = r^{-α} χ(r)` and its first two derivatives.
    fn profile(&self, r: f64) -> (f64, f64, f64) {
        let a = self.exponent;
        let (c, dc, ddc) = smooth_cutoff(r, self.cutoff_inner, self.cutoff_outer);
        let p = r.powf(-a);
        let dp = -a * p / r;
        let ddp = a * (a + 1.0) * p / (r * r);
        (p * c, dp * c + p * dc, ddp * c + 2.0 * dp * dc + p * ddc)
    }
}

impl AnalyticField<2> for SingularVortex {
    fn eval(&self, _t: f64, x: &Vector<2>) -> Vector<2> {
        let r = linalg::norm(x);
        if r == 0.0 {
            return [0.0; 2];
        }
        let (g, _, _) = self.profile(r);
        linalg::scale(g, &linalg::perp(x))
    }

    fn jacobian(&self, _t: f64, x: &Vector<2>) -> Matrix<2> {
        let r = linalg::norm(x);
        if r == 0.0 {
            return [[0.0; 2]; 2];
        }
        let (g, dg, _) = self.profile(r);
        let xp = linalg::perp(x);
        // ∂_i (x^⊥)^a = P[a][i] with P = [[0,-1],[1,0]]
        let pm = [[0.0, -1.0], [1.0, 0.0]];
        std::array::from_fn(|a| std::array::from_fn(|i| pm[a][i] * g + xp[a] * dg * x[i] / r))
    }

    fn hessian(&self, _t: f64, x: &Vector<2>) -> Tensor3<2> {
        let r = linalg::norm(x);
        if r == 0.0 {
            return [[[0.0; 2]; 2]; 2];
        }
        let (_, dg, ddg) = self.profile(r);
        let xp = linalg::perp(x);
        let pm = [[0.0, -1.0], [1.0, 0.0]];
        std::array::from_fn(|a| {
            std::array::from_fn(|i| {
                std::array::from_fn(|j| {
                    let delta = if i == j { 1.0 } else { 0.0 };
                    let d_radial = ddg * x[i] * x[j] / (r * r) + dg * (delta / r - x[i] * x[j] / (r * r * r));
                    pm[a][i] * dg * x[j] / r + pm[a][j] * dg * x[i] / r + xp[a] * d_radial
                })
            })
        })
    }
}

/// Pointwise sum of fields.
#[derive(Clone, Debug, Default)]
pub struct FieldSum<const D: usize> {
    pub terms: Vec<SharedField<D>>,
}

impl<const D: usize> FieldSum<D> {
    pub fn new(terms: Vec<SharedField<D>>) -> Self {
        Self { terms }
    }
}

impl<const D: usize> AnalyticField<D> for FieldSum<D> {
    fn eval(&self, t: f64, x: &Vector<D>) -> Vector<D> {
        let mut v = linalg::zeros();
        for f in &self.terms {
            linalg::axpy(&mut v, 1.0, &f.eval(t, x));
        }
        v
    }
    fn jacobian(&self, t: f64, x: &Vector<D>) -> Matrix<D> {
        let mut m = linalg::zero_matrix();
        for f in &self.terms {
            linalg::mat_add_scaled(&mut m, 1.0, &f.jacobian(t, x));
        }
        m
    }
    fn hessian(&self, t: f64, x: &Vector<D>) -> Tensor3<D> {
        let mut h = linalg::zero_tensor::<D>();
        for f in &self.terms {
            let hf = f.hessian(t, x);
            for a in 0..D {
                linalg::mat_add_scaled(&mut h[a], 1.0, &hf[a]);
            }
        }
        h
    }
    fn is_constant(&self) -> bool {
        self.terms.iter().all(|f| f.is_constant())
    }
}

/// `s · f`
#[derive(Clone, Debug)]
pub struct Scaled<const D: usize> {
    pub factor: f64,
    pub field: SharedField<D>,
}

impl<const D: usize> AnalyticField<D> for Scaled<D> {
    fn eval(&self, t: f64, x: &Vector<D>) -> Vector<D> {
        linalg::scale(self.factor, &self.field.eval(t, x))
    }
    fn jacobian(&self, t: f64, x: &Vector<D>) -> Matrix<D> {
        let mut m = linalg::zero_matrix();
        linalg::mat_add_scaled(&mut m, self.factor, &self.field.jacobian(t, x));
        m
    }
    fn hessian(&self, t: f64, x: &Vector<D>) -> Tensor3<D> {
        let h = self.field.hessian(t, x);
        std::array::from_fn(|a| {
            std::array::from_fn(|i| std::array::from_fn(|j| self.factor * h[a][i][j]))
        })
    }
    fn is_constant(&self) -> bool {
        self.field.is_constant()
    }
}

/// Cellular flow `∇^⊥ ψ` with `ψ = A sin(k₁x¹ + φ₁) sin(k₂x² + φ₂)` acting in
/// the first two coordinates; remaining components vanish.
#[derive(Clone, Copy, Debug)]
pub struct Cellular<const D: usize> {
    pub amplitude: f64,
    pub wavenumbers: [f64; 2],
    pub phases: [f64; 2],
}

impl<const D: usize> Cellular<D> {
    pub fn new(amplitude: f64, wavenumbers: [f64; 2]) -> Self {
        assert!(D >= 2);
        Self {
            amplitude,
            wavenumbers,
            phases: [0.0, 0.0],
        }
    }

    #[inline]
    fn trig(&self, x: &Vector<D>) -> (f64, f64, f64, f64) {
        let (s1, c1) = (self.wavenumbers[0] * x[0] + self.phases[0]).sin_cos();
        let (s2, c2) = (self.wavenumbers[1] * x[1] + self.phases[1]).sin_cos();
        (s1, c1, s2, c2)
    }
}

impl<const D: usize> AnalyticField<D> for Cellular<D> {
    fn eval(&self, _t: f64, x: &Vector<D>) -> Vector<D> {
        let (s1, c1, s2, c2) = self.trig(x);
        let [k1, k2] = self.wavenumbers;
        let a = self.amplitude;
        let mut v = linalg::zeros();
        v[0] = -a * k2 * s1 * c2;
        v[1] = a * k1 * c1 * s2;
        v
    }

    fn jacobian(&self, t: f64, x: &Vector<D>) -> Matrix<D> {
        self.eval_with_jacobian(t, x).1
    }

    fn eval_with_jacobian(&self, _t: f64, x: &Vector<D>) -> (Vector<D>, Matrix<D>) {
        let (s1, c1, s2, c2) = self.trig(x);
        let [k1, k2] = self.wavenumbers;
        let a = self.amplitude;
        let mut v = linalg::zeros();
        let mut j = linalg::zero_matrix();
        v[0] = -a * k2 * s1 * c2;
        v[1] = a * k1 * c1 * s2;
        j[0][0] = -a * k1 * k2 * c1 * c2;
        j[0][1] = a * k2 * k2 * s1 * s2;
        j[1][0] = -a * k1 * k1 * s1 * s2;
        j[1][1] = a * k1 * k2 * c1 * c2;
        (v, j)
    }

    fn hessian(&self, _t: f64, x: &Vector<D>) -> Tensor3<D> {
        let (s1, c1, s2, c2) = self.trig(x);
        let [k1, k2] = self.wavenumbers;
        let a = self.amplitude;
        let mut h = linalg::zero_tensor();
        h[0][0][0] = a * k1 * k1 * k2 * s1 * c2;
        h[0][0][1] = a * k1 * k2 * k2 * c1 * s2;
        h[0][1][0] = h[0][0][1];
        h[0][1][1] = a * k2 * k2 * k2 * s1 * c2;
        h[1][0][0] = -a * k1 * k1 * k1 * c1 * s2;
        h[1][0][1] = -a * k1 * k1 * k2 * s1 * c2;
        h[1][1][0] = h[1][0][1];
        h[1][1][1] = -a * k1 * k2 * k2 * c1 * s2;
        h
    }
}
