use crate::error::{Error, Result};
use crate::fields::{AnalyticField, Grid};
use crate::linalg::{self, Matrix, Vector};
use crate::noise::{BrownianPath, NoiseBasis};

/// The characteristics `dX = v(t,X) dt + Σ_k σ_k(X) ∘ dW^k`, integrated with
/// the Stratonovich Heun predictor-corrector.
#[derive(Clone, Copy, Debug)]
pub struct Characteristics<'a, const D: usize> {
    pub drift: &'a dyn AnalyticField<D>,
    pub basis: &'a NoiseBasis<D>,
    /// Periodic box; positions are wrapped into it after every step.
    /// `None` integrates on the whole space.
    pub torus: Option<Grid<D>>,
}

/// Position and Jacobian `DΦ` of one particle.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct FlowPoint<const D: usize> {
    pub x: Vector<D>,
    pub jac: Matrix<D>,
}

/// Result of the time-reversed integration: `y ≈ Ψ_t(x)`, the Jacobian of
/// the forward flow at `y`, and the round-trip residual `|Φ_t(y) − x|`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct InversePoint<const D: usize> {
    pub y: Vector<D>,
    pub jac: Matrix<D>,
    pub residual: f64,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
enum Direction {
    Forward,
    Backward,
}

impl<'a, const D: usize> Characteristics<'a, D> {
    pub fn new(drift: &'a dyn AnalyticField<D>, basis: &'a NoiseBasis<D>, torus: Option<Grid<D>>) -> Self {
        Self { drift, basis, torus }
    }

    /// True when both `v` and every `σ_k` are constant, so the flow is a
    /// uniform translation with `DΦ = Id`.
    pub fn is_translation(&self) -> bool {
        self.drift.is_constant() && self.basis.is_constant()
    }

    fn velocity(&self, t: f64, x: &Vector<D>, dt: f64, dw: &[f64], sign: f64) -> Vector<D> {
        let mut out = linalg::scale(sign * dt, &self.drift.eval(t, x));
        for (m, &w) in self.basis.modes.iter().zip(dw) {
            linalg::axpy(&mut out, sign * w, &m.eval(0.0, x));
        }
        out
    }

    fn velocity_with_jacobian(&self, t: f64, x: &Vector<D>, dt: f64, dw: &[f64], sign: f64) -> (Vector<D>, Matrix<D>) {
        let (v, dv) = self.drift.eval_with_jacobian(t, x);
        let mut out = linalg::scale(sign * dt, &v);
        let mut jac = linalg::zero_matrix();
        linalg::mat_add_scaled(&mut jac, sign * dt, &dv);
        for (m, &w) in self.basis.modes.iter().zip(dw) {
            let (s, ds) = m.eval_with_jacobian(0.0, x);
            linalg::axpy(&mut out, sign * w, &s);
            linalg::mat_add_scaled(&mut jac, sign * w, &ds);
        }
        (out, jac)
    }

    fn finish(&self, x: Vector<D>, step: usize) -> Result<Vector<D>> {
        let radius = x.iter().fold(0.0_f64, |m, v| m.max(v.abs()));
        match self.torus {
            Some(g) => {
                if !(radius <= 2.0 * g.half_width) {
                    return Err(Error::BlowUp { step, radius });
                }
                Ok(g.wrap(&x))
            }
            None => {
                if !radius.is_finite() {
                    return Err(Error::BlowUp { step, radius });
                }
                Ok(x)
            }
        }
    }

    /// One Heun step over `[t_j, t_{j+1}]` (or back across it).
    fn step(&self, x: &Vector<D>, j: usize, path: &BrownianPath, dir: Direction) -> Vector<D> {
        let dt = path.dt;
        let dw = path.increment(j);
        let (t0, t1, sign) = match dir {
            Direction::Forward => (j as f64 * dt, (j + 1) as f64 * dt, 1.0),
            Direction::Backward => ((j + 1) as f64 * dt, j as f64 * dt, -1.0),
        };
        let k1 = self.velocity(t0, x, dt, dw, sign);
        let pred = linalg::add(x, &k1);
        let k2 = self.velocity(t1, &pred, dt, dw, sign);
        std::array::from_fn(|a| x[a] + 0.5 * (k1[a] + k2[a]))
    }

    /// Heun step of the augmented system `(X, J)`.
    fn step_with_jacobian(&self, p: &FlowPoint<D>, j: usize, path: &BrownianPath) -> FlowPoint<D> {
        let dt = path.dt;
        let dw = path.increment(j);
        let (t0, t1) = (j as f64 * dt, (j + 1) as f64 * dt);
        let (k1, a1) = self.velocity_with_jacobian(t0, &p.x, dt, dw, 1.0);
        let pred = linalg::add(&p.x, &k1);
        let l1 = linalg::mat_mul(&a1, &p.jac);
        let mut jpred = p.jac;
        linalg::mat_add_scaled(&mut jpred, 1.0, &l1);
        let (k2, a2) = self.velocity_with_jacobian(t1, &pred, dt, dw, 1.0);
        let l2 = linalg::mat_mul(&a2, &jpred);
        let mut jac = p.jac;
        linalg::mat_add_scaled(&mut jac, 0.5, &l1);
        linalg::mat_add_scaled(&mut jac, 0.5, &l2);
        FlowPoint {
            x: std::array::from_fn(|a| p.x[a] + 0.5 * (k1[a] + k2[a])),
            jac,
        }
    }

    /// Positions `X_{t_0}, ..., X_{t_N}` of one particle.
    pub fn integrate_forward(&self, x0: &Vector<D>, path: &BrownianPath) -> Result<Vec<Vector<D>>> {
        let mut traj = Vec::with_capacity(path.steps() + 1);
        traj.push(*x0);
        let mut x = *x0;
        for j in 0..path.steps() {
            x = self.finish(self.step(&x, j, path, Direction::Forward), j)?;
            traj.push(x);
        }
        Ok(traj)
    }

    /// `J(t_j) = DΦ_{t_j}` along a stored trajectory, from the variational
    /// equation `dJ = Dv J dt + Σ Dσ_k J ∘ dW^k`.
    pub fn integrate_jacobian(&self, trajectory: &[Vector<D>], path: &BrownianPath) -> Vec<Matrix<D>> {
        assert_eq!(trajectory.len(), path.steps() + 1);
        let mut out = Vec::with_capacity(trajectory.len());
        let mut jac = linalg::identity::<D>();
        out.push(jac);
        for j in 0..path.steps() {
            let p = self.step_with_jacobian(&FlowPoint { x: trajectory[j], jac }, j, path);
            jac = p.jac;
            out.push(jac);
        }
        out
    }

    /// `Φ_t(x0)` and `DΦ_t(x0)` at the end of `path`.
    pub fn flow(&self, x0: &Vector<D>, path: &BrownianPath) -> Result<FlowPoint<D>> {
        let mut p = FlowPoint {
            x: *x0,
            jac: linalg::identity(),
        };
        let translation = self.is_translation();
        for j in 0..path.steps() {
            if translation {
                p.x = self.step(&p.x, j, path, Direction::Forward);
            } else {
                p = self.step_with_jacobian(&p, j, path);
            }
            p.x = self.finish(p.x, j)?;
        }
        Ok(p)
    }

    /// Runs the characteristics backwards from `x` with the increments in
    /// reverse order and negated, then certifies the result by integrating
    /// forward again from it.
    pub fn integrate_inverse(&self, x: &Vector<D>, path: &BrownianPath) -> Result<InversePoint<D>> {
        let mut y = *x;
        for j in (0..path.steps()).rev() {
            y = self.finish(self.step(&y, j, path, Direction::Backward), j)?;
        }
        let fwd = self.flow(&y, path)?;
        let diff = match self.torus {
            Some(g) => g.periodic_difference(&fwd.x, x),
            None => linalg::sub(&fwd.x, x),
        };
        Ok(InversePoint {
            y,
            jac: fwd.jac,
            residual: linalg::norm(&diff),
        })
    }

    /// Like [`Self::integrate_inverse`] but fails when the certificate exceeds `tol`.
    pub fn integrate_inverse_checked(&self, x: &Vector<D>, path: &BrownianPath, tol: f64) -> Result<InversePoint<D>> {
        let inv = self.integrate_inverse(x, path)?;
        if inv.residual > tol {
            return Err(Error::InverseToleranceExceeded {
                residual: inv.residual,
                tol,
            });
        }
        Ok(inv)
    }

    /// Unwrapped displacement of the translation flow; only meaningful when
    /// [`Self::is_translation`] holds.
    pub fn translation(&self, path: &BrownianPath) -> Vector<D> {
        let mut x = linalg::zeros::<D>();
        for j in 0..path.steps() {
            x = self.step(&x, j, path, Direction::Forward);
        }
        x
    }
}
