use crate::error::{Error, Result};
use crate::fields::{AnalyticField, GridField, Jet};
use crate::linalg::{self, Matrix, Vector};

/// `[A,B] = A·∇B − B·∇A` from values and Jacobians.
#[inline]
pub fn bracket<const D: usize>(a: &Vector<D>, ja: &Matrix<D>, b: &Vector<D>, jb: &Matrix<D>) -> Vector<D> {
    linalg::sub(&linalg::mat_vec(jb, a), &linalg::mat_vec(ja, b))
}

/// Value and Jacobian of `[A,B]`; needs both Hessians.
pub fn bracket_jet<const D: usize>(a: &Jet<D>, b: &Jet<D>) -> (Vector<D>, Matrix<D>) {
    let value = bracket(&a.value, &a.jac, &b.value, &b.jac);
    let mut jac = linalg::zero_matrix();
    for al in 0..D {
        for j in 0..D {
            let mut s = 0.0;
            for i in 0..D {
                s += a.jac[i][j] * b.jac[al][i] + a.value[i] * b.hess[al][i][j]
                    - b.jac[i][j] * a.jac[al][i]
                    - b.value[i] * a.hess[al][i][j];
            }
            jac[al][j] = s;
        }
    }
    (value, jac)
}

pub fn lie_bracket<const D: usize>(
    a: &dyn AnalyticField<D>,
    b: &dyn AnalyticField<D>,
    t: f64,
    x: &Vector<D>,
) -> Vector<D> {
    let (va, ja) = a.eval_with_jacobian(t, x);
    let (vb, jb) = b.eval_with_jacobian(t, x);
    bracket(&va, &ja, &vb, &jb)
}

/// Grid bracket with central differences.
pub fn lie_bracket_grid<const D: usize>(a: &GridField<D>, b: &GridField<D>) -> Result<GridField<D>> {
    for f in [a, b] {
        if f.ncomp != D {
            return Err(Error::DimensionMismatch { expected: D, got: f.ncomp });
        }
    }
    if a.grid != b.grid {
        return Err(Error::DimensionMismatch {
            expected: a.grid.len(),
            got: b.grid.len(),
        });
    }
    let mut out = GridField::zeros(a.grid, D);
    for node in 0..a.grid.len() {
        let (va, vb) = (a.vector(node), b.vector(node));
        let o = out.node_mut(node);
        for al in 0..D {
            o[al] = (0..D).map(|i| va[i] * b.d1(node, al, i) - vb[i] * a.d1(node, al, i)).sum();
        }
    }
    Ok(out)
}

/// `E_σ φ = (σ·∇)φ + (∇σ)^T φ`, the field with `⟨[σ,B], φ⟩ = −⟨B, E_σ φ⟩`
/// for divergence-free `σ`.
#[inline]
pub fn transport_adjoint<const D: usize>(s: &Vector<D>, js: &Matrix<D>, p: &Vector<D>, jp: &Matrix<D>) -> Vector<D> {
    std::array::from_fn(|i| (0..D).map(|j| s[j] * jp[i][j] + js[j][i] * p[j]).sum())
}

/// Value and Jacobian of `E_σ φ`.
pub fn transport_adjoint_jet<const D: usize>(s: &Jet<D>, p: &Jet<D>) -> (Vector<D>, Matrix<D>) {
    let value = transport_adjoint(&s.value, &s.jac, &p.value, &p.jac);
    let mut jac = linalg::zero_matrix();
    for i in 0..D {
        for l in 0..D {
            jac[i][l] = (0..D)
                .map(|j| {
                    s.jac[j][l] * p.jac[i][j]
                        + s.value[j] * p.hess[i][j][l]
                        + s.hess[j][i][l] * p.value[j]
                        + s.jac[j][i] * p.jac[j][l]
                })
                .sum();
        }
    }
    (value, jac)
}

/// `D_σ φ = (σ·∇)φ − (∇φ)^T σ`. Differs from `E_σ φ` by the gradient
/// `∇(σ·φ)`, so both give the same pairing against divergence-free fields.
#[inline]
pub fn weak_transport<const D: usize>(s: &Vector<D>, jp: &Matrix<D>) -> Vector<D> {
    std::array::from_fn(|i| (0..D).map(|j| s[j] * jp[i][j] - jp[j][i] * s[j]).sum())
}

/// Value and Jacobian of `D_σ φ`.
pub fn weak_transport_jet<const D: usize>(s: &Jet<D>, p: &Jet<D>) -> (Vector<D>, Matrix<D>) {
    let value = weak_transport(&s.value, &p.jac);
    let mut jac = linalg::zero_matrix();
    for i in 0..D {
        for l in 0..D {
            jac[i][l] = (0..D)
                .map(|j| {
                    s.jac[j][l] * p.jac[i][j] + s.value[j] * p.hess[i][j][l]
                        - p.hess[j][i][l] * s.value[j]
                        - p.jac[j][i] * s.jac[j][l]
                })
                .sum();
        }
    }
    (value, jac)
}
