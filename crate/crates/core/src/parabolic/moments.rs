//! The second-moment system for `u^{αβ} = E[B^α B^β]`:
//!
//! ```text
//! ∂_t u + T_v u = ½ Σ_k T_k T_k u,
//! T_A u^{αβ} = A·∇u^{αβ} − Σ_i u^{βi} ∂_i A^α − Σ_i u^{αi} ∂_i A^β
//! ```
//!
//! with the right-hand side expanded as
//!
//! ```text
//! ½ Q^{ij} ∂_i∂_j u^{αβ} − θ·∇u^{αβ} + Σ_i θ_i^α·∇u^{βi} + Σ_i θ_i^β·∇u^{αi}
//!   + Σ_i η_i^α u^{βi} + Σ_i η_i^β u^{αi} + Σ_ij η_ij^{αβ} u^{ij}
//! ```
//!
//! Only the components `α ≤ β` are stored.

use super::stepper::{evolve, stable_step, Evolution, NodeDrift, ParabolicState};
use crate::error::{Error, Result};
use crate::fields::{AnalyticField, Grid, GridField};
use crate::linalg::{self, Matrix, Vector};
use crate::noise::NoiseBasis;

/// Number of stored components of a symmetric `D×D` field.
pub const fn sym_len(d: usize) -> usize {
    d * (d + 1) / 2
}

/// Storage slot of `u^{αβ}`.
#[inline]
pub fn sym_index<const D: usize>(a: usize, b: usize) -> usize {
    let (i, j) = if a <= b { (a, b) } else { (b, a) };
    i * (2 * D - i + 1) / 2 + (j - i)
}

pub type Tensor4<const D: usize> = [[[[f64; D]; D]; D]; D];

/// The coefficient families of the expanded moment operator at one point.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct MomentCoefficients<const D: usize> {
    /// `a = ½ Q(x,x)`
    pub a: Matrix<D>,
    /// `θ^l = −½ Σ_k σ_k·∇σ_k^l`
    pub theta: Vector<D>,
    /// `theta_i[i][α][l] = −Σ_k σ_k^l ∂_i σ_k^α`
    pub theta_i: [[Vector<D>; D]; D],
    /// `eta_i[i][α] = ½ Σ_k [−(σ_k·∇)∂_i σ_k^α + Σ_j ∂_i σ_k^j ∂_j σ_k^α]`
    pub eta_i: Matrix<D>,
    /// `eta[i][j][α][β] = Σ_k ∂_i σ_k^α ∂_j σ_k^β`
    pub eta: Tensor4<D>,
}

impl<const D: usize> MomentCoefficients<D> {
    pub fn at(basis: &NoiseBasis<D>, x: &Vector<D>) -> Self {
        let mut c = Self {
            a: linalg::zero_matrix(),
            theta: linalg::zeros(),
            theta_i: [[linalg::zeros(); D]; D],
            eta_i: linalg::zero_matrix(),
            eta: [[[[0.0; D]; D]; D]; D],
        };
        for s in basis.jets(x) {
            let (v, j, h) = (&s.value, &s.jac, &s.hess);
            for l in 0..D {
                for m in 0..D {
                    c.a[l][m] += 0.5 * v[l] * v[m];
                }
                c.theta[l] -= 0.5 * (0..D).map(|m| v[m] * j[l][m]).sum::<f64>();
            }
            for i in 0..D {
                for al in 0..D {
                    for l in 0..D {
                        c.theta_i[i][al][l] -= v[l] * j[al][i];
                    }
                    let transport: f64 = (0..D).map(|m| v[m] * h[al][i][m]).sum();
                    let product: f64 = (0..D).map(|jj| j[jj][i] * j[al][jj]).sum();
                    c.eta_i[i][al] += 0.5 * (product - transport);
                    for jj in 0..D {
                        for be in 0..D {
                            c.eta[i][jj][al][be] += j[al][i] * j[be][jj];
                        }
                    }
                }
            }
        }
        c
    }

    /// The expanded right-hand side for a full symmetric `u` with gradient
    /// `du[α][β][l]` and Hessian `ddu[α][β][l][m]`.
    pub fn apply(&self, u: &Matrix<D>, du: &[[Vector<D>; D]; D], ddu: &Tensor4<D>) -> Matrix<D> {
        std::array::from_fn(|al| {
            std::array::from_fn(|be| {
                let mut s = 0.0;
                for l in 0..D {
                    for m in 0..D {
                        s += self.a[l][m] * ddu[al][be][l][m];
                    }
                    s -= self.theta[l] * du[al][be][l];
                }
                for i in 0..D {
                    s += linalg::dot(&self.theta_i[i][al], &du[be][i]) + linalg::dot(&self.theta_i[i][be], &du[al][i]);
                    s += self.eta_i[i][al] * u[be][i] + self.eta_i[i][be] * u[al][i];
                    for j in 0..D {
                        s += self.eta[i][j][al][be] * u[i][j];
                    }
                }
                s
            })
        })
    }
}

/// `T_A u` for a full symmetric `u`.
pub fn moment_transport<const D: usize>(
    a: &Vector<D>,
    ja: &Matrix<D>,
    u: &Matrix<D>,
    du: &[[Vector<D>; D]; D],
) -> Matrix<D> {
    std::array::from_fn(|al| {
        std::array::from_fn(|be| {
            let mut s = linalg::dot(a, &du[al][be]);
            for i in 0..D {
                s -= u[be][i] * ja[al][i] + u[al][i] * ja[be][i];
            }
            s
        })
    })
}

/// Expands stored symmetric components at one node into the full matrix.
pub fn unpack<const D: usize>(u: &GridField<D>, node: usize) -> Matrix<D> {
    std::array::from_fn(|a| std::array::from_fn(|b| u.get(node, sym_index::<D>(a, b))))
}

/// Packs a symmetric field given as the full `D×D` matrix per node.
pub fn pack<const D: usize>(grid: Grid<D>, f: impl Fn(usize) -> Matrix<D>) -> GridField<D> {
    let mut out = GridField::zeros(grid, sym_len(D));
    for node in 0..grid.len() {
        let m = f(node);
        let o = out.node_mut(node);
        for a in 0..D {
            for b in a..D {
                o[sym_index::<D>(a, b)] = m[a][b];
            }
        }
    }
    out
}

/// Outer products `b^α b^β` of a vector field, in symmetric storage.
pub fn outer_square<const D: usize>(b: &GridField<D>) -> GridField<D> {
    pack(b.grid, |node| {
        let v = b.vector(node);
        std::array::from_fn(|a| std::array::from_fn(|c| v[a] * v[c]))
    })
}

#[derive(Clone, Debug)]
pub struct MomentProblem<const D: usize> {
    pub grid: Grid<D>,
    pub coeffs: Vec<MomentCoefficients<D>>,
    pub drift: NodeDrift<D>,
}

impl<const D: usize> MomentProblem<D> {
    pub fn new(basis: &NoiseBasis<D>, drift: &dyn AnalyticField<D>, grid: Grid<D>) -> Self {
        Self {
            grid,
            coeffs: (0..grid.len()).map(|i| MomentCoefficients::at(basis, &grid.coords(i))).collect(),
            drift: NodeDrift::sample(drift, grid, 0.0),
        }
    }

    pub fn solve(
        &self,
        u0: GridField<D>,
        horizon: f64,
        dt_max: Option<f64>,
        checkpoints: &[f64],
    ) -> Result<(ParabolicState<D>, Vec<(f64, GridField<D>)>)> {
        if u0.ncomp != sym_len(D) {
            return Err(Error::DimensionMismatch {
                expected: sym_len(D),
                got: u0.ncomp,
            });
        }
        let mut state = ParabolicState::new(u0);
        let snaps = evolve(self, &mut state, horizon, dt_max, checkpoints)?;
        Ok((state, snaps))
    }
}

impl<const D: usize> Evolution<D> for MomentProblem<D> {
    fn grid(&self) -> Grid<D> {
        self.grid
    }

    fn switch_times(&self, _horizon: f64) -> Vec<f64> {
        Vec::new()
    }

    fn rhs(&self, _piece_start: f64, u: &GridField<D>) -> GridField<D> {
        pack(self.grid, |node| {
            let mut du = [[linalg::zeros(); D]; D];
            let mut ddu = [[[[0.0; D]; D]; D]; D];
            for a in 0..D {
                for b in a..D {
                    let c = sym_index::<D>(a, b);
                    for l in 0..D {
                        du[a][b][l] = u.d1(node, c, l);
                        for m in l..D {
                            let v = u.d2(node, c, l, m);
                            ddu[a][b][l][m] = v;
                            ddu[a][b][m][l] = v;
                        }
                    }
                    du[b][a] = du[a][b];
                    ddu[b][a] = ddu[a][b];
                }
            }
            let full = unpack(u, node);
            let mut out = self.coeffs[node].apply(&full, &du, &ddu);
            let tv = moment_transport(&self.drift.values[node], &self.drift.jac[node], &full, &du);
            for a in 0..D {
                for b in 0..D {
                    out[a][b] -= tv[a][b];
                }
            }
            out
        })
    }

    fn stable_dt(&self, _piece_start: f64) -> f64 {
        let max_a = self
            .coeffs
            .iter()
            .map(|c| linalg::symmetric_eigenvalues(&c.a).last().copied().unwrap_or(0.0))
            .fold(0.0, f64::max);
        let speed = self
            .coeffs
            .iter()
            .zip(&self.drift.values)
            .map(|(c, v)| {
                let mut s = linalg::norm(&linalg::sub(v, &c.theta));
                for i in 0..D {
                    for al in 0..D {
                        s = s.max(linalg::norm(&c.theta_i[i][al]));
                    }
                }
                s
            })
            .fold(0.0, f64::max);
        let rate = self
            .coeffs
            .iter()
            .map(|c| {
                let e: f64 = c.eta.iter().flatten().flatten().flatten().map(|x| x.abs()).sum();
                e + 2.0 * linalg::max_abs(&c.eta_i)
            })
            .fold(0.0, f64::max)
            + 2.0 * self.drift.max_rate();
        let dt = stable_step(self.grid, max_a, speed);
        if rate > 0.0 {
            dt.min(1.0 / rate)
        } else {
            dt
        }
    }
}
