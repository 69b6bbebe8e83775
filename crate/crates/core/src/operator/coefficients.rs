use rayon::prelude::*;

use super::bracket::{bracket, bracket_jet, transport_adjoint, transport_adjoint_jet};
use crate::fields::{Grid, GridField, Jet};
use crate::linalg::{self, Matrix, Tensor3, Vector};
use crate::noise::NoiseBasis;

/// `𝓛B = ½ Σ_k [σ_k, [σ_k, B]]` evaluated directly from the nested brackets.
pub fn apply_l_by_brackets<const D: usize>(basis: &NoiseBasis<D>, x: &Vector<D>, b: &Jet<D>) -> Vector<D> {
    let mut out = linalg::zeros();
    for s in basis.jets(x) {
        let (c, jc) = bracket_jet(&s, b);
        linalg::axpy(&mut out, 0.5, &bracket(&s.value, &s.jac, &c, &jc));
    }
    out
}

/// `𝓛*φ = ½ Σ_k E_k E_k φ` with `E_k φ = (σ_k·∇)φ + (∇σ_k)^T φ`.
pub fn apply_l_adjoint_by_transport<const D: usize>(basis: &NoiseBasis<D>, x: &Vector<D>, phi: &Jet<D>) -> Vector<D> {
    let mut out = linalg::zeros();
    for s in basis.jets(x) {
        let (e, je) = transport_adjoint_jet(&s, phi);
        linalg::axpy(&mut out, 0.5, &transport_adjoint(&s.value, &s.jac, &e, &je));
    }
    out
}

/// Coefficients of `𝓛` at one point, with the derivatives the adjoint needs.
///
/// `(𝓛B)^α = Σ a_ij ∂_i∂_j B^α + Σ b[i][α][β] ∂_i B^β + Σ c[α][β] B^β`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct CoefficientJet<const D: usize> {
    pub a: Matrix<D>,
    pub b: Tensor3<D>,
    pub c: Matrix<D>,
    /// `Σ_i ∂_i a_ij`
    pub div_a: Vector<D>,
    /// `Σ_ij ∂_i ∂_j a_ij`
    pub ddiv_a: f64,
    /// `Σ_i ∂_i b[i][α][β]`
    pub div_b: Matrix<D>,
}

impl<const D: usize> CoefficientJet<D> {
    pub fn apply(&self, u: &Jet<D>) -> Vector<D> {
        std::array::from_fn(|al| {
            let mut s = 0.0;
            for i in 0..D {
                for j in 0..D {
                    s += self.a[i][j] * u.hess[al][i][j];
                }
                for be in 0..D {
                    s += self.b[i][al][be] * u.jac[be][i];
                }
            }
            for be in 0..D {
                s += self.c[al][be] * u.value[be];
            }
            s
        })
    }

    /// `(𝓛*φ)^β = Σ ∂_i∂_j(a_ij φ^β) − Σ ∂_i(b[i][α][β] φ^α) + Σ c[α][β] φ^α`
    pub fn apply_adjoint(&self, p: &Jet<D>) -> Vector<D> {
        std::array::from_fn(|be| {
            let mut s = self.ddiv_a * p.value[be];
            for j in 0..D {
                s += 2.0 * self.div_a[j] * p.jac[be][j];
                for i in 0..D {
                    s += self.a[i][j] * p.hess[be][i][j];
                }
            }
            for al in 0..D {
                s -= self.div_b[al][be] * p.value[al];
                for i in 0..D {
                    s -= self.b[i][al][be] * p.jac[al][i];
                }
                s += self.c[al][be] * p.value[al];
            }
            s
        })
    }
}

/// Assembles the coefficients of `𝓛` from the covariance of a basis.
#[derive(Clone, Debug)]
pub struct OperatorCoefficients<const D: usize> {
    pub basis: NoiseBasis<D>,
}

impl<const D: usize> OperatorCoefficients<D> {
    pub fn new(basis: NoiseBasis<D>) -> Self {
        Self { basis }
    }

    pub fn at(&self, x: &Vector<D>) -> CoefficientJet<D> {
        let q = self.basis.covariance_jet(x, x);
        let mut out = CoefficientJet {
            a: linalg::zero_matrix(),
            b: linalg::zero_tensor(),
            c: linalg::zero_matrix(),
            div_a: linalg::zeros(),
            ddiv_a: 0.0,
            div_b: linalg::zero_matrix(),
        };
        for i in 0..D {
            for j in 0..D {
                out.a[i][j] = 0.5 * q.q[i][j];
                // x ↦ Q(x,x) differentiates as ∂^{(1)} + ∂^{(2)}
                out.div_a[j] += 0.5 * (q.d1[i][i][j] + q.d2[i][i][j]);
                out.ddiv_a +=
                    0.5 * (q.d1d1[i][j][i][j] + q.d1d2[i][j][i][j] + q.d1d2[j][i][i][j] + q.d2d2[i][j][i][j]);
            }
        }
        let trace_d2 = |i: usize| (0..D).map(|g| q.d2[g][g][i]).sum::<f64>();
        let div_trace_d2: f64 = (0..D)
            .map(|i| (0..D).map(|g| q.d1d2[i][g][g][i] + q.d2d2[i][g][g][i]).sum::<f64>())
            .sum();
        for al in 0..D {
            for be in 0..D {
                let delta = if al == be { 1.0 } else { 0.0 };
                for i in 0..D {
                    out.b[i][al][be] = 0.5 * trace_d2(i) * delta - q.d2[be][i][al];
                    out.div_b[al][be] -= q.d1d2[i][be][i][al] + q.d2d2[i][be][i][al];
                }
                out.div_b[al][be] += 0.5 * div_trace_d2 * delta;
                out.c[al][be] = (0..D)
                    .map(|g| 0.5 * q.d1d2[be][g][g][al] - 0.5 * q.d2d2[g][be][g][al])
                    .sum();
            }
        }
        out
    }

    pub fn apply(&self, x: &Vector<D>, u: &Jet<D>) -> Vector<D> {
        self.at(x).apply(u)
    }

    pub fn apply_adjoint(&self, x: &Vector<D>, p: &Jet<D>) -> Vector<D> {
        self.at(x).apply_adjoint(p)
    }

    pub fn on_grid(&self, grid: Grid<D>) -> GridCoefficients<D> {
        let nodes = (0..grid.len()).into_par_iter().map(|i| self.at(&grid.coords(i))).collect();
        GridCoefficients { grid, nodes }
    }
}

/// Coefficients sampled at grid nodes, applied with central differences.
#[derive(Clone, Debug)]
pub struct GridCoefficients<const D: usize> {
    pub grid: Grid<D>,
    pub nodes: Vec<CoefficientJet<D>>,
}

impl<const D: usize> GridCoefficients<D> {
    /// Largest spectral radius of `a` over the grid.
    pub fn max_diffusivity(&self) -> f64 {
        self.nodes
            .iter()
            .map(|c| linalg::symmetric_eigenvalues(&c.a).last().copied().unwrap_or(0.0))
            .fold(0.0, f64::max)
    }

    pub fn apply(&self, u: &GridField<D>) -> GridField<D> {
        assert_eq!(u.grid, self.grid);
        assert_eq!(u.ncomp, D);
        let mut out = GridField::zeros(self.grid, D);
        out.data
            .par_chunks_mut(D)
            .enumerate()
            .for_each(|(node, o)| self.apply_at(u, node, o));
        out
    }

    #[inline]
    fn apply_at(&self, u: &GridField<D>, node: usize, o: &mut [f64]) {
        let cf = &self.nodes[node];
        let mut jac = [[0.0; D]; D];
        for be in 0..D {
            for i in 0..D {
                jac[be][i] = u.d1(node, be, i);
            }
        }
        for al in 0..D {
            let mut s = 0.0;
            for i in 0..D {
                for j in i..D {
                    let w = if i == j { cf.a[i][j] } else { cf.a[i][j] + cf.a[j][i] };
                    if w != 0.0 {
                        s += w * u.d2(node, al, i, j);
                    }
                }
                for be in 0..D {
                    s += cf.b[i][al][be] * jac[be][i];
                }
            }
            for be in 0..D {
                s += cf.c[al][be] * u.get(node, be);
            }
            o[al] = s;
        }
    }
}
