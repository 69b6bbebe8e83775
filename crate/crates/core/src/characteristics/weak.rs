//! Residual of the Itô weak form along one simulated path:
//!
//! ```text
//! ⟨B_t,φ⟩ = ⟨B_0,φ⟩ + ∫⟨B, E_v φ⟩ ds + Σ_k ∫⟨B, D_k φ⟩ dW^k + ∫⟨B, 𝓛*φ⟩ ds
//! ```
//!
//! with `E_v φ = (v·∇)φ + (∇v)^T φ` and `D_k φ = (σ_k·∇)φ − (∇φ)^T σ_k`.
//! The stochastic integral is summed at left points with the Milstein
//! correction `Σ_l ⟨B, E_l D_k φ⟩ ½(ΔW^k ΔW^l − δ_kl Δt)`, which drops the
//! Lévy areas and is therefore first order only for commuting noise fields.

use crate::fields::{AnalyticField, Grid, GridField};
use crate::noise::{BrownianPath, NoiseBasis};
use crate::operator::bracket::{transport_adjoint, weak_transport_jet};
use crate::operator::OperatorCoefficients;

/// Grid samples of every test field the weak form pairs `B` against.
#[derive(Clone, Debug)]
pub struct WeakFormProbe<const D: usize> {
    pub modes: usize,
    pub phi: GridField<D>,
    pub drift: GridField<D>,
    pub adjoint: GridField<D>,
    /// `D_k φ`
    pub noise: Vec<GridField<D>>,
    /// `E_l D_k φ` at index `l * K + k`
    pub milstein: Vec<GridField<D>>,
}

impl<const D: usize> WeakFormProbe<D> {
    pub fn new(
        phi: &dyn AnalyticField<D>,
        drift: &dyn AnalyticField<D>,
        basis: &NoiseBasis<D>,
        coeffs: &OperatorCoefficients<D>,
        grid: Grid<D>,
    ) -> Self {
        let k = basis.len();
        let mut probe = Self {
            modes: k,
            phi: GridField::zeros(grid, D),
            drift: GridField::zeros(grid, D),
            adjoint: GridField::zeros(grid, D),
            noise: vec![GridField::zeros(grid, D); k],
            milstein: vec![GridField::zeros(grid, D); k * k],
        };
        for node in 0..grid.len() {
            let x = grid.coords(node);
            let pj = phi.jet(0.0, &x);
            let (v, dv) = drift.eval_with_jacobian(0.0, &x);
            probe.phi.node_mut(node).copy_from_slice(&pj.value);
            probe
                .drift
                .node_mut(node)
                .copy_from_slice(&transport_adjoint(&v, &dv, &pj.value, &pj.jac));
            probe.adjoint.node_mut(node).copy_from_slice(&coeffs.apply_adjoint(&x, &pj));
            let jets = basis.jets(&x);
            for (kk, sk) in jets.iter().enumerate() {
                let (dk, jdk) = weak_transport_jet(sk, &pj);
                probe.noise[kk].node_mut(node).copy_from_slice(&dk);
                for (l, sl) in jets.iter().enumerate() {
                    let e = transport_adjoint(&sl.value, &sl.jac, &dk, &jdk);
                    probe.milstein[l * k + kk].node_mut(node).copy_from_slice(&e);
                }
            }
        }
        probe
    }

    /// All pairings of `b` in the fixed order `φ, E_v φ, 𝓛*φ, D_k φ..., E_l D_k φ...`.
    pub fn pairings(&self, b: &GridField<D>) -> Vec<f64> {
        let mut out = vec![b.inner(&self.phi), b.inner(&self.drift), b.inner(&self.adjoint)];
        out.extend(self.noise.iter().map(|f| b.inner(f)));
        out.extend(self.milstein.iter().map(|f| b.inner(f)));
        out
    }
}

/// `LHS − RHS` of the weak form at every `t_j`, given the pairings of
/// `B(t_j)` for `j = 0..=N` as produced by [`WeakFormProbe::pairings`].
pub fn weak_form_residual(pairings: &[Vec<f64>], path: &BrownianPath) -> Vec<f64> {
    assert_eq!(pairings.len(), path.steps() + 1);
    let k = path.modes;
    let dt = path.dt;
    let mut out = vec![0.0];
    let mut rhs = pairings[0][0];
    for j in 0..path.steps() {
        let (p, q) = (&pairings[j], &pairings[j + 1]);
        rhs += 0.5 * (p[1] + q[1]) * dt + 0.5 * (p[2] + q[2]) * dt;
        let dw = path.increment(j);
        for kk in 0..k {
            rhs += p[3 + kk] * dw[kk];
            for l in 0..k {
                let delta = if l == kk { dt } else { 0.0 };
                rhs += p[3 + k + l * k + kk] * 0.5 * (dw[kk] * dw[l] - delta);
            }
        }
        out.push(q[0] - rhs);
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::characteristics::{Characteristics, TOL_INV};
    use crate::fields::analytic::{gaussian_stream, GaussianBump, Zero};
    use crate::noise::BrownianEnsemble;
    use std::f64::consts::PI;

    #[test]
    fn zero_field_has_zero_residual() {
        let basis = NoiseBasis::<2>::constant();
        let g = Grid::<2>::new(16, PI);
        let phi = GaussianBump {
            amplitude: [1.0, 0.5],
            center: [0.0, 0.0],
            width: 0.6,
        };
        let probe = WeakFormProbe::new(&phi, &Zero, &basis, &OperatorCoefficients::new(basis.clone()), g);
        let path = BrownianEnsemble::new(1, 2, 8, 0.1, 1).unwrap().path(0);
        let pairs = vec![probe.pairings(&GridField::zeros(g, 2)); 9];
        assert!(weak_form_residual(&pairs, &path).iter().all(|r| *r == 0.0));
    }

    #[test]
    fn residual_is_linear_in_the_test_field() {
        let basis = NoiseBasis::<2>::constant();
        let g = Grid::<2>::new(24, PI);
        let coeffs = OperatorCoefficients::new(basis.clone());
        let ch = Characteristics::new(&Zero, &basis, Some(g));
        let b0 = gaussian_stream(1.0, [0.0, 0.0], 0.6);
        let path = BrownianEnsemble::new(1, 2, 8, 0.1, 2).unwrap().path(0);
        let series = ch.solve_spde_series(&b0, &path, g, TOL_INV).unwrap();
        let p1 = GaussianBump {
            amplitude: [1.0, 0.0],
            center: [0.2, 0.0],
            width: 0.6,
        };
        let p2 = GaussianBump {
            amplitude: [0.0, 1.0],
            center: [0.2, 0.0],
            width: 0.6,
        };
        let both = GaussianBump {
            amplitude: [1.0, 1.0],
            center: [0.2, 0.0],
            width: 0.6,
        };
        let res = |phi: &dyn AnalyticField<2>| {
            let probe = WeakFormProbe::new(phi, &Zero, &basis, &coeffs, g);
            let pairs: Vec<_> = series.iter().map(|b| probe.pairings(b)).collect();
            weak_form_residual(&pairs, &path)
        };
        let (r1, r2, r12) = (res(&p1), res(&p2), res(&both));
        for j in 0..r1.len() {
            assert!((r1[j] + r2[j] - r12[j]).abs() < 1e-13);
        }
    }
}
