//! Energy quantities along a run and the bilinear form behind the variational problem.

use serde::Serialize;

use super::stepper::DiagnosticRow;
use crate::fields::GridField;
use crate::linalg::Vector;
use crate::operator::GridCoefficients;

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct EnergySummary {
    /// `sup_t ‖V(t)‖²`
    pub sup_l2_sq: f64,
    /// `∫₀ᵀ ‖V(t)‖²_{W^{1,2}} dt` by the trapezoid rule
    pub integral_w12_sq: f64,
}

pub fn energy_diagnostics(history: &[DiagnosticRow]) -> EnergySummary {
    let w12 = |r: &DiagnosticRow| r.l2_norm * r.l2_norm + r.h1_seminorm * r.h1_seminorm;
    EnergySummary {
        sup_l2_sq: history.iter().map(|r| r.l2_norm * r.l2_norm).fold(0.0, f64::max),
        integral_w12_sq: history
            .windows(2)
            .map(|w| 0.5 * (w[1].t - w[0].t) * (w12(&w[0]) + w12(&w[1])))
            .sum(),
    }
}

/// `a(f, g) = −⟨𝓛f, g⟩ + ⟨[w, f], g⟩` after one integration by parts:
///
/// ```text
/// Σ⟨a_ij ∂_j f, ∂_i g⟩ + Σ⟨∂_i a_ij ∂_j f, g⟩ − Σ⟨b_i ∂_i f, g⟩ − ⟨c f, g⟩
///   + ⟨(w·∇) f, g⟩ + Σ_α ⟨w^α, (f·∇) g^α⟩
/// ```
///
/// where `w = v + h` is given by its node values. The last term uses
/// `div f = 0`.
pub fn bilinear_form<const D: usize>(
    coeffs: &GridCoefficients<D>,
    transport: &[Vector<D>],
    f: &GridField<D>,
    g: &GridField<D>,
) -> f64 {
    let grid = coeffs.grid;
    let mut total = 0.0;
    for node in 0..grid.len() {
        let cf = &coeffs.nodes[node];
        let w = &transport[node];
        let (fv, gv) = (f.vector(node), g.vector(node));
        let df: [[f64; D]; D] = std::array::from_fn(|al| std::array::from_fn(|i| f.d1(node, al, i)));
        let dg: [[f64; D]; D] = std::array::from_fn(|al| std::array::from_fn(|i| g.d1(node, al, i)));
        let mut s = 0.0;
        for al in 0..D {
            for i in 0..D {
                for j in 0..D {
                    s += cf.a[i][j] * df[al][j] * dg[al][i];
                }
                s += cf.div_a[i] * df[al][i] * gv[al];
                for be in 0..D {
                    s -= cf.b[i][al][be] * df[be][i] * gv[al];
                }
                s += w[i] * df[al][i] * gv[al] + w[al] * fv[i] * dg[al][i];
            }
            for be in 0..D {
                s -= cf.c[al][be] * fv[be] * gv[al];
            }
        }
        total += s;
    }
    total * grid.cell_volume()
}

/// `‖f‖²_𝒱 = ‖f‖² + ‖Df‖²`
pub fn v_norm<const D: usize>(f: &GridField<D>) -> f64 {
    f.w12_norm()
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct BilinearReport {
    /// `max |a(f,g)| / (‖f‖_𝒱 ‖g‖_𝒱)`
    pub continuity: f64,
    /// Smallest `λ ≥ 0` with `a(f,f) + λ|f|² ≥ (ν/2)‖f‖²_𝒱` on the fitting half.
    pub lambda: f64,
    /// `min (a(f,f) + λ|f|²) / ‖f‖²_𝒱` on the held-out half.
    pub coercivity_margin: f64,
}

/// Continuity ratio over all pairs, `λ` fitted on the first half of the
/// fields and the coercivity margin evaluated on the second half.
pub fn bilinear_diagnostics<const D: usize>(
    coeffs: &GridCoefficients<D>,
    transport: &[Vector<D>],
    nu: f64,
    pairs: &[(GridField<D>, GridField<D>)],
) -> BilinearReport {
    let continuity = pairs
        .iter()
        .map(|(f, g)| bilinear_form(coeffs, transport, f, g).abs() / (v_norm(f) * v_norm(g)))
        .fold(0.0, f64::max);
    let diag: Vec<(f64, f64, f64)> = pairs
        .iter()
        .map(|(f, _)| (bilinear_form(coeffs, transport, f, f), f.l2_norm_sq(), f.w12_norm_sq()))
        .collect();
    let (fit, held) = diag.split_at(diag.len() / 2);
    let lambda = fit
        .iter()
        .map(|(a, l2, v)| (0.5 * nu * v - a) / l2)
        .fold(0.0, f64::max);
    let coercivity_margin = held
        .iter()
        .map(|(a, l2, v)| (a + lambda * l2) / v)
        .fold(f64::INFINITY, f64::min);
    BilinearReport {
        continuity,
        lambda,
        coercivity_margin,
    }
}
