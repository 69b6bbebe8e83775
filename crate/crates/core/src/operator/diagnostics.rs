use serde::Serialize;

use super::coefficients::GridCoefficients;
use crate::error::{Error, Result};
use crate::fields::GridField;

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct CoercivityReport {
    /// Smallest `C ≥ 0` with `−⟨𝓛B,B⟩ ≥ (ν/2)‖DB‖² − C‖B‖²` over the sample.
    pub c_est: f64,
    /// `min_B (−⟨𝓛B,B⟩ − (ν/2)‖DB‖² + C_est‖B‖²) / ‖B‖²`
    pub margin: f64,
}

pub fn coercivity_check<const D: usize>(
    coeffs: &GridCoefficients<D>,
    nu: f64,
    samples: &[GridField<D>],
) -> Result<CoercivityReport> {
    let ratios = samples
        .iter()
        .map(|b| {
            let norm = b.l2_norm_sq();
            if norm == 0.0 {
                return Err(Error::DegenerateSample("coercivity sample with zero L2 norm".into()));
            }
            Ok((0.5 * nu * b.h1_seminorm_sq() + coeffs.apply(b).inner(b)) / norm)
        })
        .collect::<Result<Vec<f64>>>()?;
    let c_est = ratios.iter().copied().fold(0.0, f64::max);
    let margin = ratios.iter().map(|r| c_est - r).fold(f64::INFINITY, f64::min);
    Ok(CoercivityReport { c_est, margin })
}

/// `∫ f g ∂_i h / (‖g‖_p ‖f‖_{W^{1,2}} ‖h‖_{W^{1,2}})` for scalar grid fields.
pub fn interpolation_ratio<const D: usize>(
    f: &GridField<D>,
    g: &GridField<D>,
    h: &GridField<D>,
    axis: usize,
    p: f64,
) -> Result<f64> {
    if p <= D as f64 {
        return Err(Error::InvalidConfig(format!("need p > d, got p = {p}")));
    }
    for s in [f, g, h] {
        if s.ncomp != 1 {
            return Err(Error::DimensionMismatch { expected: 1, got: s.ncomp });
        }
    }
    let num: f64 = (0..f.grid.len())
        .map(|n| f.data[n] * g.data[n] * h.d1(n, 0, axis))
        .sum::<f64>()
        * f.grid.cell_volume();
    let den = g.lp_norm(p) * f.w12_norm() * h.w12_norm();
    if den == 0.0 {
        return Err(Error::DegenerateSample("interpolation ratio with a zero norm".into()));
    }
    Ok(num / den)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fields::Grid;
    use crate::noise::NoiseBasis;
    use crate::operator::OperatorCoefficients;
    use crate::random_fields::TrigPolynomial;
    use std::f64::consts::PI;

    #[test]
    fn constant_basis_needs_no_lower_order_constant() {
        let g = Grid::<2>::new(32, PI);
        let coeffs = OperatorCoefficients::new(NoiseBasis::<2>::constant()).on_grid(g);
        let samples: Vec<_> = (0..5).map(|s| TrigPolynomial::<2>::random(2, 4, s).sample(g)).collect();
        let rep = coercivity_check(&coeffs, 1.0, &samples).unwrap();
        assert!(rep.c_est <= 1e-8 && rep.margin >= 0.0);
    }

    #[test]
    fn coercivity_is_scale_invariant() {
        let g = Grid::<2>::new(32, PI);
        let coeffs = OperatorCoefficients::new(NoiseBasis::<2>::sinusoidal()).on_grid(g);
        let b = TrigPolynomial::<2>::random(2, 3, 1).sample(g);
        let r1 = coercivity_check(&coeffs, 0.5, std::slice::from_ref(&b)).unwrap();
        let r2 = coercivity_check(&coeffs, 0.5, &[b.scaled(2.0)]).unwrap();
        assert!((r1.c_est - r2.c_est).abs() < 1e-12 * r1.c_est.max(1.0));
        assert!(matches!(
            coercivity_check(&coeffs, 0.5, &[GridField::zeros(g, 2)]),
            Err(Error::DegenerateSample(_))
        ));
    }

    #[test]
    fn interpolation_ratio_trivia() {
        let g = Grid::<2>::new(16, PI);
        let one = GridField::from_fn(g, 1, |_, o| o[0] = 1.0);
        let s = |seed| TrigPolynomial::<2>::random(1, 3, seed).sample(g);
        assert_eq!(interpolation_ratio(&one, &s(1), &one, 0, 3.0).unwrap(), 0.0);
        let (f, gg, h) = (s(1), s(2), s(3));
        let r = interpolation_ratio(&f, &gg, &h, 1, 3.0).unwrap();
        let r2 = interpolation_ratio(&f.scaled(2.0), &gg.scaled(-3.0), &h.scaled(0.5), 1, 3.0).unwrap();
        assert!((r + r2).abs() < 1e-12 * r.abs().max(1e-3));
        assert!(interpolation_ratio(&f, &gg, &h, 0, 2.0).is_err());
        assert!(interpolation_ratio(&f, &GridField::zeros(g, 1), &h, 0, 3.0).is_err());
    }
}
