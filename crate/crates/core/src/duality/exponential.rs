use serde::Serialize;

use crate::error::Result;
use crate::noise::{BrownianEnsemble, BrownianPath};
use crate::parabolic::Control;
use crate::stats::ensemble_stats;

/// `e_f(t) = exp(Σ_k ∫ f_k dW^k − ½ Σ_k ∫ |f_k|² ds)` along one path.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct StochasticExponential {
    /// `Σ_k ∫ f_k dW^k`
    pub stochastic: f64,
    /// `½ Σ_k ∫ |f_k|² ds`
    pub compensator: f64,
}

impl StochasticExponential {
    pub fn new() -> Self {
        Self::default()
    }

    /// Exact update for `f` constant over the step; `f` may load fewer
    /// modes than `dw` carries.
    pub fn advance(&mut self, f: &[f64], dw: &[f64], dt: f64) {
        assert!(f.len() <= dw.len(), "control loads more modes than the noise has");
        for (fk, w) in f.iter().zip(dw) {
            self.stochastic += fk * w;
            self.compensator += 0.5 * fk * fk * dt;
        }
    }

    pub fn log_value(&self) -> f64 {
        self.stochastic - self.compensator
    }

    pub fn value(&self) -> f64 {
        self.log_value().exp()
    }

    /// `e_f` at the end of `path`, with `f` sampled at the left end of each step.
    pub fn along(control: &Control, path: &BrownianPath) -> Self {
        let mut e = Self::new();
        for j in 0..path.steps() {
            e.advance(&control.at(j as f64 * path.dt), path.increment(j), path.dt);
        }
        e
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct MartingaleReport {
    pub mean: f64,
    pub standard_error: f64,
    pub samples: usize,
    pub pass: bool,
}

/// Monte-Carlo check of `E[e_f(T)] = 1` within three standard errors.
pub fn martingale_check(control: &Control, ensemble: &BrownianEnsemble) -> Result<MartingaleReport> {
    let stats = ensemble_stats(ensemble.samples, 1, |m, out| {
        out[0] = StochasticExponential::along(control, &ensemble.path(m)).value();
        Ok(())
    })?;
    let (mean, standard_error) = (stats.mean[0], stats.standard_error()[0]);
    Ok(MartingaleReport {
        mean,
        standard_error,
        samples: ensemble.samples,
        pass: (mean - 1.0).abs() <= 3.0 * standard_error,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn zero_control_gives_one() {
        let path = BrownianEnsemble::new(1, 3, 16, 1.0, 4).unwrap().path(0);
        assert_eq!(StochasticExponential::along(&Control::zero(), &path).value(), 1.0);
    }

    #[test]
    fn single_step_closed_form() {
        let mut e = StochasticExponential::new();
        e.advance(&[1.0], &[0.3], 0.01);
        assert!((e.value() - (0.3f64 - 0.005).exp()).abs() < 1e-15);
        assert!(e.value() > 0.0);
    }

    #[test]
    fn piecewise_control_uses_left_points() {
        let dw = vec![0.1, -0.2, 0.3, 0.05];
        let path = BrownianPath::from_increments(0, 0.25, 1, dw.clone());
        let c = Control::sign_flip(vec![2.0], 0.5);
        let e = StochasticExponential::along(&c, &path);
        let expect = 2.0 * (dw[0] + dw[1]) - 2.0 * (dw[2] + dw[3]) - 0.5 * 4.0 * 1.0;
        assert!((e.log_value() - expect).abs() < 1e-15);
    }

    #[test]
    fn martingale_property() {
        let ens = BrownianEnsemble::new(4000, 2, 8, 0.5, 17).unwrap();
        for c in Control::suite(2, 0.5) {
            let r = martingale_check(&c, &ens).unwrap();
            assert!(r.pass, "{c}: {r:?}");
        }
    }
}
