//! The expected-value equation `∂_t V + [v + h, V] = 𝓛V` with `h = Σ_k f_k σ_k`.

use super::control::Control;
use super::stepper::{evolve, stable_step, Evolution, NodeDrift, ParabolicState};
use crate::error::Result;
use crate::fields::{AnalyticField, Grid, GridField};
use crate::linalg;
use crate::noise::NoiseBasis;
use crate::operator::{GridCoefficients, OperatorCoefficients};

#[derive(Clone, Debug)]
pub struct ExpectedValueProblem<const D: usize> {
    pub coeffs: GridCoefficients<D>,
    pub drift: NodeDrift<D>,
    /// `σ_k` at the nodes, for `k < control.modes()`.
    pub modes: Vec<NodeDrift<D>>,
    pub control: Control,
}

impl<const D: usize> ExpectedValueProblem<D> {
    pub fn new(basis: &NoiseBasis<D>, drift: &dyn AnalyticField<D>, control: Control, grid: Grid<D>) -> Result<Self> {
        control.validate(basis.len())?;
        let modes = basis.modes[..control.modes()]
            .iter()
            .map(|s| NodeDrift::sample(s.as_ref(), grid, 0.0))
            .collect();
        Ok(Self {
            coeffs: OperatorCoefficients::new(basis.clone()).on_grid(grid),
            drift: NodeDrift::sample(drift, grid, 0.0),
            modes,
            control,
        })
    }

    /// `v + h(t)` at the nodes.
    pub fn transport(&self, t: f64) -> NodeDrift<D> {
        self.drift.plus_combination(&self.modes, &self.control.at(t))
    }

    /// Integrates from `v0` to `horizon`; see [`evolve`].
    pub fn solve(
        &self,
        v0: GridField<D>,
        horizon: f64,
        dt_max: Option<f64>,
        checkpoints: &[f64],
    ) -> Result<(ParabolicState<D>, Vec<(f64, GridField<D>)>)> {
        let mut state = ParabolicState::new(v0);
        let snaps = evolve(self, &mut state, horizon, dt_max, checkpoints)?;
        Ok((state, snaps))
    }
}

/// `[w, V] = (w·∇)V − (V·∇)w` with central differences on `V` and exact `∇w`.
pub fn transport_bracket<const D: usize>(w: &NodeDrift<D>, u: &GridField<D>) -> GridField<D> {
    let mut out = GridField::zeros(u.grid, D);
    for node in 0..u.grid.len() {
        let (wv, wj) = (&w.values[node], &w.jac[node]);
        let uv = u.vector(node);
        let o = out.node_mut(node);
        for al in 0..D {
            let mut s = 0.0;
            for i in 0..D {
                s += wv[i] * u.d1(node, al, i) - uv[i] * wj[al][i];
            }
            o[al] = s;
        }
    }
    out
}

impl<const D: usize> Evolution<D> for ExpectedValueProblem<D> {
    fn grid(&self) -> Grid<D> {
        self.coeffs.grid
    }

    fn switch_times(&self, horizon: f64) -> Vec<f64> {
        self.control.switches_before(horizon)
    }

    fn rhs(&self, piece_start: f64, u: &GridField<D>) -> GridField<D> {
        let mut out = self.coeffs.apply(u);
        out.axpy(-1.0, &transport_bracket(&self.transport(piece_start), u));
        out
    }

    fn stable_dt(&self, piece_start: f64) -> f64 {
        let w = self.transport(piece_start);
        let dt = stable_step(self.grid(), self.coeffs.max_diffusivity(), w.max_speed());
        let rate = w.max_rate() + self.coeffs.nodes.iter().map(|c| linalg::max_abs(&c.c)).fold(0.0, f64::max);
        if rate > 0.0 {
            dt.min(1.0 / rate)
        } else {
            dt
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fields::analytic::{gaussian_stream, Cellular, Zero};
    use crate::operator::bracket::lie_bracket;
    use std::f64::consts::PI;

    fn rel_l2<const D: usize>(a: &GridField<D>, b: &GridField<D>) -> f64 {
        GridField::linear_combination(1.0, a, -1.0, b).l2_norm() / b.l2_norm()
    }

    #[test]
    fn zero_data_stays_zero() {
        let g = Grid::<2>::new(16, PI);
        let p = ExpectedValueProblem::new(
            &NoiseBasis::sinusoidal(),
            &Cellular::<2>::new(0.5, [1.0, 1.0]),
            Control::constant(vec![0.3]),
            g,
        )
        .unwrap();
        let (s, _) = p.solve(GridField::zeros(g, 2), 0.1, None, &[]).unwrap();
        assert_eq!(s.field.max_abs(), 0.0);
    }

    #[test]
    fn constant_noise_is_the_heat_equation() {
        let g = Grid::<2>::new(64, PI);
        let (w, t) = (0.6, 0.25);
        let p = ExpectedValueProblem::new(&NoiseBasis::constant(), &Zero, Control::zero(), g).unwrap();
        let v0 = GridField::sample(&gaussian_stream(1.0, [0.0, 0.0], w), g, 0.0);
        let (s, _) = p.solve(v0, t, None, &[]).unwrap();
        let s2 = w * w + t;
        let exact = GridField::sample(&gaussian_stream(w * w / s2, [0.0, 0.0], s2.sqrt()), g, 0.0);
        assert!(rel_l2(&s.field, &exact) < 5e-3);
        // discrete heat flow dissipates
        assert!(s.history.windows(2).all(|r| r[1].l2_norm <= r[0].l2_norm));
    }

    #[test]
    fn constant_control_translates_along_h() {
        let g = Grid::<2>::new(64, PI);
        let (w, t) = (0.6, 0.25);
        let c = [0.8, -0.4];
        let p = ExpectedValueProblem::new(&NoiseBasis::constant(), &Zero, Control::constant(c.to_vec()), g).unwrap();
        let v0 = GridField::sample(&gaussian_stream(1.0, [0.0, 0.0], w), g, 0.0);
        let (s, _) = p.solve(v0, t, None, &[]).unwrap();
        let s2 = w * w + t;
        let shifted = GridField::sample(&gaussian_stream(w * w / s2, [c[0] * t, c[1] * t], s2.sqrt()), g, 0.0);
        assert!(rel_l2(&s.field, &shifted) < 1e-2);
        let wrong = GridField::sample(&gaussian_stream(w * w / s2, [-c[0] * t, -c[1] * t], s2.sqrt()), g, 0.0);
        assert!(rel_l2(&s.field, &wrong) > 0.2);
    }

    #[test]
    fn linear_in_initial_data() {
        let g = Grid::<2>::new(24, PI);
        let p = ExpectedValueProblem::new(
            &NoiseBasis::sinusoidal(),
            &Cellular::<2>::new(0.5, [1.0, 1.0]),
            Control::sign_flip(vec![0.4, 0.1], 0.02),
            g,
        )
        .unwrap();
        let a = GridField::sample(&gaussian_stream(1.0, [0.0, 0.0], 0.6), g, 0.0);
        let b = GridField::sample(&gaussian_stream(-0.5, [0.5, 0.2], 0.4), g, 0.0);
        let run = |u| p.solve(u, 0.05, Some(1e-3), &[]).unwrap().0.field;
        let lin = GridField::linear_combination(2.0, &run(a.clone()), 3.0, &run(b.clone()));
        let both = run(GridField::linear_combination(2.0, &a, 3.0, &b));
        let diff = lin.data.iter().zip(&both.data).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max);
        assert!(diff < 1e-12 * both.max_abs());
    }

    #[test]
    fn grid_bracket_matches_analytic_bracket() {
        let g = Grid::<2>::new(128, PI);
        let w = Cellular::<2>::new(0.7, [1.0, 2.0]);
        let u = gaussian_stream(1.0, [0.3, 0.0], 0.6);
        let br = transport_bracket(&NodeDrift::sample(&w, g, 0.0), &GridField::sample(&u, g, 0.0));
        let exact = GridField::from_fn(g, 2, |x, o| o.copy_from_slice(&lie_bracket(&w, &u, 0.0, x)));
        let e = rel_l2(&br, &exact);
        assert!(e < 3e-3, "{e}");
    }
}
