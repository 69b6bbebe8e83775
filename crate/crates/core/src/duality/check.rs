//! Monte-Carlo versus PDE comparison of `V = E[B e_f]` and of the second moments.

use serde::Serialize;

use super::estimate::{estimate_moments, estimate_v, Estimate};
use super::exponential::StochasticExponential;
use crate::characteristics::Characteristics;
use crate::error::{Error, Result};
use crate::fields::{AnalyticField, Grid, GridField};
use crate::noise::{BrownianEnsemble, NoiseBasis};
use crate::parabolic::{outer_square, Control, ExpectedValueProblem, MomentProblem};
use crate::stats::ensemble_stats;

/// Everything a Monte-Carlo versus PDE comparison needs. The same `drift`
/// drives both legs; the MC leg evaluates it off-grid.
#[derive(Clone, Debug)]
pub struct DualitySetup<'a, const D: usize> {
    pub b0: &'a dyn AnalyticField<D>,
    pub drift: &'a dyn AnalyticField<D>,
    pub basis: &'a NoiseBasis<D>,
    pub control: Control,
    pub horizon: f64,
    /// Time steps of the characteristics.
    pub steps: usize,
    pub samples: usize,
    pub seed: u64,
    /// Nodes where `B` is sampled.
    pub mc_grid: Grid<D>,
    /// PDE grid; `n` must be `mc_grid.n` times a power of two.
    pub pde_grid: Grid<D>,
    pub pde_dt_max: Option<f64>,
    pub tol_inv: f64,
    /// Discretization allowance added to three standard errors.
    pub allowance: f64,
}

impl<const D: usize> DualitySetup<'_, D> {
    pub fn ensemble(&self) -> Result<BrownianEnsemble> {
        BrownianEnsemble::new(self.samples, self.basis.len(), self.steps, self.horizon, self.seed)
    }

    fn characteristics(&self) -> Characteristics<'_, D> {
        Characteristics::new(self.drift, self.basis, Some(self.mc_grid))
    }

    fn coarsening(&self) -> Result<usize> {
        let (f, c) = (self.pde_grid.n, self.mc_grid.n);
        if self.pde_grid.half_width != self.mc_grid.half_width || f % c != 0 || !(f / c).is_power_of_two() {
            return Err(Error::InvalidConfig(format!(
                "PDE grid n = {f} must be the MC grid n = {c} times a power of two on the same box"
            )));
        }
        Ok((f / c).trailing_zeros() as usize)
    }

    fn restrict(&self, mut f: GridField<D>) -> Result<GridField<D>> {
        for _ in 0..self.coarsening()? {
            f = f.coarsened();
        }
        Ok(f)
    }
}

/// Outcome of one comparison. The fields themselves are skipped when
/// serializing and written separately as CSV.
#[derive(Clone, Debug, Serialize)]
pub struct DualityReport<const D: usize> {
    pub quantity: String,
    pub control: String,
    pub horizon: f64,
    pub samples: usize,
    pub steps: usize,
    pub mc_n: usize,
    pub pde_n: usize,
    /// `‖MC − PDE‖₂ / ‖PDE‖₂`
    pub discrepancy: f64,
    /// `‖SE‖₂ / ‖PDE‖₂`
    pub relative_standard_error: f64,
    pub allowance: f64,
    /// `3 · relative_standard_error + allowance`
    pub threshold: f64,
    pub max_abs_error: f64,
    pub pass: bool,
    #[serde(skip)]
    pub mc: Estimate<D>,
    #[serde(skip)]
    pub pde: GridField<D>,
}

impl<const D: usize> DualityReport<D> {
    fn build(quantity: &str, setup: &DualitySetup<D>, mc: Estimate<D>, pde: GridField<D>) -> Self {
        let norm = pde.l2_norm();
        let diff = GridField::linear_combination(1.0, &mc.mean, -1.0, &pde);
        let (discrepancy, relative_standard_error) = if norm == 0.0 {
            let zero = diff.l2_norm() == 0.0;
            (if zero { 0.0 } else { f64::INFINITY }, 0.0)
        } else {
            (diff.l2_norm() / norm, mc.standard_error.l2_norm() / norm)
        };
        let threshold = 3.0 * relative_standard_error + setup.allowance;
        Self {
            quantity: quantity.into(),
            control: setup.control.to_string(),
            horizon: setup.horizon,
            samples: setup.samples,
            steps: setup.steps,
            mc_n: setup.mc_grid.n,
            pde_n: setup.pde_grid.n,
            discrepancy,
            relative_standard_error,
            allowance: setup.allowance,
            threshold,
            max_abs_error: diff.max_abs(),
            pass: discrepancy <= threshold,
            mc,
            pde,
        }
    }

    /// `Err(TolExceeded)` when the comparison failed.
    pub fn check(&self) -> Result<()> {
        if self.pass {
            Ok(())
        } else {
            Err(Error::TolExceeded {
                metric: format!("{} discrepancy", self.quantity),
                value: self.discrepancy,
                tol: self.threshold,
            })
        }
    }

    /// `x1..xd, mc_*, se_*, pde_*` per MC node.
    pub fn fields_csv(&self) -> String {
        let g = self.pde.grid;
        let c = self.pde.ncomp;
        let mut s = String::new();
        let cols = |p: &str| (0..c).map(|i| format!("{p}{}", i + 1)).collect::<Vec<_>>().join(",");
        let xs = (0..D).map(|i| format!("x{}", i + 1)).collect::<Vec<_>>().join(",");
        s.push_str(&format!("{xs},{},{},{}\n", cols("mc"), cols("se"), cols("pde")));
        for node in 0..g.len() {
            let x = g.coords(node);
            let row: Vec<String> = x
                .iter()
                .copied()
                .chain(self.mc.mean.node(node).iter().copied())
                .chain(self.mc.standard_error.node(node).iter().copied())
                .chain(self.pde.node(node).iter().copied())
                .map(|v| v.to_string())
                .collect();
            s.push_str(&row.join(","));
            s.push('\n');
        }
        s
    }
}

/// `V_MC = E[B(t) e_f(t)]` on `mc_grid`, with `B` and `e_f` driven by the same increments.
pub fn monte_carlo_v<const D: usize>(setup: &DualitySetup<D>) -> Result<Estimate<D>> {
    setup.control.validate(setup.basis.len())?;
    let ens = setup.ensemble()?;
    let ch = setup.characteristics();
    estimate_v(setup.samples, setup.mc_grid, |m| {
        let path = ens.path(m);
        let b = ch.solve_spde_sample(setup.b0, &path, setup.mc_grid, setup.tol_inv)?;
        Ok((b.field, StochasticExponential::along(&setup.control, &path).value()))
    })
}

/// `V_PDE` on `pde_grid`.
pub fn pde_v<const D: usize>(setup: &DualitySetup<D>) -> Result<GridField<D>> {
    let problem = ExpectedValueProblem::new(setup.basis, setup.drift, setup.control.clone(), setup.pde_grid)?;
    let v0 = GridField::sample(setup.b0, setup.pde_grid, 0.0);
    Ok(problem.solve(v0, setup.horizon, setup.pde_dt_max, &[])?.0.field)
}

pub fn duality_check<const D: usize>(setup: &DualitySetup<D>) -> Result<DualityReport<D>> {
    let pde = setup.restrict(pde_v(setup)?)?;
    let mc = monte_carlo_v(setup)?;
    Ok(DualityReport::build("V", setup, mc, pde))
}

/// Second moments from the characteristics against the moment system.
/// The control is ignored.
pub fn moment_check<const D: usize>(setup: &DualitySetup<D>) -> Result<DualityReport<D>> {
    let problem = MomentProblem::new(setup.basis, setup.drift, setup.pde_grid);
    let u0 = outer_square(&GridField::sample(setup.b0, setup.pde_grid, 0.0));
    let pde = setup.restrict(problem.solve(u0, setup.horizon, setup.pde_dt_max, &[])?.0.field)?;
    let ens = setup.ensemble()?;
    let ch = setup.characteristics();
    let mc = estimate_moments(setup.samples, setup.mc_grid, |m| {
        Ok(ch.solve_spde_sample(setup.b0, &ens.path(m), setup.mc_grid, setup.tol_inv)?.field)
    })?;
    let mut setup = setup.clone();
    setup.control = Control::zero();
    Ok(DualityReport::build("moments", &setup, mc, pde))
}

/// Mean over paths of `‖B¹ − B²‖₂`, where `Bⁱ` is built from `drifts.i` and
/// both share every noise path.
pub fn two_solution_comparison<const D: usize>(
    setup: &DualitySetup<D>,
    drifts: (&dyn AnalyticField<D>, &dyn AnalyticField<D>),
) -> Result<f64> {
    let ens = setup.ensemble()?;
    let c1 = Characteristics::new(drifts.0, setup.basis, Some(setup.mc_grid));
    let c2 = Characteristics::new(drifts.1, setup.basis, Some(setup.mc_grid));
    let stats = ensemble_stats(setup.samples, 1, |m, out| {
        let path = ens.path(m);
        let b1 = c1.solve_spde_sample(setup.b0, &path, setup.mc_grid, setup.tol_inv)?.field;
        let b2 = c2.solve_spde_sample(setup.b0, &path, setup.mc_grid, setup.tol_inv)?.field;
        out[0] = GridField::linear_combination(1.0, &b1, -1.0, &b2).l2_norm();
        Ok(())
    })?;
    Ok(stats.mean[0])
}
