use std::f64::consts::PI;
use std::fmt::Write as _;
use std::sync::Mutex;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;
use serde_json::json;

use stochvec::characteristics::Characteristics;
use stochvec::duality::{duality_check, estimate_v, moment_check, DualityReport, DualitySetup, StochasticExponential};
use stochvec::fields::analytic::{FieldSum, PlaneWave};
use stochvec::fields::{AnalyticField, Grid, GridField, SharedField};
use stochvec::linalg::{self, Vector};
use stochvec::noise::{lattice, BrownianEnsemble, NoiseBasis};
use stochvec::operator::{apply_l_by_brackets, coercivity_check, interpolation_ratio, OperatorCoefficients};
use stochvec::parabolic::{diagnostics_csv, outer_square, ExpectedValueProblem, MomentProblem};
use stochvec::random_fields::TrigPolynomial;

use crate::config::ExperimentConfig;
use crate::output::RunDir;
use crate::CliError;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum PdeMode {
    V,
    Moments,
}

/// Per-path diagnostics of `simulate`.
#[derive(Clone, Copy, Debug, Default)]
struct PathRow {
    exponential: f64,
    l2_norm: f64,
    max_det_error: f64,
    max_inverse_residual: f64,
    failed_nodes: usize,
}

fn paths_csv(rows: &[PathRow]) -> String {
    let mut s = String::from("path,exponential,l2_norm,max_det_error,max_inverse_residual,failed_nodes\n");
    for (m, r) in rows.iter().enumerate() {
        writeln!(
            s,
            "{m},{},{},{},{},{}",
            r.exponential, r.l2_norm, r.max_det_error, r.max_inverse_residual, r.failed_nodes
        )
        .unwrap();
    }
    s
}

pub fn simulate<const D: usize>(cfg: &ExperimentConfig, out: &mut RunDir) -> Result<serde_json::Value, CliError> {
    let grid = cfg.mc_grid::<D>();
    let basis = cfg.basis::<D>()?;
    let drift = cfg.velocity::<D>()?;
    let b0 = cfg.initial::<D>()?;
    let control = cfg.control()?;
    let ens = BrownianEnsemble::new(cfg.samples, basis.len(), cfg.steps, cfg.horizon, cfg.seed)?;
    let ch = Characteristics::new(drift.as_ref(), &basis, Some(grid));
    let probes = lattice::<D>(4, cfg.half_width);
    let rows = Mutex::new(vec![PathRow::default(); cfg.samples]);
    let first = Mutex::new(None);

    let est = estimate_v(cfg.samples, grid, |m| {
        let path = ens.path(m);
        let b = ch.solve_spde_sample(b0.as_ref(), &path, grid, cfg.tolerances.tol_inv)?;
        let e = StochasticExponential::along(&control, &path).value();
        let mut det = 0.0_f64;
        for x in &probes {
            det = det.max((linalg::det(&ch.flow(x, &path)?.jac) - 1.0).abs());
        }
        rows.lock().unwrap()[m] = PathRow {
            exponential: e,
            l2_norm: b.field.l2_norm(),
            max_det_error: det,
            max_inverse_residual: b.max_residual,
            failed_nodes: b.failed_nodes,
        };
        if m == 0 {
            *first.lock().unwrap() = Some(b.field.clone());
        }
        Ok((b.field, e))
    })?;
    let rows = rows.into_inner().unwrap();
    out.text("paths.csv", &paths_csv(&rows))?;
    if let Some(b) = first.into_inner().unwrap() {
        out.field("b_path0", &b, cfg.horizon)?;
    }
    out.field("v_mc", &est.mean, cfg.horizon)?;
    out.field("v_se", &est.standard_error, cfg.horizon)?;
    let mean = |f: fn(&PathRow) -> f64| rows.iter().map(f).sum::<f64>() / rows.len() as f64;
    Ok(json!({
        "samples": cfg.samples,
        "steps": cfg.steps,
        "mean_exponential": mean(|r| r.exponential),
        "mean_l2_norm": mean(|r| r.l2_norm),
        "max_det_error": rows.iter().map(|r| r.max_det_error).fold(0.0, f64::max),
        "max_inverse_residual": rows.iter().map(|r| r.max_inverse_residual).fold(0.0, f64::max),
        "failed_nodes": rows.iter().map(|r| r.failed_nodes).sum::<usize>(),
    }))
}

pub fn pde<const D: usize>(cfg: &ExperimentConfig, mode: PdeMode, out: &mut RunDir) -> Result<serde_json::Value, CliError> {
    let grid = cfg.pde_grid::<D>();
    let basis = cfg.basis::<D>()?;
    let drift = cfg.velocity::<D>()?;
    let b0 = GridField::sample(cfg.initial::<D>()?.as_ref(), grid, 0.0);
    let (state, snaps, prefix) = match mode {
        PdeMode::V => {
            let p = ExpectedValueProblem::new(&basis, drift.as_ref(), cfg.control()?, grid)?;
            let (s, snaps) = p.solve(b0, cfg.horizon, cfg.pde_dt_max, &cfg.checkpoints)?;
            (s, snaps, "v")
        }
        PdeMode::Moments => {
            let p = MomentProblem::new(&basis, drift.as_ref(), grid);
            let (s, snaps) = p.solve(outer_square(&b0), cfg.horizon, cfg.pde_dt_max, &cfg.checkpoints)?;
            (s, snaps, "u")
        }
    };
    for (i, (t, f)) in snaps.iter().enumerate() {
        out.field(&format!("{prefix}_checkpoint{i}"), f, *t)?;
    }
    out.field(&format!("{prefix}_final"), &state.field, state.t)?;
    out.text("diagnostics.csv", &diagnostics_csv(&state.history))?;
    let last = state.history.last();
    Ok(json!({
        "mode": if mode == PdeMode::V { "V" } else { "moments" },
        "n": grid.n,
        "t": state.t,
        "steps": state.history.len().saturating_sub(1),
        "final_l2_norm": last.map(|r| r.l2_norm),
        "final_h1_seminorm": last.map(|r| r.h1_seminorm),
    }))
}

fn write_report<const D: usize>(report: &DualityReport<D>, out: &mut RunDir) -> Result<serde_json::Value, CliError> {
    out.json("report.json", report)?;
    out.text("fields.csv", &report.fields_csv())?;
    out.field("mc_mean", &report.mc.mean, report.horizon)?;
    out.field("mc_se", &report.mc.standard_error, report.horizon)?;
    out.field("pde", &report.pde, report.horizon)?;
    Ok(serde_json::to_value(report).map_err(stochvec::Error::from)?)
}

fn comparison<const D: usize>(
    cfg: &ExperimentConfig,
    out: &mut RunDir,
    run: fn(&DualitySetup<D>) -> stochvec::Result<DualityReport<D>>,
) -> Result<(serde_json::Value, stochvec::Result<()>), CliError> {
    let basis = cfg.basis::<D>()?;
    let drift = cfg.velocity::<D>()?;
    let b0 = cfg.initial::<D>()?;
    let setup = DualitySetup {
        b0: b0.as_ref(),
        drift: drift.as_ref(),
        basis: &basis,
        control: cfg.control()?,
        horizon: cfg.horizon,
        steps: cfg.steps,
        samples: cfg.samples,
        seed: cfg.seed,
        mc_grid: cfg.mc_grid(),
        pde_grid: cfg.pde_grid(),
        pde_dt_max: cfg.pde_dt_max,
        tol_inv: cfg.tolerances.tol_inv,
        allowance: cfg.tolerances.allowance,
    };
    let report = run(&setup)?;
    Ok((write_report(&report, out)?, report.check()))
}

/// Returns the summary and, separately, whether the comparison passed so
/// the caller can still write the manifest before failing.
pub fn duality<const D: usize>(
    cfg: &ExperimentConfig,
    out: &mut RunDir,
) -> Result<(serde_json::Value, stochvec::Result<()>), CliError> {
    comparison(cfg, out, duality_check::<D>)
}

pub fn moments<const D: usize>(
    cfg: &ExperimentConfig,
    out: &mut RunDir,
) -> Result<(serde_json::Value, stochvec::Result<()>), CliError> {
    comparison(cfg, out, moment_check::<D>)
}

#[derive(Debug, Serialize)]
pub struct OperatorReport {
    pub nu_est: f64,
    #[serde(rename = "C_est")]
    pub c_est: f64,
    pub bracket_vs_coeff_max_err: f64,
    pub adjoint_duality_err: f64,
    pub interp_max_ratio: f64,
}

/// Random divergence-free plane wave, periodic on the box when `periodic`.
fn random_wave<const D: usize>(rng: &mut ChaCha8Rng, half_width: f64, periodic: bool) -> PlaneWave<D> {
    let unit = PI / half_width;
    let k: Vector<D> = loop {
        let k: Vector<D> = std::array::from_fn(|_| {
            if periodic {
                unit * rng.gen_range(-2..=2) as f64
            } else {
                unit * rng.gen_range(-2.0..2.0)
            }
        });
        if linalg::norm(&k) > 0.5 * unit {
            break k;
        }
    };
    let mut u: Vector<D> = std::array::from_fn(|_| rng.gen_range(-1.0..1.0));
    let proj = linalg::dot(&u, &k) / linalg::dot(&k, &k);
    linalg::axpy(&mut u, -proj, &k);
    let u = linalg::scale(1.0 / linalg::norm(&u), &u);
    PlaneWave::new(rng.gen_range(0.2..1.0), k, u, rng.gen_range(0.0..2.0 * PI))
}

fn random_field<const D: usize>(rng: &mut ChaCha8Rng, half_width: f64, periodic: bool) -> FieldSum<D> {
    FieldSum::new(
        (0..3)
            .map(|_| std::sync::Arc::new(random_wave::<D>(rng, half_width, periodic)) as SharedField<D>)
            .collect(),
    )
}

/// Band-limited scalar or vector sample, periodic on the box.
fn trig_sample<const D: usize>(grid: Grid<D>, ncomp: usize, seed: u64) -> GridField<D> {
    let p = TrigPolynomial::<D>::random(ncomp, 3, seed);
    let s = PI / grid.half_width;
    GridField::from_fn(grid, ncomp, |x, o| p.eval(&linalg::scale(s, x), o))
}

fn verify_report<const D: usize>(basis: &NoiseBasis<D>, grid: Grid<D>, seed: u64) -> stochvec::Result<OperatorReport> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let coeffs = OperatorCoefficients::new(basis.clone());
    let l = grid.half_width;

    let nu_est = basis.check_ellipticity(&lattice::<D>(16, l)).nu_est;

    let mut bracket_err = 0.0_f64;
    for _ in 0..100 {
        let b = random_field::<D>(&mut rng, l, false);
        let x: Vector<D> = std::array::from_fn(|_| rng.gen_range(-l..l));
        let jet = b.jet(0.0, &x);
        let oracle = apply_l_by_brackets(basis, &x, &jet);
        let diff = linalg::norm(&linalg::sub(&coeffs.apply(&x, &jet), &oracle));
        bracket_err = bracket_err.max(diff / linalg::norm(&oracle).max(1e-12));
    }

    let mut adjoint_err = 0.0_f64;
    for _ in 0..3 {
        let b = random_field::<D>(&mut rng, l, true);
        let phi = random_field::<D>(&mut rng, l, true);
        let (mut lhs, mut rhs, mut scale) = (0.0, 0.0, 0.0);
        for node in 0..grid.len() {
            let x = grid.coords(node);
            let (bj, pj) = (b.jet(0.0, &x), phi.jet(0.0, &x));
            let lb = coeffs.apply(&x, &bj);
            lhs += linalg::dot(&lb, &pj.value);
            rhs += linalg::dot(&bj.value, &coeffs.apply_adjoint(&x, &pj));
            scale += linalg::norm(&lb) * linalg::norm(&pj.value);
        }
        adjoint_err = adjoint_err.max((lhs - rhs).abs() / scale.max(1e-300));
    }

    let samples: Vec<_> = (0..10).map(|s| trig_sample(grid, D, seed.wrapping_add(s))).collect();
    let c_est = coercivity_check(&coeffs.on_grid(grid), nu_est, &samples)?.c_est;

    let p = D as f64 + 1.0;
    let mut interp = 0.0_f64;
    for i in 0..30u64 {
        let base = seed.wrapping_add(1000 + 3 * i);
        let (f, g, h) = (trig_sample(grid, 1, base), trig_sample(grid, 1, base + 1), trig_sample(grid, 1, base + 2));
        interp = interp.max(interpolation_ratio(&f, &g, &h, (i as usize) % D, p)?.abs());
    }

    Ok(OperatorReport {
        nu_est,
        c_est,
        bracket_vs_coeff_max_err: bracket_err,
        adjoint_duality_err: adjoint_err,
        interp_max_ratio: interp,
    })
}

pub fn verify_operator<const D: usize>(cfg: &ExperimentConfig, out: &mut RunDir) -> Result<serde_json::Value, CliError> {
    let report = verify_report(&cfg.basis::<D>()?, cfg.mc_grid::<D>(), cfg.seed)?;
    out.json("report.json", &report)?;
    Ok(serde_json::to_value(&report).map_err(stochvec::Error::from)?)
}
