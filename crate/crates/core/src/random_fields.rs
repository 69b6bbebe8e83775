//! Seeded random band-limited test fields. The same seed gives the same
//! underlying trigonometric polynomial on every grid, so refinement sweeps
//! compare like with like.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::fields::{Grid, GridField};
use crate::linalg::Vector;

/// `Σ_{0<|k|∞≤kmax} (a_k cos k·x + b_k sin k·x) / (1 + |k|²)`, one independent
/// polynomial per component; zero mean.
#[derive(Clone, Debug)]
pub struct TrigPolynomial<const D: usize> {
    pub ncomp: usize,
    modes: Vec<([f64; D], Vec<f64>, Vec<f64>)>,
}

impl<const D: usize> TrigPolynomial<D> {
    pub fn random(ncomp: usize, kmax: i32, seed: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let side = (2 * kmax + 1) as usize;
        let mut modes = Vec::new();
        for combo in 0..side.pow(D as u32) {
            let mut c = combo;
            let mut k = [0.0; D];
            for a in (0..D).rev() {
                k[a] = (c % side) as f64 - kmax as f64;
                c /= side;
            }
            if k.iter().all(|&v| v == 0.0) {
                continue;
            }
            let damp = 1.0 / (1.0 + k.iter().map(|v| v * v).sum::<f64>());
            let mut draw = || -> Vec<f64> {
                (0..ncomp)
                    .map(|_| {
                        let z: f64 = StandardNormal.sample(&mut rng);
                        damp * z
                    })
                    .collect()
            };
            let (a, b) = (draw(), draw());
            modes.push((k, a, b));
        }
        Self { ncomp, modes }
    }

    pub fn eval(&self, x: &Vector<D>, out: &mut [f64]) {
        out.iter_mut().for_each(|v| *v = 0.0);
        for (k, a, b) in &self.modes {
            let (s, c) = (0..D).map(|i| k[i] * x[i]).sum::<f64>().sin_cos();
            for (comp, o) in out.iter_mut().enumerate() {
                *o += a[comp] * c + b[comp] * s;
            }
        }
    }

    pub fn sample(&self, grid: Grid<D>) -> GridField<D> {
        GridField::from_fn(grid, self.ncomp, |x, out| self.eval(x, out))
    }
}

/// `(−∂₂ψ, ∂₁ψ)` with central differences; its central-difference divergence
/// vanishes to rounding because the two difference operators commute.
pub fn discrete_perp_gradient(psi: &GridField<2>) -> GridField<2> {
    assert_eq!(psi.ncomp, 1);
    let mut out = GridField::zeros(psi.grid, 2);
    for node in 0..psi.grid.len() {
        let o = out.node_mut(node);
        o[0] = -psi.d1(node, 0, 1);
        o[1] = psi.d1(node, 0, 0);
    }
    out
}

pub fn random_solenoidal(grid: Grid<2>, kmax: i32, seed: u64) -> GridField<2> {
    discrete_perp_gradient(&TrigPolynomial::<2>::random(1, kmax, seed).sample(grid))
}
