use serde::{Deserialize, Serialize};
use std::sync::Arc;

use crate::error::{Error, Result};
use crate::fields::analytic::{Cellular, Constant, PlaneWave};
use crate::fields::{Grid, Jet, SharedField};
use crate::linalg::{self, Matrix, Vector};

/// One primitive noise mode as written in experiment configs.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum ModeSpec {
    /// `σ(x) = u`
    Constant { direction: Vec<f64> },
    /// `σ(x) = A u sin(k·x + φ)` with `u ⊥ k`.
    Shear {
        amplitude: f64,
        wavevector: Vec<f64>,
        direction: Vec<f64>,
        #[serde(default)]
        phase: f64,
    },
    /// `∇^⊥ [A sin(k₁x¹ + φ₁) sin(k₂x² + φ₂)]` in the first two coordinates.
    Cellular {
        amplitude: f64,
        wavenumbers: [f64; 2],
        #[serde(default)]
        phases: [f64; 2],
    },
}

fn to_vector<const D: usize>(v: &[f64], what: &str) -> Result<Vector<D>> {
    if v.len() != D {
        return Err(Error::InvalidConfig(format!(
            "{what} has {} components, expected {D}",
            v.len()
        )));
    }
    Ok(std::array::from_fn(|i| v[i]))
}

impl ModeSpec {
    pub fn build<const D: usize>(&self) -> Result<SharedField<D>> {
        Ok(match self {
            ModeSpec::Constant { direction } => Arc::new(Constant::new(to_vector::<D>(direction, "direction")?)),
            ModeSpec::Shear {
                amplitude,
                wavevector,
                direction,
                phase,
            } => {
                let k = to_vector::<D>(wavevector, "wavevector")?;
                let u = to_vector::<D>(direction, "direction")?;
                if linalg::dot(&k, &u).abs() > 1e-12 * (1.0 + linalg::norm(&k) * linalg::norm(&u)) {
                    return Err(Error::InvalidConfig(
                        "shear mode must have direction orthogonal to wavevector (divergence free)".into(),
                    ));
                }
                Arc::new(PlaneWave::new(*amplitude, k, u, *phase))
            }
            ModeSpec::Cellular {
                amplitude,
                wavenumbers,
                phases,
            } => {
                if D < 2 {
                    return Err(Error::InvalidConfig("cellular modes need d >= 2".into()));
                }
                Arc::new(Cellular::<D> {
                    amplitude: *amplitude,
                    wavenumbers: *wavenumbers,
                    phases: *phases,
                })
            }
        })
    }

    /// `e_1, ..., e_d`
    pub fn constant_basis(d: usize) -> Vec<ModeSpec> {
        (0..d)
            .map(|k| ModeSpec::Constant {
                direction: (0..d).map(|i| if i == k { 1.0 } else { 0.0 }).collect(),
            })
            .collect()
    }

    /// Scaled constant modes plus one cellular and one shear mode; `Q(x,x) ≥ ½ Id`.
    pub fn sinusoidal_basis(d: usize) -> Vec<ModeSpec> {
        let mut modes: Vec<ModeSpec> = (0..d)
            .map(|k| ModeSpec::Constant {
                direction: (0..d).map(|i| if i == k { 0.5f64.sqrt() } else { 0.0 }).collect(),
            })
            .collect();
        modes.push(ModeSpec::Cellular {
            amplitude: 0.5,
            wavenumbers: [1.0, 1.0],
            phases: [0.0, 0.0],
        });
        modes.push(ModeSpec::Shear {
            amplitude: 0.5,
            wavevector: (0..d).map(|i| if i == 1 { 1.0 } else { 0.0 }).collect(),
            direction: (0..d).map(|i| if i == 0 { 1.0 } else { 0.0 }).collect(),
            phase: 0.0,
        });
        modes
    }

    pub fn preset(name: &str, d: usize) -> Result<Vec<ModeSpec>> {
        match name {
            "constant" => Ok(Self::constant_basis(d)),
            "sinusoidal" => Ok(Self::sinusoidal_basis(d)),
            _ => Err(Error::InvalidConfig(format!(
                "unknown basis preset {name:?} (expected \"constant\" or \"sinusoidal\")"
            ))),
        }
    }
}

/// Finite family `{σ_k}` of divergence-free noise fields.
#[derive(Clone, Debug, Default)]
pub struct NoiseBasis<const D: usize> {
    pub modes: Vec<SharedField<D>>,
}

/// `Q` and all of its first and second slot derivatives at a pair `(x, y)`.
///
/// `d1[i][a][b] = ∂^{(1)}_i Q^{ab}`, `d1d2[i][j][a][b] = ∂^{(1)}_i ∂^{(2)}_j Q^{ab}`,
/// and likewise for the other slots.
#[derive(Clone, Debug, PartialEq)]
pub struct CovarianceJet<const D: usize> {
    pub q: Matrix<D>,
    pub d1: [Matrix<D>; D],
    pub d2: [Matrix<D>; D],
    pub d1d1: [[Matrix<D>; D]; D],
    pub d1d2: [[Matrix<D>; D]; D],
    pub d2d2: [[Matrix<D>; D]; D],
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Slot {
    D1(usize),
    D2(usize),
    D1D1(usize, usize),
    D1D2(usize, usize),
    D2D2(usize, usize),
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct EllipticityReport {
    pub nu_est: f64,
    pub worst_x: Vec<f64>,
    pub pass: bool,
}

/// Sup-norms of `Q` and its derivatives on the diagonal over a point set.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CovarianceBounds {
    pub sigma_sq: f64,
    pub q: f64,
    pub dq: f64,
    pub ddq: f64,
}

impl<const D: usize> NoiseBasis<D> {
    pub fn new(modes: Vec<SharedField<D>>) -> Self {
        Self { modes }
    }

    pub fn from_specs(specs: &[ModeSpec]) -> Result<Self> {
        Ok(Self::new(specs.iter().map(|s| s.build::<D>()).collect::<Result<_>>()?))
    }

    pub fn constant() -> Self {
        Self::from_specs(&ModeSpec::constant_basis(D)).unwrap()
    }

    pub fn sinusoidal() -> Self {
        Self::from_specs(&ModeSpec::sinusoidal_basis(D)).unwrap()
    }

    pub fn len(&self) -> usize {
        self.modes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.modes.is_empty()
    }

    pub fn is_constant(&self) -> bool {
        self.modes.iter().all(|m| m.is_constant())
    }

    pub fn jets(&self, x: &Vector<D>) -> Vec<Jet<D>> {
        self.modes.iter().map(|m| m.jet(0.0, x)).collect()
    }

    /// `Q^{ab}(x, y) = Σ_k σ_k^a(x) σ_k^b(y)`
    pub fn covariance(&self, x: &Vector<D>, y: &Vector<D>) -> Matrix<D> {
        let mut q = linalg::zero_matrix();
        for m in &self.modes {
            let (sx, sy) = (m.eval(0.0, x), m.eval(0.0, y));
            for a in 0..D {
                for b in 0..D {
                    q[a][b] += sx[a] * sy[b];
                }
            }
        }
        q
    }

    pub fn covariance_jet(&self, x: &Vector<D>, y: &Vector<D>) -> CovarianceJet<D> {
        let z = linalg::zero_matrix::<D>();
        let mut out = CovarianceJet {
            q: z,
            d1: [z; D],
            d2: [z; D],
            d1d1: [[z; D]; D],
            d1d2: [[z; D]; D],
            d2d2: [[z; D]; D],
        };
        for m in &self.modes {
            let (jx, jy) = (m.jet(0.0, x), m.jet(0.0, y));
            for a in 0..D {
                for b in 0..D {
                    out.q[a][b] += jx.value[a] * jy.value[b];
                    for i in 0..D {
                        out.d1[i][a][b] += jx.jac[a][i] * jy.value[b];
                        out.d2[i][a][b] += jx.value[a] * jy.jac[b][i];
                        for j in 0..D {
                            out.d1d1[i][j][a][b] += jx.hess[a][i][j] * jy.value[b];
                            out.d1d2[i][j][a][b] += jx.jac[a][i] * jy.jac[b][j];
                            out.d2d2[i][j][a][b] += jx.value[a] * jy.hess[b][i][j];
                        }
                    }
                }
            }
        }
        out
    }

    pub fn covariance_derivative(&self, x: &Vector<D>, y: &Vector<D>, slot: Slot) -> Matrix<D> {
        let jet = self.covariance_jet(x, y);
        match slot {
            Slot::D1(i) => jet.d1[i],
            Slot::D2(i) => jet.d2[i],
            Slot::D1D1(i, j) => jet.d1d1[i][j],
            Slot::D1D2(i, j) => jet.d1d2[i][j],
            Slot::D2D2(i, j) => jet.d2d2[i][j],
        }
    }

    /// Smallest eigenvalue of `Q(x,x)` over `points`.
    pub fn check_ellipticity(&self, points: &[Vector<D>]) -> EllipticityReport {
        assert!(!points.is_empty());
        let mut nu = f64::INFINITY;
        let mut worst = points[0];
        for x in points {
            let lam = linalg::symmetric_eigenvalues(&self.covariance(x, x))[0];
            if lam < nu {
                nu = lam;
                worst = *x;
            }
        }
        EllipticityReport {
            nu_est: nu,
            worst_x: worst.to_vec(),
            pass: nu > 1e-12,
        }
    }

    pub fn bounds(&self, points: &[Vector<D>]) -> CovarianceBounds {
        let mut b = CovarianceBounds {
            sigma_sq: 0.0,
            q: 0.0,
            dq: 0.0,
            ddq: 0.0,
        };
        let mabs = |m: &Matrix<D>| linalg::max_abs(m);
        for x in points {
            let jet = self.covariance_jet(x, x);
            b.sigma_sq = b.sigma_sq.max((0..D).map(|a| jet.q[a][a]).sum());
            b.q = b.q.max(mabs(&jet.q));
            for i in 0..D {
                b.dq = b.dq.max(mabs(&jet.d1[i])).max(mabs(&jet.d2[i]));
                for j in 0..D {
                    b.ddq = b
                        .ddq
                        .max(mabs(&jet.d1d1[i][j]))
                        .max(mabs(&jet.d1d2[i][j]))
                        .max(mabs(&jet.d2d2[i][j]));
                }
            }
        }
        b
    }
}

/// Nodes of an `n^D` lattice on the box, used as the ellipticity sample set.
pub fn lattice<const D: usize>(n: usize, half_width: f64) -> Vec<Vector<D>> {
    let g = Grid::<D>::new(n, half_width);
    (0..g.len()).map(|i| g.coords(i)).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fields::analytic::tests::random_points;
    use crate::fields::analytic::Scaled;
    use std::f64::consts::PI;

    fn sin_basis() -> NoiseBasis<2> {
        // √2 (sin x², 0)
        NoiseBasis::new(vec![Arc::new(PlaneWave::new(2f64.sqrt(), [0.0, 1.0], [1.0, 0.0], 0.0))])
    }

    #[test]
    fn constant_basis_has_identity_covariance() {
        let b = NoiseBasis::<2>::constant();
        let pts = random_points::<2>(10, 3.0, 1);
        for x in &pts {
            for y in &pts {
                assert_eq!(b.covariance(x, y), linalg::identity());
                let jet = b.covariance_jet(x, y);
                assert!(jet.d1.iter().chain(&jet.d2).all(|m| linalg::max_abs(m) == 0.0));
            }
        }
        let b3 = NoiseBasis::<3>::constant();
        assert_eq!(b3.covariance(&[0.1, 0.2, 0.3], &[1.0, 2.0, 3.0]), linalg::identity());
    }

    #[test]
    fn empty_basis() {
        let b = NoiseBasis::<2>::default();
        assert_eq!(b.covariance(&[0.0, 1.0], &[1.0, 0.0]), linalg::zero_matrix());
        let rep = b.check_ellipticity(&lattice::<2>(4, PI));
        assert_eq!(rep.nu_est, 0.0);
        assert!(!rep.pass);
    }

    #[test]
    fn sin_basis_hand_values() {
        let b = sin_basis();
        let q = b.covariance(&[0.0, PI / 2.0], &[0.0, PI / 6.0]);
        assert!((q[0][0] - 1.0).abs() < 1e-15);
        assert_eq!([q[0][1], q[1][0], q[1][1]], [0.0; 3]);
        let d = b.covariance_derivative(&[0.0, PI / 2.0], &[0.0, 0.0], Slot::D2(1));
        assert!((d[0][0] - 2.0).abs() < 1e-15);
    }

    #[test]
    fn slot_symmetry() {
        let b = NoiseBasis::<2>::sinusoidal();
        let xs = random_points::<2>(50, 3.0, 2);
        let ys = random_points::<2>(50, 3.0, 3);
        for (x, y) in xs.iter().zip(&ys) {
            let (jxy, jyx) = (b.covariance_jet(x, y), b.covariance_jet(y, x));
            for i in 0..2 {
                for a in 0..2 {
                    for c in 0..2 {
                        assert!((jxy.d1[i][a][c] - jyx.d2[i][c][a]).abs() < 1e-14);
                        assert!((jxy.q[a][c] - jyx.q[c][a]).abs() < 1e-15);
                    }
                }
            }
        }
    }

    #[test]
    fn slots_match_finite_differences() {
        let b = NoiseBasis::<2>::sinusoidal();
        let delta = 1e-4;
        let xs = random_points::<2>(20, 3.0, 4);
        let ys = random_points::<2>(20, 3.0, 5);
        let shift = |p: &Vector<2>, i: usize, s: f64| {
            let mut q = *p;
            q[i] += s;
            q
        };
        let fd = |f: &dyn Fn(&Vector<2>, &Vector<2>) -> Matrix<2>, x: &Vector<2>, y: &Vector<2>, slot: u8, i: usize| {
            let (p, m) = if slot == 1 {
                (f(&shift(x, i, delta), y), f(&shift(x, i, -delta), y))
            } else {
                (f(x, &shift(y, i, delta)), f(x, &shift(y, i, -delta)))
            };
            let mut out = linalg::zero_matrix::<2>();
            for a in 0..2 {
                for c in 0..2 {
                    out[a][c] = (p[a][c] - m[a][c]) / (2.0 * delta);
                }
            }
            out
        };
        let q = |x: &Vector<2>, y: &Vector<2>| b.covariance(x, y);
        let mut worst = 0.0_f64;
        let mut check = |exact: &Matrix<2>, approx: &Matrix<2>, scale: f64| {
            for a in 0..2 {
                for c in 0..2 {
                    worst = worst.max((exact[a][c] - approx[a][c]).abs() / scale);
                }
            }
        };
        for (x, y) in xs.iter().zip(&ys) {
            let jet = b.covariance_jet(x, y);
            for i in 0..2 {
                check(&jet.d1[i], &fd(&q, x, y, 1, i), 1.0);
                check(&jet.d2[i], &fd(&q, x, y, 2, i), 1.0);
                for j in 0..2 {
                    let d1j = |x: &Vector<2>, y: &Vector<2>| b.covariance_derivative(x, y, Slot::D1(j));
                    let d2j = |x: &Vector<2>, y: &Vector<2>| b.covariance_derivative(x, y, Slot::D2(j));
                    check(&jet.d1d1[j][i], &fd(&d1j, x, y, 1, i), 1.0);
                    check(&jet.d1d2[i][j], &fd(&d2j, x, y, 1, i), 1.0);
                    check(&jet.d2d2[j][i], &fd(&d2j, x, y, 2, i), 1.0);
                }
            }
        }
        assert!(worst < 1e-6, "{worst:e}");
    }

    #[test]
    fn ellipticity_reports() {
        let pts = lattice::<2>(32, PI);
        let rep = NoiseBasis::<2>::constant().check_ellipticity(&pts);
        assert!((rep.nu_est - 1.0).abs() < 1e-12 && rep.pass);

        let mixed = NoiseBasis::<2>::new(vec![
            Arc::new(Constant::new([2f64.sqrt(), 0.0])),
            Arc::new(Constant::new([0.0, 1.0])),
            Arc::new(PlaneWave::new(1.0, [1.0, 0.0], [0.0, 1.0], 0.0)),
        ]);
        let q = mixed.covariance(&[PI / 2.0, 0.3], &[PI / 2.0, 0.3]);
        assert!((q[0][0] - 2.0).abs() < 1e-14 && (q[1][1] - 2.0).abs() < 1e-14 && q[0][1] == 0.0);
        let rep = mixed.check_ellipticity(&pts);
        assert!((rep.nu_est - 1.0).abs() < 1e-12);
        assert!(rep.worst_x[0].sin().abs() < 1e-12);

        let rep = NoiseBasis::<2>::sinusoidal().check_ellipticity(&pts);
        assert!(rep.nu_est >= 0.5 - 1e-12 && rep.pass);
    }

    #[test]
    fn covariance_is_psd_on_the_diagonal() {
        let b = NoiseBasis::<2>::sinusoidal();
        for x in random_points::<2>(200, PI, 9) {
            let ev = linalg::symmetric_eigenvalues(&b.covariance(&x, &x));
            assert!(ev[0] >= -1e-12);
        }
    }

    #[test]
    fn demo_bounds_are_finite() {
        let b = NoiseBasis::<2>::sinusoidal().bounds(&lattice(32, PI));
        assert!(b.sigma_sq.is_finite() && b.q > 0.0 && b.dq > 0.0 && b.ddq > 0.0);
        assert!(b.ddq.is_finite());
    }

    #[test]
    fn specs_round_trip_and_validate() {
        let specs = ModeSpec::sinusoidal_basis(2);
        let json = serde_json::to_string(&specs).unwrap();
        let back: Vec<ModeSpec> = serde_json::from_str(&json).unwrap();
        assert_eq!(specs, back);
        let bad = ModeSpec::Shear {
            amplitude: 1.0,
            wavevector: vec![1.0, 0.0],
            direction: vec![1.0, 0.0],
            phase: 0.0,
        };
        assert!(bad.build::<2>().is_err());
        assert!(ModeSpec::Constant { direction: vec![1.0] }.build::<2>().is_err());
        assert!(serde_json::from_str::<ModeSpec>(r#"{"kind":"constant","direction":[1,0],"x":1}"#).is_err());
        assert!(ModeSpec::preset("nope", 2).is_err());
    }

    #[test]
    fn scaled_modes_scale_covariance_quadratically() {
        let base = NoiseBasis::<2>::sinusoidal();
        let scaled = NoiseBasis::new(
            base.modes
                .iter()
                .map(|m| Arc::new(Scaled { factor: 3.0, field: m.clone() }) as SharedField<2>)
                .collect(),
        );
        let (x, y) = ([0.3, -1.1], [2.0, 0.4]);
        let (q0, q1) = (base.covariance(&x, &y), scaled.covariance(&x, &y));
        for a in 0..2 {
            for c in 0..2 {
                assert!((9.0 * q0[a][c] - q1[a][c]).abs() < 1e-13);
            }
        }
    }
}
