//! Fields sampled on a uniform periodic grid over `[-L, L)^D`.

use serde::{Deserialize, Serialize};

use super::analytic::AnalyticField;
use crate::linalg::Vector;

/// Uniform periodic grid: `n` nodes per axis on `[-L, L)^D`, node `i` at
/// `-L + i Δx`. Flat indices are row-major (last axis fastest).
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Grid<const D: usize> {
    pub n: usize,
    pub half_width: f64,
}

impl<const D: usize> Grid<D> {
    pub fn new(n: usize, half_width: f64) -> Self {
        assert!(n >= 3, "periodic stencils need at least 3 nodes per axis");
        assert!(half_width > 0.0);
        Self { n, half_width }
    }

    #[inline]
    pub fn dx(&self) -> f64 {
        2.0 * self.half_width / self.n as f64
    }

    #[inline]
    pub fn len(&self) -> usize {
        self.n.pow(D as u32)
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Quadrature weight of one node, `Δx^D`.
    #[inline]
    pub fn cell_volume(&self) -> f64 {
        self.dx().powi(D as i32)
    }

    #[inline]
    pub fn stride(&self, axis: usize) -> usize {
        self.n.pow((D - 1 - axis) as u32)
    }

    #[inline]
    pub fn multi_index(&self, mut idx: usize) -> [usize; D] {
        let mut m = [0; D];
        for a in (0..D).rev() {
            m[a] = idx % self.n;
            idx /= self.n;
        }
        m
    }

    #[inline]
    pub fn flat_index(&self, m: &[usize; D]) -> usize {
        m.iter().fold(0, |acc, &i| acc * self.n + i)
    }

    #[inline]
    pub fn coords(&self, idx: usize) -> Vector<D> {
        let m = self.multi_index(idx);
        let dx = self.dx();
        std::array::from_fn(|a| -self.half_width + m[a] as f64 * dx)
    }

    /// Index of the node `offset` steps along `axis`, wrapping periodically.
    #[inline]
    pub fn neighbor(&self, idx: usize, axis: usize, offset: isize) -> usize {
        let stride = self.stride(axis);
        let i = (idx / stride) % self.n;
        let j = (i as isize + offset).rem_euclid(self.n as isize) as usize;
        idx + j * stride - i * stride
    }

    /// Maps a point into the fundamental box `[-L, L)^D`.
    #[inline]
    pub fn wrap(&self, x: &Vector<D>) -> Vector<D> {
        let period = 2.0 * self.half_width;
        std::array::from_fn(|a| {
            let mut y = (x[a] + self.half_width).rem_euclid(period) - self.half_width;
            if y >= self.half_width {
                y -= period;
            }
            y
        })
    }

    /// Shortest periodic displacement `x - y`.
    #[inline]
    pub fn periodic_difference(&self, x: &Vector<D>, y: &Vector<D>) -> Vector<D> {
        let period = 2.0 * self.half_width;
        std::array::from_fn(|a| {
            let d = x[a] - y[a];
            d - period * (d / period).round()
        })
    }

    /// The grid with doubled resolution on the same box.
    pub fn refined(&self) -> Self {
        Self::new(2 * self.n, self.half_width)
    }
}

/// A field with `ncomp` real components per node, stored node-major.
#[derive(Clone, Debug, PartialEq)]
pub struct GridField<const D: usize> {
    pub grid: Grid<D>,
    pub ncomp: usize,
    pub data: Vec<f64>,
}

impl<const D: usize> GridField<D> {
    pub fn zeros(grid: Grid<D>, ncomp: usize) -> Self {
        Self {
            grid,
            ncomp,
            data: vec![0.0; grid.len() * ncomp],
        }
    }

    pub fn from_fn(grid: Grid<D>, ncomp: usize, mut f: impl FnMut(&Vector<D>, &mut [f64])) -> Self {
        let mut field = Self::zeros(grid, ncomp);
        for (idx, chunk) in field.data.chunks_exact_mut(ncomp).enumerate() {
            f(&grid.coords(idx), chunk);
        }
        field
    }

    pub fn from_vectors(grid: Grid<D>, values: &[Vector<D>]) -> Self {
        assert_eq!(values.len(), grid.len());
        Self {
            grid,
            ncomp: D,
            data: values.iter().flat_map(|v| v.iter().copied()).collect(),
        }
    }

    /// Pointwise evaluation of an analytic field at the grid nodes.
    pub fn sample(field: &dyn AnalyticField<D>, grid: Grid<D>, t: f64) -> Self {
        Self::from_fn(grid, D, |x, out| out.copy_from_slice(&field.eval(t, x)))
    }

    #[inline]
    pub fn get(&self, node: usize, comp: usize) -> f64 {
        self.data[node * self.ncomp + comp]
    }

    #[inline]
    pub fn node(&self, node: usize) -> &[f64] {
        &self.data[node * self.ncomp..(node + 1) * self.ncomp]
    }

    #[inline]
    pub fn node_mut(&mut self, node: usize) -> &mut [f64] {
        &mut self.data[node * self.ncomp..(node + 1) * self.ncomp]
    }

    /// Node value as a `D`-vector; requires `ncomp == D`.
    #[inline]
    pub fn vector(&self, node: usize) -> Vector<D> {
        debug_assert_eq!(self.ncomp, D);
        std::array::from_fn(|a| self.data[node * D + a])
    }

    pub fn component(&self, comp: usize) -> GridField<D> {
        GridField {
            grid: self.grid,
            ncomp: 1,
            data: self.data.iter().skip(comp).step_by(self.ncomp).copied().collect(),
        }
    }

    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|x| x.is_finite())
    }

    pub fn scaled(&self, s: f64) -> Self {
        let mut out = self.clone();
        out.data.iter_mut().for_each(|x| *x *= s);
        out
    }

    /// `self += s * other`
    pub fn axpy(&mut self, s: f64, other: &Self) {
        assert_eq!(self.data.len(), other.data.len());
        for (a, b) in self.data.iter_mut().zip(&other.data) {
            *a += s * b;
        }
    }

    pub fn linear_combination(a: f64, x: &Self, b: f64, y: &Self) -> Self {
        let mut out = x.scaled(a);
        out.axpy(b, y);
        out
    }

    /// Max over nodes of the Euclidean norm of the node value.
    pub fn sup_norm(&self) -> f64 {
        self.data
            .chunks_exact(self.ncomp)
            .map(|c| c.iter().map(|x| x * x).sum::<f64>().sqrt())
            .fold(0.0, f64::max)
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().fold(0.0_f64, |m, x| m.max(x.abs()))
    }

    /// Box quadrature `∫ f·g dx`.
    pub fn inner(&self, other: &Self) -> f64 {
        assert_eq!(self.data.len(), other.data.len());
        self.data.iter().zip(&other.data).map(|(a, b)| a * b).sum::<f64>() * self.grid.cell_volume()
    }

    /// `‖f‖²_{L²}` by box quadrature.
    pub fn l2_norm_sq(&self) -> f64 {
        self.inner(self)
    }

    pub fn l2_norm(&self) -> f64 {
        self.l2_norm_sq().sqrt()
    }

    /// `(∫ |f|^p dx)^{1/p}`, pointwise Euclidean magnitude.
    pub fn lp_norm(&self, p: f64) -> f64 {
        let s: f64 = self
            .data
            .chunks_exact(self.ncomp)
            .map(|c| c.iter().map(|x| x * x).sum::<f64>().sqrt().powf(p))
            .sum();
        (s * self.grid.cell_volume()).powf(1.0 / p)
    }

    /// Second-order central difference `∂_axis f^comp` at one node.
    #[inline]
    pub fn d1(&self, node: usize, comp: usize, axis: usize) -> f64 {
        let g = &self.grid;
        let p = g.neighbor(node, axis, 1);
        let m = g.neighbor(node, axis, -1);
        (self.get(p, comp) - self.get(m, comp)) / (2.0 * g.dx())
    }

    /// Second-order central difference `∂_i ∂_j f^comp` at one node: the
    /// compact three-point stencil on the diagonal, the four-corner stencil
    /// off it.
    #[inline]
    pub fn d2(&self, node: usize, comp: usize, i: usize, j: usize) -> f64 {
        let g = &self.grid;
        let h = g.dx();
        if i == j {
            let p = g.neighbor(node, i, 1);
            let m = g.neighbor(node, i, -1);
            (self.get(p, comp) - 2.0 * self.get(node, comp) + self.get(m, comp)) / (h * h)
        } else {
            let pi = g.neighbor(node, i, 1);
            let mi = g.neighbor(node, i, -1);
            let pp = g.neighbor(pi, j, 1);
            let pm = g.neighbor(pi, j, -1);
            let mp = g.neighbor(mi, j, 1);
            let mm = g.neighbor(mi, j, -1);
            (self.get(pp, comp) - self.get(pm, comp) - self.get(mp, comp) + self.get(mm, comp)) / (4.0 * h * h)
        }
    }

    /// Full central-difference gradient; component `comp * D + axis`.
    pub fn gradient(&self) -> GridField<D> {
        let mut out = GridField::zeros(self.grid, self.ncomp * D);
        for node in 0..self.grid.len() {
            for c in 0..self.ncomp {
                for a in 0..D {
                    out.data[node * self.ncomp * D + c * D + a] = self.d1(node, c, a);
                }
            }
        }
        out
    }

    /// `Σ_c Σ_i ‖∂_i f^c‖²` with central differences.
    pub fn h1_seminorm_sq(&self) -> f64 {
        self.gradient().l2_norm_sq()
    }

    /// `‖f‖²_{W^{1,2}} = ‖f‖² + ‖Df‖²`.
    pub fn w12_norm_sq(&self) -> f64 {
        self.l2_norm_sq() + self.h1_seminorm_sq()
    }

    pub fn w12_norm(&self) -> f64 {
        self.w12_norm_sq().sqrt()
    }

    /// Every other node along every axis (requires even `n`).
    pub fn coarsened(&self) -> GridField<D> {
        assert!(self.grid.n.is_multiple_of(2));
        let coarse = Grid::<D>::new(self.grid.n / 2, self.grid.half_width);
        let mut out = GridField::zeros(coarse, self.ncomp);
        for idx in 0..coarse.len() {
            let m = coarse.multi_index(idx);
            let fine = self.grid.flat_index(&m.map(|i| 2 * i));
            out.node_mut(idx).copy_from_slice(self.node(fine));
        }
        out
    }
}

/// `Σ_α ∂_α f^α` with second-order central periodic differences.
pub fn divergence<const D: usize>(f: &GridField<D>) -> GridField<D> {
    assert_eq!(f.ncomp, D, "divergence needs a D-component field");
    let mut out = GridField::zeros(f.grid, 1);
    for node in 0..f.grid.len() {
        out.data[node] = (0..D).map(|a| f.d1(node, a, a)).sum();
    }
    out
}
