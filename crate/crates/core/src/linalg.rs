//! Fixed-size vector and matrix helpers for `D`-dimensional points.
//!
//! Index convention used across the crate: a Jacobian entry `m[a][i]` is
//! `∂_i f^a`, and a Hessian entry `h[a][i][j]` is `∂_i ∂_j f^a`.

pub type Vector<const D: usize> = [f64; D];
pub type Matrix<const D: usize> = [[f64; D]; D];
pub type Tensor3<const D: usize> = [[[f64; D]; D]; D];

#[inline]
pub fn zeros<const D: usize>() -> Vector<D> {
    [0.0; D]
}

#[inline]
pub fn zero_matrix<const D: usize>() -> Matrix<D> {
    [[0.0; D]; D]
}

#[inline]
pub fn zero_tensor<const D: usize>() -> Tensor3<D> {
    [[[0.0; D]; D]; D]
}

#[inline]
pub fn identity<const D: usize>() -> Matrix<D> {
    let mut m = zero_matrix();
    for (i, row) in m.iter_mut().enumerate() {
        row[i] = 1.0;
    }
    m
}

#[inline]
pub fn unit<const D: usize>(i: usize) -> Vector<D> {
    let mut e = zeros();
    e[i] = 1.0;
    e
}

#[inline]
pub fn dot<const D: usize>(a: &Vector<D>, b: &Vector<D>) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

#[inline]
pub fn norm<const D: usize>(a: &Vector<D>) -> f64 {
    dot(a, a).sqrt()
}

#[inline]
pub fn add<const D: usize>(a: &Vector<D>, b: &Vector<D>) -> Vector<D> {
    std::array::from_fn(|i| a[i] + b[i])
}

#[inline]
pub fn sub<const D: usize>(a: &Vector<D>, b: &Vector<D>) -> Vector<D> {
    std::array::from_fn(|i| a[i] - b[i])
}

#[inline]
pub fn scale<const D: usize>(s: f64, a: &Vector<D>) -> Vector<D> {
    std::array::from_fn(|i| s * a[i])
}

/// `y += s * x`
#[inline]
pub fn axpy<const D: usize>(y: &mut Vector<D>, s: f64, x: &Vector<D>) {
    for (yi, xi) in y.iter_mut().zip(x) {
        *yi += s * xi;
    }
}

#[inline]
pub fn mat_vec<const D: usize>(m: &Matrix<D>, v: &Vector<D>) -> Vector<D> {
    std::array::from_fn(|a| dot(&m[a], v))
}

#[inline]
pub fn mat_mul<const D: usize>(a: &Matrix<D>, b: &Matrix<D>) -> Matrix<D> {
    let mut c = zero_matrix();
    for i in 0..D {
        for k in 0..D {
            let aik = a[i][k];
            for j in 0..D {
                c[i][j] += aik * b[k][j];
            }
        }
    }
    c
}

#[inline]
pub fn mat_add_scaled<const D: usize>(acc: &mut Matrix<D>, s: f64, m: &Matrix<D>) {
    for (ra, rm) in acc.iter_mut().zip(m) {
        for (a, x) in ra.iter_mut().zip(rm) {
            *a += s * x;
        }
    }
}

#[inline]
pub fn transpose<const D: usize>(m: &Matrix<D>) -> Matrix<D> {
    std::array::from_fn(|i| std::array::from_fn(|j| m[j][i]))
}

pub fn max_abs<const D: usize>(m: &Matrix<D>) -> f64 {
    m.iter()
        .flat_map(|r| r.iter())
        .fold(0.0_f64, |acc, x| acc.max(x.abs()))
}

/// Frobenius norm.
pub fn frobenius<const D: usize>(m: &Matrix<D>) -> f64 {
    m.iter()
        .flat_map(|r| r.iter())
        .map(|x| x * x)
        .sum::<f64>()
        .sqrt()
}

/// Determinant for the supported dimensions (1, 2, 3).
pub fn det<const D: usize>(m: &Matrix<D>) -> f64 {
    match D {
        1 => m[0][0],
        2 => m[0][0] * m[1][1] - m[0][1] * m[1][0],
        3 => {
            m[0][0] * (m[1][1] * m[2][2] - m[1][2] * m[2][1])
                - m[0][1] * (m[1][0] * m[2][2] - m[1][2] * m[2][0])
                + m[0][2] * (m[1][0] * m[2][1] - m[1][1] * m[2][0])
        }
        _ => {
            let dm = nalgebra::DMatrix::from_fn(D, D, |i, j| m[i][j]);
            dm.determinant()
        }
    }
}

/// Eigenvalues of a symmetric matrix, ascending.
pub fn symmetric_eigenvalues<const D: usize>(m: &Matrix<D>) -> Vec<f64> {
    let dm = nalgebra::DMatrix::from_fn(D, D, |i, j| 0.5 * (m[i][j] + m[j][i]));
    let mut ev: Vec<f64> = dm.symmetric_eigenvalues().iter().copied().collect();
    ev.sort_by(f64::total_cmp);
    ev
}

/// Perpendicular vector in 2-D: `(x, y) -> (-y, x)`.
#[inline]
pub fn perp(x: &Vector<2>) -> Vector<2> {
    [-x[1], x[0]]
}
