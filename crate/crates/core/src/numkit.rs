//! Small dense linear algebra and finite-difference helpers.
//!
//! Everything here works on row-major `f64` storage and is sized for
//! matrices of a few dozen entries: constraint blocks, 2×2 Hessians and
//! the 5×5 iteration matrices of the three-block counterexample.

use crate::error::{Error, Result};
use std::fmt;
use std::ops::{Index, IndexMut};

/// Pivots below this magnitude (relative to the largest entry, floored at 1)
/// make [`lu_decompose`] report a singular matrix.
pub const PIVOT_FLOOR: f64 = 1e-12;

/// Default deflation tolerance for [`eigvals_dense`].
pub const EIG_TOL: f64 = 1e-10;

/// Dense row-major matrix with finite entries.
#[derive(Clone, PartialEq)]
pub struct Matrix {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl Matrix {
    pub fn new(rows: usize, cols: usize, data: Vec<f64>) -> Result<Self> {
        if rows * cols != data.len() {
            return Err(Error::dims(
                format!("{rows}x{cols} = {} entries", rows * cols),
                format!("{} entries", data.len()),
            ));
        }
        if data.iter().any(|v| !v.is_finite()) {
            return Err(Error::non_finite("matrix entries"));
        }
        Ok(Self { rows, cols, data })
    }

    /// Builds a matrix from equally long rows.
    pub fn from_rows(rows: &[&[f64]]) -> Result<Self> {
        let cols = rows.first().map_or(0, |r| r.len());
        if let Some(bad) = rows.iter().find(|r| r.len() != cols) {
            return Err(Error::dims(format!("{cols} columns"), bad.len()));
        }
        let data = rows.iter().flat_map(|r| r.iter().copied()).collect();
        Self::new(rows.len(), cols, data)
    }

    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self {
            rows,
            cols,
            data: vec![0.0; rows * cols],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m[(i, i)] = 1.0;
        }
        m
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn is_square(&self) -> bool {
        self.rows == self.cols
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn column(&self, j: usize) -> Vec<f64> {
        (0..self.rows).map(|i| self[(i, j)]).collect()
    }

    pub fn transpose(&self) -> Self {
        let mut t = Self::zeros(self.cols, self.rows);
        for i in 0..self.rows {
            for j in 0..self.cols {
                t[(j, i)] = self[(i, j)];
            }
        }
        t
    }

    pub fn scale(&self, s: f64) -> Self {
        Self {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().map(|v| v * s).collect(),
        }
    }

    pub fn trace(&self) -> f64 {
        (0..self.rows.min(self.cols)).map(|i| self[(i, i)]).sum()
    }

    /// Largest absolute entry.
    pub fn max_abs(&self) -> f64 {
        self.data.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    /// Largest absolute entrywise difference; panics on shape mismatch.
    pub fn max_abs_diff(&self, other: &Matrix) -> f64 {
        assert_eq!((self.rows, self.cols), (other.rows, other.cols));
        self.data
            .iter()
            .zip(&other.data)
            .fold(0.0, |m, (a, b)| m.max((a - b).abs()))
    }

    pub fn mul_vec(&self, x: &[f64]) -> Result<Vec<f64>> {
        if x.len() != self.cols {
            return Err(Error::dims(self.cols, x.len()));
        }
        Ok((0..self.rows)
            .map(|i| self.row(i).iter().zip(x).map(|(a, b)| a * b).sum())
            .collect())
    }
}

impl Index<(usize, usize)> for Matrix {
    type Output = f64;
    fn index(&self, (i, j): (usize, usize)) -> &f64 {
        &self.data[i * self.cols + j]
    }
}

impl IndexMut<(usize, usize)> for Matrix {
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut f64 {
        &mut self.data[i * self.cols + j]
    }
}

impl fmt::Debug for Matrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "Matrix {}x{} [", self.rows, self.cols)?;
        for i in 0..self.rows {
            writeln!(f, "  {:?}", self.row(i))?;
        }
        write!(f, "]")
    }
}

/// Complex number returned by the eigenvalue routine.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ComplexPair {
    pub re: f64,
    pub im: f64,
}

impl ComplexPair {
    pub fn new(re: f64, im: f64) -> Self {
        Self { re, im }
    }

    pub fn modulus(&self) -> f64 {
        self.re.hypot(self.im)
    }

    pub fn arg(&self) -> f64 {
        self.im.atan2(self.re)
    }
}

pub fn matmul(a: &Matrix, b: &Matrix) -> Result<Matrix> {
    if a.cols != b.rows {
        return Err(Error::dims(
            format!("{} rows on the right", a.cols),
            format!("{} rows", b.rows),
        ));
    }
    let mut c = Matrix::zeros(a.rows, b.cols);
    for i in 0..a.rows {
        for k in 0..a.cols {
            let aik = a[(i, k)];
            if aik == 0.0 {
                continue;
            }
            for j in 0..b.cols {
                c[(i, j)] += aik * b[(k, j)];
            }
        }
    }
    Ok(c)
}

/// Partial-pivot LU factorization `PA = LU`, packed in one matrix.
#[derive(Debug, Clone)]
pub struct Lu {
    packed: Matrix,
    perm: Vec<usize>,
    sign: f64,
}

pub fn lu_decompose(a: &Matrix) -> Result<Lu> {
    if !a.is_square() {
        return Err(Error::dims("square matrix", format!("{}x{}", a.rows, a.cols)));
    }
    let n = a.rows;
    let floor = PIVOT_FLOOR * a.max_abs().max(1.0);
    let mut m = a.clone();
    let mut perm: Vec<usize> = (0..n).collect();
    let mut sign = 1.0;
    for k in 0..n {
        let (p, pmax) = (k..n)
            .map(|i| (i, m[(i, k)].abs()))
            .fold((k, -1.0), |best, cur| if cur.1 > best.1 { cur } else { best });
        if pmax <= floor {
            return Err(Error::SingularMatrix {
                column: k,
                pivot: pmax,
            });
        }
        if p != k {
            for j in 0..n {
                m.data.swap(k * n + j, p * n + j);
            }
            perm.swap(k, p);
            sign = -sign;
        }
        let pivot = m[(k, k)];
        for i in k + 1..n {
            let factor = m[(i, k)] / pivot;
            m[(i, k)] = factor;
            for j in k + 1..n {
                m[(i, j)] -= factor * m[(k, j)];
            }
        }
    }
    Ok(Lu {
        packed: m,
        perm,
        sign,
    })
}

impl Lu {
    pub fn solve(&self, b: &[f64]) -> Result<Vec<f64>> {
        let n = self.packed.rows;
        if b.len() != n {
            return Err(Error::dims(n, b.len()));
        }
        let mut x: Vec<f64> = self.perm.iter().map(|&p| b[p]).collect();
        for i in 0..n {
            for j in 0..i {
                x[i] -= self.packed[(i, j)] * x[j];
            }
        }
        for i in (0..n).rev() {
            for j in i + 1..n {
                x[i] -= self.packed[(i, j)] * x[j];
            }
            x[i] /= self.packed[(i, i)];
        }
        Ok(x)
    }

    pub fn determinant(&self) -> f64 {
        (0..self.packed.rows).fold(self.sign, |d, i| d * self.packed[(i, i)])
    }
}

pub fn solve_linear(a: &Matrix, b: &[f64]) -> Result<Vec<f64>> {
    lu_decompose(a)?.solve(b)
}

/// Solves `A X = B` column by column.
pub fn solve_matrix(a: &Matrix, b: &Matrix) -> Result<Matrix> {
    if b.rows != a.rows {
        return Err(Error::dims(a.rows, b.rows));
    }
    let lu = lu_decompose(a)?;
    let mut x = Matrix::zeros(a.cols, b.cols);
    for j in 0..b.cols {
        let col = lu.solve(&b.column(j))?;
        for (i, v) in col.into_iter().enumerate() {
            x[(i, j)] = v;
        }
    }
    Ok(x)
}

pub fn inverse(a: &Matrix) -> Result<Matrix> {
    solve_matrix(a, &Matrix::identity(a.rows))
}

/// Determinant via LU; an exactly singular matrix yields 0.
pub fn determinant(a: &Matrix) -> Result<f64> {
    match lu_decompose(a) {
        Ok(lu) => Ok(lu.determinant()),
        Err(Error::SingularMatrix { .. }) => Ok(0.0),
        Err(e) => Err(e),
    }
}

/// Smallest eigenvalue of a symmetric 2×2 matrix given by its entries.
pub fn sym_eig_min_2x2_entries(h11: f64, h12: f64, h22: f64) -> f64 {
    0.5 * (h11 + h22) - (0.5 * (h11 - h22)).hypot(h12)
}

/// Largest eigenvalue of a symmetric 2×2 matrix given by its entries.
pub fn sym_eig_max_2x2_entries(h11: f64, h12: f64, h22: f64) -> f64 {
    0.5 * (h11 + h22) + (0.5 * (h11 - h22)).hypot(h12)
}

/// Smallest eigenvalue of a symmetric 2×2 matrix.
///
/// The off-diagonal entries are averaged, so mildly asymmetric FD Hessians
/// are accepted; asymmetry beyond `1e-8·(1+‖H‖)` is rejected.
pub fn sym_eig_min_2x2(h: &Matrix) -> Result<f64> {
    if h.rows != 2 || h.cols != 2 {
        return Err(Error::dims("2x2", format!("{}x{}", h.rows, h.cols)));
    }
    let asym = (h[(0, 1)] - h[(1, 0)]).abs();
    if asym > 1e-8 * (1.0 + h.max_abs()) {
        return Err(Error::invalid(
            "H",
            format!("not symmetric (|H12 - H21| = {asym:e})"),
        ));
    }
    let off = 0.5 * (h[(0, 1)] + h[(1, 0)]);
    Ok(sym_eig_min_2x2_entries(h[(0, 0)], off, h[(1, 1)]))
}

/// Reduces a square matrix to upper Hessenberg form by Householder
/// reflections. The result is similar to the input.
pub fn hessenberg(a: &Matrix) -> Result<Matrix> {
    if !a.is_square() {
        return Err(Error::dims("square matrix", format!("{}x{}", a.rows, a.cols)));
    }
    let n = a.rows;
    let mut h = a.clone();
    for k in 0..n.saturating_sub(2) {
        let norm = (k + 1..n).map(|i| h[(i, k)].powi(2)).sum::<f64>().sqrt();
        if norm == 0.0 {
            continue;
        }
        let alpha = if h[(k + 1, k)] > 0.0 { -norm } else { norm };
        let mut v: Vec<f64> = (k + 1..n).map(|i| h[(i, k)]).collect();
        v[0] -= alpha;
        let vnorm2: f64 = v.iter().map(|x| x * x).sum();
        if vnorm2 == 0.0 {
            continue;
        }
        // H <- (I - 2vv'/v'v) H
        for j in 0..n {
            let dot: f64 = (0..v.len()).map(|i| v[i] * h[(k + 1 + i, j)]).sum();
            let f = 2.0 * dot / vnorm2;
            for i in 0..v.len() {
                h[(k + 1 + i, j)] -= f * v[i];
            }
        }
        // H <- H (I - 2vv'/v'v)
        for i in 0..n {
            let dot: f64 = (0..v.len()).map(|j| h[(i, k + 1 + j)] * v[j]).sum();
            let f = 2.0 * dot / vnorm2;
            for j in 0..v.len() {
                h[(i, k + 1 + j)] -= f * v[j];
            }
        }
        for i in k + 2..n {
            h[(i, k)] = 0.0;
        }
    }
    Ok(h)
}

/// All eigenvalues of a square matrix (dimension ≤ 16).
///
/// Hessenberg reduction followed by Francis double-shift QR sweeps. A
/// subdiagonal entry is treated as zero once it is negligible next to its
/// two diagonal neighbours; after 30 sweeps on the same block the looser
/// relative threshold `tol` is accepted instead.
pub fn eigvals_dense(m: &Matrix, tol: f64) -> Result<Vec<ComplexPair>> {
    if !m.is_square() {
        return Err(Error::dims("square matrix", format!("{}x{}", m.rows, m.cols)));
    }
    if m.rows > 16 {
        return Err(Error::invalid("M", format!("dimension {} exceeds 16", m.rows)));
    }
    if !(tol > 0.0) {
        return Err(Error::invalid("tol", "must be positive"));
    }
    let n = m.rows;
    if n == 0 {
        return Ok(Vec::new());
    }
    let mut a = hessenberg(m)?;
    let max_sweeps = 100 * n * n;
    let anorm = a.data.iter().map(|v| v.abs()).sum::<f64>().max(f64::MIN_POSITIVE);
    // Deflate at working precision; the caller's tolerance is accepted only
    // once a block has stalled for a while.
    let small = |sub: f64, s: f64, its: usize| {
        sub.abs() <= f64::EPSILON * s || (its >= 30 && sub.abs() <= tol * s)
    };

    let mut eig = vec![ComplexPair::new(0.0, 0.0); n];
    let mut shift_acc = 0.0;
    let mut sweeps = 0usize;
    let mut nn = n as isize - 1;
    while nn >= 0 {
        let mut its = 0;
        loop {
            let nu = nn as usize;
            // locate the active unreduced block [l, nn]
            let mut l = nu;
            while l >= 1 {
                let mut s = a[(l - 1, l - 1)].abs() + a[(l, l)].abs();
                if s == 0.0 {
                    s = anorm;
                }
                if small(a[(l, l - 1)], s, its) {
                    a[(l, l - 1)] = 0.0;
                    break;
                }
                l -= 1;
            }
            let x = a[(nu, nu)];
            if l == nu {
                eig[nu] = ComplexPair::new(x + shift_acc, 0.0);
                nn -= 1;
                break;
            }
            let y = a[(nu - 1, nu - 1)];
            let w = a[(nu, nu - 1)] * a[(nu - 1, nu)];
            if l == nu - 1 {
                let p = 0.5 * (y - x);
                let q = p * p + w;
                let z = q.abs().sqrt();
                let xs = x + shift_acc;
                if q >= 0.0 {
                    let z = p + z.copysign(p);
                    let hi = xs + z;
                    let lo = if z != 0.0 { xs - w / z } else { hi };
                    eig[nu - 1] = ComplexPair::new(hi, 0.0);
                    eig[nu] = ComplexPair::new(lo, 0.0);
                } else {
                    eig[nu - 1] = ComplexPair::new(xs + p, -z);
                    eig[nu] = ComplexPair::new(xs + p, z);
                }
                nn -= 2;
                break;
            }
            if sweeps >= max_sweeps {
                return Err(Error::ConvergenceFailure { sweeps });
            }
            let (mut x, mut y, mut w) = (x, y, w);
            if its == 10 || its == 20 {
                // exceptional shift
                shift_acc += x;
                for i in 0..=nu {
                    a[(i, i)] -= x;
                }
                let s = a[(nu, nu - 1)].abs() + a[(nu - 1, nu - 2)].abs();
                x = 0.75 * s;
                y = x;
                w = -0.4375 * s * s;
            }
            its += 1;
            sweeps += 1;
            francis_sweep(&mut a, l, nu, x, y, w);
        }
    }
    Ok(eig)
}

/// One implicit double-shift QR sweep on the active block `[l, nn]`.
fn francis_sweep(a: &mut Matrix, l: usize, nn: usize, x: f64, y: f64, w: f64) {
    let mut p: f64;
    let mut q: f64;
    let mut r: f64;
    let mut z;
    let mut m = nn - 2;
    loop {
        z = a[(m, m)];
        let rr = x - z;
        let ss = y - z;
        p = (rr * ss - w) / a[(m + 1, m)] + a[(m, m + 1)];
        q = a[(m + 1, m + 1)] - z - rr - ss;
        r = a[(m + 2, m + 1)];
        let s = p.abs() + q.abs() + r.abs();
        p /= s;
        q /= s;
        r /= s;
        if m == l {
            break;
        }
        let u = a[(m, m - 1)].abs() * (q.abs() + r.abs());
        let v = p.abs() * (a[(m - 1, m - 1)].abs() + z.abs() + a[(m + 1, m + 1)].abs());
        if u + v == v {
            break;
        }
        m -= 1;
    }
    for i in m + 2..=nn {
        a[(i, i - 2)] = 0.0;
        if i != m + 2 {
            a[(i, i - 3)] = 0.0;
        }
    }
    let mut xk = 0.0;
    for k in m..nn {
        if k != m {
            p = a[(k, k - 1)];
            q = a[(k + 1, k - 1)];
            r = if k != nn - 1 { a[(k + 2, k - 1)] } else { 0.0 };
            xk = p.abs() + q.abs() + r.abs();
            if xk != 0.0 {
                p /= xk;
                q /= xk;
                r /= xk;
            }
        }
        let s = (p * p + q * q + r * r).sqrt().copysign(p);
        if s == 0.0 {
            continue;
        }
        if k == m {
            if l != m {
                a[(k, k - 1)] = -a[(k, k - 1)];
            }
        } else {
            a[(k, k - 1)] = -s * xk;
        }
        p += s;
        let hx = p / s;
        let hy = q / s;
        let hz = r / s;
        q /= p;
        r /= p;
        for j in k..=nn {
            let mut t = a[(k, j)] + q * a[(k + 1, j)];
            if k != nn - 1 {
                t += r * a[(k + 2, j)];
                a[(k + 2, j)] -= t * hz;
            }
            a[(k + 1, j)] -= t * hy;
            a[(k, j)] -= t * hx;
        }
        let mmin = if nn < k + 3 { nn } else { k + 3 };
        for i in l..=mmin {
            let mut t = hx * a[(i, k)] + hy * a[(i, k + 1)];
            if k != nn - 1 {
                t += hz * a[(i, k + 2)];
                a[(i, k + 2)] -= t * r;
            }
            a[(i, k + 1)] -= t * q;
            a[(i, k)] -= t;
        }
    }
}

/// Largest eigenvalue modulus, computed with tolerance [`EIG_TOL`].
pub fn spectral_radius(m: &Matrix) -> Result<f64> {
    Ok(eigvals_dense(m, EIG_TOL)?
        .iter()
        .fold(0.0, |acc, z| acc.max(z.modulus())))
}

/// Step size `1e-5·max(1, ‖x‖)` used when no explicit FD step is given.
pub fn default_fd_step(x: &[f64]) -> f64 {
    1e-5 * norm2(x).max(1.0)
}

/// Central-difference gradient of a scalar field.
pub fn fd_gradient<F>(f: F, x: &[f64], h: f64) -> Result<Vec<f64>>
where
    F: Fn(&[f64]) -> f64,
{
    if !(h > 0.0) {
        return Err(Error::invalid("h", "finite-difference step must be positive"));
    }
    let mut probe = x.to_vec();
    let mut g = Vec::with_capacity(x.len());
    for i in 0..x.len() {
        probe[i] = x[i] + h;
        let fp = f(&probe);
        probe[i] = x[i] - h;
        let fm = f(&probe);
        probe[i] = x[i];
        if !fp.is_finite() || !fm.is_finite() {
            return Err(Error::non_finite(format!("f near coordinate {i}")));
        }
        g.push((fp - fm) / (2.0 * h));
    }
    Ok(g)
}

/// Symmetrized central-difference Jacobian of a 2D gradient field.
///
/// Returns the Hessian estimate and the raw asymmetry `|H12 - H21|` before
/// averaging.
pub fn fd_hessian_2x2<G>(grad: G, u: [f64; 2], h: f64) -> (Matrix, f64)
where
    G: Fn([f64; 2]) -> [f64; 2],
{
    let gxp = grad([u[0] + h, u[1]]);
    let gxm = grad([u[0] - h, u[1]]);
    let gyp = grad([u[0], u[1] + h]);
    let gym = grad([u[0], u[1] - h]);
    let h11 = (gxp[0] - gxm[0]) / (2.0 * h);
    let h21 = (gxp[1] - gxm[1]) / (2.0 * h);
    let h12 = (gyp[0] - gym[0]) / (2.0 * h);
    let h22 = (gyp[1] - gym[1]) / (2.0 * h);
    let off = 0.5 * (h12 + h21);
    let m = Matrix {
        rows: 2,
        cols: 2,
        data: vec![h11, off, off, h22],
    };
    (m, (h12 - h21).abs())
}

pub fn norm2(x: &[f64]) -> f64 {
    x.iter().map(|v| v * v).sum::<f64>().sqrt()
}

pub fn dot(x: &[f64], y: &[f64]) -> f64 {
    x.iter().zip(y).map(|(a, b)| a * b).sum()
}
