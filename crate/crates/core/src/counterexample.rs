//! The three-block ADMM counterexample with a null objective.
//!
//! For `A = (A₁, A₂, A₃)` nonsingular, ADMM on `A₁x₁ + A₂x₂ + A₃x₃ = 0`
//! is a linear recursion `(x₂, x₃, w) ← M (x₂, x₃, w)` with `M = L⁻¹R`.
//! With a constant penalty (`β = 1`) and the classic matrix
//! `[[1,1,1],[1,1,2],[1,2,2]]` the spectral radius of `M` exceeds one;
//! a growing penalty scales the multiplier rows by `1/β` and restores
//! contraction.

use crate::error::{Error, Result};
use crate::numkit::{determinant, eigvals_dense, matmul, norm2, solve_matrix, spectral_radius, ComplexPair, Matrix, EIG_TOL};

/// Iterates whose norm exceeds this are treated as divergent.
pub const DIVERGENCE_BOUND: f64 = 1e12;

#[derive(Debug, Clone, PartialEq)]
pub struct CeProblem {
    a: Matrix,
    pub beta: f64,
    pub rho0: f64,
}

impl CeProblem {
    pub fn new(a: Matrix, beta: f64, rho0: f64) -> Result<Self> {
        if a.rows() != 3 || a.cols() != 3 {
            return Err(Error::dims("3x3", format!("{}x{}", a.rows(), a.cols())));
        }
        if determinant(&a)?.abs() <= 1e-12 {
            return Err(Error::invalid("A", "matrix is singular"));
        }
        if !(beta >= 1.0 && beta.is_finite()) {
            return Err(Error::invalid("beta", "must be a finite value ≥ 1"));
        }
        if !(rho0 > 0.0 && rho0.is_finite()) {
            return Err(Error::invalid("rho0", "must be positive"));
        }
        Ok(Self { a, beta, rho0 })
    }

    /// The classic divergent instance `A = [[1,1,1],[1,1,2],[1,2,2]]`, `ρ⁽⁰⁾ = 1`.
    pub fn classic(beta: f64) -> Result<Self> {
        let a = Matrix::from_rows(&[&[1.0, 1.0, 1.0], &[1.0, 1.0, 2.0], &[1.0, 2.0, 2.0]])?;
        Self::new(a, beta, 1.0)
    }

    pub fn matrix(&self) -> &Matrix {
        &self.a
    }

    fn col(&self, j: usize) -> [f64; 3] {
        [self.a[(0, j)], self.a[(1, j)], self.a[(2, j)]]
    }

    /// `A_iᵀA_j`
    fn gram(&self, i: usize, j: usize) -> f64 {
        (0..3).map(|r| self.a[(r, i)] * self.a[(r, j)]).sum()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Lrm {
    pub l: Matrix,
    pub r: Matrix,
    pub m: Matrix,
}

/// Builds `L`, `R` and `M = L⁻¹R` acting on `(x₂, x₃, w₁, w₂, w₃)`.
pub fn build_lrm(ce: &CeProblem) -> Result<Lrm> {
    let (a1, a2, a3) = (ce.col(0), ce.col(1), ce.col(2));
    let mut l = Matrix::zeros(5, 5);
    l[(0, 0)] = ce.gram(1, 1);
    l[(1, 0)] = ce.gram(2, 1);
    l[(1, 1)] = ce.gram(2, 2);
    for i in 0..3 {
        l[(2 + i, 0)] = a2[i];
        l[(2 + i, 1)] = a3[i];
        l[(2 + i, 2 + i)] = ce.beta;
    }

    let mut r = Matrix::zeros(5, 5);
    r[(0, 1)] = -ce.gram(1, 2);
    for i in 0..3 {
        r[(0, 2 + i)] = a2[i];
        r[(1, 2 + i)] = a3[i];
        r[(2 + i, 2 + i)] = 1.0;
    }
    // subtract the x₁ elimination term (1/A₁ᵀA₁)·u·vᵀ
    let u = [ce.gram(1, 0), ce.gram(2, 0), a1[0], a1[1], a1[2]];
    let v = [-ce.gram(0, 1), -ce.gram(0, 2), a1[0], a1[1], a1[2]];
    let s = 1.0 / ce.gram(0, 0);
    for i in 0..5 {
        for j in 0..5 {
            r[(i, j)] -= s * u[i] * v[j];
        }
    }
    let m = solve_matrix(&l, &r)?;
    Ok(Lrm { l, r, m })
}

pub fn ce_spectral_radius(ce: &CeProblem) -> Result<f64> {
    spectral_radius(&build_lrm(ce)?.m)
}

/// Eigenvalue of `M` with the largest modulus (positive imaginary part
/// preferred for a conjugate pair).
pub fn ce_dominant_eigenvalue(ce: &CeProblem) -> Result<ComplexPair> {
    let ev = eigvals_dense(&build_lrm(ce)?.m, EIG_TOL)?;
    Ok(ev
        .into_iter()
        .max_by(|a, b| a.modulus().total_cmp(&b.modulus()).then(a.im.total_cmp(&b.im)))
        .expect("5x5 matrix has eigenvalues"))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CeIterate {
    pub k: usize,
    /// `(x₁, x₂, x₃)`
    pub x: [f64; 3],
    pub w: [f64; 3],
    pub rho: f64,
}

impl CeIterate {
    /// `‖(x₁, x₂, x₃)‖`
    pub fn x_norm(&self) -> f64 {
        norm2(&self.x)
    }

    /// `‖(x₂, x₃, w)‖`, the state advanced by `M`.
    pub fn state_norm(&self) -> f64 {
        norm2(&self.state())
    }

    pub fn state(&self) -> [f64; 5] {
        [self.x[1], self.x[2], self.w[0], self.w[1], self.w[2]]
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CeTrace {
    /// `iterates[0]` is the initial point.
    pub iterates: Vec<CeIterate>,
    pub diverged: bool,
}

/// Runs `steps` ADMM iterations of the null-objective problem.
///
/// `(x₂, x₃, w)` advance by exact Gauss–Seidel block solves in the scaled
/// multiplier form whose matrix is [`build_lrm`]'s `M`. The reported `x₁`
/// uses `x₁ = (-A₁ᵀA₂x₂ - A₁ᵀA₃x₃ + A₁ᵀw/ρ)/A₁ᵀA₁` at the previous iterate.
pub fn ce_iterate(ce: &CeProblem, x0: [f64; 3], w0: [f64; 3], steps: usize) -> Result<CeTrace> {
    if steps == 0 {
        return Err(Error::invalid("steps", "at least one step is required"));
    }
    if x0.iter().chain(&w0).any(|v| !v.is_finite()) {
        return Err(Error::non_finite("initial point"));
    }
    let (a1, a2, a3) = (ce.col(0), ce.col(1), ce.col(2));
    let g = |i, j| ce.gram(i, j);
    let dot = |a: &[f64; 3], b: &[f64; 3]| a[0] * b[0] + a[1] * b[1] + a[2] * b[2];

    let mut it = CeIterate { k: 0, x: x0, w: w0, rho: ce.rho0 };
    let mut iterates = Vec::with_capacity(steps + 1);
    iterates.push(it);
    for k in 0..steps {
        let [_, x2, x3] = it.x;
        let w = it.w;
        let x1_inner = (-g(0, 1) * x2 - g(0, 2) * x3 + dot(&a1, &w)) / g(0, 0);
        let x1_reported = (-g(0, 1) * x2 - g(0, 2) * x3 + dot(&a1, &w) / it.rho) / g(0, 0);
        let x2n = (dot(&a2, &w) - g(1, 0) * x1_inner - g(1, 2) * x3) / g(1, 1);
        let x3n = (dot(&a3, &w) - g(2, 0) * x1_inner - g(2, 1) * x2n) / g(2, 2);
        let wn: [f64; 3] =
            std::array::from_fn(|i| (w[i] - (a1[i] * x1_inner + a2[i] * x2n + a3[i] * x3n)) / ce.beta);
        it = CeIterate {
            k: k + 1,
            x: [x1_reported, x2n, x3n],
            w: wn,
            rho: it.rho * ce.beta,
        };
        iterates.push(it);
        let size = norm2(&it.x).max(norm2(&it.w));
        if !(size <= DIVERGENCE_BOUND) {
            return Ok(CeTrace { iterates, diverged: true });
        }
    }
    Ok(CeTrace { iterates, diverged: false })
}

/// `‖M^k v‖^{1/k}`.
pub fn empirical_growth_rate(m: &Matrix, v: &[f64], k: usize) -> Result<f64> {
    let mut x = v.to_vec();
    let mut log_scale = 0.0;
    for _ in 0..k {
        x = m.mul_vec(&x)?;
        let n = norm2(&x);
        if n == 0.0 {
            return Ok(0.0);
        }
        log_scale += n.ln();
        x.iter_mut().for_each(|xi| *xi /= n);
    }
    Ok((log_scale / k as f64).exp())
}

/// Maxima of `values` over consecutive windows of length `window`.
pub fn windowed_maxima(values: &[f64], window: usize) -> Vec<f64> {
    values
        .chunks(window.max(1))
        .map(|c| c.iter().copied().fold(f64::NEG_INFINITY, f64::max))
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScanRow {
    pub beta: f64,
    pub sigma: f64,
    /// `(‖s_K‖/‖s_{K/2}‖)^{2/K}` of the state `s = (x₂, x₃, w)`.
    pub growth_rate: f64,
    pub converged: bool,
}

/// Spectral radius per `β`, cross-checked against `steps` iterations from
/// `x⁽⁰⁾ = (1,1,1)`, `w⁽⁰⁾ = 0`.
pub fn beta_threshold_scan(ce: &CeProblem, betas: &[f64], steps: usize) -> Result<Vec<ScanRow>> {
    if steps < 2 {
        return Err(Error::invalid("steps", "need at least two steps"));
    }
    betas
        .iter()
        .map(|&beta| {
            let inst = CeProblem::new(ce.a.clone(), beta, ce.rho0)?;
            let sigma = ce_spectral_radius(&inst)?;
            let tr = ce_iterate(&inst, [1.0, 1.0, 1.0], [0.0; 3], steps)?;
            let (growth_rate, converged) = if tr.diverged {
                (f64::INFINITY, false)
            } else {
                let half = steps / 2;
                let a = tr.iterates[half].state_norm();
                let b = tr.iterates[steps].state_norm();
                if a == 0.0 {
                    (0.0, true)
                } else {
                    let rate = (b / a).powf(1.0 / (steps - half) as f64);
                    (rate, rate < 1.0)
                }
            };
            Ok(ScanRow { beta, sigma, growth_rate, converged })
        })
        .collect()
}

/// `M^k` by repeated multiplication.
pub fn matrix_power(m: &Matrix, k: usize) -> Result<Matrix> {
    let mut p = Matrix::identity(m.rows());
    for _ in 0..k {
        p = matmul(&p, m)?;
    }
    Ok(p)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn printed_l(beta: f64) -> Matrix {
        Matrix::from_rows(&[
            &[6.0, 0.0, 0.0, 0.0, 0.0],
            &[7.0, 9.0, 0.0, 0.0, 0.0],
            &[1.0, 1.0, beta, 0.0, 0.0],
            &[1.0, 2.0, 0.0, beta, 0.0],
            &[2.0, 2.0, 0.0, 0.0, beta],
        ])
        .unwrap()
    }

    #[test]
    fn rejects_invalid_problems() {
        let sing = Matrix::from_rows(&[&[1.0, 1.0, 1.0], &[1.0, 1.0, 1.0], &[0.0, 1.0, 2.0]]).unwrap();
        assert!(CeProblem::new(sing, 1.0, 1.0).is_err());
        assert!(CeProblem::classic(0.5).is_err());
        assert!(CeProblem::new(Matrix::identity(3), 1.0, 0.0).is_err());
        assert!(CeProblem::new(Matrix::identity(2), 1.0, 1.0).is_err());
        let ce = CeProblem::classic(1.0).unwrap();
        assert!(ce_iterate(&ce, [1.0; 3], [0.0; 3], 0).is_err());
        assert!(ce_iterate(&ce, [f64::NAN, 0.0, 0.0], [0.0; 3], 1).is_err());
    }

    #[test]
    fn l_matches_printed_form() {
        for beta in [1.0, 1.1, 2.5] {
            let lrm = build_lrm(&CeProblem::classic(beta).unwrap()).unwrap();
            assert!(lrm.l.max_abs_diff(&printed_l(beta)) == 0.0);
        }
    }

    #[test]
    fn zero_start_stays_zero() {
        let ce = CeProblem::classic(1.0).unwrap();
        let tr = ce_iterate(&ce, [0.0; 3], [0.0; 3], 50).unwrap();
        assert!(tr.iterates.iter().all(|it| it.x == [0.0; 3] && it.w == [0.0; 3]));
        assert!(!tr.diverged);
    }

    #[test]
    fn rho_schedule() {
        let ce = CeProblem::new(CeProblem::classic(1.0).unwrap().matrix().clone(), 1.1, 2.0).unwrap();
        let tr = ce_iterate(&ce, [1.0; 3], [0.0; 3], 20).unwrap();
        let mut rho = 2.0;
        for it in &tr.iterates {
            assert_eq!(it.rho, rho);
            rho *= 1.1;
        }
    }

    #[test]
    fn decoupled_blocks_against_power_iteration() {
        let ce = CeProblem::new(Matrix::identity(3), 1.0, 1.0).unwrap();
        let m = build_lrm(&ce).unwrap().m;
        let sigma = ce_spectral_radius(&ce).unwrap();
        // decoupled blocks make M nilpotent; power iteration collapses to 0
        let mut v = vec![0.3, -0.2, 0.5, 0.7, 0.1];
        let mut est = 0.0;
        for _ in 0..2000 {
            let mv = m.mul_vec(&v).unwrap();
            let n = norm2(&mv);
            est = n / norm2(&v);
            if n == 0.0 {
                break;
            }
            v = mv.into_iter().map(|x| x / n).collect();
        }
        assert!((sigma - est).abs() < 1e-6, "{sigma} vs {est}");
    }

    #[test]
    fn divergence_flag() {
        let ce = CeProblem::classic(1.0).unwrap();
        let tr = ce_iterate(&ce, [1.0; 3], [0.0; 3], 100_000).unwrap();
        assert!(tr.diverged);
        assert!(tr.iterates.len() < 100_001);
        let last = tr.iterates.last().unwrap();
        assert!(norm2(&last.x).max(norm2(&last.w)) > DIVERGENCE_BOUND);
    }

    #[test]
    fn windowed_maxima_basic() {
        assert_eq!(windowed_maxima(&[1.0, 3.0, 2.0, 5.0, 4.0], 2), vec![3.0, 5.0, 4.0]);
    }

    #[test]
    fn scan_requires_two_steps() {
        let ce = CeProblem::classic(1.0).unwrap();
        assert!(beta_threshold_scan(&ce, &[1.0], 1).is_err());
    }
}
