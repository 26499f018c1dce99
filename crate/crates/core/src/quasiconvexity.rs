//! Three-family reduction and a grid certificate of quasi-convexity.
//!
//! With three Burgers vectors spanning a plane, the six constraint rows fix
//! `u_2` and `u_3` as affine functions of `u_1`, leaving the bivariate
//! objective `F(u_1) = Σ_j f_j(u_j(u_1))`. `F` has at most one stationary
//! point on a disk if at every point
//!
//! * `F₁² + F₂² + p·λ_min(∇²F) > 0`, and
//! * the bordered-Hessian determinants `det B₁ = -F₁²` and
//!   `det B₂ = -(F₁²F₂₂ - 2F₁F₂F₁₂ + F₂²F₁₁)` are non-positive.

use crate::error::{Error, Result};
use crate::model::{assemble_constraints, energy_component, grad_energy_component, BurgersSet, GbParams};
use crate::numkit::{fd_hessian_2x2, norm2, solve_matrix, sym_eig_min_2x2_entries, Matrix};
use rayon::prelude::*;

/// `F` restricted to the constraint set, parametrized by `u_1`.
#[derive(Debug, Clone)]
pub struct ReducedObjective {
    burgers: BurgersSet,
    params: GbParams,
    /// `u_2 = P₂ u_1 + q₂`
    pub p2: [[f64; 2]; 2],
    pub q2: [f64; 2],
    /// `u_3 = P₃ u_1 + q₃`
    pub p3: [[f64; 2]; 2],
    pub q3: [f64; 2],
}

fn apply(p: &[[f64; 2]; 2], q: &[f64; 2], u: [f64; 2]) -> [f64; 2] {
    [
        p[0][0] * u[0] + p[0][1] * u[1] + q[0],
        p[1][0] * u[0] + p[1][1] * u[1] + q[1],
    ]
}

fn apply_transpose(p: &[[f64; 2]; 2], g: [f64; 2]) -> [f64; 2] {
    [
        p[0][0] * g[0] + p[1][0] * g[1],
        p[0][1] * g[0] + p[1][1] * g[1],
    ]
}

fn det3(m: [[f64; 3]; 3]) -> f64 {
    m[0][0] * (m[1][1] * m[2][2] - m[1][2] * m[2][1]) - m[0][1] * (m[1][0] * m[2][2] - m[1][2] * m[2][0])
        + m[0][2] * (m[1][0] * m[2][1] - m[1][1] * m[2][0])
}

/// Eliminates `u_2`, `u_3` from the constraints of a three-family boundary.
pub fn reduce(bs: &BurgersSet, p: &GbParams) -> Result<ReducedObjective> {
    if bs.len() != 3 {
        return Err(Error::invalid("burgers", format!("reduction needs 3 vectors, got {}", bs.len())));
    }
    p.validate()?;
    let b = bs.vectors();
    let scale = bs.length().powi(3);
    let vol = det3([b[0], b[1], b[2]]);
    if vol.abs() > 1e-10 * scale {
        return Err(Error::RankDeficiencyUnexpected(format!(
            "Burgers vectors are linearly independent (det {vol:e}); the reduction needs rank 2"
        )));
    }
    let cs = assemble_constraints(bs, p);
    // G = [A₂ A₃] ∈ ℝ^{6×4}; normal equations GᵀG x = Gᵀ(c - A₁u₁)
    let mut g = Matrix::zeros(6, 4);
    for i in 0..6 {
        for k in 0..2 {
            g[(i, k)] = cs.block(1)[(i, k)];
            g[(i, 2 + k)] = cs.block(2)[(i, k)];
        }
    }
    let gt = g.transpose();
    let gtg = crate::numkit::matmul(&gt, &g)?;
    // rhs columns: -GᵀA₁ (two columns) and Gᵀc
    let mut rhs = Matrix::zeros(4, 3);
    let a1 = cs.block(0);
    for r in 0..4 {
        for i in 0..6 {
            rhs[(r, 0)] -= gt[(r, i)] * a1[(i, 0)];
            rhs[(r, 1)] -= gt[(r, i)] * a1[(i, 1)];
            rhs[(r, 2)] += gt[(r, i)] * cs.rhs()[i];
        }
    }
    let sol = solve_matrix(&gtg, &rhs).map_err(|e| match e {
        Error::SingularMatrix { .. } => Error::RankDeficiencyUnexpected(
            "second and third Burgers vectors are parallel".into(),
        ),
        other => other,
    })?;
    // x = (u2x, u2y, u3x, u3y) = S u1 + q
    let ro = ReducedObjective {
        burgers: bs.clone(),
        params: *p,
        p2: [[sol[(0, 0)], sol[(0, 1)]], [sol[(1, 0)], sol[(1, 1)]]],
        q2: [sol[(0, 2)], sol[(1, 2)]],
        p3: [[sol[(2, 0)], sol[(2, 1)]], [sol[(3, 0)], sol[(3, 1)]]],
        q3: [sol[(2, 2)], sol[(3, 2)]],
    };
    // consistency: the maps must satisfy the constraints exactly, not just
    // in the least-squares sense
    let cnorm = norm2(cs.rhs());
    for u1 in [[0.0, 0.0], [1.0, 0.0], [0.0, 1.0]] {
        let r = ro.constraint_residual(u1);
        if r > 1e-10 * (1.0 + cnorm) {
            return Err(Error::InconsistentConstraints { residual: r });
        }
    }
    Ok(ro)
}

impl ReducedObjective {
    pub fn params(&self) -> &GbParams {
        &self.params
    }

    pub fn burgers(&self) -> &BurgersSet {
        &self.burgers
    }

    /// `(u_1, u_2(u_1), u_3(u_1))`.
    pub fn blocks(&self, u1: [f64; 2]) -> [[f64; 2]; 3] {
        [u1, apply(&self.p2, &self.q2, u1), apply(&self.p3, &self.q3, u1)]
    }

    /// `‖A₁u₁ + A₂u₂(u₁) + A₃u₃(u₁) - c‖`.
    pub fn constraint_residual(&self, u1: [f64; 2]) -> f64 {
        let cs = assemble_constraints(&self.burgers, &self.params);
        let mut r = [0.0; 6];
        for (j, u) in self.blocks(u1).into_iter().enumerate() {
            cs.add_block_product(j, u, &mut r);
        }
        for (ri, ci) in r.iter_mut().zip(cs.rhs()) {
            *ri -= ci;
        }
        norm2(&r)
    }

    pub fn value(&self, u1: [f64; 2]) -> f64 {
        let b = &self.burgers;
        self.blocks(u1)
            .iter()
            .enumerate()
            .map(|(j, u)| energy_component(*u, b.vector(j), b.length(), &self.params))
            .sum()
    }

    /// `∇F = ∇f₁ + P₂ᵀ∇f₂ + P₃ᵀ∇f₃`.
    pub fn gradient(&self, u1: [f64; 2]) -> [f64; 2] {
        let b = &self.burgers;
        let [x1, x2, x3] = self.blocks(u1);
        let g1 = grad_energy_component(x1, b.vector(0), b.length(), &self.params);
        let g2 = apply_transpose(&self.p2, grad_energy_component(x2, b.vector(1), b.length(), &self.params));
        let g3 = apply_transpose(&self.p3, grad_energy_component(x3, b.vector(2), b.length(), &self.params));
        [g1[0] + g2[0] + g3[0], g1[1] + g2[1] + g3[1]]
    }

    /// Symmetrized FD Hessian of `F` with step `h`.
    pub fn hessian_with_step(&self, u1: [f64; 2], h: f64) -> Matrix {
        fd_hessian_2x2(|v| self.gradient(v), u1, h).0
    }

    pub fn hessian(&self, u1: [f64; 2]) -> Matrix {
        self.hessian_with_step(u1, 1e-5 * norm2(&u1).max(1.0))
    }
}

/// Derivatives of a bivariate function at one point.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LocalDerivatives {
    pub value: f64,
    pub grad: [f64; 2],
    /// `(F₁₁, F₁₂, F₂₂)`
    pub hess: [f64; 3],
}

impl LocalDerivatives {
    pub fn of(ro: &ReducedObjective, u1: [f64; 2], h: f64) -> Self {
        let hm = ro.hessian_with_step(u1, h);
        Self {
            value: ro.value(u1),
            grad: ro.gradient(u1),
            hess: [hm[(0, 0)], hm[(0, 1)], hm[(1, 1)]],
        }
    }
}

/// `F₁² + F₂² + p·λ_min(∇²F)`.
pub fn s1_value(d: &LocalDerivatives, p: f64) -> f64 {
    let [f1, f2] = d.grad;
    let [h11, h12, h22] = d.hess;
    f1 * f1 + f2 * f2 + p * sym_eig_min_2x2_entries(h11, h12, h22)
}

/// Bordered-Hessian determinants `(det B₁, det B₂)`, each evaluated
/// literally as a determinant.
pub fn s2_values(d: &LocalDerivatives) -> (f64, f64) {
    let [f1, f2] = d.grad;
    let [h11, h12, h22] = d.hess;
    let det_b1 = 0.0 * h11 - f1 * f1;
    let det_b2 = det3([[0.0, f1, f2], [f1, h11, h12], [f2, h12, h22]]);
    (det_b1, det_b2)
}

/// The bordered determinant for the subset `{2}`, `-F₂²`.
pub fn s2_subset2(d: &LocalDerivatives) -> f64 {
    0.0 * d.hess[2] - d.grad[1] * d.grad[1]
}

pub fn condition_s1(ro: &ReducedObjective, u1: [f64; 2], p: f64) -> f64 {
    s1_value(&LocalDerivatives::of(ro, u1, 1e-5 * norm2(&u1).max(1.0)), p)
}

pub fn condition_s2(ro: &ReducedObjective, u1: [f64; 2]) -> (f64, f64) {
    s2_values(&LocalDerivatives::of(ro, u1, 1e-5 * norm2(&u1).max(1.0)))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CertifierParams {
    /// Relaxation constant in the first condition.
    pub p: f64,
    /// Disk radius.
    pub radius: f64,
    pub n_r: usize,
    pub n_phi: usize,
    /// FD step for `∇²F`; `None` uses `1e-5·max(1, ‖u‖)`.
    pub fd_step: Option<f64>,
    /// Nodes per side of the Cartesian grid used by [`brute_force_min`].
    pub brute_grid: usize,
    /// Keep every grid sample in the report (for CSV export).
    pub keep_samples: bool,
}

impl Default for CertifierParams {
    fn default() -> Self {
        Self {
            p: 0.01,
            radius: std::f64::consts::PI / 12.0,
            n_r: 200,
            n_phi: 400,
            fd_step: None,
            brute_grid: 401,
            keep_samples: false,
        }
    }
}

impl CertifierParams {
    pub fn validate(&self) -> Result<()> {
        if !(self.p > 0.0 && self.p < 1.0) {
            return Err(Error::invalid("p", "must lie in (0, 1)"));
        }
        if !(self.radius > 0.0 && self.radius.is_finite()) {
            return Err(Error::invalid("radius", "must be positive"));
        }
        if self.n_r < 16 || self.n_phi < 16 {
            return Err(Error::invalid("grid", "at least 16 nodes per direction"));
        }
        if self.fd_step.is_some_and(|h| !(h > 0.0)) {
            return Err(Error::invalid("fd_step", "must be positive"));
        }
        if self.brute_grid < 5 {
            return Err(Error::invalid("brute_grid", "at least 5 nodes per side"));
        }
        Ok(())
    }

    fn step(&self, u: [f64; 2]) -> f64 {
        self.fd_step.unwrap_or(1e-5 * norm2(&u).max(1.0))
    }

    /// Polar nodes of the closed disk, centre listed once.
    pub fn polar_nodes(&self) -> Vec<[f64; 2]> {
        let mut nodes = vec![[0.0, 0.0]];
        for i in 1..=self.n_r {
            let r = self.radius * i as f64 / self.n_r as f64;
            for k in 0..self.n_phi {
                let phi = std::f64::consts::TAU * k as f64 / self.n_phi as f64;
                nodes.push([r * phi.cos(), r * phi.sin()]);
            }
        }
        nodes
    }
}

/// Values of both conditions at one grid node.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CertSample {
    pub u1: [f64; 2],
    pub s1: f64,
    pub det_b1: f64,
    pub det_b2: f64,
    pub det_b2_subset2: f64,
    pub value: f64,
    /// `1e-10·(1 + max|B entry|³)`
    pub tol_det: f64,
}

fn sample_at(ro: &ReducedObjective, cp: &CertifierParams, u1: [f64; 2]) -> CertSample {
    let d = LocalDerivatives::of(ro, u1, cp.step(u1));
    let (det_b1, det_b2) = s2_values(&d);
    let entries = d.grad.iter().chain(&d.hess).fold(0.0f64, |m, v| m.max(v.abs()));
    CertSample {
        u1,
        s1: s1_value(&d, cp.p),
        det_b1,
        det_b2,
        det_b2_subset2: s2_subset2(&d),
        value: d.value,
        tol_det: 1e-10 * (1.0 + entries.powi(3)),
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CertReport {
    pub min_s1: f64,
    pub argmin_s1: [f64; 2],
    pub max_det_b1: f64,
    pub max_det_b2: f64,
    pub argmax_det_b2: [f64; 2],
    pub max_det_b2_subset2: f64,
    /// Largest `det - tol_det` over the bordered determinants (≤ 0 passes).
    pub worst_det_excess: f64,
    pub points: usize,
    /// Grid edges along which S1 or `det B₂` changes sign (midpoints).
    pub zero_level_s1: Vec<[f64; 2]>,
    pub zero_level_det_b2: Vec<[f64; 2]>,
    pub samples: Vec<CertSample>,
    pub pass: bool,
}

/// Evaluates both conditions on the polar grid of the closed disk.
pub fn certify(ro: &ReducedObjective, cp: &CertifierParams) -> Result<CertReport> {
    cp.validate()?;
    let nodes = cp.polar_nodes();
    let samples: Vec<CertSample> = nodes.par_iter().map(|&u| sample_at(ro, cp, u)).collect();

    let mut min_s1 = f64::INFINITY;
    let mut argmin_s1 = [0.0; 2];
    let mut max_b1 = f64::NEG_INFINITY;
    let mut max_b2 = f64::NEG_INFINITY;
    let mut argmax_b2 = [0.0; 2];
    let mut max_b2s = f64::NEG_INFINITY;
    let mut worst = f64::NEG_INFINITY;
    for s in &samples {
        if s.s1 < min_s1 {
            min_s1 = s.s1;
            argmin_s1 = s.u1;
        }
        if s.det_b2 > max_b2 {
            max_b2 = s.det_b2;
            argmax_b2 = s.u1;
        }
        max_b1 = max_b1.max(s.det_b1);
        max_b2s = max_b2s.max(s.det_b2_subset2);
        for d in [s.det_b1, s.det_b2, s.det_b2_subset2] {
            worst = worst.max(d - s.tol_det);
        }
    }

    // sign changes along radial and angular grid edges
    let idx = |i: usize, k: usize| if i == 0 { 0 } else { 1 + (i - 1) * cp.n_phi + k };
    let mut zero_s1 = Vec::new();
    let mut zero_b2 = Vec::new();
    let mut edge = |a: &CertSample, b: &CertSample| {
        let mid = [(a.u1[0] + b.u1[0]) / 2.0, (a.u1[1] + b.u1[1]) / 2.0];
        if (a.s1 > 0.0) != (b.s1 > 0.0) {
            zero_s1.push(mid);
        }
        if (a.det_b2 > 0.0) != (b.det_b2 > 0.0) {
            zero_b2.push(mid);
        }
    };
    for i in 1..=cp.n_r {
        for k in 0..cp.n_phi {
            let here = &samples[idx(i, k)];
            edge(&samples[idx(i - 1, k)], here);
            edge(here, &samples[idx(i, (k + 1) % cp.n_phi)]);
        }
    }

    Ok(CertReport {
        min_s1,
        argmin_s1,
        max_det_b1: max_b1,
        max_det_b2: max_b2,
        argmax_det_b2: argmax_b2,
        max_det_b2_subset2: max_b2s,
        worst_det_excess: worst,
        points: samples.len(),
        zero_level_s1: zero_s1,
        zero_level_det_b2: zero_b2,
        pass: min_s1 > 0.0 && worst <= 0.0,
        samples: if cp.keep_samples { samples } else { Vec::new() },
    })
}

/// Lower and upper ends of the ε/θ² bracket searched by [`find_epsilon0`].
pub const EPSILON_BRACKET: (f64, f64) = (1e-6, 1e-1);

#[derive(Debug, Clone, PartialEq)]
pub struct Epsilon0Result {
    /// Smallest certified ε found.
    pub epsilon0: f64,
    /// `ε₀ / θ²`.
    pub ratio: f64,
    /// Largest ε/θ² known to fail (or the bracket floor when it passes).
    pub failing_ratio: Option<f64>,
    pub evaluations: usize,
}

/// Geometric bisection on `κ = ε/θ²` for the smallest certified ε, stopping
/// when the bracket's relative width is at most 1e-2.
pub fn find_epsilon0(bs: &BurgersSet, p0: &GbParams, cp: &CertifierParams) -> Result<Epsilon0Result> {
    let theta2 = p0.theta * p0.theta;
    if theta2 == 0.0 {
        return Err(Error::invalid("theta", "the epsilon search needs a nonzero angle"));
    }
    let mut evaluations = 0;
    let mut passes = |kappa: f64| -> Result<bool> {
        evaluations += 1;
        let p = p0.with_epsilon(kappa * theta2)?;
        Ok(certify(&reduce(bs, &p)?, cp)?.pass)
    };
    let (mut lo, mut hi) = EPSILON_BRACKET;
    if !passes(hi)? {
        return Err(Error::NoCertifiableEpsilon {
            lo: lo * theta2,
            hi: hi * theta2,
        });
    }
    if passes(lo)? {
        return Ok(Epsilon0Result {
            epsilon0: lo * theta2,
            ratio: lo,
            failing_ratio: None,
            evaluations,
        });
    }
    while hi / lo - 1.0 > 1e-2 {
        let mid = (lo * hi).sqrt();
        if passes(mid)? {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    Ok(Epsilon0Result {
        epsilon0: hi * theta2,
        ratio: hi,
        failing_ratio: Some(lo),
        evaluations,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct BruteForceResult {
    /// Best polished minimizer.
    pub minimizer: [f64; 2],
    pub value: f64,
    pub grad_norm: f64,
    /// Grid nodes lower than all eight neighbours.
    pub grid_local_minima: usize,
    /// Distinct polished minimizers (1e-6 clustering).
    pub basins: Vec<[f64; 2]>,
    /// The best minimizer lies strictly inside the disk.
    pub interior: bool,
}

/// Minimizes `F` by backtracking gradient descent from `start`.
pub fn polish(f: impl Fn([f64; 2]) -> f64, g: impl Fn([f64; 2]) -> [f64; 2], start: [f64; 2], tol: f64) -> ([f64; 2], f64) {
    let mut x = start;
    let mut fx = f(x);
    let mut step = 1e-3;
    for _ in 0..100_000 {
        let gx = g(x);
        let gn = gx[0].hypot(gx[1]);
        if gn <= tol {
            return (x, gn);
        }
        let mut t = step;
        loop {
            let y = [x[0] - t * gx[0], x[1] - t * gx[1]];
            let fy = f(y);
            if fy <= fx - 0.5 * t * gn * gn {
                x = y;
                fx = fy;
                step = t * 2.0;
                break;
            }
            t *= 0.5;
            if t < 1e-20 {
                return (x, gn);
            }
        }
    }
    let gx = g(x);
    (x, gx[0].hypot(gx[1]))
}

/// Scans `F` on a Cartesian grid masked to the disk, polishes every grid
/// local minimum, and clusters the results.
pub fn brute_force_min(ro: &ReducedObjective, cp: &CertifierParams) -> Result<BruteForceResult> {
    brute_force_min_with(|u| ro.value(u), |u| ro.gradient(u), cp)
}

/// [`brute_force_min`] for an arbitrary smooth bivariate function.
pub fn brute_force_min_with<F, G>(f: F, g: G, cp: &CertifierParams) -> Result<BruteForceResult>
where
    F: Fn([f64; 2]) -> f64 + Sync,
    G: Fn([f64; 2]) -> [f64; 2] + Sync,
{
    cp.validate()?;
    let n = cp.brute_grid;
    let r = cp.radius;
    let h = 2.0 * r / (n - 1) as f64;
    let coord = |i: usize| -r + h * i as f64;
    let inside = |i: usize, k: usize| coord(i).hypot(coord(k)) <= r * (1.0 + 1e-12);
    let vals: Vec<f64> = (0..n * n)
        .into_par_iter()
        .map(|idx| {
            let (i, k) = (idx / n, idx % n);
            if inside(i, k) {
                f([coord(i), coord(k)])
            } else {
                f64::NAN
            }
        })
        .collect();
    let mut local = Vec::new();
    for i in 1..n - 1 {
        for k in 1..n - 1 {
            let v = vals[i * n + k];
            if v.is_nan() {
                continue;
            }
            let mut is_min = true;
            for di in [-1isize, 0, 1] {
                for dk in [-1isize, 0, 1] {
                    if di == 0 && dk == 0 {
                        continue;
                    }
                    let nb = vals[(i as isize + di) as usize * n + (k as isize + dk) as usize];
                    if nb.is_nan() || nb <= v {
                        is_min = false;
                    }
                }
            }
            if is_min {
                local.push([coord(i), coord(k)]);
            }
        }
    }
    if local.is_empty() {
        // no interior grid minimum: start from the lowest node
        let best = (0..n * n)
            .filter(|&idx| !vals[idx].is_nan())
            .min_by(|&a, &b| vals[a].total_cmp(&vals[b]))
            .ok_or_else(|| Error::invalid("brute_grid", "grid has no node inside the disk"))?;
        local.push([coord(best / n), coord(best % n)]);
    }
    let polished: Vec<([f64; 2], f64)> = local.par_iter().map(|&s| polish(&f, &g, s, 1e-10)).collect();
    let mut basins: Vec<[f64; 2]> = Vec::new();
    for (x, _) in &polished {
        if !basins.iter().any(|b| (b[0] - x[0]).hypot(b[1] - x[1]) <= 1e-6) {
            basins.push(*x);
        }
    }
    let (best, gn) = polished
        .iter()
        .min_by(|a, b| f(a.0).total_cmp(&f(b.0)))
        .copied()
        .expect("at least one start point");
    Ok(BruteForceResult {
        minimizer: best,
        value: f(best),
        grad_norm: gn,
        grid_local_minima: local.len(),
        basins,
        interior: best[0].hypot(best[1]) < r,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numkit::fd_gradient;

    fn prop2(theta_deg: f64, ratio: f64) -> (BurgersSet, GbParams) {
        let s3 = 3f64.sqrt();
        let bs = BurgersSet::new(vec![[1.0, 0.0, 0.0], [0.5, s3 / 2.0, 0.0], [0.5, -s3 / 2.0, 0.0]]).unwrap();
        let t = theta_deg.to_radians();
        let eps = if t > 0.0 { ratio * t * t } else { 1e-6 };
        let p = GbParams::new(t, [0.0, 0.0, 1.0], [0.0, 0.0, 1.0], 0.347, 0.85, eps).unwrap();
        (bs, p)
    }

    #[test]
    fn reduction_matches_closed_form_maps() {
        let (bs, p) = prop2(2.5, 1.0 / 400.0);
        let ro = reduce(&bs, &p).unwrap();
        let t = p.theta;
        let s3 = 3f64.sqrt();
        let close = |a: f64, b: f64| (a - b).abs() < 1e-14;
        assert!(close(ro.p2[0][0], -1.0) && close(ro.p2[0][1], 0.0) && close(ro.p2[1][1], -1.0));
        assert!(close(ro.p3[0][0], -1.0) && close(ro.p3[1][1], -1.0));
        assert!(close(ro.q2[0], -t / s3) && close(ro.q3[0], t / s3));
        assert!(close(ro.q2[1], t) && close(ro.q3[1], t));
        for u in [[0.01, 0.02], [-0.2, 0.1], [0.05, -0.07]] {
            assert!(ro.constraint_residual(u) <= 1e-12);
        }
    }

    #[test]
    fn zero_angle_gives_homogeneous_maps() {
        let (bs, p) = prop2(0.0, 0.0);
        let ro = reduce(&bs, &p).unwrap();
        assert_eq!(ro.q2.map(|v| v.abs()), [0.0, 0.0]);
        assert_eq!(ro.q3.map(|v| v.abs()), [0.0, 0.0]);
        let g = ro.gradient([0.0, 0.0]);
        assert_eq!(g, [0.0, 0.0]);
    }

    #[test]
    fn reduction_error_paths() {
        let (_, p) = prop2(2.5, 1.0 / 400.0);
        let indep = BurgersSet::new(vec![[1.0, 0.0, 0.0], [0.0, 1.0, 0.0], [0.0, 0.0, 1.0]]).unwrap();
        assert!(matches!(reduce(&indep, &p), Err(Error::RankDeficiencyUnexpected(_))));
        let parallel = BurgersSet::new(vec![[0.0, 1.0, 0.0], [1.0, 0.0, 0.0], [-1.0, 0.0, 0.0]]).unwrap();
        assert!(matches!(reduce(&parallel, &p), Err(Error::RankDeficiencyUnexpected(_))));
        // all three vectors in the x-y plane but the rotation axis tilted:
        // the third component of c has nothing to balance it
        let s3 = 3f64.sqrt();
        let planar = BurgersSet::new(vec![[1.0, 0.0, 0.0], [0.5, s3 / 2.0, 0.0], [0.5, -s3 / 2.0, 0.0]]).unwrap();
        let tilted = GbParams { axis: [0.6, 0.0, 0.8], ..p };
        assert!(matches!(reduce(&planar, &tilted), Err(Error::InconsistentConstraints { .. })));
        let two = BurgersSet::new(vec![[1.0, 0.0, 0.0], [0.0, 1.0, 0.0]]).unwrap();
        assert!(reduce(&two, &p).is_err());
    }

    #[test]
    fn random_consistent_instance() {
        // vectors in a tilted plane, axis chosen inside the span so the
        // system stays consistent
        let e1 = [1.0, 0.0, 0.0];
        let d = [0.0, 0.6, 0.8];
        let mk = |a: f64| [a.cos() * e1[0] + a.sin() * d[0], a.cos() * e1[1] + a.sin() * d[1], a.cos() * e1[2] + a.sin() * d[2]];
        let bs = BurgersSet::new(vec![mk(0.3), mk(1.7), mk(2.9)]).unwrap();
        let n = [0.0, -0.8, 0.6];
        let p = GbParams::new(0.1, n, [0.0, 0.0, 1.0], 0.3, 0.85, 1e-4).unwrap();
        let ro = reduce(&bs, &p).unwrap();
        for u in [[0.3, -0.1], [-0.05, 0.2], [0.11, 0.07]] {
            assert!(ro.constraint_residual(u) <= 1e-10);
        }
    }

    #[test]
    fn reduced_gradient_matches_fd() {
        let (bs, p) = prop2(5.0, 1.0 / 200.0);
        let ro = reduce(&bs, &p).unwrap();
        for k in 0..20 {
            let a = 0.37 * k as f64;
            let r = 0.012 * k as f64;
            let u = [r * a.cos(), r * a.sin()];
            let g = ro.gradient(u);
            let fd = fd_gradient(|x| ro.value([x[0], x[1]]), &u, 1e-6).unwrap();
            let err = (g[0] - fd[0]).hypot(g[1] - fd[1]);
            assert!(err <= 1e-6 * g[0].hypot(g[1]), "{u:?}: {g:?} vs {fd:?}");
        }
    }

    fn quad(h11: f64, h12: f64, h22: f64, g: [f64; 2]) -> LocalDerivatives {
        LocalDerivatives { value: 0.0, grad: g, hess: [h11, h12, h22] }
    }

    #[test]
    fn s1_signs_on_model_functions() {
        // strict minimum of a convex quadratic
        assert!(s1_value(&quad(2.0, 0.0, 3.0, [0.0, 0.0]), 0.01) > 0.0);
        // saddle x² - y² at the origin
        assert_eq!(s1_value(&quad(2.0, 0.0, -2.0, [0.0, 0.0]), 0.01), -0.02);
    }

    #[test]
    fn s2_on_convex_quadratic() {
        // x² + y² at (1, 1)
        let d = quad(2.0, 0.0, 2.0, [2.0, 2.0]);
        let (b1, b2) = s2_values(&d);
        assert_eq!(b1, -4.0);
        assert_eq!(b2, -16.0);
        assert_eq!(s2_subset2(&d), -4.0);
    }

    #[test]
    fn det_b1_identity_on_reduced_objective() {
        let (bs, p) = prop2(2.5, 1.0 / 400.0);
        let ro = reduce(&bs, &p).unwrap();
        for u in [[0.01, 0.03], [-0.1, 0.05], [0.2, -0.1]] {
            let d = LocalDerivatives::of(&ro, u, 1e-5);
            let (b1, _) = s2_values(&d);
            assert!((b1 + d.grad[0] * d.grad[0]).abs() <= 1e-12);
        }
    }

    #[test]
    fn certifier_params_validation() {
        let cp = CertifierParams::default();
        assert!(cp.validate().is_ok());
        assert!(CertifierParams { p: 0.0, ..cp }.validate().is_err());
        assert!(CertifierParams { n_r: 8, ..cp }.validate().is_err());
        assert!(CertifierParams { radius: -1.0, ..cp }.validate().is_err());
        assert!(CertifierParams { fd_step: Some(0.0), ..cp }.validate().is_err());
        let nodes = CertifierParams { n_r: 16, n_phi: 16, ..cp }.polar_nodes();
        assert_eq!(nodes.len(), 1 + 16 * 16);
    }

    #[test]
    fn brute_force_on_convex_quadratic() {
        let cp = CertifierParams { radius: 1.0, brute_grid: 41, ..CertifierParams::default() };
        let c = [0.123, -0.456];
        let f = |u: [f64; 2]| (u[0] - c[0]).powi(2) + 3.0 * (u[1] - c[1]).powi(2);
        let g = |u: [f64; 2]| [2.0 * (u[0] - c[0]), 6.0 * (u[1] - c[1])];
        let res = brute_force_min_with(f, g, &cp).unwrap();
        assert!((res.minimizer[0] - c[0]).abs() < 1e-6 && (res.minimizer[1] - c[1]).abs() < 1e-6);
        assert_eq!(res.basins.len(), 1);
        assert!(res.interior);
    }

    #[test]
    fn brute_force_finds_two_basins_of_double_well() {
        let cp = CertifierParams { radius: 2.0, brute_grid: 81, ..CertifierParams::default() };
        let f = |u: [f64; 2]| (u[0] * u[0] - 1.0).powi(2) + u[1] * u[1];
        let g = |u: [f64; 2]| [4.0 * u[0] * (u[0] * u[0] - 1.0), 2.0 * u[1]];
        let res = brute_force_min_with(f, g, &cp).unwrap();
        assert_eq!(res.basins.len(), 2);
    }
}
