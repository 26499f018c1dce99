//! Dimensionless grain-boundary energy and the Frank's-formula constraints.
//!
//! Each dislocation family `j` carries a density gradient `u_j ∈ ℝ²` in the
//! boundary plane. The energy of a family is
//!
//! ```text
//! f_j(u) = [1 - ν (û×n·b_j)² / (b²(‖u‖²+ε))] · b·s·ln(1/(r_g s)),  s = √(‖u‖²+ε)
//! ```
//!
//! with `û = (u_x, u_y, 0)`. Frank's formula on the two in-plane basis
//! vectors gives six linear equations `Σ_j A_j u_j = c`.

use crate::error::{Error, Result};
use crate::numkit::{fd_hessian_2x2, norm2, Matrix};

pub type Vec3 = [f64; 3];

/// Largest misorientation accepted by [`GbParams`], in radians (15°).
pub const MAX_THETA: f64 = std::f64::consts::PI / 12.0;

fn dot3(a: &Vec3, b: &Vec3) -> f64 {
    a[0] * b[0] + a[1] * b[1] + a[2] * b[2]
}

fn cross3(a: &Vec3, b: &Vec3) -> Vec3 {
    [
        a[1] * b[2] - a[2] * b[1],
        a[2] * b[0] - a[0] * b[2],
        a[0] * b[1] - a[1] * b[0],
    ]
}

fn len3(a: &Vec3) -> f64 {
    dot3(a, a).sqrt()
}

/// Burgers vectors of a common length.
#[derive(Debug, Clone, PartialEq)]
pub struct BurgersSet {
    vectors: Vec<Vec3>,
    length: f64,
}

impl BurgersSet {
    pub fn new(vectors: Vec<Vec3>) -> Result<Self> {
        if vectors.is_empty() {
            return Err(Error::invalid("burgers", "at least one Burgers vector is required"));
        }
        if vectors.iter().flatten().any(|v| !v.is_finite()) {
            return Err(Error::non_finite("Burgers vectors"));
        }
        let length = len3(&vectors[0]);
        for (j, v) in vectors.iter().enumerate() {
            let l = len3(v);
            if l == 0.0 {
                return Err(Error::invalid("burgers", format!("vector {} is zero", j + 1)));
            }
            if (l - length).abs() > 1e-12 * length {
                return Err(Error::invalid(
                    "burgers",
                    format!("vector {} has length {l}, expected {length}", j + 1),
                ));
            }
        }
        Ok(Self { vectors, length })
    }

    pub fn len(&self) -> usize {
        self.vectors.len()
    }

    pub fn is_empty(&self) -> bool {
        self.vectors.is_empty()
    }

    pub fn vectors(&self) -> &[Vec3] {
        &self.vectors
    }

    pub fn vector(&self, j: usize) -> &Vec3 {
        &self.vectors[j]
    }

    /// Common Euclidean length `b`.
    pub fn length(&self) -> f64 {
        self.length
    }
}

/// Physical and regularization parameters of a boundary.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GbParams {
    /// Misorientation angle in radians.
    pub theta: f64,
    /// Unit rotation axis.
    pub axis: Vec3,
    /// Unit boundary normal.
    pub normal: Vec3,
    /// Poisson ratio.
    pub nu: f64,
    /// Core cutoff, in units of `b`.
    pub core_radius: f64,
    /// Regularization added to `‖u‖²`.
    pub epsilon: f64,
}

impl GbParams {
    pub fn new(
        theta: f64,
        axis: Vec3,
        normal: Vec3,
        nu: f64,
        core_radius: f64,
        epsilon: f64,
    ) -> Result<Self> {
        let p = Self {
            theta,
            axis,
            normal,
            nu,
            core_radius,
            epsilon,
        };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        let all = [self.theta, self.nu, self.core_radius, self.epsilon];
        if all.iter().chain(&self.axis).chain(&self.normal).any(|v| !v.is_finite()) {
            return Err(Error::non_finite("boundary parameters"));
        }
        if !(0.0..=MAX_THETA * (1.0 + 1e-12)).contains(&self.theta) {
            return Err(Error::invalid("theta", format!("{} rad is outside [0, π/12]", self.theta)));
        }
        if (len3(&self.axis) - 1.0).abs() > 1e-12 {
            return Err(Error::invalid("axis", "must be a unit vector"));
        }
        if (len3(&self.normal) - 1.0).abs() > 1e-12 {
            return Err(Error::invalid("normal", "must be a unit vector"));
        }
        if !(0.0..0.5).contains(&self.nu) {
            return Err(Error::invalid("nu", format!("{} is outside [0, 0.5)", self.nu)));
        }
        if self.core_radius <= 0.0 {
            return Err(Error::invalid("core_radius", "must be positive"));
        }
        if self.epsilon <= 0.0 {
            return Err(Error::invalid("epsilon", "must be positive"));
        }
        Ok(())
    }

    pub fn with_epsilon(mut self, epsilon: f64) -> Result<Self> {
        self.epsilon = epsilon;
        self.validate()?;
        Ok(self)
    }
}

/// Coefficients `(c_x, c_y)` with `û×n·b = c_x u_x + c_y u_y`.
fn cross_coefficients(b: &Vec3, n: &Vec3) -> [f64; 2] {
    let ex = cross3(&[1.0, 0.0, 0.0], n);
    let ey = cross3(&[0.0, 1.0, 0.0], n);
    [dot3(&ex, b), dot3(&ey, b)]
}

/// Energy of one dislocation family, `f_j(u_j)`.
pub fn energy_component(u: [f64; 2], b: &Vec3, b_len: f64, p: &GbParams) -> f64 {
    let r2 = u[0] * u[0] + u[1] * u[1] + p.epsilon;
    let s = r2.sqrt();
    let c = cross_coefficients(b, &p.normal);
    let cross = c[0] * u[0] + c[1] * u[1];
    let angular = 1.0 - p.nu * cross * cross / (b_len * b_len * r2);
    angular * b_len * s * (1.0 / (p.core_radius * s)).ln()
}

/// Analytic gradient of [`energy_component`].
pub fn grad_energy_component(u: [f64; 2], b: &Vec3, b_len: f64, p: &GbParams) -> [f64; 2] {
    let r2 = u[0] * u[0] + u[1] * u[1] + p.epsilon;
    let s = r2.sqrt();
    let c = cross_coefficients(b, &p.normal);
    let cross = c[0] * u[0] + c[1] * u[1];
    let k = p.nu / (b_len * b_len);
    let log_term = (1.0 / (p.core_radius * s)).ln();
    let radial = b_len * s * log_term;
    let angular = 1.0 - k * cross * cross / r2;
    // d(radial)/du = b (ln(1/(r_g s)) - 1) u / s
    let d_radial = b_len * (log_term - 1.0) / s;
    let mut g = [0.0; 2];
    for i in 0..2 {
        let d_angular = -k * (2.0 * cross * c[i] / r2 - cross * cross * 2.0 * u[i] / (r2 * r2));
        g[i] = d_angular * radial + angular * d_radial * u[i];
    }
    g
}

/// Symmetrized FD Hessian of [`energy_component`] built from the analytic
/// gradient with step `1e-5·max(1, ‖u‖)`.
pub fn hess_energy_component(u: [f64; 2], b: &Vec3, b_len: f64, p: &GbParams) -> Matrix {
    let h = 1e-5 * norm2(&u).max(1.0);
    fd_hessian_2x2(|v| grad_energy_component(v, b, b_len, p), u, h).0
}

/// Stacked block variables `u = (u_1, …, u_J)`, each block in ℝ².
#[derive(Debug, Clone, PartialEq)]
pub struct DislocationState(Vec<f64>);

impl DislocationState {
    pub fn zeros(blocks: usize) -> Self {
        Self(vec![0.0; 2 * blocks])
    }

    pub fn from_vec(v: Vec<f64>) -> Result<Self> {
        if !v.len().is_multiple_of(2) {
            return Err(Error::dims("even length", v.len()));
        }
        if v.iter().any(|x| !x.is_finite()) {
            return Err(Error::non_finite("dislocation state"));
        }
        Ok(Self(v))
    }

    pub fn from_blocks(blocks: &[[f64; 2]]) -> Result<Self> {
        Self::from_vec(blocks.iter().flatten().copied().collect())
    }

    pub fn blocks(&self) -> usize {
        self.0.len() / 2
    }

    pub fn block(&self, j: usize) -> [f64; 2] {
        [self.0[2 * j], self.0[2 * j + 1]]
    }

    pub fn set_block(&mut self, j: usize, v: [f64; 2]) {
        self.0[2 * j] = v[0];
        self.0[2 * j + 1] = v[1];
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn as_mut_slice(&mut self) -> &mut [f64] {
        &mut self.0
    }

    pub fn into_vec(self) -> Vec<f64> {
        self.0
    }

    pub fn norm(&self) -> f64 {
        norm2(&self.0)
    }

    pub fn is_finite(&self) -> bool {
        self.0.iter().all(|v| v.is_finite())
    }
}

/// Linear constraints `Σ_j A_j u_j = c` with `A_j ∈ ℝ^{6×2}`.
#[derive(Debug, Clone, PartialEq)]
pub struct ConstraintSystem {
    blocks: Vec<Matrix>,
    rhs: [f64; 6],
}

impl ConstraintSystem {
    /// Arbitrary 6×2 blocks; mainly for surrogate problems in tests.
    pub fn from_parts(blocks: Vec<Matrix>, rhs: [f64; 6]) -> Result<Self> {
        for a in &blocks {
            if a.rows() != 6 || a.cols() != 2 {
                return Err(Error::dims("6x2 block", format!("{}x{}", a.rows(), a.cols())));
            }
        }
        if rhs.iter().any(|v| !v.is_finite()) {
            return Err(Error::non_finite("constraint right-hand side"));
        }
        Ok(Self { blocks, rhs })
    }

    pub fn num_blocks(&self) -> usize {
        self.blocks.len()
    }

    pub fn block(&self, j: usize) -> &Matrix {
        &self.blocks[j]
    }

    pub fn rhs(&self) -> &[f64; 6] {
        &self.rhs
    }

    /// `A_j u_j` accumulated into `out`.
    pub fn add_block_product(&self, j: usize, u: [f64; 2], out: &mut [f64; 6]) {
        let a = &self.blocks[j];
        for (i, o) in out.iter_mut().enumerate() {
            *o += a[(i, 0)] * u[0] + a[(i, 1)] * u[1];
        }
    }

    /// `A_jᵀ v`.
    pub fn block_transpose_apply(&self, j: usize, v: &[f64; 6]) -> [f64; 2] {
        let a = &self.blocks[j];
        let mut g = [0.0; 2];
        for (i, vi) in v.iter().enumerate() {
            g[0] += a[(i, 0)] * vi;
            g[1] += a[(i, 1)] * vi;
        }
        g
    }

    /// Smallest diagonal entry of all `A_jᵀA_j` (equals `b²` for assembled systems).
    pub fn min_block_gram(&self) -> f64 {
        self.blocks
            .iter()
            .flat_map(|a| {
                (0..2).map(move |c| (0..6).map(|i| a[(i, c)] * a[(i, c)]).sum::<f64>())
            })
            .fold(f64::INFINITY, f64::min)
    }
}

/// Builds `A_j` (columns `(b_j, 0)` and `(0, b_j)`) and
/// `c = θ(0, -a₃, a₂, a₃, 0, -a₁)`.
pub fn assemble_constraints(bs: &BurgersSet, p: &GbParams) -> ConstraintSystem {
    let blocks = bs
        .vectors()
        .iter()
        .map(|b| {
            let mut a = Matrix::zeros(6, 2);
            for i in 0..3 {
                a[(i, 0)] = b[i];
                a[(i + 3, 1)] = b[i];
            }
            a
        })
        .collect();
    let (t, a) = (p.theta, p.axis);
    ConstraintSystem {
        blocks,
        rhs: [0.0, -t * a[2], t * a[1], t * a[2], 0.0, -t * a[0]],
    }
}

/// Total energy `Σ_j f_j(u_j)`.
pub fn total_energy(s: &DislocationState, bs: &BurgersSet, p: &GbParams) -> Result<f64> {
    if s.blocks() != bs.len() {
        return Err(Error::dims(format!("{} blocks", bs.len()), s.blocks()));
    }
    Ok((0..bs.len())
        .map(|j| energy_component(s.block(j), bs.vector(j), bs.length(), p))
        .sum())
}

/// `Σ_j A_j u_j - c`.
pub fn residual(s: &DislocationState, cs: &ConstraintSystem) -> Result<[f64; 6]> {
    if s.blocks() != cs.num_blocks() {
        return Err(Error::dims(format!("{} blocks", cs.num_blocks()), s.blocks()));
    }
    let mut r = [0.0; 6];
    for j in 0..cs.num_blocks() {
        cs.add_block_product(j, s.block(j), &mut r);
    }
    for (ri, ci) in r.iter_mut().zip(cs.rhs()) {
        *ri -= ci;
    }
    Ok(r)
}

/// Frank's formula `θ(V×a) - Σ_j b_j (u_j·V)` for an in-plane vector `V`.
pub fn frank_residual(s: &DislocationState, bs: &BurgersSet, p: &GbParams, v: &Vec3) -> Vec3 {
    let mut out = cross3(v, &p.axis).map(|x| p.theta * x);
    for j in 0..bs.len() {
        let u = s.block(j);
        let proj = u[0] * v[0] + u[1] * v[1];
        for (o, bi) in out.iter_mut().zip(bs.vector(j)) {
            *o -= bi * proj;
        }
    }
    out
}

/// A boundary problem: crystallography, parameters and assembled constraints.
#[derive(Debug, Clone)]
pub struct GbModel {
    pub burgers: BurgersSet,
    pub params: GbParams,
    pub constraints: ConstraintSystem,
}

impl GbModel {
    pub fn new(burgers: BurgersSet, params: GbParams) -> Result<Self> {
        params.validate()?;
        let constraints = assemble_constraints(&burgers, &params);
        Ok(Self {
            burgers,
            params,
            constraints,
        })
    }

    pub fn num_blocks(&self) -> usize {
        self.burgers.len()
    }

    pub fn block_energy(&self, j: usize, u: [f64; 2]) -> f64 {
        energy_component(u, self.burgers.vector(j), self.burgers.length(), &self.params)
    }

    pub fn block_gradient(&self, j: usize, u: [f64; 2]) -> [f64; 2] {
        grad_energy_component(u, self.burgers.vector(j), self.burgers.length(), &self.params)
    }
}
