//! Experiment drivers. Each writes its CSV artifacts and `summary.txt` into
//! the configured output directory and returns the summary.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::counterexample::{
    beta_threshold_scan, build_lrm, ce_dominant_eigenvalue, ce_iterate, CeProblem,
};
use crate::error::{Error, Result};
use crate::model::{DislocationState, GbModel};
use crate::numkit::{default_fd_step, fd_gradient, norm2, Matrix};
use crate::quasiconvexity::{brute_force_min, certify, find_epsilon0, reduce, ReducedObjective};
use crate::solvers::{
    admm_solve, alm_solve, monotonicity_audit, penalty_solve, AuditReport, MultiplierState, SolveResult,
};

use super::config::{ExperimentKind, RunConfig, SolverChoice};
use super::csv;
use super::presets::{self, Reference};

/// One solver run of a summary.
#[derive(Debug, Clone, PartialEq)]
pub struct SolverSummary {
    pub solver: &'static str,
    /// `converged`, `max_iter`, `inner_failure` or `diverged at k=…`.
    pub status: String,
    pub objective: f64,
    pub residual_norm: f64,
    /// `‖u₁‖`
    pub density: f64,
    pub iterations: usize,
    pub inner_steps: usize,
    pub max_w_norm: f64,
    pub wall_seconds: f64,
}

/// A computed quantity next to a published one.
#[derive(Debug, Clone, PartialEq)]
pub struct ReferenceComparison {
    pub quantity: String,
    pub computed: f64,
    pub reference: f64,
    pub provenance: &'static str,
    pub deviation: f64,
    /// `None` for informational references without an acceptance band.
    pub within_tolerance: Option<bool>,
}

impl ReferenceComparison {
    pub fn new(quantity: impl Into<String>, computed: f64, r: Reference) -> Self {
        let deviation = (computed - r.value).abs();
        Self {
            quantity: quantity.into(),
            computed,
            reference: r.value,
            provenance: r.provenance,
            deviation,
            within_tolerance: r.tolerance.is_finite().then_some(deviation <= r.tolerance),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SummaryReport {
    pub kind: ExperimentKind,
    /// The full configuration in file syntax.
    pub config_echo: String,
    pub solvers: Vec<SolverSummary>,
    pub references: Vec<ReferenceComparison>,
    pub lines: Vec<String>,
    /// Files written, relative to the output directory.
    pub files: Vec<String>,
    pub verdict: String,
}

impl SummaryReport {
    fn new(cfg: &RunConfig) -> Self {
        Self {
            kind: cfg.kind,
            config_echo: cfg.to_config_string(),
            solvers: Vec::new(),
            references: Vec::new(),
            lines: Vec::new(),
            files: Vec::new(),
            verdict: String::new(),
        }
    }

    fn line(&mut self, s: impl Into<String>) {
        self.lines.push(s.into());
    }

    pub fn render(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "experiment: {}", self.kind.as_str());
        let _ = writeln!(s, "configuration:");
        for l in self.config_echo.lines() {
            let _ = writeln!(s, "    {l}");
        }
        if !self.solvers.is_empty() {
            let _ = writeln!(
                s,
                "\n{:<8} {:<16} {:>14} {:>12} {:>12} {:>8} {:>10} {:>12} {:>10}",
                "solver", "status", "objective", "residual", "|u1|", "iters", "gd_steps", "max|w|", "wall_s"
            );
            for r in &self.solvers {
                let _ = writeln!(
                    s,
                    "{:<8} {:<16} {:>14.8e} {:>12.4e} {:>12.8} {:>8} {:>10} {:>12.6} {:>10.3}",
                    r.solver,
                    r.status,
                    r.objective,
                    r.residual_norm,
                    r.density,
                    r.iterations,
                    r.inner_steps,
                    r.max_w_norm,
                    r.wall_seconds
                );
            }
        }
        if !self.lines.is_empty() {
            let _ = writeln!(s);
            for l in &self.lines {
                let _ = writeln!(s, "{l}");
            }
        }
        if !self.references.is_empty() {
            let _ = writeln!(s, "\nreferences:");
            for r in &self.references {
                let band = match r.within_tolerance {
                    Some(true) => "within tolerance",
                    Some(false) => "OUTSIDE tolerance",
                    None => "informational",
                };
                let _ = writeln!(
                    s,
                    "    {}: computed {:.6} vs {:.6} ({}), deviation {:.3e}, {}",
                    r.quantity, r.computed, r.reference, r.provenance, r.deviation, band
                );
            }
        }
        if !self.files.is_empty() {
            let _ = writeln!(s, "\nfiles: {}", self.files.join(", "));
        }
        let _ = writeln!(s, "\nverdict: {}", self.verdict);
        s
    }
}

fn prepare_out_dir(dir: &Path) -> Result<()> {
    std::fs::create_dir_all(dir).map_err(|source| Error::Io {
        context: format!("creating output directory {}", dir.display()),
        source,
    })
}

fn finish(cfg: &RunConfig, mut report: SummaryReport) -> Result<SummaryReport> {
    report.files.push("summary.txt".into());
    let path = cfg.out_dir.join("summary.txt");
    std::fs::write(&path, report.render()).map_err(|source| Error::Io {
        context: format!("writing {}", path.display()),
        source,
    })?;
    Ok(report)
}

fn out_file(cfg: &RunConfig, report: &mut SummaryReport, name: String) -> PathBuf {
    let p = cfg.out_dir.join(&name);
    report.files.push(name);
    p
}

/// Runs the experiment selected by `cfg.kind`.
pub fn run(cfg: &RunConfig) -> Result<SummaryReport> {
    match cfg.kind {
        ExperimentKind::Twist6 => run_twist6(cfg),
        ExperimentKind::Reduced3 => run_reduced3(cfg),
        ExperimentKind::Certify => run_certify(cfg),
        ExperimentKind::Epsilon0 => run_epsilon0(cfg),
        ExperimentKind::Counterexample => run_counterexample(cfg),
    }
}

fn summarize(solver: &'static str, res: &SolveResult, wall: f64) -> SolverSummary {
    let last = res.trace.records.last();
    SolverSummary {
        solver,
        status: res.termination.as_str().to_string(),
        objective: last.map_or(f64::NAN, |r| r.objective),
        residual_norm: res.residual_norm(),
        density: norm2(&res.state.block(0)),
        iterations: res.iterations(),
        inner_steps: res.trace.total_inner_steps(),
        max_w_norm: res.trace.records.iter().map(|r| r.w_norm).fold(0.0, f64::max),
        wall_seconds: wall,
    }
}

/// Runs one solver; a divergence is recorded in the summary and its partial
/// trace is still written.
fn run_solver(
    cfg: &RunConfig,
    model: &GbModel,
    which: SolverChoice,
    report: &mut SummaryReport,
    prefix: &str,
) -> Result<Option<SolveResult>> {
    let n = model.num_blocks();
    let u0 = DislocationState::zeros(n);
    let w0 = MultiplierState::zeros();
    let start = Instant::now();
    let (name, out) = match which {
        SolverChoice::Admm => {
            let mut p = cfg.admm;
            p.store_iterates = cfg.audit;
            ("admm", admm_solve(model, &p, u0, w0))
        }
        SolverChoice::Alm => ("alm", alm_solve(model, &cfg.alm, u0, w0)),
        SolverChoice::Penalty => ("penalty", penalty_solve(model, &cfg.penalty, u0)),
        SolverChoice::All => unreachable!("callers expand `all`"),
    };
    let wall = start.elapsed().as_secs_f64();
    let path = out_file(cfg, report, format!("{prefix}trace_{name}.csv"));
    match out {
        Ok(res) => {
            csv::write_trace(&path, &res.trace)?;
            report.solvers.push(summarize(name, &res, wall));
            Ok(Some(res))
        }
        Err(Error::Diverged { iteration, trace }) => {
            csv::write_trace(&path, &trace)?;
            let last = trace.records.last();
            report.solvers.push(SolverSummary {
                solver: name,
                status: format!("diverged at k={iteration}"),
                objective: last.map_or(f64::NAN, |r| r.objective),
                residual_norm: last.map_or(f64::NAN, |r| r.residual_norm),
                density: f64::NAN,
                iterations: trace.len(),
                inner_steps: trace.total_inner_steps(),
                max_w_norm: trace.records.iter().map(|r| r.w_norm).fold(0.0, f64::max),
                wall_seconds: wall,
            });
            Ok(None)
        }
        Err(e) => Err(e),
    }
}

fn audit_lines(a: &AuditReport) -> Vec<String> {
    vec![
        format!("audit: delta_hat = {:.6e}, hessian bound = {:.6e}", a.delta_hat, a.hessian_bound),
        format!(
            "audit: rho threshold at k = {}, checked {} iterations past it, {} violations ({} over the whole run)",
            a.threshold_k.map_or("never".into(), |k| k.to_string()),
            a.checked_past_threshold,
            a.violations_past_threshold,
            a.violations_all
        ),
        format!(
            "audit: sum |du|^2 = {:.6e}, tail over last 10% = {:.3e}",
            a.step_sq_partial_sums.last().copied().unwrap_or(0.0),
            a.tail_step_sq_sum
        ),
        format!(
            "audit: max |dw|^2 = {:.6e}, max |w| = {:.6}, multiplier step bounded: {}",
            a.max_multiplier_step_sq, a.max_w_norm, a.multiplier_step_bounded
        ),
    ]
}

fn solver_list(choice: SolverChoice) -> Vec<SolverChoice> {
    [SolverChoice::Admm, SolverChoice::Alm, SolverChoice::Penalty]
        .into_iter()
        .filter(|s| choice.includes(*s))
        .collect()
}

/// Six-family twist boundary with ADMM, ALM and the penalty method.
pub fn run_twist6(cfg: &RunConfig) -> Result<SummaryReport> {
    prepare_out_dir(&cfg.out_dir)?;
    let model = GbModel::new(cfg.burgers_set()?, cfg.gb_params()?)?;
    let mut report = SummaryReport::new(cfg);
    let mut results = Vec::new();
    for s in solver_list(cfg.solver) {
        let res = run_solver(cfg, &model, s, &mut report, "")?;
        if s == SolverChoice::Admm && cfg.audit {
            if let Some(r) = &res {
                let a = monotonicity_audit(&r.trace, &model, cfg.admm.beta)?;
                let path = out_file(cfg, &mut report, "audit.csv".into());
                csv::write_audit(&path, &a.step_sq_partial_sums)?;
                report.lines.extend(audit_lines(&a));
            }
        }
        results.push((s, res));
    }
    let preset_run = cfg.burgers == super::config::BurgersSpec::Preset(super::config::Preset::Fcc111)
        && cfg.epsilon_ratio == presets::DEFAULT_EPSILON_RATIO;
    for (s, res) in &results {
        let Some(res) = res else { continue };
        let d = norm2(&res.state.block(0));
        if !preset_run {
            continue;
        }
        let refs = match s {
            SolverChoice::Admm => [
                presets::admm_density_reference(cfg.theta_deg),
                presets::theoretical_density_reference(cfg.theta_deg),
            ],
            SolverChoice::Penalty => [presets::penalty_density_reference(cfg.theta_deg), None],
            _ => [None, None],
        };
        for r in refs.into_iter().flatten() {
            report
                .references
                .push(ReferenceComparison::new(format!("{} |u1|", s.as_str()), d, r));
        }
    }
    let converged: Vec<(&'static str, usize)> = report
        .solvers
        .iter()
        .filter(|s| s.status == "converged")
        .map(|s| (s.solver, s.iterations))
        .collect();
    if let Some((name, iters)) = converged.iter().min_by_key(|s| s.1) {
        report.line(format!("fewest outer iterations: {name} ({iters})"));
    }
    report.verdict = format!("{} of {} solvers converged", converged.len(), report.solvers.len());
    finish(cfg, report)
}

fn spot_check_gradient(ro: &ReducedObjective, cfg: &RunConfig) -> Result<(usize, f64)> {
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut worst: f64 = 0.0;
    let mut checked = 0;
    for _ in 0..cfg.spot_checks {
        let r = cfg.certify.radius * rng.gen::<f64>().sqrt();
        let phi = std::f64::consts::TAU * rng.gen::<f64>();
        let u = [r * phi.cos(), r * phi.sin()];
        let g = ro.gradient(u);
        let gn = norm2(&g);
        if gn < 1e-10 {
            continue;
        }
        let fd = fd_gradient(|x| ro.value([x[0], x[1]]), &u, default_fd_step(&u))?;
        worst = worst.max(norm2(&[g[0] - fd[0], g[1] - fd[1]]) / gn);
        checked += 1;
    }
    Ok((checked, worst))
}

/// Three-family reduction: ADMM on the full model against a brute-force
/// minimization of the reduced objective.
pub fn run_reduced3(cfg: &RunConfig) -> Result<SummaryReport> {
    prepare_out_dir(&cfg.out_dir)?;
    let bs = cfg.burgers_set()?;
    let p = cfg.gb_params()?;
    let model = GbModel::new(bs.clone(), p)?;
    let ro = reduce(&bs, &p)?;
    let mut report = SummaryReport::new(cfg);
    let admm = run_solver(cfg, &model, SolverChoice::Admm, &mut report, "reduced3_")?;
    let start = Instant::now();
    let bf = brute_force_min(&ro, &cfg.certify)?;
    let wall = start.elapsed().as_secs_f64();
    report.line(format!(
        "brute force: minimizer ({:.10}, {:.10}), F = {:.12e}, |grad F| = {:.3e}, {} grid local minima, {} polished basin(s), interior: {}, {:.3} s",
        bf.minimizer[0], bf.minimizer[1], bf.value, bf.grad_norm, bf.grid_local_minima, bf.basins.len(), bf.interior, wall
    ));
    let (checked, worst) = spot_check_gradient(&ro, cfg)?;
    report.line(format!(
        "gradient spot check (seed {}): {checked} points, worst relative error {worst:.3e}",
        cfg.seed
    ));
    let agree = match &admm {
        Some(r) => {
            let u1 = r.state.block(0);
            let gap = norm2(&[u1[0] - bf.minimizer[0], u1[1] - bf.minimizer[1]]);
            report.line(format!(
                "admm u1 = ({:.10}, {:.10}); distance to brute-force minimizer {gap:.3e}",
                u1[0], u1[1]
            ));
            gap <= 1e-3
        }
        None => false,
    };
    report.verdict = format!(
        "admm and brute force {}; {} basin(s) on the disk",
        if agree { "agree" } else { "disagree" },
        bf.basins.len()
    );
    finish(cfg, report)
}

/// Grid certificate of both quasi-convexity conditions on the disk.
pub fn run_certify(cfg: &RunConfig) -> Result<SummaryReport> {
    prepare_out_dir(&cfg.out_dir)?;
    let ro = reduce(&cfg.burgers_set()?, &cfg.gb_params()?)?;
    let mut report = SummaryReport::new(cfg);
    let start = Instant::now();
    let cert = certify(&ro, &cfg.certify)?;
    let wall = start.elapsed().as_secs_f64();
    report.line(format!("grid points: {} ({:.3} s)", cert.points, wall));
    report.line(format!(
        "min S1 = {:.6e} at ({:.6}, {:.6})",
        cert.min_s1, cert.argmin_s1[0], cert.argmin_s1[1]
    ));
    report.line(format!("max det B1 = {:.6e}", cert.max_det_b1));
    report.line(format!(
        "max det B2 = {:.6e} at ({:.6}, {:.6}); subset {{2}} term max = {:.6e}",
        cert.max_det_b2, cert.argmax_det_b2[0], cert.argmax_det_b2[1], cert.max_det_b2_subset2
    ));
    report.line(format!("worst determinant excess over tolerance = {:.6e}", cert.worst_det_excess));
    report.line(format!(
        "sign-change points: S1 {}, det B2 {}",
        cert.zero_level_s1.len(),
        cert.zero_level_det_b2.len()
    ));
    let (checked, worst) = spot_check_gradient(&ro, cfg)?;
    report.line(format!(
        "gradient spot check (seed {}): {checked} points, worst relative error {worst:.3e}",
        cfg.seed
    ));
    let path = out_file(cfg, &mut report, "zero_level_s1.csv".into());
    csv::write_points(&path, &cert.zero_level_s1)?;
    let path = out_file(cfg, &mut report, "zero_level_det_b2.csv".into());
    csv::write_points(&path, &cert.zero_level_det_b2)?;
    if cfg.certify.keep_samples {
        let path = out_file(cfg, &mut report, "certify_samples.csv".into());
        csv::write_samples(&path, &cert.samples)?;
    }
    report.verdict = if cert.pass {
        "certificate passes".into()
    } else {
        "certificate fails".into()
    };
    finish(cfg, report)
}

/// Smallest certified `ε` by bisection on `ε/θ²`.
pub fn run_epsilon0(cfg: &RunConfig) -> Result<SummaryReport> {
    prepare_out_dir(&cfg.out_dir)?;
    let bs = cfg.burgers_set()?;
    let p = cfg.gb_params()?;
    let mut report = SummaryReport::new(cfg);
    let start = Instant::now();
    let found = find_epsilon0(&bs, &p, &cfg.certify);
    let wall = start.elapsed().as_secs_f64();
    let path = out_file(cfg, &mut report, "epsilon0.csv".into());
    match found {
        Ok(e) => {
            let row = format!(
                "{},{},{},{},{}\n",
                csv::fmt_float(cfg.theta_deg),
                csv::fmt_float(e.epsilon0),
                csv::fmt_float(e.ratio),
                e.failing_ratio.map_or("none".into(), csv::fmt_float),
                e.evaluations
            );
            write_text(&path, &format!("theta_deg,epsilon0,ratio,failing_ratio,evaluations\n{row}"))?;
            report.line(format!(
                "epsilon0 = {:.6e} = theta^2 / {:.2} ({} certifications, {:.3} s)",
                e.epsilon0,
                1.0 / e.ratio,
                e.evaluations,
                wall
            ));
            if cfg.burgers.vectors() == presets::fcc111_vectors()[..3] {
                if let Some(r) = presets::epsilon0_ratio_reference(cfg.theta_deg) {
                    report.references.push(ReferenceComparison::new("epsilon0/theta^2", e.ratio, r));
                }
            }
            report.verdict = format!("epsilon0/theta^2 = 1/{:.2}", 1.0 / e.ratio);
        }
        Err(Error::NoCertifiableEpsilon { lo, hi }) => {
            write_text(&path, "theta_deg,epsilon0,ratio,failing_ratio,evaluations\n")?;
            report.line(format!(
                "no epsilon in [{lo:.3e}, {hi:.3e}] certifies the disk ({wall:.3} s)"
            ));
            report.verdict = "no certifiable epsilon in the search bracket".into();
        }
        Err(e) => return Err(e),
    }
    finish(cfg, report)
}

fn write_text(path: &Path, text: &str) -> Result<()> {
    std::fs::write(path, text).map_err(|source| Error::Io {
        context: format!("writing {}", path.display()),
        source,
    })
}

/// Renders a matrix row by row with a common scale factor.
pub fn format_matrix(m: &Matrix, scale: f64) -> String {
    let mut s = String::new();
    for i in 0..m.rows() {
        let row: Vec<String> = (0..m.cols()).map(|j| format!("{:>10.4}", m[(i, j)] * scale)).collect();
        let _ = writeln!(s, "    [{}]", row.join(" "));
    }
    s
}

/// Spectral radius and recursion of the three-block counterexample for each
/// configured `β`.
pub fn run_counterexample(cfg: &RunConfig) -> Result<SummaryReport> {
    prepare_out_dir(&cfg.out_dir)?;
    let ce_cfg = &cfg.counterexample;
    let classic = CeProblem::classic(1.0)?;
    let base = CeProblem::new(classic.matrix().clone(), 1.0, ce_cfg.rho0)?;
    let mut report = SummaryReport::new(cfg);
    for (i, &beta) in ce_cfg.betas.iter().enumerate() {
        let ce = CeProblem::new(base.matrix().clone(), beta, ce_cfg.rho0)?;
        let lrm = build_lrm(&ce)?;
        let lam = ce_dominant_eigenvalue(&ce)?;
        report.line(format!("beta = {beta}"));
        report.line(format!("  L =\n{}", format_matrix(&lrm.l, 1.0).trim_end()));
        report.line(format!("  R =\n{}", format_matrix(&lrm.r, 1.0).trim_end()));
        report.line(format!("  M =\n{}", format_matrix(&lrm.m, 1.0).trim_end()));
        report.line(format!(
            "  dominant eigenvalue {:.6} {} {:.6}i, spectral radius {:.6}",
            lam.re,
            if lam.im < 0.0 { '-' } else { '+' },
            lam.im.abs(),
            lam.modulus()
        ));
        let tr = ce_iterate(&ce, ce_cfg.x0, [0.0; 3], ce_cfg.steps)?;
        let path = out_file(cfg, &mut report, format!("ce_trace_{i}.csv"));
        csv::write_ce_trace(&path, &tr)?;
        let last = tr.iterates.last().expect("initial iterate is always present");
        report.line(format!(
            "  {} steps from x0 = {:?}: final |(x2,x3,w)| = {:.6e}{}",
            last.k,
            ce_cfg.x0,
            last.state_norm(),
            if tr.diverged { " (stopped at the divergence bound)" } else { "" }
        ));
        if let Some(r) = presets::spectral_radius_reference(beta) {
            report
                .references
                .push(ReferenceComparison::new(format!("sigma(M) at beta={beta}"), lam.modulus(), r));
        }
    }
    let rows = beta_threshold_scan(&base, &ce_cfg.betas, ce_cfg.steps)?;
    let path = out_file(cfg, &mut report, "ce_scan.csv".into());
    csv::write_scan(&path, &rows)?;
    let divergent: Vec<String> = rows.iter().filter(|r| r.sigma > 1.0).map(|r| r.beta.to_string()).collect();
    report.verdict = if divergent.is_empty() {
        "iteration contracts for every beta".into()
    } else {
        format!("spectral radius exceeds 1 for beta in {{{}}}", divergent.join(", "))
    };
    finish(cfg, report)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn deviations_only_against_references() {
        let r = Reference { value: 1.0, tolerance: 0.1, provenance: "x" };
        let c = ReferenceComparison::new("q", 1.05, r);
        assert!((c.deviation - 0.05).abs() < 1e-15);
        assert_eq!(c.within_tolerance, Some(true));
        let info = Reference { value: 1.0, tolerance: f64::NAN, provenance: "y" };
        assert_eq!(ReferenceComparison::new("q", 3.0, info).within_tolerance, None);
    }

    #[test]
    fn matrix_rendering() {
        let m = Matrix::from_rows(&[&[1.0, 2.0], &[3.0, 4.0]]).unwrap();
        let s = format_matrix(&m, 2.0);
        assert!(s.contains("8.0000"));
        assert_eq!(s.lines().count(), 2);
    }
}
