//! Run configuration files.
//!
//! Grammar, one item per line:
//!
//! ```text
//! # comment (also allowed after a value)
//! key = value
//! [section]
//! ```
//!
//! Top-level keys come before the first section header. Sections are
//! `admm`, `alm`, `penalty`, `certify` and `counterexample`. Unknown keys and
//! sections are errors. Lists use `,` between numbers and `;` between vectors.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::model::{BurgersSet, GbParams, Vec3};
use crate::quasiconvexity::CertifierParams;
use crate::solvers::{AugLagParams, PenaltyParams};

use super::presets::{self, ALUMINIUM_NU, CORE_RADIUS, DEFAULT_EPSILON_RATIO};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ExperimentKind {
    Twist6,
    Reduced3,
    Certify,
    Epsilon0,
    Counterexample,
}

impl ExperimentKind {
    pub fn as_str(&self) -> &'static str {
        match self {
            ExperimentKind::Twist6 => "twist6",
            ExperimentKind::Reduced3 => "reduced3",
            ExperimentKind::Certify => "certify",
            ExperimentKind::Epsilon0 => "epsilon0",
            ExperimentKind::Counterexample => "counterexample",
        }
    }

    fn default_burgers(&self) -> BurgersSpec {
        match self {
            ExperimentKind::Twist6 | ExperimentKind::Counterexample => BurgersSpec::Preset(Preset::Fcc111),
            _ => BurgersSpec::Preset(Preset::Fcc111Inplane),
        }
    }
}

impl FromStr for ExperimentKind {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        Ok(match s {
            "twist6" => ExperimentKind::Twist6,
            "reduced3" => ExperimentKind::Reduced3,
            "certify" => ExperimentKind::Certify,
            "epsilon0" => ExperimentKind::Epsilon0,
            "counterexample" => ExperimentKind::Counterexample,
            _ => return Err(format!("unknown experiment kind `{s}`")),
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SolverChoice {
    Admm,
    Alm,
    Penalty,
    All,
}

impl SolverChoice {
    pub fn as_str(&self) -> &'static str {
        match self {
            SolverChoice::Admm => "admm",
            SolverChoice::Alm => "alm",
            SolverChoice::Penalty => "penalty",
            SolverChoice::All => "all",
        }
    }

    pub fn includes(&self, other: SolverChoice) -> bool {
        *self == SolverChoice::All || *self == other
    }
}

impl FromStr for SolverChoice {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        Ok(match s {
            "admm" => SolverChoice::Admm,
            "alm" => SolverChoice::Alm,
            "penalty" => SolverChoice::Penalty,
            "all" => SolverChoice::All,
            _ => return Err(format!("unknown solver `{s}` (admm, alm, penalty, all)")),
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Preset {
    /// All six {111} vectors.
    Fcc111,
    /// The three in-plane {111} vectors.
    Fcc111Inplane,
}

#[derive(Debug, Clone, PartialEq)]
pub enum BurgersSpec {
    Preset(Preset),
    Explicit(Vec<Vec3>),
}

impl BurgersSpec {
    pub fn vectors(&self) -> Vec<Vec3> {
        match self {
            BurgersSpec::Preset(Preset::Fcc111) => presets::fcc111_vectors(),
            BurgersSpec::Preset(Preset::Fcc111Inplane) => presets::fcc111_vectors()[..3].to_vec(),
            BurgersSpec::Explicit(v) => v.clone(),
        }
    }
}

/// Settings of the counterexample experiment.
#[derive(Debug, Clone, PartialEq)]
pub struct CounterexampleConfig {
    pub betas: Vec<f64>,
    pub steps: usize,
    pub rho0: f64,
    pub x0: [f64; 3],
}

impl Default for CounterexampleConfig {
    fn default() -> Self {
        Self {
            betas: vec![1.0, 1.1],
            steps: 2000,
            rho0: 1.0,
            x0: [1.0, 1.0, 1.0],
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub kind: ExperimentKind,
    pub theta_deg: f64,
    pub burgers: BurgersSpec,
    /// `ε/θ²`
    pub epsilon_ratio: f64,
    pub nu: f64,
    pub core_radius: f64,
    pub axis: Vec3,
    pub normal: Vec3,
    pub solver: SolverChoice,
    pub seed: u64,
    /// Random gradient spot checks in the three-family experiments.
    pub spot_checks: usize,
    pub out_dir: PathBuf,
    /// Worker threads for grid scans; `None` lets rayon decide.
    pub threads: Option<usize>,
    pub audit: bool,
    pub admm: AugLagParams,
    pub alm: AugLagParams,
    pub penalty: PenaltyParams,
    pub certify: CertifierParams,
    pub counterexample: CounterexampleConfig,
}

impl RunConfig {
    /// Defaults for `kind`.
    pub fn new(kind: ExperimentKind) -> Self {
        Self {
            kind,
            theta_deg: 2.5,
            burgers: kind.default_burgers(),
            epsilon_ratio: DEFAULT_EPSILON_RATIO,
            nu: ALUMINIUM_NU,
            core_radius: CORE_RADIUS,
            axis: [0.0, 0.0, 1.0],
            normal: [0.0, 0.0, 1.0],
            solver: SolverChoice::All,
            seed: 0,
            spot_checks: 100,
            out_dir: PathBuf::from("out"),
            threads: None,
            audit: false,
            admm: AugLagParams::default(),
            alm: AugLagParams::alm_default(),
            penalty: PenaltyParams::default(),
            certify: CertifierParams::default(),
            counterexample: CounterexampleConfig::default(),
        }
    }

    pub fn theta(&self) -> f64 {
        self.theta_deg.to_radians()
    }

    pub fn burgers_set(&self) -> Result<BurgersSet> {
        BurgersSet::new(self.burgers.vectors())
    }

    pub fn gb_params(&self) -> Result<GbParams> {
        let t = self.theta();
        GbParams::new(t, self.axis, self.normal, self.nu, self.core_radius, self.epsilon_ratio * t * t)
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |field: &str, message: &str| {
            Err(Error::ConfigInvalid {
                field: field.to_string(),
                message: message.to_string(),
            })
        };
        if !(self.theta_deg > 0.0 && self.theta_deg <= 15.0) {
            return bad("theta_deg", "must lie in (0, 15] degrees");
        }
        if !(self.epsilon_ratio > 0.0 && self.epsilon_ratio.is_finite()) {
            return bad("epsilon_ratio", "must be positive");
        }
        if self.threads == Some(0) {
            return bad("threads", "must be positive");
        }
        if self.out_dir.as_os_str().is_empty() {
            return bad("out_dir", "must not be empty");
        }
        let wrap = |section: &str, r: Result<()>| {
            r.map_err(|e| Error::ConfigInvalid {
                field: section.to_string(),
                message: e.to_string(),
            })
        };
        wrap("burgers", self.burgers_set().map(|_| ()))?;
        wrap("params", self.gb_params().map(|_| ()))?;
        wrap("admm", self.admm.validate())?;
        if !(self.admm.beta > 1.0) {
            return bad("admm.beta", "must exceed 1");
        }
        wrap("alm", self.alm.validate())?;
        if !(self.penalty.rho > 0.0 && self.penalty.alpha > 0.0 && self.penalty.tol_grad > 0.0)
            || self.penalty.max_steps == 0
        {
            return bad("penalty", "rho, alpha, tol_grad and max_steps must be positive");
        }
        wrap("certify", self.certify.validate())?;
        let ce = &self.counterexample;
        if ce.betas.is_empty() || ce.betas.iter().any(|b| !(*b >= 1.0 && b.is_finite())) {
            return bad("counterexample.betas", "need at least one finite beta ≥ 1");
        }
        if ce.steps < 2 {
            return bad("counterexample.steps", "need at least two steps");
        }
        if !(ce.rho0 > 0.0 && ce.rho0.is_finite()) {
            return bad("counterexample.rho0", "must be positive");
        }
        if ce.x0.iter().any(|v| !v.is_finite()) {
            return bad("counterexample.x0", "must be finite");
        }
        let three = matches!(
            self.kind,
            ExperimentKind::Reduced3 | ExperimentKind::Certify | ExperimentKind::Epsilon0
        );
        if three && self.burgers.vectors().len() != 3 {
            return bad("burgers", "this experiment needs exactly three Burgers vectors");
        }
        Ok(())
    }

    /// Renders the configuration in the file grammar; parsing the output
    /// gives back an equal configuration.
    pub fn to_config_string(&self) -> String {
        let mut s = String::new();
        let mut kv = |k: &str, v: String| {
            let _ = writeln!(s, "{k} = {v}");
        };
        kv("kind", self.kind.as_str().into());
        kv("theta_deg", fmt_f(self.theta_deg));
        match &self.burgers {
            BurgersSpec::Preset(Preset::Fcc111) => kv("preset", "fcc111".into()),
            BurgersSpec::Preset(Preset::Fcc111Inplane) => kv("preset", "fcc111_inplane".into()),
            BurgersSpec::Explicit(v) => kv(
                "burgers",
                v.iter().map(|b| fmt_list(b)).collect::<Vec<_>>().join("; "),
            ),
        }
        kv("epsilon_ratio", fmt_f(self.epsilon_ratio));
        kv("nu", fmt_f(self.nu));
        kv("core_radius", fmt_f(self.core_radius));
        kv("axis", fmt_list(&self.axis));
        kv("normal", fmt_list(&self.normal));
        kv("solver", self.solver.as_str().into());
        kv("seed", self.seed.to_string());
        kv("spot_checks", self.spot_checks.to_string());
        kv("out_dir", self.out_dir.display().to_string());
        kv("threads", self.threads.map_or("auto".into(), |t| t.to_string()));
        kv("audit", self.audit.to_string());
        for (name, p) in [("admm", &self.admm), ("alm", &self.alm)] {
            let _ = writeln!(s, "\n[{name}]");
            let _ = writeln!(s, "rho0 = {}", fmt_f(p.rho0));
            let _ = writeln!(s, "beta = {}", fmt_f(p.beta));
            let _ = writeln!(s, "alpha = {}", fmt_f(p.alpha));
            let _ = writeln!(s, "tol_inner = {}", fmt_f(p.tol_inner));
            let _ = writeln!(s, "tol_outer = {}", fmt_f(p.tol_outer));
            let _ = writeln!(s, "max_outer = {}", p.max_outer);
            let _ = writeln!(s, "max_inner = {}", p.max_inner);
            let _ = writeln!(s, "inner_failure_patience = {}", p.inner_failure_patience);
        }
        let pp = &self.penalty;
        let _ = writeln!(s, "\n[penalty]");
        let _ = writeln!(s, "rho = {}", fmt_f(pp.rho));
        let _ = writeln!(s, "alpha = {}", fmt_f(pp.alpha));
        let _ = writeln!(s, "tol_grad = {}", fmt_f(pp.tol_grad));
        let _ = writeln!(s, "max_steps = {}", pp.max_steps);
        let c = &self.certify;
        let _ = writeln!(s, "\n[certify]");
        let _ = writeln!(s, "p = {}", fmt_f(c.p));
        let _ = writeln!(s, "radius = {}", fmt_f(c.radius));
        let _ = writeln!(s, "n_r = {}", c.n_r);
        let _ = writeln!(s, "n_phi = {}", c.n_phi);
        let _ = writeln!(s, "fd_step = {}", c.fd_step.map_or("auto".into(), fmt_f));
        let _ = writeln!(s, "brute_grid = {}", c.brute_grid);
        let _ = writeln!(s, "keep_samples = {}", c.keep_samples);
        let ce = &self.counterexample;
        let _ = writeln!(s, "\n[counterexample]");
        let _ = writeln!(s, "betas = {}", fmt_list(&ce.betas));
        let _ = writeln!(s, "steps = {}", ce.steps);
        let _ = writeln!(s, "rho0 = {}", fmt_f(ce.rho0));
        let _ = writeln!(s, "x0 = {}", fmt_list(&ce.x0));
        s
    }
}

fn fmt_f(v: f64) -> String {
    format!("{v:?}")
}

fn fmt_list(v: &[f64]) -> String {
    v.iter().map(|x| fmt_f(*x)).collect::<Vec<_>>().join(", ")
}

fn parse_f(v: &str) -> std::result::Result<f64, String> {
    let x: f64 = v.parse().map_err(|_| format!("expected a number, got `{v}`"))?;
    if !x.is_finite() {
        return Err(format!("expected a finite number, got `{v}`"));
    }
    Ok(x)
}

fn parse_u<T: FromStr>(v: &str) -> std::result::Result<T, String> {
    v.parse().map_err(|_| format!("expected a non-negative integer, got `{v}`"))
}

fn parse_bool(v: &str) -> std::result::Result<bool, String> {
    match v {
        "true" | "yes" | "on" | "1" => Ok(true),
        "false" | "no" | "off" | "0" => Ok(false),
        _ => Err(format!("expected true or false, got `{v}`")),
    }
}

fn parse_list(v: &str) -> std::result::Result<Vec<f64>, String> {
    v.split(',').map(|x| parse_f(x.trim())).collect()
}

fn parse_vec3(v: &str) -> std::result::Result<Vec3, String> {
    let l = parse_list(v)?;
    l.try_into().map_err(|l: Vec<f64>| format!("expected 3 components, got {}", l.len()))
}

fn parse_auto<T>(v: &str, f: impl Fn(&str) -> std::result::Result<T, String>) -> std::result::Result<Option<T>, String> {
    if v == "auto" {
        Ok(None)
    } else {
        f(v).map(Some)
    }
}

/// Parses configuration text. `kind` must be set somewhere in the file.
pub fn parse_config(text: &str) -> Result<RunConfig> {
    parse_config_with(text, None)
}

/// Parses configuration text; `kind` supplies the experiment when the file
/// does not, and must agree with it when both do.
pub fn parse_config_with(text: &str, kind: Option<ExperimentKind>) -> Result<RunConfig> {
    let mut entries: Vec<(usize, Option<String>, String, String)> = Vec::new();
    let mut section: Option<String> = None;
    let mut file_kind: Option<(usize, ExperimentKind)> = None;
    for (i, raw) in text.lines().enumerate() {
        let line_no = i + 1;
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let perr = |message: String| Error::ConfigParse { line: line_no, message };
        if let Some(rest) = line.strip_prefix('[') {
            let name = rest
                .strip_suffix(']')
                .ok_or_else(|| perr("unterminated section header".into()))?
                .trim();
            if !matches!(name, "admm" | "alm" | "penalty" | "certify" | "counterexample") {
                return Err(perr(format!("unknown section `{name}`")));
            }
            section = Some(name.to_string());
            continue;
        }
        let (k, v) = line
            .split_once('=')
            .ok_or_else(|| perr("expected `key = value`".into()))?;
        let (k, v) = (k.trim(), v.trim());
        if k.is_empty() {
            return Err(perr("empty key".into()));
        }
        if section.is_none() && k == "kind" {
            file_kind = Some((line_no, v.parse().map_err(perr)?));
            continue;
        }
        entries.push((line_no, section.clone(), k.to_string(), v.to_string()));
    }
    let kind = match (file_kind, kind) {
        (Some((line, a)), Some(b)) if a != b => {
            return Err(Error::ConfigParse {
                line,
                message: format!("kind `{}` conflicts with requested `{}`", a.as_str(), b.as_str()),
            })
        }
        (Some((_, a)), _) => a,
        (None, Some(b)) => b,
        (None, None) => {
            return Err(Error::ConfigInvalid {
                field: "kind".into(),
                message: "missing experiment kind".into(),
            })
        }
    };
    let mut cfg = RunConfig::new(kind);
    for (line, sec, k, v) in entries {
        apply(&mut cfg, sec.as_deref(), &k, &v).map_err(|message| Error::ConfigParse { line, message })?;
    }
    cfg.validate()?;
    Ok(cfg)
}

fn apply(cfg: &mut RunConfig, section: Option<&str>, k: &str, v: &str) -> std::result::Result<(), String> {
    match section {
        None => match k {
            "theta_deg" => cfg.theta_deg = parse_f(v)?,
            "preset" => {
                cfg.burgers = BurgersSpec::Preset(match v {
                    "fcc111" => Preset::Fcc111,
                    "fcc111_inplane" => Preset::Fcc111Inplane,
                    _ => return Err(format!("unknown preset `{v}` (fcc111, fcc111_inplane)")),
                })
            }
            "burgers" => {
                let vs = v.split(';').map(|b| parse_vec3(b.trim())).collect::<std::result::Result<Vec<_>, _>>()?;
                cfg.burgers = BurgersSpec::Explicit(vs);
            }
            "epsilon_ratio" => cfg.epsilon_ratio = parse_f(v)?,
            "nu" => cfg.nu = parse_f(v)?,
            "core_radius" => cfg.core_radius = parse_f(v)?,
            "axis" => cfg.axis = parse_vec3(v)?,
            "normal" => cfg.normal = parse_vec3(v)?,
            "solver" => cfg.solver = v.parse()?,
            "seed" => cfg.seed = parse_u(v)?,
            "spot_checks" => cfg.spot_checks = parse_u(v)?,
            "out_dir" => cfg.out_dir = PathBuf::from(v),
            "threads" => cfg.threads = parse_auto(v, parse_u)?,
            "audit" => cfg.audit = parse_bool(v)?,
            _ => return Err(format!("unknown key `{k}`")),
        },
        Some(name @ ("admm" | "alm")) => {
            let p = if name == "admm" { &mut cfg.admm } else { &mut cfg.alm };
            match k {
                "rho0" => p.rho0 = parse_f(v)?,
                "beta" => p.beta = parse_f(v)?,
                "alpha" => p.alpha = parse_f(v)?,
                "tol_inner" => p.tol_inner = parse_f(v)?,
                "tol_outer" => p.tol_outer = parse_f(v)?,
                "max_outer" => p.max_outer = parse_u(v)?,
                "max_inner" => p.max_inner = parse_u(v)?,
                "inner_failure_patience" => p.inner_failure_patience = parse_u(v)?,
                _ => return Err(format!("unknown key `{k}` in [{name}]")),
            }
        }
        Some("penalty") => match k {
            "rho" => cfg.penalty.rho = parse_f(v)?,
            "alpha" => cfg.penalty.alpha = parse_f(v)?,
            "tol_grad" => cfg.penalty.tol_grad = parse_f(v)?,
            "max_steps" => cfg.penalty.max_steps = parse_u(v)?,
            _ => return Err(format!("unknown key `{k}` in [penalty]")),
        },
        Some("certify") => match k {
            "p" => cfg.certify.p = parse_f(v)?,
            "radius" => cfg.certify.radius = parse_f(v)?,
            "n_r" => cfg.certify.n_r = parse_u(v)?,
            "n_phi" => cfg.certify.n_phi = parse_u(v)?,
            "fd_step" => cfg.certify.fd_step = parse_auto(v, parse_f)?,
            "brute_grid" => cfg.certify.brute_grid = parse_u(v)?,
            "keep_samples" => cfg.certify.keep_samples = parse_bool(v)?,
            _ => return Err(format!("unknown key `{k}` in [certify]")),
        },
        Some("counterexample") => match k {
            "betas" => cfg.counterexample.betas = parse_list(v)?,
            "steps" => cfg.counterexample.steps = parse_u(v)?,
            "rho0" => cfg.counterexample.rho0 = parse_f(v)?,
            "x0" => cfg.counterexample.x0 = parse_vec3(v)?,
            _ => return Err(format!("unknown key `{k}` in [counterexample]")),
        },
        Some(other) => return Err(format!("unknown section `{other}`")),
    }
    Ok(())
}

pub fn load_config(path: &Path) -> Result<RunConfig> {
    load_config_with(path, None)
}

pub fn load_config_with(path: &Path, kind: Option<ExperimentKind>) -> Result<RunConfig> {
    let text = std::fs::read_to_string(path).map_err(|source| Error::Io {
        context: format!("reading {}", path.display()),
        source,
    })?;
    parse_config_with(&text, kind)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn minimal_file_gets_defaults() {
        let cfg = parse_config("kind=twist6\ntheta_deg=2.5").unwrap();
        assert_eq!(cfg.kind, ExperimentKind::Twist6);
        assert_eq!(cfg.admm.rho0, 100.0);
        assert_eq!(cfg.admm.beta, 1.001);
        assert_eq!(cfg.admm.alpha, 5e-4);
        assert_eq!(cfg.admm.tol_inner, 1e-8);
        assert_eq!(cfg.alm.beta, 1.0);
        assert_eq!(cfg.penalty.rho, 800.0);
        assert_eq!(cfg.burgers, BurgersSpec::Preset(Preset::Fcc111));
    }

    #[test]
    fn angle_above_low_angle_bound_is_rejected() {
        match parse_config("kind=twist6\ntheta_deg=20") {
            Err(Error::ConfigInvalid { field, .. }) => assert_eq!(field, "theta_deg"),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn errors_carry_line_numbers() {
        let text = "kind = certify\n# c\n\n[certify]\nn_r = 64\nbogus = 1\n";
        match parse_config(text) {
            Err(Error::ConfigParse { line, message }) => {
                assert_eq!(line, 6);
                assert!(message.contains("bogus"));
            }
            other => panic!("unexpected {other:?}"),
        }
        match parse_config("kind = twist6\n[nowhere]\n") {
            Err(Error::ConfigParse { line, .. }) => assert_eq!(line, 2),
            other => panic!("unexpected {other:?}"),
        }
        match parse_config("kind = twist6\ntheta_deg = abc\n") {
            Err(Error::ConfigParse { line, .. }) => assert_eq!(line, 2),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn printed_config_parses_back() {
        let text = "kind = counterexample\ntheta_deg = 3.75 # trailing\nburgers = 1,0,0; 0.5,0.8660254037844386,0\n\
                    seed = 7\nthreads = 2\n[admm]\nbeta = 1.01\n[certify]\nfd_step = 1e-4\n\
                    [counterexample]\nbetas = 1, 1.05, 1.1\nx0 = 1, -2, 0.5\n";
        let cfg = parse_config(text).unwrap();
        let again = parse_config(&cfg.to_config_string()).unwrap();
        assert_eq!(cfg, again);
        assert_eq!(again.counterexample.betas, vec![1.0, 1.05, 1.1]);
        assert_eq!(again.certify.fd_step, Some(1e-4));
    }

    #[test]
    fn three_family_experiments_need_three_vectors() {
        assert!(parse_config("kind = certify\npreset = fcc111\n").is_err());
        let cfg = parse_config("kind = certify\n").unwrap();
        assert_eq!(cfg.burgers.vectors().len(), 3);
    }

    #[test]
    fn kind_conflict_is_reported() {
        assert!(parse_config_with("kind = twist6\n", Some(ExperimentKind::Certify)).is_err());
        let cfg = parse_config_with("theta_deg = 7.5\n", Some(ExperimentKind::Epsilon0)).unwrap();
        assert_eq!(cfg.kind, ExperimentKind::Epsilon0);
        assert!(parse_config("theta_deg = 7.5\n").is_err());
    }
}
