//! Run configuration: a flat `key=value` file with `#` comments, plus
//! command-line overrides that win over the file.
//!
//! [`RunConfig::echo`] writes every key back in a form that [`RunConfig::parse_str`]
//! reads to an identical value.

use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use relboltz_core::collision_op::{QuadratureSpec, Representation};
use relboltz_core::cross_sections::{AngularTable, CrossSection, CrossSectionKind, CutoffParams, EnvelopeParams};
use relboltz_core::distributions::WeightParams;
use relboltz_core::grid::GridGeometry;
use relboltz_core::limit_harness::{ComponentKind, SampleSpec};
use relboltz_core::solver::{SolveConfig, TrajectoryFormat};

use crate::error::CliError;

/// The five subcommands.
#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum Command {
    Verify,
    Kinematics,
    Xsec,
    Limit,
    Solve,
}

impl Command {
    pub fn name(self) -> &'static str {
        match self {
            Command::Verify => "verify",
            Command::Kinematics => "kinematics",
            Command::Xsec => "xsec",
            Command::Limit => "limit",
            Command::Solve => "solve",
        }
    }
}

impl FromStr for Command {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "verify" => Ok(Command::Verify),
            "kinematics" => Ok(Command::Kinematics),
            "xsec" => Ok(Command::Xsec),
            "limit" => Ok(Command::Limit),
            "solve" => Ok(Command::Solve),
            _ => Err(format!("unknown command '{s}'")),
        }
    }
}

/// Cross-section catalog member selected by `sigma.kind`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SigmaKind {
    HardBall,
    Moller,
    Compton,
    Neutrino,
    Israel,
    MaxwellParticles,
}

impl SigmaKind {
    const ALL: [SigmaKind; 6] =
        [Self::HardBall, Self::Moller, Self::Compton, Self::Neutrino, Self::Israel, Self::MaxwellParticles];

    pub fn name(self) -> &'static str {
        match self {
            Self::HardBall => "hard_ball",
            Self::Moller => "moller",
            Self::Compton => "compton",
            Self::Neutrino => "neutrino",
            Self::Israel => "israel",
            Self::MaxwellParticles => "maxwell_particles",
        }
    }
}

impl FromStr for SigmaKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        Self::ALL.into_iter().find(|k| k.name() == s).ok_or_else(|| {
            let names: Vec<&str> = Self::ALL.iter().map(|k| k.name()).collect();
            format!("unknown cross section '{s}' (expected one of {})", names.join(", "))
        })
    }
}

/// What `limit` computes.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LimitKind {
    /// End-to-end convergence of the solution.
    Solution,
    /// The four pointwise components.
    Components,
    One(ComponentKind),
}

impl fmt::Display for LimitKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            LimitKind::Solution => f.write_str("solution"),
            LimitKind::Components => f.write_str("components"),
            LimitKind::One(k) => f.write_str(k.name()),
        }
    }
}

impl FromStr for LimitKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "solution" => Ok(LimitKind::Solution),
            "components" => Ok(LimitKind::Components),
            other => ComponentKind::parse(other).map(LimitKind::One).map_err(|_| {
                format!("unknown limit kind '{other}' (expected solution, components or a component name)")
            }),
        }
    }
}

/// Every setting of a run.
#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub command: Option<Command>,
    pub out: Option<PathBuf>,
    pub seed: u64,
    pub dim: usize,
    pub c_list: Vec<f64>,
    /// Dyadic `c` values of the pointwise component sweeps.
    pub sweep_c_list: Vec<f64>,
    pub alpha: f64,
    pub beta: f64,
    pub b: f64,
    pub cutoff_b: f64,
    pub cutoff_a: f64,
    pub t_final: f64,
    pub n_t: usize,
    pub n_x: usize,
    pub n_p: usize,
    pub n_omega: usize,
    pub x_extent: f64,
    pub p_extent: f64,
    pub picard_max: usize,
    pub picard_tol: f64,
    pub representation: Representation,
    pub truncation: f64,
    pub ks_envelope: f64,
    pub sigma_kind: SigmaKind,
    pub sigma_constant: f64,
    pub sigma_r0: f64,
    pub sigma_coupling: f64,
    pub sigma_hbar: f64,
    pub sigma_table: Option<PathBuf>,
    pub sigma_cutoff: bool,
    pub envelope_a1: f64,
    pub envelope_a2: f64,
    pub envelope_alpha1: f64,
    pub envelope_gamma: f64,
    pub envelope_sigma1: f64,
    pub limit_kind: LimitKind,
    pub limit_samples: usize,
    pub limit_radius: f64,
    pub measure_samples: usize,
    pub kinematics_samples: usize,
    pub xsec_tuples: usize,
    pub solve_format: TrajectoryFormat,
    pub solve_ks: bool,
    pub verify_solver: bool,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            command: None,
            out: None,
            seed: 42,
            dim: 2,
            c_list: vec![2.0, 4.0, 8.0, 16.0, 32.0],
            sweep_c_list: vec![4.0, 8.0, 16.0, 32.0, 64.0, 128.0, 256.0],
            alpha: 1.0,
            beta: 1.0,
            b: 1e-3,
            cutoff_b: 1.0,
            cutoff_a: 0.5,
            t_final: 1.0,
            n_t: 16,
            n_x: 24,
            n_p: 24,
            n_omega: 16,
            x_extent: 5.0,
            p_extent: 6.0,
            picard_max: 30,
            picard_tol: 1e-7,
            representation: Representation::Gs,
            truncation: 1e-14,
            ks_envelope: 2.0,
            sigma_kind: SigmaKind::HardBall,
            sigma_constant: 1.0,
            sigma_r0: 1.0,
            sigma_coupling: 1.0,
            sigma_hbar: 1.0,
            sigma_table: None,
            sigma_cutoff: true,
            envelope_a1: 1.0,
            envelope_a2: 0.0,
            envelope_alpha1: 1.0,
            envelope_gamma: 0.0,
            envelope_sigma1: 1.0,
            limit_kind: LimitKind::Components,
            limit_samples: 1000,
            limit_radius: 1.0,
            measure_samples: 10_000,
            kinematics_samples: 16,
            xsec_tuples: 20,
            solve_format: TrajectoryFormat::Text,
            solve_ks: false,
            verify_solver: false,
        }
    }
}

fn num<T: FromStr>(v: &str) -> Result<T, String> {
    v.parse().map_err(|_| format!("malformed value '{v}'"))
}

fn boolean(v: &str) -> Result<bool, String> {
    match v {
        "true" | "1" | "yes" => Ok(true),
        "false" | "0" | "no" => Ok(false),
        _ => Err(format!("malformed boolean '{v}'")),
    }
}

fn list(v: &str) -> Result<Vec<f64>, String> {
    v.split(',').map(|s| num::<f64>(s.trim())).collect()
}

fn optional_path(v: &str) -> Option<PathBuf> {
    (!v.is_empty()).then(|| PathBuf::from(v))
}

fn float(v: f64) -> String {
    format!("{v:?}")
}

/// Where a setting came from, for error messages.
#[derive(Debug, Clone, Copy)]
enum Origin<'a> {
    Line(usize),
    Override(&'a str),
}

impl RunConfig {
    /// Sets `key` from its textual value.
    fn set(&mut self, key: &str, v: &str) -> Result<(), String> {
        match key {
            "command" => self.command = if v.is_empty() { None } else { Some(v.parse()?) },
            "out" => self.out = optional_path(v),
            "seed" => self.seed = num(v)?,
            "N" => self.dim = num(v)?,
            "c_list" => self.c_list = list(v)?,
            "sweep_c_list" => self.sweep_c_list = list(v)?,
            "alpha" => self.alpha = num(v)?,
            "beta" => self.beta = num(v)?,
            "b" => self.b = num(v)?,
            "B" => self.cutoff_b = num(v)?,
            "a" => self.cutoff_a = num(v)?,
            "T" => self.t_final = num(v)?,
            "n_t" => self.n_t = num(v)?,
            "n_x" => self.n_x = num(v)?,
            "n_p" => self.n_p = num(v)?,
            "n_omega" | "n_ω" => self.n_omega = num(v)?,
            "x_extent" => self.x_extent = num(v)?,
            "p_extent" => self.p_extent = num(v)?,
            "picard_max" => self.picard_max = num(v)?,
            "picard_tol" => self.picard_tol = num(v)?,
            "representation" => {
                self.representation = match v {
                    "gs" => Representation::Gs,
                    "cm" => Representation::Cm,
                    _ => return Err(format!("unknown representation '{v}' (expected gs or cm)")),
                }
            }
            "truncation" => self.truncation = num(v)?,
            "ks_envelope" => self.ks_envelope = num(v)?,
            "sigma.kind" => self.sigma_kind = v.parse()?,
            "sigma.constant" => self.sigma_constant = num(v)?,
            "sigma.r0" => self.sigma_r0 = num(v)?,
            "sigma.G" => self.sigma_coupling = num(v)?,
            "sigma.hbar" => self.sigma_hbar = num(v)?,
            "sigma.b_table" => self.sigma_table = optional_path(v),
            "sigma.cutoff" => self.sigma_cutoff = boolean(v)?,
            "envelope.A1" => self.envelope_a1 = num(v)?,
            "envelope.A2" => self.envelope_a2 = num(v)?,
            "envelope.alpha1" => self.envelope_alpha1 = num(v)?,
            "envelope.gamma" => self.envelope_gamma = num(v)?,
            "envelope.sigma1" => self.envelope_sigma1 = num(v)?,
            "limit.kind" | "kind" => self.limit_kind = v.parse()?,
            "limit.samples" => self.limit_samples = num(v)?,
            "limit.radius" => self.limit_radius = num(v)?,
            "limit.measure_samples" => self.measure_samples = num(v)?,
            "kinematics.samples" => self.kinematics_samples = num(v)?,
            "xsec.tuples" => self.xsec_tuples = num(v)?,
            "solve.format" => {
                self.solve_format = match v {
                    "text" => TrajectoryFormat::Text,
                    "binary" => TrajectoryFormat::Binary,
                    _ => return Err(format!("unknown trajectory format '{v}' (expected text or binary)")),
                }
            }
            "solve.ks" => self.solve_ks = boolean(v)?,
            "verify.solver" => self.verify_solver = boolean(v)?,
            _ => return Err(format!("unknown key '{key}'")),
        }
        Ok(())
    }

    /// Every key with its current value, in echo order.
    pub fn entries(&self) -> Vec<(&'static str, String)> {
        let path = |p: &Option<PathBuf>| p.as_ref().map(|p| p.display().to_string()).unwrap_or_default();
        vec![
            ("command", self.command.map(|c| c.name().to_string()).unwrap_or_default()),
            ("out", path(&self.out)),
            ("seed", self.seed.to_string()),
            ("N", self.dim.to_string()),
            ("c_list", self.c_list.iter().map(|c| float(*c)).collect::<Vec<_>>().join(",")),
            ("sweep_c_list", self.sweep_c_list.iter().map(|c| float(*c)).collect::<Vec<_>>().join(",")),
            ("alpha", float(self.alpha)),
            ("beta", float(self.beta)),
            ("b", float(self.b)),
            ("B", float(self.cutoff_b)),
            ("a", float(self.cutoff_a)),
            ("T", float(self.t_final)),
            ("n_t", self.n_t.to_string()),
            ("n_x", self.n_x.to_string()),
            ("n_p", self.n_p.to_string()),
            ("n_omega", self.n_omega.to_string()),
            ("x_extent", float(self.x_extent)),
            ("p_extent", float(self.p_extent)),
            ("picard_max", self.picard_max.to_string()),
            ("picard_tol", float(self.picard_tol)),
            ("representation", self.representation.name().to_string()),
            ("truncation", float(self.truncation)),
            ("ks_envelope", float(self.ks_envelope)),
            ("sigma.kind", self.sigma_kind.name().to_string()),
            ("sigma.constant", float(self.sigma_constant)),
            ("sigma.r0", float(self.sigma_r0)),
            ("sigma.G", float(self.sigma_coupling)),
            ("sigma.hbar", float(self.sigma_hbar)),
            ("sigma.b_table", path(&self.sigma_table)),
            ("sigma.cutoff", self.sigma_cutoff.to_string()),
            ("envelope.A1", float(self.envelope_a1)),
            ("envelope.A2", float(self.envelope_a2)),
            ("envelope.alpha1", float(self.envelope_alpha1)),
            ("envelope.gamma", float(self.envelope_gamma)),
            ("envelope.sigma1", float(self.envelope_sigma1)),
            ("limit.kind", self.limit_kind.to_string()),
            ("limit.samples", self.limit_samples.to_string()),
            ("limit.radius", float(self.limit_radius)),
            ("limit.measure_samples", self.measure_samples.to_string()),
            ("kinematics.samples", self.kinematics_samples.to_string()),
            ("xsec.tuples", self.xsec_tuples.to_string()),
            ("solve.format", match self.solve_format {
                TrajectoryFormat::Text => "text".to_string(),
                TrajectoryFormat::Binary => "binary".to_string(),
            }),
            ("solve.ks", self.solve_ks.to_string()),
            ("verify.solver", self.verify_solver.to_string()),
        ]
    }

    /// The configuration as a config file.
    pub fn echo(&self) -> String {
        self.entries().into_iter().map(|(k, v)| format!("{k}={v}\n")).collect()
    }

    fn apply(&mut self, line: &str, origin: Origin<'_>) -> Result<(), CliError> {
        let fail = |message: String| match origin {
            Origin::Line(line) => CliError::Config { line, message },
            Origin::Override(text) => CliError::Override { text: text.to_string(), message },
        };
        let (key, value) = line.split_once('=').ok_or_else(|| fail("expected key=value".to_string()))?;
        self.set(key.trim(), value.trim()).map_err(fail)
    }

    /// Parses config text with defaults for absent keys, then `overrides`, then validates.
    pub fn parse_str(text: &str, overrides: &[String]) -> Result<Self, CliError> {
        let mut cfg = RunConfig::default();
        for (i, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if !line.is_empty() {
                cfg.apply(line, Origin::Line(i + 1))?;
            }
        }
        for o in overrides {
            cfg.apply(o, Origin::Override(o))?;
        }
        cfg.validate()?;
        Ok(cfg)
    }

    /// Reads `path` (or uses defaults when `None`) and applies `overrides`.
    pub fn load(path: Option<&Path>, overrides: &[String]) -> Result<Self, CliError> {
        let text = match path {
            Some(p) => std::fs::read_to_string(p).map_err(|e| CliError::Io { path: p.to_path_buf(), source: e })?,
            None => String::new(),
        };
        Self::parse_str(&text, overrides)
    }

    fn invalid(key: &'static str, message: impl Into<String>) -> CliError {
        CliError::Invalid { key, message: message.into() }
    }

    /// Range checks and file references.
    pub fn validate(&self) -> Result<(), CliError> {
        if self.dim != 2 && self.dim != 3 {
            return Err(Self::invalid("N", "must be 2 or 3"));
        }
        if self.c_list.is_empty() || self.c_list.iter().any(|c| !(*c > 0.0)) {
            return Err(Self::invalid("c_list", "needs at least one positive value"));
        }
        if self.c_list.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Self::invalid("c_list", "must be strictly ascending"));
        }
        if self.sweep_c_list.len() < 4 || self.sweep_c_list.windows(2).any(|w| w[1] != 2.0 * w[0]) || !(self.sweep_c_list[0] > 0.0) {
            return Err(Self::invalid("sweep_c_list", "needs at least four values, each twice the previous"));
        }
        if self.sigma_kind == SigmaKind::Israel && self.sigma_table.is_none() {
            return Err(Self::invalid("sigma.b_table", "sigma.kind=israel requires sigma.b_table (a two-column 'theta value' file)"));
        }
        if let Some(path) = &self.sigma_table {
            if !path.is_file() {
                return Err(Self::invalid("sigma.b_table", format!("file {} does not exist", path.display())));
            }
            self.angular_table()?;
        }
        WeightParams::new(self.alpha, self.beta).map_err(|e| Self::invalid("alpha", e.to_string()))?;
        CutoffParams::new(self.cutoff_b, self.cutoff_a, self.alpha).map_err(|e| Self::invalid("B", e.to_string()))?;
        self.envelope().validate().map_err(|e| Self::invalid("envelope.gamma", e.to_string()))?;
        self.solve_config(self.c_list[0]).validate().map_err(|e| Self::invalid("solver", e.to_string()))?;
        if self.limit_samples == 0 || !(self.limit_radius > 0.0) {
            return Err(Self::invalid("limit.samples", "limit.samples and limit.radius must be positive"));
        }
        if self.measure_samples < 1000 {
            return Err(Self::invalid("limit.measure_samples", "must be at least 1000"));
        }
        if self.kinematics_samples == 0 || self.xsec_tuples == 0 {
            return Err(Self::invalid("kinematics.samples", "sample counts must be positive"));
        }
        Ok(())
    }

    fn angular_table(&self) -> Result<AngularTable, CliError> {
        let path = self.sigma_table.as_ref().ok_or_else(|| Self::invalid("sigma.b_table", "missing"))?;
        let text = std::fs::read_to_string(path).map_err(|e| CliError::Io { path: path.clone(), source: e })?;
        AngularTable::parse(&text).map_err(|e| Self::invalid("sigma.b_table", e.to_string()))
    }

    /// The selected cross section, without the cut-off.
    pub fn cross_section(&self) -> Result<CrossSection, CliError> {
        let table = || -> Result<AngularTable, CliError> {
            if self.sigma_table.is_some() {
                self.angular_table()
            } else {
                Ok(AngularTable::constant(self.sigma_constant))
            }
        };
        let kind = match self.sigma_kind {
            SigmaKind::HardBall => CrossSectionKind::HardBall { constant: self.sigma_constant },
            SigmaKind::Moller => CrossSectionKind::Moller { r0: self.sigma_r0 },
            SigmaKind::Compton => CrossSectionKind::Compton { r0: self.sigma_r0 },
            SigmaKind::Neutrino => CrossSectionKind::Neutrino { coupling: self.sigma_coupling, hbar: self.sigma_hbar },
            SigmaKind::Israel => CrossSectionKind::Israel { profile: self.angular_table()? },
            SigmaKind::MaxwellParticles => CrossSectionKind::MaxwellParticles { profile: table()? },
        };
        Ok(CrossSection::new(kind))
    }

    pub fn cutoff(&self) -> CutoffParams {
        CutoffParams { b: self.cutoff_b, a: self.cutoff_a, alpha: self.alpha }
    }

    pub fn envelope(&self) -> EnvelopeParams {
        EnvelopeParams::new(self.envelope_a1, self.envelope_a2, self.envelope_alpha1, self.envelope_gamma, self.envelope_sigma1, self.dim)
    }

    /// Solver settings at speed of light `c`. The cross section falls back to
    /// unit hard spheres if the selected one cannot be built.
    pub fn solve_config(&self, c: f64) -> SolveConfig {
        let mut sigma = self.cross_section().unwrap_or_else(|_| CrossSection::hard_ball(1.0));
        if self.sigma_cutoff {
            sigma = sigma.with_cutoff(self.cutoff());
        }
        SolveConfig {
            c,
            t_final: self.t_final,
            n_t: self.n_t,
            picard_max: self.picard_max,
            picard_tol: self.picard_tol,
            sigma,
            weights: WeightParams { alpha: self.alpha, beta: self.beta },
            b: self.b,
            quad: QuadratureSpec::grid(2, self.p_extent, self.n_p, self.n_omega),
            grid: GridGeometry { dim: 2, x_extent: self.x_extent, n_x: self.n_x, p_extent: self.p_extent, n_p: self.n_p },
            representation: self.representation,
            truncation: self.truncation,
            ks_envelope: self.ks_envelope,
        }
    }

    pub fn sample_spec(&self) -> SampleSpec {
        SampleSpec {
            dim: self.dim,
            n_samples: self.limit_samples,
            radius: self.limit_radius,
            x_radius: 1.0,
            t_final: self.t_final,
            cutoff: self.cutoff(),
            measure_samples: self.measure_samples,
            seed: self.seed,
        }
    }
}
