//! JSON run configuration.
//!
//! Precedence, lowest first: built-in defaults, the JSON document given with
//! `--config`, command-line flags. The output directory additionally honours
//! the `STEKLOV_PATTERNS_OUT` environment variable, which sits between the
//! JSON value and the `--out` flag.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use steklov_patterns::DomainSpec;

use crate::CliError;

pub const OUTPUT_ENV: &str = "STEKLOV_PATTERNS_OUT";

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Command {
    Mesh,
    Steklov,
    TraceProbe,
    Certificate,
    Evolve,
    Stationary,
    Stability,
    Sweep,
}

impl Command {
    pub fn name(self) -> &'static str {
        match self {
            Command::Mesh => "mesh",
            Command::Steklov => "steklov",
            Command::TraceProbe => "trace-probe",
            Command::Certificate => "certificate",
            Command::Evolve => "evolve",
            Command::Stationary => "stationary",
            Command::Stability => "stability",
            Command::Sweep => "sweep",
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum DomainConfig {
    Stadium { radius: f64, diameter: f64 },
    Disk { radius: f64 },
    Ellipse { semi_major: f64, semi_minor: f64 },
    RoundedRectangle { width: f64, height: f64, corner_radius: f64 },
    Square { side: f64 },
    Polygon { path: PathBuf },
}

impl DomainConfig {
    pub fn to_spec(&self) -> DomainSpec {
        match self {
            DomainConfig::Stadium { radius, diameter } => DomainSpec::stadium(*radius, *diameter),
            DomainConfig::Disk { radius } => DomainSpec::disk(*radius),
            DomainConfig::Ellipse { semi_major, semi_minor } => DomainSpec::ellipse(*semi_major, *semi_minor),
            DomainConfig::RoundedRectangle { width, height, corner_radius } => {
                DomainSpec::rounded_rectangle(*width, *height, *corner_radius)
            }
            DomainConfig::Square { side } => DomainSpec::rounded_rectangle(*side, *side, 0.0),
            DomainConfig::Polygon { path } => DomainSpec::PolygonFile { path: path.clone() },
        }
    }

    /// Parses the compact flag form, e.g. `stadium:1,10` or `polygon:hull.txt`.
    pub fn parse(text: &str) -> Result<Self, String> {
        let (kind, rest) = text.split_once(':').unwrap_or((text, ""));
        if kind == "polygon" {
            return Ok(DomainConfig::Polygon { path: PathBuf::from(rest) });
        }
        let nums: Vec<f64> = rest
            .split(',')
            .filter(|s| !s.trim().is_empty())
            .map(|s| s.trim().parse::<f64>().map_err(|e| format!("bad number {s:?} in domain: {e}")))
            .collect::<Result<_, _>>()?;
        let want = |n: usize| {
            if nums.len() == n {
                Ok(())
            } else {
                Err(format!("domain {kind} takes {n} parameters, got {}", nums.len()))
            }
        };
        match kind {
            "stadium" => want(2).map(|_| DomainConfig::Stadium { radius: nums[0], diameter: nums[1] }),
            "disk" => want(1).map(|_| DomainConfig::Disk { radius: nums[0] }),
            "ellipse" => want(2).map(|_| DomainConfig::Ellipse { semi_major: nums[0], semi_minor: nums[1] }),
            "rounded-rectangle" => want(3).map(|_| DomainConfig::RoundedRectangle {
                width: nums[0],
                height: nums[1],
                corner_radius: nums[2],
            }),
            "square" => want(1).map(|_| DomainConfig::Square { side: nums[0] }),
            _ => Err(format!("unknown domain kind {kind:?}")),
        }
    }
}

/// Initial field for the flow commands.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum InitialField {
    /// `clamp(2x/δ, −1, 1)`.
    W0 { delta: f64 },
    /// I.i.d. uniform nodal values on `[−1, 1]` from ChaCha8 seeded with `seed`.
    Random,
    Constant { value: f64 },
}

impl InitialField {
    pub fn parse(text: &str) -> Result<Self, String> {
        let (kind, rest) = text.split_once(':').unwrap_or((text, ""));
        let num = || rest.trim().parse::<f64>().map_err(|e| format!("bad number {rest:?}: {e}"));
        match kind {
            "w0" => Ok(InitialField::W0 { delta: num()? }),
            "random" => Ok(InitialField::Random),
            "constant" => Ok(InitialField::Constant { value: num()? }),
            _ => Err(format!("unknown initial field {kind:?}; expected w0:<delta>, random or constant:<value>")),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CertificateMode {
    Bound,
    Computed,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CertificateConfig {
    pub mode: CertificateMode,
    pub r: f64,
    pub d: f64,
    /// Bound mode only. `None` calibrates `c = 0.9·min(μ₁·D)` over the
    /// `trace_probe` stadium sweep at mesh size `h`.
    pub c: Option<f64>,
    pub deltas: Vec<f64>,
    pub lambdas: Vec<f64>,
}

impl Default for CertificateConfig {
    fn default() -> Self {
        Self { mode: CertificateMode::Bound, r: 1.0, d: 300.0, c: None, deltas: vec![], lambdas: vec![] }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Family {
    Stadium,
    Disk,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TraceProbeConfig {
    pub family: Family,
    pub radius: f64,
    pub diameters: Vec<f64>,
    /// Mesh sizes; each diameter is measured at every one.
    pub resolutions: Vec<f64>,
}

impl Default for TraceProbeConfig {
    fn default() -> Self {
        Self { family: Family::Stadium, radius: 1.0, diameters: vec![4.0, 8.0, 16.0, 32.0], resolutions: vec![] }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum SweepStart {
    /// `w₀(δ)` for each grid `δ`.
    W0,
    /// `count` random fields with seeds `seed, seed + 1, …`.
    Random { count: u64 },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SweepConfig {
    pub family: Family,
    /// Cap radius of the stadia; ignored for disks (`r = D/2`).
    pub radius: f64,
    pub diameters: Vec<f64>,
    /// `δ` as fractions of `D`.
    pub delta_fractions: Vec<f64>,
    pub lambdas: Vec<f64>,
    pub start: SweepStart,
}

impl Default for SweepConfig {
    fn default() -> Self {
        Self {
            family: Family::Stadium,
            radius: 1.0,
            diameters: vec![10.0, 20.0, 40.0],
            delta_fractions: vec![0.25],
            lambdas: vec![0.5, 1.0, 2.0, 4.0],
            start: SweepStart::W0,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub command: Option<Command>,
    pub domain: DomainConfig,
    pub h: f64,
    pub output_dir: PathBuf,
    pub seed: u64,
    /// Worker threads; `None` uses every core.
    pub jobs: Option<usize>,
    /// Number of Steklov eigenvalues reported.
    pub k: usize,
    pub lambda: f64,
    /// `None` selects `min(0.1, 0.25/λ)`.
    pub dt: Option<f64>,
    pub tol: f64,
    pub newton_tol: f64,
    pub max_steps: usize,
    pub initial: InitialField,
    /// Write a VTK snapshot every this many accepted steps.
    pub snapshot_stride: Option<usize>,
    pub certificate: CertificateConfig,
    pub trace_probe: TraceProbeConfig,
    pub sweep: SweepConfig,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            command: None,
            domain: DomainConfig::Disk { radius: 1.0 },
            h: 0.1,
            output_dir: PathBuf::from("out"),
            seed: 0,
            jobs: None,
            k: 5,
            lambda: 1.0,
            dt: None,
            tol: 1e-6,
            newton_tol: 1e-10,
            max_steps: 20_000,
            initial: InitialField::Random,
            snapshot_stride: None,
            certificate: CertificateConfig::default(),
            trace_probe: TraceProbeConfig::default(),
            sweep: SweepConfig::default(),
        }
    }
}

fn field_error(field: &str, detail: impl std::fmt::Display) -> CliError {
    CliError::Usage(format!("field `{field}`: {detail}"))
}

fn positive(field: &str, x: f64) -> Result<(), CliError> {
    if x > 0.0 && x.is_finite() {
        Ok(())
    } else {
        Err(field_error(field, format!("must be positive and finite, got {x}")))
    }
}

fn nonempty_positive(field: &str, xs: &[f64]) -> Result<(), CliError> {
    if xs.is_empty() {
        return Err(field_error(field, "grid must be nonempty"));
    }
    xs.iter().try_for_each(|&x| positive(field, x))
}

impl RunConfig {
    pub fn from_json(text: &str) -> Result<Self, CliError> {
        serde_json::from_str(text).map_err(|e| CliError::Usage(format!("config: {e}")))
    }

    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Usage(format!("cannot read config {}: {e}", path.display())))?;
        Self::from_json(&text)
    }

    pub fn dt_or_default(&self) -> f64 {
        self.dt.unwrap_or_else(|| steklov_patterns::dynamics::default_dt(self.lambda))
    }

    /// Checks the ranges of the fields the selected command reads.
    pub fn validate(&self) -> Result<(), CliError> {
        let command = self.command.ok_or_else(|| field_error("command", "no command given"))?;
        if command != Command::Certificate || self.certificate.mode == CertificateMode::Computed {
            positive("h", self.h)?;
        }
        let needs_domain = !matches!(command, Command::TraceProbe | Command::Sweep)
            && !(command == Command::Certificate && self.certificate.mode == CertificateMode::Bound);
        if needs_domain {
            self.domain.to_spec().validate().map_err(|e| field_error("domain", e))?;
        }
        if let Some(0) = self.jobs {
            return Err(field_error("jobs", "must be at least 1"));
        }
        match command {
            Command::Mesh => {}
            Command::Steklov => {
                if self.k < 2 {
                    return Err(field_error("k", format!("need at least 2 eigenvalues, got {}", self.k)));
                }
            }
            Command::TraceProbe => {
                positive("trace_probe.radius", self.trace_probe.radius)?;
                nonempty_positive("trace_probe.diameters", &self.trace_probe.diameters)?;
                self.trace_probe.resolutions.iter().try_for_each(|&h| positive("trace_probe.resolutions", h))?;
            }
            Command::Certificate => {
                let c = &self.certificate;
                match c.mode {
                    CertificateMode::Bound => {
                        positive("certificate.r", c.r)?;
                        positive("certificate.d", c.d)?;
                        match c.c {
                            Some(value) => positive("certificate.c", value)?,
                            None => {
                                positive("h", self.h)?;
                                nonempty_positive("trace_probe.diameters", &self.trace_probe.diameters)?;
                            }
                        }
                    }
                    CertificateMode::Computed => {
                        nonempty_positive("certificate.deltas", &c.deltas)?;
                        nonempty_positive("certificate.lambdas", &c.lambdas)?;
                    }
                }
            }
            Command::Evolve | Command::Stationary | Command::Stability => {
                positive("lambda", self.lambda)?;
                if let Some(dt) = self.dt {
                    positive("dt", dt)?;
                }
                positive("tol", self.tol)?;
                positive("newton_tol", self.newton_tol)?;
                if self.max_steps == 0 {
                    return Err(field_error("max_steps", "must be at least 1"));
                }
                match self.initial {
                    InitialField::W0 { delta } => positive("initial.delta", delta)?,
                    InitialField::Constant { value } if !value.is_finite() => {
                        return Err(field_error("initial.value", "must be finite"));
                    }
                    _ => {}
                }
                if let Some(0) = self.snapshot_stride {
                    return Err(field_error("snapshot_stride", "must be at least 1"));
                }
            }
            Command::Sweep => {
                let s = &self.sweep;
                if s.family == Family::Stadium {
                    positive("sweep.radius", s.radius)?;
                }
                nonempty_positive("sweep.diameters", &s.diameters)?;
                nonempty_positive("sweep.lambdas", &s.lambdas)?;
                if s.delta_fractions.is_empty() {
                    return Err(field_error("sweep.delta_fractions", "grid must be nonempty"));
                }
                if let Some(&f) = s.delta_fractions.iter().find(|&&f| !(f > 0.0 && f < 0.5)) {
                    return Err(field_error("sweep.delta_fractions", format!("{f} outside (0, 1/2)")));
                }
                if let SweepStart::Random { count: 0 } = s.start {
                    return Err(field_error("sweep.start.count", "must be at least 1"));
                }
                positive("tol", self.tol)?;
                positive("newton_tol", self.newton_tol)?;
            }
        }
        Ok(())
    }
}
