//! Strict TOML experiment configuration.
//!
//! Every table rejects unknown keys, so a misspelt option fails loudly
//! instead of silently falling back to a default.

use std::fmt;
use std::path::Path;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::alpha::{plateau_field, vee_field, AlphaField, FieldKind, FieldLimits, Growth, Interpolation, MinStructure};
use crate::error::{Error, Result};
use crate::intervals::IntervalUnion;
use crate::pde::{Boundary, Grid1D, InitialCondition};
use crate::sim::{geometric_grid, SimConfig};
use crate::stats::RegimeOptions;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Experiment {
    Simulate,
    Occupation,
    Growth,
    Regime,
    Pde,
    Validate,
    Compare,
}

impl Experiment {
    pub fn name(self) -> &'static str {
        match self {
            Self::Simulate => "simulate",
            Self::Occupation => "occupation",
            Self::Growth => "growth",
            Self::Regime => "regime",
            Self::Pde => "pde",
            Self::Validate => "validate",
            Self::Compare => "compare",
        }
    }
}

impl fmt::Display for Experiment {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum FieldSpec {
    Constant {
        alpha: f64,
    },
    TwoLevel {
        alpha_in: f64,
        alpha_out: f64,
        lo: f64,
        hi: f64,
    },
    Piecewise {
        breakpoints: Vec<f64>,
        values: Vec<f64>,
        tail_left: f64,
        tail_right: f64,
    },
    Indicator {
        intervals: Vec<[f64; 2]>,
        alpha_in: f64,
        alpha_out: f64,
    },
    /// Unbounded minimum set `{x : l(A ∩ [0, x]) ~ scale x^exponent}`,
    /// truncated at `radius`.
    Lattice {
        exponent: f64,
        #[serde(default = "one")]
        scale: f64,
        width: f64,
        radius: f64,
        alpha_in: f64,
        alpha_out: f64,
        #[serde(default = "yes")]
        symmetric: bool,
    },
    Vee {
        base: f64,
        amp: f64,
        center: f64,
        width: f64,
    },
    Plateau {
        base: f64,
        amp: f64,
        center: f64,
        half: f64,
        ramp: f64,
    },
    Tabulated {
        grid: Vec<f64>,
        values: Vec<f64>,
        #[serde(default = "linear")]
        rule: String,
        tail_left: f64,
        tail_right: f64,
    },
}

fn one() -> f64 {
    1.0
}
fn yes() -> bool {
    true
}
fn linear() -> String {
    "linear".into()
}

impl FieldSpec {
    pub fn build(&self) -> Result<AlphaField> {
        match self {
            Self::Constant { alpha } => AlphaField::constant(*alpha),
            Self::TwoLevel {
                alpha_in,
                alpha_out,
                lo,
                hi,
            } => AlphaField::two_level(*alpha_in, *lo, *hi, *alpha_out),
            Self::Piecewise {
                breakpoints,
                values,
                tail_left,
                tail_right,
            } => AlphaField::piecewise(breakpoints.clone(), values.clone(), *tail_left, *tail_right),
            Self::Indicator {
                intervals,
                alpha_in,
                alpha_out,
            } => AlphaField::indicator(&IntervalUnion::parse_pairs(intervals)?, *alpha_in, *alpha_out),
            Self::Lattice {
                alpha_in,
                alpha_out,
                ..
            } => AlphaField::indicator(&self.lattice_set()?.unwrap(), *alpha_in, *alpha_out),
            Self::Vee {
                base,
                amp,
                center,
                width,
            } => vee_field(*base, *amp, *center, *width),
            Self::Plateau {
                base,
                amp,
                center,
                half,
                ramp,
            } => plateau_field(*base, *amp, *center, *half, *ramp),
            Self::Tabulated {
                grid,
                values,
                rule,
                tail_left,
                tail_right,
            } => {
                let rule = match rule.as_str() {
                    "linear" => Interpolation::Linear,
                    "step" => Interpolation::Step,
                    other => {
                        return Err(Error::Config(format!(
                            "field.rule: expected \"linear\" or \"step\", got \"{other}\""
                        )))
                    }
                };
                AlphaField::new(
                    FieldKind::Tabulated {
                        grid: grid.clone(),
                        values: values.clone(),
                        rule,
                        tail_left: *tail_left,
                        tail_right: *tail_right,
                    },
                    FieldLimits::default(),
                )
            }
        }
    }

    fn lattice_set(&self) -> Result<Option<IntervalUnion>> {
        match self {
            Self::Lattice {
                exponent,
                scale,
                width,
                radius,
                symmetric,
                ..
            } => Ok(Some(IntervalUnion::power_lattice(
                *exponent, *scale, *width, *radius, *symmetric,
            )?)),
            _ => Ok(None),
        }
    }

    /// Minimum-set structure; lattices are declared unbounded.
    pub fn structure(&self, field: &AlphaField) -> Result<MinStructure> {
        match self {
            Self::Lattice {
                exponent, scale, ..
            } => field.min_structure_with_growth(Growth {
                c1: *exponent,
                c2: *exponent,
                a1: *scale,
                a2: *scale,
            }),
            _ => field.min_structure(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SimSection {
    pub dt: f64,
    #[serde(default)]
    pub x0: f64,
    #[serde(default = "default_paths")]
    pub n_paths: usize,
    /// External times at which statistics are reported.
    #[serde(default)]
    pub checkpoints: Option<Vec<f64>>,
    /// Largest external time when `checkpoints` is absent.
    #[serde(default)]
    pub t_max: Option<f64>,
    #[serde(default = "default_points")]
    pub n_points: usize,
    /// Target set; defaults to the minimum set of the field.
    #[serde(default)]
    pub target: Option<Vec<[f64; 2]>>,
    #[serde(default = "default_k")]
    pub k_box: f64,
    #[serde(default = "default_beta")]
    pub beta: f64,
    #[serde(default = "default_high")]
    pub threshold_high: f64,
    #[serde(default = "default_low")]
    pub threshold_low: f64,
    #[serde(default = "default_ci")]
    pub max_ci_halfwidth: f64,
    #[serde(default = "default_steps")]
    pub max_steps: u64,
    /// Internal-time grid `[t_min, t_max]` for growth fits.
    #[serde(default)]
    pub internal_t_min: Option<f64>,
    #[serde(default)]
    pub internal_t_max: Option<f64>,
}

fn default_paths() -> usize {
    100
}
fn default_points() -> usize {
    20
}
fn default_k() -> f64 {
    10.0
}
fn default_beta() -> f64 {
    0.01
}
fn default_high() -> f64 {
    0.8
}
fn default_low() -> f64 {
    0.2
}
fn default_ci() -> f64 {
    0.1
}
fn default_steps() -> u64 {
    100_000_000
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BoundaryName {
    Periodic,
    Dirichlet0,
    Neumann0,
}

impl From<BoundaryName> for Boundary {
    fn from(b: BoundaryName) -> Self {
        match b {
            BoundaryName::Periodic => Boundary::Periodic,
            BoundaryName::Dirichlet0 => Boundary::Dirichlet0,
            BoundaryName::Neumann0 => Boundary::Neumann0,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PdeSection {
    pub x_min: f64,
    pub x_max: f64,
    pub n_x: usize,
    #[serde(default = "default_boundary")]
    pub boundary: BoundaryName,
    pub t_final: f64,
    pub dt: f64,
    pub initial: InitialCondition,
    /// Start points for Monte Carlo comparison.
    #[serde(default)]
    pub start_points: Vec<f64>,
    #[serde(default = "default_paths")]
    pub mc_paths: usize,
    #[serde(default)]
    pub mc_dt: Option<f64>,
    #[serde(default = "default_tol")]
    pub tolerance: f64,
    /// Extra final times for the comparison; `t_final` is always included.
    #[serde(default)]
    pub times: Vec<f64>,
}

fn default_boundary() -> BoundaryName {
    BoundaryName::Periodic
}
fn default_tol() -> f64 {
    0.02
}

impl PdeSection {
    pub fn grid(&self) -> Result<Grid1D> {
        Grid1D::new(self.x_min, self.x_max, self.n_x, self.boundary.into())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Format {
    Csv,
    Bin,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputSection {
    #[serde(default = "default_dir")]
    pub dir: String,
    #[serde(default = "default_formats")]
    pub formats: Vec<Format>,
    /// Write every `stride`-th time row of a PDE solution.
    #[serde(default = "default_stride")]
    pub stride: usize,
}

fn default_dir() -> String {
    "out".into()
}
fn default_formats() -> Vec<Format> {
    vec![Format::Csv]
}
fn default_stride() -> usize {
    1
}

impl Default for OutputSection {
    fn default() -> Self {
        Self {
            dir: default_dir(),
            formats: default_formats(),
            stride: default_stride(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    #[serde(default)]
    pub experiment: Option<Experiment>,
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub field: Option<FieldSpec>,
    #[serde(default)]
    pub sim: Option<SimSection>,
    #[serde(default)]
    pub pde: Option<PdeSection>,
    #[serde(default)]
    pub output: OutputSection,
}

/// 1-based line of `key = ...`, searched inside `[section]` when given.
fn locate_key(text: &str, section: Option<&str>, key: &str) -> Option<usize> {
    let mut inside = section.is_none();
    for (i, l) in text.lines().enumerate() {
        let l = l.trim_start();
        if l.starts_with('[') {
            if let Some(sec) = section {
                inside = l.trim_end() == format!("[{sec}]");
            }
            continue;
        }
        if inside && l.strip_prefix(key).is_some_and(|r| r.trim_start().starts_with('=')) {
            return Some(i + 1);
        }
    }
    None
}

fn locate_table(text: &str, name: &str) -> Option<usize> {
    let header = format!("[{name}]");
    text.lines().position(|l| l.trim() == header).map(|i| i + 1)
}

fn config_error(text: &str, key: &str, msg: impl fmt::Display) -> Error {
    let (section, leaf) = match key.split_once('.') {
        Some((sec, leaf)) => (Some(sec), leaf),
        None => (None, key),
    };
    match locate_key(text, section, leaf).or_else(|| locate_table(text, key)) {
        Some(line) => Error::Config(format!("{key} (line {line}): {msg}")),
        None => Error::Config(format!("{key}: {msg}")),
    }
}

/// Parse errors inside tagged tables point at the table header, so the
/// offending key's own line is looked up when the message names it.
fn parse_error(text: &str, e: &toml::de::Error) -> Error {
    let msg = e.message().trim_end();
    let key = msg
        .strip_prefix("unknown field `")
        .and_then(|r| r.split('`').next());
    let line = key.and_then(|k| locate_key(text, None, k)).or_else(|| {
        e.span()
            .map(|sp| text[..sp.start.min(text.len())].matches('\n').count() + 1)
    });
    match line {
        Some(l) => Error::Config(format!("line {l}: {msg}")),
        None => Error::Config(msg.to_string()),
    }
}

impl ExperimentConfig {
    pub fn parse(text: &str) -> Result<Self> {
        let cfg: Self = toml::from_str(text).map_err(|e| parse_error(text, &e))?;
        cfg.validate(text)?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Config(format!("cannot read {}: {e}", path.display())))?;
        Self::parse(&text)
    }

    fn validate(&self, text: &str) -> Result<()> {
        if let Some(f) = &self.field {
            f.build().map_err(|e| config_error(text, "field", e))?;
        }
        if let Some(s) = &self.sim {
            if !(s.dt > 0.0 && s.dt.is_finite()) {
                return Err(config_error(text, "sim.dt", "must be positive"));
            }
            if s.n_paths < 1 {
                return Err(config_error(text, "sim.n_paths", "must be at least 1"));
            }
            if let Some(cp) = &s.checkpoints {
                if cp.is_empty() || cp.windows(2).any(|w| !(w[1] > w[0])) || !(cp[0] > 0.0) {
                    return Err(config_error(text, "sim.checkpoints", "must be positive and strictly increasing"));
                }
            }
            if let Some(t) = s.target.as_deref() {
                IntervalUnion::parse_pairs(t).map_err(|e| config_error(text, "sim.target", e))?;
            }
        }
        if let Some(p) = &self.pde {
            p.grid().map_err(|e| config_error(text, "pde.n_x", e))?;
            if !(p.t_final > 0.0 && p.dt > 0.0) {
                return Err(config_error(text, "pde.dt", "t_final and dt must be positive"));
            }
        }
        if self.output.stride < 1 {
            return Err(config_error(text, "output.stride", "must be at least 1"));
        }
        Ok(())
    }

    /// Canonical serialization of the effective configuration.
    pub fn canonical(&self) -> String {
        toml::to_string(self).expect("configuration serializes")
    }

    /// First 16 hex digits of the SHA-256 of [`Self::canonical`].
    /// Hash of the canonical form. The output directory is excluded so
    /// relocating a run does not change its identity.
    pub fn hash(&self) -> String {
        let mut c = self.clone();
        c.output.dir = String::new();
        let digest = Sha256::digest(c.canonical().as_bytes());
        digest.iter().take(8).map(|b| format!("{b:02x}")).collect()
    }

    pub fn field(&self) -> Result<(AlphaField, &FieldSpec)> {
        let spec = self
            .field
            .as_ref()
            .ok_or_else(|| Error::Config("missing [field] table".into()))?;
        Ok((spec.build()?, spec))
    }

    pub fn sim(&self) -> Result<&SimSection> {
        self.sim
            .as_ref()
            .ok_or_else(|| Error::Config("missing [sim] table".into()))
    }

    pub fn pde(&self) -> Result<&PdeSection> {
        self.pde
            .as_ref()
            .ok_or_else(|| Error::Config("missing [pde] table".into()))
    }
}

impl SimSection {
    pub fn checkpoints(&self) -> Result<Vec<f64>> {
        match (&self.checkpoints, self.t_max) {
            (Some(c), _) => Ok(c.clone()),
            (None, Some(t)) => geometric_grid((t / 1e3).min(1.0), t, self.n_points),
            (None, None) => Err(Error::Config("sim: give either checkpoints or t_max".into())),
        }
    }

    pub fn sim_config(&self, t_max: f64) -> SimConfig {
        SimConfig::new(self.dt, t_max)
            .with_x0(self.x0)
            .with_max_steps(self.max_steps)
    }

    pub fn target(&self, field: &AlphaField) -> Result<IntervalUnion> {
        match &self.target {
            Some(t) => IntervalUnion::parse_pairs(t),
            None => Ok(field.argmin_set()),
        }
    }

    pub fn internal_grid(&self) -> Result<Vec<f64>> {
        let lo = self.internal_t_min.unwrap_or(1e2);
        let hi = self.internal_t_max.unwrap_or(1e6);
        geometric_grid(lo, hi, self.n_points)
    }

    pub fn regime_options(&self, seed: u64) -> Result<RegimeOptions> {
        Ok(RegimeOptions {
            checkpoints: self.checkpoints()?,
            k_box: self.k_box,
            beta: self.beta,
            threshold_high: self.threshold_high,
            threshold_low: self.threshold_low,
            max_ci_halfwidth: self.max_ci_halfwidth,
            base_seed: seed,
        })
    }
}
