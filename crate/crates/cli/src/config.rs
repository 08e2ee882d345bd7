//! Experiment configuration: a serializable description of one run.
//!
//! Configs are JSON documents with a fixed schema (see the crate docs for
//! the full field reference). The same struct is embedded verbatim in the
//! run manifest, and its canonical serialization is what gets hashed, so a
//! config uniquely addresses its output directory.

use serde::{Deserialize, Serialize};
use smoothing_core::estimator::{SmootherSpec, WeightSpec};
use smoothing_core::{GridSpec, LabError};

/// Work cap on `prod(N_j) x time_samples x members` per rung.
pub const BUDGET: u128 = 1 << 33;

/// Everything that can go wrong in the front end, tagged with the exit
/// code contract: config/parse errors exit 2, budget overruns exit 3,
/// missing or corrupt artifacts exit 4, numerical failures exit 1.
#[derive(Debug)]
pub enum CliError {
    Config(String),
    Parse { pos: usize, msg: String },
    Budget(String),
    MissingArtifacts(String),
    Runtime(String),
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            CliError::Config(m) => write!(f, "config error: {m}"),
            CliError::Parse { pos, msg } => write!(f, "parse error at byte {pos}: {msg}"),
            CliError::Budget(m) => write!(f, "budget exceeded: {m}"),
            CliError::MissingArtifacts(m) => write!(f, "missing artifacts: {m}"),
            CliError::Runtime(m) => write!(f, "runtime error: {m}"),
        }
    }
}

impl std::error::Error for CliError {}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) | CliError::Parse { .. } => 2,
            CliError::Budget(_) => 3,
            CliError::MissingArtifacts(_) => 4,
            CliError::Runtime(_) => 1,
        }
    }
}

impl From<LabError> for CliError {
    fn from(e: LabError) -> Self {
        match e {
            LabError::Parse { pos, msg } => CliError::Parse { pos, msg },
            LabError::Param(m) => CliError::Config(m),
            LabError::Shape(m) => CliError::Config(m),
            other => CliError::Runtime(other.to_string()),
        }
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Runtime(format!("io: {e}"))
    }
}

pub type CliResult<T> = Result<T, CliError>;

fn default_schema() -> u32 {
    1
}
fn default_nt() -> usize {
    64
}
fn default_members() -> usize {
    16
}
fn default_weight() -> String {
    "bracket:1".into()
}
fn default_smoother() -> String {
    "invariant".into()
}
fn default_method() -> String {
    "ensemble".into()
}
fn default_zeta() -> String {
    "sqrt".into()
}
fn default_s() -> f64 {
    1.0
}
fn default_travel() -> f64 {
    60.0
}
fn default_samples() -> usize {
    5
}

/// Axis lengths and point counts of one periodic box.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridConfig {
    pub lens: Vec<f64>,
    pub points: Vec<usize>,
}

impl GridConfig {
    pub fn build(&self) -> CliResult<GridSpec> {
        Ok(GridSpec::new(&self.lens, &self.points)?)
    }

    pub fn total_points(&self) -> u128 {
        self.points.iter().map(|&n| n as u128).product()
    }
}

/// Which ladder an estimate walks.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum StudyConfig {
    Single,
    Refinement { ladder: Vec<GridConfig> },
    Concentration { widths: Vec<f64>, center: CenterConfig },
}

impl Default for StudyConfig {
    fn default() -> Self {
        StudyConfig::Single
    }
}

/// Center of a shrinking-support scan.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum CenterConfig {
    Sphere { radius: f64 },
    Point { point: Vec<f64> },
}

/// Comparison variants.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "form", rename_all = "snake_case")]
pub enum CompareMode {
    /// Exact-identity ratio of the order-`l` vs order-`m` model flows.
    Model {
        l: u32,
        m: u32,
        #[serde(default = "default_travel")]
        travel: f64,
    },
    /// Two radial flows under the comparison principle.
    Radial {
        f: String,
        sigma: String,
        g: String,
        tau: String,
        /// Radial support `[lo, hi]` of the multiplier indicator.
        support: (f64, f64),
        #[serde(default = "default_travel")]
        travel: f64,
        #[serde(default = "default_samples")]
        samples: usize,
    },
    /// Pointwise domination `|sigma| <= A |f'|^{1/2}` plus the weighted
    /// ratio of the dominated spec.
    Secondary {
        f: String,
        sigma: String,
        support: (f64, f64),
        #[serde(default = "default_s")]
        s: f64,
        #[serde(default)]
        t_window: Option<f64>,
        #[serde(default = "default_nt")]
        time_samples: usize,
    },
}

/// Frequency substitution of a canonical transform.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum MapConfig {
    Linear { matrix: Vec<Vec<f64>> },
    /// `r(rho) = rho + alpha rho^2` with `alpha >= 0`.
    QuadraticWarp { alpha: f64 },
}

/// Smooth frequency cutoff of a canonical transform.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum CutoffConfig {
    One,
    Ball { center: Vec<f64>, inner: f64, outer: f64 },
    Annulus { r0: f64, r1: f64, r2: f64, r3: f64 },
}

/// Frequency ball carrying the random ensemble modes.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SupportConfig {
    pub center: Vec<f64>,
    pub radius: f64,
}

/// The task a run executes; one variant per subcommand.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum TaskConfig {
    Classify {
        symbol: String,
        #[serde(default)]
        dim: Option<usize>,
    },
    Propagate {
        symbol: String,
        t_window: f64,
        #[serde(default)]
        band: Option<(f64, f64)>,
    },
    Estimate {
        symbol: String,
        #[serde(default = "default_weight")]
        weight: String,
        #[serde(default = "default_smoother")]
        smoother: String,
        #[serde(default)]
        t_window: Option<f64>,
        #[serde(default = "default_nt")]
        time_samples: usize,
        #[serde(default = "default_method")]
        method: String,
        #[serde(default = "default_members")]
        members: usize,
        #[serde(default)]
        band: Option<(f64, f64)>,
        #[serde(default)]
        study: StudyConfig,
    },
    Compare {
        mode: CompareMode,
    },
    Decompose {
        symbol: String,
        /// 1-based frequency axis.
        axis: usize,
        #[serde(default = "default_s")]
        s: f64,
        #[serde(default)]
        t_window: Option<f64>,
        #[serde(default = "default_nt")]
        time_samples: usize,
        #[serde(default)]
        band: Option<(f64, f64)>,
        #[serde(default)]
        assemble: bool,
    },
    Canonical {
        sigma: String,
        map: MapConfig,
        cutoff: CutoffConfig,
        #[serde(default = "default_zeta")]
        zeta: String,
        #[serde(default = "default_weight")]
        weight: String,
        #[serde(default)]
        t_window: Option<f64>,
        #[serde(default = "default_nt")]
        time_samples: usize,
        #[serde(default = "default_members")]
        members: usize,
        support: SupportConfig,
        /// Weighted-boundedness probe exponent; probed when set.
        #[serde(default)]
        kappa: Option<f64>,
        /// Compare Hessian ranks of core vs composition at detected
        /// critical points (linear maps only).
        #[serde(default)]
        rank_scan: bool,
        /// Report the reduction quotient `gamma zeta(|grad a|) / zeta(|grad
        /// sigma| o psi)` supremum and its near-vanishing flag.
        #[serde(default)]
        reduction: bool,
    },
    Timedep {
        symbol: String,
        /// `const:K` or `invquad` (`1/(1+t^2)`).
        coefficient: String,
        #[serde(default)]
        window: Option<(f64, f64)>,
        #[serde(default = "default_weight")]
        weight: String,
        #[serde(default = "default_smoother")]
        smoother: String,
        #[serde(default = "default_nt")]
        time_samples: usize,
        #[serde(default)]
        band: Option<(f64, f64)>,
    },
}

/// One complete experiment description.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    #[serde(default = "default_schema")]
    pub schema: u32,
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub grid: Option<GridConfig>,
    pub task: TaskConfig,
}

impl ExperimentConfig {
    pub fn from_json(text: &str) -> CliResult<Self> {
        let cfg: ExperimentConfig = serde_json::from_str(text).map_err(|e| CliError::Parse {
            pos: byte_offset(text, e.line(), e.column()),
            msg: e.to_string(),
        })?;
        cfg.validate()?;
        Ok(cfg)
    }

    /// Schema, shape and budget checks. Budget violations are the only
    /// `CliError::Budget` source.
    pub fn validate(&self) -> CliResult<()> {
        if self.schema != 1 {
            return Err(CliError::Config(format!("unsupported schema {}", self.schema)));
        }
        if let Some(g) = &self.grid {
            g.build()?;
        }
        let (nt, members) = match &self.task {
            TaskConfig::Classify { .. } => (1, 1),
            TaskConfig::Propagate { t_window, .. } => {
                if !(t_window.is_finite() && *t_window > 0.0) {
                    return Err(CliError::Config(format!(
                        "propagation window must be positive, got {t_window}"
                    )));
                }
                (1, 1)
            }
            TaskConfig::Estimate { time_samples, members, study, .. } => {
                match study {
                    StudyConfig::Single => {}
                    StudyConfig::Refinement { ladder } => {
                        if ladder.is_empty() {
                            return Err(CliError::Config("refinement ladder is empty".into()));
                        }
                        for rung in ladder {
                            rung.build()?;
                        }
                    }
                    StudyConfig::Concentration { widths, .. } => {
                        if widths.is_empty() {
                            return Err(CliError::Config("concentration width ladder is empty".into()));
                        }
                        if widths.iter().any(|w| !w.is_finite() || *w <= 0.0) {
                            return Err(CliError::Config(format!(
                                "widths must be positive, got {widths:?}"
                            )));
                        }
                    }
                }
                (*time_samples, *members)
            }
            TaskConfig::Compare { mode } => match mode {
                CompareMode::Model { l, m, travel } => {
                    if *l == 0 || *m == 0 {
                        return Err(CliError::Config("model orders must be at least 1".into()));
                    }
                    if !(travel.is_finite() && *travel > 0.0) {
                        return Err(CliError::Config(format!(
                            "travel must be positive, got {travel}"
                        )));
                    }
                    (1, 1)
                }
                CompareMode::Radial { support, samples, travel, .. } => {
                    check_support(support)?;
                    if *samples == 0 {
                        return Err(CliError::Config("need at least one sample point".into()));
                    }
                    if !(travel.is_finite() && *travel > 0.0) {
                        return Err(CliError::Config(format!(
                            "travel must be positive, got {travel}"
                        )));
                    }
                    (1, *samples)
                }
                CompareMode::Secondary { support, time_samples, .. } => {
                    check_support(support)?;
                    (*time_samples, 1)
                }
            },
            TaskConfig::Decompose { axis, time_samples, .. } => {
                if *axis == 0 {
                    return Err(CliError::Config("axes are 1-based; axis 0 does not exist".into()));
                }
                (*time_samples, 1)
            }
            TaskConfig::Canonical { time_samples, members, support, .. } => {
                if !(support.radius.is_finite() && support.radius > 0.0) {
                    return Err(CliError::Config(format!(
                        "support radius must be positive, got {}",
                        support.radius
                    )));
                }
                (*time_samples, *members)
            }
            TaskConfig::Timedep { time_samples, window, .. } => {
                if let Some((lo, hi)) = window {
                    if !(lo.is_finite() && hi.is_finite() && lo < hi) {
                        return Err(CliError::Config(format!(
                            "coefficient window must be a finite interval, got [{lo}, {hi}]"
                        )));
                    }
                }
                (*time_samples, 1)
            }
        };
        let mut worst_points: u128 = self.grid.as_ref().map_or(1, GridConfig::total_points);
        if let TaskConfig::Estimate { study: StudyConfig::Refinement { ladder }, .. } = &self.task {
            for rung in ladder {
                worst_points = worst_points.max(rung.total_points());
            }
        }
        let work = worst_points * nt as u128 * members.max(1) as u128;
        if work > BUDGET {
            return Err(CliError::Budget(format!(
                "points x time samples x members = {work} exceeds the cap {BUDGET}"
            )));
        }
        Ok(())
    }
}

fn check_support(support: &(f64, f64)) -> CliResult<()> {
    if !(support.0.is_finite() && support.1.is_finite() && 0.0 <= support.0 && support.0 < support.1)
    {
        return Err(CliError::Config(format!(
            "radial support must satisfy 0 <= lo < hi, got {support:?}"
        )));
    }
    Ok(())
}

/// Byte offset of a 1-based (line, column) pair in `text`.
fn byte_offset(text: &str, line: usize, column: usize) -> usize {
    let mut remaining = line.saturating_sub(1);
    let mut offset = 0;
    for (i, b) in text.bytes().enumerate() {
        if remaining == 0 {
            return (i + column.saturating_sub(1)).min(text.len());
        }
        if b == b'\n' {
            remaining -= 1;
            offset = i + 1;
        }
    }
    (offset + column.saturating_sub(1)).min(text.len())
}

/// `"bracket:s"` (`<x>^{-s}`) or `"homogeneous:d"` (`|x|^d`).
pub fn parse_weight(spec: &str) -> CliResult<WeightSpec> {
    let (kind, arg) = split_spec(spec);
    match kind {
        "bracket" => Ok(WeightSpec::bracket(parse_arg(spec, arg, 1.0)?)?),
        "homogeneous" => {
            let d = arg.ok_or_else(|| {
                CliError::Config(format!("weight `{spec}` needs an exponent, e.g. homogeneous:-0.5"))
            })?;
            Ok(WeightSpec::homogeneous(parse_num(spec, d)?)?)
        }
        _ => Err(CliError::Config(format!(
            "unknown weight `{spec}` (expected bracket:s or homogeneous:d)"
        ))),
    }
}

/// `classical:e` (`|xi|^e`), `bracket:e` (`<xi>^e`), `invariant`
/// (`|grad a|^{1/2}`), `invariant_power:e`, `invariant_bracket:e`,
/// `symbol_root:s` (`<xi>^{-s} |a|^{1/2}`) or `one`.
pub fn parse_smoother(spec: &str) -> CliResult<SmootherSpec> {
    let (kind, arg) = split_spec(spec);
    match kind {
        "one" => Ok(SmootherSpec::bracket(0.0)?),
        "classical" => Ok(SmootherSpec::classical(parse_arg(spec, arg, 0.5)?)?),
        "bracket" => Ok(SmootherSpec::bracket(parse_arg(spec, arg, 0.5)?)?),
        "invariant" => Ok(SmootherSpec::invariant()),
        "invariant_power" => Ok(SmootherSpec::invariant_power(parse_arg(spec, arg, 0.5)?)?),
        "invariant_bracket" => Ok(SmootherSpec::invariant_bracket(parse_arg(spec, arg, 0.5)?)?),
        "symbol_root" => Ok(SmootherSpec::symbol_root(parse_arg(spec, arg, 0.5)?)?),
        _ => Err(CliError::Config(format!("unknown smoother `{spec}`"))),
    }
}

/// `one`, `sqrt` or `power:p` applied to `|grad .|` in equivalence runs.
pub fn parse_zeta(spec: &str) -> CliResult<std::sync::Arc<dyn Fn(f64) -> f64 + Send + Sync>> {
    let (kind, arg) = split_spec(spec);
    match kind {
        "one" => Ok(std::sync::Arc::new(|_| 1.0)),
        "sqrt" => Ok(std::sync::Arc::new(f64::sqrt)),
        "power" => {
            let p = parse_arg(spec, arg, 0.5)?;
            Ok(std::sync::Arc::new(move |s: f64| s.powf(p)))
        }
        _ => Err(CliError::Config(format!(
            "unknown smoother profile `{spec}` (expected one, sqrt or power:p)"
        ))),
    }
}

fn split_spec(spec: &str) -> (&str, Option<&str>) {
    match spec.split_once(':') {
        Some((k, a)) => (k.trim(), Some(a.trim())),
        None => (spec.trim(), None),
    }
}

fn parse_arg(spec: &str, arg: Option<&str>, default: f64) -> CliResult<f64> {
    match arg {
        None => Ok(default),
        Some(a) => parse_num(spec, a),
    }
}

fn parse_num(spec: &str, text: &str) -> CliResult<f64> {
    text.parse::<f64>()
        .map_err(|_| CliError::Config(format!("bad number `{text}` in spec `{spec}`")))
}
