//! Command-line surface. Every subcommand resolves to one
//! [`ExperimentConfig`]: either loaded from `--config` (flag overrides for
//! seed and grid still apply) or synthesized from the subcommand's own
//! flags. Hashing and artifact layout therefore never depend on how a run
//! was launched.

use std::path::PathBuf;

use clap::{Parser, Subcommand};

use crate::config::{
    CliError, CliResult, CompareMode, CutoffConfig, ExperimentConfig, GridConfig, MapConfig,
    StudyConfig, SupportConfig, TaskConfig,
};
use crate::symbols::infer_dim;

#[derive(Debug, Parser)]
#[command(
    name = "smoothing-lab",
    version,
    about = "Desk-scale checks of global smoothing estimates for dispersive propagators",
    propagate_version = true
)]
pub struct Cli {
    /// JSON experiment config; subcommand flags then only override seed/grid
    #[arg(long, global = true, value_name = "PATH")]
    pub config: Option<PathBuf>,

    /// Master seed for every random ensemble
    #[arg(long, global = true, value_name = "INT")]
    pub seed: Option<u64>,

    /// Output root; results land in <out>/<confighash>/ when set
    #[arg(long, global = true, value_name = "DIR")]
    pub out: Option<PathBuf>,

    /// Grid as n,L,N: dimension, box side and points per axis
    #[arg(long, global = true, value_name = "n,L,N")]
    pub grid: Option<String>,

    /// Worker threads (affects speed only, never results)
    #[arg(long, global = true, value_name = "INT")]
    pub threads: Option<usize>,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Classify a symbol: dispersiveness flags, critical points, applicable estimates
    Classify {
        /// Expression in xi1..xi3 or rho, or catalog:NAME
        expr: String,
        /// Frequency dimension when the expression alone does not pin it
        #[arg(long)]
        dim: Option<usize>,
    },
    /// Spectral sanity of the exact propagator: Parseval, unitarity, group law
    Propagate {
        /// Symbol expression
        symbol: String,
        /// Half-width of the time window
        #[arg(long, default_value_t = 2.0)]
        t: f64,
    },
    /// Estimate the smoothing constant of one weighted estimate
    Estimate {
        /// Symbol expression
        symbol: String,
        /// Spatial weight: bracket:s or homogeneous:d
        #[arg(long, default_value = "bracket:1")]
        weight: String,
        /// Frequency smoother: invariant, classical:e, bracket:e, symbol_root:s, one
        #[arg(long, default_value = "invariant")]
        smoother: String,
        /// Half-width of the time window (default: shortest box side / 4)
        #[arg(long)]
        t: Option<f64>,
        /// Trapezoid intervals per window
        #[arg(long, default_value_t = 64)]
        nt: usize,
        /// Constant estimator: ensemble or power
        #[arg(long, default_value = "ensemble")]
        method: String,
        /// Random fields per ensemble
        #[arg(long, default_value_t = 16)]
        members: usize,
    },
    /// Model-flow comparisons with exact time kernels
    Compare {
        /// Model orders, e.g. --model l=1 m=3
        #[arg(long, num_args = 2, value_names = ["l=INT", "m=INT"], required = true)]
        model: Vec<String>,
        /// Observation length per mode in box units
        #[arg(long, default_value_t = 60.0)]
        travel: f64,
    },
    /// Monotone frequency decomposition of a polynomial symbol
    Decompose {
        /// Polynomial expression in xi1..xi3
        expr: String,
        /// 1-based frequency axis to slice along
        #[arg(long, default_value_t = 1)]
        axis: usize,
        /// Weight decay exponent for the assembled estimate
        #[arg(long, default_value_t = 1.0)]
        s: f64,
        /// Also measure the per-piece, per-axis and combined ratios
        #[arg(long)]
        assemble: bool,
    },
    /// Canonical-transform equivalence of two symbols linked by a frequency map
    Canonical {
        /// Core symbol sigma; the composed side is sigma o psi
        sigma: String,
        /// Frequency map psi: identity, shear, matrix:a,b;c,d or warp:alpha
        #[arg(long, default_value = "identity")]
        map: String,
        /// Cutoff gamma: one, ball:c1,..,cn,inner,outer or annulus:r0,r1,r2,r3
        #[arg(long, default_value = "one")]
        cutoff: String,
        /// Smoother profile applied to |grad .|: sqrt, one or power:p
        #[arg(long, default_value = "sqrt")]
        zeta: String,
        /// Spatial weight
        #[arg(long, default_value = "bracket:1")]
        weight: String,
        /// Half-width of the time window (default: shortest box side / 4)
        #[arg(long)]
        t: Option<f64>,
        /// Trapezoid intervals per window
        #[arg(long, default_value_t = 64)]
        nt: usize,
        /// Random fields per ensemble
        #[arg(long, default_value_t = 16)]
        members: usize,
        /// Frequency ball carrying the random modes: c1,..,cn,radius
        #[arg(long)]
        support: Option<String>,
        /// Probe weighted boundedness at <x>^kappa
        #[arg(long)]
        kappa: Option<f64>,
        /// Compare Hessian ranks at detected critical points (linear maps)
        #[arg(long)]
        rank_scan: bool,
        /// Report the reduction-quotient supremum and its flag
        #[arg(long)]
        reduction: bool,
    },
    /// Time-dependent coefficient c(t): reparametrized vs direct quadrature
    Timedep {
        /// Coefficient spec: const:K or invquad (1/(1+t^2))
        #[arg(long = "c", value_name = "SPEC")]
        c: String,
        /// Symbol expression
        #[arg(default_value = "xi1^2")]
        symbol: String,
        /// Coefficient window [lo, hi] as lo,hi (must contain 0)
        #[arg(long)]
        window: Option<String>,
        /// Spatial weight
        #[arg(long, default_value = "bracket:1")]
        weight: String,
        /// Frequency smoother
        #[arg(long, default_value = "invariant")]
        smoother: String,
        /// Trapezoid intervals per window
        #[arg(long, default_value_t = 64)]
        nt: usize,
    },
    /// Merge every run under a directory into merged.csv + summary.json
    Report {
        /// Directory holding one subdirectory per run
        dir: PathBuf,
    },
}

impl Command {
    fn kind_name(&self) -> &'static str {
        match self {
            Command::Classify { .. } => "classify",
            Command::Propagate { .. } => "propagate",
            Command::Estimate { .. } => "estimate",
            Command::Compare { .. } => "compare",
            Command::Decompose { .. } => "decompose",
            Command::Canonical { .. } => "canonical",
            Command::Timedep { .. } => "timedep",
            Command::Report { .. } => "report",
        }
    }
}

fn task_kind(task: &TaskConfig) -> &'static str {
    match task {
        TaskConfig::Classify { .. } => "classify",
        TaskConfig::Propagate { .. } => "propagate",
        TaskConfig::Estimate { .. } => "estimate",
        TaskConfig::Compare { .. } => "compare",
        TaskConfig::Decompose { .. } => "decompose",
        TaskConfig::Canonical { .. } => "canonical",
        TaskConfig::Timedep { .. } => "timedep",
    }
}

/// Parse `n,L,N` into a square grid config.
pub fn parse_grid_flag(text: &str) -> CliResult<GridConfig> {
    let parts: Vec<&str> = text.split(',').map(str::trim).collect();
    if parts.len() != 3 {
        return Err(CliError::Config(format!(
            "--grid wants n,L,N (dimension, box side, points per axis), got `{text}`"
        )));
    }
    let n: usize = parts[0]
        .parse()
        .map_err(|_| CliError::Config(format!("bad dimension `{}` in --grid", parts[0])))?;
    if !(1..=3).contains(&n) {
        return Err(CliError::Config(format!("dimension must be 1..=3, got {n}")));
    }
    let l: f64 = parts[1]
        .parse()
        .map_err(|_| CliError::Config(format!("bad box side `{}` in --grid", parts[1])))?;
    let pts: usize = parts[2]
        .parse()
        .map_err(|_| CliError::Config(format!("bad point count `{}` in --grid", parts[2])))?;
    Ok(GridConfig { lens: vec![l; n], points: vec![pts; n] })
}

fn parse_pair(text: &str, what: &str) -> CliResult<(f64, f64)> {
    let parts: Vec<&str> = text.split(',').map(str::trim).collect();
    if parts.len() != 2 {
        return Err(CliError::Config(format!("{what} wants lo,hi, got `{text}`")));
    }
    let lo: f64 =
        parts[0].parse().map_err(|_| CliError::Config(format!("bad number in {what}: `{}`", parts[0])))?;
    let hi: f64 =
        parts[1].parse().map_err(|_| CliError::Config(format!("bad number in {what}: `{}`", parts[1])))?;
    Ok((lo, hi))
}

fn parse_floats(text: &str, what: &str) -> CliResult<Vec<f64>> {
    text.split(',')
        .map(str::trim)
        .map(|p| {
            p.parse::<f64>()
                .map_err(|_| CliError::Config(format!("bad number in {what}: `{p}`")))
        })
        .collect()
}

/// `identity` / `shear` (2D) / `matrix:a,b;c,d` / `warp:alpha`.
fn parse_map_flag(text: &str, dim: usize) -> CliResult<MapConfig> {
    match text.split_once(':') {
        None if text == "identity" => {
            let matrix = (0..dim)
                .map(|i| (0..dim).map(|j| if i == j { 1.0 } else { 0.0 }).collect())
                .collect();
            Ok(MapConfig::Linear { matrix })
        }
        None if text == "shear" => {
            if dim != 2 {
                return Err(CliError::Config("the shear shortcut is 2D".into()));
            }
            Ok(MapConfig::Linear { matrix: vec![vec![1.0, 1.0], vec![0.0, 1.0]] })
        }
        Some(("matrix", rows)) => {
            let matrix: Vec<Vec<f64>> = rows
                .split(';')
                .map(|row| parse_floats(row, "--map matrix"))
                .collect::<CliResult<_>>()?;
            Ok(MapConfig::Linear { matrix })
        }
        Some(("warp", alpha)) => {
            let alpha: f64 = alpha
                .trim()
                .parse()
                .map_err(|_| CliError::Config(format!("bad warp coefficient `{alpha}`")))?;
            Ok(MapConfig::QuadraticWarp { alpha })
        }
        _ => Err(CliError::Config(format!(
            "unknown map `{text}` (identity, shear, matrix:a,b;c,d or warp:alpha)"
        ))),
    }
}

/// `one` / `ball:c1,..,cn,inner,outer` / `annulus:r0,r1,r2,r3`.
fn parse_cutoff_flag(text: &str) -> CliResult<CutoffConfig> {
    match text.split_once(':') {
        None if text == "one" => Ok(CutoffConfig::One),
        Some(("ball", rest)) => {
            let nums = parse_floats(rest, "--cutoff ball")?;
            if nums.len() < 3 {
                return Err(CliError::Config(
                    "ball cutoff wants c1,..,cn,inner,outer".into(),
                ));
            }
            let (center, radii) = nums.split_at(nums.len() - 2);
            Ok(CutoffConfig::Ball {
                center: center.to_vec(),
                inner: radii[0],
                outer: radii[1],
            })
        }
        Some(("annulus", rest)) => {
            let nums = parse_floats(rest, "--cutoff annulus")?;
            if nums.len() != 4 {
                return Err(CliError::Config("annulus cutoff wants r0,r1,r2,r3".into()));
            }
            Ok(CutoffConfig::Annulus { r0: nums[0], r1: nums[1], r2: nums[2], r3: nums[3] })
        }
        _ => Err(CliError::Config(format!(
            "unknown cutoff `{text}` (one, ball:.. or annulus:..)"
        ))),
    }
}

/// `c1,..,cn,radius`.
fn parse_support_flag(text: &str, dim: usize) -> CliResult<SupportConfig> {
    let nums = parse_floats(text, "--support")?;
    if nums.len() != dim + 1 {
        return Err(CliError::Config(format!(
            "--support wants {dim} center coordinates plus a radius, got {} numbers",
            nums.len()
        )));
    }
    let (center, radius) = nums.split_at(dim);
    Ok(SupportConfig { center: center.to_vec(), radius: radius[0] })
}

/// `l=1` / `m=3` order pair of the model comparison.
fn parse_model_orders(specs: &[String]) -> CliResult<(u32, u32)> {
    let mut l = None;
    let mut m = None;
    for spec in specs {
        let (key, val) = spec.split_once('=').ok_or_else(|| {
            CliError::Config(format!("model orders look like l=1 m=3, got `{spec}`"))
        })?;
        let v: u32 = val
            .trim()
            .parse()
            .map_err(|_| CliError::Config(format!("bad order `{val}` in `{spec}`")))?;
        match key.trim() {
            "l" => l = Some(v),
            "m" => m = Some(v),
            other => {
                return Err(CliError::Config(format!(
                    "unknown model key `{other}` (expected l or m)"
                )))
            }
        }
    }
    match (l, m) {
        (Some(l), Some(m)) => Ok((l, m)),
        _ => Err(CliError::Config("model comparison needs both l= and m=".into())),
    }
}

fn square_grid(dim: usize, len: f64, points: usize) -> GridConfig {
    GridConfig { lens: vec![len; dim], points: vec![points; dim] }
}

impl Cli {
    /// Resolve the effective experiment config for a non-report command.
    pub fn effective_config(&self) -> CliResult<ExperimentConfig> {
        let grid_flag = self.grid.as_deref().map(parse_grid_flag).transpose()?;
        let mut cfg = match &self.config {
            Some(path) => {
                let text = std::fs::read_to_string(path).map_err(|e| {
                    CliError::Config(format!("cannot read config `{}`: {e}", path.display()))
                })?;
                let cfg = ExperimentConfig::from_json(&text)?;
                let want = self.command.kind_name();
                let got = task_kind(&cfg.task);
                if want != got {
                    return Err(CliError::Config(format!(
                        "config task is `{got}` but the subcommand is `{want}`"
                    )));
                }
                cfg
            }
            None => self.flag_config(grid_flag.as_ref())?,
        };
        if let Some(seed) = self.seed {
            cfg.seed = seed;
        }
        if let Some(grid) = grid_flag {
            cfg.grid = Some(grid);
        }
        cfg.validate()?;
        Ok(cfg)
    }

    /// Synthesize a config from subcommand flags alone.
    fn flag_config(&self, grid_flag: Option<&GridConfig>) -> CliResult<ExperimentConfig> {
        let seed = self.seed.unwrap_or(0);
        let (grid, task) = match &self.command {
            Command::Classify { expr, dim } => {
                (None, TaskConfig::Classify { symbol: expr.clone(), dim: *dim })
            }
            Command::Propagate { symbol, t } => (
                Some(square_grid(infer_dim(symbol, None), 20.0, 256)),
                TaskConfig::Propagate { symbol: symbol.clone(), t_window: *t, band: None },
            ),
            Command::Estimate { symbol, weight, smoother, t, nt, method, members } => (
                Some(square_grid(infer_dim(symbol, None), 20.0, 256)),
                TaskConfig::Estimate {
                    symbol: symbol.clone(),
                    weight: weight.clone(),
                    smoother: smoother.clone(),
                    t_window: *t,
                    time_samples: *nt,
                    method: method.clone(),
                    members: *members,
                    band: None,
                    study: StudyConfig::Single,
                },
            ),
            Command::Compare { model, travel } => {
                let (l, m) = parse_model_orders(model)?;
                (None, TaskConfig::Compare { mode: CompareMode::Model { l, m, travel: *travel } })
            }
            Command::Decompose { expr, axis, s, assemble } => (
                Some(square_grid(infer_dim(expr, None), 32.0, 256)),
                TaskConfig::Decompose {
                    symbol: expr.clone(),
                    axis: *axis,
                    s: *s,
                    t_window: None,
                    time_samples: 64,
                    band: None,
                    assemble: *assemble,
                },
            ),
            Command::Canonical {
                sigma,
                map,
                cutoff,
                zeta,
                weight,
                t,
                nt,
                members,
                support,
                kappa,
                rank_scan,
                reduction,
            } => {
                let dim = grid_flag
                    .map(|g| g.lens.len())
                    .unwrap_or_else(|| infer_dim(sigma, None));
                let support = match support {
                    Some(text) => parse_support_flag(text, dim)?,
                    None => SupportConfig { center: vec![0.0; dim], radius: 1.0 },
                };
                (
                    Some(square_grid(dim, 32.0, 64)),
                    TaskConfig::Canonical {
                        sigma: sigma.clone(),
                        map: parse_map_flag(map, dim)?,
                        cutoff: parse_cutoff_flag(cutoff)?,
                        zeta: zeta.clone(),
                        weight: weight.clone(),
                        t_window: *t,
                        time_samples: *nt,
                        members: *members,
                        support,
                        kappa: *kappa,
                        rank_scan: *rank_scan,
                        reduction: *reduction,
                    },
                )
            }
            Command::Timedep { c, symbol, window, weight, smoother, nt } => (
                Some(square_grid(infer_dim(symbol, None), 20.0, 64)),
                TaskConfig::Timedep {
                    symbol: symbol.clone(),
                    coefficient: c.clone(),
                    window: window
                        .as_deref()
                        .map(|w| parse_pair(w, "--window"))
                        .transpose()?,
                    weight: weight.clone(),
                    smoother: smoother.clone(),
                    time_samples: *nt,
                    band: None,
                },
            ),
            Command::Report { .. } => {
                return Err(CliError::Config("report takes a directory, not a config".into()))
            }
        };
        Ok(ExperimentConfig { schema: 1, seed, grid, task })
    }
}
