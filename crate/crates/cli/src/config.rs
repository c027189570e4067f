//! Experiment configuration: defaults, then the config file, then flags.

use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use clap::{Parser, ValueEnum};
use serde::Deserialize;
use stldg::solve::SolverMode;
use stldg::SpaceKind;

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Experiment {
    ConvergeH,
    ConvergeP,
    ConvergeHp,
    Condition,
    Solve,
}

/// Command-line flags. Every value may also come from `--config`; flags
/// given explicitly win over the file.
#[derive(Debug, Default, Parser)]
#[command(name = "stldg", version, about = "Space-time LDG experiments for the heat equation, written as CSV")]
pub struct Cli {
    /// TOML file with any of the options below (kebab-case keys).
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long, value_enum)]
    pub experiment: Option<Experiment>,
    /// smooth, smooth-1d, smooth-2d, initial-layer, incompatible-1d, polynomial, homogeneous.
    #[arg(long)]
    pub problem: Option<String>,
    /// Space dimension for `smooth`, `polynomial` and `homogeneous`.
    #[arg(long)]
    pub dim: Option<usize>,
    /// Comma-separated list of tensor, standard, qtrefftz, etrefftz, or `all`.
    #[arg(long, value_delimiter = ',')]
    pub space: Option<Vec<String>>,
    /// Comma-separated polynomial degrees.
    #[arg(long, value_delimiter = ',')]
    pub degree: Option<Vec<usize>>,
    /// Comma-separated levels: cells per axis (converge-h, solve), slab
    /// counts (converge-hp) or exponents i of h = 2^-i (condition).
    #[arg(long, value_delimiter = ',')]
    pub levels: Option<Vec<usize>>,
    /// Cells per axis of the fixed spatial mesh (converge-p, converge-hp).
    #[arg(long)]
    pub nx: Option<usize>,
    #[arg(long)]
    pub eta_star: Option<f64>,
    #[arg(long)]
    pub alpha: Option<f64>,
    /// Temporal grading factor (alias of --sigma-t).
    #[arg(long)]
    pub sigma: Option<f64>,
    /// Spatial grading factor; enables graded 1D spatial meshes.
    #[arg(long)]
    pub sigma_x: Option<f64>,
    #[arg(long)]
    pub sigma_t: Option<f64>,
    /// Slope of the slab degrees in converge-hp.
    #[arg(long)]
    pub mu: Option<f64>,
    /// slab or monolithic.
    #[arg(long)]
    pub solver: Option<String>,
    /// Output CSV path; standard output if absent.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Skip the LDG,N norm (one extra global solve per run).
    #[arg(long)]
    pub no_newton: bool,
}

#[derive(Debug, Default, Deserialize)]
#[serde(rename_all = "kebab-case", deny_unknown_fields)]
struct FileConfig {
    experiment: Option<Experiment>,
    problem: Option<String>,
    dim: Option<usize>,
    space: Option<Vec<String>>,
    degree: Option<Vec<usize>>,
    levels: Option<Vec<usize>>,
    nx: Option<usize>,
    eta_star: Option<f64>,
    alpha: Option<f64>,
    sigma: Option<f64>,
    sigma_x: Option<f64>,
    sigma_t: Option<f64>,
    mu: Option<f64>,
    solver: Option<String>,
    out: Option<PathBuf>,
    no_newton: Option<bool>,
}

/// Fully resolved and validated experiment description.
#[derive(Clone, Debug, PartialEq)]
pub struct ExperimentConfig {
    pub experiment: Experiment,
    pub problem: String,
    pub dim: usize,
    pub spaces: Vec<SpaceKind>,
    pub degrees: Vec<usize>,
    pub levels: Vec<usize>,
    pub nx: usize,
    pub eta_star: f64,
    pub alpha: f64,
    pub sigma_x: Option<f64>,
    pub sigma_t: f64,
    pub mu: f64,
    pub solver: SolverMode,
    pub out: Option<PathBuf>,
    pub newton: bool,
}

fn read_file(path: &Path) -> Result<FileConfig> {
    let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    toml::from_str(&text).with_context(|| format!("parsing {}", path.display()))
}

fn parse_spaces(names: &[String]) -> Result<Vec<SpaceKind>> {
    if names.iter().any(|s| s == "all") {
        return Ok(SpaceKind::ALL.to_vec());
    }
    names.iter().map(|s| s.trim().parse::<SpaceKind>().map_err(Into::into)).collect()
}

/// Dimension implied by the problem name, if any.
fn problem_dim(problem: &str) -> Option<usize> {
    match problem {
        "smooth-1d" | "incompatible-1d" => Some(1),
        "smooth-2d" | "initial-layer" => Some(2),
        _ => None,
    }
}

impl ExperimentConfig {
    pub fn resolve(cli: Cli) -> Result<Self> {
        let file = match &cli.config {
            Some(path) => read_file(path)?,
            None => FileConfig::default(),
        };
        let experiment = cli.experiment.or(file.experiment).unwrap_or(Experiment::ConvergeH);
        let problem = cli.problem.or(file.problem).unwrap_or_else(|| {
            match experiment {
                Experiment::ConvergeHp => "initial-layer",
                Experiment::Condition => "homogeneous",
                _ => "smooth-2d",
            }
            .to_string()
        });
        let dim = match (problem_dim(&problem), cli.dim.or(file.dim)) {
            (Some(d), Some(given)) if d != given => bail!("problem `{problem}` is {d}-dimensional, got --dim {given}"),
            (Some(d), _) => d,
            (None, given) => given.unwrap_or(if experiment == Experiment::Condition { 1 } else { 2 }),
        };
        let spaces = parse_spaces(&cli.space.or(file.space).unwrap_or_else(|| vec!["all".into()]))?;
        let degrees = cli.degree.or(file.degree).unwrap_or_else(|| match experiment {
            Experiment::ConvergeP => vec![2, 3, 4, 5, 6],
            Experiment::Condition => vec![2, 3, 4],
            _ => vec![2],
        });
        let levels = cli.levels.or(file.levels).unwrap_or_else(|| match experiment {
            Experiment::ConvergeH => vec![2, 4, 8, 16],
            Experiment::ConvergeHp => (1..=6).collect(),
            Experiment::Condition => (0..=6).collect(),
            Experiment::ConvergeP | Experiment::Solve => vec![4],
        });
        let corner = problem == "incompatible-1d";
        let sigma_x = cli.sigma_x.or(file.sigma_x).or(corner.then_some(0.35));
        let sigma_t = cli.sigma_t.or(cli.sigma).or(file.sigma_t).or(file.sigma).unwrap_or(if sigma_x.is_some() {
            0.35
        } else {
            0.25
        });
        let solver = match cli.solver.or(file.solver) {
            Some(s) => s.parse::<SolverMode>()?,
            None => SolverMode::Slab,
        };
        let cfg = Self {
            experiment,
            problem,
            dim,
            spaces,
            degrees,
            levels,
            nx: cli.nx.or(file.nx).unwrap_or(if experiment == Experiment::ConvergeP { 2 } else { 4 }),
            eta_star: cli.eta_star.or(file.eta_star).unwrap_or(0.1),
            alpha: cli.alpha.or(file.alpha).unwrap_or(0.5),
            sigma_x,
            sigma_t,
            mu: cli.mu.or(file.mu).unwrap_or(1.0),
            solver,
            out: cli.out.or(file.out),
            newton: !(cli.no_newton || file.no_newton.unwrap_or(false)),
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        if self.spaces.is_empty() {
            bail!("no discrete space selected");
        }
        if self.degrees.is_empty() || self.degrees.contains(&0) {
            bail!("polynomial degrees must be given and at least 1");
        }
        if self.levels.is_empty() {
            bail!("no refinement levels given");
        }
        if !(self.eta_star > 0.0 && self.eta_star.is_finite()) {
            bail!("--eta-star must be positive, got {}", self.eta_star);
        }
        if !(0.0..=1.0).contains(&self.alpha) {
            bail!("--alpha must lie in [0, 1], got {}", self.alpha);
        }
        let graded = |s: f64| s > 0.0 && s < 1.0;
        if !graded(self.sigma_t) || self.sigma_x.is_some_and(|s| !graded(s)) {
            bail!("grading factors must lie in (0, 1)");
        }
        if !(self.mu > 0.0 && self.mu.is_finite()) {
            bail!("--mu must be positive, got {}", self.mu);
        }
        if !(1..=2).contains(&self.dim) {
            bail!("only 1 and 2 space dimensions are supported, got {}", self.dim);
        }
        if self.nx == 0 {
            bail!("--nx must be at least 1");
        }
        match self.experiment {
            Experiment::ConvergeH | Experiment::Solve if self.levels.contains(&0) => {
                bail!("levels are cells per axis and must be at least 1")
            }
            Experiment::ConvergeHp if self.levels.contains(&0) => {
                bail!("hp levels are slab counts and must be at least 1")
            }
            Experiment::ConvergeHp if self.sigma_x.is_some() && self.dim != 1 => {
                bail!("spatial grading (--sigma-x) is only available in 1D")
            }
            Experiment::Condition if self.levels.len() < 2 => bail!("a conditioning study needs at least two levels"),
            Experiment::Condition if self.levels.iter().any(|&i| i > 20) => {
                bail!("condition levels are exponents i ≤ 20")
            }
            _ => {}
        }
        Ok(())
    }
}
