use std::path::PathBuf;

use clap::{Args, ValueEnum};
use lamplighter::graph::Label;
use lamplighter::{Arithmetic, Graph, GraphSpec, Probability};
use serde::Serialize;

use crate::error::{CliError, CliResult};

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Mode {
    Float,
    Rational,
}

impl From<Mode> for Arithmetic {
    fn from(m: Mode) -> Self {
        match m {
            Mode::Float => Arithmetic::Float,
            Mode::Rational => Arithmetic::Rational,
        }
    }
}

/// Flags shared by every subcommand.
#[derive(Args, Clone, Debug)]
pub struct Common {
    /// Graph: `line`, `cycle:<n>`, `grid:<w>x<h>`, `z2`, `tree:<d>` or `explicit:<file.json>`
    #[arg(long, global = true)]
    pub graph: Option<String>,
    /// Root vertex label (family default if omitted)
    #[arg(long, global = true)]
    pub root: Option<String>,
    /// Number of lamp states
    #[arg(long, global = true, default_value_t = 2)]
    pub m: u32,
    /// Percolation parameter as a decimal or a fraction; defaults to 1/m
    #[arg(long, global = true)]
    pub p: Option<String>,
    #[arg(long, global = true, default_value_t = 10)]
    pub n_max: u32,
    /// Largest animal size (command-specific default)
    #[arg(long, global = true)]
    pub max_size: Option<usize>,
    /// Monte Carlo samples
    #[arg(long, global = true, default_value_t = 100_000)]
    pub samples: usize,
    #[arg(long, global = true, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, global = true, value_enum, default_value_t = Mode::Rational)]
    pub mode: Mode,
    /// Output directory
    #[arg(long, global = true, env = "LAMPLIGHTER_OUT", default_value = ".")]
    pub out: PathBuf,
    /// Override the asserted tolerance of a verification suite
    #[arg(long, global = true)]
    pub tol: Option<f64>,
    /// Atoms closer than this are merged in spectrum output
    #[arg(long, global = true, default_value_t = 1e-9)]
    pub merge_tol: f64,
}

/// Fully resolved parameters, embedded in every emitted file.
#[derive(Clone, Debug, Serialize)]
pub struct RunConfig {
    pub command: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub method: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub suite: Option<String>,
    pub graph: String,
    pub root: String,
    pub m: u32,
    pub p: String,
    pub p_value: f64,
    pub n_max: u32,
    pub max_size: usize,
    pub samples: usize,
    pub seed: u64,
    pub mode: Mode,
    pub out: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub tolerance: Option<f64>,
    pub merge_tol: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub radius: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub battery: Option<Vec<String>>,
    #[serde(skip)]
    pub prob: Option<Probability>,
}

impl RunConfig {
    pub fn probability(&self) -> &Probability {
        self.prob.as_ref().expect("probability resolved")
    }

    pub fn arithmetic(&self) -> Arithmetic {
        self.mode.into()
    }
}

pub struct Resolved {
    pub config: RunConfig,
    pub spec: GraphSpec,
    pub root: Label,
}

/// Validates the shared flags. `graph_default` supplies a graph when the
/// flag is absent (verification suites only); `max_size_default` receives
/// the parsed spec.
pub fn resolve(
    common: &Common,
    command: &str,
    graph_default: Option<(&str, &str)>,
    max_size_default: impl FnOnce(&GraphSpec) -> usize,
) -> CliResult<Resolved> {
    if common.m < 2 {
        return Err(CliError::Usage(format!("--m must be at least 2, got {}", common.m)));
    }
    let (graph_text, root_default) = match (&common.graph, graph_default) {
        (Some(g), _) => (g.clone(), None),
        (None, Some((g, r))) => (g.to_string(), Some(r)),
        (None, None) => return Err(CliError::Usage(format!("`{command}` needs --graph"))),
    };
    let spec = GraphSpec::parse(&graph_text).map_err(CliError::input)?;
    let root = match (&common.root, root_default) {
        (Some(r), _) => spec.parse_label(r).map_err(CliError::input)?,
        (None, Some(r)) => spec.parse_label(r).map_err(CliError::input)?,
        (None, None) => spec.default_root(),
    };
    if !spec.contains(&root) {
        return Err(CliError::Usage(format!(
            "root `{root}` is not a vertex of {graph_text}"
        )));
    }
    let (p_text, prob) = match &common.p {
        Some(t) => {
            let prob = Probability::parse(t)
                .map_err(|_| CliError::Usage(format!("--p must lie strictly between 0 and 1, got `{t}`")))?;
            (t.trim().to_string(), prob)
        }
        None => (format!("1/{}", common.m), Probability::reciprocal(common.m)),
    };
    let prob = match common.mode {
        Mode::Rational => prob,
        Mode::Float => Probability::from_f64(prob.value()).map_err(CliError::input)?,
    };
    let max_size = common.max_size.unwrap_or_else(|| max_size_default(&spec));
    if max_size == 0 {
        return Err(CliError::Usage("--max-size must be at least 1".into()));
    }
    if let Some(t) = common.tol {
        if !(t >= 0.0 && t.is_finite()) {
            return Err(CliError::Usage(format!("--tol must be a nonnegative number, got {t}")));
        }
    }
    let config = RunConfig {
        command: command.to_string(),
        method: None,
        suite: None,
        graph: graph_text,
        root: root.to_string(),
        m: common.m,
        p: p_text,
        p_value: prob.value(),
        n_max: common.n_max,
        max_size,
        samples: common.samples,
        seed: common.seed,
        mode: common.mode,
        out: common.out.display().to_string(),
        tolerance: common.tol,
        merge_tol: common.merge_tol,
        radius: None,
        battery: None,
        prob: Some(prob),
    };
    Ok(Resolved { config, spec, root })
}

impl Resolved {
    /// Whole graph when finite, otherwise the ball of `radius`; records the
    /// radius used.
    pub fn materialize(&mut self, radius: usize) -> CliResult<Graph> {
        let radius = if self.spec.is_finite() { None } else { Some(radius) };
        self.config.radius = radius;
        Ok(self.spec.materialize(&self.root, radius)?)
    }
}

/// Animal-size default: every vertex of a small finite graph, else `fallback`.
pub fn size_default(spec: &GraphSpec, fallback: usize) -> usize {
    match spec.vertex_count() {
        Some(n) if n <= 16 => n,
        _ => fallback,
    }
}
