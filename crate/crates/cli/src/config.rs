//! Command-line arguments and their validated form.
//!
//! Rationals are accepted as `p/q`, integers or decimals and always echoed
//! back as reduced `p/q` strings.

use std::path::PathBuf;

use clap::{Args, ValueEnum};
use gridcast_core::estimator::Mode;
use gridcast_core::scalar::{format_rational, parse_rational};
use gridcast_core::{BigRational, Caps, ModelKind, ModelSpec, Vertex, Window};
use serde::Serialize;
use serde_json::{json, Value};

use crate::error::CliError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum ModelArg {
    Finite,
    Halfspace,
}

impl From<ModelArg> for ModelKind {
    fn from(m: ModelArg) -> Self {
        match m {
            ModelArg::Finite => ModelKind::FiniteOrthant,
            ModelArg::Halfspace => ModelKind::HalfSpace,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize, Default)]
#[serde(rename_all = "kebab-case")]
pub enum Backend {
    #[default]
    Exact,
    Float,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Default)]
pub enum Format {
    #[default]
    Csv,
    Json,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum ModeArg {
    Unrestricted,
    Convex,
    Window,
    SingleVertex,
}

/// Model parameters shared by all subcommands that take one model.
#[derive(Debug, Clone, Args)]
pub struct ModelArgs {
    #[arg(long, value_enum, default_value = "finite")]
    pub model: ModelArg,
    /// Number of extra coordinates; vertices have d + 1 of them. Inferred
    /// from --alpha for the finite model when omitted.
    #[arg(long)]
    pub d: Option<usize>,
    /// Comma-separated weights alpha_1..alpha_{d+1} (finite) or a single
    /// weight (halfspace). `critical` selects alpha_i = 1/i.
    #[arg(long, default_value = "critical")]
    pub alpha: String,
    #[arg(long, default_value = "1")]
    pub epsilon: String,
    #[arg(long, default_value = "0")]
    pub mu0: String,
    #[arg(long = "sigma0-sq", default_value = "1")]
    pub sigma0_sq: String,
}

impl ModelArgs {
    pub fn build(&self) -> Result<ModelSpec, CliError> {
        build_model(self.model, self.d, &self.alpha)?
            .with_noise(
                rational(&self.epsilon, "--epsilon")?,
                rational(&self.mu0, "--mu0")?,
                rational(&self.sigma0_sq, "--sigma0-sq")?,
            )
            .map_err(CliError::from)
    }
}

#[derive(Debug, Clone, Args)]
pub struct OutputArgs {
    #[arg(long, value_enum, default_value = "csv")]
    pub format: Format,
    /// Write the table here instead of standard output.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Comma-separated `key=value` overrides of layer, matrix, cone and
    /// iterations.
    #[arg(long)]
    pub caps: Option<String>,
}

impl OutputArgs {
    pub fn caps(&self) -> Result<Caps, CliError> {
        match &self.caps {
            Some(s) => parse_caps(s),
            None => Ok(Caps::default()),
        }
    }
}

pub fn rational(s: &str, flag: &str) -> Result<BigRational, CliError> {
    parse_rational(s.trim()).map_err(|e| CliError::Usage(format!("{flag}: {e}")))
}

pub fn rational_list(s: &str, flag: &str) -> Result<Vec<BigRational>, CliError> {
    s.split(',').map(|x| rational(x, flag)).collect()
}

pub fn build_model(kind: ModelArg, d: Option<usize>, alpha: &str) -> Result<ModelSpec, CliError> {
    let alpha = alpha.trim();
    match kind {
        ModelArg::Finite if alpha == "critical" => Ok(ModelSpec::finite_critical(d.unwrap_or(1))),
        ModelArg::Halfspace if alpha == "critical" => Ok(ModelSpec::half_space_critical(d.unwrap_or(1))),
        ModelArg::Finite => {
            let alphas = rational_list(alpha, "--alpha")?;
            if let Some(d) = d {
                if alphas.len() != d + 1 {
                    return Err(CliError::Usage(format!(
                        "--alpha: the finite model with d = {d} needs {} weights, got {}",
                        d + 1,
                        alphas.len()
                    )));
                }
            }
            Ok(ModelSpec::finite(alphas)?)
        }
        ModelArg::Halfspace => {
            let alphas = rational_list(alpha, "--alpha")?;
            let first = alphas[0].clone();
            if alphas.iter().any(|a| *a != first) {
                return Err(CliError::Usage("--alpha: the halfspace model takes a single weight".into()));
            }
            Ok(ModelSpec::half_space(d.unwrap_or(1), first)?)
        }
    }
}

/// `n`, `a..b` (inclusive), `a..b:step` or a comma list of those.
pub fn parse_t_range(s: &str) -> Result<Vec<u64>, CliError> {
    let bad = |why: &str| CliError::Usage(format!("--t {s:?}: {why}"));
    let num = |x: &str| x.trim().parse::<u64>().map_err(|_| bad("expected a nonnegative integer"));
    let mut out = Vec::new();
    for part in s.split(',') {
        let (range, step) = match part.split_once(':') {
            Some((r, st)) => (r, num(st)?),
            None => (part, 1),
        };
        if step == 0 {
            return Err(bad("step must be positive"));
        }
        match range.split_once("..") {
            Some((a, b)) => {
                let (a, b) = (num(a)?, num(b.trim_start_matches('='))?);
                if a > b {
                    return Err(bad("empty range"));
                }
                out.extend((a..=b).step_by(step as usize));
            }
            None => out.push(num(range)?),
        }
    }
    out.sort_unstable();
    out.dedup();
    Ok(out)
}

pub fn parse_caps(s: &str) -> Result<Caps, CliError> {
    let mut caps = Caps::default();
    for item in s.split(',').filter(|x| !x.trim().is_empty()) {
        let (key, value) =
            item.split_once('=').ok_or_else(|| CliError::Usage(format!("--caps: expected key=value, got {item:?}")))?;
        let value: usize = value
            .trim()
            .replace('_', "")
            .parse()
            .map_err(|_| CliError::Usage(format!("--caps: {key} needs a positive integer")))?;
        match key.trim() {
            "layer" => caps.max_layer_size = value,
            "matrix" => caps.max_matrix_entries = value,
            "cone" => caps.max_cone_size = value,
            "iterations" => caps.max_iterations = value,
            other => return Err(CliError::Usage(format!("--caps: unknown key {other:?}"))),
        }
    }
    Ok(caps)
}

/// `N` for a width-N window centred on each layer, or `N@x0,x1,...` for a
/// fixed base corner.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct WindowSpec {
    pub width: u64,
    pub base: Option<Vertex>,
}

impl WindowSpec {
    pub fn parse(s: &str) -> Result<Self, CliError> {
        let (w, base) = match s.split_once('@') {
            Some((w, b)) => (w, Some(Vertex::parse(b).map_err(|e| CliError::Usage(format!("--window: {e}")))?)),
            None => (s, None),
        };
        let width = w.trim().parse().map_err(|_| CliError::Usage(format!("--window: bad width {w:?}")))?;
        if width == 0 {
            return Err(CliError::Usage("--window: width must be positive".into()));
        }
        Ok(WindowSpec { width, base })
    }

    pub fn at(&self, dim: usize, t: u64) -> Result<Window, CliError> {
        match &self.base {
            Some(b) if b.dim() != dim => Err(CliError::Usage(format!("--window: base {b} needs {dim} coordinates"))),
            Some(b) => Ok(Window::new(b.clone(), self.width)?),
            None => Ok(Window::centered(dim, t as i64, self.width)?),
        }
    }

    pub fn label(&self) -> String {
        match &self.base {
            Some(b) => format!("{}@{}", self.width, b),
            None => self.width.to_string(),
        }
    }
}

pub fn resolve_modes(modes: &[ModeArg], window: Option<&WindowSpec>) -> Result<Vec<Mode>, CliError> {
    let mut out = Vec::new();
    for m in modes {
        let mode = match m {
            ModeArg::Unrestricted => Mode::Unrestricted,
            ModeArg::Convex => Mode::Convex,
            ModeArg::SingleVertex => Mode::SingleVertex,
            ModeArg::Window => match window {
                Some(w) => Mode::Window(w.width),
                None => return Err(CliError::Usage("--mode window needs --window".into())),
            },
        };
        if !out.contains(&mode) {
            out.push(mode);
        }
    }
    Ok(out)
}

pub fn model_json(m: &ModelSpec) -> Value {
    json!({
        "kind": m.kind().name(),
        "d": m.d(),
        "alpha": m.alphas().iter().map(format_rational).collect::<Vec<_>>(),
        "epsilon": format_rational(m.epsilon()),
        "mu0": format_rational(m.mu0()),
        "sigma0_sq": format_rational(m.sigma0_sq()),
    })
}

pub fn caps_json(c: &Caps) -> Value {
    json!({
        "layer": c.max_layer_size,
        "matrix": c.max_matrix_entries,
        "cone": c.max_cone_size,
        "iterations": c.max_iterations,
    })
}

pub fn alpha_label(m: &ModelSpec) -> String {
    match m.kind() {
        ModelKind::HalfSpace => format_rational(m.top_alpha()),
        ModelKind::FiniteOrthant => m.alphas().iter().map(format_rational).collect::<Vec<_>>().join(" "),
    }
}
