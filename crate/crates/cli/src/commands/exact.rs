use clap::Args;
use gridcast_core::covariance::FiniteLayers;
use gridcast_core::estimator::{single_vertex_ratio_sq_series, single_vertex_ratios, EstimatorResult, Mode};
use gridcast_core::{BigRational, Caps, Error, ModelKind, ModelSpec, Scalar};
use rayon::prelude::*;
use serde_json::json;

use super::{solve, window_layer, Render};
use crate::config::{
    alpha_label, caps_json, model_json, parse_t_range, resolve_modes, Backend, ModeArg, ModelArgs, OutputArgs,
    WindowSpec,
};
use crate::error::CliError;
use crate::table::{Cell, Meta, ResultTable};

/// Per-layer ratios of the best estimator in each requested family.
#[derive(Debug, Clone, Args)]
pub struct ExactArgs {
    #[command(flatten)]
    pub model: ModelArgs,
    /// Layers, e.g. `1..30`, `50..400:50` or `3,5,8`.
    #[arg(long, default_value = "1..20")]
    pub t: String,
    #[arg(long, value_enum, value_delimiter = ',', default_value = "unrestricted")]
    pub mode: Vec<ModeArg>,
    /// Support window: width `N` centred on each layer, or `N@x0,x1,..`.
    #[arg(long)]
    pub window: Option<String>,
    #[arg(long, value_enum, default_value = "exact")]
    pub backend: Backend,
    #[command(flatten)]
    pub output: OutputArgs,
}

pub const COLUMNS: [&str; 10] = ["model", "d", "alpha", "t", "mode", "backend", "ratio", "ratio_sq", "support", "kkt"];

struct Row {
    t: u64,
    mode: String,
    ratio: f64,
    ratio_sq: String,
    support: usize,
    kkt: Option<String>,
}

impl Row {
    fn from_result<S: Scalar + Render>(res: &EstimatorResult<S>, mode: String) -> Self {
        Row {
            t: res.t,
            mode,
            ratio: res.ratio(),
            ratio_sq: res.ratio_sq.render(),
            support: res.coefficients.len(),
            kkt: res.certificate.as_ref().map(|c| if c.holds(1e-9) { "ok" } else { "violated" }.to_string()),
        }
    }
}

pub fn run(args: &ExactArgs) -> Result<ResultTable, CliError> {
    let m = args.model.build()?;
    let ts = parse_t_range(&args.t)?;
    let window = args.window.as_deref().map(WindowSpec::parse).transpose()?;
    let modes = resolve_modes(&args.mode, window.as_ref())?;
    let caps = args.output.caps()?;
    let config = json!({
        "model": model_json(&m),
        "t": ts,
        "modes": modes.iter().map(|m| m.to_string()).collect::<Vec<_>>(),
        "window": window.as_ref().map(WindowSpec::label),
        "backend": args.backend,
        "caps": caps_json(&caps),
    });
    let rows = match args.backend {
        Backend::Exact => rows::<BigRational>(&m, &ts, &modes, window.as_ref(), &caps)?,
        Backend::Float => rows::<f64>(&m, &ts, &modes, window.as_ref(), &caps)?,
    };
    let mut table = ResultTable::new(Meta::new("exact", config), COLUMNS.to_vec());
    let backend = match args.backend {
        Backend::Exact => "exact",
        Backend::Float => "float",
    };
    for r in rows {
        table.push(vec![
            m.kind().name().into(),
            m.d().into(),
            alpha_label(&m).into(),
            r.t.into(),
            r.mode.into(),
            backend.into(),
            r.ratio.into(),
            r.ratio_sq.into(),
            r.support.into(),
            Cell::from(r.kkt),
        ]);
    }
    Ok(table)
}

fn rows<S: Scalar + Render>(
    m: &ModelSpec,
    ts: &[u64],
    modes: &[Mode],
    window: Option<&WindowSpec>,
    caps: &Caps,
) -> Result<Vec<Row>, CliError> {
    match m.kind() {
        ModelKind::FiniteOrthant => finite_rows::<S>(m, ts, modes, window, caps),
        ModelKind::HalfSpace => halfspace_rows::<S>(m, ts, modes, window, caps),
    }
}

fn finite_rows<S: Scalar + Render>(
    m: &ModelSpec,
    ts: &[u64],
    modes: &[Mode],
    window: Option<&WindowSpec>,
    caps: &Caps,
) -> Result<Vec<Row>, CliError> {
    let t_max = ts.last().copied().unwrap_or(0);
    let mut out = Vec::new();
    for lc in FiniteLayers::<S>::new(m, *caps)?.take(t_max as usize + 1) {
        let lc = lc?;
        if ts.binary_search(&lc.t).is_err() {
            continue;
        }
        for &mode in modes {
            let res = match (mode, window) {
                (Mode::Window(_), Some(spec)) => {
                    let w = spec.at(m.dim(), lc.t)?;
                    let keep: Vec<usize> = (0..lc.n()).filter(|&i| w.contains(&lc.vertices[i])).collect();
                    if keep.is_empty() {
                        return Err(Error::Domain(format!("window {} misses layer {}", spec.label(), lc.t)).into());
                    }
                    solve(&lc.restrict(&keep), mode, caps)?
                }
                _ => solve(&lc, mode, caps)?,
            };
            out.push(Row::from_result(&res, mode.to_string()));
        }
    }
    Ok(out)
}

fn halfspace_rows<S: Scalar + Render>(
    m: &ModelSpec,
    ts: &[u64],
    modes: &[Mode],
    window: Option<&WindowSpec>,
    caps: &Caps,
) -> Result<Vec<Row>, CliError> {
    let t_max = ts.last().copied().unwrap_or(0);
    let mut per_mode: Vec<Vec<Row>> = Vec::new();
    for &mode in modes {
        let rows = if mode == Mode::SingleVertex {
            single_vertex_rows::<S>(m, ts, t_max)?
        } else {
            let spec = window.ok_or_else(|| {
                CliError::Usage(format!("{mode} estimators on the half-space need a finite support; pass --window"))
            })?;
            let label = match mode {
                Mode::Convex => format!("convex-window-{}", spec.width),
                _ => Mode::Window(spec.width).to_string(),
            };
            ts.par_iter()
                .map(|&t| {
                    let lc = window_layer::<S>(m, t, &spec.at(m.dim(), t)?, caps)?;
                    let solved_as = if mode == Mode::Convex { Mode::Convex } else { Mode::Window(spec.width) };
                    Ok(Row::from_result(&solve(&lc, solved_as, caps)?, label.clone()))
                })
                .collect::<Result<Vec<_>, CliError>>()?
        };
        per_mode.push(rows);
    }
    let mut iters: Vec<_> = per_mode.into_iter().map(Vec::into_iter).collect();
    let mut out = Vec::with_capacity(ts.len() * iters.len());
    for _ in ts {
        for rows in &mut iters {
            out.push(rows.next().expect("one row per layer"));
        }
    }
    Ok(out)
}

fn single_vertex_rows<S: Scalar + Render>(m: &ModelSpec, ts: &[u64], t_max: u64) -> Result<Vec<Row>, CliError> {
    let row = |t: u64, ratio: f64, ratio_sq: String| Row {
        t,
        mode: Mode::SingleVertex.to_string(),
        ratio,
        ratio_sq,
        support: 1,
        kkt: None,
    };
    if S::EXACT {
        let series = single_vertex_ratio_sq_series(m, t_max)?;
        Ok(ts
            .iter()
            .map(|&t| {
                let r = &series[t as usize];
                row(t, f64::sqrt(gridcast_core::scalar::rational_to_f64(r)), r.render())
            })
            .collect())
    } else {
        let ratios = single_vertex_ratios(m, t_max)?;
        Ok(ts.iter().map(|&t| row(t, ratios[t as usize], (ratios[t as usize] * ratios[t as usize]).render())).collect())
    }
}
