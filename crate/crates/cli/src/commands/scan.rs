use clap::Args;
use gridcast_core::covariance::FiniteLayers;
use gridcast_core::estimator::{optimal_linear, single_vertex_ratios, Mode};
use gridcast_core::phase::{phase_verdict, PhaseVerdict, ReconstructionKind};
use gridcast_core::{Caps, ModelKind, ModelSpec};
use rayon::prelude::*;
use serde_json::json;

use crate::config::{alpha_label, build_model, caps_json, model_json, parse_t_range, ModelArg, OutputArgs};
use crate::error::CliError;
use crate::table::{Cell, Meta, ResultTable};

/// Phase verdicts over a grid of parameters, each with a float ratio trace.
#[derive(Debug, Clone, Args)]
pub struct ScanArgs {
    #[arg(long, value_enum, default_value = "halfspace")]
    pub model: ModelArg,
    /// Values of d; every half-space weight is combined with each of them.
    #[arg(long, value_delimiter = ',', default_value = "1")]
    pub d: Vec<usize>,
    /// Grid points separated by `;`. Half-space points are single weights;
    /// finite points are comma-separated tuples. `critical` is allowed.
    #[arg(long)]
    pub alpha: String,
    /// Layers of the trace. Defaults to `10..100:10` (halfspace) or `1..20`
    /// (finite).
    #[arg(long)]
    pub t: Option<String>,
    #[command(flatten)]
    pub output: OutputArgs,
}

pub fn columns() -> Vec<&'static str> {
    let mut c = vec!["model", "d", "alpha", "t", "mode", "ratio", "verdict", "citation"];
    c.extend(ReconstructionKind::ALL.iter().map(|k| k.name()));
    c
}

pub fn run(args: &ScanArgs) -> Result<ResultTable, CliError> {
    let caps = args.output.caps()?;
    let ts = parse_t_range(args.t.as_deref().unwrap_or(match args.model {
        ModelArg::Halfspace => "10..100:10",
        ModelArg::Finite => "1..20",
    }))?;
    let mut points = Vec::new();
    for point in args.alpha.split(';').map(str::trim).filter(|p| !p.is_empty()) {
        match args.model {
            ModelArg::Finite if point != "critical" => points.push(build_model(args.model, None, point)?),
            _ => {
                for &d in &args.d {
                    points.push(build_model(args.model, Some(d), point)?);
                }
            }
        }
    }
    if points.is_empty() {
        return Err(CliError::Usage("--alpha: no grid points".into()));
    }
    let config = json!({
        "points": points.iter().map(model_json).collect::<Vec<_>>(),
        "t": ts,
        "caps": caps_json(&caps),
    });
    let results = points
        .par_iter()
        .map(|m| Ok((phase_verdict(m), trace(m, &ts, &caps)?)))
        .collect::<Result<Vec<_>, CliError>>()?;

    let mut table = ResultTable::new(Meta::new("scan", config), columns());
    for (verdict, (mode, ratios)) in &results {
        for (&t, &ratio) in ts.iter().zip(ratios) {
            table.push(row(verdict, t, mode, ratio));
        }
    }
    Ok(table)
}

fn row(v: &PhaseVerdict, t: u64, mode: &str, ratio: f64) -> Vec<Cell> {
    let m = &v.model;
    let mut row: Vec<Cell> = vec![
        m.kind().name().into(),
        m.d().into(),
        alpha_label(m).into(),
        t.into(),
        mode.into(),
        ratio.into(),
        v.summary().into(),
        v.citation().into(),
    ];
    row.extend(ReconstructionKind::ALL.iter().map(|&k| Cell::from(v.get(k).claim.to_string())));
    row
}

/// Single-vertex ratios on the half-space, unrestricted optima on the
/// orthant.
fn trace(m: &ModelSpec, ts: &[u64], caps: &Caps) -> Result<(String, Vec<f64>), CliError> {
    let t_max = ts.last().copied().unwrap_or(0);
    match m.kind() {
        ModelKind::HalfSpace => {
            let all = single_vertex_ratios(m, t_max)?;
            Ok((Mode::SingleVertex.to_string(), ts.iter().map(|&t| all[t as usize]).collect()))
        }
        ModelKind::FiniteOrthant => {
            let mut out = Vec::with_capacity(ts.len());
            for lc in FiniteLayers::<f64>::new(m, *caps)?.take(t_max as usize + 1) {
                let lc = lc?;
                if ts.binary_search(&lc.t).is_ok() {
                    out.push(optimal_linear(&lc)?.ratio());
                }
            }
            Ok((Mode::Unrestricted.to_string(), out))
        }
    }
}
