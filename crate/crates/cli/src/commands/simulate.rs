use std::fs::File;
use std::io::BufWriter;
use std::path::{Path, PathBuf};

use clap::{Args, ValueEnum};
use gridcast_core::combinatorics::binomial;
use gridcast_core::sim::{GaussianMethod, Moments, SampleBatch, SamplePlan, SimOptions};
use gridcast_core::{Caps, Error, ModelKind, ModelSpec, Scalar};
use num_traits::ToPrimitive;
use rayon::prelude::*;
use serde::Serialize;
use serde_json::json;

use crate::config::{caps_json, model_json, ModelArgs, OutputArgs, WindowSpec};
use crate::error::CliError;
use crate::table::{Cell, Meta, ResultTable};

/// Samples per parallel work item. Chunks are merged in index order, so
/// results do not depend on the thread count.
pub const CHUNK: u64 = 4096;
const RATIO_BATCHES: usize = 20;

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum GaussianArg {
    BoxMuller,
    InverseCdf,
}

impl From<GaussianArg> for GaussianMethod {
    fn from(g: GaussianArg) -> Self {
        match g {
            GaussianArg::BoxMuller => GaussianMethod::BoxMuller,
            GaussianArg::InverseCdf => GaussianMethod::InverseCdf,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum EstimatorArg {
    /// Best linear combination under the exact covariance.
    Optimal,
    /// `C(t, i)` on `(i, t - i)`; finite model with d = 1 only.
    Binomial,
    Uniform,
    None,
}

/// Monte Carlo moments of a layer, compared with exact values.
#[derive(Debug, Clone, Args)]
pub struct SimulateArgs {
    #[command(flatten)]
    pub model: ModelArgs,
    #[arg(long, default_value_t = 4)]
    pub t: u64,
    /// Observed window on the half-space layer (default: width 1, centred).
    #[arg(long)]
    pub window: Option<String>,
    #[arg(long, default_value_t = 100_000)]
    pub samples: u64,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, value_enum, default_value = "box-muller")]
    pub gaussian: GaussianArg,
    #[arg(long, value_enum, default_value = "optimal")]
    pub estimator: EstimatorArg,
    /// Also write the raw samples as CSV.
    #[arg(long)]
    pub export: Option<PathBuf>,
    /// Drop all edge noise.
    #[arg(long, hide = true)]
    pub noiseless: bool,
    #[command(flatten)]
    pub output: OutputArgs,
}

pub const COLUMNS: [&str; 7] = ["quantity", "u", "v", "empirical", "std_error", "exact", "z"];

pub fn plan(
    m: &ModelSpec,
    t: u64,
    window: Option<&WindowSpec>,
    caps: &Caps,
    options: SimOptions,
) -> Result<SamplePlan, CliError> {
    Ok(match m.kind() {
        ModelKind::FiniteOrthant => {
            if window.is_some() {
                return Err(CliError::Usage("--window applies to the halfspace model".into()));
            }
            SamplePlan::finite(m, t, caps, options)?
        }
        ModelKind::HalfSpace => {
            let spec = window.cloned().unwrap_or(WindowSpec { width: 1, base: None });
            SamplePlan::half_space_window(m, &spec.at(m.dim(), t)?, t, caps, options)?
        }
    })
}

/// Moments of samples `0..n`, computed in parallel chunks.
pub fn parallel_moments(plan: &SamplePlan, seed: u64, n: u64) -> Moments {
    let chunks = n.div_ceil(CHUNK);
    let parts: Vec<Moments> = (0..chunks)
        .into_par_iter()
        .map(|c| {
            let start = c * CHUNK;
            plan.moments(seed, start, CHUNK.min(n - start))
        })
        .collect();
    let mut total = Moments::new(plan.row_len());
    for p in &parts {
        total.merge(p);
    }
    total
}

/// Per-chunk moments of `[X_0, observed..., zeta]`.
fn chunk_moments(plan: &SamplePlan, seed: u64, n: u64, coef: Option<&[f64]>) -> Vec<Moments> {
    let p = plan.row_len() + usize::from(coef.is_some());
    (0..n.div_ceil(CHUNK))
        .into_par_iter()
        .map(|c| {
            let start = c * CHUNK;
            let mut m = Moments::new(p);
            let mut row = vec![0.0; p];
            let mut scratch = Vec::new();
            for s in start..start + CHUNK.min(n - start) {
                plan.sample_into(seed, s, &mut scratch, &mut row[..plan.row_len()]);
                if let Some(c) = coef {
                    row[p - 1] = c.iter().zip(&row[1..p - 1]).map(|(a, b)| a * b).sum();
                }
                m.push(&row);
            }
            m
        })
        .collect()
}

fn ratio(m: &Moments, zeta: usize) -> f64 {
    m.covariance(0, zeta) / m.covariance(zeta, zeta).sqrt()
}

pub fn run(args: &SimulateArgs) -> Result<ResultTable, CliError> {
    let m = args.model.build()?;
    let caps = args.output.caps()?;
    if args.samples < 2 {
        return Err(CliError::Usage("--samples must be at least 2".into()));
    }
    let window = args.window.as_deref().map(WindowSpec::parse).transpose()?;
    let options = SimOptions { gaussian: args.gaussian.into(), noiseless: args.noiseless };
    let plan = plan(&m, args.t, window.as_ref(), &caps, options)?;
    let exact = match plan.exact_moments(&caps) {
        Ok(e) if !args.noiseless => Some(e),
        Ok(_) | Err(Error::Unsupported(_)) | Err(Error::Resource { .. }) => None,
        Err(e) => return Err(e.into()),
    };
    let coef = coefficients(args.estimator, &plan, exact.as_ref())?;
    let config = json!({
        "model": model_json(&m),
        "t": args.t,
        "window": plan.window().map(|w| json!({"base": w.base.to_string(), "width": w.width})),
        "samples": args.samples,
        "seed": args.seed,
        "gaussian": args.gaussian,
        "estimator": args.estimator,
        "noiseless": args.noiseless,
        "cone_size": plan.cone_size(),
        "caps": caps_json(&caps),
    });

    let chunks = chunk_moments(&plan, args.seed, args.samples, coef.as_deref());
    let p = plan.row_len();
    let mut total = Moments::new(chunks[0].p());
    for c in &chunks {
        total.merge(c);
    }
    let n = total.n as f64;
    let labels: Vec<String> =
        std::iter::once("X0".to_string()).chain(plan.observed().iter().map(|v| v.to_string())).collect();

    let mut table = ResultTable::new(Meta::new("simulate", config), COLUMNS.to_vec());
    // Standard errors use the exact covariance when it is known.
    let sigma = |i: usize, j: usize| match &exact {
        Some((_, cov)) => cov[i * p + j],
        None => total.covariance(i, j),
    };
    for i in 0..p {
        let se = (sigma(i, i) / n).sqrt();
        let ex = exact.as_ref().map(|(mean, _)| mean[i]);
        table.push(stat_row("mean", &labels[i], "", total.mean[i], se, ex));
    }
    for i in 0..p {
        for j in i..p {
            let s = sigma(i, j);
            let se = ((sigma(i, i) * sigma(j, j) + s * s) / n).sqrt();
            let ex = exact.as_ref().map(|(_, cov)| cov[i * p + j]);
            table.push(stat_row("cov", &labels[i], &labels[j], total.covariance(i, j), se, ex));
        }
    }
    if let Some(c) = &coef {
        let emp = ratio(&total, p);
        let se = batch_se(&chunks, p);
        let ex = exact.as_ref().map(|(_, cov)| {
            let f: f64 = (0..c.len()).map(|i| c[i] * cov[i + 1]).sum();
            let var: f64 = (0..c.len())
                .flat_map(|i| (0..c.len()).map(move |j| (i, j)))
                .map(|(i, j)| c[i] * c[j] * cov[(i + 1) * p + j + 1])
                .sum();
            f / var.sqrt()
        });
        let name = serde_json::to_value(args.estimator)?.as_str().unwrap_or_default().to_string();
        let mut row = stat_row("ratio", &name, "X0", emp, se.unwrap_or(f64::NAN), ex);
        if se.is_none() {
            row[4] = Cell::Empty;
            row[6] = Cell::Empty;
        }
        table.push(row);
    }

    if let Some(path) = &args.export {
        export_csv(&SampleBatch::generate(&plan, args.seed, args.samples), path)?;
    }
    Ok(table)
}

fn stat_row(q: &str, u: &str, v: &str, emp: f64, se: f64, exact: Option<f64>) -> Vec<Cell> {
    let z = exact.filter(|_| se > 0.0).map(|e| (emp - e) / se);
    vec![q.into(), u.into(), v.into(), emp.into(), se.into(), exact.into(), z.into()]
}

/// Standard error of the ratio from batch means over groups of chunks.
fn batch_se(chunks: &[Moments], zeta: usize) -> Option<f64> {
    let b = RATIO_BATCHES.min(chunks.len());
    if b < 2 {
        return None;
    }
    let mut values = Vec::with_capacity(b);
    for g in 0..b {
        let mut acc = Moments::new(chunks[0].p());
        for c in &chunks[g * chunks.len() / b..(g + 1) * chunks.len() / b] {
            acc.merge(c);
        }
        values.push(ratio(&acc, zeta));
    }
    let mean = values.iter().sum::<f64>() / b as f64;
    let var = values.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / (b as f64 - 1.0);
    Some((var / b as f64).sqrt())
}

fn coefficients(
    which: EstimatorArg,
    plan: &SamplePlan,
    exact: Option<&(Vec<f64>, Vec<f64>)>,
) -> Result<Option<Vec<f64>>, CliError> {
    let obs = plan.observed();
    let n = obs.len();
    let m = plan.model();
    Ok(match which {
        EstimatorArg::None => None,
        EstimatorArg::Uniform => Some(vec![1.0; n]),
        EstimatorArg::Binomial => {
            if m.kind() != ModelKind::FiniteOrthant || m.d() != 1 {
                return Err(CliError::Usage("--estimator binomial needs the finite model with d = 1".into()));
            }
            Some(
                obs.iter()
                    .map(|v| binomial(plan.t() as i64, v.coords()[0]).to_f64().unwrap_or(f64::INFINITY))
                    .collect(),
            )
        }
        EstimatorArg::Optimal => {
            let (_, cov) = exact.ok_or_else(|| {
                CliError::Engine(Error::Unsupported(
                    "exact covariances are unavailable here; use --estimator uniform".into(),
                ))
            })?;
            let p = n + 1;
            let sigma: Vec<f64> = (0..n).flat_map(|i| (0..n).map(move |j| cov[(i + 1) * p + j + 1])).collect();
            let f: Vec<f64> = (0..n).map(|i| cov[i + 1]).collect();
            Some(f64::solve_spd(&sigma, &f, n)?)
        }
    })
}

/// One row per sample: index, `X_0`, then the observed vertices.
pub fn export_csv(batch: &SampleBatch, path: &Path) -> Result<(), CliError> {
    let file = File::create(path).map_err(|e| CliError::io(path, e))?;
    let mut w = csv::Writer::from_writer(BufWriter::new(file));
    let mut header = vec!["sample".to_string(), "X0".to_string()];
    header.extend(batch.vertices.iter().map(|v| v.to_string()));
    w.write_record(&header)?;
    for s in 0..batch.n_samples as usize {
        let mut rec = vec![s.to_string(), format!("{:e}", batch.x0[s])];
        rec.extend(batch.row(s).iter().map(|x| format!("{x:e}")));
        w.write_record(&rec)?;
    }
    w.flush().map_err(|e| CliError::io(path, e))?;
    Ok(())
}
