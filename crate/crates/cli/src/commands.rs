//! One function per subcommand. Each reads the resolved config and writes its
//! files into the output directory.

use std::fmt;
use std::fs;
use std::path::{Path, PathBuf};
use std::time::{SystemTime, UNIX_EPOCH};

use metastab::disorder::{sample_realization, DisorderRealization, SamplingMode};
use metastab::kramers::fluctuation::scaled_barrier_deviation;
use metastab::kramers::{exponent_fluctuation, predict_mean_time, KramersPrediction};
use metastab::landscape::hypothesis::{check_hypothesis, locate_gate, lower_minima};
use metastab::landscape::{
    beta_critical, find_fixed_points, finite_n_fixed_points, h_critical, phase_grid, t_curve, LandscapeReport,
    ModelParams, QuenchedLandscape,
};
use metastab::mesodyn::ks::mean_stderr;
use metastab::mesodyn::{run_batch, BatchSummary, LumpedDynamics, MesoState, TargetSet, DEFAULT_STEP_CAP};
use metastab::oracle::{build_chain, exact_mean_hitting_time};
use rayon::prelude::*;
use serde_json::{json, Value};

use crate::config::{ConfigError, RunConfig};

pub const TCURVE_SAMPLES: usize = 2000;
const ROOT_TOL: f64 = 1e-12;
const HC_TOL: f64 = 1e-12;
const HISTOGRAM_BINS: usize = 40;

#[derive(Debug)]
pub enum CliError {
    Config(ConfigError),
    Numeric(metastab::Error),
    Timeout(metastab::Error),
    Io(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) => 2,
            CliError::Numeric(_) => 3,
            CliError::Timeout(_) => 4,
            CliError::Io(_) => 1,
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Config(e) => write!(f, "{e}"),
            CliError::Numeric(e) | CliError::Timeout(e) => write!(f, "{e}"),
            CliError::Io(e) => write!(f, "{e}"),
        }
    }
}

impl From<ConfigError> for CliError {
    fn from(e: ConfigError) -> Self {
        CliError::Config(e)
    }
}

impl From<metastab::Error> for CliError {
    fn from(e: metastab::Error) -> Self {
        match e {
            metastab::Error::Timeout { .. } => CliError::Timeout(e),
            _ => CliError::Numeric(e),
        }
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Io(e.to_string())
    }
}

impl From<csv::Error> for CliError {
    fn from(e: csv::Error) -> Self {
        CliError::Io(e.to_string())
    }
}

pub type CliResult<T> = Result<T, CliError>;

pub struct Context {
    pub config: RunConfig,
    pub out_dir: PathBuf,
    pub timestamp: bool,
}

impl Context {
    fn path(&self, name: &str) -> PathBuf {
        self.out_dir.join(name)
    }

    fn write_json(&self, name: &str, mut body: Value) -> CliResult<PathBuf> {
        if self.timestamp {
            let secs = SystemTime::now().duration_since(UNIX_EPOCH).map(|d| d.as_secs()).unwrap_or(0);
            body["generated_at"] = json!(secs);
        }
        let path = self.path(name);
        let mut text = serde_json::to_string_pretty(&body).expect("json value serializes");
        text.push('\n');
        fs::write(&path, text)?;
        Ok(path)
    }

    fn write_csv(&self, name: &str, header: &[&str], rows: &[Vec<String>]) -> CliResult<PathBuf> {
        let path = self.path(name);
        write_csv(&path, header, rows)?;
        Ok(path)
    }

    fn params(&self) -> CliResult<ModelParams> {
        Ok(ModelParams::new(self.config.single_beta()?, self.config.single_h()?)?)
    }

    fn realization(&self, n: u64) -> CliResult<DisorderRealization> {
        let real = sample_realization(&self.config.distribution, n, self.config.seed, self.config.sampling)?;
        real.ensure_nonempty()?;
        Ok(real)
    }

    fn max_steps(&self) -> u64 {
        self.config.max_steps.unwrap_or(DEFAULT_STEP_CAP)
    }
}

fn write_csv(path: &Path, header: &[&str], rows: &[Vec<String>]) -> CliResult<()> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(header)?;
    for r in rows {
        w.write_record(r)?;
    }
    w.flush()?;
    Ok(())
}

/// Shortest round-trip form, '.' as separator, exponent outside [1e-4, 1e15).
fn num(x: f64) -> String {
    let a = x.abs();
    if a == 0.0 || !a.is_finite() || (1e-4..1e15).contains(&a) {
        format!("{x}")
    } else {
        format!("{x:e}")
    }
}

/// The minimum of highest free energy among those with a strictly lower one.
fn default_minimum(report: &LandscapeReport) -> Option<usize> {
    report
        .minima()
        .filter(|(i, _)| !lower_minima(report, *i).is_empty())
        .max_by(|a, b| a.1.free_energy.total_cmp(&b.1.free_energy))
        .map(|(i, _)| i)
}

fn choose_minimum(config: &RunConfig, report: &LandscapeReport) -> CliResult<usize> {
    match config.minimum {
        Some(i) if i < report.count() => Ok(i),
        Some(i) => Err(ConfigError::new("minimum", format!("index {i} but only {} critical points", report.count())).into()),
        None => default_minimum(report).ok_or_else(|| {
            CliError::Numeric(metastab::Error::Hypothesis { item: 1, detail: "no minimum has a lower minimum".into() })
        }),
    }
}

pub fn landscape(ctx: &Context) -> CliResult<Vec<PathBuf>> {
    let p = ctx.params()?;
    let dist = &ctx.config.distribution;
    let report = find_fixed_points(dist, &p, ROOT_TOL);
    let body = json!({
        "beta": p.beta,
        "h": p.h,
        "beta_c": beta_critical(dist),
        "count": report.count(),
        "report": report,
    });
    let a = ctx.write_json(&ctx.config.output.landscape, body)?;
    let b = write_tcurve(ctx, &p)?;
    Ok(vec![a, b])
}

fn write_tcurve(ctx: &Context, p: &ModelParams) -> CliResult<PathBuf> {
    let rows: Vec<Vec<String>> = t_curve(&ctx.config.distribution, p, TCURVE_SAMPLES)
        .iter()
        .map(|r| r.iter().map(|&x| num(x)).collect())
        .collect();
    ctx.write_csv(&ctx.config.output.tcurve, &["K", "T", "T_prime", "T_second"], &rows)
}

pub fn tcurve(ctx: &Context) -> CliResult<Vec<PathBuf>> {
    let p = ctx.params()?;
    Ok(vec![write_tcurve(ctx, &p)?])
}

pub fn phase_diagram(ctx: &Context) -> CliResult<Vec<PathBuf>> {
    let dist = &ctx.config.distribution;
    let beta_c = beta_critical(dist);
    let betas = ctx.config.beta.values(beta_c);
    let rows: Vec<CliResult<Vec<String>>> = betas
        .par_iter()
        .map(|&beta| {
            if beta <= beta_c {
                return Ok(vec![num(beta), num(beta / beta_c), String::new(), String::new(), "false".into()]);
            }
            let hc = h_critical(beta, dist, HC_TOL)?;
            Ok(vec![num(beta), num(beta / beta_c), num(hc), num(beta * hc), "true".into()])
        })
        .collect();
    let rows = rows.into_iter().collect::<CliResult<Vec<_>>>()?;
    let mut out = vec![ctx.write_csv(
        &ctx.config.output.phase_diagram,
        &["beta", "beta_over_beta_c", "h_c", "beta_h_c", "applicable"],
        &rows,
    )?];
    if matches!(ctx.config.h, crate::config::ParamSpec::Sweep(_)) {
        let hs = ctx.config.h.values(beta_c);
        let cells: Vec<Vec<String>> = phase_grid(dist, &betas, &hs)
            .iter()
            .map(|c| vec![num(c.beta), num(c.h), c.metastable.to_string(), c.n_roots.to_string()])
            .collect();
        out.push(ctx.write_csv(&ctx.config.output.phase_grid, &["beta", "h", "metastable", "n_roots"], &cells)?);
    }
    Ok(out)
}

struct Prepared {
    real: DisorderRealization,
    p: ModelParams,
    landscape: QuenchedLandscape,
    minimum: usize,
}

fn prepare(ctx: &Context, n: u64) -> CliResult<Prepared> {
    let p = ctx.params()?;
    let real = ctx.realization(n)?;
    let landscape = finite_n_fixed_points(&real, &p, ROOT_TOL)?;
    let minimum = choose_minimum(&ctx.config, &landscape.report)?;
    Ok(Prepared { real, p, landscape, minimum })
}

fn prediction_json(pred: &KramersPrediction) -> Value {
    json!({
        "prediction": pred,
        "mean_time": pred.mean_time,
        "minimum_index": pred.minimum_index,
        "saddle_index": pred.saddle_index,
        "saddle_rates": pred.saddle_rates,
    })
}

pub fn predict(ctx: &Context) -> CliResult<Vec<PathBuf>> {
    let n = ctx.config.require_n()?;
    let s = prepare(ctx, n)?;
    let diagnostic = check_hypothesis(&s.real, &s.p, &s.landscape, s.minimum);
    let pred = predict_mean_time(&s.landscape, s.minimum, &s.real, &s.p)?;
    let mut body = prediction_json(&pred);
    body["n"] = json!(n);
    body["level_counts"] = json!(s.real.level_counts);
    body["hypothesis"] = json!(diagnostic);
    body["landscape"] = json!(s.landscape);
    Ok(vec![ctx.write_json(&ctx.config.output.prediction, body)?])
}

fn start_and_target(s: &Prepared) -> CliResult<(MesoState, TargetSet)> {
    let start = MesoState::new(s.landscape.snapped[s.minimum].clone(), &s.real)?;
    let target = TargetSet::sublevel_default(&s.landscape, s.minimum, &s.real, &s.p)?;
    Ok((start, target))
}

pub fn simulate(ctx: &Context) -> CliResult<Vec<PathBuf>> {
    let n = ctx.config.require_n()?;
    let s = prepare(ctx, n)?;
    let (start, target) = start_and_target(&s)?;
    let samples = run_batch(&start, &target, &s.real, &s.p, ctx.config.seed, ctx.config.trials, ctx.max_steps())?;
    let rows: Vec<Vec<String>> = samples
        .iter()
        .map(|x| vec![x.stream.to_string(), x.seed.to_string(), num(x.time), x.steps.to_string()])
        .collect();
    let a = ctx.write_csv(&ctx.config.output.samples, &["trial", "seed", "time", "steps"], &rows)?;
    let times: Vec<f64> = samples.iter().map(|x| x.time).collect();
    let summary = match BatchSummary::from_times(&times) {
        Ok(b) => json!(b),
        Err(e) => {
            // too few trials for KS; report the moments only
            let (mean, stderr) = mean_stderr(&times);
            json!({"trials": times.len(), "mean": mean, "stderr": stderr, "ks": e.to_string()})
        }
    };
    let predicted = predict_mean_time(&s.landscape, s.minimum, &s.real, &s.p).ok().map(|p| p.mean_time);
    let body = json!({
        "n": n,
        "minimum_index": s.minimum,
        "start": start.up,
        "target": target,
        "summary": summary,
        "predicted_mean_time": predicted,
    });
    let b = ctx.write_json(&ctx.config.output.summary, body)?;
    Ok(vec![a, b])
}

/// Oracle and simulation both target the grid points of the lower minima,
/// the event the prediction refers to.
pub fn validate(ctx: &Context) -> CliResult<Vec<PathBuf>> {
    let mut rows = Vec::new();
    for n in ctx.config.n_list()? {
        let s = prepare(ctx, n)?;
        let start = MesoState::new(s.landscape.snapped[s.minimum].clone(), &s.real)?;
        let lower = lower_minima(&s.landscape.report, s.minimum);
        let target = TargetSet::explicit(lower.iter().map(|&i| s.landscape.snapped[i].clone()));
        let chain = build_chain(&s.real, &s.p)?;
        let dynamics = LumpedDynamics::new(&s.real, &s.p);
        let mask = chain.target_mask(|x| target.contains(x, &dynamics));
        let exact = exact_mean_hitting_time(&chain, chain.index_of(&start.up), &mask)?;
        let samples = run_batch(&start, &target, &s.real, &s.p, ctx.config.seed, ctx.config.trials, ctx.max_steps())?;
        let times: Vec<f64> = samples.iter().map(|x| x.time).collect();
        let (sim_mean, sim_se) = mean_stderr(&times);
        let pred = predict_mean_time(&s.landscape, s.minimum, &s.real, &s.p)?.mean_time;
        rows.push(vec![
            n.to_string(),
            num(exact),
            num(sim_mean),
            num(sim_se),
            num(pred),
            num(pred / exact),
            num(sim_mean / exact),
        ]);
    }
    let header = ["n", "exact_mean", "sim_mean", "sim_stderr", "predicted_mean", "pred_over_exact", "sim_over_exact"];
    Ok(vec![ctx.write_csv(&ctx.config.output.validation, &header, &rows)?])
}

pub fn fluctuations(ctx: &Context) -> CliResult<Vec<PathBuf>> {
    let n = ctx.config.require_n()?;
    let p = ctx.params()?;
    let dist = &ctx.config.distribution;
    let report = find_fixed_points(dist, &p, ROOT_TOL);
    let minimum = choose_minimum(&ctx.config, &report)?;
    let gate = locate_gate(&report, minimum).ok_or_else(|| {
        CliError::Numeric(metastab::Error::Hypothesis { item: 1, detail: "no lower minimum".into() })
    })?;
    let fl = exponent_fluctuation(dist, &p, &report.points[minimum], &report.points[gate.saddle_index])?;
    let draws = ctx.config.disorder_draws.unwrap_or(ctx.config.trials);
    // draw d uses master seed + d
    let values: Vec<f64> = (0..draws)
        .into_par_iter()
        .map(|d| {
            let real = sample_realization(dist, n, ctx.config.seed.wrapping_add(d), SamplingMode::Iid)?;
            scaled_barrier_deviation(&real, &p, report.count(), minimum, gate.saddle_index, fl.delta_f_limit)
        })
        .collect::<metastab::Result<Vec<f64>>>()?;
    let (mean, _) = mean_stderr(&values);
    let variance = if values.len() > 1 {
        values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / (values.len() - 1) as f64
    } else {
        0.0
    };
    let body = json!({
        "n": n,
        "minimum_index": minimum,
        "saddle_index": gate.saddle_index,
        "fluctuation": fl,
        "draws": draws,
        "sample_mean": mean,
        "sample_variance": variance,
    });
    let a = ctx.write_json(&ctx.config.output.fluctuations, body)?;
    let b = ctx.write_csv(&ctx.config.output.histogram, &["bin_low", "bin_high", "count"], &histogram(&values))?;
    Ok(vec![a, b])
}

fn histogram(values: &[f64]) -> Vec<Vec<String>> {
    let lo = values.iter().cloned().fold(f64::INFINITY, f64::min);
    let hi = values.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    if !(hi > lo) {
        return vec![vec![num(lo), num(hi), values.len().to_string()]];
    }
    let width = (hi - lo) / HISTOGRAM_BINS as f64;
    let mut counts = [0usize; HISTOGRAM_BINS];
    for v in values {
        let b = (((v - lo) / width) as usize).min(HISTOGRAM_BINS - 1);
        counts[b] += 1;
    }
    (0..HISTOGRAM_BINS)
        .map(|b| vec![num(lo + b as f64 * width), num(lo + (b + 1) as f64 * width), counts[b].to_string()])
        .collect()
}
