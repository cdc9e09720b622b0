//! The four run modes, replication over a worker pool, and the output
//! directory layout:
//!
//! | file | contents |
//! |---|---|
//! | `report.json` | the mode's report; wall-clock figures live under `timing` |
//! | `config.txt` | the resolved configuration as `key = value` lines |
//! | `curves.csv` | mean and standard error of the running `E` and `F` (simulate) |
//! | `trace.jsonl` / `trace_repNNN.jsonl` | thinned sweeps |
//! | `data/repNNN/{x,z,truth}.csv` | generated data (simulate, eb) |

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::time::Instant;

use log::info;
use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use super::config::{Mode, RunConfig};
use super::io::{load_csv, write_dataset, write_matrix_csv, write_report, JsonlSink, OutputDir, REPORT_FILE};
use super::scenario::gen_scenario;
use super::suite::{
    check_bounds, check_envelope_order, check_point_mass, check_prox, check_stationarity, check_update_identities,
    Check,
};
use crate::diagnostics::{relative_error, sen_prec_f_probs, write_csv_table, AcceptanceRates, TruthSpec};
use crate::eb::{estimate_sigma2, EbEstimate};
use crate::error::{Error, Result};
use crate::linmodel::{Dataset, LinearModel};
use crate::sampler::{run_chain, ChainState, ChainSummary, Kernel, NullSink, SamplerConfig, TraceRecord, TraceSink};

/// Marginal probability above which a coordinate counts as selected.
pub const SELECT_CUT: f64 = 0.5;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct MeanSe {
    pub mean: f64,
    pub se: f64,
}

impl MeanSe {
    /// Sample mean and `sd/√n`; the error is 0 for a single value.
    pub fn of(xs: &[f64]) -> Self {
        let n = xs.len() as f64;
        let mean = xs.iter().sum::<f64>() / n;
        if xs.len() < 2 {
            return Self { mean, se: 0.0 };
        }
        let var = xs.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / (n - 1.0);
        Self { mean, se: (var / n).sqrt() }
    }
}

/// Relative error and F-score of the running posterior means after
/// `sweep` sweeps.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CurvePoint {
    pub sweep: usize,
    pub rel_err: f64,
    pub f_score: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CurveSummary {
    pub sweep: usize,
    pub rel_err: MeanSe,
    pub f_score: MeanSe,
}

/// Recovery metrics of one chain against the truth: relative error of the
/// posterior-mean `θ`, and support scores of the coordinates whose
/// prox-thresholded value is nonzero with probability above
/// [`SELECT_CUT`]. `f_score_delta` thresholds the `δ` marginals instead.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Recovery {
    pub rel_err: f64,
    pub f_score: f64,
    pub sen: f64,
    pub prec: f64,
    pub f_score_delta: f64,
}

impl Recovery {
    pub fn of(summary: &ChainSummary, truth: &TruthSpec) -> Result<Self> {
        let s = sen_prec_f_probs(&summary.prox_inclusion_probs, &truth.delta, SELECT_CUT)?;
        let sd = sen_prec_f_probs(&summary.inclusion_probs, &truth.delta, SELECT_CUT)?;
        Ok(Self {
            rel_err: relative_error(&summary.theta_mean, &truth.theta)?,
            f_score: s.f,
            sen: s.sen,
            prec: s.prec,
            f_score_delta: sd.f,
        })
    }
}

/// Chain-level figures shared by every mode.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ChainFacts {
    pub gamma: f64,
    pub mala_step: f64,
    pub drift_cap: f64,
    pub m_upper: f64,
    pub kept: usize,
    pub trace_records: usize,
    pub acceptance: AcceptanceRates,
    pub q_mean: f64,
    pub lambda1_mean: f64,
    pub lambda2_mean: f64,
}

impl ChainFacts {
    fn of(s: &ChainSummary, trace_records: usize) -> Self {
        Self {
            gamma: s.gamma,
            mala_step: s.mala_step,
            drift_cap: s.drift_cap,
            m_upper: s.final_state.phi.m_upper,
            kept: s.kept,
            trace_records,
            acceptance: AcceptanceRates { mala: s.acc_mala.rate(), ind: s.acc_ind.rate(), rwm: s.acc_rwm.rate() },
            q_mean: s.q_mean,
            lambda1_mean: s.lambda1_mean,
            lambda2_mean: s.lambda2_mean,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RepOutcome {
    pub rep: usize,
    pub data_seed: u64,
    pub chain_seed: u64,
    pub recovery: Recovery,
    pub chain: ChainFacts,
    pub curve: Vec<CurvePoint>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Timing {
    pub wall_seconds: f64,
    pub rep_seconds: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SimulateReport {
    pub seed: u64,
    pub thin: usize,
    pub reps: Vec<RepOutcome>,
    pub rel_err: MeanSe,
    pub f_score: MeanSe,
    pub curve: Vec<CurveSummary>,
    pub timing: Timing,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FitReport {
    pub n: usize,
    pub d: usize,
    pub sigma2: f64,
    pub thin: usize,
    pub chain: ChainFacts,
    pub theta_mean: Vec<f64>,
    pub prox_theta_mean: Vec<f64>,
    pub inclusion_probs: Vec<f64>,
    pub prox_inclusion_probs: Vec<f64>,
    pub selected: Vec<usize>,
    pub timing: Timing,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EbSummary {
    pub sigma2_hat: f64,
    pub lambda: f64,
    pub support: usize,
    pub kkt: f64,
}

impl EbSummary {
    fn of(e: &EbEstimate) -> Self {
        Self { sigma2_hat: e.sigma2, lambda: e.cv.lambda, support: e.fit.support, kkt: e.fit.kkt }
    }
}

/// One replication of the estimated-versus-known noise comparison. Both
/// chains share their seed.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EbRep {
    pub rep: usize,
    pub data_seed: u64,
    pub chain_seed: u64,
    pub eb: EbSummary,
    pub known: Recovery,
    pub estimated: Recovery,
}

/// Column means in percent.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct EbTableRow {
    pub rel_err_pct: f64,
    pub f_score_pct: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EbReport {
    pub seed: u64,
    /// Present when the run used a dataset from disk.
    pub dataset: Option<EbDatasetFit>,
    pub reps: Vec<EbRep>,
    pub known: Option<EbTableRow>,
    pub estimated: Option<EbTableRow>,
    pub timing: Timing,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EbDatasetFit {
    pub eb: EbSummary,
    pub fit: FitReport,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ValidateReport {
    pub seed: u64,
    pub pass: bool,
    pub checks: Vec<Check>,
    pub timing: Timing,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(untagged)]
pub enum Report {
    Simulate(SimulateReport),
    Fit(FitReport),
    Eb(EbReport),
    Validate(ValidateReport),
}

impl Report {
    /// False only for a failed validation suite.
    pub fn pass(&self) -> bool {
        match self {
            Report::Validate(v) => v.pass,
            _ => true,
        }
    }
}

/// `count` pairs of (data, chain) seeds drawn from the master seed.
pub fn rep_seeds(master: u64, count: usize) -> Vec<(u64, u64)> {
    let mut rng = ChaCha8Rng::seed_from_u64(master);
    (0..count).map(|_| (rng.next_u64(), rng.next_u64())).collect()
}

/// Tracks running posterior means and evaluates them at fixed sweeps.
struct CurveSink<'a> {
    inner: &'a mut dyn TraceSink,
    truth: Option<&'a TruthSpec>,
    label: String,
    burn_in: u64,
    marks: Vec<usize>,
    next: usize,
    kept: f64,
    theta: Vec<f64>,
    prox_hits: Vec<f64>,
    curve: Vec<CurvePoint>,
}

impl<'a> CurveSink<'a> {
    fn new(inner: &'a mut dyn TraceSink, truth: Option<&'a TruthSpec>, cfg: &SamplerConfig, points: usize, label: String) -> Self {
        let (b, n) = (cfg.burn_in, cfg.iterations);
        let span = n.saturating_sub(b);
        let mut marks: Vec<usize> = (1..=points).map(|k| b + (k * span).div_ceil(points)).filter(|&m| m > b).collect();
        marks.dedup();
        Self {
            inner,
            truth,
            label,
            burn_in: b as u64,
            marks,
            next: 0,
            kept: 0.0,
            theta: Vec::new(),
            prox_hits: Vec::new(),
            curve: Vec::new(),
        }
    }
}

impl TraceSink for CurveSink<'_> {
    fn record(&mut self, r: &TraceRecord) -> Result<()> {
        self.inner.record(r)?;
        if r.iter <= self.burn_in {
            return Ok(());
        }
        if self.theta.is_empty() {
            self.theta = vec![0.0; r.theta.len()];
            self.prox_hits = vec![0.0; r.theta.len()];
        }
        self.kept += 1.0;
        for j in 0..r.theta.len() {
            self.theta[j] += r.theta[j];
            self.prox_hits[j] += (r.prox_theta[j] != 0.0) as u8 as f64;
        }
        if self.marks.get(self.next) == Some(&(r.iter as usize)) {
            self.next += 1;
            match self.truth {
                Some(truth) => {
                    let mean: Vec<f64> = self.theta.iter().map(|t| t / self.kept).collect();
                    let probs: Vec<f64> = self.prox_hits.iter().map(|t| t / self.kept).collect();
                    let p = CurvePoint {
                        sweep: r.iter as usize,
                        rel_err: relative_error(&mean, &truth.theta)?,
                        f_score: sen_prec_f_probs(&probs, &truth.delta, SELECT_CUT)?.f,
                    };
                    info!("{} sweep {}: E = {:.4}, F = {:.4}", self.label, p.sweep, p.rel_err, p.f_score);
                    self.curve.push(p);
                }
                None => info!("{} sweep {}: log target {:.4}", self.label, r.iter, r.log_target),
            }
        }
        Ok(())
    }
}

fn rep_name(rep: usize) -> String {
    format!("rep{rep:03}")
}

fn chain_config(cfg: &RunConfig, seed: u64) -> SamplerConfig {
    SamplerConfig { seed, ..cfg.sampler.clone() }
}

/// Run one chain on `model`, writing a trace to `trace` (if any).
fn run_one(
    cfg: &RunConfig,
    model: &LinearModel,
    truth: Option<&TruthSpec>,
    seed: u64,
    trace: Option<PathBuf>,
    label: String,
) -> Result<(ChainSummary, Vec<CurvePoint>, usize)> {
    let phi = cfg.hyper.resolve(model)?;
    let scfg = chain_config(cfg, seed);
    let gamma = model.gamma_from_rule(scfg.gamma0)?;
    let kernel = Kernel::new(model, gamma)?;
    let init = ChainState::zeros(model.data().d(), phi);
    let thin = cfg.thinning(model.data().d());
    match trace {
        Some(path) => {
            let mut sink = JsonlSink::new(std::io::BufWriter::new(fs::File::create(path)?), thin)?;
            let (summary, curve) = {
                let mut curve_sink = CurveSink::new(&mut sink, truth, &scfg, cfg.checkpoints, label);
                let s = run_chain(&kernel, &scfg, init, &mut curve_sink)?;
                (s, curve_sink.curve)
            };
            let written = sink.written();
            sink.into_inner()?;
            Ok((summary, curve, written))
        }
        None => {
            let mut null = NullSink;
            let mut curve_sink = CurveSink::new(&mut null, truth, &scfg, cfg.checkpoints, label);
            let s = run_chain(&kernel, &scfg, init, &mut curve_sink)?;
            Ok((s, curve_sink.curve, 0))
        }
    }
}

fn pool(cfg: &RunConfig) -> Result<rayon::ThreadPool> {
    rayon::ThreadPoolBuilder::new()
        .num_threads(cfg.threads)
        .build()
        .map_err(|e| Error::Config(format!("cannot start worker pool: {e}")))
}

fn write_truth(dir: &Path, truth: &TruthSpec) -> Result<()> {
    let m = nalgebra::DMatrix::from_column_slice(truth.theta.len(), 1, &truth.theta);
    write_matrix_csv(std::io::BufWriter::new(fs::File::create(dir.join("truth.csv"))?), "theta", &m)
}

fn write_rep_data(out: Option<&Path>, rep: usize, data: &Dataset, truth: &TruthSpec) -> Result<()> {
    if let Some(dir) = out {
        let d = dir.join("data").join(rep_name(rep));
        fs::create_dir_all(&d)?;
        write_dataset(&d, data)?;
        write_truth(&d, truth)?;
    }
    Ok(())
}

fn aggregate_curves(reps: &[RepOutcome]) -> Vec<CurveSummary> {
    let len = reps.iter().map(|r| r.curve.len()).min().unwrap_or(0);
    (0..len)
        .map(|k| {
            let e: Vec<f64> = reps.iter().map(|r| r.curve[k].rel_err).collect();
            let f: Vec<f64> = reps.iter().map(|r| r.curve[k].f_score).collect();
            CurveSummary { sweep: reps[0].curve[k].sweep, rel_err: MeanSe::of(&e), f_score: MeanSe::of(&f) }
        })
        .collect()
}

/// Replicated synthetic runs. With `out`, writes per-replication data and
/// traces and `curves.csv` there.
pub fn run_simulate(cfg: &RunConfig, out: Option<&Path>) -> Result<SimulateReport> {
    let start = Instant::now();
    let seeds = rep_seeds(cfg.seed, cfg.replications);
    let multi = cfg.replications > 1;
    let results: Vec<Result<(RepOutcome, f64)>> = pool(cfg)?.install(|| {
        seeds
            .par_iter()
            .enumerate()
            .map(|(rep, &(data_seed, chain_seed))| {
                let t = Instant::now();
                let (data, truth) = gen_scenario(&cfg.scenario, data_seed)?;
                write_rep_data(out, rep, &data, &truth)?;
                let model = LinearModel::new(data)?;
                let trace = out.map(|o| o.join(if multi { format!("trace_{}.jsonl", rep_name(rep)) } else { "trace.jsonl".into() }));
                let (summary, curve, written) = run_one(cfg, &model, Some(&truth), chain_seed, trace, rep_name(rep))?;
                let outcome = RepOutcome {
                    rep,
                    data_seed,
                    chain_seed,
                    recovery: Recovery::of(&summary, &truth)?,
                    chain: ChainFacts::of(&summary, written),
                    curve,
                };
                Ok((outcome, t.elapsed().as_secs_f64()))
            })
            .collect()
    });
    let mut reps = Vec::with_capacity(results.len());
    let mut rep_seconds = Vec::with_capacity(results.len());
    for r in results {
        let (o, s) = r?;
        reps.push(o);
        rep_seconds.push(s);
    }
    let curve = aggregate_curves(&reps);
    if let Some(dir) = out {
        let rows: Vec<Vec<f64>> =
            curve.iter().map(|c| vec![c.sweep as f64, c.rel_err.mean, c.rel_err.se, c.f_score.mean, c.f_score.se]).collect();
        let f = fs::File::create(dir.join("curves.csv"))?;
        write_csv_table(f, &["sweep", "rel_err_mean", "rel_err_se", "f_score_mean", "f_score_se"], &rows)?;
    }
    let e: Vec<f64> = reps.iter().map(|r| r.recovery.rel_err).collect();
    let f: Vec<f64> = reps.iter().map(|r| r.recovery.f_score).collect();
    Ok(SimulateReport {
        seed: cfg.seed,
        thin: cfg.thinning(cfg.scenario.d),
        rel_err: MeanSe::of(&e),
        f_score: MeanSe::of(&f),
        reps,
        curve,
        timing: Timing { wall_seconds: start.elapsed().as_secs_f64(), rep_seconds },
    })
}

fn fit_dataset(cfg: &RunConfig, data: Dataset, out: Option<&Path>) -> Result<FitReport> {
    let start = Instant::now();
    let (n, d, sigma2) = (data.n(), data.d(), data.sigma2());
    let model = LinearModel::new(data)?;
    let (_, chain_seed) = rep_seeds(cfg.seed, 1)[0];
    let trace = out.map(|o| o.join("trace.jsonl"));
    let (s, _, written) = run_one(cfg, &model, None, chain_seed, trace, "fit".into())?;
    let selected = (0..d).filter(|&j| s.prox_inclusion_probs[j] > SELECT_CUT).collect();
    Ok(FitReport {
        n,
        d,
        sigma2,
        thin: cfg.thinning(d),
        chain: ChainFacts::of(&s, written),
        theta_mean: s.theta_mean,
        prox_theta_mean: s.prox_theta_mean,
        inclusion_probs: s.inclusion_probs,
        prox_inclusion_probs: s.prox_inclusion_probs,
        selected,
        timing: Timing { wall_seconds: start.elapsed().as_secs_f64(), rep_seconds: Vec::new() },
    })
}

fn paths(cfg: &RunConfig) -> Result<(&Path, &Path)> {
    match (&cfg.x_path, &cfg.z_path) {
        (Some(x), Some(z)) => Ok((x, z)),
        _ => Err(Error::Config("x_path and z_path are required".into())),
    }
}

/// Fit the sampler to CSV data with the configured noise variance.
pub fn run_fit(cfg: &RunConfig, out: Option<&Path>) -> Result<FitReport> {
    let (x, z) = paths(cfg)?;
    let sigma2 = cfg.sigma2.ok_or_else(|| Error::Config("fit needs sigma2".into()))?;
    fit_dataset(cfg, load_csv(x, z, sigma2)?, out)
}

/// With data paths: estimate the noise variance and fit with it. Without:
/// replicate the synthetic scenario, running the sampler once with the
/// true and once with the estimated variance on each replication.
pub fn run_eb(cfg: &RunConfig, out: Option<&Path>) -> Result<EbReport> {
    let start = Instant::now();
    if cfg.x_path.is_some() {
        let (x, z) = paths(cfg)?;
        let data = load_csv(x, z, 1.0)?;
        let est = estimate_sigma2(&data, cfg.cv_folds, cfg.lambda_grid, cfg.seed)?;
        let fit = fit_dataset(cfg, data.with_sigma2(est.sigma2)?, out)?;
        return Ok(EbReport {
            seed: cfg.seed,
            dataset: Some(EbDatasetFit { eb: EbSummary::of(&est), fit }),
            reps: Vec::new(),
            known: None,
            estimated: None,
            timing: Timing { wall_seconds: start.elapsed().as_secs_f64(), rep_seconds: Vec::new() },
        });
    }
    let seeds = rep_seeds(cfg.seed, cfg.replications);
    let results: Vec<Result<(EbRep, f64)>> = pool(cfg)?.install(|| {
        seeds
            .par_iter()
            .enumerate()
            .map(|(rep, &(data_seed, chain_seed))| {
                let t = Instant::now();
                let (data, truth) = gen_scenario(&cfg.scenario, data_seed)?;
                write_rep_data(out, rep, &data, &truth)?;
                let est = estimate_sigma2(&data, cfg.cv_folds, cfg.lambda_grid, data_seed)?;
                let label = rep_name(rep);
                let known_model = LinearModel::new(data.clone())?;
                let (ks, _, _) = run_one(cfg, &known_model, Some(&truth), chain_seed, None, format!("{label} known"))?;
                let eb_model = LinearModel::new(data.with_sigma2(est.sigma2)?)?;
                let (es, _, _) = run_one(cfg, &eb_model, Some(&truth), chain_seed, None, format!("{label} eb"))?;
                let r = EbRep {
                    rep,
                    data_seed,
                    chain_seed,
                    eb: EbSummary::of(&est),
                    known: Recovery::of(&ks, &truth)?,
                    estimated: Recovery::of(&es, &truth)?,
                };
                Ok((r, t.elapsed().as_secs_f64()))
            })
            .collect()
    });
    let mut reps = Vec::with_capacity(results.len());
    let mut rep_seconds = Vec::with_capacity(results.len());
    for r in results {
        let (o, s) = r?;
        reps.push(o);
        rep_seconds.push(s);
    }
    let table = |pick: fn(&EbRep) -> Recovery| {
        let n = reps.len() as f64;
        EbTableRow {
            rel_err_pct: 100.0 * reps.iter().map(|r| pick(r).rel_err).sum::<f64>() / n,
            f_score_pct: 100.0 * reps.iter().map(|r| pick(r).f_score).sum::<f64>() / n,
        }
    };
    Ok(EbReport {
        seed: cfg.seed,
        dataset: None,
        known: Some(table(|r| r.known)),
        estimated: Some(table(|r| r.estimated)),
        reps,
        timing: Timing { wall_seconds: start.elapsed().as_secs_f64(), rep_seconds },
    })
}

/// The oracle suite at moderate size; `validate_sweeps` sets the length of
/// the stationarity chain.
pub fn run_validate(cfg: &RunConfig) -> Result<ValidateReport> {
    let start = Instant::now();
    let s = cfg.seed;
    let mut checks = Vec::new();
    let mut times = Vec::new();
    let steps: [&dyn Fn() -> Result<Check>; 6] = [
        &|| check_point_mass(20_000, s),
        &|| check_envelope_order(20, s),
        &|| check_prox(1_000, s),
        &|| check_bounds(20, s),
        &|| check_stationarity(cfg.validate_sweeps, s),
        &|| check_update_identities(1_000, s),
    ];
    for step in steps {
        let t = Instant::now();
        let c = step()?;
        info!("{}", c.line());
        checks.push(c);
        times.push(t.elapsed().as_secs_f64());
    }
    Ok(ValidateReport {
        seed: s,
        pass: checks.iter().all(|c| c.pass),
        checks,
        timing: Timing { wall_seconds: start.elapsed().as_secs_f64(), rep_seconds: times },
    })
}

/// Run `cfg` into a fresh output directory, committing it only when the
/// run completes.
pub fn execute(cfg: &RunConfig) -> Result<(Report, PathBuf)> {
    let dir = OutputDir::create(&cfg.out_dir)?;
    let staged = dir.path().to_path_buf();
    let report = match cfg.mode {
        Mode::Simulate => Report::Simulate(run_simulate(cfg, Some(&staged))?),
        Mode::Fit => Report::Fit(run_fit(cfg, Some(&staged))?),
        Mode::Eb => Report::Eb(run_eb(cfg, Some(&staged))?),
        Mode::Validate => Report::Validate(run_validate(cfg)?),
    };
    dir.file("config.txt")?.write_all(cfg.to_kv().as_bytes())?;
    write_report(&staged.join(REPORT_FILE), &report)?;
    let path = dir.commit()?;
    Ok((report, path))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn single_replication_aggregates_to_itself() {
        let p = |s, e, f| CurvePoint { sweep: s, rel_err: e, f_score: f };
        let rep = RepOutcome {
            rep: 0,
            data_seed: 1,
            chain_seed: 2,
            recovery: Recovery { rel_err: 0.1, f_score: 1.0, sen: 1.0, prec: 1.0, f_score_delta: 1.0 },
            chain: ChainFacts {
                gamma: 0.1,
                mala_step: 0.1,
                drift_cap: 1.0,
                m_upper: 1.0,
                kept: 1,
                trace_records: 0,
                acceptance: AcceptanceRates { mala: None, ind: None, rwm: None },
                q_mean: 0.5,
                lambda1_mean: 1.0,
                lambda2_mean: 1.0,
            },
            curve: vec![p(10, 0.3, 0.5), p(20, 0.2, 0.8)],
        };
        let agg = aggregate_curves(std::slice::from_ref(&rep));
        for (a, c) in agg.iter().zip(&rep.curve) {
            assert_eq!((a.sweep, a.rel_err.mean, a.f_score.mean), (c.sweep, c.rel_err, c.f_score));
            assert_eq!((a.rel_err.se, a.f_score.se), (0.0, 0.0));
        }
    }

    #[test]
    fn rep_seeds_are_stable_prefixes() {
        let a = rep_seeds(5, 3);
        assert_eq!(a, rep_seeds(5, 30)[..3]);
        assert_ne!(a[0], rep_seeds(6, 1)[0]);
    }
}
