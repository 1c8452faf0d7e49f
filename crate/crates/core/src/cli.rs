//! Config-driven sweeps written as CSV tables.
//!
//! Every grid point gets its own seed `derive_seed(seed, [grid_index, rep])`,
//! points run in parallel and rows are emitted in grid order, so output does
//! not depend on the thread count. A failing point is reported in its
//! `status` column and the sweep carries on.

use std::io::Write;
use std::path::PathBuf;
use std::time::Instant;

use clap::{Args, Parser, Subcommand};
use rayon::prelude::*;

use crate::chaos::{ensemble_diagnostics, phase_gap_ratios, EnsembleSummary, PhaseSpectrum, RHistogram, R_BINS};
use crate::config::{shots_label, state_rng, ExperimentConfig, ModelKind, SweepParameter};
use crate::error::{Error, Result};
use crate::hilbert::{enumerate_sectors, trace_power, Lattice, Sector, SectorLabel, SectorState};
use crate::imperfect::{fidelity_correct, ChannelKind, ChannelSpec, FidelitySpec};
use crate::measure::{Observable, Shots};
use crate::models::{IsingParams, QuenchModel};
use crate::protocol::{Imperfections, Protocol, UnitarySource};
use crate::renyi::{predicted_error_with_outcomes, EstimationReport};
use crate::rng::{derive, derive_seed};
use crate::states;
use crate::unitaries::{BlockUnitary, QuenchEngine, QuenchSchedule};

/// Columns appended to every row.
pub const TRAILER: [&str; 4] = ["seed", "config_hash", "status", "wall_time_s"];

/// Long-format result table.
#[derive(Debug, Clone, PartialEq)]
pub struct SweepResult {
    pub columns: Vec<String>,
    pub rows: Vec<Vec<String>>,
    pub config_hash: String,
}

impl SweepResult {
    pub fn column(&self, name: &str) -> Option<usize> {
        self.columns.iter().position(|c| c == name)
    }

    /// Values of one column, in row order.
    pub fn values(&self, name: &str) -> Option<Vec<&str>> {
        let k = self.column(name)?;
        Some(self.rows.iter().map(|r| r[k].as_str()).collect())
    }

    /// Write a `#` comment line with the config hash, then RFC-4180 CSV.
    pub fn write<W: Write>(&self, mut out: W) -> Result<()> {
        writeln!(out, "# config_hash={}", self.config_hash)?;
        let mut w = csv::Writer::from_writer(out);
        w.write_record(&self.columns)?;
        for r in &self.rows {
            w.write_record(r)?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn to_csv_string(&self) -> Result<String> {
        let mut buf = Vec::new();
        self.write(&mut buf)?;
        Ok(String::from_utf8(buf).expect("csv output is utf-8"))
    }
}

fn num(x: f64) -> String {
    format!("{x}")
}

struct Point<T> {
    key: Vec<String>,
    job: T,
}

fn evaluate<T: Sync>(
    cfg: &ExperimentConfig,
    key_columns: &[&str],
    metric_columns: &[&str],
    points: Vec<Point<T>>,
    f: impl Fn(u64, &T) -> Result<Vec<String>> + Sync,
) -> SweepResult {
    let hash = cfg.hash();
    let rows = points
        .par_iter()
        .enumerate()
        .map(|(i, p)| {
            let start = Instant::now();
            let outcome = f(i as u64, &p.job).and_then(|m| {
                if m.len() == metric_columns.len() {
                    Ok(m)
                } else {
                    Err(Error::InvalidParameter("metric row has the wrong width".into()))
                }
            });
            let (metrics, status) = match outcome {
                Ok(m) => (m, "ok".to_string()),
                Err(e) => (vec![String::new(); metric_columns.len()], format!("error: {e}")),
            };
            let mut row = p.key.clone();
            row.extend(metrics);
            row.push(cfg.seed.to_string());
            row.push(hash.clone());
            row.push(status);
            row.push(format!("{:.3}", start.elapsed().as_secs_f64()));
            row
        })
        .collect();
    let columns = key_columns.iter().chain(metric_columns).chain(TRAILER.iter()).map(|s| s.to_string()).collect();
    SweepResult { columns, rows, config_hash: hash }
}

/// Error statistics of repeated estimates against an exact value.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ErrorStats {
    pub mean: f64,
    pub mean_abs_error: f64,
    pub rms_error: f64,
    pub median_abs_error: f64,
}

impl ErrorStats {
    pub fn new(estimates: &[f64], exact: f64) -> Self {
        let n = estimates.len() as f64;
        let mut abs: Vec<f64> = estimates.iter().map(|e| (e - exact).abs()).collect();
        abs.sort_by(f64::total_cmp);
        let median = match abs.len() {
            0 => f64::NAN,
            k if k % 2 == 1 => abs[k / 2],
            k => 0.5 * (abs[k / 2 - 1] + abs[k / 2]),
        };
        Self {
            mean: estimates.iter().sum::<f64>() / n,
            mean_abs_error: abs.iter().sum::<f64>() / n,
            rms_error: (abs.iter().map(|a| a * a).sum::<f64>() / n).sqrt(),
            median_abs_error: median,
        }
    }
}

fn observable(sectors: &[Sector], group: usize) -> Result<Observable> {
    if group == 1 {
        Ok(Observable::fine(sectors))
    } else {
        Observable::coarse(sectors, group)
    }
}

/// Run `reps` estimates of `protocol` with per-repetition seeds.
fn repeat(protocol: &Protocol, seed: u64, point: u64, reps: usize) -> Result<Vec<EstimationReport>> {
    (0..reps).map(|r| protocol.estimate(derive_seed(seed, &[point, r as u64]))).collect()
}

/// Planning-formula prediction for the sectors the state occupies.
fn prediction(report: &EstimationReport, n: u32, exact: f64) -> f64 {
    let dim = report.sectors.iter().map(|s| s.dim).sum();
    predicted_error_with_outcomes(n, report.unitaries, report.shots, dim, report.outcomes, exact.clamp(0.0, 1.0))
}

fn estimate_metrics(reports: &[EstimationReport], n: u32, exact: f64) -> Vec<String> {
    let est: Vec<f64> = reports.iter().map(|r| r.p(n)).collect();
    let s = ErrorStats::new(&est, exact);
    vec![
        num(exact),
        num(s.mean),
        num(s.mean_abs_error),
        num(s.rms_error),
        num(s.median_abs_error),
        num(prediction(&reports[0], n, exact)),
    ]
}

const ESTIMATE_COLUMNS: [&str; 6] =
    ["exact", "estimate_mean", "mean_abs_error", "rms_error", "median_abs_error", "predicted_error"];

/// A model with its sectors, test state and quench engine.
struct Prepared {
    sectors: Vec<Sector>,
    engine: QuenchEngine,
    state: SectorState,
}

fn prepare(cfg: &ExperimentConfig, over: Option<(SweepParameter, f64)>) -> Result<Prepared> {
    let model = cfg.require_model()?.build(over)?;
    let sectors = enumerate_sectors(&model)?;
    let state = cfg.require_state()?.build(&model, &sectors, &mut state_rng(cfg.seed))?;
    // Quenches conserve the sector labels, so only occupied sectors matter.
    let labels = state.labels();
    let sectors: Vec<Sector> = sectors.into_iter().filter(|s| labels.contains(&s.label())).collect();
    let engine = QuenchEngine::new(model, sectors.clone())?;
    Ok(Prepared { sectors, engine, state })
}

struct ConvergeJob {
    context: usize,
    schedule: Result<QuenchSchedule>,
    order: u32,
    unitaries: usize,
    shots: Shots,
    group: usize,
}

/// Design convergence: estimation error with quench unitaries over a grid of
/// schedule and model parameters.
pub fn run_converge(cfg: &ExperimentConfig) -> Result<SweepResult> {
    cfg.validate()?;
    let model_cfg = cfg.require_model()?;
    let schedule_cfg = cfg.require_schedule()?;
    cfg.require_state()?;
    let sweep: Vec<Option<(SweepParameter, f64)>> = match &cfg.sweep {
        Some(s) => s.values.iter().map(|&v| Some((s.parameter, v))).collect(),
        None => vec![None],
    };
    let contexts: Vec<Result<Prepared>> =
        sweep.par_iter().map(|&over| prepare(cfg, over.filter(|(p, _)| *p != SweepParameter::Time))).collect();
    let kind = format!("{:?}", model_cfg.kind.expect("validated")).to_lowercase();
    let mode = format!("{:?}", schedule_cfg.mode).to_lowercase();
    let fixed_total = cfg.sweep.as_ref().is_some_and(|s| s.fixed_total_time);
    let mut points = Vec::new();
    for (c, over) in sweep.iter().enumerate() {
        for q in schedule_cfg.quenches.to_vec() {
            let (quenches, time) = match over {
                Some((SweepParameter::Time, t)) if fixed_total => {
                    (((q as f64 * schedule_cfg.time) / t).round().max(1.0) as usize, *t)
                }
                Some((SweepParameter::Time, t)) => (q, *t),
                _ => (q, schedule_cfg.time),
            };
            for order in cfg.orders() {
                for unitaries in cfg.unitaries() {
                    for shots in cfg.shots()? {
                        for group in cfg.group_sizes() {
                            let (param, value) = match over {
                                Some((p, v)) => (format!("{p:?}").to_lowercase(), num(*v)),
                                None => (String::new(), String::new()),
                            };
                            points.push(Point {
                                key: vec![
                                    kind.clone(),
                                    param,
                                    value,
                                    quenches.to_string(),
                                    num(time),
                                    mode.clone(),
                                    order.to_string(),
                                    unitaries.to_string(),
                                    shots_label(shots),
                                    group.to_string(),
                                    cfg.measurement.repetitions.to_string(),
                                ],
                                job: ConvergeJob {
                                    context: c,
                                    schedule: schedule_cfg.build(quenches, time),
                                    order,
                                    unitaries,
                                    shots,
                                    group,
                                },
                            });
                        }
                    }
                }
            }
        }
    }
    let keys = [
        "model",
        "sweep_parameter",
        "sweep_value",
        "quenches",
        "time",
        "mode",
        "order",
        "unitaries",
        "shots",
        "group_size",
        "repetitions",
    ];
    Ok(evaluate(cfg, &keys, &ESTIMATE_COLUMNS, points, |i, job| {
        let ctx = contexts[job.context].as_ref().map_err(|e| Error::Config(e.to_string()))?;
        let schedule = job.schedule.as_ref().map_err(|e| Error::Config(e.to_string()))?;
        let protocol = Protocol {
            source: UnitarySource::Quench { engine: ctx.engine.clone(), schedule: *schedule },
            sectors: ctx.sectors.clone(),
            state: ctx.state.clone(),
            observable: observable(&ctx.sectors, job.group)?,
            order: job.order,
            unitaries: job.unitaries,
            shots: job.shots,
            imperfections: Imperfections::default(),
        };
        let exact = trace_power(&ctx.state, job.order)?;
        let reports = repeat(&protocol, cfg.seed, i, cfg.measurement.repetitions)?;
        Ok(estimate_metrics(&reports, job.order, exact))
    }))
}

struct ErrorsJob {
    rank: usize,
    order: u32,
    unitaries: usize,
    shots: Shots,
    group: usize,
}

/// Statistical errors with Haar-random unitaries on a single block.
pub fn run_errors(cfg: &ExperimentConfig) -> Result<SweepResult> {
    cfg.validate()?;
    let cue = cfg.cue.as_ref().ok_or_else(|| Error::Config("missing [cue] section".into()))?;
    let dim = cue.dim;
    let mut points = Vec::new();
    for rank in cue.ranks.to_vec() {
        for order in cfg.orders() {
            for unitaries in cfg.unitaries() {
                for shots in cfg.shots()? {
                    for group in cfg.group_sizes() {
                        points.push(Point {
                            key: vec![
                                dim.to_string(),
                                rank.to_string(),
                                order.to_string(),
                                unitaries.to_string(),
                                shots_label(shots),
                                group.to_string(),
                                dim.div_ceil(group).to_string(),
                                cfg.measurement.repetitions.to_string(),
                            ],
                            job: ErrorsJob { rank, order, unitaries, shots, group },
                        });
                    }
                }
            }
        }
    }
    let keys = ["dim", "rank", "order", "unitaries", "shots", "group_size", "outcomes", "repetitions"];
    Ok(evaluate(cfg, &keys, &ESTIMATE_COLUMNS, points, |i, job| {
        let label = SectorLabel::Full;
        let pops: Vec<f64> = (0..dim).map(|k| if k < job.rank { 1.0 / job.rank as f64 } else { 0.0 }).collect();
        let protocol = Protocol {
            source: UnitarySource::Cue(vec![(label, dim)]),
            sectors: Vec::new(),
            state: SectorState::diagonal(label, &pops)?,
            observable: Observable::grouped(&[(label, dim)], job.group)?,
            order: job.order,
            unitaries: job.unitaries,
            shots: job.shots,
            imperfections: Imperfections::default(),
        };
        let exact = (job.rank as f64).powi(1 - job.order as i32);
        let reports = repeat(&protocol, cfg.seed, i, cfg.measurement.repetitions)?;
        Ok(estimate_metrics(&reports, job.order, exact))
    }))
}

/// Reference relative purity loss of an imperfection.
pub fn reference_loss(channel: Option<ChannelSpec>, readout: Option<FidelitySpec>, sites: usize) -> f64 {
    let l = sites as f64;
    let from_channel = match channel {
        Some(c) if c.kind() == ChannelKind::Dephasing => 2.0 * c.p() * l,
        Some(c) => 6.0 * c.p() * l,
        None => 0.0,
    };
    let from_readout = readout.map_or(0.0, |f| 1.0 - (1.0 - f.p()).powi(2 * sites as i32));
    from_channel + from_readout
}

struct ImperfectJob {
    sites: usize,
    channel: Option<ChannelSpec>,
    readout: Option<FidelitySpec>,
    jitter: f64,
    unitaries: usize,
    shots: Shots,
}

fn imperfect_model(cfg: &ExperimentConfig, sites: usize) -> Result<QuenchModel> {
    match &cfg.model {
        Some(m) if m.kind == Some(ModelKind::Ising) => m.build(Some((SweepParameter::Sites, sites as f64))),
        Some(_) => Err(Error::Config("imperfection runs need an ising model".into())),
        None => QuenchModel::ising(Lattice::chain(sites)?, IsingParams::default()),
    }
}

/// Purity estimation under decoherence, disorder jitter and misreads. The
/// ideal and imperfect estimates share their unitaries, so their difference
/// isolates the imperfection.
pub fn run_imperfect(cfg: &ExperimentConfig) -> Result<SweepResult> {
    cfg.validate()?;
    let im = cfg.imperfect.as_ref().ok_or_else(|| Error::Config("missing [imperfect] section".into()))?;
    if cfg.orders().iter().any(|&n| n != 2) {
        return Err(Error::Config("imperfection runs estimate the purity; measurement.order must be 2".into()));
    }
    let mut points = Vec::new();
    for sites in im.sites.to_vec() {
        for cp in im.channel_p.to_vec() {
            for rp in im.readout_p.to_vec() {
                for jitter in im.jitter.to_vec() {
                    for unitaries in cfg.unitaries() {
                        for shots in cfg.shots()? {
                            let channel = im.channel.kind().map(|k| ChannelSpec::new(k, cp)).transpose()?;
                            let readout = if rp > 0.0 { Some(FidelitySpec::new(rp)?) } else { None };
                            points.push(Point {
                                key: vec![
                                    sites.to_string(),
                                    format!("{:?}", im.channel).to_lowercase(),
                                    num(cp),
                                    num(rp),
                                    num(jitter),
                                    if jitter > 0.0 {
                                        (im.quenches_per_site * sites).to_string()
                                    } else {
                                        String::new()
                                    },
                                    unitaries.to_string(),
                                    shots_label(shots),
                                    cfg.measurement.repetitions.to_string(),
                                ],
                                job: ImperfectJob { sites, channel, readout, jitter, unitaries, shots },
                            });
                        }
                    }
                }
            }
        }
    }
    let keys =
        ["sites", "channel", "channel_p", "readout_p", "jitter", "quenches", "unitaries", "shots", "repetitions"];
    let metrics = [
        "exact",
        "ideal_mean",
        "estimate_mean",
        "corrected_mean",
        "mean_abs_error",
        "corrected_mean_abs_error",
        "relative_loss",
        "reference_relative_loss",
        "predicted_error",
    ];
    Ok(evaluate(cfg, &keys, &metrics, points, |i, job| {
        let model = imperfect_model(cfg, job.sites)?;
        let sectors = enumerate_sectors(&model)?;
        let state = match &cfg.state {
            Some(s) => s.build(&model, &sectors, &mut state_rng(cfg.seed))?,
            None => states::ghz(&sectors, job.sites)?,
        };
        let source = if job.jitter > 0.0 {
            let schedule = match &cfg.schedule {
                Some(s) => s.build(im.quenches_per_site * job.sites, s.time)?,
                None => QuenchSchedule::new(
                    im.quenches_per_site * job.sites,
                    1.0,
                    crate::unitaries::QuenchMode::FreshPattern,
                )?,
            };
            UnitarySource::Quench { engine: QuenchEngine::new(model, sectors.clone())?, schedule }
        } else {
            UnitarySource::cue_for(&sectors)
        };
        let mut protocol = Protocol {
            source,
            observable: Observable::fine(&sectors),
            sectors,
            state,
            order: 2,
            unitaries: job.unitaries,
            shots: job.shots,
            imperfections: Imperfections::default(),
        };
        let exact = trace_power(&protocol.state, 2)?;
        let ideal = repeat(&protocol, cfg.seed, i, cfg.measurement.repetitions)?;
        protocol.imperfections =
            Imperfections { channel: job.channel, jitter: Some(job.jitter).filter(|&p| p > 0.0), readout: job.readout };
        let noisy = repeat(&protocol, cfg.seed, i, cfg.measurement.repetitions)?;
        let p_read = job.readout.map_or(0.0, |f| f.p());
        let raw: Vec<f64> = noisy.iter().map(|r| r.p(2)).collect();
        let corrected: Vec<f64> = raw.iter().map(|&p| fidelity_correct(p, p_read, job.sites)).collect::<Result<_>>()?;
        let ideal_mean = ideal.iter().map(|r| r.p(2)).sum::<f64>() / ideal.len() as f64;
        let s_raw = ErrorStats::new(&raw, exact);
        let s_cor = ErrorStats::new(&corrected, exact);
        let loss = ideal.iter().zip(&raw).map(|(a, b)| (a.p(2) - b) / exact).sum::<f64>() / raw.len() as f64;
        Ok(vec![
            num(exact),
            num(ideal_mean),
            num(s_raw.mean),
            num(s_cor.mean),
            num(s_raw.mean_abs_error),
            num(s_cor.mean_abs_error),
            num(loss),
            num(reference_loss(job.channel, job.readout, job.sites)),
            num(prediction(&noisy[0], 2, exact)),
        ])
    }))
}

enum ChaosJob {
    Quench { disorder: f64, quenches: usize, histogram: bool },
    Cue { histogram: bool },
    Poisson { histogram: bool },
}

const CHAOS_KEYS: [&str; 4] = ["row_kind", "disorder", "quenches", "unitaries"];
const CHAOS_METRICS: [&str; 11] = [
    "purity_estimate",
    "purity_exact",
    "purity_error",
    "mean_ipr",
    "ipr_reference",
    "mean_r",
    "r_count",
    "floored_spectra",
    "degenerate_spectra",
    "r_bin_center",
    "r_density",
];

/// Certification diagnostics (purity error, IPR, gap ratios) over a grid of
/// disorder strengths and quench numbers, with Haar and uniform-phase
/// baselines and r histograms.
pub fn run_chaos(cfg: &ExperimentConfig) -> Result<SweepResult> {
    cfg.validate()?;
    let ch = cfg.chaos.as_ref().ok_or_else(|| Error::Config("missing [chaos] section".into()))?;
    let schedule_cfg = cfg.require_schedule()?;
    cfg.require_model()?;
    cfg.require_state()?;
    if cfg.orders() != [2] {
        return Err(Error::Config("chaos runs estimate the purity; measurement.order must be 2".into()));
    }
    let n_u = cfg.unitaries()[0];
    let mut jobs = Vec::new();
    for d in ch.disorder.to_vec() {
        for q in schedule_cfg.quenches.to_vec() {
            jobs.push(ChaosJob::Quench { disorder: d, quenches: q, histogram: false });
        }
    }
    jobs.push(ChaosJob::Cue { histogram: false });
    jobs.push(ChaosJob::Poisson { histogram: false });
    if !ch.histogram_quenches.is_empty() {
        let d = ch
            .histogram_disorder
            .ok_or_else(|| Error::Config("chaos.histogram_disorder is required with histogram_quenches".into()))?;
        for &q in &ch.histogram_quenches {
            jobs.push(ChaosJob::Quench { disorder: d, quenches: q, histogram: true });
        }
        jobs.push(ChaosJob::Cue { histogram: true });
        jobs.push(ChaosJob::Poisson { histogram: true });
    }
    let base = prepare(cfg, None)?;
    let dims: Vec<(SectorLabel, usize)> = base.sectors.iter().map(|s| (s.label(), s.dim())).collect();
    let points: Vec<Point<ChaosJob>> = jobs
        .into_iter()
        .map(|job| {
            let key = match &job {
                ChaosJob::Quench { disorder, quenches, histogram } => vec![
                    if *histogram { "quench-histogram" } else { "quench" }.to_string(),
                    num(*disorder),
                    quenches.to_string(),
                    n_u.to_string(),
                ],
                ChaosJob::Cue { histogram } => {
                    vec![
                        if *histogram { "cue-histogram" } else { "cue" }.into(),
                        String::new(),
                        String::new(),
                        n_u.to_string(),
                    ]
                }
                ChaosJob::Poisson { histogram } => vec![
                    if *histogram { "poisson-histogram" } else { "poisson" }.into(),
                    String::new(),
                    String::new(),
                    n_u.to_string(),
                ],
            };
            Point { key, job }
        })
        .collect();
    let result = evaluate(cfg, &CHAOS_KEYS, &CHAOS_METRICS, points, |i, job| {
        let sample = |f: &(dyn Fn(u64) -> Result<BlockUnitary> + Sync)| -> Result<Vec<BlockUnitary>> {
            (0..n_u).into_par_iter().map(|l| f(l as u64)).collect()
        };
        let (summary, histogram): (EnsembleSummary, &bool) = match job {
            ChaosJob::Quench { disorder, quenches, histogram } => {
                let ctx = prepare(cfg, Some((SweepParameter::Disorder, *disorder)))?;
                let schedule = schedule_cfg.build(*quenches, schedule_cfg.time)?;
                let ensemble = sample(&|l| ctx.engine.sample(&schedule, &mut derive(cfg.seed, &[i, l])))?;
                (ensemble_diagnostics(&ensemble, &ctx.state, &Observable::fine(&ctx.sectors))?, histogram)
            }
            ChaosJob::Cue { histogram } => {
                let ensemble = sample(&|l| Ok(BlockUnitary::cue(&dims, &mut derive(cfg.seed, &[i, l]))))?;
                (ensemble_diagnostics(&ensemble, &base.state, &Observable::fine(&base.sectors))?, histogram)
            }
            ChaosJob::Poisson { histogram } => {
                let mut hist = RHistogram::default();
                let (mut sum, mut count, mut floored) = (0.0, 0usize, 0usize);
                for l in 0..n_u as u64 {
                    let mut rng = derive(cfg.seed, &[i, l]);
                    for &(_, d) in dims.iter().filter(|(_, d)| *d >= 3) {
                        let g = phase_gap_ratios(&PhaseSpectrum::poisson(d, &mut rng))?;
                        floored += g.floored as usize;
                        sum += g.ratios.iter().sum::<f64>();
                        count += g.ratios.len();
                        g.ratios.iter().for_each(|&r| hist.add(r));
                    }
                }
                if count == 0 {
                    return Err(Error::InvalidParameter("no block of dimension >= 3 for gap ratios".into()));
                }
                if *histogram {
                    return Ok(histogram_metrics(&hist));
                }
                let mut v = vec![String::new(); CHAOS_METRICS.len()];
                v[5] = num(sum / count as f64);
                v[6] = count.to_string();
                v[7] = floored.to_string();
                return Ok(v);
            }
        };
        if *histogram {
            return Ok(histogram_metrics(&summary.histogram));
        }
        Ok(vec![
            num(summary.purity_estimate),
            num(summary.purity_exact),
            num(summary.purity_error()),
            num(summary.mean_ipr),
            num(summary.ipr_reference),
            num(summary.mean_r),
            summary.r_count.to_string(),
            summary.floored_spectra.to_string(),
            summary.degenerate_spectra.to_string(),
            String::new(),
            String::new(),
        ])
    });
    Ok(expand_histograms(result))
}

/// Bin densities packed into `r_density`; expanded to one row per bin later.
fn histogram_metrics(h: &RHistogram) -> Vec<String> {
    let mut v = vec![String::new(); CHAOS_METRICS.len()];
    v[6] = h.total().to_string();
    v[10] = h.density().iter().map(|x| num(*x)).collect::<Vec<_>>().join(" ");
    v
}

/// Replace each histogram row, whose densities are packed in `r_density`, by
/// one row per bin.
fn expand_histograms(mut result: SweepResult) -> SweepResult {
    let kind = result.column("row_kind").expect("chaos table");
    let center = result.column("r_bin_center").expect("chaos table");
    let density = result.column("r_density").expect("chaos table");
    let status = result.column("status").expect("trailer");
    let mut rows = Vec::with_capacity(result.rows.len());
    for row in result.rows {
        if !row[kind].ends_with("histogram") || row[status] != "ok" {
            rows.push(row);
            continue;
        }
        for (k, d) in row[density].split(' ').enumerate().take(R_BINS) {
            let mut r = row.clone();
            r[center] = num(RHistogram::bin_center(k));
            r[density] = d.to_string();
            rows.push(r);
        }
    }
    result.rows = rows;
    result
}

#[derive(Debug, Parser)]
#[command(name = "quenchdesign", version, about = "Random-quench unitary designs and Rényi entropy estimation")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Estimation error with quench unitaries over a parameter grid.
    Converge(RunArgs),
    /// Statistical errors with Haar-random unitaries.
    Errors(RunArgs),
    /// Decoherence, disorder jitter and readout errors.
    Imperfect(RunArgs),
    /// Purity error, IPR and gap-ratio diagnostics.
    Chaos(RunArgs),
    /// Parse and check a config without running it.
    ValidateConfig(ConfigArg),
}

#[derive(Debug, Args)]
pub struct ConfigArg {
    #[arg(long, value_name = "PATH")]
    pub config: PathBuf,
}

#[derive(Debug, Args)]
pub struct RunArgs {
    #[arg(long, value_name = "PATH")]
    pub config: PathBuf,
    /// Master seed, overriding the config.
    #[arg(long, value_name = "U64")]
    pub seed: Option<u64>,
    /// Worker threads; defaults to the number of cores.
    #[arg(long, value_name = "N")]
    pub threads: Option<usize>,
    /// Output CSV; defaults to the config's `output`, then stdout.
    #[arg(long, value_name = "PATH")]
    pub out: Option<PathBuf>,
}

pub fn load(path: &std::path::Path, seed: Option<u64>) -> Result<ExperimentConfig> {
    let mut cfg = ExperimentConfig::from_path(path)?;
    if let Some(s) = seed {
        cfg.seed = s;
    }
    Ok(cfg)
}

/// Run a parsed command line. Returns a message for stderr.
pub fn execute(cli: Cli) -> Result<String> {
    let (args, run): (RunArgs, fn(&ExperimentConfig) -> Result<SweepResult>) = match cli.command {
        Command::ValidateConfig(a) => {
            let cfg = load(&a.config, None)?;
            return Ok(format!("{}: ok (config_hash={})", a.config.display(), cfg.hash()));
        }
        Command::Converge(a) => (a, run_converge),
        Command::Errors(a) => (a, run_errors),
        Command::Imperfect(a) => (a, run_imperfect),
        Command::Chaos(a) => (a, run_chaos),
    };
    let cfg = load(&args.config, args.seed)?;
    let result = match args.threads {
        Some(n) => rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build()
            .map_err(|e| Error::Config(format!("thread pool: {e}")))?
            .install(|| run(&cfg))?,
        None => run(&cfg)?,
    };
    let failed = result.values("status").unwrap_or_default().iter().filter(|s| **s != "ok").count();
    let target = args.out.or_else(|| cfg.output.clone().map(PathBuf::from));
    match &target {
        Some(p) => result.write(std::io::BufWriter::new(std::fs::File::create(p)?))?,
        None => result.write(std::io::stdout().lock())?,
    }
    let place = target.map_or("stdout".to_string(), |p| p.display().to_string());
    Ok(format!("{} rows written to {place}; {failed} failed", result.rows.len()))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cfg(text: &str) -> ExperimentConfig {
        ExperimentConfig::from_toml(text).unwrap()
    }

    const CONVERGE: &str = r#"
seed = 3
[model]
kind = "ising"
sites = 3
[schedule]
quenches = [1, 4]
[state]
kind = "antiferromagnetic"
[measurement]
unitaries = 20
shots = [50, "inf"]
repetitions = 2
"#;

    #[test]
    fn converge_table_shape() {
        let r = run_converge(&cfg(CONVERGE)).unwrap();
        assert_eq!(r.rows.len(), 4);
        assert!(r.values("status").unwrap().iter().all(|s| *s == "ok"));
        assert_eq!(r.values("exact").unwrap()[0], "1");
        assert_eq!(r.columns.last().unwrap(), "wall_time_s");
    }

    #[test]
    fn failures_stay_in_their_row() {
        let text = CONVERGE.replace("shots = [50, \"inf\"]", "shots = [1, \"inf\"]");
        let r = run_converge(&cfg(&text)).unwrap();
        let status = r.values("status").unwrap();
        assert!(status[0].starts_with("error"));
        assert_eq!(status[1], "ok");
    }

    #[test]
    fn errors_with_exact_oracle() {
        let text = "seed = 1\n[cue]\ndim = 8\nranks = [1, 8]\n[measurement]\nunitaries = 50\n";
        let r = run_errors(&cfg(text)).unwrap();
        let exact = r.values("exact").unwrap();
        assert_eq!(exact, vec!["1", "0.125"]);
        let err: f64 = r.values("mean_abs_error").unwrap()[1].parse().unwrap();
        assert!(err < 1e-10);
    }

    #[test]
    fn imperfect_reports_readout_correction() {
        let text = "seed = 1\n[imperfect]\nsites = 2\nreadout_p = 0.05\n[measurement]\nunitaries = 30\n";
        let r = run_imperfect(&cfg(text)).unwrap();
        let get = |c: &str| -> f64 { r.values(c).unwrap()[0].parse().unwrap() };
        assert!(get("corrected_mean") > get("estimate_mean"));
        assert!((get("reference_relative_loss") - (1.0 - 0.95f64.powi(4))).abs() < 1e-12);
    }

    #[test]
    fn chaos_emits_baselines_and_histograms() {
        let text = r#"
seed = 2
[model]
kind = "ising"
sites = 3
[schedule]
quenches = [1]
[state]
kind = "antiferromagnetic"
[measurement]
unitaries = 5
[chaos]
disorder = [1.0]
histogram_quenches = [1]
histogram_disorder = 4.0
"#;
        let r = run_chaos(&cfg(text)).unwrap();
        let kinds = r.values("row_kind").unwrap();
        assert_eq!(&kinds[..3], &["quench", "cue", "poisson"]);
        assert_eq!(kinds.iter().filter(|k| **k == "cue-histogram").count(), R_BINS);
        assert!(r.values("status").unwrap().iter().all(|s| *s == "ok"));
    }

    #[test]
    fn error_stats() {
        let s = ErrorStats::new(&[1.0, 2.0, 4.0], 2.0);
        assert_eq!(s.mean_abs_error, 1.0);
        assert_eq!(s.median_abs_error, 1.0);
        assert!((s.rms_error - (5.0f64 / 3.0).sqrt()).abs() < 1e-15);
    }
}
