//! Builds problems from configs, executes repetitions and writes outputs.

use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::Path;
use std::time::{Duration, Instant};

use elm_core::diagnostics::MetricsRecord;
use elm_core::lagrangian::{run_eclm, run_elm, RunOutcome, SolverConfig};
use elm_core::problems::{
    make_affine_l1, make_exactness_1d, make_slack_l1_net_with, make_stochastic_affine, SlackL1Net,
};
use rayon::prelude::*;
use serde::Serialize;

use crate::config::{ProblemSpec, RunConfig};
use crate::error::CliError;

/// Result of one solver run.
#[derive(Debug, Clone)]
pub struct RepetitionResult {
    pub rep: usize,
    pub seed: u64,
    pub trajectory: Vec<MetricsRecord>,
    pub iterations: usize,
    pub aborted: Option<String>,
    pub max_contraction_excess: Option<f64>,
    /// Held-out accuracy of the final iterate (network problems only).
    pub test_accuracy: Option<f64>,
    pub wall_time: Duration,
}

impl RepetitionResult {
    pub fn initial(&self) -> &MetricsRecord {
        &self.trajectory[0]
    }

    pub fn last(&self) -> &MetricsRecord {
        self.trajectory.last().expect("trajectory holds the initial record")
    }

    /// Final feasibility at most half of the initial feasibility.
    pub fn admissible(&self) -> bool {
        self.aborted.is_none() && self.last().feas <= 0.5 * self.initial().feas
    }
}

fn setup_error(e: elm_core::Error) -> CliError {
    CliError::Config(e.to_string())
}

fn finish(
    rep: usize,
    seed: u64,
    outcome: RunOutcome<f64>,
    start: Instant,
    net: Option<&SlackL1Net<f64>>,
) -> RepetitionResult {
    RepetitionResult {
        rep,
        seed,
        iterations: outcome.final_state.k,
        aborted: outcome.aborted.as_ref().map(ToString::to_string),
        max_contraction_excess: outcome.max_contraction_excess,
        test_accuracy: net.map(|p| p.test_accuracy(outcome.final_state.x())),
        trajectory: outcome.trajectory,
        wall_time: start.elapsed(),
    }
}

/// Runs repetition `rep` of `cfg`.
pub fn run_repetition(cfg: &RunConfig, rep: usize) -> Result<RepetitionResult, CliError> {
    let seed = cfg.repetition_seed(rep);
    let start = Instant::now();
    let solver = |steps: Option<usize>| -> Result<SolverConfig<f64>, CliError> { cfg.solver_config(seed, steps) };
    match &cfg.problem {
        ProblemSpec::AffineL1 { n, p, seed: pseed } => {
            let r = make_affine_l1::<f64>(*n, *p, *pseed).map_err(setup_error)?;
            let out = run_elm(&r.problem, solver(None)?, r.initial_point).map_err(setup_error)?;
            Ok(finish(rep, seed, out, start, None))
        }
        spec @ ProblemSpec::SlackL1Net { .. } => {
            let opts = spec.net_options().expect("network spec");
            let r = make_slack_l1_net_with::<f64>(&opts).map_err(setup_error)?;
            let sc = solver(Some(r.problem.steps_per_epoch()))?;
            let out = run_elm(&r.problem, sc, r.initial_point.clone()).map_err(setup_error)?;
            Ok(finish(rep, seed, out, start, Some(&r.problem)))
        }
        ProblemSpec::StochasticAffine {
            n,
            p,
            noise_scale,
            seed: pseed,
        } => {
            let r = make_stochastic_affine::<f64>(*n, *p, *noise_scale, *pseed).map_err(setup_error)?;
            let out = run_eclm(&r.problem, solver(None)?, r.initial_point).map_err(setup_error)?;
            Ok(finish(rep, seed, out, start, None))
        }
        ProblemSpec::Exactness1d { slope } => {
            let r = make_exactness_1d::<f64>(*slope).map_err(setup_error)?;
            let out = run_elm(&r.problem, solver(None)?, r.initial_point).map_err(setup_error)?;
            Ok(finish(rep, seed, out, start, None))
        }
    }
}

/// One JSON object per line, keys as in [`MetricsRecord`].
pub fn write_metrics(path: &Path, trajectory: &[MetricsRecord]) -> Result<(), CliError> {
    let mut w = BufWriter::new(File::create(path)?);
    for rec in trajectory {
        serde_json::to_writer(&mut w, rec).map_err(std::io::Error::from)?;
        w.write_all(b"\n")?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_metrics(path: &Path) -> Result<Vec<MetricsRecord>, CliError> {
    let text = fs::read_to_string(path)?;
    text.lines()
        .map(|l| serde_json::from_str(l).map_err(|e| CliError::Io(e.into())))
        .collect()
}

#[derive(Debug, Clone, Serialize)]
pub struct SummaryRow {
    pub rep: usize,
    pub seed: u64,
    pub status: &'static str,
    pub iterations: usize,
    pub initial_f: f64,
    pub final_f: f64,
    pub initial_feas: f64,
    pub final_feas: f64,
    pub final_kkt_residual: f64,
    pub admissible: bool,
    pub test_accuracy: Option<f64>,
}

impl From<&RepetitionResult> for SummaryRow {
    fn from(r: &RepetitionResult) -> Self {
        Self {
            rep: r.rep,
            seed: r.seed,
            status: if r.aborted.is_some() { "aborted" } else { "ok" },
            iterations: r.iterations,
            initial_f: r.initial().f_val,
            final_f: r.last().f_val,
            initial_feas: r.initial().feas,
            final_feas: r.last().feas,
            final_kkt_residual: r.last().kkt_residual,
            admissible: r.admissible(),
            test_accuracy: r.test_accuracy,
        }
    }
}

#[derive(Debug, Clone, Serialize)]
struct TimingRow {
    rep: usize,
    seed: u64,
    wall_time_s: f64,
}

fn aborted_error(results: &[&RepetitionResult]) -> Result<(), CliError> {
    let failed: Vec<String> = results
        .iter()
        .filter_map(|r| {
            r.aborted
                .as_ref()
                .map(|e| format!("repetition {} (seed {}): {e}", r.rep, r.seed))
        })
        .collect();
    if failed.is_empty() {
        Ok(())
    } else {
        Err(CliError::Aborted(failed.join("; ")))
    }
}

/// Runs every repetition in parallel, writes `metrics_rep{r}.jsonl`,
/// `summary.csv` and `timing.csv` into `out`. Wall times live in their own
/// file so that the other outputs are reproducible byte for byte.
pub fn cmd_run(cfg: &RunConfig, out: &Path, quiet: bool) -> Result<Vec<RepetitionResult>, CliError> {
    fs::create_dir_all(out)?;
    let results: Vec<RepetitionResult> = (0..cfg.run.repetitions)
        .into_par_iter()
        .map(|rep| {
            let r = run_repetition(cfg, rep)?;
            write_metrics(&out.join(format!("metrics_rep{rep}.jsonl")), &r.trajectory)?;
            Ok(r)
        })
        .collect::<Result<_, CliError>>()?;

    let mut summary = csv::Writer::from_path(out.join("summary.csv"))?;
    let mut timing = csv::Writer::from_path(out.join("timing.csv"))?;
    for r in &results {
        summary.serialize(SummaryRow::from(r))?;
        timing.serialize(TimingRow {
            rep: r.rep,
            seed: r.seed,
            wall_time_s: r.wall_time.as_secs_f64(),
        })?;
        if !quiet {
            let last = r.last();
            println!(
                "rep {:>3} seed {:>6} {:>7} k={:<8} f={:<12.6e} feas={:<12.6e} kkt={:.6e}",
                r.rep,
                r.seed,
                if r.aborted.is_some() { "ABORTED" } else { "ok" },
                r.iterations,
                last.f_val,
                last.feas,
                last.kkt_residual
            );
        }
    }
    summary.flush()?;
    timing.flush()?;
    aborted_error(&results.iter().collect::<Vec<_>>())?;
    Ok(results)
}

/// Runs repetition 0 of each labeled config and writes per-config metrics
/// plus `compare.csv`: one row per recorded step `k`, and for each config the
/// columns `<label>.f_val`, `<label>.feas`, `<label>.kkt_residual`.
pub fn cmd_compare(
    configs: &[(String, RunConfig)],
    out: &Path,
    quiet: bool,
) -> Result<Vec<RepetitionResult>, CliError> {
    let Some((_, first)) = configs.first() else {
        return Err(CliError::Config("compare needs at least one config".into()));
    };
    if let Some((label, _)) = configs.iter().find(|(_, c)| c.problem != first.problem) {
        return Err(CliError::Config(format!(
            "config `{label}` uses a different problem; compare needs a common problem"
        )));
    }
    let mut labels: Vec<&str> = configs.iter().map(|(l, _)| l.as_str()).collect();
    labels.sort_unstable();
    labels.dedup();
    if labels.len() != configs.len() {
        return Err(CliError::Config("compare labels must be distinct".into()));
    }
    fs::create_dir_all(out)?;
    let results: Vec<RepetitionResult> = configs
        .par_iter()
        .map(|(label, cfg)| {
            let r = run_repetition(cfg, 0)?;
            write_metrics(&out.join(format!("metrics_{label}.jsonl")), &r.trajectory)?;
            Ok(r)
        })
        .collect::<Result<_, CliError>>()?;

    let mut ks: Vec<usize> = results.iter().flat_map(|r| r.trajectory.iter().map(|m| m.k)).collect();
    ks.sort_unstable();
    ks.dedup();
    let mut w = csv::Writer::from_path(out.join("compare.csv"))?;
    let mut header = vec!["k".to_string()];
    for (label, _) in configs {
        for col in ["f_val", "feas", "kkt_residual"] {
            header.push(format!("{label}.{col}"));
        }
    }
    w.write_record(&header)?;
    let mut cursors = vec![0usize; results.len()];
    for k in ks {
        let mut row = vec![k.to_string()];
        for (r, cur) in results.iter().zip(cursors.iter_mut()) {
            match r.trajectory.get(*cur) {
                Some(m) if m.k == k => {
                    row.extend([m.f_val, m.feas, m.kkt_residual].map(|v| v.to_string()));
                    *cur += 1;
                }
                _ => row.extend([String::new(), String::new(), String::new()]),
            }
        }
        w.write_record(&row)?;
    }
    w.flush()?;

    if !quiet {
        let width = configs.iter().map(|(l, _)| l.len()).max().unwrap_or(0).max(6);
        println!(
            "{:<width$}  {:>8}  {:>13}  {:>13}  {:>13}  {:>8}",
            "method", "k", "f", "feas", "kkt", "status"
        );
        for ((label, _), r) in configs.iter().zip(&results) {
            let last = r.last();
            println!(
                "{:<width$}  {:>8}  {:>13.6e}  {:>13.6e}  {:>13.6e}  {:>8}",
                label,
                r.iterations,
                last.f_val,
                last.feas,
                last.kkt_residual,
                if r.aborted.is_some() { "aborted" } else { "ok" }
            );
        }
    }
    aborted_error(&results.iter().collect::<Vec<_>>())?;
    Ok(results)
}

#[derive(Debug, Clone, Serialize)]
pub struct SweepRow {
    pub value: f64,
    pub seed: u64,
    pub status: &'static str,
    pub initial_feas: f64,
    pub final_f: f64,
    pub final_feas: f64,
    pub final_kkt_residual: f64,
    pub admissible: bool,
    /// Best final objective among admissible runs.
    pub selected: bool,
}

/// Runs repetition 0 once per value of the dotted parameter `param` and
/// writes `sweep.csv` plus `metrics_sweep{i}.jsonl`. Sweeping `run.seed`
/// gives independent repetitions.
pub fn cmd_sweep(
    cfg: &RunConfig,
    param: &str,
    values: &[f64],
    out: &Path,
    quiet: bool,
) -> Result<Vec<SweepRow>, CliError> {
    if values.is_empty() {
        return Err(CliError::Config("sweep needs at least one value".into()));
    }
    let configs: Vec<RunConfig> = values
        .iter()
        .map(|&v| cfg.with_parameter(param, v))
        .collect::<Result<_, _>>()?;
    fs::create_dir_all(out)?;
    let results: Vec<RepetitionResult> = configs
        .par_iter()
        .enumerate()
        .map(|(i, c)| {
            let r = run_repetition(c, 0)?;
            write_metrics(&out.join(format!("metrics_sweep{i}.jsonl")), &r.trajectory)?;
            Ok(r)
        })
        .collect::<Result<_, CliError>>()?;

    let selected = results
        .iter()
        .enumerate()
        .filter(|(_, r)| r.admissible())
        .min_by(|(_, a), (_, b)| a.last().f_val.total_cmp(&b.last().f_val))
        .map(|(i, _)| i);
    let rows: Vec<SweepRow> = results
        .iter()
        .zip(values)
        .enumerate()
        .map(|(i, (r, &value))| SweepRow {
            value,
            seed: r.seed,
            status: if r.aborted.is_some() { "aborted" } else { "ok" },
            initial_feas: r.initial().feas,
            final_f: r.last().f_val,
            final_feas: r.last().feas,
            final_kkt_residual: r.last().kkt_residual,
            admissible: r.admissible(),
            selected: selected == Some(i),
        })
        .collect();
    let mut w = csv::Writer::from_path(out.join("sweep.csv"))?;
    for row in &rows {
        w.serialize(row)?;
        if !quiet {
            println!(
                "{param}={:<12} f={:<12.6e} feas={:<12.6e} admissible={}{}",
                row.value,
                row.final_f,
                row.final_feas,
                row.admissible,
                if row.selected { "  <- selected" } else { "" }
            );
        }
    }
    w.flush()?;
    aborted_error(&results.iter().collect::<Vec<_>>())?;
    Ok(rows)
}
