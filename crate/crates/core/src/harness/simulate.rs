//! Monte Carlo trials of the global decoder and query-scaling studies.

use std::collections::BTreeMap;
use std::io::Write;
use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::seeds::stream;
use crate::decoder::{CodeSpec, LocalDecoder};
use crate::error::{argument, Result};
use crate::global::{sample_size_moments, ConsensusRule, GlobalDecoder, GlobalDecoderConfig, IndexResult};

#[derive(Clone, Debug)]
pub struct ExperimentConfig {
    pub code: CodeSpec,
    pub trials: u64,
    pub seed: u64,
    pub p_override: Option<f64>,
    pub kernel_cap: usize,
    pub query_budget: Option<usize>,
    pub rule: ConsensusRule,
    /// Scan all kernel assignments and count unanimous wrong verdicts.
    pub audit: bool,
    /// Record wall time per trial; off gives byte-identical output.
    pub timing: bool,
}

impl ExperimentConfig {
    pub fn new(code: CodeSpec, trials: u64, seed: u64) -> Self {
        ExperimentConfig {
            code,
            trials,
            seed,
            p_override: None,
            kernel_cap: 20,
            query_budget: None,
            rule: ConsensusRule::default(),
            audit: false,
            timing: true,
        }
    }

    pub fn decoder_config(&self) -> GlobalDecoderConfig {
        GlobalDecoderConfig {
            p_override: self.p_override,
            kernel_cap: self.kernel_cap,
            query_budget: self.query_budget,
            rule: self.rule,
            audit: self.audit,
            ..Default::default()
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrialRecord {
    pub trial: u64,
    pub success: bool,
    pub queries: usize,
    /// `index:code` for every index not decoded correctly, `;`-separated.
    pub failures: String,
    pub wrong_bits: usize,
    pub unanimous_wrong: u64,
    pub wall_time_ms: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SimulationSummary {
    pub code: String,
    pub n: usize,
    pub k: usize,
    pub locality: usize,
    pub p: f64,
    pub trials: u64,
    pub successes: u64,
    pub success_rate: f64,
    pub mean_queries: f64,
    pub max_queries: usize,
    /// Binomial mean and standard deviation of `|Q|`.
    pub expected_queries: f64,
    pub expected_queries_std: f64,
    pub wrong_bits: u64,
    pub unanimous_wrong: u64,
    pub failure_counts: BTreeMap<String, u64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Simulation {
    pub summary: SimulationSummary,
    pub records: Vec<TrialRecord>,
}

/// Runs `config.trials` independent trials, each on a fresh uniform message
/// encoded without corruption. Trial `t` draws from stream `("simulate", t)`.
pub fn simulate(config: &ExperimentConfig) -> Result<Simulation> {
    if config.trials == 0 {
        return Err(argument("at least one trial is needed"));
    }
    let (code, decoder) = config.code.build()?;
    let global = GlobalDecoder::prepare(&decoder, config.decoder_config())?;
    let records = (0..config.trials)
        .into_par_iter()
        .map(|trial| {
            let start = Instant::now();
            let mut rng = stream(config.seed, "simulate", trial);
            let message = code.random_message(&mut rng);
            let word = code.encode(&message)?;
            let outcome = global.run(&word, &mut rng)?;
            let failures = outcome
                .results
                .iter()
                .zip(&message)
                .enumerate()
                .filter(|(_, (r, &x))| **r != IndexResult::Decoded(x))
                .map(|(i, (r, &x))| format!("{i}:{}", r.code(x)))
                .collect::<Vec<_>>()
                .join(";");
            let wall_time_ms = if config.timing {
                (start.elapsed().as_secs_f64() * 1e6).round() / 1e3
            } else {
                0.0
            };
            Ok(TrialRecord {
                trial,
                success: outcome.success(&message),
                queries: outcome.queries,
                failures,
                wrong_bits: outcome.wrong_bits(&message),
                unanimous_wrong: outcome.unanimous_wrong(&message),
                wall_time_ms,
            })
        })
        .collect::<Result<Vec<_>>>()?;

    let mut failure_counts = BTreeMap::new();
    for r in &records {
        for part in r.failures.split(';').filter(|s| !s.is_empty()) {
            let code = part.split_once(':').map_or(part, |(_, c)| c);
            *failure_counts.entry(code.to_string()).or_insert(0) += 1;
        }
    }
    let successes = records.iter().filter(|r| r.success).count() as u64;
    let p = global.p();
    let (expected_queries, expected_queries_std) = sample_size_moments(decoder.length(), p);
    let summary = SimulationSummary {
        code: code.name(),
        n: decoder.length(),
        k: decoder.dimension(),
        locality: decoder.locality(),
        p,
        trials: config.trials,
        successes,
        success_rate: successes as f64 / config.trials as f64,
        mean_queries: records.iter().map(|r| r.queries as f64).sum::<f64>() / config.trials as f64,
        max_queries: records.iter().map(|r| r.queries).max().unwrap_or(0),
        expected_queries,
        expected_queries_std,
        wrong_bits: records.iter().map(|r| r.wrong_bits as u64).sum(),
        unanimous_wrong: records.iter().map(|r| r.unanimous_wrong).sum(),
        failure_counts,
    };
    Ok(Simulation { summary, records })
}

/// `trial,success,queries,failures,wall_time_ms`
pub fn write_trials_csv(records: &[TrialRecord], out: impl Write) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["trial", "success", "queries", "failures", "wall_time_ms"])?;
    for r in records {
        w.write_record([
            r.trial.to_string(),
            r.success.to_string(),
            r.queries.to_string(),
            r.failures.clone(),
            format!("{:.3}", r.wall_time_ms),
        ])?;
    }
    w.flush().map_err(csv::Error::from)?;
    Ok(())
}

/// Least-squares line through `(ln n, ln q)`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PowerFit {
    pub exponent: f64,
    pub intercept: f64,
    /// `ln q - (intercept + exponent·ln n)` per fitted point.
    pub residuals: Vec<f64>,
}

/// Fits `q ≈ e^intercept · n^exponent`; `None` with fewer than two distinct
/// `n` or a nonpositive coordinate.
pub fn fit_power_law(points: &[(f64, f64)]) -> Option<PowerFit> {
    if points.iter().any(|&(n, q)| n <= 0.0 || q <= 0.0) {
        return None;
    }
    let xy: Vec<(f64, f64)> = points.iter().map(|&(n, q)| (n.ln(), q.ln())).collect();
    let m = xy.len() as f64;
    let mx = xy.iter().map(|p| p.0).sum::<f64>() / m;
    let my = xy.iter().map(|p| p.1).sum::<f64>() / m;
    let sxx: f64 = xy.iter().map(|p| (p.0 - mx).powi(2)).sum();
    if xy.len() < 2 || sxx <= 0.0 {
        return None;
    }
    let sxy: f64 = xy.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let exponent = sxy / sxx;
    let intercept = my - exponent * mx;
    let residuals = xy.iter().map(|&(x, y)| y - (intercept + exponent * x)).collect();
    Some(PowerFit { exponent, intercept, residuals })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ScalingPoint {
    pub code: String,
    pub n: usize,
    pub trials: u64,
    pub p: f64,
    pub mean_queries: f64,
    pub max_queries: usize,
    pub success_rate: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SkippedPoint {
    pub code: String,
    pub reason: String,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ScalingReport {
    pub points: Vec<ScalingPoint>,
    pub fit: Option<PowerFit>,
    pub skipped: Vec<SkippedPoint>,
}

/// Simulates each code with the settings of `base` and fits the query count
/// against `n`. Codes that fail to build or run are skipped with the reason.
pub fn scaling_study(codes: &[CodeSpec], base: &ExperimentConfig) -> ScalingReport {
    let mut points = Vec::new();
    let mut skipped = Vec::new();
    for spec in codes {
        let config = ExperimentConfig { code: spec.clone(), ..base.clone() };
        match simulate(&config) {
            Ok(sim) => points.push(ScalingPoint {
                code: sim.summary.code.clone(),
                n: sim.summary.n,
                trials: sim.summary.trials,
                p: sim.summary.p,
                mean_queries: sim.summary.mean_queries,
                max_queries: sim.summary.max_queries,
                success_rate: sim.summary.success_rate,
            }),
            Err(e) => skipped.push(SkippedPoint { code: spec.to_string(), reason: e.to_string() }),
        }
    }
    let fit = fit_power_law(&points.iter().map(|p| (p.n as f64, p.mean_queries)).collect::<Vec<_>>());
    ScalingReport { points, fit, skipped }
}

/// One row per point plus the shared fitted exponent and each residual.
pub fn write_scaling_csv(report: &ScalingReport, out: impl Write) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["code", "n", "trials", "p", "mean_queries", "max_queries", "success_rate", "fitted_exponent", "residual"])?;
    for (i, p) in report.points.iter().enumerate() {
        let (exp, res) = match &report.fit {
            Some(f) => (format!("{:.6}", f.exponent), format!("{:.6}", f.residuals[i])),
            None => (String::new(), String::new()),
        };
        w.write_record([
            p.code.clone(),
            p.n.to_string(),
            p.trials.to_string(),
            format!("{:.6}", p.p),
            format!("{:.3}", p.mean_queries),
            p.max_queries.to_string(),
            format!("{:.4}", p.success_rate),
            exp,
            res,
        ])?;
    }
    w.flush().map_err(csv::Error::from)?;
    Ok(())
}
