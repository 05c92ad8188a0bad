use std::fs;
use std::io::{self, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use serde::Serialize;

use rldc::daisy::{build_daisy_sequence, default_scale, pick_heavy_level, pluck_simple_daisy, DaisyLevel, HeavyDaisy};
use rldc::decoder::{AdaptiveDecoder, CodeSpec, DecoderFile};
use rldc::global::ConsensusRule;
use rldc::harness::{
    scaling_study, simulate, stream, verify_claims, wrapup_sanity, write_scaling_csv, write_trials_csv, ClaimReport,
    ClaimSuiteConfig, ExperimentConfig,
};
use rldc::preprocess::{preprocess, CorpusEntry, PipelineConfig, ReductionReport, TargetReading};
use rldc::radical::{format_rational, parse_rational};
use rldc::set_system::{DaisyReport, SetIndex, WeightedSetSystem};
use rldc::{Error, Result};

#[derive(Parser)]
#[command(name = "rldc", version, about = "Daisy extraction and global decoding experiments for relaxed LDCs")]
struct Cli {
    /// Master seed; every random choice derives from it.
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,
    /// Worker threads (default: all cores).
    #[arg(long, global = true)]
    threads: Option<usize>,
    /// Output file (default: stdout).
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    #[arg(long, global = true, value_enum, default_value_t = Format::Json)]
    format: Format,
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Csv,
    Json,
}

#[derive(Clone, Copy, ValueEnum)]
enum Reading {
    Final,
    Input,
}

#[derive(Subcommand)]
enum Command {
    /// Run the daisy-sequence construction on a set-system JSON file.
    ExtractDaisy {
        /// `{"n": .., "sets": [[..], ..], "weights": ["a/b", ..]}`; weights default to uniform.
        #[arg(long)]
        input: PathBuf,
        /// Defaults to the largest set size.
        #[arg(long)]
        locality: Option<usize>,
        /// Threshold constant `c` as a rational; defaults to |T|/n.
        #[arg(long)]
        scale: Option<String>,
        /// Also pluck a simple daisy from the heavy level.
        #[arg(long)]
        pluck: bool,
    },
    /// Flatten, amplify and randomness-reduce a built-in decoder.
    Preprocess {
        #[arg(long)]
        code: CodeSpec,
        /// Target error; defaults to the locality-derived target.
        #[arg(long)]
        epsilon: Option<String>,
        #[arg(long, value_enum, default_value_t = Reading::Final)]
        reading: Reading,
        /// `t = factor · n` retained coin outcomes per index.
        #[arg(long, default_value_t = 4)]
        multiset_factor: usize,
        #[arg(long, default_value_t = 50)]
        corpus_size: usize,
        /// Tolerance as a multiple of epsilon.
        #[arg(long, default_value = "2")]
        tolerance_factor: String,
        #[arg(long, default_value_t = 3)]
        retries: u32,
    },
    /// Monte Carlo trials of the global decoder on valid codewords.
    Simulate {
        #[arg(long)]
        code: CodeSpec,
        #[arg(long, default_value_t = 200)]
        trials: u64,
        /// Largest kernel to enumerate.
        #[arg(long, default_value_t = 20)]
        kmax: usize,
        /// Sampling probability override.
        #[arg(long)]
        p: Option<f64>,
        #[arg(long)]
        budget: Option<usize>,
        /// Two-sided consensus instead of first unanimous assignment.
        #[arg(long)]
        strict: bool,
        /// Scan every kernel assignment and count wrong unanimous verdicts.
        #[arg(long)]
        audit: bool,
        /// Write zero wall times so output is byte-identical across runs.
        #[arg(long)]
        no_timing: bool,
    },
    /// Randomized claim suites; exits 1 on any violation.
    Verify {
        #[arg(long, default_value_t = 1000)]
        instances: u64,
        #[arg(long, default_value_t = 200)]
        pluck_instances: u64,
        #[arg(long, default_value_t = 100)]
        decoder_trials: u64,
        /// Universe sizes for the daisy suites.
        #[arg(long, value_delimiter = ',', default_value = "64,256,1024")]
        sizes: Vec<usize>,
        #[arg(long, value_delimiter = ',', default_value = "2,3,4")]
        localities: Vec<usize>,
        #[arg(long, default_value_t = 10)]
        wrapup_kmax: usize,
        /// Plant a corrupted daisy certificate (negative control).
        #[arg(long)]
        inject_fault: bool,
    },
    /// Query count against block length over a code family.
    Scaling {
        /// `hadamard` (m values), `identity` (k values) or `repetition` (k values, r=3).
        #[arg(long, default_value = "hadamard")]
        family: String,
        #[arg(long, value_delimiter = ',', default_value = "8,10,12")]
        params: Vec<usize>,
        #[arg(long, default_value_t = 100)]
        trials: u64,
        #[arg(long)]
        p: Option<f64>,
    },
    /// Exhaustive check that k-1 queries cannot decode k bits.
    Wrapup {
        #[arg(long, default_value_t = 10)]
        kmax: usize,
    },
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(2) } else { ExitCode::SUCCESS };
        }
    };
    if let Some(threads) = cli.threads {
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(threads).build_global() {
            eprintln!("error: {e}");
            return ExitCode::from(2);
        }
    }
    match run(&cli) {
        Ok(clean) => ExitCode::from(if clean { 0 } else { 1 }),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(if matches!(e, Error::Argument(_)) { 2 } else { 1 })
        }
    }
}

fn emit(cli: &Cli, write: impl FnOnce(&mut dyn Write) -> Result<()>) -> Result<()> {
    match &cli.out {
        Some(path) => {
            let mut file = fs::File::create(path).map_err(|source| Error::Io { path: path.clone(), source })?;
            write(&mut file)?;
            file.flush().map_err(|source| Error::Io { path: path.clone(), source })
        }
        None => {
            let stdout = io::stdout();
            let mut lock = stdout.lock();
            write(&mut lock)
        }
    }
}

fn emit_json<T: Serialize>(cli: &Cli, value: &T) -> Result<()> {
    emit(cli, |w| {
        serde_json::to_writer_pretty(&mut *w, value)?;
        writeln!(w).map_err(|source| Error::Io { path: PathBuf::from("<output>"), source })
    })
}

fn json_only(cli: &Cli, command: &str) -> Result<()> {
    if cli.format == Format::Csv {
        return Err(Error::Argument(format!("{command} only supports --format json")));
    }
    Ok(())
}

fn read_file(path: &Path) -> Result<String> {
    fs::read_to_string(path).map_err(|source| Error::Io { path: path.to_path_buf(), source })
}

#[derive(Serialize)]
struct ExtractOutput {
    n: usize,
    locality: usize,
    scale: String,
    levels: Vec<DaisyLevel>,
    heavy: HeavyDaisy,
    verification: Vec<DaisyReport>,
    #[serde(skip_serializing_if = "Option::is_none")]
    plucked: Option<Vec<SetIndex>>,
}

#[derive(Serialize)]
struct PreprocessOutput {
    code: String,
    epsilon: String,
    repetitions: u32,
    report: ReductionReport,
    decoder: DecoderFile,
}

#[derive(Serialize)]
struct ClaimsOutput<'a> {
    seed: u64,
    passed: bool,
    reports: &'a [ClaimReport],
}

fn run(cli: &Cli) -> Result<bool> {
    match &cli.command {
        Command::ExtractDaisy { input, locality, scale, pluck } => {
            json_only(cli, "extract-daisy")?;
            let weighted = WeightedSetSystem::from_json(&read_file(input)?)?;
            let system = weighted.system();
            let locality = locality.unwrap_or_else(|| system.max_set_size()).max(1);
            let scale = match scale {
                Some(s) => parse_rational(s)?,
                None => default_scale(system),
            };
            let levels = build_daisy_sequence(system, locality, &scale)?;
            let heavy = pick_heavy_level(&levels, &weighted)?;
            let verification = levels
                .iter()
                .map(|l| system.verify_daisy(&l.certificate()))
                .collect::<Result<Vec<_>>>()?;
            let plucked = if *pluck {
                Some(pluck_simple_daisy(system, &heavy.members, &heavy.kernel, heavy.petal_bound, &heavy.degree_bound)?)
            } else {
                None
            };
            let clean = verification.iter().all(DaisyReport::is_valid);
            let out = ExtractOutput {
                n: system.universe_size(),
                locality,
                scale: format_rational(&scale),
                levels,
                heavy,
                verification,
                plucked,
            };
            emit_json(cli, &out)?;
            Ok(clean)
        }
        Command::Preprocess { code, epsilon, reading, multiset_factor, corpus_size, tolerance_factor, retries } => {
            json_only(cli, "preprocess")?;
            let (built, decoder) = code.build()?;
            let mut rng = stream(cli.seed, "preprocess/corpus", 0);
            let corpus = (0..*corpus_size)
                .map(|_| {
                    let (message, word) = built.in_radius_word(&mut rng)?;
                    Ok(CorpusEntry { message, word })
                })
                .collect::<Result<Vec<_>>>()?;
            let config = PipelineConfig {
                epsilon: epsilon.as_deref().map(parse_rational).transpose()?,
                reading: match reading {
                    Reading::Final => TargetReading::FinalLocality,
                    Reading::Input => TargetReading::InputLocality,
                },
                multiset_factor: *multiset_factor,
                tolerance_factor: parse_rational(tolerance_factor)?,
                retry_limit: *retries,
            };
            let adaptive = AdaptiveDecoder::from_non_adaptive(&decoder)?;
            let mut rng = stream(cli.seed, "preprocess/reduce", 0);
            match preprocess(&adaptive, &corpus, &config, &mut rng) {
                Ok(out) => {
                    let file = DecoderFile::from_decoder(&out.reduced, u128::MAX)?;
                    emit_json(
                        cli,
                        &PreprocessOutput {
                            code: built.name(),
                            epsilon: format_rational(&out.epsilon),
                            repetitions: out.amplified.repetitions(),
                            report: out.report,
                            decoder: file,
                        },
                    )?;
                    Ok(true)
                }
                Err(Error::ReductionFailed(report)) => {
                    emit_json(cli, &*report)?;
                    eprintln!("randomness reduction failed after {} attempt(s)", report.attempts);
                    Ok(false)
                }
                Err(e) => Err(e),
            }
        }
        Command::Simulate { code, trials, kmax, p, budget, strict, audit, no_timing } => {
            let mut config = ExperimentConfig::new(code.clone(), *trials, cli.seed);
            config.p_override = *p;
            config.kernel_cap = *kmax;
            config.query_budget = *budget;
            config.rule = if *strict { ConsensusRule::TwoSided } else { ConsensusRule::FirstUnanimous };
            config.audit = *audit;
            config.timing = !no_timing;
            let sim = simulate(&config)?;
            match cli.format {
                Format::Csv => emit(cli, |w| write_trials_csv(&sim.records, w))?,
                Format::Json => emit_json(cli, &sim)?,
            }
            eprintln!(
                "{}: success {}/{} ({:.3}), mean |Q| {:.1} (expected {:.1} ± {:.1})",
                sim.summary.code,
                sim.summary.successes,
                sim.summary.trials,
                sim.summary.success_rate,
                sim.summary.mean_queries,
                sim.summary.expected_queries,
                sim.summary.expected_queries_std
            );
            Ok(sim.summary.wrong_bits == 0 && sim.summary.unanimous_wrong == 0)
        }
        Command::Verify { instances, pluck_instances, decoder_trials, sizes, localities, wrapup_kmax, inject_fault } => {
            let config = ClaimSuiteConfig {
                seed: cli.seed,
                points: sizes.iter().flat_map(|&n| localities.iter().map(move |&l| (n, l))).collect(),
                instances: *instances,
                pluck_instances: *pluck_instances,
                decoder_trials: *decoder_trials,
                wrapup_max_k: *wrapup_kmax,
                inject_fault: *inject_fault,
                ..ClaimSuiteConfig::default()
            };
            let reports = verify_claims(&config)?;
            let passed = reports.iter().all(ClaimReport::passed);
            match cli.format {
                Format::Json => emit_json(cli, &ClaimsOutput { seed: cli.seed, passed, reports: &reports })?,
                Format::Csv => emit(cli, |w| write_claims_csv(&reports, w))?,
            }
            Ok(passed)
        }
        Command::Scaling { family, params, trials, p } => {
            let codes = params
                .iter()
                .map(|&v| match family.as_str() {
                    "hadamard" => format!("hadamard:m={v}").parse(),
                    "identity" => format!("identity:k={v}").parse(),
                    "repetition" => format!("repetition:k={v},r=3").parse(),
                    other => Err(Error::Argument(format!("unknown family {other:?}"))),
                })
                .collect::<Result<Vec<CodeSpec>>>()?;
            let mut base = ExperimentConfig::new(codes[0].clone(), *trials, cli.seed);
            base.p_override = *p;
            base.timing = false;
            let report = scaling_study(&codes, &base);
            for s in &report.skipped {
                eprintln!("skipped {}: {}", s.code, s.reason);
            }
            match cli.format {
                Format::Csv => emit(cli, |w| write_scaling_csv(&report, w))?,
                Format::Json => emit_json(cli, &report)?,
            }
            Ok(true)
        }
        Command::Wrapup { kmax } => {
            let reports = (1..=*kmax).map(wrapup_sanity).collect::<Result<Vec<_>>>()?;
            let passed = reports.iter().all(ClaimReport::passed);
            match cli.format {
                Format::Json => emit_json(cli, &ClaimsOutput { seed: cli.seed, passed, reports: &reports })?,
                Format::Csv => emit(cli, |w| write_claims_csv(&reports, w))?,
            }
            Ok(passed)
        }
    }
}

fn write_claims_csv(reports: &[ClaimReport], out: &mut dyn Write) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["claim", "instances", "violations", "worst_margin", "first_violation"])?;
    for r in reports {
        let first = r
            .violations
            .first()
            .map(|v| format!("seed={} stream={} instance={}: {}", v.seed, v.stream, v.instance, v.detail))
            .unwrap_or_default();
        w.write_record([
            r.claim.name().to_string(),
            r.instances.to_string(),
            r.violations.len().to_string(),
            r.worst_margin.map(|m| format!("{m:.6}")).unwrap_or_default(),
            first,
        ])?;
    }
    w.flush().map_err(csv::Error::from)?;
    Ok(())
}
