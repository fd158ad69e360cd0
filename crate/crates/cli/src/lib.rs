//! The `aoi` command line: load a network, run one engine, print report rows.

mod report;

use std::fmt;
use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};
use std::time::{SystemTime, UNIX_EPOCH};

use aoi::exact::{self, ExactLaw, ExactLimits};
use aoi::sampler::{self, Functional};
use aoi::simulator::{self, SimConfig, DEFAULT_BURN_IN};
use aoi::{cascade, AugmentedNetwork, Exec, RngPolicy, SubsetId};
use clap::{Args, Parser, Subcommand, ValueEnum};

pub use report::{write_rows, Format, ReportRow};

/// Standard-error multiple used by `compare`.
pub const COMPARE_SIGMAS: f64 = 4.0;

#[derive(Debug, Parser)]
#[command(name = "aoi", version, about = "Age of information in preemptive memoryless networks")]
struct Cli {
    /// Output format for report rows.
    #[arg(long, global = true, value_enum, default_value = "jsonl")]
    format: Format,
    /// Worker threads for parallel engines; 1 runs everything sequentially.
    #[arg(long, global = true)]
    threads: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Args)]
struct NetArg {
    /// Network description (JSON).
    #[arg(long)]
    net: PathBuf,
}

#[derive(Debug, Args)]
#[group(required = true, multiple = false)]
struct ExactTarget {
    /// Node label or `{a,b,...}` subset.
    #[arg(long)]
    node: Option<String>,
    /// Subset as `{a,b,...}`.
    #[arg(long)]
    subset: Option<String>,
    /// Every node of the network.
    #[arg(long)]
    all: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum CdfMethod {
    Inversion,
    Sample,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Check that the network is a valid single-source network.
    Validate(NetArg),
    /// Mean age from the subset recursion.
    Exact {
        #[command(flatten)]
        net: NetArg,
        #[command(flatten)]
        target: ExactTarget,
    },
    /// Moment generating function at a real point.
    Mgf {
        #[command(flatten)]
        net: NetArg,
        /// Node label or `{a,b,...}` subset.
        #[arg(long)]
        node: String,
        /// Evaluation point, below the smallest outgoing rate of the subset.
        #[arg(long, allow_hyphen_values = true)]
        s: f64,
    },
    /// Distribution function over a grid of thresholds.
    Cdf {
        #[command(flatten)]
        net: NetArg,
        /// Node label or `{a,b,...}` subset.
        #[arg(long)]
        node: String,
        /// START:STOP:STEP
        #[arg(long)]
        d_grid: String,
        /// Numerical inversion or an empirical estimate.
        #[arg(long, value_enum, default_value = "inversion")]
        method: CdfMethod,
        /// Replicates for `--method sample`.
        #[arg(long)]
        samples: Option<usize>,
        /// Random seed; one is picked and reported when omitted.
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Optimised Chernoff bound on the probability that the age reaches d.
    Chernoff {
        #[command(flatten)]
        net: NetArg,
        /// Node label or `{a,b,...}` subset.
        #[arg(long)]
        node: String,
        /// Age threshold.
        #[arg(long, allow_hyphen_values = true)]
        d: f64,
    },
    /// Monte Carlo means of every node's age.
    Sample {
        #[command(flatten)]
        net: NetArg,
        /// Monte Carlo replicates.
        #[arg(long)]
        samples: usize,
        /// Random seed; one is picked and reported when omitted.
        #[arg(long)]
        seed: Option<u64>,
        /// Also write every replicate as CSV.
        #[arg(long)]
        dump_csv: Option<PathBuf>,
    },
    /// Event-driven simulation of the network.
    Simulate {
        #[command(flatten)]
        net: NetArg,
        /// Update events to simulate.
        #[arg(long)]
        events: u64,
        /// Random seed; one is picked and reported when omitted.
        #[arg(long)]
        seed: Option<u64>,
        /// Fraction of events discarded before averaging.
        #[arg(long, default_value_t = DEFAULT_BURN_IN)]
        burn_in: f64,
        /// Comma-separated thresholds for age-violation fractions.
        #[arg(long, value_delimiter = ',')]
        thresholds: Vec<f64>,
        /// Write every event and the resulting ages as CSV.
        #[arg(long)]
        trace: Option<PathBuf>,
    },
    /// Mean ages through the chain-of-blocks decomposition.
    Cascade(NetArg),
    /// Exact, sampled and simulated means side by side.
    Compare {
        #[command(flatten)]
        net: NetArg,
        /// Node label or `{a,b,...}` subset.
        #[arg(long)]
        node: String,
        /// Monte Carlo replicates.
        #[arg(long)]
        samples: usize,
        /// Update events to simulate.
        #[arg(long)]
        events: u64,
        /// Random seed; one is picked and reported when omitted.
        #[arg(long)]
        seed: Option<u64>,
    },
}

#[derive(Debug)]
enum Failure {
    /// Bad invocation; exit code 2.
    Usage(String),
    /// The request was understood but could not be served; exit code 1.
    Invalid(String),
}

impl fmt::Display for Failure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Failure::Usage(m) | Failure::Invalid(m) => f.write_str(m),
        }
    }
}

impl From<aoi::Error> for Failure {
    fn from(e: aoi::Error) -> Self {
        Failure::Invalid(e.to_string())
    }
}

fn io_failure(path: &Path, e: impl fmt::Display) -> Failure {
    Failure::Invalid(format!("{}: {e}", path.display()))
}

/// Rows for stdout plus diagnostics for stderr.
#[derive(Default)]
struct Outcome {
    rows: Vec<ReportRow>,
    notes: Vec<String>,
}

/// Parses `argv` (program name first), runs the command and returns the exit
/// code: 0 on success, 1 when the network or a request on it is invalid, 2 on
/// usage errors.
pub fn run<I, S>(argv: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = S>,
    S: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(cli) => cli,
        Err(e) => {
            use clap::error::ErrorKind;
            let code = match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => {
                    let _ = write!(out, "{}", e.render());
                    return 0;
                }
                _ => 2,
            };
            let _ = write!(err, "{}", e.render());
            return code;
        }
    };
    let result = with_exec(cli.threads, |exec| execute(&cli.command, exec));
    match result {
        Ok(outcome) => {
            for note in &outcome.notes {
                let _ = writeln!(err, "{note}");
            }
            if let Err(e) = write_rows(&outcome.rows, cli.format, out) {
                let _ = writeln!(err, "error: writing report: {e}");
                return 1;
            }
            0
        }
        Err(Failure::Usage(m)) => {
            let _ = writeln!(err, "error: {m}");
            2
        }
        Err(Failure::Invalid(m)) => {
            let _ = writeln!(err, "error: {m}");
            1
        }
    }
}

fn with_exec<F>(threads: Option<usize>, f: F) -> Result<Outcome, Failure>
where
    F: FnOnce(Exec) -> Result<Outcome, Failure> + Send,
{
    match threads {
        Some(0) => Err(Failure::Usage("--threads must be at least 1".into())),
        Some(1) => f(Exec::Sequential),
        #[cfg(feature = "parallel")]
        Some(k) => {
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(k)
                .build()
                .map_err(|e| Failure::Invalid(format!("thread pool: {e}")))?;
            pool.install(|| f(Exec::Parallel))
        }
        #[cfg(not(feature = "parallel"))]
        Some(_) => f(Exec::Sequential),
        None => f(Exec::default()),
    }
}

fn load(arg: &NetArg) -> Result<(AugmentedNetwork, Vec<String>), Failure> {
    let text = fs::read_to_string(&arg.net).map_err(|e| io_failure(&arg.net, e))?;
    let net = AugmentedNetwork::parse(&text)?;
    let notes = net.warnings().iter().map(|w| format!("warning: {w}")).collect();
    Ok((net, notes))
}

/// Resolves a node label or a `{a,b,...}` subset expression.
fn target(net: &AugmentedNetwork, expr: &str) -> Result<(SubsetId, String), Failure> {
    let expr = expr.trim();
    let a = match expr.strip_prefix('{').and_then(|s| s.strip_suffix('}')) {
        Some(inner) => {
            let labels: Vec<&str> = inner.split(',').map(str::trim).filter(|l| !l.is_empty()).collect();
            net.subset(&labels)?
        }
        None => net.subset(&[expr])?,
    };
    let label = if a.len() == 1 { net.label(a.members().next().unwrap()).to_string() } else { net.subset_label(&a) };
    Ok((a, label))
}

fn limits() -> Result<ExactLimits, Failure> {
    Ok(ExactLimits::from_env()?)
}

fn seed_or_pick(seed: Option<u64>, notes: &mut Vec<String>) -> u64 {
    seed.unwrap_or_else(|| {
        let nanos = SystemTime::now().duration_since(UNIX_EPOCH).map(|d| d.as_nanos() as u64).unwrap_or(0);
        let seed = nanos ^ u64::from(std::process::id()).rotate_left(32);
        notes.push(format!("note: no --seed given, using --seed {seed}"));
        seed
    })
}

fn parse_grid(spec: &str) -> Result<Vec<f64>, Failure> {
    let bad =
        || Failure::Usage(format!("--d-grid expects START:STOP:STEP with STEP > 0 and START <= STOP, got `{spec}`"));
    let parts: Vec<f64> =
        spec.split(':').map(|p| p.trim().parse::<f64>()).collect::<Result<_, _>>().map_err(|_| bad())?;
    let [start, stop, step] = parts[..] else { return Err(bad()) };
    if !start.is_finite() || !stop.is_finite() || step.is_nan() || step <= 0.0 || start > stop {
        return Err(bad());
    }
    let count = ((stop - start) / step + 1e-9).floor() as usize + 1;
    if count > 10_000_000 {
        return Err(Failure::Usage("--d-grid has more than 10^7 points".into()));
    }
    Ok((0..count).map(|k| start + k as f64 * step).collect())
}

fn write_file(path: &Path, f: impl FnOnce(&mut BufWriter<File>) -> std::io::Result<()>) -> Result<(), Failure> {
    let file = File::create(path).map_err(|e| io_failure(path, e))?;
    let mut w = BufWriter::new(file);
    f(&mut w).and_then(|_| w.flush()).map_err(|e| io_failure(path, e))
}

fn execute(command: &Command, exec: Exec) -> Result<Outcome, Failure> {
    match command {
        Command::Validate(arg) => {
            let (net, notes) = load(arg)?;
            let row = ReportRow::new(net.label(net.source()), "validate", net.node_count() as f64)
                .meta("edges", net.edges().len() - 1)
                .meta("lambda", net.lambda())
                .meta("total_rate", net.total_rate())
                .meta("fingerprint", format!("{:016x}", net.fingerprint()));
            Ok(Outcome { rows: vec![row], notes })
        }
        Command::Exact { net: arg, target: t } => {
            let (net, notes) = load(arg)?;
            let limits = limits()?;
            let rows = if t.all {
                let table = exact::average_age_all_with(&net, limits, exec)?;
                net.user_nodes().map(|v| ReportRow::new(net.label(v), "exact", table.singleton(v))).collect()
            } else {
                let expr = t.node.as_deref().or(t.subset.as_deref()).unwrap_or_default();
                let (a, label) = target(&net, expr)?;
                let law = ExactLaw::with_limits(&net, &a, limits)?;
                vec![ReportRow::new(label, "exact", law.mean()).meta("subsets", law.subsets_visited())]
            };
            Ok(Outcome { rows, notes })
        }
        Command::Mgf { net: arg, node, s } => {
            let (net, notes) = load(arg)?;
            let (a, label) = target(&net, node)?;
            let law = ExactLaw::with_limits(&net, &a, limits()?)?;
            let value = law.mgf_real(*s)?;
            let row = ReportRow::new(label, "mgf", value).meta("s", s).meta("bound", law.convergence_bound());
            Ok(Outcome { rows: vec![row], notes })
        }
        Command::Cdf { net: arg, node, d_grid, method, samples, seed } => {
            let grid = parse_grid(d_grid)?;
            let (net, mut notes) = load(arg)?;
            let (a, label) = target(&net, node)?;
            let rows = match method {
                CdfMethod::Inversion => {
                    let law = ExactLaw::with_limits(&net, &a, limits()?)?;
                    grid.iter()
                        .map(|&d| {
                            let c = law.cdf(d)?;
                            Ok(ReportRow::new(&label, "cdf-inversion", c.value)
                                .meta("d", d)
                                .meta("error_estimate", format!("{:.3e}", c.error_estimate)))
                        })
                        .collect::<Result<Vec<_>, Failure>>()?
                }
                CdfMethod::Sample => {
                    let n = samples.ok_or_else(|| Failure::Usage("--method sample requires --samples".into()))?;
                    let seed = seed_or_pick(*seed, &mut notes);
                    let batch = sampler::sample_ages_with(&net, n, RngPolicy::new(seed), exec)?;
                    grid.iter()
                        .map(|&d| {
                            let p = sampler::empirical_cdf(&batch, &a, d)?;
                            Ok(ReportRow::new(&label, "cdf-sample", p)
                                .stderr((p * (1.0 - p) / n as f64).sqrt())
                                .meta("d", d)
                                .meta("samples", n)
                                .meta("seed", seed))
                        })
                        .collect::<Result<Vec<_>, Failure>>()?
                }
            };
            Ok(Outcome { rows, notes })
        }
        Command::Chernoff { net: arg, node, d } => {
            let (net, notes) = load(arg)?;
            let (a, label) = target(&net, node)?;
            let law = ExactLaw::with_limits(&net, &a, limits()?)?;
            let row = ReportRow::new(label, "chernoff", law.chernoff(*d)?).meta("d", d);
            Ok(Outcome { rows: vec![row], notes })
        }
        Command::Sample { net: arg, samples, seed, dump_csv } => {
            let (net, mut notes) = load(arg)?;
            let seed = seed_or_pick(*seed, &mut notes);
            let batch = sampler::sample_ages_with(&net, *samples, RngPolicy::new(seed), exec)?;
            if let Some(path) = dump_csv {
                write_file(path, |w| batch.write_csv(net.labels(), w))?;
            }
            let rows = net
                .user_nodes()
                .map(|v| {
                    let e = sampler::estimate(&batch, &SubsetId::singleton(v), Functional::Mean)?;
                    Ok(ReportRow::new(net.label(v), "sampler", e.value)
                        .stderr(e.stderr)
                        .meta("samples", samples)
                        .meta("seed", seed))
                })
                .collect::<Result<Vec<_>, Failure>>()?;
            Ok(Outcome { rows, notes })
        }
        Command::Simulate { net: arg, events, seed, burn_in, thresholds, trace } => {
            let (net, mut notes) = load(arg)?;
            let seed = seed_or_pick(*seed, &mut notes);
            let mut cfg = SimConfig::new(*events, seed);
            cfg.burn_in_fraction = *burn_in;
            let res = match trace {
                Some(path) => {
                    let mut result = None;
                    write_file(path, |w| {
                        result = Some(simulator::simulate_traced(&net, &cfg, thresholds, w));
                        Ok(())
                    })?;
                    result.unwrap()?
                }
                None => simulator::simulate(&net, &cfg, thresholds)?,
            };
            let common = |row: ReportRow| row.meta("events", events).meta("burn_in", burn_in).meta("seed", seed);
            let mut rows = Vec::new();
            for v in net.user_nodes() {
                let e = res.time_average_estimate(v)?;
                rows.push(common(ReportRow::new(net.label(v), "simulator", e.value).stderr(e.stderr)));
            }
            for &d in thresholds {
                for v in net.user_nodes() {
                    let e = res.violation_estimate(v, d)?;
                    rows.push(common(ReportRow::new(net.label(v), "violation", e.value).stderr(e.stderr).meta("d", d)));
                }
            }
            Ok(Outcome { rows, notes })
        }
        Command::Cascade(arg) => {
            let (net, mut notes) = load(arg)?;
            let limits = limits()?;
            let rows = match cascade::decompose_chain(&net) {
                Ok(chain) => {
                    let ages = cascade::chain_average_ages_with(&net, &chain, limits, exec)?;
                    net.user_nodes()
                        .map(|v| ReportRow::new(net.label(v), "cascade", ages.get(v)).meta("blocks", chain.len()))
                        .collect()
                }
                Err(e @ aoi::Error::NotAChain(_)) => {
                    notes.push(format!("note: {e}; using the exact engine"));
                    let table = exact::average_age_all_with(&net, limits, exec)?;
                    net.user_nodes().map(|v| ReportRow::new(net.label(v), "exact", table.singleton(v))).collect()
                }
                Err(e) => return Err(e.into()),
            };
            Ok(Outcome { rows, notes })
        }
        Command::Compare { net: arg, node, samples, events, seed } => {
            let (net, mut notes) = load(arg)?;
            let (a, label) = target(&net, node)?;
            let seed = seed_or_pick(*seed, &mut notes);
            let law = ExactLaw::with_limits(&net, &a, limits()?)?;
            let mean = law.mean();
            let sampled = sampler::fold_estimate(&net, *samples, RngPolicy::new(seed), &a, Functional::Mean, exec)?;
            let mut cfg = SimConfig::new(*events, seed);
            if a.len() > 1 {
                cfg.subsets = vec![a.clone()];
            }
            let simulated = simulator::simulate(&net, &cfg, &[])?.subset_time_average_estimate(&a)?;
            let z = |e: &sampler::Estimate| (e.value - mean).abs() / e.stderr;
            let (zs, zt) = (z(&sampled), z(&simulated));
            let pass = zs <= COMPARE_SIGMAS && zt <= COMPARE_SIGMAS;
            notes.push(format!(
                "verdict: {} (sampler {zs:.2} sigma, simulator {zt:.2} sigma, gate {COMPARE_SIGMAS} sigma)",
                if pass { "PASS" } else { "FAIL" }
            ));
            let rows = vec![
                ReportRow::new(&label, "exact", mean),
                ReportRow::new(&label, "sampler", sampled.value)
                    .stderr(sampled.stderr)
                    .meta("samples", samples)
                    .meta("seed", seed),
                ReportRow::new(&label, "simulator", simulated.value)
                    .stderr(simulated.stderr)
                    .meta("events", events)
                    .meta("burn_in", DEFAULT_BURN_IN)
                    .meta("seed", seed),
            ];
            Ok(Outcome { rows, notes })
        }
    }
}
