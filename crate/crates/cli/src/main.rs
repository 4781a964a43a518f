use std::fs;
use std::io::{self, Write};
use std::path::PathBuf;
use std::process::ExitCode;
use std::time::Instant;

use anyhow::{anyhow, Context};
use clap::{Args, Parser, Subcommand, ValueEnum};
use num_bigint::BigInt;
use serde::Serialize;

use introdet::bigmat::{bareiss_det, gen_engineered, gen_random, gen_unimodular, IntMatrix};
use introdet::introspect::{
    certified_determinant, determinant, et_cra_determinant, lif_only_determinant, DetOptions, DetPath, DetReport,
    PhaseTimings,
};
use introdet::lif::LifRegime;
use introdet::mcverify::{self, McResult};
use introdet::modfield::DEFAULT_PRIME_BITS;
use introdet::Error;

#[derive(Parser)]
#[command(name = "introdet", version, about = "Exact integer determinants by an introspective algorithm")]
struct Cli {
    /// Worker threads (0 keeps the default pool).
    #[arg(long, global = true, default_value_t = 0)]
    threads: usize,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Print the determinant of a matrix file or a generated matrix.
    Det(DetArgs),
    /// Time several algorithms on generated matrices; prints CSV.
    Bench(BenchArgs),
    /// Run Monte Carlo checks of the probabilistic bounds.
    Verify(VerifyArgs),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
enum Generator {
    Identity,
    Random,
    Engineered,
    Unimodular,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "kebab-case")]
enum Algo {
    Introspective,
    CertifiedCra,
    EtCra,
    /// Introspective with `i_max = 1`.
    Abbott,
    LifOnly,
    Bareiss,
}

impl Algo {
    fn name(self) -> &'static str {
        match self {
            Algo::Introspective => "introspective",
            Algo::CertifiedCra => "certified-cra",
            Algo::EtCra => "et-cra",
            Algo::Abbott => "abbott",
            Algo::LifOnly => "lif-only",
            Algo::Bareiss => "bareiss",
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
enum Format {
    Text,
    Json,
}

#[derive(Args, Clone)]
struct AlgoArgs {
    /// Failure probability bound.
    #[arg(long, default_value_t = 2f64.powi(-20))]
    epsilon: f64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    imax: Option<usize>,
    #[arg(long)]
    imin: Option<usize>,
    /// Use the timing-ratio test instead of equality of successive π̃.
    #[arg(long)]
    adaptive_switch: bool,
    /// Primes are drawn from (2^bits, 2^(bits+1)).
    #[arg(long, default_value_t = DEFAULT_PRIME_BITS)]
    prime_bits: u32,
}

impl AlgoArgs {
    fn options(&self, algo: Algo) -> DetOptions {
        let i_max = if algo == Algo::Abbott { Some(1) } else { self.imax };
        DetOptions {
            epsilon: self.epsilon,
            seed: self.seed,
            prime_bits: self.prime_bits,
            lambda: None,
            i_min: self.imin,
            i_max,
            adaptive_switch: self.adaptive_switch,
        }
    }
}

#[derive(Args)]
struct DetArgs {
    /// Matrix file: "rows cols" then one row per line; '#' starts a comment.
    file: Option<PathBuf>,
    #[arg(long, value_enum, conflicts_with = "file")]
    gen: Option<Generator>,
    #[arg(long, default_value_t = 10)]
    n: usize,
    #[arg(long, default_value_t = 16)]
    lambda: u64,
    #[arg(long, value_enum, default_value_t = Algo::Introspective)]
    algo: Algo,
    #[command(flatten)]
    algo_args: AlgoArgs,
    /// Write a JSON run record to this path.
    #[arg(long)]
    stats: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t = Format::Text)]
    format: Format,
}

#[derive(Args)]
struct BenchArgs {
    #[arg(long, value_enum, default_value_t = Generator::Random)]
    gen: Generator,
    /// Matrix sizes, comma separated.
    #[arg(long, value_delimiter = ',', default_values_t = vec![40, 60, 80, 100, 120, 140, 160, 180, 200])]
    sizes: Vec<usize>,
    #[arg(long, default_value_t = 16)]
    lambda: u64,
    /// Instances per size; seeds run from --seed upwards.
    #[arg(long, default_value_t = 1)]
    instances: u64,
    #[arg(long, value_enum, value_delimiter = ',', default_values_t = vec![Algo::Introspective, Algo::CertifiedCra, Algo::EtCra, Algo::Abbott, Algo::LifOnly])]
    algos: Vec<Algo>,
    #[command(flatten)]
    algo_args: AlgoArgs,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
enum Suite {
    Rank,
    Factors,
    Perturbed,
    LifGap,
    All,
}

#[derive(Args)]
struct VerifyArgs {
    #[arg(value_enum)]
    suite: Suite,
    /// Trials for the rank and perturbed-determinant estimators.
    #[arg(long, default_value_t = 100_000)]
    trials: usize,
    /// Trials for the estimators that need a Smith form or a solve per trial.
    #[arg(long, default_value_t = 200)]
    oracle_trials: usize,
    #[arg(long, default_value_t = 1)]
    seed: u64,
    /// Matrix size for the factor-count suite.
    #[arg(long, default_value_t = 40)]
    n: usize,
    #[arg(long, default_value_t = 4)]
    lambda: u64,
    #[arg(long, value_enum, default_value_t = Format::Text)]
    format: Format,
}

#[derive(Serialize)]
struct RunStats {
    n: usize,
    algo: Algo,
    seed: u64,
    path: &'static str,
    solvings: usize,
    primes_used: usize,
    k_bits: u64,
    det_bits: u64,
    timings_ms: Timings,
}

#[derive(Serialize)]
struct Timings {
    initial_cra: f64,
    bonus: f64,
    resumed_cra: f64,
    fallback: f64,
    total: f64,
}

#[derive(Serialize)]
struct BenchRow {
    n: usize,
    algo: &'static str,
    seed: u64,
    ms: f64,
    det_bits: u64,
    solvings: usize,
    primes: usize,
}

/// Failure with a specific process exit code.
struct Exit(u8, anyhow::Error);

impl From<anyhow::Error> for Exit {
    fn from(e: anyhow::Error) -> Self {
        Exit(1, e)
    }
}

fn classify(e: Error) -> Exit {
    let code = match e {
        Error::NotSquare { .. } | Error::Parse { .. } | Error::Dimension(_) => 2,
        Error::PrimesExhausted { .. } | Error::WindowTooSmall(_) => 3,
        _ => 1,
    };
    Exit(code, e.into())
}

fn generate(gen: Generator, n: usize, lambda: u64, seed: u64) -> IntMatrix {
    match gen {
        Generator::Identity => IntMatrix::identity(n),
        Generator::Random => gen_random(n, lambda, seed),
        Generator::Engineered => gen_engineered(n, seed),
        Generator::Unimodular => gen_unimodular(n, seed),
    }
}

fn run_algo(a: &IntMatrix, algo: Algo, args: &AlgoArgs) -> Result<DetReport, Error> {
    let opts = args.options(algo);
    match algo {
        Algo::Introspective | Algo::Abbott => determinant(a, &opts),
        Algo::CertifiedCra => certified_determinant(a, &opts),
        Algo::EtCra => et_cra_determinant(a, &opts),
        Algo::LifOnly => lif_only_determinant(a, &opts),
        Algo::Bareiss => {
            let t = Instant::now();
            let det = bareiss_det(a)?;
            Ok(DetReport {
                det,
                path: DetPath::FallbackCertified,
                solvings: 0,
                primes_used: 0,
                k_bits: 1,
                k_factor: BigInt::from(1),
                s_tilde: BigInt::from(1),
                epsilon: 0.0,
                timings: PhaseTimings {
                    fallback: t.elapsed(),
                    ..Default::default()
                },
            })
        }
    }
}

fn ms(d: std::time::Duration) -> f64 {
    d.as_secs_f64() * 1e3
}

fn cmd_det(args: DetArgs) -> Result<(), Exit> {
    let a = match (&args.file, args.gen) {
        (Some(path), _) => {
            let text = fs::read_to_string(path)
                .with_context(|| format!("reading {}", path.display()))
                .map_err(|e| Exit(2, e))?;
            text.parse::<IntMatrix>().map_err(classify)?
        }
        (None, Some(gen)) => generate(gen, args.n, args.lambda, args.algo_args.seed),
        (None, None) => return Err(Exit(2, anyhow!("give a matrix file or --gen"))),
    };
    let rep = run_algo(&a, args.algo, &args.algo_args).map_err(classify)?;
    match args.format {
        Format::Text => println!("{}", rep.det),
        Format::Json => println!("{}", serde_json::json!({ "det": rep.det.to_string() })),
    }
    if let Some(path) = &args.stats {
        let stats = RunStats {
            n: a.rows(),
            algo: args.algo,
            seed: args.algo_args.seed,
            path: rep.path.as_str(),
            solvings: rep.solvings,
            primes_used: rep.primes_used,
            k_bits: rep.k_bits,
            det_bits: rep.det.bits(),
            timings_ms: Timings {
                initial_cra: ms(rep.timings.initial_cra),
                bonus: ms(rep.timings.bonus),
                resumed_cra: ms(rep.timings.resumed_cra),
                fallback: ms(rep.timings.fallback),
                total: ms(rep.timings.total()),
            },
        };
        let json = serde_json::to_string_pretty(&stats).map_err(anyhow::Error::from)?;
        fs::write(path, json + "\n").with_context(|| format!("writing {}", path.display()))?;
    }
    Ok(())
}

fn cmd_bench(args: BenchArgs) -> Result<(), Exit> {
    let mut out = csv::Writer::from_writer(io::stdout());
    for &n in &args.sizes {
        for seed in args.algo_args.seed..args.algo_args.seed + args.instances {
            let a = generate(args.gen, n, args.lambda, seed);
            let mut reference: Option<(Algo, BigInt)> = None;
            let mut rows = Vec::new();
            for &algo in &args.algos {
                let algo_args = AlgoArgs {
                    seed,
                    ..args.algo_args.clone()
                };
                let t = Instant::now();
                let rep = run_algo(&a, algo, &algo_args).map_err(classify)?;
                let elapsed = t.elapsed();
                match &reference {
                    Some((first, det)) if *det != rep.det => {
                        return Err(Exit(
                            1,
                            anyhow!(
                                "n={n} seed={seed}: {} gave {} but {} gave {}",
                                first.name(),
                                det,
                                algo.name(),
                                rep.det
                            ),
                        ));
                    }
                    Some(_) => {}
                    None => reference = Some((algo, rep.det.clone())),
                }
                rows.push(BenchRow {
                    n,
                    algo: algo.name(),
                    seed,
                    ms: (ms(elapsed) * 1e3).round() / 1e3,
                    det_bits: rep.det.bits(),
                    solvings: rep.solvings,
                    primes: rep.primes_used,
                });
            }
            // rows are emitted only once every algorithm agreed
            for row in rows {
                out.serialize(row).map_err(anyhow::Error::from)?;
            }
            out.flush().map_err(anyhow::Error::from)?;
        }
    }
    Ok(())
}

fn cmd_verify(args: VerifyArgs) -> Result<(), Exit> {
    let (t, ot, seed) = (args.trials, args.oracle_trials, args.seed);
    let mut results: Vec<McResult> = Vec::new();
    let all = args.suite == Suite::All;
    let mc = |r: Result<McResult, Error>| r.map_err(classify);
    if all || args.suite == Suite::Rank {
        results.push(mc(mcverify::mc_rank_bound(2, 2, 1, 2, 1, t, seed))?);
        for j in [5, 6, 7] {
            results.push(mc(mcverify::mc_rank_bound(8, 8, 2, 3, j, t, seed + j as u64))?);
        }
    }
    if all || args.suite == Suite::Factors {
        results.push(mcverify::mc_factor_count(args.n, args.lambda, None, ot, seed));
        results.push(mcverify::mc_factor_count(args.n, 1, Some(2), ot, seed + 1));
    }
    if all || args.suite == Suite::Perturbed {
        for (s, p, l) in [(64, 2, 3), (100, 3, 2), (100, 5, 2)] {
            results.push(mc(mcverify::mc_perturbed_det(6, 3, s, p, l, t, seed + p))?);
        }
    }
    if all || args.suite == Suite::LifGap {
        results.push(mc(mcverify::mc_lif_gap(30, LifRegime::ExpectedConstantGap, ot, seed))?);
        results.push(mc(mcverify::mc_lif_equality(30, LifRegime::OneThird, ot, seed + 1))?);
    }
    let stdout = io::stdout();
    let mut w = stdout.lock();
    for r in &results {
        let line = match args.format {
            Format::Text => format!(
                "{} {}: estimate {:.6} bound {:.6} slack {:.6} ({} trials)",
                if r.pass { "PASS" } else { "FAIL" },
                r.name,
                r.estimate,
                r.bound,
                r.slack,
                r.trials
            ),
            Format::Json => serde_json::to_string(r).map_err(anyhow::Error::from)?,
        };
        writeln!(w, "{line}").map_err(anyhow::Error::from)?;
    }
    if results.iter().all(|r| r.pass) {
        Ok(())
    } else {
        Err(Exit(1, anyhow!("some estimates exceeded their bounds")))
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    if cli.threads > 0 {
        introdet::par::configure_threads(cli.threads);
    }
    let result = match cli.command {
        Command::Det(a) => cmd_det(a),
        Command::Bench(a) => cmd_bench(a),
        Command::Verify(a) => cmd_verify(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(Exit(code, e)) => {
            eprintln!("error: {e:#}");
            ExitCode::from(code)
        }
    }
}
