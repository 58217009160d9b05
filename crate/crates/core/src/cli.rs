//! Command-line front end.
//!
//! Exit codes: 0 on success, 1 on invalid configuration or I/O failure,
//! 2 on unparseable arguments, 3 when `decode` ran but did not converge.

use std::ffi::OsString;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use anyhow::{bail, ensure, Context};
use clap::{Args, Parser, Subcommand, ValueEnum};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::basegraph::{code_params, load_basegraph_from, BaseGraph, BaseGraphId, CodeParams};
use crate::channel::{bpsk_modulate, demap_llr, ebn0_to_sigma, AwgnChannel};
use crate::codec::{encode, puncture, CRC24B};
use crate::decoder::{write_trace_csv, AnyDecoder, DecodeConfig, EarlyStop, Schedule, Strategy};
use crate::harness::{
    run_bler_sweep, run_latency_bench, write_bench_csv, BenchConfig, SnrPoint, StopRule,
    SweepConfig,
};
use crate::llr::{Precision, QuantConfig};
use crate::planner::{choose_alpha, plan, DEFAULT_LOCAL_MEMORY, DEFAULT_WORKER_BUDGET};

const EXIT_ERROR: i32 = 1;
const EXIT_USAGE: i32 = 2;
const EXIT_NOT_CONVERGED: i32 = 3;

#[derive(Parser, Debug)]
#[command(
    name = "nrldpc",
    version,
    about = "5G NR LDPC codec, decoder and benchmark harness"
)]
struct Cli {
    /// Directory holding bg1.csv and bg2.csv, overriding the embedded tables
    /// and $NRLDPC_DATA_DIR.
    #[arg(long, global = true)]
    data_dir: Option<PathBuf>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Code parameters, strategy plans and memory footprints.
    Info(InfoArgs),
    /// Encode a message into a codeword, optionally emitting channel LLRs.
    Encode(EncodeArgs),
    /// Decode a file of channel LLRs into information bits.
    Decode(DecodeArgs),
    /// BLER/BER sweep over an Eb/N0 grid, written as CSV.
    Simulate(SimulateArgs),
    /// Latency and throughput measurement, written as CSV.
    Bench(BenchArgs),
}

#[derive(Args, Debug, Clone)]
struct CodeArgs {
    /// Base graph: 1 or 2.
    #[arg(long, value_parser = parse_bg)]
    bg: BaseGraphId,
    /// Lifting size.
    #[arg(long)]
    z: usize,
    /// Base rows in use (default: all).
    #[arg(long)]
    rows: Option<usize>,
}

impl CodeArgs {
    fn rows(&self) -> usize {
        self.rows.unwrap_or(self.bg.rows())
    }

    fn load(&self, data_dir: Option<&Path>) -> anyhow::Result<(BaseGraph, CodeParams)> {
        let bg = load_basegraph_from(self.bg, self.z, data_dir)?;
        let params = code_params(&bg, self.rows())?;
        Ok((bg, params))
    }
}

fn parse_bg(s: &str) -> Result<BaseGraphId, String> {
    s.parse().map_err(|e: crate::Error| e.to_string())
}

fn parse_precision(s: &str) -> Result<Precision, String> {
    s.parse().map_err(|e: crate::Error| e.to_string())
}

#[derive(ValueEnum, Copy, Clone, Debug, PartialEq, Eq)]
enum StrategyArg {
    #[value(alias = "ht")]
    HighThroughput,
    #[value(alias = "ll")]
    LowLatency,
}

#[derive(ValueEnum, Copy, Clone, Debug, PartialEq, Eq)]
enum StopArg {
    Syndrome,
    Crc,
    None,
}

#[derive(ValueEnum, Copy, Clone, Debug, PartialEq, Eq)]
enum ScheduleArg {
    Layered,
    Flooding,
}

#[derive(Args, Debug, Clone)]
struct DecoderArgs {
    /// Min-sum normalization factor.
    #[arg(long, default_value_t = 0.75)]
    beta: f64,
    #[arg(long, default_value_t = 20)]
    max_iter: usize,
    #[arg(long, value_enum, default_value_t = StrategyArg::HighThroughput)]
    strategy: StrategyArg,
    /// Partitions per row for the low-latency strategy (default: planner choice).
    #[arg(long)]
    alpha: Option<usize>,
    /// Codewords per packed word (default: 4 for int8, 2 for f16, 1 for f32).
    #[arg(long)]
    rho: Option<usize>,
    /// int8, f16 or f32.
    #[arg(long, value_parser = parse_precision, default_value = "int8")]
    precision: Precision,
    #[arg(long, value_enum, default_value_t = StopArg::Syndrome)]
    early_stop: StopArg,
    #[arg(long, value_enum, default_value_t = ScheduleArg::Layered)]
    schedule: ScheduleArg,
    /// Process the Z rows of each layer in parallel.
    #[arg(long)]
    parallel_rows: bool,
    /// Worker budget used to choose alpha.
    #[arg(long, default_value_t = DEFAULT_WORKER_BUDGET)]
    budget: usize,
    /// int8 quantization steps per LLR unit.
    #[arg(long)]
    scale: Option<f64>,
    /// Channel LLR saturation magnitude (default: 127/scale for int8).
    #[arg(long)]
    clip: Option<f64>,
}

impl DecoderArgs {
    fn rho(&self) -> usize {
        self.rho.unwrap_or(self.precision.packed_lanes())
    }

    fn alpha(&self, bg: &BaseGraph) -> anyhow::Result<usize> {
        match self.alpha {
            Some(a) => Ok(a),
            None => Ok(choose_alpha(bg, self.rho(), self.budget)?),
        }
    }

    fn strategy(&self, bg: &BaseGraph) -> anyhow::Result<Strategy> {
        Ok(match self.strategy {
            StrategyArg::HighThroughput => Strategy::HighThroughput,
            StrategyArg::LowLatency => Strategy::LowLatency {
                alpha: self.alpha(bg)?,
            },
        })
    }

    /// `allow_alpha` lets `--alpha` accompany the high-throughput strategy.
    fn config(&self, bg: &BaseGraph, allow_alpha: bool) -> anyhow::Result<DecodeConfig> {
        ensure!(
            allow_alpha || self.alpha.is_none() || self.strategy == StrategyArg::LowLatency,
            "--alpha only applies to the low-latency strategy"
        );
        let cfg = DecodeConfig {
            beta: self.beta,
            max_iter: self.max_iter,
            strategy: self.strategy(bg)?,
            precision: self.precision,
            rho: self.rho(),
            early_stop: match self.early_stop {
                StopArg::Syndrome => EarlyStop::Syndrome,
                StopArg::Crc => EarlyStop::Crc,
                StopArg::None => EarlyStop::None,
            },
            parallel_rows: self.parallel_rows,
            ..DecodeConfig::default()
        };
        cfg.validate()?;
        Ok(cfg)
    }

    fn quant(&self) -> anyhow::Result<QuantConfig> {
        let mut q = QuantConfig::for_precision(self.precision);
        if self.precision == Precision::Int8 {
            if let Some(scale) = self.scale {
                q.scale = scale;
                q.clip = 127.0 / scale;
            }
        } else {
            ensure!(self.scale.is_none(), "--scale only applies to int8");
        }
        if let Some(clip) = self.clip {
            q.clip = clip;
        }
        q.validate()?;
        Ok(q)
    }

    fn schedule(&self) -> Schedule {
        match self.schedule {
            ScheduleArg::Layered => Schedule::Layered,
            ScheduleArg::Flooding => Schedule::Flooding,
        }
    }
}

#[derive(Args, Debug)]
struct InfoArgs {
    #[command(flatten)]
    code: CodeArgs,
    #[arg(long, value_parser = parse_precision, default_value = "int8")]
    precision: Precision,
    #[arg(long)]
    rho: Option<usize>,
    #[arg(long, default_value_t = DEFAULT_WORKER_BUDGET)]
    budget: usize,
    /// Local memory per compute unit, bytes.
    #[arg(long, default_value_t = DEFAULT_LOCAL_MEMORY)]
    local_memory: usize,
    /// Print only the plan table as CSV.
    #[arg(long)]
    csv: bool,
}

#[derive(Args, Debug)]
struct EncodeArgs {
    #[command(flatten)]
    code: CodeArgs,
    /// Message bits, ASCII 0/1 (whitespace ignored).
    #[arg(long, conflicts_with = "random", required_unless_present = "random")]
    input: Option<PathBuf>,
    /// Draw a random message from --seed.
    #[arg(long)]
    random: bool,
    /// The message is a K-24 bit payload; append CRC-24B.
    #[arg(long)]
    crc: bool,
    #[arg(long, default_value_t = 1)]
    seed: u64,
    /// Codeword bits, one per line (default: stdout).
    #[arg(long)]
    output: Option<PathBuf>,
    /// Information bits (message plus CRC), one per line.
    #[arg(long)]
    message_out: Option<PathBuf>,
    /// Channel LLRs of the transmitted bits, one per line.
    #[arg(long)]
    llr_out: Option<PathBuf>,
    /// Add AWGN at this Eb/N0 to the LLR output (default: noise-free).
    #[arg(long, requires = "llr_out")]
    ebn0: Option<f64>,
}

#[derive(Args, Debug)]
struct DecodeArgs {
    #[command(flatten)]
    code: CodeArgs,
    #[command(flatten)]
    decoder: DecoderArgs,
    /// Channel LLRs of the transmitted bits, one per line.
    #[arg(long)]
    input: PathBuf,
    /// Decoded information bits, one per line (default: stdout).
    #[arg(long)]
    output: Option<PathBuf>,
    /// Per-iteration trace CSV.
    #[arg(long)]
    trace: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct SimulateArgs {
    #[command(flatten)]
    code: CodeArgs,
    #[command(flatten)]
    decoder: DecoderArgs,
    #[arg(long, allow_hyphen_values = true)]
    snr_start: f64,
    #[arg(long, allow_hyphen_values = true)]
    snr_stop: f64,
    #[arg(long)]
    snr_step: f64,
    /// Prepend a noise-free point.
    #[arg(long)]
    noise_free: bool,
    #[arg(long, default_value_t = 100)]
    target_errors: usize,
    #[arg(long, default_value_t = 100_000)]
    max_codewords: usize,
    #[arg(long, default_value_t = 1)]
    seed: u64,
    /// Worker threads (default: available parallelism).
    #[arg(long)]
    workers: Option<usize>,
    #[arg(long, default_value_t = 256)]
    batch: usize,
    /// Use K random bits instead of a CRC-protected payload.
    #[arg(long)]
    no_crc: bool,
    /// Leave out the wall-time and throughput columns.
    #[arg(long)]
    no_timing: bool,
    /// CSV destination (default: stdout).
    #[arg(long)]
    output: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct BenchArgs {
    #[command(flatten)]
    code: CodeArgs,
    #[command(flatten)]
    decoder: DecoderArgs,
    #[arg(long, default_value_t = 1)]
    batch: usize,
    #[arg(long, default_value_t = 20)]
    repetitions: usize,
    #[arg(long, default_value_t = 2)]
    warmup: usize,
    #[arg(long, default_value_t = 1)]
    workers: usize,
    #[arg(
        long,
        default_value_t = 2.0,
        allow_hyphen_values = true,
        conflicts_with = "noise_free"
    )]
    ebn0: f64,
    #[arg(long)]
    noise_free: bool,
    #[arg(long, default_value_t = 1)]
    seed: u64,
    /// Emit rows for both strategies.
    #[arg(long)]
    compare: bool,
    #[arg(long)]
    output: Option<PathBuf>,
}

/// Parses `argv` (program name first), runs the subcommand and returns the
/// process exit code. Results go to `out`, diagnostics to `err`.
pub fn dispatch<I, T>(argv: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(cli) => cli,
        Err(e) => {
            use clap::error::ErrorKind;
            if matches!(e.kind(), ErrorKind::DisplayHelp | ErrorKind::DisplayVersion) {
                let _ = write!(out, "{e}");
                return 0;
            }
            let text = e.to_string();
            let _ = writeln!(
                err,
                "{}",
                text.lines().next().unwrap_or("invalid arguments")
            );
            return EXIT_USAGE;
        }
    };
    let data_dir = cli.data_dir.as_deref();
    let result = match &cli.command {
        Command::Info(a) => info(a, data_dir, out),
        Command::Encode(a) => encode_cmd(a, data_dir, out),
        Command::Decode(a) => decode_cmd(a, data_dir, out, err),
        Command::Simulate(a) => simulate(a, data_dir, out),
        Command::Bench(a) => bench(a, data_dir, out),
    };
    match result {
        Ok(code) => code,
        Err(e) => {
            let _ = writeln!(err, "error: {e:#}");
            EXIT_ERROR
        }
    }
}

fn open_output<'a>(
    path: Option<&Path>,
    out: &'a mut dyn Write,
) -> anyhow::Result<Box<dyn Write + 'a>> {
    Ok(match path {
        Some(p) => Box::new(std::io::BufWriter::new(
            fs::File::create(p).with_context(|| format!("creating {}", p.display()))?,
        )),
        None => Box::new(out),
    })
}

fn read_bits(path: &Path) -> anyhow::Result<Vec<u8>> {
    let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    text.chars()
        .filter(|c| !c.is_whitespace())
        .map(|c| match c {
            '0' => Ok(0),
            '1' => Ok(1),
            _ => bail!("{}: unexpected character {c:?} in bit file", path.display()),
        })
        .collect()
}

fn write_bits(bits: &[u8], mut w: impl Write) -> anyhow::Result<()> {
    for b in bits {
        writeln!(w, "{b}")?;
    }
    w.flush()?;
    Ok(())
}

fn read_llrs(path: &Path) -> anyhow::Result<Vec<f64>> {
    let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    text.lines()
        .enumerate()
        .filter(|(_, l)| !l.trim().is_empty())
        .map(|(i, l)| {
            l.trim()
                .parse::<f64>()
                .with_context(|| format!("{}:{}: not a number", path.display(), i + 1))
        })
        .collect()
}

fn info(a: &InfoArgs, data_dir: Option<&Path>, out: &mut dyn Write) -> anyhow::Result<i32> {
    let (bg, params) = a.code.load(data_dir)?;
    let rho = a.rho.unwrap_or(a.precision.packed_lanes());
    let alpha = choose_alpha(&bg, rho, a.budget)?;
    let plans = [
        plan(
            &bg,
            params.rows_used,
            Strategy::HighThroughput,
            a.precision,
            rho,
            a.local_memory,
        )?,
        plan(
            &bg,
            params.rows_used,
            Strategy::LowLatency { alpha },
            a.precision,
            rho,
            a.local_memory,
        )?,
    ];
    if !a.csv {
        writeln!(
            out,
            "{} Z={} rows={}",
            a.code.bg, params.z, params.rows_used
        )?;
        writeln!(out, "K={}", params.k)?;
        writeln!(out, "N_c={}", params.n_c)?;
        writeln!(out, "N_tx={}", params.n_tx)?;
        writeln!(out, "R={} ({:.4})", params.rate, ratio_f64(params.rate))?;
        writeln!(
            out,
            "R_tx={} ({:.4})",
            params.transmitted_rate(),
            ratio_f64(params.transmitted_rate())
        )?;
        writeln!(out, "S_v={} B", plans[0].s_v)?;
        writeln!(out, "S_cv={} B", plans[0].s_cv)?;
        writeln!(
            out,
            "precision={} epsilon={} B rho={rho}",
            a.precision.name(),
            plans[0].epsilon
        )?;
        writeln!(out)?;
    }
    let mut w = csv::Writer::from_writer(&mut *out);
    w.write_record([
        "strategy",
        "rho",
        "alpha",
        "n_thread",
        "epsilon",
        "s_v",
        "s_cv",
        "local_budget",
        "posterior_fits_local",
        "fits_local",
    ])?;
    for p in &plans {
        w.write_record([
            p.strategy.name().to_string(),
            p.rho.to_string(),
            p.alpha.to_string(),
            p.n_thread.to_string(),
            p.epsilon.to_string(),
            p.s_v.to_string(),
            p.s_cv.to_string(),
            p.local_budget.to_string(),
            p.posterior_fits_local.to_string(),
            p.fits_local.to_string(),
        ])?;
    }
    w.flush()?;
    Ok(0)
}

fn ratio_f64(r: num_rational::Ratio<usize>) -> f64 {
    *r.numer() as f64 / *r.denom() as f64
}

fn encode_cmd(a: &EncodeArgs, data_dir: Option<&Path>, out: &mut dyn Write) -> anyhow::Result<i32> {
    let (bg, params) = a.code.load(data_dir)?;
    let mut rng = ChaCha8Rng::seed_from_u64(a.seed);
    let want = if a.crc {
        params.k.checked_sub(CRC24B.width())
    } else {
        Some(params.k)
    };
    let Some(want) = want else {
        bail!("K={} leaves no room for a 24-bit CRC", params.k);
    };
    let payload = match &a.input {
        Some(path) => read_bits(path)?,
        None => (0..want).map(|_| rng.random_range(0..2u8)).collect(),
    };
    ensure!(
        payload.len() == want,
        "message has {} bits, expected {want}",
        payload.len()
    );
    let message = if a.crc {
        CRC24B.attach(&payload)
    } else {
        payload
    };
    let cw = encode(&message, &bg, params.rows_used)?;

    if let Some(path) = &a.message_out {
        write_bits(&message, open_output(Some(path), out)?)?;
    }
    if let Some(path) = &a.llr_out {
        let tx = puncture(&cw);
        let llrs = match a.ebn0 {
            Some(db) => {
                let sigma = ebn0_to_sigma(db, params.k as f64 / params.n_tx as f64);
                let mut ch = AwgnChannel::new(sigma, rng.random())?;
                demap_llr(&ch.transmit::<f64>(&tx), sigma)?
            }
            None => demap_llr(&bpsk_modulate::<f64>(&tx), 1.0)?,
        };
        let mut w = open_output(Some(path), out)?;
        for l in &llrs {
            writeln!(w, "{l}")?;
        }
        w.flush()?;
    }
    write_bits(&cw.bits, open_output(a.output.as_deref(), out)?)?;
    Ok(0)
}

fn decode_cmd(
    a: &DecodeArgs,
    data_dir: Option<&Path>,
    out: &mut dyn Write,
    err: &mut dyn Write,
) -> anyhow::Result<i32> {
    let (bg, params) = a.code.load(data_dir)?;
    let cfg = DecodeConfig {
        trace: a.trace.is_some(),
        ..a.decoder.config(&bg, false)?
    };
    let llrs = read_llrs(&a.input)?;
    ensure!(
        llrs.len() == params.n_tx,
        "{} holds {} LLRs, expected N_tx={}",
        a.input.display(),
        llrs.len(),
        params.n_tx
    );
    let mut decoder = AnyDecoder::new(&bg, params.rows_used, &cfg)?;
    let quant = a.decoder.quant()?;
    let result = decoder
        .decode_channel(&[&llrs], &quant, &params, a.decoder.schedule())?
        .remove(0);
    write_bits(&result.bits, open_output(a.output.as_deref(), out)?)?;
    if let Some(path) = &a.trace {
        write_trace_csv(&result.trace, open_output(Some(path), out)?)?;
    }
    writeln!(
        err,
        "iterations={} success={} syndrome_weight={} crc={}",
        result.iterations,
        result.success,
        result.syndrome_weight,
        match result.crc_ok {
            Some(true) => "ok",
            Some(false) => "fail",
            None => "unchecked",
        }
    )?;
    Ok(if result.success {
        0
    } else {
        EXIT_NOT_CONVERGED
    })
}

fn snr_grid(a: &SimulateArgs) -> anyhow::Result<Vec<SnrPoint>> {
    ensure!(
        a.snr_step > 0.0 && a.snr_step.is_finite(),
        "--snr-step must be positive, got {}",
        a.snr_step
    );
    ensure!(
        a.snr_start.is_finite() && a.snr_stop >= a.snr_start,
        "--snr-stop ({}) must not be below --snr-start ({})",
        a.snr_stop,
        a.snr_start
    );
    let n = ((a.snr_stop - a.snr_start) / a.snr_step + 1e-9).floor() as usize + 1;
    ensure!(n <= 10_000, "SNR grid has {n} points");
    let mut grid = Vec::with_capacity(n + 1);
    if a.noise_free {
        grid.push(SnrPoint::NoiseFree);
    }
    grid.extend((0..n).map(|i| SnrPoint::EbN0Db(a.snr_start + i as f64 * a.snr_step)));
    Ok(grid)
}

fn default_workers() -> usize {
    std::thread::available_parallelism().map_or(1, |n| n.get())
}

fn simulate(a: &SimulateArgs, data_dir: Option<&Path>, out: &mut dyn Write) -> anyhow::Result<i32> {
    let points = snr_grid(a)?;
    let (bg, params) = a.code.load(data_dir)?;
    let decode = a.decoder.config(&bg, false)?;
    let cfg = SweepConfig {
        decode,
        quant: a.decoder.quant()?,
        schedule: a.decoder.schedule(),
        stop: StopRule {
            target_block_errors: a.target_errors,
            max_codewords: a.max_codewords,
        },
        seed: a.seed,
        attach_crc: !a.no_crc,
        workers: a.workers.unwrap_or_else(default_workers),
        batch: a.batch,
        data_dir: data_dir.map(Path::to_path_buf),
        ..SweepConfig::new(a.code.bg, a.code.z, params.rows_used, points)
    };
    let result = run_bler_sweep(&cfg)?;
    let w = open_output(a.output.as_deref(), out)?;
    result.write_csv(w, !a.no_timing)?;
    Ok(0)
}

fn bench(a: &BenchArgs, data_dir: Option<&Path>, out: &mut dyn Write) -> anyhow::Result<i32> {
    let (bg, params) = a.code.load(data_dir)?;
    let decode = a.decoder.config(&bg, a.compare)?;
    let mut configs = vec![decode];
    if a.compare {
        let other = match decode.strategy {
            Strategy::HighThroughput => Strategy::LowLatency {
                alpha: a.decoder.alpha(&bg)?,
            },
            Strategy::LowLatency { .. } => Strategy::HighThroughput,
        };
        configs.push(DecodeConfig {
            strategy: other,
            ..decode
        });
    }
    let quant = a.decoder.quant()?;
    let results = configs
        .into_iter()
        .map(|decode| {
            run_latency_bench(&BenchConfig {
                decode,
                quant,
                ebn0_db: (!a.noise_free).then_some(a.ebn0),
                batch: a.batch,
                repetitions: a.repetitions,
                warmup: a.warmup,
                workers: a.workers,
                seed: a.seed,
                data_dir: data_dir.map(Path::to_path_buf),
                ..BenchConfig::new(a.code.bg, a.code.z, params.rows_used)
            })
        })
        .collect::<crate::Result<Vec<_>>>()?;
    write_bench_csv(&results, open_output(a.output.as_deref(), out)?)?;
    Ok(0)
}
