//! BLER sweeps and latency/throughput benchmarks.
//!
//! Every codeword draws its payload and noise from its own generator, seeded
//! from `(seed, point, codeword index)`. Work is spread over a rayon pool
//! but outcomes are folded in codeword order, so results do not depend on
//! the worker count or batch size.

use std::fmt::Write as _;
use std::io::Write;
use std::path::PathBuf;
use std::time::{Duration, Instant};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use sha2::{Digest, Sha256};

use crate::basegraph::{code_params, load_basegraph_from, BaseGraph, BaseGraphId, CodeParams};
use crate::channel::{demap_llr, ebn0_to_sigma, AwgnChannel};
use crate::codec::{encode, puncture, CRC24B};
use crate::decoder::{AnyDecoder, DecodeConfig, EarlyStop, Schedule};
use crate::error::{Error, Result};
use crate::llr::QuantConfig;

/// Sigma used to demap noise-free symbols.
const NOISE_FREE_SIGMA: f64 = 1.0;

#[derive(Copy, Clone, Debug, PartialEq)]
pub enum SnrPoint {
    /// Symbols are exactly +-1.
    NoiseFree,
    EbN0Db(f64),
}

impl SnrPoint {
    fn label(&self) -> String {
        match self {
            SnrPoint::NoiseFree => "inf".to_string(),
            SnrPoint::EbN0Db(db) => format!("{db:.3}"),
        }
    }
}

/// Per-point stopping rule: whichever limit is hit first.
#[derive(Copy, Clone, Debug, PartialEq, Eq)]
pub struct StopRule {
    pub target_block_errors: usize,
    pub max_codewords: usize,
}

impl Default for StopRule {
    fn default() -> Self {
        StopRule {
            target_block_errors: 100,
            max_codewords: 100_000,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct SweepConfig {
    pub bg: BaseGraphId,
    pub z: usize,
    pub rows_used: usize,
    pub decode: DecodeConfig,
    pub quant: QuantConfig,
    pub schedule: Schedule,
    pub points: Vec<SnrPoint>,
    pub stop: StopRule,
    pub seed: u64,
    /// Payloads are `K - 24` random bits plus a CRC-24B when set.
    pub attach_crc: bool,
    pub workers: usize,
    /// Codewords dispatched per scheduling round.
    pub batch: usize,
    /// Shift-table directory overriding the embedded tables.
    pub data_dir: Option<PathBuf>,
}

impl SweepConfig {
    pub fn new(bg: BaseGraphId, z: usize, rows_used: usize, points: Vec<SnrPoint>) -> Self {
        SweepConfig {
            bg,
            z,
            rows_used,
            decode: DecodeConfig::default(),
            quant: QuantConfig::default(),
            schedule: Schedule::Layered,
            points,
            stop: StopRule::default(),
            seed: 1,
            attach_crc: true,
            workers: 1,
            batch: 256,
            data_dir: None,
        }
    }

    /// Hash of everything that determines the results (not `workers` or `batch`).
    pub fn config_hash(&self) -> String {
        let text = format!(
            "{:?}|{}|{}|{:?}|{:?}|{:?}|{:?}|{:?}|{}|{}",
            self.bg,
            self.z,
            self.rows_used,
            self.decode,
            self.quant,
            self.schedule,
            self.points,
            self.stop,
            self.seed,
            self.attach_crc
        );
        short_hash(&text)
    }
}

fn short_hash(text: &str) -> String {
    let digest = Sha256::digest(text.as_bytes());
    digest[..8].iter().fold(String::new(), |mut s, b| {
        let _ = write!(s, "{b:02x}");
        s
    })
}

/// splitmix64 finalizer.
fn mix(mut x: u64) -> u64 {
    x = x.wrapping_add(0x9E37_79B9_7F4A_7C15);
    x = (x ^ (x >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    x = (x ^ (x >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    x ^ (x >> 31)
}

fn codeword_seed(seed: u64, point: usize, index: usize) -> u64 {
    mix(mix(mix(seed) ^ point as u64) ^ index as u64)
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct FailedBlock {
    pub codeword: usize,
    /// Information-bit positions decoded wrongly.
    pub error_positions: Vec<usize>,
    pub iterations: usize,
}

#[derive(Clone, Debug, PartialEq)]
pub struct SweepPoint {
    pub snr: SnrPoint,
    /// `None` at the noise-free point.
    pub sigma: Option<f64>,
    pub codewords: usize,
    pub bit_errors: usize,
    pub block_errors: usize,
    /// Codewords whose decoder reported failure (may differ from block errors
    /// when the decoder converges to a wrong codeword).
    pub decoder_failures: usize,
    pub iterations: Vec<usize>,
    pub decode_time: Duration,
    pub failed: Vec<FailedBlock>,
}

impl SweepPoint {
    pub fn bler(&self) -> f64 {
        self.block_errors as f64 / self.codewords.max(1) as f64
    }

    pub fn ber(&self, k: usize) -> f64 {
        self.bit_errors as f64 / (self.codewords * k).max(1) as f64
    }

    pub fn mean_iterations(&self) -> f64 {
        self.iterations.iter().sum::<usize>() as f64 / self.iterations.len().max(1) as f64
    }

    pub fn median_iterations(&self) -> f64 {
        median(
            &self
                .iterations
                .iter()
                .map(|&i| i as f64)
                .collect::<Vec<_>>(),
        )
    }

    /// 95% Wilson score interval of the BLER.
    pub fn bler_interval(&self) -> (f64, f64) {
        wilson_interval(self.block_errors, self.codewords, 1.959_963_984_540_054)
    }

    pub fn time_per_codeword(&self) -> f64 {
        self.decode_time.as_secs_f64() / self.codewords.max(1) as f64
    }

    /// Coded bits decoded per second.
    pub fn throughput(&self, n_c: usize) -> f64 {
        let t = self.decode_time.as_secs_f64();
        if t > 0.0 {
            (n_c * self.codewords) as f64 / t
        } else {
            0.0
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct SweepResult {
    pub config_hash: String,
    pub seed: u64,
    pub bg: BaseGraphId,
    pub params: CodeParams,
    /// `K / N_tx`, the rate used for Eb/N0 conversion.
    pub rate_eff: f64,
    pub points: Vec<SweepPoint>,
}

const SWEEP_COLUMNS: [&str; 15] = [
    "config_hash",
    "seed",
    "bg",
    "z",
    "rows_used",
    "rate_eff",
    "ebn0_db",
    "sigma",
    "codewords",
    "bit_errors",
    "block_errors",
    "ber",
    "bler",
    "mean_iterations",
    "median_iterations",
];
const SWEEP_TIMING_COLUMNS: [&str; 2] = ["wall_time_per_codeword_us", "throughput_gcbps"];

impl SweepResult {
    /// One header row and one row per SNR point. Timing columns come last
    /// and can be left out for reproducibility comparisons.
    pub fn write_csv<W: Write>(&self, out: W, timing: bool) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        let mut header: Vec<&str> = SWEEP_COLUMNS.to_vec();
        if timing {
            header.extend(SWEEP_TIMING_COLUMNS);
        }
        w.write_record(&header)?;
        for p in &self.points {
            let mut row = vec![
                self.config_hash.clone(),
                self.seed.to_string(),
                self.bg.to_string(),
                self.params.z.to_string(),
                self.params.rows_used.to_string(),
                format!("{:.6}", self.rate_eff),
                p.snr.label(),
                format!("{:.6}", p.sigma.unwrap_or(0.0)),
                p.codewords.to_string(),
                p.bit_errors.to_string(),
                p.block_errors.to_string(),
                format!("{:.6e}", p.ber(self.params.k)),
                format!("{:.6e}", p.bler()),
                format!("{:.4}", p.mean_iterations()),
                format!("{:.1}", p.median_iterations()),
            ];
            if timing {
                row.push(format!("{:.3}", p.time_per_codeword() * 1e6));
                row.push(format!("{:.6}", p.throughput(self.params.n_c) / 1e9));
            }
            w.write_record(&row)?;
        }
        w.flush()?;
        Ok(())
    }
}

/// Wilson score interval for `k` successes out of `n` at normal quantile `z`.
pub fn wilson_interval(k: usize, n: usize, z: f64) -> (f64, f64) {
    if n == 0 {
        return (0.0, 1.0);
    }
    let n = n as f64;
    let p = k as f64 / n;
    let z2 = z * z;
    let denom = 1.0 + z2 / n;
    let centre = (p + z2 / (2.0 * n)) / denom;
    let half = z * (p * (1.0 - p) / n + z2 / (4.0 * n * n)).sqrt() / denom;
    ((centre - half).max(0.0), (centre + half).min(1.0))
}

fn median(values: &[f64]) -> f64 {
    if values.is_empty() {
        return 0.0;
    }
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    let n = v.len();
    if n % 2 == 1 {
        v[n / 2]
    } else {
        (v[n / 2 - 1] + v[n / 2]) / 2.0
    }
}

/// Nearest-rank percentile, `q` in `[0, 1]`.
fn percentile(values: &[f64], q: f64) -> f64 {
    if values.is_empty() {
        return 0.0;
    }
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    let rank = ((q * v.len() as f64).ceil() as usize).clamp(1, v.len());
    v[rank - 1]
}

/// One generated transmission.
struct Sample {
    message: Vec<u8>,
    channel: Vec<f64>,
}

fn generate(
    bg: &BaseGraph,
    params: &CodeParams,
    attach_crc: bool,
    sigma: Option<f64>,
    seed: u64,
) -> Result<Sample> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let message = if attach_crc {
        let payload: Vec<u8> = (0..params.k - CRC24B.width())
            .map(|_| rng.random_range(0..2u8))
            .collect();
        CRC24B.attach(&payload)
    } else {
        (0..params.k).map(|_| rng.random_range(0..2u8)).collect()
    };
    let cw = encode(&message, bg, params.rows_used)?;
    let tx = puncture(&cw);
    let channel = match sigma {
        Some(sigma) => {
            let mut ch = AwgnChannel::new(sigma, rng.random())?;
            demap_llr(&ch.transmit::<f64>(&tx), sigma)?
        }
        None => demap_llr(&crate::channel::bpsk_modulate::<f64>(&tx), NOISE_FREE_SIGMA)?,
    };
    Ok(Sample { message, channel })
}

struct Outcome {
    error_positions: Vec<usize>,
    iterations: usize,
    success: bool,
    time: Duration,
}

fn decode_group(
    decoder: &mut AnyDecoder,
    samples: &[Sample],
    quant: &QuantConfig,
    params: &CodeParams,
    schedule: Schedule,
) -> Result<Vec<Outcome>> {
    let channel: Vec<&[f64]> = samples.iter().map(|s| s.channel.as_slice()).collect();
    let start = Instant::now();
    let results = decoder.decode_channel(&channel, quant, params, schedule)?;
    let share = start.elapsed() / samples.len() as u32;
    Ok(results
        .into_iter()
        .zip(samples)
        .map(|(r, s)| Outcome {
            error_positions: r
                .bits
                .iter()
                .zip(&s.message)
                .enumerate()
                .filter(|(_, (a, b))| a != b)
                .map(|(i, _)| i)
                .collect(),
            iterations: r.iterations,
            success: r.success,
            time: share,
        })
        .collect())
}

fn build_pool(workers: usize) -> Result<rayon::ThreadPool> {
    if workers == 0 {
        return Err(Error::InvalidConfig("workers must be at least 1".into()));
    }
    rayon::ThreadPoolBuilder::new()
        .num_threads(workers)
        .build()
        .map_err(|e| Error::InvalidConfig(e.to_string()))
}

/// Runs encode, channel, demap, quantize and decode at every SNR point
/// until the stopping rule is met.
pub fn run_bler_sweep(cfg: &SweepConfig) -> Result<SweepResult> {
    if cfg.points.is_empty() {
        return Err(Error::InvalidConfig("SNR grid is empty".into()));
    }
    if cfg.stop.target_block_errors == 0 || cfg.stop.max_codewords == 0 || cfg.batch == 0 {
        return Err(Error::InvalidConfig(
            "stopping rule and batch size must be positive".into(),
        ));
    }
    cfg.decode.validate()?;
    cfg.quant.validate()?;
    if cfg.quant.precision != cfg.decode.precision {
        return Err(Error::InvalidConfig(
            "quantization and decoder precision differ".into(),
        ));
    }
    let bg = load_basegraph_from(cfg.bg, cfg.z, cfg.data_dir.as_deref())?;
    let params = code_params(&bg, cfg.rows_used)?;
    if cfg.attach_crc && params.k <= CRC24B.width() {
        return Err(Error::PayloadTooLong {
            payload: 0,
            crc: CRC24B.width(),
            k: params.k,
        });
    }
    let rate_eff = params.k as f64 / params.n_tx as f64;
    let pool = build_pool(cfg.workers)?;
    let lanes = AnyDecoder::new(&bg, cfg.rows_used, &cfg.decode)?.lanes();
    let batch = cfg.batch.div_ceil(lanes) * lanes;

    let mut points = Vec::with_capacity(cfg.points.len());
    for (pi, &snr) in cfg.points.iter().enumerate() {
        let sigma = match snr {
            SnrPoint::NoiseFree => None,
            SnrPoint::EbN0Db(db) => Some(ebn0_to_sigma(db, rate_eff)),
        };
        let mut point = SweepPoint {
            snr,
            sigma,
            codewords: 0,
            bit_errors: 0,
            block_errors: 0,
            decoder_failures: 0,
            iterations: Vec::new(),
            decode_time: Duration::ZERO,
            failed: Vec::new(),
        };

        let mut next = 0;
        'point: while next < cfg.stop.max_codewords {
            let end = (next + batch).min(cfg.stop.max_codewords);
            let groups: Vec<(usize, usize)> = (next..end)
                .step_by(lanes)
                .map(|s| (s, (s + lanes).min(end)))
                .collect();
            let outcomes: Vec<Vec<Outcome>> = pool.install(|| {
                groups
                    .par_iter()
                    .map_init(
                        || AnyDecoder::new(&bg, cfg.rows_used, &cfg.decode),
                        |decoder, &(s, e)| -> Result<Vec<Outcome>> {
                            let decoder = decoder
                                .as_mut()
                                .map_err(|e| Error::InvalidConfig(e.to_string()))?;
                            let samples = (s..e)
                                .map(|i| {
                                    generate(
                                        &bg,
                                        &params,
                                        cfg.attach_crc,
                                        sigma,
                                        codeword_seed(cfg.seed, pi, i),
                                    )
                                })
                                .collect::<Result<Vec<_>>>()?;
                            decode_group(decoder, &samples, &cfg.quant, &params, cfg.schedule)
                        },
                    )
                    .collect::<Result<Vec<_>>>()
            })?;

            for (index, outcome) in (next..end).zip(outcomes.into_iter().flatten()) {
                point.codewords += 1;
                point.iterations.push(outcome.iterations);
                point.decode_time += outcome.time;
                if !outcome.success {
                    point.decoder_failures += 1;
                }
                if !outcome.error_positions.is_empty() {
                    point.bit_errors += outcome.error_positions.len();
                    point.block_errors += 1;
                    point.failed.push(FailedBlock {
                        codeword: index,
                        error_positions: outcome.error_positions,
                        iterations: outcome.iterations,
                    });
                    if point.block_errors >= cfg.stop.target_block_errors {
                        break 'point;
                    }
                }
            }
            next = end;
        }
        points.push(point);
    }

    Ok(SweepResult {
        config_hash: cfg.config_hash(),
        seed: cfg.seed,
        bg: cfg.bg,
        params,
        rate_eff,
        points,
    })
}

#[derive(Clone, Debug, PartialEq)]
pub struct BenchConfig {
    pub bg: BaseGraphId,
    pub z: usize,
    pub rows_used: usize,
    /// Early stopping is forced off so every run does `max_iter` iterations.
    pub decode: DecodeConfig,
    pub quant: QuantConfig,
    /// Channel quality of the benchmark codewords; `None` for noise-free.
    pub ebn0_db: Option<f64>,
    /// Codewords decoded per timed run.
    pub batch: usize,
    pub repetitions: usize,
    /// Untimed runs before measuring.
    pub warmup: usize,
    pub workers: usize,
    pub seed: u64,
    pub data_dir: Option<PathBuf>,
}

impl BenchConfig {
    pub fn new(bg: BaseGraphId, z: usize, rows_used: usize) -> Self {
        BenchConfig {
            bg,
            z,
            rows_used,
            decode: DecodeConfig {
                max_iter: 10,
                ..DecodeConfig::default()
            },
            quant: QuantConfig::default(),
            ebn0_db: Some(2.0),
            batch: 1,
            repetitions: 20,
            warmup: 2,
            workers: 1,
            seed: 1,
            data_dir: None,
        }
    }
}

/// Summary of a latency distribution, seconds.
#[derive(Copy, Clone, Debug, PartialEq)]
pub struct LatencyStats {
    pub min: f64,
    pub median: f64,
    pub p99: f64,
}

impl LatencyStats {
    fn from_samples(samples: &[f64]) -> Self {
        LatencyStats {
            min: samples.iter().copied().fold(f64::INFINITY, f64::min),
            median: median(samples),
            p99: percentile(samples, 0.99),
        }
    }

    fn scaled(&self, f: f64) -> Self {
        LatencyStats {
            min: self.min * f,
            median: self.median * f,
            p99: self.p99 * f,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct BenchResult {
    pub config_hash: String,
    pub bg: BaseGraphId,
    pub params: CodeParams,
    pub decode: DecodeConfig,
    pub batch: usize,
    pub workers: usize,
    pub repetitions: usize,
    /// Iterations run by every codeword in every timed repetition.
    pub iterations: Vec<usize>,
    /// Wall time for a whole batch to complete.
    pub latency: LatencyStats,
    /// `latency / max_iter`.
    pub iteration_latency: LatencyStats,
    /// Coded bits per second at the median latency.
    pub throughput: f64,
}

/// Times repeated decodes of a fixed batch with early stopping disabled.
pub fn run_latency_bench(cfg: &BenchConfig) -> Result<BenchResult> {
    if cfg.batch == 0 || cfg.repetitions == 0 {
        return Err(Error::InvalidConfig(
            "batch and repetitions must be at least 1".into(),
        ));
    }
    let decode = DecodeConfig {
        early_stop: EarlyStop::None,
        trace: false,
        ..cfg.decode
    };
    decode.validate()?;
    let bg = load_basegraph_from(cfg.bg, cfg.z, cfg.data_dir.as_deref())?;
    let params = code_params(&bg, cfg.rows_used)?;
    let pool = build_pool(cfg.workers)?;
    let rate_eff = params.k as f64 / params.n_tx as f64;
    let sigma = cfg.ebn0_db.map(|db| ebn0_to_sigma(db, rate_eff));
    let samples = (0..cfg.batch)
        .map(|i| {
            generate(
                &bg,
                &params,
                params.k > CRC24B.width(),
                sigma,
                codeword_seed(cfg.seed, 0, i),
            )
        })
        .collect::<Result<Vec<_>>>()?;

    let mut decoders = (0..cfg.workers)
        .map(|_| AnyDecoder::new(&bg, cfg.rows_used, &decode))
        .collect::<Result<Vec<_>>>()?;
    let lanes = decoders[0].lanes();
    let groups: Vec<&[Sample]> = samples.chunks(lanes).collect();
    let per_worker = groups.len().div_ceil(cfg.workers);

    let mut run = || -> Result<(Duration, Vec<usize>)> {
        let start = Instant::now();
        let iterations = pool.install(|| {
            decoders
                .par_iter_mut()
                .zip(groups.par_chunks(per_worker))
                .map(|(decoder, mine)| -> Result<Vec<usize>> {
                    let mut its = Vec::new();
                    for group in mine {
                        let outcomes =
                            decode_group(decoder, group, &cfg.quant, &params, Schedule::Layered)?;
                        its.extend(outcomes.iter().map(|o| o.iterations));
                    }
                    Ok(its)
                })
                .collect::<Result<Vec<_>>>()
        })?;
        Ok((start.elapsed(), iterations.concat()))
    };

    for _ in 0..cfg.warmup {
        run()?;
    }
    let mut times = Vec::with_capacity(cfg.repetitions);
    let mut iterations = Vec::with_capacity(cfg.repetitions * cfg.batch);
    for _ in 0..cfg.repetitions {
        let (t, its) = run()?;
        times.push(t.as_secs_f64());
        iterations.extend(its);
    }
    let latency = LatencyStats::from_samples(&times);
    let throughput = if latency.median > 0.0 {
        (params.n_c * cfg.batch) as f64 / latency.median
    } else {
        0.0
    };
    Ok(BenchResult {
        config_hash: short_hash(&format!(
            "{:?}|{:?}|{:?}|{}",
            cfg.bg, cfg.z, decode, cfg.batch
        )),
        bg: cfg.bg,
        params,
        decode,
        batch: cfg.batch,
        workers: cfg.workers,
        repetitions: cfg.repetitions,
        iterations,
        iteration_latency: latency.scaled(1.0 / decode.max_iter as f64),
        latency,
        throughput,
    })
}

pub const BENCH_COLUMNS: [&str; 19] = [
    "config_hash",
    "bg",
    "z",
    "rows_used",
    "precision",
    "rho",
    "strategy",
    "alpha",
    "batch",
    "workers",
    "repetitions",
    "iterations",
    "latency_min_us",
    "latency_median_us",
    "latency_p99_us",
    "iter_latency_min_us",
    "iter_latency_median_us",
    "iter_latency_p99_us",
    "throughput_gcbps",
];

/// Writes benchmark rows, one per result.
pub fn write_bench_csv<W: Write>(results: &[BenchResult], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(BENCH_COLUMNS)?;
    for r in results {
        let us = |s: f64| format!("{:.3}", s * 1e6);
        w.write_record([
            r.config_hash.clone(),
            r.bg.to_string(),
            r.params.z.to_string(),
            r.params.rows_used.to_string(),
            r.decode.precision.name().to_string(),
            r.decode.rho.to_string(),
            r.decode.strategy.name().to_string(),
            r.decode.strategy.alpha().to_string(),
            r.batch.to_string(),
            r.workers.to_string(),
            r.repetitions.to_string(),
            r.decode.max_iter.to_string(),
            us(r.latency.min),
            us(r.latency.median),
            us(r.latency.p99),
            us(r.iteration_latency.min),
            us(r.iteration_latency.median),
            us(r.iteration_latency.p99),
            format!("{:.6}", r.throughput / 1e9),
        ])?;
    }
    w.flush()?;
    Ok(())
}
