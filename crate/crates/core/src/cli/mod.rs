//! Command-line pipeline: simulate, estimate, extract, test.
//!
//! Exit status is 0 on success, 1 when a stage fails and 2 when the
//! configuration or arguments are invalid.

pub mod config;
pub mod io;

use std::ffi::OsString;
use std::fmt;
use std::path::{Path, PathBuf};
use std::time::Instant;

use clap::{Args, Parser, Subcommand};

use crate::bitcore::BitString;
use crate::entropy::{assess, AssessOptions, EntropyReport};
use crate::error::Error;
use crate::extractor::{self, bit_digest, output_length, ExtractorParams};
use crate::mtj_sim::{calibrate_to, generate_raw};
use crate::stattests::{floor4, run_suite, SuiteReport, TestId};

pub use config::PipelineConfig;
pub use io::{read_bits, write_bits, BitFormat, Meta};

#[derive(Debug, Parser)]
#[command(name = "trng-extract", version, about = "MTJ random bit simulation, entropy estimation, Toeplitz extraction and testing")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
    #[command(flatten)]
    pub opts: GlobalOpts,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Generate raw bits from the simulated junction.
    Simulate,
    /// Estimate min-entropy of a raw bit file.
    Estimate { input: PathBuf },
    /// Hash a raw bit file down to nearly uniform bits.
    Extract { input: PathBuf, report: PathBuf },
    /// Run the statistical test suite on a bit file.
    Test { input: PathBuf },
    /// Run every stage and compare raw and extracted verdicts.
    Pipeline,
}

#[derive(Debug, Args, Default)]
pub struct GlobalOpts {
    /// Configuration file of `key = value` lines.
    #[arg(long, global = true, value_name = "PATH")]
    pub config: Option<PathBuf>,
    #[arg(long, global = true, value_name = "N")]
    pub bits: Option<usize>,
    #[arg(long, global = true, value_name = "DEC")]
    pub epsilon: Option<String>,
    #[arg(long, global = true, value_name = "N")]
    pub block_length: Option<usize>,
    #[arg(long, global = true, value_name = "DEC")]
    pub alpha: Option<f64>,
    /// Toeplitz seed, packed bits. OS entropy is used when absent.
    #[arg(long, global = true, value_name = "PATH")]
    pub seed_file: Option<PathBuf>,
    #[arg(long, global = true, value_name = "U64")]
    pub rng_seed: Option<u64>,
    #[arg(long, global = true, value_name = "packed|ascii")]
    pub format: Option<String>,
    /// Output file, or output directory for `pipeline`.
    #[arg(long, global = true, value_name = "PATH")]
    pub out: Option<PathBuf>,
    /// Print the resolved configuration and exit without touching files.
    #[arg(long, global = true)]
    pub dry_run: bool,
}

#[derive(Debug)]
pub enum Failure {
    /// Bad arguments or configuration, exit status 2.
    Config(String),
    /// A stage could not complete, exit status 1.
    Stage(String),
}

impl Failure {
    pub fn exit_code(&self) -> i32 {
        match self {
            Failure::Config(_) => 2,
            Failure::Stage(_) => 1,
        }
    }

    fn config(e: impl fmt::Display) -> Self {
        Failure::Config(e.to_string())
    }
}

impl fmt::Display for Failure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Failure::Config(m) => write!(f, "invalid configuration: {m}"),
            Failure::Stage(m) => f.write_str(m),
        }
    }
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure::Stage(e.to_string())
    }
}

type Outcome<T> = std::result::Result<T, Failure>;

/// Parses `args` (including the program name) and runs the command.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return e.exit_code();
        }
    };
    match dispatch(&cli) {
        Ok(()) => 0,
        Err(f) => {
            eprintln!("error: {f}");
            f.exit_code()
        }
    }
}

/// Loads the configuration file, then applies command-line overrides.
pub fn resolve_config(opts: &GlobalOpts) -> Outcome<PipelineConfig> {
    let mut cfg = match &opts.config {
        Some(p) => PipelineConfig::load(p).map_err(Failure::config)?,
        None => PipelineConfig::default(),
    };
    if let Some(v) = opts.bits {
        cfg.bits = v;
    }
    if let Some(v) = &opts.epsilon {
        cfg.epsilon = v.parse().map_err(Failure::config)?;
    }
    if let Some(v) = opts.block_length {
        cfg.block_length = v;
    }
    if let Some(v) = opts.alpha {
        cfg.alpha = v;
    }
    if let Some(v) = &opts.seed_file {
        cfg.seed_file = Some(v.clone());
    }
    if let Some(v) = opts.rng_seed {
        cfg.rng_seed = Some(v);
    }
    if let Some(v) = &opts.format {
        cfg.format = v.parse().map_err(Failure::config)?;
    }
    cfg.validate().map_err(Failure::config)?;
    cfg.resolve_seed()?;
    Ok(cfg)
}

fn with_suffix(path: &Path, suffix: &str) -> PathBuf {
    let mut s = path.as_os_str().to_owned();
    s.push(suffix);
    PathBuf::from(s)
}

fn dispatch(cli: &Cli) -> Outcome<()> {
    let cfg = resolve_config(&cli.opts)?;
    let out = cli.opts.out.clone();
    if cli.opts.dry_run {
        print!("{}", cfg.to_text());
        println!("# dry run: no files written");
        return Ok(());
    }
    match &cli.command {
        Command::Simulate => {
            let path = out.unwrap_or_else(|| cfg.out_dir.join("raw.bin"));
            cmd_simulate(&cfg, &path).map(drop)
        }
        Command::Estimate { input } => {
            let path = out.unwrap_or_else(|| with_suffix(input, ".entropy.txt"));
            cmd_estimate(&cfg, input, &path).map(drop)
        }
        Command::Extract { input, report } => {
            let path = out.unwrap_or_else(|| cfg.out_dir.join("extracted.bin"));
            cmd_extract(&cfg, input, report, &path).map(drop)
        }
        Command::Test { input } => {
            let path = out.unwrap_or_else(|| with_suffix(input, ".nist.txt"));
            cmd_test(&cfg, input, &path).map(drop)
        }
        Command::Pipeline => {
            let dir = out.unwrap_or_else(|| cfg.out_dir.clone());
            cmd_pipeline(&cfg, &dir).map(drop)
        }
    }
}

/// Simulates `cfg.bits` raw bits into `out` with a metadata sidecar.
pub fn cmd_simulate(cfg: &PipelineConfig, out: &Path) -> Outcome<BitString> {
    let device = if cfg.calibrate {
        calibrate_to(&cfg.device, &cfg.cycle, cfg.switch_probability)?
    } else {
        cfg.device
    };
    let start = Instant::now();
    let bits = generate_raw(cfg.bits, &cfg.cycle, &device, &cfg.noise, cfg.seed())?;
    let elapsed = start.elapsed().as_secs_f64();
    let mut meta = Meta::default();
    meta.insert("config_digest", cfg.digest());
    meta.insert("rng_seed", cfg.seed());
    meta.insert("v_critical", format!("{:?}", device.v_critical));
    write_bits(out, &bits, cfg.format, &meta)?;
    println!("rng_seed = {}", cfg.seed());
    println!("v_critical = {:.6} mV", device.v_critical);
    println!(
        "simulated {} bits in {elapsed:.2} s, ones fraction {:.6} -> {}",
        bits.len(),
        bits.count_ones() as f64 / bits.len() as f64,
        out.display()
    );
    Ok(bits)
}

/// Writes an entropy report for `input` to `out`. Fails with "insufficient
/// entropy" when the bound cannot support a single output bit at `cfg.epsilon`.
pub fn cmd_estimate(cfg: &PipelineConfig, input: &Path, out: &Path) -> Outcome<EntropyReport> {
    let (bits, _) = read_bits(input)?;
    let opts = AssessOptions {
        n_shuffles: cfg.n_shuffles,
        rng_seed: cfg.seed(),
        ..AssessOptions::default()
    };
    let report = assess(&bits, &opts)?;
    if let Some(dir) = out.parent().filter(|d| !d.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    }
    std::fs::write(out, report.to_text()).map_err(|e| Error::io(out, e))?;
    for w in &report.warnings {
        eprintln!("warning: {w}");
    }
    println!(
        "n = {}, h_min = {:.6} bits/bit ({}), k = {} -> {}",
        report.n_bits,
        report.h_min_per_bit,
        report.iid_verdict.as_str(),
        report.k_extractable,
        out.display()
    );
    if let Err(e) = output_length(report.k_extractable, &cfg.epsilon) {
        return Err(Failure::Stage(format!(
            "{e}; collect more raw bits or relax epsilon"
        )));
    }
    Ok(report)
}

#[derive(Debug, Clone)]
pub struct ExtractSummary {
    pub n: u64,
    pub k: u64,
    pub m: u64,
    pub seconds: f64,
    pub output: BitString,
}

fn load_seed(cfg: &PipelineConfig, need: usize, out: &Path) -> Outcome<BitString> {
    match &cfg.seed_file {
        Some(p) => {
            let (seed, _) = read_bits(p)?;
            if seed.len() < need {
                return Err(Failure::Stage(format!(
                    "seed file {} holds {} bits but n + m - 1 = {need} are needed",
                    p.display(),
                    seed.len()
                )));
            }
            Ok(seed)
        }
        None => {
            let seed = extractor::os_seed(need)?;
            let path = with_suffix(out, ".seed");
            eprintln!(
                "warning: no seed file given; drew {need} seed bits from the OS, so the output is \
                 only as uniform as the OS generator. Seed saved to {}",
                path.display()
            );
            write_bits(&path, &seed, BitFormat::Packed, &Meta::default())?;
            Ok(seed)
        }
    }
}

/// Extracts from `input` using the bound in `report_path`.
pub fn cmd_extract(
    cfg: &PipelineConfig,
    input: &Path,
    report_path: &Path,
    out: &Path,
) -> Outcome<ExtractSummary> {
    let (raw, _) = read_bits(input)?;
    let text = std::fs::read_to_string(report_path).map_err(|e| Error::io(report_path, e))?;
    let report = EntropyReport::from_text(&text)?;
    if report.n_bits != raw.len() as u64 {
        return Err(Failure::Stage(format!(
            "entropy report covers {} bits but {} holds {}",
            report.n_bits,
            input.display(),
            raw.len()
        )));
    }
    let mut meta = Meta::default();
    let start;
    let (n, k, m, output);
    if cfg.chunk_bits == 0 || cfg.chunk_bits >= raw.len() {
        let params = ExtractorParams::derive(raw.len() as u64, report.k_extractable, cfg.epsilon.clone())?;
        let seed = load_seed(cfg, params.r as usize, out)?;
        start = Instant::now();
        let ex = extractor::extract(&raw, &seed, &params)?;
        meta.insert("input_sha256", &ex.input_digest);
        meta.insert("seed_sha256", &ex.seed_digest);
        (n, k, m, output) = (params.n, params.k, params.m, ex.output);
    } else {
        let k_chunk = crate::entropy::extractable_bits(cfg.chunk_bits as u64, report.h_min_per_bit)?;
        let chunk = ExtractorParams::derive(cfg.chunk_bits as u64, k_chunk, cfg.epsilon.clone())?;
        let seed = load_seed(cfg, chunk.r as usize, out)?;
        start = Instant::now();
        let ex = extractor::extract_chunked(&raw, &seed, cfg.chunk_bits, report.h_min_per_bit, &cfg.epsilon)?;
        meta.insert("input_sha256", bit_digest(&raw));
        meta.insert("seed_sha256", bit_digest(&seed.slice(0, chunk.r as usize)));
        meta.insert("chunks", ex.chunks);
        meta.insert("chunk_bits", cfg.chunk_bits);
        meta.insert("chunk_k", chunk.k);
        meta.insert("chunk_m", chunk.m);
        meta.insert("discarded_bits", ex.discarded);
        (n, k, m, output) = (raw.len() as u64, report.k_extractable, ex.output.len() as u64, ex.output);
    }
    let seconds = start.elapsed().as_secs_f64();
    meta.insert("n", n);
    meta.insert("k", k);
    meta.insert("m", m);
    meta.insert("epsilon", &cfg.epsilon);
    meta.insert("h_min_per_bit", format!("{:?}", report.h_min_per_bit));
    meta.insert("config_digest", cfg.digest());
    write_bits(out, &output, cfg.format, &meta)?;
    let rate = |bits: u64| bits as f64 / seconds.max(1e-9) / 1e6;
    println!("n = {n}");
    println!("k = {k}");
    println!("m = {m}");
    println!("epsilon = {}", cfg.epsilon);
    println!(
        "throughput = {:.4} Mbit/s output ({:.4} Mbit/s input, {seconds:.3} s) -> {}",
        rate(m),
        rate(n),
        out.display()
    );
    Ok(ExtractSummary { n, k, m, seconds, output })
}

/// Runs the test suite on `input`; prints the table and writes the report to `out`.
pub fn cmd_test(cfg: &PipelineConfig, input: &Path, out: &Path) -> Outcome<SuiteReport> {
    let (bits, _) = read_bits(input)?;
    let report = run_suite(&bits, cfg.block_length, cfg.alpha)?;
    if let Some(dir) = out.parent().filter(|d| !d.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    }
    std::fs::write(out, report.to_text()).map_err(|e| Error::io(out, e))?;
    print!("{}", report.to_table());
    Ok(report)
}

#[derive(Debug, Clone)]
pub struct PipelineSummary {
    pub entropy: EntropyReport,
    pub extraction: ExtractSummary,
    pub raw_suite: SuiteReport,
    pub extracted_suite: SuiteReport,
}

impl PipelineSummary {
    pub fn to_text(&self) -> String {
        let verdict = |r: &SuiteReport, id: TestId| match r.result(id) {
            Some(t) if t.skipped() => "FAIL (skipped)".to_string(),
            Some(t) if t.pass => format!("PASS {:.4}", floor4(t.proportion)),
            Some(t) => format!("FAIL {:.4}", floor4(t.proportion)),
            None => "-".to_string(),
        };
        let mut s = format!(
            "n = {}, h_min = {:.6}, k = {}, m = {}\n{:<22} {:<18} {}\n",
            self.extraction.n,
            self.entropy.h_min_per_bit,
            self.extraction.k,
            self.extraction.m,
            "Test",
            "Raw",
            "Extracted"
        );
        for id in TestId::ALL {
            s += &format!(
                "{:<22} {:<18} {}\n",
                id.label(),
                verdict(&self.raw_suite, id),
                verdict(&self.extracted_suite, id)
            );
        }
        let overall = |r: &SuiteReport| if r.overall_pass { "PASS" } else { "FAIL" };
        s += &format!(
            "{:<22} {:<18} {}\n",
            "Overall",
            overall(&self.raw_suite),
            overall(&self.extracted_suite)
        );
        s
    }
}

/// All four stages into `dir`, halting at the first failure.
pub fn cmd_pipeline(cfg: &PipelineConfig, dir: &Path) -> Outcome<PipelineSummary> {
    std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let config_path = dir.join("config.txt");
    std::fs::write(&config_path, cfg.to_text()).map_err(|e| Error::io(&config_path, e))?;
    let raw = dir.join("raw.bin");
    let report = dir.join("raw.entropy.txt");
    let extracted = dir.join("extracted.bin");

    println!("== simulate");
    cmd_simulate(cfg, &raw)?;
    println!("== estimate");
    let entropy = cmd_estimate(cfg, &raw, &report)?;
    println!("== extract");
    let extraction = cmd_extract(cfg, &raw, &report, &extracted)?;
    println!("== test raw");
    let raw_suite = cmd_test(cfg, &raw, &dir.join("raw.nist.txt"))?;
    println!("== test extracted");
    let extracted_suite = cmd_test(cfg, &extracted, &dir.join("extracted.nist.txt"))?;

    let summary = PipelineSummary { entropy, extraction, raw_suite, extracted_suite };
    let text = summary.to_text();
    let path = dir.join("summary.txt");
    std::fs::write(&path, &text).map_err(|e| Error::io(&path, e))?;
    println!("== summary");
    print!("{text}");
    Ok(summary)
}
