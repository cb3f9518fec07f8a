//! `nbpolar` command line: code construction, encoding, FER simulation,
//! hardware timing reports and sorter checks.
//!
//! Every setting can come from a flag, a `--config` file of `key=value`
//! lines (keys are the long flag names) or a default, in that order of
//! precedence. Exit codes: 0 success, 1 usage error, 2 runtime error.

mod config;

use std::fmt::Display;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::str::FromStr;

use clap::{Args, Parser, Subcommand, ValueEnum};
use rand::seq::SliceRandom;
use rand::Rng;
use serde_json::{json, Value};

use nbpolar::channel::frame_rng;
use nbpolar::fer::{to_csv_string, DecoderKind, FerConfig, RunManifest, Simulator, SplitOptions};
use nbpolar::polar::{
    construct_frozen_set, default_kernel, split_code_with_layout, ConstructionConfig, SplitLayout,
};
use nbpolar::sorter::{merge_sort_latency, snake_to_linear, sort2d};
use nbpolar::split::{SkimMetric, SkimPolicy};
use nbpolar::timing::{
    dm_frame_latency, st_frame_latency, synthetic_frozen_pattern, synthetic_level_pattern, ArchParams, TimingReport,
};
use nbpolar::{CodeSpec, GfContext, GfElement, KernelCoeffs, Precision, Quantizer};

use config::{ConfigFile, Uint};

const VERSION: &str = concat!("nbpolar-cli ", env!("CARGO_PKG_VERSION"));

#[derive(Debug)]
pub enum CliError {
    Usage(String),
    Runtime(String),
}

impl CliError {
    fn exit_code(&self) -> u8 {
        match self {
            CliError::Usage(_) => 1,
            CliError::Runtime(_) => 2,
        }
    }
}

impl Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            CliError::Usage(m) => write!(f, "usage error: {m}"),
            CliError::Runtime(m) => write!(f, "error: {m}"),
        }
    }
}

fn usage(e: impl Display) -> CliError {
    CliError::Usage(e.to_string())
}

fn runtime(e: impl Display) -> CliError {
    CliError::Runtime(e.to_string())
}

type Result<T> = std::result::Result<T, CliError>;

#[derive(Parser)]
#[command(name = "nbpolar", version, about = "Nonbinary polar codes: construction, decoding and hardware models")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Build a frozen set by genie-aided Monte-Carlo construction.
    Construct(ConstructArgs),
    /// Encode messages with a code file.
    Encode(EncodeArgs),
    /// Simulate frame error rates over AWGN and write a CSV.
    FerSim(FerArgs),
    /// Cycle breakdown and throughput of the hardware decoders.
    TimingReport(TimingArgs),
    /// Check the 2D sorter on random permutations.
    SorterCheck(SorterArgs),
}

/// Output plumbing shared by all subcommands.
#[derive(Args)]
struct Common {
    /// `key=value` settings file; flags override it.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Output file (stdout if omitted).
    #[arg(long, short)]
    output: Option<PathBuf>,
    /// Manifest path (default `<output>.manifest.json`, or stderr without `--output`).
    #[arg(long)]
    manifest: Option<PathBuf>,
}

#[derive(Args)]
struct ConstructArgs {
    #[arg(long)]
    n: Option<usize>,
    #[arg(long)]
    k: Option<usize>,
    #[arg(long)]
    q: Option<usize>,
    /// Field polynomial (decimal or 0x hex); default per field size.
    #[arg(long)]
    poly: Option<Uint>,
    /// Kernel coefficient alpha of [1 0; alpha beta]; default per field size.
    #[arg(long)]
    alpha: Option<Uint>,
    #[arg(long)]
    beta: Option<Uint>,
    /// Design Eb/N0 in dB [default: 2.0].
    #[arg(long)]
    design_ebn0: Option<f64>,
    /// Monte-Carlo trials [default: 2000].
    #[arg(long)]
    trials: Option<usize>,
    /// [default: 1]
    #[arg(long)]
    seed: Option<u64>,
    #[command(flatten)]
    common: Common,
}

#[derive(Args)]
struct EncodeArgs {
    #[arg(long)]
    code: Option<PathBuf>,
    /// Comma-separated message symbols; random messages are drawn when omitted.
    #[arg(long, value_delimiter = ',')]
    message: Option<Vec<u32>>,
    /// Random messages to encode [default: 1].
    #[arg(long)]
    count: Option<u64>,
    /// [default: 1]
    #[arg(long)]
    seed: Option<u64>,
    #[command(flatten)]
    common: Common,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Decoder {
    Sc,
    Scl,
    SNbscl,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Layout {
    Leaf,
    Root,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Policy {
    Conditioned,
    Local,
    Uniform,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Metric {
    SubDecoder,
    Global,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Arch {
    Dm,
    St,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Json,
    Csv,
}

macro_rules! value_enum_from_str {
    ($($t:ty),*) => {$(
        impl FromStr for $t {
            type Err = String;
            fn from_str(s: &str) -> std::result::Result<Self, String> {
                <$t as ValueEnum>::from_str(s, true)
            }
        }
    )*};
}

value_enum_from_str!(Decoder, Layout, Policy, Metric, Arch, Format);

#[derive(Args)]
struct FerArgs {
    /// Frozen-set file written by `construct`.
    #[arg(long)]
    code: Option<PathBuf>,
    /// [default: scl]
    #[arg(long)]
    decoder: Option<Decoder>,
    /// List size L [default: 4].
    #[arg(long)]
    list_size: Option<usize>,
    /// Split factor M (s-nbscl) [default: 2].
    #[arg(long)]
    m: Option<usize>,
    /// Skimming factor L_s (s-nbscl) [default: 16].
    #[arg(long)]
    skim: Option<usize>,
    /// Split layout (s-nbscl) [default: leaf].
    #[arg(long)]
    layout: Option<Layout>,
    /// Skimming policy (s-nbscl) [default: conditioned].
    #[arg(long)]
    skim_policy: Option<Policy>,
    /// Sub-path ranking metric (s-nbscl) [default: sub-decoder].
    #[arg(long)]
    skim_metric: Option<Metric>,
    /// Comma-separated Eb/N0 points in dB.
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    ebn0: Option<Vec<f64>>,
    /// [default: 1]
    #[arg(long)]
    seed: Option<u64>,
    /// Frame errors to collect per point [default: 100].
    #[arg(long)]
    min_errors: Option<u64>,
    /// Frame budget per point [default: 1000000].
    #[arg(long)]
    max_frames: Option<u64>,
    /// Worker threads, 0 = all cores; does not change results [default: 0].
    #[arg(long)]
    workers: Option<usize>,
    /// Fixed-point decoding (8-bit LLRVs, 16-bit metrics).
    #[arg(long)]
    quantized: bool,
    #[command(flatten)]
    common: Common,
}

#[derive(Args)]
struct TimingArgs {
    /// dm = direct-mapped list decoder, st = split-tree decoder [default: dm].
    #[arg(long)]
    arch: Option<Arch>,
    /// [default: 128]
    #[arg(long)]
    n: Option<usize>,
    /// [default: 64]
    #[arg(long)]
    k: Option<usize>,
    /// [default: 256]
    #[arg(long)]
    q: Option<usize>,
    /// [default: 4]
    #[arg(long)]
    list_size: Option<usize>,
    /// [default: 2]
    #[arg(long)]
    m: Option<usize>,
    /// [default: 16]
    #[arg(long)]
    skim: Option<usize>,
    /// Clock in MHz [default: 500].
    #[arg(long)]
    clock_mhz: Option<f64>,
    /// Take the frozen/level pattern from a code file.
    #[arg(long)]
    code: Option<PathBuf>,
    /// Explicit pattern, one character per symbol (dm) or level (st):
    /// `F`/`1` frozen or bypassed, `.`/`0` otherwise.
    #[arg(long)]
    pattern: Option<String>,
    /// st only: this many bypassed levels followed by reconciled ones.
    #[arg(long)]
    bypassed: Option<usize>,
    /// [default: json]
    #[arg(long)]
    format: Option<Format>,
    #[command(flatten)]
    common: Common,
}

#[derive(Args)]
struct SorterArgs {
    /// Comma-separated matrix widths [default: 2,4,8,16,32].
    #[arg(long, value_delimiter = ',')]
    widths: Option<Vec<usize>>,
    /// Random permutations per width [default: 1000].
    #[arg(long)]
    trials: Option<u64>,
    /// [default: 1]
    #[arg(long)]
    seed: Option<u64>,
    #[command(flatten)]
    common: Common,
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(1) } else { ExitCode::SUCCESS };
        }
    };
    let result = match cli.command {
        Command::Construct(a) => cmd_construct(a),
        Command::Encode(a) => cmd_encode(a),
        Command::FerSim(a) => cmd_fer(a),
        Command::TimingReport(a) => cmd_timing(a),
        Command::SorterCheck(a) => cmd_sorter(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("nbpolar: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}

fn write_output(path: Option<&Path>, text: &str) -> Result<()> {
    match path {
        Some(p) => std::fs::write(p, text).map_err(|e| runtime(format!("cannot write {}: {e}", p.display()))),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn emit_manifest(common: &Common, command: &str, body: Value) -> Result<()> {
    let manifest = json!({ "tool": VERSION, "command": command, "run": body });
    let text = serde_json::to_string_pretty(&manifest).map_err(runtime)? + "\n";
    let path = common.manifest.clone().or_else(|| {
        common.output.as_ref().map(|o| {
            let mut s = o.clone().into_os_string();
            s.push(".manifest.json");
            PathBuf::from(s)
        })
    });
    match path {
        Some(p) => std::fs::write(&p, text).map_err(|e| runtime(format!("cannot write {}: {e}", p.display()))),
        None => {
            eprint!("{text}");
            Ok(())
        }
    }
}

fn load_code(path: Option<PathBuf>, file: &ConfigFile) -> Result<(PathBuf, CodeSpec)> {
    let path = file.require(path, "code")?;
    let text = std::fs::read_to_string(&path)
        .map_err(|e| CliError::Usage(format!("cannot read code file {}: {e}", path.display())))?;
    let code = CodeSpec::from_frozen_file(&text)
        .map_err(|e| CliError::Usage(format!("bad code file {}: {e}", path.display())))?;
    Ok((path, code))
}

fn cmd_construct(a: ConstructArgs) -> Result<()> {
    let file = ConfigFile::load(a.common.config.as_deref())?;
    file.check_keys(&["n", "k", "q", "poly", "alpha", "beta", "design-ebn0", "trials", "seed", "output", "manifest"])?;
    let n: usize = file.require(a.n, "n")?;
    let k: usize = file.require(a.k, "k")?;
    let q: usize = file.require(a.q, "q")?;
    if q < 2 || !q.is_power_of_two() || q > 256 {
        return Err(usage(format!("field size q={q} must be a power of two in 2..=256")));
    }
    let r = q.trailing_zeros();
    let field = match file.opt(a.poly, "poly")? {
        Some(Uint(p)) => GfContext::new(r, p),
        None => GfContext::with_default_poly(r),
    }
    .map_err(usage)?;
    let dk = default_kernel(q);
    let alpha = file.get(a.alpha, "alpha", Uint(dk.alpha.0 as u32))?.0;
    let beta = file.get(a.beta, "beta", Uint(dk.beta.0 as u32))?.0;
    let kernel = KernelCoeffs::new(field.element(alpha).map_err(usage)?, field.element(beta).map_err(usage)?)
        .map_err(usage)?;
    let cfg = ConstructionConfig {
        design_ebn0: file.get(a.design_ebn0, "design-ebn0", 2.0)?,
        trials: file.get(a.trials, "trials", 2000)?,
        seed: file.get(a.seed, "seed", 1)?,
    };
    let code = construct_frozen_set(n, k, &field, kernel, &cfg).map_err(usage)?;
    let output: Option<PathBuf> = file.opt(a.common.output.clone(), "output")?;
    write_output(output.as_deref(), &code.to_frozen_file())?;
    let common = Common { output, manifest: file.opt(a.common.manifest, "manifest")?, config: a.common.config };
    emit_manifest(
        &common,
        "construct",
        json!({
            "n": n, "k": k, "q": q, "poly": field.poly(), "alpha": alpha, "beta": beta,
            "construction": cfg,
            "frozen": (0..n).filter(|&i| code.is_frozen(i)).collect::<Vec<_>>(),
        }),
    )
}

fn cmd_encode(a: EncodeArgs) -> Result<()> {
    let file = ConfigFile::load(a.common.config.as_deref())?;
    file.check_keys(&["code", "message", "count", "seed", "output", "manifest"])?;
    let (code_path, code) = load_code(a.code, &file)?;
    let seed: u64 = file.get(a.seed, "seed", 1)?;
    let explicit: Option<Vec<u32>> = file.list(a.message, "message")?;
    let messages: Vec<Vec<GfElement>> = match &explicit {
        Some(values) => {
            let msg = values.iter().map(|&v| code.field().element(v)).collect::<nbpolar::Result<Vec<_>>>().map_err(usage)?;
            vec![msg]
        }
        None => {
            let count: u64 = file.get(a.count, "count", 1)?;
            (0..count)
                .map(|t| {
                    let mut rng = frame_rng(seed, t);
                    (0..code.k()).map(|_| GfElement(rng.random_range(0..code.q()) as u8)).collect()
                })
                .collect()
        }
    };
    let join = |v: &[GfElement]| v.iter().map(|s| s.0.to_string()).collect::<Vec<_>>().join(" ");
    let mut text = String::new();
    for msg in &messages {
        let cw = code.encode_message(msg).map_err(usage)?;
        text.push_str(&format!("{} | {}\n", join(msg), join(&cw)));
    }
    let output: Option<PathBuf> = file.opt(a.common.output.clone(), "output")?;
    write_output(output.as_deref(), &text)?;
    let common = Common { output, manifest: file.opt(a.common.manifest, "manifest")?, config: a.common.config };
    emit_manifest(
        &common,
        "encode",
        json!({
            "code": code_path, "seed": seed, "message": explicit,
            "count": messages.len(),
        }),
    )
}

/// Resolved `fer-sim` settings.
fn fer_config(a: &FerArgs, file: &ConfigFile) -> Result<FerConfig> {
    let decoder: Decoder = file.get(a.decoder, "decoder", Decoder::Scl)?;
    let split_keys = [
        ("m", a.m.is_some()),
        ("skim", a.skim.is_some()),
        ("layout", a.layout.is_some()),
        ("skim-policy", a.skim_policy.is_some()),
        ("skim-metric", a.skim_metric.is_some()),
    ];
    if decoder != Decoder::SNbscl {
        if let Some((key, _)) = split_keys.iter().find(|(k, flag)| *flag || file.has(k)) {
            return Err(usage(format!("--{key} only applies to --decoder s-nbscl")));
        }
    }
    if decoder == Decoder::Sc && (a.list_size.is_some() || file.has("list-size")) {
        return Err(usage("--list-size does not apply to --decoder sc"));
    }
    let list_size = file.get(a.list_size, "list-size", 4)?;
    let kind = match decoder {
        Decoder::Sc => DecoderKind::Sc,
        Decoder::Scl => DecoderKind::Scl { list_size },
        Decoder::SNbscl => {
            DecoderKind::SNbscl { m: file.get(a.m, "m", 2)?, list_size, skim: file.get(a.skim, "skim", 16)? }
        }
    };
    let split = SplitOptions {
        layout: match file.get(a.layout, "layout", Layout::Leaf)? {
            Layout::Leaf => SplitLayout::Leaf,
            Layout::Root => SplitLayout::Root,
        },
        policy: match file.get(a.skim_policy, "skim-policy", Policy::Conditioned)? {
            Policy::Conditioned => SkimPolicy::Conditioned,
            Policy::Local => SkimPolicy::Local,
            Policy::Uniform => SkimPolicy::Uniform,
        },
        metric: match file.get(a.skim_metric, "skim-metric", Metric::SubDecoder)? {
            Metric::SubDecoder => SkimMetric::SubDecoder,
            Metric::Global => SkimMetric::Global,
        },
    };
    let precision =
        if file.switch(a.quantized, "quantized")? { Precision::Quantized(Quantizer::default()) } else { Precision::Float };
    Ok(FerConfig {
        decoder: kind,
        precision,
        split,
        seed: file.get(a.seed, "seed", 1)?,
        min_errors: file.get(a.min_errors, "min-errors", 100)?,
        max_frames: file.get(a.max_frames, "max-frames", 1_000_000)?,
        workers: file.get(a.workers, "workers", 0)?,
    })
}

fn cmd_fer(a: FerArgs) -> Result<()> {
    let file = ConfigFile::load(a.common.config.as_deref())?;
    file.check_keys(&[
        "code", "decoder", "list-size", "m", "skim", "layout", "skim-policy", "skim-metric", "ebn0", "seed",
        "min-errors", "max-frames", "workers", "quantized", "output", "manifest",
    ])?;
    let cfg = fer_config(&a, &file)?;
    let ebn0: Vec<f64> = file.list(a.ebn0.clone(), "ebn0")?.ok_or_else(|| usage("missing required setting --ebn0"))?;
    if ebn0.is_empty() || ebn0.iter().any(|x| !x.is_finite()) {
        return Err(usage("--ebn0 needs finite values"));
    }
    let (code_path, code) = load_code(a.code.clone(), &file)?;
    let sim = Simulator::new(&code, &cfg).map_err(usage)?;
    let points = sim.run(&ebn0).map_err(runtime)?;
    let output: Option<PathBuf> = file.opt(a.common.output.clone(), "output")?;
    write_output(output.as_deref(), &to_csv_string(&points))?;
    let common = Common { output, manifest: file.opt(a.common.manifest.clone(), "manifest")?, config: None };
    let run = serde_json::to_value(RunManifest::new(&code, &cfg, &ebn0)).map_err(runtime)?;
    emit_manifest(&common, "fer-sim", json!({ "code": code_path, "simulation": run }))
}

fn parse_pattern(s: &str) -> Result<Vec<bool>> {
    s.chars()
        .map(|c| match c {
            'F' | 'f' | '1' => Ok(true),
            '.' | '0' => Ok(false),
            other => Err(usage(format!("pattern character `{other}` (use F/1 or ./0)"))),
        })
        .collect()
}

fn timing_csv(r: &TimingReport) -> String {
    format!(
        "trellis_cycles,pm_cycles,recon_cycles,total_cycles,throughput_mbps,coded_bits,clock_hz,free_symbols,bypassed_levels,reconciled_levels\n\
         {},{},{},{},{:.4},{},{},{},{},{}\n",
        r.trellis_cycles,
        r.pm_cycles,
        r.recon_cycles,
        r.total_cycles,
        r.throughput_mbps,
        r.coded_bits,
        r.clock_hz,
        r.free_symbols,
        r.bypassed_levels,
        r.reconciled_levels
    )
}

fn cmd_timing(a: TimingArgs) -> Result<()> {
    let file = ConfigFile::load(a.common.config.as_deref())?;
    file.check_keys(&[
        "arch", "n", "k", "q", "list-size", "m", "skim", "clock-mhz", "code", "pattern", "bypassed", "format", "output",
        "manifest",
    ])?;
    let arch: Arch = file.get(a.arch, "arch", Arch::Dm)?;
    let code = match file.opt(a.code.clone(), "code")? {
        Some(p) => Some(load_code(Some(p), &file)?.1),
        None => None,
    };
    let (dn, dk, dq) = code.as_ref().map_or((128, 64, 256), |c| (c.len(), c.k(), c.q()));
    let params = ArchParams::new(
        file.get(a.n, "n", dn)?,
        file.get(a.k, "k", dk)?,
        file.get(a.q, "q", dq)?,
        file.get(a.list_size, "list-size", 4)?,
        file.get(a.m, "m", 2)?,
        file.get(a.skim, "skim", 16)?,
        file.get(a.clock_mhz, "clock-mhz", 500.0)? * 1e6,
    )
    .map_err(usage)?;
    if let Some(c) = &code {
        if (c.len(), c.k(), c.q()) != (params.n, params.k, params.q) {
            return Err(usage("--n/--k/--q disagree with the code file"));
        }
    }
    let pattern: Option<String> = file.opt(a.pattern.clone(), "pattern")?;
    let bypassed: Option<usize> = file.opt(a.bypassed, "bypassed")?;
    let sources = [code.is_some(), pattern.is_some(), bypassed.is_some()].iter().filter(|x| **x).count();
    if sources > 1 {
        return Err(usage("give at most one of --code, --pattern, --bypassed"));
    }
    let (report, source) = match arch {
        Arch::Dm => {
            if bypassed.is_some() {
                return Err(usage("--bypassed only applies to --arch st"));
            }
            let (pat, source) = match (&code, &pattern) {
                (Some(c), _) => ((0..c.len()).map(|i| c.is_frozen(i)).collect(), "code".to_string()),
                (_, Some(p)) => (parse_pattern(p)?, format!("pattern:{p}")),
                _ => (synthetic_frozen_pattern(params.n, params.k), "first N-K frozen".into()),
            };
            (dm_frame_latency(&params, &pat).map_err(usage)?, source)
        }
        Arch::St => {
            let levels = params.n / params.m;
            let (pat, source) = match (&code, &pattern, bypassed) {
                (Some(c), _, _) => {
                    let split = split_code_with_layout(c, params.m, SplitLayout::Leaf).map_err(usage)?;
                    (split.level_pattern(), "code".to_string())
                }
                (_, Some(p), _) => (parse_pattern(p)?, format!("pattern:{p}")),
                (_, _, Some(b)) if b <= levels => (synthetic_level_pattern(b, levels - b), format!("bypassed:{b}")),
                (_, _, Some(b)) => return Err(usage(format!("--bypassed {b} exceeds the {levels} levels"))),
                _ => return Err(usage("--arch st needs one of --code, --pattern, --bypassed")),
            };
            (st_frame_latency(&params, &pat).map_err(usage)?, source)
        }
    };
    let format: Format = file.get(a.format, "format", Format::Json)?;
    let text = match format {
        Format::Json => {
            let v = json!({ "arch": format!("{arch:?}").to_lowercase(), "params": params, "report": report });
            serde_json::to_string_pretty(&v).map_err(runtime)? + "\n"
        }
        Format::Csv => timing_csv(&report),
    };
    let output: Option<PathBuf> = file.opt(a.common.output.clone(), "output")?;
    write_output(output.as_deref(), &text)?;
    let common = Common { output, manifest: file.opt(a.common.manifest, "manifest")?, config: None };
    emit_manifest(
        &common,
        "timing-report",
        json!({ "arch": format!("{arch:?}").to_lowercase(), "params": params, "pattern": source }),
    )
}

fn cmd_sorter(a: SorterArgs) -> Result<()> {
    let file = ConfigFile::load(a.common.config.as_deref())?;
    file.check_keys(&["widths", "trials", "seed", "output", "manifest"])?;
    let widths: Vec<usize> = file.list(a.widths, "widths")?.unwrap_or_else(|| vec![2, 4, 8, 16, 32]);
    let trials: u64 = file.get(a.trials, "trials", 1000)?;
    let seed: u64 = file.get(a.seed, "seed", 1)?;
    let mut text = format!("{:>6} {:>8} {:>7} {:>7} {:>8} {:>9} {:>17}\n", "width", "values", "phases", "cycles", "trials", "unsorted", "merge_sort_cycles");
    let mut failures = 0;
    for (wi, &w) in widths.iter().enumerate() {
        if w < 2 || !w.is_power_of_two() {
            return Err(usage(format!("width {w} is not a power of two >= 2")));
        }
        let want: Vec<u32> = (0..(w * w) as u32).collect();
        let mut v = want.clone();
        let mut unsorted = 0u64;
        let mut report = None;
        for t in 0..trials {
            v.shuffle(&mut frame_rng(seed, ((wi as u64) << 40) | t));
            let r = sort2d(&v).map_err(runtime)?;
            if snake_to_linear(&r.sorted, w) != want {
                unsorted += 1;
            }
            report = Some((r.phases, r.cycles));
        }
        let (phases, cycles) = report.unwrap_or_else(|| {
            let r = sort2d(&want).expect("square power-of-two input");
            (r.phases, r.cycles)
        });
        let merge = merge_sort_latency(w * w).map_err(runtime)?;
        text.push_str(&format!("{w:>6} {:>8} {phases:>7} {cycles:>7} {trials:>8} {unsorted:>9} {merge:>17}\n", w * w));
        failures += unsorted;
    }
    let output: Option<PathBuf> = file.opt(a.common.output.clone(), "output")?;
    write_output(output.as_deref(), &text)?;
    let common = Common { output, manifest: file.opt(a.common.manifest, "manifest")?, config: None };
    emit_manifest(&common, "sorter-check", json!({ "widths": widths, "trials": trials, "seed": seed }))?;
    if failures > 0 {
        return Err(runtime(format!("{failures} permutations left unsorted")));
    }
    Ok(())
}
