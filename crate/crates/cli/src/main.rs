//! `kitty`: desk-scale experiments for the mixed-precision KV cache.
//!
//! Exit codes: 0 success, 1 validation failure, 2 I/O failure, 3 a checked
//! property did not hold.

use std::fmt::Write as _;
use std::fs;
use std::io::Write as _;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use kitty_core::quant::{fake_quantize_matrix, Axis};
use kitty_core::{
    analysis, attention, channel_scores, dequantize_key_page, dequantize_value_page,
    generate_synthetic, memory_report, oracle_attend, pack_key_page, pack_value_page, read_tensor,
    select_boost, write_tensor, Error, HeadMatrix, Heuristic, KittyCache, KittyConfig,
    SerializedPage, SyntheticSpec,
};

const VERSION: &str = env!("CARGO_PKG_VERSION");
const PASSTHROUGH_TOLERANCE: f64 = 1e-5;

#[derive(Debug)]
struct Failure {
    code: u8,
    msg: String,
}

impl Failure {
    fn validation(msg: impl Into<String>) -> Self {
        Self {
            code: 1,
            msg: msg.into(),
        }
    }

    fn io(msg: impl Into<String>) -> Self {
        Self {
            code: 2,
            msg: msg.into(),
        }
    }

    fn property(msg: impl Into<String>) -> Self {
        Self {
            code: 3,
            msg: msg.into(),
        }
    }
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        match e {
            Error::Io(_) => Failure::io(e.to_string()),
            _ => Failure::validation(e.to_string()),
        }
    }
}

type CliResult<T> = Result<T, Failure>;

#[derive(Parser)]
#[command(
    name = "kitty",
    version,
    about = "Mixed-precision KV-cache quantization experiments"
)]
struct Cli {
    #[command(subcommand)]
    cmd: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Write a seeded synthetic tensor with outlier channels (KTY1).
    Gen(GenArgs),
    /// Pack and dequantize every page of a tensor and compare to fake quantization.
    Roundtrip(RoundtripArgs),
    /// Pack one page of a tensor into a KTYP file.
    QuantizePage(QuantizePageArgs),
    /// Dequantize a KTYP page back into a KTY1 tensor.
    DequantizePage(DequantizePageArgs),
    /// Per-channel attention sensitivity to 2-bit key quantization.
    Sensitivity(SensitivityArgs),
    /// Attention error across boost fractions and selection heuristics.
    Sweep(SweepArgs),
    /// Prefill and decode synthetic tokens through the cache.
    SimulateDecode(SimulateArgs),
    /// Closed-form KV memory footprint at a given sequence length.
    MemReport(MemReportArgs),
}

#[derive(Args)]
struct GenArgs {
    #[arg(long, default_value_t = 1024)]
    tokens: usize,
    #[arg(long, default_value_t = 128)]
    channels: usize,
    /// Comma-separated outlier channel indices.
    #[arg(long, value_delimiter = ',')]
    outliers: Vec<usize>,
    #[arg(long, default_value_t = 8.0)]
    gain: f32,
    #[arg(long, default_value_t = 1.0)]
    std: f32,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct RoundtripArgs {
    /// Key tensor (tokens × channels).
    #[arg(long)]
    keys: PathBuf,
    #[arg(long, default_value_t = 0.125)]
    boost_fraction: f64,
    #[arg(long, default_value_t = 128)]
    group: usize,
    #[arg(long, default_value = "magnitude")]
    heuristic: Heuristic,
}

#[derive(Clone, Copy, ValueEnum)]
enum Kind {
    Key,
    Value,
}

#[derive(Args)]
struct QuantizePageArgs {
    /// Tensor whose first `group` rows form the page.
    #[arg(long)]
    input: PathBuf,
    #[arg(long, value_enum, default_value = "key")]
    kind: Kind,
    #[arg(long, default_value_t = 128)]
    group: usize,
    #[arg(long, default_value_t = 0.125)]
    boost_fraction: f64,
    #[arg(long, default_value = "magnitude")]
    heuristic: Heuristic,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct DequantizePageArgs {
    #[arg(long)]
    input: PathBuf,
    /// Written as tokens × channels.
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct SensitivityArgs {
    /// Keys, `kv_heads` blocks of L rows stacked vertically.
    #[arg(long)]
    keys: PathBuf,
    /// Queries, `q_heads` blocks of equal height stacked vertically.
    #[arg(long)]
    queries: PathBuf,
    #[arg(long, default_value_t = 1)]
    kv_heads: usize,
    #[arg(long, default_value_t = 1)]
    q_heads: usize,
    /// 2, 4, or 16 (identity).
    #[arg(long, default_value_t = 2)]
    bits: u8,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Clone, Copy, PartialEq, ValueEnum)]
enum HeuristicName {
    Magnitude,
    Random,
}

#[derive(Args)]
struct SweepArgs {
    /// Key tensor; synthetic keys are generated when absent.
    #[arg(long, requires = "queries")]
    keys: Option<PathBuf>,
    #[arg(long, requires = "keys")]
    queries: Option<PathBuf>,
    #[arg(long, default_value_t = 1)]
    kv_heads: usize,
    #[arg(long, default_value_t = 1)]
    q_heads: usize,
    #[arg(long, value_delimiter = ',', default_value = "0,0.125,0.25,0.5,1.0")]
    fractions: Vec<f64>,
    #[arg(
        long,
        value_enum,
        value_delimiter = ',',
        default_value = "magnitude,random"
    )]
    heuristics: Vec<HeuristicName>,
    /// Random-selection runs per fraction.
    #[arg(long, default_value_t = 20)]
    seeds: u64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Synthetic input shape.
    #[arg(long, default_value_t = 1024)]
    tokens: usize,
    #[arg(long, default_value_t = 128)]
    channels: usize,
    #[arg(long, default_value_t = 16)]
    query_tokens: usize,
    #[arg(long, value_delimiter = ',', default_value = "3,17")]
    outliers: Vec<usize>,
    #[arg(long)]
    out: Option<PathBuf>,
}

/// Config file plus per-field overrides.
#[derive(Args)]
struct ConfigArgs {
    /// `key = value` lines; flags below take precedence.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    sink: Option<usize>,
    #[arg(long)]
    local: Option<usize>,
    #[arg(long)]
    group: Option<usize>,
    #[arg(long)]
    head_dim: Option<usize>,
    #[arg(long)]
    kv_heads: Option<usize>,
    #[arg(long)]
    q_heads: Option<usize>,
    #[arg(long)]
    key_bits: Option<u8>,
    #[arg(long)]
    value_bits: Option<u8>,
    #[arg(long)]
    boost_fraction: Option<f64>,
    #[arg(long)]
    heuristic: Option<Heuristic>,
}

impl ConfigArgs {
    fn resolve(&self) -> CliResult<KittyConfig> {
        let mut cfg = match &self.config {
            Some(path) => {
                let text = fs::read_to_string(path)
                    .map_err(|e| Failure::io(format!("{}: {e}", path.display())))?;
                KittyConfig::parse(&text)?
            }
            None => KittyConfig::default(),
        };
        macro_rules! apply {
            ($($field:ident),*) => {$(
                if let Some(v) = self.$field.clone() {
                    cfg.$field = v;
                }
            )*};
        }
        apply!(
            sink,
            local,
            group,
            head_dim,
            kv_heads,
            q_heads,
            key_bits,
            value_bits,
            boost_fraction,
            heuristic
        );
        cfg.validate()?;
        Ok(cfg)
    }
}

#[derive(Clone, Copy, PartialEq, ValueEnum)]
enum Mode {
    Kitty,
    Passthrough,
    Oracle,
}

#[derive(Args)]
struct SimulateArgs {
    #[command(flatten)]
    cfg: ConfigArgs,
    #[arg(long, default_value_t = 100)]
    prompt_len: usize,
    #[arg(long, default_value_t = 256)]
    decode_steps: usize,
    #[arg(long, value_enum, default_value = "kitty")]
    mode: Mode,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Outlier key channels, applied to every KV head.
    #[arg(long, value_delimiter = ',', default_value = "3,17")]
    outliers: Vec<usize>,
    /// Compare against dense attention every this many steps (0 = never).
    #[arg(long, default_value_t = 1)]
    check_every: usize,
    /// Per-step CSV; stdout when absent.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Memory summary (`key: value` lines).
    #[arg(long)]
    summary: Option<PathBuf>,
    /// Attention outputs as a KTY1 tensor, one row per step.
    #[arg(long)]
    dump_outputs: Option<PathBuf>,
}

#[derive(Clone, Copy, ValueEnum)]
enum ReportFormat {
    Csv,
    Summary,
}

#[derive(Args)]
struct MemReportArgs {
    #[command(flatten)]
    cfg: ConfigArgs,
    #[arg(long, default_value_t = 8192)]
    length: usize,
    #[arg(long, value_enum, default_value = "csv")]
    format: ReportFormat,
    #[arg(long)]
    out: Option<PathBuf>,
}

fn header(seed: Option<u64>, config: &str) -> String {
    let seed = seed.map_or_else(|| "none".to_string(), |s| s.to_string());
    format!("# kitty {VERSION} seed={seed} config: {config}\n")
}

fn emit(out: Option<&Path>, text: &str) -> CliResult<()> {
    match out {
        Some(path) => write_file(path, text.as_bytes()),
        None => std::io::stdout()
            .write_all(text.as_bytes())
            .map_err(|e| Failure::io(e.to_string())),
    }
}

fn write_file(path: &Path, bytes: &[u8]) -> CliResult<()> {
    fs::write(path, bytes).map_err(|e| Failure::io(format!("{}: {e}", path.display())))
}

/// Any failure to read or decode an input file is an I/O failure.
fn load(path: &Path) -> CliResult<HeadMatrix> {
    read_tensor(path).map_err(|e| Failure::io(format!("{}: {e}", path.display())))
}

fn split_heads(m: &HeadMatrix, heads: usize, what: &str) -> CliResult<Vec<HeadMatrix>> {
    if heads == 0 || !m.rows().is_multiple_of(heads) {
        return Err(Failure::validation(format!(
            "{what}: {} rows do not split into {heads} heads",
            m.rows()
        )));
    }
    let n = m.rows() / heads;
    Ok((0..heads)
        .map(|h| m.slice_rows(h * n, (h + 1) * n))
        .collect())
}

fn cmd_gen(a: &GenArgs) -> CliResult<()> {
    let spec = SyntheticSpec {
        tokens: a.tokens,
        channels: a.channels,
        outlier_channels: a.outliers.clone(),
        outlier_gain: a.gain,
        base_std: a.std,
        seed: a.seed,
    };
    let m = generate_synthetic(&spec)?;
    write_file(&a.out, &m.to_bytes())?;
    let outliers: Vec<String> = a.outliers.iter().map(usize::to_string).collect();
    let cfg = format!(
        "tokens={}; channels={}; outliers={}; gain={}; std={}",
        a.tokens,
        a.channels,
        outliers.join(","),
        a.gain,
        a.std
    );
    emit(
        None,
        &format!("{}wrote {}\n", header(Some(a.seed), &cfg), a.out.display()),
    )
}

fn cmd_roundtrip(a: &RoundtripArgs) -> CliResult<()> {
    let keys = load(&a.keys)?;
    let g = a.group;
    if g == 0 || !g.is_multiple_of(4) || keys.cols() % 4 != 0 {
        return Err(Failure::validation(
            "group and channel count must be positive multiples of 4",
        ));
    }
    let pages = keys.rows() / g;
    let mut mismatched = 0usize;
    let mut max_err = 0.0f64;
    for p in 0..pages {
        let block = keys.slice_rows(p * g, (p + 1) * g);
        let sel = select_boost(
            &channel_scores(&block)?,
            a.boost_fraction,
            a.heuristic.derive(p as u64),
        )?;

        let key = dequantize_key_page(&pack_key_page(&block, &sel)?)?.transpose();
        let key_oracle =
            fake_quantize_matrix(&block, Axis::PerChannel, &sel.lane_bits(block.cols()))?;
        let value = dequantize_value_page(&pack_value_page(&block)?)?;
        let value_oracle = fake_quantize_matrix(&block, Axis::PerToken, &vec![2; g])?;

        for (got, want) in [(&key, &key_oracle), (&value, &value_oracle)] {
            let same = got
                .data()
                .iter()
                .zip(want.data())
                .all(|(x, y)| x.to_bits() == y.to_bits());
            mismatched += usize::from(!same);
        }
        for (x, y) in key.data().iter().zip(block.data()) {
            max_err = max_err.max((*x as f64 - *y as f64).abs());
        }
    }
    let cfg = format!(
        "group={g}; boost_fraction={}; heuristic={}",
        a.boost_fraction, a.heuristic
    );
    let mut out = header(None, &cfg);
    writeln!(out, "pages: {pages}").unwrap();
    writeln!(out, "skipped_tail_tokens: {}", keys.rows() - pages * g).unwrap();
    writeln!(out, "max_key_abs_error: {max_err:e}").unwrap();
    writeln!(out, "bit_exact: {}", mismatched == 0).unwrap();
    emit(None, &out)?;
    if mismatched > 0 {
        return Err(Failure::property(format!(
            "{mismatched} pages differ from the fake-quantization oracle"
        )));
    }
    Ok(())
}

fn cmd_quantize_page(a: &QuantizePageArgs) -> CliResult<()> {
    let m = load(&a.input)?;
    if m.rows() < a.group {
        return Err(Failure::validation(format!(
            "{} rows, page needs {}",
            m.rows(),
            a.group
        )));
    }
    let block = m.slice_rows(0, a.group);
    let page = match a.kind {
        Kind::Key => {
            let sel = select_boost(&channel_scores(&block)?, a.boost_fraction, a.heuristic)?;
            SerializedPage::Key(pack_key_page(&block, &sel)?)
        }
        Kind::Value => SerializedPage::Value(pack_value_page(&block)?),
    };
    let bytes = page.to_bytes();
    write_file(&a.out, &bytes)?;
    let cfg = format!(
        "group={}; boost_fraction={}; heuristic={}",
        a.group, a.boost_fraction, a.heuristic
    );
    emit(
        None,
        &format!(
            "{}wrote {} bytes to {}\n",
            header(None, &cfg),
            bytes.len(),
            a.out.display()
        ),
    )
}

fn cmd_dequantize_page(a: &DequantizePageArgs) -> CliResult<()> {
    let bytes =
        fs::read(&a.input).map_err(|e| Failure::io(format!("{}: {e}", a.input.display())))?;
    let page = SerializedPage::from_bytes(&bytes)
        .map_err(|e| Failure::io(format!("{}: {e}", a.input.display())))?;
    let m = match &page {
        SerializedPage::Key(p) => dequantize_key_page(p)?.transpose(),
        SerializedPage::Value(p) => dequantize_value_page(p)?,
    };
    write_tensor(&m, &a.out).map_err(|e| Failure::io(e.to_string()))
}

fn cmd_sensitivity(a: &SensitivityArgs) -> CliResult<()> {
    let keys = split_heads(&load(&a.keys)?, a.kv_heads, "keys")?;
    let queries = split_heads(&load(&a.queries)?, a.q_heads, "queries")?;
    let report = analysis::channel_sensitivity(&queries, &keys, a.bits)?;
    let cfg = format!(
        "kv_heads={}; q_heads={}; bits={}",
        a.kv_heads, a.q_heads, a.bits
    );
    emit(a.out.as_deref(), &(header(None, &cfg) + &report.to_csv()))
}

fn synthetic_heads(
    heads: usize,
    tokens: usize,
    channels: usize,
    outliers: &[usize],
    seed: u64,
) -> CliResult<Vec<HeadMatrix>> {
    (0..heads)
        .map(|h| {
            Ok(generate_synthetic(&SyntheticSpec {
                tokens,
                channels,
                outlier_channels: outliers.to_vec(),
                outlier_gain: 8.0,
                base_std: 1.0,
                seed: seed.wrapping_mul(1000).wrapping_add(h as u64),
            })?)
        })
        .collect()
}

fn cmd_sweep(a: &SweepArgs) -> CliResult<()> {
    let (queries, keys, source) = match (&a.keys, &a.queries) {
        (Some(k), Some(q)) => (
            split_heads(&load(q)?, a.q_heads, "queries")?,
            split_heads(&load(k)?, a.kv_heads, "keys")?,
            format!("keys={}; queries={}", k.display(), q.display()),
        ),
        _ => (
            synthetic_heads(
                a.q_heads,
                a.query_tokens,
                a.channels,
                &[],
                a.seed.wrapping_add(1 << 32),
            )?,
            synthetic_heads(a.kv_heads, a.tokens, a.channels, &a.outliers, a.seed)?,
            format!(
                "synthetic tokens={}; channels={}; query_tokens={}; outliers={:?}",
                a.tokens, a.channels, a.query_tokens, a.outliers
            ),
        ),
    };
    let magnitude = a.heuristics.contains(&HeuristicName::Magnitude);
    let seeds: Vec<u64> = if a.heuristics.contains(&HeuristicName::Random) {
        (0..a.seeds).map(|i| a.seed.wrapping_add(i)).collect()
    } else {
        Vec::new()
    };
    let rows = analysis::boost_sweep(&queries, &keys, &a.fractions, magnitude, &seeds)?;
    let cfg = format!(
        "{source}; kv_heads={}; q_heads={}; fractions={:?}; random_runs={}",
        a.kv_heads,
        a.q_heads,
        a.fractions,
        seeds.len()
    );
    emit(
        a.out.as_deref(),
        &(header(Some(a.seed), &cfg) + &analysis::sweep_csv(&rows)),
    )
}

/// Per-KV-head `tokens × D` keys and values, and per-step `h_q · D` queries.
struct Workload {
    keys: Vec<HeadMatrix>,
    values: Vec<HeadMatrix>,
    queries: HeadMatrix,
}

fn workload(
    cfg: &KittyConfig,
    tokens: usize,
    steps: usize,
    outliers: &[usize],
    seed: u64,
) -> CliResult<Workload> {
    if let Some(&c) = outliers.iter().find(|&&c| c >= cfg.head_dim) {
        return Err(Failure::validation(format!(
            "outlier channel {c} >= head_dim {}",
            cfg.head_dim
        )));
    }
    let keys = synthetic_heads(cfg.kv_heads, tokens, cfg.head_dim, outliers, seed)?;
    let values = synthetic_heads(
        cfg.kv_heads,
        tokens,
        cfg.head_dim,
        &[],
        seed.wrapping_add(1 << 40),
    )?;
    let queries = generate_synthetic(&SyntheticSpec {
        tokens: steps,
        channels: cfg.q_heads * cfg.head_dim,
        outlier_channels: Vec::new(),
        outlier_gain: 1.0,
        base_std: 1.0,
        seed: seed.wrapping_add(1 << 48),
    })?;
    Ok(Workload {
        keys,
        values,
        queries,
    })
}

fn token(heads: &[HeadMatrix], t: usize) -> Vec<f32> {
    heads
        .iter()
        .flat_map(|h| h.row(t).iter().copied())
        .collect()
}

fn cmd_simulate(a: &SimulateArgs) -> CliResult<()> {
    let mut cfg = a.cfg.resolve()?;
    if a.mode == Mode::Passthrough {
        cfg = cfg.passthrough();
    }
    if a.decode_steps == 0 {
        return Err(Failure::validation("decode-steps must be positive"));
    }
    let (p, n) = (a.prompt_len, a.decode_steps);
    let w = workload(&cfg, p + n, n, &a.outliers, a.seed)?;
    let d = cfg.head_dim;

    let mut cache = KittyCache::new(cfg.clone())?;
    if p > 0 {
        let pk: Vec<_> = w.keys.iter().map(|k| k.slice_rows(0, p)).collect();
        let pv: Vec<_> = w.values.iter().map(|v| v.slice_rows(0, p)).collect();
        cache.prefill(&pk, &pv)?;
    }
    let (key_events0, value_events0) = (cache.key_pack_events(), cache.value_pack_events());

    let mut csv = header(
        Some(a.seed),
        &format!("{cfg}; prompt_len={p}; decode_steps={n}"),
    );
    csv.push_str("step,total_tokens,key_pages,value_pages,key_pack_events,value_pack_events,max_rel_dev_vs_oracle\n");
    let mut dumped = Vec::with_capacity(if a.dump_outputs.is_some() {
        n * cfg.q_heads * d
    } else {
        0
    });
    let mut worst = 0.0f64;

    for step in 0..n {
        let t = p + step;
        let (k, v, q) = (token(&w.keys, t), token(&w.values, t), w.queries.row(step));
        let checked = a.check_every > 0 && (step % a.check_every == 0 || step + 1 == n);
        let oracle = || -> CliResult<Vec<f32>> {
            let keys: Vec<_> = w.keys.iter().map(|m| m.slice_rows(0, t + 1)).collect();
            let values: Vec<_> = w.values.iter().map(|m| m.slice_rows(0, t + 1)).collect();
            Ok(oracle_attend(&keys, &values, q, false)?.flatten())
        };
        let (output, dev) = match a.mode {
            Mode::Oracle => {
                cache.insert_token(&k, &v)?;
                (oracle()?, checked.then_some(0.0))
            }
            Mode::Kitty | Mode::Passthrough => {
                let out = cache.decode_step(&k, &v, q)?.flatten();
                let dev = if checked {
                    Some(attention::max_relative_deviation(&out, &oracle()?))
                } else {
                    None
                };
                (out, dev)
            }
        };
        if let Some(dev) = dev {
            worst = worst.max(dev);
        }
        if a.dump_outputs.is_some() {
            dumped.extend_from_slice(&output);
        }
        let h0 = &cache.heads()[0];
        writeln!(
            csv,
            "{step},{},{},{},{},{},{}",
            cache.total_tokens(),
            h0.key_pages.len(),
            h0.value_pages.len(),
            cache.key_pack_events() - key_events0,
            cache.value_pack_events() - value_events0,
            dev.map_or_else(String::new, |x| format!("{x:e}")),
        )
        .unwrap();
    }
    cache.check_invariants()?;

    emit(a.out.as_deref(), &csv)?;
    let report = cache.measured_memory();
    let mut summary = report.summary();
    writeln!(
        summary,
        "decode_key_pack_events: {}",
        cache.key_pack_events() - key_events0
    )
    .unwrap();
    writeln!(
        summary,
        "decode_value_pack_events: {}",
        cache.value_pack_events() - value_events0
    )
    .unwrap();
    writeln!(summary, "max_rel_dev_vs_oracle: {worst:e}").unwrap();
    match &a.summary {
        Some(path) => write_file(
            path,
            (header(Some(a.seed), &cfg.to_string()) + &summary).as_bytes(),
        )?,
        None => eprint!("{summary}"),
    }
    if let Some(path) = &a.dump_outputs {
        let m = HeadMatrix::new(n, cfg.q_heads * d, dumped)?;
        write_tensor(&m, path).map_err(|e| Failure::io(e.to_string()))?;
    }

    let bound = n.div_ceil(cfg.group) + 1;
    for (side, events) in [
        ("key", cache.key_pack_events() - key_events0),
        ("value", cache.value_pack_events() - value_events0),
    ] {
        if events > bound {
            return Err(Failure::property(format!(
                "{events} {side} pack events exceed the bound {bound}"
            )));
        }
    }
    if a.mode == Mode::Passthrough && worst > PASSTHROUGH_TOLERANCE {
        return Err(Failure::property(format!(
            "pass-through deviates from dense attention by {worst:e}"
        )));
    }
    Ok(())
}

fn cmd_mem_report(a: &MemReportArgs) -> CliResult<()> {
    let cfg = a.cfg.resolve()?;
    let report = memory_report(&cfg, a.length);
    let body = match a.format {
        ReportFormat::Csv => report.to_csv(),
        ReportFormat::Summary => report.summary(),
    };
    emit(
        a.out.as_deref(),
        &(header(None, &format!("{cfg}; length={}", a.length)) + &body),
    )
}

fn run(cli: &Cli) -> CliResult<()> {
    match &cli.cmd {
        Command::Gen(a) => cmd_gen(a),
        Command::Roundtrip(a) => cmd_roundtrip(a),
        Command::QuantizePage(a) => cmd_quantize_page(a),
        Command::DequantizePage(a) => cmd_dequantize_page(a),
        Command::Sensitivity(a) => cmd_sensitivity(a),
        Command::Sweep(a) => cmd_sweep(a),
        Command::SimulateDecode(a) => cmd_simulate(a),
        Command::MemReport(a) => cmd_mem_report(a),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 1 } else { 0 });
        }
    };
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("error: {}", f.msg);
            ExitCode::from(f.code)
        }
    }
}
