//! Command-line harness: experiment orchestration over the cachecast
//! library with reproducible, flat-file outputs.
//!
//! Exit codes: 0 on success, 1 on configuration/validation problems,
//! 2 when a run violates an internal invariant (decode mismatch, rate
//! identity failure, infeasible schedule slot).

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

use cachecast::bounds::{bound_report, cutset_lower_bound, frac_to_f64, BoundReport, CutsetBranch};
use cachecast::cache::{decode, deliver, measured_rate, place, CachingScheme};
use cachecast::library::{DemandVector, SegmentRequest};
use cachecast::sim::{
    build_grid, clusterize, schedule_delivery, schedule_no_reuse, tdma_reuse_factor,
    throughput_measured, throughput_predicted, ProtocolParams, ReuseMode, TdmaSchedule,
};
use cachecast::{
    achievable_rate, draw_demands, validate_feasibility, Codeword, Error, FileLibrary, FilePattern,
    Frac, GridNetwork,
};

// ---------------------------------------------------------------------------
// CLI surface
// ---------------------------------------------------------------------------

#[derive(Parser)]
#[command(
    name = "cachecast",
    version,
    about = "Coded caching and delivery simulator for D2D grid networks"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run one scenario end to end (placement, delivery, decode
    /// verification, scheduling, measurement)
    Run(RunArgs),
    /// Evaluate the closed-form bounds at one or more cache sizes
    Bounds(BoundsArgs),
    /// Exhaustively check decode, rate and bound invariants over every
    /// demand vector of a small instance
    Verify(VerifyArgs),
    /// Sweep the cache size and emit one bound row per operating point
    Sweep(SweepArgs),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
enum ScenarioArg {
    /// The 3-node, 3-file, M=2 reference instance
    #[value(name = "example-3user")]
    Example3User,
    /// Network-wide delivery, one active link at a time
    #[value(name = "no-reuse")]
    NoReuse,
    /// Clustered delivery with TDMA spatial reuse
    #[value(name = "reuse")]
    Reuse,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
enum PatternArg {
    #[value(name = "round-robin")]
    RoundRobin,
    Uniform,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
enum FormatArg {
    Json,
    Csv,
}

#[derive(Args)]
struct RunArgs {
    /// Scenario to run (config file key: scenario)
    #[arg(long, value_enum)]
    scenario: Option<ScenarioArg>,
    /// Flat key=value config file; explicit flags override it
    #[arg(long)]
    config: Option<PathBuf>,
    /// Number of nodes
    #[arg(short, long)]
    n: Option<usize>,
    /// Library size in files
    #[arg(short, long)]
    m: Option<usize>,
    /// Per-node cache size in files (integer, fraction like 3/2, or decimal)
    #[arg(short = 'M', long = "cache", value_name = "M")]
    mem: Option<String>,
    /// Packets per file
    #[arg(short = 'L', long = "packets", value_name = "L")]
    l: Option<usize>,
    /// Requested segment length in packets
    #[arg(long = "l-prime", value_name = "L'")]
    l_prime: Option<usize>,
    /// Bits per packet (multiple of 8)
    #[arg(short = 'B', long = "packet-bits", value_name = "B")]
    b: Option<usize>,
    /// Cluster size for the reuse scenario (default: smallest feasible)
    #[arg(long = "g-c", value_name = "G_C")]
    g_c: Option<usize>,
    /// Interference guard parameter
    #[arg(long)]
    delta: Option<f64>,
    /// Link rate in bits per channel use
    #[arg(long = "c-r", value_name = "C_R")]
    c_r: Option<u64>,
    /// Seed for library contents and demand draws
    #[arg(long)]
    seed: Option<u64>,
    /// File-request pattern
    #[arg(long, value_enum)]
    pattern: Option<PatternArg>,
    /// Report destination (stdout when omitted)
    #[arg(long)]
    output: Option<PathBuf>,
    /// Report format
    #[arg(long, value_enum)]
    format: Option<FormatArg>,
    /// Write the codeword log as JSON lines
    #[arg(long)]
    dump_codewords: Option<PathBuf>,
    /// Write the schedule trace as JSON lines
    #[arg(long)]
    dump_schedule: Option<PathBuf>,
}

#[derive(Args)]
struct BoundsArgs {
    #[arg(short, long)]
    n: usize,
    #[arg(short, long)]
    m: usize,
    /// Cache size (defaults to every integer 1..=m)
    #[arg(short = 'M', long = "cache", value_name = "M")]
    mem: Option<String>,
    /// Comma-separated list of cache sizes
    #[arg(long = "m-values", value_name = "M,M,...")]
    m_values: Option<String>,
    #[arg(long, value_enum, default_value = "json")]
    format: FormatArg,
    #[arg(long)]
    output: Option<PathBuf>,
}

#[derive(Args)]
struct VerifyArgs {
    #[arg(short, long)]
    n: usize,
    #[arg(short, long)]
    m: usize,
    #[arg(short = 'M', long = "cache", value_name = "M")]
    mem: String,
    /// Packets per file used for the generated library
    #[arg(short = 'L', long = "packets", default_value_t = 2)]
    l: usize,
    #[arg(long, default_value_t = 99)]
    seed: u64,
}

#[derive(Args)]
struct SweepArgs {
    #[arg(short, long)]
    n: usize,
    #[arg(short, long)]
    m: usize,
    /// Comma-separated cache sizes; defaults to the integers 1..=m
    #[arg(long = "m-values", value_name = "M,M,...")]
    m_values: Option<String>,
    #[arg(long, value_enum, default_value = "csv")]
    format: FormatArg,
    #[arg(long)]
    output: Option<PathBuf>,
}

// ---------------------------------------------------------------------------
// Error handling and exit codes
// ---------------------------------------------------------------------------

enum CliError {
    /// Bad input: exit 1.
    Validation(String),
    /// A run broke an invariant: exit 2.
    Invariant(String),
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        match e {
            Error::Integrity(_) | Error::DecodeIncomplete { .. } => {
                CliError::Invariant(e.to_string())
            }
            other => CliError::Validation(other.to_string()),
        }
    }
}

type CliResult<T> = Result<T, CliError>;

fn validation<T>(msg: impl Into<String>) -> CliResult<T> {
    Err(CliError::Validation(msg.into()))
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            // help and version requests are successes; anything else is a
            // validation failure
            if e.use_stderr() {
                eprintln!("{e}");
                return ExitCode::from(1);
            }
            print!("{e}");
            return ExitCode::SUCCESS;
        }
    };
    let result = match cli.command {
        Command::Run(args) => cmd_run(args),
        Command::Bounds(args) => cmd_bounds(args),
        Command::Verify(args) => cmd_verify(args),
        Command::Sweep(args) => cmd_sweep(args),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(CliError::Validation(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(1)
        }
        Err(CliError::Invariant(msg)) => {
            eprintln!("invariant violation: {msg}");
            ExitCode::from(2)
        }
    }
}

// ---------------------------------------------------------------------------
// Configuration
// ---------------------------------------------------------------------------

#[derive(Clone, Debug)]
struct ExperimentConfig {
    scenario: ScenarioArg,
    n: usize,
    m: usize,
    mem: Frac,
    l: usize,
    l_prime: usize,
    b: usize,
    g_c: Option<usize>,
    delta: f64,
    c_r: u64,
    seed: u64,
    pattern: FilePattern,
    format: FormatArg,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            scenario: ScenarioArg::Example3User,
            n: 3,
            m: 3,
            mem: Frac::from_integer(2),
            l: 3,
            l_prime: 1,
            b: 48,
            g_c: None,
            delta: 0.4,
            c_r: 1,
            seed: 7,
            pattern: FilePattern::RoundRobin,
            format: FormatArg::Json,
        }
    }
}

/// Parses "2", "3/2" or "1.5" into an exact rational.
fn parse_frac(s: &str) -> CliResult<Frac> {
    let s = s.trim();
    let fail = || CliError::Validation(format!("cannot parse '{s}' as a rational cache size"));
    if let Some((num, den)) = s.split_once('/') {
        let num: i64 = num.trim().parse().map_err(|_| fail())?;
        let den: i64 = den.trim().parse().map_err(|_| fail())?;
        if den == 0 {
            return validation("cache size denominator is zero");
        }
        return Ok(Frac::new(num, den));
    }
    if let Some((whole, decimals)) = s.split_once('.') {
        let whole: i64 = if whole.is_empty() {
            0
        } else {
            whole.parse().map_err(|_| fail())?
        };
        if decimals.is_empty()
            || decimals.len() > 9
            || !decimals.bytes().all(|b| b.is_ascii_digit())
        {
            return Err(fail());
        }
        let scale = 10i64.pow(decimals.len() as u32);
        let frac_part: i64 = decimals.parse().map_err(|_| fail())?;
        return Ok(Frac::from_integer(whole) + Frac::new(frac_part, scale));
    }
    let whole: i64 = s.parse().map_err(|_| fail())?;
    Ok(Frac::from_integer(whole))
}

fn parse_config_file(path: &Path) -> CliResult<BTreeMap<String, String>> {
    let text = fs::read_to_string(path)
        .map_err(|e| CliError::Validation(format!("cannot read {}: {e}", path.display())))?;
    let mut map = BTreeMap::new();
    for (line_no, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let Some((key, value)) = line.split_once('=') else {
            return validation(format!(
                "{}:{}: expected 'key = value', got '{raw}'",
                path.display(),
                line_no + 1
            ));
        };
        map.insert(key.trim().to_string(), value.trim().to_string());
    }
    Ok(map)
}

fn resolve_config(args: &RunArgs) -> CliResult<ExperimentConfig> {
    let mut cfg = ExperimentConfig::default();
    if let Some(path) = &args.config {
        let map = parse_config_file(path)?;
        for (key, value) in &map {
            let bad = || CliError::Validation(format!("config key {key}: bad value '{value}'"));
            match key.as_str() {
                "scenario" => {
                    cfg.scenario = match value.as_str() {
                        "example-3user" => ScenarioArg::Example3User,
                        "no-reuse" => ScenarioArg::NoReuse,
                        "reuse" => ScenarioArg::Reuse,
                        other => return validation(format!("config: unknown scenario '{other}'")),
                    }
                }
                "n" => cfg.n = value.parse().map_err(|_| bad())?,
                "m" => cfg.m = value.parse().map_err(|_| bad())?,
                "M" => cfg.mem = parse_frac(value)?,
                "L" => cfg.l = value.parse().map_err(|_| bad())?,
                "l_prime" => cfg.l_prime = value.parse().map_err(|_| bad())?,
                "B" => cfg.b = value.parse().map_err(|_| bad())?,
                "g_c" => cfg.g_c = Some(value.parse().map_err(|_| bad())?),
                "delta" => cfg.delta = value.parse().map_err(|_| bad())?,
                "c_r" => cfg.c_r = value.parse().map_err(|_| bad())?,
                "seed" => cfg.seed = value.parse().map_err(|_| bad())?,
                "pattern" => {
                    cfg.pattern = match value.as_str() {
                        "round-robin" => FilePattern::RoundRobin,
                        "uniform" => FilePattern::Uniform,
                        other => return validation(format!("config: unknown pattern '{other}'")),
                    }
                }
                "format" => {
                    cfg.format = match value.as_str() {
                        "json" => FormatArg::Json,
                        "csv" => FormatArg::Csv,
                        other => return validation(format!("config: unknown format '{other}'")),
                    }
                }
                other => return validation(format!("config: unknown key '{other}'")),
            }
        }
    }
    if let Some(v) = args.scenario {
        cfg.scenario = v;
    }
    if let Some(v) = args.n {
        cfg.n = v;
    }
    if let Some(v) = args.m {
        cfg.m = v;
    }
    if let Some(v) = &args.mem {
        cfg.mem = parse_frac(v)?;
    }
    if let Some(v) = args.l {
        cfg.l = v;
    }
    if let Some(v) = args.l_prime {
        cfg.l_prime = v;
    }
    if let Some(v) = args.b {
        cfg.b = v;
    }
    if let Some(v) = args.g_c {
        cfg.g_c = Some(v);
    }
    if let Some(v) = args.delta {
        cfg.delta = v;
    }
    if let Some(v) = args.c_r {
        cfg.c_r = v;
    }
    if let Some(v) = args.seed {
        cfg.seed = v;
    }
    if let Some(v) = args.pattern {
        cfg.pattern = match v {
            PatternArg::RoundRobin => FilePattern::RoundRobin,
            PatternArg::Uniform => FilePattern::Uniform,
        };
    }
    if let Some(v) = args.format {
        cfg.format = v;
    }
    Ok(cfg)
}

// ---------------------------------------------------------------------------
// run
// ---------------------------------------------------------------------------

#[derive(Serialize)]
struct RunReport {
    scenario: String,
    n: usize,
    m: usize,
    mem: f64,
    mem_exact: String,
    l: usize,
    l_prime: usize,
    b: usize,
    seed: u64,
    pattern: String,
    g_c: Option<usize>,
    delta: Option<f64>,
    reuse_k: Option<u64>,
    c_r: u64,
    demands: Vec<DemandVector>,
    codeword_count: usize,
    decode_verified: bool,
    measured_rate: f64,
    measured_rate_exact: String,
    bounds: BoundReport,
    t_s: u64,
    throughput_measured: JsonThroughput,
    throughput_predicted: JsonThroughput,
    /// Per-cluster share of the link rate under TDMA; compare against the
    /// wide-range link rate to judge whether reuse pays off.
    c_r_over_k: Option<f64>,
}

/// Throughput for reports: a plain number, or the explicit string "inf"
/// for the all-cached case (JSON has no infinity literal).
#[derive(Clone, Copy)]
struct JsonThroughput(f64);

impl serde::Serialize for JsonThroughput {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        if self.0.is_finite() {
            s.serialize_f64(self.0)
        } else {
            s.serialize_str("inf")
        }
    }
}

impl std::fmt::Display for JsonThroughput {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{}", self.0)
    }
}

impl RunReport {
    const CSV_HEADER: &'static str = "n,m,M,g_c,delta,K,C_r,t_s,T_measured,T_predicted";

    fn to_csv(&self) -> String {
        let opt_u = |v: Option<usize>| v.map_or(String::new(), |x| x.to_string());
        let opt_f = |v: Option<f64>| v.map_or(String::new(), |x| x.to_string());
        let opt_k = |v: Option<u64>| v.map_or(String::new(), |x| x.to_string());
        format!(
            "{}\n{},{},{},{},{},{},{},{},{},{}\n",
            Self::CSV_HEADER,
            self.n,
            self.m,
            self.mem,
            opt_u(self.g_c),
            opt_f(self.delta),
            opt_k(self.reuse_k),
            self.c_r,
            self.t_s,
            self.throughput_measured,
            self.throughput_predicted
        )
    }
}

fn write_or_print(output: Option<&Path>, contents: &str) -> CliResult<()> {
    match output {
        Some(path) => fs::write(path, contents)
            .map_err(|e| CliError::Validation(format!("cannot write {}: {e}", path.display()))),
        None => {
            print!("{contents}");
            Ok(())
        }
    }
}

fn dump_codewords(path: &Path, batches: &[(Option<usize>, &[Codeword])]) -> CliResult<()> {
    #[derive(Serialize)]
    struct ConstituentLine<'a> {
        file: usize,
        packet: usize,
        group: &'a [usize],
        member: usize,
    }
    #[derive(Serialize)]
    struct CodewordLine<'a> {
        #[serde(skip_serializing_if = "Option::is_none")]
        cluster: Option<usize>,
        sender: usize,
        #[serde(rename = "subset_S")]
        subset_s: &'a [usize],
        constituent_ids: Vec<ConstituentLine<'a>>,
        payload_hex: String,
    }
    let mut out = String::new();
    for (cluster, codewords) in batches {
        for cw in codewords.iter() {
            let line = CodewordLine {
                cluster: *cluster,
                sender: cw.sender,
                subset_s: &cw.subset,
                constituent_ids: cw
                    .constituents
                    .iter()
                    .map(|c| ConstituentLine {
                        file: c.file,
                        packet: c.packet,
                        group: &c.group,
                        member: c.member,
                    })
                    .collect(),
                payload_hex: cw.payload.to_hex(),
            };
            let _ = writeln!(
                out,
                "{}",
                serde_json::to_string(&line).map_err(Error::from)?
            );
        }
    }
    write_or_print(Some(path), &out)
}

fn dump_schedule(path: &Path, schedule: &TdmaSchedule) -> CliResult<()> {
    #[derive(Serialize)]
    struct LinkLine<'a> {
        tx: usize,
        rx: usize,
        cluster: usize,
        codeword_id: &'a str,
        bits: u64,
    }
    #[derive(Serialize)]
    struct SlotLine<'a> {
        slot: u64,
        active_links: Vec<LinkLine<'a>>,
    }
    let mut out = String::new();
    for (slot, links) in schedule.occupied_slots() {
        let line = SlotLine {
            slot,
            active_links: links
                .iter()
                .map(|l| LinkLine {
                    tx: l.tx,
                    rx: l.rx,
                    cluster: l.cluster,
                    codeword_id: &l.codeword_id,
                    bits: l.bits,
                })
                .collect(),
        };
        let _ = writeln!(
            out,
            "{}",
            serde_json::to_string(&line).map_err(Error::from)?
        );
    }
    write_or_print(Some(path), &out)
}

/// Any unit-square embedding works for network-wide delivery; nodes are
/// laid on the smallest grid that fits them.
fn embedding_for(n: usize) -> CliResult<GridNetwork> {
    let side = (n as f64).sqrt().ceil() as usize;
    Ok(build_grid(side * side)?)
}

fn decode_verify_all(
    lib: &FileLibrary,
    caches: &[cachecast::CacheContents],
    codewords: &[Codeword],
    demand: &DemandVector,
    scheme: &CachingScheme,
) -> CliResult<()> {
    for (u, cache) in caches.iter().enumerate() {
        let got = decode(u, codewords, cache, demand, scheme)?;
        let req = demand.request(u);
        for (k, block) in got.iter().enumerate() {
            if block != lib.packet(req.file, req.start + k) {
                return Err(CliError::Invariant(format!(
                    "user {u} decoded packet {} of file {} incorrectly",
                    req.start + k,
                    req.file
                )));
            }
        }
    }
    Ok(())
}

fn cmd_run(args: RunArgs) -> CliResult<()> {
    let cfg = resolve_config(&args)?;
    let (cfg, fixed_demand) = match cfg.scenario {
        ScenarioArg::Example3User => {
            let demand = DemandVector::new(vec![
                SegmentRequest {
                    user: 0,
                    file: 0,
                    start: 0,
                    length: 1,
                },
                SegmentRequest {
                    user: 1,
                    file: 1,
                    start: 1,
                    length: 1,
                },
                SegmentRequest {
                    user: 2,
                    file: 2,
                    start: 2,
                    length: 1,
                },
            ])?;
            let forced = ExperimentConfig {
                scenario: ScenarioArg::Example3User,
                n: 3,
                m: 3,
                mem: Frac::from_integer(2),
                l: 3,
                l_prime: 1,
                ..cfg
            };
            (forced, Some(demand))
        }
        _ => (cfg, None),
    };

    // fail-fast validation shared by all scenarios
    if cfg.l_prime == 0 || cfg.l_prime > cfg.l {
        return validation(format!(
            "segment length L'={} must satisfy 1 <= L' <= L={}",
            cfg.l_prime, cfg.l
        ));
    }
    if !validate_feasibility(cfg.n, cfg.mem, cfg.m) {
        return validation(format!(
            "aggregate cache cannot hold the library: M*n = {} < m = {}",
            frac_to_f64(cfg.mem) * cfg.n as f64,
            cfg.m
        ));
    }

    match cfg.scenario {
        ScenarioArg::Example3User | ScenarioArg::NoReuse => run_no_reuse(&cfg, fixed_demand, &args),
        ScenarioArg::Reuse => run_reuse(&cfg, &args),
    }
}

fn run_no_reuse(
    cfg: &ExperimentConfig,
    fixed_demand: Option<DemandVector>,
    args: &RunArgs,
) -> CliResult<()> {
    let scheme = CachingScheme::new(cfg.n, cfg.m, cfg.mem, cfg.b)?;
    warn_on_padding(&scheme);
    let lib = FileLibrary::generate(cfg.m, cfg.l, cfg.b, cfg.seed)?;
    let demand = match fixed_demand {
        Some(d) => d,
        None => draw_demands(cfg.n, cfg.m, cfg.l, cfg.l_prime, cfg.pattern, cfg.seed)?,
    };
    let caches: Vec<_> = (0..cfg.n)
        .map(|u| place(&lib, u, &scheme))
        .collect::<Result<_, _>>()?;
    let codewords = deliver(&caches, &demand, &scheme)?;
    decode_verify_all(&lib, &caches, &codewords, &demand, &scheme)?;

    let measured = measured_rate(&codewords, cfg.b, cfg.l_prime);
    check_rate_identity(&scheme, cfg.mem, measured)?;

    let net = embedding_for(cfg.n)?;
    let params = ProtocolParams {
        range: 2f64.sqrt(),
        delta: cfg.delta,
        rate_bits_per_use: cfg.c_r,
    };
    let schedule = schedule_no_reuse(&codewords, &net, &params)?;
    let t_meas = throughput_measured(cfg.b, cfg.l_prime, schedule.t_s);
    let t_pred = throughput_predicted(ReuseMode::NoReuse, cfg.n, cfg.m, cfg.mem, cfg.c_r)?;

    if let Some(path) = &args.dump_codewords {
        dump_codewords(path, &[(None, &codewords)])?;
    }
    if let Some(path) = &args.dump_schedule {
        dump_schedule(path, &schedule)?;
    }

    let report = RunReport {
        scenario: scenario_name(cfg.scenario).to_string(),
        n: cfg.n,
        m: cfg.m,
        mem: frac_to_f64(cfg.mem),
        mem_exact: cfg.mem.to_string(),
        l: cfg.l,
        l_prime: cfg.l_prime,
        b: cfg.b,
        seed: cfg.seed,
        pattern: pattern_name(cfg.pattern).to_string(),
        g_c: None,
        delta: None,
        reuse_k: None,
        c_r: cfg.c_r,
        demands: vec![demand],
        codeword_count: codewords.len(),
        decode_verified: true,
        measured_rate: frac_to_f64(measured),
        measured_rate_exact: measured.to_string(),
        bounds: bound_report(cfg.n, cfg.m, cfg.mem)?,
        t_s: schedule.t_s,
        throughput_measured: JsonThroughput(t_meas.as_f64()),
        throughput_predicted: JsonThroughput(t_pred.as_f64()),
        c_r_over_k: None,
    };
    check_sandwich(&report)?;
    emit_report(&report, cfg.format, args.output.as_deref())
}

fn run_reuse(cfg: &ExperimentConfig, args: &RunArgs) -> CliResult<()> {
    let net = build_grid(cfg.n)?;
    let g_c = match cfg.g_c {
        Some(g) => g,
        None => smallest_feasible_cluster(&net, cfg.m, cfg.mem)?,
    };
    let clustering = clusterize(&net, g_c, cfg.m, cfg.mem)?;
    let scheme = CachingScheme::new(g_c, cfg.m, cfg.mem, cfg.b)?;
    warn_on_padding(&scheme);
    let lib = FileLibrary::generate(cfg.m, cfg.l, cfg.b, cfg.seed)?;
    let reuse_k = tdma_reuse_factor(cfg.delta);

    let mut demands = Vec::with_capacity(clustering.clusters.len());
    let mut per_cluster: Vec<Vec<Codeword>> = Vec::with_capacity(clustering.clusters.len());
    let mut measured_sum = Frac::from_integer(0);
    for cluster in &clustering.clusters {
        let seed = cfg.seed.wrapping_add(cluster.id as u64);
        let demand = draw_demands(g_c, cfg.m, cfg.l, cfg.l_prime, cfg.pattern, seed)?;
        let caches: Vec<_> = (0..g_c)
            .map(|u| place(&lib, u, &scheme))
            .collect::<Result<_, _>>()?;
        let codewords = deliver(&caches, &demand, &scheme)?;
        decode_verify_all(&lib, &caches, &codewords, &demand, &scheme)?;
        measured_sum += measured_rate(&codewords, cfg.b, cfg.l_prime);
        demands.push(demand);
        per_cluster.push(codewords);
    }
    let measured = measured_sum / Frac::from_integer(clustering.clusters.len() as i64);
    check_rate_identity(&scheme, cfg.mem, measured)?;

    let params = ProtocolParams {
        range: clustering.range,
        delta: cfg.delta,
        rate_bits_per_use: cfg.c_r,
    };
    let schedule = schedule_delivery(&clustering, &per_cluster, reuse_k, &params, &net)?;
    let t_meas = throughput_measured(cfg.b, cfg.l_prime, schedule.t_s);
    let t_pred = throughput_predicted(
        ReuseMode::Reuse {
            g_c,
            delta: cfg.delta,
        },
        cfg.n,
        cfg.m,
        cfg.mem,
        cfg.c_r,
    )?;

    if let Some(path) = &args.dump_codewords {
        let batches: Vec<(Option<usize>, &[Codeword])> = per_cluster
            .iter()
            .enumerate()
            .map(|(i, c)| (Some(i), c.as_slice()))
            .collect();
        dump_codewords(path, &batches)?;
    }
    if let Some(path) = &args.dump_schedule {
        dump_schedule(path, &schedule)?;
    }

    let report = RunReport {
        scenario: "reuse".to_string(),
        n: cfg.n,
        m: cfg.m,
        mem: frac_to_f64(cfg.mem),
        mem_exact: cfg.mem.to_string(),
        l: cfg.l,
        l_prime: cfg.l_prime,
        b: cfg.b,
        seed: cfg.seed,
        pattern: pattern_name(cfg.pattern).to_string(),
        g_c: Some(g_c),
        delta: Some(cfg.delta),
        reuse_k: Some(reuse_k),
        c_r: cfg.c_r,
        demands,
        codeword_count: per_cluster.iter().map(Vec::len).sum(),
        decode_verified: true,
        measured_rate: frac_to_f64(measured),
        measured_rate_exact: measured.to_string(),
        bounds: bound_report(g_c, cfg.m, cfg.mem)?,
        t_s: schedule.t_s,
        throughput_measured: JsonThroughput(t_meas.as_f64()),
        throughput_predicted: JsonThroughput(t_pred.as_f64()),
        c_r_over_k: Some(cfg.c_r as f64 / reuse_k as f64),
    };
    check_sandwich(&report)?;
    emit_report(&report, cfg.format, args.output.as_deref())
}

fn smallest_feasible_cluster(net: &GridNetwork, m: usize, mem: Frac) -> CliResult<usize> {
    for d in 1..=net.side() {
        if !net.side().is_multiple_of(d) {
            continue;
        }
        let g_c = d * d;
        if Frac::from_integer(g_c as i64) * mem >= Frac::from_integer(m as i64) {
            return Ok(g_c);
        }
    }
    validation(format!(
        "no cluster size tiles a {0}x{0} grid and holds m={m} files at M={mem}",
        net.side()
    ))
}

fn warn_on_padding(scheme: &CachingScheme) {
    for part in scheme.parts() {
        let spp = part.spec.subpackets_per_packet();
        if part.width_bits() % spp != 0 {
            eprintln!(
                "note: {} bits split into {} sub-packets needs padding; \
                 throughput will fall below the closed form (rates are unaffected)",
                part.width_bits(),
                spp
            );
        }
    }
}

/// The emitted codeword volume is demand-independent, so the measured
/// rate must equal the realized scheme's exact rate on every run. That
/// rate in turn matches the envelope closed form exactly except when a
/// memory-sharing split has to round to a whole bit, where it may sit at
/// most one bit-share above it.
fn check_rate_identity(scheme: &CachingScheme, mem: Frac, measured: Frac) -> CliResult<()> {
    let realized = scheme.scheme_rate();
    if measured != realized {
        return Err(CliError::Invariant(format!(
            "measured rate {measured} differs from the scheme rate {realized}"
        )));
    }
    let envelope = achievable_rate(scheme.n_eff(), scheme.m(), mem)?;
    let slack = Frac::new(scheme.n_eff() as i64, scheme.packet_bits() as i64);
    if realized < envelope || realized > envelope + slack {
        return Err(CliError::Invariant(format!(
            "scheme rate {realized} strays from the envelope {envelope}"
        )));
    }
    Ok(())
}

fn check_sandwich(report: &RunReport) -> CliResult<()> {
    if report.measured_rate < report.bounds.lower_bound - 1e-12 {
        return Err(CliError::Invariant(format!(
            "measured rate {} fell below the lower bound {}",
            report.measured_rate, report.bounds.lower_bound
        )));
    }
    // channel-use ceilings and padding only ever slow delivery down
    if report.throughput_measured.0 > report.throughput_predicted.0 * (1.0 + 1e-12) {
        return Err(CliError::Invariant(format!(
            "measured throughput {} exceeds the predicted {}",
            report.throughput_measured, report.throughput_predicted
        )));
    }
    if report.throughput_measured.0.is_finite() != report.throughput_predicted.0.is_finite() {
        return Err(CliError::Invariant(
            "one of measured/predicted throughput is infinite and the other is not".into(),
        ));
    }
    Ok(())
}

fn scenario_name(s: ScenarioArg) -> &'static str {
    match s {
        ScenarioArg::Example3User => "example-3user",
        ScenarioArg::NoReuse => "no-reuse",
        ScenarioArg::Reuse => "reuse",
    }
}

fn pattern_name(p: FilePattern) -> &'static str {
    match p {
        FilePattern::RoundRobin => "round-robin",
        FilePattern::Uniform => "uniform",
    }
}

fn emit_report(report: &RunReport, format: FormatArg, output: Option<&Path>) -> CliResult<()> {
    let contents = match format {
        FormatArg::Json => {
            let mut s = serde_json::to_string_pretty(report).map_err(Error::from)?;
            s.push('\n');
            s
        }
        FormatArg::Csv => report.to_csv(),
    };
    write_or_print(output, &contents)
}

// ---------------------------------------------------------------------------
// bounds / sweep
// ---------------------------------------------------------------------------

#[derive(Serialize)]
struct BoundsRow {
    #[serde(flatten)]
    report: BoundReport,
    cutset_branch: String,
    cutset_best_s: usize,
}

fn bounds_rows(n: usize, m: usize, mems: &[Frac]) -> CliResult<Vec<BoundsRow>> {
    let mut rows = Vec::with_capacity(mems.len());
    for &mem in mems {
        let report = bound_report(n, m, mem)?;
        let cut = cutset_lower_bound(n, m, mem)?;
        if cut.single_node {
            eprintln!("warning: n = 1 leaves only the segment cut; the bound is weaker");
        }
        let branch = match cut.branch {
            CutsetBranch::SegmentCut { s } => format!("segment-cut s={s}"),
            CutsetBranch::FractionalCut => "fractional-cut".to_string(),
        };
        rows.push(BoundsRow {
            report,
            cutset_branch: branch,
            cutset_best_s: cut.best_segment_s,
        });
    }
    Ok(rows)
}

fn emit_bounds(rows: &[BoundsRow], format: FormatArg, output: Option<&Path>) -> CliResult<()> {
    let contents = match format {
        FormatArg::Json => {
            let mut s = serde_json::to_string_pretty(rows).map_err(Error::from)?;
            s.push('\n');
            s
        }
        FormatArg::Csv => {
            let mut s = format!("{},cutset_branch,cutset_best_s\n", BoundReport::CSV_HEADER);
            for row in rows {
                let _ = writeln!(
                    s,
                    "{},{},{}",
                    row.report.to_csv_row(),
                    row.cutset_branch,
                    row.cutset_best_s
                );
            }
            s
        }
    };
    write_or_print(output, &contents)
}

fn parse_mem_list(single: Option<&str>, list: Option<&str>, m: usize) -> CliResult<Vec<Frac>> {
    if let Some(list) = list {
        return list.split(',').map(parse_frac).collect();
    }
    if let Some(single) = single {
        return Ok(vec![parse_frac(single)?]);
    }
    Ok((1..=m as i64).map(Frac::from_integer).collect())
}

fn cmd_bounds(args: BoundsArgs) -> CliResult<()> {
    let mems = parse_mem_list(args.mem.as_deref(), args.m_values.as_deref(), args.m)?;
    let rows = bounds_rows(args.n, args.m, &mems)?;
    emit_bounds(&rows, args.format, args.output.as_deref())
}

fn cmd_sweep(args: SweepArgs) -> CliResult<()> {
    let mems = parse_mem_list(None, args.m_values.as_deref(), args.m)?;
    let rows = bounds_rows(args.n, args.m, &mems)?;
    emit_bounds(&rows, args.format, args.output.as_deref())
}

// ---------------------------------------------------------------------------
// verify
// ---------------------------------------------------------------------------

fn cmd_verify(args: VerifyArgs) -> CliResult<()> {
    let mem = parse_frac(&args.mem)?;
    if args.n > 5 || args.m > 5 {
        return validation(format!(
            "exhaustive verification is capped at n <= 5 and m <= 5 (got n={}, m={})",
            args.n, args.m
        ));
    }
    if !validate_feasibility(args.n, mem, args.m) {
        return validation(format!(
            "rejected: M*n = {} < m = {}",
            mem * Frac::from_integer(args.n as i64),
            args.m
        ));
    }
    let t = mem * Frac::from_integer(args.n as i64) / Frac::from_integer(args.m as i64);
    if !t.is_integer() {
        return validation(format!(
            "t = M*n/m = {t} is fractional; verify covers the integer-t family"
        ));
    }
    let (n, m, l) = (args.n, args.m, args.l.max(1));
    let scheme_probe = CachingScheme::new(n, m, mem, 8)?;
    let spp = scheme_probe.parts()[0].spec.subpackets_per_packet();
    let b = spp * 8;
    let scheme = CachingScheme::new(n, m, mem, b)?;
    let lib = FileLibrary::generate(m, l, b, args.seed)?;
    let caches: Vec<_> = (0..n)
        .map(|u| place(&lib, u, &scheme))
        .collect::<Result<_, _>>()?;

    let expected_rate = achievable_rate(n, m, mem)?;
    let lower = cutset_lower_bound(n, m, mem)?.value;
    let net = embedding_for(n)?;
    let params = ProtocolParams {
        range: 2f64.sqrt(),
        delta: 0.4,
        rate_bits_per_use: 1,
    };

    let total = (m as u64).pow(n as u32);
    let mut schedule_slots_checked = 0u64;
    for code in 0..total {
        let mut x = code;
        let requests: Vec<SegmentRequest> = (0..n)
            .map(|u| {
                let file = (x % m as u64) as usize;
                x /= m as u64;
                SegmentRequest {
                    user: u,
                    file,
                    start: (u + file) % l,
                    length: 1,
                }
            })
            .collect();
        let demand = DemandVector::new(requests)?;
        let codewords = deliver(&caches, &demand, &scheme)?;

        for (u, cache) in caches.iter().enumerate() {
            let got = decode(u, &codewords, cache, &demand, &scheme)
                .map_err(|e| CliError::Invariant(format!("demand {code}, user {u}: {e}")))?;
            let req = demand.request(u);
            if got[0] != *lib.packet(req.file, req.start) {
                return Err(CliError::Invariant(format!(
                    "demand {code}: user {u} decoded file {} packet {} incorrectly",
                    req.file, req.start
                )));
            }
        }

        let measured = measured_rate(&codewords, b, 1);
        if measured != expected_rate {
            return Err(CliError::Invariant(format!(
                "demand {code}: measured rate {measured} != achievable {expected_rate}"
            )));
        }
        if measured < lower {
            return Err(CliError::Invariant(format!(
                "demand {code}: measured rate {measured} below lower bound {lower}"
            )));
        }
        // schedules are demand-shaped; spot-check feasibility on a sample
        // to keep the run quick
        if code % (total / 8).max(1) == 0 {
            let schedule = schedule_no_reuse(&codewords, &net, &params)?;
            schedule_slots_checked += schedule.t_s;
        }
    }
    println!(
        "verified n={n} m={m} M={mem}: {total} demand vectors, 0 decode failures, \
         rate identity exact, lower bound {lower} respected, \
         {schedule_slots_checked} schedule slots feasible"
    );
    Ok(())
}
