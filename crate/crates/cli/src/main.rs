mod config;

use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::PathBuf;
use std::process::ExitCode;
use std::time::Instant;

use clap::{Parser, Subcommand, ValueEnum};
use corrspec::audit::{all_pass, Audit};
use corrspec::ffield::{FieldError, DEFAULT_CAP};
use corrspec::qform::{write_analysis, SignConvention};
use corrspec::seqgen::{validate_params, write_sequence, ParamError, SeqError};
use corrspec::spectrum::{agreement_audit, consensus, SpectrumError};
use corrspec::{FieldDesc, FieldOptions, Instance, Method, Spectrum, SpectrumReport};
use serde_json::json;

use config::{pick, FileConfig, Format, RunConfig, DEFAULT_PRECISION_BITS};

const VERIFY_MATRIX: [(u64, u32, u32); 4] = [(5, 1, 1), (13, 1, 1), (5, 3, 1), (5, 3, 3)];

#[derive(Parser, Debug)]
#[command(
    name = "corrspec",
    version,
    about = "Exact cross-correlation spectra of p-ary m-sequences and their decimations"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
    /// Prime p, p ≡ 1 (mod 4).
    #[arg(short = 'p', global = true)]
    p: Option<u64>,
    /// Odd m; sequences have period p^(2m) - 1.
    #[arg(short = 'm', global = true)]
    m: Option<u32>,
    /// Divisor e of m.
    #[arg(short = 'e', global = true)]
    e: Option<u32>,
    /// Extension degree (field-info only; defaults to 2m).
    #[arg(short = 'n', global = true)]
    n: Option<u32>,
    /// direct, sums, rank_fast, closed_form or all.
    #[arg(long, global = true)]
    method: Option<String>,
    /// json, csv or text.
    #[arg(long, global = true)]
    format: Option<String>,
    /// Write to this file instead of stdout.
    #[arg(long, global = true)]
    output: Option<PathBuf>,
    /// Directory for persisted discrete-log tables.
    #[arg(long, global = true, env = "CORRSPEC_CACHE_DIR")]
    cache_dir: Option<PathBuf>,
    /// Worker threads, 0 for one per core.
    #[arg(long, global = true, env = "CORRSPEC_THREADS")]
    threads: Option<usize>,
    /// Bits of precision for the exact side of the float comparison.
    #[arg(long, global = true)]
    precision_bits: Option<u32>,
    /// Largest p^n for which tables are built.
    #[arg(long, global = true)]
    cap: Option<u64>,
    /// key = value file supplying defaults for the flags above.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    #[arg(long, global = true, hide = true, value_enum)]
    fault: Option<Fault>,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Correlation value distribution by one or all methods.
    Spectrum,
    /// Run the structural audit suite.
    Verify,
    /// Describe GF(p^n) as built.
    FieldInfo,
    /// Time the three methods and check they agree.
    Bench,
    /// Write the m-sequence or its decimation, one residue per line.
    Export {
        #[arg(long, value_enum, default_value_t = Which::Mseq)]
        sequence: Which,
    },
    /// Dump rank, sign and exponential sum of the form for every c.
    Analyze,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum Which {
    Mseq,
    Decimated,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum Fault {
    NegateSign,
}

/// A message and the process exit status it maps to.
struct Failure {
    code: u8,
    message: String,
}

impl Failure {
    fn invalid(message: impl Into<String>) -> Self {
        Failure {
            code: 2,
            message: message.into(),
        }
    }

    fn io(e: io::Error) -> Self {
        Failure {
            code: 1,
            message: e.to_string(),
        }
    }
}

impl From<FieldError> for Failure {
    fn from(e: FieldError) -> Self {
        let code = match e {
            FieldError::CapExceeded { .. } | FieldError::TooLarge { .. } => 3,
            _ => 2,
        };
        Failure {
            code,
            message: e.to_string(),
        }
    }
}

impl From<ParamError> for Failure {
    fn from(e: ParamError) -> Self {
        let code = if matches!(e, ParamError::Overflow) { 3 } else { 2 };
        Failure {
            code,
            message: e.to_string(),
        }
    }
}

impl From<SeqError> for Failure {
    fn from(e: SeqError) -> Self {
        match e {
            SeqError::Params(e) => e.into(),
            SeqError::Field(e) => e.into(),
            other => Failure {
                code: 1,
                message: other.to_string(),
            },
        }
    }
}

impl From<SpectrumError> for Failure {
    fn from(e: SpectrumError) -> Self {
        match e {
            SpectrumError::Params(e) => e.into(),
            SpectrumError::Seq(e) => e.into(),
            other => Failure {
                code: 1,
                message: other.to_string(),
            },
        }
    }
}

fn from_file<T>(r: Result<T, String>) -> Result<T, Failure> {
    r.map_err(Failure::invalid)
}

fn resolve(cli: &Cli) -> Result<RunConfig, Failure> {
    let file = match &cli.config {
        Some(path) => FileConfig::load(path).map_err(Failure::invalid)?,
        None => FileConfig::default(),
    };
    let format: Option<String> = from_file(file.get("format"))?;
    let format = pick(cli.format.clone(), format, "json".into())
        .parse::<Format>()
        .map_err(Failure::invalid)?;
    Ok(RunConfig {
        p: cli.p.or(from_file(file.get("p"))?),
        m: cli.m.or(from_file(file.get("m"))?),
        e: cli.e.or(from_file(file.get("e"))?),
        n: cli.n.or(from_file(file.get("n"))?),
        method: pick(cli.method.clone(), from_file(file.get("method"))?, "all".into()),
        format,
        output: cli.output.clone().or(from_file(file.get::<String>("output"))?.map(PathBuf::from)),
        cache_dir: cli.cache_dir.clone().or(from_file(file.get::<String>("cache_dir"))?.map(PathBuf::from)),
        threads: pick(cli.threads, from_file(file.get("threads"))?, 0),
        precision_bits: pick(cli.precision_bits, from_file(file.get("precision_bits"))?, DEFAULT_PRECISION_BITS),
        cap: pick(cli.cap, from_file(file.get("cap"))?, DEFAULT_CAP),
    })
}

fn field_options(cfg: &RunConfig) -> FieldOptions {
    FieldOptions {
        cap: cfg.cap,
        dlog: true,
        cache_dir: cfg.cache_dir.clone(),
    }
}

fn require_pme(cfg: &RunConfig) -> Result<(u64, u32, u32), Failure> {
    match (cfg.p, cfg.m, cfg.e) {
        (Some(p), Some(m), Some(e)) => Ok((p, m, e)),
        _ => Err(Failure::invalid("-p, -m and -e are required")),
    }
}

fn build_instance(cfg: &RunConfig, (p, m, e): (u64, u32, u32)) -> Result<Instance, Failure> {
    let params = validate_params(p, m, e)?;
    if params.size() > cfg.cap {
        return Err(FieldError::CapExceeded {
            p,
            n: params.n,
            cap: cfg.cap,
        }
        .into());
    }
    Ok(Instance::build(p, m, e, &field_options(cfg))?)
}

fn parse_method(s: &str) -> Result<Method, Failure> {
    s.parse::<Method>()
        .map_err(|_| Failure::invalid(format!("unknown method {s:?} (direct, sums, rank_fast, closed_form, all)")))
}

fn sign(cli: &Cli) -> SignConvention {
    match cli.fault {
        Some(Fault::NegateSign) => SignConvention::Negated,
        None => SignConvention::Standard,
    }
}

/// Single writer for everything a command emits.
fn open_output(cfg: &RunConfig) -> Result<Box<dyn Write>, Failure> {
    Ok(match &cfg.output {
        Some(path) => Box::new(BufWriter::new(File::create(path).map_err(Failure::io)?)),
        None => Box::new(BufWriter::new(io::stdout().lock())),
    })
}

fn status(pass: bool) -> ExitCode {
    if pass {
        ExitCode::SUCCESS
    } else {
        ExitCode::from(1)
    }
}

fn render(report: &SpectrumReport, format: Format) -> String {
    match format {
        Format::Json => report.to_json() + "\n",
        Format::Csv => report.to_csv(),
        Format::Text => report.to_text(),
    }
}

fn cmd_spectrum(cli: &Cli, cfg: &RunConfig) -> Result<ExitCode, Failure> {
    let method = parse_method(&cfg.method)?;
    let inst = build_instance(cfg, require_pme(cfg)?)?;
    let sp = Spectrum::with_sign(&inst, sign(cli));
    let mut report = match method {
        Method::ClosedForm => sp.full_spectrum(Method::ClosedForm),
        Method::All => {
            let mut reports = Vec::new();
            let mut direct_values = Vec::new();
            for m in Method::COMPUTED {
                let values = sp.sweep(m)?;
                reports.push(sp.report_from_sweep(m, &values));
                if m == Method::Direct {
                    direct_values = values;
                }
            }
            let mut combined = consensus(&reports);
            combined.audits.push(sp.float_audit(&direct_values, cfg.precision_bits));
            combined.audits.extend(sp.bound_audit(&direct_values));
            combined
        }
        m => {
            let values = sp.sweep(m)?;
            let mut r = sp.report_from_sweep(m, &values);
            r.audits.push(sp.float_audit(&values, cfg.precision_bits));
            r.audits.extend(sp.bound_audit(&values));
            r
        }
    };
    report.audits.sort_by(|a, b| a.name.cmp(&b.name));
    let mut out = open_output(cfg)?;
    out.write_all(render(&report, cfg.format).as_bytes()).map_err(Failure::io)?;
    out.flush().map_err(Failure::io)?;
    Ok(status(report.all_pass()))
}

fn cmd_verify(cli: &Cli, cfg: &RunConfig) -> Result<ExitCode, Failure> {
    let sets: Vec<(u64, u32, u32)> = match (cfg.p, cfg.m, cfg.e) {
        (None, None, None) => VERIFY_MATRIX.to_vec(),
        _ => vec![require_pme(cfg)?],
    };
    let mut results: Vec<((u64, u32, u32), Vec<Audit>)> = Vec::new();
    for set in sets {
        let inst = build_instance(cfg, set)?;
        let audits = Spectrum::with_sign(&inst, sign(cli)).verify_all()?;
        results.push((set, audits));
    }
    let pass = results.iter().all(|(_, a)| all_pass(a));
    let mut out = open_output(cfg)?;
    match cfg.format {
        Format::Json => {
            let doc: Vec<_> = results
                .iter()
                .map(|((p, m, e), audits)| json!({"p": p, "m": m, "e": e, "audits": audits}))
                .collect();
            let text = serde_json::to_string_pretty(&json!({"pass": pass, "runs": doc})).expect("serializable");
            writeln!(out, "{text}").map_err(Failure::io)?;
        }
        Format::Csv => {
            let mut w = csv::Writer::from_writer(&mut out);
            w.write_record(["p", "m", "e", "name", "pass", "observed", "expected"])
                .map_err(|e| Failure::io(e.into()))?;
            for ((p, m, e), audits) in &results {
                for a in audits {
                    w.write_record([
                        p.to_string(),
                        m.to_string(),
                        e.to_string(),
                        a.name.clone(),
                        a.pass.to_string(),
                        a.observed.clone(),
                        a.expected.clone(),
                    ])
                    .map_err(|e| Failure::io(e.into()))?;
                }
            }
            w.flush().map_err(Failure::io)?;
        }
        Format::Text => {
            for ((p, m, e), audits) in &results {
                writeln!(out, "p={p} m={m} e={e}").map_err(Failure::io)?;
                for a in audits {
                    writeln!(
                        out,
                        "  [{}] {}: observed {}, expected {}",
                        if a.pass { "pass" } else { "FAIL" },
                        a.name,
                        a.observed,
                        a.expected
                    )
                    .map_err(Failure::io)?;
                }
            }
        }
    }
    out.flush().map_err(Failure::io)?;
    Ok(status(pass))
}

fn cmd_field_info(cfg: &RunConfig) -> Result<ExitCode, Failure> {
    let p = cfg.p.ok_or_else(|| Failure::invalid("-p is required"))?;
    let n = match (cfg.n, cfg.m) {
        (Some(n), _) => n,
        (None, Some(m)) => 2 * m,
        (None, None) => return Err(Failure::invalid("-n (or -m) is required")),
    };
    let field = FieldDesc::build(p, n, &field_options(cfg))?;
    let order = field.order();
    let alpha_order = field.alpha_order();
    let status_name = serde_json::to_value(field.dlog_status()).expect("serializable");
    let status_name = status_name.as_str().unwrap_or("unknown").to_string();
    let mut out = open_output(cfg)?;
    match cfg.format {
        Format::Json => {
            let doc = json!({
                "p": p,
                "n": n,
                "size": field.size(),
                "modulus": field.modulus_string(),
                "order": order,
                "generator_order": alpha_order,
                "generator_primitive": alpha_order == order,
                "dlog": status_name,
            });
            writeln!(out, "{}", serde_json::to_string_pretty(&doc).expect("serializable")).map_err(Failure::io)?;
        }
        Format::Csv => {
            writeln!(out, "p,n,size,modulus,order,generator_order,dlog").map_err(Failure::io)?;
            writeln!(
                out,
                "{p},{n},{},{},{order},{alpha_order},{status_name}",
                field.size(),
                field.modulus_string()
            )
            .map_err(Failure::io)?;
        }
        Format::Text => {
            writeln!(out, "field    GF({p}^{n}), {} elements", field.size()).map_err(Failure::io)?;
            writeln!(out, "modulus  {}", field.modulus_string()).map_err(Failure::io)?;
            writeln!(out, "order    {order}").map_err(Failure::io)?;
            writeln!(
                out,
                "α order  {alpha_order} ({})",
                if alpha_order == order { "primitive" } else { "NOT primitive" }
            )
            .map_err(Failure::io)?;
            writeln!(out, "dlog     {status_name}").map_err(Failure::io)?;
        }
    }
    out.flush().map_err(Failure::io)?;
    Ok(status(alpha_order == order))
}

fn cmd_bench(cli: &Cli, cfg: &RunConfig) -> Result<ExitCode, Failure> {
    let set = require_pme(cfg)?;
    let start = Instant::now();
    let inst = build_instance(cfg, set)?;
    let setup = start.elapsed();
    let sp = Spectrum::with_sign(&inst, sign(cli));
    let mut rows = Vec::new();
    let mut reports = Vec::new();
    for m in Method::COMPUTED {
        let start = Instant::now();
        let r = sp.full_spectrum(m);
        rows.push((m, start.elapsed()));
        reports.push(r);
    }
    let agree = agreement_audit(&reports);
    let slowest = rows.iter().map(|r| r.1).max().unwrap_or_default();
    let mut out = open_output(cfg)?;
    let (p, m, e) = set;
    match cfg.format {
        Format::Json => {
            let timings: Vec<_> = rows
                .iter()
                .map(|(method, t)| json!({"method": method.as_str(), "seconds": t.as_secs_f64()}))
                .collect();
            let doc = json!({
                "p": p, "m": m, "e": e,
                "setup_seconds": setup.as_secs_f64(),
                "timings": timings,
                "agree": agree.pass,
                "counts": reports[0].count_vector(),
            });
            writeln!(out, "{}", serde_json::to_string_pretty(&doc).expect("serializable")).map_err(Failure::io)?;
        }
        Format::Csv => {
            writeln!(out, "p,m,e,method,seconds").map_err(Failure::io)?;
            for (method, t) in &rows {
                writeln!(out, "{p},{m},{e},{method},{:.6}", t.as_secs_f64()).map_err(Failure::io)?;
            }
        }
        Format::Text => {
            writeln!(out, "p={p} m={m} e={e}  setup {:.3}s", setup.as_secs_f64()).map_err(Failure::io)?;
            for (method, t) in &rows {
                let speedup = slowest.as_secs_f64() / t.as_secs_f64().max(1e-9);
                writeln!(out, "  {:<10} {:>10.3}s  {:>8.1}x", method.as_str(), t.as_secs_f64(), speedup)
                    .map_err(Failure::io)?;
            }
            writeln!(out, "  agreement: {} ({})", if agree.pass { "pass" } else { "FAIL" }, agree.observed)
                .map_err(Failure::io)?;
        }
    }
    out.flush().map_err(Failure::io)?;
    Ok(status(agree.pass))
}

fn cmd_export(cfg: &RunConfig, which: Which) -> Result<ExitCode, Failure> {
    let inst = build_instance(cfg, require_pme(cfg)?)?;
    let values = match which {
        Which::Mseq => inst.seq().values(),
        Which::Decimated => inst.decimated(),
    };
    let mut out = open_output(cfg)?;
    write_sequence(inst.params(), values, &mut out).map_err(Failure::io)?;
    out.flush().map_err(Failure::io)?;
    Ok(ExitCode::SUCCESS)
}

fn cmd_analyze(cli: &Cli, cfg: &RunConfig) -> Result<ExitCode, Failure> {
    let inst = build_instance(cfg, require_pme(cfg)?)?;
    let sp = Spectrum::with_sign(&inst, sign(cli));
    let rows = sp.analyzer().main_form_sweep().map_err(SpectrumError::from)?;
    let mut out = open_output(cfg)?;
    write_analysis(&rows, inst.field(), &mut out).map_err(Failure::io)?;
    out.flush().map_err(Failure::io)?;
    Ok(ExitCode::SUCCESS)
}

fn run(cli: &Cli) -> Result<ExitCode, Failure> {
    let cfg = resolve(cli)?;
    if cfg.threads > 0 {
        // Fails only if a pool already exists, which cannot happen this early.
        let _ = rayon::ThreadPoolBuilder::new().num_threads(cfg.threads).build_global();
    }
    match &cli.command {
        Command::Spectrum => cmd_spectrum(cli, &cfg),
        Command::Verify => cmd_verify(cli, &cfg),
        Command::FieldInfo => cmd_field_info(&cfg),
        Command::Bench => cmd_bench(cli, &cfg),
        Command::Export { sequence } => cmd_export(&cfg, *sequence),
        Command::Analyze => cmd_analyze(cli, &cfg),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(code) => code,
        Err(f) => {
            eprintln!("corrspec: {}", f.message);
            ExitCode::from(f.code)
        }
    }
}
