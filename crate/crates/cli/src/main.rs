//! Seeded, JSON-first command line for the Schottky pipeline.
//!
//! Exit codes: 0 success / certificate pass, 1 I/O or malformed input,
//! 2 certificate failure, 3 construction obstruction.

use clap::{Parser, Subcommand, ValueEnum};
use schottky_core::geom::ModelVariant;
use schottky_core::invariants::{topology_report, InvariantsError};
use schottky_core::satake::classify_all;
use schottky_core::schottky::{
    build_group, limit_set_sample, run_certificate, MoveSearchOptions, MoveStrategy,
    SchottkyError, SchottkyGroupSpec, Verdict,
};
use schottky_core::Tolerances;
use serde::Serialize;
use serde_json::{json, Value};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

const EXIT_OK: u8 = 0;
const EXIT_IO: u8 = 1;
const EXIT_CERT: u8 = 2;
const EXIT_OBSTRUCTION: u8 = 3;

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Json,
    Table,
    Csv,
}

#[derive(Parser)]
#[command(
    name = "schottky",
    version,
    about = "Schottky group actions on homogeneous rational manifolds"
)]
struct Cli {
    /// Relative singular-value cutoff for rank decisions.
    #[arg(long, global = true)]
    rank_rel: Option<f64>,
    /// Orthonormality residual bound.
    #[arg(long, global = true)]
    orth: Option<f64>,
    /// Minimum phi-separation for disjointness certificates.
    #[arg(long, global = true)]
    cert_margin: Option<f64>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Scan all supported real forms and parabolics for minimal
    /// hypersurface orbits.
    Classify {
        #[arg(long, default_value_t = 8)]
        max_rank: usize,
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long, value_enum, default_value_t = Format::Json)]
        format: Format,
    },
    /// Build a calibrated Schottky group on a model.
    Construct {
        /// Model: P:N | Qeven:N | Qodd:N | IGr:N
        #[arg(long)]
        model: String,
        #[arg(long)]
        rank: usize,
        #[arg(long, default_value_t = 1)]
        seed: u64,
        /// Restrict Mobius moves to the subsphere S^m (IGr only).
        #[arg(long)]
        subsphere: Option<usize>,
        /// Move strategy override: generic | mobius.
        #[arg(long)]
        strategy: Option<String>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Check the ping-pong axioms of a stored group by sampling.
    Certify {
        #[arg(long)]
        group: PathBuf,
        #[arg(long, default_value_t = 2000)]
        samples: usize,
        #[arg(long, default_value_t = 4)]
        max_word_len: usize,
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long, value_enum, default_value_t = Format::Json)]
        format: Format,
    },
    /// Compute the invariant report of a stored group.
    Invariants {
        #[arg(long)]
        group: PathBuf,
        #[arg(long, default_value_t = 50)]
        samples: usize,
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long, value_enum, default_value_t = Format::Json)]
        format: Format,
    },
    /// Emit images of the core base points under all words of a depth.
    Limitset {
        #[arg(long)]
        group: PathBuf,
        #[arg(long)]
        depth: usize,
        #[arg(long)]
        csv: PathBuf,
    },
    /// Render a stored artifact as a human-readable table.
    Report {
        #[arg(long, value_name = "FILE")]
        input: PathBuf,
        #[arg(long, value_enum, default_value_t = Format::Table)]
        format: Format,
    },
}

fn main() -> ExitCode {
    if let Ok(threads) = std::env::var("SCHOTTKY_THREADS") {
        if let Ok(n) = threads.parse::<usize>() {
            let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
        }
    }
    let cli = Cli::parse();
    let mut tol = Tolerances::default();
    if let Some(v) = cli.rank_rel {
        tol.rank_rel = v;
    }
    if let Some(v) = cli.orth {
        tol.orth = v;
    }
    if let Some(v) = cli.cert_margin {
        tol.cert_margin = v;
    }
    if tol.validate().is_err() || [tol.rank_rel, tol.orth, tol.cert_margin]
        .iter()
        .any(|&v| v < f64::EPSILON)
    {
        eprintln!("ERROR BAD_TOLERANCES: overrides must be at least machine epsilon");
        return ExitCode::from(EXIT_IO);
    }
    match run(cli.command, &tol) {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("{}", e.render());
            ExitCode::from(e.exit_code())
        }
    }
}

struct CliError {
    code: &'static str,
    message: String,
    exit: u8,
}

impl CliError {
    fn io(message: impl Into<String>) -> Self {
        CliError {
            code: "IO_ERROR",
            message: message.into(),
            exit: EXIT_IO,
        }
    }

    fn render(&self) -> String {
        format!("ERROR {}: {}", self.code, self.message)
    }

    fn exit_code(&self) -> u8 {
        self.exit
    }
}

impl From<SchottkyError> for CliError {
    fn from(e: SchottkyError) -> Self {
        let (code, exit) = match &e {
            SchottkyError::ParityObstruction { .. } => ("PARITY_OBSTRUCTION", EXIT_OBSTRUCTION),
            SchottkyError::MaxAttemptsExceeded { .. } => {
                ("MAX_ATTEMPTS_EXCEEDED", EXIT_OBSTRUCTION)
            }
            SchottkyError::SeparationFailure { .. } => ("SEPARATION_FAILURE", EXIT_OBSTRUCTION),
            SchottkyError::SamplingStarved { .. } => ("SAMPLING_STARVED", EXIT_OBSTRUCTION),
            SchottkyError::CertificateFailed { .. } => ("CERTIFICATE_FAILED", EXIT_CERT),
            SchottkyError::BadSpec(_) => ("BAD_GROUP_SPEC", EXIT_IO),
            _ => ("COMPUTE_ERROR", EXIT_IO),
        };
        CliError {
            code,
            message: e.to_string(),
            exit,
        }
    }
}

impl From<InvariantsError> for CliError {
    fn from(e: InvariantsError) -> Self {
        CliError {
            code: "INVARIANTS_ERROR",
            message: e.to_string(),
            exit: EXIT_IO,
        }
    }
}

#[derive(Serialize)]
struct Header {
    tool_version: &'static str,
    command: String,
    seed: u64,
    tolerances: Tolerances,
    #[serde(skip_serializing_if = "Option::is_none")]
    group_hash: Option<String>,
}

fn artifact(header: Header, payload: Value) -> Value {
    json!({ "header": header, "payload": payload })
}

/// FNV-1a over the canonical JSON encoding; stable across the pipeline.
fn fnv1a(bytes: &[u8]) -> u64 {
    let mut hash: u64 = 0xcbf29ce484222325;
    for &b in bytes {
        hash ^= b as u64;
        hash = hash.wrapping_mul(0x100000001b3);
    }
    hash
}

fn group_hash(group: &SchottkyGroupSpec) -> Result<String, CliError> {
    let bytes = serde_json::to_vec(group).map_err(|e| CliError::io(e.to_string()))?;
    Ok(format!("{:016x}", fnv1a(&bytes)))
}

fn write_atomic(path: &Path, bytes: &[u8]) -> Result<(), CliError> {
    let dir = path.parent().unwrap_or_else(|| Path::new("."));
    let tmp = dir.join(format!(
        ".{}.tmp",
        path.file_name()
            .map(|s| s.to_string_lossy().to_string())
            .unwrap_or_else(|| "artifact".into())
    ));
    std::fs::write(&tmp, bytes)
        .map_err(|e| CliError::io(format!("writing {}: {e}", tmp.display())))?;
    std::fs::rename(&tmp, path)
        .map_err(|e| CliError::io(format!("renaming into {}: {e}", path.display())))?;
    Ok(())
}

fn emit(value: &Value, out: Option<&Path>) -> Result<(), CliError> {
    let mut bytes = serde_json::to_vec_pretty(value).map_err(|e| CliError::io(e.to_string()))?;
    bytes.push(b'\n');
    match out {
        Some(path) => write_atomic(path, &bytes),
        None => {
            print!("{}", String::from_utf8_lossy(&bytes));
            Ok(())
        }
    }
}

fn load_group(path: &Path, tol: &Tolerances) -> Result<SchottkyGroupSpec, CliError> {
    let data = std::fs::read(path)
        .map_err(|e| CliError::io(format!("reading {}: {e}", path.display())))?;
    let value: Value =
        serde_json::from_slice(&data).map_err(|e| CliError::io(format!("parsing group: {e}")))?;
    let payload = value.get("payload").cloned().unwrap_or(value);
    let group: SchottkyGroupSpec = serde_json::from_value(payload)
        .map_err(|e| CliError::io(format!("decoding group: {e}")))?;
    group.validate(tol).map_err(|e| CliError {
        code: "BAD_GROUP_SPEC",
        message: e.to_string(),
        exit: EXIT_IO,
    })?;
    Ok(group)
}

fn run(command: Command, tol: &Tolerances) -> Result<u8, CliError> {
    match command {
        Command::Classify {
            max_rank,
            out,
            format,
        } => {
            let records = classify_all(max_rank).map_err(|e| CliError {
                code: "CLASSIFY_ERROR",
                message: e.to_string(),
                exit: EXIT_IO,
            })?;
            if format == Format::Table {
                print_classification_table(&records);
            }
            let header = Header {
                tool_version: env!("CARGO_PKG_VERSION"),
                command: format!("classify --max-rank {max_rank}"),
                seed: 0,
                tolerances: *tol,
                group_hash: None,
            };
            let value = artifact(
                header,
                serde_json::to_value(&records).map_err(|e| CliError::io(e.to_string()))?,
            );
            if format == Format::Json || out.is_some() {
                emit(&value, out.as_deref())?;
            }
            Ok(EXIT_OK)
        }
        Command::Construct {
            model,
            rank,
            seed,
            subsphere,
            strategy,
            out,
        } => {
            let variant: ModelVariant = model
                .parse()
                .map_err(|e: String| CliError::io(format!("bad --model: {e}")))?;
            let flag_model = schottky_core::geom::make_model(variant).map_err(|e| CliError {
                code: "BAD_MODEL",
                message: e.to_string(),
                exit: EXIT_IO,
            })?;
            let mut opts = MoveSearchOptions::default_for(&flag_model);
            if let Some(s) = strategy.as_deref() {
                opts.strategy = match s {
                    "generic" => MoveStrategy::GenericMatrix,
                    "mobius" => MoveStrategy::MobiusOnSphere,
                    other => {
                        return Err(CliError::io(format!("unknown strategy {other:?}")));
                    }
                };
            }
            opts.subsphere_m = subsphere;
            let group = build_group(variant, rank, seed, Some(opts), tol.cert_margin, tol)?;
            let header = Header {
                tool_version: env!("CARGO_PKG_VERSION"),
                command: format!("construct --model {model} --rank {rank} --seed {seed}"),
                seed,
                tolerances: *tol,
                group_hash: Some(group_hash(&group)?),
            };
            let value = artifact(
                header,
                serde_json::to_value(&group).map_err(|e| CliError::io(e.to_string()))?,
            );
            emit(&value, Some(out.as_path()))?;
            Ok(EXIT_OK)
        }
        Command::Certify {
            group,
            samples,
            max_word_len,
            out,
            format,
        } => {
            let spec = load_group(&group, tol)?;
            let cert = run_certificate(&spec, samples, max_word_len, tol)?;
            if format == Format::Table {
                print_certificate_table(&cert);
            }
            let header = Header {
                tool_version: env!("CARGO_PKG_VERSION"),
                command: format!(
                    "certify --group {} --samples {samples} --max-word-len {max_word_len}",
                    group.display()
                ),
                seed: spec.seed,
                tolerances: *tol,
                group_hash: Some(group_hash(&spec)?),
            };
            let value = artifact(
                header,
                serde_json::to_value(&cert).map_err(|e| CliError::io(e.to_string()))?,
            );
            if format == Format::Json || out.is_some() {
                emit(&value, out.as_deref())?;
            }
            Ok(if cert.verdict == Verdict::Pass {
                EXIT_OK
            } else {
                EXIT_CERT
            })
        }
        Command::Invariants {
            group,
            samples,
            out,
            format,
        } => {
            let spec = load_group(&group, tol)?;
            let report = topology_report(&spec, samples, spec.seed, tol)?;
            if format == Format::Table {
                print_report_table(&report);
            }
            let header = Header {
                tool_version: env!("CARGO_PKG_VERSION"),
                command: format!("invariants --group {} --samples {samples}", group.display()),
                seed: spec.seed,
                tolerances: *tol,
                group_hash: Some(group_hash(&spec)?),
            };
            let value = artifact(
                header,
                serde_json::to_value(&report).map_err(|e| CliError::io(e.to_string()))?,
            );
            if format == Format::Json || out.is_some() {
                emit(&value, out.as_deref())?;
            }
            Ok(EXIT_OK)
        }
        Command::Limitset { group, depth, csv } => {
            let spec = load_group(&group, tol)?;
            let cloud = limit_set_sample(&spec, depth, spec.seed)?;
            let mut text = cloud.columns.join(",");
            text.push('\n');
            for row in &cloud.rows {
                let cells: Vec<String> = row.iter().map(|v| format!("{v:.17e}")).collect();
                text.push_str(&cells.join(","));
                text.push('\n');
            }
            write_atomic(&csv, text.as_bytes())?;
            Ok(EXIT_OK)
        }
        Command::Report { input, format: _ } => {
            let data = std::fs::read(&input)
                .map_err(|e| CliError::io(format!("reading {}: {e}", input.display())))?;
            let value: Value = serde_json::from_slice(&data)
                .map_err(|e| CliError::io(format!("parsing artifact: {e}")))?;
            print_generic_report(&value);
            Ok(EXIT_OK)
        }
    }
}

fn print_classification_table(records: &[schottky_core::ClassificationRecord]) {
    println!(
        "{:<6} {:<6} {:<12} {:<8} {:<26} status",
        "type", "rank", "real form", "codim", "manifold"
    );
    for r in records {
        if !r.is_hypersurface && r.status == schottky_core::satake::RecordStatus::Computed {
            continue;
        }
        let codim = r
            .codim
            .map(|c| c.to_string())
            .unwrap_or_else(|| "-".into());
        println!(
            "{:<6} {:<6} {:<12} {:<8} {:<26} {:?}",
            r.type_label.to_string(),
            r.rank,
            r.real_form,
            codim,
            r.manifold_name,
            r.status
        );
    }
}

fn print_certificate_table(cert: &schottky_core::PingPongCertificate) {
    println!(
        "certificate: verdict {:?}, margin required {:e}, achieved {:e}",
        cert.verdict, cert.margin, cert.margin_achieved
    );
    println!(
        "{:<36} {:<10} {:>14} {:>14} pass",
        "check", "samples", "worst", "threshold"
    );
    for c in &cert.checks {
        println!(
            "{:<36} {:<10} {:>14.6e} {:>14.6e} {}",
            c.name, c.samples, c.worst, c.threshold, c.pass
        );
    }
}

fn print_report_table(report: &schottky_core::InvariantReport) {
    let value = serde_json::to_value(report).unwrap_or(Value::Null);
    print_generic_report(&value);
}

fn print_generic_report(value: &Value) {
    fn walk(prefix: &str, v: &Value) {
        match v {
            Value::Object(map) => {
                for (k, val) in map {
                    let key = if prefix.is_empty() {
                        k.clone()
                    } else {
                        format!("{prefix}.{k}")
                    };
                    walk(&key, val);
                }
            }
            Value::Array(items) if items.len() > 8 => {
                println!("{prefix}: [{} entries]", items.len());
            }
            other => println!("{prefix}: {other}"),
        }
    }
    walk("", value);
}
