use clap::{Parser, Subcommand, ValueEnum};
use pcsi_core::auditor::{run_audit, AuditConfig, AuditError, Method, EXIT_BUDGET};
use pcsi_core::capacity::capacity_table_csv;
use pcsi_core::gf::field_of_order;
use pcsi_core::model::PrivacyMode;
use pcsi_core::schemes::{
    build_scheme, search_vectors, BankMode, SchemeError, SchemeSpec, SearchOptions, DEFAULT_BUDGET,
    SCHEME_NAMES,
};
use std::path::PathBuf;
use std::process::ExitCode;

const EXIT_USAGE: u8 = 64;

#[derive(Parser, Debug)]
#[command(name = "pcsi", version, about = "PIR with private coded side information: audits, capacity tables, vector search")]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand, Debug)]
enum Cmd {
    /// Replay a scheme for correctness, privacy and rate; writes a JSON report.
    Audit(AuditArgs),
    /// Closed-form capacity cells as CSV.
    CapacityTable(TableArgs),
    /// Search for a certified vector bank; writes it as JSON.
    Search(SearchArgs),
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum MethodArg {
    Auto,
    Exact,
    Sampled,
}

impl From<MethodArg> for Method {
    fn from(m: MethodArg) -> Method {
        match m {
            MethodArg::Auto => Method::Auto,
            MethodArg::Exact => Method::Exact,
            MethodArg::Sampled => Method::Sampled,
        }
    }
}

#[derive(clap::Args, Debug)]
struct AuditArgs {
    #[arg(long, value_parser = clap::builder::PossibleValuesParser::new(SCHEME_NAMES))]
    scheme: String,
    #[arg(long)]
    q: Option<u32>,
    #[arg(long = "K")]
    k: Option<usize>,
    #[arg(long = "M")]
    m: Option<usize>,
    /// Extension degree for the generic schemes.
    #[arg(long)]
    l: Option<usize>,
    /// Hide the coefficients too (generic schemes).
    #[arg(long)]
    private_coeffs: bool,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, value_enum, default_value_t = MethodArg::Auto)]
    correctness: MethodArg,
    #[arg(long, value_enum, default_value_t = MethodArg::Auto)]
    privacy: MethodArg,
    /// theta_S or theta_S_lambda; defaults to what the scheme is built for.
    #[arg(long)]
    privacy_mode: Option<String>,
    /// Query samples per cell in sampled privacy mode.
    #[arg(long, default_value_t = 10_000)]
    samples: usize,
    #[arg(long, default_value_t = 0.01)]
    threshold: f64,
    #[arg(long, default_value_t = DEFAULT_BUDGET)]
    budget: usize,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum Format {
    Csv,
    Json,
}

#[derive(clap::Args, Debug)]
struct TableArgs {
    #[arg(long, default_value_t = 2)]
    k_min: usize,
    #[arg(long, default_value_t = 10)]
    k_max: usize,
    #[arg(long, default_value_t = 1)]
    m_min: usize,
    #[arg(long)]
    m_max: Option<usize>,
    #[arg(long, value_enum, default_value_t = Format::Csv)]
    format: Format,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(clap::Args, Debug)]
struct SearchArgs {
    #[arg(long)]
    mode: String,
    #[arg(long)]
    q: u32,
    #[arg(long = "K")]
    k: usize,
    #[arg(long = "M")]
    m: usize,
    #[arg(long)]
    l: Option<usize>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = DEFAULT_BUDGET)]
    budget: usize,
    #[arg(long)]
    out: Option<PathBuf>,
}

struct Failure {
    code: u8,
    msg: String,
}

fn usage(msg: impl ToString) -> Failure {
    Failure {
        code: EXIT_USAGE,
        msg: msg.to_string(),
    }
}

fn emit(out: &Option<PathBuf>, text: &str) -> Result<(), Failure> {
    match out {
        Some(p) => std::fs::write(p, text).map_err(|e| Failure {
            code: 1,
            msg: format!("cannot write {}: {e}", p.display()),
        }),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn scheme_error(e: SchemeError) -> Failure {
    match e {
        SchemeError::Search(e) => Failure {
            code: EXIT_BUDGET as u8,
            msg: e.to_string(),
        },
        e => usage(e),
    }
}

/// Parameters fixed by the scheme itself.
fn default_params(name: &str) -> Option<(u32, usize, usize)> {
    (name == "f3_m3k4").then_some((3, 4, 3))
}

fn audit(a: AuditArgs) -> Result<u8, Failure> {
    let fixed = default_params(&a.scheme);
    let pick = |v: Option<usize>, d: Option<usize>, flag: &str| {
        v.or(d).ok_or_else(|| usage(format!("--{flag} is required for {}", a.scheme)))
    };
    let q = a.q.or(fixed.map(|f| f.0)).ok_or_else(|| usage(format!("--q is required for {}", a.scheme)))?;
    let k = pick(a.k, fixed.map(|f| f.1), "K")?;
    let m = pick(a.m, fixed.map(|f| f.2), "M")?;
    let privacy_mode = match &a.privacy_mode {
        Some(s) => Some(PrivacyMode::parse(s).ok_or_else(|| usage(format!("unknown privacy mode {s}")))?),
        None => None,
    };
    let spec = SchemeSpec {
        l: a.l,
        private_coeffs: a.private_coeffs,
        seed: a.seed,
        budget: a.budget,
        ..SchemeSpec::new(&a.scheme, q, k, m)
    };
    let scheme = build_scheme(&spec).map_err(scheme_error)?;
    let cfg = AuditConfig {
        seed: a.seed,
        correctness: a.correctness.into(),
        privacy: a.privacy.into(),
        privacy_mode,
        samples_per_cell: a.samples,
        threshold: a.threshold,
        ..AuditConfig::default()
    };
    let report = run_audit(scheme.as_ref(), &cfg).map_err(|e| match e {
        AuditError::BudgetExceeded { .. } => Failure {
            code: EXIT_BUDGET as u8,
            msg: e.to_string(),
        },
        e => Failure { code: 1, msg: e.to_string() },
    })?;
    let mut text = serde_json::to_string_pretty(&report).expect("report serializes");
    text.push('\n');
    emit(&a.out, &text)?;
    Ok(report.exit_code as u8)
}

fn table(t: TableArgs) -> Result<u8, Failure> {
    let m_max = t.m_max.unwrap_or(t.k_max);
    if t.k_min < 2 || t.k_min > t.k_max || t.m_min < 1 || t.m_min > m_max {
        return Err(usage("need 2 <= k-min <= k-max and 1 <= m-min <= m-max"));
    }
    let csv = capacity_table_csv(t.k_min..=t.k_max, t.m_min..=m_max);
    let text = match t.format {
        Format::Csv => csv,
        Format::Json => {
            let mut lines = csv.lines();
            let header: Vec<&str> = lines.next().unwrap_or_default().split(',').collect();
            let rows: Vec<serde_json::Map<String, serde_json::Value>> = lines
                .map(|l| {
                    header
                        .iter()
                        .zip(l.split(','))
                        .map(|(h, v)| (h.to_string(), serde_json::Value::String(v.to_string())))
                        .collect()
                })
                .collect();
            serde_json::to_string_pretty(&rows).expect("rows serialize") + "\n"
        }
    };
    emit(&t.out, &text)?;
    Ok(0)
}

fn search(s: SearchArgs) -> Result<u8, Failure> {
    let mode = BankMode::parse(&s.mode).ok_or_else(|| usage(format!("unknown mode {}", s.mode)))?;
    let f = field_of_order(s.q).map_err(usage)?;
    let opts = SearchOptions {
        l: s.l,
        budget: s.budget,
    };
    let bank = search_vectors(&f, s.k, s.m, mode, s.seed, &opts).map_err(|e| match e {
        e @ pcsi_core::schemes::SearchError::SearchFailed { .. } => Failure {
            code: EXIT_BUDGET as u8,
            msg: serde_json::to_string(&e).unwrap_or_else(|_| e.to_string()),
        },
        e => usage(e),
    })?;
    let systems = bank.verify(&f).map_err(|e| Failure {
        code: 1,
        msg: e.to_string(),
    })?;
    let doc = serde_json::json!({
        "report_version": pcsi_core::auditor::REPORT_VERSION,
        "seed": s.seed,
        "certified_systems": systems,
        "bank": bank,
    });
    let mut text = serde_json::to_string_pretty(&doc).expect("bank serializes");
    text.push('\n');
    emit(&s.out, &text)?;
    Ok(0)
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    let res = match cli.cmd {
        Cmd::Audit(a) => audit(a),
        Cmd::CapacityTable(t) => table(t),
        Cmd::Search(s) => search(s),
    };
    match res {
        Ok(code) => ExitCode::from(code),
        Err(f) => {
            eprintln!("error: {}", f.msg);
            ExitCode::from(f.code)
        }
    }
}
