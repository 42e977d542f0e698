use std::path::Path;
use std::process::ExitCode;

use anyhow::Context;
use clap::{Parser, Subcommand, ValueEnum};
use serde_json::{json, Value};

use treepat_core::algebra::{format_sig, Rat};
use treepat_core::analysis::{analyze, AnalysisError, AnalyzeConfig};
use treepat_core::oracle::{compare, distribution, rooted_distribution, OracleError};
use treepat_core::partition::{build_partition, Builder, PartitionError, DEFAULT_CLASS_LIMIT};
use treepat_core::pattern::{Pattern, PatternError};
use treepat_core::selftest::{selftest, SelftestConfig};
use treepat_core::series::{
    distribution_at, expand_all, forbidden_counts, forest_series, moment_table, BivariateSeries, Mode, SeriesError,
};
use treepat_core::system::build_planted_system;
use treepat_core::trees::{TreeError, DEFAULT_ENUM_CAP};

#[derive(Parser, Debug)]
#[command(name = "treepat", version, about = "Pattern occurrence statistics in random labeled trees")]
struct Cli {
    #[command(subcommand)]
    cmd: Command,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum BuilderArg {
    Naive,
    Compact,
    Both,
}

impl BuilderArg {
    fn builders(self) -> Vec<Builder> {
        match self {
            BuilderArg::Naive => vec![Builder::Naive],
            BuilderArg::Compact => vec![Builder::Compact],
            BuilderArg::Both => vec![Builder::Naive, Builder::Compact],
        }
    }

    fn first(self) -> Builder {
        self.builders()[0]
    }
}

#[derive(Clone, Copy, Debug, ValueEnum, PartialEq, Eq)]
enum Format {
    Text,
    Json,
    Latex,
}

#[derive(Clone, Copy, Debug, ValueEnum, PartialEq, Eq)]
enum ModeArg {
    Full,
    Jet2,
}

#[derive(Clone, Copy, Debug, ValueEnum, PartialEq, Eq)]
enum Table {
    /// t_{n,m}: unrooted trees.
    T,
    /// r_{n,m}: rooted trees.
    R,
    /// p_{n,m}: planted trees.
    P,
    Moments,
    Forest,
    Forbidden,
}

#[derive(clap::Args, Debug, Clone)]
struct PatternArgs {
    /// Built-in name (node, edge, star:k, paper:fig1, paper:fig7) or a JSON file.
    #[arg(long)]
    pattern: String,
    #[arg(long, value_enum, default_value = "naive")]
    builder: BuilderArg,
    #[arg(long, default_value_t = DEFAULT_CLASS_LIMIT)]
    class_limit: usize,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Exact μ and σ² with the structural checks.
    Analyze {
        #[command(flatten)]
        p: PatternArgs,
        #[arg(long, overrides_with = "no_sigma2")]
        sigma2: bool,
        #[arg(long)]
        no_sigma2: bool,
        /// Largest planted tree size for partition validation (0 skips).
        #[arg(long, default_value_t = 7)]
        validate: usize,
        #[arg(long, default_value_t = 10)]
        digits: usize,
        /// Include the equation system in the report.
        #[arg(long)]
        system: bool,
        #[arg(long, value_enum, default_value = "text")]
        format: Format,
    },
    /// Expand the generating functions and print coefficient tables.
    Expand {
        #[command(flatten)]
        p: PatternArgs,
        #[arg(long)]
        n: Option<usize>,
        #[arg(long, value_enum, default_value = "full")]
        mode: ModeArg,
        #[arg(long, value_enum)]
        table: Option<Table>,
        #[arg(long, value_enum, default_value = "text")]
        format: Format,
    },
    /// Exact occurrence histogram by enumerating all labeled trees.
    Oracle {
        #[arg(long)]
        pattern: String,
        #[arg(long)]
        n: usize,
        #[arg(long)]
        rooted: bool,
        #[arg(long)]
        threads: Option<usize>,
        #[arg(long, default_value_t = DEFAULT_ENUM_CAP)]
        cap: usize,
        #[arg(long, value_enum, default_value = "text")]
        format: Format,
    },
    /// Compare series and enumeration for every size up to n.
    Verify {
        #[command(flatten)]
        p: PatternArgs,
        #[arg(long, default_value_t = 8)]
        n: usize,
        #[arg(long)]
        threads: Option<usize>,
        #[arg(long, value_enum, default_value = "text")]
        format: Format,
    },
    /// Print the equation system.
    EmitSystem {
        #[command(flatten)]
        p: PatternArgs,
        #[arg(long, value_enum, default_value = "text")]
        format: Format,
    },
    /// Check reference constants and oracle agreement.
    Selftest {
        #[arg(long)]
        threads: Option<usize>,
        #[arg(long, value_enum, default_value = "text")]
        format: Format,
    },
}

/// Failure with its exit code: 1 verification, 2 input, 3 invariant.
#[derive(Debug)]
struct Failure {
    code: u8,
    kind: &'static str,
    message: String,
}

impl Failure {
    fn verification(message: String) -> Self {
        Failure { code: 1, kind: "verification", message }
    }
    fn input(message: String) -> Self {
        Failure { code: 2, kind: "input", message }
    }
    fn internal(message: String) -> Self {
        Failure { code: 3, kind: "internal", message }
    }
}

impl From<PatternError> for Failure {
    fn from(e: PatternError) -> Self {
        Failure::input(e.to_string())
    }
}

impl From<PartitionError> for Failure {
    fn from(e: PartitionError) -> Self {
        match e {
            PartitionError::Ambiguous { .. } | PartitionError::Inconsistent(..) => Failure::internal(e.to_string()),
            _ => Failure::input(e.to_string()),
        }
    }
}

impl From<AnalysisError> for Failure {
    fn from(e: AnalysisError) -> Self {
        match e {
            AnalysisError::Partition(p) => p.into(),
            other => Failure::internal(other.to_string()),
        }
    }
}

impl From<SeriesError> for Failure {
    fn from(e: SeriesError) -> Self {
        match e {
            SeriesError::CapExceeded { .. } | SeriesError::NeedsFull | SeriesError::OutOfRange(_) => Failure::input(e.to_string()),
            _ => Failure::internal(e.to_string()),
        }
    }
}

impl From<OracleError> for Failure {
    fn from(e: OracleError) -> Self {
        match e {
            OracleError::Tree(TreeError::CapExceeded { .. } | TreeError::TooSmall { .. }) => Failure::input(e.to_string()),
            other => Failure::internal(other.to_string()),
        }
    }
}

impl From<anyhow::Error> for Failure {
    fn from(e: anyhow::Error) -> Self {
        Failure::input(format!("{e:#}"))
    }
}

fn load_pattern(src: &str) -> Result<Pattern, Failure> {
    match Pattern::named(src) {
        Ok(p) => Ok(p),
        Err(PatternError::UnknownName(_)) if Path::new(src).exists() => {
            let doc = std::fs::read_to_string(src).with_context(|| format!("reading {src}"))?;
            Ok(Pattern::parse(&doc)?)
        }
        Err(e) => Err(e.into()),
    }
}

fn json_out(v: &Value) -> String {
    serde_json::to_string_pretty(v).expect("serializable") + "\n"
}

fn rat_cell(r: &Rat, digits: usize) -> String {
    format!("{} ({})", r, format_sig(r, digits))
}

fn cmd_analyze(p: &PatternArgs, sigma2: bool, validate: usize, digits: usize, system: bool, format: Format) -> Result<String, Failure> {
    let pattern = load_pattern(&p.pattern)?;
    let cfg = AnalyzeConfig {
        builders: p.builder.builders(),
        sigma2,
        class_limit: p.class_limit,
        validate_nmax: validate,
        digits,
        ..Default::default()
    };
    let rep = analyze(&pattern, &cfg)?;
    if !rep.passed() {
        let failed: Vec<String> = rep
            .checks
            .iter()
            .chain(rep.results.iter().flat_map(|r| r.checks.iter()))
            .filter(|(_, v)| v.as_bool() == Some(false))
            .map(|(k, _)| k.clone())
            .collect();
        return Err(Failure::internal(format!("checks failed: {}", failed.join(", "))));
    }
    let mut doc = rep.to_json();
    if system {
        let systems: serde_json::Map<String, Value> = rep.results.iter().map(|r| (r.builder.to_string(), r.system.to_json())).collect();
        doc["system"] = Value::Object(systems);
    }
    Ok(match format {
        Format::Json => json_out(&doc),
        Format::Text | Format::Latex => {
            let mut out = format!("pattern: {}\n", rep.pattern);
            let scalar = |v: &Value| format!("{} ≈ {}", v["fraction"].as_str().unwrap_or("?"), v["approx"].as_str().unwrap_or("?"));
            if rep.closed_form {
                out.push_str("closed form (pattern has at most two nodes)\n");
            }
            out.push_str(&format!("mu: {}\n", scalar(&doc["mu"])));
            match doc["sigma2"].as_str() {
                Some(s) => out.push_str(&format!("sigma2: {s}\n")),
                None => out.push_str(&format!("sigma2: {}\n", scalar(&doc["sigma2"]))),
            }
            for r in &rep.results {
                out.push_str(&format!("builder {}: {} classes\n", r.builder, r.partition.num_classes()));
                for (k, v) in &r.checks {
                    out.push_str(&format!("  {k}: {v}\n"));
                }
                if system {
                    let style = if format == Format::Latex { "latex" } else { "text" };
                    out.push_str(&r.system.emit(style).map_err(|e| Failure::internal(e.to_string()))?);
                    out.push('\n');
                }
            }
            for (k, v) in &rep.checks {
                out.push_str(&format!("{k}: {v}\n"));
            }
            out
        }
    })
}

fn series_rows(s: &BivariateSeries) -> Vec<(usize, usize, String)> {
    let mut rows = Vec::new();
    for n in 0..=s.order() {
        if let Ok(d) = distribution_at(s, n) {
            rows.extend(d.into_iter().map(|(m, c)| (n, m, c.to_string())));
        }
    }
    rows
}

fn cmd_expand(p: &PatternArgs, n: Option<usize>, mode: ModeArg, table: Option<Table>, format: Format) -> Result<String, Failure> {
    let pattern = load_pattern(&p.pattern)?;
    let mode = match mode {
        ModeArg::Full => Mode::Full,
        ModeArg::Jet2 => Mode::Jet2,
    };
    let order = n.unwrap_or(mode.default_order());
    let table = table.unwrap_or(if mode == Mode::Full { Table::T } else { Table::Moments });
    if mode == Mode::Jet2 && !matches!(table, Table::Moments) {
        return Err(Failure::input("jet2 mode only supports the moments table".into()));
    }
    let part = build_partition(&pattern, p.builder.first(), p.class_limit)?;
    let sys = build_planted_system(&part);
    let ex = expand_all(&sys, order, mode)?;
    let header;
    let rows: Vec<Vec<String>> = match table {
        Table::T | Table::R | Table::P | Table::Forest => {
            let s = match table {
                Table::T => ex.t.clone(),
                Table::R => ex.r.clone(),
                Table::P => ex.classes.p.clone(),
                _ => forest_series(&ex.t),
            };
            header = vec!["n", "m", "count"];
            series_rows(&s).into_iter().filter(|(n, _, _)| *n > 0).map(|(n, m, c)| vec![n.to_string(), m.to_string(), c]).collect()
        }
        Table::Moments => {
            header = vec!["n", "mean", "variance", "dmean", "dvariance"];
            moment_table(&ex.t)
                .into_iter()
                .map(|r| {
                    let f = |x: &Option<Rat>| x.as_ref().map_or("-".to_string(), |v| format_sig(v, 12));
                    vec![r.n.to_string(), format_sig(&r.mean, 12), format_sig(&r.variance, 12), f(&r.dmean), f(&r.dvariance)]
                })
                .collect()
        }
        Table::Forbidden => {
            header = vec!["n", "pattern_free", "all", "ratio"];
            forbidden_counts(&ex.t)?
                .into_iter()
                .map(|r| vec![r.n.to_string(), r.count.to_string(), r.total.to_string(), format!("{:.6e}", r.ratio)])
                .collect()
        }
    };
    Ok(match format {
        Format::Json => {
            let objs: Vec<Value> = rows
                .iter()
                .map(|r| Value::Object(header.iter().zip(r).map(|(h, v)| (h.to_string(), Value::String(v.clone()))).collect()))
                .collect();
            json_out(&json!({"pattern": pattern.name(), "builder": p.builder.first(), "mode": mode, "order": order, "rows": objs}))
        }
        _ => {
            let mut out = header.join("\t") + "\n";
            for r in rows {
                out.push_str(&r.join("\t"));
                out.push('\n');
            }
            out
        }
    })
}

fn cmd_oracle(pattern: &str, n: usize, rooted: bool, threads: Option<usize>, cap: usize, format: Format) -> Result<String, Failure> {
    let pattern = load_pattern(pattern)?;
    let d = if rooted { rooted_distribution(n, &pattern, cap, threads)? } else { distribution(n, &pattern, cap, threads)? };
    Ok(match format {
        Format::Json => json_out(&json!({
            "pattern": pattern.name(),
            "n": n,
            "rooted": rooted,
            "counts": d.counts.iter().map(|(m, c)| (m.to_string(), json!(c))).collect::<serde_json::Map<_, _>>(),
            "mean": d.mean().to_string(),
            "variance": d.variance().to_string(),
        })),
        _ => {
            let mut out = String::from("m\tcount\n");
            for (m, c) in &d.counts {
                out.push_str(&format!("{m}\t{c}\n"));
            }
            out.push_str(&format!("# total {}  mean {}  variance {}\n", d.total(), rat_cell(&d.mean(), 10), rat_cell(&d.variance(), 10)));
            out
        }
    })
}

fn cmd_verify(p: &PatternArgs, n: usize, threads: Option<usize>, format: Format) -> Result<String, Failure> {
    let pattern = load_pattern(&p.pattern)?;
    if n > DEFAULT_ENUM_CAP {
        return Err(Failure::input(format!("n = {n} exceeds the enumeration cap {DEFAULT_ENUM_CAP}")));
    }
    let mut lines = Vec::new();
    let mut reports = Vec::new();
    let mut all_equal = true;
    for b in p.builder.builders() {
        // patterns with at most two nodes have no partition; the oracle alone is checked there
        let t = if pattern.size() >= 3 {
            let part = build_partition(&pattern, b, p.class_limit)?;
            Some(expand_all(&build_planted_system(&part), n, Mode::Full)?.t)
        } else {
            None
        };
        for k in 2..=n {
            let d = distribution(k, &pattern, DEFAULT_ENUM_CAP, threads)?;
            let (equal, detail) = match &t {
                Some(t) => {
                    let c = compare(t, &d);
                    let detail = c.first_mismatch.as_ref().map(|m| format!("m={} series {} oracle {}", m.m, m.series, m.oracle));
                    (c.equal, detail)
                }
                None => {
                    let want = if pattern.size() == 1 { k as u64 } else { k as u64 - 1 };
                    let ok = d.counts.len() == 1 && d.counts.contains_key(&want);
                    (ok, (!ok).then(|| format!("expected every tree to have {want} occurrences")))
                }
            };
            all_equal &= equal;
            lines.push(format!("{b} n={k}: {}{}", if equal { "equal" } else { "MISMATCH " }, detail.clone().unwrap_or_default()));
            reports.push(json!({"builder": b, "n": k, "equal": equal, "first_mismatch": detail, "histogram": d.counts}));
        }
    }
    let verdict = if all_equal { "PASS" } else { "FAIL" };
    let out = match format {
        Format::Json => json_out(&json!({"pattern": pattern.name(), "verdict": verdict, "sizes": reports})),
        _ => lines.join("\n") + &format!("\n{verdict}\n"),
    };
    if all_equal {
        Ok(out)
    } else {
        print!("{out}");
        Err(Failure::verification("series and enumeration disagree".into()))
    }
}

fn cmd_emit(p: &PatternArgs, format: Format) -> Result<String, Failure> {
    let pattern = load_pattern(&p.pattern)?;
    let part = build_partition(&pattern, p.builder.first(), p.class_limit)?;
    let sys = build_planted_system(&part);
    let style = match format {
        Format::Text => "text",
        Format::Json => "json",
        Format::Latex => "latex",
    };
    let mut out = sys.emit(style).map_err(|e| Failure::internal(e.to_string()))?;
    if !out.ends_with('\n') {
        out.push('\n');
    }
    Ok(out)
}

fn cmd_selftest(threads: Option<usize>, format: Format) -> Result<String, Failure> {
    let rep = selftest(&SelftestConfig { threads, ..Default::default() });
    let out = match format {
        Format::Json => json_out(&rep.to_json()),
        _ => rep.to_table(),
    };
    if rep.passed() {
        Ok(out)
    } else {
        print!("{out}");
        let failed: Vec<String> = rep.criteria.iter().filter(|c| !c.passed).map(|c| c.id.to_string()).collect();
        Err(Failure::verification(format!("criteria failed: {}", failed.join(", "))))
    }
}

fn run(cli: Cli) -> Result<(String, Format), Failure> {
    Ok(match cli.cmd {
        Command::Analyze { p, sigma2, no_sigma2, validate, digits, system, format } => {
            (cmd_analyze(&p, sigma2 || !no_sigma2, validate, digits, system, format)?, format)
        }
        Command::Expand { p, n, mode, table, format } => (cmd_expand(&p, n, mode, table, format)?, format),
        Command::Oracle { pattern, n, rooted, threads, cap, format } => (cmd_oracle(&pattern, n, rooted, threads, cap, format)?, format),
        Command::Verify { p, n, threads, format } => (cmd_verify(&p, n, threads, format)?, format),
        Command::EmitSystem { p, format } => (cmd_emit(&p, format)?, format),
        Command::Selftest { threads, format } => (cmd_selftest(threads, format)?, format),
    })
}

fn wants_json(cli: &Cli) -> bool {
    let f = match &cli.cmd {
        Command::Analyze { format, .. }
        | Command::Expand { format, .. }
        | Command::Oracle { format, .. }
        | Command::Verify { format, .. }
        | Command::EmitSystem { format, .. }
        | Command::Selftest { format, .. } => *format,
    };
    f == Format::Json
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let json = wants_json(&cli);
    match run(cli) {
        Ok((out, _)) => {
            print!("{out}");
            ExitCode::SUCCESS
        }
        Err(f) => {
            if json {
                eprintln!("{}", json!({"error": {"kind": f.kind, "message": f.message, "exit_code": f.code}}));
            } else {
                eprintln!("error ({}): {}", f.kind, f.message);
            }
            ExitCode::from(f.code)
        }
    }
}
