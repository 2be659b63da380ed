use std::fs::{self, File, OpenOptions};
use std::io::{self, BufRead, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};

use q2m_core::generator::DEFAULT_SEED;
use q2m_core::parser::{parse_line, print_jsonl};
use q2m_core::verify::DivergenceKind;
use q2m_core::{
    diff_models, verify_log, EngineState, GenConfig, Generator, LinkMode, LogFormat, LogLine, Profile, Ratios,
    SchemaModel,
};

const EXIT_OK: u8 = 0;
const EXIT_IO: u8 = 1;
const EXIT_PARSE: u8 = 2;
const EXIT_DIFF: u8 = 3;

const STATE_FILE: &str = "state.json";
const LOCK_FILE: &str = "ingest.lock";

#[derive(Parser)]
#[command(name = "q2m", version, about = "Incremental schema extraction from document-store query logs")]
struct Cli {
    /// Directory holding the persisted extraction state.
    #[arg(long, global = true, default_value = ".q2m")]
    state: PathBuf,
    /// Log format; guessed from the file extension or first line if omitted.
    #[arg(long, global = true)]
    format: Option<FormatArg>,
    /// Reference detection applied to exported models.
    #[arg(long, global = true, default_value = "naming")]
    links: LinksArg,
    #[arg(long, global = true)]
    verbose: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum FormatArg {
    Shell,
    Jsonl,
}

#[derive(Clone, Copy, ValueEnum)]
enum LinksArg {
    Naming,
    Oid,
    Off,
}

impl From<LinksArg> for LinkMode {
    fn from(arg: LinksArg) -> Self {
        match arg {
            LinksArg::Naming => LinkMode::Naming,
            LinksArg::Oid => LinkMode::Oid,
            LinksArg::Off => LinkMode::Off,
        }
    }
}

#[derive(Subcommand)]
enum Command {
    /// Apply a query log to the saved state.
    Ingest { log: PathBuf },
    /// Print the current model snapshot.
    ShowModel,
    /// Replay a log through the engine and the batch extractor and compare.
    Verify {
        log: PathBuf,
        /// Compare after every k-th query (and after the last one).
        #[arg(long, default_value_t = 1)]
        stride: usize,
        #[arg(long)]
        json: bool,
    },
    /// Compare two model snapshots.
    Diff {
        a: PathBuf,
        b: PathBuf,
        #[arg(long)]
        json: bool,
    },
    /// Write a synthetic JSON-lines query log.
    Gen(GenArgs),
    /// Summarize the saved state.
    Stats {
        #[arg(long)]
        json: bool,
    },
}

#[derive(Args)]
struct GenArgs {
    #[arg(long, default_value_t = DEFAULT_SEED)]
    seed: u64,
    #[arg(long, default_value_t = 1000)]
    count: usize,
    #[arg(long, default_value = "medical")]
    profile: Profile,
    /// Insert/update/delete weights.
    #[arg(long, default_value = "60/25/15")]
    ratios: Ratios,
    #[arg(long, default_value_t = 0.05)]
    conflict_rate: f64,
    #[arg(long, default_value_t = 0.03)]
    rename_rate: f64,
    /// Output file; standard output if omitted.
    #[arg(long)]
    out: Option<PathBuf>,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match &cli.command {
        Command::Ingest { log } => ingest(&cli, log),
        Command::ShowModel => show_model(&cli),
        Command::Verify { log, stride, json } => verify(&cli, log, *stride, *json),
        Command::Diff { a, b, json } => diff(a, b, *json),
        Command::Gen(args) => gen(args),
        Command::Stats { json } => stats(&cli, *json),
    };
    match result {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("q2m: {e:#}");
            ExitCode::from(EXIT_IO)
        }
    }
}

fn detect_format(path: &Path, explicit: Option<FormatArg>) -> Result<LogFormat> {
    match explicit {
        Some(FormatArg::Shell) => return Ok(LogFormat::Shell),
        Some(FormatArg::Jsonl) => return Ok(LogFormat::Jsonl),
        None => {}
    }
    match path.extension().and_then(|e| e.to_str()) {
        Some("jsonl" | "ndjson") => return Ok(LogFormat::Jsonl),
        Some("js" | "mongo") => return Ok(LogFormat::Shell),
        _ => {}
    }
    let reader = BufReader::new(File::open(path).with_context(|| format!("cannot open {}", path.display()))?);
    for line in reader.lines() {
        let line = line?;
        let trimmed = line.trim();
        if trimmed.is_empty() || trimmed.starts_with("//") || trimmed.starts_with('#') {
            continue;
        }
        return Ok(if trimmed.starts_with('{') { LogFormat::Jsonl } else { LogFormat::Shell });
    }
    Ok(LogFormat::Shell)
}

fn open_log(path: &Path) -> Result<BufReader<File>> {
    let file = File::open(path).with_context(|| format!("cannot open {}", path.display()))?;
    Ok(BufReader::new(file))
}

fn load_state(dir: &Path) -> Result<EngineState> {
    let path = dir.join(STATE_FILE);
    if !path.exists() {
        return Ok(EngineState::new());
    }
    EngineState::load(&path).with_context(|| format!("cannot load {}", path.display()))
}

/// Held for the duration of an ingest; removed on drop.
struct IngestLock(PathBuf);

impl IngestLock {
    fn acquire(dir: &Path) -> Result<Self> {
        let path = dir.join(LOCK_FILE);
        let mut file = OpenOptions::new().write(true).create_new(true).open(&path).with_context(|| {
            format!("cannot lock {} (is another ingest running? remove the file if not)", path.display())
        })?;
        writeln!(file, "{}", std::process::id())?;
        Ok(IngestLock(path))
    }
}

impl Drop for IngestLock {
    fn drop(&mut self) {
        let _ = fs::remove_file(&self.0);
    }
}

/// Peak resident set size in KiB, where the platform reports it.
fn peak_rss_kib() -> Option<u64> {
    let status = fs::read_to_string("/proc/self/status").ok()?;
    let line = status.lines().find(|l| l.starts_with("VmHWM:"))?;
    line.split_whitespace().nth(1)?.parse().ok()
}

fn ingest(cli: &Cli, log: &Path) -> Result<u8> {
    let format = detect_format(log, cli.format)?;
    let reader = open_log(log)?;
    fs::create_dir_all(&cli.state).with_context(|| format!("cannot create {}", cli.state.display()))?;
    let _lock = IngestLock::acquire(&cli.state)?;
    let mut state = load_state(&cli.state)?;

    let stdout = io::stdout();
    let mut out = BufWriter::new(stdout.lock());
    let (mut applied, mut warnings, mut rejected, mut parse_errors) = (0u64, 0u64, 0u64, 0u64);
    for (i, line) in reader.lines().enumerate() {
        let number = i + 1;
        let line = line.with_context(|| format!("cannot read {} line {number}", log.display()))?;
        match parse_line(&line, format) {
            LogLine::Blank => {}
            LogLine::Error(e) => {
                parse_errors += 1;
                eprintln!("{}:{number}: parse error: {e}", log.display());
            }
            LogLine::Query(query) => match state.apply(&query) {
                Ok(report) => {
                    applied += 1;
                    for w in &report.warnings {
                        warnings += 1;
                        if cli.verbose {
                            eprintln!("{}:{number}: warning: {w}", log.display());
                        }
                    }
                    if cli.verbose {
                        serde_json::to_writer(&mut out, &report)?;
                        writeln!(out)?;
                    }
                }
                Err(e) => {
                    rejected += 1;
                    eprintln!("{}:{number}: rejected: {e}", log.display());
                }
            },
        }
    }
    out.flush()?;
    state.save(&cli.state.join(STATE_FILE)).context("cannot save state")?;

    let memory = peak_rss_kib().map(|k| format!(", peak memory {k} KiB")).unwrap_or_default();
    eprintln!(
        "applied {applied} queries ({warnings} warnings, {rejected} rejected, {parse_errors} parse errors); \
         {} documents, {} model entries, {} total applied{memory}",
        state.signatures().document_count(),
        state.model().entry_count(),
        state.applied_count(),
    );
    Ok(if parse_errors > 0 { EXIT_PARSE } else { EXIT_OK })
}

fn show_model(cli: &Cli) -> Result<u8> {
    let state = load_state(&cli.state)?;
    io::stdout().write_all(state.export_model(cli.links.into()).as_bytes())?;
    Ok(EXIT_OK)
}

fn verify(cli: &Cli, log: &Path, stride: usize, json: bool) -> Result<u8> {
    let format = detect_format(log, cli.format)?;
    let lines: Vec<String> = open_log(log)?.lines().collect::<io::Result<_>>()?;
    let items = lines.iter().enumerate().map(|(i, l)| (i + 1, parse_line(l, format)));
    let report = verify_log(items, cli.links.into(), stride);

    if json {
        println!("{}", serde_json::to_string_pretty(&report)?);
    } else {
        for (line, message) in &report.parse_errors {
            eprintln!("{}:{line}: parse error: {message}", log.display());
        }
        match &report.divergence {
            None => println!("equivalent: {} queries, {} checks", report.queries, report.checks),
            Some(d) => {
                println!("divergence at {d}");
                if let DivergenceKind::ModelMismatch { incremental, batch } = &d.kind {
                    if let (Ok(a), Ok(b)) = (SchemaModel::from_json(batch), SchemaModel::from_json(incremental)) {
                        println!("batch -> incremental:");
                        print!("{}", diff_models(&a, &b).to_text());
                    }
                }
            }
        }
    }
    Ok(if report.divergence.is_some() {
        EXIT_DIFF
    } else if !report.parse_errors.is_empty() {
        EXIT_PARSE
    } else {
        EXIT_OK
    })
}

fn read_snapshot(path: &Path) -> Result<SchemaModel> {
    let text = fs::read_to_string(path).with_context(|| format!("cannot read {}", path.display()))?;
    SchemaModel::from_json(&text).with_context(|| format!("{} is not a model snapshot", path.display()))
}

fn diff(a: &Path, b: &Path, json: bool) -> Result<u8> {
    let (a, b) = (read_snapshot(a)?, read_snapshot(b)?);
    let delta = diff_models(&a, &b);
    if json {
        println!("{}", serde_json::to_string_pretty(&delta)?);
    } else {
        print!("{}", delta.to_text());
    }
    Ok(if delta.is_empty() { EXIT_OK } else { EXIT_DIFF })
}

fn gen(args: &GenArgs) -> Result<u8> {
    let config = GenConfig {
        seed: args.seed,
        count: args.count,
        profile: args.profile,
        ratios: args.ratios,
        conflict_rate: args.conflict_rate,
        rename_rate: args.rename_rate,
    };
    let sink: Box<dyn Write> = match &args.out {
        Some(path) => Box::new(File::create(path).with_context(|| format!("cannot create {}", path.display()))?),
        None => Box::new(io::stdout().lock()),
    };
    let mut out = BufWriter::new(sink);
    for query in Generator::new(config) {
        writeln!(out, "{}", print_jsonl(&query))?;
    }
    out.flush()?;
    Ok(EXIT_OK)
}

fn stats(cli: &Cli, json: bool) -> Result<u8> {
    let state = load_state(&cli.state)?;
    let collections: Vec<serde_json::Value> = state
        .model()
        .collections
        .iter()
        .map(|(name, schema)| {
            let documents = state.signatures().documents(name).count();
            serde_json::json!({ "name": name, "documents": documents, "attributes": schema.attributes.len() })
        })
        .collect();
    if json {
        let summary = serde_json::json!({
            "applied": state.applied_count(),
            "documents": state.signatures().document_count(),
            "entries": state.model().entry_count(),
            "counters": state.metadata().counter_count(),
            "signature_pairs": state.signatures().pair_count(),
            "collections": collections,
        });
        println!("{}", serde_json::to_string_pretty(&summary)?);
    } else {
        println!("applied queries: {}", state.applied_count());
        println!("live documents:  {}", state.signatures().document_count());
        println!("model entries:   {}", state.model().entry_count());
        println!("counters:        {}", state.metadata().counter_count());
        for c in &collections {
            println!("  {}: {} documents, {} attributes", c["name"].as_str().unwrap_or(""), c["documents"], c["attributes"]);
        }
    }
    Ok(EXIT_OK)
}
