use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{Context, Result};
use clap::{Parser, Subcommand, ValueEnum};

use fsol_core::diagnostic::{self, has_errors, Diagnostic};
use fsol_core::fuzz::{run_campaign, CampaignConfig, CampaignReport, FuzzMode};
use fsol_core::scenario::{load_scenario, run_scenario, validate_entry_constraints};
use fsol_core::typing::{check, diff_checkers};
use fsol_core::vm::to_json_lines;
use fsol_core::{parse_file, resolve_hierarchy, ContractTable, Program, Typing};

const EXIT_TYPE_ERRORS: u8 = 1;
const EXIT_USAGE: u8 = 3;

#[derive(Parser)]
#[command(name = "fsol", version, about = "Type checkers, interpreter and fuzzer for FSol contracts")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum TypingArg {
    Baseline,
    Refined,
}

impl From<TypingArg> for Typing {
    fn from(t: TypingArg) -> Typing {
        match t {
            TypingArg::Baseline => Typing::Baseline,
            TypingArg::Refined => Typing::Refined,
        }
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum ModeArg {
    RefinedSound,
    BaselineHoles,
}

impl From<ModeArg> for FuzzMode {
    fn from(m: ModeArg) -> FuzzMode {
        match m {
            ModeArg::RefinedSound => FuzzMode::RefinedSound,
            ModeArg::BaselineHoles => FuzzMode::BaselineHoles,
        }
    }
}

#[derive(Clone, Copy, Default, PartialEq, Eq, ValueEnum)]
enum Format {
    #[default]
    Text,
    Json,
}

#[derive(Subcommand)]
enum Command {
    /// Type-check a program.
    Check {
        #[arg(long, value_enum)]
        typing: TypingArg,
        #[arg(long, value_enum, default_value_t)]
        format: Format,
        file: PathBuf,
    },
    /// Deploy and run a scenario against a checked program.
    Run {
        #[arg(long, value_enum)]
        typing: TypingArg,
        #[arg(long)]
        scenario: PathBuf,
        /// Run even if the program or scenario fails the checks.
        #[arg(long)]
        force: bool,
        /// Write the execution trace as JSON lines.
        #[arg(long)]
        trace: Option<PathBuf>,
        #[arg(long, value_enum, default_value_t)]
        format: Format,
        file: PathBuf,
    },
    /// Run both checkers and show where they disagree.
    Diff {
        #[arg(long, value_enum, default_value_t)]
        format: Format,
        file: PathBuf,
    },
    /// Generate, check and run random programs.
    Fuzz {
        #[arg(long, value_enum)]
        mode: ModeArg,
        #[arg(long)]
        count: u64,
        #[arg(long)]
        seed: u64,
        #[arg(long, default_value_t = 1)]
        jobs: usize,
        #[arg(long, default_value_t = 200)]
        size_budget: usize,
        #[arg(long, value_enum, default_value_t)]
        format: Format,
        /// Directory for reproducers of violations.
        #[arg(long, default_value = "fuzz-out")]
        out: PathBuf,
    },
}

/// A failure that maps straight to an exit status.
struct Exit(u8);

fn print_diags(diags: &[Diagnostic], format: Format) {
    match format {
        Format::Json => println!("{}", diagnostic::to_json(diags)),
        Format::Text => {
            for d in diags {
                println!("{d}");
            }
        }
    }
}

fn eprint_diags(diags: &[Diagnostic]) {
    for d in diags {
        eprintln!("{d}");
    }
}

fn read_source(path: &Path) -> Result<String> {
    std::fs::read_to_string(path).with_context(|| format!("cannot read {}", path.display()))
}

/// A resolved program with the requested checker's diagnostics, or the
/// parse/hierarchy errors that stopped it.
type Loaded = std::result::Result<(Program, ContractTable, Vec<Diagnostic>), Vec<Diagnostic>>;

fn load_program(path: &Path, typing: Typing) -> Result<Loaded> {
    let src = read_source(path)?;
    let file = path.display().to_string();
    let p = match parse_file(&file, &src) {
        Ok(p) => p,
        Err(d) => return Ok(Err(d)),
    };
    let t = match resolve_hierarchy(&p) {
        Ok(t) => t,
        Err(d) => return Ok(Err(d)),
    };
    let diags = check(typing, &p, &t);
    Ok(Ok((p, t, diags)))
}

fn cmd_check(typing: Typing, format: Format, file: &Path) -> Result<u8> {
    let diags = match load_program(file, typing)? {
        Ok((_, _, d)) | Err(d) => d,
    };
    print_diags(&diags, format);
    if has_errors(&diags) {
        Ok(EXIT_TYPE_ERRORS)
    } else {
        if format == Format::Text {
            eprintln!("{}: ok ({typing})", file.display());
        }
        Ok(0)
    }
}

fn cmd_run(typing: Typing, scenario: &Path, force: bool, trace: Option<&Path>, format: Format, file: &Path) -> Result<u8> {
    let (p, t, diags) = match load_program(file, typing)? {
        Ok(ok) => ok,
        Err(d) => {
            eprint_diags(&d);
            return Ok(EXIT_TYPE_ERRORS);
        }
    };
    if has_errors(&diags) {
        eprint_diags(&diags);
        if !force {
            eprintln!("refusing to run a program the {typing} checker rejects (use --force)");
            return Ok(EXIT_TYPE_ERRORS);
        }
    }
    let sc = match load_scenario(scenario, &t) {
        Ok(sc) => sc,
        Err(d) => {
            eprint_diags(&d);
            return Err(Exit(EXIT_USAGE).into());
        }
    };
    let entry = validate_entry_constraints(&scenario.display().to_string(), &sc, &p, &t, typing);
    eprint_diags(&entry);
    if has_errors(&entry) && !force {
        eprintln!("scenario violates the {typing} entry rules (use --force)");
        return Ok(EXIT_TYPE_ERRORS);
    }
    let report = run_scenario(&t, &sc, typing);
    if let Some(path) = trace {
        let events: Vec<_> = report.traces().cloned().collect();
        std::fs::write(path, to_json_lines(&events)).with_context(|| format!("cannot write trace to {}", path.display()))?;
    }
    match format {
        Format::Json => println!("{}", report.to_json()),
        Format::Text => print!("{}", report.render_text()),
    }
    Ok(report.exit_status as u8)
}

fn cmd_diff(format: Format, file: &Path) -> Result<u8> {
    let (p, t) = match load_program(file, Typing::Baseline)? {
        Ok((p, t, _)) => (p, t),
        Err(d) => {
            print_diags(&d, format);
            return Ok(EXIT_TYPE_ERRORS);
        }
    };
    let diff = diff_checkers(&p, &t);
    match format {
        Format::Json => println!("{}", serde_json::to_string_pretty(&diff)?),
        Format::Text => print!("{}", diff.render_text()),
    }
    Ok(if diff.agree() { 0 } else { EXIT_TYPE_ERRORS })
}

fn write_reproducers(report: &CampaignReport, out: &Path) -> Result<()> {
    if report.violations.is_empty() {
        return Ok(());
    }
    std::fs::create_dir_all(out).with_context(|| format!("cannot create {}", out.display()))?;
    for v in &report.violations {
        let base = out.join(format!("seed-{}", v.seed));
        std::fs::write(base.with_extension("fsol"), &v.program)?;
        std::fs::write(base.with_extension("scenario.json"), v.scenario_json())?;
    }
    eprintln!("{} reproducer(s) written to {}", report.violations.len(), out.display());
    Ok(())
}

fn cmd_fuzz(mode: FuzzMode, count: u64, seed: u64, jobs: usize, size_budget: usize, format: Format, out: &Path) -> Result<u8> {
    let cfg = CampaignConfig { jobs: jobs.max(1), size_budget, ..CampaignConfig::new(mode, count, seed) };
    let report = run_campaign(&cfg);
    write_reproducers(&report, out)?;
    match format {
        Format::Json => println!("{}", report.to_json()),
        Format::Text => print!("{}", report.render_text()),
    }
    Ok(report.exit_code() as u8)
}

fn dispatch(cli: Cli) -> Result<u8> {
    match cli.command {
        Command::Check { typing, format, file } => cmd_check(typing.into(), format, &file),
        Command::Run { typing, scenario, force, trace, format, file } => cmd_run(typing.into(), &scenario, force, trace.as_deref(), format, &file),
        Command::Diff { format, file } => cmd_diff(format, &file),
        Command::Fuzz { mode, count, seed, jobs, size_budget, format, out } => cmd_fuzz(mode.into(), count, seed, jobs, size_budget, format, &out),
    }
}

impl std::fmt::Debug for Exit {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "exit {}", self.0)
    }
}

impl std::fmt::Display for Exit {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "exit {}", self.0)
    }
}

impl std::error::Error for Exit {}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { EXIT_USAGE } else { 0 });
        }
    };
    match dispatch(cli) {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            if let Some(Exit(code)) = e.downcast_ref::<Exit>() {
                return ExitCode::from(*code);
            }
            eprintln!("error: {e:#}");
            ExitCode::from(EXIT_USAGE)
        }
    }
}
