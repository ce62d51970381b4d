use std::fs;
use std::io::{self, BufRead, BufReader, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use tdl_core::containment::decide_containment;
use tdl_core::dtp::{decide_dtp_general, decide_dtp_nonrecursive, DtpInstance};
use tdl_core::forget::{decide_forget, ForgetInstance};
use tdl_core::offline::{decide_delay, decide_window, minimal_delay, minimal_window};
use tdl_core::stream::{run_offline, run_online, Emission, OnlineOptions, SessionSummary};
use tdl_core::textio::{parse_dataset, parse_source, render_answers, render_empty, StreamReader};
use tdl_core::{Dataset, DecisionError, ParseError, Query, StreamError, Symbol};

#[derive(Parser)]
#[command(name = "tdl", version, about = "Temporal Datalog stream reasoning")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum Mode {
    Online,
    Offline,
}

#[derive(clap::Args)]
struct ProgramArgs {
    /// Program file.
    #[arg(long)]
    program: PathBuf,
    /// Output predicate; overrides the `@query` directive of the file.
    #[arg(long)]
    query: Option<String>,
}

#[derive(Subcommand)]
enum Command {
    /// Stream answers over an event stream.
    Run {
        #[arg(long, value_enum)]
        mode: Mode,
        #[command(flatten)]
        program: ProgramArgs,
        /// Delay for offline mode; the minimal delay when omitted.
        #[arg(long)]
        d: Option<u64>,
        /// Window for offline mode; the minimal window when omitted.
        #[arg(long)]
        s: Option<u64>,
        /// Use the given delay and window without checking them.
        #[arg(long)]
        trust: bool,
        /// Keep all data in online mode.
        #[arg(long)]
        no_forget: bool,
        /// Event file, or `-` for standard input.
        #[arg(long, default_value = "-")]
        stream: String,
    },
    /// Decide whether the answers at t-out are definitive.
    Dtp {
        #[command(flatten)]
        program: ProgramArgs,
        #[arg(long)]
        history: PathBuf,
        #[arg(long)]
        t_in: i64,
        #[arg(long)]
        t_out: i64,
        /// Use the procedure for nonrecursive connected queries.
        #[arg(long)]
        nonrecursive: bool,
    },
    /// Decide whether data up to t-mem can be dropped.
    Forget {
        #[command(flatten)]
        program: ProgramArgs,
        #[arg(long)]
        history: PathBuf,
        #[arg(long)]
        t_in: i64,
        #[arg(long)]
        t_out: i64,
        #[arg(long)]
        t_mem: i64,
    },
    /// Decide containment of two queries.
    Contain {
        #[arg(long)]
        q1: PathBuf,
        #[arg(long)]
        q2: PathBuf,
    },
    /// Check a delay or compute the minimal one.
    Delay {
        #[command(flatten)]
        program: ProgramArgs,
        #[arg(long, conflicts_with = "minimal", required_unless_present = "minimal")]
        d: Option<u64>,
        #[arg(long)]
        minimal: bool,
    },
    /// Check a window or compute the minimal one for a delay.
    Window {
        #[command(flatten)]
        program: ProgramArgs,
        #[arg(long)]
        d: u64,
        #[arg(long, conflicts_with = "minimal", required_unless_present = "minimal")]
        s: Option<u64>,
        #[arg(long)]
        minimal: bool,
    },
}

/// A failure with its exit code.
enum Failure {
    Validation(String),
    Decision(String),
    Io(String),
}

impl Failure {
    fn code(&self) -> u8 {
        match self {
            Failure::Io(_) => 1,
            Failure::Validation(_) => 2,
            Failure::Decision(_) => 3,
        }
    }

    fn message(&self) -> &str {
        match self {
            Failure::Validation(m) | Failure::Decision(m) | Failure::Io(m) => m,
        }
    }
}

impl From<DecisionError> for Failure {
    fn from(e: DecisionError) -> Self {
        match e {
            DecisionError::Invalid(_) | DecisionError::Instance(_) => Failure::Validation(e.to_string()),
            _ => Failure::Decision(e.to_string()),
        }
    }
}

impl From<StreamError> for Failure {
    fn from(e: StreamError) -> Self {
        match e {
            StreamError::Decision(d) => d.into(),
            e => Failure::Validation(e.to_string()),
        }
    }
}

fn read(path: &Path) -> Result<String, Failure> {
    fs::read_to_string(path).map_err(|e| Failure::Io(format!("{}: {e}", path.display())))
}

fn parse_failure(path: &Path, e: ParseError) -> Failure {
    Failure::Validation(format!("{}: {e}", path.display()))
}

fn load_query(path: &Path, output: Option<&str>) -> Result<Query, Failure> {
    let source = parse_source(&read(path)?).map_err(|e| parse_failure(path, e))?;
    let query = source.into_query(output).map_err(|e| parse_failure(path, e))?;
    let report = query.validate();
    if !report.is_ok() {
        return Err(Failure::Validation(format!("{}: {report}", path.display())));
    }
    Ok(query)
}

fn load_program(args: &ProgramArgs) -> Result<Query, Failure> {
    load_query(&args.program, args.query.as_deref())
}

fn load_history(path: &Path, query: &Query) -> Result<Dataset, Failure> {
    parse_dataset(&read(path)?, Some(&query.program)).map_err(|e| parse_failure(path, e))
}

fn print_verdict(v: bool) {
    println!("{v}");
}

struct AnswerSink<W: Write> {
    out: W,
    pred: Symbol,
    error: Option<io::Error>,
}

impl<W: Write> AnswerSink<W> {
    fn write(&mut self, e: Emission) {
        if self.error.is_some() {
            return;
        }
        let lines = if e.tuples.is_empty() { vec![render_empty(&self.pred, e.t_out)] } else { render_answers(&self.pred, e.t_out, &e.tuples) };
        let result = lines.iter().try_for_each(|l| writeln!(self.out, "{l}")).and_then(|_| self.out.flush());
        if let Err(err) = result {
            self.error = Some(err);
        }
    }
}

fn report_summary(mode: &str, s: &SessionSummary) {
    eprintln!(
        "{mode} session: ticks={} emitted={} t_in={} t_out={} t_mem={} peak_history={} peak_slices={}",
        s.ticks, s.emitted, s.t_in, s.t_out, s.t_mem, s.peak_history, s.peak_slices
    );
}

#[allow(clippy::too_many_arguments)]
fn run(
    mode: Mode,
    program: &ProgramArgs,
    d: Option<u64>,
    s: Option<u64>,
    trust: bool,
    no_forget: bool,
    stream: &str,
) -> Result<(), Failure> {
    let query = load_program(program)?;
    let input: Box<dyn BufRead> = if stream == "-" {
        Box::new(BufReader::new(io::stdin().lock()))
    } else {
        let file = fs::File::open(stream).map_err(|e| Failure::Io(format!("{stream}: {e}")))?;
        Box::new(BufReader::new(file))
    };
    let program_copy = query.program.clone();
    let events = StreamReader::new(input, Some(&program_copy));
    let mut sink = AnswerSink { out: io::stdout().lock(), pred: query.output.clone(), error: None };
    let summary = match mode {
        Mode::Online => {
            let options = OnlineOptions { forget: !no_forget };
            run_online(query, &options, events, &mut |e| sink.write(e))?
        }
        Mode::Offline => {
            let d = match d {
                Some(d) => d,
                None => minimal_delay(&query)?,
            };
            let s = match s {
                Some(s) => s,
                None => minimal_window(&query, d)?,
            };
            eprintln!("offline parameters: d={d} s={s}");
            run_offline(query, d, s, trust, events, &mut |e| sink.write(e))?
        }
    };
    if let Some(e) = sink.error {
        return Err(Failure::Io(format!("writing answers: {e}")));
    }
    report_summary(if matches!(mode, Mode::Online) { "online" } else { "offline" }, &summary);
    Ok(())
}

fn execute(cli: Cli) -> Result<(), Failure> {
    match cli.command {
        Command::Run { mode, program, d, s, trust, no_forget, stream } => run(mode, &program, d, s, trust, no_forget, &stream),
        Command::Dtp { program, history, t_in, t_out, nonrecursive } => {
            let query = load_program(&program)?;
            let history = load_history(&history, &query)?;
            let instance = DtpInstance::new(query, history, t_in, t_out)?;
            let v = if nonrecursive { decide_dtp_nonrecursive(&instance)? } else { decide_dtp_general(&instance)? };
            print_verdict(v);
            Ok(())
        }
        Command::Forget { program, history, t_in, t_out, t_mem } => {
            let query = load_program(&program)?;
            let history = load_history(&history, &query)?;
            print_verdict(decide_forget(&ForgetInstance::new(query, history, t_in, t_out, t_mem)?)?);
            Ok(())
        }
        Command::Contain { q1, q2 } => {
            let q1 = load_query(&q1, None)?;
            let q2 = load_query(&q2, None)?;
            print_verdict(decide_containment(&q1, &q2)?);
            Ok(())
        }
        Command::Delay { program, d, minimal } => {
            let query = load_program(&program)?;
            match d {
                Some(d) if !minimal => print_verdict(decide_delay(&query, d)?),
                _ => println!("{}", minimal_delay(&query)?),
            }
            Ok(())
        }
        Command::Window { program, d, s, minimal } => {
            let query = load_program(&program)?;
            match s {
                Some(s) if !minimal => print_verdict(decide_window(&query, d, s)?),
                _ => println!("{}", minimal_window(&query, d)?),
            }
            Ok(())
        }
    }
}

fn main() -> ExitCode {
    match execute(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("error: {}", f.message());
            ExitCode::from(f.code())
        }
    }
}
