//! Command-line front end: a script runner and interactive REPL exposing the
//! whole engine, with session load/save, parallel simplification, and plain
//! or LaTeX output.

mod commands;

use clap::Parser;
use std::io::{BufRead, IsTerminal, Write};
use std::process::ExitCode;

#[derive(Parser, Debug)]
#[command(
    name = "tensorium",
    about = "Symbolic tensor calculus for general relativity",
    long_about = "A symbolic tensor calculus engine. Commands are read from a script \
                  (one per line, '#' comments) or from an interactive prompt; run the \
                  `help` command for the command language."
)]
struct Args {
    /// Output format for displayed tensors
    #[arg(long, value_parser = ["plain", "latex"], default_value = "plain")]
    format: String,

    /// Parallel simplification: on, off, or auto (on for multi-core hosts)
    #[arg(long, value_parser = ["on", "off", "auto"], default_value = "off")]
    parallel: String,

    /// Worker threads for parallel simplification (0 = logical cores)
    #[arg(long, default_value_t = 0)]
    workers: usize,

    /// Load a session file before running
    #[arg(long)]
    load: Option<String>,

    /// Add a simplification assumption, e.g. "r >= 0" (repeatable)
    #[arg(long)]
    assume: Vec<String>,

    /// Run a script file instead of the REPL ("-" reads stdin)
    #[arg(long)]
    script: Option<String>,

    /// Script file (same as --script)
    file: Option<String>,
}

fn main() -> ExitCode {
    let args = Args::parse();
    let mut ctx = commands::Context::new();
    ctx.style = if args.format == "latex" {
        tensorium::expr::Style::Latex
    } else {
        tensorium::expr::Style::Plain
    };
    if args.workers > 0 {
        ctx.session.set_workers(args.workers);
    }
    match args.parallel.as_str() {
        "on" => {
            ctx.session.set_parallelization(true);
        }
        "auto" => {
            let cores = std::thread::available_parallelism()
                .map(|n| n.get())
                .unwrap_or(1);
            ctx.session.set_parallelization(cores > 1);
        }
        _ => {}
    }
    if let Some(path) = &args.load {
        if let Err(e) = ctx.session.import_all_from_file(path) {
            eprintln!("error: {e}");
            return commands::exit_code_for(&e);
        }
    }
    for a in &args.assume {
        if let Err(e) = commands::apply_assumption(&mut ctx.session, a) {
            eprintln!("error: {e}");
            return commands::exit_code_for(&e);
        }
    }

    let script = args.script.or(args.file);
    match script {
        Some(path) => run_script(&mut ctx, &path),
        None => {
            if std::io::stdin().is_terminal() {
                repl(&mut ctx)
            } else {
                run_script(&mut ctx, "-")
            }
        }
    }
}

/// Execute a script: commands run in order and the first error aborts with
/// the offending line number.
fn run_script(ctx: &mut commands::Context, path: &str) -> ExitCode {
    let text = if path == "-" {
        let mut buf = String::new();
        use std::io::Read;
        if let Err(e) = std::io::stdin().read_to_string(&mut buf) {
            eprintln!("error: {e}");
            return ExitCode::from(2);
        }
        buf
    } else {
        match std::fs::read_to_string(path) {
            Ok(t) => t,
            Err(e) => {
                eprintln!("error: cannot read {path}: {e}");
                return ExitCode::from(2);
            }
        }
    };
    for (lineno, line) in text.lines().enumerate() {
        match commands::run_line(ctx, line) {
            Ok(output) => {
                if !output.is_empty() {
                    println!("{output}");
                }
            }
            Err(e) => {
                eprintln!("error (line {}): {e}", lineno + 1);
                return commands::exit_code_for(&e);
            }
        }
        if ctx.quit {
            break;
        }
    }
    ExitCode::SUCCESS
}

/// Interactive loop: errors print and the session continues.
fn repl(ctx: &mut commands::Context) -> ExitCode {
    let stdin = std::io::stdin();
    let mut stdout = std::io::stdout();
    println!("tensorium {} — type `help` for commands, `quit` to exit", env!("CARGO_PKG_VERSION"));
    loop {
        print!("> ");
        let _ = stdout.flush();
        let mut line = String::new();
        match stdin.lock().read_line(&mut line) {
            Ok(0) => break,
            Ok(_) => {}
            Err(e) => {
                eprintln!("error: {e}");
                return ExitCode::from(2);
            }
        }
        match commands::run_line(ctx, &line) {
            Ok(output) => {
                if !output.is_empty() {
                    println!("{output}");
                }
            }
            Err(e) => eprintln!("error: {e}"),
        }
        if ctx.quit {
            break;
        }
    }
    ExitCode::SUCCESS
}

