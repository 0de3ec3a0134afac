//! Convergence studies of the primal-dual weak Galerkin solver.
//!
//! Exit status: 0 on success, 1 on usage or setup errors, 2 when at least
//! one refinement level failed to solve.

use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::PathBuf;
use std::process::ExitCode;

use clap::Parser;

use pdwg::cases::{catalog, find_case};
use pdwg::study::{assemble_level, parse_levels, run_study, Format};

#[derive(Debug, Parser)]
#[command(name = "pdwg", version, about = "Primal-dual weak Galerkin convergence studies for elliptic Cauchy problems")]
struct Args {
    /// Test case id (see --list-cases).
    #[arg(long, required_unless_present = "list_cases")]
    case: Option<String>,

    /// Comma-separated mesh levels n (n x n squares, each cut in two).
    #[arg(long, default_value = "1,2,4,8,16,32")]
    levels: String,

    /// Polynomial degree k.
    #[arg(long, default_value_t = 1)]
    degree: usize,

    /// Output format: csv or markdown.
    #[arg(long, default_value = "csv")]
    format: Format,

    /// Write the table here instead of stdout.
    #[arg(long)]
    out: Option<PathBuf>,

    /// Write the finest-level system matrix in coordinate format.
    #[arg(long, value_name = "PATH")]
    dump_matrix: Option<PathBuf>,

    /// Print the available cases and exit.
    #[arg(long)]
    list_cases: bool,

    /// Report wall times as 0 so repeated runs give identical output.
    #[arg(long)]
    no_timing: bool,
}

enum Failure {
    Usage(String),
    Levels(usize),
}

fn run(args: Args) -> Result<(), Failure> {
    let usage = |e: &dyn std::fmt::Display| Failure::Usage(e.to_string());

    if args.list_cases {
        let mut out = io::stdout().lock();
        for c in catalog() {
            writeln!(out, "{:<5} {}", c.id, c.description).map_err(|e| usage(&e))?;
        }
        return Ok(());
    }

    let id = args.case.as_deref().unwrap_or_default();
    let case = find_case(id).map_err(|e| usage(&e))?;
    let levels = parse_levels(&args.levels).map_err(|e| usage(&e))?;
    let report = run_study(&case, &levels, args.degree, !args.no_timing).map_err(|e| usage(&e))?;

    let text = report.emit(args.format);
    match &args.out {
        Some(path) => std::fs::write(path, text).map_err(|e| usage(&format!("{}: {e}", path.display())))?,
        None => io::stdout().write_all(text.as_bytes()).map_err(|e| usage(&e))?,
    }

    if let Some(path) = &args.dump_matrix {
        let n = *levels.last().expect("levels are nonempty");
        let (_, _, system) = assemble_level(&case, n, args.degree).map_err(|e| usage(&e))?;
        let file = File::create(path).map_err(|e| usage(&format!("{}: {e}", path.display())))?;
        let mut w = BufWriter::new(file);
        system
            .write_coordinate(&mut w)
            .and_then(|_| w.flush())
            .map_err(|e| usage(&format!("{}: {e}", path.display())))?;
    }

    for l in report.failed_levels() {
        if let Err(msg) = &l.outcome {
            eprintln!("level n = {}: {msg}", l.n);
        }
    }
    match report.failed_levels().count() {
        0 => Ok(()),
        k => Err(Failure::Levels(k)),
    }
}

fn main() -> ExitCode {
    let args = match Args::try_parse() {
        Ok(a) => a,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(1) } else { ExitCode::SUCCESS };
        }
    };
    match run(args) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Usage(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(1)
        }
        Err(Failure::Levels(k)) => {
            eprintln!("{k} level(s) failed");
            ExitCode::from(2)
        }
    }
}
