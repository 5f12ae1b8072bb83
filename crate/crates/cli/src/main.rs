//! `elastica`: file-based front end for the elastica library.
//!
//! Results are JSON documents on stdout (or `--out`) carrying the SHA-256 of
//! every input and an echo of the options; `asf` writes CSV. Exit codes:
//! 0 ok, 1 usage or failed fixtures, 2 invalid input, 3 I/O, 4 undecided,
//! 5 resource guard.

mod commands;
mod fixtures;

use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};
use serde::Serialize;

#[derive(Parser, Debug)]
#[command(name = "elastica", version, about = "Extremal length, harmonic maps and embedding energy on elastic graphs")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
    #[command(flatten)]
    pub opts: Options,
}

#[derive(Args, Clone, Debug, Serialize)]
pub struct Options {
    /// Convergence tolerance.
    #[arg(long, global = true, default_value_t = 1e-9)]
    pub tol: f64,
    /// Iteration cap for the harmonic solver and the width iteration.
    #[arg(long, global = true, default_value_t = 400)]
    pub max_iters: usize,
    /// Largest iterate for asf and certify.
    #[arg(long, global = true, default_value_t = 4)]
    pub n_max: usize,
    /// Longest cycle enumerated for curve lower bounds.
    #[arg(long, global = true, default_value_t = 6)]
    pub max_steps: usize,
    #[arg(long, global = true, default_value_t = 0)]
    pub seed: u64,
    /// Worker threads for sweeps.
    #[arg(long, global = true, default_value_t = 1)]
    pub jobs: usize,
    /// Exact rational arithmetic where the computation allows it.
    #[arg(long, global = true)]
    pub rational: bool,
    /// Write the result here instead of stdout.
    #[arg(long, global = true)]
    #[serde(skip)]
    pub out: Option<PathBuf>,
}

#[derive(Subcommand, Debug, Clone)]
pub enum Command {
    /// Check graph, cover, map, virtual endomorphism or transition documents.
    Validate { files: Vec<PathBuf> },
    /// Extremal length of a curve on an elastic graph.
    El { graph: PathBuf, curve: PathBuf },
    /// Dirichlet energy and Lipschitz constant of a map.
    Dir { map: PathBuf },
    /// Harmonic representative of a map.
    Harmonic {
        map: PathBuf,
        /// Comma-separated domain vertices that keep their images.
        #[arg(long)]
        fix: Option<String>,
    },
    /// Bracket for the embedding energy of a map or virtual endomorphism.
    Emb { input: PathBuf },
    /// n-th iterate of a virtual endomorphism.
    Iterate {
        ve: PathBuf,
        #[arg(long, default_value_t = 2)]
        n: usize,
    },
    /// Embedding energy of iterates, as CSV.
    Asf {
        ve: PathBuf,
        /// Base weights `edge=value;...`; repeat for a sweep.
        #[arg(long = "param")]
        params: Vec<String>,
    },
    /// Search for an iterate with embedding energy below 1.
    Certify { ve: PathBuf },
    /// Spectral radius of the transition matrix of an annular system.
    Obstruction { transition: PathBuf },
    /// Re-run the checks of every fixture directory.
    RunAllFixtures {
        #[arg(default_value = "fixtures")]
        dir: PathBuf,
    },
}

/// What a command produced.
pub struct Outcome {
    pub code: i32,
    pub text: String,
}

/// Parses and runs a command line (without the program name).
pub fn execute(args: &[String]) -> Outcome {
    let argv = std::iter::once("elastica".to_string()).chain(args.iter().cloned());
    match Cli::try_parse_from(argv) {
        Ok(cli) => commands::run(&cli),
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            Outcome { code, text: e.to_string() }
        }
    }
}

fn main() {
    let args: Vec<String> = std::env::args().skip(1).collect();
    let out = match Cli::try_parse_from(std::iter::once("elastica".to_string()).chain(args.iter().cloned())) {
        Ok(cli) => {
            let res = commands::run(&cli);
            if let Some(path) = &cli.opts.out {
                if let Err(e) = std::fs::write(path, &res.text) {
                    eprintln!("{}: {e}", path.display());
                    std::process::exit(3);
                }
                res.code
            } else {
                print!("{}", res.text);
                res.code
            }
        }
        Err(e) => {
            let _ = e.print();
            if e.use_stderr() { 1 } else { 0 }
        }
    };
    std::process::exit(out);
}
