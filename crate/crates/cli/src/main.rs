//! `qmi`: command-line front end over the matrix text format.
//!
//! Exit codes: 0 affirmative, 1 negative, 2 usage or input error,
//! 3 indeterminate, 4 numerical failure.

// `!(x >= 0)` is used on purpose so that NaN is rejected too.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

mod commands;
mod io;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use qmi_core::Tolerances64;

use crate::commands::Failure;

#[derive(Parser, Debug)]
#[command(name = "qmi", version, about = "Quadratic matrix inequality toolkit")]
struct Cli {
    #[command(flatten)]
    global: GlobalOpts,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Debug, Clone)]
pub struct GlobalOpts {
    /// Relative semidefinite tolerance.
    #[arg(long, global = true)]
    psd_tol: Option<f64>,
    /// Relative definite tolerance.
    #[arg(long, global = true)]
    pd_tol: Option<f64>,
    /// Relative rank cutoff.
    #[arg(long, global = true)]
    rank_tol: Option<f64>,
    /// Relative residual tolerance.
    #[arg(long, global = true)]
    residual_tol: Option<f64>,
    /// Also write the report to this file.
    #[arg(long, short, global = true)]
    output: Option<PathBuf>,
}

impl GlobalOpts {
    fn tolerances(&self) -> Result<Tolerances64, Failure> {
        let d = Tolerances64::default();
        Tolerances64::new(
            self.psd_tol.unwrap_or(d.psd),
            self.pd_tol.unwrap_or(d.pd),
            self.rank_tol.unwrap_or(d.rank),
            self.residual_tol.unwrap_or(d.residual),
        )
        .map_err(Failure::from)
    }
}

/// Block split of a partitioned matrix. Missing values fall back to `q`/`r`
/// entries in the file, then to the complement of the other one.
#[derive(Args, Debug, Clone, Copy)]
pub struct Split {
    #[arg(long)]
    q: Option<usize>,
    #[arg(long)]
    r: Option<usize>,
}

#[derive(ValueEnum, Debug, Clone, Copy, PartialEq, Eq)]
pub enum Mode {
    Nonstrict,
    Strict,
    /// `M - αN ⪰ diag(βI, 0)` with `β > 0`.
    AlphaBeta,
}

#[derive(ValueEnum, Debug, Clone, Copy, PartialEq, Eq)]
pub enum Kind {
    Nonstrict,
    Strict,
    Zero,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Structural verdicts for a solution set, optionally a membership test.
    Analyze {
        pi: PathBuf,
        #[command(flatten)]
        split: Split,
        /// File holding a candidate `Z`.
        #[arg(long)]
        member: Option<PathBuf>,
        #[arg(long, value_enum, default_value = "nonstrict")]
        kind: Kind,
    },
    /// Random members drawn through the parameterization.
    Sample {
        pi: PathBuf,
        #[command(flatten)]
        split: Split,
        #[arg(long, default_value_t = 10)]
        count: usize,
        #[arg(long)]
        seed: u64,
        #[arg(long)]
        strict: bool,
        /// Scale of the free part along the kernel of the lower-right block.
        #[arg(long, default_value_t = 1.0)]
        spread: f64,
    },
    /// Multiplier search for the inclusion of the `N` set in the `M` set.
    Certify {
        m: PathBuf,
        n: PathBuf,
        #[arg(long)]
        q: Option<usize>,
        #[arg(long, value_enum, default_value = "nonstrict")]
        mode: Mode,
        /// Search for a counterexample when no certificate is found.
        #[arg(long, requires = "seed")]
        falsify: bool,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long, default_value_t = 300)]
        budget: usize,
    },
    /// Hypothesis checks for the case of a zero Schur complement.
    Finsler {
        m: PathBuf,
        n: PathBuf,
        #[arg(long)]
        q: Option<usize>,
        #[arg(long, value_enum, default_value = "nonstrict")]
        mode: Mode,
    },
    /// Multiplier for a norm-bounded uncertainty (`C`, `E`, `Fbar`, `G`).
    Petersen {
        input: PathBuf,
        #[arg(long, value_enum, default_value = "strict")]
        mode: Mode,
    },
    /// Set of `Z W` for members `Z`, optionally lifting a member back.
    Project {
        pi: PathBuf,
        w: PathBuf,
        #[command(flatten)]
        split: Split,
        /// File holding a member of the projected set.
        #[arg(long)]
        lift: Option<PathBuf>,
        #[arg(long)]
        strict: bool,
    },
    /// Runs `x+ = A x + B u + w` from `A`, `B`, `x0` and optional `U`, `W`.
    Simulate {
        system: PathBuf,
        /// Horizon for randomly drawn inputs (when the file has no `U`).
        #[arg(long)]
        horizon: Option<usize>,
        /// Draw noise columns uniformly from the ball of this radius.
        #[arg(long)]
        noise_eps: Option<f64>,
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Controller design from data by the full LMI.
    Stabilize(DesignArgs),
    /// Controller design by the reduced LMI and the explicit gain.
    StabilizeReduced(DesignArgs),
    /// Design under Gaussian noise with confidence `1 - delta`.
    Gaussian {
        data: PathBuf,
        #[arg(long)]
        sigma: f64,
        #[arg(long, default_value_t = 0.05)]
        delta: f64,
        #[arg(long)]
        nonstrict: bool,
        #[arg(long)]
        system: Option<PathBuf>,
    },
    /// Checks a controller on sampled systems explaining the data.
    Verify {
        data: PathBuf,
        controller: PathBuf,
        #[arg(long, default_value_t = 200)]
        samples: usize,
        #[arg(long)]
        seed: u64,
        /// Noise description when the data file has none.
        #[arg(long)]
        noise: Option<PathBuf>,
        /// True `A`, `B` to check as well.
        #[arg(long)]
        system: Option<PathBuf>,
    },
}

#[derive(Args, Debug)]
pub struct DesignArgs {
    data: PathBuf,
    /// Noise description when the data file has none.
    #[arg(long)]
    noise: Option<PathBuf>,
    /// Keep `β` even when the strict variant applies.
    #[arg(long)]
    nonstrict: bool,
    /// True `A`, `B` to check the designed loop against.
    #[arg(long)]
    system: Option<PathBuf>,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let outcome = cli.global.tolerances().and_then(|tol| commands::dispatch(&cli.command, &tol));
    let (report, code) = match outcome {
        Ok(out) => (Some(out.report), out.verdict.code()),
        Err(f) => {
            eprintln!("qmi: {}", f.message());
            (f.report(&cli.command), f.code())
        }
    };
    if let Some(doc) = report {
        let text = doc.to_string();
        print!("{text}");
        if let Some(path) = &cli.global.output {
            if let Err(e) = std::fs::write(path, &text) {
                eprintln!("qmi: cannot write {}: {e}", path.display());
                return ExitCode::from(2);
            }
        }
    }
    ExitCode::from(code)
}
