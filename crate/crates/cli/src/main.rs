//! `projkit`: projection complexes, windmills and free-product certificates
//! from the command line.

mod commands;
mod context;

use std::fs;
use std::io::{self, Write};
use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{Context as _, Result};
use clap::{Parser, Subcommand, ValueEnum};
use projkit::pipeline::RunReport;

use crate::context::Source;

#[derive(Parser, Debug)]
#[command(name = "projkit", version, about = "Projection complexes from rotating families")]
struct Cli {
    /// Worker threads for the parallel checks. Output does not depend on it.
    #[arg(long, global = true, env = "PROJKIT_WORKERS")]
    workers: Option<usize>,
    /// Write the JSON run report here.
    #[arg(long, global = true)]
    report: Option<PathBuf>,
    /// Print the JSON run report instead of the summary.
    #[arg(long, global = true)]
    json: bool,
    #[command(subcommand)]
    cmd: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Write instance files: `bass_serre H K S`, `cycle N`, `grid W H`, `tree ARITY DEPTH`.
    Generate {
        kind: String,
        params: Vec<u64>,
        #[arg(long, short, default_value = ".")]
        out: PathBuf,
        /// Normal-form syllables kept in a Bass-Serre view.
        #[arg(long, default_value_t = 6)]
        truncation: u32,
        /// Edge subdivision for explicit graphs.
        #[arg(long, default_value_t = 1)]
        subdivision: usize,
    },
    /// Derive the constants for δ and ρ and print the inequality ledger.
    Params {
        #[arg(long)]
        delta: u64,
        #[arg(long)]
        rho: u64,
        #[arg(long = "R")]
        r: Option<u64>,
        #[arg(long)]
        theta: Option<u64>,
    },
    /// Compute sphere projections and dump the projection data.
    Project {
        #[command(flatten)]
        src: Source,
        #[arg(long, short)]
        out: Option<PathBuf>,
    },
    /// Check P1, P2, P3 (and P2+ with --strong) on a window.
    CheckAxioms {
        #[command(flatten)]
        src: Source,
        /// Projection data dump from `project`, instead of an instance.
        #[arg(long)]
        data: Option<PathBuf>,
        #[arg(long)]
        window_radius: Option<usize>,
        #[arg(long)]
        strong: bool,
        /// Recompute every witness stored in an earlier report.
        #[arg(long)]
        replay: Option<PathBuf>,
    },
    /// Build the projection complex.
    BuildPc {
        #[command(flatten)]
        src: Source,
        #[arg(long = "K")]
        k: Option<u64>,
        #[arg(long)]
        window_radius: Option<usize>,
        #[arg(long)]
        dot: Option<PathBuf>,
    },
    /// Standard path between two apices, or the full audit suite.
    StandardPath {
        #[command(flatten)]
        src: Source,
        x: Option<String>,
        z: Option<String>,
        #[arg(long)]
        window_radius: Option<usize>,
        /// Run the quasi-geodesic, concatenation, tripod and distance-4 audits.
        #[arg(long)]
        suite: bool,
        #[arg(long)]
        dot: Option<PathBuf>,
    },
    /// Bounded geodesic image audit.
    BgiAudit {
        #[command(flatten)]
        src: Source,
        #[arg(long)]
        window_radius: Option<usize>,
        #[arg(long, default_value_t = projkit::pipeline::BGI_MAX_LENGTH)]
        max_len: usize,
    },
    /// Validate a canoeing path file.
    CanoeValidate {
        #[command(flatten)]
        src: Source,
        #[arg(long)]
        path: PathBuf,
        #[arg(long = "C")]
        c: Option<u64>,
    },
    /// Run the windmill recursion and certify the free product.
    Windmill {
        #[command(flatten)]
        src: Source,
        /// Base apex; defaults to the family's base.
        #[arg(long)]
        v0: Option<String>,
        #[arg(long, default_value_t = 2)]
        stages: usize,
        /// P-radius of the window around v0.
        #[arg(long, default_value_t = 6)]
        window: usize,
        /// Write one skeleton DOT file per stage here.
        #[arg(long)]
        dot_dir: Option<PathBuf>,
        /// Build a canoeing path between two windmill apices.
        #[arg(long, num_args = 2, value_names = ["X", "Y"])]
        canoe: Option<Vec<String>>,
        #[arg(long)]
        canoe_out: Option<PathBuf>,
    },
    /// Classify group elements as elliptic or loxodromic.
    Classify {
        #[command(flatten)]
        src: Source,
        #[arg(required = true)]
        elements: Vec<String>,
        #[arg(long, default_value_t = 8)]
        n_max: u32,
        #[arg(long, default_value_t = 2)]
        stages: usize,
        #[arg(long, default_value_t = 6)]
        window: usize,
        #[arg(long, default_value_t = projkit::family::DEFAULT_WORD_BOUND)]
        word_bound: usize,
    },
    /// Every stage from constants to certificate, halting at the first failure.
    Pipeline {
        #[command(flatten)]
        src: Source,
        #[arg(long, default_value_t = 2)]
        stages: usize,
        #[arg(long, default_value_t = 6)]
        window: usize,
        #[arg(long, default_value_t = 6)]
        axiom_radius: usize,
        #[arg(long, default_value_t = projkit::family::DEFAULT_WORD_BOUND)]
        word_bound: usize,
    },
    /// DOT export of the space, the complex or a windmill skeleton.
    ExportDot {
        #[command(flatten)]
        src: Source,
        what: DotKind,
        #[arg(long, short)]
        out: Option<PathBuf>,
        #[arg(long)]
        window_radius: Option<usize>,
        /// Highlight the standard path between two apices.
        #[arg(long, num_args = 2, value_names = ["X", "Z"])]
        path: Option<Vec<String>>,
        /// Skeleton stage.
        #[arg(long, default_value_t = 1)]
        stage: usize,
        #[arg(long, default_value_t = 6)]
        window: usize,
    },
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
enum DotKind {
    Space,
    Complex,
    Skeleton,
}

/// What a command hands back: the report plus human-readable lines.
pub struct Outcome {
    pub report: RunReport,
    pub text: Vec<String>,
    /// Printed verbatim instead of the summary (DOT on stdout).
    pub raw: Option<String>,
}

impl Outcome {
    pub fn new(report: RunReport, text: Vec<String>) -> Outcome {
        Outcome { report, text, raw: None }
    }
}

fn run(cli: Cli) -> Result<Outcome> {
    use commands::*;
    match cli.cmd {
        Command::Generate {
            kind,
            params,
            out,
            truncation,
            subdivision,
        } => generate(&kind, &params, &out, truncation, subdivision),
        Command::Params { delta, rho, r, theta } => params(delta, rho, r, theta),
        Command::Project { src, out } => project(&src, out.as_deref()),
        Command::CheckAxioms {
            src,
            data,
            window_radius,
            strong,
            replay,
        } => check_axioms(&src, data.as_deref(), window_radius, strong, replay.as_deref()),
        Command::BuildPc {
            src,
            k,
            window_radius,
            dot,
        } => build_pc(&src, k, window_radius, dot.as_deref()),
        Command::StandardPath {
            src,
            x,
            z,
            window_radius,
            suite,
            dot,
        } => standard_path(&src, x.as_deref(), z.as_deref(), window_radius, suite, dot.as_deref()),
        Command::BgiAudit {
            src,
            window_radius,
            max_len,
        } => bgi(&src, window_radius, max_len),
        Command::CanoeValidate { src, path, c } => canoe_validate(&src, &path, c),
        Command::Windmill {
            src,
            v0,
            stages,
            window,
            dot_dir,
            canoe,
            canoe_out,
        } => windmill(
            &src,
            v0.as_deref(),
            stages,
            window,
            dot_dir.as_deref(),
            canoe.as_deref(),
            canoe_out.as_deref(),
        ),
        Command::Classify {
            src,
            elements,
            n_max,
            stages,
            window,
            word_bound,
        } => classify(&src, &elements, n_max, stages, window, word_bound),
        Command::Pipeline {
            src,
            stages,
            window,
            axiom_radius,
            word_bound,
        } => pipeline(
            &src,
            projkit::pipeline::PipelineOptions {
                stages,
                radius: window,
                axiom_radius,
                word_bound,
            },
        ),
        Command::ExportDot {
            src,
            what,
            out,
            window_radius,
            path,
            stage,
            window,
        } => export_dot(&src, what, out.as_deref(), window_radius, path.as_deref(), stage, window),
    }
}

fn print_summary(o: &Outcome, out: &mut impl Write) -> io::Result<()> {
    let r = &o.report;
    for line in &o.text {
        writeln!(out, "{line}")?;
    }
    for s in &r.sections {
        writeln!(out, "[{}] {} ({} ms)", s.name, s.verdict, s.elapsed_ms)?;
        for rep in &s.reports {
            writeln!(out, "  {}", rep.summary_line())?;
            for w in rep.witnesses.iter().take(3) {
                writeln!(out, "    witness {:?} {}", w.labels, w.detail)?;
            }
        }
    }
    if let Some(h) = &r.halted {
        writeln!(out, "halted at {h}")?;
    }
    writeln!(out, "verdict: {} ({} ms)", r.verdict, r.elapsed_ms)
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    if let Some(n) = cli.workers {
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(n).build_global() {
            eprintln!("error: worker pool: {e}");
            return ExitCode::from(1);
        }
    }
    let (json, report_path) = (cli.json, cli.report.clone());
    let outcome = match run(cli) {
        Ok(o) => o,
        Err(e) => {
            eprintln!("error: {e:#}");
            return ExitCode::from(1);
        }
    };
    if let Some(p) = &report_path {
        let written = serde_json::to_string_pretty(&outcome.report)
            .map_err(anyhow::Error::from)
            .and_then(|s| fs::write(p, s).with_context(|| format!("writing {}", p.display())));
        if let Err(e) = written {
            eprintln!("error: {e:#}");
            return ExitCode::from(1);
        }
    }
    let mut out = io::stdout().lock();
    // a closed pipe downstream is not our failure
    let _ = if json {
        match serde_json::to_string_pretty(&outcome.report) {
            Ok(s) => writeln!(out, "{s}"),
            Err(e) => {
                eprintln!("error: {e}");
                return ExitCode::from(1);
            }
        }
    } else if let Some(raw) = &outcome.raw {
        write!(out, "{raw}")
    } else {
        print_summary(&outcome, &mut out)
    };
    ExitCode::from(outcome.report.exit_code() as u8)
}
