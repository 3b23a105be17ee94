//! `kr2kh`: Khovanov and Khovanov–Rozansky sl(2) homology of link diagrams,
//! and a check that the two agree through an explicit cube isomorphism.

use std::fmt::Write as _;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

use kr2kh::bridge::{self, Check, EdgeSource};
use kr2kh::diagram::{diagram_from_arg, LinkDiagram, BUILTIN};
use kr2kh::khcube::{kauffman_bracket_jones, khovanov_homology};
use kr2kh::krcube::{self, describe_vertex, KrCube};
use kr2kh::linalg::BigradedDimTable;

#[derive(Parser)]
#[command(name = "kr2kh", version, about = "Khovanov and sl(2) Khovanov-Rozansky homology of link diagrams")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Khovanov homology from the ordinary cube of smoothings.
    Kh(Common),
    /// sl(2) Khovanov-Rozansky homology from matrix factorizations.
    Kr(KrArgs),
    /// Build the cube isomorphism and check it edge by edge.
    Verify(VerifyArgs),
    /// Jones polynomial from the Kauffman-bracket state sum.
    Jones(Common),
}

#[derive(Args)]
struct Common {
    /// PD code such as "X[4,2,5,1];X[6,4,1,3];X[2,6,3,5]", or a built-in name.
    #[arg(long, conflicts_with = "input", required_unless_present = "input")]
    pd: Option<String>,
    /// File holding a PD code or built-in name.
    #[arg(long)]
    input: Option<std::path::PathBuf>,
    #[arg(long, value_enum, default_value_t = Format::Text)]
    format: Format,
}

#[derive(Args)]
struct KrArgs {
    #[command(flatten)]
    common: Common,
    /// Print the unreduced factorization of every vertex.
    #[arg(long)]
    dump_mf: bool,
    /// Print the elimination trace of every vertex.
    #[arg(long)]
    dump_reduction: bool,
    /// Recompute every edge map through the full factorizations and compare.
    #[arg(long)]
    oracle_edges: bool,
}

#[derive(Args)]
struct VerifyArgs {
    #[command(flatten)]
    common: Common,
    /// Enumerate up to this many alternative paths when checking tau.
    #[arg(long)]
    tau_trials: Option<usize>,
    /// Base marks, one per component, comma separated.
    #[arg(long, value_delimiter = ',')]
    base_point: Option<Vec<usize>>,
    /// Use edge maps transported through the full factorizations.
    #[arg(long)]
    oracle_edges: bool,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Text,
    Json,
}

#[derive(Serialize)]
struct Output {
    table: BigradedDimTable,
    poincare: String,
    checks: Vec<Check>,
}

enum Failure {
    Input(String),
    Internal(String),
}

impl Common {
    fn diagram(&self) -> Result<LinkDiagram, Failure> {
        let text = match (&self.pd, &self.input) {
            (Some(pd), _) => pd.clone(),
            (None, Some(path)) => std::fs::read_to_string(path)
                .map_err(|e| Failure::Input(format!("cannot read {}: {e}", path.display())))?,
            (None, None) => unreachable!("clap requires one of --pd and --input"),
        };
        diagram_from_arg(text.trim()).map_err(|e| {
            let names: Vec<&str> = BUILTIN.iter().map(|(n, _)| *n).collect();
            Failure::Input(format!("{e} (built-in diagrams: {})", names.join(", ")))
        })
    }
}

fn internal(e: impl std::fmt::Display) -> Failure {
    Failure::Internal(e.to_string())
}

fn emit(format: Format, preamble: &str, out: &Output) {
    match format {
        Format::Text => {
            print!("{preamble}");
            if !out.table.dims.is_empty() || out.checks.is_empty() {
                print!("{}", out.table);
            }
            println!("{}", out.poincare);
            for c in &out.checks {
                let status = if c.passed() { "PASS" } else { "FAIL" };
                println!("{status} {}: {}", c.name, c.detail);
            }
        }
        Format::Json => {
            eprint!("{preamble}");
            println!("{}", serde_json::to_string_pretty(out).expect("output serializes"));
        }
    }
}

fn cmd_kh(args: &Common) -> Result<bool, Failure> {
    let d = args.diagram()?;
    let table = khovanov_homology(&d).map_err(internal)?;
    let poincare = table.poincare().to_string();
    emit(args.format, "", &Output { table, poincare, checks: Vec::new() });
    Ok(true)
}

fn calibrated_cube(d: &LinkDiagram) -> Result<(KrCube, Vec<i32>), Failure> {
    let mut cube = krcube::reduce_all(d).map_err(internal)?;
    let tau = bridge::compute_tau(d, None).map_err(internal)?.values;
    krcube::calibrate_generators(d, &mut cube, &tau).map_err(internal)?;
    Ok((cube, tau))
}

fn cmd_kr(args: &KrArgs) -> Result<bool, Failure> {
    let d = args.common.diagram()?;
    let (cube, tau) = calibrated_cube(&d)?;
    let mut preamble = String::new();
    for (v, trace) in cube.vertices.iter().zip(&cube.traces) {
        if args.dump_mf {
            let _ = writeln!(preamble, "factorization at {}:\n{}", v.vertex, trace.full.dump());
        }
        if args.dump_reduction {
            let _ = writeln!(preamble, "reduction at {}:", v.vertex);
            for step in &trace.steps {
                let _ = writeln!(preamble, "  {step}");
            }
            let _ = writeln!(preamble, "  result {}", describe_vertex(v));
        }
    }
    let edges = krcube::fast_edges(&d, &cube, &tau).map_err(internal)?;
    let mut checks = Vec::new();
    if args.oracle_edges {
        let oracle = krcube::oracle_edges(&d, &cube).map_err(internal)?;
        let bad: Vec<String> = edges
            .iter()
            .zip(&oracle)
            .filter(|(f, o)| f.matrix != o.matrix)
            .map(|(f, _)| format!("{} -> {}", f.source, f.target))
            .collect();
        let detail = if bad.is_empty() {
            format!("all {} edges agree", edges.len())
        } else {
            format!("{} of {} edges disagree: {}", bad.len(), edges.len(), bad.join(", "))
        };
        checks.push(Check::new("oracle edges", bad.is_empty(), detail));
    }
    let table = krcube::kr_homology(&cube, &edges).map_err(internal)?;
    let poincare = table.poincare().to_string();
    let ok = checks.iter().all(Check::passed);
    emit(args.common.format, &preamble, &Output { table, poincare, checks });
    Ok(ok)
}

fn cmd_verify(args: &VerifyArgs) -> Result<bool, Failure> {
    let d = args.common.diagram()?;
    let source = if args.oracle_edges { EdgeSource::Oracle } else { EdgeSource::Fast };
    let report = bridge::verify(&d, args.base_point.as_deref(), source).map_err(|e| match e {
        bridge::BridgeError::BadBasePoint(_) | bridge::BridgeError::BasePointCount { .. } => {
            Failure::Input(e.to_string())
        }
        e => internal(e),
    })?;
    let mut checks = report.checks.clone();
    if let Some(trials) = args.tau_trials {
        let tau = bridge::compute_tau(&d, args.base_point.as_deref()).map_err(internal)?;
        let paths = bridge::tau_multipath_check(&d, &tau, trials);
        let detail = format!(
            "{} paths{}, {} conflicts",
            paths.paths_checked,
            if paths.exhaustive { " (exhaustive)" } else { "" },
            paths.conflicts.len()
        );
        checks.push(Check::new("tau multipath", paths.passed(), detail));
    }
    let table = report.theorem.kh.clone();
    let poincare = table.poincare().to_string();
    let ok = checks.iter().all(Check::passed);
    emit(args.common.format, "", &Output { table, poincare, checks });
    Ok(ok)
}

fn cmd_jones(args: &Common) -> Result<bool, Failure> {
    let d = args.diagram()?;
    let poincare = kauffman_bracket_jones(&d).to_string();
    let out = Output {
        table: BigradedDimTable::default(),
        poincare,
        checks: Vec::new(),
    };
    match args.format {
        Format::Text => println!("{}", out.poincare),
        Format::Json => emit(Format::Json, "", &out),
    }
    Ok(true)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match &cli.command {
        Command::Kh(a) => cmd_kh(a),
        Command::Kr(a) => cmd_kr(a),
        Command::Verify(a) => cmd_verify(a),
        Command::Jones(a) => cmd_jones(a),
    };
    match result {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(Failure::Input(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
        Err(Failure::Internal(msg)) => {
            eprintln!("internal error: {msg}");
            ExitCode::from(1)
        }
    }
}
