use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use bnbalign::error::AlignError;
use bnbalign::io::{read_cloud, write_result, write_trace};
use bnbalign::pipeline::{align, AlignmentConfig};
use bnbalign::tess_s3::Tessellation;

#[derive(Parser)]
#[command(name = "bnbalign", version, about = "Globally optimal point cloud alignment")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Align a source cloud onto a target cloud
    Align(AlignArgs),
}

#[derive(Args)]
struct AlignArgs {
    /// cloud to be moved (PLY or XYZ)
    #[arg(long)]
    source: PathBuf,
    /// reference cloud the source is aligned onto
    #[arg(long)]
    target: PathBuf,
    /// angular clustering scales in degrees, comma separated
    #[arg(long, value_delimiter = ',', default_value = "45,65,80")]
    lambda_deg: Vec<f64>,
    /// spatial clustering scale; defaults to 10% of the target extent
    #[arg(long)]
    lambda_x: Option<f64>,
    /// rotational refinement depth (overrides --rot-tol-deg)
    #[arg(long)]
    rot_depth: Option<u32>,
    /// rotational tolerance in degrees
    #[arg(long)]
    rot_tol_deg: Option<f64>,
    /// translational refinement depth (overrides --trans-tol)
    #[arg(long)]
    trans_depth: Option<u32>,
    /// translational tolerance in length units
    #[arg(long)]
    trans_tol: Option<f64>,
    /// expand rotation candidates by the 24 cube symmetries
    #[arg(long)]
    mw: bool,
    /// neighborhood size for normal estimation
    #[arg(long, default_value_t = 10)]
    knn: usize,
    /// worker threads for candidate evaluation (output is thread-invariant)
    #[arg(long, default_value_t = 1)]
    threads: usize,
    /// use the union-of-bounding-boxes translation root instead of the
    /// Minkowski difference
    #[arg(long)]
    paper_box: bool,
    /// output JSON path
    #[arg(long)]
    out: PathBuf,
    /// optional CSV convergence trace path
    #[arg(long)]
    trace: Option<PathBuf>,
    /// accepted for interface stability; the pipeline is deterministic and
    /// ignores it
    #[arg(long)]
    seed: Option<u64>,
    /// optional tessellation cache file (generated if absent)
    #[arg(long)]
    tess_cache: Option<PathBuf>,
}

fn exit_code_for(err: &AlignError) -> ExitCode {
    match err {
        AlignError::Parse { .. } | AlignError::UnsupportedFormat(_) | AlignError::Io(_) => {
            ExitCode::from(2)
        }
        _ => ExitCode::from(3),
    }
}

fn run_align(args: &AlignArgs) -> Result<(), AlignError> {
    let target = read_cloud(&args.target)?;
    let source = read_cloud(&args.source)?;
    let tess = Tessellation::load_or_generate(args.tess_cache.as_deref())?;

    // depth flags win over tolerance flags; depth 11 / 10 when neither given
    let (rot_depth, rot_tol_deg) = match (args.rot_depth, args.rot_tol_deg) {
        (Some(d), _) => (Some(d), None),
        (None, Some(t)) => (None, Some(t)),
        (None, None) => (Some(11), None),
    };
    let (trans_depth, trans_tol) = match (args.trans_depth, args.trans_tol) {
        (Some(d), _) => (Some(d), None),
        (None, Some(t)) => (None, Some(t)),
        (None, None) => (Some(10), None),
    };

    let config = AlignmentConfig {
        lambda_deg_list: args.lambda_deg.clone(),
        lambda_x: args.lambda_x,
        rot_depth,
        rot_tol_deg,
        trans_depth,
        trans_tol,
        mw_enabled: args.mw,
        knn_k: args.knn,
        threads: args.threads,
        paper_box: args.paper_box,
        ..Default::default()
    };

    let result = align(&target, &source, &tess, &config)?;
    write_result(&result, &args.out)?;
    if let Some(trace_path) = &args.trace {
        write_trace(&result.trace, trace_path)?;
    }
    eprintln!(
        "aligned: q = [{:.6}, {:.6}, {:.6}, {:.6}], t = [{:.6}, {:.6}, {:.6}]",
        result.q.i, result.q.j, result.q.k, result.q.r, result.t.x, result.t.y, result.t.z
    );
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match &cli.command {
        Command::Align(args) => match run_align(args) {
            Ok(()) => ExitCode::SUCCESS,
            Err(e) => {
                eprintln!("error: {e}");
                exit_code_for(&e)
            }
        },
    }
}
