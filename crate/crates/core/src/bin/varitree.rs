use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::error::ErrorKind;
use clap::{Args, CommandFactory, Parser, Subcommand, ValueEnum};

use varitree::inference::{self, IsoMode, RecoveryConfig};
use varitree::similarity::{self, SimilarityMatrix};
use varitree::tree::{self, EmbedConfig, EmbeddedTree};
use varitree::velocity::{self, IntegrationConfig, PipelineConfig, Placement, SampleConfig};
use varitree::{io, Error, Exec, KernelParams, Result};

const VALIDATOR_SAMPLES: usize = 50;

#[derive(Parser)]
#[command(name = "varitree", version, about = "Varifold distances between root-to-node curves and tree reconstruction")]
struct Cli {
    /// Worker threads; 1 selects the sequential reference path.
    #[arg(long, global = true, value_parser = clap::value_parser!(u16).range(1..))]
    threads: Option<u16>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a random rooted tree embedded with straight edges.
    Generate(GenerateArgs),
    /// Compute the node similarity matrix of an embedded tree.
    Distances(DistancesArgs),
    /// Reconstruct a tree from a similarity matrix (or directly from a tree).
    Infer(InferArgs),
    /// Sweep the kernel bandwidth and report the metric diagnostics.
    Convergence(ConvergenceArgs),
    /// Run the recovery experiment over many random trees.
    Experiment(ExperimentArgs),
    /// Synthetic velocity-field pipeline: sample, integrate, measure, infer.
    VelocityDemo(VelocityArgs),
}

#[derive(Args, Clone)]
struct TreeGenArgs {
    /// Number of nodes.
    #[arg(long, default_value_t = 10, value_parser = clap::value_parser!(u32).range(1..))]
    nodes: u32,
    /// Ambient dimension.
    #[arg(long, default_value_t = 2, value_parser = clap::value_parser!(u32).range(2..))]
    dim: u32,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = 3, value_parser = clap::value_parser!(u32).range(1..))]
    max_children: u32,
    /// Edge subdivision step.
    #[arg(long, default_value_t = 0.01, value_parser = positive)]
    step: f64,
    #[arg(long, default_value_t = 0.5, value_parser = positive)]
    edge_min: f64,
    #[arg(long, default_value_t = 1.0, value_parser = positive)]
    edge_max: f64,
    /// Minimum sibling and parent-child angle, degrees.
    #[arg(long, default_value_t = 15.0)]
    min_angle: f64,
    /// Maximum turn from the parent edge, degrees.
    #[arg(long, default_value_t = 90.0)]
    max_turn: f64,
    /// Clearance between non-adjacent edges (default 1% of mean edge length).
    #[arg(long, value_parser = positive)]
    clearance: Option<f64>,
}

impl TreeGenArgs {
    fn build(&self) -> Result<EmbeddedTree> {
        let cfg = EmbedConfig {
            edge_length_min: self.edge_min,
            edge_length_max: self.edge_max,
            min_angle_deg: self.min_angle,
            max_turn_deg: self.max_turn,
            step: self.step,
            clearance: self.clearance,
            ..Default::default()
        };
        let t = tree::random_tree(self.nodes as usize, self.max_children as usize, self.seed)?;
        tree::embed(&t, self.dim as usize, &cfg, self.seed)
    }
}

#[derive(Args)]
struct GenerateArgs {
    #[command(flatten)]
    tree: TreeGenArgs,
    /// A3 exponent.
    #[arg(long, default_value_t = 1.0)]
    a3_exponent: f64,
    #[arg(short, long)]
    output: PathBuf,
}

#[derive(Args, Clone, Copy)]
struct KernelArgs {
    /// Spatial bandwidth.
    #[arg(long, default_value_t = 0.05, value_parser = positive)]
    sigma_x: f64,
    /// Tangent bandwidth (defaults to sigma-x).
    #[arg(long, value_parser = positive)]
    sigma_t: Option<f64>,
}

impl KernelArgs {
    fn params(&self) -> Result<KernelParams> {
        let k = KernelParams::new(self.sigma_x, self.sigma_t.unwrap_or(self.sigma_x))?;
        eprintln!("sigma_x = {}, sigma_t = {}", k.sigma_x(), k.sigma_t());
        Ok(k)
    }
}

#[derive(Args)]
struct DistancesArgs {
    /// Embedded tree JSON.
    #[arg(long)]
    tree: PathBuf,
    #[command(flatten)]
    kernel: KernelArgs,
    /// Re-subdivide edges to at most this step first.
    #[arg(long, value_parser = positive)]
    step: Option<f64>,
    #[arg(short, long)]
    output: PathBuf,
}

#[derive(Args)]
struct InferArgs {
    /// Similarity matrix CSV.
    #[arg(long, conflicts_with = "tree", required_unless_present = "tree")]
    matrix: Option<PathBuf>,
    /// Embedded tree JSON; its matrix is computed first and it serves as
    /// ground truth.
    #[arg(long)]
    tree: Option<PathBuf>,
    /// Ground-truth tree JSON for the isomorphism verdict.
    #[arg(long, conflicts_with = "tree")]
    truth: Option<PathBuf>,
    /// Root node id (defaults to the ground-truth root, else the first id).
    #[arg(long)]
    root: Option<String>,
    /// Compare shapes only, ignoring node ids.
    #[arg(long)]
    relaxed: bool,
    #[command(flatten)]
    kernel: KernelArgs,
    #[arg(long, value_parser = positive)]
    step: Option<f64>,
    #[arg(short, long)]
    output: PathBuf,
}

#[derive(Args)]
struct LadderArgs {
    /// Explicit strictly decreasing bandwidths, comma separated.
    #[arg(long, value_delimiter = ',', conflicts_with_all = ["sigma0", "levels"])]
    sigmas: Option<Vec<f64>>,
    /// Largest bandwidth of the geometric ladder.
    #[arg(long, default_value_t = 0.4, value_parser = positive)]
    sigma0: f64,
    /// Rungs of the geometric ladder (each halves sigma).
    #[arg(long, default_value_t = 5, value_parser = clap::value_parser!(u32).range(1..))]
    levels: u32,
    /// sigma_t / sigma_x.
    #[arg(long, default_value_t = 1.0, value_parser = positive)]
    ratio: f64,
}

impl LadderArgs {
    fn ladder(&self) -> Vec<f64> {
        let sigmas = match &self.sigmas {
            Some(s) => s.clone(),
            None => similarity::default_ladder(self.sigma0, self.levels as usize),
        };
        if let Err(e) = similarity::check_ladder(&sigmas) {
            Cli::command().error(ErrorKind::ValueValidation, e.to_string()).exit();
        }
        sigmas
    }
}

#[derive(Args)]
struct ConvergenceArgs {
    /// Embedded tree JSON; a tree is generated from the flags otherwise.
    #[arg(long)]
    tree: Option<PathBuf>,
    #[command(flatten)]
    gen: TreeGenArgs,
    #[command(flatten)]
    ladder: LadderArgs,
    #[arg(short, long)]
    output: PathBuf,
}

#[derive(Args)]
struct ExperimentArgs {
    #[arg(long, default_value_t = 20, value_parser = clap::value_parser!(u32).range(1..))]
    trees: u32,
    #[command(flatten)]
    gen: TreeGenArgs,
    #[command(flatten)]
    ladder: LadderArgs,
    #[arg(short, long)]
    output: PathBuf,
}

#[derive(Clone, Copy, ValueEnum)]
enum PlacementArg {
    Nodes,
    Stations,
}

#[derive(Args)]
struct VelocityArgs {
    #[command(flatten)]
    gen: TreeGenArgs,
    #[command(flatten)]
    kernel: KernelArgs,
    /// Cells per edge defining the field.
    #[arg(long, default_value_t = 100, value_parser = clap::value_parser!(u32).range(1..))]
    per_edge: u32,
    #[arg(long, default_value_t = 0.0, value_parser = nonnegative)]
    noise_pos: f64,
    #[arg(long, default_value_t = 0.0, value_parser = nonnegative)]
    noise_vel: f64,
    #[arg(long, default_value_t = 1.0, value_parser = positive)]
    speed: f64,
    /// Field interpolation bandwidth (defaults to the step).
    #[arg(long, value_parser = positive)]
    bandwidth: Option<f64>,
    #[arg(long, default_value_t = 10_000, value_parser = clap::value_parser!(u32).range(1..))]
    max_steps: u32,
    /// Capture radius around the root (defaults to twice the step).
    #[arg(long, value_parser = positive)]
    capture: Option<f64>,
    #[arg(long, value_enum, default_value_t = PlacementArg::Nodes)]
    placement: PlacementArg,
    /// Largest tolerated fraction of failed cells.
    #[arg(long, default_value_t = 0.10, value_parser = fraction)]
    max_failures: f64,
    /// Output directory.
    #[arg(short, long)]
    output: PathBuf,
}

fn positive(s: &str) -> std::result::Result<f64, String> {
    match s.parse::<f64>() {
        Ok(v) if v > 0.0 && v.is_finite() => Ok(v),
        _ => Err(format!("expected a positive number, got {s:?}")),
    }
}

fn nonnegative(s: &str) -> std::result::Result<f64, String> {
    match s.parse::<f64>() {
        Ok(v) if v >= 0.0 && v.is_finite() => Ok(v),
        _ => Err(format!("expected a nonnegative number, got {s:?}")),
    }
}

fn fraction(s: &str) -> std::result::Result<f64, String> {
    match s.parse::<f64>() {
        Ok(v) if (0.0..=1.0).contains(&v) => Ok(v),
        _ => Err(format!("expected a number in [0, 1], got {s:?}")),
    }
}

fn load_tree(path: &Path, step: Option<f64>) -> Result<EmbeddedTree> {
    let emb = io::read_tree(path).map_err(|e| Error::Format(format!("{}: {e}", path.display())))?;
    match step {
        Some(s) if emb.max_segment_length() > s => emb.resampled(s),
        _ => Ok(emb),
    }
}

fn fmt_defect(x: f64) -> String {
    if x == f64::NEG_INFINITY {
        "vacuous".into()
    } else {
        format!("{x:.6e}")
    }
}

fn generate(args: &GenerateArgs) -> Result<()> {
    let emb = args.tree.build()?;
    io::write_tree(&args.output, &emb)?;
    let a1 = tree::validate_a1(&emb, VALIDATOR_SAMPLES);
    let a2 = tree::validate_a2(&emb, VALIDATOR_SAMPLES);
    let a3 = tree::validate_a3(&emb, args.a3_exponent, None, VALIDATOR_SAMPLES)?;
    println!("nodes: {}, dim: {}", emb.node_count(), emb.dim());
    for (name, r) in [("A1", &a1), ("A2", &a2)] {
        println!(
            "{name}: {} checked, {} violations{}",
            r.checked,
            r.violations,
            if r.flagged.is_empty() { String::new() } else { format!(", flagged nodes {:?}", r.flagged) }
        );
    }
    let flagged = a3.flagged();
    println!(
        "A3 (a = {}): {} branching nodes, {} flagged{}",
        args.a3_exponent,
        a3.nodes.len(),
        flagged.len(),
        if flagged.is_empty() { String::new() } else { format!(" {flagged:?}") }
    );
    Ok(())
}

fn distances(args: &DistancesArgs, exec: Exec) -> Result<()> {
    let emb = load_tree(&args.tree, args.step)?;
    let k = args.kernel.params()?;
    let m = similarity::delta_matrix(&emb, &k, exec)?;
    io::write_matrix_file(&args.output, &m)
}

fn infer(args: &InferArgs, exec: Exec) -> Result<()> {
    let (m, truth): (SimilarityMatrix, Option<EmbeddedTree>) = match (&args.matrix, &args.tree) {
        (Some(path), _) => {
            let m = io::read_matrix_file(path).map_err(|e| Error::Format(format!("{}: {e}", path.display())))?;
            let truth = args.truth.as_deref().map(|p| load_tree(p, None)).transpose()?;
            (m, truth)
        }
        (None, Some(path)) => {
            let emb = load_tree(path, args.step)?;
            let k = args.kernel.params()?;
            (similarity::delta_matrix(&emb, &k, exec)?, Some(emb))
        }
        (None, None) => unreachable!("clap requires one input"),
    };
    let truth_ids = truth.as_ref().map(|t| similarity::node_ids(t.node_count()));
    let root = match (&args.root, &truth) {
        (Some(r), _) => r.clone(),
        (None, Some(t)) => t.tree().root().to_string(),
        (None, None) => m
            .ids()
            .first()
            .cloned()
            .ok_or_else(|| Error::Format("empty matrix".into()))?,
    };
    let inferred = inference::reconstruct(&m, &root)?;
    io::write_inferred(&args.output, &inferred)?;

    // Ground-truth edges name the normalizer when every truth id is present.
    let truth_edges: Option<Vec<(usize, usize)>> = match (&truth, &truth_ids) {
        (Some(t), Some(ids)) => t
            .tree()
            .edges()
            .iter()
            .map(|&(p, c)| Some((m.index_of(&ids[p])?, m.index_of(&ids[c])?)))
            .collect(),
        _ => None,
    };
    println!("nodes: {}", m.len());
    println!("triangle_defect: {}", fmt_defect(similarity::triangle_defect(&m, truth_edges.as_deref())));
    println!("four_point_defect: {}", fmt_defect(similarity::four_point_defect(&m, truth_edges.as_deref())));
    if let (Some(t), Some(ids)) = (&truth, &truth_ids) {
        let mode = if args.relaxed { IsoMode::Relaxed } else { IsoMode::Strict };
        let iso = inference::is_isomorphic(&inferred, t.tree(), ids, mode)?;
        println!("isomorphic: {iso}");
    }
    Ok(())
}

fn convergence(args: &ConvergenceArgs, exec: Exec) -> Result<()> {
    let sigmas = args.ladder.ladder();
    let emb = match &args.tree {
        Some(p) => load_tree(p, None)?,
        None => args.gen.build()?,
    };
    eprintln!("sigma ladder: {sigmas:?}, ratio {}", args.ladder.ratio);
    let rows = similarity::convergence_sweep(&emb, &sigmas, args.ladder.ratio, exec)?;
    let mut buf = Vec::new();
    io::write_sweep(&mut buf, &rows)?;
    io::write_bytes(&args.output, &buf)
}

fn experiment(args: &ExperimentArgs, exec: Exec) -> Result<()> {
    let sigmas = args.ladder.ladder();
    let g = &args.gen;
    let cfg = RecoveryConfig {
        trees: args.trees as usize,
        nodes: g.nodes as usize,
        dim: g.dim as usize,
        sigmas,
        ratio: args.ladder.ratio,
        max_children: g.max_children as usize,
        embed: EmbedConfig {
            edge_length_min: g.edge_min,
            edge_length_max: g.edge_max,
            min_angle_deg: g.min_angle,
            max_turn_deg: g.max_turn,
            step: g.step,
            clearance: g.clearance,
            ..Default::default()
        },
        seed: g.seed,
    };
    let rows = inference::recovery_experiment(&cfg, exec)?;
    for (sigma, rate) in inference::success_rates(&rows) {
        println!("sigma {sigma}: success rate {rate}");
    }
    let mut buf = Vec::new();
    io::write_experiment(&mut buf, &rows)?;
    io::write_bytes(&args.output, &buf)
}

fn velocity_demo(args: &VelocityArgs, exec: Exec) -> Result<()> {
    let emb = args.gen.build()?;
    let k = args.kernel.params()?;
    let cfg = PipelineConfig {
        sample: SampleConfig {
            per_edge: args.per_edge as usize,
            noise_pos: args.noise_pos,
            noise_vel: args.noise_vel,
            speed: args.speed,
        },
        integration: IntegrationConfig {
            step: args.gen.step,
            max_steps: args.max_steps as usize,
            capture_radius: args.capture,
        },
        bandwidth: args.bandwidth,
        placement: match args.placement {
            PlacementArg::Nodes => Placement::Nodes,
            PlacementArg::Stations => Placement::Stations,
        },
        max_failure_fraction: 1.0,
        seed: args.gen.seed,
    };
    let out = velocity::velocity_pipeline(&emb, &cfg, &k, exec)?;
    io::write_cells(&args.output.join("cells.json"), emb.dim(), out.field.cells())?;

    for c in &out.traced {
        println!(
            "cell {}: {} after {} steps, arc length {:.6}",
            c.id,
            c.trace.cause.as_str(),
            c.trace.steps,
            c.trace.arc_length
        );
    }
    let failed: Vec<&str> = out.failures().map(|(_, c)| c.id.as_str()).collect();
    let total = out.traced.len();
    println!("traced {} of {total} cells", total - failed.len());
    if failed.len() as f64 > args.max_failures * total as f64 {
        return Err(Error::TooManyFailures {
            failed: failed.len(),
            total,
            first: out.failures().next().map(|(i, _)| i).unwrap_or(0),
        });
    }

    io::write_matrix_file(&args.output.join("matrix.csv"), &out.matrix)?;
    io::write_inferred(&args.output.join("inferred.json"), &out.inferred)?;
    println!("four_point_defect: {}", fmt_defect(similarity::four_point_defect(&out.matrix, None)));
    if matches!(cfg.placement, Placement::Nodes) && failed.is_empty() {
        let ids = similarity::node_ids(emb.node_count());
        let iso = inference::is_isomorphic(&out.inferred, emb.tree(), &ids, IsoMode::Strict)?;
        println!("isomorphic: {iso}");
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let exec = match cli.threads {
        Some(n) => {
            if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(n as usize).build_global() {
                eprintln!("error: {e}");
                return ExitCode::from(1);
            }
            Exec::from_threads(n as usize)
        }
        None => Exec::Parallel,
    };
    let result = match &cli.command {
        Command::Generate(a) => generate(a),
        Command::Distances(a) => distances(a, exec),
        Command::Infer(a) => infer(a, exec),
        Command::Convergence(a) => convergence(a, exec),
        Command::Experiment(a) => experiment(a, exec),
        Command::VelocityDemo(a) => velocity_demo(a, exec),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(1)
        }
    }
}
