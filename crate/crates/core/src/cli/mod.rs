//! The `copg` command line: argument parsing, config loading and stage
//! dispatch.

pub mod config;
pub mod stages;
pub mod workdir;

use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};

use crate::graph::SplitMode;
use crate::models::ModelKind;
use crate::sampler::WalkParams;
use crate::{Error, Result, FORMAT_VERSIONS, VERSION};
use config::RunConfig;
use stages::Ctx;
use workdir::{sha256_bytes, Workdir};

/// Text printed by `copg --version`.
pub fn version_string() -> String {
    format!("{VERSION} (formats {})", FORMAT_VERSIONS.join(" "))
}

static VERSION_TEXT: std::sync::LazyLock<String> = std::sync::LazyLock::new(version_string);

#[derive(Debug, Parser)]
#[command(name = "copg", version = VERSION_TEXT.as_str(), about = "Link prediction on product co-purchase graphs")]
struct Cli {
    /// JSON run configuration; defaults apply when omitted.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Overrides `paths.workdir`.
    #[arg(long, global = true, env = "COPG_WORKDIR")]
    workdir: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Args)]
struct ModelArg {
    /// sage (alias graphsage), gat, pinsage or lightgcn.
    #[arg(long)]
    model: Option<ModelKind>,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Parse the metadata dump and write the cleaned tables.
    Ingest,
    /// Build the co-purchase graph from the merged table.
    BuildGraph,
    /// Partition nodes and edges into train / validation / test.
    Split {
        /// Random edge split over all nodes (leaks test nodes into training).
        #[arg(long)]
        transductive: bool,
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Assemble node features, fitted on training nodes.
    Features,
    /// Precompute random-walk neighborhoods.
    Walks(WalkArgs),
    /// Train a model over every configured seed.
    Train(ModelArg),
    /// Score the saved best checkpoint on the test split.
    Evaluate(ModelArg),
    /// Random hyperparameter search.
    Search {
        #[command(flatten)]
        model: ModelArg,
        #[arg(long)]
        trials: Option<usize>,
    },
    /// Summary and history CSVs for all trained models.
    Report,
    /// Generate a synthetic graph with features.
    Synth,
    /// Run the enabled stages in order.
    Run(ModelArg),
    /// Check a configuration file and print the effective settings.
    ValidateConfig,
}

#[derive(Debug, Args)]
struct WalkArgs {
    /// Read this graph instead of the workdir's training graph.
    #[arg(long, requires = "out")]
    graph: Option<PathBuf>,
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    num_walks: Option<usize>,
    #[arg(long)]
    length: Option<usize>,
    #[arg(long)]
    topk: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
}

fn load_config(path: Option<&Path>) -> Result<(RunConfig, PathBuf)> {
    match path {
        Some(p) => {
            let cfg = config::validate_config(p)?;
            let base = p.parent().map(Path::to_path_buf).unwrap_or_default();
            Ok((cfg, base))
        }
        None => Ok((RunConfig::default(), PathBuf::new())),
    }
}

fn context(cli: &Cli, cfg: RunConfig, base_dir: PathBuf) -> Result<Ctx> {
    cfg.validate()?;
    let root = match &cli.workdir {
        Some(w) => w.clone(),
        None if cfg.paths.workdir.is_absolute() => cfg.paths.workdir.clone(),
        None => base_dir.join(&cfg.paths.workdir),
    };
    let json = serde_json::to_vec(&cfg).map_err(|e| Error::Contract(e.to_string()))?;
    Ok(Ctx {
        cfg,
        work: Workdir::new(root),
        base_dir,
        config_hash: sha256_bytes(&json),
    })
}

fn with_model(cfg: RunConfig, m: &ModelArg) -> Result<RunConfig> {
    match m.model {
        Some(kind) => Ok(cfg.with_model(kind)?),
        None => Ok(cfg),
    }
}

fn standalone_walks(cfg: &RunConfig, a: &WalkArgs, graph: &Path) -> Result<()> {
    let p = &cfg.models.pinsage;
    let params = WalkParams {
        num_walks: a.num_walks.unwrap_or(p.num_walks),
        walk_length: a.length.unwrap_or(p.walk_length),
        k: a.topk.unwrap_or(p.neighbors),
        seed: a.seed.unwrap_or(cfg.seed),
    };
    if params.num_walks == 0 || params.walk_length == 0 || params.k == 0 {
        return Err(Error::Usage(
            "--num-walks, --length and --topk must be positive".into(),
        ));
    }
    let file = std::fs::File::open(graph).map_err(|e| Error::io(graph, e))?;
    let g = crate::graph::read_copg(std::io::BufReader::new(file))?;
    stages::write_walks(&g, params, a.out.as_deref().expect("clap enforces --out"))
}

/// Stages of `run` in order, honoring the toggles.
fn pipeline(ctx: &Ctx) -> Result<()> {
    let st = &ctx.cfg.stages;
    if ctx.cfg.synthetic.is_some() {
        stages::synth(ctx)?;
    } else {
        if st.ingest {
            stages::ingest(ctx)?;
        }
        if st.build_graph {
            stages::build_graph(ctx)?;
        }
    }
    if st.split {
        stages::split(ctx)?;
    }
    if st.features && ctx.cfg.synthetic.is_none() {
        stages::features(ctx)?;
    }
    let models = &ctx.cfg.report.models;
    if st.walks && models.contains(&ModelKind::Pinsage) {
        stages::walks(ctx)?;
    }
    for &kind in models {
        if st.train {
            stages::train(ctx, kind)?;
        }
        if st.evaluate && ctx.cfg.output.checkpoint {
            stages::evaluate(ctx, kind)?;
        }
    }
    if st.search {
        stages::search(ctx, ctx.cfg.model, None)?;
    }
    if st.report {
        stages::report(ctx)?;
    }
    Ok(())
}

fn dispatch(cli: Cli) -> Result<()> {
    let (cfg, base) = load_config(cli.config.as_deref())?;
    if let Command::Walks(a) = &cli.command {
        if let Some(g) = &a.graph {
            return standalone_walks(&cfg, a, g);
        }
    }
    if let Command::ValidateConfig = &cli.command {
        let text =
            serde_json::to_string_pretty(&cfg).map_err(|e| Error::Contract(e.to_string()))?;
        println!("{text}");
        return Ok(());
    }
    let cfg = match &cli.command {
        Command::Train(m) | Command::Evaluate(m) | Command::Search { model: m, .. } => {
            with_model(cfg, m)?
        }
        Command::Run(m) => {
            let mut cfg = with_model(cfg, m)?;
            if let Some(kind) = m.model {
                cfg.report.models = vec![kind];
            }
            cfg
        }
        Command::Split { transductive, seed } => {
            let mut cfg = cfg;
            if *transductive {
                cfg.split.mode = SplitMode::Transductive;
            }
            if let Some(s) = seed {
                cfg.split.seed = *s;
            }
            cfg
        }
        _ => cfg,
    };
    let ctx = context(&cli, cfg, base)?;
    let _lock = ctx.work.lock()?;
    match &cli.command {
        Command::Ingest => stages::ingest(&ctx),
        Command::BuildGraph => stages::build_graph(&ctx),
        Command::Split { .. } => stages::split(&ctx),
        Command::Features => stages::features(&ctx),
        Command::Walks(_) => stages::walks(&ctx),
        Command::Train(_) => stages::train(&ctx, ctx.cfg.model),
        Command::Evaluate(_) => stages::evaluate(&ctx, ctx.cfg.model),
        Command::Search { trials, .. } => stages::search(&ctx, ctx.cfg.model, *trials),
        Command::Report => stages::report(&ctx),
        Command::Synth => stages::synth(&ctx),
        Command::Run(_) => pipeline(&ctx),
        Command::ValidateConfig => unreachable!("handled above"),
    }
}

/// Parses `args` (including the program name), runs the command and
/// returns the process exit code.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() {
                crate::error::EXIT_USAGE
            } else {
                0
            };
        }
    };
    match dispatch(cli) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("copg: error: {e}");
            e.exit_code()
        }
    }
}
