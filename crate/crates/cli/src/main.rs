use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::Parser;
use perturbed_embed::harness::{cells_csv, certify_csv, run_experiment, write_outputs, ExperimentConfig, Mode};
use perturbed_embed::host::HostSpec;
use perturbed_embed_core::TreeShape;

/// Seeded Monte Carlo runs of spanning tree embeddings into `G ∪ G(n, c/n)`.
///
/// Every flag can also be set through the environment variable shown next to
/// it (prefix `EMBED_`); flags win over the environment.
#[derive(Debug, Parser)]
#[command(name = "embed", version)]
struct Cli {
    /// gnp:<p>, bipartite:<a>:<b> (part sizes in ratio a:b) or file:<edge list>
    #[arg(long, env = "EMBED_HOST", default_value = "gnp:0.5")]
    host: HostSpec,
    /// Comma-separated vertex counts.
    #[arg(long, env = "EMBED_N", value_delimiter = ',', default_value = "300")]
    n: Vec<usize>,
    #[arg(long, env = "EMBED_ALPHA", default_value_t = 0.35)]
    alpha: f64,
    #[arg(long, env = "EMBED_DMAX", default_value_t = 3)]
    dmax: usize,
    /// uniform-attachment, path, caterpillar, broom or subdivided
    #[arg(long, env = "EMBED_TREE", default_value = "uniform-attachment", value_parser = parse_shape)]
    tree: TreeShape,
    /// Bare path length; odd, at least 7.
    #[arg(long, env = "EMBED_K", default_value_t = 9)]
    k: usize,
    /// Comma-separated ascending grid of random edge budgets c.
    #[arg(long, env = "EMBED_C", value_delimiter = ',', default_value = "40")]
    c: Vec<f64>,
    #[arg(long, env = "EMBED_TRIALS", default_value_t = 50)]
    trials: usize,
    #[arg(long, env = "EMBED_SEED", default_value_t = 0)]
    seed: u64,
    /// Output directory; without it the CSV goes to stdout.
    #[arg(long, env = "EMBED_OUT")]
    out: Option<PathBuf>,
    /// embed, calibrate or certify
    #[arg(long, env = "EMBED_MODE", default_value = "embed")]
    mode: Mode,
    /// Leaf fraction selecting the many-leaves route.
    #[arg(long, env = "EMBED_LAMBDA")]
    lambda: Option<f64>,
    /// Fraction of leaves removed on the many-leaves route.
    #[arg(long, env = "EMBED_LEAF_REMOVAL")]
    leaf_removal: Option<f64>,
    /// Four comma-separated weights splitting c over the phases.
    #[arg(long, env = "EMBED_SPLIT", value_delimiter = ',')]
    split: Option<Vec<f64>>,
    /// Success rate a calibration must reach.
    #[arg(long, env = "EMBED_TARGET", default_value_t = 0.9)]
    target: f64,
    /// Target cluster size for the partition (default n/2).
    #[arg(long, env = "EMBED_CLUSTER_SIZE")]
    cluster_size: Option<usize>,
    /// Record mean wall time per cell in the CSV.
    #[arg(long, env = "EMBED_TIMING")]
    timing: bool,
}

fn parse_shape(s: &str) -> Result<TreeShape, String> {
    TreeShape::parse(s).ok_or_else(|| {
        let names: Vec<&str> = TreeShape::ALL.iter().map(|t| t.name()).collect();
        format!("unknown tree shape {s:?}; expected one of {}", names.join(", "))
    })
}

fn config(cli: Cli) -> anyhow::Result<ExperimentConfig> {
    let mut cfg = ExperimentConfig::new(cli.host, cli.n, cli.alpha, cli.dmax, cli.tree, cli.c);
    cfg.k = cli.k;
    cfg.trials = cli.trials;
    cfg.seed = cli.seed;
    cfg.out = cli.out;
    cfg.mode = cli.mode;
    if let Some(l) = cli.lambda {
        cfg.lambda = l;
    }
    if let Some(r) = cli.leaf_removal {
        cfg.leaf_removal = r;
    }
    if let Some(s) = cli.split {
        cfg.split = s.try_into().map_err(|s: Vec<f64>| anyhow::anyhow!("--split needs 4 weights, got {}", s.len()))?;
    }
    cfg.target = cli.target;
    cfg.cluster_size = cli.cluster_size;
    cfg.timing = cli.timing;
    Ok(cfg)
}

fn run(cfg: &ExperimentConfig) -> anyhow::Result<()> {
    let out = run_experiment(cfg)?;
    match &cfg.out {
        Some(dir) => write_outputs(dir, cfg, &out)?,
        None => {
            let text = if cfg.mode == Mode::Certify { certify_csv(&out.certify)? } else { cells_csv(&out.cells)? };
            std::io::stdout().write_all(text.as_bytes())?;
        }
    }
    for rec in &out.calibration {
        match rec.threshold {
            Some(c) => eprintln!("n = {}: smallest c reaching {} is {c}", rec.n, rec.target),
            None => eprintln!("n = {}: grid exhausted below target {}", rec.n, rec.target),
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    match config(Cli::parse()).and_then(|cfg| run(&cfg)) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
