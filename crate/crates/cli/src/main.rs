use std::path::PathBuf;
use std::process::ExitCode;

use apdkit::clustering::LabelMode;
use apdkit_cli::{
    cmd_cluster, cmd_extract, cmd_pipeline, cmd_report, cmd_train, with_threads, CliResult,
    Overrides, RunConfig,
};
use clap::{Args, Parser, Subcommand};

#[derive(Parser)]
#[command(name = "apdkit", version, about = "Activation pattern DAG clustering pipeline")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Train a network and record per-epoch predictions.
    Train(Common),
    /// Write the activation pattern trace of the dataset.
    Extract(Common),
    /// Build the pattern DAG and partition the dataset.
    Cluster(Common),
    /// Emit cluster-size, forgetting and error analyses.
    Report(Common),
    /// Run train, extract, cluster and report in sequence.
    Pipeline(Common),
}

#[derive(Args)]
struct Common {
    /// JSON run configuration.
    #[arg(long)]
    config: Option<PathBuf>,
    /// 32full, 16full, 32bottl or custom:w1,w2,...
    #[arg(long)]
    arch: Option<String>,
    #[arg(long)]
    lr: Option<f64>,
    #[arg(long)]
    epochs: Option<usize>,
    #[arg(long)]
    batch_size: Option<usize>,
    /// Seed for both weight initialization and shuffling.
    #[arg(long)]
    seed: Option<u64>,
    /// Train on a seeded random subset of this many instances.
    #[arg(long)]
    subset: Option<usize>,
    #[arg(long, value_parser = ["predicted", "true"])]
    label_mode: Option<String>,
    /// Run directory; defaults to $APDKIT_OUT.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Cap on inference worker threads.
    #[arg(long)]
    threads: Option<usize>,
}

impl Common {
    fn resolve(&self) -> CliResult<RunConfig> {
        let mut cfg = match &self.config {
            Some(path) => RunConfig::from_file(path)?,
            None => RunConfig::default(),
        };
        let label_mode = self
            .label_mode
            .as_deref()
            .map(str::parse::<LabelMode>)
            .transpose()
            .map_err(|e| apdkit_cli::CliError::Config(e.to_string()))?;
        cfg.apply(&Overrides {
            arch: self.arch.clone(),
            learning_rate: self.lr,
            epochs: self.epochs,
            batch_size: self.batch_size,
            seed: self.seed,
            subset: self.subset,
            label_mode,
            out: self.out.clone(),
            threads: self.threads,
        });
        cfg.validate()?;
        Ok(cfg)
    }
}

fn run(command: Command) -> CliResult<()> {
    let (Command::Train(c)
    | Command::Extract(c)
    | Command::Cluster(c)
    | Command::Report(c)
    | Command::Pipeline(c)) = &command;
    let cfg = c.resolve()?;
    let out = cfg.out_dir();
    with_threads(cfg.threads, || -> CliResult<()> {
        match command {
            Command::Train(_) => {
                let s = cmd_train(&cfg)?;
                println!("train: accuracy {:.4} on {} instances, fingerprint {}", s.accuracy, s.num_instances, s.fingerprint);
            }
            Command::Extract(_) => {
                let h = cmd_extract(&cfg)?;
                println!("extract: wrote trace for {}", h.fingerprint);
            }
            Command::Cluster(_) => {
                let c = cmd_cluster(&cfg)?;
                println!("cluster: {} nodes, {} edges, {} clusters", c.nodes, c.edges, c.clusters);
            }
            Command::Report(_) => {
                let m = cmd_report(&cfg)?;
                println!("report: {} clusters, {} errors", m.summary.num_clusters, m.summary.errors);
            }
            Command::Pipeline(_) => {
                let p = cmd_pipeline(&cfg)?;
                println!(
                    "pipeline: accuracy {:.4}, {} clusters, mean size {:.3}",
                    p.train.accuracy, p.cluster.clusters, p.manifest.summary.cluster_sizes.mean
                );
            }
        }
        Ok(())
    })??;
    println!("output in {}", out.display());
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("apdkit: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
