use std::path::PathBuf;

use clap::{Parser, Subcommand};

use crate::commands::{self, require_out, TrainOptions};
use crate::error::{CliError, Result};
use crate::exec::Pool;

#[derive(Debug, Parser)]
#[command(name = "fedgraph", version, about = "Federated graph learning simulator")]
pub struct Cli {
    /// Overrides the seed from the configuration file.
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Output directory (or file, for `stats` and `verify-prop1`).
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    /// Worker threads; 0 or absent uses every core. Results do not depend
    /// on this.
    #[arg(long, global = true)]
    pub threads: Option<usize>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Sample synthetic clients from a generator config.
    Generate {
        #[arg(long)]
        config: PathBuf,
    },
    /// Split one graph into clients by Louvain communities.
    Partition {
        #[arg(long)]
        input: PathBuf,
        #[arg(long)]
        clients: usize,
    },
    /// Per-client class counts and homophily.
    Stats {
        #[arg(long)]
        data: PathBuf,
    },
    /// Train one method over one or more seeds.
    Train {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        data: PathBuf,
        /// Write the final models to this checkpoint.
        #[arg(long)]
        save: Option<PathBuf>,
        /// Evaluate the client models in this checkpoint, no training.
        #[arg(long, conflicts_with = "save")]
        load: Option<PathBuf>,
    },
    /// Grid over `lambda1` or `proxy_dim`.
    Sweep {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        data: PathBuf,
        #[arg(long)]
        param: String,
        #[arg(long, value_delimiter = ',', required = true)]
        values: Vec<f64>,
        #[arg(long, value_delimiter = ',')]
        seeds: Option<Vec<u64>>,
    },
    /// Closed-form vs. Monte-Carlo class separability.
    #[command(name = "verify-prop1")]
    VerifyProp1 {
        #[arg(long)]
        config: PathBuf,
        #[arg(long, default_value_t = 20)]
        trials: usize,
    },
}

/// Runs a parsed command line.
pub fn execute(cli: Cli) -> Result<()> {
    let out = require_out(cli.out.as_deref())?;
    match cli.command {
        Command::Generate { config } => {
            let clients = commands::generate(&config, cli.seed, out)?;
            println!("generated {} clients in {}", clients.len(), out.display());
        }
        Command::Partition { input, clients } => {
            let made = commands::partition(&input, clients, cli.seed.unwrap_or(1), out)?;
            for c in &made {
                println!("client {}: {} nodes, {} edges", c.id, c.graph.node_count(), c.graph.edge_count());
            }
        }
        Command::Stats { data } => commands::stats(&data, out)?,
        Command::Train {
            config,
            data,
            save,
            load,
        } => {
            let pool = Pool::new(cli.threads)?;
            let opts = TrainOptions {
                seed: cli.seed,
                save,
                load,
            };
            commands::train(&config, &data, out, &opts, &pool)?;
        }
        Command::Sweep {
            config,
            data,
            param,
            values,
            seeds,
        } => {
            if values.is_empty() {
                return Err(CliError::Config("--values is empty".into()));
            }
            let pool = Pool::new(cli.threads)?;
            let seeds = seeds.or(cli.seed.map(|s| vec![s]));
            commands::sweep(&config, &data, &param, &values, seeds, out, &pool)?;
        }
        Command::VerifyProp1 { config, trials } => {
            let pool = Pool::new(cli.threads)?;
            let wins = commands::verify_prop1(&config, trials, cli.seed, out, &pool)?;
            println!("global margin larger in {wins} of {trials} trials");
        }
    }
    Ok(())
}
