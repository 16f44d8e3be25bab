use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};

use lifegraph::calendar::{
    generate_synthetic, read_calendars, write_calendars, Event, GroundTruthSpec,
};
use lifegraph::discovery::MixedGraph;
use lifegraph::elaboration::{
    extract_pair_observations, extract_tte_with, read_pair_observations, read_tte,
    write_pair_observations, write_tte,
};
use lifegraph::pipeline::{
    discover, fit_and_report, fit_pair, run_pipeline, Algorithm, PipelineConfig, RunMetadata,
};
use lifegraph::{Error, Result};

#[derive(Parser)]
#[command(
    name = "lifegraph",
    version,
    about = "Life-event graphs and transition-time models"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum AlgorithmArg {
    Pc,
    Ges,
    Both,
}

impl From<AlgorithmArg> for Algorithm {
    fn from(a: AlgorithmArg) -> Self {
        match a {
            AlgorithmArg::Pc => Algorithm::Pc,
            AlgorithmArg::Ges => Algorithm::Ges,
            AlgorithmArg::Both => Algorithm::Both,
        }
    }
}

#[derive(Subcommand)]
enum Command {
    /// Draw synthetic calendars from a ground-truth spec.
    Simulate {
        #[arg(long)]
        spec: PathBuf,
        #[arg(long, default_value_t = 1000)]
        n: usize,
        /// Overrides the seed in the ground-truth file.
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Turn calendars into event-pair observations, or into time-to-event
    /// records when a cause and an effect are given.
    Elaborate {
        #[arg(long = "in")]
        input: PathBuf,
        #[arg(long)]
        out: PathBuf,
        #[arg(long, requires = "effect")]
        cause: Option<Event>,
        #[arg(long, requires = "cause")]
        effect: Option<Event>,
    },
    /// Learn graphs from event-pair observations.
    Discover {
        #[arg(long = "in")]
        input: PathBuf,
        /// Output directory.
        #[arg(long)]
        out: PathBuf,
        #[arg(long, value_enum, default_value = "both")]
        algorithm: AlgorithmArg,
        #[arg(long, default_value_t = 0.05)]
        alpha: f64,
        #[arg(long, default_value_t = 1.0)]
        bic_penalty: f64,
    },
    /// Fit a Cox model to time-to-event records.
    Fit {
        #[arg(long = "in")]
        input: PathBuf,
        /// Model JSON path.
        #[arg(long)]
        out: PathBuf,
        #[arg(long, default_value_t = 0.6)]
        train_frac: f64,
        #[arg(long, default_value_t = 0.1)]
        l2: f64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// Fit every pair of an events graph and write the report bundle.
    Report {
        /// Calendar CSV.
        #[arg(long = "in")]
        input: PathBuf,
        /// Events graph JSON.
        #[arg(long)]
        graph: PathBuf,
        #[arg(long)]
        out: PathBuf,
        /// Optional pipeline config for split, penalty and extra pairs.
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Run the whole pipeline from a config file.
    Run {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: PathBuf,
        #[arg(long)]
        seed: Option<u64>,
    },
}

fn write_graph(dir: &Path, stem: &str, g: &MixedGraph) -> Result<()> {
    fs::write(dir.join(format!("{stem}.json")), g.to_json()? + "\n")?;
    fs::write(dir.join(format!("{stem}.dot")), g.to_dot())?;
    Ok(())
}

fn execute(command: Command) -> Result<()> {
    match command {
        Command::Simulate { spec, n, seed, out } => {
            let text = fs::read_to_string(&spec)
                .map_err(|e| Error::config(format!("cannot read spec {}: {e}", spec.display())))?;
            let mut spec: GroundTruthSpec = serde_json::from_str(&text)
                .map_err(|e| Error::config(format!("invalid spec: {e}")))?;
            if let Some(s) = seed {
                spec.seed = s;
            }
            let cals = generate_synthetic(&spec, n)?;
            write_calendars(&cals, &out)?;
            log::info!("wrote {} calendars to {}", cals.len(), out.display());
        }
        Command::Elaborate {
            input,
            out,
            cause,
            effect,
        } => {
            let cals = read_calendars(&input)?;
            match (cause, effect) {
                (Some(c), Some(e)) => {
                    let records = extract_tte_with(&cals, c, e, &Default::default())?;
                    write_tte(&records, &out)?;
                }
                _ => write_pair_observations(&extract_pair_observations(&cals), &out)?,
            }
        }
        Command::Discover {
            input,
            out,
            algorithm,
            alpha,
            bic_penalty,
        } => {
            let obs = read_pair_observations(&input)?;
            let outcome = discover(&obs, algorithm.into(), alpha, bic_penalty)?;
            fs::create_dir_all(&out)?;
            if let Some(g) = &outcome.pc {
                write_graph(&out, "graph_pc", g)?;
            }
            if let Some(g) = &outcome.ges {
                write_graph(&out, "graph_ges", g)?;
            }
            write_graph(&out, "events_graph", &outcome.events)?;
            if let Some(same) = outcome.same_mec {
                println!("same_mec\t{same}");
            }
        }
        Command::Fit {
            input,
            out,
            train_frac,
            l2,
            seed,
        } => {
            let records = read_tte(&input)?;
            let fit = fit_pair(&records, train_frac, l2, seed)?;
            fs::write(&out, fit.model.to_json()? + "\n")?;
            println!("c_index_train\t{:.6}", fit.c_index_train);
            println!("c_index_test\t{:.6}", fit.c_index_test);
        }
        Command::Report {
            input,
            graph,
            out,
            config,
            seed,
        } => {
            let mut cfg = match config {
                Some(path) => PipelineConfig::load(path)?,
                None => PipelineConfig::default(),
            };
            if let Some(s) = seed {
                cfg.seed = s;
            }
            let cals = read_calendars(&input)?;
            let events = MixedGraph::from_json(&fs::read_to_string(&graph)?)?;
            let meta = RunMetadata {
                seed: cfg.seed,
                config_hash: cfg.hash()?,
                algorithm: "given".into(),
                graph: graph.display().to_string(),
                same_mec: None,
                persons: cals.len(),
                pair_observations: 0,
            };
            fs::create_dir_all(&out)?;
            fit_and_report(&cals, &events, &cfg, meta, &out)?;
        }
        Command::Run { config, out, seed } => {
            let mut cfg = PipelineConfig::load(config)?;
            if let Some(s) = seed {
                cfg.seed = s;
            }
            let report = run_pipeline(&cfg, &out)?;
            print!("{}", report.to_csv());
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    match execute(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
