use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use kickrec::config::RunConfig;
use kickrec::features::FeatureSet;
use kickrec::models::ModelKind;
use kickrec::{stages, Result};

#[derive(Parser)]
#[command(name = "kickrec", version, about = "Investor recommendation for crowdfunding projects")]
struct Cli {
    /// TOML run configuration; defaults apply when omitted.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Seed for every stochastic stage without its own seed in the config.
    #[arg(long, global = true)]
    seed: Option<u64>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Out {
    /// Output file or directory; defaults under the configured work dir.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a synthetic corpus with ground truth.
    Gen(#[command(flatten)] Out),
    /// Validate corpus files and write the normalized corpus.
    Ingest {
        #[arg(long)]
        input: Option<PathBuf>,
        #[command(flatten)]
        out: Out,
    },
    /// Link investors to Twitter accounts.
    Link {
        #[arg(long)]
        input: Option<PathBuf>,
        #[command(flatten)]
        out: Out,
    },
    /// Fit the LDA topic model.
    Topics {
        #[arg(long)]
        input: Option<PathBuf>,
        #[arg(long)]
        links: Option<PathBuf>,
        #[command(flatten)]
        out: Out,
    },
    /// Sample labelled pairs and compute their features.
    Features {
        #[arg(long)]
        input: Option<PathBuf>,
        #[arg(long)]
        links: Option<PathBuf>,
        #[arg(long)]
        topics: Option<PathBuf>,
        #[command(flatten)]
        out: Out,
    },
    /// Train one model on the balanced pair set.
    Train {
        /// Feature matrix CSV.
        #[arg(long)]
        input: Option<PathBuf>,
        #[arg(long)]
        model: Option<ModelKind>,
        /// static, dynamic, twitter, all or codes such as C+R+TS.
        #[arg(long)]
        features: Option<String>,
        #[command(flatten)]
        out: Out,
    },
    /// Cross-validate the model kind and features of a model file.
    Evaluate {
        #[arg(long)]
        model_file: Option<PathBuf>,
        /// Feature matrix CSV.
        #[arg(long)]
        input: Option<PathBuf>,
        #[arg(long)]
        folds: Option<usize>,
        /// Negatives per positive in test folds (1 or 4); all configured ratios when omitted.
        #[arg(long)]
        ratio: Option<f64>,
        /// Add the feature-subset ablation grid.
        #[arg(long)]
        ablation: bool,
        #[command(flatten)]
        out: Out,
    },
    /// Percentile-rank candidate investors for held-out projects.
    Rank {
        #[arg(long)]
        model_file: Option<PathBuf>,
        /// Feature matrix CSV.
        #[arg(long)]
        input: Option<PathBuf>,
        #[arg(long)]
        corpus: Option<PathBuf>,
        #[arg(long)]
        links: Option<PathBuf>,
        #[arg(long)]
        topics: Option<PathBuf>,
        #[arg(long)]
        folds: Option<usize>,
        #[command(flatten)]
        out: Out,
    },
    /// Hypothesis report, correlations and probability curves.
    Analyze {
        #[arg(long)]
        input: Option<PathBuf>,
        #[arg(long)]
        links: Option<PathBuf>,
        #[arg(long)]
        topics: Option<PathBuf>,
        #[command(flatten)]
        out: Out,
    },
}

fn run(cli: Cli) -> Result<()> {
    let mut cfg = match &cli.config {
        Some(path) => RunConfig::load(path)?,
        None => RunConfig::default(),
    };
    if let Some(seed) = cli.seed {
        cfg.apply_seed(seed, &[]);
    }
    let p = cfg.paths.clone();
    let or = |v: Option<PathBuf>, d: PathBuf| v.unwrap_or(d);
    match cli.command {
        Command::Gen(out) => stages::gen(&cfg, &or(out.out, p.corpus())),
        Command::Ingest { input, out } => stages::ingest(&or(input, p.corpus()), &or(out.out, p.ingested())).map(drop),
        Command::Link { input, out } => stages::link(&or(input, p.ingested()), &or(out.out, p.links())).map(drop),
        Command::Topics { input, links, out } => {
            stages::topics(&cfg, &or(input, p.ingested()), &or(links, p.links()), &or(out.out, p.topics())).map(drop)
        }
        Command::Features { input, links, topics, out } => stages::features(
            &cfg,
            &or(input, p.ingested()),
            &or(links, p.links()),
            &or(topics, p.topics()),
            &or(out.out, p.features()),
        )
        .map(drop),
        Command::Train { input, model, features, out } => {
            let kind = match model {
                Some(k) => k,
                None => cfg.eval.model.parse()?,
            };
            let set = FeatureSet::parse(features.as_deref().unwrap_or(&cfg.eval.features))?;
            stages::train(&cfg, &or(input, p.features()), kind, &set, &or(out.out, p.model())).map(drop)
        }
        Command::Evaluate { model_file, input, folds, ratio, ablation, out } => {
            cfg.eval.ablation |= ablation;
            let ratios = ratio.map_or_else(|| cfg.eval.ratios.clone(), |r| vec![r]);
            stages::evaluate(
                &cfg,
                &or(model_file, p.model()),
                &or(input, p.features()),
                folds.unwrap_or(cfg.eval.folds),
                &ratios,
                &or(out.out, p.reports()),
            )
            .map(drop)
        }
        Command::Rank { model_file, input, corpus, links, topics, folds, out } => stages::rank(
            &cfg,
            &or(model_file, p.model()),
            &or(input, p.features()),
            &or(corpus, p.ingested()),
            &or(links, p.links()),
            &or(topics, p.topics()),
            folds.unwrap_or(cfg.eval.folds),
            &or(out.out, p.reports()),
        )
        .map(drop),
        Command::Analyze { input, links, topics, out } => stages::analyze(
            &cfg,
            &or(input, p.ingested()),
            &or(links, p.links()),
            &or(topics, p.topics()),
            &or(out.out, p.reports()),
        )
        .map(drop),
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info"))
        .format_timestamp(None)
        .init();
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}
