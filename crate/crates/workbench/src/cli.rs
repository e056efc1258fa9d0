//! `formscape` command line. Tabular output goes to the given writer as CSV;
//! notes and warnings go to stderr.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::net::SocketAddr;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use formscape_core::embed::{layout_export, EmbedMethod, SourceSpace};
use formscape_core::explore::{
    cross_section_csv, find_transitions, hill_climb, monte_carlo_sample, sweep_render,
    SampleCriteria,
};
use formscape_core::morphogen::{Genotype, Image, PARAMS};
use formscape_core::predict::{TrainConfig, DEFAULT_HIDDEN, DEFAULT_K};

use crate::analysis::{BaseGenotype, EmbeddingRequest, GridRequest};
use crate::generate::{GenerateRequest, Sampler};
use crate::record::write_records;
use crate::server::{serve, AppState};
use crate::split::DEFAULT_SPLIT_RATIO;
use crate::store::Store;
use crate::training::{PredictInput, Target, TrainRequest};

#[derive(Debug, Parser)]
#[command(
    name = "formscape",
    version,
    about = "Grow, judge, learn from and explore 2D growth forms"
)]
pub struct Cli {
    /// Store directory; created on first use.
    #[arg(long, global = true, default_value = "formscape-store")]
    pub store: PathBuf,
    /// Seed for every random choice the command makes.
    #[arg(long, global = true, default_value_t = 0)]
    pub seed: u64,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Grow new forms and add them to the store.
    Generate(GenerateArgs),
    /// Record a rank and/or category for a form.
    Judge {
        id: u64,
        #[arg(long)]
        rank: Option<i64>,
        #[arg(long)]
        category: Option<String>,
    },
    /// Import or recompute feature vectors.
    #[command(subcommand)]
    Features(FeaturesCommand),
    /// Assign labeled records to training and validation.
    Split {
        #[arg(long, default_value_t = DEFAULT_SPLIT_RATIO)]
        ratio: f64,
    },
    /// Train a predictor on the current split.
    Train(TrainArgs),
    /// Predict category and rank with a stored model.
    Predict {
        #[arg(long)]
        model: u64,
        #[command(flatten)]
        base: BaseArgs,
    },
    /// Lay out stored records in 2D.
    Embed {
        #[arg(long, value_enum, default_value_t = SpaceArg::Genotype)]
        space: SpaceArg,
        #[arg(long, value_enum, default_value_t = MethodArg::Tsne)]
        method: MethodArg,
        #[arg(long, default_value_t = 30.0)]
        perplexity: f64,
        #[arg(long, default_value_t = 1000)]
        iterations: usize,
        /// Write the layout CSV here instead of stdout.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Render a contact sheet over two parameters.
    Sweep {
        #[command(flatten)]
        grid: GridArgs,
        /// Tile side in pixels.
        #[arg(long, default_value_t = 128)]
        tile: usize,
        /// Output image; `.png` writes PNG, anything else PGM.
        #[arg(long)]
        out: PathBuf,
    },
    /// Predicted categories, margins and ranks over a 2D grid.
    CrossSection {
        #[arg(long)]
        model: u64,
        #[command(flatten)]
        grid: GridArgs,
    },
    /// Neighbouring grid cells whose predicted categories differ.
    Transitions {
        #[arg(long)]
        model: u64,
        #[command(flatten)]
        grid: GridArgs,
    },
    /// Draw genotypes that a model predicts to meet the criteria.
    Sample {
        #[arg(long)]
        model: u64,
        #[arg(short, long, default_value_t = 10)]
        n: usize,
        #[arg(long)]
        min_rank: Option<f64>,
        #[arg(long)]
        category: Option<String>,
    },
    /// Hill-climb predicted rank from a starting genotype.
    Climb {
        #[arg(long)]
        model: u64,
        #[command(flatten)]
        base: BaseArgs,
        #[arg(long, default_value_t = 200)]
        iterations: usize,
        #[arg(long, default_value_t = 0.05)]
        sigma: f64,
    },
    /// Write all records to a CSV file.
    Export { path: PathBuf },
    /// Add records from a CSV file written by `export`.
    Import { path: PathBuf },
    /// Re-render every record and compare image hashes.
    Verify,
    /// Run the HTTP service.
    Serve {
        #[arg(long, default_value = "127.0.0.1:8080")]
        addr: SocketAddr,
    },
}

#[derive(Debug, Subcommand)]
pub enum FeaturesCommand {
    /// Replace feature vectors with those in an AEFV file.
    Import { path: PathBuf },
    /// Recompute builtin features from stored images.
    Extract {
        /// Also write every vector into one AEFV file.
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum SamplerArg {
    Uniform,
    MonteCarlo,
    Around,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum SpaceArg {
    Genotype,
    Feature,
}

impl From<SpaceArg> for SourceSpace {
    fn from(s: SpaceArg) -> Self {
        match s {
            SpaceArg::Genotype => SourceSpace::Genotype,
            SpaceArg::Feature => SourceSpace::Feature,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum MethodArg {
    Tsne,
    Pca,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum TargetArg {
    Category,
    Rank,
    Both,
}

#[derive(Debug, Args)]
pub struct GenerateArgs {
    #[arg(short, long, default_value_t = 1)]
    pub n: usize,
    #[arg(long, value_enum, default_value_t = SamplerArg::Uniform)]
    pub sampler: SamplerArg,
    /// Model for the monte-carlo sampler.
    #[arg(long)]
    pub model: Option<u64>,
    #[arg(long)]
    pub min_rank: Option<f64>,
    #[arg(long)]
    pub category: Option<String>,
    /// Source record for the around sampler.
    #[arg(long)]
    pub around: Option<u64>,
    #[arg(long, default_value_t = 0.05)]
    pub sigma: f64,
    /// Grow exactly these genotypes (twelve comma-separated values in [0, 1]); repeatable.
    #[arg(long, value_parser = parse_unit)]
    pub genotype: Vec<Vec<f64>>,
}

#[derive(Debug, Args)]
pub struct TrainArgs {
    #[arg(long, value_enum, default_value_t = SpaceArg::Genotype)]
    pub space: SpaceArg,
    #[arg(long, value_enum, default_value_t = TargetArg::Both)]
    pub target: TargetArg,
    #[arg(long)]
    pub epochs: Option<usize>,
    #[arg(long)]
    pub batch_size: Option<usize>,
    #[arg(long)]
    pub learning_rate: Option<f64>,
    #[arg(long)]
    pub patience: Option<usize>,
    /// Hidden layer sizes, e.g. `200,100`.
    #[arg(long, value_parser = parse_pair::<usize>)]
    pub hidden: Option<(usize, usize)>,
    #[arg(long, default_value_t = DEFAULT_K)]
    pub knn_k: usize,
    /// Also train on labels that were predicted rather than judged.
    #[arg(long)]
    pub include_pseudo: bool,
    /// Re-split with this ratio (and --seed) before training. A split is
    /// made at the default ratio when none exists.
    #[arg(long)]
    pub split_ratio: Option<f64>,
}

/// Twelve values in [0, 1]. Named so clap parses it as one value.
pub type UnitVector = Vec<f64>;

#[derive(Debug, Args)]
pub struct BaseArgs {
    /// Start from this stored record.
    #[arg(long, conflicts_with = "genotype")]
    pub record: Option<u64>,
    /// Start from these twelve comma-separated values in [0, 1].
    #[arg(long, value_parser = parse_unit)]
    pub genotype: Option<UnitVector>,
}

impl BaseArgs {
    fn base(&self) -> BaseGenotype {
        BaseGenotype {
            base_record_id: self.record,
            base_genotype: self.genotype.clone(),
        }
    }
}

#[derive(Debug, Args)]
pub struct GridArgs {
    #[command(flatten)]
    pub base: BaseArgs,
    #[arg(long)]
    pub dim_i: usize,
    #[arg(long)]
    pub dim_j: usize,
    #[arg(long, value_parser = parse_pair::<f64>, default_value = "0,1")]
    pub range_i: (f64, f64),
    #[arg(long, value_parser = parse_pair::<f64>, default_value = "0,1")]
    pub range_j: (f64, f64),
    #[arg(long, default_value_t = 16)]
    pub resolution: usize,
}

impl GridArgs {
    fn request(&self) -> GridRequest {
        GridRequest {
            base: self.base.base(),
            dim_i: self.dim_i,
            dim_j: self.dim_j,
            ranges: [
                [self.range_i.0, self.range_i.1],
                [self.range_j.0, self.range_j.1],
            ],
            resolution: self.resolution,
        }
    }
}

fn parse_list<T: std::str::FromStr>(s: &str) -> Result<Vec<T>, String> {
    s.split(',')
        .map(|v| v.trim().parse().map_err(|_| format!("cannot parse {v:?}")))
        .collect()
}

fn parse_unit(s: &str) -> Result<Vec<f64>, String> {
    let v: Vec<f64> = parse_list(s)?;
    if v.len() != PARAMS {
        return Err(format!("expected {PARAMS} values, got {}", v.len()));
    }
    Ok(v)
}

fn parse_pair<T: std::str::FromStr>(s: &str) -> Result<(T, T), String> {
    let mut v: Vec<T> = parse_list(s)?;
    if v.len() != 2 {
        return Err(format!(
            "expected two comma-separated values, got {}",
            v.len()
        ));
    }
    let b = v.pop().expect("two values");
    let a = v.pop().expect("two values");
    Ok((a, b))
}

fn write_csv(
    out: &mut dyn Write,
    header: &[String],
    rows: impl IntoIterator<Item = Vec<String>>,
) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(header)?;
    for row in rows {
        w.write_record(&row)?;
    }
    w.flush()?;
    Ok(())
}

fn strings(items: &[&str]) -> Vec<String> {
    items.iter().map(|s| s.to_string()).collect()
}

fn opt<T: ToString>(v: Option<T>) -> String {
    v.map(|v| v.to_string()).unwrap_or_default()
}

fn genotype_header(prefix: &[&str], suffix: &[&str]) -> Vec<String> {
    let mut h = strings(prefix);
    h.extend((0..PARAMS).map(|i| format!("u{i}")));
    h.extend(strings(suffix));
    h
}

fn genotype_cells(g: &Genotype) -> impl Iterator<Item = String> + '_ {
    g.u().iter().map(|v| v.to_string())
}

fn write_image(img: &Image, path: &Path) -> Result<()> {
    if path
        .extension()
        .is_some_and(|e| e.eq_ignore_ascii_case("png"))
    {
        image::GrayImage::from_raw(
            img.width() as u32,
            img.height() as u32,
            img.pixels().to_vec(),
        )
        .context("image buffer size mismatch")?
        .save(path)?;
    } else {
        img.write_pgm(BufWriter::new(File::create(path)?))?;
    }
    Ok(())
}

pub fn run(cli: Cli, out: &mut dyn Write) -> Result<()> {
    let seed = cli.seed;
    let mut store = Store::open(&cli.store)
        .with_context(|| format!("opening store {}", cli.store.display()))?;
    match cli.command {
        Command::Generate(args) => generate(&mut store, args, seed, out),
        Command::Judge { id, rank, category } => {
            let r = store.submit_judgement(id, rank, category.as_deref())?;
            write_records([&r], out)?;
            Ok(())
        }
        Command::Features(FeaturesCommand::Import { path }) => {
            let n = store.import_features(&path)?;
            writeln!(out, "imported {n} feature vectors")?;
            Ok(())
        }
        Command::Features(FeaturesCommand::Extract { out: file }) => {
            let n = store.extract_features()?;
            if let Some(path) = file {
                store.export_features(&path)?;
            }
            writeln!(out, "extracted {n} feature vectors")?;
            Ok(())
        }
        Command::Split { ratio } => split(&mut store, ratio, seed, out),
        Command::Train(args) => train(&mut store, args, seed, out),
        Command::Predict { model, base } => {
            let input = match (base.record, base.genotype) {
                (Some(id), None) => PredictInput::Record(id),
                (None, Some(u)) => PredictInput::Genotype(u),
                _ => bail!("give exactly one of --record and --genotype"),
            };
            let p = store.predict(model, &input, seed)?;
            let labels = store.model(model)?.0.label_names.clone();
            let mut header = strings(&["model_id", "category", "margin", "rank"]);
            header.extend(labels.iter().map(|l| format!("p_{l}")));
            let mut row = vec![
                model.to_string(),
                opt(p.category),
                opt(p.margin),
                opt(p.rank),
            ];
            row.extend(
                p.probabilities
                    .unwrap_or_default()
                    .iter()
                    .map(|v| v.to_string()),
            );
            write_csv(out, &header, [row])
        }
        Command::Embed {
            space,
            method,
            perplexity,
            iterations,
            out: file,
        } => {
            let req = EmbeddingRequest {
                space: space.into(),
                method: match method {
                    MethodArg::Tsne => EmbedMethod::Tsne,
                    MethodArg::Pca => EmbedMethod::Pca,
                },
                perplexity,
                iterations,
                seed,
            };
            let e = store.embedding(&req)?;
            match file {
                Some(path) => {
                    layout_export(&e.layout, &e.rows, BufWriter::new(File::create(path)?))?
                }
                None => layout_export(&e.layout, &e.rows, out)?,
            }
            Ok(())
        }
        Command::Sweep {
            grid,
            tile,
            out: path,
        } => {
            let g = store.grid(&grid.request())?;
            let sheet = sweep_render(&g, seed, tile)?;
            write_image(&sheet, &path)?;
            writeln!(
                out,
                "wrote {}x{} sheet to {}",
                sheet.width(),
                sheet.height(),
                path.display()
            )?;
            Ok(())
        }
        Command::CrossSection { model, grid } => {
            let (cs, labels) = store.cross_section(model, &grid.request())?;
            cross_section_csv(&cs, Some(&labels), out)?;
            Ok(())
        }
        Command::Transitions { model, grid } => {
            let (cs, labels) = store.cross_section(model, &grid.request())?;
            let t = find_transitions(&cs);
            let name = |c: usize| labels.get(c).cloned().unwrap_or_else(|| c.to_string());
            let (i, j) = (cs.grid.dim_i, cs.grid.dim_j);
            let header = strings(&[
                "a_row",
                "a_col",
                "b_row",
                "b_col",
                "category_a",
                "category_b",
                "u_i",
                "u_j",
            ]);
            let rows = t.transitions.iter().map(|tr| {
                vec![
                    tr.a.0.to_string(),
                    tr.a.1.to_string(),
                    tr.b.0.to_string(),
                    tr.b.1.to_string(),
                    name(tr.categories.0),
                    name(tr.categories.1),
                    tr.midpoint.u()[i].to_string(),
                    tr.midpoint.u()[j].to_string(),
                ]
            });
            write_csv(out, &header, rows)
        }
        Command::Sample {
            model,
            n,
            min_rank,
            category,
        } => {
            let (info, m) = store.model(model)?;
            let category = match category {
                Some(c) => Some(
                    info.label_names
                        .iter()
                        .position(|l| *l == c)
                        .with_context(|| format!("model {model} does not predict {c:?}"))?,
                ),
                None => None,
            };
            let samples =
                monte_carlo_sample(m.as_ref(), SampleCriteria { min_rank, category }, n, seed)?;
            if let Some(w) = &samples.warning {
                eprintln!("warning: {w}");
            }
            let rows = samples.candidates.iter().map(|c| {
                let mut row: Vec<String> = genotype_cells(&c.genotype).collect();
                row.push(opt(c.rank));
                row.push(opt(c
                    .category
                    .and_then(|k| info.label_names.get(k).cloned())));
                row
            });
            write_csv(out, &genotype_header(&[], &["rank", "category"]), rows)
        }
        Command::Climb {
            model,
            base,
            iterations,
            sigma,
        } => {
            let start = store.resolve_base(&base.base())?;
            let (_, m) = store.model(model)?;
            let path = hill_climb(m.as_ref(), &start, iterations, sigma, seed)?;
            let rows = path.iter().enumerate().map(|(step, (g, rank))| {
                let mut row = vec![step.to_string()];
                row.extend(genotype_cells(g));
                row.push(rank.to_string());
                row
            });
            write_csv(out, &genotype_header(&["step"], &["rank"]), rows)
        }
        Command::Export { path } => {
            let n = store.export_dataset(&path)?;
            writeln!(out, "exported {n} records to {}", path.display())?;
            Ok(())
        }
        Command::Import { path } => {
            let n = store.import_dataset(&path)?;
            writeln!(out, "imported {n} records")?;
            Ok(())
        }
        Command::Verify => {
            let report = store.verify();
            let header = strings(&["id", "problem"]);
            let rows = report
                .missing
                .iter()
                .map(|id| vec![id.to_string(), "missing".into()])
                .chain(
                    report
                        .mismatched
                        .iter()
                        .map(|id| vec![id.to_string(), "mismatch".into()]),
                );
            write_csv(out, &header, rows)?;
            if !report.is_clean() {
                bail!(
                    "{} of {} images missing, {} mismatched",
                    report.missing.len(),
                    report.checked,
                    report.mismatched.len()
                );
            }
            eprintln!("{} images verified", report.checked);
            Ok(())
        }
        Command::Serve { addr } => {
            let runtime = tokio::runtime::Runtime::new()?;
            runtime.block_on(async {
                let listener = tokio::net::TcpListener::bind(addr)
                    .await
                    .with_context(|| format!("cannot listen on {addr}"))?;
                eprintln!("serving {} on http://{addr}/api", cli.store.display());
                serve(AppState::new(store), listener).await?;
                Ok(())
            })
        }
    }
}

fn generate(store: &mut Store, args: GenerateArgs, seed: u64, out: &mut dyn Write) -> Result<()> {
    let sampler = if !args.genotype.is_empty() {
        Sampler::Exact {
            genotypes: args.genotype.clone(),
        }
    } else {
        match args.sampler {
            SamplerArg::Uniform => Sampler::Uniform,
            SamplerArg::MonteCarlo => Sampler::MonteCarlo {
                model_id: args.model.context("--sampler monte-carlo needs --model")?,
                min_rank: args.min_rank,
                category: args.category.clone(),
            },
            SamplerArg::Around => Sampler::Around {
                id: args
                    .around
                    .context("--sampler around needs --around <ID>")?,
                sigma: args.sigma,
            },
        }
    };
    let n = match &sampler {
        Sampler::Exact { genotypes } => genotypes.len(),
        _ => args.n,
    };
    let report = store.batch_generate(&GenerateRequest { n, sampler, seed })?;
    if let Some(w) = &report.warning {
        eprintln!("warning: {w}");
    }
    let header = strings(&["id", "seed", "category", "rank", "viable"]);
    let rows = report.ids.iter().map(|&id| {
        let r = store.record(id).expect("just added");
        vec![
            id.to_string(),
            r.seed.to_string(),
            opt(r.category.clone()),
            opt(r.rank),
            r.viable.to_string(),
        ]
    });
    write_csv(out, &header, rows)
}

fn split(store: &mut Store, ratio: f64, seed: u64, out: &mut dyn Write) -> Result<()> {
    let s = store.split_dataset(ratio, seed)?;
    for w in &s.warnings {
        eprintln!("warning: {w}");
    }
    let row = vec![s.train.len().to_string(), s.validation.len().to_string()];
    write_csv(out, &strings(&["train", "validation"]), [row])
}

fn train(store: &mut Store, args: TrainArgs, seed: u64, out: &mut dyn Write) -> Result<()> {
    if let Some(ratio) = args.split_ratio {
        store.split_dataset(ratio, seed)?;
    } else if store.split().is_none() {
        eprintln!("no split yet; splitting at {DEFAULT_SPLIT_RATIO} with seed {seed}");
        store.split_dataset(DEFAULT_SPLIT_RATIO, seed)?;
    }
    let defaults = TrainConfig::default();
    let config = TrainConfig {
        epochs: args.epochs.unwrap_or(defaults.epochs),
        batch_size: args.batch_size.unwrap_or(defaults.batch_size),
        learning_rate: args.learning_rate.unwrap_or(defaults.learning_rate),
        patience: args.patience.unwrap_or(defaults.patience),
        seed,
        ..defaults
    };
    let req = TrainRequest {
        space: args.space.into(),
        target: match args.target {
            TargetArg::Category => Target::Category,
            TargetArg::Rank => Target::Rank,
            TargetArg::Both => Target::Both,
        },
        config,
        include_pseudo: args.include_pseudo,
        hidden: args.hidden.map_or(DEFAULT_HIDDEN, |(a, b)| [a, b]),
        knn_k: args.knn_k,
    };
    let info = store.train_job(&req)?;
    let header = strings(&[
        "model_id",
        "train_rows",
        "validation_rows",
        "epochs_run",
        "accuracy",
        "rank_rmse",
        "knn_accuracy",
        "knn_rank_rmse",
    ]);
    let row = vec![
        info.id.to_string(),
        info.train_rows.to_string(),
        info.validation_rows.to_string(),
        info.epochs_run.to_string(),
        opt(info.metrics.accuracy),
        opt(info.metrics.rank_rmse),
        opt(info.knn_metrics.accuracy),
        opt(info.knn_metrics.rank_rmse),
    ];
    write_csv(out, &header, [row])
}
