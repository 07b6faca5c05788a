use std::io::Write;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context};
use clap::{Args, Parser, Subcommand, ValueEnum};

use loshot_core::analysis::analyze;
use loshot_core::classifiers::{coordinate_distance, fit_prototypes_with, manifold_distribution, FitOptions};
use loshot_core::predictor::{examples, loo_cv_over_slps, train_forest, DEFAULT_TREES};
use loshot_core::simulation::{simulate_population, PolicyKind, ResponsePolicy, DEFAULT_N_PER_SLP};
use loshot_core::stimulus::{figure_svg, FEATURE_NAMES};
use loshot_core::{Dataset, ExportFormat, ModelKind, SlpCatalog, StimulusConfig};

use crate::service::{self, ServiceConfig};

#[derive(Debug, Parser)]
#[command(name = "loshot", version, about = "Soft-label categorization experiments")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Args)]
pub struct ConfigArg {
    /// Stimulus configuration (TOML). Defaults to the built-in manifolds.
    #[arg(long)]
    pub config: Option<PathBuf>,
}

impl ConfigArg {
    fn load(&self) -> anyhow::Result<StimulusConfig> {
        match &self.config {
            None => Ok(StimulusConfig::builtin()),
            Some(p) => {
                let text = std::fs::read_to_string(p).with_context(|| format!("reading {}", p.display()))?;
                Ok(StimulusConfig::from_toml_str(&text)?)
            }
        }
    }
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum Model {
    Proto,
    #[value(name = "1nn")]
    OneNn,
    #[value(name = "2nn")]
    TwoNn,
}

impl From<Model> for ModelKind {
    fn from(m: Model) -> Self {
        match m {
            Model::Proto => ModelKind::Prototype,
            Model::OneNn => ModelKind::Exemplar1NN,
            Model::TwoNn => ModelKind::Exemplar2NN,
        }
    }
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum Format {
    Csv,
    Jsonl,
}

impl From<Format> for ExportFormat {
    fn from(f: Format) -> Self {
        match f {
            Format::Csv => ExportFormat::Csv,
            Format::Jsonl => ExportFormat::Jsonl,
        }
    }
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Write manifold coordinates (CSV) and one SVG per stimulus.
    GenStimuli {
        #[command(flatten)]
        config: ConfigArg,
        #[arg(long)]
        out: PathBuf,
    },
    /// Print a model's predicted distribution at every manifold position.
    ModelDist {
        #[arg(long, value_enum)]
        model: Model,
        #[arg(long)]
        slp: u32,
        #[arg(long, default_value_t = 0.25)]
        d1: f64,
        #[arg(long, default_value_t = 0.75)]
        d2: f64,
        #[command(flatten)]
        config: ConfigArg,
    },
    /// Fit the three class prototypes for one condition.
    FitPrototypes {
        #[arg(long)]
        slp: u32,
        #[arg(long, default_value_t = 0.25)]
        d1: f64,
        #[arg(long, default_value_t = 0.75)]
        d2: f64,
    },
    /// Run the full statistical analysis on a dataset file.
    Analyze {
        #[arg(long)]
        data: PathBuf,
        /// Also write report.json and heatmap CSVs here.
        #[arg(long)]
        out_dir: Option<PathBuf>,
        #[arg(long)]
        json: bool,
        #[command(flatten)]
        config: ConfigArg,
    },
    /// Generate a synthetic participant population.
    Simulate {
        #[arg(long, default_value = "sample")]
        policy: PolicyKind,
        #[arg(long, default_value_t = 0.0)]
        lapse: f64,
        #[arg(long, value_enum, default_value = "proto")]
        model: Model,
        #[arg(long, default_value_t = DEFAULT_N_PER_SLP)]
        n_per_slp: usize,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        out: PathBuf,
        #[arg(long, value_enum, default_value = "jsonl")]
        format: Format,
        #[command(flatten)]
        config: ConfigArg,
    },
    /// Train a forest on a whole dataset and save it as JSON.
    RfTrain {
        #[arg(long)]
        data: PathBuf,
        #[arg(long, default_value_t = DEFAULT_TREES)]
        trees: usize,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Leave-one-SLP-out cross-validation of the forest.
    RfCv {
        #[arg(long)]
        data: PathBuf,
        #[arg(long, default_value_t = DEFAULT_TREES)]
        trees: usize,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Run the experiment HTTP service.
    Serve {
        #[arg(long, default_value_t = 8080)]
        port: u16,
        #[arg(long)]
        data_dir: PathBuf,
        /// Fixed seed for session ids and condition draws.
        #[arg(long)]
        seed: Option<u64>,
        /// Serve files from this directory for unmatched paths.
        #[arg(long)]
        static_dir: Option<PathBuf>,
        #[command(flatten)]
        config: ConfigArg,
    },
}

fn seed_or_draw(seed: Option<u64>) -> u64 {
    seed.unwrap_or_else(|| {
        let s = rand::random::<u64>();
        eprintln!("seed: {s}");
        s
    })
}

fn read_dataset(path: &Path) -> anyhow::Result<Dataset> {
    let bytes = std::fs::read(path).with_context(|| format!("reading {}", path.display()))?;
    Dataset::load(&bytes).with_context(|| format!("parsing {}", path.display()))
}

fn write(path: &Path, bytes: impl AsRef<[u8]>) -> anyhow::Result<()> {
    std::fs::write(path, bytes).with_context(|| format!("writing {}", path.display()))
}

pub fn run(cli: Cli, out: &mut dyn Write) -> anyhow::Result<()> {
    let catalog = SlpCatalog::builtin();
    match cli.command {
        Command::GenStimuli { config, out: dir } => {
            let cfg = config.load()?;
            std::fs::create_dir_all(&dir)?;
            for (k, m) in cfg.manifolds.iter().enumerate() {
                let id = k + 1;
                let sub = dir.join(format!("manifold{id}"));
                std::fs::create_dir_all(&sub)?;
                let mut csv = format!("index,t,{}\n", FEATURE_NAMES.join(","));
                for (i, (t, p)) in m.positions().iter().zip(m.points()).enumerate() {
                    let vals: Vec<String> = p.values().iter().map(|v| v.to_string()).collect();
                    csv.push_str(&format!("{i},{t},{}\n", vals.join(",")));
                    write(&sub.join(format!("point{i:02}.svg")), figure_svg(p, &cfg.schema)?)?;
                }
                write(&dir.join(format!("manifold{id}.csv")), csv)?;
                for (name, t) in ["d1", "d2"].iter().zip(cfg.labeled_positions) {
                    write(
                        &sub.join(format!("{name}.svg")),
                        figure_svg(&m.point_at(t)?, &cfg.schema)?,
                    )?;
                }
            }
            writeln!(
                out,
                "wrote {} manifolds to {}",
                cfg.manifolds.len(),
                dir.display()
            )?;
        }
        Command::ModelDist {
            model,
            slp,
            d1,
            d2,
            config,
        } => {
            let cfg = config.load()?;
            let pair = catalog.get(slp)?;
            let rows = manifold_distribution(model.into(), pair, d1, d2, &cfg.manifolds[0])?;
            writeln!(out, "index,t,p1,p2,p3")?;
            for (i, (t, r)) in cfg.manifolds[0].positions().iter().zip(&rows).enumerate() {
                let p = r.probs();
                writeln!(out, "{i},{t},{},{},{}", p[0], p[1], p[2])?;
            }
        }
        Command::FitPrototypes { slp, d1, d2 } => {
            let pair = catalog.get(slp)?;
            let fit = fit_prototypes_with(pair, d1, d2, coordinate_distance, &FitOptions::default())?;
            let p = fit.prototypes.positions();
            writeln!(out, "slp: {slp}")?;
            writeln!(out, "prototype1: {:.4}", p[0])?;
            writeln!(out, "prototype2: {:.4}", p[1])?;
            writeln!(out, "prototype3: {:.4}", p[2])?;
            writeln!(out, "objective: {:.6e}", fit.objective)?;
        }
        Command::Analyze {
            data,
            out_dir,
            json,
            config,
        } => {
            let cfg = config.load()?;
            let ds = read_dataset(&data)?;
            let report = analyze(&ds, &catalog, &cfg)?;
            if json {
                writeln!(out, "{}", report.to_json())?;
            } else {
                write!(out, "{}", report.to_text())?;
            }
            if let Some(dir) = out_dir {
                std::fs::create_dir_all(&dir)?;
                write(&dir.join("report.json"), report.to_json())?;
                write(&dir.join("report.txt"), report.to_text())?;
                write(&dir.join("slp_similarity.csv"), report.slp_similarity_csv())?;
                if let Some(csv) = report.bsa_matrix_csv() {
                    write(&dir.join("bsa_matrix.csv"), csv)?;
                }
                if let Some(csv) = report.participant_similarity_csv() {
                    write(&dir.join("participant_similarity.csv"), csv)?;
                }
            }
        }
        Command::Simulate {
            policy,
            lapse,
            model,
            n_per_slp,
            seed,
            out: path,
            format,
            config,
        } => {
            let cfg = config.load()?;
            let seed = seed_or_draw(seed);
            let policy = ResponsePolicy::new(policy, lapse, model.into())?;
            let ds = simulate_population(&catalog, &cfg, n_per_slp, &policy, seed)?;
            write(&path, ds.export(format.into()))?;
            writeln!(
                out,
                "wrote {} sessions, {} trials to {}",
                ds.sessions().len(),
                ds.records().len(),
                path.display()
            )?;
        }
        Command::RfTrain {
            data,
            trees,
            seed,
            out: path,
        } => {
            let seed = seed_or_draw(seed);
            let ds = read_dataset(&data)?;
            let ex = examples(&ds, &catalog)?;
            let forest = train_forest(&ex, trees, seed)?;
            write(&path, forest.to_json())?;
            writeln!(
                out,
                "trained {trees} trees on {} trials, training accuracy {:.4}",
                ex.len(),
                forest.accuracy(&ex)
            )?;
        }
        Command::RfCv {
            data,
            trees,
            seed,
            out: path,
        } => {
            let seed = seed_or_draw(seed);
            let ds = read_dataset(&data)?;
            let report = loo_cv_over_slps(&ds, &catalog, trees, seed)?;
            for id in &report.skipped_slp_ids {
                eprintln!("note: SLP {id} has no trials; fold skipped");
            }
            let json = report.to_json();
            match path {
                Some(p) => write(&p, &json)?,
                None => writeln!(out, "{json}")?,
            }
        }
        Command::Serve {
            port,
            data_dir,
            seed,
            static_dir,
            config,
        } => {
            let stimuli = config.load()?;
            if stimuli.manifolds.iter().any(|m| m.n_points() != 20) {
                bail!("sessions need 20 points per manifold");
            }
            let rt = tokio::runtime::Runtime::new()?;
            rt.block_on(service::serve(
                ServiceConfig {
                    stimuli,
                    catalog,
                    data_dir,
                    seed,
                    static_dir,
                },
                port,
            ))?;
        }
    }
    Ok(())
}
