use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::sync::Arc;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::de::DeserializeOwned;

use gefs::bench::config::{DatasetSpec, ExperimentConfig, LeafKind};
use gefs::bench::consistency::{run_consistency_experiment, ConsistencyConfig};
use gefs::bench::counterexample::{run_knn_counterexample, CounterexampleConfig};
use gefs::bench::metrics::emit_histograms;
use gefs::bench::missing::run_missing_benchmark;
use gefs::bench::model::{load_model, save_model, SavedModel};
use gefs::bench::outlier::{run_outlier_experiment, OutlierConfig};
use gefs::bench::synthetic::GaussianClasses;
use gefs::convert::{rf_to_gef, CombineMode};
use gefs::data::{inject_mcar, load_csv, standardize, Dataset, Schema};
use gefs::forest::{learn_forest, ForestParams, TreeParams};
use gefs::inference::predict;
use gefs::{Error, Result};

#[derive(Parser)]
#[command(name = "gefs", version, about = "Random forests as probabilistic circuits")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum Leaf {
    Factorized,
    Uniform,
    Learnspn,
}

impl From<Leaf> for LeafKind {
    fn from(l: Leaf) -> Self {
        match l {
            Leaf::Factorized => LeafKind::Factorized,
            Leaf::Uniform => LeafKind::Uniform,
            Leaf::Learnspn => LeafKind::Learnspn,
        }
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum Mode {
    Gef,
    Gefplus,
}

impl From<Mode> for CombineMode {
    fn from(m: Mode) -> Self {
        match m {
            Mode::Gef => CombineMode::AverageConditionals,
            Mode::Gefplus => CombineMode::UniformMixture,
        }
    }
}

#[derive(Args)]
struct DataArgs {
    /// CSV file with a header row
    #[arg(long)]
    data: Option<PathBuf>,
    /// Schema TOML; defaults to `<data stem>.schema.toml` next to the data
    #[arg(long)]
    schema: Option<PathBuf>,
}

impl DataArgs {
    fn schema_path(&self) -> Option<PathBuf> {
        self.schema.clone().or_else(|| {
            let d = self.data.as_ref()?;
            Some(d.with_file_name(format!("{}.schema.toml", d.file_stem()?.to_string_lossy())))
        })
    }

    fn load(&self) -> Result<Option<Dataset>> {
        let Some(data) = &self.data else { return Ok(None) };
        let schema = self.schema_path().expect("data given");
        Ok(Some(load_csv(data, Arc::new(Schema::load(&schema)?))?))
    }

    fn require(&self) -> Result<Dataset> {
        self.load()?.ok_or_else(|| Error::Config("--data is required".into()))
    }
}

#[derive(Subcommand)]
enum Command {
    /// Train a forest (and convert it) on a labelled CSV
    Train {
        #[command(flatten)]
        data: DataArgs,
        #[arg(long, default_value_t = 100)]
        trees: usize,
        #[arg(long, default_value_t = 1)]
        min_samples: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, value_enum, default_value = "factorized")]
        leaf: Leaf,
        #[arg(long, value_enum, default_value = "gef")]
        mode: Mode,
        /// Keep only the forest
        #[arg(long)]
        no_convert: bool,
        #[arg(long)]
        out: PathBuf,
    },
    /// Convert a saved forest, given the data it was trained on
    Convert {
        #[arg(long)]
        model: PathBuf,
        #[arg(long)]
        data: PathBuf,
        #[arg(long, value_enum, default_value = "factorized")]
        leaf: Leaf,
        #[arg(long, value_enum, default_value = "gef")]
        mode: Mode,
        #[arg(long)]
        out: PathBuf,
    },
    /// Posteriors for every row of a CSV; empty cells are missing
    Predict {
        #[arg(long)]
        model: PathBuf,
        #[arg(long)]
        data: PathBuf,
        /// Mask cells completely at random before predicting
        #[arg(long, default_value_t = 0.0)]
        rate: f64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Override the model's combination mode
        #[arg(long, value_enum)]
        mode: Option<Mode>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Accuracy under MCAR missingness, with baselines
    BenchMissing {
        #[arg(long)]
        config: Option<PathBuf>,
        #[command(flatten)]
        data: DataArgs,
        #[arg(long)]
        trees: Option<usize>,
        #[arg(long)]
        rate: Option<f64>,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long, value_enum)]
        leaf: Option<Leaf>,
        #[arg(long)]
        folds: Option<usize>,
        #[arg(long)]
        repeats: Option<usize>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// AUC of log p(x) between held-out and shifted rows
    BenchOutlier {
        #[arg(long)]
        config: Option<PathBuf>,
        /// Defaults to a synthetic two-class Gaussian sample
        #[command(flatten)]
        data: DataArgs,
        #[arg(long)]
        trees: Option<usize>,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long, default_value_t = 40)]
        bins: usize,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// l1 distance and per-pattern error against training size
    BenchConsistency {
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Nearest-neighbour imputation against marginalization on the band problem
    BenchKnnCounterexample {
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long)]
        trees: Option<usize>,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

fn load_toml<T: DeserializeOwned + Default>(path: Option<&Path>) -> Result<T> {
    match path {
        None => Ok(T::default()),
        Some(p) => {
            let text = fs::read_to_string(p).map_err(|e| Error::Config(format!("{}: {e}", p.display())))?;
            toml::from_str(&text).map_err(|e| Error::Config(e.to_string()))
        }
    }
}

fn write_out(out: Option<&Path>, name: &str, text: &str) -> Result<()> {
    match out {
        None => {
            print!("{text}");
            Ok(())
        }
        Some(dir) => {
            fs::create_dir_all(dir).map_err(|e| Error::Config(format!("{}: {e}", dir.display())))?;
            let p = dir.join(name);
            fs::write(&p, text).map_err(|e| Error::Config(format!("{}: {e}", p.display())))?;
            log::info!("wrote {}", p.display());
            Ok(())
        }
    }
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Train {
            data,
            trees,
            min_samples,
            seed,
            leaf,
            mode,
            no_convert,
            out,
        } => {
            let raw = data.require()?;
            let (train, _, stats) = standardize(&raw, &[]);
            let params = ForestParams {
                n_trees: trees,
                tree: TreeParams {
                    min_samples,
                    surrogates: true,
                    ..TreeParams::default()
                },
                bootstrap: true,
            };
            let forest = learn_forest(&train, &params, seed)?;
            let gef = if no_convert {
                None
            } else {
                Some(rf_to_gef(&forest, &train, &LeafKind::from(leaf).model_for(&train), mode.into())?)
            };
            save_model(
                &SavedModel {
                    schema: raw.schema().clone(),
                    stats: Some(stats),
                    forest: Some(forest),
                    gef,
                },
                &out,
            )
        }
        Command::Convert {
            model,
            data,
            leaf,
            mode,
            out,
        } => {
            let mut m = load_model(&model)?;
            let raw = load_csv(&data, m.schema.clone())?;
            let train = match &m.stats {
                Some(s) => s.apply(&raw),
                None => raw,
            };
            let forest = m
                .forest
                .as_ref()
                .ok_or_else(|| Error::Config("model file holds no forest".into()))?;
            m.gef = Some(rf_to_gef(forest, &train, &LeafKind::from(leaf).model_for(&train), mode.into())?);
            save_model(&m, &out)
        }
        Command::Predict {
            model,
            data,
            rate,
            seed,
            mode,
            out,
        } => {
            let m = load_model(&model)?;
            let mut gef = m
                .gef
                .clone()
                .ok_or_else(|| Error::Config("model file holds no converted forest".into()))?;
            if let Some(mode) = mode {
                gef = gef.with_mode(mode.into());
            }
            let d = inject_mcar(&load_csv(&data, m.schema.clone())?, rate, seed)?;
            let labels = m.schema.class_labels();
            let mut text = String::from("row\tpredicted");
            for l in labels {
                text.push_str(&format!("\tp_{l}"));
            }
            text.push('\n');
            let mut hits = 0;
            for r in 0..d.n_rows() {
                let mut q = d.instance(r);
                if let Some(s) = &m.stats {
                    q = s.apply_instance(&q);
                }
                let p = predict(&gef, &q);
                hits += usize::from(p.class == d.label(r));
                text.push_str(&format!("{r}\t{}", labels[p.class]));
                for v in &p.probs {
                    text.push_str(&format!("\t{v:.6}"));
                }
                text.push('\n');
            }
            eprintln!("accuracy {:.4}", hits as f64 / d.n_rows() as f64);
            write_out(out.as_deref(), "predictions.tsv", &text)
        }
        Command::BenchMissing {
            config,
            data,
            trees,
            rate,
            seed,
            leaf,
            folds,
            repeats,
            out,
        } => {
            let mut cfg = match (&config, &data.data) {
                (Some(c), _) => ExperimentConfig::load(c)?,
                (None, Some(d)) => ExperimentConfig::new(vec![DatasetSpec {
                    name: None,
                    data: d.clone(),
                    schema: data.schema_path().expect("data given"),
                }]),
                (None, None) => return Err(Error::Config("give --config or --data".into())),
            };
            if let Some(t) = trees {
                cfg.n_trees = t;
            }
            if let Some(r) = rate {
                cfg.rates = vec![r];
            }
            if let Some(s) = seed {
                cfg.seed = s;
            }
            if let Some(l) = leaf {
                cfg.leaf = l.into();
            }
            if let Some(f) = folds {
                cfg.folds = f;
            }
            if let Some(r) = repeats {
                cfg.repeats = r;
            }
            let out = out.or_else(|| cfg.out_dir.clone());
            let report = run_missing_benchmark(&cfg)?;
            if out.is_some() {
                write_out(out.as_deref(), "runs.tsv", &report.runs_tsv())?;
            }
            write_out(out.as_deref(), "summary.tsv", &report.to_tsv())
        }
        Command::BenchOutlier {
            config,
            data,
            trees,
            seed,
            bins,
            out,
        } => {
            let mut cfg: OutlierConfig = load_toml(config.as_deref())?;
            if let Some(t) = trees {
                cfg.n_trees = t;
            }
            if let Some(s) = seed {
                cfg.seed = s;
            }
            let d = match data.load()? {
                Some(d) => d,
                None => GaussianClasses::default().sample(2000, cfg.seed),
            };
            let report = run_outlier_experiment(&d, &cfg)?;
            eprintln!("auc {:.6}", report.auc);
            let mut hist = Vec::new();
            emit_histograms(
                &[("in".into(), report.in_scores), ("out".into(), report.out_scores)],
                bins,
                &mut hist,
            )?;
            write_out(out.as_deref(), "auc.tsv", &format!("auc\n{:.6}\n", report.auc))?;
            write_out(out.as_deref(), "histograms.tsv", &String::from_utf8(hist).expect("utf8"))
        }
        Command::BenchConsistency { config, seed, out } => {
            let mut cfg: ConsistencyConfig = load_toml(config.as_deref())?;
            if let Some(s) = seed {
                cfg.seed = s;
            }
            let report = run_consistency_experiment(&cfg)?;
            write_out(out.as_deref(), "consistency.tsv", &report.to_tsv())
        }
        Command::BenchKnnCounterexample {
            config,
            trees,
            seed,
            out,
        } => {
            let mut cfg: CounterexampleConfig = load_toml(config.as_deref())?;
            if let Some(t) = trees {
                cfg.n_trees = t;
            }
            if let Some(s) = seed {
                cfg.seed = s;
            }
            let report = run_knn_counterexample(&cfg)?;
            eprintln!("k = {}", report.k);
            write_out(out.as_deref(), "knn_counterexample.tsv", &report.to_tsv())
        }
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}
