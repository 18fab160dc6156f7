use std::io::{BufRead, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use termrel::annotation::{build_label_matrix, load_hierarchy_config, load_labels, DomainHierarchy};
use termrel::data::{
    generate_synthetic_dataset, load_category_tree, load_term_records, SyntheticSpec,
};
use termrel::error::{Error, Result};
use termrel::eval::{parse_bands, rank_report, train_baseline, write_ranking, BaselineKind, MetricReport};
use termrel::graph::CoreFringeGraph;
use termrel::index::CoreIndex;
use termrel::model::{load_checkpoint, save_checkpoint, ModelKind, Supervision, TrainConfig};
use termrel::pipeline::{auc_pair, load_inputs, prepare, restore, Mode, RunConfig, Setup};

const INDEX_FILE: &str = "index.bin";
const GRAPH_FILE: &str = "graph.tsv";
const LABELS_FILE: &str = "labels.tsv";
const CHECKPOINT_FILE: &str = "model.ckpt";

#[derive(Parser)]
#[command(name = "termrel", version, about = "Fine-grained domain relevance of terms")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a planted synthetic dataset.
    Synth {
        /// `key=value` spec file; defaults are used when omitted.
        #[arg(long)]
        spec: Option<PathBuf>,
        #[arg(long, default_value_t = 7)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
    },
    /// Build the BM25 index over core descriptions.
    Index {
        #[arg(long)]
        terms: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Link every term to its retrieved core terms.
    Graph {
        #[arg(long)]
        terms: PathBuf,
        #[arg(long, default_value_t = termrel::graph::DEFAULT_K)]
        k: usize,
        #[arg(long)]
        out: PathBuf,
    },
    /// Label core terms per hierarchy level from the category tree.
    Annotate {
        #[arg(long)]
        terms: PathBuf,
        #[arg(long)]
        tree: PathBuf,
        #[arg(long)]
        hierarchy: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Train a model and write a checkpoint.
    Train(TrainArgs),
    /// Compute metrics for a checkpoint.
    Eval {
        #[arg(long)]
        ckpt: PathBuf,
        #[arg(long)]
        out: PathBuf,
        /// Ground-truth labels (`term-id<TAB>level<TAB>0|1`) for every term.
        #[arg(long)]
        truth: Option<PathBuf>,
        /// Also train and evaluate logistic regression and MLP baselines.
        #[arg(long)]
        baselines: bool,
    },
    /// Score surfaces read from standard input, one per line.
    Score {
        #[arg(long)]
        ckpt: PathBuf,
    },
    /// List all terms by descending score.
    Rank {
        #[arg(long)]
        ckpt: PathBuf,
        /// TSV output; standard output when omitted.
        #[arg(long)]
        out: Option<PathBuf>,
        /// Rank bands such as `1-10,101-110`.
        #[arg(long)]
        bands: Option<String>,
    },
}

#[derive(Args)]
struct TrainArgs {
    #[arg(long)]
    terms: PathBuf,
    #[arg(long)]
    vectors: PathBuf,
    /// Run directory holding the annotate output; the checkpoint goes here.
    #[arg(long)]
    out: PathBuf,
    #[arg(long, default_value = "hicfl")]
    mode: Mode,
    #[arg(long)]
    positives: Option<PathBuf>,
    #[arg(long)]
    ckpt: Option<PathBuf>,
    #[arg(long)]
    k: Option<usize>,
    #[arg(long)]
    alpha: Option<f64>,
    #[arg(long)]
    lr: Option<f64>,
    #[arg(long)]
    epochs: Option<usize>,
    #[arg(long)]
    dropout: Option<f64>,
    #[arg(long)]
    hidden: Option<usize>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Target level for CFL; defaults to the deepest labeled level.
    #[arg(long)]
    level: Option<usize>,
}

fn require(stage: &'static str, path: PathBuf) -> Result<PathBuf> {
    if path.exists() {
        Ok(path)
    } else {
        Err(Error::MissingArtifact { stage, path })
    }
}

fn write_file(path: &Path, content: impl AsRef<[u8]>) -> Result<()> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir).map_err(|e| Error::Io {
            path: dir.to_path_buf(),
            source: e,
        })?;
    }
    std::fs::write(path, content).map_err(|e| Error::Io {
        path: path.to_path_buf(),
        source: e,
    })
}

fn create_dir(dir: &Path) -> Result<()> {
    std::fs::create_dir_all(dir).map_err(|e| Error::Io {
        path: dir.to_path_buf(),
        source: e,
    })
}

fn checkpoint_dir(ckpt: &Path) -> &Path {
    ckpt.parent().filter(|d| !d.as_os_str().is_empty()).unwrap_or(Path::new("."))
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Synth { spec, seed, out } => {
            let spec = match spec {
                Some(p) => SyntheticSpec::load(p)?,
                None => SyntheticSpec::default(),
            };
            let ds = generate_synthetic_dataset(&spec, seed)?;
            ds.write(&out)?;
            println!("wrote {} terms to {}", ds.records.len(), out.display());
        }
        Command::Index { terms, out } => {
            let records = load_term_records(&terms)?;
            let index = CoreIndex::build(&records)?;
            create_dir(&out)?;
            index.save(out.join(INDEX_FILE))?;
            println!("indexed {} core terms", index.doc_count());
        }
        Command::Graph { terms, k, out } => {
            let index = CoreIndex::load(require("index", out.join(INDEX_FILE))?)?;
            let records = load_term_records(&terms)?;
            let graph = CoreFringeGraph::build(&records, &index, k)?;
            graph.write(out.join(GRAPH_FILE))?;
            println!("{} nodes, {} edges", graph.node_count(), graph.edges().len());
        }
        Command::Annotate {
            terms,
            tree,
            hierarchy,
            out,
        } => {
            let records = load_term_records(&terms)?;
            let tree = load_category_tree(&tree)?;
            let config = load_hierarchy_config(&hierarchy)?;
            let hierarchy = DomainHierarchy::resolve(&config, &tree)?;
            let labels = hierarchy.label(&records)?;
            create_dir(&out)?;
            labels.write(out.join(LABELS_FILE))?;
            for (l, level) in hierarchy.levels.iter().enumerate() {
                let pos = labels.labeled_ids().iter().filter(|&&i| labels.get(l, i) == Some(true)).count();
                println!("{}\t{pos} positive of {} core terms", level.name, labels.labeled_ids().len());
            }
        }
        Command::Train(a) => train(a)?,
        Command::Eval {
            ckpt,
            out,
            truth,
            baselines,
        } => eval(&ckpt, &out, truth.as_deref(), baselines)?,
        Command::Score { ckpt } => {
            let checkpoint = load_checkpoint(require("train", ckpt.clone())?)?;
            let mut run = restore(checkpoint, checkpoint_dir(&ckpt))?;
            let stdin = std::io::stdin();
            let mut stdout = std::io::stdout().lock();
            for line in stdin.lock().lines() {
                let line = line.map_err(|e| Error::Io {
                    path: "<stdin>".into(),
                    source: e,
                })?;
                if line.trim().is_empty() {
                    continue;
                }
                let id = run.prepared.attach(&line, &run.loaded.vectors)?;
                let score = run.prepared.score_terms(&run.checkpoint.params, &[id])?[0];
                writeln!(stdout, "{}\t{score}", run.prepared.records[id].surface).map_err(|e| Error::Io {
                    path: "<stdout>".into(),
                    source: e,
                })?;
            }
        }
        Command::Rank { ckpt, out, bands } => {
            let checkpoint = load_checkpoint(require("train", ckpt.clone())?)?;
            let run = restore(checkpoint, checkpoint_dir(&ckpt))?;
            let scores = run.prepared.score_all(&run.checkpoint.params)?;
            let bands = bands.as_deref().map(parse_bands).transpose()?.unwrap_or_default();
            let ranked = rank_report(scores.as_slice().expect("contiguous"), &run.prepared.records, &bands)?;
            match out {
                Some(p) => write_ranking(p, &ranked)?,
                None => print!("{}", termrel::eval::format_ranking(&ranked)),
            }
        }
    }
    Ok(())
}

fn train(a: TrainArgs) -> Result<()> {
    let labels = require("annotate", a.out.join(LABELS_FILE))?;
    let defaults = TrainConfig::default();
    let setup = Setup {
        mode: a.mode,
        k: a.k.unwrap_or(termrel::graph::DEFAULT_K),
        train: TrainConfig {
            learning_rate: a.lr.unwrap_or(defaults.learning_rate),
            epochs: a.epochs.unwrap_or(defaults.epochs),
            dropout: a.dropout.unwrap_or(defaults.dropout),
            hidden: a.hidden.unwrap_or(defaults.hidden),
            alpha: a.alpha.unwrap_or(defaults.alpha),
            seed: a.seed,
            ..defaults
        },
        level: a.level,
        holdout: a.mode != Mode::Pu,
        ..Setup::default()
    };
    let config = RunConfig {
        terms: a.terms,
        vectors: a.vectors,
        labels,
        positives: a.positives,
        setup,
    };
    let loaded = load_inputs(&config)?;
    let prepared = prepare(
        &loaded.records,
        &loaded.vectors,
        &loaded.labels,
        &loaded.positives,
        &config.setup,
    )?;
    let (params, log) = prepared.train()?;
    let ckpt = a.ckpt.unwrap_or_else(|| a.out.join(CHECKPOINT_FILE));
    let checkpoint = prepared.checkpoint(params, &config, checkpoint_dir(&ckpt))?;
    save_checkpoint(&ckpt, &checkpoint)?;
    write_file(&a.out.join("train_log.jsonl"), log.to_lines())?;
    println!(
        "trained {} epochs (kept epoch {}), checkpoint {}",
        log.epochs.len(),
        log.best_epoch,
        ckpt.display()
    );
    Ok(())
}

fn eval(ckpt: &Path, out: &Path, truth: Option<&Path>, baselines: bool) -> Result<()> {
    let checkpoint = load_checkpoint(require("train", ckpt.to_path_buf())?)?;
    let run = restore(checkpoint, checkpoint_dir(ckpt))?;
    let p = &run.prepared;
    let params = &run.checkpoint.params;
    let scores = p.score_all(params)?;
    let scores = scores.as_slice().expect("contiguous");
    let mut report = MetricReport::default();
    report.insert("terms", p.records.len() as f64);
    report.insert("edges", p.graph.edges().len() as f64);

    let test = p.test_set();
    let add = |report: &mut MetricReport, prefix: &str, s: &[f64], set: &[(usize, bool)]| -> Result<()> {
        if set.iter().any(|v| v.1) && set.iter().any(|v| !v.1) {
            let (roc, pr) = auc_pair(s, set)?;
            report.insert(format!("{prefix}.roc_auc"), roc);
            report.insert(format!("{prefix}.pr_auc"), pr);
        }
        Ok(())
    };
    add(&mut report, "test", scores, &test)?;
    add(&mut report, "validation", scores, &p.validation)?;

    let given: Vec<usize> = p.pu.as_ref().map(|pu| pu.positives.iter().copied().collect()).unwrap_or_default();
    if let Some(truth) = truth {
        let raw = load_labels(truth, p.records.len())?;
        let levels = raw.len();
        let truth = build_label_matrix(raw, levels)?;
        if p.target_level < truth.levels() {
            let ids: Vec<usize> = if p.pu.is_some() {
                (0..p.records.len()).filter(|i| !given.contains(i)).collect()
            } else {
                p.held_out_ids()
            };
            let set: Vec<(usize, bool)> = ids
                .iter()
                .filter_map(|&i| truth.get(p.target_level, i).map(|y| (i, y)))
                .collect();
            add(&mut report, "heldout", scores, &set)?;
        } else {
            log::warn!("truth file has no level {}", p.target_level);
        }
    }

    if baselines {
        let target = Supervision {
            targets: vec![p.supervision.target_level().to_vec()],
        };
        for kind in [BaselineKind::LogisticRegression, BaselineKind::Mlp] {
            let b = train_baseline(kind, &p.setup.train, p.features.values.view(), &target, &p.validation)?;
            let s = b.scores.as_slice().expect("contiguous");
            add(&mut report, &format!("{}.test", kind.name()), s, &test)?;
        }
    }
    if let ModelKind::HiCfl { levels } = params.kind {
        report.insert("levels", levels as f64);
    }
    report.write(out, "metrics")?;
    print!("{}", report.to_key_values());
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::new().filter_or("TERMREL_LOG", "warn")).init();
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            match e {
                Error::MissingArtifact { .. } => ExitCode::from(2),
                _ => ExitCode::FAILURE,
            }
        }
    }
}
