//! `torgnn` command-line interface: torsion inspection, weight precompute,
//! single training runs, the repeat-and-average evaluation protocol, and
//! embedding export.

use std::path::{Path, PathBuf};
use std::time::Instant;

use clap::{Args, Parser, Subcommand};

use torgnn::complex::{clique_expand, local_complex};
use torgnn::datasets::{build_link_split, build_node_split, load_features, load_labels, LinkSample};
use torgnn::experiment::{export_embeddings, run_experiment, ExperimentConfig};
use torgnn::graph::{load_edge_list, Graph, LoadedGraph};
use torgnn::metrics::{accuracy, auc, aupr};
use torgnn::nn::{
    load_model, predict_link_scores, predict_node_classes, save_model, train_link, train_node,
    History, TrainConfig,
};
use torgnn::spectral::{betti_numbers, dump_complex, log_analytic_torsion};
use torgnn::weights::{precompute_weights, save_table};
use torgnn::{Error, Result};

#[derive(Parser)]
#[command(
    name = "torgnn",
    version,
    about = "Analytic torsion of local simplicial complexes as edge weights for message-passing GNNs"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

/// Arguments naming the input graph.
#[derive(Args)]
struct GraphArgs {
    /// Edge list file: one `u v` pair per line (`#` comments allowed)
    #[arg(long, value_name = "FILE")]
    edge_list: PathBuf,
    /// Per-vertex feature rows (whitespace-separated); omitted means a
    /// trainable embedding is used instead
    #[arg(long, value_name = "FILE")]
    features: Option<PathBuf>,
}

/// Arguments selecting the local complex construction.
#[derive(Args)]
struct ComplexArgs {
    /// Neighborhood radius around each edge's endpoints
    #[arg(long, default_value_t = 1)]
    l_sub: u32,
    /// Maximum simplex order of the clique expansion
    #[arg(long, default_value_t = 1)]
    n: usize,
}

/// Arguments shared by the two training subcommands.
#[derive(Args)]
struct TrainArgs {
    /// Learning rate (default: 5e-4 for links, 0.02 for nodes)
    #[arg(long)]
    lr: Option<f64>,
    /// Training epochs (default: 20 for links, 200 for nodes)
    #[arg(long)]
    epochs: Option<usize>,
    /// Minibatch size (the node task always trains full-batch)
    #[arg(long, default_value_t = 128)]
    batch: usize,
    /// Hidden width of the message-passing layers and heads
    #[arg(long, default_value_t = 64)]
    hidden: usize,
    /// Seed for the split, initialization and batch order
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Write the trained model checkpoint here
    #[arg(long, value_name = "FILE")]
    save_model: Option<PathBuf>,
}

#[derive(Subcommand)]
enum Command {
    /// Log analytic torsion of a graph's clique complex or of one local
    /// complex around a vertex pair
    Torsion {
        /// Edge list file describing the complex's 1-skeleton
        #[arg(long, value_name = "FILE")]
        edge_list: PathBuf,
        /// Maximum simplex order of the clique expansion
        #[arg(long, default_value_t = 1)]
        n: usize,
        /// Build the local complex around this vertex (file ID) and --y
        #[arg(long, requires = "y")]
        x: Option<u64>,
        /// Second endpoint of the local complex (file ID)
        #[arg(long, requires = "x")]
        y: Option<u64>,
        /// Neighborhood radius for the local complex
        #[arg(long, default_value_t = 1)]
        l_sub: u32,
        /// Also print boundary matrices, Laplacians and spectra
        #[arg(long)]
        dump: bool,
    },
    /// Precompute every torsion weight of a graph and write a cache file
    Weights {
        /// Edge list file
        #[arg(long, value_name = "FILE")]
        edge_list: PathBuf,
        #[command(flatten)]
        complex: ComplexArgs,
        /// Output cache file
        #[arg(long, value_name = "FILE")]
        out: PathBuf,
        /// Also write a human-readable text export here
        #[arg(long, value_name = "FILE")]
        text: Option<PathBuf>,
    },
    /// Train one link-prediction model and report test AUC / AUPR
    TrainLink {
        #[command(flatten)]
        graph: GraphArgs,
        #[command(flatten)]
        complex: ComplexArgs,
        #[command(flatten)]
        train: TrainArgs,
    },
    /// Train one node-classification model and report test accuracy
    TrainNode {
        #[command(flatten)]
        graph: GraphArgs,
        /// Per-vertex integer labels, one per line
        #[arg(long, value_name = "FILE")]
        labels: PathBuf,
        #[command(flatten)]
        complex: ComplexArgs,
        #[command(flatten)]
        train: TrainArgs,
    },
    /// Run the full repeat-and-average experiment from a config file
    Eval {
        /// Flat `key = value` experiment config
        #[arg(long, value_name = "FILE")]
        config: PathBuf,
        /// Override the report output path from the config
        #[arg(long, value_name = "FILE")]
        out: Option<PathBuf>,
    },
    /// Write a trained model's final node representations as text
    ExportEmbeddings {
        #[command(flatten)]
        graph: GraphArgs,
        #[command(flatten)]
        complex: ComplexArgs,
        /// Trained model checkpoint
        #[arg(long, value_name = "FILE")]
        model: PathBuf,
        /// Output text file: one `id v_1 … v_h` line per vertex
        #[arg(long, value_name = "FILE")]
        out: PathBuf,
    },
}

fn main() {
    let cli = Cli::parse();
    if let Err(e) = run(cli.command) {
        eprintln!("error: {e}");
        std::process::exit(e.exit_code());
    }
}

fn run(command: Command) -> Result<()> {
    match command {
        Command::Torsion {
            edge_list,
            n,
            x,
            y,
            l_sub,
            dump,
        } => cmd_torsion(&edge_list, n, x, y, l_sub, dump),
        Command::Weights {
            edge_list,
            complex,
            out,
            text,
        } => cmd_weights(&edge_list, &complex, &out, text.as_deref()),
        Command::TrainLink {
            graph,
            complex,
            train,
        } => cmd_train_link(&graph, &complex, &train),
        Command::TrainNode {
            graph,
            labels,
            complex,
            train,
        } => cmd_train_node(&graph, &labels, &complex, &train),
        Command::Eval { config, out } => cmd_eval(&config, out),
        Command::ExportEmbeddings {
            graph,
            complex,
            model,
            out,
        } => cmd_export_embeddings(&graph, &complex, &model, &out),
    }
}

/// Maps a vertex ID as written in the edge-list file to its dense index.
fn resolve_vertex(original_ids: &[u64], id: u64) -> Result<u32> {
    original_ids
        .binary_search(&id)
        .map(|i| i as u32)
        .map_err(|_| Error::Graph(format!("vertex {id} does not appear in the edge list")))
}

fn cmd_torsion(
    edge_list: &Path,
    n: usize,
    x: Option<u64>,
    y: Option<u64>,
    l_sub: u32,
    dump: bool,
) -> Result<()> {
    let LoadedGraph {
        graph,
        original_ids,
    } = load_edge_list(edge_list)?;
    println!(
        "graph: {} vertices, {} edges",
        graph.num_vertices(),
        graph.num_edges()
    );
    let k = match (x, y) {
        (Some(x), Some(y)) => {
            let xi = resolve_vertex(&original_ids, x)?;
            let yi = resolve_vertex(&original_ids, y)?;
            println!("local complex around ({x}, {y}) at l_sub = {l_sub}, order n = {n}");
            local_complex(&graph, xi, yi, l_sub, n)?
        }
        _ => {
            println!("clique complex of the whole graph at order n = {n}");
            clique_expand(&graph, n)?
        }
    };
    for p in 0..=k.dimension() {
        println!("  {p}-simplices: {}", k.num_simplices(p));
    }
    println!("betti numbers: {:?}", betti_numbers(&k)?);
    let log_t = log_analytic_torsion(&k)?;
    println!("log torsion: {log_t}");
    println!("|log torsion| (edge weight): {}", log_t.abs());
    if dump {
        print!("{}", dump_complex(&k)?);
    }
    Ok(())
}

fn cmd_weights(
    edge_list: &Path,
    complex: &ComplexArgs,
    out: &Path,
    text: Option<&Path>,
) -> Result<()> {
    let start = Instant::now();
    let LoadedGraph { graph, .. } = load_edge_list(edge_list)?;
    println!(
        "graph: {} vertices, {} edges",
        graph.num_vertices(),
        graph.num_edges()
    );
    let table = precompute_weights(&graph, complex.l_sub, complex.n)?;
    save_table(&table, out)?;
    println!(
        "computed {} edge weights and {} self weights (l_sub = {}, n = {}) in {:.2} s",
        table.edge_weights().len(),
        table.self_weights().len(),
        complex.l_sub,
        complex.n,
        start.elapsed().as_secs_f64()
    );
    println!("cache written to {}", out.display());
    if let Some(path) = text {
        std::fs::write(path, table.export_text()).map_err(|e| Error::io(path, e))?;
        println!("text export written to {}", path.display());
    }
    Ok(())
}

/// Loads a graph and attaches features when a file is given.
fn load_graph_args(args: &GraphArgs) -> Result<Graph> {
    let LoadedGraph { graph, .. } = load_edge_list(&args.edge_list)?;
    match &args.features {
        Some(path) => {
            let f = load_features(path, graph.num_vertices())?;
            graph.with_features(f)
        }
        None => Ok(graph),
    }
}

/// Prints roughly ten evenly spaced epochs of a training history.
fn print_history(history: &History, metric_name: &str) {
    let epochs = history.train_loss.len();
    if epochs == 0 {
        println!("no training epochs requested");
        return;
    }
    let stride = (epochs / 10).max(1);
    for e in (0..epochs).step_by(stride) {
        println!(
            "epoch {:>4}: loss {:.5}  val {metric_name} {:.4}",
            e + 1,
            history.train_loss[e],
            history.val_metric[e]
        );
    }
    if epochs % stride != 0 {
        println!(
            "epoch {:>4}: loss {:.5}  val {metric_name} {:.4}",
            epochs,
            history.train_loss[epochs - 1],
            history.val_metric[epochs - 1]
        );
    }
    match history.best_epoch {
        Some(best) => println!(
            "best epoch {} (val {metric_name} {:.4})",
            best + 1,
            history.val_metric[best]
        ),
        None => println!("no epoch produced a usable validation metric; kept final parameters"),
    }
}

fn link_pairs(samples: &[LinkSample]) -> (Vec<(u32, u32)>, Vec<bool>) {
    (
        samples.iter().map(|s| (s.x, s.y)).collect(),
        samples.iter().map(|s| s.label).collect(),
    )
}

fn cmd_train_link(graph: &GraphArgs, complex: &ComplexArgs, train: &TrainArgs) -> Result<()> {
    let start = Instant::now();
    let g = load_graph_args(graph)?;
    let split = build_link_split(&g, train.seed)?;
    println!(
        "split: {} train / {} val / {} test samples; observed graph keeps {} of {} edges",
        split.train.len(),
        split.val.len(),
        split.test.len(),
        split.observed_graph.num_edges(),
        g.num_edges()
    );
    let table = precompute_weights(&split.observed_graph, complex.l_sub, complex.n)?;
    println!(
        "weights ready (l_sub = {}, n = {}) after {:.2} s",
        complex.l_sub,
        complex.n,
        start.elapsed().as_secs_f64()
    );
    let cfg = TrainConfig {
        lr: train.lr.unwrap_or(5e-4),
        epochs: train.epochs.unwrap_or(20),
        batch: train.batch,
        hidden: train.hidden,
        seed: train.seed,
    };
    let (params, history) = train_link(&split, &table, &cfg)?;
    print_history(&history, "auc");

    let (pairs, labels) = link_pairs(&split.test);
    let scores = predict_link_scores(&params, &split.observed_graph, &table, &pairs)?;
    println!("test auc  {:.4}", auc(&scores, &labels)?);
    println!("test aupr {:.4}", aupr(&scores, &labels)?);
    println!("runtime: {:.1} s", start.elapsed().as_secs_f64());
    if let Some(path) = &train.save_model {
        save_model(&params, path)?;
        println!("model saved to {}", path.display());
    }
    Ok(())
}

fn cmd_train_node(
    graph: &GraphArgs,
    labels: &Path,
    complex: &ComplexArgs,
    train: &TrainArgs,
) -> Result<()> {
    let start = Instant::now();
    let g = load_graph_args(graph)?;
    let labels = load_labels(labels, g.num_vertices(), None)?;
    let g = g.with_labels(labels)?;
    let split = build_node_split(&g, train.seed)?;
    println!(
        "split: {} train / {} val / {} test vertices, {} classes",
        split.train.len(),
        split.val.len(),
        split.test.len(),
        split.num_classes
    );
    let table = precompute_weights(&g, complex.l_sub, complex.n)?;
    println!(
        "weights ready (l_sub = {}, n = {}) after {:.2} s",
        complex.l_sub,
        complex.n,
        start.elapsed().as_secs_f64()
    );
    let cfg = TrainConfig {
        lr: train.lr.unwrap_or(2e-2),
        epochs: train.epochs.unwrap_or(200),
        batch: train.batch,
        hidden: train.hidden,
        seed: train.seed,
    };
    let (params, history) = train_node(&g, &table, &split, &cfg)?;
    print_history(&history, "accuracy");

    let predicted = predict_node_classes(&params, &g, &table)?;
    let on_test: Vec<usize> = split.test.iter().map(|&v| predicted[v as usize]).collect();
    let expected: Vec<usize> = split.test.iter().map(|&v| split.labels[v as usize]).collect();
    println!("test accuracy {:.4}", accuracy(&on_test, &expected)?);
    println!("runtime: {:.1} s", start.elapsed().as_secs_f64());
    if let Some(path) = &train.save_model {
        save_model(&params, path)?;
        println!("model saved to {}", path.display());
    }
    Ok(())
}

fn cmd_eval(config: &Path, out: Option<PathBuf>) -> Result<()> {
    let mut cfg = ExperimentConfig::load(config)?;
    if out.is_some() {
        cfg.out = out;
    }
    let report = run_experiment(&cfg)?;
    println!("{}", report.summary());
    if let Some(path) = &cfg.out {
        println!("report written to {}", path.display());
    }
    Ok(())
}

fn cmd_export_embeddings(
    graph: &GraphArgs,
    complex: &ComplexArgs,
    model: &Path,
    out: &Path,
) -> Result<()> {
    let LoadedGraph {
        graph: g,
        original_ids,
    } = load_edge_list(&graph.edge_list)?;
    let g = match &graph.features {
        Some(path) => {
            let f = load_features(path, g.num_vertices())?;
            g.with_features(f)?
        }
        None => g,
    };
    let params = load_model(model)?;
    let table = precompute_weights(&g, complex.l_sub, complex.n)?;
    let text = export_embeddings(&params, &g, &table, Some(&original_ids))?;
    std::fs::write(out, &text).map_err(|e| Error::io(out, e))?;
    let width = params.layers.last().map_or(0, torgnn::dense::Mat::cols);
    println!(
        "wrote {} embeddings of width {} to {}",
        g.num_vertices(),
        width,
        out.display()
    );
    Ok(())
}
